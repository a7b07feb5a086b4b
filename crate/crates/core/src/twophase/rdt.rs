//! Conservative isentropic two-phase model with pressure and velocity
//! relaxation: variables `(ρ, α₁ρ, α₁ρ₁, ρū, w = u₁ − u₂)`.

use rayon::prelude::*;

use super::{
    primitive_from_conserved, relax_pressure, rusanov, EosSpec, MacroBc, MacroDiagnostics, RelaxationSpec,
    TwoPhaseConserved, TwoPhasePrimitive,
};
use crate::error::{Error, Result};

type Vec5 = [f64; 5];

/// Wave-speed bound `max(|u₁|+a₁, |u₂|+a₂, |ū|+|w|)`.
pub(crate) fn wave_speed(p: &TwoPhasePrimitive, eos: &EosSpec) -> f64 {
    let s1 = p.u_1.abs() + eos.sound_speed(p.rho_1);
    let s2 = p.u_2.abs() + eos.sound_speed(p.rho_2);
    s1.max(s2).max(p.u_mix().abs() + p.w().abs())
}

fn flux(u: &TwoPhaseConserved, p: &TwoPhasePrimitive, eos: &EosSpec) -> Vec5 {
    let u_mix = u.momentum / u.rho;
    let a1 = p.alpha_1;
    let a2 = 1.0 - a1;
    let m1 = u.alpha_rho_1;
    let m2 = u.rho - m1;
    [
        u.momentum,
        u.alpha_rho * u_mix,
        m1 * p.u_1,
        m1 * p.u_1 * p.u_1 + a1 * eos.pressure(p.rho_1) + m2 * p.u_2 * p.u_2 + a2 * eos.pressure(p.rho_2),
        0.5 * p.u_1 * p.u_1 + eos.enthalpy(p.rho_1) - 0.5 * p.u_2 * p.u_2 - eos.enthalpy(p.rho_2),
    ]
}

struct CellData {
    u: Vec5,
    f: Vec5,
    s: f64,
    prim: TwoPhasePrimitive,
}

fn cell_data(states: &[TwoPhaseConserved], eos: &EosSpec) -> Result<(Vec<CellData>, MacroDiagnostics)> {
    let data: Vec<Result<(CellData, bool)>> = states
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let r = primitive_from_conserved(u, i)?;
            let p = r.state;
            Ok((CellData { u: u.to_array(), f: flux(u, &p, eos), s: wave_speed(&p, eos), prim: p }, r.clamped))
        })
        .collect();
    let mut out = Vec::with_capacity(states.len());
    let mut diag = MacroDiagnostics::default();
    for d in data {
        let (c, clamped) = d?;
        diag.clamped_cells += clamped as usize;
        out.push(c);
    }
    Ok((out, diag))
}

fn face_flux(l: &CellData, r: &CellData) -> Vec5 {
    rusanov(&l.f, &r.f, &l.u, &r.u, l.s.max(r.s))
}

/// Flux divergence `−(F_{i+½} − F_{i−½})/Δx`.
fn hyperbolic_rhs(
    states: &[TwoPhaseConserved],
    dx: f64,
    eos: &EosSpec,
    bc: MacroBc,
) -> Result<(Vec<Vec5>, Vec<CellData>, MacroDiagnostics)> {
    let (cells, diag) = cell_data(states, eos)?;
    let n = cells.len();
    let rhs = (0..n)
        .into_par_iter()
        .map(|i| {
            let (l, r) = bc.neighbours(i, n);
            let fr = face_flux(&cells[i], &cells[r]);
            let fl = face_flux(&cells[l], &cells[i]);
            let mut out = [0.0; 5];
            for k in 0..5 {
                out[k] = -(fr[k] - fl[k]) / dx;
            }
            out
        })
        .collect();
    Ok((rhs, cells, diag))
}

/// Semi-discrete right-hand side including the explicit relaxation sources
/// `(P₁ − P₂)/τ` on `α₁ρ` and `−ζw` on `w`.
pub fn rdt_rhs(
    states: &[TwoPhaseConserved],
    dx: f64,
    eos: &EosSpec,
    relax: &RelaxationSpec,
    bc: MacroBc,
) -> Result<Vec<Vec5>> {
    let (mut rhs, cells, _) = hyperbolic_rhs(states, dx, eos, bc)?;
    for (r, c) in rhs.iter_mut().zip(&cells) {
        let p = &c.prim;
        r[1] += (eos.pressure(p.rho_1) - eos.pressure(p.rho_2)) / relax.tau;
        r[4] -= relax.friction.rdt_zeta(p.rho_1, p.rho_2) * c.u[4];
    }
    Ok(rhs)
}

/// `0.9 Δx / max s`.
pub fn rdt_cfl_dt(states: &[TwoPhaseConserved], dx: f64, eos: &EosSpec) -> Result<f64> {
    let (cells, _) = cell_data(states, eos)?;
    let s = cells.iter().fold(0.0f64, |a, c| a.max(c.s));
    Ok(if s > 0.0 { 0.9 * dx / s } else { f64::INFINITY })
}

fn axpy_states(base: &[TwoPhaseConserved], dt: f64, rhs: &[Vec5]) -> Vec<TwoPhaseConserved> {
    base.iter()
        .zip(rhs)
        .map(|(u, r)| {
            let a = u.to_array();
            let mut out = [0.0; 5];
            for k in 0..5 {
                out[k] = a[k] + dt * r[k];
            }
            TwoPhaseConserved::from_array(out)
        })
        .collect()
}

/// One step: SSP-RK2 on the fluxes, then the sources: pressure relaxation
/// by implicit Euler on `α₁ρ` and friction by its exact exponential.
pub fn rdt_step(
    states: &mut [TwoPhaseConserved],
    dt: f64,
    dx: f64,
    eos: &EosSpec,
    relax: &RelaxationSpec,
    bc: MacroBc,
) -> Result<MacroDiagnostics> {
    let limit = rdt_cfl_dt(states, dx, eos)?;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStep { dt, limit });
    }
    let (k1, _, mut diag) = hyperbolic_rhs(states, dx, eos, bc)?;
    let stage = axpy_states(states, dt, &k1);
    let (k2, _, d2) = hyperbolic_rhs(&stage, dx, eos, bc)?;
    diag.clamped_cells += d2.clamped_cells;
    let second = axpy_states(&stage, dt, &k2);
    for (u, b) in states.iter_mut().zip(&second) {
        let (x, z) = (u.to_array(), b.to_array());
        let mut out = [0.0; 5];
        for k in 0..5 {
            out[k] = 0.5 * (x[k] + z[k]);
        }
        *u = TwoPhaseConserved::from_array(out);
    }
    apply_sources(states, dt, eos, relax)?;
    Ok(diag)
}

fn apply_sources(states: &mut [TwoPhaseConserved], dt: f64, eos: &EosSpec, relax: &RelaxationSpec) -> Result<()> {
    let results: Vec<Result<()>> = states
        .par_iter_mut()
        .enumerate()
        .map(|(i, u)| {
            let m1 = u.alpha_rho_1;
            let m2 = u.rho - m1;
            let alpha0 = u.alpha_rho / u.rho;
            let alpha = relax_pressure(alpha0, m1, m2, dt / (relax.tau * u.rho), eos, i)?;
            u.alpha_rho = alpha * u.rho;
            let p = primitive_from_conserved(u, i)?.state;
            u.w *= (-relax.friction.rdt_zeta(p.rho_1, p.rho_2) * dt).exp();
            Ok(())
        })
        .collect();
    results.into_iter().collect()
}
