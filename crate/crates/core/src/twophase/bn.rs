//! Isentropic Baer–Nunziato type model in the variables
//! `(α₁, α₁ρ₁, α₁ρ₁u₁, α₂ρ₂, α₂ρ₂u₂)`.

use rayon::prelude::*;

use super::rdt::wave_speed;
use super::{
    relax_pressure, rusanov, EosSpec, InterfacePressure, MacroBc, MacroDiagnostics, RelaxationSpec,
    TwoPhasePrimitive, ALPHA_MIN,
};
use crate::error::{Error, Result};

type Vec5 = [f64; 5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnState {
    pub alpha_1: f64,
    pub alpha_rho_1: f64,
    pub alpha_rho_u_1: f64,
    pub alpha_rho_2: f64,
    pub alpha_rho_u_2: f64,
}

impl BnState {
    pub fn from_primitive(p: &TwoPhasePrimitive) -> Self {
        let m1 = p.alpha_1 * p.rho_1;
        let m2 = p.alpha_2() * p.rho_2;
        Self { alpha_1: p.alpha_1, alpha_rho_1: m1, alpha_rho_u_1: m1 * p.u_1, alpha_rho_2: m2, alpha_rho_u_2: m2 * p.u_2 }
    }

    pub fn to_primitive(&self, cell: usize) -> Result<TwoPhasePrimitive> {
        let a = self.to_array();
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::MacroState { cell, reason: format!("non-finite state {a:?}") });
        }
        if !(self.alpha_1 >= ALPHA_MIN && self.alpha_1 <= 1.0 - ALPHA_MIN) {
            return Err(Error::AlphaOutOfRange { cell, alpha: self.alpha_1 });
        }
        if !(self.alpha_rho_1 > 0.0) || !(self.alpha_rho_2 > 0.0) {
            return Err(Error::MacroState {
                cell,
                reason: format!("phase masses ({}, {}) not positive", self.alpha_rho_1, self.alpha_rho_2),
            });
        }
        Ok(TwoPhasePrimitive {
            alpha_1: self.alpha_1,
            rho_1: self.alpha_rho_1 / self.alpha_1,
            rho_2: self.alpha_rho_2 / (1.0 - self.alpha_1),
            u_1: self.alpha_rho_u_1 / self.alpha_rho_1,
            u_2: self.alpha_rho_u_2 / self.alpha_rho_2,
        })
    }

    pub fn to_array(self) -> Vec5 {
        [self.alpha_1, self.alpha_rho_1, self.alpha_rho_u_1, self.alpha_rho_2, self.alpha_rho_u_2]
    }

    pub fn from_array(a: Vec5) -> Self {
        Self { alpha_1: a[0], alpha_rho_1: a[1], alpha_rho_u_1: a[2], alpha_rho_2: a[3], alpha_rho_u_2: a[4] }
    }
}

fn interface_pressure(p: &TwoPhasePrimitive, eos: &EosSpec, closure: InterfacePressure) -> f64 {
    match closure {
        InterfacePressure::AlphaWeighted => p.alpha_1 * eos.pressure(p.rho_1) + p.alpha_2() * eos.pressure(p.rho_2),
        InterfacePressure::Phase1 => eos.pressure(p.rho_1),
        InterfacePressure::Phase2 => eos.pressure(p.rho_2),
    }
}

struct CellData {
    u: Vec5,
    f: Vec5,
    s: f64,
    p_int: f64,
    u_mix: f64,
    prim: TwoPhasePrimitive,
}

fn cell_data(states: &[BnState], eos: &EosSpec, closure: InterfacePressure) -> Result<Vec<CellData>> {
    states
        .par_iter()
        .enumerate()
        .map(|(i, st)| {
            let p = st.to_primitive(i)?;
            let a1 = p.alpha_1;
            let f = [
                0.0,
                st.alpha_rho_u_1,
                st.alpha_rho_u_1 * p.u_1 + a1 * eos.pressure(p.rho_1),
                st.alpha_rho_u_2,
                st.alpha_rho_u_2 * p.u_2 + (1.0 - a1) * eos.pressure(p.rho_2),
            ];
            Ok(CellData {
                u: st.to_array(),
                f,
                s: wave_speed(&p, eos),
                p_int: interface_pressure(&p, eos, closure),
                u_mix: p.u_mix(),
                prim: p,
            })
        })
        .collect()
}

/// Conservative fluxes by Rusanov; `P_I ∂α` and `ū ∂α` by central
/// differences against face-averaged interface quantities, with the same
/// Rusanov dissipation on `α₁`.
fn hyperbolic_rhs(
    states: &[BnState],
    dx: f64,
    eos: &EosSpec,
    closure: InterfacePressure,
    bc: MacroBc,
) -> Result<(Vec<Vec5>, Vec<CellData>)> {
    let cells = cell_data(states, eos, closure)?;
    let n = cells.len();
    let face = |l: &CellData, r: &CellData| {
        let s = l.s.max(r.s);
        let mut fl = rusanov(&l.f, &r.f, &l.u, &r.u, s);
        let da = r.u[0] - l.u[0];
        fl[0] = 0.0;
        (fl, s * da, 0.5 * (l.p_int + r.p_int) * da, 0.5 * (l.u_mix + r.u_mix) * da)
    };
    let rhs = (0..n)
        .into_par_iter()
        .map(|i| {
            let (l, r) = bc.neighbours(i, n);
            let (fr, diss_r, pda_r, uda_r) = face(&cells[i], &cells[r]);
            let (fl, diss_l, pda_l, uda_l) = face(&cells[l], &cells[i]);
            let mut out = [0.0; 5];
            for k in 1..5 {
                out[k] = -(fr[k] - fl[k]) / dx;
            }
            let p_dalpha = 0.5 * (pda_r + pda_l) / dx;
            out[2] += p_dalpha;
            out[4] -= p_dalpha;
            out[0] = -0.5 * (uda_r + uda_l) / dx + 0.5 * (diss_r - diss_l) / dx;
            out
        })
        .collect();
    Ok((rhs, cells))
}

/// Semi-discrete right-hand side including the explicit sources
/// `(P₁ − P₂)/τ` on `α₁` and `±ζ̃(u₂ − u₁)` on the phase momenta.
pub fn bn_rhs(
    states: &[BnState],
    dx: f64,
    eos: &EosSpec,
    relax: &RelaxationSpec,
    closure: InterfacePressure,
    bc: MacroBc,
) -> Result<Vec<Vec5>> {
    let (mut rhs, cells) = hyperbolic_rhs(states, dx, eos, closure, bc)?;
    for (r, c) in rhs.iter_mut().zip(&cells) {
        let p = &c.prim;
        r[0] += (eos.pressure(p.rho_1) - eos.pressure(p.rho_2)) / relax.tau;
        let drag = relax.friction.bn_zeta(p.alpha_1, p.rho()) * (p.u_2 - p.u_1);
        r[2] += drag;
        r[4] -= drag;
    }
    Ok(rhs)
}

/// `0.9 Δx / max s`, with the wave-speed bound shared with the conservative model.
pub fn bn_cfl_dt(states: &[BnState], dx: f64, eos: &EosSpec) -> Result<f64> {
    let cells = cell_data(states, eos, InterfacePressure::AlphaWeighted)?;
    let s = cells.iter().fold(0.0f64, |a, c| a.max(c.s));
    Ok(if s > 0.0 { 0.9 * dx / s } else { f64::INFINITY })
}

fn axpy_states(base: &[BnState], dt: f64, rhs: &[Vec5]) -> Vec<BnState> {
    base.iter()
        .zip(rhs)
        .map(|(u, r)| {
            let a = u.to_array();
            let mut out = [0.0; 5];
            for k in 0..5 {
                out[k] = a[k] + dt * r[k];
            }
            BnState::from_array(out)
        })
        .collect()
}

/// One step: SSP-RK2 on the hyperbolic part, then implicit pressure
/// relaxation in `α₁` and exact momentum-conserving friction.
pub fn bn_step(
    states: &mut [BnState],
    dt: f64,
    dx: f64,
    eos: &EosSpec,
    relax: &RelaxationSpec,
    closure: InterfacePressure,
    bc: MacroBc,
) -> Result<MacroDiagnostics> {
    let limit = bn_cfl_dt(states, dx, eos)?;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStep { dt, limit });
    }
    let (k1, _) = hyperbolic_rhs(states, dx, eos, closure, bc)?;
    let stage = axpy_states(states, dt, &k1);
    let (k2, _) = hyperbolic_rhs(&stage, dx, eos, closure, bc)?;
    let second = axpy_states(&stage, dt, &k2);
    for (u, b) in states.iter_mut().zip(&second) {
        let (x, z) = (u.to_array(), b.to_array());
        let mut out = [0.0; 5];
        for k in 0..5 {
            out[k] = 0.5 * (x[k] + z[k]);
        }
        *u = BnState::from_array(out);
    }
    let results: Vec<Result<()>> = states
        .par_iter_mut()
        .enumerate()
        .map(|(i, st)| {
            let (m1, m2) = (st.alpha_rho_1, st.alpha_rho_2);
            st.alpha_1 = relax_pressure(st.alpha_1, m1, m2, dt / relax.tau, eos, i)?;
            let p = st.to_primitive(i)?;
            // dw/dt = −ζ̃(1/m₁ + 1/m₂) w with m₁u₁ + m₂u₂ fixed
            let rate = relax.friction.bn_zeta(p.alpha_1, p.rho()) * (1.0 / m1 + 1.0 / m2);
            let total = st.alpha_rho_u_1 + st.alpha_rho_u_2;
            let u_mix = total / (m1 + m2);
            let w = (p.u_1 - p.u_2) * (-rate * dt).exp();
            st.alpha_rho_u_1 = m1 * (u_mix + m2 / (m1 + m2) * w);
            st.alpha_rho_u_2 = total - st.alpha_rho_u_1;
            Ok(())
        })
        .collect();
    results.into_iter().collect::<Result<()>>()?;
    Ok(MacroDiagnostics::default())
}

#[cfg(test)]
mod tests {
    use super::super::Friction;
    use super::*;

    fn eos() -> EosSpec {
        EosSpec::new(1.0, 2.0).unwrap()
    }

    fn prim(alpha: f64, r1: f64, r2: f64, u1: f64, u2: f64) -> TwoPhasePrimitive {
        TwoPhasePrimitive { alpha_1: alpha, rho_1: r1, rho_2: r2, u_1: u1, u_2: u2 }
    }

    #[test]
    fn equilibrium_is_stationary() {
        let relax = RelaxationSpec::new(0.1, Friction::Xi(1.0)).unwrap();
        let s = vec![BnState::from_primitive(&prim(0.3, 1.2, 1.2, 0.4, 0.4)); 5];
        for r in bn_rhs(&s, 0.1, &eos(), &relax, InterfacePressure::AlphaWeighted, MacroBc::Periodic).unwrap() {
            assert!(r.iter().all(|x| x.abs() < 1e-14), "{r:?}");
        }
    }

    #[test]
    fn uniform_alpha_has_no_nonconservative_terms() {
        // pressure-jump data with uniform α: the α₁ rate must be exactly zero
        let relax = RelaxationSpec::new(f64::INFINITY, Friction::Constant(0.0)).unwrap();
        let s: Vec<_> = (0..8)
            .map(|i| BnState::from_primitive(&prim(0.4, 1.0 + 0.1 * i as f64, 0.7, 0.1 * i as f64, -0.05)))
            .collect();
        for closure in [InterfacePressure::AlphaWeighted, InterfacePressure::Phase1, InterfacePressure::Phase2] {
            let r = bn_rhs(&s, 0.1, &eos(), &relax, closure, MacroBc::Periodic).unwrap();
            assert!(r.iter().all(|x| x[0] == 0.0));
        }
    }

    #[test]
    fn friction_conserves_momentum() {
        let relax = RelaxationSpec::new(f64::INFINITY, Friction::Xi(0.5)).unwrap();
        let mut s = vec![BnState::from_primitive(&prim(0.3, 1.0, 2.0, 0.5, -0.5))];
        let p0 = s[0].alpha_rho_u_1 + s[0].alpha_rho_u_2;
        bn_step(&mut s, 0.1, 1e9, &eos(), &relax, InterfacePressure::AlphaWeighted, MacroBc::Periodic).unwrap();
        let p = s[0].to_primitive(0).unwrap();
        assert!((s[0].alpha_rho_u_1 + s[0].alpha_rho_u_2 - p0).abs() < 1e-15);
        let rate = 0.5 * p.rho() / (0.3 * 0.7) * (1.0 / 0.3 + 1.0 / 1.4);
        assert!(((p.u_1 - p.u_2) - (-rate * 0.1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn alpha_out_of_range_is_reported() {
        let mut st = BnState::from_primitive(&prim(0.5, 1.0, 1.0, 0.0, 0.0));
        st.alpha_1 = 1.5;
        assert!(matches!(st.to_primitive(7), Err(Error::AlphaOutOfRange { cell: 7, .. })));
    }
}
