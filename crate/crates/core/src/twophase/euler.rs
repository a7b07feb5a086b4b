//! Multi-species Euler system `(ρ_p…, ρū, E)` with `p = (2/d)(E − ½ρū²)`,
//! and the isentropic single-phase Euler system used as a reference.

use rayon::prelude::*;

use super::{rusanov, EosSpec, MacroBc};
use crate::error::{Error, Result};

/// One cell of the multi-species Euler system.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerMixState {
    pub rho: Vec<f64>,
    pub momentum: f64,
    pub energy: f64,
}

impl EulerMixState {
    /// State with per-species densities `rho`, velocity `u` and pressure `p`.
    pub fn from_primitive(rho: Vec<f64>, u: f64, p: f64, dim: usize) -> Self {
        let total: f64 = rho.iter().sum();
        Self { momentum: total * u, energy: 0.5 * total * u * u + 0.5 * dim as f64 * p, rho }
    }

    pub fn total_density(&self) -> f64 {
        self.rho.iter().sum()
    }

    pub fn velocity(&self) -> f64 {
        self.momentum / self.total_density()
    }

    pub fn pressure(&self, dim: usize) -> f64 {
        2.0 / dim as f64 * (self.energy - 0.5 * self.momentum * self.momentum / self.total_density())
    }

    /// `T = p / Σ ρ_p/m_p`.
    pub fn temperature(&self, masses: &[f64], dim: usize) -> f64 {
        let n: f64 = self.rho.iter().zip(masses).map(|(r, m)| r / m).sum();
        self.pressure(dim) / n
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = self.rho.clone();
        v.push(self.momentum);
        v.push(self.energy);
        v
    }

    fn from_slice(a: &[f64]) -> Self {
        let k = a.len() - 2;
        Self { rho: a[..k].to_vec(), momentum: a[k], energy: a[k + 1] }
    }
}

struct Cell {
    u: Vec<f64>,
    f: Vec<f64>,
    s: f64,
}

fn cell_data(states: &[EulerMixState], dim: usize) -> Result<Vec<Cell>> {
    states
        .par_iter()
        .enumerate()
        .map(|(i, st)| {
            let rho = st.total_density();
            let p = st.pressure(dim);
            if st.rho.iter().any(|r| !(*r >= 0.0)) || !(rho > 0.0) || !(p > 0.0) || !st.energy.is_finite() {
                return Err(Error::MacroState { cell: i, reason: format!("inadmissible state {st:?}") });
            }
            let u = st.momentum / rho;
            let mut f: Vec<f64> = st.rho.iter().map(|r| r * u).collect();
            f.push(st.momentum * u + p);
            f.push((st.energy + p) * u);
            let c = ((dim as f64 + 2.0) / dim as f64 * p / rho).sqrt();
            Ok(Cell { u: st.to_vec(), f, s: u.abs() + c })
        })
        .collect()
}

fn rusanov_dyn(l: &Cell, r: &Cell) -> Vec<f64> {
    let s = l.s.max(r.s);
    (0..l.u.len()).map(|k| 0.5 * (l.f[k] + r.f[k]) - 0.5 * s * (r.u[k] - l.u[k])).collect()
}

pub fn euler_mix_rhs(states: &[EulerMixState], dx: f64, dim: usize, bc: MacroBc) -> Result<Vec<Vec<f64>>> {
    if !(dim == 1 || dim == 2 || dim == 3) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let cells = cell_data(states, dim)?;
    let n = cells.len();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let (l, r) = bc.neighbours(i, n);
            let fr = rusanov_dyn(&cells[i], &cells[r]);
            let fl = rusanov_dyn(&cells[l], &cells[i]);
            fr.iter().zip(&fl).map(|(a, b)| -(a - b) / dx).collect()
        })
        .collect())
}

pub fn euler_mix_cfl_dt(states: &[EulerMixState], dx: f64, dim: usize) -> Result<f64> {
    let s = cell_data(states, dim)?.iter().fold(0.0f64, |a, c| a.max(c.s));
    Ok(if s > 0.0 { 0.9 * dx / s } else { f64::INFINITY })
}

fn check_dt(dt: f64, limit: f64) -> Result<()> {
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStep { dt, limit });
    }
    Ok(())
}

/// SSP-RK2 step.
pub fn euler_mix_step(states: &mut [EulerMixState], dt: f64, dx: f64, dim: usize, bc: MacroBc) -> Result<()> {
    check_dt(dt, euler_mix_cfl_dt(states, dx, dim)?)?;
    let advance = |base: &[EulerMixState], k: &[Vec<f64>]| -> Vec<EulerMixState> {
        base.iter()
            .zip(k)
            .map(|(u, r)| {
                let a: Vec<f64> = u.to_vec().iter().zip(r).map(|(x, y)| x + dt * y).collect();
                EulerMixState::from_slice(&a)
            })
            .collect()
    };
    let k1 = euler_mix_rhs(states, dx, dim, bc)?;
    let stage = advance(states, &k1);
    let k2 = euler_mix_rhs(&stage, dx, dim, bc)?;
    let second = advance(&stage, &k2);
    for (u, b) in states.iter_mut().zip(&second) {
        let a: Vec<f64> = u.to_vec().iter().zip(b.to_vec()).map(|(x, z)| 0.5 * (x + z)).collect();
        *u = EulerMixState::from_slice(&a);
    }
    Ok(())
}

fn isentropic_rhs(rho: &[f64], mom: &[f64], dx: f64, eos: &EosSpec, bc: MacroBc) -> Result<(Vec<[f64; 2]>, f64)> {
    let n = rho.len();
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        if !(rho[i] > 0.0) || !mom[i].is_finite() {
            return Err(Error::MacroState { cell: i, reason: format!("density {} momentum {}", rho[i], mom[i]) });
        }
        let u = mom[i] / rho[i];
        cells.push(([rho[i], mom[i]], [mom[i], mom[i] * u + eos.pressure(rho[i])], u.abs() + eos.sound_speed(rho[i])));
    }
    let smax = cells.iter().fold(0.0f64, |a, c| a.max(c.2));
    let face = |l: usize, r: usize| {
        let (a, b) = (&cells[l], &cells[r]);
        rusanov(&a.1, &b.1, &a.0, &b.0, a.2.max(b.2))
    };
    let rhs = (0..n)
        .map(|i| {
            let (l, r) = bc.neighbours(i, n);
            let (fr, fl) = (face(i, r), face(l, i));
            [-(fr[0] - fl[0]) / dx, -(fr[1] - fl[1]) / dx]
        })
        .collect();
    Ok((rhs, smax))
}

/// SSP-RK2 step of the isentropic Euler system `(ρ, ρu)`.
pub fn isentropic_euler_step(
    rho: &mut [f64],
    mom: &mut [f64],
    dt: f64,
    dx: f64,
    eos: &EosSpec,
    bc: MacroBc,
) -> Result<()> {
    let (k1, smax) = isentropic_rhs(rho, mom, dx, eos, bc)?;
    check_dt(dt, if smax > 0.0 { 0.9 * dx / smax } else { f64::INFINITY })?;
    let r1: Vec<f64> = rho.iter().zip(&k1).map(|(x, k)| x + dt * k[0]).collect();
    let m1: Vec<f64> = mom.iter().zip(&k1).map(|(x, k)| x + dt * k[1]).collect();
    let (k2, _) = isentropic_rhs(&r1, &m1, dx, eos, bc)?;
    for i in 0..rho.len() {
        rho[i] = 0.5 * (rho[i] + r1[i] + dt * k2[i][0]);
        mom[i] = 0.5 * (mom[i] + m1[i] + dt * k2[i][1]);
    }
    Ok(())
}
