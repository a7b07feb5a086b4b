//! Finite-volume solvers for the isentropic two-phase systems (conservative
//! pressure/velocity relaxation model and a Baer–Nunziato type model) and
//! for the multi-species Euler system, in one space dimension.

mod bn;
mod euler;
mod rdt;

pub use bn::{bn_cfl_dt, bn_rhs, bn_step, BnState};
pub use euler::{euler_mix_cfl_dt, euler_mix_rhs, euler_mix_step, isentropic_euler_step, EulerMixState};
pub use rdt::{rdt_cfl_dt, rdt_rhs, rdt_step};

use crate::error::{Error, Result};

/// Smallest admissible volume fraction.
pub const ALPHA_MIN: f64 = 1e-8;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

/// Polytropic closure `P = c ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosSpec {
    pub c: f64,
    pub gamma: f64,
}

impl EosSpec {
    pub fn new(c: f64, gamma: f64) -> Result<Self> {
        if !(c > 0.0) || !(gamma > 1.0) || !c.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("eos needs c > 0 and gamma > 1, got c={c}, gamma={gamma}")));
        }
        Ok(Self { c, gamma })
    }

    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.c * rho.powf(self.gamma)
    }

    /// `dP/dρ`.
    #[inline]
    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.c * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `h = cγ/(γ−1) ρ^{γ−1}`, so that `dP = ρ dh`.
    #[inline]
    pub fn enthalpy(&self, rho: f64) -> f64 {
        self.c * self.gamma / (self.gamma - 1.0) * rho.powf(self.gamma - 1.0)
    }

    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.pressure_derivative(rho).sqrt()
    }

    /// Density with pressure `p`.
    pub fn density(&self, p: f64) -> f64 {
        (p / self.c).powf(1.0 / self.gamma)
    }
}

fn positive_density(rho: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("density must be positive, got {rho}")));
    }
    Ok(())
}

pub fn eos_pressure(rho: f64, eos: &EosSpec) -> Result<f64> {
    positive_density(rho)?;
    Ok(eos.pressure(rho))
}

pub fn enthalpy(rho: f64, eos: &EosSpec) -> Result<f64> {
    positive_density(rho)?;
    Ok(eos.enthalpy(rho))
}

/// Relative-velocity friction coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Friction {
    /// Fixed `ζ` (used as `ζ̃` by the Baer–Nunziato solver).
    Constant(f64),
    /// Derived from the kinetic exchange constant: `ζ = ξ(ρ₁+ρ₂)` for the
    /// conservative model, `ζ̃ = ξρ/(α₁α₂)` for the Baer–Nunziato model.
    Xi(f64),
}

impl Friction {
    pub fn rdt_zeta(&self, rho_1: f64, rho_2: f64) -> f64 {
        match *self {
            Friction::Constant(z) => z,
            Friction::Xi(xi) => xi * (rho_1 + rho_2),
        }
    }

    pub fn bn_zeta(&self, alpha_1: f64, rho: f64) -> f64 {
        match *self {
            Friction::Constant(z) => z,
            Friction::Xi(xi) => xi * rho / (alpha_1 * (1.0 - alpha_1)),
        }
    }
}

/// Relaxation parameters. `tau = f64::INFINITY` switches pressure
/// relaxation off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationSpec {
    pub tau: f64,
    pub friction: Friction,
}

impl RelaxationSpec {
    pub fn new(tau: f64, friction: Friction) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        let z = match friction {
            Friction::Constant(z) | Friction::Xi(z) => z,
        };
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::InvalidParameter(format!("friction must be non-negative, got {z}")));
        }
        Ok(Self { tau, friction })
    }
}

/// `τ = (√ε λ / ρ) (η₁+η₂)² / (η₁η₂)`.
pub fn relaxation_tau(eps: f64, lambda: f64, rho: f64, eta_1: f64, eta_2: f64) -> Result<f64> {
    for (name, x) in [("eps", eps), ("lambda", lambda), ("rho", rho), ("eta_1", eta_1), ("eta_2", eta_2)] {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
        }
    }
    Ok(eps.sqrt() * lambda / rho * (eta_1 + eta_2).powi(2) / (eta_1 * eta_2))
}

/// Boundary treatment of the finite-volume solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MacroBc {
    #[default]
    Periodic,
    /// Zero-gradient ghost cells.
    Transmissive,
}

impl MacroBc {
    /// Left and right neighbours of cell `i` of `n`.
    #[inline]
    pub(crate) fn neighbours(self, i: usize, n: usize) -> (usize, usize) {
        match self {
            MacroBc::Periodic => ((i + n - 1) % n, (i + 1) % n),
            MacroBc::Transmissive => (i.saturating_sub(1), (i + 1).min(n - 1)),
        }
    }
}

/// Interfacial pressure closure of the Baer–Nunziato model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfacePressure {
    /// `α₁P₁ + α₂P₂`.
    #[default]
    AlphaWeighted,
    Phase1,
    Phase2,
}

/// Primitive two-phase state of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhasePrimitive {
    pub alpha_1: f64,
    pub rho_1: f64,
    pub rho_2: f64,
    pub u_1: f64,
    pub u_2: f64,
}

impl TwoPhasePrimitive {
    pub fn alpha_2(&self) -> f64 {
        1.0 - self.alpha_1
    }

    pub fn rho(&self) -> f64 {
        self.alpha_1 * self.rho_1 + self.alpha_2() * self.rho_2
    }

    /// Mass fraction `κ₁ = α₁ρ₁/ρ`.
    pub fn kappa_1(&self) -> f64 {
        self.alpha_1 * self.rho_1 / self.rho()
    }

    pub fn u_mix(&self) -> f64 {
        (self.alpha_1 * self.rho_1 * self.u_1 + self.alpha_2() * self.rho_2 * self.u_2) / self.rho()
    }

    pub fn w(&self) -> f64 {
        self.u_1 - self.u_2
    }
}

/// Conserved variables `(ρ, α₁ρ, α₁ρ₁, ρū, w)` of the conservative model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseConserved {
    pub rho: f64,
    pub alpha_rho: f64,
    pub alpha_rho_1: f64,
    pub momentum: f64,
    pub w: f64,
}

impl TwoPhaseConserved {
    pub fn to_array(self) -> [f64; 5] {
        [self.rho, self.alpha_rho, self.alpha_rho_1, self.momentum, self.w]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self { rho: a[0], alpha_rho: a[1], alpha_rho_1: a[2], momentum: a[3], w: a[4] }
    }
}

pub fn conserved_from_primitive(p: &TwoPhasePrimitive) -> TwoPhaseConserved {
    let rho = p.rho();
    TwoPhaseConserved {
        rho,
        alpha_rho: p.alpha_1 * rho,
        alpha_rho_1: p.alpha_1 * p.rho_1,
        momentum: rho * p.u_mix(),
        w: p.w(),
    }
}

/// Primitive state recovered from conserved variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    pub state: TwoPhasePrimitive,
    /// `α₁` fell outside `(α_min, 1−α_min)` and was clamped.
    pub clamped: bool,
}

/// Inverts the conserved variables; `α₁` is clamped to `[α_min, 1−α_min]`.
pub fn primitive_from_conserved(u: &TwoPhaseConserved, cell: usize) -> Result<Recovered> {
    let a = u.to_array();
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::MacroState { cell, reason: format!("non-finite conserved state {a:?}") });
    }
    if !(u.rho > 0.0) {
        return Err(Error::MacroState { cell, reason: format!("non-positive density {}", u.rho) });
    }
    let m1 = u.alpha_rho_1;
    let m2 = u.rho - m1;
    if !(m1 > 0.0) || !(m2 > 0.0) {
        return Err(Error::MacroState { cell, reason: format!("phase masses ({m1}, {m2}) not positive") });
    }
    let raw = u.alpha_rho / u.rho;
    let alpha_1 = raw.clamp(ALPHA_MIN, 1.0 - ALPHA_MIN);
    let clamped = alpha_1 != raw;
    if clamped {
        log::debug!("cell {cell}: volume fraction {raw:e} clamped");
    }
    let u_mix = u.momentum / u.rho;
    let k1 = m1 / u.rho;
    let k2 = m2 / u.rho;
    Ok(Recovered {
        state: TwoPhasePrimitive {
            alpha_1,
            rho_1: m1 / alpha_1,
            rho_2: m2 / (1.0 - alpha_1),
            u_1: u_mix + k2 * u.w,
            u_2: u_mix - k1 * u.w,
        },
        clamped,
    })
}

/// Implicit Euler step of `dα/dt = (P(m₁/α) − P(m₂/(1−α))) / (τ s)` with the
/// phase masses `m_p = α_pρ_p` frozen. The residual is strictly increasing
/// in `α` and tends to ∓∞ at the ends of `(0, 1)`, so Newton is safeguarded
/// by bisection on that bracket. With `k = Δt/(τs)` the residual is written
/// as `(α − α₀)/(1+k) − k/(1+k) ΔP` so that it stays O(1) when `k` is huge.
pub(crate) fn relax_pressure(
    alpha0: f64,
    m1: f64,
    m2: f64,
    dt_over_tau: f64,
    eos: &EosSpec,
    cell: usize,
) -> Result<f64> {
    if dt_over_tau == 0.0 {
        return Ok(alpha0);
    }
    let theta = dt_over_tau / (1.0 + dt_over_tau);
    let g = |a: f64| (1.0 - theta) * (a - alpha0) - theta * (eos.pressure(m1 / a) - eos.pressure(m2 / (1.0 - a)));
    let dg = |a: f64| {
        (1.0 - theta)
            + theta
                * (eos.pressure_derivative(m1 / a) * m1 / (a * a)
                    + eos.pressure_derivative(m2 / (1.0 - a)) * m2 / ((1.0 - a) * (1.0 - a)))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut a = alpha0.clamp(ALPHA_MIN, 1.0 - ALPHA_MIN);
    let mut r = g(a);
    for _ in 0..NEWTON_MAX_ITER {
        if r.abs() < NEWTON_TOL {
            return Ok(a);
        }
        if r > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let mut next = a - r / dg(a);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        a = next;
        r = g(a);
    }
    if r.abs() < NEWTON_TOL {
        return Ok(a);
    }
    Err(Error::NewtonDivergence { cell, residual: r })
}

/// Counters collected during a macro step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MacroDiagnostics {
    pub clamped_cells: usize,
}

/// Rusanov flux `½(F_L + F_R) − ½ s (U_R − U_L)`.
#[inline]
pub(crate) fn rusanov<const N: usize>(fl: &[f64; N], fr: &[f64; N], ul: &[f64; N], ur: &[f64; N], s: f64) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * s * (ur[k] - ul[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eos_values() {
        let e = EosSpec::new(1.0, 2.0).unwrap();
        assert_eq!(eos_pressure(3.0, &e).unwrap(), 9.0);
        assert_eq!(enthalpy(3.0, &e).unwrap(), 6.0);
        assert!(eos_pressure(0.0, &e).is_err());
        assert!(EosSpec::new(1.0, 1.0).is_err());
        assert!((e.density(9.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn pressure_enthalpy_identity() {
        let e = EosSpec::new(0.7, 1.4).unwrap();
        let d = 1e-6;
        let mut rho = 0.1;
        while rho <= 10.0 {
            let dp = (e.pressure(rho + d) - e.pressure(rho - d)) / (2.0 * d);
            let dh = (e.enthalpy(rho + d) - e.enthalpy(rho - d)) / (2.0 * d);
            assert!((dp - rho * dh).abs() < 1e-8 * dp.max(1.0), "rho={rho}");
            rho *= 1.3;
        }
    }

    #[test]
    fn tau_values() {
        assert!((relaxation_tau(0.01, 1.0, 1.0, 1.0, 1.0).unwrap() - 0.4).abs() < 1e-15);
        let t = relaxation_tau(0.04, 2.0, 3.0, 0.5, 0.5).unwrap();
        assert!((t - 4.0 * 0.2 * 2.0 / 3.0).abs() < 1e-15);
        assert!(relaxation_tau(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn round_trip_and_clamp() {
        let p = TwoPhasePrimitive { alpha_1: 0.3, rho_1: 1.2, rho_2: 0.4, u_1: 0.5, u_2: -0.2 };
        let back = primitive_from_conserved(&conserved_from_primitive(&p), 0).unwrap();
        assert!(!back.clamped);
        let q = back.state;
        for (a, b) in [(q.alpha_1, p.alpha_1), (q.rho_1, p.rho_1), (q.rho_2, p.rho_2), (q.u_1, p.u_1), (q.u_2, p.u_2)] {
            assert!((a - b).abs() < 1e-13);
        }
        let mut u = conserved_from_primitive(&TwoPhasePrimitive { u_2: p.u_1, ..p });
        let r = primitive_from_conserved(&u, 0).unwrap().state;
        assert!((r.u_1 - r.u_2).abs() == 0.0);
        u.alpha_rho = u.rho * (1.0 - 1e-12);
        let r = primitive_from_conserved(&u, 3).unwrap();
        assert!(r.clamped && r.state.alpha_1 == 1.0 - ALPHA_MIN);
        u.rho = -1.0;
        assert!(matches!(primitive_from_conserved(&u, 3), Err(Error::MacroState { cell: 3, .. })));
    }

    #[test]
    fn pressure_relaxation_solver() {
        let e = EosSpec::new(1.0, 2.0).unwrap();
        // phase 1 compressed: it must expand
        let (m1, m2, a0) = (0.8, 0.2, 0.4);
        let a = relax_pressure(a0, m1, m2, 10.0, &e, 0).unwrap();
        assert!(a > a0);
        let residual = a - a0 - 10.0 * (e.pressure(m1 / a) - e.pressure(m2 / (1.0 - a)));
        assert!(residual.abs() < 1e-9);
        // very stiff: close to pressure equilibrium
        let a = relax_pressure(a0, m1, m2, 1e8, &e, 0).unwrap();
        assert!((e.pressure(m1 / a) - e.pressure(m2 / (1.0 - a))).abs() < 1e-7);
    }
}
