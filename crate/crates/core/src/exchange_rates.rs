//! Momentum exchange between two Maxwellian species at a common temperature:
//! closed forms for pseudo-Maxwellian and hard-sphere kernels and a direct
//! quadrature reference.
//!
//! Sign convention: `R_pq = ∫ m_p v Q^{pq} dv` is the momentum gained by
//! species `p`, so it opposes `ν = ū_p − ū_q` (friction).

use std::f64::consts::PI;

use crate::collision_ops::{KernelFamily, KernelSpec};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use crate::velocity_space::{norm, sub, Vec3};

/// Two Maxwellian species sharing a temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeContext {
    pub dim: usize,
    pub m_p: f64,
    pub m_q: f64,
    pub n_p: f64,
    pub n_q: f64,
    pub u_p: Vec3,
    pub u_q: Vec3,
    pub temperature: f64,
    pub kernel: KernelSpec,
}

impl ExchangeContext {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim: usize,
        (m_p, n_p, u_p): (f64, f64, Vec3),
        (m_q, n_q, u_q): (f64, f64, Vec3),
        temperature: f64,
        kernel: KernelSpec,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        for (name, x) in [("m_p", m_p), ("m_q", m_q), ("T", temperature)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
            }
        }
        for (name, x) in [("n_p", n_p), ("n_q", n_q)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {x}")));
            }
        }
        Ok(Self { dim, m_p, m_q, n_p, n_q, u_p, u_q, temperature, kernel })
    }

    /// The same pair with roles of `p` and `q` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            m_p: self.m_q,
            m_q: self.m_p,
            n_p: self.n_q,
            n_q: self.n_p,
            u_p: self.u_q,
            u_q: self.u_p,
            ..self.clone()
        }
    }

    /// Both bulk velocities shifted by `s`.
    pub fn shifted(&self, s: &Vec3) -> Self {
        let mut c = self.clone();
        for a in 0..3 {
            c.u_p[a] += s[a];
            c.u_q[a] += s[a];
        }
        c
    }

    pub fn k_pq(&self) -> f64 {
        let d = self.dim as f64;
        self.n_p * self.n_q * (self.m_p * self.m_q).powf(0.5 * d) / (2.0 * PI * self.temperature).powf(d)
    }

    pub fn mu_pq(&self) -> f64 {
        2.0 * self.temperature / (self.m_p + self.m_q)
    }

    pub fn gamma_pq(&self) -> f64 {
        2.0 * (self.m_p + self.m_q) * self.temperature / (self.m_p * self.m_q)
    }

    pub fn nu(&self) -> Vec3 {
        sub(&self.u_p, &self.u_q)
    }

    fn rho_product(&self) -> f64 {
        self.m_p * self.n_p * self.m_q * self.n_q
    }

    fn total_mass(&self) -> f64 {
        self.m_p + self.m_q
    }
}

fn scaled(v: &Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// `R_pq = −ξ ρ_p ρ_q (ū_p − ū_q)` with `ξ = A/(m_p + m_q)`, `A` the total
/// angular mass of the kernel. Holds for arbitrary distributions, not only
/// Maxwellians.
pub fn rate_pseudo_maxwellian(ctx: &ExchangeContext) -> Result<Vec3> {
    if ctx.kernel.family() != KernelFamily::PseudoMaxwellian {
        return Err(Error::WrongKernel { expected: "pseudo_maxwellian", found: ctx.kernel.family().name() });
    }
    let xi = xi_pseudo_maxwellian(&ctx.kernel, ctx.m_p, ctx.m_q, ctx.dim);
    Ok(scaled(&ctx.nu(), -xi * ctx.rho_product()))
}

/// Friction constant of the pseudo-Maxwellian exchange rate.
pub fn xi_pseudo_maxwellian(kernel: &KernelSpec, m_p: f64, m_q: f64, dim: usize) -> f64 {
    kernel.angular_mass(dim) / (m_p + m_q)
}

/// `F(x)/x` for the hard-sphere shape function `F`, with
/// `I(ν, γ) = γ^{5/2} F(ν/√γ)`.
fn shape_over_x(x: f64) -> f64 {
    if x < 0.2 {
        // Taylor series; the closed form is 0/0 at the origin.
        const C: [f64; 7] = [
            8.0 / 3.0,
            8.0 / 15.0,
            -4.0 / 105.0,
            4.0 / 945.0,
            -1.0 / 2079.0,
            1.0 / 19305.0,
            -1.0 / 193050.0,
        ];
        let x2 = x * x;
        return PI * C.iter().rev().fold(0.0, |s, c| s * x2 + c);
    }
    let x2 = x * x;
    (PI.powf(1.5) * libm::erf(x) * (x2 + 1.0 - 0.25 / x2) + PI * (-x2).exp() * (x + 0.5 / x)) / x
}

fn hard_sphere_shape(x: f64) -> f64 {
    x * shape_over_x(x)
}

/// `I_pq(ν, γ) = ∫_{R³} |w| (w·ν̂) exp(−|w − ν|²/γ) dw`, the radial-angular
/// integral in the hard-sphere exchange rate. Linear in `ν` near zero.
pub fn i_pq(nu: f64, gamma_pq: f64) -> f64 {
    debug_assert!(gamma_pq > 0.0 && nu >= 0.0);
    gamma_pq.powf(2.5) * hard_sphere_shape(nu / gamma_pq.sqrt())
}

/// `Ψ_pq = A I_pq / ((πγ)^{3/2} |ν| (m_p + m_q))` with the `ν → 0` limit
/// `8 A √γ / (3 √π (m_p + m_q))`.
pub fn psi_pq(nu: f64, gamma_pq: f64, angular_mass: f64, m_p: f64, m_q: f64) -> f64 {
    // I/|ν| = γ² F(x)/x
    let x = nu / gamma_pq.sqrt();
    angular_mass * gamma_pq * gamma_pq * shape_over_x(x) / ((PI * gamma_pq).powf(1.5) * (m_p + m_q))
}

/// Closed-form hard-sphere rate `R = −ρ_p ρ_q Ψ_pq ν` (3D only).
pub fn rate_hard_sphere_closed(ctx: &ExchangeContext) -> Result<Vec3> {
    if ctx.dim != 3 {
        return Err(Error::UnsupportedDimension(ctx.dim));
    }
    if ctx.kernel.family() != KernelFamily::HardSphere {
        return Err(Error::WrongKernel { expected: "hard_sphere", found: ctx.kernel.family().name() });
    }
    let nu = ctx.nu();
    let psi = psi_pq(norm(&nu), ctx.gamma_pq(), ctx.kernel.angular_mass(3), ctx.m_p, ctx.m_q);
    Ok(scaled(&nu, -ctx.rho_product() * psi))
}

/// Linear-response friction coefficient `ζ = ξ(ρ₁ + ρ₂)`.
pub fn friction_zeta(xi: f64, rho_1: f64, rho_2: f64) -> f64 {
    xi * (rho_1 + rho_2)
}

const ORACLE_TOL: f64 = 1e-10;
const ORACLE_MAX_LEVEL: usize = 6;
const RADIAL_ORDER: usize = 16;

/// Reference exchange rate by direct quadrature.
///
/// The product `M_p(v) M_q(v_*)` factors into a centre-of-mass Gaussian,
/// which integrates to `n_p n_q`, and a Gaussian in `w = v − v_*` with mean
/// `ν` and per-axis variance `γ_pq/2`. The collision-sphere average of
/// `v' − v = (m_q/M)(|w|σ − w)` is `−(m_q/M) A w`, leaving
/// `R = −(m_p m_q / M) A n_p n_q ∫ |w|^γ w G(w) dw`.
/// That integral is evaluated in polar/spherical coordinates about `w = 0`,
/// where the kernel singularity becomes a smooth radial weight `r^{d+γ}`:
/// composite Gauss–Legendre in `r`, trapezoid in the azimuth and
/// Gauss–Legendre in the polar cosine. All orders are doubled until the
/// relative change drops below 1e−10.
pub fn rate_quadrature_oracle(ctx: &ExchangeContext) -> Result<Vec3> {
    let prefactor = -ctx.m_p * ctx.m_q / ctx.total_mass() * ctx.kernel.angular_mass(ctx.dim) * ctx.n_p * ctx.n_q;
    let mut prev: Option<Vec3> = None;
    let mut change = f64::INFINITY;
    for level in 0..ORACLE_MAX_LEVEL {
        let (j, scale) = gaussian_moment(ctx, 4 << level, 16 << level);
        if let Some(p) = prev {
            let diff = norm(&sub(&j, &p));
            let size = norm(&j).max(1e-6 * scale);
            change = diff / size;
            if change < ORACLE_TOL {
                return Ok(scaled(&j, prefactor));
            }
        }
        prev = Some(j);
    }
    Err(Error::NonConvergence { order: (4 << (ORACLE_MAX_LEVEL - 1)) * RADIAL_ORDER, change })
}

/// `(∫ |w|^γ w G(w) dw, ∫ |w|^{γ+1} G(w) dw)` for the relative-velocity
/// Gaussian `G`.
fn gaussian_moment(ctx: &ExchangeContext, panels: usize, n_angle: usize) -> (Vec3, f64) {
    let d = ctx.dim;
    let nu = ctx.nu();
    let var = 0.5 * ctx.gamma_pq();
    let s = var.sqrt();
    let g = ctx.kernel.gamma();
    let norm_const = (2.0 * PI * var).powf(-0.5 * d as f64);
    let nu2 = nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2];

    let (dirs, dir_w) = oracle_directions(d, n_angle);
    let r_max = norm(&nu) + 12.0 * s;
    let h = r_max / panels as f64;
    let (gx, gw) = gauss_legendre(RADIAL_ORDER);

    let mut acc = [0.0; 3];
    let mut scale = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            let r = mid + 0.5 * h * xi;
            let wr = 0.5 * h * wi * r.powi(d as i32 - 1) * r.powf(g) * norm_const;
            let mut shell = [0.0; 3];
            let mut shell_abs = 0.0;
            for (e, we) in dirs.iter().zip(&dir_w) {
                let proj = e[0] * nu[0] + e[1] * nu[1] + e[2] * nu[2];
                let dens = we * (-(r * r - 2.0 * r * proj + nu2) / (2.0 * var)).exp();
                shell_abs += dens;
                for a in 0..3 {
                    shell[a] += dens * e[a];
                }
            }
            for a in 0..3 {
                acc[a] += wr * r * shell[a];
            }
            scale += wr * r * shell_abs;
        }
    }
    (acc, scale)
}

fn oracle_directions(dim: usize, n: usize) -> (Vec<Vec3>, Vec<f64>) {
    if dim == 2 {
        let dth = 2.0 * PI / n as f64;
        let dirs = (0..n)
            .map(|k| {
                let th = dth * (k as f64 + 0.5);
                [th.cos(), th.sin(), 0.0]
            })
            .collect();
        (dirs, vec![dth; n])
    } else {
        let n_pol = n / 2;
        let n_az = n;
        let (mu, wmu) = gauss_legendre_on(n_pol, -1.0, 1.0);
        let dphi = 2.0 * PI / n_az as f64;
        let mut dirs = Vec::with_capacity(n_pol * n_az);
        let mut w = Vec::with_capacity(n_pol * n_az);
        for (m, wm) in mu.iter().zip(&wmu) {
            let st = (1.0 - m * m).sqrt();
            for k in 0..n_az {
                let ph = dphi * (k as f64 + 0.5);
                dirs.push([st * ph.cos(), st * ph.sin(), *m]);
                w.push(wm * dphi);
            }
        }
        (dirs, w)
    }
}

/// Oracle linear-response friction constant `ξ = −R·ν̂ / (ρ_p ρ_q |ν|)` at
/// a small relative velocity `ν = 1e−3 √(T/m_min)` along the first axis.
pub fn xi_oracle(kernel: &KernelSpec, m_p: f64, m_q: f64, temperature: f64, dim: usize) -> Result<f64> {
    let nu = 1e-3 * (temperature / m_p.min(m_q)).sqrt();
    let ctx = ExchangeContext::new(dim, (m_p, 1.0, [nu, 0.0, 0.0]), (m_q, 1.0, [0.0; 3]), temperature, *kernel)?;
    let r = rate_quadrature_oracle(&ctx)?;
    Ok(-r[0] / (m_p * m_q * nu))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(dim: usize) -> KernelSpec {
        KernelSpec::with_angular_mass(KernelFamily::PseudoMaxwellian, 0.0, 1.0, dim).unwrap()
    }

    fn hs() -> KernelSpec {
        KernelSpec::with_angular_mass(KernelFamily::HardSphere, 1.0, 1.0, 3).unwrap()
    }

    fn ctx(dim: usize, k: KernelSpec, mp: f64, mq: f64, t: f64, nu: f64) -> ExchangeContext {
        ExchangeContext::new(dim, (mp, 1.3, [nu, 0.0, 0.0]), (mq, 0.7, [0.0; 3]), t, k).unwrap()
    }

    #[test]
    fn derived_constants() {
        let c = ctx(3, hs(), 1.0, 2.0, 1.5, 0.3);
        assert!((c.mu_pq() - 1.0).abs() < 1e-15);
        assert!((c.gamma_pq() - 4.5).abs() < 1e-15);
        let k = 1.3 * 0.7 * 2f64.powf(1.5) / (3.0 * PI).powi(3);
        assert!((c.k_pq() - k).abs() < 1e-15 * k);
    }

    #[test]
    fn shape_values() {
        // high-precision references
        for (x, f) in [
            (0.05, 0.419088422599351812570229104619),
            (0.1, 0.839432361570256618889997986338),
            (0.7, 6.41993094719004846593237780984),
            (2.0, 27.4944772410409444827263700742),
        ] {
            assert!((hard_sphere_shape(x) - f).abs() < 2e-14 * f, "x={x}");
        }
        // series and closed form agree across the switch
        let a = shape_over_x(0.2 - 1e-14);
        let b = shape_over_x(0.2);
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn i_pq_limits() {
        assert_eq!(i_pq(0.0, 1.0), 0.0);
        let a = i_pq(1e-3, 1.0);
        let b = i_pq(2e-3, 1.0);
        // cubic correction: 2(1 + (1/5)(ν_b² − ν_a²))
        assert!((b / a - 2.0).abs() < 2e-6);
        assert!((a / 1e-3 - 8.0 * PI / 3.0).abs() < 1e-5);
    }

    #[test]
    fn psi_limit() {
        let g: f64 = 3.0;
        let lim = 8.0 * g.sqrt() / (3.0 * PI.sqrt() * 3.0);
        assert!((psi_pq(0.0, g, 1.0, 1.0, 2.0) - lim).abs() < 1e-15);
        assert!((psi_pq(1e-9, g, 1.0, 1.0, 2.0) - lim).abs() < 1e-12);
    }

    #[test]
    fn pseudo_maxwellian_properties() {
        let c = ctx(2, pm(2), 1.0, 2.0, 1.0, 0.4);
        let r = rate_pseudo_maxwellian(&c).unwrap();
        assert!(r[0] < 0.0);
        let rs = rate_pseudo_maxwellian(&c.swapped()).unwrap();
        assert!((r[0] + rs[0]).abs() < 1e-15);
        let mut d = c.clone();
        d.n_p *= 2.0;
        assert!((rate_pseudo_maxwellian(&d).unwrap()[0] - 2.0 * r[0]).abs() < 1e-15);
        let mut z = c.clone();
        z.u_q = z.u_p;
        assert_eq!(rate_pseudo_maxwellian(&z).unwrap(), [0.0; 3]);
        assert!(matches!(rate_pseudo_maxwellian(&ctx(3, hs(), 1.0, 1.0, 1.0, 0.1)), Err(Error::WrongKernel { .. })));
    }

    #[test]
    fn hard_sphere_requires_3d() {
        let k2 = KernelSpec::hard_sphere(1.0).unwrap();
        assert!(matches!(rate_hard_sphere_closed(&ctx(2, k2, 1.0, 1.0, 1.0, 0.1)), Err(Error::UnsupportedDimension(2))));
        assert_eq!(rate_hard_sphere_closed(&ctx(3, hs(), 1.0, 1.0, 1.0, 0.0)).unwrap(), [0.0; 3]);
    }

    #[test]
    fn oracle_matches_pseudo_maxwellian() {
        for dim in [2, 3] {
            for nu in [0.3, 2.0] {
                let c = ctx(dim, pm(dim), 1.0, 3.0, 0.8, nu);
                let a = rate_pseudo_maxwellian(&c).unwrap();
                let b = rate_quadrature_oracle(&c).unwrap();
                assert!((a[0] - b[0]).abs() <= 1e-8 * a[0].abs(), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn oracle_matches_hard_sphere() {
        let c = ctx(3, hs(), 1.0, 2.0, 1.3, 0.9);
        let a = rate_hard_sphere_closed(&c).unwrap();
        let b = rate_quadrature_oracle(&c).unwrap();
        assert!((a[0] - b[0]).abs() <= 1e-8 * a[0].abs(), "{a:?} {b:?}");
        assert!(b[1].abs() < 1e-12 * b[0].abs() && b[2].abs() < 1e-12 * b[0].abs());
    }

    #[test]
    fn oracle_zero_at_equal_velocities() {
        let c = ctx(3, hs(), 1.0, 1.0, 1.0, 0.0);
        let r = rate_quadrature_oracle(&c).unwrap();
        assert!(norm(&r) < 1e-12);
    }

    #[test]
    fn xi_oracle_pseudo_maxwellian() {
        let xi = xi_oracle(&pm(2), 1.0, 2.0, 1.0, 2).unwrap();
        assert!((xi - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn zeta() {
        assert_eq!(friction_zeta(1.0, 1.0, 1.0), 2.0);
        assert_eq!(friction_zeta(0.0, 1.0, 3.0), 0.0);
        assert!((friction_zeta(0.3, 2.0, 4.0) - 2.0 * friction_zeta(0.3, 1.0, 2.0)).abs() < 1e-15);
    }
}
