//! Velocity-space discretization: the truncated Cartesian grid, the angular
//! rule on the unit sphere, Maxwellians, and moment extraction.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Velocity vector. Two-dimensional grids keep the third component at zero.
pub type Vec3 = [f64; 3];

/// Number densities below this are treated as vacuum.
pub const VACUUM_FLOOR: f64 = 1e-14;

/// Nodewise tolerance for round-off negativity of a distribution.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-14;

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn axpy(alpha: f64, x: &Vec3, y: &Vec3) -> Vec3 {
    [alpha * x[0] + y[0], alpha * x[1] + y[1], alpha * x[2] + y[2]]
}

/// Summation order for moment reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    /// Fixed left-to-right order; bit-reproducible.
    #[default]
    Ordered,
    /// Work-stealing parallel reduction; order depends on scheduling.
    Parallel,
}

/// Uniform Cartesian truncation of velocity space plus an angular rule on
/// the unit sphere `S^{dim-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    dim: usize,
    nodes_per_axis: usize,
    v_max: f64,
    dv: f64,
    nodes: Vec<Vec3>,
    node_weight: f64,
    angular_nodes: Vec<Vec3>,
    angular_weights: Vec<f64>,
}

impl VelocityGrid {
    /// Builds the grid `[-v_max, v_max]^dim` with `nodes_per_axis` cell-centred
    /// nodes per axis and `n_angular` directions on the sphere.
    ///
    /// In two dimensions the directions are equispaced on the circle; in three
    /// dimensions a Gauss–Legendre rule in the polar cosine is combined with a
    /// trapezoid rule in azimuth.
    pub fn new(dim: usize, nodes_per_axis: usize, v_max: f64, n_angular: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if nodes_per_axis < 8 {
            return Err(Error::InvalidGrid(format!(
                "nodes_per_axis must be at least 8, got {nodes_per_axis}"
            )));
        }
        if !nodes_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "nodes_per_axis must be even, got {nodes_per_axis}"
            )));
        }
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::InvalidGrid(format!("v_max must be positive, got {v_max}")));
        }
        if n_angular < 8 || !n_angular.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_angular must be even and at least 8, got {n_angular}"
            )));
        }

        let n = nodes_per_axis;
        let dv = 2.0 * v_max / n as f64;
        let coord = |k: usize| -v_max + (k as f64 + 0.5) * dv;
        let total = n.pow(dim as u32);
        let mut nodes = Vec::with_capacity(total);
        for idx in 0..total {
            let ix = idx % n;
            let iy = (idx / n) % n;
            let iz = if dim == 3 { idx / (n * n) } else { 0 };
            let z = if dim == 3 { coord(iz) } else { 0.0 };
            nodes.push([coord(ix), coord(iy), z]);
        }

        let (angular_nodes, angular_weights) = if dim == 2 {
            circle_rule(n_angular)
        } else {
            sphere_rule(n_angular)?
        };

        Ok(Self {
            dim,
            nodes_per_axis,
            v_max,
            dv,
            nodes,
            node_weight: dv.powi(dim as i32),
            angular_nodes,
            angular_weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Node spacing along each axis.
    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Vec3 {
        &self.nodes[i]
    }

    /// Quadrature weight of every node (`dv^dim`).
    pub fn node_weight(&self) -> f64 {
        self.node_weight
    }

    pub fn angular_nodes(&self) -> &[Vec3] {
        &self.angular_nodes
    }

    pub fn angular_weights(&self) -> &[f64] {
        &self.angular_weights
    }

    /// Surface measure of `S^{dim-1}`.
    pub fn sphere_measure(&self) -> f64 {
        sphere_measure(self.dim)
    }

    /// Coordinate of the `k`-th node along any axis.
    pub fn axis_coord(&self, k: usize) -> f64 {
        -self.v_max + (k as f64 + 0.5) * self.dv
    }

    /// Index of the node obtained by reversing component `axis`.
    pub fn mirror_index(&self, i: usize, axis: usize) -> usize {
        let n = self.nodes_per_axis;
        let stride = n.pow(axis as u32);
        let k = (i / stride) % n;
        i - k * stride + (n - 1 - k) * stride
    }

    /// Index of the node at `-v`.
    pub fn opposite_index(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Multilinear interpolation of nodal values at an arbitrary velocity.
    /// Neighbours outside the truncation count as zero.
    pub fn interpolate(&self, f: &[f64], v: &Vec3) -> f64 {
        let n = self.nodes_per_axis as isize;
        let inv = 1.0 / self.dv;
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim {
            let s = (v[a] + self.v_max) * inv - 0.5;
            let k = s.floor();
            if k < -1.0 || k > n as f64 - 1.0 {
                return 0.0;
            }
            base[a] = k as isize;
            frac[a] = s - k;
        }
        let corners = 1usize << self.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut idx = 0isize;
            let mut stride = 1isize;
            let mut w = 1.0;
            let mut inside = true;
            for a in 0..self.dim {
                let bit = ((c >> a) & 1) as isize;
                let k = base[a] + bit;
                if k < 0 || k >= n {
                    inside = false;
                    break;
                }
                idx += k * stride;
                stride *= n;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if inside {
                acc += w * f[idx as usize];
            }
        }
        acc
    }

    /// Weighted sum `Σ w φ(v_i) f_i` in the requested order.
    pub fn integrate<F>(&self, f: &[f64], phi: F, mode: Summation) -> f64
    where
        F: Fn(&Vec3) -> f64 + Sync,
    {
        let s = match mode {
            Summation::Ordered => self.nodes.iter().zip(f).map(|(v, fi)| phi(v) * fi).sum::<f64>(),
            Summation::Parallel => self
                .nodes
                .par_iter()
                .zip(f.par_iter())
                .map(|(v, fi)| phi(v) * fi)
                .sum::<f64>(),
        };
        s * self.node_weight
    }
}

pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked at construction"),
    }
}

fn circle_rule(n: usize) -> (Vec<Vec3>, Vec<f64>) {
    let w = 2.0 * PI / n as f64;
    let dirs = (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            [th.cos(), th.sin(), 0.0]
        })
        .collect();
    (dirs, vec![w; n])
}

fn sphere_rule(n_angular: usize) -> Result<(Vec<Vec3>, Vec<f64>)> {
    let target = ((n_angular as f64) / 2.0).sqrt().floor() as usize;
    let n_polar = (1..=target.max(1))
        .rev()
        .find(|p| n_angular.is_multiple_of(*p) && (n_angular / p).is_multiple_of(2))
        .ok_or_else(|| {
            Error::InvalidGrid(format!("cannot factor {n_angular} angular nodes into a product rule"))
        })?;
    let n_az = n_angular / n_polar;
    let (mu, wmu) = gauss_legendre(n_polar);
    let dphi = 2.0 * PI / n_az as f64;
    let mut dirs = Vec::with_capacity(n_angular);
    let mut weights = Vec::with_capacity(n_angular);
    for (m, wm) in mu.iter().zip(&wmu) {
        let s = (1.0 - m * m).sqrt();
        for k in 0..n_az {
            let ph = dphi * k as f64;
            dirs.push([s * ph.cos(), s * ph.sin(), *m]);
            weights.push(wm * dphi);
        }
    }
    Ok((dirs, weights))
}

/// Species identity and molecular mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSpec {
    pub mass: f64,
    pub label: String,
}

impl SpeciesSpec {
    pub fn new(mass: f64, label: impl Into<String>) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!("species mass must be positive, got {mass}")));
        }
        Ok(Self { mass, label: label.into() })
    }
}

/// Parameters of a (local or global) Maxwellian. `T` carries energy units
/// (Boltzmann's constant is one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellianParams {
    pub n: f64,
    pub u_bar: Vec3,
    pub temperature: f64,
}

impl MaxwellianParams {
    pub fn new(n: f64, u_bar: Vec3, temperature: f64) -> Result<Self> {
        if !(n >= 0.0) {
            return Err(Error::InvalidParameter(format!("number density must be >= 0, got {n}")));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(Self { n, u_bar, temperature })
    }
}

/// Samples `n (m / 2πT)^{d/2} exp(-m |v - u|² / 2T)` at the grid nodes.
pub fn maxwellian(params: &MaxwellianParams, species: &SpeciesSpec, grid: &VelocityGrid) -> Vec<f64> {
    let m = species.mass;
    let t = params.temperature;
    let reach = norm(&params.u_bar) + 4.0 * (t / m).sqrt();
    if reach > grid.v_max() {
        log::warn!(
            "Maxwellian for species `{}` reaches |u|+4σ = {reach:.3} beyond v_max = {:.3}",
            species.label,
            grid.v_max()
        );
    }
    if params.n == 0.0 {
        return vec![0.0; grid.len()];
    }
    let d = grid.dim() as f64;
    let pref = params.n * (m / (2.0 * PI * t)).powf(0.5 * d);
    let a = m / (2.0 * t);
    grid.nodes()
        .iter()
        .map(|v| {
            let c = sub(v, &params.u_bar);
            pref * (-a * dot(&c, &c)).exp()
        })
        .collect()
}

/// Pointwise value of the Maxwellian with the given parameters.
pub fn maxwellian_density(params: &MaxwellianParams, mass: f64, dim: usize, v: &Vec3) -> f64 {
    let t = params.temperature;
    let c = sub(v, &params.u_bar);
    params.n * (mass / (2.0 * PI * t)).powf(0.5 * dim as f64) * (-mass / (2.0 * t) * dot(&c, &c)).exp()
}

/// Hydrodynamic moments of one species at one spatial location.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub n: f64,
    pub rho: f64,
    pub u_bar: Vec3,
    pub temperature: f64,
    pub pressure: f64,
}

impl Moments {
    pub fn as_maxwellian(&self) -> Option<MaxwellianParams> {
        (self.n > VACUUM_FLOOR && self.temperature > 0.0).then_some(MaxwellianParams {
            n: self.n,
            u_bar: self.u_bar,
            temperature: self.temperature,
        })
    }
}

pub fn moments(f: &[f64], species: &SpeciesSpec, grid: &VelocityGrid) -> Moments {
    moments_with(f, species, grid, Summation::Ordered)
}

/// Moments `n = Σ w f`, `ρ ū = Σ w m v f`, `T = m/(d n) Σ w |v-ū|² f`,
/// `P = n T`. Vacuum (n below the floor) yields zero velocity and temperature.
pub fn moments_with(f: &[f64], species: &SpeciesSpec, grid: &VelocityGrid, mode: Summation) -> Moments {
    let m = species.mass;
    let n = grid.integrate(f, |_| 1.0, mode);
    if n < VACUUM_FLOOR {
        return Moments { n: n.max(0.0), rho: m * n.max(0.0), ..Default::default() };
    }
    let mut u = [0.0; 3];
    for (a, ua) in u.iter_mut().enumerate().take(grid.dim()) {
        *ua = grid.integrate(f, |v| v[a], mode) / n;
    }
    let d = grid.dim() as f64;
    let spread = grid.integrate(
        f,
        |v| {
            let c = sub(v, &u);
            dot(&c, &c)
        },
        mode,
    );
    let temperature = m * spread / (d * n);
    Moments { n, rho: m * n, u_bar: u, temperature, pressure: n * temperature }
}

/// Aggregated mixture moments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MixtureMoments {
    pub n: f64,
    pub rho: f64,
    pub u_bar: Vec3,
    pub pressure: f64,
    pub temperature: f64,
}

/// Mixture totals: `n`, `ρ`, `ρū` and `P` are sums over species; the
/// temperature sums each species' centred second moment about the mixture
/// velocity, `T = Σ_p m_p/(d n_p) Σ w |v-ū|² f_p`.
pub fn mixture_moments(
    per_species: &[(Moments, SpeciesSpec)],
    f_list: &[&[f64]],
    grid: &VelocityGrid,
) -> Result<MixtureMoments> {
    if per_species.is_empty() || per_species.len() != f_list.len() {
        return Err(Error::InvalidParameter(
            "mixture_moments needs one distribution per species and at least one species".into(),
        ));
    }
    let mut out = MixtureMoments::default();
    let mut mom = [0.0; 3];
    for (m, _) in per_species {
        out.n += m.n;
        out.rho += m.rho;
        out.pressure += m.pressure;
        for a in 0..3 {
            mom[a] += m.rho * m.u_bar[a];
        }
    }
    if out.rho > 0.0 {
        for a in 0..3 {
            out.u_bar[a] = mom[a] / out.rho;
        }
    }
    let d = grid.dim() as f64;
    let u = out.u_bar;
    for ((m, spec), f) in per_species.iter().zip(f_list) {
        if m.n < VACUUM_FLOOR {
            continue;
        }
        let spread = grid.integrate(
            f,
            |v| {
                let c = sub(v, &u);
                dot(&c, &c)
            },
            Summation::Ordered,
        );
        out.temperature += spec.mass * spread / (d * m.n);
    }
    Ok(out)
}

/// `‖f − M[f]‖_{L¹_v}` where `M[f]` is the Maxwellian carrying the moments of `f`.
pub fn local_equilibrium_distance(f: &[f64], species: &SpeciesSpec, grid: &VelocityGrid) -> f64 {
    let m = moments(f, species, grid);
    match m.as_maxwellian() {
        Some(p) => {
            let eq = sample_maxwellian_quiet(&p, species, grid);
            grid.node_weight() * f.iter().zip(&eq).map(|(a, b)| (a - b).abs()).sum::<f64>()
        }
        None => grid.node_weight() * f.iter().map(|a| a.abs()).sum::<f64>(),
    }
}

/// Maxwellian sampling without the truncation warning, for internal
/// re-projection of states whose tails were already checked.
pub(crate) fn sample_maxwellian_quiet(
    params: &MaxwellianParams,
    species: &SpeciesSpec,
    grid: &VelocityGrid,
) -> Vec<f64> {
    let m = species.mass;
    let t = params.temperature;
    let d = grid.dim() as f64;
    let pref = params.n * (m / (2.0 * PI * t)).powf(0.5 * d);
    let a = m / (2.0 * t);
    grid.nodes()
        .iter()
        .map(|v| {
            let c = sub(v, &params.u_bar);
            pref * (-a * dot(&c, &c)).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> SpeciesSpec {
        SpeciesSpec::new(1.0, "a").unwrap()
    }

    #[test]
    fn build_grid_2d() {
        let g = VelocityGrid::new(2, 16, 6.0, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.angular_nodes().len(), 16);
        let s: f64 = g.angular_weights().iter().sum();
        assert_relative_eq!(s, 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(g.dv(), 0.75);
    }

    #[test]
    fn build_grid_3d() {
        let g = VelocityGrid::new(3, 8, 6.0, 32).unwrap();
        assert_eq!(g.len(), 512);
        let s: f64 = g.angular_weights().iter().sum();
        assert!((s - 4.0 * PI).abs() < 1e-12);
        for d in g.angular_nodes() {
            assert!((norm(d) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(VelocityGrid::new(2, 15, 6.0, 16), Err(Error::InvalidGrid(_))));
        assert!(VelocityGrid::new(2, 16, 0.0, 16).is_err());
        assert!(VelocityGrid::new(2, 16, -1.0, 16).is_err());
        assert!(VelocityGrid::new(4, 16, 6.0, 16).is_err());
        assert!(VelocityGrid::new(2, 16, 6.0, 7).is_err());
    }

    #[test]
    fn grid_symmetry() {
        let g = VelocityGrid::new(3, 8, 5.0, 32).unwrap();
        for i in 0..g.len() {
            let v = g.node(i);
            let w = g.node(g.opposite_index(i));
            for a in 0..3 {
                assert_eq!(v[a], -w[a]);
            }
            let m = g.node(g.mirror_index(i, 0));
            assert_eq!(m[0], -v[0]);
            assert_eq!(m[1], v[1]);
        }
        let mut s = [0.0; 3];
        for (d, w) in g.angular_nodes().iter().zip(g.angular_weights()) {
            for a in 0..3 {
                s[a] += w * d[a];
            }
        }
        assert!(s.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn maxwellian_at_origin() {
        let p = MaxwellianParams::new(1.0, [0.0; 3], 1.0).unwrap();
        assert_relative_eq!(maxwellian_density(&p, 1.0, 2, &[0.0; 3]), 1.0 / (2.0 * PI), epsilon = 1e-16);
        let g = VelocityGrid::new(2, 16, 6.0, 16).unwrap();
        let f = maxwellian(&p, &unit(), &g);
        assert_eq!(f[40], maxwellian_density(&p, 1.0, 2, g.node(40)));
    }

    #[test]
    fn maxwellian_zero_density() {
        let g = VelocityGrid::new(2, 16, 6.0, 16).unwrap();
        let p = MaxwellianParams::new(0.0, [0.3, 0.0, 0.0], 1.0).unwrap();
        assert!(maxwellian(&p, &unit(), &g).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn moments_recover_parameters() {
        let g = VelocityGrid::new(2, 32, 8.0, 16).unwrap();
        let p = MaxwellianParams::new(2.0, [0.3, 0.0, 0.0], 0.8).unwrap();
        let m = moments(&maxwellian(&p, &unit(), &g), &unit(), &g);
        assert!((m.n - 2.0).abs() < 1e-6);
        assert!((m.u_bar[0] - 0.3).abs() < 1e-6);
        assert!(m.u_bar[1].abs() < 1e-12);
        assert!((m.temperature - 0.8).abs() < 1e-6);
        assert_relative_eq!(m.pressure, m.n * m.temperature);
        assert_relative_eq!(m.rho, m.n);
    }

    #[test]
    fn vacuum_moments() {
        let g = VelocityGrid::new(2, 16, 6.0, 16).unwrap();
        let m = moments(&vec![0.0; g.len()], &unit(), &g);
        assert_eq!(m, Moments::default());
    }

    #[test]
    fn bimodal_temperature() {
        let g = VelocityGrid::new(2, 32, 8.0, 16).unwrap();
        let s = unit();
        let u0 = 1.2;
        let t0 = 0.7;
        let a = maxwellian(&MaxwellianParams::new(0.5, [u0, 0.0, 0.0], t0).unwrap(), &s, &g);
        let b = maxwellian(&MaxwellianParams::new(0.5, [-u0, 0.0, 0.0], t0).unwrap(), &s, &g);
        let f: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let m = moments(&f, &s, &g);
        assert!(m.u_bar[0].abs() < 1e-12);
        // second moment of the mixture: T0 + m u0² / dim
        assert!((m.temperature - (t0 + u0 * u0 / 2.0)).abs() < 1e-6);
    }

    #[test]
    fn mixture_mass_weighted_velocity() {
        let g = VelocityGrid::new(2, 16, 6.0, 16).unwrap();
        let s1 = SpeciesSpec::new(1.0, "a").unwrap();
        let s2 = SpeciesSpec::new(3.0, "b").unwrap();
        let f1 = maxwellian(&MaxwellianParams::new(1.0, [1.0, 0.0, 0.0], 1.0).unwrap(), &s1, &g);
        let f2 = maxwellian(&MaxwellianParams::new(1.0, [-1.0, 0.0, 0.0], 3.0).unwrap(), &s2, &g);
        let m1 = moments(&f1, &s1, &g);
        let m2 = moments(&f2, &s2, &g);
        let mix = mixture_moments(&[(m1, s1), (m2, s2)], &[&f1, &f2], &g).unwrap();
        let expected = (m1.rho * m1.u_bar[0] + m2.rho * m2.u_bar[0]) / (m1.rho + m2.rho);
        assert_eq!(mix.u_bar[0], expected);
        assert!((mix.u_bar[0] + 0.5).abs() < 1e-6);
        assert_eq!(mix.pressure, m1.pressure + m2.pressure);
    }

    #[test]
    fn mixture_of_one() {
        let g = VelocityGrid::new(2, 16, 6.0, 16).unwrap();
        let s = unit();
        let f = maxwellian(&MaxwellianParams::new(1.3, [0.2, -0.1, 0.0], 0.9).unwrap(), &s, &g);
        let m = moments(&f, &s, &g);
        let mix = mixture_moments(&[(m, s)], &[&f], &g).unwrap();
        assert_relative_eq!(mix.n, m.n);
        assert_relative_eq!(mix.temperature, m.temperature, epsilon = 1e-14);
        assert_relative_eq!(mix.u_bar[0], m.u_bar[0], epsilon = 1e-15);
        assert!(mixture_moments(&[], &[], &g).is_err());
    }

    #[test]
    fn equilibrium_distance() {
        let g = VelocityGrid::new(2, 24, 7.0, 16).unwrap();
        let s = unit();
        let f = maxwellian(&MaxwellianParams::new(1.0, [0.4, 0.0, 0.0], 1.1).unwrap(), &s, &g);
        // limited by the e^{-20} tail truncation
        assert!(local_equilibrium_distance(&f, &s, &g) <= 1e-8);
        let a = maxwellian(&MaxwellianParams::new(0.5, [1.5, 0.0, 0.0], 0.6).unwrap(), &s, &g);
        let b = maxwellian(&MaxwellianParams::new(0.5, [-1.5, 0.0, 0.0], 0.6).unwrap(), &s, &g);
        let bi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert!(local_equilibrium_distance(&bi, &s, &g) > 0.1);
    }

    #[test]
    fn interpolation_reproduces_linear_data() {
        let g = VelocityGrid::new(2, 16, 6.0, 16).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|v| 2.0 + 0.5 * v[0] - 0.25 * v[1]).collect();
        let v = [0.123, -1.7, 0.0];
        assert_relative_eq!(g.interpolate(&f, &v), 2.0 + 0.5 * v[0] - 0.25 * v[1], epsilon = 1e-13);
        assert_eq!(g.interpolate(&f, &[9.0, 0.0, 0.0]), 0.0);
        // exactly at a node
        assert_relative_eq!(g.interpolate(&f, g.node(37)), f[37], epsilon = 1e-13);
    }
}
