//! Collision kernels, post-collision velocity maps, the discrete strong-form
//! collision operator `Q^{pq}`, its conservative projection, weak moments and
//! the H-functional.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::velocity_space::{dot, norm, sub, SpeciesSpec, Vec3, VelocityGrid, NEGATIVITY_TOLERANCE};

const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    PseudoMaxwellian,
    Vhs,
    HardSphere,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::PseudoMaxwellian => "pseudo_maxwellian",
            KernelFamily::Vhs => "vhs",
            KernelFamily::HardSphere => "hard_sphere",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pseudo_maxwellian" | "pseudo-maxwellian" | "maxwellian" => Ok(Self::PseudoMaxwellian),
            "vhs" => Ok(Self::Vhs),
            "hard_sphere" | "hard-sphere" => Ok(Self::HardSphere),
            other => Err(Error::InvalidParameter(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Variable-hard-sphere type kernel `B(|w|, θ) = C_γ |w|^γ` with constant
/// angular factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    gamma: f64,
    angular_constant: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, gamma: f64, angular_constant: f64) -> Result<Self> {
        if !(angular_constant > 0.0) || !angular_constant.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "angular constant must be positive, got {angular_constant}"
            )));
        }
        let ok = match family {
            KernelFamily::PseudoMaxwellian => gamma == 0.0,
            KernelFamily::HardSphere => gamma == 1.0,
            KernelFamily::Vhs => (0.0..=1.0).contains(&gamma),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("exponent {gamma} not admissible for {family}")));
        }
        Ok(Self { family, gamma, angular_constant })
    }

    pub fn pseudo_maxwellian(angular_constant: f64) -> Result<Self> {
        Self::new(KernelFamily::PseudoMaxwellian, 0.0, angular_constant)
    }

    pub fn hard_sphere(angular_constant: f64) -> Result<Self> {
        Self::new(KernelFamily::HardSphere, 1.0, angular_constant)
    }

    pub fn vhs(gamma: f64, angular_constant: f64) -> Result<Self> {
        Self::new(KernelFamily::Vhs, gamma, angular_constant)
    }

    /// Kernel whose angular factor integrates to `mass` over `S^{dim-1}`.
    pub fn with_angular_mass(family: KernelFamily, gamma: f64, mass: f64, dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Self::new(family, gamma, mass / crate::velocity_space::sphere_measure(dim))
    }

    /// Exponent of the inverse-power-law potential `Φ ∝ r^{1-k}` that
    /// produces this kernel exponent, `γ = (k − (2d−1)) / (k − 1)`.
    /// Infinite for hard spheres.
    pub fn potential_exponent(&self, dim: usize) -> f64 {
        let d = dim as f64;
        if self.gamma == 1.0 {
            f64::INFINITY
        } else {
            (2.0 * d - 1.0 - self.gamma) / (1.0 - self.gamma)
        }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn angular_constant(&self) -> f64 {
        self.angular_constant
    }

    /// `∫_{S^{d-1}} C_γ dσ`.
    pub fn angular_mass(&self, dim: usize) -> f64 {
        self.angular_constant * crate::velocity_space::sphere_measure(dim)
    }

    #[inline]
    fn speed_factor(&self, rel_speed: f64) -> f64 {
        if self.gamma == 0.0 {
            self.angular_constant
        } else if self.gamma == 1.0 {
            self.angular_constant * rel_speed
        } else {
            self.angular_constant * rel_speed.powf(self.gamma)
        }
    }
}

/// `B(|v−v_*|, θ) = C_γ |v−v_*|^γ`; the angular argument is accepted for
/// interface completeness and does not enter the VHS form.
pub fn kernel_eval(spec: &KernelSpec, rel_speed: f64, _cos_theta: f64) -> f64 {
    spec.speed_factor(rel_speed.max(0.0))
}

fn check_unit(n: &Vec3) -> Result<()> {
    let l = norm(n);
    if (l - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitDirection { norm: l });
    }
    Ok(())
}

/// Post-collision velocities in the σ-representation.
pub fn post_collision_sigma(v: &Vec3, v_star: &Vec3, sigma: &Vec3, m_p: f64, m_q: f64) -> Result<(Vec3, Vec3)> {
    check_unit(sigma)?;
    let m = m_p + m_q;
    let w = norm(&sub(v, v_star));
    let mut vp = [0.0; 3];
    let mut vsp = [0.0; 3];
    for a in 0..3 {
        let center = (m_p * v[a] + m_q * v_star[a]) / m;
        vp[a] = center + m_q / m * w * sigma[a];
        vsp[a] = center - m_p / m * w * sigma[a];
    }
    Ok((vp, vsp))
}

/// Post-collision velocities in the ω-representation.
pub fn post_collision_omega(v: &Vec3, v_star: &Vec3, omega: &Vec3, m_p: f64, m_q: f64) -> Result<(Vec3, Vec3)> {
    check_unit(omega)?;
    let m = m_p + m_q;
    let proj = dot(&sub(v, v_star), omega);
    let mut vp = [0.0; 3];
    let mut vsp = [0.0; 3];
    for a in 0..3 {
        vp[a] = v[a] - 2.0 * m_q / m * proj * omega[a];
        vsp[a] = v_star[a] + 2.0 * m_p / m * proj * omega[a];
    }
    Ok((vp, vsp))
}

/// Species pair and kernel for one collision operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub species_p: SpeciesSpec,
    pub species_q: SpeciesSpec,
    pub kernel: KernelSpec,
    /// `Q^{pp}`: both arguments are the same species.
    pub intra: bool,
}

impl PairSpec {
    pub fn intra(species: SpeciesSpec, kernel: KernelSpec) -> Self {
        Self { species_p: species.clone(), species_q: species, kernel, intra: true }
    }

    pub fn inter(species_p: SpeciesSpec, species_q: SpeciesSpec, kernel: KernelSpec) -> Self {
        Self { species_p, species_q, kernel, intra: false }
    }
}

/// Collision fields of a pair on the velocity grid. For an intra-species
/// pair `q_qp` mirrors `q_pq`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionPair {
    pub spec: PairSpec,
    pub q_pq: Vec<f64>,
    pub q_qp: Vec<f64>,
    /// Projection weights (the distributions the fields were computed from).
    weight_p: Vec<f64>,
    weight_q: Vec<f64>,
    /// Weighted L¹ norm of the last conservative correction.
    pub correction_norm: f64,
    /// Fraction of post-collision evaluations that fell outside the grid.
    pub out_of_domain_fraction: f64,
}

impl CollisionPair {
    /// Pair built from externally supplied fields, e.g. for testing the
    /// projection in isolation.
    pub fn from_fields(spec: PairSpec, q_pq: Vec<f64>, q_qp: Vec<f64>, weight_p: Vec<f64>, weight_q: Vec<f64>) -> Self {
        Self { spec, q_pq, q_qp, weight_p, weight_q, correction_norm: 0.0, out_of_domain_fraction: 0.0 }
    }
}

/// Zero-padded copy of nodal values with one ghost layer per side, so the
/// multilinear stencil never needs per-corner bounds checks.
struct Padded {
    data: Vec<f64>,
    stride: usize,
}

impl Padded {
    fn new(f: &[f64], grid: &VelocityGrid) -> Self {
        let n = grid.nodes_per_axis();
        let s = n + 2;
        let dim = grid.dim();
        let mut data = vec![0.0; s.pow(dim as u32)];
        for (i, &fi) in f.iter().enumerate() {
            let ix = i % n;
            let iy = (i / n) % n;
            let p = if dim == 3 {
                let iz = i / (n * n);
                (iz + 1) * s * s + (iy + 1) * s + ix + 1
            } else {
                (iy + 1) * s + ix + 1
            };
            data[p] = fi;
        }
        Self { data, stride: s }
    }

    /// Bilinear interpolation at index-space point (node k sits at k).
    #[inline(always)]
    fn at2(&self, sx: f64, sy: f64, upper: f64) -> f64 {
        // shifted coordinates are tested after rounding and are non-negative,
        // so truncation is floor
        let (gx, gy) = (sx + 1.0, sy + 1.0);
        if !(gx >= 0.0 && gx < upper + 1.0 && gy >= 0.0 && gy < upper + 1.0) {
            return 0.0;
        }
        let (ix, iy) = (gx as usize, gy as usize);
        let tx = gx - ix as f64;
        let ty = gy - iy as f64;
        let s = self.stride;
        let base = iy * s + ix;
        debug_assert!(base + s + 1 < self.data.len());
        // SAFETY: the range test above bounds both shifted floors to [0, n], so
        // every corner lies inside the (n+2)-wide padded array.
        let (a, b, c, e) = unsafe {
            let d = self.data.as_ptr().add(base);
            (*d, *d.add(1), *d.add(s), *d.add(s + 1))
        };
        (1.0 - ty) * (a + tx * (b - a)) + ty * (c + tx * (e - c))
    }

    #[inline(always)]
    fn at3(&self, sx: f64, sy: f64, sz: f64, upper: f64) -> f64 {
        let (gx, gy, gz) = (sx + 1.0, sy + 1.0, sz + 1.0);
        let top = upper + 1.0;
        if !(gx >= 0.0 && gx < top && gy >= 0.0 && gy < top && gz >= 0.0 && gz < top) {
            return 0.0;
        }
        let (ix, iy, iz) = (gx as usize, gy as usize, gz as usize);
        let tx = gx - ix as f64;
        let ty = gy - iy as f64;
        let tz = gz - iz as f64;
        let s = self.stride;
        let base = iz * s * s + iy * s + ix;
        debug_assert!(base + s * s + s + 1 < self.data.len());
        // SAFETY: as in `at2`, all eight corners are inside the padded array.
        let at = |i: usize| unsafe { *self.data.as_ptr().add(base + i) };
        let lerp = |i: usize| at(i) + tx * (at(i + 1) - at(i));
        let lo = lerp(0) + ty * (lerp(s) - lerp(0));
        let hi = lerp(s * s) + ty * (lerp(s * s + s) - lerp(s * s));
        lo + tz * (hi - lo)
    }
}

/// Angular rule in struct-of-arrays form. For a symmetric pair only one
/// direction of each antipodal couple is kept, with doubled weight.
struct Directions {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    w: Vec<f64>,
}

impl Directions {
    fn new(grid: &VelocityGrid, fold_antipodes: bool) -> Self {
        let dirs = grid.angular_nodes();
        let ws = grid.angular_weights();
        let mut keep: Vec<(Vec3, f64)> = Vec::with_capacity(dirs.len());
        let mut used = vec![false; dirs.len()];
        for k in 0..dirs.len() {
            if used[k] {
                continue;
            }
            used[k] = true;
            let partner = if fold_antipodes {
                (k + 1..dirs.len()).find(|&l| {
                    !used[l] && (0..3).all(|a| (dirs[l][a] + dirs[k][a]).abs() < 1e-12) && ws[l] == ws[k]
                })
            } else {
                None
            };
            match partner {
                Some(l) => {
                    used[l] = true;
                    keep.push((dirs[k], 2.0 * ws[k]));
                }
                None => keep.push((dirs[k], ws[k])),
            }
        }
        Self {
            x: keep.iter().map(|d| d.0[0]).collect(),
            y: keep.iter().map(|d| d.0[1]).collect(),
            z: keep.iter().map(|d| d.0[2]).collect(),
            w: keep.iter().map(|d| d.1).collect(),
        }
    }
}

/// Index-space coordinates of every node.
fn index_coords(grid: &VelocityGrid) -> Vec<Vec3> {
    let inv = 1.0 / grid.dv();
    let vm = grid.v_max();
    grid.nodes()
        .iter()
        .map(|v| {
            let mut s = [0.0; 3];
            for a in 0..grid.dim() {
                s[a] = (v[a] + vm) * inv - 0.5;
            }
            s
        })
        .collect()
}

/// Gain-minus-loss field `Q^{pq}(f_p, f_q)` at every node (before the
/// conservative projection). Returns the field and the number of
/// post-collision evaluations that left the truncated domain.
fn strong_form(
    f_p: &[f64],
    f_q: &[f64],
    m_p: f64,
    m_q: f64,
    kernel: &KernelSpec,
    grid: &VelocityGrid,
    symmetric: bool,
) -> (Vec<f64>, u64) {
    let n = grid.len();
    let dim = grid.dim();
    let pad_p = Padded::new(f_p, grid);
    let pad_q = if symmetric { None } else { Some(Padded::new(f_q, grid)) };
    let pad_q = pad_q.as_ref().unwrap_or(&pad_p);
    let idx = index_coords(grid);
    let nodes = grid.nodes();
    let m = m_p + m_q;
    let cp = m_q / m;
    let cq = m_p / m;
    let inv_h = 1.0 / grid.dv();
    let upper = grid.nodes_per_axis() as f64;
    // domain edge in index space
    let lo = -0.5;
    let hi = upper - 0.5;
    let sphere = grid.sphere_measure();
    let dirs = Directions::new(grid, symmetric);
    let weight = grid.node_weight();
    let outside = |x: f64, y: f64, z: f64| -> bool {
        x < lo || x > hi || y < lo || y > hi || (dim == 3 && (z < lo || z > hi))
    };

    let mut out = vec![0.0; n];
    let mut misses = vec![0u64; n];
    out.par_iter_mut().zip(misses.par_iter_mut()).enumerate().for_each(|(i, (qi, oi))| {
        let v = &nodes[i];
        let si = &idx[i];
        let mut gain = 0.0;
        let mut loss = 0.0;
        let mut miss = 0u64;
        for j in 0..n {
            let r = norm(&sub(v, &nodes[j]));
            let b = kernel.speed_factor(r);
            loss += b * f_q[j];
            let sj = &idx[j];
            let (cx, cy, cz) = (cq * si[0] + cp * sj[0], cq * si[1] + cp * sj[1], cq * si[2] + cp * sj[2]);
            let rp = cp * r * inv_h;
            let rq = cq * r * inv_h;
            // both post-collision points stay inside the ball around the
            // centre; test the farthest reach once
            let reach = rp.max(rq);
            let inside_all = cx - reach >= lo && cx + reach <= hi && cy - reach >= lo && cy + reach <= hi
                && (dim == 2 || (cz - reach >= lo && cz + reach <= hi));
            let mut inner = 0.0;
            if dim == 2 {
                for k in 0..dirs.w.len() {
                    let (dx, dy) = (dirs.x[k], dirs.y[k]);
                    let (px, py, qx, qy) = (cx + rp * dx, cy + rp * dy, cx - rq * dx, cy - rq * dy);
                    if !inside_all && (outside(px, py, 0.0) || outside(qx, qy, 0.0)) {
                        miss += 1;
                    }
                    inner += dirs.w[k] * pad_p.at2(px, py, upper) * pad_q.at2(qx, qy, upper);
                }
            } else {
                for k in 0..dirs.w.len() {
                    let (dx, dy, dz) = (dirs.x[k], dirs.y[k], dirs.z[k]);
                    let (px, py, pz) = (cx + rp * dx, cy + rp * dy, cz + rp * dz);
                    let (qx, qy, qz) = (cx - rq * dx, cy - rq * dy, cz - rq * dz);
                    if !inside_all && (outside(px, py, pz) || outside(qx, qy, qz)) {
                        miss += 1;
                    }
                    inner += dirs.w[k] * pad_p.at3(px, py, pz, upper) * pad_q.at3(qx, qy, qz, upper);
                }
            }
            gain += b * inner;
        }
        *qi = weight * (gain - f_p[i] * sphere * loss);
        *oi = if symmetric { 2 * miss } else { miss };
    });
    (out, misses.iter().sum())
}

/// Loss frequency `ν(v) = Σ_{v_*} w ∫ B dσ f_q(v_*)` at every node.
pub fn loss_frequency(f_q: &[f64], kernel: &KernelSpec, grid: &VelocityGrid) -> Vec<f64> {
    let nodes = grid.nodes();
    let scale = grid.node_weight() * grid.sphere_measure();
    nodes
        .par_iter()
        .map(|v| {
            let mut s = 0.0;
            for (vs, fq) in nodes.iter().zip(f_q) {
                if *fq != 0.0 {
                    s += kernel.speed_factor(norm(&sub(v, vs))) * fq;
                }
            }
            scale * s
        })
        .collect()
}

/// Evaluates `Q^{pq}` and `Q^{qp}` by quadrature of the strong form, with
/// post-collision values obtained by multilinear interpolation (zero outside
/// the truncation). No conservative projection is applied here.
pub fn q_pair(f_p: &[f64], f_q: &[f64], spec: &PairSpec, grid: &VelocityGrid) -> CollisionPair {
    let m_p = spec.species_p.mass;
    let m_q = spec.species_q.mass;
    let evals = (grid.len() * grid.len() * grid.angular_nodes().len()) as f64;
    let (q_pq, q_qp, miss) = if spec.intra {
        let (q, miss) = strong_form(f_p, f_p, m_p, m_p, &spec.kernel, grid, true);
        (q.clone(), q, miss as f64 / evals)
    } else {
        let (a, ma) = strong_form(f_p, f_q, m_p, m_q, &spec.kernel, grid, false);
        let (b, mb) = strong_form(f_q, f_p, m_q, m_p, &spec.kernel, grid, false);
        (a, b, (ma + mb) as f64 / (2.0 * evals))
    };
    CollisionPair {
        spec: spec.clone(),
        q_pq,
        q_qp,
        weight_p: f_p.to_vec(),
        weight_q: if spec.intra { f_p.to_vec() } else { f_q.to_vec() },
        correction_norm: 0.0,
        out_of_domain_fraction: miss,
    }
}

/// The correction at a node is proportional to `f` there, so empty nodes
/// stay empty and the tails cannot be driven negative.
fn projection_weights(f: &[f64]) -> Vec<f64> {
    f.iter().map(|&x| x.max(0.0)).collect()
}

/// Moment constraint rows. Each row is `(coefficients on Q_pq, coefficients
/// on Q_qp)`, scaled to O(1) entries.
fn constraint_rows(spec: &PairSpec, grid: &VelocityGrid) -> Vec<(Vec<f64>, Vec<f64>)> {
    let dim = grid.dim();
    let w = grid.node_weight();
    let vs = grid.v_max();
    let nodes = grid.nodes();
    let n = nodes.len();
    let zeros = vec![0.0; n];
    let ones = vec![w; n];
    let comp = |a: usize| nodes.iter().map(|v| w * v[a] / vs).collect::<Vec<_>>();
    let energy = nodes.iter().map(|v| w * dot(v, v) / (vs * vs)).collect::<Vec<_>>();
    let mut rows = Vec::new();
    if spec.intra {
        rows.push((ones, zeros.clone()));
        for a in 0..dim {
            rows.push((comp(a), zeros.clone()));
        }
        rows.push((energy, zeros));
    } else {
        let mp = spec.species_p.mass;
        let mq = spec.species_q.mass;
        let ms = mp.max(mq);
        rows.push((ones.clone(), zeros.clone()));
        rows.push((zeros, ones));
        for a in 0..dim {
            let c = comp(a);
            rows.push((c.iter().map(|x| x * mp / ms).collect(), c.iter().map(|x| x * mq / ms).collect()));
        }
        rows.push((
            energy.iter().map(|x| x * mp / ms).collect(),
            energy.iter().map(|x| x * mq / ms).collect(),
        ));
    }
    rows
}

/// Smallest change (in the L² norm weighted by the inverse distributions)
/// that makes the pair satisfy the discrete conservation identities:
/// per-species mass, pair momentum and pair energy (for `p = q`: mass,
/// momentum, energy of the single field).
pub fn conservative_fixup(pair: &CollisionPair, grid: &VelocityGrid) -> Result<CollisionPair> {
    let mut out = pair.clone();
    let rows = constraint_rows(&pair.spec, grid);
    let k = rows.len();
    let om_p = projection_weights(&pair.weight_p);
    let om_q = if pair.spec.intra { vec![0.0; om_p.len()] } else { projection_weights(&pair.weight_q) };

    let residual = DVector::from_iterator(
        k,
        rows.iter().map(|(a, b)| {
            let s: f64 = a.iter().zip(&pair.q_pq).map(|(x, y)| x * y).sum();
            let t: f64 = if pair.spec.intra { 0.0 } else { b.iter().zip(&pair.q_qp).map(|(x, y)| x * y).sum() };
            s + t
        }),
    );
    let field_scale = pair.q_pq.iter().chain(&pair.q_qp).fold(0.0f64, |a, b| a.max(b.abs()));
    if field_scale == 0.0 {
        out.correction_norm = 0.0;
        return Ok(out);
    }

    let mut gram = DMatrix::<f64>::zeros(k, k);
    for r in 0..k {
        for c in r..k {
            let mut s = 0.0;
            for i in 0..om_p.len() {
                s += rows[r].0[i] * om_p[i] * rows[c].0[i] + rows[r].1[i] * om_q[i] * rows[c].1[i];
            }
            gram[(r, c)] = s;
            gram[(c, r)] = s;
        }
    }
    // Jacobi scaling so the singularity test is independent of row scale.
    let diag: Vec<f64> = (0..k).map(|r| gram[(r, r)]).collect();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    if dmax == 0.0 {
        return Err(Error::SingularConstraints { ratio: 0.0 });
    }
    let mut active = Vec::new();
    for (r, &d) in diag.iter().enumerate() {
        if d > 0.0 {
            active.push(r);
        } else if residual[r].abs() > 0.0 {
            return Err(Error::SingularConstraints { ratio: 0.0 });
        }
    }
    let ka = active.len();
    let scaled = DMatrix::from_fn(ka, ka, |r, c| {
        let (ir, ic) = (active[r], active[c]);
        gram[(ir, ic)] / (diag[ir] * diag[ic]).sqrt()
    });
    let rhs = DVector::from_fn(ka, |r, _| -residual[active[r]] / diag[active[r]].sqrt());
    let eig = scaled.clone().symmetric_eigenvalues();
    let emax = eig.iter().cloned().fold(0.0f64, f64::max);
    let emin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = emin / emax;
    if !(ratio > 1e-13) {
        return Err(Error::SingularConstraints { ratio });
    }
    let chol = scaled.cholesky().ok_or(Error::SingularConstraints { ratio })?;
    let y = chol.solve(&rhs);
    let mut lambda = vec![0.0; k];
    for (r, &ir) in active.iter().enumerate() {
        lambda[ir] = y[r] / diag[ir].sqrt();
    }

    let w = grid.node_weight();
    let mut corr = 0.0;
    for i in 0..om_p.len() {
        let mut dp = 0.0;
        let mut dq = 0.0;
        for (r, l) in lambda.iter().enumerate() {
            dp += rows[r].0[i] * l;
            dq += rows[r].1[i] * l;
        }
        dp *= om_p[i];
        dq *= om_q[i];
        out.q_pq[i] += dp;
        corr += w * dp.abs();
        if !pair.spec.intra {
            out.q_qp[i] += dq;
            corr += w * dq.abs();
        }
    }
    if pair.spec.intra {
        out.q_qp.clone_from(&out.q_pq);
    }
    out.correction_norm = corr;
    Ok(out)
}

/// Test functions of the weak form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFn {
    One,
    /// Component `axis` of `v`.
    Velocity(usize),
    SpeedSq,
}

impl FromStr for TestFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(Self::One),
            "v_sq" => Ok(Self::SpeedSq),
            "v" | "v_x" => Ok(Self::Velocity(0)),
            "v_y" => Ok(Self::Velocity(1)),
            "v_z" => Ok(Self::Velocity(2)),
            other => Err(Error::UnknownTestFunction(other.to_string())),
        }
    }
}

/// Which field(s) of a pair a weak moment is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeciesSelector {
    P,
    Q,
    /// `m_p ∫φ Q^{pq} + m_q ∫φ Q^{qp}` (for `One`: the unweighted sum).
    PairSum,
}

/// `∫ φ(v) Q dv` by grid quadrature.
pub fn weak_moment(pair: &CollisionPair, test_fn: TestFn, selector: SpeciesSelector, grid: &VelocityGrid) -> Result<f64> {
    let phi = |v: &Vec3| -> f64 {
        match test_fn {
            TestFn::One => 1.0,
            TestFn::Velocity(a) => v[a],
            TestFn::SpeedSq => dot(v, v),
        }
    };
    if let TestFn::Velocity(a) = test_fn {
        if a >= grid.dim() {
            return Err(Error::UnknownTestFunction(format!("v component {a} in dimension {}", grid.dim())));
        }
    }
    let ip = grid.integrate(&pair.q_pq, phi, Default::default());
    let iq = grid.integrate(&pair.q_qp, phi, Default::default());
    Ok(match selector {
        SpeciesSelector::P => ip,
        SpeciesSelector::Q => iq,
        SpeciesSelector::PairSum => {
            if pair.spec.intra {
                ip
            } else if test_fn == TestFn::One {
                ip + iq
            } else {
                pair.spec.species_p.mass * ip + pair.spec.species_q.mass * iq
            }
        }
    })
}

/// Boltzmann's H-functional `Σ_p Σ_v w f_p log f_p`, with `0 log 0 = 0`.
pub fn h_functional(f_list: &[&[f64]], grid: &VelocityGrid) -> Result<f64> {
    let mut h = 0.0;
    for f in f_list {
        for (i, &x) in f.iter().enumerate() {
            if x < -NEGATIVITY_TOLERANCE {
                return Err(Error::NegativeDistribution { node: i, value: x });
            }
            if x > 0.0 {
                h += x * x.ln();
            }
        }
    }
    Ok(h * grid.node_weight())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity_space::{maxwellian, moments, MaxwellianParams};
    use std::f64::consts::PI;

    fn grid(n: usize) -> VelocityGrid {
        VelocityGrid::new(2, n, 6.0, 16).unwrap()
    }

    #[test]
    fn sigma_map_identity_and_swap() {
        let v = [1.0, 0.5, 0.0];
        let vs = [-0.3, 0.2, 0.0];
        let w = sub(&v, &vs);
        let r = norm(&w);
        let s = [w[0] / r, w[1] / r, 0.0];
        let (a, b) = post_collision_sigma(&v, &vs, &s, 1.0, 1.0).unwrap();
        for k in 0..3 {
            assert!((a[k] - v[k]).abs() < 1e-15 && (b[k] - vs[k]).abs() < 1e-15);
        }
        let (a, b) = post_collision_sigma(&v, &vs, &[-s[0], -s[1], 0.0], 1.0, 1.0).unwrap();
        for k in 0..3 {
            assert!((a[k] - vs[k]).abs() < 1e-15 && (b[k] - v[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_unit_directions() {
        let z = [0.0; 3];
        assert!(matches!(
            post_collision_sigma(&z, &z, &[1.0, 1.0, 0.0], 1.0, 1.0),
            Err(Error::NonUnitDirection { .. })
        ));
        assert!(post_collision_omega(&z, &z, &[0.5, 0.0, 0.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn omega_map_limits() {
        let v = [1.0, 0.0, 0.0];
        let vs = [0.0, 0.0, 0.0];
        let (a, b) = post_collision_omega(&v, &vs, &[0.0, 1.0, 0.0], 1.0, 2.0).unwrap();
        assert_eq!((a, b), (v, vs));
        let (a, b) = post_collision_omega(&v, &vs, &[1.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!((a, b), (vs, v));
    }

    #[test]
    fn kernel_values() {
        let pm = KernelSpec::pseudo_maxwellian(0.7).unwrap();
        assert_eq!(kernel_eval(&pm, 3.0, 0.2), 0.7);
        assert_eq!(kernel_eval(&pm, 0.0, 0.2), 0.7);
        let hs = KernelSpec::hard_sphere(1.0).unwrap();
        assert_eq!(kernel_eval(&hs, 2.0, -1.0), 2.0);
        assert_eq!(kernel_eval(&hs, 0.0, 0.0), 0.0);
        let vhs = KernelSpec::vhs(0.5, 1.0).unwrap();
        assert_eq!(kernel_eval(&vhs, 0.0, 0.0), 0.0);
        assert!((kernel_eval(&vhs, 4.0, 0.0) - 2.0).abs() < 1e-15);
        assert!(KernelSpec::new(KernelFamily::HardSphere, 0.5, 1.0).is_err());
        assert!(KernelSpec::vhs(1.5, 1.0).is_err());
        assert!(KernelSpec::pseudo_maxwellian(0.0).is_err());
        // Maxwellian molecules in 3D: k = 5
        assert_eq!(pm.potential_exponent(3), 5.0);
        let unit = KernelSpec::with_angular_mass(KernelFamily::PseudoMaxwellian, 0.0, 1.0, 2).unwrap();
        assert!((unit.angular_constant() - 1.0 / (2.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn test_fn_ids() {
        assert_eq!("one".parse::<TestFn>().unwrap(), TestFn::One);
        assert_eq!("v_sq".parse::<TestFn>().unwrap(), TestFn::SpeedSq);
        assert!(matches!("v_cubed".parse::<TestFn>(), Err(Error::UnknownTestFunction(_))));
    }

    #[test]
    fn h_functional_conventions() {
        let g = grid(16);
        let z = vec![0.0; g.len()];
        assert_eq!(h_functional(&[&z], &g).unwrap(), 0.0);
        let mut neg = z.clone();
        neg[3] = -1e-10;
        assert!(matches!(h_functional(&[&neg], &g), Err(Error::NegativeDistribution { node: 3, .. })));
        neg[3] = -1e-15;
        assert_eq!(h_functional(&[&neg], &g).unwrap(), 0.0);
    }

    #[test]
    fn h_of_maxwellian() {
        let g = VelocityGrid::new(2, 32, 8.0, 16).unwrap();
        let s = SpeciesSpec::new(1.0, "a").unwrap();
        let (n, t) = (1.7, 0.9);
        let f = maxwellian(&MaxwellianParams::new(n, [0.2, 0.1, 0.0], t).unwrap(), &s, &g);
        let h = h_functional(&[&f], &g).unwrap();
        // ∫ M log M = n (log n − log(2πT) − 1) for m = 1, d = 2
        let exact = n * (n.ln() - (2.0 * PI * t).ln() - 1.0);
        assert!((h - exact).abs() < 1e-8, "{h} vs {exact}");
        let h2 = h_functional(&[&f, &f], &g).unwrap();
        assert!((h2 - 2.0 * h).abs() < 1e-14 * h.abs());
    }

    #[test]
    fn fixup_enforces_identities() {
        let g = grid(16);
        let s1 = SpeciesSpec::new(1.0, "a").unwrap();
        let s2 = SpeciesSpec::new(2.0, "b").unwrap();
        let k = KernelSpec::with_angular_mass(KernelFamily::HardSphere, 1.0, 1.0, 2).unwrap();
        let f1 = maxwellian(&MaxwellianParams::new(1.0, [0.5, 0.0, 0.0], 1.0).unwrap(), &s1, &g);
        let f2 = maxwellian(&MaxwellianParams::new(0.7, [-0.4, 0.2, 0.0], 0.8).unwrap(), &s2, &g);
        let spec = PairSpec::inter(s1, s2, k);
        let raw = q_pair(&f1, &f2, &spec, &g);
        let fixed = conservative_fixup(&raw, &g).unwrap();
        for sel in [SpeciesSelector::P, SpeciesSelector::Q] {
            assert!(weak_moment(&fixed, TestFn::One, sel, &g).unwrap().abs() < 1e-12);
        }
        for t in [TestFn::Velocity(0), TestFn::Velocity(1), TestFn::SpeedSq] {
            assert!(weak_moment(&fixed, t, SpeciesSelector::PairSum, &g).unwrap().abs() < 1e-12);
        }
        assert!(fixed.correction_norm > 0.0);
        // idempotence
        let again = conservative_fixup(&fixed, &g).unwrap();
        assert!(again.correction_norm <= 1e-14);
        for (a, b) in again.q_pq.iter().zip(&fixed.q_pq) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn intra_fixup_and_vacuum() {
        let g = grid(16);
        let s = SpeciesSpec::new(1.0, "a").unwrap();
        let k = KernelSpec::with_angular_mass(KernelFamily::PseudoMaxwellian, 0.0, 1.0, 2).unwrap();
        let spec = PairSpec::intra(s.clone(), k);
        let a = maxwellian(&MaxwellianParams::new(0.5, [1.5, 0.0, 0.0], 0.6).unwrap(), &s, &g);
        let b = maxwellian(&MaxwellianParams::new(0.5, [-1.5, 0.3, 0.0], 0.6).unwrap(), &s, &g);
        let f: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let fixed = conservative_fixup(&q_pair(&f, &f, &spec, &g), &g).unwrap();
        for t in [TestFn::One, TestFn::Velocity(0), TestFn::Velocity(1), TestFn::SpeedSq] {
            assert!(weak_moment(&fixed, t, SpeciesSelector::P, &g).unwrap().abs() < 1e-12);
        }
        let zero = vec![0.0; g.len()];
        let vac = conservative_fixup(&q_pair(&zero, &zero, &spec, &g), &g).unwrap();
        assert!(vac.q_pq.iter().all(|&x| x == 0.0));
        let _ = moments(&f, &s, &g);
    }

    #[test]
    fn loss_frequency_pseudo_maxwellian_is_density() {
        let g = grid(16);
        let s = SpeciesSpec::new(1.0, "a").unwrap();
        let k = KernelSpec::with_angular_mass(KernelFamily::PseudoMaxwellian, 0.0, 1.0, 2).unwrap();
        let f = maxwellian(&MaxwellianParams::new(1.3, [0.0; 3], 1.0).unwrap(), &s, &g);
        let nu = loss_frequency(&f, &k, &g);
        let n = moments(&f, &s, &g).n;
        assert!(nu.iter().all(|x| (x - n).abs() < 1e-12));
    }
}
