//! Validation suite. Every check measures one number and compares it with a
//! tolerance; checks that share expensive runs are grouped.

use std::f64::consts::PI;

use anyhow::{Context as _, Result};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Serialize, Serializer};

use mixkin_core::collision_ops::{
    conservative_fixup, q_pair, weak_moment, CollisionPair, KernelFamily, KernelSpec, PairSpec, SpeciesSelector,
    TestFn,
};
use mixkin_core::exchange_rates::{
    rate_hard_sphere_closed, rate_pseudo_maxwellian, rate_quadrature_oracle, xi_oracle, ExchangeContext,
};
use mixkin_core::kinetic_solver::{run, KineticState, KineticSystem, RunSettings};
use mixkin_core::twophase::{
    bn_cfl_dt, bn_step, conserved_from_primitive, euler_mix_cfl_dt, euler_mix_step, primitive_from_conserved,
    rdt_cfl_dt, rdt_step, BnState, EosSpec, EulerMixState, Friction, InterfacePressure, MacroBc, RelaxationSpec,
    TwoPhaseConserved, TwoPhasePrimitive,
};
use mixkin_core::velocity_space::{
    local_equilibrium_distance, maxwellian, moments, norm, sub, MaxwellianParams, SpeciesSpec, Vec3, VelocityGrid,
};

use crate::config::{parse_config, ConfigError, Mode, RunConfig};
use crate::limit_study::{fit_decay_rate, run_limit_study};
use crate::output::{Field, RunOutput};

/// Acceptance region of a measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tol {
    AtMost(f64),
    AtLeast(f64),
    /// Strictly below.
    Below(f64),
    /// Strictly above.
    Above(f64),
    Within(f64, f64),
}

impl Tol {
    pub fn accepts(&self, x: f64) -> bool {
        match *self {
            Tol::AtMost(b) => x <= b,
            Tol::AtLeast(b) => x >= b,
            Tol::Below(b) => x < b,
            Tol::Above(b) => x > b,
            Tol::Within(lo, hi) => x >= lo && x <= hi,
        }
    }

    fn with_override(self, key_suffix: Option<&str>, v: f64) -> Option<Self> {
        Some(match (self, key_suffix) {
            (Tol::AtMost(_), None) => Tol::AtMost(v),
            (Tol::AtLeast(_), None) => Tol::AtLeast(v),
            (Tol::Below(_), None) => Tol::Below(v),
            (Tol::Above(_), None) => Tol::Above(v),
            (Tol::Within(_, hi), Some("min")) => Tol::Within(v, hi),
            (Tol::Within(lo, _), Some("max")) => Tol::Within(lo, v),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

fn finite_or_string<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&x.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check_id: String,
    pub status: Status,
    #[serde(serialize_with = "finite_or_string")]
    pub measured: f64,
    pub tolerance: Tol,
}

/// Shared state of one suite run.
pub struct Ctx {
    pub seed: u64,
    /// Rows of the exchange-rate comparison table.
    pub exchange_rows: Vec<Vec<Field>>,
}

type Runner = fn(&mut Ctx) -> Result<Vec<f64>>;

struct Group {
    checks: &'static [(&'static str, Tol)],
    run: Runner,
}

const GROUPS: &[Group] = &[
    Group { checks: &[("collision.invariants", Tol::AtMost(1e-12))], run: collision_invariants },
    Group { checks: &[("collision.equilibrium_annihilation", Tol::AtLeast(3.0))], run: equilibrium_annihilation },
    Group {
        checks: &[
            ("exchange.pseudo_maxwellian", Tol::AtMost(1e-8)),
            ("exchange.hard_sphere", Tol::AtMost(1e-4)),
            ("exchange.antisymmetry", Tol::AtMost(1e-10)),
            ("exchange.galilean", Tol::AtMost(1e-10)),
        ],
        run: exchange_checks,
    },
    Group {
        checks: &[("kinetic.h_theorem.slack", Tol::AtMost(1.0)), ("kinetic.h_theorem.refinement", Tol::AtLeast(2.0))],
        run: h_theorem,
    },
    Group { checks: &[("kinetic.friction_rate", Tol::AtMost(0.05))], run: friction_rate },
    Group {
        checks: &[
            ("kinetic.two_timescale.first", Tol::Within(5.0, 20.0)),
            ("kinetic.two_timescale.second", Tol::Within(5.0, 20.0)),
        ],
        run: two_timescale,
    },
    Group { checks: &[("twophase.conservation", Tol::AtMost(1e-13))], run: rdt_conservation },
    Group { checks: &[("twophase.friction_0d", Tol::AtMost(1e-6))], run: friction_0d },
    Group {
        checks: &[
            ("twophase.pressure_relaxation.monotone", Tol::AtMost(0.0)),
            ("twophase.pressure_relaxation.direction", Tol::Above(0.0)),
        ],
        run: pressure_relaxation,
    },
    Group { checks: &[("twophase.pressure_enthalpy", Tol::AtMost(1e-8))], run: pressure_enthalpy },
    Group { checks: &[("twophase.euler_reduction", Tol::AtMost(1e-12))], run: euler_reduction },
    Group { checks: &[("twophase.bn_rdt", Tol::AtMost(1e-10))], run: bn_rdt },
    Group { checks: &[("limit.discrepancy_monotone", Tol::Below(1.0))], run: limit_monotone },
];

/// Ids of every check in suite order.
pub fn check_ids() -> Vec<&'static str> {
    GROUPS.iter().flat_map(|g| g.checks.iter().map(|c| c.0)).collect()
}

fn resolve_tolerance(id: &str, default: Tol, cfg: &RunConfig) -> Tol {
    let overrides = cfg.validation.as_ref().map(|v| &v.tolerances);
    let mut tol = default;
    for (key, &v) in overrides.into_iter().flatten() {
        let suffix = if key == id {
            None
        } else if let Some(s) = key.strip_prefix(id).and_then(|s| s.strip_prefix('.')) {
            Some(s)
        } else {
            continue;
        };
        if let Some(t) = tol.with_override(suffix, v) {
            tol = t;
        }
    }
    tol
}

fn check_overrides(cfg: &RunConfig) -> Result<(), ConfigError> {
    let ids = check_ids();
    for key in cfg.validation.iter().flat_map(|v| v.tolerances.keys()) {
        let known = GROUPS.iter().flat_map(|g| g.checks).any(|&(id, tol)| {
            let suffix = if key == id { Some(None) } else { key.strip_prefix(id).and_then(|s| s.strip_prefix('.')).map(Some) };
            suffix.is_some_and(|s| tol.with_override(s, 0.0).is_some())
        });
        if !known {
            return Err(ConfigError::Invalid(format!(
                "unknown tolerance key `{key}`; checks are {}",
                ids.join(", ")
            )));
        }
    }
    Ok(())
}

/// Runs every check whose id starts with `prefix`.
pub fn run_suite(cfg: &RunConfig, prefix: &str, ctx: &mut Ctx) -> Result<Vec<CheckResult>> {
    check_overrides(cfg)?;
    let mut out = Vec::new();
    for g in GROUPS {
        if !g.checks.iter().any(|(id, _)| id.starts_with(prefix)) {
            continue;
        }
        let measured = (g.run)(ctx).with_context(|| format!("check group {}", g.checks[0].0))?;
        for (&(id, tol), &x) in g.checks.iter().zip(&measured) {
            if !id.starts_with(prefix) {
                continue;
            }
            let tol = resolve_tolerance(id, tol, cfg);
            let status = if tol.accepts(x) { Status::Pass } else { Status::Fail };
            log::info!("{id}: {status:?} (measured {x:e}, tolerance {tol:?})");
            out.push(CheckResult { check_id: id.to_string(), status, measured: x, tolerance: tol });
        }
    }
    Ok(out)
}

/// Check-id prefix implied by the mode and the `[validation]` block.
pub fn effective_prefix(cfg: &RunConfig) -> Result<String, ConfigError> {
    let user = cfg.validation.as_ref().and_then(|v| v.prefix.clone()).unwrap_or_default();
    let forced = match cfg.mode() {
        Mode::ValidateExchange => "exchange.",
        Mode::ValidateCollision => "collision.",
        _ => "",
    };
    if user.starts_with(forced) {
        Ok(user)
    } else if forced.starts_with(user.as_str()) {
        Ok(forced.to_string())
    } else {
        Err(ConfigError::Invalid(format!("prefix `{user}` selects no checks in mode `{}`", cfg.mode())))
    }
}

/// Rejects unknown tolerance keys and prefixes that select nothing, before
/// any output is created.
pub fn check_config(cfg: &RunConfig) -> Result<(), ConfigError> {
    check_overrides(cfg)?;
    let prefix = effective_prefix(cfg)?;
    if !check_ids().iter().any(|id| id.starts_with(&prefix)) {
        return Err(ConfigError::Invalid(format!("prefix `{prefix}` matches no check")));
    }
    Ok(())
}

/// Runs the suite and writes `validation_report.json` (and the exchange
/// table when exchange checks ran); returns the number of failed checks.
pub fn validation_mode(cfg: &RunConfig, out: &mut RunOutput) -> Result<usize> {
    let prefix = effective_prefix(cfg)?;
    let mut ctx = Ctx { seed: cfg.seed, exchange_rows: Vec::new() };
    let results = run_suite(cfg, &prefix, &mut ctx)?;
    if results.is_empty() {
        return Err(ConfigError::Invalid(format!("prefix `{prefix}` matches no check")).into());
    }
    if !ctx.exchange_rows.is_empty() {
        out.write_csv(
            "exchange_rates.csv",
            &["case_id", "family", "m_p", "m_q", "T", "nu", "rate_closed", "rate_oracle", "rel_err"],
            &ctx.exchange_rows,
        )?;
    }
    out.write_json("validation_report.json", &results)?;
    Ok(results.iter().filter(|r| r.status == Status::Fail).count())
}

// ---------------------------------------------------------------- collision

fn kernel(family: KernelFamily, dim: usize) -> KernelSpec {
    let gamma = if family == KernelFamily::HardSphere { 1.0 } else { 0.0 };
    KernelSpec::with_angular_mass(family, gamma, 1.0, dim).expect("valid kernel")
}

fn mx(n: f64, u: Vec3, t: f64, s: &SpeciesSpec, g: &VelocityGrid) -> Result<Vec<f64>> {
    Ok(maxwellian(&MaxwellianParams::new(n, u, t)?, s, g))
}

fn bimodal(n: f64, shift: Vec3, t: f64, s: &SpeciesSpec, g: &VelocityGrid) -> Result<Vec<f64>> {
    let a = mx(0.5 * n, shift, t, s, g)?;
    let b = mx(0.5 * n, [-shift[0], -shift[1], -shift[2]], t, s, g)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

fn worst_invariant(pair: &CollisionPair, g: &VelocityGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    let axes: Vec<TestFn> = (0..g.dim()).map(TestFn::Velocity).collect();
    if pair.spec.intra {
        for t in [TestFn::One, TestFn::SpeedSq].iter().chain(&axes) {
            worst = worst.max(weak_moment(pair, *t, SpeciesSelector::P, g)?.abs());
        }
    } else {
        for sel in [SpeciesSelector::P, SpeciesSelector::Q] {
            worst = worst.max(weak_moment(pair, TestFn::One, sel, g)?.abs());
        }
        for t in [TestFn::SpeedSq].iter().chain(&axes) {
            worst = worst.max(weak_moment(pair, *t, SpeciesSelector::PairSum, g)?.abs());
        }
    }
    Ok(worst)
}

/// Largest post-fixup collision-invariant moment over 100 random
/// Maxwellian and bimodal pairs.
fn collision_invariants(ctx: &mut Ctx) -> Result<Vec<f64>> {
    let g = VelocityGrid::new(2, 16, 6.0, 8)?;
    let mut rng = StdRng::seed_from_u64(ctx.seed);
    let a = SpeciesSpec::new(1.0, "a")?;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let family = if k % 2 == 0 { KernelFamily::PseudoMaxwellian } else { KernelFamily::HardSphere };
        let kern = kernel(family, 2);
        let b = SpeciesSpec::new(rng.random_range(0.5..3.0), "b")?;
        let mut draw = |s: &SpeciesSpec| -> Result<Vec<f64>> {
            let n = rng.random_range(0.3..2.0);
            let t = rng.random_range(0.5..1.5);
            let u = [rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), 0.0];
            if k < 50 {
                mx(n, u, t, s, &g)
            } else {
                bimodal(n, [u[0] + 0.6 * u[0].signum(), u[1], 0.0], 0.5 * t, s, &g)
            }
        };
        let f1 = draw(&a)?;
        let f2 = draw(&b)?;
        let inter = conservative_fixup(&q_pair(&f1, &f2, &PairSpec::inter(a.clone(), b.clone(), kern), &g), &g)?;
        worst = worst.max(worst_invariant(&inter, &g)?);
        for (f, s) in [(&f1, &a), (&f2, &b)] {
            let intra = conservative_fixup(&q_pair(f, f, &PairSpec::intra(s.clone(), kern), &g), &g)?;
            worst = worst.max(worst_invariant(&intra, &g)?);
        }
    }
    Ok(vec![worst])
}

/// Smallest ratio of `‖Q(M_p, M_q)‖₁ + ‖Q(M_p, M_p)‖₁` between 16 and 32
/// nodes per axis for Maxwellians sharing `(ū, T)`.
fn equilibrium_annihilation(_: &mut Ctx) -> Result<Vec<f64>> {
    let mut ratio = f64::INFINITY;
    for family in [KernelFamily::PseudoMaxwellian, KernelFamily::HardSphere] {
        let mut norms = Vec::new();
        for n in [16, 32] {
            let g = VelocityGrid::new(2, n, 6.0, 8)?;
            let a = SpeciesSpec::new(1.0, "a")?;
            let b = SpeciesSpec::new(2.0, "b")?;
            let k = kernel(family, 2);
            let u = [0.3, -0.2, 0.0];
            let f1 = mx(1.0, u, 1.0, &a, &g)?;
            let f2 = mx(0.6, u, 1.0, &b, &g)?;
            let l1 = |p: &CollisionPair| g.node_weight() * p.q_pq.iter().chain(&p.q_qp).map(|x| x.abs()).sum::<f64>();
            let inter = conservative_fixup(&q_pair(&f1, &f2, &PairSpec::inter(a.clone(), b, k), &g), &g)?;
            let intra = conservative_fixup(&q_pair(&f1, &f1, &PairSpec::intra(a, k), &g), &g)?;
            norms.push(l1(&inter) + l1(&intra));
        }
        ratio = ratio.min(norms[0] / norms[1]);
    }
    Ok(vec![ratio])
}

// ----------------------------------------------------------------- exchange

fn rel(a: &Vec3, b: &Vec3) -> f64 {
    let s = norm(b).max(norm(a));
    if s == 0.0 {
        0.0
    } else {
        norm(&sub(a, b)) / s
    }
}

fn closed(ctx: &ExchangeContext) -> Result<Vec3> {
    Ok(match ctx.kernel.family() {
        KernelFamily::HardSphere => rate_hard_sphere_closed(ctx)?,
        _ => rate_pseudo_maxwellian(ctx)?,
    })
}

fn exchange_checks(c: &mut Ctx) -> Result<Vec<f64>> {
    let mut cases = Vec::new();
    for dim in [2, 3] {
        for (mp, mq) in [(1.0, 3.0), (2.0, 1.0)] {
            for t in [0.8, 1.5] {
                for nu in [0.3, 2.0] {
                    cases.push((dim, KernelFamily::PseudoMaxwellian, mp, mq, t, nu));
                }
            }
        }
    }
    for ratio in [1.0, 2.0, 4.0] {
        for t in [0.5, 1.0, 2.0] {
            for nu in [0.1, 0.5, 1.5] {
                cases.push((3, KernelFamily::HardSphere, 1.0, ratio, t, nu));
            }
        }
    }
    let (mut pm, mut hs, mut anti, mut gal) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (id, &(dim, family, mp, mq, t, nu)) in cases.iter().enumerate() {
        let dir: Vec3 = if dim == 2 { [0.6, 0.8, 0.0] } else { [0.48, 0.6, 0.64] };
        let ctx = ExchangeContext::new(
            dim,
            (mp, 1.3, [nu * dir[0], nu * dir[1], nu * dir[2]]),
            (mq, 0.7, [0.0; 3]),
            t,
            kernel(family, dim),
        )?;
        let a = closed(&ctx)?;
        let b = rate_quadrature_oracle(&ctx)?;
        let e = rel(&a, &b);
        match family {
            KernelFamily::HardSphere => hs = hs.max(e),
            _ => pm = pm.max(e),
        }
        c.exchange_rows.push(vec![
            id.into(),
            family.name().into(),
            mp.into(),
            mq.into(),
            t.into(),
            nu.into(),
            norm(&a).into(),
            norm(&b).into(),
            e.into(),
        ]);
        let sw = ctx.swapped();
        let neg = |v: Vec3| [-v[0], -v[1], -v[2]];
        anti = anti.max(rel(&closed(&sw)?, &neg(a))).max(rel(&rate_quadrature_oracle(&sw)?, &neg(b)));
        let shift: Vec3 = if dim == 2 { [0.7, -0.3, 0.0] } else { [0.7, -0.3, 0.2] };
        let sh = ctx.shifted(&shift);
        gal = gal.max(rel(&closed(&sh)?, &a)).max(rel(&rate_quadrature_oracle(&sh)?, &b));
    }
    Ok(vec![pm, hs, anti, gal])
}

// ------------------------------------------------------------------ kinetic

fn two_species(n: usize, m2: f64, family: KernelFamily) -> Result<(KineticSystem, SpeciesSpec, SpeciesSpec)> {
    let g = VelocityGrid::new(2, n, 6.0, 8)?;
    let a = SpeciesSpec::new(1.0, "a")?;
    let b = SpeciesSpec::new(m2, "b")?;
    let sys = KineticSystem::new(g, vec![a.clone(), b.clone()], kernel(family, 2))?;
    Ok((sys, a, b))
}

type InitFn = fn(&SpeciesSpec, &SpeciesSpec, &VelocityGrid) -> Result<Vec<Vec<f64>>>;

const H_CONFIGS: [(KernelFamily, InitFn); 3] = [
    (KernelFamily::PseudoMaxwellian, |a, b, g| {
        Ok(vec![bimodal(1.0, [1.2, 0.0, 0.0], 0.6, a, g)?, mx(0.7, [0.3, 0.0, 0.0], 1.3, b, g)?])
    }),
    (KernelFamily::HardSphere, |a, b, g| {
        Ok(vec![mx(1.0, [0.5, 0.0, 0.0], 0.7, a, g)?, mx(0.8, [-0.4, 0.2, 0.0], 1.4, b, g)?])
    }),
    (KernelFamily::PseudoMaxwellian, |a, b, g| {
        Ok(vec![bimodal(1.0, [0.0, 1.0, 0.0], 0.5, a, g)?, bimodal(0.6, [0.8, 0.0, 0.0], 0.8, b, g)?])
    }),
];

/// Largest `ΔH / (1e−6 (1+|H|) Δt)` over 20 steps at `0.8·cfl`.
fn worst_entropy_increase(n: usize, family: KernelFamily, init: InitFn) -> Result<f64> {
    let (sys, a, b) = two_species(n, 2.0, family)?;
    let st = KineticState::homogeneous(init(&a, &b, sys.grid())?, 1.0, 1.0)?;
    let dt = 0.8 * sys.cfl_dt(&st);
    let settings = RunSettings { t_final: 20.0 * dt, dt: Some(dt), max_steps: Some(20), snapshot_every: 20, bc: None };
    let tr = run(&sys, st, &settings)?;
    Ok(tr
        .h_series
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (1e-6 * (1.0 + w[0].1.abs()) * (w[1].0 - w[0].0)))
        .fold(f64::NEG_INFINITY, f64::max))
}

fn h_theorem(_: &mut Ctx) -> Result<Vec<f64>> {
    let mut slack = f64::NEG_INFINITY;
    let mut shrink = f64::INFINITY;
    for (family, init) in H_CONFIGS {
        let coarse = worst_entropy_increase(16, family, init)?;
        let fine = worst_entropy_increase(32, family, init)?;
        log::debug!("{family}: normalized entropy increase {coarse:e} (16) {fine:e} (32)");
        slack = slack.max(coarse).max(fine);
        let (c, f) = (coarse.max(0.0), fine.max(0.0));
        shrink = shrink.min(if f > 0.0 { c / f } else { f64::INFINITY });
    }
    Ok(vec![slack, shrink])
}

/// Relative error of the fitted decay rate of `ū₁ − ū₂` against `ξ(ρ₁+ρ₂)`.
fn friction_rate(_: &mut Ctx) -> Result<Vec<f64>> {
    let (sys, a, b) = two_species(32, 2.0, KernelFamily::PseudoMaxwellian)?;
    let g = sys.grid();
    let f = vec![mx(1.0, [0.2, 0.0, 0.0], 1.0, &a, g)?, mx(0.5, [-0.4, 0.0, 0.0], 1.0, &b, g)?];
    let st = KineticState::homogeneous(f, 0.1, 1.0)?;
    let settings = RunSettings { t_final: 1.0, dt: None, max_steps: None, snapshot_every: 1, bc: None };
    let tr = run(&sys, st, &settings)?;
    let (t, w): (Vec<f64>, Vec<f64>) = tr
        .snapshots
        .iter()
        .map(|s| (s.t, moments(&s.f[0][0], &a, g).u_bar[0] - moments(&s.f[0][1], &b, g).u_bar[0]))
        .unzip();
    let xi = xi_oracle(sys.kernel(0, 1).unwrap(), 1.0, 2.0, 1.0, 2)?;
    let rho = moments(&tr.snapshots[0].f[0][0], &a, g).rho + moments(&tr.snapshots[0].f[0][1], &b, g).rho;
    let zeta = xi * rho;
    let fit = fit_decay_rate(&t, &w);
    log::debug!("friction fit {fit} vs {zeta}");
    Ok(vec![(fit - zeta).abs() / zeta])
}

/// Ratios of the post-transient local-equilibrium distance between
/// consecutive ε ∈ {1e−1, 1e−2, 1e−3}.
fn two_timescale(_: &mut Ctx) -> Result<Vec<f64>> {
    let (sys, a, b) = two_species(16, 2.0, KernelFamily::PseudoMaxwellian)?;
    let g = sys.grid();
    let mut d = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let f = vec![mx(1.0, [0.4, 0.0, 0.0], 1.0, &a, g)?, mx(0.5, [-0.4, 0.0, 0.0], 0.6, &b, g)?];
        let st = KineticState::homogeneous(f, eps, 1.0)?;
        let settings = RunSettings { t_final: 0.3, dt: None, max_steps: None, snapshot_every: 1, bc: None };
        let tr = run(&sys, st, &settings)?;
        let worst = tr
            .snapshots
            .iter()
            .filter(|s| s.t >= 0.1)
            .map(|s| local_equilibrium_distance(&s.f[0][0], &a, g) + local_equilibrium_distance(&s.f[0][1], &b, g))
            .fold(0.0, f64::max);
        d.push(worst);
    }
    log::debug!("equilibrium distances {d:?}");
    Ok(vec![d[0] / d[1], d[1] / d[2]])
}

// ---------------------------------------------------------------- two-phase

fn eos() -> EosSpec {
    EosSpec::new(1.0, 2.0).expect("valid eos")
}

fn smooth_states(n: usize) -> Vec<TwoPhasePrimitive> {
    (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            TwoPhasePrimitive {
                alpha_1: 0.5 + 0.2 * (2.0 * PI * x).sin(),
                rho_1: 1.0 + 0.2 * (2.0 * PI * x).sin(),
                rho_2: 0.8 + 0.1 * (2.0 * PI * x).cos(),
                u_1: 0.3 + 0.1 * (2.0 * PI * x).cos(),
                u_2: -0.1 + 0.05 * (2.0 * PI * x).sin(),
            }
        })
        .collect()
}

/// Relative drift of total mass and momentum over 1000 periodic steps.
fn rdt_conservation(_: &mut Ctx) -> Result<Vec<f64>> {
    let relax = RelaxationSpec::new(0.05, Friction::Constant(1.0))?;
    let n = 64;
    let dx = 1.0 / n as f64;
    let mut s: Vec<_> = smooth_states(n).iter().map(conserved_from_primitive).collect();
    let total = |s: &[TwoPhaseConserved]| s.iter().fold((0.0, 0.0), |(a, b), u| (a + u.rho, b + u.momentum));
    let (m0, p0) = total(&s);
    let dt = 0.5 * rdt_cfl_dt(&s, dx, &eos())?;
    for _ in 0..1000 {
        rdt_step(&mut s, dt, dx, &eos(), &relax, MacroBc::Periodic)?;
    }
    let (m1, p1) = total(&s);
    Ok(vec![(m1 - m0).abs().max((p1 - p0).abs()) / m0])
}

fn single_cell(alpha: f64, rho_1: f64, rho_2: f64, u_1: f64, u_2: f64) -> Vec<TwoPhaseConserved> {
    vec![conserved_from_primitive(&TwoPhasePrimitive { alpha_1: alpha, rho_1, rho_2, u_1, u_2 })]
}

/// Relative error of `w(t)` against `w₀ e^{−ζt}` at `ζt = 1`.
fn friction_0d(_: &mut Ctx) -> Result<Vec<f64>> {
    let zeta = 2.5;
    let relax = RelaxationSpec::new(f64::INFINITY, Friction::Constant(zeta))?;
    let mut s = single_cell(0.5, 1.0, 1.0, 0.3, -0.3);
    let w0 = s[0].w;
    let dt = 1e-3 / zeta;
    for _ in 0..1000 {
        rdt_step(&mut s, dt, 1e9, &eos(), &relax, MacroBc::Periodic)?;
    }
    let exact = w0 * (-1.0f64).exp();
    Ok(vec![(s[0].w - exact).abs() / exact.abs()])
}

/// Largest step-to-step growth of `|P₁−P₂|` and the volume-fraction change
/// signed by the initial pressure difference.
fn pressure_relaxation(_: &mut Ctx) -> Result<Vec<f64>> {
    let relax = RelaxationSpec::new(0.05, Friction::Constant(0.0))?;
    let mut s = single_cell(0.5, 1.5, 1.0, 0.0, 0.0);
    let e = eos();
    let gap = |s: &TwoPhaseConserved| -> Result<(f64, f64)> {
        let q = primitive_from_conserved(s, 0)?.state;
        Ok((e.pressure(q.rho_1) - e.pressure(q.rho_2), q.alpha_1))
    };
    let (d0, a0) = gap(&s[0])?;
    let mut prev = d0.abs();
    let mut growth = f64::NEG_INFINITY;
    for _ in 0..200 {
        rdt_step(&mut s, 1e-3, 1e9, &e, &relax, MacroBc::Periodic)?;
        let (d, _) = gap(&s[0])?;
        growth = growth.max(d.abs() - prev);
        prev = d.abs();
    }
    let (_, a1) = gap(&s[0])?;
    Ok(vec![growth, (a1 - a0) * d0.signum()])
}

/// Relative mismatch of `dP/dρ` and `ρ dh/dρ` (fourth-order differences).
fn pressure_enthalpy(_: &mut Ctx) -> Result<Vec<f64>> {
    let mut worst = 0.0f64;
    for gamma in [1.4, 2.0, 3.0] {
        for c in [0.5, 1.0] {
            let e = EosSpec::new(c, gamma)?;
            for rho in [0.2, 1.0, 3.0] {
                let h = 1e-3 * rho;
                let dh = (-e.enthalpy(rho + 2.0 * h) + 8.0 * e.enthalpy(rho + h) - 8.0 * e.enthalpy(rho - h)
                    + e.enthalpy(rho - 2.0 * h))
                    / (12.0 * h);
                let dp = e.pressure_derivative(rho);
                worst = worst.max((dp - rho * dh).abs() / dp.abs());
            }
        }
    }
    Ok(vec![worst])
}

fn sod(n: usize, split: &[f64]) -> Vec<EulerMixState> {
    (0..n)
        .map(|i| {
            let left = (i as f64 + 0.5) / (n as f64) < 0.5;
            let (r, p) = if left { (1.0, 1.0) } else { (0.125, 0.1) };
            EulerMixState::from_primitive(split.iter().map(|s| s * r).collect(), 0.0, p, 3)
        })
        .collect()
}

/// Largest difference between a single-species shock tube and the same
/// problem split into two identical species.
fn euler_reduction(_: &mut Ctx) -> Result<Vec<f64>> {
    let n = 128;
    let dx = 1.0 / n as f64;
    let mut one = sod(n, &[1.0]);
    let mut two = sod(n, &[0.5, 0.5]);
    let mut t = 0.0;
    while t < 0.15 {
        let dt = euler_mix_cfl_dt(&one, dx, 3)?.min(0.15 - t + 1e-16);
        euler_mix_step(&mut one, dt, dx, 3, MacroBc::Transmissive)?;
        euler_mix_step(&mut two, dt, dx, 3, MacroBc::Transmissive)?;
        t += dt;
    }
    let mut worst = 0.0f64;
    for (a, b) in one.iter().zip(&two) {
        for d in [a.rho[0] - b.total_density(), a.momentum - b.momentum, a.energy - b.energy, b.rho[0] - b.rho[1]] {
            worst = worst.max(d.abs());
        }
    }
    Ok(vec![worst])
}

/// Largest primitive difference between the two two-phase solvers on
/// uniform-α data after 200 steps.
fn bn_rdt(_: &mut Ctx) -> Result<Vec<f64>> {
    let relax = RelaxationSpec::new(0.1, Friction::Xi(2.0))?;
    let n = 64;
    let dx = 1.0 / n as f64;
    let prims: Vec<_> = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            let rho = 1.0 + 0.2 * (2.0 * PI * x).sin();
            let u = 0.3 * (2.0 * PI * x).cos();
            TwoPhasePrimitive { alpha_1: 0.35, rho_1: rho, rho_2: rho, u_1: u, u_2: u }
        })
        .collect();
    let mut rdt: Vec<_> = prims.iter().map(conserved_from_primitive).collect();
    let mut bn: Vec<_> = prims.iter().map(BnState::from_primitive).collect();
    let dt = 0.5 * rdt_cfl_dt(&rdt, dx, &eos())?.min(bn_cfl_dt(&bn, dx, &eos())?);
    for _ in 0..200 {
        rdt_step(&mut rdt, dt, dx, &eos(), &relax, MacroBc::Periodic)?;
        bn_step(&mut bn, dt, dx, &eos(), &relax, InterfacePressure::AlphaWeighted, MacroBc::Periodic)?;
    }
    let mut worst = 0.0f64;
    for (i, (a, b)) in rdt.iter().zip(&bn).enumerate() {
        let p = primitive_from_conserved(a, i)?.state;
        let q = b.to_primitive(i)?;
        for (x, y) in [(p.alpha_1, q.alpha_1), (p.rho_1, q.rho_1), (p.rho_2, q.rho_2), (p.u_1, q.u_1), (p.u_2, q.u_2)] {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(vec![worst])
}

// -------------------------------------------------------------------- limit

/// Reference problem of the ε sweep.
pub const LIMIT_REFERENCE: &str = include_str!("../../../configs/limit_reference.toml");

/// Largest ratio of consecutive kinetic-versus-two-phase discrepancies.
fn limit_monotone(_: &mut Ctx) -> Result<Vec<f64>> {
    let cfg = parse_config(LIMIT_REFERENCE)?;
    let (report, _) = run_limit_study(&cfg)?;
    for r in &report.rows {
        log::debug!("eps {:e}: discrepancy {:e}, equilibration {:e}", r.eps, r.l1_discrepancy, r.equilibration_distance);
    }
    Ok(vec![report.rows.windows(2).map(|w| w[1].l1_discrepancy / w[0].l1_discrepancy).fold(0.0, f64::max)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> RunConfig {
        parse_config(&format!("mode = \"validate\"\n{extra}")).unwrap()
    }

    #[test]
    fn tolerance_overrides() {
        let c = cfg("[validation.tolerances]\n\"twophase.bn_rdt\" = 1e-20\n\"kinetic.two_timescale.first.max\" = 6.0\n");
        assert_eq!(resolve_tolerance("twophase.bn_rdt", Tol::AtMost(1e-10), &c), Tol::AtMost(1e-20));
        assert_eq!(
            resolve_tolerance("kinetic.two_timescale.first", Tol::Within(5.0, 20.0), &c),
            Tol::Within(5.0, 6.0)
        );
        assert!(check_overrides(&c).is_ok());
        assert!(check_overrides(&cfg("[validation.tolerances]\n\"twophase.nope\" = 1.0\n")).is_err());
        assert!(check_overrides(&cfg("[validation.tolerances]\n\"twophase.bn_rdt.max\" = 1.0\n")).is_err());
    }

    #[test]
    fn prefix_selects_cheap_subset() {
        let c = cfg("[validation]\nprefix = \"twophase.\"\n");
        let mut ctx = Ctx { seed: 0, exchange_rows: Vec::new() };
        let r = run_suite(&c, &effective_prefix(&c).unwrap(), &mut ctx).unwrap();
        assert_eq!(r.len(), 7);
        assert!(r.iter().all(|x| x.check_id.starts_with("twophase.") && x.status == Status::Pass), "{r:?}");
    }

    #[test]
    fn report_serialization() {
        let r = CheckResult {
            check_id: "x".into(),
            status: Status::Fail,
            measured: f64::INFINITY,
            tolerance: Tol::Within(5.0, 20.0),
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"check_id":"x","status":"fail","measured":"inf","tolerance":{"within":[5.0,20.0]}}"#);
    }

    #[test]
    fn ids_are_unique() {
        let ids = check_ids();
        let set: std::collections::BTreeSet<_> = ids.iter().collect();
        assert_eq!(set.len(), ids.len());
    }
}
