//! Kinetic-to-two-phase limit study: for each ε the segregated two-species
//! problem is run kinetically, reduced to control-volume phase moments and
//! compared with the conservative two-phase solver started from the same
//! averaged data.

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use mixkin_core::exchange_rates::xi_oracle;
use mixkin_core::kinetic_solver::{
    control_volume_average, BoundaryCondition, ControlVolumePartition, IndicatorRule, KineticState, KineticSystem,
    PhaseMoments,
};
use mixkin_core::twophase::{
    conserved_from_primitive, primitive_from_conserved, rdt_cfl_dt, rdt_step, relaxation_tau, EosSpec, Friction,
    MacroBc, RelaxationSpec, TwoPhaseConserved, TwoPhasePrimitive,
};
use mixkin_core::velocity_space::{local_equilibrium_distance, moments};

use crate::config::{LimitBlock, RunConfig};
use crate::output::{Field, RunOutput};
use crate::runs::{build_system, initial_state};

/// Volume fraction assigned to a phase that is absent from a volume.
const ALPHA_FLOOR: f64 = 1e-6;
/// Number of equally spaced comparison times in `(0, t_final]`.
const N_SAMPLES: usize = 20;

/// `(α₁, α₁ρ₁, α₂ρ₂, α₁ρ₁u₁, α₂ρ₂u₂)` of one volume.
pub type PhaseVector = [f64; 5];

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub eps: f64,
    /// Largest `‖f − M[f]‖₁` over cells and species after the transient.
    pub equilibration_distance: f64,
    /// Fitted exponential decay rate of the global relative velocity.
    pub friction_rate: f64,
    /// Fitted exponential decay rate of the mean pressure difference.
    pub pressure_rate: f64,
    /// Time-averaged `Σ_volumes Δx |kinetic − two-phase|` over the phase
    /// vector, with the configured indicator rule.
    pub l1_discrepancy: f64,
    /// The same with the other indicator rule.
    pub l1_other_indicator: f64,
    pub eta_1: f64,
    pub eta_2: f64,
    pub tau: f64,
    pub xi: f64,
    pub kinetic_steps: usize,
    pub clipped_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub rows: Vec<LimitRow>,
    /// `d(ε_i)/d(ε_{i+1})` for consecutive entries.
    pub equilibration_ratios: Vec<f64>,
    pub discrepancy_ratios: Vec<f64>,
    pub equilibration_monotone: bool,
    pub discrepancy_monotone: bool,
}

/// Sampled kinetic and two-phase trajectories of one ε.
#[derive(Debug, Clone)]
pub struct LimitSeries {
    pub times: Vec<f64>,
    pub kinetic: Vec<Vec<PhaseVector>>,
    pub macro_: Vec<Vec<PhaseVector>>,
}

fn ratio(a: f64, b: f64) -> f64 {
    // 0/0 counts as no change
    a.max(f64::MIN_POSITIVE) / b.max(f64::MIN_POSITIVE)
}

pub fn run_limit_study(cfg: &RunConfig) -> Result<(LimitReport, Vec<LimitSeries>)> {
    let eps_list = cfg.eps_list.clone().ok_or_else(|| anyhow!("limit-study needs eps_list"))?;
    let system = build_system(cfg)?;
    let results: Vec<Result<(LimitRow, LimitSeries)>> = eps_list
        .par_iter()
        .map(|&eps| run_one(cfg, &system, eps).with_context(|| format!("limit study at eps = {eps}")))
        .collect();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for r in results {
        let (row, s) = r?;
        rows.push(row);
        series.push(s);
    }
    let eq: Vec<f64> = rows.windows(2).map(|w| ratio(w[0].equilibration_distance, w[1].equilibration_distance)).collect();
    let l1: Vec<f64> = rows.windows(2).map(|w| ratio(w[0].l1_discrepancy, w[1].l1_discrepancy)).collect();
    let report = LimitReport {
        equilibration_monotone: rows.windows(2).all(|w| w[1].equilibration_distance < w[0].equilibration_distance),
        discrepancy_monotone: rows.windows(2).all(|w| w[1].l1_discrepancy < w[0].l1_discrepancy),
        equilibration_ratios: eq,
        discrepancy_ratios: l1,
        rows,
    };
    Ok((report, series))
}

fn indicator(l: &LimitBlock) -> IndicatorRule {
    if l.indicator == "threshold" {
        IndicatorRule::Threshold
    } else {
        IndicatorRule::Fraction
    }
}

fn vector_of(p: &TwoPhasePrimitive) -> PhaseVector {
    let (a1, a2) = (p.alpha_1, p.alpha_2());
    [a1, a1 * p.rho_1, a2 * p.rho_2, a1 * p.rho_1 * p.u_1, a2 * p.rho_2 * p.u_2]
}

/// Kinetic volumes go through the same absent-phase clamp as the solver's
/// initial data.
fn phase_vector(v: &[PhaseMoments], eos: &EosSpec) -> PhaseVector {
    vector_of(&primitive_of(v, eos))
}

fn macro_vector(u: &TwoPhaseConserved, cell: usize) -> Result<PhaseVector> {
    Ok(vector_of(&primitive_from_conserved(u, cell)?.state))
}

/// Two-phase primitive state of one volume; an absent phase gets the floor
/// volume fraction and the density that matches the present phase's pressure.
fn primitive_of(v: &[PhaseMoments], eos: &EosSpec) -> TwoPhasePrimitive {
    let (a, b) = (&v[0], &v[1]);
    let alpha_1 = a.alpha.clamp(ALPHA_FLOOR, 1.0 - ALPHA_FLOOR);
    let rho_1 = if a.rho > 0.0 { a.rho } else { eos.density(eos.pressure(b.rho)) };
    let rho_2 = if b.rho > 0.0 { b.rho } else { eos.density(eos.pressure(a.rho)) };
    TwoPhasePrimitive { alpha_1, rho_1, rho_2, u_1: a.u, u_2: b.u }
}

/// Phase-1 and phase-2 half-widths of the interface nearest `split` from the
/// 10%, 50% and 90% crossings of `chi` (cell centres, linear interpolation).
pub fn interface_half_widths(chi: &[f64], dx: f64, split: f64) -> (f64, f64) {
    let (lo, hi) = chi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &c| (l.min(c), h.max(c)));
    let floor = 0.5 * dx;
    if !(hi - lo > 1e-12) {
        return (floor, floor);
    }
    let x_split = split * dx * chi.len() as f64;
    let crossing = |level: f64| -> Option<f64> {
        let target = lo + level * (hi - lo);
        (0..chi.len() - 1)
            .filter_map(|i| {
                let (a, b) = (chi[i], chi[i + 1]);
                if (a - target) * (b - target) <= 0.0 && a != b {
                    Some((i as f64 + 0.5 + (target - a) / (b - a)) * dx)
                } else {
                    None
                }
            })
            .min_by(|x, y| (x - x_split).abs().total_cmp(&(y - x_split).abs()))
    };
    match (crossing(0.9), crossing(0.5), crossing(0.1)) {
        (Some(x90), Some(x50), Some(x10)) => ((x50 - x90).abs().max(floor), (x10 - x50).abs().max(floor)),
        _ => (floor, floor),
    }
}

/// Least-squares slope of `ln|y|` against `t`, negated.
pub fn fit_decay_rate(t: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        t.iter().zip(y).filter(|(_, y)| y.abs() > 1e-300).map(|(&t, y)| (t, y.abs().ln())).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    if sxx > 0.0 {
        -sxy / sxx
    } else {
        0.0
    }
}

/// `ū₁ − ū₂` of the species over the whole domain; only cross collisions
/// change it under periodic transport.
fn species_relative_velocity(system: &KineticSystem, state: &KineticState) -> f64 {
    let (g, sp) = (system.grid(), system.species());
    let mut mass = [0.0; 2];
    let mut momentum = [0.0; 2];
    for cell in &state.f {
        for p in 0..2 {
            let m = moments(&cell[p], &sp[p], g);
            mass[p] += m.rho;
            momentum[p] += m.rho * m.u_bar[0];
        }
    }
    momentum[0] / mass[0] - momentum[1] / mass[1]
}

fn mean_pressure_difference(v: &[Vec<PhaseMoments>]) -> f64 {
    v.iter().map(|vol| vol[0].pressure - vol[1].pressure).sum::<f64>() / v.len() as f64
}

/// Two-phase comparison of sampled kinetic states under one indicator rule.
struct Comparison {
    l1: f64,
    pressure_rate: f64,
    kinetic: Vec<Vec<PhaseVector>>,
    macro_: Vec<Vec<PhaseVector>>,
}

#[allow(clippy::too_many_arguments)]
fn compare(
    system: &KineticSystem,
    samples: &[KineticState],
    times: &[f64],
    first_post: usize,
    part: &ControlVolumePartition,
    eos: &EosSpec,
    relax: &RelaxationSpec,
) -> Result<Comparison> {
    let dx_volume = samples[0].dx * part.volumes()[0].len() as f64;
    let volumes: Vec<Vec<Vec<PhaseMoments>>> =
        samples.iter().map(|s| control_volume_average(system, s, part)).collect::<Result<_, _>>()?;
    let mut u: Vec<TwoPhaseConserved> =
        volumes[0].iter().map(|v| conserved_from_primitive(&primitive_of(v, eos))).collect();
    let to_vectors = |u: &[TwoPhaseConserved]| -> Result<Vec<PhaseVector>> {
        u.iter().enumerate().map(|(i, x)| macro_vector(x, i)).collect()
    };
    let mut macro_series = vec![to_vectors(&u)?];
    let mut t = 0.0;
    for &t_next in times.iter().skip(1) {
        while t < t_next * (1.0 - 1e-14) {
            let dt = rdt_cfl_dt(&u, dx_volume, eos)?.min(t_next - t);
            rdt_step(&mut u, dt, dx_volume, eos, relax, MacroBc::Periodic)?;
            t += dt;
        }
        t = t_next;
        macro_series.push(to_vectors(&u)?);
    }
    let kinetic: Vec<Vec<PhaseVector>> =
        volumes.iter().map(|vols| vols.iter().map(|v| phase_vector(v, eos)).collect()).collect();
    let l1 = kinetic
        .iter()
        .zip(&macro_series)
        .map(|(a, b)| {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>()).sum::<f64>()
                * dx_volume
        })
        .sum::<f64>()
        / times.len() as f64;
    let post_t = &times[first_post..];
    let dp: Vec<f64> = volumes[first_post..].iter().map(|v| mean_pressure_difference(v)).collect();
    Ok(Comparison {
        l1,
        pressure_rate: fit_decay_rate(post_t, &dp),
        kinetic,
        macro_: macro_series,
    })
}

fn run_one(cfg: &RunConfig, system: &KineticSystem, eps: f64) -> Result<(LimitRow, LimitSeries)> {
    let kin = cfg.kinetic.clone().unwrap_or_default();
    let lim = cfg.limit.clone().unwrap_or_default();
    let init = cfg.initial.as_ref().ok_or_else(|| anyhow!("missing [initial]"))?;
    let mut state: KineticState = initial_state(cfg, system, eps)?;
    let n_cells = state.n_cells();
    let dx = state.dx;
    let bc = if kin.bc == "reflective" { BoundaryCondition::Reflective } else { BoundaryCondition::Periodic };
    let g = system.grid();
    let sp = system.species();

    let times: Vec<f64> = (0..=N_SAMPLES).map(|k| kin.t_final * k as f64 / N_SAMPLES as f64).collect();
    let t_transient = lim.transient * kin.t_final;
    let first_post = times.iter().position(|&t| t >= t_transient).unwrap_or(N_SAMPLES);

    let mut samples = vec![state.clone()];
    let mut eq_distance = 0.0f64;
    let mut steps = 0;
    let mut clipped = 0.0;
    for (k, &t_next) in times.iter().enumerate().skip(1) {
        while state.t < t_next * (1.0 - 1e-14) {
            let dt = system.cfl_dt(&state).min(t_next - state.t);
            clipped += system.step_1d(&mut state, dt, bc)?.clipped_mass;
            steps += 1;
        }
        state.t = t_next;
        if k >= first_post {
            for cell in &state.f {
                for (f, s) in cell.iter().zip(sp) {
                    eq_distance = eq_distance.max(local_equilibrium_distance(f, s, g));
                }
            }
        }
        samples.push(state.clone());
    }

    // interface widths from the species-fraction profile at the first
    // post-transient sample
    let chi: Vec<f64> = samples[first_post]
        .f
        .iter()
        .map(|cell| {
            let n1 = moments(&cell[0], &sp[0], g).n;
            let n2 = moments(&cell[1], &sp[1], g).n;
            n1 / (n1 + n2)
        })
        .collect();
    let (eta_1, eta_2) = interface_half_widths(&chi, dx, init.split);

    let dim = g.dim() as f64;
    let gamma = (dim + 2.0) / dim;
    let c = (0..2)
        .map(|p| {
            let rho = sp[p].mass * init.density[p];
            init.density[p] * init.temperature[p] / rho.powf(gamma)
        })
        .sum::<f64>()
        / 2.0;
    let eos = EosSpec::new(c, gamma)?;
    let rho_mean = state
        .f
        .iter()
        .map(|cell| cell.iter().zip(sp).map(|(f, s)| moments(f, s, g).rho).sum::<f64>())
        .sum::<f64>()
        / n_cells as f64;
    let tau = relaxation_tau(eps, lim.lambda, rho_mean, eta_1, eta_2)?;
    let xi = match system.kernel(0, 1) {
        Some(k) => {
            let t_ref = (init.temperature[0] + init.temperature[1]) / 2.0;
            xi_oracle(k, sp[0].mass, sp[1].mass, t_ref, g.dim())?
        }
        None => 0.0,
    };
    let relax = RelaxationSpec::new(tau, Friction::Xi(xi))?;

    let w: Vec<f64> = samples[first_post..].iter().map(|st| species_relative_velocity(system, st)).collect();
    let friction_rate = fit_decay_rate(&times[first_post..], &w);

    let primary = indicator(&lim);
    let other = match primary {
        IndicatorRule::Threshold => IndicatorRule::Fraction,
        IndicatorRule::Fraction => IndicatorRule::Threshold,
    };
    let mut runs = Vec::new();
    for rule in [primary, other] {
        let part = ControlVolumePartition::uniform(n_cells, lim.n_volumes, rule)?;
        runs.push(compare(system, &samples, &times, first_post, &part, &eos, &relax)?);
    }
    let alt = runs.pop().unwrap();
    let main = runs.pop().unwrap();
    Ok((
        LimitRow {
            eps,
            equilibration_distance: eq_distance,
            friction_rate,
            pressure_rate: main.pressure_rate,
            l1_discrepancy: main.l1,
            l1_other_indicator: alt.l1,
            eta_1,
            eta_2,
            tau,
            xi,
            kinetic_steps: steps,
            clipped_mass: clipped,
        },
        LimitSeries { times, kinetic: main.kinetic, macro_: main.macro_ },
    ))
}

/// Runs the study and writes `limit_report.csv`, `limit_report.json` and
/// one `limit_series_<i>.csv` per ε.
pub fn limit_mode(cfg: &RunConfig, out: &mut RunOutput) -> Result<LimitReport> {
    let (report, series) = run_limit_study(cfg)?;
    let header = [
        "eps",
        "equilibration_distance",
        "friction_rate",
        "pressure_rate",
        "l1_discrepancy",
        "l1_other_indicator",
        "eta1",
        "eta2",
        "tau",
        "xi",
        "equilibration_ratio",
        "discrepancy_ratio",
    ];
    let rows: Vec<Vec<Field>> = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let prev = |v: &[f64]| if i == 0 { Field::Text(String::new()) } else { Field::Num(v[i - 1]) };
            vec![
                r.eps.into(),
                r.equilibration_distance.into(),
                r.friction_rate.into(),
                r.pressure_rate.into(),
                r.l1_discrepancy.into(),
                r.l1_other_indicator.into(),
                r.eta_1.into(),
                r.eta_2.into(),
                r.tau.into(),
                r.xi.into(),
                prev(&report.equilibration_ratios),
                prev(&report.discrepancy_ratios),
            ]
        })
        .collect();
    out.write_csv("limit_report.csv", &header, &rows)?;
    out.write_json("limit_report.json", &report)?;
    let n_volumes = cfg.limit.clone().unwrap_or_default().n_volumes;
    let length = cfg.kinetic.as_ref().map_or(1.0, |k| k.length);
    for (i, s) in series.iter().enumerate() {
        let mut rows = Vec::new();
        for (k, &t) in s.times.iter().enumerate() {
            for (source, data) in [("kinetic", &s.kinetic[k]), ("twophase", &s.macro_[k])] {
                for (v, x) in data.iter().enumerate() {
                    let centre = (v as f64 + 0.5) * length / n_volumes as f64;
                    let mut row: Vec<Field> = vec![t.into(), centre.into(), source.into()];
                    row.extend(x.iter().map(|&y| Field::Num(y)));
                    rows.push(row);
                }
            }
        }
        out.write_csv(
            &format!("limit_series_{i}.csv"),
            &["t", "x", "source", "alpha1", "alpha_rho1", "alpha_rho2", "alpha_rho_u1", "alpha_rho_u2"],
            &rows,
        )?;
    }
    Ok(report)
}
