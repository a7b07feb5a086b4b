//! Builders from configuration blocks and the simulation modes.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use mixkin_core::collision_ops::{KernelFamily, KernelSpec};
use mixkin_core::kinetic_solver::{
    control_volume_average, run, BoundaryCondition, ControlVolumePartition, IndicatorRule, KineticState,
    KineticSystem, RunSettings, Trajectory,
};
use mixkin_core::snapshot::write_snapshot;
use mixkin_core::twophase::{
    bn_cfl_dt, bn_step, conserved_from_primitive, euler_mix_cfl_dt, euler_mix_step, primitive_from_conserved,
    rdt_cfl_dt, rdt_step, relaxation_tau, BnState, EosSpec, EulerMixState, Friction, InterfacePressure, MacroBc,
    RelaxationSpec, TwoPhasePrimitive,
};
use mixkin_core::velocity_space::{maxwellian, moments_with, MaxwellianParams, SpeciesSpec, Summation, VelocityGrid};

use crate::config::{KineticBlock, Mode, RunConfig, StateBlock};
use crate::output::{Field, RunOutput};

pub fn summation(cfg: &RunConfig) -> Summation {
    if cfg.deterministic {
        Summation::Ordered
    } else {
        Summation::Parallel
    }
}

pub fn build_grid(cfg: &RunConfig) -> Result<VelocityGrid> {
    let g = cfg.grid.clone().unwrap_or_default();
    Ok(VelocityGrid::new(g.dim, g.nodes_per_axis, g.v_max, g.n_angular)?)
}

pub fn build_species(cfg: &RunConfig) -> Result<Vec<SpeciesSpec>> {
    let s = cfg.species.as_ref().ok_or_else(|| anyhow!("missing [species]"))?;
    s.masses.iter().enumerate().map(|(p, &m)| Ok(SpeciesSpec::new(m, s.label(p))?)).collect()
}

pub fn build_kernel(cfg: &RunConfig, dim: usize) -> Result<KernelSpec> {
    let k = cfg.kernel.clone().unwrap_or_default();
    let family: KernelFamily = k.family.parse()?;
    let gamma = match family {
        KernelFamily::PseudoMaxwellian => 0.0,
        KernelFamily::HardSphere => 1.0,
        KernelFamily::Vhs => k.gamma.ok_or_else(|| anyhow!("the vhs kernel needs [kernel] gamma"))?,
    };
    Ok(KernelSpec::with_angular_mass(family, gamma, k.angular_mass, dim)?)
}

pub fn build_system(cfg: &RunConfig) -> Result<KineticSystem> {
    let grid = build_grid(cfg)?;
    let species = build_species(cfg)?;
    let kernel = build_kernel(cfg, grid.dim())?;
    let kb = cfg.kernel.clone().unwrap_or_default();
    let n = species.len();
    let table = (0..n)
        .map(|p| (0..n).map(|q| (p == q || kb.inter_species).then_some(kernel)).collect())
        .collect();
    Ok(KineticSystem::with_kernels(grid, species, table)?.with_equilibrium_correction(kb.equilibrium_correction))
}

fn bc_of(k: &KineticBlock) -> BoundaryCondition {
    if k.bc == "reflective" {
        BoundaryCondition::Reflective
    } else {
        BoundaryCondition::Periodic
    }
}

/// Initial distributions from `[initial]`.
pub fn initial_state(cfg: &RunConfig, system: &KineticSystem, eps: f64) -> Result<KineticState> {
    let init = cfg.initial.as_ref().ok_or_else(|| anyhow!("missing [initial]"))?;
    let kin = cfg.kinetic.clone().unwrap_or_default();
    let g = system.grid();
    let sp = system.species();
    let shifted = |p: usize, n: f64, u: f64| -> Result<Vec<f64>> {
        let params = MaxwellianParams::new(n, [u, 0.0, 0.0], init.temperature[p])?;
        Ok(maxwellian(&params, &sp[p], g))
    };
    let dx = kin.length / kin.n_cells as f64;
    let mut f = Vec::with_capacity(kin.n_cells);
    for i in 0..kin.n_cells {
        let x = (i as f64 + 0.5) / kin.n_cells as f64;
        let mut cell = Vec::with_capacity(sp.len());
        for p in 0..sp.len() {
            let (n, u) = (init.density[p], init.velocity[p]);
            let fp = match init.layout.as_str() {
                "bimodal" => {
                    let a = shifted(p, 0.5 * n, u)?;
                    let b = shifted(p, 0.5 * n, -u)?;
                    a.iter().zip(&b).map(|(x, y)| x + y).collect()
                }
                "segregated" => {
                    let own = (x < init.split) == (p == 0);
                    shifted(p, if own { n } else { init.background * n }, u)?
                }
                _ => shifted(p, n, u)?,
            };
            cell.push(fp);
        }
        f.push(cell);
    }
    Ok(KineticState::new(f, dx, eps, kin.kappa)?)
}

#[derive(Debug, Serialize)]
struct KineticSummary {
    steps: usize,
    t_final: f64,
    clipped_mass: f64,
    mass_initial: Vec<f64>,
    mass_final: Vec<f64>,
    momentum_drift: [f64; 3],
    energy_drift: f64,
    h_initial: f64,
    h_final: f64,
}

/// Runs the kinetic system described by `cfg` with intra-species scaling `eps`.
pub fn run_kinetic(cfg: &RunConfig, system: &KineticSystem, eps: f64) -> Result<Trajectory> {
    let kin = cfg.kinetic.clone().unwrap_or_default();
    let state = initial_state(cfg, system, eps)?;
    let settings = RunSettings {
        t_final: kin.t_final,
        dt: kin.dt,
        max_steps: kin.max_steps,
        snapshot_every: cfg.snapshot_cadence,
        bc: (state.n_cells() > 1).then(|| bc_of(&kin)),
    };
    Ok(run(system, state, &settings)?)
}

pub fn kinetic_mode(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let system = build_system(cfg)?;
    let eps = cfg.kinetic.as_ref().map_or(0.1, |k| k.eps);
    let traj = run_kinetic(cfg, &system, eps)?;
    let g = system.grid();
    let dim = g.dim();
    let mode = summation(cfg);

    let mut header = vec!["t", "x", "species", "n", "rho", "ux", "uy"];
    if dim == 3 {
        header.push("uz");
    }
    header.extend(["T", "P"]);
    let mut rows = Vec::new();
    for snap in &traj.snapshots {
        for (i, cell) in snap.f.iter().enumerate() {
            let x = (i as f64 + 0.5) * snap.dx;
            for (p, f) in cell.iter().enumerate() {
                let m = moments_with(f, &system.species()[p], g, mode);
                let mut row: Vec<Field> =
                    vec![snap.t.into(), x.into(), system.species()[p].label.clone().into(), m.n.into(), m.rho.into()];
                row.extend(m.u_bar[..dim].iter().map(|&u| Field::Num(u)));
                row.extend([m.temperature.into(), m.pressure.into()]);
                rows.push(row);
            }
        }
    }
    out.write_csv("moments.csv", &header, &rows)?;

    let h_rows: Vec<Vec<Field>> = traj.h_series.iter().map(|&(t, h)| vec![t.into(), h.into()]).collect();
    out.write_csv("entropy.csv", &["t", "H_total"], &h_rows)?;

    if cfg.mode() == Mode::Kinetic1d {
        let n_cells = traj.snapshots[0].n_cells();
        let lb = cfg.limit.clone().unwrap_or_default();
        let rule = if lb.indicator == "threshold" { IndicatorRule::Threshold } else { IndicatorRule::Fraction };
        let n_vol = if cfg.limit.is_some() { lb.n_volumes.min(n_cells) } else { 1 };
        let part = ControlVolumePartition::uniform(n_cells, n_vol, rule)?;
        let mut rows = Vec::new();
        for snap in &traj.snapshots {
            let h = system.h_total(snap)?;
            for (k, vol) in control_volume_average(&system, snap, &part)?.iter().enumerate() {
                for (p, m) in vol.iter().enumerate() {
                    rows.push(vec![
                        snap.t.into(),
                        k.into(),
                        system.species()[p].label.clone().into(),
                        m.alpha.into(),
                        m.rho.into(),
                        m.u.into(),
                        m.pressure.into(),
                        h.into(),
                    ]);
                }
            }
        }
        out.write_csv("volumes.csv", &["t", "volume_id", "species", "alpha", "rho", "u", "P", "H_total"], &rows)?;
    }

    let last = traj.snapshots.last().expect("a trajectory has at least one snapshot");
    let mut bin = Vec::new();
    write_snapshot(&mut bin, g, last)?;
    out.write_bytes("final.snapshot", "binary", &bin)?;

    let (m0, p0, e0) = system.totals(&traj.snapshots[0]);
    let (m1, p1, e1) = system.totals(last);
    let summary = KineticSummary {
        steps: traj.steps,
        t_final: last.t,
        clipped_mass: traj.clipped_mass,
        mass_initial: m0,
        mass_final: m1,
        momentum_drift: [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]],
        energy_drift: e1 - e0,
        h_initial: traj.h_series[0].1,
        h_final: traj.h_series.last().unwrap().1,
    };
    out.write_json("summary.json", &summary)?;
    Ok(())
}

fn macro_bc(bc: &str) -> MacroBc {
    if bc == "periodic" {
        MacroBc::Periodic
    } else {
        MacroBc::Transmissive
    }
}

pub fn relaxation_from(cfg: &RunConfig) -> Result<RelaxationSpec> {
    let r = cfg.relax.clone().ok_or_else(|| anyhow!("missing [relax]"))?;
    let tau = match r.tau {
        Some(t) => t,
        None => relaxation_tau(r.eps.unwrap(), r.lambda.unwrap(), r.rho.unwrap(), r.eta1.unwrap(), r.eta2.unwrap())?,
    };
    let friction = match (r.zeta, r.xi) {
        (Some(z), _) => Friction::Constant(z),
        (_, Some(x)) => Friction::Xi(x),
        _ => bail!("[relax] needs zeta or xi"),
    };
    Ok(RelaxationSpec::new(tau, friction)?)
}

fn two_phase_side(s: &StateBlock) -> TwoPhasePrimitive {
    TwoPhasePrimitive {
        alpha_1: s.alpha1.unwrap(),
        rho_1: s.rho1.unwrap(),
        rho_2: s.rho2.unwrap(),
        u_1: s.u1.unwrap(),
        u_2: s.u2.unwrap(),
    }
}

/// Snapshot times: every `cadence` steps plus the final time.
struct Clock {
    t: f64,
    t_final: f64,
    steps: usize,
}

impl Clock {
    fn next_dt(&self, limit: f64, cfl: f64) -> f64 {
        (limit * cfl / 0.9).min(self.t_final - self.t)
    }
    fn done(&self) -> bool {
        self.t >= self.t_final * (1.0 - 1e-14)
    }
}

#[derive(Debug, Serialize)]
struct MacroSummary {
    steps: usize,
    t_final: f64,
    clamped_cells: usize,
    tau: f64,
    mass_drift: f64,
    momentum_drift: f64,
}

fn two_phase_row(t: f64, x: f64, p: &TwoPhasePrimitive, eos: &EosSpec) -> Vec<Field> {
    vec![
        t.into(),
        x.into(),
        p.alpha_1.into(),
        p.rho_1.into(),
        p.rho_2.into(),
        p.u_1.into(),
        p.u_2.into(),
        eos.pressure(p.rho_1).into(),
        eos.pressure(p.rho_2).into(),
        p.u_mix().into(),
    ]
}

const TWO_PHASE_HEADER: [&str; 10] = ["t", "x", "alpha1", "rho1", "rho2", "u1", "u2", "P1", "P2", "u_mix"];

pub fn twophase_mode(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let m = cfg.macro_.clone().unwrap_or_default();
    let e = cfg.eos.as_ref().unwrap();
    let eos = EosSpec::new(e.c, e.gamma)?;
    let relax = relaxation_from(cfg)?;
    let bc = macro_bc(&m.bc);
    let dx = m.length / m.n_cells as f64;
    let (left, right) = (two_phase_side(cfg.left.as_ref().unwrap()), two_phase_side(cfg.right.as_ref().unwrap()));
    let prims: Vec<TwoPhasePrimitive> = (0..m.n_cells)
        .map(|i| if (i as f64 + 0.5) / (m.n_cells as f64) < m.split { left } else { right })
        .collect();
    let closure = match cfg.relax.as_ref().and_then(|r| r.interface_pressure.as_deref()) {
        Some("phase1") => InterfacePressure::Phase1,
        Some("phase2") => InterfacePressure::Phase2,
        _ => InterfacePressure::AlphaWeighted,
    };
    let x = |i: usize| (i as f64 + 0.5) * dx;
    let mut rows = Vec::new();
    let mut clock = Clock { t: 0.0, t_final: m.t_final, steps: 0 };
    let mut clamped = 0;
    let (mass0, mom0, mass1, mom1);
    if cfg.mode() == Mode::TwophaseRdt {
        let mut s: Vec<_> = prims.iter().map(conserved_from_primitive).collect();
        let record = |s: &[mixkin_core::twophase::TwoPhaseConserved], t: f64, rows: &mut Vec<Vec<Field>>| -> Result<()> {
            for (i, u) in s.iter().enumerate() {
                rows.push(two_phase_row(t, x(i), &primitive_from_conserved(u, i)?.state, &eos));
            }
            Ok(())
        };
        mass0 = s.iter().map(|u| u.rho).sum::<f64>() * dx;
        mom0 = s.iter().map(|u| u.momentum).sum::<f64>() * dx;
        record(&s, 0.0, &mut rows)?;
        while !clock.done() {
            let dt = clock.next_dt(rdt_cfl_dt(&s, dx, &eos)?, m.cfl);
            clamped += rdt_step(&mut s, dt, dx, &eos, &relax, bc).with_context(|| format!("at t = {}", clock.t))?.clamped_cells;
            clock.t += dt;
            clock.steps += 1;
            if clock.steps.is_multiple_of(cfg.snapshot_cadence) || clock.done() {
                record(&s, clock.t, &mut rows)?;
            }
        }
        mass1 = s.iter().map(|u| u.rho).sum::<f64>() * dx;
        mom1 = s.iter().map(|u| u.momentum).sum::<f64>() * dx;
    } else {
        let mut s: Vec<_> = prims.iter().map(BnState::from_primitive).collect();
        let record = |s: &[BnState], t: f64, rows: &mut Vec<Vec<Field>>| -> Result<()> {
            for (i, u) in s.iter().enumerate() {
                rows.push(two_phase_row(t, x(i), &u.to_primitive(i)?, &eos));
            }
            Ok(())
        };
        let totals = |s: &[BnState]| {
            s.iter().fold((0.0, 0.0), |(a, b), u| (a + u.alpha_rho_1 + u.alpha_rho_2, b + u.alpha_rho_u_1 + u.alpha_rho_u_2))
        };
        (mass0, mom0) = totals(&s);
        record(&s, 0.0, &mut rows)?;
        while !clock.done() {
            let dt = clock.next_dt(bn_cfl_dt(&s, dx, &eos)?, m.cfl);
            bn_step(&mut s, dt, dx, &eos, &relax, closure, bc).with_context(|| format!("at t = {}", clock.t))?;
            clock.t += dt;
            clock.steps += 1;
            if clock.steps.is_multiple_of(cfg.snapshot_cadence) || clock.done() {
                record(&s, clock.t, &mut rows)?;
            }
        }
        (mass1, mom1) = totals(&s);
    }
    out.write_csv("twophase.csv", &TWO_PHASE_HEADER, &rows)?;
    out.write_json(
        "summary.json",
        &MacroSummary {
            steps: clock.steps,
            t_final: clock.t,
            clamped_cells: clamped,
            tau: relax.tau,
            mass_drift: mass1 - mass0,
            momentum_drift: mom1 - mom0,
        },
    )?;
    Ok(())
}

pub fn euler_mode(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let m = cfg.macro_.clone().unwrap_or_default();
    let species = cfg.species.clone().unwrap();
    let bc = macro_bc(&m.bc);
    let dx = m.length / m.n_cells as f64;
    let side = |s: &StateBlock| EulerMixState::from_primitive(s.densities.clone().unwrap(), s.u.unwrap(), s.p.unwrap(), m.dim);
    let (l, r) = (side(cfg.left.as_ref().unwrap()), side(cfg.right.as_ref().unwrap()));
    let mut s: Vec<EulerMixState> =
        (0..m.n_cells).map(|i| if (i as f64 + 0.5) / (m.n_cells as f64) < m.split { l.clone() } else { r.clone() }).collect();
    let mut header: Vec<String> = vec!["t".into(), "x".into()];
    header.extend((0..species.masses.len()).map(|p| format!("rho_{}", species.label(p))));
    header.extend(["u".into(), "p".into(), "T".into()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    let record = |s: &[EulerMixState], t: f64, rows: &mut Vec<Vec<Field>>| {
        for (i, c) in s.iter().enumerate() {
            let mut row: Vec<Field> = vec![t.into(), ((i as f64 + 0.5) * dx).into()];
            row.extend(c.rho.iter().map(|&r| Field::Num(r)));
            row.extend([c.velocity().into(), c.pressure(m.dim).into(), c.temperature(&species.masses, m.dim).into()]);
            rows.push(row);
        }
    };
    record(&s, 0.0, &mut rows);
    let mut clock = Clock { t: 0.0, t_final: m.t_final, steps: 0 };
    while !clock.done() {
        let dt = clock.next_dt(euler_mix_cfl_dt(&s, dx, m.dim)?, m.cfl);
        euler_mix_step(&mut s, dt, dx, m.dim, bc).with_context(|| format!("at t = {}", clock.t))?;
        clock.t += dt;
        clock.steps += 1;
        if clock.steps.is_multiple_of(cfg.snapshot_cadence) || clock.done() {
            record(&s, clock.t, &mut rows);
        }
    }
    out.write_csv("euler.csv", &header, &rows)?;
    Ok(())
}
