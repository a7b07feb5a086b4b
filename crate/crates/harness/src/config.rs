//! Run configuration: flat TOML sections with strict keys.
//!
//! ```toml
//! mode = "kinetic-homogeneous"
//!
//! [grid]
//! nodes_per_axis = 16
//!
//! [species]
//! masses = [1.0, 2.0]
//!
//! [kinetic]
//! t_final = 1.0
//!
//! [initial]
//! density = [1.0, 0.5]
//! velocity = [0.3, -0.3]
//! temperature = [1.0, 1.0]
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    AtLine { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    KineticHomogeneous,
    #[serde(rename = "kinetic-1d")]
    Kinetic1d,
    TwophaseRdt,
    TwophaseBn,
    EulerMix,
    LimitStudy,
    ValidateExchange,
    ValidateCollision,
    Validate,
}

impl Mode {
    pub const ALL: [Mode; 9] = [
        Mode::KineticHomogeneous,
        Mode::Kinetic1d,
        Mode::TwophaseRdt,
        Mode::TwophaseBn,
        Mode::EulerMix,
        Mode::LimitStudy,
        Mode::ValidateExchange,
        Mode::ValidateCollision,
        Mode::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::KineticHomogeneous => "kinetic-homogeneous",
            Mode::Kinetic1d => "kinetic-1d",
            Mode::TwophaseRdt => "twophase-rdt",
            Mode::TwophaseBn => "twophase-bn",
            Mode::EulerMix => "euler-mix",
            Mode::LimitStudy => "limit-study",
            Mode::ValidateExchange => "validate-exchange",
            Mode::ValidateCollision => "validate-collision",
            Mode::Validate => "validate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_cadence() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Steps between recorded snapshots.
    #[serde(default = "default_cadence")]
    pub snapshot_cadence: usize,
    pub eps_list: Option<Vec<f64>>,
    pub grid: Option<GridBlock>,
    pub species: Option<SpeciesBlock>,
    pub kernel: Option<KernelBlock>,
    pub kinetic: Option<KineticBlock>,
    pub initial: Option<InitialBlock>,
    pub eos: Option<EosBlock>,
    pub relax: Option<RelaxBlock>,
    #[serde(rename = "macro")]
    pub macro_: Option<MacroBlock>,
    pub left: Option<StateBlock>,
    pub right: Option<StateBlock>,
    pub limit: Option<LimitBlock>,
    pub validation: Option<ValidationBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub dim: usize,
    pub nodes_per_axis: usize,
    pub v_max: f64,
    pub n_angular: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { dim: 2, nodes_per_axis: 16, v_max: 6.0, n_angular: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesBlock {
    pub masses: Vec<f64>,
    pub labels: Option<Vec<String>>,
}

impl SpeciesBlock {
    pub fn label(&self, p: usize) -> String {
        self.labels.as_ref().and_then(|l| l.get(p).cloned()).unwrap_or_else(|| format!("s{p}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelBlock {
    /// `pseudo-maxwellian`, `vhs` or `hard-sphere`.
    pub family: String,
    /// VHS exponent; fixed by the family otherwise.
    pub gamma: Option<f64>,
    /// `C |S^{d-1}|`.
    pub angular_mass: f64,
    /// `false` switches inter-species collisions off.
    pub inter_species: bool,
    pub equilibrium_correction: bool,
}

impl Default for KernelBlock {
    fn default() -> Self {
        Self {
            family: "pseudo-maxwellian".into(),
            gamma: None,
            angular_mass: 1.0,
            inter_species: true,
            equilibrium_correction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticBlock {
    pub eps: f64,
    pub kappa: f64,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub max_steps: Option<usize>,
    pub n_cells: usize,
    pub length: f64,
    /// `periodic` or `reflective`.
    pub bc: String,
}

impl Default for KineticBlock {
    fn default() -> Self {
        Self {
            eps: 0.1,
            kappa: 1.0,
            t_final: 1.0,
            dt: None,
            max_steps: None,
            n_cells: 1,
            length: 1.0,
            bc: "periodic".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    /// `uniform`, `segregated` or `bimodal`.
    #[serde(default = "default_layout")]
    pub layout: String,
    pub density: Vec<f64>,
    pub velocity: Vec<f64>,
    pub temperature: Vec<f64>,
    /// Interface position as a fraction of the domain (segregated layout).
    #[serde(default = "half")]
    pub split: f64,
    /// Density of each species outside its own region, relative to its own
    /// density (segregated layout).
    #[serde(default)]
    pub background: f64,
}

fn default_layout() -> String {
    "uniform".into()
}
fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EosBlock {
    pub c: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RelaxBlock {
    /// Either `tau` directly (`inf` disables pressure relaxation) or the
    /// set `eps, lambda, eta1, eta2, rho`.
    pub tau: Option<f64>,
    pub eps: Option<f64>,
    pub lambda: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub rho: Option<f64>,
    /// Either a constant `zeta` or `xi` with `ζ` derived from it.
    pub zeta: Option<f64>,
    pub xi: Option<f64>,
    /// `alpha-weighted`, `phase1` or `phase2`.
    pub interface_pressure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacroBlock {
    pub n_cells: usize,
    pub length: f64,
    pub t_final: f64,
    pub cfl: f64,
    /// `periodic` or `transmissive`.
    pub bc: String,
    /// Position of the initial discontinuity as a fraction of the domain.
    pub split: f64,
    /// Spatial dimension of the velocity space for the multi-species Euler
    /// energy closure.
    pub dim: usize,
}

impl Default for MacroBlock {
    fn default() -> Self {
        Self { n_cells: 100, length: 1.0, t_final: 0.1, cfl: 0.9, bc: "transmissive".into(), split: 0.5, dim: 3 }
    }
}

/// One side of a Riemann problem; the two-phase keys or the Euler keys are
/// used depending on the mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBlock {
    pub alpha1: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    pub densities: Option<Vec<f64>>,
    pub u: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitBlock {
    pub n_volumes: usize,
    /// Viscosity coefficient in the relaxation time.
    pub lambda: f64,
    /// `fraction` or `threshold`.
    pub indicator: String,
    /// Samples with `t < transient · t_final` are excluded from the
    /// equilibration and rate fits.
    pub transient: f64,
}

impl Default for LimitBlock {
    fn default() -> Self {
        Self { n_volumes: 4, lambda: 1.0, indicator: "threshold".into(), transient: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationBlock {
    /// Only checks whose id starts with this prefix run.
    pub prefix: Option<String>,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
}

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub output_dir: Option<PathBuf>,
    pub deterministic: bool,
    pub eps: Option<Vec<f64>>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = parse_config(&text)?;
    cfg.apply(overrides)?;
    cfg.validate(&text)?;
    Ok(cfg)
}

/// Parses and validates `text`; the mode must be given in the text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string().trim_end().to_string()))?;
    cfg.validate(text)?;
    Ok(cfg)
}

/// Line of `key` inside `[section]` (top level when `section` is empty).
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn located(text: &str, section: &str, key: &str, message: String) -> ConfigError {
    match line_of(text, section, key) {
        Some(line) => ConfigError::AtLine { line, message },
        None => ConfigError::Invalid(message),
    }
}

impl RunConfig {
    pub fn mode(&self) -> Mode {
        self.mode.expect("mode is checked during validation")
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(m) = o.mode {
            if let Some(c) = self.mode {
                if c != m {
                    return Err(ConfigError::Invalid(format!("command line mode `{m}` differs from config mode `{c}`")));
                }
            }
            self.mode = Some(m);
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        self.deterministic |= o.deterministic;
        if let Some(eps) = &o.eps {
            if self.mode == Some(Mode::LimitStudy) {
                self.eps_list = Some(eps.clone());
            } else {
                let [e] = eps.as_slice() else {
                    return Err(ConfigError::Invalid("--eps takes a single value outside limit-study".into()));
                };
                self.kinetic.get_or_insert_with(KineticBlock::default).eps = *e;
            }
        }
        Ok(())
    }

    fn require<'a, T>(&self, text: &str, block: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        block.as_ref().ok_or_else(|| {
            located(text, "", "mode", format!("mode `{}` requires a [{name}] section", self.mode.map_or("?", Mode::name)))
        })
    }

    /// Checks cross-field invariants; `text` is used to locate errors.
    pub fn validate(&self, text: &str) -> Result<(), ConfigError> {
        let Some(mode) = self.mode else {
            return Err(ConfigError::Invalid("no mode given (set `mode` or pass it on the command line)".into()));
        };
        if self.snapshot_cadence == 0 {
            return Err(located(text, "", "snapshot_cadence", "snapshot_cadence must be at least 1".into()));
        }
        match mode {
            Mode::KineticHomogeneous | Mode::Kinetic1d | Mode::LimitStudy => {
                let species = self.require(text, &self.species, "species")?;
                self.require(text, &self.grid, "grid")?;
                self.require(text, &self.kernel, "kernel")?;
                let kin = self.require(text, &self.kinetic, "kinetic")?;
                let init = self.require(text, &self.initial, "initial")?;
                self.check_species(text, species)?;
                self.check_kernel(text)?;
                self.check_kinetic(text, kin, mode)?;
                self.check_initial(text, init, species.masses.len(), mode)?;
                if mode == Mode::LimitStudy {
                    self.check_limit(text, species)?;
                }
            }
            Mode::TwophaseRdt | Mode::TwophaseBn => {
                self.require(text, &self.eos, "eos")?;
                let relax = self.require(text, &self.relax, "relax")?;
                self.check_macro(text)?;
                self.check_relax(text, relax, mode)?;
                for (name, side) in [("left", &self.left), ("right", &self.right)] {
                    let s = self.require(text, side, name)?;
                    for (key, v) in [("alpha1", s.alpha1), ("rho1", s.rho1), ("rho2", s.rho2), ("u1", s.u1), ("u2", s.u2)] {
                        if v.is_none() {
                            return Err(located(text, name, "", format!("[{name}] needs `{key}` in mode `{mode}`")));
                        }
                    }
                }
            }
            Mode::EulerMix => {
                let species = self.require(text, &self.species, "species")?;
                self.check_species(text, species)?;
                self.check_macro(text)?;
                for (name, side) in [("left", &self.left), ("right", &self.right)] {
                    let s = self.require(text, side, name)?;
                    let ok = s.densities.as_ref().is_some_and(|d| d.len() == species.masses.len())
                        && s.u.is_some()
                        && s.p.is_some();
                    if !ok {
                        return Err(located(
                            text,
                            name,
                            "",
                            format!("[{name}] needs `densities` (one per species), `u` and `p` in mode `{mode}`"),
                        ));
                    }
                }
            }
            Mode::ValidateExchange | Mode::ValidateCollision | Mode::Validate => {}
        }
        Ok(())
    }

    fn check_species(&self, text: &str, s: &SpeciesBlock) -> Result<(), ConfigError> {
        if s.masses.is_empty() || s.masses.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(located(text, "species", "masses", "masses must be a non-empty list of positive numbers".into()));
        }
        if let Some(l) = &s.labels {
            if l.len() != s.masses.len() {
                return Err(located(text, "species", "labels", "one label per species is required".into()));
            }
        }
        Ok(())
    }

    fn check_kernel(&self, text: &str) -> Result<(), ConfigError> {
        let k = self.kernel.as_ref().unwrap();
        if k.family.parse::<mixkin_core::collision_ops::KernelFamily>().is_err() {
            return Err(located(text, "kernel", "family", format!("unknown kernel family `{}`", k.family)));
        }
        if !(k.angular_mass > 0.0) {
            return Err(located(text, "kernel", "angular_mass", "angular_mass must be positive".into()));
        }
        Ok(())
    }

    fn check_kinetic(&self, text: &str, k: &KineticBlock, mode: Mode) -> Result<(), ConfigError> {
        for (key, v) in [("eps", k.eps), ("kappa", k.kappa), ("t_final", k.t_final), ("length", k.length)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(located(text, "kinetic", key, format!("{key} must be positive")));
            }
        }
        if !matches!(k.bc.as_str(), "periodic" | "reflective") {
            return Err(located(text, "kinetic", "bc", format!("bc must be `periodic` or `reflective`, got `{}`", k.bc)));
        }
        if mode == Mode::KineticHomogeneous && k.n_cells != 1 {
            return Err(located(text, "kinetic", "n_cells", "kinetic-homogeneous uses a single cell".into()));
        }
        if mode != Mode::KineticHomogeneous && k.n_cells < 2 {
            return Err(located(text, "kinetic", "n_cells", "spatial runs need at least 2 cells".into()));
        }
        Ok(())
    }

    fn check_initial(&self, text: &str, i: &InitialBlock, ns: usize, mode: Mode) -> Result<(), ConfigError> {
        for (key, v) in [("density", &i.density), ("velocity", &i.velocity), ("temperature", &i.temperature)] {
            if v.len() != ns {
                return Err(located(text, "initial", key, format!("{key} needs one entry per species ({ns})")));
            }
        }
        if i.density.iter().chain(&i.temperature).any(|x| !(*x > 0.0)) {
            return Err(located(text, "initial", "density", "densities and temperatures must be positive".into()));
        }
        if !matches!(i.layout.as_str(), "uniform" | "segregated" | "bimodal") {
            return Err(located(text, "initial", "layout", format!("unknown layout `{}`", i.layout)));
        }
        if i.layout == "segregated" && (ns != 2 || mode == Mode::KineticHomogeneous) {
            return Err(located(text, "initial", "layout", "the segregated layout needs two species and a 1D run".into()));
        }
        if mode == Mode::LimitStudy && i.layout != "segregated" {
            return Err(located(text, "initial", "layout", "limit-study needs the segregated layout".into()));
        }
        if !(i.split > 0.0 && i.split < 1.0) || !(0.0..=1.0).contains(&i.background) {
            return Err(located(text, "initial", "split", "need 0 < split < 1 and 0 <= background <= 1".into()));
        }
        Ok(())
    }

    fn check_limit(&self, text: &str, species: &SpeciesBlock) -> Result<(), ConfigError> {
        let Some(eps) = &self.eps_list else {
            return Err(located(text, "", "mode", "limit-study requires `eps_list`".into()));
        };
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(located(text, "", "eps_list", format!("eps_list must be positive and strictly decreasing, got {eps:?}")));
        }
        if species.masses.len() != 2 {
            return Err(located(text, "species", "masses", "limit-study needs exactly two species".into()));
        }
        let l = self.limit.clone().unwrap_or_default();
        let n_cells = self.kinetic.as_ref().map_or(0, |k| k.n_cells);
        if l.n_volumes < 2 || !n_cells.is_multiple_of(l.n_volumes) {
            return Err(located(text, "limit", "n_volumes", format!("n_volumes must be >= 2 and divide n_cells ({n_cells})")));
        }
        if !matches!(l.indicator.as_str(), "fraction" | "threshold") {
            return Err(located(text, "limit", "indicator", format!("unknown indicator `{}`", l.indicator)));
        }
        if !(l.lambda > 0.0) || !(l.transient >= 0.0 && l.transient < 1.0) {
            return Err(located(text, "limit", "", "need lambda > 0 and 0 <= transient < 1".into()));
        }
        Ok(())
    }

    fn check_macro(&self, text: &str) -> Result<(), ConfigError> {
        let m = self.require(text, &self.macro_, "macro")?;
        if m.n_cells < 2 || !(m.length > 0.0) || !(m.t_final > 0.0) {
            return Err(located(text, "macro", "", "need n_cells >= 2, length > 0 and t_final > 0".into()));
        }
        if !(m.cfl > 0.0 && m.cfl <= 0.9) {
            return Err(located(text, "macro", "cfl", format!("cfl must lie in (0, 0.9], got {}", m.cfl)));
        }
        if !matches!(m.bc.as_str(), "periodic" | "transmissive") {
            return Err(located(text, "macro", "bc", format!("bc must be `periodic` or `transmissive`, got `{}`", m.bc)));
        }
        if !(1..=3).contains(&m.dim) {
            return Err(located(text, "macro", "dim", "dim must be 1, 2 or 3".into()));
        }
        Ok(())
    }

    fn check_relax(&self, text: &str, r: &RelaxBlock, mode: Mode) -> Result<(), ConfigError> {
        let derived = [r.eps, r.lambda, r.eta1, r.eta2, r.rho];
        match (r.tau, derived.iter().all(Option::is_some), derived.iter().any(Option::is_some)) {
            (Some(_), _, false) | (None, true, _) => {}
            _ => {
                return Err(located(
                    text,
                    "relax",
                    "",
                    "[relax] needs either `tau` or all of `eps, lambda, eta1, eta2, rho`".into(),
                ))
            }
        }
        if r.zeta.is_some() == r.xi.is_some() {
            return Err(located(text, "relax", "", "[relax] needs exactly one of `zeta` and `xi`".into()));
        }
        if let Some(p) = &r.interface_pressure {
            if mode != Mode::TwophaseBn || !matches!(p.as_str(), "alpha-weighted" | "phase1" | "phase2") {
                return Err(located(
                    text,
                    "relax",
                    "interface_pressure",
                    format!("interface_pressure `{p}` is only valid in twophase-bn as alpha-weighted, phase1 or phase2"),
                ));
            }
        }
        Ok(())
    }
}
