//! Configuration, run orchestration and file output for the `agg` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use agg_core::diagnostics::DiagnosticsRecord;
use agg_core::equilibrium::equilibrium_profile;
use agg_core::grid::{AxisBc, Grid, ScalarBc};
use agg_core::params::{Params, RegularizedPotential};
use agg_core::picard::{initial_record, time_integrate, PicardConfig, Stepper, TimeConfig};
use agg_core::scenarios::{build_problem, Problem, ScenarioConfig, ScenarioKind};
use agg_core::snapshot::Snapshot;
use agg_core::solvers::StokesTolerances;
use agg_core::verify::{self, Setup, SuiteReport};
use agg_core::Error as CoreError;

pub const SERIES_COLUMNS: [&str; 11] = [
    "t",
    "E_free",
    "E_kin",
    "E_total",
    "mass",
    "max_div",
    "linf_phi_tot",
    "picard_iters",
    "picard_ratio_geo",
    "mom_residual",
    "div_residual",
];

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Io = 1,
    ConfigRejected = 2,
    PicardDivergence = 3,
    LinfExcursion = 4,
    SolverFailure = 5,
    VerifyFailed = 6,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config rejected: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Read { .. } | CliError::Io(_) => ExitStatus::Io,
            CliError::Config(_) => ExitStatus::ConfigRejected,
            CliError::Core(e) => match e.root() {
                CoreError::PicardDivergence { .. } => ExitStatus::PicardDivergence,
                CoreError::LinfExcursion { .. } => ExitStatus::LinfExcursion,
                CoreError::Io(_) | CoreError::Snapshot(_) => ExitStatus::Io,
                CoreError::StokesNonConvergence { .. } | CoreError::PhaseResidual(_) | CoreError::Newton(_) => {
                    ExitStatus::SolverFailure
                }
                _ => ExitStatus::ConfigRejected,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseBc {
    #[serde(rename = "dirichlet0", alias = "D")]
    Dirichlet,
    #[serde(rename = "neumann0", alias = "N")]
    Neumann,
}

impl PhaseBc {
    pub fn scalar_bc(self) -> ScalarBc {
        match self {
            PhaseBc::Dirichlet => ScalarBc::Dirichlet0,
            PhaseBc::Neumann => ScalarBc::Neumann0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub extents: Vec<f64>,
    pub cells: Vec<usize>,
    /// One entry per horizontal axis.
    pub horizontal_bc: Vec<AxisBc>,
    pub phase_bc: PhaseBc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub g: f64,
    pub theta: f64,
    pub theta0: f64,
    /// Lowers δ below (1 − ‖φ₀+ψ‖∞)/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_bounds: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_bounds: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot cadence in steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Test hook: φ is multiplied by this factor after every step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_ramp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    pub tol: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub freeze_velocity: bool,
}

impl Default for PicardSection {
    fn default() -> Self {
        let d = PicardConfig::default();
        PicardSection { tol: d.tol, max_iters: d.max_iters, freeze_velocity: d.freeze_velocity }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub div_tol: f64,
    pub mom_tol: f64,
    pub max_outer: usize,
    #[serde(default = "default_max_inner")]
    pub max_inner: usize,
}

fn default_max_inner() -> usize {
    StokesTolerances::default().max_inner
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = StokesTolerances::default();
        SolverSection { div_tol: d.div_tol, mom_tol: d.mom_tol, max_outer: d.max_outer, max_inner: d.max_inner }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Aggf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Used when no `--out` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Aggf]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: None, formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub physics: PhysicsConfig,
    pub time: TimeSection,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parameters handed to the core before δ is fixed from the initial data.
const PLACEHOLDER_DELTA: f64 = 0.5;

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_owned(), source })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The Rayleigh–Taylor configuration used by the acceptance runs.
    pub fn rayleigh_taylor_default() -> Self {
        let s = Setup::rayleigh_taylor(agg_core::equilibrium::Orientation::HeavyOnTop);
        RunConfig {
            domain: DomainConfig {
                extents: s.grid.extents[..2].to_vec(),
                cells: s.grid.cells[..2].to_vec(),
                horizontal_bc: vec![AxisBc::Periodic],
                phase_bc: PhaseBc::Neumann,
            },
            physics: PhysicsConfig {
                rho1: s.params.rho1,
                rho2: s.params.rho2,
                nu1: s.params.nu1,
                nu2: s.params.nu2,
                g: s.params.g,
                theta: s.params.theta,
                theta0: s.params.theta0,
                delta: None,
                rho_bounds: None,
                nu_bounds: None,
            },
            time: TimeSection { dt: 1e-3, t_end: 0.05, snapshot_every: 25, amplitude_ramp: None },
            picard: PicardSection::default(),
            solver: SolverSection::default(),
            scenario: s.scenario,
            output: OutputSection::default(),
        }
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::new(&self.domain.extents, &self.domain.cells, &self.domain.horizontal_bc)?)
    }

    pub fn params(&self) -> CliResult<Params> {
        let p = &self.physics;
        let mut params = Params::new(p.rho1, p.rho2, p.nu1, p.nu2, p.g, p.theta, p.theta0, PLACEHOLDER_DELTA)?;
        if let Some([lo, hi]) = p.rho_bounds {
            params.rho_lo = lo;
            params.rho_hi = hi;
        }
        if let Some([lo, hi]) = p.nu_bounds {
            params.nu_lo = lo;
            params.nu_hi = hi;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn picard_config(&self) -> PicardConfig {
        PicardConfig { tol: self.picard.tol, max_iters: self.picard.max_iters, freeze_velocity: self.picard.freeze_velocity }
    }

    pub fn stokes_tolerances(&self) -> StokesTolerances {
        StokesTolerances {
            mom_tol: self.solver.mom_tol,
            div_tol: self.solver.div_tol,
            max_outer: self.solver.max_outer,
            max_inner: self.solver.max_inner,
        }
    }

    pub fn steps(&self) -> usize {
        (self.time.t_end / self.time.dt).round() as usize
    }

    /// Checks that do not need the equilibrium.
    pub fn validate(&self) -> CliResult<()> {
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) || !(t.t_end > 0.0 && t.t_end.is_finite()) {
            return Err(CliError::Config(format!("dt and t_end must be positive (got {} and {})", t.dt, t.t_end)));
        }
        if let Some(r) = t.amplitude_ramp {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::Config(format!("amplitude_ramp must be positive, got {r}")));
            }
        }
        if !(self.picard.tol > 0.0) || self.picard.max_iters == 0 {
            return Err(CliError::Config("picard tol and max_iters must be positive".into()));
        }
        if !(self.solver.div_tol > 0.0 && self.solver.mom_tol > 0.0) || self.solver.max_outer == 0 {
            return Err(CliError::Config("solver tolerances and max_outer must be positive".into()));
        }
        if let Some(d) = self.physics.delta {
            if !(0.0 < d && d < 1.0) {
                return Err(CliError::Config(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        if self.scenario.kind == ScenarioKind::Snapshot && self.scenario.snapshot.is_none() {
            return Err(CliError::Config("snapshot scenario needs a snapshot path".into()));
        }
        self.grid()?;
        self.params()?;
        Ok(())
    }

    /// Equilibrium, potential with final δ and initial state.
    pub fn problem(&self) -> CliResult<Problem> {
        self.validate()?;
        let grid = self.grid()?;
        let params = self.params()?;
        let bc = self.domain.phase_bc.scalar_bc();
        let snap = match (&self.scenario.kind, &self.scenario.snapshot) {
            (ScenarioKind::Snapshot, Some(path)) => Some(Snapshot::load(path)?.to_scalar(&grid, bc)?),
            _ => None,
        };
        build_problem(&grid, &params, bc, &self.scenario, self.physics.delta, snap.as_ref()).map_err(|e| match e {
            CoreError::Scenario(m) | CoreError::InvalidParams(m) => CliError::Config(m),
            other => CliError::Core(other),
        })
    }

    pub fn setup(&self) -> CliResult<Setup> {
        self.validate()?;
        Ok(Setup {
            grid: self.grid()?,
            params: self.params()?,
            phase_bc: self.domain.phase_bc.scalar_bc(),
            scenario: self.scenario.clone(),
            delta: self.physics.delta,
        })
    }
}

pub fn series_header() -> String {
    SERIES_COLUMNS.join(",")
}

pub fn series_row(r: &DiagnosticsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.t,
        r.e_free,
        r.e_kin,
        r.e_total,
        r.mass,
        r.max_div,
        r.linf_phi_tot,
        r.picard_iters,
        r.picard_ratio_geo,
        r.mom_residual,
        r.div_residual
    )
}

/// Parse a series file written by [`run`], rejecting any other header.
pub fn read_series(path: &Path) -> CliResult<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_owned(), source })?;
    let mut lines = text.lines();
    if lines.next() != Some(series_header().as_str()) {
        return Err(CliError::Config(format!("{} does not carry the series header", path.display())));
    }
    lines
        .map(|line| {
            let v: Vec<&str> = line.split(',').collect();
            if v.len() != SERIES_COLUMNS.len() {
                return Err(CliError::Config(format!("malformed series row {line:?}")));
            }
            let f = |k: usize| v[k].parse::<f64>().map_err(|e| CliError::Config(format!("{e} in {line:?}")));
            Ok(DiagnosticsRecord {
                t: f(0)?,
                e_free: f(1)?,
                e_kin: f(2)?,
                e_total: f(3)?,
                mass: f(4)?,
                max_div: f(5)?,
                linf_phi_tot: f(6)?,
                picard_iters: v[7].parse().map_err(|e| CliError::Config(format!("{e} in {line:?}")))?,
                picard_ratio_geo: f(8)?,
                mom_residual: f(9)?,
                div_residual: f(10)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub t: f64,
    pub delta: f64,
    pub snapshots: usize,
    pub status: String,
}

fn write_fields(out: &Path, step: usize, state: &agg_core::picard::State) -> agg_core::Result<usize> {
    Snapshot::scalar(&state.phi).save(out.join(format!("phi_{step:06}.aggf")))?;
    Snapshot::vector(&state.v).save(out.join(format!("v_{step:06}.aggf")))?;
    Ok(1)
}

/// Build, integrate and write `series.csv`, snapshots and `summary.json`.
/// Errors after the first step still leave the rows written so far.
pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<RunSummary> {
    let pb = cfg.problem()?;
    fs::create_dir_all(out)?;
    let csv = cfg.output.formats.contains(&OutputFormat::Csv);
    let aggf = cfg.output.formats.contains(&OutputFormat::Aggf);
    let mut series = if csv {
        let mut w = BufWriter::new(fs::File::create(out.join("series.csv"))?);
        writeln!(w, "{}", series_header())?;
        writeln!(w, "{}", series_row(&initial_record(&pb.initial, &pb.eq, &pb.phys)))?;
        Some(w)
    } else {
        None
    };
    let every = cfg.time.snapshot_every;
    let mut snapshots = 0;
    if aggf {
        Snapshot::scalar(&pb.eq.psi).save(out.join("psi.aggf"))?;
        Snapshot::scalar(&pb.eq.p_star).save(out.join("p_star.aggf"))?;
        if every > 0 {
            snapshots += write_fields(out, 0, &pb.initial)?;
        }
    }
    let stepper = Stepper::new(&pb.eq, &pb.phys, cfg.picard_config(), cfg.stokes_tolerances())?;
    let steps = cfg.steps();
    let tc = TimeConfig { dt: cfg.time.dt, steps, delta: pb.delta, amplitude_ramp: cfg.time.amplitude_ramp };
    let mut last_t = 0.0;
    let result = time_integrate(pb.initial.clone(), &stepper, &tc, |o| {
        last_t = o.state.t;
        if let Some(w) = series.as_mut() {
            writeln!(w, "{}", series_row(&o.record))?;
        }
        if aggf && every > 0 && (o.step.is_multiple_of(every) || o.step == steps) {
            snapshots += write_fields(out, o.step, o.state)?;
        }
        Ok(())
    });
    if let Some(mut w) = series {
        w.flush()?;
    }
    let status = match &result {
        Ok(_) => "completed".to_string(),
        Err(e) => e.to_string(),
    };
    let summary = RunSummary { steps, t: last_t, delta: pb.delta, snapshots, status };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    result?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSummary {
    pub newton_iterations: usize,
    pub newton_residual: f64,
    pub psi_linf: f64,
    pub mu_level: f64,
    pub mu_slope: f64,
    pub rt_condition: bool,
    pub rt_height: Option<f64>,
    pub balance_residual: f64,
}

/// Write ψ and p* snapshots of the configured equilibrium.
pub fn equilibrium(cfg: &RunConfig, out: &Path) -> CliResult<EquilibriumSummary> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = cfg.params()?.with_delta(cfg.physics.delta.unwrap_or(1e-3))?;
    let pot = RegularizedPotential::new(&params)?;
    let eq = equilibrium_profile(&grid, &params, &pot, cfg.domain.phase_bc.scalar_bc(), &cfg.scenario.profile_spec())?;
    fs::create_dir_all(out)?;
    Snapshot::scalar(&eq.psi).save(out.join("psi.aggf"))?;
    Snapshot::scalar(&eq.p_star).save(out.join("p_star.aggf"))?;
    let rt = eq.rt_condition();
    Ok(EquilibriumSummary {
        newton_iterations: eq.newton_iterations,
        newton_residual: eq.newton_residual,
        psi_linf: eq.psi_linf,
        mu_level: eq.mu_level,
        mu_slope: eq.mu_slope,
        rt_condition: rt.is_some(),
        rt_height: rt,
        balance_residual: eq.balance_residual(&params),
    })
}

pub fn verify_suite(name: &str, cfg: Option<&RunConfig>) -> CliResult<SuiteReport> {
    if !verify::SUITES.contains(&name) {
        return Err(CliError::Config(format!("unknown suite {name:?}; expected one of {:?}", verify::SUITES)));
    }
    let setup = cfg.map(RunConfig::setup).transpose()?;
    Ok(verify::run_suite(name, setup.as_ref())?)
}
