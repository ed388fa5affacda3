//! Experiment configuration documents.

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::value::RawValue;

use nldtn::material::LawDocument;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Forward,
    Asymptotics,
    Identity,
    Cgo,
    Moments,
    Recover,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Forward => "forward",
            Experiment::Asymptotics => "asymptotics",
            Experiment::Identity => "identity",
            Experiment::Cgo => "cgo",
            Experiment::Moments => "moments",
            Experiment::Recover => "recover",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message} at line {line}, column {column}")]
pub struct ConfigError {
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl ConfigError {
    fn from_json(e: serde_json::Error, line_offset: usize, column_offset: usize) -> Self {
        let (line, column) = if e.line() == 1 { (line_offset, column_offset + e.column()) } else { (line_offset + e.line() - 1, e.column()) };
        let text = e.to_string();
        let message = match text.rfind(" at line ") {
            Some(pos) => text[..pos].to_string(),
            None => text,
        };
        Self { message, line, column }
    }

    pub fn semantic(message: impl Into<String>) -> Self {
        Self { message: message.into(), line: 1, column: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "M", default = "default_cells")]
    pub cells: usize,
}

fn default_dim() -> usize {
    2
}

fn default_cells() -> usize {
    16
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: default_dim(), cells: default_cells() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig<'a> {
    schema_version: String,
    #[serde(default)]
    experiment: Option<Experiment>,
    #[serde(default)]
    grid: Option<GridConfig>,
    #[serde(default)]
    law: Option<LawDocument>,
    #[serde(default, borrow)]
    probes: Option<&'a RawValue>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: GridConfig,
    pub law: Option<LawDocument>,
    pub probes: Probes,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

/// One term `coeff · Π x_d^{p_d} · Π sin(w·x) · Π cos(w·x)` of a boundary function.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    #[serde(default)]
    pub powers: Vec<u32>,
    #[serde(default)]
    pub sin: Option<Vec<f64>>,
    #[serde(default)]
    pub cos: Option<Vec<f64>>,
}

impl Term {
    pub fn new(coeff: f64, powers: &[u32]) -> Self {
        Self { coeff, powers: powers.to_vec(), sin: None, cos: None }
    }

    pub fn eval(&self, p: [f64; 3]) -> f64 {
        let mut v = self.coeff;
        for (d, &e) in self.powers.iter().enumerate().take(3) {
            v *= p[d].powi(e as i32);
        }
        let phase = |w: &Vec<f64>| w.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        if let Some(w) = &self.sin {
            v *= phase(w).sin();
        }
        if let Some(w) = &self.cos {
            v *= phase(w).cos();
        }
        v
    }
}

pub fn eval_terms(terms: &[Term], p: [f64; 3]) -> f64 {
    terms.iter().map(|t| t.eval(p)).sum()
}

fn check_terms(terms: &[Term], dim: usize, what: &str) -> Result<(), ConfigError> {
    if terms.is_empty() {
        return Err(ConfigError::semantic(format!("{what} needs at least one term")));
    }
    for t in terms {
        if t.powers.len() > dim || t.sin.as_ref().is_some_and(|w| w.len() > dim) || t.cos.as_ref().is_some_and(|w| w.len() > dim) {
            return Err(ConfigError::semantic(format!("{what} has a term with more than {dim} entries")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "d_picard_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default = "d_linear_tol")]
    pub linear_tol: f64,
}

fn d_picard_tol() -> f64 {
    1e-12
}
fn d_picard_max_iter() -> usize {
    200
}
fn d_linear_tol() -> f64 {
    1e-14
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { picard_tol: d_picard_tol(), picard_max_iter: d_picard_max_iter(), linear_tol: d_linear_tol() }
    }
}

fn default_data() -> Vec<Term> {
    vec![Term::new(1.0, &[1]), Term::new(0.5, &[0, 2])]
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardProbes {
    #[serde(default = "default_data")]
    pub data: Vec<Term>,
    #[serde(default = "d_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Allowed `max|Λ_C − Λ_γ|` when the law is linear.
    #[serde(default = "d_collapse_tol")]
    pub collapse_tol: f64,
    /// Allowed `|∫ Λ_C dσ|`.
    #[serde(default = "d_conservation_tol")]
    pub conservation_tol: f64,
}

fn d_amplitudes() -> Vec<f64> {
    vec![0.05, 0.1]
}
fn d_collapse_tol() -> f64 {
    1e-10
}
fn d_conservation_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsProbes {
    #[serde(default = "default_data")]
    pub data: Vec<Term>,
    #[serde(default = "d_t_values")]
    pub t_values: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Deviations at or below this count as exact and skip the order check.
    #[serde(default = "d_exact_tol")]
    pub exact_tol: f64,
    #[serde(default = "d_order_min")]
    pub order_min: f64,
    #[serde(default = "d_order_max")]
    pub order_max: f64,
}

fn d_t_values() -> Vec<f64> {
    (3..=7).map(|m| 2f64.powi(-m)).collect()
}
fn d_exact_tol() -> f64 {
    1e-8
}
fn d_order_min() -> f64 {
    0.8
}
fn d_order_max() -> f64 {
    1.3
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityProbes {
    #[serde(default = "d_identity_f")]
    pub f: Vec<Term>,
    #[serde(default = "d_identity_g")]
    pub g: Vec<Term>,
    #[serde(rename = "M_values", default = "d_m_values")]
    pub m_values: Vec<usize>,
    #[serde(default = "d_identity_t")]
    pub t_values: Vec<f64>,
    #[serde(default = "d_identity_order")]
    pub order_min: f64,
    #[serde(default = "d_identity_gap")]
    pub gap_max: f64,
}

fn d_identity_f() -> Vec<Term> {
    vec![Term::new(1.0, &[1]), Term::new(0.5, &[0, 1])]
}
fn d_identity_g() -> Vec<Term> {
    vec![Term::new(1.0, &[0, 1]), Term::new(-0.3, &[1])]
}
fn d_m_values() -> Vec<usize> {
    vec![16, 32, 64]
}
fn d_identity_t() -> Vec<f64> {
    vec![2f64.powi(-5), 2f64.powi(-6)]
}
fn d_identity_order() -> f64 {
    1.8
}
fn d_identity_gap() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgoCase {
    pub k: [f64; 3],
    /// One-based component index.
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgoProbes {
    #[serde(default = "d_cgo_cases")]
    pub cases: Vec<CgoCase>,
    #[serde(default = "d_s_values")]
    pub s_values: Vec<f64>,
    /// Relative agreement between the form at the largest `s` and the Fourier sample.
    #[serde(default = "d_cgo_rel")]
    pub rel_tol: f64,
    /// Tolerance for the zero-frequency coefficient reduction.
    #[serde(default = "d_stage_tol")]
    pub stage_tol: f64,
}

fn d_cgo_cases() -> Vec<CgoCase> {
    vec![
        CgoCase { k: [std::f64::consts::PI, 0.0, 0.0], component: 1 },
        CgoCase { k: [1.3, -2.1, 0.7], component: 2 },
        CgoCase { k: [0.0, 2.0, -1.0], component: 3 },
    ]
}
fn d_s_values() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0]
}
fn d_cgo_rel() -> f64 {
    0.02
}
fn d_stage_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentProbes {
    #[serde(default = "d_moment_rel")]
    pub rel_tol: f64,
    #[serde(default = "d_moment_zero")]
    pub zero_tol: f64,
}

fn d_moment_rel() -> f64 {
    1e-3
}
fn d_moment_zero() -> f64 {
    1e-4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    LogLinear,
    PowerLaw,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "d_nr")]
    pub n_radial: usize,
    #[serde(default = "d_np")]
    pub n_polar: usize,
    #[serde(default = "d_na")]
    pub n_azimuth: usize,
    #[serde(default = "d_target")]
    pub target: f64,
}

fn d_nr() -> usize {
    12
}
fn d_np() -> usize {
    48
}
fn d_na() -> usize {
    8
}
fn d_target() -> f64 {
    1e-4
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { n_radial: d_nr(), n_polar: d_np(), n_azimuth: d_na(), target: d_target() }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverProbes {
    #[serde(default = "d_eps")]
    pub eps_values: Vec<f64>,
    #[serde(default = "d_model")]
    pub model: ModelName,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Relative tolerance per recovered component.
    #[serde(default = "d_recover_rel")]
    pub rel_tol: f64,
    /// Components at or below this magnitude are not held to `rel_tol`.
    #[serde(default = "d_floor")]
    pub component_floor: f64,
    /// Range of the seeded coefficient draw when the config has no law.
    #[serde(default = "d_draw")]
    pub draw_scale: f64,
    /// Cells per axis of the cube used for the affine-probe cross-check.
    #[serde(rename = "oracle_M", default = "d_oracle_m")]
    pub oracle_cells: usize,
}

fn d_eps() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn d_model() -> ModelName {
    ModelName::LogLinear
}
fn d_recover_rel() -> f64 {
    0.05
}
fn d_floor() -> f64 {
    0.1
}
fn d_draw() -> f64 {
    1.0
}
fn d_oracle_m() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq)]
pub enum Probes {
    Forward(ForwardProbes),
    Asymptotics(AsymptoticsProbes),
    Identity(IdentityProbes),
    Cgo(CgoProbes),
    Moments(MomentProbes),
    Recover(RecoverProbes),
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |p| offset - p - 1) + 1;
    (line, column)
}

fn parse_probes<T: for<'de> Deserialize<'de>>(text: &str, raw: Option<&RawValue>) -> Result<T, ConfigError> {
    let body = raw.map_or("{}", |r| r.get());
    serde_json::from_str(body).map_err(|e| match raw {
        Some(r) => {
            let offset = r.get().as_ptr() as usize - text.as_ptr() as usize;
            let (line, column) = position(text, offset);
            ConfigError::from_json(e, line, column - 1)
        }
        None => ConfigError::from_json(e, 1, 0),
    })
}

/// Parses and validates a configuration for `experiment`.
pub fn parse(text: &str, experiment: Experiment) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::from_json(e, 1, 0))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::semantic(format!(
            "unsupported schema_version {:?}, expected {SCHEMA_VERSION:?}",
            raw.schema_version
        )));
    }
    if let Some(e) = raw.experiment {
        if e != experiment {
            return Err(ConfigError::semantic(format!(
                "config is for experiment {:?} but {:?} was requested",
                e.name(),
                experiment.name()
            )));
        }
    }
    let grid = raw.grid.unwrap_or(GridConfig { dim: if experiment == Experiment::Cgo { 3 } else { 2 }, ..GridConfig::default() });
    if !(2..=3).contains(&grid.dim) {
        return Err(ConfigError::semantic(format!("grid.dim must be 2 or 3, got {}", grid.dim)));
    }
    if grid.cells < 4 {
        return Err(ConfigError::semantic(format!("grid.M must be at least 4, got {}", grid.cells)));
    }
    let probes = match experiment {
        Experiment::Forward => {
            let p: ForwardProbes = parse_probes(text, raw.probes)?;
            check_terms(&p.data, grid.dim, "probes.data")?;
            positive_list(&p.amplitudes, "probes.amplitudes")?;
            Probes::Forward(p)
        }
        Experiment::Asymptotics => {
            let p: AsymptoticsProbes = parse_probes(text, raw.probes)?;
            check_terms(&p.data, grid.dim, "probes.data")?;
            decreasing(&p.t_values, "probes.t_values")?;
            Probes::Asymptotics(p)
        }
        Experiment::Identity => {
            let p: IdentityProbes = parse_probes(text, raw.probes)?;
            check_terms(&p.f, grid.dim, "probes.f")?;
            check_terms(&p.g, grid.dim, "probes.g")?;
            decreasing(&p.t_values, "probes.t_values")?;
            if p.m_values.len() < 2 || p.m_values.windows(2).any(|w| w[0] >= w[1]) || p.m_values[0] < 4 {
                return Err(ConfigError::semantic("probes.M_values must increase, start at 4 or more and have two entries or more"));
            }
            Probes::Identity(p)
        }
        Experiment::Cgo => {
            let p: CgoProbes = parse_probes(text, raw.probes)?;
            if grid.dim != 3 {
                return Err(ConfigError::semantic("the cgo experiment needs grid.dim = 3"));
            }
            if p.s_values.len() < 2 || p.s_values.windows(2).any(|w| w[0] >= w[1]) || p.s_values[0] <= 0.0 {
                return Err(ConfigError::semantic("probes.s_values must be positive and increasing, two entries or more"));
            }
            if p.cases.iter().any(|c| !(1..=3).contains(&c.component)) {
                return Err(ConfigError::semantic("probes.cases[].component must be 1, 2 or 3"));
            }
            Probes::Cgo(p)
        }
        Experiment::Moments => Probes::Moments(parse_probes(text, raw.probes)?),
        Experiment::Recover => {
            let p: RecoverProbes = parse_probes(text, raw.probes)?;
            decreasing(&p.eps_values, "probes.eps_values")?;
            if p.eps_values.iter().any(|&e| e > 0.2) {
                return Err(ConfigError::semantic("probes.eps_values must not exceed 0.2"));
            }
            if p.model == ModelName::LogLinear && p.eps_values.len() < 3 {
                return Err(ConfigError::semantic("the log_linear model needs three eps values or more"));
            }
            Probes::Recover(p)
        }
    };
    Ok(ExperimentConfig { experiment, grid, law: raw.law, probes, output_dir: raw.output_dir, seed: raw.seed.unwrap_or(0) })
}

fn positive_list(v: &[f64], what: &str) -> Result<(), ConfigError> {
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) {
        return Err(ConfigError::semantic(format!("{what} must be a non-empty list of positive numbers")));
    }
    Ok(())
}

fn decreasing(v: &[f64], what: &str) -> Result<(), ConfigError> {
    positive_list(v, what)?;
    if v.len() < 2 || v.windows(2).any(|w| w[0] <= w[1]) {
        return Err(ConfigError::semantic(format!("{what} must decrease strictly, two entries or more")));
    }
    Ok(())
}
