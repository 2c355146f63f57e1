//! Experiment configuration: TOML schema, defaults and validation.

use std::path::{Path, PathBuf};

use carleman_core::{Domain, Point, Profile, VelocityField};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_SSTAR: f64 = 0.8;
pub const DEFAULT_H_FRACTION: f64 = 0.02;

/// Subcommands of the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Partition,
    Weight,
    Solve,
    VerifyCarleman,
    VerifyObservability,
    Counterexample,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Partition => "partition",
            Subcommand::Weight => "weight",
            Subcommand::Solve => "solve",
            Subcommand::VerifyCarleman => "verify-carleman",
            Subcommand::VerifyObservability => "verify-observability",
            Subcommand::Counterexample => "counterexample",
        }
    }

    fn required_blocks(self) -> &'static [&'static str] {
        match self {
            Subcommand::Partition => &["field"],
            Subcommand::Weight => &["domain", "field"],
            Subcommand::Solve => &["domain", "field", "solve"],
            Subcommand::VerifyCarleman | Subcommand::VerifyObservability => &["domain", "field", "verify"],
            Subcommand::Counterexample => &["counterexample"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainBlock {
    Interval { min: f64, max: f64 },
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Box { min: [f64; 2], max: [f64; 2] },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldBlock {
    Constant { vector: Vec<f64>, horizon: f64 },
    Rotation {
        radius: f64,
        rate: f64,
        #[serde(default)]
        phase: f64,
        horizon: f64,
    },
    Tabulated { table: PathBuf, horizon: f64 },
}

impl FieldBlock {
    pub fn horizon(&self) -> f64 {
        match self {
            FieldBlock::Constant { horizon, .. }
            | FieldBlock::Rotation { horizon, .. }
            | FieldBlock::Tabulated { horizon, .. } => *horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    #[default]
    Uniform,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBlock {
    #[serde(default)]
    pub mode: PartitionMode,
    pub sstar: Option<f64>,
    pub samples: Option<usize>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightBlock {
    pub r: Option<f64>,
    pub sstar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileBlock {
    Gaussian {
        #[serde(default)]
        center: [f64; 2],
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Cosine {
        wavevector: [f64; 2],
        #[serde(default)]
        phase: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Bump {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Linear {
        slope: [f64; 2],
        #[serde(default)]
        offset: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ProfileBlock {
    pub fn to_profile(&self) -> Profile {
        let p = |v: &[f64; 2]| Point::new(v[0], v[1]);
        match self {
            ProfileBlock::Gaussian { center, width, amplitude } => {
                Profile::Gaussian { center: p(center), width: *width, amplitude: *amplitude }
            }
            ProfileBlock::Cosine { wavevector, phase, amplitude } => {
                Profile::Cosine { wavevector: p(wavevector), phase: *phase, amplitude: *amplitude }
            }
            ProfileBlock::Bump { center, radius } => Profile::Bump { center: p(center), radius: *radius },
            ProfileBlock::Linear { slope, offset } => Profile::Linear { slope: p(slope), offset: *offset },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Manufactured,
    #[default]
    Characteristics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryData {
    #[default]
    Exact,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub fixture: ProfileBlock,
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default)]
    pub boundary: BoundaryData,
    pub h: Option<f64>,
    #[serde(default = "default_slices")]
    pub slices: usize,
}

fn default_slices() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum C0Choice {
    Value(f64),
    Named(C0Name),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C0Name {
    TwoMu0Sq,
}

impl Default for C0Choice {
    fn default() -> Self {
        C0Choice::Value(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub s_values: Option<Vec<f64>>,
    #[serde(default = "default_s_count")]
    pub s_count: usize,
    #[serde(default)]
    pub c0: C0Choice,
    #[serde(default = "default_family_size")]
    pub family_size: usize,
    pub h: Option<f64>,
    pub time_step: Option<f64>,
    pub window: Option<[f64; 2]>,
}

fn default_s_count() -> usize {
    16
}

fn default_family_size() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleBlock {
    #[serde(default = "one")]
    pub sigma: f64,
    pub rho: f64,
    pub bump_radius: Option<f64>,
    #[serde(default = "two_pi")]
    pub horizon: f64,
    pub h: Option<f64>,
    #[serde(default = "default_counterexample_slices")]
    pub slices: usize,
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
}

fn two_pi() -> f64 {
    std::f64::consts::TAU
}

fn default_counterexample_slices() -> usize {
    32
}

fn default_energy_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: Option<PathBuf>,
    pub domain: Option<DomainBlock>,
    pub field: Option<FieldBlock>,
    #[serde(default)]
    pub partition: PartitionBlock,
    #[serde(default)]
    pub weight: WeightBlock,
    pub solve: Option<SolveBlock>,
    pub verify: Option<VerifyBlock>,
    pub counterexample: Option<CounterexampleBlock>,
    /// Directory against which relative paths in the document resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Parse and validate `text` for `subcommand`, filling defaults.
pub fn parse_config(text: &str, subcommand: Subcommand) -> Result<ExperimentConfig, CliError> {
    let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::from_toml(text, &e))?;
    config.validate(subcommand)?;
    config.fill_defaults()?;
    Ok(config)
}

/// Read, parse and validate the document at `path`.
pub fn load_config(path: &Path, subcommand: Subcommand) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
    let mut config = parse_config(&text, subcommand)?;
    config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(config)
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_aperture(name: &str, sstar: f64) -> Result<(), CliError> {
    if !(sstar > std::f64::consts::FRAC_1_SQRT_2) {
        return Err(CliError::Validation(format!("aperture must exceed 1/√2 ≈ 0.7071 ({name} = {sstar})")));
    }
    if !(sstar < 1.0) {
        return Err(CliError::Validation(format!("aperture must be below 1 ({name} = {sstar})")));
    }
    Ok(())
}

impl ExperimentConfig {
    fn has_block(&self, name: &str) -> bool {
        match name {
            "domain" => self.domain.is_some(),
            "field" => self.field.is_some(),
            "solve" => self.solve.is_some(),
            "verify" => self.verify.is_some(),
            "counterexample" => self.counterexample.is_some(),
            _ => true,
        }
    }

    fn validate(&self, subcommand: Subcommand) -> Result<(), CliError> {
        for block in subcommand.required_blocks() {
            if !self.has_block(block) {
                return Err(CliError::Validation(format!(
                    "missing [{block}] block required by `{}`",
                    subcommand.name()
                )));
            }
        }
        if let (Some(a), Some(b)) = (self.partition.sstar, self.weight.sstar) {
            if a != b {
                return Err(CliError::Validation(format!(
                    "partition.sstar = {a} and weight.sstar = {b} disagree"
                )));
            }
        }
        if let Some(s) = self.partition.sstar.or(self.weight.sstar) {
            check_aperture("sstar", s)?;
        }
        if let Some(field) = &self.field {
            positive("field.horizon", field.horizon())?;
        }
        if let Some(r) = self.weight.r {
            positive("weight.r", r)?;
        }
        if let Some(m) = self.partition.margin {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(CliError::Validation(format!("partition.margin must be nonnegative, got {m}")));
            }
        }
        if let Some(solve) = &self.solve {
            if let Some(h) = solve.h {
                positive("solve.h", h)?;
            }
            if solve.slices == 0 {
                return Err(CliError::Validation("solve.slices must be at least 1".into()));
            }
        }
        if let Some(verify) = &self.verify {
            if let Some(h) = verify.h {
                positive("verify.h", h)?;
            }
            if let Some(dt) = verify.time_step {
                positive("verify.time_step", dt)?;
            }
            if let C0Choice::Value(c0) = verify.c0 {
                positive("verify.c0", c0)?;
            }
            if verify.family_size == 0 {
                return Err(CliError::Validation("verify.family_size must be at least 1".into()));
            }
            match &verify.s_values {
                Some(s) if s.is_empty() || s.iter().any(|v| !(v.is_finite() && *v > 0.0)) => {
                    return Err(CliError::Validation("verify.s_values must be a nonempty list of positive values".into()));
                }
                None if verify.s_count == 0 => {
                    return Err(CliError::Validation("verify.s_count must be at least 1".into()));
                }
                _ => {}
            }
            if let (Some([s1, s2]), Some(field)) = (verify.window, &self.field) {
                if !(0.0 <= s1 && s1 < s2 && s2 <= field.horizon()) {
                    return Err(CliError::Validation(format!(
                        "verify.window [{s1}, {s2}] must satisfy 0 <= s1 < s2 <= T = {}",
                        field.horizon()
                    )));
                }
            }
        }
        if let Some(c) = &self.counterexample {
            positive("counterexample.sigma", c.sigma)?;
            positive("counterexample.rho", c.rho)?;
            positive("counterexample.horizon", c.horizon)?;
            positive("counterexample.energy_tol", c.energy_tol)?;
            if let Some(h) = c.h {
                positive("counterexample.h", h)?;
            }
            if c.slices == 0 {
                return Err(CliError::Validation("counterexample.slices must be at least 1".into()));
            }
        }
        Ok(())
    }

    fn fill_defaults(&mut self) -> Result<(), CliError> {
        let sstar = self.sstar();
        self.partition.sstar = Some(sstar);
        self.weight.sstar = Some(sstar);
        if let Some(domain) = &self.domain {
            let delta = build_domain(domain)?.diameter();
            self.weight.r.get_or_insert(delta);
            if let Some(solve) = &mut self.solve {
                solve.h.get_or_insert(DEFAULT_H_FRACTION * delta);
            }
            if let Some(verify) = &mut self.verify {
                verify.h.get_or_insert(DEFAULT_H_FRACTION * delta);
            }
        }
        if let Some(c) = &mut self.counterexample {
            c.h.get_or_insert(DEFAULT_H_FRACTION * 2.0 * c.sigma);
        }
        Ok(())
    }

    pub fn sstar(&self) -> f64 {
        self.partition.sstar.or(self.weight.sstar).unwrap_or(DEFAULT_SSTAR)
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        build_domain(self.domain.as_ref().ok_or_else(|| missing("domain"))?)
    }

    pub fn field(&self) -> Result<VelocityField, CliError> {
        let block = self.field.as_ref().ok_or_else(|| missing("field"))?;
        Ok(match block {
            FieldBlock::Constant { vector, horizon } => {
                let v = match vector.as_slice() {
                    [x] => Point::new(*x, 0.0),
                    [x, y] => Point::new(*x, *y),
                    _ => return Err(CliError::Validation("field.vector needs 1 or 2 components".into())),
                };
                VelocityField::constant(v, *horizon)?
            }
            FieldBlock::Rotation { radius, rate, phase, horizon } => {
                VelocityField::rotation(*radius, *rate, *phase, *horizon)?
            }
            FieldBlock::Tabulated { table, horizon } => {
                let path = self.base_dir.join(table);
                let (times, values) = read_table(&path)?;
                VelocityField::tabulated(times, values, *horizon)?
            }
        })
    }
}

fn missing(block: &str) -> CliError {
    CliError::Validation(format!("missing [{block}] block"))
}

pub fn build_domain(block: &DomainBlock) -> Result<Domain, CliError> {
    let p = |v: &[f64; 2]| Point::new(v[0], v[1]);
    Ok(match block {
        DomainBlock::Interval { min, max } => Domain::interval(*min, *max)?,
        DomainBlock::Disk { center, radius } => Domain::disk(p(center), *radius)?,
        DomainBlock::Box { min, max } => Domain::axis_box(p(min), p(max))?,
        DomainBlock::Polygon { vertices } => Domain::convex_polygon(vertices.iter().map(p).collect())?,
    })
}

/// Rows `t, H_1[, H_2]`; a leading non-numeric row is taken as a header.
fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<Point>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot read field table {}: {e}", path.display())))?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Validation(format!("field table {}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(CliError::Validation(format!("field table {} row {}: {e}", path.display(), i + 1)))
            }
        };
        match row.as_slice() {
            [t, x] => {
                times.push(*t);
                values.push(Point::new(*x, 0.0));
            }
            [t, x, y] => {
                times.push(*t);
                values.push(Point::new(*x, *y));
            }
            _ => {
                return Err(CliError::Validation(format!(
                    "field table {} row {} needs 2 or 3 columns",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((times, values))
}
