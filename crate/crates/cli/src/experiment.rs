//! Subcommand implementations and run artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use carleman_core::partition::{
    piece_margins, DEFAULT_CERTIFICATE_SAMPLES, DEFAULT_GREEDY_MARGIN, DEFAULT_GREEDY_SAMPLES,
};
use carleman_core::transport::CharacteristicTracer;
use carleman_core::verify::{default_s_grid, extend_window_check, weight_time_grid, Verdict, ZERO_TRACE_RATIO};
use carleman_core::{
    boundary_trace, carleman_report, energy_profile, fit_constants, greedy_partition, manufactured_solution,
    observability_ratio, rotating_bump_counterexample, solve_characteristics, uniform_partition,
    verify_cone_condition, CarlemanReport, CarlemanWeight, ConePartition, Discretization, Domain, Point, Profile,
    SolutionField, TimeGrid, VelocityField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{BoundaryData, C0Choice, C0Name, ExperimentConfig, PartitionMode, SolveMethod, Subcommand};
use crate::error::CliError;

/// Node resolution used for the pointwise weight checks, as a fraction of the diameter.
const CHECK_H_FRACTION: f64 = 0.02;
/// Time samples per piece for the pointwise weight checks.
const CHECK_TIME_SAMPLES: usize = 200;
/// Agreement required between the characteristic solver and the exact transported profile.
const SOLVER_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    /// Hard checks always decide the exit code; soft ones only under `--require-observability`.
    pub hard: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub subcommand: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub metrics: Vec<Metric>,
    pub verdict: Option<String>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
    pub timings: Vec<Timing>,
}

impl Summary {
    pub fn failures(&self, require_observability: bool) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed && (c.hard || require_observability)).collect()
    }
}

/// Files written by a run together with its summary record.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

impl RunArtifact {
    pub fn exit_code(&self, require_observability: bool) -> i32 {
        i32::from(!self.summary.failures(require_observability).is_empty())
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: u64,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Run {
    out: PathBuf,
    summary: Summary,
    clock: Instant,
}

impl Run {
    fn new(subcommand: Subcommand, options: &RunOptions) -> Result<Self, CliError> {
        std::fs::create_dir_all(&options.out).map_err(|e| CliError::io(&options.out, &e))?;
        Ok(Self {
            out: options.out.clone(),
            summary: Summary {
                subcommand: subcommand.name().into(),
                seed: options.seed,
                checks: Vec::new(),
                metrics: Vec::new(),
                verdict: None,
                warnings: Vec::new(),
                files: Vec::new(),
                timings: Vec::new(),
            },
            clock: Instant::now(),
        })
    }

    fn lap(&mut self, stage: &str) {
        let seconds = self.clock.elapsed().as_secs_f64();
        self.summary.timings.push(Timing { stage: stage.into(), seconds });
        self.clock = Instant::now();
    }

    fn check(&mut self, name: &str, passed: bool, value: f64, bound: f64, hard: bool) {
        self.summary.checks.push(Check { name: name.into(), passed, value, bound, hard });
    }

    fn metric(&mut self, name: &str, value: f64) {
        self.summary.metrics.push(Metric { name: name.into(), value });
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let path = self.out.join(name);
        let io = |e: csv::Error| CliError::io(&path, &e);
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, &e))?;
        self.summary.files.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<RunArtifact, CliError> {
        let path = self.out.join("summary.json");
        self.summary.files.push(path.clone());
        let text = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, &e))?;
        Ok(RunArtifact { files: self.summary.files.clone(), summary: self.summary })
    }
}

/// Run `subcommand` on a validated configuration, writing CSV artifacts under `options.out`.
pub fn run_experiment(
    config: &ExperimentConfig,
    subcommand: Subcommand,
    options: &RunOptions,
) -> Result<RunArtifact, CliError> {
    let mut run = Run::new(subcommand, options)?;
    match subcommand {
        Subcommand::Partition => partition(config, &mut run)?,
        Subcommand::Weight => weight(config, &mut run)?,
        Subcommand::Solve => solve(config, &mut run)?,
        Subcommand::VerifyCarleman => verify_carleman(config, &mut run)?,
        Subcommand::VerifyObservability => verify_observability(config, &mut run)?,
        Subcommand::Counterexample => counterexample(config, &mut run)?,
    }
    run.finish()
}

fn build_partition(config: &ExperimentConfig, field: &VelocityField) -> Result<ConePartition, CliError> {
    let sstar = config.sstar();
    let p = &config.partition;
    Ok(match p.mode {
        PartitionMode::Uniform => uniform_partition(field, sstar)?,
        PartitionMode::Greedy => greedy_partition(
            field,
            sstar,
            p.samples.unwrap_or(DEFAULT_GREEDY_SAMPLES),
            p.margin.unwrap_or(DEFAULT_GREEDY_MARGIN),
        )?,
    })
}

fn build_weight(
    config: &ExperimentConfig,
    run: &mut Run,
) -> Result<(Domain, VelocityField, CarlemanWeight), CliError> {
    let domain = config.domain()?;
    let field = config.field()?;
    let partition = build_partition(config, &field)?;
    let r = config.weight.r.unwrap_or_else(|| domain.diameter());
    let weight = CarlemanWeight::build(&domain, &field, &partition, r)?;
    run.metric("pieces", partition.len() as f64);
    run.metric("beta", weight.beta());
    run.metric("cone_constant", weight.cone_constant());
    run.lap("weight construction");
    Ok((domain, field, weight))
}

fn condition_check(run: &mut Run, weight: &CarlemanWeight) {
    let c = weight.observability_condition();
    let max = c.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    run.check("quantitative observability condition", c.holds, max, c.threshold, false);
    if let Some(j) = c.jstar {
        run.metric("jstar", j as f64);
    }
}

fn partition(config: &ExperimentConfig, run: &mut Run) -> Result<(), CliError> {
    let field = config.field()?;
    let partition = build_partition(config, &field)?;
    let margins = piece_margins(&partition, &field, DEFAULT_CERTIFICATE_SAMPLES)?;
    let cert = verify_cone_condition(&partition, &field, DEFAULT_CERTIFICATE_SAMPLES)?;
    run.lap("partition");
    let t = partition.times();
    let rows = partition.axes().iter().zip(&margins).enumerate().map(|(j, (eta, (m, worst)))| {
        vec![j.to_string(), num(t[j]), num(t[j + 1]), num(eta.x), num(eta.y), num(*m), num(*worst)]
    });
    run.csv("partition.csv", &["j", "t_start", "t_end", "eta_x", "eta_y", "margin", "worst_time"], rows)?;
    run.check("cone condition margin", cert.is_valid(), cert.min_margin, 0.0, true);
    run.metric("pieces", partition.len() as f64);
    run.metric("sampling_gap", cert.sampling_gap);
    Ok(())
}

fn weight(config: &ExperimentConfig, run: &mut Run) -> Result<(), CliError> {
    let (domain, field, weight) = build_weight(config, run)?;
    let condition = weight.observability_condition();
    let t = weight.partition().times();
    let rows: Vec<Vec<String>> = (0..weight.partition().len())
        .map(|j| {
            let eta = weight.partition().axes()[j];
            let x = weight.apexes()[j];
            vec![
                j.to_string(),
                num(t[j]),
                num(t[j + 1]),
                num(eta.x),
                num(eta.y),
                num(weight.radii()[j]),
                num(x.x),
                num(x.y),
                num(weight.near()[j]),
                num(weight.far()[j]),
                num(weight.beta()),
                num(weight.cone_constant()),
                num(weight.critical_length(j)),
                num(condition.ratios[j]),
                num(condition.threshold),
            ]
        })
        .collect();
    run.csv(
        "weight.csv",
        &[
            "j", "t_j", "t_next", "eta_x", "eta_y", "R_j", "apex_x", "apex_y", "mu_j", "M_j", "beta",
            "cone_constant", "critical_length", "condition_ratio", "threshold",
        ],
        rows,
    )?;

    let h = CHECK_H_FRACTION * domain.diameter();
    let grid = domain.interior_grid(h)?.with_boundary(&domain.boundary_grid(h)?);
    let cone = weight.check_apex_cone(&grid);
    let separation = weight.check_separation();
    let pphi = weight.check_pphi_lower_bound(&field, &grid, CHECK_TIME_SAMPLES);
    run.lap("pointwise checks");
    let min_gap = separation.gaps.iter().copied().fold(f64::INFINITY, f64::min);
    run.check("apex cone containment margin", cone >= 0.0, cone, 0.0, true);
    run.check("apex distance separation gap", separation.ok, min_gap, 0.0, true);
    run.check("extremal apex distances", separation.extremes_ok, f64::NAN, f64::NAN, true);
    run.check("P-phi lower bound margin", pphi >= 0.0, pphi, 0.0, true);
    condition_check(run, &weight);
    Ok(())
}

fn solve(config: &ExperimentConfig, run: &mut Run) -> Result<(), CliError> {
    let block = config.solve.as_ref().expect("validated");
    let domain = config.domain()?;
    let field = config.field()?;
    let h = block.h.expect("defaults filled");
    let horizon = field.horizon();
    let setup = Discretization::new(domain, field, h)?;
    let times = TimeGrid::uniform(0.0, horizon, block.slices)?;
    let profile = block.fixture.to_profile();
    let exact = manufactured_solution(setup.clone(), &profile, times.clone())?;
    let u = match block.method {
        SolveMethod::Manufactured => exact.clone(),
        SolveMethod::Characteristics => {
            let tracer = CharacteristicTracer::new(&setup.domain, &setup.field);
            let initial = |x: &Point| profile.eval(x);
            match block.boundary {
                BoundaryData::Exact => {
                    let g = |x: &Point, t: f64| profile.eval(&(x - tracer.displacement(t)));
                    solve_characteristics(setup.clone(), &initial, &g, times.clone())?
                }
                BoundaryData::Zero => {
                    solve_characteristics(setup.clone(), &initial, &|_: &Point, _: f64| 0.0, times.clone())?
                }
            }
        }
    };
    run.lap("solve");
    run.summary.warnings.extend(u.warnings().iter().cloned());

    let nodes = setup.interior.nodes();
    let rows = (0..times.len()).flat_map(|k| {
        let t = times.times()[k];
        nodes.iter().zip(u.interior_slice(k)).map(move |(x, v)| vec![num(t), num(x.x), num(x.y), num(*v)])
    });
    run.csv("solution.csv", &["t", "x", "y", "u"], rows)?;

    let trace = boundary_trace(&u);
    let rows = (0..times.len()).flat_map(|k| {
        let t = times.times()[k];
        let trace = &trace;
        trace.nodes().iter().enumerate().map(move |(i, x)| {
            vec![
                i.to_string(),
                num(t),
                num(x.x),
                num(x.y),
                num(trace.values(k)[i]),
                num(trace.normal_speed(k)[i]),
                u8::from(trace.mask(k)[i]).to_string(),
            ]
        })
    });
    run.csv("trace.csv", &["node", "t", "x", "y", "g", "h_dot_nu", "in_sigma"], rows)?;

    let p = energy_profile(&u)?;
    let rows = (0..p.times.len()).map(|k| {
        vec![
            num(p.times[k]),
            num(p.energy[k]),
            num(p.flux[k]),
            num(p.identity_residual[k]),
            num(p.forward_slack[k]),
            num(p.backward_slack[k]),
        ]
    });
    run.csv("energy.csv", &["t", "energy", "flux", "identity_residual", "forward_slack", "backward_slack"], rows)?;
    run.check("energy estimate slack", p.estimates_hold(), p.min_slack(), -p.tolerance, true);
    run.metric("identity_residual", p.max_identity_residual());
    run.metric("trace_norm_sq", p.trace_norm_sq);

    if block.method == SolveMethod::Characteristics && block.boundary == BoundaryData::Exact {
        let diff = (0..times.len())
            .flat_map(|k| exact.interior_slice(k).iter().zip(u.interior_slice(k)).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        run.check("characteristic solver agreement", diff <= SOLVER_AGREEMENT, diff, SOLVER_AGREEMENT, true);
    }
    run.lap("diagnostics");
    Ok(())
}

/// A labelled profile together with its CSV description.
struct Member {
    role: &'static str,
    profile: Profile,
}

fn profile_columns(p: &Profile) -> Vec<String> {
    let blank = String::new;
    match p {
        Profile::Gaussian { center, width, amplitude } => vec![
            "gaussian".into(),
            num(center.x),
            num(center.y),
            num(*width),
            blank(),
            blank(),
            blank(),
            num(*amplitude),
        ],
        Profile::Cosine { wavevector, phase, amplitude } => vec![
            "cosine".into(),
            blank(),
            blank(),
            blank(),
            num(wavevector.x),
            num(wavevector.y),
            num(*phase),
            num(*amplitude),
        ],
        other => {
            let mut row = vec![format!("{other:?}")];
            row.extend(std::iter::repeat_with(blank).take(7));
            row
        }
    }
}

const FAMILY_HEADER: [&str; 10] =
    ["solution", "role", "kind", "center_x", "center_y", "width", "wavevector_x", "wavevector_y", "phase", "amplitude"];

/// Uniform point in the disk of radius `radius` about the centroid, restricted to the domain.
fn sample_center(domain: &Domain, radius: f64, rng: &mut ChaCha8Rng) -> Point {
    let c = domain.centroid();
    let planar = domain.dimension() == 2;
    for _ in 0..1000 {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), if planar { rng.random_range(-1.0..1.0) } else { 0.0 });
        if a * a + b * b > 1.0 {
            continue;
        }
        let p = c + radius * Point::new(a, b);
        if domain.contains(&p) {
            return p;
        }
    }
    c
}

/// Seeded Gaussians with centres within a quarter diameter of the centroid,
/// every third member replaced by a plane cosine.
fn random_family(domain: &Domain, n: usize, rng: &mut ChaCha8Rng) -> Vec<Profile> {
    let delta = domain.diameter();
    let planar = domain.dimension() == 2;
    (0..n)
        .map(|i| {
            if i % 3 == 2 {
                let k = 3.0 / delta;
                let wy = if planar { rng.random_range(-k..k) } else { 0.0 };
                Profile::Cosine {
                    wavevector: Point::new(rng.random_range(-k..k), wy),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                    amplitude: 1.0,
                }
            } else {
                Profile::Gaussian {
                    center: sample_center(domain, 0.25 * delta, rng),
                    width: rng.random_range(0.15..0.3) * delta,
                    amplitude: 1.0,
                }
            }
        })
        .collect()
}

/// The widest Gaussians at the centroid and at the compass points a quarter diameter away.
fn extreme_family(domain: &Domain) -> Vec<Profile> {
    let delta = domain.diameter();
    let c = domain.centroid();
    let offsets: &[(f64, f64)] = if domain.dimension() == 2 {
        &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
    } else {
        &[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)]
    };
    offsets
        .iter()
        .map(|&(a, b)| c + 0.25 * delta * Point::new(a, b))
        .filter(|p| domain.contains(p))
        .map(|center| Profile::Gaussian { center, width: 0.3 * delta, amplitude: 1.0 })
        .collect()
}

fn verify_carleman(config: &ExperimentConfig, run: &mut Run) -> Result<(), CliError> {
    let block = config.verify.as_ref().expect("validated");
    let (domain, field, weight) = build_weight(config, run)?;
    let horizon = field.horizon();
    let setup = Discretization::new(domain.clone(), field.clone(), block.h.expect("defaults filled"))?;
    let times = weight_time_grid(&weight, block.time_step.unwrap_or(horizon / 100.0))?;
    let s_values = match &block.s_values {
        Some(s) => s.clone(),
        None => {
            let estimate = weight.estimate_s0(&field, &setup.interior, &default_s_grid(1.0, block.s_count));
            run.metric("s0", estimate.s0);
            default_s_grid(estimate.s0, block.s_count)
        }
    };
    let c0 = match block.c0 {
        C0Choice::Value(v) => v,
        C0Choice::Named(C0Name::TwoMu0Sq) => 2.0 * weight.near()[0].powi(2),
    };
    run.metric("c0", c0);

    let mut rng = ChaCha8Rng::seed_from_u64(run.summary.seed);
    let members: Vec<Member> = extreme_family(&domain)
        .into_iter()
        .map(|profile| Member { role: "fit", profile })
        .chain(random_family(&domain, block.family_size, &mut rng).into_iter().map(|profile| Member {
            role: "holdout",
            profile,
        }))
        .collect();
    let reports: Vec<CarlemanReport> = members
        .iter()
        .map(|m| {
            let u = manufactured_solution(setup.clone(), &m.profile, times.clone())?;
            Ok(carleman_report(&u, &weight, &s_values, c0)?)
        })
        .collect::<Result<_, CliError>>()?;
    run.lap("carleman reports");

    let (fit, holdout): (Vec<_>, Vec<_>) =
        members.iter().zip(&reports).partition(|(m, _)| m.role == "fit");
    let fit: Vec<CarlemanReport> = fit.into_iter().map(|(_, r)| r.clone()).collect();
    let holdout: Vec<CarlemanReport> = holdout.into_iter().map(|(_, r)| r.clone()).collect();
    let result = fit_constants(&fit, &holdout)?;

    let family = members.iter().enumerate().map(|(i, m)| {
        let mut row = vec![i.to_string(), m.role.to_string()];
        row.extend(profile_columns(&m.profile));
        row
    });
    run.csv("family.csv", &FAMILY_HEADER, family)?;
    let rows = members.iter().zip(&reports).enumerate().flat_map(|(i, (m, r))| {
        let c = result.c_uniform;
        (0..r.s_values.len()).map(move |k| {
            vec![
                i.to_string(),
                m.role.to_string(),
                num(r.s_values[k]),
                num(r.ln_bulk[k]),
                num(r.ln_slices),
                num(r.ln_residual[k]),
                num(r.sigma),
                num(r.final_energy),
                num(r.ln_lhs(k)),
                num(r.ln_rhs(k, c)),
                num(r.constants[k]),
                u8::from(r.holds_at(k, c)).to_string(),
            ]
        })
    });
    run.csv(
        "carleman.csv",
        &[
            "solution", "role", "s", "ln_bulk", "ln_slices", "ln_residual", "sigma", "final_energy", "ln_lhs",
            "ln_rhs_uniform", "constant", "holds_uniform",
        ],
        rows,
    )?;

    let worst = reports.iter().map(CarlemanReport::max_constant).fold(1.0, f64::max);
    let holdout_max = holdout.iter().map(CarlemanReport::max_constant).fold(1.0, f64::max);
    run.check("Carleman estimate with finite constant", worst.is_finite(), worst, f64::INFINITY, true);
    run.check(
        "Carleman estimate with uniform constant on holdout",
        result.valid_on_holdout,
        holdout_max,
        result.c_uniform,
        true,
    );
    run.metric("c_uniform", result.c_uniform);
    run.metric("holdout_failures", result.failures.len() as f64);
    Ok(())
}

fn verify_observability(config: &ExperimentConfig, run: &mut Run) -> Result<(), CliError> {
    let block = config.verify.as_ref().expect("validated");
    let (domain, field, weight) = build_weight(config, run)?;
    let horizon = field.horizon();
    let setup = Discretization::new(domain.clone(), field.clone(), block.h.expect("defaults filled"))?;
    let times = weight_time_grid(&weight, block.time_step.unwrap_or(horizon / 100.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.summary.seed);
    let profiles = random_family(&domain, block.family_size, &mut rng);
    let solutions: Vec<SolutionField> = profiles
        .iter()
        .map(|p| manufactured_solution(setup.clone(), p, times.clone()))
        .collect::<Result<_, _>>()?;
    let report = observability_ratio(&solutions, &weight)?;
    run.lap("observability ratios");

    let family = profiles.iter().enumerate().map(|(i, p)| {
        let mut row = vec![i.to_string(), "family".to_string()];
        row.extend(profile_columns(p));
        row
    });
    run.csv("family.csv", &FAMILY_HEADER, family)?;
    let rows = (0..solutions.len()).map(|i| {
        vec![i.to_string(), num(report.sup_norms[i]), num(report.trace_norms[i]), num(report.ratios[i])]
    });
    run.csv("observability.csv", &["solution", "sup_norm", "trace_norm", "ratio"], rows)?;
    let c = &report.condition;
    let t = weight.partition().times();
    let rows = (0..c.ratios.len()).map(|j| {
        vec![j.to_string(), num(t[j]), num(t[j + 1]), num(c.ratios[j]), num(c.threshold), num(weight.critical_length(j))]
    });
    run.csv("condition.csv", &["j", "t_j", "t_next", "ratio", "threshold", "critical_length"], rows)?;

    condition_check(run, &weight);
    let nonzero = report.ratios.iter().all(|r| r.is_finite());
    run.check("nonzero boundary trace", nonzero, report.family_sup, f64::INFINITY, false);
    run.metric("family_sup", report.family_sup);
    run.summary.verdict = Some(report.verdict.to_string());

    if let Some([s1, s2]) = block.window {
        let probes = solutions
            .iter()
            .map(|u| extend_window_check(u, (s1, s2), 1.0))
            .collect::<Result<Vec<_>, _>>()?;
        let c_window = probes.iter().filter(|w| !w.skipped).map(|w| w.window_sup).fold(0.0, f64::max).sqrt();
        let checks = solutions
            .iter()
            .map(|u| extend_window_check(u, (s1, s2), c_window))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = checks.iter().enumerate().map(|(i, w)| {
            vec![
                i.to_string(),
                num(w.window_sup),
                num(w.before.0),
                num(w.before.1),
                num(w.after.0),
                num(w.after.1),
                u8::from(w.skipped).to_string(),
                u8::from(w.holds()).to_string(),
            ]
        });
        run.csv(
            "window.csv",
            &["solution", "window_sup", "before", "before_bound", "after", "after_bound", "skipped", "holds"],
            rows,
        )?;
        let worst = checks
            .iter()
            .filter(|w| !w.skipped)
            .map(|w| (w.before.0 - w.before.1).max(w.after.0 - w.after.1))
            .fold(f64::NEG_INFINITY, f64::max);
        run.check("window extension bound", checks.iter().all(|w| w.holds()), worst, 0.0, true);
        run.metric("window_constant", c_window);
        run.lap("window extension");
    }
    Ok(())
}

fn counterexample(config: &ExperimentConfig, run: &mut Run) -> Result<(), CliError> {
    let block = config.counterexample.as_ref().expect("validated");
    let scenario = rotating_bump_counterexample(block.sigma, block.rho, block.bump_radius, block.horizon)?;
    let times = TimeGrid::uniform(0.0, block.horizon, block.slices)?;
    let u = scenario.solve(block.h.expect("defaults filled"), times.clone())?;
    run.lap("solve");
    run.summary.warnings.extend(u.warnings().iter().cloned());
    let trace = boundary_trace(&u);
    let e0 = u.energy(0);
    let rows = (0..times.len()).map(|k| {
        let t = times.times()[k];
        let c = scenario.support_center(t);
        let g_max = trace.values(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        vec![k.to_string(), num(t), num(u.energy(k)), num(c.x), num(c.y), num(g_max)]
    });
    run.csv("counterexample.csv", &["k", "t", "energy", "support_x", "support_y", "trace_max"], rows)?;

    let trace_norm = trace.norm_sq().max(0.0).sqrt();
    let bound = ZERO_TRACE_RATIO * e0.sqrt();
    run.check("zero boundary trace", trace_norm <= bound, trace_norm, bound, true);
    let drift = (0..times.len()).map(|k| (u.energy(k) - e0).abs()).fold(0.0, f64::max) / e0;
    run.check("constant interior norm", drift <= block.energy_tol, drift, block.energy_tol, true);

    let partition = uniform_partition(&scenario.field, config.sstar())?;
    let weight = CarlemanWeight::build(&scenario.domain, &scenario.field, &partition, scenario.domain.diameter())?;
    let report = observability_ratio(std::slice::from_ref(&u), &weight)?;
    run.check("observability fails for the rotating bump", report.verdict == Verdict::Fails, report.ratios[0], f64::INFINITY, true);
    run.summary.verdict = Some(report.verdict.to_string());
    run.metric("initial_energy", e0);
    run.lap("diagnostics");
    Ok(())
}

/// Resolve the output directory: explicit flag, then the config's `out`, then `carleman-out`.
pub fn output_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.out.as_ref().map(|o| config.base_dir.join(o)))
        .unwrap_or_else(|| PathBuf::from("carleman-out"))
}
