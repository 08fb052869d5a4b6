use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use rendezvous_core::dynamics::{in_representation, vector_field_full, FieldKind, Lambda, ModelParams, Representation};
use rendezvous_core::equilibria::{deadlock_equilibrium, search_symmetric_equilibria, SearchReport};
use rendezvous_core::linearization::{
    jacobian_full, jacobian_slow, sigma_hat_bound, sigma_star_slow_limit, spectrum, stability_boundary,
};
use rendezvous_core::output::{
    format_float, trajectory_header, write_boundary_csv, write_regime_csv, write_section_csv,
    write_trajectory_csv,
};
use rendezvous_core::simulate::{
    classify_trajectory, initial_condition, integrate_with, poincare_section_from, recurrence_check,
    sweep_regimes, ClassifierConfig, ClusterSeparation, Crossing, InitialKind, InitialPolicy, RecurrenceReport,
    RegimeLabel, SweepCell, SweepSpec, Trajectory,
};
use serde::Serialize;

use crate::args::{
    BoundaryArgs, CommonArgs, EigenArgs, EquilibriumArgs, Format, ModelArgs, PoincareArgs, RecurrenceArgs,
    RunArgs, SimulateArgs, SweepArgs,
};
use crate::config::FileConfig;
use crate::error::{io_error, CliError};
use crate::grid::{parse_grid, parse_lambda_grid};

type Out = Box<dyn Write>;

/// Output sink and format after merging flags over the manifest.
struct Sink {
    format: Format,
    path: Option<PathBuf>,
}

impl Sink {
    fn resolve(common: &CommonArgs, file: &FileConfig, default: Format) -> Self {
        Sink {
            format: common.format.or(file.format).unwrap_or(default),
            path: common.output.clone().or_else(|| file.output.clone().map(PathBuf::from)),
        }
    }

    /// Opened before any computation so a bad path fails fast.
    fn open(&self) -> Result<Out, CliError> {
        match &self.path {
            None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
            Some(p) => {
                let f = File::create(p).map_err(|e| io_error(&format!("cannot write {}", p.display()), e))?;
                Ok(Box::new(BufWriter::new(f)))
            }
        }
    }
}

fn finish(mut out: Out) -> Result<(), CliError> {
    out.flush().map_err(|e| io_error("write failed", e))
}

fn write_json<T: Serialize>(out: &mut Out, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Validation(format!("write failed: {e}")))?;
    writeln!(out).map_err(|e| io_error("write failed", e))
}

fn io(r: io::Result<()>) -> Result<(), CliError> {
    r.map_err(|e| io_error("write failed", e))
}

struct Model {
    params: ModelParams,
}

impl Model {
    fn resolve(args: &ModelArgs, file: &FileConfig, default_sigma: f64) -> Result<Self, CliError> {
        let n = args.n.or(file.n).unwrap_or(3);
        let sigma = args.sigma.or(file.sigma).unwrap_or(default_sigma);
        let lambda = match args.lambda {
            Some(l) => l,
            None => file.lambda()?.unwrap_or(Lambda::Finite(1.0)),
        };
        Ok(Model {
            params: ModelParams::symmetric(n, sigma, lambda)?,
        })
    }
}

/// Everything needed to integrate one seeded trajectory.
struct Run {
    seed: u64,
    initial: InitialKind,
    horizon: f64,
    classifier: ClassifierConfig,
}

impl Run {
    fn resolve(args: &RunArgs, file: &FileConfig, default_horizon: f64) -> Result<Self, CliError> {
        let mut classifier = file.classifier.unwrap_or_default();
        if let Some(r) = args.rtol.or(file.rtol) {
            classifier.rtol = r;
        }
        if let Some(a) = args.atol.or(file.atol) {
            classifier.atol = a;
        }
        classifier.validate()?;
        let horizon = args.horizon.or(file.horizon).unwrap_or(default_horizon);
        check_horizon(horizon)?;
        let initial = match args.initial {
            Some(k) => k,
            None => file.initial_kind()?.unwrap_or(InitialKind::Generic),
        };
        Ok(Run {
            seed: args.seed.or(file.seed).unwrap_or(0),
            initial,
            horizon,
            classifier,
        })
    }

    fn integrate(&self, params: &ModelParams) -> Result<Trajectory, CliError> {
        let z = initial_condition(self.initial, params, self.seed, Representation::Rotated)?;
        let kind = if params.lambda.is_infinite() { FieldKind::Slow } else { FieldKind::Full };
        Ok(integrate_with(kind, params, &z, self.horizon, &self.classifier.integrator_options())?)
    }
}

fn check_horizon(horizon: f64) -> Result<(), CliError> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("horizon must be positive and finite, got {horizon}")))
    }
}

fn repr_name(r: Representation) -> &'static str {
    match r {
        Representation::Rotated => "rotated",
        Representation::Original => "original",
    }
}

#[derive(Serialize)]
struct SimulateDoc<'a> {
    n_agents: usize,
    sigma: f64,
    lambda: Lambda,
    seed: u64,
    initial: InitialKind,
    horizon: f64,
    representation: &'static str,
    regime: &'a RegimeLabel,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let model = Model::resolve(&args.model, &file, 1.0)?;
    let run = Run::resolve(&args.run, &file, 500.0)?;
    let samples = args.samples.or(file.samples).unwrap_or(1001);
    if samples < 2 {
        return Err(CliError::Validation(format!("need at least 2 samples, got {samples}")));
    }
    let repr = if args.original || file.original.unwrap_or(false) {
        Representation::Original
    } else {
        Representation::Rotated
    };
    let sink = Sink::resolve(&args.common, &file, Format::Csv);
    let mut out = sink.open()?;

    let traj = run.integrate(&model.params)?;
    let label = classify_trajectory(&traj, &run.classifier)?;
    let rows = traj
        .sample(0.0, run.horizon, samples)?
        .into_iter()
        .map(|(t, s)| Ok((t, in_representation(&s, repr)?)))
        .collect::<Result<Vec<_>, rendezvous_core::Error>>()?;

    match sink.format {
        Format::Csv => {
            io(write_trajectory_csv(&mut out, &rows))?;
            eprintln!(
                "regime: {} (metric_final={}, spread_final={})",
                label.label,
                format_float(label.metric_final),
                format_float(label.spread_final)
            );
        }
        Format::Json => {
            let p = &model.params;
            let doc = SimulateDoc {
                n_agents: p.n_agents,
                sigma: p.sigma,
                lambda: p.lambda,
                seed: run.seed,
                initial: run.initial,
                horizon: run.horizon,
                representation: repr_name(repr),
                regime: &label,
                columns: trajectory_header(p.n_agents, p.dimension, repr),
                rows: rows
                    .iter()
                    .map(|(t, s)| std::iter::once(*t).chain(s.to_row()).collect())
                    .collect(),
            };
            write_json(&mut out, &doc)?;
        }
    }
    finish(out)
}

#[derive(Serialize)]
struct EquilibriumDoc {
    n_agents: usize,
    sigma: f64,
    lambda: Lambda,
    y_star: f64,
    m_star: f64,
    v_star: [f64; 2],
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    search: Option<SearchReport>,
}

pub fn equilibrium(args: &EquilibriumArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let model = Model::resolve(&args.model, &file, 1.0)?;
    let sink = Sink::resolve(&args.common, &file, Format::Json);
    let mut out = sink.open()?;
    let p = &model.params;
    let point = deadlock_equilibrium(p)?;
    // the field is evaluated with finite λ so that the value rows count too
    let check = p.with_lambda(Lambda::Finite(p.lambda.finite().unwrap_or(1.0)));
    let residual = vector_field_full(&point.state, &check)?.max_abs();
    let restarts = args.restarts.or(file.restarts).unwrap_or(0);
    let search = if restarts > 0 {
        Some(search_symmetric_equilibria(p, restarts, args.seed.or(file.seed).unwrap_or(0))?)
    } else {
        None
    };
    let doc = EquilibriumDoc {
        n_agents: p.n_agents,
        sigma: p.sigma,
        lambda: p.lambda,
        y_star: point.y_star,
        m_star: point.motivation,
        v_star: [point.phi1_star, point.phi2_star],
        residual,
        search,
    };
    match sink.format {
        Format::Json => write_json(&mut out, &doc)?,
        Format::Csv => {
            io(writeln!(out, "y_star,m_star,v1_star,v2_star,residual"))?;
            io(writeln!(
                out,
                "{}",
                [doc.y_star, doc.m_star, doc.v_star[0], doc.v_star[1], doc.residual]
                    .map(format_float)
                    .join(",")
            ))?;
        }
    }
    finish(out)
}

#[derive(Serialize)]
struct Eigenvalue {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct EigenDoc {
    kind: &'static str,
    n_agents: usize,
    sigma: f64,
    lambda: Lambda,
    max_real: f64,
    /// `σ*` for the slow limit, `σ̂` otherwise.
    threshold: f64,
    eigenvalues: Vec<Eigenvalue>,
}

pub fn eigen(args: &EigenArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let model = Model::resolve(&args.model, &file, 1.0)?;
    let sink = Sink::resolve(&args.common, &file, Format::Csv);
    let mut out = sink.open()?;
    let p = &model.params;
    let (kind, jac, threshold) = match p.lambda {
        Lambda::Infinite => ("slow", jacobian_slow(p.n_agents, p.sigma)?, sigma_star_slow_limit(p.n_agents)?),
        Lambda::Finite(l) => ("full", jacobian_full(p.n_agents, p.sigma, l)?, sigma_hat_bound(p.n_agents, l)?),
    };
    let eig = spectrum(&jac.assembled)?;
    match sink.format {
        Format::Csv => {
            io(writeln!(out, "index,re,im"))?;
            for (i, z) in eig.iter().enumerate() {
                io(writeln!(out, "{i},{},{}", format_float(z.re), format_float(z.im)))?;
            }
        }
        Format::Json => {
            let doc = EigenDoc {
                kind,
                n_agents: p.n_agents,
                sigma: p.sigma,
                lambda: p.lambda,
                max_real: eig[0].re,
                threshold,
                eigenvalues: eig.iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect(),
            };
            write_json(&mut out, &doc)?;
        }
    }
    finish(out)
}

fn jobs(flag: Option<usize>, file: &FileConfig) -> Result<Option<usize>, CliError> {
    match flag.or(file.jobs) {
        Some(0) => Err(CliError::Validation("--jobs must be at least 1".into())),
        j => Ok(j),
    }
}

fn with_pool<T>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Single-threaded runs go through a one-worker pool.
pub fn sequential<T: Send>(f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    with_pool(Some(1), f)?
}

#[derive(Serialize)]
struct BoundaryRow {
    lambda: f64,
    sigma_critical: Option<f64>,
    sigma_hat: f64,
    crossing_re: Option<f64>,
    crossing_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn boundary(args: &BoundaryArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let n = args.n.or(file.n).unwrap_or(3);
    let spec = match &args.lambda_grid {
        Some(s) => s.clone(),
        None => file.lambda_grid.as_ref().map_or("0.1:10:50".into(), |g| g.to_spec()),
    };
    let lambdas = parse_grid(&spec)?;
    let tol = args.tol.or(file.tol).unwrap_or(1e-10);
    if !(tol > 0.0) {
        return Err(CliError::Validation(format!("tolerance must be positive, got {tol}")));
    }
    let jobs = jobs(args.jobs, &file)?;
    let sink = Sink::resolve(&args.common, &file, Format::Csv);
    let mut out = sink.open()?;
    let points = with_pool(jobs, || stability_boundary(n, &lambdas, tol))??;
    match sink.format {
        Format::Csv => io(write_boundary_csv(&mut out, &points))?,
        Format::Json => {
            let rows: Vec<BoundaryRow> = points
                .iter()
                .map(|p| BoundaryRow {
                    lambda: p.lambda,
                    sigma_critical: p.sigma_critical.as_ref().ok().copied(),
                    sigma_hat: p.sigma_hat,
                    crossing_re: p.crossing_eigenvalue.map(|z| z.re),
                    crossing_im: p.crossing_eigenvalue.map(|z| z.im),
                    error: p.sigma_critical.as_ref().err().map(|e| e.to_string()),
                })
                .collect();
            write_json(&mut out, &rows)?;
        }
    }
    finish(out)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let sigma_spec = match &args.sigma_grid {
        Some(s) => s.clone(),
        None => file.sigma_grid.as_ref().map_or("0.1:1:10".into(), |g| g.to_spec()),
    };
    let lambda_spec = match &args.lambda_grid {
        Some(s) => s.clone(),
        None => file.lambda_grid.as_ref().map_or("1".into(), |g| g.to_spec()),
    };
    let policy = match args.initial {
        Some(p) => p,
        None => file.initial_policy()?.unwrap_or(InitialPolicy::Both),
    };
    let horizon = args.horizon.or(file.horizon).unwrap_or(500.0);
    check_horizon(horizon)?;
    let mut config = file.classifier.unwrap_or_default();
    if let Some(r) = file.rtol {
        config.rtol = r;
    }
    if let Some(a) = file.atol {
        config.atol = a;
    }
    let spec = SweepSpec {
        n_agents: args.n.or(file.n).unwrap_or(3),
        sigmas: parse_grid(&sigma_spec)?,
        lambdas: parse_lambda_grid(&lambda_spec)?,
        policy,
        seed: args.seed.or(file.seed).unwrap_or(0),
        horizon,
        config,
    };
    let jobs = jobs(args.jobs, &file)?;
    let sink = Sink::resolve(&args.common, &file, Format::Csv);
    let mut out = sink.open()?;
    let cells: Vec<SweepCell> = with_pool(jobs, || sweep_regimes(&spec))??;
    match sink.format {
        Format::Csv => io(write_regime_csv(&mut out, &cells))?,
        Format::Json => write_json(&mut out, &cells)?,
    }
    finish(out)
}

#[derive(Serialize)]
struct SectionDoc<'a> {
    from: f64,
    horizon: f64,
    max_residual: f64,
    directions_alternate: bool,
    separation: Option<ClusterSeparation>,
    disjoint: bool,
    crossings: &'a [Crossing],
}

pub fn poincare(args: &PoincareArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let model = Model::resolve(&args.model, &file, 4.0)?;
    let run = Run::resolve(&args.run, &file, 3000.0)?;
    let from = args.from.or(file.from).unwrap_or(0.5 * run.horizon);
    if !(from >= 0.0 && from < run.horizon) {
        return Err(CliError::Validation(format!(
            "--from must lie in [0, horizon), got {from}"
        )));
    }
    if model.params.n_agents != 3 {
        return Err(CliError::Validation(format!(
            "the section is defined for N = 3, got N = {}",
            model.params.n_agents
        )));
    }
    let sink = Sink::resolve(&args.common, &file, Format::Csv);
    let mut out = sink.open()?;
    let traj = run.integrate(&model.params)?;
    let section = poincare_section_from(&traj, from)?;
    match sink.format {
        Format::Csv => io(write_section_csv(&mut out, &section))?,
        Format::Json => {
            let separation = section.cluster_separation();
            let doc = SectionDoc {
                from,
                horizon: run.horizon,
                max_residual: section.max_residual(),
                directions_alternate: section.directions_alternate(),
                separation,
                disjoint: separation.is_some_and(|s| s.disjoint()),
                crossings: &section.crossings,
            };
            write_json(&mut out, &doc)?;
        }
    }
    finish(out)
}

#[derive(Serialize)]
struct RecurrenceDoc<'a> {
    passed: bool,
    #[serde(flatten)]
    report: &'a RecurrenceReport,
}

pub fn recurrence(args: &RecurrenceArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let model = Model::resolve(&args.model, &file, 4.0)?;
    let run = Run::resolve(&args.run, &file, 500.0)?;
    let epsilon = args.epsilon.or(file.epsilon).unwrap_or(0.1);
    let sink = Sink::resolve(&args.common, &file, Format::Json);
    let mut out = sink.open()?;
    let traj = run.integrate(&model.params)?;
    let report = recurrence_check(&traj, epsilon)?;
    match sink.format {
        Format::Json => write_json(
            &mut out,
            &RecurrenceDoc {
                passed: report.passed(),
                report: &report,
            },
        )?,
        Format::Csv => {
            io(writeln!(out, "epsilon,window_start,window_end,minima,satisfied,fraction,worst_gap,passed"))?;
            io(writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                format_float(report.epsilon),
                format_float(report.window.0),
                format_float(report.window.1),
                report.minima,
                report.satisfied,
                format_float(report.fraction),
                format_float(report.worst_gap),
                report.passed()
            ))?;
        }
    }
    finish(out)
}
