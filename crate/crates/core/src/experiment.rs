//! Batch experiments in `f64`: single solves, shape-parameter and partition
//! sweeps, stability and sparsity reports, all emitted as CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{sparsity_report, Discretization, SparsityReport};
use crate::covering::{Covering, DEFAULT_OVERLAP};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::localinterp::Precision;
use crate::linalg::SparseMatrix;
use crate::pde::{self, build_system, Operators, Problem, ProblemKind, SolverRun, StepOptions, TimeScheme};
use crate::points::{halton_node_set, uniform_grid, NodeSet};
use crate::stability::{stability_report, StabilityReport};

/// Upper limit for swept shape parameters.
pub const MAX_SWEEP_EPS: f64 = 100.0;

/// Swept values are rounded to this many decimals so that `min + k * step` prints cleanly.
const EPS_SCALE: f64 = 1e10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PointsKind {
    #[default]
    Uniform,
    Halton,
}

impl PointsKind {
    pub fn tag(self) -> &'static str {
        match self {
            PointsKind::Uniform => "uniform",
            PointsKind::Halton => "halton",
        }
    }

    pub fn build(self, n_side: usize) -> Result<NodeSet<f64>> {
        match self {
            PointsKind::Uniform => uniform_grid(n_side),
            PointsKind::Halton => halton_node_set(n_side),
        }
    }
}

impl fmt::Display for PointsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PointsKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "grid" => Ok(PointsKind::Uniform),
            "halton" => Ok(PointsKind::Halton),
            _ => Err(Error::InvalidConfig(format!("unknown point set '{s}'"))),
        }
    }
}

/// One complete run description. The defaults are the 16 x 16 uniform
/// convection-diffusion benchmark with Crank-Nicolson stepping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub points: PointsKind,
    pub n_side: usize,
    pub m_side: usize,
    pub kernel: KernelFamily,
    pub eps: f64,
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub overlap: f64,
    pub precision: Precision,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::ConvDiff,
            points: PointsKind::Uniform,
            n_side: 16,
            m_side: 2,
            kernel: KernelFamily::InverseMultiquadric,
            eps: 1.35,
            theta: 0.5,
            dt: 0.001,
            t_final: 1.0,
            overlap: DEFAULT_OVERLAP,
            precision: Precision::Working,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_side < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_side must be at least 2, got {}",
                self.n_side
            )));
        }
        if self.m_side == 0 {
            return Err(Error::InvalidConfig("m_side must be at least 1".into()));
        }
        if !self.kernel.is_positive_definite() {
            return Err(Error::InvalidConfig(format!(
                "collocation needs a positive definite kernel, {} is not",
                self.kernel
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        self.scheme().map(|_| ())
    }

    pub fn scheme(&self) -> Result<TimeScheme<f64>> {
        TimeScheme::new(self.theta, self.dt, self.t_final)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec<f64>> {
        KernelSpec::new(self.kernel, self.eps)
    }

    pub fn problem(&self) -> Problem<f64> {
        self.problem.with_defaults()
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }

    pub fn with_m_side(&self, m_side: usize) -> Self {
        Self { m_side, ..*self }
    }

    const COLUMNS: [&'static str; 11] = [
        "problem", "points", "n_side", "m_side", "kernel", "eps", "theta", "dt", "t_final",
        "overlap", "precision",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.problem.tag().into(),
            self.points.tag().into(),
            self.n_side.to_string(),
            self.m_side.to_string(),
            self.kernel.tag().into(),
            self.eps.to_string(),
            self.theta.to_string(),
            self.dt.to_string(),
            self.t_final.to_string(),
            self.overlap.to_string(),
            self.precision.tag().into(),
        ]
    }
}

/// Nodes, discretization and assembled operators of one configuration.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub problem: Problem<f64>,
    pub discretization: Discretization<f64>,
    pub operators: Operators<f64>,
    pub setup_seconds: f64,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let start = Instant::now();
        let nodes = config.points.build(config.n_side)?;
        let covering = Covering::new(config.m_side, config.overlap)?;
        let disc = Discretization::with_precision(
            config.kernel_spec()?,
            nodes,
            covering,
            config.precision,
        )?;
        let problem = config.problem();
        let operators = Operators::assemble(&disc, &problem)?;
        Ok(Self {
            config: *config,
            problem,
            discretization: disc,
            operators,
            setup_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn nodes(&self) -> &NodeSet<f64> {
        self.discretization.nodes()
    }

    /// The implicit system matrix `C` of the configured scheme.
    pub fn system_matrix(&self) -> Result<SparseMatrix<f64>> {
        let c = &self.config;
        Ok(build_system(&self.problem, c.theta, c.dt, &self.operators)?.c)
    }

    pub fn solve(&self) -> Result<(SolverRun<f64>, f64)> {
        let start = Instant::now();
        let run = pde::run(
            &self.problem,
            &self.config.scheme()?,
            self.nodes(),
            &self.operators,
            StepOptions::default(),
        )?;
        // factorization of C happens inside the run but counts as setup
        let factor_seconds = (start.elapsed().as_secs_f64() - run.solve_seconds).max(0.0);
        Ok((run, self.setup_seconds + factor_seconds))
    }

    pub fn stability(&self) -> Result<StabilityReport<f64>> {
        stability_report(&self.problem, self.config.theta, self.config.dt, &self.operators)
    }
}

/// Result row of a completed solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub mae: f64,
    pub cond_estimate: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub steps: usize,
}

/// A solve together with the data needed for field output.
pub struct SolveOutcome {
    pub record: RunRecord,
    pub run: SolverRun<f64>,
    pub nodes: NodeSet<f64>,
}

pub fn run_single(config: &ExperimentConfig) -> Result<SolveOutcome> {
    let prepared = Prepared::new(config)?;
    let (run, setup_seconds) = prepared.solve()?;
    Ok(SolveOutcome {
        record: RunRecord {
            config: *config,
            mae: run.mae,
            cond_estimate: run.cond_estimate,
            setup_seconds,
            solve_seconds: run.solve_seconds,
            steps: run.steps,
        },
        nodes: prepared.discretization.nodes().clone(),
        run,
    })
}

/// Output formatting switches shared by the table writers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TableOptions {
    /// Leave wall-clock columns empty so identical configurations give
    /// byte-identical files.
    pub omit_timing: bool,
}

fn timing(t: f64, opts: TableOptions) -> String {
    if opts.omit_timing {
        String::new()
    } else {
        format!("{t:.6}")
    }
}

const RESULT_COLUMNS: [&str; 5] = ["mae", "cond_est", "setup_seconds", "solve_seconds", "steps"];

fn result_fields(r: Option<&RunRecord>, opts: TableOptions) -> Vec<String> {
    match r {
        Some(r) => vec![
            format!("{:e}", r.mae),
            format!("{:e}", r.cond_estimate),
            timing(r.setup_seconds, opts),
            timing(r.solve_seconds, opts),
            r.steps.to_string(),
        ],
        None => vec![String::new(); RESULT_COLUMNS.len()],
    }
}

fn header(extra: &[&str]) -> Vec<String> {
    ExperimentConfig::COLUMNS
        .iter()
        .chain(RESULT_COLUMNS.iter())
        .chain(extra)
        .map(|s| s.to_string())
        .collect()
}

pub fn write_run_csv<W: Write>(records: &[RunRecord], opts: TableOptions, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(&[]))?;
    for r in records {
        let mut row = r.config.fields();
        row.extend(result_fields(Some(r), opts));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Inclusive grid `min, min + step, ..., max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl EpsRange {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        let ok = min > 0.0 && max <= MAX_SWEEP_EPS && min <= max && step > 0.0 && step.is_finite();
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "eps range needs 0 < min <= max <= {MAX_SWEEP_EPS} and step > 0, got [{min}, {max}] step {step}"
            )));
        }
        Ok(Self { min, max, step })
    }

    /// The grid values, each rounded to a multiple of `1e-10`.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| ((self.min + k as f64 * self.step) * EPS_SCALE).round() / EPS_SCALE)
            .collect()
    }
}

/// One entry of a sweep: a finished run or the error that stopped it.
#[derive(Debug)]
pub struct SweepEntry {
    pub config: ExperimentConfig,
    pub outcome: Result<RunRecord>,
}

impl SweepEntry {
    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(_) => "ok",
            Err(e) => e.marker(),
        }
    }

    pub fn mae(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|r| r.mae)
    }
}

#[derive(Debug)]
pub struct EpsSweep {
    pub entries: Vec<SweepEntry>,
    /// Index of the smallest MAE; ties go to the smallest shape parameter.
    pub best: usize,
}

impl EpsSweep {
    pub fn best_entry(&self) -> &SweepEntry {
        &self.entries[self.best]
    }

    pub fn best_record(&self) -> &RunRecord {
        self.best_entry()
            .outcome
            .as_ref()
            .expect("argmin entry succeeded")
    }

    /// One row per value plus a final `argmin` row repeating the best entry.
    pub fn write_csv<W: Write>(&self, opts: TableOptions, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header(&["status"]))?;
        let rows = self
            .entries
            .iter()
            .map(|e| (e, e.status()))
            .chain(std::iter::once((self.best_entry(), "argmin")));
        for (e, status) in rows {
            let mut row = e.config.fields();
            row.extend(result_fields(e.outcome.as_ref().ok(), opts));
            row.push(status.into());
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

fn run_entries(configs: Vec<ExperimentConfig>, workers: usize) -> Result<Vec<SweepEntry>> {
    let solve = |config: ExperimentConfig| SweepEntry {
        outcome: run_single(&config).map(|o| o.record),
        config,
    };
    Ok(pool(workers)?.install(|| configs.into_par_iter().map(solve).collect()))
}

fn argmin(entries: &[SweepEntry]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        if let Some(m) = e.mae() {
            if best.map_or(true, |(_, b)| m < b) {
                best = Some((i, m));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Runs `config` for every shape parameter of `range`. Failing values are kept
/// as marked entries; only a sweep in which every value fails is an error.
pub fn sweep_eps(config: &ExperimentConfig, range: &EpsRange, workers: usize) -> Result<EpsSweep> {
    config.validate()?;
    let mut configs: Vec<ExperimentConfig> =
        range.values().into_iter().map(|e| config.with_eps(e)).collect();
    configs.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let entries = run_entries(configs, workers)?;
    let best = argmin(&entries).ok_or(Error::SweepFailed)?;
    Ok(EpsSweep { entries, best })
}

/// Runs `config` once per patch-grid side in `m_list`.
pub fn sweep_partitions(
    config: &ExperimentConfig,
    m_list: &[usize],
    workers: usize,
) -> Result<Vec<SweepEntry>> {
    if m_list.is_empty() {
        return Err(Error::InvalidConfig("partition list is empty".into()));
    }
    run_entries(m_list.iter().map(|&m| config.with_m_side(m)).collect(), workers)
}

/// Columns: configuration, results, `total_seconds`, `efficiency` (MAE times
/// total seconds) and `status`.
pub fn write_partition_csv<W: Write>(entries: &[SweepEntry], opts: TableOptions, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(&["total_seconds", "efficiency", "status"]))?;
    for e in entries {
        let mut row = e.config.fields();
        let r = e.outcome.as_ref().ok();
        row.extend(result_fields(r, opts));
        match r {
            Some(r) if !opts.omit_timing => {
                let total = r.setup_seconds + r.solve_seconds;
                row.push(format!("{total:.6}"));
                row.push(format!("{:e}", r.mae * total));
            }
            _ => row.extend([String::new(), String::new()]),
        }
        row.push(e.status().into());
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-node CSV `x,y,exact,approx,abs_error`.
pub fn write_solution_fields<W: Write>(nodes: &NodeSet<f64>, run: &SolverRun<f64>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "exact", "approx", "abs_error"])?;
    for ((p, e), a) in nodes.points().iter().zip(&run.exact).zip(&run.approx) {
        out.write_record([
            p[0].to_string(),
            p[1].to_string(),
            format!("{e:e}"),
            format!("{a:e}"),
            format!("{:e}", (a - e).abs()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Pattern statistics of the system matrix `C` for each patch-grid side.
pub fn sparsity_sweep(
    config: &ExperimentConfig,
    m_list: &[usize],
) -> Result<Vec<(usize, Result<SparsityReport>)>> {
    if m_list.is_empty() {
        return Err(Error::InvalidConfig("partition list is empty".into()));
    }
    Ok(m_list
        .iter()
        .map(|&m| {
            let r = Prepared::new(&config.with_m_side(m))
                .and_then(|p| p.system_matrix())
                .map(|c| sparsity_report(&c));
            (m, r)
        })
        .collect())
}

pub fn write_sparsity_csv<W: Write>(
    config: &ExperimentConfig,
    rows: &[(usize, Result<SparsityReport>)],
    w: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut head: Vec<String> = ExperimentConfig::COLUMNS.iter().map(|s| s.to_string()).collect();
    head.extend(
        ["n", "nnz", "density", "bandwidth", "max_row_nnz", "mean_row_nnz", "status"]
            .map(String::from),
    );
    out.write_record(head)?;
    for (m, r) in rows {
        let mut row = config.with_m_side(*m).fields();
        match r {
            Ok(s) => {
                row.extend([
                    s.n.to_string(),
                    s.nnz.to_string(),
                    format!("{:e}", s.density),
                    s.bandwidth.to_string(),
                    s.max_row_nnz.to_string(),
                    s.mean_row_nnz.to_string(),
                    "ok".into(),
                ]);
            }
            Err(e) => {
                row.extend(vec![String::new(); 6]);
                row.push(e.marker().into());
            }
        }
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}
