use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::{info, warn};

use pumc::experiment::{
    self, EpsRange, ExperimentConfig, PointsKind, Prepared, TableOptions,
};
use pumc::kernels::KernelFamily;
use pumc::linalg::mmio::write_matrix_market;
use pumc::pde::ProblemKind;
use pumc::stability::ExplicitBound;
use pumc::{Error, Precision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Solve,
    SweepEps,
    SweepPartitions,
    Stability,
    Sparsity,
}

/// Partition-of-unity kernel collocation experiments on the unit square.
#[derive(Debug, Parser)]
#[command(name = "pumc", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "solve")]
    mode: Mode,
    /// convdiff or pseudo
    #[arg(long, default_value = "convdiff")]
    problem: ProblemKind,
    /// uniform or halton
    #[arg(long, default_value = "uniform")]
    points: PointsKind,
    #[arg(long, default_value_t = 16)]
    n_side: usize,
    #[arg(long, default_value_t = 2)]
    m_side: usize,
    /// ga, imq, m4, m2, w4 or w2
    #[arg(long, default_value = "imq")]
    kernel: KernelFamily,
    #[arg(long, default_value_t = 1.35)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    eps_min: f64,
    #[arg(long, default_value_t = 12.0)]
    eps_max: f64,
    #[arg(long, default_value_t = 0.05)]
    eps_step: f64,
    /// Patch-grid sides for the partition and sparsity modes, e.g. 2,3,4
    #[arg(long, value_delimiter = ',')]
    m_list: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 0.001)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    t_final: f64,
    #[arg(long, default_value_t = pumc::covering::DEFAULT_OVERLAP)]
    overlap: f64,
    /// working or extended (double-double local solves)
    #[arg(long, default_value = "working")]
    precision: Precision,
    /// Main CSV output; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Per-node x,y,exact,approx,abs_error (solve mode)
    #[arg(long)]
    fields_out: Option<PathBuf>,
    #[arg(long)]
    nodes_out: Option<PathBuf>,
    #[arg(long)]
    covering_out: Option<PathBuf>,
    /// Matrix Market file of the system matrix C (solve and sparsity modes)
    #[arg(long)]
    matrix_out: Option<PathBuf>,
    /// Leave timing columns empty for byte-reproducible output
    #[arg(long)]
    no_timing: bool,
}

impl Cli {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            problem: self.problem,
            points: self.points,
            n_side: self.n_side,
            m_side: self.m_side,
            kernel: self.kernel,
            eps: self.eps,
            theta: self.theta,
            dt: self.dt,
            t_final: self.t_final,
            overlap: self.overlap,
            precision: self.precision,
        }
    }

    fn m_list(&self) -> Vec<usize> {
        if self.m_list.is_empty() {
            vec![self.m_side]
        } else {
            self.m_list.clone()
        }
    }

    fn table_options(&self) -> TableOptions {
        TableOptions {
            omit_timing: self.no_timing,
        }
    }
}

fn create(path: &Path) -> pumc::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", path.display())))
}

fn main_output(cli: &Cli) -> pumc::Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_aux(cli: &Cli, prepared: &Prepared) -> pumc::Result<()> {
    if let Some(p) = &cli.nodes_out {
        prepared.nodes().write_csv(create(p)?)?;
    }
    if let Some(p) = &cli.covering_out {
        prepared.discretization.covering().write_csv(create(p)?)?;
    }
    if let Some(p) = &cli.matrix_out {
        write_matrix_market(&prepared.system_matrix()?, create(p)?)?;
    }
    Ok(())
}

fn solve(cli: &Cli) -> pumc::Result<()> {
    let cfg = cli.config();
    let prepared = Prepared::new(&cfg)?;
    write_aux(cli, &prepared)?;
    let (run, setup_seconds) = prepared.solve()?;
    let record = experiment::RunRecord {
        config: cfg,
        mae: run.mae,
        cond_estimate: run.cond_estimate,
        setup_seconds,
        solve_seconds: run.solve_seconds,
        steps: run.steps,
    };
    if let Some(p) = &cli.fields_out {
        experiment::write_solution_fields(prepared.nodes(), &run, create(p)?)?;
    }
    info!("mae {:e}, condition estimate of C {:e}", run.mae, run.cond_estimate);
    experiment::write_run_csv(&[record], cli.table_options(), main_output(cli)?)
}

fn sweep_eps(cli: &Cli) -> pumc::Result<()> {
    let range = EpsRange::new(cli.eps_min, cli.eps_max, cli.eps_step)?;
    let sweep = experiment::sweep_eps(&cli.config(), &range, cli.workers)?;
    let best = sweep.best_record();
    eprintln!("optimal eps {} with mae {:e}", best.config.eps, best.mae);
    sweep.write_csv(cli.table_options(), main_output(cli)?)
}

fn sweep_partitions(cli: &Cli) -> pumc::Result<()> {
    let entries = experiment::sweep_partitions(&cli.config(), &cli.m_list(), cli.workers)?;
    experiment::write_partition_csv(&entries, cli.table_options(), main_output(cli)?)
}

fn stability(cli: &Cli) -> pumc::Result<()> {
    let prepared = Prepared::new(&cli.config())?;
    write_aux(cli, &prepared)?;
    let report = prepared.stability()?;
    eprintln!("max amplification {:.15}", report.max_amplification);
    match report.explicit_bound {
        ExplicitBound::Bound(b) => eprintln!("explicit step bound {b:e}"),
        ExplicitBound::Unstable { max_re } => {
            eprintln!("no explicit step bound: eigenvalue real part {max_re:e} > 0")
        }
        ExplicitBound::Unbounded => eprintln!("explicit step unbounded"),
    }
    report.write_csv(main_output(cli)?)
}

fn sparsity(cli: &Cli) -> pumc::Result<()> {
    let cfg = cli.config();
    if cli.matrix_out.is_some() || cli.nodes_out.is_some() || cli.covering_out.is_some() {
        write_aux(cli, &Prepared::new(&cfg)?)?;
    }
    let rows = experiment::sparsity_sweep(&cfg, &cli.m_list())?;
    experiment::write_sparsity_csv(&cfg, &rows, main_output(cli)?)
}

fn run(cli: &Cli) -> pumc::Result<()> {
    cli.config().validate()?;
    if std::env::var_os("PUMC_SEED").is_some() {
        warn!("PUMC_SEED is ignored: every pipeline stage is deterministic");
    }
    match cli.mode {
        Mode::Solve => solve(cli),
        Mode::SweepEps => sweep_eps(cli),
        Mode::SweepPartitions => sweep_partitions(cli),
        Mode::Stability => stability(cli),
        Mode::Sparsity => sparsity(cli),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.marker());
            if e.is_config() || matches!(e, Error::Io(_) | Error::Csv(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
