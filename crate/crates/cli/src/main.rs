//! Command-line driver: quench simulations, cross-oracle checks, and parameter
//! sweeps with deterministic CSV/JSON output.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 oracle failure.

mod config;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_value_list, FileConfig};
use krylov_quench::analysis::{
    detect_dqpt, g0_convergence, metastability_from_output, sweep, G0Convergence, SweepConfig,
};
use krylov_quench::export::{
    fmt_f64, write_eigenvalues_csv, write_json_pretty, write_lanczos_csv, write_series_csv,
    write_sweep_csv, write_wave_csv, ClosedFormResiduals, RunSummary,
};
use krylov_quench::krylov::{
    coefficient_closed_forms, domain_structure, slope_check, spectrum_bounds,
};
use krylov_quench::propagator::{
    simulate, DirectPropagator, KrylovPropagator, SimulateOptions, TimeGrid,
};
use krylov_quench::spin_model::{classify_phase, ground_state, spin_expectations, ModelParams};

#[derive(Parser)]
#[command(
    name = "krylov-quench",
    about = "Krylov-subspace simulation of quenched LMG spin-model dynamics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one quench and write series.csv, lanczos.csv, summary.json.
    Simulate(SimulateArgs),
    /// Cross-validate the Krylov and direct propagation pipelines.
    OracleCompare(OracleArgs),
    /// Run a grid of (h, g) points and write sweep.csv, sweep.json.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Number of spin-1/2 sites (even).
    #[arg(long)]
    n: Option<usize>,
    /// Energy unit J.
    #[arg(long, allow_negative_numbers = true)]
    j: Option<f64>,
    /// Longitudinal bias field.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Transverse field.
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Largest time Jt on the grid.
    #[arg(long, allow_negative_numbers = true)]
    tmax: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    points: Option<usize>,
    /// Relative Lanczos breakdown threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Rate function through the double-double survival path (resolves
    /// f beyond the f64 noise floor ~31/N; needed for DQPT work at large N).
    #[arg(long)]
    hd_rate: bool,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Optional key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write wave.csv (|phi_k| heatmap matrix; large).
    #[arg(long)]
    wave: bool,
    /// Also write eigenvalues.csv (spectrum of the Krylov tridiagonal).
    #[arg(long)]
    eigenvalues: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Bias-field values: comma list or start:stop:step.
    #[arg(long)]
    h_values: Option<String>,
    /// Transverse-field values: comma list or start:stop:step.
    #[arg(long)]
    g_values: Option<String>,
    /// Upper limit of the observable time averages.
    #[arg(long)]
    t_avg: Option<f64>,
    /// Worker threads (capped by KRYLOV_QUENCH_THREADS).
    #[arg(long)]
    workers: Option<usize>,
}

enum CliError {
    Config(String),
    Io(String),
    Oracle(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Io(_) => ExitCode::from(2),
            CliError::Oracle(_) => ExitCode::from(3),
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Oracle(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

struct ResolvedRun {
    params: ModelParams,
    grid: TimeGrid,
    threshold: f64,
    hd_rate: bool,
    out_dir: PathBuf,
    file: FileConfig,
}

fn resolve_common(common: &CommonArgs) -> Result<ResolvedRun, CliError> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Config)?,
        None => FileConfig::empty(),
    };
    let n = common
        .n
        .or(file.get("n").map_err(CliError::Config)?)
        .ok_or_else(|| CliError::Config("missing required parameter `n`".into()))?;
    let j = common
        .j
        .or(file.get("j").map_err(CliError::Config)?)
        .unwrap_or(1.0);
    let h = common
        .h
        .or(file.get("h").map_err(CliError::Config)?)
        .unwrap_or(0.0);
    let g = common
        .g
        .or(file.get("g").map_err(CliError::Config)?)
        .unwrap_or(0.0);
    let tmax = common
        .tmax
        .or(file.get("tmax").map_err(CliError::Config)?)
        .unwrap_or(10.0);
    let points = common
        .points
        .or(file.get("points").map_err(CliError::Config)?)
        .unwrap_or(2001);
    let threshold = common
        .threshold
        .or(file.get("threshold").map_err(CliError::Config)?)
        .unwrap_or(1e-10);
    let hd_rate = common.hd_rate
        || file
            .get("hd_rate")
            .map_err(CliError::Config)?
            .unwrap_or(false);
    let out_dir = common
        .out_dir
        .clone()
        .or(file
            .get::<String>("out_dir")
            .map_err(CliError::Config)?
            .map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let params = ModelParams::new(n, j, h, g).map_err(config_err)?;
    let grid = TimeGrid::new(tmax, points).map_err(config_err)?;
    Ok(ResolvedRun {
        params,
        grid,
        threshold,
        hd_rate,
        out_dir,
        file,
    })
}

fn create_output(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let run = resolve_common(&args.common)?;
    let wave = args.wave
        || run
            .file
            .get("wave")
            .map_err(CliError::Config)?
            .unwrap_or(false);
    let options = SimulateOptions {
        breakdown_threshold: run.threshold,
        hd_rate: run.hd_rate,
        store_basis: false,
        ..Default::default()
    };
    let out = simulate(&run.params, &run.grid, &options).map_err(config_err)?;

    let mut w = create_output(&run.out_dir, "series.csv")?;
    write_series_csv(&mut w, &out.series).map_err(|e| CliError::Io(e.to_string()))?;
    let mut w = create_output(&run.out_dir, "lanczos.csv")?;
    write_lanczos_csv(&mut w, &out.decomposition.tridiag)
        .map_err(|e| CliError::Io(e.to_string()))?;
    if wave {
        let mut w = create_output(&run.out_dir, "wave.csv")?;
        write_wave_csv(&mut w, &out.decomposition, &out.series.times)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    if args.eigenvalues {
        let mut w = create_output(&run.out_dir, "eigenvalues.csv")?;
        write_eigenvalues_csv(&mut w, &out.decomposition.tridiag)
            .map_err(|e| CliError::Io(e.to_string()))?;
    }

    let tridiag = &out.decomposition.tridiag;
    let gs = ground_state(&run.params);
    let (ground_sz, ground_sx) = spin_expectations(&gs.state).map_err(config_err)?;
    let summary = RunSummary {
        params: run.params,
        krylov_dim: out.decomposition.dimension(),
        termination: out.decomposition.termination,
        max_k: out.series.k.iter().cloned().fold(f64::MIN, f64::max),
        domain_structure: domain_structure(tridiag),
        spectrum_bounds: spectrum_bounds(tridiag),
        dqpt: detect_dqpt(&out.series),
        closed_forms: ClosedFormResiduals::new(
            coefficient_closed_forms(&run.params),
            tridiag,
            run.params.j(),
        ),
        slope: slope_check(tridiag, &run.params),
        phase: classify_phase(run.params.h(), run.params.g()),
        ground_energy: gs.energy,
        ground_sz,
        ground_sx,
    };
    let mut w = create_output(&run.out_dir, "summary.json")?;
    write_json_pretty(&mut w, &summary).map_err(|e| CliError::Io(e.to_string()))?;

    // metastability diagnostics ride along when a two-block structure exists
    let meta = metastability_from_output(&out).map_err(config_err)?;
    if meta.boundary_k.is_some() {
        let mut w = create_output(&run.out_dir, "metastability.json")?;
        write_json_pretty(&mut w, &meta).map_err(|e| CliError::Io(e.to_string()))?;
    }

    println!(
        "simulate: N={} h={} g={} -> d={} max_K={:.4} strong DQPTs: {}",
        run.params.n(),
        run.params.h(),
        run.params.g(),
        out.decomposition.dimension(),
        summary.max_k,
        summary
            .dqpt
            .strong_times()
            .iter()
            .map(|t| format!("{t:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct OracleReport {
    max_survival_deviation: f64,
    tolerance: f64,
    passed: bool,
    g0_convergence: Option<Vec<G0Convergence>>,
}

fn cmd_oracle_compare(args: &OracleArgs) -> Result<(), CliError> {
    let run = resolve_common(&args.common)?;
    let options = SimulateOptions {
        breakdown_threshold: run.threshold,
        store_basis: false,
        ..Default::default()
    };
    let out = simulate(&run.params, &run.grid, &options).map_err(config_err)?;
    let krylov = KrylovPropagator::new(&out.decomposition.tridiag);
    let direct = DirectPropagator::new(&run.params);
    let mut max_dev = 0.0f64;
    for &t in &out.series.times {
        let dev = (krylov.phi0(t) - direct.survival(t)).norm();
        max_dev = max_dev.max(dev);
    }
    let tolerance = 1e-8;
    let passed = max_dev <= tolerance;

    let g0 = if run.params.g() == 0.0 && run.params.h() > 0.0 {
        let conv = g0_convergence(run.params.h(), run.params.j(), &[run.params.n()], &run.grid)
            .map_err(config_err)?;
        Some(conv)
    } else {
        None
    };

    println!("oracle-compare: max |phi0_krylov - <psi0|psi(t)>_direct| = {max_dev:.3e}");
    if let Some(conv) = &g0 {
        println!(
            "oracle-compare: g=0 off-kink |f_N - f_inf| = {} (near-kink {})",
            fmt_f64(conv[0].off_kink_max),
            fmt_f64(conv[0].kink_window_max)
        );
    }
    println!("oracle-compare: {}", if passed { "PASS" } else { "FAIL" });

    let report = OracleReport {
        max_survival_deviation: max_dev,
        tolerance,
        passed,
        g0_convergence: g0,
    };
    let mut w = create_output(&run.out_dir, "oracle.json")?;
    write_json_pretty(&mut w, &report).map_err(|e| CliError::Io(e.to_string()))?;

    if passed {
        Ok(())
    } else {
        Err(CliError::Oracle(format!(
            "survival-amplitude deviation {max_dev:.3e} exceeds {tolerance:.0e}"
        )))
    }
}

fn worker_cap() -> usize {
    std::env::var("KRYLOV_QUENCH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(usize::MAX)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let run = resolve_common(&args.common)?;
    let h_text = args
        .h_values
        .clone()
        .or(run.file.get("h_values").map_err(CliError::Config)?)
        .ok_or_else(|| CliError::Config("missing `h-values`".into()))?;
    let g_text = args
        .g_values
        .clone()
        .or(run.file.get("g_values").map_err(CliError::Config)?)
        .ok_or_else(|| CliError::Config("missing `g-values`".into()))?;
    let t_avg = args
        .t_avg
        .or(run.file.get("t_avg").map_err(CliError::Config)?)
        .unwrap_or(run.grid.t_max());
    let workers = args
        .workers
        .or(run.file.get("workers").map_err(CliError::Config)?)
        .unwrap_or(1)
        .min(worker_cap())
        .max(1);

    let cfg = SweepConfig {
        h_values: parse_value_list(&h_text).map_err(CliError::Config)?,
        g_values: parse_value_list(&g_text).map_err(CliError::Config)?,
        n: run.params.n(),
        j: run.params.j(),
        grid: run.grid,
        t_avg,
        workers,
        breakdown_threshold: run.threshold,
        hd_rate: run.hd_rate,
    };
    let records = sweep(&cfg).map_err(config_err)?;
    let failures = records.iter().filter(|r| r.error.is_some()).count();

    let mut w = create_output(&run.out_dir, "sweep.csv")?;
    write_sweep_csv(&mut w, &records).map_err(|e| CliError::Io(e.to_string()))?;
    let mut w = create_output(&run.out_dir, "sweep.json")?;
    write_json_pretty(&mut w, &records).map_err(|e| CliError::Io(e.to_string()))?;

    println!(
        "sweep: {} points ({} failed), workers={workers}",
        records.len(),
        failures
    );
    if failures == records.len() {
        return Err(CliError::Config("all sweep points failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap usage problems are configuration errors (exit 1); help and
    // version requests stay successful
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let failed = e.use_stderr();
            let _ = e.print();
            return if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::OracleCompare(args) => cmd_oracle_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
