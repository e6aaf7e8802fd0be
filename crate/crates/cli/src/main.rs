//! Command-line runner.
//!
//! ```text
//! slipmhd simulate <config>          single run: diagnostics CSV + snapshots
//! slipmhd converge <config>          vanishing-viscosity study + rate fits
//! slipmhd corrector-scaling <config> layer-norm exponent table
//! slipmhd verify-spaces <config>     identity batch with negative controls
//! slipmhd fit <csv>                  log-log least squares on two columns
//!
//! flags: --out DIR   override output.dir
//!        --seed N    override init.seed / verify.seed
//!        --jobs N    concurrent sweep members (converge)
//! ```
//!
//! Exit codes: 0 ok, 1 io/other, 2 usage or config error, 3 CFL violation,
//! 4 blow-up guard, 5 verification check failed.

use slipmhd::corrector::default_boundary_data;
use slipmhd::harness::{
    convergence_study, corrector_scaling_study, default_cases, parse_config, verify_spaces,
    Config, StudyConfig,
};
use slipmhd::solver::{run, FlowState};
use slipmhd::{fields, Error};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CFL: u8 = 3;
const EXIT_BLOWUP: u8 = 4;
const EXIT_CHECK: u8 = 5;

fn usage() -> String {
    "usage: slipmhd <simulate|converge|corrector-scaling|verify-spaces|fit> <config-or-csv> \
     [--out DIR] [--seed N] [--jobs N]"
        .to_string()
}

struct Cli {
    command: String,
    input: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: usize,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let mut positional = Vec::new();
    let mut out = None;
    let mut seed = None;
    let mut jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out" => {
                out = Some(PathBuf::from(
                    it.next().ok_or("--out needs a directory")?,
                ))
            }
            "--seed" => {
                seed = Some(
                    it.next()
                        .ok_or("--seed needs a value")?
                        .parse()
                        .map_err(|_| "--seed needs an integer")?,
                )
            }
            "--jobs" => {
                jobs = it
                    .next()
                    .ok_or("--jobs needs a value")?
                    .parse()
                    .map_err(|_| "--jobs needs an integer")?
            }
            other if other.starts_with("--") => return Err(format!("unknown flag {other}")),
            other => positional.push(other.to_string()),
        }
    }
    if positional.len() != 2 {
        return Err(usage());
    }
    Ok(Cli {
        command: positional[0].clone(),
        input: PathBuf::from(&positional[1]),
        out,
        seed,
        jobs: jobs.max(1),
    })
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Validation { .. } | Error::GridSize(_) => EXIT_USAGE,
        Error::CflViolation { .. } => EXIT_CFL,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        _ => EXIT_OTHER,
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let text = std::fs::read_to_string(&cli.input)?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = &cli.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.init_seed = seed;
        cfg.verify_seed = seed;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn simulate(cfg: &Config) -> Result<u8, Error> {
    let run_cfg = cfg.run_config()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let snapshot_times = cfg.snapshot_times.clone();
    let dt = run_cfg.params.dt;
    let mut last: Option<FlowState> = None;
    let save = |state: &FlowState, name: &str| -> Result<(), Error> {
        fields::write_snapshot(
            &dir.join(name),
            state.t,
            &[("u", &state.velocity), ("H", &state.magnetic)],
        )
    };
    let mut snap_err = None;
    let diag = run(&run_cfg, |_, state| {
        if snapshot_times
            .iter()
            .any(|t| (state.t - t).abs() < 0.5 * dt)
        {
            if let Err(e) = save(state, &format!("snapshot_t{:.6}.snap", state.t)) {
                snap_err.get_or_insert(e);
            }
        }
        last = Some(state.clone());
    })?;
    if let Some(e) = snap_err {
        return Err(e);
    }
    if let Some(state) = &last {
        save(state, "final.snap")?;
    }
    let path = write(&dir, "diagnostics.csv", &diag.to_csv())?;
    let final_row = diag.rows.last().expect("runs record at least t = 0");
    println!(
        "simulate: {} records -> {} (final t = {}, E = {})",
        diag.rows.len(),
        path.display(),
        final_row.t,
        final_row.e_kin + final_row.e_mag
    );
    Ok(0)
}

fn converge(cfg: &Config, jobs: usize) -> Result<u8, Error> {
    let base = cfg.run_config()?;
    let study = StudyConfig {
        sweep: cfg.sweep()?,
        norms: cfg.norms_track.clone(),
        fit_window: cfg.fit_window.resolve(cfg.sweep_count),
        base,
    };
    let report = convergence_study(&study, jobs)?;
    let dir = &cfg.output_dir;
    write(dir, "rates.csv", &report.to_csv())?;
    write(dir, "reference_diagnostics.csv", &report.reference_diag.to_csv())?;
    let summary = report.summary();
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(0)
}

fn corrector_scaling(cfg: &Config) -> Result<u8, Error> {
    let h = default_boundary_data(cfg.corrector_grid_n, cfg.corrector_grid_n);
    let sweep = cfg.eps_sweep()?;
    let report = corrector_scaling_study(&h, cfg.corrector_k, &sweep, &default_cases(), 0.05)?;
    let dir = &cfg.output_dir;
    write(dir, "corrector.csv", &report.to_csv())?;
    let summary = report.summary();
    write(dir, "corrector_summary.txt", &summary)?;
    print!("{summary}");
    Ok(if report.all_pass() { 0 } else { EXIT_CHECK })
}

fn verify(cfg: &Config) -> Result<u8, Error> {
    let grid = fields::Grid::new(cfg.nx, cfg.ny, cfg.nz)?;
    let report = verify_spaces(grid, cfg.verify_samples, cfg.verify_seed, cfg.dealias())?;
    let dir = &cfg.output_dir;
    write(dir, "verify.csv", &report.to_csv())?;
    let summary = report.summary();
    write(dir, "verify_summary.txt", &summary)?;
    print!("{summary}");
    let ok = report.positive_max() < 1e-9 && report.negative_min() > 1e-2;
    Ok(if ok { 0 } else { EXIT_CHECK })
}

fn fit_csv(path: &Path) -> Result<u8, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for line in text.lines() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 2 {
            continue;
        }
        if let (Ok(x), Ok(y)) = (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
            points.push((x, y));
        }
    }
    let fit = slipmhd::harness::fit_rate(&points)?;
    println!(
        "fit: {} points, slope = {}, intercept = {}, r2 = {}",
        points.len(),
        fit.slope,
        fit.intercept,
        fit.r2
    );
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    match cli.command.as_str() {
        "simulate" => simulate(&load_config(cli)?),
        "converge" => converge(&load_config(cli)?, cli.jobs),
        "corrector-scaling" => corrector_scaling(&load_config(cli)?),
        "verify-spaces" => verify(&load_config(cli)?),
        "fit" => fit_csv(&cli.input),
        other => Err(Error::Validation {
            key: "subcommand".into(),
            msg: format!("unknown subcommand `{other}`\n{}", usage()),
        }),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("slipmhd {}: {err}", cli.command);
            ExitCode::from(exit_for(&err))
        }
    }
}
