//! `leobeam` command-line experiment runner.

mod selftest;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use leobeam::channel::write_channel_table;
use leobeam::evaluator::SweepPoint;
use leobeam::experiment::{
    run_algorithm, run_compare, run_sweep, write_results_csv, Algorithm, DesignRun,
    ExperimentConfig, Instance, ResultRow, SweepAxis,
};
use leobeam::network::SinrReport;
use leobeam::Error;

#[derive(Parser, Debug)]
#[command(
    name = "leobeam",
    version,
    about = "Robust NOMA beamforming experiments for LEO satellite downlinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Design and evaluate one instance.
    Design(Common),
    /// Re-design along one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// gamma (dB), sigma (degrees), eta or p.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated grid; a per-axis default is used when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
    },
    /// Robust designs and baselines on one instance.
    Compare(Common),
    /// Quick invariant checks.
    Selftest,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides both the scenario and the evaluation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo samples per user.
    #[arg(long)]
    samples: Option<usize>,
    /// avg, outage, nonrobust, zfbf or tdma.
    #[arg(long)]
    algorithm: Option<Algorithm>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_json_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.scenario.seed = seed;
            cfg.eval.seed = seed;
        }
        if let Some(n) = self.samples {
            cfg.eval.samples = n;
        }
        if let Some(a) = self.algorithm {
            cfg.design.algorithm = a;
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.clone().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"));
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok((cfg, out))
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    outputs: &[String],
    extra: serde_json::Value,
) -> Result<()> {
    let manifest = json!({
        "tool": "leobeam",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "scenario_seed": cfg.scenario.seed,
        "eval_seed": cfg.eval.seed,
        "samples": cfg.eval.samples,
        "algorithm": cfg.design.algorithm,
        "phase_covariance_root": "symmetric",
        "config": cfg,
        "outputs": outputs,
        "details": extra,
    });
    let mut f = create(dir, "manifest.json")?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    Ok(())
}

fn write_run(
    dir: &Path,
    suffix: &str,
    cfg: &ExperimentConfig,
    inst: &Instance,
    algorithm: Algorithm,
    point: &SweepPoint<DesignRun>,
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let name = format!("results{suffix}.csv");
    write_results_csv(
        &[ResultRow::new(cfg, algorithm, point)],
        algorithm == Algorithm::Outage,
        create(dir, &name)?,
    )?;
    written.push(name);
    if let Ok(run) = &point.outcome {
        if let Some(eval) = &run.eval {
            let name = format!("eval{suffix}.csv");
            eval.write_csv(create(dir, &name)?)?;
            written.push(name);
        }
        if let Some(d) = &run.design {
            let name = format!("sinr{suffix}.csv");
            SinrReport::nominal(&inst.network, d).write_csv(create(dir, &name)?)?;
            written.push(name);
        }
    }
    Ok(written)
}

fn channels_csv(dir: &Path, inst: &Instance) -> Result<String> {
    let channels: Vec<_> = inst
        .network
        .user_indices()
        .into_iter()
        .map(|(m, n)| inst.network.user(m, n).channel.clone())
        .collect();
    write_channel_table(&channels, create(dir, "channels.csv")?)?;
    Ok("channels.csv".into())
}

fn cmd_design(common: &Common) -> Result<()> {
    let (cfg, out) = common.load()?;
    let inst = Instance::from_config(&cfg)?;
    let algorithm = cfg.design.algorithm;
    let point = SweepPoint {
        value: 0.0,
        outcome: run_algorithm(&inst, algorithm, &cfg),
    };
    let mut outputs = write_run(&out, "", &cfg, &inst, algorithm, &point)?;
    outputs.push(channels_csv(&out, &inst)?);
    write_manifest(
        &out,
        "design",
        &cfg,
        &outputs,
        json!({ "status": point.status() }),
    )?;
    let run = point.outcome?;
    println!("{algorithm}: total power {:.6e} W", run.total_power);
    if let Some(e) = &run.eval {
        println!(
            "max empirical outage {:.4} over {} samples",
            e.max_outage(),
            e.samples
        );
    }
    info!("wrote {} files to {}", outputs.len(), out.display());
    Ok(())
}

fn default_grid(axis: SweepAxis) -> Vec<f64> {
    match axis {
        SweepAxis::Gamma => vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
        SweepAxis::Sigma => vec![0.0, 5.0, 10.0],
        SweepAxis::Eta => vec![0.01, 0.05, 0.1],
        SweepAxis::P => vec![0.01, 0.05, 0.2],
    }
}

fn cmd_sweep(common: &Common, axis: SweepAxis, grid: Option<Vec<f64>>) -> Result<()> {
    let (cfg, out) = common.load()?;
    let grid = grid.unwrap_or_else(|| default_grid(axis));
    let rows = run_sweep(&cfg, axis, &grid)?;
    let outage = cfg.design.algorithm == Algorithm::Outage;
    let only: Vec<ResultRow> = rows.iter().map(|(r, _)| r.clone()).collect();
    write_results_csv(&only, outage, create(&out, "sweep.csv")?)?;
    for (r, p) in &rows {
        println!(
            "{:>10} {:>12} {}",
            p.value,
            r.total_power_w.map_or("-".into(), |v| format!("{v:.6e}")),
            r.status
        );
    }
    let statuses: Vec<String> = rows.iter().map(|(_, p)| p.status()).collect();
    write_manifest(
        &out,
        "sweep",
        &cfg,
        &["sweep.csv".into()],
        json!({ "axis": axis, "grid": grid, "status": statuses }),
    )?;
    Ok(())
}

fn cmd_compare(common: &Common) -> Result<()> {
    let (cfg, out) = common.load()?;
    let inst = Instance::from_config(&cfg)?;
    let rows = run_compare(&cfg)?;
    let mut outputs = Vec::new();
    let mut statuses = serde_json::Map::new();
    for (row, point) in &rows {
        outputs.extend(write_run(
            &out,
            &format!("_{}", row.algorithm),
            &cfg,
            &inst,
            row.algorithm,
            point,
        )?);
        statuses.insert(row.algorithm.to_string(), json!(point.status()));
        let emp = row
            .empirical_outage_max
            .map_or("-".into(), |v| format!("{v:.4}"));
        let power = row.total_power_w.map_or("-".into(), |v| format!("{v:.6e}"));
        println!(
            "{:<10} power {power:>14} max outage {emp:>8} {}",
            row.algorithm.as_str(),
            row.status
        );
    }
    outputs.push(channels_csv(&out, &inst)?);
    write_manifest(
        &out,
        "compare",
        &cfg,
        &outputs,
        serde_json::Value::Object(statuses),
    )?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) | Some(Error::Dimension(_)) => 2,
        Some(Error::Infeasible { .. }) => 3,
        Some(Error::NotConverged { .. }) => 4,
        Some(_) => 1,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(c) => cmd_design(c),
        Command::Sweep { common, axis, grid } => cmd_sweep(common, *axis, grid.clone()),
        Command::Compare(c) => cmd_compare(c),
        Command::Selftest => {
            if selftest::run() {
                Ok(())
            } else {
                return ExitCode::from(5);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
