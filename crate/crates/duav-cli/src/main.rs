//! `duav-sim`: seeded Monte Carlo sweeps of secrecy rates in D2D-enabled
//! UAV networks, CSV out.

use clap::error::ErrorKind;
use clap::Parser;
use duav_core::config::{load_config, Scenario, SimConfig, Strategy, SweepSpec};
use duav_core::engine::{
    emit_csv, run_drop_detailed, run_sweep, write_deployment_csv, write_plan_csv, LinkKind,
};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG_ERROR: u8 = 1;
const EXIT_DEGENERATE_CELL: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "duav-sim",
    about = "Monte Carlo secrecy-rate simulator for D2D-enabled UAV networks",
    version
)]
struct Cli {
    /// TOML config file; keys match the documented parameter names.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Override the scenario from the config file.
    #[arg(long, value_parser = ["flying-bs", "aerial-ue"])]
    scenario: Option<String>,

    /// Strategy to run; `both` runs traditional and new on common random
    /// numbers.
    #[arg(long, value_parser = ["new", "traditional", "both"])]
    strategy: Option<String>,

    /// Sweep one numeric config key: key=v1,v2,...
    #[arg(long, value_name = "KEY=V1,V2,...")]
    sweep: Option<String>,

    /// Override the Monte Carlo drop count.
    #[arg(long, value_name = "N")]
    drops: Option<u32>,

    /// Override the master seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Output CSV path; stdout when omitted.
    #[arg(long, value_name = "FILE.csv")]
    out: Option<PathBuf>,

    /// Override any config key (repeatable): key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Write drop 0's node placement as CSV (id,role,x,y,z).
    #[arg(long, value_name = "FILE")]
    dump_deployment: Option<PathBuf>,

    /// Write drop 0's spectrum plan as CSV
    /// (ue_id,mode,pattern,subchannel,bandwidth_hz,host_id).
    #[arg(long, value_name = "FILE")]
    dump_plan: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_CONFIG_ERROR);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("duav-sim: {msg}");
            ExitCode::from(EXIT_CONFIG_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let mut cfg: SimConfig = load_config(&cli.config).map_err(|e| e.to_string())?;

    for kv in &cli.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects key=value, got {kv:?}"))?;
        cfg.set_key(key.trim(), value.trim())
            .map_err(|e| e.to_string())?;
    }
    if let Some(s) = &cli.scenario {
        cfg.scenario = match s.as_str() {
            "flying-bs" => Scenario::FlyingBs,
            _ => Scenario::AerialUe,
        };
    }
    if let Some(n) = cli.drops {
        cfg.n_drops = n;
    }
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }

    let strategies: Vec<Strategy> = match cli.strategy.as_deref() {
        Some("both") => vec![Strategy::Traditional, Strategy::New],
        Some("new") => vec![Strategy::New],
        Some("traditional") => vec![Strategy::Traditional],
        _ => vec![cfg.strategy],
        // clap already rejected other tokens
    };

    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(format!("invalid config:\n  {}", violations.join("\n  ")));
    }

    let sweep = match &cli.sweep {
        Some(text) => Some(parse_sweep(text)?),
        None => None,
    };

    if cli.dump_deployment.is_some() || cli.dump_plan.is_some() {
        let dump_strategy = *strategies.last().unwrap();
        let detail = run_drop_detailed(&cfg, dump_strategy, 0)
            .map_err(|e| format!("cannot dump drop 0: {e}"))?;
        if let Some(path) = &cli.dump_deployment {
            let mut w = BufWriter::new(File::create(path).map_err(|e| e.to_string())?);
            write_deployment_csv(&detail.deployment, &mut w).map_err(|e| e.to_string())?;
        }
        if let Some(path) = &cli.dump_plan {
            let mut w = BufWriter::new(File::create(path).map_err(|e| e.to_string())?);
            write_plan_csv(&detail.plan, &mut w).map_err(|e| e.to_string())?;
        }
    }

    let result = run_sweep(&cfg, sweep.as_ref(), &strategies).map_err(|e| e.to_string())?;

    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(|e| e.to_string())?);
            emit_csv(&result.rows, &mut w).map_err(|e| e.to_string())?;
            w.flush().map_err(|e| e.to_string())?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            emit_csv(&result.rows, &mut w).map_err(|e| e.to_string())?;
        }
    }

    if strategies.len() == 2 {
        report_strategy_comparison(&result.rows);
    }

    if result.degenerate_cells {
        eprintln!("duav-sim: at least one sweep cell had no effective drops");
        return Ok(ExitCode::from(EXIT_DEGENERATE_CELL));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_sweep(text: &str) -> Result<SweepSpec, String> {
    let (key, list) = text
        .split_once('=')
        .ok_or_else(|| format!("--sweep expects key=v1,v2,..., got {text:?}"))?;
    let values: Vec<f64> = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad sweep value {v:?}"))
        })
        .collect::<Result<_, _>>()?;
    SweepSpec::new(key.trim(), values).map_err(|e| e.to_string())
}

/// Per sweep point, says whether the new strategy's mean beat the
/// traditional one. Written to stderr so the CSV on stdout stays clean.
fn report_strategy_comparison(rows: &[duav_core::engine::SweepRow]) {
    for link in [LinkKind::Overlay, LinkKind::Cellular] {
        let of = |strategy: Strategy| {
            rows.iter()
                .filter(move |r| r.stats.strategy == strategy && r.stats.link == link)
                .map(|r| (r.sweep_value, r.stats.mean_bps))
        };
        for ((v, new_mean), (_, trad_mean)) in of(Strategy::New).zip(of(Strategy::Traditional)) {
            let verdict = if new_mean >= trad_mean || (new_mean.is_nan() && trad_mean.is_nan()) {
                "new >= traditional"
            } else {
                "new < traditional"
            };
            eprintln!(
                "compare {} sweep={v}: new {new_mean:.6e} vs traditional {trad_mean:.6e} ({verdict})",
                link.as_str()
            );
        }
    }
}
