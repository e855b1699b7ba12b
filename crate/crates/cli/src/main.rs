//! `nwflab` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 on a statistical failure or a
//! numerical error, 2 on usage errors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use nwflab::experiments::{
    density_table, execute, registry, to_json_17, DensityKind, ExperimentConfig, Params, SimulateKind,
    CALIBRATION_TESTS,
};
use nwflab::Error;

const SEED_ENV: &str = "NWFLAB_SEED";

#[derive(Parser, Debug)]
#[command(name = "nwflab", version, about = "Simulate and verify negative-mutation Wright-Fisher diffusions, BESQ processes and the Aldous cladogram chain")]
struct Cli {
    /// Root seed; falls back to the config file, then to $NWFLAB_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file with any of: experiment, seed, workers, parameters, output_dir.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter override `name=value`; the value is read as JSON when it parses.
    #[arg(long = "set", value_name = "NAME=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path: besq, nwf, wf or clado.
    Simulate { kind: String },
    /// Tabulate a density: exit-nwf, exit-besq or besq-transition.
    Density { kind: String },
    /// Run an acceptance check, e.g. `exit-time` or `verify-exit-time`.
    Verify { criterion: String },
    /// Run a null-calibration check, e.g. `ks-two-sample`.
    Calibrate { test: String },
    /// List the registered experiments.
    List,
}

struct Usage(String);

#[derive(Default)]
struct FileConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    workers: Option<usize>,
    parameters: BTreeMap<String, Value>,
    output_dir: Option<PathBuf>,
}

fn read_config(path: &Path) -> Result<FileConfig, Usage> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let Value::Object(map) = v else {
        return Err(Usage("config must be a JSON object".into()));
    };
    let mut cfg = FileConfig::default();
    for (k, v) in map {
        let bad = || Usage(format!("config field '{k}' has the wrong type"));
        match k.as_str() {
            "experiment" => cfg.experiment = Some(v.as_str().ok_or_else(bad)?.to_string()),
            "seed" => cfg.seed = Some(v.as_u64().ok_or_else(bad)?),
            "workers" => cfg.workers = Some(v.as_u64().ok_or_else(bad)? as usize),
            "output_dir" => cfg.output_dir = Some(PathBuf::from(v.as_str().ok_or_else(bad)?)),
            "parameters" => {
                cfg.parameters = serde_json::from_value(v).map_err(|_| bad())?;
            }
            _ => return Err(Usage(format!("unknown config field '{k}'"))),
        }
    }
    Ok(cfg)
}

fn parse_set(items: &[String]) -> Result<BTreeMap<String, Value>, Usage> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| Usage(format!("--set expects NAME=VALUE, got '{s}'")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            Ok((k.to_string(), value))
        })
        .collect()
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, Usage> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Usage(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
        Err(_) => Err(Usage(format!("no seed given: pass --seed, set it in --config, or export {SEED_ENV}"))),
    }
}

/// Prints a line, ignoring a closed stdout (e.g. `nwflab list | head`).
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| format!("writing {}: {e}", p.display()))?;
        say(&format!("wrote {}", p.display()));
    }
    Ok(())
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Parameter(_) | Error::Domain(_) | Error::Unsupported(_) => 2,
        _ => 1,
    }
}

fn experiment_name(prefix: &str, name: &str) -> String {
    if name.starts_with(prefix) {
        name.to_string()
    } else {
        format!("{prefix}{name}")
    }
}

fn run(cli: Cli) -> Result<u8, Usage> {
    let file = match &cli.config {
        Some(p) => read_config(p)?,
        None => FileConfig::default(),
    };
    let mut parameters = file.parameters.clone();
    parameters.extend(parse_set(&cli.set)?);
    let out_dir = cli.out.clone().or(file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let workers = cli.workers.or(file.workers).unwrap_or(1);

    let finish_tool = |res: nwflab::Result<nwflab::experiments::ToolOutput>, params: &Params| -> Result<u8, Usage> {
        let out = match res.and_then(|o| params.check_all_used().map(|_| o)) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(error_code(&e));
            }
        };
        match write_files(&out_dir, &out.files) {
            Ok(()) => Ok(0),
            Err(e) => {
                eprintln!("error: {e}");
                Ok(1)
            }
        }
    };

    match &cli.command {
        Command::List => {
            for r in registry() {
                say(&format!("{:<28} {}", r.name, r.summary));
            }
            Ok(0)
        }
        Command::Simulate { kind } => {
            let k = SimulateKind::parse(kind)
                .ok_or_else(|| Usage(format!("unknown simulation '{kind}' (besq, nwf, wf, clado)")))?;
            let seed = resolve_seed(cli.seed, file.seed)?;
            let params = Params::new(parameters);
            let res = nwflab::parallel::with_workers(workers, || nwflab::experiments::simulate_table(k, &params, seed));
            finish_tool(res, &params)
        }
        Command::Density { kind } => {
            let k = DensityKind::parse(kind)
                .ok_or_else(|| Usage(format!("unknown density '{kind}' (exit-nwf, exit-besq, besq-transition)")))?;
            let params = Params::new(parameters);
            let res = density_table(k, &params);
            finish_tool(res, &params)
        }
        Command::Verify { criterion } => {
            run_registered(experiment_name("verify-", criterion), &cli, &file, parameters, workers, out_dir.clone())
        }
        Command::Calibrate { test } => {
            if !CALIBRATION_TESTS.iter().any(|c| c.name == test.trim_start_matches("calibrate-")) {
                let names: Vec<&str> = CALIBRATION_TESTS.iter().map(|c| c.name).collect();
                return Err(Usage(format!("unknown test '{test}' ({})", names.join(", "))));
            }
            run_registered(experiment_name("calibrate-", test), &cli, &file, parameters, workers, out_dir.clone())
        }
    }
}

fn run_registered(
    experiment: String,
    cli: &Cli,
    file: &FileConfig,
    parameters: BTreeMap<String, Value>,
    workers: usize,
    output_dir: PathBuf,
) -> Result<u8, Usage> {
    if let Some(e) = &file.experiment {
        if *e != experiment {
            return Err(Usage(format!("config names experiment '{e}' but the command asks for '{experiment}'")));
        }
    }
    if nwflab::experiments::find_runner(&experiment).is_none() {
        let names: Vec<&str> = registry().iter().map(|r| r.name).collect();
        return Err(Usage(format!("unknown experiment '{experiment}'; registered: {}", names.join(", "))));
    }
    let config = ExperimentConfig {
        experiment,
        seed: resolve_seed(cli.seed, file.seed)?,
        workers,
        parameters,
        output_dir,
    };
    let (result, tables) = match execute(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(error_code(&e));
        }
    };
    for line in result.summary_lines() {
        say(&line);
    }
    let mut files = vec![("report.json".to_string(), to_json_17(&result))];
    files.extend(tables);
    if let Err(e) = write_files(&config.output_dir, &files) {
        eprintln!("error: {e}");
        return Ok(1);
    }
    Ok(if result.passed { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
