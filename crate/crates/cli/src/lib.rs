//! `mhlr` command-line front end.
//!
//! ```text
//! mhlr gen   --out data/ --gen.n 400 --seed 7
//! mhlr train --config run.json --data.train data/manifest.json --out model.mhlr
//! mhlr eval  --eval.model model.mhlr --data.test test/manifest.json --out report.csv
//! mhlr sweep --config run.json --out sweep.csv
//! mhlr config
//! ```
//!
//! Settings come from built-in defaults, then `--config <file>`, then any
//! `--<dotted.key> <value>` overrides, then `--seed` and `--out`.
//! Exit status is 0 on success, 1 for runtime or data errors and 2 for
//! configuration errors.

pub mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mhlr::dataset::{
    generate_planar_embedding, generate_two_moons_multiview, load_dataset, write_dataset,
};
use mhlr::eval::{evaluate, fraction_sweep, write_reports_csv};
use mhlr::model::{load_model, save_model, train_one_vs_rest};
use mhlr::{DatasetError, EvalError, ModelError, MulticlassModel};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(e) => e.exit_code().clamp(0, 255) as u8,
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    /// Print the error the way the binary does.
    pub fn report(&self) {
        match self {
            CliError::Usage(e) => {
                let _ = e.print();
            }
            other => eprintln!("error: {other}"),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "mhlr",
    version,
    about = "Multiview Hessian-regularized logistic regression"
)]
struct Cli {
    /// JSON config file with flat dotted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write a synthetic dataset (gen.kind: two-moons or planar).
    Gen,
    /// Train a one-vs-rest model and write it with a training log.
    Train,
    /// Score a trained model on a dataset and write a report CSV.
    Eval,
    /// Train and score every method at every labeled fraction and seed.
    Sweep,
    /// Print the effective configuration.
    Config,
}

type Overrides = Vec<(String, String)>;

/// Split `--dotted.key value` and `--dotted.key=value` overrides out of the
/// argument list; everything else is left for clap.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Overrides)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--").filter(|f| f.contains('.')) else {
            rest.push(arg);
            continue;
        };
        match flag.split_once('=') {
            Some((key, value)) => overrides.push((key.to_string(), value.to_string())),
            None => {
                let value = it.next().ok_or_else(|| ConfigError::Invalid {
                    key: flag.to_string(),
                    message: "missing value".into(),
                })?;
                overrides.push((flag.to_string(), value));
            }
        }
    }
    Ok((rest, overrides))
}

/// Run the CLI on a full argument list (program name first).
pub fn run(args: Vec<String>) -> Result<()> {
    let (rest, overrides) = split_overrides(args)?;
    let cli = match Cli::try_parse_from(rest) {
        Ok(cli) => cli,
        Err(e) if e.exit_code() == 0 => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        config.merge_file(path)?;
    }
    for (key, value) in &overrides {
        config.set_text(key, value)?;
    }
    if let Some(seed) = cli.seed {
        config.set("seed", json!(seed))?;
    }
    if let Some(out) = &cli.out {
        config.set("out", json!(out.to_string_lossy()))?;
    }
    match cli.command {
        Command::Gen => cmd_gen(&config),
        Command::Train => cmd_train(&config),
        Command::Eval => cmd_eval(&config),
        Command::Sweep => cmd_sweep(&config),
        Command::Config => {
            println!("{}", pretty(&config.to_json()));
            Ok(())
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub fn cmd_gen(config: &RunConfig) -> Result<()> {
    let out = PathBuf::from(config.required("out")?);
    let seed = config.uint("seed");
    let n = config.usize("gen.n")?;
    let dataset = match config.string("gen.kind") {
        "two-moons" => generate_two_moons_multiview(n, config.float("gen.noise"), seed)?,
        "planar" => generate_planar_embedding(n, config.usize("gen.ambient_dim")?, seed)?.dataset,
        other => {
            return Err(ConfigError::Invalid {
                key: "gen.kind".into(),
                message: format!("unknown generator {other:?}"),
            }
            .into())
        }
    };
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let manifest = write_dataset(&dataset, &out)?;
    println!("{}", manifest.display());
    Ok(())
}

pub fn cmd_train(config: &RunConfig) -> Result<()> {
    let method = config.method()?;
    let fraction = config.train_fraction()?;
    let out = PathBuf::from(config.required("out")?);
    let log = config
        .opt_string("log")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("{}.log.json", out.display())));
    let mut dataset = load_dataset(config.required("data.train")?)?;
    if let Some(f) = fraction {
        dataset = dataset.mask_labeled_fraction(f, config.uint("seed"))?;
    }
    let model = train_one_vs_rest(&dataset, &method)?;
    save_model(&model, &out)?;

    let binaries: Vec<Value> = model
        .binaries
        .iter()
        .map(|b| {
            json!({
                "positive_class": b.positive_class,
                "objective_trace": b.objective_trace,
                "theta": b.theta,
                "beta": b.beta,
                "termination": b.termination,
            })
        })
        .collect();
    let record = json!({
        "config": config.to_json(),
        "method": method.label(),
        "classes": model.classes,
        "labeled_fraction": model.labeled_fraction,
        "binaries": binaries,
    });
    let mut w = create(&log)?;
    writeln!(w, "{}", pretty(&record)).map_err(io_err(&log))?;
    w.flush().map_err(io_err(&log))?;
    Ok(())
}

pub fn cmd_eval(config: &RunConfig) -> Result<()> {
    let out = PathBuf::from(config.required("out")?);
    let model: MulticlassModel = load_model(config.required("eval.model")?)?;
    let test = load_dataset(config.required("data.test")?)?;
    let label = model
        .binaries
        .first()
        .map(|b| b.method.label())
        .unwrap_or_default();
    let report = evaluate(
        &model,
        &test,
        &label,
        model.labeled_fraction,
        config.uint("seed"),
    )?;
    write_reports_csv(&[report], create(&out)?)?;
    Ok(())
}

pub fn cmd_sweep(config: &RunConfig) -> Result<()> {
    let methods = config.sweep_methods()?;
    let fractions = config.sweep_fractions()?;
    let seeds = config.sweep_seeds()?;
    let out = PathBuf::from(config.required("out")?);
    let train = load_dataset(config.required("data.train")?)?;
    let test = load_dataset(config.required("data.test")?)?;
    let reports = fraction_sweep(&train, &test, &methods, &fractions, &seeds)?;
    write_reports_csv(&reports, create(&out)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn overrides_are_split_out() {
        let (rest, ov) =
            split_overrides(args("mhlr train --hyper.gamma_k 1e-3 --seed 3 --gen.n=50")).unwrap();
        assert_eq!(rest, args("mhlr train --seed 3"));
        assert_eq!(
            ov,
            vec![
                ("hyper.gamma_k".to_string(), "1e-3".to_string()),
                ("gen.n".to_string(), "50".to_string())
            ]
        );
        assert!(split_overrides(args("mhlr train --hyper.gamma_k")).is_err());
    }

    #[test]
    fn exit_codes() {
        let e = run(args("mhlr train --hyper.gamma_k 0")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(args("mhlr train --hyper.nope 1")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(args("mhlr frobnicate")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(args(
            "mhlr eval --eval.model /nonexistent/m --data.test /nonexistent/t --out /tmp/x",
        ))
        .unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
