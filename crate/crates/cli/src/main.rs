use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use paflab::harness::{self, ExperimentConfig, ExperimentKind, PppSettings};
use paflab::graph::ModelKind;
use paflab::measures::ks_statistic;
use paflab::oracle::{verify_suite, SuiteOptions};
use paflab::ppp::{frechet_cdf, g_integral, law_of_i_cdf};
use paflab::theory::TheoryContext;
use paflab::{FitnessSpec, Regime};

#[derive(Parser)]
#[command(name = "paflab", version, about = "Preferential attachment with additive fitness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Simulate {
        config: PathBuf,
        /// Overrides `outputs` in the config.
        #[arg(long)]
        outputs: Option<PathBuf>,
        /// Also write report.md and figures.
        #[arg(long)]
        report: bool,
    },
    /// Limiting degree law p(k) and the regime predictions.
    Theory {
        /// Fitness law as JSON, or a path to a JSON file.
        #[arg(long)]
        fitness: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 100)]
        k_max: u32,
        /// Directory for theory.csv and theory.json; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the point-process limit functionals.
    Ppp {
        #[arg(long)]
        fitness: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long)]
        compensate: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact martingale and NQD checks on small graphs.
    Verify {
        /// Model as JSON, e.g. '{"kind":"PAFFD","m":2}'; all models when absent.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Degree vectors kept per graph size.
        #[arg(long, default_value_t = 12)]
        per_size: usize,
    },
    /// Regime scan over the fitness laws listed in a config.
    Regime {
        config: PathBuf,
        #[arg(long)]
        outputs: Option<PathBuf>,
    },
    /// Markdown report and figures for a result directory.
    Report { dir: PathBuf },
}

fn parse_json_arg<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("parsing {arg}"))
}

fn load_config(path: &Path, outputs: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_json_file(path)?;
    if let Some(o) = outputs {
        config.outputs = o;
    }
    Ok(config)
}

fn simulate(config: PathBuf, outputs: Option<PathBuf>, report: bool) -> Result<()> {
    let config = load_config(&config, outputs)?;
    let bundle = harness::run_experiment(&config)?;
    println!("{}", serde_json::to_string_pretty(&bundle.summary)?);
    if !bundle.manifest.complete {
        eprintln!("warning: bundle incomplete: {}", bundle.manifest.notes.join("; "));
    }
    if report {
        let out = harness::emit_report(&bundle.dir)?;
        eprintln!("report written to {}", out.report.display());
    }
    Ok(())
}

fn theory(fitness: &str, m: u32, k_max: u32, out: Option<PathBuf>) -> Result<()> {
    let spec: FitnessSpec = parse_json_arg(fitness)?;
    spec.validate()?;
    let ctx = TheoryContext::new(spec.clone(), m)?;
    let regime = ctx.regime();
    let mut header = json!({
        "fitness": spec,
        "m": m,
        "theta_m": ctx.theta,
        "regime": regime,
        "exponent": ctx.tail_exponent_prediction().ok().map(|p| p.exponent),
    });
    match regime {
        Regime::Weak => header["C"] = json!(ctx.weak_tail_constant()?),
        Regime::Strong => {
            let alpha = spec.alpha().expect("strong disorder is a power law");
            header["alpha"] = json!(alpha);
            header["g01"] = json!(g_integral(ctx.theta, alpha, 0.0, 1.0)?);
        }
        _ => {}
    }
    let mut csv = String::from("k,p_k\n");
    if ctx.theta.is_finite() {
        for k in 0..=k_max {
            csv.push_str(&format!("{k},{}\n", ctx.limit_pk(k)?));
        }
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("theory.json"), serde_json::to_string_pretty(&header)? + "\n")?;
            fs::write(dir.join("theory.csv"), csv)?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{header}")?;
            stdout.write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ppp(fitness: &str, m: u32, samples: usize, delta: f64, eps: f64, compensate: bool, seed: u64, out: PathBuf) -> Result<()> {
    let spec: FitnessSpec = parse_json_arg(fitness)?;
    spec.validate()?;
    let settings = PppSettings {
        samples,
        delta,
        eps,
        compensate,
    };
    let threads = harness::resolve_threads(0);
    let draws = harness::with_pool(threads, || harness::ppp_draws(&spec, m, &settings, seed))??;
    fs::create_dir_all(&out)?;
    let mut csv = String::from("sample_id,sup_value,argmax_t,N_points\n");
    for (j, d) in draws.iter().enumerate() {
        csv.push_str(&format!("{j},{},{},{}\n", d.0, d.1, d.2));
    }
    fs::write(out.join("ppp.csv"), csv)?;
    let values: Vec<f64> = draws.iter().filter(|d| !d.3).map(|d| d.0).collect();
    let alpha = spec.alpha().expect("checked by ppp_draws");
    let mut summary = json!({
        "alpha": alpha,
        "regime": spec.classify_regime(m),
        "samples": samples,
        "empty_samples": samples - values.len(),
        "delta": delta,
        "ks_critical": 1.358 / (values.len().max(1) as f64).sqrt(),
    });
    if spec.classify_regime(m) == Regime::Strong && !values.is_empty() {
        let theta = spec.theta(m);
        let g = g_integral(theta, alpha, 0.0, 1.0)?;
        let locations: Vec<f64> = draws.iter().filter(|d| !d.3).map(|d| d.1).collect();
        summary["g01"] = json!(g);
        summary["ks_sup"] = json!(ks_statistic(&values, |x| frechet_cdf(g, alpha, x)));
        summary["ks_argmax"] = json!(ks_statistic(&locations, |t| law_of_i_cdf(theta, alpha, t).unwrap_or(f64::NAN)));
    }
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(out.join("ppp_summary.json"), text.clone() + "\n")?;
    println!("{text}");
    Ok(())
}

fn verify(model: Option<String>, n_max: usize, per_size: usize) -> Result<bool> {
    let models: Vec<ModelKind> = match model {
        Some(m) => vec![parse_json_arg(&m)?],
        None => {
            let mut v = vec![ModelKind::PafroBernoulli, ModelKind::PafroSingleEdge];
            for m in 1..=3 {
                v.push(ModelKind::Paffd { m });
                v.push(ModelKind::Pafud { m });
            }
            v
        }
    };
    let options = SuiteOptions {
        n_max,
        per_size,
        ..SuiteOptions::default()
    };
    let mut all = true;
    println!("{:<22} {:<22} {:>5} {:>7} {:>12} {:>9}  result", "model", "check", "k", "cases", "worst", "tol");
    for model in models {
        model.validate()?;
        for r in verify_suite(model, &options)? {
            all &= r.pass;
            let k = r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into());
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            println!(
                "{:<22} {:<22} {:>5} {:>7} {:>12.3e} {:>9.1e}  {verdict}",
                r.model, r.check, k, r.cases, r.worst, r.tolerance
            );
        }
    }
    Ok(all)
}

fn regime(config: PathBuf, outputs: Option<PathBuf>) -> Result<()> {
    let mut config = load_config(&config, outputs)?;
    config.experiment = ExperimentKind::RegimeScan;
    let bundle = harness::run_experiment(&config)?;
    let rows = bundle.summary["rows"].as_array().cloned().unwrap_or_default();
    println!("{:<32} {:>3} {:<15} {:>9} {:>9} {:>9} {:>9}", "spec", "m", "regime", "p(k) exp", "hill", "slope", "pred");
    let f = |v: &serde_json::Value| v.as_f64().map_or("-".to_string(), |x| format!("{x:.4}"));
    for r in rows {
        println!(
            "{:<32} {:>3} {:<15} {:>9} {:>9} {:>9} {:>9}",
            r["label"].as_str().unwrap_or(""),
            r["m"],
            r["regime"].as_str().unwrap_or(""),
            f(&r["predicted_exponent"]),
            f(&r["hill_estimate"]),
            f(&r["max_degree_slope"]),
            f(&r["predicted_slope"]),
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, outputs, report } => simulate(config, outputs, report),
        Command::Theory { fitness, m, k_max, out } => theory(&fitness, m, k_max, out),
        Command::Ppp {
            fitness,
            m,
            samples,
            delta,
            eps,
            compensate,
            seed,
            out,
        } => ppp(&fitness, m, samples, delta, eps, compensate, seed, out),
        Command::Verify { model, n_max, per_size } => match verify(model, n_max, per_size) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::Regime { config, outputs } => regime(config, outputs),
        Command::Report { dir } => harness::emit_report(&dir).map(|out| {
            println!("{}", out.report.display());
            for m in out.missing {
                eprintln!("missing: {m}");
            }
        }).map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
