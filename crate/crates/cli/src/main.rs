//! `advcal`: command-line front end of the adversarial calibration lab.
//!
//! Every success path prints one JSON document on stdout. Exit codes: 0 on
//! success, 1 when a check does not match, 2 for usage and input errors, 3 for
//! internal invariant violations.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use advcal::calibration::audit;
use advcal::finite_instance::{
    adversarial_bayes_risk, brute_force_bayes_risk, duality_values, optimal_attack,
    standard_bayes_risk,
};
use advcal::scenarios;
use advcal::training::{train, verify_pseudo_consistency};
use advcal::{Error, LossKind, MarginLoss, ProblemInstance, TrainConfig};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "advcal", version, about = "Adversarial calibration lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mincut,
    BruteForce,
}

#[derive(Subcommand)]
enum Command {
    /// Standard and adversarial calibration report of one loss.
    AuditLoss {
        #[arg(long)]
        loss: String,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Adversarial Bayes 0/1 risk of an instance file.
    BayesRisk {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "mincut")]
        method: Method,
        /// Include wall-clock runtime (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Optimal attack: writes the plan as JSON to --out and as CSV next to it.
    Attack {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Min-cut, brute-force and optimal-attack values; exit 1 if they disagree.
    Duality {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Adversarial training; writes trajectory.csv, classifier.json and classifier.csv.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Runs a built-in scenario; exit 1 on any expectation mismatch.
    Scenario {
        #[arg(long)]
        name: String,
        /// Scenario parameter as key=value, repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// Loss to exercise, repeatable; defaults depend on the scenario.
        #[arg(long = "loss")]
        losses: Vec<String>,
    },
    /// The loss zoo with calibration verdicts.
    ListLosses {
        /// Human-readable table instead of JSON.
        #[arg(long)]
        pretty: bool,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|_| format!("parameter {k}: {v:?} is not a number"))?;
    Ok((k.to_string(), v))
}

/// Failure of a command: a library error or a check that did not match.
enum Failure {
    Lib(Error),
    Mismatch(serde_json::Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Lib(Error::Io(std::io::Error::other(e.to_string())))
    }
}

type Outcome = Result<serde_json::Value, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) | Error::Numeric(_) => 3,
        Error::Diverged { .. } => 1,
        _ => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Domain(_) => "domain",
        Error::Numeric(_) => "numeric",
        Error::Resource(_) => "resource",
        Error::Precondition(_) => "precondition",
        Error::Invariant(_) => "invariant",
        Error::Diverged { .. } => "diverged",
        Error::Instance(_) => "instance",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn to_json<S: Serialize>(value: &S) -> serde_json::Value {
    serde_json::to_value(value).expect("reports serialize")
}

fn read_instance(path: &Path) -> Result<ProblemInstance, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    ProblemInstance::from_json(&text).map_err(|e| match e {
        Error::Parse(p) => Error::Instance(format!("{}: {p}", path.display())),
        Error::Instance(m) => Error::Instance(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn margin_loss(name: &str, tau: Option<f64>, lambda: Option<f64>) -> Result<MarginLoss, Error> {
    MarginLoss::new(LossKind::parse(name)?, tau, lambda)
}

fn write_csv<R: AsRef<[String]>>(path: &Path, header: &[&str], rows: &[R]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.as_ref())?;
    }
    w.flush()?;
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::AuditLoss { loss, tau, lambda } => Ok(to_json(&audit(&margin_loss(&loss, tau, lambda)?))),
        Command::BayesRisk { instance, method, timing } => {
            let inst = read_instance(&instance)?;
            let report = match method {
                Method::Mincut => adversarial_bayes_risk(&inst),
                Method::BruteForce => brute_force_bayes_risk(&inst)?,
            };
            Ok(to_json(&if timing { report } else { report.without_timing() }))
        }
        Command::Attack { instance, out } => {
            let inst = read_instance(&instance)?;
            let plan = optimal_attack(&inst);
            plan.check_membership(&inst)?;
            fs::write(&out, serde_json::to_string_pretty(&plan).expect("plans serialize") + "\n")?;
            let csv_path = out.with_extension("csv");
            let header = plan.csv_header();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_csv(&csv_path, &header, &plan.csv_rows())?;
            Ok(json!({
                "json": out,
                "csv": csv_path,
                "moves": plan.moves.len(),
                "attacked_standard_bayes_risk": standard_bayes_risk(&plan.distribution()),
                "adversarial_bayes_risk": adversarial_bayes_risk(&inst).value,
            }))
        }
        Command::Duality { instance } => {
            let report = duality_values(&read_instance(&instance)?)?;
            let value = to_json(&report);
            if report.holds {
                Ok(value)
            } else {
                Err(Failure::Mismatch(value))
            }
        }
        Command::Train { config, out_dir } => {
            let cfg = TrainConfig::from_file(&config)?;
            let outcome = train(&cfg)?;
            fs::create_dir_all(&out_dir)?;
            let traj = &outcome.trajectory;
            let trajectory_csv = out_dir.join("trajectory.csv");
            write_csv(&trajectory_csv, &advcal::TrajectoryRecord::csv_header(), &traj.csv_rows())?;
            let classifier_json = out_dir.join("classifier.json");
            fs::write(&classifier_json, outcome.classifier.to_json() + "\n")?;
            let classifier_csv = out_dir.join("classifier.csv");
            let header = outcome.classifier.csv_header();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_csv(&classifier_csv, &header, &outcome.classifier.csv_rows())?;
            Ok(json!({
                "loss": traj.loss,
                "iterations": cfg.iterations,
                "final": traj.last(),
                "adversarial_bayes_risk": adversarial_bayes_risk(&outcome.instance).value,
                "pseudo_consistency": verify_pseudo_consistency(traj, &outcome.instance),
                "files": [trajectory_csv, classifier_json, classifier_csv],
            }))
        }
        Command::Scenario { name, params, losses } => {
            let params: BTreeMap<String, f64> = params.into_iter().collect();
            let losses = losses
                .iter()
                .map(|l| margin_loss(l, None, None))
                .collect::<Result<Vec<_>, _>>()?;
            let chosen = (!losses.is_empty()).then_some(losses.as_slice());
            let report = scenarios::run(&name, &params, chosen)?;
            let value = to_json(&report);
            if report.passed {
                Ok(value)
            } else {
                Err(Failure::Mismatch(value))
            }
        }
        Command::ListLosses { pretty } => {
            let rows: Vec<serde_json::Value> = MarginLoss::zoo()
                .iter()
                .map(|loss| {
                    let r = audit(loss);
                    json!({
                        "name": r.loss_name,
                        "convex": r.flags.is_convex,
                        "standard_calibrated": r.standard_calibrated,
                        "adversarially_calibrated": r.adversarially_calibrated,
                        "verdict": r.adversarial_verdict,
                        "rule": r.verdict_rule,
                        "zero_one_like": r.zero_one_like,
                    })
                })
                .collect();
            if pretty {
                print_table(&rows);
                return Ok(serde_json::Value::Null);
            }
            Ok(serde_json::Value::Array(rows))
        }
    }
}

fn print_table(rows: &[serde_json::Value]) {
    let yes = |v: &serde_json::Value| if v.as_bool() == Some(true) { "yes" } else { "no" };
    println!(
        "{:<26} {:>6} {:>9} {:>12} {:>13}  {}",
        "loss", "convex", "standard", "adversarial", "0/1-like", "rule"
    );
    for r in rows {
        println!(
            "{:<26} {:>6} {:>9} {:>12} {:>13}  {}",
            r["name"].as_str().unwrap_or_default(),
            yes(&r["convex"]),
            yes(&r["standard_calibrated"]),
            yes(&r["adversarially_calibrated"]),
            yes(&r["zero_one_like"]),
            r["rule"].as_str().unwrap_or_default(),
        );
    }
}

fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("values serialize");
    // A closed pipe downstream is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(serde_json::Value::Null) => ExitCode::SUCCESS,
        Ok(value) => {
            print_json(&value);
            ExitCode::SUCCESS
        }
        Err(Failure::Mismatch(value)) => {
            print_json(&value);
            eprintln!("advcal: check failed");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            let body = json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
