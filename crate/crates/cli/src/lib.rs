//! Driver for the taukit suites and experiments.

pub mod config;
pub mod experiments;
pub mod output;
pub mod suites;

use std::time::Instant;

use taukit_core::Verdict;

use config::{Cli, Command, ReportArgs, RunArgs, RunConfig, UsageError};
use output::{records_to_csv, write_atomic, Format, Record, Report};

/// Exit status: every verdict passes.
pub const EXIT_OK: i32 = 0;
/// Exit status: a check failed or was inconclusive.
pub const EXIT_FAIL: i32 = 1;
/// Exit status: bad invocation or a run that could not complete.
pub const EXIT_USAGE: i32 = 2;

/// Runs a suite or an experiment inside a pool of `cfg.threads` workers.
pub fn execute(cfg: &RunConfig, experiment: bool) -> anyhow::Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let start = Instant::now();
    let mut records = pool.install(|| {
        if experiment {
            experiments::run_experiment(cfg)
        } else {
            suites::run_suite(cfg)
        }
    })?;
    if cfg.strict {
        for r in &mut records {
            if r.verdict == Verdict::Inconclusive {
                r.verdict = Verdict::Fail;
            }
        }
    }
    Ok(Report {
        command: if experiment { "experiment" } else { "verify" }.into(),
        name: cfg.name.clone(),
        config: cfg.echo(),
        records,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn emit(text: &str, out: Option<&std::path::Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_command(args: &RunArgs, experiment: bool) -> anyhow::Result<i32> {
    let cfg = RunConfig::resolve(args, experiment)?;
    let report = execute(&cfg, experiment)?;
    emit(&report.render(cfg.format)?, cfg.out.as_deref())?;
    let s = report.summary();
    eprintln!(
        "{} {}: {} pass, {} vacuous, {} fail, {} inconclusive",
        report.command, report.name, s.pass, s.vacuous_pass, s.fail, s.inconclusive
    );
    Ok(if s.all_pass() { EXIT_OK } else { EXIT_FAIL })
}

fn num(v: &serde_json::Value) -> Option<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

/// Reads the records back from a JSON report.
pub fn parse_report(text: &str) -> anyhow::Result<Vec<Record>> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    if v["schema"] != 1 {
        anyhow::bail!("unsupported report schema {}", v["schema"]);
    }
    let recs = v["records"].as_array().ok_or_else(|| anyhow::anyhow!("report has no records"))?;
    recs.iter()
        .map(|r| {
            let verdict = match r["verdict"].as_str() {
                Some("pass") => Verdict::Pass,
                Some("vacuous-pass") => Verdict::VacuousPass,
                Some("fail") => Verdict::Fail,
                Some("inconclusive") => Verdict::Inconclusive,
                other => anyhow::bail!("bad verdict {other:?}"),
            };
            let need = |k: &str| num(&r[k]).ok_or_else(|| anyhow::anyhow!("record field `{k}` missing"));
            let mut rec = Record::new(
                r["suite"].as_str().unwrap_or_default(),
                r["case_id"].as_str().unwrap_or_default(),
                need("estimate")?,
                need("bound")?,
                verdict,
            );
            rec.param = num(&r["param"]);
            rec.std_error = num(&r["std_error"]);
            rec.exact = num(&r["exact"]);
            rec.wall_time_ms = num(&r["wall_time_ms"]).unwrap_or(0.0);
            Ok(rec)
        })
        .collect()
}

fn run_report(args: &ReportArgs) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", args.input.display())))?;
    let records = parse_report(&text).map_err(|e| UsageError(e.to_string()))?;
    let out = match args.format {
        Format::Csv => records_to_csv(&records)?,
        Format::Json => text,
    };
    emit(&out, args.out.as_deref())?;
    Ok(if output::Summary::of(&records).all_pass() { EXIT_OK } else { EXIT_FAIL })
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let res = match &cli.command {
        Command::Verify(a) => run_command(a, false),
        Command::Experiment(a) => run_command(a, true),
        Command::Report(a) => run_report(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
