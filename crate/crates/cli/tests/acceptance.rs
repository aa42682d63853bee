//! Acceptance checks: one line per criterion, non-zero exit if any fails.
//!
//! Sizes are the ones the criteria name; the runtime limits are checked
//! against wall-clock time on this machine.

use std::process::Command;
use std::time::{Duration, Instant};

use taukit_cli::config::DEFAULT_SEED;
use taukit_cli::experiments::{corollary1, corollary2, corollary3, corollary5};
use taukit_cli::output::Record;
use taukit_cli::suites::{
    claims_suite, inclusion_record, infconv_suite, measures_suite, negative_control, tau_equality_records,
    tau_nd_suite, tau_positive_records,
};
use taukit_core::Verdict;

const SEED: u64 = DEFAULT_SEED;

struct Outcome {
    pass: bool,
    detail: String,
}

fn all_pass(recs: &[Record]) -> bool {
    !recs.is_empty() && recs.iter().all(|r| r.verdict.is_pass())
}

fn failures(recs: &[Record]) -> String {
    let bad: Vec<String> = recs
        .iter()
        .filter(|r| !r.verdict.is_pass())
        .map(|r| format!("{} [{}] estimate {:e} bound {:e}", r.case_id, r.verdict.label(), r.estimate, r.bound))
        .collect();
    if bad.is_empty() {
        format!("{} records pass", recs.len())
    } else {
        bad.join("; ")
    }
}

fn from_records(recs: taukit_core::Result<Vec<Record>>) -> Outcome {
    match recs {
        Ok(r) => Outcome { pass: all_pass(&r), detail: failures(&r) },
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn c1() -> Outcome {
    from_records(Ok(claims_suite(1_000_000)))
}

fn c2() -> Outcome {
    from_records(infconv_suite(1000, SEED))
}

fn c3() -> Outcome {
    from_records(tau_equality_records())
}

fn c4() -> Outcome {
    from_records(tau_positive_records(1000, SEED))
}

fn c5() -> Outcome {
    match negative_control() {
        Ok(r) => Outcome {
            pass: r.verdict == Verdict::Pass && r.estimate > r.bound,
            detail: format!("φ = {}·x gives product {:.6} > 1 + budget = {:.6}", r.param.unwrap_or(f64::NAN), r.estimate, r.bound),
        },
        Err(e) => Outcome { pass: false, detail: format!("error: {e}") },
    }
}

fn c6() -> Outcome {
    from_records(tau_nd_suite(20, 1_000_000, SEED))
}

fn c7() -> Outcome {
    let mut recs = Vec::new();
    for n in [2, 8, 32] {
        for t in [0.1, 1.0, 10.0] {
            match inclusion_record(n, t, 100_000, SEED) {
                Ok(r) => recs.push(r),
                Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
            }
        }
    }
    let samplers: Vec<String> = recs
        .iter()
        .map(|r| match &r.inputs {
            taukit_cli::output::Json::Obj(f) => f
                .iter()
                .find(|(k, _)| k == "sampler")
                .map(|(_, v)| format!("{v:?}"))
                .unwrap_or_default(),
            _ => String::new(),
        })
        .collect();
    let ray = samplers.iter().filter(|s| s.contains("rayscaling")).count();
    Outcome {
        pass: all_pass(&recs),
        detail: format!("{}; {} of 9 cells used ray scaling", failures(&recs), ray),
    }
}

fn c8() -> Outcome {
    let t = [1.0, 2.0, 4.0, 8.0];
    let main = match corollary1(&[10], &t, 1_000_000, SEED) {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
    };
    let bounds_ok = main.iter().all(|r| (r.bound - 2.0 * (-r.param.unwrap()).exp()).abs() <= 1e-15);
    let one = match corollary1(&[1], &t, 1_000_000, SEED) {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: format!("error: {e}") },
    };
    let exact_ok = one.iter().all(|r| r.exact.is_some());
    Outcome {
        pass: all_pass(&main) && all_pass(&one) && bounds_ok && exact_ok,
        detail: format!("n = 10: {}; n = 1 with quadrature: {}", failures(&main), failures(&one)),
    }
}

fn c9() -> Outcome {
    from_records(corollary2(&[8], &[-2.0, -1.0, 1.0, 2.0], 1_000_000, SEED))
}

fn c10() -> Outcome {
    from_records(corollary3(&[8], 1_000_000, SEED))
}

fn c11() -> Outcome {
    from_records(corollary5(&[12], 100_000, SEED))
}

fn c12() -> Outcome {
    from_records(measures_suite(1_000_000, SEED))
}

fn run_cli(args: &[&str], threads: usize) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_taukit"))
        .args(args)
        .args(["--threads", &threads.to_string(), "--seed", &SEED.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{:?} exited with {:?}", args, out.status.code()));
    }
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    Ok(text.lines().filter(|l| !l.contains("wall_time_ms")).collect::<Vec<_>>().join("\n"))
}

fn c13() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["verify", "--suite", "tau-nd", "--samples", "20000"],
        &["verify", "--suite", "measures", "--samples", "50000"],
        &["experiment", "--experiment", "corollary2", "--samples", "50000"],
        &["experiment", "--experiment", "lemma4", "--samples", "100000"],
    ];
    for args in runs {
        let a = run_cli(args, 1);
        let b = run_cli(args, 8);
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => return Outcome { pass: false, detail: format!("{args:?} differs between 1 and 8 threads") },
            (Err(e), _) | (_, Err(e)) => return Outcome { pass: false, detail: e },
        }
    }
    Outcome { pass: true, detail: format!("{} configurations identical at --threads 1 and 8", runs.len()) }
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check, Duration); 13] = [
        (1, "analytic claims", c1, Duration::from_secs(5)),
        (2, "inf-convolution engine", c2, Duration::from_secs(60)),
        (3, "(τ) equality saturation", c3, Duration::from_secs(10)),
        (4, "(τ) positive suite 1D", c4, Duration::from_secs(300)),
        (5, "(τ) negative control", c5, Duration::from_secs(600)),
        (6, "tensorization consistency", c6, Duration::from_secs(300)),
        (7, "sublevel inclusion", c7, Duration::from_secs(120)),
        (8, "two-ball deviation", c8, Duration::from_secs(180)),
        (9, "Lipschitz MGF", c9, Duration::from_secs(180)),
        (10, "Gaussian Poincaré", c10, Duration::from_secs(120)),
        (11, "cube hull deviation", c11, Duration::from_secs(300)),
        (12, "measures suite", c12, Duration::from_secs(120)),
        (13, "determinism across thread counts", c13, Duration::from_secs(600)),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (k, name, check, limit) in criteria {
        if filter.is_some_and(|f| f != k) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let in_time = took <= limit;
        let pass = o.pass && in_time;
        failed += (!pass) as usize;
        println!(
            "[{}] criterion {k}: {name} ({:.1} s of {} s) {}{}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            o.detail,
            if in_time { "" } else { " [over time limit]" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
