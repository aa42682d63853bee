//! Report records and their JSON / CSV encodings.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use taukit_core::Verdict;

/// Report layout version.
pub const SCHEMA: u32 = 1;

/// CSV columns, in order.
pub const CSV_COLUMNS: [&str; 10] =
    ["suite", "case_id", "param", "estimate", "std_error", "bound", "slack", "exact", "verdict", "wall_time_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// A small JSON tree whose numbers keep 17 significant digits and whose
/// non-finite values become strings.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i128),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn nums(xs: &[f64]) -> Json {
        Json::Arr(xs.iter().map(|&x| Json::Num(x)).collect())
    }

    pub fn ints(xs: &[usize]) -> Json {
        Json::Arr(xs.iter().map(|&x| Json::Int(x as i128)).collect())
    }

    fn write(&self, out: &mut String, indent: usize) {
        let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', k));
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => write!(out, "{i}").unwrap(),
            Json::Num(x) => out.push_str(&format_number(*x, true)),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            Json::Arr(items) => {
                if items.iter().all(|v| !matches!(v, Json::Arr(_) | Json::Obj(_))) {
                    out.push('[');
                    for (i, v) in items.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        v.write(out, indent);
                    }
                    out.push(']');
                } else {
                    out.push_str("[\n");
                    for (i, v) in items.iter().enumerate() {
                        pad(out, indent + 2);
                        v.write(out, indent + 2);
                        out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                    }
                    pad(out, indent);
                    out.push(']');
                }
            }
            Json::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (i, (k, v)) in fields.iter().enumerate() {
                    pad(out, indent + 2);
                    out.push_str(&serde_json::to_string(k).unwrap());
                    out.push_str(": ");
                    v.write(out, indent + 2);
                    out.push_str(if i + 1 < fields.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, 0);
        s.push('\n');
        s
    }
}

/// 17 significant digits; non-finite values spelled out (quoted for JSON).
pub fn format_number(x: f64, quote: bool) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        let s = if x.is_nan() {
            "nan"
        } else if x > 0.0 {
            "inf"
        } else {
            "-inf"
        };
        if quote {
            format!("\"{s}\"")
        } else {
            s.to_string()
        }
    }
}

/// One checked case.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub suite: String,
    pub case_id: String,
    /// Everything needed to rerun the case.
    pub inputs: Json,
    /// The swept parameter (`t`, `λ`, …) when there is one.
    pub param: Option<f64>,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub bound: f64,
    /// Reference value from an exact oracle.
    pub exact: Option<f64>,
    pub verdict: Verdict,
    pub wall_time_ms: f64,
}

impl Record {
    pub fn new(suite: &str, case_id: impl Into<String>, estimate: f64, bound: f64, verdict: Verdict) -> Self {
        Record {
            suite: suite.to_string(),
            case_id: case_id.into(),
            inputs: Json::Obj(Vec::new()),
            param: None,
            estimate,
            std_error: None,
            bound,
            exact: None,
            verdict,
            wall_time_ms: 0.0,
        }
    }

    pub fn inputs(mut self, inputs: Json) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn param(mut self, p: f64) -> Self {
        self.param = Some(p);
        self
    }

    pub fn se(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self
    }

    pub fn exact(mut self, e: Option<f64>) -> Self {
        self.exact = e;
        self
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.estimate
    }

    fn to_json(&self) -> Json {
        let opt = |v: Option<f64>| v.map_or(Json::Null, Json::Num);
        Json::obj([
            ("suite", Json::Str(self.suite.clone())),
            ("case_id", Json::Str(self.case_id.clone())),
            ("inputs", self.inputs.clone()),
            ("param", opt(self.param)),
            ("estimate", Json::Num(self.estimate)),
            ("std_error", opt(self.std_error)),
            ("bound", Json::Num(self.bound)),
            ("slack", Json::Num(self.slack())),
            ("exact", opt(self.exact)),
            ("verdict", Json::Str(self.verdict.label().to_string())),
            ("wall_time_ms", Json::Num(self.wall_time_ms)),
        ])
    }
}

/// Verdict tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Summary {
    pub pass: usize,
    pub vacuous_pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn of(records: &[Record]) -> Self {
        let mut s = Summary::default();
        for r in records {
            match r.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::VacuousPass => s.vacuous_pass += 1,
                Verdict::Fail => s.fail += 1,
                Verdict::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }

    pub fn all_pass(&self) -> bool {
        self.fail == 0 && self.inconclusive == 0
    }
}

/// A complete run.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub name: String,
    pub config: Json,
    pub records: Vec<Record>,
    pub wall_time_ms: f64,
}

impl Report {
    pub fn summary(&self) -> Summary {
        Summary::of(&self.records)
    }

    pub fn to_json(&self) -> String {
        let s = self.summary();
        Json::obj([
            ("schema", Json::Int(SCHEMA as i128)),
            ("command", Json::Str(self.command.clone())),
            ("name", Json::Str(self.name.clone())),
            ("config", self.config.clone()),
            (
                "summary",
                Json::obj([
                    ("pass", Json::Int(s.pass as i128)),
                    ("vacuous_pass", Json::Int(s.vacuous_pass as i128)),
                    ("fail", Json::Int(s.fail as i128)),
                    ("inconclusive", Json::Int(s.inconclusive as i128)),
                ]),
            ),
            ("records", Json::Arr(self.records.iter().map(Record::to_json).collect())),
            ("wall_time_ms", Json::Num(self.wall_time_ms)),
        ])
        .render()
    }

    pub fn to_csv(&self) -> anyhow::Result<String> {
        records_to_csv(&self.records)
    }

    pub fn render(&self, format: Format) -> anyhow::Result<String> {
        match format {
            Format::Json => Ok(self.to_json()),
            Format::Csv => self.to_csv(),
        }
    }
}

pub fn records_to_csv(records: &[Record]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format_number(x, false));
    for r in records {
        w.write_record([
            r.suite.clone(),
            r.case_id.clone(),
            opt(r.param),
            format_number(r.estimate, false),
            opt(r.std_error),
            format_number(r.bound, false),
            format_number(r.slack(), false),
            opt(r.exact),
            r.verdict.label().to_string(),
            format_number(r.wall_time_ms, false),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes `text` next to `path` and renames it into place, so a failed run
/// never leaves a partial file.
pub fn write_atomic(path: &Path, text: &str) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| anyhow::anyhow!("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(text.as_bytes())?;
    f.sync_all()?;
    drop(f);
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_through_serde() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23] {
            let s = format_number(x, true);
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back, x);
        }
        assert_eq!(format_number(f64::INFINITY, true), "\"inf\"");
        assert_eq!(format_number(f64::NAN, false), "nan");
    }

    #[test]
    fn report_json_parses() {
        let r = Report {
            command: "verify".into(),
            name: "x".into(),
            config: Json::obj([("seed", Json::Int(3))]),
            records: vec![Record::new("s", "a,b", 1.0, f64::INFINITY, Verdict::VacuousPass).param(0.5)],
            wall_time_ms: 1.0,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["records"][0]["bound"], "inf");
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("suite,case_id,param,estimate"));
        assert!(csv.contains("\"a,b\""));
    }
}
