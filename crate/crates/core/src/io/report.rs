//! Metric report JSON and cross-sequence aggregation.
//!
//! Every suite carries the configuration that produced it. Absent values
//! (empty regions, undefined ratios) are `null`; infinities are written as
//! the strings `"inf"` / `"-inf"`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::io::{read_file, write_file};

pub const TOOL_NAME: &str = "world4d";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Field excluded from byte-level determinism comparisons.
pub const TIMESTAMP_FIELD: &str = "timestamp_unix_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: Value,
    pub metrics: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tool: String,
    pub tool_version: String,
    pub timestamp_unix_s: u64,
    pub pred: String,
    pub gt: String,
    pub suites: BTreeMap<String, SuiteReport>,
}

impl MetricsReport {
    pub fn new(pred: impl Into<String>, gt: impl Into<String>) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            timestamp_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            pred: pred.into(),
            gt: gt.into(),
            suites: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::format(path, 0, e.to_string()))?;
        if r.tool != TOOL_NAME {
            return Err(Error::Validation(format!("{}: not a {TOOL_NAME} report", path.display())));
        }
        Ok(r)
    }
}

pub fn write_report(path: &Path, r: &MetricsReport) -> Result<()> {
    write_file(path, r.to_json().as_bytes())
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::format(path, e.valid_up_to() as u64, "not UTF-8"))?;
    MetricsReport::from_json(text, path)
}

/// JSON encoding of a metric value.
pub fn number(x: f64) -> Value {
    if x.is_nan() {
        Value::Null
    } else if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        Value::from(x)
    }
}

fn parse_number(v: &Value) -> Option<Option<f64>> {
    match v {
        Value::Null => Some(None),
        Value::Number(n) => n.as_f64().map(Some),
        Value::String(s) if s == "inf" => Some(Some(f64::INFINITY)),
        Value::String(s) if s == "-inf" => Some(Some(f64::NEG_INFINITY)),
        _ => None,
    }
}

/// Serde adapter for `f64` fields that may be infinite.
pub mod inf_sentinel {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::number(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match super::parse_number(&v) {
            Some(Some(x)) => Ok(x),
            Some(None) => Ok(f64::NAN),
            None => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {v}"))),
        }
    }
}

/// Numeric leaves keyed by dotted path. Arrays (per-frame curves) are skipped.
fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Option<f64>>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(_) => {}
        other => {
            if let Some(x) = parse_number(other) {
                out.insert(prefix.to_string(), x);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetric {
    /// Mean over the inputs that reported a value; `null` when none did.
    pub mean: Value,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSuite {
    pub config: Value,
    pub metrics: BTreeMap<String, AggregateMetric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub tool: String,
    pub tool_version: String,
    pub inputs: usize,
    pub suites: BTreeMap<String, AggregateSuite>,
}

/// Per-metric means across reports. Reports must agree on every suite's config.
pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::Validation("no reports to aggregate".into()));
    }
    let mut suites: BTreeMap<String, (Value, BTreeMap<String, Vec<Option<f64>>>)> = BTreeMap::new();
    for (i, r) in reports.iter().enumerate() {
        for (name, s) in &r.suites {
            let entry = suites
                .entry(name.clone())
                .or_insert_with(|| (s.config.clone(), BTreeMap::new()));
            if entry.0 != s.config {
                return Err(Error::Validation(format!(
                    "report {i} ran suite {name} with a different config: {} vs {}",
                    s.config, entry.0
                )));
            }
            let mut flat = BTreeMap::new();
            flatten("", &s.metrics, &mut flat);
            for (k, x) in flat {
                entry.1.entry(k).or_default().push(x);
            }
        }
    }
    let suites = suites
        .into_iter()
        .map(|(name, (config, metrics))| {
            let metrics = metrics
                .into_iter()
                .map(|(k, xs)| {
                    let vals: Vec<f64> = xs.into_iter().flatten().collect();
                    let mean = if vals.is_empty() {
                        Value::Null
                    } else {
                        number(vals.iter().sum::<f64>() / vals.len() as f64)
                    };
                    (k, AggregateMetric { mean, count: vals.len() })
                })
                .collect();
            (name, AggregateSuite { config, metrics })
        })
        .collect();
    Ok(AggregateReport {
        tool: TOOL_NAME.into(),
        tool_version: TOOL_VERSION.into(),
        inputs: reports.len(),
        suites,
    })
}

impl AggregateReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("aggregate serializes");
        s.push('\n');
        s
    }

    /// `suite,metric,mean,count` rows; absent means are empty cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,metric,mean,count\n");
        for (name, suite) in &self.suites {
            for (k, m) in &suite.metrics {
                let mean = match &m.mean {
                    Value::Null => String::new(),
                    Value::String(x) => x.clone(),
                    v => v.to_string(),
                };
                s.push_str(&format!("{name},{k},{mean},{}\n", m.count));
            }
        }
        s
    }
}

/// Flatten a report's suites into `suite,metric,value` CSV rows.
pub fn report_csv(r: &MetricsReport) -> String {
    let mut s = String::from("suite,metric,value\n");
    for (name, suite) in &r.suites {
        let mut flat = BTreeMap::new();
        flatten("", &suite.metrics, &mut flat);
        for (k, x) in flat {
            let v = x.map(|x| match number(x) {
                Value::String(s) => s,
                v => v.to_string(),
            });
            s.push_str(&format!("{name},{k},{}\n", v.unwrap_or_default()));
        }
    }
    s
}

/// Helper for building metric objects in canonical key order.
pub fn object(pairs: impl IntoIterator<Item = (&'static str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn report(epe: f64, alpha: f64) -> MetricsReport {
        let mut r = MetricsReport::new("p", "g");
        r.suites.insert(
            "flow".into(),
            SuiteReport {
                config: json!({ "alpha": alpha }),
                metrics: json!({ "epe": epe, "psnr": number(f64::INFINITY), "skip": null, "curve": [1, 2] }),
            },
        );
        r
    }

    #[test]
    fn single_input_is_identity() {
        let a = aggregate(&[report(0.25, 0.03)]).unwrap();
        let m = &a.suites["flow"].metrics;
        assert_eq!(m["epe"].mean, json!(0.25));
        assert_eq!(m["psnr"].mean, json!("inf"));
        assert_eq!(m["skip"].mean, Value::Null);
        assert_eq!(m["skip"].count, 0);
        assert!(!m.contains_key("curve"));
    }

    #[test]
    fn two_inputs_average() {
        let a = aggregate(&[report(0.25, 0.03), report(0.75, 0.03)]).unwrap();
        assert_eq!(a.suites["flow"].metrics["epe"].mean, json!(0.5));
        assert_eq!(a.suites["flow"].metrics["epe"].count, 2);
        assert!(a.to_csv().contains("flow,epe,0.5,2\n"));
    }

    #[test]
    fn conflicting_configs_refused() {
        assert!(aggregate(&[report(0.25, 0.03), report(0.75, 0.05)]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn inf_sentinel_round_trip() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct S {
            #[serde(with = "inf_sentinel")]
            x: f64,
        }
        let text = serde_json::to_string(&S { x: f64::INFINITY }).unwrap();
        assert_eq!(text, r#"{"x":"inf"}"#);
        assert_eq!(serde_json::from_str::<S>(&text).unwrap(), S { x: f64::INFINITY });
        let r = report(1.0, 0.03);
        assert_eq!(MetricsReport::from_json(&r.to_json(), Path::new("r")).unwrap(), r);
    }
}
