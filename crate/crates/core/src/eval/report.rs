use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{AgeError, Result};

/// One metric value, serialized as a single JSON line.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricRecord {
    pub task: String,
    pub variant: String,
    pub dataset: String,
    pub seed: u64,
    pub params: Map<String, Value>,
    pub metric: String,
    pub value: f64,
}

impl MetricRecord {
    pub fn new(task: &str, variant: &str, dataset: &str, seed: u64, metric: &str, value: f64) -> Self {
        MetricRecord {
            task: task.into(),
            variant: variant.into(),
            dataset: dataset.into(),
            seed,
            params: Map::new(),
            metric: metric.into(),
            value,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("metric record serializes")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub records: Vec<MetricRecord>,
}

impl Report {
    pub fn push(&mut self, r: MetricRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
    }

    pub fn to_json_lines(&self) -> String {
        self.records.iter().map(|r| r.to_json_line() + "\n").collect()
    }

    /// Plot-ready CSV. `provenance` pairs become leading `# key: value`
    /// lines; params are flattened into one `k=v;k=v` column in key order.
    pub fn to_csv(&self, provenance: &[(String, String)]) -> String {
        let mut s = String::new();
        for (k, v) in provenance {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str("task,variant,dataset,seed,params,metric,value\n");
        for r in &self.records {
            let params: Vec<String> = r
                .params
                .iter()
                .map(|(k, v)| match v {
                    Value::String(x) => format!("{k}={x}"),
                    other => format!("{k}={other}"),
                })
                .collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                csv_field(&r.task),
                csv_field(&r.variant),
                csv_field(&r.dataset),
                r.seed,
                csv_field(&params.join(";")),
                csv_field(&r.metric),
                r.value
            );
        }
        s
    }

    pub fn write_json_lines(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_lines()).map_err(|e| AgeError::io(path, e))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, provenance: &[(String, String)]) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv(provenance)).map_err(|e| AgeError::io(path, e))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_has_all_fields() {
        let r = MetricRecord::new("lp", "dg", "toy", 7, "auc", 0.75).param("gamma", 0.5);
        let v: Value = serde_json::from_str(&r.to_json_line()).unwrap();
        for k in ["task", "variant", "dataset", "seed", "params", "metric", "value"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["params"]["gamma"], 0.5);
    }

    #[test]
    fn csv_quotes_and_provenance() {
        let mut rep = Report::default();
        rep.push(MetricRecord::new("gr", "ug-dw", "a,b", 1, "precision", 0.5).param("k", 10));
        let csv = rep.to_csv(&[("seed".into(), "1".into())]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# seed: 1");
        assert_eq!(lines[2], "gr,ug-dw,\"a,b\",1,k=10,precision,0.5");
    }
}
