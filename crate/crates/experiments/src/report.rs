//! Machine-readable experiment reports.
//!
//! A report carries named real measurements and verdicts. Each verdict is an
//! inequality `lhs REL factor · rhs` between a measured key and either another
//! measured key or a literal, so the stored boolean can be recomputed from
//! `measured` alone. The CSV form has the fixed columns
//! `experiment,kind,name,value,detail` with one row per parameter, measured
//! quantity, verdict and note.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_COLUMNS: [&str; 5] = ["experiment", "kind", "name", "value", "detail"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Self::Le => lhs <= rhs,
            Self::Lt => lhs < rhs,
            Self::Ge => lhs >= rhs,
            Self::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Le => "<=",
            Self::Lt => "<",
            Self::Ge => ">=",
            Self::Gt => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operand {
    Key(String),
    Value(f64),
}

impl From<&str> for Operand {
    fn from(k: &str) -> Self {
        Self::Key(k.to_string())
    }
}

impl From<String> for Operand {
    fn from(k: String) -> Self {
        Self::Key(k)
    }
}

impl From<f64> for Operand {
    fn from(v: f64) -> Self {
        Self::Value(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub lhs: String,
    pub relation: Relation,
    pub factor: f64,
    pub rhs: Operand,
    pub passed: bool,
}

impl Verdict {
    /// `None` if a referenced key is missing.
    pub fn evaluate(&self, measured: &BTreeMap<String, f64>) -> Option<bool> {
        let lhs = *measured.get(&self.lhs)?;
        let rhs = match &self.rhs {
            Operand::Key(k) => *measured.get(k)?,
            Operand::Value(v) => *v,
        };
        Some(self.relation.holds(lhs, self.factor * rhs))
    }

    pub fn describe(&self) -> String {
        let rhs = match &self.rhs {
            Operand::Key(k) => k.clone(),
            Operand::Value(v) => format!("{v}"),
        };
        if self.factor == 1.0 {
            format!("{} {} {}", self.lhs, self.relation.symbol(), rhs)
        } else {
            format!("{} {} {} * {}", self.lhs, self.relation.symbol(), self.factor, rhs)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub engine_version: String,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub measured: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            engine_version: ENGINE_VERSION.to_string(),
            seed: None,
            parameters: BTreeMap::new(),
            measured: BTreeMap::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            runtime_seconds: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameters serialize");
        self.parameters.insert(key.to_string(), v);
    }

    /// Non-finite values are stored as `±f64::MAX` so the JSON stays numeric.
    pub fn measure(&mut self, key: impl Into<String>, value: f64) {
        let v = if value.is_nan() {
            panic!("measured quantity is NaN")
        } else if value.is_infinite() {
            f64::MAX.copysign(value)
        } else {
            value
        };
        self.measured.insert(key.into(), v);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.measured.get(key).copied()
    }

    /// Records `lhs REL factor · rhs`; a missing key makes the verdict fail.
    pub fn check(
        &mut self,
        name: impl Into<String>,
        lhs: impl Into<String>,
        relation: Relation,
        factor: f64,
        rhs: impl Into<Operand>,
    ) -> bool {
        let mut v = Verdict {
            name: name.into(),
            lhs: lhs.into(),
            relation,
            factor,
            rhs: rhs.into(),
            passed: false,
        };
        v.passed = v.evaluate(&self.measured).unwrap_or(false);
        let passed = v.passed;
        self.verdicts.push(v);
        passed
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    /// Whether every stored verdict re-evaluates to its stored boolean.
    pub fn is_consistent(&self) -> bool {
        self.verdicts
            .iter()
            .all(|v| v.evaluate(&self.measured).unwrap_or(false) == v.passed)
    }

    /// Copies `other`'s measurements, parameters, verdicts and notes under
    /// `prefix.`.
    pub fn absorb(&mut self, prefix: &str, other: ExperimentReport) {
        let key = |k: &str| format!("{prefix}.{k}");
        for (k, v) in other.parameters {
            self.parameters.insert(key(&k), v);
        }
        for (k, v) in other.measured {
            self.measured.insert(key(&k), v);
        }
        for mut v in other.verdicts {
            v.name = key(&v.name);
            v.lhs = key(&v.lhs);
            if let Operand::Key(k) = &v.rhs {
                v.rhs = Operand::Key(key(k));
            }
            self.verdicts.push(v);
        }
        self.notes.extend(other.notes.into_iter().map(|n| format!("[{prefix}] {n}")));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        let id = self.experiment.as_str();
        w.write_record([id, "meta", "engine_version", &self.engine_version, ""])?;
        if let Some(seed) = self.seed {
            w.write_record([id, "meta", "seed", &seed.to_string(), ""])?;
        }
        if let Some(t) = self.runtime_seconds {
            w.write_record([id, "meta", "runtime_seconds", &t.to_string(), ""])?;
        }
        for (k, v) in &self.parameters {
            w.write_record([id, "parameter", k, &v.to_string(), ""])?;
        }
        for (k, v) in &self.measured {
            w.write_record([id, "measured", k, &v.to_string(), ""])?;
        }
        for v in &self.verdicts {
            w.write_record([id, "verdict", &v.name, &v.passed.to_string(), &v.describe()])?;
        }
        for (i, n) in self.notes.iter().enumerate() {
            w.write_record([id, "note", &i.to_string(), "", n])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory CSV");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo");
        r.seed = Some(7);
        r.param("s", [2, 3]);
        r.measure("a", 1.0);
        r.measure("b", 3.0);
        r.check("growth", "b", Relation::Ge, 1.5, "a");
        r.check("bounded", "a", Relation::Le, 1.0, 0.5);
        r.note("hello, world");
        r
    }

    #[test]
    fn verdicts_are_recomputed_from_measurements() {
        let r = sample();
        assert!(r.verdicts[0].passed);
        assert!(!r.verdicts[1].passed);
        assert!(!r.passed());
        assert!(r.is_consistent());
        let mut tampered = r.clone();
        tampered.measured.insert("a".into(), 0.1);
        assert!(!tampered.is_consistent());
    }

    #[test]
    fn missing_keys_fail() {
        let mut r = ExperimentReport::new("demo");
        assert!(!r.check("x", "nope", Relation::Le, 1.0, 1.0));
        assert!(r.is_consistent());
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let back: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(back.is_consistent());
    }

    #[test]
    fn infinite_values_stay_numeric() {
        let mut r = ExperimentReport::new("demo");
        r.measure("inf", f64::INFINITY);
        let back: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.get("inf"), Some(f64::MAX));
    }

    #[test]
    fn csv_has_fixed_columns() {
        let csv = sample().to_csv();
        let mut rd = csv::Reader::from_reader(csv.as_bytes());
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS);
        let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert!(rows.iter().any(|r| &r[1] == "verdict" && &r[2] == "growth" && &r[3] == "true"));
        assert!(rows.iter().any(|r| &r[1] == "note" && &r[4] == "hello, world"));
        assert!(rows.iter().any(|r| &r[1] == "parameter" && &r[3] == "[2,3]"));
    }

    #[test]
    fn absorb_prefixes_keys() {
        let mut outer = ExperimentReport::new("outer");
        outer.absorb("inner", sample());
        assert_eq!(outer.get("inner.b"), Some(3.0));
        assert_eq!(outer.verdicts[0].rhs, Operand::Key("inner.a".into()));
        assert!(outer.is_consistent());
    }
}
