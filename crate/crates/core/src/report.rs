//! Report records shared by the evaluators and the command line.

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// A named number with the numerical flags raised while computing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    /// Non-finite values are written as `null`.
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_infinity")]
    pub value: f64,
    #[serde(default)]
    pub flags: Vec<String>,
}

/// A verdict and the names of the quantities it was derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub name: String,
    pub verdict: String,
    pub from: Vec<String>,
}

/// One side of a cross-check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Side {
    pub name: String,
    pub verdict: String,
}

pub const INDETERMINATE: &str = "indeterminate";

/// Comparison of verdicts that should coincide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub name: String,
    pub sides: Vec<Side>,
    /// Verdicts the first side implies but that are not equivalent, e.g.
    /// a sufficient-only condition. Empty for full equivalences.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub implies: Vec<(String, String)>,
    pub agree: bool,
}

impl CrossCheck {
    /// Sides agree when all definite verdicts coincide.
    pub fn equivalence(name: &str, sides: Vec<Side>) -> Self {
        let mut definite = sides.iter().map(|s| s.verdict.as_str()).filter(|v| *v != INDETERMINATE);
        let agree = match definite.next() {
            None => true,
            Some(first) => definite.all(|v| v == first),
        };
        Self { name: name.to_string(), sides, implies: Vec::new(), agree }
    }

    /// `premise` implies `conclusion` whenever premise shows `when` and the
    /// conclusion is definite: it must then show `then`.
    pub fn implication(name: &str, premise: Side, conclusion: Side, when: &str, then: &str) -> Self {
        let agree = premise.verdict != when || conclusion.verdict == INDETERMINATE || conclusion.verdict == then;
        Self {
            name: name.to_string(),
            sides: vec![premise, conclusion],
            implies: vec![(when.to_string(), then.to_string())],
            agree,
        }
    }
}

/// Output document of every task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub params: Value,
    pub quantities: Vec<Quantity>,
    pub verdicts: Vec<VerdictEntry>,
    pub cross_checks: Vec<CrossCheck>,
    pub provenance: Value,
}

impl Report {
    pub fn new(title: &str, params: Value) -> Self {
        Self {
            title: title.to_string(),
            params,
            quantities: Vec::new(),
            verdicts: Vec::new(),
            cross_checks: Vec::new(),
            provenance: Value::Object(Default::default()),
        }
    }

    pub fn quantity(&mut self, name: impl Into<String>, value: f64, flags: &[&str]) {
        self.quantities.push(Quantity { name: name.into(), value, flags: flags.iter().map(|s| s.to_string()).collect() });
    }

    pub fn verdict(&mut self, name: impl Into<String>, verdict: impl Into<String>, from: &[String]) {
        self.verdicts.push(VerdictEntry { name: name.into(), verdict: verdict.into(), from: from.to_vec() });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|q| q.name == name).map(|q| q.value)
    }

    pub fn verdict_of(&self, name: &str) -> Option<&str> {
        self.verdicts.iter().find(|v| v.name == name).map(|v| v.verdict.as_str())
    }

    pub fn coherent(&self) -> bool {
        self.cross_checks.iter().all(|c| c.agree)
    }

    pub fn any_indeterminate(&self) -> bool {
        self.verdicts.iter().any(|v| v.verdict == INDETERMINATE)
    }

    /// Appends the entries of `other` with names prefixed by `prefix`.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        let p = |s: &str| format!("{prefix}.{s}");
        for q in other.quantities {
            self.quantities.push(Quantity { name: p(&q.name), ..q });
        }
        for v in other.verdicts {
            self.verdicts.push(VerdictEntry { name: p(&v.name), verdict: v.verdict, from: v.from.iter().map(|f| p(f)).collect() });
        }
        for c in other.cross_checks {
            self.cross_checks.push(CrossCheck {
                name: p(&c.name),
                sides: c.sides.into_iter().map(|s| Side { name: p(&s.name), verdict: s.verdict }).collect(),
                ..c
            });
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Flat `section,name,value,flags` table.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["section", "name", "value", "detail"]).map_err(io)?;
        for q in &self.quantities {
            let v = if q.value.is_finite() { format!("{:e}", q.value) } else { String::new() };
            w.write_record(["quantity", &q.name, &v, &q.flags.join(";")]).map_err(io)?;
        }
        for v in &self.verdicts {
            w.write_record(["verdict", &v.name, &v.verdict, &v.from.join(";")]).map_err(io)?;
        }
        for c in &self.cross_checks {
            let sides: Vec<String> = c.sides.iter().map(|s| format!("{}={}", s.name, s.verdict)).collect();
            w.write_record(["cross_check", &c.name, if c.agree { "agree" } else { "disagree" }, &sides.join(";")]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Short text table for terminals.
    pub fn summary(&self) -> String {
        let mut out = format!("{}\n", self.title);
        for v in &self.verdicts {
            out.push_str(&format!("  {:<44} {}\n", v.name, v.verdict));
        }
        for c in &self.cross_checks {
            out.push_str(&format!("  {:<44} {}\n", c.name, if c.agree { "agree" } else { "DISAGREE" }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn side(n: &str, v: &str) -> Side {
        Side { name: n.into(), verdict: v.into() }
    }

    #[test]
    fn equivalence_ignores_indeterminate() {
        let c = CrossCheck::equivalence("x", vec![side("a", "compact-looking"), side("b", INDETERMINATE)]);
        assert!(c.agree);
        let c = CrossCheck::equivalence("x", vec![side("a", "compact-looking"), side("b", "bounded-non-compact-looking")]);
        assert!(!c.agree);
    }

    #[test]
    fn implication_is_one_way() {
        let yes = CrossCheck::implication("x", side("m", "finite-looking"), side("o", "divergent-looking"), "finite-looking", "finite-looking");
        assert!(!yes.agree);
        let no = CrossCheck::implication("x", side("m", "divergent-looking"), side("o", "finite-looking"), "finite-looking", "finite-looking");
        assert!(no.agree);
    }

    #[test]
    fn json_round_trip_with_infinity() {
        let mut r = Report::new("t", Value::Null);
        r.quantity("a", 1.5, &["tail"]);
        r.quantity("b", f64::INFINITY, &[]);
        let back: Report = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_csv().unwrap().contains("quantity,a,1.5e0,tail"));
    }
}
