//! Mixed-integer linear models in the LP text format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpSense {
    Le,
    Ge,
    Eq,
}

impl LpSense {
    fn symbol(self) -> &'static str {
        match self {
            LpSense::Le => "<=",
            LpSense::Ge => ">=",
            LpSense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: LpSense,
    pub rhs: f64,
}

/// A minimization model. Continuous variables default to `[0, inf)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpModel {
    pub objective: Vec<(String, f64)>,
    pub rows: Vec<LpRow>,
    /// `(variable, lower, upper)`; `None` keeps the default.
    pub bounds: Vec<(String, Option<f64>, Option<f64>)>,
    pub binaries: Vec<String>,
}

impl LpModel {
    pub fn add_row(&mut self, name: impl Into<String>, terms: Vec<(String, f64)>, sense: LpSense, rhs: f64) {
        self.rows.push(LpRow { name: name.into(), terms, sense, rhs });
    }

    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        out.push_str("Minimize\n obj:");
        write_terms(&mut out, &self.objective);
        out.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(out, " {}:", r.name);
            write_terms(&mut out, &r.terms);
            let _ = writeln!(out, " {} {}", r.sense.symbol(), num(r.rhs));
        }
        if !self.bounds.is_empty() {
            out.push_str("Bounds\n");
            for (v, lo, hi) in &self.bounds {
                match (lo, hi) {
                    (Some(l), Some(h)) => {
                        let _ = writeln!(out, " {} <= {v} <= {}", num(*l), num(*h));
                    }
                    (Some(l), None) => {
                        let _ = writeln!(out, " {v} >= {}", num(*l));
                    }
                    (None, Some(h)) => {
                        let _ = writeln!(out, " {v} <= {}", num(*h));
                    }
                    (None, None) => {
                        let _ = writeln!(out, " {v} free");
                    }
                }
            }
        }
        if !self.binaries.is_empty() {
            out.push_str("Binary\n");
            for chunk in self.binaries.chunks(8) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_lp_string())?;
        Ok(())
    }
}

/// Shortest round-tripping decimal.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn write_terms(out: &mut String, terms: &[(String, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (i, (v, c)) in terms.iter().enumerate() {
        let sign = if *c < 0.0 { "-" } else if i == 0 { "" } else { "+" };
        let mag = c.abs();
        if i > 0 || *c < 0.0 {
            let _ = write!(out, " {sign}");
        }
        if mag == 1.0 {
            let _ = write!(out, " {v}");
        } else {
            let _ = write!(out, " {} {v}", num(mag));
        }
    }
}
