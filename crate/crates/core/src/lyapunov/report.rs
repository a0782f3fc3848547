//! Diagnostics CSV and plain-text verdict summaries.
//!
//! CSV columns: `k,xi,delta,epsilon,descent_lhs,descent_rhs,slack`. Cyclic
//! series write `delta` as a `;`-separated per-block list; the descent
//! columns are empty on the last row.

use std::fmt::{self, Write as _};

use super::checks::DescentRow;
use super::series::LyapunovSeries;

pub const DIAGNOSTICS_HEADER: &str = "k,xi,delta,epsilon,descent_lhs,descent_rhs,slack";

pub fn diagnostics_csv(series: &LyapunovSeries, descent: &[DescentRow]) -> String {
    let mut out = String::with_capacity(80 * (series.len() + 1));
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for (idx, p) in series.points.iter().enumerate() {
        let delta = p
            .delta
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let _ = write!(out, "{},{},{},{}", p.k, p.xi, delta, p.epsilon);
        match descent.get(idx) {
            Some(d) => {
                let _ = writeln!(out, ",{},{},{}", d.lhs, d.rhs, d.slack);
            }
            None => out.push_str(",,,\n"),
        }
    }
    out
}

/// One line of a summary: `LABEL: PASS|FAIL (empirical=…, bound=…)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub label: String,
    pub pass: bool,
    pub empirical: f64,
    pub bound: f64,
}

impl Verdict {
    pub fn new(label: impl Into<String>, pass: bool, empirical: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            pass,
            empirical,
            bound,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (empirical={:e}, bound={:e})",
            self.label,
            if self.pass { "PASS" } else { "FAIL" },
            self.empirical,
            self.bound
        )
    }
}

pub fn summary_text(verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    for v in verdicts {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Parses lines written by [`summary_text`]. Blank lines and `#` comments
/// are skipped.
pub fn parse_summary(text: &str) -> Option<Vec<Verdict>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let (label, rest) = line.split_once(": ")?;
            let (status, nums) = rest.split_once(" (empirical=")?;
            let (emp, bound) = nums.strip_suffix(')')?.split_once(", bound=")?;
            Some(Verdict {
                label: label.to_string(),
                pass: match status {
                    "PASS" => true,
                    "FAIL" => false,
                    _ => return None,
                },
                empirical: emp.parse().ok()?,
                bound: bound.parse().ok()?,
            })
        })
        .collect()
}
