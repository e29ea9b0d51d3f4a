//! The uniform result type for every pointwise predicate in the crate.
//!
//! A [`CheckReport`] records what was checked, where, the named residuals
//! with the tolerance each was held to, and both sides of any
//! formula-versus-direct comparison that produced a residual. Verdicts are
//! three-valued: a check that cannot run at a point (degenerate transform,
//! signature flip, domain hole) is a skip with a reason, never a silent
//! drop and never a counterfeit pass.

use crate::SupportElement;
use serde::Serialize;

/// One named residual, with the tolerance it is judged against.
#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Residual {
    /// Whether this residual is within its tolerance. Written so that a
    /// NaN residual counts as out of tolerance.
    pub fn within(&self) -> bool {
        self.value.abs() <= self.tolerance
    }
}

/// Both sides of a formula-versus-direct comparison, kept for forensics.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub name: String,
    /// Value from the closed-form transformation rule.
    pub formula: f64,
    /// Value from direct evaluation of the transformed object.
    pub direct: f64,
}

/// Outcome of one check at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Skip(String),
}

/// Result of one named predicate evaluated at one support element.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    /// Name of the predicate.
    pub check: String,
    /// Where it was evaluated.
    pub point: SupportElement,
    /// Residuals in the order they were recorded.
    pub residuals: Vec<Residual>,
    /// Formula and direct values behind comparison residuals.
    pub provenance: Vec<Comparison>,
    /// Pass, fail, or skip with reason.
    pub verdict: Verdict,
    /// Free-form diagnostics (for example a one-sided violation of a
    /// biconditional, which is worse than an ordinary out-of-tolerance
    /// residual).
    pub notes: Vec<String>,
}

/// Deviation of `formula` from `direct`, relative to the larger magnitude
/// of the two but never to less than `floor`. The floor encodes the
/// natural unit of the compared object so that comparisons of
/// near-cancelling values stay meaningful.
pub fn rel_dev(formula: f64, direct: f64, floor: f64) -> f64 {
    if !formula.is_finite() || !direct.is_finite() {
        return f64::INFINITY;
    }
    let scale = formula.abs().max(direct.abs()).max(floor);
    (formula - direct).abs() / scale
}

impl CheckReport {
    pub fn new(check: &str, point: SupportElement) -> CheckReport {
        CheckReport {
            check: check.to_string(),
            point,
            residuals: Vec::new(),
            provenance: Vec::new(),
            verdict: Verdict::Pass,
            notes: Vec::new(),
        }
    }

    /// Record a named residual to be judged against `tolerance`.
    pub fn residual(&mut self, name: &str, value: f64, tolerance: f64) {
        self.residuals.push(Residual {
            name: name.to_string(),
            value,
            tolerance,
        });
    }

    /// Record a formula-versus-direct comparison: keeps both values and
    /// derives a relative residual from them.
    pub fn compare(&mut self, name: &str, formula: f64, direct: f64, floor: f64, tolerance: f64) {
        self.provenance.push(Comparison {
            name: name.to_string(),
            formula,
            direct,
        });
        self.residual(name, rel_dev(formula, direct, floor), tolerance);
    }

    /// Record a value pair for forensics without deriving a residual.
    /// Classification quantities go here: they inform the reader but must
    /// not flip the verdict.
    pub fn info(&mut self, name: &str, formula: f64, direct: f64) {
        self.provenance.push(Comparison {
            name: name.to_string(),
            formula,
            direct,
        });
    }

    /// Attach a diagnostic note.
    pub fn note(&mut self, message: impl Into<String>) {
        self.notes.push(message.into());
    }

    /// Mark the whole check as skipped, keeping whatever was recorded.
    pub fn skip(mut self, reason: impl Into<String>) -> CheckReport {
        self.verdict = Verdict::Skip(reason.into());
        self
    }

    /// Force a failure regardless of residuals (used for logical
    /// violations that have no single residual).
    pub fn force_fail(&mut self, message: impl Into<String>) {
        self.notes.push(message.into());
        self.verdict = Verdict::Fail;
    }

    /// Settle the verdict: fail if any residual is out of tolerance,
    /// leaving forced failures and skips untouched.
    pub fn finalize(mut self) -> CheckReport {
        if self.verdict == Verdict::Pass && !self.residuals.iter().all(Residual::within) {
            self.verdict = Verdict::Fail;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn skipped(&self) -> bool {
        matches!(self.verdict, Verdict::Skip(_))
    }

    /// Largest recorded residual, for summaries.
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.value.abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_origin() -> SupportElement {
        SupportElement::new([0.0, 0.0], [1.0, 0.0])
    }

    #[test]
    fn finalize_flags_out_of_tolerance() {
        let mut rep = CheckReport::new("demo", at_origin());
        rep.residual("small", 1e-12, 1e-10);
        rep.residual("large", 1e-3, 1e-10);
        let rep = rep.finalize();
        assert!(rep.failed());
    }

    #[test]
    fn nan_residual_fails() {
        let mut rep = CheckReport::new("demo", at_origin());
        rep.residual("nan", f64::NAN, 1e-10);
        assert!(rep.finalize().failed());
    }

    #[test]
    fn skip_survives_finalize() {
        let rep = CheckReport::new("demo", at_origin())
            .skip("degenerate transform")
            .finalize();
        assert!(rep.skipped() && !rep.failed());
    }

    #[test]
    fn relative_deviation_uses_floor() {
        // Two tiny values that differ wildly in relative terms are still
        // close on the scale set by the floor.
        assert!(rel_dev(1e-18, -1e-18, 1.0) < 1e-10);
        assert!(rel_dev(1.0, 2.0, 1.0) > 0.4);
    }
}
