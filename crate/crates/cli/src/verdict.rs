//! Regular/chaotic classification of a fitted exponent.

use serde::{Deserialize, Serialize};

/// Dynamical verdict for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Exponent indistinguishable from zero.
    Regular,
    /// Exponent positive beyond its error bar.
    Chaotic,
    /// Significantly negative and not small: neither label applies.
    Indeterminate,
    /// The run or its analysis did not complete.
    Failed,
}

impl Verdict {
    /// Lower-case tag.
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Regular => "regular",
            Verdict::Chaotic => "chaotic",
            Verdict::Indeterminate => "indeterminate",
            Verdict::Failed => "failed",
        }
    }
}

/// Thresholds mapping `(λ, SE)` to a [`Verdict`]; both quantities in the same
/// rate unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRule {
    /// `|λ|` below this is regular.
    pub regular_threshold: f64,
    /// `|λ|` within this many standard errors of zero is regular.
    pub significance: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self {
            regular_threshold: 0.02,
            significance: 3.0,
        }
    }
}

impl VerdictRule {
    /// Regular when the exponent is either small in absolute terms or not
    /// significant; chaotic when it is positive beyond `significance` errors
    /// and not small.
    ///
    /// Either condition suffices for "regular": a smooth, slowly rising
    /// divergence curve can have a tiny fit error, so demanding both would
    /// label a pure tone chaotic.
    pub fn classify(&self, lambda: f64, se: f64) -> Verdict {
        if !(lambda.is_finite() && se.is_finite()) {
            return Verdict::Failed;
        }
        if lambda.abs() < self.regular_threshold || lambda.abs() <= self.significance * se {
            Verdict::Regular
        } else if lambda > self.significance * se {
            Verdict::Chaotic
        } else {
            Verdict::Indeterminate
        }
    }
}
