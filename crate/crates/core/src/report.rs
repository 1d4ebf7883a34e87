//! Structured records of verified inequalities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Both sides of one verified inequality plus the deficit and the tolerance
/// it was checked against. `deficit = lhs - rhs` exactly as computed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub op: String,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(default)]
    pub meta: ReportMeta,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl ComparisonReport {
    /// Record an inequality of the form lhs ≥ rhs − tol·scale.
    pub fn geq(op: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let deficit = lhs - rhs;
        let pass = deficit >= -tol * rhs.abs().max(1.0);
        Self {
            op: op.into(),
            lhs,
            rhs,
            deficit,
            tol,
            pass,
            meta: ReportMeta::default(),
        }
    }

    /// Record an inequality of the form lhs ≤ rhs + tol·scale.
    pub fn leq(op: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let deficit = lhs - rhs;
        let pass = deficit <= tol * rhs.abs().max(1.0);
        Self {
            op: op.into(),
            lhs,
            rhs,
            deficit,
            tol,
            pass,
            meta: ReportMeta::default(),
        }
    }

    /// Record a two-sided check |lhs − rhs| ≤ tol·scale.
    pub fn close(op: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let deficit = lhs - rhs;
        let pass = deficit.abs() <= tol * rhs.abs().max(1.0);
        Self {
            op: op.into(),
            lhs,
            rhs,
            deficit,
            tol,
            pass,
            meta: ReportMeta::default(),
        }
    }

    pub fn with_density(mut self, id: &str) -> Self {
        self.meta.density = Some(id.into());
        self
    }

    pub fn with_grid(mut self, grid: &str) -> Self {
        self.meta.grid = Some(grid.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.meta.seed = Some(seed);
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.meta.extra.insert(key.into(), value);
        self
    }
}
