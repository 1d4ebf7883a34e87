//! Exact one-dimensional geometry.
//!
//! Interval sets keep exact real endpoints, so the 1-D theory is tested
//! sharply: the only numerical error in a measure or a symmetrization comes
//! from the quadrature behind Ψ. The symmetrization of M is the centered
//! interval (−a, a) with 2Ψ(a) = μ₁(M); the isoperimetric inequality
//! `perimeter ≥ 2 J(mass/2)` holds exactly when ψ is log-convex.

use serde::{Deserialize, Serialize};

use crate::density::Density1D;
use crate::error::{Error, Result};
use crate::report::ComparisonReport;

/// Finite disjoint union of bounded open intervals, sorted, with pairwise
/// disjoint closures (touching intervals are merged on construction).
///
/// Serializes as a JSON array of [a, b] pairs; deserialization re-validates
/// and re-merges.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IntervalSet {
    ivs: Vec<(f64, f64)>,
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D>(de: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let pairs = Vec::<(f64, f64)>::deserialize(de)?;
        IntervalSet::new(pairs).map_err(serde::de::Error::custom)
    }
}

impl IntervalSet {
    /// Build from endpoint pairs; sorts and merges overlapping or touching
    /// components. Rejects non-finite or inverted endpoints.
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &pairs {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Domain(format!("interval endpoints must be finite: ({a}, {b})")));
            }
            if !(a < b) {
                return Err(Error::Domain(format!("interval needs a < b: ({a}, {b})")));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { ivs: merged })
    }

    pub fn empty() -> Self {
        Self { ivs: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.ivs
    }

    /// The parallel set M_r = M + (−r, r), re-merged.
    pub fn dilate(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Parameter(format!("dilation radius must be positive, got {r}")));
        }
        Self::new(self.ivs.iter().map(|&(a, b)| (a - r, b + r)).collect())
    }

    /// Whether every component lies inside a component of `other`.
    pub fn subset_of(&self, other: &Self) -> bool {
        self.ivs.iter().all(|&(a, b)| {
            other
                .ivs
                .iter()
                .any(|&(oa, ob)| oa <= a && b <= ob)
        })
    }

    /// Hausdorff distance between the closures of two nonempty sets.
    pub fn hausdorff_distance(&self, other: &Self) -> f64 {
        fn point_dist(x: f64, s: &IntervalSet) -> f64 {
            s.ivs
                .iter()
                .map(|&(a, b)| {
                    if x < a {
                        a - x
                    } else if x > b {
                        x - b
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min)
        }
        // sup_{x in A} d(x, B) is attained at endpoints of A or at gap
        // midpoints of B that fall inside A
        fn one_sided(a: &IntervalSet, b: &IntervalSet) -> f64 {
            let mut cands: Vec<f64> = Vec::new();
            for &(x, y) in &a.ivs {
                cands.push(x);
                cands.push(y);
            }
            for w in b.ivs.windows(2) {
                let mid = 0.5 * (w[0].1 + w[1].0);
                if a.ivs.iter().any(|&(x, y)| x <= mid && mid <= y) {
                    cands.push(mid);
                }
            }
            cands
                .into_iter()
                .map(|x| point_dist(x, b))
                .fold(0.0, f64::max)
        }
        if self.is_empty() || other.is_empty() {
            return if self.is_empty() && other.is_empty() {
                0.0
            } else {
                f64::INFINITY
            };
        }
        one_sided(self, other).max(one_sided(other, self))
    }
}

/// μ₁(M) = Σᵢ Ψ(bᵢ) − Ψ(aᵢ).
pub fn measure_1d(d: &Density1D, s: &IntervalSet) -> Result<f64> {
    let mut total = 0.0;
    for &(a, b) in s.components() {
        total += d.psi_primitive(b)? - d.psi_primitive(a)?;
    }
    Ok(total)
}

/// P_{μ₁}(M) = Σᵢ ψ(aᵢ) + ψ(bᵢ): the weighted count of boundary points.
pub fn perimeter_1d(d: &Density1D, s: &IntervalSet) -> f64 {
    s.components()
        .iter()
        .map(|&(a, b)| d.psi(a) + d.psi(b))
        .sum()
}

/// M* = (−a, a) with Ψ(a) = μ₁(M)/2. The empty set is its own
/// symmetrization.
pub fn symmetrize_1d(d: &Density1D, s: &IntervalSet) -> Result<IntervalSet> {
    if s.is_empty() {
        return Ok(IntervalSet::empty());
    }
    let m = measure_1d(d, s)?;
    let a = d.psi_primitive_inv(0.5 * m)?;
    if a == 0.0 {
        return Ok(IntervalSet::empty());
    }
    IntervalSet::new(vec![(-a, a)])
}

/// Difference quotient (μ₁(M_r) − μ₁(M)) / r of the Minkowski content,
/// with the parallel set computed by exact endpoint dilation and re-merging.
pub fn minkowski_content_1d(d: &Density1D, s: &IntervalSet, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("Minkowski quotient needs r > 0, got {r}")));
    }
    let dilated = s.dilate(r)?;
    Ok((measure_1d(d, &dilated)? - measure_1d(d, s)?) / r)
}

/// Isoperimetric comparison: lhs = P_{μ₁}(M), rhs = I₁(μ₁(M)) = 2 J(m/2).
///
/// Requires a log-convex ψ — that is exactly the condition under which the
/// inequality holds — and fails the precondition otherwise.
pub fn verify_iso_1d(d: &Density1D, s: &IntervalSet) -> Result<ComparisonReport> {
    if !d.is_log_convex() {
        return Err(Error::Precondition(
            "verify_iso_1d: density failed the log-convexity check; the inequality \
             P(M) >= 2 J(m/2) is only guaranteed for log-convex psi"
                .into(),
        ));
    }
    let lhs = perimeter_1d(d, s);
    let m = measure_1d(d, s)?;
    let rhs = d.one_d_profile(m)?;
    Ok(ComparisonReport::geq("iso1d", lhs, rhs, 1e-9).with_density(&d.id()))
}
