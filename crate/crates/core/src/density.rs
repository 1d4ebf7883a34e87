//! Weight functions and their induced transforms.
//!
//! * [`Density1D`] — even positive ψ on the line with the primitive
//!   Ψ(x) = ∫₀ˣ ψ, its inverse, and the isoperimetric function
//!   J(y) = ψ(Ψ⁻¹(y)). J is convex exactly when ψ is log-convex, which is
//!   the condition under which centered intervals minimize the weighted
//!   perimeter.
//! * [`RadialDensity`] — exp(c|x|²) in ℝⁿ with the sphere weight
//!   h(r) = nωₙ e^{cr²} r^{n-1}, the radial mass H(r) = ∫₀ʳ h, and the
//!   isoperimetric profile I(m) = h(H⁻¹(m)).
//! * [`SingularRadialDensity`] — |x|^{1-n} e^{a(|x|)} with convex a.
//! * [`ProductDensity`] — ψ(x₁)ρ(x′).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::MonotonePrimitive;

/// Default relative quadrature tolerance. Transforms feed inversions, so
/// upstream accuracy must dominate the 1e-8 tolerances asserted downstream.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

const CACHE_STEP: f64 = 0.0625;
const CACHE_VALUE_CAP: f64 = 1e290;

fn cache_x_max(c: f64) -> f64 {
    if c > 0.0 {
        ((705.0 / c).sqrt() + 1.0).min(64.0)
    } else {
        64.0
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}

#[derive(Clone, Debug)]
enum Kind1D {
    /// ψ(t) = exp(c t²), c ≥ 0. c = 0 is the Lebesgue control case.
    Gauss { c: f64 },
    /// Even ψ given by samples on t ≥ 0, piecewise linear in log ψ.
    /// Beyond the last sample the final slope is continued; the measure is
    /// infinite exactly when that slope is ≥ 0.
    Tabulated { ts: Vec<f64>, log_psi: Vec<f64> },
}

/// Even positive weight on the line together with its transforms.
#[derive(Clone, Debug)]
pub struct Density1D {
    kind: Kind1D,
    quad_tol: f64,
    cache: MonotonePrimitive,
}

/// Result of the sampled midpoint-convexity check of log ψ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub convex: bool,
    /// max over sampled triples of log ψ(mid) − (log ψ(a)+log ψ(b))/2.
    pub worst_violation: f64,
}

impl Density1D {
    /// ψ(t) = exp(c t²) with c ≥ 0.
    pub fn gauss(c: f64, quad_tol: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Parameter(format!(
                "gaussian-convex density needs c >= 0, got {c}"
            )));
        }
        let kind = Kind1D::Gauss { c };
        let cache = MonotonePrimitive::build(
            |t| kind_psi(&kind, t),
            CACHE_STEP,
            cache_x_max(c),
            CACHE_VALUE_CAP,
            quad_tol,
        )?;
        Ok(Self {
            kind,
            quad_tol,
            cache,
        })
    }

    /// ψ ≡ 1 (Lebesgue measure on the line).
    pub fn lebesgue() -> Self {
        Self::gauss(0.0, DEFAULT_QUAD_TOL).expect("c = 0 is always valid")
    }

    /// Even density from samples (t_i, ψ(t_i)) on t ≥ 0 with t_0 = 0,
    /// interpolated piecewise-linearly in log ψ. Interpolation in the log
    /// preserves log-convexity of convex sample sets exactly.
    pub fn tabulated(ts: &[f64], psi: &[f64], quad_tol: f64) -> Result<Self> {
        if ts.len() != psi.len() || ts.len() < 2 {
            return Err(Error::Parameter(
                "tabulated density needs at least two (t, psi) samples".into(),
            ));
        }
        if ts[0] != 0.0 {
            return Err(Error::Parameter("tabulated samples must start at t = 0".into()));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("tabulated abscissae must be strictly increasing".into()));
        }
        if psi.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Parameter("tabulated density values must be positive".into()));
        }
        let kind = Kind1D::Tabulated {
            ts: ts.to_vec(),
            log_psi: psi.iter().map(|p| p.ln()).collect(),
        };
        let x_max = (2.0 * ts[ts.len() - 1]).max(32.0);
        let cache = MonotonePrimitive::build(
            |t| kind_psi(&kind, t),
            CACHE_STEP,
            x_max,
            CACHE_VALUE_CAP,
            quad_tol,
        )?;
        Ok(Self {
            kind,
            quad_tol,
            cache,
        })
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// ψ(t); even in t.
    pub fn psi(&self, t: f64) -> f64 {
        kind_psi(&self.kind, t)
    }

    pub fn log_psi(&self, t: f64) -> f64 {
        kind_log_psi(&self.kind, t)
    }

    /// Exact structural log-convexity: c ≥ 0 for the gaussian kind; for
    /// tabulated kinds the slopes of the piecewise-linear log must be
    /// nondecreasing and start nonnegative (even reflection at 0).
    pub fn is_log_convex(&self) -> bool {
        match &self.kind {
            Kind1D::Gauss { c } => *c >= 0.0,
            Kind1D::Tabulated { ts, log_psi } => {
                let slopes: Vec<f64> = ts
                    .windows(2)
                    .zip(log_psi.windows(2))
                    .map(|(t, l)| (l[1] - l[0]) / (t[1] - t[0]))
                    .collect();
                slopes[0] >= 0.0 && slopes.windows(2).all(|w| w[1] >= w[0])
            }
        }
    }

    /// Whether ∫ℝ ψ = +∞ (always true for the gaussian kind; for tabulated
    /// kinds the continued tail must be non-decaying).
    pub fn has_infinite_mass(&self) -> bool {
        match &self.kind {
            Kind1D::Gauss { .. } => true,
            Kind1D::Tabulated { ts, log_psi } => {
                let k = ts.len() - 1;
                (log_psi[k] - log_psi[k - 1]) / (ts[k] - ts[k - 1]) >= 0.0
            }
        }
    }

    /// Ψ(x) = ∫₀ˣ ψ; strictly increasing and odd.
    pub fn psi_primitive(&self, x: f64) -> Result<f64> {
        let v = self.cache.eval(|t| kind_psi(&self.kind, t), x.abs())?;
        Ok(if x < 0.0 { -v } else { v })
    }

    /// Ψ⁻¹(y); monotone and odd. Fails with a range error when |y| exceeds
    /// the representable mass of the half-line.
    pub fn psi_primitive_inv(&self, y: f64) -> Result<f64> {
        let v = self.cache.invert(|t| kind_psi(&self.kind, t), y.abs())?;
        Ok(if y < 0.0 { -v } else { v })
    }

    /// J(y) = ψ(Ψ⁻¹(y)); even and positive, convex iff ψ is log-convex.
    pub fn iso_fn_j(&self, y: f64) -> Result<f64> {
        Ok(self.psi(self.psi_primitive_inv(y.abs())?))
    }

    /// One-dimensional isoperimetric profile I₁(m) = 2 J(m/2): the perimeter
    /// of the centered interval (−a, a) with 2Ψ(a) = m.
    pub fn one_d_profile(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::Domain(format!("profile needs mass m >= 0, got {m}")));
        }
        Ok(2.0 * self.iso_fn_j(0.5 * m)?)
    }

    /// Midpoint-convexity of log ψ on a uniform symmetric sample grid.
    /// Checks every sampled triple (aligned pair + midpoint) against `tol`.
    pub fn log_convexity_check(&self, half_range: f64, samples: usize, tol: f64) -> ConvexityReport {
        let count = samples.max(3) | 1; // odd so 0 is a sample
        let h = 2.0 * half_range / (count - 1) as f64;
        let logs: Vec<f64> = (0..count)
            .map(|i| self.log_psi(-half_range + i as f64 * h))
            .collect();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..count {
            for j in (i + 2)..count {
                if (j - i) % 2 == 0 {
                    let mid = (i + j) / 2;
                    let viol = logs[mid] - 0.5 * (logs[i] + logs[j]);
                    worst = worst.max(viol);
                }
            }
        }
        ConvexityReport {
            convex: worst <= tol,
            worst_violation: worst,
        }
    }

    /// Short identifier used in file headers and reports.
    pub fn id(&self) -> String {
        match &self.kind {
            Kind1D::Gauss { c } => format!("gauss1d;c={c}"),
            Kind1D::Tabulated { .. } => "tabulated1d".into(),
        }
    }
}

fn kind_psi(kind: &Kind1D, t: f64) -> f64 {
    kind_log_psi(kind, t).exp()
}

fn kind_log_psi(kind: &Kind1D, t: f64) -> f64 {
    let t = t.abs();
    match kind {
        Kind1D::Gauss { c } => c * t * t,
        Kind1D::Tabulated { ts, log_psi } => {
            let k = ts.len() - 1;
            if t >= ts[k] {
                let slope = (log_psi[k] - log_psi[k - 1]) / (ts[k] - ts[k - 1]);
                log_psi[k] + slope * (t - ts[k])
            } else {
                let idx = ts.partition_point(|&s| s <= t).clamp(1, k);
                let w = (t - ts[idx - 1]) / (ts[idx] - ts[idx - 1]);
                log_psi[idx - 1] * (1.0 - w) + log_psi[idx] * w
            }
        }
    }
}

/// exp(c|x|²) in ℝⁿ, n ≥ 2, with its radial transforms.
#[derive(Clone, Debug)]
pub struct RadialDensity {
    n: usize,
    c: f64,
    omega_n: f64,
    quad_tol: f64,
    cache: MonotonePrimitive,
}

impl RadialDensity {
    pub fn new(n: usize, c: f64, quad_tol: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("radial density needs n >= 2, got {n}")));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Parameter(format!("radial density needs c >= 0, got {c}")));
        }
        let omega_n = unit_ball_volume(n);
        let integrand = move |r: f64| n as f64 * omega_n * (c * r * r).exp() * r.powi(n as i32 - 1);
        let cache = MonotonePrimitive::build(
            integrand,
            CACHE_STEP,
            cache_x_max(c),
            CACHE_VALUE_CAP,
            quad_tol,
        )?;
        Ok(Self {
            n,
            c,
            omega_n,
            quad_tol,
            cache,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// φ(r) = exp(c r²) ≥ 1.
    pub fn phi(&self, r: f64) -> f64 {
        (self.c * r * r).exp()
    }

    /// Weight at a point of ℝⁿ.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (self.c * r2).exp()
    }

    /// Sphere weight h(r) = nωₙ e^{cr²} r^{n-1}: the μ-perimeter of B_r.
    pub fn sphere_weight(&self, r: f64) -> f64 {
        self.n as f64 * self.omega_n * self.phi(r) * r.powi(self.n as i32 - 1)
    }

    /// Radial mass H(r) = ∫₀ʳ h(t) dt = μ(B_r); strictly increasing, H(0)=0.
    pub fn radial_mass_h(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("radial mass needs r >= 0, got {r}")));
        }
        let (n, omega_n, c) = (self.n as f64, self.omega_n, self.c);
        self.cache
            .eval(move |t| n * omega_n * (c * t * t).exp() * t.powi(self.n as i32 - 1), r)
    }

    /// H⁻¹(m) for m ≥ 0.
    pub fn radial_mass_h_inv(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::Domain(format!("inverse mass needs m >= 0, got {m}")));
        }
        let (n, omega_n, c) = (self.n as f64, self.omega_n, self.c);
        self.cache
            .invert(move |t| n * omega_n * (c * t * t).exp() * t.powi(self.n as i32 - 1), m)
    }

    /// Isoperimetric profile I(m) = h(H⁻¹(m)): the μ-perimeter of the
    /// centered ball of μ-measure m.
    pub fn iso_profile_i(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::Domain(format!("profile needs mass m >= 0, got {m}")));
        }
        Ok(self.sphere_weight(self.radial_mass_h_inv(m)?))
    }

    /// The axis factor of exp(c|x|²) = exp(c x₁²) · exp(c|x′|²).
    pub fn psi_factor(&self) -> Result<Density1D> {
        Density1D::gauss(self.c, self.quad_tol)
    }

    pub fn id(&self) -> String {
        format!("radial;n={};c={}", self.n, self.c)
    }
}

/// Convex profile a(t) on [0, ∞) for the singular radial density.
#[derive(Clone, Debug)]
pub enum ConvexProfile {
    /// a(t) = c0 + c1 t.
    Affine { c0: f64, c1: f64 },
    /// a(t) = c0 + c1 t + c2 t², c2 ≥ 0.
    Quadratic { c0: f64, c1: f64, c2: f64 },
    /// Piecewise-linear samples; slopes must be nondecreasing.
    Tabulated { ts: Vec<f64>, vals: Vec<f64> },
}

impl ConvexProfile {
    fn validate(&self) -> Result<()> {
        match self {
            ConvexProfile::Affine { .. } => Ok(()),
            ConvexProfile::Quadratic { c2, .. } => {
                if *c2 >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "quadratic profile needs c2 >= 0 for convexity, got {c2}"
                    )))
                }
            }
            ConvexProfile::Tabulated { ts, vals } => {
                if ts.len() != vals.len() || ts.len() < 2 || ts[0] != 0.0 {
                    return Err(Error::Parameter(
                        "tabulated profile needs samples starting at t = 0".into(),
                    ));
                }
                if ts.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Parameter("profile abscissae must increase".into()));
                }
                let slopes: Vec<f64> = ts
                    .windows(2)
                    .zip(vals.windows(2))
                    .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
                    .collect();
                let scale = slopes.iter().fold(1.0_f64, |m, s| m.max(s.abs()));
                if slopes.windows(2).any(|w| w[1] < w[0] - 1e-9 * scale) {
                    return Err(Error::Parameter(
                        "tabulated profile violates midpoint convexity".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            ConvexProfile::Affine { c0, c1 } => c0 + c1 * t,
            ConvexProfile::Quadratic { c0, c1, c2 } => c0 + c1 * t + c2 * t * t,
            ConvexProfile::Tabulated { ts, vals } => {
                let k = ts.len() - 1;
                if t >= ts[k] {
                    let slope = (vals[k] - vals[k - 1]) / (ts[k] - ts[k - 1]);
                    vals[k] + slope * (t - ts[k])
                } else {
                    let idx = ts.partition_point(|&s| s <= t).clamp(1, k);
                    let w = (t - ts[idx - 1]) / (ts[idx] - ts[idx - 1]);
                    vals[idx - 1] * (1.0 - w) + vals[idx] * w
                }
            }
        }
    }

    fn id(&self) -> String {
        match self {
            ConvexProfile::Affine { c0, c1 } => format!("affine:{c0}:{c1}"),
            ConvexProfile::Quadratic { c0, c1, c2 } => format!("quad:{c0}:{c1}:{c2}"),
            ConvexProfile::Tabulated { .. } => "tab".into(),
        }
    }
}

/// |x|^{1-n} exp(a(|x|)) with convex a; singular at the origin but with
/// integrable mass: μ(B_R) = nωₙ ∫₀ᴿ e^{a}.
#[derive(Clone, Debug)]
pub struct SingularRadialDensity {
    n: usize,
    profile: ConvexProfile,
    omega_n: f64,
    quad_tol: f64,
    cache: MonotonePrimitive,
}

impl SingularRadialDensity {
    pub fn new(n: usize, profile: ConvexProfile, quad_tol: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!(
                "singular radial density needs n >= 2, got {n}"
            )));
        }
        profile.validate()?;
        let omega_n = unit_ball_volume(n);
        let p = profile.clone();
        let integrand = move |t: f64| n as f64 * omega_n * p.eval(t).exp();
        let cache = MonotonePrimitive::build(integrand, CACHE_STEP, 64.0, CACHE_VALUE_CAP, quad_tol)?;
        Ok(Self {
            n,
            profile,
            omega_n,
            quad_tol,
            cache,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn profile(&self) -> &ConvexProfile {
        &self.profile
    }

    /// Density value |x|^{1-n} e^{a(|x|)}; positive away from the origin.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.powi(1 - self.n as i32) * self.profile.eval(r).exp()
    }

    /// μ(B_R) = nωₙ ∫₀ᴿ e^{a(t)} dt.
    pub fn radial_mass(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("radial mass needs r >= 0, got {r}")));
        }
        let (n, omega_n) = (self.n as f64, self.omega_n);
        let p = self.profile.clone();
        self.cache.eval(move |t| n * omega_n * p.eval(t).exp(), r)
    }

    pub fn radial_mass_inv(&self, m: f64) -> Result<f64> {
        if !(m >= 0.0) {
            return Err(Error::Domain(format!("inverse mass needs m >= 0, got {m}")));
        }
        let (n, omega_n) = (self.n as f64, self.omega_n);
        let p = self.profile.clone();
        self.cache.invert(move |t| n * omega_n * p.eval(t).exp(), m)
    }

    /// Minkowski content of the centered ball: μ⁺(B_R) = nωₙ e^{a(R)}.
    pub fn mu_plus_ball(&self, r: f64) -> f64 {
        self.n as f64 * self.omega_n * self.profile.eval(r).exp()
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn id(&self) -> String {
        format!("singular;n={};a={}", self.n, self.profile.id())
    }
}

/// Weight on the x′ = (x₂, ..., xₙ) coordinates of a product density.
#[derive(Clone, Debug)]
pub enum RhoWeight {
    Constant(f64),
    /// ρ(x′) = exp(c|x′|²).
    Gauss { c: f64 },
    /// Radial samples (|x′|, ρ), piecewise linear in log ρ.
    TabulatedRadial { rs: Vec<f64>, log_rho: Vec<f64> },
}

impl RhoWeight {
    fn validate(&self) -> Result<()> {
        match self {
            RhoWeight::Constant(v) => {
                if *v > 0.0 && v.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("rho constant must be positive, got {v}")))
                }
            }
            RhoWeight::Gauss { c } => {
                if *c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("rho gauss factor needs c >= 0, got {c}")))
                }
            }
            RhoWeight::TabulatedRadial { rs, log_rho } => {
                if rs.len() != log_rho.len() || rs.len() < 2 || rs[0] != 0.0 {
                    return Err(Error::Parameter(
                        "tabulated rho needs samples starting at r = 0".into(),
                    ));
                }
                if rs.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Parameter("rho abscissae must increase".into()));
                }
                Ok(())
            }
        }
    }

    /// ρ at the point x′.
    pub fn eval(&self, x_rest: &[f64]) -> f64 {
        match self {
            RhoWeight::Constant(v) => *v,
            RhoWeight::Gauss { c } => {
                let r2: f64 = x_rest.iter().map(|v| v * v).sum();
                (c * r2).exp()
            }
            RhoWeight::TabulatedRadial { rs, log_rho } => {
                let r = x_rest.iter().map(|v| v * v).sum::<f64>().sqrt();
                let k = rs.len() - 1;
                let log = if r >= rs[k] {
                    let slope = (log_rho[k] - log_rho[k - 1]) / (rs[k] - rs[k - 1]);
                    log_rho[k] + slope * (r - rs[k])
                } else {
                    let idx = rs.partition_point(|&s| s <= r).clamp(1, k);
                    let w = (r - rs[idx - 1]) / (rs[idx] - rs[idx - 1]);
                    log_rho[idx - 1] * (1.0 - w) + log_rho[idx] * w
                };
                log.exp()
            }
        }
    }

    fn id(&self) -> String {
        match self {
            RhoWeight::Constant(v) => format!("const:{v}"),
            RhoWeight::Gauss { c } => format!("gauss:{c}"),
            RhoWeight::TabulatedRadial { .. } => "tab".into(),
        }
    }
}

/// ψ(x₁) ρ(x′) dx on ℝⁿ.
#[derive(Clone, Debug)]
pub struct ProductDensity {
    n: usize,
    psi: Density1D,
    rho: RhoWeight,
}

impl ProductDensity {
    pub fn new(n: usize, psi: Density1D, rho: RhoWeight) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("product density needs n >= 2, got {n}")));
        }
        rho.validate()?;
        Ok(Self { n, psi, rho })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn psi(&self) -> &Density1D {
        &self.psi
    }

    pub fn rho(&self) -> &RhoWeight {
        &self.rho
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.psi.psi(x[0]) * self.rho.eval(&x[1..])
    }

    pub fn id(&self) -> String {
        let psi_id = match &self.psi.kind {
            Kind1D::Gauss { c } => format!("c={c}"),
            Kind1D::Tabulated { .. } => "psi=tab".into(),
        };
        format!("product;n={};{};rho={}", self.n, psi_id, self.rho.id())
    }
}

/// The axis factorization used by Steiner symmetrization: a 1-D density for
/// x₁ and a positive weight on the remaining coordinates.
pub struct AxisSplit {
    pub psi: Density1D,
    pub rho: RhoWeight,
}

/// Density handle carried by grid containers.
#[derive(Clone, Debug)]
pub enum GridDensity {
    Radial(RadialDensity),
    Product(ProductDensity),
    Singular(SingularRadialDensity),
}

impl GridDensity {
    pub fn dim(&self) -> usize {
        match self {
            GridDensity::Radial(d) => d.dim(),
            GridDensity::Product(d) => d.dim(),
            GridDensity::Singular(d) => d.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            GridDensity::Radial(d) => d.eval(x),
            GridDensity::Product(d) => d.eval(x),
            GridDensity::Singular(d) => d.eval(x),
        }
    }

    /// Factorization ψ(x₁)·ρ(x′) along the first axis, when it exists.
    /// exp(c|x|²) factors exactly; singular densities do not factor.
    pub fn axis_split(&self) -> Result<AxisSplit> {
        match self {
            GridDensity::Radial(d) => Ok(AxisSplit {
                psi: d.psi_factor()?,
                rho: RhoWeight::Gauss { c: d.c() },
            }),
            GridDensity::Product(d) => Ok(AxisSplit {
                psi: d.psi.clone(),
                rho: d.rho.clone(),
            }),
            GridDensity::Singular(_) => Err(Error::Precondition(
                "Steiner symmetrization needs a density with product structure along the axis; \
                 the singular radial density does not factor"
                    .into(),
            )),
        }
    }

    /// The radial density, required by Schwarz symmetrization.
    pub fn radial(&self) -> Result<&RadialDensity> {
        match self {
            GridDensity::Radial(d) => Ok(d),
            _ => Err(Error::Precondition(
                "this operation needs the radial density exp(c|x|^2)".into(),
            )),
        }
    }

    pub fn id(&self) -> String {
        match self {
            GridDensity::Radial(d) => d.id(),
            GridDensity::Product(d) => d.id(),
            GridDensity::Singular(d) => d.id(),
        }
    }

    /// Parse an identifier produced by [`GridDensity::id`]. Tabulated kinds
    /// do not round-trip through ids and yield a format error.
    pub fn parse_id(id: &str, quad_tol: f64) -> Result<GridDensity> {
        let parts: Vec<&str> = id.split(';').collect();
        let field = |key: &str| -> Result<&str> {
            parts
                .iter()
                .find_map(|p| p.strip_prefix(&format!("{key}=")))
                .ok_or_else(|| Error::Format(format!("density id `{id}` lacks field `{key}`")))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad number `{s}` in density id `{id}`")))
        };
        match parts.first().copied() {
            Some("radial") => {
                let n: usize = field("n")?
                    .parse()
                    .map_err(|_| Error::Format(format!("bad n in `{id}`")))?;
                let c = parse_f(field("c")?)?;
                Ok(GridDensity::Radial(RadialDensity::new(n, c, quad_tol)?))
            }
            Some("product") => {
                let n: usize = field("n")?
                    .parse()
                    .map_err(|_| Error::Format(format!("bad n in `{id}`")))?;
                let c = parse_f(field("c")?)?;
                let rho_str = field("rho")?;
                let rho = if let Some(v) = rho_str.strip_prefix("const:") {
                    RhoWeight::Constant(parse_f(v)?)
                } else if let Some(v) = rho_str.strip_prefix("gauss:") {
                    RhoWeight::Gauss { c: parse_f(v)? }
                } else {
                    return Err(Error::Format(format!("rho `{rho_str}` does not round-trip")));
                };
                Ok(GridDensity::Product(ProductDensity::new(
                    n,
                    Density1D::gauss(c, quad_tol)?,
                    rho,
                )?))
            }
            Some("singular") => {
                let n: usize = field("n")?
                    .parse()
                    .map_err(|_| Error::Format(format!("bad n in `{id}`")))?;
                let a_str = field("a")?;
                let nums: Vec<&str> = a_str.split(':').collect();
                let profile = match nums.first().copied() {
                    Some("affine") if nums.len() == 3 => ConvexProfile::Affine {
                        c0: parse_f(nums[1])?,
                        c1: parse_f(nums[2])?,
                    },
                    Some("quad") if nums.len() == 4 => ConvexProfile::Quadratic {
                        c0: parse_f(nums[1])?,
                        c1: parse_f(nums[2])?,
                        c2: parse_f(nums[3])?,
                    },
                    _ => {
                        return Err(Error::Format(format!(
                            "profile `{a_str}` does not round-trip"
                        )))
                    }
                };
                Ok(GridDensity::Singular(SingularRadialDensity::new(
                    n, profile, quad_tol,
                )?))
            }
            _ => Err(Error::Format(format!("unknown density id `{id}`"))),
        }
    }
}

/// JSON configuration for densities. Field names are part of the CLI
/// contract:
/// `{kind: "gauss"|"tabulated"|"singular-radial"|"product", c, n, samples?, a?, rho?, quad_tol?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<RhoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

impl DensitySpec {
    pub fn gauss_1d(c: f64) -> Self {
        Self {
            kind: "gauss".into(),
            c: Some(c),
            n: None,
            samples: None,
            a: None,
            rho: None,
            quad_tol: None,
        }
    }

    pub fn radial(n: usize, c: f64) -> Self {
        Self {
            kind: "gauss".into(),
            c: Some(c),
            n: Some(n),
            samples: None,
            a: None,
            rho: None,
            quad_tol: None,
        }
    }

    fn tol(&self) -> f64 {
        self.quad_tol.unwrap_or(DEFAULT_QUAD_TOL)
    }

    /// The 1-D density described by this spec (kinds "gauss"/"tabulated"
    /// with n absent or 1).
    pub fn build_1d(&self) -> Result<Density1D> {
        match self.kind.as_str() {
            "gauss" => Density1D::gauss(self.c.unwrap_or(0.0), self.tol()),
            "tabulated" => {
                let samples = self.samples.as_ref().ok_or_else(|| {
                    Error::Parameter("tabulated density spec needs `samples`".into())
                })?;
                let ts: Vec<f64> = samples.iter().map(|s| s[0]).collect();
                let psi: Vec<f64> = samples.iter().map(|s| s[1]).collect();
                Density1D::tabulated(&ts, &psi, self.tol())
            }
            k => Err(Error::Parameter(format!("density kind `{k}` is not one-dimensional"))),
        }
    }

    /// The n-dimensional density described by this spec.
    pub fn build_grid(&self) -> Result<GridDensity> {
        let n = self.n.unwrap_or(2);
        match self.kind.as_str() {
            "gauss" => Ok(GridDensity::Radial(RadialDensity::new(
                n,
                self.c.unwrap_or(0.0),
                self.tol(),
            )?)),
            "singular-radial" => {
                let a = self.a.as_ref().ok_or_else(|| {
                    Error::Parameter("singular-radial density spec needs `a`".into())
                })?;
                let profile = match a.kind.as_str() {
                    "affine" => {
                        let c = a.coeffs.as_deref().unwrap_or(&[]);
                        if c.len() != 2 {
                            return Err(Error::Parameter("affine profile needs 2 coeffs".into()));
                        }
                        ConvexProfile::Affine { c0: c[0], c1: c[1] }
                    }
                    "quadratic" => {
                        let c = a.coeffs.as_deref().unwrap_or(&[]);
                        if c.len() != 3 {
                            return Err(Error::Parameter("quadratic profile needs 3 coeffs".into()));
                        }
                        ConvexProfile::Quadratic {
                            c0: c[0],
                            c1: c[1],
                            c2: c[2],
                        }
                    }
                    "tabulated" => {
                        let s = a.samples.as_ref().ok_or_else(|| {
                            Error::Parameter("tabulated profile needs `samples`".into())
                        })?;
                        ConvexProfile::Tabulated {
                            ts: s.iter().map(|v| v[0]).collect(),
                            vals: s.iter().map(|v| v[1]).collect(),
                        }
                    }
                    k => return Err(Error::Parameter(format!("unknown profile kind `{k}`"))),
                };
                Ok(GridDensity::Singular(SingularRadialDensity::new(
                    n,
                    profile,
                    self.tol(),
                )?))
            }
            "product" => {
                let psi = if let Some(samples) = &self.samples {
                    let ts: Vec<f64> = samples.iter().map(|s| s[0]).collect();
                    let vals: Vec<f64> = samples.iter().map(|s| s[1]).collect();
                    Density1D::tabulated(&ts, &vals, self.tol())?
                } else {
                    Density1D::gauss(self.c.unwrap_or(0.0), self.tol())?
                };
                let rho = match &self.rho {
                    None => RhoWeight::Constant(1.0),
                    Some(r) => match r.kind.as_str() {
                        "const" => RhoWeight::Constant(r.value.unwrap_or(1.0)),
                        "gauss" => RhoWeight::Gauss { c: r.c.unwrap_or(0.0) },
                        "tabulated" => {
                            let s = r.samples.as_ref().ok_or_else(|| {
                                Error::Parameter("tabulated rho needs `samples`".into())
                            })?;
                            RhoWeight::TabulatedRadial {
                                rs: s.iter().map(|v| v[0]).collect(),
                                log_rho: s.iter().map(|v| v[1].ln()).collect(),
                            }
                        }
                        k => return Err(Error::Parameter(format!("unknown rho kind `{k}`"))),
                    },
                };
                Ok(GridDensity::Product(ProductDensity::new(n, psi, rho)?))
            }
            "tabulated" => Err(Error::Parameter(
                "tabulated densities are one-dimensional; use kind `product` for grids".into(),
            )),
            k => Err(Error::Parameter(format!("unknown density kind `{k}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    // Frozen oracles (30-digit independent quadrature, see quad tests):
    //   Psi(1) for psi = e^{t^2}          = 1.4626517459071816
    //   H(1)   for n=2, c=1               = pi (e - 1) = 5.398141569083775
    //   I(pi(e-1))                        = 2 pi e     = 17.079468445347134
    //   mu(B_1) singular a(t)=t, n=2      = 2 pi (e-1) = 10.796283138167548
    const PSI_1: f64 = 1.462_651_745_907_181_6;

    #[test]
    fn psi_primitive_lebesgue_is_identity() {
        let d = Density1D::lebesgue();
        assert_relative_eq!(d.psi_primitive(2.0).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(d.psi_primitive_inv(7.0).unwrap(), 7.0, max_relative = 1e-9);
        assert_eq!(d.psi_primitive_inv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn psi_primitive_gauss_matches_oracle() {
        let d = Density1D::gauss(1.0, DEFAULT_QUAD_TOL).unwrap();
        assert_relative_eq!(d.psi_primitive(1.0).unwrap(), PSI_1, max_relative = 1e-10);
        // odd in x
        let xs = [0.25, 0.7, 1.3, 2.9];
        for &x in &xs {
            let plus = d.psi_primitive(x).unwrap();
            let minus = d.psi_primitive(-x).unwrap();
            assert_eq!(plus, -minus);
        }
        // inverse of the oracle value
        assert_relative_eq!(d.psi_primitive_inv(PSI_1).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn psi_inverse_roundtrip_within_1e8() {
        for c in [0.0, 0.5, 1.0] {
            let d = Density1D::gauss(c, DEFAULT_QUAD_TOL).unwrap();
            for &x in &[0.0, 0.1, 0.77, 1.5, 2.9, -2.2] {
                let y = d.psi_primitive(x).unwrap();
                let back = d.psi_primitive_inv(y).unwrap();
                assert!(
                    (back - x).abs() <= 1e-8 * x.abs().max(1.0),
                    "c={c} x={x} back={back}"
                );
            }
        }
    }

    #[test]
    fn iso_fn_j_values_and_evenness() {
        let leb = Density1D::lebesgue();
        assert_relative_eq!(leb.iso_fn_j(5.3).unwrap(), 1.0, max_relative = 1e-12);

        let d = Density1D::gauss(1.0, DEFAULT_QUAD_TOL).unwrap();
        assert_relative_eq!(d.iso_fn_j(0.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.iso_fn_j(PSI_1).unwrap(), E, max_relative = 1e-8);
        for &y in &[0.3, 1.1, 2.4] {
            let a = d.iso_fn_j(y).unwrap();
            let b = d.iso_fn_j(-y).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn j_is_midpoint_strictly_convex_for_positive_c() {
        let d = Density1D::gauss(1.0, DEFAULT_QUAD_TOL).unwrap();
        let ys: Vec<f64> = (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect();
        for i in 0..ys.len() {
            for j in (i + 2)..ys.len() {
                if (j - i) % 2 == 0 {
                    let mid = (i + j) / 2;
                    let lhs = d.iso_fn_j(ys[mid]).unwrap();
                    let rhs = 0.5 * (d.iso_fn_j(ys[i]).unwrap() + d.iso_fn_j(ys[j]).unwrap());
                    assert!(lhs < rhs - 1e-9, "not strictly convex at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn one_d_profile_examples() {
        let leb = Density1D::lebesgue();
        assert_relative_eq!(leb.one_d_profile(3.0).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(leb.one_d_profile(0.0).unwrap(), 2.0, max_relative = 1e-12);

        let d = Density1D::gauss(1.0, DEFAULT_QUAD_TOL).unwrap();
        assert_relative_eq!(
            d.one_d_profile(2.0 * PSI_1).unwrap(),
            2.0 * E,
            max_relative = 1e-8
        );
        assert_relative_eq!(d.one_d_profile(0.0).unwrap(), 2.0 * d.psi(0.0), max_relative = 1e-12);
        assert!(d.one_d_profile(-1.0).is_err());
    }

    #[test]
    fn log_convexity_check_examples() {
        let gauss = Density1D::gauss(1.0, DEFAULT_QUAD_TOL).unwrap();
        let rep = gauss.log_convexity_check(2.0, 65, 1e-9);
        assert!(rep.convex);
        assert!(rep.worst_violation <= 1e-12);

        let flat = Density1D::lebesgue();
        assert!(flat.log_convexity_check(2.0, 65, 1e-9).convex);

        // psi = e^{-t^2}: concave exponent, so the check must fail
        let ts: Vec<f64> = (0..=32).map(|i| i as f64 * 0.125).collect();
        let psi: Vec<f64> = ts.iter().map(|t| (-t * t).exp()).collect();
        let neg = Density1D::tabulated(&ts, &psi, DEFAULT_QUAD_TOL).unwrap();
        let rep = neg.log_convexity_check(2.0, 65, 1e-9);
        assert!(!rep.convex);
        assert!(rep.worst_violation > 1e-3);
        assert!(!neg.is_log_convex());
        assert!(!neg.has_infinite_mass());
    }

    #[test]
    fn tabulated_interpolation_is_exact_in_log() {
        // samples of e^{t^2} on a coarse grid: log-linear interpolation keeps
        // positivity and evenness, and is exact at the nodes
        let ts: Vec<f64> = (0..=8).map(|i| i as f64 * 0.5).collect();
        let psi: Vec<f64> = ts.iter().map(|t| (t * t).exp()).collect();
        let d = Density1D::tabulated(&ts, &psi, DEFAULT_QUAD_TOL).unwrap();
        for (t, p) in ts.iter().zip(&psi) {
            assert_relative_eq!(d.psi(*t), *p, max_relative = 1e-12);
            assert_relative_eq!(d.psi(-*t), *p, max_relative = 1e-12);
        }
        assert!(d.is_log_convex());
        assert!(d.has_infinite_mass());
    }

    #[test]
    fn radial_mass_closed_forms() {
        let flat = RadialDensity::new(2, 0.0, DEFAULT_QUAD_TOL).unwrap();
        assert_relative_eq!(flat.radial_mass_h(2.0).unwrap(), 4.0 * PI, max_relative = 1e-10);
        assert_eq!(flat.radial_mass_h_inv(0.0).unwrap(), 0.0);

        let d = RadialDensity::new(2, 1.0, DEFAULT_QUAD_TOL).unwrap();
        assert_relative_eq!(
            d.radial_mass_h(1.0).unwrap(),
            PI * (E - 1.0),
            max_relative = 1e-10
        );
        // closed form pi (e^{r^2} - 1) across the working range
        for i in 1..=25 {
            let r = 0.1 * i as f64;
            let closed = PI * ((r * r).exp() - 1.0);
            assert_relative_eq!(d.radial_mass_h(r).unwrap(), closed, max_relative = 1e-9);
        }
        // H_inv o H = id within 1e-8
        for &r in &[0.2, 0.9, 1.7, 2.4] {
            let m = d.radial_mass_h(r).unwrap();
            assert!((d.radial_mass_h_inv(m).unwrap() - r).abs() <= 1e-8 * r.max(1.0));
        }
    }

    #[test]
    fn iso_profile_examples() {
        let flat = RadialDensity::new(2, 0.0, DEFAULT_QUAD_TOL).unwrap();
        assert_relative_eq!(flat.iso_profile_i(PI).unwrap(), 2.0 * PI, max_relative = 1e-9);
        assert_eq!(flat.iso_profile_i(0.0).unwrap(), 0.0);

        let d = RadialDensity::new(2, 1.0, DEFAULT_QUAD_TOL).unwrap();
        assert_relative_eq!(
            d.iso_profile_i(PI * (E - 1.0)).unwrap(),
            2.0 * PI * E,
            max_relative = 1e-8
        );
        // I(H(r)) = h(r) within 1e-8 relative on sampled radii
        for &r in &[0.3, 0.8, 1.4, 2.1] {
            let m = d.radial_mass_h(r).unwrap();
            assert_relative_eq!(
                d.iso_profile_i(m).unwrap(),
                d.sphere_weight(r),
                max_relative = 1e-8
            );
        }
        assert!(d.iso_profile_i(-0.1).is_err());
    }

    #[test]
    fn singular_density_mass_and_content() {
        let d = SingularRadialDensity::new(
            2,
            ConvexProfile::Affine { c0: 0.0, c1: 1.0 },
            DEFAULT_QUAD_TOL,
        )
        .unwrap();
        // mu(B_1) = 2 pi (e - 1)
        assert_relative_eq!(
            d.radial_mass(1.0).unwrap(),
            10.796_283_138_167_548,
            max_relative = 1e-10
        );
        assert_relative_eq!(d.mu_plus_ball(1.0), 2.0 * PI * E, max_relative = 1e-12);
        let m = d.radial_mass(0.8).unwrap();
        assert!((d.radial_mass_inv(m).unwrap() - 0.8).abs() < 1e-8);

        // concave profile must be rejected
        assert!(SingularRadialDensity::new(
            2,
            ConvexProfile::Quadratic {
                c0: 0.0,
                c1: 0.0,
                c2: -1.0
            },
            DEFAULT_QUAD_TOL
        )
        .is_err());
    }

    #[test]
    fn density_ids_roundtrip() {
        let radial = GridDensity::Radial(RadialDensity::new(2, 1.0, DEFAULT_QUAD_TOL).unwrap());
        let product = GridDensity::Product(
            ProductDensity::new(
                2,
                Density1D::gauss(0.5, DEFAULT_QUAD_TOL).unwrap(),
                RhoWeight::Constant(1.0),
            )
            .unwrap(),
        );
        let singular = GridDensity::Singular(
            SingularRadialDensity::new(
                2,
                ConvexProfile::Affine { c0: 0.0, c1: 1.0 },
                DEFAULT_QUAD_TOL,
            )
            .unwrap(),
        );
        for d in [radial, product, singular] {
            let id = d.id();
            let back = GridDensity::parse_id(&id, DEFAULT_QUAD_TOL).unwrap();
            assert_eq!(back.id(), id);
            let x = [0.3, -0.4];
            assert_relative_eq!(back.eval(&x), d.eval(&x), max_relative = 1e-12);
        }
    }

    #[test]
    fn density_spec_json_contract() {
        let spec: DensitySpec =
            serde_json::from_str(r#"{"kind":"gauss","c":1.0,"n":2}"#).unwrap();
        let d = spec.build_grid().unwrap();
        assert_eq!(d.id(), "radial;n=2;c=1");

        let spec: DensitySpec = serde_json::from_str(
            r#"{"kind":"product","n":2,"c":0.5,"rho":{"kind":"gauss","c":0.5}}"#,
        )
        .unwrap();
        assert!(matches!(spec.build_grid().unwrap(), GridDensity::Product(_)));

        let spec: DensitySpec = serde_json::from_str(
            r#"{"kind":"singular-radial","n":2,"a":{"kind":"affine","coeffs":[0.0,1.0]}}"#,
        )
        .unwrap();
        assert!(matches!(spec.build_grid().unwrap(), GridDensity::Singular(_)));

        // unknown fields are a usage error, not silently ignored
        assert!(serde_json::from_str::<DensitySpec>(r#"{"kind":"gauss","bogus":1}"#).is_err());
    }

    #[test]
    fn product_density_evaluates_factorwise() {
        let d = ProductDensity::new(
            3,
            Density1D::gauss(1.0, DEFAULT_QUAD_TOL).unwrap(),
            RhoWeight::Gauss { c: 1.0 },
        )
        .unwrap();
        let x = [0.3, 0.4, -0.5];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert_relative_eq!(d.eval(&x), r2.exp(), max_relative = 1e-12);
    }
}
