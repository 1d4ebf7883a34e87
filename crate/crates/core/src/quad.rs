//! Adaptive Gauss–Kronrod quadrature and monotone primitives.
//!
//! The 7/15-point rule pair gives the local error estimate; segments are
//! refined worst-first until the summed estimate meets the requested
//! relative tolerance. [`MonotonePrimitive`] caches the running integral of
//! a nonnegative integrand on a uniform grid so that pointwise evaluation
//! and inversion only ever integrate over one short segment.

use crate::error::{Error, Result};

/// Nonnegative abscissae of the 15-point Kronrod rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// 7-point Gauss weights for the abscissae `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One 7/15 rule application on [a, b]: returns (kronrod value, |K - G|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;

    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let fsum = f(mid - dx) + f(mid + dx);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

const MAX_SEGMENTS: usize = 4096;

/// Integrate `f` over [a, b] to relative tolerance `rel_tol`.
///
/// Worst-first bisection of the 7/15 pair. Fails with the achieved tolerance
/// if the segment budget runs out, and with a domain error if the integrand
/// produces non-finite values.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };

    struct Seg {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = gk15(&f, lo, hi);
    if !val.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite integrand on [{lo}, {hi}]"
        )));
    }
    let mut segs = vec![Seg {
        a: lo,
        b: hi,
        val,
        err,
    }];

    loop {
        let total: f64 = segs.iter().map(|s| s.val).sum();
        let err_total: f64 = segs.iter().map(|s| s.err).sum();
        let target = rel_tol * total.abs().max(f64::MIN_POSITIVE);
        if err_total <= target || err_total <= 1e-300 {
            return Ok(sign * total);
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature {
                requested: rel_tol,
                achieved: err_total / total.abs().max(f64::MIN_POSITIVE),
            });
        }
        // split the segment with the largest error estimate
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Seg { a, b, .. } = segs.swap_remove(worst);
        let m = 0.5 * (a + b);
        for (na, nb) in [(a, m), (m, b)] {
            let (val, err) = gk15(&f, na, nb);
            if !val.is_finite() {
                return Err(Error::Domain(format!(
                    "non-finite integrand on [{na}, {nb}]"
                )));
            }
            segs.push(Seg {
                a: na,
                b: nb,
                val,
                err,
            });
        }
    }
}

/// Relative tolerance on the argument for monotone inversion.
pub const INVERT_ARG_TOL: f64 = 1e-10;

/// Eagerly cached primitive F(x) = ∫₀ˣ f of a nonnegative integrand.
///
/// The cache stores F at uniform nodes; evaluation adds a short adaptive
/// integral from the nearest node below, inversion brackets in the cache and
/// refines by safeguarded secant / bisection steps.
#[derive(Clone, Debug)]
pub struct MonotonePrimitive {
    step: f64,
    /// cum[k] = F(k * step); cum[0] = 0.
    cum: Vec<f64>,
    rel_tol: f64,
}

impl MonotonePrimitive {
    /// Build the cache on [0, x_max] (truncated where F exceeds `value_cap`).
    pub fn build<F: Fn(f64) -> f64>(
        f: F,
        step: f64,
        x_max: f64,
        value_cap: f64,
        rel_tol: f64,
    ) -> Result<Self> {
        assert!(step > 0.0 && x_max > 0.0);
        let mut cum = vec![0.0];
        let mut x = 0.0;
        while x < x_max {
            let next = x + step;
            let inc = integrate(&f, x, next, rel_tol)?;
            let total = cum.last().unwrap() + inc;
            if !total.is_finite() || total > value_cap {
                break;
            }
            cum.push(total);
            x = next;
        }
        if cum.len() < 2 {
            return Err(Error::Domain(
                "integrand overflows within the first cache segment".into(),
            ));
        }
        Ok(Self {
            step,
            cum,
            rel_tol,
        })
    }

    /// Largest cached argument.
    pub fn x_end(&self) -> f64 {
        (self.cum.len() - 1) as f64 * self.step
    }

    /// Largest cached value F(x_end).
    pub fn value_end(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// F(x) for x ≥ 0.
    pub fn eval<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> Result<f64> {
        debug_assert!(x >= 0.0);
        let k = ((x / self.step) as usize).min(self.cum.len() - 1);
        let base_x = k as f64 * self.step;
        Ok(self.cum[k] + integrate(f, base_x, x, self.rel_tol)?)
    }

    /// x with F(x) = y, for y ≥ 0, to `INVERT_ARG_TOL` relative in x.
    pub fn invert<F: Fn(f64) -> f64>(&self, f: F, y: f64) -> Result<f64> {
        debug_assert!(y >= 0.0);
        if y == 0.0 {
            return Ok(0.0);
        }
        // bracket [lo, hi] with F(lo) <= y <= F(hi)
        let (mut lo, mut flo, mut hi, mut fhi);
        if y <= self.value_end() {
            let idx = self.cum.partition_point(|&v| v < y).max(1);
            lo = (idx - 1) as f64 * self.step;
            flo = self.cum[idx - 1];
            hi = idx as f64 * self.step;
            fhi = self.cum[idx];
        } else {
            lo = self.x_end();
            flo = self.value_end();
            hi = lo;
            fhi = flo;
            let mut expansions = 0;
            while fhi < y {
                expansions += 1;
                if expansions > 64 {
                    return Err(Error::RangeExceeded { target: y });
                }
                let next = (hi * 2.0).max(hi + self.step);
                let inc = integrate(&f, hi, next, self.rel_tol)
                    .map_err(|_| Error::RangeExceeded { target: y })?;
                if !inc.is_finite() || !(fhi + inc).is_finite() {
                    return Err(Error::RangeExceeded { target: y });
                }
                lo = hi;
                flo = fhi;
                hi = next;
                fhi += inc;
            }
        }

        // safeguarded secant / bisection refinement
        for iter in 0..200 {
            if hi - lo <= INVERT_ARG_TOL * hi.abs().max(1.0) {
                break;
            }
            let width = hi - lo;
            let mut x = if iter % 2 == 0 && fhi > flo {
                lo + width * (y - flo) / (fhi - flo)
            } else {
                lo + 0.5 * width
            };
            if !(x > lo && x < hi) {
                x = lo + 0.5 * width;
            }
            let fx = self.eval(&f, x)?;
            if fx < y {
                lo = x;
                flo = fx;
            } else {
                hi = x;
                fhi = fx;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
