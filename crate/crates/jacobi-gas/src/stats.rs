//! Statistics toolbox: Kolmogorov distances, KS statistics, effective sample
//! size, log-sum-exp, and weighted least squares.

use crate::error::{Error, Result};
use crate::grid::GridMeasure;

/// Sample mean.
pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance (0 for fewer than two points).
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// `log Σ exp(v_i)` computed with a max shift; -∞ for an empty slice or when
/// every entry is -∞.
pub fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        // Empty, all -inf (sum is 0, log is -inf), or a +inf entry dominates.
        return m.max(f64::NEG_INFINITY);
    }
    let s: f64 = v.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// `log( (1/k) Σ exp(v_i) )`.
pub fn logmeanexp(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    logsumexp(v) - (v.len() as f64).ln()
}

/// Kolmogorov–Smirnov statistic of an ascending-sorted sample against an
/// analytic distribution function: `sup_x |F_n(x) - F(x)|`.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max((f - i as f64 / n).abs());
        worst = worst.max((f - (i as f64 + 1.0) / n).abs());
    }
    worst
}

/// Kolmogorov distance between two grid measures on the same grid:
/// the sup over cell edges of the CDF difference.
pub fn kolmogorov_distance(a: &GridMeasure, b: &GridMeasure) -> Result<f64> {
    if a.cells() != b.cells() {
        return Err(Error::InvalidParameter(format!(
            "grids differ: {} vs {} cells",
            a.cells(),
            b.cells()
        )));
    }
    let (ca, cb) = (a.cdf(), b.cdf());
    Ok(ca
        .iter()
        .zip(cb.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Kolmogorov distance between a grid measure and an analytic distribution
/// function, evaluated at cell edges.
pub fn kolmogorov_distance_to_cdf(mu: &GridMeasure, cdf: impl Fn(f64) -> f64) -> f64 {
    let m = mu.cells() as f64;
    mu.cdf()
        .iter()
        .enumerate()
        .map(|(i, &c)| (c - cdf((i as f64 + 1.0) / m)).abs())
        .fold(0.0, f64::max)
}

/// Effective sample size of a (possibly autocorrelated) series via the initial
/// positive sequence of paired autocorrelations. Clamped to `[1, len]`.
pub fn effective_sample_size(v: &[f64]) -> f64 {
    let l = v.len();
    if l < 4 {
        return l as f64;
    }
    let m = mean(v);
    let c0: f64 = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / l as f64;
    if c0 <= 0.0 {
        return l as f64; // constant series
    }
    let rho = |k: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..l - k {
            s += (v[i] - m) * (v[i + k] - m);
        }
        s / l as f64 / c0
    };
    let max_lag = (l / 2).min(500);
    let mut tau = 1.0;
    let mut k = 1;
    while k < max_lag {
        let pair = if k + 1 < max_lag {
            rho(k) + rho(k + 1)
        } else {
            rho(k)
        };
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    (l as f64 / tau).clamp(1.0, l as f64)
}

/// Standard error of a binomial proportion with an effective sample size.
pub fn binomial_std_err(p: f64, ess: f64) -> f64 {
    if ess <= 0.0 {
        return 0.0;
    }
    (p * (1.0 - p) / ess).max(0.0).sqrt()
}

/// Weighted least-squares line fit `y ≈ intercept + slope·x` with weights
/// `w_i = 1/Var(y_i)`. Returns `(slope, intercept, slope_variance)` where the
/// slope variance is the exact-weights value `1/Σ w (x - x̄_w)²`.
pub fn weighted_least_squares(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() != ws.len() {
        return Err(Error::InvalidParameter(
            "mismatched fit input lengths".into(),
        ));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientStatistics(
            "need at least 2 points to fit a line".into(),
        ));
    }
    if ws.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(
            "weights must be finite and positive".into(),
        ));
    }
    let wsum: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / wsum;
    let ybar = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - xbar) * (x - xbar)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientStatistics(
            "degenerate fit: all x identical".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    Ok((slope, intercept, 1.0 / sxx))
}
