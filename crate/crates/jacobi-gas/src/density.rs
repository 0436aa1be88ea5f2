//! Configurations, potentials, and the unnormalized Gibbs log-density.
//!
//! Extended-real convention: values live in `[-∞, +∞]` as IEEE `f64`
//! infinities; every site that could produce NaN (`0·log 0`, `∞-∞`) is guarded
//! so only finite values and infinities ever flow through arithmetic.

use crate::error::{Error, Result};
use crate::params::{FiniteParams, LimitParams};

/// One point of `[0,1]^n`: particle positions stored sorted ascending.
///
/// Sorting is a storage normalization — the Gibbs density is symmetric under
/// coordinate permutations — and keeps pairwise-difference scans cache-friendly.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    positions: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration, validating the domain and sorting the positions.
    pub fn new(mut positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        if positions.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidParameter(
                "configuration coordinates must lie in [0,1]".into(),
            ));
        }
        positions.sort_by(|a, b| a.partial_cmp(b).expect("no NaN after domain check"));
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `κ·log x + λ·log(1-x)` with NaN-free endpoint handling: a zero coefficient
/// contributes exactly 0 at its endpoint, a positive one contributes -∞.
/// This is the exponent `-2n V_N(x)` (independent of n) and, times `-1/(2ρ)`
/// for (κ, λ) limit coefficients, the limit potential.
#[inline]
pub(crate) fn field_log_terms(x: f64, kappa: f64, lambda: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    let a = if kappa == 0.0 { 0.0 } else { kappa * x.ln() };
    let b = if lambda == 0.0 {
        0.0
    } else {
        lambda * (1.0 - x).ln()
    };
    a + b
}

/// The finite-N confining potential
/// `V_N(x) = -(κ(N)/2n) log x - (λ(N)/2n) log(1-x)`.
///
/// Returns +∞ at `x = 0` when `κ(N) > 0` and at `x = 1` when `λ(N) > 0`;
/// the corresponding term is 0 when its coefficient vanishes.
pub fn potential_vn(x: f64, p: &FiniteParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in [0,1], got {x}"
        )));
    }
    Ok(-field_log_terms(x, p.kappa_n, p.lambda_n) / (2.0 * p.n as f64))
}

/// The limit confining potential `V(x) = -(κ/2ρ) log x - (λ/2ρ) log(1-x)`,
/// with the same endpoint conventions as [`potential_vn`].
pub fn potential_v(x: f64, lp: &LimitParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!(
            "x must lie in [0,1], got {x}"
        )));
    }
    Ok(-field_log_terms(x, lp.kappa, lp.lambda) / (2.0 * lp.rho))
}

/// Sum over coordinates of the field exponent plus twice the pairwise
/// log-repulsion, for a sorted slice. Internal workhorse shared with the
/// sampler's from-scratch recomputations.
pub(crate) fn log_density_sorted(xs: &[f64], kappa_n: f64, lambda_n: f64) -> f64 {
    let mut total = 0.0;
    for (i, &xi) in xs.iter().enumerate() {
        total += field_log_terms(xi, kappa_n, lambda_n);
        for &xj in &xs[i + 1..] {
            // Sorted storage makes xj - xi >= 0; ln(0) = -inf handles collisions.
            total += 2.0 * (xj - xi).ln();
        }
    }
    total
}

/// The unnormalized Gibbs log-density
/// `-2n Σ_i V_N(x_i) + 2 Σ_{i<j} log|x_i - x_j|`.
///
/// Returns -∞ when two coordinates coincide or a coordinate sits on a singular
/// endpoint. Errors when the configuration size differs from `p.n`.
pub fn log_unnormalized_density(c: &Configuration, p: &FiniteParams) -> Result<f64> {
    if c.len() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: c.len(),
        });
    }
    Ok(log_density_sorted(c.positions(), p.kappa_n, p.lambda_n))
}
