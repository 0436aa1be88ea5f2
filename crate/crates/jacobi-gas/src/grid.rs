//! Grid measures on [0,1] and exact cell integrals of the logarithmic kernel.
//!
//! All quadrature of `log|ξ-η|` uses closed-form antiderivatives, so cells
//! containing the singularity get their exact (finite) average instead of a
//! divergent point value:
//!
//! ```text
//! ∫_a^b log|ξ-η| dξ = xlog(b-η) - xlog(a-η) - (b-a),   xlog(t) := t·log|t|.
//! ```

use crate::error::{Error, Result};

/// `t·log|t|`, continuously extended by 0 at `t = 0`.
#[inline]
pub(crate) fn xlogabs(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.abs().ln()
    }
}

/// Second antiderivative used for exact double cell averages:
/// `Φ(t) = t²(2 log|t| - 3)/4`, with `Φ''(t) = log|t|` away from 0 and `Φ(0) = 0`.
#[inline]
pub(crate) fn phi2(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t * (2.0 * t.abs().ln() - 3.0) / 4.0
    }
}

/// Average of `log|ξ-η|` over the segment `[a, b]` (exact; finite even when
/// `η` lies inside the segment).
#[inline]
pub(crate) fn segment_log_avg(a: f64, b: f64, eta: f64) -> f64 {
    debug_assert!(b > a);
    (xlogabs(b - eta) - xlogabs(a - eta)) / (b - a) - 1.0
}

/// Average of `max(log|ξ-η|, log r)` over `[a, b]`: the kernel truncated below
/// at `log r`. Exact: the window `(η-r, η+r)` contributes `log r`, the rest the
/// plain log kernel via the antiderivative.
pub(crate) fn segment_truncated_log_avg(a: f64, b: f64, eta: f64, r: f64) -> f64 {
    debug_assert!(b > a && r > 0.0);
    let lo = (eta - r).max(a);
    let hi = (eta + r).min(b);
    let inside = (hi - lo).max(0.0);
    let mut integral = inside * r.ln();
    // Left remainder [a, min(b, eta - r)] and right remainder [max(a, eta + r), b]
    // never contain eta, so the plain antiderivative applies.
    let left_hi = (eta - r).min(b);
    if left_hi > a {
        integral += xlogabs(left_hi - eta) - xlogabs(a - eta) - (left_hi - a);
    }
    let right_lo = (eta + r).max(a);
    if b > right_lo {
        integral += xlogabs(b - eta) - xlogabs(right_lo - eta) - (b - right_lo);
    }
    integral / (b - a)
}

/// The smoothing kernel `H_{x,δ}(η)`: the average of `log|ξ-η|` for `ξ` over
/// `[x-δ, x+δ]`. Closed form, continuous in `η` on all of the reals.
pub fn smoothing_kernel_h(x: f64, delta: f64, eta: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    segment_log_avg(x - delta, x + delta, eta)
}

/// A discrete probability measure on the uniform midpoint grid of [0,1]:
/// `m` cells of width `1/m`, nodes at cell midpoints, nonnegative weights
/// summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    nodes: Vec<f64>,
    cell_width: f64,
    weights: Vec<f64>,
}

impl GridMeasure {
    /// The uniform measure on `cells` cells.
    pub fn uniform(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParameter("cells must be >= 1".into()));
        }
        let w = 1.0 / cells as f64;
        Self::from_weights(vec![w; cells])
    }

    /// Builds a measure from per-cell weights on the uniform grid with
    /// `weights.len()` cells. Validates nonnegativity and total mass 1 ± 1e-12,
    /// then renormalizes exactly.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let m = weights.len();
        if m == 0 {
            return Err(Error::InvalidParameter("weights must be nonempty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1 within 1e-12, got {total}"
            )));
        }
        let h = 1.0 / m as f64;
        let nodes = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            nodes,
            cell_width: h,
            weights,
        })
    }

    /// As [`from_weights`](Self::from_weights) but renormalizing any finite
    /// nonnegative mass vector with positive total (used for histograms).
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter(
                "masses must have positive finite total".into(),
            ));
        }
        Self::from_weights(masses.iter().map(|m| m / total).collect())
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    /// Cell midpoints, strictly increasing in (0,1).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Left and right edges of cell `i`.
    #[inline]
    pub fn cell_edges(&self, i: usize) -> (f64, f64) {
        (i as f64 * self.cell_width, (i + 1) as f64 * self.cell_width)
    }

    /// Cumulative distribution at the right edge of each cell.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }

    /// Index of the cell containing `x ∈ [0,1]` (the last cell owns `x = 1`).
    #[inline]
    pub fn cell_index(&self, x: f64) -> usize {
        ((x * self.cells() as f64) as usize).min(self.cells() - 1)
    }
}

/// The logarithmic potential `∫ log|x-y| dμ(y)`, with each cell's contribution
/// computed as its weight times the exact cell average of the kernel — finite
/// for every `x`, including `x` inside a charged cell.
pub fn log_potential(mu: &GridMeasure, x: f64) -> f64 {
    let h = mu.cell_width();
    let mut total = 0.0;
    for (&node, &w) in mu.nodes().iter().zip(mu.weights()) {
        if w != 0.0 {
            total += w * segment_log_avg(node - 0.5 * h, node + 0.5 * h, x);
        }
    }
    total
}
