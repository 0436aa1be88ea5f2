//! Monte Carlo verification of the outlier large-deviation behaviour.
//!
//! For a region `X ⊆ [0,1]`, the probability that a configuration places at
//! least one particle in `X` decays exponentially in the scale parameter when
//! `X` stays away from the support of the equilibrium measure:
//!
//! ```text
//! (1/N) log P(some particle in X)  →  -2ρ · inf_X V_eff .
//! ```
//!
//! This module estimates those probabilities by MCMC, estimates the auxiliary
//! normalization `γ_N` of the reduced (n-1 particle) measure whose ratio
//! sandwiches the outlier probability,
//!
//! ```text
//! γ_N(X)/γ_N([0,1]) ≤ P(some particle in X) ≤ n · γ_N(X)/γ_N([0,1]) ,
//! ```
//!
//! provides the truncated field functional `Φ_N^L` used to control the
//! integrand uniformly, and fits the exponential decay rate of the estimated
//! probabilities against the theoretical rate `-2ρ·inf_X V_eff`.

use crate::density::potential_vn;
use crate::equilibrium::{effective_potential, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::grid::{segment_log_avg, segment_truncated_log_avg, xlogabs, GridMeasure};
use crate::params::{FiniteParams, LimitParams, ScalingFamily};
use crate::sampler::{run_chain_blocks, ChainSettings};
use crate::stats::{
    binomial_std_err, effective_sample_size, logsumexp, mean, variance, weighted_least_squares,
};

/// Minimum hit count for an estimate to enter a rate fit.
const MIN_FIT_HITS: usize = 5;

/// Largest quadrature refinement ever recommended by [`estimate_gamma`].
const MAX_RECOMMENDED_CELLS: usize = 16_384;

/// A finite union of disjoint closed subintervals of `[0,1]`.
///
/// Intervals are kept sorted; construction rejects overlapping or touching
/// pieces (merge them first) and anything outside the unit interval.
/// Degenerate single-point intervals `[a,a]` are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    intervals: Vec<(f64, f64)>,
}

impl Region {
    /// Builds a region from `(lo, hi)` pairs in any order.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidParameter(
                    "region endpoints must be finite".into(),
                ));
            }
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidParameter(format!(
                    "interval [{a}, {b}] leaves [0,1]"
                )));
            }
            if a > b {
                return Err(Error::InvalidParameter(format!(
                    "interval [{a}, {b}] has lo > hi"
                )));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        if intervals.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(Error::InvalidParameter(
                "intervals overlap or touch; merge them into disjoint pieces".into(),
            ));
        }
        Ok(Self { intervals })
    }

    /// The empty region.
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// The whole unit interval.
    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, 1.0)],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// The disjoint intervals, ascending.
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Closed-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Length of the intersection with `[lo, hi]`.
    pub fn overlap_len(&self, lo: f64, hi: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
            .sum()
    }

    /// Total length of the region.
    pub fn total_len(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).sum()
    }
}

/// Monte Carlo estimate of the probability that at least one particle lands in
/// a region.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierEstimate {
    /// Scale parameter N of the family entry sampled.
    pub big_n: usize,
    /// Configurations drawn.
    pub trials: usize,
    /// Configurations with at least one coordinate in the region.
    pub hits: usize,
    /// `hits / trials`.
    pub p_hat: f64,
    /// Binomial standard error computed with the effective (autocorrelation
    /// corrected) sample size, not the raw trial count.
    pub std_err: f64,
    /// Effective sample size summed over chains.
    pub ess: f64,
}

/// Estimates `P(some particle in X)` at scale `N` by thinned Metropolis
/// sampling split over `chains` parallel chains on disjoint RNG streams.
///
/// An empty region returns `p_hat = 0` without sampling. The standard error is
/// corrected for chain autocorrelation through the effective sample size of
/// the per-chain hit indicator series.
pub fn estimate_outlier_probability(
    family: &ScalingFamily,
    big_n: usize,
    x: &Region,
    trials: usize,
    s: &ChainSettings,
    chains: usize,
) -> Result<OutlierEstimate> {
    s.validate()?;
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if chains < 1 {
        return Err(Error::InvalidParameter("chains must be >= 1".into()));
    }
    let p = family.params_for(big_n).ok_or_else(|| {
        Error::InvalidParameter(format!("scale N={big_n} is not present in the scaling family"))
    })?;
    if x.is_empty() {
        return Ok(OutlierEstimate {
            big_n,
            trials,
            hits: 0,
            p_hat: 0.0,
            std_err: 0.0,
            ess: 0.0,
        });
    }
    let blocks = run_chain_blocks(p.n, p.kappa_n, p.lambda_n, s, trials, chains);
    let mut hits = 0usize;
    let mut ess = 0.0f64;
    for (samples, _) in &blocks {
        let indicators: Vec<f64> = samples
            .iter()
            .map(|c| {
                if c.positions().iter().any(|&v| x.contains(v)) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        hits += indicators.iter().filter(|&&v| v == 1.0).count();
        ess += effective_sample_size(&indicators);
    }
    let p_hat = hits as f64 / trials as f64;
    Ok(OutlierEstimate {
        big_n,
        trials,
        hits,
        p_hat,
        std_err: binomial_std_err(p_hat, ess),
        ess,
    })
}

/// Monte Carlo estimate of the normalization `γ_N` over a region and over the
/// whole interval, reported in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// `log γ_N(X)`; `-∞` when the region is empty.
    pub log_gamma_x: f64,
    /// `log γ_N([0,1])`; always finite.
    pub log_gamma_full: f64,
    /// Delta-method standard error of `log γ_N([0,1])`, autocorrelation
    /// corrected.
    pub log_gamma_full_std_err: f64,
    /// `γ_N(X) / γ_N([0,1])`, the lower sandwich bound for the outlier
    /// probability.
    pub ratio: f64,
    /// Delta-method standard error of the ratio, accounting for the covariance
    /// of numerator and denominator on the shared sample set.
    pub ratio_std_err: f64,
    /// Reduced-measure configurations drawn.
    pub samples: usize,
    /// When the quadrature grid is coarser than the smallest atom spacing
    /// observed, the suggested cell count (next power of two at or above
    /// `2 / min gap`, capped); `None` when the grid resolves the atoms.
    pub recommended_cells: Option<usize>,
}

/// Estimates `γ_N(X)` and `γ_N([0,1])` at scale `N`.
///
/// For each reduced-measure sample `η = (η_1,…,η_{n-1})` the integral
///
/// ```text
/// ∫ exp( -2n V_N(ξ) + 2 Σ_i log|ξ - η_i| ) dξ
/// ```
///
/// is evaluated over the region and over `[0,1]` on a uniform grid of
/// `quad_cells` cells, with the log-integrand averaged exactly over each cell
/// (closed-form cell averages of `log ξ`, `log(1-ξ)` and `log|ξ-η_i|`, so the
/// logarithmic singularities at the atoms cost no accuracy). Everything is
/// accumulated in log space with max shifts; both averages share the sample
/// set, and the ratio's standard error keeps the resulting covariance.
pub fn estimate_gamma(
    family: &ScalingFamily,
    big_n: usize,
    x: &Region,
    trials: usize,
    quad_cells: usize,
    s: &ChainSettings,
    chains: usize,
) -> Result<GammaEstimate> {
    s.validate()?;
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if quad_cells < 1 {
        return Err(Error::InvalidParameter("quad_cells must be >= 1".into()));
    }
    if chains < 1 {
        return Err(Error::InvalidParameter("chains must be >= 1".into()));
    }
    let p = family.params_for(big_n).ok_or_else(|| {
        Error::InvalidParameter(format!("scale N={big_n} is not present in the scaling family"))
    })?;
    if p.n < 2 {
        return Err(Error::InvalidParameter(
            "gamma estimation needs n >= 2 (the reduced measure has n-1 >= 1 particles)".into(),
        ));
    }

    let m = quad_cells;
    let edges: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
    let inv_len: Vec<f64> = (0..m).map(|c| 1.0 / (edges[c + 1] - edges[c])).collect();
    // Cell averages of the field part of the log-integrand:
    // -2n V_N(ξ) = κ(N) log ξ + λ(N) log(1-ξ).
    let base: Vec<f64> = (0..m)
        .map(|c| {
            p.kappa_n * segment_log_avg(edges[c], edges[c + 1], 0.0)
                + p.lambda_n * segment_log_avg(edges[c], edges[c + 1], 1.0)
        })
        .collect();
    let ln_len: Vec<f64> = (0..m).map(|c| (edges[c + 1] - edges[c]).ln()).collect();
    // Cells meeting the region, with the log of the overlap length. For the
    // full region the overlaps equal the cell lengths exactly, so γ_X and
    // γ_full coincide bit for bit.
    let x_cells: Vec<(usize, f64)> = (0..m)
        .filter_map(|c| {
            let ov = x.overlap_len(edges[c], edges[c + 1]);
            (ov > 0.0).then(|| (c, ov.ln()))
        })
        .collect();

    let blocks = run_chain_blocks(p.n - 1, p.kappa_n, p.lambda_n, s, trials, chains);

    let mut lg_x: Vec<f64> = Vec::with_capacity(trials);
    let mut lg_f: Vec<f64> = Vec::with_capacity(trials);
    let mut block_lens: Vec<usize> = Vec::with_capacity(blocks.len());
    let mut min_gap = f64::INFINITY;
    let mut cell_log = vec![0.0f64; m];
    let mut buf: Vec<f64> = Vec::with_capacity(m);
    for (samples, _) in &blocks {
        block_lens.push(samples.len());
        for c in samples {
            let atoms = c.positions();
            for w in atoms.windows(2) {
                min_gap = min_gap.min(w[1] - w[0]);
            }
            cell_log.copy_from_slice(&base);
            // Accumulate 2·(cell average of log|ξ-η|) per atom by sharing the
            // antiderivative values at cell edges between neighbouring cells.
            for &eta in atoms {
                let mut prev = xlogabs(edges[0] - eta);
                for k in 1..=m {
                    let cur = xlogabs(edges[k] - eta);
                    cell_log[k - 1] += 2.0 * ((cur - prev) * inv_len[k - 1] - 1.0);
                    prev = cur;
                }
            }
            buf.clear();
            buf.extend((0..m).map(|c| cell_log[c] + ln_len[c]));
            lg_f.push(logsumexp(&buf));
            buf.clear();
            buf.extend(x_cells.iter().map(|&(c, lov)| cell_log[c] + lov));
            lg_x.push(logsumexp(&buf));
        }
    }

    // Log-space means with a global max shift shared across chains.
    let max_x = lg_x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_f = lg_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift_x = if max_x.is_finite() { max_x } else { 0.0 };
    let shift_f = if max_f.is_finite() { max_f } else { 0.0 };
    let a_x: Vec<f64> = lg_x.iter().map(|v| (v - shift_x).exp()).collect();
    let a_f: Vec<f64> = lg_f.iter().map(|v| (v - shift_f).exp()).collect();
    let m_x = mean(&a_x);
    let m_f = mean(&a_f);
    let log_gamma_full = shift_f + m_f.ln();
    let log_gamma_x = if m_x > 0.0 {
        shift_x + m_x.ln()
    } else {
        f64::NEG_INFINITY
    };

    let mut ess_x = 0.0f64;
    let mut ess_f = 0.0f64;
    let mut off = 0usize;
    for &len in &block_lens {
        ess_x += effective_sample_size(&a_x[off..off + len]);
        ess_f += effective_sample_size(&a_f[off..off + len]);
        off += len;
    }
    let (var_x, var_f, cov) = if trials >= 2 {
        let c: f64 = a_x
            .iter()
            .zip(&a_f)
            .map(|(u, v)| (u - m_x) * (v - m_f))
            .sum::<f64>()
            / (trials as f64 - 1.0);
        (variance(&a_x), variance(&a_f), c)
    } else {
        (0.0, 0.0, 0.0)
    };
    let log_gamma_full_std_err = (var_f / ess_f).sqrt() / m_f;
    let (ratio, ratio_std_err) = if m_x > 0.0 {
        let r = (log_gamma_x - log_gamma_full).exp();
        let rel = var_x / (ess_x * m_x * m_x) + var_f / (ess_f * m_f * m_f)
            - 2.0 * cov / (ess_x.min(ess_f) * m_x * m_f);
        (r, r * rel.max(0.0).sqrt())
    } else {
        (0.0, 0.0)
    };

    let recommended_cells = if min_gap.is_finite() && min_gap > 0.0 {
        let needed = (2.0 / min_gap).ceil().min(MAX_RECOMMENDED_CELLS as f64) as usize;
        let rec = needed.next_power_of_two().min(MAX_RECOMMENDED_CELLS);
        (rec > quad_cells).then_some(rec)
    } else {
        None
    };

    Ok(GammaEstimate {
        log_gamma_x,
        log_gamma_full,
        log_gamma_full_std_err,
        ratio,
        ratio_std_err,
        samples: trials,
        recommended_cells,
    })
}

/// The truncated field functional
///
/// ```text
/// Φ_N^L(ξ, μ) = (V_N(ξ) ∧ L) - ((n-1)/n) ∫ log(|ξ-η| ∨ L⁻¹) dμ(η) ,
/// ```
///
/// evaluated with the exact cell average of the truncated log kernel on each
/// grid cell. Always finite; since the truncated kernel is nonpositive on the
/// unit interval, `-Φ_N^L(ξ,μ) ≤ -(V_N(ξ) ∧ L)` for every `μ`.
pub fn truncated_field_functional(xi: f64, mu: &GridMeasure, l: f64, p: &FiniteParams) -> f64 {
    assert!(l > 1.0, "truncation level must exceed 1");
    assert!((0.0..=1.0).contains(&xi), "xi must lie in [0,1]");
    let v = potential_vn(xi, p).expect("xi validated above");
    let v_cut = v.min(l);
    let r = 1.0 / l;
    let weights = mu.weights();
    let mut pot = 0.0;
    for i in 0..mu.cells() {
        let w = weights[i];
        if w != 0.0 {
            let (a, b) = mu.cell_edges(i);
            pot += w * segment_truncated_log_avg(a, b, xi, r);
        }
    }
    let n = p.n as f64;
    v_cut - (n - 1.0) / n * pot
}

/// Fitted exponential decay of outlier probabilities against the theoretical
/// rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// The per-scale estimates supplied to the fit (including ones excluded
    /// for having too few hits).
    pub per_n: Vec<OutlierEstimate>,
    /// Weighted least-squares slope of `log p_hat` against `N`.
    pub fitted_slope: f64,
    /// Standard error of the fitted slope under the supplied per-point
    /// variances.
    pub slope_std_err: f64,
    /// `-2ρ · inf_X V_eff`, the predicted slope; exactly `0` when the infimum
    /// is below the equilibrium solution's own KKT residual (the region meets
    /// the support at numerical resolution).
    pub theoretical_rate: f64,
}

/// Fits `log p_hat ≈ intercept + slope·N` by weighted least squares and
/// compares against the rate `-2ρ·inf_X V_eff` from an equilibrium solution.
///
/// Only estimates with at least 5 hits enter the fit (at least 3 such scales
/// are required); weights are the inverse delta-method variances of
/// `log p_hat`. The infimum is taken over the tabulated effective potential at
/// grid nodes inside the region together with the region's interval endpoints.
pub fn fit_rate(
    estimates: &[OutlierEstimate],
    x: &Region,
    sol: &EquilibriumSolution,
    lp: &LimitParams,
) -> Result<RateEstimate> {
    let usable: Vec<&OutlierEstimate> = estimates
        .iter()
        .filter(|e| e.hits >= MIN_FIT_HITS)
        .collect();
    if usable.len() < 3 {
        let starved: Vec<usize> = estimates
            .iter()
            .filter(|e| e.hits < MIN_FIT_HITS)
            .map(|e| e.big_n)
            .collect();
        return Err(Error::InsufficientStatistics(format!(
            "rate fit needs at least 3 scales with >= {MIN_FIT_HITS} hits, found {}; \
             increase trials at N = {starved:?}",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|e| e.big_n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|e| e.p_hat.ln()).collect();
    let ws: Vec<f64> = usable
        .iter()
        .map(|e| {
            let var_log = (e.std_err / e.p_hat).powi(2);
            1.0 / var_log.max(1e-12)
        })
        .collect();
    let (slope, _intercept, slope_var) = weighted_least_squares(&xs, &ys, &ws)?;

    let mut inf = f64::INFINITY;
    for &(node, veff) in &sol.veff_table {
        if x.contains(node) {
            inf = inf.min(veff);
        }
    }
    for &(a, b) in x.intervals() {
        inf = inf.min(effective_potential(a, sol, lp));
        inf = inf.min(effective_potential(b, sol, lp));
    }
    // An infimum the solver cannot distinguish from zero is zero: the region
    // meets the support.
    let theoretical_rate = if inf <= sol.kkt_residual {
        0.0
    } else {
        -2.0 * lp.rho * inf
    };

    Ok(RateEstimate {
        per_n: estimates.to_vec(),
        fitted_slope: slope,
        slope_std_err: slope_var.sqrt(),
        theoretical_rate,
    })
}
