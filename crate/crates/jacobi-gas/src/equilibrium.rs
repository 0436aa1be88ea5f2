//! Equilibrium measure of the weighted logarithmic energy on [0,1].
//!
//! Minimizes the discretized functional
//!
//! ```text
//! I(μ) = -ρ² ∬ log|x-y| dμ(x)dμ(y) - ρ ∫ (κ log x + λ log(1-x)) dμ(x)
//! ```
//!
//! over probability weights on a uniform grid, with every kernel integral
//! computed by exact antiderivatives (double cell averages for the interaction,
//! cell averages for the field). The minimizer μ₀ yields the constants
//! `B = ∬log|x-y|dμ₀dμ₀ + (1/ρ)∫(κ log x + λ log(1-x))dμ₀` and
//! `D = -B - ∫V dμ₀`, and the effective potential
//! `V_eff(x) = V(x) - ∫log|x-y|dμ₀(y) - D`, which vanishes on the support of μ₀
//! and is nonnegative off it (the Frostman/KKT conditions).

use crate::density::field_log_terms;
use crate::error::{Error, Result};
use crate::grid::{log_potential, phi2, segment_log_avg, segment_truncated_log_avg, GridMeasure};
use crate::params::LimitParams;

/// Default grid resolution for equilibrium solves.
pub const DEFAULT_CELLS: usize = 1024;
/// Default KKT-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-3;
/// Default iteration budget (≈6× the slowest measured standard case).
pub const DEFAULT_MAX_ITERS: usize = 40_000;

/// A node is "in support" when its weight exceeds `0.01 / cells`.
pub fn support_threshold(cells: usize) -> f64 {
    0.01 / cells as f64
}

/// The equilibrium measure with its constants and Frostman/KKT diagnostics.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    /// The minimizing grid measure μ₀.
    pub mu0: GridMeasure,
    /// `∬log|x-y|dμ₀dμ₀ + (1/ρ)∫(κ log x + λ log(1-x))dμ₀` (so that I(μ₀) = 0
    /// after adding ρ²B to the energy).
    pub b: f64,
    /// `D = -B - ∫V dμ₀`, the additive constant making V_eff vanish on the support.
    pub d: f64,
    /// Per-node `(node, V_eff)` in the grid's own cell-averaged convention.
    pub veff_table: Vec<(f64, f64)>,
    /// `weight > support_threshold(cells)` per node.
    pub support_mask: Vec<bool>,
    /// `max( max over all nodes of (-V_eff)₊ , max over support nodes of |V_eff| )`.
    pub kkt_residual: f64,
}

impl EquilibriumSolution {
    /// Smallest and largest node flagged as support, if any.
    pub fn support_interval(&self) -> Option<(f64, f64)> {
        let nodes = self.mu0.nodes();
        let lo = self.support_mask.iter().position(|&s| s)?;
        let hi = self.support_mask.iter().rposition(|&s| s)?;
        Some((nodes[lo], nodes[hi]))
    }
}

/// Precomputed discretization: Toeplitz interaction kernel (first row) and
/// cell-averaged field values.
struct Discretization {
    m: usize,
    /// `tau[k]` = exact double cell average of `log|ξ-η|` for cells `k` apart.
    tau: Vec<f64>,
    /// `fbar[i]` = cell average of `κ log x + λ log(1-x)` over cell i.
    fbar: Vec<f64>,
    rho: f64,
}

impl Discretization {
    fn new(lp: &LimitParams, m: usize) -> Self {
        let h = 1.0 / m as f64;
        // Double cell average over cells with center distance k·h:
        // (Φ((k+1)h) - 2Φ(kh) + Φ((k-1)h)) / h², where Φ''= log|·|.
        // k = 0 reduces to 2Φ(h)/h² = log h - 3/2.
        let tau: Vec<f64> = (0..m)
            .map(|k| {
                let t = k as f64 * h;
                (phi2(t + h) - 2.0 * phi2(t) + phi2(t - h)) / (h * h)
            })
            .collect();
        let fbar: Vec<f64> = (0..m)
            .map(|i| {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                // Cell averages of log x and log(1-x) via the same antiderivative;
                // finite at the endpoint cells.
                let la = segment_log_avg(a, b, 0.0);
                let lb = segment_log_avg(a, b, 1.0);
                let ka = if lp.kappa == 0.0 { 0.0 } else { lp.kappa * la };
                let kb = if lp.lambda == 0.0 { 0.0 } else { lp.lambda * lb };
                ka + kb
            })
            .collect();
        Self {
            m,
            tau,
            fbar,
            rho: lp.rho,
        }
    }

    /// `(Kw)_i = Σ_j tau[|i-j|] w_j` — O(m²) with O(m) kernel storage.
    fn kernel_matvec(&self, w: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            let mut acc = 0.0;
            for (j, &wj) in w.iter().enumerate() {
                let k = i.abs_diff(j);
                acc += self.tau[k] * wj;
            }
            out[i] = acc;
        }
    }

    /// `E(w) = -ρ² wᵀKw - ρ fᵀw`, the discretized energy without the ρ²B shift.
    fn energy(&self, w: &[f64], kw_scratch: &mut [f64]) -> f64 {
        self.kernel_matvec(w, kw_scratch);
        let inter: f64 = w.iter().zip(kw_scratch.iter()).map(|(a, b)| a * b).sum();
        let field: f64 = w.iter().zip(self.fbar.iter()).map(|(a, b)| a * b).sum();
        -self.rho * self.rho * inter - self.rho * field
    }

    /// Gradient `∇E(w) = -2ρ²Kw - ρf`.
    fn gradient(&self, kw: &[f64], out: &mut [f64]) {
        for i in 0..self.m {
            out[i] = -2.0 * self.rho * self.rho * kw[i] - self.rho * self.fbar[i];
        }
    }

    /// Constants and the cell-averaged V_eff table for given weights.
    /// Returns (B, D, veff, support, kkt_residual).
    fn diagnostics(&self, w: &[f64]) -> (f64, f64, Vec<f64>, Vec<bool>, f64) {
        let mut kw = vec![0.0; self.m];
        self.kernel_matvec(w, &mut kw);
        let inter: f64 = w.iter().zip(kw.iter()).map(|(a, b)| a * b).sum();
        let field: f64 = w.iter().zip(self.fbar.iter()).map(|(a, b)| a * b).sum();
        let b = inter + field / self.rho;
        let int_v = -field / (2.0 * self.rho);
        let d = -b - int_v;
        let thresh = support_threshold(self.m);
        let mut veff = Vec::with_capacity(self.m);
        let mut support = Vec::with_capacity(self.m);
        let mut worst_neg = 0.0f64;
        let mut worst_supp = 0.0f64;
        for i in 0..self.m {
            // Cell-averaged effective potential: V̄_i - (Kw)_i - D.
            let vbar = -self.fbar[i] / (2.0 * self.rho);
            let v = vbar - kw[i] - d;
            let in_supp = w[i] > thresh;
            if v < -worst_neg {
                worst_neg = -v;
            }
            if in_supp && v.abs() > worst_supp {
                worst_supp = v.abs();
            }
            veff.push(v);
            support.push(in_supp);
        }
        (b, d, veff, support, worst_neg.max(worst_supp))
    }
}

/// The energy `I(μ) - ρ²B = -ρ²∬log|x-y|dμdμ - ρ∫(κ log x + λ log(1-x))dμ`
/// of an arbitrary grid measure, with exact cell kernels. Always finite:
/// endpoint cells carry finite cell-averaged field values.
pub fn energy_functional(mu: &GridMeasure, lp: &LimitParams) -> f64 {
    let disc = Discretization::new(lp, mu.cells());
    let mut scratch = vec![0.0; mu.cells()];
    disc.energy(mu.weights(), &mut scratch)
}

/// Minimizes the discretized energy over the probability simplex by entropic
/// mirror descent (multiplicative weights) with monotone backtracking.
///
/// Step-size candidates come from a Barzilai–Borwein curvature estimate with a
/// geometric (2×) growth fallback, and every 8th iteration probes a 64×
/// amplified step; backtracking halves any candidate until the energy does not
/// increase, so every accepted iterate stays feasible and the energy is
/// non-increasing throughout. Stops when the Frostman/KKT residual
/// `max(max_nodes (-V_eff)₊, max_support |V_eff|)` drops to `tol`.
///
/// Errors with [`Error::NotConverged`] when the iteration budget runs out and
/// with [`Error::GridLimited`] when backtracking cannot find any descent step
/// (the grid's residual floor), both carrying the final residual.
pub fn solve_equilibrium(
    lp: &LimitParams,
    cells: usize,
    tol: f64,
    max_iters: usize,
) -> Result<EquilibriumSolution> {
    if cells < 64 {
        return Err(Error::InvalidParameter(format!(
            "cells must be >= 64, got {cells}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }
    let disc = Discretization::new(lp, cells);
    let m = cells;
    let mut w = vec![1.0 / m as f64; m];
    let mut kw = vec![0.0; m];
    let mut grad = vec![0.0; m];
    let mut energy = disc.energy(&w, &mut kw);
    disc.gradient(&kw, &mut grad);

    let mut eta = 1.0f64;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (w, grad) at last iterate
    let mut cand = vec![0.0; m];
    let mut iters_done = 0;
    let mut stalled = false;

    const CHECK_EVERY: usize = 25;
    const BOOST_PERIOD: usize = 8;
    const BOOST_FACTOR: f64 = 64.0;
    const MAX_HALVINGS: usize = 100;

    for it in 0..max_iters {
        iters_done = it + 1;
        // Barzilai–Borwein step estimate from the last accepted move.
        let eta_bb = prev.as_ref().and_then(|(pw, pg)| {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..m {
                let dw = w[i] - pw[i];
                let dg = grad[i] - pg[i];
                num += dw * dw;
                den += dw * dg;
            }
            (den > 0.0).then(|| num / den)
        });
        let mut eta_try = if (it + 1) % BOOST_PERIOD == 0 {
            eta_bb.unwrap_or(eta) * BOOST_FACTOR
        } else {
            eta_bb.unwrap_or(2.0 * eta)
        };
        eta_try = eta_try.clamp(1e-4, 1e8);

        // Backtracking: halve until the energy is non-increasing.
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            // Mirror step w ∝ w·exp(-η∇E), computed shift-stabilized.
            let mut zmax = f64::NEG_INFINITY;
            for i in 0..m {
                let z = if w[i] > 0.0 {
                    w[i].ln() - eta_try * grad[i]
                } else {
                    f64::NEG_INFINITY
                };
                cand[i] = z;
                if z > zmax {
                    zmax = z;
                }
            }
            let mut total = 0.0;
            for c in cand.iter_mut() {
                *c = (*c - zmax).exp();
                total += *c;
            }
            for c in cand.iter_mut() {
                *c /= total;
            }
            let cand_energy = disc.energy(&cand, &mut kw);
            if cand_energy <= energy + 1e-14 * energy.abs() {
                accepted = true;
                energy = cand_energy;
                break;
            }
            eta_try *= 0.5;
        }
        if !accepted {
            stalled = true;
            break;
        }
        eta = eta_try;
        // kw currently holds K·cand from the accepted energy evaluation.
        let mut new_grad = vec![0.0; m];
        disc.gradient(&kw, &mut new_grad);
        prev = Some((std::mem::replace(&mut w, cand.clone()), std::mem::replace(&mut grad, new_grad)));

        if it % CHECK_EVERY == 0 {
            let (_, _, _, _, res) = disc.diagnostics(&w);
            if res <= tol {
                break;
            }
        }
    }

    let (b, d, veff, support, res) = disc.diagnostics(&w);
    let mu0 = GridMeasure::from_weights(w)?;
    let nodes = mu0.nodes().to_vec();
    let solution = EquilibriumSolution {
        mu0,
        b,
        d,
        veff_table: nodes.into_iter().zip(veff).collect(),
        support_mask: support,
        kkt_residual: res,
    };
    if res <= tol {
        Ok(solution)
    } else if stalled {
        Err(Error::GridLimited {
            residual: res,
            iters: iters_done,
            tol,
        })
    } else {
        Err(Error::NotConverged {
            residual: res,
            iters: iters_done,
            tol,
        })
    }
}

/// The constants `B = ∬log|x-y|dμ₀dμ₀ + (1/ρ)∫(κ log x + λ log(1-x))dμ₀` and
/// `D = -B - ∫V dμ₀` of a (converged) equilibrium measure.
pub fn compute_constants(mu0: &GridMeasure, lp: &LimitParams) -> (f64, f64) {
    let disc = Discretization::new(lp, mu0.cells());
    let (b, d, _, _, _) = disc.diagnostics(mu0.weights());
    (b, d)
}

/// The rate functional `I(μ) = energy_functional(μ) + ρ²·B`, nonnegative up to
/// grid tolerance and zero at μ₀.
pub fn rate_function(mu: &GridMeasure, sol: &EquilibriumSolution, lp: &LimitParams) -> f64 {
    energy_functional(mu, lp) + lp.rho * lp.rho * sol.b
}

/// The pointwise effective potential `V_eff(x) = V(x) - ∫log|x-y|dμ₀(y) - D`.
///
/// Extended-real: +∞ at an endpoint whose field coefficient is positive, finite
/// there when it vanishes (the log-potential stays finite by cell averaging).
pub fn effective_potential(x: f64, sol: &EquilibriumSolution, lp: &LimitParams) -> f64 {
    let v = -field_log_terms(x.clamp(0.0, 1.0), lp.kappa, lp.lambda) / (2.0 * lp.rho);
    v - log_potential(&sol.mu0, x) - sol.d
}

/// The truncated effective potential
/// `V_eff^M(x) = (V(x) ∧ M) - ∫ log(|x-y| ∨ M⁻¹) dμ₀(y) - D`:
/// always finite, continuous, nondecreasing in `M`, and converging to
/// [`effective_potential`] as `M → ∞`.
pub fn truncated_effective_potential(
    x: f64,
    m_cut: f64,
    sol: &EquilibriumSolution,
    lp: &LimitParams,
) -> f64 {
    assert!(m_cut > 1.0, "truncation level must exceed 1");
    let v = -field_log_terms(x.clamp(0.0, 1.0), lp.kappa, lp.lambda) / (2.0 * lp.rho);
    let v_cut = v.min(m_cut);
    let mu = &sol.mu0;
    let h = mu.cell_width();
    let r = 1.0 / m_cut;
    let mut pot = 0.0;
    for (&node, &w) in mu.nodes().iter().zip(mu.weights()) {
        if w != 0.0 {
            pot += w * segment_truncated_log_avg(node - 0.5 * h, node + 0.5 * h, x, r);
        }
    }
    v_cut - pot - sol.d
}
