//! Parameter model: finite-N parameters, limit parameters, and scaling families.
//!
//! A scaling family records the sequences `n(N)`, `κ(N)`, `λ(N)` together with
//! their declared limits `n(N)/N → ρ`, `κ(N)/N → κ`, `λ(N)/N → λ`.

use crate::error::{Error, Result};

/// Parameters of the n-particle ensemble at one fixed N: particle count and
/// field strengths κ(N), λ(N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteParams {
    pub n: usize,
    pub kappa_n: f64,
    pub lambda_n: f64,
}

impl FiniteParams {
    pub fn new(n: usize, kappa_n: f64, lambda_n: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if !(kappa_n >= 0.0) || !kappa_n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa_n must be finite and >= 0, got {kappa_n}"
            )));
        }
        if !(lambda_n >= 0.0) || !lambda_n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_n must be finite and >= 0, got {lambda_n}"
            )));
        }
        Ok(Self { n, kappa_n, lambda_n })
    }
}

/// Limit parameters (ρ, κ, λ) of a scaling family; they define the limit
/// potential `V(x) = -(κ/2ρ) log x - (λ/2ρ) log(1-x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    pub rho: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl LimitParams {
    pub fn new(rho: f64, kappa: f64, lambda: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho must be finite and > 0, got {rho}"
            )));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa must be finite and >= 0, got {kappa}"
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { rho, kappa, lambda })
    }
}

/// One entry of a scaling family: the finite parameters used at scale N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingEntry {
    pub big_n: usize,
    pub n: usize,
    pub kappa_n: f64,
    pub lambda_n: f64,
}

/// The sequences n(N), κ(N), λ(N) with their declared limits (ρ, κ, λ).
///
/// The largest stored N must realize the limits within the declared tolerance:
/// `|n/N - ρ| ≤ tol` and likewise for `κ(N)/N` and `λ(N)/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFamily {
    entries: Vec<ScalingEntry>,
    pub rho: f64,
    pub kappa: f64,
    pub lambda: f64,
    tolerance: f64,
}

impl ScalingFamily {
    /// Builds a family from explicit entries, validating the consistency of the
    /// largest-N entry with the declared limits.
    pub fn new(
        mut entries: Vec<ScalingEntry>,
        limits: LimitParams,
        tolerance: f64,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter(
                "scaling family needs at least one entry".into(),
            ));
        }
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidParameter(
                "scaling tolerance must be >= 0".into(),
            ));
        }
        entries.sort_by_key(|e| e.big_n);
        for e in &entries {
            if e.big_n < 1 {
                return Err(Error::InvalidParameter("every N must be >= 1".into()));
            }
            FiniteParams::new(e.n, e.kappa_n, e.lambda_n)?;
        }
        if entries.windows(2).any(|w| w[0].big_n == w[1].big_n) {
            return Err(Error::InvalidParameter("duplicate N in scaling family".into()));
        }
        let last = *entries.last().expect("nonempty");
        let nn = last.big_n as f64;
        let drift = [
            (last.n as f64 / nn - limits.rho).abs(),
            (last.kappa_n / nn - limits.kappa).abs(),
            (last.lambda_n / nn - limits.lambda).abs(),
        ];
        if drift.iter().any(|d| *d > tolerance) {
            return Err(Error::InvalidParameter(format!(
                "largest entry N={} drifts from declared limits by {:?} > tolerance {}",
                last.big_n, drift, tolerance
            )));
        }
        Ok(Self {
            entries,
            rho: limits.rho,
            kappa: limits.kappa,
            lambda: limits.lambda,
            tolerance,
        })
    }

    /// The exact-ratio family `n = ⌈ρN⌉`, `κ(N) = κN`, `λ(N) = λN` over the
    /// given list of N values.
    pub fn exact_ratio(limits: LimitParams, big_ns: &[usize]) -> Result<Self> {
        let entries = big_ns
            .iter()
            .map(|&big_n| {
                let nn = big_n as f64;
                ScalingEntry {
                    big_n,
                    n: (limits.rho * nn).ceil().max(1.0) as usize,
                    kappa_n: limits.kappa * nn,
                    lambda_n: limits.lambda * nn,
                }
            })
            .collect();
        // ⌈ρN⌉/N deviates from ρ by at most 1/N.
        let tol = big_ns
            .iter()
            .map(|&n| 1.0 / n as f64)
            .fold(1e-12, f64::max);
        Self::new(entries, limits, tol)
    }

    /// Finite parameters stored for scale N, if present.
    pub fn params_for(&self, big_n: usize) -> Option<FiniteParams> {
        self.entries
            .iter()
            .find(|e| e.big_n == big_n)
            .map(|e| FiniteParams {
                n: e.n,
                kappa_n: e.kappa_n,
                lambda_n: e.lambda_n,
            })
    }

    /// All entries, ascending in N.
    pub fn entries(&self) -> &[ScalingEntry] {
        &self.entries
    }

    /// The declared limit parameters.
    pub fn limit(&self) -> LimitParams {
        LimitParams {
            rho: self.rho,
            kappa: self.kappa,
            lambda: self.lambda,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// Converts β-Jacobi ensemble parameters (a, b, β) at size N to ensemble
/// parameters: `n = N`, `κ(N) = 2a/β`, `λ(N) = 2b/β`.
pub fn beta_jacobi_to_params(big_n: usize, a: f64, b: f64, beta: f64) -> Result<FiniteParams> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be finite and > 0, got {beta}"
        )));
    }
    if !(a >= 0.0) || !(b >= 0.0) {
        return Err(Error::InvalidParameter(
            "a and b must be nonnegative".into(),
        ));
    }
    FiniteParams::new(big_n, 2.0 * a / beta, 2.0 * b / beta)
}
