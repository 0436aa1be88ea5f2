//! Jacobi β-ensemble log-gas toolkit.
//!
//! The ensemble is the probability measure on `[0,1]^n` with density proportional to
//!
//! ```text
//! exp( -2n Σ_i V_N(x_i) + 2 Σ_{i<j} log|x_i - x_j| ),
//! V_N(x) = -(κ(N)/2n) log x - (λ(N)/2n) log(1-x),
//! ```
//!
//! the eigenvalue law of β-Jacobi (MANOVA) random matrices. The crate provides:
//!
//! - [`params`]/[`density`]: parameter families along a scaling sequence
//!   `n(N)/N → ρ`, `κ(N)/N → κ`, `λ(N)/N → λ`, potentials, and the Gibbs
//!   log-density with incremental-update-friendly evaluation.
//! - [`sampler`]: single-coordinate random-walk Metropolis with reflecting
//!   boundaries, O(n) move updates, burn-in step adaptation, and deterministic
//!   parallel chains on disjoint RNG streams.
//! - [`equilibrium`]: the minimizer μ₀ of the weighted logarithmic energy on a
//!   uniform grid (mirror descent on the simplex with exact cell-averaged
//!   kernels), the constants B and D, and the effective potential
//!   `V_eff(x) = V(x) - ∫log|x-y| dμ₀(y) - D` with its Frostman/KKT residuals.
//! - [`ldp`]: Monte Carlo verification that support outliers obey a large
//!   deviation principle in scale 1/N with rate `2ρ V_eff`: outlier-probability
//!   estimation, the auxiliary γ_N functional with its sandwich inequality, and
//!   weighted rate fits against the theoretical decay.
//! - [`stats`]: the small statistics toolbox used throughout (Kolmogorov
//!   distances, KS statistics, effective sample size, log-sum-exp, weighted
//!   least squares).

pub mod density;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod ldp;
pub mod params;
pub mod sampler;
pub mod stats;

pub use density::{log_unnormalized_density, potential_v, potential_vn, Configuration};
pub use equilibrium::{
    compute_constants, effective_potential, energy_functional, rate_function, solve_equilibrium,
    truncated_effective_potential, EquilibriumSolution,
};
pub use error::{Error, Result};
pub use grid::{log_potential, smoothing_kernel_h, GridMeasure};
pub use ldp::{
    estimate_gamma, estimate_outlier_probability, fit_rate, truncated_field_functional,
    GammaEstimate, OutlierEstimate, RateEstimate, Region,
};
pub use params::{beta_jacobi_to_params, FiniteParams, LimitParams, ScalingFamily};
pub use sampler::{
    empirical_measure, sample_chain, sample_chains, sample_reduced_chain, ChainDiagnostics,
    ChainSettings,
};
