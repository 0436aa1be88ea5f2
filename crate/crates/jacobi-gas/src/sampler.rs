//! Markov chain Monte Carlo for the Gibbs measure: single-coordinate
//! random-walk Metropolis with reflecting boundaries at {0,1}.
//!
//! Each move touches one coordinate and recomputes only the O(n) log-density
//! terms involving it (field term plus the n-1 pair interactions, accumulated
//! as a running product of distance ratios with overflow flushes). The proposal
//! step is adapted toward a target acceptance rate during burn-in and frozen
//! afterwards, preserving detailed balance over the sampling phase. Parallel
//! chains draw from provably disjoint ChaCha streams keyed by chain index and
//! merge deterministically.

use crate::density::{field_log_terms, log_density_sorted};
use crate::error::{Error, Result};
use crate::grid::GridMeasure;
use crate::params::FiniteParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Settings for one Metropolis chain. Sweeps are units of n single-coordinate
/// moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSettings {
    /// Adaptation/equilibration sweeps discarded before sampling.
    pub burn_in: usize,
    /// Sweeps between retained samples (≥ 1).
    pub thinning: usize,
    /// Initial proposal half-width.
    pub initial_step: f64,
    /// Acceptance rate targeted by burn-in adaptation, in (0,1).
    pub target_acceptance: f64,
    /// Base RNG seed; chain index selects the stream.
    pub seed: u64,
}

impl ChainSettings {
    /// Default settings for an n-particle chain: burn-in 200·n sweeps,
    /// thinning n sweeps, initial step 0.1, target acceptance 0.4.
    pub fn for_particles(n: usize, seed: u64) -> Self {
        Self {
            burn_in: 200 * n,
            thinning: n.max(1),
            initial_step: 0.1,
            target_acceptance: 0.4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning < 1 {
            return Err(Error::InvalidParameter("thinning must be >= 1".into()));
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return Err(Error::InvalidParameter(
                "initial_step must be finite and > 0".into(),
            ));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidParameter(
                "target_acceptance must lie in (0,1)".into(),
            ));
        }
        Ok(())
    }
}

/// Post-run chain health summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainDiagnostics {
    /// Fraction of accepted moves over the sampling (post-burn-in) phase.
    pub acceptance_rate: f64,
    /// Proposal half-width after burn-in adaptation froze.
    pub final_step: f64,
    /// Total sweeps executed (burn-in + sampling).
    pub sweeps_run: usize,
}

/// Folds a proposal back into [0,1] by reflection at both walls.
#[inline]
fn reflect(mut t: f64) -> f64 {
    loop {
        if t < 0.0 {
            t = -t;
        } else if t > 1.0 {
            t = 2.0 - t;
        } else {
            return t;
        }
    }
}

/// One Metropolis chain over n coordinates with an incrementally maintained
/// log-density.
struct Chain {
    x: Vec<f64>,
    kappa_n: f64,
    lambda_n: f64,
    step: f64,
    rng: ChaCha8Rng,
    log_density: f64,
    accepted: u64,
    proposed: u64,
}

impl Chain {
    fn new(n: usize, kappa_n: f64, lambda_n: f64, step: f64, seed: u64, stream: u64) -> Self {
        // Deterministic strictly interior, pairwise distinct start.
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) / (n as f64 + 1.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut sorted = x.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let log_density = log_density_sorted(&sorted, kappa_n, lambda_n);
        Self {
            x,
            kappa_n,
            lambda_n,
            step,
            rng,
            log_density,
            accepted: 0,
            proposed: 0,
        }
    }

    /// Log-density change if coordinate `i` moves to `prop`: the O(n) terms
    /// touching it. Pair ratios accumulate multiplicatively with flushes, so
    /// the common case spends ~n multiplies and O(1) logarithms.
    #[inline]
    fn move_delta(&self, i: usize, prop: f64) -> f64 {
        let xi = self.x[i];
        let delta = field_log_terms(prop, self.kappa_n, self.lambda_n)
            - field_log_terms(xi, self.kappa_n, self.lambda_n);
        let mut acc = 1.0f64;
        let mut log_acc = 0.0f64;
        for (j, &xj) in self.x.iter().enumerate() {
            if j == i {
                continue;
            }
            let num = (prop - xj).abs();
            if num == 0.0 {
                return f64::NEG_INFINITY; // exact collision
            }
            acc *= num / (xi - xj).abs();
            if !(1e-200..=1e200).contains(&acc) {
                log_acc += acc.ln();
                acc = 1.0;
            }
        }
        delta + 2.0 * (log_acc + acc.ln())
    }

    /// One sweep = n sequential single-coordinate Metropolis moves.
    fn sweep(&mut self) {
        for i in 0..self.x.len() {
            let offset: f64 = self.rng.random::<f64>() * 2.0 - 1.0;
            let prop = reflect(self.x[i] + self.step * offset);
            let delta = self.move_delta(i, prop);
            let u: f64 = self.rng.random();
            self.proposed += 1;
            if u.ln() < delta {
                self.x[i] = prop;
                self.log_density += delta;
                self.accepted += 1;
            }
        }
    }

    /// Burn-in with step adaptation: every 100 sweeps the step is multiplied
    /// (divided) by 1.1 when the window acceptance exceeds (misses) the target.
    fn burn(&mut self, sweeps: usize, target: f64) {
        const WINDOW: usize = 100;
        let mut done = 0;
        while done < sweeps {
            let chunk = WINDOW.min(sweeps - done);
            self.accepted = 0;
            self.proposed = 0;
            for _ in 0..chunk {
                self.sweep();
            }
            done += chunk;
            if chunk == WINDOW {
                let rate = self.accepted as f64 / self.proposed.max(1) as f64;
                if rate > target {
                    self.step *= 1.1;
                } else {
                    self.step /= 1.1;
                }
                self.step = self.step.clamp(1e-9, 1.0);
            }
        }
        self.accepted = 0;
        self.proposed = 0;
    }

    fn current_configuration(&self) -> crate::density::Configuration {
        crate::density::Configuration::new(self.x.clone()).expect("chain state stays in [0,1]")
    }
}

/// Runs one chain and retains `count` states, `thinning` sweeps apart.
fn run_single_chain(
    n: usize,
    kappa_n: f64,
    lambda_n: f64,
    s: &ChainSettings,
    count: usize,
    stream: u64,
) -> (Vec<crate::density::Configuration>, ChainDiagnostics) {
    let mut chain = Chain::new(n, kappa_n, lambda_n, s.initial_step, s.seed, stream);
    chain.burn(s.burn_in, s.target_acceptance);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..s.thinning {
            chain.sweep();
        }
        out.push(chain.current_configuration());
    }
    let diag = ChainDiagnostics {
        acceptance_rate: if chain.proposed == 0 {
            0.0
        } else {
            chain.accepted as f64 / chain.proposed as f64
        },
        final_step: chain.step,
        sweeps_run: s.burn_in + count * s.thinning,
    };
    (out, diag)
}

/// Draws `count` configurations from the n-particle Gibbs measure with a
/// single chain (stream 0). Deterministic given the settings.
pub fn sample_chain(
    p: &FiniteParams,
    s: &ChainSettings,
    count: usize,
) -> Result<(Vec<crate::density::Configuration>, ChainDiagnostics)> {
    s.validate()?;
    if count < 1 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    Ok(run_single_chain(p.n, p.kappa_n, p.lambda_n, s, count, 0))
}

/// Internal: split `count` across `chains` parallel workers on disjoint RNG
/// streams (stream = chain index), keeping per-chain sample blocks in chain
/// order for downstream per-chain statistics.
pub(crate) fn run_chain_blocks(
    n: usize,
    kappa_n: f64,
    lambda_n: f64,
    s: &ChainSettings,
    count: usize,
    chains: usize,
) -> Vec<(Vec<crate::density::Configuration>, ChainDiagnostics)> {
    let chains = chains.clamp(1, count.max(1));
    let per: Vec<usize> = (0..chains)
        .map(|c| count / chains + usize::from(c < count % chains))
        .collect();
    (0..chains)
        .into_par_iter()
        .map(|c| run_single_chain(n, kappa_n, lambda_n, s, per[c], c as u64))
        .collect()
}

/// Draws `count` configurations using `chains` parallel chains on disjoint
/// streams, merged deterministically by chain index (independent of thread
/// scheduling and thread count).
pub fn sample_chains(
    p: &FiniteParams,
    s: &ChainSettings,
    count: usize,
    chains: usize,
) -> Result<(Vec<crate::density::Configuration>, Vec<ChainDiagnostics>)> {
    s.validate()?;
    if count < 1 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    if chains < 1 {
        return Err(Error::InvalidParameter("chains must be >= 1".into()));
    }
    let blocks = run_chain_blocks(p.n, p.kappa_n, p.lambda_n, s, count, chains);
    let mut all = Vec::with_capacity(count);
    let mut diags = Vec::with_capacity(blocks.len());
    for (samples, diag) in blocks {
        all.extend(samples);
        diags.push(diag);
    }
    Ok((all, diags))
}

/// Draws (n-1)-coordinate configurations from the reduced measure: the law of
/// n-1 particles carrying the full n-particle confinement strength. Since
/// `-2n V_N` depends only on κ(N) and λ(N), this is the chain with n-1
/// particles at the same field strengths.
pub fn sample_reduced_chain(
    p: &FiniteParams,
    s: &ChainSettings,
    count: usize,
) -> Result<(Vec<crate::density::Configuration>, ChainDiagnostics)> {
    s.validate()?;
    if p.n < 2 {
        return Err(Error::InvalidParameter(
            "reduced chain needs n >= 2 particles".into(),
        ));
    }
    if count < 1 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    Ok(run_single_chain(
        p.n - 1,
        p.kappa_n,
        p.lambda_n,
        s,
        count,
        0,
    ))
}

/// Bins a configuration into the empirical measure on `cells` uniform cells:
/// mass 1/n deposited at each particle's enclosing cell.
pub fn empirical_measure(c: &crate::density::Configuration, cells: usize) -> Result<GridMeasure> {
    if c.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    if cells == 0 {
        return Err(Error::InvalidParameter("cells must be >= 1".into()));
    }
    let n = c.len() as f64;
    let mut masses = vec![0.0; cells];
    for &x in c.positions() {
        let idx = ((x * cells as f64) as usize).min(cells - 1);
        masses[idx] += 1.0 / n;
    }
    GridMeasure::from_weights(masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_statistic;
    use statrs::distribution::{Beta, ContinuousCDF};

    fn fp(n: usize, k: f64, l: f64) -> FiniteParams {
        FiniteParams::new(n, k, l).unwrap()
    }

    #[test]
    fn reflection_folds_into_unit_interval() {
        assert_eq!(reflect(0.3), 0.3);
        assert_eq!(reflect(-0.2), 0.2);
        assert_eq!(reflect(1.25), 0.75);
        assert_eq!(reflect(0.0), 0.0);
        assert_eq!(reflect(1.0), 1.0);
        assert!((reflect(2.3) - 0.3).abs() < 1e-12); // double fold
    }

    #[test]
    fn incremental_log_density_matches_full_recompute() {
        // After many sweeps the running log-density agrees with a from-scratch
        // evaluation to 1e-9.
        let mut chain = Chain::new(8, 3.0, 1.5, 0.1, 42, 0);
        for block in 0..3 {
            for _ in 0..1000 {
                chain.sweep();
            }
            let mut sorted = chain.x.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let full = log_density_sorted(&sorted, chain.kappa_n, chain.lambda_n);
            assert!(
                (chain.log_density - full).abs() <= 1e-9,
                "block {block}: drift {}",
                (chain.log_density - full).abs()
            );
        }
    }

    #[test]
    fn replayed_moves_match_full_density_decisions() {
        // Two chains with identical RNG streams: one uses the incremental O(n)
        // delta (production path), the other recomputes both full densities for
        // every proposal. Their trajectories must match move for move.
        let n = 6;
        let (k, l) = (2.0, 1.0);
        let mut fast = Chain::new(n, k, l, 0.15, 7, 0);
        let mut slow_x: Vec<f64> = fast.x.clone();
        let mut slow_rng = ChaCha8Rng::seed_from_u64(7);
        slow_rng.set_stream(0);
        for _ in 0..500 {
            // Replay one sweep manually against the slow path.
            for i in 0..n {
                let offset: f64 = slow_rng.random::<f64>() * 2.0 - 1.0;
                let prop = reflect(slow_x[i] + 0.15 * offset);
                let mut cur_sorted = slow_x.clone();
                cur_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut prop_vec = slow_x.clone();
                prop_vec[i] = prop;
                let mut prop_sorted = prop_vec.clone();
                prop_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let delta = log_density_sorted(&prop_sorted, k, l)
                    - log_density_sorted(&cur_sorted, k, l);
                let u: f64 = slow_rng.random();
                if u.ln() < delta {
                    slow_x = prop_vec;
                }
            }
            fast.sweep();
            for i in 0..n {
                assert!(
                    (fast.x[i] - slow_x[i]).abs() < 1e-9,
                    "trajectories diverged at coordinate {i}"
                );
            }
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = fp(5, 2.0, 1.0);
        let s = ChainSettings::for_particles(5, 99);
        let (a, da) = sample_chain(&p, &s, 20).unwrap();
        let (b, db) = sample_chain(&p, &s, 20).unwrap();
        assert_eq!(a, b);
        assert_eq!(da, db);
        // Parallel version: identical regardless of chain count ordering.
        let (c1, _) = sample_chains(&p, &s, 30, 3).unwrap();
        let (c2, _) = sample_chains(&p, &s, 30, 3).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn distinct_streams_differ() {
        let p = fp(4, 1.0, 1.0);
        let s = ChainSettings::for_particles(4, 5);
        let (all, diags) = sample_chains(&p, &s, 8, 2).unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(diags.len(), 2);
        // First sample of each chain's block should differ (disjoint streams).
        assert_ne!(all[0], all[4]);
    }

    #[test]
    fn single_particle_law_is_beta() {
        // n=1, κ(N)=1, λ(N)=1: density ∝ x(1-x) = Beta(2,2).
        let p = fp(1, 1.0, 1.0);
        let s = ChainSettings {
            burn_in: 500,
            thinning: 8,
            initial_step: 0.3,
            target_acceptance: 0.4,
            seed: 1234,
        };
        let count = 100_000;
        let (samples, diag) = sample_chain(&p, &s, count).unwrap();
        assert!(diag.acceptance_rate > 0.0 && diag.acceptance_rate < 1.0);
        let mut xs: Vec<f64> = samples.iter().map(|c| c.positions()[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let beta = Beta::new(2.0, 2.0).unwrap();
        let ks = ks_statistic(&xs, |x| beta.cdf(x));
        // Frozen closed form for the same CDF: 3x² - 2x³.
        let ks_closed = ks_statistic(&xs, |x| x * x * (3.0 - 2.0 * x));
        assert!((ks - ks_closed).abs() < 1e-12);
        let critical = 1.628 / (count as f64).sqrt();
        assert!(ks < critical, "KS {ks} vs critical {critical}");
    }

    #[test]
    fn single_particle_generic_beta_law() {
        // n=1 generic field: Beta(κ(N)+1, λ(N)+1).
        let p = fp(1, 3.0, 0.5);
        let s = ChainSettings {
            burn_in: 500,
            thinning: 8,
            initial_step: 0.3,
            target_acceptance: 0.4,
            seed: 777,
        };
        let count = 100_000;
        let (samples, _) = sample_chain(&p, &s, count).unwrap();
        let mut xs: Vec<f64> = samples.iter().map(|c| c.positions()[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let beta = Beta::new(4.0, 1.5).unwrap();
        let ks = ks_statistic(&xs, |x| beta.cdf(x));
        let critical = 1.628 / (count as f64).sqrt();
        assert!(ks < critical, "KS {ks} vs critical {critical}");
    }

    #[test]
    fn two_particle_zero_field_mean_is_half() {
        let p = fp(2, 0.0, 0.0);
        let s = ChainSettings {
            burn_in: 1000,
            thinning: 4,
            initial_step: 0.2,
            target_acceptance: 0.4,
            seed: 31,
        };
        let (samples, _) = sample_chain(&p, &s, 20_000).unwrap();
        let vals: Vec<f64> = samples
            .iter()
            .map(|c| (c.positions()[0] + c.positions()[1]) / 2.0)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (vals.len() as f64 - 1.0);
        let ess = crate::stats::effective_sample_size(&vals);
        let se = (var / ess).sqrt();
        assert!(
            (mean - 0.5).abs() < 3.0 * se.max(1e-4),
            "mean {mean} (se {se})"
        );
    }

    #[test]
    fn reduced_chain_two_particles_is_beta() {
        // p.n = 2 reduces to one particle with density ∝ x^κ(1-x)^λ.
        let p = fp(2, 2.0, 1.0);
        let s = ChainSettings {
            burn_in: 500,
            thinning: 8,
            initial_step: 0.3,
            target_acceptance: 0.4,
            seed: 55,
        };
        let count = 50_000;
        let (samples, _) = sample_reduced_chain(&p, &s, count).unwrap();
        assert!(samples.iter().all(|c| c.len() == 1));
        let mut xs: Vec<f64> = samples.iter().map(|c| c.positions()[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let beta = Beta::new(3.0, 2.0).unwrap();
        let ks = ks_statistic(&xs, |x| beta.cdf(x));
        let critical = 1.628 / (count as f64).sqrt();
        assert!(ks < critical, "KS {ks} vs critical {critical}");
    }

    #[test]
    fn reduced_chain_matches_direct_smaller_chain() {
        // p.n = 3 reduced == direct 2-particle chain at the same field
        // strengths: compare first and second moments within 3 SE.
        let s1 = ChainSettings {
            burn_in: 2000,
            thinning: 6,
            initial_step: 0.2,
            target_acceptance: 0.4,
            seed: 101,
        };
        let s2 = ChainSettings { seed: 202, ..s1 };
        let count = 30_000;
        let (red, _) = sample_reduced_chain(&fp(3, 2.0, 1.0), &s1, count).unwrap();
        let (dir, _) = sample_chain(&fp(2, 2.0, 1.0), &s2, count).unwrap();
        for (label, f) in [
            ("mean", Box::new(|c: &crate::density::Configuration| {
                c.positions().iter().sum::<f64>() / c.len() as f64
            }) as Box<dyn Fn(&crate::density::Configuration) -> f64>),
            ("second moment", Box::new(|c: &crate::density::Configuration| {
                c.positions().iter().map(|x| x * x).sum::<f64>() / c.len() as f64
            })),
        ] {
            let a: Vec<f64> = red.iter().map(&f).collect();
            let b: Vec<f64> = dir.iter().map(&f).collect();
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / (a.len() as f64 - 1.0);
            let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / (b.len() as f64 - 1.0);
            let se = (va / crate::stats::effective_sample_size(&a)
                + vb / crate::stats::effective_sample_size(&b))
            .sqrt();
            assert!(
                (ma - mb).abs() < 3.0 * se,
                "{label}: {ma} vs {mb} (se {se})"
            );
        }
    }

    #[test]
    fn reduced_chain_rejects_single_particle() {
        let s = ChainSettings::for_particles(1, 0);
        assert!(sample_reduced_chain(&fp(1, 1.0, 1.0), &s, 5).is_err());
    }

    #[test]
    fn empirical_measure_binning() {
        let c = crate::density::Configuration::new(vec![0.5]).unwrap();
        let mu = empirical_measure(&c, 4).unwrap();
        assert_eq!(mu.weights(), &[0.0, 0.0, 1.0, 0.0]);

        let c = crate::density::Configuration::new(vec![0.25, 0.75]).unwrap();
        let mu = empirical_measure(&c, 2).unwrap();
        assert_eq!(mu.weights(), &[0.5, 0.5]);

        // x = 1 belongs to the last cell.
        let c = crate::density::Configuration::new(vec![1.0, 0.0]).unwrap();
        let mu = empirical_measure(&c, 3).unwrap();
        assert_eq!(mu.weights(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn settings_validation() {
        let mut s = ChainSettings::for_particles(4, 0);
        s.thinning = 0;
        assert!(s.validate().is_err());
        let mut s = ChainSettings::for_particles(4, 0);
        s.initial_step = 0.0;
        assert!(s.validate().is_err());
        let mut s = ChainSettings::for_particles(4, 0);
        s.target_acceptance = 1.0;
        assert!(s.validate().is_err());
        assert!(ChainSettings::for_particles(4, 0).validate().is_ok());
    }

    #[test]
    fn diagnostics_fields_are_sane() {
        let p = fp(3, 1.0, 1.0);
        let s = ChainSettings::for_particles(3, 8);
        let (_, d) = sample_chain(&p, &s, 10).unwrap();
        assert!((0.0..=1.0).contains(&d.acceptance_rate));
        assert!(d.final_step > 0.0);
        assert_eq!(d.sweeps_run, s.burn_in + 10 * s.thinning);
    }
}
