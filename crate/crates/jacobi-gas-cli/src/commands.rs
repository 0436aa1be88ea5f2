//! Command implementations.
//!
//! Each command validates everything it can up front, runs the computation,
//! builds every output file in memory, and only then touches the filesystem:
//! the output directory is created, the data files are written, and a
//! `manifest.txt` listing every file with its SHA-256 goes last. A run that
//! fails before the write phase leaves no partial outputs.
//!
//! All CSV tables carry a header row and 17-significant-digit reals
//! (`%.16e`); summary files are `key = value` text with shortest round-trip
//! floats.

use crate::config::ExperimentConfig;
use crate::manifest::RunManifest;
use jacobi_gas::ldp::{
    estimate_gamma, estimate_outlier_probability, fit_rate, GammaEstimate, OutlierEstimate,
};
use jacobi_gas::params::{FiniteParams, ScalingFamily};
use jacobi_gas::sampler::{empirical_measure, sample_chains, ChainSettings};
use jacobi_gas::stats::kolmogorov_distance;
use jacobi_gas::{solve_equilibrium, EquilibriumSolution};
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

/// Command failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed, or inconsistent configuration (exit 2).
    Config(String),
    /// Numeric non-convergence (exit 3).
    Numeric(String),
    /// Insufficient statistics for a requested fit (exit 4); per-scale
    /// estimate files are written before this is raised.
    Stats(String),
    /// Filesystem failure while writing outputs (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Stats(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Stats(m) => write!(f, "insufficient statistics: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<jacobi_gas::Error> for CliError {
    fn from(e: jacobi_gas::Error) -> Self {
        match &e {
            jacobi_gas::Error::NotConverged { .. } | jacobi_gas::Error::GridLimited { .. } => {
                CliError::Numeric(e.to_string())
            }
            jacobi_gas::Error::InsufficientStatistics(m) => CliError::Stats(m.clone()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// 17-significant-digit scientific notation for CSV cells.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for stage `tag` under base seed `base`. Different tags give
/// unrelated streams; the same pair always gives the same seed.
fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const TAG_SAMPLE: u64 = 1;

fn tag_outlier(index: usize) -> u64 {
    10 + 2 * index as u64
}

fn tag_gamma(index: usize) -> u64 {
    11 + 2 * index as u64
}

/// Chain settings for an n-particle stage: library defaults with the config's
/// explicit overrides applied.
fn chain_settings(cfg: &ExperimentConfig, n: usize, seed: u64) -> ChainSettings {
    let mut s = ChainSettings::for_particles(n, seed);
    if let Some(b) = cfg.chain.burn_in {
        s.burn_in = b;
    }
    if let Some(t) = cfg.chain.thinning {
        s.thinning = t;
    }
    if let Some(step) = cfg.chain.initial_step {
        s.initial_step = step;
    }
    if let Some(a) = cfg.chain.target_acceptance {
        s.target_acceptance = a;
    }
    s
}

/// Canonical text whose SHA-256 identifies the experiment. Output placement
/// and thread count never change the data, so both are normalized out before
/// hashing: the same experiment hashes equally under `--out`/`--threads`
/// overrides.
fn config_hash_input(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.out_dir = PathBuf::from("out");
    c.threads = None;
    c.canonical()
}

/// In-memory output set: contents are final before anything is written.
struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Records every file in the manifest, then writes the files and the
    /// manifest itself into `dir`.
    fn write_all(self, dir: &PathBuf, mut manifest: RunManifest) -> Result<(), CliError> {
        for (name, contents) in &self.files {
            manifest.record_file(name, contents.as_bytes());
        }
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        std::fs::write(dir.join("manifest.txt"), manifest.render())?;
        Ok(())
    }
}

fn solve(cfg: &ExperimentConfig) -> Result<EquilibriumSolution, CliError> {
    Ok(solve_equilibrium(
        &cfg.limits,
        cfg.equilibrium.cells,
        cfg.equilibrium.tol,
        cfg.equilibrium.max_iters,
    )?)
}

/// Support interval edges from the node mask: left edge of the first
/// supported cell, right edge of the last.
fn support_interval(sol: &EquilibriumSolution) -> Option<(f64, f64)> {
    let m = sol.support_mask.len();
    let first = sol.support_mask.iter().position(|&s| s)?;
    let last = sol.support_mask.iter().rposition(|&s| s)?;
    Some((first as f64 / m as f64, (last + 1) as f64 / m as f64))
}

/// `equilibrium`: solve for μ₀ and export the measure, the effective
/// potential, and the constants.
pub fn cmd_equilibrium(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let manifest_start = Instant::now();
    let mut manifest = RunManifest::new("equilibrium", &config_hash_input(cfg), cfg.seed);

    let t = Instant::now();
    let sol = solve(cfg)?;
    manifest.record_timing("solve", t.elapsed().as_millis());

    let mut csv = String::from("node,weight,cdf,veff,in_support\n");
    let cdf = sol.mu0.cdf();
    for (i, &(node, veff)) in sol.veff_table.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_real(node),
            fmt_real(sol.mu0.weights()[i]),
            fmt_real(cdf[i]),
            fmt_real(veff),
            u8::from(sol.support_mask[i]),
        );
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "command = equilibrium");
    let _ = writeln!(summary, "limits.rho = {}", cfg.limits.rho);
    let _ = writeln!(summary, "limits.kappa = {}", cfg.limits.kappa);
    let _ = writeln!(summary, "limits.lambda = {}", cfg.limits.lambda);
    let _ = writeln!(summary, "cells = {}", cfg.equilibrium.cells);
    let _ = writeln!(summary, "tol = {}", cfg.equilibrium.tol);
    let _ = writeln!(summary, "b = {}", sol.b);
    let _ = writeln!(summary, "d = {}", sol.d);
    let _ = writeln!(summary, "kkt_residual = {}", sol.kkt_residual);
    let _ = writeln!(summary, "minus_two_rho_d = {}", -2.0 * cfg.limits.rho * sol.d);
    if let Some((lo, hi)) = support_interval(&sol) {
        let _ = writeln!(summary, "support.lo = {lo}");
        let _ = writeln!(summary, "support.hi = {hi}");
    }

    let mut out = OutputSet::new();
    out.add("equilibrium.csv", csv);
    out.add("equilibrium_summary.txt", summary);
    manifest.record_timing("total", manifest_start.elapsed().as_millis());
    out.write_all(&cfg.out_dir, manifest)
}

/// `sample`: draw configurations at one scale and export them with chain
/// diagnostics and an empirical-vs-equilibrium histogram overlay.
pub fn cmd_sample(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let big_n = cfg.sample_big_n.unwrap_or(*cfg.n_list.last().expect("n_list nonempty"));
    if cfg.equilibrium.cells % cfg.hist_cells != 0 {
        return Err(CliError::Config(format!(
            "sample.hist_cells ({}) must divide equilibrium.cells ({})",
            cfg.hist_cells, cfg.equilibrium.cells
        )));
    }
    let family = cfg.family().map_err(CliError::Config)?;
    let p = family
        .params_for(big_n)
        .expect("sample scale validated against n_list");

    let manifest_start = Instant::now();
    let mut manifest = RunManifest::new("sample", &config_hash_input(cfg), cfg.seed);
    let seed = derive_seed(cfg.seed, TAG_SAMPLE);
    manifest.record_seed("sample", seed);

    let t = Instant::now();
    let sol = solve(cfg)?;
    manifest.record_timing("solve", t.elapsed().as_millis());

    let t = Instant::now();
    let (samples, diags) = if cfg.sample_count == 0 {
        (Vec::new(), Vec::new())
    } else {
        sample_chains(
            &p,
            &chain_settings(cfg, p.n, seed),
            cfg.sample_count,
            cfg.chain.chains,
        )?
    };
    manifest.record_timing("sample", t.elapsed().as_millis());

    let mut samples_csv = String::from("sample,particle,position\n");
    for (s, c) in samples.iter().enumerate() {
        for (j, &x) in c.positions().iter().enumerate() {
            let _ = writeln!(samples_csv, "{s},{j},{}", fmt_real(x));
        }
    }

    // Histogram overlay: the empirical measure averaged over all samples
    // against μ₀, both coarsened to hist_cells.
    let hist = cfg.hist_cells;
    let block = cfg.equilibrium.cells / hist;
    let mut emp_mass = vec![0.0f64; hist];
    if !samples.is_empty() {
        let per_particle = 1.0 / (p.n as f64 * samples.len() as f64);
        for c in &samples {
            for &x in c.positions() {
                let idx = ((x * hist as f64) as usize).min(hist - 1);
                emp_mass[idx] += per_particle;
            }
        }
    }
    let eq_mass: Vec<f64> = sol
        .mu0
        .weights()
        .chunks_exact(block)
        .map(|b| b.iter().sum())
        .collect();
    let h = 1.0 / hist as f64;
    let mut histogram_csv =
        String::from("node,empirical_density,equilibrium_density,empirical_cdf,equilibrium_cdf\n");
    let (mut emp_cdf, mut eq_cdf) = (0.0f64, 0.0f64);
    for i in 0..hist {
        emp_cdf += emp_mass[i];
        eq_cdf += eq_mass[i];
        let _ = writeln!(
            histogram_csv,
            "{},{},{},{},{}",
            fmt_real((i as f64 + 0.5) * h),
            fmt_real(emp_mass[i] / h),
            fmt_real(eq_mass[i] / h),
            fmt_real(emp_cdf),
            fmt_real(eq_cdf),
        );
    }

    // Mean per-sample Kolmogorov distance to μ₀ at full solver resolution.
    let mut kolmogorov_mean = None;
    if !samples.is_empty() {
        let mut total = 0.0;
        for c in &samples {
            let emp = empirical_measure(c, sol.mu0.cells())?;
            total += kolmogorov_distance(&emp, &sol.mu0)?;
        }
        kolmogorov_mean = Some(total / samples.len() as f64);
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "command = sample");
    let _ = writeln!(summary, "big_n = {big_n}");
    let _ = writeln!(summary, "n = {}", p.n);
    let _ = writeln!(summary, "kappa_n = {}", p.kappa_n);
    let _ = writeln!(summary, "lambda_n = {}", p.lambda_n);
    let _ = writeln!(summary, "samples = {}", samples.len());
    let _ = writeln!(summary, "chains = {}", diags.len());
    if let Some(k) = kolmogorov_mean {
        let _ = writeln!(summary, "kolmogorov.mean = {k}");
    }
    for (c, d) in diags.iter().enumerate() {
        let _ = writeln!(summary, "chain.{c}.acceptance_rate = {}", d.acceptance_rate);
        let _ = writeln!(summary, "chain.{c}.final_step = {}", d.final_step);
        let _ = writeln!(summary, "chain.{c}.sweeps = {}", d.sweeps_run);
    }

    let mut out = OutputSet::new();
    out.add("samples.csv", samples_csv);
    out.add("histogram.csv", histogram_csv);
    out.add("sample_summary.txt", summary);
    manifest.record_timing("total", manifest_start.elapsed().as_millis());
    out.write_all(&cfg.out_dir, manifest)
}

/// One scale's worth of ldp/sandwich results.
struct ScaleRow {
    params: FiniteParams,
    outlier: OutlierEstimate,
    gamma: Option<GammaEstimate>,
}

/// Joint 3-standard-error sandwich verdicts: lower bound `ratio ≤ p̂`, upper
/// bound `p̂ ≤ n·ratio`, each allowed to fail by at most three joint standard
/// errors of the compared pair.
fn sandwich_verdicts(n: usize, o: &OutlierEstimate, g: &GammaEstimate) -> (bool, bool) {
    let upper = n as f64 * g.ratio;
    let lower_band = 3.0 * g.ratio_std_err.hypot(o.std_err);
    let upper_band = 3.0 * (n as f64 * g.ratio_std_err).hypot(o.std_err);
    (
        g.ratio - o.p_hat <= lower_band,
        o.p_hat - upper <= upper_band,
    )
}

const ESTIMATES_HEADER: &str = "big_n,n,kappa_n,lambda_n,trials,hits,p_hat,p_std_err,ess,\
gamma_status,gamma_samples,log_gamma_x,log_gamma_full,log_gamma_full_std_err,ratio,\
ratio_std_err,sandwich_lower,sandwich_upper,sandwich_lower_ok,sandwich_upper_ok";

fn estimates_row(row: &ScaleRow) -> String {
    let o = &row.outlier;
    let mut s = format!(
        "{},{},{},{},{},{},{},{},{}",
        o.big_n,
        row.params.n,
        fmt_real(row.params.kappa_n),
        fmt_real(row.params.lambda_n),
        o.trials,
        o.hits,
        fmt_real(o.p_hat),
        fmt_real(o.std_err),
        fmt_real(o.ess),
    );
    match &row.gamma {
        Some(g) => {
            let (lower_ok, upper_ok) = sandwich_verdicts(row.params.n, o, g);
            let verdict = |ok: bool| if ok { "pass" } else { "fail" };
            let _ = write!(
                s,
                ",ok,{},{},{},{},{},{},{},{},{},{}",
                g.samples,
                fmt_real(g.log_gamma_x),
                fmt_real(g.log_gamma_full),
                fmt_real(g.log_gamma_full_std_err),
                fmt_real(g.ratio),
                fmt_real(g.ratio_std_err),
                fmt_real(g.ratio),
                fmt_real(row.params.n as f64 * g.ratio),
                verdict(lower_ok),
                verdict(upper_ok),
            );
        }
        None => {
            let nan = fmt_real(f64::NAN);
            let _ = write!(
                s,
                ",skipped,0,{nan},{nan},{nan},{nan},{nan},{nan},{nan},skipped,skipped"
            );
        }
    }
    s
}

/// Runs the per-scale estimation loop shared by `ldp` and `sandwich`: outlier
/// probability at every scale, γ ratios wherever the reduced chain exists
/// (n ≥ 2).
fn estimate_scales(
    cfg: &ExperimentConfig,
    family: &ScalingFamily,
    manifest: &mut RunManifest,
) -> Result<Vec<ScaleRow>, CliError> {
    let region = cfg
        .region
        .as_ref()
        .expect("region checked by the caller");
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for (i, &big_n) in cfg.n_list.iter().enumerate() {
        let p = family
            .params_for(big_n)
            .expect("family built from n_list");

        let seed = derive_seed(cfg.seed, tag_outlier(i));
        manifest.record_seed(&format!("outlier.{big_n}"), seed);
        let t = Instant::now();
        let outlier = estimate_outlier_probability(
            family,
            big_n,
            region,
            cfg.ldp_trials[i],
            &chain_settings(cfg, p.n, seed),
            cfg.chain.chains,
        )?;
        manifest.record_timing(&format!("outlier.{big_n}"), t.elapsed().as_millis());

        let gamma = if p.n >= 2 {
            let seed = derive_seed(cfg.seed, tag_gamma(i));
            manifest.record_seed(&format!("gamma.{big_n}"), seed);
            let t = Instant::now();
            let g = estimate_gamma(
                family,
                big_n,
                region,
                cfg.gamma_trials,
                cfg.quad_cells,
                &chain_settings(cfg, p.n - 1, seed),
                cfg.chain.chains,
            )?;
            manifest.record_timing(&format!("gamma.{big_n}"), t.elapsed().as_millis());
            Some(g)
        } else {
            None
        };

        rows.push(ScaleRow {
            params: p,
            outlier,
            gamma,
        });
    }
    Ok(rows)
}

fn region_text(cfg: &ExperimentConfig) -> String {
    cfg.region
        .as_ref()
        .expect("region checked by the caller")
        .intervals()
        .iter()
        .map(|(a, b)| format!("{a}:{b}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn estimates_csv(rows: &[ScaleRow]) -> String {
    let mut csv = String::from(ESTIMATES_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&estimates_row(row));
        csv.push('\n');
    }
    csv
}

/// `ldp`: the full verification pipeline — equilibrium solve, per-scale
/// estimates, sandwich verdicts, and the rate fit against `-2ρ·inf_X V_eff`.
///
/// A fit refused for insufficient statistics still writes every per-scale
/// file and the manifest, then exits with the statistics code.
pub fn cmd_ldp(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.region.is_none() {
        return Err(CliError::Config("ldp requires region.x".into()));
    }
    let family = cfg.family().map_err(CliError::Config)?;

    let manifest_start = Instant::now();
    let mut manifest = RunManifest::new("ldp", &config_hash_input(cfg), cfg.seed);

    let t = Instant::now();
    let sol = solve(cfg)?;
    manifest.record_timing("solve", t.elapsed().as_millis());

    let rows = estimate_scales(cfg, &family, &mut manifest)?;

    let estimates: Vec<OutlierEstimate> = rows.iter().map(|r| r.outlier.clone()).collect();
    let region = cfg.region.as_ref().expect("checked above");
    // A region every configuration hits leaves nothing to fit: log p̂ ≡ 0
    // carries no decay information, so refuse rather than report a vacuous
    // zero slope.
    let fit = if estimates.iter().all(|e| e.p_hat == 1.0) {
        Err(jacobi_gas::Error::InsufficientStatistics(
            "every scale saturated (p_hat = 1 at every N), so there is no \
             decay to fit; shrink region.x"
                .into(),
        ))
    } else {
        fit_rate(&estimates, region, &sol, &cfg.limits)
    };

    let mut summary = String::new();
    let _ = writeln!(summary, "command = ldp");
    let _ = writeln!(summary, "region.x = {}", region_text(cfg));
    let _ = writeln!(summary, "equilibrium.b = {}", sol.b);
    let _ = writeln!(summary, "equilibrium.d = {}", sol.d);
    let _ = writeln!(summary, "equilibrium.kkt_residual = {}", sol.kkt_residual);
    let _ = writeln!(
        summary,
        "gamma.minus_two_rho_d = {}",
        -2.0 * cfg.limits.rho * sol.d
    );
    for row in &rows {
        if let Some(g) = &row.gamma {
            if let Some(rec) = g.recommended_cells {
                let _ = writeln!(
                    summary,
                    "gamma.{}.recommended_cells = {rec}",
                    row.outlier.big_n
                );
            }
        }
    }
    let refusal = match fit {
        Ok(rate) => {
            let _ = writeln!(summary, "fit.status = ok");
            let _ = writeln!(summary, "fit.fitted_slope = {}", rate.fitted_slope);
            let _ = writeln!(summary, "fit.slope_std_err = {}", rate.slope_std_err);
            let _ = writeln!(summary, "fit.theoretical_rate = {}", rate.theoretical_rate);
            if rate.theoretical_rate == 0.0 {
                let _ = writeln!(summary, "fit.decay = none");
            } else {
                let _ = writeln!(summary, "fit.decay = exponential");
                let _ = writeln!(
                    summary,
                    "fit.relative_error = {}",
                    (rate.fitted_slope - rate.theoretical_rate).abs()
                        / rate.theoretical_rate.abs()
                );
            }
            None
        }
        Err(jacobi_gas::Error::InsufficientStatistics(msg)) => {
            let _ = writeln!(summary, "fit.status = refused");
            let _ = writeln!(summary, "fit.reason = {msg}");
            Some(msg)
        }
        Err(e) => return Err(e.into()),
    };

    let mut out = OutputSet::new();
    out.add("ldp_estimates.csv", estimates_csv(&rows));
    out.add("ldp_summary.txt", summary);
    manifest.record_timing("total", manifest_start.elapsed().as_millis());
    out.write_all(&cfg.out_dir, manifest)?;

    match refusal {
        Some(msg) => Err(CliError::Stats(msg)),
        None => Ok(()),
    }
}

/// `sandwich`: per-scale sandwich-inequality checks only — no equilibrium
/// solve and no rate fit, so the command succeeds whenever the estimates can
/// be produced.
pub fn cmd_sandwich(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.region.is_none() {
        return Err(CliError::Config("sandwich requires region.x".into()));
    }
    let family = cfg.family().map_err(CliError::Config)?;

    let manifest_start = Instant::now();
    let mut manifest = RunManifest::new("sandwich", &config_hash_input(cfg), cfg.seed);
    let rows = estimate_scales(cfg, &family, &mut manifest)?;

    let (mut pass, mut fail, mut skipped) = (0usize, 0usize, 0usize);
    for row in &rows {
        match &row.gamma {
            Some(g) => {
                let (lower_ok, upper_ok) = sandwich_verdicts(row.params.n, &row.outlier, g);
                if lower_ok && upper_ok {
                    pass += 1;
                } else {
                    fail += 1;
                }
            }
            None => skipped += 1,
        }
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "command = sandwich");
    let _ = writeln!(summary, "region.x = {}", region_text(cfg));
    let _ = writeln!(summary, "sandwich.pass = {pass}");
    let _ = writeln!(summary, "sandwich.fail = {fail}");
    let _ = writeln!(summary, "sandwich.skipped = {skipped}");

    let mut out = OutputSet::new();
    out.add("sandwich_estimates.csv", estimates_csv(&rows));
    out.add("sandwich_summary.txt", summary);
    manifest.record_timing("total", manifest_start.elapsed().as_millis());
    out.write_all(&cfg.out_dir, manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_real_has_17_significant_digits() {
        assert_eq!(fmt_real(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_real(-1.0 / 3.0), "-3.3333333333333331e-1");
        assert_eq!(fmt_real(f64::NAN), "NaN");
        // Round-trips exactly.
        let x = 0.1f64.sin() * 1e-7;
        assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let base = 42;
        let a = derive_seed(base, TAG_SAMPLE);
        assert_eq!(a, derive_seed(base, TAG_SAMPLE), "same tag, same seed");
        let mut seen = vec![a];
        for i in 0..4 {
            for tag in [tag_outlier(i), tag_gamma(i)] {
                let s = derive_seed(base, tag);
                assert!(!seen.contains(&s), "tag collision at {tag}");
                seen.push(s);
            }
        }
        assert_ne!(derive_seed(0, TAG_SAMPLE), derive_seed(1, TAG_SAMPLE));
    }

    #[test]
    fn sandwich_verdicts_flag_violations() {
        let o = |p_hat: f64, se: f64| OutlierEstimate {
            big_n: 8,
            trials: 100,
            hits: (100.0 * p_hat) as usize,
            p_hat,
            std_err: se,
            ess: 100.0,
        };
        let g = |ratio: f64, se: f64| GammaEstimate {
            log_gamma_x: 0.0,
            log_gamma_full: 0.0,
            log_gamma_full_std_err: 0.0,
            ratio,
            ratio_std_err: se,
            samples: 100,
            recommended_cells: None,
        };
        // p̂ inside [ratio, n·ratio]: both hold.
        assert_eq!(sandwich_verdicts(8, &o(0.1, 1e-3), &g(0.05, 1e-3)), (true, true));
        // p̂ far below the lower bound: lower check fails.
        assert_eq!(sandwich_verdicts(8, &o(0.001, 1e-4), &g(0.5, 1e-4)).0, false);
        // p̂ far above n·ratio: upper check fails.
        assert_eq!(sandwich_verdicts(2, &o(0.9, 1e-4), &g(0.01, 1e-4)).1, false);
        // A violation inside the joint 3SE band still passes.
        assert_eq!(sandwich_verdicts(8, &o(0.10, 0.05), &g(0.11, 0.05)).0, true);
    }

    #[test]
    fn estimates_row_matches_header_arity() {
        let cols = ESTIMATES_HEADER.split(',').count();
        let row = ScaleRow {
            params: FiniteParams::new(4, 2.0, 1.0).unwrap(),
            outlier: OutlierEstimate {
                big_n: 4,
                trials: 10,
                hits: 3,
                p_hat: 0.3,
                std_err: 0.1,
                ess: 9.0,
            },
            gamma: None,
        };
        assert_eq!(estimates_row(&row).split(',').count(), cols);
        let row_with_gamma = ScaleRow {
            gamma: Some(GammaEstimate {
                log_gamma_x: -1.0,
                log_gamma_full: -0.5,
                log_gamma_full_std_err: 0.01,
                ratio: 0.6,
                ratio_std_err: 0.02,
                samples: 10,
                recommended_cells: Some(256),
            }),
            ..row
        };
        assert_eq!(estimates_row(&row_with_gamma).split(',').count(), cols);
    }
}
