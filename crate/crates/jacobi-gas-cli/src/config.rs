//! Experiment configuration: flat `key = value` text with dotted section keys.
//!
//! The format is line-oriented: one `key = value` pair per line, `#` starts a
//! comment, blank lines are ignored, keys are lowercase and dotted. Lists are
//! comma-separated; region intervals are `lo:hi` pairs. The full schema is
//! documented in the repository README. Parsing validates every key and value;
//! unknown or duplicate keys are errors so typos cannot silently change an
//! experiment. [`ExperimentConfig::canonical`] re-serializes a parsed config
//! into a canonical form (schema order, shortest round-trip floats) whose
//! parse is identical — the canonical text is what gets hashed into manifests.

use jacobi_gas::ldp::Region;
use jacobi_gas::params::{LimitParams, ScalingEntry, ScalingFamily};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

/// How finite-scale parameters are produced from the limit parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalingRule {
    /// `n = ⌈ρN⌉`, `κ(N) = κN`, `λ(N) = λN`.
    Exact,
    /// Explicit `(n, κ(N), λ(N))` per scale, keyed by N.
    Table(BTreeMap<usize, (usize, f64, f64)>),
}

/// Optional per-chain overrides; unset fields fall back to the per-scale
/// defaults (burn-in `200·n`, thinning `n`, step 0.1, target acceptance 0.4).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainOverrides {
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub initial_step: Option<f64>,
    pub target_acceptance: Option<f64>,
    pub chains: usize,
}

/// Equilibrium solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSettings {
    pub cells: usize,
    pub tol: f64,
    pub max_iters: usize,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub limits: LimitParams,
    pub rule: ScalingRule,
    pub n_list: Vec<usize>,
    pub scaling_tolerance: Option<f64>,
    pub region: Option<Region>,
    pub chain: ChainOverrides,
    pub equilibrium: EquilibriumSettings,
    /// Outlier trials: one entry per scale in `n_list` (a single configured
    /// value is broadcast).
    pub ldp_trials: Vec<usize>,
    pub gamma_trials: usize,
    pub quad_cells: usize,
    pub sample_big_n: Option<usize>,
    pub sample_count: usize,
    pub hist_cells: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
}

const DEFAULT_SCALING_TOLERANCE: f64 = 0.1;

fn parse_f64(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|_| format!("{key}: expected a real number, got {v:?}"))?;
    if !x.is_finite() {
        return Err(format!("{key}: value must be finite, got {v:?}"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, String> {
    v.parse()
        .map_err(|_| format!("{key}: expected a nonnegative integer, got {v:?}"))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, String> {
    v.parse()
        .map_err(|_| format!("{key}: expected a nonnegative integer, got {v:?}"))
}

fn parse_usize_list(key: &str, v: &str) -> Result<Vec<usize>, String> {
    v.split(',')
        .map(|s| parse_usize(key, s.trim()))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|l| {
            if l.is_empty() {
                Err(format!("{key}: list must not be empty"))
            } else {
                Ok(l)
            }
        })
}

fn parse_region(key: &str, v: &str) -> Result<Region, String> {
    let mut intervals = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| format!("{key}: expected lo:hi intervals, got {part:?}"))?;
        intervals.push((parse_f64(key, lo.trim())?, parse_f64(key, hi.trim())?));
    }
    Region::new(intervals).map_err(|e| format!("{key}: {e}"))
}

impl ExperimentConfig {
    /// Parses and validates configuration text. Every error names the key at
    /// fault; nothing is written anywhere on failure.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if v.is_empty() {
                return Err(format!("line {}: key {k:?} has an empty value", i + 1));
            }
            if raw.insert(k.clone(), v).is_some() {
                return Err(format!("line {}: duplicate key {k:?}", i + 1));
            }
        }

        const KNOWN: &[&str] = &[
            "limits.rho",
            "limits.kappa",
            "limits.lambda",
            "scaling.rule",
            "scaling.n_list",
            "scaling.tolerance",
            "region.x",
            "chain.burn_in",
            "chain.thinning",
            "chain.initial_step",
            "chain.target_acceptance",
            "chain.chains",
            "equilibrium.cells",
            "equilibrium.tol",
            "equilibrium.max_iters",
            "ldp.trials",
            "ldp.gamma_trials",
            "ldp.quad_cells",
            "sample.big_n",
            "sample.count",
            "sample.hist_cells",
            "output.dir",
            "seed",
            "threads",
        ];
        for k in raw.keys() {
            if !KNOWN.contains(&k.as_str()) && !k.starts_with("scaling.table.") {
                return Err(format!("unknown key {k:?}"));
            }
        }

        let req = |k: &str| -> Result<&String, String> {
            raw.get(k).ok_or_else(|| format!("missing required key {k:?}"))
        };
        let limits = LimitParams::new(
            parse_f64("limits.rho", req("limits.rho")?)?,
            parse_f64("limits.kappa", req("limits.kappa")?)?,
            parse_f64("limits.lambda", req("limits.lambda")?)?,
        )
        .map_err(|e| format!("limits: {e}"))?;

        let mut n_list = parse_usize_list("scaling.n_list", req("scaling.n_list")?)?;
        n_list.sort_unstable();
        if n_list.windows(2).any(|w| w[0] == w[1]) {
            return Err("scaling.n_list: duplicate scale".into());
        }
        if n_list.iter().any(|&n| n < 1) {
            return Err("scaling.n_list: every scale must be >= 1".into());
        }

        let rule_name = raw.get("scaling.rule").map(String::as_str).unwrap_or("exact");
        let mut table: BTreeMap<usize, (usize, f64, f64)> = BTreeMap::new();
        for (k, v) in raw.iter().filter(|(k, _)| k.starts_with("scaling.table.")) {
            let big_n = parse_usize(k, &k["scaling.table.".len()..])?;
            if !n_list.contains(&big_n) {
                return Err(format!("{k}: scale {big_n} is not in scaling.n_list"));
            }
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(format!("{k}: expected `n,kappa_n,lambda_n`, got {v:?}"));
            }
            table.insert(
                big_n,
                (
                    parse_usize(k, parts[0])?,
                    parse_f64(k, parts[1])?,
                    parse_f64(k, parts[2])?,
                ),
            );
        }
        let rule = match rule_name {
            "exact" => {
                if !table.is_empty() {
                    return Err("scaling.table.* entries require scaling.rule = table".into());
                }
                ScalingRule::Exact
            }
            "table" => {
                for &n in &n_list {
                    if !table.contains_key(&n) {
                        return Err(format!("scaling.rule = table: missing scaling.table.{n}"));
                    }
                }
                ScalingRule::Table(table)
            }
            other => return Err(format!("scaling.rule: expected exact|table, got {other:?}")),
        };
        let scaling_tolerance = raw
            .get("scaling.tolerance")
            .map(|v| parse_f64("scaling.tolerance", v))
            .transpose()?;
        if let Some(t) = scaling_tolerance {
            if t < 0.0 {
                return Err("scaling.tolerance: must be >= 0".into());
            }
        }

        let region = raw
            .get("region.x")
            .map(|v| parse_region("region.x", v))
            .transpose()?;

        let opt_usize = |k: &str| raw.get(k).map(|v| parse_usize(k, v)).transpose();
        let opt_f64 = |k: &str| raw.get(k).map(|v| parse_f64(k, v)).transpose();

        let chain = ChainOverrides {
            burn_in: opt_usize("chain.burn_in")?,
            thinning: opt_usize("chain.thinning")?,
            initial_step: opt_f64("chain.initial_step")?,
            target_acceptance: opt_f64("chain.target_acceptance")?,
            chains: opt_usize("chain.chains")?.unwrap_or(1),
        };
        if chain.chains < 1 {
            return Err("chain.chains: must be >= 1".into());
        }
        if let Some(t) = chain.thinning {
            if t < 1 {
                return Err("chain.thinning: must be >= 1".into());
            }
        }
        if let Some(s) = chain.initial_step {
            if !(s > 0.0) {
                return Err("chain.initial_step: must be > 0".into());
            }
        }
        if let Some(a) = chain.target_acceptance {
            if !(a > 0.0 && a < 1.0) {
                return Err("chain.target_acceptance: must lie in (0,1)".into());
            }
        }

        let equilibrium = EquilibriumSettings {
            cells: opt_usize("equilibrium.cells")?.unwrap_or(jacobi_gas::equilibrium::DEFAULT_CELLS),
            tol: opt_f64("equilibrium.tol")?.unwrap_or(jacobi_gas::equilibrium::DEFAULT_TOL),
            max_iters: opt_usize("equilibrium.max_iters")?
                .unwrap_or(jacobi_gas::equilibrium::DEFAULT_MAX_ITERS),
        };
        if equilibrium.cells < 64 {
            return Err("equilibrium.cells: must be >= 64".into());
        }
        if !(equilibrium.tol > 0.0) {
            return Err("equilibrium.tol: must be > 0".into());
        }
        if equilibrium.max_iters < 1 {
            return Err("equilibrium.max_iters: must be >= 1".into());
        }

        let ldp_trials = match raw.get("ldp.trials") {
            Some(v) => {
                let l = parse_usize_list("ldp.trials", v)?;
                if l.len() != 1 && l.len() != n_list.len() {
                    return Err(format!(
                        "ldp.trials: expected 1 or {} entries, got {}",
                        n_list.len(),
                        l.len()
                    ));
                }
                if l.iter().any(|&t| t < 1) {
                    return Err("ldp.trials: every count must be >= 1".into());
                }
                if l.len() == 1 {
                    vec![l[0]; n_list.len()]
                } else {
                    l
                }
            }
            None => vec![10_000; n_list.len()],
        };
        let gamma_trials = opt_usize("ldp.gamma_trials")?.unwrap_or(2000);
        if gamma_trials < 1 {
            return Err("ldp.gamma_trials: must be >= 1".into());
        }
        let quad_cells = opt_usize("ldp.quad_cells")?.unwrap_or(512);
        if quad_cells < 1 {
            return Err("ldp.quad_cells: must be >= 1".into());
        }

        let sample_big_n = opt_usize("sample.big_n")?;
        if let Some(n) = sample_big_n {
            if !n_list.contains(&n) {
                return Err(format!("sample.big_n: scale {n} is not in scaling.n_list"));
            }
        }
        let sample_count = opt_usize("sample.count")?.unwrap_or(200);
        let hist_cells = opt_usize("sample.hist_cells")?.unwrap_or(64);
        if hist_cells < 1 {
            return Err("sample.hist_cells: must be >= 1".into());
        }

        let out_dir = PathBuf::from(raw.get("output.dir").map(String::as_str).unwrap_or("out"));
        let seed = raw.get("seed").map(|v| parse_u64("seed", v)).transpose()?.unwrap_or(0);
        let threads = opt_usize("threads")?;
        if let Some(t) = threads {
            if t < 1 {
                return Err("threads: must be >= 1".into());
            }
        }

        Ok(Self {
            limits,
            rule,
            n_list,
            scaling_tolerance,
            region,
            chain,
            equilibrium,
            ldp_trials,
            gamma_trials,
            quad_cells,
            sample_big_n,
            sample_count,
            hist_cells,
            out_dir,
            seed,
            threads,
        })
    }

    /// Canonical serialization: schema-ordered keys, shortest round-trip float
    /// form, lists comma-joined. `parse(canonical(c)) == c` for every valid
    /// config, and the canonical text is the input to the config hash.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("limits.rho", self.limits.rho.to_string());
        kv("limits.kappa", self.limits.kappa.to_string());
        kv("limits.lambda", self.limits.lambda.to_string());
        kv(
            "scaling.rule",
            match &self.rule {
                ScalingRule::Exact => "exact".into(),
                ScalingRule::Table(_) => "table".into(),
            },
        );
        kv(
            "scaling.n_list",
            self.n_list
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        if let Some(t) = self.scaling_tolerance {
            kv("scaling.tolerance", t.to_string());
        }
        if let ScalingRule::Table(table) = &self.rule {
            for (&big_n, &(n, k, l)) in table {
                kv(&format!("scaling.table.{big_n}"), format!("{n},{k},{l}"));
            }
        }
        if let Some(r) = &self.region {
            kv(
                "region.x",
                r.intervals()
                    .iter()
                    .map(|(a, b)| format!("{a}:{b}"))
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        if let Some(b) = self.chain.burn_in {
            kv("chain.burn_in", b.to_string());
        }
        if let Some(t) = self.chain.thinning {
            kv("chain.thinning", t.to_string());
        }
        if let Some(st) = self.chain.initial_step {
            kv("chain.initial_step", st.to_string());
        }
        if let Some(a) = self.chain.target_acceptance {
            kv("chain.target_acceptance", a.to_string());
        }
        kv("chain.chains", self.chain.chains.to_string());
        kv("equilibrium.cells", self.equilibrium.cells.to_string());
        kv("equilibrium.tol", self.equilibrium.tol.to_string());
        kv("equilibrium.max_iters", self.equilibrium.max_iters.to_string());
        kv(
            "ldp.trials",
            self.ldp_trials
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("ldp.gamma_trials", self.gamma_trials.to_string());
        kv("ldp.quad_cells", self.quad_cells.to_string());
        if let Some(n) = self.sample_big_n {
            kv("sample.big_n", n.to_string());
        }
        kv("sample.count", self.sample_count.to_string());
        kv("sample.hist_cells", self.hist_cells.to_string());
        kv("output.dir", self.out_dir.display().to_string());
        kv("seed", self.seed.to_string());
        if let Some(t) = self.threads {
            kv("threads", t.to_string());
        }
        s
    }

    /// Builds the scaling family the config describes.
    pub fn family(&self) -> Result<ScalingFamily, String> {
        match &self.rule {
            ScalingRule::Exact => ScalingFamily::exact_ratio(self.limits, &self.n_list),
            ScalingRule::Table(table) => {
                let entries = table
                    .iter()
                    .map(|(&big_n, &(n, kappa_n, lambda_n))| ScalingEntry {
                        big_n,
                        n,
                        kappa_n,
                        lambda_n,
                    })
                    .collect();
                ScalingFamily::new(
                    entries,
                    self.limits,
                    self.scaling_tolerance.unwrap_or(DEFAULT_SCALING_TOLERANCE),
                )
            }
        }
        .map_err(|e| format!("scaling family: {e}"))
    }
}
