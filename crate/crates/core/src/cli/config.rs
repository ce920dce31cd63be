//! Flat `key = value` configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! key = value
//! ```
//!
//! Keys are lower-case identifiers. Numeric lists are separated by commas
//! and/or whitespace; matrices are given row-major. Every key may appear
//! once except `block`, which is repeated in simulation configs.
//!
//! Fit keys: `variant`, `identification`, `data_mode` (`wide` | `prices`),
//! `nu`, `s`, `alpha0_sq`, `a_diag`, `a`, `beta0`, `iterations`, `burn_in`,
//! `thin`, `seed`, `max_rejections`, `chains`, `latent_indices`
//! (1-based observation numbers), `init_beta`, `init_sigma` (starting
//! values; the prior mean and the identity by default).
//!
//! Simulation keys: `n`, `p`, `q`, `beta_true`, `sigma_true`, `seed` and
//! `block = first last lo_1 hi_1 ... lo_q hi_q` (1-based inclusive rows,
//! one uniform range per covariate column).

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MnpError, Result};
use crate::experiments::{CovariateBlock, SimStudyConfig};
use crate::linalg;
use crate::model::{init_state, ChainState, Identification, MnpData, PriorSpec};
use crate::samplers::{AlgorithmVariant, SamplerConfig};

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits config text into entries. Fails on lines without `=`, empty keys
/// or empty values.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(MnpError::Config {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        {
            return Err(MnpError::Config {
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(MnpError::Config {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| MnpError::io(path, e))?;
    parse_entries(&text)
}

fn config_err(entry: &Entry, message: impl Into<String>) -> MnpError {
    MnpError::Config {
        line: entry.line,
        message: format!("{}: {}", entry.key, message.into()),
    }
}

fn tokens(value: &str) -> impl Iterator<Item = &str> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

fn parse_f64(entry: &Entry) -> Result<f64> {
    let list = parse_f64_list(entry)?;
    match list.as_slice() {
        [v] => Ok(*v),
        _ => Err(config_err(entry, format!("expected one number, found {}", list.len()))),
    }
}

fn parse_f64_list(entry: &Entry) -> Result<Vec<f64>> {
    tokens(&entry.value)
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| config_err(entry, format!("`{t}` is not a finite number")))
        })
        .collect()
}

fn parse_count<T: std::str::FromStr>(entry: &Entry) -> Result<T> {
    entry
        .value
        .parse::<T>()
        .map_err(|_| config_err(entry, format!("`{}` is not a non-negative integer", entry.value)))
}

fn parse_count_list(entry: &Entry) -> Result<Vec<usize>> {
    tokens(&entry.value)
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| config_err(entry, format!("`{t}` is not a non-negative integer")))
        })
        .collect()
}

/// Rejects unknown and repeated keys.
fn check_keys(entries: &[Entry], allowed: &[&str], repeatable: &[&str]) -> Result<()> {
    let mut seen = HashSet::new();
    for e in entries {
        if !allowed.contains(&e.key.as_str()) {
            return Err(config_err(e, format!("unknown key (allowed: {})", allowed.join(", "))));
        }
        if !repeatable.contains(&e.key.as_str()) && !seen.insert(e.key.as_str()) {
            return Err(config_err(e, "given more than once"));
        }
    }
    Ok(())
}

/// How observations are laid out in the data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// `choice,x_1_1,...,x_p_q`: reduced designs, row by row.
    Wide,
    /// `choice,price_0,...,price_p`: designs `[I_p, log price differences]`.
    Prices,
}

impl DataMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wide" => Some(DataMode::Wide),
            "prices" => Some(DataMode::Prices),
            _ => None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub variant: Option<String>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
}

const FIT_KEYS: &[&str] = &[
    "variant",
    "identification",
    "data_mode",
    "nu",
    "s",
    "alpha0_sq",
    "a_diag",
    "a",
    "beta0",
    "iterations",
    "burn_in",
    "thin",
    "seed",
    "max_rejections",
    "chains",
    "latent_indices",
    "init_beta",
    "init_sigma",
];

/// Fit settings as read from a config file, before the data fixes `p`
/// and `q`.
#[derive(Debug, Clone, Default)]
pub struct FitConfig {
    entries: Vec<Entry>,
    overrides: Overrides,
}

impl FitConfig {
    pub fn from_entries(entries: Vec<Entry>) -> Result<Self> {
        check_keys(&entries, FIT_KEYS, &[])?;
        let cfg = FitConfig {
            entries,
            overrides: Overrides::default(),
        };
        // Surface syntax errors before any data is read.
        cfg.variant()?;
        cfg.data_mode()?;
        Ok(cfg)
    }

    pub fn with_overrides(mut self, overrides: Overrides) -> Result<Self> {
        if let Some(v) = &overrides.variant {
            AlgorithmVariant::from_label(v)?;
        }
        self.overrides = overrides;
        Ok(self)
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn variant(&self) -> Result<AlgorithmVariant> {
        if let Some(v) = &self.overrides.variant {
            return AlgorithmVariant::from_label(v);
        }
        match self.get("variant") {
            Some(e) => AlgorithmVariant::from_label(&e.value).map_err(|err| config_err(e, err.to_string())),
            None => Ok(AlgorithmVariant::ALG_1_3),
        }
    }

    pub fn data_mode(&self) -> Result<DataMode> {
        match self.get("data_mode") {
            Some(e) => DataMode::parse(&e.value).ok_or_else(|| config_err(e, "expected `wide` or `prices`")),
            None => Ok(DataMode::Wide),
        }
    }

    /// Fills in defaults for a dataset with `n` observations, `p` non-base
    /// categories and `q` coefficients, and validates everything.
    pub fn resolve(&self, n: usize, p: usize, q: usize) -> Result<FitSettings> {
        let variant = self.variant()?;
        let identification = match self.get("identification") {
            Some(e) => {
                let id = Identification::parse(&e.value)
                    .ok_or_else(|| config_err(e, "expected `first_diagonal` or `trace`"))?;
                if id != variant.identification() {
                    return Err(config_err(
                        e,
                        format!(
                            "algorithm {variant} requires {} identification",
                            variant.identification().as_str()
                        ),
                    ));
                }
                id
            }
            None => variant.identification(),
        };
        let nu = match self.get("nu") {
            Some(e) => parse_f64(e)?,
            None => p as f64,
        };
        let alpha0_sq = match self.get("alpha0_sq") {
            Some(e) => parse_f64(e)?,
            None => nu,
        };
        let scale = match self.get("s") {
            Some(e) => {
                let v = parse_f64_list(e)?;
                if v.len() != p * p {
                    return Err(config_err(
                        e,
                        format!("expected {} entries for a {p}x{p} matrix", p * p),
                    ));
                }
                v
            }
            None => DMatrix::<f64>::identity(p, p).as_slice().to_vec(),
        };
        let beta_cov = match (self.get("a_diag"), self.get("a")) {
            (Some(e), Some(_)) => return Err(config_err(e, "give either `a_diag` or `a`, not both")),
            (Some(e), None) => {
                let v = parse_f64_list(e)?;
                let d = match v.len() {
                    1 => vec![v[0]; q],
                    len if len == q => v,
                    len => return Err(config_err(e, format!("expected 1 or {q} entries, found {len}"))),
                };
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
                    .as_slice()
                    .to_vec()
            }
            (None, Some(e)) => {
                let v = parse_f64_list(e)?;
                if v.len() != q * q {
                    return Err(config_err(
                        e,
                        format!("expected {} entries for a {q}x{q} matrix", q * q),
                    ));
                }
                v
            }
            (None, None) => (DMatrix::<f64>::identity(q, q) * 100.0).as_slice().to_vec(),
        };
        let beta_mean = match self.get("beta0") {
            Some(e) => {
                let v = parse_f64_list(e)?;
                if v.len() != q {
                    return Err(config_err(e, format!("expected {q} entries")));
                }
                v
            }
            None => vec![0.0; q],
        };
        let protocol = SamplerConfig::simulation_protocol(1);
        let count = |key: &str, default: usize| -> Result<usize> { self.get(key).map_or(Ok(default), parse_count) };
        let iterations = match self.overrides.iterations {
            Some(v) => v,
            None => count("iterations", protocol.iterations)?,
        };
        let burn_in = match self.overrides.burn_in {
            Some(v) => v,
            None => count("burn_in", iterations / 3)?,
        };
        let thin = match self.overrides.thin {
            Some(v) => v,
            None => count("thin", 1)?,
        };
        let seed = match self.overrides.seed {
            Some(v) => v,
            None => self.get("seed").map_or(Ok(1), parse_count)?,
        };
        let max_rejections = self
            .get("max_rejections")
            .map_or(Ok(SamplerConfig::DEFAULT_MAX_REJECTIONS), parse_count)?;
        let chains = count("chains", 1)?;
        if chains == 0 {
            return Err(config_err(
                self.get("chains").expect("set when zero"),
                "must be at least 1",
            ));
        }
        let latent_indices = match self.get("latent_indices") {
            Some(e) => {
                let v = parse_count_list(e)?;
                if let Some(bad) = v.iter().find(|&&i| i == 0 || i > n) {
                    return Err(config_err(e, format!("observation {bad} is outside 1..={n}")));
                }
                v
            }
            None => Vec::new(),
        };
        let init_beta = match self.get("init_beta") {
            Some(e) => {
                let v = parse_f64_list(e)?;
                if v.len() != q {
                    return Err(config_err(e, format!("expected {q} entries")));
                }
                Some(v)
            }
            None => None,
        };
        let init_sigma = match self.get("init_sigma") {
            Some(e) => {
                let v = parse_f64_list(e)?;
                if v.len() != p * p {
                    return Err(config_err(
                        e,
                        format!("expected {} entries for a {p}x{p} matrix", p * p),
                    ));
                }
                let m = DMatrix::from_row_slice(p, p, &v);
                if !linalg::is_symmetric(&m, 0.0) || linalg::cholesky(&m).is_err() {
                    return Err(config_err(e, "starting covariance must be symmetric positive definite"));
                }
                if !identification.is_satisfied(&m, 1e-8) {
                    return Err(config_err(
                        e,
                        format!(
                            "starting covariance must satisfy the {} restriction",
                            identification.as_str()
                        ),
                    ));
                }
                Some(v)
            }
            None => None,
        };
        let settings = FitSettings {
            variant: variant.to_string(),
            identification,
            data_mode: self.data_mode()?,
            nu,
            scale,
            alpha0_sq,
            beta_cov,
            beta_mean,
            iterations,
            burn_in,
            thin,
            seed,
            max_rejections,
            chains,
            latent_indices,
            init_beta,
            init_sigma,
        };
        // Attach the offending line where there is one.
        settings
            .prior(p, q)
            .map_err(|err| self.anchor(err, &["nu", "s", "alpha0_sq", "a_diag", "a", "beta0"]))?;
        settings
            .sampler_config()
            .map_err(|err| self.anchor(err, &["iterations", "burn_in", "thin", "max_rejections"]))?;
        settings.check_variant_prior()?;
        Ok(settings)
    }

    fn anchor(&self, err: MnpError, keys: &[&str]) -> MnpError {
        let line = keys
            .iter()
            .filter_map(|k| self.get(k))
            .map(|e| e.line)
            .min()
            .unwrap_or(0);
        MnpError::Config {
            line,
            message: err.to_string(),
        }
    }
}

/// Fully resolved fit settings; this is what the manifest records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub variant: String,
    pub identification: Identification,
    pub data_mode: DataMode,
    pub nu: f64,
    /// Row-major `p x p` prior scale `S`.
    pub scale: Vec<f64>,
    pub alpha0_sq: f64,
    /// Row-major `q x q` prior covariance `A` of beta.
    pub beta_cov: Vec<f64>,
    pub beta_mean: Vec<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub max_rejections: u64,
    pub chains: usize,
    /// 1-based observations whose latent draws are written out.
    pub latent_indices: Vec<usize>,
    /// Starting beta; the prior mean when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_beta: Option<Vec<f64>>,
    /// Row-major starting Sigma; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_sigma: Option<Vec<f64>>,
}

impl FitSettings {
    pub fn algorithm(&self) -> Result<AlgorithmVariant> {
        AlgorithmVariant::from_label(&self.variant)
    }

    pub fn prior(&self, p: usize, q: usize) -> Result<PriorSpec> {
        if self.scale.len() != p * p || self.beta_cov.len() != q * q || self.beta_mean.len() != q {
            return Err(MnpError::Argument(format!(
                "prior dimensions do not match p = {p}, q = {q}"
            )));
        }
        PriorSpec::new(
            self.nu,
            DMatrix::from_row_slice(p, p, &self.scale),
            self.alpha0_sq,
            DMatrix::from_row_slice(q, q, &self.beta_cov),
            nalgebra::DVector::from_column_slice(&self.beta_mean),
            self.identification,
        )
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        let mut config = SamplerConfig::new(self.iterations, self.burn_in, self.thin, self.seed)?;
        config.max_rejections = self.max_rejections;
        config.latent_indices = self.latent_indices.iter().map(|i| i - 1).collect();
        config.validate()?;
        Ok(config)
    }

    /// The step-0 state: beta and Sigma from the settings when given, and
    /// latents set to +1 for the chosen category and -1 elsewhere.
    pub fn initial_state(&self, data: &MnpData, prior: &PriorSpec) -> Result<ChainState> {
        let mut state = init_state(data, prior);
        let (p, q) = (data.p(), data.q());
        if let Some(b) = &self.init_beta {
            if b.len() != q {
                return Err(MnpError::Argument(format!("init_beta needs {q} entries")));
            }
            state.beta = nalgebra::DVector::from_column_slice(b);
        }
        if let Some(m) = &self.init_sigma {
            if m.len() != p * p {
                return Err(MnpError::Argument(format!("init_sigma needs {} entries", p * p)));
            }
            state.sigma = DMatrix::from_row_slice(p, p, m);
        }
        Ok(state)
    }

    fn check_variant_prior(&self) -> Result<()> {
        let variant = self.algorithm()?;
        if variant.identification() != self.identification {
            return Err(MnpError::Argument(format!(
                "algorithm {variant} requires {} identification",
                variant.identification().as_str()
            )));
        }
        if variant.family != crate::samplers::Family::Two && self.beta_mean.iter().any(|&b| b != 0.0) {
            return Err(MnpError::Argument(format!(
                "algorithm {variant} needs beta0 = 0; use 2.1 or 2.2 for a non-zero prior mean"
            )));
        }
        Ok(())
    }
}

const SIM_KEYS: &[&str] = &["n", "p", "q", "beta_true", "sigma_true", "block", "seed"];

/// Resolves a simulation config. Missing keys take the simulation-study
/// defaults; `block` entries replace the default covariate layout, which
/// is only available for two covariates.
pub fn simulation_config(entries: &[Entry], seed_override: Option<u64>) -> Result<SimStudyConfig> {
    check_keys(entries, SIM_KEYS, &["block"])?;
    let get = |key: &str| entries.iter().find(|e| e.key == key);
    let defaults = SimStudyConfig::simulation_study(1);
    let n = get("n").map_or(Ok(defaults.n), parse_count)?;
    if n == 0 {
        return Err(config_err(get("n").expect("n was given"), "must be at least 1"));
    }
    let p = get("p").map_or(Ok(defaults.p), parse_count)?;
    let q = get("q").map_or(Ok(defaults.q), parse_count)?;
    for key in ["p", "q"] {
        if let Some(e) = get(key) {
            if parse_count::<usize>(e)? == 0 {
                return Err(config_err(e, "must be at least 1"));
            }
        }
    }
    let beta_true = match get("beta_true") {
        Some(e) => parse_f64_list(e)?,
        None if q == defaults.q => defaults.beta_true.clone(),
        None => {
            return Err(MnpError::Config {
                line: 0,
                message: format!("beta_true is required when q = {q}"),
            })
        }
    };
    let sigma_true = match get("sigma_true") {
        Some(e) => parse_f64_list(e)?,
        None if p == defaults.p => defaults.sigma_true.clone(),
        None => {
            return Err(MnpError::Config {
                line: 0,
                message: format!("sigma_true is required when p = {p}"),
            })
        }
    };
    let block_entries: Vec<&Entry> = entries.iter().filter(|e| e.key == "block").collect();
    let covariate_blocks = if block_entries.is_empty() {
        if q != 2 {
            return Err(MnpError::Config {
                line: 0,
                message: format!("block entries are required when q = {q}"),
            });
        }
        SimStudyConfig::split_blocks(n)
    } else {
        block_entries
            .iter()
            .map(|e| {
                let v = parse_f64_list(e)?;
                if v.len() != 2 + 2 * q {
                    return Err(config_err(e, format!("expected first, last and {q} (lo, hi) pairs")));
                }
                let (first, last) = (v[0], v[1]);
                if first.fract() != 0.0 || last.fract() != 0.0 || first < 1.0 || last < first {
                    return Err(config_err(e, "rows must be 1-based integers with first <= last"));
                }
                Ok(CovariateBlock {
                    rows: (first as usize - 1)..(last as usize),
                    bounds: v[2..].chunks(2).map(|c| (c[0], c[1])).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let seed = match seed_override {
        Some(s) => s,
        None => get("seed").map_or(Ok(1), parse_count)?,
    };
    let config = SimStudyConfig {
        n,
        p,
        q,
        beta_true,
        sigma_true,
        covariate_blocks,
        seed,
    };
    config.validate().map_err(|err| {
        let line = ["beta_true", "sigma_true", "block", "n"]
            .iter()
            .filter_map(|k| get(k))
            .map(|e| e.line)
            .min()
            .unwrap_or(0);
        MnpError::Config {
            line,
            message: err.to_string(),
        }
    })?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(text: &str) -> Vec<Entry> {
        parse_entries(text).unwrap()
    }

    #[test]
    fn grammar_handles_comments_and_lists() {
        let e = entries("# header\n\nnu = 3   # trailing\ns = 1, 0.2,  0.2 1\n");
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].line, 3);
        assert_eq!(e[0].value, "3");
        assert_eq!(e[1].key, "s");
    }

    #[test]
    fn malformed_lines_report_their_line() {
        match parse_entries("nu = 2\njunk line\n") {
            Err(MnpError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_entries("Nu = 2") {
            Err(MnpError::Config { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_entries("\n\nnu =   ") {
            Err(MnpError::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fit_defaults() {
        let s = FitConfig::from_entries(vec![]).unwrap().resolve(50, 2, 2).unwrap();
        assert_eq!(s.variant, "1.3");
        assert_eq!(s.identification, Identification::FirstDiagonal);
        assert_eq!(s.nu, 2.0);
        assert_eq!(s.alpha0_sq, 2.0);
        assert_eq!(s.scale, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.beta_cov, vec![100.0, 0.0, 0.0, 100.0]);
        assert_eq!(s.beta_mean, vec![0.0, 0.0]);
        assert_eq!((s.iterations, s.burn_in, s.thin, s.chains), (15_000, 5_000, 1, 1));
    }

    #[test]
    fn alpha0_defaults_to_nu() {
        let cfg = FitConfig::from_entries(entries("nu = 5")).unwrap();
        assert_eq!(cfg.resolve(10, 2, 2).unwrap().alpha0_sq, 5.0);
    }

    #[test]
    fn identification_must_match_variant() {
        let cfg = FitConfig::from_entries(entries("variant = 3.1\nidentification = first_diagonal")).unwrap();
        match cfg.resolve(10, 2, 2) {
            Err(MnpError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overrides_win() {
        let cfg = FitConfig::from_entries(entries("variant = 1.1\nseed = 4\niterations = 100\nburn_in = 10"))
            .unwrap()
            .with_overrides(Overrides {
                seed: Some(9),
                variant: Some("2.2".into()),
                iterations: Some(200),
                burn_in: None,
                thin: Some(2),
            })
            .unwrap();
        let s = cfg.resolve(10, 2, 2).unwrap();
        assert_eq!(
            (s.variant.as_str(), s.seed, s.iterations, s.burn_in, s.thin),
            ("2.2", 9, 200, 10, 2)
        );
    }

    #[test]
    fn bad_values_are_anchored() {
        for (text, want) in [
            ("seed = 1\nnu = abc", 2),
            ("s = 1 0 0", 1),
            ("variant = 9.9", 1),
            ("\nthin = 0", 2),
            ("a_diag = 1\na = 1 0 0 1", 1),
            ("latent_indices = 0", 1),
            ("nu = 2\nnu = 3", 2),
            ("colour = red", 1),
            ("s = 2 0 0 1", 1),
        ] {
            let res = FitConfig::from_entries(entries(text)).and_then(|c| c.resolve(10, 2, 2));
            match res {
                Err(MnpError::Config { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn trace_variant_gets_trace_prior() {
        let cfg = FitConfig::from_entries(entries("variant = 3.2\ns = 1.5 0 0 0.5")).unwrap();
        let s = cfg.resolve(10, 2, 2).unwrap();
        assert_eq!(s.identification, Identification::Trace);
        assert!(s.prior(2, 2).is_ok());
    }

    #[test]
    fn simulation_defaults_and_blocks() {
        let c = simulation_config(&[], None).unwrap();
        assert_eq!((c.n, c.p, c.q), (50, 2, 2));
        let c = simulation_config(&entries("n = 4\nq = 1\nbeta_true = 0.5\nblock = 1 4 -1 1"), Some(3)).unwrap();
        assert_eq!(c.covariate_blocks.len(), 1);
        assert_eq!(c.covariate_blocks[0].rows, 0..4);
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn simulation_rejects_zero_n() {
        match simulation_config(&entries("seed = 2\nn = 0"), None) {
            Err(MnpError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn simulation_rejects_gaps() {
        let e = entries("n = 4\nq = 1\nbeta_true = 0.5\nblock = 1 3 -1 1");
        assert!(matches!(simulation_config(&e, None), Err(MnpError::Config { .. })));
    }

    #[test]
    fn starting_values_are_checked() {
        let s = FitConfig::from_entries(entries("init_beta = 0.5 -1\ninit_sigma = 1 0.3 0.3 2"))
            .unwrap()
            .resolve(10, 2, 2)
            .unwrap();
        assert_eq!(s.init_beta, Some(vec![0.5, -1.0]));
        let data = MnpData::new(vec![0, 1, 2], vec![DMatrix::zeros(2, 2); 3]).unwrap();
        let state = s.initial_state(&data, &s.prior(2, 2).unwrap()).unwrap();
        assert_eq!(state.sigma[(1, 1)], 2.0);
        state.check_invariants(&data, Identification::FirstDiagonal).unwrap();

        for (text, line) in [
            ("nu = 3\ninit_sigma = 2 0 0 1", 2),
            ("init_sigma = 1 0.5 0.4 1", 1),
            ("init_sigma = 1 2 2 1", 1),
            ("init_beta = 1", 1),
        ] {
            match FitConfig::from_entries(entries(text)).unwrap().resolve(10, 2, 2) {
                Err(MnpError::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
        let trace = FitConfig::from_entries(entries("variant = 3.2\ninit_sigma = 1.5 0 0 0.5")).unwrap();
        assert!(trace.resolve(10, 2, 2).is_ok());
    }
}
