//! File-based front end: `simulate`, `fit`, `diagnose`, `compare` and
//! `replay`. Every command writes its outputs plus a `manifest.json` into
//! an output directory; replaying that manifest rewrites the same bytes.

pub mod config;
pub mod io;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{self, ScalarSeries};
use crate::distributions::RngStream;
use crate::error::{MnpError, Result};
use crate::experiments::{generate_simulation, SimStudyConfig};
use crate::samplers;

use config::{FitConfig, Overrides};
use io::{format_number, DrawTable};
use manifest::{ChainRecord, CommandSpec, FileRecord, RunManifest, MANIFEST_FILE};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "MNP_THREADS";

/// Autocorrelation lags written by `diagnose`.
pub const ACF_MAX_LAG: usize = 50;

/// `MNP_THREADS` if set to a positive integer, else the available
/// parallelism.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct CommandReport {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub warnings: Vec<String>,
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(|e| MnpError::io(path, e))
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| MnpError::io(path, e))
}

fn input_record(name: &str, path: &Path, bytes: &[u8]) -> Result<FileRecord> {
    Ok(FileRecord {
        name: name.to_string(),
        path: absolute(path)?,
        sha256: io::sha256_hex(bytes),
    })
}

/// Collects output files, then writes them and the manifest.
struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    fn new(dir: &Path) -> Self {
        OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn finish(self, mut manifest: RunManifest, started: Instant, warnings: Vec<String>) -> Result<CommandReport> {
        std::fs::create_dir_all(&self.dir).map_err(|e| MnpError::io(&self.dir, e))?;
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            io::write_atomic(&path, bytes)?;
            manifest.outputs.push(FileRecord {
                name: name.clone(),
                path: absolute(&path)?,
                sha256: io::sha256_hex(bytes),
            });
        }
        manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
        let manifest_path = absolute(&self.dir.join(MANIFEST_FILE))?;
        io::write_atomic(&manifest_path, &manifest.to_json())?;
        Ok(CommandReport {
            manifest,
            manifest_path,
            warnings,
        })
    }
}

/// Generates a synthetic dataset. Writes `data.csv` (wide layout) and
/// `truth.json` with the true parameters and latents.
pub fn simulate(config_path: Option<&Path>, seed: Option<u64>, output: &Path) -> Result<CommandReport> {
    let started = Instant::now();
    let (entries, input) = match config_path {
        Some(p) => {
            let bytes = read_input(p)?;
            let text = String::from_utf8(bytes.clone()).map_err(|_| MnpError::Config {
                line: 0,
                message: format!("{} is not UTF-8", p.display()),
            })?;
            (config::parse_entries(&text)?, Some(input_record("config", p, &bytes)?))
        }
        None => (Vec::new(), None),
    };
    let sim = config::simulation_config(&entries, seed)?;
    let mut manifest = RunManifest::new(CommandSpec::Simulate { config: sim });
    manifest.inputs.extend(input);
    run_simulate(manifest, output, started)
}

fn run_simulate(manifest: RunManifest, output: &Path, started: Instant) -> Result<CommandReport> {
    let CommandSpec::Simulate { config } = &manifest.spec else {
        unreachable!("simulate manifest");
    };
    let sim = generate_simulation(config, &mut RngStream::new(config.seed))?;
    let mut out = OutputSet::new(output);
    out.add("data.csv", io::write_data(&sim.data));
    out.add("truth.json", truth_json(config, &sim.latent));
    out.finish(manifest, started, Vec::new())
}

fn truth_json(config: &SimStudyConfig, latent: &DMatrix<f64>) -> Vec<u8> {
    let latent: Vec<Vec<f64>> = latent.row_iter().map(|r| r.iter().copied().collect()).collect();
    let value = serde_json::json!({
        "beta_true": config.beta_true,
        "sigma_true": config.sigma_true,
        "latent": latent,
    });
    let mut bytes = serde_json::to_vec_pretty(&value).expect("truth serializes");
    bytes.push(b'\n');
    bytes
}

/// Fits one of the seven samplers. Writes `draws.csv` (or
/// `draws_chain_<c>.csv` for several chains) and `counters.csv`.
pub fn fit(
    data_path: &Path,
    config_path: Option<&Path>,
    overrides: Overrides,
    output: &Path,
    threads: usize,
) -> Result<CommandReport> {
    let started = Instant::now();
    let (entries, config_input) = match config_path {
        Some(p) => {
            let bytes = read_input(p)?;
            let text = String::from_utf8(bytes.clone()).map_err(|_| MnpError::Config {
                line: 0,
                message: format!("{} is not UTF-8", p.display()),
            })?;
            (config::parse_entries(&text)?, Some(input_record("config", p, &bytes)?))
        }
        None => (Vec::new(), None),
    };
    let cfg = FitConfig::from_entries(entries)?.with_overrides(overrides)?;
    let bytes = read_input(data_path)?;
    let data = io::read_data(&bytes, cfg.data_mode()?)?;
    let settings = cfg.resolve(data.n(), data.p(), data.q())?;
    let mut manifest = RunManifest::new(CommandSpec::Fit {
        data: absolute(data_path)?,
        settings,
    });
    manifest.inputs.push(input_record("data", data_path, &bytes)?);
    manifest.inputs.extend(config_input);
    run_fit(manifest, &bytes, output, threads, started)
}

fn run_fit(
    mut manifest: RunManifest,
    data_bytes: &[u8],
    output: &Path,
    threads: usize,
    started: Instant,
) -> Result<CommandReport> {
    let CommandSpec::Fit { settings, .. } = &manifest.spec else {
        unreachable!("fit manifest");
    };
    let data = io::read_data(data_bytes, settings.data_mode)?;
    let prior = settings.prior(data.p(), data.q())?;
    let sampler = settings.sampler_config()?;
    let variant = settings.algorithm()?;
    let initial = settings.initial_state(&data, &prior)?;
    let chains = samplers::run_chains_from(&initial, variant, &data, &prior, &sampler, settings.chains, threads)?;

    let mut out = OutputSet::new(output);
    let mut counters = String::from("chain,iteration,rejections,violated\n");
    for (c, chain) in chains.iter().enumerate() {
        let file = if chains.len() == 1 {
            "draws.csv".to_string()
        } else {
            format!("draws_chain_{}.csv", c + 1)
        };
        out.add(file.clone(), io::write_draws(chain));
        for ((t, r), v) in chain.iterations.iter().zip(&chain.rejections).zip(&chain.violations) {
            counters.push_str(&format!("{},{t},{r},{}\n", c + 1, *v as u8));
        }
        manifest.chains.push(ChainRecord {
            chain: c + 1,
            file,
            retained: chain.retained(),
            total_iterations: chain.total_iterations,
            total_rejections: chain.total_rejections,
            total_violations: chain.total_violations,
            violation_fraction: chain.violation_fraction(),
            acceptance_rate: chain.acceptance_rate(),
            wall_clock_seconds: chain.wall_clock_seconds,
        });
    }
    out.add("counters.csv", counters.into_bytes());
    out.finish(manifest, started, Vec::new())
}

/// Named series used by `diagnose` and `compare`: every non-constant
/// parameter in the file, then `log_sigma2_k` and `fisher_rho_j_k` for the
/// covariance entries that are present.
pub fn analysis_series(table: &DrawTable) -> Result<Vec<ScalarSeries>> {
    let mut out = Vec::new();
    for (label, values) in table.parameters.iter().zip(&table.values) {
        if values.iter().all(|v| *v == values[0]) {
            continue;
        }
        out.push(ScalarSeries::new(label.clone(), values.clone())?);
    }
    let p = (1..)
        .take_while(|&k| table.series(&io::sigma_label(k - 1, k - 1)).is_some())
        .count();
    for k in 0..p {
        let vals = table.series(&io::sigma_label(k, k)).expect("counted");
        if vals.iter().all(|v| *v == vals[0]) {
            continue;
        }
        let logs = vals
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(MnpError::Numeric(format!(
                        "non-positive variance {v} in {}",
                        io::sigma_label(k, k)
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(ScalarSeries::new(diagnostics::log_variance_label(k), logs)?);
    }
    for j in 0..p {
        for k in (j + 1)..p {
            let Some(cov) = table.series(&io::sigma_label(j, k)) else {
                continue;
            };
            let vj = table.series(&io::sigma_label(j, j)).expect("counted");
            let vk = table.series(&io::sigma_label(k, k)).expect("counted");
            let vals = cov
                .iter()
                .zip(vj.iter().zip(vk))
                .map(|(c, (a, b))| diagnostics::fisher_transform(c / (a * b).sqrt()))
                .collect::<Result<Vec<_>>>()?;
            out.push(ScalarSeries::new(diagnostics::fisher_label(j, k), vals)?);
        }
    }
    Ok(out)
}

fn read_draw_table(path: &Path, bytes: &[u8]) -> Result<DrawTable> {
    io::read_draws(bytes).map_err(|e| match e {
        MnpError::Data { line, message } => MnpError::Data {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Per-parameter summaries, ESS and ESS per second (`diagnostics.csv`)
/// and autocorrelations for lags 0 to 50 (`acf.csv`). Timing comes from
/// the fit manifest, by default the `manifest.json` next to the draws.
pub fn diagnose(draws: &Path, fit_manifest: Option<&Path>, output: &Path) -> Result<CommandReport> {
    let started = Instant::now();
    let fit_manifest = match fit_manifest {
        Some(p) => Some(absolute(p)?),
        None => {
            let sibling = draws.parent().unwrap_or(Path::new(".")).join(MANIFEST_FILE);
            if sibling.is_file() {
                Some(absolute(&sibling)?)
            } else {
                None
            }
        }
    };
    let manifest = RunManifest::new(CommandSpec::Diagnose {
        draws: absolute(draws)?,
        fit_manifest,
        max_lag: ACF_MAX_LAG,
    });
    run_diagnose(manifest, output, started, None)
}

fn verify_digest(path: &Path, bytes: &[u8], recorded: Option<&FileRecord>) -> Result<()> {
    if let Some(rec) = recorded {
        let digest = io::sha256_hex(bytes);
        if digest != rec.sha256 {
            return Err(MnpError::Schema {
                path: path.display().to_string(),
                message: format!(
                    "content changed since the run (sha256 {digest}, manifest has {})",
                    rec.sha256
                ),
            });
        }
    }
    Ok(())
}

fn run_diagnose(
    mut manifest: RunManifest,
    output: &Path,
    started: Instant,
    recorded_inputs: Option<&[FileRecord]>,
) -> Result<CommandReport> {
    let CommandSpec::Diagnose {
        draws,
        fit_manifest,
        max_lag,
    } = manifest.spec.clone()
    else {
        unreachable!("diagnose manifest");
    };
    let recorded = |name: &str| recorded_inputs.and_then(|r| r.iter().find(|f| f.name == name));
    let mut warnings = Vec::new();

    let bytes = read_input(&draws)?;
    verify_digest(&draws, &bytes, recorded("draws"))?;
    manifest.inputs.push(input_record("draws", &draws, &bytes)?);
    let table = read_draw_table(&draws, &bytes)?;

    let mut seconds = None;
    match &fit_manifest {
        Some(path) => {
            let fm_bytes = read_input(path)?;
            verify_digest(path, &fm_bytes, recorded("fit_manifest"))?;
            manifest.inputs.push(input_record("fit_manifest", path, &fm_bytes)?);
            let fm = RunManifest::read(path)?;
            let file = draws
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            match fm.chain_for_file(&file) {
                Some(rec) if rec.wall_clock_seconds > 0.0 => seconds = Some(rec.wall_clock_seconds),
                _ => warnings.push(format!(
                    "{} has no timing for {file}; ESS per second omitted",
                    path.display()
                )),
            }
        }
        None => warnings.push("no fit manifest found; ESS per second omitted".to_string()),
    }

    let series = analysis_series(&table)?;
    let mut summary = String::from("parameter,draws,mean,sd,q2.5,q25,q50,q75,q97.5,ess,ess_per_second,lag_cutoff\n");
    let mut acf = String::from("parameter,lag,autocorrelation\n");
    let mut short = false;
    for s in &series {
        let sm = diagnostics::summarize(s);
        summary.push_str(&format!("{},{}", s.label(), s.len()));
        for v in [sm.mean, sm.sd, sm.q025, sm.q25, sm.q50, sm.q75, sm.q975] {
            summary.push(',');
            summary.push_str(&format_number(v));
        }
        match diagnostics::effective_sample_size(s) {
            Ok(report) => {
                let report = match seconds {
                    Some(sec) => report.with_seconds(sec),
                    None => report,
                };
                summary.push(',');
                summary.push_str(&format_number(report.ess));
                summary.push(',');
                if let Some(eps) = report.ess_per_second {
                    summary.push_str(&format_number(eps));
                }
                summary.push_str(&format!(",{}\n", report.lag_cutoff));
            }
            Err(MnpError::DegenerateSeries { .. }) => {
                short = true;
                summary.push_str(",,,\n");
            }
            Err(e) => return Err(e),
        }
        let lags = max_lag.min(s.len() - 1);
        for (lag, r) in diagnostics::autocorrelation(s, lags)?.into_iter().enumerate() {
            acf.push_str(&format!("{},{lag},{}\n", s.label(), format_number(r)));
        }
    }
    if short {
        warnings.push("fewer than 100 draws; ESS left blank".to_string());
    }
    let mut out = OutputSet::new(output);
    out.add("diagnostics.csv", summary.into_bytes());
    out.add("acf.csv", acf.into_bytes());
    out.finish(manifest, started, warnings)
}

/// Per-parameter two-sample KS statistics (`ks.csv`) and matched quantiles
/// on the 199-point grid (`qq.csv`).
pub fn compare(draws_a: &Path, draws_b: &Path, output: &Path) -> Result<CommandReport> {
    let started = Instant::now();
    let manifest = RunManifest::new(CommandSpec::Compare {
        draws_a: absolute(draws_a)?,
        draws_b: absolute(draws_b)?,
    });
    run_compare(manifest, output, started, None)
}

fn run_compare(
    mut manifest: RunManifest,
    output: &Path,
    started: Instant,
    recorded_inputs: Option<&[FileRecord]>,
) -> Result<CommandReport> {
    let CommandSpec::Compare { draws_a, draws_b } = manifest.spec.clone() else {
        unreachable!("compare manifest");
    };
    let recorded = |name: &str| recorded_inputs.and_then(|r| r.iter().find(|f| f.name == name));
    let mut tables = Vec::new();
    for (name, path) in [("draws_a", &draws_a), ("draws_b", &draws_b)] {
        let bytes = read_input(path)?;
        verify_digest(path, &bytes, recorded(name))?;
        manifest.inputs.push(input_record(name, path, &bytes)?);
        tables.push(read_draw_table(path, &bytes)?);
    }
    let (a, b) = (&tables[0], &tables[1]);
    let only_a: Vec<&str> = a
        .parameters
        .iter()
        .filter(|p| b.series(p).is_none())
        .map(String::as_str)
        .collect();
    let only_b: Vec<&str> = b
        .parameters
        .iter()
        .filter(|p| a.series(p).is_none())
        .map(String::as_str)
        .collect();
    let sa = analysis_series(a)?;
    let sb = analysis_series(b)?;
    let labels_a: Vec<&str> = sa.iter().map(|s| s.label()).collect();
    let labels_b: Vec<&str> = sb.iter().map(|s| s.label()).collect();
    if !only_a.is_empty() || !only_b.is_empty() || labels_a != labels_b {
        let constant_a: Vec<&str> = labels_b
            .iter()
            .filter(|l| !labels_a.contains(l) && !only_b.contains(l))
            .copied()
            .collect();
        let constant_b: Vec<&str> = labels_a
            .iter()
            .filter(|l| !labels_b.contains(l) && !only_a.contains(l))
            .copied()
            .collect();
        return Err(MnpError::Schema {
            path: format!("{} vs {}", draws_a.display(), draws_b.display()),
            message: format!(
                "parameter sets differ: only in A {:?}, only in B {:?}, constant in A {:?}, constant in B {:?}",
                only_a, only_b, constant_a, constant_b
            ),
        });
    }
    let mut ks = String::from("parameter,ks_statistic\n");
    let mut qq = String::from("parameter,probability,quantile_a,quantile_b\n");
    for (x, y) in sa.iter().zip(&sb) {
        let cmp = diagnostics::compare_chains(x, y)?;
        ks.push_str(&format!("{},{}\n", x.label(), format_number(cmp.ks_statistic)));
        for (prob, (qa, qb)) in diagnostics::qq_grid().zip(&cmp.qq_pairs) {
            qq.push_str(&format!(
                "{},{},{},{}\n",
                x.label(),
                format_number(prob),
                format_number(*qa),
                format_number(*qb)
            ));
        }
    }
    let mut out = OutputSet::new(output);
    out.add("ks.csv", ks.into_bytes());
    out.add("qq.csv", qq.into_bytes());
    out.finish(manifest, started, Vec::new())
}

/// Outcome of replaying a manifest.
#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub report: CommandReport,
    /// Output files whose digest differs from the original run.
    pub mismatched: Vec<String>,
}

/// Reruns the command recorded in a manifest, using only the settings it
/// records. Inputs must still have their recorded digests.
pub fn replay(manifest_path: &Path, output: &Path, threads: usize) -> Result<ReplayReport> {
    let started = Instant::now();
    let original = RunManifest::read(manifest_path)?;
    let fresh = RunManifest::new(original.spec.clone());
    let report = match &original.spec {
        CommandSpec::Simulate { .. } => run_simulate(fresh, output, started)?,
        CommandSpec::Fit { data, .. } => {
            let bytes = read_input(data)?;
            let rec = original.inputs.iter().find(|f| f.name == "data");
            verify_digest(data, &bytes, rec)?;
            let mut fresh = fresh;
            fresh.inputs.push(input_record("data", data, &bytes)?);
            run_fit(fresh, &bytes, output, threads, started)?
        }
        CommandSpec::Diagnose { .. } => run_diagnose(fresh, output, started, Some(&original.inputs))?,
        CommandSpec::Compare { .. } => run_compare(fresh, output, started, Some(&original.inputs))?,
    };
    let mismatched = original
        .outputs
        .iter()
        .filter(|o| {
            !report
                .manifest
                .outputs
                .iter()
                .any(|n| n.name == o.name && n.sha256 == o.sha256)
        })
        .map(|o| o.name.clone())
        .collect();
    Ok(ReplayReport { report, mismatched })
}

/// Draws as read from a fit output, rebuilt into coefficient vectors and
/// covariance matrices.
pub fn table_to_draws(table: &DrawTable) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
    let q = (1..)
        .take_while(|&j| table.series(&diagnostics::beta_label(j - 1)).is_some())
        .count();
    let p = (1..)
        .take_while(|&k| table.series(&io::sigma_label(k - 1, k - 1)).is_some())
        .count();
    let t = table.iterations.len();
    let betas = (0..t)
        .map(|r| DVector::from_fn(q, |j, _| table.series(&diagnostics::beta_label(j)).expect("counted")[r]))
        .collect();
    let mut sigmas = Vec::with_capacity(t);
    for r in 0..t {
        let mut m = DMatrix::zeros(p, p);
        for j in 0..p {
            for k in j..p {
                let label = io::sigma_label(j, k);
                let v = table.series(&label).ok_or_else(|| MnpError::Data {
                    line: 1,
                    message: format!("missing {label}"),
                })?[r];
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
        sigmas.push(m);
    }
    Ok((betas, sigmas))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_data_file(dir: &Path) -> PathBuf {
        let cfg = dir.join("sim.conf");
        std::fs::write(&cfg, "n = 30\nseed = 5\n").unwrap();
        simulate(Some(&cfg), None, &dir.join("sim")).unwrap();
        dir.join("sim").join("data.csv")
    }

    fn quick_overrides(seed: u64) -> Overrides {
        Overrides {
            seed: Some(seed),
            variant: None,
            iterations: Some(400),
            burn_in: Some(100),
            thin: None,
        }
    }

    #[test]
    fn fit_writes_expected_draws() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_data_file(dir.path());
        let out = dir.path().join("fit");
        let report = fit(&data, None, quick_overrides(3), &out, 1).unwrap();
        let table = io::read_draws(&std::fs::read(out.join("draws.csv")).unwrap()).unwrap();
        assert_eq!(table.iterations.len(), 300);
        assert_eq!(table.iterations[0], 101);
        assert_eq!(table.parameters.len(), 2 + 3);
        assert!(table.series("sigma_1_1").unwrap().iter().all(|&v| v == 1.0));
        assert_eq!(report.manifest.chains.len(), 1);
        assert_eq!(report.manifest.chains[0].total_violations, 0);
    }

    #[test]
    fn several_chains_get_their_own_files() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_data_file(dir.path());
        let cfg = dir.path().join("fit.conf");
        std::fs::write(&cfg, "chains = 3\nvariant = 1.2\n").unwrap();
        let out = dir.path().join("fit");
        let report = fit(&data, Some(&cfg), quick_overrides(3), &out, 2).unwrap();
        for c in 1..=3 {
            assert!(out.join(format!("draws_chain_{c}.csv")).is_file());
        }
        assert_eq!(report.manifest.chains.len(), 3);
        let first = std::fs::read(out.join("draws_chain_1.csv")).unwrap();
        let second = std::fs::read(out.join("draws_chain_2.csv")).unwrap();
        assert_ne!(first, second);
    }

    #[test]
    fn analysis_series_adds_transforms() {
        let text = "iteration,parameter,value\n\
                    1,beta_1,0.5\n1,sigma_1_1,1\n1,sigma_1_2,0.5\n1,sigma_2_2,4\n\
                    2,beta_1,0.7\n2,sigma_1_1,1\n2,sigma_1_2,-0.2\n2,sigma_2_2,1\n";
        let table = io::read_draws(text.as_bytes()).unwrap();
        let series = analysis_series(&table).unwrap();
        let labels: Vec<&str> = series.iter().map(|s| s.label()).collect();
        assert_eq!(
            labels,
            ["beta_1", "sigma_1_2", "sigma_2_2", "log_sigma2_2", "fisher_rho_1_2"]
        );
        let rho: f64 = 0.5 / 2.0;
        assert!((series[4].values()[0] - ((1.0 + rho) / (1.0 - rho)).ln()).abs() < 1e-15);
        assert!((series[3].values()[0] - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn compare_identical_files_gives_zero_ks() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_data_file(dir.path());
        let out = dir.path().join("fit");
        fit(&data, None, quick_overrides(3), &out, 1).unwrap();
        let draws = out.join("draws.csv");
        compare(&draws, &draws, &dir.path().join("cmp")).unwrap();
        let ks = std::fs::read_to_string(dir.path().join("cmp").join("ks.csv")).unwrap();
        for line in ks.lines().skip(1) {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(v, 0.0);
        }
        let qq = std::fs::read_to_string(dir.path().join("cmp").join("qq.csv")).unwrap();
        assert_eq!(qq.lines().count(), 1 + 199 * (ks.lines().count() - 1));
    }

    #[test]
    fn compare_rejects_different_parameter_sets() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let mut ta = String::from("iteration,parameter,value\n");
        let mut tb = ta.clone();
        for t in 1..=150 {
            ta.push_str(&format!("{t},beta_1,{}\n", (t as f64).sin()));
            tb.push_str(&format!("{t},beta_2,{}\n", (t as f64).cos()));
        }
        std::fs::write(&a, ta).unwrap();
        std::fs::write(&b, tb).unwrap();
        match compare(&a, &b, &dir.path().join("cmp")) {
            Err(MnpError::Schema { message, .. }) => {
                assert!(message.contains("beta_1") && message.contains("beta_2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagnose_without_timing_warns() {
        let dir = tempfile::tempdir().unwrap();
        let draws = dir.path().join("iid.csv");
        let mut rng = RngStream::new(8);
        let mut text = String::from("iteration,parameter,value\n");
        for t in 1..=4000 {
            text.push_str(&format!("{t},x,{}\n", format_number(rng.standard_normal())));
        }
        std::fs::write(&draws, text).unwrap();
        let report = diagnose(&draws, None, &dir.path().join("diag")).unwrap();
        assert_eq!(report.warnings.len(), 1);
        let csv = std::fs::read_to_string(dir.path().join("diag").join("diagnostics.csv")).unwrap();
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        let ess: f64 = row[9].parse().unwrap();
        assert!((ess - 4000.0).abs() < 600.0, "ess {ess}");
        assert_eq!(row[10], "");
        let acf = std::fs::read_to_string(dir.path().join("diag").join("acf.csv")).unwrap();
        assert_eq!(acf.lines().count(), 1 + 51);
    }

    #[test]
    fn diagnose_uses_fit_timing() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_data_file(dir.path());
        let out = dir.path().join("fit");
        fit(&data, None, quick_overrides(4), &out, 1).unwrap();
        let report = diagnose(&out.join("draws.csv"), None, &dir.path().join("diag")).unwrap();
        assert!(report.warnings.is_empty(), "{:?}", report.warnings);
        let csv = std::fs::read_to_string(dir.path().join("diag").join("diagnostics.csv")).unwrap();
        assert!(csv.lines().skip(1).all(|l| !l.split(',').nth(10).unwrap().is_empty()));
        assert!(csv.contains("fisher_rho_1_2"));
    }

    #[test]
    fn replay_detects_changed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let data = small_data_file(dir.path());
        let out = dir.path().join("fit");
        let report = fit(&data, None, quick_overrides(4), &out, 1).unwrap();
        let mut text = std::fs::read_to_string(&data).unwrap();
        let row = text.lines().nth(1).unwrap().to_string();
        text.push_str(&row);
        text.push('\n');
        std::fs::write(&data, text).unwrap();
        assert!(matches!(
            replay(&report.manifest_path, &dir.path().join("again"), 1),
            Err(MnpError::Schema { .. })
        ));
    }

    #[test]
    fn table_rebuilds_matrices() {
        let text =
            "iteration,parameter,value\n1,beta_1,0.5\n1,beta_2,1\n1,sigma_1_1,1\n1,sigma_1_2,0.3\n1,sigma_2_2,2\n";
        let table = io::read_draws(text.as_bytes()).unwrap();
        let (b, s) = table_to_draws(&table).unwrap();
        assert_eq!(b[0].as_slice(), &[0.5, 1.0]);
        assert_eq!(s[0], DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]));
    }
}
