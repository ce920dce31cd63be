//! Browser demo: three operations exported through wasm-bindgen, each
//! returning a JSON string for `www/index.html` to draw.

use mnp_core::diagnostics::{self, ScalarSeries};
use mnp_core::distributions::{sample_truncated_normal, RngStream, TruncSpec};
use mnp_core::experiments::{generate_simulation, run_paired_comparison, SimStudyConfig};
use mnp_core::model::classify;
use mnp_core::samplers::{run_chain, AlgorithmVariant};
use mnp_core::{MnpError, PriorSpec, Result, SamplerConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_ITERATIONS: usize = 60_000;
const SCATTER_SWEEPS: usize = 20;

fn protocol(iterations: usize, seed: u64) -> Result<SamplerConfig> {
    if !(30..=MAX_ITERATIONS).contains(&iterations) {
        return Err(MnpError::Argument(format!(
            "iterations must be between 30 and {MAX_ITERATIONS}"
        )));
    }
    SamplerConfig::new(iterations, iterations / 3, 1, seed)
}

/// Histogram of truncated-normal draws next to the exact density,
/// normalized by quadrature over the plotted range.
pub fn truncated_normal_histogram(
    mu: f64,
    var: f64,
    bound: f64,
    upper: bool,
    draws: usize,
    bins: usize,
    seed: u64,
) -> Result<Value> {
    if draws == 0 || draws > 1_000_000 || bins == 0 || bins > 400 {
        return Err(MnpError::Argument("need 1..=10^6 draws and 1..=400 bins".into()));
    }
    let trunc = if upper {
        TruncSpec::upper(bound)
    } else {
        TruncSpec::lower(bound)
    };
    let mut rng = RngStream::new(seed);
    let xs = (0..draws)
        .map(|_| sample_truncated_normal(mu, var, trunc, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let sd = var.sqrt();
    let (lo, hi) = if upper {
        (bound.min(mu) - 5.0 * sd, bound)
    } else {
        (bound, bound.max(mu) + 5.0 * sd)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &xs {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        if x >= lo {
            counts[b] += 1;
        }
    }
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (draws as f64 * width)).collect();

    let kernel = |x: f64| (-0.5 * ((x - mu) / sd).powi(2)).exp();
    let grid = 2000;
    let h = (hi - lo) / grid as f64;
    let pts: Vec<(f64, f64)> = (0..=grid).map(|i| lo + i as f64 * h).map(|x| (x, kernel(x))).collect();
    let mass: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * h).sum();
    let curve_mean: f64 = pts
        .windows(2)
        .map(|w| 0.5 * (w[0].0 * w[0].1 + w[1].0 * w[1].1) * h)
        .sum::<f64>()
        / mass;
    let curve: Vec<[f64; 2]> = pts.iter().step_by(10).map(|&(x, y)| [x, y / mass]).collect();
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    Ok(json!({
        "edges": edges,
        "density": density,
        "curve": curve,
        "sample_mean": xs.iter().sum::<f64>() / draws as f64,
        "exact_mean": curve_mean,
    }))
}

/// Latent vectors from the last sweeps of a chain on simulated data,
/// flagged by whether they still reproduce the observed choice.
pub fn latent_scatter(variant: &str, seed: u64, iterations: usize) -> Result<Value> {
    let variant = AlgorithmVariant::from_label(variant)?;
    let sim = generate_simulation(&SimStudyConfig::simulation_study(seed), &mut RngStream::new(seed))?;
    let data = sim.data;
    let prior = PriorSpec::default_for(data.p(), data.q(), variant.identification())?;
    let mut config = protocol(iterations, seed)?;
    config.latent_indices = (0..data.n()).collect();
    let out = run_chain(variant, &data, &prior, &config, &mut RngStream::substream(seed, 0))?;

    let kept = out.retained();
    let mut points = Vec::new();
    for r in kept.saturating_sub(SCATTER_SWEEPS)..kept {
        for trace in &out.latent_traces {
            let w = &trace.draws[r];
            let y = data.choices()[trace.index];
            let consistent = classify(w.iter().copied()).map(|k| k == y).unwrap_or(false);
            points.push(json!([w[0], w[1], y, consistent]));
        }
    }
    let mut inconsistent = 0usize;
    let mut total = 0usize;
    for trace in &out.latent_traces {
        let y = data.choices()[trace.index];
        for w in &trace.draws {
            total += 1;
            if classify(w.iter().copied()).map(|k| k != y).unwrap_or(true) {
                inconsistent += 1;
            }
        }
    }
    Ok(json!({
        "variant": variant.to_string(),
        "points": points,
        "violation_fraction": out.violation_fraction(),
        "inconsistent_latent_fraction": inconsistent as f64 / total.max(1) as f64,
    }))
}

/// Runs two variants on the same simulated data and returns KS statistics
/// and 199 matched quantiles for every compared parameter.
pub fn compare_variants(a: &str, b: &str, seed: u64, iterations: usize) -> Result<Value> {
    let va = AlgorithmVariant::from_label(a)?;
    let vb = AlgorithmVariant::from_label(b)?;
    let sim = generate_simulation(&SimStudyConfig::simulation_study(seed), &mut RngStream::new(seed))?;
    let prior = PriorSpec::default_for(sim.data.p(), sim.data.q(), va.identification())?;
    let config = protocol(iterations, seed)?;
    if config.retained() < 100 {
        return Err(MnpError::Argument("need at least 150 iterations to compare".into()));
    }
    let run = run_paired_comparison(&sim.data, &prior, va, vb, &config)?;
    let sa = diagnostics::transform_draws(&run.chain_a.sigmas, &run.chain_a.betas, run.chain_a.identification)?;
    let sb = diagnostics::transform_draws(&run.chain_b.sigmas, &run.chain_b.betas, run.chain_b.identification)?;
    let params = sa
        .iter()
        .zip(&sb)
        .map(|(x, y): (&ScalarSeries, &ScalarSeries)| {
            let cmp = diagnostics::compare_chains(x, y)?;
            let qq: Vec<[f64; 2]> = cmp.qq_pairs.iter().map(|&(p, q)| [p, q]).collect();
            Ok(json!({ "label": x.label(), "ks": cmp.ks_statistic, "qq": qq }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "variant_a": va.to_string(),
        "variant_b": vb.to_string(),
        "violation_fraction_a": run.report.violation_fraction_a,
        "violation_fraction_b": run.report.violation_fraction_b,
        "parameters": params,
    }))
}

fn to_js(result: Result<Value>) -> std::result::Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = truncatedNormalHistogram)]
pub fn truncated_normal_histogram_js(
    mu: f64,
    var: f64,
    bound: f64,
    upper: bool,
    draws: u32,
    bins: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(truncated_normal_histogram(
        mu,
        var,
        bound,
        upper,
        draws as usize,
        bins as usize,
        seed as u64,
    ))
}

#[wasm_bindgen(js_name = latentScatter)]
pub fn latent_scatter_js(variant: &str, seed: u32, iterations: u32) -> std::result::Result<String, JsError> {
    to_js(latent_scatter(variant, seed as u64, iterations as usize))
}

#[wasm_bindgen(js_name = compareVariants)]
pub fn compare_variants_js(a: &str, b: &str, seed: u32, iterations: u32) -> std::result::Result<String, JsError> {
    to_js(compare_variants(a, b, seed as u64, iterations as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_matches_exact_mean() {
        let v = truncated_normal_histogram(0.0, 1.0, 2.0, false, 50_000, 40, 3).unwrap();
        let sample = v["sample_mean"].as_f64().unwrap();
        let exact = v["exact_mean"].as_f64().unwrap();
        assert!((exact - 2.3732).abs() < 1e-3, "{exact}");
        assert!((sample - exact).abs() < 0.01, "{sample} vs {exact}");
        let density: Vec<f64> = serde_json::from_value(v["density"].clone()).unwrap();
        let edges: Vec<f64> = serde_json::from_value(v["edges"].clone()).unwrap();
        let mass: f64 = density.iter().map(|d| d * (edges[1] - edges[0])).sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn upper_histogram_stays_below_bound() {
        let v = truncated_normal_histogram(1.0, 4.0, -1.0, true, 2000, 20, 1).unwrap();
        let edges: Vec<f64> = serde_json::from_value(v["edges"].clone()).unwrap();
        assert_eq!(*edges.last().unwrap(), -1.0);
        assert!(v["sample_mean"].as_f64().unwrap() < -1.0);
    }

    #[test]
    fn scatter_flags_only_the_unconstrained_sampler() {
        let constrained = latent_scatter("1.3", 1, 600).unwrap();
        assert_eq!(constrained["inconsistent_latent_fraction"].as_f64().unwrap(), 0.0);
        assert_eq!(constrained["points"].as_array().unwrap().len(), 50 * SCATTER_SWEEPS);
        let plain = latent_scatter("1.2", 1, 600).unwrap();
        assert!(plain["violation_fraction"].as_f64().unwrap() > 0.0);
        assert!(plain["inconsistent_latent_fraction"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn comparison_lists_every_parameter() {
        let v = compare_variants("1.1", "1.3", 2, 600).unwrap();
        let params = v["parameters"].as_array().unwrap();
        let labels: Vec<&str> = params.iter().map(|p| p["label"].as_str().unwrap()).collect();
        assert_eq!(labels, ["beta_1", "beta_2", "log_sigma2_2", "fisher_rho_1_2"]);
        assert_eq!(params[0]["qq"].as_array().unwrap().len(), 199);
    }

    #[test]
    fn bad_arguments_are_errors() {
        assert!(latent_scatter("4.1", 1, 600).is_err());
        assert!(compare_variants("1.3", "3.2", 1, 600).is_err());
        assert!(truncated_normal_histogram(0.0, -1.0, 0.0, false, 10, 10, 1).is_err());
        assert!(latent_scatter("1.3", 1, MAX_ITERATIONS + 1).is_err());
    }
}
