//! The individual Gibbs updates shared by all seven samplers.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{self, RngStream, TruncSpec};
use crate::error::{MnpError, Result};
use crate::linalg;
use crate::model::{self, ChainState, MnpData, PriorSpec};

use super::variant::{AlgorithmVariant, Family};

/// Conditional law of latent coordinate `k` given the others:
/// `mean = (X beta)_k + coef . (w_{-k} - (X beta)_{-k})`, variance `tau2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateConditional {
    /// Regression coefficients on every coordinate; entry `k` is zero.
    pub coef: Vec<f64>,
    pub tau2: f64,
}

/// Conditional regressions of each latent coordinate on the rest, read off
/// the precision matrix: `coef_j = -Omega_kj / Omega_kk`, `tau2 = 1 / Omega_kk`.
pub fn coordinate_conditionals(sigma: &DMatrix<f64>) -> Result<Vec<CoordinateConditional>> {
    let omega = linalg::spd_inverse(sigma)?;
    Ok(conditionals_from_precision(&omega))
}

fn conditionals_from_precision(omega: &DMatrix<f64>) -> Vec<CoordinateConditional> {
    let p = omega.nrows();
    (0..p)
        .map(|k| {
            let okk = omega[(k, k)];
            let coef = (0..p)
                .map(|j| if j == k { 0.0 } else { -omega[(k, j)] / okk })
                .collect();
            CoordinateConditional { coef, tau2: 1.0 / okk }
        })
        .collect()
}

/// Step 1(a): `(alpha^2)* = alpha0^2 trace(S Sigma^-1) / chi2_{nu p}`.
pub fn step1_alpha_prior(sigma: &DMatrix<f64>, prior: &PriorSpec, rng: &mut RngStream) -> Result<f64> {
    let omega = linalg::spd_inverse(sigma)?;
    alpha_sq_from_prior(&omega, prior, rng)
}

fn alpha_sq_from_prior(omega: &DMatrix<f64>, prior: &PriorSpec, rng: &mut RngStream) -> Result<f64> {
    let p = omega.nrows() as f64;
    let tr = (prior.scale() * omega).trace();
    let chi = distributions::sample_chi_square(prior.nu() * p, rng)?;
    Ok(prior.alpha0_sq() * tr / chi)
}

/// Step 1(b): one systematic scan over observations and coordinates,
/// drawing each latent from its truncated normal full conditional. Already
/// updated coordinates of the same observation are used as soon as they
/// are drawn.
pub fn step1_gibbs_w(state: &ChainState, data: &MnpData, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    let conditionals = coordinate_conditionals(&state.sigma)?;
    gibbs_scan(state, &conditionals, data, rng)
}

fn gibbs_scan(
    state: &ChainState,
    conditionals: &[CoordinateConditional],
    data: &MnpData,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    let p = data.p();
    let xb = data.linear_predictor(&state.beta);
    let mut w = state.latent.clone();
    let mut resid = vec![0.0; p];
    for (i, &y) in data.choices().iter().enumerate() {
        for k in 0..p {
            resid[k] = w[(i, k)] - xb[(i, k)];
        }
        for k in 0..p {
            let cond = &conditionals[k];
            let mu = xb[(i, k)]
                + cond
                    .coef
                    .iter()
                    .zip(&resid)
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, (c, r))| c * r)
                    .sum::<f64>();
            let trunc = truncation_for(&w, i, k, y);
            let draw = distributions::sample_truncated_normal(mu, cond.tau2, trunc, rng)?;
            w[(i, k)] = draw;
            resid[k] = draw - xb[(i, k)];
        }
        let got = model::classify(w.row(i).iter().copied())?;
        if got != y {
            return Err(MnpError::Numeric(format!(
                "latent scan left observation {i} classified as {got}, observed {y}"
            )));
        }
    }
    Ok(w)
}

/// Truncation region of coordinate `k` (0-based) of observation `i` given
/// its choice `y` and the current values of the other coordinates.
fn truncation_for(w: &DMatrix<f64>, i: usize, k: usize, y: usize) -> TruncSpec {
    if y == 0 {
        TruncSpec::upper(0.0)
    } else if y == k + 1 {
        let others = (0..w.ncols())
            .filter(|&j| j != k)
            .map(|j| w[(i, j)])
            .fold(0.0f64, f64::max);
        TruncSpec::lower(others)
    } else {
        TruncSpec::upper(w[(i, y - 1)].max(0.0))
    }
}

/// Gaussian conditional of beta given `W` and `Omega = Sigma^-1`, held as
/// the Cholesky factor of its information matrix.
pub(crate) struct BetaPosterior {
    info: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    pub mean: DVector<f64>,
}

impl BetaPosterior {
    /// `mean + scale * L^-T z` with `L L^T` the information matrix.
    pub fn draw(&self, scale: f64, rng: &mut RngStream) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.standard_normal());
        let dev = self
            .info
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal");
        &self.mean + dev * scale
    }

    #[cfg(test)]
    pub fn covariance(&self) -> DMatrix<f64> {
        self.info.inverse()
    }
}

/// GLS posterior of beta given latents `w`: information
/// `X' Omega X + A^-1`, mean solving `info * m = X' Omega w + A^-1 beta0`.
pub(crate) fn beta_posterior(
    data: &MnpData,
    omega: &DMatrix<f64>,
    w: &DMatrix<f64>,
    prior: &PriorSpec,
) -> Result<BetaPosterior> {
    let mut info = prior.beta_precision().clone();
    let mut rhs = prior.beta_precision() * prior.beta_mean();
    for (i, x) in data.designs().iter().enumerate() {
        let xt_omega = x.transpose() * omega;
        info += &xt_omega * x;
        rhs += xt_omega * w.row(i).transpose();
    }
    let info = linalg::cholesky(&linalg::symmetrize(info))
        .map_err(|e| MnpError::Numeric(format!("beta information matrix: {e}")))?;
    let mean = info.solve(&rhs);
    Ok(BetaPosterior { info, mean })
}

/// Result of Step 2 in families One and Three.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBetaDraw {
    pub alpha: f64,
    /// Identified `beta = beta~* / alpha*`.
    pub beta: DVector<f64>,
}

/// Step 2: draws `(alpha^2)*` from its conditional with beta integrated out,
/// then `beta~* ~ N(beta_hat, (alpha^2)* V)`, and returns `beta~* / alpha*`.
/// Requires a zero prior mean for beta.
pub fn step2_alpha_beta(
    w_tilde: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    data: &MnpData,
    prior: &PriorSpec,
    rng: &mut RngStream,
) -> Result<AlphaBetaDraw> {
    let omega = linalg::spd_inverse(sigma)?;
    alpha_beta_draw(w_tilde, &omega, data, prior, rng)
}

fn alpha_beta_draw(
    w_tilde: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    data: &MnpData,
    prior: &PriorSpec,
    rng: &mut RngStream,
) -> Result<AlphaBetaDraw> {
    if prior.beta_mean().iter().any(|&b| b != 0.0) {
        return Err(MnpError::Argument(
            "the marginalized beta step needs a zero prior mean for beta".into(),
        ));
    }
    let post = beta_posterior(data, omega, w_tilde, prior)?;
    let beta_hat = &post.mean;
    let mut ss = (prior.beta_precision() * beta_hat).dot(beta_hat);
    for (i, x) in data.designs().iter().enumerate() {
        let r = w_tilde.row(i).transpose() - x * beta_hat;
        ss += (omega * &r).dot(&r);
    }
    ss += (prior.scale_tilde() * omega).trace();
    let df = (data.n() as f64 + prior.nu()) * data.p() as f64;
    let alpha_sq = ss / distributions::sample_chi_square(df, rng)?;
    let alpha = alpha_sq.sqrt();
    let beta_tilde = post.draw(alpha, rng);
    Ok(AlphaBetaDraw {
        alpha,
        beta: beta_tilde / alpha,
    })
}

/// Inputs to the covariance step. `z` must be `W~* - alpha* X beta` (rows
/// per observation) with `beta` the identified coefficient the constraint
/// is evaluated at.
#[derive(Debug, Clone, Copy)]
pub struct Step3Input<'a> {
    pub z: &'a DMatrix<f64>,
    pub w_tilde: &'a DMatrix<f64>,
    pub beta: &'a DVector<f64>,
    /// Working parameter used to form `z`.
    pub alpha_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step3Draw {
    pub alpha: f64,
    pub sigma: DMatrix<f64>,
    pub latent: DMatrix<f64>,
    /// Replacement identified beta (only for variants that rescale beta).
    pub beta: Option<DVector<f64>>,
    pub rejections: u64,
    /// The accepted draw fails the latent/choice constraint.
    pub violated: bool,
}

/// Step 3: `Sigma~* ~ Inv-Wishart(n + nu, S~ + sum Z_i Z_i')`, redrawn until
/// the constraint holds when the variant asks for it, then mapped back to
/// the identified scale.
pub fn step3_sigma(
    input: Step3Input<'_>,
    data: &MnpData,
    prior: &PriorSpec,
    variant: AlgorithmVariant,
    max_rejections: u64,
    rng: &mut RngStream,
) -> Result<Step3Draw> {
    let Step3Input {
        z,
        w_tilde,
        beta,
        alpha_star,
    } = input;
    let identification = variant.identification();
    let df = data.n() as f64 + prior.nu();
    let scale = linalg::symmetrize(prior.scale_tilde() + z.transpose() * z);
    if !(df > data.p() as f64 - 1.0) {
        return Err(MnpError::Argument(format!(
            "inverse-Wishart needs df > p - 1, got {df}"
        )));
    }
    let scale_lower = linalg::cholesky(&scale)
        .map_err(|e| MnpError::Numeric(format!("covariance step scale: {e}")))?
        .l();
    let xb = data.linear_predictor(beta);

    let mut rejections = 0u64;
    let (sigma_tilde, s) = loop {
        let draw = distributions::sample_inv_wishart_factored(df, &scale_lower, rng)?;
        let s = identification.scale_of(&draw);
        if !variant.constrained_sigma || model::constraint_holds(z, &xb, s, data.choices())? {
            break (draw, s);
        }
        rejections += 1;
        if rejections >= max_rejections {
            return Err(MnpError::StuckChain {
                iteration: 0,
                max_rejections,
                mean_rejections: f64::NAN,
            });
        }
    };
    let violated = !variant.constrained_sigma && !model::constraint_holds(z, &xb, s, data.choices())?;

    let mut sigma = sigma_tilde / (s * s);
    match identification {
        crate::model::Identification::FirstDiagonal => sigma[(0, 0)] = 1.0,
        crate::model::Identification::Trace => {}
    }
    let latent = if variant.corrected_transform {
        (z + &xb * s) / s
    } else {
        w_tilde / s
    };
    let beta = variant.rescale_beta_step3.then(|| beta * (alpha_star / s));
    Ok(Step3Draw {
        alpha: s,
        sigma,
        latent,
        beta,
        rejections,
        violated,
    })
}

/// Bookkeeping from one full iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TransitionInfo {
    pub rejections: u64,
    pub violated: bool,
}

/// Advances `state` by one full iteration of `variant`.
pub fn transition(
    state: &mut ChainState,
    variant: AlgorithmVariant,
    data: &MnpData,
    prior: &PriorSpec,
    max_rejections: u64,
    rng: &mut RngStream,
) -> Result<TransitionInfo> {
    let omega = linalg::spd_inverse(&state.sigma)?;
    let conditionals = conditionals_from_precision(&omega);

    // Step 1: working parameter from its prior, then latents.
    let alpha_sq = alpha_sq_from_prior(&omega, prior, rng)?;
    let alpha_star = alpha_sq.sqrt();
    let w_star = gibbs_scan(state, &conditionals, data, rng)?;
    let w_tilde = &w_star * alpha_star;

    let draw = match variant.family {
        Family::One | Family::Three => {
            let ab = alpha_beta_draw(&w_tilde, &omega, data, prior, rng)?;
            let z = &w_tilde - data.linear_predictor(&ab.beta) * ab.alpha;
            let draw = step3_sigma(
                Step3Input {
                    z: &z,
                    w_tilde: &w_tilde,
                    beta: &ab.beta,
                    alpha_star: ab.alpha,
                },
                data,
                prior,
                variant,
                max_rejections,
                rng,
            )?;
            state.beta = draw.beta.clone().unwrap_or(ab.beta);
            draw
        }
        Family::Two => {
            let z = (&w_star - data.linear_predictor(&state.beta)) * alpha_star;
            let draw = step3_sigma(
                Step3Input {
                    z: &z,
                    w_tilde: &w_tilde,
                    beta: &state.beta,
                    alpha_star,
                },
                data,
                prior,
                variant,
                max_rejections,
                rng,
            )?;
            let omega_new = linalg::spd_inverse(&draw.sigma)?;
            state.beta = beta_posterior(data, &omega_new, &draw.latent, prior)?.draw(1.0, rng);
            draw
        }
    };
    state.alpha = draw.alpha;
    state.sigma = draw.sigma;
    state.latent = draw.latent;
    Ok(TransitionInfo {
        rejections: draw.rejections,
        violated: draw.violated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_state, Identification};

    /// Direct partitioned-covariance formula for the conditional of `k`.
    fn direct_conditional(sigma: &DMatrix<f64>, k: usize) -> (Vec<f64>, f64) {
        let p = sigma.nrows();
        let rest: Vec<usize> = (0..p).filter(|&j| j != k).collect();
        let s_rr = DMatrix::from_fn(rest.len(), rest.len(), |a, b| sigma[(rest[a], rest[b])]);
        let s_kr = DMatrix::from_fn(1, rest.len(), |_, b| sigma[(k, rest[b])]);
        let reg = &s_kr * s_rr.try_inverse().unwrap();
        let tau2 = sigma[(k, k)] - (&reg * s_kr.transpose())[(0, 0)];
        let mut coef = vec![0.0; p];
        for (b, &j) in rest.iter().enumerate() {
            coef[j] = reg[(0, b)];
        }
        (coef, tau2)
    }

    #[test]
    fn conditional_for_correlated_pair() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let conds = coordinate_conditionals(&sigma).unwrap();
        // beta = 0 and the other coordinate at 1: mean 0.5, variance 0.75.
        assert!((conds[0].coef[1] * 1.0 - 0.5).abs() < 1e-12);
        assert!((conds[0].tau2 - 0.75).abs() < 1e-12);
        assert!((conds[1].coef[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conditionals_match_partitioned_formula() {
        let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 2.0, 0.4, -0.2, 0.4, 1.5]);
        let conds = coordinate_conditionals(&sigma).unwrap();
        for k in 0..3 {
            let (coef, tau2) = direct_conditional(&sigma, k);
            assert!((conds[k].tau2 - tau2).abs() < 1e-12);
            for j in 0..3 {
                assert!((conds[k].coef[j] - coef[j]).abs() < 1e-12);
            }
        }
        let id = coordinate_conditionals(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(id[0].coef, vec![0.0, 0.0]);
        assert_eq!(id[1].tau2, 1.0);
    }

    #[test]
    fn alpha_prior_moments() {
        // Sigma = S gives trace(S Sigma^-1) = p = 2; alpha0^2 = 2 so draws are 4 / chi2_4.
        let prior = PriorSpec::default_for(2, 1, Identification::FirstDiagonal).unwrap();
        let sigma = prior.scale().clone();
        let mut rng = RngStream::new(12);
        let mut xs: Vec<f64> = (0..1_000_000)
            .map(|_| step1_alpha_prior(&sigma, &prior, &mut rng).unwrap())
            .collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((m - 2.0).abs() < 0.05, "mean {m}");
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = xs[xs.len() / 2];
        assert!((med - 4.0 / 3.356_694).abs() < 0.01, "median {med}");
    }

    #[test]
    fn binary_probit_scan_respects_signs() {
        let designs = vec![DMatrix::from_element(1, 1, 1.0); 4];
        let data = MnpData::new(vec![0, 1, 0, 1], designs).unwrap();
        let prior = PriorSpec::default_for(1, 1, Identification::FirstDiagonal).unwrap();
        let mut state = init_state(&data, &prior);
        state.beta = DVector::from_element(1, 0.3);
        let mut rng = RngStream::new(13);
        for _ in 0..100 {
            let w = step1_gibbs_w(&state, &data, &mut rng).unwrap();
            for (i, &y) in data.choices().iter().enumerate() {
                assert_eq!(w[(i, 0)] > 0.0, y == 1);
            }
            state.latent = w;
        }
    }

    #[test]
    fn scan_mean_with_independent_coordinates() {
        // Sigma = I, choice 0: each coordinate is N(X_k beta, 1) below zero.
        let designs = vec![DMatrix::from_row_slice(2, 1, &[1.0, -1.0])];
        let data = MnpData::new(vec![0], designs).unwrap();
        let prior = PriorSpec::default_for(2, 1, Identification::FirstDiagonal).unwrap();
        let mut state = init_state(&data, &prior);
        state.beta = DVector::from_element(1, 0.5);
        let mut rng = RngStream::new(14);
        let n = 100_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let w = step1_gibbs_w(&state, &data, &mut rng).unwrap();
            sum[0] += w[(0, 0)];
            sum[1] += w[(0, 1)];
        }
        // E[X | X < 0] for X ~ N(m, 1) is m - phi(m) / Phi(-m).
        let oracle = |m: f64| {
            use statrs::distribution::{Continuous, ContinuousCDF, Normal};
            let nd = Normal::new(0.0, 1.0).unwrap();
            m - nd.pdf(m) / nd.cdf(-m)
        };
        assert!((sum[0] / n as f64 - oracle(0.5)).abs() < 0.01);
        assert!((sum[1] / n as f64 - oracle(-0.5)).abs() < 0.01);
    }

    #[test]
    fn saturated_gls_recovers_latent() {
        let data = MnpData::new(vec![1], vec![DMatrix::identity(2, 2)]).unwrap();
        let prior = PriorSpec::new(
            2.0,
            DMatrix::identity(2, 2),
            2.0,
            DMatrix::identity(2, 2) * 1e12,
            DVector::zeros(2),
            Identification::FirstDiagonal,
        )
        .unwrap();
        let w = DMatrix::from_row_slice(1, 2, &[1.3, -0.4]);
        let omega = DMatrix::identity(2, 2);
        let beta_hat = beta_posterior(&data, &omega, &w, &prior).unwrap().mean;
        assert!((beta_hat[0] - 1.3).abs() < 1e-9);
        assert!((beta_hat[1] + 0.4).abs() < 1e-9);
    }

    #[test]
    fn beta_draws_follow_inverse_information() {
        let data = MnpData::new(
            vec![1, 2, 0],
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, -0.7]),
                DMatrix::from_row_slice(2, 2, &[0.2, 1.1, -0.4, 0.5]),
                DMatrix::from_row_slice(2, 2, &[-0.6, 0.0, 0.9, 1.4]),
            ],
        )
        .unwrap();
        let prior = PriorSpec::default_for(2, 2, Identification::FirstDiagonal).unwrap();
        let omega = DMatrix::from_row_slice(2, 2, &[1.5, -0.4, -0.4, 0.8]);
        let w = DMatrix::from_row_slice(3, 2, &[0.4, -1.0, 1.2, 0.3, -0.5, -0.2]);
        let post = beta_posterior(&data, &omega, &w, &prior).unwrap();
        let cov = post.covariance();
        let mut rng = RngStream::new(17);
        let draws = 200_000;
        let scale = 1.7;
        let mut m = DVector::zeros(2);
        let mut c = DMatrix::zeros(2, 2);
        for _ in 0..draws {
            let d = post.draw(scale, &mut rng) - &post.mean;
            m += &d;
            c += &d * d.transpose();
        }
        m /= draws as f64;
        c /= draws as f64;
        let target = cov * (scale * scale);
        for i in 0..2 {
            assert!(m[i].abs() < 4.0 * (target[(i, i)] / draws as f64).sqrt());
            for j in 0..2 {
                let tol = 0.02 * (target[(i, i)] * target[(j, j)]).sqrt();
                assert!((c[(i, j)] - target[(i, j)]).abs() < tol, "{c} vs {target}");
            }
        }
    }

    #[test]
    fn step2_rejects_nonzero_prior_mean() {
        let data = MnpData::new(vec![1], vec![DMatrix::identity(2, 2)]).unwrap();
        let prior = PriorSpec::new(
            2.0,
            DMatrix::identity(2, 2),
            2.0,
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 0.0]),
            Identification::FirstDiagonal,
        )
        .unwrap();
        let mut rng = RngStream::new(0);
        let w = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!(step2_alpha_beta(&w, &DMatrix::identity(2, 2), &data, &prior, &mut rng).is_err());
    }

    #[test]
    fn transforms_coincide_when_scale_is_unchanged() {
        // With alpha* = alpha_new and fixed beta, Z + alpha X beta = W~.
        let designs = vec![DMatrix::from_row_slice(2, 1, &[0.5, -0.5]); 2];
        let data = MnpData::new(vec![1, 0], designs).unwrap();
        let beta = DVector::from_element(1, 0.8);
        let alpha = 1.7;
        let w_tilde = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -0.3, -1.2]);
        let z = &w_tilde - data.linear_predictor(&beta) * alpha;
        let corrected = (&z + data.linear_predictor(&beta) * alpha) / alpha;
        let legacy = &w_tilde / alpha;
        assert!((corrected - legacy).amax() < 1e-12);
    }

    #[test]
    fn constrained_step_output_is_consistent() {
        let designs = vec![
            DMatrix::from_row_slice(2, 2, &[0.1, 0.5, -0.3, 0.2]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.2, -0.8]),
            DMatrix::from_row_slice(2, 2, &[-0.5, 1.2, 0.6, 0.3]),
        ];
        let data = MnpData::new(vec![2, 0, 1], designs).unwrap();
        let prior = PriorSpec::default_for(2, 2, Identification::FirstDiagonal).unwrap();
        let mut rng = RngStream::new(15);
        let beta = DVector::from_vec(vec![-0.7, 1.1]);
        let w = DMatrix::from_row_slice(3, 2, &[-0.2, 0.9, -1.0, -0.4, 1.3, 0.2]);
        let alpha_star = 1.4;
        let w_tilde = &w * alpha_star;
        let z = &w_tilde - data.linear_predictor(&beta) * alpha_star;
        for _ in 0..500 {
            let draw = step3_sigma(
                Step3Input {
                    z: &z,
                    w_tilde: &w_tilde,
                    beta: &beta,
                    alpha_star,
                },
                &data,
                &prior,
                AlgorithmVariant::ALG_1_3,
                1_000_000,
                &mut rng,
            )
            .unwrap();
            assert!(!draw.violated);
            assert_eq!(draw.sigma[(0, 0)], 1.0);
            for (i, &y) in data.choices().iter().enumerate() {
                assert_eq!(model::classify(draw.latent.row(i).iter().copied()).unwrap(), y);
            }
        }
    }

    #[test]
    fn stuck_constrained_step_errors() {
        // Y = 0 with Z = (1, -1) and X beta = 0 can never satisfy the constraint.
        let data = MnpData::new(vec![0], vec![DMatrix::zeros(2, 1)]).unwrap();
        let prior = PriorSpec::default_for(2, 1, Identification::FirstDiagonal).unwrap();
        let z = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let beta = DVector::zeros(1);
        let mut rng = RngStream::new(0);
        let err = step3_sigma(
            Step3Input {
                z: &z,
                w_tilde: &z,
                beta: &beta,
                alpha_star: 1.0,
            },
            &data,
            &prior,
            AlgorithmVariant::ALG_1_3,
            50,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, MnpError::StuckChain { max_rejections: 50, .. }));
    }
}
