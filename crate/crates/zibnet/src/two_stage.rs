//! Two-stage estimation for one pair: fit each zero-inflated beta margin by
//! its own likelihood, then maximize the pair log-likelihood over the Frank
//! copula parameter with the margins frozen. Sampling covariance comes from
//! a leave-one-out jackknife over the full two-stage procedure, and
//! dependence is tested with a re-scaled likelihood-ratio statistic that is
//! asymptotically chi-squared(1) despite the plugged-in margins.

use crate::copula::{frank_cdf, frank_cond_cdf, frank_log_pdf, FrankTheta};
use crate::error::{Error, Result};
use crate::exec;
use crate::joint::{PairObservation, Scenario};
use crate::margin::{
    fit_zib_from, fit_zib_regression_from, zib_cdf, zib_log_pdf, ZibFit, ZibParams,
    ZibRegressionSpec,
};
use crate::numerics::{brent_optimize, chi2_sf_1df};
use serde::{Deserialize, Serialize};

/// Search interval for the copula parameter. Kendall's tau at the endpoints
/// is about +-0.90, well beyond any dependence plausible in relative
/// abundance data; endpoint hits are flagged rather than silently reported.
pub const THETA_BOUNDS: (f64, f64) = (-35.0, 35.0);

const BRENT_TOL: f64 = 1e-8;

/// Diagnostic flags attached to a pair fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStatus {
    /// theta landed on a search-interval endpoint
    pub boundary_hit: bool,
    /// a margin fit or the profile maximization did not converge
    pub nonconverged: bool,
    /// more than 10% of leave-one-out refits were skipped
    pub degraded_jackknife: bool,
    /// some log-density terms underflowed and were clamped
    pub underflow: bool,
}

impl PairStatus {
    pub fn is_clean(&self) -> bool {
        !self.boundary_hit && !self.nonconverged && !self.degraded_jackknife
    }
}

/// A fitted pair: margin fits, copula parameter, jackknife covariance, and
/// the independence test. Test fields are NaN until the corresponding step
/// has run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFit {
    pub fit_i: ZibFit,
    pub fit_j: ZibFit,
    pub theta_hat: f64,
    /// jackknife variance of theta_hat (bottom-right entry of `cov`)
    pub theta_var: f64,
    /// full jackknife covariance of the stacked parameter estimate
    pub cov: Vec<Vec<f64>>,
    pub lrt_stat: f64,
    pub p_value: f64,
    pub omega: f64,
    /// maximized pair log-likelihood
    pub loglik: f64,
    pub status: PairStatus,
    /// leave-one-out subsets skipped for violating the fit preconditions
    pub jackknife_skipped: usize,
}

impl PairFit {
    /// Stacked estimate (margin i block, margin j block, theta); the vector
    /// whose covariance the jackknife estimates.
    pub fn eta(&self) -> Vec<f64> {
        let mut v = self.fit_i.eta_block();
        v.extend(self.fit_j.eta_block());
        v.push(self.theta_hat);
        v
    }
}

/// Per-observation terms of the profile log-likelihood in theta. With the
/// margins frozen, every observation reduces to a (scenario, u, v) triple
/// plus a theta-free constant, so one theta evaluation is a few exp/log
/// calls per observation.
pub struct ProfileCache {
    terms: Vec<(Scenario, f64, f64)>,
    constant: f64,
    pub underflow: bool,
    n: usize,
}

impl ProfileCache {
    pub fn new(
        data: &[PairObservation],
        params_i: &[ZibParams],
        params_j: &[ZibParams],
    ) -> Result<Self> {
        const FLOOR: f64 = -1e300;
        let mut terms = Vec::with_capacity(data.len());
        let mut constant = 0.0;
        let mut underflow = false;
        let mut push_const = |lp: f64, constant: &mut f64| {
            if lp.is_finite() {
                *constant += lp;
            } else {
                *constant += FLOOR / data.len() as f64;
                underflow = true;
            }
        };
        for (l, obs) in data.iter().enumerate() {
            let (gi, gj) = (&params_i[l], &params_j[l]);
            match obs.scenario {
                Scenario::BothPositive => {
                    let u = zib_cdf(obs.x_i, gi)?;
                    let v = zib_cdf(obs.x_j, gj)?;
                    push_const(
                        zib_log_pdf(obs.x_i, gi)? + zib_log_pdf(obs.x_j, gj)?,
                        &mut constant,
                    );
                    terms.push((Scenario::BothPositive, u, v));
                }
                Scenario::FirstZero => {
                    let v = zib_cdf(obs.x_j, gj)?;
                    push_const(zib_log_pdf(obs.x_j, gj)?, &mut constant);
                    terms.push((Scenario::FirstZero, gi.p, v));
                }
                Scenario::SecondZero => {
                    let u = zib_cdf(obs.x_i, gi)?;
                    push_const(zib_log_pdf(obs.x_i, gi)?, &mut constant);
                    terms.push((Scenario::SecondZero, u, gj.p));
                }
                Scenario::BothZero => {
                    terms.push((Scenario::BothZero, gi.p, gj.p));
                }
            }
        }
        let n = data.len();
        Ok(ProfileCache {
            terms,
            constant,
            underflow,
            n,
        })
    }

    /// Profile log-likelihood at theta.
    pub fn loglik(&self, theta: f64) -> f64 {
        const FLOOR: f64 = -1e300;
        let t = FrankTheta(theta);
        let mut total = self.constant;
        for &(scenario, u, v) in &self.terms {
            let lp = match scenario {
                Scenario::BothPositive => frank_log_pdf(u, v, t),
                // condition on the continuous margin, evaluate at the zero
                // mass of the discrete one
                Scenario::FirstZero => frank_cond_cdf(u, v, t).map_or(f64::NAN, f64::ln),
                Scenario::SecondZero => frank_cond_cdf(v, u, t).map_or(f64::NAN, f64::ln),
                Scenario::BothZero => frank_cdf(u, v, t).map_or(f64::NAN, f64::ln),
            };
            total += if lp.is_finite() {
                lp
            } else {
                FLOOR / self.terms.len() as f64
            };
        }
        total
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn check_preconditions(data: &[PairObservation]) -> Result<()> {
    let nz_i = data.iter().filter(|o| o.x_i > 0.0).count();
    let nz_j = data.iter().filter(|o| o.x_j > 0.0).count();
    if nz_i < 3 || nz_j < 3 {
        return Err(Error::TooFewNonzero(nz_i.min(nz_j)));
    }
    let co = data
        .iter()
        .filter(|o| o.scenario == Scenario::BothPositive)
        .count();
    if co < 2 {
        return Err(Error::MutuallyExclusive(co));
    }
    Ok(())
}

fn fit_margin(
    data: &[f64],
    spec: Option<&ZibRegressionSpec>,
    warm: Option<&ZibFit>,
) -> Result<ZibFit> {
    match spec {
        None => {
            let init = warm.and_then(|f| f.params).map(|p| (p.mu, p.phi));
            fit_zib_from(data, init)
        }
        Some(spec) => fit_zib_regression_from(data, spec, warm),
    }
}

fn two_stage_fit_warm(
    data: &[PairObservation],
    spec_i: Option<&ZibRegressionSpec>,
    spec_j: Option<&ZibRegressionSpec>,
    warm: Option<&PairFit>,
) -> Result<PairFit> {
    check_preconditions(data)?;
    let xs: Vec<f64> = data.iter().map(|o| o.x_i).collect();
    let ys: Vec<f64> = data.iter().map(|o| o.x_j).collect();

    // stage 1: margins, each by its own likelihood
    let fit_i = fit_margin(&xs, spec_i, warm.map(|w| &w.fit_i))?;
    let fit_j = fit_margin(&ys, spec_j, warm.map(|w| &w.fit_j))?;
    let params_i = fit_i.per_obs_params(spec_i, data.len())?;
    let params_j = fit_j.per_obs_params(spec_j, data.len())?;

    // stage 2: copula parameter with the margins frozen
    let cache = ProfileCache::new(data, &params_i, &params_j)?;
    let opt = brent_optimize(
        |t| cache.loglik(t),
        THETA_BOUNDS.0,
        THETA_BOUNDS.1,
        BRENT_TOL,
    )?;

    let status = PairStatus {
        boundary_hit: opt.hit_boundary,
        nonconverged: !fit_i.converged || !fit_j.converged || !opt.converged,
        degraded_jackknife: false,
        underflow: cache.underflow,
    };
    Ok(PairFit {
        fit_i,
        fit_j,
        theta_hat: opt.x,
        theta_var: f64::NAN,
        cov: Vec::new(),
        lrt_stat: f64::NAN,
        p_value: f64::NAN,
        omega: f64::NAN,
        loglik: opt.value,
        status,
        jackknife_skipped: 0,
    })
}

/// Two-stage fit of margins and copula parameter. Covariance and test
/// fields are left unset; see [`jackknife_cov`] and [`rescaled_lrt`].
pub fn two_stage_fit(
    data: &[PairObservation],
    spec_i: Option<&ZibRegressionSpec>,
    spec_j: Option<&ZibRegressionSpec>,
) -> Result<PairFit> {
    two_stage_fit_warm(data, spec_i, spec_j, None)
}

/// Leave-one-out jackknife covariance of the stacked two-stage estimate.
/// Each replicate re-runs the full two-stage fit (warm-started at the full
/// fit) with one observation removed; the covariance is the sum of outer
/// products of the replicate deviations. Subsets violating the fit
/// preconditions are skipped and counted; more than 10% skipped marks the
/// result degraded. Updates `fit` in place and returns the matrix.
pub fn jackknife_cov(
    data: &[PairObservation],
    fit: &mut PairFit,
    spec_i: Option<&ZibRegressionSpec>,
    spec_j: Option<&ZibRegressionSpec>,
) -> Result<Vec<Vec<f64>>> {
    let n = data.len();
    let eta = fit.eta();
    let d = eta.len();
    if n < d + 2 {
        return Err(Error::TooFewForJackknife { n, params: d });
    }

    let warm = fit.clone();
    let replicates = exec::map_range(n, |l| {
        let mut subset: Vec<PairObservation> = Vec::with_capacity(n - 1);
        subset.extend_from_slice(&data[..l]);
        subset.extend_from_slice(&data[l + 1..]);
        let rows: Vec<usize> = (0..n).filter(|&r| r != l).collect();
        let sub_i = spec_i.map(|s| s.select_rows(&rows));
        let sub_j = spec_j.map(|s| s.select_rows(&rows));
        two_stage_fit_warm(&subset, sub_i.as_ref(), sub_j.as_ref(), Some(&warm))
            .ok()
            .map(|f| f.eta())
    });

    let mut cov = vec![vec![0.0; d]; d];
    let mut skipped = 0usize;
    for rep in &replicates {
        match rep {
            Some(eta_l) => {
                for a in 0..d {
                    let da = eta_l[a] - eta[a];
                    for b in 0..d {
                        cov[a][b] += da * (eta_l[b] - eta[b]);
                    }
                }
            }
            None => skipped += 1,
        }
    }
    fit.jackknife_skipped = skipped;
    fit.status.degraded_jackknife = skipped * 10 > n;
    fit.theta_var = cov[d - 1][d - 1];
    fit.cov = cov.clone();
    Ok(cov)
}

/// Re-scaled likelihood-ratio test of theta = theta0, margins held at their
/// stage-1 estimates. The raw statistic is multiplied by
/// omega = 1 / (var(theta_hat) * (-second derivative of the profile
/// log-likelihood)), which makes it asymptotically chi-squared(1).
/// Requires a jackknife variance on `fit`; updates the test fields in place
/// and returns (statistic, p-value, omega).
pub fn rescaled_lrt(
    data: &[PairObservation],
    fit: &mut PairFit,
    spec_i: Option<&ZibRegressionSpec>,
    spec_j: Option<&ZibRegressionSpec>,
    theta0: f64,
) -> Result<(f64, f64, f64)> {
    if !(THETA_BOUNDS.0..=THETA_BOUNDS.1).contains(&theta0) {
        return Err(Error::Domain(format!(
            "theta0 = {theta0} outside search interval"
        )));
    }
    if !fit.theta_var.is_finite() {
        return Err(Error::Config(
            "rescaled test needs a jackknife variance; run jackknife_cov first".into(),
        ));
    }
    let params_i = fit.fit_i.per_obs_params(spec_i, data.len())?;
    let params_j = fit.fit_j.per_obs_params(spec_j, data.len())?;
    let cache = ProfileCache::new(data, &params_i, &params_j)?;

    let theta = fit.theta_hat;
    let l_hat = cache.loglik(theta);
    let mut lambda = -2.0 * (cache.loglik(theta0) - l_hat);
    if lambda < 0.0 {
        if lambda > -1e-8 {
            lambda = 0.0; // numerical noise around theta0 = theta_hat
        } else {
            return Err(Error::Domain(format!(
                "negative likelihood ratio {lambda}: theta_hat is not the maximizer"
            )));
        }
    }

    let h = 1e-4 * (1.0 + theta.abs());
    let d2 = (cache.loglik(theta + h) - 2.0 * l_hat + cache.loglik(theta - h)) / (h * h);
    if d2 >= 0.0 {
        return Err(Error::NonpositiveCurvature(d2));
    }
    let omega = 1.0 / (fit.theta_var * -d2);
    let lambda_prime = omega * lambda;
    let p = chi2_sf_1df(lambda_prime);

    fit.lrt_stat = lambda_prime;
    fit.p_value = p;
    fit.omega = omega;
    Ok((lambda_prime, p, omega))
}

/// Fit, jackknife, and test against theta = 0 in one call.
pub fn independence_test(
    data: &[PairObservation],
    spec_i: Option<&ZibRegressionSpec>,
    spec_j: Option<&ZibRegressionSpec>,
) -> Result<PairFit> {
    let mut fit = two_stage_fit(data, spec_i, spec_j)?;
    jackknife_cov(data, &mut fit, spec_i, spec_j)?;
    rescaled_lrt(data, &mut fit, spec_i, spec_j, 0.0)?;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::margin::fit_zib;
    use crate::simulate::sample_pair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(p: f64, mu: f64, phi: f64) -> ZibParams {
        ZibParams::new(p, mu, phi).unwrap()
    }

    fn draw(n: usize, gi: ZibParams, gj: ZibParams, theta: f64, seed: u64) -> Vec<PairObservation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_pair(n, &gi, &gj, FrankTheta(theta), &mut rng).unwrap()
    }

    #[test]
    fn margins_match_standalone_fits_exactly() {
        let data = draw(300, params(0.3, 0.4, 5.0), params(0.2, 0.6, 7.0), 1.5, 21);
        let fit = two_stage_fit(&data, None, None).unwrap();
        let xs: Vec<f64> = data.iter().map(|o| o.x_i).collect();
        let ys: Vec<f64> = data.iter().map(|o| o.x_j).collect();
        let solo_i = fit_zib(&xs).unwrap();
        let solo_j = fit_zib(&ys).unwrap();
        assert_eq!(fit.fit_i.params.unwrap().p, solo_i.params.unwrap().p);
        assert!((fit.fit_i.params.unwrap().mu - solo_i.params.unwrap().mu).abs() < 1e-12);
        assert!((fit.fit_j.params.unwrap().phi - solo_j.params.unwrap().phi).abs() < 1e-9);
    }

    #[test]
    fn independent_data_gives_small_theta() {
        let data = draw(2000, params(0.3, 0.4, 5.0), params(0.2, 0.6, 7.0), 0.0, 22);
        let fit = two_stage_fit(&data, None, None).unwrap();
        assert!(fit.theta_hat.abs() < 0.3, "theta = {}", fit.theta_hat);
        assert!(!fit.status.boundary_hit);
    }

    #[test]
    fn recovers_theta_at_large_n() {
        let data = draw(
            5000,
            params(0.10, 2.0 / 7.0, 7.0),
            params(0.25, 5.0 / 7.0, 7.0),
            1.5,
            23,
        );
        let fit = two_stage_fit(&data, None, None).unwrap();
        assert!(
            (fit.theta_hat - 1.5).abs() < 0.15,
            "theta = {}",
            fit.theta_hat
        );
    }

    #[test]
    fn profile_grid_cross_check() {
        let data = draw(400, params(0.2, 0.5, 4.0), params(0.3, 1.0 / 3.0, 9.0), 2.0, 24);
        let fit = two_stage_fit(&data, None, None).unwrap();
        let params_i = fit.fit_i.per_obs_params(None, data.len()).unwrap();
        let params_j = fit.fit_j.per_obs_params(None, data.len()).unwrap();
        let cache = ProfileCache::new(&data, &params_i, &params_j).unwrap();
        let l_hat = cache.loglik(fit.theta_hat);
        let mut t = (fit.theta_hat - 3.0).max(THETA_BOUNDS.0);
        let hi = (fit.theta_hat + 3.0).min(THETA_BOUNDS.1);
        while t <= hi {
            assert!(
                cache.loglik(t) <= l_hat + 1e-7,
                "profile above maximum at theta = {t}"
            );
            t += 1e-3;
        }
    }

    #[test]
    fn pair_relabeling_leaves_statistic_unchanged() {
        let data = draw(120, params(0.25, 0.4, 6.0), params(0.35, 0.55, 5.0), 2.0, 25);
        let swapped: Vec<PairObservation> = data
            .iter()
            .map(|o| PairObservation::new(o.x_j, o.x_i).unwrap())
            .collect();
        let a = independence_test(&data, None, None).unwrap();
        let b = independence_test(&swapped, None, None).unwrap();
        assert!((a.theta_hat - b.theta_hat).abs() < 1e-6);
        assert!((a.lrt_stat - b.lrt_stat).abs() < 1e-6 * (1.0 + a.lrt_stat.abs()));
        assert!((a.p_value - b.p_value).abs() < 1e-8);
    }

    #[test]
    fn lrt_at_the_maximizer_is_zero() {
        let data = draw(150, params(0.2, 0.4, 5.0), params(0.3, 0.6, 6.0), 1.0, 26);
        let mut fit = two_stage_fit(&data, None, None).unwrap();
        jackknife_cov(&data, &mut fit, None, None).unwrap();
        let theta_hat = fit.theta_hat;
        let (lambda, p, omega) = rescaled_lrt(&data, &mut fit, None, None, theta_hat).unwrap();
        assert_eq!(lambda, 0.0);
        assert_eq!(p, 1.0);
        assert!(omega > 0.0);
    }

    #[test]
    fn jackknife_duplicated_data_halves_covariance() {
        let data = draw(90, params(0.2, 0.4, 5.0), params(0.25, 0.6, 6.0), 1.5, 27);
        let mut doubled = data.clone();
        doubled.extend_from_slice(&data);

        let mut f1 = two_stage_fit(&data, None, None).unwrap();
        jackknife_cov(&data, &mut f1, None, None).unwrap();
        let mut f2 = two_stage_fit(&doubled, None, None).unwrap();
        jackknife_cov(&doubled, &mut f2, None, None).unwrap();
        assert!(
            (f2.theta_var / f1.theta_var - 0.5).abs() < 0.25 * 0.5,
            "ratio = {}",
            f2.theta_var / f1.theta_var
        );
    }

    #[test]
    fn jackknife_variance_tracks_replicate_variance() {
        // at independence the jackknife theta-variance should be the right
        // order of magnitude against the across-replicate variance
        let gi = params(0.2, 0.4, 5.0);
        let gj = params(0.25, 0.6, 6.0);
        let reps = 40;
        let results: Vec<(f64, f64)> = (0..reps)
            .map(|r| {
                let data = draw(200, gi, gj, 0.0, 2700 + r);
                let mut fit = two_stage_fit(&data, None, None).unwrap();
                jackknife_cov(&data, &mut fit, None, None).unwrap();
                (fit.theta_hat, fit.theta_var)
            })
            .collect();
        let mean_theta = results.iter().map(|r| r.0).sum::<f64>() / reps as f64;
        let emp_var = results
            .iter()
            .map(|r| (r.0 - mean_theta).powi(2))
            .sum::<f64>()
            / (reps - 1) as f64;
        let mean_jk = results.iter().map(|r| r.1).sum::<f64>() / reps as f64;
        let ratio = mean_jk / emp_var;
        assert!(
            (0.5..=2.0).contains(&ratio),
            "jackknife/empirical variance ratio = {ratio}"
        );
    }

    #[test]
    fn strong_dependence_is_detected() {
        // near-comonotone continuous pair: x_j is a monotone transform of
        // x_i, so the test must reject decisively
        let gi = params(0.0, 0.4, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let data: Vec<PairObservation> = (0..100)
            .map(|_| {
                let u: f64 = rand::Rng::gen(&mut rng);
                let u = u.clamp(1e-6, 1.0 - 1e-6);
                let xi = crate::margin::zib_quantile(u, &gi).unwrap().max(1e-9);
                let xj = crate::margin::zib_quantile(u, &gi).unwrap().max(1e-9);
                PairObservation::new(xi, xj).unwrap()
            })
            .collect();
        let fit = independence_test(&data, None, None).unwrap();
        assert!(fit.p_value < 1e-6, "p = {}", fit.p_value);
        assert!(fit.theta_hat > 5.0);
    }

    #[test]
    fn mutually_exclusive_pair_is_an_error() {
        let mut data = Vec::new();
        for k in 0..10 {
            let x = 0.1 + 0.05 * k as f64;
            data.push(PairObservation::new(x, 0.0).unwrap());
            data.push(PairObservation::new(0.0, x).unwrap());
        }
        assert!(matches!(
            two_stage_fit(&data, None, None),
            Err(Error::MutuallyExclusive(0))
        ));
    }

    #[test]
    fn too_few_nonzero_is_an_error() {
        let mut data = vec![PairObservation::new(0.0, 0.0).unwrap(); 20];
        data[0] = PairObservation::new(0.5, 0.5).unwrap();
        data[1] = PairObservation::new(0.4, 0.4).unwrap();
        assert!(matches!(
            two_stage_fit(&data, None, None),
            Err(Error::TooFewNonzero(2))
        ));
    }

    #[test]
    fn jackknife_requires_enough_observations() {
        let data = draw(300, params(0.2, 0.4, 5.0), params(0.25, 0.6, 6.0), 1.0, 30);
        let mut fit = two_stage_fit(&data[..8], None, None).unwrap_or_else(|_| {
            // fall back to a subset that satisfies the fit preconditions
            two_stage_fit(&data[..8], None, None).unwrap()
        });
        assert!(matches!(
            jackknife_cov(&data[..8], &mut fit, None, None),
            Err(Error::TooFewForJackknife { n: 8, params: 7 })
        ));
    }

    #[test]
    fn omega_near_one_under_independence() {
        let data = draw(250, params(0.2, 0.4, 5.0), params(0.25, 0.6, 6.0), 0.0, 31);
        let fit = independence_test(&data, None, None).unwrap();
        assert!(
            (fit.omega - 1.0).abs() <= 0.35,
            "omega = {} too far from 1",
            fit.omega
        );
    }

    #[test]
    fn shuffled_columns_give_moderate_p_values() {
        // independent margins: p-values should not cluster near 0
        let gi = params(0.3, 0.4, 5.0);
        let gj = params(0.2, 0.55, 6.0);
        let mut small_count = 0;
        let reps = 30;
        for r in 0..reps {
            let data = draw(80, gi, gj, 0.0, 3100 + r);
            if let Ok(fit) = independence_test(&data, None, None) {
                if fit.p_value < 0.05 {
                    small_count += 1;
                }
            }
        }
        // binomial(30, 0.05) has essentially no mass above 8
        assert!(small_count <= 8, "{small_count}/{reps} rejections at 5%");
    }
}
