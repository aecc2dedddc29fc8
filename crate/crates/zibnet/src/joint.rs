//! The mixed-margin bivariate density for two zero-inflated beta margins
//! joined by a Frank copula, and the pairwise log-likelihood built from it.
//!
//! Each observation falls into one of four cases: both components positive
//! (a copula density times two beta densities), exactly one component zero
//! (a conditional copula term times the other margin's density), or both
//! zero (the copula evaluated at the two zero masses — a probability).

use crate::copula::{frank_cdf, frank_cond_cdf, frank_log_pdf, FrankTheta};
use crate::error::{Error, Result};
use crate::margin::{zib_cdf, zib_log_pdf, MarginParams, ZibParams};
use serde::{Deserialize, Serialize};

/// Which components of a pair are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// both positive
    BothPositive,
    /// x_i = 0 < x_j
    FirstZero,
    /// x_j = 0 < x_i
    SecondZero,
    /// both zero
    BothZero,
}

/// One paired observation with its case tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairObservation {
    pub x_i: f64,
    pub x_j: f64,
    pub scenario: Scenario,
}

impl PairObservation {
    pub fn new(x_i: f64, x_j: f64) -> Result<Self> {
        Ok(PairObservation {
            x_i,
            x_j,
            scenario: classify_scenario(x_i, x_j)?,
        })
    }
}

/// Tag a pair by which components are zero.
pub fn classify_scenario(x_i: f64, x_j: f64) -> Result<Scenario> {
    for x in [x_i, x_j] {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Domain(format!("pair component {x} outside [0,1)")));
        }
    }
    Ok(match (x_i == 0.0, x_j == 0.0) {
        (false, false) => Scenario::BothPositive,
        (true, false) => Scenario::FirstZero,
        (false, true) => Scenario::SecondZero,
        (true, true) => Scenario::BothZero,
    })
}

/// Log of [`joint_density`]; −inf when the density underflows to zero.
pub fn joint_log_density(
    x_i: f64,
    x_j: f64,
    gi: &ZibParams,
    gj: &ZibParams,
    theta: FrankTheta,
) -> Result<f64> {
    match classify_scenario(x_i, x_j)? {
        Scenario::BothPositive => {
            let u = zib_cdf(x_i, gi)?;
            let v = zib_cdf(x_j, gj)?;
            Ok(frank_log_pdf(u, v, theta) + zib_log_pdf(x_i, gi)? + zib_log_pdf(x_j, gj)?)
        }
        Scenario::FirstZero => {
            let v = zib_cdf(x_j, gj)?;
            let cond = frank_cond_cdf(gi.p, v, theta)?;
            Ok(cond.ln() + zib_log_pdf(x_j, gj)?)
        }
        Scenario::SecondZero => {
            let u = zib_cdf(x_i, gi)?;
            let cond = frank_cond_cdf(gj.p, u, theta)?;
            Ok(cond.ln() + zib_log_pdf(x_i, gi)?)
        }
        Scenario::BothZero => Ok(frank_cdf(gi.p, gj.p, theta)?.ln()),
    }
}

/// Density (or probability mass, when both components are zero) of the pair
/// model at a point.
pub fn joint_density(
    x_i: f64,
    x_j: f64,
    gi: &ZibParams,
    gj: &ZibParams,
    theta: FrankTheta,
) -> Result<f64> {
    Ok(joint_log_density(x_i, x_j, gi, gj, theta)?.exp())
}

/// Pairwise log-likelihood: sum of log joint densities over the data, with
/// per-term underflow clamped as in the margin log-likelihood. Returns the
/// total and an underflow flag.
pub fn pair_loglik(
    data: &[PairObservation],
    gi: &MarginParams<'_>,
    gj: &MarginParams<'_>,
    theta: FrankTheta,
) -> Result<(f64, bool)> {
    const FLOOR: f64 = -1e300;
    if data.is_empty() {
        return Err(Error::Domain("pair log-likelihood needs data".into()));
    }
    let mut total = 0.0;
    let mut underflow = false;
    for (l, obs) in data.iter().enumerate() {
        let lp = joint_log_density(obs.x_i, obs.x_j, &gi.at(l), &gj.at(l), theta)?;
        if lp.is_finite() {
            total += lp;
        } else {
            total += FLOOR / data.len() as f64;
            underflow = true;
        }
    }
    Ok((total, underflow))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::margin::{zib_loglik, zib_pdf};
    use crate::numerics::gauss_legendre_unit;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(p: f64, mu: f64, phi: f64) -> ZibParams {
        ZibParams::new(p, mu, phi).unwrap()
    }

    #[test]
    fn scenario_tags() {
        assert_eq!(classify_scenario(0.2, 0.3).unwrap(), Scenario::BothPositive);
        assert_eq!(classify_scenario(0.0, 0.3).unwrap(), Scenario::FirstZero);
        assert_eq!(classify_scenario(0.3, 0.0).unwrap(), Scenario::SecondZero);
        assert_eq!(classify_scenario(0.0, 0.0).unwrap(), Scenario::BothZero);
        assert!(classify_scenario(1.0, 0.5).is_err());
        assert!(classify_scenario(-0.1, 0.5).is_err());
    }

    #[test]
    fn independence_factorizes_all_cases() {
        let gi = params(0.4, 0.3, 5.0);
        let gj = params(0.5, 0.6, 7.0);
        let t0 = FrankTheta(0.0);
        // both zero
        let d = joint_density(0.0, 0.0, &gi, &gj, t0).unwrap();
        assert!((d - 0.4 * 0.5).abs() < 1e-12);
        // the other three cases
        for &(xi, xj) in &[(0.0, 0.3), (0.3, 0.0), (0.3, 0.6)] {
            let d = joint_density(xi, xj, &gi, &gj, t0).unwrap();
            let prod = zib_pdf(xi, &gi).unwrap() * zib_pdf(xj, &gj).unwrap();
            assert!(
                (d - prod).abs() < 1e-10 * (1.0 + prod),
                "({xi},{xj}): {d} vs {prod}"
            );
        }
    }

    #[test]
    fn total_mass_is_one() {
        // S4 mass + both half-line integrals + the interior double integral
        let gi = params(0.4, 0.5, 4.0);
        let gj = params(0.5, 1.0 / 3.0, 9.0);
        let theta = FrankTheta(1.5);
        let (nodes, weights) = gauss_legendre_unit(96);

        let s4 = joint_density(0.0, 0.0, &gi, &gj, theta).unwrap();
        let mut s2 = 0.0; // x_i = 0, integrate over x_j
        let mut s3 = 0.0;
        let mut s1 = 0.0;
        for (a, &xj) in nodes.iter().enumerate() {
            s2 += weights[a] * joint_density(0.0, xj, &gi, &gj, theta).unwrap();
            s3 += weights[a] * joint_density(xj, 0.0, &gi, &gj, theta).unwrap();
            for (b, &xi) in nodes.iter().enumerate() {
                s1 += weights[a]
                    * weights[b]
                    * joint_density(xi, xj, &gi, &gj, theta).unwrap();
            }
        }
        let total = s4 + s2 + s3 + s1;
        assert!((total - 1.0).abs() < 1e-6, "total mass {total}");
    }

    #[test]
    fn one_zero_branch_matches_sampler_binning() {
        // P(x_i = 0, x_j in [a,b]) from the model versus Monte-Carlo counts
        let gi = params(0.4, 0.3, 5.0);
        let gj = params(0.25, 0.6, 6.0);
        let theta = FrankTheta(2.0);
        let n = 200_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (lo, hi) = (0.3, 0.6);
        let mut hits = 0usize;
        for _ in 0..n {
            let u: f64 = rng.gen();
            let w: f64 = rng.gen();
            let v = crate::copula::frank_inv_cond(w, u, theta).unwrap();
            let xi = crate::margin::zib_quantile(u, &gi).unwrap();
            let xj = crate::margin::zib_quantile(v, &gj).unwrap();
            if xi == 0.0 && (lo..hi).contains(&xj) {
                hits += 1;
            }
        }
        let (nodes, weights) = gauss_legendre_unit(64);
        let mut prob = 0.0;
        for (a, &t) in nodes.iter().enumerate() {
            let xj = lo + t * (hi - lo);
            prob += weights[a] * (hi - lo) * joint_density(0.0, xj, &gi, &gj, theta).unwrap();
        }
        let phat = hits as f64 / n as f64;
        let se = (prob * (1.0 - prob) / n as f64).sqrt();
        assert!(
            (phat - prob).abs() < 3.0 * se,
            "binned {phat} vs integral {prob} (se {se})"
        );
    }

    #[test]
    fn loglik_independence_splits_into_margins() {
        let gi = params(0.3, 0.4, 5.0);
        let gj = params(0.2, 0.6, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<PairObservation> = (0..200)
            .map(|_| {
                let xi = crate::margin::zib_quantile(rng.gen(), &gi).unwrap();
                let xj = crate::margin::zib_quantile(rng.gen(), &gj).unwrap();
                PairObservation::new(xi, xj).unwrap()
            })
            .collect();
        let (joint, _) =
            pair_loglik(&data, &MarginParams::Constant(gi), &MarginParams::Constant(gj), FrankTheta(0.0))
                .unwrap();
        let xs: Vec<f64> = data.iter().map(|o| o.x_i).collect();
        let ys: Vec<f64> = data.iter().map(|o| o.x_j).collect();
        let (li, _) = zib_loglik(&xs, &MarginParams::Constant(gi)).unwrap();
        let (lj, _) = zib_loglik(&ys, &MarginParams::Constant(gj)).unwrap();
        assert!((joint - li - lj).abs() < 1e-9 * (1.0 + joint.abs()));
    }

    #[test]
    fn loglik_is_sum_of_log_densities() {
        let gi = params(0.3, 0.4, 5.0);
        let gj = params(0.2, 0.6, 8.0);
        let theta = FrankTheta(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data: Vec<PairObservation> = (0..50)
            .map(|_| {
                let u: f64 = rng.gen();
                let w: f64 = rng.gen();
                let v = crate::copula::frank_inv_cond(w, u, theta).unwrap();
                PairObservation::new(
                    crate::margin::zib_quantile(u, &gi).unwrap(),
                    crate::margin::zib_quantile(v, &gj).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let (ll, _) =
            pair_loglik(&data, &MarginParams::Constant(gi), &MarginParams::Constant(gj), theta)
                .unwrap();
        let direct: f64 = data
            .iter()
            .map(|o| joint_log_density(o.x_i, o.x_j, &gi, &gj, theta).unwrap())
            .sum();
        assert!((ll - direct).abs() < 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn loglik_matches_closed_form_four_part_sum() {
        // Independent high-precision accounting: group the observations by
        // case and accumulate each case's closed-form contribution.
        let gi = params(0.35, 0.45, 6.0);
        let gj = params(0.25, 0.55, 4.0);
        let theta = FrankTheta(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<PairObservation> = (0..20)
            .map(|_| {
                let u: f64 = rng.gen();
                let w: f64 = rng.gen();
                let v = crate::copula::frank_inv_cond(w, u, theta).unwrap();
                PairObservation::new(
                    crate::margin::zib_quantile(u, &gi).unwrap(),
                    crate::margin::zib_quantile(v, &gj).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let mut expected = 0.0;
        for o in &data {
            expected += match o.scenario {
                Scenario::BothPositive => {
                    let u = zib_cdf(o.x_i, &gi).unwrap();
                    let v = zib_cdf(o.x_j, &gj).unwrap();
                    crate::copula::frank_pdf(u, v, theta).unwrap().ln()
                        + zib_pdf(o.x_i, &gi).unwrap().ln()
                        + zib_pdf(o.x_j, &gj).unwrap().ln()
                }
                Scenario::FirstZero => {
                    let v = zib_cdf(o.x_j, &gj).unwrap();
                    frank_cond_cdf(gi.p, v, theta).unwrap().ln()
                        + zib_pdf(o.x_j, &gj).unwrap().ln()
                }
                Scenario::SecondZero => {
                    let u = zib_cdf(o.x_i, &gi).unwrap();
                    frank_cond_cdf(gj.p, u, theta).unwrap().ln()
                        + zib_pdf(o.x_i, &gi).unwrap().ln()
                }
                Scenario::BothZero => frank_cdf(gi.p, gj.p, theta).unwrap().ln(),
            };
        }
        let (ll, _) =
            pair_loglik(&data, &MarginParams::Constant(gi), &MarginParams::Constant(gj), theta)
                .unwrap();
        assert!((ll - expected).abs() < 1e-8 * (1.0 + expected.abs()));
    }

    proptest! {
        // the density is nonnegative and exchangeable under a joint swap
        #[test]
        fn density_nonnegative_and_exchangeable(
            xi in 0.0..0.999f64,
            xj in 0.0..0.999f64,
            pi in 0.05..0.8f64,
            pj in 0.05..0.8f64,
            theta in -20.0..20.0f64,
        ) {
            let xi = if xi < 0.01 { 0.0 } else { xi };
            let xj = if xj < 0.01 { 0.0 } else { xj };
            let gi = params(pi, 0.4, 5.0);
            let gj = params(pj, 0.6, 7.0);
            let t = FrankTheta(theta);
            let d = joint_density(xi, xj, &gi, &gj, t).unwrap();
            prop_assert!(d >= 0.0);
            let swapped = joint_density(xj, xi, &gj, &gi, t).unwrap();
            prop_assert!((d - swapped).abs() <= 1e-10 * (1.0 + d.abs()));
        }
    }
}
