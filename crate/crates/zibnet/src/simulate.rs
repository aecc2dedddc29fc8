//! Sampling from the pair model by inverting the Rosenblatt transformation,
//! the simulation-study harness (bias/variance of the dependence estimate,
//! test size and power), and the rank-correlation competitor tests.

use crate::copula::{frank_inv_cond, FrankTheta};
use crate::error::{Error, Result};
use crate::exec;
use crate::joint::{PairObservation, Scenario};
use crate::margin::{zib_quantile, ZibParams, ZibRegressionSpec};
use crate::numerics::{normal_sf, student_t_two_sided};
use crate::two_stage::{independence_test, jackknife_cov, two_stage_fit};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Cap on whole-dataset redraws before a configuration is declared
/// infeasible.
pub const MAX_REDRAWS: u32 = 1000;

// ---------------------------------------------------------------------------
// rank statistics
// ---------------------------------------------------------------------------

/// Ranks with ties sharing the average rank (1-based).
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Count inversions (strict descents) in `v` by iterative merge sort.
fn merge_count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    let mut buf = vec![0.0; n];
    let mut count = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (mid + width).min(n);
            let (mut a, mut b, mut k) = (lo, mid, lo);
            while a < mid && b < hi {
                if v[b] < v[a] {
                    count += (mid - a) as u64;
                    buf[k] = v[b];
                    b += 1;
                } else {
                    buf[k] = v[a];
                    a += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - a)].copy_from_slice(&v[a..mid]);
            buf[k + (mid - a)..hi].copy_from_slice(&v[b..hi]);
            v[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo += 2 * width;
        }
        width *= 2;
    }
    count
}

fn tie_runs(sorted: &[f64]) -> Vec<u64> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        if j > i {
            runs.push((j - i + 1) as u64);
        }
        i = j + 1;
    }
    runs
}

/// Kendall's tau-b with tie correction, O(n log n): sort by (x, y), count
/// discordant pairs as merge-sort inversions of the y sequence, and adjust
/// the numerator and denominator for ties.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, y.len(), "paired vectors must have equal length");
    if n < 2 {
        return f64::NAN;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let n0 = (n as u64 * (n as u64 - 1)) / 2;
    // pairs tied on x, and tied on both, from runs in the sorted order
    let mut n1 = 0u64;
    let mut n3 = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let t = (j - i + 1) as u64;
        n1 += t * (t - 1) / 2;
        let mut a = i;
        while a <= j {
            let mut b = a;
            while b + 1 <= j && y[idx[b + 1]] == y[idx[a]] {
                b += 1;
            }
            let s = (b - a + 1) as u64;
            n3 += s * (s - 1) / 2;
            a = b + 1;
        }
        i = j + 1;
    }
    let mut y_sorted: Vec<f64> = y.to_vec();
    y_sorted.sort_by(f64::total_cmp);
    let n2: u64 = tie_runs(&y_sorted).iter().map(|&t| t * (t - 1) / 2).sum();

    let mut y_in_x_order: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    let discordant = merge_count_inversions(&mut y_in_x_order);

    let num = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * discordant as i64;
    let den = (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();
    if den == 0.0 {
        f64::NAN
    } else {
        num as f64 / den
    }
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    pearson_r(&average_ranks(x), &average_ranks(y))
}

/// Pearson's product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        f64::NAN
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Two-sided p-values of the three classical correlation tests.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrelationTests {
    pub pearson_p: f64,
    pub spearman_p: f64,
    pub kendall_p: f64,
    /// a margin was constant; all p-values reported as 1
    pub degenerate: bool,
}

fn t_test_p(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let nu = (n - 2) as f64;
    let t = r * (nu / (1.0 - r * r)).sqrt();
    student_t_two_sided(t, nu).unwrap_or(f64::NAN)
}

/// Pearson and Spearman tests by the t approximation; Kendall by the normal
/// approximation with the standard tie correction.
pub fn correlation_tests(x: &[f64], y: &[f64]) -> Result<CorrelationTests> {
    let n = x.len();
    if n < 5 || y.len() != n {
        return Err(Error::Domain(format!(
            "correlation tests need paired vectors of length >= 5, got {n}/{}",
            y.len()
        )));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Ok(CorrelationTests {
            pearson_p: 1.0,
            spearman_p: 1.0,
            kendall_p: 1.0,
            degenerate: true,
        });
    }

    let pearson_p = t_test_p(pearson_r(x, y), n);
    let spearman_p = t_test_p(spearman_rho(x, y), n);

    // Kendall S statistic and its tie-corrected null variance
    let tau = kendall_tau_b(x, y);
    let nf = n as f64;
    let mut xs = x.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut ys = y.to_vec();
    ys.sort_by(f64::total_cmp);
    let tx = tie_runs(&xs);
    let ty = tie_runs(&ys);
    let sum = |runs: &[u64], f: &dyn Fn(f64) -> f64| runs.iter().map(|&t| f(t as f64)).sum::<f64>();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum(&tx, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(&ty, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let t1 = sum(&tx, &|t| t * (t - 1.0));
    let u1 = sum(&ty, &|t| t * (t - 1.0));
    let t2 = sum(&tx, &|t| t * (t - 1.0) * (t - 2.0));
    let u2 = sum(&ty, &|t| t * (t - 1.0) * (t - 2.0));
    let var_s = (v0 - vt - vu) / 18.0
        + t1 * u1 / (2.0 * nf * (nf - 1.0))
        + t2 * u2 / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    // recover S from tau-b's normalization
    let n0 = nf * (nf - 1.0) / 2.0;
    let s_stat = tau * ((n0 - t1 / 2.0) * (n0 - u1 / 2.0)).sqrt();
    let kendall_p = if var_s > 0.0 {
        (2.0 * normal_sf(s_stat.abs() / var_s.sqrt())).min(1.0)
    } else {
        1.0
    };

    Ok(CorrelationTests {
        pearson_p,
        spearman_p,
        kendall_p,
        degenerate: false,
    })
}

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

fn dataset_ok(data: &[PairObservation]) -> bool {
    let nz_i = data.iter().filter(|o| o.x_i > 0.0).count();
    let nz_j = data.iter().filter(|o| o.x_j > 0.0).count();
    let co = data
        .iter()
        .filter(|o| o.scenario == Scenario::BothPositive)
        .count();
    nz_i >= 3 && nz_j >= 3 && co >= 2
}

fn draw_one<R: Rng>(gi: &ZibParams, gj: &ZibParams, theta: FrankTheta, rng: &mut R) -> Result<PairObservation> {
    let u: f64 = rng.gen();
    let w: f64 = rng.gen();
    let v = frank_inv_cond(w, u, theta)?;
    PairObservation::new(zib_quantile(u, gi)?, zib_quantile(v, gj)?)
}

/// Draw a dataset of n pairs: u, w independent uniforms, v the inverse
/// conditional CDF of the Frank copula at (w | u), then each margin's
/// quantile transform. The whole dataset is redrawn when either margin has
/// fewer than 3 nonzero values or fewer than 2 observations are nonzero in
/// both. Returns the data and the number of redraws spent.
pub fn sample_pair_counted<R: Rng>(
    n: usize,
    gi: &ZibParams,
    gj: &ZibParams,
    theta: FrankTheta,
    rng: &mut R,
) -> Result<(Vec<PairObservation>, u32)> {
    for attempt in 0..MAX_REDRAWS {
        let data: Result<Vec<PairObservation>> =
            (0..n).map(|_| draw_one(gi, gj, theta, rng)).collect();
        let data = data?;
        if dataset_ok(&data) {
            return Ok((data, attempt));
        }
    }
    Err(Error::GuardExhausted(MAX_REDRAWS))
}

/// [`sample_pair_counted`] without the redraw count.
pub fn sample_pair<R: Rng>(
    n: usize,
    gi: &ZibParams,
    gj: &ZibParams,
    theta: FrankTheta,
    rng: &mut R,
) -> Result<Vec<PairObservation>> {
    sample_pair_counted(n, gi, gj, theta, rng).map(|(d, _)| d)
}

/// True coefficients for the covariate setting: a standard-normal covariate
/// enters each margin's zero-mass probability through a logit model; the
/// beta mean and dispersion stay constant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegressionTruth {
    /// (intercept, slope) of the logit model for margin i's zero mass
    pub rho_i: [f64; 2],
    /// (intercept, slope) for margin j
    pub rho_j: [f64; 2],
    pub mu_i: f64,
    pub mu_j: f64,
    pub phi: f64,
}

fn inv_logit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl RegressionTruth {
    /// The default covariate setting: slopes (-0.5, 0.7) and (-0.3, 0.4),
    /// means inv_logit(-0.7) and inv_logit(-1), dispersion e^1.5.
    pub fn default_setting() -> Self {
        RegressionTruth {
            rho_i: [-0.5, 0.7],
            rho_j: [-0.3, 0.4],
            mu_i: inv_logit(-0.7),
            mu_j: inv_logit(-1.0),
            phi: 1.5_f64.exp(),
        }
    }

    fn margin_params(&self, c: f64) -> Result<(ZibParams, ZibParams)> {
        let pi = inv_logit(self.rho_i[0] + self.rho_i[1] * c).clamp(1e-12, 1.0 - 1e-12);
        let pj = inv_logit(self.rho_j[0] + self.rho_j[1] * c).clamp(1e-12, 1.0 - 1e-12);
        Ok((
            ZibParams::new(pi, self.mu_i, self.phi)?,
            ZibParams::new(pj, self.mu_j, self.phi)?,
        ))
    }
}

/// As [`sample_pair_counted`] but with a per-observation zero mass driven by
/// a standard-normal covariate. Each margin gets its own independent
/// covariate draw; both vectors are returned for downstream regression
/// fits. The same redraw guards apply.
pub fn sample_pair_regression<R: Rng>(
    n: usize,
    truth: &RegressionTruth,
    theta: FrankTheta,
    rng: &mut R,
) -> Result<(Vec<PairObservation>, Vec<f64>, Vec<f64>, u32)> {
    for attempt in 0..MAX_REDRAWS {
        let mut data = Vec::with_capacity(n);
        let mut cov_i = Vec::with_capacity(n);
        let mut cov_j = Vec::with_capacity(n);
        for _ in 0..n {
            let ci: f64 = rng.sample(rand_distr::StandardNormal);
            let cj: f64 = rng.sample(rand_distr::StandardNormal);
            let (gi, _) = truth.margin_params(ci)?;
            let (_, gj) = truth.margin_params(cj)?;
            data.push(draw_one(&gi, &gj, theta, rng)?);
            cov_i.push(ci);
            cov_j.push(cj);
        }
        if dataset_ok(&data) {
            return Ok((data, cov_i, cov_j, attempt));
        }
    }
    Err(Error::GuardExhausted(MAX_REDRAWS))
}

// ---------------------------------------------------------------------------
// study harness
// ---------------------------------------------------------------------------

/// One margin setting of the study grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MarginSetting {
    Fixed(ZibParams, ZibParams),
    Regression(RegressionTruth),
}

/// Full study configuration: every (setting, theta) combination is one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub reps: usize,
    pub theta_grid: Vec<f64>,
    pub settings: Vec<MarginSetting>,
    pub seed: u64,
    pub alpha: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::Config(format!("n must be >= 10, got {}", self.n)));
        }
        if self.reps < 1 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if self.theta_grid.is_empty() || self.settings.is_empty() {
            return Err(Error::Config("theta grid and settings must be nonempty".into()));
        }
        Ok(())
    }

    /// The default fixed-margin grid: theta in {-2.5, -1, 0, 0.5, 1.5, 3},
    /// zero-mass pairs {(0.10,0.25),(0.40,0.50),(0.60,0.75),(0.20,0.75)}
    /// paired in order with (mean, dispersion) settings
    /// {((2/7,7),(5/7,7)), ((1/2,4),(1/3,9)), ((2/3,9),(1/2,6)), ((2/7,7),(1/2,4))},
    /// n = 50, 500 replicates.
    pub fn paper_grid(seed: u64) -> Self {
        let p_pairs = [(0.10, 0.25), (0.40, 0.50), (0.60, 0.75), (0.20, 0.75)];
        let shape_pairs = [
            ((2.0 / 7.0, 7.0), (5.0 / 7.0, 7.0)),
            ((0.5, 4.0), (1.0 / 3.0, 9.0)),
            ((2.0 / 3.0, 9.0), (0.5, 6.0)),
            ((2.0 / 7.0, 7.0), (0.5, 4.0)),
        ];
        let settings = p_pairs
            .iter()
            .zip(&shape_pairs)
            .map(|(&(pi, pj), &((mi, fi), (mj, fj)))| {
                MarginSetting::Fixed(
                    ZibParams::new(pi, mi, fi).unwrap(),
                    ZibParams::new(pj, mj, fj).unwrap(),
                )
            })
            .collect();
        SimConfig {
            n: 50,
            reps: 500,
            theta_grid: vec![-2.5, -1.0, 0.0, 0.5, 1.5, 3.0],
            settings,
            seed,
            alpha: 0.05,
        }
    }

    /// The covariate-setting grid used for the power comparison.
    pub fn paper_grid_regression(seed: u64) -> Self {
        SimConfig {
            n: 50,
            reps: 500,
            theta_grid: vec![-2.5, -1.0, 0.0, 0.5, 1.5, 3.0],
            settings: vec![MarginSetting::Regression(RegressionTruth::default_setting())],
            seed,
            alpha: 0.05,
        }
    }
}

/// Aggregates for one (setting, theta) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub setting: usize,
    pub theta: f64,
    pub reps_done: usize,
    pub reps_failed: usize,
    pub mean_theta: f64,
    pub median_theta: f64,
    pub sd_theta: f64,
    pub empirical_var: f64,
    pub mean_jackknife_var: f64,
    pub reject_lrt: f64,
    pub reject_pearson: f64,
    pub reject_spearman: f64,
    pub reject_kendall: f64,
    pub guard_redraws: u64,
    pub infeasible: bool,
}

/// Study output: one record per grid cell, in grid order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyResult {
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub cells: Vec<CellResult>,
}

/// Independent stream for one (cell, replicate) task; reproducible in
/// isolation regardless of scheduling.
pub fn task_rng(seed: u64, cell: u64, rep: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&cell.to_le_bytes());
    key[16..24].copy_from_slice(&rep.to_le_bytes());
    key[24..32].copy_from_slice(&0x5a5a_5a5a_5a5a_5a5au64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

struct RepOutcome {
    theta_hat: f64,
    jackknife_var: f64,
    p_lrt: f64,
    competitors: Option<CorrelationTests>,
    redraws: u32,
}

fn run_one_rep(
    config: &SimConfig,
    setting: &MarginSetting,
    theta: f64,
    cell: u64,
    rep: u64,
    with_jackknife: bool,
    with_tests: bool,
) -> Result<RepOutcome> {
    let mut rng = task_rng(config.seed, cell, rep);
    let t = FrankTheta(theta);
    let (data, spec_i, spec_j, redraws) = match setting {
        MarginSetting::Fixed(gi, gj) => {
            let (data, redraws) = sample_pair_counted(config.n, gi, gj, t, &mut rng)?;
            (data, None, None, redraws)
        }
        MarginSetting::Regression(truth) => {
            let (data, cov_i, cov_j, redraws) =
                sample_pair_regression(config.n, truth, t, &mut rng)?;
            let mut spec_i = ZibRegressionSpec::intercept_only(config.n);
            spec_i.q_design = cov_i.iter().map(|&c| vec![1.0, c]).collect();
            let mut spec_j = ZibRegressionSpec::intercept_only(config.n);
            spec_j.q_design = cov_j.iter().map(|&c| vec![1.0, c]).collect();
            (data, Some(spec_i), Some(spec_j), redraws)
        }
    };

    let (theta_hat, jackknife_var, p_lrt) = if with_tests {
        let fit = independence_test(&data, spec_i.as_ref(), spec_j.as_ref())?;
        (fit.theta_hat, fit.theta_var, fit.p_value)
    } else if with_jackknife {
        let mut fit = two_stage_fit(&data, spec_i.as_ref(), spec_j.as_ref())?;
        jackknife_cov(&data, &mut fit, spec_i.as_ref(), spec_j.as_ref())?;
        (fit.theta_hat, fit.theta_var, f64::NAN)
    } else {
        let fit = two_stage_fit(&data, spec_i.as_ref(), spec_j.as_ref())?;
        (fit.theta_hat, f64::NAN, f64::NAN)
    };

    let competitors = if with_tests {
        let xs: Vec<f64> = data.iter().map(|o| o.x_i).collect();
        let ys: Vec<f64> = data.iter().map(|o| o.x_j).collect();
        Some(correlation_tests(&xs, &ys)?)
    } else {
        None
    };

    Ok(RepOutcome {
        theta_hat,
        jackknife_var,
        p_lrt,
        competitors,
        redraws,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn aggregate_cell(
    setting: usize,
    theta: f64,
    alpha: f64,
    outcomes: Vec<Result<RepOutcome>>,
) -> CellResult {
    let reps = outcomes.len();
    let mut thetas = Vec::new();
    let mut jk_vars = Vec::new();
    let mut redraws = 0u64;
    let mut failed = 0usize;
    let (mut rej_l, mut rej_p, mut rej_s, mut rej_k) = (0usize, 0usize, 0usize, 0usize);
    let mut tested = 0usize;
    let mut exhausted = 0usize;
    for o in outcomes {
        match o {
            Ok(o) => {
                thetas.push(o.theta_hat);
                if o.jackknife_var.is_finite() {
                    jk_vars.push(o.jackknife_var);
                }
                redraws += o.redraws as u64;
                if o.p_lrt.is_finite() {
                    tested += 1;
                    if o.p_lrt < alpha {
                        rej_l += 1;
                    }
                    if let Some(c) = o.competitors {
                        if c.pearson_p < alpha {
                            rej_p += 1;
                        }
                        if c.spearman_p < alpha {
                            rej_s += 1;
                        }
                        if c.kendall_p < alpha {
                            rej_k += 1;
                        }
                    }
                }
            }
            Err(Error::GuardExhausted(_)) => {
                failed += 1;
                exhausted += 1;
            }
            Err(_) => failed += 1,
        }
    }
    let done = thetas.len();
    let mean = thetas.iter().sum::<f64>() / done.max(1) as f64;
    let var = if done > 1 {
        thetas.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (done - 1) as f64
    } else {
        f64::NAN
    };
    let mut sorted = thetas;
    sorted.sort_by(f64::total_cmp);
    let rate = |k: usize| {
        if tested > 0 {
            k as f64 / tested as f64
        } else {
            f64::NAN
        }
    };
    CellResult {
        setting,
        theta,
        reps_done: done,
        reps_failed: failed,
        mean_theta: if done > 0 { mean } else { f64::NAN },
        median_theta: median(&sorted),
        sd_theta: var.sqrt(),
        empirical_var: var,
        mean_jackknife_var: if jk_vars.is_empty() {
            f64::NAN
        } else {
            jk_vars.iter().sum::<f64>() / jk_vars.len() as f64
        },
        reject_lrt: rate(rej_l),
        reject_pearson: rate(rej_p),
        reject_spearman: rate(rej_s),
        reject_kendall: rate(rej_k),
        guard_redraws: redraws,
        infeasible: exhausted == reps && reps > 0,
    }
}

fn run_study(config: &SimConfig, with_jackknife: bool, with_tests: bool) -> Result<StudyResult> {
    config.validate()?;
    let mut cells = Vec::new();
    for (s, setting) in config.settings.iter().enumerate() {
        for (t, &theta) in config.theta_grid.iter().enumerate() {
            let cell = (s * config.theta_grid.len() + t) as u64;
            let outcomes = exec::map_range(config.reps, |rep| {
                run_one_rep(
                    config,
                    setting,
                    theta,
                    cell,
                    rep as u64,
                    with_jackknife,
                    with_tests,
                )
            });
            cells.push(aggregate_cell(s, theta, config.alpha, outcomes));
        }
    }
    Ok(StudyResult {
        n: config.n,
        reps: config.reps,
        alpha: config.alpha,
        seed: config.seed,
        cells,
    })
}

/// Bias and variance of the dependence estimate across the grid: per cell,
/// mean/median/sd of the estimate plus the mean jackknife variance against
/// the across-replicate variance.
pub fn run_bias_variance_study(config: &SimConfig) -> Result<StudyResult> {
    run_study(config, true, false)
}

/// Size and power of the dependence test against the three classical
/// correlation tests (computed on the raw vectors, zeros included).
pub fn run_power_study(config: &SimConfig) -> Result<StudyResult> {
    run_study(config, false, true)
}
