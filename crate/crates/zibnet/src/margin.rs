//! Zero-inflated beta margins: density, CDF, quantile, and maximum-likelihood
//! fitting with and without covariate regression on (p, mu, phi).

use crate::error::{Error, Result};
use crate::numerics::{
    digamma, inv_reg_inc_beta, ln_beta, newton_raphson, normal_cdf, reg_inc_beta, trigamma,
};
use serde::{Deserialize, Serialize};

/// Values numerically equal to 1 are clamped to this; the support is [0, 1).
pub const ONE_CLAMP: f64 = 1.0 - 1e-10;

/// Parameters of one zero-inflated beta margin: zero-mass probability `p`,
/// beta mean `mu`, beta dispersion `phi`. The implied beta shapes are
/// `a = mu * phi` and `b = (1 - mu) * phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZibParams {
    pub p: f64,
    pub mu: f64,
    pub phi: f64,
}

impl ZibParams {
    pub fn new(p: f64, mu: f64, phi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Domain(format!("zero mass p must be in [0,1), got {p}")));
        }
        if !(0.0 < mu && mu < 1.0) {
            return Err(Error::Domain(format!("beta mean mu must be in (0,1), got {mu}")));
        }
        if !(phi > 0.0) {
            return Err(Error::Domain(format!("dispersion phi must be > 0, got {phi}")));
        }
        Ok(ZibParams { p, mu, phi })
    }

    pub fn shape_a(&self) -> f64 {
        self.mu * self.phi
    }

    pub fn shape_b(&self) -> f64 {
        (1.0 - self.mu) * self.phi
    }
}

fn check_support_half_open(x: f64) -> Result<()> {
    if (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must lie in [0,1), got {x}")))
    }
}

fn beta_log_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
}

/// Density/mass of the zero-inflated beta: the point mass `p` at x = 0
/// (reported as a probability), `(1 - p) * f_beta(x)` for x in (0, 1).
pub fn zib_pdf(x: f64, params: &ZibParams) -> Result<f64> {
    check_support_half_open(x)?;
    if x == 0.0 {
        Ok(params.p)
    } else {
        Ok((1.0 - params.p) * beta_log_pdf(x, params.shape_a(), params.shape_b()).exp())
    }
}

/// log of [`zib_pdf`]; `None` when the value underflows to zero.
pub fn zib_log_pdf(x: f64, params: &ZibParams) -> Result<f64> {
    check_support_half_open(x)?;
    if x == 0.0 {
        Ok(params.p.ln())
    } else {
        Ok((1.0 - params.p).ln() + beta_log_pdf(x, params.shape_a(), params.shape_b()))
    }
}

/// CDF F(x) = p + (1 - p) * I_x(a, b), with F(0) = p and F(1) = 1.
pub fn zib_cdf(x: f64, params: &ZibParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0,1], got {x}")));
    }
    Ok(params.p
        + (1.0 - params.p) * reg_inc_beta(x, params.shape_a(), params.shape_b())?)
}

/// Left limit F(x-): 0 at the atom, F(x) elsewhere.
pub fn zib_cdf_left(x: f64, params: &ZibParams) -> Result<f64> {
    if x == 0.0 {
        Ok(0.0)
    } else {
        zib_cdf(x, params)
    }
}

/// Generalized inverse of the CDF: 0 for u <= p, else the beta quantile of
/// (u - p) / (1 - p).
pub fn zib_quantile(u: f64, params: &ZibParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0,1], got {u}")));
    }
    if u <= params.p {
        return Ok(0.0);
    }
    let q = (u - params.p) / (1.0 - params.p);
    let x = inv_reg_inc_beta(q, params.shape_a(), params.shape_b())?;
    Ok(x.min(ONE_CLAMP))
}

/// Per-observation parameters: either one constant triple or one per row.
#[derive(Debug, Clone)]
pub enum MarginParams<'a> {
    Constant(ZibParams),
    PerObservation(&'a [ZibParams]),
}

impl MarginParams<'_> {
    pub fn at(&self, l: usize) -> ZibParams {
        match self {
            MarginParams::Constant(p) => *p,
            MarginParams::PerObservation(v) => v[l],
        }
    }
}

/// Sum of log densities. Underflowing terms are clamped at a large negative
/// value and reported through the flag.
pub fn zib_loglik(data: &[f64], params: &MarginParams<'_>) -> Result<(f64, bool)> {
    const FLOOR: f64 = -1e300;
    let mut total = 0.0;
    let mut underflow = false;
    for (l, &x) in data.iter().enumerate() {
        let lp = zib_log_pdf(x, &params.at(l))?;
        if lp.is_finite() {
            total += lp;
        } else {
            total += FLOOR / data.len() as f64;
            underflow = true;
        }
    }
    Ok((total, underflow))
}

/// Link functions for the three regression components. Only `Logit` (for p
/// and mu) and `Log` (for phi) are implemented; the others are accepted by
/// the type and rejected at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    Logit,
    Log,
    Probit,
    LogLog,
    Sqrt,
}

impl Link {
    /// Inverse link: linear predictor to natural parameter.
    pub fn inverse(self, eta: f64) -> Result<f64> {
        match self {
            Link::Logit => Ok(1.0 / (1.0 + (-eta).exp())),
            Link::Log => Ok(eta.exp()),
            other => Err(Error::UnsupportedLink(format!("{other:?}"))),
        }
    }

    pub fn apply(self, x: f64) -> Result<f64> {
        match self {
            Link::Logit => Ok((x / (1.0 - x)).ln()),
            Link::Log => Ok(x.ln()),
            other => Err(Error::UnsupportedLink(format!("{other:?}"))),
        }
    }
}

/// Covariate specification for one margin. Each design matrix is row-major
/// (one row per observation) and must include an intercept column.
#[derive(Debug, Clone)]
pub struct ZibRegressionSpec {
    /// Covariates for the presence-absence probability p (n x q1).
    pub q_design: Vec<Vec<f64>>,
    /// Covariates for the beta mean mu (n x q2).
    pub w_design: Vec<Vec<f64>>,
    /// Covariates for the dispersion phi (n x q3).
    pub z_design: Vec<Vec<f64>>,
    /// Links (h1, h2, h3) for (p, mu, phi).
    pub links: (Link, Link, Link),
}

impl ZibRegressionSpec {
    /// Intercept-only spec of length n with the default links.
    pub fn intercept_only(n: usize) -> Self {
        let col = vec![vec![1.0]; n];
        ZibRegressionSpec {
            q_design: col.clone(),
            w_design: col.clone(),
            z_design: col,
            links: (Link::Logit, Link::Logit, Link::Log),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.q_design.len()
    }

    pub fn n_params(&self) -> usize {
        self.q_design.first().map_or(1, Vec::len)
            + self.w_design.first().map_or(1, Vec::len)
            + self.z_design.first().map_or(1, Vec::len)
    }

    /// Subset of rows (used by leave-one-out and bootstrap refits).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let pick = |m: &Vec<Vec<f64>>| rows.iter().map(|&r| m[r].clone()).collect();
        ZibRegressionSpec {
            q_design: pick(&self.q_design),
            w_design: pick(&self.w_design),
            z_design: pick(&self.z_design),
            links: self.links,
        }
    }
}

/// A fitted margin. Coefficients are on the link scale; for intercept-only
/// fits the natural-scale parameters are kept in `params` (so that e.g. the
/// fitted p is exactly the zero fraction).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZibFit {
    pub rho: Vec<f64>,
    pub delta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub n_nonzero: usize,
    /// Natural-scale parameters, present for intercept-only fits.
    pub params: Option<ZibParams>,
    pub perfect_separation: bool,
    /// Number of observations clamped from 1 to just below 1.
    pub n_clamped: usize,
}

impl ZibFit {
    /// Coefficients stacked as (rho, delta, kappa).
    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = self.rho.clone();
        v.extend_from_slice(&self.delta);
        v.extend_from_slice(&self.kappa);
        v
    }

    /// Natural-scale parameter vector (p, mu, phi) for intercept-only fits,
    /// otherwise the stacked link-scale coefficients.
    pub fn eta_block(&self) -> Vec<f64> {
        match self.params {
            Some(p) => vec![p.p, p.mu, p.phi],
            None => self.coefficients(),
        }
    }

    /// Per-observation parameters under `spec` (or the constant fitted
    /// parameters when no covariates were used).
    pub fn per_obs_params(&self, spec: Option<&ZibRegressionSpec>, n: usize) -> Result<Vec<ZibParams>> {
        match (self.params, spec) {
            (Some(p), None) => Ok(vec![p; n]),
            (_, Some(spec)) => {
                let (h1, h2, h3) = spec.links;
                (0..n)
                    .map(|l| {
                        let p = h1.inverse(dot(&spec.q_design[l], &self.rho))?;
                        let mu = h2.inverse(dot(&spec.w_design[l], &self.delta))?;
                        let phi = h3.inverse(dot(&spec.z_design[l], &self.kappa))?;
                        ZibParams::new(
                            p.clamp(1e-12, 1.0 - 1e-12),
                            mu.clamp(1e-12, 1.0 - 1e-12),
                            phi.max(1e-12),
                        )
                    })
                    .collect()
            }
            (None, None) => Err(Error::Config(
                "regression fit requires its spec to produce parameters".into(),
            )),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clamp_data(data: &[f64]) -> Result<(Vec<f64>, usize)> {
    let mut out = Vec::with_capacity(data.len());
    let mut clamped = 0;
    for &x in data {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("abundance {x} outside [0,1]")));
        }
        if x >= ONE_CLAMP {
            out.push(ONE_CLAMP);
            clamped += 1;
        } else {
            out.push(x);
        }
    }
    Ok((out, clamped))
}

/// Method-of-moments start for the beta part.
fn moment_start(nonzero: &[f64]) -> (f64, f64) {
    let n = nonzero.len() as f64;
    let mean = nonzero.iter().sum::<f64>() / n;
    let var = nonzero.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let mu = mean.clamp(1e-6, 1.0 - 1e-6);
    let phi = if var > 0.0 {
        (mu * (1.0 - mu) / var - 1.0).clamp(0.1, 1e4)
    } else {
        10.0
    };
    (mu, phi)
}

/// Fit a beta distribution to the nonzero part by Newton-Raphson in
/// log-shape coordinates. Returns (mu, phi, beta-part loglik, converged).
fn fit_beta_part(nonzero: &[f64], init: Option<(f64, f64)>) -> Result<(f64, f64, f64, bool)> {
    let m = nonzero.len() as f64;
    let s_log_x: f64 = nonzero.iter().map(|x| x.ln()).sum();
    let s_log_1mx: f64 = nonzero.iter().map(|&x| (-x).ln_1p()).sum();

    let ll = move |la: f64, lb: f64| -> f64 {
        let (a, b) = (la.exp(), lb.exp());
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return f64::NEG_INFINITY;
        }
        -m * ln_beta(a, b) + (a - 1.0) * s_log_x + (b - 1.0) * s_log_1mx
    };
    let grad = move |v: &[f64]| -> Vec<f64> {
        let (a, b) = (v[0].exp(), v[1].exp());
        let psum = digamma(a + b).unwrap_or(f64::NAN);
        let ga = m * (psum - digamma(a).unwrap_or(f64::NAN)) + s_log_x;
        let gb = m * (psum - digamma(b).unwrap_or(f64::NAN)) + s_log_1mx;
        vec![a * ga, b * gb]
    };
    let hess = move |v: &[f64]| -> Vec<Vec<f64>> {
        let (a, b) = (v[0].exp(), v[1].exp());
        let psum = digamma(a + b).unwrap_or(f64::NAN);
        let tsum = trigamma(a + b).unwrap_or(f64::NAN);
        let ga = m * (psum - digamma(a).unwrap_or(f64::NAN)) + s_log_x;
        let gb = m * (psum - digamma(b).unwrap_or(f64::NAN)) + s_log_1mx;
        let laa = m * (tsum - trigamma(a).unwrap_or(f64::NAN));
        let lbb = m * (tsum - trigamma(b).unwrap_or(f64::NAN));
        let lab = m * tsum;
        // chain rule for the log coordinates
        vec![
            vec![a * ga + a * a * laa, a * b * lab],
            vec![a * b * lab, b * gb + b * b * lbb],
        ]
    };

    let (mu0, phi0) = init.unwrap_or_else(|| moment_start(nonzero));
    let init_vec = [(mu0 * phi0).ln(), ((1.0 - mu0) * phi0).ln()];
    let res = newton_raphson(
        |v: &[f64]| ll(v[0], v[1]),
        grad,
        hess,
        &init_vec,
        1e-8,
        200,
    )?;
    let (a, b) = (res.params[0].exp(), res.params[1].exp());
    Ok((a / (a + b), a + b, res.value, res.converged))
}

/// Intercept-only maximum-likelihood fit. The zero-mass estimate is the zero
/// fraction in closed form; (mu, phi) maximize the beta part numerically.
pub fn fit_zib(data: &[f64]) -> Result<ZibFit> {
    fit_zib_from(data, None)
}

/// As [`fit_zib`] but warm-started at `init` (used by leave-one-out refits).
pub fn fit_zib_from(data: &[f64], init: Option<(f64, f64)>) -> Result<ZibFit> {
    let (data, n_clamped) = clamp_data(data)?;
    let n = data.len();
    let nonzero: Vec<f64> = data.iter().copied().filter(|&x| x > 0.0).collect();
    if nonzero.len() < 3 {
        return Err(Error::TooFewNonzero(nonzero.len()));
    }
    let z = n - nonzero.len();
    let p_hat = z as f64 / n as f64;
    let (mu, phi, beta_ll, converged) = fit_beta_part(&nonzero, init)?;

    let binom_ll = if z == 0 {
        (nonzero.len() as f64) * (1.0 - p_hat).ln()
    } else {
        z as f64 * p_hat.ln() + (n - z) as f64 * (1.0 - p_hat).ln()
    };
    let params = ZibParams::new(p_hat, mu, phi)?;
    Ok(ZibFit {
        rho: vec![logit_clamped(p_hat)],
        delta: vec![logit_clamped(mu)],
        kappa: vec![phi.ln()],
        loglik: binom_ll + beta_ll,
        converged,
        n_nonzero: nonzero.len(),
        params: Some(params),
        perfect_separation: false,
        n_clamped,
    })
}

fn logit_clamped(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

fn check_full_rank(x: &[Vec<f64>]) -> Result<()> {
    let k = x.first().map_or(0, Vec::len);
    // Gram matrix pivoted elimination
    let mut gram = vec![vec![0.0; k]; k];
    for row in x {
        for i in 0..k {
            for j in 0..k {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    let scale = gram
        .iter()
        .flatten()
        .fold(0.0_f64, |a, &v| a.max(v.abs()))
        .max(1.0);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| gram[i][col].abs().total_cmp(&gram[j][col].abs()))
            .unwrap();
        if gram[pivot][col].abs() < 1e-10 * scale {
            return Err(Error::RankDeficientDesign);
        }
        gram.swap(col, pivot);
        for row in col + 1..k {
            let f = gram[row][col] / gram[col][col];
            for c in col..k {
                gram[row][c] -= f * gram[col][c];
            }
        }
    }
    Ok(())
}

/// Logistic regression of the zero indicator on Q, by Newton-Raphson.
/// Models Pr(x = 0) directly. Returns (coefficients, loglik, converged,
/// perfect-separation flag).
fn fit_zero_logistic(
    zero_ind: &[f64],
    q: &[Vec<f64>],
    init: Option<&[f64]>,
) -> Result<(Vec<f64>, f64, bool, bool)> {
    let k = q.first().map_or(0, Vec::len);
    let obj = |beta: &[f64]| -> f64 {
        zero_ind
            .iter()
            .zip(q)
            .map(|(&y, row)| {
                let eta = dot(row, beta);
                y * eta - (eta.exp()).ln_1p()
            })
            .sum()
    };
    let grad = |beta: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; k];
        for (&y, row) in zero_ind.iter().zip(q) {
            let pi = 1.0 / (1.0 + (-dot(row, beta)).exp());
            for (gi, &xi) in g.iter_mut().zip(row) {
                *gi += (y - pi) * xi;
            }
        }
        g
    };
    let hess = |beta: &[f64]| -> Vec<Vec<f64>> {
        let mut h = vec![vec![0.0; k]; k];
        for row in q {
            let pi = 1.0 / (1.0 + (-dot(row, beta)).exp());
            let w = pi * (1.0 - pi);
            for i in 0..k {
                for j in 0..k {
                    h[i][j] -= w * row[i] * row[j];
                }
            }
        }
        h
    };
    let init_vec: Vec<f64> = match init {
        Some(v) => v.to_vec(),
        None => {
            let pbar = (zero_ind.iter().sum::<f64>() / zero_ind.len() as f64)
                .clamp(1e-6, 1.0 - 1e-6);
            let mut v = vec![0.0; k];
            v[0] = (pbar / (1.0 - pbar)).ln();
            v
        }
    };
    let res = newton_raphson(obj, grad, hess, &init_vec, 1e-10, 200)?;
    let max_eta = q
        .iter()
        .map(|row| dot(row, &res.params).abs())
        .fold(0.0_f64, f64::max);
    Ok((res.params.clone(), res.value, res.converged, max_eta > 30.0))
}

/// Maximum-likelihood fit with covariates on any of (p, mu, phi). The zero
/// indicator enters only through p, so the binary block and the beta block
/// are maximized separately.
pub fn fit_zib_regression(data: &[f64], spec: &ZibRegressionSpec) -> Result<ZibFit> {
    fit_zib_regression_from(data, spec, None)
}

/// As [`fit_zib_regression`] but warm-started at a previous fit's
/// coefficients.
pub fn fit_zib_regression_from(
    data: &[f64],
    spec: &ZibRegressionSpec,
    init: Option<&ZibFit>,
) -> Result<ZibFit> {
    let (data, n_clamped) = clamp_data(data)?;
    let n = data.len();
    if spec.n_rows() != n {
        return Err(Error::Config(format!(
            "design has {} rows but data has {n} observations",
            spec.n_rows()
        )));
    }
    let (h1, h2, h3) = spec.links;
    if h1 != Link::Logit || h2 != Link::Logit || h3 != Link::Log {
        // accepted by the type, not yet implemented
        return Err(Error::UnsupportedLink(format!("{:?}", spec.links)));
    }
    check_full_rank(&spec.q_design)?;
    check_full_rank(&spec.w_design)?;
    check_full_rank(&spec.z_design)?;

    let nonzero_rows: Vec<usize> = (0..n).filter(|&l| data[l] > 0.0).collect();
    if nonzero_rows.len() < 3 {
        return Err(Error::TooFewNonzero(nonzero_rows.len()));
    }
    let zero_ind: Vec<f64> = data.iter().map(|&x| if x == 0.0 { 1.0 } else { 0.0 }).collect();

    let (rho, zero_ll, conv_zero, separation) =
        fit_zero_logistic(&zero_ind, &spec.q_design, init.map(|f| f.rho.as_slice()))?;

    // beta block over nonzero observations
    let kw = spec.w_design.first().map_or(0, Vec::len);
    let kz = spec.z_design.first().map_or(0, Vec::len);
    let xs: Vec<f64> = nonzero_rows.iter().map(|&l| data[l]).collect();
    let w_rows: Vec<&[f64]> = nonzero_rows.iter().map(|&l| spec.w_design[l].as_slice()).collect();
    let z_rows: Vec<&[f64]> = nonzero_rows.iter().map(|&l| spec.z_design[l].as_slice()).collect();

    let beta_ll = |coef: &[f64]| -> f64 {
        let (dl, kp) = coef.split_at(kw);
        let mut total = 0.0;
        for (l, &x) in xs.iter().enumerate() {
            let mu = 1.0 / (1.0 + (-dot(w_rows[l], dl)).exp());
            let phi = dot(z_rows[l], kp).exp();
            let (a, b) = (mu * phi, (1.0 - mu) * phi);
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return f64::NEG_INFINITY;
            }
            total += beta_log_pdf(x, a, b);
        }
        total
    };
    let beta_grad = |coef: &[f64]| -> Vec<f64> {
        let (dl, kp) = coef.split_at(kw);
        let mut g = vec![0.0; kw + kz];
        for (l, &x) in xs.iter().enumerate() {
            let mu = 1.0 / (1.0 + (-dot(w_rows[l], dl)).exp());
            let phi = dot(z_rows[l], kp).exp();
            let (a, b) = (mu * phi, (1.0 - mu) * phi);
            let (psia, psib) = (digamma(a).unwrap_or(f64::NAN), digamma(b).unwrap_or(f64::NAN));
            let dmu = phi * (psib - psia + (x / (1.0 - x)).ln());
            let dphi = digamma(phi).unwrap_or(f64::NAN) - mu * psia - (1.0 - mu) * psib
                + mu * x.ln()
                + (1.0 - mu) * (-x).ln_1p();
            let w_mu = dmu * mu * (1.0 - mu);
            let w_phi = dphi * phi;
            for (gi, &xi) in g[..kw].iter_mut().zip(w_rows[l]) {
                *gi += w_mu * xi;
            }
            for (gi, &zi) in g[kw..].iter_mut().zip(z_rows[l]) {
                *gi += w_phi * zi;
            }
        }
        g
    };
    // Hessian by central differences of the analytic gradient
    let beta_hess = |coef: &[f64]| -> Vec<Vec<f64>> {
        let d = kw + kz;
        let mut h = vec![vec![0.0; d]; d];
        for j in 0..d {
            let step = 1e-5 * (1.0 + coef[j].abs());
            let mut up = coef.to_vec();
            up[j] += step;
            let mut dn = coef.to_vec();
            dn[j] -= step;
            let gu = beta_grad(&up);
            let gd = beta_grad(&dn);
            for i in 0..d {
                h[i][j] = (gu[i] - gd[i]) / (2.0 * step);
            }
        }
        // symmetrize
        for i in 0..d {
            for j in 0..i {
                let avg = 0.5 * (h[i][j] + h[j][i]);
                h[i][j] = avg;
                h[j][i] = avg;
            }
        }
        h
    };

    let init_beta: Vec<f64> = match init {
        Some(f) if f.delta.len() == kw && f.kappa.len() == kz => {
            let mut v = f.delta.clone();
            v.extend_from_slice(&f.kappa);
            v
        }
        _ => {
            let (mu0, phi0) = moment_start(&xs);
            let mut v = vec![0.0; kw + kz];
            v[0] = logit_clamped(mu0);
            v[kw] = phi0.ln();
            v
        }
    };
    let res = newton_raphson(beta_ll, beta_grad, beta_hess, &init_beta, 1e-7, 200)?;
    let (delta, kappa) = res.params.split_at(kw);

    Ok(ZibFit {
        rho,
        delta: delta.to_vec(),
        kappa: kappa.to_vec(),
        loglik: zero_ll + res.value,
        converged: conv_zero && res.converged,
        n_nonzero: nonzero_rows.len(),
        params: None,
        perfect_separation: separation,
        n_clamped,
    })
}

/// Probability that an observation is zero under a probit link (used only by
/// tests exercising the link surface).
#[allow(dead_code)]
fn probit_inverse(eta: f64) -> f64 {
    normal_cdf(eta)
}
