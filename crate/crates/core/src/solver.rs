//! Lasso and Slope solvers.
//!
//! Both estimators minimize the objective in the scaling
//! `||X beta - y||_n^2 + 2 lambda ||beta||_1` (Lasso) and
//! `||X beta - y||_n^2 + 2 ||beta||_*` (Slope): penalty coefficient 2 and a
//! 1/n inside the squared empirical norm. Most libraries use
//! `(1/2n)||.||^2 + lambda ||.||_1`; the scaling here is the one the tuning
//! formulas in [`crate::tuning`] are calibrated for.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::norms::{lq_norm, rearrange_desc, sorted_l1_norm, WeightVector};
use crate::prox::{prox_sorted_l1, soft_threshold, ProxRequest};

pub const DEFAULT_MAX_ITERS: usize = 100_000;
/// Duality gap is evaluated every this many proximal steps.
const GAP_CHECK_EVERY: usize = 5;

/// The penalty side of the objective.
#[derive(Debug, Clone)]
pub enum Penalty {
    /// `2 lambda ||beta||_1`
    L1 { lambda: f64 },
    /// `2 ||beta||_*` with the given weights
    Sorted { weights: WeightVector },
}

impl Penalty {
    fn validate(&self, p: usize) -> Result<()> {
        match self {
            Penalty::L1 { lambda } => {
                if *lambda <= 0.0 || !lambda.is_finite() {
                    return Err(Error::invalid("lasso tuning parameter must be positive"));
                }
            }
            Penalty::Sorted { weights } => {
                if weights.len() != p {
                    return Err(Error::dims(format!(
                        "weights have length {}, design has {} columns",
                        weights.len(),
                        p
                    )));
                }
            }
        }
        Ok(())
    }

    /// Penalty value `2 lambda ||beta||_1` or `2 ||beta||_*`.
    pub fn value(&self, beta: &Array1<f64>) -> f64 {
        match self {
            Penalty::L1 { lambda } => 2.0 * lambda * lq_norm(beta, 1.0).unwrap(),
            Penalty::Sorted { weights } => 2.0 * sorted_l1_norm(beta, weights).unwrap(),
        }
    }

    /// Prox of `step * penalty` at `v`.
    fn prox(&self, v: &Array1<f64>, step: f64) -> Result<Array1<f64>> {
        match self {
            Penalty::L1 { lambda } => soft_threshold(v, 2.0 * lambda * step),
            Penalty::Sorted { weights } => prox_sorted_l1(&ProxRequest::new(
                v.clone(),
                weights.scaled(2.0 * step)?,
                1.0,
            )?),
        }
    }

    /// Largest `c <= 1` such that `c z` is dual feasible, i.e. lies in the
    /// subdifferential of the penalty at the origin. For the sorted penalty
    /// feasibility is the cumulative-sum domination
    /// `sum_{j<=k} z#_j <= 2 sum_{j<=k} lambda_j` for every k.
    fn dual_scale(&self, z: &Array1<f64>) -> f64 {
        match self {
            Penalty::L1 { lambda } => {
                let m = lq_norm(z, f64::INFINITY).unwrap();
                if m <= 2.0 * lambda {
                    1.0
                } else {
                    2.0 * lambda / m
                }
            }
            Penalty::Sorted { weights } => {
                let sorted = rearrange_desc(z);
                let mut c: f64 = 1.0;
                let mut cum_z = 0.0;
                let mut cum_w = 0.0;
                for (zj, lj) in sorted.iter().zip(weights.as_slice()) {
                    cum_z += zj;
                    cum_w += lj;
                    if cum_z > 2.0 * cum_w {
                        c = c.min(2.0 * cum_w / cum_z);
                    }
                }
                c
            }
        }
    }
}

/// Configuration of the Lasso solve.
#[derive(Debug, Clone)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// Absolute duality-gap tolerance; `None` resolves to
    /// `1e-8 * (1 + ||y||_n^2)`.
    pub gap_tol: Option<f64>,
    pub strategy: LassoStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LassoStrategy {
    ProximalGradient,
    CoordinateDescent,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            max_iters: DEFAULT_MAX_ITERS,
            gap_tol: None,
            strategy: LassoStrategy::ProximalGradient,
        }
    }
}

/// Configuration of the Slope solve.
#[derive(Debug, Clone)]
pub struct SlopeConfig {
    pub weights: WeightVector,
    pub max_iters: usize,
    pub gap_tol: Option<f64>,
}

impl SlopeConfig {
    pub fn new(weights: WeightVector) -> Self {
        Self {
            weights,
            max_iters: DEFAULT_MAX_ITERS,
            gap_tol: None,
        }
    }
}

/// Outcome of a solve. `converged == false` means the iteration budget ran
/// out; the best iterate is still returned so sweeps never abort.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn coefficients_array(&self) -> Array1<f64> {
        Array1::from(self.coefficients.clone())
    }
}

fn resolve_gap_tol(y: &Array1<f64>, gap_tol: Option<f64>) -> f64 {
    gap_tol.unwrap_or_else(|| {
        let yn2 = y.iter().map(|v| v * v).sum::<f64>() / y.len().max(1) as f64;
        1e-8 * (1.0 + yn2)
    })
}

/// `||X beta - y||_n^2 + penalty(beta)`.
pub fn objective_value(
    x: &DesignMatrix,
    y: &Array1<f64>,
    beta: &Array1<f64>,
    penalty: &Penalty,
) -> f64 {
    let r = &x.mul_vec(beta) - y;
    r.dot(&r) / x.rows() as f64 + penalty.value(beta)
}

/// Fenchel duality gap at `beta`: primal objective minus the value of the
/// scaled-to-feasibility dual candidate built from the residual. Nonnegative,
/// zero only at an exact solution.
pub fn duality_gap(
    x: &DesignMatrix,
    y: &Array1<f64>,
    beta: &Array1<f64>,
    penalty: &Penalty,
) -> f64 {
    let n = x.rows() as f64;
    let r = y - &x.mul_vec(beta);
    let z = x.t_mul_vec(&r).mapv(|v| 2.0 * v / n);
    let c = penalty.dual_scale(&z);
    let rr = r.dot(&r);
    let primal = rr / n + penalty.value(beta);
    let dual = (2.0 * c / n) * r.dot(y) - (c * c / n) * rr;
    primal - dual
}

/// Solves the Lasso problem `min ||X beta - y||_n^2 + 2 lambda ||beta||_1`.
pub fn fit_lasso(x: &DesignMatrix, y: &Array1<f64>, cfg: &LassoConfig) -> Result<FitResult> {
    x.check_response(y)?;
    let penalty = Penalty::L1 { lambda: cfg.lambda };
    penalty.validate(x.cols())?;
    let gap_tol = resolve_gap_tol(y, cfg.gap_tol);
    match cfg.strategy {
        LassoStrategy::ProximalGradient => {
            fit_proximal_gradient(x, y, &penalty, cfg.max_iters, gap_tol)
        }
        LassoStrategy::CoordinateDescent => {
            fit_coordinate_descent(x, y, cfg.lambda, cfg.max_iters, gap_tol)
        }
    }
}

/// Solves the Slope problem `min ||X beta - y||_n^2 + 2 ||beta||_*`.
pub fn fit_slope(x: &DesignMatrix, y: &Array1<f64>, cfg: &SlopeConfig) -> Result<FitResult> {
    x.check_response(y)?;
    let penalty = Penalty::Sorted {
        weights: cfg.weights.clone(),
    };
    penalty.validate(x.cols())?;
    let gap_tol = resolve_gap_tol(y, cfg.gap_tol);
    fit_proximal_gradient(x, y, &penalty, cfg.max_iters, gap_tol)
}

/// Monotone accelerated proximal gradient with backtracking line search.
fn fit_proximal_gradient(
    x: &DesignMatrix,
    y: &Array1<f64>,
    penalty: &Penalty,
    max_iters: usize,
    gap_tol: f64,
) -> Result<FitResult> {
    let n = x.rows() as f64;
    let p = x.cols();

    let smooth = |beta: &Array1<f64>| -> f64 {
        let r = &x.mul_vec(beta) - y;
        r.dot(&r) / n
    };

    let mut beta: Array1<f64> = Array1::zeros(p);
    let mut beta_prev = beta.clone();
    let mut extrap = beta.clone();
    let mut t: f64 = 1.0;
    let mut obj = smooth(&beta) + penalty.value(&beta);

    // start the curvature estimate at the largest column curvature; the
    // line search only ever raises it
    let mut lip = (0..p)
        .map(|j| 2.0 * x.column_norm(j).powi(2))
        .fold(f64::MIN_POSITIVE, f64::max);

    let mut gap = duality_gap(x, y, &beta, penalty);
    let mut converged = gap <= gap_tol;
    let mut iterations = 0;

    while !converged && iterations < max_iters {
        iterations += 1;

        let rw = &x.mul_vec(&extrap) - y;
        let fw = rw.dot(&rw) / n;
        let grad = x.t_mul_vec(&rw).mapv(|v| 2.0 * v / n);

        // backtracking: raise lip until the quadratic model majorizes
        let cand = loop {
            let step = 1.0 / lip;
            let z = penalty.prox(&(&extrap - &grad.mapv(|g| g * step)), step)?;
            let fz = smooth(&z);
            let dz = &z - &extrap;
            let model = fw + grad.dot(&dz) + 0.5 * lip * dz.dot(&dz);
            if fz <= model + 1e-12 * (1.0 + fz.abs()) {
                break z;
            }
            lip *= 2.0;
            if !lip.is_finite() {
                return Err(Error::NonFinite("line search curvature".into()));
            }
        };
        let cand_obj = smooth(&cand) + penalty.value(&cand);

        // monotone acceleration: keep the better of the proximal candidate
        // and the previous iterate, extrapolate through the candidate
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let (new_beta, new_obj) = if cand_obj <= obj {
            (cand.clone(), cand_obj)
        } else {
            (beta.clone(), obj)
        };
        extrap = &new_beta
            + &((&cand - &new_beta).mapv(|v| v * (t / t_next))
                + (&new_beta - &beta_prev).mapv(|v| v * ((t - 1.0) / t_next)));
        beta_prev = beta;
        beta = new_beta;
        obj = new_obj;
        t = t_next;

        if iterations % GAP_CHECK_EVERY == 0 || iterations == max_iters {
            gap = duality_gap(x, y, &beta, penalty);
            if gap <= gap_tol {
                converged = true;
            }
        }
    }

    if !converged {
        gap = duality_gap(x, y, &beta, penalty);
        converged = gap <= gap_tol;
    }
    Ok(FitResult {
        objective: objective_value(x, y, &beta, penalty),
        duality_gap: gap,
        iterations,
        converged,
        coefficients: beta.to_vec(),
    })
}

fn soft_scalar(v: f64, t: f64) -> f64 {
    let s = v.abs() - t;
    if s > 0.0 {
        s.copysign(v)
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on the Lasso objective; one iteration = one
/// full pass over the coordinates.
fn fit_coordinate_descent(
    x: &DesignMatrix,
    y: &Array1<f64>,
    lambda: f64,
    max_iters: usize,
    gap_tol: f64,
) -> Result<FitResult> {
    let n = x.rows() as f64;
    let p = x.cols();
    let penalty = Penalty::L1 { lambda };
    let xa = x.as_array();

    let col_sq: Vec<f64> = (0..p).map(|j| x.column_norm(j).powi(2)).collect();
    let mut beta: Array1<f64> = Array1::zeros(p);
    let mut resid = y.clone(); // y - X beta

    let mut gap = duality_gap(x, y, &beta, &penalty);
    let mut converged = gap <= gap_tol;
    let mut iterations = 0;

    while !converged && iterations < max_iters {
        iterations += 1;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = xa.column(j);
            let old = beta[j];
            let rho = col.dot(&resid) / n + col_sq[j] * old;
            let new = soft_scalar(rho, lambda) / col_sq[j];
            if new != old {
                let delta = new - old;
                resid.zip_mut_with(&col, |r, &c| *r -= delta * c);
                beta[j] = new;
            }
        }
        gap = duality_gap(x, y, &beta, &penalty);
        if gap <= gap_tol {
            converged = true;
        }
    }

    Ok(FitResult {
        objective: objective_value(x, y, &beta, &penalty),
        duality_gap: gap,
        iterations,
        converged,
        coefficients: beta.to_vec(),
    })
}

/// Euclidean distance from the negative gradient of the smooth part to the
/// subdifferential of the penalty at `beta`; zero exactly at solutions.
pub fn kkt_residual(
    x: &DesignMatrix,
    y: &Array1<f64>,
    beta: &Array1<f64>,
    penalty: &Penalty,
) -> Result<f64> {
    x.check_response(y)?;
    if beta.len() != x.cols() {
        return Err(Error::dims("beta length does not match design"));
    }
    penalty.validate(x.cols())?;
    let n = x.rows() as f64;
    let r = y - &x.mul_vec(beta);
    let g = x.t_mul_vec(&r).mapv(|v| 2.0 * v / n);

    match penalty {
        Penalty::L1 { lambda } => {
            let bound = 2.0 * lambda;
            let mut dist_sq = 0.0;
            for (gj, bj) in g.iter().zip(beta.iter()) {
                let d = if *bj != 0.0 {
                    gj - bound * bj.signum()
                } else {
                    (gj.abs() - bound).max(0.0)
                };
                dist_sq += d * d;
            }
            Ok(dist_sq.sqrt())
        }
        Penalty::Sorted { weights } => {
            Ok(distance_to_sorted_subdifferential(&g, beta, weights)?)
        }
    }
}

/// Distance from `g` to the subdifferential of `2 ||.||_*` at `beta` via
/// Dykstra's alternating projections. The subdifferential is the face of the
/// scaled dual ball exposed by `beta`:
/// `{w : w dual-feasible for 2||.||_*, <w, beta> = 2 ||beta||_*}`.
fn distance_to_sorted_subdifferential(
    g: &Array1<f64>,
    beta: &Array1<f64>,
    weights: &WeightVector,
) -> Result<f64> {
    let double = weights.scaled(2.0)?;
    // projection onto the dual ball by Moreau decomposition
    let proj_ball = |z: &Array1<f64>| -> Result<Array1<f64>> {
        let shrunk = prox_sorted_l1(&ProxRequest::new(z.clone(), double.clone(), 1.0)?)?;
        Ok(z - &shrunk)
    };
    let beta_norm_sq = beta.dot(beta);
    let target = 2.0 * sorted_l1_norm(beta, weights)?;
    let proj_plane = |z: &Array1<f64>| -> Array1<f64> {
        if beta_norm_sq == 0.0 {
            return z.clone();
        }
        let shift = (target - z.dot(beta)) / beta_norm_sq;
        z + &beta.mapv(|b| b * shift)
    };

    let mut xv = g.clone();
    let mut p_inc: Array1<f64> = Array1::zeros(g.len());
    let mut q_inc: Array1<f64> = Array1::zeros(g.len());
    let scale = 1.0 + g.dot(g).sqrt();
    for _ in 0..200_000 {
        let yv = proj_ball(&(&xv + &p_inc))?;
        p_inc = &xv + &p_inc - &yv;
        let xv_next = proj_plane(&(&yv + &q_inc));
        q_inc = &yv + &q_inc - &xv_next;
        // yv is ball-feasible, xv plane-feasible; they meet at the projection
        let infeas = (&xv_next - &yv).iter().map(|v| v.abs()).fold(0.0, f64::max);
        xv = xv_next;
        if infeas <= 1e-12 * scale {
            break;
        }
    }
    let d = g - &xv;
    Ok(d.dot(&d).sqrt())
}
