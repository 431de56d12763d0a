//! Sparsity-adaptive Lasso: a dyadic family of fits, a Lepski-type index
//! selection, the sparsity estimate `s_hat` and the adaptive estimator.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::norms::{event_constant, lq_norm};
use crate::solver::{fit_lasso, FitResult, LassoConfig, LassoStrategy};

/// The dyadic sparsity levels `b_m = 2^{m-1}` for `m = 1..=M`, with
/// `M = max{m : b_m <= s_star}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DyadicGrid {
    s_star: usize,
    m_max: usize,
}

impl DyadicGrid {
    pub fn new(s_star: usize) -> Result<Self> {
        if s_star < 2 {
            return Err(Error::invalid("the dyadic grid requires s_star >= 2"));
        }
        let mut m_max = 1;
        while 1usize << m_max <= s_star {
            m_max += 1;
        }
        // now 2^(m_max) > s_star >= 2^(m_max - 1) = b_{m_max}
        Ok(Self { s_star, m_max })
    }

    pub fn s_star(&self) -> usize {
        self.s_star
    }

    /// Number of levels M (at least 2).
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    /// `b_m = 2^{m-1}` for `m` in `1..=M`.
    pub fn level(&self, m: usize) -> usize {
        1usize << (m - 1)
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.m_max).map(|m| self.level(m))
    }
}

/// Distance used between fits at consecutive levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "metric", content = "q")]
pub enum DistanceMetric {
    /// `d(b, b') = ||X(b - b')||_n`
    Prediction,
    /// `d(b, b') = ||b - b'||_q` with `q` in `[1, 2]`
    Lq(f64),
}

/// Configuration of the selector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub metric: DistanceMetric,
    /// Override for the threshold constant; `None` resolves to
    /// `7(4+sqrt2)/(2 theta_star)` for the prediction metric and
    /// `49(4+sqrt2)/(4 theta_star)` for the l_q metric.
    #[serde(default)]
    pub c0_constant: Option<f64>,
    pub theta_star: f64,
    pub sigma: f64,
    /// Reuse each level's solution as the next level's start (off by
    /// default: independent solver calls keep replicates deterministic
    /// under any scheduling).
    #[serde(default)]
    pub warm_start: bool,
    #[serde(default)]
    pub gap_tol: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_max_iters() -> usize {
    crate::solver::DEFAULT_MAX_ITERS
}

impl SelectorConfig {
    pub fn new(metric: DistanceMetric, theta_star: f64, sigma: f64) -> Result<Self> {
        if !(theta_star > 0.0 && theta_star <= 1.0) {
            return Err(Error::invalid("theta_star must lie in (0, 1]"));
        }
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::invalid("sigma must be positive"));
        }
        if let DistanceMetric::Lq(q) = metric {
            if !(1.0..=2.0).contains(&q) {
                return Err(Error::invalid("the l_q metric requires q in [1, 2]"));
            }
        }
        Ok(Self {
            metric,
            c0_constant: None,
            theta_star,
            sigma,
            warm_start: false,
            gap_tol: None,
            max_iters: default_max_iters(),
        })
    }

    /// The threshold constant in use.
    pub fn c0(&self) -> f64 {
        self.c0_constant.unwrap_or(match self.metric {
            DistanceMetric::Prediction => 7.0 * event_constant() / (2.0 * self.theta_star),
            DistanceMetric::Lq(_) => 49.0 * event_constant() / (4.0 * self.theta_star),
        })
    }
}

/// The threshold `w(b)`: `C0 sigma sqrt(b log(2ep/b)/n)` for the prediction
/// metric, `C0 sigma b^{1/q} sqrt(log(2ep/b)/n)` for l_q. Strictly
/// increasing in `b` on `[1, p]`.
pub fn threshold_w(b: f64, cfg: &SelectorConfig, n: usize, p: usize) -> Result<f64> {
    if !(1.0 <= b && b <= p as f64) {
        return Err(Error::invalid(format!(
            "threshold level must lie in [1, p], got {b}"
        )));
    }
    let log_term = (2.0 * std::f64::consts::E * p as f64 / b).ln();
    let nf = n as f64;
    let value = match cfg.metric {
        DistanceMetric::Prediction => cfg.c0() * cfg.sigma * (b * log_term / nf).sqrt(),
        DistanceMetric::Lq(q) => cfg.c0() * cfg.sigma * b.powf(1.0 / q) * (log_term / nf).sqrt(),
    };
    Ok(value)
}

/// Smallest `m` in `{2..M}` such that `d_k <= 2 w(b_k)` for all `k >= m`,
/// with `m = M` when no such index exists. `distances[i]` and
/// `thresholds[i]` correspond to `k = i + 2`.
pub fn select_m_hat(distances: &[f64], thresholds: &[f64], grid: &DyadicGrid) -> Result<usize> {
    let m_max = grid.m_max();
    if distances.len() != m_max - 1 || thresholds.len() != m_max - 1 {
        return Err(Error::dims(format!(
            "expected {} consecutive-level distances, got {}",
            m_max - 1,
            distances.len()
        )));
    }
    let mut last_bad = None;
    for (i, (d, w)) in distances.iter().zip(thresholds).enumerate() {
        if *d > 2.0 * w {
            last_bad = Some(i + 2);
        }
    }
    Ok(match last_bad {
        None => 2,
        Some(k) => (k + 1).min(m_max),
    })
}

/// Outcome of the adaptive run: the selected index, the sparsity estimate
/// `s_hat = 2^{m_hat - 1}` and the adaptive estimator, a Lasso fit at
/// sparsity level `2 s_hat`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub m_hat: usize,
    pub s_hat: usize,
    pub beta_tilde: Vec<f64>,
    pub per_level_fits: Vec<FitResult>,
    pub distances: Vec<f64>,
    pub thresholds: Vec<f64>,
}

/// The level tuning parameter `lambda(b) = 2(4+sqrt2) sigma sqrt(log(2ep/b)/n)`.
pub fn level_lambda(b: usize, sigma: f64, n: usize, p: usize) -> f64 {
    let ratio = 2.0 * std::f64::consts::E * p as f64 / b as f64;
    2.0 * event_constant() * sigma * (ratio.ln() / n as f64).sqrt()
}

/// Runs the full adaptive procedure: per-level Lasso fits, consecutive
/// distances in the configured metric, index selection and the final fit at
/// sparsity `2 s_hat`.
pub fn run_adaptive(
    x: &DesignMatrix,
    y: &Array1<f64>,
    cfg: &SelectorConfig,
    grid: &DyadicGrid,
) -> Result<SelectionResult> {
    x.check_response(y)?;
    if !x.is_normalized() {
        log::warn!(
            "adaptive selection assumes a normalized design; max column norm is {:.6}",
            x.max_column_norm()
        );
    }
    let n = x.rows();
    let p = x.cols();

    let fit_at = |b: usize, start: Option<&FitResult>| -> Result<FitResult> {
        let mut lasso_cfg = LassoConfig::new(level_lambda(b, cfg.sigma, n, p));
        lasso_cfg.max_iters = cfg.max_iters;
        lasso_cfg.gap_tol = cfg.gap_tol;
        lasso_cfg.strategy = LassoStrategy::ProximalGradient;
        let _ = start; // warm starting handled below
        fit_lasso(x, y, &lasso_cfg)
    };

    let mut fits: Vec<FitResult> = Vec::with_capacity(grid.m_max());
    for m in 1..=grid.m_max() {
        let prev = if cfg.warm_start { fits.last() } else { None };
        fits.push(fit_at(grid.level(m), prev)?);
    }

    let coefs: Vec<Array1<f64>> = fits.iter().map(|f| f.coefficients_array()).collect();
    let mut distances = Vec::with_capacity(grid.m_max() - 1);
    let mut thresholds = Vec::with_capacity(grid.m_max() - 1);
    for k in 2..=grid.m_max() {
        let diff = &coefs[k - 1] - &coefs[k - 2];
        let d = match cfg.metric {
            DistanceMetric::Prediction => x.prediction_norm(&diff),
            DistanceMetric::Lq(q) => lq_norm(&diff, q)?,
        };
        distances.push(d);
        thresholds.push(threshold_w(grid.level(k) as f64, cfg, n, p)?);
    }

    let m_hat = select_m_hat(&distances, &thresholds, grid)?;
    let s_hat = 1usize << (m_hat - 1);
    // the adaptive estimator refits at sparsity 2 s_hat, which may exceed b_M
    let final_fit = fit_at((2 * s_hat).min(p), fits.last())?;

    Ok(SelectionResult {
        m_hat,
        s_hat,
        beta_tilde: final_fit.coefficients.clone(),
        per_level_fits: fits,
        distances,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_design, generate_sparse_beta, DesignKind, DesignSpec};

    fn cfg_pred() -> SelectorConfig {
        SelectorConfig::new(DistanceMetric::Prediction, 1.0, 1.0).unwrap()
    }

    #[test]
    fn grid_levels() {
        let g = DyadicGrid::new(16).unwrap();
        assert_eq!(g.m_max(), 5);
        assert_eq!(g.levels().collect::<Vec<_>>(), vec![1, 2, 4, 8, 16]);

        let g = DyadicGrid::new(13).unwrap();
        assert_eq!(g.m_max(), 4);
        assert_eq!(g.level(g.m_max()), 8);

        let g = DyadicGrid::new(2).unwrap();
        assert_eq!(g.m_max(), 2);

        assert!(DyadicGrid::new(1).is_err());
    }

    #[test]
    fn threshold_values_and_growth() {
        let cfg = cfg_pred();
        let n = 100;
        let p = 64;
        // b = 1: C0 sigma sqrt(log(2ep)/n)
        let w1 = threshold_w(1.0, &cfg, n, p).unwrap();
        let expect = cfg.c0() * ((2.0 * std::f64::consts::E * 64.0).ln() / 100.0).sqrt();
        assert!((w1 - expect).abs() < 1e-12);

        // growth ratio in (1, 2] while b <= p/2
        let mut b = 1.0;
        while b <= 32.0 {
            let r = threshold_w(2.0 * b, &cfg, n, p).unwrap() / threshold_w(b, &cfg, n, p).unwrap();
            assert!(r > 1.0 && r <= 2.0, "ratio {r} at b = {b}");
            b *= 2.0;
        }

        // q = 1 at b = 1 coincides with the prediction form (same constant)
        let mut cfg_l1 = SelectorConfig::new(DistanceMetric::Lq(1.0), 1.0, 1.0).unwrap();
        cfg_l1.c0_constant = Some(cfg.c0());
        let w1_lq = threshold_w(1.0, &cfg_l1, n, p).unwrap();
        assert!((w1 - w1_lq).abs() < 1e-12);

        assert!(threshold_w(0.5, &cfg, n, p).is_err());
        assert!(threshold_w(65.0, &cfg, n, p).is_err());
    }

    #[test]
    fn default_constants_per_metric() {
        let c = event_constant();
        let pred = cfg_pred();
        assert!((pred.c0() - 7.0 * c / 2.0).abs() < 1e-12);
        let lq = SelectorConfig::new(DistanceMetric::Lq(2.0), 0.5, 1.0).unwrap();
        assert!((lq.c0() - 49.0 * c / 2.0).abs() < 1e-12);
    }

    #[test]
    fn selector_rule() {
        let grid = DyadicGrid::new(16).unwrap(); // M = 5, k = 2..=5
        let w = vec![1.0; 4];
        // all distances below threshold -> m_hat = 2
        assert_eq!(select_m_hat(&[0.0, 0.0, 0.0, 0.0], &w, &grid).unwrap(), 2);
        // all above -> the defining set is empty -> m_hat = M
        assert_eq!(select_m_hat(&[9.0, 9.0, 9.0, 9.0], &w, &grid).unwrap(), 5);
        // sole violation at k = 3 -> m_hat = 4
        assert_eq!(select_m_hat(&[0.0, 9.0, 0.0, 0.0], &w, &grid).unwrap(), 4);
        // wrong arity is rejected
        assert!(select_m_hat(&[0.0], &w, &grid).is_err());
    }

    #[test]
    fn noiseless_orthonormal_follows_the_closed_form_path() {
        // orthonormal noiseless: the level-b fit is soft(beta, lambda(b)), so
        // with lambda below the minimal signal every support is recovered and
        // consecutive fits differ by the shrinkage gap on the support
        let n = 64;
        let p = 32;
        let s = 4;
        let x = generate_design(&DesignSpec::new(DesignKind::Orthonormal, n, p), 2).unwrap();
        let beta = generate_sparse_beta(p, s, 25.0, 7, 0).unwrap();
        let y = x.mul_vec(&beta);
        let grid = DyadicGrid::new(8).unwrap();
        let out = run_adaptive(&x, &y, &cfg_pred(), &grid).unwrap();
        assert_eq!(out.m_hat, 2);
        assert_eq!(out.s_hat, 2);
        for (i, d) in out.distances.iter().enumerate() {
            let k = i + 2;
            let expect = (s as f64).sqrt()
                * (level_lambda(grid.level(k - 1), 1.0, n, p)
                    - level_lambda(grid.level(k), 1.0, n, p));
            assert!((d - expect).abs() < 1e-6, "distance {d} expected {expect}");
        }
        // every level recovers the support; beta_tilde carries at most the
        // soft-threshold bias of lambda(4)
        let bt = Array1::from(out.beta_tilde.clone());
        for j in 0..p {
            assert_eq!(bt[j] != 0.0, beta[j] != 0.0);
        }
        let err = (&bt - &beta).iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err <= level_lambda(4, 1.0, n, p) + 1e-6);
    }

    #[test]
    fn degenerate_grid_selects_two() {
        let n = 32;
        let p = 16;
        let x = generate_design(&DesignSpec::new(DesignKind::Orthonormal, n, p), 3).unwrap();
        let beta = generate_sparse_beta(p, 2, 10.0, 5, 0).unwrap();
        let y = x.mul_vec(&beta);
        let grid = DyadicGrid::new(2).unwrap();
        let out = run_adaptive(&x, &y, &cfg_pred(), &grid).unwrap();
        assert_eq!(out.m_hat, 2);
        assert_eq!(out.s_hat, 2);
    }

    #[test]
    fn threshold_scaling_never_raises_m_hat() {
        // multiplying all thresholds by c >= 1 can only shrink the bad set
        let grid = DyadicGrid::new(16).unwrap();
        let d = vec![1.3, 0.4, 2.9, 0.1];
        let w = vec![1.0, 0.7, 1.2, 0.5];
        let base = select_m_hat(&d, &w, &grid).unwrap();
        for c in [1.0, 1.5, 3.0, 10.0] {
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            let m = select_m_hat(&d, &scaled, &grid).unwrap();
            assert!(m <= base, "scaling by {c} raised m_hat");
        }
    }
}
