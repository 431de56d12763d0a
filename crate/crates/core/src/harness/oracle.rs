//! Oracle-inequality checks for the tuned Lasso and Slope estimators on
//! well-specified models `y = X beta* + xi`.

use std::collections::BTreeMap;

use ndarray::Array1;

use super::{binomial_se, column, frequency, mean_and_se, replicate_records};
use super::{ExperimentConfig, Record};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::generate::{
    generate_design, generate_design_replicate, generate_noise, generate_sparse_beta,
};
use crate::norms::{lq_norm, slope_weights, sorted_l1_norm, stirling_bracket};
use crate::solver::{fit_lasso, fit_slope, FitResult, LassoConfig, SlopeConfig};
use crate::tuning::{lasso_tuning_lambda, TuningContext};

fn q_key(q: f64) -> String {
    format!("err_q{q}").replace('.', "_")
}

struct Instance {
    x: DesignMatrix,
    beta_star: Array1<f64>,
    y: Array1<f64>,
}

fn draw_instance(cfg: &ExperimentConfig, amplitude: f64, rep: u64) -> Result<Instance> {
    let x = if cfg.redraw_design {
        generate_design_replicate(&cfg.design, cfg.seed, rep)?
    } else {
        generate_design(&cfg.design, cfg.seed)?
    };
    let beta_star = generate_sparse_beta(cfg.design.p, cfg.s, amplitude, cfg.seed, rep)?;
    let xi = generate_noise(&cfg.noise, cfg.design.n, cfg.seed, rep);
    let y = &x.mul_vec(&beta_star) + &xi;
    Ok(Instance { x, beta_star, y })
}

/// Per-replicate Lasso fit at the sparsity-aware tuning parameter, error
/// norms against the explicit-constant bounds of the deviation and
/// expectation corollaries.
pub(super) fn run_lasso(cfg: &ExperimentConfig) -> Result<(BTreeMap<String, f64>, Vec<Record>)> {
    let n = cfg.design.n;
    let p = cfg.design.p;
    let s = cfg.s;
    let sigma = cfg.noise.sigma;
    let theta = cfg.theta;
    if theta <= 0.0 {
        return Err(Error::invalid(
            "oracle checks need a positive restricted-eigenvalue constant (theta)",
        ));
    }
    let ctx = TuningContext::new(cfg.gamma, cfg.tau, s, sigma, n, p, cfg.delta0)?;
    let lambda = lasso_tuning_lambda(&ctx)?;
    let amplitude = cfg.amplitude.unwrap_or(10.0 * lambda);

    let rhs_pred = 49.0 / 16.0 * lambda * lambda * s as f64 / (theta * theta);
    let rhs_q = |q: f64| 49.0 / 8.0 * lambda * (s as f64).powf(1.0 / q) / (theta * theta);

    let records = replicate_records(cfg.replicates, |rep| {
        let inst = draw_instance(cfg, amplitude, rep)?;
        let mut lasso_cfg = LassoConfig::new(lambda);
        lasso_cfg.max_iters = cfg.max_iters;
        lasso_cfg.gap_tol = cfg.gap_tol;
        let fit = fit_lasso(&inst.x, &inst.y, &lasso_cfg)?;
        let diff = &fit.coefficients_array() - &inst.beta_star;

        let mut rec = Record::new();
        let pred_sq = inst.x.prediction_norm(&diff).powi(2);
        let l1 = lq_norm(&diff, 1.0)?;
        let combined = 0.5 * lambda * l1 + pred_sq;
        rec.insert("pred_sq".into(), pred_sq);
        rec.insert("combined".into(), combined);
        rec.insert("converged".into(), if fit.converged { 1.0 } else { 0.0 });
        rec.insert(
            "viol_pred".into(),
            if pred_sq > rhs_pred { 1.0 } else { 0.0 },
        );
        rec.insert(
            "viol_soi".into(),
            if combined > rhs_pred { 1.0 } else { 0.0 },
        );
        for &q in &cfg.qs {
            let e = lq_norm(&diff, q)?;
            rec.insert(q_key(q), e);
            rec.insert(
                format!("viol_{}", q_key(q)),
                if e > rhs_q(q) { 1.0 } else { 0.0 },
            );
        }
        Ok(rec)
    })?;

    let mut agg = BTreeMap::new();
    let reps = records.len();
    agg.insert("lambda".into(), lambda);
    agg.insert("amplitude".into(), amplitude);
    agg.insert("rhs_pred".into(), rhs_pred);
    // deviation level of the explicit-constant corollary
    let tail = 0.5 * (s as f64 / (2.0 * std::f64::consts::E * p as f64)).powf(s as f64 / (theta * theta));
    agg.insert("bound_tail".into(), tail);
    for key in ["viol_pred", "viol_soi"] {
        let f = frequency(&records, key);
        agg.insert(format!("{key}_freq"), f);
        agg.insert(format!("{key}_se"), binomial_se(f, reps));
    }
    for &q in &cfg.qs {
        let key = format!("viol_{}", q_key(q));
        let f = frequency(&records, &key);
        agg.insert(format!("{key}_freq"), f);
        agg.insert(format!("{key}_se"), binomial_se(f, reps));
        agg.insert(format!("rhs_{}", q_key(q)), rhs_q(q));
    }
    // expectation bounds
    let (mean_combined, se_combined) = mean_and_se(&column(&records, "combined"));
    agg.insert("mean_combined".into(), mean_combined);
    agg.insert("mean_combined_se".into(), se_combined);
    let log2ep = (2.0 * std::f64::consts::E * p as f64).ln();
    agg.insert(
        "mean_rhs".into(),
        49.0 / 16.0 * lambda * lambda * s as f64 * (1.0 / (theta * theta) + 1.0 / (2.0 * log2ep)),
    );
    for &q in &cfg.qs {
        let qth: Vec<f64> = column(&records, &q_key(q))
            .iter()
            .map(|e| e.powf(q))
            .collect();
        let (m, se) = mean_and_se(&qth);
        agg.insert(format!("mean_{}_pow", q_key(q)), m);
        agg.insert(format!("mean_{}_pow_se", q_key(q)), se);
        agg.insert(
            format!("mean_rhs_{}_pow", q_key(q)),
            (49.0 * lambda / 8.0).powf(q)
                * s as f64
                * (1.0 / theta.powf(2.0 * q) + 1.0 / log2ep.powf(q)),
        );
    }
    Ok((agg, records))
}

/// One Slope fit per replicate (no sparsity input) against the per-s bounds,
/// plus the deterministic weight bracket and the balanced oracle form.
pub(super) fn run_slope(cfg: &ExperimentConfig) -> Result<(BTreeMap<String, f64>, Vec<Record>)> {
    let n = cfg.design.n;
    let p = cfg.design.p;
    let s = cfg.s;
    let sigma = cfg.noise.sigma;
    let theta = cfg.theta;
    let a = cfg.a_constant;
    let weights = slope_weights(n, p, sigma, a)?;

    // sum_{j<=s} lambda_j^2 sandwiched by the log-sum bracket, for every s
    let mut equival_ok = true;
    for si in 1..=p {
        let sum_sq = weights.sum_sq_head(si);
        let (lo, _, hi) = stirling_bracket(si, p)?;
        let scale = a * a * sigma * sigma / n as f64;
        if sum_sq < scale * lo - 1e-9 * scale * lo.abs() || sum_sq > scale * hi + 1e-9 * scale * hi {
            equival_ok = false;
        }
    }

    let lambda_head = weights.sum_sq_head(s);
    let rhs_soi = 49.0 / 16.0 * lambda_head / (theta * theta);
    let rhs_l2_sq = 9.0 / 4.0 * lambda_head / theta.powi(4);
    let amplitude = cfg
        .amplitude
        .unwrap_or(10.0 * (lambda_head / s as f64).sqrt());

    let log2p = (2.0 * p as f64).ln();

    let records = replicate_records(cfg.replicates, |rep| {
        let inst = draw_instance(cfg, amplitude, rep)?;
        let mut slope_cfg = SlopeConfig::new(weights.clone());
        slope_cfg.max_iters = cfg.max_iters;
        slope_cfg.gap_tol = cfg.gap_tol;
        let fit: FitResult = fit_slope(&inst.x, &inst.y, &slope_cfg)?;
        let beta_hat = fit.coefficients_array();
        let diff = &beta_hat - &inst.beta_star;

        let mut rec = Record::new();
        let pred_sq = inst.x.prediction_norm(&diff).powi(2);
        let sorted_err = sorted_l1_norm(&diff, &weights)?;
        let combined = 0.5 * sorted_err + pred_sq;
        let l2_sq = diff.dot(&diff);
        rec.insert("pred_sq".into(), pred_sq);
        rec.insert("sorted_err".into(), sorted_err);
        rec.insert("combined".into(), combined);
        rec.insert("l2_sq".into(), l2_sq);
        rec.insert("converged".into(), if fit.converged { 1.0 } else { 0.0 });
        rec.insert(
            "viol_soi".into(),
            if combined > rhs_soi { 1.0 } else { 0.0 },
        );
        rec.insert(
            "viol_l2".into(),
            if l2_sq > rhs_l2_sq { 1.0 } else { 0.0 },
        );

        // balanced form: one fit compared against the best per-s right-hand
        // side, where the s-term approximation error comes from truncating
        // beta* to its top-s entries
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| {
            inst.beta_star[j]
                .abs()
                .partial_cmp(&inst.beta_star[i].abs())
                .unwrap()
        });
        let mut best_rhs = f64::INFINITY;
        let mut trunc = Array1::zeros(p);
        let mut prev = 0usize;
        for s_ in 1..=s {
            for &j in &order[prev..s_] {
                trunc[j] = inst.beta_star[j];
            }
            prev = s_;
            let approx = inst
                .x
                .prediction_norm(&(&trunc - &inst.beta_star))
                .powi(2);
            let complexity = 49.0 / 16.0
                * weights.sum_sq_head(s_)
                * (1.0 / (theta * theta) + 1.0 / (2.0 * log2p));
            best_rhs = best_rhs.min(approx + complexity);
        }
        rec.insert("balanced_rhs".into(), best_rhs);
        Ok(rec)
    })?;

    let mut agg = BTreeMap::new();
    let reps = records.len();
    agg.insert("equival_ok".into(), if equival_ok { 1.0 } else { 0.0 });
    agg.insert("rhs_soi".into(), rhs_soi);
    agg.insert("rhs_l2_sq".into(), rhs_l2_sq);
    agg.insert("amplitude".into(), amplitude);
    agg.insert(
        "bound_tail".into(),
        0.5 * (s as f64 / (2.0 * p as f64)).powf(s as f64 / (theta * theta)),
    );
    for key in ["viol_soi", "viol_l2"] {
        let f = frequency(&records, key);
        agg.insert(format!("{key}_freq"), f);
        agg.insert(format!("{key}_se"), binomial_se(f, reps));
    }
    let (mean_combined, se_c) = mean_and_se(&column(&records, "combined"));
    agg.insert("mean_combined".into(), mean_combined);
    agg.insert("mean_combined_se".into(), se_c);
    agg.insert(
        "mean_rhs".into(),
        49.0 / 16.0 * lambda_head * (1.0 / (theta * theta) + 1.0 / (2.0 * log2p)),
    );
    let (mean_l2_sq, se_l2) = mean_and_se(&column(&records, "l2_sq"));
    agg.insert("mean_l2_sq".into(), mean_l2_sq);
    agg.insert("mean_l2_sq_se".into(), se_l2);
    agg.insert(
        "mean_l2_rhs".into(),
        9.0 / 4.0 * lambda_head * (1.0 / theta.powi(4) + 1.0 / (log2p * log2p)),
    );
    let (mean_pred, se_p) = mean_and_se(&column(&records, "pred_sq"));
    let (mean_balanced, _) = mean_and_se(&column(&records, "balanced_rhs"));
    agg.insert("mean_pred_sq".into(), mean_pred);
    agg.insert("mean_pred_sq_se".into(), se_p);
    agg.insert("mean_balanced_rhs".into(), mean_balanced);
    Ok((agg, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{DesignKind, DesignSpec, NoiseModel};
    use crate::harness::Scenario;

    fn base(scenario: Scenario, n: usize, p: usize) -> ExperimentConfig {
        let design = DesignSpec::new(DesignKind::Orthonormal, n, p);
        ExperimentConfig::new(scenario, design, NoiseModel::gaussian(1.0).unwrap())
    }

    #[test]
    fn orthonormal_small_case_never_violates() {
        // on an orthonormal design the fit is soft(X^T y / n, lambda), so the
        // per-coordinate error is at most lambda plus the noise correlation;
        // the 49/16 constant leaves plenty of room
        let mut cfg = base(Scenario::OracleLasso, 32, 16);
        cfg.s = 3;
        cfg.replicates = 20;
        cfg.seed = 3;
        let (agg, _) = run_lasso(&cfg).unwrap();
        assert_eq!(agg["viol_pred_freq"], 0.0);
        assert_eq!(agg["viol_soi_freq"], 0.0);
    }

    #[test]
    fn lasso_oracle_bounds_hold_at_small_scale() {
        let mut cfg = base(Scenario::OracleLasso, 128, 64);
        cfg.s = 3;
        cfg.replicates = 60;
        cfg.seed = 11;
        let (agg, records) = run_lasso(&cfg).unwrap();
        assert_eq!(records.len(), 60);
        assert_eq!(agg["viol_pred_freq"], 0.0);
        assert_eq!(agg["viol_err_q1_freq"], 0.0);
        assert_eq!(agg["viol_err_q2_freq"], 0.0);
        // expectation bounds with the three-standard-error allowance
        assert!(agg["mean_combined"] <= agg["mean_rhs"] + 3.0 * agg["mean_combined_se"]);
        assert!(
            agg["mean_err_q2_pow"] <= agg["mean_rhs_err_q2_pow"] + 3.0 * agg["mean_err_q2_pow_se"]
        );
    }

    #[test]
    fn slope_oracle_bounds_hold_at_small_scale() {
        let mut cfg = base(Scenario::OracleSlope, 128, 64);
        cfg.s = 3;
        cfg.replicates = 60;
        cfg.seed = 13;
        let (agg, _) = run_slope(&cfg).unwrap();
        assert_eq!(agg["equival_ok"], 1.0);
        assert_eq!(agg["viol_soi_freq"], 0.0);
        assert_eq!(agg["viol_l2_freq"], 0.0);
        assert!(agg["mean_combined"] <= agg["mean_rhs"] + 3.0 * agg["mean_combined_se"]);
        assert!(agg["mean_l2_sq"] <= agg["mean_l2_rhs"] + 3.0 * agg["mean_l2_sq_se"]);
        // the one-fit-many-bounds comparison: mean prediction error below the
        // balanced right-hand side
        assert!(agg["mean_pred_sq"] <= agg["mean_balanced_rhs"] + 3.0 * agg["mean_pred_sq_se"]);
    }
}
