//! Gaussian event probabilities: the sorted-correlation event
//! `max_j g#_j / (sigma sqrt(log(2p/j))) <= 4` (probability at least 1/2)
//! and the noise-domination event
//! `(1/n) xi^T X u <= max(H(u), G(u))` for all u (level `1 - delta0/2`).

use std::collections::BTreeMap;

use ndarray::Array1;
use rand::prelude::*;
use rand_distr::StandardNormal;

use super::directions::sample_directions;
use super::{binomial_se, frequency, replicate_records, require_gaussian};
use super::{ExperimentConfig, Record};
use crate::design::DesignMatrix;
use crate::error::Result;
use crate::generate::{generate_design, generate_noise, stream, stream_rng, DesignKind};
use crate::norms::{event_constant, rearrange_desc};

/// With an orthonormal design, `g = X^T xi / sqrt(n)` is exactly
/// `N(0, sigma^2 I_p)` and `||X u||_n = ||u||_2`; the matrix never needs to
/// be materialized. Other designs go through the generic path.
pub(super) fn run(cfg: &ExperimentConfig) -> Result<(BTreeMap<String, f64>, Vec<Record>)> {
    require_gaussian(&cfg.noise)?;
    let n = cfg.design.n;
    let p = cfg.design.p;
    let sigma = cfg.noise.sigma;
    let orthonormal = matches!(cfg.design.kind, DesignKind::Orthonormal);
    let design: Option<DesignMatrix> = if orthonormal {
        None
    } else {
        Some(generate_design(&cfg.design, cfg.seed)?)
    };

    let records = replicate_records(cfg.replicates, |rep| {
        let mut rec = Record::new();
        // the correlation vector g and a closure for ||X u||_n
        let (g, xnorm): (Array1<f64>, Box<dyn Fn(&Array1<f64>) -> f64>) = match &design {
            None => {
                let mut rng = stream_rng(cfg.seed, stream::NOISE, rep);
                let g = Array1::from_shape_fn(p, |_| {
                    sigma * rng.sample::<f64, _>(StandardNormal)
                });
                (g, Box::new(|u: &Array1<f64>| u.dot(u).sqrt()))
            }
            Some(x) => {
                let xi = generate_noise(&cfg.noise, n, cfg.seed, rep);
                let g = x.t_mul_vec(&xi).mapv(|v| v / (n as f64).sqrt());
                let x = x.clone();
                (g, Box::new(move |u: &Array1<f64>| x.prediction_norm(u)))
            }
        };

        // sorted-correlation event
        let sorted = rearrange_desc(&g);
        let mut stat: f64 = 0.0;
        for (j, gj) in sorted.iter().enumerate() {
            let denom = sigma * ((2.0 * p as f64 / (j + 1) as f64).ln()).sqrt();
            stat = stat.max(gj / denom);
        }
        rec.insert("e2_stat".into(), stat);
        rec.insert("e2_ok".into(), if stat <= 4.0 { 1.0 } else { 0.0 });

        // noise-domination event over sampled directions;
        // (1/n) xi^T X u = <g, u> / sqrt(n) for any design
        let mut rng = stream_rng(cfg.seed, stream::DIRECTIONS, rep);
        let c = event_constant();
        let mut min_margin = f64::INFINITY;
        for u in sample_directions(&mut rng, p, cfg.s, cfg.u_samples, Some(&g)) {
            let lhs = g.dot(&u) / (n as f64).sqrt();
            let sorted_u = rearrange_desc(&u);
            let h = c * sigma
                * sorted_u
                    .iter()
                    .enumerate()
                    .map(|(j, uj)| uj * ((2.0 * p as f64 / (j + 1) as f64).ln() / n as f64).sqrt())
                    .sum::<f64>();
            let gv = c * sigma * ((1.0 / cfg.delta0).ln() / n as f64).sqrt() * xnorm(&u);
            min_margin = min_margin.min(h.max(gv) - lhs);
        }
        rec.insert("main_margin".into(), min_margin);
        rec.insert(
            "main_ok".into(),
            if min_margin >= 0.0 { 1.0 } else { 0.0 },
        );
        Ok(rec)
    })?;

    let mut agg = BTreeMap::new();
    let e2_freq = frequency(&records, "e2_ok");
    agg.insert("e2_freq".into(), e2_freq);
    agg.insert("e2_se".into(), binomial_se(e2_freq, records.len()));
    agg.insert("e2_bound".into(), 0.5);
    let main_freq = frequency(&records, "main_ok");
    agg.insert("main_freq".into(), main_freq);
    agg.insert("main_se".into(), binomial_se(main_freq, records.len()));
    agg.insert("main_level".into(), 1.0 - cfg.delta0 / 2.0);
    Ok((agg, records))
}
