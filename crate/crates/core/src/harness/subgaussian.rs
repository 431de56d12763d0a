//! The subgaussian-noise domination event: for noise with
//! `E exp(xi_i^2/sigma^2) <= e`, with probability at least `1 - delta0`,
//! every direction u satisfies
//! `(1/n) xi^T X u <= 40 sigma max( sum_j u#_j sqrt(log(2p/j)/n),
//!                                  ||X u||_n (sqrt(pi/2) + sqrt(2 log(1/delta0)))/sqrt(n) )`.

use std::collections::BTreeMap;

use super::directions::sample_directions;
use super::{binomial_se, frequency, replicate_records};
use super::{ExperimentConfig, Record};
use crate::error::{Error, Result};
use crate::generate::{generate_design, generate_noise, stream, stream_rng, NoiseKind};
use crate::norms::rearrange_desc;

pub(super) fn run(cfg: &ExperimentConfig) -> Result<(BTreeMap<String, f64>, Vec<Record>)> {
    if cfg.noise.kind == NoiseKind::Gaussian {
        return Err(Error::invalid(
            "the subgaussian-noise scenario is for non-gaussian noise; use the event scenario",
        ));
    }
    let n = cfg.design.n;
    let p = cfg.design.p;
    let sigma = cfg.noise.sigma;
    let x = generate_design(&cfg.design, cfg.seed)?;
    let tail = (std::f64::consts::PI / 2.0).sqrt() + (2.0 * (1.0 / cfg.delta0).ln()).sqrt();

    let records = replicate_records(cfg.replicates, |rep| {
        let xi = generate_noise(&cfg.noise, n, cfg.seed, rep);
        let g = x.t_mul_vec(&xi).mapv(|v| v / (n as f64).sqrt());
        let mut rng = stream_rng(cfg.seed, stream::DIRECTIONS, rep);
        let mut min_margin = f64::INFINITY;
        for u in sample_directions(&mut rng, p, cfg.s, cfg.u_samples.max(1), Some(&g)) {
            let lhs = g.dot(&u) / (n as f64).sqrt();
            let sorted_u = rearrange_desc(&u);
            let weighted: f64 = sorted_u
                .iter()
                .enumerate()
                .map(|(j, uj)| uj * ((2.0 * p as f64 / (j + 1) as f64).ln() / n as f64).sqrt())
                .sum();
            let pred = x.prediction_norm(&u) * tail / (n as f64).sqrt();
            let rhs = 40.0 * sigma * weighted.max(pred);
            min_margin = min_margin.min(rhs - lhs);
        }
        let mut rec = Record::new();
        rec.insert("min_margin".into(), min_margin);
        rec.insert("ok".into(), if min_margin >= 0.0 { 1.0 } else { 0.0 });
        Ok(rec)
    })?;

    let mut agg = BTreeMap::new();
    let freq = frequency(&records, "ok");
    agg.insert("freq".into(), freq);
    agg.insert("se".into(), binomial_se(freq, records.len()));
    agg.insert("level".into(), 1.0 - cfg.delta0);
    Ok((agg, records))
}
