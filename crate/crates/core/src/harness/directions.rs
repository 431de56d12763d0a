//! Direction sampler for the all-u event checks: the events quantify over
//! every u, so the empirical check probes a mix of sparse, dense,
//! cone-aligned and adversarially aligned directions. This is a
//! necessary-condition check, not a proof.

use ndarray::Array1;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `count` directions; `adversary` (typically the correlation vector g)
/// steers the aligned family toward the worst observed coordinates.
pub(crate) fn sample_directions(
    rng: &mut ChaCha8Rng,
    p: usize,
    s: usize,
    count: usize,
    adversary: Option<&Array1<f64>>,
) -> Vec<Array1<f64>> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let u = match k % 4 {
            // s-sparse gaussian
            0 => {
                let mut u = Array1::zeros(p);
                for idx in rand::seq::index::sample(rng, p, s.min(p)).iter() {
                    u[idx] = rng.sample::<f64, _>(StandardNormal);
                }
                u
            }
            // dense gaussian
            1 => Array1::from_shape_fn(p, |_| rng.sample::<f64, _>(StandardNormal)),
            // cone-aligned: unit spikes plus a small dense tail
            2 => {
                let mut u: Array1<f64> =
                    Array1::from_shape_fn(p, |_| 0.05 * rng.sample::<f64, _>(StandardNormal));
                for idx in rand::seq::index::sample(rng, p, s.min(p)).iter() {
                    u[idx] += if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
                u
            }
            // aligned with the adversary's magnitude ranking
            _ => match adversary {
                Some(adv) => {
                    let mut order: Vec<usize> = (0..p).collect();
                    order.sort_by(|&a, &b| adv[b].abs().partial_cmp(&adv[a].abs()).unwrap());
                    let mut u = Array1::zeros(p);
                    for (rank, &j) in order.iter().enumerate() {
                        let shape = ((2.0 * p as f64) / (rank + 1) as f64).ln().sqrt();
                        u[j] = shape * adv[j].signum();
                    }
                    u
                }
                None => Array1::from_shape_fn(p, |_| rng.sample::<f64, _>(StandardNormal)),
            },
        };
        out.push(u);
    }
    out
}
