//! Proximal maps for the l1 and sorted-l1 penalties.
//!
//! The fast sorted-l1 prox works on the magnitude-sorted vector and runs a
//! stack-based pool-adjacent-violators pass; `prox_oracle` solves the same
//! problem by enumerating the piecewise-quadratic structure of the optimum
//! and is used to validate the fast path in tests.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::norms::{sorted_l1_norm, WeightVector};

/// Maximum dimension accepted by [`prox_oracle`].
pub const ORACLE_MAX_DIM: usize = 8;

/// A sorted-l1 proximal problem: `argmin_x 0.5 ||x - point||_2^2 + step * ||x||_*`.
#[derive(Debug, Clone)]
pub struct ProxRequest {
    pub point: Array1<f64>,
    pub weights: WeightVector,
    pub step: f64,
}

impl ProxRequest {
    pub fn new(point: Array1<f64>, weights: WeightVector, step: f64) -> Result<Self> {
        if point.len() != weights.len() {
            return Err(Error::dims(format!(
                "point has length {}, weights have length {}",
                point.len(),
                weights.len()
            )));
        }
        if step <= 0.0 || !step.is_finite() {
            return Err(Error::invalid("prox step must be positive"));
        }
        Ok(Self {
            point,
            weights,
            step,
        })
    }

    /// `0.5 ||x - point||_2^2 + step ||x||_*` evaluated with the true sorted norm.
    pub fn objective(&self, x: &Array1<f64>) -> Result<f64> {
        let quad: f64 = x
            .iter()
            .zip(self.point.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(0.5 * quad + self.step * sorted_l1_norm(x, &self.weights)?)
    }
}

/// Componentwise `sign(v_j) * max(|v_j| - t, 0)`.
pub fn soft_threshold(v: &Array1<f64>, t: f64) -> Result<Array1<f64>> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::invalid("soft threshold must be nonnegative"));
    }
    Ok(v.mapv(|x| {
        let shrunk = x.abs() - t;
        if shrunk > 0.0 {
            shrunk.copysign(x)
        } else {
            0.0
        }
    }))
}

/// The sorted-l1 prox via sign/permutation reduction and a single
/// pool-adjacent-violators pass, O(p log p) including the sort.
pub fn prox_sorted_l1(req: &ProxRequest) -> Result<Array1<f64>> {
    let p = req.point.len();
    if p == 0 {
        return Ok(Array1::zeros(0));
    }

    // sort |v| descending, remembering where each entry came from
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| {
        req.point[j]
            .abs()
            .partial_cmp(&req.point[i].abs())
            .expect("finite entries")
    });

    // z_i = v#_i - step * lambda_i, then project onto the
    // non-increasing nonnegative cone
    let z: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| req.point[i].abs() - req.step * req.weights.get(rank))
        .collect();
    let fitted = pava_nonincreasing(&z);

    let mut out = Array1::zeros(p);
    for (rank, &i) in order.iter().enumerate() {
        let mag = fitted[rank].max(0.0);
        out[i] = mag.copysign(req.point[i]);
        if out[i] == 0.0 {
            out[i] = 0.0; // normalize -0.0
        }
    }
    Ok(out)
}

/// Isotonic regression of `z` under the non-increasing constraint
/// `x_1 >= x_2 >= ... >= x_p`, stack-based pool-adjacent-violators.
fn pava_nonincreasing(z: &[f64]) -> Vec<f64> {
    // block = (sum, count)
    let mut sums: Vec<f64> = Vec::with_capacity(z.len());
    let mut counts: Vec<usize> = Vec::with_capacity(z.len());
    for &zi in z {
        sums.push(zi);
        counts.push(1);
        // merge while the previous block average is below the last one
        while sums.len() >= 2 {
            let k = sums.len();
            let prev_avg = sums[k - 2] / counts[k - 2] as f64;
            let last_avg = sums[k - 1] / counts[k - 1] as f64;
            if prev_avg < last_avg {
                let s = sums.pop().unwrap();
                let c = counts.pop().unwrap();
                *sums.last_mut().unwrap() += s;
                *counts.last_mut().unwrap() += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(z.len());
    for (s, c) in sums.iter().zip(&counts) {
        let avg = s / *c as f64;
        out.extend(std::iter::repeat(avg).take(*c));
    }
    out
}

/// Brute-force sorted-l1 prox for dimensions up to [`ORACLE_MAX_DIM`].
///
/// Enumerates the support size and every contiguous tie-block pattern of the
/// magnitude-sorted optimum, solves each equality-constrained quadratic piece
/// in closed form, evaluates every candidate with the true objective and
/// returns the best. Shares no code with [`prox_sorted_l1`].
pub fn prox_oracle(req: &ProxRequest) -> Result<Array1<f64>> {
    let p = req.point.len();
    if p > ORACLE_MAX_DIM {
        return Err(Error::invalid(format!(
            "prox_oracle handles dimension <= {ORACLE_MAX_DIM}, got {p}"
        )));
    }
    if p == 0 {
        return Ok(Array1::zeros(0));
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| {
        req.point[j]
            .abs()
            .partial_cmp(&req.point[i].abs())
            .expect("finite entries")
    });
    let b: Vec<f64> = order.iter().map(|&i| req.point[i].abs()).collect();

    let mut best: Option<(f64, Array1<f64>)> = None;
    let mut consider = |x: Array1<f64>| -> Result<()> {
        let obj = req.objective(&x)?;
        if best.as_ref().map_or(true, |(bo, _)| obj < *bo) {
            best = Some((obj, x));
        }
        Ok(())
    };

    // support size m: the m largest |v| entries may be nonzero
    for m in 0..=p {
        if m == 0 {
            consider(Array1::zeros(p))?;
            continue;
        }
        // every composition of m into contiguous blocks, encoded by cut bits
        for cuts in 0..(1_u64 << (m - 1)) {
            let mut mags = vec![0.0; p];
            let mut lo = 0;
            let mut feasible = true;
            for hi in 1..=m {
                let block_ends = hi == m || (cuts >> (hi - 1)) & 1 == 1;
                if !block_ends {
                    continue;
                }
                let len = (hi - lo) as f64;
                let sum_b: f64 = b[lo..hi].iter().sum();
                let sum_w: f64 = (lo..hi).map(|r| req.weights.get(r)).sum();
                let mu = ((sum_b - req.step * sum_w) / len).max(0.0);
                if mu == 0.0 && hi < m {
                    // a zero block before the end of the support duplicates
                    // the smaller-support candidate
                    feasible = false;
                    break;
                }
                for r in lo..hi {
                    mags[r] = mu;
                }
                lo = hi;
            }
            if !feasible {
                continue;
            }
            let mut x = Array1::zeros(p);
            for (rank, &i) in order.iter().enumerate() {
                x[i] = mags[rank].copysign(req.point[i]);
                if x[i] == 0.0 {
                    x[i] = 0.0;
                }
            }
            consider(x)?;
        }
    }

    Ok(best.expect("at least the zero candidate").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn req(v: Vec<f64>, w: Vec<f64>, step: f64) -> ProxRequest {
        ProxRequest::new(
            Array1::from(v),
            WeightVector::new(w).unwrap(),
            step,
        )
        .unwrap()
    }

    #[test]
    fn soft_threshold_basic() {
        let v = array![3.0, -1.0];
        assert_eq!(soft_threshold(&v, 2.0).unwrap(), array![1.0, 0.0]);
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v);
        assert_eq!(
            soft_threshold(&array![0.0, 0.0], 1.0).unwrap(),
            array![0.0, 0.0]
        );
        assert!(soft_threshold(&v, -0.5).is_err());
    }

    #[test]
    fn constant_weights_reduce_to_soft_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = rng.random_range(1..=8);
            let v: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lam = rng.random_range(0.05..2.0);
            let step = rng.random_range(0.1..2.0);
            let r = req(v.clone(), vec![lam; p], step);
            let fast = prox_sorted_l1(&r).unwrap();
            let st = soft_threshold(&Array1::from(v), step * lam).unwrap();
            for j in 0..p {
                assert!((fast[j] - st[j]).abs() < 1e-12, "j={j} {fast:?} vs {st:?}");
            }
        }
    }

    #[test]
    fn zero_point_maps_to_zero() {
        let r = req(vec![0.0, 0.0, 0.0], vec![2.0, 1.0, 0.5], 1.0);
        assert_eq!(prox_sorted_l1(&r).unwrap(), array![0.0, 0.0, 0.0]);
        assert_eq!(prox_oracle(&r).unwrap(), array![0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_shrinkage_case() {
        // v=(1,1), lambda=(1,1), step=1 -> (0,0)
        let r = req(vec![1.0, 1.0], vec![1.0, 1.0], 1.0);
        assert_eq!(prox_oracle(&r).unwrap(), array![0.0, 0.0]);
        assert_eq!(prox_sorted_l1(&r).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn fast_path_matches_oracle_on_spec_instance() {
        let r = req(vec![3.0, 1.0], vec![2.0, 0.5], 1.0);
        let fast = prox_sorted_l1(&r).unwrap();
        let oracle = prox_oracle(&r).unwrap();
        for j in 0..2 {
            assert!((fast[j] - oracle[j]).abs() < 1e-12);
        }
        // fast path objective must be within 1e-9 of the oracle objective
        let fo = r.objective(&fast).unwrap();
        let oo = r.objective(&oracle).unwrap();
        assert!(fo <= oo + 1e-9);
    }

    #[test]
    fn oracle_rejects_large_dimension() {
        let r = req(vec![1.0; 9], vec![1.0; 9], 1.0);
        assert!(prox_oracle(&r).is_err());
    }

    fn random_request(rng: &mut ChaCha8Rng, p: usize) -> ProxRequest {
        let v: Vec<f64> = (0..p).map(|_| rng.random_range(-4.0..4.0)).collect();
        let mut w: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..2.5)).collect();
        w.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if w.iter().all(|x| *x == 0.0) {
            w[0] = 1.0;
        }
        let step = rng.random_range(0.05..2.0);
        req(v, w, step)
    }

    #[test]
    fn fast_path_matches_oracle_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let p = rng.random_range(2..=8);
            let r = random_request(&mut rng, p);
            let fast = prox_sorted_l1(&r).unwrap();
            let oracle = prox_oracle(&r).unwrap();
            let gap = fast
                .iter()
                .zip(oracle.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(gap <= 1e-9, "gap {gap} on {:?}", r.point);
        }
    }

    #[test]
    fn nonexpansive_and_sign_order_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let p = rng.random_range(2..=12);
            let mut w: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..2.0)).collect();
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if w.iter().all(|x| *x == 0.0) {
                w[0] = 1.0;
            }
            let step = rng.random_range(0.1..1.5);
            let v1: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v2: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let r1 = req(v1.clone(), w.clone(), step);
            let r2 = req(v2.clone(), w.clone(), step);
            let p1 = prox_sorted_l1(&r1).unwrap();
            let p2 = prox_sorted_l1(&r2).unwrap();

            let d_in: f64 = v1
                .iter()
                .zip(&v2)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let d_out: f64 = p1
                .iter()
                .zip(p2.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(d_out <= d_in + 1e-10);

            // sign preservation and magnitude-order preservation
            for i in 0..p {
                assert!(p1[i] * v1[i] >= 0.0);
                for j in 0..p {
                    if v1[i].abs() > v1[j].abs() {
                        assert!(
                            p1[i].abs() >= p1[j].abs() - 1e-12,
                            "order violated at ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn step_and_weight_scaling_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = rng.random_range(2..=10);
            let v: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut w: Vec<f64> = (0..p).map(|_| rng.random_range(0.01..2.0)).collect();
            w.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let t = rng.random_range(0.1..3.0);
            let a = prox_sorted_l1(&req(v.clone(), w.clone(), t)).unwrap();
            let scaled: Vec<f64> = w.iter().map(|x| x * t).collect();
            let b = prox_sorted_l1(&req(v, scaled, 1.0)).unwrap();
            for j in 0..p {
                assert!((a[j] - b[j]).abs() < 1e-12);
            }
        }
    }
}
