//! Vector norms, sorted-l1 weights and the scalar formulas shared by the
//! estimators and the experiment harness.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// `4 + sqrt(2)`: the multiplier in the noise-domination functions H and G,
/// and the smallest weight constant with guarantees.
pub fn event_constant() -> f64 {
    4.0 + 2.0_f64.sqrt()
}

/// Default absolute threshold below which a coefficient counts as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;

/// Non-increasing rearrangement of the absolute values of `v`.
///
/// Ties are broken by original index (stable sort); every downstream
/// quantity is invariant under the tie order.
pub fn rearrange_desc(v: &Array1<f64>) -> Array1<f64> {
    let mut abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    abs.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    Array1::from(abs)
}

/// Non-increasing weights `lambda_1 >= ... >= lambda_p >= 0`, not all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    lambdas: Vec<f64>,
}

impl WeightVector {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::invalid("weight vector must be non-empty"));
        }
        if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        if lambdas.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("weights must be non-increasing"));
        }
        if lambdas.iter().all(|l| *l == 0.0) {
            return Err(Error::invalid("weights must not all be zero"));
        }
        Ok(Self { lambdas })
    }

    /// All weights equal to `lambda > 0`.
    pub fn constant(p: usize, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::invalid("constant weight must be positive"));
        }
        Self::new(vec![lambda; p])
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn get(&self, j: usize) -> f64 {
        self.lambdas[j]
    }

    /// `sum_{j<=s} lambda_j^2`.
    pub fn sum_sq_head(&self, s: usize) -> f64 {
        self.lambdas[..s.min(self.len())].iter().map(|l| l * l).sum()
    }

    /// Scales every weight by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::invalid("scale must be positive"));
        }
        Self::new(self.lambdas.iter().map(|l| l * c).collect())
    }
}

/// The sorted-l1 norm `sum_j lambda_j v#_j` where `v#` is the non-increasing
/// rearrangement of `|v|`.
pub fn sorted_l1_norm(v: &Array1<f64>, w: &WeightVector) -> Result<f64> {
    if v.len() != w.len() {
        return Err(Error::dims(format!(
            "vector has length {}, weights have length {}",
            v.len(),
            w.len()
        )));
    }
    let sorted = rearrange_desc(v);
    Ok(sorted
        .iter()
        .zip(w.as_slice())
        .map(|(x, l)| l * x)
        .sum())
}

/// The l_q norm for `q >= 1`, with `q = f64::INFINITY` giving `max_j |v_j|`.
pub fn lq_norm(v: &Array1<f64>, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::invalid(format!("l_q norm requires q >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(v.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    if q == 1.0 {
        return Ok(v.iter().map(|x| x.abs()).sum());
    }
    if q == 2.0 {
        return Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(v.iter()
        .map(|x| x.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 / q))
}

/// Number of entries with `|v_j| > threshold`. Floating-point solutions are
/// never exactly sparse, hence the explicit threshold.
pub fn l0_norm(v: &Array1<f64>, threshold: f64) -> usize {
    v.iter().filter(|x| x.abs() > threshold).count()
}

/// The empirical norm `sqrt((1/n) sum_i u_i^2)`.
pub fn empirical_norm(u: &Array1<f64>) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    (u.iter().map(|x| x * x).sum::<f64>() / u.len() as f64).sqrt()
}

/// The recommended Slope weights `lambda_j = a * sigma * sqrt(log(2p/j)/n)`.
///
/// Warns (does not error) when `a` is at or below `4 + sqrt(2)`, the smallest
/// constant for which the Slope guarantees hold.
pub fn slope_weights(n: usize, p: usize, sigma: f64, a: f64) -> Result<WeightVector> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("slope_weights requires n >= 1 and p >= 1"));
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::invalid("slope_weights requires sigma > 0"));
    }
    if a <= 0.0 || !a.is_finite() {
        return Err(Error::invalid("slope_weights requires a > 0"));
    }
    if a <= event_constant() {
        log::warn!(
            "slope weight constant a = {a} is not above 4 + sqrt(2) ~ {:.6}; \
             the oracle guarantees need a larger constant",
            event_constant()
        );
    }
    let nf = n as f64;
    let lambdas = (1..=p)
        .map(|j| a * sigma * ((2.0 * p as f64 / j as f64).ln() / nf).sqrt())
        .collect();
    WeightVector::new(lambdas)
}

/// The bracket `s log(2p/s) <= sum_{j<=s} log(2p/j) <= s log(2ep/s)`.
///
/// Returns `(lower, mid, upper)`.
pub fn stirling_bracket(s: usize, p: usize) -> Result<(f64, f64, f64)> {
    if s == 0 || s > p {
        return Err(Error::invalid(format!(
            "stirling_bracket requires 1 <= s <= p, got s = {s}, p = {p}"
        )));
    }
    let sf = s as f64;
    let pf = p as f64;
    let lower = sf * (2.0 * pf / sf).ln();
    let mid = (1..=s).map(|j| (2.0 * pf / j as f64).ln()).sum();
    let upper = sf * (2.0 * std::f64::consts::E * pf / sf).ln();
    Ok((lower, mid, upper))
}

/// The noise-domination pair
/// `H(u) = (4+sqrt 2) sum_j u#_j sigma sqrt(log(2p/j)/n)` and
/// `G(u) = (4+sqrt 2) sigma sqrt(log(1/delta0)/n) ||X u||_n`.
pub fn h_g_values(
    u: &Array1<f64>,
    x: &DesignMatrix,
    sigma: f64,
    delta0: f64,
) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&delta0) || delta0 == 0.0 {
        return Err(Error::invalid(format!(
            "delta0 must lie in (0, 1), got {delta0}"
        )));
    }
    if u.len() != x.cols() {
        return Err(Error::dims(format!(
            "u has length {}, design has {} columns",
            u.len(),
            x.cols()
        )));
    }
    let n = x.rows() as f64;
    let p = x.cols() as f64;
    let c = event_constant();
    let sorted = rearrange_desc(u);
    let h = c * sigma
        * sorted
            .iter()
            .enumerate()
            .map(|(i, uj)| uj * ((2.0 * p / (i + 1) as f64).ln() / n).sqrt())
            .sum::<f64>();
    let g = c * sigma * ((1.0 / delta0).ln() / n).sqrt() * x.prediction_norm(u);
    Ok((h, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rearrange_basic() {
        assert_eq!(rearrange_desc(&array![0.0, -2.0, 1.0]), array![2.0, 1.0, 0.0]);
        assert_eq!(rearrange_desc(&array![0.0, 0.0, 0.0]), array![0.0, 0.0, 0.0]);
        assert_eq!(rearrange_desc(&array![3.0, -3.0, 3.0]), array![3.0, 3.0, 3.0]);
    }

    #[test]
    fn sorted_l1_matches_permutation_maximum() {
        // enumerate all 6 permutations of a length-3 vector
        let v = array![0.0, -2.0, 1.0];
        let w = WeightVector::new(vec![3.0, 2.0, 1.0]).unwrap();
        let got = sorted_l1_norm(&v, &w).unwrap();
        assert_eq!(got, 8.0);

        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let best = perms
            .iter()
            .map(|perm| {
                perm.iter()
                    .enumerate()
                    .map(|(j, &i)| w.get(j) * v[i].abs())
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((got - best).abs() < 1e-14);
    }

    #[test]
    fn sorted_l1_zero_and_constant_weights() {
        let w = WeightVector::new(vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(sorted_l1_norm(&array![0.0, 0.0, 0.0], &w).unwrap(), 0.0);

        // constant weights reduce to lambda * ||v||_1
        let v = array![1.5, -2.0, 0.25];
        let lam = 0.7;
        let wc = WeightVector::constant(3, lam).unwrap();
        let l1 = lq_norm(&v, 1.0).unwrap();
        assert!((sorted_l1_norm(&v, &wc).unwrap() - lam * l1).abs() < 1e-14);
    }

    #[test]
    fn sorted_l1_length_mismatch() {
        let w = WeightVector::new(vec![1.0]).unwrap();
        assert!(sorted_l1_norm(&array![1.0, 2.0], &w).is_err());
    }

    #[test]
    fn lq_norms() {
        let v = array![3.0, 4.0];
        assert_eq!(lq_norm(&v, 2.0).unwrap(), 5.0);
        assert_eq!(lq_norm(&v, 1.0).unwrap(), 7.0);
        assert_eq!(lq_norm(&array![3.0, -4.0], f64::INFINITY).unwrap(), 4.0);
        assert!(lq_norm(&v, 0.5).is_err());
    }

    #[test]
    fn l0_thresholding() {
        let v = array![1e-13, -0.5, 0.0, 2e-12];
        assert_eq!(l0_norm(&v, DEFAULT_ZERO_THRESHOLD), 2);
        assert_eq!(l0_norm(&v, 1e-11), 1);
    }

    #[test]
    fn empirical_norm_values() {
        assert_eq!(empirical_norm(&array![1.0, 1.0, 1.0, 1.0]), 1.0);
        assert_eq!(empirical_norm(&array![0.0, 0.0]), 0.0);
        // direct evaluation of the definition: sqrt((4+0)/2) = sqrt 2
        assert!((empirical_norm(&array![2.0, 0.0]) - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn slope_weight_values() {
        let n = 100;
        let p = 10;
        let a = 2.0 * event_constant();
        let w = slope_weights(n, p, 1.0, a).unwrap();
        // last entry: a * sigma * sqrt(log 2 / n)
        let last = a * (2.0_f64.ln() / 100.0).sqrt();
        assert!((w.get(p - 1) - last).abs() < 1e-15);
        // first entry: a * sqrt(log 20 / 100), cross-checked independently
        let first = a * (20.0_f64.ln() / 100.0).sqrt();
        assert!((w.get(0) - first).abs() < 1e-15);
        // non-increasing
        for j in 1..p {
            assert!(w.get(j - 1) >= w.get(j));
        }
    }

    #[test]
    fn slope_weight_invalid_inputs() {
        assert!(slope_weights(0, 5, 1.0, 10.0).is_err());
        assert!(slope_weights(5, 0, 1.0, 10.0).is_err());
        assert!(slope_weights(5, 5, 0.0, 10.0).is_err());
        assert!(slope_weights(5, 5, 1.0, -1.0).is_err());
    }

    #[test]
    fn stirling_bracket_values() {
        let (lo, mid, hi) = stirling_bracket(1, 7).unwrap();
        assert!((lo - 14.0_f64.ln()).abs() < 1e-14);
        assert!((mid - 14.0_f64.ln()).abs() < 1e-14);
        assert!((hi - (14.0 * std::f64::consts::E).ln()).abs() < 1e-14);

        let (lo, mid, hi) = stirling_bracket(2, 2).unwrap();
        assert!((lo - 2.0 * 2.0_f64.ln()).abs() < 1e-14);
        assert!((mid - (4.0_f64.ln() + 2.0_f64.ln())).abs() < 1e-14);
        assert!((hi - 2.0 * (2.0 * std::f64::consts::E).ln()).abs() < 1e-14);
        assert!(lo <= mid && mid <= hi);

        assert!(stirling_bracket(0, 5).is_err());
        assert!(stirling_bracket(6, 5).is_err());
    }

    #[test]
    fn h_g_canonical_cases() {
        use crate::design::DesignMatrix;
        // identity-ish design, n = p = 2, ||X e_j||_n = 1
        let x = DesignMatrix::new(
            ndarray::Array2::from_shape_vec((2, 2), vec![2.0_f64.sqrt(), 0.0, 0.0, 2.0_f64.sqrt()])
                .unwrap(),
        )
        .unwrap();
        let c = event_constant();

        // u = e_1: H = (4+sqrt2) sigma sqrt(log(2p)/n)
        let e1 = array![1.0, 0.0];
        let (h, _) = h_g_values(&e1, &x, 1.0, 0.5).unwrap();
        assert!((h - c * (4.0_f64.ln() / 2.0).sqrt()).abs() < 1e-14);

        // u = 0 -> (0, 0)
        let (h0, g0) = h_g_values(&array![0.0, 0.0], &x, 1.0, 0.5).unwrap();
        assert_eq!((h0, g0), (0.0, 0.0));

        // delta0 = 1/e -> G = (4+sqrt2) sigma ||X u||_n / sqrt(n)
        let u = array![0.5, -1.0];
        let (_, g) = h_g_values(&u, &x, 1.0, (-1.0_f64).exp()).unwrap();
        let expect = c * x.prediction_norm(&u) / 2.0_f64.sqrt();
        assert!((g - expect).abs() < 1e-14);

        assert!(h_g_values(&u, &x, 1.0, 0.0).is_err());
        assert!(h_g_values(&u, &x, 1.0, 1.0).is_err());
    }
}
