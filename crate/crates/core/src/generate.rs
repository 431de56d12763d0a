//! Seeded generators for designs, noise, sparse coefficient vectors and the
//! packing sets used by the lower-bound simulation.
//!
//! All generators are pure functions of `(spec, seed)`. Randomness comes
//! from the counter-based ChaCha generator: the 64-bit seed selects the key
//! and each purpose owns a fixed stream id into which the replicate index is
//! XORed (`stream = PURPOSE << 32 ^ replicate`), so parallel replicates
//! reproduce regardless of scheduling.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{sqrt_psd, thin_q};

/// Purpose tags for RNG streams.
pub mod stream {
    pub const DESIGN: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const BETA: u64 = 3;
    pub const PACKING: u64 = 4;
    pub const SEARCH: u64 = 5;
    pub const DIRECTIONS: u64 = 6;
}

/// Deterministic generator for `(seed, purpose, replicate)`.
pub fn stream_rng(seed: u64, purpose: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) ^ replicate);
    rng
}

/// Design-matrix families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignKind {
    GaussianIsotropic,
    /// Rows `Sigma^{1/2} z` with `z` standard normal.
    GaussianAnisotropic { sigma_rows: Vec<Vec<f64>> },
    Rademacher,
    CauchyRows,
    /// `sqrt(n) Q` with orthonormal columns; requires `n >= p`.
    Orthonormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// Verify `max_j ||X e_j||_n <= 1` and warn when it fails.
    #[default]
    Check,
    /// Divide each column by `max(1, ||X e_j||_n)`.
    Rescale,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(flatten)]
    pub kind: DesignKind,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub normalize: NormalizeMode,
}

impl DesignSpec {
    pub fn new(kind: DesignKind, n: usize, p: usize) -> Self {
        Self {
            kind,
            n,
            p,
            normalize: NormalizeMode::Check,
        }
    }

    pub fn with_normalize(mut self, mode: NormalizeMode) -> Self {
        self.normalize = mode;
        self
    }
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

/// Draws a design matrix; deterministic given `(spec, seed)`.
pub fn generate_design(spec: &DesignSpec, seed: u64) -> Result<DesignMatrix> {
    generate_design_replicate(spec, seed, 0)
}

/// Replicate-indexed variant used by the experiment harness.
pub fn generate_design_replicate(
    spec: &DesignSpec,
    seed: u64,
    replicate: u64,
) -> Result<DesignMatrix> {
    if spec.n == 0 || spec.p == 0 {
        return Err(Error::invalid("design requires n >= 1 and p >= 1"));
    }
    let mut rng = stream_rng(seed, stream::DESIGN, replicate);
    let data = match &spec.kind {
        DesignKind::GaussianIsotropic => standard_normal_matrix(&mut rng, spec.n, spec.p),
        DesignKind::GaussianAnisotropic { sigma_rows } => {
            let sigma = covariance_from_rows(sigma_rows, spec.p)?;
            let root = sqrt_psd(&sigma, 1e-10)?;
            let z = standard_normal_matrix(&mut rng, spec.n, spec.p);
            // each row is root * z_row
            z.dot(&root.t())
        }
        DesignKind::Rademacher => Array2::from_shape_fn((spec.n, spec.p), |_| {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }),
        DesignKind::CauchyRows => {
            let cauchy = Cauchy::new(0.0, 1.0).expect("valid cauchy");
            Array2::from_shape_fn((spec.n, spec.p), |_| rng.sample(cauchy))
        }
        DesignKind::Orthonormal => {
            if spec.n < spec.p {
                return Err(Error::invalid(format!(
                    "orthonormal design requires n >= p, got n = {}, p = {}",
                    spec.n, spec.p
                )));
            }
            let g = standard_normal_matrix(&mut rng, spec.n, spec.p);
            let q = thin_q(&g)?;
            q.mapv(|v| v * (spec.n as f64).sqrt())
        }
    };
    let mut x = DesignMatrix::new(data)?;
    match spec.normalize {
        NormalizeMode::Rescale => x.rescale_columns(),
        NormalizeMode::Check => {
            if !x.is_normalized() {
                log::warn!(
                    "generated design violates the column normalization: max ||X e_j||_n = {:.6}",
                    x.max_column_norm()
                );
            }
        }
        NormalizeMode::None => {}
    }
    Ok(x)
}

fn covariance_from_rows(rows: &[Vec<f64>], p: usize) -> Result<Array2<f64>> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(Error::dims("covariance matrix must be p x p"));
    }
    Ok(Array2::from_shape_fn((p, p), |(i, j)| rows[i][j]))
}

/// Noise families. Every kind satisfies `E exp(xi^2/sigma^2) <= e`:
/// the scaled Rademacher meets the bound with equality, the bounded kind
/// (uniform on `[-sigma, sigma]`) with slack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Gaussian,
    RademacherScaled,
    BoundedSubgaussian,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::invalid("noise scale sigma must be positive"));
        }
        Ok(Self { kind, sigma })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian, sigma)
    }
}

/// Draws a noise vector; deterministic given `(model, n, seed, replicate)`.
pub fn generate_noise(model: &NoiseModel, n: usize, seed: u64, replicate: u64) -> Array1<f64> {
    let mut rng = stream_rng(seed, stream::NOISE, replicate);
    match model.kind {
        NoiseKind::Gaussian => Array1::from_shape_fn(n, |_| {
            let z: f64 = rng.sample(StandardNormal);
            model.sigma * z
        }),
        NoiseKind::RademacherScaled => Array1::from_shape_fn(n, |_| {
            if rng.random::<bool>() {
                model.sigma
            } else {
                -model.sigma
            }
        }),
        NoiseKind::BoundedSubgaussian => {
            Array1::from_shape_fn(n, |_| rng.random_range(-model.sigma..=model.sigma))
        }
    }
}

/// Uniformly random support of size `s`, entries `+-amplitude`.
pub fn generate_sparse_beta(
    p: usize,
    s: usize,
    amplitude: f64,
    seed: u64,
    replicate: u64,
) -> Result<Array1<f64>> {
    if s == 0 || s > p {
        return Err(Error::invalid(format!(
            "sparse beta requires 1 <= s <= p, got s = {s}, p = {p}"
        )));
    }
    if amplitude == 0.0 {
        log::warn!("sparse beta with amplitude 0 is degenerate (zero vector)");
    }
    let mut rng = stream_rng(seed, stream::BETA, replicate);
    let support = rand::seq::index::sample(&mut rng, p, s);
    let mut beta = Array1::zeros(p);
    for idx in support.iter() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        beta[idx] = sign * amplitude;
    }
    Ok(beta)
}

/// A set of s-sparse sign vectors pairwise separated in l_q:
/// `||w - w'||_q >= (s/4)^{1/q}` for every distinct pair (threshold 1 for
/// `q = infinity`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingSet {
    pub elements: Vec<Vec<f64>>,
    pub s: usize,
    pub q: f64,
    /// Whether the requested target size was reached.
    pub complete: bool,
}

impl PackingSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element_array(&self, i: usize) -> Array1<f64> {
        Array1::from(self.elements[i].clone())
    }

    /// Exact verification of every invariant: entries in {-1, 0, 1},
    /// support size s, and the pairwise l_q separation.
    pub fn verify(&self) -> Result<()> {
        for (i, w) in self.elements.iter().enumerate() {
            let nonzero = w.iter().filter(|v| **v != 0.0).count();
            if nonzero != self.s {
                return Err(Error::invalid(format!(
                    "packing element {i} has {nonzero} nonzeros, expected {}",
                    self.s
                )));
            }
            if w.iter().any(|v| *v != 0.0 && v.abs() != 1.0) {
                return Err(Error::invalid(format!(
                    "packing element {i} has an entry outside {{-1, 0, 1}}"
                )));
            }
        }
        for i in 0..self.elements.len() {
            for j in (i + 1)..self.elements.len() {
                if !pair_separated(&self.elements[i], &self.elements[j], self.s, self.q) {
                    return Err(Error::invalid(format!(
                        "packing elements {i} and {j} are too close in l_{}",
                        self.q
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `||w - w'||_q >= (s/4)^{1/q}`, decided with integer difference counts so
/// the check is exact. Differences take values in {0, 1, 2}; the criterion
/// `sum |d|^q >= s/4` becomes `4 (c1 + c2 2^q) >= s`.
fn pair_separated(a: &[f64], b: &[f64], s: usize, q: f64) -> bool {
    let mut c1 = 0u64; // |difference| == 1
    let mut c2 = 0u64; // |difference| == 2
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        if d == 1.0 {
            c1 += 1;
        } else if d == 2.0 {
            c2 += 1;
        }
    }
    if q.is_infinite() {
        return c1 + c2 > 0;
    }
    4.0 * (c1 as f64 + c2 as f64 * 2f64.powf(q)) >= s as f64
}

pub const DEFAULT_PACKING_ATTEMPTS: usize = 200_000;

/// Rejection-samples a packing set. Returns a partial set (flagged) when the
/// attempt budget runs out before `target_size` is reached.
pub fn generate_packing(
    p: usize,
    s: usize,
    q: f64,
    target_size: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<PackingSet> {
    if p < 2 || s == 0 || 2 * s > p {
        return Err(Error::invalid(format!(
            "packing requires p >= 2 and 1 <= s <= p/2, got s = {s}, p = {p}"
        )));
    }
    if q.is_nan() || q < 1.0 {
        return Err(Error::invalid("packing requires q >= 1"));
    }
    if target_size == 0 || max_attempts == 0 {
        return Err(Error::invalid(
            "packing requires a positive target size and attempt budget",
        ));
    }
    let mut rng = stream_rng(seed, stream::PACKING, 0);
    let mut elements: Vec<Vec<f64>> = Vec::new();
    for _ in 0..max_attempts {
        if elements.len() >= target_size {
            break;
        }
        let mut cand = vec![0.0; p];
        for idx in rand::seq::index::sample(&mut rng, p, s).iter() {
            cand[idx] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        if elements.iter().all(|e| pair_separated(e, &cand, s, q)) {
            elements.push(cand);
        }
    }
    let complete = elements.len() >= target_size;
    let set = PackingSet {
        elements,
        s,
        q,
        complete,
    };
    set.verify()?;
    Ok(set)
}
