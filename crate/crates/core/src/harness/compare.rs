//! Formula-level comparison of the two universal-parameter oracle bounds:
//! the confidence-tied remainder versus the confidence-free one with its
//! additive 2.8 term, both evaluated at `delta = p^{-s}` where the tied
//! variant degrades to an `s^2 log(p)/n` rate.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct UniversalComparison {
    pub s: usize,
    /// Remainder with the tuning parameter tied to `delta = p^{-s}`.
    pub tied_remainder: f64,
    /// Remainder of the confidence-free tuning at the same `delta`.
    pub free_remainder: f64,
}

/// Evaluates both remainders over a sparsity grid for a design with RE
/// constant `kappa`. Pure arithmetic, no simulation.
pub fn universal_bound_comparison(
    n: usize,
    p: usize,
    s_values: &[usize],
    sigma: f64,
    eps: f64,
    kappa: f64,
) -> Result<Vec<UniversalComparison>> {
    if p < 4 {
        return Err(Error::invalid("comparison requires p >= 4"));
    }
    if kappa <= 0.0 || eps <= 0.0 {
        return Err(Error::invalid("need kappa > 0 and eps > 0"));
    }
    let nf = n as f64;
    let logp = (p as f64).ln();
    Ok(s_values
        .iter()
        .map(|&s| {
            let sf = s as f64;
            let log_inv_delta = sf * logp; // delta = p^{-s}
            // tied: lambda carries log(p/delta) = (1+s) log p
            let tied = sigma * sigma / nf
                * ((1.0 + eps) * (2.0 * sf * (1.0 + sf) * logp).sqrt() / kappa
                    + sf.sqrt()
                    + (2.0 * log_inv_delta).sqrt())
                .powi(2);
            // free: lambda carries log p only, at the price of +2.8
            let free = sigma * sigma / nf
                * ((1.0 + eps) * (2.0 * sf * logp).sqrt() / kappa
                    + sf.sqrt()
                    + (2.0 * log_inv_delta).sqrt()
                    + 2.8)
                .powi(2);
            UniversalComparison {
                s,
                tied_remainder: tied,
                free_remainder: free,
            }
        })
        .collect())
}
