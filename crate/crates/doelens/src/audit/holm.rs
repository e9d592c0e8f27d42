//! Holm–Bonferroni step-down correction for a family of hypothesis tests.

use crate::error::{DoeError, Result};

/// Sequentially rejects sorted p-values while `p_(i) <= alpha / (k - i + 1)`
/// (1-based rank), stopping at the first failure. Flags are returned in the
/// input order.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DoeError::InvalidConfig(format!(
            "alpha must lie in [0,1], got {alpha}"
        )));
    }
    for &p in p_values {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(DoeError::NonFinite(format!("p-value {p}")));
        }
    }
    let k = p_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        p_values[a]
            .partial_cmp(&p_values[b])
            .expect("p-values are finite")
            .then(a.cmp(&b))
    });

    let mut flags = vec![false; k];
    for (rank, &idx) in order.iter().enumerate() {
        let threshold = alpha / (k - rank) as f64;
        if p_values[idx] <= threshold {
            flags[idx] = true;
        } else {
            break;
        }
    }
    Ok(flags)
}

/// The stepped thresholds `alpha / (k - i + 1)` in ascending-p order.
pub fn holm_thresholds(k: usize, alpha: f64) -> Vec<f64> {
    (0..k).map(|rank| alpha / (k - rank) as f64).collect()
}
