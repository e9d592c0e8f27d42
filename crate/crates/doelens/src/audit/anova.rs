//! One-way ANOVA over a loss table grouped by one factor's levels.

use serde::{Deserialize, Serialize};

use super::fdist::f_sf;
use super::LossTable;
use crate::error::{DoeError, Result};
use crate::util::float_maybe_inf;

/// Result of a single factor's variance decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    #[serde(with = "float_maybe_inf")]
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_raw: f64,
    /// Set when within-group variance is exactly zero (F pinned to +inf).
    pub degenerate: bool,
}

/// F = MS_between / MS_within for the grouping induced by `factor_index`.
pub fn anova_one_way(table: &LossTable, factor_index: usize) -> Result<AnovaResult> {
    let spec = table.space().factor(factor_index)?;
    let levels = spec.level_count;

    let mut count = vec![0usize; levels];
    let mut sum = vec![0f64; levels];
    for (loss, setting) in table.rows() {
        let level = setting.level(factor_index);
        count[level] += 1;
        sum[level] += loss;
    }

    let group_count = count.iter().filter(|&&c| c > 0).count();
    if group_count < 2 {
        return Err(DoeError::InsufficientData(format!(
            "factor '{}' has {} observed level(s); ANOVA needs at least 2",
            spec.name, group_count
        )));
    }
    let n = table.len();
    let df_between = group_count - 1;
    let df_within = n - group_count;
    if df_within < 2 {
        return Err(DoeError::InsufficientData(format!(
            "factor '{}' leaves only {} within-group degrees of freedom",
            spec.name, df_within
        )));
    }

    let mean: Vec<f64> = count
        .iter()
        .zip(&sum)
        .map(|(&c, &s)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let grand_mean = sum.iter().sum::<f64>() / n as f64;

    let ss_between: f64 = count
        .iter()
        .zip(&mean)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &m)| c as f64 * (m - grand_mean).powi(2))
        .sum();
    let ss_within: f64 = table
        .rows()
        .map(|(loss, setting)| {
            let d = loss - mean[setting.level(factor_index)];
            d * d
        })
        .sum();

    if ss_between == 0.0 {
        return Ok(AnovaResult {
            f: 0.0,
            df_between,
            df_within,
            p_raw: 1.0,
            degenerate: false,
        });
    }
    if ss_within == 0.0 {
        return Ok(AnovaResult {
            f: f64::INFINITY,
            df_between,
            df_within,
            p_raw: 0.0,
            degenerate: true,
        });
    }

    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let p_raw = f_sf(f, df_between, df_within)?;
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p_raw,
        degenerate: false,
    })
}
