use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    /// `t_{(1+level)/2, n-1} · s/√n`.
    #[default]
    StudentT,
    /// `z_{(1+level)/2} · s/√n`.
    Normal,
}

/// `(mean, half_width)` of a two-sided interval around the sample mean. The
/// half-width is 0 for a single value or zero spread.
pub fn confidence_interval(values: &[f64], level: f64, method: CiMethod) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("confidence interval of no values"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok((mean, 0.0));
    }
    let p = 0.5 + level / 2.0;
    let q = match method {
        CiMethod::StudentT => StudentsT::new(0.0, 1.0, n - 1.0)
            .map_err(|e| Error::invalid(e.to_string()))?
            .inverse_cdf(p),
        CiMethod::Normal => Normal::new(0.0, 1.0)
            .map_err(|e| Error::invalid(e.to_string()))?
            .inverse_cdf(p),
    };
    Ok((mean, q * (var / n).sqrt()))
}
