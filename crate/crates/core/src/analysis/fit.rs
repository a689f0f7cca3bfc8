use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Ordinary least-squares fit of a line, reported in the caller's terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitResult {
    /// Ratio for geometric fits, slope for log-log fits.
    pub rate: f64,
    /// Prefactor for geometric fits, intercept for log-log fits.
    pub offset: f64,
    pub r_squared: f64,
    pub residual_norm: f64,
    pub samples: usize,
    /// Levels left out because they were unusable.
    pub discarded: Vec<i64>,
    /// Signs neither constant nor alternating.
    pub low_confidence: bool,
}

/// Returns `(slope, intercept, r_squared, residual_norm)`.
pub fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    };
    (slope, intercept, r2, ss_res.sqrt())
}

/// Fits `value_N = prefactor * ratio^N` by least squares on `log|value|`;
/// the sign of the ratio comes from the sign pattern.
pub fn fit_geometric(values: &[(i64, f64)]) -> Result<FitResult, AnalysisError> {
    if values.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: values.len(),
        });
    }
    if let Some((level, _)) = values.iter().find(|(_, v)| *v == 0.0 || !v.is_finite()) {
        return Err(AnalysisError::BadValue(*level));
    }
    let x: Vec<f64> = values.iter().map(|(l, _)| *l as f64).collect();
    let y: Vec<f64> = values.iter().map(|(_, v)| v.abs().ln()).collect();
    let (slope, intercept, r2, resid) = least_squares_line(&x, &y);

    let same_sign = values.iter().all(|(_, v)| v.signum() == values[0].1.signum());
    let parity_sign = |(l, v): &(i64, f64)| v.signum() * if l.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let alternating = values.iter().all(|p| parity_sign(p) == parity_sign(&values[0]));
    let (ratio_sign, low_confidence) = if same_sign {
        (1.0, false)
    } else if alternating {
        (-1.0, false)
    } else {
        let flips = values
            .windows(2)
            .filter(|w| w[0].1.signum() != w[1].1.signum())
            .count();
        (if 2 * flips > values.len() - 1 { -1.0 } else { 1.0 }, true)
    };
    let ratio = ratio_sign * slope.exp();
    let prefactor_sign = if ratio_sign > 0.0 {
        values[0].1.signum()
    } else {
        parity_sign(&values[0])
    };
    Ok(FitResult {
        rate: ratio,
        offset: prefactor_sign * intercept.exp(),
        r_squared: r2,
        residual_norm: resid,
        samples: values.len(),
        discarded: Vec::new(),
        low_confidence,
    })
}

/// Linear fit of `log log(norm / 3 eps)` against the level; levels whose
/// norm does not exceed `3 eps` are discarded.
pub fn fit_double_exponential(norms: &[(i64, f64)], eps: f64) -> Result<FitResult, AnalysisError> {
    if !(eps > 0.0) {
        return Err(AnalysisError::Degenerate(format!("eps must be positive, got {eps}")));
    }
    let floor = 3.0 * eps;
    let (usable, discarded): (Vec<_>, Vec<_>) = norms
        .iter()
        .partition(|(_, v)| v.is_finite() && *v > floor && (v / floor).ln() > 0.0);
    if usable.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: usable.len(),
        });
    }
    let x: Vec<f64> = usable.iter().map(|(l, _)| *l as f64).collect();
    let y: Vec<f64> = usable.iter().map(|(_, v)| (v / floor).ln().ln()).collect();
    let (slope, intercept, r2, resid) = least_squares_line(&x, &y);
    Ok(FitResult {
        rate: slope,
        offset: intercept,
        r_squared: r2,
        residual_norm: resid,
        samples: usable.len(),
        discarded: discarded.iter().map(|(l, _)| *l).collect(),
        low_confidence: false,
    })
}
