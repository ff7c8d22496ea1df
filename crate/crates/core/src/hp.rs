//! Hodrick–Prescott trend extraction and unemployment-gap construction.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{log_shift, Series};

/// Base smoothing parameter for quarterly data.
pub const QUARTERLY_LAMBDA: f64 = 1600.0;

/// Frequency-adjusted smoothing parameter: `(periods_per_year / 4)^x * 1600`.
pub fn ravn_uhlig_lambda(periods_per_year: u32, exponent: f64) -> Result<f64> {
    if periods_per_year == 0 || !(exponent > 0.0) {
        return Err(Error::Domain(format!(
            "need periods_per_year >= 1 and exponent > 0, got {periods_per_year}, {exponent}"
        )));
    }
    Ok((periods_per_year as f64 / 4.0).powf(exponent) * QUARTERLY_LAMBDA)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpResult {
    pub trend: Vec<f64>,
    pub cycle: Vec<f64>,
    pub lambda: f64,
}

/// Bands of `I + lambda * D'D` where `D` is the (T-2) x T second-difference
/// operator: main diagonal, first and second super-diagonals.
pub(crate) fn penalty_bands(t: usize, lambda: f64) -> [Vec<f64>; 3] {
    let mut d0 = vec![1.0; t];
    let mut d1 = vec![0.0; t.saturating_sub(1)];
    let mut d2 = vec![0.0; t.saturating_sub(2)];
    const C: [f64; 3] = [1.0, -2.0, 1.0];
    for r in 0..t.saturating_sub(2) {
        for a in 0..3 {
            d0[r + a] += lambda * C[a] * C[a];
            if a + 1 < 3 {
                d1[r + a] += lambda * C[a] * C[a + 1];
            }
            if a + 2 < 3 {
                d2[r + a] += lambda * C[a] * C[a + 2];
            }
        }
    }
    [d0, d1, d2]
}

/// `lambda * D'D y`.
fn second_difference_penalty(y: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for (r, w) in y.windows(3).enumerate() {
        let d2 = lambda * (w[0] - 2.0 * w[1] + w[2]);
        out[r] += d2;
        out[r + 1] -= 2.0 * d2;
        out[r + 2] += d2;
    }
    out
}

/// Solves the symmetric positive definite pentadiagonal system by banded
/// Cholesky factorization.
fn solve_pentadiagonal(bands: &[Vec<f64>; 3], rhs: &[f64]) -> Vec<f64> {
    let [d0, d1, d2] = bands;
    let n = rhs.len();
    let mut l0 = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for i in 0..n {
        if i >= 2 {
            l2[i] = d2[i - 2] / l0[i - 2];
        }
        if i >= 1 {
            let cross = if i >= 2 { l2[i] * l1[i - 1] } else { 0.0 };
            l1[i] = (d1[i - 1] - cross) / l0[i - 1];
        }
        l0[i] = (d0[i] - l1[i] * l1[i] - l2[i] * l2[i]).sqrt();
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        if i >= 1 {
            s -= l1[i] * z[i - 1];
        }
        if i >= 2 {
            s -= l2[i] * z[i - 2];
        }
        z[i] = s / l0[i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        if i + 1 < n {
            s -= l1[i + 1] * x[i + 1];
        }
        if i + 2 < n {
            s -= l2[i + 2] * x[i + 2];
        }
        x[i] = s / l0[i];
    }
    x
}

/// HP trend of a hole-free series: solves `(I + lambda D'D) trend = y`.
///
/// The system is solved for the cycle, `(I + lambda D'D) cycle = lambda D'D y`,
/// and the trend recovered as `y - cycle`; affine inputs then give an exactly
/// zero right-hand side.
pub fn hp_filter(series: &[f64], lambda: f64) -> Result<HpResult> {
    if series.len() < 4 {
        return Err(Error::Length {
            required: 4,
            actual: series.len(),
        });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "smoothing parameter must be positive, got {lambda}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("HP filter input must be finite".into()));
    }
    let rhs = second_difference_penalty(series, lambda);
    let cycle = solve_pentadiagonal(&penalty_bands(series.len(), lambda), &rhs);
    let trend = series.iter().zip(&cycle).map(|(y, c)| y - c).collect();
    Ok(HpResult {
        trend,
        cycle,
        lambda,
    })
}

/// Range between the first and last observed value. Interior holes are an
/// error; an all-hole series has no span.
pub fn observed_span(series: &[Option<f64>]) -> Result<Option<Range<usize>>> {
    let Some(first) = series.iter().position(Option::is_some) else {
        return Ok(None);
    };
    let last = series
        .iter()
        .rposition(Option::is_some)
        .expect("has a value");
    if series[first..=last].iter().any(Option::is_none) {
        return Err(Error::Domain(format!(
            "series has a hole inside its observed span {first}..={last}"
        )));
    }
    Ok(Some(first..last + 1))
}

/// HP trend over the observed span of a series with holes; positions outside
/// the span stay holes.
pub fn hp_trend(series: &[Option<f64>], lambda: f64) -> Result<Series> {
    let mut out = vec![None; series.len()];
    if let Some(span) = observed_span(series)? {
        let values: Vec<f64> = series[span.clone()]
            .iter()
            .map(|v| v.expect("in span"))
            .collect();
        let hp = hp_filter(&values, lambda)?;
        for (slot, t) in out[span].iter_mut().zip(hp.trend) {
            *slot = Some(t);
        }
    }
    Ok(out)
}

/// `ln(u + c) - HP trend of ln(u + c)`, i.e. the log gap to the NAIRU.
pub fn unemployment_gap(u: &[Option<f64>], lambda: f64, shift: f64) -> Result<Series> {
    let logged = u
        .iter()
        .map(|v| v.map(|x| log_shift(x, shift)).transpose())
        .collect::<Result<Series>>()?;
    let trend = hp_trend(&logged, lambda)?;
    Ok(logged
        .iter()
        .zip(&trend)
        .map(|(l, t)| Some((*l)? - (*t)?))
        .collect())
}

/// Which series the NAIRU trend is extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NairuSource {
    /// HP trend of log unemployment.
    #[default]
    Unemployment,
    /// HP trend of the inflation series, subtracted from log unemployment.
    Inflation,
}

/// Gap of log unemployment against the HP trend of `inflation`.
pub fn gap_against_inflation_trend(
    u: &[Option<f64>],
    inflation: &[Option<f64>],
    lambda: f64,
    shift: f64,
) -> Result<Series> {
    let trend = hp_trend(inflation, lambda)?;
    u.iter()
        .zip(&trend)
        .map(|(u, t)| match (u, t) {
            (Some(u), Some(t)) => Ok(Some(log_shift(*u, shift)? - t)),
            _ => Ok(None),
        })
        .collect()
}
