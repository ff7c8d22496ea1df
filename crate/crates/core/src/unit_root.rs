//! Augmented Dickey–Fuller and Phillips–Perron tests, intercept case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::stats::{normal_cdf, normal_quantile};

/// Default ADF lag ceiling.
pub const DEFAULT_MAX_LAG: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitRootKind {
    Adf,
    Pp,
}

/// Deterministic terms in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deterministic {
    #[default]
    Intercept,
    Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub kind: UnitRootKind,
    pub statistic: f64,
    /// Selected lag (ADF) or Newey–West bandwidth (PP).
    pub lag: usize,
    pub n_obs: usize,
    pub p_value: f64,
    pub case: Deterministic,
}

/// Schwarz criterion `ln(rss/n) + k ln(n) / n`.
pub fn sic(rss: f64, n: usize, k: usize) -> Result<f64> {
    if !(rss > 0.0) {
        return Err(Error::Domain(format!("SIC needs rss > 0, got {rss}")));
    }
    if n <= k {
        return Err(Error::Domain(format!("SIC needs n > k, got n={n}, k={k}")));
    }
    let n = n as f64;
    Ok((rss / n).ln() + k as f64 * n.ln() / n)
}

struct DfFit {
    t_stat: f64,
    se_gamma: f64,
    rss: f64,
    n: usize,
    k: usize,
    residuals: DVector<f64>,
}

/// `dy_i = a + g y_i + sum_{j=1..lag} phi_j dy_{i-j}` for `i` in `start..T-1`,
/// with `dy_i = y_{i+1} - y_i`.
fn df_regression(y: &[f64], lag: usize, start: usize) -> Result<DfFit> {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let n = dy.len() - start;
    let k = lag + 2;
    let x = DMatrix::from_fn(n, k, |r, c| {
        let i = start + r;
        match c {
            0 => 1.0,
            1 => y[i],
            j => dy[i - (j - 1)],
        }
    });
    let rhs = DVector::from_iterator(n, dy[start..].iter().copied());
    let mut names = vec!["const".to_string(), "y_lag".to_string()];
    names.extend((1..=lag).map(|j| format!("dy_lag{j}")));
    let ls = least_squares(&x, &rhs, &names)?;
    let s2 = ls.rss / (n - k) as f64;
    let se_gamma = (s2 * ls.xtx_inv[(1, 1)]).sqrt();
    Ok(DfFit {
        t_stat: ls.beta[1] / se_gamma,
        se_gamma,
        rss: ls.rss,
        n,
        k,
        residuals: ls.residuals,
    })
}

fn check_case(case: Deterministic) -> Result<()> {
    match case {
        Deterministic::Intercept => Ok(()),
        Deterministic::Trend => Err(Error::Usage(
            "only the intercept deterministic case is supported".into(),
        )),
    }
}

/// ADF test with SIC lag selection over `0..=max_lag`.
///
/// Candidate lags are compared on the sample trimmed for the largest
/// candidate; the chosen lag is then re-fit on its longest sample.
pub fn adf_test(series: &[f64], max_lag: usize) -> Result<UnitRootResult> {
    adf_test_with(series, max_lag, Deterministic::Intercept)
}

pub fn adf_test_with(
    series: &[f64],
    max_lag: usize,
    case: Deterministic,
) -> Result<UnitRootResult> {
    check_case(case)?;
    let t = series.len();
    let required = (max_lag + 3).max(4);
    if t < required {
        return Err(Error::Length {
            required,
            actual: t,
        });
    }
    // Largest lag whose common-sample regression keeps a residual degree of freedom.
    let feasible = (t - 4) / 2;
    let max_lag = if max_lag > feasible {
        log::debug!("ADF lag ceiling {max_lag} reduced to {feasible} for T={t}");
        feasible
    } else {
        max_lag
    };

    let mut best: Option<(usize, f64)> = None;
    for lag in 0..=max_lag {
        let fit = df_regression(series, lag, max_lag)?;
        if fit.rss <= 0.0 {
            return Err(Error::Degenerate("ADF regression fits exactly".into()));
        }
        let crit = sic(fit.rss, fit.n, fit.k)?;
        if best.is_none_or(|(_, b)| crit < b) {
            best = Some((lag, crit));
        }
    }
    let (lag, _) = best.expect("at least lag 0");
    let fit = df_regression(series, lag, lag)?;
    Ok(UnitRootResult {
        kind: UnitRootKind::Adf,
        statistic: fit.t_stat,
        lag,
        n_obs: fit.n,
        p_value: df_pvalue(fit.t_stat, fit.n),
        case,
    })
}

/// Newey–West automatic bandwidth for the Bartlett kernel: `floor(4 (T/100)^(2/9))`.
pub fn nw_bandwidth(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett-weighted long-run variance with `1/N` autocovariances.
pub fn bartlett_lrv(residuals: &[f64], bandwidth: usize) -> Result<f64> {
    let n = residuals.len();
    if bandwidth >= n {
        return Err(Error::Domain(format!(
            "bandwidth {bandwidth} must be below the sample size {n}"
        )));
    }
    let autocov = |j: usize| -> f64 {
        residuals[j..]
            .iter()
            .zip(residuals)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let mut lrv = autocov(0);
    for j in 1..=bandwidth {
        lrv += 2.0 * bartlett_weight(j, bandwidth) * autocov(j);
    }
    Ok(lrv)
}

/// `1 - j / (B + 1)`, zero beyond the bandwidth.
pub fn bartlett_weight(j: usize, bandwidth: usize) -> f64 {
    if j > bandwidth {
        0.0
    } else {
        1.0 - j as f64 / (bandwidth as f64 + 1.0)
    }
}

/// Phillips–Perron `Z_t` test with the Newey–West automatic bandwidth.
pub fn pp_test(series: &[f64]) -> Result<UnitRootResult> {
    pp_test_with(series, None, Deterministic::Intercept)
}

/// Phillips–Perron test; `bandwidth` overrides the automatic choice.
pub fn pp_test_with(
    series: &[f64],
    bandwidth: Option<usize>,
    case: Deterministic,
) -> Result<UnitRootResult> {
    check_case(case)?;
    if series.len() < 10 {
        return Err(Error::Length {
            required: 10,
            actual: series.len(),
        });
    }
    let fit = df_regression(series, 0, 0)?;
    let n = fit.n;
    let b = bandwidth.unwrap_or_else(|| nw_bandwidth(n));
    let e: Vec<f64> = fit.residuals.iter().copied().collect();
    let gamma0 = e.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let lrv = bartlett_lrv(&e, b)?;
    if !(lrv > 0.0) || !(gamma0 > 0.0) {
        return Err(Error::Degenerate(
            "non-positive residual variance in PP test".into(),
        ));
    }
    let s = (fit.rss / (n - fit.k) as f64).sqrt();
    let lambda = lrv.sqrt();
    let z = (gamma0 / lrv).sqrt() * fit.t_stat
        - (lrv - gamma0) * n as f64 * fit.se_gamma / (2.0 * lambda * s);
    Ok(UnitRootResult {
        kind: UnitRootKind::Pp,
        statistic: z,
        lag: b,
        n_obs: n,
        p_value: df_pvalue(z, n),
        case,
    })
}

/// Probability points of the quantile table.
const DF_PROBS: [f64; 10] = [0.01, 0.025, 0.05, 0.10, 0.25, 0.50, 0.90, 0.95, 0.975, 0.99];

/// Sample sizes of the table rows; the last row is the asymptotic one.
const DF_SIZES: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, f64::INFINITY];

/// Dickey–Fuller t-statistic quantiles, intercept case.
///
/// The 0.01..0.10 and 0.90..0.99 columns are Fuller's tabulated values; the
/// 0.25 and 0.50 columns were simulated (2e6 replications for N <= 100,
/// 1e6 for 250 and 500).
#[allow(clippy::approx_constant)]
const DF_QUANTILES: [[f64; 10]; 6] = [
    [
        -3.75, -3.33, -3.00, -2.63, -2.091, -1.534, -0.37, 0.00, 0.34, 0.72,
    ],
    [
        -3.58, -3.22, -2.93, -2.60, -2.089, -1.551, -0.40, -0.03, 0.29, 0.66,
    ],
    [
        -3.51, -3.17, -2.89, -2.58, -2.088, -1.558, -0.42, -0.05, 0.26, 0.63,
    ],
    [
        -3.46, -3.14, -2.88, -2.57, -2.086, -1.563, -0.42, -0.06, 0.24, 0.62,
    ],
    [
        -3.44, -3.13, -2.87, -2.57, -2.087, -1.565, -0.43, -0.07, 0.24, 0.61,
    ],
    [
        -3.43, -3.12, -2.86, -2.57, -2.087, -1.570, -0.44, -0.07, 0.23, 0.60,
    ],
];

const P_FLOOR: f64 = 0.0001;
const P_CEIL: f64 = 0.9999;

/// Quantiles for sample size `n`, linear in `1/n` between table rows.
fn quantiles_for(n: usize) -> [f64; 10] {
    let inv = 1.0 / (n.max(1) as f64);
    let inv_sizes: Vec<f64> = DF_SIZES.iter().map(|s| 1.0 / s).collect();
    if inv >= inv_sizes[0] {
        return DF_QUANTILES[0];
    }
    let row = inv_sizes
        .windows(2)
        .position(|w| inv <= w[0] && inv >= w[1])
        .expect("1/n lies inside the table");
    let (hi, lo) = (inv_sizes[row], inv_sizes[row + 1]);
    let w = (inv - lo) / (hi - lo);
    let mut out = [0.0; 10];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = w * DF_QUANTILES[row][i] + (1.0 - w) * DF_QUANTILES[row + 1][i];
    }
    out
}

/// Fritsch–Carlson slopes for a monotone cubic Hermite interpolant.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d
}

fn pchip_eval(x: &[f64], y: &[f64], d: &[f64], at: f64) -> f64 {
    let n = x.len();
    if at <= x[0] {
        return y[0] + (at - x[0]) * (y[1] - y[0]) / (x[1] - x[0]);
    }
    if at >= x[n - 1] {
        return y[n - 1] + (at - x[n - 1]) * (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    }
    let i = x.windows(2).position(|w| at <= w[1]).expect("inside range");
    let h = x[i + 1] - x[i];
    let s = (at - x[i]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
}

/// Left-tail p-value of a Dickey–Fuller t statistic (intercept case) for
/// effective sample size `n`.
///
/// Interpolation runs through the tabulated quantiles in normal-score space
/// so that the tails extrapolate smoothly; results are clamped to
/// `[0.0001, 0.9999]`.
pub fn df_pvalue(statistic: f64, n: usize) -> f64 {
    if statistic.is_nan() {
        return f64::NAN;
    }
    let q = quantiles_for(n);
    let z: Vec<f64> = DF_PROBS.iter().map(|p| normal_quantile(*p)).collect();
    let d = pchip_slopes(&q, &z);
    let score = pchip_eval(&q, &z, &d, statistic);
    normal_cdf(score).clamp(P_FLOOR, P_CEIL)
}
