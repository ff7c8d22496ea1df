#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use panelcurve::design::{Effects, Interaction, ModelSpec};
use panelcurve::panel::{Grid, PanelDataset, Quarter};
use panelcurve::transform::SeriesRef;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/panel_seed42.csv")
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_seed42.txt")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Trend from a dense solve of `(I + lambda D'D) trend = y`.
pub fn dense_hp_trend(y: &[f64], lambda: f64) -> Vec<f64> {
    let t = y.len();
    let mut d = DMatrix::zeros(t - 2, t);
    for r in 0..t - 2 {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    let a = DMatrix::identity(t, t) + d.transpose() * &d * lambda;
    let trend = a
        .lu()
        .solve(&DVector::from_column_slice(y))
        .expect("nonsingular");
    trend.iter().copied().collect()
}

/// OLS through the normal equations and a Cholesky solve.
pub fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    xtx.cholesky().expect("positive definite").solve(&xty)
}

/// Slopes of OLS on the slope columns plus one dummy per entity, no intercept.
pub fn lsdv_slopes(
    slopes: &DMatrix<f64>,
    y: &DVector<f64>,
    entity: &[usize],
    n_entities: usize,
) -> Vec<f64> {
    let (n, k) = slopes.shape();
    let x = DMatrix::from_fn(n, k + n_entities, |r, c| {
        if c < k {
            slopes[(r, c)]
        } else if entity[r] == c - k {
            1.0
        } else {
            0.0
        }
    });
    normal_equations(&x, y).rows(0, k).iter().copied().collect()
}

/// Balanced panel with regressors `x1`, `x2`, a 0/1 series `d`, entity
/// effects and `y = 1 + a_i + b . [x1, x2, x1 d, x2 d] + e`.
pub fn random_panel(rng: &mut ChaCha8Rng, n: usize, t: usize, beta: [f64; 4]) -> PanelDataset {
    let mut grids: BTreeMap<String, Vec<Vec<Option<f64>>>> = BTreeMap::new();
    for _ in 0..n {
        let a = 2.0 * normal(rng);
        let mut rows: [Vec<Option<f64>>; 4] = Default::default();
        for _ in 0..t {
            let x1 = normal(rng) + 0.5 * a;
            let x2 = normal(rng);
            let d = if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 };
            let y = 1.0
                + a
                + beta[0] * x1
                + beta[1] * x2
                + beta[2] * x1 * d
                + beta[3] * x2 * d
                + 0.5 * normal(rng);
            for (slot, v) in rows.iter_mut().zip([y, x1, x2, d]) {
                slot.push(Some(v));
            }
        }
        for (name, row) in ["y", "x1", "x2", "d"].iter().zip(rows) {
            grids.entry(name.to_string()).or_default().push(row);
        }
    }
    let series = grids
        .into_iter()
        .map(|(k, v)| (k, Grid::from_rows(v).unwrap()))
        .collect();
    let entities = (0..n).map(|i| format!("E{i:02}")).collect();
    PanelDataset::new(entities, Quarter::new(2000, 1).unwrap().range(t), series).unwrap()
}

/// `y ~ x1 + x2 + x1*d + x2*d` with an intercept.
pub fn interaction_spec(effects: Effects) -> ModelSpec {
    ModelSpec {
        regressand: SeriesRef::new("y"),
        regressors: vec![SeriesRef::new("x1"), SeriesRef::new("x2")],
        interactions: (0..2)
            .map(|regressor| Interaction {
                regressor,
                dummy: SeriesRef::new("d"),
            })
            .collect(),
        effects,
        intercept: true,
        expectation: None,
    }
}

/// Random walk (`phi = 1`) or AR(1) of length `t` started at zero.
pub fn ar1(rng: &mut ChaCha8Rng, phi: f64, t: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(t);
    let mut prev = 0.0;
    for _ in 0..t {
        prev = phi * prev + normal(rng);
        y.push(prev);
    }
    y
}
