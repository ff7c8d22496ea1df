//! Series transforms and recession indicators.
//!
//! All transforms work on one entity's time series at a time, so lags and
//! differences never reach across entity boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{Grid, PanelDataset};

/// A series with explicit holes.
pub type Series = Vec<Option<f64>>;

/// `ln(x + c)`.
pub fn log_shift(x: f64, c: f64) -> Result<f64> {
    let shifted = x + c;
    if !(shifted > 0.0) {
        return Err(Error::Domain(format!(
            "log-shift needs x + c > 0, got {x} + {c}"
        )));
    }
    Ok(shifted.ln())
}

/// Shift constant that makes every observed value strictly positive:
/// `max(0, -min) + 1`.
pub fn auto_shift(min: Option<f64>) -> f64 {
    min.map_or(0.0, |m| (-m).max(0.0)) + 1.0
}

/// `out[t] = x[t] - x[t-1]`; the first element and anything touching a hole
/// is a hole.
pub fn first_diff(series: &[Option<f64>]) -> Series {
    let mut out = Vec::with_capacity(series.len());
    if series.is_empty() {
        return out;
    }
    out.push(None);
    out.extend(series.windows(2).map(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    }));
    out
}

/// Lag (`k > 0`) or lead (`k < 0`) by `|k|` positions. Vacated positions are
/// holes; a shift at least as long as the series yields all holes.
pub fn shift(series: &[Option<f64>], k: i64) -> Series {
    let n = series.len();
    if k.unsigned_abs() as usize >= n && k != 0 {
        log::warn!("shift by {k} on a series of length {n} leaves only holes");
        return vec![None; n];
    }
    (0..n)
        .map(|t| {
            let src = t as i64 - k;
            if (0..n as i64).contains(&src) {
                series[src as usize]
            } else {
                None
            }
        })
        .collect()
}

/// Where the log-shift constant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShiftConstant {
    /// `max(0, -min) + 1` over the variable's whole grid.
    Auto,
    Fixed(f64),
}

/// One step of a transform chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    LogShift(ShiftConstant),
    FirstDiff,
    /// Positive values lag, negative values lead.
    Shift(i64),
}

impl Transform {
    fn apply(&self, grid: &Grid) -> Result<Grid> {
        match *self {
            Transform::LogShift(c) => {
                let c = match c {
                    ShiftConstant::Auto => auto_shift(grid.min()),
                    ShiftConstant::Fixed(c) => c,
                };
                grid.map_values(|x| log_shift(x, c))
            }
            Transform::FirstDiff => grid.map_rows(|_, row| Ok(first_diff(row))),
            Transform::Shift(k) => grid.map_rows(|_, row| Ok(shift(row, k))),
        }
    }

    fn label(&self) -> String {
        match self {
            Transform::LogShift(_) => "ln".into(),
            Transform::FirstDiff => "d".into(),
            Transform::Shift(k) if *k >= 0 => format!("L{k}"),
            Transform::Shift(k) => format!("F{}", -k),
        }
    }
}

/// A variable plus the transforms applied to it, left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRef {
    pub variable: String,
    pub chain: Vec<Transform>,
    /// Column name in the design matrix; defaults to a label built from the chain.
    pub alias: Option<String>,
}

impl SeriesRef {
    pub fn new(variable: impl Into<String>) -> Self {
        Self {
            variable: variable.into(),
            chain: Vec::new(),
            alias: None,
        }
    }

    pub fn then(mut self, t: Transform) -> Self {
        self.chain.push(t);
        self
    }

    pub fn named(mut self, alias: impl Into<String>) -> Self {
        self.alias = Some(alias.into());
        self
    }

    pub fn name(&self) -> String {
        if let Some(a) = &self.alias {
            return a.clone();
        }
        self.chain.iter().fold(self.variable.clone(), |acc, t| {
            format!("{}({acc})", t.label())
        })
    }

    pub fn evaluate(&self, data: &PanelDataset) -> Result<Grid> {
        let mut grid = data.series(&self.variable)?.clone();
        for t in &self.chain {
            grid = t.apply(&grid)?;
        }
        Ok(grid)
    }
}

/// Which growth values count as a recession quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecessionRule {
    /// growth <= 0
    #[default]
    Nonpositive,
    /// growth < 0
    Negative,
}

impl RecessionRule {
    pub fn is_recession(self, growth: f64) -> bool {
        match self {
            RecessionRule::Nonpositive => growth <= 0.0,
            RecessionRule::Negative => growth < 0.0,
        }
    }
}

/// 0/1 recession indicator on the panel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeDummy {
    pub source: String,
    pub rule: RecessionRule,
    pub indicator: Grid,
}

/// Indicator series for a single entity.
pub fn recession_indicator(growth: &[Option<f64>], rule: RecessionRule) -> Series {
    growth
        .iter()
        .map(|g| g.map(|g| if rule.is_recession(g) { 1.0 } else { 0.0 }))
        .collect()
}

pub fn recession_dummy(
    data: &PanelDataset,
    source: &str,
    rule: RecessionRule,
) -> Result<RegimeDummy> {
    let indicator = data
        .series(source)?
        .map_rows(|_, row| Ok(recession_indicator(row, rule)))?;
    Ok(RegimeDummy {
        source: source.to_string(),
        rule,
        indicator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> Series {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn log_shift_values() {
        assert_eq!(log_shift(0.0, 1.0).unwrap(), 0.0);
        assert!((log_shift(std::f64::consts::E - 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((log_shift(-0.5, 1.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_shift(-1.0, 1.0).is_err());
        assert!(log_shift(-2.0, 1.0).is_err());
    }

    #[test]
    fn auto_shift_constant() {
        assert_eq!(auto_shift(Some(3.0)), 1.0);
        assert_eq!(auto_shift(Some(-2.5)), 3.5);
        assert_eq!(auto_shift(None), 1.0);
    }

    #[test]
    fn first_diff_examples() {
        assert_eq!(
            first_diff(&s(&[1.0, 3.0, 6.0])),
            vec![None, Some(2.0), Some(3.0)]
        );
        assert_eq!(
            first_diff(&s(&[4.0; 4])),
            vec![None, Some(0.0), Some(0.0), Some(0.0)]
        );
        assert_eq!(first_diff(&s(&[5.0])), vec![None]);
        assert_eq!(
            first_diff(&[Some(1.0), None, Some(3.0), Some(4.0)]),
            vec![None, None, None, Some(1.0)]
        );
    }

    #[test]
    fn shift_examples() {
        let x = s(&[1.0, 2.0, 3.0]);
        assert_eq!(shift(&x, 1), vec![None, Some(1.0), Some(2.0)]);
        assert_eq!(shift(&x, 0), x);
        assert_eq!(shift(&x, -1), vec![Some(2.0), Some(3.0), None]);
        assert_eq!(shift(&x, 3), vec![None; 3]);
        assert_eq!(shift(&x, -5), vec![None; 3]);
    }

    #[test]
    fn recession_rule_boundary() {
        let g = s(&[1.2, -0.3, 2.1]);
        assert_eq!(
            recession_indicator(&g, RecessionRule::Nonpositive),
            s(&[0.0, 1.0, 0.0])
        );
        assert_eq!(
            recession_indicator(&s(&[0.5, 1.0]), RecessionRule::Nonpositive),
            s(&[0.0, 0.0])
        );
        assert_eq!(
            recession_indicator(&s(&[0.0]), RecessionRule::Nonpositive),
            s(&[1.0])
        );
        assert_eq!(
            recession_indicator(&s(&[0.0]), RecessionRule::Negative),
            s(&[0.0])
        );
        assert_eq!(
            recession_indicator(&[None], RecessionRule::Negative),
            vec![None]
        );
    }

    #[test]
    fn lags_do_not_cross_entities() {
        let grid = Grid::from_rows(vec![s(&[1.0, 2.0]), s(&[3.0, 4.0])]).unwrap();
        let lagged = Transform::Shift(1).apply(&grid).unwrap();
        assert_eq!(lagged.row(1), &[None, Some(3.0)]);
    }

    #[test]
    fn series_ref_names() {
        let r = SeriesRef::new("cpi")
            .then(Transform::LogShift(ShiftConstant::Auto))
            .then(Transform::FirstDiff)
            .then(Transform::Shift(1));
        assert_eq!(r.name(), "L1(d(ln(cpi)))");
        assert_eq!(r.clone().named("pi_lag").name(), "pi_lag");
    }

    proptest! {
        #[test]
        fn grid_chain_equals_per_entity_composition(
            rows in prop::collection::vec(prop::collection::vec(-5.0f64..50.0, 6), 1..5)
        ) {
            let rows: Vec<Series> = rows.iter().map(|r| s(r)).collect();
            let grid = Grid::from_rows(rows.clone()).unwrap();
            let c = 10.0;
            let chained = Transform::FirstDiff
                .apply(&Transform::LogShift(ShiftConstant::Fixed(c)).apply(&grid).unwrap())
                .unwrap();
            for (e, row) in rows.iter().enumerate() {
                let logged: Series = row.iter().map(|v| v.map(|x| (x + c).ln())).collect();
                let expected = first_diff(&logged);
                prop_assert_eq!(chained.row(e), expected.as_slice());
            }
        }

        #[test]
        fn recession_rule_is_idempotent(g in prop::collection::vec(-3.0f64..3.0, 1..30)) {
            let g = s(&g);
            for rule in [RecessionRule::Nonpositive, RecessionRule::Negative] {
                let once = recession_indicator(&g, rule);
                prop_assert_eq!(&once, &recession_indicator(&g, rule));
                prop_assert!(once.iter().flatten().all(|v| *v == 0.0 || *v == 1.0));
            }
        }
    }
}
