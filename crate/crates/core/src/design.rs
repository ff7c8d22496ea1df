//! Declarative model specifications and their realized design matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelDataset;
use crate::transform::SeriesRef;

/// Name of the intercept column.
pub const INTERCEPT: &str = "const";

/// Variable that carries the expected-inflation series.
pub const EXPECTED_INFLATION_VARIABLE: &str = "expected_cpi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effects {
    Pooled,
    /// Entity intercepts.
    Fixed,
    /// Entity and period intercepts.
    TwoWay,
    Random,
}

/// How the expected-inflation regressor is proxied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectationMode {
    /// Lagged inflation.
    Backward,
    /// The expected-inflation series.
    Forward,
}

impl ExpectationMode {
    pub fn code(self) -> &'static str {
        match self {
            ExpectationMode::Backward => "BL",
            ExpectationMode::Forward => "FL",
        }
    }
}

/// Product of a regressor and a 0/1 regime indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub regressor: usize,
    pub dummy: SeriesRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub regressand: SeriesRef,
    pub regressors: Vec<SeriesRef>,
    pub interactions: Vec<Interaction>,
    pub effects: Effects,
    pub intercept: bool,
    pub expectation: Option<ExpectationMode>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        for it in &self.interactions {
            if it.regressor >= self.regressors.len() {
                return Err(Error::Spec(format!(
                    "interaction references regressor #{} but only {} exist",
                    it.regressor,
                    self.regressors.len()
                )));
            }
        }
        if self.expectation == Some(ExpectationMode::Backward)
            && self
                .regressors
                .iter()
                .any(|r| r.variable == EXPECTED_INFLATION_VARIABLE)
        {
            return Err(Error::Spec(
                "backward-looking specification cannot use the expected-inflation series".into(),
            ));
        }
        Ok(())
    }

    /// Column names in design order (intercept first when present).
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.regressors.iter().map(SeriesRef::name));
        names.extend(self.interactions.iter().map(|it| {
            format!(
                "{}*{}",
                self.regressors[it.regressor].name(),
                it.dummy.name()
            )
        }));
        names
    }

    pub fn with_effects(&self, effects: Effects) -> Self {
        Self {
            effects,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowId {
    pub entity: usize,
    pub period: usize,
}

/// Contiguous block of design rows that belong to one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityGroup {
    pub entity: usize,
    pub start: usize,
    pub len: usize,
}

impl EntityGroup {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub regressand: String,
    pub columns: Vec<String>,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub rows: Vec<RowId>,
    /// Entity codes of the source panel, indexed by `RowId::entity`.
    pub entities: Vec<String>,
    pub n_periods: usize,
    /// Entities with at least one usable row, in panel order.
    pub groups: Vec<EntityGroup>,
    /// Rows dropped for holes or lags, per panel entity.
    pub dropped: Vec<usize>,
    pub intercept: bool,
    pub effects: Effects,
}

impl DesignMatrix {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    /// Indices of the non-intercept columns.
    pub fn slope_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| !(self.intercept && j == 0))
            .collect()
    }

    pub fn slope_names(&self) -> Vec<String> {
        self.slope_indices()
            .into_iter()
            .map(|j| self.columns[j].clone())
            .collect()
    }

    /// Group sizes `T_i`.
    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len).collect()
    }
}

/// Evaluates every series of `spec` on `data`, drops rows with any hole and
/// stacks the remainder entity by entity.
pub fn build_design(spec: &ModelSpec, data: &PanelDataset) -> Result<DesignMatrix> {
    spec.validate()?;
    let y_grid = spec.regressand.evaluate(data)?;
    let x_grids = spec
        .regressors
        .iter()
        .map(|r| r.evaluate(data))
        .collect::<Result<Vec<_>>>()?;
    let d_grids = spec
        .interactions
        .iter()
        .map(|it| it.dummy.evaluate(data))
        .collect::<Result<Vec<_>>>()?;

    let columns = spec.column_names();
    let k = columns.len();
    let mut y = Vec::new();
    let mut cells: Vec<f64> = Vec::new();
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    let mut dropped = vec![0; data.n_entities()];

    for (e, drop_count) in dropped.iter_mut().enumerate() {
        let start = rows.len();
        for t in 0..data.n_periods() {
            let Some(yv) = y_grid.get(e, t) else {
                *drop_count += 1;
                continue;
            };
            let xs: Option<Vec<f64>> = x_grids.iter().map(|g| g.get(e, t)).collect();
            let ds: Option<Vec<f64>> = d_grids.iter().map(|g| g.get(e, t)).collect();
            let (Some(xs), Some(ds)) = (xs, ds) else {
                *drop_count += 1;
                continue;
            };
            y.push(yv);
            if spec.intercept {
                cells.push(1.0);
            }
            cells.extend_from_slice(&xs);
            cells.extend(
                spec.interactions
                    .iter()
                    .zip(&ds)
                    .map(|(it, d)| xs[it.regressor] * d),
            );
            rows.push(RowId {
                entity: e,
                period: t,
            });
        }
        if rows.len() > start {
            groups.push(EntityGroup {
                entity: e,
                start,
                len: rows.len() - start,
            });
        }
    }

    if rows.is_empty() {
        return Err(Error::Spec(
            "no usable rows remain after dropping holes".into(),
        ));
    }
    if !groups.iter().any(|g| g.len >= 2) {
        return Err(Error::Spec(
            "no entity contributes two or more usable rows".into(),
        ));
    }

    let n = rows.len();
    let x = DMatrix::from_row_slice(n, k, &cells);
    for a in 0..k {
        for b in a + 1..k {
            if x.column(a) == x.column(b) {
                return Err(Error::Spec(format!(
                    "column `{}` duplicates column `{}`",
                    columns[b], columns[a]
                )));
            }
        }
    }

    Ok(DesignMatrix {
        regressand: spec.regressand.name(),
        columns,
        y: DVector::from_vec(y),
        x,
        rows,
        entities: data.entities().to_vec(),
        n_periods: data.n_periods(),
        groups,
        dropped,
        intercept: spec.intercept,
        effects: spec.effects,
    })
}
