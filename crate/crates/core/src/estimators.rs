//! Pooled OLS, fixed effects (within), Swamy–Arora random effects, White
//! covariance and combined-coefficient inference.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{
    build_design, DesignMatrix, Effects, EntityGroup, ModelSpec, RowId, INTERCEPT,
};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, sandwich, xtx_inverse};
use crate::panel::PanelDataset;
use crate::stats::Distribution;

/// Small-sample flavor of the White covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhiteFlavor {
    /// Plain sandwich.
    #[default]
    Hc0,
    /// Sandwich scaled by `N / (N - k)`.
    Hc1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Pooled,
    Fixed,
    TwoWay,
    Random,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Pooled => "Pooled",
            EstimatorKind::Fixed => "Fixed",
            EstimatorKind::TwoWay => "Fixed (two-way)",
            EstimatorKind::Random => "Random",
        }
    }
}

/// Swamy–Arora variance components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma2_u: f64,
    pub sigma2_e: f64,
    pub rho_u: f64,
    pub rho_e: f64,
    /// `sigma2_B - sigma2_e / T_bar` before truncation at zero.
    pub raw_sigma2_u: f64,
    pub truncated: bool,
    /// Harmonic mean of the group sizes.
    pub t_bar: f64,
    /// Quasi-demeaning weight per contributing entity: (entity code, T_i, theta_i).
    pub theta: Vec<(String, usize, f64)>,
}

impl VarianceComponents {
    /// Components with the given variances, thetas evaluated at `sizes`.
    pub fn from_variances(
        sigma2_u: f64,
        sigma2_e: f64,
        entities: &[(String, usize)],
    ) -> Result<Self> {
        if !(sigma2_e > 0.0) || sigma2_u < 0.0 {
            return Err(Error::Domain(format!(
                "need sigma2_e > 0 and sigma2_u >= 0, got {sigma2_e}, {sigma2_u}"
            )));
        }
        let total = sigma2_u + sigma2_e;
        let harmonic =
            entities.len() as f64 / entities.iter().map(|(_, t)| 1.0 / *t as f64).sum::<f64>();
        Ok(Self {
            sigma2_u,
            sigma2_e,
            rho_u: sigma2_u / total,
            rho_e: sigma2_e / total,
            raw_sigma2_u: sigma2_u,
            truncated: false,
            t_bar: harmonic,
            theta: entities
                .iter()
                .map(|(e, t)| {
                    (
                        e.clone(),
                        *t,
                        quasi_demeaning_weight(sigma2_u, sigma2_e, *t),
                    )
                })
                .collect(),
        })
    }
}

/// `1 - sqrt(sigma2_e / (T sigma2_u + sigma2_e))`.
pub fn quasi_demeaning_weight(sigma2_u: f64, sigma2_e: f64, t: usize) -> f64 {
    1.0 - (sigma2_e / (t as f64 * sigma2_u + sigma2_e)).sqrt()
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub kind: EstimatorKind,
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub cov_classical: DMatrix<f64>,
    pub cov_white: Option<DMatrix<f64>>,
    pub white_flavor: WhiteFlavor,
    /// Residuals on the original (untransformed) data.
    pub residuals: DVector<f64>,
    pub rows: Vec<RowId>,
    pub groups: Vec<EntityGroup>,
    /// Residual sum of squares of the estimating regression.
    pub rss: f64,
    pub sigma2: f64,
    pub df_resid: usize,
    pub r2: f64,
    /// GLS-transformed R², random effects only.
    pub r2_weighted: Option<f64>,
    /// Entity intercepts, fixed effects only.
    pub entity_intercepts: Vec<(String, f64)>,
    pub n_obs: usize,
    /// Number of fixed-effect parameters swept out (0 for pooled / random).
    pub absorbed: usize,
    pub components: Option<VarianceComponents>,
    pub has_intercept: bool,
}

/// Which covariance matrix inference should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    Classical,
    White,
}

impl EstimationResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// White covariance when available, classical otherwise.
    pub fn covariance(&self, kind: CovarianceKind) -> &DMatrix<f64> {
        match (kind, &self.cov_white) {
            (CovarianceKind::White, Some(w)) => w,
            _ => &self.cov_classical,
        }
    }

    pub fn std_errors(&self, kind: CovarianceKind) -> Vec<f64> {
        let cov = self.covariance(kind);
        (0..self.names.len())
            .map(|i| cov[(i, i)].max(0.0).sqrt())
            .collect()
    }

    pub fn slope_names(&self) -> Vec<String> {
        self.names
            .iter()
            .filter(|n| n.as_str() != INTERCEPT)
            .cloned()
            .collect()
    }

    /// t-ratio and two-sided p-value (Student t on the residual df).
    pub fn inference(&self, i: usize, kind: CovarianceKind) -> (f64, f64, Distribution) {
        let se = self.std_errors(kind)[i];
        let t = self.coefficients[i] / se;
        let dist = Distribution::StudentTwoSided {
            df: self.df_resid as f64,
        };
        (t, dist.p_value(t), dist)
    }
}

fn centered_tss(y: &DVector<f64>) -> f64 {
    let mean = y.mean();
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

fn white_matrix(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    bread: &DMatrix<f64>,
    flavor: WhiteFlavor,
    df: usize,
) -> DMatrix<f64> {
    let hc0 = sandwich(x, residuals, bread);
    match flavor {
        WhiteFlavor::Hc0 => hc0,
        WhiteFlavor::Hc1 => hc0 * (x.nrows() as f64 / df as f64),
    }
}

/// HC0 White covariance `(X'X)^-1 X' diag(e^2) X (X'X)^-1`.
pub fn white_cov(design: &DesignMatrix, residuals: &DVector<f64>) -> Result<DMatrix<f64>> {
    if residuals.len() != design.n_obs() {
        return Err(Error::Usage(format!(
            "{} residuals for {} design rows",
            residuals.len(),
            design.n_obs()
        )));
    }
    let bread = xtx_inverse(&design.x, &design.columns)?;
    Ok(sandwich(&design.x, residuals, &bread))
}

/// OLS on the design as given. `robust` selects the White flavor, `None`
/// skips it.
pub fn ols(design: &DesignMatrix, robust: Option<WhiteFlavor>) -> Result<EstimationResult> {
    let ls = least_squares(&design.x, &design.y, &design.columns)?;
    let (n, k) = design.x.shape();
    let df = n - k;
    let sigma2 = ls.rss / df as f64;
    let tss = if design.intercept {
        centered_tss(&design.y)
    } else {
        design.y.norm_squared()
    };
    let cov_white = robust.map(|f| white_matrix(&design.x, &ls.residuals, &ls.xtx_inv, f, df));
    Ok(EstimationResult {
        kind: EstimatorKind::Pooled,
        names: design.columns.clone(),
        coefficients: ls.beta,
        cov_classical: &ls.xtx_inv * sigma2,
        cov_white,
        white_flavor: robust.unwrap_or_default(),
        residuals: ls.residuals,
        rows: design.rows.clone(),
        groups: design.groups.clone(),
        rss: ls.rss,
        sigma2,
        df_resid: df,
        r2: 1.0 - ls.rss / tss,
        r2_weighted: None,
        entity_intercepts: Vec::new(),
        n_obs: n,
        absorbed: 0,
        components: None,
        has_intercept: design.intercept,
    })
}

fn group_means(v: &[f64], groups: &[EntityGroup]) -> Vec<f64> {
    groups
        .iter()
        .map(|g| v[g.range()].iter().sum::<f64>() / g.len as f64)
        .collect()
}

/// Slope columns, plus period dummies (first period dropped) for two-way effects.
fn within_columns(design: &DesignMatrix, two_way: bool) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for j in design.slope_indices() {
        names.push(design.columns[j].clone());
        cols.push(design.x.column(j).iter().copied().collect());
    }
    if two_way {
        let mut periods: Vec<usize> = design.rows.iter().map(|r| r.period).collect();
        periods.sort_unstable();
        periods.dedup();
        for &p in periods.iter().skip(1) {
            names.push(format!("period#{p}"));
            cols.push(
                design
                    .rows
                    .iter()
                    .map(|r| if r.period == p { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
    }
    (names, cols)
}

/// Fixed-effects (within) estimator on a realized design.
///
/// Slopes come from OLS on entity-demeaned data. When the design has an
/// intercept the reported constant is `ybar - xbar' beta` over all rows, so
/// the entity effects average to zero around it.
pub fn within(
    design: &DesignMatrix,
    two_way: bool,
    robust: Option<WhiteFlavor>,
) -> Result<EstimationResult> {
    let (names, raw_cols) = within_columns(design, two_way);
    let n_slopes = design.slope_indices().len();
    if n_slopes == 0 {
        return Err(Error::Spec(
            "fixed effects need at least one slope regressor".into(),
        ));
    }
    if !design.groups.iter().any(|g| g.len >= 2) {
        return Err(Error::Spec("no entity has two or more rows".into()));
    }
    let n = design.n_obs();
    let groups = &design.groups;

    let demean = |v: &[f64]| -> Vec<f64> {
        let means = group_means(v, groups);
        let mut out = v.to_vec();
        for (g, m) in groups.iter().zip(&means) {
            for x in &mut out[g.range()] {
                *x -= m;
            }
        }
        out
    };

    let y: Vec<f64> = design.y.iter().copied().collect();
    let y_dm = DVector::from_vec(demean(&y));
    let dm_cols: Vec<Vec<f64>> = raw_cols.iter().map(|c| demean(c)).collect();
    for (j, (raw, dm)) in raw_cols.iter().zip(&dm_cols).enumerate().take(n_slopes) {
        let raw_norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dm_norm = dm.iter().map(|v| v * v).sum::<f64>().sqrt();
        if raw_norm == 0.0 || dm_norm <= 1e-10 * raw_norm {
            return Err(Error::Annihilated {
                column: names[j].clone(),
            });
        }
    }
    let k = dm_cols.len();
    let x_dm = DMatrix::from_fn(n, k, |r, c| dm_cols[c][r]);
    let ls = least_squares(&x_dm, &y_dm, &names)?;

    let absorbed = groups.len() + (k - n_slopes);
    let df = n
        .checked_sub(groups.len() + k)
        .filter(|d| *d > 0)
        .ok_or(Error::Length {
            required: groups.len() + k + 1,
            actual: n,
        })?;
    let sigma2 = ls.rss / df as f64;
    let cov_full = &ls.xtx_inv * sigma2;
    let white_full = robust.map(|f| white_matrix(&x_dm, &ls.residuals, &ls.xtx_inv, f, df));

    let beta_full = &ls.beta;
    let entity_means: Vec<Vec<f64>> = raw_cols.iter().map(|c| group_means(c, groups)).collect();
    let y_means = group_means(&y, groups);
    let entity_intercepts = groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let fit: f64 = (0..k).map(|c| entity_means[c][gi] * beta_full[c]).sum();
            (design.entities[g.entity].clone(), y_means[gi] - fit)
        })
        .collect();

    let x_bar =
        DVector::from_iterator(k, raw_cols.iter().map(|c| c.iter().sum::<f64>() / n as f64));
    let y_bar = design.y.mean();

    let slope_part = |m: &DMatrix<f64>| m.view((0, 0), (n_slopes, n_slopes)).into_owned();
    let (names_out, coefficients, cov_classical, cov_white) = if design.intercept {
        let size = n_slopes + 1;
        let mut coef = DVector::zeros(size);
        coef[0] = y_bar - x_bar.dot(beta_full);
        coef.rows_mut(1, n_slopes)
            .copy_from(&beta_full.rows(0, n_slopes));

        let assemble = |v: &DMatrix<f64>, mean_var: f64| {
            let vx = v * &x_bar;
            let mut out = DMatrix::zeros(size, size);
            out[(0, 0)] = mean_var + x_bar.dot(&vx);
            for a in 0..n_slopes {
                out[(0, a + 1)] = -vx[a];
                out[(a + 1, 0)] = -vx[a];
                for b in 0..n_slopes {
                    out[(a + 1, b + 1)] = v[(a, b)];
                }
            }
            out
        };
        let cov_c = assemble(&cov_full, sigma2 / n as f64);
        let cov_w = white_full.as_ref().map(|w| {
            let mut mean_var = ls.residuals.norm_squared() / (n as f64 * n as f64);
            if robust == Some(WhiteFlavor::Hc1) {
                mean_var *= n as f64 / df as f64;
            }
            assemble(w, mean_var)
        });
        let mut names_out = vec![INTERCEPT.to_string()];
        names_out.extend(names.iter().take(n_slopes).cloned());
        (names_out, coef, cov_c, cov_w)
    } else {
        (
            names.iter().take(n_slopes).cloned().collect(),
            beta_full.rows(0, n_slopes).into_owned(),
            slope_part(&cov_full),
            white_full.as_ref().map(slope_part),
        )
    };

    Ok(EstimationResult {
        kind: if two_way {
            EstimatorKind::TwoWay
        } else {
            EstimatorKind::Fixed
        },
        names: names_out,
        coefficients,
        cov_classical,
        cov_white,
        white_flavor: robust.unwrap_or_default(),
        residuals: ls.residuals,
        rows: design.rows.clone(),
        groups: groups.clone(),
        rss: ls.rss,
        sigma2,
        df_resid: df,
        r2: 1.0 - ls.rss / centered_tss(&design.y),
        r2_weighted: None,
        entity_intercepts,
        n_obs: n,
        absorbed,
        components: None,
        has_intercept: design.intercept,
    })
}

/// Swamy–Arora variance components from the within and between regressions.
pub fn swamy_arora_design(design: &DesignMatrix) -> Result<VarianceComponents> {
    let slopes = design.slope_indices();
    let k = slopes.len();
    let n_groups = design.groups.len();
    if n_groups <= k + 1 {
        return Err(Error::Infeasible(format!(
            "between regression has {n_groups} entities for {} parameters",
            k + 1
        )));
    }
    let fe = within(design, false, None)?;
    let sigma2_e = fe.sigma2;

    let y: Vec<f64> = design.y.iter().copied().collect();
    let y_bar = DVector::from_vec(group_means(&y, &design.groups));
    let mut xb = DMatrix::from_element(n_groups, k + 1, 1.0);
    let mut names = vec![INTERCEPT.to_string()];
    for (c, &j) in slopes.iter().enumerate() {
        let col: Vec<f64> = design.x.column(j).iter().copied().collect();
        for (r, m) in group_means(&col, &design.groups).into_iter().enumerate() {
            xb[(r, c + 1)] = m;
        }
        names.push(design.columns[j].clone());
    }
    let between = least_squares(&xb, &y_bar, &names)
        .map_err(|e| Error::Infeasible(format!("between regression failed: {e}")))?;
    let sigma2_b = between.rss / (n_groups - k - 1) as f64;

    let sizes: Vec<(String, usize)> = design
        .groups
        .iter()
        .map(|g| (design.entities[g.entity].clone(), g.len))
        .collect();
    let t_bar = n_groups as f64 / sizes.iter().map(|(_, t)| 1.0 / *t as f64).sum::<f64>();
    let raw = sigma2_b - sigma2_e / t_bar;
    let mut comps = VarianceComponents::from_variances(raw.max(0.0), sigma2_e, &sizes)?;
    comps.raw_sigma2_u = raw;
    comps.truncated = raw < 0.0;
    Ok(comps)
}

/// Random-effects GLS given variance components: quasi-demean every entity by
/// its theta and run OLS with an intercept.
pub fn random_effects_with(
    design: &DesignMatrix,
    comps: &VarianceComponents,
    robust: Option<WhiteFlavor>,
) -> Result<EstimationResult> {
    let slopes = design.slope_indices();
    let k = slopes.len() + 1;
    let n = design.n_obs();
    let thetas: Vec<f64> = design
        .groups
        .iter()
        .map(|g| quasi_demeaning_weight(comps.sigma2_u, comps.sigma2_e, g.len))
        .collect();

    let mut x_orig = DMatrix::from_element(n, k, 1.0);
    for (c, &j) in slopes.iter().enumerate() {
        x_orig.set_column(c + 1, &design.x.column(j));
    }
    let mut x_t = x_orig.clone();
    let mut y_t = design.y.clone();
    for (g, theta) in design.groups.iter().zip(&thetas) {
        let r = g.range();
        let y_mean = design.y.rows(g.start, g.len).mean();
        for i in r.clone() {
            y_t[i] -= theta * y_mean;
        }
        for c in 0..k {
            let mean = x_orig.view((g.start, c), (g.len, 1)).mean();
            for i in r.clone() {
                x_t[(i, c)] -= theta * mean;
            }
        }
    }
    let mut names = vec![INTERCEPT.to_string()];
    names.extend(slopes.iter().map(|&j| design.columns[j].clone()));
    let ls = least_squares(&x_t, &y_t, &names)?;
    let df = n - k;
    let sigma2 = ls.rss / df as f64;
    let cov_white = robust.map(|f| white_matrix(&x_t, &ls.residuals, &ls.xtx_inv, f, df));
    let residuals = &design.y - &x_orig * &ls.beta;
    let r2 = 1.0 - residuals.norm_squared() / centered_tss(&design.y);
    let r2_weighted = 1.0 - ls.rss / centered_tss(&y_t);

    Ok(EstimationResult {
        kind: EstimatorKind::Random,
        names,
        coefficients: ls.beta,
        cov_classical: &ls.xtx_inv * sigma2,
        cov_white,
        white_flavor: robust.unwrap_or_default(),
        residuals,
        rows: design.rows.clone(),
        groups: design.groups.clone(),
        rss: ls.rss,
        sigma2,
        df_resid: df,
        r2,
        r2_weighted: Some(r2_weighted),
        entity_intercepts: Vec::new(),
        n_obs: n,
        absorbed: 0,
        components: Some(comps.clone()),
        has_intercept: true,
    })
}

/// Estimates `design` under `effects`.
pub fn estimate(
    design: &DesignMatrix,
    effects: Effects,
    robust: Option<WhiteFlavor>,
) -> Result<EstimationResult> {
    match effects {
        Effects::Pooled => ols(design, robust),
        Effects::Fixed => within(design, false, robust),
        Effects::TwoWay => within(design, true, robust),
        Effects::Random => {
            let comps = swamy_arora_design(design)?;
            random_effects_with(design, &comps, robust)
        }
    }
}

fn require_effects(spec: &ModelSpec, allowed: &[Effects]) -> Result<()> {
    if allowed.contains(&spec.effects) {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "specification has {:?} effects, expected one of {allowed:?}",
            spec.effects
        )))
    }
}

/// Pooled OLS with a common intercept.
pub fn pooled(
    spec: &ModelSpec,
    data: &PanelDataset,
    robust: Option<WhiteFlavor>,
) -> Result<EstimationResult> {
    require_effects(spec, &[Effects::Pooled])?;
    ols(&build_design(spec, data)?, robust)
}

pub fn fixed_effects(
    spec: &ModelSpec,
    data: &PanelDataset,
    robust: Option<WhiteFlavor>,
) -> Result<EstimationResult> {
    require_effects(spec, &[Effects::Fixed, Effects::TwoWay])?;
    let design = build_design(spec, data)?;
    within(&design, spec.effects == Effects::TwoWay, robust)
}

pub fn swamy_arora(spec: &ModelSpec, data: &PanelDataset) -> Result<VarianceComponents> {
    swamy_arora_design(&build_design(spec, data)?)
}

pub fn random_effects(
    spec: &ModelSpec,
    data: &PanelDataset,
    robust: Option<WhiteFlavor>,
) -> Result<EstimationResult> {
    require_effects(spec, &[Effects::Random])?;
    let design = build_design(spec, data)?;
    let comps = swamy_arora_design(&design)?;
    random_effects_with(&design, &comps, robust)
}

/// Sum of two coefficients with the covariance-free and the full standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedCoefficient {
    pub first: String,
    pub second: String,
    pub estimate: f64,
    /// `sqrt(var_i + var_j)`.
    pub se_diagonal: f64,
    /// `sqrt(var_i + var_j + 2 cov_ij)`, clamped at zero.
    pub se_full: f64,
    pub clamped: bool,
    pub t_diagonal: Option<f64>,
    pub p_diagonal: Option<f64>,
    pub t_full: Option<f64>,
    pub p_full: Option<f64>,
}

pub fn combined_coefficient(
    result: &EstimationResult,
    i: usize,
    j: usize,
    kind: CovarianceKind,
) -> Result<CombinedCoefficient> {
    let k = result.names.len();
    if i == j || i >= k || j >= k {
        return Err(Error::Usage(format!(
            "combined coefficient needs two distinct indices below {k}, got {i} and {j}"
        )));
    }
    let cov = result.covariance(kind);
    let estimate = result.coefficients[i] + result.coefficients[j];
    let base = cov[(i, i)] + cov[(j, j)];
    let full = base + 2.0 * cov[(i, j)];
    let clamped = full < 0.0;
    if clamped {
        log::warn!(
            "combined variance of {} + {} is negative ({full}); clamping to zero",
            result.names[i],
            result.names[j]
        );
    }
    let se_diagonal = base.max(0.0).sqrt();
    let se_full = full.max(0.0).sqrt();
    let infer = |se: f64| {
        if se > 0.0 {
            let t = estimate / se;
            (Some(t), Some(Distribution::NormalTwoSided.p_value(t)))
        } else {
            (None, None)
        }
    };
    let (t_diagonal, p_diagonal) = infer(se_diagonal);
    let (t_full, p_full) = infer(se_full);
    Ok(CombinedCoefficient {
        first: result.names[i].clone(),
        second: result.names[j].clone(),
        estimate,
        se_diagonal,
        se_full,
        clamped,
        t_diagonal,
        p_diagonal,
        t_full,
        p_full,
    })
}
