//! End-to-end analysis: transforms, gap, recession dummies, unit-root
//! screening, pooled / fixed / random estimation per expectation mode,
//! specification tests, model selection and report assembly.

use rayon::prelude::*;

use crate::config::AnalysisConfig;
use crate::design::{
    build_design, Effects, ExpectationMode, Interaction, ModelSpec, EXPECTED_INFLATION_VARIABLE,
};
use crate::error::{Error, Result};
use crate::estimators::{
    combined_coefficient, ols, random_effects_with, swamy_arora_design, within, CovarianceKind,
    EstimationResult, EstimatorKind,
};
use crate::hp::{gap_against_inflation_trend, observed_span, unemployment_gap, NairuSource};
use crate::panel::{Grid, PanelDataset};
use crate::report::{
    AnalysisReport, CoefficientRow, CombinedEntry, ComponentSummary, ModeChoice, ModelColumn,
    Provenance, SpecTestRow, UnitRootRow, UnitRootSection,
};
use crate::spec_tests::{breusch_pagan_lm, hausman, honda_lm, redundant_fe_test, select_model};
use crate::transform::{auto_shift, first_diff, log_shift, recession_dummy, SeriesRef, Transform};
use crate::unit_root::{adf_test, pp_test, UnitRootKind, UnitRootResult};

/// Column names of the derived series.
pub const INFLATION: &str = "pi";
pub const GAP: &str = "u_gap";
pub const RECESSION: &str = "recession";
pub const EXPECTED: &str = "pi_e";

/// Input panel plus the derived inflation, gap and recession series.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: PanelDataset,
    pub cpi_shift: f64,
    pub unemployment_shift: f64,
    pub lambda: f64,
}

fn shift_constants(config: &AnalysisConfig, data: &PanelDataset) -> Result<(f64, f64)> {
    let cpi = config
        .log_shift
        .cpi
        .unwrap_or_else(|| auto_shift(data.series("cpi").ok().and_then(Grid::min)));
    let u = config
        .log_shift
        .unemployment
        .unwrap_or_else(|| auto_shift(data.series("unemployment").ok().and_then(Grid::min)));
    Ok(if config.log_shift.uniform {
        let c = cpi.max(u);
        (c, c)
    } else {
        (cpi, u)
    })
}

/// Builds inflation, the unemployment gap and the recession indicator.
pub fn prepare(config: &AnalysisConfig, data: &PanelDataset) -> Result<Prepared> {
    let (cpi_shift, unemployment_shift) = shift_constants(config, data)?;
    let lambda = config.hp.resolved_lambda()?;
    let stage = "transforms";

    let cpi = data
        .series("cpi")
        .map_err(|e| e.in_stage(stage, "variable cpi"))?;
    let inflation = cpi.map_rows(|e, row| {
        let logged = row
            .iter()
            .map(|v| v.map(|x| log_shift(x, cpi_shift)).transpose())
            .collect::<Result<Vec<_>>>()
            .map_err(|err| {
                err.in_stage(
                    stage,
                    format!("entity {}, variable cpi", data.entities()[e]),
                )
            })?;
        Ok(first_diff(&logged))
    })?;

    let unemployment = data
        .series("unemployment")
        .map_err(|e| e.in_stage("gap", "variable unemployment"))?;
    let gap = unemployment.map_rows(|e, row| {
        let result = match config.hp.nairu_source {
            NairuSource::Unemployment => unemployment_gap(row, lambda, unemployment_shift),
            NairuSource::Inflation => {
                gap_against_inflation_trend(row, inflation.row(e), lambda, unemployment_shift)
            }
        };
        result.map_err(|err| {
            err.in_stage(
                "gap",
                format!("entity {}, variable unemployment", data.entities()[e]),
            )
        })
    })?;

    let dummy = recession_dummy(data, "gdp_growth", config.recession_rule)
        .map_err(|e| e.in_stage("recession dummies", "variable gdp_growth"))?;

    let derived = data
        .with_series(INFLATION, inflation)?
        .with_series(GAP, gap)?
        .with_series(RECESSION, dummy.indicator)?;
    Ok(Prepared {
        data: derived,
        cpi_shift,
        unemployment_shift,
        lambda,
    })
}

/// Inflation on expected inflation and the gap, both also interacted with
/// the recession indicator.
pub fn phillips_spec(mode: ExpectationMode, effects: Effects) -> ModelSpec {
    let expected = match mode {
        ExpectationMode::Backward => SeriesRef::new(INFLATION).then(Transform::Shift(1)),
        ExpectationMode::Forward => SeriesRef::new(EXPECTED_INFLATION_VARIABLE),
    }
    .named(EXPECTED);
    ModelSpec {
        regressand: SeriesRef::new(INFLATION),
        regressors: vec![expected, SeriesRef::new(GAP)],
        interactions: (0..2)
            .map(|regressor| Interaction {
                regressor,
                dummy: SeriesRef::new(RECESSION),
            })
            .collect(),
        effects,
        intercept: true,
        expectation: Some(mode),
    }
}

/// Display label for a design column of the Phillips specification.
pub fn coefficient_label(name: &str) -> String {
    let base = |n: &str| match n {
        EXPECTED => "Expected inflation".to_string(),
        GAP => "Unemployment gap".to_string(),
        other => other.to_string(),
    };
    if name == crate::design::INTERCEPT {
        return "Intercept".into();
    }
    match name.split_once('*') {
        Some((a, d)) if d == RECESSION => format!("{} x recession", base(a)),
        _ => base(name),
    }
}

/// Pooled, fixed and random-effects fits for one expectation mode.
#[derive(Debug, Clone)]
pub struct ModeFits {
    pub mode: ExpectationMode,
    pub pooled: EstimationResult,
    pub fixed: EstimationResult,
    pub random: EstimationResult,
}

pub fn fit_mode(
    config: &AnalysisConfig,
    prepared: &Prepared,
    mode: ExpectationMode,
) -> Result<ModeFits> {
    let ctx = |what: &str| format!("{} model, {what}", mode.code());
    if mode == ExpectationMode::Forward {
        let missing = prepared
            .data
            .series(EXPECTED_INFLATION_VARIABLE)
            .map_or(true, Grid::is_all_holes);
        if missing {
            return Err(Error::Spec(
                "forward-looking mode requires the expected_cpi column".into(),
            )
            .in_stage("estimation", ctx("design")));
        }
    }
    let spec = phillips_spec(mode, Effects::Pooled);
    let design =
        build_design(&spec, &prepared.data).map_err(|e| e.in_stage("estimation", ctx("design")))?;
    let robust = Some(config.white);
    let pooled = ols(&design, robust).map_err(|e| e.in_stage("estimation", ctx("pooled")))?;
    let fixed = within(&design, config.period_effects, robust)
        .map_err(|e| e.in_stage("estimation", ctx("fixed effects")))?;
    let comps = swamy_arora_design(&design)
        .map_err(|e| e.in_stage("estimation", ctx("variance components")))?;
    let random = random_effects_with(&design, &comps, robust)
        .map_err(|e| e.in_stage("estimation", ctx("random effects")))?;
    Ok(ModeFits {
        mode,
        pooled,
        fixed,
        random,
    })
}

const UNIT_ROOT_VARIABLES: [(&str, &str); 3] = [
    ("CPI", INFLATION),
    ("EI", EXPECTED_INFLATION_VARIABLE),
    ("UGAP", GAP),
];
const UNIT_ROOT_TESTS: [UnitRootKind; 2] = [UnitRootKind::Adf, UnitRootKind::Pp];

/// ADF and PP on every (entity, variable) series over its observed span.
pub fn unit_root_section(config: &AnalysisConfig, prepared: &Prepared) -> Result<UnitRootSection> {
    let data = &prepared.data;
    let jobs: Vec<(usize, usize)> = (0..data.n_entities())
        .flat_map(|e| (0..UNIT_ROOT_VARIABLES.len()).map(move |v| (e, v)))
        .collect();
    let cells: Vec<Vec<Option<UnitRootResult>>> = jobs
        .par_iter()
        .map(|&(e, v)| {
            let (label, variable) = UNIT_ROOT_VARIABLES[v];
            let ctx = || format!("entity {}, variable {label}", data.entities()[e]);
            let row = match data.series(variable) {
                Ok(grid) => grid.row(e),
                Err(_) => return Ok(vec![None; UNIT_ROOT_TESTS.len()]),
            };
            let Some(span) = observed_span(row).map_err(|err| err.in_stage("unit roots", ctx()))?
            else {
                return Ok(vec![None; UNIT_ROOT_TESTS.len()]);
            };
            let values: Vec<f64> = row[span].iter().map(|x| x.expect("in span")).collect();
            UNIT_ROOT_TESTS
                .iter()
                .map(|kind| {
                    let r = match kind {
                        UnitRootKind::Adf => adf_test(&values, config.max_lag),
                        UnitRootKind::Pp => pp_test(&values),
                    };
                    r.map(Some)
                        .map_err(|err| err.in_stage("unit roots", format!("{}, {kind:?}", ctx())))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let per_entity = UNIT_ROOT_VARIABLES.len();
    let rows = data
        .entities()
        .iter()
        .enumerate()
        .map(|(e, entity)| UnitRootRow {
            entity: entity.clone(),
            cells: cells[e * per_entity..(e + 1) * per_entity].concat(),
        })
        .collect();
    Ok(UnitRootSection {
        variables: UNIT_ROOT_VARIABLES
            .iter()
            .map(|(l, _)| l.to_string())
            .collect(),
        tests: UNIT_ROOT_TESTS.to_vec(),
        rows,
    })
}

fn coefficient_rows(result: &EstimationResult) -> Vec<CoefficientRow> {
    let white = result.std_errors(CovarianceKind::White);
    let classical = result.std_errors(CovarianceKind::Classical);
    result
        .names
        .iter()
        .enumerate()
        .filter(|(_, n)| !n.starts_with("period#"))
        .map(|(i, name)| {
            let (t, p, dist) = result.inference(i, CovarianceKind::White);
            CoefficientRow {
                name: name.clone(),
                label: coefficient_label(name),
                estimate: result.coefficients[i],
                std_error: white[i],
                classical_std_error: classical[i],
                statistic: t,
                p_value: p,
                distribution: dist,
            }
        })
        .collect()
}

fn model_column(mode: ExpectationMode, result: &EstimationResult) -> Result<ModelColumn> {
    let mut sums = Vec::new();
    for base in [EXPECTED, GAP] {
        let i = result.index_of(base);
        let j = result.index_of(&format!("{base}*{RECESSION}"));
        if let (Some(i), Some(j)) = (i, j) {
            sums.push(combined_coefficient(result, i, j, CovarianceKind::White)?);
        }
    }
    Ok(ModelColumn {
        mode,
        estimator: result.kind,
        coefficients: coefficient_rows(result),
        sums,
        r2_weighted: result.r2_weighted,
        r2_unweighted: result.r2,
        n_obs: result.n_obs,
        df_resid: result.df_resid,
        components: result.components.as_ref().map(|c| ComponentSummary {
            sigma_u: c.sigma2_u.sqrt(),
            sigma_e: c.sigma2_e.sqrt(),
            rho_u: c.rho_u,
            rho_e: c.rho_e,
            truncated: c.truncated,
        }),
    })
}

fn spec_tests_for(fits: &ModeFits) -> Result<SpecTestRow> {
    let ctx = format!("{} model", fits.mode.code());
    let wrap = |e: Error| e.in_stage("specification tests", ctx.clone());
    let redundant = redundant_fe_test(&fits.pooled, &fits.fixed).map_err(wrap)?;
    let residuals = fits.pooled.residuals.as_slice();
    let bp = breusch_pagan_lm(residuals, &fits.pooled.groups).map_err(wrap)?;
    let honda = honda_lm(residuals, &fits.pooled.groups).map_err(wrap)?;
    let h = hausman(&fits.fixed, &fits.random, &fits.random.slope_names()).map_err(wrap)?;
    Ok(SpecTestRow {
        mode: fits.mode,
        redundant_chi2: redundant.chi2,
        redundant_f: redundant.f,
        breusch_pagan: bp,
        honda,
        hausman: h,
    })
}

fn shown(config: &AnalysisConfig, kind: EstimatorKind) -> bool {
    let effects = match kind {
        EstimatorKind::Pooled => Effects::Pooled,
        EstimatorKind::Fixed | EstimatorKind::TwoWay => Effects::Fixed,
        EstimatorKind::Random => Effects::Random,
    };
    config.effects.contains(&effects)
}

/// Runs every stage on `data` and assembles the report. Any stage failure
/// aborts the run.
pub fn run_analysis(config: &AnalysisConfig, data: &PanelDataset) -> Result<AnalysisReport> {
    config.validate()?;
    let prepared = prepare(config, data)?;

    let unit_roots = if config.unit_root {
        Some(unit_root_section(config, &prepared)?)
    } else {
        None
    };

    let mut modes = config.modes.clone();
    modes.sort();
    let fits = modes
        .iter()
        .map(|&m| fit_mode(config, &prepared, m))
        .collect::<Result<Vec<_>>>()?;

    let mut spec_tests = Vec::new();
    let mut model_choice = Vec::new();
    let mut estimates = Vec::new();
    let mut combined = Vec::new();
    for f in &fits {
        let row = spec_tests_for(f)?;
        let choice = select_model(
            &row.redundant_chi2,
            &row.breusch_pagan,
            Some(&row.hausman),
            config.level,
        )
        .map_err(|e| e.in_stage("model selection", format!("{} model", f.mode.code())))?;
        model_choice.push(ModeChoice {
            mode: f.mode,
            choice,
        });
        spec_tests.push(row);

        for result in [&f.pooled, &f.fixed, &f.random] {
            if !shown(config, result.kind) {
                continue;
            }
            let column = model_column(f.mode, result).map_err(|e| {
                e.in_stage(
                    "combined coefficients",
                    format!("{} {}", f.mode.code(), result.kind.label()),
                )
            })?;
            for s in &column.sums {
                let tranquil = column
                    .coefficient(&s.first)
                    .expect("sum parts are coefficients");
                let interaction = column
                    .coefficient(&s.second)
                    .expect("sum parts are coefficients");
                combined.push(CombinedEntry {
                    mode: f.mode,
                    estimator: result.kind,
                    term: tranquil.label.clone(),
                    tranquil: tranquil.clone(),
                    interaction: interaction.clone(),
                    recession: s.clone(),
                });
            }
            estimates.push(column);
        }
    }

    let periods = data.periods();
    Ok(AnalysisReport {
        provenance: Provenance {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            generated_at: None,
            n_entities: data.n_entities(),
            n_periods: data.n_periods(),
            first_period: *periods
                .first()
                .ok_or_else(|| Error::Degenerate("panel has no periods".into()))?,
            last_period: *periods.last().expect("non-empty"),
            balanced: data.balanced(),
            cpi_shift: prepared.cpi_shift,
            unemployment_shift: prepared.unemployment_shift,
            lambda: prepared.lambda,
        },
        unit_roots,
        spec_tests,
        estimates,
        model_choice,
        combined,
    })
}
