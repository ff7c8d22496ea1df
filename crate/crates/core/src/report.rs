//! Analysis report and its text / csv / json renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, OutputFormat};
use crate::design::ExpectationMode;
use crate::error::{Error, Result};
use crate::estimators::{CombinedCoefficient, EstimatorKind, WhiteFlavor};
use crate::hp::NairuSource;
use crate::panel::Quarter;
use crate::spec_tests::{DecisionRow, HausmanResult, ModelChoice, TestResult};
use crate::stats::Distribution;
use crate::transform::RecessionRule;
use crate::unit_root::{UnitRootKind, UnitRootResult};

/// Significance thresholds for one, two and three stars.
pub const STAR_THRESHOLDS: [f64; 3] = [0.10, 0.05, 0.01];

pub fn stars(p: f64) -> &'static str {
    if p < STAR_THRESHOLDS[2] {
        "***"
    } else if p < STAR_THRESHOLDS[1] {
        "**"
    } else if p < STAR_THRESHOLDS[0] {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub software: String,
    pub version: String,
    pub config: AnalysisConfig,
    /// Unix seconds; only set on request so reports stay reproducible.
    pub generated_at: Option<u64>,
    pub n_entities: usize,
    pub n_periods: usize,
    pub first_period: Quarter,
    pub last_period: Quarter,
    pub balanced: bool,
    pub cpi_shift: f64,
    pub unemployment_shift: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootRow {
    pub entity: String,
    /// One cell per (variable, test) in `UnitRootSection` order; `None`
    /// when the series has no observations.
    pub cells: Vec<Option<UnitRootResult>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootSection {
    pub variables: Vec<String>,
    pub tests: Vec<UnitRootKind>,
    pub rows: Vec<UnitRootRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecTestRow {
    pub mode: ExpectationMode,
    pub redundant_chi2: TestResult,
    pub redundant_f: TestResult,
    pub breusch_pagan: TestResult,
    pub honda: TestResult,
    pub hausman: HausmanResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub label: String,
    pub estimate: f64,
    /// White standard error.
    pub std_error: f64,
    pub classical_std_error: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub sigma_u: f64,
    pub sigma_e: f64,
    pub rho_u: f64,
    pub rho_e: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelColumn {
    pub mode: ExpectationMode,
    pub estimator: EstimatorKind,
    pub coefficients: Vec<CoefficientRow>,
    /// Slope plus its recession interaction, White covariance.
    pub sums: Vec<CombinedCoefficient>,
    pub r2_weighted: Option<f64>,
    pub r2_unweighted: f64,
    pub n_obs: usize,
    pub df_resid: usize,
    pub components: Option<ComponentSummary>,
}

impl ModelColumn {
    pub fn coefficient(&self, name: &str) -> Option<&CoefficientRow> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeChoice {
    pub mode: ExpectationMode,
    pub choice: ModelChoice,
}

/// Tranquil slope against its recession counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedEntry {
    pub mode: ExpectationMode,
    pub estimator: EstimatorKind,
    pub term: String,
    pub tranquil: CoefficientRow,
    pub interaction: CoefficientRow,
    pub recession: CombinedCoefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub unit_roots: Option<UnitRootSection>,
    pub spec_tests: Vec<SpecTestRow>,
    pub estimates: Vec<ModelColumn>,
    pub model_choice: Vec<ModeChoice>,
    pub combined: Vec<CombinedEntry>,
}

impl AnalysisReport {
    pub fn column(&self, mode: ExpectationMode, estimator: EstimatorKind) -> Option<&ModelColumn> {
        self.estimates
            .iter()
            .find(|c| c.mode == mode && c.estimator == estimator)
    }

    pub fn choice(&self, mode: ExpectationMode) -> Option<&ModelChoice> {
        self.model_choice
            .iter()
            .find(|c| c.mode == mode)
            .map(|c| &c.choice)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("not a saved report: {e}")))
    }
}

/// Which parts of the text report to print.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Header,
    UnitRoots,
    SpecTests,
    ModelChoice,
    Estimates,
    Combined,
}

pub const ALL_SECTIONS: [Section; 6] = [
    Section::Header,
    Section::UnitRoots,
    Section::SpecTests,
    Section::ModelChoice,
    Section::Estimates,
    Section::Combined,
];

pub fn render_report(report: &AnalysisReport, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Text => Ok(render_text(report, &ALL_SECTIONS).into_bytes()),
        OutputFormat::Csv => render_csv(report),
        OutputFormat::Json => {
            let mut out = serde_json::to_string_pretty(report)
                .map_err(|e| Error::Domain(format!("report is not serializable: {e}")))?;
            out.push('\n');
            Ok(out.into_bytes())
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn cell(estimate: f64, se: f64, p: f64) -> String {
    format!("{}{} ({})", num(estimate), stars(p), num(se))
}

fn test_cell(t: &TestResult) -> String {
    format!("{} ({})", num(t.statistic), num(t.p_value))
}

/// Fixed-width table: first column left-aligned, the rest right-aligned.
fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0; cols];
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (j, c) in row.iter().enumerate() {
            if j == 0 {
                let _ = write!(s, "{c:<w$}", w = width[0]);
            } else {
                let _ = write!(s, "  {c:>w$}", w = width[j]);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    let total = width.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

fn heading(out: &mut String, title: &str) {
    out.push('\n');
    out.push_str(title);
    out.push('\n');
    out.push_str(&"=".repeat(title.chars().count()));
    out.push('\n');
}

fn mode_name(mode: ExpectationMode) -> &'static str {
    match mode {
        ExpectationMode::Backward => "backward-looking",
        ExpectationMode::Forward => "forward-looking",
    }
}

fn header_block(report: &AnalysisReport, out: &mut String) {
    let p = &report.provenance;
    let c = &p.config;
    let _ = writeln!(
        out,
        "Panel Phillips curve analysis ({} {})",
        p.software, p.version
    );
    let _ = writeln!(
        out,
        "Sample: {} entities, {}-{} ({} periods), {}",
        p.n_entities,
        p.first_period,
        p.last_period,
        p.n_periods,
        if p.balanced { "balanced" } else { "unbalanced" }
    );
    let rule = match c.recession_rule {
        RecessionRule::Nonpositive => "growth <= 0",
        RecessionRule::Negative => "growth < 0",
    };
    let _ = writeln!(out, "Recession quarters: {rule}");
    let _ = writeln!(
        out,
        "Log-shift constants: cpi {}, unemployment {}",
        num(p.cpi_shift),
        num(p.unemployment_shift)
    );
    let source = match c.hp.nairu_source {
        NairuSource::Unemployment => "log unemployment",
        NairuSource::Inflation => "inflation",
    };
    let _ = writeln!(
        out,
        "HP smoothing: lambda {}, NAIRU trend of {source}",
        num(p.lambda)
    );
    let white = match c.white {
        WhiteFlavor::Hc0 => "HC0",
        WhiteFlavor::Hc1 => "HC1",
    };
    let _ = writeln!(
        out,
        "White covariance: {white}; fixed effects: {}; significance level {}",
        if c.period_effects {
            "entity and period"
        } else {
            "entity"
        },
        num(c.level)
    );
    if let Some(t) = p.generated_at {
        let _ = writeln!(out, "Generated at unix time {t}");
    }
}

/// Text rendering of a unit-root section on its own.
pub fn render_unit_roots(section: &UnitRootSection) -> String {
    let mut out = String::new();
    unit_root_block(section, &mut out);
    out.trim_start().to_string()
}

pub fn unit_roots_json(section: &UnitRootSection) -> Result<String> {
    let mut s = serde_json::to_string_pretty(section)
        .map_err(|e| Error::Domain(format!("unit-root section is not serializable: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn unit_root_block(section: &UnitRootSection, out: &mut String) {
    heading(out, "Unit root tests");
    out.push_str(
        "Intercept case. Cells: p-value (L: ADF lag, B: PP bandwidth, N: observations).\n\n",
    );
    let mut header = vec!["Entity".to_string()];
    for v in &section.variables {
        for t in &section.tests {
            let name = match t {
                UnitRootKind::Adf => "ADF",
                UnitRootKind::Pp => "PP",
            };
            header.push(format!("{v} {name}"));
        }
    }
    let rows: Vec<Vec<String>> = section
        .rows
        .iter()
        .map(|r| {
            std::iter::once(r.entity.clone())
                .chain(r.cells.iter().map(|c| match c {
                    None => "-".to_string(),
                    Some(u) => {
                        let tag = match u.kind {
                            UnitRootKind::Adf => "L",
                            UnitRootKind::Pp => "B",
                        };
                        format!("{} ({tag}:{} N:{})", num(u.p_value), u.lag, u.n_obs)
                    }
                }))
                .collect()
        })
        .collect();
    out.push_str(&table(&header, &rows));
}

fn spec_test_block(rows: &[SpecTestRow], out: &mut String) {
    heading(out, "Specification tests");
    out.push_str("Cells: statistic (p-value).\n\n");
    let header: Vec<String> = [
        "Model",
        "Redundant FE (Chi2)",
        "Redundant FE (F)",
        "Breusch-Pagan LM",
        "Honda LM",
        "Hausman",
    ]
    .map(String::from)
    .to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut h = test_cell(&r.hausman.test);
            if r.hausman.negative {
                h.push_str(" [negative]");
            }
            vec![
                r.mode.code().to_string(),
                test_cell(&r.redundant_chi2),
                test_cell(&r.redundant_f),
                test_cell(&r.breusch_pagan),
                test_cell(&r.honda),
                h,
            ]
        })
        .collect();
    out.push_str(&table(&header, &body));
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{}: Redundant FE {} and {}; Breusch-Pagan {}; Honda {}; Hausman {}",
            r.mode.code(),
            r.redundant_chi2.distribution.label(),
            r.redundant_f.distribution.label(),
            r.breusch_pagan.distribution.label(),
            r.honda.distribution.label(),
            r.hausman.test.distribution.label()
        );
    }
}

fn choice_block(choices: &[ModeChoice], out: &mut String) {
    heading(out, "Model selection");
    for c in choices {
        let m = &c.choice;
        let verdict = |rejects: bool| {
            if rejects {
                "rejects"
            } else {
                "does not reject"
            }
        };
        let route = match m.row {
            DecisionRow::NoFixedNoRandom => "no fixed and no random effects",
            DecisionRow::FixedOnly => "fixed effects only",
            DecisionRow::RandomOnly => "random effects only",
            DecisionRow::BothHausman => "both effects present, Hausman decides",
        };
        let _ = write!(
            out,
            "{} ({}): {}. {} {}, {} {}",
            c.mode.code(),
            mode_name(c.mode),
            m.selected.label(),
            m.fe_test.name,
            verdict(m.fe_test.rejects(m.level)),
            m.re_test.name,
            verdict(m.re_test.rejects(m.level)),
        );
        if let Some(h) = &m.hausman {
            let _ = write!(out, ", Hausman {}", verdict(h.rejects(m.level)));
        }
        let _ = writeln!(out, " at {} ({route}).", num(m.level));
    }
}

fn estimates_block(columns: &[ModelColumn], out: &mut String) {
    heading(out, "Estimates");
    out.push_str(
        "Cells: coefficient (White standard error). *** p < 0.01, ** p < 0.05, * p < 0.10.\n\
         Sum rows add a slope and its recession interaction; their standard error ignores the covariance.\n\n",
    );
    let mut header = vec!["Variable".to_string()];
    header.extend(
        columns
            .iter()
            .map(|c| format!("{} {}", c.mode.code(), c.estimator.label())),
    );

    let mut names: Vec<(String, String)> = Vec::new();
    for c in columns {
        for r in &c.coefficients {
            if !names.iter().any(|(n, _)| *n == r.name) {
                names.push((r.name.clone(), r.label.clone()));
            }
        }
    }
    let mut rows: Vec<Vec<String>> = names
        .iter()
        .map(|(name, label)| {
            std::iter::once(label.clone())
                .chain(columns.iter().map(|c| {
                    c.coefficient(name)
                        .map_or_else(String::new, |r| cell(r.estimate, r.std_error, r.p_value))
                }))
                .collect()
        })
        .collect();

    let mut sums: Vec<(String, String)> = Vec::new();
    for c in columns {
        for s in &c.sums {
            if !sums.iter().any(|(a, b)| *a == s.first && *b == s.second) {
                sums.push((s.first.clone(), s.second.clone()));
            }
        }
    }
    for (first, second) in &sums {
        let label = columns
            .iter()
            .find_map(|c| c.coefficient(first))
            .map_or(first.clone(), |r| r.label.clone());
        let mut row = vec![format!("{label}, recession (sum)")];
        row.extend(columns.iter().map(|c| {
            c.sums
                .iter()
                .find(|s| s.first == *first && s.second == *second)
                .map_or_else(String::new, |s| {
                    let p = s.p_diagonal.unwrap_or(1.0);
                    cell(s.estimate, s.se_diagonal, p)
                })
        }));
        rows.push(row);
    }

    let stat_row = |label: &str, f: &dyn Fn(&ModelColumn) -> String| {
        std::iter::once(label.to_string())
            .chain(columns.iter().map(f))
            .collect::<Vec<_>>()
    };
    rows.push(stat_row("Weighted R2", &|c| {
        c.r2_weighted.map_or_else(String::new, num)
    }));
    rows.push(stat_row("Unweighted R2", &|c| num(c.r2_unweighted)));
    rows.push(stat_row("Panel observations", &|c| c.n_obs.to_string()));
    rows.push(stat_row("sigma_u rho (sd)", &|c| {
        c.components.as_ref().map_or_else(String::new, |v| {
            format!("{} ({})", num(v.rho_u), num(v.sigma_u))
        })
    }));
    rows.push(stat_row("sigma_e rho (sd)", &|c| {
        c.components.as_ref().map_or_else(String::new, |v| {
            format!("{} ({})", num(v.rho_e), num(v.sigma_e))
        })
    }));
    out.push_str(&table(&header, &rows));
}

fn combined_block(entries: &[CombinedEntry], out: &mut String) {
    heading(out, "Tranquil and recession slopes");
    out.push_str(
        "Recession slope = tranquil slope + interaction. SE (no cov) omits the covariance term; \
         SE (full) includes it. p-values are two-sided normal.\n\n",
    );
    let header: Vec<String> = [
        "Model",
        "Term",
        "Tranquil",
        "Interaction",
        "Recession",
        "SE (no cov)",
        "p (no cov)",
        "SE (full)",
        "p (full)",
    ]
    .map(String::from)
    .to_vec();
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), num);
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let r = &e.recession;
            vec![
                format!("{} {}", e.mode.code(), e.estimator.label()),
                e.term.clone(),
                cell(
                    e.tranquil.estimate,
                    e.tranquil.std_error,
                    e.tranquil.p_value,
                ),
                cell(
                    e.interaction.estimate,
                    e.interaction.std_error,
                    e.interaction.p_value,
                ),
                format!("{}{}", num(r.estimate), stars(r.p_diagonal.unwrap_or(1.0))),
                num(r.se_diagonal),
                opt(r.p_diagonal),
                num(r.se_full),
                opt(r.p_full),
            ]
        })
        .collect();
    out.push_str(&table(&header, &rows));
}

/// Fixed-width text rendering of the chosen sections.
pub fn render_text(report: &AnalysisReport, sections: &[Section]) -> String {
    let mut out = String::new();
    for s in sections {
        match s {
            Section::Header => header_block(report, &mut out),
            Section::UnitRoots => {
                if let Some(u) = &report.unit_roots {
                    unit_root_block(u, &mut out);
                }
            }
            Section::SpecTests => spec_test_block(&report.spec_tests, &mut out),
            Section::ModelChoice => choice_block(&report.model_choice, &mut out),
            Section::Estimates => estimates_block(&report.estimates, &mut out),
            Section::Combined => combined_block(&report.combined, &mut out),
        }
    }
    if out.starts_with('\n') {
        out.remove(0);
    }
    out
}

/// One tidy row per (model, coefficient), sums included.
pub fn render_csv(report: &AnalysisReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Domain(format!("csv rendering failed: {e}"));
    w.write_record([
        "mode",
        "model",
        "term",
        "kind",
        "estimate",
        "std_error",
        "statistic",
        "p_value",
        "stars",
    ])
    .map_err(csv_err)?;
    for c in &report.estimates {
        let model = c.estimator.label();
        for r in &c.coefficients {
            w.write_record([
                c.mode.code(),
                model,
                &r.name,
                "coefficient",
                &num(r.estimate),
                &num(r.std_error),
                &num(r.statistic),
                &num(r.p_value),
                stars(r.p_value),
            ])
            .map_err(csv_err)?;
        }
        for s in &c.sums {
            let p = s.p_diagonal.unwrap_or(1.0);
            w.write_record([
                c.mode.code(),
                model,
                &format!("{}+{}", s.first, s.second),
                "sum",
                &num(s.estimate),
                &num(s.se_diagonal),
                &s.t_diagonal.map_or_else(String::new, num),
                &s.p_diagonal.map_or_else(String::new, num),
                stars(p),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Domain(format!("csv rendering failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.03), "**");
        assert_eq!(stars(0.003), "***");
        assert_eq!(stars(0.2), "");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.10), "");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.01), "**");
    }

    #[test]
    fn table_alignment() {
        let t = table(
            &["a".into(), "bb".into()],
            &[
                vec!["long".into(), "1".into()],
                vec!["x".into(), "22".into()],
            ],
        );
        assert_eq!(t, "a     bb\n--------\nlong   1\nx     22\n");
    }

    #[test]
    fn cells_use_four_decimals() {
        assert_eq!(cell(-0.07, 0.0123456, 0.003), "-0.0700*** (0.0123)");
        assert_eq!(num(1.0), "1.0000");
    }
}
