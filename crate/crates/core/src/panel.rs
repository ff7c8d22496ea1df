//! Entity × period panel storage and CSV ingestion.
//!
//! A [`PanelDataset`] keeps one [`Grid`] per variable. Every grid covers the
//! full entity × period rectangle; missing observations are explicit holes
//! (`None`) rather than absent rows.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names of the input CSV, in order.
pub const CSV_HEADER: [&str; 6] = [
    "entity",
    "period",
    "cpi",
    "expected_cpi",
    "unemployment",
    "gdp_growth",
];

/// Names of the numeric variables carried by the input CSV.
pub const CSV_VARIABLES: [&str; 4] = ["cpi", "expected_cpi", "unemployment", "gdp_growth"];

/// A calendar quarter, e.g. `1980Q1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    pub quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Domain(format!(
                "quarter must be in 1..=4, got {quarter}"
            )));
        }
        Ok(Self { year, quarter })
    }

    /// Quarters elapsed since year 0, Q1.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(4) as i32;
        let quarter = (ordinal.rem_euclid(4) + 1) as u8;
        Self { year, quarter }
    }

    pub fn next(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    /// `count` consecutive quarters starting at `self`.
    pub fn range(self, count: usize) -> Vec<Quarter> {
        (0..count as i64)
            .map(|i| Self::from_ordinal(self.ordinal() + i))
            .collect()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("`{s}` is not a YYYYQn quarter"));
        let (year, q) = s.trim().split_once('Q').ok_or_else(bad)?;
        if year.len() != 4 || q.len() != 1 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let quarter: u8 = q.parse().map_err(|_| bad())?;
        Quarter::new(year, quarter).map_err(|_| bad())
    }
}

/// One variable observed on the entity × period rectangle, row-major by entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_entities: usize,
    n_periods: usize,
    cells: Vec<Option<f64>>,
}

impl Grid {
    pub fn holes(n_entities: usize, n_periods: usize) -> Self {
        Self {
            n_entities,
            n_periods,
            cells: vec![None; n_entities * n_periods],
        }
    }

    /// Builds a grid from per-entity rows. All rows must share one length.
    pub fn from_rows(rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n_entities = rows.len();
        let n_periods = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_periods) {
            return Err(Error::Domain("grid rows differ in length".into()));
        }
        Ok(Self {
            n_entities,
            n_periods,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_entities(&self) -> usize {
        self.n_entities
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn get(&self, entity: usize, period: usize) -> Option<f64> {
        self.cells[entity * self.n_periods + period]
    }

    pub fn set(&mut self, entity: usize, period: usize, value: Option<f64>) {
        self.cells[entity * self.n_periods + period] = value;
    }

    /// The time series of one entity.
    pub fn row(&self, entity: usize) -> &[Option<f64>] {
        let start = entity * self.n_periods;
        &self.cells[start..start + self.n_periods]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<f64>]> {
        (0..self.n_entities).map(move |e| self.row(e))
    }

    pub fn has_holes(&self) -> bool {
        self.cells.iter().any(Option::is_none)
    }

    pub fn is_all_holes(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }

    /// Smallest observed value, ignoring holes.
    pub fn min(&self) -> Option<f64> {
        self.cells.iter().flatten().copied().reduce(f64::min)
    }

    /// Applies `f` to each entity's row independently.
    pub fn map_rows<F>(&self, mut f: F) -> Result<Grid>
    where
        F: FnMut(usize, &[Option<f64>]) -> Result<Vec<Option<f64>>>,
    {
        let mut cells = Vec::with_capacity(self.cells.len());
        for e in 0..self.n_entities {
            let out = f(e, self.row(e))?;
            if out.len() != self.n_periods {
                return Err(Error::Domain(
                    "row transform changed the series length".into(),
                ));
            }
            cells.extend(out);
        }
        Ok(Grid {
            n_entities: self.n_entities,
            n_periods: self.n_periods,
            cells,
        })
    }

    /// Elementwise value map; holes stay holes.
    pub fn map_values<F>(&self, mut f: F) -> Result<Grid>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let cells = self
            .cells
            .iter()
            .map(|c| c.map(&mut f).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(Grid { cells, ..*self })
    }
}

/// Balanced or unbalanced panel of named series.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    entities: Vec<String>,
    periods: Vec<Quarter>,
    series: BTreeMap<String, Grid>,
    balanced: bool,
}

impl PanelDataset {
    /// Validates the shape invariants and computes the balanced flag over
    /// every variable present.
    pub fn new(
        entities: Vec<String>,
        periods: Vec<Quarter>,
        series: BTreeMap<String, Grid>,
    ) -> Result<Self> {
        if periods
            .windows(2)
            .any(|w| w[1].ordinal() != w[0].ordinal() + 1)
        {
            return Err(Error::Domain(
                "periods must be strictly increasing and gap-free".into(),
            ));
        }
        for (name, grid) in &series {
            if grid.n_entities() != entities.len() || grid.n_periods() != periods.len() {
                return Err(Error::Domain(format!(
                    "series `{name}` is {}x{}, panel is {}x{}",
                    grid.n_entities(),
                    grid.n_periods(),
                    entities.len(),
                    periods.len()
                )));
            }
        }
        let balanced = !series.values().any(Grid::has_holes);
        Ok(Self {
            entities,
            periods,
            series,
            balanced,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn periods(&self) -> &[Quarter] {
        &self.periods
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn balanced(&self) -> bool {
        self.balanced
    }

    /// True when none of `variables` has a hole.
    pub fn balanced_for<S: AsRef<str>>(&self, variables: &[S]) -> bool {
        variables
            .iter()
            .all(|v| self.series.get(v.as_ref()).is_some_and(|g| !g.has_holes()))
    }

    pub fn series(&self, name: &str) -> Result<&Grid> {
        self.series
            .get(name)
            .ok_or_else(|| Error::Spec(format!("unknown variable `{name}`")))
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// Returns a copy with `grid` added (or replaced) under `name`.
    pub fn with_series(&self, name: impl Into<String>, grid: Grid) -> Result<Self> {
        let mut series = self.series.clone();
        series.insert(name.into(), grid);
        Self::new(self.entities.clone(), self.periods.clone(), series)
    }
}

/// Reads the documented CSV schema into a panel.
///
/// Entities are sorted lexicographically; the period axis spans the earliest
/// to the latest quarter seen, and (entity, period) pairs without a row
/// become holes.
pub fn ingest_csv<R: Read>(source: R) -> Result<PanelDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers().map_err(|e| Error::Ingest {
        row: 1,
        column: String::new(),
        message: e.to_string(),
    })?;
    let found: Vec<&str> = header.iter().collect();
    if found != CSV_HEADER {
        return Err(Error::Ingest {
            row: 1,
            column: found.join(","),
            message: format!("header must be `{}`", CSV_HEADER.join(",")),
        });
    }

    type Row = [Option<f64>; 4];
    let mut rows: BTreeMap<String, BTreeMap<Quarter, Row>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Ingest {
            row: line,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::Ingest {
                row: line,
                column: String::new(),
                message: format!(
                    "expected {} fields, found {}",
                    CSV_HEADER.len(),
                    record.len()
                ),
            });
        }
        let entity = record[0].to_string();
        if entity.is_empty() {
            return Err(Error::Ingest {
                row: line,
                column: "entity".into(),
                message: "empty entity code".into(),
            });
        }
        let period: Quarter = record[1].parse().map_err(|e: Error| Error::Ingest {
            row: line,
            column: "period".into(),
            message: e.to_string(),
        })?;
        let mut values: Row = [None; 4];
        for (slot, (name, raw)) in values
            .iter_mut()
            .zip(CSV_VARIABLES.iter().zip(record.iter().skip(2)))
        {
            if raw.is_empty() {
                continue;
            }
            let v: f64 = raw.parse().map_err(|_| Error::Ingest {
                row: line,
                column: (*name).into(),
                message: format!("`{raw}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingest {
                    row: line,
                    column: (*name).into(),
                    message: format!("`{raw}` is not finite"),
                });
            }
            *slot = Some(v);
        }
        if rows
            .entry(entity.clone())
            .or_default()
            .insert(period, values)
            .is_some()
        {
            return Err(Error::Ingest {
                row: line,
                column: "period".into(),
                message: format!("duplicate row for ({entity}, {period})"),
            });
        }
    }

    let first = rows.values().flat_map(|m| m.keys()).min().copied();
    let last = rows.values().flat_map(|m| m.keys()).max().copied();
    let periods = match (first, last) {
        (Some(a), Some(b)) => a.range((b.ordinal() - a.ordinal() + 1) as usize),
        _ => Vec::new(),
    };
    let entities: Vec<String> = rows.keys().cloned().collect();

    let mut grids: Vec<Grid> = (0..CSV_VARIABLES.len())
        .map(|_| Grid::holes(entities.len(), periods.len()))
        .collect();
    let origin = periods.first().map_or(0, |q| q.ordinal());
    for (e, by_period) in rows.values().enumerate() {
        for (q, values) in by_period {
            let t = (q.ordinal() - origin) as usize;
            for (grid, v) in grids.iter_mut().zip(values) {
                grid.set(e, t, *v);
            }
        }
    }
    let series = CSV_VARIABLES
        .iter()
        .map(|s| s.to_string())
        .zip(grids)
        .collect();
    PanelDataset::new(entities, periods, series)
}

/// Writes the CSV columns of `data` in the ingest schema. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &PanelDataset, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let to_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    writer.write_record(CSV_HEADER).map_err(to_err)?;
    let empty = Grid::holes(data.n_entities(), data.n_periods());
    let grids: Vec<&Grid> = CSV_VARIABLES
        .iter()
        .map(|v| data.series.get(*v).unwrap_or(&empty))
        .collect();
    for (e, entity) in data.entities.iter().enumerate() {
        for (t, period) in data.periods.iter().enumerate() {
            let mut record = vec![entity.clone(), period.to_string()];
            record.extend(
                grids
                    .iter()
                    .map(|g| g.get(e, t).map_or_else(String::new, |v| v.to_string())),
            );
            writer.write_record(&record).map_err(to_err)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "entity,period,cpi,expected_cpi,unemployment,gdp_growth\n";

    #[test]
    fn quarter_parse_and_display() {
        let q: Quarter = "1980Q1".parse().unwrap();
        assert_eq!(
            q,
            Quarter {
                year: 1980,
                quarter: 1
            }
        );
        assert_eq!(q.to_string(), "1980Q1");
        assert_eq!(Quarter::new(1980, 4).unwrap().next().to_string(), "1981Q1");
        for bad in ["1980Q5", "1980Q0", "80Q1", "1980-01", "1980q1", "1980Q"] {
            assert!(bad.parse::<Quarter>().is_err(), "{bad}");
        }
    }

    #[test]
    fn two_rows_one_entity() {
        let csv = format!("{HEADER}US,1980Q1,100,2.0,5.5,0.4\nUS,1980Q2,101,2.1,5.6,-0.2\n");
        let d = ingest_csv(csv.as_bytes()).unwrap();
        assert_eq!(d.n_entities(), 1);
        assert_eq!(d.n_periods(), 2);
        assert!(d.balanced());
        assert_eq!(d.series("cpi").unwrap().get(0, 1), Some(101.0));
    }

    #[test]
    fn empty_cell_is_a_hole() {
        let csv = format!("{HEADER}US,1980Q1,,2.0,5.5,0.4\nUS,1980Q2,101,2.1,5.6,-0.2\n");
        let d = ingest_csv(csv.as_bytes()).unwrap();
        assert!(!d.balanced());
        assert_eq!(d.series("cpi").unwrap().get(0, 0), None);
        assert!(d.balanced_for(&["unemployment"]));
        assert!(!d.balanced_for(&["cpi", "unemployment"]));
    }

    #[test]
    fn missing_rows_become_holes_and_entities_sort() {
        let csv = format!("{HEADER}US,1980Q1,1,1,1,1\nDE,1980Q1,1,1,1,1\nUS,1980Q3,1,1,1,1\n");
        let d = ingest_csv(csv.as_bytes()).unwrap();
        assert_eq!(d.entities(), ["DE", "US"]);
        assert_eq!(d.n_periods(), 3);
        let cpi = d.series("cpi").unwrap();
        assert_eq!(cpi.row(1), &[Some(1.0), None, Some(1.0)]);
        assert_eq!(cpi.row(0), &[Some(1.0), None, None]);
    }

    #[test]
    fn ingest_errors_name_the_location() {
        let bad_header = "entity,period,cpi\nUS,1980Q1,1\n";
        assert!(matches!(
            ingest_csv(bad_header.as_bytes()),
            Err(Error::Ingest { row: 1, .. })
        ));

        let bad_period = format!("{HEADER}US,1980Q1,1,1,1,1\nUS,1980-2,1,1,1,1\n");
        match ingest_csv(bad_period.as_bytes()) {
            Err(Error::Ingest { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "period");
            }
            other => panic!("{other:?}"),
        }

        let dup = format!("{HEADER}US,1980Q1,1,1,1,1\nUS,1980Q1,2,1,1,1\n");
        assert!(matches!(
            ingest_csv(dup.as_bytes()),
            Err(Error::Ingest { row: 3, .. })
        ));

        let nonnum = format!("{HEADER}US,1980Q1,1,abc,1,1\n");
        match ingest_csv(nonnum.as_bytes()) {
            Err(Error::Ingest { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "expected_cpi");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_then_ingest_round_trips() {
        let csv = format!(
            "{HEADER}US,1980Q1,100.125,,5.5,0.1\nUS,1980Q2,0.30000000000000004,2.1,,-1e-7\n"
        );
        let d = ingest_csv(csv.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_csv(&d, &mut out).unwrap();
        let again = ingest_csv(out.as_slice()).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn dataset_rejects_period_gaps() {
        let periods = vec![
            Quarter::new(1980, 1).unwrap(),
            Quarter::new(1980, 3).unwrap(),
        ];
        assert!(PanelDataset::new(vec!["A".into()], periods, BTreeMap::new()).is_err());
    }
}
