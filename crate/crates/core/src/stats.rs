//! Reference distributions for test statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

/// Null distribution of a statistic, with the tail convention baked in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Upper tail of F(d1, d2).
    F { d1: f64, d2: f64 },
    /// Upper tail of chi-square(df).
    ChiSquare { df: f64 },
    /// Upper tail of N(0, 1).
    NormalUpper,
    /// Two-sided N(0, 1).
    NormalTwoSided,
    /// Two-sided Student t(df).
    StudentTwoSided { df: f64 },
}

impl Distribution {
    pub fn p_value(&self, stat: f64) -> f64 {
        let p = match *self {
            Distribution::F { d1, d2 } => {
                if stat <= 0.0 {
                    1.0
                } else {
                    FisherSnedecor::new(d1, d2).map_or(f64::NAN, |d| d.sf(stat))
                }
            }
            Distribution::ChiSquare { df } => {
                if stat <= 0.0 {
                    1.0
                } else {
                    ChiSquared::new(df).map_or(f64::NAN, |d| d.sf(stat))
                }
            }
            Distribution::NormalUpper => normal_sf(stat),
            Distribution::NormalTwoSided => 2.0 * normal_sf(stat.abs()),
            Distribution::StudentTwoSided { df } => {
                StudentsT::new(0.0, 1.0, df).map_or(f64::NAN, |d| 2.0 * d.sf(stat.abs()))
            }
        };
        p.clamp(0.0, 1.0)
    }

    pub fn label(&self) -> String {
        match *self {
            Distribution::F { d1, d2 } => format!("F({d1}, {d2})"),
            Distribution::ChiSquare { df } => format!("Chi2({df})"),
            Distribution::NormalUpper => "N(0,1) upper".into(),
            Distribution::NormalTwoSided => "N(0,1) two-sided".into(),
            Distribution::StudentTwoSided { df } => format!("t({df}) two-sided"),
        }
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn normal_sf(x: f64) -> f64 {
    standard_normal().sf(x)
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}
