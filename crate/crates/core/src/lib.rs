#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Panel Phillips-curve toolkit.
//!
//! Inflation is regressed on expected inflation and the unemployment gap,
//! with both slopes allowed to shift in recession quarters. The crate covers
//! the whole chain: CSV ingestion and series transforms, HP-filter gaps,
//! ADF / PP unit-root screening, pooled / fixed / random-effects estimation
//! with White covariance, the specification-test battery and the model
//! choice it implies, plus a synthetic-panel generator and report rendering.

pub mod config;
pub mod design;
pub mod error;
pub mod estimators;
pub mod hp;
pub mod linalg;
pub mod panel;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod stats;
pub mod transform;
pub mod unit_root;

pub use config::AnalysisConfig;
pub use error::{Error, ErrorClass, Result};
pub use panel::{ingest_csv, write_csv, PanelDataset};
pub use pipeline::run_analysis;
pub use report::{render_report, AnalysisReport};
pub use sim::{simulate_panel, SimConfig};
