//! Preregistration documents, data file formats and report artifacts.
//!
//! The file layouts here are this toolkit's own; see the README for schemas.

pub mod formats;
pub mod measurements;
pub mod prereg;
pub mod report;
pub mod table;

pub use measurements::{parse_measurements, Dataset, MeasurementSet, RomOverlayRow};
pub use prereg::{document_digest, load_preregistration, verify_prereg_binding, BandRef, BindingReport, MeasurementStamp, Preregistration};
pub use report::{emit_report, Analyses, ReportBundle, RunManifest};
pub use table::Table;
