//! Financial viability assessment of precision-agriculture technologies on a farm.
//!
//! The crate builds differential cash flows from benefit percentages and farm cost
//! data, scales investments with farm size and reports NPV, IRR, BCR and physical
//! input savings per technology option and for the whole portfolio.

pub mod catalog;
pub mod domain;
pub mod evaluate;
pub mod finance;
pub mod report;
pub mod store;

pub use catalog::{load_catalog, Catalog, CatalogError};
pub use domain::{validate_scenario, FarmScenario, Violation};
pub use evaluate::{evaluate, EvaluationError, EvaluationResult};
pub use report::{render_report, ReportFormat};
pub use store::{RunStore, SavedRun, ScenarioStore, StoreError};
