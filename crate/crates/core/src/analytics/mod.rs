//! Structural and temporal metrics over sealed ecosystem graphs.
//!
//! Every function here is a pure read-only computation over a sealed
//! graph, so any of them can run concurrently on the same graph.

mod bypass;
mod components;
mod reach;
mod shock;

use thiserror::Error;

pub use bypass::{detect_bypasses, detect_bypasses_with, BypassMotif, DEFAULT_BYPASS_WINDOW_DAYS};
pub use components::{components_at, components_over_time, components_over_time_with, Component, ComponentReport, DisjointSets};
pub use reach::{
    link_growth, one_click_reach, platform_connectivity, ConnectivityReport, KindGrowth, LinkGrowth,
    PlatformDegree, ReachReport, STEADY_R_SQUARED,
};
pub(crate) use reach::platforms_by_core_membership;
pub use shock::{
    category_series, shock_response, CategorySeries, ShockReport, Verdict, HUGE_RATIO, LATENCY_SIGMAS,
    MINOR_RATIO,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
