//! Batch analytics for bilateral trade data built around the product space.
//!
//! The pipeline runs in module order: [`trade_data`] turns raw trade records
//! into per-year export matrices, [`metrics`] derives the matrix family
//! (RCA, the binary M-matrix, proximity, density, reflections,
//! sophistication), [`product_space`] builds, sweeps and lays out the
//! thresholded graph, [`views`] produces country tables and node
//! annotations, and [`integration`] evaluates regional-integration
//! scenarios. [`cache`] holds the on-disk formats shared by the CLI stages.

pub mod cache;
pub mod integration;
pub mod metrics;
pub mod product_space;
pub mod trade_data;
pub mod views;

pub use integration::{
    DensityDelta, MemberScenario, RankedGain, ScenarioMode, ScenarioResult, ScenarioSpec,
    SectorFractions,
};
pub use metrics::{
    ConvergenceReport, DensityVector, ExportShares, MMatrix, ProximityMatrix, RcaMatrix,
    ReflectionsState, SophisticationVector,
};
pub use product_space::{
    GraphFormat, LayoutResult, PercolationPoint, SpaceEdge, SpaceGraph, SpaceNode, ThresholdRule,
};
pub use trade_data::{
    CountryRegistry, ExportMatrix, IngestFormat, IngestReport, MatrixReport, ProductRegistry,
    RowError, SectorClass, TradeRecord,
};
pub use views::{
    Growth, NodeAnnotation, ScatterOwner, ScatterPoint, TableInputs, TableRow, TableSort, Tier,
};
