//! Scenario ingestion, pipeline orchestration, experiments and export.

pub mod experiments;
pub mod export;
pub mod pipeline;
pub mod scenario;
