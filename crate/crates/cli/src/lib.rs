//! File formats, provider gateway and stage driver for task exposure analysis.

pub mod agreement;
pub mod corpus;
pub mod gateway;
pub mod prompts;
pub mod config;
pub mod artifacts;
pub mod extract;
pub mod records;
pub mod pipeline;
pub mod report;
pub mod demo;
