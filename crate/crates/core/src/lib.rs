//! Mining quantum software patterns from framework sources and notebooks.

pub mod concepts;
pub mod embedding;
pub mod fsutil;
pub mod harvest;
pub mod knowledge_base;
pub mod matcher;
pub mod notebook;
pub mod pipeline;
pub mod python;
pub mod report;
