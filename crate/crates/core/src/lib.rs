//! Promotion guard and release report generation for a Tekton catalog
//! repository with development, staging and production branches.

pub mod cli;
pub mod collector;
pub mod filter;
pub mod git;
pub mod guard;
pub mod pipelines;
pub mod promotion;
pub mod report;
pub mod summarizer;
pub mod tasks;

#[doc(hidden)]
pub mod testutil;
