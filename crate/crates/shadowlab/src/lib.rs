//! Command-line runner, file formats and parallel drivers for shadow-estimation experiments.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod output;
pub mod parallel;
pub mod svg;
