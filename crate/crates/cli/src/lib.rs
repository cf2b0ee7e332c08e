//! Command-line front end: distance scans, PNR/threshold comparison and the
//! closed-form verification report.

pub mod cli;
pub mod commands;
pub mod config;
pub mod table;
