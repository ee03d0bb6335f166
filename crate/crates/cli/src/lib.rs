//! Library surface of the command-line front end; the binary is a thin
//! dispatcher over these modules.

pub mod commands;
pub mod csvout;
pub mod formats;
pub mod runner;
pub mod summary;
pub mod svg;
