//! File formats, synthetic data, benchmark orchestration and the command-line
//! front end for `kde-coreset`.

pub mod bench;
pub mod cli;
pub mod io;
pub mod synthetic;
