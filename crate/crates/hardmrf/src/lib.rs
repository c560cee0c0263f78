//! File formats, the experiment harness and the command-line front end for
//! [`hardmrf_core`].

pub mod cli;
pub mod experiment;
pub mod formats;
