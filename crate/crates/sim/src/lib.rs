//! Monte-Carlo experiments, file formats and the command-line front end
//! around [`irsopt_core`].

pub mod cli;
pub mod config;
pub mod harness;
pub mod io;

pub use irsopt_core as core;
