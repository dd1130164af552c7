//! Configuration parsing and output emission for the airborne QKD
//! simulator command line.

pub mod config;
pub mod emit;
