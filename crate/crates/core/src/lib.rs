extern crate blas_src;

pub mod cli;
pub mod correlations;
pub mod dynamics;
pub mod experiments;
pub mod models;
pub mod qlinalg;
