pub mod classic;
pub mod dataset;
pub mod distributions;
pub mod error;
pub mod hist;
pub mod io;
pub mod normality;
pub mod rank;
pub mod reliability;
pub mod rosenblatt;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
