pub mod cli;
pub mod datatools;
pub mod error;
pub mod feature_select;
pub mod neuralnet;
pub mod numerics;
pub mod par;
pub mod pccdnas;
pub mod report;

pub use error::{Error, Result};
