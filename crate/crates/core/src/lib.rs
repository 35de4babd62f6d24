//! Energy-harvesting sensor/host simulation with recoverable coreset codecs.

pub mod cli;
pub mod coreset;
pub mod dataio;
pub mod energy;
pub mod error;
pub mod inference;
pub mod recovery;
pub mod sim;

pub use error::{Error, Result};
