pub mod arch;
pub mod checkpoint;
pub mod cli;
pub mod diff;
pub mod error;
pub mod inference;
pub mod metrics;
pub mod morphology;
pub mod phantom;
pub mod pipeline;
pub mod selfcheck;
pub mod training;
pub mod volume;

pub use error::{Error, Result};
