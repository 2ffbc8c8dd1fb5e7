pub mod check;
pub mod chebyshev;
pub mod design;
pub mod error;
pub mod ga;
pub mod interval;
pub mod oracle;
pub mod problems;
pub mod regression;
pub mod report;
pub mod surrogate;

pub use error::{Error, Result};
