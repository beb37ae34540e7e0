pub mod bsg;
pub mod certificate;
pub mod error;
pub mod exact;
pub mod group;
pub mod oracle;
pub mod pipeline;
pub mod selection;
pub mod strings;

pub use error::{Error, Result};
