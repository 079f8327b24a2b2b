//! Spoken-language NLP toolkit: transcript normalization, BPE, arc-eager
//! parsing with a dynamic oracle, SLU concept scoring and text
//! classification.

pub mod bpe;
pub mod classif;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod metrics;
pub mod neural;
pub mod normalize;
pub mod parser;
pub mod slu;
pub mod toy;
pub mod transition;
pub mod verify;

pub use error::{Error, Result};
