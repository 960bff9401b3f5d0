//! Tweet promotional-intent classification: lexicon rules plus Naive Bayes.

pub mod bayes;
pub mod cleanse;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod intent;
pub mod lexicon;
pub mod pipeline;
mod textutil;

pub use error::{Error, Result};
