pub mod attribution;
pub mod classifier;
pub mod corpus;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod lexicon;
pub mod matching;
pub mod pipeline;
pub mod screening;
pub mod seed;
pub mod synth;
pub mod text;

pub use error::{Error, ErrorClass, Result};
