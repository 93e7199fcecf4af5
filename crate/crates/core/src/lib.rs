//! Corpus construction and machine-translation evaluation for low-resource
//! language triples.
//!
//! The pipeline runs text cleaning and segmentation ([`textprep`]),
//! verse-keyed and embedding-based alignment ([`verses`], [`align`]),
//! subword vocabulary learning ([`bpe`]), holdout splitting and training-set
//! assembly ([`experiments`]) and scoring ([`metrics`]) over a shared data
//! model ([`corpus`]).

pub mod align;
pub mod bpe;
pub mod corpus;
pub mod experiments;
pub mod lang;
pub mod metrics;
pub mod textprep;
pub mod verses;

pub use corpus::{Corpus, ParallelUnit, Sentence};
pub use lang::{Direction, LangTag, Origin, Source};
