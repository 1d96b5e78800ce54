//! Distributions over quantities.
//!
//! Extracts measurement mentions from text, normalizes them into ten physical
//! dimensions, folds the co-occurring objects into per-object distributions and
//! answers comparison and range queries over the resulting tables.
//!
//! The pieces compose in order:
//!
//! - [`units`]: dimensions, the unit lexicon, affine normalization.
//! - [`parser`]: the measurement grammar over tokenized sentences.
//! - [`pipeline`]: sentence splitting, tokenization, annotated input, co-occurrence records.
//! - [`aggregate`]: mergeable histogram distributions and the table file format.
//! - [`inference`]: noun and adjective comparisons, decade relaxation.
//! - [`eval`]: comparison datasets, scoring, leakage audits, clean splits.

pub mod aggregate;
pub mod eval;
pub mod inference;
pub mod parser;
pub mod pipeline;
pub mod units;

mod textfmt;

pub use aggregate::{Distribution, DoQTable, Stats, TableConfig};
pub use inference::{CompareConfig, ComparisonLabel};
pub use pipeline::{AnnotatedSentence, CooccurrenceRecord, ExtractionConfig, ObjectKey, Pos};
pub use units::{Dimension, Quantity, UnitDef, UnitRegistry};
