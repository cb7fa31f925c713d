//! Constraint-driven sentence generation over multi-valued decision diagrams.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`corpus`]: tokenize sentences, extract n-grams with sentence start/end
//!    flags and filter them against a [`lexicon::Lexicon`].
//! 2. [`ngram_index`]: store the surviving n-grams in a depth-n trie that
//!    answers successor queries.
//! 3. [`model`]: describe the sentence shape (n-gram chaining, character
//!    knapsacks, syllable meter, per-position unary rules).
//! 4. [`compile`]: build the reduced cost-MDD whose paths are exactly the
//!    sentences satisfying the model.
//! 5. [`curation`]: score the enumerated sentences by perplexity and rank them.
//!
//! [`pipeline`] glues the stages together through plain files, and the
//! `mddgen` binary exposes them as subcommands.

pub mod compile;
pub mod corpus;
pub mod curation;
pub mod error;
pub mod lexicon;
pub mod mdd;
pub mod model;
pub mod ngram_index;
pub mod pipeline;

pub use compile::{compile, refine, CompileOptions, CompileStats};
pub use corpus::{extract_ngrams, filter_ngrams, tokenize_sentence, NgramRecord, COMMA};
pub use curation::{ppl, rank, NgramLanguageModel, ScoredSentence};
pub use error::{Error, Result};
pub use lexicon::Lexicon;
pub use mdd::{Mdd, PathCost};
pub use model::{ConstraintModel, RadnerVariant, UnaryConstraint, ValidationReport};
pub use ngram_index::NgramIndex;
