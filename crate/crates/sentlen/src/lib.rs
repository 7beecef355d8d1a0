//! File formats, reports and the command line around `sentlen-core`.
//!
//! | module | contents |
//! |--------|----------|
//! | [`io`] | reading corpora and `length<TAB>count` tables |
//! | [`model_file`] | the `key = value` model format |
//! | [`report`] | TSV reports |
//! | [`manifest`] | run manifests |
//! | [`parallel`] | multi-threaded fitting and scoring |
//! | [`cli`] | the `sentlen` command |

pub mod cli;
pub mod io;
pub mod manifest;
pub mod model_file;
pub mod parallel;
pub mod report;

pub use sentlen_core as core;
