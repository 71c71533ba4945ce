//! Language-fairness evaluation for multilingual retrieval.
//!
//! The central measure is PEER, the probability of equal expected rank: for
//! every query and relevance grade, the ranks of the judged documents are
//! grouped by language and a Kruskal-Wallis test asks whether the languages
//! share the same expected rank. A high p-value means the ranking gives no
//! evidence of preferring one language. Per-grade p-values are weighted into
//! a per-query score and averaged over queries.
//!
//! Alongside PEER the crate computes nDCG, Recall, alpha-nDCG (with language
//! as the aspect) and AWRF, and generates synthetic ranked lists with known
//! fairness patterns.
//!
//! ```
//! use peerkit::io::parse_measure_spec;
//! use peerkit::synth::gen_interleaving;
//!
//! // A, B, A, B, A, B, A: both languages have mean rank 4.
//! let data = gen_interleaving(7)?;
//! let specs = [parse_measure_spec("PEER@20")?];
//! let report = peerkit::evaluate(&data.run, &data.qrels, &data.langmap, &specs)?;
//! assert_eq!(report.measures[0].aggregate, 1.0);
//! # Ok::<(), peerkit::Error>(())
//! ```
//!
//! The guide in `book/` walks through each part in more depth.

pub mod baselines;
pub mod cli;
mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod peer;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use eval::evaluate;
pub use model::{DocId, Grade, Language, LanguageMap, QrelsStore, QueryId, RankMode, RankedList, RunStore};
pub use peer::{peer_aggregate, PeerOptions, PeerScore};
