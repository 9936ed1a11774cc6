//! Lossless compression for corpora of small unlabelled (or categorically
//! labelled) graphs.
//!
//! The pipeline partitions every graph into connected blocks of bounded size,
//! maps recurring blocks onto a learned dictionary of subgraph isomorphism
//! classes ("atoms"), and encodes what remains with combinatorial null models.
//! Dictionary membership, atom probabilities and block-count probabilities are
//! trained jointly by minimizing the total two-part description length of the
//! corpus; a byte-exact entropy coder then turns the fitted model into real
//! archives.
//!
//! Modules, roughly in dependency order:
//!
//! * [`bits`] — log-domain combinatorics shared by every length formula.
//! * [`graph`] — graph/corpus types and file formats.
//! * [`canon`] — canonical codes for small graphs (block identity).
//! * [`codelen`] — code-length formulas: null models, partition baseline,
//!   cut encoding, dictionary encoding.
//! * [`partition`] — partitioners producing valid bounded blocks.
//! * [`policy`] — a learnable sequential partition policy.
//! * [`dict`] — the atom universe, membership relaxation and hardening.
//! * [`train`] — the description-length objective, analytic gradients,
//!   REINFORCE, and the training loop.
//! * [`coder`] — range coder and the archive format.
//! * [`theory`] — generators plus checks of the asymptotic bounds on
//!   directed graphs.
//! * [`stats`] — report tables.

pub mod bits;
pub mod canon;
pub mod codelen;
pub mod coder;
pub mod dict;
pub mod error;
pub mod graph;
pub mod partition;
pub mod policy;
pub mod stats;
pub mod theory;
pub mod train;

pub use error::Error;

/// Default cap on block size (vertices per block / atom).
pub const DEFAULT_KMAX: usize = 12;
