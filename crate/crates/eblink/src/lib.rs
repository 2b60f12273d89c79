//! Empirical-Bayes entity resolution: link and de-duplicate records across
//! lists by Gibbs-sampling a latent-entity model whose priors are the
//! empirical distributions of the observed field values.
//!
//! The pieces, bottom to top:
//!
//! - [`model`]: schemas, interned datasets, hyperparameters, the latent
//!   linkage state, and the unnormalized log joint posterior.
//! - [`strdist`]: string distances and the precomputed per-field distance,
//!   kernel, and normalizer tables.
//! - [`gibbs`]: the four-block Gibbs sampler, plus an exact enumeration
//!   oracle for tiny instances ([`gibbs::exact`]).
//! - [`linkage`]: posterior match probabilities and the transitive
//!   shared-MPMMS point estimate.
//! - [`eval`]: pair-level error metrics, matching baselines, posterior
//!   summaries, and convergence diagnostics.
//! - [`klbounds`]: numerical verification of the divergence identities and
//!   bounds satisfied by the model's observation distributions.
//! - [`synth`]: a seeded generator of benchmark-style datasets with ground
//!   truth.
//! - [`io`]: CSV/schema ingestion and the on-disk sample-log format.
//! - [`cli`]: the `eblink` command-line surface over all of the above.
//!
//! The `examples/` directory walks through each capability end to end; start
//! with `examples/synthetic_pipeline.rs`.

pub mod cli;
pub mod eval;
pub mod gibbs;
pub mod io;
pub mod klbounds;
pub mod linkage;
pub mod model;
pub mod rng;
pub mod strdist;
pub mod synth;

pub use eval::{confusion_counts, fdr, fnr, ConfusionCounts};
pub use gibbs::{run_sampler, SampleLog, Sampler, SamplerConfig};
pub use linkage::{shared_mpmms_linkage, LinkagePartition};
pub use model::{Dataset, FieldKind, FieldSpec, Hyperparams, LatentState, Schema};
pub use strdist::{edit_distance, jaro_winkler_distance, FieldTables, StringDistance};
pub use synth::GenConfig;
