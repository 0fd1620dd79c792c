//! Stable and semi-stable simple/weighted random sampling for continuously
//! refreshed samples.
//!
//! A query sample that is redrawn every period wastes relevance judgments;
//! one that never changes goes stale and invites overfitting. This crate
//! implements the middle ground: per-query uniforms come from seeded
//! hashing, so a query that persists across periods keeps its uniform (and
//! its Efraimidis–Spirakis order key tracks its current weight), while a
//! rolling seed pair regenerates a controlled fraction of uniforms each
//! period. The result is a valid SRS/WRS sample per period with tunable
//! overlap between consecutive samples.
//!
//! Modules:
//! - [`keys`]: hashing to uniforms, order keys, seeds.
//! - [`sampler`]: policies, the rolling-seed state machine, top-N draws.
//! - [`analytics`]: overlap / judgment load / CDF reports, the analytic
//!   churn model, and the exact inclusion-probability oracle.
//! - [`simulate`]: synthetic populations, timeline runs, and the
//!   approach-comparison harness.
//! - [`io`]: TSV/TOML/CSV file formats.
//! - [`stats`]: the fixed-threshold statistical checks the tests rely on.
//!
//! With the default `parallel` feature, population keying, Monte Carlo
//! trials and population generation run data-parallel under rayon;
//! `--no-default-features` swaps in sequential fallbacks with identical
//! outputs.

pub mod analytics;
mod error;
mod exec;
pub mod io;
pub mod keys;
pub mod sampler;
pub mod simulate;
pub mod stats;

pub use error::Error;
pub use keys::{es_order_key, new_seed, refresh_hash, sample_hash};
pub use keys::{OrderKey, Seed, UnitUniform, Weight};
pub use sampler::{
    replace_random_subset_baseline, Mode, PopulationSnapshot, Rational, Sample, SamplerState,
    SamplingPolicy, Variant,
};
