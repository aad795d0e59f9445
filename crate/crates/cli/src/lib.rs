//! Driver for the `kerr-ergo-core` numerics: run configuration, simulation
//! and analysis pipelines, persistence, manifests and the regime table.
//!
//! The `kerr-ergo` binary exposes five subcommands:
//!
//! - `simulate` — propagate an initial state and write `⟨N⟩`, `⟨b†b⟩`
//!   (and optionally the entanglement entropy) as binary series;
//! - `analyze` — run spectrum, embedding, Lyapunov and recurrence analyses
//!   on a series file and write plot-ready tables;
//! - `table1` — simulate and classify a grid of cases concurrently;
//! - `classical` — integrate the classical limit and analyse `H₁(t)`;
//! - `fixtures` — write test signals with known exponents.
//!
//! Every command writes a JSON manifest that pins each automatically chosen
//! parameter; `--from-manifest` replays it and checks that outputs are
//! bit-identical.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod io;
pub mod manifest;
pub mod simulate;
pub mod tables;
pub mod verdict;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use verdict::{Verdict, VerdictRule};
