//! Closed-form theory of linear masked autoencoders, with the oracles and
//! measurement procedures needed to validate it.
//!
//! The library is organized around the pipeline
//!
//! ```text
//! correlation  ->  solutions  ->  analysis / gabor
//!     |               ^
//!     v               |
//!  masking  <---  matrix / layout
//! ```
//!
//! * [`matrix`]: dense symmetric linear algebra: block-diagonal extraction,
//!   PSD factorization, and the generalized symmetric eigensolver.
//! * [`layout`]: patch layouts (1-D rings, 2-D grids) and spatial metrics.
//! * [`correlation`]: Ising and Gaussian data generators, empirical
//!   second-moment matrices, spatial autocorrelation.
//! * [`solutions`]: the marginal masked-reconstruction loss and the optimal
//!   encoder/decoder in closed form (MAE, AE, DAE, arbitrary critical points).
//! * [`masking`]: patch-level Bernoulli masks and the Monte-Carlo loss oracle.
//! * [`trainer`]: gradient-descent oracles (linear full-batch, small MLP) and
//!   Jacobian extraction.
//! * [`analysis`]: Jacobian kernel profiles, spatial entropy, boundary
//!   emphasis.
//! * [`spectrum`]: DFTs of patch masks and the closed-form pulse spectrum.
//! * [`gabor`]: Gabor feature targets and the ridge-readout task sweep.
//! * [`io`]: stable CSV/JSON serialization for all of the above.
//!
//! Everything is deterministic given explicit seeds: samplers derive
//! per-chunk RNG streams from `(seed, chunk_index)` so results do not depend
//! on thread count. Compile with `--no-default-features` to drop the rayon
//! dependency entirely; the sequential fallback produces bit-identical
//! output.

pub mod analysis;
pub mod correlation;
pub mod error;
pub mod exec;
pub mod gabor;
pub mod io;
pub mod layout;
pub mod masking;
pub mod matrix;
pub mod solutions;
pub mod spectrum;
pub mod trainer;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
