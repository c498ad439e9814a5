//! Tail asymptotics of products `XY` under conditional dependence, and the
//! discrete-time risk model driven by such pairs.
//!
//! The crate is organised bottom-up:
//!
//! * [`marginals`]: closed-form univariate laws (tails, quantiles, moments).
//! * [`dependence`]: Sarmanov, Frank, AMH and shift-constructed pairs with
//!   their conditional tails `P(X > x | Y = y)` and adjustment functions `s(y)`.
//! * [`estimators`]: Breiman constants, exact product tails by quadrature,
//!   Monte Carlo tail ratios and the uniformity diagnostic.
//! * [`ruin`]: finite- and infinite-horizon ruin probabilities.
//! * [`mc`]: reproducible counter-based streams and block scheduling.
//! * [`cli`]: JSON experiment configs, CSV/JSON/SVG outputs.

pub mod cli;
pub mod dependence;
pub mod error;
pub mod estimators;
pub mod marginals;
pub mod mc;
pub mod quadrature;
pub mod ruin;
pub mod stats;

pub use dependence::{CdModel, KernelSpec, ModelSpec, ValidationReport};
pub use error::{Error, Result, Warning};
pub use marginals::{Extended, Marginal, MarginalSpec};
pub use mc::{RngStream, RunConfig, UniformSource};
