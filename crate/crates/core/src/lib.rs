//! Projected stochastic gradient descent carried out directly in a
//! reproducing-kernel Hilbert space `H` of functions `ℝ^d → ℝ^m`.
//!
//! The objective mixes a norm penalty with squared point losses,
//!
//! ```text
//! u(f) = q/2 ‖f‖²_H + (1−q)/(2n) Σ_i ‖f(x_i) − y_i‖²
//! ```
//!
//! and is written as the expectation of a randomized component loss `u_I`,
//! where `I = 0` with probability `q` and `I = i ∈ 1..=n` with probability
//! `(1−q)/n`. Each SGD step draws one component, moves along the Riesz image
//! of its gradient (a single kernel section) and projects onto the ball of
//! radius `r` in `H`. With the harmonic schedule `η_k = (s/λ)/(b+k)` the mean
//! squared distance to the minimizer decays like `1/k`, independently of the
//! input dimension.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`kernel`] | unit-diagonal kernels, Gram matrices, embedding constant |
//! | [`function_space`] | finite kernel expansions and Hilbert-space algebra |
//! | [`objective`] | datasets, component losses, Riesz gradients, constants |
//! | [`sgd`] | step schedule, samplers, the projected update, trajectories |
//! | [`exact`] | the exact minimizer via a ridge-shifted kernel system |
//! | [`experiment`] | Monte-Carlo convergence studies and slope fitting |
//! | [`io`] | CSV and metadata formats |
//! | [`config`] | the TOML run configuration |
//! | [`datagen`] | synthetic dataset generator |

pub mod config;
pub mod datagen;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod function_space;
pub mod io;
pub mod kernel;
pub mod objective;
pub mod rng;
pub mod sgd;

pub use error::{Error, Result};
pub use exact::OracleSolution;
pub use experiment::{ConvergenceRecord, RateFit, StudyConfig};
pub use function_space::{KernelExpansion, Radius};
pub use kernel::{GramMatrix, KernelFamily, KernelSpec};
pub use objective::{Dataset, MixtureWeights, ProblemConstants};
pub use sgd::{OperatorMode, SgdConfig, StepSchedule, Trajectory};
