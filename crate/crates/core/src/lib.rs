//! Numerical toolkit for one-dimensional fractional Trudinger-Moser
//! functionals with logarithmic convolution potentials.
//!
//! The crate works with piecewise-linear functions sampled on non-uniform
//! grids (zero-extended to the whole line) and provides:
//!
//! * fractional `H^{1/2}` seminorms, stiffness forms and pointwise
//!   half-Laplacians ([`fractional`]),
//! * log-kernel bilinear functionals `Phi`/`Psi` and the radial-formula
//!   discrepancy diagnostics ([`log_functionals`]),
//! * critical growth nonlinearities ([`growth`]),
//! * the logarithmic concentration sequence with its component integrals
//!   ([`moser`]),
//! * a projected-ascent maximizer over the fractional unit ball
//!   ([`solver`]),
//! * Euler-Lagrange residual checks ([`euler_lagrange`]) and moving-plane
//!   symmetry diagnostics ([`moving_plane`]).

pub mod error;
pub mod euler_lagrange;
pub mod fractional;
pub mod function;
pub mod grid;
pub mod growth;
pub mod log_functionals;
pub mod logkernel;
pub mod moser;
pub mod moving_plane;
pub mod quad;
pub mod rearrange;
pub mod solver;

pub use error::Error;
pub use euler_lagrange::{DecayFit, ElReport};
pub use fractional::{ClosedForm, QuadratureSpec, StiffnessForm};
pub use function::SampledFunction;
pub use grid::Grid1D;
pub use growth::{GrowthClassification, GrowthModel};
pub use log_functionals::{FunctionalMethod, FunctionalReport, IdentityDiscrepancy};
pub use logkernel::KernelSign;
pub use moser::MoserWitness;
pub use moving_plane::{ComparisonConstant, ReflectionDiagnostics};
pub use solver::{ConstraintKind, MaximizerOptions, MaximizerState};

pub type Result<T> = std::result::Result<T, Error>;
