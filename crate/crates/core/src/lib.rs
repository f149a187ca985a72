//! Noncommutative Dirichlet forms on finite-dimensional measure spaces.
//!
//! Backends ([`algebra`]) realize a von Neumann algebra with a faithful trace as a matrix
//! algebra, a truncated noncommutative 2-torus or a cyclic group algebra. On top of them
//! [`dirichlet`] builds the symmetric Markov generator, its semigroup, Dirichlet form and
//! carré du champ; [`tangent`] provides the gradient/divergence calculus and the density-valued
//! Riemannian metric; [`elliptic`] and [`evolution`] solve Poisson, quasilinear, heat and
//! continuity equations in weak form.

pub mod algebra;
pub mod battery;
pub mod dirichlet;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod pauli;
pub mod report;
pub mod tangent;

pub use algebra::{Algebra, AlgebraDescriptor, Density, Element, Fidelity, Rational};
pub use dirichlet::{DirichletSpace, PoincareConstant};
pub use error::{Error, Result};
pub use report::{Check, Report};
pub use tangent::TangentVector;
pub use elliptic::{MapSpec, NonlinearMap, SolveReport, SolverOptions};
pub use evolution::{EvolutionProblem, EvolutionReport, Scheme};
