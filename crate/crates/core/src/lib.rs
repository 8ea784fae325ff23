//! Fractional Hamiltonian boundary value methods for Caputo initial value
//! problems on a graded-then-uniform mesh.

pub mod bench;
pub mod error;
pub mod fractional;
pub mod mesh;
pub mod mittag_leffler;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod stability;

pub use error::{Error, Result};
pub use fractional::{build_tables, FractionalTables, TailKernel, TailKernelConfig};
pub use mesh::{build_mixed_mesh, MixedMesh};
pub use mittag_leffler::mittag_leffler;
pub use quadrature::{gauss_jacobi_rule, jacobi_recurrence, QuadratureRule, RecurrenceTable};
pub use solver::{solve, Discretization, ProblemSpec, SolutionTrajectory, SolverConfig, VectorField};
pub use stability::{butcher_tableau, stability_at_infinity, stability_value, Tableau};
