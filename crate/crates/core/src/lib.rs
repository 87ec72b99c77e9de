//! Numerical laboratory for measure-geometric Laplacians on intervals and
//! axis-aligned rectangles with Dirichlet boundary conditions.
//!
//! The operator under study is the Laplacian `-Δ_μ` defined by a finite
//! positive Borel measure `μ` through the weak identity
//! `∫ ∇u·∇φ dx = λ ∫ uφ dμ`. The crate computes its Dirichlet eigenpairs by
//! two independent routes — a P1 Galerkin discretization of the generalized
//! eigenproblem `K u = λ M u`, and a Nyström discretization of the Green
//! integral operator — counts nodal domains of the eigenfunctions, and runs
//! property checks (maximum/minimum principles, sphere-average monotonicity,
//! boundary decay, continuity moduli) against the computed spectra and
//! against closed-form eigenfunctions of cross-shaped singular measures.

pub mod error;
pub mod fem;
pub mod geom;
pub mod green;
pub mod measure;
pub mod nodal;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
pub use geom::{Domain, Point, Rect};
pub use measure::{Measure, MeasureComponent, QuadOpts, Similarity};
