//! Boundary automorphism sets of definite quadratic forms.
//!
//! Given a nondegenerate definite quadratic form `(Z^h, q)`, this crate
//! enumerates its isometry group, builds the boundary split quadratic
//! linking form on `coker(q + q^T)`, enumerates the automorphisms of that
//! finite form, and decides whether every one of them is induced by an
//! isometry.

pub mod baut;
pub mod boundary;
pub mod budget;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod lattice;
pub mod linalg;
pub mod quadform;
mod search;
pub mod torsion;

pub use baut::{
    analyze, boundary_of_isometry, double_coset_count, enumerate_boundary_automorphisms, image_of_boundary,
    obstruction_report, Analysis, AnalysisOptions, AutSet, FiniteAutMatrix, ObstructionReport,
};
pub use boundary::{boundary_form, eval_linking, eval_refinement, find_form_isometry, ClassMatrix, CokernelPresentation, SplitLinkingForm};
pub use budget::Budget;
pub use error::{Error, Result};
pub use lattice::{enumerate_isometries, short_vectors, IsometrySet};
pub use linalg::{snf, IntMatrix, RationalMatrix, SnfDecomposition};
pub use quadform::{change_basis, qplus_equivalent, standard_family, symmetrize, QuadFormClass, Sign, SymmetrizedForm};
