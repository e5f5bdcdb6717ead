//! Computational toolkit for non-Hausdorff finite differential spaces.
//!
//! A finite space with a generating function family determines its
//! Hausdorff relation; the relation's pair groupoid carries a convolution
//! *-algebra, which is represented fiberwise as random operators. On top of
//! that sit states and finite-scale von Neumann closures, the deformation
//! chain from the total-type regime to the diagonal, and lifted derivations
//! with the generalized position–momentum commutator.

pub mod algebra;
pub mod calculus;
pub mod defect;
pub mod deform;
pub mod diffspace;
pub mod error;
pub mod exact;
pub mod expr;
pub mod groupoid;
pub mod representation;
pub mod sample;
pub mod vonneumann;

pub use algebra::{AlgebraElement, BaseFunction, Jet, C64};
pub use calculus::Derivation;
pub use defect::Defect;
pub use deform::{deformation_chain, DeformationChain};
pub use diffspace::{
    build_space, consistent_family, hausdorff_relation, quotient, CompareMode, DiffSpace,
    GeneratorFunction, Partition, Point, PointId, SpaceSpec,
};
pub use error::{Error, Result};
pub use expr::{Expr, Symbols};
pub use groupoid::{build_groupoid, Arrow, Groupoid};
pub use representation::{represent, RandomOperator};
pub use vonneumann::{DensityField, OperatorBasis, State};
