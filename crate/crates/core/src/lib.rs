//! Shape-constrained symbolic regression.
//!
//! Models are expression trees ([`expr`]) scored on a 1+n objective vector
//! ([`objectives`]): NMSE on the training data plus one penalty per shape
//! constraint, where each penalty is computed from a pessimistic interval
//! enclosure ([`interval`]) of the model or of one of its partial
//! derivatives. Search runs NSGA-II or NSGA-III ([`moea`]) over a tree
//! genotype ([`genetics`]). [`bench`] holds the built-in problem catalog and
//! [`experiment`] the batch runner behind the `shapesr` binary.

pub mod bench;
pub mod experiment;
pub mod expr;
pub mod genetics;
pub mod interval;
pub mod moea;
pub mod objectives;

pub use expr::{BinaryOp, Expr, UnaryOp, VariableBox};
pub use interval::Interval;
pub use objectives::{ObjectiveVector, ShapeConstraint, SENTINEL};
