//! A finite-model workbench for division by `n` without choice.
//!
//! Shoe instances carry an ordered `{1..n}` on every block and can always
//! be divided by a procedure that never looks at names ([`shoe`]). Sock
//! instances have unordered blocks; [`reductions`] turns a sock divider into
//! a choice function for pair families and into "multiplication is repeated
//! addition", and [`equivariance`] shows by exhaustive search that small
//! sock instances can lack any symmetric answer.

pub mod bijection;
pub mod element;
pub mod equivariance;
pub mod error;
pub mod model;
pub mod reductions;
pub mod shoe;

pub use bijection::{Bijection, Relabeling};
pub use element::Element;
pub use error::{Error, Result};
pub use model::{
    apply_relabeling_shoe, is_bundle_isomorphism, trivial_bundle, ChoiceAssignment, Relabel, ShoeInstance,
    SockBundle, SockInstance,
};
