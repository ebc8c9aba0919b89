//! Clones on Z_p x Z_q that contain addition, and the clonoids they are built from.
//!
//! Functions are explicit tables ([`funtab`]). Clonoids of functions
//! Z_q^n -> Z_p are stored by their unary part ([`clonoid`]). A clone is stored
//! as a signature of p+1 and q+1 clonoids, one per normal-form degree slot
//! ([`clonesig`]), and the whole lattice is enumerated in [`lattice`].

pub mod bounds;
pub mod clonesig;
pub mod clonoid;
pub mod error;
pub mod funtab;
pub mod lattice;
pub mod linalg;
pub mod poly;
pub mod polyring;
pub mod relations;
pub mod zmod;

pub use error::{Error, Result};
pub use zmod::PrimePair;
