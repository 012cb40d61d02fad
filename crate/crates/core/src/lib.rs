//! Hemisystems of the parabolic quadric `Q(2d, q)` invariant under `Ω_3(q)`.
//!
//! The pipeline: build the field and the standard quadratic form, enumerate the
//! points and generators (maximal totally singular subspaces), generate the
//! groups `B = Ω(W)` and `A = <B, τ>`, split the generators into orbits, and
//! pick one `B`-orbit out of every `A`-orbit. Any such choice is a hemisystem;
//! [`hemi::verify_hemisystem`] checks this independently of the construction.

pub mod exec;
pub mod gf;
pub mod grp;
pub mod hemi;
pub mod linform;
pub mod orbits;
pub mod quadric;

pub use exec::Exec;
pub use gf::{Fe, Field, FieldError, FieldSpec};
pub use grp::{GeneratedGroup, GroupElement, GroupError};
pub use hemi::{Construction, HemiError, HemisystemCertificate, VerifyReport};
pub use linform::{Matrix, QuadraticSpace, StandardModel, Subspace, Vector};
pub use orbits::{OrbitError, OrbitPartition};
pub use quadric::{ProjectivePoint, QuadricModel};
