//! Heat kernels attached to finite reflection groups.
//!
//! The crate evaluates the Dunkl-type heat kernel `h_t(x, y)` for rank-one
//! multiplicity data, products of rank-one factors, and dihedral systems in
//! the plane, and checks it against two-sided Gaussian-type envelopes of the
//! form
//!
//! ```text
//!   h_t(x, y)  ~  w(B(x, sqrt(t)))^{-1} exp(-c d(x,y)^2 / t) Lambda(x, y, t)
//! ```
//!
//! where `d` is the distance between group orbits, `w` the invariant weight,
//! and `Lambda` a finite sum over admissible reflection sequences. Modules:
//!
//! * [`rootsys`] — root systems, reflection groups, orbit geometry;
//! * [`bounds`] — admissible sequences, `Lambda`, weighted ball volumes,
//!   envelope assembly;
//! * [`kernel`] — exact rank-one and product kernel evaluators plus the
//!   identities that validate them;
//! * [`pde`] — a polar-grid heat solver for planar dihedral weights, used as
//!   an independent route to the kernel;
//! * [`harness`] — reproducible sweep drivers producing tabular reports;
//! * [`quad`] — quadrature primitives shared by the above.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod pde;
pub mod quad;
pub mod rootsys;

pub use error::{Error, Result};
