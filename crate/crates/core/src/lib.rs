//! Guiding vector fields for robot path following.
//!
//! The crate builds conventional guiding vector fields from implicit
//! surfaces and singularity-free fields on a lifted space from parametric
//! paths, drives single-integrator, extended and unicycle models with them,
//! and provides the numerical checks used to validate the construction
//! (orthogonality, singular-point audits, Lyapunov decrease, convergence
//! rates, disturbance response).
//!
//! ```
//! use gvf::field::{GvfParams, SingularityFreeField, VectorField};
//! use gvf::path::{catalog_make, Params, Reparameterization};
//! use nalgebra::DVector;
//!
//! let circle = catalog_make("circle", &Params::new()).unwrap();
//! let params = GvfParams::new(vec![1.0, 1.0], 1.0).unwrap();
//! let field = SingularityFreeField::new(circle, 1.0, Reparameterization::identity(), params).unwrap();
//! let s = field.sample(&DVector::from_vec(vec![2.0, 0.0, 0.0])).unwrap();
//! assert_eq!(s.chi.as_slice(), &[-1.0, 1.0, 1.0]);
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod field;
pub mod guidance;
pub mod output;
pub mod path;
pub mod scenario;
pub mod sim;

pub use error::{GvfError, Result};
