//! Learning and reproduction of symmetric positive definite matrix profiles
//! (stiffness, damping, manipulability) with dynamic movement primitives
//! formulated on the SPD manifold.
//!
//! * [`spd_manifold`]: log/exp maps, parallel transport, Mandel vectors.
//! * [`metrics`]: Log-Euclidean and Jensen-Bregman LogDet distances.
//! * [`dmp_core`]: scalar DMP building blocks.
//! * [`spd_dmp`]: training, reproduction and goal switching on the manifold.
//! * [`msd_demo_gen`]: rotating-stiffness mass-spring-damper demonstrations.
//! * [`io`]: JSON model and trajectory formats.

pub mod dmp_core;
pub mod error;
pub mod io;
pub mod metrics;
pub mod msd_demo_gen;
pub mod spd_dmp;
pub mod spd_manifold;

pub use error::{Error, Result};
pub use nalgebra;
pub use spd_manifold::{SpdMatrix, SymMatrix, TangentVector};
