//! Numerical building blocks shared by the physics modules.

pub mod diff;
pub mod ode;
pub mod quad;
pub mod special;
pub mod spline;
