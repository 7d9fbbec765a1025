//! J-matrix scattering: forward solution and inversion in oscillator and
//! Laguerre bases.

pub mod dd;
pub mod error;
pub mod forward;
pub mod interp;
pub mod inverse;
pub mod laguerre;
pub mod oscillator;
pub mod quadrature;
pub mod refine;
pub mod special_fn;
pub mod well;
