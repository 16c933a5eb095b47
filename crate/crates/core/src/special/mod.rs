//! Special functions and numerical quadrature.

mod gamma;
mod quadrature;

pub use gamma::{gamma_fn, gamma_p, gamma_q, ln_gamma, GAMMA_MAX_ARG};
pub(crate) use gamma::{gamma_unchecked, ln_gamma_unchecked};
pub use quadrature::{
    integrate_box, integrate_finite, integrate_semi_infinite, integrate_wedge, Integral, QuadratureSpec,
    TailTransform,
};
