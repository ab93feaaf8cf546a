//! Energy-harvesting and information-reception models for optical receivers
//! built from multi-junction photovoltaic cells.
//!
//! The crate follows the signal from the spectrum to the detector:
//!
//! * [`spectral`] turns ambient, energy and information light into
//!   per-junction photocurrents.
//! * [`ehmodel`] maps photocurrents to harvested DC power.
//! * [`circuitsim`] is a circuit-level oracle for the same receiver.
//! * [`infotheory`] builds rates, input distributions and error rates on
//!   top of the EH characteristic.

// `!(x > 0.0)` is how domain checks reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod quad;
pub mod spectral;
pub mod ehmodel;
pub mod circuitsim;
pub mod format;
pub mod infotheory;
pub mod validation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/eh-models.md")]
    mod eh_models {}
    #[doc = include_str!("../../../book/src/lambert-w.md")]
    mod lambert_w {}
    #[doc = include_str!("../../../book/src/circuit-oracle.md")]
    mod circuit_oracle {}
    #[doc = include_str!("../../../book/src/information.md")]
    mod information {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
