//! Default-density term structures driven by Lévy random fields.

pub mod error;
pub mod experiments;
pub mod levy_field;
pub mod pide;
pub mod pricing;
pub mod quadrature;
pub mod rates;
pub mod rng;
pub mod term_structure;
pub mod verification;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/field.md")]
    mod field {}
    #[doc = include_str!("../../../book/src/term_structure.md")]
    mod term_structure {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/pide.md")]
    mod pide {}
    #[doc = include_str!("../../../book/src/pricing.md")]
    mod pricing {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
