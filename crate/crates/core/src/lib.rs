//! Distribution recovery from noisy Chebyshev moments.
//!
//! Given estimates of the first `k` Chebyshev moments `E_p[T_j(x)]` of an
//! unknown distribution `p` on `[-1, 1]`, the recovery solver returns a
//! discrete distribution `q` whose Wasserstein-1 distance to `p` is at most
//! `36/k + Γ`, where `Γ` is a `1/j`-weighted `ℓ2` error of the moment
//! estimates. Three pipelines are built on that core:
//!
//! * [`dp`]: differentially private synthetic data in one to three
//!   dimensions,
//! * [`sde`]: spectral density estimation from matrix-vector products,
//! * [`popmle`]: maximum-likelihood estimation of a population of coin
//!   biases.
//!
//! The guide under `book/` walks through each piece; its code listings are
//! compiled as doctests of this crate.

pub mod cheb;
pub mod dist;
pub mod dp;
pub mod error;
pub mod experiment;
mod fourier;
pub mod io;
pub mod popmle;
pub mod recovery;
pub mod sampling;
pub mod sde;

pub use cheb::{ChebCoefficients, Convention, JacksonDamping, MultiIndex};
pub use dist::{DiscreteDistribution, Grid, MomentErrorReport, MomentVector};
pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/chebyshev.md")]
    mod chebyshev {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/private.md")]
    mod private {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/population.md")]
    mod population {}
}
