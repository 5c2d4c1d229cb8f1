//! The chapters of the `owc-sim` book, compiled so their code blocks run as
//! doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/beams.md")]
pub mod beams {}

#[doc = include_str!("../../../book/src/link.md")]
pub mod link {}

#[doc = include_str!("../../../book/src/central-beam.md")]
pub mod central_beam {}

#[doc = include_str!("../../../book/src/activation.md")]
pub mod activation {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/reproducibility.md")]
pub mod reproducibility {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
