//! Tree-structured threaded algebraic space-time codes.
//!
//! The crate builds the codes, simulates them over a quasi-static Rayleigh
//! MIMO channel, triangularizes the resulting linear system with a
//! structure-aware Givens QR, and detects with tree-search decoders. The
//! [`verify`] module certifies the algebraic claims by brute force.
//!
//! ```
//! use tast::encoder::{code_rate, equivalent_matrix, CodeParams};
//! use tast::verify::check_triangular;
//!
//! let p = CodeParams::tree(2, 2, 1)?;
//! assert_eq!(code_rate(&p).to_string(), "3/2");
//! assert!(check_triangular(&equivalent_matrix(&p)).ok);
//! # Ok::<(), tast::Error>(())
//! ```

pub mod algebra;
pub mod channel;
pub mod decoders;
pub mod encoder;
pub mod error;
pub mod layering;
pub mod qr;
pub mod verify;

pub use algebra::{make_constellation, Constellation, ConstellationKind, C64};
pub use encoder::{CodeFamily, CodeParams};
pub use error::{Error, Result};

/// The guide's snippets, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/layering.md")]
    mod layering {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/qr.md")]
    mod qr {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/certification.md")]
    mod certification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
