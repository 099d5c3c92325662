//! Windowed belief-propagation decoding of terminated spatially coupled
//! LDPC codes.
//!
//! The crate is organized around five building blocks:
//!
//! - [`sc_code`]: construction of terminated SC-LDPC codes from a protograph
//!   via quasi-cyclic lifting, plus alist/JSON import and export.
//! - [`channel`]: BPSK/AWGN channel LLR generation for the all-zero codeword,
//!   including per-block SNR manipulation.
//! - [`bp_engine`]: the flooding sum-product message-passing kernels and the
//!   soft bit-error-rate estimator.
//! - [`window_decoder`]: the windowed decoding state machine — a fixed-iteration
//!   baseline and three adaptive schemes (adaptive iterations, window shift,
//!   wave tracking) driven by a pluggable stall detector — together with
//!   complexity accounting and stall-position analysis.
//! - [`harness`]: Monte Carlo BER sweeps, stall test-set creation and replay,
//!   the block-manipulation experiment, and report rendering.
//!
//! The `scwind` binary exposes all of this as a CLI; see the crate README.

pub mod bp_engine;
pub mod channel;
mod error;
pub mod harness;
pub mod sc_code;
pub mod window_decoder;

pub use error::{Error, Result};
