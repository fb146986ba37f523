//! Iterative MIMO-OFDM receiver built on combined belief-propagation /
//! mean-field message passing, with an expectation-propagation bridge
//! between the Gaussian equalizer and the discrete decoder.
//!
//! The model is a frequency-domain MIMO-OFDM link: `N` spatially multiplexed
//! streams, `M` receive antennas, `K` subcarriers, block-fading channels with
//! `L` time-domain taps per antenna pair, convolutionally coded bits Gray-mapped
//! onto QPSK or 16-QAM. The receiver factorizes the joint posterior over data
//! symbols and channel taps and passes messages on that graph:
//!
//! * the channel-estimation subgraph runs under the mean-field rule
//!   (coordinate updates of per-tap Gaussians, [`mf`]),
//! * detection/decoding runs under belief propagation (exact discrete
//!   sum-product or Gaussian BP on an auxiliary product variable,
//!   [`equalizer`]), with BCJR decoding of the convolutional code ([`coding`]),
//! * an optional expectation-propagation step projects discrete code beliefs
//!   into the Gaussian family so the cheap Gaussian equalizer can be used
//!   without discarding decoder feedback ([`ep`]).
//!
//! Five receiver variants share this machinery ([`receiver::ReceiverVariant`]):
//! a pure mean-field detector, exact-BP and Gaussian-BP combined receivers
//! (the latter with either EP or plain extrinsic Gaussian feedback), and a
//! known-channel joint-MAP bound. The [`campaign`] module Monte-Carlo-sweeps
//! them over SNR and writes CSV/JSON tables and SVG plots; the `fgrx` binary
//! is a thin CLI over it plus a single-carrier demo of the same message
//! passing on a scalar toy model.

pub mod campaign;
pub mod coding;
pub mod demo;
pub mod ep;
pub mod equalizer;
pub mod error;
pub mod mf;
pub mod numerics;
pub mod plot;
pub mod receiver;
pub mod sigmodel;

pub use error::{Error, Result};
