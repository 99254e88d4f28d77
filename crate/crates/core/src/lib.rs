//! Multichannel slotted ALOHA with an exploration phase.
//!
//! Active users first send a preamble on a randomly chosen channel. The base
//! station reports how many preambles it saw per channel. Users alone on their
//! channel then transmit contention-free (Group I), and the rest (Group II)
//! contend for the remaining channels with access probability
//! `min(1, L_free / W)`.
//!
//! The crate is split into:
//!
//! * [`analytic`]: closed-form throughputs, bounds, overhead and pool sizing.
//! * [`mc_engine`]: slot-level Monte Carlo simulation of both protocols with
//!   counter-based, thread-count-independent random streams, plus exact
//!   enumeration oracles for small instances.
//! * [`preamble_phys`]: Alltop preamble pools, received-signal synthesis and
//!   orthogonal matching pursuit for counting active preambles.
//! * [`feedback_codec`]: bit-exact downlink feedback in the full-count and
//!   reduced (bitmap + W) formats.

pub mod analytic;
pub mod error;
pub mod feedback_codec;
pub mod mc_engine;
pub mod preamble_phys;
pub mod rng;

pub use error::{Error, Result};
