//! Preamble-phase physical layer.
//!
//! Users draw preambles from a common Alltop pool. The base station sees the
//! superposition `y = C s + n` on each channel and counts active preambles
//! with orthogonal matching pursuit. Two users picking the same preamble show
//! up as a single support element, which is how the count gets undercounted.

mod collision;
mod detect;
mod pool;

pub use collision::{empirical_collision_rate, RateEstimate};
pub use detect::{
    db_to_linear, estimate_active_count, estimate_sparse, synthesize_observation, ChannelObservation, DetectorConfig,
    SparseEstimate, Transmission,
};
pub use pool::{gen_alltop, PreamblePool, C64};
