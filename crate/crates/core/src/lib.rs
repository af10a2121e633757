//! Correlation-based frame synchronization.
//!
//! Frames carry a header `c | b | a` in front of the payload: a marker `b` of
//! `l` bits flanked by the complements of its first and last `k` bits. The
//! receiver takes the serial stream as `l`-bit parallel words, keeps the last
//! two words in a `2l`-bit window register, scores every possible marker
//! alignment with XNOR-and-popcount correlators and captures the payload once
//! the best score passes a threshold.
//!
//! Modules, in pipeline order:
//!
//! - [`bitvec`]: packed bits, index 0 earliest in time; text and packed files.
//! - [`framing`]: markers, headers, frames and multi-frame transmissions.
//! - [`channel`]: BSC and hard-decision BPSK/AWGN noise.
//! - [`correlator`]: window register and the pipelined correlation stage.
//! - [`capture`]: capture control unit, composed receiver, reference oracles.
//! - [`harness`]: FSER sweeps, scoring and CSV output.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod bitvec;
pub mod capture;
pub mod channel;
pub mod correlator;
pub mod error;
pub mod framing;
pub mod harness;

pub use bitvec::{hamming_distance, hamming_same, BitVec, WordStream};
pub use capture::{
    oracle_genie, oracle_serial, run_receiver, CaptureRecord, CaptureStatus, CaptureUnit, Receiver,
    ValidCode,
};
pub use channel::{apply_channel, ber_of_snr, Channel, ChannelSpec};
pub use correlator::{
    correlate_window, pipeline_latency, select_max, window_step, CorrelationOutput,
    PipelinedCorrelator, WindowState,
};
pub use error::{Error, Result};
pub use framing::{
    build_frame, build_header, build_transmission, gen_marker, FrameSpec, FrameTruth, GapPolicy,
    Marker, SyncParams, Transmission,
};
pub use harness::{run_fser_sweep, score_frame, ExperimentConfig, FrameOutcome, FserPoint};
