//! Payload capture control unit and the composed receiver.
//!
//! The control unit watches `sum_m`. When it rises above the threshold the
//! unit assumes the payload starts at register position `l + k + m` and, if
//! that position is inside the register, starts capturing immediately. On
//! the next cycle it compares the new `sum_m` with the one that fired: a
//! strictly larger score means the marker was really at the new `m` and the
//! capture restarts from there; otherwise the first decision stands. A start
//! position past the end of the register is reached one cycle later, at
//! position `k + m` after the shift.
//!
//! With `o` the payload offset inside the left half, a payload of `n * l`
//! bits is collected as `l - o` bits, then `n - 1` full words, then `o`
//! bits. When `o == 0` the first word is already full and capture takes `n`
//! cycles.

mod oracle;

pub use oracle::{oracle_genie, oracle_serial, GenieHit};

use std::fmt;

use crate::bitvec::BitVec;
use crate::correlator::{pipeline_latency, CorrelationOutput, PipelinedCorrelator};
use crate::error::Result;
use crate::framing::{FrameSpec, Marker};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    /// Threshold just fired; waiting one cycle to compare scores.
    Refine,
    /// Detection settled, payload start not yet in the left half.
    WaitAlign,
    Capturing,
}

/// The two-bit `valid_out` signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidCode {
    Idle = 0b00,
    First = 0b01,
    Middle = 0b10,
    /// Last word of a capture. A capture that fits in one word reports
    /// only this code.
    Final = 0b11,
}

impl ValidCode {
    pub fn bits(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for ValidCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureStatus {
    Complete,
    /// Input ended before the payload was fully collected.
    Truncated,
    /// A new detection took over mid-capture (only with the detector left
    /// on during capture).
    Preempted,
}

impl CaptureStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CaptureStatus::Complete => "complete",
            CaptureStatus::Truncated => "truncated",
            CaptureStatus::Preempted => "preempted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureRecord {
    pub payload: BitVec,
    pub detected_m: usize,
    pub detected_sum: u32,
    /// Clock cycle at which the threshold fired.
    pub trigger_cycle: u64,
    /// Clock cycle whose `m` was finally adopted (trigger or trigger + 1).
    pub detect_cycle: u64,
    /// Serial index of the first payload bit.
    pub payload_start_bit: usize,
    /// `valid_out` from the trigger cycle to the last cycle of this record.
    pub valid_trace: Vec<ValidCode>,
    /// Bits taken on each capture cycle of the adopted detection.
    pub chunks: Vec<usize>,
    pub status: CaptureStatus,
}

impl CaptureRecord {
    pub fn is_complete(&self) -> bool {
        self.status == CaptureStatus::Complete
    }

    pub fn valid_trace_string(&self) -> String {
        self.valid_trace
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureState {
    pub phase: Phase,
    pub pending_m: usize,
    pub pending_sum: u32,
    pub bits_remaining: usize,
    pub assembled: BitVec,
    /// Payload offset inside the left half on the first capture cycle.
    pub offset: usize,
    started: bool,
    trigger_cycle: u64,
    detect_cycle: u64,
    trace: Vec<ValidCode>,
    chunks: Vec<usize>,
}

impl CaptureState {
    fn idle() -> Self {
        Self {
            phase: Phase::Idle,
            pending_m: 0,
            pending_sum: 0,
            bits_remaining: 0,
            assembled: BitVec::new(),
            offset: 0,
            started: false,
            trigger_cycle: 0,
            detect_cycle: 0,
            trace: Vec::new(),
            chunks: Vec::new(),
        }
    }
}

/// Result of one control-unit clock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureStep {
    pub valid: ValidCode,
    pub record: Option<CaptureRecord>,
    /// Last window index the correlators may skip while this capture runs.
    pub gate_through: Option<u64>,
}

/// The payload capture control unit.
#[derive(Debug, Clone)]
pub struct CaptureUnit {
    spec: FrameSpec,
    latency: usize,
    detector_during_capture: bool,
    state: CaptureState,
}

impl CaptureUnit {
    pub fn new(spec: FrameSpec, detector_during_capture: bool) -> Result<Self> {
        spec.check_capturable()?;
        Ok(Self {
            latency: pipeline_latency(spec.params.l),
            spec,
            detector_during_capture,
            state: CaptureState::idle(),
        })
    }

    pub fn state(&self) -> &CaptureState {
        &self.state
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    /// Serial index of the payload start implied by the current detection.
    fn payload_start(&self) -> usize {
        let window = (self.state.detect_cycle - self.latency as u64) as usize;
        window * self.spec.params.l + self.spec.params.k + self.state.pending_m
    }

    fn last_capture_window(&self) -> u64 {
        ((self.payload_start() + self.spec.payload_len - 1) / self.spec.params.l) as u64
    }

    pub fn step(&mut self, out: &CorrelationOutput) -> CaptureStep {
        let mut step = CaptureStep {
            valid: ValidCode::Idle,
            record: None,
            gate_through: None,
        };
        if out.warmup {
            return step;
        }
        let threshold = self.spec.params.threshold as u32;
        match self.state.phase {
            Phase::Idle => {
                debug_assert!(!out.gated, "correlators gated while idle");
                if out.sum_m > threshold {
                    step.valid = self.trigger(out);
                }
            }
            Phase::Refine => {
                step.valid = if out.sum_m > self.state.pending_sum {
                    self.arm(out)
                } else {
                    self.advance(out)
                };
                if self.state.phase == Phase::Refine {
                    self.state.phase = if self.state.started {
                        Phase::Capturing
                    } else {
                        Phase::WaitAlign
                    };
                    if !self.detector_during_capture {
                        step.gate_through = Some(self.last_capture_window());
                    }
                }
            }
            Phase::WaitAlign | Phase::Capturing => {
                if self.detector_during_capture && out.sum_m > threshold {
                    step.record = Some(self.take_record(CaptureStatus::Preempted));
                    step.valid = self.trigger(out);
                } else {
                    step.valid = self.advance(out);
                }
            }
        }
        if self.state.phase != Phase::Idle || step.valid != ValidCode::Idle {
            self.state.trace.push(step.valid);
        }
        if self.state.phase == Phase::Idle && self.state.started {
            step.record = Some(self.take_record(CaptureStatus::Complete));
        }
        step
    }

    /// Record for a capture still in progress when the input ends.
    pub fn finish(&mut self) -> Option<CaptureRecord> {
        (self.state.phase != Phase::Idle).then(|| self.take_record(CaptureStatus::Truncated))
    }

    fn trigger(&mut self, out: &CorrelationOutput) -> ValidCode {
        self.state.trigger_cycle = out.cycle;
        self.state.trace.clear();
        let code = self.arm(out);
        self.state.phase = Phase::Refine;
        code
    }

    /// Adopts `out.m` as the marker position and begins capturing if the
    /// payload start is already inside the register.
    fn arm(&mut self, out: &CorrelationOutput) -> ValidCode {
        let l = self.spec.params.l;
        let k = self.spec.params.k;
        let s = &mut self.state;
        s.pending_m = out.m;
        s.pending_sum = out.sum_m;
        s.detect_cycle = out.cycle;
        s.assembled = BitVec::with_capacity(self.spec.payload_len);
        s.chunks.clear();
        s.bits_remaining = self.spec.payload_len;
        s.started = false;
        let start = l + k + out.m;
        if start < 2 * l {
            s.offset = start - l;
            self.advance(out)
        } else {
            s.offset = k + out.m - l;
            ValidCode::Idle
        }
    }

    /// Takes this cycle's share of the left half.
    fn advance(&mut self, out: &CorrelationOutput) -> ValidCode {
        let l = self.spec.params.l;
        let reg = out.delayed_word.bits();
        let s = &mut self.state;
        let (from, take, code) = if s.started {
            (l, l.min(s.bits_remaining), ValidCode::Middle)
        } else {
            s.started = true;
            (l + s.offset, l - s.offset, ValidCode::First)
        };
        s.assembled.extend_from_range(reg, from, take);
        s.chunks.push(take);
        s.bits_remaining -= take;
        if s.bits_remaining == 0 {
            s.phase = Phase::Idle;
            ValidCode::Final
        } else {
            code
        }
    }

    fn take_record(&mut self, status: CaptureStatus) -> CaptureRecord {
        let payload_start_bit = self.payload_start();
        let s = std::mem::replace(&mut self.state, CaptureState::idle());
        CaptureRecord {
            payload: s.assembled,
            detected_m: s.pending_m,
            detected_sum: s.pending_sum,
            trigger_cycle: s.trigger_cycle,
            detect_cycle: s.detect_cycle,
            payload_start_bit,
            valid_trace: s.trace,
            chunks: s.chunks,
            status,
        }
    }
}

/// Free-function form of one control-unit clock.
pub fn capture_step(unit: &mut CaptureUnit, out: &CorrelationOutput) -> CaptureStep {
    unit.step(out)
}

/// One receiver clock as seen from outside, for instrumentation.
#[derive(Debug, Clone)]
pub struct CycleTrace {
    pub output: CorrelationOutput,
    pub step: CaptureStep,
}

/// Window register, correlation pipeline and capture unit wired together.
#[derive(Debug, Clone)]
pub struct Receiver {
    correlator: PipelinedCorrelator,
    unit: CaptureUnit,
}

impl Receiver {
    /// `detector_during_capture = false` switches the correlators off for
    /// windows that can only hold payload of the frame being captured.
    pub fn new(marker: &Marker, spec: FrameSpec, detector_during_capture: bool) -> Result<Self> {
        if marker.len() != spec.params.l {
            return Err(crate::error::Error::LengthMismatch {
                expected: spec.params.l,
                actual: marker.len(),
            });
        }
        Ok(Self {
            correlator: PipelinedCorrelator::new(marker),
            unit: CaptureUnit::new(spec, detector_during_capture)?,
        })
    }

    pub fn latency(&self) -> usize {
        self.correlator.latency()
    }

    pub fn push_word(&mut self, word: &BitVec) -> Result<Option<CaptureRecord>> {
        Ok(self.push_word_traced(word)?.step.record)
    }

    pub fn push_word_traced(&mut self, word: &BitVec) -> Result<CycleTrace> {
        let output = self.correlator.step(word)?;
        let step = self.unit.step(&output);
        if let Some(w) = step.gate_through {
            self.correlator.gate_through(w);
        }
        Ok(CycleTrace { output, step })
    }

    /// Drains the pipeline so every loaded window is evaluated, then closes
    /// any capture left open.
    pub fn finish(&mut self) -> Vec<CaptureRecord> {
        let zero = BitVec::zeros(self.correlator.l());
        let mut out: Vec<_> = (0..self.latency())
            .filter_map(|_| self.push_word(&zero).expect("zero word has length l"))
            .collect();
        out.extend(self.unit.finish());
        out
    }
}

/// Runs the receiver over a serial stream. A short final word is
/// zero-padded.
pub fn run_receiver(
    stream: &BitVec,
    marker: &Marker,
    spec: &FrameSpec,
    detector_during_capture: bool,
) -> Result<Vec<CaptureRecord>> {
    let l = spec.params.l;
    let mut rx = Receiver::new(marker, *spec, detector_during_capture)?;
    let mut records = Vec::new();
    let mut word = BitVec::with_capacity(l);
    let mut start = 0;
    while start < stream.len() {
        let take = l.min(stream.len() - start);
        word.copy_range_from(stream, start, take);
        for _ in take..l {
            word.push(false);
        }
        records.extend(rx.push_word(&word)?);
        start += l;
    }
    if start > 0 {
        records.extend(rx.finish());
    }
    Ok(records)
}
