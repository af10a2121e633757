//! Reference detectors used to check the cycle model.
//!
//! `oracle_serial` applies the same threshold / refinement / capture rules
//! as the receiver but works directly on the serial stream: window `j` is
//! read straight out of the (reset-padded) stream, scores are counted bit by
//! bit, and the capture of a settled detection is a plain slice plus the
//! closed-form chunk schedule. Nothing here touches the window register,
//! the packed correlator or the capture state machine.

use crate::bitvec::{hamming_same, BitVec};
use crate::correlator::pipeline_latency;
use crate::framing::{FrameSpec, Marker};

use super::{CaptureRecord, CaptureStatus, ValidCode};

struct SerialView {
    /// `l` reset zeros, the stream, then zeros up to a whole word.
    bits: Vec<u8>,
    marker: Vec<u8>,
    l: usize,
    windows: usize,
}

impl SerialView {
    fn new(stream: &BitVec, marker: &Marker) -> Self {
        let l = marker.len();
        let windows = stream.len().div_ceil(l);
        let mut bits = vec![0u8; l];
        bits.extend(stream.iter().map(u8::from));
        bits.resize(l + windows * l, 0);
        Self {
            bits,
            marker: marker.bits().iter().map(u8::from).collect(),
            l,
            windows,
        }
    }

    /// Best `(score, offset)` of window `j`, first offset winning ties.
    fn best(&self, j: usize) -> (u32, usize) {
        let base = j * self.l;
        let mut best = (0u32, 0usize);
        for m in 0..self.l {
            let score = (0..self.l)
                .filter(|&i| self.bits[base + m + i] == self.marker[i])
                .count() as u32;
            if m == 0 || score > best.0 {
                best = (score, m);
            }
        }
        best
    }

    /// Stream bits `[from, to)`, reading padding zeros past the end.
    fn stream_slice(&self, from: usize, to: usize) -> BitVec {
        self.bits[self.l + from..self.l + to]
            .iter()
            .map(|&b| b == 1)
            .collect()
    }
}

/// Serial re-derivation of [`super::run_receiver`]; must agree with it record
/// for record.
pub fn oracle_serial(
    stream: &BitVec,
    marker: &Marker,
    spec: &FrameSpec,
    detector_during_capture: bool,
) -> Vec<CaptureRecord> {
    let view = SerialView::new(stream, marker);
    let (l, k) = (spec.params.l, spec.params.k);
    let th = spec.params.threshold as u32;
    let p = spec.payload_len;
    let lat = pipeline_latency(l) as u64;
    let nwin = view.windows;
    let code_at = |w: usize, first: usize, last: usize| match w {
        _ if w == last => ValidCode::Final,
        _ if w == first => ValidCode::First,
        _ => ValidCode::Middle,
    };

    let mut records = Vec::new();
    let mut j = 0;
    // Set when a preemption hands over a trigger that was already evaluated.
    let mut forced_trigger: Option<usize> = None;
    while j < nwin {
        let trig = match forced_trigger.take() {
            Some(t) => t,
            None => {
                if view.best(j).0 <= th {
                    j += 1;
                    continue;
                }
                j
            }
        };
        let (sum0, m0) = view.best(trig);
        let refine = trig + 1;

        // Speculative capture on the trigger window when the start is inside.
        let spec_started = k + m0 < l;
        let mut trace = vec![if spec_started {
            ValidCode::First
        } else {
            ValidCode::Idle
        }];

        let (adopt, m, sum) = if refine < nwin {
            let (s1, m1) = view.best(refine);
            if s1 > sum0 {
                (refine, m1, s1)
            } else {
                (trig, m0, sum0)
            }
        } else {
            (trig, m0, sum0)
        };
        let start = adopt * l + k + m;
        let first_w = start / l;
        let offset = start % l;
        let last_w = (start + p - 1) / l;
        let mut chunks: Vec<usize> = (first_w..=last_w)
            .map(|w| {
                if w == first_w {
                    l - offset
                } else if w == last_w {
                    offset
                } else {
                    l
                }
            })
            .collect();
        if offset == 0 {
            chunks.iter_mut().for_each(|c| *c = l);
        }

        // Windows after the trigger that belong to this record.
        let mut end_w = last_w;
        let mut status = CaptureStatus::Complete;
        if detector_during_capture {
            if let Some(w) =
                (refine + 1..=last_w.min(nwin.saturating_sub(1))).find(|&w| view.best(w).0 > th)
            {
                end_w = w - 1;
                status = CaptureStatus::Preempted;
            }
        }
        if status == CaptureStatus::Complete && last_w >= nwin {
            end_w = nwin - 1;
            status = CaptureStatus::Truncated;
        }
        if end_w < refine && status == CaptureStatus::Truncated {
            // Input ended during refinement.
            end_w = trig;
        }

        for w in refine..=end_w {
            let code = if w == adopt && adopt == refine {
                if k + m < l {
                    ValidCode::First
                } else {
                    ValidCode::Idle
                }
            } else if w >= first_w && w <= last_w {
                code_at(w, first_w, last_w)
            } else {
                ValidCode::Idle
            };
            trace.push(code);
        }

        let captured_to = (end_w + 1).min(last_w + 1) * l;
        let captured_to = captured_to.min(start + p);
        let payload = if captured_to > start {
            view.stream_slice(start, captured_to)
        } else {
            BitVec::new()
        };
        let windows_done = (first_w..=last_w).filter(|&w| w <= end_w).count();
        chunks.truncate(windows_done);

        records.push(CaptureRecord {
            payload,
            detected_m: m,
            detected_sum: sum,
            trigger_cycle: trig as u64 + lat,
            detect_cycle: adopt as u64 + lat,
            payload_start_bit: start,
            valid_trace: trace,
            chunks,
            status,
        });

        match status {
            CaptureStatus::Preempted => {
                forced_trigger = Some(end_w + 1);
                j = end_w + 1;
            }
            _ => j = last_w + 1,
        }
    }
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenieHit {
    pub offset: usize,
    pub score: usize,
}

/// Every serial offset whose marker correlation exceeds the threshold. An
/// idealised matched filter with no windowing, used for diagnostics.
pub fn oracle_genie(stream: &BitVec, marker: &Marker, threshold: usize) -> Vec<GenieHit> {
    let l = marker.len();
    if stream.len() < l {
        return Vec::new();
    }
    (0..=stream.len() - l)
        .filter_map(|offset| {
            let score = hamming_same(marker.bits(), &stream.slice(offset, l));
            (score > threshold).then_some(GenieHit { offset, score })
        })
        .collect()
}
