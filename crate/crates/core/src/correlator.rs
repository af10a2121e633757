//! Window register and pipelined correlation model.
//!
//! The window register holds `2l` bits, position 0 being the oldest. Each
//! clock the previous left half (positions `l..2l`) moves to the right half
//! and the new `l`-bit input word fills the left half, so the register always
//! holds two consecutive input words.
//!
//! The correlation stage compares the stored marker with the `l` slices
//! `reg[m .. m + l]`, `m = 0..l`, through XNOR gates and an adder tree per
//! slice, then a comparator tree picks the best score `sum_m` and its offset
//! `m`. Both trees have `ceil(log2 l)` pipeline levels, so results leave the
//! stage `2 * ceil(log2 l)` cycles after their window was loaded. A delay
//! buffer of the same depth keeps a copy of each window so that the capture
//! logic sees the register contents the scores were computed from.
//!
//! Adder trees compute exact sums, so each correlator is modeled as a
//! popcount of XNOR; only the latency is modeled structurally.

use std::collections::VecDeque;

use crate::bitvec::BitVec;
use crate::error::{Error, Result};
use crate::framing::Marker;

pub fn ceil_log2(n: usize) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    usize::BITS - (n - 1).leading_zeros()
}

/// Cycles between a window entering the correlation stage and its
/// `(sum_m, m)` leaving the selector.
pub fn pipeline_latency(l: usize) -> usize {
    2 * ceil_log2(l) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowState {
    reg: BitVec,
}

impl WindowState {
    /// All-zero register, the reset state.
    pub fn new(l: usize) -> Self {
        Self {
            reg: BitVec::zeros(2 * l),
        }
    }

    pub fn from_bits(reg: BitVec) -> Result<Self> {
        if reg.is_empty() || !reg.len().is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "window register must have a positive even length, got {}",
                reg.len()
            )));
        }
        Ok(Self { reg })
    }

    pub fn l(&self) -> usize {
        self.reg.len() / 2
    }

    pub fn bits(&self) -> &BitVec {
        &self.reg
    }

    /// Positions `0..l`.
    pub fn right_half(&self) -> BitVec {
        self.reg.slice(0, self.l())
    }

    /// Positions `l..2l`.
    pub fn left_half(&self) -> BitVec {
        self.reg.slice(self.l(), self.l())
    }

    /// One clock: `[right | left]` becomes `[left | word]`.
    pub fn step(&self, word: &BitVec) -> Result<WindowState> {
        let mut next = self.clone();
        next.step_in_place(word)?;
        Ok(next)
    }

    pub fn step_in_place(&mut self, word: &BitVec) -> Result<()> {
        let l = self.l();
        if word.len() != l {
            return Err(Error::LengthMismatch {
                expected: l,
                actual: word.len(),
            });
        }
        let mut next = BitVec::with_capacity(2 * l);
        next.extend_from_range(&self.reg, l, l);
        next.extend_from(word);
        self.reg = next;
        Ok(())
    }
}

pub fn window_step(state: &WindowState, word: &BitVec) -> Result<WindowState> {
    state.step(word)
}

/// Correlation score of the marker against every slice `reg[m .. m + l]`.
pub fn correlate_window(window: &WindowState, marker: &Marker) -> Result<Vec<u32>> {
    let l = marker.len();
    if window.l() != l {
        return Err(Error::LengthMismatch {
            expected: 2 * l,
            actual: window.bits().len(),
        });
    }
    let kernel = Kernel::new(marker);
    let padded = kernel.pad(window.bits());
    Ok((0..l).map(|m| kernel.score(&padded, m)).collect())
}

/// Best score and the smallest offset reaching it. Panics on empty input.
pub fn select_max(sums: &[u32]) -> (u32, usize) {
    assert!(!sums.is_empty(), "select_max of an empty score vector");
    let mut best = (sums[0], 0);
    for (m, &s) in sums.iter().enumerate().skip(1) {
        if s > best.0 {
            best = (s, m);
        }
    }
    best
}

/// Level-by-level pairwise reduction as drawn for the adder tree: odd levels
/// are completed with a zero. Returns the sum and the number of levels.
pub fn adder_tree_sum(values: &[u32]) -> (u32, u32) {
    let mut level: Vec<u32> = values.to_vec();
    let mut depth = 0;
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(0);
        }
        level = level.chunks(2).map(|p| p[0] + p[1]).collect();
        depth += 1;
    }
    (level.first().copied().unwrap_or(0), depth)
}

/// Comparator tree: each node forwards the larger of its two inputs along
/// with its position, keeping the first input on equality. Returns
/// `(max, position, levels)`.
pub fn comparator_tree_max(values: &[u32]) -> (u32, usize, u32) {
    assert!(!values.is_empty(), "comparator tree of an empty vector");
    let mut level: Vec<(u32, usize)> = values.iter().copied().zip(0..).collect();
    let mut depth = 0;
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|p| match p {
                [a, b] if b.0 > a.0 => *b,
                [a, ..] => *a,
                [] => unreachable!(),
            })
            .collect();
        depth += 1;
    }
    (level[0].0, level[0].1, depth)
}

/// Packed marker plus the word-parallel scoring loop shared by the
/// combinational and pipelined paths.
#[derive(Debug, Clone)]
struct Kernel {
    marker: Vec<u64>,
    tail_mask: u64,
    l: usize,
}

impl Kernel {
    fn new(marker: &Marker) -> Self {
        let l = marker.len();
        let marker = marker.bits().limbs().to_vec();
        let tail = l - 64 * (marker.len() - 1);
        Self {
            marker,
            tail_mask: if tail == 64 {
                u64::MAX
            } else {
                (1 << tail) - 1
            },
            l,
        }
    }

    /// Window limbs with one trailing zero limb so `score` never reads past
    /// the end.
    fn pad(&self, reg: &BitVec) -> Vec<u64> {
        let mut v = Vec::with_capacity(reg.limbs().len() + 1);
        self.pad_into(reg, &mut v);
        v
    }

    fn pad_into(&self, reg: &BitVec, out: &mut Vec<u64>) {
        out.clear();
        out.extend_from_slice(reg.limbs());
        out.push(0);
    }

    #[inline]
    fn score(&self, win: &[u64], m: usize) -> u32 {
        let last = self.marker.len() - 1;
        let mut diff = 0;
        for (i, &mk) in self.marker.iter().enumerate() {
            let pos = m + 64 * i;
            let q = pos >> 6;
            let r = pos & 63;
            let w = if r == 0 {
                win[q]
            } else {
                (win[q] >> r) | (win[q + 1] << (64 - r))
            };
            let mut x = w ^ mk;
            if i == last {
                x &= self.tail_mask;
            }
            diff += x.count_ones();
        }
        self.l as u32 - diff
    }

    #[inline]
    fn best(&self, win: &[u64]) -> (u32, usize) {
        let mut best = (self.score(win, 0), 0);
        for m in 1..self.l {
            let s = self.score(win, m);
            if s > best.0 {
                best = (s, m);
            }
        }
        best
    }
}

/// What the correlation stage emits on one clock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationOutput {
    pub sum_m: u32,
    pub m: usize,
    /// Window contents `sum_m` and `m` were computed from.
    pub delayed_word: WindowState,
    /// Clock cycle of emission; the described window was loaded at
    /// `cycle - latency`.
    pub cycle: u64,
    /// Pipeline not yet filled; scores are meaningless.
    pub warmup: bool,
    /// The correlators were switched off for this window; scores are zero.
    pub gated: bool,
}

impl CorrelationOutput {
    /// Index of the window (cycle at which it was loaded) this output
    /// describes, or `None` during warmup.
    pub fn window_index(&self, latency: usize) -> Option<u64> {
        (!self.warmup).then(|| self.cycle - latency as u64)
    }
}

#[derive(Debug, Clone)]
struct Stage {
    sum_m: u32,
    m: usize,
    window: WindowState,
    warmup: bool,
    gated: bool,
}

/// Window register, correlators, selector and input delay buffer, clocked
/// one input word at a time.
#[derive(Debug, Clone)]
pub struct PipelinedCorrelator {
    kernel: Kernel,
    marker: Marker,
    latency: usize,
    window: WindowState,
    scratch: Vec<u64>,
    delay: VecDeque<Stage>,
    cycle: u64,
    gate_through: Option<u64>,
}

impl PipelinedCorrelator {
    pub fn new(marker: &Marker) -> Self {
        let l = marker.len();
        let latency = pipeline_latency(l);
        let mut p = Self {
            kernel: Kernel::new(marker),
            marker: marker.clone(),
            latency,
            window: WindowState::new(l),
            scratch: Vec::new(),
            delay: VecDeque::with_capacity(latency + 1),
            cycle: 0,
            gate_through: None,
        };
        p.reset();
        p
    }

    pub fn reset(&mut self) {
        let l = self.marker.len();
        self.window = WindowState::new(l);
        self.cycle = 0;
        self.gate_through = None;
        self.delay.clear();
        for _ in 0..self.latency {
            self.delay.push_back(Stage {
                sum_m: 0,
                m: 0,
                window: WindowState::new(l),
                warmup: true,
                gated: false,
            });
        }
    }

    pub fn l(&self) -> usize {
        self.marker.len()
    }

    pub fn marker(&self) -> &Marker {
        &self.marker
    }

    pub fn latency(&self) -> usize {
        self.latency
    }

    /// Number of words clocked in so far.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Current (undelayed) register contents.
    pub fn window(&self) -> &WindowState {
        &self.window
    }

    /// Switch the correlators off for every window with index up to and
    /// including `window_index`. Windows already in flight are unaffected.
    pub fn gate_through(&mut self, window_index: u64) {
        self.gate_through = Some(window_index);
    }

    pub fn step(&mut self, word: &BitVec) -> Result<CorrelationOutput> {
        self.window.step_in_place(word)?;
        let index = self.cycle;
        let gated = self.gate_through.is_some_and(|g| index <= g);
        let (sum_m, m) = if gated {
            (0, 0)
        } else {
            self.kernel.pad_into(self.window.bits(), &mut self.scratch);
            self.kernel.best(&self.scratch)
        };
        self.delay.push_back(Stage {
            sum_m,
            m,
            window: self.window.clone(),
            warmup: false,
            gated,
        });
        let out = self
            .delay
            .pop_front()
            .expect("delay line holds latency + 1 stages");
        let emitted = CorrelationOutput {
            sum_m: out.sum_m,
            m: out.m,
            delayed_word: out.window,
            cycle: self.cycle,
            warmup: out.warmup,
            gated: out.gated,
        };
        self.cycle += 1;
        Ok(emitted)
    }

    /// Clocks in a zero word; used to drain the pipeline after the input ends.
    pub fn flush_step(&mut self) -> CorrelationOutput {
        let zero = BitVec::zeros(self.l());
        self.step(&zero).expect("zero word has length l")
    }
}
