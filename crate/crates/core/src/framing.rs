//! Transmitter side: marker generation, the `c | b | a` header and frames.
//!
//! On the wire a frame is, in time order,
//!
//! ```text
//!   c (k bits) | b (l bits) | a (k bits) | payload (p bits)
//! ```
//!
//! where `b` is the marker, `c = NOT(b[0..k])` and `a = NOT(b[l-k..l])`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitvec::BitVec;
use crate::error::{Error, Result};

/// Marker length, edge length and detection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SyncParams {
    pub l: usize,
    pub k: usize,
    pub threshold: usize,
}

impl SyncParams {
    /// Validates `l > 2k`, `k >= 1` and `0 < threshold <= l`. Edges longer
    /// than a fifth of the marker are accepted with a warning.
    pub fn new(l: usize, k: usize, threshold: usize) -> Result<Self> {
        let p = Self { l, k, threshold };
        p.validate()?;
        if 5 * k > l {
            log::warn!("k = {k} exceeds 20% of l = {l}; detection margin may suffer");
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if self.l <= 2 * self.k {
            return Err(Error::InvalidParams(format!(
                "l = {} must exceed 2k = {}",
                self.l,
                2 * self.k
            )));
        }
        if self.threshold == 0 || self.threshold > self.l {
            return Err(Error::InvalidParams(format!(
                "threshold {} must lie in 1..={}",
                self.threshold, self.l
            )));
        }
        Ok(())
    }

    pub fn header_len(&self) -> usize {
        self.l + 2 * self.k
    }
}

impl Default for SyncParams {
    /// The reference build: 123-bit marker, 23-bit edges, threshold 89.
    fn default() -> Self {
        Self {
            l: 123,
            k: 23,
            threshold: 89,
        }
    }
}

/// Sync parameters plus the payload length `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub params: SyncParams,
    pub payload_len: usize,
}

impl FrameSpec {
    pub fn new(params: SyncParams, payload_len: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            payload_len,
        })
    }

    /// A spec usable by the receiver: `p` must be a positive multiple of `l`.
    pub fn for_capture(params: SyncParams, payload_len: usize) -> Result<Self> {
        let spec = Self::new(params, payload_len)?;
        spec.check_capturable()?;
        Ok(spec)
    }

    pub fn check_capturable(&self) -> Result<()> {
        if self.payload_len == 0 || !self.payload_len.is_multiple_of(self.params.l) {
            return Err(Error::InvalidFrameSpec(format!(
                "payload length {} is not a positive multiple of l = {}",
                self.payload_len, self.params.l
            )));
        }
        Ok(())
    }

    /// `p / l` when `p` is a multiple of `l`.
    pub fn n(&self) -> Option<usize> {
        self.payload_len
            .is_multiple_of(self.params.l)
            .then(|| self.payload_len / self.params.l)
    }

    pub fn frame_len(&self) -> usize {
        self.params.header_len() + self.payload_len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marker {
    bits: BitVec,
}

impl Marker {
    pub const MIN_LEN: usize = 3;

    pub fn new(bits: BitVec) -> Result<Self> {
        if bits.len() < Self::MIN_LEN {
            return Err(Error::InvalidParams(format!(
                "marker of {} bits is shorter than {}",
                bits.len(),
                Self::MIN_LEN
            )));
        }
        Ok(Self { bits })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(BitVec::from_text(text)?)
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// A uniformly random `l`-bit marker, fixed by `seed`.
pub fn gen_marker(l: usize, seed: u64) -> Result<Marker> {
    if l < Marker::MIN_LEN {
        return Err(Error::InvalidParams(format!(
            "marker length {l} is below the minimum of {}",
            Marker::MIN_LEN
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Marker::new(BitVec::random(l, &mut rng))
}

/// `c | b | a` in transmission order.
pub fn build_header(marker: &Marker, k: usize) -> Result<BitVec> {
    let l = marker.len();
    if k == 0 || l <= 2 * k {
        return Err(Error::InvalidParams(format!(
            "edge length {k} incompatible with marker length {l} (need 0 < 2k < l)"
        )));
    }
    let b = marker.bits();
    let c = b.slice(0, k).not();
    let a = b.slice(l - k, k).not();
    Ok(BitVec::concat(&[&c, b, &a]))
}

/// Header followed by payload.
pub fn build_frame(spec: &FrameSpec, marker: &Marker, payload: &BitVec) -> Result<BitVec> {
    if marker.len() != spec.params.l {
        return Err(Error::LengthMismatch {
            expected: spec.params.l,
            actual: marker.len(),
        });
    }
    if payload.len() != spec.payload_len {
        return Err(Error::LengthMismatch {
            expected: spec.payload_len,
            actual: payload.len(),
        });
    }
    let mut frame = build_header(marker, spec.params.k)?;
    frame.extend_from(payload);
    Ok(frame)
}

/// Filler placed before every frame of a transmission. Lengths are drawn
/// uniformly from `min..=max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPolicy {
    None,
    Zeros { min: usize, max: usize },
    Random { min: usize, max: usize },
}

impl GapPolicy {
    fn draw<R: Rng>(&self, rng: &mut R) -> BitVec {
        match *self {
            GapPolicy::None => BitVec::new(),
            GapPolicy::Zeros { min, max } => BitVec::zeros(rng.random_range(min..=max)),
            GapPolicy::Random { min, max } => {
                let n = rng.random_range(min..=max);
                BitVec::random(n, rng)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GapPolicy::Zeros { min, max } | GapPolicy::Random { min, max } if min > max => Err(
                Error::InvalidConfig(format!("gap range {min}..={max} is empty")),
            ),
            _ => Ok(()),
        }
    }
}

/// Where one frame landed inside a transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameTruth {
    pub frame_start: usize,
    pub payload_start: usize,
    pub frame_len: usize,
}

impl FrameTruth {
    pub fn frame_end(&self) -> usize {
        self.frame_start + self.frame_len
    }
}

/// A serial stream and the out-of-band positions of its frames.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub bits: BitVec,
    pub frames: Vec<FrameTruth>,
}

pub fn build_transmission(
    marker: &Marker,
    frames: &[(FrameSpec, BitVec)],
    gap: GapPolicy,
    seed: u64,
) -> Result<Transmission> {
    gap.validate()?;
    if let Some((first, _)) = frames.first() {
        if frames.iter().any(|(s, _)| s.params != first.params) {
            return Err(Error::InvalidFrameSpec(
                "all frames of a transmission must share one SyncParams".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = BitVec::new();
    let mut truth = Vec::with_capacity(frames.len());
    for (spec, payload) in frames {
        bits.extend_from(&gap.draw(&mut rng));
        let frame = build_frame(spec, marker, payload)?;
        truth.push(FrameTruth {
            frame_start: bits.len(),
            payload_start: bits.len() + spec.params.header_len(),
            frame_len: frame.len(),
        });
        bits.extend_from(&frame);
    }
    Ok(Transmission {
        bits,
        frames: truth,
    })
}

/// Sidecar with columns `frame_index,payload_start_bit`.
pub fn write_truth_csv(path: &Path, frames: &[FrameTruth]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["frame_index", "payload_start_bit"])
        .map_err(csv_err)?;
    for (i, f) in frames.iter().enumerate() {
        w.write_record([i.to_string(), f.payload_start.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<usize>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut starts = Vec::new();
    for rec in r.deserialize::<(usize, usize)>() {
        starts.push(rec.map_err(csv_err)?.1);
    }
    Ok(starts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitvec::hamming_same;

    fn l8_marker() -> Marker {
        Marker::from_text("10001110").unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SyncParams::new(8, 3, 6).is_ok());
        assert!(SyncParams::new(8, 4, 6).is_err());
        assert!(SyncParams::new(8, 0, 6).is_err());
        assert!(SyncParams::new(8, 3, 0).is_err());
        assert!(SyncParams::new(8, 3, 9).is_err());
        assert!(SyncParams::new(8, 3, 8).is_ok());
        let d = SyncParams::default();
        assert_eq!((d.l, d.k, d.threshold), (123, 23, 89));
    }

    #[test]
    fn gen_marker_is_deterministic() {
        assert_eq!(gen_marker(8, 42).unwrap(), gen_marker(8, 42).unwrap());
        assert_ne!(gen_marker(64, 1).unwrap(), gen_marker(64, 2).unwrap());
        assert_eq!(gen_marker(123, 0).unwrap().len(), 123);
        assert!(gen_marker(2, 0).is_err());
    }

    #[test]
    fn gen_marker_ones_are_binomial() {
        // 10^4 markers of 123 bits: total ones ~ Bin(1_230_000, 1/2).
        let draws = 10_000u64;
        let total: usize = (0..draws)
            .map(|s| gen_marker(123, s).unwrap().bits().count_ones())
            .sum();
        let mean = total as f64 / draws as f64;
        let sigma_of_mean = (123.0f64 * 0.25 / draws as f64).sqrt();
        assert!(
            (mean - 61.5).abs() <= 3.0 * sigma_of_mean,
            "mean ones {mean} outside 61.5 ± {}",
            3.0 * sigma_of_mean
        );
    }

    #[test]
    fn l8_header_wire_bits() {
        let h = build_header(&l8_marker(), 3).unwrap();
        assert_eq!(h.to_text(), "01110001110001");
        assert_eq!(h.slice(0, 3).to_text(), "011");
        assert_eq!(h.slice(3, 8).to_text(), "10001110");
        assert_eq!(h.slice(11, 3).to_text(), "001");
    }

    #[test]
    fn all_zero_marker_header() {
        let m = Marker::new(BitVec::zeros(5)).unwrap();
        assert_eq!(build_header(&m, 1).unwrap().to_text(), "1000001");
    }

    #[test]
    fn header_edges_are_complements() {
        let m = gen_marker(40, 5).unwrap();
        let k = 7;
        let h = build_header(&m, k).unwrap();
        let b = m.bits();
        assert_eq!(hamming_same(&h.slice(0, k), &b.slice(0, k)), 0);
        assert_eq!(hamming_same(&h.slice(k + 40, k), &b.slice(40 - k, k)), 0);
    }

    #[test]
    fn header_rejects_bad_k() {
        assert!(build_header(&l8_marker(), 4).is_err());
        assert!(build_header(&l8_marker(), 0).is_err());
    }

    #[test]
    fn frame_lengths_and_payload_inverse() {
        let p = SyncParams::new(8, 3, 7).unwrap();
        let spec = FrameSpec::new(p, 16).unwrap();
        let payload = BitVec::from_text("1100101011110000").unwrap();
        let f = build_frame(&spec, &l8_marker(), &payload).unwrap();
        assert_eq!(f.len(), 30);
        assert_eq!(f.slice(14, 16), payload);

        let spec = FrameSpec::new(SyncParams::default(), 12300).unwrap();
        assert_eq!(spec.frame_len(), 12469);
        assert_eq!(spec.n(), Some(100));
    }

    #[test]
    fn frame_rejects_wrong_payload_len() {
        let spec = FrameSpec::new(SyncParams::new(8, 3, 7).unwrap(), 16).unwrap();
        assert!(matches!(
            build_frame(&spec, &l8_marker(), &BitVec::zeros(15)),
            Err(Error::LengthMismatch {
                expected: 16,
                actual: 15
            })
        ));
    }

    #[test]
    fn capture_spec_needs_multiple_of_l() {
        let p = SyncParams::new(8, 3, 7).unwrap();
        assert!(FrameSpec::for_capture(p, 16).is_ok());
        assert!(FrameSpec::for_capture(p, 12).is_err());
        assert!(FrameSpec::for_capture(p, 0).is_err());
    }

    #[test]
    fn transmission_offsets() {
        let p = SyncParams::new(8, 3, 7).unwrap();
        let spec = FrameSpec::new(p, 16).unwrap();
        let m = l8_marker();
        let frames = vec![(spec, BitVec::zeros(16)), (spec, BitVec::ones(16))];
        let t = build_transmission(&m, &frames, GapPolicy::None, 0).unwrap();
        assert_eq!(t.bits.len(), 60);
        assert_eq!(t.frames[1].payload_start, 30 + 14);

        let t = build_transmission(&m, &frames[..1], GapPolicy::Random { min: 40, max: 40 }, 0)
            .unwrap();
        assert_eq!(t.frames[0].payload_start, 40 + 8 + 6);
    }

    #[test]
    fn transmission_is_reproducible() {
        let p = SyncParams::new(16, 3, 14).unwrap();
        let spec = FrameSpec::new(p, 32).unwrap();
        let m = gen_marker(16, 1).unwrap();
        let frames: Vec<_> = (0..100)
            .map(|i| (spec, gen_marker(32, i).unwrap().bits().clone()))
            .collect();
        let gap = GapPolicy::Random { min: 0, max: 50 };
        let a = build_transmission(&m, &frames, gap, 7).unwrap();
        let b = build_transmission(&m, &frames, gap, 7).unwrap();
        assert_eq!(a.bits, b.bits);
        assert_eq!(a.frames, b.frames);
    }

    #[test]
    fn transmission_rejects_mixed_params() {
        let m = gen_marker(16, 1).unwrap();
        let a = FrameSpec::new(SyncParams::new(16, 3, 14).unwrap(), 16).unwrap();
        let b = FrameSpec::new(SyncParams::new(16, 3, 13).unwrap(), 16).unwrap();
        let frames = vec![(a, BitVec::zeros(16)), (b, BitVec::zeros(16))];
        assert!(build_transmission(&m, &frames, GapPolicy::None, 0).is_err());
    }

    #[test]
    fn truth_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        let frames = [
            FrameTruth {
                frame_start: 0,
                payload_start: 14,
                frame_len: 30,
            },
            FrameTruth {
                frame_start: 35,
                payload_start: 49,
                frame_len: 30,
            },
        ];
        write_truth_csv(&path, &frames).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "frame_index,payload_start_bit\n0,14\n1,49\n");
        assert_eq!(read_truth_csv(&path).unwrap(), vec![14, 49]);
    }
}
