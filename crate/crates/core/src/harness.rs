//! Monte-Carlo frame synchronization error rate (FSER) experiments.
//!
//! A sweep builds random frames, pushes them through a channel and the
//! receiver, and scores each frame by position: a frame counts as
//! synchronized only if a complete capture starts exactly on its first
//! payload bit. Work is split into fixed-size batches, each with its own
//! derived seed, so the result does not depend on thread scheduling.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::bitvec::BitVec;
use crate::capture::{oracle_serial, run_receiver, CaptureRecord};
use crate::channel::{corrupt_in_place, Channel};
use crate::correlator::{correlate_window, pipeline_latency, select_max, WindowState};
use crate::error::{Error, Result};
use crate::framing::{
    build_header, build_transmission, gen_marker, FrameSpec, FrameTruth, GapPolicy, Marker,
    SyncParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOutcome {
    Success,
    Missed,
    Misaligned,
}

/// Scores one frame against the capture chosen for it (if any).
pub fn score_frame(record: Option<&CaptureRecord>, truth: &FrameTruth) -> FrameOutcome {
    let Some(r) = record else {
        return FrameOutcome::Missed;
    };
    if r.is_complete() && r.payload_start_bit == truth.payload_start {
        return FrameOutcome::Success;
    }
    let payload_len = truth.frame_end() - truth.payload_start;
    let (start, end) = (r.payload_start_bit, r.payload_start_bit + payload_len);
    if start < truth.frame_end() && truth.frame_start < end {
        FrameOutcome::Misaligned
    } else {
        FrameOutcome::Missed
    }
}

/// Pairs every frame with its best capture (exact start first, then any
/// overlapping one) and scores it.
pub fn score_transmission(records: &[CaptureRecord], frames: &[FrameTruth]) -> Vec<FrameOutcome> {
    frames
        .iter()
        .map(|truth| {
            let exact = records
                .iter()
                .find(|r| r.is_complete() && r.payload_start_bit == truth.payload_start);
            let chosen = exact.or_else(|| {
                records
                    .iter()
                    .find(|r| score_frame(Some(r), truth) == FrameOutcome::Misaligned)
            });
            score_frame(chosen, truth)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub success: usize,
    pub missed: usize,
    pub misaligned: usize,
    /// Batches that failed with an error; their frames are not counted.
    pub failed_batches: usize,
}

impl Tally {
    pub fn frames(&self) -> usize {
        self.success + self.missed + self.misaligned
    }

    pub fn sync_errors(&self) -> usize {
        self.missed + self.misaligned
    }

    fn add(&mut self, other: &Tally) {
        self.success += other.success;
        self.missed += other.missed;
        self.misaligned += other.misaligned;
        self.failed_batches += other.failed_batches;
    }

    fn record(&mut self, outcome: FrameOutcome) {
        match outcome {
            FrameOutcome::Success => self.success += 1,
            FrameOutcome::Missed => self.missed += 1,
            FrameOutcome::Misaligned => self.misaligned += 1,
        }
    }
}

/// One row of the FSER table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FserPoint {
    pub channel: Channel,
    pub frames: usize,
    pub sync_errors: usize,
    pub fser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl FserPoint {
    pub fn new(channel: Channel, frames: usize, sync_errors: usize) -> Self {
        let (ci_low, ci_high) = wilson_ci95(sync_errors, frames);
        Self {
            channel,
            frames,
            sync_errors,
            fser: if frames == 0 {
                0.0
            } else {
                sync_errors as f64 / frames as f64
            },
            ci_low,
            ci_high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointReport {
    pub point: FserPoint,
    pub tally: Tally,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% confidence.
pub fn wilson_ci95(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seed for sub-stream `(stream, index)` of `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: SyncParams,
    pub payload_len: usize,
    pub channels: Vec<Channel>,
    pub frames_per_point: usize,
    pub gap: GapPolicy,
    pub master_seed: u64,
    /// Explicit marker; generated from `master_seed` when absent.
    pub marker: Option<Marker>,
    pub detector_during_capture: bool,
    pub batch_size: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = SyncParams::default();
        Self {
            params,
            payload_len: 12_300,
            channels: [0.001, 0.01, 0.05, 0.1, 0.2, 0.3]
                .into_iter()
                .map(|ber| Channel::Bsc { ber })
                .collect(),
            frames_per_point: 2000,
            gap: GapPolicy::Random {
                min: 0,
                max: params.l,
            },
            master_seed: 1,
            marker: None,
            detector_during_capture: false,
            batch_size: 50,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        FrameSpec::for_capture(self.params, self.payload_len)?;
        self.gap.validate()?;
        for ch in &self.channels {
            ch.validate()?;
        }
        if self.frames_per_point == 0 {
            return Err(Error::InvalidConfig(
                "frames_per_point must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if let Some(m) = &self.marker {
            if m.len() != self.params.l {
                return Err(Error::LengthMismatch {
                    expected: self.params.l,
                    actual: m.len(),
                });
            }
        }
        Ok(())
    }

    pub fn marker(&self) -> Result<Marker> {
        match &self.marker {
            Some(m) => Ok(m.clone()),
            None => gen_marker(self.params.l, derive_seed(self.master_seed, 0, 0)),
        }
    }

    /// Overlays the keys present in a config file.
    pub fn apply_file(&mut self, file: &ConfigFile) -> Result<()> {
        if let Some(l) = file.l {
            self.params.l = l;
            if let GapPolicy::Random { min: 0, .. } = self.gap {
                self.gap = GapPolicy::Random { min: 0, max: l };
            }
        }
        if let Some(k) = file.k {
            self.params.k = k;
        }
        if let Some(t) = file.threshold {
            self.params.threshold = t;
        }
        if let Some(p) = file.payload_len {
            self.payload_len = p;
        }
        if let Some(f) = file.frames_per_point {
            self.frames_per_point = f;
        }
        if let Some(s) = file.seed {
            self.master_seed = s;
        }
        if let Some(d) = file.detector_during_capture {
            self.detector_during_capture = d;
        }
        if let Some(b) = file.batch_size {
            self.batch_size = b;
        }
        if let Some(text) = &file.marker {
            self.marker = Some(Marker::from_text(text)?);
        }
        if file.gap.is_some() || file.gap_min.is_some() || file.gap_max.is_some() {
            let (min, max) = match self.gap {
                GapPolicy::Zeros { min, max } | GapPolicy::Random { min, max } => (min, max),
                GapPolicy::None => (0, self.params.l),
            };
            let min = file.gap_min.unwrap_or(min);
            let max = file.gap_max.unwrap_or(max);
            let kind = file.gap.as_deref().unwrap_or(match self.gap {
                GapPolicy::None => "none",
                GapPolicy::Zeros { .. } => "zeros",
                GapPolicy::Random { .. } => "random",
            });
            self.gap = parse_gap(kind, min, max)?;
        }
        if let Some(points) = &file.points {
            let kind = file.channel.as_deref().unwrap_or("bsc");
            self.channels = points
                .iter()
                .map(|&v| Channel::from_name(kind, v))
                .collect::<Result<_>>()?;
        } else if let Some(kind) = &file.channel {
            if kind == "identity" {
                self.channels = vec![Channel::Identity];
            } else {
                return Err(Error::InvalidConfig(format!(
                    "channel {kind:?} needs a list of points"
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_gap(kind: &str, min: usize, max: usize) -> Result<GapPolicy> {
    let gap = match kind {
        "none" => GapPolicy::None,
        "zeros" => GapPolicy::Zeros { min, max },
        "random" => GapPolicy::Random { min, max },
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown gap policy {other:?}"
            )))
        }
    };
    gap.validate()?;
    Ok(gap)
}

/// Plain key-value experiment file (TOML syntax), e.g.
///
/// ```text
/// l = 123
/// k = 23
/// threshold = 89
/// payload_len = 12300
/// channel = "bsc"
/// points = [0.001, 0.01, 0.1]
/// frames_per_point = 2000
/// seed = 1
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub l: Option<usize>,
    pub k: Option<usize>,
    pub threshold: Option<usize>,
    pub payload_len: Option<usize>,
    pub frames_per_point: Option<usize>,
    pub channel: Option<String>,
    pub points: Option<Vec<f64>>,
    pub gap: Option<String>,
    pub gap_min: Option<usize>,
    pub gap_max: Option<usize>,
    pub seed: Option<u64>,
    pub marker: Option<String>,
    pub detector_during_capture: Option<bool>,
    pub batch_size: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Runs one batch of frames through `channel` and scores them.
pub fn run_batch(
    config: &ExperimentConfig,
    marker: &Marker,
    channel: &Channel,
    frames: usize,
    seed: u64,
) -> Result<Tally> {
    let spec = FrameSpec::for_capture(config.params, config.payload_len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payloads: Vec<_> = (0..frames)
        .map(|_| (spec, BitVec::random(config.payload_len, &mut rng)))
        .collect();
    let mut tx = build_transmission(marker, &payloads, config.gap, rng.next_u64())?;
    let mut noise = ChaCha8Rng::seed_from_u64(rng.next_u64());
    corrupt_in_place(&mut tx.bits, channel, &mut noise);
    let records = run_receiver(&tx.bits, marker, &spec, config.detector_during_capture)?;
    let mut tally = Tally::default();
    for outcome in score_transmission(&records, &tx.frames) {
        tally.record(outcome);
    }
    Ok(tally)
}

pub fn run_fser_sweep(config: &ExperimentConfig) -> Result<Vec<PointReport>> {
    config.validate()?;
    let marker = config.marker()?;
    let batches = config.frames_per_point.div_ceil(config.batch_size);
    let jobs: Vec<(usize, usize)> = (0..config.channels.len())
        .flat_map(|p| (0..batches).map(move |b| (p, b)))
        .collect();
    let results: Vec<Tally> = jobs
        .par_iter()
        .map(|&(p, b)| {
            let frames = config
                .batch_size
                .min(config.frames_per_point - b * config.batch_size);
            let seed = derive_seed(config.master_seed, 1 + p as u64, b as u64);
            run_batch(config, &marker, &config.channels[p], frames, seed).unwrap_or_else(|e| {
                log::warn!("point {p} batch {b} failed: {e}");
                Tally {
                    failed_batches: 1,
                    ..Tally::default()
                }
            })
        })
        .collect();
    Ok(config
        .channels
        .iter()
        .enumerate()
        .map(|(p, &channel)| {
            let mut tally = Tally::default();
            for t in &results[p * batches..(p + 1) * batches] {
                tally.add(t);
            }
            PointReport {
                point: FserPoint::new(channel, tally.frames(), tally.sync_errors()),
                tally,
            }
        })
        .collect())
}

pub const CSV_HEADER: &str = "channel,param,frames,sync_errors,fser,ci_low,ci_high";

pub fn write_csv<W: Write>(points: &[FserPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.channel.name(),
            p.channel.param(),
            p.frames,
            p.sync_errors,
            p.fser,
            p.ci_low,
            p.ci_high
        )?;
    }
    Ok(())
}

pub fn emit_csv(points: &[FserPoint], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_csv(points, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    channel: String,
    param: f64,
    frames: usize,
    sync_errors: usize,
    fser: f64,
    ci_low: f64,
    ci_high: f64,
}

pub fn parse_csv<R: std::io::Read>(reader: R) -> std::result::Result<Vec<FserPoint>, String> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(format!("unexpected header {headers:?}"));
    }
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            Ok(FserPoint {
                channel: Channel::from_name(&row.channel, row.param).map_err(|e| e.to_string())?,
                frames: row.frames,
                sync_errors: row.sync_errors,
                fser: row.fser,
                ci_low: row.ci_low,
                ci_high: row.ci_high,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<FserPoint>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(f).map_err(Error::InvalidConfig)
}

/// Serial bits processed per second by the composed receiver, in Mbit/s.
pub fn measure_throughput(
    params: SyncParams,
    payload_len: usize,
    frames: usize,
    detector_during_capture: bool,
    seed: u64,
) -> Result<f64> {
    let spec = FrameSpec::for_capture(params, payload_len)?;
    let marker = gen_marker(params.l, derive_seed(seed, 0, 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
    let payloads: Vec<_> = (0..frames)
        .map(|_| (spec, BitVec::random(payload_len, &mut rng)))
        .collect();
    let gap = GapPolicy::Random {
        min: 0,
        max: params.l,
    };
    let tx = build_transmission(&marker, &payloads, gap, seed)?;
    let t0 = Instant::now();
    let records = run_receiver(&tx.bits, &marker, &spec, detector_during_capture)?;
    let secs = t0.elapsed().as_secs_f64();
    std::hint::black_box(records);
    Ok(tx.bits.len() as f64 / secs / 1e6)
}

#[derive(Debug, Clone)]
pub struct SelfTestResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick end-to-end checks of the reference configurations.
pub fn selftest() -> Vec<SelfTestResult> {
    let mut results = Vec::new();
    let mut check = |name, passed, detail: String| {
        results.push(SelfTestResult {
            name,
            passed,
            detail,
        })
    };

    let worked = (|| -> Result<(u32, usize)> {
        let marker = Marker::from_text("10001110")?;
        let mut reg = BitVec::zeros(1);
        reg.extend_from(&build_header(&marker, 3)?);
        reg.push(false);
        let sums = correlate_window(&WindowState::from_bits(reg)?, &marker)?;
        Ok(select_max(&sums))
    })();
    match worked {
        Ok((s, m)) => check(
            "l=8 worked example",
            s == 8 && m == 4 && 8 + 3 + m == 15,
            format!("sum_m={s} m={m} payload_start={}", 8 + 3 + m),
        ),
        Err(e) => check("l=8 worked example", false, e.to_string()),
    }

    let lat: Vec<_> = [8, 16, 123].iter().map(|&l| pipeline_latency(l)).collect();
    check("pipeline latency", lat == [6, 8, 14], format!("{lat:?}"));

    let noiseless = (|| -> Result<Tally> {
        let config = ExperimentConfig {
            channels: vec![Channel::Identity],
            frames_per_point: 20,
            ..ExperimentConfig::default()
        };
        let marker = config.marker()?;
        run_batch(&config, &marker, &Channel::Identity, 20, 7)
    })();
    match noiseless {
        Ok(t) => check(
            "noiseless l=123 frames",
            t.success == 20,
            format!("{} of 20 synchronized", t.success),
        ),
        Err(e) => check("noiseless l=123 frames", false, e.to_string()),
    }

    let equivalence = (|| -> Result<usize> {
        let mut mismatches = 0;
        for seed in 0..50u64 {
            let params = SyncParams::new(12, 2, 9)?;
            let spec = FrameSpec::for_capture(params, 24)?;
            let marker = gen_marker(12, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stream = BitVec::random(600, &mut rng);
            if run_receiver(&stream, &marker, &spec, false)?
                != oracle_serial(&stream, &marker, &spec, false)
            {
                mismatches += 1;
            }
        }
        Ok(mismatches)
    })();
    match equivalence {
        Ok(n) => check("serial oracle agreement", n == 0, format!("{n} mismatches")),
        Err(e) => check("serial oracle agreement", false, e.to_string()),
    }
    results
}
