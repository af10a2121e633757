use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use framesync::bitvec::{read_bit_file, write_bit_file, BitVec};
use framesync::capture::{run_receiver, CaptureRecord};
use framesync::channel::{apply_channel, Channel, ChannelSpec};
use framesync::framing::{
    build_transmission, gen_marker, write_truth_csv, FrameSpec, Marker, SyncParams,
};
use framesync::harness::{
    emit_csv, parse_gap, run_fser_sweep, selftest, ConfigFile, ExperimentConfig,
};
use framesync::{Error, Result};

#[derive(Parser)]
#[command(
    name = "framesync",
    version,
    about = "Correlation-based frame synchronization toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random marker.
    GenMarker {
        #[arg(long, default_value_t = 123)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output bit file (`.bin`/`.bits` = packed); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frame payload bits, optionally pass them through a channel.
    Frame(FrameArgs),
    /// Recover payloads from a received stream.
    Deframe(DeframeArgs),
    /// Monte-Carlo FSER sweep.
    FserSweep(SweepArgs),
    /// Run built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct MarkerArgs {
    /// Marker bit file.
    #[arg(long, conflicts_with = "marker_bits")]
    marker: Option<PathBuf>,
    /// Marker as a literal `0`/`1` string.
    #[arg(long)]
    marker_bits: Option<String>,
    /// Generate the marker from this seed when no marker is given.
    #[arg(long, default_value_t = 0)]
    marker_seed: u64,
}

impl MarkerArgs {
    fn load(&self, l: usize) -> Result<Marker> {
        let m = match (&self.marker, &self.marker_bits) {
            (Some(path), _) => Marker::new(read_bit_file(path)?)?,
            (None, Some(text)) => Marker::from_text(text)?,
            (None, None) => gen_marker(l, self.marker_seed)?,
        };
        if m.len() != l {
            return Err(Error::LengthMismatch {
                expected: l,
                actual: m.len(),
            });
        }
        Ok(m)
    }
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 123)]
    l: usize,
    #[arg(long, default_value_t = 23)]
    k: usize,
    #[arg(long, default_value_t = 89)]
    threshold: usize,
}

impl ParamArgs {
    fn params(&self) -> Result<SyncParams> {
        SyncParams::new(self.l, self.k, self.threshold)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelKind {
    Identity,
    Bsc,
    BpskAwgn,
}

#[derive(Clone, Copy, ValueEnum)]
enum GapKind {
    None,
    Zeros,
    Random,
}

#[derive(Args)]
struct FrameArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    marker: MarkerArgs,
    /// Payload bit file; split into frames of `--payload-len` bits.
    #[arg(long)]
    payload: PathBuf,
    /// Bits per frame payload; defaults to the whole file.
    #[arg(long)]
    payload_len: Option<usize>,
    #[arg(long, value_enum, default_value = "none")]
    gap: GapKind,
    #[arg(long, default_value_t = 0)]
    gap_min: usize,
    #[arg(long, default_value_t = 0)]
    gap_max: usize,
    #[arg(long, value_enum, default_value = "identity")]
    channel: ChannelKind,
    #[arg(long)]
    ber: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stream bit file.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth CSV (`frame_index,payload_start_bit`).
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct DeframeArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    marker: MarkerArgs,
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    payload_len: usize,
    /// Keep the detector running while a payload is being captured.
    #[arg(long)]
    detector_during_capture: bool,
    /// Concatenated payloads of complete captures.
    #[arg(long, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    /// Index CSV for `--out` (`capture_index,offset_bit,payload_start_bit`).
    #[arg(long, requires = "out")]
    index: Option<PathBuf>,
    /// Directory receiving one `payload_NNNNN.txt` per complete capture.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Capture trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Key-value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    payload_len: Option<usize>,
    #[arg(long)]
    frames_per_point: Option<usize>,
    #[arg(long, value_enum)]
    channel: Option<ChannelKind>,
    /// Comma-separated BER grid (bsc).
    #[arg(long, value_delimiter = ',')]
    ber: Option<Vec<f64>>,
    /// Comma-separated Eb/N0 grid in dB (bpsk-awgn).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    gap: Option<GapKind>,
    #[arg(long)]
    gap_min: Option<usize>,
    #[arg(long)]
    gap_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    marker_bits: Option<String>,
    #[arg(long)]
    detector_during_capture: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "fser.csv")]
    out: PathBuf,
}

fn gap_name(g: GapKind) -> &'static str {
    match g {
        GapKind::None => "none",
        GapKind::Zeros => "zeros",
        GapKind::Random => "random",
    }
}

fn channel_from_flags(kind: ChannelKind, ber: Option<f64>, snr_db: Option<f64>) -> Result<Channel> {
    let missing =
        |flag: &str| Error::InvalidChannel(format!("{flag} is required for this channel"));
    let ch = match kind {
        ChannelKind::Identity => Channel::Identity,
        ChannelKind::Bsc => Channel::Bsc {
            ber: ber.ok_or_else(|| missing("--ber"))?,
        },
        ChannelKind::BpskAwgn => Channel::BpskAwgn {
            snr_db: snr_db.ok_or_else(|| missing("--snr-db"))?,
        },
    };
    ch.validate()?;
    Ok(ch)
}

fn cmd_gen_marker(l: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let m = gen_marker(l, seed)?;
    match out {
        Some(p) => write_bit_file(p, m.bits()),
        None => {
            println!("{}", m.bits());
            Ok(())
        }
    }
}

fn cmd_frame(a: &FrameArgs) -> Result<()> {
    let params = a.params.params()?;
    let marker = a.marker.load(params.l)?;
    let data = read_bit_file(&a.payload)?;
    let p = a.payload_len.unwrap_or(data.len());
    if p == 0 || data.len() % p != 0 {
        return Err(Error::InvalidFrameSpec(format!(
            "payload file of {} bits does not split into frames of {p} bits",
            data.len()
        )));
    }
    let spec = FrameSpec::new(params, p)?;
    let frames: Vec<_> = (0..data.len() / p)
        .map(|i| (spec, data.slice(i * p, p)))
        .collect();
    let gap = parse_gap(gap_name(a.gap), a.gap_min, a.gap_max.max(a.gap_min))?;
    let tx = build_transmission(&marker, &frames, gap, a.seed)?;
    let channel = channel_from_flags(a.channel, a.ber, a.snr_db)?;
    let bits = apply_channel(&tx.bits, &ChannelSpec::new(channel, a.seed ^ 0x5eed)?)?;
    write_bit_file(&a.out, &bits)?;
    write_truth_csv(&a.truth, &tx.frames)?;
    eprintln!(
        "{} frame(s), {} bits -> {}",
        tx.frames.len(),
        bits.len(),
        a.out.display()
    );
    Ok(())
}

fn write_trace(path: &Path, records: &[CaptureRecord]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "trigger_cycle",
        "detect_cycle",
        "m",
        "sum_m",
        "payload_start_bit",
        "status",
        "valid",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.trigger_cycle.to_string(),
            r.detect_cycle.to_string(),
            r.detected_m.to_string(),
            r.detected_sum.to_string(),
            r.payload_start_bit.to_string(),
            r.status.as_str().to_string(),
            r.valid_trace_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn cmd_deframe(a: &DeframeArgs) -> Result<()> {
    let params = a.params.params()?;
    let marker = a.marker.load(params.l)?;
    let stream = read_bit_file(&a.stream)?;
    let spec = FrameSpec::for_capture(params, a.payload_len)?;
    let records = run_receiver(&stream, &marker, &spec, a.detector_during_capture)?;
    let complete: Vec<_> = records.iter().filter(|r| r.is_complete()).collect();

    if let Some(out) = &a.out {
        let mut all = BitVec::new();
        let mut rows = Vec::new();
        for (i, r) in complete.iter().enumerate() {
            rows.push((i, all.len(), r.payload_start_bit));
            all.extend_from(&r.payload);
        }
        write_bit_file(out, &all)?;
        if let Some(index) = &a.index {
            let csv_err = |source| Error::Csv {
                path: index.clone(),
                source,
            };
            let mut w = csv::Writer::from_path(index).map_err(csv_err)?;
            w.write_record(["capture_index", "offset_bit", "payload_start_bit"])
                .map_err(csv_err)?;
            for (i, off, start) in rows {
                w.write_record([i.to_string(), off.to_string(), start.to_string()])
                    .map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::io(index, e))?;
        }
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, r) in complete.iter().enumerate() {
            write_bit_file(&dir.join(format!("payload_{i:05}.txt")), &r.payload)?;
        }
    }
    if let Some(trace) = &a.trace {
        write_trace(trace, &records)?;
    }
    eprintln!("{} capture(s), {} complete", records.len(), complete.len());
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = &a.config {
        config.apply_file(&ConfigFile::load(path)?)?;
    }
    // Flags are folded in through the same overlay as the file.
    let points = match a.channel {
        Some(ChannelKind::BpskAwgn) => a.snr_db.clone(),
        Some(ChannelKind::Bsc) | None => a.ber.clone(),
        Some(ChannelKind::Identity) => None,
    };
    let flags = ConfigFile {
        l: a.l,
        k: a.k,
        threshold: a.threshold,
        payload_len: a.payload_len,
        frames_per_point: a.frames_per_point,
        channel: a.channel.map(|c| {
            match c {
                ChannelKind::Identity => "identity",
                ChannelKind::Bsc => "bsc",
                ChannelKind::BpskAwgn => "bpsk-awgn",
            }
            .to_string()
        }),
        points,
        gap: a.gap.map(|g| gap_name(g).to_string()),
        gap_min: a.gap_min,
        gap_max: a.gap_max,
        seed: a.seed,
        marker: a.marker_bits.clone(),
        detector_during_capture: a.detector_during_capture.then_some(true),
        batch_size: None,
    };
    config.apply_file(&flags)?;
    if let Some(n) = a.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let reports = run_fser_sweep(&config)?;
    for r in &reports {
        eprintln!(
            "{:<28} frames={:<6} missed={:<6} misaligned={:<6} fser={:.6}",
            r.point.channel.to_string(),
            r.point.frames,
            r.tally.missed,
            r.tally.misaligned,
            r.point.fser
        );
    }
    let points: Vec<_> = reports.iter().map(|r| r.point).collect();
    emit_csv(&points, &a.out)?;
    if reports.iter().any(|r| r.tally.failed_batches > 0) {
        return Err(Error::InvalidConfig("some batches failed; see log".into()));
    }
    Ok(())
}

fn cmd_selftest() -> bool {
    let mut ok = true;
    for r in selftest() {
        println!(
            "[{}] {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        ok &= r.passed;
    }
    ok
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenMarker { l, seed, out } => cmd_gen_marker(*l, *seed, out.as_deref()),
        Command::Frame(a) => cmd_frame(a),
        Command::Deframe(a) => cmd_deframe(a),
        Command::FserSweep(a) => cmd_sweep(a),
        Command::Selftest => {
            return if cmd_selftest() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
