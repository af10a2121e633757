//! FSER against BSC bit error rate at the default parameters, written as
//! CSV to stdout. Pass a frame count to shorten the run.

use framesync::harness::{run_fser_sweep, write_csv, ExperimentConfig};

fn main() -> framesync::Result<()> {
    env_logger::init();
    let mut config = ExperimentConfig::default();
    if let Some(n) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        config.frames_per_point = n;
    }
    let reports = run_fser_sweep(&config)?;
    for r in &reports {
        eprintln!(
            "{}: {} ok, {} missed, {} misaligned",
            r.point.channel, r.tally.success, r.tally.missed, r.tally.misaligned
        );
    }
    let points: Vec<_> = reports.iter().map(|r| r.point).collect();
    write_csv(&points, std::io::stdout().lock()).map_err(|e| framesync::Error::io("<stdout>", e))
}
