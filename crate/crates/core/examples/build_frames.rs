//! Generate a marker, frame a few payloads with random gaps and write the
//! stream plus its ground truth.
//!
//!     cargo run --example build_frames -- /tmp/stream.bits /tmp/truth.csv

use std::path::PathBuf;

use framesync::bitvec::{write_bit_file, BitVec};
use framesync::framing::{
    build_transmission, gen_marker, write_truth_csv, FrameSpec, GapPolicy, SyncParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> framesync::Result<()> {
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let stream_path = args
        .next()
        .unwrap_or_else(|| std::env::temp_dir().join("stream.bits"));
    let truth_path = args
        .next()
        .unwrap_or_else(|| std::env::temp_dir().join("truth.csv"));

    let params = SyncParams::new(64, 12, 50)?;
    let spec = FrameSpec::for_capture(params, 4 * 64)?;
    let marker = gen_marker(64, 7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let frames: Vec<_> = (0..5)
        .map(|_| (spec, BitVec::random(256, &mut rng)))
        .collect();
    let tx = build_transmission(&marker, &frames, GapPolicy::Random { min: 0, max: 64 }, 9)?;

    println!("marker {}", marker.bits());
    for (i, f) in tx.frames.iter().enumerate() {
        println!(
            "frame {i}: starts at bit {}, payload at {}, {} bits",
            f.frame_start, f.payload_start, f.frame_len
        );
    }
    write_bit_file(&stream_path, &tx.bits)?;
    write_truth_csv(&truth_path, &tx.frames)?;
    println!(
        "{} bits -> {}, truth -> {}",
        tx.bits.len(),
        stream_path.display(),
        truth_path.display()
    );
    Ok(())
}
