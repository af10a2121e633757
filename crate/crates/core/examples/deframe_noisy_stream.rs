//! Frame random payloads, push them through a binary symmetric channel and
//! recover them with the receiver. Prints the capture trace.

use framesync::bitvec::{hamming_distance, BitVec};
use framesync::capture::run_receiver;
use framesync::channel::{apply_channel, Channel, ChannelSpec};
use framesync::framing::{build_transmission, gen_marker, FrameSpec, GapPolicy, SyncParams};
use framesync::harness::score_transmission;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> framesync::Result<()> {
    let ber: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.05);
    let params = SyncParams::default();
    let spec = FrameSpec::for_capture(params, 12_300)?;
    let marker = gen_marker(params.l, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let frames: Vec<_> = (0..8)
        .map(|_| (spec, BitVec::random(12_300, &mut rng)))
        .collect();
    let tx = build_transmission(
        &marker,
        &frames,
        GapPolicy::Random {
            min: 0,
            max: params.l,
        },
        5,
    )?;
    let rx_bits = apply_channel(&tx.bits, &ChannelSpec::new(Channel::Bsc { ber }, 6)?)?;

    let records = run_receiver(&rx_bits, &marker, &spec, false)?;
    println!(
        "ber={ber}: {} frames sent, {} captures",
        frames.len(),
        records.len()
    );
    for r in &records {
        let sent = frames
            .iter()
            .zip(&tx.frames)
            .find(|(_, t)| t.payload_start == r.payload_start_bit)
            .map(|((_, p), _)| hamming_distance(p, &r.payload));
        println!(
            "  start={:>7} m={:>3} sum_m={:>3} chunks={}+..+{} cycles={} {} payload bit errors={}",
            r.payload_start_bit,
            r.detected_m,
            r.detected_sum,
            r.chunks[0],
            r.chunks[r.chunks.len() - 1],
            r.valid_trace.len(),
            r.status.as_str(),
            sent.map_or("n/a".into(), |e| e.to_string()),
        );
    }
    let outcomes = score_transmission(&records, &tx.frames);
    println!("outcomes: {outcomes:?}");
    Ok(())
}
