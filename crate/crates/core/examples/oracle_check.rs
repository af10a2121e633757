//! Cross-check the word-parallel receiver against the bit-serial oracle on
//! random noisy streams, and compare its detections with the genie matched
//! filter.

use framesync::bitvec::BitVec;
use framesync::capture::{oracle_genie, oracle_serial, run_receiver};
use framesync::channel::{corrupt_in_place, Channel};
use framesync::framing::{build_transmission, gen_marker, FrameSpec, GapPolicy, SyncParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> framesync::Result<()> {
    let params = SyncParams::new(16, 3, 13)?;
    let spec = FrameSpec::for_capture(params, 48)?;
    let mut mismatches = 0;
    let mut records = 0;
    for seed in 0..2000u64 {
        let marker = gen_marker(16, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64((seed + 1) << 32);
        let frames: Vec<_> = (0..4)
            .map(|_| (spec, BitVec::random(48, &mut rng)))
            .collect();
        let mut bits = build_transmission(
            &marker,
            &frames,
            GapPolicy::Random { min: 0, max: 40 },
            seed,
        )?
        .bits;
        corrupt_in_place(&mut bits, &Channel::Bsc { ber: 0.03 }, &mut rng);
        for during in [false, true] {
            let rx = run_receiver(&bits, &marker, &spec, during)?;
            records += rx.len();
            if rx != oracle_serial(&bits, &marker, &spec, during) {
                mismatches += 1;
            }
        }
        if seed == 0 {
            let genie = oracle_genie(&bits, &marker, params.threshold);
            println!(
                "seed 0: genie offsets above threshold {:?}",
                genie.iter().map(|g| g.offset).collect::<Vec<_>>()
            );
            let rx = run_receiver(&bits, &marker, &spec, false)?;
            println!(
                "seed 0: receiver marker offsets {:?}",
                rx.iter()
                    .map(|r| r.payload_start_bit - 16 - 3)
                    .collect::<Vec<_>>()
            );
        }
    }
    println!("4000 runs, {records} records, {mismatches} mismatches against the serial oracle");
    Ok(())
}
