//! Empirical flip rate of the BSC and hard-decision BPSK/AWGN channels
//! against their closed forms.

use framesync::bitvec::{hamming_distance, BitVec};
use framesync::channel::{apply_channel, Channel, ChannelSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> framesync::Result<()> {
    let n = 1_000_000;
    let sent = BitVec::random(n, &mut ChaCha8Rng::seed_from_u64(1));
    let channels = [
        Channel::Bsc { ber: 0.01 },
        Channel::Bsc { ber: 0.2 },
        Channel::BpskAwgn { snr_db: -8.0 },
        Channel::BpskAwgn { snr_db: 0.0 },
        Channel::BpskAwgn { snr_db: 2.0 },
        Channel::BpskAwgn { snr_db: 6.0 },
    ];
    println!(
        "{:<24} {:>10} {:>10} {:>7}",
        "channel", "measured", "expected", "z"
    );
    for (i, ch) in channels.into_iter().enumerate() {
        let got = apply_channel(&sent, &ChannelSpec::new(ch, 10 + i as u64)?)?;
        let rate = hamming_distance(&sent, &got) as f64 / n as f64;
        let p = ch.flip_probability();
        let z = (rate - p) / (p * (1.0 - p) / n as f64).sqrt();
        println!("{:<24} {rate:>10.6} {p:>10.6} {z:>+7.2}", ch.to_string());
    }
    Ok(())
}
