//! Bit-level noise models applied between transmitter and receiver.
//!
//! The receiver only ever sees hard decisions, so any modem in front of it
//! reduces to some bit-flip process. Two are provided: the binary symmetric
//! channel and antipodal (BPSK) signalling over AWGN with a slicer at zero,
//! whose flip probability is `Q(sqrt(2 * Eb/N0))`.

use std::fmt;

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::bitvec::BitVec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    Identity,
    Bsc {
        ber: f64,
    },
    /// `snr_db` is Eb/N0 per bit in decibels.
    BpskAwgn {
        snr_db: f64,
    },
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Identity => "identity",
            Channel::Bsc { .. } => "bsc",
            Channel::BpskAwgn { .. } => "bpsk-awgn",
        }
    }

    /// The swept parameter: `ber` for BSC, `snr_db` for BPSK, 0 otherwise.
    pub fn param(&self) -> f64 {
        match *self {
            Channel::Identity => 0.0,
            Channel::Bsc { ber } => ber,
            Channel::BpskAwgn { snr_db } => snr_db,
        }
    }

    pub fn from_name(name: &str, param: f64) -> Result<Self> {
        let ch = match name {
            "identity" => Channel::Identity,
            "bsc" => Channel::Bsc { ber: param },
            "bpsk-awgn" => Channel::BpskAwgn { snr_db: param },
            other => {
                return Err(Error::InvalidChannel(format!("unknown channel {other:?}")));
            }
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Channel::Identity => Ok(()),
            Channel::Bsc { ber } if !(0.0..=0.5).contains(&ber) => {
                Err(Error::InvalidChannel(format!("ber {ber} outside [0, 0.5]")))
            }
            Channel::BpskAwgn { snr_db } if snr_db.is_nan() => {
                Err(Error::InvalidChannel("snr_db is NaN".into()))
            }
            _ => Ok(()),
        }
    }

    /// Per-bit flip probability of this channel.
    pub fn flip_probability(&self) -> f64 {
        match *self {
            Channel::Identity => 0.0,
            Channel::Bsc { ber } => ber,
            Channel::BpskAwgn { snr_db } => ber_of_snr(snr_db),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Channel::Identity => f.write_str("identity"),
            Channel::Bsc { ber } => write!(f, "bsc(ber={ber})"),
            Channel::BpskAwgn { snr_db } => write!(f, "bpsk-awgn(snr_db={snr_db})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub channel: Channel,
    pub seed: u64,
}

impl ChannelSpec {
    pub fn new(channel: Channel, seed: u64) -> Result<Self> {
        channel.validate()?;
        Ok(Self { channel, seed })
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Hard-decision BPSK bit error rate at `snr_db` (Eb/N0).
pub fn ber_of_snr(snr_db: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    q_function((2.0 * snr).sqrt())
}

pub fn apply_channel(stream: &BitVec, spec: &ChannelSpec) -> Result<BitVec> {
    spec.channel.validate()?;
    let mut out = stream.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    corrupt_in_place(&mut out, &spec.channel, &mut rng);
    Ok(out)
}

/// Corrupts `bits` in place, drawing noise from `rng`. The channel must be
/// valid.
pub fn corrupt_in_place(bits: &mut BitVec, channel: &Channel, rng: &mut ChaCha8Rng) {
    match *channel {
        Channel::Identity => {}
        Channel::Bsc { ber } => {
            if ber == 0.0 {
                return;
            }
            let flip = Bernoulli::new(ber).expect("validated ber");
            for i in 0..bits.len() {
                if flip.sample(rng) {
                    bits.flip(i);
                }
            }
        }
        Channel::BpskAwgn { snr_db } => {
            let snr = 10f64.powf(snr_db / 10.0);
            let sigma = (1.0 / (2.0 * snr)).sqrt();
            for i in 0..bits.len() {
                let symbol = if bits.get(i) { -1.0 } else { 1.0 };
                let noise: f64 = StandardNormal.sample(rng);
                let received = symbol + sigma * noise;
                bits.set(i, received < 0.0);
            }
        }
    }
}
