//! Counter-based 64-bit generator with independent substreams.
//!
//! Output word `k` (k = 1, 2, ...) of a stream with key `K` is
//! `mix64(K + k * 0x9E3779B97F4A7C15)`, where `mix64` is the SplitMix64
//! finalizer. The key of a stream is derived from the user seed, a stream id
//! and a substream index (one substream per sample row):
//!
//! ```text
//! stream_key = mix64(mix64(value ^ 0x243F6A8885A308D3) ^ (stream_id * 0x9E3779B97F4A7C15))
//! row_key    = mix64(stream_key ^ mix64(row + 0x13198A2E03707344))
//! ```
//!
//! Every operation is integer arithmetic modulo 2^64, so the words are
//! identical on every platform. Uniform doubles take the top 53 bits and are
//! centred in their cell: `((w >> 11) + 0.5) * 2^-53`, which never returns 0 or 1.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x243F_6A88_85A3_08D3;
const ROW_SALT: u64 = 0x1319_8A2E_0370_7344;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// User seed plus a stream id; together they fix every draw bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed {
    pub value: u64,
    pub stream_id: u64,
}

impl Seed {
    pub fn new(value: u64, stream_id: u64) -> Self {
        Seed { value, stream_id }
    }

    pub fn with_stream(self, stream_id: u64) -> Self {
        Seed { stream_id, ..self }
    }

    fn stream_key(&self) -> u64 {
        mix64(mix64(self.value ^ SEED_SALT) ^ self.stream_id.wrapping_mul(GOLDEN_GAMMA))
    }

    /// Generator for substream `index` of this seed.
    pub fn substream(&self, index: u64) -> CounterRng {
        CounterRng::from_key(mix64(self.stream_key() ^ mix64(index.wrapping_add(ROW_SALT))))
    }
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn from_key(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-rate exponential.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let word = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}
