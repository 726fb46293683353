//! Canonical state hashing.
//!
//! Values are written little-endian into a 64-bit FNV-1a hasher. Reals are
//! first snapped to a 1e-9 grid and written as `i64`, so the digest does
//! not depend on the last few bits of a float.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Grid used to quantize reals before hashing.
pub const HASH_GRID: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct StateHasher {
    state: u64,
}

impl Default for StateHasher {
    fn default() -> Self {
        StateHasher { state: FNV_OFFSET }
    }
}

impl StateHasher {
    pub fn new() -> StateHasher {
        StateHasher::default()
    }

    pub fn bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state ^= u64::from(b);
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn u8(&mut self, v: u8) {
        self.bytes(&[v]);
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn bool(&mut self, v: bool) {
        self.u8(u8::from(v));
    }

    /// Length-prefixed UTF-8.
    pub fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes(s.as_bytes());
    }

    pub fn real(&mut self, v: f64) {
        self.i64(quantize(v));
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

/// `v` on the 1e-9 grid. Negative zero maps to zero; NaN maps to `i64::MIN`.
pub fn quantize(v: f64) -> i64 {
    if v.is_nan() {
        return i64::MIN;
    }
    // saturating float-to-int cast
    libm::round(v / HASH_GRID) as i64
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = StateHasher::new();
    h.bytes(bytes);
    h.finish()
}
