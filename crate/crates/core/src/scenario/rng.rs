use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic, label-addressed random stream.
///
/// Each source is a 256-bit key. Deriving a child hashes the parent key with
/// the label, so streams never depend on draw order elsewhere in the
/// program.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RandomSource {
    key: [u8; 32],
}

impl std::fmt::Debug for RandomSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RandomSource({:02x}{:02x}{:02x}{:02x}..)", self.key[0], self.key[1], self.key[2], self.key[3])
    }
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"skycache/root");
        h.update(seed.to_le_bytes());
        RandomSource { key: h.finalize().into() }
    }

    /// Independent child stream. Panics on an empty label.
    pub fn derive(&self, label: &str) -> RandomSource {
        assert!(!label.is_empty(), "stream label must be nonempty");
        let mut h = Sha256::new();
        h.update(self.key);
        h.update([0u8]);
        h.update(label.as_bytes());
        RandomSource { key: h.finalize().into() }
    }

    /// Child stream keyed by an integer index, e.g. a user id.
    pub fn derive_index(&self, label: &str, index: u64) -> RandomSource {
        self.derive(&format!("{label}#{index}"))
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key)
    }
}

/// Derives the named stream for `seed`.
pub fn derive_stream(rs: &RandomSource, label: &str) -> RandomSource {
    rs.derive(label)
}
