//! Counter-based seed derivation. Every random stream in a sweep is keyed by
//! `(master, label, repetition, role)`, so adding a method or a function to
//! a config never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Design,
    TestDesign,
    MlFit,
    Mcmc,
    Rule2,
    Tau,
    Split,
    Other(u64),
}

impl Role {
    fn code(self) -> u64 {
        match self {
            Role::Design => 1,
            Role::TestDesign => 2,
            Role::MlFit => 3,
            Role::Mcmc => 4,
            Role::Rule2 => 5,
            Role::Tau => 6,
            Role::Split => 7,
            Role::Other(k) => 1000 + k,
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn derive_seed(master: u64, label: &str, repetition: u64, role: Role) -> u64 {
    let mut h = splitmix(master);
    h = splitmix(h ^ fnv1a(label));
    h = splitmix(h ^ repetition);
    splitmix(h ^ role.code())
}

pub fn stream(master: u64, label: &str, repetition: u64, role: Role) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, repetition, role))
}
