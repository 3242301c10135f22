use rand::Rng;
use serde::{Deserialize, Serialize};

/// Independence level of a polynomial hash family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HashKind {
    Pairwise,
    FourWise,
}

impl HashKind {
    fn coefficients(self) -> usize {
        match self {
            HashKind::Pairwise => 2,
            HashKind::FourWise => 4,
        }
    }
}

/// h(x) = Σ a_i x^i mod M with uniformly drawn coefficients, M prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFunction {
    pub kind: HashKind,
    pub modulus: u64,
    /// Highest-degree coefficient first.
    pub coeffs: Vec<u64>,
}

impl HashFunction {
    pub fn draw<R: Rng + ?Sized>(kind: HashKind, modulus: u64, rng: &mut R) -> Self {
        let coeffs = (0..kind.coefficients()).map(|_| rng.gen_range(0..modulus)).collect();
        Self { kind, modulus, coeffs }
    }

    pub fn eval(&self, x: u64) -> u64 {
        let m = self.modulus as u128;
        let x = x as u128 % m;
        self.coeffs.iter().fold(0u128, |acc, &a| (acc * x + a as u128) % m) as u64
    }

    /// ±1 from the low bit of h(x).
    pub fn sign(&self, x: u64) -> i64 {
        if self.eval(x) & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Description as payload words: the modulus followed by the coefficients.
    pub fn words(&self) -> Vec<u64> {
        std::iter::once(self.modulus).chain(self.coeffs.iter().copied()).collect()
    }

    pub fn from_words(kind: HashKind, words: &[u64]) -> Option<Self> {
        let (&modulus, coeffs) = words.split_first()?;
        (coeffs.len() == kind.coefficients() && modulus > 0).then(|| Self { kind, modulus, coeffs: coeffs.to_vec() })
    }

    /// Values h(start), h(start + step), h(start + 2·step), … of length `count`,
    /// evaluated by forward differences.
    pub fn eval_progression(&self, start: u64, step: u64, count: usize, out: &mut Vec<u64>) {
        out.clear();
        let m = self.modulus;
        let degree = self.coeffs.len() - 1;
        let mut diffs: Vec<u64> = (0..=degree as u64)
            .map(|i| self.eval(((start as u128 + i as u128 * step as u128) % m as u128) as u64))
            .collect();
        for level in 1..=degree {
            for i in (level..=degree).rev() {
                diffs[i] = sub_mod(diffs[i], diffs[i - 1], m);
            }
        }
        for _ in 0..count {
            out.push(diffs[0]);
            for i in 0..degree {
                diffs[i] = add_mod(diffs[i], diffs[i + 1], m);
            }
        }
    }
}

fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (if s >= m as u128 { s - m as u128 } else { s }) as u64
}

fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn smallest_prime_at_least(x: u64) -> u64 {
    (x.max(2)..).find(|&c| is_prime(c)).expect("prime below 2^64")
}

/// Smallest prime ≥ N³ (at least 2), the hash modulus and KMV range.
pub fn cube_modulus(universe: u64) -> u64 {
    smallest_prime_at_least((universe as u128).pow(3).min(u64::MAX as u128 / 4) as u64)
}
