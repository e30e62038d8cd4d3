//! Finite abelian groups `Z_{d_1} + ... + Z_{d_k}` in explicit coordinates.

use crate::error::{Error, Result};

/// Elements are addressed by a mixed-radix code with the first coordinate
/// most significant, so code order is lexicographic order on coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbelianGroup {
    orders: Vec<u64>,
    strides: Vec<u64>,
    size: u64,
}

/// Largest group for which element tables are built.
pub const MAX_GROUP_SIZE: u64 = 1 << 24;

impl AbelianGroup {
    pub fn new(orders: Vec<u64>) -> Result<Self> {
        if orders.iter().any(|&d| d < 2) {
            return Err(Error::InvalidArgument(format!(
                "cyclic orders must be at least 2, got {orders:?}"
            )));
        }
        let mut size: u64 = 1;
        for &d in &orders {
            size = size
                .checked_mul(d)
                .filter(|&s| s <= MAX_GROUP_SIZE)
                .ok_or_else(|| {
                    Error::TooLarge(format!("group with orders {orders:?} exceeds {MAX_GROUP_SIZE} elements"))
                })?;
        }
        let mut strides = vec![1u64; orders.len()];
        for i in (0..orders.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * orders[i + 1];
        }
        Ok(AbelianGroup {
            orders,
            strides,
            size,
        })
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// Least common multiple of the orders.
    pub fn exponent(&self) -> u64 {
        self.orders.iter().fold(1, |acc, &d| lcm(acc, d))
    }

    pub fn encode(&self, x: &[u64]) -> u64 {
        x.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn decode_into(&self, code: u64, out: &mut [u64]) {
        for (i, (&s, &d)) in self.strides.iter().zip(&self.orders).enumerate() {
            out[i] = (code / s) % d;
        }
    }

    pub fn decode(&self, code: u64) -> Vec<u64> {
        let mut out = vec![0; self.rank()];
        self.decode_into(code, &mut out);
        out
    }

    /// Reduces an arbitrary integer vector into canonical coordinates.
    pub fn reduce(&self, x: &[i64]) -> Vec<u64> {
        x.iter()
            .zip(&self.orders)
            .map(|(&a, &d)| a.rem_euclid(d as i64) as u64)
            .collect()
    }

    /// Codes of all `x` with `n * x == 0`, ascending.
    pub fn torsion_codes(&self, n: u64) -> Vec<u64> {
        // coordinate i ranges over multiples of d_i / gcd(d_i, n)
        let steps: Vec<u64> = self.orders.iter().map(|&d| d / gcd(d, n)).collect();
        let mut out = Vec::new();
        let mut x = vec![0u64; self.rank()];
        loop {
            out.push(self.encode(&x));
            let mut i = self.rank();
            loop {
                if i == 0 {
                    out.sort_unstable();
                    return out;
                }
                i -= 1;
                x[i] += steps[i];
                if x[i] < self.orders[i] {
                    break;
                }
                x[i] = 0;
            }
        }
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Whether a square matrix over `Z/p` (entries already reduced) is invertible.
pub fn invertible_mod_p(mut m: Vec<u64>, n: usize, p: u64) -> bool {
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| m[r * n + col] % p != 0) else {
            return false;
        };
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
            }
        }
        let inv = mod_inverse(m[col * n + col] % p, p);
        for r in col + 1..n {
            let f = m[r * n + col] % p * inv % p;
            if f == 0 {
                continue;
            }
            for j in col..n {
                let sub = f * (m[col * n + j] % p) % p;
                m[r * n + j] = (m[r * n + j] % p + p - sub) % p;
            }
        }
    }
    true
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // p prime, a nonzero mod p
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    t.rem_euclid(p as i128) as u64
}
