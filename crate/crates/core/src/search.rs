//! Pruned backtracking for isometries between split quadratic linking forms.
//!
//! A homomorphism `F: T1 -> T2` is fixed by the images `v_j = F(e_j)` of the
//! cyclic generators of `T1`; `v_j` must lie in the `d_j`-torsion of `T2`.
//! `F` preserves `(b, nu)` everywhere iff `nu2(v_j) = nu1(e_j)` for each `j`
//! and `b2(v_i, v_j) = b1(e_i, e_j)` for each `i <= j`. The first family of
//! conditions fixes per-column candidate sets; the second is checked as soon
//! as both columns of a pair are placed, so failing branches die early.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::boundary::SplitLinkingForm;
use crate::budget::{Budget, Ticker};
use crate::error::{Error, Result};
use crate::torsion::{invertible_mod_p, lcm, prime_divisors, AbelianGroup};

/// `(b, nu)` of a split form with values scaled by a common modulus `n`,
/// so `b(x, y) = pair(x, y) / n` and `nu(x) = nu(x) / n` in `Q/Z`.
#[derive(Clone, Debug)]
pub(crate) struct FormArithmetic {
    pub group: AbelianGroup,
    pub modulus: u64,
    /// `n * b_ij mod n`, row-major.
    b: Vec<u64>,
    /// Polynomial coefficients of `nu`: diagonal `n * R_ii`, and for `i < j`
    /// the combined cross term `n * (R_ij + R_ji)`, all mod `n`.
    poly: Vec<u64>,
}

impl FormArithmetic {
    pub fn modulus_of(form: &SplitLinkingForm) -> Result<u64> {
        let d = form.b_matrix().denominator_lcm();
        let d = num_integer::Integer::lcm(&d, &form.refinement_matrix().denominator_lcm());
        d.to_u64()
            .filter(|&m| m < (1 << 62))
            .ok_or_else(|| Error::TooLarge(format!("value denominator {d} exceeds 62 bits")))
    }

    pub fn new(form: &SplitLinkingForm, modulus: u64) -> Result<Self> {
        let k = form.orders().len();
        let group = AbelianGroup::new(form.orders().to_vec())?;
        let scale = |x: &BigRational| -> Result<u64> {
            let y = x * BigRational::from_integer(BigInt::from(modulus));
            if !y.is_integer() {
                return Err(Error::InvalidArgument(format!(
                    "modulus {modulus} does not clear denominator of {x}"
                )));
            }
            let m = BigInt::from(modulus);
            let r = ((y.to_integer() % &m) + &m) % &m;
            Ok(r.to_u64().expect("reduced below modulus"))
        };
        let bm = form.b_matrix();
        let rm = form.refinement_matrix();
        let mut b = vec![0; k * k];
        let mut poly = vec![0; k * k];
        for i in 0..k {
            for j in 0..k {
                b[i * k + j] = scale(bm.get(i, j))?;
                if i == j {
                    poly[i * k + i] = scale(rm.get(i, i))?;
                } else if i < j {
                    poly[i * k + j] = scale(&(rm.get(i, j) + rm.get(j, i)))?;
                }
            }
        }
        Ok(FormArithmetic {
            group,
            modulus,
            b,
            poly,
        })
    }

    pub fn rank(&self) -> usize {
        self.group.rank()
    }

    #[inline]
    fn reduce(&self, x: u128) -> u64 {
        (x % self.modulus as u128) as u64
    }

    pub fn pair(&self, x: &[u64], y: &[u64]) -> u64 {
        let k = self.rank();
        let mut acc: u128 = 0;
        for i in 0..k {
            if x[i] == 0 {
                continue;
            }
            let mut row: u128 = 0;
            for j in 0..k {
                row += self.b[i * k + j] as u128 * y[j] as u128;
            }
            acc += self.reduce(row) as u128 * x[i] as u128;
            acc = self.reduce(acc) as u128;
        }
        acc as u64
    }

    pub fn nu(&self, x: &[u64]) -> u64 {
        let k = self.rank();
        let mut acc: u128 = 0;
        for i in 0..k {
            if x[i] == 0 {
                continue;
            }
            let mut row: u128 = 0;
            for j in i..k {
                row += self.poly[i * k + j] as u128 * x[j] as u128;
                row = self.reduce(row) as u128;
            }
            acc += row * x[i] as u128;
            acc = self.reduce(acc) as u128;
        }
        acc as u64
    }

    /// Polarization `nu(x + y) - nu(x) - nu(y)`, scaled.
    pub fn polar(&self, x: &[u64], y: &[u64]) -> u64 {
        let k = self.rank();
        let mut acc: u128 = 0;
        for i in 0..k {
            for j in i..k {
                let c = self.poly[i * k + j] as u128;
                let m = if i == j {
                    2 * x[i] as u128 * y[i] as u128
                } else {
                    x[i] as u128 * y[j] as u128 + x[j] as u128 * y[i] as u128
                };
                acc = self.reduce(acc + c * self.reduce(m) as u128) as u128;
            }
        }
        acc as u64
    }

    /// Whether `b` is the polarization of `nu` (checked on generators, which
    /// suffices since both sides are bilinear).
    pub fn is_split(&self) -> bool {
        let k = self.rank();
        let e = |i: usize| -> Vec<u64> { (0..k).map(|l| u64::from(l == i)).collect() };
        (0..k).all(|i| (i..k).all(|j| self.polar(&e(i), &e(j)) == self.gen_pair(i, j)))
    }

    /// `b(e_i, e_j)` scaled.
    pub fn gen_pair(&self, i: usize, j: usize) -> u64 {
        self.b[i * self.rank() + j]
    }

    /// `nu(e_i)` scaled.
    pub fn gen_nu(&self, i: usize) -> u64 {
        self.poly[i * self.rank() + i]
    }
}

/// Largest target group for which the full pairing table is precomputed.
const PAIR_TABLE_MAX: u64 = 2048;

enum Pairing {
    Table { size: usize, values: Vec<u32> },
    Direct,
}

pub(crate) struct FormMatcher {
    source_orders: Vec<u64>,
    target: FormArithmetic,
    /// Scaled `b1(e_i, e_j)` for the source.
    src_pair: Vec<u64>,
    /// Scaled polarization of `nu1` on generator pairs, kept only when one of
    /// the forms is not split; then `b` alone no longer controls `nu`.
    src_polar: Option<Vec<u64>>,
    /// Per source column, the admissible target codes.
    candidates: Vec<Vec<u32>>,
    /// Decoded coordinates of every code appearing in some candidate set.
    coords: HashMap<u32, Vec<u64>>,
    /// Processing order of the source columns.
    order: Vec<usize>,
    pairing: Pairing,
    primes: Vec<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    All,
    First,
}

impl FormMatcher {
    pub fn new(source: &SplitLinkingForm, target: &SplitLinkingForm) -> Result<Option<Self>> {
        let mut src_orders = source.orders().to_vec();
        let mut tgt_orders = target.orders().to_vec();
        src_orders.sort_unstable();
        tgt_orders.sort_unstable();
        if src_orders != tgt_orders {
            return Ok(None);
        }
        let modulus = lcm(
            FormArithmetic::modulus_of(source)?,
            FormArithmetic::modulus_of(target)?,
        );
        let src = FormArithmetic::new(source, modulus)?;
        let tgt = FormArithmetic::new(target, modulus)?;
        let k = src.rank();
        if tgt.group.size() > u32::MAX as u64 {
            return Err(Error::TooLarge("target group exceeds 32-bit codes".into()));
        }

        let size = tgt.group.size();
        let mut coords = HashMap::new();
        let mut candidates = Vec::with_capacity(k);
        for j in 0..k {
            let want = src.gen_nu(j);
            let mut c = Vec::new();
            for code in tgt.group.torsion_codes(source.orders()[j]) {
                let x = tgt.group.decode(code);
                if tgt.nu(&x) == want && tgt.pair(&x, &x) == src.gen_pair(j, j) {
                    c.push(code as u32);
                    coords.entry(code as u32).or_insert(x);
                }
            }
            candidates.push(c);
        }

        let pairing = if size <= PAIR_TABLE_MAX && modulus <= u32::MAX as u64 {
            let n = size as usize;
            let all: Vec<Vec<u64>> = (0..size).map(|c| tgt.group.decode(c)).collect();
            let mut values = vec![0u32; n * n];
            for x in 0..n {
                for y in x..n {
                    let v = tgt.pair(&all[x], &all[y]) as u32;
                    values[x * n + y] = v;
                    values[y * n + x] = v;
                }
            }
            Pairing::Table { size: n, values }
        } else {
            Pairing::Direct
        };

        // Fewest candidates first; ties keep the natural column order.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&j| candidates[j].len());

        let mut src_pair = vec![0; k * k];
        for i in 0..k {
            for j in 0..k {
                src_pair[i * k + j] = src.gen_pair(i, j);
            }
        }
        let src_polar = (!(src.is_split() && tgt.is_split())).then(|| {
            let e = |i: usize| -> Vec<u64> { (0..k).map(|l| u64::from(l == i)).collect() };
            (0..k * k).map(|x| src.polar(&e(x / k), &e(x % k))).collect()
        });
        let exponent = source.orders().iter().fold(1, |a, &d| lcm(a, d));
        Ok(Some(FormMatcher {
            source_orders: source.orders().to_vec(),
            target: tgt,
            src_pair,
            src_polar,
            candidates,
            coords,
            order,
            pairing,
            primes: prime_divisors(exponent),
        }))
    }

    pub fn rank(&self) -> usize {
        self.source_orders.len()
    }

    /// Bits used per column in packed keys.
    pub fn column_bits(&self) -> u32 {
        let size = self.target.group.size();
        64 - (size - 1).leading_zeros()
    }

    #[inline]
    fn pair(&self, x: u32, y: u32) -> u64 {
        match &self.pairing {
            Pairing::Table { size, values } => values[x as usize * size + y as usize] as u64,
            Pairing::Direct => self
                .target
                .pair(&self.coords[&x], &self.coords[&y]),
        }
    }

    #[inline]
    fn src_pair(&self, i: usize, j: usize) -> u64 {
        self.src_pair[i * self.rank() + j]
    }

    fn invertible(&self, cols: &[u32]) -> bool {
        let k = self.rank();
        let rows = self.target.group.orders();
        for &p in &self.primes {
            let ri: Vec<usize> = (0..k).filter(|&i| rows[i] % p == 0).collect();
            let ci: Vec<usize> = (0..k).filter(|&j| self.source_orders[j] % p == 0).collect();
            if ri.len() != ci.len() {
                return false;
            }
            let n = ri.len();
            let mut m = Vec::with_capacity(n * n);
            for &i in &ri {
                for &j in &ci {
                    m.push(self.coords[&cols[j]][i] % p);
                }
            }
            if !invertible_mod_p(m, n, p) {
                return false;
            }
        }
        true
    }

    pub fn pack(&self, cols: &[u32]) -> u128 {
        let bits = self.column_bits();
        cols.iter().fold(0u128, |acc, &c| (acc << bits) | c as u128)
    }

    /// Column coordinates (target coordinates) for a code.
    pub fn decode_code(&self, code: u32) -> Vec<u64> {
        self.target.group.decode(code as u64)
    }

    pub fn run_all(&self, budget: &Budget) -> Result<Vec<u128>> {
        let k = self.rank();
        if k == 0 {
            return Ok(vec![0]);
        }
        if self.column_bits() as usize * k > 128 {
            return Err(Error::TooLarge(format!(
                "{k} columns of {} bits do not fit a 128-bit key",
                self.column_bits()
            )));
        }
        let first = self.order[0];
        let blocks = self.candidates[first]
            .par_iter()
            .map(|&c| {
                let mut out = Vec::new();
                let mut ticker = Ticker::new(budget);
                let mut cols = vec![u32::MAX; k];
                cols[first] = c;
                self.extend(1, &mut cols, Mode::All, &mut out, &mut ticker)?;
                Ok(out)
            })
            .collect::<Result<Vec<Vec<u128>>>>()?;
        let mut keys = blocks.concat();
        keys.sort_unstable();
        Ok(keys)
    }

    pub fn run_first(&self, budget: &Budget) -> Result<Option<Vec<u32>>> {
        let k = self.rank();
        if k == 0 {
            return Ok(Some(Vec::new()));
        }
        let first = self.order[0];
        let mut ticker = Ticker::new(budget);
        for &c in &self.candidates[first] {
            if !self.self_consistent(first, c) {
                continue;
            }
            let mut cols = vec![u32::MAX; k];
            cols[first] = c;
            if self.extend(1, &mut cols, Mode::First, &mut Vec::new(), &mut ticker)? {
                return Ok(Some(cols));
            }
        }
        Ok(None)
    }

    fn self_consistent(&self, j: usize, c: u32) -> bool {
        self.pair(c, c) == self.src_pair(j, j)
    }

    /// Returns `true` to stop the search (first-match mode only).
    fn extend(
        &self,
        depth: usize,
        cols: &mut Vec<u32>,
        mode: Mode,
        out: &mut Vec<u128>,
        ticker: &mut Ticker<'_>,
    ) -> Result<bool> {
        let k = self.rank();
        if depth == k {
            if !self.invertible(cols) {
                return Ok(false);
            }
            if mode == Mode::First {
                return Ok(true);
            }
            out.push(self.pack(cols));
            return Ok(false);
        }
        let j = self.order[depth];
        'cand: for &c in &self.candidates[j] {
            ticker.tick()?;
            for &i in &self.order[..depth] {
                if self.pair(cols[i], c) != self.src_pair(i, j) {
                    continue 'cand;
                }
                if let Some(polar) = &self.src_polar {
                    if self.target.polar(&self.coords[&cols[i]], &self.coords[&c]) != polar[i * k + j] {
                        continue 'cand;
                    }
                }
            }
            cols[j] = c;
            if self.extend(depth + 1, cols, mode, out, ticker)? {
                return Ok(true);
            }
        }
        cols[j] = u32::MAX;
        Ok(false)
    }
}
