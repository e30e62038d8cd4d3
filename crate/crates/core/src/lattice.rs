//! Automorphism groups of definite integral lattices.
//!
//! `Aut(a)` is the finite set of integer matrices `g` with `g^T a g = a`.
//! Column `i` of such a `g` is a lattice vector of norm `a_ii`, and the
//! columns must reproduce the off-diagonal inner products of `a`. We
//! enumerate each norm shell once (exact Fincke-Pohst on a rational `LDL^T`
//! factorization) and then assemble columns depth-first, checking inner
//! products as soon as both columns are placed.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::budget::{Budget, Ticker};
use crate::error::{Error, Result};
use crate::linalg::IntMatrix;
use crate::quadform::{Definiteness, SymmetrizedForm};

/// A finite set of square integer matrices stored contiguously, row-major,
/// in lexicographic order of the flattened entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsometrySet {
    pub a: SymmetrizedForm,
    dim: usize,
    data: Vec<i32>,
}

impl IsometrySet {
    /// Builds a set from arbitrary matrices (sorted and deduplicated).
    pub fn from_elements(a: SymmetrizedForm, elements: &[IntMatrix]) -> Result<Self> {
        let dim = a.rank();
        let mut data = Vec::with_capacity(elements.len() * dim * dim);
        for g in elements {
            if g.rows() != dim || g.cols() != dim {
                return Err(Error::Shape(format!("expected {dim}x{dim} elements")));
            }
            for x in g.to_i64()? {
                data.push(to_i32(x)?);
            }
        }
        Ok(Self::from_flat(a, dim, data))
    }

    fn from_flat(a: SymmetrizedForm, dim: usize, data: Vec<i32>) -> Self {
        let stride = dim * dim;
        let count = data.len() / stride;
        let mut order: Vec<u32> = (0..count as u32).collect();
        let elem = |i: u32| &data[i as usize * stride..(i as usize + 1) * stride];
        order.sort_unstable_by(|&x, &y| elem(x).cmp(elem(y)));
        order.dedup_by(|x, y| elem(*x) == elem(*y));
        let mut sorted = Vec::with_capacity(order.len() * stride);
        for i in order {
            sorted.extend_from_slice(elem(i));
        }
        IsometrySet {
            a,
            dim,
            data: sorted,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.dim * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Element `i` as a row-major slice.
    pub fn element(&self, i: usize) -> &[i32] {
        let s = self.dim * self.dim;
        &self.data[i * s..(i + 1) * s]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        self.data.chunks_exact(self.dim * self.dim)
    }

    pub fn matrix(&self, i: usize) -> IntMatrix {
        let d = self.dim;
        IntMatrix::new(d, d, self.element(i).iter().map(|&x| BigInt::from(x)).collect())
            .expect("stored element has the right shape")
    }

    pub fn contains(&self, g: &[i32]) -> bool {
        self.position(g).is_some()
    }

    pub fn position(&self, g: &[i32]) -> Option<usize> {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.element(mid).cmp(g) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }
}

fn to_i32(x: i64) -> Result<i32> {
    i32::try_from(x).map_err(|_| Error::TooLarge(format!("isometry entry {x} exceeds 32 bits")))
}

/// Exact `LDL^T` data: `x^T a x = sum_i d_i (x_i + sum_{j>i} mu_ij x_j)^2`.
struct Ldl {
    d: Vec<BigRational>,
    mu: Vec<Vec<BigRational>>,
}

fn ldl(a: &IntMatrix) -> Result<Ldl> {
    let n = a.rows();
    let mut q: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| BigRational::from_integer(a.get(i, j).clone())).collect())
        .collect();
    for i in 0..n {
        if !q[i][i].is_positive() {
            return Err(Error::Indefinite);
        }
        for j in i + 1..n {
            q[j][i] = q[i][j].clone();
            q[i][j] = &q[i][j] / &q[i][i];
        }
        for k in i + 1..n {
            for l in k..n {
                let t = &q[k][i] * &q[i][l];
                q[k][l] -= t;
            }
        }
    }
    let d = (0..n).map(|i| q[i][i].clone()).collect();
    let mu = (0..n)
        .map(|i| (0..n).map(|j| if j > i { q[i][j].clone() } else { BigRational::zero() }).collect())
        .collect();
    Ok(Ldl { d, mu })
}

/// All integer vectors `x` with `x^T a x == norm`, for positive definite `a`.
///
/// The result is sorted lexicographically. Exact rational arithmetic is used
/// throughout, so no boundary vector can be lost to rounding.
pub fn short_vectors(a: &IntMatrix, norm: &BigInt) -> Result<Vec<Vec<i64>>> {
    let n = a.rows();
    let f = ldl(a)?;
    let bound = BigRational::from_integer(norm.clone());
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    enumerate_shell(&f, n, &bound, &BigRational::zero(), &mut x, &mut out);
    out.sort();
    Ok(out)
}

fn enumerate_shell(
    f: &Ldl,
    level: usize,
    bound: &BigRational,
    used: &BigRational,
    x: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    if level == 0 {
        if used == bound {
            out.push(x.clone());
        }
        return;
    }
    let i = level - 1;
    let n = x.len();
    let mut center = BigRational::zero();
    for j in i + 1..n {
        if x[j] != 0 {
            center += &f.mu[i][j] * BigRational::from_integer(x[j].into());
        }
    }
    let remaining = bound - used;
    // The admissible x_i form an interval around -center; if it holds any
    // integer it holds the one nearest to the center.
    let start = (-&center).round().to_i64().expect("coordinate fits in i64");
    let cost = |xi: i64| {
        let y = BigRational::from_integer(xi.into()) + &center;
        &f.d[i] * &y * &y
    };
    for dir in [1i64, -1] {
        let mut xi = if dir == 1 { start } else { start - 1 };
        loop {
            let c = cost(xi);
            if c > remaining {
                break;
            }
            x[i] = xi;
            let next = used + &c;
            enumerate_shell(f, i, bound, &next, x, out);
            xi += dir;
        }
    }
    x[i] = 0;
}

/// Candidate columns for one norm, with `a * v` cached for inner products.
struct Shell {
    vectors: Vec<Vec<i64>>,
    images: Vec<Vec<i64>>,
}

struct ColumnSearch {
    n: usize,
    a: Vec<i64>,
    shells: Vec<usize>,
    cache: Vec<Shell>,
}

impl ColumnSearch {
    #[inline]
    fn gram(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.n + j]
    }

    fn extend(
        &self,
        col: usize,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<i32>,
        ticker: &mut Ticker<'_>,
    ) -> Result<()> {
        if col == self.n {
            self.emit(chosen, out)?;
            return Ok(());
        }
        let shell = &self.cache[self.shells[col]];
        'cand: for (idx, v) in shell.vectors.iter().enumerate() {
            ticker.tick()?;
            for (i, &(s, k)) in chosen.iter().enumerate() {
                let av = &self.cache[s].images[k];
                let ip: i64 = av.iter().zip(v).map(|(p, q)| p * q).sum();
                if ip != self.gram(i, col) {
                    continue 'cand;
                }
            }
            chosen.push((self.shells[col], idx));
            self.extend(col + 1, chosen, out, ticker)?;
            chosen.pop();
        }
        Ok(())
    }

    fn emit(&self, chosen: &[(usize, usize)], out: &mut Vec<i32>) -> Result<()> {
        for r in 0..self.n {
            for &(s, k) in chosen {
                out.push(to_i32(self.cache[s].vectors[k][r])?);
            }
        }
        Ok(())
    }
}

/// Enumerates `Aut(a)`; negative definite forms are negated first.
pub fn enumerate_isometries(form: &SymmetrizedForm, budget: &Budget) -> Result<IsometrySet> {
    let a = match form.definiteness {
        Definiteness::Positive => form.a.clone(),
        Definiteness::Negative => form.a.neg(),
        Definiteness::Neither if form.det.is_zero() => return Err(Error::Degenerate),
        Definiteness::Neither => return Err(Error::Indefinite),
    };
    let n = a.rows();

    let mut norms: BTreeMap<BigInt, usize> = BTreeMap::new();
    let mut shells = Vec::with_capacity(n);
    let mut cache = Vec::new();
    for i in 0..n {
        let norm = a.get(i, i).clone();
        let slot = match norms.get(&norm) {
            Some(&s) => s,
            None => {
                budget.check()?;
                let vectors = short_vectors(&a, &norm)?;
                let images = vectors
                    .iter()
                    .map(|v| mat_vec(&a, v))
                    .collect::<Result<Vec<_>>>()?;
                cache.push(Shell { vectors, images });
                norms.insert(norm, cache.len() - 1);
                cache.len() - 1
            }
        };
        shells.push(slot);
    }

    let search = ColumnSearch {
        n,
        a: a.to_i64()?,
        shells,
        cache,
    };
    let first = &search.cache[search.shells[0]];
    let blocks = (0..first.vectors.len())
        .into_par_iter()
        .map(|idx| {
            let mut out = Vec::new();
            let mut ticker = Ticker::new(budget);
            let mut chosen = vec![(search.shells[0], idx)];
            search.extend(1, &mut chosen, &mut out, &mut ticker)?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let data = blocks.concat();
    Ok(IsometrySet::from_flat(form.clone(), n, data))
}

fn mat_vec(a: &IntMatrix, v: &[i64]) -> Result<Vec<i64>> {
    let n = a.rows();
    let flat = a.to_i64()?;
    Ok((0..n)
        .map(|i| (0..n).map(|j| flat[i * n + j] * v[j]).sum())
        .collect())
}

/// Product of two row-major `dim x dim` matrices.
pub fn mul_flat(dim: usize, x: &[i32], y: &[i32]) -> Option<Vec<i32>> {
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let s: i64 = (0..dim)
                .map(|k| i64::from(x[i * dim + k]) * i64::from(y[k * dim + j]))
                .sum();
            out.push(i32::try_from(s).ok()?);
        }
    }
    Some(out)
}

fn identity_flat(dim: usize) -> Vec<i32> {
    (0..dim * dim)
        .map(|k| i32::from(k / dim == k % dim))
        .collect()
}

/// Whether the set is a group: contains the identity, consists of
/// invertible matrices, and is closed under products (a finite set of
/// invertible matrices closed under products is closed under inverses).
pub fn group_closure_check(s: &IsometrySet) -> bool {
    let dim = s.dim();
    if !s.contains(&identity_flat(dim)) {
        return false;
    }
    for g in s.iter() {
        let m = IntMatrix::new(dim, dim, g.iter().map(|&x| BigInt::from(x)).collect())
            .expect("shape");
        match m.det() {
            Ok(d) if d.abs().is_one() => {}
            _ => return false,
        }
    }
    s.iter().collect::<Vec<_>>().par_iter().all(|x| {
        s.iter().all(|y| mul_flat(dim, x, y).is_some_and(|p| s.contains(&p)))
    })
}

/// Checks `g^T a g == a` for a row-major element.
pub fn is_isometry(a: &IntMatrix, g: &[i32]) -> bool {
    let n = a.rows();
    let Ok(av) = a.to_i64() else {
        return false;
    };
    for i in 0..n {
        for j in 0..n {
            let mut s: i64 = 0;
            for k in 0..n {
                for l in 0..n {
                    s += i64::from(g[k * n + i]) * av[k * n + l] * i64::from(g[l * n + j]);
                }
            }
            if s != av[i * n + j] {
                return false;
            }
        }
    }
    true
}
