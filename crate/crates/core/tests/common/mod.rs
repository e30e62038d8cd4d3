//! Independent oracles for the integration tests. Nothing here calls the
//! library's search, Smith form or enumeration code.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use baut::{AutSet, ClassMatrix, IntMatrix, SplitLinkingForm};
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::Rng;

pub fn family_rows(h: usize) -> Vec<Vec<i64>> {
    (0..h)
        .map(|i| {
            (0..h)
                .map(|j| match (i, j) {
                    (0, _) => 4,
                    _ if j >= i => 2,
                    _ => 0,
                })
                .collect()
        })
        .collect()
}

pub fn symmetrized(q: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let h = q.len();
    (0..h).map(|i| (0..h).map(|j| q[i][j] + q[j][i]).collect()).collect()
}

/// Laplace expansion; fine for the small ranks used here.
pub fn det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return m[0][0] as i128;
    }
    let mut total = 0i128;
    for j in 0..n {
        if m[0][j] == 0 {
            continue;
        }
        let minor: Vec<Vec<i64>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
            .collect();
        let s = if j % 2 == 0 { 1 } else { -1 };
        total += s * m[0][j] as i128 * det(&minor);
    }
    total
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Invariant factors from determinantal divisors: `D_k` is the gcd of all
/// `k x k` minors and `d_k = D_k / D_{k-1}`.
pub fn invariant_factors_by_minors(m: &[Vec<i64>]) -> Vec<u64> {
    let n = m.len();
    let mut prev: i128 = 1;
    let mut out = Vec::new();
    for k in 1..=n {
        let mut g: i128 = 0;
        for rows in subsets(n, k) {
            for cols in subsets(n, k) {
                let sub: Vec<Vec<i64>> = rows.iter().map(|&r| cols.iter().map(|&c| m[r][c]).collect()).collect();
                g = g.gcd(&det(&sub));
            }
        }
        out.push((g / prev) as u64);
        prev = g;
    }
    out
}

/// Nontrivial invariant factors, ascending.
pub fn cokernel_orders(m: &[Vec<i64>]) -> Vec<u64> {
    let mut v: Vec<u64> = invariant_factors_by_minors(m).into_iter().filter(|&d| d > 1).collect();
    v.sort_unstable();
    v
}

fn quad(a: &[Vec<i64>], x: &[i64], y: &[i64]) -> i64 {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| x[i] * a[i][j] * y[j]).sum::<i64>()).sum()
}

/// All `x` with `x^T a x = norm`, by a box bounded with
/// `x_i^2 det(a) <= norm * cofactor_ii` (Cauchy-Schwarz in the dual norm).
pub fn box_shell(a: &[Vec<i64>], norm: i64) -> Vec<Vec<i64>> {
    let n = a.len();
    let d = det(a);
    let bounds: Vec<i64> = (0..n)
        .map(|i| {
            let minor: Vec<Vec<i64>> = (0..n)
                .filter(|&r| r != i)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| a[r][c]).collect())
                .collect();
            let rhs = norm as i128 * det(&minor);
            let mut b = 0i64;
            while ((b + 1) as i128).pow(2) * d <= rhs {
                b += 1;
            }
            b
        })
        .collect();
    let mut out = Vec::new();
    let mut x: Vec<i64> = bounds.iter().map(|&b| -b).collect();
    loop {
        if quad(a, &x, &x) == norm {
            out.push(x.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            x[i] += 1;
            if x[i] <= bounds[i] {
                break;
            }
            x[i] = -bounds[i];
            i += 1;
        }
    }
}

/// Isometries of a positive definite `a`, column by column over box shells.
pub fn brute_isometries(a: &[Vec<i64>]) -> Vec<Vec<Vec<i64>>> {
    let n = a.len();
    let shells: Vec<Vec<Vec<i64>>> = (0..n).map(|i| box_shell(a, a[i][i])).collect();
    let mut out = Vec::new();
    let mut cols: Vec<Vec<i64>> = Vec::new();
    fn go(a: &[Vec<i64>], shells: &[Vec<Vec<i64>>], cols: &mut Vec<Vec<i64>>, out: &mut Vec<Vec<Vec<i64>>>) {
        let j = cols.len();
        if j == a.len() {
            out.push(cols.clone());
            return;
        }
        for v in &shells[j] {
            if cols.iter().enumerate().all(|(i, c)| quad(a, c, v) == a[i][j]) {
                cols.push(v.clone());
                go(a, shells, cols, out);
                cols.pop();
            }
        }
    }
    go(a, &shells, &mut cols, &mut out);
    out
}

/// `b` and `nu` scaled to integers mod `den`.
pub struct ScaledForm {
    pub orders: Vec<u64>,
    pub den: i64,
    b: Vec<Vec<i64>>,
    /// `nu(x) = sum_{i<=j} c_ij x_i x_j`
    c: Vec<Vec<i64>>,
}

impl ScaledForm {
    pub fn new(form: &SplitLinkingForm) -> Self {
        let k = form.orders().len();
        let (b, r) = (form.b_matrix(), form.refinement_matrix());
        let mut den = num_bigint::BigInt::from(1);
        for i in 0..k {
            for j in 0..k {
                den = den.lcm(b.get(i, j).denom()).lcm(r.get(i, j).denom());
            }
        }
        let den = den.to_i64().unwrap();
        let scale = |x: &num_rational::BigRational| -> i64 {
            let v = x * num_rational::BigRational::from_integer(den.into());
            v.to_integer().to_i64().unwrap().rem_euclid(den)
        };
        let bm = (0..k).map(|i| (0..k).map(|j| scale(b.get(i, j))).collect()).collect();
        let c = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| match i.cmp(&j) {
                        std::cmp::Ordering::Equal => scale(r.get(i, i)),
                        std::cmp::Ordering::Less => scale(&(r.get(i, j) + r.get(j, i))),
                        std::cmp::Ordering::Greater => 0,
                    })
                    .collect()
            })
            .collect();
        ScaledForm {
            orders: form.orders().to_vec(),
            den,
            b: bm,
            c,
        }
    }

    pub fn b(&self, x: &[i64], y: &[i64]) -> i64 {
        let k = x.len();
        let mut s = 0i64;
        for i in 0..k {
            for j in 0..k {
                s = (s + self.b[i][j] * x[i] % self.den * y[j]) % self.den;
            }
        }
        s.rem_euclid(self.den)
    }

    pub fn nu(&self, x: &[i64]) -> i64 {
        let k = x.len();
        let mut s = 0i64;
        for i in 0..k {
            for j in i..k {
                s = (s + self.c[i][j] * x[i] % self.den * x[j]) % self.den;
            }
        }
        s.rem_euclid(self.den)
    }

    pub fn elements(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for &d in &self.orders {
            out = out
                .into_iter()
                .flat_map(|p: Vec<i64>| {
                    (0..d as i64).map(move |c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn reduce(&self, x: &[i64]) -> Vec<i64> {
        x.iter().zip(&self.orders).map(|(&a, &d)| a.rem_euclid(d as i64)).collect()
    }
}

pub fn apply(m: &ClassMatrix, x: &[i64]) -> Vec<i64> {
    let k = x.len();
    (0..k)
        .map(|i| {
            let s: i64 = (0..k).map(|j| m.entries[i * k + j] as i64 * x[j]).sum();
            s.rem_euclid(m.target_orders[i] as i64)
        })
        .collect()
}

/// Preserves `b` and `nu` on every element (pair) of `T` and is bijective.
pub fn is_form_automorphism(f: &ScaledForm, elems: &[Vec<i64>], m: &ClassMatrix) -> bool {
    let images: Vec<Vec<i64>> = elems.iter().map(|x| apply(m, x)).collect();
    if images.iter().collect::<HashSet<_>>().len() != elems.len() {
        return false;
    }
    for (x, gx) in elems.iter().zip(&images) {
        if f.nu(gx) != f.nu(x) {
            return false;
        }
        for (y, gy) in elems.iter().zip(&images) {
            if f.b(gx, gy) != f.b(x, y) {
                return false;
            }
        }
    }
    true
}

/// Every normalized class matrix, no pruning at all.
pub fn all_normalized(orders: &[u64]) -> Vec<ClassMatrix> {
    let k = orders.len();
    let choices: Vec<Vec<u64>> = (0..k * k)
        .map(|idx| {
            let (i, j) = (idx / k, idx % k);
            let step = orders[i] / orders[i].gcd(&orders[j]);
            (0..orders[i]).step_by(step as usize).collect()
        })
        .collect();
    let mut out = vec![vec![]];
    for c in &choices {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u64>| {
                c.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|entries| ClassMatrix {
            target_orders: orders.to_vec(),
            source_orders: orders.to_vec(),
            entries,
        })
        .collect()
}

/// Aut of the form by sweeping every normalized matrix.
pub fn brute_form_automorphisms(form: &SplitLinkingForm) -> Vec<ClassMatrix> {
    let f = ScaledForm::new(form);
    let elems = f.elements();
    let mut out: Vec<ClassMatrix> = all_normalized(form.orders())
        .into_iter()
        .filter(|m| is_form_automorphism(&f, &elems, m))
        .collect();
    out.sort_by(|a, b| column_major(a).cmp(&column_major(b)));
    out
}

pub fn column_major(m: &ClassMatrix) -> Vec<u64> {
    let k = m.source_orders.len();
    (0..k).flat_map(|j| (0..k).map(move |i| m.entries[i * k + j])).collect()
}

pub fn compose(x: &ClassMatrix, y: &ClassMatrix) -> ClassMatrix {
    let k = x.source_orders.len();
    let mut entries = vec![0u64; k * k];
    for i in 0..k {
        for j in 0..k {
            let s: u128 = (0..k).map(|l| x.entries[i * k + l] as u128 * y.entries[l * k + j] as u128).sum();
            entries[i * k + j] = (s % x.target_orders[i] as u128) as u64;
        }
    }
    ClassMatrix {
        target_orders: x.target_orders.clone(),
        source_orders: y.source_orders.clone(),
        entries,
    }
}

/// Generators of `sub`: random elements added until they generate all of it.
pub fn generators<R: Rng>(sub: &AutSet, rng: &mut R) -> Vec<ClassMatrix> {
    let elems: Vec<ClassMatrix> = sub.iter().collect();
    let mut gens: Vec<ClassMatrix> = Vec::new();
    loop {
        if generated_size(&gens, sub) == sub.len() {
            return gens;
        }
        gens.push(elems[rng.gen_range(0..elems.len())].clone());
    }
}

fn generated_size(gens: &[ClassMatrix], set: &AutSet) -> usize {
    let id = ClassMatrix::identity(set.orders().to_vec());
    let mut seen = HashSet::from([column_major(&id)]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = compose(&x, g);
            if seen.insert(column_major(&y)) {
                queue.push_back(y);
            }
        }
    }
    seen.len()
}

/// Orbits of `H x H` acting on `G` by `f -> h1 f h2`, found by BFS along
/// left and right multiplication by generators of `H`.
pub fn double_cosets_by_bfs(group: &AutSet, gens: &[ClassMatrix]) -> u64 {
    let mut seen = vec![false; group.len()];
    let mut orbits = 0;
    for start in 0..group.len() {
        if seen[start] {
            continue;
        }
        orbits += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([group.matrix_of(group.keys()[start])]);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                for y in [compose(g, &x), compose(&x, g)] {
                    let p = group.position(&y).expect("group is closed");
                    if !seen[p] {
                        seen[p] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
    }
    orbits
}

/// A random unimodular matrix: product of elementary operations.
pub fn random_unimodular<R: Rng>(n: usize, rng: &mut R) -> IntMatrix {
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..3 * n {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        match rng.gen_range(0..3) {
            0 if i != j => {
                let c = rng.gen_range(-2..=2);
                for r in 0..n {
                    m[r][i] += c * m[r][j];
                }
            }
            1 => m.swap(i, j),
            _ => {
                for r in m.iter_mut() {
                    r[i] = -r[i];
                }
            }
        }
    }
    IntMatrix::from_rows(&m).unwrap()
}
