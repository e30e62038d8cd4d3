//! The boundary homomorphism `Aut(V, theta) -> Aut(boundary form)`, its
//! image, and the triviality test for the boundary automorphism set.
//!
//! The orbit set of `Aut(boundary)` under the two-sided action of
//! `Aut(V, theta)` is the double coset space `Im \ Aut / Im`, which is a
//! single point exactly when the boundary map is onto.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{boundary_form, eval_linking, eval_refinement, ClassMatrix, CokernelPresentation, SplitLinkingForm};
use crate::budget::{Budget, Ticker};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_isometries, IsometrySet};
use crate::linalg::{unimodular_inverse, IntMatrix};
use crate::quadform::{symmetrize, Definiteness, QuadFormClass, Sign, THEOREM_MAX_GENUS};
use crate::search::FormMatcher;
use crate::torsion::{gcd, invertible_mod_p, lcm, prime_divisors, AbelianGroup};

/// An automorphism of `Z_{d_1} + ... + Z_{d_k}` in normalized form.
pub type FiniteAutMatrix = ClassMatrix;

impl ClassMatrix {
    /// Validates normalization: entry `(i, j)` in `[0, d_i)` and divisible by
    /// `d_i / gcd(d_i, d_j)`.
    pub fn endomorphism(orders: Vec<u64>, entries: Vec<u64>) -> Result<Self> {
        let k = orders.len();
        if entries.len() != k * k {
            return Err(Error::Shape(format!("{} entries for rank {k}", entries.len())));
        }
        for i in 0..k {
            for j in 0..k {
                let x = entries[i * k + j];
                let di = orders[i];
                if x >= di || x % (di / gcd(di, orders[j])) != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) = {x} is not normalized for orders {orders:?}"
                    )));
                }
            }
        }
        Ok(ClassMatrix {
            target_orders: orders.clone(),
            source_orders: orders,
            entries,
        })
    }

    pub fn identity(orders: Vec<u64>) -> Self {
        let k = orders.len();
        let entries = (0..k * k).map(|x| u64::from(x / k == x % k)).collect();
        ClassMatrix {
            target_orders: orders.clone(),
            source_orders: orders,
            entries,
        }
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &ClassMatrix) -> ClassMatrix {
        let (m, k, n) = (
            self.target_orders.len(),
            self.source_orders.len(),
            other.source_orders.len(),
        );
        debug_assert_eq!(k, other.target_orders.len());
        let mut entries = vec![0; m * n];
        for i in 0..m {
            let e = self.target_orders[i] as u128;
            for j in 0..n {
                let s: u128 = (0..k)
                    .map(|l| self.get(i, l) as u128 * other.get(l, j) as u128)
                    .sum();
                entries[i * n + j] = (s % e) as u64;
            }
        }
        ClassMatrix {
            target_orders: self.target_orders.clone(),
            source_orders: other.source_orders.clone(),
            entries,
        }
    }

    /// Invertibility via the induced map on `T / pT` for every prime `p`
    /// dividing the exponent.
    pub fn is_invertible(&self) -> bool {
        let k = self.source_orders.len();
        let exponent = self
            .source_orders
            .iter()
            .chain(&self.target_orders)
            .fold(1, |a, &d| lcm(a, d));
        for p in prime_divisors(exponent) {
            let rows: Vec<usize> = (0..self.target_orders.len())
                .filter(|&i| self.target_orders[i] % p == 0)
                .collect();
            let cols: Vec<usize> = (0..k).filter(|&j| self.source_orders[j] % p == 0).collect();
            if rows.len() != cols.len() {
                return false;
            }
            let m = rows
                .iter()
                .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
                .map(|(i, j)| self.get(i, j) % p)
                .collect();
            if !invertible_mod_p(m, rows.len(), p) {
                return false;
            }
        }
        true
    }
}

/// Whether `g` preserves `b` and `nu` on all of `T` (exhaustive).
pub fn preserves_form_exhaustively(form: &SplitLinkingForm, g: &ClassMatrix) -> Result<bool> {
    let elems = form.elements();
    let images: Vec<Vec<i64>> = elems.iter().map(|x| g.apply(x)).collect();
    for (x, gx) in elems.iter().zip(&images) {
        if eval_refinement(form, gx)? != eval_refinement(form, x)? {
            return Ok(false);
        }
        for (y, gy) in elems.iter().zip(&images) {
            if eval_linking(form, gx, gy)? != eval_linking(form, x, y)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A set of automorphisms of one finite group, stored as sorted packed keys.
///
/// A key concatenates the element codes of the columns, first column most
/// significant, so key order is lexicographic order on the column-major
/// entry sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutSet {
    group: AbelianGroup,
    bits: u32,
    keys: Vec<u128>,
}

impl AutSet {
    fn with_keys(group: AbelianGroup, mut keys: Vec<u128>) -> Result<Self> {
        let bits = column_bits(&group);
        if bits as usize * group.rank() > 128 {
            return Err(Error::TooLarge(format!(
                "rank {} with {bits}-bit columns does not fit a 128-bit key",
                group.rank()
            )));
        }
        keys.sort_unstable();
        keys.dedup();
        Ok(AutSet { group, bits, keys })
    }

    /// Builds a set from explicit matrices (sorted, deduplicated).
    pub fn from_matrices(orders: Vec<u64>, elements: &[ClassMatrix]) -> Result<Self> {
        let group = AbelianGroup::new(orders)?;
        let bits = column_bits(&group);
        let keys = elements.iter().map(|m| pack(&group, bits, m)).collect();
        Self::with_keys(group, keys)
    }

    pub fn orders(&self) -> &[u64] {
        self.group.orders()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[u128] {
        &self.keys
    }

    pub fn key_of(&self, m: &ClassMatrix) -> u128 {
        pack(&self.group, self.bits, m)
    }

    pub fn matrix_of(&self, key: u128) -> ClassMatrix {
        let k = self.group.rank();
        let mask = if self.bits == 0 { 0 } else { (1u128 << self.bits) - 1 };
        let mut entries = vec![0; k * k];
        for j in 0..k {
            let shift = self.bits as usize * (k - 1 - j);
            let code = ((key >> shift) & mask) as u64;
            let col = self.group.decode(code);
            for i in 0..k {
                entries[i * k + j] = col[i];
            }
        }
        ClassMatrix {
            target_orders: self.group.orders().to_vec(),
            source_orders: self.group.orders().to_vec(),
            entries,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ClassMatrix> + '_ {
        self.keys.iter().map(|&k| self.matrix_of(k))
    }

    pub fn contains_key(&self, key: u128) -> bool {
        self.keys.binary_search(&key).is_ok()
    }

    pub fn contains(&self, m: &ClassMatrix) -> bool {
        m.source_orders == self.group.orders() && self.contains_key(self.key_of(m))
    }

    pub fn position(&self, m: &ClassMatrix) -> Option<usize> {
        self.keys.binary_search(&self.key_of(m)).ok()
    }

    pub fn is_subset_of(&self, other: &AutSet) -> bool {
        self.group == other.group && self.keys.iter().all(|&k| other.contains_key(k))
    }

    /// Contains the identity, closed under products (hence a group, being a
    /// finite set of invertible maps), and every element invertible.
    pub fn is_group(&self) -> bool {
        let id = ClassMatrix::identity(self.group.orders().to_vec());
        if !self.contains(&id) {
            return false;
        }
        let elems: Vec<ClassMatrix> = self.iter().collect();
        if !elems.iter().all(ClassMatrix::is_invertible) {
            return false;
        }
        elems
            .par_iter()
            .all(|x| elems.iter().all(|y| self.contains(&x.compose(y))))
    }
}

fn column_bits(group: &AbelianGroup) -> u32 {
    64 - (group.size() - 1).leading_zeros()
}

fn pack(group: &AbelianGroup, bits: u32, m: &ClassMatrix) -> u128 {
    let k = group.rank();
    (0..k).fold(0u128, |acc, j| (acc << bits) | group.encode(&m.column(j)) as u128)
}

/// `g ↦ u A g A^{-1} u^{-1}` restricted to the nontrivial coordinates and
/// reduced mod the orders; `A g A^{-1} = (g^{-1})^T` for an isometry `g`.
struct BoundaryMap {
    n: usize,
    k: usize,
    offset: usize,
    orders: Vec<u64>,
    exponent: i128,
    a: Vec<i128>,
    adj: Vec<i128>,
    det: i128,
    /// Rows `offset..` of `u`, reduced mod the exponent.
    u_rows: Vec<i128>,
    /// Columns `offset..` of `u^{-1}`, reduced mod the exponent.
    uinv_cols: Vec<i128>,
}

fn to_i128(x: &BigInt) -> Result<i128> {
    x.to_i128()
        .ok_or_else(|| Error::TooLarge(format!("{x} exceeds 128 bits")))
}

impl BoundaryMap {
    fn new(pres: &CokernelPresentation) -> Result<Self> {
        let n = pres.rank();
        let k = pres.orders.len();
        let offset = pres.offset();
        let exponent = pres.orders.iter().fold(1u64, |a, &d| lcm(a, d)) as i128;
        let det = pres.a.det()?;
        let inv = crate::linalg::rational_inverse(&pres.a)?;
        let mut adj = Vec::with_capacity(n * n);
        for x in inv.entries() {
            let y = x * num_rational::BigRational::from_integer(det.clone());
            adj.push(to_i128(&y.to_integer())?);
        }
        let a = pres.a.entries().iter().map(to_i128).collect::<Result<Vec<_>>>()?;
        let red = |x: &BigInt| -> i128 {
            let e = BigInt::from(exponent);
            (((x % &e) + &e) % &e).to_i128().expect("reduced")
        };
        let mut u_rows = Vec::with_capacity(k * n);
        for i in 0..k {
            for j in 0..n {
                u_rows.push(red(pres.u.get(offset + i, j)));
            }
        }
        let mut uinv_cols = Vec::with_capacity(n * k);
        for i in 0..n {
            for j in 0..k {
                uinv_cols.push(red(pres.u_inv.get(i, offset + j)));
            }
        }
        Ok(BoundaryMap {
            n,
            k,
            offset,
            orders: pres.orders.clone(),
            exponent,
            a,
            adj,
            det: to_i128(&det)?,
            u_rows,
            uinv_cols,
        })
    }

    /// Row-major normalized entries of the boundary of `g` (original basis).
    fn apply(&self, g: &[i32]) -> Result<Vec<u64>> {
        let (n, k) = (self.n, self.k);
        let overflow = || Error::TooLarge("boundary map overflowed 128-bit arithmetic".into());
        // ag = a * g
        let mut ag = vec![0i128; n * n];
        for i in 0..n {
            for l in 0..n {
                let x = self.a[i * n + l];
                if x == 0 {
                    continue;
                }
                for j in 0..n {
                    ag[i * n + j] += x * g[l * n + j] as i128;
                }
            }
        }
        // x = ag * adj / det, then reduce mod exponent
        let mut x = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s: i128 = 0;
                for l in 0..n {
                    s = s
                        .checked_add(ag[i * n + l].checked_mul(self.adj[l * n + j]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
                if s % self.det != 0 {
                    return Err(Error::NotAnIsometry("A g A^-1 is not integral".into()));
                }
                x[i * n + j] = (s / self.det).rem_euclid(self.exponent);
            }
        }
        let e = self.exponent;
        let mut ux = vec![0i128; k * n];
        for i in 0..k {
            for j in 0..n {
                let mut s = 0i128;
                for l in 0..n {
                    s = (s + self.u_rows[i * n + l] * x[l * n + j]) % e;
                }
                ux[i * n + j] = s;
            }
        }
        let mut out = vec![0u64; k * k];
        for i in 0..k {
            let d = self.orders[i] as i128;
            for j in 0..k {
                let mut s = 0i128;
                for l in 0..n {
                    s = (s + ux[i * n + l] * self.uinv_cols[l * k + j]) % e;
                }
                out[i * k + j] = s.rem_euclid(d) as u64;
            }
        }
        let _ = self.offset;
        Ok(out)
    }
}

impl CokernelPresentation {
    /// `(u^T)^{-1} g u^T`, an isometry of `a_tilde` when `g` is one of `a`.
    pub fn to_presentation_basis(&self, g: &IntMatrix) -> Result<IntMatrix> {
        self.u_inv.transpose().mul(g)?.mul(&self.u.transpose())
    }
}

/// Boundary of an isometry `g` of `a_tilde` (presentation basis): the matrix
/// of `(g^{-1})^T` acting on the cyclic summands.
pub fn boundary_of_isometry(pres: &CokernelPresentation, g: &IntMatrix) -> Result<FiniteAutMatrix> {
    let n = pres.rank();
    if g.rows() != n || g.cols() != n {
        return Err(Error::Shape(format!("expected a {n}x{n} matrix")));
    }
    if g.transpose().mul(&pres.a_tilde)?.mul(g)? != pres.a_tilde {
        return Err(Error::NotAnIsometry("g^T a_tilde g != a_tilde".into()));
    }
    let inv_t = unimodular_inverse(g)?.transpose();
    let off = pres.offset();
    let k = pres.orders.len();
    let mut entries = Vec::with_capacity(k * k);
    for i in 0..k {
        let d = BigInt::from(pres.orders[i]);
        for j in 0..k {
            let x = inv_t.get(off + i, off + j);
            let r = ((x % &d) + &d) % &d;
            entries.push(r.to_u64().expect("reduced below order"));
        }
    }
    let m = ClassMatrix::endomorphism(pres.orders.clone(), entries)?;
    // preservation of b and nu on generators implies it on all of T
    let gens: Vec<Vec<i64>> = (0..k)
        .map(|j| (0..k).map(|i| i64::from(i == j)).collect())
        .collect();
    let images: Vec<Vec<i64>> = gens.iter().map(|x| m.apply(x)).collect();
    for i in 0..k {
        if pres.refinement_by_lift(&images[i])? != pres.refinement_by_lift(&gens[i])? {
            return Err(Error::NotAnIsometry(format!("boundary map changes nu on generator {i}")));
        }
        for j in i..k {
            if pres.linking_by_lift(&images[i], &images[j])? != pres.linking_by_lift(&gens[i], &gens[j])? {
                return Err(Error::NotAnIsometry(format!("boundary map changes b on ({i}, {j})")));
            }
        }
    }
    Ok(m)
}

/// `{ boundary(g) : g in auts }`; `auts` is in the original basis.
pub fn image_of_boundary(pres: &CokernelPresentation, auts: &IsometrySet, budget: &Budget) -> Result<AutSet> {
    let group = AbelianGroup::new(pres.orders.clone())?;
    let bits = column_bits(&group);
    if pres.orders.is_empty() {
        return AutSet::with_keys(group, vec![0]);
    }
    let map = BoundaryMap::new(pres)?;
    let k = pres.orders.len();
    let elems: Vec<&[i32]> = auts.iter().collect();
    let keys = elems
        .par_chunks(4096)
        .map(|chunk| {
            budget.check()?;
            let mut out = Vec::with_capacity(chunk.len());
            for g in chunk {
                let e = map.apply(g)?;
                let key = (0..k).fold(0u128, |acc, j| {
                    let col: Vec<u64> = (0..k).map(|i| e[i * k + j]).collect();
                    (acc << bits) | group.encode(&col) as u128
                });
                out.push(key);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    AutSet::with_keys(group, keys)
}

/// All automorphisms of `(T, b, nu)`, by pruned column backtracking.
pub fn enumerate_boundary_automorphisms(form: &SplitLinkingForm, budget: &Budget) -> Result<AutSet> {
    let group = AbelianGroup::new(form.orders().to_vec())?;
    let matcher = FormMatcher::new(form, form)?.expect("a form matches its own group");
    let keys = matcher.run_all(budget)?;
    AutSet::with_keys(group, keys)
}

/// Number of double cosets `H \ G / H`, with `H` a subgroup of `G`.
pub fn double_coset_count(group: &AutSet, sub: &AutSet, budget: &Budget) -> Result<u64> {
    if !sub.is_subset_of(group) {
        return Err(Error::InvalidArgument("subgroup is not contained in the group".into()));
    }
    let subs: Vec<ClassMatrix> = sub.iter().collect();
    // Left cosets f H, labelled by their position in `group`.
    let mut coset = vec![u32::MAX; group.len()];
    let mut reps: Vec<ClassMatrix> = Vec::new();
    let mut ticker = Ticker::new(budget);
    for pos in 0..group.len() {
        if coset[pos] != u32::MAX {
            continue;
        }
        let f = group.matrix_of(group.keys[pos]);
        let id = reps.len() as u32;
        for h in &subs {
            ticker.tick()?;
            let p = group
                .position(&f.compose(h))
                .ok_or_else(|| Error::InvalidArgument("group is not closed".into()))?;
            coset[p] = id;
        }
        reps.push(f);
    }
    // H acts on left cosets by left multiplication; count orbits.
    let mut parent: Vec<usize> = (0..reps.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for (i, f) in reps.iter().enumerate() {
        for h in &subs {
            ticker.tick()?;
            let p = group
                .position(&h.compose(f))
                .ok_or_else(|| Error::InvalidArgument("group is not closed".into()))?;
            let (a, b) = (find(&mut parent, i), find(&mut parent, coset[p] as usize));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    Ok((0..reps.len()).filter(|&i| find(&mut parent, i) == i).count() as u64)
}

/// `h` for family members, the string `"custom"` otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FormLabel {
    Genus(usize),
    Custom(CustomTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CustomTag {
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub isometries_ms: u64,
    pub image_ms: u64,
    pub boundary_automorphisms_ms: u64,
    pub orbits_ms: Option<u64>,
    pub total_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub h: FormLabel,
    pub rank: usize,
    pub sign: Sign,
    /// The negative representative was replaced by its negation.
    pub sign_reduced: bool,
    pub within_theorem_hypothesis: bool,
    pub orders: Vec<u64>,
    pub aut_v_count: u64,
    pub image_count: u64,
    pub bdry_aut_count: u64,
    /// `Im ⊆ Aut`; a false value would indicate an internal error.
    pub image_in_aut: bool,
    pub surjective: bool,
    pub index: u64,
    pub baut_trivial: bool,
    pub orbit_count: Option<u64>,
    pub threads: usize,
    pub timings: Timings,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AnalysisOptions {
    pub compute_orbits: bool,
}

/// Everything computed for one form.
#[derive(Debug)]
pub struct Analysis {
    pub report: ObstructionReport,
    pub presentation: CokernelPresentation,
    pub form: SplitLinkingForm,
    pub isometries: IsometrySet,
    pub image: AutSet,
    pub automorphisms: AutSet,
}

pub fn analyze(f: &QuadFormClass, options: AnalysisOptions, budget: &Budget) -> Result<Analysis> {
    let started = Instant::now();
    let sym = symmetrize(f);
    let (plus, sign) = match sym.definiteness {
        Definiteness::Positive => (f.clone(), Sign::Plus),
        Definiteness::Negative => (f.negated(), Sign::Minus),
        Definiteness::Neither if sym.det.is_zero() => return Err(Error::Degenerate),
        Definiteness::Neither => return Err(Error::Indefinite),
    };
    let sym_plus = symmetrize(&plus);
    let (presentation, form) = boundary_form(&plus)?;

    let t = Instant::now();
    let isometries = enumerate_isometries(&sym_plus, budget)?;
    let isometries_ms = elapsed_ms(t);

    let t = Instant::now();
    let image = image_of_boundary(&presentation, &isometries, budget)?;
    let image_ms = elapsed_ms(t);

    let t = Instant::now();
    let automorphisms = enumerate_boundary_automorphisms(&form, budget)?;
    let boundary_automorphisms_ms = elapsed_ms(t);

    let image_in_aut = image.is_subset_of(&automorphisms);
    let (image_count, bdry_aut_count) = (image.len() as u64, automorphisms.len() as u64);
    if !image_in_aut || bdry_aut_count % image_count != 0 {
        return Err(Error::InvalidArgument(format!(
            "inconsistent groups: |Im| = {image_count}, |Aut| = {bdry_aut_count}, Im ⊆ Aut: {image_in_aut}"
        )));
    }
    let index = bdry_aut_count / image_count;

    let (orbit_count, orbits_ms) = if options.compute_orbits {
        let t = Instant::now();
        let c = double_coset_count(&automorphisms, &image, budget)?;
        (Some(c), Some(elapsed_ms(t)))
    } else {
        (None, None)
    };

    let rank = f.rank();
    let report = ObstructionReport {
        h: match f.genus() {
            Some(h) => FormLabel::Genus(h),
            None => FormLabel::Custom(CustomTag::Custom),
        },
        rank,
        sign,
        sign_reduced: sign == Sign::Minus,
        within_theorem_hypothesis: f.genus().is_some_and(|h| (1..=THEOREM_MAX_GENUS).contains(&h)),
        orders: presentation.orders.clone(),
        aut_v_count: isometries.len() as u64,
        image_count,
        bdry_aut_count,
        image_in_aut,
        surjective: index == 1,
        index,
        baut_trivial: index == 1,
        orbit_count,
        threads: rayon::current_num_threads(),
        timings: Timings {
            isometries_ms,
            image_ms,
            boundary_automorphisms_ms,
            orbits_ms,
            total_ms: elapsed_ms(started),
        },
    };
    Ok(Analysis {
        report,
        presentation,
        form,
        isometries,
        image,
        automorphisms,
    })
}

pub fn obstruction_report(f: &QuadFormClass, options: AnalysisOptions, budget: &Budget) -> Result<ObstructionReport> {
    analyze(f, options, budget).map(|a| a.report)
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}
