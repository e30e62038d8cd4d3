//! Boundary split quadratic linking forms.
//!
//! For a nondegenerate form with representative `q` and symmetrization
//! `a = q + q^T`, the boundary is the torsion group `T = Z^h / a Z^h` with
//! `b([x], [y]) = x^T a^{-1} y` and `nu([x]) = x^T a^{-1} q a^{-1} x`, read
//! mod 1. We conjugate by the left Smith transform `u` of `a` so that `T` is
//! literally `Z_{d_1} + ... + Z_{d_k}` in standard coordinates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::linalg::{frac_part, rational_inverse, snf, unimodular_inverse, IntMatrix, RationalMatrix};
use crate::quadform::{symmetrize, QuadFormClass};
use crate::search::FormMatcher;

/// `coker(a)` presented through the left Smith transform of `a`.
#[derive(Clone, Debug)]
pub struct CokernelPresentation {
    /// Every invariant factor of `a`, units included.
    pub invariant_factors: Vec<BigInt>,
    /// The invariant factors greater than one.
    pub orders: Vec<u64>,
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub q: IntMatrix,
    pub a: IntMatrix,
    /// `u q u^T`
    pub q_tilde: IntMatrix,
    /// `u a u^T`; its column lattice equals `diag(invariant_factors) Z^h`.
    pub a_tilde: IntMatrix,
    a_tilde_inv: RationalMatrix,
    /// Index of the first nontrivial invariant factor.
    offset: usize,
}

impl CokernelPresentation {
    pub fn rank(&self) -> usize {
        self.u.rows()
    }

    /// Index of the first coordinate of `T` inside `Z^h`.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn order(&self) -> BigInt {
        self.orders.iter().map(|&d| BigInt::from(d)).product()
    }

    pub fn a_tilde_inverse(&self) -> &RationalMatrix {
        &self.a_tilde_inv
    }

    fn embed(&self, x: &[i64]) -> Result<Vec<BigInt>> {
        if x.len() != self.orders.len() {
            return Err(Error::Shape(format!(
                "class vector of length {} for a group of rank {}",
                x.len(),
                self.orders.len()
            )));
        }
        let mut full = vec![BigInt::zero(); self.rank()];
        for (i, &v) in x.iter().enumerate() {
            full[self.offset + i] = BigInt::from(v);
        }
        Ok(full)
    }

    /// Integral lift: `s = |det a_tilde|` and `z = s a_tilde^{-1} x`.
    fn lift(&self, x: &[i64]) -> Result<(BigInt, Vec<BigInt>)> {
        let full = self.embed(x)?;
        let s = self.a_tilde.det()?.abs();
        let n = self.rank();
        let sr = BigRational::from_integer(s.clone());
        let z = (0..n)
            .map(|i| {
                let mut acc = BigRational::zero();
                for (j, xj) in full.iter().enumerate() {
                    acc += self.a_tilde_inv.get(i, j) * BigRational::from_integer(xj.clone());
                }
                let v = acc * &sr;
                debug_assert!(v.is_integer());
                v.to_integer()
            })
            .collect();
        Ok((s, z))
    }

    /// `nu([x])` computed from an integral lift: `theta(z, z) / s^2` where
    /// `s x = a_tilde z`.
    pub fn refinement_by_lift(&self, x: &[i64]) -> Result<BigRational> {
        let (s, z) = self.lift(x)?;
        let n = self.rank();
        let mut theta = BigInt::zero();
        for i in 0..n {
            for j in 0..n {
                theta += &z[i] * self.q_tilde.get(i, j) * &z[j];
            }
        }
        Ok(frac_part(&BigRational::new(theta, &s * &s)))
    }

    /// `b([x], [y])` computed from an integral lift: `y(z) / s`.
    pub fn linking_by_lift(&self, x: &[i64], y: &[i64]) -> Result<BigRational> {
        let (s, z) = self.lift(x)?;
        let yf = self.embed(y)?;
        let dot: BigInt = yf.iter().zip(&z).map(|(a, b)| a * b).sum();
        Ok(frac_part(&BigRational::new(dot, s)))
    }
}

/// A split quadratic linking form `(T, b, nu)` on `Z_{d_1} + ... + Z_{d_k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitLinkingForm {
    orders: Vec<u64>,
    /// `b(e_i, e_j)`, entries in `[0, 1)`.
    b_matrix: RationalMatrix,
    /// `nu(x) = x^T R x` mod 1.
    refinement_matrix: RationalMatrix,
}

impl SplitLinkingForm {
    /// Checks shapes, orders and symmetry of `b` mod 1; `b` is stored reduced.
    pub fn new(orders: Vec<u64>, b: RationalMatrix, refinement: RationalMatrix) -> Result<Self> {
        let k = orders.len();
        if orders.iter().any(|&d| d < 2) {
            return Err(Error::InvalidArgument(format!("invalid cyclic orders {orders:?}")));
        }
        for (name, m) in [("linking", &b), ("refinement", &refinement)] {
            if m.rows() != k || m.cols() != k {
                return Err(Error::Shape(format!(
                    "{name} matrix is {}x{}, expected {k}x{k}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let b = b.reduce_mod_one();
        for i in 0..k {
            for j in 0..i {
                if b.get(i, j) != b.get(j, i) {
                    return Err(Error::InvalidArgument(format!(
                        "linking matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SplitLinkingForm {
            orders,
            b_matrix: b,
            refinement_matrix: refinement,
        })
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn b_matrix(&self) -> &RationalMatrix {
        &self.b_matrix
    }

    pub fn refinement_matrix(&self) -> &RationalMatrix {
        &self.refinement_matrix
    }

    pub fn group_order(&self) -> u64 {
        self.orders.iter().product()
    }

    fn check_len(&self, x: &[i64]) -> Result<()> {
        if x.len() != self.orders.len() {
            return Err(Error::Shape(format!(
                "class vector of length {} for a group of rank {}",
                x.len(),
                self.orders.len()
            )));
        }
        Ok(())
    }

    /// All elements of `T` in lexicographic order of coordinates.
    pub fn elements(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for &d in &self.orders {
            out = out
                .into_iter()
                .flat_map(|p| {
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
}

/// `(coker, boundary form)` of a nondegenerate quadratic form.
pub fn boundary_form(f: &QuadFormClass) -> Result<(CokernelPresentation, SplitLinkingForm)> {
    let sym = symmetrize(f);
    if sym.det.is_zero() {
        return Err(Error::Degenerate);
    }
    let a = sym.a;
    let q = f.q().clone();
    let d = snf(&a);
    let u = d.u;
    let u_inv = unimodular_inverse(&u)?;
    let ut = u.transpose();
    let a_tilde = u.mul(&a)?.mul(&ut)?;
    let q_tilde = u.mul(&q)?.mul(&ut)?;
    let a_tilde_inv = rational_inverse(&a_tilde)?;

    let offset = d.invariant_factors.iter().take_while(|x| x.is_one()).count();
    let orders = d.invariant_factors[offset..]
        .iter()
        .map(|x| {
            x.to_u64()
                .ok_or_else(|| Error::TooLarge(format!("invariant factor {x} exceeds 64 bits")))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = orders.len();

    let r_full = a_tilde_inv.mul(&RationalMatrix::from(&q_tilde))?.mul(&a_tilde_inv)?;
    let mut b = RationalMatrix::zeros(k, k);
    let mut r = RationalMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            b.set(i, j, a_tilde_inv.get(offset + i, offset + j).clone());
            r.set(i, j, r_full.get(offset + i, offset + j).clone());
        }
    }
    let form = SplitLinkingForm::new(orders.clone(), b, r)?;
    let pres = CokernelPresentation {
        invariant_factors: d.invariant_factors,
        orders,
        u,
        u_inv,
        q,
        a,
        q_tilde,
        a_tilde,
        a_tilde_inv,
        offset,
    };
    Ok((pres, form))
}

/// `b(x, y) = x^T B y` mod 1.
pub fn eval_linking(form: &SplitLinkingForm, x: &[i64], y: &[i64]) -> Result<BigRational> {
    form.check_len(x)?;
    form.check_len(y)?;
    let k = x.len();
    let mut acc = BigRational::zero();
    for i in 0..k {
        if x[i] == 0 {
            continue;
        }
        for j in 0..k {
            if y[j] != 0 {
                acc += form.b_matrix.get(i, j) * BigRational::from_integer((x[i] * y[j]).into());
            }
        }
    }
    Ok(frac_part(&acc))
}

/// `nu(x) = x^T R x` mod 1.
pub fn eval_refinement(form: &SplitLinkingForm, x: &[i64]) -> Result<BigRational> {
    form.check_len(x)?;
    let k = x.len();
    let mut acc = BigRational::zero();
    for i in 0..k {
        if x[i] == 0 {
            continue;
        }
        for j in 0..k {
            if x[j] != 0 {
                acc += form.refinement_matrix.get(i, j)
                    * BigRational::from_integer((x[i] * x[j]).into());
            }
        }
    }
    Ok(frac_part(&acc))
}

/// A homomorphism between explicit finite abelian groups, as a matrix whose
/// column `j` is the image of the `j`-th source generator.
///
/// Entry `(i, j)` lies in `[0, e_i)` and is divisible by `e_i / gcd(e_i, d_j)`,
/// where `d` are the source orders and `e` the target orders.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassMatrix {
    pub target_orders: Vec<u64>,
    pub source_orders: Vec<u64>,
    /// Row-major.
    pub entries: Vec<u64>,
}

impl ClassMatrix {
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.source_orders.len() + j]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.target_orders.len()).map(|i| self.get(i, j)).collect()
    }

    /// Image of a source class vector.
    pub fn apply(&self, x: &[i64]) -> Vec<i64> {
        let k = self.source_orders.len();
        (0..self.target_orders.len())
            .map(|i| {
                let e = self.target_orders[i] as i128;
                let s: i128 = (0..k).map(|j| self.get(i, j) as i128 * x[j] as i128).sum();
                s.rem_euclid(e) as i64
            })
            .collect()
    }
}

/// An isometry `g` with `b2(gx, gy) = b1(x, y)` and `nu2(gx) = nu1(x)`, if any.
pub fn find_form_isometry(
    source: &SplitLinkingForm,
    target: &SplitLinkingForm,
    budget: &Budget,
) -> Result<Option<ClassMatrix>> {
    let Some(matcher) = FormMatcher::new(source, target)? else {
        return Ok(None);
    };
    let Some(cols) = matcher.run_first(budget)? else {
        return Ok(None);
    };
    let k = source.orders.len();
    let decoded: Vec<Vec<u64>> = cols.iter().map(|&c| matcher.decode_code(c)).collect();
    let mut entries = vec![0; k * k];
    for (j, col) in decoded.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            entries[i * k + j] = v;
        }
    }
    Ok(Some(ClassMatrix {
        target_orders: target.orders.clone(),
        source_orders: source.orders.clone(),
        entries,
    }))
}
