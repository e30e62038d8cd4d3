//! Integral quadratic forms as classes in the quadratic Q-group of `Z^h`.
//!
//! A class `[Q]` is stored through one integer representative; two
//! representatives are identified when they differ by `X - X^T`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{is_unimodular, IntMatrix};

/// Largest genus for which a trivial boundary automorphism set certifies the obstruction.
pub const THEOREM_MAX_GENUS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            other => Err(Error::InvalidArgument(format!("unknown sign {other:?}"))),
        }
    }
}

/// A class `[q]` in `Q_+(Z^h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadFormClass {
    q: IntMatrix,
    sign: Sign,
    genus: Option<usize>,
}

impl QuadFormClass {
    /// Wraps an arbitrary square representative (a custom form).
    pub fn new(q: IntMatrix) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::NotSquare {
                rows: q.rows(),
                cols: q.cols(),
            });
        }
        Ok(QuadFormClass {
            q,
            sign: Sign::Plus,
            genus: None,
        })
    }

    pub fn rank(&self) -> usize {
        self.q.rows()
    }

    pub fn q(&self) -> &IntMatrix {
        &self.q
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// The genus `h` when this is a member of the standard family.
    pub fn genus(&self) -> Option<usize> {
        self.genus
    }

    /// Same class up to sign, with the plus representative.
    ///
    /// The boundary automorphism set of `-theta` equals that of `theta`, so the
    /// pipeline always runs on the positive representative.
    pub fn to_plus(&self) -> QuadFormClass {
        match self.sign {
            Sign::Plus => self.clone(),
            Sign::Minus => QuadFormClass {
                q: self.q.neg(),
                sign: Sign::Plus,
                genus: self.genus,
            },
        }
    }

    pub fn negated(&self) -> QuadFormClass {
        QuadFormClass {
            q: self.q.neg(),
            sign: match self.sign {
                Sign::Plus => Sign::Minus,
                Sign::Minus => Sign::Plus,
            },
            genus: self.genus,
        }
    }
}

/// The genus-indexed family: first row all 4, rows below carry 2 on and
/// above the diagonal, 0 below; negated for `Sign::Minus`.
pub fn standard_family(h: usize, sign: Sign) -> Result<QuadFormClass> {
    if h < 1 {
        return Err(Error::InvalidArgument("genus must be at least 1".into()));
    }
    let mut q = IntMatrix::zeros(h, h);
    let s: i64 = match sign {
        Sign::Plus => 1,
        Sign::Minus => -1,
    };
    for i in 0..h {
        for j in i..h {
            let v = if i == 0 { 4 } else { 2 };
            q.set(i, j, BigInt::from(s * v));
        }
    }
    Ok(QuadFormClass {
        q,
        sign,
        genus: Some(h),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Definiteness {
    Positive,
    Negative,
    Neither,
}

/// The symmetric bilinear form `a = q + q^T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetrizedForm {
    pub a: IntMatrix,
    pub det: BigInt,
    pub definiteness: Definiteness,
}

impl SymmetrizedForm {
    /// Wraps a symmetric matrix; used for forms that do not come from a class.
    pub fn from_symmetric(a: IntMatrix) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(Error::InvalidArgument("matrix is not symmetric".into()));
        }
        let minors = a.leading_minors()?;
        let det = minors.last().cloned().unwrap_or_else(BigInt::zero);
        let definiteness = if minors.iter().all(Signed::is_positive) {
            Definiteness::Positive
        } else if minors
            .iter()
            .enumerate()
            .all(|(k, m)| if k % 2 == 0 { m.is_negative() } else { m.is_positive() })
        {
            Definiteness::Negative
        } else {
            Definiteness::Neither
        };
        Ok(SymmetrizedForm {
            a,
            det,
            definiteness,
        })
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn is_definite(&self) -> bool {
        self.definiteness != Definiteness::Neither
    }
}

pub fn symmetrize(f: &QuadFormClass) -> SymmetrizedForm {
    let a = f
        .q
        .add(&f.q.transpose())
        .expect("square matrix plus its transpose");
    SymmetrizedForm::from_symmetric(a).expect("q + q^T is symmetric")
}

/// Whether two representatives define the same class, i.e. `q1 - q2` is
/// antisymmetric.
pub fn qplus_equivalent(f1: &QuadFormClass, f2: &QuadFormClass) -> Result<bool> {
    if f1.rank() != f2.rank() {
        return Err(Error::RankMismatch {
            left: f1.rank(),
            right: f2.rank(),
        });
    }
    let d = f1.q.sub(&f2.q)?;
    let n = d.rows();
    Ok((0..n).all(|i| {
        d.get(i, i).is_zero() && (0..i).all(|j| (d.get(i, j) + d.get(j, i)).is_zero())
    }))
}

/// The representative `p^T q p` for unimodular `p`.
pub fn change_basis(f: &QuadFormClass, p: &IntMatrix) -> Result<QuadFormClass> {
    if p.rows() != f.rank() || p.cols() != f.rank() {
        return Err(Error::Shape(format!(
            "basis change must be {0}x{0}, got {1}x{2}",
            f.rank(),
            p.rows(),
            p.cols()
        )));
    }
    if !is_unimodular(p) {
        return Err(Error::NotUnimodular {
            det: p.det()?.to_string(),
        });
    }
    let q = p.transpose().mul(&f.q)?.mul(p)?;
    Ok(QuadFormClass {
        q,
        sign: f.sign,
        genus: f.genus,
    })
}

/// `x^T q x`.
pub fn evaluate(f: &QuadFormClass, x: &[i64]) -> Result<BigInt> {
    let n = f.rank();
    if x.len() != n {
        return Err(Error::Shape(format!("vector of length {} for rank {n}", x.len())));
    }
    let mut acc = BigInt::zero();
    for i in 0..n {
        for j in 0..n {
            acc += f.q.get(i, j) * x[i] * x[j];
        }
    }
    Ok(acc)
}

/// Whether every diagonal entry of a symmetric matrix is even.
pub fn has_even_diagonal(a: &IntMatrix) -> bool {
    (0..a.rows()).all(|i| a.get(i, i).is_even())
}
