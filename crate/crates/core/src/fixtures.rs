//! Hand-transcribed boundary data for the small family members, checked
//! against the computed boundary forms up to isometry.
//!
//! A fixture stores the cyclic orders in its own generator order, the
//! linking matrix, the refinement as upper-triangular coefficients of the
//! monomials `x_i x_j` (`i <= j`), a reduced representative `q_tilde` and
//! the isometry count.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::boundary::{boundary_form, find_form_isometry, SplitLinkingForm};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::lattice::enumerate_isometries;
use crate::linalg::{IntMatrix, RationalMatrix};
use crate::quadform::{standard_family, symmetrize, QuadFormClass, Sign};

/// Genera with shipped fixtures.
pub const FIXTURE_GENERA: [usize; 4] = [2, 3, 4, 5];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub genus: usize,
    pub orders: Vec<u64>,
    pub linking: Vec<Vec<String>>,
    pub refinement: Vec<Vec<String>>,
    pub q_tilde: Vec<Vec<i64>>,
    pub aut_count: u64,
}

pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("fixtures")
}

pub fn fixture_path(dir: &Path, genus: usize) -> PathBuf {
    dir.join(format!("h{genus}.json"))
}

fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    BigRational::from_str(s.trim()).map_err(|_| format!("not a rational number: {s:?}"))
}

fn square_rationals(rows: &[Vec<String>], k: usize, what: &str) -> std::result::Result<Vec<BigRational>, String> {
    if rows.len() != k || rows.iter().any(|r| r.len() != k) {
        return Err(format!("{what} must be {k}x{k}"));
    }
    rows.iter().flatten().map(|s| parse_rational(s)).collect()
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Fixture {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Fixture {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    /// The transcribed `(T, b, nu)`; only shapes and symmetry are enforced,
    /// so a corrupted fixture still loads and then fails the isometry check.
    pub fn to_form(&self) -> std::result::Result<SplitLinkingForm, String> {
        let k = self.orders.len();
        let b = square_rationals(&self.linking, k, "linking")?;
        let c = square_rationals(&self.refinement, k, "refinement")?;
        let half = BigRational::new(1.into(), 2.into());
        let mut r = RationalMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let x = &c[i * k + j];
                match i.cmp(&j) {
                    std::cmp::Ordering::Equal => r.set(i, i, x.clone()),
                    std::cmp::Ordering::Less => {
                        r.set(i, j, x * &half);
                        r.set(j, i, x * &half);
                    }
                    std::cmp::Ordering::Greater if !x.is_zero() => {
                        return Err("refinement coefficients must be upper triangular".into());
                    }
                    std::cmp::Ordering::Greater => {}
                }
            }
        }
        let b = RationalMatrix::new(k, k, b).map_err(|e| e.to_string())?;
        SplitLinkingForm::new(self.orders.clone(), b, r).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FixtureCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureOutcome {
    pub genus: usize,
    pub path: PathBuf,
    pub checks: Vec<FixtureCheck>,
}

impl FixtureOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(FixtureCheck { name, passed, detail });
    }
}

fn sorted(v: &[u64]) -> Vec<u64> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Recomputes the boundary data of the family member and compares it with
/// the fixture.
pub fn check_fixture(fx: &Fixture, path: &Path, budget: &Budget) -> Result<FixtureOutcome> {
    let mut out = FixtureOutcome {
        genus: fx.genus,
        path: path.to_owned(),
        checks: Vec::new(),
    };
    let f = standard_family(fx.genus, Sign::Plus)?;
    let (_, computed) = boundary_form(&f)?;

    let (want, got) = (sorted(&fx.orders), sorted(computed.orders()));
    out.push("orders", want == got, format!("fixture {:?}, computed {:?}", fx.orders, computed.orders()));

    match fx.to_form() {
        Ok(transcribed) => {
            let iso = find_form_isometry(&computed, &transcribed, budget)?;
            let detail = match &iso {
                Some(g) => format!("isometry found: {:?}", g.entries),
                None => "isometry not found".to_string(),
            };
            out.push("isometric", iso.is_some(), detail);
        }
        Err(msg) => out.push("isometric", false, format!("fixture form rejected: {msg}")),
    }

    let count = enumerate_isometries(&symmetrize(&f), budget)?.len() as u64;
    out.push(
        "aut_count",
        count == fx.aut_count,
        format!("fixture {}, computed {count}", fx.aut_count),
    );

    match q_tilde_check(fx, &f, &computed, count, budget) {
        Ok((passed, detail)) => out.push("q_tilde", passed, detail),
        Err(e) if e.is_timeout() => return Err(e),
        Err(e) => out.push("q_tilde", false, e.to_string()),
    }
    Ok(out)
}

/// `q_tilde` must describe the same lattice as the family member: equal
/// determinant, isometric boundary form and equally many isometries.
fn q_tilde_check(
    fx: &Fixture,
    f: &QuadFormClass,
    computed: &SplitLinkingForm,
    aut_count: u64,
    budget: &Budget,
) -> Result<(bool, String)> {
    let qt = QuadFormClass::new(IntMatrix::from_rows(&fx.q_tilde)?)?;
    let (sym, sym_f) = (symmetrize(&qt), symmetrize(f));
    if sym.det != sym_f.det {
        return Ok((false, format!("determinant {} vs {}", sym.det, sym_f.det)));
    }
    let (_, form) = boundary_form(&qt)?;
    if find_form_isometry(computed, &form, budget)?.is_none() {
        return Ok((false, "boundary form of q_tilde is not isometric".into()));
    }
    let count = enumerate_isometries(&sym, budget)?.len() as u64;
    Ok((count == aut_count, format!("determinant {}, {count} isometries", sym.det)))
}

/// Checks every shipped genus; a missing or unreadable file is an error.
pub fn validate_fixtures(dir: &Path, budget: &Budget) -> Result<Vec<FixtureOutcome>> {
    FIXTURE_GENERA
        .iter()
        .map(|&h| {
            let path = fixture_path(dir, h);
            let fx = Fixture::load(&path)?;
            if fx.genus != h {
                return Err(Error::Fixture {
                    path,
                    message: format!("declares genus {} but is named for genus {h}", fx.genus),
                });
            }
            check_fixture(&fx, &path, budget)
        })
        .collect()
}
