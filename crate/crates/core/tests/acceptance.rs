//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Limits below are wall-clock
//! seconds. A criterion listed in `KNOWN_DIVERGENCES` is allowed to print
//! FAIL, but only with exactly the recorded computed values; anything else
//! that fails makes the process exit nonzero.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use baut::baut::AnalysisOptions;
use baut::fixtures::{default_fixture_dir, fixture_path, Fixture};
use baut::{
    analyze, boundary_form, boundary_of_isometry, change_basis, enumerate_boundary_automorphisms,
    enumerate_isometries, eval_linking, eval_refinement, find_form_isometry, obstruction_report, standard_family,
    symmetrize, Analysis, Budget, ClassMatrix, Error, Sign,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C1_LIMIT: f64 = 30.0;
const C2_LIMIT: f64 = 1.0;
const C3_LIMIT_SMALL: f64 = 60.0;
const C3_LIMIT_H5: f64 = 300.0;
const C4_BUDGET_H6: f64 = 3600.0;
const C4_BUDGET_H7: f64 = 4.0 * 3600.0;
const C6_LIMIT: f64 = 60.0;
const C7_LIMIT: f64 = 600.0;
const SEED: u64 = 0x5eed;

/// Isometry counts stated for h = 2..5.
const STATED_COUNTS: [(usize, u64); 4] = [(2, 8), (3, 48), (4, 1024), (5, 3840)];
/// Cokernel orders stated for h = 2..5, in stated order.
const STATED_ORDERS: [(usize, &[u64]); 4] = [
    (2, &[4, 4]),
    (3, &[8, 2, 2]),
    (4, &[4, 4, 2, 2]),
    (5, &[8, 2, 2, 2, 2]),
];
/// Indices stated for h = 6, 7.
const STATED_INDEX: [(usize, u64); 2] = [(6, 2), (7, 8)];

/// Criterion id and the only detail string with which it may fail.
const KNOWN_DIVERGENCES: [(u32, &str); 1] = [(1, "h=4: stated 1024, computed 1152, oracle 1152")];

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    Timeout,
}

struct Outcome {
    id: u32,
    title: &'static str,
    status: Status,
    detail: String,
    seconds: f64,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

fn family(h: usize) -> baut::QuadFormClass {
    standard_family(h, Sign::Plus).unwrap()
}

fn sorted(v: &[u64]) -> Vec<u64> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

fn criterion_1(counts: &mut HashMap<usize, u64>) -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut seen = Vec::new();
    for (h, stated) in STATED_COUNTS {
        let a = symmetrize(&family(h));
        let computed = enumerate_isometries(&a, &Budget::unlimited()).unwrap().len() as u64;
        let oracle = brute_isometries(&symmetrized(&family_rows(h))).len() as u64;
        counts.insert(h, computed);
        seen.push(format!("h={h}:{computed}"));
        if computed != stated || oracle != computed {
            bad.push(format!("h={h}: stated {stated}, computed {computed}, oracle {oracle}"));
        }
    }
    let seconds = secs(t);
    let ok = bad.is_empty() && seconds < C1_LIMIT;
    Outcome {
        id: 1,
        title: "isometry group counts h=2..5",
        status: if ok { Status::Pass } else { Status::Fail },
        detail: if bad.is_empty() { seen.join(" ") } else { bad.join("; ") },
        seconds,
    }
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    for (h, stated) in STATED_ORDERS {
        let (_, form) = boundary_form(&family(h)).unwrap();
        let oracle = cokernel_orders(&symmetrized(&family_rows(h)));
        let computed = sorted(form.orders());
        if computed != sorted(stated) || computed != oracle {
            bad.push(format!("h={h}: stated {stated:?}, computed {computed:?}, oracle {oracle:?}"));
        }
    }
    // timing covers only the library call path
    let seconds = secs(t);
    let ok = bad.is_empty() && seconds < C2_LIMIT;
    Outcome {
        id: 2,
        title: "cokernel structures h=2..5",
        status: if ok { Status::Pass } else { Status::Fail },
        detail: if bad.is_empty() { "all four match stated and minors oracle".into() } else { bad.join("; ") },
        seconds,
    }
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut times = Vec::new();
    for h in 2..=5 {
        let th = Instant::now();
        let a = analyze(&family(h), AnalysisOptions::default(), &Budget::unlimited()).unwrap();
        let s = secs(th);
        let limit = if h == 5 { C3_LIMIT_H5 } else { C3_LIMIT_SMALL };
        let r = &a.report;
        let equal_lists = a.image.keys() == a.automorphisms.keys();
        if !(r.surjective && r.baut_trivial && r.index == 1 && equal_lists) || s >= limit {
            bad.push(format!("h={h}: index {} surjective {} lists equal {equal_lists} in {s:.1}s", r.index, r.surjective));
        }
        times.push(format!("h={h}:{s:.2}s"));
    }
    Outcome {
        id: 3,
        title: "triviality verdicts h=2..5",
        status: if bad.is_empty() { Status::Pass } else { Status::Fail },
        detail: if bad.is_empty() { format!("Im = Aut bit-exact; {}", times.join(" ")) } else { bad.join("; ") },
        seconds: secs(t),
    }
}

fn criterion_4(counts: &mut HashMap<usize, u64>) -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    let mut timed_out = false;
    for (h, stated) in STATED_INDEX {
        let budget = Budget::from_seconds(Some(if h == 6 { C4_BUDGET_H6 } else { C4_BUDGET_H7 }));
        let options = AnalysisOptions { compute_orbits: true };
        match analyze(&family(h), options, &budget) {
            Ok(a) => {
                let r = &a.report;
                counts.insert(h, r.aut_v_count);
                let oracle = orbit_oracle(&a);
                notes.push(format!("h={h}: index {} orbits {:?} (oracle {oracle})", r.index, r.orbit_count));
                if r.index != stated || r.surjective || r.orbit_count != Some(oracle) {
                    bad.push(format!("h={h}: stated index {stated}, computed {}", r.index));
                }
                if h == 6 && r.orbit_count != Some(2) {
                    bad.push("h=6: an index-2 subgroup is normal, so orbits must be 2".into());
                }
                if h == 7 && !(2..=8).contains(&oracle) {
                    bad.push(format!("h=7: orbit count {oracle} outside [2, 8]"));
                }
            }
            Err(Error::Timeout { seconds }) => {
                timed_out = true;
                notes.push(format!("h={h}: budget of {seconds}s exhausted"));
            }
            Err(e) => bad.push(format!("h={h}: {e}")),
        }
    }
    let status = match (bad.is_empty(), timed_out) {
        (false, _) => Status::Fail,
        (true, true) => Status::Timeout,
        (true, false) => Status::Pass,
    };
    Outcome {
        id: 4,
        title: "non-triviality h=6 (index 2), h=7 (index 8)",
        status,
        detail: if bad.is_empty() { notes.join("; ") } else { bad.join("; ") },
        seconds: secs(t),
    }
}

/// Double cosets counted by BFS from generators of the image.
fn orbit_oracle(a: &Analysis) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let gens = generators(&a.image, &mut rng);
    double_cosets_by_bfs(&a.automorphisms, &gens)
}

fn criterion_5(counts: &HashMap<usize, u64>) -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut seen = Vec::new();
    for h in [2usize, 3, 5, 6, 7] {
        let want = (1u64 << h) * factorial(h as u64);
        match counts.get(&h) {
            Some(&c) if c == want => seen.push(format!("h={h}:{c}")),
            Some(&c) => bad.push(format!("h={h}: 2^h h! = {want}, computed {c}")),
            None => bad.push(format!("h={h}: not computed")),
        }
    }
    Outcome {
        id: 5,
        title: "count formula 2^h h! for h in {2,3,5,6,7}",
        status: if bad.is_empty() { Status::Pass } else { Status::Fail },
        detail: if bad.is_empty() { seen.join(" ") } else { bad.join("; ") },
        seconds: secs(t),
    }
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let budget = Budget::unlimited();
    let mut bad = Vec::new();
    for h in 2..=5 {
        let fx = Fixture::load(&fixture_path(&default_fixture_dir(), h)).unwrap();
        let (_, computed) = boundary_form(&family(h)).unwrap();
        let transcribed = fx.to_form().unwrap();
        if sorted(&fx.orders) != sorted(computed.orders()) {
            bad.push(format!("h={h}: orders differ"));
        }
        match find_form_isometry(&computed, &transcribed, &budget).unwrap() {
            Some(g) => {
                // verify the witness independently on all of T
                if !maps_form(&computed, &transcribed, &g) {
                    bad.push(format!("h={h}: returned map is not an isometry"));
                }
            }
            None => bad.push(format!("h={h}: isometry not found")),
        }
    }
    // perturbations: one diagonal entry, and one symmetric off-diagonal pair
    let mut rejected = 0;
    for h in 2..=5 {
        let fx = Fixture::load(&fixture_path(&default_fixture_dir(), h)).unwrap();
        let (_, computed) = boundary_form(&family(h)).unwrap();
        let mut diag = fx.clone();
        diag.linking[0][0] = add_half(&diag.linking[0][0]);
        let mut off = fx.clone();
        off.linking[0][1] = add_half(&off.linking[0][1]);
        off.linking[1][0] = add_half(&off.linking[1][0]);
        for p in [diag, off] {
            let form = p.to_form().unwrap();
            if find_form_isometry(&computed, &form, &budget).unwrap().is_none() {
                rejected += 1;
            } else {
                bad.push(format!("h={h}: perturbed fixture accepted"));
            }
        }
    }
    let seconds = secs(t);
    let ok = bad.is_empty() && seconds < C6_LIMIT;
    Outcome {
        id: 6,
        title: "fixture isometry h=2..5, perturbations rejected",
        status: if ok { Status::Pass } else { Status::Fail },
        detail: if bad.is_empty() {
            format!("4 isometric, {rejected}/8 perturbed fixtures rejected")
        } else {
            bad.join("; ")
        },
        seconds,
    }
}

fn add_half(s: &str) -> String {
    let x: num_rational::BigRational = s.parse().unwrap();
    let y = x + num_rational::BigRational::new(1.into(), 2.into());
    y.to_string()
}

fn maps_form(source: &baut::SplitLinkingForm, target: &baut::SplitLinkingForm, g: &ClassMatrix) -> bool {
    let (s, t) = (ScaledForm::new(source), ScaledForm::new(target));
    let den = s.den.max(t.den);
    let elems = s.elements();
    let images: Vec<Vec<i64>> = elems.iter().map(|x| apply(g, x)).collect();
    let lift = |v: i64, d: i64| v * (den / d);
    elems.iter().zip(&images).all(|(x, gx)| {
        lift(t.nu(gx), t.den) == lift(s.nu(x), s.den)
            && elems
                .iter()
                .zip(&images)
                .all(|(y, gy)| lift(t.b(gx, gy), t.den) == lift(s.b(x, y), s.den))
    })
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut bad = Vec::new();
    let mut check = |name: &str, ok: bool, bad: &mut Vec<String>| {
        parts.push(format!("{name}:{}", if ok { "ok" } else { "FAIL" }));
        if !ok {
            bad.push(name.to_string());
        }
    };
    check("split-axioms", split_axioms_exhaustive(), &mut bad);
    check("representatives", representative_independence(), &mut bad);
    check("homomorphism", homomorphism(), &mut bad);
    check("subgroup+lagrange", subgroup_and_lagrange(), &mut bad);
    check("basis-change", basis_change_invariance(), &mut bad);
    check("pruned=brute", pruned_equals_brute(), &mut bad);
    let seconds = secs(t);
    Outcome {
        id: 7,
        title: "property suites",
        status: if bad.is_empty() && seconds < C7_LIMIT { Status::Pass } else { Status::Fail },
        detail: parts.join(" "),
        seconds,
    }
}

/// nu(x+y) - nu(x) - nu(y) = b(x,y) and nu(rx) = r^2 nu(x) on all of T,
/// h = 1..7; library evaluation agrees with the scaled oracle for h <= 4.
fn split_axioms_exhaustive() -> bool {
    for h in 1..=7 {
        let (_, form) = boundary_form(&family(h)).unwrap();
        let f = ScaledForm::new(&form);
        let elems = f.elements();
        if elems.len() > 512 {
            return false;
        }
        let exp = *form.orders().iter().max().unwrap() as i64;
        for x in &elems {
            for r in 0..=exp {
                let rx: Vec<i64> = f.reduce(&x.iter().map(|v| r * v).collect::<Vec<_>>());
                if f.nu(&rx) != (r * r % f.den * f.nu(x)).rem_euclid(f.den) {
                    return false;
                }
            }
            for y in &elems {
                let s = f.reduce(&x.iter().zip(y).map(|(a, b)| a + b).collect::<Vec<_>>());
                if (f.nu(&s) - f.nu(x) - f.nu(y)).rem_euclid(f.den) != f.b(x, y) {
                    return false;
                }
            }
        }
        if h <= 4 {
            let den = num_rational::BigRational::from_integer(f.den.into());
            for x in &elems {
                if eval_refinement(&form, x).unwrap() * &den != num_rational::BigRational::from_integer(f.nu(x).into()) {
                    return false;
                }
                for y in &elems {
                    if eval_linking(&form, x, y).unwrap() * &den
                        != num_rational::BigRational::from_integer(f.b(x, y).into())
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Shifting a class vector by a multiple of the orders leaves both
/// evaluation routes unchanged.
fn representative_independence() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for h in 1..=6 {
        let (pres, form) = boundary_form(&family(h)).unwrap();
        let k = form.orders().len();
        for _ in 0..50 {
            let x: Vec<i64> = form.orders().iter().map(|&d| rng.gen_range(0..d as i64)).collect();
            let y: Vec<i64> = form.orders().iter().map(|&d| rng.gen_range(0..d as i64)).collect();
            let shift: Vec<i64> = (0..k).map(|i| x[i] + form.orders()[i] as i64 * rng.gen_range(-3..=3)).collect();
            let nu = eval_refinement(&form, &x).unwrap();
            let b = eval_linking(&form, &x, &y).unwrap();
            if eval_refinement(&form, &shift).unwrap() != nu
                || pres.refinement_by_lift(&shift).unwrap() != nu
                || pres.refinement_by_lift(&x).unwrap() != nu
                || eval_linking(&form, &shift, &y).unwrap() != b
                || pres.linking_by_lift(&shift, &y).unwrap() != b
            {
                return false;
            }
        }
    }
    true
}

/// boundary(g g') = boundary(g) boundary(g'): all pairs for h <= 4, random
/// pairs for h = 5..7.
fn homomorphism() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for h in 1..=7 {
        let f = family(h);
        let (pres, _) = boundary_form(&f).unwrap();
        let auts = enumerate_isometries(&symmetrize(&f), &Budget::unlimited()).unwrap();
        let bd = |i: usize| boundary_of_isometry(&pres, &pres.to_presentation_basis(&auts.matrix(i)).unwrap()).unwrap();
        if h <= 4 {
            let all: Vec<ClassMatrix> = (0..auts.len()).map(bd).collect();
            for i in 0..auts.len() {
                for j in 0..auts.len() {
                    let prod = auts.matrix(i).mul(&auts.matrix(j)).unwrap();
                    let p = auts.position(&prod.to_i64().unwrap().iter().map(|&x| x as i32).collect::<Vec<_>>());
                    let Some(p) = p else { return false };
                    if compose(&all[i], &all[j]) != all[p] {
                        return false;
                    }
                }
            }
        } else {
            for _ in 0..200 {
                let (i, j) = (rng.gen_range(0..auts.len()), rng.gen_range(0..auts.len()));
                let prod = auts.matrix(i).mul(&auts.matrix(j)).unwrap();
                let lhs = boundary_of_isometry(&pres, &pres.to_presentation_basis(&prod).unwrap()).unwrap();
                if lhs != compose(&bd(i), &bd(j)) {
                    return false;
                }
            }
        }
    }
    true
}

/// The image is closed under products (exhaustive for h <= 5) and its order
/// divides the order of Aut (h <= 7).
fn subgroup_and_lagrange() -> bool {
    for h in 1..=7 {
        let a = analyze(&family(h), AnalysisOptions::default(), &Budget::unlimited()).unwrap();
        if a.automorphisms.len() % a.image.len() != 0 || !a.image.is_subset_of(&a.automorphisms) {
            return false;
        }
        if h <= 5 {
            let elems: Vec<ClassMatrix> = a.image.iter().collect();
            let id = ClassMatrix::identity(a.image.orders().to_vec());
            if !a.image.contains(&id) {
                return false;
            }
            for x in &elems {
                for y in &elems {
                    if !a.image.contains(&compose(x, y)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// 20 random unimodular conjugations per genus h = 2..4 keep every count
/// and verdict.
fn basis_change_invariance() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let budget = Budget::unlimited();
    for h in 2..=4 {
        let f = family(h);
        let base = obstruction_report(&f, AnalysisOptions::default(), &budget).unwrap();
        for _ in 0..20 {
            let p = random_unimodular(h, &mut rng);
            let g = change_basis(&f, &p).unwrap();
            let r = obstruction_report(&g, AnalysisOptions::default(), &budget).unwrap();
            let same = sorted(&r.orders) == sorted(&base.orders)
                && r.aut_v_count == base.aut_v_count
                && r.image_count == base.image_count
                && r.bdry_aut_count == base.bdry_aut_count
                && r.index == base.index
                && r.baut_trivial == base.baut_trivial;
            if !same {
                return false;
            }
        }
    }
    true
}

/// The pruned search returns exactly the unpruned sweep, in the same order.
fn pruned_equals_brute() -> bool {
    for h in 1..=3 {
        let (_, form) = boundary_form(&family(h)).unwrap();
        let pruned: Vec<ClassMatrix> = enumerate_boundary_automorphisms(&form, &Budget::unlimited())
            .unwrap()
            .iter()
            .collect();
        if pruned != brute_form_automorphisms(&form) {
            return false;
        }
    }
    true
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut counts = HashMap::new();
    let outcomes = vec![
        criterion_1(&mut counts),
        criterion_2(),
        criterion_3(),
        criterion_4(&mut counts),
        criterion_5(&counts),
        criterion_6(),
        criterion_7(),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Timeout => "TIMEOUT",
        };
        println!("[{tag}] criterion {}: {} ({:.1}s) {}", o.id, o.title, o.seconds, o.detail);
        let known = KNOWN_DIVERGENCES.iter().any(|&(id, detail)| id == o.id && detail == o.detail);
        if o.status == Status::Fail && known {
            println!("       recorded divergence: stated value is inconsistent with the computed group");
        } else if o.status != Status::Pass {
            unexpected += 1;
        }
    }
    println!("acceptance finished in {:.1}s", secs(started));
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criterion/criteria did not pass");
        ExitCode::FAILURE
    }
}
