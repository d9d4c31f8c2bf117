//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hs_core::gf2::coset_of;
use hs_core::invar::{
    boundary_adversary, build_ma, check_claim, invariant_k, invariant_m, parse_codes, random_adversary,
    recover_codes, AnchorFamily, InvariantClass, Thresholds,
};
use hs_core::isomap::{build_iso, verify_iso_with, PIdentification};
use hs_core::model::{
    canonical_model, check_axioms, check_axioms_with, extend_model, standard_model, HElem, TwistedModel,
    TYPING_AXIOMS,
};
use hs_core::solve::{
    amalgamate, full_solve, greedy_extend, is_solution, pull_back, random_solution, Solution, SolveError,
    SolveMethod, SystemOfSolutions,
};
use hs_core::sweep::SweepConfig;
use hs_core::universe::{Atom, Face, Universe};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Outcome {
    passed: bool,
    summary: String,
    /// Deterministic machine report; compared across runs.
    data: Value,
}

fn universe(n: usize, k: usize, l: usize, c: usize) -> Arc<Universe> {
    Arc::new(Universe::with_atom_count(n, k, l, c).unwrap())
}

fn atoms(n: u32) -> Vec<Atom> {
    (0..n).map(Atom).collect()
}

fn valid(m: &TwistedModel, f: &Solution) -> bool {
    is_solution(m, f).unwrap().is_none()
}

fn deep() -> SweepConfig {
    SweepConfig {
        exhaustive_limit: 1 << 26,
        ..SweepConfig::default()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn axiom_soundness() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    let mut not_exhaustive = 0;
    let mut run = |name: String, m: &TwistedModel, exhaustive: bool| {
        let r = if exhaustive { check_axioms_with(m, &deep()) } else { check_axioms(m) };
        if exhaustive && !r.exhaustive_except(&TYPING_AXIOMS) {
            not_exhaustive += 1;
        }
        if let Some(f) = r.first_failure() {
            failures.push(format!("{name}: {} {}", f.id.name(), f.witness.as_deref().unwrap_or("")));
        }
        reports.push(json!({"model": name, "report": r}));
    };
    for (k, n, exhaustive) in [(2, 4, true), (3, 5, false)] {
        let u = universe(n, k, 3, 1);
        run(format!("k{k} standard"), &standard_model(u.clone()), exhaustive);
        for seed in 0..100 {
            let m = TwistedModel::random_canonical(u.clone(), &mut rng(seed));
            run(format!("k{k} canonical {seed}"), &m, exhaustive);
        }
    }
    let took = start.elapsed();
    Outcome {
        passed: failures.is_empty() && not_exhaustive == 0,
        summary: format!(
            "{} models, {} failures, {} k=2 reports sampled outside the typing axioms; runtime {} the expected 60 s",
            reports.len(),
            failures.len(),
            not_exhaustive,
            if took < Duration::from_secs(60) { "within" } else { "above" }
        ),
        data: json!({"failures": failures, "reports": reports}),
    }
}

fn greedy_from_empty() -> Outcome {
    let mut failures = Vec::new();
    let mut total = 0;
    for (k, n, count) in [(2, 6, 100), (3, 5, 25)] {
        for seed in 0..count {
            let m = TwistedModel::random_canonical(universe(n, k, 4, 2), &mut rng(seed));
            let f = greedy_extend(&m, &Solution::new(), &[], m.universe().atoms()).unwrap();
            total += 1;
            if !(f.is_total(&m) && valid(&m, &f)) {
                failures.push(format!("k{k} seed {seed}"));
            }
        }
    }
    Outcome {
        passed: failures.is_empty(),
        summary: format!("{total} models, {} failures", failures.len()),
        data: json!({"models": total, "failures": failures}),
    }
}

fn solver_agreement() -> Outcome {
    let u = universe(3, 2, 2, 1);
    let free: Vec<(usize, usize)> = (0..u.faces().len())
        .flat_map(|f| (u.cutoff()..u.levels()).map(move |l| (f, l)))
        .collect();
    let mut twists: Vec<Vec<usize>> = vec![vec![]];
    for i in 0..free.len() {
        twists.push(vec![i]);
        for j in i + 1..free.len() {
            twists.push(vec![i, j]);
        }
    }
    let mut disagreements = Vec::new();
    let mut verdicts = Vec::new();
    for bits in &twists {
        let mut g = BTreeMap::new();
        for (fi, face) in u.faces().iter().enumerate() {
            let mut v = u.zero_levels();
            for &b in bits {
                if free[b].0 == fi {
                    v.set(free[b].1, true);
                }
            }
            g.insert(face.clone(), coset_of(&v, u.cutoff()).unwrap());
        }
        let m = canonical_model(u.clone(), &g).unwrap();
        let v: Vec<bool> = SolveMethod::ALL
            .into_iter()
            .map(|method| full_solve(&m, method).unwrap().is_some_and(|f| valid(&m, &f)))
            .collect();
        if v.windows(2).any(|w| w[0] != w[1]) {
            disagreements.push(format!("twist bits {bits:?}: {v:?}"));
        }
        verdicts.push(v);
    }
    let mut larger = 0;
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let k = 2 + (seed as usize % 2);
        let n = r.gen_range(k + 2..=6);
        let m = TwistedModel::random_canonical(universe(n, k, 3, 1), &mut r);
        let g = full_solve(&m, SolveMethod::Greedy).unwrap().is_some_and(|f| valid(&m, &f));
        let l = full_solve(&m, SolveMethod::Linear).unwrap().is_some_and(|f| valid(&m, &f));
        larger += 1;
        if g != l {
            disagreements.push(format!("seed {seed}: greedy {g}, linear {l}"));
        }
    }
    Outcome {
        passed: disagreements.is_empty(),
        summary: format!(
            "{} exhaustive twists, {larger} larger instances, {} disagreements",
            twists.len(),
            disagreements.len()
        ),
        data: json!({"verdicts": verdicts, "disagreements": disagreements}),
    }
}

fn iso_completeness() -> Outcome {
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for seed in 0..50 {
        let mut r = rng(seed);
        let m = TwistedModel::random_canonical(universe(4, 2, 3, 1), &mut r);
        let f = random_solution(&m, &mut r).unwrap().unwrap();
        let g = random_solution(&m, &mut r).unwrap().unwrap();
        let iso = build_iso(PIdentification::new(m.clone(), m).unwrap(), f, g).unwrap();
        let report = verify_iso_with(&iso, &deep()).unwrap();
        if !report.passed() || !report.exhaustive() {
            failures.push(format!("seed {seed}: {:?}", report.first_failure()));
        }
        reports.push(report);
    }
    Outcome {
        passed: failures.is_empty(),
        summary: format!("{} pairs verified exhaustively, {} failures", reports.len(), failures.len()),
        data: json!({"failures": failures, "reports": reports}),
    }
}

/// Parts over `∅` and `{0}` come from one solution; any other part is a
/// greedy extension of the base part, so the system is not a restriction
/// system in general.
fn mixed_system(m: &TwistedModel, f: &Solution, base: &[Atom], extras: &[Atom]) -> SystemOfSolutions {
    let below = SystemOfSolutions::restrictions_of(f, base.to_vec(), extras.to_vec()).unwrap();
    let root = below.part(&[]).unwrap().clone();
    let mut parts = BTreeMap::new();
    for (s, part) in below.parts() {
        let p = if s.len() == 1 && s[0] > 0 {
            greedy_extend(m, &root, base, &below.atoms_of(s)).unwrap()
        } else {
            part.clone()
        };
        parts.insert(s.clone(), p);
    }
    SystemOfSolutions::new(base.to_vec(), extras.to_vec(), parts).unwrap()
}

fn amalgamation() -> Outcome {
    let mut failures = Vec::new();
    let mut refused = 0;
    let mut shapes = Vec::new();
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let k = 2 + (seed as usize % 2);
        let n = k + 3;
        let m = TwistedModel::random_canonical(universe(n, k, 3, 1), &mut r);
        let mp = r.gen_range(1..k);
        let f = random_solution(&m, &mut r).unwrap().unwrap();
        let all = atoms(n as u32);
        let sys = mixed_system(&m, &f, &all[..n - mp], &all[n - mp..]);
        match amalgamate(&m, &sys) {
            Ok(g) if g.is_total(&m) && valid(&m, &g) && sys.parts().values().all(|p| g.extends(p)) => {}
            Ok(_) => failures.push(format!("seed {seed}: invalid amalgam")),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
        let over = SystemOfSolutions::restrictions_of(&f, all[..n - k].to_vec(), all[n - k..].to_vec()).unwrap();
        if matches!(amalgamate(&m, &over), Err(SolveError::Refused(_))) {
            refused += 1;
        } else {
            failures.push(format!("seed {seed}: m' = k accepted"));
        }
        shapes.push(json!([k, mp]));
    }
    Outcome {
        passed: failures.is_empty() && refused == 100,
        summary: format!("100 systems, {} failures, m' = k refused {refused}/100", failures.len()),
        data: json!({"shapes": shapes, "failures": failures, "refused": refused}),
    }
}

fn anchor_for(m: &TwistedModel, r: &mut ChaCha8Rng) -> BTreeMap<Face, HElem> {
    m.universe()
        .faces()
        .iter()
        .map(|f| {
            let mut h = m.h_base(f).unwrap();
            for i in 0..m.cutoff() {
                if r.gen() {
                    h.vec.flip(i);
                }
            }
            (f.clone(), h)
        })
        .collect()
}

fn pullback_and_extension() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..50 {
        let mut r = rng(seed);
        let m = TwistedModel::random_canonical(universe(3, 2, 3, 1), &mut r);
        let anchor = anchor_for(&m, &mut r);
        let (t, e) = extend_model(&m, &[Atom(3), Atom(4)], &anchor).unwrap();
        let report = check_axioms(&t);
        if let Some(f) = report.first_failure() {
            failures.push(format!("seed {seed}: target fails {}", f.id.name()));
            continue;
        }
        let ft = random_solution(&t, &mut r).unwrap().unwrap();
        match pull_back(&e, &ft) {
            Ok(f) if f.is_total(&m) && valid(&m, &f) => {}
            Ok(_) => failures.push(format!("seed {seed}: pull-back is not a solution")),
            Err(err) => failures.push(format!("seed {seed}: {err}")),
        }
    }
    Outcome {
        passed: failures.is_empty(),
        summary: format!("50 extensions, {} failures", failures.len()),
        data: json!({"failures": failures}),
    }
}

fn random_anchors(m: &TwistedModel, r: &mut ChaCha8Rng) -> AnchorFamily {
    let u = m.universe();
    let mut f = AnchorFamily::new();
    for face in u.faces() {
        for l in 0..m.levels() {
            let mut x = m.g_zero(l, face);
            for i in 0..u.faces().len() {
                x.offset.set(i, r.gen());
            }
            f.insert(x);
        }
    }
    f
}

fn y_independence() -> Outcome {
    let mut failures = Vec::new();
    let mut values = Vec::new();
    let mut evaluated = 0;
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let k = 2 + (seed as usize % 2);
        let m = TwistedModel::random_canonical(universe(k + 2, k, 4, 2), &mut r);
        let f = random_anchors(&m, &mut r);
        let mut chain = m.universe().atoms().to_vec();
        chain.shuffle(&mut r);
        chain.truncate(k + 1);
        let h = Face::new(&chain[1..], k).unwrap();
        let coset = m.h_twist(&h).unwrap().clone();
        let all: Vec<String> = (0..coset.size())
            .map(|i| {
                let y = HElem { face: h.clone(), vec: coset.element(i) };
                format!("{:?}", invariant_k(&m, &chain, &f, &y).unwrap())
            })
            .collect();
        evaluated += all.len();
        if all.windows(2).any(|w| w[0] != w[1]) {
            failures.push(format!("seed {seed}: {all:?}"));
        }
        values.push(all[0].clone());
    }
    Outcome {
        passed: failures.is_empty(),
        summary: format!("20 chains, {evaluated} choices of y, {} mismatches", failures.len()),
        data: json!({"values": values, "failures": failures}),
    }
}

/// k = 3, depth 1, fourteen atoms: base `0..12`, `I_0 = {0, 1}`, tail
/// `{12, 13}`, thresholds (2, 5). Anchors on faces through both tail atoms
/// are left out, so the invariant fills them.
struct Perturbation {
    m: TwistedModel,
    f: AnchorFamily,
    base: Vec<Atom>,
    tail: [Atom; 2],
    th: Thresholds,
}

impl Perturbation {
    fn new(seed: u64) -> Self {
        let n = 12u32;
        let mut r = rng(seed);
        let m = TwistedModel::random_canonical(universe(n as usize + 2, 3, 4, 2), &mut r);
        let tail = [Atom(n), Atom(n + 1)];
        let mut f = random_anchors(&m, &mut r);
        for face in m.universe().faces().iter().filter(|u| u.contains(tail[0]) && u.contains(tail[1])) {
            for l in 0..m.levels() {
                f.remove(l, face);
            }
        }
        Self { m, f, base: atoms(n), tail, th: Thresholds::new(vec![2, 5]).unwrap() }
    }

    fn invariant(&self, f: &AnchorFamily) -> InvariantClass {
        invariant_m(&self.m, 1, &self.base, &[self.base[..2].to_vec()], &self.tail, f, &self.th).unwrap()
    }

    fn with_extension(&self, flips: &[(usize, Atom, Vec<Atom>)]) -> AnchorFamily {
        let mut f = self.f.clone();
        for (l, b, coords) in flips {
            let u = Face::new(&[*b, self.tail[0], self.tail[1]], 3).unwrap();
            let mut x = f.get(*l, &u).cloned().unwrap_or_else(|| self.m.g_zero(*l, &u));
            for &a in coords {
                let w = Face::new(&[a, self.tail[0], self.tail[1]], 3).unwrap();
                x.offset.flip(self.m.universe().face_index(&w).unwrap());
            }
            f.insert(x);
        }
        f
    }
}

fn budgeted_extension() -> Outcome {
    let mut failures = Vec::new();
    let mut seen = Vec::new();
    for seed in 0..50u64 {
        let p = Perturbation::new(seed);
        let mut r = rng(seed + 1000);
        let t = p.th.get(1).unwrap();
        let d = r.gen_range(1..=2usize);
        let s = (t - 1) / d;
        let flips: Vec<_> = (0..d)
            .map(|_| {
                let mut coords = p.base[2..].to_vec();
                coords.shuffle(&mut r);
                coords.truncate(r.gen_range(1..=s));
                (r.gen_range(0..p.m.levels()), p.base[r.gen_range(0..2)], coords)
            })
            .collect();
        let reference = p.invariant(&p.f);
        let other = p.invariant(&p.with_extension(&flips));
        let diff = reference.differences(&other);
        if !reference.equivalent(&other) {
            failures.push(format!("seed {seed}: d={d} s={s} differences {diff:?}"));
        }
        seen.push(json!({"d": d, "s": s, "differences": diff}));
    }
    let p = Perturbation::new(0);
    let reference = p.invariant(&p.f);
    let over = p.invariant(&p.with_extension(&[(3, p.base[0], p.base[2..7].to_vec())]));
    let over_diff = reference.differences(&over);
    let observed = !reference.equivalent(&over);
    Outcome {
        passed: failures.is_empty() && observed,
        summary: format!(
            "50 perturbations within budget, {} visible; over-budget probe (d*s = 5, t_1 = 5) {} with {:?} differing entries",
            failures.len(),
            if observed { "visible" } else { "invisible" },
            over_diff
        ),
        data: json!({"within": seen, "failures": failures, "over_budget": over_diff}),
    }
}

const CODES: &str = "HSCODES 4 2
CODE [0010 0011 0001 0000 0010 0011]
CODE [0011 0000 0000 0001 0010 0010]
CODE [0001 0001 0010 0011 0000 0000]
CODE [0000 0010 0011 0011 0001 0001]
";

fn recovery(elapsed: &mut Duration) -> Outcome {
    let start = Instant::now();
    let codes = parse_codes(CODES).unwrap();
    let want: Vec<Option<String>> = codes.codes.iter().map(|c| Some(c.to_string())).collect();
    let ma = build_ma(2, &Thresholds::new(vec![4]).unwrap(), 6, &codes).unwrap();
    let claim = check_claim(&ma, 0).unwrap();
    let mut failures = Vec::new();
    let mut perturbed = Vec::new();
    for seed in 0..200 {
        let h = random_adversary(&ma, &mut rng(seed), 1, 2);
        let r = recover_codes(&ma, &h).unwrap();
        if !(r.within_budget && r.exact && r.recovered == want) {
            failures.push(format!("seed {seed}: {:?}", r.recovered));
        }
        perturbed.push(json!([r.perturbed_pairs, r.max_support]));
    }
    let probe = recover_codes(&ma, &boundary_adversary(&ma, 0, 0).unwrap()).unwrap();
    *elapsed = start.elapsed();
    let fast = *elapsed < Duration::from_secs(120);
    Outcome {
        passed: claim.holds() && claim.checked > 0 && failures.is_empty() && fast,
        summary: format!(
            "claim {} checked / {} failures; 200 adversaries, {} inexact; boundary probe exact = {}",
            claim.checked,
            claim.failures.len(),
            failures.len(),
            probe.exact
        ),
        data: json!({"claim": claim, "adversaries": perturbed, "failures": failures, "probe": probe}),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 8] = [
    ("axiom soundness", axiom_soundness),
    ("greedy extension from empty", greedy_from_empty),
    ("solver agreement", solver_agreement),
    ("isomorphism completeness", iso_completeness),
    ("amalgamation", amalgamation),
    ("pull-back and model extension", pullback_and_extension),
    ("y-independence", y_independence),
    ("extension choice within budget", budgeted_extension),
];

fn run_all(print: bool) -> (Vec<String>, bool) {
    let mut reports = Vec::new();
    let mut passed = true;
    let mut emit = |n: usize, name: &str, o: Outcome, took: Duration| {
        passed &= o.passed;
        if print {
            let verdict = if o.passed { "PASS" } else { "FAIL" };
            println!("criterion {n}: {verdict} {name}: {} [{:.1?}]", o.summary, took);
        }
        reports.push(serde_json::to_string(&json!({"criterion": n, "passed": o.passed, "data": o.data})).unwrap());
    };
    for (i, (name, f)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        emit(i + 1, name, o, start.elapsed());
    }
    let mut took = Duration::ZERO;
    let o = recovery(&mut took);
    emit(9, "claim and code recovery", o, took);
    (reports, passed)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (first, mut passed) = run_all(true);
    let (second, _) = run_all(false);
    let differing: Vec<usize> = (0..first.len()).filter(|&i| first[i] != second[i]).map(|i| i + 1).collect();
    let same = differing.is_empty() && first.len() == second.len();
    passed &= same;
    println!(
        "criterion 10: {} determinism: {} machine reports, {} bytes, differing criteria {:?}",
        if same { "PASS" } else { "FAIL" },
        first.len(),
        first.iter().map(String::len).sum::<usize>(),
        differing
    );
    println!("acceptance: {} in {:.1?}", if passed { "PASS" } else { "FAIL" }, start.elapsed());
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
