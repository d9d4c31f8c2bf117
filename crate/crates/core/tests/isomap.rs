use std::sync::Arc;
use std::time::Instant;

use hs_core::isomap::{build_iso, verify_iso, verify_iso_with, PIdentification};
use hs_core::model::{Element, GElem, TwistedModel};
use hs_core::solve::{random_solution, Solution};
use hs_core::sweep::SweepConfig;
use hs_core::universe::{faces_of, Universe};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn universe(n: usize, k: usize, l: usize, c: usize) -> Arc<Universe> {
    Arc::new(Universe::with_atom_count(n, k, l, c).unwrap())
}

fn exhaustive() -> SweepConfig {
    SweepConfig {
        exhaustive_limit: 1 << 26,
        ..SweepConfig::default()
    }
}

#[test]
fn independent_solutions_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = TwistedModel::random_canonical(universe(4, 2, 3, 1), &mut rng);
    let f = random_solution(&m, &mut rng).unwrap().unwrap();
    let g = random_solution(&m, &mut rng).unwrap().unwrap();
    let iso = build_iso(PIdentification::new(m.clone(), m).unwrap(), f, g).unwrap();
    let t = Instant::now();
    let r = verify_iso_with(&iso, &exhaustive()).unwrap();
    eprintln!("exhaustive verification took {:?}", t.elapsed());
    assert!(r.passed(), "{:?}", r.first_failure());
    assert!(r.exhaustive());
}

#[test]
fn shifted_solution_is_a_translation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = TwistedModel::random_canonical(universe(4, 2, 3, 1), &mut rng);
    let f = random_solution(&m, &mut rng).unwrap().unwrap();
    // Shifting at a coordinate outside every constraint keeps g a solution.
    let u = m.universe().faces()[0].clone();
    let ui = 0;
    let mut g = f.clone();
    let mut x = g.g(1, &u).unwrap().clone();
    x.offset.flip(ui);
    g.set_g(x);
    let iso = build_iso(PIdentification::new(m.clone(), m.clone()).unwrap(), f, g).unwrap();
    for face in m.universe().faces() {
        for l in 0..m.levels() {
            let y = m.g_zero(l, face);
            let mut expected = y.clone();
            if l == 1 && face == &u {
                expected.offset.flip(ui);
            }
            assert_eq!(iso.apply_g(&y), Element::G(expected));
        }
    }
    assert!(verify_iso(&iso).unwrap().passed());
}

#[test]
fn different_twists_are_isomorphic() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = universe(4, 2, 3, 2);
        let m = TwistedModel::random_canonical(u.clone(), &mut rng);
        let n = TwistedModel::random_canonical(u, &mut rng);
        let f = random_solution(&m, &mut rng).unwrap().unwrap();
        let g = random_solution(&n, &mut rng).unwrap().unwrap();
        let iso = build_iso(PIdentification::new(m, n).unwrap(), f, g).unwrap();
        let r = verify_iso(&iso).unwrap();
        assert!(r.passed(), "seed {seed}: {:?}", r.first_failure());
    }
}

#[test]
fn corrupted_element_is_caught() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = TwistedModel::random_canonical(universe(3, 2, 2, 1), &mut rng);
    let f = random_solution(&m, &mut rng).unwrap().unwrap();
    let iso = build_iso(PIdentification::new(m.clone(), m.clone()).unwrap(), f.clone(), f.clone()).unwrap();
    let u = m.universe().faces()[0].clone();
    let x = f.g(0, &u).unwrap().clone();
    let mut y = x.clone();
    let w = m.universe().faces()[1].clone();
    y.offset.flip(m.universe().face_index(&w).unwrap());
    let bad = iso.with_override(Element::G(x), Element::G(y));
    let r = verify_iso(&bad).unwrap();
    let fail = r.first_failure().expect("corruption detected");
    assert!(["bijective", "g", "Q"].contains(&fail.predicate), "{}", fail.predicate);
    assert!(r.checks.iter().any(|c| c.predicate == "Q" && !c.passed()));
    let q = r.checks.iter().find(|c| c.predicate == "Q").unwrap();
    assert!(q.witness.as_deref().unwrap().contains("Q_0"));
}

#[test]
fn invalid_solutions_are_refused() {
    let m = TwistedModel::standard(universe(3, 2, 2, 1));
    let pid = PIdentification::new(m.clone(), m.clone()).unwrap();
    assert!(build_iso(pid.clone(), Solution::new(), Solution::new()).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let f = random_solution(&m, &mut rng).unwrap().unwrap();
    let mut g = f.clone();
    let u = m.universe().faces()[0].clone();
    let mut x = g.g(0, &u).unwrap().clone();
    x.offset.flip(1);
    g.set_g(x);
    assert!(build_iso(pid, f, g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// With base points subtracted, `Q_l` reads the same parity of relative
    /// offsets in both models.
    #[test]
    fn relative_parity_matches(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = universe(4, 2, 3, 1);
        let m = TwistedModel::random_canonical(u.clone(), &mut rng);
        let n = TwistedModel::random_canonical(u.clone(), &mut rng);
        let f = random_solution(&m, &mut rng).unwrap().unwrap();
        let g = random_solution(&n, &mut rng).unwrap().unwrap();
        let iso = build_iso(PIdentification::new(m.clone(), n.clone()).unwrap(), f.clone(), g.clone()).unwrap();
        let cells = u.cells();
        let cell = &cells[rng.gen_range(0..cells.len())];
        let faces = faces_of(cell);
        let w = &faces[rng.gen_range(0..faces.len())];
        let wi = u.face_index(w).unwrap();
        let l = rng.gen_range(0..u.levels());
        let mut args = Vec::new();
        let mut rel = false;
        for face in faces.iter().filter(|v| *v != w) {
            let mut x = f.g(l, face).unwrap().clone();
            let a = rng.gen::<u64>() as u128 & ((1u128 << u.faces().len()) - 1);
            let a = hs_core::gf2::Gf2Vec::from_u128(u.face_tag(), u.faces().len(), a);
            x.offset.xor_in_place(&a).unwrap();
            rel ^= a.get(wi);
            args.push(Element::G(GElem { ..x }));
        }
        let mut h = f.h(w).unwrap().clone();
        if rng.gen() {
            h.vec.flip(0);
        }
        let b = h.vec.get(l) ^ f.h(w).unwrap().vec.get(l);
        args.push(Element::H(h));
        let images: Vec<Element> = args.iter().map(|x| iso.apply(x)).collect();
        prop_assert_eq!(m.q_pred(l, &args), rel == b);
        prop_assert_eq!(n.q_pred(l, &images), rel == b);
    }
}
