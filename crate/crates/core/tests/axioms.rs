use std::collections::BTreeMap;
use std::sync::Arc;

use hs_core::gf2::coset_of;
use hs_core::model::{
    canonical_model, check_axioms, check_axioms_with, extend_model, standard_model, AxiomId,
    HElem, TwistedModel,
};
use hs_core::sweep::{SweepConfig, SweepMode};
use hs_core::universe::{Atom, Cell, Face, Universe};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn universe(n: usize, k: usize, l: usize, c: usize) -> Arc<Universe> {
    Arc::new(Universe::with_atom_count(n, k, l, c).unwrap())
}

#[test]
fn standard_model_passes_small() {
    let m = standard_model(universe(3, 2, 3, 1));
    let r = check_axioms(&m);
    assert!(r.passed(), "{:?}", r.first_failure());
    assert_eq!(r.results.len(), AxiomId::ALL.len());
}

#[test]
fn random_canonical_models_pass() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = TwistedModel::random_canonical(universe(3, 2, 4, 2), &mut rng);
        let r = check_axioms(&m);
        assert!(r.passed(), "seed {seed}: {:?}", r.first_failure());
    }
}

#[test]
fn zero_twist_canonical_is_standard() {
    let u = universe(4, 2, 3, 1);
    let zero = coset_of(&u.zero_levels(), 1).unwrap();
    let g: BTreeMap<Face, _> = u.faces().iter().map(|f| (f.clone(), zero.clone())).collect();
    assert_eq!(canonical_model(u.clone(), &g).unwrap(), standard_model(u));
}

#[test]
fn slot_fault_is_a_symmetry_failure() {
    let u = universe(3, 2, 3, 1);
    let m = standard_model(u);
    let cell = Cell::parse("0,1,2", 2).unwrap();
    let h = Face::parse("1,2", 2).unwrap();
    let first = Face::parse("0,2", 2).unwrap();
    let bad = m.with_slot_fault(1, cell, h, first).unwrap();
    let r = check_axioms(&bad);
    assert!(!r.passed());
    let q1 = r.get(AxiomId::Q1).unwrap();
    assert!(!q1.passed());
    let witness = q1.witness.as_deref().unwrap();
    assert!(witness.contains("permutation"), "{witness}");
    assert!(r.get(AxiomId::T13).unwrap().passed());
}

#[test]
fn large_spaces_are_reported_sampled() {
    let m = standard_model(universe(5, 3, 3, 1));
    let cfg = SweepConfig::default();
    let r = check_axioms_with(&m, &cfg);
    assert!(r.passed(), "{:?}", r.first_failure());
    assert!(r.results.iter().any(|x| x.mode == SweepMode::Sampled));
    assert!(r.get(AxiomId::T1).unwrap().mode == SweepMode::Exhaustive);
}

#[test]
fn extended_models_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = TwistedModel::random_canonical(universe(3, 2, 3, 1), &mut rng);
    let anchor: BTreeMap<Face, HElem> = m
        .universe()
        .faces()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut h = m.h_base(f).unwrap();
            if i % 2 == 0 {
                h.vec.flip(0);
            }
            (f.clone(), h)
        })
        .collect();
    let (t, _) = extend_model(&m, &[Atom(3), Atom(4)], &anchor).unwrap();
    let r = check_axioms(&t);
    assert!(r.passed(), "{:?}", r.first_failure());
}
