use std::collections::BTreeMap;
use std::sync::Arc;

use hs_core::gf2::Gf2Vec;
use hs_core::invar::{
    boundary_adversary, build_ma, check_claim, invariant_k, invariant_m, parse_codes, random_adversary,
    recover_codes, AnchorFamily, InvariantClass, Thresholds,
};
use hs_core::model::{check_axioms, HElem, TwistedModel};
use hs_core::universe::{Atom, Face, Universe};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_anchors(m: &TwistedModel, rng: &mut ChaCha8Rng) -> AnchorFamily {
    let u = m.universe();
    let mut f = AnchorFamily::new();
    for face in u.faces() {
        for l in 0..m.levels() {
            let mut x = m.g_zero(l, face);
            for i in 0..u.faces().len() {
                x.offset.set(i, rng.gen());
            }
            f.insert(x);
        }
    }
    f
}

#[test]
fn choice_of_y_does_not_matter() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 2 + (seed as usize % 2);
        let m = TwistedModel::random_canonical(Arc::new(Universe::with_atom_count(k + 2, k, 4, 2).unwrap()), &mut rng);
        let f = random_anchors(&m, &mut rng);
        let mut chain: Vec<Atom> = m.universe().atoms().to_vec();
        chain.shuffle(&mut rng);
        chain.truncate(k + 1);
        let h = Face::new(&chain[1..], k).unwrap();
        let coset = m.h_twist(&h).unwrap().clone();
        let values: Vec<_> = (0..coset.size())
            .map(|i| invariant_k(&m, &chain, &f, &HElem { face: h.clone(), vec: coset.element(i) }).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[0] == w[1]), "seed {seed}");
    }
}

#[test]
fn shifting_an_anchor_above_the_cutoff_changes_the_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = TwistedModel::random_canonical(Arc::new(Universe::with_atom_count(3, 2, 4, 2).unwrap()), &mut rng);
    let mut f = random_anchors(&m, &mut rng);
    let chain = [Atom(0), Atom(1), Atom(2)];
    let h = Face::new(&chain[1..], 2).unwrap();
    let hi = m.universe().face_index(&h).unwrap();
    let y = m.h_base(&h).unwrap();
    let before = invariant_k(&m, &chain, &f, &y).unwrap();
    let u = Face::new(&[Atom(0), Atom(1)], 2).unwrap();
    for (l, changes) in [(0, false), (3, true)] {
        let mut x = f.get(l, &u).unwrap().clone();
        x.offset.flip(hi);
        f.insert(x.clone());
        assert_eq!(invariant_k(&m, &chain, &f, &y).unwrap() != before, changes, "level {l}");
        x.offset.flip(hi);
        f.insert(x);
    }
}

#[test]
fn zero_depth_invariant_on_canonical_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = TwistedModel::random_canonical(Arc::new(Universe::with_atom_count(6, 3, 3, 1).unwrap()), &mut rng);
    let f = AnchorFamily::zero_on(&m, m.universe().faces());
    let th = Thresholds::new(vec![2, 3]).unwrap();
    let tail = [Atom(3), Atom(4), Atom(5)];
    let base = [Atom(0), Atom(1), Atom(2)];
    let x = invariant_m(&m, 0, &base, &[], &tail, &f, &th).unwrap();
    let twist = m.h_twist(&Face::new(&tail, 3).unwrap()).unwrap();
    let InvariantClass::Map { entries, .. } = x else { panic!("depth-0 map") };
    assert!(entries.values().all(|v| v == &InvariantClass::Coset(twist.clone())));
}

#[test]
fn size_and_containment_are_checked() {
    let m = TwistedModel::standard(Arc::new(Universe::with_atom_count(8, 3, 2, 1).unwrap()));
    let f = AnchorFamily::zero_on(&m, m.universe().faces());
    let th = Thresholds::new(vec![2, 3]).unwrap();
    let base: Vec<Atom> = (0..6).map(Atom).collect();
    let tail = [Atom(6), Atom(7)];
    assert!(invariant_m(&m, 1, &base, &[vec![Atom(0), Atom(1)]], &tail, &f, &th).is_ok());
    assert!(invariant_m(&m, 1, &base, &[vec![Atom(0)]], &tail, &f, &th).is_err());
    assert!(invariant_m(&m, 1, &base, &[vec![Atom(0), Atom(7)]], &tail, &f, &th).is_err());
    assert!(invariant_m(&m, 1, &base, &[vec![Atom(0), Atom(1)]], &tail[..1], &f, &th).is_err());
    assert!(invariant_m(&m, 2, &base, &[], &tail, &f, &th).is_err());
    assert!(invariant_m(&m, 1, &base, &[vec![Atom(0), Atom(1)]], &tail, &AnchorFamily::new(), &th).is_err());
}

/// k = 3, depth 1: base `0..n`, `I_0 = {0, 1}`, tail `{n, n+1}`.
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
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = TwistedModel::random_canonical(Arc::new(Universe::with_atom_count(n as usize + 2, 3, 4, 2).unwrap()), &mut rng);
        let tail = [Atom(n), Atom(n + 1)];
        let mut f = random_anchors(&m, &mut rng);
        for face in m.universe().faces().iter().filter(|u| u.contains(tail[0]) && u.contains(tail[1])) {
            for l in 0..m.levels() {
                f.remove(l, face);
            }
        }
        Self { m, f, base: (0..n).map(Atom).collect(), tail, th: Thresholds::new(vec![2, 5]).unwrap() }
    }

    fn invariant(&self, f: &AnchorFamily) -> InvariantClass {
        invariant_m(&self.m, 1, &self.base, &[self.base[..2].to_vec()], &self.tail, f, &self.th).unwrap()
    }

    /// `f` plus explicit `f′` values: zero except for the given flips.
    fn with_extension(&self, flips: &[(usize, Atom, Vec<Atom>)]) -> AnchorFamily {
        let mut f = self.f.clone();
        for &(l, b, ref coords) in flips {
            let u = Face::new(&[b, self.tail[0], self.tail[1]], 3).unwrap();
            let mut x = f.get(l, &u).cloned().unwrap_or_else(|| self.m.g_zero(l, &u));
            for &a in coords {
                let w = Face::new(&[a, self.tail[0], self.tail[1]], 3).unwrap();
                x.offset.flip(self.m.universe().face_index(&w).unwrap());
            }
            f.insert(x);
        }
        f
    }
}

#[test]
fn extension_choice_within_budget_is_invisible() {
    for seed in 0..10 {
        let p = Perturbation::new(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let reference = p.invariant(&p.f);
        let d = rng.gen_range(1..=2usize);
        let s = 4 / d;
        let flips: Vec<_> = (0..d)
            .map(|_| {
                let mut coords = p.base[2..].to_vec();
                coords.shuffle(&mut rng);
                coords.truncate(rng.gen_range(1..=s));
                (rng.gen_range(0..4), p.base[rng.gen_range(0..2)], coords)
            })
            .collect();
        let other = p.invariant(&p.with_extension(&flips));
        assert!(reference.equivalent(&other), "seed {seed}: {:?}", reference.differences(&other));
    }
}

#[test]
fn over_budget_extension_is_visible() {
    let p = Perturbation::new(0);
    let reference = p.invariant(&p.f);
    let other = p.invariant(&p.with_extension(&[(3, p.base[0], p.base[2..7].to_vec())]));
    assert_eq!(reference.differences(&other), Some(5));
    assert!(!reference.equivalent(&other));
}

const K2_CODES: &str = "HSCODES 4 2\nCODE [0010 0011 0001 0000 0010 0011]\nCODE [0011 0000 0000 0001 0010 0010]\n";

#[test]
fn claim_holds_for_k2() {
    let codes = parse_codes(K2_CODES).unwrap();
    let ma = build_ma(2, &Thresholds::new(vec![4]).unwrap(), 6, &codes).unwrap();
    let r = check_claim(&ma, 0).unwrap();
    assert!(r.holds(), "{:?}", r.failures);
    assert_eq!(r.checked, 2 * 6 * 6);
}

#[test]
fn claim_holds_for_k3_at_every_depth() {
    let codes = parse_codes("HSCODES 3 1\nCODE [[001 011] [010 000]]\nCODE [[011 011] [000 001]]\n").unwrap();
    let ma = build_ma(3, &Thresholds::new(vec![2, 4]).unwrap(), 2, &codes).unwrap();
    for depth in 0..=1 {
        let r = check_claim(&ma, depth).unwrap();
        assert!(r.holds(), "depth {depth}: {:?}", r.failures);
        assert!(r.checked > 0);
    }
    assert!(check_claim(&ma, 2).is_err());
}

#[test]
fn code_model_satisfies_the_axioms() {
    let codes = parse_codes("HSCODES 2 1\nCODE [01 00]\n").unwrap();
    let ma = build_ma(2, &Thresholds::new(vec![2]).unwrap(), 2, &codes).unwrap();
    let r = check_axioms(&ma.model);
    assert!(r.passed(), "{:?}", r.first_failure());
}

#[test]
fn reference_anchors_recover_exactly() {
    let codes = parse_codes(K2_CODES).unwrap();
    let ma = build_ma(2, &Thresholds::new(vec![4]).unwrap(), 6, &codes).unwrap();
    let r = recover_codes(&ma, &ma.h_ref).unwrap();
    assert!(r.exact && r.within_budget);
    assert_eq!(r.perturbed_pairs, 0);
    assert!(r.votes.iter().all(|v| v.agreeing == 6));
}

#[test]
fn one_moved_pair_is_outvoted() {
    let codes = parse_codes(K2_CODES).unwrap();
    let ma = build_ma(2, &Thresholds::new(vec![4]).unwrap(), 6, &codes).unwrap();
    for seed in 0..20 {
        let h = random_adversary(&ma, &mut ChaCha8Rng::seed_from_u64(seed), 1, 2);
        let r = recover_codes(&ma, &h).unwrap();
        assert!(r.within_budget && r.exact, "seed {seed}: {r:?}");
    }
}

#[test]
fn boundary_adversary_breaks_the_vote() {
    let codes = parse_codes(K2_CODES).unwrap();
    let ma = build_ma(2, &Thresholds::new(vec![4]).unwrap(), 6, &codes).unwrap();
    let h = boundary_adversary(&ma, 1, 2).unwrap();
    let r = recover_codes(&ma, &h).unwrap();
    assert!(!r.within_budget);
    assert!(!r.exact);
    let vote = r.votes.iter().find(|v| v.code == 1 && v.alpha == 2).unwrap();
    assert_eq!((vote.agreeing, vote.majority.as_deref()), (3, None));
    assert!(r.recovered[1].is_none() && r.recovered[0].is_some());
}

#[test]
fn adversary_must_agree_with_pair_anchors() {
    let codes = parse_codes(K2_CODES).unwrap();
    let ma = build_ma(2, &Thresholds::new(vec![4]).unwrap(), 6, &codes).unwrap();
    let mut h = ma.h_ref.clone();
    let u = Face::new(&ma.band[..2], 2).unwrap();
    let mut x = h.get(2, &u).unwrap().clone();
    x.offset.flip(0);
    h.insert(x);
    assert!(recover_codes(&ma, &h).is_err());
}

fn class(depth: usize, t: usize, bits: &[Vec<bool>]) -> InvariantClass {
    let u = Universe::with_atom_count(3, 2, 3, 1).unwrap();
    let leaf = |b: &Vec<bool>| {
        let v = Gf2Vec::from_bits(u.level_tag(), b);
        InvariantClass::Coset(hs_core::gf2::coset_of(&v, 1).unwrap())
    };
    let inner: BTreeMap<Atom, InvariantClass> = bits.iter().enumerate().map(|(i, b)| (Atom(i as u32), leaf(b))).collect();
    InvariantClass::Map { depth, threshold: (depth > 0).then_some(t), entries: inner }
}

proptest! {
    #[test]
    fn larger_thresholds_keep_equal_classes_equal(
        a in prop::collection::vec(prop::collection::vec(any::<bool>(), 3), 6),
        flips in prop::collection::vec(0usize..6, 0..6),
        t in 1usize..6,
        bump in 1usize..4,
    ) {
        let mut b = a.clone();
        for i in flips {
            b[i][2] = !b[i][2];
        }
        let x = class(1, t, &a);
        let y = class(1, t, &b);
        let th = Thresholds::new(vec![1, t + bump]).unwrap();
        if x.equivalent(&y) {
            prop_assert!(x.retagged(&th).equivalent(&y.retagged(&th)));
        }
        prop_assert_eq!(x.equivalent(&y), y.equivalent(&x));
        prop_assert!(x.equivalent(&x));
    }
}
