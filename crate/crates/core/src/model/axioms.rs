//! Machine check of the theory's axiom list on a finite model.
//!
//! Every axiom is a universally quantified statement over a finite space.
//! A space at or below the configured limit is swept exhaustively; a larger
//! one gets uniform samples and the report says so.

use std::fmt;

use itertools::{iproduct, Itertools};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use smallvec::SmallVec;

use super::{Element, GElem, HElem, QInstance, TwistedModel};
use crate::gf2::Gf2Vec;
use crate::sweep::{pow2, product_size, random_vec, sweep_instances, SweepConfig, SweepMode, SweepOutcome, VecDomain};
use crate::universe::{faces_of, subsets, Atom, Cell, Face};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    T12,
    T13,
    T14,
    Q1Typing,
    Q1,
    Q2g,
    Q2h,
    Q3,
}

impl AxiomId {
    pub const ALL: [AxiomId; 19] = [
        AxiomId::T1,
        AxiomId::T2,
        AxiomId::T3,
        AxiomId::T4,
        AxiomId::T5,
        AxiomId::T6,
        AxiomId::T7,
        AxiomId::T8,
        AxiomId::T9,
        AxiomId::T10,
        AxiomId::T11,
        AxiomId::T12,
        AxiomId::T13,
        AxiomId::T14,
        AxiomId::Q1Typing,
        AxiomId::Q1,
        AxiomId::Q2g,
        AxiomId::Q2h,
        AxiomId::Q3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxiomId::T1 => "T1",
            AxiomId::T2 => "T2",
            AxiomId::T3 => "T3",
            AxiomId::T4 => "T4",
            AxiomId::T5 => "T5",
            AxiomId::T6 => "T6",
            AxiomId::T7 => "T7",
            AxiomId::T8 => "T8",
            AxiomId::T9 => "T9",
            AxiomId::T10 => "T10",
            AxiomId::T11 => "T11",
            AxiomId::T12 => "T12",
            AxiomId::T13 => "T13",
            AxiomId::T14 => "T14",
            AxiomId::Q1Typing => "Q1-typing",
            AxiomId::Q1 => "Q1",
            AxiomId::Q2g => "Q2g",
            AxiomId::Q2h => "Q2h",
            AxiomId::Q3 => "Q3",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            AxiomId::T1 => "I has at least k atoms, K = [I]^k, membership is set membership",
            AxiomId::T2 => "I, K, R, G^a, H^a are disjoint and with the Z_2 constants make up P",
            AxiomId::T3 => "every level constant lies in R",
            AxiomId::T4 => "G^b(l,u,x) implies R(l), K(u); H^b(u,x) implies K(u)",
            AxiomId::T5 => "every element outside P lies in exactly one G^b(l,u) or H^b(u)",
            AxiomId::T6 => "pi(u,a,z) implies K(u), G^a(a), z a constant",
            AxiomId::T7 => "rho(l,b,z) implies R(l), H^a(b), z a constant",
            AxiomId::T8 => "g(l,u,a,v,w) implies its sort constraints",
            AxiomId::T9 => "h(u,b,x,y) implies its sort constraints",
            AxiomId::T10 => "the Z_2 constants with + form Z_2",
            AxiomId::T11 => "+ on G^a is coordinatewise via pi and G^a contains every unit vector",
            AxiomId::T12 => "+ on H^a is coordinatewise via rho and H^a contains E_c",
            AxiomId::T13 => "g is a free transitive action of G^a on each G^b(l,u)",
            AxiomId::T14 => "h is a free transitive action of H^a on each H^b(u)",
            AxiomId::Q1Typing => "Q_l only holds on G^b arguments and an H^b argument over the faces of one cell",
            AxiomId::Q1 => "Q_l is invariant under permuting its first k arguments",
            AxiomId::Q2g => "replacing a g-argument flips Q_l by the h-face bit of the difference",
            AxiomId::Q2h => "replacing the h-argument flips Q_l by the level bit of the difference",
            AxiomId::Q3 => "one g-element on u satisfies any family of Q_l instances over distinct apexes",
        }
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for AxiomId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomResult {
    pub id: AxiomId,
    pub mode: SweepMode,
    /// Size of the quantified space.
    #[serde(serialize_with = "crate::sweep::serialize_points")]
    pub points: u128,
    pub witness: Option<String>,
}

impl AxiomResult {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(AxiomResult::passed)
    }

    pub fn first_failure(&self) -> Option<&AxiomResult> {
        self.results.iter().find(|r| !r.passed())
    }

    pub fn get(&self, id: AxiomId) -> Option<&AxiomResult> {
        self.results.iter().find(|r| r.id == id)
    }

    /// True when no axiom other than those listed was sampled.
    pub fn exhaustive_except(&self, allowed: &[AxiomId]) -> bool {
        self.results
            .iter()
            .all(|r| r.mode == SweepMode::Exhaustive || allowed.contains(&r.id))
    }
}

/// Axioms whose quantifiers range over tuples of arbitrary elements.
pub const TYPING_AXIOMS: [AxiomId; 6] = [
    AxiomId::T4,
    AxiomId::T6,
    AxiomId::T7,
    AxiomId::T8,
    AxiomId::T9,
    AxiomId::Q1Typing,
];

pub fn check_axioms(m: &TwistedModel) -> AxiomReport {
    check_axioms_with(m, &SweepConfig::default())
}

pub fn check_axioms_with(m: &TwistedModel, cfg: &SweepConfig) -> AxiomReport {
    let results = AxiomId::ALL
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let out = run_axiom(m, cfg, &mut rng, id);
            AxiomResult {
                id,
                mode: out.mode,
                points: out.points,
                witness: out.failure,
            }
        })
        .collect();
    AxiomReport { results }
}

fn run_axiom(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng, id: AxiomId) -> SweepOutcome {
    let el = Elements::new(m);
    match id {
        AxiomId::T1 => t1(m, cfg),
        AxiomId::T2 => over_elements(cfg, rng, &el, |x| t2(m, x)),
        AxiomId::T3 => small(cfg, m.levels() as u128, || {
            (0..m.levels())
                .find(|&l| !m.is_r(&Element::Level(l)))
                .map(|l| format!("level {l} is not in R"))
        }),
        AxiomId::T4 => typed_tuples(cfg, rng, &el, 3, t4_typed, |t| t4(m, t)),
        AxiomId::T5 => over_elements(cfg, rng, &el, |x| t5(m, x)),
        AxiomId::T6 => typed_tuples(cfg, rng, &el, 3, t6_typed, |t| t6(m, t)),
        AxiomId::T7 => typed_tuples(cfg, rng, &el, 3, t7_typed, |t| t7(m, t)),
        AxiomId::T8 => typed_tuples(cfg, rng, &el, 5, t8_typed, |t| t8(m, t)),
        AxiomId::T9 => typed_tuples(cfg, rng, &el, 4, t9_typed, |t| t9(m, t)),
        AxiomId::T10 => t10(m, cfg),
        AxiomId::T11 => t11(m, cfg, rng),
        AxiomId::T12 => t12(m, cfg, rng),
        AxiomId::T13 => t13(m, cfg, rng),
        AxiomId::T14 => t14(m, cfg, rng),
        AxiomId::Q1Typing => typed_tuples(cfg, rng, &el, m.k() + 2, q1_typed, |t| q1_typing(m, t)),
        AxiomId::Q1 => q1(m, cfg, rng),
        AxiomId::Q2g => q2g(m, cfg, rng),
        AxiomId::Q2h => q2h(m, cfg, rng),
        AxiomId::Q3 => q3(m, cfg, rng),
    }
}

/// A check over a space small enough to always enumerate.
fn small(cfg: &SweepConfig, points: u128, check: impl FnOnce() -> Option<String>) -> SweepOutcome {
    let mode = cfg.mode_for(points);
    SweepOutcome {
        mode,
        points,
        failure: check(),
    }
}

// --- the element space -------------------------------------------------------

const SORTS: usize = 8;

/// Indexable enumeration of every element of a model, sort by sort.
struct Elements<'a> {
    m: &'a TwistedModel,
    sizes: [u128; SORTS],
}

impl<'a> Elements<'a> {
    fn new(m: &'a TwistedModel) -> Self {
        let u = m.universe();
        let n = u.atoms().len() as u128;
        let f = u.faces().len() as u128;
        let l = u.levels() as u128;
        let ga = pow2(u.faces().len());
        let ha = pow2(u.cutoff());
        Self {
            m,
            sizes: [
                n,
                f,
                l,
                2,
                ga,
                ha,
                l.saturating_mul(f).saturating_mul(ga),
                f.saturating_mul(ha),
            ],
        }
    }

    fn total(&self) -> u128 {
        self.sizes.iter().fold(0u128, |a, &s| a.saturating_add(s))
    }

    fn nth(&self, mut i: u128) -> Element {
        for (sort, &size) in self.sizes.iter().enumerate() {
            if i < size {
                return self.build(sort, i);
            }
            i -= size;
        }
        panic!("element index out of range");
    }

    fn build(&self, sort: usize, i: u128) -> Element {
        let u = self.m.universe();
        let nf = u.faces().len();
        match sort {
            0 => Element::Atom(u.atoms()[i as usize]),
            1 => Element::Face(u.faces()[i as usize].clone()),
            2 => Element::Level(i as usize),
            3 => Element::Bit(i == 1),
            4 => Element::Ga(Gf2Vec::from_u128(u.face_tag(), nf, i)),
            5 => Element::Ha(Gf2Vec::from_u128(u.level_tag(), u.levels(), i)),
            6 => {
                let per = pow2(nf);
                let level = (i / per / nf as u128) as usize;
                let face = ((i / per) % nf as u128) as usize;
                Element::G(GElem {
                    level,
                    face: u.faces()[face].clone(),
                    offset: Gf2Vec::from_u128(u.face_tag(), nf, i % per),
                })
            }
            7 => {
                let per = pow2(u.cutoff());
                let face = (i / per) as usize;
                Element::H(HElem {
                    face: u.faces()[face].clone(),
                    vec: self.m.h_twist_at(face).element(i % per),
                })
            }
            _ => unreachable!(),
        }
    }

    /// A random element of a uniformly chosen sort.
    fn random(&self, rng: &mut ChaCha8Rng) -> Element {
        self.random_of(rng.gen_range(0..SORTS), rng)
    }

    fn random_of(&self, sort: usize, rng: &mut ChaCha8Rng) -> Element {
        let u = self.m.universe();
        let nf = u.faces().len();
        match sort {
            4 => Element::Ga(random_vec(u.face_tag(), nf, nf, rng)),
            5 => Element::Ha(random_vec(u.level_tag(), u.levels(), u.cutoff(), rng)),
            6 => Element::G(self.random_g(rng)),
            7 => Element::H(self.random_h_on(rng.gen_range(0..nf), rng)),
            _ => self.build(sort, rng.gen_range(0..self.sizes[sort])),
        }
    }

    fn random_g(&self, rng: &mut ChaCha8Rng) -> GElem {
        let u = self.m.universe();
        let nf = u.faces().len();
        GElem {
            level: rng.gen_range(0..u.levels()),
            face: u.faces()[rng.gen_range(0..nf)].clone(),
            offset: random_vec(u.face_tag(), nf, nf, rng),
        }
    }

    fn random_h_on(&self, face: usize, rng: &mut ChaCha8Rng) -> HElem {
        let coset = self.m.h_twist_at(face);
        HElem {
            face: self.m.universe().faces()[face].clone(),
            vec: VecDomain::Coset(coset.clone()).sample(rng),
        }
    }
}

fn over_elements(
    cfg: &SweepConfig,
    rng: &mut ChaCha8Rng,
    el: &Elements<'_>,
    check: impl Fn(&Element) -> Option<String>,
) -> SweepOutcome {
    let points = el.total();
    let mode = cfg.mode_for(points);
    let failure = match mode {
        SweepMode::Exhaustive => (0..points).find_map(|i| check(&el.nth(i))),
        SweepMode::Sampled => (0..cfg.samples).find_map(|_| check(&el.random(rng))),
    };
    SweepOutcome {
        mode,
        points,
        failure,
    }
}

/// Quantification over `arity`-tuples of arbitrary elements. Sampled draws
/// alternate between fully random tuples and tuples from `typed`, which
/// makes the antecedent of the implication likely to hold.
fn typed_tuples(
    cfg: &SweepConfig,
    rng: &mut ChaCha8Rng,
    el: &Elements<'_>,
    arity: usize,
    typed: impl Fn(&Elements<'_>, &mut ChaCha8Rng) -> Vec<Element>,
    check: impl Fn(&[Element]) -> Option<String>,
) -> SweepOutcome {
    let total = el.total();
    let points = (0..arity).fold(1u128, |a, _| a.saturating_mul(total));
    let mode = cfg.mode_for(points);
    let failure = match mode {
        SweepMode::Exhaustive => {
            let mut idx = vec![0u128; arity];
            let mut out = None;
            'outer: loop {
                let tuple: Vec<Element> = idx.iter().map(|&i| el.nth(i)).collect();
                if let Some(w) = check(&tuple) {
                    out = Some(w);
                    break;
                }
                let mut j = arity;
                loop {
                    if j == 0 {
                        break 'outer;
                    }
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < total {
                        break;
                    }
                    idx[j] = 0;
                }
            }
            out
        }
        SweepMode::Sampled => (0..cfg.samples).find_map(|s| {
            let tuple = if s % 2 == 0 {
                typed(el, rng)
            } else {
                (0..arity).map(|_| el.random(rng)).collect()
            };
            check(&tuple)
        }),
    };
    SweepOutcome {
        mode,
        points,
        failure,
    }
}

fn show(t: &[Element]) -> String {
    t.iter().map(|e| format!("<{e}>")).join(", ")
}

fn is_const(x: &Element) -> bool {
    matches!(x, Element::Bit(_))
}

// --- T1 to T14 ----------------------------------------------------------------

fn t1(m: &TwistedModel, cfg: &SweepConfig) -> SweepOutcome {
    let u = m.universe();
    let points = (u.atoms().len() as u128) * (u.faces().len() as u128);
    small(cfg, points, || {
        if u.atoms().len() < u.k() {
            return Some(format!("|I| = {} < k = {}", u.atoms().len(), u.k()));
        }
        let expected: Vec<Face> = subsets(u.atoms(), u.k())
            .into_iter()
            .map(|s| Face::new(&s, u.k()).expect("k-subset"))
            .collect();
        if expected != u.faces() {
            return Some("K is not the family of k-subsets of I".into());
        }
        for a in u.atoms() {
            for f in u.faces() {
                let x = Element::Atom(*a);
                let y = Element::Face(f.clone());
                if m.member(&x, &y) != f.contains(*a) {
                    return Some(format!("membership wrong at ({x}, {y})"));
                }
            }
        }
        None
    })
}

fn sort_flags(m: &TwistedModel, x: &Element) -> [bool; 6] {
    [
        m.is_i(x),
        m.is_k(x),
        m.is_r(x),
        m.is_ga(x),
        m.is_ha(x),
        m.is_z2_const(x),
    ]
}

fn t2(m: &TwistedModel, x: &Element) -> Option<String> {
    let flags = sort_flags(m, x);
    let count = flags.iter().filter(|&&b| b).count();
    if count > 1 {
        return Some(format!("{x} lies in {count} of the P-sorts"));
    }
    if m.is_p(x) != (count == 1) {
        return Some(format!("P({x}) disagrees with the sort predicates"));
    }
    None
}

fn t4_typed(el: &Elements<'_>, rng: &mut ChaCha8Rng) -> Vec<Element> {
    if rng.gen::<bool>() {
        let g = el.random_g(rng);
        vec![Element::Level(g.level), Element::Face(g.face.clone()), Element::G(g)]
    } else {
        let h = el.random_h_on(rng.gen_range(0..el.m.universe().faces().len()), rng);
        vec![el.random(rng), Element::Face(h.face.clone()), Element::H(h)]
    }
}

fn t4(m: &TwistedModel, t: &[Element]) -> Option<String> {
    if let (Element::Level(l), Element::Face(u)) = (&t[0], &t[1]) {
        if m.in_g_b(*l, u, &t[2]) && !(m.is_r(&t[0]) && m.is_k(&t[1])) {
            return Some(format!("G^b holds at {} without R(l), K(u)", show(t)));
        }
    }
    if let Element::Face(u) = &t[1] {
        if m.in_h_b(u, &t[2]) && !m.is_k(&t[1]) {
            return Some(format!("H^b holds at {} without K(u)", show(&t[1..])));
        }
    }
    None
}

fn t5(m: &TwistedModel, x: &Element) -> Option<String> {
    let u = m.universe();
    let mut hits = usize::from(m.is_p(x));
    for face in u.faces() {
        hits += usize::from(m.in_h_b(face, x));
        for l in 0..u.levels() {
            hits += usize::from(m.in_g_b(l, face, x));
        }
    }
    if !m.is_p(x) && hits == 0 {
        return Some(format!("{x} is outside P and every G^b, H^b"));
    }
    if hits > 1 {
        return Some(format!("{x} lies in {hits} of P, G^b(l,u), H^b(u)"));
    }
    None
}

fn t6_typed(el: &Elements<'_>, rng: &mut ChaCha8Rng) -> Vec<Element> {
    vec![el.random_of(1, rng), el.random_of(4, rng), el.random_of(3, rng)]
}

fn t6(m: &TwistedModel, t: &[Element]) -> Option<String> {
    (m.pi(&t[0], &t[1], &t[2]) && !(m.is_k(&t[0]) && m.is_ga(&t[1]) && is_const(&t[2])))
        .then(|| format!("pi holds at ill-sorted {}", show(t)))
}

fn t7_typed(el: &Elements<'_>, rng: &mut ChaCha8Rng) -> Vec<Element> {
    vec![el.random_of(2, rng), el.random_of(5, rng), el.random_of(3, rng)]
}

fn t7(m: &TwistedModel, t: &[Element]) -> Option<String> {
    (m.rho(&t[0], &t[1], &t[2]) && !(m.is_r(&t[0]) && m.is_ha(&t[1]) && is_const(&t[2])))
        .then(|| format!("rho holds at ill-sorted {}", show(t)))
}

fn t8_typed(el: &Elements<'_>, rng: &mut ChaCha8Rng) -> Vec<Element> {
    let x = el.random_g(rng);
    let Element::Ga(a) = el.random_of(4, rng) else { unreachable!() };
    let y = el.m.g_act(&a, &x).expect("same family");
    vec![
        Element::Level(x.level),
        Element::Face(x.face.clone()),
        Element::Ga(a),
        Element::G(x),
        Element::G(y),
    ]
}

fn t8(m: &TwistedModel, t: &[Element]) -> Option<String> {
    if !m.g_pred(&t[0], &t[1], &t[2], &t[3], &t[4]) {
        return None;
    }
    let (Element::Level(l), Element::Face(u)) = (&t[0], &t[1]) else {
        return Some(format!("g holds at ill-sorted {}", show(t)));
    };
    let ok = m.is_r(&t[0])
        && m.is_k(&t[1])
        && m.is_ga(&t[2])
        && m.in_g_b(*l, u, &t[3])
        && m.in_g_b(*l, u, &t[4]);
    (!ok).then(|| format!("g holds at ill-sorted {}", show(t)))
}

fn t9_typed(el: &Elements<'_>, rng: &mut ChaCha8Rng) -> Vec<Element> {
    let x = el.random_h_on(rng.gen_range(0..el.m.universe().faces().len()), rng);
    let Element::Ha(a) = el.random_of(5, rng) else { unreachable!() };
    let y = HElem {
        face: x.face.clone(),
        vec: x.vec.try_add(&a).expect("same family"),
    };
    vec![Element::Face(x.face.clone()), Element::Ha(a), Element::H(x), Element::H(y)]
}

fn t9(m: &TwistedModel, t: &[Element]) -> Option<String> {
    if !m.h_pred(&t[0], &t[1], &t[2], &t[3]) {
        return None;
    }
    let Element::Face(u) = &t[0] else {
        return Some(format!("h holds at ill-sorted {}", show(t)));
    };
    let ok = m.is_k(&t[0]) && m.is_ha(&t[1]) && m.in_h_b(u, &t[2]) && m.in_h_b(u, &t[3]);
    (!ok).then(|| format!("h holds at ill-sorted {}", show(t)))
}

fn t10(m: &TwistedModel, cfg: &SweepConfig) -> SweepOutcome {
    small(cfg, 8, || {
        for (a, b, c) in iproduct!([false, true], [false, true], [false, true]) {
            let holds = m.plus(&Element::Bit(a), &Element::Bit(b), &Element::Bit(c));
            if holds != ((a ^ b) == c) {
                return Some(format!("+({}, {}, {}) is {holds}", u8::from(a), u8::from(b), u8::from(c)));
            }
        }
        None
    })
}

/// Combines two sweeps of one axiom into a single outcome.
fn merge(a: SweepOutcome, b: SweepOutcome) -> SweepOutcome {
    let mode = if a.mode == SweepMode::Sampled || b.mode == SweepMode::Sampled {
        SweepMode::Sampled
    } else {
        SweepMode::Exhaustive
    };
    SweepOutcome {
        mode,
        points: a.points.saturating_add(b.points),
        failure: a.failure.or(b.failure),
    }
}

/// A vector sort with coordinates read by a projection predicate: the
/// projection is a function to the constants returning the coordinate, and
/// `+` holds exactly on coordinatewise sums.
#[allow(clippy::too_many_arguments)]
fn group_axiom(
    cfg: &SweepConfig,
    rng: &mut ChaCha8Rng,
    domain: VecDomain,
    coords: usize,
    wrap: impl Fn(Gf2Vec) -> Element,
    coord: impl Fn(usize) -> Element,
    proj: impl Fn(&Element, &Element, &Element) -> bool,
    plus: impl Fn(&Element, &Element, &Element) -> bool,
) -> SweepOutcome {
    let zero = Element::Bit(false);
    let one = Element::Bit(true);
    let coord_elems: Vec<(usize, Element)> = (0..coords).map(|i| (i, coord(i))).collect();
    let projections = sweep_instances(cfg, rng, &coord_elems, |_| vec![domain.clone()], |(i, c), v| {
        let x = wrap(v[0].clone());
        match (proj(c, &x, &zero), proj(c, &x, &one)) {
            (z, o) if z != o && o == v[0].get(*i) => Ok(()),
            (z, o) => Err(format!("projection of {x} at {c}: to 0 is {z}, to 1 is {o}")),
        }
    });
    let sums = sweep_instances(
        cfg,
        rng,
        &[()],
        |_| vec![domain.clone(), domain.clone(), domain.clone()],
        |_, v| {
            let coordinatewise = (0..coords).all(|i| v[2].get(i) == (v[0].get(i) ^ v[1].get(i)));
            let [x, y, z] = [wrap(v[0].clone()), wrap(v[1].clone()), wrap(v[2].clone())];
            if plus(&x, &y, &z) != coordinatewise {
                return Err(format!("+({x}, {y}, {z}) disagrees with coordinatewise addition"));
            }
            Ok(())
        },
    );
    merge(projections, sums)
}

fn t11(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let u = m.universe();
    let nf = u.faces().len();
    for i in 0..nf {
        let mut e = u.zero_offset();
        e.set(i, true);
        if !m.is_ga(&Element::Ga(e.clone())) {
            return SweepOutcome {
                mode: cfg.mode_for(1),
                points: 1,
                failure: Some(format!("unit vector {e} is not in G^a")),
            };
        }
    }
    group_axiom(
        cfg,
        rng,
        VecDomain::All {
            family: u.face_tag(),
            len: nf,
        },
        nf,
        Element::Ga,
        |i| Element::Face(u.faces()[i].clone()),
        |c, e, b| m.pi(c, e, b),
        |x, y, z| m.plus(x, y, z),
    )
}

fn t12(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let u = m.universe();
    for i in 0..u.cutoff() {
        let mut e = u.zero_levels();
        e.set(i, true);
        if !m.is_ha(&Element::Ha(e.clone())) {
            return SweepOutcome {
                mode: cfg.mode_for(1),
                points: 1,
                failure: Some(format!("unit vector {e} is not in H^a")),
            };
        }
    }
    group_axiom(
        cfg,
        rng,
        VecDomain::Low {
            family: u.level_tag(),
            len: u.levels(),
            cutoff: u.cutoff(),
        },
        u.levels(),
        Element::Ha,
        Element::Level,
        |c, e, b| m.rho(c, e, b),
        |x, y, z| m.plus(x, y, z),
    )
}

/// Action axioms over `(torsor, x, a, b)` with `y = x + a + b`: the action
/// relation holds at `(a, x, y)` iff `b = 0` (as `b` ranges, `y` covers the
/// torsor, so `a·x` is the unique image and every `y` is reached), it is
/// symmetric, and it composes additively.
fn action_check<E: fmt::Debug>(
    x: &E,
    y: &E,
    ax: &E,
    a: &Gf2Vec,
    b: &Gf2Vec,
    ab: &Gf2Vec,
    rel: impl Fn(&Gf2Vec, &E, &E) -> bool,
) -> Result<(), String> {
    if rel(a, x, y) != b.is_zero() {
        return Err(format!("action by {a} from {x:?} to {y:?} is {}", !b.is_zero()));
    }
    if b.is_zero() && !rel(a, y, x) {
        return Err(format!("action by {a} between {x:?} and {y:?} is not symmetric"));
    }
    if !rel(b, ax, y) || !rel(ab, x, y) {
        return Err(format!("action by {a} then {b} from {x:?} does not compose"));
    }
    Ok(())
}

fn t13(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let u = m.universe();
    let nf = u.faces().len();
    let all = VecDomain::All {
        family: u.face_tag(),
        len: nf,
    };
    let torsors: Vec<(usize, Face)> = (0..u.levels())
        .flat_map(|l| u.faces().iter().map(move |f| (l, f.clone())))
        .collect();
    for (l, face) in &torsors {
        if !m.in_g_b(*l, face, &Element::G(m.g_zero(*l, face))) {
            return SweepOutcome {
                mode: cfg.mode_for(1),
                points: 1,
                failure: Some(format!("G^b({l}, {{{face}}}) is empty")),
            };
        }
    }
    let points = (torsors.len() as u128).saturating_mul(product_size(&[all.clone(), all.clone(), all.clone()]));
    let mode = cfg.mode_for(points);
    let failure = match mode {
        // Tables of the whole torsor; index XOR is vector addition.
        SweepMode::Exhaustive => {
            let n = 1usize << nf;
            let vecs: Vec<Gf2Vec> = (0..n).map(|i| all.nth(i as u128)).collect();
            torsors.iter().find_map(|(l, face)| {
                let elems: Vec<GElem> = vecs
                    .iter()
                    .map(|v| GElem {
                        level: *l,
                        face: face.clone(),
                        offset: v.clone(),
                    })
                    .collect();
                iproduct!(0..n, 0..n, 0..n).find_map(|(x, a, b)| {
                    action_check(
                        &elems[x],
                        &elems[x ^ a ^ b],
                        &elems[x ^ a],
                        &vecs[a],
                        &vecs[b],
                        &vecs[a ^ b],
                        |a, x, y| m.g_rel(a, x, y),
                    )
                    .err()
                })
            })
        }
        SweepMode::Sampled => {
            sweep_instances(
                cfg,
                rng,
                &torsors,
                |_| vec![all.clone(), all.clone(), all.clone()],
                |(l, face), v| {
                    let (a, b) = (&v[1], &v[2]);
                    let mk = |offset: Gf2Vec| GElem {
                        level: *l,
                        face: face.clone(),
                        offset,
                    };
                    let ab = a.try_add(b).map_err(|e| e.to_string())?;
                    let x = mk(v[0].clone());
                    let ax = mk(x.offset.try_add(a).map_err(|e| e.to_string())?);
                    let y = mk(ax.offset.try_add(b).map_err(|e| e.to_string())?);
                    action_check(&x, &y, &ax, a, b, &ab, |a, x, y| m.g_rel(a, x, y))
                },
            )
            .failure
        }
    };
    SweepOutcome {
        mode,
        points,
        failure,
    }
}

fn t14(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let u = m.universe();
    let low = VecDomain::Low {
        family: u.level_tag(),
        len: u.levels(),
        cutoff: u.cutoff(),
    };
    let faces: Vec<usize> = (0..u.faces().len()).collect();
    sweep_instances(
        cfg,
        rng,
        &faces,
        |&i| vec![VecDomain::Coset(m.h_twist_at(i).clone()), low.clone(), low.clone()],
        |&i, v| {
            let face = &u.faces()[i];
            let (a, b) = (&v[1], &v[2]);
            let mk = |vec: Gf2Vec| HElem {
                face: face.clone(),
                vec,
            };
            let ab = a.try_add(b).map_err(|e| e.to_string())?;
            let x = mk(v[0].clone());
            let ax = mk(x.vec.try_add(a).map_err(|e| e.to_string())?);
            let y = mk(ax.vec.try_add(b).map_err(|e| e.to_string())?);
            for e in [&x, &ax, &y] {
                if !m.in_h_b(face, &Element::H(e.clone())) {
                    return Err(format!("H^b({{{face}}}) is not closed under H^a at {}", e.vec));
                }
            }
            action_check(&x, &y, &ax, a, b, &ab, |a, x, y| m.h_rel(a, x, y))
        },
    )
}

// --- Q1 to Q3 -------------------------------------------------------------------

fn q1_typed(el: &Elements<'_>, rng: &mut ChaCha8Rng) -> Vec<Element> {
    let m = el.m;
    let u = m.universe();
    let cells = u.cells();
    let cell = &cells[rng.gen_range(0..cells.len())];
    let mut faces = faces_of(cell);
    let h_face = faces.remove(rng.gen_range(0..faces.len()));
    let level = rng.gen_range(0..u.levels());
    let nf = u.faces().len();
    let mut t: Vec<Element> = vec![Element::Level(level)];
    for i in (0..faces.len()).rev() {
        let j = rng.gen_range(0..=i);
        faces.swap(i, j);
    }
    for f in faces {
        t.push(Element::G(GElem {
            level,
            face: f,
            offset: random_vec(u.face_tag(), nf, nf, rng),
        }));
    }
    let hi = u.face_index(&h_face).expect("face");
    t.push(Element::H(el.random_h_on(hi, rng)));
    t
}

fn q1_typing(m: &TwistedModel, t: &[Element]) -> Option<String> {
    let Element::Level(l) = t[0] else {
        return None;
    };
    let args = &t[1..];
    if !m.q_pred(l, args) {
        return None;
    }
    let k = m.k();
    let mut faces = Vec::new();
    for a in &args[..k] {
        match a {
            Element::G(g) if m.in_g_b(l, &g.face, a) => faces.push(g.face.clone()),
            _ => return Some(format!("Q_{l} holds with non-G^b argument {a}")),
        }
    }
    match &args[k] {
        Element::H(h) if m.in_h_b(&h.face, &args[k]) => faces.push(h.face.clone()),
        a => return Some(format!("Q_{l} holds with non-H^b last argument {a}")),
    }
    let atoms: Vec<Atom> = faces
        .iter()
        .flat_map(|f| f.atoms().iter().copied())
        .sorted()
        .dedup()
        .collect();
    let ok = atoms.len() == k + 1
        && Cell::new(&atoms, k).is_ok_and(|c| faces.iter().sorted().cloned().collect::<Vec<_>>() == faces_of(&c));
    (!ok).then(|| format!("Q_{l} holds at {} whose faces are not those of one cell", show(args)))
}

/// Every `(level, cell, h-face)` triple of the model.
fn q_instances(m: &TwistedModel) -> Vec<QInstance> {
    let u = m.universe();
    let mut out = Vec::new();
    for l in 0..u.levels() {
        for cell in u.cells() {
            for h in faces_of(&cell) {
                out.push(m.q_instance(l, &cell, &h).expect("valid triple"));
            }
        }
    }
    out
}

fn q_domains(m: &TwistedModel, inst: &QInstance) -> Vec<VecDomain> {
    let u = m.universe();
    let all = VecDomain::All {
        family: u.face_tag(),
        len: u.faces().len(),
    };
    let hi = inst.h_index();
    let mut doms = vec![all; inst.g_faces.len()];
    doms.push(VecDomain::Coset(m.h_twist_at(hi).clone()));
    doms
}

fn fmt_q(inst: &QInstance, offsets: &[Gf2Vec], z: &Gf2Vec) -> String {
    let args = inst
        .g_faces
        .iter()
        .zip(offsets)
        .map(|(f, o)| format!("{{{f}}}:{o}"))
        .join(", ");
    format!(
        "Q_{}[cell {{{}}}, h-face {{{}}}]({args}; {z})",
        inst.level, inst.cell, inst.h_face
    )
}

/// Permutation invariance, evaluated through the general element-level
/// predicate so argument order genuinely varies.
fn q1(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let k = m.k();
    let swaps = heap_swaps(k);
    let insts = q_instances(m);
    let mut args: Vec<Element> = Vec::with_capacity(k + 1);
    sweep_instances(
        cfg,
        rng,
        &insts,
        |inst| q_domains(m, inst),
        |inst, v| {
            args.clear();
            args.extend(inst.g_faces.iter().zip(v).map(|(f, o)| {
                Element::G(GElem {
                    level: inst.level,
                    face: f.clone(),
                    offset: o.clone(),
                })
            }));
            args.push(Element::H(HElem {
                face: inst.h_face.clone(),
                vec: v[k].clone(),
            }));
            let base = m.q_pred(inst.level, &args);
            // Walk every ordering of the g-arguments by transpositions.
            for &(i, j) in &swaps {
                args.swap(i, j);
                if m.q_pred(inst.level, &args) != base {
                    let original: Vec<Element> = inst
                        .g_faces
                        .iter()
                        .zip(v)
                        .map(|(f, o)| Element::G(GElem { level: inst.level, face: f.clone(), offset: o.clone() }))
                        .collect();
                    return Err(format!(
                        "{} is {base} with h-argument {} but its permutation {} is not",
                        show(&original),
                        args[k],
                        show(&args)
                    ));
                }
            }
            Ok(())
        },
    )
}

/// Transpositions visiting all `n!` orderings (Heap's algorithm).
fn heap_swaps(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            out.push(if i % 2 == 0 { (0, i) } else { (c[i], i) });
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Replacing the g-argument on face `r`. For each tuple where the instance
/// holds, every replacement in the torsor is tried (or one random replacement
/// when sampling).
fn q2g(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let k = m.k();
    let u = m.universe();
    let nf = u.faces().len();
    let replacements = VecDomain::All {
        family: u.face_tag(),
        len: nf,
    };
    let insts: Vec<(QInstance, usize)> = q_instances(m)
        .into_iter()
        .flat_map(|i| (0..k).map(move |r| (i.clone(), r)))
        .collect();
    let points = insts.iter().fold(0u128, |acc, (inst, _)| {
        acc.saturating_add(product_size(&q_domains(m, inst)).saturating_mul(replacements.size()))
    });
    let mode = cfg.mode_for(points);
    let outer = SweepConfig {
        exhaustive_limit: if mode == SweepMode::Exhaustive { u128::MAX } else { 0 },
        ..*cfg
    };
    let mut inner_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x51_7C));
    let table: Vec<Gf2Vec> = match mode {
        SweepMode::Exhaustive => (0..replacements.size()).map(|i| replacements.nth(i)).collect(),
        SweepMode::Sampled => Vec::new(),
    };
    let out = sweep_instances(&outer, rng, &insts, |(inst, _)| q_domains(m, inst), |(inst, r), v| {
        let offs = &v[..k];
        let z = &v[k];
        if !inst.eval_owned(offs, z) {
            return Ok(());
        }
        let h = inst.h_index();
        let before = offs[*r].get(h);
        let drawn;
        let candidates: &[Gf2Vec] = match mode {
            SweepMode::Exhaustive => &table,
            SweepMode::Sampled => {
                drawn = [replacements.sample(&mut inner_rng)];
                &drawn
            }
        };
        let mut args: SmallVec<[&Gf2Vec; 4]> = offs.iter().collect();
        for replaced in candidates {
            args[*r] = replaced;
            if inst.eval(&args, z) != (before == replaced.get(h)) {
                return Err(format!(
                    "{} holds; replacing the argument on {{{}}} by {replaced} is inconsistent with the difference",
                    fmt_q(inst, offs, z),
                    inst.g_faces[*r]
                ));
            }
        }
        Ok(())
    });
    SweepOutcome {
        mode,
        points,
        failure: out.failure,
    }
}

fn q2h(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let k = m.k();
    let insts = q_instances(m);
    sweep_instances(
        cfg,
        rng,
        &insts,
        |inst| {
            let mut d = q_domains(m, inst);
            d.push(d[k].clone());
            d
        },
        |inst, v| {
            let offs = &v[..k];
            if !inst.eval_owned(offs, &v[k]) {
                return Ok(());
            }
            let diff = v[k].try_add(&v[k + 1]).map_err(|e| e.to_string())?;
            if inst.eval_owned(offs, &v[k + 1]) != !diff.get(inst.level) {
                return Err(format!(
                    "{} holds; replacing the h-argument by {} is inconsistent with the difference {diff}",
                    fmt_q(inst, offs, &v[k]),
                    v[k + 1]
                ));
            }
            Ok(())
        },
    )
}

/// One Q3 instance: level, the face `u`, and for each outside atom the
/// chosen h-face among the faces of `u ∪ {i_j}` other than `u`.
struct Q3Instance {
    u: Face,
    u_index: usize,
    /// Per apex: the Q instance and, per g-face slot, either the witness
    /// (None) or the index of the quantified argument in the value vector.
    parts: Vec<(QInstance, Vec<Option<usize>>, usize)>,
    doms: Vec<VecDomain>,
}

fn q3_instances(m: &TwistedModel) -> Vec<Q3Instance> {
    let u = m.universe();
    let all = VecDomain::All {
        family: u.face_tag(),
        len: u.faces().len(),
    };
    let mut out = Vec::new();
    for l in 0..u.levels() {
        for (ui, face) in u.faces().iter().enumerate() {
            let outside: Vec<Atom> = u.atoms().iter().copied().filter(|a| !face.contains(*a)).collect();
            let cells: Vec<Cell> = outside.iter().map(|&a| Cell::from_face(face, a).expect("outside atom")).collect();
            let choices: Vec<Vec<Face>> = cells
                .iter()
                .map(|c| faces_of(c).into_iter().filter(|f| f != face).collect())
                .collect();
            for pick in choices.iter().map(|c| c.iter()).multi_cartesian_product() {
                let mut doms = Vec::new();
                let mut parts = Vec::new();
                for (cell, h) in cells.iter().zip(pick) {
                    let inst = m.q_instance(l, cell, h).expect("valid triple");
                    let slots = inst
                        .g_faces
                        .iter()
                        .map(|g| {
                            (g != face).then(|| {
                                doms.push(all.clone());
                                doms.len() - 1
                            })
                        })
                        .collect();
                    doms.push(VecDomain::Coset(m.h_twist_at(inst.h_index()).clone()));
                    parts.push((inst, slots, doms.len() - 1));
                }
                out.push(Q3Instance {
                    u: face.clone(),
                    u_index: ui,
                    parts,
                    doms,
                });
            }
        }
    }
    out
}

/// The existential witness is built explicitly: start from the zero offset
/// on `u` and set the bit at each apex's h-face so that its instance holds.
fn q3(m: &TwistedModel, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
    let insts = q3_instances(m);
    let u = m.universe();
    sweep_instances(
        cfg,
        rng,
        &insts,
        |i| i.doms.clone(),
        |inst, v| {
            let mut x = u.zero_offset();
            let eval = |x: &Gf2Vec, q: &QInstance, slots: &[Option<usize>], zi: usize| {
                let args: SmallVec<[&Gf2Vec; 4]> = slots.iter().map(|s| s.map_or(x, |i| &v[i])).collect();
                q.eval(&args, &v[zi])
            };
            for (q, slots, zi) in &inst.parts {
                if !eval(&x, q, slots, *zi) {
                    x.flip(q.h_index());
                }
            }
            for (q, slots, zi) in &inst.parts {
                if !eval(&x, q, slots, *zi) {
                    let args: Vec<Gf2Vec> = slots.iter().map(|s| s.map_or(x.clone(), |i| v[i].clone())).collect();
                    return Err(format!(
                        "witness {x} on {{{}}} (face #{}) fails {}",
                        inst.u,
                        inst.u_index,
                        fmt_q(q, &args, &v[*zi])
                    ));
                }
            }
            Ok(())
        },
    )
}
