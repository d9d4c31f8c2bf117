//! The isomorphism between two models over one P-part induced by a pair of
//! total solutions, and its predicate-by-predicate verification.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::gf2::Gf2Vec;
use crate::model::{Element, GElem, HElem, TwistedModel};
use crate::solve::{is_solution, Solution, SolveError};
use crate::sweep::{pow2, sweep_indices, SweepConfig, SweepMode, SweepOutcome};
use crate::universe::{faces_of, Atom, Face};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsoError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("models do not share a universe")]
    DifferentUniverse,
    #[error("{0} solution is not total")]
    NotTotal(&'static str),
    #[error("{0} solution is invalid: {1}")]
    Invalid(&'static str, String),
    #[error("{0} faces are too many to enumerate offsets")]
    TooLarge(usize),
}

/// Two models over literally the same universe.
#[derive(Debug, Clone)]
pub struct PIdentification {
    source: TwistedModel,
    target: TwistedModel,
}

impl PIdentification {
    pub fn new(source: TwistedModel, target: TwistedModel) -> Result<Self, IsoError> {
        if source.universe() != target.universe() {
            return Err(IsoError::DifferentUniverse);
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &TwistedModel {
        &self.source
    }

    pub fn target(&self) -> &TwistedModel {
        &self.target
    }
}

/// `j`: the identity on P, and on each torsor the translation carrying the
/// source base point to the target base point.
#[derive(Debug, Clone)]
pub struct IsoMap {
    pid: PIdentification,
    f_m: Solution,
    f_n: Solution,
    overrides: BTreeMap<Element, Element>,
}

pub fn build_iso(pid: PIdentification, f_m: Solution, f_n: Solution) -> Result<IsoMap, IsoError> {
    for (name, m, f) in [("source", &pid.source, &f_m), ("target", &pid.target, &f_n)] {
        if !f.is_total(m) {
            return Err(IsoError::NotTotal(name));
        }
        if let Some(v) = is_solution(m, f)? {
            return Err(IsoError::Invalid(name, v.to_string()));
        }
    }
    Ok(IsoMap {
        pid,
        f_m,
        f_n,
        overrides: BTreeMap::new(),
    })
}

impl IsoMap {
    pub fn identification(&self) -> &PIdentification {
        &self.pid
    }

    /// A copy with `j(x)` forced to `y`.
    pub fn with_override(&self, x: Element, y: Element) -> Self {
        let mut out = self.clone();
        out.overrides.insert(x, y);
        out
    }

    pub fn apply_g(&self, x: &GElem) -> Element {
        if !self.overrides.is_empty() {
            if let Some(y) = self.overrides.get(&Element::G(x.clone())) {
                return y.clone();
            }
        }
        let (Some(a), Some(b)) = (self.f_m.g(x.level, &x.face), self.f_n.g(x.level, &x.face)) else {
            return Element::G(x.clone());
        };
        let mut offset = x.offset.clone();
        offset.xor_in_place(&a.offset).expect("same family");
        offset.xor_in_place(&b.offset).expect("same family");
        Element::G(GElem {
            level: x.level,
            face: x.face.clone(),
            offset,
        })
    }

    pub fn apply_h(&self, x: &HElem) -> Element {
        if !self.overrides.is_empty() {
            if let Some(y) = self.overrides.get(&Element::H(x.clone())) {
                return y.clone();
            }
        }
        let (Some(a), Some(b)) = (self.f_m.h(&x.face), self.f_n.h(&x.face)) else {
            return Element::H(x.clone());
        };
        let mut vec = x.vec.clone();
        vec.xor_in_place(&a.vec).expect("same family");
        vec.xor_in_place(&b.vec).expect("same family");
        Element::H(HElem {
            face: x.face.clone(),
            vec,
        })
    }

    pub fn apply(&self, x: &Element) -> Element {
        match x {
            Element::G(g) => self.apply_g(g),
            Element::H(h) => self.apply_h(h),
            other => self.overrides.get(other).cloned().unwrap_or_else(|| other.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoCheck {
    pub predicate: &'static str,
    pub mode: SweepMode,
    #[serde(serialize_with = "crate::sweep::serialize_points")]
    pub points: u128,
    pub witness: Option<String>,
}

impl IsoCheck {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoReport {
    pub checks: Vec<IsoCheck>,
}

impl IsoReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(IsoCheck::passed)
    }

    pub fn first_failure(&self) -> Option<&IsoCheck> {
        self.checks.iter().find(|c| !c.passed())
    }

    pub fn exhaustive(&self) -> bool {
        self.checks.iter().all(|c| c.mode == SweepMode::Exhaustive)
    }
}

pub fn verify_iso(iso: &IsoMap) -> Result<IsoReport, IsoError> {
    verify_iso_with(iso, &SweepConfig::default())
}

/// Checks that `j` is the identity on P, maps each torsor bijectively onto
/// its counterpart and preserves every relation in both directions.
pub fn verify_iso_with(iso: &IsoMap, cfg: &SweepConfig) -> Result<IsoReport, IsoError> {
    let v = Verifier::new(iso)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let check = |predicate: &'static str, out: SweepOutcome| IsoCheck {
        predicate,
        mode: out.mode,
        points: out.points,
        witness: out.failure,
    };
    let checks = vec![
        check("P-identity", v.p_identity(cfg, &mut rng)),
        check("G^b", v.g_sorts(cfg, &mut rng)),
        check("H^b", v.h_sorts(cfg, &mut rng)),
        check("bijective", v.bijective(cfg, &mut rng)),
        check("member", v.member(cfg, &mut rng)),
        check("pi", v.pi(cfg, &mut rng)),
        check("rho", v.rho(cfg, &mut rng)),
        check("plus", v.plus(cfg, &mut rng)),
        check("g", v.g_action(cfg, &mut rng)),
        check("h", v.h_action(cfg, &mut rng)),
        check("Q", v.q(cfg, &mut rng)),
    ];
    Ok(IsoReport { checks })
}

struct Verifier<'a> {
    iso: &'a IsoMap,
    m: &'a TwistedModel,
    n: &'a TwistedModel,
    nf: usize,
}

fn show(xs: &[&Element]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl<'a> Verifier<'a> {
    fn new(iso: &'a IsoMap) -> Result<Self, IsoError> {
        let nf = iso.pid.source.universe().faces().len();
        if nf >= 128 {
            return Err(IsoError::TooLarge(nf));
        }
        Ok(Self {
            iso,
            m: &iso.pid.source,
            n: &iso.pid.target,
            nf,
        })
    }

    fn atoms(&self) -> &[Atom] {
        self.m.universe().atoms()
    }

    fn faces(&self) -> &[Face] {
        self.m.universe().faces()
    }

    fn ga(&self, i: u128) -> Gf2Vec {
        Gf2Vec::from_u128(self.m.universe().face_tag(), self.nf, i)
    }

    fn ha(&self, i: u128) -> Gf2Vec {
        Gf2Vec::from_u128(self.m.universe().level_tag(), self.m.levels(), i)
    }

    fn g_elem(&self, level: usize, face: usize, i: u128) -> GElem {
        GElem {
            level,
            face: self.faces()[face].clone(),
            offset: self.ga(i),
        }
    }

    /// The `i`-th element of `H^b(u)` in the source.
    fn h_elem(&self, face: usize, i: u128) -> HElem {
        let mut vec = self.m.h_twist_at(face).rep().clone();
        vec.xor_in_place(&self.ha(i)).expect("same family");
        HElem {
            face: self.faces()[face].clone(),
            vec,
        }
    }

    fn p_elements(&self) -> Vec<Element> {
        let mut out: Vec<Element> = self.atoms().iter().map(|a| Element::Atom(*a)).collect();
        out.extend(self.faces().iter().cloned().map(Element::Face));
        out.extend((0..self.m.levels()).map(Element::Level));
        out.extend([Element::Bit(false), Element::Bit(true)]);
        out
    }

    fn p_identity(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let small = self.p_elements();
        let dims = [small.len() as u128 + pow2(self.nf) + pow2(self.m.cutoff())];
        sweep_indices(cfg, rng, &dims, |i| {
            let i = i[0];
            let x = if i < small.len() as u128 {
                small[i as usize].clone()
            } else if i < small.len() as u128 + pow2(self.nf) {
                Element::Ga(self.ga(i - small.len() as u128))
            } else {
                Element::Ha(self.ha(i - small.len() as u128 - pow2(self.nf)))
            };
            let y = self.iso.apply(&x);
            if y == x && self.m.is_p(&x) && self.n.is_p(&y) {
                Ok(())
            } else {
                Err(format!("j({x}) = {y}"))
            }
        })
    }

    fn g_sorts(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let dims = [self.m.levels() as u128, self.nf as u128, pow2(self.nf)];
        sweep_indices(cfg, rng, &dims, |i| {
            let x = self.g_elem(i[0] as usize, i[1] as usize, i[2]);
            let y = self.iso.apply_g(&x);
            if self.n.in_g_b(x.level, &x.face, &y) {
                Ok(())
            } else {
                Err(format!("G^b({}, {{{}}}) holds of {} but not of j(x) = {y}", x.level, x.face, Element::G(x.clone())))
            }
        })
    }

    fn h_sorts(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let dims = [self.nf as u128, pow2(self.m.cutoff())];
        sweep_indices(cfg, rng, &dims, |i| {
            let x = self.h_elem(i[0] as usize, i[1]);
            let y = self.iso.apply_h(&x);
            if self.n.in_h_b(&x.face, &y) {
                Ok(())
            } else {
                Err(format!("H^b({{{}}}) holds of {} but not of j(x) = {y}", x.face, Element::H(x.clone())))
            }
        })
    }

    /// Injective on each torsor; torsors have equal finite sizes on both
    /// sides, so this makes `j` a bijection.
    fn bijective(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let torsors = self.m.levels() * self.nf + self.nf;
        let per_torsor = pow2(self.nf).max(pow2(self.m.cutoff()));
        let space = (torsors as u128).saturating_mul(per_torsor);
        if cfg.mode_for(space) == SweepMode::Sampled {
            // Sampled pairs of distinct elements must have distinct images.
            let dims = [self.m.levels() as u128, self.nf as u128, pow2(self.nf), pow2(self.nf)];
            let mut out = sweep_indices(cfg, rng, &dims, |i| {
                if i[2] == i[3] {
                    return Ok(());
                }
                let x = self.g_elem(i[0] as usize, i[1] as usize, i[2]);
                let y = self.g_elem(i[0] as usize, i[1] as usize, i[3]);
                let (jx, jy) = (self.iso.apply_g(&x), self.iso.apply_g(&y));
                if jx == jy {
                    Err(format!("j({}) = j({}) = {jx}", Element::G(x), Element::G(y)))
                } else {
                    Ok(())
                }
            });
            out.points = space;
            return out;
        }
        let mut failure = None;
        'torsors: for l in 0..=self.m.levels() {
            for face in 0..self.nf {
                let mut seen = BTreeSet::new();
                let size = if l < self.m.levels() { pow2(self.nf) } else { pow2(self.m.cutoff()) };
                for i in 0..size {
                    let (x, y) = if l < self.m.levels() {
                        let x = self.g_elem(l, face, i);
                        let y = self.iso.apply_g(&x);
                        (Element::G(x), y)
                    } else {
                        let x = self.h_elem(face, i);
                        let y = self.iso.apply_h(&x);
                        (Element::H(x), y)
                    };
                    if !seen.insert(y.clone()) {
                        failure = Some(format!("j is not injective: j({x}) = {y} repeats"));
                        break 'torsors;
                    }
                }
            }
        }
        SweepOutcome {
            mode: SweepMode::Exhaustive,
            points: space,
            failure,
        }
    }

    fn both<const N: usize>(&self, name: &str, xs: [&Element; N], holds: impl Fn(&TwistedModel, [&Element; N]) -> bool) -> Result<(), String> {
        let ys: Vec<Element> = xs.iter().map(|x| self.iso.apply(x)).collect();
        let yr: [&Element; N] = std::array::from_fn(|i| &ys[i]);
        let (a, b) = (holds(self.m, xs), holds(self.n, yr));
        if a == b {
            Ok(())
        } else {
            Err(format!("{name}({}) is {a} in the source but {name}({}) is {b} in the target", show(&xs), show(&yr)))
        }
    }

    fn member(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let dims = [self.atoms().len() as u128, self.nf as u128];
        sweep_indices(cfg, rng, &dims, |i| {
            let a = Element::Atom(self.atoms()[i[0] as usize]);
            let u = Element::Face(self.faces()[i[1] as usize].clone());
            self.both("member", [&a, &u], |m, [a, u]| m.member(a, u))
        })
    }

    fn pi(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let dims = [self.nf as u128, pow2(self.nf), 2];
        sweep_indices(cfg, rng, &dims, |i| {
            let u = Element::Face(self.faces()[i[0] as usize].clone());
            let x = Element::Ga(self.ga(i[1]));
            let z = Element::Bit(i[2] == 1);
            self.both("pi", [&u, &x, &z], |m, [u, x, z]| m.pi(u, x, z))
        })
    }

    fn rho(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let dims = [self.m.levels() as u128, pow2(self.m.cutoff()), 2];
        sweep_indices(cfg, rng, &dims, |i| {
            let l = Element::Level(i[0] as usize);
            let x = Element::Ha(self.ha(i[1]));
            let z = Element::Bit(i[2] == 1);
            self.both("rho", [&l, &x, &z], |m, [l, x, z]| m.rho(l, x, z))
        })
    }

    /// `+` on the three groups; the sort index picks `Z_2`, `G^a` or `H^a`.
    fn plus(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let mut points = 0u128;
        let mut mode = SweepMode::Exhaustive;
        for sort in 0..3 {
            let size = match sort {
                0 => 2,
                1 => pow2(self.nf),
                _ => pow2(self.m.cutoff()),
            };
            let elem = |i: u128| match sort {
                0 => Element::Bit(i == 1),
                1 => Element::Ga(self.ga(i)),
                _ => Element::Ha(self.ha(i)),
            };
            let out = sweep_indices(cfg, rng, &[size, size, size], |i| {
                let (x, y, z) = (elem(i[0]), elem(i[1]), elem(i[2]));
                self.both("plus", [&x, &y, &z], |m, [x, y, z]| m.plus(x, y, z))
            });
            points = points.saturating_add(out.points);
            if out.mode == SweepMode::Sampled {
                mode = SweepMode::Sampled;
            }
            if out.failure.is_some() {
                return SweepOutcome { mode, points, failure: out.failure };
            }
        }
        SweepOutcome { mode, points, failure: None }
    }

    fn g_action(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let dims = [self.m.levels() as u128, self.nf as u128, pow2(self.nf), pow2(self.nf), pow2(self.nf)];
        let space = dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d));
        let fail = |l: usize, a: &Gf2Vec, x: &GElem, y: &GElem, jx: &Element, jy: &Element, src: bool| {
            format!(
                "g({l}, {{{}}}, {a}, {}, {}) is {src} in the source but {} at the images {jx}, {jy}",
                x.face,
                Element::G(x.clone()),
                Element::G(y.clone()),
                !src
            )
        };
        let target_rel = |l: usize, a: &Gf2Vec, face: &Face, jx: &Element, jy: &Element| match (jx, jy) {
            (Element::G(p), Element::G(q)) => {
                self.n.in_g_b(l, face, jx) && self.n.in_g_b(l, face, jy) && self.n.g_rel(a, p, q)
            }
            _ => false,
        };
        if cfg.mode_for(space) == SweepMode::Sampled {
            return sweep_indices(cfg, rng, &dims, |i| {
                let (l, f) = (i[0] as usize, i[1] as usize);
                let a = self.ga(i[2]);
                let x = self.g_elem(l, f, i[3]);
                let y = self.g_elem(l, f, i[4]);
                let (jx, jy) = (self.iso.apply_g(&x), self.iso.apply_g(&y));
                let src = self.m.g_rel(&a, &x, &y);
                if src == target_rel(l, &a, &x.face, &jx, &jy) {
                    Ok(())
                } else {
                    Err(fail(l, &a, &x, &y, &jx, &jy, src))
                }
            });
        }
        // Exhaustive: tabulate each torsor and its images once.
        let size = pow2(self.nf) as usize;
        let acts: Vec<Gf2Vec> = (0..size as u128).map(|i| self.ga(i)).collect();
        let mut failure = None;
        'torsors: for l in 0..self.m.levels() {
            for f in 0..self.nf {
                let xs: Vec<GElem> = (0..size as u128).map(|i| self.g_elem(l, f, i)).collect();
                let js: Vec<Element> = xs.iter().map(|x| self.iso.apply_g(x)).collect();
                let face = &self.faces()[f];
                let sorted: Vec<Option<&GElem>> = js
                    .iter()
                    .map(|j| match j {
                        Element::G(p) if self.n.in_g_b(l, face, j) => Some(p),
                        _ => None,
                    })
                    .collect();
                for a in &acts {
                    for (x, (jx, px)) in xs.iter().zip(js.iter().zip(&sorted)) {
                        for (y, (jy, py)) in xs.iter().zip(js.iter().zip(&sorted)) {
                            let src = self.m.g_rel(a, x, y);
                            let tgt = match (px, py) {
                                (Some(p), Some(q)) => self.n.g_rel(a, p, q),
                                _ => false,
                            };
                            if src != tgt {
                                failure = Some(fail(l, a, x, y, jx, jy, src));
                                break 'torsors;
                            }
                        }
                    }
                }
            }
        }
        SweepOutcome {
            mode: SweepMode::Exhaustive,
            points: space,
            failure,
        }
    }

    fn h_action(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let c = pow2(self.m.cutoff());
        let dims = [self.nf as u128, c, c, c];
        sweep_indices(cfg, rng, &dims, |i| {
            let f = i[0] as usize;
            let u = Element::Face(self.faces()[f].clone());
            let b = Element::Ha(self.ha(i[1]));
            let x = Element::H(self.h_elem(f, i[2]));
            let y = Element::H(self.h_elem(f, i[3]));
            self.both("h", [&u, &b, &x, &y], |m, [u, b, x, y]| m.h_pred(u, b, x, y))
        })
    }

    /// Every `Q_l` instance with g-arguments in lexicographic face order,
    /// in both directions.
    fn q(&self, cfg: &SweepConfig, rng: &mut ChaCha8Rng) -> SweepOutcome {
        let k = self.m.k();
        let u = self.m.universe();
        let cells = u.cells();
        let per_g = pow2(self.nf);
        let per_h = pow2(self.m.cutoff());
        let slots = (cells.len() * (k + 1) * self.m.levels()) as u128;
        let space = (0..k).fold(slots.saturating_mul(per_h), |acc, _| acc.saturating_mul(per_g));
        let witness = |level: usize, args: &[Element], images: &[Element], a: bool, b: bool| {
            let xs: Vec<&Element> = args.iter().collect();
            let ys: Vec<&Element> = images.iter().collect();
            format!(
                "Q_{level}({}) is {a} in the source but Q_{level}({}) is {b} in the target",
                show(&xs),
                show(&ys)
            )
        };
        let mut args: Vec<Element> = Vec::with_capacity(k + 1);
        let mut images: Vec<Element> = Vec::with_capacity(k + 1);
        if cfg.mode_for(space) == SweepMode::Sampled {
            let faces_by_cell: Vec<Vec<Face>> = cells.iter().map(faces_of).collect();
            let mut dims = vec![self.m.levels() as u128, (cells.len() * (k + 1)) as u128];
            dims.extend(std::iter::repeat_n(per_g, k));
            dims.push(per_h);
            let mut out = sweep_indices(cfg, rng, &dims, |i| {
                let level = i[0] as usize;
                let (ci, wi) = (i[1] as usize / (k + 1), i[1] as usize % (k + 1));
                let faces = &faces_by_cell[ci];
                let w = &faces[wi];
                args.clear();
                for (slot, v) in faces.iter().filter(|v| *v != w).enumerate() {
                    args.push(Element::G(GElem {
                        level,
                        face: v.clone(),
                        offset: self.ga(i[2 + slot]),
                    }));
                }
                let wf = u.face_index(w).expect("universe face");
                args.push(Element::H(self.h_elem(wf, i[2 + k])));
                images.clear();
                images.extend(args.iter().map(|x| self.iso.apply(x)));
                let (a, b) = (self.m.q_pred(level, &args), self.n.q_pred(level, &images));
                if a == b {
                    Ok(())
                } else {
                    Err(witness(level, &args, &images, a, b))
                }
            });
            out.points = space;
            return out;
        }
        // Exhaustive: tabulate every torsor with its images once.
        let g_table: Vec<Vec<(Element, Element)>> = (0..self.m.levels())
            .flat_map(|l| (0..self.nf).map(move |f| (l, f)))
            .map(|(l, f)| {
                (0..per_g)
                    .map(|i| {
                        let x = self.g_elem(l, f, i);
                        let j = self.iso.apply_g(&x);
                        (Element::G(x), j)
                    })
                    .collect()
            })
            .collect();
        let h_table: Vec<Vec<(Element, Element)>> = (0..self.nf)
            .map(|f| {
                (0..per_h)
                    .map(|i| {
                        let x = self.h_elem(f, i);
                        let j = self.iso.apply_h(&x);
                        (Element::H(x), j)
                    })
                    .collect()
            })
            .collect();
        let mut failure = None;
        let mut idx = vec![0usize; k + 1];
        'outer: for level in 0..self.m.levels() {
            for cell in &cells {
                let faces = faces_of(cell);
                for w in &faces {
                    let wf = u.face_index(w).expect("universe face");
                    let mut tables: Vec<&[(Element, Element)]> = faces
                        .iter()
                        .filter(|v| *v != w)
                        .map(|v| g_table[level * self.nf + u.face_index(v).expect("universe face")].as_slice())
                        .collect();
                    tables.push(&h_table[wf]);
                    idx.iter_mut().for_each(|i| *i = 0);
                    args.clear();
                    images.clear();
                    for t in &tables {
                        args.push(t[0].0.clone());
                        images.push(t[0].1.clone());
                    }
                    loop {
                        let (a, b) = (self.m.q_pred(level, &args), self.n.q_pred(level, &images));
                        if a != b {
                            failure = Some(witness(level, &args, &images, a, b));
                            break 'outer;
                        }
                        let mut j = k + 1;
                        loop {
                            if j == 0 {
                                break;
                            }
                            j -= 1;
                            idx[j] = (idx[j] + 1) % tables[j].len();
                            args[j] = tables[j][idx[j]].0.clone();
                            images[j] = tables[j][idx[j]].1.clone();
                            if idx[j] != 0 {
                                break;
                            }
                        }
                        if idx.iter().all(|&i| i == 0) {
                            break;
                        }
                    }
                }
            }
        }
        SweepOutcome {
            mode: SweepMode::Exhaustive,
            points: space,
            failure,
        }
    }
}
