//! Finite models in twisted-canonical normal form.
//!
//! The P-part is always the standard one over the universe: atoms, faces,
//! levels, `Z_2`, `G^a = 2^K` and `H^a = E_c`. A model is fixed by two data:
//! the H-twist assigning every face the coset its `H^b` copy lives in, and a
//! sparse table τ adding a level vector to the parity test of a
//! `(cell, h-face)` pair. With τ empty this is the canonical structure of the
//! twist; with a zero twist as well it is the standard model.

mod axioms;
mod extend;
mod format;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use smallvec::SmallVec;
use thiserror::Error;

use crate::gf2::{coset_of, CutoffCoset, Gf2Error, Gf2Vec};
use crate::sweep::random_vec;
use crate::universe::{faces_of, Atom, Cell, Face, Universe, UniverseError};

pub use axioms::{check_axioms, check_axioms_with, AxiomId, AxiomReport, AxiomResult, TYPING_AXIOMS};
pub use extend::{extend_model, Embedding};
pub use format::{parse_model, print_model};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("face {0} is not in the universe")]
    NotAFace(Face),
    #[error("twist is missing face {0}")]
    PartialTwist(Face),
    #[error("twist for face {face} has cutoff {got}, universe cutoff is {expected}")]
    TwistCutoff {
        face: Face,
        got: usize,
        expected: usize,
    },
    #[error("τ key ({cell}, {face}): face is not a face of the cell")]
    BadTwistKey { cell: Cell, face: Face },
    #[error("level {0} out of range")]
    BadLevel(usize),
    #[error("vector {vec} is not in H^b({face})")]
    NotInCoset { face: Face, vec: Gf2Vec },
    #[error("offset for ({level}, {face}) is not indexed by the universe's faces")]
    BadOffset { level: usize, face: Face },
    #[error("Q arguments do not match: {0}")]
    ArgumentMismatch(String),
    #[error("anchor missing for face {0}")]
    IncompleteAnchor(Face),
    #[error("new atom {0} already belongs to the model")]
    AtomsOverlap(Atom),
    #[error("model file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An element of `G^b(l, u)`: the triple `(l, u, offset)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GElem {
    pub level: usize,
    pub face: Face,
    pub offset: Gf2Vec,
}

/// An element of `H^b(u)`: the pair `(u, vec)` with `vec` in the face's coset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HElem {
    pub face: Face,
    pub vec: Gf2Vec,
}

/// Any element of a model, tagged by sort.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Atom(Atom),
    Face(Face),
    Level(usize),
    Bit(bool),
    /// An element of `G^a`.
    Ga(Gf2Vec),
    /// An element of `H^a`.
    Ha(Gf2Vec),
    G(GElem),
    H(HElem),
}

impl Element {
    pub fn is_p(&self) -> bool {
        !matches!(self, Element::G(_) | Element::H(_))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Atom(a) => write!(f, "atom {a}"),
            Element::Face(u) => write!(f, "face {{{u}}}"),
            Element::Level(l) => write!(f, "level {l}"),
            Element::Bit(b) => write!(f, "bit {}", u8::from(*b)),
            Element::Ga(v) => write!(f, "G^a {v}"),
            Element::Ha(v) => write!(f, "H^a {v}"),
            Element::G(g) => write!(f, "G^b({}, {{{}}}) {}", g.level, g.face, g.offset),
            Element::H(h) => write!(f, "H^b({{{}}}) {}", h.face, h.vec),
        }
    }
}

/// The model's Q-predicate specialized to one `(level, cell, h-face)`
/// triple, taking g-arguments in lexicographic face order.
#[derive(Debug, Clone)]
pub struct QInstance {
    pub level: usize,
    pub cell: Cell,
    pub h_face: Face,
    /// Faces of the cell other than `h_face`, lexicographic.
    pub g_faces: Vec<Face>,
    h_index: usize,
    tau_bit: bool,
    fault: bool,
}

impl QInstance {
    /// `Σ offsets[i](h_face) = z(level) + τ(level)`.
    #[inline]
    pub fn eval(&self, offsets: &[&Gf2Vec], z: &Gf2Vec) -> bool {
        let mut parity = self.tau_bit ^ z.get(self.level);
        for o in offsets {
            parity ^= o.get(self.h_index);
        }
        !parity ^ self.fault
    }

    /// Same as [`QInstance::eval`] for owned offsets.
    #[inline]
    pub fn eval_owned(&self, offsets: &[Gf2Vec], z: &Gf2Vec) -> bool {
        let mut parity = self.tau_bit ^ z.get(self.level);
        for o in offsets {
            parity ^= o.get(self.h_index);
        }
        !parity ^ self.fault
    }

    /// Bit index of the h-face in offsets.
    pub fn h_index(&self) -> usize {
        self.h_index
    }

    /// The τ bit at this level.
    pub fn tau_bit(&self) -> bool {
        self.tau_bit
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedModel {
    universe: Arc<Universe>,
    h_twist: Vec<CutoffCoset>,
    q_twist: BTreeMap<Cell, BTreeMap<Face, Gf2Vec>>,
    /// Fault injection: flips Q at `(level, cell, h-face)` whenever the first
    /// argument sits on the given face. Never produced by constructors.
    slot_faults: BTreeMap<(usize, Cell, Face), Face>,
}

impl TwistedModel {
    /// The standard model: every twist zero, τ empty.
    pub fn standard(universe: Arc<Universe>) -> Self {
        let zero = CutoffCoset::zero(universe.level_tag(), universe.levels(), universe.cutoff())
            .expect("cutoff <= levels");
        Self {
            h_twist: vec![zero; universe.faces().len()],
            universe,
            q_twist: BTreeMap::new(),
            slot_faults: BTreeMap::new(),
        }
    }

    /// The canonical structure `M_g`.
    pub fn canonical(
        universe: Arc<Universe>,
        g: &BTreeMap<Face, CutoffCoset>,
    ) -> Result<Self, ModelError> {
        let mut h_twist = Vec::with_capacity(universe.faces().len());
        for face in universe.faces() {
            let coset = g
                .get(face)
                .ok_or_else(|| ModelError::PartialTwist(face.clone()))?;
            Self::check_coset(&universe, face, coset)?;
            h_twist.push(coset.clone());
        }
        if let Some(extra) = g.keys().find(|f| universe.face_index(f).is_none()) {
            return Err(ModelError::NotAFace(extra.clone()));
        }
        Ok(Self {
            universe,
            h_twist,
            q_twist: BTreeMap::new(),
            slot_faults: BTreeMap::new(),
        })
    }

    /// General constructor; zero τ entries are dropped.
    pub fn from_parts(
        universe: Arc<Universe>,
        g: &BTreeMap<Face, CutoffCoset>,
        tau: BTreeMap<(Cell, Face), Gf2Vec>,
    ) -> Result<Self, ModelError> {
        let mut model = Self::canonical(universe, g)?;
        for ((cell, face), vec) in tau {
            model.set_tau(cell, face, vec)?;
        }
        Ok(model)
    }

    fn check_coset(universe: &Universe, face: &Face, coset: &CutoffCoset) -> Result<(), ModelError> {
        if coset.cutoff() != universe.cutoff() {
            return Err(ModelError::TwistCutoff {
                face: face.clone(),
                got: coset.cutoff(),
                expected: universe.cutoff(),
            });
        }
        if coset.rep().family() != universe.level_tag() || coset.len() != universe.levels() {
            return Err(ModelError::Gf2(Gf2Error::FamilyMismatch {
                left: coset.rep().family(),
                left_len: coset.len(),
                right: universe.level_tag(),
                right_len: universe.levels(),
            }));
        }
        Ok(())
    }

    pub(crate) fn set_tau(&mut self, cell: Cell, face: Face, vec: Gf2Vec) -> Result<(), ModelError> {
        self.universe.check_atoms(cell.atoms())?;
        if !cell.has_face(&face) {
            return Err(ModelError::BadTwistKey { cell, face });
        }
        if vec.family() != self.universe.level_tag() || vec.len() != self.universe.levels() {
            return Err(ModelError::Gf2(Gf2Error::FamilyMismatch {
                left: vec.family(),
                left_len: vec.len(),
                right: self.universe.level_tag(),
                right_len: self.universe.levels(),
            }));
        }
        let row = self.q_twist.entry(cell.clone()).or_default();
        if vec.is_zero() {
            row.remove(&face);
            if row.is_empty() {
                self.q_twist.remove(&cell);
            }
        } else {
            row.insert(face, vec);
        }
        Ok(())
    }

    /// Canonical structure with a uniformly random coset on every face.
    pub fn random_canonical(universe: Arc<Universe>, rng: &mut impl Rng) -> Self {
        let g = random_twist(&universe, rng);
        Self::canonical(universe, &g).expect("total twist")
    }

    /// Copy whose Q flips at `(level, cell, h_face)` whenever the first
    /// argument lies on `first_face`, breaking argument symmetry. Used to
    /// exercise the axiom checker.
    #[doc(hidden)]
    pub fn with_slot_fault(
        &self,
        level: usize,
        cell: Cell,
        h_face: Face,
        first_face: Face,
    ) -> Result<Self, ModelError> {
        if !cell.has_face(&h_face) || !cell.has_face(&first_face) || h_face == first_face {
            return Err(ModelError::BadTwistKey { cell, face: h_face });
        }
        let mut out = self.clone();
        out.slot_faults.insert((level, cell, h_face), first_face);
        Ok(out)
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn universe_arc(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn k(&self) -> usize {
        self.universe.k()
    }

    pub fn levels(&self) -> usize {
        self.universe.levels()
    }

    pub fn cutoff(&self) -> usize {
        self.universe.cutoff()
    }

    fn face_index(&self, face: &Face) -> Result<usize, ModelError> {
        self.universe
            .face_index(face)
            .ok_or_else(|| ModelError::NotAFace(face.clone()))
    }

    /// The coset `H^b(face)` lives in.
    pub fn h_twist(&self, face: &Face) -> Result<&CutoffCoset, ModelError> {
        Ok(&self.h_twist[self.face_index(face)?])
    }

    pub fn h_twist_at(&self, face_index: usize) -> &CutoffCoset {
        &self.h_twist[face_index]
    }

    /// The twist as a map, in face order.
    pub fn twist_map(&self) -> BTreeMap<Face, CutoffCoset> {
        self.universe
            .faces()
            .iter()
            .cloned()
            .zip(self.h_twist.iter().cloned())
            .collect()
    }

    /// τ at `(cell, face)`, zero when absent.
    pub fn tau(&self, cell: &Cell, face: &Face) -> Gf2Vec {
        self.q_twist
            .get(cell)
            .and_then(|row| row.get(face))
            .cloned()
            .unwrap_or_else(|| self.universe.zero_levels())
    }

    /// Non-zero τ entries, sorted by (cell, face).
    pub fn tau_entries(&self) -> impl Iterator<Item = (&Cell, &Face, &Gf2Vec)> {
        self.q_twist
            .iter()
            .flat_map(|(c, row)| row.iter().map(move |(f, v)| (c, f, v)))
    }

    pub fn has_tau(&self) -> bool {
        !self.q_twist.is_empty()
    }

    fn tau_bit(&self, cell: &Cell, face: &Face, level: usize) -> bool {
        self.q_twist
            .get(cell)
            .and_then(|row| row.get(face))
            .is_some_and(|v| v.get(level))
    }

    /// Builds an `H^b(face)` element, checking coset membership.
    pub fn h_elem(&self, face: &Face, vec: Gf2Vec) -> Result<HElem, ModelError> {
        let coset = self.h_twist(face)?;
        if !coset.contains(&vec) {
            return Err(ModelError::NotInCoset {
                face: face.clone(),
                vec,
            });
        }
        Ok(HElem {
            face: face.clone(),
            vec,
        })
    }

    /// The canonical representative of `H^b(face)`.
    pub fn h_base(&self, face: &Face) -> Result<HElem, ModelError> {
        Ok(HElem {
            face: face.clone(),
            vec: self.h_twist(face)?.rep().clone(),
        })
    }

    pub fn g_elem(&self, level: usize, face: &Face, offset: Gf2Vec) -> Result<GElem, ModelError> {
        if level >= self.levels() {
            return Err(ModelError::BadLevel(level));
        }
        self.face_index(face)?;
        if offset.family() != self.universe.face_tag() || offset.len() != self.universe.faces().len()
        {
            return Err(ModelError::BadOffset {
                level,
                face: face.clone(),
            });
        }
        Ok(GElem {
            level,
            face: face.clone(),
            offset,
        })
    }

    /// `(level, face, 0)`.
    pub fn g_zero(&self, level: usize, face: &Face) -> GElem {
        GElem {
            level,
            face: face.clone(),
            offset: self.universe.zero_offset(),
        }
    }

    // --- the interpretation of the language -------------------------------

    pub fn is_offset(&self, v: &Gf2Vec) -> bool {
        v.family() == self.universe.face_tag() && v.len() == self.universe.faces().len()
    }

    pub fn is_level_vec(&self, v: &Gf2Vec) -> bool {
        v.family() == self.universe.level_tag() && v.len() == self.levels()
    }

    /// Whether `x` is an element of this model at all.
    pub fn contains(&self, x: &Element) -> bool {
        match x {
            Element::Atom(a) => self.universe.has_atom(*a),
            Element::Face(u) => self.universe.face_index(u).is_some(),
            Element::Level(l) => *l < self.levels(),
            Element::Bit(_) => true,
            Element::Ga(v) => self.is_offset(v),
            Element::Ha(v) => self.is_level_vec(v) && v.supported_below(self.cutoff()),
            Element::G(g) => self.in_g_b(g.level, &g.face, &Element::G(g.clone())),
            Element::H(h) => self.in_h_b(&h.face, &Element::H(h.clone())),
        }
    }

    pub fn is_i(&self, x: &Element) -> bool {
        matches!(x, Element::Atom(a) if self.universe.has_atom(*a))
    }

    pub fn is_k(&self, x: &Element) -> bool {
        matches!(x, Element::Face(u) if self.universe.face_index(u).is_some())
    }

    pub fn is_r(&self, x: &Element) -> bool {
        matches!(x, Element::Level(l) if *l < self.levels())
    }

    pub fn is_ga(&self, x: &Element) -> bool {
        matches!(x, Element::Ga(v) if self.is_offset(v))
    }

    pub fn is_ha(&self, x: &Element) -> bool {
        matches!(x, Element::Ha(v) if self.is_level_vec(v) && v.supported_below(self.cutoff()))
    }

    pub fn is_z2_const(&self, x: &Element) -> bool {
        matches!(x, Element::Bit(_))
    }

    pub fn is_p(&self, x: &Element) -> bool {
        self.is_i(x)
            || self.is_k(x)
            || self.is_r(x)
            || self.is_ga(x)
            || self.is_ha(x)
            || self.is_z2_const(x)
    }

    /// `G^b(l, u, x)`.
    pub fn in_g_b(&self, level: usize, face: &Face, x: &Element) -> bool {
        match x {
            Element::G(g) => {
                level < self.levels()
                    && g.level == level
                    && &g.face == face
                    && self.universe.face_index(face).is_some()
                    && self.is_offset(&g.offset)
            }
            _ => false,
        }
    }

    /// `H^b(u, x)`.
    pub fn in_h_b(&self, face: &Face, x: &Element) -> bool {
        match x {
            Element::H(h) => {
                &h.face == face
                    && self
                        .universe
                        .face_index(face)
                        .is_some_and(|i| self.h_twist[i].contains(&h.vec))
            }
            _ => false,
        }
    }

    /// `∈(x, y)`.
    pub fn member(&self, x: &Element, y: &Element) -> bool {
        match (x, y) {
            (Element::Atom(a), Element::Face(u)) => {
                self.is_i(x) && self.is_k(y) && u.contains(*a)
            }
            _ => false,
        }
    }

    /// `π(u, x, a)`: `x(u) = a`.
    pub fn pi(&self, u: &Element, x: &Element, a: &Element) -> bool {
        match (u, x, a) {
            (Element::Face(face), Element::Ga(v), Element::Bit(b)) if self.is_ga(x) => self
                .universe
                .face_index(face)
                .is_some_and(|i| v.get(i) == *b),
            _ => false,
        }
    }

    /// `ρ(l, x, a)`: `x(l) = a`.
    pub fn rho(&self, l: &Element, x: &Element, a: &Element) -> bool {
        match (l, x, a) {
            (Element::Level(level), Element::Ha(v), Element::Bit(b)) if self.is_ha(x) => {
                *level < self.levels() && v.get(*level) == *b
            }
            _ => false,
        }
    }

    /// `+(x, y, z)` inside `Z_2`, `G^a` or `H^a`.
    pub fn plus(&self, x: &Element, y: &Element, z: &Element) -> bool {
        match (x, y, z) {
            (Element::Bit(a), Element::Bit(b), Element::Bit(c)) => (a ^ b) == *c,
            (Element::Ga(a), Element::Ga(b), Element::Ga(c))
                if self.is_ga(x) && self.is_ga(y) && self.is_ga(z) =>
            {
                self.plus_rel(a, b, c)
            }
            (Element::Ha(a), Element::Ha(b), Element::Ha(c))
                if self.is_ha(x) && self.is_ha(y) && self.is_ha(z) =>
            {
                self.plus_rel(a, b, c)
            }
            _ => false,
        }
    }

    /// `g(l, u, a, x, y)`: `x, y ∈ G^b(l, u)` and `y = x + a`.
    pub fn g_pred(&self, l: &Element, u: &Element, a: &Element, x: &Element, y: &Element) -> bool {
        let (Element::Level(level), Element::Face(face), Element::Ga(av)) = (l, u, a) else {
            return false;
        };
        if !self.is_ga(a) || !self.in_g_b(*level, face, x) || !self.in_g_b(*level, face, y) {
            return false;
        }
        let (Element::G(gx), Element::G(gy)) = (x, y) else {
            return false;
        };
        self.g_rel(av, gx, gy)
    }

    /// The action relation on elements of the G^b sorts: `x` and `y` lie in
    /// one torsor and `y = x + a`.
    #[inline]
    pub fn g_rel(&self, a: &Gf2Vec, x: &GElem, y: &GElem) -> bool {
        x.level == y.level && x.face == y.face && y.offset.is_sum(&x.offset, a)
    }

    /// `h(u, a, x, y)`: `x, y ∈ H^b(u)` and `y = x + a` with `a ∈ H^a`.
    pub fn h_pred(&self, u: &Element, a: &Element, x: &Element, y: &Element) -> bool {
        let (Element::Face(face), Element::Ha(av)) = (u, a) else {
            return false;
        };
        if !self.is_ha(a) || !self.in_h_b(face, x) || !self.in_h_b(face, y) {
            return false;
        }
        let (Element::H(hx), Element::H(hy)) = (x, y) else {
            return false;
        };
        self.h_rel(av, hx, hy)
    }

    /// The action relation on elements of the H^b sorts.
    #[inline]
    pub fn h_rel(&self, a: &Gf2Vec, x: &HElem, y: &HElem) -> bool {
        x.face == y.face && y.vec.is_sum(&x.vec, a)
    }

    /// `+` on two vectors of `G^a` or of `H^a`, given as elements of that sort.
    #[inline]
    pub fn plus_rel(&self, x: &Gf2Vec, y: &Gf2Vec, z: &Gf2Vec) -> bool {
        z.is_sum(x, y)
    }

    /// The translate `a · x` inside `G^b(l, u)`.
    pub fn g_act(&self, a: &Gf2Vec, x: &GElem) -> Result<GElem, ModelError> {
        Ok(GElem {
            level: x.level,
            face: x.face.clone(),
            offset: x.offset.try_add(a)?,
        })
    }

    /// The unique `a` with `g(l, u, a, x, y)`.
    pub fn g_diff(&self, x: &GElem, y: &GElem) -> Result<Gf2Vec, ModelError> {
        if x.level != y.level || x.face != y.face {
            return Err(ModelError::ArgumentMismatch(format!(
                "{} and {} lie in different torsors",
                Element::G(x.clone()),
                Element::G(y.clone())
            )));
        }
        Ok(x.offset.try_add(&y.offset)?)
    }

    /// The unique `a` with `h(u, a, x, y)`.
    pub fn h_diff(&self, x: &HElem, y: &HElem) -> Result<Gf2Vec, ModelError> {
        if x.face != y.face {
            return Err(ModelError::ArgumentMismatch(format!(
                "{} and {} lie in different torsors",
                Element::H(x.clone()),
                Element::H(y.clone())
            )));
        }
        Ok(x.vec.try_add(&y.vec)?)
    }

    /// The Q-predicate at one `(level, cell, h-face)` triple.
    pub fn q_instance(&self, level: usize, cell: &Cell, h_face: &Face) -> Result<QInstance, ModelError> {
        if level >= self.levels() {
            return Err(ModelError::BadLevel(level));
        }
        self.universe.check_atoms(cell.atoms())?;
        if !cell.has_face(h_face) {
            return Err(ModelError::ArgumentMismatch(format!(
                "{{{h_face}}} is not a face of {{{cell}}}"
            )));
        }
        let g_faces: Vec<Face> = faces_of(cell).into_iter().filter(|f| f != h_face).collect();
        let fault = self
            .slot_faults
            .get(&(level, cell.clone(), h_face.clone()))
            .is_some_and(|f| *f == g_faces[0]);
        Ok(QInstance {
            level,
            h_index: self.face_index(h_face)?,
            tau_bit: self.tau_bit(cell, h_face, level),
            cell: cell.clone(),
            h_face: h_face.clone(),
            g_faces,
            fault,
        })
    }

    /// `Q_l(x_0, …, x_k)` over arbitrary elements: false unless the first `k`
    /// arguments lie in `G^b(l, ·)` on distinct faces, the last lies in some
    /// `H^b`, and the `k + 1` faces are exactly the faces of one cell.
    pub fn q_pred(&self, level: usize, args: &[Element]) -> bool {
        let k = self.k();
        if args.len() != k + 1 || level >= self.levels() {
            return false;
        }
        let mut offsets: SmallVec<[&Gf2Vec; 8]> = SmallVec::new();
        let mut faces: SmallVec<[&Face; 8]> = SmallVec::new();
        for arg in &args[..k] {
            match arg {
                Element::G(g) if self.in_g_b(level, &g.face, arg) => {
                    offsets.push(&g.offset);
                    faces.push(&g.face);
                }
                _ => return false,
            }
        }
        let z = match &args[k] {
            Element::H(h) if self.in_h_b(&h.face, &args[k]) => {
                faces.push(&h.face);
                &h.vec
            }
            _ => return false,
        };
        let mut atoms: SmallVec<[Atom; 8]> = faces.iter().flat_map(|f| f.atoms().iter().copied()).collect();
        atoms.sort_unstable();
        atoms.dedup();
        if atoms.len() != k + 1 {
            return false;
        }
        // k + 1 distinct k-subsets of a (k + 1)-set are all of its faces.
        let mut seen = faces.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != k + 1 {
            return false;
        }
        let cell = Cell::from_sorted(&atoms);
        let h_face = faces[k];
        let h_index = self.universe.face_index(h_face).expect("checked by in_h_b");
        let mut parity = self.tau_bit(&cell, h_face, level) ^ z.get(level);
        for o in &offsets {
            parity ^= o.get(h_index);
        }
        let fault = !self.slot_faults.is_empty()
            && self
                .slot_faults
                .get(&(level, cell, h_face.clone()))
                .is_some_and(|f| f == faces[0]);
        !parity ^ fault
    }

    /// Evaluates `Q_l` with g-arguments keyed by face.
    ///
    /// `g_args` must be keyed by exactly the faces of `cell` other than
    /// `h_face`, each at level `level`, and `h_arg` must sit on `h_face`.
    pub fn q_holds(
        &self,
        level: usize,
        cell: &Cell,
        h_face: &Face,
        g_args: &BTreeMap<Face, GElem>,
        h_arg: &HElem,
    ) -> Result<bool, ModelError> {
        let inst = self.q_instance(level, cell, h_face)?;
        if g_args.len() != inst.g_faces.len() {
            return Err(ModelError::ArgumentMismatch(format!(
                "expected {} g-arguments, got {}",
                inst.g_faces.len(),
                g_args.len()
            )));
        }
        let mut offsets = Vec::with_capacity(inst.g_faces.len());
        for face in &inst.g_faces {
            let g = g_args.get(face).ok_or_else(|| {
                ModelError::ArgumentMismatch(format!("no g-argument for face {{{face}}}"))
            })?;
            if g.level != level || &g.face != face {
                return Err(ModelError::ArgumentMismatch(format!(
                    "g-argument keyed {{{face}}} is {}",
                    Element::G(g.clone())
                )));
            }
            if !self.is_offset(&g.offset) {
                return Err(ModelError::BadOffset {
                    level,
                    face: face.clone(),
                });
            }
            offsets.push(&g.offset);
        }
        if &h_arg.face != h_face {
            return Err(ModelError::ArgumentMismatch(format!(
                "h-argument sits on {{{}}}, expected {{{h_face}}}",
                h_arg.face
            )));
        }
        if !self.h_twist(h_face)?.contains(&h_arg.vec) {
            return Err(ModelError::NotInCoset {
                face: h_face.clone(),
                vec: h_arg.vec.clone(),
            });
        }
        Ok(inst.eval(&offsets, &h_arg.vec))
    }
}

/// A uniformly random coset for every face.
pub fn random_twist(universe: &Universe, rng: &mut impl Rng) -> BTreeMap<Face, CutoffCoset> {
    universe
        .faces()
        .iter()
        .map(|f| {
            let v = random_vec(universe.level_tag(), universe.levels(), universe.levels(), rng);
            (f.clone(), coset_of(&v, universe.cutoff()).expect("cutoff <= levels"))
        })
        .collect()
}

/// The standard model on a universe.
pub fn standard_model(universe: Arc<Universe>) -> TwistedModel {
    TwistedModel::standard(universe)
}

/// The canonical structure `M_g`; `g` must be total on faces.
pub fn canonical_model(
    universe: Arc<Universe>,
    g: &BTreeMap<Face, CutoffCoset>,
) -> Result<TwistedModel, ModelError> {
    TwistedModel::canonical(universe, g)
}
