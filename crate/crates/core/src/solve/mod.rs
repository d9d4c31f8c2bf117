//! Solutions: coherent choices of base points for every torsor `G^b(l, u)`
//! and `H^b(u)`, and the procedures that build them.

mod extend;
mod format;
mod linear;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::gf2::Gf2Error;
use crate::model::{Element, GElem, HElem, ModelError, TwistedModel};
use crate::universe::{faces_of, Atom, Cell, Face};

pub use extend::{amalgamate, extend_solution, greedy_extend, greedy_fill, pull_back, SystemOfSolutions};
pub use format::{parse_solution, print_solution};
pub use linear::{compile, full_solve, random_solution, CompiledSystem, SolveMethod, BRUTE_BOUND};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("{0} does not belong to the model")]
    Foreign(String),
    #[error("not a solution: {0}")]
    Invalid(Violation),
    #[error("solution domain is not inside the scope: {0}")]
    OutOfScope(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("incompatible parts: {0}")]
    Incompatible(String),
    #[error("{unknowns} unknowns exceed the brute-force bound {bound}")]
    BoundExceeded { unknowns: usize, bound: usize },
    #[error("internal failure: {0}")]
    Internal(String),
    #[error("solution file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One failing `Q_l` constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub level: usize,
    pub cell: Cell,
    pub h_face: Face,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Q_{} fails on cell {{{}}} with h-face {{{}}}",
            self.level, self.cell, self.h_face
        )
    }
}

/// A partial base-point assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Solution {
    g_part: BTreeMap<(usize, Face), GElem>,
    h_part: BTreeMap<Face, HElem>,
}

impl Solution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn g(&self, level: usize, face: &Face) -> Option<&GElem> {
        self.g_part.get(&(level, face.clone()))
    }

    pub fn h(&self, face: &Face) -> Option<&HElem> {
        self.h_part.get(face)
    }

    pub fn g_part(&self) -> &BTreeMap<(usize, Face), GElem> {
        &self.g_part
    }

    pub fn h_part(&self) -> &BTreeMap<Face, HElem> {
        &self.h_part
    }

    /// Sets `f(l, u)`; the key is taken from the element.
    pub fn set_g(&mut self, x: GElem) -> Option<GElem> {
        self.g_part.insert((x.level, x.face.clone()), x)
    }

    /// Sets `f(u)`; the key is taken from the element.
    pub fn set_h(&mut self, x: HElem) -> Option<HElem> {
        self.h_part.insert(x.face.clone(), x)
    }

    pub fn is_empty(&self) -> bool {
        self.g_part.is_empty() && self.h_part.is_empty()
    }

    pub fn len(&self) -> usize {
        self.g_part.len() + self.h_part.len()
    }

    /// Every face mentioned by the domain.
    pub fn faces(&self) -> impl Iterator<Item = &Face> {
        self.h_part.keys().chain(self.g_part.keys().map(|(_, u)| u))
    }

    /// The restriction to points whose face lies inside `atoms`.
    pub fn restrict(&self, atoms: &[Atom]) -> Solution {
        Solution {
            g_part: self
                .g_part
                .iter()
                .filter(|((_, u), _)| u.is_subset_of(atoms))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            h_part: self
                .h_part
                .iter()
                .filter(|(u, _)| u.is_subset_of(atoms))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// `self ⊇ other` as partial functions.
    pub fn extends(&self, other: &Solution) -> bool {
        other.g_part.iter().all(|(k, v)| self.g_part.get(k) == Some(v))
            && other.h_part.iter().all(|(k, v)| self.h_part.get(k) == Some(v))
    }

    /// The first point where `self` and `other` are both defined and differ.
    pub fn conflict_with(&self, other: &Solution) -> Option<String> {
        for (k, v) in &other.g_part {
            if let Some(w) = self.g_part.get(k) {
                if w != v {
                    return Some(format!("f({}, {{{}}}) is {} and {}", k.0, k.1, w.offset, v.offset));
                }
            }
        }
        for (k, v) in &other.h_part {
            if let Some(w) = self.h_part.get(k) {
                if w != v {
                    return Some(format!("f({{{k}}}) is {} and {}", w.vec, v.vec));
                }
            }
        }
        None
    }

    /// Whether the domain is exactly `ω × [atoms]^k ∪ [atoms]^k`.
    pub fn is_total_on(&self, m: &TwistedModel, atoms: &[Atom]) -> bool {
        let faces = m.universe().all_faces(atoms);
        self.h_part.len() == faces.len()
            && self.g_part.len() == faces.len() * m.levels()
            && faces.iter().all(|u| {
                self.h_part.contains_key(u)
                    && (0..m.levels()).all(|l| self.g_part.contains_key(&(l, u.clone())))
            })
    }

    /// Whether the domain is every point of the model.
    pub fn is_total(&self, m: &TwistedModel) -> bool {
        self.is_total_on(m, m.universe().atoms())
    }

    /// Checks that every assigned element lies in the right torsor of `m`.
    pub fn check_elements(&self, m: &TwistedModel) -> Result<(), SolveError> {
        for ((l, u), x) in &self.g_part {
            if x.level != *l || &x.face != u || !m.in_g_b(*l, u, &Element::G(x.clone())) {
                return Err(SolveError::Foreign(format!("f({l}, {{{u}}}) = {}", Element::G(x.clone()))));
            }
        }
        for (u, x) in &self.h_part {
            if &x.face != u || !m.in_h_b(u, &Element::H(x.clone())) {
                return Err(SolveError::Foreign(format!("f({{{u}}}) = {}", Element::H(x.clone()))));
            }
        }
        Ok(())
    }
}

/// Checks every `Q_l` constraint whose points all lie in the domain of `f`.
/// Returns the first violated one in (cell, h-face, level) order, or `None`.
pub fn is_solution(m: &TwistedModel, f: &Solution) -> Result<Option<Violation>, SolveError> {
    f.check_elements(m)?;
    let mut atoms: Vec<Atom> = f.faces().flat_map(|u| u.atoms().iter().copied()).collect();
    atoms.sort_unstable();
    atoms.dedup();
    Ok(first_violation(m, f, &m.universe().all_cells(&atoms)))
}

/// [`is_solution`] restricted to cells inside `scope`; the domain of `f`
/// must lie inside the scope.
pub fn is_solution_within(
    m: &TwistedModel,
    f: &Solution,
    scope: &[Atom],
) -> Result<Option<Violation>, SolveError> {
    f.check_elements(m)?;
    if let Some(u) = f.faces().find(|u| !u.is_subset_of(scope)) {
        return Err(SolveError::OutOfScope(format!("{{{u}}}")));
    }
    Ok(first_violation(m, f, &m.universe().all_cells(scope)))
}

fn first_violation(m: &TwistedModel, f: &Solution, cells: &[Cell]) -> Option<Violation> {
    for cell in cells {
        let faces = faces_of(cell);
        for w in &faces {
            let Some(h) = f.h(w) else { continue };
            for l in 0..m.levels() {
                let mut offsets = Vec::with_capacity(faces.len() - 1);
                for u in faces.iter().filter(|u| *u != w) {
                    match f.g(l, u) {
                        Some(x) => offsets.push(&x.offset),
                        None => break,
                    }
                }
                if offsets.len() + 1 != faces.len() {
                    continue;
                }
                let inst = m.q_instance(l, cell, w).expect("cell and face come from the universe");
                if !inst.eval(&offsets, &h.vec) {
                    return Some(Violation {
                        level: l,
                        cell: cell.clone(),
                        h_face: w.clone(),
                    });
                }
            }
        }
    }
    None
}

/// Raises [`SolveError::Invalid`] unless `f` is a solution.
pub fn require_solution(m: &TwistedModel, f: &Solution) -> Result<(), SolveError> {
    match is_solution(m, f)? {
        None => Ok(()),
        Some(v) => Err(SolveError::Invalid(v)),
    }
}
