//! Growing solutions: greedy extension, amalgamation of compatible systems,
//! extension by one atom and pullback along embeddings.

use std::collections::BTreeMap;

use super::{is_solution_within, require_solution, Solution, SolveError};
use crate::model::{Embedding, TwistedModel};
use crate::universe::{faces_of, subsets, Atom};

/// Extends `f` to every point over `scope`: missing h-points get the
/// coset representative, then missing g-points are assigned with levels
/// outer and faces lexicographic inner. Each new offset is zero except at
/// the h-faces of constraints it completes, where the bit is chosen to make
/// the constraint hold.
pub fn greedy_fill(m: &TwistedModel, f: &Solution, scope: &[Atom]) -> Result<Solution, SolveError> {
    let u = m.universe();
    u.check_atoms(scope).map_err(crate::model::ModelError::from)?;
    let mut scope = scope.to_vec();
    scope.sort_unstable();
    scope.dedup();
    if let Some(v) = is_solution_within(m, f, &scope)? {
        return Err(SolveError::Invalid(v));
    }
    let faces = u.all_faces(&scope);
    let mut out = f.clone();
    for face in &faces {
        if out.h(face).is_none() {
            out.set_h(m.h_base(face)?);
        }
    }
    check_vacuity(m, f, &out, &scope)?;

    for l in 0..m.levels() {
        for face in &faces {
            if out.g(l, face).is_some() {
                continue;
            }
            let mut x = m.g_zero(l, face);
            for cell in u.cells_containing(face, &scope) {
                let cell_faces = faces_of(&cell);
                for w in cell_faces.iter().filter(|w| *w != face) {
                    // Only constraints this point completes.
                    let mut others = Vec::with_capacity(cell_faces.len() - 1);
                    for v in cell_faces.iter().filter(|v| *v != w) {
                        if v == face {
                            others.push(&x.offset);
                        } else if let Some(y) = out.g(l, v) {
                            others.push(&y.offset);
                        }
                    }
                    if others.len() + 1 != cell_faces.len() {
                        continue;
                    }
                    let inst = m.q_instance(l, &cell, w)?;
                    let h = out.h(w).expect("h-points assigned first");
                    if !inst.eval(&others, &h.vec) {
                        let i = inst.h_index();
                        x.offset.flip(i);
                    }
                }
            }
            out.set_g(x);
        }
    }
    match is_solution_within(m, &out, &scope)? {
        None => Ok(out),
        Some(v) => Err(SolveError::Internal(format!("greedy extension produced an invalid point: {v}"))),
    }
}

/// A constraint whose g-points all predate the extension but whose h-point
/// is new could not be repaired. It never arises because such a cell has a
/// second new face.
fn check_vacuity(m: &TwistedModel, old: &Solution, filled_h: &Solution, scope: &[Atom]) -> Result<(), SolveError> {
    for cell in m.universe().all_cells(scope) {
        let faces = faces_of(&cell);
        for w in faces.iter().filter(|w| old.h(w).is_none()) {
            debug_assert!(filled_h.h(w).is_some());
            for l in 0..m.levels() {
                if faces.iter().filter(|v| *v != w).all(|v| old.g(l, v).is_some()) {
                    return Err(SolveError::Internal(format!(
                        "constraint Q_{l} on {{{cell}}} at {{{w}}} has a new h-point and no new g-point"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Extends an `A`-solution to a `B`-solution for `A ⊆ B`.
pub fn greedy_extend(m: &TwistedModel, f: &Solution, a: &[Atom], b: &[Atom]) -> Result<Solution, SolveError> {
    if let Some(x) = a.iter().find(|x| !b.contains(x)) {
        return Err(SolveError::OutOfScope(format!("atom {x} of A is not in B")));
    }
    require_total_on(m, f, a)?;
    greedy_fill(m, f, b)
}

fn require_total_on(m: &TwistedModel, f: &Solution, atoms: &[Atom]) -> Result<(), SolveError> {
    if f.is_total_on(m, atoms) {
        Ok(())
    } else {
        Err(SolveError::OutOfScope(format!(
            "domain is not every point over {{{}}}",
            atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
        )))
    }
}

/// A compatible family of solutions indexed by the proper subsets of the
/// extras: `parts(s)` lives on `base ∪ {extras[t] : t ∈ s}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemOfSolutions {
    base: Vec<Atom>,
    extras: Vec<Atom>,
    parts: BTreeMap<Vec<usize>, Solution>,
}

impl SystemOfSolutions {
    /// Checks the shape only: distinct atoms and one part per proper subset
    /// (keys sorted).
    pub fn new(
        base: Vec<Atom>,
        extras: Vec<Atom>,
        parts: BTreeMap<Vec<usize>, Solution>,
    ) -> Result<Self, SolveError> {
        let mut all: Vec<Atom> = base.iter().chain(&extras).copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(SolveError::Refused("base and extras must be distinct atoms".into()));
        }
        let expected = proper_subsets(extras.len());
        if parts.len() != expected.len() || expected.iter().any(|s| !parts.contains_key(s)) {
            return Err(SolveError::Refused(format!(
                "a system over {} extras needs exactly the {} proper subsets as keys",
                extras.len(),
                expected.len()
            )));
        }
        Ok(Self { base, extras, parts })
    }

    /// The system of restrictions of one solution.
    pub fn restrictions_of(f: &Solution, base: Vec<Atom>, extras: Vec<Atom>) -> Result<Self, SolveError> {
        let parts = proper_subsets(extras.len())
            .into_iter()
            .map(|s| {
                let atoms = atoms_of(&base, &extras, &s);
                (s, f.restrict(&atoms))
            })
            .collect();
        Self::new(base, extras, parts)
    }

    pub fn base(&self) -> &[Atom] {
        &self.base
    }

    pub fn extras(&self) -> &[Atom] {
        &self.extras
    }

    pub fn parts(&self) -> &BTreeMap<Vec<usize>, Solution> {
        &self.parts
    }

    pub fn part(&self, s: &[usize]) -> Option<&Solution> {
        self.parts.get(s)
    }

    /// `A_s`.
    pub fn atoms_of(&self, s: &[usize]) -> Vec<Atom> {
        atoms_of(&self.base, &self.extras, s)
    }

    /// `A_∅ ∪ extras`.
    pub fn union_atoms(&self) -> Vec<Atom> {
        let all: Vec<usize> = (0..self.extras.len()).collect();
        self.atoms_of(&all)
    }
}

fn atoms_of(base: &[Atom], extras: &[Atom], s: &[usize]) -> Vec<Atom> {
    let mut out: Vec<Atom> = base.iter().copied().chain(s.iter().map(|&t| extras[t])).collect();
    out.sort_unstable();
    out
}

/// Proper subsets of `{0..n-1}` as sorted vectors, by size then lex. With
/// no extras the system still carries its base part, keyed by `∅`.
pub(crate) fn proper_subsets(n: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..n).collect();
    (0..n.max(1)).flat_map(|size| subsets(&all, size)).collect()
}

/// Glues a compatible system over `m' < k` extras into one solution on the
/// union. Points whose face contains every extra are new; any cell through
/// such a face has a second one, so the greedy fill never meets a fixed
/// constraint.
pub fn amalgamate(m: &TwistedModel, sys: &SystemOfSolutions) -> Result<Solution, SolveError> {
    let mp = sys.extras.len();
    if mp >= m.k() {
        return Err(SolveError::Refused(format!("{mp} extras with k = {}", m.k())));
    }
    for (s, part) in &sys.parts {
        let atoms = sys.atoms_of(s);
        require_total_on(m, part, &atoms)?;
        if let Some(v) = is_solution_within(m, part, &atoms)? {
            return Err(SolveError::Invalid(v));
        }
    }
    for (s, small) in &sys.parts {
        for (t, big) in &sys.parts {
            if s.len() < t.len() && s.iter().all(|x| t.contains(x)) && !big.extends(small) {
                let why = big.conflict_with(small).unwrap_or_else(|| "missing points".into());
                return Err(SolveError::Incompatible(format!("part {t:?} does not extend part {s:?}: {why}")));
            }
        }
    }
    if mp == 0 {
        return Ok(sys.parts[&Vec::new()].clone());
    }
    let mut union = Solution::new();
    for part in sys.parts.values() {
        if let Some(why) = union.conflict_with(part) {
            return Err(SolveError::Incompatible(why));
        }
        for x in part.g_part().values() {
            union.set_g(x.clone());
        }
        for x in part.h_part().values() {
            union.set_h(x.clone());
        }
    }
    greedy_fill(m, &union, &sys.union_atoms())
}

/// Extends an `A`-solution by one atom. For `k ≥ 3` this runs over the
/// atoms of `A` in order, amalgamating at each step the two-extra system
/// formed by the next atom of `A` and `b`; for `k = 2` two extras are not
/// allowed and the greedy extension is used directly.
pub fn extend_solution(m: &TwistedModel, f: &Solution, a: &[Atom], b: Atom) -> Result<Solution, SolveError> {
    let mut a = a.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.contains(&b) {
        return Err(SolveError::Refused(format!("atom {b} is already in A")));
    }
    require_total_on(m, f, &a)?;
    let with_b: Vec<Atom> = a.iter().copied().chain([b]).collect();
    if m.k() < 3 || a.is_empty() {
        return greedy_extend(m, f, &a, &with_b);
    }
    let mut g = greedy_extend(m, &Solution::new(), &[], &[b])?;
    for j in 0..a.len() {
        let base = a[..j].to_vec();
        let next: Vec<Atom> = a[..=j].to_vec();
        let parts = BTreeMap::from([
            (vec![], f.restrict(&base)),
            (vec![0], f.restrict(&next)),
            (vec![1], g),
        ]);
        let sys = SystemOfSolutions::new(base, vec![a[j], b], parts)?;
        g = amalgamate(m, &sys)?;
    }
    Ok(g)
}

/// Pulls a total target solution back to the source of an embedding: the
/// source anchors are the zero offsets, the correction from anchor to
/// `f_target(l, u)` is restricted to the source faces, and h-points are
/// copied.
pub fn pull_back(e: &Embedding, f_target: &Solution) -> Result<Solution, SolveError> {
    let (src, tgt) = (e.source(), e.target());
    if !f_target.is_total(tgt) {
        return Err(SolveError::OutOfScope("target solution is not total".into()));
    }
    require_solution(tgt, f_target)?;
    let mut out = Solution::new();
    for u in src.universe().faces() {
        out.set_h(f_target.h(u).expect("total").clone());
        for l in 0..src.levels() {
            let anchor = src.g_zero(l, u);
            let target = f_target.g(l, u).expect("total");
            let c = tgt.g_diff(&e.embed_g(&anchor), target)?;
            let d = e.restrict_offset(&c);
            out.set_g(src.g_act(&d, &anchor)?);
        }
    }
    match super::is_solution(src, &out)? {
        None => Ok(out),
        Some(v) => Err(SolveError::Internal(format!("pulled-back solution fails: {v}"))),
    }
}
