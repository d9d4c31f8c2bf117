//! Atoms, the face family `[I]^k`, levels, and the `(k+1)`-element cells
//! whose faces carry the parity constraints.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::gf2::{FamilyTag, Gf2Error, Gf2Vec, IndexFamily};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UniverseError {
    #[error("arity k must be at least 2, got {0}")]
    ArityTooSmall(usize),
    #[error("need at least k = {k} atoms, got {atoms}")]
    TooFewAtoms { k: usize, atoms: usize },
    #[error("level count must be at least 1")]
    NoLevels,
    #[error("cutoff must satisfy 0 < c <= L, got c = {cutoff}, L = {levels}")]
    BadCutoff { cutoff: usize, levels: usize },
    #[error("duplicate atom {0}")]
    DuplicateAtom(Atom),
    #[error("atom {0} is not in the universe")]
    UnknownAtom(Atom),
    #[error("expected {expected} distinct atoms, got {got:?}")]
    WrongSize { expected: usize, got: Vec<Atom> },
    #[error("cannot parse atom set {0:?}")]
    Parse(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Atom(pub u32);

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn canonical_atoms(atoms: &[Atom], expected: usize) -> Result<Vec<Atom>, UniverseError> {
    let mut v = atoms.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() != atoms.len() || v.len() != expected {
        return Err(UniverseError::WrongSize {
            expected,
            got: atoms.to_vec(),
        });
    }
    Ok(v)
}

fn fmt_atoms(atoms: &[Atom], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

fn parse_atoms(s: &str) -> Result<Vec<Atom>, UniverseError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map(Atom)
                .map_err(|_| UniverseError::Parse(s.to_string()))
        })
        .collect()
}

/// Inline storage covers every arity used in practice without allocating.
type AtomSet = SmallVec<[Atom; 6]>;

/// A `k`-element atom set, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face(AtomSet);

/// A `(k+1)`-element atom set, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell(AtomSet);

impl Face {
    pub fn new(atoms: &[Atom], k: usize) -> Result<Self, UniverseError> {
        canonical_atoms(atoms, k).map(|v| Face(AtomSet::from_slice(&v)))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn contains(&self, a: Atom) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    pub fn is_subset_of(&self, set: &[Atom]) -> bool {
        self.0.iter().all(|a| set.contains(a))
    }

    /// Parse `"1,2,3"` into a face of arity `k`.
    pub fn parse(s: &str, k: usize) -> Result<Self, UniverseError> {
        Face::new(&parse_atoms(s)?, k)
    }
}

impl Cell {
    pub fn new(atoms: &[Atom], k: usize) -> Result<Self, UniverseError> {
        canonical_atoms(atoms, k + 1).map(|v| Cell(AtomSet::from_slice(&v)))
    }

    pub(crate) fn from_sorted(atoms: &[Atom]) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0] < w[1]));
        Cell(AtomSet::from_slice(atoms))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn contains(&self, a: Atom) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    /// The face obtained by dropping `a`.
    pub fn without(&self, a: Atom) -> Option<Face> {
        let pos = self.0.binary_search(&a).ok()?;
        let mut rest = self.0.clone();
        rest.remove(pos);
        Some(Face(rest))
    }

    /// The unique atom of `self` not in `face`, if `face` is one of its faces.
    pub fn apex_over(&self, face: &Face) -> Option<Atom> {
        if face.0.len() + 1 != self.0.len() || !face.0.iter().all(|a| self.contains(*a)) {
            return None;
        }
        self.0.iter().copied().find(|a| !face.contains(*a))
    }

    pub fn has_face(&self, face: &Face) -> bool {
        self.apex_over(face).is_some()
    }

    /// The cell `face ∪ {a}`.
    pub fn from_face(face: &Face, a: Atom) -> Option<Cell> {
        if face.contains(a) {
            return None;
        }
        let mut v = face.0.clone();
        let pos = v.binary_search(&a).unwrap_err();
        v.insert(pos, a);
        Some(Cell(v))
    }

    pub fn parse(s: &str, k: usize) -> Result<Self, UniverseError> {
        Cell::new(&parse_atoms(s)?, k)
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_atoms(&self.0, f)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_atoms(&self.0, f)
    }
}

impl FromStr for Atom {
    type Err = UniverseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .parse::<u32>()
            .map(Atom)
            .map_err(|_| UniverseError::Parse(s.to_string()))
    }
}

/// All `size`-element subsets of `items` (which must be sorted), in
/// lexicographic order.
pub fn subsets<T: Copy>(items: &[T], size: usize) -> Vec<Vec<T>> {
    let n = items.len();
    if size > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // rightmost index that can still move
        let Some(pos) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Binomial coefficient, saturating.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// The combinatorial substrate of a model: atoms, arity `k`, `L` levels and
/// the support cutoff `c`.
#[derive(Debug, Clone)]
pub struct Universe {
    atoms: Vec<Atom>,
    labels: BTreeMap<Atom, String>,
    k: usize,
    levels: usize,
    cutoff: usize,
    faces: IndexFamily<Face>,
    level_family: IndexFamily<usize>,
    /// `choose[n][r]` for `n <= |I|`, `r <= k`, used to rank faces.
    choose: Vec<Vec<usize>>,
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
            && self.k == other.k
            && self.levels == other.levels
            && self.cutoff == other.cutoff
            && self.labels == other.labels
    }
}

impl Eq for Universe {}

impl Universe {
    pub fn new(
        atoms: impl IntoIterator<Item = Atom>,
        k: usize,
        levels: usize,
        cutoff: usize,
    ) -> Result<Self, UniverseError> {
        if k < 2 {
            return Err(UniverseError::ArityTooSmall(k));
        }
        if levels == 0 {
            return Err(UniverseError::NoLevels);
        }
        if cutoff == 0 || cutoff > levels {
            return Err(UniverseError::BadCutoff { cutoff, levels });
        }
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        atoms.sort_unstable();
        if let Some(w) = atoms.windows(2).find(|w| w[0] == w[1]) {
            return Err(UniverseError::DuplicateAtom(w[0]));
        }
        if atoms.len() < k {
            return Err(UniverseError::TooFewAtoms {
                k,
                atoms: atoms.len(),
            });
        }
        let faces = IndexFamily::new(
            "faces",
            subsets(&atoms, k).into_iter().map(|v| Face(AtomSet::from_slice(&v))).collect(),
        )?;
        let level_family = IndexFamily::new("levels", (0..levels).collect())?;
        let choose = (0..=atoms.len())
            .map(|n| (0..=k).map(|r| binomial(n, r) as usize).collect())
            .collect();
        Ok(Self {
            atoms,
            labels: BTreeMap::new(),
            k,
            levels,
            cutoff,
            faces,
            level_family,
            choose,
        })
    }

    /// Atoms `0..n`.
    pub fn with_atom_count(
        n: usize,
        k: usize,
        levels: usize,
        cutoff: usize,
    ) -> Result<Self, UniverseError> {
        Self::new((0..n as u32).map(Atom), k, levels, cutoff)
    }

    pub fn with_labels(mut self, labels: BTreeMap<Atom, String>) -> Result<Self, UniverseError> {
        if let Some(a) = labels.keys().find(|a| !self.has_atom(**a)) {
            return Err(UniverseError::UnknownAtom(*a));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn labels(&self) -> &BTreeMap<Atom, String> {
        &self.labels
    }

    pub fn label(&self, a: Atom) -> Option<&str> {
        self.labels.get(&a).map(String::as_str)
    }

    pub fn has_atom(&self, a: Atom) -> bool {
        self.atoms.binary_search(&a).is_ok()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// All faces in lexicographic order; position = bit index in offsets.
    pub fn faces(&self) -> &[Face] {
        self.faces.keys()
    }

    pub fn face_family(&self) -> &IndexFamily<Face> {
        &self.faces
    }

    pub fn level_family(&self) -> &IndexFamily<usize> {
        &self.level_family
    }

    /// Lexicographic rank of the face among `[I]^k`, computed directly.
    pub fn face_index(&self, face: &Face) -> Option<usize> {
        let (n, k) = (self.atoms.len(), self.k);
        if face.0.len() != k {
            return None;
        }
        let mut tail = 0;
        for (i, a) in face.0.iter().enumerate() {
            let c = self.atoms.binary_search(a).ok()?;
            tail += self.choose[n - 1 - c][k - i];
        }
        Some(self.choose[n][k] - 1 - tail)
    }

    pub fn face_tag(&self) -> FamilyTag {
        self.faces.tag()
    }

    pub fn level_tag(&self) -> FamilyTag {
        self.level_family.tag()
    }

    /// Zero vector over `K`, the home of `G^a` and of offsets.
    pub fn zero_offset(&self) -> Gf2Vec {
        self.faces.zero()
    }

    /// Zero vector over the levels.
    pub fn zero_levels(&self) -> Gf2Vec {
        self.level_family.zero()
    }

    pub fn face(&self, atoms: &[Atom]) -> Result<Face, UniverseError> {
        let f = Face::new(atoms, self.k)?;
        self.check_atoms(f.atoms())?;
        Ok(f)
    }

    pub fn cell(&self, atoms: &[Atom]) -> Result<Cell, UniverseError> {
        let c = Cell::new(atoms, self.k)?;
        self.check_atoms(c.atoms())?;
        Ok(c)
    }

    pub fn check_atoms(&self, atoms: &[Atom]) -> Result<(), UniverseError> {
        match atoms.iter().find(|a| !self.has_atom(**a)) {
            Some(a) => Err(UniverseError::UnknownAtom(*a)),
            None => Ok(()),
        }
    }

    /// Sorted, deduplicated copy of `within`.
    fn normalize(within: &[Atom]) -> Vec<Atom> {
        let mut w = within.to_vec();
        w.sort_unstable();
        w.dedup();
        w
    }

    /// All `k`-subsets of `within`, lexicographic.
    pub fn all_faces(&self, within: &[Atom]) -> Vec<Face> {
        subsets(&Self::normalize(within), self.k)
            .into_iter()
            .map(|v| Face(AtomSet::from_slice(&v)))
            .collect()
    }

    /// All `(k+1)`-subsets of `within`, lexicographic.
    pub fn all_cells(&self, within: &[Atom]) -> Vec<Cell> {
        subsets(&Self::normalize(within), self.k + 1)
            .into_iter()
            .map(|v| Cell(AtomSet::from_slice(&v)))
            .collect()
    }

    pub fn cells(&self) -> Vec<Cell> {
        self.all_cells(&self.atoms)
    }

    /// Cells `u ∪ {a}` for every atom `a ∈ within \ u`, ordered by `a`.
    pub fn cells_containing(&self, u: &Face, within: &[Atom]) -> Vec<Cell> {
        Self::normalize(within)
            .into_iter()
            .filter_map(|a| Cell::from_face(u, a))
            .collect()
    }
}

/// The `k+1` faces of a cell, in lexicographic order (each drops one atom,
/// last atom dropped first).
pub fn faces_of(cell: &Cell) -> Vec<Face> {
    let atoms = cell.atoms();
    (0..atoms.len())
        .rev()
        .map(|skip| {
            Face(
                atoms
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &a)| a)
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_index_is_lex_position() {
        for (n, k) in [(2, 2), (4, 2), (5, 3), (7, 4)] {
            let ids: Vec<Atom> = (0..n as u32).map(|i| Atom(3 * i + 1)).collect();
            let u = Universe::new(ids, k, 2, 1).unwrap();
            for (i, f) in u.faces().iter().enumerate() {
                assert_eq!(u.face_index(f), Some(i));
            }
            let stray = Face::new(&[Atom(0), Atom(1)], 2).unwrap();
            assert_eq!(u.face_index(&stray), None);
        }
    }
    use proptest::prelude::*;

    fn atoms(ids: &[u32]) -> Vec<Atom> {
        ids.iter().copied().map(Atom).collect()
    }

    #[test]
    fn faces_of_examples() {
        let cell = Cell::new(&atoms(&[1, 2, 3]), 2).unwrap();
        let fs: Vec<String> = faces_of(&cell).iter().map(|f| f.to_string()).collect();
        assert_eq!(fs, vec!["1,2", "1,3", "2,3"]);

        let cell = Cell::new(&atoms(&[0, 1, 2, 3]), 3).unwrap();
        let fs = faces_of(&cell);
        assert_eq!(fs.len(), 4);
        for u in &fs {
            let apex = cell.apex_over(u).unwrap();
            assert_eq!(Cell::from_face(u, apex).unwrap(), cell);
        }
    }

    #[test]
    fn cells_containing_examples() {
        let u = Universe::with_atom_count(5, 2, 2, 1).unwrap();
        let face = u.face(&atoms(&[1, 2])).unwrap();
        let cs: Vec<String> = u
            .cells_containing(&face, &atoms(&[1, 2, 3, 4]))
            .iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(cs, vec!["1,2,3", "1,2,4"]);
        assert!(u.cells_containing(&face, &atoms(&[1, 2])).is_empty());
    }

    #[test]
    fn all_faces_examples() {
        let u = Universe::with_atom_count(4, 2, 2, 1).unwrap();
        assert_eq!(u.all_faces(&atoms(&[1, 2, 3])).len(), 3);
        assert!(u.all_faces(&atoms(&[1])).is_empty());
        assert_eq!(u.faces().len(), 6);
        assert_eq!(u.faces()[0].to_string(), "0,1");
        assert_eq!(u.faces()[5].to_string(), "2,3");
    }

    #[test]
    fn universe_validation() {
        assert_eq!(
            Universe::with_atom_count(3, 1, 2, 1).unwrap_err(),
            UniverseError::ArityTooSmall(1)
        );
        assert!(matches!(
            Universe::with_atom_count(1, 2, 2, 1),
            Err(UniverseError::TooFewAtoms { .. })
        ));
        assert!(Universe::with_atom_count(3, 2, 0, 1).is_err());
        assert!(Universe::with_atom_count(3, 2, 2, 0).is_err());
        assert!(Universe::with_atom_count(3, 2, 2, 3).is_err());
        assert!(Universe::new(atoms(&[1, 1, 2]), 2, 2, 1).is_err());
        let u = Universe::with_atom_count(3, 2, 2, 1).unwrap();
        assert!(u.face(&atoms(&[0, 7])).is_err());
        assert!(u.face(&atoms(&[0, 0])).is_err());
    }

    #[test]
    fn face_parse_round_trip() {
        let f = Face::parse("3,1", 2).unwrap();
        assert_eq!(f.to_string(), "1,3");
        assert!(Face::parse("1,x", 2).is_err());
        assert!(Cell::parse("1,2", 2).is_err());
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(44, 2), 946);
        assert_eq!(binomial(3, 4), 0);
    }

    proptest! {
        #[test]
        fn subset_counts(n in 0usize..9, r in 0usize..5) {
            let items: Vec<u32> = (0..n as u32).collect();
            let s = subsets(&items, r);
            prop_assert_eq!(s.len() as u128, binomial(n, r));
            let mut sorted = s.clone();
            sorted.sort();
            prop_assert_eq!(sorted, s);
        }

        #[test]
        fn cells_containing_round_trips(n in 3usize..8, k in 2usize..4, pick in any::<u64>()) {
            prop_assume!(n >= k);
            let u = Universe::with_atom_count(n, k, 1, 1).unwrap();
            let face = u.faces()[(pick as usize) % u.faces().len()].clone();
            let within: Vec<Atom> = u.atoms().iter().copied()
                .filter(|a| face.contains(*a) || (pick >> (a.0 % 64)) & 1 == 1)
                .collect();
            let cells = u.cells_containing(&face, &within);
            prop_assert_eq!(cells.len(), within.len() - k);
            for c in &cells {
                prop_assert!(faces_of(c).contains(&face));
                prop_assert_eq!(faces_of(c).len(), k + 1);
            }
        }
    }
}
