//! Coset invariants of anchor families, compared modulo difference thresholds.

mod codes;
mod ma;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::gf2::{coset_of, CutoffCoset, Gf2Error, Gf2Vec};
use crate::model::{GElem, HElem, ModelError, TwistedModel};
use crate::universe::{subsets, Atom, Cell, Face, UniverseError};

pub use codes::{parse_codes, print_codes, Code, CodeNode, CodeSet};
pub use ma::{
    boundary_adversary, build_ma, check_claim, random_adversary, recover_codes, ClaimReport,
    ColumnVote, MaModel, RecoveryReport,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvarError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("no anchor at ({level}, {{{face}}})")]
    MissingAnchor { level: usize, face: Face },
    #[error("anchor at ({level}, {{{face}}}) is not an element of that torsor")]
    BadAnchor { level: usize, face: Face },
    #[error("bad thresholds: {0}")]
    Thresholds(String),
    #[error("{0}")]
    Shape(String),
    #[error("codes file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Difference thresholds `t_0 < t_1 < …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thresholds(Vec<usize>);

impl Thresholds {
    pub fn new(t: Vec<usize>) -> Result<Self, InvarError> {
        if t.is_empty() {
            return Err(InvarError::Thresholds("empty".into()));
        }
        if t[0] == 0 {
            return Err(InvarError::Thresholds("t_0 must be positive".into()));
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(InvarError::Thresholds(format!("{t:?} is not strictly increasing")));
        }
        Ok(Self(t))
    }

    pub fn get(&self, m: usize) -> Option<usize> {
        self.0.get(m).copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Thresholds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// A computed invariant. A depth-0 map (the 0-invariant) is compared
/// exactly; a depth-m map for m > 0 carries `t_m` and two maps are
/// equivalent when fewer than `t_m` entries are inequivalent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantClass {
    Coset(CutoffCoset),
    Map {
        depth: usize,
        threshold: Option<usize>,
        entries: BTreeMap<Atom, InvariantClass>,
    },
}

impl InvariantClass {
    /// Number of entries at which two maps of the same depth and domain
    /// are inequivalent; `None` if they are not comparable that way.
    pub fn differences(&self, other: &Self) -> Option<usize> {
        match (self, other) {
            (
                InvariantClass::Map { depth: d1, entries: e1, .. },
                InvariantClass::Map { depth: d2, entries: e2, .. },
            ) if d1 == d2 && e1.keys().eq(e2.keys()) => {
                Some(e1.values().zip(e2.values()).filter(|(x, y)| !x.equivalent(y)).count())
            }
            _ => None,
        }
    }

    /// Threshold equality. Reflexive and symmetric, not transitive.
    pub fn equivalent(&self, other: &Self) -> bool {
        match (self, other) {
            (InvariantClass::Coset(x), InvariantClass::Coset(y)) => x == y,
            (InvariantClass::Map { threshold, .. }, InvariantClass::Map { threshold: t2, .. }) => {
                let Some(diff) = self.differences(other) else {
                    return false;
                };
                match threshold.max(t2) {
                    None => diff == 0,
                    Some(t) => diff < *t,
                }
            }
            _ => false,
        }
    }

    /// The same data with every depth-m threshold replaced by `th[m]`.
    pub fn retagged(&self, th: &Thresholds) -> Self {
        match self {
            InvariantClass::Coset(x) => InvariantClass::Coset(x.clone()),
            InvariantClass::Map { depth, entries, .. } => InvariantClass::Map {
                depth: *depth,
                threshold: if *depth == 0 { None } else { th.get(*depth) },
                entries: entries.iter().map(|(a, x)| (*a, x.retagged(th))).collect(),
            },
        }
    }

    pub fn depth(&self) -> Option<usize> {
        match self {
            InvariantClass::Coset(_) => None,
            InvariantClass::Map { depth, .. } => Some(*depth),
        }
    }
}

impl fmt::Display for InvariantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantClass::Coset(x) => write!(f, "{}", x.rep()),
            InvariantClass::Map { entries, .. } => {
                f.write_str("[")?;
                for (i, (a, x)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{a}:{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A partial map `(level, face) ↦ G^b(level, face)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorFamily {
    map: BTreeMap<(usize, Face), GElem>,
}

impl AnchorFamily {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero offsets at every level on the given faces.
    pub fn zero_on<'a>(m: &TwistedModel, faces: impl IntoIterator<Item = &'a Face>) -> Self {
        let mut out = Self::new();
        for face in faces {
            for l in 0..m.levels() {
                out.insert(m.g_zero(l, face));
            }
        }
        out
    }

    pub fn insert(&mut self, x: GElem) -> Option<GElem> {
        self.map.insert((x.level, x.face.clone()), x)
    }

    pub fn get(&self, level: usize, face: &Face) -> Option<&GElem> {
        self.map.get(&(level, face.clone()))
    }

    pub fn remove(&mut self, level: usize, face: &Face) -> Option<GElem> {
        self.map.remove(&(level, face.clone()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GElem> {
        self.map.values()
    }

    /// Pairs where both families are defined and disagree.
    pub fn disagreements<'a>(&'a self, other: &'a AnchorFamily) -> Vec<(&'a GElem, &'a GElem)> {
        self.map
            .iter()
            .filter_map(|(key, x)| other.map.get(key).filter(|y| *y != x).map(|y| (x, y)))
            .collect()
    }
}

fn lookup<'a>(layers: &[&'a AnchorFamily], level: usize, face: &Face) -> Option<&'a GElem> {
    layers.iter().find_map(|f| f.get(level, face))
}

fn distinct(atoms: &[Atom]) -> bool {
    let set: BTreeSet<Atom> = atoms.iter().copied().collect();
    set.len() == atoms.len()
}

/// The invariant for the chain `i_0, …, i_k` via `f`, evaluated with `y`.
pub fn invariant_k(
    m: &TwistedModel,
    chain: &[Atom],
    f: &AnchorFamily,
    y: &HElem,
) -> Result<CutoffCoset, InvarError> {
    invariant_k_layers(m, chain, &[f], y)
}

/// As [`invariant_k`], reading anchors from the first layer that has them.
pub fn invariant_k_layers(
    m: &TwistedModel,
    chain: &[Atom],
    layers: &[&AnchorFamily],
    y: &HElem,
) -> Result<CutoffCoset, InvarError> {
    let k = m.k();
    if chain.len() != k + 1 || !distinct(chain) {
        return Err(InvarError::Shape(format!(
            "a chain needs {} distinct atoms, got {chain:?}",
            k + 1
        )));
    }
    m.universe().check_atoms(chain)?;
    let cell = Cell::new(chain, k)?;
    let h_face = Face::new(&chain[1..], k)?;
    if y.face != h_face || !m.h_twist(&h_face)?.contains(&y.vec) {
        return Err(ModelError::NotInCoset { face: h_face, vec: y.vec.clone() }.into());
    }
    let mut g = m.universe().zero_levels();
    for l in 0..m.levels() {
        let inst = m.q_instance(l, &cell, &h_face)?;
        let mut offsets: Vec<&Gf2Vec> = Vec::with_capacity(k);
        for face in faces_except(&cell, &h_face) {
            let x = lookup(layers, l, &face).ok_or_else(|| InvarError::MissingAnchor {
                level: l,
                face: face.clone(),
            })?;
            if x.level != l || x.face != face || !m.is_offset(&x.offset) {
                return Err(InvarError::BadAnchor { level: l, face });
            }
            offsets.push(&x.offset);
        }
        if !inst.eval(&offsets, &y.vec) {
            g.set(l, true);
        }
    }
    Ok(coset_of(&g, m.cutoff())?)
}

fn faces_except(cell: &Cell, h_face: &Face) -> Vec<Face> {
    crate::universe::faces_of(cell).into_iter().filter(|f| f != h_face).collect()
}

/// The depth-`depth` invariant for `base`, `tail` via `f`, with nested
/// sets `nested[j]` of size `t_j`.
pub fn invariant_m(
    model: &TwistedModel,
    depth: usize,
    base: &[Atom],
    nested: &[Vec<Atom>],
    tail: &[Atom],
    f: &AnchorFamily,
    th: &Thresholds,
) -> Result<InvariantClass, InvarError> {
    invariant_m_layers(model, depth, base, nested, tail, &[f], th)
}

/// As [`invariant_m`] over layered anchors (earlier layers win).
pub fn invariant_m_layers(
    model: &TwistedModel,
    depth: usize,
    base: &[Atom],
    nested: &[Vec<Atom>],
    tail: &[Atom],
    layers: &[&AnchorFamily],
    th: &Thresholds,
) -> Result<InvariantClass, InvarError> {
    let k = model.k();
    if depth + 2 > k {
        return Err(InvarError::Shape(format!("depth {depth} exceeds k - 2 = {}", k - 2)));
    }
    if depth > 0 && th.get(depth).is_none() {
        return Err(InvarError::Thresholds(format!("no t_{depth} in {th}")));
    }
    if nested.len() != depth {
        return Err(InvarError::Shape(format!(
            "depth {depth} needs {depth} nested sets, got {}",
            nested.len()
        )));
    }
    if tail.len() != k - depth || !distinct(tail) {
        return Err(InvarError::Shape(format!(
            "tail must be {} distinct atoms, got {tail:?}",
            k - depth
        )));
    }
    if !distinct(base) || base.iter().any(|a| tail.contains(a)) {
        return Err(InvarError::Shape("base must be distinct atoms outside the tail".into()));
    }
    for (j, set) in nested.iter().enumerate() {
        if Some(set.len()) != th.get(j) {
            return Err(InvarError::Shape(format!(
                "I_{j} has {} atoms, expected t_{j} = {:?}",
                set.len(),
                th.get(j)
            )));
        }
        let outer: &[Atom] = nested.get(j + 1).map_or(base, |v| v.as_slice());
        if !set.iter().all(|a| outer.contains(a)) {
            return Err(InvarError::Shape(format!("I_{j} is not contained in the next set")));
        }
    }
    model.universe().check_atoms(base)?;
    model.universe().check_atoms(tail)?;
    let mut all: Vec<Atom> = base.iter().chain(tail).copied().collect();
    all.sort_unstable();
    for face in subsets(&all, k) {
        if tail.iter().all(|a| face.contains(a)) {
            continue;
        }
        let face = Face::new(&face, k)?;
        for l in 0..model.levels() {
            if lookup(layers, l, &face).is_none() {
                return Err(InvarError::MissingAnchor { level: l, face });
            }
        }
    }
    invariant_rec(model, depth, base, nested, tail, layers, th)
}

fn invariant_rec(
    model: &TwistedModel,
    depth: usize,
    base: &[Atom],
    nested: &[Vec<Atom>],
    tail: &[Atom],
    layers: &[&AnchorFamily],
    th: &Thresholds,
) -> Result<InvariantClass, InvarError> {
    let k = model.k();
    let mut entries = BTreeMap::new();
    if depth == 0 {
        let h_face = Face::new(tail, k)?;
        let y = model.h_base(&h_face)?;
        let mut chain = Vec::with_capacity(k + 1);
        for &a in base {
            chain.clear();
            chain.push(a);
            chain.extend_from_slice(tail);
            let x = invariant_k_layers(model, &chain, layers, &y)?;
            entries.insert(a, InvariantClass::Coset(x));
        }
        return Ok(InvariantClass::Map { depth: 0, threshold: None, entries });
    }
    let inner = &nested[depth - 1];
    // f′: zero offsets wherever f is undefined on [I_{m-1} ∪ tail]^k.
    let mut span: Vec<Atom> = inner.iter().chain(tail).copied().collect();
    span.sort_unstable();
    let mut ext = AnchorFamily::new();
    for face in subsets(&span, k) {
        let face = Face::new(&face, k)?;
        for l in 0..model.levels() {
            if lookup(layers, l, &face).is_none() {
                ext.insert(model.g_zero(l, &face));
            }
        }
    }
    let mut stacked: Vec<&AnchorFamily> = layers.to_vec();
    stacked.push(&ext);
    let mut sub_tail = Vec::with_capacity(tail.len() + 1);
    for &a in base.iter().filter(|a| !inner.contains(a)) {
        sub_tail.clear();
        sub_tail.push(a);
        sub_tail.extend_from_slice(tail);
        let x = invariant_rec(model, depth - 1, inner, &nested[..depth - 1], &sub_tail, &stacked, th)?;
        entries.insert(a, x);
    }
    Ok(InvariantClass::Map { depth, threshold: th.get(depth), entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::Universe;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn coset(bits: &str) -> InvariantClass {
        let u = Universe::with_atom_count(3, 2, bits.len(), 1).unwrap();
        let v = Gf2Vec::parse_bitstring(u.level_tag(), u.levels(), bits).unwrap();
        InvariantClass::Coset(coset_of(&v, 1).unwrap())
    }

    fn map(depth: usize, t: Option<usize>, xs: &[&str]) -> InvariantClass {
        InvariantClass::Map {
            depth,
            threshold: t,
            entries: xs.iter().enumerate().map(|(i, b)| (Atom(i as u32), coset(b))).collect(),
        }
    }

    #[test]
    fn thresholds_must_increase() {
        assert!(Thresholds::new(vec![2, 3]).is_ok());
        assert!(Thresholds::new(vec![3, 3]).is_err());
        assert!(Thresholds::new(vec![0, 1]).is_err());
        assert!(Thresholds::new(vec![]).is_err());
    }

    #[test]
    fn depth_zero_maps_compare_exactly() {
        let a = map(0, None, &["000", "010"]);
        let b = map(0, None, &["000", "110"]);
        let c = map(0, None, &["000", "011"]);
        assert!(a.equivalent(&b));
        assert!(!a.equivalent(&c));
        assert_eq!(a.differences(&c), Some(1));
    }

    #[test]
    fn threshold_counts_inequivalent_entries() {
        let a = map(1, Some(2), &["000", "010", "001"]);
        let b = map(1, Some(2), &["000", "011", "001"]);
        let c = map(1, Some(2), &["001", "011", "001"]);
        assert!(a.equivalent(&b));
        assert!(!a.equivalent(&c));
        assert!(!a.equivalent(&map(1, Some(2), &["000", "010"])));
    }

    #[test]
    fn zero_anchors_read_off_the_twist() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = TwistedModel::random_canonical(Arc::new(Universe::with_atom_count(4, 2, 4, 2).unwrap()), &mut rng);
        let f = AnchorFamily::zero_on(&m, m.universe().faces());
        let chain = [Atom(3), Atom(0), Atom(2)];
        let h = Face::new(&chain[1..], 2).unwrap();
        let x = invariant_k(&m, &chain, &f, &m.h_base(&h).unwrap()).unwrap();
        assert_eq!(&x, m.h_twist(&h).unwrap());
    }

    #[test]
    fn missing_anchor_is_an_error() {
        let m = TwistedModel::standard(Arc::new(Universe::with_atom_count(3, 2, 2, 1).unwrap()));
        let mut f = AnchorFamily::zero_on(&m, m.universe().faces());
        f.remove(1, &Face::parse("0,1", 2).unwrap());
        let y = m.h_base(&Face::parse("1,2", 2).unwrap()).unwrap();
        let err = invariant_k(&m, &[Atom(0), Atom(1), Atom(2)], &f, &y).unwrap_err();
        assert!(matches!(err, InvarError::MissingAnchor { level: 1, .. }));
    }
}
