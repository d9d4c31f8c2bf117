//! Exact linear algebra over GF(2).
//!
//! Vectors carry the tag of the index family they are indexed by, so adding
//! a level-indexed vector to a face-indexed one is caught instead of silently
//! XOR-ing unrelated bits. Bit `i` of a vector is the coordinate of the
//! family's `i`-th key.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use smallvec::SmallVec;
use thiserror::Error;

/// Default variable bound for [`brute_force_solve`].
pub const DEFAULT_BRUTE_BOUND: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("index family mismatch: {left:?} (len {left_len}) vs {right:?} (len {right_len})")]
    FamilyMismatch {
        left: FamilyTag,
        left_len: usize,
        right: FamilyTag,
        right_len: usize,
    },
    #[error("duplicate key at position {0} in index family")]
    DuplicateKey(usize),
    #[error("key not in index family")]
    UnknownKey,
    #[error("row {row} references variable {var} but the system has {num_vars} variables")]
    VariableOutOfRange { row: usize, var: usize, num_vars: usize },
    #[error("brute force refused: {num_vars} variables exceed the bound {bound}")]
    BoundExceeded { num_vars: usize, bound: usize },
    #[error("cutoff {cutoff} exceeds vector length {len}")]
    CutoffTooLarge { cutoff: usize, len: usize },
    #[error("bad bitstring {0:?}")]
    BadBitstring(String),
    #[error("bitstring has length {got}, expected {expected}")]
    BitstringLength { got: usize, expected: usize },
}

/// Fingerprint of an ordered index family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyTag(pub u64);

impl FamilyTag {
    /// Tag for a family that is just `0..len` inside a named domain.
    pub fn anonymous(domain: &str, len: usize) -> Self {
        let mut h = DefaultHasher::new();
        domain.hash(&mut h);
        len.hash(&mut h);
        FamilyTag(h.finish())
    }
}

/// An ordered finite set of keys; key order assigns bit positions.
#[derive(Debug, Clone)]
pub struct IndexFamily<K> {
    keys: Vec<K>,
    positions: HashMap<K, usize>,
    tag: FamilyTag,
}

impl<K: Clone + Eq + Hash> IndexFamily<K> {
    pub fn new(domain: &str, keys: Vec<K>) -> Result<Self, Gf2Error> {
        let mut positions = HashMap::with_capacity(keys.len());
        let mut h = DefaultHasher::new();
        domain.hash(&mut h);
        keys.len().hash(&mut h);
        for (i, k) in keys.iter().enumerate() {
            if positions.insert(k.clone(), i).is_some() {
                return Err(Gf2Error::DuplicateKey(i));
            }
            k.hash(&mut h);
        }
        Ok(Self {
            keys,
            positions,
            tag: FamilyTag(h.finish()),
        })
    }

    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }

    pub fn key(&self, index: usize) -> &K {
        &self.keys[index]
    }

    pub fn position(&self, key: &K) -> Option<usize> {
        self.positions.get(key).copied()
    }

    pub fn zero(&self) -> Gf2Vec {
        Gf2Vec::zeros(self.tag, self.keys.len())
    }

    /// The vector whose support is exactly `keys`.
    pub fn vec_from_keys<'a, I>(&self, keys: I) -> Result<Gf2Vec, Gf2Error>
    where
        I: IntoIterator<Item = &'a K>,
        K: 'a,
    {
        let mut v = self.zero();
        for k in keys {
            let i = self.position(k).ok_or(Gf2Error::UnknownKey)?;
            v.set(i, true);
        }
        Ok(v)
    }

    pub fn parse_bitstring(&self, s: &str) -> Result<Gf2Vec, Gf2Error> {
        Gf2Vec::parse_bitstring(self.tag, self.keys.len(), s)
    }
}

impl<K: PartialEq> PartialEq for IndexFamily<K> {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag && self.keys == other.keys
    }
}

impl<K: Eq> Eq for IndexFamily<K> {}

type Words = SmallVec<[u64; 2]>;

/// A vector over GF(2) indexed by a tagged family.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gf2Vec {
    family: FamilyTag,
    len: usize,
    words: Words,
}

impl Gf2Vec {
    pub fn zeros(family: FamilyTag, len: usize) -> Self {
        Self {
            family,
            len,
            words: SmallVec::from_elem(0, len.div_ceil(64)),
        }
    }

    pub fn from_bits(family: FamilyTag, bits: &[bool]) -> Self {
        let mut v = Self::zeros(family, bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Vector whose bit `i` is bit `i` of `value`. Bits beyond `len` are dropped.
    pub fn from_u128(family: FamilyTag, len: usize, value: u128) -> Self {
        let mut v = Self::zeros(family, len);
        if let Some(w) = v.words.get_mut(0) {
            *w = value as u64;
        }
        if let Some(w) = v.words.get_mut(1) {
            *w = (value >> 64) as u64;
        }
        v.trim();
        v
    }

    fn trim(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positions of set bits in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + b)
            })
        })
    }

    fn check_same_family(&self, other: &Self) -> Result<(), Gf2Error> {
        if self.family != other.family || self.len != other.len {
            return Err(Gf2Error::FamilyMismatch {
                left: self.family,
                left_len: self.len,
                right: other.family,
                right_len: other.len,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, Gf2Error> {
        let mut out = self.clone();
        out.xor_in_place(other)?;
        Ok(out)
    }

    pub fn xor_in_place(&mut self, other: &Self) -> Result<(), Gf2Error> {
        self.check_same_family(other)?;
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a ^= b;
        }
        Ok(())
    }

    /// `self == a + b`, without allocating.
    pub fn is_sum(&self, a: &Self, b: &Self) -> bool {
        self.check_same_family(a).is_ok()
            && self.check_same_family(b).is_ok()
            && self
                .words
                .iter()
                .zip(a.words.iter().zip(b.words.iter()))
                .all(|(s, (x, y))| *s == x ^ y)
    }

    /// Copy with every coordinate below `cutoff` cleared.
    pub fn clear_below(&self, cutoff: usize) -> Self {
        let mut out = self.clone();
        for i in 0..cutoff.min(self.len) {
            out.set(i, false);
        }
        out
    }

    /// True when every set bit lies below `cutoff`.
    pub fn supported_below(&self, cutoff: usize) -> bool {
        self.ones().all(|i| i < cutoff)
    }

    /// Same bits, different family tag. Used when re-indexing between
    /// families of equal length with identical key order.
    pub fn retagged(&self, family: FamilyTag) -> Self {
        Self {
            family,
            len: self.len,
            words: self.words.clone(),
        }
    }

    /// `'0'`/`'1'` characters, bit 0 first.
    pub fn to_bitstring(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn parse_bitstring(family: FamilyTag, len: usize, s: &str) -> Result<Self, Gf2Error> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != len {
            return Err(Gf2Error::BitstringLength {
                got: chars.len(),
                expected: len,
            });
        }
        let mut v = Self::zeros(family, len);
        for (i, ch) in chars.into_iter().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(Gf2Error::BadBitstring(s.to_string())),
            }
        }
        Ok(v)
    }
}

impl fmt::Debug for Gf2Vec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Vec({})", self.to_bitstring())
    }
}

impl fmt::Display for Gf2Vec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Componentwise XOR of two vectors over the same family.
pub fn vec_add(a: &Gf2Vec, b: &Gf2Vec) -> Result<Gf2Vec, Gf2Error> {
    a.try_add(b)
}

/// One equation: XOR of the listed variables equals `rhs`.
/// A variable listed twice cancels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Row {
    pub vars: Vec<usize>,
    pub rhs: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Gf2System {
    num_vars: usize,
    rows: Vec<Gf2Row>,
}

impl Gf2System {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[Gf2Row] {
        &self.rows
    }

    pub fn push_row(&mut self, vars: Vec<usize>, rhs: bool) -> Result<(), Gf2Error> {
        if let Some(&var) = vars.iter().find(|&&v| v >= self.num_vars) {
            return Err(Gf2Error::VariableOutOfRange {
                row: self.rows.len(),
                var,
                num_vars: self.num_vars,
            });
        }
        self.rows.push(Gf2Row { vars, rhs });
        Ok(())
    }

    /// Family tag of assignment vectors for this system.
    pub fn assignment_family(&self) -> FamilyTag {
        FamilyTag::anonymous("gf2-vars", self.num_vars)
    }

    pub fn satisfied_by(&self, assignment: &Gf2Vec) -> bool {
        assignment.len() == self.num_vars
            && self.rows.iter().all(|row| {
                let lhs = row
                    .vars
                    .iter()
                    .fold(false, |acc, &v| acc ^ assignment.get(v));
                lhs == row.rhs
            })
    }

    /// Index of the first row `assignment` violates.
    pub fn first_violated(&self, assignment: &Gf2Vec) -> Option<usize> {
        self.rows.iter().position(|row| {
            let lhs = row
                .vars
                .iter()
                .fold(false, |acc, &v| acc ^ assignment.get(v));
            lhs != row.rhs
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gf2Outcome {
    Solved(Gf2Vec),
    Inconsistent,
}

impl Gf2Outcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, Gf2Outcome::Solved(_))
    }

    pub fn solution(&self) -> Option<&Gf2Vec> {
        match self {
            Gf2Outcome::Solved(v) => Some(v),
            Gf2Outcome::Inconsistent => None,
        }
    }
}

/// Reduced row echelon form of a system.
#[derive(Debug, Clone)]
pub struct Echelon {
    num_vars: usize,
    /// Reduced rows; bit `num_vars` holds the right-hand side.
    rows: Vec<Words>,
    pivots: Vec<usize>,
    consistent: bool,
    family: FamilyTag,
}

fn word_get(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

impl Echelon {
    pub fn new(sys: &Gf2System) -> Self {
        let width = sys.num_vars + 1;
        let nwords = width.div_ceil(64);
        let mut rows: Vec<Words> = sys
            .rows
            .iter()
            .map(|row| {
                let mut w: Words = SmallVec::from_elem(0, nwords);
                for &v in &row.vars {
                    w[v / 64] ^= 1 << (v % 64);
                }
                if row.rhs {
                    w[sys.num_vars / 64] ^= 1 << (sys.num_vars % 64);
                }
                w
            })
            .collect();

        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..sys.num_vars {
            let Some(found) = (rank..rows.len()).find(|&r| word_get(&rows[r], col)) else {
                continue;
            };
            rows.swap(rank, found);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && word_get(row, col) {
                    for (a, b) in row.iter_mut().zip(pivot_row.iter()) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        // Remaining rows are all-zero on the variables; a set rhs means 0 = 1.
        let consistent = rows[rank..]
            .iter()
            .all(|row| !word_get(row, sys.num_vars));
        rows.truncate(rank);
        Self {
            num_vars: sys.num_vars,
            rows,
            pivots,
            consistent,
            family: sys.assignment_family(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn free_vars(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.num_vars];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.num_vars).filter(|&v| !is_pivot[v]).collect()
    }

    /// The solution obtained by giving free variable `v` the value
    /// `free(v)`, or `None` if the system is inconsistent.
    pub fn solution_with(&self, mut free: impl FnMut(usize) -> bool) -> Option<Gf2Vec> {
        if !self.consistent {
            return None;
        }
        let mut x = Gf2Vec::zeros(self.family, self.num_vars);
        for v in self.free_vars() {
            x.set(v, free(v));
        }
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let mut val = word_get(row, self.num_vars);
            for v in (p + 1)..self.num_vars {
                if word_get(row, v) && x.get(v) {
                    val = !val;
                }
            }
            x.set(p, val);
        }
        Some(x)
    }
}

/// Gaussian elimination; free variables are set to 0.
pub fn solve_linear(sys: &Gf2System) -> Gf2Outcome {
    match Echelon::new(sys).solution_with(|_| false) {
        Some(x) => Gf2Outcome::Solved(x),
        None => Gf2Outcome::Inconsistent,
    }
}

/// Exhaustive search with [`DEFAULT_BRUTE_BOUND`].
pub fn brute_force_solve(sys: &Gf2System) -> Result<Gf2Outcome, Gf2Error> {
    brute_force_solve_bounded(sys, DEFAULT_BRUTE_BOUND)
}

/// Tries every assignment in increasing integer order and returns the first
/// that satisfies all rows.
pub fn brute_force_solve_bounded(sys: &Gf2System, bound: usize) -> Result<Gf2Outcome, Gf2Error> {
    let n = sys.num_vars;
    if n > bound || n > 63 {
        return Err(Gf2Error::BoundExceeded {
            num_vars: n,
            bound: bound.min(63),
        });
    }
    let masks: Vec<(u64, bool)> = sys
        .rows
        .iter()
        .map(|row| (row.vars.iter().fold(0u64, |m, &v| m ^ (1 << v)), row.rhs))
        .collect();
    for x in 0..(1u64 << n) {
        if masks
            .iter()
            .all(|&(m, rhs)| ((m & x).count_ones() & 1 == 1) == rhs)
        {
            return Ok(Gf2Outcome::Solved(Gf2Vec::from_u128(
                sys.assignment_family(),
                n,
                x as u128,
            )));
        }
    }
    Ok(Gf2Outcome::Inconsistent)
}

/// A coset of the cutoff subgroup `E_c = { x : supp(x) ⊆ [0, c) }`,
/// stored by its representative with every coordinate below `c` cleared.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CutoffCoset {
    cutoff: usize,
    rep: Gf2Vec,
}

/// The coset `v + E_c`.
pub fn coset_of(v: &Gf2Vec, cutoff: usize) -> Result<CutoffCoset, Gf2Error> {
    if cutoff > v.len() {
        return Err(Gf2Error::CutoffTooLarge {
            cutoff,
            len: v.len(),
        });
    }
    Ok(CutoffCoset {
        cutoff,
        rep: v.clear_below(cutoff),
    })
}

impl CutoffCoset {
    pub fn zero(family: FamilyTag, len: usize, cutoff: usize) -> Result<Self, Gf2Error> {
        coset_of(&Gf2Vec::zeros(family, len), cutoff)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn rep(&self) -> &Gf2Vec {
        &self.rep
    }

    pub fn len(&self) -> usize {
        self.rep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rep.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.rep.is_zero()
    }

    pub fn contains(&self, v: &Gf2Vec) -> bool {
        v.family() == self.rep.family()
            && v.len() == self.rep.len()
            && v.clear_below(self.cutoff) == self.rep
    }

    /// Number of elements, `2^c`.
    pub fn size(&self) -> u128 {
        1u128 << self.cutoff.min(127)
    }

    /// The `index`-th element: rep plus the low bits of `index`.
    pub fn element(&self, index: u128) -> Gf2Vec {
        let mut v = self.rep.clone();
        for i in 0..self.cutoff.min(128) {
            if (index >> i) & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    /// Parse a canonical representative; bits below the cutoff must be 0.
    pub fn parse_canonical(
        family: FamilyTag,
        len: usize,
        cutoff: usize,
        s: &str,
    ) -> Result<Self, Gf2Error> {
        let v = Gf2Vec::parse_bitstring(family, len, s)?;
        let coset = coset_of(&v, cutoff)?;
        if coset.rep != v {
            return Err(Gf2Error::BadBitstring(format!(
                "{s} has bits below cutoff {cutoff}"
            )));
        }
        Ok(coset)
    }
}
