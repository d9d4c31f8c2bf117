//! Models that encode a list of codes in their twist, and reading the
//! codes back from invariants in the presence of perturbed anchors.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{invariant_m_layers, AnchorFamily, Code, CodeNode, CodeSet, InvarError, InvariantClass, Thresholds};
use crate::gf2::CutoffCoset;
use crate::model::TwistedModel;
use crate::universe::{subsets, Atom, Face, Universe};

/// A model built from codes, with its atom layout and reference anchors.
#[derive(Debug, Clone)]
pub struct MaModel {
    pub model: TwistedModel,
    pub th: Thresholds,
    pub grid: usize,
    /// The first `t_{k-2}` atoms; `I_j` is the first `t_j` of them.
    pub band: Vec<Atom>,
    /// `pairs[α][β]`.
    pub pairs: Vec<Vec<Atom>>,
    pub code_atoms: Vec<Atom>,
    pub codes: Vec<Code>,
    /// Zero anchors on faces inside band ∪ pairs.
    pub f_ref: AnchorFamily,
    /// Zero anchors on faces inside band ∪ code atoms.
    pub h_ref: AnchorFamily,
    /// Zero anchors on every face.
    pub zero: AnchorFamily,
}

impl MaModel {
    pub fn k(&self) -> usize {
        self.model.k()
    }

    /// `I_j`.
    pub fn prefix(&self, j: usize) -> &[Atom] {
        &self.band[..self.th.as_slice()[j]]
    }

    /// `I_j \ I_{j-1}`.
    pub fn layer(&self, j: usize) -> &[Atom] {
        let lo = if j == 0 { 0 } else { self.th.as_slice()[j - 1] };
        &self.band[lo..self.th.as_slice()[j]]
    }

    fn nested(&self, depth: usize) -> Vec<Vec<Atom>> {
        (0..depth).map(|j| self.prefix(j).to_vec()).collect()
    }

    /// The class a code node of depth `depth` should produce.
    pub fn expected_class(&self, node: &CodeNode, depth: usize) -> Option<InvariantClass> {
        match node {
            CodeNode::Leaf(x) if depth == 0 => Some(InvariantClass::Map {
                depth: 0,
                threshold: None,
                entries: self.prefix(0).iter().map(|a| (*a, InvariantClass::Coset(x.clone()))).collect(),
            }),
            CodeNode::Branch(xs) if depth > 0 && xs.len() == self.layer(depth).len() => {
                let mut entries = BTreeMap::new();
                for (a, x) in self.layer(depth).iter().zip(xs) {
                    entries.insert(*a, self.expected_class(x, depth - 1)?);
                }
                Some(InvariantClass::Map { depth, threshold: self.th.get(depth), entries })
            }
            _ => None,
        }
    }

    /// Reads a code node back from a class; `None` if it is not of the
    /// shape [`MaModel::expected_class`] produces.
    pub fn decode(&self, class: &InvariantClass, depth: usize) -> Option<CodeNode> {
        let InvariantClass::Map { depth: d, entries, .. } = class else {
            return None;
        };
        if *d != depth {
            return None;
        }
        if depth == 0 {
            let mut values = entries.values();
            let Some(InvariantClass::Coset(first)) = values.next() else {
                return None;
            };
            return values
                .all(|x| matches!(x, InvariantClass::Coset(y) if y == first))
                .then(|| CodeNode::Leaf(first.clone()));
        }
        if !entries.keys().eq(self.layer(depth).iter()) {
            return None;
        }
        entries.values().map(|x| self.decode(x, depth - 1)).collect::<Option<Vec<_>>>().map(CodeNode::Branch)
    }

    /// Faces the adversary may move: inside band ∪ code atoms, touching a
    /// code atom.
    pub fn code_side_faces(&self) -> Vec<Face> {
        let k = self.k();
        let mut atoms: Vec<Atom> = self.band.iter().chain(&self.code_atoms).copied().collect();
        atoms.sort_unstable();
        subsets(&atoms, k)
            .into_iter()
            .filter(|f| f.iter().any(|a| self.code_atoms.contains(a)))
            .map(|f| Face::new(&f, k).expect("k atoms"))
            .collect()
    }

    /// Coordinates whose bits in an anchor on `u` can reach a recovery
    /// column: swap one band atom of `u` for a pair atom.
    fn sensitive(&self, u: &Face) -> Vec<Face> {
        let k = self.k();
        let mut out = Vec::new();
        for &x in u.atoms().iter().filter(|a| self.band.contains(a)) {
            for &p in self.pairs.iter().flatten() {
                let mut w: Vec<Atom> = u.atoms().iter().copied().filter(|a| *a != x).collect();
                w.push(p);
                out.push(Face::new(&w, k).expect("k atoms"));
            }
        }
        out
    }
}

fn shape_err(msg: impl Into<String>) -> InvarError {
    InvarError::Shape(msg.into())
}

fn check_node(node: &CodeNode, depth: usize, layers: &[usize], levels: usize, cutoff: usize) -> Result<(), InvarError> {
    match node {
        CodeNode::Leaf(x) if depth == 0 => {
            if x.len() != levels || x.cutoff() != cutoff {
                return Err(shape_err("leaf does not match the header's L and c"));
            }
            Ok(())
        }
        CodeNode::Branch(xs) if depth > 0 => {
            if xs.len() != layers[depth] {
                return Err(shape_err(format!(
                    "a depth-{depth} node needs {} entries, got {}",
                    layers[depth],
                    xs.len()
                )));
            }
            xs.iter().try_for_each(|x| check_node(x, depth - 1, layers, levels, cutoff))
        }
        _ => Err(shape_err(format!("expected a depth-{depth} node, got {node}"))),
    }
}

/// Builds the model whose twist spells out each code on the faces
/// `{a, (α,β), i_{k-2}, …, i_1}` and is zero elsewhere.
pub fn build_ma(k: usize, th: &Thresholds, grid: usize, codes: &CodeSet) -> Result<MaModel, InvarError> {
    if k < 2 {
        return Err(shape_err("k must be at least 2"));
    }
    if th.len() + 1 < k {
        return Err(InvarError::Thresholds(format!("k = {k} needs at least {} thresholds", k - 1)));
    }
    if grid == 0 {
        return Err(shape_err("grid must be positive"));
    }
    if codes.codes.is_empty() {
        return Err(shape_err("no codes"));
    }
    let t = th.as_slice();
    let layers: Vec<usize> = (0..k - 1).map(|j| if j == 0 { t[0] } else { t[j] - t[j - 1] }).collect();
    for (i, code) in codes.codes.iter().enumerate() {
        if code.0.len() != grid {
            return Err(shape_err(format!("code {i} has {} rows, grid is {grid}", code.0.len())));
        }
        for node in &code.0 {
            check_node(node, k - 2, &layers, codes.levels, codes.cutoff)
                .map_err(|e| shape_err(format!("code {i}: {e}")))?;
        }
        if codes.codes[..i].contains(code) {
            return Err(shape_err(format!("code {i} repeats an earlier code")));
        }
    }
    let n_band = t[k - 2];
    let band: Vec<Atom> = (0..n_band as u32).map(Atom).collect();
    let mut next = n_band as u32;
    let mut labels: BTreeMap<Atom, String> = band.iter().map(|a| (*a, format!("b{}", a.0))).collect();
    let mut pairs = Vec::with_capacity(grid);
    for alpha in 0..grid {
        let mut row = Vec::with_capacity(grid);
        for beta in 0..grid {
            labels.insert(Atom(next), format!("p{alpha}_{beta}"));
            row.push(Atom(next));
            next += 1;
        }
        pairs.push(row);
    }
    let code_atoms: Vec<Atom> = (0..codes.codes.len() as u32).map(|i| Atom(next + i)).collect();
    for (i, a) in code_atoms.iter().enumerate() {
        labels.insert(*a, format!("a{i}"));
    }
    let all: Vec<Atom> = (0..next + code_atoms.len() as u32).map(Atom).collect();
    let universe = Arc::new(Universe::new(all, k, codes.levels, codes.cutoff)?.with_labels(labels)?);
    let zero = CutoffCoset::zero(universe.level_tag(), codes.levels, codes.cutoff)?;
    let mut g: BTreeMap<Face, CutoffCoset> = universe.faces().iter().map(|f| (f.clone(), zero.clone())).collect();
    for (code, &a) in codes.codes.iter().zip(&code_atoms) {
        for (alpha, node) in code.0.iter().enumerate() {
            for &p in &pairs[alpha] {
                let mut path = vec![a, p];
                assign(&mut g, node, k - 2, &band, t, &mut path, k)?;
            }
        }
    }
    let model = TwistedModel::canonical(universe.clone(), &g)?;
    let side = |extra: &[Atom]| -> Vec<Face> {
        let mut atoms: Vec<Atom> = band.iter().chain(extra).copied().collect();
        atoms.sort_unstable();
        universe.all_faces(&atoms)
    };
    let pair_atoms: Vec<Atom> = pairs.iter().flatten().copied().collect();
    let f_ref = AnchorFamily::zero_on(&model, &side(&pair_atoms));
    let h_ref = AnchorFamily::zero_on(&model, &side(&code_atoms));
    let zero = AnchorFamily::zero_on(&model, universe.faces());
    Ok(MaModel {
        model,
        th: th.clone(),
        grid,
        band,
        pairs,
        code_atoms,
        codes: codes.codes.clone(),
        f_ref,
        h_ref,
        zero,
    })
}

fn assign(
    g: &mut BTreeMap<Face, CutoffCoset>,
    node: &CodeNode,
    depth: usize,
    band: &[Atom],
    t: &[usize],
    path: &mut Vec<Atom>,
    k: usize,
) -> Result<(), InvarError> {
    match node {
        CodeNode::Leaf(x) => {
            g.insert(Face::new(path, k)?, x.clone());
        }
        CodeNode::Branch(xs) => {
            for (x, &i) in xs.iter().zip(&band[t[depth - 1]..t[depth]]) {
                path.push(i);
                assign(g, x, depth - 1, band, t, path, k)?;
                path.pop();
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClaimReport {
    pub depth: usize,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl ClaimReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Computes the depth-`depth` invariant for `I_depth`, a band path,
/// `(α,β)` and `a` via zero anchors, and compares it exactly with the
/// class prescribed by the code.
pub fn check_claim(ma: &MaModel, depth: usize) -> Result<ClaimReport, InvarError> {
    let k = ma.k();
    if depth + 2 > k {
        return Err(shape_err(format!("depth {depth} exceeds k - 2")));
    }
    let mut report = ClaimReport { depth, ..ClaimReport::default() };
    let nested = ma.nested(depth);
    // Paths through the layers above `depth`, outermost layer first.
    let mut paths: Vec<(Vec<usize>, Vec<Atom>)> = vec![(Vec::new(), Vec::new())];
    for j in (depth + 1..k - 1).rev() {
        paths = paths
            .into_iter()
            .flat_map(|(idx, atoms)| {
                ma.layer(j).iter().enumerate().map(move |(i, &x)| {
                    let mut idx = idx.clone();
                    idx.push(i);
                    let mut atoms = atoms.clone();
                    atoms.push(x);
                    (idx, atoms)
                })
            })
            .collect();
    }
    for (code, &a) in ma.codes.iter().zip(&ma.code_atoms) {
        for (alpha, node) in code.0.iter().enumerate() {
            for (idx, atoms) in &paths {
                let target = node.at(idx).ok_or_else(|| shape_err("code path"))?;
                let expected = ma.expected_class(target, depth).ok_or_else(|| shape_err("code shape"))?;
                for &p in &ma.pairs[alpha] {
                    let mut tail: Vec<Atom> = atoms.iter().rev().copied().collect();
                    tail.push(p);
                    tail.push(a);
                    let got = invariant_m_layers(
                        &ma.model,
                        depth,
                        ma.prefix(depth),
                        &nested,
                        &tail,
                        &[&ma.zero],
                        &ma.th,
                    )?;
                    report.checked += 1;
                    if got != expected {
                        report.failures.push(format!(
                            "code {} row {alpha} tail {tail:?}: got {got}, expected {expected}",
                            a.0
                        ));
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnVote {
    pub code: usize,
    pub alpha: usize,
    /// Columns agreeing with the most common value.
    pub agreeing: usize,
    pub distinct_values: usize,
    pub majority: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    /// Anchor pairs where the adversary moved away from the reference.
    pub perturbed_pairs: usize,
    pub max_support: usize,
    pub within_budget: bool,
    pub votes: Vec<ColumnVote>,
    /// Recovered codes in code-atom order; `None` where the vote failed.
    pub recovered: Vec<Option<String>>,
    pub exact: bool,
}

/// For each code atom and row, computes the top-depth invariant in every
/// column via the pair anchors and `h_prime`, and takes a strict majority
/// of identical values.
pub fn recover_codes(ma: &MaModel, h_prime: &AnchorFamily) -> Result<RecoveryReport, InvarError> {
    if let Some((x, _)) = ma.f_ref.disagreements(h_prime).first() {
        return Err(shape_err(format!(
            "adversary disagrees with the pair anchors at ({}, {{{}}})",
            x.level, x.face
        )));
    }
    let mut perturbed = 0;
    let mut max_support = 0;
    for (x, y) in ma.h_ref.disagreements(h_prime) {
        perturbed += 1;
        let d = x.offset.try_add(&y.offset)?;
        max_support = max_support.max(d.count_ones());
    }
    let depth = ma.k() - 2;
    let nested = ma.nested(depth);
    let mut votes = Vec::new();
    let mut recovered = Vec::new();
    for (ci, &a) in ma.code_atoms.iter().enumerate() {
        let mut rows = Some(Vec::with_capacity(ma.grid));
        for alpha in 0..ma.grid {
            let mut tally: Vec<(InvariantClass, usize)> = Vec::new();
            for &p in &ma.pairs[alpha] {
                let x = invariant_m_layers(
                    &ma.model,
                    depth,
                    ma.prefix(depth),
                    &nested,
                    &[p, a],
                    &[&ma.f_ref, h_prime],
                    &ma.th,
                )?;
                match tally.iter_mut().find(|(y, _)| *y == x) {
                    Some((_, n)) => *n += 1,
                    None => tally.push((x, 1)),
                }
            }
            let best = tally.iter().map(|(_, n)| *n).max().unwrap_or(0);
            let winner = tally.iter().find(|(_, n)| 2 * n > ma.grid).map(|(x, _)| x);
            let decoded = winner.and_then(|x| ma.decode(x, depth));
            votes.push(ColumnVote {
                code: ci,
                alpha,
                agreeing: best,
                distinct_values: tally.len(),
                majority: winner.map(|x| x.to_string()),
            });
            match (decoded, rows.as_mut()) {
                (Some(node), Some(r)) => r.push(node),
                _ => rows = None,
            }
        }
        recovered.push(rows.map(Code));
    }
    let mut got: Vec<&Code> = recovered.iter().flatten().collect();
    let mut want: Vec<&Code> = ma.codes.iter().collect();
    got.sort();
    want.sort();
    let exact = recovered.iter().all(Option::is_some) && got == want;
    Ok(RecoveryReport {
        perturbed_pairs: perturbed,
        max_support,
        within_budget: 2 * perturbed * max_support < ma.grid,
        votes,
        recovered: recovered.iter().map(|c| c.as_ref().map(Code::to_string)).collect(),
        exact,
    })
}

/// Reference code-side anchors with `budget` pairs moved, each by an offset
/// of support between 1 and `support` on coordinates that recovery reads.
pub fn random_adversary(ma: &MaModel, rng: &mut impl Rng, budget: usize, support: usize) -> AnchorFamily {
    let m = &ma.model;
    let u = m.universe();
    let levels: Vec<usize> = if m.cutoff() < m.levels() { (m.cutoff()..m.levels()).collect() } else { (0..m.levels()).collect() };
    let faces = ma.code_side_faces();
    let mut slots: Vec<(usize, &Face)> = levels.iter().flat_map(|&l| faces.iter().map(move |f| (l, f))).collect();
    slots.shuffle(rng);
    let mut out = ma.h_ref.clone();
    for (l, face) in slots.into_iter().take(budget) {
        let mut x = out.get(l, face).expect("code-side face").clone();
        let mut coords = ma.sensitive(face);
        if coords.is_empty() {
            coords = u.faces().to_vec();
        }
        coords.shuffle(rng);
        let s = rng.gen_range(1..=support.max(1)).min(coords.len());
        for w in &coords[..s] {
            x.offset.flip(u.face_index(w).expect("universe face"));
        }
        out.insert(x);
    }
    out
}

/// One anchor moved so that the first `ceil(S/2)` columns of row `alpha`
/// for code `code` all change the same way: one pair past the budget.
pub fn boundary_adversary(ma: &MaModel, code: usize, alpha: usize) -> Result<AnchorFamily, InvarError> {
    let m = &ma.model;
    let k = ma.k();
    if m.cutoff() >= m.levels() {
        return Err(shape_err("no level at or above the cutoff"));
    }
    let a = *ma.code_atoms.get(code).ok_or_else(|| shape_err("no such code"))?;
    let mut rest: Vec<Atom> = (1..k - 1).map(|j| ma.layer(j)[0]).collect();
    rest.push(a);
    let mut u_atoms = rest.clone();
    u_atoms.push(ma.band[0]);
    let u = Face::new(&u_atoms, k)?;
    let mut out = ma.h_ref.clone();
    let mut x = out.get(m.cutoff(), &u).expect("code-side face").clone();
    for &p in &ma.pairs[alpha][..ma.grid.div_ceil(2)] {
        let mut w = rest.clone();
        w.push(p);
        x.offset.flip(m.universe().face_index(&Face::new(&w, k)?).expect("universe face"));
    }
    out.insert(x);
    Ok(out)
}
