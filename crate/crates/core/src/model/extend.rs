//! Enlarging a model by fresh atoms while keeping it a model.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{GElem, HElem, ModelError, TwistedModel};
use crate::gf2::{CutoffCoset, Gf2Vec};
use crate::universe::{faces_of, Atom, Face, Universe};

/// An inclusion of models over the same levels and cutoff. Atoms map to
/// themselves; offsets are zero-extended to the target's faces.
#[derive(Debug, Clone)]
pub struct Embedding {
    source: TwistedModel,
    target: TwistedModel,
    /// Target face index of every source face, in source order.
    face_map: Vec<usize>,
}

impl Embedding {
    pub fn new(source: TwistedModel, target: TwistedModel) -> Result<Self, ModelError> {
        let (su, tu) = (source.universe(), target.universe());
        if su.k() != tu.k() || su.levels() != tu.levels() || su.cutoff() != tu.cutoff() {
            return Err(ModelError::ArgumentMismatch(
                "source and target differ in k, L or c".into(),
            ));
        }
        tu.check_atoms(su.atoms())?;
        let mut face_map = Vec::with_capacity(su.faces().len());
        for face in su.faces() {
            let ti = tu
                .face_index(face)
                .ok_or_else(|| ModelError::NotAFace(face.clone()))?;
            if source.h_twist(face)? != target.h_twist_at(ti) {
                return Err(ModelError::ArgumentMismatch(format!(
                    "H^b({{{face}}}) changes under the embedding"
                )));
            }
            face_map.push(ti);
        }
        Ok(Self {
            source,
            target,
            face_map,
        })
    }

    pub fn source(&self) -> &TwistedModel {
        &self.source
    }

    pub fn target(&self) -> &TwistedModel {
        &self.target
    }

    pub fn map_atom(&self, a: Atom) -> Atom {
        a
    }

    pub fn map_face(&self, u: &Face) -> Face {
        u.clone()
    }

    /// Zero-extension of a source offset.
    pub fn embed_offset(&self, offset: &Gf2Vec) -> Gf2Vec {
        let mut out = self.target.universe().zero_offset();
        for i in offset.ones() {
            out.set(self.face_map[i], true);
        }
        out
    }

    /// Restriction of a target offset to the source faces.
    pub fn restrict_offset(&self, offset: &Gf2Vec) -> Gf2Vec {
        let mut out = self.source.universe().zero_offset();
        for (i, &t) in self.face_map.iter().enumerate() {
            if offset.get(t) {
                out.set(i, true);
            }
        }
        out
    }

    pub fn embed_g(&self, x: &GElem) -> GElem {
        GElem {
            level: x.level,
            face: x.face.clone(),
            offset: self.embed_offset(&x.offset),
        }
    }

    pub fn embed_h(&self, x: &HElem) -> HElem {
        x.clone()
    }
}

/// Adds `new_atoms` to `m`. New faces get the zero coset. Cells inside the
/// old atoms keep their τ; a cell with exactly one new atom has exactly one
/// old face, and its τ at that face is the anchor there, so the parity test
/// is read relative to the anchor. Every other τ entry is zero.
pub fn extend_model(
    m: &TwistedModel,
    new_atoms: &[Atom],
    anchor: &BTreeMap<Face, HElem>,
) -> Result<(TwistedModel, Embedding), ModelError> {
    let old = m.universe();
    for &a in new_atoms {
        if old.has_atom(a) {
            return Err(ModelError::AtomsOverlap(a));
        }
    }
    for face in old.faces() {
        let h = anchor
            .get(face)
            .ok_or_else(|| ModelError::IncompleteAnchor(face.clone()))?;
        if &h.face != face || !m.h_twist(face)?.contains(&h.vec) {
            return Err(ModelError::NotInCoset {
                face: face.clone(),
                vec: h.vec.clone(),
            });
        }
    }
    let universe = Universe::new(
        old.atoms().iter().chain(new_atoms).copied(),
        old.k(),
        old.levels(),
        old.cutoff(),
    )?
    .with_labels(old.labels().clone())?;
    let universe = Arc::new(universe);
    let zero = CutoffCoset::zero(universe.level_tag(), universe.levels(), universe.cutoff())?;
    let twist: BTreeMap<Face, CutoffCoset> = universe
        .faces()
        .iter()
        .map(|f| {
            let coset = m.h_twist(f).cloned().unwrap_or_else(|_| zero.clone());
            (f.clone(), coset)
        })
        .collect();
    let mut target = TwistedModel::canonical(universe.clone(), &twist)?;
    for (cell, face, vec) in m.tau_entries() {
        target.set_tau(cell.clone(), face.clone(), vec.clone())?;
    }
    for cell in universe.cells() {
        let fresh = cell.atoms().iter().filter(|a| !old.has_atom(**a)).count();
        if fresh != 1 {
            continue;
        }
        let old_face = faces_of(&cell)
            .into_iter()
            .find(|f| f.atoms().iter().all(|a| old.has_atom(*a)))
            .expect("one old face");
        let vec = anchor[&old_face].vec.clone();
        target.set_tau(cell, old_face, vec)?;
    }
    let emb = Embedding::new(m.clone(), target.clone())?;
    Ok((target, emb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_axioms, standard_model};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_anchor(m: &TwistedModel) -> BTreeMap<Face, HElem> {
        m.universe()
            .faces()
            .iter()
            .map(|f| (f.clone(), m.h_base(f).unwrap()))
            .collect()
    }

    #[test]
    fn empty_extension_is_identity() {
        let u = Arc::new(Universe::with_atom_count(3, 2, 3, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = TwistedModel::random_canonical(u, &mut rng);
        let (t, e) = extend_model(&m, &[], &zero_anchor(&m)).unwrap();
        assert_eq!(t, m);
        let off = m.universe().zero_offset();
        assert_eq!(e.embed_offset(&off), off);
    }

    #[test]
    fn standard_plus_one_atom_is_standard() {
        let u = Arc::new(Universe::with_atom_count(3, 2, 3, 1).unwrap());
        let m = standard_model(u);
        let (t, _) = extend_model(&m, &[Atom(3)], &zero_anchor(&m)).unwrap();
        let big = standard_model(Arc::new(Universe::with_atom_count(4, 2, 3, 1).unwrap()));
        assert_eq!(t, big);
    }

    #[test]
    fn rejects_overlap_and_partial_anchor() {
        let u = Arc::new(Universe::with_atom_count(3, 2, 3, 1).unwrap());
        let m = standard_model(u);
        let anchor = zero_anchor(&m);
        assert_eq!(
            extend_model(&m, &[Atom(1)], &anchor).unwrap_err(),
            ModelError::AtomsOverlap(Atom(1))
        );
        let mut partial = anchor.clone();
        let first = partial.keys().next().unwrap().clone();
        partial.remove(&first);
        assert_eq!(
            extend_model(&m, &[Atom(7)], &partial).unwrap_err(),
            ModelError::IncompleteAnchor(first)
        );
    }

    #[test]
    fn case_three_tau_is_the_anchor() {
        let u = Arc::new(Universe::with_atom_count(3, 2, 3, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = TwistedModel::random_canonical(u.clone(), &mut rng);
        let mut anchor = zero_anchor(&m);
        for h in anchor.values_mut() {
            h.vec.flip(0);
        }
        let (t, _) = extend_model(&m, &[Atom(9)], &anchor).unwrap();
        for face in u.faces() {
            let cell = crate::universe::Cell::from_face(face, Atom(9)).unwrap();
            assert_eq!(t.tau(&cell, face), anchor[face].vec);
            for other in faces_of(&cell).into_iter().filter(|f| f != face) {
                assert!(t.tau(&cell, &other).is_zero());
            }
        }
        assert!(check_axioms(&t).passed());
    }
}
