//! The `HSMODEL` text format.
//!
//! ```text
//! HSMODEL <k> <L> <c>
//! ATOMS <id>[=<label>] ...
//! G <face> <rep>            one line per face, in face order
//! T <cell> <face> <vec>     one line per non-zero τ entry
//! ```
//!
//! Faces and cells are comma-separated atom ids; vectors are bitstrings
//! with level 0 first. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::{ModelError, TwistedModel};
use crate::gf2::{CutoffCoset, Gf2Vec};
use crate::universe::{Atom, Cell, Face, Universe};

pub fn print_model(m: &TwistedModel) -> String {
    let u = m.universe();
    let mut out = String::new();
    writeln!(out, "HSMODEL {} {} {}", u.k(), u.levels(), u.cutoff()).unwrap();
    out.push_str("ATOMS");
    for a in u.atoms() {
        match u.label(*a) {
            Some(l) => write!(out, " {a}={l}").unwrap(),
            None => write!(out, " {a}").unwrap(),
        }
    }
    out.push('\n');
    for (i, face) in u.faces().iter().enumerate() {
        writeln!(out, "G {face} {}", m.h_twist_at(i).rep()).unwrap();
    }
    for (cell, face, vec) in m.tau_entries() {
        writeln!(out, "T {cell} {face} {vec}").unwrap();
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        msg: msg.into(),
    }
}

fn num(line: usize, s: Option<&str>, what: &str) -> Result<usize, ModelError> {
    s.ok_or_else(|| err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| err(line, format!("bad {what}")))
}

pub fn parse_model(text: &str) -> Result<TwistedModel, ModelError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty model file"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("HSMODEL") {
        return Err(err(ln, "expected HSMODEL header"));
    }
    let k = num(ln, parts.next(), "k")?;
    let levels = num(ln, parts.next(), "L")?;
    let cutoff = num(ln, parts.next(), "c")?;
    if parts.next().is_some() {
        return Err(err(ln, "trailing fields in header"));
    }

    let (ln, atoms_line) = lines.next().ok_or_else(|| err(ln, "missing ATOMS line"))?;
    let mut parts = atoms_line.split_whitespace();
    if parts.next() != Some("ATOMS") {
        return Err(err(ln, "expected ATOMS line"));
    }
    let mut atoms = Vec::new();
    let mut labels = BTreeMap::new();
    for tok in parts {
        let (id, label) = match tok.split_once('=') {
            Some((id, label)) if !label.is_empty() => (id, Some(label)),
            Some(_) => return Err(err(ln, format!("empty label in {tok:?}"))),
            None => (tok, None),
        };
        let a: Atom = id.parse().map_err(|_| err(ln, format!("bad atom {id:?}")))?;
        atoms.push(a);
        if let Some(l) = label {
            labels.insert(a, l.to_string());
        }
    }
    let universe = Universe::new(atoms, k, levels, cutoff)
        .and_then(|u| u.with_labels(labels))
        .map_err(|e| err(ln, e.to_string()))?;
    let universe = Arc::new(universe);

    let mut twist: BTreeMap<Face, CutoffCoset> = BTreeMap::new();
    let mut tau = BTreeMap::new();
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["G", face, rep] => {
                let face = Face::parse(face, k).map_err(|e| err(ln, e.to_string()))?;
                if universe.face_index(&face).is_none() {
                    return Err(err(ln, format!("{{{face}}} is not a face")));
                }
                let coset = CutoffCoset::parse_canonical(universe.level_tag(), levels, cutoff, rep)
                    .map_err(|e| err(ln, e.to_string()))?;
                if twist.insert(face.clone(), coset).is_some() {
                    return Err(err(ln, format!("duplicate G line for {{{face}}}")));
                }
            }
            ["T", cell, face, vec] => {
                let cell = Cell::parse(cell, k).map_err(|e| err(ln, e.to_string()))?;
                let face = Face::parse(face, k).map_err(|e| err(ln, e.to_string()))?;
                let vec = Gf2Vec::parse_bitstring(universe.level_tag(), levels, vec)
                    .map_err(|e| err(ln, e.to_string()))?;
                if vec.is_zero() {
                    return Err(err(ln, "T lines must carry a non-zero vector"));
                }
                if tau.insert((cell.clone(), face.clone()), vec).is_some() {
                    return Err(err(ln, format!("duplicate T line for ({{{cell}}}, {{{face}}})")));
                }
            }
            _ => return Err(err(ln, format!("unrecognized line {line:?}"))),
        }
    }
    if let Some(missing) = universe.faces().iter().find(|f| !twist.contains_key(f)) {
        return Err(ModelError::PartialTwist(missing.clone()));
    }
    TwistedModel::from_parts(universe, &twist, tau)
}
