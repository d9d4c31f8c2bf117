//! Solution files: `H <face> <vec>` and `G <level> <face> <offset>` lines.
//! Offsets are bitstrings over the model's faces in face order.

use std::fmt::Write as _;

use super::{Solution, SolveError};
use crate::gf2::Gf2Vec;
use crate::model::{GElem, HElem, TwistedModel};
use crate::universe::Face;

pub fn print_solution(f: &Solution) -> String {
    let mut out = String::new();
    for (u, x) in f.h_part() {
        writeln!(out, "H {u} {}", x.vec).unwrap();
    }
    for ((l, u), x) in f.g_part() {
        writeln!(out, "G {l} {u} {}", x.offset).unwrap();
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> SolveError {
    SolveError::Parse { line, msg: msg.into() }
}

/// Parses a solution for `m`; every element is checked against the model.
pub fn parse_solution(m: &TwistedModel, text: &str) -> Result<Solution, SolveError> {
    let u = m.universe();
    let mut f = Solution::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["H", face, bits] => {
                let face = Face::parse(face, u.k()).map_err(|e| err(ln, e.to_string()))?;
                let vec = Gf2Vec::parse_bitstring(u.level_tag(), u.levels(), bits)
                    .map_err(|e| err(ln, e.to_string()))?;
                let x: HElem = m.h_elem(&face, vec).map_err(|e| err(ln, e.to_string()))?;
                if f.set_h(x).is_some() {
                    return Err(err(ln, format!("duplicate H line for {{{face}}}")));
                }
            }
            ["G", level, face, bits] => {
                let level: usize = level.parse().map_err(|_| err(ln, format!("bad level {level:?}")))?;
                let face = Face::parse(face, u.k()).map_err(|e| err(ln, e.to_string()))?;
                let off = Gf2Vec::parse_bitstring(u.face_tag(), u.faces().len(), bits)
                    .map_err(|e| err(ln, e.to_string()))?;
                let x: GElem = m.g_elem(level, &face, off).map_err(|e| err(ln, e.to_string()))?;
                if f.set_g(x).is_some() {
                    return Err(err(ln, format!("duplicate G line for ({level}, {{{face}}})")));
                }
            }
            _ => return Err(err(ln, format!("unrecognized line {line:?}"))),
        }
    }
    Ok(f)
}
