//! Code lists: `HSCODES <L> <c>` then one `CODE <node>` line per code, where
//! a node is a bitstring (a coset representative) or `[node …]`.

use std::fmt::{self, Write as _};

use super::InvarError;
use crate::gf2::{CutoffCoset, IndexFamily};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CodeNode {
    Leaf(CutoffCoset),
    Branch(Vec<CodeNode>),
}

impl CodeNode {
    /// Follows `path` through branches.
    pub fn at(&self, path: &[usize]) -> Option<&CodeNode> {
        match (self, path) {
            (_, []) => Some(self),
            (CodeNode::Branch(xs), [i, rest @ ..]) => xs.get(*i)?.at(rest),
            _ => None,
        }
    }
}

impl fmt::Display for CodeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeNode::Leaf(x) => write!(f, "{}", x.rep()),
            CodeNode::Branch(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A code: its value at each grid row `α`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Code(pub Vec<CodeNode>);

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", CodeNode::Branch(self.0.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSet {
    pub levels: usize,
    pub cutoff: usize,
    pub codes: Vec<Code>,
}

pub fn print_codes(set: &CodeSet) -> String {
    let mut out = format!("HSCODES {} {}\n", set.levels, set.cutoff);
    for code in &set.codes {
        writeln!(out, "CODE {code}").unwrap();
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> InvarError {
    InvarError::Parse { line, msg: msg.into() }
}

fn tokens(s: &str) -> Vec<String> {
    s.replace('[', " [ ").replace(']', " ] ").split_whitespace().map(str::to_string).collect()
}

pub fn parse_codes(text: &str) -> Result<CodeSet, InvarError> {
    let mut header = None;
    let mut codes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (fields[0], &header) {
            ("HSCODES", None) => {
                let [_, l, c] = fields.as_slice() else {
                    return Err(err(ln, "expected HSCODES <L> <c>"));
                };
                let l: usize = l.parse().map_err(|_| err(ln, format!("bad L {l:?}")))?;
                let c: usize = c.parse().map_err(|_| err(ln, format!("bad c {c:?}")))?;
                if l == 0 || c == 0 || c > l {
                    return Err(err(ln, format!("need 0 < c <= L, got L={l} c={c}")));
                }
                let family = IndexFamily::new("levels", (0..l).collect())?;
                header = Some((l, c, family));
            }
            ("HSCODES", Some(_)) => return Err(err(ln, "duplicate header")),
            ("CODE", Some((l, c, family))) => {
                let toks = tokens(&line["CODE".len()..]);
                let mut pos = 0;
                let node = parse_node(&toks, &mut pos, *l, *c, family).map_err(|m| err(ln, m))?;
                if pos != toks.len() {
                    return Err(err(ln, "trailing tokens"));
                }
                match node {
                    CodeNode::Branch(xs) if !xs.is_empty() => codes.push(Code(xs)),
                    _ => return Err(err(ln, "a code is a non-empty [..] list")),
                }
            }
            ("CODE", None) => return Err(err(ln, "CODE before HSCODES header")),
            _ => return Err(err(ln, format!("unrecognized line {line:?}"))),
        }
    }
    let (levels, cutoff, _) = header.ok_or_else(|| err(0, "missing HSCODES header"))?;
    Ok(CodeSet { levels, cutoff, codes })
}

fn parse_node(
    toks: &[String],
    pos: &mut usize,
    l: usize,
    c: usize,
    family: &IndexFamily<usize>,
) -> Result<CodeNode, String> {
    let tok = toks.get(*pos).ok_or("unexpected end of code")?;
    *pos += 1;
    match tok.as_str() {
        "[" => {
            let mut xs = Vec::new();
            loop {
                match toks.get(*pos).map(String::as_str) {
                    Some("]") => {
                        *pos += 1;
                        return Ok(CodeNode::Branch(xs));
                    }
                    Some(_) => xs.push(parse_node(toks, pos, l, c, family)?),
                    None => return Err("unclosed [".into()),
                }
            }
        }
        "]" => Err("unexpected ]".into()),
        bits => CutoffCoset::parse_canonical(family.tag(), l, c, bits)
            .map(CodeNode::Leaf)
            .map_err(|e| e.to_string()),
    }
}
