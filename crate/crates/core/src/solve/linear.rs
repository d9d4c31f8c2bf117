//! Solving a whole model at once by compiling its constraints to GF(2).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::extend::greedy_fill;
use super::{require_solution, Solution, SolveError};
use crate::gf2::{brute_force_solve_bounded, solve_linear, Echelon, Gf2Outcome, Gf2System, Gf2Vec};
use crate::model::{GElem, HElem, TwistedModel};
use crate::universe::faces_of;

/// Largest system the brute-force method accepts.
pub const BRUTE_BOUND: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Greedy,
    Linear,
    Brute,
}

impl SolveMethod {
    pub const ALL: [SolveMethod; 3] = [SolveMethod::Greedy, SolveMethod::Linear, SolveMethod::Brute];

    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::Greedy => "greedy",
            SolveMethod::Linear => "linear",
            SolveMethod::Brute => "brute",
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolveMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?} (greedy, linear, brute)"))
    }
}

/// The constraints of a model as one linear system. Unknowns are the
/// offset bits `f(l, u)(w)` for faces `w ≠ u` sharing a cell with `u`, and
/// the corrections `f(u)(i)` for `i < c` relative to the coset
/// representative. All other offset coordinates never enter a constraint.
#[derive(Debug, Clone)]
pub struct CompiledSystem {
    pub system: Gf2System,
    /// `(level, u, w)` by variable, as face indices.
    pub g_vars: Vec<(usize, usize, usize)>,
    /// `(u, level)` by variable, offset by `g_vars.len()`.
    pub h_vars: Vec<(usize, usize)>,
}

impl CompiledSystem {
    pub fn num_vars(&self) -> usize {
        self.system.num_vars()
    }

    /// The solution encoded by an assignment; unconstrained coordinates
    /// are taken from `fill(level, u, coordinate)`.
    pub fn decode(
        &self,
        m: &TwistedModel,
        x: &Gf2Vec,
        mut fill: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Solution, SolveError> {
        let u = m.universe();
        let n = u.faces().len();
        let mut offsets: Vec<Vec<Option<bool>>> = vec![vec![None; n]; n * m.levels()];
        for (i, &(l, f, w)) in self.g_vars.iter().enumerate() {
            offsets[l * n + f][w] = Some(x.get(i));
        }
        let mut sol = Solution::new();
        for (fi, face) in u.faces().iter().enumerate() {
            for l in 0..m.levels() {
                let mut off = u.zero_offset();
                for (w, bit) in offsets[l * n + fi].iter().enumerate() {
                    if bit.unwrap_or_else(|| fill(l, fi, w)) {
                        off.set(w, true);
                    }
                }
                sol.set_g(GElem { level: l, face: face.clone(), offset: off });
            }
            let mut vec = m.h_twist_at(fi).rep().clone();
            for (j, &(f, l)) in self.h_vars.iter().enumerate() {
                if f == fi && x.get(self.g_vars.len() + j) {
                    vec.flip(l);
                }
            }
            sol.set_h(HElem { face: face.clone(), vec });
        }
        Ok(sol)
    }
}

pub fn compile(m: &TwistedModel) -> Result<CompiledSystem, SolveError> {
    let u = m.universe();
    let faces = u.faces();
    let mut g_vars = Vec::new();
    let mut g_index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for l in 0..m.levels() {
        for (fi, face) in faces.iter().enumerate() {
            let mut adjacent: Vec<usize> = u
                .cells_containing(face, u.atoms())
                .iter()
                .flat_map(faces_of)
                .filter(|w| w != face)
                .map(|w| u.face_index(&w).expect("universe face"))
                .collect();
            adjacent.sort_unstable();
            adjacent.dedup();
            for w in adjacent {
                g_index.insert((l, fi, w), g_vars.len());
                g_vars.push((l, fi, w));
            }
        }
    }
    let h_vars: Vec<(usize, usize)> = (0..faces.len())
        .flat_map(|fi| (0..m.cutoff()).map(move |l| (fi, l)))
        .collect();
    let mut system = Gf2System::new(g_vars.len() + h_vars.len());
    for cell in u.cells() {
        let cell_faces = faces_of(&cell);
        for w in &cell_faces {
            let wi = u.face_index(w).expect("universe face");
            for l in 0..m.levels() {
                let mut vars: Vec<usize> = cell_faces
                    .iter()
                    .filter(|v| *v != w)
                    .map(|v| g_index[&(l, u.face_index(v).expect("universe face"), wi)])
                    .collect();
                if l < m.cutoff() {
                    vars.push(g_vars.len() + wi * m.cutoff() + l);
                }
                // Q is affine in the unknowns; its value at the all-zero
                // assignment fixes the right-hand side.
                let inst = m.q_instance(l, &cell, w)?;
                let zero = u.zero_offset();
                let zeros = vec![&zero; cell_faces.len() - 1];
                let rhs = !inst.eval(&zeros, m.h_twist_at(wi).rep());
                system.push_row(vars, rhs)?;
            }
        }
    }
    Ok(CompiledSystem { system, g_vars, h_vars })
}

/// A total solution by the chosen method, or `None` if there is none.
/// Every returned solution has been checked.
pub fn full_solve(m: &TwistedModel, method: SolveMethod) -> Result<Option<Solution>, SolveError> {
    let sol = match method {
        SolveMethod::Greedy => Some(greedy_fill(m, &Solution::new(), m.universe().atoms())?),
        SolveMethod::Linear | SolveMethod::Brute => {
            let c = compile(m)?;
            let outcome = if method == SolveMethod::Linear {
                solve_linear(&c.system)
            } else {
                if c.num_vars() > BRUTE_BOUND {
                    return Err(SolveError::BoundExceeded {
                        unknowns: c.num_vars(),
                        bound: BRUTE_BOUND,
                    });
                }
                brute_force_solve_bounded(&c.system, BRUTE_BOUND)?
            };
            match outcome {
                Gf2Outcome::Solved(x) => Some(c.decode(m, &x, |_, _, _| false)?),
                Gf2Outcome::Inconsistent => None,
            }
        }
    };
    if let Some(f) = &sol {
        require_solution(m, f).map_err(|e| SolveError::Internal(format!("{method} solver: {e}")))?;
    }
    Ok(sol)
}

/// A uniformly random total solution (free unknowns and unconstrained
/// coordinates drawn from `rng`), or `None` if there is none.
pub fn random_solution(m: &TwistedModel, rng: &mut impl Rng) -> Result<Option<Solution>, SolveError> {
    let c = compile(m)?;
    let Some(x) = Echelon::new(&c.system).solution_with(|_| rng.gen()) else {
        return Ok(None);
    };
    let f = c.decode(m, &x, |_, _, _| rng.gen())?;
    require_solution(m, &f).map_err(|e| SolveError::Internal(format!("random solution: {e}")))?;
    Ok(Some(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::standard_model;
    use crate::universe::Universe;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn micro_system_fits_brute_bound() {
        let m = standard_model(Arc::new(Universe::with_atom_count(3, 2, 2, 1).unwrap()));
        let c = compile(&m).unwrap();
        assert_eq!(c.num_vars(), 15);
        assert_eq!(c.system.rows().len(), 3 * 2);
    }

    #[test]
    fn standard_model_all_methods() {
        let m = standard_model(Arc::new(Universe::with_atom_count(3, 2, 2, 1).unwrap()));
        for method in SolveMethod::ALL {
            let f = full_solve(&m, method).unwrap().unwrap();
            assert!(f.is_total(&m));
        }
    }

    #[test]
    fn random_solutions_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = TwistedModel::random_canonical(Arc::new(Universe::with_atom_count(4, 2, 3, 1).unwrap()), &mut rng);
        let a = random_solution(&m, &mut rng).unwrap().unwrap();
        let b = random_solution(&m, &mut rng).unwrap().unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn method_names_round_trip() {
        for m in SolveMethod::ALL {
            assert_eq!(m.name().parse::<SolveMethod>().unwrap(), m);
        }
        assert!("fast".parse::<SolveMethod>().is_err());
    }
}
