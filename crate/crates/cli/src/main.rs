//! `hsmodel`: build, check, solve and transform finite parity-torsor models.

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hs_core::invar::{
    build_ma, check_claim, invariant_k, invariant_m, parse_codes, random_adversary, recover_codes,
    boundary_adversary, AnchorFamily, Thresholds,
};
use hs_core::isomap::{build_iso, verify_iso_with, PIdentification};
use hs_core::model::{check_axioms_with, extend_model, parse_model, print_model, Embedding, HElem, TwistedModel};
use hs_core::solve::{
    amalgamate, extend_solution, full_solve, parse_solution, print_solution, pull_back, Solution,
    SolveMethod, SystemOfSolutions,
};
use hs_core::sweep::{SweepConfig, DEFAULT_EXHAUSTIVE_LIMIT, DEFAULT_SAMPLES};
use hs_core::universe::{Atom, Face, Universe};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use report::{Failure, Outcome};

#[derive(Parser)]
#[command(name = "hsmodel", version, about = "Finite parity-torsor models: build, check, solve, transform, experiment")]
struct Cli {
    /// Seed for every randomized choice and sampled sweep.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report style.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Args)]
struct Shape {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    atoms: usize,
    #[arg(long)]
    levels: usize,
    #[arg(long)]
    cutoff: usize,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Sweep {
    /// Quantified spaces up to this size are swept exhaustively.
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
    exhaustive_limit: u128,
    /// Samples per property above the limit.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the standard model (all twists zero).
    BuildStandard(Shape),
    /// Write a canonical model with a seeded random twist.
    BuildCanonical(Shape),
    /// Check every axiom on a model file.
    CheckAxioms {
        model: PathBuf,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Solve a model and validate the result.
    Solve {
        model: PathBuf,
        #[arg(long, default_value = "linear")]
        method: SolveMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extend the part over A of a solution to A plus one atom.
    ExtendSolution {
        model: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Comma-separated atoms of A.
        #[arg(long, default_value = "")]
        a: AtomList,
        #[arg(long)]
        b: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amalgamate the system of restrictions of a solution over base + extras.
    Amalgamate {
        model: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        base: AtomList,
        #[arg(long)]
        extras: AtomList,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify the isomorphism induced by two solutions.
    Iso {
        model_m: PathBuf,
        model_n: PathBuf,
        #[arg(long)]
        solution_m: PathBuf,
        #[arg(long)]
        solution_n: PathBuf,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Pull a target solution back along the embedding of source into target.
    PullBack {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add atoms to a model, anchoring new cells at the coset representatives
    /// (or at seeded random coset elements).
    ExtendModel {
        model: PathBuf,
        #[arg(long)]
        new_atoms: AtomList,
        #[arg(long)]
        random_anchor: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a coset invariant via zero anchors or a solution's anchors.
    Invariant {
        model: PathBuf,
        /// Anchors from this solution's G part; zero offsets otherwise.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Chain i_0,…,i_k for a single invariant.
        #[arg(long, conflicts_with_all = ["depth", "base", "tail"])]
        chain: Option<AtomList>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        base: Option<AtomList>,
        #[arg(long)]
        tail: Option<AtomList>,
        #[arg(long)]
        thresholds: Option<Counts>,
    },
    /// Encode codes in a model and read them back under perturbed anchors.
    DemoRecovery {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        thresholds: Counts,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        codes: PathBuf,
        /// Anchor pairs each adversary may move.
        #[arg(long, default_value_t = 1)]
        budget: usize,
        /// Largest offset support per moved pair; defaults to the largest
        /// value keeping budget·support below half the grid.
        #[arg(long)]
        support: Option<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Also run one adversary just past the budget.
        #[arg(long)]
        probe: bool,
    },
}

/// Comma-separated atom ids.
#[derive(Clone, Debug)]
struct AtomList(Vec<Atom>);

impl FromStr for AtomList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u32>().map(Atom).map_err(|_| format!("bad atom {t:?}")))
            .collect::<Result<_, _>>()
            .map(AtomList)
    }
}

/// Comma-separated counts.
#[derive(Clone, Debug)]
struct Counts(Vec<usize>);

impl FromStr for Counts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad count {t:?}")))
            .collect::<Result<_, _>>()
            .map(Counts)
    }
}

/// Errors in the inputs (exit 2) versus computations that ran and failed
/// (exit 1).
enum CliError {
    Usage(String),
    Failed(String),
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<TwistedModel, CliError> {
    parse_model(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_solution(m: &TwistedModel, path: &Path) -> Result<Solution, CliError> {
    parse_solution(m, &read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<Option<String>, CliError> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Ok(None)
        }
        None => Ok(Some(text.to_string())),
    }
}

fn sweep_cfg(s: &Sweep, seed: u64) -> SweepConfig {
    SweepConfig { exhaustive_limit: s.exhaustive_limit, samples: s.samples, seed }
}

fn universe(s: &Shape) -> Result<Arc<Universe>, CliError> {
    Universe::with_atom_count(s.atoms, s.k, s.levels, s.cutoff).map(Arc::new).map_err(usage)
}

fn written(name: &'static str, m: &TwistedModel, out: &Option<PathBuf>) -> Result<Outcome, CliError> {
    let u = m.universe();
    let payload = emit(out, &print_model(m))?;
    Ok(Outcome::pass(
        name,
        format!("model: k={} atoms={} L={} c={} faces={}", u.k(), u.atoms().len(), u.levels(), u.cutoff(), u.faces().len()),
        json!({"k": u.k(), "atoms": u.atoms().len(), "levels": u.levels(), "cutoff": u.cutoff(), "faces": u.faces().len()}),
    )
    .with_payload(payload))
}

fn solution_outcome(name: &'static str, m: &TwistedModel, f: &Solution, out: &Option<PathBuf>) -> Result<Outcome, CliError> {
    let payload = emit(out, &print_solution(f))?;
    Ok(Outcome::pass(
        name,
        format!("valid solution: {} G entries, {} H entries, total={}", f.g_part().len(), f.h_part().len(), f.is_total(m)),
        json!({"g_entries": f.g_part().len(), "h_entries": f.h_part().len(), "total": f.is_total(m)}),
    )
    .with_payload(payload))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::BuildStandard(s) => written("build-standard", &TwistedModel::standard(universe(s)?), &s.out),
        Command::BuildCanonical(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            written("build-canonical", &TwistedModel::random_canonical(universe(s)?, &mut rng), &s.out)
        }
        Command::CheckAxioms { model, sweep } => {
            let m = load_model(model)?;
            let r = check_axioms_with(&m, &sweep_cfg(sweep, seed));
            let mut text = String::new();
            for x in &r.results {
                text.push_str(&format!(
                    "{:<10} {:<4} {:<10} {:>12} points{}\n",
                    x.id.name(),
                    if x.passed() { "ok" } else { "FAIL" },
                    x.mode.as_str(),
                    x.points,
                    x.witness.as_ref().map(|w| format!("  witness: {w}")).unwrap_or_default()
                ));
            }
            let data = serde_json::to_value(&r).map_err(failed)?;
            Ok(Outcome::new("check-axioms", r.passed(), text.trim_end().to_string(), data))
        }
        Command::Solve { model, method, out } => {
            let m = load_model(model)?;
            match full_solve(&m, *method).map_err(failed)? {
                Some(f) => solution_outcome("solve", &m, &f, out),
                None => Err(failed(format!("{method}: the model has no solution"))),
            }
        }
        Command::ExtendSolution { model, solution, a, b, out } => {
            let m = load_model(model)?;
            // Only the part over A is used.
            let f = load_solution(&m, solution)?.restrict(&a.0);
            let g = extend_solution(&m, &f, &a.0, Atom(*b)).map_err(failed)?;
            solution_outcome("extend-solution", &m, &g, out)
        }
        Command::Amalgamate { model, solution, base, extras, out } => {
            let m = load_model(model)?;
            let f = load_solution(&m, solution)?;
            let sys = SystemOfSolutions::restrictions_of(&f, base.0.clone(), extras.0.clone()).map_err(usage)?;
            let g = amalgamate(&m, &sys).map_err(failed)?;
            solution_outcome("amalgamate", &m, &g, out)
        }
        Command::Iso { model_m, model_n, solution_m, solution_n, sweep } => {
            let m = load_model(model_m)?;
            let n = load_model(model_n)?;
            let f = load_solution(&m, solution_m)?;
            let g = load_solution(&n, solution_n)?;
            let pid = PIdentification::new(m, n).map_err(usage)?;
            let iso = build_iso(pid, f, g).map_err(failed)?;
            let r = verify_iso_with(&iso, &sweep_cfg(sweep, seed)).map_err(failed)?;
            let mut text = String::new();
            for c in &r.checks {
                text.push_str(&format!(
                    "{:<10} {:<4} {:<10} {:>12} points{}\n",
                    c.predicate,
                    if c.passed() { "ok" } else { "FAIL" },
                    c.mode.as_str(),
                    c.points,
                    c.witness.as_ref().map(|w| format!("  witness: {w}")).unwrap_or_default()
                ));
            }
            let data = serde_json::to_value(&r).map_err(failed)?;
            Ok(Outcome::new("iso", r.passed(), text.trim_end().to_string(), data))
        }
        Command::PullBack { source, target, solution, out } => {
            let s = load_model(source)?;
            let t = load_model(target)?;
            let f = load_solution(&t, solution)?;
            let e = Embedding::new(s.clone(), t).map_err(usage)?;
            let g = pull_back(&e, &f).map_err(failed)?;
            solution_outcome("pull-back", &s, &g, out)
        }
        Command::ExtendModel { model, new_atoms, random_anchor, out } => {
            let m = load_model(model)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let anchor: BTreeMap<Face, HElem> = m
                .universe()
                .faces()
                .iter()
                .map(|f| {
                    let coset = m.h_twist(f).expect("universe face");
                    let i = if *random_anchor { rng.gen_range(0..coset.size()) } else { 0 };
                    (f.clone(), HElem { face: f.clone(), vec: coset.element(i) })
                })
                .collect();
            let (t, _) = extend_model(&m, &new_atoms.0, &anchor).map_err(usage)?;
            written("extend-model", &t, out)
        }
        Command::Invariant { model, solution, chain, depth, base, tail, thresholds } => {
            let m = load_model(model)?;
            let f = match solution {
                Some(p) => {
                    let mut f = AnchorFamily::new();
                    for x in load_solution(&m, p)?.g_part().values() {
                        f.insert(x.clone());
                    }
                    f
                }
                None => AnchorFamily::zero_on(&m, m.universe().faces()),
            };
            if let Some(AtomList(chain)) = chain {
                let h = Face::new(chain.get(1..).unwrap_or(&[]), m.k()).map_err(usage)?;
                let y = m.h_base(&h).map_err(usage)?;
                let x = invariant_k(&m, chain, &f, &y).map_err(failed)?;
                return Ok(Outcome::pass(
                    "invariant",
                    format!("invariant: {} + E_{}", x.rep(), x.cutoff()),
                    json!({"chain": chain.iter().map(|a| a.0).collect::<Vec<_>>(), "coset": x.rep().to_string(), "cutoff": x.cutoff()}),
                ));
            }
            let (Some(depth), Some(AtomList(base)), Some(AtomList(tail))) = (depth, base, tail) else {
                return Err(usage("give --chain, or --depth with --base and --tail"));
            };
            let th = Thresholds::new(thresholds.as_ref().map_or_else(|| vec![1], |t| t.0.clone())).map_err(usage)?;
            let nested: Vec<Vec<Atom>> = (0..*depth)
                .map(|j| base[..th.get(j).unwrap_or(usize::MAX).min(base.len())].to_vec())
                .collect();
            let x = invariant_m(&m, *depth, base, &nested, tail, &f, &th).map_err(failed)?;
            Ok(Outcome::pass("invariant", format!("depth-{depth} invariant: {x}"), json!({"depth": depth, "class": x.to_string()})))
        }
        Command::DemoRecovery { k, thresholds, grid, codes, budget, support, trials, probe } => {
            let th = Thresholds::new(thresholds.0.clone()).map_err(usage)?;
            let codes = parse_codes(&read(codes)?).map_err(usage)?;
            let ma = build_ma(*k, &th, *grid, &codes).map_err(usage)?;
            let support = support.unwrap_or_else(|| if *budget == 0 { 1 } else { (grid - 1) / (2 * budget) });
            let mut lines = Vec::new();
            let mut passed = true;
            let mut claims = Vec::new();
            for depth in 0..=k - 2 {
                let c = check_claim(&ma, depth).map_err(failed)?;
                lines.push(format!("claim depth {depth}: {} checked, {} failures", c.checked, c.failures.len()));
                passed &= c.holds();
                claims.push(c);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut runs = Vec::new();
            for trial in 0..*trials {
                let h = random_adversary(&ma, &mut rng, *budget, support.max(1));
                let r = recover_codes(&ma, &h).map_err(failed)?;
                if r.within_budget {
                    passed &= r.exact;
                }
                lines.push(format!(
                    "trial {trial}: moved {} pairs, max support {}, {} budget, recovery {}",
                    r.perturbed_pairs,
                    r.max_support,
                    if r.within_budget { "within" } else { "over" },
                    if r.exact { "exact" } else { "FAILED" }
                ));
                runs.push(r);
            }
            let mut probe_report = None;
            if *probe {
                let h = boundary_adversary(&ma, 0, 0).map_err(failed)?;
                let r = recover_codes(&ma, &h).map_err(failed)?;
                lines.push(format!(
                    "boundary probe: {} pairs, max support {}, recovery {} (failure permitted)",
                    r.perturbed_pairs,
                    r.max_support,
                    if r.exact { "exact" } else { "failed" }
                ));
                probe_report = Some(r);
            }
            let recovered = runs.last().map(|r| r.recovered.clone()).unwrap_or_default();
            lines.push(format!("input codes: {}", ma.codes.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")));
            Ok(Outcome::new(
                "demo-recovery",
                passed,
                lines.join("\n"),
                json!({"claims": claims, "trials": runs, "probe": probe_report, "recovered_last": recovered}),
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.render(cli.format));
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            print!("{}", Failure::new(command_name(&cli.command), &msg).render(cli.format));
            ExitCode::from(1)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::BuildStandard(_) => "build-standard",
        Command::BuildCanonical(_) => "build-canonical",
        Command::CheckAxioms { .. } => "check-axioms",
        Command::Solve { .. } => "solve",
        Command::ExtendSolution { .. } => "extend-solution",
        Command::Amalgamate { .. } => "amalgamate",
        Command::Iso { .. } => "iso",
        Command::PullBack { .. } => "pull-back",
        Command::ExtendModel { .. } => "extend-model",
        Command::Invariant { .. } => "invariant",
        Command::DemoRecovery { .. } => "demo-recovery",
    }
}
