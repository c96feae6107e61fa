//! Command-line front end: reads documents, runs one operation, writes the
//! resulting document to `--out` (or standard output) and a summary to
//! standard output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atomcompact::doc::{parse_word, schema_of, DEFSET, SCALARFUN, SCHEMAS};
use atomcompact::freelin::hom_basis_types;
use atomcompact::oracle::{eq_pool_size, Probe};
use atomcompact::{
    compactify, decompose, derivative, differential_run, format_rational, format_summary, materialize, orbit_summary,
    product_measure, rank_of, rank_stratify, Automaton, DefSet, Document, Error, ExpansionDoc, HomSpace, Measure,
    ProductOrder, ScalarFun, Theory, Truncation,
};
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Parser)]
#[command(
    name = "atomcompact",
    about = "Orbit-finite sets, their compactifications, dual bases, measures and automata",
    disable_version_flag = true,
    arg_required_else_help = true
)]
struct Cli {
    /// Print the version and the document schemas.
    #[arg(long)]
    version: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Compactification of a set, with an orbit count per rank.
    Compactify {
        set: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expansion of a scalar function in the dual basis, with a round-trip check.
    Decompose {
        function: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Basis of the linear maps between the free spaces of two sets.
    HomBasis {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure of a set, or expectation of a scalar function.
    MeasureEval { measure: PathBuf, argument: PathBuf },
    /// Product of two measures in the given order.
    Product {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_enum, default_value_t = Order::Left)]
        order: Order,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pushes a measure through the transition kernel of a probabilistic
    /// automaton along a word.
    Kleisli {
        automaton: PathBuf,
        measure: PathBuf,
        #[arg(long, default_value = "")]
        word: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a word; exits 1 when a det or ultra automaton rejects.
    Run {
        #[arg(long, value_enum)]
        kind: Kind,
        automaton: PathBuf,
        #[arg(long, default_value = "")]
        word: String,
    },
    /// Deterministic automaton over the compactified states of an ultra automaton.
    Determinize {
        automaton: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monoid element of a word for a weighted automaton.
    ToMonoid {
        automaton: PathBuf,
        #[arg(long)]
        word: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks against a finite pool of atoms.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Limit points of a subset of the compactification of a set.
    Derivative {
        subset: PathBuf,
        set: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Orbit counts of the compactification split by rank.
    Stratify { set: PathBuf },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Lists the points of a set over a pool.
    Materialize {
        set: PathBuf,
        /// Atoms added beyond the support (equality atoms).
        #[arg(long, default_value_t = 3)]
        room: usize,
    },
    /// Rank of scalar functions evaluated on the pool points of a set.
    Rank {
        domain: PathBuf,
        #[arg(required = true)]
        functions: Vec<PathBuf>,
        /// Atoms added beyond the support; defaults to the sizing rule.
        #[arg(long)]
        room: Option<usize>,
    },
    /// Compares runs on sampled words with an independent evaluation.
    Differential {
        automaton: PathBuf,
        #[arg(long, default_value_t = 500)]
        words: usize,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        room: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Left,
    Right,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Det,
    Ultra,
    Weighted,
    Prob,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Det => "det",
            Kind::Ultra => "ultra",
            Kind::Weighted => "weighted",
            Kind::Prob => "prob",
        }
    }
}

enum Failure {
    /// Bad invocation or unreadable input; exit 2.
    Usage(String),
    /// Schema or validation error; exit 3.
    Invalid(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Invalid(e)
    }
}

enum Status {
    Done,
    Rejected,
}

type Outcome = Result<Status, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load<T: Document>(path: &Path) -> Result<T, Failure> {
    Ok(T::from_text(&read(path)?)?)
}

fn load_kind(path: &Path, kind: Kind) -> Result<Automaton, Failure> {
    let a: Automaton = load(path)?;
    if a.kind() != kind.name() {
        return Err(Error::Schema(format!("{} holds a {} automaton, expected {}", path.display(), a.kind(), kind.name())).into());
    }
    Ok(a)
}

/// Writes a document to `out`, or prints it when no path is given.
fn emit<T: Document>(doc: &T, out: Option<&Path>) -> Result<(), Failure> {
    let text = doc.to_text()?;
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn max_arity(s: &DefSet) -> usize {
    s.tags().values().copied().max().unwrap_or(0)
}

fn compactify_cmd(set: &Path, out: Option<&Path>) -> Outcome {
    let s: DefSet = load(set)?;
    let c = compactify(&s);
    emit(&c, out)?;
    println!("{}", format_summary(&orbit_summary(&c)));
    Ok(Status::Done)
}

fn decompose_cmd(function: &Path, out: Option<&Path>) -> Outcome {
    let f: ScalarFun = load(function)?;
    let e = decompose(&f)?;
    let cells = e.verify(&f)?;
    let t = Truncation::around(f.theory(), f.support(), max_arity(f.domain()) + 1);
    let points = materialize(f.domain(), &t)?;
    for x in &points {
        if e.eval(x)? != f.eval(x)? {
            return Err(Error::NonzeroResidual(format!("expansion differs from the function at {x}")).into());
        }
    }
    emit(&ExpansionDoc { theory: f.theory(), expansion: e.clone() }, out)?;
    println!("terms: {}", e.len());
    println!("residual: 0 on {cells} cells");
    println!("round-trip: {}/{} points of {t}", points.len(), points.len());
    Ok(Status::Done)
}

fn hom_basis_cmd(source: &Path, target: &Path, out: Option<&Path>) -> Outcome {
    let h = HomSpace::new(&load(source)?, &load(target)?)?;
    emit(h.basis(), out)?;
    println!("hom basis: {} orbits", h.basis().orbit_count());
    for p in hom_basis_types(&h)? {
        println!("  {p}");
    }
    Ok(Status::Done)
}

fn measure_eval_cmd(measure: &Path, argument: &Path) -> Outcome {
    let mu: Measure = load(measure)?;
    let text = read(argument)?;
    let json: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let value = match schema_of(&json)? {
        DEFSET => mu.eval(&DefSet::from_json(&json)?)?,
        SCALARFUN => mu.expectation(&ScalarFun::from_json(&json)?)?,
        other => return Err(Error::Schema(format!("expected a set or a scalar function, found `{other}`")).into()),
    };
    println!("{}", format_rational(&value));
    Ok(Status::Done)
}

fn product_cmd(left: &Path, right: &Path, order: Order, out: Option<&Path>) -> Outcome {
    let order = match order {
        Order::Left => ProductOrder::LeftFirst,
        Order::Right => ProductOrder::RightFirst,
    };
    let m = product_measure(&load(left)?, &load(right)?, order)?;
    emit(&m, out)?;
    println!("types: {}", m.len());
    Ok(Status::Done)
}

fn kleisli_cmd(automaton: &Path, measure: &Path, word: &str, out: Option<&Path>) -> Outcome {
    let Automaton::Prob(a) = load_kind(automaton, Kind::Prob)? else { unreachable!("kind checked") };
    let mut mu: Measure = load(measure)?;
    if !mu.base().same_as(&a.states)? {
        return Err(Error::NotASubset("the measure does not live on the automaton states".into()).into());
    }
    for l in parse_word(word, &a.alphabet)? {
        if !a.alphabet.member(&l)? {
            return Err(Error::LetterNotInAlphabet(l.to_string()).into());
        }
        mu = a.delta.extend_with(Some(&l), &mu)?;
    }
    emit(&mu, out)?;
    println!("{mu}");
    Ok(Status::Done)
}

fn run_cmd(kind: Kind, automaton: &Path, word: &str) -> Outcome {
    let a = load_kind(automaton, kind)?;
    let w = parse_word(word, a.alphabet())?;
    let outcome = a.run(&w)?;
    println!("{outcome}");
    Ok(match outcome.accepted() {
        Some(false) => Status::Rejected,
        _ => Status::Done,
    })
}

fn determinize_cmd(automaton: &Path, out: Option<&Path>) -> Outcome {
    let Automaton::Ultra(a) = load_kind(automaton, Kind::Ultra)? else { unreachable!("kind checked") };
    let d = a.determinize()?;
    println!("states: {}", format_summary(&orbit_summary(&d.states)));
    emit(&Automaton::Det(d), out)?;
    Ok(Status::Done)
}

fn to_monoid_cmd(automaton: &Path, word: Option<&str>, out: Option<&Path>) -> Outcome {
    let Automaton::Weighted(a) = load_kind(automaton, Kind::Weighted)? else { unreachable!("kind checked") };
    let monoid = a.to_monoid()?;
    let w = parse_word(word.unwrap_or(""), &a.alphabet)?;
    let e = monoid.word(&w)?;
    println!("basis: {} orbits", monoid.algebra().space().basis().orbit_count());
    println!("terms: {}", e.len());
    println!("value: {}", format_rational(&monoid.value(&e)?));
    emit(&ExpansionDoc { theory: Theory::Eq, expansion: e }, out)?;
    Ok(Status::Done)
}

fn oracle_cmd(command: &OracleCommand) -> Outcome {
    match command {
        OracleCommand::Materialize { set, room } => {
            let s: DefSet = load(set)?;
            let t = Truncation::around(s.theory(), s.support(), *room);
            let points = materialize(&s, &t)?;
            println!("{t}");
            for x in &points {
                println!("  {x}");
            }
            println!("points: {}", points.len());
        }
        OracleCommand::Rank { domain, functions, room } => {
            let d: DefSet = load(domain)?;
            let fs: Vec<ScalarFun> = functions.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
            let support = fs.iter().fold(d.support().clone(), |acc, f| acc.union(f.support()));
            let probes: Vec<Probe> = fs.into_iter().map(Probe::Fun).collect();
            let room = room.unwrap_or_else(|| eq_pool_size(&probes).saturating_sub(support.len()).max(max_arity(&d) + 1));
            let t = Truncation::around(d.theory(), &support, room);
            let r = rank_of(&d, &probes, &t)?;
            println!("{t}");
            println!("rank: {r} of {}", probes.len());
        }
        OracleCommand::Differential { automaton, words, max_len, seed, room } => {
            let a: Automaton = load(automaton)?;
            let t = Truncation::around(a.theory(), &a.support(), *room);
            let report = differential_run(&a, &t, *words, *max_len, *seed)?;
            println!("{report}");
            if !report.all_agree() {
                return Err(Error::NotWellDefined(format!("{} disagreements", report.disagreements.len())).into());
            }
        }
    }
    Ok(Status::Done)
}

fn derivative_cmd(subset: &Path, set: &Path, out: Option<&Path>) -> Outcome {
    let z: DefSet = load(subset)?;
    let s: DefSet = load(set)?;
    let d = derivative(&z, &s)?;
    emit(&d, out)?;
    println!("{}", format_summary(&orbit_summary(&d)));
    Ok(Status::Done)
}

fn stratify_cmd(set: &Path) -> Outcome {
    let s: DefSet = load(set)?;
    for (i, stratum) in rank_stratify(&s).iter().enumerate() {
        println!("rank {i}: {} orbits", stratum.orbit_count());
    }
    Ok(Status::Done)
}

fn dispatch(command: &Command) -> Outcome {
    match command {
        Command::Compactify { set, out } => compactify_cmd(set, out.as_deref()),
        Command::Decompose { function, out } => decompose_cmd(function, out.as_deref()),
        Command::HomBasis { source, target, out } => hom_basis_cmd(source, target, out.as_deref()),
        Command::MeasureEval { measure, argument } => measure_eval_cmd(measure, argument),
        Command::Product { left, right, order, out } => product_cmd(left, right, *order, out.as_deref()),
        Command::Kleisli { automaton, measure, word, out } => kleisli_cmd(automaton, measure, word, out.as_deref()),
        Command::Run { kind, automaton, word } => run_cmd(*kind, automaton, word),
        Command::Determinize { automaton, out } => determinize_cmd(automaton, out.as_deref()),
        Command::ToMonoid { automaton, word, out } => to_monoid_cmd(automaton, word.as_deref(), out.as_deref()),
        Command::Oracle { command } => oracle_cmd(command),
        Command::Derivative { subset, set, out } => derivative_cmd(subset, set, out.as_deref()),
        Command::Stratify { set } => stratify_cmd(set),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        println!("atomcompact {}", env!("CARGO_PKG_VERSION"));
        for s in SCHEMAS {
            println!("schema {s}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(command) = &cli.command else {
        eprintln!("{}", Cli::command().render_usage());
        return ExitCode::from(2);
    };
    match dispatch(command) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Rejected) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
