//! Command-line front end. Every subcommand parses its inputs, calls one
//! library operation and prints the result.
//!
//! Exit status: 0 on success, 1 when an input fails validation or a checked
//! estimate does not hold, 2 on file or format errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::algebra::{ComplexMatrix, Tolerance};
use crate::games::{
    self, ClassicalOptions, GameError, SynchronousGame, DEFAULT_ENUMERATION_BUDGET,
};
use crate::graph::{self, GraphError, GraphFormat, Vertex};
use crate::indepset::{self, IndepSetError, Weighting};
use crate::io::{self, IoError};
use crate::lifting::{self, LiftError, LiftOptions, DEFAULT_KAPPA_PRIME};
use crate::luck::{self, LuckError, LuckParams};
use crate::par::Execution;
use crate::rational;
use crate::stability::{self, RoundingError, RoundingReport};

#[derive(Debug, Parser)]
#[command(
    name = "syncgames",
    version,
    about = "Synchronous games, independent set games and PVM rounding"
)]
pub struct Cli {
    /// Numerical tolerance eta for PVM/projection checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Run data-parallel loops sequentially.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check normalization and synchronicity of a game file.
    Validate { game: PathBuf },
    /// Export the game graph X(G).
    Graph {
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphOutput::Dot)]
        format: GraphOutput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the independent set game (X(G), |Q|).
    Reduce {
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = WeightingArg::Diagonal)]
        weighting: WeightingArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical value by exhaustive search over deterministic strategies.
    ClassicalValue {
        game: PathBuf,
        /// Only consider synchronous pairs f = f'.
        #[arg(long)]
        synchronous_only: bool,
        /// Maximum number of predicate evaluations.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u128,
    },
    /// Value of a synchronous quantum strategy.
    Eval { game: PathBuf, strategy: PathBuf },
    /// Loss of a strategy on an independent set game (diagonal weighting).
    Loss {
        indep_game: PathBuf,
        strategy: PathBuf,
    },
    /// Round a family of positive contractions to a PVM.
    Round(RoundArgs),
    /// Lift a synchronous strategy on G to (X(G), |Q|).
    LiftForward {
        game: PathBuf,
        strategy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the independent set game.
        #[arg(long)]
        game_out: Option<PathBuf>,
    },
    /// Transport a strategy on (X(G), |Q|) back to G.
    LiftBack {
        game: PathBuf,
        strategy: PathBuf,
        /// Sum without rounding; fails unless the result is a PVM.
        #[arg(long)]
        perfect: bool,
        /// Strategy file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the lift report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Constant in the value bound `1 - kappa' sqrt(t delta)`.
        #[arg(long, default_value_t = DEFAULT_KAPPA_PRIME)]
        kappa_prime: f64,
    },
    /// Evaluate the reduction verifier.
    Verify(VerifyArgs),
    /// Emit a (k,n)-luck game, its sharpness strategy and report.
    Luck {
        /// At least 2; the game has `kn` questions.
        #[arg(long)]
        k: usize,
        /// At least 1; questions `1..=n` win only against themselves.
        #[arg(long)]
        n: usize,
        /// Game file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the independent set game.
        #[arg(long)]
        indep_game_out: Option<PathBuf>,
        /// Write the sharpness strategy.
        #[arg(long)]
        strategy_out: Option<PathBuf>,
        /// Write the sharpness report (JSON).
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Sharpness report for the (k,n)-luck game.
    Sharpness {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct RoundArgs {
    /// Operator file ("dim", "operators").
    pub operators: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Require the inputs to be projections.
    #[arg(long)]
    pub projections: bool,
    /// Reference PVM for subordinate rounding.
    #[arg(long, requires = "partition")]
    pub reference: Option<PathBuf>,
    /// Blocks of operator indices, e.g. "0,1;2".
    #[arg(long, requires = "reference")]
    pub partition: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Independent set game file (single-tuple mode reads only the source game).
    pub indep_game: Option<PathBuf>,
    /// Compare the verifier with the predicate on every tuple.
    #[arg(long, value_name = "GAME")]
    pub exhaustive: Option<PathBuf>,
    /// Source game for single-tuple mode.
    #[arg(long)]
    pub game: Option<PathBuf>,
    #[arg(long)]
    pub i: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    /// Vertex "q,a".
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub v: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphOutput {
    Dot,
    Edges,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Diagonal,
    Uniform,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Diagonal => Weighting::Diagonal,
            WeightingArg::Uniform => Weighting::Uniform,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Format(_) | CliError::Output(_) => 2,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Format(e.to_string())
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Invalid(e.to_string())
            }
        }
    )*};
}
invalid_from!(
    GameError,
    GraphError,
    IndepSetError,
    LiftError,
    LuckError,
    RoundingError
);

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => io::write_text(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_valid_game(path: &Path) -> Result<SynchronousGame, CliError> {
    let g = io::read_game(path)?;
    let report = games::validate_game(&g);
    if !report.is_valid() {
        return Err(CliError::Invalid(format!(
            "{}: invalid game\n{report}",
            path.display()
        )));
    }
    Ok(g)
}

fn parse_vertex(s: &str) -> Result<Vertex, CliError> {
    let err = || {
        CliError::Format(format!(
            "cannot parse vertex {s:?} (expected \"q,a\" or \"v\")"
        ))
    };
    match s.split_once(',') {
        Some((q, a)) => Ok((
            q.trim().parse().map_err(|_| err())?,
            a.trim().parse().map_err(|_| err())?,
        )),
        None => Ok((s.trim().parse().map_err(|_| err())?, 0)),
    }
}

fn parse_partition(s: &str) -> Result<Vec<Vec<usize>>, CliError> {
    s.split(';')
        .map(|block| {
            block
                .split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| CliError::Format(format!("cannot parse partition {s:?}")))
                })
                .collect()
        })
        .collect()
}

fn print_checks(out: &mut dyn Write, report: &RoundingReport) -> Result<bool, CliError> {
    let mut ok = true;
    for c in report.deterministic_checks() {
        writeln!(
            out,
            "check {} {}",
            if c.holds { "ok" } else { "FAIL" },
            c.name
        )?;
        ok &= c.holds;
    }
    // Empirical contracts: reported, not enforced.
    for c in [report.end_to_end_check(), report.povm_contract_check()] {
        writeln!(
            out,
            "contract {} {}",
            if c.holds { "ok" } else { "exceeded" },
            c.name
        )?;
    }
    Ok(ok)
}

fn run_round(args: &RoundArgs, tol: Tolerance, out: &mut dyn Write) -> Result<(), CliError> {
    let ops = io::read_operators(&args.operators)?;
    let (operators, report): (Vec<ComplexMatrix>, RoundingReport) =
        match (&args.reference, &args.partition) {
            (Some(reference), Some(partition)) => {
                let p = io::read_operators(reference)?;
                let partition = parse_partition(partition)?;
                let r = stability::round_subordinate(&ops, &p, &partition, tol)?;
                (r.operators, r.report)
            }
            _ if args.projections => {
                let r = stability::round_projection_family(&ops, tol)?;
                (r.operators, r.report)
            }
            _ => {
                let r = stability::round_positive_family(&ops, tol)?;
                (r.operators, r.report)
            }
        };
    if let Some(path) = &args.out {
        io::write_text(path, &io::operators_to_json(&operators)?)?;
    }
    if let Some(path) = &args.report {
        io::write_text(path, &io::to_pretty(&report)?)?;
    }
    out.write_all(report.to_key_value().as_bytes())?;
    if !print_checks(out, &report)? {
        return Err(CliError::Invalid("a deterministic estimate failed".into()));
    }
    if args.out.is_none() {
        out.write_all(io::operators_to_json(&operators)?.as_bytes())?;
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(source) = &args.exhaustive {
        let isg = args.indep_game.as_ref().ok_or_else(|| {
            CliError::Format("--exhaustive needs an independent set game file".into())
        })?;
        let game = io::read_indep_game(isg)?;
        let g = read_valid_game(source)?;
        let report = indepset::verifier_equivalence(&g, &game)?;
        return match report.first_mismatch {
            None => {
                writeln!(
                    out,
                    "equivalent on all tuples ({} checked)",
                    report.tuples_checked
                )?;
                Ok(())
            }
            Some((i, j, u, v)) => Err(CliError::Invalid(format!(
                "mismatch at i={i} j={j} u=({},{}) v=({},{})",
                u.0, u.1, v.0, v.1
            ))),
        };
    }
    let missing =
        || CliError::Format("single-tuple mode needs --game, --i, --j, --u and --v".into());
    let g = read_valid_game(args.game.as_deref().ok_or_else(missing)?)?;
    let (i, j) = (args.i.ok_or_else(missing)?, args.j.ok_or_else(missing)?);
    let u = parse_vertex(args.u.as_deref().ok_or_else(missing)?)?;
    let v = parse_vertex(args.v.as_deref().ok_or_else(missing)?)?;
    let accept = indepset::reduction_verifier(&g, i, j, u, v)?;
    writeln!(out, "{}", if accept { "accept" } else { "reject" })?;
    Ok(())
}

/// Runs one parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(CliError::Format(format!(
            "--tol must be positive (got {})",
            cli.tol
        )));
    }
    let tol = Tolerance::new(cli.tol);
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Validate { game } => {
            let g = io::read_game(game)?;
            let report = games::validate_game(&g);
            if !report.is_valid() {
                return Err(CliError::Invalid(report.to_string()));
            }
            writeln!(out, "valid")?;
        }
        Command::Graph {
            game,
            format,
            out: path,
        } => {
            let x = graph::build_game_graph(&io::read_game(game)?)?;
            let text = match format {
                GraphOutput::Dot => graph::export_graph(&x, GraphFormat::Dot),
                GraphOutput::Edges => graph::export_graph(&x, GraphFormat::EdgeList),
                GraphOutput::Json => io::graph_to_json(&x)?,
            };
            emit(out, path.as_deref(), &text)?;
        }
        Command::Reduce {
            game,
            weighting,
            out: path,
        } => {
            let g = read_valid_game(game)?;
            let isg = indepset::reduce_with(&g, (*weighting).into())?;
            emit(out, path.as_deref(), &io::indep_game_to_json(&isg)?)?;
        }
        Command::ClassicalValue {
            game,
            synchronous_only,
            budget,
        } => {
            let g = read_valid_game(game)?;
            let opts = ClassicalOptions {
                budget: *budget,
                synchronous_only: *synchronous_only,
                execution,
            };
            let v = games::classical_value(&g, &opts)?;
            match &v.exact {
                Some(e) => writeln!(out, "{}", rational::format_rational(e))?,
                None => writeln!(out, "{:.12}", v.value)?,
            }
            let join = |f: &[usize]| {
                f.iter()
                    .map(|&a| g.answers[a].as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            writeln!(out, "f {}", join(&v.witness.f))?;
            writeln!(out, "f' {}", join(&v.witness.f_prime))?;
        }
        Command::Eval { game, strategy } => {
            let g = read_valid_game(game)?;
            let s = io::read_sync_strategy(strategy)?;
            writeln!(out, "{:.12}", games::eval_sync_strategy(&g, &s, tol)?)?;
        }
        Command::Loss {
            indep_game,
            strategy,
        } => {
            let game = io::read_indep_game(indep_game)?;
            let s = io::read_indep_strategy_for(strategy, &game)?;
            let b = indepset::sync_loss_indep_with(&game, &s, tol, execution)?;
            out.write_all(indepset::format_loss(&b).as_bytes())?;
        }
        Command::Round(args) => run_round(args, tol, out)?,
        Command::LiftForward {
            game,
            strategy,
            out: path,
            game_out,
        } => {
            let g = read_valid_game(game)?;
            let s = io::read_sync_strategy(strategy)?;
            let (isg, lifted) = lifting::forward_lift(&g, &s, tol)?;
            if let Some(p) = game_out {
                io::write_text(p, &io::indep_game_to_json(&isg)?)?;
            }
            emit(
                out,
                path.as_deref(),
                &io::indep_strategy_to_json(&lifted, isg.graph.vertices())?,
            )?;
        }
        Command::LiftBack {
            game,
            strategy,
            perfect,
            out: path,
            report,
            kappa_prime,
        } => {
            let g = read_valid_game(game)?;
            let isg = indepset::reduce(&g)?;
            let s = io::read_indep_strategy_for(strategy, &isg)?;
            let labels = Some(g.questions.as_slice());
            if *perfect {
                let back = lifting::backward_lift_perfect(&s, &g, tol)?;
                emit(
                    out,
                    path.as_deref(),
                    &io::sync_strategy_to_json(&back, labels)?,
                )?;
            } else {
                let options = LiftOptions {
                    kappa_prime: *kappa_prime,
                    execution,
                };
                let (back, rep) = lifting::backward_lift_approx_with(&s, &g, tol, options)?;
                if let Some(p) = report {
                    io::write_text(p, &io::to_pretty(&rep)?)?;
                }
                let strategy_text = io::sync_strategy_to_json(&back, labels)?;
                match path {
                    Some(p) => io::write_text(p, &strategy_text)?,
                    None => out.write_all(strategy_text.as_bytes())?,
                }
                writeln!(out, "delta {:.12e}", rep.delta)?;
                writeln!(out, "value_on_G {:.12}", rep.value_on_g)?;
                writeln!(out, "bound_rhs {:.12}", rep.bound_rhs)?;
                let mut ok = true;
                for c in rep.deterministic_checks() {
                    writeln!(
                        out,
                        "check {} {}",
                        if c.holds { "ok" } else { "FAIL" },
                        c.name
                    )?;
                    ok &= c.holds;
                }
                let v = rep.value_check();
                writeln!(
                    out,
                    "contract {} {}",
                    if v.holds { "ok" } else { "exceeded" },
                    v.name
                )?;
                if !ok {
                    return Err(CliError::Invalid("a deterministic estimate failed".into()));
                }
            }
        }
        Command::Verify(args) => run_verify(args, out)?,
        Command::Luck {
            k,
            n,
            out: path,
            indep_game_out,
            strategy_out,
            report_out,
        } => {
            let p = LuckParams::new(*k, *n)?;
            let g = luck::make_luck_game(p);
            emit(out, path.as_deref(), &io::game_to_json(&g)?)?;
            let isg = luck::luck_indep_game(p)?;
            if let Some(f) = indep_game_out {
                io::write_text(f, &io::indep_game_to_json(&isg)?)?;
            }
            if let Some(f) = strategy_out {
                io::write_text(
                    f,
                    &io::indep_strategy_to_json(
                        &luck::sharpness_strategy(p),
                        isg.graph.vertices(),
                    )?,
                )?;
            }
            let report = luck::sharpness_report(p)?;
            if let Some(f) = report_out {
                io::write_text(f, &io::to_pretty(&report)?)?;
            }
            if path.is_some() {
                out.write_all(report.to_key_value().as_bytes())?;
            }
        }
        Command::Sharpness { k, n, json } => {
            let report = luck::sharpness_report(LuckParams::new(*k, *n)?)?;
            if *json {
                out.write_all(io::to_pretty(&report)?.as_bytes())?;
            } else {
                out.write_all(report.to_key_value().as_bytes())?;
            }
            if !report.holds() {
                return Err(CliError::Invalid(
                    "sharpness inequality does not hold".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the exit status; errors go to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
