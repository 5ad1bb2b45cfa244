//! Command-line front end. Exit codes: 0 success, 1 a domain failure reported
//! as the result, 2 usage or input errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bundle::{transcript, Bundle};
use crate::checks::run_all;
use crate::csp::DomainElement;
use crate::diagnosis::{start_session, DiagnosisSession, IntendedOracle, Verdict};
use crate::error::{Error, Result};
use crate::explanations::Explanations;
use crate::model::{parse_model, Model};
use crate::propagation::{as_operators, closure};
use crate::render::render_proof_tree;
use crate::retraction::{plan_retraction, retract, verify_retraction, SolverState};
use crate::search::{solve, BranchId, NodeStatus, SearchTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "valex",
    version,
    about = "Finite-domain propagation with value-withdrawal explanations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print reduced domains, branches and solutions.
    Solve { model: PathBuf },
    /// Print the proof tree for the removal of VAR=VALUE.
    Explain {
        model: PathBuf,
        #[command(flatten)]
        element: ElementArgs,
    },
    /// Explain why a failure branch has an empty domain.
    Failure {
        model: PathBuf,
        /// Branch id, e.g. `PM=3` or `PM∈{1,2}/AM=3`.
        #[arg(long)]
        branch: String,
    },
    /// Retract a constraint and repair the domains.
    Retract {
        model: PathBuf,
        #[arg(long)]
        constraint: String,
    },
    /// Write the JSON bundle of a solve.
    Export {
        model: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Run the oracle suites on this problem.
    Check { model: PathBuf },
    /// Locate the rule behind a wrong removal.
    Diagnose {
        model: PathBuf,
        #[command(flatten)]
        element: ElementArgs,
        /// Judge answers against this intended model.
        #[arg(long)]
        intended: Option<PathBuf>,
        /// Answer `NODE=CORRECT|INCORRECT`, nodes numbered in pre-order.
        #[arg(long = "answer")]
        answers: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct ElementArgs {
    #[arg(long)]
    var: String,
    #[arg(long, allow_hyphen_values = true)]
    value: i64,
}

#[derive(Debug, Args)]
struct SessionArgs {
    /// Include a diagnosis transcript on the tree of this variable.
    #[arg(long, requires = "session_value")]
    session_var: Option<String>,
    #[arg(long, requires = "session_var", allow_hyphen_values = true)]
    session_value: Option<i64>,
    #[arg(long, requires = "session_var")]
    intended: Option<PathBuf>,
    #[arg(long = "answer", requires = "session_var")]
    answers: Vec<String>,
}

/// Runs the command line `args` (program name first).
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn load(path: &Path) -> Result<Model> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{message} (in {})", path.display()),
        },
        other => other,
    })
}

struct Solved {
    model: Model,
    tree: SearchTree,
    explanations: Explanations,
}

fn solve_model(path: &Path) -> Result<Solved> {
    let model = load(path)?;
    let tree = solve(&model.csp, &model.labeling);
    let explanations = Explanations::build(&tree)?;
    Ok(Solved {
        model,
        tree,
        explanations,
    })
}

fn element(model: &Model, args: &ElementArgs) -> Result<DomainElement> {
    model.csp.element(&args.var, args.value)
}

fn io(e: std::io::Error) -> Error {
    Error::usage(format!("write failed: {e}"))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Solve { model } => cmd_solve(&model, out),
        Command::Explain { model, element: el } => {
            let s = solve_model(&model)?;
            let h = element(&s.model, &el)?;
            match s.explanations.explain(h) {
                Some(t) => write!(out, "{}", render_proof_tree(t, s.model.csp.domain())).map_err(io)?,
                None => writeln!(out, "not removed in any branch").map_err(io)?,
            }
            Ok(EXIT_OK)
        }
        Command::Failure { model, branch } => cmd_failure(&model, &branch, out),
        Command::Retract { model, constraint } => cmd_retract(&model, &constraint, out),
        Command::Export { model, output, session } => {
            let s = solve_model(&model)?;
            let mut bundle = Bundle::from_solve(&s.tree, &s.explanations);
            if let (Some(var), Some(value)) = (session.session_var, session.session_value) {
                let el = ElementArgs { var, value };
                let session = run_session(&s, &el, session.intended.as_deref(), &session.answers)?;
                bundle = bundle.with_session(transcript(&session));
            }
            std::fs::write(&output, bundle.to_json())
                .map_err(|e| Error::usage(format!("cannot write {}: {e}", output.display())))?;
            writeln!(
                out,
                "wrote {} ({} nodes, {} proof trees)",
                output.display(),
                bundle.nodes.len(),
                bundle.proof_trees.len()
            )
            .map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Check { model } => {
            let m = load(&model)?;
            let reports = run_all(&m.csp, &m.labeling)?;
            let mut all = true;
            for r in &reports {
                all &= r.passed;
                let tag = if r.passed { "ok  " } else { "FAIL" };
                writeln!(out, "{tag} {} ({})", r.name, r.detail).map_err(io)?;
            }
            Ok(if all { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Diagnose {
            model,
            element: el,
            intended,
            answers,
        } => {
            let s = solve_model(&model)?;
            let session = run_session(&s, &el, intended.as_deref(), &answers)?;
            let dom = s.model.csp.domain();
            for &(node, verdict) in session.history() {
                writeln!(out, "#{node} {} : {verdict}", session.node(node).judgment.display(dom)).map_err(io)?;
            }
            match session.describe_conclusion() {
                Some(text) => writeln!(out, "{text}").map_err(io)?,
                None => {
                    let next = session.cursor().expect("unconcluded sessions have a cursor");
                    writeln!(
                        out,
                        "pending; next query #{next} {}",
                        session.node(next).judgment.display(dom)
                    )
                    .map_err(io)?
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn cmd_solve(path: &Path, out: &mut dyn Write) -> Result<i32> {
    let model = load(path)?;
    let csp = &model.csp;
    let dom = csp.domain();
    let tree = solve(csp, &model.labeling);
    let reduced = closure(&csp.full_env(), &as_operators(tree.operators())).env;
    writeln!(out, "reduced: {reduced}").map_err(io)?;
    let leaves: Vec<usize> = tree.leaves().collect();
    for &i in &leaves {
        let n = tree.node(i);
        let detail = match &n.status {
            NodeStatus::Solution(t) => t.display(dom),
            NodeStatus::Failure(vars) => {
                let names: Vec<&str> = vars.iter().map(|&v| dom.name(v)).collect();
                format!("empty {}", names.join(" "))
            }
            _ => n.env.to_string(),
        };
        writeln!(out, "branch {}: {} {detail}", tree.branch_label(i), n.status.tag()).map_err(io)?;
    }
    let solutions = tree.solutions();
    for t in &solutions {
        writeln!(out, "solution: {}", t.display(dom)).map_err(io)?;
    }
    writeln!(out, "branches: {}, failures: {}", leaves.len(), tree.failure_count()).map_err(io)?;
    let all_failed = leaves
        .iter()
        .all(|&i| matches!(tree.node(i).status, NodeStatus::Failure(_)));
    Ok(if all_failed { EXIT_FAILURE } else { EXIT_OK })
}

fn cmd_failure(path: &Path, branch: &str, out: &mut dyn Write) -> Result<i32> {
    let s = solve_model(path)?;
    let dom = s.model.csp.domain();
    let id = BranchId::parse(dom, branch)?;
    let idx = s
        .tree
        .find(&id)
        .ok_or_else(|| Error::usage(format!("no branch `{branch}`")))?;
    let NodeStatus::Failure(vars) = &s.tree.node(idx).status else {
        return Err(Error::usage(format!(
            "branch {} is not a failure ({})",
            s.tree.branch_label(idx),
            s.tree.node(idx).status.tag()
        )));
    };
    for &x in vars {
        writeln!(out, "failure at {}: {} is empty", s.tree.branch_label(idx), dom.name(x)).map_err(io)?;
        for t in s.explanations.failure_explanation(&s.tree, idx, x)? {
            writeln!(out).map_err(io)?;
            write!(out, "{}", render_proof_tree(&t, dom)).map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_retract(path: &Path, constraint: &str, out: &mut dyn Write) -> Result<i32> {
    let model = load(path)?;
    let dom = model.csp.domain();
    let state = SolverState::new(&model.csp);
    let plan = plan_retraction(&state, constraint)?;
    let after = retract(&state, constraint)?;
    let ok = verify_retraction(&state, constraint, &after)?;
    let c = model.csp.constraint(constraint)?;
    writeln!(out, "retracted {} ({})", c.id, c.describe(dom)).map_err(io)?;
    writeln!(out, "before: {}", state.env()).map_err(io)?;
    let back: Vec<String> = plan.reintroduce.iter().map(|&h| dom.display_element(h)).collect();
    writeln!(out, "reintroduced: {}", back.join(" ")).map_err(io)?;
    writeln!(out, "after: {}", after.env()).map_err(io)?;
    writeln!(out, "verified: {}", if ok { "yes" } else { "no" }).map_err(io)?;
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

pub fn parse_answer(text: &str) -> Result<(usize, Verdict)> {
    let bad = || Error::usage(format!("malformed answer `{text}`, expected NODE=CORRECT|INCORRECT"));
    let (node, verdict) = text.split_once(['=', ':']).ok_or_else(bad)?;
    let node = node.trim().trim_start_matches('#').parse().map_err(|_| bad())?;
    let verdict = match Verdict::from_tag(&verdict.trim().to_ascii_uppercase()) {
        Some(Verdict::Unknown) | None => return Err(bad()),
        Some(v) => v,
    };
    Ok((node, verdict))
}

fn run_session(s: &Solved, el: &ElementArgs, intended: Option<&Path>, answers: &[String]) -> Result<DiagnosisSession> {
    let h = element(&s.model, el)?;
    let pt = s.explanations.explain(h).ok_or_else(|| {
        Error::usage(format!(
            "{} is not removed in any branch",
            s.model.csp.domain().display_element(h)
        ))
    })?;
    let mut session = start_session(pt, &s.model.csp, s.tree.operators())?;
    match (intended, answers.is_empty()) {
        (Some(path), true) => {
            let intended = load(path)?;
            if intended.csp.domain() != s.model.csp.domain() {
                return Err(Error::usage("the intended model declares different variables"));
            }
            let oracle = IntendedOracle::new(&intended.csp);
            while let Some(c) = session.cursor() {
                let v = oracle.judge(&session.node(c).judgment);
                session.answer(c, v)?;
            }
        }
        (None, false) => {
            let parsed = answers.iter().map(|a| parse_answer(a)).collect::<Result<Vec<_>>>()?;
            session.replay(&parsed)?;
        }
        (Some(_), false) => return Err(Error::usage("give either --intended or --answer, not both")),
        (None, true) => return Err(Error::usage("give --intended or at least one --answer")),
    }
    Ok(session)
}
