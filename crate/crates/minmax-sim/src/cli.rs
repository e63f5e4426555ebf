//! Command-line interface: binds flags to library runs and experiments.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration or
//! usage errors. All output is deterministic for a fixed argument list and
//! seed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::evaluator::{evaluate, EvaluatorConfig, DEFAULT_C_FACTOR};
use crate::harness::{
    run_convergence_experiment, run_scaling_experiment, run_success_experiment, solve_recurrence,
    ExperimentReport,
};
use crate::oracle::{ExtIndex, OracleMode, QueryLedger};
use crate::subroutines::{Backend, BackendConfig};
use crate::trees::{
    eval_minmax, gen_tree, LeafAssignment, MinMaxTree, Shape, TreeDocument, TreeShapeSpec,
    ValueDistribution, DEFAULT_RANDOM_MAX_ARITY,
};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "minmax-sim",
    version,
    about = "Evaluate MIN-MAX trees with comparison queries and run noise/scaling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one tree and print the result record
    Eval(EvalArgs),
    /// Generate a tree fixture file
    Gen(GenArgs),
    /// Print the interval-narrowing recurrence table C(m)
    Recurrence(RecurrenceArgs),
    /// Measure iterations-to-convergence against the recurrence bound
    Convergence(ConvergenceArgs),
    /// Measure success rates on a noise/budget grid
    Success(SuccessArgs),
    /// Measure query-cost scaling across tree sizes
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    Ideal,
    Stochastic,
    Grover,
}

impl From<BackendChoice> for Backend {
    fn from(b: BackendChoice) -> Backend {
        match b {
            BackendChoice::Ideal => Backend::Ideal,
            BackendChoice::Stochastic => Backend::Stochastic,
            BackendChoice::Grover => Backend::Grover,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Comparison,
    InputValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Args, Debug)]
struct TreeSourceArgs {
    /// Tree shape: `balanced:<arity>:<depth>` or `random:<leaves>[:<max_arity>]`
    #[arg(long)]
    shape: Option<String>,
    /// Tree fixture file written by `gen`
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Leaf values: `permutation`, `uniform:<lo>:<hi>`, or `duplicates:<k>`
    #[arg(long)]
    values: Option<String>,
}

#[derive(Args, Debug)]
struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendChoice::Ideal)]
    backend: BackendChoice,
    /// Per-call error probability; requires `--backend stochastic`
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration budget factor (iterations = ceil(c * log2(N+1)))
    #[arg(long, default_value_t = DEFAULT_C_FACTOR)]
    c_factor: f64,
    /// Odd majority-vote repetitions for the threshold decision
    #[arg(long, default_value_t = 1)]
    amp_reps: u32,
    /// Exponent of the modeled AND-OR cost
    #[arg(long, default_value_t = 0.5)]
    cost_exponent: f64,
    /// Polylog power of the modeled AND-OR cost
    #[arg(long, default_value_t = 0)]
    polylog_power: u32,
}

impl BackendArgs {
    fn to_config(&self, seed: u64) -> Result<BackendConfig> {
        if self.epsilon.is_some() && self.backend != BackendChoice::Stochastic {
            return Err(Error::Config(
                "--epsilon requires --backend stochastic".into(),
            ));
        }
        let cfg = BackendConfig {
            backend: self.backend.into(),
            epsilon: self.epsilon.unwrap_or(0.0),
            andor_cost_exponent: self.cost_exponent,
            andor_polylog_power: self.polylog_power,
            amplification_reps: self.amp_reps,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Also write the output to this path (for `eval --trace`, receives
    /// the trace as JSON lines instead)
    #[arg(long, env = "MINMAX_SIM_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    source: TreeSourceArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Query model the oracle enforces
    #[arg(long, value_enum, default_value_t = ModelChoice::Comparison)]
    model: ModelChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Halt as soon as the loop converges
    #[arg(long)]
    early_stop: bool,
    /// Record one step record per iteration (JSON lines)
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    source: TreeSourceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RecurrenceArgs {
    /// Largest m to solve for
    #[arg(long, default_value_t = 64)]
    m_max: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    /// Comma-separated tree sizes
    #[arg(long, value_delimiter = ',', default_value = "16,64,256,1024")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SuccessArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Comma-separated per-call error probabilities
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    epsilon_list: Vec<f64>,
    /// Comma-separated iteration budget factors
    #[arg(long, value_delimiter = ',', default_value = "6")]
    c_factor_list: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    amp_reps: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096,16384,65536")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parses arguments, dispatches, and returns the process exit code. All
/// normal output goes to `out`, diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Eval(args) => cmd_eval(args, out),
        Command::Gen(args) => cmd_gen(args, out),
        Command::Recurrence(args) => cmd_recurrence(args, out),
        Command::Convergence(args) => {
            let report =
                run_convergence_experiment(&args.n_list, args.trials, args.seed)?;
            emit_report(&report, &args.output, out)
        }
        Command::Success(args) => {
            let mut template = BackendConfig::stochastic(0.0, 0);
            template.amplification_reps = args.amp_reps;
            template.validate()?;
            let report = run_success_experiment(
                args.n,
                &args.epsilon_list,
                &args.c_factor_list,
                args.trials,
                args.seed,
                &template,
            )?;
            emit_report(&report, &args.output, out)
        }
        Command::Scaling(args) => {
            let template = args.backend.to_config(0)?;
            let report =
                run_scaling_experiment(&args.n_list, args.trials, args.seed, &template)?;
            emit_report(&report, &args.output, out)
        }
    }
}

fn parse_shape(s: &str) -> Result<Shape> {
    let parts: Vec<&str> = s.split(':').collect();
    let parse = |p: &str, what: &str| -> Result<usize> {
        p.parse()
            .map_err(|_| Error::Config(format!("bad {what} {p:?} in --shape {s:?}")))
    };
    match parts.as_slice() {
        ["balanced", arity, depth] => Ok(Shape::Balanced {
            arity: parse(arity, "arity")?,
            depth: parse(depth, "depth")? as u32,
        }),
        ["random", leaves] => Ok(Shape::Random {
            leaves: parse(leaves, "leaf count")?,
            max_arity: DEFAULT_RANDOM_MAX_ARITY,
        }),
        ["random", leaves, max_arity] => Ok(Shape::Random {
            leaves: parse(leaves, "leaf count")?,
            max_arity: parse(max_arity, "max arity")?,
        }),
        _ => Err(Error::Config(format!(
            "unrecognized --shape {s:?}; expected balanced:<arity>:<depth> or random:<leaves>[:<max_arity>]"
        ))),
    }
}

fn parse_values(s: &str) -> Result<ValueDistribution> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["permutation"] => Ok(ValueDistribution::Permutation),
        ["uniform", lo, hi] => {
            let lo = lo
                .parse()
                .map_err(|_| Error::Config(format!("bad uniform bound {lo:?}")))?;
            let hi = hi
                .parse()
                .map_err(|_| Error::Config(format!("bad uniform bound {hi:?}")))?;
            Ok(ValueDistribution::Uniform { lo, hi })
        }
        ["duplicates", k] => {
            let distinct = k
                .parse()
                .map_err(|_| Error::Config(format!("bad duplicates count {k:?}")))?;
            Ok(ValueDistribution::Duplicates { distinct })
        }
        _ => Err(Error::Config(format!(
            "unrecognized --values {s:?}; expected permutation, uniform:<lo>:<hi>, or duplicates:<k>"
        ))),
    }
}

fn load_tree(source: &TreeSourceArgs, seed: u64) -> Result<(MinMaxTree, LeafAssignment)> {
    match (&source.shape, &source.tree) {
        (Some(_), Some(_)) => Err(Error::Config(
            "--shape and --tree are mutually exclusive".into(),
        )),
        (None, None) => Err(Error::Config("one of --shape or --tree is required".into())),
        (Some(shape), None) => {
            let spec = TreeShapeSpec {
                shape: parse_shape(shape)?,
                values: parse_values(source.values.as_deref().unwrap_or("permutation"))?,
                seed,
            };
            gen_tree(&spec)
        }
        (None, Some(path)) => {
            if source.values.is_some() {
                return Err(Error::Config(
                    "--values only applies to generated trees (--shape)".into(),
                ));
            }
            let text = std::fs::read_to_string(path)?;
            let document: TreeDocument = serde_json::from_str(&text)?;
            document.into_parts()
        }
    }
}

/// Per-run result record emitted by `eval`. Correctness is judged here in
/// the CLI (which owns the hidden values), not inside the evaluation.
#[derive(Serialize)]
struct EvalRecord {
    n: usize,
    backend: String,
    model: OracleMode,
    seed: u64,
    c_factor: f64,
    answer: ExtIndex,
    answer_value: Option<i64>,
    tree_value: i64,
    succeeded: bool,
    correct: bool,
    converged: bool,
    iterations: usize,
    final_stack_depth: usize,
    pivot_calls: u64,
    decide_calls: u64,
    ledger: QueryLedger,
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let (tree, values) = load_tree(&args.source, args.seed)?;
    let backend = args.backend.to_config(args.seed)?;
    let cfg = EvaluatorConfig {
        c_factor: args.backend.c_factor,
        backend,
        early_stop: args.early_stop,
        trace: args.trace,
        oracle_mode: match args.model {
            ModelChoice::Comparison => OracleMode::Comparison,
            ModelChoice::InputValue => OracleMode::InputValue,
        },
    };
    let result = evaluate(&tree, &values, &cfg)?;
    let (tree_value, _) = eval_minmax(&tree, &values)?;
    let answer_value = result.answer.leaf().map(|leaf| values.value(leaf));
    let record = EvalRecord {
        n: tree.leaf_count(),
        backend: backend.backend.to_string(),
        model: cfg.oracle_mode,
        seed: args.seed,
        c_factor: cfg.c_factor,
        answer: result.answer,
        answer_value,
        tree_value,
        succeeded: result.succeeded,
        correct: answer_value == Some(tree_value),
        converged: result.converged,
        iterations: result.iterations,
        final_stack_depth: result.final_stack_depth,
        pivot_calls: result.pivot_calls,
        decide_calls: result.decide_calls,
        ledger: result.ledger.clone(),
    };

    if let Some(trace) = &result.trace {
        let mut lines = String::new();
        for step in trace {
            lines.push_str(&serde_json::to_string(step)?);
            lines.push('\n');
        }
        match &args.output.out {
            Some(path) => std::fs::write(path, lines)?,
            None => out.write_all(lines.as_bytes())?,
        }
    }

    match args.output.format {
        Format::Json => {
            let mut line = serde_json::to_string(&record)?;
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Format::Text => {
            writeln!(
                out,
                "n {}  backend {}  seed {}",
                record.n, record.backend, record.seed
            )?;
            writeln!(
                out,
                "answer {} (value {})  tree value {}  correct {}",
                record.answer,
                record
                    .answer_value
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "-".into()),
                record.tree_value,
                record.correct
            )?;
            writeln!(
                out,
                "iterations {}  converged {}  stack depth {}",
                record.iterations, record.converged, record.final_stack_depth
            )?;
            writeln!(
                out,
                "queries: comparisons {}  value reads {}  modeled search {}  modeled andor {}  grover calls {}",
                record.ledger.comparison_queries,
                record.ledger.value_queries,
                record.ledger.modeled_search_units,
                record.ledger.modeled_andor_units,
                record.ledger.grover_oracle_calls
            )?;
        }
        Format::Csv => {
            return Err(Error::Config(
                "--format csv applies to experiment and recurrence output".into(),
            ))
        }
    }
    Ok(())
}

fn cmd_gen(args: GenArgs, out: &mut dyn Write) -> Result<()> {
    if args.source.tree.is_some() {
        return Err(Error::Config("gen requires --shape, not --tree".into()));
    }
    let (tree, values) = load_tree(&args.source, args.seed)?;
    let document = TreeDocument::from_parts(&tree, &values);
    let mut text = serde_json::to_string_pretty(&document)?;
    text.push('\n');
    match &args.output.out {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_recurrence(args: RecurrenceArgs, out: &mut dyn Write) -> Result<()> {
    if args.m_max < 1 {
        return Err(Error::Config("--m-max must be at least 1".into()));
    }
    if args.m_max > 1_000_000 {
        return Err(Error::Config(
            "--m-max above 10^6 exceeds the documented accuracy range".into(),
        ));
    }
    let table = solve_recurrence(args.m_max);
    let text = match args.output.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "m_max": args.m_max,
                "c": table,
            }))?;
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = format!("{:>10} {:>12}\n", "m", "C(m)");
            for (m, c) in table.iter().enumerate() {
                s.push_str(&format!("{m:>10} {c:>12.4}\n"));
            }
            s
        }
        Format::Csv => {
            let mut s = String::from("m,c\n");
            for (m, c) in table.iter().enumerate() {
                s.push_str(&format!("{m},{c}\n"));
            }
            s
        }
    };
    out.write_all(text.as_bytes())?;
    if let Some(path) = &args.output.out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn emit_report(report: &ExperimentReport, output: &OutputArgs, out: &mut dyn Write) -> Result<()> {
    let text = match output.format {
        Format::Json => report.to_json_string(),
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
    };
    out.write_all(text.as_bytes())?;
    if let Some(path) = &output.out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(
            std::iter::once("minmax-sim").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn shape_minilanguage() {
        assert_eq!(
            parse_shape("balanced:2:3").unwrap(),
            Shape::Balanced { arity: 2, depth: 3 }
        );
        assert_eq!(
            parse_shape("random:7").unwrap(),
            Shape::Random {
                leaves: 7,
                max_arity: DEFAULT_RANDOM_MAX_ARITY
            }
        );
        assert_eq!(
            parse_shape("random:7:3").unwrap(),
            Shape::Random {
                leaves: 7,
                max_arity: 3
            }
        );
        assert!(parse_shape("triangle:3").is_err());
        assert!(parse_values("uniform:1").is_err());
        assert_eq!(
            parse_values("uniform:-5:5").unwrap(),
            ValueDistribution::Uniform { lo: -5, hi: 5 }
        );
    }

    #[test]
    fn eval_emits_a_correct_json_record() {
        let (code, out, err) = run(&[
            "eval",
            "--shape",
            "balanced:2:3",
            "--backend",
            "ideal",
            "--seed",
            "7",
        ]);
        assert_eq!(code, 0, "stderr: {err}");
        let record: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(record["n"], 8);
        assert_eq!(record["succeeded"], true);
        assert_eq!(record["correct"], true);
    }

    #[test]
    fn epsilon_without_stochastic_backend_is_a_usage_error() {
        let (code, _, err) = run(&[
            "eval",
            "--shape",
            "balanced:2:2",
            "--backend",
            "ideal",
            "--epsilon",
            "0.1",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("--epsilon"), "diagnostic: {err}");
    }

    #[test]
    fn unknown_flags_exit_2() {
        let (code, _, _) = run(&["eval", "--shape", "balanced:2:2", "--frobnicate"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn missing_tree_source_exits_2() {
        let (code, _, err) = run(&["eval"]);
        assert_eq!(code, 2);
        assert!(err.contains("--shape") || err.contains("--tree"));
    }

    #[test]
    fn recurrence_table_contains_hand_values() {
        let (code, out, _) = run(&["recurrence", "--m-max", "4", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.contains("4,3.5"), "output: {out}");
        assert!(out.contains("3,3"), "output: {out}");
    }

    #[test]
    fn stdout_is_byte_identical_per_seed() {
        let args = [
            "eval",
            "--shape",
            "random:13",
            "--backend",
            "stochastic",
            "--epsilon",
            "0.1",
            "--seed",
            "3",
        ];
        let (c1, out1, _) = run(&args);
        let (c2, out2, _) = run(&args);
        assert_eq!(c1, 0);
        assert_eq!(c2, 0);
        assert_eq!(out1, out2);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("minmax-sim"));
    }
}
