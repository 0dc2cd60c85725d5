//! Command-line front end: validate an instance, compose one solution, or
//! enumerate all solutions within bounds.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flowcompose::constraints::check_all;
use flowcompose::io::{emit_dot, emit_solution, parse_instance, parse_problem};
use flowcompose::search::{compose, enumerate, Problem, Solution};

#[derive(Parser)]
#[command(name = "flowcompose", version, about = "Workflow composition engine and validator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ComposeOpts {
    /// Problem document (JSON).
    file: PathBuf,
    /// Enumerate every solution within bounds instead of the first.
    #[arg(long)]
    all: bool,
    /// Demand a fully active solution (overrides the document policy).
    #[arg(long)]
    robust: bool,
    /// Override both added-activity and added-message bounds.
    #[arg(long, value_name = "N")]
    max_add: Option<u32>,
    /// Also write a Graphviz rendering of the (first) solution.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Write the solution document here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Suppress progress/timing output on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check every well-formedness rule against an instance document.
    Validate {
        /// Instance document (JSON).
        file: PathBuf,
    },
    /// Search for one valid composition (all of them with --all).
    Compose(ComposeOpts),
    /// Enumerate every valid composition within bounds.
    Enumerate(ComposeOpts),
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn run_validate(file: &PathBuf) -> ExitCode {
    let input = match fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => return fail(format_args!("{}: {e}", file.display())),
    };
    let parsed = match parse_instance(&input) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let violations = check_all(&parsed.graph, &parsed.ontology, &parsed.policy);
    for v in &violations {
        println!("{}", v.render());
    }
    if violations.is_empty() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn load_problem(opts: &ComposeOpts) -> Result<Problem, ExitCode> {
    let input = fs::read_to_string(&opts.file)
        .map_err(|e| fail(format_args!("{}: {e}", opts.file.display())))?;
    let mut problem = parse_problem(&input).map_err(fail)?;
    if opts.robust {
        problem.policy.robust = true;
    }
    if let Some(n) = opts.max_add {
        problem.bounds.max_added_activities = n;
        problem.bounds.max_added_messages = n;
    }
    Ok(problem)
}

fn write_outputs(
    opts: &ComposeOpts,
    problem: &Problem,
    solutions: &[Solution],
) -> Result<(), ExitCode> {
    let body = solutions
        .iter()
        .map(|s| emit_solution(problem, s))
        .collect::<Vec<_>>()
        .join("---\n");
    match &opts.out {
        Some(path) => fs::write(path, &body)
            .map_err(|e| fail(format_args!("{}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    if let Some(path) = &opts.dot {
        if let Some(first) = solutions.first() {
            fs::write(path, emit_dot(&first.graph))
                .map_err(|e| fail(format_args!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn run_compose(opts: &ComposeOpts) -> ExitCode {
    if opts.all {
        return run_enumerate(opts);
    }
    let problem = match load_problem(opts) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let outcome = match compose(&problem) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    match outcome {
        Ok(solution) => {
            if !opts.quiet {
                eprintln!(
                    "solved: +{} activities, +{} messages, {} nodes, {} ms",
                    solution.stats.added_activities,
                    solution.stats.added_messages,
                    solution.stats.nodes_explored,
                    solution.stats.elapsed_ms
                );
            }
            match write_outputs(opts, &problem, std::slice::from_ref(&solution)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(code) => code,
            }
        }
        Err(_) => {
            eprintln!("unsatisfiable within bounds");
            ExitCode::from(3)
        }
    }
}

fn run_enumerate(opts: &ComposeOpts) -> ExitCode {
    let problem = match load_problem(opts) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let solutions = match enumerate(&problem) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if !opts.quiet {
        eprintln!("{} solution(s) within bounds", solutions.len());
    }
    match write_outputs(opts, &problem, &solutions) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Validate { file } => run_validate(file),
        Command::Compose(opts) => run_compose(opts),
        Command::Enumerate(opts) => run_enumerate(opts),
    }
}
