use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainglue::chain::{stationary_direct, validate, ChainModel, StationaryResult};
use chainglue::compose::{
    bounds_report, glue_one, glue_two, parallel_condition, stationary_glue_one,
    stationary_glue_two, stationary_parallel, BoundsReport, GlueSpec, GluedChain,
};
use chainglue::excursion::{Mark, MarkedChain};
use chainglue::simulate::empirical_stationary;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use chainglue_cli::chainfile::{self, ChainFile};
use chainglue_cli::fmt::fmt_sig;

/// Stationary distributions of continuous-time Markov chains, including
/// chains built by gluing two chains together at one or two shared states.
#[derive(Parser)]
#[command(name = "chainglue", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Significant digits for text output
    #[arg(long, global = true, default_value_t = 12)]
    precision: usize,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
    /// Seed for simulation commands
    #[arg(long, global = true, env = "CHAINGLUE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StationaryMethod {
    Direct,
    Simulate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GlueMethod {
    /// Closed form when the glued-state ratios are parallel, pipeline otherwise
    Auto,
    /// Excursion-decomposition pipeline (one-state glue: the product formula)
    Pipeline,
    /// Dense solve of the assembled glued generator
    Direct,
}

#[derive(Subcommand)]
enum Command {
    /// Check a chain file against the generator invariants
    Validate { path: PathBuf },
    /// Print the stationary distribution of a single chain
    Stationary {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = StationaryMethod::Direct)]
        method: StationaryMethod,
        /// Jump count for --method simulate
        #[arg(long, default_value_t = 100_000)]
        n: u64,
    },
    /// Glue two chains at one or two states and solve the result
    Glue {
        path_a: PathBuf,
        path_b: PathBuf,
        /// Glued pairs as A-label:B-label, comma separated (1 or 2 pairs)
        #[arg(long)]
        pairs: String,
        #[arg(long, value_enum, default_value_t = GlueMethod::Auto)]
        method: GlueMethod,
        /// Cross-check the result against the direct solve and print the delta
        #[arg(long)]
        verify: bool,
        /// Labels for the glued states, comma separated (default: A-side labels)
        #[arg(long)]
        glued_labels: Option<String>,
        /// Write the glued chain file to this path
        #[arg(long)]
        emit_glued: Option<PathBuf>,
    },
    /// Print excursion tables of a chain relative to two marked states
    Excursions {
        path: PathBuf,
        /// The two marked states as labels, comma separated
        #[arg(long)]
        mark: String,
    },
    /// Estimate the stationary distribution from one simulated path
    Simulate {
        path: PathBuf,
        /// Start state label (default: first state)
        #[arg(long)]
        start: Option<String>,
        /// Number of jumps
        #[arg(long, default_value_t = 100_000)]
        n: u64,
    },
}

enum CliError {
    /// I/O or file-format problem: exit code 2.
    Parse(String),
    /// Generator or glue domain violation: exit code 1.
    Domain(String),
}

impl From<chainfile::ParseError> for CliError {
    fn from(e: chainfile::ParseError) -> Self {
        CliError::Parse(e.0)
    }
}

impl From<chainglue::Error> for CliError {
    fn from(e: chainglue::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Validate { path } => cmd_validate(cli, path),
        Command::Stationary { path, method, n } => cmd_stationary(cli, path, *method, *n),
        Command::Glue {
            path_a,
            path_b,
            pairs,
            method,
            verify,
            glued_labels,
            emit_glued,
        } => cmd_glue(
            cli,
            path_a,
            path_b,
            pairs,
            *method,
            *verify,
            glued_labels.as_deref(),
            emit_glued.as_deref(),
        ),
        Command::Excursions { path, mark } => cmd_excursions(cli, path, mark),
        Command::Simulate { path, start, n } => cmd_simulate(cli, path, start.as_deref(), *n),
    }
}

fn load_model(path: &Path) -> Result<ChainModel, CliError> {
    Ok(chainfile::to_model(&chainfile::read_path(path)?)?)
}

fn sig(cli: &Cli, x: f64) -> String {
    fmt_sig(x, cli.precision)
}

fn print_stationary(cli: &Cli, model: &ChainModel, pi: &StationaryResult, se: Option<&[f64]>) {
    match cli.output {
        OutputFormat::Json => {
            let mut obj = json!({
                "type": "stationary",
                "method": pi.method().as_str(),
                "states": model.labels(),
                "probabilities": pi.probabilities(),
            });
            if let Some(se) = se {
                obj["std_errors"] = json!(se);
            }
            println!("{obj}");
        }
        OutputFormat::Text => {
            println!("method: {}", pi.method().as_str());
            for (i, &p) in pi.probabilities().iter().enumerate() {
                match se {
                    Some(se) => {
                        println!("{}\t{}\t{}", model.label(i), sig(cli, p), sig(cli, se[i]))
                    }
                    None => println!("{}\t{}", model.label(i), sig(cli, p)),
                }
            }
        }
    }
}

fn cmd_validate(cli: &Cli, path: &Path) -> Result<u8, CliError> {
    let model = load_model(path)?;
    let report = validate(&model);
    match cli.output {
        OutputFormat::Json => {
            let violations: Vec<String> =
                report.violations.iter().map(|v| v.to_string()).collect();
            println!(
                "{}",
                json!({"type": "validation", "valid": report.is_empty(), "violations": violations})
            );
        }
        OutputFormat::Text => {
            if report.is_empty() {
                println!("ok");
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
            }
        }
    }
    Ok(if report.is_empty() { 0 } else { 1 })
}

fn cmd_stationary(
    cli: &Cli,
    path: &Path,
    method: StationaryMethod,
    n: u64,
) -> Result<u8, CliError> {
    let model = load_model(path)?;
    match method {
        StationaryMethod::Direct => {
            let pi = stationary_direct(&model)?;
            print_stationary(cli, &model, &pi, None);
        }
        StationaryMethod::Simulate => {
            let est = empirical_stationary(&model, 0, n, cli.seed)?;
            let pi = est.stationary()?;
            let se: Vec<f64> = est.estimates.iter().map(|e| e.std_error).collect();
            print_stationary(cli, &model, &pi, Some(&se));
        }
    }
    Ok(0)
}

fn parse_pairs(
    spec_text: &str,
    a: &ChainModel,
    b: &ChainModel,
) -> Result<Vec<(usize, usize)>, CliError> {
    let mut pairs = Vec::new();
    for part in spec_text.split(',') {
        let (la, lb) = part.split_once(':').ok_or_else(|| {
            CliError::Parse(format!("pair {part:?} is not of the form A-label:B-label"))
        })?;
        let ia = a
            .index_of(la.trim())
            .ok_or_else(|| CliError::Domain(format!("chain A has no state labelled {la:?}")))?;
        let ib = b
            .index_of(lb.trim())
            .ok_or_else(|| CliError::Domain(format!("chain B has no state labelled {lb:?}")))?;
        pairs.push((ia, ib));
    }
    if pairs.is_empty() || pairs.len() > 2 {
        return Err(CliError::Parse(format!(
            "expected 1 or 2 glue pairs, got {}",
            pairs.len()
        )));
    }
    Ok(pairs)
}

fn pipeline(a: &ChainModel, b: &ChainModel, spec: &GlueSpec) -> Result<StationaryResult, CliError> {
    let prof_a = spec.marked_a(a)?.profile()?;
    let prof_b = spec.marked_b(b)?.profile()?;
    Ok(stationary_glue_two(&prof_a, &prof_b)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_glue(
    cli: &Cli,
    path_a: &Path,
    path_b: &Path,
    pairs_text: &str,
    method: GlueMethod,
    verify: bool,
    glued_labels: Option<&str>,
    emit_glued: Option<&Path>,
) -> Result<u8, CliError> {
    let a = load_model(path_a)?;
    let b = load_model(path_b)?;
    let pairs = parse_pairs(pairs_text, &a, &b)?;
    let two_state = pairs.len() == 2;
    let mut spec = if two_state {
        GlueSpec::two(pairs[0], pairs[1])
    } else {
        GlueSpec::one(pairs[0].0, pairs[0].1)
    };
    if let Some(labels) = glued_labels {
        spec = spec.with_glued_labels(labels.split(',').map(|s| s.trim().to_string()).collect());
    }

    let glued = if two_state {
        glue_two(&a, &b, &spec)?
    } else {
        glue_one(&a, &b, &spec)?
    };
    let pi_a = stationary_direct(&a)?;
    let pi_b = stationary_direct(&b)?;
    let parallel = if two_state {
        Some(parallel_condition(&pi_a, &pi_b, &spec, None)?)
    } else {
        None
    };

    let pi = match (method, two_state) {
        (GlueMethod::Direct, _) => stationary_direct(&glued.model)?,
        (GlueMethod::Pipeline, false) | (GlueMethod::Auto, false) => {
            stationary_glue_one(&pi_a, &pi_b, &spec)?
        }
        (GlueMethod::Pipeline, true) => pipeline(&a, &b, &spec)?,
        (GlueMethod::Auto, true) => {
            if parallel == Some(true) {
                stationary_parallel(&pi_a, &pi_b, &spec)?
            } else {
                pipeline(&a, &b, &spec)?
            }
        }
    };

    let glued_file = chainfile::from_model(&glued.model);
    if let Some(path) = emit_glued {
        std::fs::write(path, chainfile::emit(&glued_file) + "\n")
            .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", path.display())))?;
    }

    let bounds = if two_state {
        Some(bounds_report(&pi, &pi_a, &pi_b, &glued)?)
    } else {
        None
    };
    let delta = if verify {
        let direct = stationary_direct(&glued.model)?;
        Some(
            pi.probabilities()
                .iter()
                .zip(direct.probabilities())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
        )
    } else {
        None
    };

    emit_glue_output(cli, &glued, &glued_file, &pi, parallel, bounds.as_ref(), delta);
    Ok(0)
}

fn emit_glue_output(
    cli: &Cli,
    glued: &GluedChain,
    glued_file: &ChainFile,
    pi: &StationaryResult,
    parallel: Option<bool>,
    bounds: Option<&BoundsReport>,
    delta: Option<f64>,
) {
    match cli.output {
        OutputFormat::Json => {
            let mut chain_obj = serde_json::to_value(glued_file).expect("serializable");
            chain_obj["type"] = json!("glued_chain");
            println!("{chain_obj}");
            println!(
                "{}",
                json!({
                    "type": "stationary",
                    "method": pi.method().as_str(),
                    "states": glued.model.labels(),
                    "probabilities": pi.probabilities(),
                })
            );
            if let Some(parallel) = parallel {
                println!("{}", json!({"type": "condition", "parallel": parallel}));
            }
            if let Some(b) = bounds {
                let entries: Vec<serde_json::Value> = b
                    .entries
                    .iter()
                    .map(|e| {
                        json!({
                            "state": e.label,
                            "side": e.side.to_string(),
                            "ratio": e.ratio,
                            "lower": e.lower,
                            "upper": e.upper,
                            "strict_lower": e.strict_lower,
                            "strict_upper": e.strict_upper,
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    json!({
                        "type": "bounds",
                        "parallel": b.parallel,
                        "marked_ratio": b.marked_ratio,
                        "marked_ratio_a": b.marked_ratio_a,
                        "marked_ratio_b": b.marked_ratio_b,
                        "entries": entries,
                        "violations": b.violations,
                    })
                );
            }
            if let Some(delta) = delta {
                println!("{}", json!({"type": "verify", "max_abs_delta": delta}));
            }
        }
        OutputFormat::Text => {
            println!("glued states: {}", glued.model.labels().join(" "));
            println!("method: {}", pi.method().as_str());
            for (i, &p) in pi.probabilities().iter().enumerate() {
                println!("{}\t{}", glued.model.label(i), sig(cli, p));
            }
            if let Some(parallel) = parallel {
                println!(
                    "condition: {}",
                    if parallel { "parallel" } else { "non-parallel" }
                );
            }
            if let Some(b) = bounds {
                println!(
                    "marked ratio: {} (chain A {}, chain B {})",
                    sig(cli, b.marked_ratio),
                    sig(cli, b.marked_ratio_a),
                    sig(cli, b.marked_ratio_b)
                );
                for e in &b.entries {
                    println!(
                        "bound {} (side {}): {} in [{}, {}]",
                        e.label,
                        e.side,
                        sig(cli, e.ratio),
                        sig(cli, e.lower),
                        sig(cli, e.upper),
                    );
                }
                if b.violations.is_empty() {
                    println!("bounds: ok");
                } else {
                    for v in &b.violations {
                        println!("bounds violation: {v}");
                    }
                }
            }
            if let Some(delta) = delta {
                println!("verify delta: {}", sig(cli, delta));
            }
        }
    }
}

fn cmd_excursions(cli: &Cli, path: &Path, mark: &str) -> Result<u8, CliError> {
    let model = load_model(path)?;
    let (l1, l2) = mark
        .split_once(',')
        .ok_or_else(|| CliError::Parse("expected --mark label1,label2".into()))?;
    let s1 = model
        .index_of(l1.trim())
        .ok_or_else(|| CliError::Domain(format!("no state labelled {l1:?}")))?;
    let s2 = model
        .index_of(l2.trim())
        .ok_or_else(|| CliError::Domain(format!("no state labelled {l2:?}")))?;
    let mc = MarkedChain::new(model.clone(), s1, s2)?;
    let prof = mc.profile()?;

    let p = &prof.probabilities;
    let q = &prof.intensities;
    match cli.output {
        OutputFormat::Json => {
            let interior: Vec<serde_json::Value> = prof
                .interior
                .iter()
                .enumerate()
                .map(|(pos, &i)| {
                    json!({
                        "state": model.label(i),
                        "p_to_1": p.toward(Mark::One)[i],
                        "p_to_2": p.toward(Mark::Two)[i],
                        "occ_from_1_to_1": prof.occupations.get(Mark::One, Mark::One, pos),
                        "occ_from_1_to_2": prof.occupations.get(Mark::One, Mark::Two, pos),
                        "occ_from_2_to_1": prof.occupations.get(Mark::Two, Mark::One, pos),
                        "occ_from_2_to_2": prof.occupations.get(Mark::Two, Mark::Two, pos),
                        "weight_from_1": prof.weights.from_one[pos],
                        "weight_from_2": prof.weights.from_two[pos],
                    })
                })
                .collect();
            println!(
                "{}",
                json!({
                    "type": "excursions",
                    "marks": [model.label(s1), model.label(s2)],
                    "p": {
                        "1_to_1": p.between(Mark::One, Mark::One),
                        "1_to_2": p.between(Mark::One, Mark::Two),
                        "2_to_1": p.between(Mark::Two, Mark::One),
                        "2_to_2": p.between(Mark::Two, Mark::Two),
                    },
                    "q": {
                        "1_to_1": q.returning(Mark::One),
                        "1_to_2": q.crossing(Mark::One),
                        "2_to_1": q.crossing(Mark::Two),
                        "2_to_2": q.returning(Mark::Two),
                    },
                    "interior": interior,
                })
            );
        }
        OutputFormat::Text => {
            println!("marks: {} {}", model.label(s1), model.label(s2));
            println!("p[1->1] = {}", sig(cli, p.between(Mark::One, Mark::One)));
            println!("p[1->2] = {}", sig(cli, p.between(Mark::One, Mark::Two)));
            println!("p[2->1] = {}", sig(cli, p.between(Mark::Two, Mark::One)));
            println!("p[2->2] = {}", sig(cli, p.between(Mark::Two, Mark::Two)));
            println!("q[1->1] = {}", sig(cli, q.returning(Mark::One)));
            println!("q[1->2] = {}", sig(cli, q.crossing(Mark::One)));
            println!("q[2->1] = {}", sig(cli, q.crossing(Mark::Two)));
            println!("q[2->2] = {}", sig(cli, q.returning(Mark::Two)));
            println!(
                "state\tp_to_1\tp_to_2\tocc[1,1]\tocc[1,2]\tocc[2,1]\tocc[2,2]\tweight_1\tweight_2"
            );
            for (pos, &i) in prof.interior.iter().enumerate() {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    model.label(i),
                    sig(cli, p.toward(Mark::One)[i]),
                    sig(cli, p.toward(Mark::Two)[i]),
                    sig(cli, prof.occupations.get(Mark::One, Mark::One, pos)),
                    sig(cli, prof.occupations.get(Mark::One, Mark::Two, pos)),
                    sig(cli, prof.occupations.get(Mark::Two, Mark::One, pos)),
                    sig(cli, prof.occupations.get(Mark::Two, Mark::Two, pos)),
                    sig(cli, prof.weights.from_one[pos]),
                    sig(cli, prof.weights.from_two[pos]),
                );
            }
        }
    }
    Ok(0)
}

fn cmd_simulate(cli: &Cli, path: &Path, start: Option<&str>, n: u64) -> Result<u8, CliError> {
    let model = load_model(path)?;
    let start = match start {
        Some(label) => model
            .index_of(label)
            .ok_or_else(|| CliError::Domain(format!("no state labelled {label:?}")))?,
        None => 0,
    };
    let est = empirical_stationary(&model, start, n, cli.seed)?;
    match cli.output {
        OutputFormat::Json => {
            let means: Vec<f64> = est.estimates.iter().map(|e| e.mean).collect();
            let ses: Vec<f64> = est.estimates.iter().map(|e| e.std_error).collect();
            println!(
                "{}",
                json!({
                    "type": "occupancy",
                    "states": model.labels(),
                    "probabilities": means,
                    "std_errors": ses,
                    "n_jumps": est.n_jumps,
                    "total_time": est.total_time,
                    "seed": cli.seed,
                })
            );
        }
        OutputFormat::Text => {
            println!(
                "jumps: {}  time: {}  seed: {}",
                est.n_jumps,
                sig(cli, est.total_time),
                cli.seed
            );
            for (i, e) in est.estimates.iter().enumerate() {
                println!(
                    "{}\t{}\t{}",
                    model.label(i),
                    sig(cli, e.mean),
                    sig(cli, e.std_error)
                );
            }
        }
    }
    Ok(0)
}
