use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sparsecut::combdiam::{combinatorial_diameter, Method, DEFAULT_EXACT_BUDGET};
use sparsecut::error::{Error, Result};
use sparsecut::instance::CutInstance;
use sparsecut::oracle::brute_force;
use sparsecut::pipeline::{self, SolveOptions, TransformSpec, CERTIFY_PAIRS, DEFAULT_ORACLE_LIMIT};
use sparsecut::shallow::{certified_diameter_bound, Mode};
use sparsecut::treedec::{balance, min_fill_decomposition, TreeDecomposition};

#[derive(Parser)]
#[command(name = "sparsecut", version, about = "Sparsest cut on low-treewidth graphs")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random partial k-tree instance with demand pairs.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.8)]
        keep_prob: f64,
        #[arg(long, default_value_t = 2)]
        demands: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Place every demand pair inside a common bag.
        #[arg(long)]
        bag_local: bool,
        /// Also write the generator's decomposition.
        #[arg(long)]
        decomposition_out: Option<PathBuf>,
    },
    /// Min-fill tree decomposition of an instance's graph.
    Decompose {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Logarithmic-depth rebalancing of a decomposition.
    Balance {
        #[arg(long)]
        decomposition: PathBuf,
    },
    /// Shallow transform (bridges, highways, super-highways).
    Transform {
        #[arg(long)]
        decomposition: PathBuf,
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Combinatorial diameter of a decomposition.
    Diameter {
        #[arg(long)]
        decomposition: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Greedy)]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: usize,
    },
    /// Lifted LP, rounding, and the brute-force check.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 400)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the LP as sparse triplet JSON.
        #[arg(long)]
        lp_dump: Option<PathBuf>,
        /// Skip brute-force enumeration.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Exhaustive sparsest cut.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Per-pair flow, cut, and potential diagnostics.
    Diagnose {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: usize,
    },
    /// Run a JSON bench spec and emit CSV.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        /// Append a wall_ms column.
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Decomposition to use; min-fill when absent.
    #[arg(long)]
    decomposition: Option<PathBuf>,
    /// Rebalance before transforming.
    #[arg(long)]
    balance: bool,
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Sync spacing, bridges and highways only.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    lambda: Option<u64>,
    /// Layer count, super-highways only.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    q: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bridges,
    Highways,
    Superhighways,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Greedy,
    Exact,
}

impl ShapeArgs {
    fn spec(&self) -> std::result::Result<TransformSpec, String> {
        let mode = self.mode.map(|m| match m {
            ModeArg::Bridges => Mode::Bridges,
            ModeArg::Highways => Mode::Highways,
            ModeArg::Superhighways => Mode::SuperHighways,
        });
        match mode {
            None if self.lambda.is_some() || self.q.is_some() => return Err("--lambda and --q require --mode".into()),
            Some(Mode::SuperHighways) if self.lambda.is_some() => {
                return Err("--lambda applies only to bridges and highways".into())
            }
            Some(Mode::Bridges | Mode::Highways) if self.q.is_some() => {
                return Err("--q applies only to superhighways".into())
            }
            _ => {}
        }
        Ok(TransformSpec { mode, lambda: self.lambda.unwrap_or(1) as usize, q: self.q.unwrap_or(1) as usize })
    }

    fn spec_or_exit(&self) -> TransformSpec {
        self.spec().unwrap_or_else(|msg| Cli::command().error(ErrorKind::ArgumentConflict, msg).exit())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<CutInstance> {
    CutInstance::from_json(&read(path)?)
}

fn read_decomposition(path: &Path) -> Result<TreeDecomposition> {
    TreeDecomposition::from_json(&read(path)?)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialise")
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Gen { n, k, keep_prob, demands, seed, bag_local, decomposition_out } => {
            let (inst, t) = pipeline::generate(n, k, keep_prob, demands, seed, bag_local)?;
            if let Some(path) = decomposition_out {
                fs::write(path, t.to_json())?;
            }
            Ok(inst.to_json())
        }
        Command::Decompose { instance } => {
            let t = min_fill_decomposition(read_instance(&instance)?.graph());
            Ok(pretty(&pipeline::decomposition_with_stats(&t, json!({}))?))
        }
        Command::Balance { decomposition } => {
            let t = balance(&read_decomposition(&decomposition)?);
            Ok(pretty(&pipeline::decomposition_with_stats(&t, json!({}))?))
        }
        Command::Transform { decomposition, shape } => {
            let spec = shape.spec_or_exit();
            let t = read_decomposition(&decomposition)?;
            let Some(s) = pipeline::apply_transform(&t, &spec) else {
                Cli::command().error(ErrorKind::MissingRequiredArgument, "transform needs --mode").exit()
            };
            let bound = certified_diameter_bound(&s, CERTIFY_PAIRS)?.bound;
            Ok(pretty(&pipeline::decomposition_with_stats(&s.decomposition, json!({ "certified_diameter": bound }))?))
        }
        Command::Diameter { decomposition, method, budget } => {
            let method = match method {
                MethodArg::Greedy => Method::Greedy,
                MethodArg::Exact => Method::Exact,
            };
            let d = combinatorial_diameter(&read_decomposition(&decomposition)?, method, budget)?;
            Ok(pretty(&json!({
                "diameter": d.diameter,
                "method": method.as_str(),
                "witness": [d.witness.0, d.witness.1],
            })))
        }
        Command::Solve { input, shape, trials, seed, lp_dump, no_oracle } => {
            let opts = SolveOptions {
                transform: shape.spec_or_exit(),
                balance: input.balance,
                trials,
                seed,
                oracle_limit: if no_oracle { 0 } else { DEFAULT_ORACLE_LIMIT },
            };
            let inst = read_instance(&input.instance)?;
            let dec = input.decomposition.as_deref().map(read_decomposition).transpose()?;
            if let Some(path) = lp_dump {
                fs::write(path, pretty(&pipeline::lifted_lp(&inst, dec.clone(), &opts)?.to_triplet_json()))?;
            }
            Ok(pretty(&pipeline::solve(&inst, dec, &opts)?.to_json()))
        }
        Command::Oracle { instance } => Ok(pretty(&brute_force(&read_instance(&instance)?)?.to_json())),
        Command::Diagnose { input, shape, budget } => {
            let spec = shape.spec_or_exit();
            let inst = read_instance(&input.instance)?;
            let dec = input.decomposition.as_deref().map(read_decomposition).transpose()?;
            Ok(pretty(&pipeline::diagnose(&inst, dec, input.balance, &spec, budget)?))
        }
        Command::Bench { spec, timings } => pipeline::bench(&pipeline::parse_bench_spec(&read(&spec)?)?, timings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = run(cli).and_then(|mut report| {
        if !report.ends_with('\n') {
            report.push('\n');
        }
        match out {
            Some(path) => fs::write(path, report).map_err(Error::from),
            None => {
                print!("{report}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
