use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rainbow_cli::generate::{gen_instance, GenSpec, Kind, Shape};
use rainbow_cli::pipeline::{run_pipeline, verify_report, Command, RunFlags};
use rainbow_core::embedder::{CheckMode, ColourPolicy};
use rainbow_core::Execution;

#[derive(Parser)]
#[command(name = "rainbow", version, about = "Rainbow blow-up embeddings of bounded-degree graphs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Embed a blow-up instance.
    Embed(RunArgs),
    /// Embed a bounded-degree spanning tree into a clustered host.
    TreeEmbed(RunArgs),
    /// Embed a small target and report candidate sets for its neighbours.
    PartialEmbed(RunArgs),
    /// Embed a spanning bounded-degree graph into a dense host.
    QuasirandomEmbed(RunArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Re-verify an embedding against an instance.
    Verify {
        instance: PathBuf,
        embedding: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Reserved,
    Ledger,
}

#[derive(Args)]
struct RunArgs {
    /// Instance JSON, `-` for stdin.
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    budget_rounds: Option<usize>,
    #[arg(long)]
    budget_attempts: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Regularity tester.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Colour separation between rounds (`embed` defaults to reserved, the
    /// applications to ledger).
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Write the full report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    /// Vertices per cluster (total vertices for `quasirandom`).
    #[arg(long, default_value_t = 20)]
    cluster_size: usize,
    #[arg(long, default_value_t = 0.8)]
    density: f64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Path)]
    shape: ShapeArg,
    /// Every colour appears on at most this many edges.
    #[arg(long, default_value_t = 1)]
    k_bound: usize,
    /// Colours per edge.
    #[arg(long, default_value_t = 1)]
    colours_per_edge: usize,
    #[arg(long)]
    palette: Option<usize>,
    #[arg(long, default_value_t = 2)]
    target_degree: usize,
    #[arg(long, default_value_t = 6)]
    partial_size: usize,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    MatchingsBlowup,
    GeneralBlowup,
    DiracTree,
    Quasirandom,
    PartialEmbed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Path,
    Cycle,
    Complete,
}

fn read(path: &Path) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code.clamp(0, 255) as u8)
}

fn run(command: Command, args: RunArgs) -> ExitCode {
    let text = match read(&args.instance) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(2);
        }
    };
    let flags = RunFlags {
        seed: args.seed,
        budget_rounds: args.budget_rounds,
        budget_attempts: args.budget_attempts,
        eps: args.eps,
        d: args.d,
        mu: args.mu,
        mode: args.mode.map(|m| match m {
            ModeArg::Exact => CheckMode::Exact,
            ModeArg::Sampled => CheckMode::Sampled,
        }),
        policy: args.policy.map(|p| match p {
            PolicyArg::Reserved => ColourPolicy::Reserved,
            PolicyArg::Ledger => ColourPolicy::Ledger,
        }),
        execution: if args.sequential { Execution::Sequential } else { Execution::default() },
    };
    let report = run_pipeline(command, &text, &flags);
    if let Some(path) = &args.report {
        let body = serde_json::to_string_pretty(&report).expect("report serialises");
        if let Err(e) = std::fs::write(path, body) {
            eprintln!("error: {}: {e}", path.display());
            return exit(1);
        }
    }
    println!("{}", report.summary());
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    exit(report.exit_code)
}

fn gen(args: GenArgs) -> ExitCode {
    let spec = GenSpec {
        kind: match args.kind {
            KindArg::MatchingsBlowup => Kind::MatchingsBlowup,
            KindArg::GeneralBlowup => Kind::GeneralBlowup,
            KindArg::DiracTree => Kind::DiracTree,
            KindArg::Quasirandom => Kind::Quasirandom,
            KindArg::PartialEmbed => Kind::PartialEmbed,
        },
        clusters: args.clusters,
        cluster_size: args.cluster_size,
        density: args.density,
        shape: match args.shape {
            ShapeArg::Path => Shape::Path,
            ShapeArg::Cycle => Shape::Cycle,
            ShapeArg::Complete => Shape::Complete,
        },
        k_bound: args.k_bound,
        set_size: args.colours_per_edge,
        palette: args.palette,
        target_degree: args.target_degree,
        partial_size: args.partial_size,
        eps: args.eps,
        d: args.d,
        mu: args.mu,
    };
    let inst = match gen_instance(&spec, args.seed) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(e.exit_code());
        }
    };
    let body = serde_json::to_string(&inst).expect("instance serialises");
    match &args.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                eprintln!("error: {}: {e}", path.display());
                return exit(1);
            }
        }
        None => println!("{body}"),
    }
    ExitCode::SUCCESS
}

fn verify(instance: &Path, embedding: &Path) -> ExitCode {
    let texts = read(instance).and_then(|i| read(embedding).map(|e| (i, e)));
    let (inst, emb) = match texts {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(2);
        }
    };
    match verify_report(&inst, &emb) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome).expect("outcome serialises"));
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                exit(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Cmd::Embed(a) => run(Command::Embed, a),
        Cmd::TreeEmbed(a) => run(Command::TreeEmbed, a),
        Cmd::PartialEmbed(a) => run(Command::PartialEmbed, a),
        Cmd::QuasirandomEmbed(a) => run(Command::QuasirandomEmbed, a),
        Cmd::Gen(a) => gen(a),
        Cmd::Verify { instance, embedding } => verify(&instance, &embedding),
    }
}
