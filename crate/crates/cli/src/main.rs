use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bspmr::inputs;
use bspmr::ledger::traces_to_csv;
use bspmr::workload::{run_sweep, run_workload, Algorithm, Model, WorkloadError, WorkloadSpec};
use bspmr::Execution;

const EXIT_SIMULATION: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

/// Simulate BSP and MapReduce programs with exact cost ledgers.
#[derive(Parser)]
#[command(name = "bspmr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one workload and write report.json (and trace.csv with --trace).
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a workload at several sizes and write sweep.json.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated, strictly increasing. Defaults to the spec's sweep.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long)]
        check_efficiency: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print a seeded random input in the format `run` reads.
    GenInput {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge probability for graphs.
        #[arg(long, default_value_t = bspmr::workload::DEFAULT_EDGE_PROB)]
        edge_prob: f64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ints,
    Matrix,
    Graph,
}

/// Flags that take precedence over the spec file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    root: Option<u32>,
    #[arg(long)]
    edge_prob: Option<f64>,
    /// Run engines on one thread.
    #[arg(long)]
    sequential: bool,
}

impl Overrides {
    fn apply(&self, spec: &mut WorkloadSpec) {
        if let Some(a) = self.algorithm {
            spec.algorithm = a;
        }
        if let Some(m) = self.model {
            spec.model = m;
        }
        if let Some(n) = self.n {
            spec.n = Some(n);
            spec.input = None;
            spec.input_b = None;
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    spec.$field = v;
                }
            )*};
        }
        set!(p, g, l, seed, root);
        if self.q.is_some() {
            spec.q = self.q;
        }
        if self.r.is_some() {
            spec.r = self.r;
        }
        if self.edge_prob.is_some() {
            spec.edge_prob = self.edge_prob;
        }
        if self.sequential {
            spec.exec = Execution::Sequential;
        }
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<WorkloadSpec, WorkloadError> {
    let mut spec = WorkloadSpec::from_file(path)?;
    overrides.apply(&mut spec);
    spec.check()?;
    Ok(spec)
}

fn fail(e: &WorkloadError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e {
        WorkloadError::Spec(_) => EXIT_PARSE,
        WorkloadError::Simulation(_) => EXIT_SIMULATION,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), ExitCode> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| io_fail(path, e))
}

fn io_fail(path: &Path, e: std::io::Error) -> ExitCode {
    eprintln!("error: {}: {e}", path.display());
    ExitCode::from(EXIT_SIMULATION)
}

fn run(spec: &Path, out: &Path, trace: bool, overrides: &Overrides) -> Result<ExitCode, ExitCode> {
    let spec = load(spec, overrides).map_err(|e| fail(&e))?;
    let outcome = run_workload(&spec).map_err(|e| fail(&e))?;
    let report_path = out.join("report.json");
    write(&report_path, &outcome.report.to_json())?;
    println!("wrote {}", report_path.display());
    if trace {
        let trace_path = out.join("trace.csv");
        write(&trace_path, &traces_to_csv(&outcome.traces))?;
        println!("wrote {}", trace_path.display());
    }
    for check in outcome.report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} ({})", check.name, check.detail);
    }
    if let Some(err) = &outcome.report.error {
        eprintln!("invariant violated: {err}");
    }
    Ok(if outcome.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    })
}

fn sweep(
    spec: &Path,
    sizes: &[usize],
    check_efficiency: bool,
    out: &Path,
    overrides: &Overrides,
) -> Result<ExitCode, ExitCode> {
    let spec = load(spec, overrides).map_err(|e| fail(&e))?;
    let sizes = if sizes.is_empty() {
        spec.sweep.clone().unwrap_or_default()
    } else {
        sizes.to_vec()
    };
    let report = run_sweep(&spec, &sizes, check_efficiency).map_err(|e| fail(&e))?;
    let path = out.join("sweep.json");
    write(&path, &report.to_json())?;
    println!("wrote {}", path.display());
    if let Some(eff) = &report.efficiency {
        for c in &eff.conditions {
            println!(
                "condition ({}) {} vs {}: {} (exponents {:.3} vs {:.3}, ratio {:.2})",
                c.name,
                c.left,
                c.right,
                c.verdict(),
                c.left_exponent,
                c.right_exponent,
                c.ratio
            );
        }
        println!("all conditions: {}", eff.verdict);
    }
    Ok(if report.runs.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    })
}

fn gen_input(kind: Kind, n: usize, seed: u64, edge_prob: f64, out: Option<&Path>) -> Result<ExitCode, ExitCode> {
    if !(0.0..=1.0).contains(&edge_prob) {
        eprintln!("error: edge probability {edge_prob} is not in [0, 1]");
        return Err(ExitCode::from(EXIT_PARSE));
    }
    let text = match kind {
        Kind::Ints => inputs::format_ints(&inputs::random_ints(n, seed)),
        Kind::Matrix => inputs::format_matrix(&inputs::random_matrix(n, seed)),
        Kind::Graph => inputs::format_edges(&inputs::erdos_renyi(n, edge_prob, seed)),
    };
    match out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            spec,
            out,
            trace,
            overrides,
        } => run(spec, out, *trace, overrides),
        Command::Sweep {
            spec,
            sizes,
            check_efficiency,
            out,
            overrides,
        } => sweep(spec, sizes, *check_efficiency, out, overrides),
        Command::GenInput {
            kind,
            n,
            seed,
            edge_prob,
            out,
        } => gen_input(*kind, *n, *seed, *edge_prob, out.as_deref()),
    };
    result.unwrap_or_else(|code| code)
}
