//! Workload descriptions and the driver that runs them and builds reports.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::oracle::{bfs_distances, matmul_triple_loop, sequential_sort, word_count};
use crate::algorithms::{
    bfs_bsp, matmul_bsp, matmul_mr, psrs_bsp, psrs_mr, Graph, Matrix, PsrsMr, WordCount,
};
use crate::bsp::{run_bsp, BspProgram};
use crate::config::MachineConfig;
use crate::cross::{check_efficiency, simulate_bsp_on_mr, simulate_mr_on_bsp, EfficiencyRun};
use crate::error::SimError;
use crate::exec::Execution;
use crate::inputs;
use crate::ledger::{BspCostLedger, MrCostLedger, TaskTrace};
use crate::mr::{
    greedy_schedule, optimal_makespan_bruteforce, run_mr, GlobalMemory, MrInput, MrProgram,
    BRUTE_FORCE_TASK_LIMIT,
};
use crate::report::{
    verdicts, Check, ConfigReport, Estimators, LedgerReport, Report, SweepReport, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Psrs,
    Matmul,
    Bfs,
    Wordcount,
    CustomRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Bsp,
    Mr,
    BspOnMr,
    MrOnBsp,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "psrs" => Algorithm::Psrs,
            "matmul" => Algorithm::Matmul,
            "bfs" => Algorithm::Bfs,
            "wordcount" => Algorithm::Wordcount,
            "custom-ref" => Algorithm::CustomRef,
            _ => return Err(format!("unknown algorithm `{s}`")),
        })
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "bsp" => Model::Bsp,
            "mr" => Model::Mr,
            "bsp-on-mr" => Model::BspOnMr,
            "mr-on-bsp" => Model::MrOnBsp,
            _ => return Err(format!("unknown model `{s}`")),
        })
    }
}

fn default_p() -> usize {
    4
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub algorithm: Algorithm,
    pub model: Model,
    /// Generated input size: element count, matrix side, vertex count or
    /// token count.
    #[serde(default)]
    pub n: Option<usize>,
    /// Input file used instead of a generated input.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Second matrix for `matmul`.
    #[serde(default)]
    pub input_b: Option<PathBuf>,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default = "default_one")]
    pub g: f64,
    #[serde(default = "default_one")]
    pub l: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<Vec<usize>>,
    /// BFS root vertex.
    #[serde(default)]
    pub root: u32,
    /// Edge probability for generated BFS graphs.
    #[serde(default)]
    pub edge_prob: Option<f64>,
    #[serde(default, skip_serializing)]
    pub exec: Execution,
}

pub const DEFAULT_EDGE_PROB: f64 = 0.05;

/// Why a workload could not produce a report.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadError {
    /// Bad spec, bad flags or unreadable input.
    Spec(String),
    /// The engine rejected the run.
    Simulation(SimError),
}

impl fmt::Display for WorkloadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkloadError::Spec(m) => write!(f, "invalid workload: {m}"),
            WorkloadError::Simulation(e) => write!(f, "simulation failed: {e}"),
        }
    }
}

impl std::error::Error for WorkloadError {}

impl From<SimError> for WorkloadError {
    fn from(e: SimError) -> Self {
        WorkloadError::Simulation(e)
    }
}

fn spec_err(msg: impl Into<String>) -> WorkloadError {
    WorkloadError::Spec(msg.into())
}

impl WorkloadSpec {
    pub fn new(algorithm: Algorithm, model: Model) -> Self {
        WorkloadSpec {
            algorithm,
            model,
            n: None,
            input: None,
            input_b: None,
            p: default_p(),
            q: None,
            r: None,
            g: 1.0,
            l: 1.0,
            seed: 0,
            sweep: None,
            root: 0,
            edge_prob: None,
            exec: Execution::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, WorkloadError> {
        let spec: WorkloadSpec = toml::from_str(text).map_err(|e| spec_err(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, WorkloadError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| spec_err(format!("{}: {e}", path.display())))?;
        let mut spec = Self::from_toml(&text)?;
        // input paths are relative to the spec file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut spec.input, &mut spec.input_b].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(spec)
    }

    /// Rejects unsupported algorithm/model pairs and malformed sweeps.
    pub fn check(&self) -> Result<(), WorkloadError> {
        use Algorithm::*;
        use Model::*;
        match (self.algorithm, self.model) {
            (CustomRef, _) => {
                return Err(spec_err(
                    "custom-ref names a program compiled against the library; it cannot be run from a spec file",
                ))
            }
            (Bfs, Mr | MrOnBsp) => {
                return Err(spec_err("bfs has only a BSP form; use model bsp or bsp-on-mr"))
            }
            (Wordcount, Bsp | BspOnMr) => {
                return Err(spec_err("wordcount has only a MapReduce form; use model mr or mr-on-bsp"))
            }
            _ => {}
        }
        if self.n.is_none() && self.input.is_none() {
            return Err(spec_err("give either n or an input file"));
        }
        if let Some(s) = &self.sweep {
            check_sizes(s)?;
        }
        if let Some(prob) = self.edge_prob {
            if !(0.0..=1.0).contains(&prob) {
                return Err(spec_err(format!("edge_prob {prob} is not a probability")));
            }
        }
        Ok(())
    }

    /// `(q, r)` after filling in per-algorithm defaults.
    pub fn tasks(&self) -> (usize, usize) {
        let p = self.p;
        let (q, r) = match (self.algorithm, self.model) {
            (_, Model::Bsp | Model::BspOnMr) => (p, p),
            (Algorithm::Matmul, _) => (p, p),
            _ => (2 * p, p),
        };
        (self.q.unwrap_or(q), self.r.unwrap_or(r))
    }

    pub fn machine(&self) -> MachineConfig {
        let (q, r) = self.tasks();
        MachineConfig::new(self.p)
            .with_tasks(q, r)
            .with_network(self.g, self.l)
            .with_seed(self.seed)
            .with_exec(self.exec)
    }
}

pub fn check_sizes(sizes: &[usize]) -> Result<(), WorkloadError> {
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(spec_err("sweep sizes must be strictly increasing"));
    }
    Ok(())
}

enum Prepared {
    Ints(Vec<i64>),
    Matrices(Matrix, Matrix),
    Graph(Graph),
    Words(Vec<String>),
}

impl Prepared {
    fn size(&self) -> usize {
        match self {
            Prepared::Ints(v) => v.len(),
            Prepared::Matrices(a, _) => a.n(),
            Prepared::Graph(g) => g.vertex_count(),
            Prepared::Words(w) => w.len(),
        }
    }
}

fn read(path: &Path) -> Result<String, WorkloadError> {
    std::fs::read_to_string(path).map_err(|e| spec_err(format!("{}: {e}", path.display())))
}

fn parse_in<T>(path: &Path, r: crate::Result<T>) -> Result<T, WorkloadError> {
    r.map_err(|e| spec_err(format!("{}: {e}", path.display())))
}

fn prepare(spec: &WorkloadSpec) -> Result<Prepared, WorkloadError> {
    let seed = spec.seed;
    if let Some(path) = &spec.input {
        let text = read(path)?;
        return Ok(match spec.algorithm {
            Algorithm::Psrs => Prepared::Ints(parse_in(path, inputs::parse_ints(&text))?),
            Algorithm::Matmul => {
                let a = parse_in(path, inputs::parse_matrix(&text))?;
                let b = match &spec.input_b {
                    Some(pb) => parse_in(pb, inputs::parse_matrix(&read(pb)?))?,
                    None => return Err(spec_err("matmul from files needs input_b as well")),
                };
                Prepared::Matrices(a, b)
            }
            Algorithm::Bfs => Prepared::Graph(parse_in(path, inputs::parse_edges(&text))?),
            Algorithm::Wordcount => {
                Prepared::Words(text.split_whitespace().map(str::to_string).collect())
            }
            Algorithm::CustomRef => return Err(spec_err("custom-ref cannot be run from a spec")),
        });
    }
    let n = spec.n.ok_or_else(|| spec_err("give either n or an input file"))?;
    Ok(match spec.algorithm {
        Algorithm::Psrs => Prepared::Ints(inputs::random_ints(n, seed)),
        Algorithm::Matmul => Prepared::Matrices(
            inputs::random_matrix(n, seed),
            inputs::random_matrix(n, seed.wrapping_add(1)),
        ),
        Algorithm::Bfs => Prepared::Graph(inputs::erdos_renyi(
            n,
            spec.edge_prob.unwrap_or(DEFAULT_EDGE_PROB),
            seed,
        )),
        Algorithm::Wordcount => Prepared::Words(inputs::random_words(n, seed)),
        Algorithm::CustomRef => return Err(spec_err("custom-ref cannot be run from a spec")),
    })
}

/// Everything one run produced besides the report itself.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub traces: Vec<TaskTrace>,
    pub bsp: Option<BspCostLedger>,
    pub mr: Option<MrCostLedger>,
}

#[derive(Default)]
struct Collected {
    bsp: Option<BspCostLedger>,
    mr: Option<MrCostLedger>,
    traces: Vec<TaskTrace>,
    checks: Vec<Check>,
}

fn graham_checks(ledger: &MrCostLedger, p: usize, out: &mut Vec<Check>) {
    for (i, rec) in ledger.rounds().iter().enumerate() {
        for (phase, times) in [("map", &rec.map_times), ("reduce", &rec.reduce_times)] {
            let name = format!("graham_bound round {} {phase}", i + 1);
            if times.len() > BRUTE_FORCE_TASK_LIMIT {
                out.push(Check::skipped(
                    name,
                    format!(
                        "{} tasks exceed the brute-force limit of {BRUTE_FORCE_TASK_LIMIT}",
                        times.len()
                    ),
                ));
                continue;
            }
            let greedy = greedy_schedule(times, p).makespan;
            let opt = optimal_makespan_bruteforce(times, p).expect("within limit");
            let pp = p as u64;
            out.push(Check::new(
                name,
                greedy * pp <= (2 * pp - 1) * opt,
                format!("greedy makespan {greedy}, optimum {opt}, p = {p}"),
            ));
        }
    }
}

fn t_ge_c(ledger: &MrCostLedger) -> Check {
    Check::new(
        "t_ge_c",
        ledger.t() >= ledger.c(),
        format!("T = {}, C = {}", ledger.t(), ledger.c()),
    )
}

fn drive_bsp<P>(
    program: &P,
    inputs: &[P::Input],
    config: &MachineConfig,
    model: Model,
    col: &mut Collected,
) -> crate::Result<Vec<P::Output>>
where
    P: BspProgram,
    P::Output: PartialEq,
{
    let native = run_bsp(program, inputs, config)?;
    if model == Model::BspOnMr {
        let sim = simulate_bsp_on_mr(program, inputs, config)?;
        col.checks.push(Check::new(
            "simulation_output",
            sim.outputs == native.outputs,
            "simulated outputs equal the native BSP run",
        ));
        col.checks.push(Check::new(
            "rounds_equal_supersteps",
            sim.ledger.d() == native.ledger.s(),
            format!("D = {}, S = {}", sim.ledger.d(), native.ledger.s()),
        ));
        col.checks.push(t_ge_c(&sim.ledger));
        col.mr = Some(sim.ledger);
        col.traces = sim.traces;
    }
    col.bsp = Some(native.ledger);
    Ok(native.outputs)
}

fn drive_mr<P>(
    program: &P,
    input: MrInput,
    config: &MachineConfig,
    model: Model,
    col: &mut Collected,
) -> crate::Result<GlobalMemory>
where
    P: MrProgram + Clone + Send,
{
    let native = run_mr(&mut program.clone(), input.clone(), config)?;
    col.checks.push(t_ge_c(&native.ledger));
    graham_checks(&native.ledger, config.p, &mut col.checks);
    if model == Model::MrOnBsp {
        let sim = simulate_mr_on_bsp(&mut program.clone(), input, config)?;
        col.checks.push(Check::new(
            "simulation_output",
            sim.output == native.output,
            "simulated output equals the native MapReduce run",
        ));
        let (s, d) = (sim.ledger.s(), native.ledger.d());
        col.checks.push(Check::new(
            "superstep_count",
            2 * d <= s && s < 3 * d,
            format!("S = {s}, D = {d}"),
        ));
        col.bsp = Some(sim.ledger);
    }
    col.traces = native.traces;
    col.mr = Some(native.ledger);
    Ok(native.output)
}

fn oracle_check(passed: bool, what: &str) -> Check {
    Check::new("oracle", passed, format!("output matches {what}"))
}

fn execute(spec: &WorkloadSpec, data: &Prepared, config: &MachineConfig) -> crate::Result<Collected> {
    let mut col = Collected::default();
    let model = spec.model;
    let bsp_family = matches!(model, Model::Bsp | Model::BspOnMr);
    match data {
        Prepared::Ints(v) => {
            let expect = sequential_sort(v);
            let got = if bsp_family {
                let inst = psrs_bsp(v, config.p)?;
                let out = drive_bsp(&inst.program, &inst.inputs, config, model, &mut col)?;
                out.concat()
            } else {
                let (prog, memory) = psrs_mr(v, config.q, config.r)?;
                let out = drive_mr(&prog, memory.into(), config, model, &mut col)?;
                PsrsMr::sorted_output(&out)?
            };
            col.checks.push(oracle_check(got == expect, "a sequential sort"));
        }
        Prepared::Matrices(a, b) => {
            let expect = Matrix::new(a.n(), matmul_triple_loop(a.n(), a.data(), b.data()))?;
            let got = if bsp_family {
                let inst = matmul_bsp(a, b, config.p)?;
                let out = drive_bsp(&inst.program, &inst.inputs, config, model, &mut col)?;
                inst.program.assemble(&out)?
            } else {
                if config.q != config.r {
                    return Err(SimError::InvalidConfig(format!(
                        "matmul needs q = r, got q = {} and r = {}",
                        config.q, config.r
                    )));
                }
                let (prog, input) = matmul_mr(a, b, config.q)?;
                let out = drive_mr(&prog, input, config, model, &mut col)?;
                prog.assemble(&out)?
            };
            col.checks.push(oracle_check(got == expect, "the triple-loop product"));
        }
        Prepared::Graph(g) => {
            let inst = bfs_bsp(g, spec.root, config.p)?;
            let out = drive_bsp(&inst.program, &inst.inputs, config, model, &mut col)?;
            let got = inst.program.assemble(&out);
            col.checks.push(oracle_check(
                got.dist == bfs_distances(g.adjacency(), spec.root),
                "sequential BFS distances",
            ));
        }
        Prepared::Words(w) => {
            let out = drive_mr(&WordCount, WordCount::input(w).into(), config, model, &mut col)?;
            let expect: Vec<(String, u64)> =
                word_count(w.iter().map(String::as_str)).into_iter().collect();
            col.checks
                .push(oracle_check(WordCount::counts(&out)? == expect, "a sequential count"));
        }
    }
    Ok(col)
}

/// Runs one workload. Invariant violations still produce a report, marked
/// failed; other engine errors do not.
pub fn run_workload(spec: &WorkloadSpec) -> Result<Outcome, WorkloadError> {
    spec.check()?;
    let config = spec.machine();
    let warnings = config.validate().map_err(|e| spec_err(e.to_string()))?;
    let data = prepare(spec)?;
    let (col, error) = match execute(spec, &data, &config) {
        Ok(col) => (col, None),
        Err(e @ SimError::Invariant(_)) => (Collected::default(), Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let report = Report {
        schema: SCHEMA_VERSION,
        workload: spec.clone(),
        n: data.size(),
        config: ConfigReport {
            p: config.p,
            q: config.q,
            r: config.r,
            g: config.g,
            l: config.l,
            seed: config.seed,
            warnings,
        },
        ledger: LedgerReport::new(col.bsp.as_ref(), col.mr.as_ref()),
        estimators: Estimators::new(col.bsp.as_ref(), col.mr.as_ref(), config.g, config.l),
        verdicts: verdicts(&col.checks, error.as_deref()),
        checks: col.checks,
        error,
    };
    Ok(Outcome {
        report,
        traces: col.traces,
        bsp: col.bsp,
        mr: col.mr,
    })
}

/// Runs `spec` once per size. With `check_efficiency` the model must be
/// `bsp-on-mr`, so that every run has both ledgers.
pub fn run_sweep(
    spec: &WorkloadSpec,
    sizes: &[usize],
    check_efficiency: bool,
) -> Result<SweepReport, WorkloadError> {
    check_sizes(sizes)?;
    if sizes.is_empty() {
        return Err(spec_err("a sweep needs at least one size"));
    }
    if check_efficiency && spec.model != Model::BspOnMr {
        return Err(spec_err("efficiency checks need model = bsp-on-mr"));
    }
    let mut runs = Vec::with_capacity(sizes.len());
    let mut eff_runs = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let point = WorkloadSpec {
            n: Some(n),
            input: None,
            input_b: None,
            sweep: None,
            ..spec.clone()
        };
        let outcome = run_workload(&point)?;
        if let (Some(bsp), Some(mr)) = (outcome.bsp, outcome.mr) {
            eff_runs.push(EfficiencyRun {
                n: n as u64,
                bsp,
                mr,
            });
        }
        runs.push(outcome.report);
    }
    let efficiency = if check_efficiency {
        Some(check_efficiency_for(&eff_runs, spec.p)?)
    } else {
        None
    };
    Ok(SweepReport {
        schema: SCHEMA_VERSION,
        sizes: sizes.to_vec(),
        runs,
        efficiency,
    })
}

fn check_efficiency_for(
    runs: &[EfficiencyRun],
    p: usize,
) -> Result<crate::cross::EfficiencyReport, WorkloadError> {
    check_efficiency(runs, p).map_err(|e| spec_err(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let spec = WorkloadSpec::from_toml("algorithm = \"psrs\"\nmodel = \"mr\"\nn = 1000\n").unwrap();
        assert_eq!(spec.p, 4);
        assert_eq!(spec.tasks(), (8, 4));
        assert_eq!(spec.g, 1.0);
    }

    #[test]
    fn rejects_bad_specs() {
        for text in [
            "algorithm = \"custom-ref\"\nmodel = \"bsp\"\nn = 4",
            "algorithm = \"bfs\"\nmodel = \"mr\"\nn = 4",
            "algorithm = \"wordcount\"\nmodel = \"bsp\"\nn = 4",
            "algorithm = \"psrs\"\nmodel = \"bsp\"",
            "algorithm = \"psrs\"\nmodel = \"bsp\"\nn = 4\nsweep = [4, 2]",
            "algorithm = \"psrs\"\nmodel = \"bsp\"\nn = 4\nbogus = 1",
        ] {
            assert!(matches!(WorkloadSpec::from_toml(text), Err(WorkloadError::Spec(_))), "{text}");
        }
    }

    #[test]
    fn every_supported_pair_passes_its_checks() {
        let cases = [
            (Algorithm::Psrs, Model::Bsp, 400),
            (Algorithm::Psrs, Model::Mr, 400),
            (Algorithm::Psrs, Model::BspOnMr, 400),
            (Algorithm::Psrs, Model::MrOnBsp, 400),
            (Algorithm::Matmul, Model::Bsp, 8),
            (Algorithm::Matmul, Model::Mr, 8),
            (Algorithm::Matmul, Model::BspOnMr, 8),
            (Algorithm::Matmul, Model::MrOnBsp, 8),
            (Algorithm::Bfs, Model::Bsp, 100),
            (Algorithm::Bfs, Model::BspOnMr, 100),
            (Algorithm::Wordcount, Model::Mr, 100),
            (Algorithm::Wordcount, Model::MrOnBsp, 100),
        ];
        for (alg, model, n) in cases {
            let mut spec = WorkloadSpec::new(alg, model);
            spec.n = Some(n);
            if alg == Algorithm::Matmul {
                spec.p = 8;
            }
            let out = run_workload(&spec).unwrap();
            assert!(out.report.passed(), "{alg:?} {model:?}: {:?}", out.report.checks);
        }
    }

    #[test]
    fn non_cube_matmul_is_a_simulation_error() {
        let mut spec = WorkloadSpec::new(Algorithm::Matmul, Model::Bsp);
        spec.n = Some(8);
        assert!(matches!(run_workload(&spec), Err(WorkloadError::Simulation(_))));
    }
}
