//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any failed.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bspmr::algorithms::oracle::{bfs_distances, matmul_triple_loop, sequential_sort};
use bspmr::algorithms::{
    bfs_bsp, matmul, matmul_bsp, matmul_mr, psrs, psrs_bsp, psrs_mr, Matrix, PsrsMr, WordCount,
};
use bspmr::cross::{
    check_efficiency, fit_exponent, simulate_bsp_on_mr, simulate_mr_on_bsp, EfficiencyReport,
    EfficiencyRun,
};
use bspmr::inputs::{erdos_renyi, random_ints, random_matrix, random_regular, random_words};
use bspmr::ledger::{estimate_bsp_time, estimate_bspmr_on_mr_time, traces_to_csv, SuperstepRecord};
use bspmr::mr::{greedy_schedule, optimal_makespan_bruteforce, shuffle};
use bspmr::workload::{run_workload, Algorithm, Model, WorkloadSpec};
use bspmr::{
    run_bsp, run_mr, BspCostLedger, BspProgram, Context, Envelope, Execution, Key, KvPair,
    MachineConfig, MrProgram, Result, TaskContext, Value,
};

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sim<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

// 1. Oracle equivalence

fn oracle_equivalence() -> Outcome {
    let mut runs = 0;
    for seed in 0..50u64 {
        for n in [1_000, 10_000] {
            let data = random_ints(n, seed * 31 + n as u64);
            let expect = sequential_sort(&data);
            for p in [2, 4, 8] {
                let inst = sim(psrs_bsp(&data, p))?;
                let run = sim(run_bsp(&inst.program, &inst.inputs, &MachineConfig::new(p)))?;
                ensure(run.outputs.concat() == expect, || format!("psrs_bsp n={n} p={p} seed={seed}"))?;

                let (q, r) = (2 * p, p);
                let (mut prog, mem) = sim(psrs_mr(&data, q, r))?;
                let cfg = MachineConfig::new(p).with_tasks(q, r);
                let out = sim(run_mr(&mut prog, mem, &cfg))?;
                ensure(sim(PsrsMr::sorted_output(&out.output))? == expect, || {
                    format!("psrs_mr n={n} p={p} seed={seed}")
                })?;
                runs += 2;
            }
        }
    }

    for n in [8, 16, 32, 64] {
        for p in [1, 8, 27] {
            for seed in 0..2u64 {
                let a = random_matrix(n, seed * 2 + 100);
                let b = random_matrix(n, seed * 2 + 101);
                let expect = sim(Matrix::new(n, matmul_triple_loop(n, a.data(), b.data())))?;
                let inst = sim(matmul_bsp(&a, &b, p))?;
                let run = sim(run_bsp(&inst.program, &inst.inputs, &MachineConfig::new(p)))?;
                ensure(sim(inst.program.assemble(&run.outputs))? == expect, || {
                    format!("matmul_bsp n={n} p={p}")
                })?;
                let (mut prog, input) = sim(matmul_mr(&a, &b, p))?;
                let cfg = MachineConfig::new(p).with_tasks(p, p);
                let out = sim(run_mr(&mut prog, input, &cfg))?;
                ensure(sim(prog.assemble(&out.output))? == expect, || format!("matmul_mr n={n} p={p}"))?;
                runs += 2;
            }
        }
    }

    for seed in 0..50u64 {
        let n = 16usize << (seed % 8);
        let g = if seed % 2 == 0 {
            erdos_renyi(n, (2.0 + (seed % 5) as f64) / n as f64, seed)
        } else {
            random_regular(n, 4, seed)
        };
        let root = (seed as usize * 7 % n) as u32;
        let p = [2, 4, 8][seed as usize % 3];
        let inst = sim(bfs_bsp(&g, root, p))?;
        let run = sim(run_bsp(&inst.program, &inst.inputs, &MachineConfig::new(p)))?;
        let got = inst.program.assemble(&run.outputs);
        ensure(got.dist == bfs_distances(g.adjacency(), root), || {
            format!("bfs |V|={n} p={p} seed={seed}")
        })?;
        runs += 1;
    }
    Ok(format!("{runs} runs, all equal to their sequential oracles"))
}

// 2. Graham bound

fn graham_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for case in 0..200 {
        let p = 2 + case % 3;
        let k = rng.random_range(1..=12);
        let times: Vec<u64> = (0..k).map(|_| rng.random_range(1..=50)).collect();
        let greedy = greedy_schedule(&times, p).makespan;
        let opt = sim(optimal_makespan_bruteforce(&times, p))?;
        let pp = p as u64;
        if greedy * pp > (2 * pp - 1) * opt {
            violations += 1;
        }
        worst = worst.max(greedy as f64 / opt as f64);
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("200 instances, 0 violations, worst greedy/OPT = {worst:.3}"))
}

// 3. Cross-simulation fidelity

fn sorted_pairs(mut v: Vec<KvPair>) -> Vec<KvPair> {
    v.sort_by(|a, b| a.key.cmp(&b.key).then_with(|| a.value.0.cmp(&b.value.0)));
    v
}

fn check_mr_on_bsp<P: MrProgram + Clone + Send>(
    name: &str,
    prog: &P,
    input: bspmr::MrInput,
    cfg: &MachineConfig,
) -> std::result::Result<(), String> {
    let native = sim(run_mr(&mut prog.clone(), input.clone(), cfg))?;
    let run = sim(simulate_mr_on_bsp(&mut prog.clone(), input, cfg))?;
    ensure(
        sorted_pairs(run.output.into_pairs()) == sorted_pairs(native.output.into_pairs()),
        || format!("{name}: MR-on-BSP output differs"),
    )?;
    let (s, d) = (run.ledger.s(), native.ledger.d());
    ensure(2 * d <= s && s < 3 * d, || format!("{name}: S = {s}, D = {d}"))
}

fn check_bsp_on_mr<P>(name: &str, prog: &P, inputs: &[P::Input], p: usize) -> std::result::Result<(), String>
where
    P: BspProgram,
    P::Output: PartialEq,
{
    let cfg = MachineConfig::new(p);
    let native = sim(run_bsp(prog, inputs, &cfg))?;
    let run = sim(simulate_bsp_on_mr(prog, inputs, &cfg))?;
    ensure(run.outputs == native.outputs, || format!("{name}: BSP-on-MR output differs"))?;
    ensure(run.ledger.d() == native.ledger.s(), || {
        format!("{name}: D = {} but S = {}", run.ledger.d(), native.ledger.s())
    })
}

fn cross_fidelity() -> Outcome {
    let mut cases = 0;
    for (i, p) in [2, 3, 4].into_iter().enumerate() {
        let words = random_words(200 + 100 * i, i as u64);
        let cfg = MachineConfig::new(p).with_tasks(2 * p, p + 1);
        check_mr_on_bsp("wordcount", &WordCount, WordCount::input(&words).into(), &cfg)?;

        let data = random_ints(3000, 40 + i as u64);
        let (prog, mem) = sim(psrs_mr(&data, 2 * p, p))?;
        check_mr_on_bsp("psrs_mr", &prog, mem.into(), &MachineConfig::new(p).with_tasks(2 * p, p))?;
        let inst = sim(psrs_bsp(&data, p))?;
        check_bsp_on_mr("psrs_bsp", &inst.program, &inst.inputs, p)?;

        let g = erdos_renyi(300, 0.02, 7 + i as u64);
        let inst = sim(bfs_bsp(&g, 0, p))?;
        check_bsp_on_mr("bfs", &inst.program, &inst.inputs, p)?;
        cases += 4;
    }
    for (n, p) in [(8, 1), (16, 8), (20, 27)] {
        let a = random_matrix(n, 1);
        let b = random_matrix(n, 2);
        let (prog, input) = sim(matmul_mr(&a, &b, p))?;
        check_mr_on_bsp("matmul_mr", &prog, input.clone(), &MachineConfig::new(p.min(4)).with_tasks(p, p))?;
        let inst = sim(matmul_bsp(&a, &b, p))?;
        check_bsp_on_mr("matmul_bsp", &inst.program, &inst.inputs, p)?;

        let run = sim(simulate_bsp_on_mr(&inst.program, &inst.inputs, &MachineConfig::new(p)))?;
        let native = sim(run_mr(&mut prog.clone(), input, &MachineConfig::new(p)))?;
        ensure(
            sim(inst.program.assemble(&run.outputs))? == sim(prog.assemble(&native.output))?,
            || format!("matmul n={n}: simulated BSP and native MR products differ"),
        )?;
        cases += 2;
    }
    Ok(format!("{cases} cases; outputs equal, D = S and 2D <= S <= 3D-1 throughout"))
}

// 4. Growth-condition separation

fn sweep<P, F>(sizes: &[usize], p: usize, mut build: F) -> std::result::Result<Vec<EfficiencyRun>, String>
where
    P: BspProgram,
    F: FnMut(usize) -> Result<bspmr::algorithms::BspInstance<P>>,
{
    let cfg = MachineConfig::new(p);
    let mut runs = Vec::new();
    for &n in sizes {
        let inst = sim(build(n))?;
        let bsp = sim(run_bsp(&inst.program, &inst.inputs, &cfg))?;
        let mr = sim(simulate_bsp_on_mr(&inst.program, &inst.inputs, &cfg))?;
        runs.push(EfficiencyRun {
            n: n as u64,
            bsp: bsp.ledger,
            mr: mr.ledger,
        });
    }
    Ok(runs)
}

const PSRS_SIZES: [usize; 4] = [1 << 12, 1 << 13, 1 << 14, 1 << 15];
const MATMUL_SIZES: [usize; 4] = [16, 32, 64, 128];
const BFS_SIZES: [usize; 4] = [1 << 8, 1 << 9, 1 << 10, 1 << 11];

fn psrs_runs() -> std::result::Result<Vec<EfficiencyRun>, String> {
    sweep(&PSRS_SIZES, 4, |n| psrs_bsp(&random_ints(n, n as u64), 4))
}

fn matmul_runs() -> std::result::Result<Vec<EfficiencyRun>, String> {
    sweep(&MATMUL_SIZES, 8, |n| {
        matmul_bsp(&random_matrix(n, 1), &random_matrix(n, 2), 8)
    })
}

fn bfs_runs() -> std::result::Result<Vec<EfficiencyRun>, String> {
    sweep(&BFS_SIZES, 4, |n| bfs_bsp(&erdos_renyi(n, 0.05, n as u64), 0, 4))
}

fn summary(r: &EfficiencyReport) -> String {
    r.conditions
        .iter()
        .map(|c| format!("({}) {} gap {:+.2} ratio {:.2}", c.name, c.verdict(), c.gap, c.ratio))
        .collect::<Vec<_>>()
        .join(", ")
}

fn separation() -> Outcome {
    let psrs = sim(check_efficiency(&psrs_runs()?, 4))?;
    ensure(psrs.all_satisfied, || format!("psrs: {}", summary(&psrs)))?;
    let mm = sim(check_efficiency(&matmul_runs()?, 8))?;
    ensure(mm.all_satisfied, || format!("matmul: {}", summary(&mm)))?;
    let bfs = sim(check_efficiency(&bfs_runs()?, 4))?;
    let iv = bfs.condition("iv").expect("condition iv");
    ensure(!iv.satisfied && iv.gap >= 0.75, || format!("bfs: {}", summary(&bfs)))?;
    Ok(format!(
        "psrs [{}]; matmul p = 8 [{}]; bfs [{}]",
        summary(&psrs),
        summary(&mm),
        summary(&bfs)
    ))
}

// 5. Cost-model scaling

fn within(name: &str, got: f64, want: f64, tol: f64) -> std::result::Result<String, String> {
    ensure((got - want).abs() <= tol, || format!("{name}: exponent {got:.3}, expected {want} +/- {tol}"))?;
    Ok(format!("{name} {got:.2}"))
}

fn scaling() -> Outcome {
    let mut notes = Vec::new();

    let runs = psrs_runs()?;
    let xs: Vec<f64> = runs.iter().map(|r| r.n as f64).collect();
    let w_over_log: Vec<f64> = runs
        .iter()
        .map(|r| r.bsp.w() as f64 / (r.n as f64).log2())
        .collect();
    let h: Vec<f64> = runs.iter().map(|r| r.bsp.h() as f64).collect();
    notes.push(within("psrs W/log n", fit_exponent(&xs, &w_over_log), psrs::DESCRIPTOR.w.exponent, 0.25)?);
    notes.push(within("psrs H", fit_exponent(&xs, &h), psrs::DESCRIPTOR.h.exponent, 0.25)?);

    let runs = matmul_runs()?;
    let xs: Vec<f64> = runs.iter().map(|r| r.n as f64).collect();
    let w: Vec<f64> = runs.iter().map(|r| r.bsp.w() as f64).collect();
    let h: Vec<f64> = runs.iter().map(|r| r.bsp.h() as f64).collect();
    notes.push(within("matmul W", fit_exponent(&xs, &w), matmul::DESCRIPTOR.w.exponent, 0.25)?);
    notes.push(within("matmul H", fit_exponent(&xs, &h), matmul::DESCRIPTOR.h.exponent, 0.25)?);

    let n = 64;
    let (a, b) = (random_matrix(n, 5), random_matrix(n, 6));
    let mut qs = Vec::new();
    let mut cs = Vec::new();
    for q in [1, 8, 64] {
        let (mut prog, input) = sim(matmul_mr(&a, &b, q))?;
        let run = sim(run_mr(&mut prog, input, &MachineConfig::new(q).with_tasks(q, q)))?;
        qs.push(q as f64);
        cs.push(run.ledger.c() as f64);
    }
    notes.push(within("matmul_mr C in q", fit_exponent(&qs, &cs), 1.0 / 3.0, 0.15)?);
    Ok(notes.join(", "))
}

// 6. Randomised conservation properties

const CASES: u32 = 1000;

fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Sends a fixed plan of messages and records what arrives.
struct Scripted {
    /// `plan[s][pid]`: messages processor `pid` sends in superstep `s + 1`.
    plan: Vec<Vec<Vec<(usize, Vec<u8>)>>>,
}

type Received = Vec<(usize, usize, usize, Vec<u8>)>;

impl BspProgram for Scripted {
    type Input = ();
    type State = Received;
    type Output = Received;

    fn init(&self, _pid: usize, _input: &()) -> Received {
        Vec::new()
    }
    fn input_units(&self, _input: &()) -> u64 {
        0
    }
    fn superstep(&self, ctx: &mut Context, state: &mut Received, inbox: &[Envelope]) -> Result<()> {
        for e in inbox {
            state.push((ctx.superstep() - 1, e.from, e.seq, e.payload().to_vec()));
        }
        match self.plan.get(ctx.superstep() - 1) {
            Some(step) => {
                for (to, payload) in &step[ctx.pid()] {
                    ctx.send(*to, payload.clone());
                }
            }
            None => ctx.vote_halt(),
        }
        Ok(())
    }
    fn output_units(&self, _state: &Received) -> u64 {
        0
    }
    fn output(&self, _pid: usize, state: Received) -> Received {
        state
    }
    fn encode_state(&self, _state: &Received) -> Vec<u8> {
        Vec::new()
    }
    fn decode_state(&self, _bytes: &[u8]) -> Result<Received> {
        Ok(Vec::new())
    }
}

/// Sums integer values by key, charging one op per value.
#[derive(Clone)]
struct SumByKey;

impl MrProgram for SumByKey {
    fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
        ctx.count_op(1);
        ctx.emit_pair(pair.clone());
        Ok(())
    }
    fn reduce(&self, ctx: &mut TaskContext, key: &Key, values: &[Value]) -> Result<()> {
        let mut s = 0;
        for v in values {
            s += v.words()?[0];
        }
        ctx.count_op(values.len() as u64);
        ctx.emit(key.clone(), Value::from_int(s));
        Ok(())
    }
}

fn pair_strategy() -> impl Strategy<Value = KvPair> {
    (0i64..20, prop::collection::vec(any::<u8>(), 0..20)).prop_map(|(k, v)| KvPair::new(k, Value(v)))
}

fn conservation() -> Outcome {
    let mut notes = Vec::new();

    let shuffle_strategy = (1usize..6).prop_flat_map(|r| {
        (
            Just(r),
            prop::collection::vec(prop::collection::vec((0..r, pair_strategy()), 0..12), 1..6),
        )
    });
    runner()
        .run(&shuffle_strategy, |(r, intermediate)| {
            let mut sent: Vec<(usize, KvPair)> = intermediate.iter().flatten().cloned().collect();
            let out = shuffle(intermediate, r).unwrap();
            let mut got = Vec::new();
            for (task, input) in out.iter().enumerate() {
                for (k, vs) in &input.groups {
                    for v in vs {
                        got.push((task, KvPair { key: k.clone(), value: v.clone() }));
                    }
                }
            }
            let key = |x: &(usize, KvPair)| (x.0, x.1.key.clone(), x.1.value.0.clone());
            sent.sort_by_key(key);
            got.sort_by_key(key);
            prop_assert_eq!(sent, got);
            Ok(())
        })
        .map_err(|e| format!("shuffle conservation: {e}"))?;
    notes.push("shuffle");

    let bsp_strategy = (1usize..5, 1usize..4).prop_flat_map(|(p, steps)| {
        let msg = (0..p, prop::collection::vec(any::<u8>(), 0..24));
        prop::collection::vec(prop::collection::vec(prop::collection::vec(msg, 0..4), p), steps)
    });
    runner()
        .run(&bsp_strategy, |plan| {
            let p = plan[0].len();
            let prog = Scripted { plan: plan.clone() };
            let run = run_bsp(&prog, &vec![(); p], &MachineConfig::new(p)).unwrap();
            let mut expect: Vec<Received> = vec![Vec::new(); p];
            for (s, step) in plan.iter().enumerate() {
                for (from, msgs) in step.iter().enumerate() {
                    for (seq, (to, payload)) in msgs.iter().enumerate() {
                        expect[*to].push((s + 1, from, seq, payload.clone()));
                    }
                }
            }
            prop_assert_eq!(&run.outputs, &expect);
            prop_assert_eq!(run.log.sent.len(), run.log.delivered.len());
            let sent: u64 = run.log.sent.iter().map(|m| m.size).sum();
            let delivered: u64 = run.log.delivered.iter().map(|m| m.size).sum();
            prop_assert_eq!(sent, delivered);
            Ok(())
        })
        .map_err(|e| format!("BSP message conservation: {e}"))?;
    notes.push("BSP messages");

    let mr_strategy = (
        prop::collection::vec((0i64..30, 0i64..100), 0..80),
        1usize..5,
        1usize..9,
        1usize..6,
    );
    runner()
        .run(&mr_strategy, |(pairs, p, q, r)| {
            let input: Vec<KvPair> = pairs.iter().map(|&(k, v)| KvPair::new(k, Value::from_int(v))).collect();
            let cfg = MachineConfig::new(p).with_tasks(q, r);
            let run = run_mr(&mut SumByKey, input, &cfg).unwrap();
            prop_assert!(run.ledger.t() >= run.ledger.c());
            let mut sums = BTreeMap::new();
            for &(k, v) in &pairs {
                *sums.entry(k).or_insert(0) += v;
            }
            prop_assert_eq!(run.output.len(), sums.len());
            Ok(())
        })
        .map_err(|e| format!("T >= C: {e}"))?;
    notes.push("T >= C");

    let record = (0u64..50, 0u64..50, 0u64..50, 0u64..50, any::<bool>(), any::<bool>());
    let est_strategy = (prop::collection::vec(record, 0..8), 0u32..6, 0u32..6);
    runner()
        .run(&est_strategy, |(records, g, l)| {
            let mut ledger = BspCostLedger::new();
            for (w, h_in, h_out, f, i, o) in records {
                ledger.push(SuperstepRecord {
                    w,
                    h_in,
                    h_out,
                    f,
                    is_input_read: i,
                    is_output_write: o,
                });
            }
            let (g, l) = (f64::from(g), f64::from(l));
            let bsp = estimate_bsp_time(&ledger, g, l);
            let on_mr = estimate_bspmr_on_mr_time(&ledger, g, l);
            prop_assert!(on_mr >= bsp);
            prop_assert_eq!(on_mr == bsp, ledger.f() as f64 * g == 0.0);
            Ok(())
        })
        .map_err(|e| format!("estimator ordering: {e}"))?;
    notes.push("estimator ordering");

    Ok(format!("{CASES} cases each: {}", notes.join(", ")))
}

// 7. Determinism

fn determinism() -> Outcome {
    let cases = [
        (Algorithm::Psrs, Model::Mr, 1000, 4),
        (Algorithm::Psrs, Model::BspOnMr, 2000, 4),
        (Algorithm::Matmul, Model::Bsp, 16, 8),
        (Algorithm::Matmul, Model::MrOnBsp, 16, 8),
        (Algorithm::Bfs, Model::BspOnMr, 300, 4),
        (Algorithm::Wordcount, Model::MrOnBsp, 500, 3),
    ];
    for (alg, model, n, p) in cases {
        let mut spec = WorkloadSpec::new(alg, model);
        spec.n = Some(n);
        spec.p = p;
        spec.seed = 7;
        spec.l = 10.0;
        if alg == Algorithm::Psrs && model == Model::Mr {
            spec.q = Some(8);
            spec.r = Some(4);
        }
        let render = |exec: Execution| -> std::result::Result<(String, String), String> {
            let mut s = spec.clone();
            s.exec = exec;
            let out = run_workload(&s).map_err(|e| e.to_string())?;
            Ok((out.report.to_json(), traces_to_csv(&out.traces)))
        };
        let first = render(Execution::Parallel)?;
        let second = render(Execution::Parallel)?;
        let sequential = render(Execution::Sequential)?;
        ensure(first == second, || format!("{alg:?}/{model:?}: repeated runs differ"))?;
        ensure(first == sequential, || format!("{alg:?}/{model:?}: parallel and sequential differ"))?;
    }
    Ok(format!(
        "{} workloads byte-identical across repeats and execution modes",
        cases.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("greedy makespan within (2 - 1/p) OPT", graham_bound),
        ("cross-simulation fidelity", cross_fidelity),
        ("growth-condition separation", separation),
        ("cost-model scaling", scaling),
        ("conservation under random inputs", conservation),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
