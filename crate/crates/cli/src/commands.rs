//! Implementations of the five subcommands. Every machine output is a single
//! JSON document on stdout (or `--out`); human summaries go to stderr.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use interdag::graph::{pair_count, Dag, VarSet};
use interdag::io::{format_schedule, parse_dag, parse_schedule};
use interdag::knowledge::{
    apply_collider_rule, extract_dag, update_consistent_set, update_pairwise, ConsistentSet,
    KnowledgeError, KnowledgeState,
};
use interdag::oracle::{pair_outcomes, run_experiment, Experiment, PairOutcome};
use interdag::planner::{
    adaptive_next, binary_codeword_schedule, binary_schedule_bound, coverage_report,
    kmax_schedule, kmax_schedule_bound, single_intervention_schedule, Schedule,
};
use interdag::verifier::{
    adaptive_min_experiments, canonical_schedules, identifies_all_with_cap,
    min_schedule_length_with_cap, SignatureTable,
};

use crate::{
    BenchArgs, EngineChoice, EnumerateArgs, Failure, PlanArgs, SimulateArgs, Strategy, VerifyArgs,
    VerifyMode,
};

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Single => "single",
        Strategy::Binary => "binary",
        Strategy::Kmax => "kmax",
    }
}

fn build_strategy_schedule(
    n: usize,
    strategy: Strategy,
    kmax: Option<usize>,
) -> Result<Schedule, Failure> {
    match (strategy, kmax) {
        (Strategy::Single, None) => single_intervention_schedule(n).map_err(usage),
        (Strategy::Binary, None) => binary_codeword_schedule(n).map_err(usage),
        (Strategy::Kmax, Some(k)) => kmax_schedule(n, k).map_err(usage),
        (Strategy::Kmax, None) => Err(Failure::Usage(
            "--kmax is required with --strategy kmax".into(),
        )),
        (_, Some(_)) => Err(Failure::Usage(
            "--kmax is only valid with --strategy kmax".into(),
        )),
    }
}

/// The worst-case length bound matching a strategy, with a display form.
fn bound_info(n: usize, strategy: Strategy, kmax: Option<usize>) -> (String, usize, bool) {
    match strategy {
        Strategy::Single => (format!("N-1 = {}", n - 1), n - 1, true),
        Strategy::Binary => {
            let b = binary_schedule_bound(n);
            let text = if n.is_power_of_two() {
                format!("⌈log₂{n}⌉+1 = {b}")
            } else {
                format!("⌈log₂{n}⌉ = {b}")
            };
            (text, b, true)
        }
        Strategy::Kmax => {
            let k = kmax.expect("validated");
            let (b, exact) = kmax_schedule_bound(n, k);
            let text = if exact {
                format!("(N/kmax - 1) + N/(2·kmax)·⌈log₂ kmax⌉ = {b}")
            } else {
                format!("≤ (⌈N/kmax⌉ - 1) + ⌈⌈N/kmax⌉/2⌉·⌈log₂ kmax⌉ = {b}")
            };
            (text, b, exact)
        }
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string(value).expect("report serialization cannot fail");
    text.push('\n');
    write_output(path, &text)
}

#[derive(Serialize)]
struct DagOut {
    n: usize,
    edges: Vec<(usize, usize)>,
}

fn dag_out(g: &Dag) -> DagOut {
    DagOut {
        n: g.n(),
        edges: g.edges(),
    }
}

pub fn plan(args: &PlanArgs) -> Result<u8, Failure> {
    let schedule = build_strategy_schedule(args.n, args.strategy, args.kmax)?;
    let (bound_text, _, _) = bound_info(args.n, args.strategy, args.kmax);
    eprintln!(
        "plan: {} experiments for n = {}; worst-case bound {}",
        schedule.len(),
        args.n,
        bound_text
    );
    write_output(args.out.as_deref(), &format_schedule(&schedule))?;
    Ok(0)
}

#[derive(Serialize)]
struct SimParams {
    n: usize,
    engine: &'static str,
    adaptive: bool,
    collider_rule: bool,
    strategy: Option<&'static str>,
    kmax: Option<usize>,
    seed: Option<u64>,
    edge_prob: Option<f64>,
    dag_file: Option<String>,
    schedule_file: Option<String>,
    enum_cap: usize,
}

#[derive(Serialize)]
struct ExperimentRecord {
    intervention: VarSet,
    outcomes: Option<Vec<PairOutcome>>,
    consistent_size: Option<usize>,
}

#[derive(Serialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Status {
    Recovered,
    Unresolved,
    Contradiction,
}

#[derive(Serialize)]
struct PairLatticeEntry {
    x: usize,
    y: usize,
    possibilities: Vec<&'static str>,
}

#[derive(Serialize)]
struct RunResult {
    command: &'static str,
    params: SimParams,
    schedule: Schedule,
    per_experiment: Vec<ExperimentRecord>,
    status: Status,
    recovered: Option<DagOut>,
    experiments_run: usize,
    unresolved_pairs: Vec<(usize, usize)>,
    /// The per-pair possibility sets, reported verbatim when the run did not
    /// end in recovery.
    pair_lattice: Option<Vec<PairLatticeEntry>>,
    consistent_remaining: Option<usize>,
    wall_time_ms: f64,
}

fn lattice_out(state: &KnowledgeState) -> Vec<PairLatticeEntry> {
    use interdag::knowledge::PairRelation;
    interdag::graph::pairs(state.n())
        .map(|(x, y)| PairLatticeEntry {
            x,
            y,
            possibilities: state
                .pair(x, y)
                .possibilities()
                .into_iter()
                .map(|r| match r {
                    PairRelation::EdgeXY => "edge-x-to-y",
                    PairRelation::EdgeYX => "edge-y-to-x",
                    PairRelation::NoEdge => "no-edge",
                })
                .collect(),
        })
        .collect()
}

enum ExperimentSource {
    Fixed(Vec<Experiment>),
    Adaptive { kmax: Option<usize> },
}

struct Execution {
    executed: Vec<Experiment>,
    records: Vec<ExperimentRecord>,
    state: KnowledgeState,
    consistent: Option<ConsistentSet>,
    contradiction: Option<String>,
}

fn run_engines(
    g: &Dag,
    source: ExperimentSource,
    engine: EngineChoice,
    collider_rule: bool,
    enum_cap: usize,
) -> Result<Execution, Failure> {
    let n = g.n();
    let mut state = KnowledgeState::new(n);
    let mut consistent = match engine {
        EngineChoice::Pairwise => None,
        EngineChoice::Exact | EngineChoice::Both => {
            Some(ConsistentSet::full_with_cap(n, enum_cap).map_err(usage)?)
        }
    };
    let report_outcomes = !matches!(engine, EngineChoice::Exact);

    let mut fixed = match &source {
        ExperimentSource::Fixed(list) => Some(list.clone().into_iter()),
        ExperimentSource::Adaptive { .. } => None,
    };
    let mut executed = Vec::new();
    let mut records = Vec::new();
    let mut contradiction = None;

    loop {
        let e = match (&mut fixed, &source) {
            (Some(iter), _) => match iter.next() {
                Some(e) => e,
                None => break,
            },
            (None, ExperimentSource::Adaptive { kmax }) => {
                if state.resolved() || executed.len() > 4 * n * n {
                    break;
                }
                let proposal = adaptive_next(&state, *kmax);
                if proposal.is_empty() {
                    break;
                }
                Experiment::new(proposal)
            }
            _ => unreachable!(),
        };

        let outcomes = pair_outcomes(g, e);
        let need_response = collider_rule || consistent.is_some();
        let response = if need_response {
            Some(run_experiment(g, e).map_err(usage)?)
        } else {
            None
        };

        let mut record = ExperimentRecord {
            intervention: e.intervention,
            outcomes: report_outcomes.then(|| outcomes.clone()),
            consistent_size: None,
        };
        executed.push(e);

        match update_pairwise(&state, e, &outcomes) {
            Ok(next) => state = next,
            Err(err) => {
                contradiction = Some(err.to_string());
                records.push(record);
                break;
            }
        }
        if collider_rule {
            match apply_collider_rule(&state, response.as_ref().expect("response computed")) {
                Ok(next) => state = next,
                Err(err) => {
                    contradiction = Some(err.to_string());
                    records.push(record);
                    break;
                }
            }
        }
        if let Some(cs) = consistent.take() {
            match update_consistent_set(&cs, e, response.as_ref().expect("response computed")) {
                Ok(next) => {
                    record.consistent_size = Some(next.len());
                    consistent = Some(next);
                }
                Err(err @ KnowledgeError::EmptyConsistentSet { .. }) => {
                    contradiction = Some(err.to_string());
                    records.push(record);
                    break;
                }
                Err(err) => return Err(usage(err)),
            }
        }
        records.push(record);
    }

    Ok(Execution {
        executed,
        records,
        state,
        consistent,
        contradiction,
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let started = Instant::now();

    // True graph.
    let (g, seed, edge_prob) = match (&args.dag, &args.random) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            let g = parse_dag(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            (g, None, None)
        }
        (None, Some(raw)) => {
            let n: usize = raw[0].parse().map_err(|_| usage("--random N must be an integer"))?;
            let p: f64 = raw[1]
                .parse()
                .map_err(|_| usage("--random EDGE_PROB must be a number"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Failure::Usage("--random EDGE_PROB must lie in [0, 1]".into()));
            }
            let seed: u64 = raw[2].parse().map_err(|_| usage("--random SEED must be an integer"))?;
            let g = interdag::random_dag(n, p, seed).map_err(usage)?;
            (g, Some(seed), Some(p))
        }
        _ => {
            return Err(Failure::Usage(
                "exactly one of --dag and --random is required".into(),
            ))
        }
    };
    let n = g.n();

    // Experiment source.
    let source = if args.adaptive {
        ExperimentSource::Adaptive { kmax: args.kmax }
    } else if let Some(path) = &args.schedule {
        if args.kmax.is_some() {
            return Err(Failure::Usage("--kmax has no effect with --schedule".into()));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let s = parse_schedule(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if s.n() != n {
            return Err(Failure::Usage(format!(
                "schedule is for n = {} but the graph has n = {n}",
                s.n()
            )));
        }
        ExperimentSource::Fixed(s.experiments().to_vec())
    } else if let Some(strategy) = args.strategy {
        let s = build_strategy_schedule(n, strategy, args.kmax)?;
        ExperimentSource::Fixed(s.experiments().to_vec())
    } else {
        return Err(Failure::Usage(
            "one of --schedule, --strategy, or --adaptive is required".into(),
        ));
    };

    let exec = run_engines(&g, source, args.engine, args.collider_rule, args.enum_cap)?;

    // Final status per engine selection.
    let pairwise_result = if exec.contradiction.is_none() && exec.state.resolved() {
        match extract_dag(&exec.state) {
            Ok(d) => Some(d),
            Err(KnowledgeError::ResolutionCyclic) => None,
            Err(e) => return Err(usage(e)),
        }
    } else {
        None
    };
    let exact_result = exec
        .consistent
        .as_ref()
        .and_then(|cs| cs.sole_member().cloned());
    let (status, recovered) = if exec.contradiction.is_some() {
        (Status::Contradiction, None)
    } else {
        match args.engine {
            EngineChoice::Pairwise => match pairwise_result {
                Some(d) => (Status::Recovered, Some(d)),
                None => (Status::Unresolved, None),
            },
            EngineChoice::Exact => match exact_result {
                Some(d) => (Status::Recovered, Some(d)),
                None => (Status::Unresolved, None),
            },
            EngineChoice::Both => match (pairwise_result, exact_result) {
                (Some(a), Some(b)) if a == b => (Status::Recovered, Some(a)),
                (Some(_), Some(_)) => (Status::Contradiction, None),
                _ => (Status::Unresolved, None),
            },
        }
    };

    let schedule = Schedule::new(n, exec.executed.clone()).map_err(usage)?;
    let result = RunResult {
        command: "simulate",
        params: SimParams {
            n,
            engine: match args.engine {
                EngineChoice::Pairwise => "pairwise",
                EngineChoice::Exact => "exact",
                EngineChoice::Both => "both",
            },
            adaptive: args.adaptive,
            collider_rule: args.collider_rule,
            strategy: args.strategy.map(strategy_name),
            kmax: args.kmax,
            seed,
            edge_prob,
            dag_file: args.dag.as_ref().map(|p| p.display().to_string()),
            schedule_file: args.schedule.as_ref().map(|p| p.display().to_string()),
            enum_cap: args.enum_cap,
        },
        schedule,
        per_experiment: exec.records,
        status,
        recovered: recovered.as_ref().map(dag_out),
        experiments_run: exec.executed.len(),
        unresolved_pairs: exec.state.unresolved_pairs(),
        pair_lattice: (status != Status::Recovered).then(|| lattice_out(&exec.state)),
        consistent_remaining: exec.consistent.as_ref().map(|cs| cs.len()),
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    emit_json(args.out.as_deref(), &result)?;

    match status {
        Status::Recovered => {
            eprintln!(
                "simulate: recovered the graph in {} experiments",
                result.experiments_run
            );
            Ok(0)
        }
        Status::Unresolved => {
            eprintln!(
                "simulate: {} of {} pairs unresolved after {} experiments",
                result.unresolved_pairs.len(),
                pair_count(n),
                result.experiments_run
            );
            Ok(0)
        }
        Status::Contradiction => Err(Failure::Contradiction(
            exec.contradiction
                .unwrap_or_else(|| "engines disagree on the recovered graph".into()),
        )),
    }
}

#[derive(Serialize)]
struct SufficiencyReport {
    schedule: Schedule,
    length: usize,
    bound: usize,
    identifies: bool,
    coverage_sufficient: bool,
}

#[derive(Serialize)]
struct DefeatReport {
    length: usize,
    schedule: Schedule,
    witness_a: DagOut,
    witness_b: DagOut,
}

#[derive(Serialize)]
struct NecessityReport {
    min_length: Option<usize>,
    example: Option<Schedule>,
    bound: Option<usize>,
    consistent: bool,
    defeat: Option<DefeatReport>,
    adaptive_min: Option<usize>,
}

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    n: usize,
    max_len: usize,
    kmax: Option<usize>,
    mode: &'static str,
    sufficiency: Option<SufficiencyReport>,
    necessity: Option<NecessityReport>,
    verdict: &'static str,
}

/// Expected worst-case minimum when the theory pins one down for these
/// parameters.
fn necessity_bound(n: usize, kmax: Option<usize>) -> Option<usize> {
    match kmax {
        None => Some(binary_schedule_bound(n)),
        Some(1) if n >= 3 => Some(n - 1),
        Some(k) if 2 * k < n && n.is_multiple_of(k) && (n / k).is_multiple_of(2) => {
            Some(kmax_schedule_bound(n, k).0)
        }
        Some(_) => None,
    }
}

/// One defeated schedule of the given length plus its witness pair. Every
/// schedule of this length fails, so the first canonical one serves.
fn sample_defeat(
    n: usize,
    len: usize,
    kmax: Option<usize>,
    enum_cap: usize,
) -> Result<Option<DefeatReport>, Failure> {
    for schedule in canonical_schedules(n, len, kmax) {
        let table = SignatureTable::build_with_cap(&schedule, enum_cap).map_err(usage)?;
        if let Some((a, b)) = table.witness() {
            return Ok(Some(DefeatReport {
                length: len,
                schedule,
                witness_a: dag_out(table.dag(a)),
                witness_b: dag_out(table.dag(b)),
            }));
        }
    }
    Ok(None)
}

pub fn verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let n = args.n;
    if n < 2 {
        return Err(Failure::Usage("verify requires --n >= 2".into()));
    }
    let run_sufficiency = matches!(args.mode, VerifyMode::Sufficiency | VerifyMode::Both);
    let run_necessity = matches!(args.mode, VerifyMode::Necessity | VerifyMode::Both);

    let sufficiency = if run_sufficiency {
        let schedule = binary_codeword_schedule(n).map_err(usage)?;
        let check = identifies_all_with_cap(&schedule, args.enum_cap).map_err(usage)?;
        Some(SufficiencyReport {
            length: schedule.len(),
            bound: binary_schedule_bound(n),
            identifies: check.identifies,
            coverage_sufficient: coverage_report(&schedule).overall_sufficient,
            schedule,
        })
    } else {
        None
    };

    let necessity = if run_necessity {
        let found = min_schedule_length_with_cap(n, args.max_len, args.kmax, args.enum_cap)
            .map_err(usage)?;
        let bound = necessity_bound(n, args.kmax);
        let (min_length, example) = match found {
            Some((len, s)) => (Some(len), Some(s)),
            None => (None, None),
        };
        let consistent = match (min_length, bound) {
            (Some(found_len), Some(expected)) => found_len == expected,
            (None, Some(expected)) => expected > args.max_len,
            (_, None) => true,
        };
        let defeat_len = match min_length {
            Some(len) if len > 0 => Some(len - 1),
            Some(_) => None,
            None => Some(args.max_len),
        };
        let defeat = match defeat_len {
            Some(len) => sample_defeat(n, len, args.kmax, args.enum_cap)?,
            None => None,
        };
        let adaptive_min = if args.adaptive_search {
            Some(adaptive_min_experiments(n).map_err(usage)?)
        } else {
            None
        };
        Some(NecessityReport {
            min_length,
            example,
            bound,
            consistent,
            defeat,
            adaptive_min,
        })
    } else {
        None
    };

    let suff_ok = sufficiency.as_ref().is_none_or(|s| s.identifies);
    let nec_ok = necessity.as_ref().is_none_or(|r| r.consistent);
    // In `both` mode the certified minimum must also match the planner's
    // schedule length, the tightness claim.
    let tight_ok = match (&sufficiency, &necessity) {
        (Some(s), Some(r)) => r.min_length.is_none_or(|m| m == s.length),
        _ => true,
    };
    let verdict_ok = suff_ok && nec_ok && tight_ok;

    let report = VerifyReport {
        command: "verify",
        n,
        max_len: args.max_len,
        kmax: args.kmax,
        mode: match args.mode {
            VerifyMode::Sufficiency => "sufficiency",
            VerifyMode::Necessity => "necessity",
            VerifyMode::Both => "both",
        },
        sufficiency,
        necessity,
        verdict: if verdict_ok { "match" } else { "mismatch" },
    };
    emit_json(None, &report)?;
    if let Some(s) = &report.sufficiency {
        eprintln!(
            "verify: sufficiency at length {}: {}",
            s.length,
            if s.identifies { "holds" } else { "FAILS" }
        );
    }
    if let Some(r) = &report.necessity {
        match r.min_length {
            Some(m) => eprintln!(
                "verify: minimum identifying length {m}{}",
                match r.bound {
                    Some(b) => format!(" (expected {b})"),
                    None => String::new(),
                }
            ),
            None => eprintln!(
                "verify: no identifying schedule within max-len {}",
                args.max_len
            ),
        }
    }
    eprintln!("verify: verdict {}", report.verdict);
    Ok(if verdict_ok { 0 } else { 2 })
}

#[derive(Serialize)]
struct EnumerateReport {
    command: &'static str,
    n: usize,
    count: usize,
    dags: Option<Vec<Vec<(usize, usize)>>>,
}

pub fn enumerate(args: &EnumerateArgs) -> Result<u8, Failure> {
    let dags = interdag::enumerate_dags_with_cap(args.n, args.enum_cap).map_err(usage)?;
    let listing = if args.all {
        if args.n > 4 {
            return Err(Failure::Usage("--all is limited to n <= 4".into()));
        }
        Some(dags.iter().map(|g| g.edges()).collect())
    } else {
        None
    };
    let report = EnumerateReport {
        command: "enumerate",
        n: args.n,
        count: dags.len(),
        dags: listing,
    };
    emit_json(None, &report)?;
    eprintln!("enumerate: {} DAGs on {} vertices", report.count, args.n);
    Ok(0)
}

#[derive(Serialize)]
struct BenchParams {
    n: usize,
    trials: usize,
    edge_prob: f64,
    seed: u64,
    strategy: &'static str,
    kmax: Option<usize>,
}

#[derive(Serialize)]
struct BenchReport {
    command: &'static str,
    params: BenchParams,
    recovered: usize,
    recovery_rate: f64,
    experiments_mean: f64,
    experiments_max: usize,
    bound: usize,
    bound_exact: bool,
    wall_time_ms: f64,
}

pub fn bench(args: &BenchArgs) -> Result<u8, Failure> {
    let started = Instant::now();
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be positive".into()));
    }
    if !(0.0..=1.0).contains(&args.edge_prob) {
        return Err(Failure::Usage("--edge-prob must lie in [0, 1]".into()));
    }
    let schedule = build_strategy_schedule(args.n, args.strategy, args.kmax)?;
    let (_, bound, bound_exact) = bound_info(args.n, args.strategy, args.kmax);

    let mut recovered = 0usize;
    let mut total_experiments = 0usize;
    let mut max_experiments = 0usize;
    for trial in 0..args.trials {
        let g = interdag::random_dag(args.n, args.edge_prob, args.seed + trial as u64)
            .map_err(usage)?;
        let mut state = KnowledgeState::new(args.n);
        for &e in schedule.experiments() {
            state = update_pairwise(&state, e, &pair_outcomes(&g, e))
                .map_err(|e| Failure::Contradiction(e.to_string()))?;
        }
        total_experiments += schedule.len();
        max_experiments = max_experiments.max(schedule.len());
        if state.resolved() && extract_dag(&state).ok().as_ref() == Some(&g) {
            recovered += 1;
        }
    }

    let report = BenchReport {
        command: "bench",
        params: BenchParams {
            n: args.n,
            trials: args.trials,
            edge_prob: args.edge_prob,
            seed: args.seed,
            strategy: strategy_name(args.strategy),
            kmax: args.kmax,
        },
        recovered,
        recovery_rate: recovered as f64 / args.trials as f64,
        experiments_mean: total_experiments as f64 / args.trials as f64,
        experiments_max: max_experiments,
        bound,
        bound_exact,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    emit_json(None, &report)?;
    eprintln!(
        "bench: {}/{} recovered, {} experiments each (bound {})",
        recovered,
        args.trials,
        schedule.len(),
        bound
    );
    Ok(0)
}
