//! Exhaustive verification of the schedule-length bounds at small n: whether
//! a schedule distinguishes every DAG from every other, and the minimum
//! schedule length that does.

use std::collections::{HashMap, HashSet};

use crate::graph::{enumerate_dags_with_cap, pairs, Dag, GraphError, VarSet, DEFAULT_ENUM_CAP};
use crate::knowledge::{
    extract_dag, update_consistent_set, update_pairwise, ConsistentSet, KnowledgeError,
    KnowledgeState, PairRelation,
};
use crate::oracle::{pair_outcomes, run_experiment, Experiment, OracleError};
use crate::planner::{coverage_report, Schedule};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifierError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("engine contradiction at experiment {index}: {source}")]
    Engine {
        index: usize,
        source: KnowledgeError,
    },
    #[error("adaptive game-tree search supports n <= {max} (got {n})")]
    AdaptiveTooLarge { n: usize, max: usize },
}

/// For every DAG on `n` vertices, the concatenated packed oracle responses a
/// schedule produces. A schedule identifies every DAG iff this map is
/// injective.
pub struct SignatureTable {
    dags: Vec<Dag>,
    signatures: Vec<Vec<u64>>,
}

impl SignatureTable {
    pub fn build(schedule: &Schedule) -> Result<Self, VerifierError> {
        Self::build_with_cap(schedule, DEFAULT_ENUM_CAP)
    }

    pub fn build_with_cap(schedule: &Schedule, cap: usize) -> Result<Self, VerifierError> {
        let dags = enumerate_dags_with_cap(schedule.n(), cap)?;
        let signatures = dags
            .iter()
            .map(|g| signature_of(g, schedule.experiments()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SignatureTable { dags, signatures })
    }

    pub fn len(&self) -> usize {
        self.dags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dags.is_empty()
    }

    pub fn dag(&self, id: u32) -> &Dag {
        &self.dags[id as usize]
    }

    pub fn signature(&self, id: u32) -> &[u64] {
        &self.signatures[id as usize]
    }

    pub fn is_injective(&self) -> bool {
        self.witness().is_none()
    }

    /// The first two DAG identifiers sharing a signature, if any.
    pub fn witness(&self) -> Option<(u32, u32)> {
        let mut seen: HashMap<&[u64], u32> = HashMap::with_capacity(self.signatures.len());
        for (id, sig) in self.signatures.iter().enumerate() {
            if let Some(&first) = seen.get(sig.as_slice()) {
                return Some((first, id as u32));
            }
            seen.insert(sig, id as u32);
        }
        None
    }

    /// Signature classes with more than one member, each sorted ascending.
    pub fn confusion_groups(&self) -> Vec<Vec<u32>> {
        let mut classes: HashMap<&[u64], Vec<u32>> = HashMap::new();
        for (id, sig) in self.signatures.iter().enumerate() {
            classes.entry(sig).or_default().push(id as u32);
        }
        let mut groups: Vec<Vec<u32>> = classes.into_values().filter(|g| g.len() > 1).collect();
        groups.sort();
        groups
    }
}

fn signature_of(g: &Dag, experiments: &[Experiment]) -> Result<Vec<u64>, VerifierError> {
    let mut sig = Vec::new();
    for &e in experiments {
        sig.extend_from_slice(run_experiment(g, e)?.packed_bits());
    }
    Ok(sig)
}

/// Outcome of checking a schedule against the full hypothesis space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentificationCheck {
    pub identifies: bool,
    /// Two DAG identifiers with identical response sequences, when not.
    pub witness: Option<(u32, u32)>,
}

/// True iff no two distinct DAGs on `schedule.n()` vertices produce the same
/// response sequence under the schedule.
pub fn identifies_all(schedule: &Schedule) -> Result<IdentificationCheck, VerifierError> {
    identifies_all_with_cap(schedule, DEFAULT_ENUM_CAP)
}

pub fn identifies_all_with_cap(
    schedule: &Schedule,
    cap: usize,
) -> Result<IdentificationCheck, VerifierError> {
    let table = SignatureTable::build_with_cap(schedule, cap)?;
    let witness = table.witness();
    Ok(IdentificationCheck {
        identifies: witness.is_none(),
        witness,
    })
}

/// All schedules of `len` experiments over `n` variables, up to experiment
/// order and simultaneous relabeling of variables.
///
/// Non-adaptive identification is invariant under both symmetries: reordering
/// experiments permutes the signature blocks identically for every DAG, and
/// relabeling variables permutes the DAG space onto itself. Only canonical
/// representatives (the least relabeled, sorted form) are returned.
pub fn canonical_schedules(n: usize, len: usize, kmax: Option<usize>) -> Vec<Schedule> {
    let cap = kmax.unwrap_or(n);
    let masks: Vec<u64> = (0..1u64 << n)
        .filter(|m| (m.count_ones() as usize) <= cap)
        .collect();
    let perms = permutations(n);

    let mut out = Vec::new();
    let mut current = vec![0u64; len];
    fill_multisets(&masks, 0, 0, &mut current, &mut |candidate: &[u64]| {
        if is_canonical(candidate, &perms) {
            let experiments = candidate
                .iter()
                .map(|&m| Experiment::new(VarSet::from_bits(m)))
                .collect();
            out.push(Schedule::new(n, experiments).expect("masks are in range"));
        }
    });
    out
}

fn fill_multisets(
    masks: &[u64],
    depth: usize,
    start: usize,
    current: &mut Vec<u64>,
    emit: &mut impl FnMut(&[u64]),
) {
    if depth == current.len() {
        emit(current);
        return;
    }
    for i in start..masks.len() {
        current[depth] = masks[i];
        fill_multisets(masks, depth + 1, i, current, emit);
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

fn relabel_mask(mask: u64, perm: &[usize]) -> u64 {
    let mut out = 0u64;
    let mut rest = mask;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        out |= 1 << perm[v];
    }
    out
}

/// A sorted schedule is canonical iff no relabeling produces a
/// lexicographically smaller sorted schedule.
fn is_canonical(sorted_masks: &[u64], perms: &[Vec<usize>]) -> bool {
    let mut relabeled = vec![0u64; sorted_masks.len()];
    for perm in perms {
        for (slot, &m) in relabeled.iter_mut().zip(sorted_masks) {
            *slot = relabel_mask(m, perm);
        }
        relabeled.sort_unstable();
        if relabeled.as_slice() < sorted_masks {
            return false;
        }
    }
    true
}

/// Finds the smallest `L <= max_len` such that some non-adaptive schedule of
/// `L` experiments (each intervention at most `kmax` when given) identifies
/// every DAG on `n` vertices, together with one example. `None` when no such
/// length exists within the bound.
pub fn min_schedule_length(
    n: usize,
    max_len: usize,
    kmax: Option<usize>,
) -> Result<Option<(usize, Schedule)>, VerifierError> {
    min_schedule_length_with_cap(n, max_len, kmax, DEFAULT_ENUM_CAP)
}

pub fn min_schedule_length_with_cap(
    n: usize,
    max_len: usize,
    kmax: Option<usize>,
    cap: usize,
) -> Result<Option<(usize, Schedule)>, VerifierError> {
    let dags = enumerate_dags_with_cap(n, cap)?;

    // One response table per intervention set, shared by every candidate
    // schedule: a schedule's signature is just a concatenation of rows.
    let mask_cap = kmax.unwrap_or(n);
    let masks: Vec<u64> = (0..1u64 << n)
        .filter(|m| (m.count_ones() as usize) <= mask_cap)
        .collect();
    let mut responses: HashMap<u64, Vec<Vec<u64>>> = HashMap::new();
    for &m in &masks {
        let e = Experiment::new(VarSet::from_bits(m));
        let rows = dags
            .iter()
            .map(|g| run_experiment(g, e).map(|r| r.packed_bits().to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        responses.insert(m, rows);
    }

    for len in 0..=max_len {
        for schedule in canonical_schedules(n, len, kmax) {
            let mut sigs: Vec<Vec<u64>> = vec![Vec::new(); dags.len()];
            for i in schedule.interventions() {
                for (sig, row) in sigs.iter_mut().zip(&responses[&i.bits()]) {
                    sig.extend_from_slice(row);
                }
            }
            let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(sigs.len());
            if sigs.into_iter().all(|sig| seen.insert(sig)) {
                return Ok(Some((len, schedule)));
            }
        }
    }
    Ok(None)
}

/// Runs both knowledge engines over the schedule and audits them against the
/// true graph: the consistent set must retain the truth after every prefix,
/// pairwise resolutions must agree with the truth, and a coverage-sufficient
/// schedule must end in exact recovery on both engines.
pub fn cross_check_engines(g: &Dag, schedule: &Schedule) -> Result<bool, VerifierError> {
    cross_check_engines_with_cap(g, schedule, DEFAULT_ENUM_CAP)
}

pub fn cross_check_engines_with_cap(
    g: &Dag,
    schedule: &Schedule,
    cap: usize,
) -> Result<bool, VerifierError> {
    let n = g.n();
    let mut state = KnowledgeState::new(n);
    let mut consistent = ConsistentSet::full_with_cap(n, cap)?;

    for (index, &e) in schedule.experiments().iter().enumerate() {
        let outcomes = pair_outcomes(g, e);
        state = update_pairwise(&state, e, &outcomes)
            .map_err(|source| VerifierError::Engine { index, source })?;
        let response = run_experiment(g, e)?;
        consistent = update_consistent_set(&consistent, e, &response)
            .map_err(|source| VerifierError::Engine { index, source })?;

        if !consistent.contains(g) {
            return Ok(false);
        }
        for (x, y) in pairs(n) {
            if let Some(resolved) = state.pair(x, y).singleton() {
                if resolved != PairRelation::of(g, x, y) {
                    return Ok(false);
                }
            }
        }
    }

    if coverage_report(schedule).overall_sufficient {
        let extracted = extract_dag(&state).map_err(|source| VerifierError::Engine {
            index: schedule.len(),
            source,
        })?;
        if extracted != *g || consistent.sole_member() != Some(g) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Maximum n for [`adaptive_min_experiments`]; the game tree branches on
/// every oracle response.
pub const ADAPTIVE_SEARCH_MAX: usize = 3;

/// Worst-case number of experiments needed by the best adaptive policy:
/// minimax over experiment choices and oracle responses, memoized on the set
/// of still-consistent DAGs.
pub fn adaptive_min_experiments(n: usize) -> Result<usize, VerifierError> {
    if n > ADAPTIVE_SEARCH_MAX {
        return Err(VerifierError::AdaptiveTooLarge {
            n,
            max: ADAPTIVE_SEARCH_MAX,
        });
    }
    let dags = enumerate_dags_with_cap(n, DEFAULT_ENUM_CAP)?;
    let masks: Vec<u64> = (0..1u64 << n).collect();
    let mut responses: Vec<Vec<Vec<u64>>> = Vec::with_capacity(masks.len());
    for &m in &masks {
        let e = Experiment::new(VarSet::from_bits(m));
        responses.push(
            dags.iter()
                .map(|g| run_experiment(g, e).map(|r| r.packed_bits().to_vec()))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }

    let mut memo: HashMap<Vec<u32>, usize> = HashMap::new();
    let all: Vec<u32> = (0..dags.len() as u32).collect();
    Ok(solve_adaptive(&all, &responses, &mut memo))
}

fn solve_adaptive(
    members: &[u32],
    responses: &[Vec<Vec<u64>>],
    memo: &mut HashMap<Vec<u32>, usize>,
) -> usize {
    if members.len() <= 1 {
        return 0;
    }
    if let Some(&v) = memo.get(members) {
        return v;
    }
    let mut best = usize::MAX;
    for rows in responses {
        let mut parts: HashMap<&[u64], Vec<u32>> = HashMap::new();
        for &id in members {
            parts.entry(&rows[id as usize]).or_default().push(id);
        }
        if parts.len() <= 1 {
            continue; // this experiment cannot split the current set
        }
        let worst = parts
            .values()
            .map(|part| solve_adaptive(part, responses, memo))
            .max()
            .unwrap();
        best = best.min(1 + worst);
    }
    debug_assert_ne!(best, usize::MAX, "distinct DAGs are always separable");
    memo.insert(members.to_vec(), best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{binary_codeword_schedule, single_intervention_schedule};

    #[test]
    fn binary_schedule_identifies_all_three_vertex_dags() {
        let s = binary_codeword_schedule(3).unwrap();
        let check = identifies_all(&s).unwrap();
        assert!(check.identifies && check.witness.is_none());
    }

    #[test]
    fn null_schedule_confuses_markov_equivalent_graphs() {
        let s = Schedule::new(2, vec![Experiment::null()]).unwrap();
        let check = identifies_all(&s).unwrap();
        assert!(!check.identifies);
        let (a, b) = check.witness.unwrap();
        let table = SignatureTable::build(&s).unwrap();
        // The confused pair is the two orientations of the one-edge graph.
        assert_eq!(table.dag(a).edge_count(), 1);
        assert_eq!(table.dag(b).edge_count(), 1);
    }

    #[test]
    fn one_directional_test_confuses_edge_with_no_edge() {
        let s = Schedule::new(2, vec![Experiment::new(VarSet::singleton(0))]).unwrap();
        let check = identifies_all(&s).unwrap();
        assert!(!check.identifies);
        let (a, b) = check.witness.unwrap();
        let table = SignatureTable::build(&s).unwrap();
        let mut confused = [table.dag(a).edges(), table.dag(b).edges()];
        confused.sort();
        assert_eq!(confused, [vec![], vec![(1, 0)]]);
    }

    #[test]
    fn minimum_lengths_for_two_and_three() {
        let (len, example) = min_schedule_length(2, 3, None).unwrap().unwrap();
        assert_eq!(len, 2);
        assert!(identifies_all(&example).unwrap().identifies);

        let (len, _) = min_schedule_length(3, 3, None).unwrap().unwrap();
        assert_eq!(len, 2);
    }

    #[test]
    fn search_reports_none_when_the_bound_is_too_tight() {
        assert_eq!(min_schedule_length(2, 1, None).unwrap(), None);
    }

    #[test]
    fn canonicalization_prunes_and_preserves() {
        // All 16 singleton-or-less masks at n=4, length 1: only a handful of
        // canonical classes (by intervention size) remain.
        let schedules = canonical_schedules(4, 1, None);
        assert_eq!(schedules.len(), 5); // sizes 0..=4

        // Relabeling any canonical schedule yields a schedule that is not
        // canonical unless it is fixed by the permutation.
        let schedules = canonical_schedules(3, 2, None);
        assert!(!schedules.is_empty());
        for s in &schedules {
            let masks: Vec<u64> = s.interventions().map(|i| i.bits()).collect();
            assert!(is_canonical(&masks, &permutations(3)));
        }
    }

    #[test]
    fn engines_agree_on_the_worked_example() {
        let g = Dag::new(3, &[(1, 0), (0, 2), (1, 2)]).unwrap();
        let s = single_intervention_schedule(3).unwrap();
        assert!(cross_check_engines(&g, &s).unwrap());

        // A single passive experiment cannot orient a complete graph, but the
        // engines must not resolve anything falsely either.
        let complete = Dag::complete(3).unwrap();
        let passive = Schedule::new(3, vec![Experiment::null()]).unwrap();
        assert!(cross_check_engines(&complete, &passive).unwrap());
    }

    #[test]
    fn adaptive_policies_cannot_beat_the_worst_case_at_small_n() {
        assert_eq!(adaptive_min_experiments(2).unwrap(), 2);
        assert_eq!(adaptive_min_experiments(3).unwrap(), 2);
        assert!(matches!(
            adaptive_min_experiments(4),
            Err(VerifierError::AdaptiveTooLarge { n: 4, max: 3 })
        ));
    }

    #[test]
    fn permutation_generator_is_complete() {
        for n in 1..=6 {
            let perms = permutations(n);
            let distinct: std::collections::HashSet<_> = perms.iter().cloned().collect();
            let factorial: usize = (1..=n).product();
            assert_eq!(perms.len(), factorial);
            assert_eq!(distinct.len(), factorial);
        }
    }

    #[test]
    fn signature_tables_are_deterministic() {
        let s = binary_codeword_schedule(3).unwrap();
        let a = SignatureTable::build(&s).unwrap();
        let b = SignatureTable::build(&s).unwrap();
        assert_eq!(a.len(), b.len());
        for id in 0..a.len() as u32 {
            assert_eq!(a.signature(id), b.signature(id));
        }
    }
}
