//! Experiment-schedule construction and analysis: the single-intervention
//! sequence, the binary-codeword construction, the block construction for a
//! capped intervention size, per-pair coverage accounting, and a simple
//! adaptive proposer.

use serde::{Deserialize, Serialize};

use crate::graph::{pair_count, pairs, InterventionSet, VarId, VarSet, MAX_VARS};
use crate::knowledge::KnowledgeState;
use crate::oracle::{classify_pair, Experiment, TestKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("a schedule needs at least 2 variables (got {0})")]
    TooFewVariables(usize),
    #[error("{n} variables exceed the supported maximum of {max}")]
    TooManyVariables { n: usize, max: usize },
    #[error(
        "kmax = {kmax} is not in [1, {n}/2); for kmax >= n/2 use the binary codeword schedule"
    )]
    KmaxOutOfRange { kmax: usize, n: usize },
    #[error("experiment {index} intervenes outside [0, {n})")]
    ExperimentOutOfRange { index: usize, n: usize },
}

/// An ordered list of intervention sets over `n` variables.
///
/// Serializes as `{"n": N, "experiments": [[sorted indices], ...]}` with the
/// null experiment encoded as `[]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct Schedule {
    n: usize,
    experiments: Vec<Experiment>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    n: usize,
    experiments: Vec<Experiment>,
}

impl From<Schedule> for ScheduleRepr {
    fn from(s: Schedule) -> Self {
        ScheduleRepr {
            n: s.n,
            experiments: s.experiments,
        }
    }
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = PlannerError;

    fn try_from(repr: ScheduleRepr) -> Result<Self, PlannerError> {
        Schedule::new(repr.n, repr.experiments)
    }
}

impl Schedule {
    pub fn new(n: usize, experiments: Vec<Experiment>) -> Result<Self, PlannerError> {
        if n > MAX_VARS {
            return Err(PlannerError::TooManyVariables { n, max: MAX_VARS });
        }
        let domain = VarSet::full(n);
        for (index, e) in experiments.iter().enumerate() {
            if !e.intervention.is_subset_of(domain) {
                return Err(PlannerError::ExperimentOutOfRange { index, n });
            }
        }
        Ok(Schedule { n, experiments })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.experiments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiments.is_empty()
    }

    pub fn experiments(&self) -> &[Experiment] {
        &self.experiments
    }

    pub fn interventions(&self) -> impl Iterator<Item = InterventionSet> + '_ {
        self.experiments.iter().map(|e| e.intervention)
    }
}

/// One single-variable intervention per variable except the last:
/// experiments `{0}, {1}, ..., {n-2}`.
pub fn single_intervention_schedule(n: usize) -> Result<Schedule, PlannerError> {
    if n < 2 {
        return Err(PlannerError::TooFewVariables(n));
    }
    let experiments = (0..n - 1)
        .map(|t| Experiment::new(VarSet::singleton(t)))
        .collect();
    Schedule::new(n, experiments)
}

/// The recursive-halving construction, realized as bit-membership codewords.
///
/// Variable `v` carries the codeword `v` over m = ⌈log₂ n⌉ bits; experiment
/// `t` intervenes on exactly the variables whose bit `t` is set. Distinct
/// codewords put a directional test on every pair, and for `n` short of a
/// power of two the all-ones codeword is never assigned, so every pair also
/// picks up an adjacency or opposing directional test for free. At an exact
/// power of two the all-ones variable escapes that argument and one trailing
/// null experiment covers it.
pub fn binary_codeword_schedule(n: usize) -> Result<Schedule, PlannerError> {
    if n < 2 {
        return Err(PlannerError::TooFewVariables(n));
    }
    if n > MAX_VARS {
        return Err(PlannerError::TooManyVariables { n, max: MAX_VARS });
    }
    let m = n.next_power_of_two().ilog2() as usize;
    let mut experiments: Vec<Experiment> = (0..m)
        .map(|t| Experiment::new((0..n).filter(|v| v >> t & 1 == 1).collect()))
        .collect();
    if n.is_power_of_two() {
        experiments.push(Experiment::null());
    }
    Schedule::new(n, experiments)
}

/// Block construction under an intervention-size cap `kmax < n/2`.
///
/// Variables are split into p = ⌈n/kmax⌉ nearly equal contiguous blocks.
/// Phase 1 intervenes on each block but the last, whole, giving every
/// cross-block pair a directional test and every pair an adjacency test.
/// Phase 2 walks the blocks two at a time and runs the codeword construction
/// inside both simultaneously; block-internal codeword membership never
/// exceeds half a block, so a round's intervention stays within `kmax`.
pub fn kmax_schedule(n: usize, kmax: usize) -> Result<Schedule, PlannerError> {
    if n < 2 {
        return Err(PlannerError::TooFewVariables(n));
    }
    if n > MAX_VARS {
        return Err(PlannerError::TooManyVariables { n, max: MAX_VARS });
    }
    if kmax == 0 || 2 * kmax >= n {
        return Err(PlannerError::KmaxOutOfRange { kmax, n });
    }

    let p = n.div_ceil(kmax);
    let base = n / p;
    let extra = n % p;
    let mut blocks: Vec<Vec<VarId>> = Vec::with_capacity(p);
    let mut next = 0;
    for b in 0..p {
        let size = base + usize::from(b < extra);
        blocks.push((next..next + size).collect());
        next += size;
    }
    debug_assert_eq!(next, n);
    debug_assert!(blocks.iter().all(|b| b.len() <= kmax));

    let mut experiments = Vec::new();
    for block in &blocks[..p - 1] {
        experiments.push(Experiment::new(block.iter().copied().collect()));
    }

    let split_rounds = |size: usize| -> usize {
        if size <= 1 {
            0
        } else {
            size.next_power_of_two().ilog2() as usize
        }
    };
    for pair_of_blocks in blocks.chunks(2) {
        let rounds = pair_of_blocks
            .iter()
            .map(|b| split_rounds(b.len()))
            .max()
            .unwrap_or(0);
        for t in 0..rounds {
            let mut members = VarSet::EMPTY;
            for block in pair_of_blocks {
                for (rank, &v) in block.iter().enumerate() {
                    if rank >> t & 1 == 1 {
                        members = members.with(v);
                    }
                }
            }
            debug_assert!(!members.is_empty() && members.len() <= kmax);
            experiments.push(Experiment::new(members));
        }
    }
    Schedule::new(n, experiments)
}

/// Worst-case experiment count of [`binary_codeword_schedule`]:
/// ⌈log₂ n⌉ plus one for exact powers of two.
pub fn binary_schedule_bound(n: usize) -> usize {
    debug_assert!(n >= 2);
    n.next_power_of_two().ilog2() as usize + usize::from(n.is_power_of_two())
}

/// Length bound for [`kmax_schedule`]. The value is exact when `kmax`
/// divides `n` into an even number of blocks, otherwise an upper bound in
/// ceiling form.
pub fn kmax_schedule_bound(n: usize, kmax: usize) -> (usize, bool) {
    debug_assert!(kmax >= 1 && 2 * kmax < n);
    let p = n.div_ceil(kmax);
    let log = if kmax == 1 {
        0
    } else {
        kmax.next_power_of_two().ilog2() as usize
    };
    let exact = n.is_multiple_of(kmax) && p.is_multiple_of(2);
    if exact {
        (p - 1 + n / (2 * kmax) * log, true)
    } else {
        (p - 1 + p.div_ceil(2) * log, false)
    }
}

/// Coverage accounting for one pair: how many tests of each kind the
/// schedule gives it, and whether that meets the two-test criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairCoverage {
    pub x: VarId,
    pub y: VarId,
    pub directional_from_x: usize,
    pub directional_from_y: usize,
    pub adjacency: usize,
    pub zero_information: usize,
    pub sufficient: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub pairs: Vec<PairCoverage>,
    pub overall_sufficient: bool,
}

/// Classifies every (pair, experiment) combination and evaluates the
/// two-test criterion: a pair is settled by two opposing directional tests
/// or by at least one directional plus one adjacency test.
pub fn coverage_report(s: &Schedule) -> CoverageReport {
    let n = s.n();
    let mut report: Vec<PairCoverage> = pairs(n)
        .map(|(x, y)| PairCoverage {
            x,
            y,
            directional_from_x: 0,
            directional_from_y: 0,
            adjacency: 0,
            zero_information: 0,
            sufficient: false,
        })
        .collect();
    for e in s.experiments() {
        for pc in report.iter_mut() {
            match classify_pair(*e, pc.x, pc.y) {
                TestKind::DirectionalFromX => pc.directional_from_x += 1,
                TestKind::DirectionalFromY => pc.directional_from_y += 1,
                TestKind::Adjacency => pc.adjacency += 1,
                TestKind::ZeroInformation => pc.zero_information += 1,
            }
        }
    }
    for pc in report.iter_mut() {
        let opposing = pc.directional_from_x >= 1 && pc.directional_from_y >= 1;
        let directional_plus_adjacency =
            (pc.directional_from_x + pc.directional_from_y >= 1) && pc.adjacency >= 1;
        pc.sufficient = opposing || directional_plus_adjacency;
    }
    let overall_sufficient = report.iter().all(|pc| pc.sufficient);
    CoverageReport {
        n,
        pairs: report,
        overall_sufficient,
    }
}

/// Per-pair record of which test kinds the history already delivered.
#[derive(Clone, Copy, Default)]
struct ReceivedKinds {
    from_x: bool,
    from_y: bool,
    adjacency: bool,
}

impl ReceivedKinds {
    /// Whether one more test of the given kind moves this pair forward:
    /// either it completes the two-test criterion outright, or it is the
    /// pair's first directional test. A pair with no directional test cannot
    /// be settled by adjacency tests alone, so those do not count for it.
    fn needs(self, kind: TestKind) -> bool {
        let no_directional_yet = !self.from_x && !self.from_y;
        match kind {
            TestKind::DirectionalFromX => self.from_y || self.adjacency || no_directional_yet,
            TestKind::DirectionalFromY => self.from_x || self.adjacency || no_directional_yet,
            TestKind::Adjacency => !no_directional_yet,
            TestKind::ZeroInformation => false,
        }
    }
}

/// Greedy proposer for the next intervention set: maximize the number of
/// unresolved pairs that would receive a test kind they still need, ties
/// broken by lowest member index, then smaller set, then member order.
/// Returns the empty set when no unresolved pair can benefit.
///
/// Candidates are scored exhaustively up to 16 variables; beyond that the
/// set is grown one best variable at a time.
pub fn adaptive_next(state: &KnowledgeState, kmax: Option<usize>) -> InterventionSet {
    let n = state.n();
    let cap = kmax.unwrap_or(n).min(n);

    let mut received = vec![ReceivedKinds::default(); pair_count(n)];
    for e in state.history() {
        for (idx, (x, y)) in pairs(n).enumerate() {
            match classify_pair(*e, x, y) {
                TestKind::DirectionalFromX => received[idx].from_x = true,
                TestKind::DirectionalFromY => received[idx].from_y = true,
                TestKind::Adjacency => received[idx].adjacency = true,
                TestKind::ZeroInformation => {}
            }
        }
    }
    let open_pairs: Vec<(usize, VarId, VarId)> = pairs(n)
        .enumerate()
        .filter(|&(_, (x, y))| !state.pair(x, y).is_singleton())
        .map(|(idx, (x, y))| (idx, x, y))
        .collect();
    if open_pairs.is_empty() {
        return VarSet::EMPTY;
    }

    let score = |candidate: VarSet| -> usize {
        open_pairs
            .iter()
            .filter(|&&(idx, x, y)| {
                received[idx].needs(classify_pair(Experiment::new(candidate), x, y))
            })
            .count()
    };

    let mut best = VarSet::EMPTY;
    let mut best_score = 0usize;
    let consider = |candidate: VarSet, s: usize, best: &mut VarSet, best_score: &mut usize| {
        if s > *best_score || (s == *best_score && s > 0 && prefer(candidate, *best)) {
            *best = candidate;
            *best_score = s;
        }
    };

    if n <= 16 {
        for bits in 0u64..(1 << n) {
            let candidate = VarSet::from_bits(bits);
            if candidate.len() > cap {
                continue;
            }
            let s = score(candidate);
            consider(candidate, s, &mut best, &mut best_score);
        }
    } else {
        let mut current = VarSet::EMPTY;
        let mut current_score = 0usize;
        while current.len() < cap {
            let mut step_best: Option<(VarSet, usize)> = None;
            for v in 0..n {
                if current.contains(v) {
                    continue;
                }
                let candidate = current.with(v);
                let s = score(candidate);
                let better = match step_best {
                    None => true,
                    Some((b, bs)) => s > bs || (s == bs && prefer(candidate, b)),
                };
                if better {
                    step_best = Some((candidate, s));
                }
            }
            match step_best {
                Some((candidate, s)) if s > current_score => {
                    current = candidate;
                    current_score = s;
                }
                _ => break,
            }
        }
        best = current;
        best_score = current_score;
    }

    if best_score == 0 {
        VarSet::EMPTY
    } else {
        best
    }
}

/// Tie-break preference: lowest member index, then smaller cardinality,
/// then lexicographically earlier member list.
fn prefer(candidate: VarSet, incumbent: VarSet) -> bool {
    if incumbent.is_empty() {
        return !candidate.is_empty();
    }
    if candidate.is_empty() {
        return false;
    }
    let key = |s: VarSet| (s.iter().next().unwrap(), s.len(), s.to_vec());
    key(candidate) < key(incumbent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{update_pairwise, KnowledgeState};
    use crate::oracle::pair_outcomes;
    use crate::Dag;

    fn sets(s: &Schedule) -> Vec<Vec<VarId>> {
        s.interventions().map(|i| i.to_vec()).collect()
    }

    #[test]
    fn single_intervention_lengths_and_content() {
        assert_eq!(sets(&single_intervention_schedule(3).unwrap()), vec![vec![0], vec![1]]);
        assert_eq!(sets(&single_intervention_schedule(2).unwrap()), vec![vec![0]]);
        assert_eq!(single_intervention_schedule(5).unwrap().len(), 4);
        assert!(single_intervention_schedule(1).is_err());
    }

    #[test]
    fn binary_codeword_schedule_for_eight() {
        let s = binary_codeword_schedule(8).unwrap();
        assert_eq!(
            sets(&s),
            vec![
                vec![1, 3, 5, 7],
                vec![2, 3, 6, 7],
                vec![4, 5, 6, 7],
                vec![],
            ]
        );
        // The all-ones codeword is intervened in every non-null experiment.
        assert!(s.interventions().take(3).all(|i| i.contains(7)));
    }

    #[test]
    fn binary_codeword_schedule_for_seven_avoids_all_ones() {
        let s = binary_codeword_schedule(7).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.interventions().all(|i| !i.is_empty()));
        for v in 0..7 {
            assert!(
                !s.interventions().all(|i| i.contains(v)),
                "variable {v} must not be intervened in every experiment"
            );
        }
    }

    #[test]
    fn binary_codeword_schedule_for_two() {
        // Codeword 1 belongs to variable 1, so the one intervention lands
        // there; the trailing null experiment covers the power-of-two case.
        let s = binary_codeword_schedule(2).unwrap();
        assert_eq!(sets(&s), vec![vec![1], vec![]]);
        assert_eq!(binary_schedule_bound(2), 2);
    }

    #[test]
    fn kmax_schedule_matches_the_block_formula() {
        let s = kmax_schedule(8, 2).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(
            sets(&s),
            vec![
                vec![0, 1],
                vec![2, 3],
                vec![4, 5],
                vec![1, 3],
                vec![5, 7],
            ]
        );
        assert_eq!(kmax_schedule(16, 4).unwrap().len(), 7);
        assert_eq!(kmax_schedule_bound(16, 4), (7, true));

        let twelve = kmax_schedule(12, 3).unwrap();
        let (bound, exact) = kmax_schedule_bound(12, 3);
        assert_eq!(bound, 7);
        assert!(exact);
        assert!(twelve.len() <= 7);
    }

    #[test]
    fn kmax_schedule_rejects_large_caps() {
        assert_eq!(
            kmax_schedule(8, 4),
            Err(PlannerError::KmaxOutOfRange { kmax: 4, n: 8 })
        );
        assert!(kmax_schedule(8, 0).is_err());
        assert!(kmax_schedule(4, 1).is_ok());
    }

    #[test]
    fn coverage_judgments() {
        assert!(coverage_report(&binary_codeword_schedule(8).unwrap()).overall_sufficient);

        let lone = Schedule::new(2, vec![Experiment::new(VarSet::singleton(0))]).unwrap();
        let report = coverage_report(&lone);
        assert!(!report.overall_sufficient);
        assert_eq!(report.pairs[0].directional_from_x, 1);
        assert_eq!(report.pairs[0].adjacency, 0);

        let nulls = Schedule::new(3, vec![Experiment::null(), Experiment::null()]).unwrap();
        assert!(!coverage_report(&nulls).overall_sufficient);
    }

    #[test]
    fn adaptive_proposer_follows_the_pair_needs() {
        // One directional test from 1 already seen; a test from 0 or an
        // adjacency test finishes the pair, and {0} wins the tie-break.
        let g = Dag::empty(2).unwrap();
        let e = Experiment::new(VarSet::singleton(1));
        let state = update_pairwise(&KnowledgeState::new(2), e, &pair_outcomes(&g, e)).unwrap();
        assert_eq!(adaptive_next(&state, None), VarSet::singleton(0));

        // Fully resolved: nothing to gain.
        let resolved = {
            let g = Dag::new(3, &[(1, 0), (0, 2), (1, 2)]).unwrap();
            let mut st = KnowledgeState::new(3);
            for members in [[0], [1]] {
                let e = Experiment::new(members.into_iter().collect());
                st = update_pairwise(&st, e, &pair_outcomes(&g, e)).unwrap();
            }
            st
        };
        assert!(resolved.resolved());
        assert_eq!(adaptive_next(&resolved, None), VarSet::EMPTY);

        // Fresh state: directional tests dominate, so a 2-element set wins
        // under kmax = 2 and the tie-break picks {0, 1}.
        let fresh = KnowledgeState::new(4);
        let pick = adaptive_next(&fresh, Some(2));
        assert_eq!(pick.len(), 2);
        assert_eq!(pick, [0usize, 1].into_iter().collect());
    }

    #[test]
    fn schedule_json_is_stable() {
        let s = binary_codeword_schedule(3).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"n":3,"experiments":[[1],[2]]}"#);
        let back: Schedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn schedule_rejects_out_of_range_members() {
        let bad = r#"{"n":2,"experiments":[[0],[2]]}"#;
        assert!(serde_json::from_str::<Schedule>(bad).is_err());
    }
}
