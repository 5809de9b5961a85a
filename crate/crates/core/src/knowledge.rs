//! Accumulation of experimental findings, two ways: a per-pair possibility
//! lattice that scales with the number of pairs, and an exact tracker of the
//! set of DAGs consistent with every response seen so far. The exact engine
//! is enumeration-bound; the pairwise engine works at any size but only uses
//! pair-level information (plus the optional collider rule).

use std::sync::Arc;

use crate::graph::{pair_index, pairs, Dag, GraphError, VarId};
use crate::oracle::{
    run_experiment, Experiment, OracleError, OracleResponse, PairOutcome, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KnowledgeError {
    #[error("contradictory evidence for pair ({x}, {y}): no possibility remains")]
    Contradiction { x: VarId, y: VarId },
    #[error("response is consistent with no DAG on {n} variables")]
    EmptyConsistentSet { n: usize },
    #[error("cannot extract a graph: unresolved pairs {pairs:?}")]
    Unresolved { pairs: Vec<(VarId, VarId)> },
    #[error("resolved pair states assemble into a cyclic graph")]
    ResolutionCyclic,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// One of the three ways a pair `(x, y)`, `x < y`, can be related.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    EdgeXY,
    EdgeYX,
    NoEdge,
}

impl PairRelation {
    const ALL: [PairRelation; 3] = [
        PairRelation::EdgeXY,
        PairRelation::EdgeYX,
        PairRelation::NoEdge,
    ];

    fn bit(self) -> u8 {
        match self {
            PairRelation::EdgeXY => 0b001,
            PairRelation::EdgeYX => 0b010,
            PairRelation::NoEdge => 0b100,
        }
    }

    /// The true relation of the pair `(x, y)` in `g`.
    pub fn of(g: &Dag, x: VarId, y: VarId) -> Self {
        if g.has_edge(x, y) {
            PairRelation::EdgeXY
        } else if g.has_edge(y, x) {
            PairRelation::EdgeYX
        } else {
            PairRelation::NoEdge
        }
    }
}

/// The nonempty set of relations still possible for a pair.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PairState(u8);

impl PairState {
    /// Nothing known yet: all three relations possible.
    pub fn unknown() -> Self {
        PairState(0b111)
    }

    pub fn exactly(r: PairRelation) -> Self {
        PairState(r.bit())
    }

    pub fn of_set(relations: &[PairRelation]) -> Self {
        PairState(relations.iter().fold(0, |acc, r| acc | r.bit()))
    }

    pub fn contains(self, r: PairRelation) -> bool {
        self.0 & r.bit() != 0
    }

    // A valid state is never empty, so there is no `is_empty` counterpart.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_singleton(self) -> bool {
        self.len() == 1
    }

    pub fn singleton(self) -> Option<PairRelation> {
        if self.is_singleton() {
            PairRelation::ALL.into_iter().find(|r| self.contains(*r))
        } else {
            None
        }
    }

    pub fn possibilities(self) -> Vec<PairRelation> {
        PairRelation::ALL
            .into_iter()
            .filter(|r| self.contains(*r))
            .collect()
    }

    fn intersect(self, other: PairState) -> Option<PairState> {
        let bits = self.0 & other.0;
        (bits != 0).then_some(PairState(bits))
    }
}

impl std::fmt::Debug for PairState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.possibilities()).finish()
    }
}

/// Per-pair knowledge plus the experiment history that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeState {
    n: usize,
    pair_states: Vec<PairState>,
    history: Vec<Experiment>,
}

impl KnowledgeState {
    pub fn new(n: usize) -> Self {
        KnowledgeState {
            n,
            pair_states: vec![PairState::unknown(); crate::graph::pair_count(n)],
            history: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pair(&self, x: VarId, y: VarId) -> PairState {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        self.pair_states[pair_index(self.n, lo, hi)]
    }

    pub fn history(&self) -> &[Experiment] {
        &self.history
    }

    /// True iff every pair is down to a single possibility.
    pub fn resolved(&self) -> bool {
        self.pair_states.iter().all(|p| p.is_singleton())
    }

    pub fn unresolved_pairs(&self) -> Vec<(VarId, VarId)> {
        pairs(self.n)
            .filter(|&(x, y)| !self.pair(x, y).is_singleton())
            .collect()
    }

    fn constrain(
        &mut self,
        x: VarId,
        y: VarId,
        allowed: PairState,
    ) -> Result<(), KnowledgeError> {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        let idx = pair_index(self.n, lo, hi);
        match self.pair_states[idx].intersect(allowed) {
            Some(next) => {
                self.pair_states[idx] = next;
                Ok(())
            }
            None => Err(KnowledgeError::Contradiction { x: lo, y: hi }),
        }
    }
}

fn verdict_implications(v: Verdict) -> PairState {
    use PairRelation::*;
    match v {
        Verdict::EdgeXToY => PairState::exactly(EdgeXY),
        Verdict::EdgeYToX => PairState::exactly(EdgeYX),
        Verdict::NoEdgeFromX => PairState::of_set(&[EdgeYX, NoEdge]),
        Verdict::NoEdgeFromY => PairState::of_set(&[EdgeXY, NoEdge]),
        Verdict::Adjacent => PairState::of_set(&[EdgeXY, EdgeYX]),
        Verdict::NotAdjacent => PairState::exactly(NoEdge),
        Verdict::Uninformative => PairState::unknown(),
    }
}

/// Folds one experiment's pair outcomes into the lattice and appends the
/// experiment to the history. An empty intersection means the outcomes did
/// not all come from one fixed DAG and is reported as a contradiction.
pub fn update_pairwise(
    state: &KnowledgeState,
    e: Experiment,
    outcomes: &[PairOutcome],
) -> Result<KnowledgeState, KnowledgeError> {
    let mut next = state.clone();
    for o in outcomes {
        next.constrain(o.x, o.y, verdict_implications(o.verdict))?;
    }
    next.history.push(e);
    Ok(next)
}

/// Orients edges into unshielded colliders found in a full oracle response.
///
/// For a triple of non-intervened variables (a, b, c) with a, c known
/// non-adjacent and both known adjacent to b, dependence of a and c appearing
/// only once b enters the conditioning set pins both edges as pointing into
/// b. Refines pair states only; the history is untouched.
pub fn apply_collider_rule(
    state: &KnowledgeState,
    response: &OracleResponse,
) -> Result<KnowledgeState, KnowledgeError> {
    let n = state.n();
    debug_assert_eq!(n, response.n());
    let intervened = response.experiment().intervention;
    let mut next = state.clone();

    let known_adjacent =
        |s: &KnowledgeState, x: VarId, y: VarId| !s.pair(x, y).contains(PairRelation::NoEdge);
    let known_nonadjacent =
        |s: &KnowledgeState, x: VarId, y: VarId| s.pair(x, y) == PairState::exactly(PairRelation::NoEdge);

    for (a, c) in pairs(n) {
        if intervened.contains(a) || intervened.contains(c) {
            continue;
        }
        if !known_nonadjacent(&next, a, c) {
            continue;
        }
        for b in 0..n {
            if b == a || b == c || intervened.contains(b) {
                continue;
            }
            if !known_adjacent(&next, a, b) || !known_adjacent(&next, c, b) {
                continue;
            }
            let collider_signature = (0..crate::oracle::cond_set_count(n)).any(|k| {
                let z = crate::oracle::cond_set_from_index(n, a, c, k);
                !z.contains(b)
                    && response.independent(a, c, z)
                    && !response.independent(a, c, z.with(b))
            });
            if collider_signature {
                next.constrain(a, b, toward(a, b))?;
                next.constrain(c, b, toward(c, b))?;
            }
        }
    }
    Ok(next)
}

/// The pair-state possibility meaning "edge from `from` into `to`".
fn toward(from: VarId, to: VarId) -> PairState {
    if from < to {
        PairState::exactly(PairRelation::EdgeXY)
    } else {
        PairState::exactly(PairRelation::EdgeYX)
    }
}

/// Materializes the answer once every pair is resolved.
pub fn extract_dag(state: &KnowledgeState) -> Result<Dag, KnowledgeError> {
    let unresolved = state.unresolved_pairs();
    if !unresolved.is_empty() {
        return Err(KnowledgeError::Unresolved { pairs: unresolved });
    }
    let mut edges = Vec::new();
    for (x, y) in pairs(state.n()) {
        match state.pair(x, y).singleton().expect("resolved") {
            PairRelation::EdgeXY => edges.push((x, y)),
            PairRelation::EdgeYX => edges.push((y, x)),
            PairRelation::NoEdge => {}
        }
    }
    Dag::new(state.n(), &edges).map_err(|e| match e {
        GraphError::Cyclic => KnowledgeError::ResolutionCyclic,
        other => panic!("resolved pair states produced an invalid edge list: {other}"),
    })
}

/// The set of DAGs on `n` vertices consistent with every response seen so
/// far. Identifiers index the [`crate::graph::enumerate_dags`] order.
#[derive(Clone)]
pub struct ConsistentSet {
    n: usize,
    universe: Arc<Vec<Dag>>,
    members: Vec<u32>,
}

impl ConsistentSet {
    /// Starts from the full hypothesis space.
    pub fn full(n: usize) -> Result<Self, GraphError> {
        Self::full_with_cap(n, crate::graph::DEFAULT_ENUM_CAP)
    }

    pub fn full_with_cap(n: usize, cap: usize) -> Result<Self, GraphError> {
        let universe = Arc::new(crate::graph::enumerate_dags_with_cap(n, cap)?);
        let members = (0..universe.len() as u32).collect();
        Ok(ConsistentSet {
            n,
            universe,
            members,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Identifiers of the surviving DAGs, ascending.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn dag(&self, id: u32) -> &Dag {
        &self.universe[id as usize]
    }

    pub fn universe_len(&self) -> usize {
        self.universe.len()
    }

    /// Membership by graph equality.
    pub fn contains(&self, g: &Dag) -> bool {
        self.members.iter().any(|&id| self.dag(id) == g)
    }

    /// The unique survivor, if the set is down to one.
    pub fn sole_member(&self) -> Option<&Dag> {
        match self.members[..] {
            [id] => Some(self.dag(id)),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Dag> {
        self.members.iter().map(|&id| self.dag(id))
    }
}

impl std::fmt::Debug for ConsistentSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ConsistentSet(n={}, {}/{} DAGs)",
            self.n,
            self.members.len(),
            self.universe.len()
        )
    }
}

/// Keeps exactly the candidates whose own oracle response to `e` equals the
/// observed one. An empty result means the response came from no DAG on `n`
/// vertices and is reported as an error, not a state.
pub fn update_consistent_set(
    set: &ConsistentSet,
    e: Experiment,
    response: &OracleResponse,
) -> Result<ConsistentSet, KnowledgeError> {
    debug_assert_eq!(set.n(), response.n());
    let mut members = Vec::with_capacity(set.members.len());
    for &id in &set.members {
        if run_experiment(set.dag(id), e)? == *response {
            members.push(id);
        }
    }
    if members.is_empty() {
        return Err(KnowledgeError::EmptyConsistentSet { n: set.n });
    }
    Ok(ConsistentSet {
        n: set.n,
        universe: Arc::clone(&set.universe),
        members,
    })
}
