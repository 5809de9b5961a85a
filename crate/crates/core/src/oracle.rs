//! The experiment oracle: given a true DAG and an intervention set, produce
//! every conditional-independence fact of the manipulated graph, plus the
//! per-pair test-kind classification and verdicts.

use serde::{Deserialize, Serialize};

use crate::graph::{pair_count, pair_index, pairs, Dag, GraphError, InterventionSet, VarId, VarSet};

/// Default cap on the number of variables for full oracle responses. A
/// response stores one bit per (pair, conditioning set): C(n,2) · 2^(n-2)
/// statements, which at n = 16 is already 120 · 2^14.
pub const DEFAULT_RESPONSE_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("full oracle response for n = {n} exceeds the cap of {cap} variables; use pair outcomes instead")]
    ResponseCap { n: usize, cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One experiment: the choice of an intervention set (possibly empty).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Experiment {
    pub intervention: InterventionSet,
}

impl Experiment {
    pub fn new(intervention: InterventionSet) -> Self {
        Experiment { intervention }
    }

    /// Passive observation.
    pub fn null() -> Self {
        Experiment {
            intervention: VarSet::EMPTY,
        }
    }

    pub fn is_null(&self) -> bool {
        self.intervention.is_empty()
    }
}

/// A single conditional-independence statement about a pair `(x, y)`, `x < y`,
/// given a conditioning set `z` disjoint from the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CiStatement {
    pub x: VarId,
    pub y: VarId,
    pub z: VarSet,
    pub independent: bool,
}

/// The complete set of conditional-independence statements of a manipulated
/// graph: exactly one statement per pair and conditioning set, bit-packed.
///
/// Two responses compare equal iff they cover the same variable count, the
/// same experiment, and agree on every statement.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OracleResponse {
    experiment: Experiment,
    n: usize,
    bits: Vec<u64>,
}

impl OracleResponse {
    pub fn experiment(&self) -> Experiment {
        self.experiment
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored statements: C(n,2) · 2^(n-2).
    pub fn statement_count(&self) -> usize {
        pair_count(self.n) * cond_set_count(self.n)
    }

    /// Looks up the stored verdict for `x ⊥ y | z`. Pair order is normalized.
    pub fn independent(&self, x: VarId, y: VarId, z: VarSet) -> bool {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        debug_assert!(hi < self.n && !z.contains(lo) && !z.contains(hi));
        let pos =
            pair_index(self.n, lo, hi) * cond_set_count(self.n) + cond_index(self.n, lo, hi, z);
        self.bits[pos / 64] & (1 << (pos % 64)) != 0
    }

    /// All statements in storage order (pair-major, conditioning index minor).
    pub fn statements(&self) -> impl Iterator<Item = CiStatement> + '_ {
        let n = self.n;
        pairs(n).flat_map(move |(x, y)| {
            (0..cond_set_count(n)).map(move |k| {
                let z = cond_set_from_index(n, x, y, k);
                CiStatement {
                    x,
                    y,
                    z,
                    independent: self.independent(x, y, z),
                }
            })
        })
    }

    /// Raw packed statement bits; pair-major order. Used for signatures.
    pub fn packed_bits(&self) -> &[u64] {
        &self.bits
    }

    /// True iff `x` and `y` stay dependent under every conditioning set, which
    /// for a DAG oracle is equivalent to adjacency in the manipulated graph.
    pub fn dependent_under_all(&self, x: VarId, y: VarId) -> bool {
        let n = self.n;
        (0..cond_set_count(n)).all(|k| !self.independent(x, y, cond_set_from_index(n, x, y, k)))
    }
}

impl std::fmt::Debug for OracleResponse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let indep: Vec<CiStatement> = self.statements().filter(|s| s.independent).collect();
        write!(
            f,
            "OracleResponse(n={}, i={:?}, independencies={indep:?})",
            self.n, self.experiment.intervention
        )
    }
}

/// Number of conditioning sets per pair: 2^(n-2).
pub fn cond_set_count(n: usize) -> usize {
    1usize << n.saturating_sub(2)
}

/// The k-th subset of `V \ {x, y}` (bit i of `k` toggles the i-th remaining
/// variable in ascending order).
pub fn cond_set_from_index(n: usize, x: VarId, y: VarId, k: usize) -> VarSet {
    let mut z = VarSet::EMPTY;
    let mut bit = 0;
    for v in 0..n {
        if v == x || v == y {
            continue;
        }
        if k & (1 << bit) != 0 {
            z = z.with(v);
        }
        bit += 1;
    }
    z
}

/// Inverse of [`cond_set_from_index`].
pub fn cond_index(n: usize, x: VarId, y: VarId, z: VarSet) -> usize {
    let mut k = 0;
    let mut bit = 0;
    for v in 0..n {
        if v == x || v == y {
            continue;
        }
        if z.contains(v) {
            k |= 1 << bit;
        }
        bit += 1;
    }
    k
}

/// Runs one experiment against the true graph: manipulates, then evaluates
/// d-separation for every pair under every conditioning set.
pub fn run_experiment(g: &Dag, e: Experiment) -> Result<OracleResponse, OracleError> {
    run_experiment_with_cap(g, e, DEFAULT_RESPONSE_CAP)
}

/// [`run_experiment`] with an explicit response-size cap.
pub fn run_experiment_with_cap(
    g: &Dag,
    e: Experiment,
    cap: usize,
) -> Result<OracleResponse, OracleError> {
    let n = g.n();
    if n > cap {
        return Err(OracleError::ResponseCap { n, cap });
    }
    let manipulated = g.manipulated(e.intervention);
    let stride = cond_set_count(n);
    let total_bits = pair_count(n) * stride;
    let mut bits = vec![0u64; total_bits.div_ceil(64).max(1)];
    for (p, (x, y)) in pairs(n).enumerate() {
        for k in 0..stride {
            let z = cond_set_from_index(n, x, y, k);
            if manipulated.d_separated(x, y, z)? {
                let pos = p * stride + k;
                bits[pos / 64] |= 1 << (pos % 64);
            }
        }
    }
    Ok(OracleResponse {
        experiment: e,
        n,
        bits,
    })
}

/// What an experiment can reveal about a pair, by intervention membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    /// Exactly `x` intervened: reveals presence/absence of the edge x→y.
    #[serde(rename = "directional-from-x")]
    DirectionalFromX,
    /// Exactly `y` intervened: reveals presence/absence of the edge y→x.
    #[serde(rename = "directional-from-y")]
    DirectionalFromY,
    /// Neither intervened: reveals whether the pair is adjacent.
    #[serde(rename = "adjacency")]
    Adjacency,
    /// Both intervened: reveals nothing about the pair.
    #[serde(rename = "zero-information")]
    ZeroInformation,
}

/// The finding an experiment yields for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "edge-x-to-y")]
    EdgeXToY,
    #[serde(rename = "edge-y-to-x")]
    EdgeYToX,
    #[serde(rename = "no-edge-from-x")]
    NoEdgeFromX,
    #[serde(rename = "no-edge-from-y")]
    NoEdgeFromY,
    #[serde(rename = "adjacent")]
    Adjacent,
    #[serde(rename = "not-adjacent")]
    NotAdjacent,
    #[serde(rename = "none")]
    Uninformative,
}

/// Test kind and verdict for one unordered pair under one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub x: VarId,
    pub y: VarId,
    pub kind: TestKind,
    pub verdict: Verdict,
}

/// Classifies the test kind for a pair from intervention membership alone.
pub fn classify_pair(e: Experiment, x: VarId, y: VarId) -> TestKind {
    match (e.intervention.contains(x), e.intervention.contains(y)) {
        (true, false) => TestKind::DirectionalFromX,
        (false, true) => TestKind::DirectionalFromY,
        (false, false) => TestKind::Adjacency,
        (true, true) => TestKind::ZeroInformation,
    }
}

/// The per-pair outcomes of an experiment, one entry per unordered pair in
/// lexicographic order. Linear in the number of pairs; works for any `n`.
///
/// A directional test from the intervened variable reads the edge straight
/// off the manipulated graph: the pair stays adjacent there iff the outgoing
/// edge exists, and adjacency is exactly "dependent under every conditioning
/// set". An adjacency test reads adjacency in the true graph, which equals
/// adjacency in the manipulated graph for pairs outside the intervention set.
pub fn pair_outcomes(g: &Dag, e: Experiment) -> Vec<PairOutcome> {
    let manipulated = g.manipulated(e.intervention);
    pairs(g.n())
        .map(|(x, y)| {
            let kind = classify_pair(e, x, y);
            let verdict = match kind {
                TestKind::DirectionalFromX => {
                    if manipulated.adjacent(x, y) {
                        Verdict::EdgeXToY
                    } else {
                        Verdict::NoEdgeFromX
                    }
                }
                TestKind::DirectionalFromY => {
                    if manipulated.adjacent(x, y) {
                        Verdict::EdgeYToX
                    } else {
                        Verdict::NoEdgeFromY
                    }
                }
                TestKind::Adjacency => {
                    if g.adjacent(x, y) {
                        Verdict::Adjacent
                    } else {
                        Verdict::NotAdjacent
                    }
                }
                TestKind::ZeroInformation => Verdict::Uninformative,
            };
            PairOutcome { x, y, kind, verdict }
        })
        .collect()
}

/// Per-kind pair counts for an experiment intervening on `k` of `n`
/// variables: `(k(n-k), C(n-k,2), C(k,2))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TestKindCounts {
    pub directional: usize,
    pub adjacency: usize,
    pub zero_information: usize,
}

pub fn count_test_kinds(n: usize, k: usize) -> TestKindCounts {
    assert!(k <= n, "intervention size {k} exceeds variable count {n}");
    TestKindCounts {
        directional: k * (n - k),
        adjacency: pair_count(n - k),
        zero_information: pair_count(k),
    }
}
