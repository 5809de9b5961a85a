//! DAG representation, enumeration, manipulated-graph construction and
//! d-separation. Everything downstream (oracle, knowledge tracking, schedule
//! verification) is built on the types in this module.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Hard limit on the number of variables: sets are stored as `u64` bitmasks.
pub const MAX_VARS: usize = 64;

/// Default cap for exhaustive DAG enumeration (29,281 DAGs at n = 5).
pub const DEFAULT_ENUM_CAP: usize = 5;

/// Variable index in `[0, n)`.
pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph must have at least one variable")]
    ZeroVariables,
    #[error("graph on {n} variables exceeds the supported maximum of {max}")]
    TooManyVariables { n: usize, max: usize },
    #[error("variable {index} out of range for a graph on {n} variables")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop on variable {0}")]
    SelfLoop(VarId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VarId, VarId),
    #[error("edge set contains a cycle")]
    Cyclic,
    #[error("n = {n} exceeds the DAG enumeration cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },
    #[error("d-separation query: x and y must be distinct (got {0})")]
    IdenticalPair(VarId),
    #[error("d-separation query: {0} appears in both the pair and the conditioning set")]
    PairInConditioningSet(VarId),
}

/// A set of variables, stored as a bitmask. Doubles as an intervention set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VarSet(u64);

/// The set of simultaneously randomized variables; empty means passive
/// observation.
pub type InterventionSet = VarSet;

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn singleton(v: VarId) -> Self {
        debug_assert!(v < MAX_VARS);
        VarSet(1 << v)
    }

    /// All of `0..n`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_VARS);
        if n == MAX_VARS {
            VarSet(u64::MAX)
        } else {
            VarSet((1u64 << n) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> Self {
        VarSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, v: VarId) -> bool {
        v < MAX_VARS && self.0 & (1 << v) != 0
    }

    pub fn with(self, v: VarId) -> Self {
        debug_assert!(v < MAX_VARS);
        VarSet(self.0 | (1 << v))
    }

    pub fn without(self, v: VarId) -> Self {
        debug_assert!(v < MAX_VARS);
        VarSet(self.0 & !(1 << v))
    }

    pub fn union(self, other: Self) -> Self {
        VarSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        VarSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        VarSet(self.0 & !other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = VarId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let v = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(v)
            }
        })
    }

    pub fn to_vec(self) -> Vec<VarId> {
        self.iter().collect()
    }
}

impl FromIterator<VarId> for VarSet {
    fn from_iter<I: IntoIterator<Item = VarId>>(iter: I) -> Self {
        let mut bits = 0u64;
        for v in iter {
            assert!(v < MAX_VARS, "variable {v} out of range");
            bits |= 1 << v;
        }
        VarSet(bits)
    }
}

impl std::fmt::Debug for VarSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for VarSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for VarSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let members = Vec::<usize>::deserialize(deserializer)?;
        let mut bits = 0u64;
        for v in members {
            if v >= MAX_VARS {
                return Err(D::Error::custom(format!(
                    "variable {v} out of range (max {MAX_VARS})"
                )));
            }
            bits |= 1 << v;
        }
        Ok(VarSet(bits))
    }
}

/// A directed acyclic graph on `n` indexed variables.
///
/// Stored as per-child parent masks; acyclicity is checked on every
/// construction path, including [`Dag::manipulated`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    n: usize,
    parents: Vec<u64>,
}

impl Dag {
    /// Validates and builds a DAG from an explicit edge list.
    pub fn new(n: usize, edges: &[(VarId, VarId)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::ZeroVariables);
        }
        if n > MAX_VARS {
            return Err(GraphError::TooManyVariables { n, max: MAX_VARS });
        }
        let mut parents = vec![0u64; n];
        for &(p, c) in edges {
            if p >= n {
                return Err(GraphError::IndexOutOfRange { index: p, n });
            }
            if c >= n {
                return Err(GraphError::IndexOutOfRange { index: c, n });
            }
            if p == c {
                return Err(GraphError::SelfLoop(p));
            }
            if parents[c] & (1 << p) != 0 {
                return Err(GraphError::DuplicateEdge(p, c));
            }
            parents[c] |= 1 << p;
        }
        if !edges_acyclic(n, &parents) {
            return Err(GraphError::Cyclic);
        }
        Ok(Dag { n, parents })
    }

    /// The empty graph on `n` vertices.
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Dag::new(n, &[])
    }

    /// The complete DAG on `n` vertices oriented along the index order.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for x in 0..n {
            for y in x + 1..n {
                edges.push((x, y));
            }
        }
        Dag::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parents_of(&self, v: VarId) -> VarSet {
        VarSet(self.parents[v])
    }

    pub fn children_of(&self, v: VarId) -> VarSet {
        let mut bits = 0u64;
        for c in 0..self.n {
            if self.parents[c] & (1 << v) != 0 {
                bits |= 1 << c;
            }
        }
        VarSet(bits)
    }

    pub fn has_edge(&self, p: VarId, c: VarId) -> bool {
        c < self.n && p < self.n && self.parents[c] & (1 << p) != 0
    }

    /// True iff there is an edge between `x` and `y` in either direction.
    pub fn adjacent(&self, x: VarId, y: VarId) -> bool {
        self.has_edge(x, y) || self.has_edge(y, x)
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// True iff every pair of vertices is adjacent.
    pub fn is_complete(&self) -> bool {
        self.edge_count() == self.n * (self.n - 1) / 2
    }

    /// Edges as `(parent, child)` pairs, sorted by parent then child.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for c in 0..self.n {
            for p in VarSet(self.parents[c]).iter() {
                out.push((p, c));
            }
        }
        out.sort_unstable();
        out
    }

    /// The manipulated graph: every edge whose child is intervened is removed.
    ///
    /// Panics if `intervention` mentions variables outside the graph.
    pub fn manipulated(&self, intervention: InterventionSet) -> Dag {
        assert!(
            intervention.is_subset_of(VarSet::full(self.n)),
            "intervention set {intervention:?} invalid for a graph on {} variables",
            self.n
        );
        let mut parents = self.parents.clone();
        for v in intervention.iter() {
            parents[v] = 0;
        }
        debug_assert!(edges_acyclic(self.n, &parents));
        Dag { n: self.n, parents }
    }

    /// Standard d-separation: true iff every path between `x` and `y` is
    /// blocked by `z`. Implemented by reachability in the moralized ancestral
    /// graph of `{x, y} ∪ z`.
    pub fn d_separated(&self, x: VarId, y: VarId, z: VarSet) -> Result<bool, GraphError> {
        let n = self.n;
        for v in [x, y] {
            if v >= n {
                return Err(GraphError::IndexOutOfRange { index: v, n });
            }
        }
        if let Some(v) = z.iter().find(|&v| v >= n) {
            return Err(GraphError::IndexOutOfRange { index: v, n });
        }
        if x == y {
            return Err(GraphError::IdenticalPair(x));
        }
        if z.contains(x) {
            return Err(GraphError::PairInConditioningSet(x));
        }
        if z.contains(y) {
            return Err(GraphError::PairInConditioningSet(y));
        }

        let relevant = self.ancestral_closure(z.with(x).with(y));

        // Moral graph restricted to the ancestral set: undirect every edge and
        // marry co-parents. Parents of a relevant vertex are relevant, so no
        // extra masking is needed when reading `parents`.
        let mut adj = vec![0u64; n];
        for v in relevant.iter() {
            let pa = self.parents[v];
            adj[v] |= pa;
            let mut rest = pa;
            while rest != 0 {
                let p = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                adj[p] |= 1 << v;
                adj[p] |= pa & !(1 << p);
            }
        }

        // BFS from x through unconditioned vertices.
        let allowed = relevant.bits() & !z.bits();
        let target = 1u64 << y;
        let mut seen = 1u64 << x;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0u64;
            for v in VarSet(frontier).iter() {
                next |= adj[v];
            }
            next &= allowed & !seen;
            if next & target != 0 {
                return Ok(false);
            }
            seen |= next;
            frontier = next;
        }
        Ok(true)
    }

    /// Smallest superset of `seed` closed under taking parents.
    fn ancestral_closure(&self, seed: VarSet) -> VarSet {
        let mut closed = seed.bits();
        loop {
            let mut grown = closed;
            for v in VarSet(closed).iter() {
                grown |= self.parents[v];
            }
            if grown == closed {
                return VarSet(closed);
            }
            closed = grown;
        }
    }
}

impl std::fmt::Debug for Dag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Dag(n={}, edges={:?})", self.n, self.edges())
    }
}

fn edges_acyclic(n: usize, parents: &[u64]) -> bool {
    // Kahn's algorithm over the bitmask rows.
    let mut alive = VarSet::full(n).bits();
    while alive != 0 {
        let mut removable = 0u64;
        for v in VarSet(alive).iter() {
            if parents[v] & alive == 0 {
                removable |= 1 << v;
            }
        }
        if removable == 0 {
            return false;
        }
        alive &= !removable;
    }
    true
}

/// Every labeled DAG on `n` vertices, exactly once, in a fixed order.
///
/// The order assigns each unordered pair one of three states (absent, low→high,
/// high→low) and counts through the assignments with the first pair varying
/// fastest, keeping the acyclic ones. Counts for n = 1..5 are 1, 3, 25, 543,
/// 29281.
pub fn enumerate_dags(n: usize) -> Result<Vec<Dag>, GraphError> {
    enumerate_dags_with_cap(n, DEFAULT_ENUM_CAP)
}

/// [`enumerate_dags`] with an explicit cap instead of [`DEFAULT_ENUM_CAP`].
pub fn enumerate_dags_with_cap(n: usize, cap: usize) -> Result<Vec<Dag>, GraphError> {
    if n == 0 {
        return Err(GraphError::ZeroVariables);
    }
    if n > cap {
        return Err(GraphError::EnumerationCap { n, cap });
    }
    let pairs: Vec<(VarId, VarId)> = pairs(n).collect();
    let total = 3u64.pow(pairs.len() as u32);
    let mut out = Vec::new();
    let mut parents = vec![0u64; n];
    for code in 0..total {
        parents.iter_mut().for_each(|m| *m = 0);
        let mut rest = code;
        for &(x, y) in &pairs {
            match rest % 3 {
                0 => {}
                1 => parents[y] |= 1 << x,
                2 => parents[x] |= 1 << y,
                _ => unreachable!(),
            }
            rest /= 3;
        }
        if edges_acyclic(n, &parents) {
            out.push(Dag {
                n,
                parents: parents.clone(),
            });
        }
    }
    Ok(out)
}

/// A seeded random DAG: draws a uniform topological order, then includes each
/// forward pair independently with probability `edge_prob`. Identical
/// arguments always produce the identical graph.
pub fn random_dag(n: usize, edge_prob: f64, seed: u64) -> Result<Dag, GraphError> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    if n == 0 {
        return Err(GraphError::ZeroVariables);
    }
    if n > MAX_VARS {
        return Err(GraphError::TooManyVariables { n, max: MAX_VARS });
    }
    assert!(
        (0.0..=1.0).contains(&edge_prob),
        "edge_prob must lie in [0, 1]"
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<VarId> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut parents = vec![0u64; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(edge_prob) {
                parents[order[j]] |= 1 << order[i];
            }
        }
    }
    debug_assert!(edges_acyclic(n, &parents));
    Ok(Dag { n, parents })
}

/// Unordered pairs `(x, y)` with `x < y`, in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (VarId, VarId)> {
    (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y)))
}

/// Number of unordered pairs on `n` vertices.
pub fn pair_count(n: usize) -> usize {
    n.saturating_sub(1) * n / 2
}

/// Position of `(x, y)`, `x < y`, in the [`pairs`] order.
pub fn pair_index(n: usize, x: VarId, y: VarId) -> usize {
    debug_assert!(x < y && y < n);
    x * n - x * (x + 1) / 2 + (y - x - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_the_three_vertex_example() {
        // V2→V1, V1→V3, V2→V3 under 0-based naming.
        let g = Dag::new(3, &[(1, 0), (0, 2), (1, 2)]).unwrap();
        assert!(g.has_edge(1, 0) && g.has_edge(0, 2) && g.has_edge(1, 2));
        assert_eq!(g.edge_count(), 3);
        assert!(g.is_complete());
    }

    #[test]
    fn empty_graph_on_two_vertices() {
        let g = Dag::new(2, &[]).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn construction_errors_are_distinct() {
        assert_eq!(Dag::new(2, &[(0, 1), (1, 0)]), Err(GraphError::Cyclic));
        assert_eq!(
            Dag::new(3, &[(0, 1), (1, 2), (2, 0)]),
            Err(GraphError::Cyclic)
        );
        assert_eq!(Dag::new(2, &[(0, 0)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(
            Dag::new(2, &[(0, 1), (0, 1)]),
            Err(GraphError::DuplicateEdge(0, 1))
        );
        assert_eq!(
            Dag::new(2, &[(0, 2)]),
            Err(GraphError::IndexOutOfRange { index: 2, n: 2 })
        );
        assert_eq!(Dag::new(0, &[]), Err(GraphError::ZeroVariables));
    }

    #[test]
    fn manipulation_cuts_incoming_edges_only() {
        let g = Dag::new(3, &[(1, 0), (0, 2), (1, 2)]).unwrap();
        let m = g.manipulated(VarSet::singleton(0));
        assert_eq!(m.edges(), vec![(0, 2), (1, 2)]);

        // Null experiment leaves the graph unchanged.
        assert_eq!(g.manipulated(VarSet::EMPTY), g);

        // Intervening on everything empties a complete graph.
        let c = Dag::complete(3).unwrap();
        assert_eq!(c.manipulated(VarSet::full(3)).edge_count(), 0);
    }

    #[test]
    fn d_separation_chain_and_collider() {
        let chain = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(chain.d_separated(0, 2, VarSet::singleton(1)).unwrap());
        assert!(!chain.d_separated(0, 2, VarSet::EMPTY).unwrap());

        let collider = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
        assert!(collider.d_separated(0, 1, VarSet::EMPTY).unwrap());
        assert!(!collider.d_separated(0, 1, VarSet::singleton(2)).unwrap());
    }

    #[test]
    fn complete_graph_has_no_separations() {
        let c = Dag::complete(3).unwrap();
        for (x, y) in pairs(3) {
            let others = VarSet::full(3).without(x).without(y);
            assert!(!c.d_separated(x, y, VarSet::EMPTY).unwrap());
            assert!(!c.d_separated(x, y, others).unwrap());
        }
    }

    #[test]
    fn d_separation_rejects_overlapping_arguments() {
        let g = Dag::new(3, &[(0, 1)]).unwrap();
        assert_eq!(
            g.d_separated(0, 0, VarSet::EMPTY),
            Err(GraphError::IdenticalPair(0))
        );
        assert_eq!(
            g.d_separated(0, 1, VarSet::singleton(1)),
            Err(GraphError::PairInConditioningSet(1))
        );
    }

    #[test]
    fn enumeration_counts_small() {
        assert_eq!(enumerate_dags(1).unwrap().len(), 1);
        assert_eq!(enumerate_dags(2).unwrap().len(), 3);
        assert_eq!(enumerate_dags(3).unwrap().len(), 25);
    }

    #[test]
    fn enumeration_refuses_above_cap() {
        assert_eq!(
            enumerate_dags(6),
            Err(GraphError::EnumerationCap { n: 6, cap: 5 })
        );
        assert!(enumerate_dags_with_cap(3, 2).is_err());
    }

    #[test]
    fn random_dag_is_seed_deterministic() {
        let a = random_dag(5, 0.5, 42).unwrap();
        let b = random_dag(5, 0.5, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(random_dag(4, 1.0, 7).unwrap().edge_count(), 6);
        assert_eq!(random_dag(4, 0.0, 7).unwrap().edge_count(), 0);
    }

    #[test]
    fn pair_indexing_is_dense_and_ordered() {
        for n in 1..=8 {
            let listed: Vec<_> = pairs(n).collect();
            assert_eq!(listed.len(), pair_count(n));
            for (i, &(x, y)) in listed.iter().enumerate() {
                assert_eq!(pair_index(n, x, y), i);
            }
        }
    }

    #[test]
    fn varset_round_trips_through_json() {
        let s: VarSet = [0usize, 3, 5].into_iter().collect();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[0,3,5]");
        assert_eq!(serde_json::from_str::<VarSet>(&json).unwrap(), s);
    }
}
