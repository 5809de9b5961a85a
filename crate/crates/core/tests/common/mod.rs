//! Shared test helpers, most importantly a brute-force d-separation oracle
//! that enumerates every simple path and applies the blocking definition
//! directly. It shares no code with the library's reachability-based
//! implementation.

#![allow(dead_code)]

use interdag::graph::{Dag, VarId, VarSet};

/// All descendants of `v`, including `v` itself.
pub fn descendants_including_self(g: &Dag, v: VarId) -> VarSet {
    let mut out = VarSet::singleton(v);
    loop {
        let mut grown = out;
        for u in out.iter() {
            grown = grown.union(g.children_of(u));
        }
        if grown == out {
            return out;
        }
        out = grown;
    }
}

/// Path-enumeration d-separation: true iff every simple path between `x` and
/// `y` is blocked given `z`. A path is blocked iff some interior non-collider
/// lies in `z`, or some interior collider has neither itself nor any
/// descendant in `z`.
pub fn d_separated_brute(g: &Dag, x: VarId, y: VarId, z: VarSet) -> bool {
    let mut path = vec![x];
    let mut visited = VarSet::singleton(x);
    !some_open_path(g, y, z, &mut path, &mut visited)
}

fn some_open_path(
    g: &Dag,
    target: VarId,
    z: VarSet,
    path: &mut Vec<VarId>,
    visited: &mut VarSet,
) -> bool {
    let current = *path.last().unwrap();
    if current == target {
        return path_is_open(g, path, z);
    }
    let neighbors = g.parents_of(current).union(g.children_of(current));
    for next in neighbors.iter() {
        if visited.contains(next) {
            continue;
        }
        path.push(next);
        *visited = visited.with(next);
        if some_open_path(g, target, z, path, visited) {
            return true;
        }
        path.pop();
        *visited = visited.without(next);
    }
    false
}

fn path_is_open(g: &Dag, path: &[VarId], z: VarSet) -> bool {
    for i in 1..path.len().saturating_sub(1) {
        let (prev, mid, next) = (path[i - 1], path[i], path[i + 1]);
        let collider = g.has_edge(prev, mid) && g.has_edge(next, mid);
        if collider {
            let activated = !descendants_including_self(g, mid).intersection(z).is_empty();
            if !activated {
                return false;
            }
        } else if z.contains(mid) {
            return false;
        }
    }
    true
}

/// Every subset of `[0, n)`.
pub fn all_subsets(n: usize) -> Vec<VarSet> {
    (0..1u64 << n).map(VarSet::from_bits).collect()
}

/// Every subset of `[0, n) \ {x, y}`.
pub fn conditioning_sets(n: usize, x: VarId, y: VarId) -> Vec<VarSet> {
    let others = VarSet::full(n).without(x).without(y);
    let mut out = Vec::new();
    let full = others.bits();
    let mut sub = 0u64;
    loop {
        out.push(VarSet::from_bits(sub));
        if sub == full {
            return out;
        }
        sub = (sub.wrapping_sub(full)) & full;
    }
}

