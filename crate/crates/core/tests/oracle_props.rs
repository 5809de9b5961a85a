//! Oracle soundness against the brute-force path oracle, and the counting
//! and coherence laws of the test-kind classification.

mod common;

use common::{all_subsets, conditioning_sets, d_separated_brute};
use interdag::graph::{enumerate_dags, pair_count, pairs, random_dag, Dag, VarSet};
use interdag::oracle::{
    count_test_kinds, pair_outcomes, run_experiment, Experiment, TestKind, Verdict,
};
use proptest::prelude::*;

#[test]
fn d_separation_matches_brute_force_exhaustively() {
    for n in 1..=4 {
        for g in enumerate_dags(n).unwrap() {
            for (x, y) in pairs(n) {
                for z in conditioning_sets(n, x, y) {
                    assert_eq!(
                        g.d_separated(x, y, z).unwrap(),
                        d_separated_brute(&g, x, y, z),
                        "disagreement on {g:?} for ({x}, {y} | {z:?})"
                    );
                }
            }
        }
    }
}

#[test]
fn d_separation_matches_brute_force_on_random_graphs() {
    for seed in 0..200 {
        let g = random_dag(6, 0.5, seed).unwrap();
        // Sampled queries: every pair, with a seeded selection of sets.
        for (x, y) in pairs(6) {
            let sets = conditioning_sets(6, x, y);
            for (i, &z) in sets.iter().enumerate() {
                if i % 3 == (seed as usize + x + y) % 3 {
                    assert_eq!(
                        g.d_separated(x, y, z).unwrap(),
                        d_separated_brute(&g, x, y, z)
                    );
                }
            }
        }
    }
}

#[test]
fn separability_is_equivalent_to_non_adjacency() {
    for n in 1..=4 {
        for g in enumerate_dags(n).unwrap() {
            for (x, y) in pairs(n) {
                let separable = conditioning_sets(n, x, y)
                    .into_iter()
                    .any(|z| g.d_separated(x, y, z).unwrap());
                assert_eq!(separable, !g.adjacent(x, y));
            }
        }
    }
    for n in [5usize, 6, 7] {
        for seed in 0..200 {
            let g = random_dag(n, 0.4, 1000 + seed).unwrap();
            for (x, y) in pairs(n) {
                let separable = conditioning_sets(n, x, y)
                    .into_iter()
                    .any(|z| g.d_separated(x, y, z).unwrap());
                assert_eq!(separable, !g.adjacent(x, y));
            }
        }
    }
}

#[test]
fn enumeration_is_complete_and_valid() {
    let expected = [1usize, 3, 25, 543];
    for (n, &count) in (1..=4).zip(&expected) {
        let dags = enumerate_dags(n).unwrap();
        assert_eq!(dags.len(), count);
        let mut seen = std::collections::HashSet::new();
        for g in &dags {
            assert_eq!(g.n(), n);
            assert!(seen.insert(g.edges()), "duplicate graph {g:?}");
            // Every yielded graph passes validation from its own edge list.
            assert_eq!(&Dag::new(n, &g.edges()).unwrap(), g);
        }
    }
}

#[test]
fn test_kind_partition_law() {
    for n in 0..=12usize {
        let mut best_k = 0;
        let mut best_directional = 0;
        for k in 0..=n {
            let c = count_test_kinds(n, k);
            assert_eq!(c.directional, k * (n - k));
            assert_eq!(c.adjacency, pair_count(n - k));
            assert_eq!(c.zero_information, pair_count(k));
            assert_eq!(
                c.directional + c.adjacency + c.zero_information,
                pair_count(n)
            );
            if c.directional > best_directional {
                best_directional = c.directional;
                best_k = k;
            }
        }
        if n >= 2 {
            assert!(best_k == n / 2 || best_k == n.div_ceil(2));
        }
    }
}

/// The per-pair verdicts must be recomputable from the full statement set:
/// a pair is adjacent in the manipulated graph iff no conditioning set makes
/// it independent. Checked for every DAG and every intervention set, n <= 4.
#[test]
fn outcomes_cohere_with_full_responses() {
    for n in 2..=4 {
        for g in enumerate_dags(n).unwrap() {
            for mask in all_subsets(n) {
                let e = Experiment::new(mask);
                let response = run_experiment(&g, e).unwrap();
                for o in pair_outcomes(&g, e) {
                    let dependent_everywhere = response.dependent_under_all(o.x, o.y);
                    let expected = match o.kind {
                        TestKind::DirectionalFromX => {
                            if dependent_everywhere {
                                Verdict::EdgeXToY
                            } else {
                                Verdict::NoEdgeFromX
                            }
                        }
                        TestKind::DirectionalFromY => {
                            if dependent_everywhere {
                                Verdict::EdgeYToX
                            } else {
                                Verdict::NoEdgeFromY
                            }
                        }
                        TestKind::Adjacency => {
                            if dependent_everywhere {
                                Verdict::Adjacent
                            } else {
                                Verdict::NotAdjacent
                            }
                        }
                        TestKind::ZeroInformation => Verdict::Uninformative,
                    };
                    assert_eq!(o.verdict, expected, "{g:?} under {mask:?}");
                }
            }
        }
    }
}

/// Directional verdicts read the true edge exactly, and adjacency verdicts
/// for non-intervened pairs never depend on the intervention set.
#[test]
fn directional_soundness_and_adjacency_stability() {
    for n in 2..=4 {
        for g in enumerate_dags(n).unwrap() {
            for mask in all_subsets(n) {
                for o in pair_outcomes(&g, Experiment::new(mask)) {
                    match o.kind {
                        TestKind::DirectionalFromX => {
                            assert_eq!(o.verdict == Verdict::EdgeXToY, g.has_edge(o.x, o.y));
                        }
                        TestKind::DirectionalFromY => {
                            assert_eq!(o.verdict == Verdict::EdgeYToX, g.has_edge(o.y, o.x));
                        }
                        TestKind::Adjacency => {
                            assert_eq!(o.verdict == Verdict::Adjacent, g.adjacent(o.x, o.y));
                        }
                        TestKind::ZeroInformation => {}
                    }
                }
            }
        }
    }
}

proptest! {
    /// The manipulated graph keeps exactly the edges whose child is not
    /// intervened, stays acyclic, and keeps the vertex set.
    #[test]
    fn manipulation_edge_law(n in 1usize..=7, p in 0.0f64..=1.0, seed: u64, mask_bits: u64) {
        let g = random_dag(n, p, seed).unwrap();
        let intervention = VarSet::from_bits(mask_bits).intersection(VarSet::full(n));
        let m = g.manipulated(intervention);
        prop_assert_eq!(m.n(), g.n());
        let expected: Vec<(usize, usize)> = g
            .edges()
            .into_iter()
            .filter(|&(_, c)| !intervention.contains(c))
            .collect();
        prop_assert_eq!(m.edges(), expected);
        // Constructing from the surviving edge list revalidates acyclicity.
        prop_assert_eq!(Dag::new(m.n(), &m.edges()).unwrap(), m);
    }

    /// Same seed, same graph; the draw is a pure function of its arguments.
    #[test]
    fn random_dag_determinism(n in 1usize..=8, p in 0.0f64..=1.0, seed: u64) {
        prop_assert_eq!(random_dag(n, p, seed).unwrap(), random_dag(n, p, seed).unwrap());
    }
}
