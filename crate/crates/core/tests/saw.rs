use std::collections::HashSet;

use mie_core::lattice::{separates, DualGraph, RegionPartition, SiteLattice};
use mie_core::saw::{
    count_rooted_polygons, count_rooted_walks, enumerate_separating_walks, partition_function, WalkCounts, WalkLattice,
    WeightModel,
};
use proptest::prelude::*;

fn neighbours(kind: WalkLattice, (x, y): (i64, i64)) -> Vec<(i64, i64)> {
    match kind {
        WalkLattice::Square => vec![(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)],
        WalkLattice::Triangular => vec![(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1), (x + 1, y + 1), (x - 1, y - 1)],
        // brick-wall embedding of the honeycomb
        WalkLattice::Hexagonal => {
            let vertical = if (x + y).rem_euclid(2) == 0 { (x, y + 1) } else { (x, y - 1) };
            vec![(x + 1, y), (x - 1, y), vertical]
        }
    }
}

/// Walks counted on an unbounded hash set of visited points.
fn oracle_walks(kind: WalkLattice, n: usize) -> u64 {
    fn go(kind: WalkLattice, p: (i64, i64), left: usize, seen: &mut HashSet<(i64, i64)>) -> u64 {
        if left == 0 {
            return 1;
        }
        let mut total = 0;
        for q in neighbours(kind, p) {
            if seen.insert(q) {
                total += go(kind, q, left - 1, seen);
                seen.remove(&q);
            }
        }
        total
    }
    let mut seen = HashSet::from([(0, 0)]);
    go(kind, (0, 0), n, &mut seen)
}

#[test]
fn walk_counts_match_coordinate_oracle() {
    for (kind, n_max) in [(WalkLattice::Square, 9), (WalkLattice::Triangular, 6), (WalkLattice::Hexagonal, 12)] {
        for n in 0..=n_max {
            assert_eq!(count_rooted_walks(kind, n), oracle_walks(kind, n), "{kind:?} n = {n}");
        }
    }
}

#[test]
fn walk_counts_match_published_tables() {
    let square = [4u64, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100];
    let honeycomb = [3u64, 6, 12, 24, 48, 90, 174, 336, 648, 1218];
    let triangular = [6u64, 30, 138, 618, 2730];
    for (kind, table) in [(WalkLattice::Square, &square[..]), (WalkLattice::Hexagonal, &honeycomb[..]), (WalkLattice::Triangular, &triangular[..])] {
        for (k, &c) in table.iter().enumerate() {
            assert_eq!(count_rooted_walks(kind, k + 1), c, "{kind:?} n = {}", k + 1);
        }
    }
}

#[test]
fn rooted_polygons_are_length_times_polygon_count() {
    // unrooted square-lattice polygon counts for perimeters 4, 6, ..., 14
    let polygons = [1u64, 2, 7, 28, 124, 588];
    for (k, &p) in polygons.iter().enumerate() {
        let l = 4 + 2 * k;
        assert_eq!(count_rooted_polygons(WalkLattice::Square, l).unwrap(), l as u64 * p);
    }
    assert_eq!(count_rooted_polygons(WalkLattice::Square, 7).unwrap(), 0);
}

#[test]
fn block_upper_bounds_dominate_counts() {
    let counts = WalkCounts::standard(WalkLattice::Square);
    for n in 1..=12 {
        assert!(counts.upper(n) >= count_rooted_walks(WalkLattice::Square, n) as f64);
    }
    assert!(counts.growth_log() > 2.638f64.ln());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn separating_walls_are_distinct_simple_and_separating(w in 2usize..5, h in 2usize..4, strip in any::<bool>()) {
        let lat = SiteLattice::square(w, h).unwrap();
        let part = if strip { RegionPartition::strip(&lat).unwrap() } else { RegionPartition::half_chain(&lat).unwrap() };
        let dual = DualGraph::planar(&lat);
        let walls = enumerate_separating_walks(&dual, &part, dual.n_vertices());
        prop_assert!(!walls.is_empty());
        let mut seen = HashSet::new();
        for wall in &walls {
            prop_assert!(wall.is_self_avoiding(&dual));
            prop_assert!(separates(&dual, &wall.edges, &part));
            let mut key = wall.edges.clone();
            key.sort_unstable();
            prop_assert!(seen.insert(key));
        }
    }

    #[test]
    fn wall_sum_decreases_with_beta(w in 2usize..5, h in 2usize..4, b1 in 0.2f64..3.0, db in 0.01f64..2.0) {
        let lat = SiteLattice::square(w, h).unwrap();
        let part = RegionPartition::strip(&lat).unwrap();
        let dual = DualGraph::planar(&lat);
        let l = dual.n_vertices();
        let z1 = partition_function(&dual, &part, &WeightModel::PerEdge { beta: b1 }, l);
        let z2 = partition_function(&dual, &part, &WeightModel::PerEdge { beta: b1 + db }, l);
        prop_assert!(z2.exact_sum < z1.exact_sum);
        prop_assert_eq!(z1.tail_bound, 0.0);
    }

    #[test]
    fn truncated_certificate_bounds_longer_sums(w in 3usize..6, h in 2usize..4, beta in 1.1f64..3.0, l_short in 2usize..6) {
        let lat = SiteLattice::square(w, h).unwrap();
        let part = RegionPartition::strip(&lat).unwrap();
        let dual = DualGraph::planar(&lat);
        let weight = WeightModel::PerEdge { beta };
        let short = partition_function(&dual, &part, &weight, l_short);
        let full = partition_function(&dual, &part, &weight, dual.n_vertices());
        prop_assert!(short.exact_sum <= full.exact_sum + 1e-15);
        if short.certified {
            prop_assert!(short.total_upper >= full.exact_sum * (1.0 - 1e-12));
        }
    }
}
