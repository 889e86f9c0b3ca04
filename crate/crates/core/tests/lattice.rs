use mie_core::lattice::{separates, CellLattice, DualGraph, LatticeKind, RegionPartition, SiteLattice};
use proptest::prelude::*;

/// Union-find connectivity, independent of the library's breadth-first search.
fn connected_after_cut(n: usize, edges: &[(usize, usize)], cut: &[bool], a: &[usize], c: &[usize]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (e, &(u, v)) in edges.iter().enumerate() {
        if !cut[e] {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            parent[ru] = rv;
        }
    }
    a.iter().any(|&x| c.iter().any(|&y| find(&mut parent, x) == find(&mut parent, y)))
}

#[test]
fn partitions_cover_sites_once() {
    let lat = SiteLattice::square(5, 4).unwrap();
    for p in [RegionPartition::strip(&lat).unwrap(), RegionPartition::half_chain(&lat).unwrap()] {
        let mut all: Vec<usize> = p.a.iter().chain(&p.b).chain(&p.c).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }
    assert!(RegionPartition::custom(4, vec![0, 1], vec![1]).is_err());
    assert!(RegionPartition::custom(4, vec![0], vec![9]).is_err());
}

#[test]
fn cell_blocking_of_the_locality_lattice() {
    let lat = SiteLattice::square(16, 8).unwrap();
    let cells = CellLattice::new(&lat, 2).unwrap();
    assert_eq!(cells.cell_shape, (8, 4));
    assert_eq!(cells.unblock(), (0..lat.n_sites()).collect::<Vec<_>>());
    // two full cells on the first row, one full and two half cells on the shifted row
    assert_eq!(cells.n_cells(), 5);
    assert!(CellLattice::with_shape(&lat, 2, (3, 4)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn square_edge_and_degree_counts(w in 1usize..8, h in 1usize..8) {
        let lat = SiteLattice::square(w, h).unwrap();
        prop_assert_eq!(lat.edges.len(), w * (h - 1) + h * (w - 1));
        let degree_sum: usize = (0..lat.n_sites()).map(|s| lat.degree(s)).sum();
        prop_assert_eq!(degree_sum, 2 * lat.edges.len());
        let inc = lat.incident_edges();
        for (e, &(a, b)) in lat.edges.iter().enumerate() {
            prop_assert!(a < b);
            prop_assert!(inc[a].contains(&e) && inc[b].contains(&e));
        }
        for list in &inc {
            prop_assert!(list.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn triangular_adds_one_diagonal_per_plaquette(w in 1usize..7, h in 1usize..7) {
        let sq = SiteLattice::square(w, h).unwrap();
        let tri = SiteLattice::new(LatticeKind::Triangular, w, h).unwrap();
        prop_assert_eq!(tri.edges.len(), sq.edges.len() + (w - 1) * (h - 1));
    }

    #[test]
    fn planar_dual_satisfies_euler(w in 1usize..7, h in 1usize..7, tri in any::<bool>()) {
        let kind = if tri { LatticeKind::Triangular } else { LatticeKind::Square };
        let lat = SiteLattice::new(kind, w, h).unwrap();
        let dual = DualGraph::planar(&lat);
        prop_assert_eq!(dual.primal_euler(), 2);
        prop_assert_eq!(dual.edges.len(), lat.edges.len());
        let interior = if tri { 2 * (w - 1) * (h - 1) } else { (w - 1) * (h - 1) };
        prop_assert_eq!(dual.n_faces, interior);
    }

    #[test]
    fn separation_matches_union_find(w in 2usize..6, h in 2usize..5, mask in any::<u64>()) {
        let lat = SiteLattice::square(w, h).unwrap();
        let dual = DualGraph::planar(&lat);
        let part = RegionPartition::half_chain(&lat).unwrap();
        let cut: Vec<bool> = (0..lat.edges.len()).map(|e| mask >> (e % 64) & 1 == 1).collect();
        let walk: Vec<usize> = (0..lat.edges.len()).filter(|&e| cut[e]).collect();
        let want = !connected_after_cut(lat.n_sites(), &lat.edges, &cut, &part.a, &part.c);
        prop_assert_eq!(separates(&dual, &walk, &part), want);
    }
}
