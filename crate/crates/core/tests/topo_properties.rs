mod common;

use common::{all_simple_paths, dense_normalized_adjacency, random_connected};
use nalgebra::DMatrix;
use proptest::prelude::*;
use qroute::topo::{build_normalized_adjacency, generate_random_topology, k_shortest_paths, node_importance, nsfnet, shortest_path, Link, Topology};

fn relabel(topo: &Topology, perm: &[usize]) -> Topology {
    let links = topo.links().iter().map(|l| Link { a: perm[l.a], b: perm[l.b], ..*l }).collect();
    Topology::new(topo.node_count(), links).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn candidate_paths_match_exhaustive_enumeration(n in 2usize..=6, extra in 0usize..10, seed: u64, k in 1usize..=5) {
        let t = random_connected(n, extra, seed);
        for s in 0..n {
            for d in (0..n).filter(|&d| d != s) {
                let mut expected = all_simple_paths(&t, s, d);
                expected.truncate(k);
                prop_assert_eq!(k_shortest_paths(&t, s, d, k), expected);
            }
        }
    }

    #[test]
    fn adjacency_matches_dense_definition(n in 1usize..=14, extra in 0usize..30, seed: u64) {
        let t = random_connected(n, extra, seed);
        let s = build_normalized_adjacency(&t);
        prop_assert_eq!(s.values(), &dense_normalized_adjacency(&t)[..]);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((s.get(i, j) - s.get(j, i)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn adjacency_spectrum_is_bounded(n in 1usize..=14, extra in 0usize..30, seed: u64) {
        let s = build_normalized_adjacency(&random_connected(n, extra, seed));
        let m = DMatrix::from_row_slice(n, n, s.values());
        for ev in m.symmetric_eigenvalues().iter() {
            prop_assert!(*ev >= -1.0 - 1e-9 && *ev <= 1.0 + 1e-9, "eigenvalue {ev}");
        }
    }

    #[test]
    fn importance_follows_relabeling(n in 2usize..=8, extra in 0usize..12, seed: u64, perm_seed: u64) {
        let t = random_connected(n, extra, seed);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(perm_seed);
        let perm = common::random_permutation(n, &mut rng);
        let relabeled = relabel(&t, &perm);
        // Lexicographic tie-breaking is label dependent, so K = 3 is only
        // checked when no pair has a hop-count tie across the cut.
        let pairs = (0..n).flat_map(|s| (0..n).map(move |d| (s, d))).filter(|(s, d)| s != d);
        let all: Vec<Vec<Vec<usize>>> = pairs.map(|(s, d)| all_simple_paths(&t, s, d)).collect();
        let cut_tie = all.iter().any(|p| p.len() > 3 && p[2].len() == p[3].len());
        let every = all.iter().map(Vec::len).max().unwrap_or(1);
        let ks: Vec<usize> = if cut_tie { vec![every] } else { vec![3, every] };
        for k in ks {
            let before = node_importance(&t, k).0;
            let after = node_importance(&relabeled, k).0;
            for i in 0..n {
                prop_assert_eq!(before[i], after[perm[i]], "k = {}", k);
            }
        }
    }

    #[test]
    fn generated_topologies_meet_their_contract(n in 2usize..=14, seed: u64, density in 0.0f64..1.0) {
        let max = n * (n - 1) / 2;
        let m = (n - 1) + ((max - (n - 1)) as f64 * density) as usize;
        let t = generate_random_topology(n, m, seed).unwrap();
        prop_assert_eq!(t.link_count(), m);
        for d in 1..n {
            prop_assert!(shortest_path(&t, 0, d).is_some());
        }
        for l in t.links() {
            prop_assert_eq!(l.capacity_mbps, 100.0);
            prop_assert!((500.0..=700.0).contains(&l.distance_m));
        }
        prop_assert_eq!(generate_random_topology(n, m, seed).unwrap().to_edge_list(), t.to_edge_list());
    }
}

#[test]
fn nsfnet_is_the_t1_backbone() {
    let t = nsfnet();
    assert_eq!((t.node_count(), t.link_count()), (14, 21));
    assert!(t.links().iter().all(|l| l.capacity_mbps == 100.0));
}

#[test]
fn edge_list_round_trip_through_a_file() {
    let t = generate_random_topology(9, 16, 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.topo");
    std::fs::write(&path, t.to_edge_list()).unwrap();
    assert_eq!(Topology::load(&path).unwrap().to_edge_list(), t.to_edge_list());
}
