use mie_core::lattice::SiteLattice;
use mie_core::rng;
use mie_core::stabilizer::{
    apply_pauli_dense, holographic_clifford_state, random_clifford, tripartite_shape, BondKind, SiteGates, Tableau,
};
use mie_core::statevec::{EntropyOrder, PureState};
use mie_core::C64;
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
enum Gate {
    H(usize),
    S(usize),
    Cnot(usize, usize),
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..n).prop_map(Gate::H),
        (0..n).prop_map(Gate::S),
        (0..n, 1..n).prop_map(move |(c, d)| Gate::Cnot(c, (c + d) % n)),
    ]
}

/// Gate action on dense amplitudes, qubit 0 most significant.
fn apply_dense(v: &mut Vec<C64>, n: usize, g: Gate) {
    let bit = |q: usize| 1usize << (n - 1 - q);
    match g {
        Gate::H(q) => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for b in 0..v.len() {
                if b & bit(q) == 0 {
                    let (x, y) = (v[b], v[b | bit(q)]);
                    v[b] = (x + y) * s;
                    v[b | bit(q)] = (x - y) * s;
                }
            }
        }
        Gate::S(q) => {
            for (b, a) in v.iter_mut().enumerate() {
                if b & bit(q) != 0 {
                    *a *= C64::new(0.0, 1.0);
                }
            }
        }
        Gate::Cnot(c, t) => {
            let old = v.clone();
            for b in 0..v.len() {
                v[b] = if b & bit(c) != 0 { old[b ^ bit(t)] } else { old[b] };
            }
        }
    }
}

fn run(n: usize, gates: &[Gate]) -> (Tableau, Vec<C64>) {
    let mut t = Tableau::zero_state(n);
    let mut v = vec![C64::new(0.0, 0.0); 1 << n];
    v[0] = C64::new(1.0, 0.0);
    for &g in gates {
        match g {
            Gate::H(q) => t.h(q),
            Gate::S(q) => t.s(q),
            Gate::Cnot(c, d) => t.cnot(c, d),
        }
        apply_dense(&mut v, n, g);
    }
    (t, v)
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2usize..7).prop_flat_map(|n| (Just(n), prop::collection::vec(gate_strategy(n), 0..40)))
}

fn region_of(n: usize, mask: u32) -> Vec<usize> {
    (0..n).filter(|&q| mask >> q & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tableau_agrees_with_dense_simulation((n, gates) in circuit(), mask in any::<u32>()) {
        let (t, v) = run(n, &gates);
        prop_assert!(t.is_valid());
        for s in t.stabilizers() {
            let sv = apply_pauli_dense(s, &v, n);
            let dev: f64 = sv.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum();
            prop_assert!(dev < 1e-20, "stabilizer {:?} moves the state", s);
        }
        let region = region_of(n, mask);
        let dense = PureState::new(vec![2; n], v).unwrap();
        let s = dense.entropy(&region, EntropyOrder::Vn) / std::f64::consts::LN_2;
        prop_assert!((s - t.entropy_bits(&region) as f64).abs() < 1e-9);
        // stabilizer spectra are flat, so every Rényi order agrees
        let r2 = dense.entropy(&region, EntropyOrder::Renyi2) / std::f64::consts::LN_2;
        prop_assert!((r2 - s).abs() < 1e-9);
    }

    #[test]
    fn entropy_inequalities(n in 2usize..12, seed in any::<u64>(), ma in any::<u32>(), mb in any::<u32>()) {
        let mut t = Tableau::zero_state(n);
        let all: Vec<usize> = (0..n).collect();
        t.apply(&random_clifford(n, &mut rng::from_seed(seed)), &all);
        prop_assert!(t.is_valid());
        let a = region_of(n, ma);
        let b: Vec<usize> = region_of(n, mb).into_iter().filter(|q| !a.contains(q)).collect();
        let comp: Vec<usize> = (0..n).filter(|q| !a.contains(q)).collect();
        let ab: Vec<usize> = a.iter().chain(&b).copied().collect();
        let (sa, sb, sab) = (t.entropy_bits(&a), t.entropy_bits(&b), t.entropy_bits(&ab));
        prop_assert_eq!(sa, t.entropy_bits(&comp));
        prop_assert!(sab <= sa + sb);
        prop_assert!(sab >= sa.abs_diff(sb));
        prop_assert!(sa <= a.len().min(n - a.len()));
    }

    #[test]
    fn measurement_keeps_tableau_valid((n, gates) in circuit(), q in 0usize..7, seed in any::<u64>()) {
        let (mut t, _) = run(n, &gates);
        let q = q % n;
        let before = t.entropy_bits(&[q]);
        let (outcome, random) = t.measure_z(q, &mut rng::from_seed(seed));
        prop_assert!(outcome <= 1);
        // an entangled qubit always gives a random outcome
        prop_assert!(before == 0 || random);
        prop_assert!(t.is_valid());
        prop_assert_eq!(t.entropy_bits(&[q]), 0);
        // a repeated measurement is deterministic and reproduces the outcome
        let (again, random_again) = t.measure_z(q, &mut rng::from_seed(seed ^ 1));
        prop_assert!(!random_again);
        prop_assert_eq!(again, outcome);
    }

    #[test]
    fn tripartite_shape_reproduces_entropies(w in 2usize..4, h in 1usize..3, m in 1usize..3, seed in any::<u64>(), split in any::<u64>()) {
        let lat = SiteLattice::square(w, h).unwrap();
        prop_assume!(!lat.edges.is_empty());
        let (t, _) = holographic_clifford_state(&lat, m, BondKind::MaxEntangled, SiteGates::RandomClifford, &mut rng::from_seed(seed));
        let n = t.n();
        let mut parts: [Vec<usize>; 3] = Default::default();
        for q in 0..n {
            parts[(split >> (2 * (q % 32)) & 3) as usize % 3].push(q);
        }
        let shape = tripartite_shape(&t, &parts[0], &parts[1], &parts[2]).unwrap();
        let hi: Vec<usize> = parts[0].iter().chain(&parts[1]).copied().collect();
        let hj: Vec<usize> = parts[0].iter().chain(&parts[2]).copied().collect();
        let want = [t.entropy_bits(&parts[0]), t.entropy_bits(&parts[1]), t.entropy_bits(&parts[2]), t.entropy_bits(&hi), t.entropy_bits(&hj)];
        prop_assert_eq!(shape.entropies(), want);
        for k in 0..3 {
            let used = shape.g + [shape.e_hi + shape.e_hj, shape.e_hi + shape.e_ij, shape.e_hj + shape.e_ij][k];
            prop_assert_eq!(used + shape.local[k], parts[k].len());
        }
    }
}

#[test]
fn ghz_and_bell_shapes() {
    // GHZ on 0,1,2 and a Bell pair between 3 and 4
    let mut t = Tableau::zero_state(5);
    t.h(0);
    t.cnot(0, 1);
    t.cnot(0, 2);
    t.h(3);
    t.cnot(3, 4);
    let shape = tripartite_shape(&t, &[0, 3], &[1, 4], &[2]).unwrap();
    assert_eq!((shape.g, shape.e_hi, shape.e_hj, shape.e_ij), (1, 1, 0, 0));
    assert_eq!(shape.local, [0, 0, 0]);
    assert!(tripartite_shape(&t, &[0, 1], &[1], &[2, 3, 4]).is_err());
}
