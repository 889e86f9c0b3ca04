use mie_core::bounds::distillation_entropy_bound;
use mie_core::lattice::{RegionPartition, SiteLattice};
use mie_core::linalg::{complex_gaussian, hermitian_eigenvalues, CMat};
use mie_core::rng;
use mie_core::statevec::{
    distill, local_indices, measure_exhaustive, mie_exact, prepare_with_seed, CircuitSpec, EntropyOrder, Povm, PureState,
};
use mie_core::C64;
use proptest::prelude::*;

fn random_state(dims: &[usize], seed: u64) -> PureState {
    let mut r = rng::from_seed(seed);
    let n: usize = dims.iter().product();
    let v: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut r)).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    PureState::new(dims.to_vec(), v.iter().map(|a| a / norm).collect()).unwrap()
}

/// Reduced density matrix by explicit index loops, site 0 most significant.
fn oracle_reduced(state: &PureState, region: &[usize]) -> CMat {
    let dims = state.dims();
    let digits = |mut i: usize| {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = i % dims[k];
            i /= dims[k];
        }
        d
    };
    let d_a: usize = region.iter().map(|&s| dims[s]).product();
    let key = |d: &[usize], sites: &[usize]| sites.iter().fold(0, |acc, &s| acc * dims[s] + d[s]);
    let rest: Vec<usize> = (0..dims.len()).filter(|s| !region.contains(s)).collect();
    let mut rho = CMat::zeros(d_a, d_a);
    let amps = state.amplitudes();
    for i in 0..amps.len() {
        let di = digits(i);
        for j in 0..amps.len() {
            let dj = digits(j);
            if key(&di, &rest) == key(&dj, &rest) {
                rho[(key(&di, region), key(&dj, region))] += amps[i] * amps[j].conj();
            }
        }
    }
    rho
}

fn vn(spectrum: &[f64]) -> f64 {
    -spectrum.iter().filter(|&&p| p > 1e-15).map(|p| p * p.ln()).sum::<f64>()
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(prop_oneof![Just(2usize), Just(3)], 2..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn entropy_matches_loop_oracle(dims in dims_strategy(), mask in 1u32..15, seed in any::<u64>()) {
        let state = random_state(&dims, seed);
        let region: Vec<usize> = (0..dims.len()).filter(|&s| mask >> s & 1 == 1).collect();
        prop_assume!(!region.is_empty() && region.len() < dims.len());
        let spectrum = hermitian_eigenvalues(&oracle_reduced(&state, &region));
        prop_assert!((state.entropy(&region, EntropyOrder::Vn) - vn(&spectrum)).abs() < 1e-9);
        let purity: f64 = spectrum.iter().map(|p| p * p).sum();
        prop_assert!((state.entropy(&region, EntropyOrder::Renyi2) + purity.ln()).abs() < 1e-9);
    }

    #[test]
    fn schmidt_symmetry_and_order(dims in dims_strategy(), mask in 1u32..15, seed in any::<u64>()) {
        let state = random_state(&dims, seed);
        let region: Vec<usize> = (0..dims.len()).filter(|&s| mask >> s & 1 == 1).collect();
        let rest: Vec<usize> = (0..dims.len()).filter(|&s| mask >> s & 1 == 0).collect();
        prop_assume!(!region.is_empty() && !rest.is_empty());
        for order in [EntropyOrder::Vn, EntropyOrder::Renyi2] {
            prop_assert!((state.entropy(&region, order) - state.entropy(&rest, order)).abs() < 1e-9);
        }
        prop_assert!(state.entropy(&region, EntropyOrder::Renyi2) <= state.entropy(&region, EntropyOrder::Vn) + 1e-12);
    }

    #[test]
    fn born_rule_and_entropy_cap(dims in dims_strategy(), seed in any::<u64>()) {
        let state = random_state(&dims, seed);
        let b = vec![dims.len() - 1];
        let ens = measure_exhaustive(&state, &b, Povm::HaarRotated, &mut rng::from_seed(seed)).unwrap();
        let total: f64 = ens.iter().map(|e| e.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert_eq!(ens.len(), dims[dims.len() - 1]);
        for e in &ens {
            prop_assert!((e.post_state.norm() - 1.0).abs() < 1e-9);
            prop_assert_eq!(e.post_state.dims(), &dims[..dims.len() - 1]);
        }
    }
}

#[test]
fn entropy_bound_holds_per_outcome_on_random_instances() {
    for k in 0..12u64 {
        let lat = SiteLattice::square(2, 2).unwrap();
        let part = RegionPartition::half_chain(&lat).unwrap();
        let chi = 2 + (k % 2) as usize;
        let mut bond = vec![C64::new(0.0, 0.0); chi * chi];
        for a in 0..chi {
            bond[a * chi + a] = C64::new((1.0 / chi as f64).sqrt(), 0.0);
        }
        let spec = CircuitSpec::holographic(lat, bond, k);
        let state = prepare_with_seed(&spec, k).unwrap();
        let mut r = rng::stream(10, k);
        let ens = measure_exhaustive(&state, &part.b, Povm::Computational, &mut r).unwrap();
        let kept: Vec<usize> = part.a.iter().chain(&part.c).copied().collect();
        let a = local_indices(&kept, &part.a);
        for e in ens.iter().filter(|e| e.probability > 1e-6).take(6) {
            let d = distill(&e.post_state, &a, 2, 64, &mut r).unwrap();
            let s = e.post_state.entropy(&a, EntropyOrder::Vn);
            let eps = (d.eps_estimate + 3.0 * d.stderr).min(2.0);
            assert!(s >= distillation_entropy_bound(eps, 2.0).unwrap() - 1e-9, "S = {s}, eps = {} ± {}", d.eps_estimate, d.stderr);
        }
        let mie = mie_exact(&state, &part, EntropyOrder::Vn).unwrap();
        assert!(mie >= 0.0 && mie <= (chi as f64).powi(2).ln() + 1e-9);
    }
}

#[test]
fn maximally_entangled_target_distills_perfectly() {
    // a Bell pair between A and C: ρ_A is maximally mixed, so ε = 0 at d' = d_A
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let bell = PureState::new(vec![2, 2], vec![C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).unwrap();
    let d = distill(&bell, &[0], 2, 16, &mut rng::from_seed(1)).unwrap();
    assert!(d.eps_estimate < 1e-12);
    let product = PureState::new(vec![2, 2], vec![C64::new(1.0, 0.0), z, z, z]).unwrap();
    let d = distill(&product, &[0], 2, 16, &mut rng::from_seed(1)).unwrap();
    // ‖|0⟩⟨0| − I/2‖₁ = 1 for every rotation
    assert!((d.eps_estimate - 1.0).abs() < 1e-9);
}

#[test]
fn preparation_is_deterministic() {
    let lat = SiteLattice::square(3, 2).unwrap();
    let spec = CircuitSpec::plaquette(lat, 2, 2, 9);
    let a = prepare_with_seed(&spec, 77).unwrap();
    let b = prepare_with_seed(&spec, 77).unwrap();
    assert_eq!(a.amplitudes(), b.amplitudes());
    assert!((a.norm() - 1.0).abs() < 1e-12);
}
