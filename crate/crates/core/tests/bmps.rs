use mie_core::bmps::{
    contract_bmps, right_environment, sample_random_tn, sebd_sample, GridNetwork, SebdSampler, SweepDirection, TensorMode,
    TruncationPolicy,
};
use mie_core::lattice::SiteLattice;
use mie_core::rng;
use mie_core::statevec::{prepare_with_seed, CircuitSpec};
use mie_core::C64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn max_entangled(chi: usize) -> Vec<C64> {
    let mut w = vec![C64::new(0.0, 0.0); chi * chi];
    for a in 0..chi {
        w[a * chi + a] = C64::new(1.0 / (chi as f64).sqrt(), 0.0);
    }
    w
}

/// Sum over every horizontal and vertical bond index of the product of all
/// site tensors.
fn oracle_contract(net: &GridNetwork) -> C64 {
    let (w, h) = (net.width, net.height);
    let h_dim = |x: usize, y: usize| net.tensor(x, y).dims[2];
    let v_dim = |x: usize, y: usize| net.tensor(x, y).dims[3];
    let mut bonds: Vec<usize> = Vec::new();
    for y in 0..h {
        for x in 0..w - 1 {
            bonds.push(h_dim(x, y));
        }
    }
    for y in 0..h - 1 {
        for x in 0..w {
            bonds.push(v_dim(x, y));
        }
    }
    let horiz = |x: usize, y: usize| y * (w - 1) + x;
    let vert = |x: usize, y: usize| h * (w - 1) + y * w + x;
    let mut idx = vec![0usize; bonds.len()];
    let mut total = C64::new(0.0, 0.0);
    loop {
        let mut prod = C64::new(1.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let l = if x > 0 { idx[horiz(x - 1, y)] } else { 0 };
                let r = if x + 1 < w { idx[horiz(x, y)] } else { 0 };
                let u = if y > 0 { idx[vert(x, y - 1)] } else { 0 };
                let d = if y + 1 < h { idx[vert(x, y)] } else { 0 };
                prod *= net.tensor(x, y).get(l, u, r, d);
            }
        }
        total += prod;
        let Some(k) = (0..bonds.len()).rev().find(|&k| idx[k] + 1 < bonds[k]) else { break };
        idx[k] += 1;
        for j in k + 1..bonds.len() {
            idx[j] = 0;
        }
    }
    total
}

fn loose(chi_max: usize) -> TruncationPolicy {
    TruncationPolicy::new(chi_max, 0.0, f64::INFINITY).unwrap()
}

#[test]
fn exact_contraction_matches_loop_oracle() {
    for (w, h, chi) in [(2, 2, 2), (3, 2, 2), (2, 3, 3), (3, 3, 2), (4, 2, 2)] {
        let lat = SiteLattice::square(w, h).unwrap();
        for k in 0..3 {
            let mut r = rng::stream(21, (w * 100 + h * 10 + k) as u64);
            let mode = if k == 0 { TensorMode::Exact } else { TensorMode::Gaussian };
            let net = sample_random_tn(&lat, &max_entangled(chi), mode, &mut r).unwrap();
            let want = oracle_contract(&net);
            for dir in [SweepDirection::LeftToRight, SweepDirection::RightToLeft] {
                let got = contract_bmps(&net, &TruncationPolicy::exact(), dir).amplitude.unwrap();
                assert!((got - want).norm() <= 1e-10 * want.norm(), "{w}x{h} χ={chi}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn truncation_error_is_bounded_by_discarded_weight() {
    // each column's truncation moves the boundary state by at most
    // ‖ψ‖·Σ√w, and the rest of the network is a linear functional of norm
    // ‖right environment‖
    let lat = SiteLattice::square(4, 3).unwrap();
    for k in 0..8u64 {
        let net = sample_random_tn(&lat, &max_entangled(2), TensorMode::Gaussian, &mut rng::stream(22, k)).unwrap();
        let exact = contract_bmps(&net, &TruncationPolicy::exact(), SweepDirection::LeftToRight).amplitude.unwrap();
        // three rows of bond dimension two never need more than two, so cap at one
        let res = contract_bmps(&net, &loose(1), SweepDirection::LeftToRight);
        assert!(res.total_discarded > 0.0);
        let bound: f64 = res
            .profile
            .iter()
            .filter(|rec| rec.t < net.width)
            .map(|rec| {
                let env = right_environment(&net, rec.t);
                let env_norm = env.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                rec.log_norm.exp() * rec.delta * env_norm
            })
            .sum();
        let err = (exact - res.amplitude.unwrap()).norm();
        assert!(err <= bound * (1.0 + 1e-9) + 1e-12, "error {err} above bound {bound}");
    }
}

#[test]
fn single_site_network_is_a_complex_gaussian() {
    let lat = SiteLattice::square(1, 1).unwrap();
    let n = 20_000;
    let mut r = rng::from_seed(23);
    let (mut mean, mut power) = (C64::new(0.0, 0.0), 0.0);
    for _ in 0..n {
        let net = sample_random_tn(&lat, &max_entangled(2), TensorMode::Gaussian, &mut r).unwrap();
        let z = contract_bmps(&net, &TruncationPolicy::exact(), SweepDirection::LeftToRight).amplitude.unwrap();
        mean += z;
        power += z.norm_sqr();
    }
    mean /= n as f64;
    power /= n as f64;
    // E z = 0 with Var = 1/n per component pair, E|z|² = 1 with Var 1/n
    let sigma = (1.0 / n as f64).sqrt();
    assert!(mean.norm() < 5.0 * sigma, "mean {mean}");
    assert!((power - 1.0).abs() < 5.0 * sigma, "power {power}");
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn truncated_sweeps_agree_in_distribution_across_directions() {
    // the Gaussian ensemble is mirror symmetric, so the truncated amplitude
    // distribution cannot depend on the sweep direction
    let lat = SiteLattice::square(4, 4).unwrap();
    let n = 400;
    let run = |dir, salt: u64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let net = sample_random_tn(&lat, &max_entangled(2), TensorMode::Gaussian, &mut rng::stream(salt, i)).unwrap();
                contract_bmps(&net, &loose(2), dir).log_abs_amplitude.unwrap()
            })
            .collect()
    };
    let d = ks_statistic(run(SweepDirection::LeftToRight, 24), run(SweepDirection::RightToLeft, 25));
    // two-sample critical value at α = 0.001
    let crit = 1.949 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS statistic {d} above {crit}");
}

fn born_index(outcome: &[usize], dims: &[usize]) -> usize {
    outcome.iter().zip(dims).fold(0, |acc, (&o, &d)| acc * d + o)
}

#[test]
fn sebd_reproduces_born_distribution() {
    for (w, h) in [(3, 1), (2, 2)] {
        let lat = SiteLattice::square(w, h).unwrap();
        let spec = CircuitSpec::holographic(lat, max_entangled(2), 0);
        let circuit_seed = 31;
        let dims = spec.site_dims().unwrap();
        let born: Vec<f64> = prepare_with_seed(&spec, circuit_seed).unwrap().amplitudes().iter().map(|a| a.norm_sqr()).collect();
        let sampler = SebdSampler::new(&spec, circuit_seed, TruncationPolicy::exact()).unwrap();
        let n = 20_000;
        let mut counts = vec![0usize; born.len()];
        let mut r = rng::from_seed(32);
        for _ in 0..n {
            let s = sampler.sample(&mut r);
            let outcome = s.outcome.unwrap();
            let k = born_index(&outcome, &dims);
            assert!((s.log_probability - born[k].ln()).abs() < 1e-9);
            counts[k] += 1;
        }
        let tv: f64 = counts.iter().zip(&born).map(|(&c, &p)| (c as f64 / n as f64 - p).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.05, "{w}x{h}: TV {tv}");
    }
}

fn chi_square_p(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn circuit_averaged_outcomes_are_uniform() {
    // averaging the Born rule over Haar site unitaries leaves every outcome
    // equally likely
    let lat = SiteLattice::square(2, 1).unwrap();
    let spec = CircuitSpec::holographic(lat.clone(), max_entangled(2), 0);
    let dims = spec.site_dims().unwrap();
    let n_out: usize = dims.iter().product();
    let n = 4000;
    let mut exact = vec![0usize; n_out];
    let mut sebd = vec![0usize; n_out];
    let mut r = rng::from_seed(33);
    for _ in 0..n {
        let net = sample_random_tn(&lat, &max_entangled(2), TensorMode::Exact, &mut r).unwrap();
        exact[born_index(net.outcome.as_ref().unwrap(), &dims)] += 1;
        let s = sebd_sample(&spec, &TruncationPolicy::exact(), &mut r).unwrap();
        sebd[born_index(s.outcome.as_ref().unwrap(), &dims)] += 1;
    }
    for (name, counts) in [("exact", &exact), ("sebd", &sebd)] {
        let p = chi_square_p(counts);
        assert!(p > 1e-3, "{name}: p = {p}, counts {counts:?}");
    }
}

#[test]
fn bond_dimension_one_aborts_on_entangled_networks() {
    let lat = SiteLattice::square(4, 4).unwrap();
    let net = sample_random_tn(&lat, &max_entangled(2), TensorMode::Gaussian, &mut rng::from_seed(34)).unwrap();
    let res = contract_bmps(&net, &TruncationPolicy::with_chi_max(1), SweepDirection::LeftToRight);
    assert!(res.aborted() && res.amplitude.is_none());
    let rec = res.profile.last().unwrap();
    assert!(rec.max_demanded > 1 && rec.discarded > 1e-3);
}
