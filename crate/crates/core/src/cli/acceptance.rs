//! The acceptance suite behind `mielab selfcheck`: nine criteria, each run
//! at fixed seeds and reported as one pass/fail line.

use rand::Rng as _;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{run_with_threads, Command, ExperimentConfig, Format};
use crate::bmps::{contract_bmps, contract_exhaustive, sample_random_tn, GridNetwork, SiteTensor, SweepDirection, TensorMode, TruncationPolicy};
use crate::bounds::{
    advantage_premise_check, separate_terms_bound, crude_threshold_q, holographic_threshold, honeycomb_mu,
    distillation_entropy_bound, wall_sum_eps_bound, markov_concentration, mie_lower_bound, Architecture, SQUARE_MU_LOG_UPPER,
};
use crate::lattice::{CellLattice, DualGraph, RegionPartition, SiteLattice};
use crate::linalg::complex_gaussian;
use crate::quasientropy::{quasientropy, IsingInstance};
use crate::rng;
use crate::saw::{count_rooted_polygons, count_rooted_walks, partition_function, WalkCounts, WalkLattice, WeightModel};
use crate::stabilizer::{random_clifford, tripartite_shape, Tableau};
use crate::statevec::{
    distill, local_indices, measure_sampled, mie_exact, prepare, strict_locality_check, swap_trick_moments, CircuitSpec,
    EntropyOrder, Povm, PureState,
};
use crate::C64;

pub const ALL: [u32; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// One printable line per criterion.
pub fn line(r: &CriterionResult) -> String {
    format!("criterion {} [{}] {}: {}", r.id, if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail)
}

pub fn run_criterion(id: u32) -> CriterionResult {
    let (name, outcome): (&'static str, Result<(bool, String), String>) = match id {
        1 => ("threshold constants", thresholds()),
        2 => ("walk enumeration", walk_enumeration()),
        3 => ("certified wall sum", certified_wall_sum()),
        4 => ("inequality chain", inequality_chain()),
        5 => ("replica oracle identity", replica_identity()),
        6 => ("strict locality", strict_locality()),
        7 => ("stabilizer suite", stabilizer_suite()),
        8 => ("boundary MPS suite", boundary_mps_suite()),
        9 => ("determinism", determinism()),
        _ => ("unknown", Err(format!("no criterion {id}"))),
    };
    match outcome {
        Ok((pass, detail)) => CriterionResult { id, name, pass, detail },
        Err(e) => CriterionResult { id, name, pass: false, detail: format!("error: {e}") },
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn square(w: usize, h: usize) -> Result<SiteLattice, String> {
    SiteLattice::square(w, h).map_err(err)
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Diagonal bond state with the given Schmidt probabilities.
fn schmidt_bond(probs: &[f64]) -> Vec<C64> {
    let chi = probs.len();
    let total: f64 = probs.iter().sum();
    let mut w = vec![C64::new(0.0, 0.0); chi * chi];
    for (k, p) in probs.iter().enumerate() {
        w[k * chi + k] = C64::new((p / total).sqrt(), 0.0);
    }
    w
}

fn thresholds() -> Result<(bool, String), String> {
    let th = holographic_threshold(SQUARE_MU_LOG_UPPER);
    let round2 = |x: f64| (x * 100.0).round() / 100.0;
    let near = |x: f64, want: f64| (x - want).abs() <= 1e-4;
    let brickwork = crude_threshold_q(Architecture::BrickworkD4, 1_000_000);
    let m6 = advantage_premise_check(6, SQUARE_MU_LOG_UPPER);
    let m5 = advantage_premise_check(5, SQUARE_MU_LOG_UPPER);
    let pass = round2(th.s_crit_nats) == 1.94
        && round2(th.s_crit_bits) == 2.80
        && th.chi_crit == 7
        && brickwork == Some(419_479)
        && m6.pass
        && near(m6.lhs, 2.0794)
        && near(m6.rhs, 2.0686)
        && near(m6.nu, 0.3298)
        && !m5.pass;
    Ok((
        pass,
        format!(
            "S_crit = {:.2} nats = {:.2} bits, chi_crit = {}, brickwork q = {:?}, m=6: {:.4} >= {:.4}, nu = {:.6}, m=5 passes: {}",
            th.s_crit_nats, th.s_crit_bits, th.chi_crit, brickwork, m6.lhs, m6.rhs, m6.nu, m5.pass
        ),
    ))
}

fn walk_enumeration() -> Result<(bool, String), String> {
    let c: Vec<u64> = (0..=10).map(|n| count_rooted_walks(WalkLattice::Square, n)).collect();
    let mut submult = true;
    for m in 1..10 {
        for n in 1..=10 - m {
            submult &= c[m + n] <= c[m] * c[n];
        }
    }
    let hex = WalkCounts::standard(WalkLattice::Hexagonal);
    let mu_hex = honeycomb_mu();
    let hex_ok = (1..=hex.block()).all(|k| {
        let ck = count_rooted_walks(WalkLattice::Hexagonal, k) as f64;
        ck.powf(1.0 / k as f64) >= mu_hex - 1e-12
    });
    let mut polygons_ok = true;
    let mut worst = 0.0f64;
    for l in (4..=14).step_by(2) {
        let p = count_rooted_polygons(WalkLattice::Square, l).map_err(err)? as f64;
        let cap = (SQUARE_MU_LOG_UPPER * l as f64).exp();
        polygons_ok &= p <= cap;
        worst = worst.max(p / cap);
    }
    Ok((
        submult && hex_ok && polygons_ok,
        format!(
            "square c_1..c_10 = {:?} submultiplicative: {submult}; hexagonal c_k^(1/k) >= sqrt(2+sqrt2) for k <= {}: {hex_ok}; \
             square polygons l = 4..14 max c_l/e^(0.97 l) = {worst:.4}",
            &c[1..],
            hex.block()
        ),
    ))
}

fn certified_wall_sum() -> Result<(bool, String), String> {
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut n = 0;
    for (w, h) in [(4, 2), (4, 3), (5, 2), (5, 3), (6, 2), (6, 3)] {
        let lat = square(w, h)?;
        let part = RegionPartition::strip(&lat).map_err(err)?;
        let dual = DualGraph::planar(&lat);
        for beta in [1.5, 2.0, 3.0] {
            let z = partition_function(&dual, &part, &WeightModel::PerEdge { beta }, 10);
            let cap = h as f64 * (-(beta - SQUARE_MU_LOG_UPPER) * w as f64).exp();
            pass &= z.certified && z.total_upper <= cap * (1.0 + 1e-9);
            worst = worst.max(z.total_upper / cap);
            n += 1;
        }
    }
    Ok((pass, format!("{n} strips, max total_upper / (L_y e^(-(beta - 0.97) L_x)) = {worst:.4}")))
}

struct ChainTally {
    instances: usize,
    outcomes: usize,
    entropy_violations: usize,
    eps_violations: usize,
    markov_checked: usize,
    markov_violations: usize,
    mie_bound_valid: usize,
    mie_bound_violations: usize,
    worst_eps_ratio: f64,
}

const CHAIN_SEED: u64 = 4;
const CHAIN_INSTANCES: usize = 24;
const CHAIN_CIRCUITS: usize = 6;
const CHAIN_OUTCOMES: usize = 4;
const CHAIN_UNITARIES: usize = 24;
/// Largest bond-product dimension simulated per instance.
const CHAIN_MAX_DIM: f64 = (1u64 << 20) as f64;

fn inequality_chain() -> Result<(bool, String), String> {
    let shapes = [(2, 1), (3, 1), (2, 2), (3, 2)];
    let mut t = ChainTally {
        instances: 0,
        outcomes: 0,
        entropy_violations: 0,
        eps_violations: 0,
        markov_checked: 0,
        markov_violations: 0,
        mie_bound_valid: 0,
        mie_bound_violations: 0,
        worst_eps_ratio: 0.0,
    };
    let mut k = 0u64;
    while t.instances < CHAIN_INSTANCES {
        let mut r = rng::stream(CHAIN_SEED, k);
        k += 1;
        let (w, h) = shapes[r.random_range(0..shapes.len())];
        let chi: usize = r.random_range(2..=4);
        let lat = square(w, h)?;
        if (chi as f64).powi(2 * lat.edges.len() as i32) > CHAIN_MAX_DIM {
            continue;
        }
        let probs: Vec<f64> = (0..chi).map(|_| r.random_range(0.05..1.0)).collect();
        chain_instance(lat, &schmidt_bond(&probs), &mut r, &mut t)?;
        t.instances += 1;
    }
    // wide bonds on a single edge push the wall sum below e^-2, where the
    // MIE lower bound is nontrivial
    for chi in [64, 128] {
        let mut r = rng::stream(CHAIN_SEED, 1000 + chi as u64);
        chain_instance(square(2, 1)?, &schmidt_bond(&vec![1.0; chi]), &mut r, &mut t)?;
        t.instances += 1;
    }
    let pass = t.entropy_violations == 0 && t.eps_violations == 0 && t.markov_violations == 0 && t.mie_bound_violations == 0;
    Ok((
        pass,
        format!(
            "{} instances, {} outcomes: per-outcome entropy bound violations {}, mean-error bound violations {} \
             (max eps/bound {:.3}), concentration violations {}/{}, MIE lower bound valid on {} instances with {} violations",
            t.instances,
            t.outcomes,
            t.entropy_violations,
            t.eps_violations,
            t.worst_eps_ratio,
            t.markov_violations,
            t.markov_checked,
            t.mie_bound_valid,
            t.mie_bound_violations
        ),
    ))
}

fn chain_instance(lat: SiteLattice, bond: &[C64], r: &mut rng::Rng, t: &mut ChainTally) -> Result<(), String> {
    let n = lat.n_sites();
    let part = if lat.height >= 2 {
        RegionPartition::half_chain(&lat).map_err(err)?
    } else {
        RegionPartition::custom(n, vec![0], vec![n - 1]).map_err(err)?
    };
    let spec = CircuitSpec::holographic(lat.clone(), bond.to_vec(), r.random());
    let mut kept: Vec<usize> = part.a.iter().chain(&part.c).copied().collect();
    kept.sort_unstable();
    let a_local = local_indices(&kept, &part.a);
    let d_a: usize = part.a.iter().map(|&s| spec.site_dims().map_err(err).map(|d| d[s])).product::<Result<usize, _>>()?;
    let d_prime = d_a.min(4);
    let dp = d_prime as f64;

    let mut eps = Vec::new();
    let mut entropies = Vec::new();
    let mut mies = Vec::new();
    let mut first_state: Option<PureState> = None;
    for _ in 0..CHAIN_CIRCUITS {
        let state = prepare(&spec, r).map_err(err)?;
        for _ in 0..CHAIN_OUTCOMES {
            let e = measure_sampled(&state, &part.b, Povm::Computational, r);
            let d = distill(&e.post_state, &a_local, d_prime, CHAIN_UNITARIES, r).map_err(err)?;
            let s = e.post_state.entropy(&a_local, EntropyOrder::Vn);
            let eps_hi = (d.eps_estimate + 3.0 * d.stderr).min(2.0);
            if s < distillation_entropy_bound(eps_hi, dp).map_err(err)? - 1e-9 {
                t.entropy_violations += 1;
            }
            eps.push(d.eps_estimate);
            entropies.push(s);
            t.outcomes += 1;
        }
        mies.push(mie_exact(&state, &part, EntropyOrder::Vn).map_err(err)?);
        first_state.get_or_insert(state);
    }
    let state = first_state.expect("at least one circuit");
    // bond entropies fix every Rényi-2 value, so any circuit gives the same Z
    let s2 = |region: &[usize]| state.entropy(region, EntropyOrder::Renyi2);
    let dual = DualGraph::planar(&lat);
    let z = partition_function(&dual, &part, &WeightModel::EntropyDriven(&s2), dual.n_vertices()).total_upper;

    let (eps_bar, sigma) = mean_stderr(&eps);
    let bound = wall_sum_eps_bound(z, dp);
    if eps_bar > bound + 3.0 * sigma {
        t.eps_violations += 1;
    }
    t.worst_eps_ratio = t.worst_eps_ratio.max(eps_bar / bound);

    if d_prime > 2 {
        let delta = 0.5 * (dp.ln() + std::f64::consts::LN_2);
        let cap = markov_concentration(eps_bar + 3.0 * sigma, dp, delta).map_err(err)?;
        let m = entropies.len() as f64;
        let frac = entropies.iter().filter(|&&s| s < dp.ln() - delta).count() as f64 / m;
        let slack = 3.0 * (cap.max(1.0 / m) * (1.0 - cap).max(1.0 / m) / m).sqrt();
        t.markov_checked += 1;
        if frac > cap + slack {
            t.markov_violations += 1;
        }
    }

    let report = mie_lower_bound(z);
    if report.valid {
        t.mie_bound_valid += 1;
        let (mie, mie_sigma) = mean_stderr(&mies);
        if mie < report.mie_lower_nats - 3.0 * mie_sigma {
            t.mie_bound_violations += 1;
        }
    }
    Ok(())
}

fn replica_identity() -> Result<(bool, String), String> {
    const SAMPLES: usize = 2000;
    let d_prime = 2.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for (w, h) in [(2, 2), (2, 3)] {
        let lat = square(w, h)?;
        let part = RegionPartition::half_chain(&lat).map_err(err)?;
        let chi = 2usize;
        let bond = schmidt_bond(&vec![1.0; chi]);
        let s_e = (chi as f64).ln();
        let dims: Vec<usize> = (0..lat.n_sites()).map(|s| chi.pow(lat.degree(s) as u32)).collect();
        let q = quasientropy(&IsingInstance::holographic(&lat, part.clone(), dims, s_e)).map_err(err)?;
        let spec = CircuitSpec::holographic(lat.clone(), bond, rng::stream_seed(5, (w * 10 + h) as u64));
        let mc = swap_trick_moments(&spec, &part, SAMPLES).map_err(err)?;
        let within = |exact: f64, est: f64, sigma: f64| (exact - est).abs() <= 3.0 * sigma + 1e-12 * exact.abs();
        let num_ok = within(q.numerator, mc.numerator, mc.numerator_stderr);
        let den_ok = within(q.denominator, mc.denominator, mc.denominator_stderr);

        let dual = DualGraph::planar(&lat);
        let z_saw = partition_function(&dual, &part, &WeightModel::PerEdge { beta: s_e / 2.0 }, dual.n_vertices()).total_upper;
        let separate = separate_terms_bound(d_prime, q.z_mp);
        let wall = wall_sum_eps_bound(z_saw, d_prime);
        // the comparison is informative only where the wall bound is itself below 1
        let comparison_ok = separate > 1.0 && (wall >= 1.0 || wall < separate);
        pass &= num_ok && den_ok && comparison_ok;
        parts.push(format!(
            "{w}x{h}: numerator {:.6} vs {:.6}±{:.1e}, denominator {:.6} vs {:.6}±{:.1e}, sqrt(d' Z-+) = {separate:.3}, wall-sum bound = {wall:.3}{}",
            q.numerator, mc.numerator, mc.numerator_stderr, q.denominator, mc.denominator, mc.denominator_stderr,
            if wall >= 1.0 { " (also vacuous, comparison not applicable)" } else { "" }
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn strict_locality() -> Result<(bool, String), String> {
    let lat = square(16, 8)?;
    let spec = CircuitSpec::plaquette(lat.clone(), 2, 2, 42);
    let full = CellLattice::new(&lat, 2).map_err(err)?;
    let half = CellLattice::with_shape(&lat, 2, (4, 2)).map_err(err)?;
    let dev_full = strict_locality_check(&spec, &full).map_err(err)?;
    let dev_half = strict_locality_check(&spec, &half).map_err(err)?;
    Ok((
        dev_full < 1e-9 && dev_half > 0.1,
        format!("8x4 cells: deviation {dev_full:.2e}; 4x2 cells: deviation {dev_half:.3}"),
    ))
}

fn random_tableau(n: usize, r: &mut rng::Rng) -> Tableau {
    let mut t = Tableau::zero_state(n);
    for _ in 0..3 * n {
        let k = r.random_range(1..=3.min(n));
        let mut qs: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = r.random_range(i..n);
            qs.swap(i, j);
        }
        qs.truncate(k);
        t.apply(&random_clifford(k, r), &qs);
    }
    t
}

fn stabilizer_suite() -> Result<(bool, String), String> {
    let mut dense_mismatch = 0;
    let mut r = rng::stream(7, 0);
    for _ in 0..200 {
        let n = r.random_range(2..=14);
        let t = random_tableau(n, &mut r);
        let state = PureState::new(vec![2; n], t.to_dense(&mut r)).map_err(err)?;
        let size = r.random_range(1..=n / 2);
        let mut region: Vec<usize> = (0..n).collect();
        for i in 0..size {
            let j = r.random_range(i..n);
            region.swap(i, j);
        }
        region.truncate(size);
        region.sort_unstable();
        if (state.entropy(&region, EntropyOrder::Vn) - t.region_entropy(&region)).abs() > 1e-8 {
            dense_mismatch += 1;
        }
    }

    let mut shape_mismatch = 0;
    let mut r = rng::stream(7, 1);
    for _ in 0..10_000 {
        let n = r.random_range(3..=12);
        let t = random_tableau(n, &mut r);
        let (mut h, mut i, mut j) = (vec![0], vec![1], vec![2]);
        for q in 3..n {
            [&mut h, &mut i, &mut j][r.random_range(0..3)].push(q);
        }
        let union = |a: &[usize], b: &[usize]| a.iter().chain(b).copied().collect::<Vec<_>>();
        let want = [
            t.entropy_bits(&h),
            t.entropy_bits(&i),
            t.entropy_bits(&j),
            t.entropy_bits(&union(&h, &i)),
            t.entropy_bits(&union(&h, &j)),
        ];
        match tripartite_shape(&t, &h, &i, &j) {
            Ok(s) if s.entropies() == want => {}
            _ => shape_mismatch += 1,
        }
    }

    let mut ghz = Tableau::zero_state(3);
    ghz.h(0);
    ghz.cnot(0, 1);
    ghz.cnot(0, 2);
    let g = tripartite_shape(&ghz, &[0], &[1], &[2]).map_err(err)?;
    let mut tri = Tableau::zero_state(6);
    for (a, b) in [(1, 2), (3, 4), (5, 0)] {
        tri.h(a);
        tri.cnot(a, b);
    }
    let b = tripartite_shape(&tri, &[0, 1], &[2, 3], &[4, 5]).map_err(err)?;
    let fixtures = (g.g, g.e_hi, g.e_hj, g.e_ij) == (1, 0, 0, 0) && (b.g, b.e_hi, b.e_hj, b.e_ij) == (0, 1, 1, 1);
    Ok((
        dense_mismatch == 0 && shape_mismatch == 0 && fixtures,
        format!(
            "dense mismatches {dense_mismatch}/200, shape mismatches {shape_mismatch}/10000, GHZ ({}, {}, {}, {}), Bell triangle ({}, {}, {}, {})",
            g.g, g.e_hi, g.e_hj, g.e_ij, b.g, b.e_hi, b.e_hj, b.e_ij
        ),
    ))
}

/// Gaussian network with random bond dimensions in `1..=3`.
fn oracle_network(w: usize, h: usize, r: &mut rng::Rng) -> Result<GridNetwork, String> {
    let horiz: Vec<usize> = (0..w * h).map(|_| r.random_range(1..=3)).collect();
    let vert: Vec<usize> = (0..w * h).map(|_| r.random_range(1..=3)).collect();
    let mut tensors = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let dims = [
                if x > 0 { horiz[y * w + x - 1] } else { 1 },
                if y > 0 { vert[(y - 1) * w + x] } else { 1 },
                if x + 1 < w { horiz[y * w + x] } else { 1 },
                if y + 1 < h { vert[y * w + x] } else { 1 },
            ];
            let data = (0..dims.iter().product::<usize>()).map(|_| complex_gaussian(r)).collect();
            tensors.push(SiteTensor::new(dims, data).map_err(err)?);
        }
    }
    GridNetwork::new(w, h, tensors).map_err(err)
}

fn boundary_mps_suite() -> Result<(bool, String), String> {
    let mut r = rng::stream(8, 0);
    let mut worst = 0.0f64;
    let mut n_nets = 0;
    for w in 1..=12usize {
        for h in 1..=12 / w {
            for _ in 0..3 {
                let net = oracle_network(w, h, &mut r)?;
                let exact = contract_exhaustive(&net);
                for dir in [SweepDirection::LeftToRight, SweepDirection::RightToLeft] {
                    let res = contract_bmps(&net, &TruncationPolicy::exact(), dir);
                    let amp = res.amplitude.ok_or("exact contraction aborted")?;
                    worst = worst.max((amp - exact).norm() / exact.norm());
                }
                n_nets += 1;
            }
        }
    }

    let entangled = schmidt_bond(&[1.0, 1.0]);
    let fixture = sample_random_tn(&square(4, 4)?, &entangled, TensorMode::Gaussian, &mut r).map_err(err)?;
    let aborts = contract_bmps(&fixture, &TruncationPolicy::with_chi_max(1), SweepDirection::LeftToRight).aborted();

    const RUNS: u64 = 50;
    let l = 8;
    let lat = square(l, l)?;
    let low = schmidt_bond(&[0.98, 0.02]);
    let policy = TruncationPolicy::with_chi_max(32);
    let entropy_at_half = |bond: &[C64], i: u64| -> Result<f64, String> {
        let net = sample_random_tn(&lat, bond, TensorMode::Gaussian, &mut rng::stream(88, i)).map_err(err)?;
        let res = contract_bmps(&net, &policy, SweepDirection::LeftToRight);
        Ok(res.profile.get(l / 2 - 1).ok_or("profile shorter than L_x/2")?.half_chain_entropy)
    };
    let mut diffs = Vec::with_capacity(RUNS as usize);
    let (mut hi_sum, mut lo_sum) = (0.0, 0.0);
    for i in 0..RUNS {
        let (hi, lo) = (entropy_at_half(&entangled, i)?, entropy_at_half(&low, i)?);
        hi_sum += hi;
        lo_sum += lo;
        diffs.push(hi - 2.0 * lo);
    }
    let (mean, se) = mean_stderr(&diffs);
    let t_stat = mean / se;
    let crit = StudentsT::new(0.0, 1.0, (RUNS - 1) as f64).map_err(err)?.inverse_cdf(0.95);
    let split = t_stat > crit;
    Ok((
        worst < 1e-8 && aborts && split,
        format!(
            "{n_nets} oracle networks, max relative error {worst:.1e}; chi_max = 1 aborts: {aborts}; \
             half-chain entropy at t = L_x/2: high {:.3}, low {:.3}, t = {t_stat:.2} vs {crit:.3}",
            hi_sum / RUNS as f64,
            lo_sum / RUNS as f64
        ),
    ))
}

fn determinism() -> Result<(bool, String), String> {
    let cfg = ExperimentConfig::default();
    let mut unstable = Vec::new();
    for cmd in Command::ALL.into_iter().filter(|&c| c != Command::Selfcheck) {
        let mut outputs = Vec::new();
        for threads in [1, 3, 1, 3] {
            let rep = run_with_threads(cmd, &cfg, Some(threads)).map_err(err)?;
            outputs.push((rep.render(Format::Json), rep.render(Format::Csv)));
        }
        if outputs.iter().any(|o| o != &outputs[0]) {
            unstable.push(cmd.name());
        }
    }
    let n = Command::ALL.len() - 1;
    Ok((unstable.is_empty(), format!("{n} subcommands x 4 runs at 1 and 3 threads; unstable: {unstable:?}")))
}
