//! Dense pure-state simulation of the circuit families, projective
//! measurement, projected-ensemble statistics and the distillation protocol.
//!
//! Amplitudes are stored row-major over sites: site 0 is the most
//! significant digit.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{CellLattice, RegionPartition, SiteLattice};
use crate::linalg::{haar_rows, haar_unitary, hermitian_eigenvalues, hermitize, kron, renyi2_entropy, trace_norm_hermitian, vn_entropy, CMat};
use crate::rng::{self, Rng};
use crate::C64;

/// Default cap on the number of amplitudes of a dense state.
pub const DEFAULT_DIM_CAP: usize = 1 << 26;
/// Exhaustive measurement enumerates at most this many measured dits.
pub const MAX_EXHAUSTIVE_DITS: usize = 20;
/// Outcomes with smaller probability are dropped from exhaustive ensembles.
const PROB_FLOOR: f64 = 1e-18;
/// Density clusters in the light-cone simulator are capped at this many sites.
const MAX_CLUSTER_SITES: usize = 12;

#[derive(Debug, Error)]
pub enum StatevecError {
    #[error("state dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: f64, cap: usize },
    #[error("exhaustive measurement of {0} dits refused (limit {MAX_EXHAUSTIVE_DITS})")]
    TooManyDits(usize),
    #[error("invalid bond state: {0}")]
    BondState(String),
    #[error("target dimension {d_prime} outside 1..={dim}")]
    DPrime { d_prime: usize, dim: usize },
    #[error("invalid state: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyOrder {
    Vn,
    Renyi2,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Reorders tensor axes: axis `k` of the result is axis `order[k]` of the input.
pub fn permute_tensor(data: &[C64], dims: &[usize], order: &[usize]) -> Vec<C64> {
    if order.iter().enumerate().all(|(k, &o)| k == o) {
        return data.to_vec();
    }
    let old = strides(dims);
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let src: Vec<usize> = order.iter().map(|&o| old[o]).collect();
    let n = dims.len();
    const BLOCK: usize = 1 << 12;
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        // decode the block start once, then step an odometer
        let mut digit = digits_of(b * BLOCK, &new_dims);
        let mut j: usize = (0..n).map(|k| digit[k] * src[k]).sum();
        for slot in chunk.iter_mut() {
            *slot = data[j];
            let mut k = n;
            while k > 0 {
                k -= 1;
                digit[k] += 1;
                j += src[k];
                if digit[k] < new_dims[k] {
                    break;
                }
                j -= new_dims[k] * src[k];
                digit[k] = 0;
            }
        }
    });
    out
}

#[cfg(test)]
fn inverse(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (k, &o) in order.iter().enumerate() {
        inv[o] = k;
    }
    inv
}

/// Applies `u` in place to the listed axes of a tensor (in the listed order).
fn apply_on_axes(data: &mut [C64], dims: &[usize], axes: &[usize], u: &CMat) {
    let st = strides(dims);
    let gdims: Vec<usize> = axes.iter().map(|&a| dims[a]).collect();
    let dg: usize = gdims.iter().product();
    assert_eq!(u.nrows(), dg, "gate dimension mismatch");
    let offsets: Vec<usize> = (0..dg)
        .map(|g| digits_of(g, &gdims).iter().zip(axes).map(|(d, &a)| d * st[a]).sum())
        .collect();
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !axes.contains(i)).collect();
    let rdims: Vec<usize> = rest.iter().map(|&r| dims[r]).collect();
    let rstr: Vec<usize> = rest.iter().map(|&r| st[r]).collect();
    let dr: usize = rdims.iter().product();
    let rows: Vec<C64> = (0..dg).flat_map(|i| (0..dg).map(move |j| (i, j))).map(|(i, j)| u[(i, j)]).collect();
    let mut buf = vec![C64::new(0.0, 0.0); dg];
    let mut digit = vec![0usize; rest.len()];
    let mut base = 0usize;
    for _ in 0..dr {
        for (b, &o) in buf.iter_mut().zip(&offsets) {
            *b = data[base + o];
        }
        for (i, &o) in offsets.iter().enumerate() {
            let row = &rows[i * dg..(i + 1) * dg];
            data[base + o] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
        }
        let mut k = rest.len();
        while k > 0 {
            k -= 1;
            digit[k] += 1;
            base += rstr[k];
            if digit[k] < rdims[k] {
                break;
            }
            base -= rdims[k] * rstr[k];
            digit[k] = 0;
        }
    }
}

/// Mixed-radix index of `digits` over `dims`.
fn flat_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

fn digits_of(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

/// Positions of `region` sites within the sorted site list `kept`.
pub fn local_indices(kept: &[usize], region: &[usize]) -> Vec<usize> {
    region.iter().filter_map(|s| kept.iter().position(|k| k == s)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self, StatevecError> {
        let dim: usize = dims.iter().product();
        if dim != amps.len() {
            return Err(StatevecError::Shape(format!("{} amplitudes for dimension {dim}", amps.len())));
        }
        let s = Self { dims, amps };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(StatevecError::Shape(format!("norm {norm}")));
        }
        Ok(s)
    }

    /// `|0…0⟩`.
    pub fn zero(dims: Vec<usize>) -> Self {
        let dim: usize = dims.iter().product();
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[0] = C64::new(1.0, 0.0);
        Self { dims, amps }
    }

    /// Tensor product of single-site vectors (each normalized by the caller).
    pub fn product(factors: &[Vec<C64>]) -> Self {
        let mut amps = vec![C64::new(1.0, 0.0)];
        for f in factors {
            amps = amps.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect();
        }
        Self { dims: factors.iter().map(|f| f.len()).collect(), amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn permuted(&self, order: &[usize]) -> PureState {
        PureState { dims: order.iter().map(|&o| self.dims[o]).collect(), amps: permute_tensor(&self.amps, &self.dims, order) }
    }

    /// Fuses consecutive sites into single sites with the given group sizes.
    pub fn regroup(self, group_sizes: &[usize]) -> PureState {
        assert_eq!(group_sizes.iter().sum::<usize>(), self.dims.len());
        let mut dims = Vec::with_capacity(group_sizes.len());
        let mut i = 0;
        for &g in group_sizes {
            dims.push(self.dims[i..i + g].iter().product());
            i += g;
        }
        PureState { dims, amps: self.amps }
    }

    pub fn apply(&mut self, sites: &[usize], u: &CMat) {
        apply_on_axes(&mut self.amps, &self.dims, sites, u);
    }

    /// Reshapes into a `dim(first) × dim(rest)` matrix; the remaining sites
    /// keep their relative order.
    pub fn split_matrix(&self, first: &[usize]) -> CMat {
        let rest: Vec<usize> = (0..self.n_sites()).filter(|i| !first.contains(i)).collect();
        let order: Vec<usize> = first.iter().chain(&rest).copied().collect();
        let p = permute_tensor(&self.amps, &self.dims, &order);
        let df: usize = first.iter().map(|&s| self.dims[s]).product();
        DMatrix::from_row_slice(df, self.dim() / df, &p)
    }

    pub fn reduced_density(&self, region: &[usize]) -> CMat {
        let m = self.split_matrix(region);
        &m * m.adjoint()
    }

    /// Nonzero spectrum of the reduced state, from whichever side is smaller.
    pub fn spectrum(&self, region: &[usize]) -> Vec<f64> {
        let m = self.split_matrix(region);
        let gram = if m.nrows() <= m.ncols() { &m * m.adjoint() } else { m.adjoint() * &m };
        hermitian_eigenvalues(&hermitize(&gram))
    }

    /// Entanglement entropy of `region` in nats; zero for empty or full regions.
    pub fn entropy(&self, region: &[usize], order: EntropyOrder) -> f64 {
        if region.is_empty() || region.len() == self.n_sites() {
            return 0.0;
        }
        let spec = self.spectrum(region);
        match order {
            EntropyOrder::Vn => vn_entropy(&spec),
            EntropyOrder::Renyi2 => renyi2_entropy(&spec),
        }
    }

    fn without(&self, sites: &[usize]) -> Vec<usize> {
        (0..self.n_sites()).filter(|i| !sites.contains(i)).map(|i| self.dims[i]).collect()
    }

    /// Projects `sites` onto computational `outcome`; returns the normalized
    /// post-measurement state on the other sites and the Born probability.
    pub fn project(&self, sites: &[usize], outcome: &[usize]) -> (Option<PureState>, f64) {
        let m = self.split_matrix(sites);
        let row = flat_index(outcome, &sites.iter().map(|&s| self.dims[s]).collect::<Vec<_>>());
        let v: Vec<C64> = m.row(row).iter().copied().collect();
        let p: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if p <= PROB_FLOOR {
            return (None, p);
        }
        let s = 1.0 / p.sqrt();
        (Some(PureState { dims: self.without(sites), amps: v.into_iter().map(|a| a * s).collect() }), p)
    }

    /// Outcome distribution of measuring one site.
    pub fn site_marginal(&self, site: usize) -> Vec<f64> {
        let d = self.dims[site];
        let stride = strides(&self.dims)[site];
        let mut p = vec![0.0; d];
        for (i, a) in self.amps.iter().enumerate() {
            p[(i / stride) % d] += a.norm_sqr();
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitFamily {
    Holographic,
    Plaquette4Local,
    Brickwork,
}

#[derive(Debug, Clone)]
pub struct CircuitSpec {
    pub family: CircuitFamily,
    pub lattice: SiteLattice,
    /// Local qudit dimension (plaquette and brickwork).
    pub q: usize,
    pub depth: usize,
    /// Normalized vector on `χ²` placed on every edge (holographic only).
    pub bond_state: Option<Vec<C64>>,
    pub seed: u64,
    /// Shifts the gate grid by whole layers; strict-locality checks scan it.
    pub schedule_offset: usize,
    pub dim_cap: usize,
}

impl CircuitSpec {
    pub fn holographic(lattice: SiteLattice, bond_state: Vec<C64>, seed: u64) -> Self {
        Self {
            family: CircuitFamily::Holographic,
            lattice,
            q: 0,
            depth: 1,
            bond_state: Some(bond_state),
            seed,
            schedule_offset: 0,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    pub fn plaquette(lattice: SiteLattice, q: usize, depth: usize, seed: u64) -> Self {
        Self {
            family: CircuitFamily::Plaquette4Local,
            lattice,
            q,
            depth,
            bond_state: None,
            seed,
            schedule_offset: 0,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    pub fn brickwork(lattice: SiteLattice, q: usize, depth: usize, seed: u64) -> Self {
        Self { family: CircuitFamily::Brickwork, ..Self::plaquette(lattice, q, depth, seed) }
    }

    /// Bond dimension `χ` of a holographic spec.
    pub fn chi(&self) -> Result<usize, StatevecError> {
        let w = self.bond_state.as_ref().ok_or_else(|| StatevecError::BondState("missing".into()))?;
        let chi = (w.len() as f64).sqrt().round() as usize;
        if chi * chi != w.len() || chi == 0 {
            return Err(StatevecError::BondState(format!("length {} is not a square", w.len())));
        }
        let norm: f64 = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(StatevecError::BondState(format!("norm {norm}")));
        }
        Ok(chi)
    }

    /// Per-site Hilbert dimensions of the prepared state.
    pub fn site_dims(&self) -> Result<Vec<usize>, StatevecError> {
        match self.family {
            CircuitFamily::Holographic => {
                let chi = self.chi()?;
                Ok((0..self.lattice.n_sites()).map(|s| chi.pow(self.lattice.degree(s) as u32)).collect())
            }
            _ => Ok(vec![self.q; self.lattice.n_sites()]),
        }
    }

    /// Number of distinct gate-grid placements.
    pub fn schedule_period(&self) -> usize {
        match self.family {
            CircuitFamily::Holographic => 1,
            CircuitFamily::Plaquette4Local => 2,
            CircuitFamily::Brickwork => 4,
        }
    }

    /// Gate supports, layer by layer, in application order.
    pub fn layers(&self) -> Vec<Vec<Vec<usize>>> {
        let lat = &self.lattice;
        let (w, h) = (lat.width as i64, lat.height as i64);
        let site = |x: i64, y: i64| lat.site(x as usize, y as usize);
        match self.family {
            CircuitFamily::Holographic => vec![(0..lat.n_sites()).map(|s| vec![s]).collect()],
            CircuitFamily::Plaquette4Local => (0..self.depth)
                .map(|t| {
                    // the last layer sits on even corners at offset 0
                    let o = ((self.depth - 1 - t + self.schedule_offset) % 2) as i64;
                    let mut layer = Vec::new();
                    let mut y0 = -o;
                    while y0 < h {
                        let mut x0 = -o;
                        while x0 < w {
                            let mut g = Vec::new();
                            for y in y0.max(0)..(y0 + 2).min(h) {
                                for x in x0.max(0)..(x0 + 2).min(w) {
                                    g.push(site(x, y));
                                }
                            }
                            if !g.is_empty() {
                                layer.push(g);
                            }
                            x0 += 2;
                        }
                        y0 += 2;
                    }
                    layer
                })
                .collect(),
            CircuitFamily::Brickwork => (0..self.depth)
                .map(|t| {
                    let pattern = (t + self.schedule_offset) % 4;
                    let mut layer = Vec::new();
                    for y in 0..h {
                        for x in 0..w {
                            let (nx, ny, par) = match pattern {
                                0 => (x + 1, y, x % 2 == 0),
                                1 => (x + 1, y, x % 2 == 1),
                                2 => (x, y + 1, y % 2 == 0),
                                _ => (x, y + 1, y % 2 == 1),
                            };
                            if par && nx < w && ny < h {
                                layer.push(vec![site(x, y), site(nx, ny)]);
                            }
                        }
                    }
                    layer
                })
                .collect(),
        }
    }
}

/// Haar unitary of gate number `gate` in the circuit drawn with `circuit_seed`.
pub(crate) fn gate_unitary(circuit_seed: u64, gate: usize, dim: usize) -> CMat {
    haar_unitary(dim, &mut rng::stream(circuit_seed, gate as u64))
}

/// Product of bond states, one per edge, with each site's legs fused in
/// increasing edge order.
pub fn bond_product_state(lattice: &SiteLattice, bond_state: &[C64]) -> Result<PureState, StatevecError> {
    let chi = (bond_state.len() as f64).sqrt().round() as usize;
    let n_legs = 2 * lattice.edges.len();
    let dim = (chi as f64).powi(n_legs as i32);
    if dim > DEFAULT_DIM_CAP as f64 {
        return Err(StatevecError::DimensionCap { dim, cap: DEFAULT_DIM_CAP });
    }
    let factors: Vec<Vec<C64>> = vec![bond_state.to_vec(); lattice.edges.len()];
    let legs = PureState::product(&factors);
    let legs = PureState { dims: vec![chi; n_legs], amps: legs.amps };
    let incident = lattice.incident_edges();
    let mut order = Vec::with_capacity(n_legs);
    let mut groups = Vec::with_capacity(lattice.n_sites());
    for (s, inc) in incident.iter().enumerate() {
        for &e in inc {
            order.push(if lattice.edges[e].0 == s { 2 * e } else { 2 * e + 1 });
        }
        groups.push(inc.len());
    }
    let grouped = legs.permuted(&order);
    // isolated sites carry a trivial factor
    let mut dims = Vec::new();
    let mut i = 0;
    for &g in &groups {
        dims.push(grouped.dims[i..i + g].iter().product());
        i += g;
    }
    Ok(PureState { dims, amps: grouped.amps })
}

/// Prepares the circuit state with gates drawn from `circuit_seed`.
pub fn prepare_with_seed(spec: &CircuitSpec, circuit_seed: u64) -> Result<PureState, StatevecError> {
    let dims = spec.site_dims()?;
    let dim: f64 = dims.iter().map(|&d| d as f64).product();
    if dim > spec.dim_cap as f64 {
        return Err(StatevecError::DimensionCap { dim, cap: spec.dim_cap });
    }
    let mut state = match spec.family {
        CircuitFamily::Holographic => bond_product_state(&spec.lattice, spec.bond_state.as_ref().unwrap())?,
        _ => PureState::zero(dims),
    };
    let mut k = 0;
    for layer in spec.layers() {
        for g in layer {
            let d: usize = g.iter().map(|&s| state.dims[s]).product();
            state.apply(&g, &gate_unitary(circuit_seed, k, d));
            k += 1;
        }
    }
    Ok(state)
}

pub fn prepare(spec: &CircuitSpec, rng: &mut Rng) -> Result<PureState, StatevecError> {
    prepare_with_seed(spec, rng.random())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Povm {
    /// Computational basis.
    Computational,
    /// A fresh Haar rotation per site followed by the computational basis.
    HaarRotated,
}

#[derive(Debug, Clone)]
pub struct EnsembleSample {
    pub outcome: Vec<usize>,
    pub probability: f64,
    /// State on the unmeasured sites, in their original order.
    pub post_state: PureState,
}

fn rotate(state: &PureState, b: &[usize], povm: Povm, rng: &mut Rng) -> PureState {
    let mut s = state.clone();
    if povm == Povm::HaarRotated {
        for &site in b {
            let u = haar_unitary(s.dims[site], rng);
            s.apply(&[site], &u);
        }
    }
    s
}

/// Every outcome of measuring `b`, with exact Born probabilities.
pub fn measure_exhaustive(state: &PureState, b: &[usize], povm: Povm, rng: &mut Rng) -> Result<Vec<EnsembleSample>, StatevecError> {
    if b.len() > MAX_EXHAUSTIVE_DITS {
        return Err(StatevecError::TooManyDits(b.len()));
    }
    if b.is_empty() {
        return Ok(vec![EnsembleSample { outcome: vec![], probability: 1.0, post_state: state.clone() }]);
    }
    let s = rotate(state, b, povm, rng);
    let m = s.split_matrix(b);
    let bdims: Vec<usize> = b.iter().map(|&i| s.dims[i]).collect();
    let rest = s.without(b);
    Ok((0..m.nrows())
        .filter_map(|r| {
            let v: Vec<C64> = m.row(r).iter().copied().collect();
            let p: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            (p > PROB_FLOOR).then(|| {
                let k = 1.0 / p.sqrt();
                EnsembleSample {
                    outcome: digits_of(r, &bdims),
                    probability: p,
                    post_state: PureState { dims: rest.clone(), amps: v.into_iter().map(|a| a * k).collect() },
                }
            })
        })
        .collect())
}

/// One Born-rule sample, drawn site by site.
pub fn measure_sampled(state: &PureState, b: &[usize], povm: Povm, rng: &mut Rng) -> EnsembleSample {
    let mut s = rotate(state, b, povm, rng);
    // original site labels of the current state's axes
    let mut labels: Vec<usize> = (0..state.n_sites()).collect();
    let mut outcome = Vec::with_capacity(b.len());
    let mut probability = 1.0;
    for &site in b {
        let pos = labels.iter().position(|&l| l == site).expect("site measured twice");
        let marg = s.site_marginal(pos);
        let total: f64 = marg.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut k = marg.len() - 1;
        for (i, &p) in marg.iter().enumerate() {
            if u < p {
                k = i;
                break;
            }
            u -= p;
        }
        let (post, p) = s.project(&[pos], &[k]);
        s = post.expect("sampled outcome has positive probability");
        probability *= p;
        outcome.push(k);
        labels.remove(pos);
    }
    EnsembleSample { outcome, probability, post_state: s }
}

/// Spec-level entry point: exhaustive or sampled measurement of `b`.
pub fn measure_region(
    state: &PureState,
    b: &[usize],
    povm: Povm,
    rng: &mut Rng,
    exhaustive: bool,
) -> Result<Vec<EnsembleSample>, StatevecError> {
    if exhaustive {
        measure_exhaustive(state, b, povm, rng)
    } else {
        Ok(vec![measure_sampled(state, b, povm, rng)])
    }
}

/// Exact average entanglement `Σ_s p_s S(ρ^A_s)` after measuring `B`.
pub fn mie_exact(state: &PureState, partition: &RegionPartition, order: EntropyOrder) -> Result<f64, StatevecError> {
    let mut rng = rng::from_seed(0);
    let ens = measure_exhaustive(state, &partition.b, Povm::Computational, &mut rng)?;
    let kept = unmeasured(partition);
    let a = local_indices(&kept, &partition.a);
    let mut terms: Vec<f64> = ens.iter().map(|e| e.probability * e.post_state.entropy(&a, order)).collect();
    terms.sort_by(|x, y| x.total_cmp(y));
    Ok(terms.iter().sum())
}

fn unmeasured(partition: &RegionPartition) -> Vec<usize> {
    let mut kept: Vec<usize> = partition.a.iter().chain(&partition.c).copied().collect();
    kept.sort_unstable();
    kept
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MieRecord {
    pub circuit_seed: u64,
    pub outcome_index: usize,
    pub p: f64,
    pub s_vn: f64,
    pub s_r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MieEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Upper edge of the histogram range (nats); bins are equal width.
    pub hist_max: f64,
    pub histogram: Vec<u64>,
    pub records: Vec<MieRecord>,
}

const HIST_BINS: usize = 20;

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo MIE: `n_circuits` circuits, `n_outcomes` Born samples each.
/// The standard error is taken over per-circuit means.
pub fn mie_monte_carlo(
    spec: &CircuitSpec,
    partition: &RegionPartition,
    n_circuits: usize,
    n_outcomes: usize,
) -> Result<MieEstimate, StatevecError> {
    let kept = unmeasured(partition);
    let a = local_indices(&kept, &partition.a);
    let per_circuit: Vec<Result<Vec<MieRecord>, StatevecError>> = (0..n_circuits)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(spec.seed, i as u64);
            let circuit_seed: u64 = rng.random();
            let state = prepare_with_seed(spec, circuit_seed)?;
            Ok((0..n_outcomes)
                .map(|j| {
                    let e = measure_sampled(&state, &partition.b, Povm::Computational, &mut rng);
                    let spec_a = e.post_state.spectrum(&a);
                    let (s_vn, s_r2) = if a.is_empty() || a.len() == kept.len() {
                        (0.0, 0.0)
                    } else {
                        (vn_entropy(&spec_a), renyi2_entropy(&spec_a))
                    };
                    MieRecord { circuit_seed, outcome_index: j, p: e.probability, s_vn, s_r2 }
                })
                .collect())
        })
        .collect();
    let mut records = Vec::new();
    let mut means = Vec::new();
    for r in per_circuit {
        let r = r?;
        means.push(r.iter().map(|x| x.s_vn).sum::<f64>() / r.len().max(1) as f64);
        records.extend(r);
    }
    let (mean, stderr) = if n_circuits > 1 {
        mean_stderr(&means)
    } else {
        mean_stderr(&records.iter().map(|r| r.s_vn).collect::<Vec<_>>())
    };
    let dims = spec.site_dims()?;
    let hist_max = partition.a.iter().map(|&s| (dims[s] as f64).ln()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut histogram = vec![0u64; HIST_BINS];
    for r in &records {
        let bin = ((r.s_vn / hist_max) * HIST_BINS as f64).floor().clamp(0.0, (HIST_BINS - 1) as f64) as usize;
        histogram[bin] += 1;
    }
    Ok(MieEstimate { mean, stderr, hist_max, histogram, records })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistillResult {
    pub eps_estimate: f64,
    pub stderr: f64,
    pub samples: Vec<f64>,
}

/// Distillation error of one post-measurement state. Each sample draws a
/// Haar isometry `L_V : C^{d'} → A` and evaluates
/// `(d_A/d') ‖L_V† ρ^A L_V − Tr(L_V† ρ^A L_V) π‖₁`, whose mean is the error
/// averaged over the random-unitary POVM on `A`.
pub fn distill(post_state: &PureState, a: &[usize], d_prime: usize, n_unitaries: usize, rng: &mut Rng) -> Result<DistillResult, StatevecError> {
    let rho = post_state.reduced_density(a);
    let d_a = rho.nrows();
    if d_prime == 0 || d_prime > d_a {
        return Err(StatevecError::DPrime { d_prime, dim: d_a });
    }
    let samples: Vec<f64> = (0..n_unitaries)
        .map(|_| {
            let l = haar_rows(d_prime, d_a, rng).adjoint();
            let block = hermitize(&(l.adjoint() * &rho * &l));
            let tr = block.trace().re;
            let target = CMat::identity(d_prime, d_prime) * C64::new(tr / d_prime as f64, 0.0);
            d_a as f64 / d_prime as f64 * trace_norm_hermitian(&(block - target))
        })
        .collect();
    let (eps_estimate, stderr) = mean_stderr(&samples);
    Ok(DistillResult { eps_estimate, stderr, samples })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleDistill {
    pub eps_bar: f64,
    pub stderr: f64,
    pub per_outcome: Vec<DistillResult>,
}

/// Born-weighted distillation error over an exhaustive ensemble.
pub fn distill_ensemble(
    ensemble: &[EnsembleSample],
    a: &[usize],
    d_prime: usize,
    n_unitaries: usize,
    rng: &mut Rng,
) -> Result<EnsembleDistill, StatevecError> {
    let mut per_outcome = Vec::with_capacity(ensemble.len());
    let (mut eps_bar, mut var) = (0.0, 0.0);
    for e in ensemble {
        let r = distill(&e.post_state, a, d_prime, n_unitaries, rng)?;
        eps_bar += e.probability * r.eps_estimate;
        var += (e.probability * r.stderr).powi(2);
        per_outcome.push(r);
    }
    Ok(EnsembleDistill { eps_bar, stderr: var.sqrt(), per_outcome })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SwapTrick {
    pub numerator: f64,
    pub numerator_stderr: f64,
    pub denominator: f64,
    pub denominator_stderr: f64,
    pub q2: f64,
}

/// `(Σ_s Tr[(ρ̃^A_s)²], Σ_s (Tr ρ̃_s)²)` for one state, exhaustively over `B`.
pub fn swap_trick_exact(state: &PureState, partition: &RegionPartition) -> Result<(f64, f64), StatevecError> {
    if partition.b.len() > MAX_EXHAUSTIVE_DITS {
        return Err(StatevecError::TooManyDits(partition.b.len()));
    }
    let kept = unmeasured(partition);
    let a = local_indices(&kept, &partition.a);
    let m = state.split_matrix(&partition.b);
    let rest = state.without(&partition.b);
    let (mut num, mut den) = (0.0, 0.0);
    for r in 0..m.nrows() {
        let v: Vec<C64> = m.row(r).iter().copied().collect();
        let p: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        den += p * p;
        if p > 0.0 {
            let sub = PureState { dims: rest.clone(), amps: v };
            let purity: f64 = if a.is_empty() {
                p * p
            } else {
                let g = sub.split_matrix(&a);
                let rho = &g * g.adjoint();
                rho.iter().map(|x| x.norm_sqr()).sum()
            };
            num += purity;
        }
    }
    Ok((num, den))
}

/// Monte-Carlo estimates of the replica-2 numerator and denominator over
/// random circuits, measured in the computational basis after the circuit.
pub fn swap_trick_moments(spec: &CircuitSpec, partition: &RegionPartition, n_samples: usize) -> Result<SwapTrick, StatevecError> {
    let pairs: Vec<Result<(f64, f64), StatevecError>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(spec.seed, i as u64);
            let state = prepare_with_seed(spec, rng.random())?;
            swap_trick_exact(&state, partition)
        })
        .collect();
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_, _>>()?;
    let (numerator, numerator_stderr) = mean_stderr(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let (denominator, denominator_stderr) = mean_stderr(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(SwapTrick { numerator, numerator_stderr, denominator, denominator_stderr, q2: (denominator / numerator).ln() })
}

/// Density tensor over a few sites: axes are kets then bras.
#[derive(Debug, Clone)]
struct Cluster {
    sites: Vec<usize>,
    dims: Vec<usize>,
    rho: Vec<C64>,
}

impl Cluster {
    fn ground(site: usize, d: usize) -> Self {
        let mut rho = vec![C64::new(0.0, 0.0); d * d];
        rho[0] = C64::new(1.0, 0.0);
        Self { sites: vec![site], dims: vec![d], rho }
    }

    fn tensor_dims(&self) -> Vec<usize> {
        self.dims.iter().chain(&self.dims).copied().collect()
    }

    fn merge(self, other: Cluster) -> Cluster {
        let (n1, n2) = (self.sites.len(), other.sites.len());
        let rho: Vec<C64> = self.rho.iter().flat_map(|a| other.rho.iter().map(move |b| a * b)).collect();
        // axes are [k1, b1, k2, b2]; reorder to [k1, k2, b1, b2]
        let dims: Vec<usize> = self.tensor_dims().into_iter().chain(other.tensor_dims()).collect();
        let order: Vec<usize> = (0..n1).chain(2 * n1..2 * n1 + n2).chain(n1..2 * n1).chain(2 * n1 + n2..2 * n1 + 2 * n2).collect();
        Cluster {
            sites: self.sites.into_iter().chain(other.sites).collect(),
            dims: self.dims.into_iter().chain(other.dims).collect(),
            rho: permute_tensor(&rho, &dims, &order),
        }
    }

    fn apply(&mut self, sites: &[usize], u: &CMat) {
        let n = self.sites.len();
        let axes: Vec<usize> = sites.iter().map(|s| self.sites.iter().position(|x| x == s).unwrap()).collect();
        let td = self.tensor_dims();
        apply_on_axes(&mut self.rho, &td, &axes, u);
        let bra_axes: Vec<usize> = axes.iter().map(|a| a + n).collect();
        apply_on_axes(&mut self.rho, &td, &bra_axes, &u.map(|x| x.conj()));
    }

    fn trace_out(&mut self, drop: &[usize]) {
        if drop.is_empty() {
            return;
        }
        let n = self.sites.len();
        let keep: Vec<usize> = (0..n).filter(|i| !drop.contains(&self.sites[*i])).collect();
        let gone: Vec<usize> = (0..n).filter(|i| drop.contains(&self.sites[*i])).collect();
        let order: Vec<usize> =
            keep.iter().chain(&gone).copied().chain(keep.iter().chain(&gone).map(|i| i + n)).collect();
        let p = permute_tensor(&self.rho, &self.tensor_dims(), &order);
        let dk: usize = keep.iter().map(|&i| self.dims[i]).product();
        let dt: usize = gone.iter().map(|&i| self.dims[i]).product();
        let mut out = vec![C64::new(0.0, 0.0); dk * dk];
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..dt {
                    acc += p[((i * dt + t) * dk + j) * dt + t];
                }
                out[i * dk + j] = acc;
            }
        }
        self.sites = keep.iter().map(|&i| self.sites[i]).collect();
        self.dims = keep.iter().map(|&i| self.dims[i]).collect();
        self.rho = out;
    }

    fn matrix_in_order(&self, order: &[usize]) -> CMat {
        let n = self.sites.len();
        let axes: Vec<usize> = order.iter().map(|s| self.sites.iter().position(|x| x == s).unwrap()).collect();
        let full: Vec<usize> = axes.iter().copied().chain(axes.iter().map(|a| a + n)).collect();
        let p = permute_tensor(&self.rho, &self.tensor_dims(), &full);
        let d: usize = self.dims.iter().product();
        DMatrix::from_row_slice(d, d, &p)
    }
}

/// Backward light cone of `probes`: indices into the flattened gate list.
fn light_cone(layers: &[Vec<Vec<usize>>], probes: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(layers.len());
    let mut k = 0;
    for l in layers {
        offsets.push(k);
        k += l.len();
    }
    let mut needed: BTreeSet<usize> = probes.iter().copied().collect();
    let mut cone = Vec::new();
    for (t, layer) in layers.iter().enumerate().rev() {
        let hit: Vec<usize> = (0..layer.len()).filter(|&g| layer[g].iter().any(|s| needed.contains(s))).collect();
        for &g in &hit {
            needed.extend(layer[g].iter().copied());
            cone.push(offsets[t] + g);
        }
    }
    cone.sort_unstable();
    cone
}

/// Exact reduced density matrix of `probes` (in the given order), built by
/// simulating only the backward light cone as a set of independent density
/// clusters and tracing out each site right after its last gate.
fn lightcone_density(spec: &CircuitSpec, circuit_seed: u64, probes: &[usize]) -> Result<CMat, StatevecError> {
    let layers = spec.layers();
    let flat: Vec<&Vec<usize>> = layers.iter().flatten().collect();
    let cone = light_cone(&layers, probes);
    let mut last_use: HashMap<usize, usize> = HashMap::new();
    for (p, &g) in cone.iter().enumerate() {
        for &s in flat[g] {
            last_use.insert(s, p);
        }
    }
    let q = spec.q;
    let mut clusters: Vec<Option<Cluster>> = Vec::new();
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (p, &g) in cone.iter().enumerate() {
        let sites = flat[g];
        let mut ids: Vec<usize> = Vec::new();
        for &s in sites {
            let id = *owner.entry(s).or_insert_with(|| {
                clusters.push(Some(Cluster::ground(s, q)));
                clusters.len() - 1
            });
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        let mut merged = clusters[ids[0]].take().unwrap();
        for &id in &ids[1..] {
            merged = merged.merge(clusters[id].take().unwrap());
        }
        if merged.sites.len() > MAX_CLUSTER_SITES {
            return Err(StatevecError::Unsupported(format!("light-cone cluster of {} sites", merged.sites.len())));
        }
        merged.apply(sites, &gate_unitary(circuit_seed, g, q.pow(sites.len() as u32)));
        let drop: Vec<usize> =
            merged.sites.iter().copied().filter(|s| !probes.contains(s) && last_use[s] == p).collect();
        merged.trace_out(&drop);
        for &s in &drop {
            owner.remove(&s);
        }
        let id = clusters.len();
        for &s in &merged.sites {
            owner.insert(s, id);
        }
        clusters.push(Some(merged));
    }
    let mut result: Option<Cluster> = None;
    let mut seen = BTreeSet::new();
    for &s in probes {
        let c = match owner.get(&s) {
            Some(&id) if !seen.insert(id) => continue,
            Some(&id) => clusters[id].clone().unwrap(),
            None => Cluster::ground(s, q),
        };
        result = Some(match result {
            None => c,
            Some(r) => r.merge(c),
        });
    }
    Ok(result.expect("probes nonempty").matrix_in_order(probes))
}

/// Probe sets of a cell: its intersection with each final-layer gate, plus
/// singletons for sites no final gate touches.
fn probe_sets(spec: &CircuitSpec, cell: &[usize]) -> Vec<Vec<usize>> {
    let layers = spec.layers();
    let mut probes: Vec<Vec<usize>> = Vec::new();
    let mut covered = BTreeSet::new();
    if let Some(last) = layers.last() {
        for g in last {
            let p: Vec<usize> = g.iter().copied().filter(|s| cell.contains(s)).collect();
            covered.extend(p.iter().copied());
            if !p.is_empty() {
                probes.push(p);
            }
        }
    }
    probes.extend(cell.iter().filter(|s| !covered.contains(s)).map(|&s| vec![s]));
    probes
}

/// Largest `‖ρ^{PQ} − ρ^P ⊗ ρ^Q‖₁` over gate-aligned probe sets `P ⊂ A`,
/// `Q ⊂ C` of non-adjacent cell pairs `(A, C)`, maximized over every
/// placement of the gate grid relative to the cells. Reduced states are exact
/// light-cone marginals; probe pairs with disjoint light cones factorize
/// exactly and contribute zero.
pub fn strict_locality_check(spec: &CircuitSpec, cells: &CellLattice) -> Result<f64, StatevecError> {
    if spec.family == CircuitFamily::Holographic {
        return Err(StatevecError::Unsupported("strict locality is checked for gate circuits".into()));
    }
    if cells.base.n_sites() != spec.lattice.n_sites() {
        return Err(StatevecError::Shape("cell lattice does not match the circuit lattice".into()));
    }
    let period = spec.schedule_period();
    let mut worst = 0.0f64;
    for offset in 0..period {
        let s = CircuitSpec { schedule_offset: offset, ..spec.clone() };
        let layers = s.layers();
        let flat: Vec<&Vec<usize>> = layers.iter().flatten().collect();
        let cell_probes: Vec<Vec<Vec<usize>>> = cells.cells.iter().map(|c| probe_sets(&s, c)).collect();
        let support = |probe: &[usize]| -> BTreeSet<usize> {
            let mut sup: BTreeSet<usize> = probe.iter().copied().collect();
            for g in light_cone(&layers, probe) {
                sup.extend(flat[g].iter().copied());
            }
            sup
        };
        let mut jobs = Vec::new();
        for a in 0..cells.n_cells() {
            for c in a + 1..cells.n_cells() {
                if cells.are_adjacent(a, c) {
                    continue;
                }
                for pa in &cell_probes[a] {
                    let sa = support(pa);
                    for pc in &cell_probes[c] {
                        if !sa.is_disjoint(&support(pc)) {
                            jobs.push((pa.clone(), pc.clone()));
                        }
                    }
                }
            }
        }
        let devs: Vec<Result<f64, StatevecError>> = jobs
            .par_iter()
            .map(|(pa, pc)| {
                let probes: Vec<usize> = pa.iter().chain(pc).copied().collect();
                let rho = lightcone_density(&s, spec.seed, &probes)?;
                let dims = vec![spec.q; probes.len()];
                let st = DensityView { rho: &rho, dims: &dims };
                let ra = st.partial(&(0..pa.len()).collect::<Vec<_>>());
                let rc = st.partial(&(pa.len()..probes.len()).collect::<Vec<_>>());
                Ok(trace_norm_hermitian(&hermitize(&(rho.clone() - kron(&ra, &rc)))))
            })
            .collect();
        for d in devs {
            worst = worst.max(d?);
        }
    }
    Ok(worst)
}

struct DensityView<'a> {
    rho: &'a CMat,
    dims: &'a [usize],
}

impl DensityView<'_> {
    /// Partial trace keeping `keep` (ascending positions).
    fn partial(&self, keep: &[usize]) -> CMat {
        let n = self.dims.len();
        let d: usize = self.dims.iter().product();
        let data: Vec<C64> = (0..d * d).map(|i| self.rho[(i / d, i % d)]).collect();
        let sites: Vec<usize> = (0..n).collect();
        let mut c = Cluster { sites, dims: self.dims.to_vec(), rho: data };
        let drop: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        c.trace_out(&drop);
        c.matrix_in_order(keep)
    }
}
