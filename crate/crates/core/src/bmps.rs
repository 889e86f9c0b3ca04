//! Boundary-MPS contraction of planar random tensor networks and SEBD
//! sampling of holographic circuits, with truncation bookkeeping.
//!
//! Networks live on a square grid. Every site tensor carries four legs in
//! the order `[left, up, right, down]`; a missing neighbour means a leg of
//! dimension one. Bond states are absorbed into the right and down legs, so
//! neighbouring tensors share a single index per edge.
//!
//! The boundary MPS runs along a column (one site per row) and sweeps left
//! to right; its physical legs are the right legs of the last absorbed column.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeKind, SiteLattice};
use crate::linalg::{complex_gaussian, CMat};
use crate::rng::Rng;
use crate::statevec::{self, gate_unitary, CircuitFamily, CircuitSpec, Povm, StatevecError};
use crate::C64;

/// Singular values below this fraction of the largest are numerical noise.
const SV_FLOOR: f64 = 1e-13;

pub const DEFAULT_ABORT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BmpsError {
    #[error("boundary-MPS networks need a square lattice")]
    NotSquare,
    #[error("bond state of length {0} is not a normalized χ×χ state")]
    BondState(usize),
    #[error("tensor shape mismatch: {0}")]
    Shape(String),
    #[error("truncation policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Statevec(#[from] StatevecError),
}

const LEFT: usize = 0;
const UP: usize = 1;
const RIGHT: usize = 2;
const DOWN: usize = 3;

/// Dense tensor with legs `[left, up, right, down]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTensor {
    pub dims: [usize; 4],
    pub data: Vec<C64>,
}

impl SiteTensor {
    pub fn new(dims: [usize; 4], data: Vec<C64>) -> Result<Self, BmpsError> {
        if dims.iter().product::<usize>() != data.len() {
            return Err(BmpsError::Shape(format!("{} entries for legs {dims:?}", data.len())));
        }
        Ok(Self { dims, data })
    }

    pub fn scalar(z: C64) -> Self {
        Self { dims: [1; 4], data: vec![z] }
    }

    fn index(&self, l: usize, u: usize, r: usize, d: usize) -> usize {
        let [_, du, dr, dd] = self.dims;
        ((l * du + u) * dr + r) * dd + d
    }

    pub fn get(&self, l: usize, u: usize, r: usize, d: usize) -> C64 {
        self.data[self.index(l, u, r, d)]
    }

    /// Contracts a `χ×χ` matrix `w[a][b]` into leg `leg`, replacing `a` by `b`.
    fn absorb(&mut self, leg: usize, w: &[C64], chi: usize) {
        let dims = self.dims;
        let stride: usize = dims[leg + 1..].iter().product();
        let outer = self.data.len() / (stride * chi);
        let mut out = vec![C64::new(0.0, 0.0); self.data.len()];
        for o in 0..outer {
            for a in 0..chi {
                for b in 0..chi {
                    let wab = w[a * chi + b];
                    if wab == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let src = (o * chi + a) * stride;
                    let dst = (o * chi + b) * stride;
                    for k in 0..stride {
                        out[dst + k] += self.data[src + k] * wab;
                    }
                }
            }
        }
        self.data = out;
    }

    fn mirrored(&self) -> Self {
        let [dl, du, dr, dd] = self.dims;
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..dr {
            for u in 0..du {
                for l in 0..dl {
                    for d in 0..dd {
                        data.push(self.get(l, u, r, d));
                    }
                }
            }
        }
        Self { dims: [dr, du, dl, dd], data }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorMode {
    /// i.i.d. complex Gaussian site tensors, Born weights neglected.
    Gaussian,
    /// Rows of the circuit's site unitaries at a Born-sampled outcome.
    Exact,
}

/// Planar network on a `width × height` grid, sites in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridNetwork {
    pub width: usize,
    pub height: usize,
    pub tensors: Vec<SiteTensor>,
    pub mode: Option<TensorMode>,
    /// Measurement outcome per site, for exact-mode networks.
    pub outcome: Option<Vec<usize>>,
}

impl GridNetwork {
    pub fn new(width: usize, height: usize, tensors: Vec<SiteTensor>) -> Result<Self, BmpsError> {
        let net = Self { width, height, tensors, mode: None, outcome: None };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<(), BmpsError> {
        let (w, h) = (self.width, self.height);
        if self.tensors.len() != w * h || w == 0 || h == 0 {
            return Err(BmpsError::Shape(format!("{} tensors for a {w}×{h} grid", self.tensors.len())));
        }
        for y in 0..h {
            for x in 0..w {
                let t = &self.tensors[y * w + x];
                let bad = |leg: usize, other: Option<usize>| match other {
                    Some(o) => t.dims[leg] != o,
                    None => t.dims[leg] != 1,
                };
                let right = (x + 1 < w).then(|| self.tensors[y * w + x + 1].dims[LEFT]);
                let down = (y + 1 < h).then(|| self.tensors[(y + 1) * w + x].dims[UP]);
                if bad(RIGHT, right) || bad(DOWN, down) || (x == 0 && t.dims[LEFT] != 1) || (y == 0 && t.dims[UP] != 1) {
                    return Err(BmpsError::Shape(format!("legs of site ({x},{y}) do not match the grid")));
                }
            }
        }
        Ok(())
    }

    pub fn tensor(&self, x: usize, y: usize) -> &SiteTensor {
        &self.tensors[y * self.width + x]
    }

    /// The same network read right to left.
    pub fn mirrored(&self) -> Self {
        let mut tensors = Vec::with_capacity(self.tensors.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                tensors.push(self.tensor(x, y).mirrored());
            }
        }
        let outcome = self.outcome.as_ref().map(|o| {
            let mut m = Vec::with_capacity(o.len());
            for y in 0..self.height {
                for x in (0..self.width).rev() {
                    m.push(o[y * self.width + x]);
                }
            }
            m
        });
        Self { width: self.width, height: self.height, tensors, mode: self.mode, outcome }
    }

    /// Builds a network from raw site tensors whose legs follow the
    /// lattice's incident-edge order, absorbing the bond state on every edge.
    pub fn from_site_tensors(lattice: &SiteLattice, bond_state: &[C64], raw: Vec<Vec<C64>>) -> Result<Self, BmpsError> {
        let chi = bond_chi(bond_state)?;
        let legs = leg_directions(lattice)?;
        let mut tensors = Vec::with_capacity(raw.len());
        for (s, data) in raw.into_iter().enumerate() {
            tensors.push(orient(&legs[s], chi, data, bond_state)?);
        }
        Self::new(lattice.width, lattice.height, tensors)
    }
}

fn bond_chi(bond_state: &[C64]) -> Result<usize, BmpsError> {
    let chi = (bond_state.len() as f64).sqrt().round() as usize;
    let norm: f64 = bond_state.iter().map(|a| a.norm_sqr()).sum();
    if chi == 0 || chi * chi != bond_state.len() || (norm - 1.0).abs() > 1e-10 {
        return Err(BmpsError::BondState(bond_state.len()));
    }
    Ok(chi)
}

/// Grid direction of each incident edge, per site.
fn leg_directions(lattice: &SiteLattice) -> Result<Vec<Vec<usize>>, BmpsError> {
    if lattice.kind != LatticeKind::Square {
        return Err(BmpsError::NotSquare);
    }
    let incident = lattice.incident_edges();
    Ok(incident
        .iter()
        .enumerate()
        .map(|(s, inc)| {
            inc.iter()
                .map(|&e| {
                    let (a, b) = lattice.edges[e];
                    let other = if a == s { b } else { a };
                    let (sx, sy) = lattice.coords(s);
                    let (ox, oy) = lattice.coords(other);
                    match (ox as i64 - sx as i64, oy as i64 - sy as i64) {
                        (-1, 0) => LEFT,
                        (1, 0) => RIGHT,
                        (0, -1) => UP,
                        _ => DOWN,
                    }
                })
                .collect()
        })
        .collect())
}

/// Reorders a tensor with legs in incident-edge order into
/// `[left, up, right, down]` and absorbs the bond state on right and down.
fn orient(directions: &[usize], chi: usize, data: Vec<C64>, bond_state: &[C64]) -> Result<SiteTensor, BmpsError> {
    let n = directions.len();
    if data.len() != chi.pow(n as u32) {
        return Err(BmpsError::Shape(format!("{} entries for {n} legs of dimension {chi}", data.len())));
    }
    let mut dims = [1usize; 4];
    for &d in directions {
        dims[d] = chi;
    }
    let mut t = SiteTensor { dims, data: vec![C64::new(0.0, 0.0); data.len()] };
    for (k, &z) in data.iter().enumerate() {
        let mut idx = [0usize; 4];
        let mut rest = k;
        for j in (0..n).rev() {
            idx[directions[j]] = rest % chi;
            rest /= chi;
        }
        let dst = t.index(idx[0], idx[1], idx[2], idx[3]);
        t.data[dst] = z;
    }
    for leg in [RIGHT, DOWN] {
        if directions.contains(&leg) {
            t.absorb(leg, bond_state, chi);
        }
    }
    Ok(t)
}

/// Samples a random network on `lattice` with the given bond state.
///
/// Gaussian mode draws i.i.d. complex Gaussian site tensors. Exact mode
/// prepares the holographic circuit densely, Born-samples every site and
/// takes the matching rows of the site unitaries, so the network contracts
/// to the amplitude of the sampled outcome.
pub fn sample_random_tn(lattice: &SiteLattice, bond_state: &[C64], mode: TensorMode, rng: &mut Rng) -> Result<GridNetwork, BmpsError> {
    let chi = bond_chi(bond_state)?;
    let dims: Vec<usize> = (0..lattice.n_sites()).map(|s| chi.pow(lattice.degree(s) as u32)).collect();
    let (raw, outcome) = match mode {
        TensorMode::Gaussian => (dims.iter().map(|&d| (0..d).map(|_| complex_gaussian(rng)).collect()).collect(), None),
        TensorMode::Exact => {
            let spec = CircuitSpec::holographic(lattice.clone(), bond_state.to_vec(), 0);
            let circuit_seed: u64 = rng.random();
            let state = statevec::prepare_with_seed(&spec, circuit_seed)?;
            let all: Vec<usize> = (0..lattice.n_sites()).collect();
            let sample = statevec::measure_sampled(&state, &all, Povm::Computational, rng);
            let raw = dims
                .iter()
                .enumerate()
                .map(|(s, &d)| {
                    let u = gate_unitary(circuit_seed, s, d);
                    (0..d).map(|j| u[(sample.outcome[s], j)]).collect()
                })
                .collect();
            (raw, Some(sample.outcome))
        }
    };
    let mut net = GridNetwork::from_site_tensors(lattice, bond_state, raw)?;
    net.mode = Some(mode);
    net.outcome = outcome;
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub chi_max: usize,
    pub cutoff: f64,
    /// Column discarded weight above which an over-budget column aborts.
    pub abort_tolerance: f64,
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, cutoff: f64, abort_tolerance: f64) -> Result<Self, BmpsError> {
        if chi_max == 0 {
            return Err(BmpsError::Policy("chi_max must be at least 1".into()));
        }
        if !(cutoff >= 0.0) || !(abort_tolerance >= 0.0) {
            return Err(BmpsError::Policy("cutoff and tolerance must be non-negative".into()));
        }
        Ok(Self { chi_max, cutoff, abort_tolerance })
    }

    /// Exact contraction: no bond cap and no cutoff beyond rounding noise.
    pub fn exact() -> Self {
        Self { chi_max: usize::MAX, cutoff: 0.0, abort_tolerance: DEFAULT_ABORT_TOLERANCE }
    }

    pub fn with_chi_max(chi_max: usize) -> Self {
        Self { chi_max: chi_max.max(1), cutoff: 0.0, abort_tolerance: DEFAULT_ABORT_TOLERANCE }
    }
}

/// Outcome of a truncated SVD at one bond.
struct Truncation {
    demanded: usize,
    kept: usize,
    /// Discarded fraction of the squared norm.
    discarded: f64,
    spectrum: Vec<f64>,
}

fn truncation(s: &[f64], policy: &TruncationPolicy) -> Truncation {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if s.is_empty() || total == 0.0 {
        return Truncation { demanded: 1, kept: 1, discarded: 0.0, spectrum: vec![1.0] };
    }
    let thr = s[0] * policy.cutoff.max(SV_FLOOR);
    let demanded = s.iter().filter(|&&x| x > thr).count().max(1);
    let kept = demanded.min(policy.chi_max);
    let discarded = s[kept..].iter().map(|x| x * x).sum::<f64>() / total;
    Truncation { demanded, kept, discarded, spectrum: s.iter().map(|x| x * x / total).collect() }
}

fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn to_mat(data: &[C64], rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

fn from_mat(m: &CMat) -> Vec<C64> {
    let (r, c) = m.shape();
    (0..r * c).map(|k| m[(k / c, k % c)]).collect()
}

/// SVD with singular values in descending order.
fn svd_sorted(m: CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = m.svd(true, true);
    let (u, vt, s) = (svd.u.unwrap(), svd.v_t.unwrap(), svd.singular_values);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u = CMat::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let vt = CMat::from_fn(order.len(), vt.ncols(), |i, j| vt[(order[i], j)]);
    (u, order.iter().map(|&k| s[k]).collect(), vt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpsSite {
    pub dl: usize,
    pub dp: usize,
    pub dr: usize,
    /// Row-major over `(left, physical, right)`.
    pub data: Vec<C64>,
}

impl MpsSite {
    fn trivial() -> Self {
        Self { dl: 1, dp: 1, dr: 1, data: vec![C64::new(1.0, 0.0)] }
    }

    fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, f: f64) {
        for z in &mut self.data {
            *z *= f;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Canonical {
    None,
    /// Every site but the last is left-isometric.
    Left,
    /// Every site but the first is right-isometric.
    Right,
}

/// Boundary state of the sweep. The represented vector is
/// `exp(log_scale)` times the contraction of `sites`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryMps {
    pub sites: Vec<MpsSite>,
    pub canonical: Canonical,
    /// Sum of relative discarded weights over every truncated bond so far.
    pub discarded: f64,
    pub log_scale: f64,
}

/// Per-bond statistics of one truncation sweep.
struct SweepStats {
    max_bond: usize,
    max_demanded: usize,
    discarded: f64,
    /// Sum of `√(discarded)` over bonds: bounds the relative error vector.
    delta: f64,
    mid_entropy: f64,
}

impl BoundaryMps {
    pub fn trivial(n: usize) -> Self {
        Self { sites: vec![MpsSite::trivial(); n], canonical: Canonical::Right, discarded: 0.0, log_scale: 0.0 }
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|s| s.dl).collect()
    }

    /// Contracts each site's physical leg with the left leg of the matching
    /// tensor; vertical legs join the bonds.
    pub fn absorb_column(&mut self, column: &[&SiteTensor]) {
        for (site, t) in self.sites.iter_mut().zip(column) {
            let [tl, du, dr_t, dd] = t.dims;
            debug_assert_eq!(tl, site.dp);
            let (dl, dp, dr) = (site.dl, site.dp, site.dr);
            let (ndl, ndr) = (dl * du, dr * dd);
            let mut out = vec![C64::new(0.0, 0.0); ndl * dr_t * ndr];
            for a in 0..dl {
                for p in 0..dp {
                    for b in 0..dr {
                        let x = site.data[(a * dp + p) * dr + b];
                        if x == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for u in 0..du {
                            for r in 0..dr_t {
                                for d in 0..dd {
                                    let row = a * du + u;
                                    let col = b * dd + d;
                                    out[(row * dr_t + r) * ndr + col] += x * t.get(p, u, r, d);
                                }
                            }
                        }
                    }
                }
            }
            *site = MpsSite { dl: ndl, dp: dr_t, dr: ndr, data: out };
        }
        self.canonical = Canonical::None;
    }

    /// QR sweep left to right; leaves the norm in the last site.
    pub fn left_canonicalize(&mut self) {
        let n = self.sites.len();
        for y in 0..n - 1 {
            let s = &self.sites[y];
            let qr = to_mat(&s.data, s.dl * s.dp, s.dr).qr();
            let (q, r) = (qr.q(), qr.r());
            let k = q.ncols();
            self.sites[y] = MpsSite { dl: s.dl, dp: s.dp, dr: k, data: from_mat(&q) };
            let next = &self.sites[y + 1];
            let m = &r * to_mat(&next.data, next.dl, next.dp * next.dr);
            self.sites[y + 1] = MpsSite { dl: k, dp: next.dp, dr: next.dr, data: from_mat(&m) };
        }
        self.canonical = Canonical::Left;
    }

    /// Truncating SVD sweep right to left from left-canonical form, then
    /// normalization of the first site into `log_scale`.
    fn truncate(&mut self, policy: &TruncationPolicy) -> SweepStats {
        debug_assert_eq!(self.canonical, Canonical::Left);
        let n = self.sites.len();
        let mut stats = SweepStats { max_bond: 1, max_demanded: 1, discarded: 0.0, delta: 0.0, mid_entropy: 0.0 };
        for y in (1..n).rev() {
            let s = &self.sites[y];
            let (u, sv, vt) = svd_sorted(to_mat(&s.data, s.dl, s.dp * s.dr));
            let tr = truncation(&sv, policy);
            let k = tr.kept.min(sv.len());
            stats.max_bond = stats.max_bond.max(k);
            stats.max_demanded = stats.max_demanded.max(tr.demanded);
            stats.discarded += tr.discarded;
            stats.delta += tr.discarded.sqrt();
            if y == n / 2 {
                stats.mid_entropy = entropy_of(&tr.spectrum);
            }
            let vt_k = vt.rows(0, k).into_owned();
            self.sites[y] = MpsSite { dl: k, dp: s.dp, dr: s.dr, data: from_mat(&vt_k) };
            let us = CMat::from_fn(u.nrows(), k, |i, j| u[(i, j)] * sv[j]);
            let prev = &self.sites[y - 1];
            let m = to_mat(&prev.data, prev.dl * prev.dp, prev.dr) * us;
            self.sites[y - 1] = MpsSite { dl: prev.dl, dp: prev.dp, dr: k, data: from_mat(&m) };
        }
        self.discarded += stats.discarded;
        self.canonical = Canonical::Right;
        let norm = self.sites[0].norm();
        if norm > 0.0 {
            self.sites[0].scale(1.0 / norm);
        }
        self.log_scale += norm.ln();
        stats
    }

    /// Contraction of a boundary state whose physical legs are all trivial.
    pub fn scalar(&self) -> C64 {
        let mut v = vec![C64::new(1.0, 0.0)];
        for s in &self.sites {
            let mut next = vec![C64::new(0.0, 0.0); s.dr];
            for a in 0..s.dl {
                for p in 0..s.dp {
                    for b in 0..s.dr {
                        if p == 0 {
                            next[b] += v[a] * s.data[(a * s.dp + p) * s.dr + b];
                        }
                    }
                }
            }
            v = next;
        }
        v[0] * self.log_scale.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRecord {
    /// Number of columns absorbed (or sampled) so far.
    pub t: usize,
    pub max_bond: usize,
    pub max_demanded: usize,
    /// Relative discarded weight summed over this column's bonds.
    pub discarded: f64,
    /// `Σ √(discarded)` over this column's bonds.
    pub delta: f64,
    /// Half-chain entropy of the boundary state, nats.
    pub half_chain_entropy: f64,
    /// `ln` of the untruncated boundary norm before this column's sweep.
    pub log_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDirection {
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionResult {
    pub amplitude: Option<C64>,
    pub log_abs_amplitude: Option<f64>,
    /// Column at which the policy aborted the sweep.
    pub aborted_at: Option<usize>,
    pub total_discarded: f64,
    pub profile: Vec<ColumnRecord>,
    pub policy: TruncationPolicy,
}

impl ContractionResult {
    pub fn aborted(&self) -> bool {
        self.aborted_at.is_some()
    }
}

fn over_budget(rec: &ColumnRecord, policy: &TruncationPolicy) -> bool {
    rec.max_demanded > policy.chi_max && rec.discarded > policy.abort_tolerance
}

/// Column-by-column boundary-MPS contraction of a closed network.
pub fn contract_bmps(net: &GridNetwork, policy: &TruncationPolicy, direction: SweepDirection) -> ContractionResult {
    let mirrored;
    let net = match direction {
        SweepDirection::LeftToRight => net,
        SweepDirection::RightToLeft => {
            mirrored = net.mirrored();
            &mirrored
        }
    };
    let mut mps = BoundaryMps::trivial(net.height);
    let mut profile = Vec::with_capacity(net.width);
    for x in 0..net.width {
        let column: Vec<&SiteTensor> = (0..net.height).map(|y| net.tensor(x, y)).collect();
        mps.absorb_column(&column);
        mps.left_canonicalize();
        let log_norm = mps.sites[net.height - 1].norm().ln() + mps.log_scale;
        let stats = mps.truncate(policy);
        let rec = ColumnRecord {
            t: x + 1,
            max_bond: stats.max_bond,
            max_demanded: stats.max_demanded,
            discarded: stats.discarded,
            delta: stats.delta,
            half_chain_entropy: stats.mid_entropy,
            log_norm,
        };
        profile.push(rec);
        if over_budget(&rec, policy) {
            return ContractionResult {
                amplitude: None,
                log_abs_amplitude: None,
                aborted_at: Some(x),
                total_discarded: mps.discarded,
                profile,
                policy: *policy,
            };
        }
        if !log_norm.is_finite() {
            break;
        }
    }
    let amplitude = if mps.log_scale.is_finite() { mps.scalar() } else { C64::new(0.0, 0.0) };
    let log_abs = mps.log_scale + (amplitude * (-mps.log_scale).exp()).norm().ln();
    ContractionResult {
        amplitude: Some(amplitude),
        log_abs_amplitude: Some(if mps.log_scale.is_finite() { log_abs } else { f64::NEG_INFINITY }),
        aborted_at: None,
        total_discarded: mps.discarded,
        profile,
        policy: *policy,
    }
}

/// Brute-force contraction of columns `from..` with the left legs of
/// column `from` left open, indexed with row 0 most significant. With
/// `from = 0` this is the one-entry vector holding the full contraction.
pub fn right_environment(net: &GridNetwork, from: usize) -> Vec<C64> {
    let (w, h) = (net.width, net.height);
    let cols = from..w;
    // every summed index: open left legs, then internal horizontal and
    // vertical edges of the remaining columns
    let mut slots: Vec<usize> = Vec::new();
    let mut open = vec![0usize; h];
    let mut horiz = vec![vec![usize::MAX; h]; w];
    let mut vert = vec![vec![usize::MAX; h]; w];
    for (y, o) in open.iter_mut().enumerate() {
        *o = slots.len();
        slots.push(net.tensor(from, y).dims[LEFT]);
    }
    for x in cols.clone() {
        for y in 0..h {
            let t = net.tensor(x, y);
            if x + 1 < w {
                horiz[x][y] = slots.len();
                slots.push(t.dims[RIGHT]);
            }
            if y + 1 < h {
                vert[x][y] = slots.len();
                slots.push(t.dims[DOWN]);
            }
        }
    }
    let n_open: usize = open.iter().map(|&k| slots[k]).product();
    let mut env = vec![C64::new(0.0, 0.0); n_open];
    let total: usize = slots.iter().product();
    let mut idx = vec![0usize; slots.len()];
    for _ in 0..total {
        let mut prod = C64::new(1.0, 0.0);
        for x in cols.clone() {
            for y in 0..h {
                let l = if x == from { idx[open[y]] } else { idx[horiz[x - 1][y]] };
                let u = if y == 0 { 0 } else { idx[vert[x][y - 1]] };
                let r = if x + 1 < w { idx[horiz[x][y]] } else { 0 };
                let d = if y + 1 < h { idx[vert[x][y]] } else { 0 };
                prod *= net.tensor(x, y).get(l, u, r, d);
            }
        }
        let key = open.iter().fold(0, |acc, &k| acc * slots[k] + idx[k]);
        env[key] += prod;
        for k in (0..slots.len()).rev() {
            idx[k] += 1;
            if idx[k] < slots[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    env
}

pub fn contract_exhaustive(net: &GridNetwork) -> C64 {
    right_environment(net, 0)[0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SebdSample {
    /// Outcome per site in row-major order, absent on abort.
    pub outcome: Option<Vec<usize>>,
    pub aborted_at: Option<usize>,
    /// `ln` of the sampling probability of the emitted outcome.
    pub log_probability: f64,
    pub profile: Vec<ColumnRecord>,
    pub circuit_seed: u64,
}

/// SEBD sampler for one holographic circuit: sites are measured column by
/// column, top to bottom, each from its exact conditional distribution
/// given the truncated boundary state.
pub struct SebdSampler {
    width: usize,
    height: usize,
    /// Per site, one tensor per outcome with bond states already absorbed.
    outcomes: Vec<Vec<SiteTensor>>,
    policy: TruncationPolicy,
    circuit_seed: u64,
}

impl SebdSampler {
    pub fn new(spec: &CircuitSpec, circuit_seed: u64, policy: TruncationPolicy) -> Result<Self, BmpsError> {
        if spec.family != CircuitFamily::Holographic {
            return Err(StatevecError::Unsupported("SEBD samples holographic circuits".into()).into());
        }
        let lattice = &spec.lattice;
        let bond = spec.bond_state.as_ref().ok_or(BmpsError::BondState(0))?;
        let chi = bond_chi(bond)?;
        let legs = leg_directions(lattice)?;
        let mut outcomes = Vec::with_capacity(lattice.n_sites());
        for (s, dirs) in legs.iter().enumerate() {
            let d = chi.pow(dirs.len() as u32);
            let u = gate_unitary(circuit_seed, s, d);
            let per = (0..d)
                .map(|o| orient(dirs, chi, (0..d).map(|j| u[(o, j)]).collect(), bond))
                .collect::<Result<Vec<_>, _>>()?;
            outcomes.push(per);
        }
        Ok(Self { width: lattice.width, height: lattice.height, outcomes, policy, circuit_seed })
    }

    pub fn sample(&self, rng: &mut Rng) -> SebdSample {
        let (w, h) = (self.width, self.height);
        let mut mps = BoundaryMps::trivial(h);
        let mut outcome = vec![0usize; w * h];
        let mut log_p = 0.0;
        let mut profile = Vec::with_capacity(w);
        for x in 0..w {
            let mut rec = ColumnRecord {
                t: x + 1,
                max_bond: 1,
                max_demanded: 1,
                discarded: 0.0,
                delta: 0.0,
                half_chain_entropy: 0.0,
                log_norm: 0.0,
            };
            for y in 0..h {
                let site = y * w + x;
                let (s, p) = self.measure_site(&mut mps, y, &self.outcomes[site], &mut rec, rng);
                outcome[site] = s;
                log_p += p.ln();
            }
            mps.discarded += rec.discarded;
            self.recenter(&mut mps);
            profile.push(rec);
            if over_budget(&rec, &self.policy) {
                return SebdSample { outcome: None, aborted_at: Some(x), log_probability: log_p, profile, circuit_seed: self.circuit_seed };
            }
        }
        SebdSample { outcome: Some(outcome), aborted_at: None, log_probability: log_p, profile, circuit_seed: self.circuit_seed }
    }

    /// Measures row `y` of the current column. The orthogonality centre
    /// sits on site `y` (or on `y − 1`, carrying the open vertical leg).
    fn measure_site(&self, mps: &mut BoundaryMps, y: usize, tensors: &[SiteTensor], rec: &mut ColumnRecord, rng: &mut Rng) -> (usize, f64) {
        let [dl, du, dr, dd] = tensors[0].dims;
        let n_out = tensors.len();
        // block rows (α, r′, γ), columns (u, l): r′ is the previous site's
        // right leg and u its open down leg; y = 0 has trivial α, r′, u
        let cur = &mps.sites[y];
        let (alpha, rp, gamma) = if y == 0 { (cur.dl, 1, cur.dr) } else { (mps.sites[y - 1].dl, mps.sites[y - 1].dp / du, cur.dr) };
        let block = if y == 0 {
            CMat::from_fn(alpha * gamma, dl, |row, l| cur.data[((row / gamma) * cur.dp + l) * cur.dr + row % gamma])
        } else {
            let prev = &mps.sites[y - 1];
            let beta = prev.dr;
            let mut m = CMat::zeros(alpha * rp * gamma, du * dl);
            for a in 0..alpha {
                for r in 0..rp {
                    for u in 0..du {
                        for b in 0..beta {
                            let x = prev.data[(a * prev.dp + r * du + u) * beta + b];
                            if x == C64::new(0.0, 0.0) {
                                continue;
                            }
                            for l in 0..dl {
                                for g in 0..gamma {
                                    m[((a * rp + r) * gamma + g, u * dl + l)] += x * cur.data[(b * cur.dp + l) * cur.dr + g];
                                }
                            }
                        }
                    }
                }
            }
            m
        };
        let out_legs = dr * dd;
        let all = CMat::from_fn(du * dl, n_out * out_legs, |row, col| {
            let (u, l) = (row / dl, row % dl);
            let (o, rd) = (col / out_legs, col % out_legs);
            tensors[o].get(l, u, rd / dd, rd % dd)
        });
        let prod = &block * all;
        let weights: Vec<f64> = (0..n_out)
            .map(|o| (0..prod.nrows()).map(|i| (0..out_legs).map(|k| prod[(i, o * out_legs + k)].norm_sqr()).sum::<f64>()).sum())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut s = n_out - 1;
        for (o, &wt) in weights.iter().enumerate() {
            if target < wt {
                s = o;
                break;
            }
            target -= wt;
        }
        let p = weights[s] / total;
        let norm = weights[s].sqrt();
        let theta = |a: usize, r: usize, k: usize, g: usize| prod[((a * rp + r) * gamma + g, s * out_legs + k)] / norm;
        if y == 0 {
            let data = (0..alpha * out_legs * gamma).map(|i| theta(i / (out_legs * gamma), 0, (i / gamma) % out_legs, i % gamma)).collect();
            mps.sites[0] = MpsSite { dl: alpha, dp: out_legs, dr: gamma, data };
            return (s, p);
        }
        let m = CMat::from_fn(alpha * rp, out_legs * gamma, |i, j| theta(i / rp, i % rp, j / gamma, j % gamma));
        let (u, sv, vt) = svd_sorted(m);
        let tr = truncation(&sv, &self.policy);
        let k = tr.kept.min(sv.len());
        rec.max_bond = rec.max_bond.max(k);
        rec.max_demanded = rec.max_demanded.max(tr.demanded);
        rec.discarded += tr.discarded;
        rec.delta += tr.discarded.sqrt();
        if y == self.height / 2 {
            rec.half_chain_entropy = entropy_of(&tr.spectrum);
        }
        let kept_norm: f64 = sv[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
        let left = u.columns(0, k).into_owned();
        mps.sites[y - 1] = MpsSite { dl: alpha, dp: rp, dr: k, data: from_mat(&left) };
        let right = CMat::from_fn(k, out_legs * gamma, |i, j| vt[(i, j)] * sv[i] / kept_norm);
        mps.sites[y] = MpsSite { dl: k, dp: out_legs, dr: gamma, data: from_mat(&right) };
        (s, p)
    }

    /// Moves the orthogonality centre from the last row back to the first.
    fn recenter(&self, mps: &mut BoundaryMps) {
        for y in (1..mps.sites.len()).rev() {
            let (dl, dp, dr) = (mps.sites[y].dl, mps.sites[y].dp, mps.sites[y].dr);
            let qr = to_mat(&mps.sites[y].data, dl, dp * dr).adjoint().qr();
            let (q, r) = (qr.q(), qr.r());
            let k = q.ncols();
            mps.sites[y] = MpsSite { dl: k, dp, dr, data: from_mat(&q.adjoint()) };
            let prev = &mps.sites[y - 1];
            let m = to_mat(&prev.data, prev.dl * prev.dp, prev.dr) * r.adjoint();
            mps.sites[y - 1] = MpsSite { dl: prev.dl, dp: prev.dp, dr: k, data: from_mat(&m) };
        }
        mps.canonical = Canonical::Right;
    }
}

/// Draws a circuit from `rng` and one SEBD sample from it.
pub fn sebd_sample(spec: &CircuitSpec, policy: &TruncationPolicy, rng: &mut Rng) -> Result<SebdSample, BmpsError> {
    let sampler = SebdSampler::new(spec, rng.random(), *policy)?;
    Ok(sampler.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn max_entangled(chi: usize) -> Vec<C64> {
        let mut w = vec![C64::new(0.0, 0.0); chi * chi];
        for a in 0..chi {
            w[a * chi + a] = C64::new(1.0 / (chi as f64).sqrt(), 0.0);
        }
        w
    }

    #[test]
    fn scalar_network_is_a_product() {
        let zs = [C64::new(0.5, 0.2), C64::new(-1.1, 0.3), C64::new(0.7, -0.9), C64::new(2.0, 0.0)];
        let net = GridNetwork::new(2, 2, zs.iter().map(|&z| SiteTensor::scalar(z)).collect()).unwrap();
        let res = contract_bmps(&net, &TruncationPolicy::exact(), SweepDirection::LeftToRight);
        let want: C64 = zs.iter().product();
        assert!((res.amplitude.unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn delta_network_contracts_to_chi() {
        // copy tensors on a grid: every index equal, so the sum counts χ
        let chi = 3;
        let (w, h) = (3, 3);
        let mut tensors = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let dims = [
                    if x > 0 { chi } else { 1 },
                    if y > 0 { chi } else { 1 },
                    if x + 1 < w { chi } else { 1 },
                    if y + 1 < h { chi } else { 1 },
                ];
                let mut t = SiteTensor { dims, data: vec![C64::new(0.0, 0.0); dims.iter().product()] };
                for a in 0..chi {
                    let c = |k: usize| if dims[k] == 1 { 0 } else { a };
                    let i = t.index(c(0), c(1), c(2), c(3));
                    t.data[i] = C64::new(1.0, 0.0);
                }
                tensors.push(t);
            }
        }
        let net = GridNetwork::new(w, h, tensors).unwrap();
        let res = contract_bmps(&net, &TruncationPolicy::exact(), SweepDirection::LeftToRight);
        assert!((res.amplitude.unwrap() - C64::new(chi as f64, 0.0)).norm() < 1e-10);
        assert!(res.total_discarded < 1e-20);
    }

    #[test]
    fn bmps_matches_brute_force() {
        let lat = SiteLattice::square(3, 3).unwrap();
        let mut r = rng::from_seed(4);
        let net = sample_random_tn(&lat, &max_entangled(2), TensorMode::Gaussian, &mut r).unwrap();
        let exact = contract_exhaustive(&net);
        for dir in [SweepDirection::LeftToRight, SweepDirection::RightToLeft] {
            let got = contract_bmps(&net, &TruncationPolicy::exact(), dir).amplitude.unwrap();
            assert!((got - exact).norm() < 1e-10 * exact.norm(), "{got} vs {exact}");
        }
    }

    #[test]
    fn exact_mode_amplitude_matches_state() {
        let lat = SiteLattice::square(2, 2).unwrap();
        let bond = max_entangled(2);
        let mut r = rng::from_seed(9);
        let net = sample_random_tn(&lat, &bond, TensorMode::Exact, &mut r).unwrap();
        // replay the draw to recover the circuit
        let mut r2 = rng::from_seed(9);
        let seed: u64 = r2.random();
        let spec = CircuitSpec::holographic(lat.clone(), bond, 0);
        let state = statevec::prepare_with_seed(&spec, seed).unwrap();
        let o = net.outcome.as_ref().unwrap();
        let idx = o.iter().zip(state.dims()).fold(0, |acc, (&s, &d)| acc * d + s);
        let amp = contract_exhaustive(&net);
        assert!((amp - state.amplitudes()[idx]).norm() < 1e-12);
    }

    #[test]
    fn chi_one_policy_aborts_on_bell_pairs() {
        let lat = SiteLattice::square(3, 3).unwrap();
        let mut r = rng::from_seed(1);
        let net = sample_random_tn(&lat, &max_entangled(2), TensorMode::Gaussian, &mut r).unwrap();
        let res = contract_bmps(&net, &TruncationPolicy::with_chi_max(1), SweepDirection::LeftToRight);
        assert!(res.aborted());
        let spec = CircuitSpec::holographic(lat, max_entangled(2), 0);
        let s = sebd_sample(&spec, &TruncationPolicy::with_chi_max(1), &mut r).unwrap();
        assert!(s.aborted_at.is_some());
    }

    #[test]
    fn sebd_probability_matches_born_rule() {
        let lat = SiteLattice::square(3, 2).unwrap();
        let bond = max_entangled(2);
        let spec = CircuitSpec::holographic(lat, bond, 0);
        let state = statevec::prepare_with_seed(&spec, 77).unwrap();
        let sampler = SebdSampler::new(&spec, 77, TruncationPolicy::exact()).unwrap();
        let mut r = rng::from_seed(3);
        for _ in 0..20 {
            let s = sampler.sample(&mut r);
            let o = s.outcome.unwrap();
            let idx = o.iter().zip(state.dims()).fold(0, |acc, (&s, &d)| acc * d + s);
            let born = state.amplitudes()[idx].norm_sqr();
            assert!((s.log_probability - born.ln()).abs() < 1e-9, "{} vs {}", s.log_probability, born.ln());
        }
    }
}
