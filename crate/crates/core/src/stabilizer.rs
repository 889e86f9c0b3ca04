//! Stabilizer states over qubits: bit-packed tableaux with destabilizers,
//! uniformly random Clifford elements, region entropies and the tripartite
//! GHZ/Bell decomposition.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::SiteLattice;
use crate::rng::{self, Rng};

#[derive(Debug, Error, PartialEq)]
pub enum StabilizerError {
    #[error("inconsistent region entropies {0:?}")]
    Inconsistent([i64; 3]),
    #[error("regions must partition all {0} qubits")]
    NotAPartition(usize),
    #[error("lattice needs at least three sites")]
    TooFewSites,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

fn get(v: &[u64], i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

fn set(v: &mut [u64], i: usize, b: bool) {
    if b {
        v[i / 64] |= 1 << (i % 64);
    } else {
        v[i / 64] &= !(1 << (i % 64));
    }
}

fn dot(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

/// `i^phase · Π_q X_q^{x_q} Z_q^{z_q}`, with `X` before `Z` on each qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pauli {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
    pub phase: u8,
}

impl Pauli {
    pub fn identity(n: usize) -> Self {
        Self { x: vec![0; words(n)], z: vec![0; words(n)], phase: 0 }
    }

    pub fn single(n: usize, q: usize, x: bool, z: bool) -> Self {
        let mut p = Self::identity(n);
        set(&mut p.x, q, x);
        set(&mut p.z, q, z);
        // Y = i X Z keeps the operator Hermitian
        p.phase = (x && z) as u8;
        p
    }

    pub fn x_bit(&self, q: usize) -> bool {
        get(&self.x, q)
    }

    pub fn z_bit(&self, q: usize) -> bool {
        get(&self.z, q)
    }

    pub fn mul(&self, other: &Pauli) -> Pauli {
        let flips = dot(&self.z, &other.x);
        Pauli {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
            phase: ((self.phase as u32 + other.phase as u32 + 2 * flips) % 4) as u8,
        }
    }

    pub fn commutes(&self, other: &Pauli) -> bool {
        (dot(&self.x, &other.z) + dot(&self.z, &other.x)) % 2 == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase as u32 % 2 == dot(&self.x, &self.z) % 2
    }

    /// `(x|z)` bits restricted to `qubits`, packed as `x` bits then `z` bits.
    fn restricted(&self, qubits: &[usize]) -> Vec<u64> {
        let k = qubits.len();
        let mut v = vec![0; words(2 * k)];
        for (j, &q) in qubits.iter().enumerate() {
            set(&mut v, j, self.x_bit(q));
            set(&mut v, k + j, self.z_bit(q));
        }
        v
    }
}

/// Clifford element on `k` qubits as the images of `X_0…X_{k−1}, Z_0…Z_{k−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Clifford {
    pub k: usize,
    pub images: Vec<Pauli>,
}

impl Clifford {
    pub fn identity(k: usize) -> Self {
        let images = (0..k).map(|q| Pauli::single(k, q, true, false)).chain((0..k).map(|q| Pauli::single(k, q, false, true))).collect();
        Self { k, images }
    }

    pub fn hadamard() -> Self {
        Self { k: 1, images: vec![Pauli::single(1, 0, false, true), Pauli::single(1, 0, true, false)] }
    }

    pub fn phase_gate() -> Self {
        Self { k: 1, images: vec![Pauli::single(1, 0, true, true), Pauli::single(1, 0, false, true)] }
    }

    /// Control qubit 0, target qubit 1.
    pub fn cnot() -> Self {
        let p = |xs: [bool; 2], zs: [bool; 2]| {
            let mut p = Pauli::identity(2);
            for q in 0..2 {
                set(&mut p.x, q, xs[q]);
                set(&mut p.z, q, zs[q]);
            }
            p
        };
        Self {
            k: 2,
            images: vec![
                p([true, true], [false, false]),
                p([false, true], [false, false]),
                p([false, false], [true, false]),
                p([false, false], [true, true]),
            ],
        }
    }
}

fn symplectic(a: &[u64], b: &[u64], k: usize) -> bool {
    // vectors are packed x bits then z bits
    let mut s = 0;
    for q in 0..k {
        s ^= (get(a, q) && get(b, k + q)) as u32 ^ (get(a, k + q) && get(b, q)) as u32;
    }
    s == 1
}

fn random_bits(len: usize, rng: &mut Rng) -> Vec<u64> {
    let mut v: Vec<u64> = (0..words(len)).map(|_| rng.random()).collect();
    if len % 64 != 0 {
        *v.last_mut().unwrap() &= (1u64 << (len % 64)) - 1;
    }
    v
}

fn xor_into(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

/// Uniformly random Clifford (up to global phase) via symplectic
/// Gram–Schmidt: each image pair is drawn uniformly from the symplectic
/// complement of the previous pairs, and every image gets a random sign.
pub fn random_clifford(k: usize, rng: &mut Rng) -> Clifford {
    let mut pairs: Vec<(Vec<u64>, Vec<u64>)> = Vec::with_capacity(k);
    let project = |u: &mut Vec<u64>, pairs: &[(Vec<u64>, Vec<u64>)]| {
        for (v, w) in pairs {
            let (uw, uv) = (symplectic(u, w, k), symplectic(u, v, k));
            if uw {
                xor_into(u, v);
            }
            if uv {
                xor_into(u, w);
            }
        }
    };
    for _ in 0..k {
        let v = loop {
            let mut u = random_bits(2 * k, rng);
            project(&mut u, &pairs);
            if u.iter().any(|&x| x != 0) {
                break u;
            }
        };
        let w = loop {
            let mut u = random_bits(2 * k, rng);
            project(&mut u, &pairs);
            if symplectic(&v, &u, k) {
                break u;
            }
        };
        pairs.push((v, w));
    }
    let to_pauli = |bits: &[u64], rng: &mut Rng| {
        let mut p = Pauli::identity(k);
        for q in 0..k {
            set(&mut p.x, q, get(bits, q));
            set(&mut p.z, q, get(bits, k + q));
        }
        p.phase = (dot(&p.x, &p.z) % 2) as u8 + 2 * (rng.random::<bool>() as u8);
        p
    };
    let xs: Vec<Pauli> = pairs.iter().map(|(v, _)| to_pauli(v, rng)).collect();
    let zs: Vec<Pauli> = pairs.iter().map(|(_, w)| to_pauli(w, rng)).collect();
    Clifford { k, images: xs.into_iter().chain(zs).collect() }
}

/// Stabilizer state with destabilizers: rows `0..n` destabilize, rows
/// `n..2n` stabilize.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    n: usize,
    rows: Vec<Pauli>,
}

impl Tableau {
    /// `|0…0⟩`.
    pub fn zero_state(n: usize) -> Self {
        let rows = (0..n).map(|q| Pauli::single(n, q, true, false)).chain((0..n).map(|q| Pauli::single(n, q, false, true))).collect();
        Self { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> &[Pauli] {
        &self.rows[self.n..]
    }

    pub fn apply(&mut self, c: &Clifford, qubits: &[usize]) {
        assert_eq!(c.k, qubits.len());
        let n = self.n;
        let images: Vec<Pauli> = c
            .images
            .iter()
            .map(|img| {
                let mut p = Pauli::identity(n);
                for (j, &q) in qubits.iter().enumerate() {
                    set(&mut p.x, q, img.x_bit(j));
                    set(&mut p.z, q, img.z_bit(j));
                }
                p.phase = img.phase;
                p
            })
            .collect();
        let k = c.k;
        for row in &mut self.rows {
            let mut local = Pauli::identity(n);
            let mut rest = row.clone();
            for (j, &q) in qubits.iter().enumerate() {
                if row.x_bit(q) {
                    local = local.mul(&images[j]);
                }
                if row.z_bit(q) {
                    local = local.mul(&images[k + j]);
                }
                set(&mut rest.x, q, false);
                set(&mut rest.z, q, false);
            }
            *row = rest.mul(&local);
        }
    }

    pub fn h(&mut self, q: usize) {
        self.apply(&Clifford::hadamard(), &[q]);
    }

    pub fn s(&mut self, q: usize) {
        self.apply(&Clifford::phase_gate(), &[q]);
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        self.apply(&Clifford::cnot(), &[c, t]);
    }

    /// Computational-basis measurement; returns `(outcome, was_random)`.
    pub fn measure_z(&mut self, q: usize, rng: &mut Rng) -> (u8, bool) {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&i| self.rows[i].x_bit(q)) {
            let pivot = self.rows[p].clone();
            for i in 0..2 * n {
                if i != p && self.rows[i].x_bit(q) {
                    self.rows[i] = pivot.mul(&self.rows[i]);
                }
            }
            let outcome = rng.random::<bool>() as u8;
            self.rows[p - n] = pivot;
            let mut z = Pauli::single(n, q, false, true);
            z.phase = 2 * outcome;
            self.rows[p] = z;
            (outcome, true)
        } else {
            let mut acc = Pauli::identity(n);
            for j in 0..n {
                if self.rows[j].x_bit(q) {
                    acc = acc.mul(&self.rows[n + j]);
                }
            }
            (acc.phase / 2, false)
        }
    }

    /// Entanglement of `region` in bits: rank of the restricted generators
    /// minus the region size.
    pub fn entropy_bits(&self, region: &[usize]) -> usize {
        let rows: Vec<Vec<u64>> = self.stabilizers().iter().map(|s| s.restricted(region)).collect();
        gf2_rank(rows) - region.len()
    }

    /// Entanglement of `region` in nats.
    pub fn region_entropy(&self, region: &[usize]) -> f64 {
        self.entropy_bits(region) as f64 * std::f64::consts::LN_2
    }

    /// Rows pairwise commute where required, stabilizers are Hermitian and
    /// independent, and each destabilizer anticommutes only with its partner.
    pub fn is_valid(&self) -> bool {
        let n = self.n;
        for i in 0..2 * n {
            for j in 0..2 * n {
                let want = !(i % n == j % n && i != j);
                if self.rows[i].commutes(&self.rows[j]) != want {
                    return false;
                }
            }
        }
        let all = (0..n).collect::<Vec<_>>();
        self.stabilizers().iter().all(Pauli::is_hermitian)
            && gf2_rank(self.stabilizers().iter().map(|s| s.restricted(&all)).collect()) == n
    }

    /// Canonical generators of the stabilizer group (row-reduced, signed).
    pub fn canonical_stabilizers(&self) -> Vec<Pauli> {
        let n = self.n;
        let mut g: Vec<Pauli> = self.stabilizers().to_vec();
        let mut r = 0;
        for col in 0..2 * n {
            let bit = |p: &Pauli| if col < n { p.x_bit(col) } else { p.z_bit(col - n) };
            let Some(piv) = (r..n).find(|&i| bit(&g[i])) else { continue };
            g.swap(r, piv);
            for i in 0..n {
                if i != r && bit(&g[i]) {
                    g[i] = g[r].mul(&g[i]);
                }
            }
            r += 1;
        }
        g
    }

    /// Dense amplitudes (for cross-checks), fixed up to a global phase by
    /// projecting a seeded random vector onto the stabilizer code space.
    pub fn to_dense(&self, rng: &mut Rng) -> Vec<crate::C64> {
        let dim = 1usize << self.n;
        let mut v: Vec<crate::C64> = (0..dim).map(|_| crate::linalg::complex_gaussian(rng)).collect();
        for s in self.stabilizers() {
            let sv = apply_pauli_dense(s, &v, self.n);
            v = v.iter().zip(&sv).map(|(a, b)| (a + b) * 0.5).collect();
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter().map(|a| a / norm).collect()
    }
}

/// `P|v⟩` with qubit 0 as the most significant bit.
pub fn apply_pauli_dense(p: &Pauli, v: &[crate::C64], n: usize) -> Vec<crate::C64> {
    let mut xmask = 0usize;
    let mut zmask = 0usize;
    for q in 0..n {
        let bit = 1 << (n - 1 - q);
        if p.x_bit(q) {
            xmask |= bit;
        }
        if p.z_bit(q) {
            zmask |= bit;
        }
    }
    let ph = [crate::C64::new(1.0, 0.0), crate::C64::new(0.0, 1.0), crate::C64::new(-1.0, 0.0), crate::C64::new(0.0, -1.0)][p.phase as usize];
    let mut out = vec![crate::C64::new(0.0, 0.0); v.len()];
    // X^x Z^z |b⟩ = (−1)^{z·b} |b ⊕ x⟩
    for (b, &a) in v.iter().enumerate() {
        let sign = if (b & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        out[b ^ xmask] += ph * a * sign;
    }
    out
}

/// Rank over GF(2) of equal-length bit rows.
pub fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let Some(width) = rows.first().map(|r| r.len() * 64) else { return 0 };
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&i| get(&rows[i], col)) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, r) in rows.iter_mut().enumerate() {
            if i != rank && get(r, col) {
                xor_into(r, &pivot);
            }
        }
        rank += 1;
    }
    rank
}

/// Basis of the stabilizer subgroup supported inside `region`, as full
/// `(x|z)` bit rows.
fn supported_subgroup(t: &Tableau, region: &[usize]) -> Vec<Vec<u64>> {
    let n = t.n;
    let outside: Vec<usize> = (0..n).filter(|q| !region.contains(q)).collect();
    let all: Vec<usize> = (0..n).collect();
    let mut rows: Vec<(Vec<u64>, Vec<u64>)> = t.stabilizers().iter().map(|s| (s.restricted(&outside), s.restricted(&all))).collect();
    let width = 2 * outside.len();
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&i| get(&rows[i].0, col)) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, r) in rows.iter_mut().enumerate() {
            if i != rank && get(&r.0, col) {
                xor_into(&mut r.0, &pivot.0);
                xor_into(&mut r.1, &pivot.1);
            }
        }
        rank += 1;
    }
    rows.into_iter().skip(rank).map(|r| r.1).collect()
}

/// GHZ and Bell-pair counts of a pure tripartite stabilizer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripartiteShape {
    pub g: usize,
    pub e_hi: usize,
    pub e_hj: usize,
    pub e_ij: usize,
    /// Qubits of each party in neither a GHZ nor a Bell pair.
    pub local: [usize; 3],
}

/// Decomposition from the GHZ count and the three single-party entropies.
/// The GHZ count is `n − dim(S_HI + S_HJ + S_IJ)`: every GHZ contributes one
/// generator that no two parties can hold alone.
pub fn tripartite_shape(t: &Tableau, h: &[usize], i: &[usize], j: &[usize]) -> Result<TripartiteShape, StabilizerError> {
    let n = t.n;
    let mut all: Vec<usize> = h.iter().chain(i).chain(j).copied().collect();
    all.sort_unstable();
    all.dedup();
    if all.len() != n || h.len() + i.len() + j.len() != n {
        return Err(StabilizerError::NotAPartition(n));
    }
    let union = |a: &[usize], b: &[usize]| a.iter().chain(b).copied().collect::<Vec<_>>();
    let mut pair_rows = supported_subgroup(t, &union(h, i));
    pair_rows.extend(supported_subgroup(t, &union(h, j)));
    pair_rows.extend(supported_subgroup(t, &union(i, j)));
    let g = n - gf2_rank(pair_rows);
    let s = [t.entropy_bits(h) as i64, t.entropy_bits(i) as i64, t.entropy_bits(j) as i64];
    let g_i = g as i64;
    let twice = [s[0] + s[1] - s[2] - g_i, s[0] + s[2] - s[1] - g_i, s[1] + s[2] - s[0] - g_i];
    if twice.iter().any(|&x| x < 0 || x % 2 != 0) {
        return Err(StabilizerError::Inconsistent(s));
    }
    let (e_hi, e_hj, e_ij) = ((twice[0] / 2) as usize, (twice[1] / 2) as usize, (twice[2] / 2) as usize);
    let used = [g + e_hi + e_hj, g + e_hi + e_ij, g + e_hj + e_ij];
    let sizes = [h.len(), i.len(), j.len()];
    if (0..3).any(|k| used[k] > sizes[k]) {
        return Err(StabilizerError::Inconsistent(s));
    }
    Ok(TripartiteShape { g, e_hi, e_hj, e_ij, local: [sizes[0] - used[0], sizes[1] - used[1], sizes[2] - used[2]] })
}

impl TripartiteShape {
    /// Entropies (bits) of `H, I, J, HI, HJ` implied by the shape.
    pub fn entropies(&self) -> [usize; 5] {
        let (g, a, b, c) = (self.g, self.e_hi, self.e_hj, self.e_ij);
        // S(HI) = S(J), S(HJ) = S(I) for pure states
        [g + a + b, g + a + c, g + b + c, g + b + c, g + a + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondKind {
    /// `m` Bell pairs per edge.
    MaxEntangled,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteGates {
    RandomClifford,
    Identity,
}

/// Holographic Clifford state: every edge carries `m` qubit pairs, every
/// site a Clifford on all of its qubits. Returns the tableau and the qubits
/// of each site.
pub fn holographic_clifford_state(lattice: &SiteLattice, m: usize, bonds: BondKind, gates: SiteGates, rng: &mut Rng) -> (Tableau, Vec<Vec<usize>>) {
    let n = 2 * lattice.edges.len() * m;
    let mut t = Tableau::zero_state(n);
    let leg = |e: usize, side: usize, k: usize| (2 * e + side) * m + k;
    if bonds == BondKind::MaxEntangled {
        for e in 0..lattice.edges.len() {
            for k in 0..m {
                t.h(leg(e, 0, k));
                t.cnot(leg(e, 0, k), leg(e, 1, k));
            }
        }
    }
    let incident = lattice.incident_edges();
    let site_qubits: Vec<Vec<usize>> = incident
        .iter()
        .enumerate()
        .map(|(s, inc)| {
            inc.iter().flat_map(|&e| {
                let side = if lattice.edges[e].0 == s { 0 } else { 1 };
                (0..m).map(move |k| leg(e, side, k))
            })
            .collect()
        })
        .collect();
    if gates == SiteGates::RandomClifford {
        for qs in &site_qubits {
            if !qs.is_empty() {
                let c = random_clifford(qs.len(), rng);
                t.apply(&c, qs);
            }
        }
    }
    (t, site_qubits)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub sample: usize,
    pub s_h: usize,
    pub s_i: usize,
    pub s_j: usize,
    pub g: usize,
    pub e_hi: usize,
    pub e_hj: usize,
    pub e_ij: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripartiteReport {
    pub m: usize,
    pub n_samples: usize,
    pub c2: f64,
    /// Fraction with all three single-qubit purities below `c2`.
    pub probability: f64,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
    /// Fraction with every site entropy at least `ln 2`.
    pub site_premise: f64,
    /// Counts of single-qubit purities `1` and `1/2`.
    pub purity_histogram: [u64; 2],
    pub records: Vec<ShapeRecord>,
}

pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p + z * z / (2.0 * nf)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * nf)) / nf).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Tripartite MIE statistics over (circuit, triple, outcome) samples. Each
/// sample measures every site outside a random triple `{H, I, J}`, records
/// the site-level shape, then keeps one random qubit per site, measures the
/// rest and checks all three single-qubit purities against `c2`.
pub fn tripartite_mie_experiment(
    lattice: &SiteLattice,
    m: usize,
    n_samples: usize,
    c2: f64,
    bonds: BondKind,
    gates: SiteGates,
    seed: u64,
) -> Result<TripartiteReport, StabilizerError> {
    let n_sites = lattice.n_sites();
    if n_sites < 3 {
        return Err(StabilizerError::TooFewSites);
    }
    let results: Vec<Result<(ShapeRecord, [u64; 2], bool), StabilizerError>> = (0..n_samples)
        .into_par_iter()
        .map(|sample| {
            let mut rng = rng::stream(seed, sample as u64);
            let (mut t, site_qubits) = holographic_clifford_state(lattice, m, bonds, gates, &mut rng);
            let mut triple = Vec::with_capacity(3);
            while triple.len() < 3 {
                let s = rng.random_range(0..n_sites);
                if !triple.contains(&s) {
                    triple.push(s);
                }
            }
            for (s, qs) in site_qubits.iter().enumerate() {
                if !triple.contains(&s) {
                    for &q in qs {
                        t.measure_z(q, &mut rng);
                    }
                }
            }
            // measured qubits are in product states, so they join the local part
            let parts: Vec<Vec<usize>> = triple.iter().map(|&s| site_qubits[s].clone()).collect();
            let mut rest: Vec<usize> = (0..t.n()).filter(|q| !parts.iter().flatten().any(|x| x == q)).collect();
            let mut h = parts[0].clone();
            h.append(&mut rest);
            let shape = tripartite_shape(&t, &h, &parts[1], &parts[2])?;
            let s = [t.entropy_bits(&parts[0]), t.entropy_bits(&parts[1]), t.entropy_bits(&parts[2])];
            let site_ok = s.iter().all(|&x| x >= 1);
            let keep: Vec<Option<usize>> = parts
                .iter()
                .map(|qs| (!qs.is_empty()).then(|| qs[rng.random_range(0..qs.len())]))
                .collect();
            for qs in &parts {
                for &q in qs {
                    if !keep.contains(&Some(q)) {
                        t.measure_z(q, &mut rng);
                    }
                }
            }
            let mut hist = [0u64; 2];
            let mut pass = true;
            for k in &keep {
                let purity = match k {
                    Some(q) => 0.5f64.powi(t.entropy_bits(&[*q]) as i32),
                    None => 1.0,
                };
                hist[if purity < 1.0 { 1 } else { 0 }] += 1;
                pass &= purity < c2;
            }
            let rec = ShapeRecord {
                sample,
                s_h: s[0],
                s_i: s[1],
                s_j: s[2],
                g: shape.g,
                e_hi: shape.e_hi,
                e_hj: shape.e_hj,
                e_ij: shape.e_ij,
                pass,
            };
            Ok((rec, hist, site_ok))
        })
        .collect();
    let mut records = Vec::with_capacity(n_samples);
    let mut hist = [0u64; 2];
    let mut site_hits = 0;
    for r in results {
        let (rec, h, ok) = r?;
        hist[0] += h[0];
        hist[1] += h[1];
        site_hits += ok as usize;
        records.push(rec);
    }
    let hits = records.iter().filter(|r| r.pass).count();
    Ok(TripartiteReport {
        m,
        n_samples,
        c2,
        probability: hits as f64 / n_samples.max(1) as f64,
        ci: wilson_interval(hits, n_samples),
        site_premise: site_hits as f64 / n_samples.max(1) as f64,
        purity_histogram: hist,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz3() -> Tableau {
        let mut t = Tableau::zero_state(3);
        t.h(0);
        t.cnot(0, 1);
        t.cnot(1, 2);
        t
    }

    #[test]
    fn bell_and_ghz_entropies() {
        let mut t = Tableau::zero_state(2);
        t.h(0);
        t.cnot(0, 1);
        assert_eq!(t.entropy_bits(&[0]), 1);
        let g = ghz3();
        assert_eq!(g.entropy_bits(&[1]), 1);
        assert_eq!(g.entropy_bits(&[0, 2]), 1);
        assert!(g.is_valid());
    }

    #[test]
    fn fixtures_have_expected_shapes() {
        let s = tripartite_shape(&ghz3(), &[0], &[1], &[2]).unwrap();
        assert_eq!((s.g, s.e_hi, s.e_hj, s.e_ij), (1, 0, 0, 0));
        let mut t = Tableau::zero_state(6);
        // Bell pairs (0,2), (1,4), (3,5); H = {0,1}, I = {2,3}, J = {4,5}
        for (a, b) in [(0, 2), (1, 4), (3, 5)] {
            t.h(a);
            t.cnot(a, b);
        }
        let s = tripartite_shape(&t, &[0, 1], &[2, 3], &[4, 5]).unwrap();
        assert_eq!((s.g, s.e_hi, s.e_hj, s.e_ij), (0, 1, 1, 1));
        assert_eq!(s.local, [0, 0, 0]);
    }

    #[test]
    fn measurement_outcomes_and_validity() {
        let mut rng = rng::from_seed(1);
        let mut t = ghz3();
        let (o, random) = t.measure_z(0, &mut rng);
        assert!(random);
        assert!(t.is_valid());
        for q in 1..3 {
            assert_eq!(t.measure_z(q, &mut rng), (o, false));
        }
        let mut z = Tableau::zero_state(2);
        z.h(0);
        z.s(0);
        z.s(0);
        z.h(0);
        // H Z H = X flips |0⟩ to |1⟩
        assert_eq!(z.measure_z(0, &mut rng), (1, false));
    }

    #[test]
    fn random_cliffords_preserve_validity() {
        let mut rng = rng::from_seed(2);
        for k in 1..8 {
            let c = random_clifford(k, &mut rng);
            let t = Tableau { n: k, rows: c.images.clone() };
            assert!(t.is_valid(), "k = {k}");
        }
        let mut t = Tableau::zero_state(10);
        for _ in 0..5 {
            let c = random_clifford(4, &mut rng);
            t.apply(&c, &[1, 7, 3, 9]);
            t.measure_z(7, &mut rng);
            assert!(t.is_valid());
        }
    }

    #[test]
    fn dense_state_is_stabilized() {
        let mut rng = rng::from_seed(3);
        let mut t = Tableau::zero_state(4);
        t.apply(&random_clifford(4, &mut rng), &[0, 1, 2, 3]);
        let v = t.to_dense(&mut rng);
        for s in t.stabilizers() {
            let sv = apply_pauli_dense(s, &v, 4);
            let err: f64 = sv.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(err < 1e-20);
        }
    }

    #[test]
    fn product_bonds_and_identity_gates_never_pass() {
        let lat = SiteLattice::square(2, 2).unwrap();
        let r = tripartite_mie_experiment(&lat, 1, 50, 0.9, BondKind::Product, SiteGates::Identity, 4).unwrap();
        assert_eq!(r.probability, 0.0);
    }
}
