//! The inequality chain from distillation error to entanglement, and every
//! closed-form constant that feeds it.
//!
//! Entropies are in nats throughout; [`nats_to_bits`] is for reporting only.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{h2, hermitian_eigenvalues, hermitize, CMat};
use crate::C64;

/// Rigorous upper bound on `ln μ` for the square lattice (nats).
pub const SQUARE_MU_LOG_UPPER: f64 = 0.97;

/// Exact honeycomb connective constant `√(2+√2)`.
pub fn honeycomb_mu() -> f64 {
    (2.0 + 2f64.sqrt()).sqrt()
}

pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("distillation error {0} outside [0, 2]")]
    EpsOutOfRange(f64),
    #[error("target dimension must be at least 1")]
    ZeroDimension,
    #[error("concentration needs delta > ln 2, got {0}")]
    DeltaTooSmall(f64),
    #[error("POVM elements sum to identity only within {0:e}")]
    NotAPovm(f64),
    #[error("POVM is empty")]
    EmptyPovm,
}

/// Entanglement lower bound from a distillation error:
/// `S ≥ (1 − ε/2) ln d' − h₂(ε/2)`.
pub fn distillation_entropy_bound(eps: f64, d_prime: f64) -> Result<f64, BoundsError> {
    if !(0.0..=2.0).contains(&eps) {
        return Err(BoundsError::EpsOutOfRange(eps));
    }
    if d_prime < 1.0 {
        return Err(BoundsError::ZeroDimension);
    }
    Ok((1.0 - eps / 2.0) * d_prime.ln() - h2(eps / 2.0))
}

/// Markov bound on `Pr(S < ln d' − δ)`, clamped to a probability.
pub fn markov_concentration(eps_bar: f64, d_prime: f64, delta: f64) -> Result<f64, BoundsError> {
    if delta <= std::f64::consts::LN_2 {
        return Err(BoundsError::DeltaTooSmall(delta));
    }
    Ok((0.5 * eps_bar * d_prime.ln() / (delta - std::f64::consts::LN_2)).min(1.0))
}

/// Double-counting factor `f(x) = (eˣ − 1)/x`, with `f(0) = 1`.
pub fn double_count_factor(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// Average distillation error bound `√d' · Z · f(Z)`.
pub fn wall_sum_eps_bound(z: f64, d_prime: f64) -> f64 {
    d_prime.sqrt() * z * double_count_factor(z)
}

/// Full report of the SAW-to-entanglement chain for one `Z` upper bound.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundReport {
    pub z_upper: f64,
    pub f_saw: f64,
    /// Optimal target dimension `⌈F⁻² e^{2F}⌉`; integral, stored as `f64`
    /// because it overflows machine integers for large `F`.
    pub d_prime: f64,
    pub mie_lower_nats: f64,
    pub eps_upper: f64,
    pub valid: bool,
}

/// `2F − 2 ln(eF)` for `F = −ln Z ≥ 2`, zero otherwise.
pub fn mie_lower_bound(z_upper: f64) -> BoundReport {
    let f = -z_upper.ln();
    let d_prime = if f > 0.0 { ((2.0 * f).exp() / (f * f)).ceil().max(1.0) } else { 1.0 };
    let valid = f >= 2.0;
    let mie_lower_nats = if valid { 2.0 * f - 2.0 * (std::f64::consts::E * f).ln() } else { 0.0 };
    BoundReport { z_upper, f_saw: f, d_prime, mie_lower_nats, eps_upper: wall_sum_eps_bound(z_upper, d_prime), valid }
}

/// Square-root-of-`Z₋₊` value obtained by bounding every Ising term
/// separately; exceeds 1 on any sizeable lattice.
pub fn separate_terms_bound(d_prime: f64, z_minus_plus: f64) -> f64 {
    (d_prime * z_minus_plus).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HolographicThreshold {
    pub s_crit_nats: f64,
    pub s_crit_bits: f64,
    pub chi_crit: u64,
}

/// Critical bond entropy `2 ln μ` and the smallest bond dimension whose
/// maximally entangled bond exceeds it.
pub fn holographic_threshold(mu_log_upper: f64) -> HolographicThreshold {
    let s = 2.0 * mu_log_upper;
    let mut chi = 2u64;
    while (chi as f64).ln() <= s {
        chi += 1;
    }
    HolographicThreshold { s_crit_nats: s, s_crit_bits: nats_to_bits(s), chi_crit: chi }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Depth-2 circuit of four-qudit plaquette gates.
    FourlocalD2,
    /// Depth-4 brickwork of two-qudit gates.
    BrickworkD4,
}

impl Architecture {
    /// Number of nontrivial boundary configurations per cell.
    pub fn n_configurations(self) -> u32 {
        match self {
            Architecture::FourlocalD2 => (1 << 8) - 1,
            Architecture::BrickworkD4 => (1 << 16) - 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellFactorTable {
    pub architecture: Architecture,
    pub q: u64,
    pub c1: f64,
    pub c2: f64,
    pub per_cell_factor: f64,
    pub threshold_met: bool,
}

/// Haar-integral constants `(c₁, c₂)` of an architecture at local dimension `q`.
pub fn cell_constants(arch: Architecture, q: u64) -> (f64, f64) {
    let q = q as f64;
    match arch {
        Architecture::FourlocalD2 => {
            let q4 = q.powi(4) + 1.0;
            ((q * (q * q + 1.0) / q4).sqrt(), (2.0 * q * q / q4).sqrt())
        }
        Architecture::BrickworkD4 => {
            let q2 = q * q + 1.0;
            ((q * (q.powi(4) + 6.0 * q * q + 1.0) / q2.powi(3)).sqrt(), 2.0 * q / q2)
        }
    }
}

/// Upper bound on the contribution of one boundary configuration to the
/// per-cell factor. Configurations are bitmasks in `1..2^k`.
pub trait ConfigurationBound: Sync {
    fn term(&self, arch: Architecture, q: u64, config: u32) -> f64;
}

/// Every configuration bounded by the same constant: `c₂` for plaquettes,
/// `√3 c₂'` for brickwork.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrudeUniform;

impl ConfigurationBound for CrudeUniform {
    fn term(&self, arch: Architecture, q: u64, _config: u32) -> f64 {
        let (_, c2) = cell_constants(arch, q);
        match arch {
            Architecture::FourlocalD2 => c2,
            Architecture::BrickworkD4 => 3f64.sqrt() * c2,
        }
    }
}

/// Caller-supplied per-configuration bounds, indexed by `config − 1`, as
/// functions of `(c₁, c₂)`.
pub struct Tabulated<F: Fn(f64, f64) -> f64 + Sync> {
    pub terms: Vec<F>,
}

impl<F: Fn(f64, f64) -> f64 + Sync> ConfigurationBound for Tabulated<F> {
    fn term(&self, arch: Architecture, q: u64, config: u32) -> f64 {
        let (c1, c2) = cell_constants(arch, q);
        (self.terms[config as usize - 1])(c1, c2)
    }
}

/// Per-cell factor under a configuration rule, tested against `1/μ_hex`.
pub fn cell_factor_table(arch: Architecture, q: u64, rule: &dyn ConfigurationBound) -> CellFactorTable {
    let (c1, c2) = cell_constants(arch, q);
    let per_cell_factor: f64 = (1..=arch.n_configurations()).map(|c| rule.term(arch, q, c)).sum();
    CellFactorTable {
        architecture: arch,
        q,
        c1,
        c2,
        per_cell_factor,
        threshold_met: per_cell_factor * honeycomb_mu() < 1.0,
    }
}

pub fn fourlocal_constants(q: u64) -> CellFactorTable {
    crude_table(Architecture::FourlocalD2, q)
}

pub fn brickwork_constants(q: u64) -> CellFactorTable {
    crude_table(Architecture::BrickworkD4, q)
}

fn crude_table(arch: Architecture, q: u64) -> CellFactorTable {
    let (c1, c2) = cell_constants(arch, q);
    let per_cell_factor = CrudeUniform.term(arch, q, 1) * arch.n_configurations() as f64;
    CellFactorTable { architecture: arch, q, c1, c2, per_cell_factor, threshold_met: per_cell_factor * honeycomb_mu() < 1.0 }
}

/// Smallest `q ≥ 2` meeting the crude threshold, scanning up to `q_max`.
pub fn crude_threshold_q(arch: Architecture, q_max: u64) -> Option<u64> {
    (2..=q_max).into_par_iter().find_first(|&q| crude_table(arch, q).threshold_met)
}

/// `λ ≤ ‖P₀ Φ P₀‖^{1/2}` for an explicit POVM, where
/// `Φ = d Σ_s |F_s⟩⟩⟨⟨F_s| / Tr F_s` acts on vectorized operators and `P₀`
/// projects onto traceless operators.
pub fn contractivity_lambda(povm: &[CMat]) -> Result<f64, BoundsError> {
    let d = povm.first().ok_or(BoundsError::EmptyPovm)?.nrows();
    let sum = povm.iter().fold(CMat::zeros(d, d), |acc, f| acc + f);
    let err = (sum - CMat::identity(d, d)).norm();
    if err > 1e-10 {
        return Err(BoundsError::NotAPovm(err));
    }
    let vec = |m: &CMat| -> DMatrix<C64> { DMatrix::from_iterator(d * d, 1, m.iter().copied()) };
    let mut phi = CMat::zeros(d * d, d * d);
    for f in povm {
        let tr = f.trace().re;
        if tr <= 0.0 {
            continue;
        }
        let v = vec(f);
        phi += (&v * v.adjoint()) * C64::new(d as f64 / tr, 0.0);
    }
    let id = vec(&CMat::identity(d, d));
    let p0 = CMat::identity(d * d, d * d) - (&id * id.adjoint()) * C64::new(1.0 / d as f64, 0.0);
    let m = hermitize(&(&p0 * phi * &p0));
    let top = hermitian_eigenvalues(&m).last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct AdvantagePremise {
    pub m: u32,
    pub beta: f64,
    pub nu: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Ordered-phase premise for `q = 2^m` stabilizer holographic circuits:
/// `½ m ln 2 ≥ ln 3 + ln μ` and `ν = e^{ln μ − β} ≤ 1/3`.
pub fn advantage_premise_check(m: u32, mu_log_upper: f64) -> AdvantagePremise {
    let beta = 0.5 * m as f64 * std::f64::consts::LN_2;
    let nu = (mu_log_upper - beta).exp();
    let rhs = 3f64.ln() + mu_log_upper;
    AdvantagePremise { m, beta, nu, lhs: beta, rhs, pass: beta >= rhs && nu <= 1.0 / 3.0 }
}

/// Smallest `m` passing the premise.
pub fn advantage_min_m(mu_log_upper: f64) -> u32 {
    (1..).find(|&m| advantage_premise_check(m, mu_log_upper).pass).unwrap()
}
