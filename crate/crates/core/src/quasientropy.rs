//! Replica-2 quasientropy as a ratio of Ising partition functions.
//!
//! A spin per site marks whether the replica swap acts on it (`−1`) or not
//! (`+1`). Measured sites are summed over; `A` and `C` are pinned. The
//! energy of a configuration is the Rényi-2 entropy of its spin-down region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{RegionPartition, SiteLattice};
use crate::statevec::{EntropyOrder, PureState};

/// Exact enumeration handles at most this many free spins.
pub const MAX_FREE_SPINS: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum QuasiError {
    #[error("{0} free spins exceed the enumeration limit {MAX_FREE_SPINS}")]
    TooManySpins(usize),
    #[error("bond entropy list has {got} entries for {want} edges")]
    BondCount { got: usize, want: usize },
}

pub enum EnergyRule<'a> {
    /// `H = S₂(ρ^I)` of the spin-down region, from a reference state.
    General(&'a PureState),
    /// `H = Σ S_e` over anti-aligned edges.
    Holographic { edges: Vec<(usize, usize)>, bond_entropies: Vec<f64> },
}

pub struct IsingInstance<'a> {
    pub partition: RegionPartition,
    /// Hilbert dimension of each site; measured sites contribute `1/(D+1)`.
    pub site_dims: Vec<usize>,
    pub rule: EnergyRule<'a>,
}

impl<'a> IsingInstance<'a> {
    /// Nearest-neighbour instance with the same bond entropy on every edge.
    pub fn holographic(lattice: &SiteLattice, partition: RegionPartition, site_dims: Vec<usize>, bond_entropy: f64) -> Self {
        let bond_entropies = vec![bond_entropy; lattice.edges.len()];
        Self { partition, site_dims, rule: EnergyRule::Holographic { edges: lattice.edges.clone(), bond_entropies } }
    }

    pub fn general(state: &'a PureState, partition: RegionPartition) -> Self {
        Self { site_dims: state.dims().to_vec(), partition, rule: EnergyRule::General(state) }
    }

    fn check(&self) -> Result<(), QuasiError> {
        if self.partition.b.len() > MAX_FREE_SPINS {
            return Err(QuasiError::TooManySpins(self.partition.b.len()));
        }
        if let EnergyRule::Holographic { edges, bond_entropies } = &self.rule {
            if edges.len() != bond_entropies.len() {
                return Err(QuasiError::BondCount { got: bond_entropies.len(), want: edges.len() });
            }
        }
        Ok(())
    }

    /// Energy of the configuration whose spin-down set is `down`.
    fn energy(&self, down: &[bool]) -> f64 {
        match &self.rule {
            EnergyRule::General(state) => {
                let region: Vec<usize> = (0..down.len()).filter(|&i| down[i]).collect();
                state.entropy(&region, EntropyOrder::Renyi2)
            }
            EnergyRule::Holographic { edges, bond_entropies } => {
                edges.iter().zip(bond_entropies).filter(|((u, v), _)| down[*u] != down[*v]).map(|(_, s)| s).sum()
            }
        }
    }

    /// Energies of every free-spin configuration with `A` down and `C` up,
    /// indexed by the bitmask of down spins in `B`. Every boundary condition
    /// reduces to this table by global flip symmetry.
    fn energy_table(&self) -> Vec<f64> {
        let n = self.site_dims.len();
        let b = &self.partition.b;
        (0..1usize << b.len())
            .into_par_iter()
            .map(|mask| {
                let mut down = vec![false; n];
                for &a in &self.partition.a {
                    down[a] = true;
                }
                for (k, &s) in b.iter().enumerate() {
                    down[s] = mask >> k & 1 == 1;
                }
                self.energy(&down)
            })
            .collect()
    }

    fn energy_table_a_up(&self) -> Vec<f64> {
        let n = self.site_dims.len();
        let b = &self.partition.b;
        (0..1usize << b.len())
            .into_par_iter()
            .map(|mask| {
                let mut down = vec![false; n];
                for (k, &s) in b.iter().enumerate() {
                    down[s] = mask >> k & 1 == 1;
                }
                self.energy(&down)
            })
            .collect()
    }
}

/// Spin orientation of a pinned region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

fn sorted_sum_exp(energies: impl Iterator<Item = f64>) -> f64 {
    let mut terms: Vec<f64> = energies.map(|h| (-h).exp()).collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.iter().sum()
}

/// `Z_{τ_A τ_C} = Σ_σ e^{−H}` over free spins, without measurement weights.
pub fn z_boundary(instance: &IsingInstance, tau_a: Spin, tau_c: Spin) -> Result<f64, QuasiError> {
    instance.check()?;
    let nb = instance.partition.b.len();
    let full = (1usize << nb) - 1;
    // the energy of a pure state's region equals that of its complement
    let (table, flip) = match (tau_a, tau_c) {
        (Spin::Down, Spin::Up) => (instance.energy_table(), false),
        (Spin::Up, Spin::Down) => (instance.energy_table(), true),
        (Spin::Up, Spin::Up) => (instance.energy_table_a_up(), false),
        (Spin::Down, Spin::Down) => (instance.energy_table_a_up(), true),
    };
    Ok(sorted_sum_exp((0..=full).map(|m| table[if flip { full ^ m } else { m }])))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuasiReport {
    pub z_pp: f64,
    pub z_mp: f64,
    /// `Π_B 1/(D+1) · Z₋₊`: the averaged swap-trick numerator.
    pub numerator: f64,
    /// `Π_B 1/(D+1) · Z₊₊`.
    pub denominator: f64,
    pub q2: f64,
}

pub fn quasientropy(instance: &IsingInstance) -> Result<QuasiReport, QuasiError> {
    let z_pp = z_boundary(instance, Spin::Up, Spin::Up)?;
    let z_mp = z_boundary(instance, Spin::Down, Spin::Up)?;
    let w: f64 = instance.partition.b.iter().map(|&s| 1.0 / (instance.site_dims[s] as f64 + 1.0)).product();
    Ok(QuasiReport { z_pp, z_mp, numerator: w * z_mp, denominator: w * z_pp, q2: (z_pp / z_mp).ln() })
}

pub fn q2(instance: &IsingInstance) -> Result<f64, QuasiError> {
    Ok(quasientropy(instance)?.q2)
}
