//! Experiment configuration: one section per subcommand, every field
//! defaulted, unknown keys rejected.

use serde::{Deserialize, Serialize};

use crate::bmps::{TruncationPolicy, DEFAULT_ABORT_TOLERANCE};
use crate::bounds::SQUARE_MU_LOG_UPPER;
use crate::lattice::{LatticeKind, RegionPartition, SiteLattice};
use crate::saw::WalkLattice;
use crate::stabilizer::{BondKind, SiteGates};
use crate::statevec::{CircuitFamily, CircuitSpec};
use crate::C64;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub saw_enum: SawEnumConfig,
    pub zsaw: ZsawConfig,
    pub bound: BoundConfig,
    pub mie_sim: MieSimConfig,
    pub distill: DistillConfig,
    pub quasi: QuasiConfig,
    pub stab_advantage: StabAdvantageConfig,
    pub sebd: SebdConfig,
    pub thresholds: ThresholdsConfig,
    pub selfcheck: SelfcheckConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 42,
            saw_enum: Default::default(),
            zsaw: Default::default(),
            bound: Default::default(),
            mie_sim: Default::default(),
            distill: Default::default(),
            quasi: Default::default(),
            stab_advantage: Default::default(),
            sebd: Default::default(),
            thresholds: Default::default(),
            selfcheck: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub kind: LatticeKind,
    pub width: usize,
    pub height: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { kind: LatticeKind::Square, width: 2, height: 3 }
    }
}

impl LatticeConfig {
    pub fn square(width: usize, height: usize) -> Self {
        Self { kind: LatticeKind::Square, width, height }
    }

    pub fn build(&self) -> Result<SiteLattice, String> {
        SiteLattice::new(self.kind, self.width, self.height).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    Strip,
    HalfChain,
    BulkTriple { h: usize, i: usize, j: usize },
    Custom { a: Vec<usize>, c: Vec<usize> },
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig::HalfChain
    }
}

impl PartitionConfig {
    pub fn build(&self, lat: &SiteLattice) -> Result<RegionPartition, String> {
        match self {
            PartitionConfig::Strip => RegionPartition::strip(lat),
            PartitionConfig::HalfChain => RegionPartition::half_chain(lat),
            PartitionConfig::BulkTriple { h, i, j } => RegionPartition::bulk_triple(lat, *h, *i, *j),
            PartitionConfig::Custom { a, c } => RegionPartition::custom(lat.n_sites(), a.clone(), c.clone()),
        }
        .map_err(|e| e.to_string())
    }
}

/// Two-leg bond state, given by its Schmidt form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BondConfig {
    MaxEntangled,
    Product,
    /// Schmidt probabilities, one per leg index; normalized on use.
    Schmidt { probabilities: Vec<f64> },
}

impl Default for BondConfig {
    fn default() -> Self {
        BondConfig::MaxEntangled
    }
}

impl BondConfig {
    pub fn state(&self, chi: usize) -> Result<Vec<C64>, String> {
        let probs: Vec<f64> = match self {
            BondConfig::MaxEntangled => vec![1.0; chi],
            BondConfig::Product => (0..chi).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect(),
            BondConfig::Schmidt { probabilities } => {
                if probabilities.len() != chi {
                    return Err(format!("{} Schmidt probabilities for chi = {chi}", probabilities.len()));
                }
                probabilities.clone()
            }
        };
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0)) || !(total > 0.0) {
            return Err("Schmidt probabilities must be non-negative with a positive sum".into());
        }
        let mut w = vec![C64::new(0.0, 0.0); chi * chi];
        for (k, p) in probs.iter().enumerate() {
            w[k * chi + k] = C64::new((p / total).sqrt(), 0.0);
        }
        Ok(w)
    }

    /// Rényi-2 entropy of one leg, nats.
    pub fn renyi2(&self, chi: usize) -> Result<f64, String> {
        let w = self.state(chi)?;
        let purity: f64 = (0..chi).map(|k| w[k * chi + k].norm_sqr().powi(2)).sum();
        Ok(-purity.ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitConfig {
    pub family: CircuitFamily,
    pub chi: usize,
    pub bond: BondConfig,
    pub q: usize,
    pub depth: usize,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self { family: CircuitFamily::Holographic, chi: 2, bond: BondConfig::MaxEntangled, q: 2, depth: 2 }
    }
}

impl CircuitConfig {
    pub fn spec(&self, lattice: SiteLattice, seed: u64) -> Result<CircuitSpec, String> {
        if self.chi == 0 || self.q == 0 {
            return Err("chi and q must be positive".into());
        }
        Ok(match self.family {
            CircuitFamily::Holographic => CircuitSpec::holographic(lattice, self.bond.state(self.chi)?, seed),
            CircuitFamily::Plaquette4Local => CircuitSpec::plaquette(lattice, self.q, self.depth, seed),
            CircuitFamily::Brickwork => CircuitSpec::brickwork(lattice, self.q, self.depth, seed),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SawEnumConfig {
    pub lattice: WalkLattice,
    pub max_len: usize,
    pub polygon_max_len: usize,
}

impl Default for SawEnumConfig {
    fn default() -> Self {
        Self { lattice: WalkLattice::Square, max_len: 10, polygon_max_len: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZsawConfig {
    pub lattice: LatticeConfig,
    pub partition: PartitionConfig,
    /// Energy per crossed edge, nats.
    pub beta: f64,
    pub l_max: usize,
}

impl Default for ZsawConfig {
    fn default() -> Self {
        Self { lattice: LatticeConfig::square(4, 3), partition: PartitionConfig::Strip, beta: 1.5, l_max: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    /// Upper bound on `Z`; when absent it is computed from `walls`.
    pub z_upper: Option<f64>,
    pub walls: ZsawConfig,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { z_upper: None, walls: ZsawConfig { lattice: LatticeConfig::square(8, 3), beta: 3.0, l_max: 12, ..Default::default() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MieSimConfig {
    pub lattice: LatticeConfig,
    pub partition: PartitionConfig,
    pub circuit: CircuitConfig,
    pub n_circuits: usize,
    pub n_outcomes: usize,
}

impl Default for MieSimConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::default(),
            partition: PartitionConfig::HalfChain,
            circuit: CircuitConfig::default(),
            n_circuits: 16,
            n_outcomes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub lattice: LatticeConfig,
    pub partition: PartitionConfig,
    pub circuit: CircuitConfig,
    pub d_prime: usize,
    pub n_unitaries: usize,
    /// Enumerate every outcome of `B`; otherwise Born-sample `n_outcomes`.
    pub exhaustive: bool,
    pub n_outcomes: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::square(2, 2),
            partition: PartitionConfig::HalfChain,
            circuit: CircuitConfig::default(),
            d_prime: 2,
            n_unitaries: 32,
            exhaustive: true,
            n_outcomes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiConfig {
    pub lattice: LatticeConfig,
    pub partition: PartitionConfig,
    /// Holographic circuit whose bond entropy sets the couplings.
    pub circuit: CircuitConfig,
    /// Monte-Carlo swap-trick samples for comparison; zero skips it.
    pub n_samples: usize,
    /// Target dimension for the separate-term comparison.
    pub d_prime: usize,
}

impl Default for QuasiConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::default(),
            partition: PartitionConfig::HalfChain,
            circuit: CircuitConfig::default(),
            n_samples: 0,
            d_prime: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabAdvantageConfig {
    pub lattice: LatticeConfig,
    /// Qubits per bond leg; the local dimension is `2^m`.
    pub m: usize,
    pub n_samples: usize,
    /// Single-qubit purity threshold.
    pub c2: f64,
    pub bonds: BondKind,
    pub gates: SiteGates,
    pub mu_log_upper: f64,
}

impl Default for StabAdvantageConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::square(3, 3),
            m: 1,
            n_samples: 200,
            c2: 0.75,
            bonds: BondKind::MaxEntangled,
            gates: SiteGates::RandomClifford,
            mu_log_upper: SQUARE_MU_LOG_UPPER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub chi_max: usize,
    pub cutoff: f64,
    pub abort_tolerance: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { chi_max: 16, cutoff: 0.0, abort_tolerance: DEFAULT_ABORT_TOLERANCE }
    }
}

impl PolicyConfig {
    pub fn build(&self) -> Result<TruncationPolicy, String> {
        TruncationPolicy::new(self.chi_max, self.cutoff, self.abort_tolerance).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SebdConfig {
    pub lattice: LatticeConfig,
    pub circuit: CircuitConfig,
    pub policy: PolicyConfig,
    pub n_samples: usize,
}

impl Default for SebdConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::square(4, 4),
            circuit: CircuitConfig::default(),
            policy: PolicyConfig::default(),
            n_samples: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub mu_log_upper: f64,
    /// Largest local dimension scanned for the crude cell thresholds.
    pub q_max: u64,
    pub advantage_m: Vec<u32>,
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        Self { mu_log_upper: SQUARE_MU_LOG_UPPER, q_max: 1_000_000, advantage_m: vec![5, 6] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SelfcheckConfig {
    /// Criterion numbers to run; empty runs all.
    pub criteria: Vec<u32>,
}

fn positive(name: &str, v: usize) -> Result<(), String> {
    if v == 0 {
        Err(format!("{name} must be at least 1"))
    } else {
        Ok(())
    }
}

fn finite(name: &str, v: f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be finite"))
    }
}

impl ExperimentConfig {
    /// Parses JSON; errors carry the line and column of the offending token.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks beyond the schema; errors name the field path.
    pub fn validate(&self) -> Result<(), String> {
        let at = |path: &str, r: Result<(), String>| r.map_err(|e| format!("{path}: {e}"));
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        at("saw_enum.max_len", positive("max_len", self.saw_enum.max_len))?;
        at("zsaw.lattice", self.zsaw.lattice.build().map(|_| ()))?;
        at("zsaw.beta", finite("beta", self.zsaw.beta))?;
        if let Some(z) = self.bound.z_upper {
            if !(z > 0.0) {
                return Err("bound.z_upper: must be positive".into());
            }
        }
        at("bound.walls.lattice", self.bound.walls.lattice.build().map(|_| ()))?;
        at("mie_sim.lattice", self.mie_sim.lattice.build().map(|_| ()))?;
        at("mie_sim.circuit", self.mie_sim.circuit.spec(self.mie_sim.lattice.build()?, 0).map(|_| ()))?;
        at("mie_sim.n_circuits", positive("n_circuits", self.mie_sim.n_circuits))?;
        at("mie_sim.n_outcomes", positive("n_outcomes", self.mie_sim.n_outcomes))?;
        at("distill.circuit", self.distill.circuit.spec(self.distill.lattice.build()?, 0).map(|_| ()))?;
        at("distill.d_prime", positive("d_prime", self.distill.d_prime))?;
        at("distill.n_unitaries", positive("n_unitaries", self.distill.n_unitaries))?;
        at("quasi.circuit", self.quasi.circuit.bond.state(self.quasi.circuit.chi).map(|_| ()))?;
        at("quasi.d_prime", positive("d_prime", self.quasi.d_prime))?;
        at("stab_advantage.lattice", self.stab_advantage.lattice.build().map(|_| ()))?;
        at("stab_advantage.m", positive("m", self.stab_advantage.m))?;
        at("stab_advantage.n_samples", positive("n_samples", self.stab_advantage.n_samples))?;
        at("sebd.policy", self.sebd.policy.build().map(|_| ()))?;
        at("sebd.circuit", self.sebd.circuit.spec(self.sebd.lattice.build()?, 0).map(|_| ()))?;
        if self.sebd.circuit.family != CircuitFamily::Holographic {
            return Err("sebd.circuit.family: SEBD samples holographic circuits".into());
        }
        at("thresholds.mu_log_upper", finite("mu_log_upper", self.thresholds.mu_log_upper))?;
        Ok(())
    }
}
