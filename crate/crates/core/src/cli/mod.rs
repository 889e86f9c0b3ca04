//! `mielab` command line: config loading, one runner per subcommand and
//! deterministic JSON/CSV rendering.
//!
//! Reports never contain timings, paths or thread counts, so identical
//! configs and seeds give byte-identical output under any worker count.

pub mod acceptance;
pub mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bmps::sebd_sample;
use crate::bounds::{
    advantage_min_m, advantage_premise_check, separate_terms_bound, brickwork_constants, crude_threshold_q,
    fourlocal_constants, holographic_threshold, distillation_entropy_bound, wall_sum_eps_bound, nats_to_bits, mie_lower_bound,
    Architecture,
};
use crate::lattice::DualGraph;
use crate::quasientropy::{quasientropy, IsingInstance};
use crate::rng;
use crate::saw::{
    count_rooted_polygons, count_rooted_walks, enumerate_separating_walks, partition_function_from_walks, SawPartition,
    WeightModel,
};
use crate::stabilizer::tripartite_mie_experiment;
use crate::statevec::{self, distill, measure_exhaustive, measure_sampled, mie_monte_carlo, swap_trick_moments, EntropyOrder, Povm};

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn run_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Run(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Rooted self-avoiding walk and polygon counts.
    SawEnum,
    /// Certified partition function of separating walls.
    Zsaw,
    /// Entanglement lower bound from a `Z` upper bound.
    Bound,
    /// Monte-Carlo measurement-induced entanglement.
    MieSim,
    /// Distillation error of post-measurement states.
    Distill,
    /// Replica-2 quasientropy by Ising enumeration.
    Quasi,
    /// Stabilizer tripartite premise and its sampled probability.
    StabAdvantage,
    /// SEBD sampling of holographic circuits.
    Sebd,
    /// Closed-form thresholds and constants.
    Thresholds,
    /// Full acceptance suite.
    Selfcheck,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::SawEnum,
        Command::Zsaw,
        Command::Bound,
        Command::MieSim,
        Command::Distill,
        Command::Quasi,
        Command::StabAdvantage,
        Command::Sebd,
        Command::Thresholds,
        Command::Selfcheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SawEnum => "saw-enum",
            Command::Zsaw => "zsaw",
            Command::Bound => "bound",
            Command::MieSim => "mie-sim",
            Command::Distill => "distill",
            Command::Quasi => "quasi",
            Command::StabAdvantage => "stab-advantage",
            Command::Sebd => "sebd",
            Command::Thresholds => "thresholds",
            Command::Selfcheck => "selfcheck",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mielab", version, about = "Certified bounds and simulators for measurement-induced entanglement")]
pub struct Cli {
    /// JSON experiment config; omitted sections take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub seed: u64,
    pub units: BTreeMap<&'static str, &'static str>,
    /// Resolved config section of the subcommand.
    pub config: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub header: Header,
    pub summary: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    /// Process exit status implied by the report.
    #[serde(skip)]
    pub success: bool,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("reports serialize") + "\n",
            Format::Csv => self.render_csv(),
        }
    }

    fn render_csv(&self) -> String {
        let h = &self.header;
        let mut out = format!("# {} {} {}\n# seed: {}\n", h.tool, h.version, h.subcommand, h.seed);
        let units: Vec<String> = h.units.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out += &format!("# units: {}\n", units.join("; "));
        out += &format!("# config: {}\n", serde_json::to_string(&h.config).expect("config serializes"));
        let cell = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.table {
            Some(t) => {
                w.write_record(&t.columns).expect("in-memory write");
                for row in &t.rows {
                    w.write_record(row.iter().map(cell)).expect("in-memory write");
                }
            }
            None => {
                w.write_record(["key", "value"]).expect("in-memory write");
                if let Value::Object(map) = &self.summary {
                    for (k, v) in map {
                        w.write_record([k.clone(), cell(v)]).expect("in-memory write");
                    }
                }
            }
        }
        out + &String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

fn units(pairs: &[(&'static str, &'static str)]) -> BTreeMap<&'static str, &'static str> {
    pairs.iter().copied().collect()
}

fn report(cmd: Command, cfg: &ExperimentConfig, section: Value, unit_pairs: &[(&'static str, &'static str)], summary: Value, table: Option<Table>) -> Report {
    Report {
        header: Header {
            tool: "mielab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: cmd.name(),
            seed: cfg.seed,
            units: units(unit_pairs),
            config: section,
        },
        summary,
        table,
        success: true,
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

/// Runs one subcommand on a validated config.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match cmd {
        Command::SawEnum => run_saw_enum(cfg),
        Command::Zsaw => run_zsaw(cfg),
        Command::Bound => run_bound(cfg),
        Command::MieSim => run_mie_sim(cfg),
        Command::Distill => run_distill(cfg),
        Command::Quasi => run_quasi(cfg),
        Command::StabAdvantage => run_stab_advantage(cfg),
        Command::Sebd => run_sebd(cfg),
        Command::Thresholds => run_thresholds(cfg),
        Command::Selfcheck => run_selfcheck(cfg),
    }
}

fn run_saw_enum(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.saw_enum;
    let walks: Vec<u64> = (0..=c.max_len).into_par_iter().map(|n| count_rooted_walks(c.lattice, n)).collect();
    let polygons: Vec<Option<u64>> = (0..=c.max_len.max(c.polygon_max_len))
        .into_par_iter()
        .map(|l| if l <= c.polygon_max_len { count_rooted_polygons(c.lattice, l).ok() } else { None })
        .collect();
    let mut submultiplicative = true;
    for m in 1..=c.max_len {
        for n in 1..=c.max_len - m {
            submultiplicative &= walks[m + n] as u128 <= walks[m] as u128 * walks[n] as u128;
        }
    }
    let n_rows = c.max_len.max(c.polygon_max_len);
    let rows = (1..=n_rows)
        .map(|n| {
            let w = walks.get(n).copied();
            vec![
                json!(n),
                w.map_or(Value::Null, |x| json!(x)),
                w.map_or(Value::Null, |x| json!((x as f64).powf(1.0 / n as f64))),
                polygons[n].map_or(Value::Null, |x| json!(x)),
            ]
        })
        .collect();
    let summary = json!({
        "lattice": c.lattice,
        "growth_estimate": (walks[c.max_len] as f64).powf(1.0 / c.max_len as f64),
        "submultiplicative": submultiplicative,
    });
    Ok(report(
        Command::SawEnum,
        cfg,
        to_value(c),
        &[("walks", "count"), ("walks_root_n", "dimensionless"), ("polygons", "count, rooted")],
        summary,
        Some(Table { columns: vec!["n", "walks", "walks_root_n", "polygons"], rows }),
    ))
}

fn zsaw_partition(c: &config::ZsawConfig) -> Result<(SawPartition, Vec<(usize, usize, f64)>), CliError> {
    let lat = c.lattice.build().map_err(CliError::Config)?;
    let part = c.partition.build(&lat).map_err(CliError::Config)?;
    let dual = DualGraph::planar(&lat);
    let walks = enumerate_separating_walks(&dual, &part, c.l_max);
    let weight = WeightModel::PerEdge { beta: c.beta };
    let z = partition_function_from_walks(&dual, &part, &walks, &weight, c.l_max);
    let mut by_len: BTreeMap<usize, usize> = BTreeMap::new();
    for w in &walks {
        *by_len.entry(w.len()).or_default() += 1;
    }
    let rows = by_len.into_iter().map(|(l, n)| (l, n, n as f64 * (-c.beta * l as f64).exp())).collect();
    Ok((z, rows))
}

fn run_zsaw(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (z, rows) = zsaw_partition(&cfg.zsaw)?;
    let table = Table {
        columns: vec!["length", "n_walls", "weight"],
        rows: rows.into_iter().map(|(l, n, w)| vec![json!(l), json!(n), json!(w)]).collect(),
    };
    Ok(report(
        Command::Zsaw,
        cfg,
        to_value(&cfg.zsaw),
        &[("beta", "nats per edge"), ("weight", "dimensionless"), ("total_upper", "dimensionless")],
        to_value(&z),
        Some(table),
    ))
}

fn run_bound(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.bound;
    let (z, source) = match c.z_upper {
        Some(z) => (z, json!("config")),
        None => {
            let (p, _) = zsaw_partition(&c.walls)?;
            (p.total_upper, to_value(&p))
        }
    };
    let b = mie_lower_bound(z);
    let mut summary = to_value(&b);
    summary["mie_lower_bits"] = json!(nats_to_bits(b.mie_lower_nats));
    summary["z_source"] = source;
    Ok(report(
        Command::Bound,
        cfg,
        to_value(c),
        &[("f_saw", "nats"), ("mie_lower_nats", "nats"), ("mie_lower_bits", "bits"), ("eps_upper", "trace distance")],
        summary,
        None,
    ))
}

fn run_mie_sim(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.mie_sim;
    let lat = c.lattice.build().map_err(CliError::Config)?;
    let part = c.partition.build(&lat).map_err(CliError::Config)?;
    let spec = c.circuit.spec(lat, cfg.seed).map_err(CliError::Config)?;
    let est = mie_monte_carlo(&spec, &part, c.n_circuits, c.n_outcomes).map_err(run_err)?;
    let rows = est
        .records
        .iter()
        .map(|r| vec![json!(r.circuit_seed), json!(r.outcome_index), json!(r.p), json!(r.s_vn), json!(r.s_r2)])
        .collect();
    let summary = json!({
        "mean_nats": est.mean,
        "stderr_nats": est.stderr,
        "mean_bits": nats_to_bits(est.mean),
        "hist_max_nats": est.hist_max,
        "histogram": est.histogram,
    });
    Ok(report(
        Command::MieSim,
        cfg,
        to_value(c),
        &[("p", "probability"), ("s_vn", "nats"), ("s_r2", "nats"), ("mean_nats", "nats"), ("mean_bits", "bits")],
        summary,
        Some(Table { columns: vec!["circuit_seed", "outcome_index", "p", "s_vn", "s_r2"], rows }),
    ))
}

fn run_distill(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.distill;
    let lat = c.lattice.build().map_err(CliError::Config)?;
    let part = c.partition.build(&lat).map_err(CliError::Config)?;
    let spec = c.circuit.spec(lat, cfg.seed).map_err(CliError::Config)?;
    let mut r = rng::stream(cfg.seed, 0);
    let state = statevec::prepare(&spec, &mut r).map_err(run_err)?;
    let (ensemble, weights): (Vec<_>, Vec<f64>) = if c.exhaustive {
        let e = measure_exhaustive(&state, &part.b, Povm::Computational, &mut r).map_err(run_err)?;
        let w = e.iter().map(|s| s.probability).collect();
        (e, w)
    } else {
        let e: Vec<_> = (0..c.n_outcomes).map(|_| measure_sampled(&state, &part.b, Povm::Computational, &mut r)).collect();
        (e, vec![1.0 / c.n_outcomes as f64; c.n_outcomes])
    };
    let mut kept: Vec<usize> = part.a.iter().chain(&part.c).copied().collect();
    kept.sort_unstable();
    let a = statevec::local_indices(&kept, &part.a);
    let d_prime = c.d_prime as f64;
    let mut rows = Vec::with_capacity(ensemble.len());
    let (mut eps_bar, mut var, mut mean_s) = (0.0, 0.0, 0.0);
    for (k, (e, w)) in ensemble.iter().zip(&weights).enumerate() {
        let d = distill(&e.post_state, &a, c.d_prime, c.n_unitaries, &mut r).map_err(run_err)?;
        let s = e.post_state.entropy(&a, EntropyOrder::Vn);
        let bound = distillation_entropy_bound(d.eps_estimate.min(2.0), d_prime).map_err(run_err)?;
        eps_bar += w * d.eps_estimate;
        var += (w * d.stderr).powi(2);
        mean_s += w * s;
        rows.push(vec![json!(k), json!(e.probability), json!(d.eps_estimate), json!(d.stderr), json!(s), json!(bound)]);
    }
    let summary = json!({
        "eps_bar": eps_bar,
        "eps_bar_stderr": var.sqrt(),
        "mean_entropy_nats": mean_s,
        "mean_entropy_lower_nats": distillation_entropy_bound(eps_bar.min(2.0), d_prime).map_err(run_err)?,
        "n_outcomes": ensemble.len(),
    });
    Ok(report(
        Command::Distill,
        cfg,
        to_value(c),
        &[("eps", "trace distance"), ("s_vn", "nats"), ("entropy_bound", "nats"), ("mean_entropy_nats", "nats")],
        summary,
        Some(Table { columns: vec!["outcome", "p", "eps", "eps_stderr", "s_vn", "entropy_bound"], rows }),
    ))
}

fn run_quasi(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.quasi;
    let lat = c.lattice.build().map_err(CliError::Config)?;
    let part = c.partition.build(&lat).map_err(CliError::Config)?;
    let chi = c.circuit.chi;
    let s_e = c.circuit.bond.renyi2(chi).map_err(CliError::Config)?;
    let dims: Vec<usize> = (0..lat.n_sites()).map(|s| chi.pow(lat.degree(s) as u32)).collect();
    let inst = IsingInstance::holographic(&lat, part.clone(), dims, s_e);
    let q = quasientropy(&inst).map_err(run_err)?;
    // walls weighted by half the bond entropy they cross, enumerated exhaustively
    let dual = DualGraph::planar(&lat);
    let l_all = dual.n_vertices();
    let walls = enumerate_separating_walks(&dual, &part, l_all);
    let z_saw = partition_function_from_walks(&dual, &part, &walls, &WeightModel::PerEdge { beta: s_e / 2.0 }, l_all);
    let d_prime = c.d_prime as f64;
    let mut summary = to_value(&q);
    summary["bond_renyi2_nats"] = json!(s_e);
    summary["separate_terms_bound"] = json!(separate_terms_bound(d_prime, q.z_mp));
    summary["z_saw"] = json!(z_saw.total_upper);
    summary["wall_sum_bound"] = json!(wall_sum_eps_bound(z_saw.total_upper, d_prime));
    if c.n_samples > 0 {
        let spec = c.circuit.spec(lat, cfg.seed).map_err(CliError::Config)?;
        let mc = swap_trick_moments(&spec, &part, c.n_samples).map_err(run_err)?;
        summary["monte_carlo"] = to_value(&mc);
    }
    Ok(report(
        Command::Quasi,
        cfg,
        to_value(c),
        &[("q2", "nats"), ("bond_renyi2_nats", "nats"), ("z_pp", "dimensionless"), ("z_mp", "dimensionless")],
        summary,
        None,
    ))
}

fn run_stab_advantage(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.stab_advantage;
    let lat = c.lattice.build().map_err(CliError::Config)?;
    let premise = advantage_premise_check(c.m as u32, c.mu_log_upper);
    let rep = tripartite_mie_experiment(&lat, c.m, c.n_samples, c.c2, c.bonds, c.gates, cfg.seed).map_err(run_err)?;
    let rows = rep
        .records
        .iter()
        .map(|r| {
            vec![
                json!(r.sample),
                json!(r.s_h),
                json!(r.s_i),
                json!(r.s_j),
                json!(r.g),
                json!(r.e_hi),
                json!(r.e_hj),
                json!(r.e_ij),
                json!(r.pass),
            ]
        })
        .collect();
    let summary = json!({
        "premise": premise,
        "min_m": advantage_min_m(c.mu_log_upper),
        "probability": rep.probability,
        "ci95": [rep.ci.0, rep.ci.1],
        "site_premise": rep.site_premise,
        "purity_histogram": {"one": rep.purity_histogram[0], "half": rep.purity_histogram[1]},
    });
    Ok(report(
        Command::StabAdvantage,
        cfg,
        to_value(c),
        &[("s_h", "bits"), ("s_i", "bits"), ("s_j", "bits"), ("beta", "nats"), ("lhs", "nats"), ("rhs", "nats")],
        summary,
        Some(Table { columns: vec!["sample", "s_h", "s_i", "s_j", "g", "e_hi", "e_hj", "e_ij", "pass"], rows }),
    ))
}

fn run_sebd(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.sebd;
    let lat = c.lattice.build().map_err(CliError::Config)?;
    let spec = c.circuit.spec(lat.clone(), cfg.seed).map_err(CliError::Config)?;
    let policy = c.policy.build().map_err(CliError::Config)?;
    let samples: Vec<_> = (0..c.n_samples)
        .into_par_iter()
        .map(|i| sebd_sample(&spec, &policy, &mut rng::stream(cfg.seed, i as u64)))
        .collect::<Result<_, _>>()
        .map_err(run_err)?;
    let mut profile = vec![0.0; lat.width];
    let mut counted = vec![0usize; lat.width];
    let mut rows = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        for rec in &s.profile {
            profile[rec.t - 1] += rec.half_chain_entropy;
            counted[rec.t - 1] += 1;
        }
        let max_bond = s.profile.iter().map(|r| r.max_bond).max().unwrap_or(1);
        let discarded: f64 = s.profile.iter().map(|r| r.discarded).sum();
        let outcome = s.outcome.as_ref().map(|o| o.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("."));
        rows.push(vec![
            json!(i),
            json!(s.aborted_at.is_some()),
            s.aborted_at.map_or(Value::Null, |x| json!(x)),
            json!(s.log_probability),
            json!(max_bond),
            json!(discarded),
            outcome.map_or(Value::Null, Value::String),
        ]);
    }
    let mean_profile: Vec<f64> = profile.iter().zip(&counted).map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect();
    let aborted = samples.iter().filter(|s| s.aborted_at.is_some()).count();
    let summary = json!({
        "policy": policy,
        "abort_rate": aborted as f64 / c.n_samples.max(1) as f64,
        "mean_half_chain_entropy": mean_profile,
    });
    Ok(report(
        Command::Sebd,
        cfg,
        to_value(c),
        &[("log_probability", "nats"), ("discarded", "relative weight"), ("mean_half_chain_entropy", "nats")],
        summary,
        Some(Table { columns: vec!["sample", "aborted", "abort_column", "log_probability", "max_bond", "discarded", "outcome"], rows }),
    ))
}

fn run_thresholds(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &cfg.thresholds;
    let th = holographic_threshold(c.mu_log_upper);
    let bw = crude_threshold_q(Architecture::BrickworkD4, c.q_max);
    let fl = crude_threshold_q(Architecture::FourlocalD2, c.q_max);
    let checks: Vec<_> = c.advantage_m.iter().map(|&m| advantage_premise_check(m, c.mu_log_upper)).collect();
    let summary = json!({
        "S_crit_nats": th.s_crit_nats,
        "S_crit_bits": th.s_crit_bits,
        "chi_crit": th.chi_crit,
        "brickwork_crude_q": bw,
        "fourlocal_crude_q": fl,
        "brickwork_at_threshold": bw.map(brickwork_constants),
        "fourlocal_at_threshold": fl.map(fourlocal_constants),
        "advantage_m": advantage_min_m(c.mu_log_upper),
        "advantage_checks": checks,
    });
    Ok(report(
        Command::Thresholds,
        cfg,
        to_value(c),
        &[("S_crit_nats", "nats"), ("S_crit_bits", "bits"), ("beta", "nats"), ("lhs", "nats"), ("rhs", "nats")],
        summary,
        None,
    ))
}

fn run_selfcheck(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let ids: Vec<u32> = if cfg.selfcheck.criteria.is_empty() { acceptance::ALL.to_vec() } else { cfg.selfcheck.criteria.clone() };
    let results: Vec<_> = ids.iter().map(|&id| acceptance::run_criterion(id)).collect();
    let pass = results.iter().all(|r| r.pass);
    let rows = results.iter().map(|r| vec![json!(r.id), json!(r.name), json!(r.pass), json!(r.detail)]).collect();
    let mut rep = report(
        Command::Selfcheck,
        cfg,
        to_value(&cfg.selfcheck),
        &[("detail", "per criterion")],
        json!({ "all_pass": pass, "n_criteria": results.len() }),
        Some(Table { columns: vec!["criterion", "name", "pass", "detail"], rows }),
    );
    rep.success = pass;
    Ok(rep)
}

/// Loads a config file (or the defaults) and applies the seed override.
pub fn load_config(path: Option<&std::path::Path>, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            ExperimentConfig::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Runs `cmd` inside a pool of `threads` workers.
pub fn run_with_threads(cmd: Command, cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Report, CliError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().map_err(run_err)?;
            pool.install(|| run(cmd, cfg))
        }
        None => run(cmd, cfg),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = (|| -> Result<bool, CliError> {
        let cfg = load_config(cli.config.as_deref(), cli.seed)?;
        let rep = run_with_threads(cli.command, &cfg, cli.threads)?;
        let text = rep.render(cli.format);
        match &cli.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let ext = match cli.format {
                    Format::Json => "json",
                    Format::Csv => "csv",
                };
                std::fs::write(dir.join(format!("{}.{ext}", cli.command.name())), text)?;
            }
            None => print!("{text}"),
        }
        Ok(rep.success)
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("mielab: {e}");
            2
        }
    }
}
