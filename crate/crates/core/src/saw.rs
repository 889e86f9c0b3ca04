//! Self-avoiding walks: separating domain walls on a dual graph, rooted walk
//! and polygon counts on infinite lattices, and the certified partition
//! function `Z = Σ_W e^{-H[W]}`.
//!
//! A wall is either a path between two side anchors or a closed loop through
//! interior dual vertices. Each wall is emitted once: paths from the lower
//! anchor to the higher one, and loops (or same-anchor paths) from their
//! lowest vertex with the first edge smaller than the last.
//!
//! The tail certificate bounds the weight of walls longer than `ℓ_max`. A
//! wall of length `l` that leaves its anchor through a fixed boundary edge is
//! a self-avoiding walk of length `l − 1` on the infinite dual, so there are
//! at most `c_{l−1}` of them, and `c_n ≤ c_K^{⌊n/K⌋} c_{n mod K}` by
//! submultiplicativity. Summing the geometric series over blocks of `K`
//! steps gives a closed form that converges iff `c_K e^{−βK} < 1`.

use std::collections::VecDeque;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{distance_to_boundary, separates, DualGraph, DualKind, Geometry, RegionPartition};

#[derive(Debug, Error, PartialEq)]
pub enum SawError {
    #[error("walk of length {n} reaches the edge of a radius-{radius} patch")]
    PatchTooSmall { n: usize, radius: usize },
    #[error("polygon length must be at least 3 (and even on the square lattice), got {0}")]
    PolygonLength(usize),
    #[error("ordered-phase precondition violated: nu = {0} >= 1")]
    Disordered(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkClass {
    BoundaryToBoundary,
    ClosedLoop,
}

/// A self-avoiding path or cycle on a dual graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Walk {
    /// Visited dual vertices; for cycles the first vertex is repeated last.
    pub vertices: Vec<usize>,
    /// Dual edges, equivalently the crossed primal edges.
    pub edges: Vec<usize>,
    pub class: WalkClass,
}

impl Walk {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Structural self-avoidance: only the endpoints of a cycle may repeat,
    /// and consecutive edges share a vertex.
    pub fn is_self_avoiding(&self, dual: &DualGraph) -> bool {
        let n = self.vertices.len();
        if n != self.edges.len() + 1 {
            return false;
        }
        let closed = self.vertices[0] == self.vertices[n - 1];
        // a path may return to its own side anchor; only interior cycles are loops
        if (self.class == WalkClass::ClosedLoop) != (closed && !dual.is_anchor(self.vertices[0])) {
            return false;
        }
        let interior = if closed { &self.vertices[..n - 1] } else { &self.vertices[..] };
        let mut seen = interior.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != interior.len() {
            return false;
        }
        self.edges.iter().enumerate().all(|(k, &e)| {
            let (a, b) = dual.edges[e];
            let (u, v) = (self.vertices[k], self.vertices[k + 1]);
            (a, b) == (u, v) || (a, b) == (v, u)
        })
    }
}

/// Every wall of length `1..=ℓ_max` accepted by `keep`, in a deterministic
/// order. Starting vertices are explored in parallel and concatenated in
/// index order.
pub fn enumerate_walks<F>(dual: &DualGraph, l_max: usize, keep: F) -> Vec<Walk>
where
    F: Fn(&[usize]) -> bool + Sync,
{
    if l_max == 0 {
        return Vec::new();
    }
    let starts: Vec<usize> = (0..dual.n_vertices()).collect();
    let per_start: Vec<Vec<Walk>> = starts
        .par_iter()
        .map(|&s| {
            let mut out = Vec::new();
            let mut visited = vec![false; dual.n_vertices()];
            visited[s] = true;
            let mut verts = vec![s];
            let mut edges = Vec::new();
            extend(dual, s, l_max, &keep, &mut visited, &mut verts, &mut edges, &mut out);
            out
        })
        .collect();
    per_start.into_iter().flatten().collect()
}

#[allow(clippy::too_many_arguments)]
fn extend<F>(
    dual: &DualGraph,
    start: usize,
    l_max: usize,
    keep: &F,
    visited: &mut [bool],
    verts: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    out: &mut Vec<Walk>,
) where
    F: Fn(&[usize]) -> bool,
{
    let v = *verts.last().unwrap();
    let start_is_anchor = dual.is_anchor(start);
    for &(w, e) in dual.neighbors(v) {
        if edges.len() + 1 > l_max {
            return;
        }
        if edges.last() == Some(&e) {
            continue;
        }
        let closes = w == start && edges.first().is_some_and(|&f| f < e);
        let emit = if start_is_anchor {
            // anchored paths: end on a later anchor, or return to the start
            closes || (dual.is_anchor(w) && w > start)
        } else {
            // loops through interior vertices, rooted at their minimum
            closes && !dual.is_anchor(w)
        };
        if emit {
            edges.push(e);
            if keep(edges) {
                let mut vs = verts.clone();
                vs.push(w);
                let class = if start_is_anchor { WalkClass::BoundaryToBoundary } else { WalkClass::ClosedLoop };
                out.push(Walk { vertices: vs, edges: edges.clone(), class });
            }
            edges.pop();
            continue;
        }
        let admissible = !visited[w] && !dual.is_anchor(w) && (start_is_anchor || w > start);
        if admissible && edges.len() + 1 < l_max {
            visited[w] = true;
            verts.push(w);
            edges.push(e);
            extend(dual, start, l_max, keep, visited, verts, edges, out);
            edges.pop();
            verts.pop();
            visited[w] = false;
        }
    }
}

/// Separating walls of length at most `ℓ_max`.
pub fn enumerate_separating_walks(dual: &DualGraph, partition: &RegionPartition, l_max: usize) -> Vec<Walk> {
    enumerate_walks(dual, l_max, |edges| separates(dual, edges, partition))
}

/// Independent separation test by two-colouring: spins are propagated from
/// one `A` site across primal edges, flipping exactly on crossed edges. The
/// wall separates iff the colouring is consistent, all of `A` is down and all
/// of `C` is up.
pub fn boundary_condition_filter(dual: &DualGraph, walk_edges: &[usize], partition: &RegionPartition) -> bool {
    if partition.a.is_empty() || partition.c.is_empty() {
        return false;
    }
    let n = dual.n_primal;
    let mut crossed = vec![false; dual.primal_edges.len()];
    for &e in walk_edges {
        crossed[e] = true;
    }
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for (e, &(a, b)) in dual.primal_edges.iter().enumerate() {
        adj[a].push((b, crossed[e]));
        adj[b].push((a, crossed[e]));
    }
    let mut spin: Vec<Option<bool>> = vec![None; n];
    let root = partition.a[0];
    spin[root] = Some(false);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let su = spin[u].unwrap();
        for &(v, flip) in &adj[u] {
            let want = su ^ flip;
            match spin[v] {
                None => {
                    spin[v] = Some(want);
                    queue.push_back(v);
                }
                Some(s) if s != want => return false,
                _ => {}
            }
        }
    }
    partition.a.iter().all(|&i| spin[i] == Some(false)) && partition.c.iter().all(|&i| spin[i] == Some(true))
}

/// Sites on the `C` side of a wall: reachable from `C` without crossing it.
pub fn c_side(dual: &DualGraph, walk_edges: &[usize], partition: &RegionPartition) -> Vec<usize> {
    let n = dual.n_primal;
    let mut crossed = vec![false; dual.primal_edges.len()];
    for &e in walk_edges {
        crossed[e] = true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(a, b)) in dual.primal_edges.iter().enumerate() {
        if !crossed[e] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = partition.c.iter().copied().collect();
    for &c in &partition.c {
        seen[c] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkLattice {
    Square,
    Triangular,
    Hexagonal,
}

impl From<DualKind> for WalkLattice {
    fn from(k: DualKind) -> Self {
        match k {
            DualKind::Square => WalkLattice::Square,
            DualKind::Hexagonal => WalkLattice::Hexagonal,
        }
    }
}

fn lattice_steps(kind: WalkLattice, x: i64, y: i64) -> Vec<(i64, i64)> {
    match kind {
        WalkLattice::Square => vec![(1, 0), (-1, 0), (0, 1), (0, -1)],
        WalkLattice::Triangular => vec![(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)],
        // brick-wall embedding of the honeycomb
        WalkLattice::Hexagonal => {
            let vertical = if (x + y).rem_euclid(2) == 0 { (0, 1) } else { (0, -1) };
            vec![(1, 0), (-1, 0), vertical]
        }
    }
}

/// Lower bound on the graph distance back to the origin.
fn return_distance(kind: WalkLattice, x: i64, y: i64) -> usize {
    match kind {
        WalkLattice::Square | WalkLattice::Hexagonal => (x.abs() + y.abs()) as usize,
        WalkLattice::Triangular => x.abs().max(y.abs()) as usize,
    }
}

struct Patch {
    radius: i64,
    side: i64,
    visited: Vec<bool>,
    touched: bool,
}

impl Patch {
    fn new(radius: usize) -> Self {
        let radius = radius as i64;
        let side = 2 * radius + 1;
        Self { radius, side, visited: vec![false; (side * side) as usize], touched: false }
    }
    fn index(&self, x: i64, y: i64) -> Option<usize> {
        if x.abs() >= self.radius || y.abs() >= self.radius {
            return None;
        }
        Some(((y + self.radius) * self.side + x + self.radius) as usize)
    }
}

fn walk_dfs(kind: WalkLattice, patch: &mut Patch, x: i64, y: i64, left: usize, closed: bool) -> u64 {
    if left == 0 {
        return if closed { u64::from(x == 0 && y == 0) } else { 1 };
    }
    let mut total = 0;
    for (dx, dy) in lattice_steps(kind, x, y) {
        let (nx, ny) = (x + dx, y + dy);
        if closed && nx == 0 && ny == 0 {
            if left == 1 {
                total += 1;
            }
            continue;
        }
        if closed && return_distance(kind, nx, ny) > left - 1 {
            continue;
        }
        let Some(i) = patch.index(nx, ny) else {
            patch.touched = true;
            continue;
        };
        if patch.visited[i] {
            continue;
        }
        patch.visited[i] = true;
        total += walk_dfs(kind, patch, nx, ny, left - 1, closed);
        patch.visited[i] = false;
    }
    total
}

/// Number of `n`-step self-avoiding walks from the origin, enumerated on a
/// square patch of the given radius.
pub fn count_rooted_walks_on_patch(kind: WalkLattice, n: usize, radius: usize) -> Result<u64, SawError> {
    let mut patch = Patch::new(radius);
    let o = patch.index(0, 0).ok_or(SawError::PatchTooSmall { n, radius })?;
    patch.visited[o] = true;
    let c = walk_dfs(kind, &mut patch, 0, 0, n, false);
    if patch.touched {
        return Err(SawError::PatchTooSmall { n, radius });
    }
    Ok(c)
}

/// Number of `n`-step self-avoiding walks from the origin.
pub fn count_rooted_walks(kind: WalkLattice, n: usize) -> u64 {
    count_rooted_walks_on_patch(kind, n, n + 1).expect("radius n+1 always contains n-step walks")
}

/// Number of lattice polygons of length `l` through the origin: closed
/// self-avoiding walks from the origin, halved for the two orientations.
pub fn count_rooted_polygons(kind: WalkLattice, l: usize) -> Result<u64, SawError> {
    if l < 3 || (kind == WalkLattice::Square && l % 2 == 1) {
        return if l < 3 || kind == WalkLattice::Square { Ok(0) } else { Err(SawError::PolygonLength(l)) };
    }
    let mut patch = Patch::new(l / 2 + 2);
    let o = patch.index(0, 0).unwrap();
    patch.visited[o] = true;
    let c = walk_dfs(kind, &mut patch, 0, 0, l, true);
    if patch.touched {
        return Err(SawError::PatchTooSmall { n: l, radius: l / 2 + 2 });
    }
    Ok(c / 2)
}

/// Rooted walk counts `c_0..=c_K` used by tail certificates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkCounts {
    pub kind: WalkLattice,
    pub counts: Vec<u64>,
}

impl WalkCounts {
    pub fn enumerate(kind: WalkLattice, k: usize) -> Self {
        let counts = (0..=k).into_par_iter().map(|n| count_rooted_walks(kind, n)).collect();
        Self { kind, counts }
    }

    /// Shared tables: square to 14 steps, honeycomb to 24.
    pub fn standard(kind: WalkLattice) -> &'static WalkCounts {
        static SQ: OnceLock<WalkCounts> = OnceLock::new();
        static TRI: OnceLock<WalkCounts> = OnceLock::new();
        static HEX: OnceLock<WalkCounts> = OnceLock::new();
        match kind {
            WalkLattice::Square => SQ.get_or_init(|| Self::enumerate(kind, 14)),
            WalkLattice::Triangular => TRI.get_or_init(|| Self::enumerate(kind, 9)),
            WalkLattice::Hexagonal => HEX.get_or_init(|| Self::enumerate(kind, 24)),
        }
    }

    pub fn block(&self) -> usize {
        self.counts.len() - 1
    }

    /// Submultiplicative upper bound on `c_n` for any `n`.
    pub fn upper(&self, n: usize) -> f64 {
        let k = self.block();
        (self.counts[k] as f64).powi((n / k) as i32) * self.counts[n % k] as f64
    }

    /// `ln c_K / K`, the growth rate the tail certificate must beat.
    pub fn growth_log(&self) -> f64 {
        let k = self.block();
        (self.counts[k] as f64).ln() / k as f64
    }

    /// `Σ_{n ≥ n0} upper(n) x^n` in closed form; `None` if divergent.
    pub fn tail_series(&self, n0: usize, x: f64) -> Option<f64> {
        let k = self.block();
        let rho = self.counts[k] as f64 * x.powi(k as i32);
        if rho >= 1.0 {
            return None;
        }
        let mut total = 0.0;
        for r in 0..k {
            let q_min = if n0 > r { (n0 - r).div_ceil(k) } else { 0 };
            total += self.counts[r] as f64 * x.powi(r as i32) * rho.powi(q_min as i32) / (1.0 - rho);
        }
        Some(total)
    }
}

/// Rule assigning an energy `H[W]` (nats) to a wall.
pub enum WeightModel<'a> {
    /// `H[W] = β |W|`.
    PerEdge { beta: f64 },
    /// `H[W] = S₂(ρ_R)/2` with `R` the `C` side of the wall; the closure
    /// returns the Rényi-2 entropy of a site set.
    EntropyDriven(&'a (dyn Fn(&[usize]) -> f64 + Sync)),
}

impl WeightModel<'_> {
    pub fn energy(&self, dual: &DualGraph, walk: &Walk, partition: &RegionPartition) -> f64 {
        match self {
            WeightModel::PerEdge { beta } => beta * walk.len() as f64,
            WeightModel::EntropyDriven(s2) => 0.5 * s2(&c_side(dual, &walk.edges, partition)),
        }
    }
}

/// Certified partition function of separating walls.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SawPartition {
    pub exact_sum: f64,
    /// Upper bound on the weight of walls longer than `l_max`; infinite when
    /// no certificate is available.
    pub tail_bound: f64,
    pub l_max: usize,
    pub total_upper: f64,
    pub n_walls: usize,
    pub certified: bool,
    pub note: String,
}

/// Starting multiplicity and loop factor for the tail of a geometry.
fn tail_multiplicity(dual: &DualGraph, partition: &RegionPartition) -> f64 {
    let anchor_edges = |side: Option<usize>| side.map(|v| dual.degree(v)).unwrap_or(0);
    match partition.geometry {
        // A and C both span the left column, so every wall crosses a
        // left-boundary edge
        Geometry::Strip => anchor_edges(dual.anchor(crate::lattice::Side::Left)) as f64,
        // the A–C edge on the left column must be cut
        Geometry::HalfChain => 1.0,
        Geometry::BulkTriple | Geometry::Custom => {
            let anchored: usize = (dual.n_faces..dual.n_vertices()).map(|v| dual.degree(v)).sum();
            // a loop enclosing all of X crosses the shortest path from any
            // x ∈ X to the boundary
            let reach = |set: &[usize]| set.iter().map(|&s| distance_to_boundary(dual, s)).min().unwrap_or(0);
            (anchored + reach(&partition.a) + reach(&partition.c)) as f64
        }
    }
}

/// Certified bound on the weight of walls longer than `l_max` under
/// `H = β|W|`. Returns `(bound, note)`; the bound is infinite when the
/// series diverges.
pub fn tail_certificate(dual: &DualGraph, partition: &RegionPartition, beta: f64, l_max: usize) -> (f64, String) {
    if l_max >= dual.n_vertices() {
        return (0.0, "exhaustive: l_max covers every simple walk".into());
    }
    let counts = WalkCounts::standard(dual.kind.into());
    let mult = tail_multiplicity(dual, partition);
    let x = (-beta).exp();
    match counts.tail_series(l_max, x) {
        Some(s) => (mult * x * s, format!("geometric tail with K={} block counts", counts.block())),
        None => (
            f64::INFINITY,
            format!("beta = {beta} <= ln c_K / K = {:.6}; tail certificate unavailable", counts.growth_log()),
        ),
    }
}

/// Exact sum over the given walls plus the certified tail.
pub fn partition_function_from_walks(
    dual: &DualGraph,
    partition: &RegionPartition,
    walks: &[Walk],
    weight: &WeightModel,
    l_max: usize,
) -> SawPartition {
    let mut terms: Vec<f64> =
        walks.par_iter().map(|w| (-weight.energy(dual, w, partition)).exp()).collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    let exact_sum: f64 = terms.iter().sum();
    let (tail_bound, note) = match weight {
        WeightModel::PerEdge { beta } => tail_certificate(dual, partition, *beta, l_max),
        WeightModel::EntropyDriven(_) if l_max >= dual.n_vertices() => (0.0, "exhaustive".into()),
        WeightModel::EntropyDriven(_) => {
            (f64::INFINITY, "entropy-driven weights admit no tail certificate below exhaustion".into())
        }
    };
    SawPartition {
        exact_sum,
        tail_bound,
        l_max,
        total_upper: exact_sum + tail_bound,
        n_walls: walks.len(),
        certified: tail_bound.is_finite(),
        note,
    }
}

pub fn partition_function(dual: &DualGraph, partition: &RegionPartition, weight: &WeightModel, l_max: usize) -> SawPartition {
    let walks = enumerate_separating_walks(dual, partition, l_max);
    partition_function_from_walks(dual, partition, &walks, weight, l_max)
}

/// Loop-gas bounds for the ordered phase of the bulk-triple geometry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LoopWeights {
    pub nu: f64,
    /// `ν^{l0}/(1−ν)`.
    pub w_tail: f64,
    /// `2ν⁴/(1−ν)³`.
    pub type1_bound: f64,
    pub type3_bound: f64,
}

pub fn loop_weights(beta: f64, mu_log: f64, l0: usize) -> Result<LoopWeights, SawError> {
    let nu = (mu_log - beta).exp();
    if nu >= 1.0 {
        return Err(SawError::Disordered(nu));
    }
    let type1 = 2.0 * nu.powi(4) / (1.0 - nu).powi(3);
    Ok(LoopWeights { nu, w_tail: nu.powi(l0 as i32) / (1.0 - nu), type1_bound: type1, type3_bound: type1 * type1 })
}
