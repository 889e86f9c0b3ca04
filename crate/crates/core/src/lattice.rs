//! Lattices, region partitions, cell blocking and dual graphs.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row; row 0 is the
//! top edge. Sites are indexed row-major, `y * width + x`, and that indexing
//! never changes after construction.
//!
//! Faces of a planar embedding are found by the usual half-edge walk: leave
//! every vertex along the neighbour that is next clockwise from the one we
//! arrived from. Interior faces come out with positive signed area, the outer
//! face with negative area. The dual replaces the outer face by one virtual
//! vertex per open side of the rectangle, so domain walls that touch the
//! boundary end on a side anchor.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimensions must be positive, got {0}x{1}")]
    ZeroDimension(usize, usize),
    #[error("{width}x{height} lattice is not divisible into {cw}x{ch} cells")]
    Indivisible { width: usize, height: usize, cw: usize, ch: usize },
    #[error("cell depth must be positive")]
    ZeroDepth,
    #[error("interior face {face} has {sides} sides; the input is not a triangulation")]
    NotTriangulated { face: usize, sides: usize },
    #[error("invalid partition: {0}")]
    Partition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Square,
    Triangular,
}

/// Anything with a straight-line planar embedding.
pub trait Embedded {
    fn n_vertices(&self) -> usize;
    fn edge_list(&self) -> &[(usize, usize)];
    fn position(&self, v: usize) -> (f64, f64);
    /// Lattice class of the infinite dual, used for walk-count certificates.
    fn dual_kind(&self) -> DualKind;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteLattice {
    pub kind: LatticeKind,
    pub width: usize,
    pub height: usize,
    pub edges: Vec<(usize, usize)>,
}

impl SiteLattice {
    pub fn new(kind: LatticeKind, width: usize, height: usize) -> Result<Self, LatticeError> {
        if width == 0 || height == 0 {
            return Err(LatticeError::ZeroDimension(width, height));
        }
        let idx = |x: usize, y: usize| y * width + x;
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width {
                    edges.push((idx(x, y), idx(x + 1, y)));
                }
                if y + 1 < height {
                    edges.push((idx(x, y), idx(x, y + 1)));
                }
                if kind == LatticeKind::Triangular && x + 1 < width && y + 1 < height {
                    edges.push((idx(x, y), idx(x + 1, y + 1)));
                }
            }
        }
        Ok(Self { kind, width, height, edges })
    }

    pub fn square(width: usize, height: usize) -> Result<Self, LatticeError> {
        Self::new(LatticeKind::Square, width, height)
    }

    pub fn n_sites(&self) -> usize {
        self.width * self.height
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }

    /// Incident edge indices of every site, in ascending edge order.
    pub fn incident_edges(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_sites()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            inc[a].push(e);
            inc[b].push(e);
        }
        inc
    }
}

impl Embedded for SiteLattice {
    fn n_vertices(&self) -> usize {
        self.n_sites()
    }
    fn edge_list(&self) -> &[(usize, usize)] {
        &self.edges
    }
    fn position(&self, v: usize) -> (f64, f64) {
        let (x, y) = self.coords(v);
        (x as f64, y as f64)
    }
    fn dual_kind(&self) -> DualKind {
        match self.kind {
            LatticeKind::Square => DualKind::Square,
            LatticeKind::Triangular => DualKind::Hexagonal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Strip,
    HalfChain,
    BulkTriple,
    /// Arbitrary user-supplied regions; walk certificates fall back to the
    /// most general counting.
    Custom,
}

/// Disjoint regions `A`, `B`, `C` covering the sites; `B` is measured.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub geometry: Geometry,
}

impl RegionPartition {
    fn build(n: usize, a: Vec<usize>, c: Vec<usize>, geometry: Geometry) -> Result<Self, LatticeError> {
        let mut owner = vec![0u8; n];
        for (tag, set) in [(1u8, &a), (2u8, &c)] {
            for &i in set {
                if i >= n {
                    return Err(LatticeError::Partition(format!("site {i} out of range")));
                }
                if owner[i] != 0 {
                    return Err(LatticeError::Partition(format!("site {i} assigned twice")));
                }
                owner[i] = tag;
            }
        }
        let b = (0..n).filter(|&i| owner[i] == 0).collect();
        let mut a = a;
        let mut c = c;
        a.sort_unstable();
        c.sort_unstable();
        Ok(Self { a, b, c, geometry })
    }

    pub fn custom(n: usize, a: Vec<usize>, c: Vec<usize>) -> Result<Self, LatticeError> {
        Self::build(n, a, c, Geometry::Custom)
    }

    /// `A` is the top row, `C` the bottom row.
    pub fn strip(lat: &SiteLattice) -> Result<Self, LatticeError> {
        if lat.height < 2 {
            return Err(LatticeError::Partition("strip needs at least two rows".into()));
        }
        let a = (0..lat.width).map(|x| lat.site(x, 0)).collect();
        let c = (0..lat.width).map(|x| lat.site(x, lat.height - 1)).collect();
        Self::build(lat.n_sites(), a, c, Geometry::Strip)
    }

    /// `A` and `C` are the upper and lower halves of the left column.
    pub fn half_chain(lat: &SiteLattice) -> Result<Self, LatticeError> {
        if lat.height < 2 {
            return Err(LatticeError::Partition("half chain needs at least two rows".into()));
        }
        let h = lat.height / 2;
        let a = (0..h).map(|y| lat.site(0, y)).collect();
        let c = (h..lat.height).map(|y| lat.site(0, y)).collect();
        Self::build(lat.n_sites(), a, c, Geometry::HalfChain)
    }

    /// `A = {h}`, `C = {i, j}`.
    pub fn bulk_triple(lat: &SiteLattice, h: usize, i: usize, j: usize) -> Result<Self, LatticeError> {
        Self::build(lat.n_sites(), vec![h], vec![i, j], Geometry::BulkTriple)
    }

    pub fn n_sites(&self) -> usize {
        self.a.len() + self.b.len() + self.c.len()
    }
}

/// Brickwork blocking of a site lattice into `4 d_C × 2 d_C` cells. Odd cell
/// rows are shifted by half a cell, so they start and end with half cells,
/// and no four cells meet at a corner.
#[derive(Debug, Clone)]
pub struct CellLattice {
    pub base: SiteLattice,
    pub depth: usize,
    pub cell_shape: (usize, usize),
    /// Sites of each cell, ascending.
    pub cells: Vec<Vec<usize>>,
    pub adjacency: Vec<(usize, usize)>,
    centers: Vec<(f64, f64)>,
    site_cell: Vec<usize>,
}

impl CellLattice {
    pub fn new(base: &SiteLattice, depth: usize) -> Result<Self, LatticeError> {
        if depth == 0 {
            return Err(LatticeError::ZeroDepth);
        }
        Self::with_shape(base, depth, (4 * depth, 2 * depth))
    }

    /// Blocking with an explicit cell shape; used for undersized negative
    /// controls.
    pub fn with_shape(base: &SiteLattice, depth: usize, shape: (usize, usize)) -> Result<Self, LatticeError> {
        let (cw, ch) = shape;
        if cw == 0 || ch == 0 || cw % 2 != 0 || base.width % cw != 0 || base.height % ch != 0 {
            return Err(LatticeError::Indivisible { width: base.width, height: base.height, cw, ch });
        }
        let mut cells = Vec::new();
        let mut centers = Vec::new();
        let mut site_cell = vec![usize::MAX; base.n_sites()];
        for row in 0..base.height / ch {
            let shift = if row % 2 == 1 { cw / 2 } else { 0 };
            let mut starts: Vec<usize> = Vec::new();
            if shift > 0 {
                starts.push(0);
            }
            let mut x = shift;
            while x < base.width {
                starts.push(x);
                x += cw;
            }
            for (k, &x0) in starts.iter().enumerate() {
                let x1 = if shift > 0 && k == 0 { shift } else { (x0 + cw).min(base.width) };
                let id = cells.len();
                let mut sites = Vec::new();
                for y in row * ch..(row + 1) * ch {
                    for x in x0..x1 {
                        let s = base.site(x, y);
                        site_cell[s] = id;
                        sites.push(s);
                    }
                }
                sites.sort_unstable();
                cells.push(sites);
                centers.push(((x0 + x1) as f64 / 2.0 - 0.5, (row * ch) as f64 + ch as f64 / 2.0 - 0.5));
            }
        }
        let mut adjacency = Vec::new();
        for y in 0..base.height {
            for x in 0..base.width {
                let s = site_cell[base.site(x, y)];
                for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                    if nx < base.width && ny < base.height {
                        let t = site_cell[base.site(nx, ny)];
                        if s != t {
                            adjacency.push((s.min(t), s.max(t)));
                        }
                    }
                }
            }
        }
        adjacency.sort_unstable();
        adjacency.dedup();
        Ok(Self { base: base.clone(), depth, cell_shape: shape, cells, adjacency, centers, site_cell })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_of(&self, site: usize) -> usize {
        self.site_cell[site]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Sites of all cells concatenated and sorted; the identity permutation
    /// for a valid blocking.
    pub fn unblock(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.cells.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// `ln q'` for a cell of `8 d_C²` qudits of dimension `q`; the cell
    /// Hilbert space itself is never built.
    pub fn log_cell_dimension(&self, q: f64) -> f64 {
        (8 * self.depth * self.depth) as f64 * q.ln()
    }
}

impl Embedded for CellLattice {
    fn n_vertices(&self) -> usize {
        self.cells.len()
    }
    fn edge_list(&self) -> &[(usize, usize)] {
        &self.adjacency
    }
    fn position(&self, v: usize) -> (f64, f64) {
        self.centers[v]
    }
    fn dual_kind(&self) -> DualKind {
        DualKind::Hexagonal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualKind {
    Square,
    Hexagonal,
}

/// Faces of a planar embedding as cycles of half-edges. Half-edge `2e` runs
/// along edge `e` from its first to its second endpoint, `2e + 1` backwards.
#[derive(Debug, Clone)]
pub struct Faces {
    pub faces: Vec<Vec<usize>>,
    /// Index of the outer face, `None` for an edgeless graph.
    pub outer: Option<usize>,
    /// Face to the left of each half-edge.
    pub face_of: Vec<usize>,
}

fn half_edge_ends(edges: &[(usize, usize)], h: usize) -> (usize, usize) {
    let (a, b) = edges[h / 2];
    if h % 2 == 0 {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn faces<G: Embedded + ?Sized>(g: &G) -> Faces {
    let edges = g.edge_list();
    let n = g.n_vertices();
    let mut out: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    for h in 0..2 * edges.len() {
        let (u, v) = half_edge_ends(edges, h);
        let (pu, pv) = (g.position(u), g.position(v));
        out[u].push(((pv.1 - pu.1).atan2(pv.0 - pu.0), h));
    }
    for list in &mut out {
        list.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    // rank of each half-edge within its origin's angular order
    let mut rank = vec![0usize; 2 * edges.len()];
    for list in &out {
        for (k, &(_, h)) in list.iter().enumerate() {
            rank[h] = k;
        }
    }
    let next = |h: usize| -> usize {
        let (_, v) = half_edge_ends(edges, h);
        let twin = h ^ 1;
        let list = &out[v];
        let k = rank[twin];
        list[(k + list.len() - 1) % list.len()].1
    };
    let mut face_of = vec![usize::MAX; 2 * edges.len()];
    let mut faces = Vec::new();
    for start in 0..2 * edges.len() {
        if face_of[start] != usize::MAX {
            continue;
        }
        let id = faces.len();
        let mut cycle = Vec::new();
        let mut h = start;
        loop {
            face_of[h] = id;
            cycle.push(h);
            h = next(h);
            if h == start {
                break;
            }
        }
        faces.push(cycle);
    }
    let area = |f: &Vec<usize>| -> f64 {
        f.iter()
            .map(|&h| {
                let (u, v) = half_edge_ends(edges, h);
                let (pu, pv) = (g.position(u), g.position(v));
                pu.0 * pv.1 - pv.0 * pu.1
            })
            .sum::<f64>()
            / 2.0
    };
    let outer = (0..faces.len()).min_by(|&i, &j| {
        area(&faces[i]).total_cmp(&area(&faces[j])).then(faces[j].len().cmp(&faces[i].len()))
    });
    Faces { faces, outer, face_of }
}

/// Dual of a planar lattice with one virtual anchor vertex per open side.
///
/// Dual edge `e` crosses primal edge `e`, so the crossing map is the identity
/// and trivially a bijection onto the primal edges. Interior faces are dual
/// vertices `0..n_faces`; anchors follow.
#[derive(Debug, Clone)]
pub struct DualGraph {
    pub n_faces: usize,
    pub anchors: Vec<Side>,
    pub edges: Vec<(usize, usize)>,
    pub kind: DualKind,
    /// Sides of each interior face, in half-edges.
    pub face_sizes: Vec<usize>,
    pub primal_edges: Vec<(usize, usize)>,
    pub n_primal: usize,
    adjacency: Vec<Vec<(usize, usize)>>,
}

fn outward_side(dx: f64, dy: f64) -> Side {
    // the outer face lies to the left, so the outward normal is the left normal
    let (nx, ny) = (-dy, dx);
    if nx.abs() > ny.abs() {
        if nx < 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    } else if ny < 0.0 {
        Side::Top
    } else {
        Side::Bottom
    }
}

impl DualGraph {
    /// Dual of any planar embedding.
    pub fn planar<G: Embedded + ?Sized>(g: &G) -> Self {
        let f = faces(g);
        let edges_p = g.edge_list();
        let outer = f.outer;
        let mut face_index = vec![usize::MAX; f.faces.len()];
        let mut face_sizes = Vec::new();
        for (k, cyc) in f.faces.iter().enumerate() {
            if Some(k) != outer {
                face_index[k] = face_sizes.len();
                face_sizes.push(cyc.len());
            }
        }
        let n_faces = face_sizes.len();
        let side_of = |h: usize| -> Side {
            let (u, v) = half_edge_ends(edges_p, h);
            let (pu, pv) = (g.position(u), g.position(v));
            outward_side(pv.0 - pu.0, pv.1 - pu.1)
        };
        let mut sides: Vec<Side> = Vec::new();
        for h in 0..2 * edges_p.len() {
            if Some(f.face_of[h]) == outer {
                let s = side_of(h);
                if !sides.contains(&s) {
                    sides.push(s);
                }
            }
        }
        sides.sort();
        let endpoint = |h: usize| -> usize {
            if Some(f.face_of[h]) == outer {
                n_faces + sides.iter().position(|&s| s == side_of(h)).unwrap()
            } else {
                face_index[f.face_of[h]]
            }
        };
        let edges: Vec<(usize, usize)> = (0..edges_p.len()).map(|e| (endpoint(2 * e), endpoint(2 * e + 1))).collect();
        let mut adjacency = vec![Vec::new(); n_faces + sides.len()];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a != b {
                adjacency[a].push((b, e));
                adjacency[b].push((a, e));
            }
        }
        Self {
            n_faces,
            anchors: sides,
            edges,
            kind: g.dual_kind(),
            face_sizes,
            primal_edges: edges_p.to_vec(),
            n_primal: g.n_vertices(),
            adjacency,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_faces + self.anchors.len()
    }

    pub fn is_anchor(&self, v: usize) -> bool {
        v >= self.n_faces
    }

    pub fn anchor(&self, side: Side) -> Option<usize> {
        self.anchors.iter().position(|&s| s == side).map(|k| self.n_faces + k)
    }

    /// `(neighbour, dual edge)` pairs in ascending edge order.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// `V − E + F` of the primal embedding, with the outer face counted once.
    pub fn primal_euler(&self) -> i64 {
        self.n_primal as i64 - self.primal_edges.len() as i64 + self.n_faces as i64 + 1
    }
}

/// Dual of a triangulated lattice; every interior face must be a triangle.
pub fn dual_graph<G: Embedded + ?Sized>(g: &G) -> Result<DualGraph, LatticeError> {
    let d = DualGraph::planar(g);
    if let Some((face, &sides)) = d.face_sizes.iter().enumerate().find(|(_, &s)| s != 3) {
        return Err(LatticeError::NotTriangulated { face, sides });
    }
    Ok(d)
}

/// True iff removing the primal edges crossed by `walk_edges` leaves no path
/// from any `A` site to any `C` site.
pub fn separates(dual: &DualGraph, walk_edges: &[usize], partition: &RegionPartition) -> bool {
    if partition.a.is_empty() || partition.c.is_empty() {
        return false;
    }
    let n = dual.n_primal;
    let mut cut = vec![false; dual.primal_edges.len()];
    for &e in walk_edges {
        cut[e] = true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(a, b)) in dual.primal_edges.iter().enumerate() {
        if !cut[e] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in &partition.a {
        seen[s] = true;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    partition.c.iter().all(|&c| !seen[c])
}

/// Primal graph distance from `site` to the nearest vertex on the outer face.
pub fn distance_to_boundary(dual: &DualGraph, site: usize) -> usize {
    let n = dual.n_primal;
    let mut on_boundary = vec![false; n];
    for (e, &(a, b)) in dual.edges.iter().enumerate() {
        if dual.is_anchor(a) || dual.is_anchor(b) {
            let (u, v) = dual.primal_edges[e];
            on_boundary[u] = true;
            on_boundary[v] = true;
        }
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &dual.primal_edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![usize::MAX; n];
    dist[site] = 0;
    let mut queue = VecDeque::from([site]);
    while let Some(u) = queue.pop_front() {
        if on_boundary[u] {
            return dist[u];
        }
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_square_lattices() {
        let l = SiteLattice::square(2, 2).unwrap();
        assert_eq!((l.n_sites(), l.edges.len()), (4, 4));
        let l = SiteLattice::square(1, 1).unwrap();
        assert_eq!((l.n_sites(), l.edges.len()), (1, 0));
        assert_eq!(SiteLattice::square(0, 3), Err(LatticeError::ZeroDimension(0, 3)));
    }

    #[test]
    fn triangular_three_by_three() {
        let l = SiteLattice::new(LatticeKind::Triangular, 3, 3).unwrap();
        assert_eq!(l.n_sites(), 9);
        // 6 horizontal + 6 vertical + 4 diagonal
        assert_eq!(l.edges.len(), 16);
        assert_eq!(l.degree(l.site(1, 1)), 6);
        let d = dual_graph(&l).unwrap();
        assert_eq!(d.n_faces, 8);
    }

    #[test]
    fn interior_degrees() {
        let sq = SiteLattice::square(5, 4).unwrap();
        let tr = SiteLattice::new(LatticeKind::Triangular, 5, 4).unwrap();
        for y in 1..3 {
            for x in 1..4 {
                assert_eq!(sq.degree(sq.site(x, y)), 4);
                assert_eq!(tr.degree(tr.site(x, y)), 6);
            }
        }
    }

    #[test]
    fn square_dual_has_four_anchors() {
        let l = SiteLattice::square(4, 3).unwrap();
        let d = DualGraph::planar(&l);
        assert_eq!(d.n_faces, 6);
        assert_eq!(d.anchors, vec![Side::Top, Side::Bottom, Side::Left, Side::Right]);
        let left = d.anchor(Side::Left).unwrap();
        assert_eq!(d.degree(left), 2);
        assert_eq!(d.degree(d.anchor(Side::Top).unwrap()), 3);
        assert_eq!(d.primal_euler(), 2);
        assert!(dual_graph(&l).is_err());
    }

    #[test]
    fn column_lattice_bridges_join_left_and_right() {
        let l = SiteLattice::square(1, 3).unwrap();
        let d = DualGraph::planar(&l);
        assert_eq!(d.n_faces, 0);
        let (left, right) = (d.anchor(Side::Left).unwrap(), d.anchor(Side::Right).unwrap());
        for &(a, b) in &d.edges {
            assert_eq!((a.min(b), a.max(b)), (left.min(right), left.max(right)));
        }
    }

    #[test]
    fn blocking_shapes() {
        let base = SiteLattice::square(4, 2).unwrap();
        assert_eq!(CellLattice::new(&base, 1).unwrap().n_cells(), 1);
        let base = SiteLattice::square(8, 4).unwrap();
        let cl = CellLattice::new(&base, 2).unwrap();
        assert_eq!(cl.n_cells(), 1);
        assert_eq!(cl.cells[0].len(), 32);
        let base = SiteLattice::square(16, 8).unwrap();
        let cl = CellLattice::new(&base, 2).unwrap();
        // two full cells, then one full cell flanked by two half cells
        let sizes: Vec<usize> = cl.cells.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![32, 32, 16, 32, 16]);
        assert_eq!(cl.unblock(), (0..128).collect::<Vec<_>>());
        assert!(CellLattice::new(&SiteLattice::square(12, 8).unwrap(), 2).is_err());
    }

    #[test]
    fn single_triangle_of_cells() {
        let base = SiteLattice::square(4, 4).unwrap();
        let cl = CellLattice::new(&base, 1).unwrap();
        assert_eq!(cl.n_cells(), 3);
        let d = dual_graph(&cl).unwrap();
        assert_eq!(d.n_faces, 1);
        assert_eq!(d.degree(0), 3);
        assert!(d.neighbors(0).iter().all(|&(w, _)| d.is_anchor(w)));
    }

    #[test]
    fn cell_lattice_is_triangulated() {
        for (w, h, dc) in [(8, 4, 1), (16, 8, 1), (16, 8, 2), (12, 6, 1)] {
            let base = SiteLattice::square(w, h).unwrap();
            let cl = CellLattice::new(&base, dc).unwrap();
            let d = dual_graph(&cl).unwrap();
            assert_eq!(d.primal_euler(), 2);
            for v in 0..d.n_faces {
                assert_eq!(d.degree(v), 3, "interior dual vertex {v} in {w}x{h}/{dc}");
            }
        }
    }

    #[test]
    fn separates_basic_cases() {
        let l = SiteLattice::square(3, 3).unwrap();
        let p = RegionPartition::strip(&l).unwrap();
        let d = DualGraph::planar(&l);
        assert!(!separates(&d, &[], &p));
        // cut all vertical edges between rows 0 and 1
        let cut: Vec<usize> = l
            .edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| l.coords(a).1 == 0 && l.coords(b).1 == 1)
            .map(|(e, _)| e)
            .collect();
        assert!(separates(&d, &cut, &p));
        let h = l.site(1, 1);
        let around: Vec<usize> =
            l.edges.iter().enumerate().filter(|(_, &(a, b))| a == h || b == h).map(|(e, _)| e).collect();
        let bulk = RegionPartition::bulk_triple(&l, h, l.site(0, 0), l.site(2, 2)).unwrap();
        assert!(separates(&d, &around, &bulk));
    }

    #[test]
    fn boundary_distance() {
        let l = SiteLattice::square(5, 5).unwrap();
        let d = DualGraph::planar(&l);
        assert_eq!(distance_to_boundary(&d, l.site(2, 2)), 2);
        assert_eq!(distance_to_boundary(&d, l.site(1, 2)), 1);
        assert_eq!(distance_to_boundary(&d, l.site(0, 2)), 0);
    }
}
