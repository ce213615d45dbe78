//! Surface-code erasure decoding as bond percolation.
//!
//! A qubit sits on every edge of a square lattice. An erasure pattern defeats
//! the code exactly when the erased edges support a logical operator: on the
//! torus a non-contractible cycle in the primal or dual lattice, on the
//! planar patch a path joining the corresponding boundary pair. Detection
//! runs union-find with path compression; for the torus each node carries its
//! lifted position relative to the component root, so closing an edge whose
//! endpoints disagree about their relative position by a lattice period means
//! a winding cycle.
//!
//! Geometry note: the `D x D` torus carries exactly `2 D^2` qubits. The
//! planar patch is the `[[D^2 + (D-1)^2, 1, D]]` layout with smooth left and
//! right boundaries; its edge count is `D^2 + (D-1)^2`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mc::{substream, MonteCarloResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Toric,
    Planar,
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Geometry::Toric => write!(f, "toric"),
            Geometry::Planar => write!(f, "planar"),
        }
    }
}

/// One qubit edge with its primal and dual incidence. Displacements are the
/// lifted-coordinate steps used for winding detection (zero on the patch).
#[derive(Debug, Clone, Copy)]
struct EdgeIncidence {
    primal: (usize, usize),
    primal_disp: (i64, i64),
    dual: (usize, usize),
    dual_disp: (i64, i64),
}

#[derive(Debug, Clone)]
pub struct SurfaceLattice {
    dist: usize,
    geometry: Geometry,
    edges: Vec<EdgeIncidence>,
    primal_nodes: usize,
    dual_nodes: usize,
    /// Primal boundary pair to keep apart (planar only).
    primal_terminals: Option<(usize, usize)>,
    dual_terminals: Option<(usize, usize)>,
}

impl SurfaceLattice {
    pub fn new(dist: usize, geometry: Geometry) -> Self {
        assert!(dist >= 2, "need distance >= 2");
        match geometry {
            Geometry::Toric => Self::toric(dist),
            Geometry::Planar => Self::planar(dist),
        }
    }

    fn toric(d: usize) -> Self {
        let vertex = |x: usize, y: usize| y * d + x;
        let mut edges = Vec::with_capacity(2 * d * d);
        for y in 0..d {
            for x in 0..d {
                // Horizontal: dual edge joins the faces below and above.
                edges.push(EdgeIncidence {
                    primal: (vertex(x, y), vertex((x + 1) % d, y)),
                    primal_disp: (1, 0),
                    dual: (vertex(x, (y + d - 1) % d), vertex(x, y)),
                    dual_disp: (0, 1),
                });
                // Vertical: dual edge joins the faces left and right.
                edges.push(EdgeIncidence {
                    primal: (vertex(x, y), vertex(x, (y + 1) % d)),
                    primal_disp: (0, 1),
                    dual: (vertex((x + d - 1) % d, y), vertex(x, y)),
                    dual_disp: (1, 0),
                });
            }
        }
        SurfaceLattice {
            dist: d,
            geometry: Geometry::Toric,
            edges,
            primal_nodes: d * d,
            dual_nodes: d * d,
            primal_terminals: None,
            dual_terminals: None,
        }
    }

    fn planar(d: usize) -> Self {
        // Vertices (x, y), x in 0..=d, y in 0..d; columns x = 0 and x = d are
        // merged into the LEFT/RIGHT terminals. Faces (x, y), x in 0..d,
        // y in 0..d-1, plus BOTTOM/TOP terminals.
        let interior = |x: usize, y: usize| (x - 1) + (d - 1) * y;
        let n_interior = (d - 1) * d;
        let left = n_interior;
        let right = n_interior + 1;
        let pvertex = |x: usize, y: usize| {
            if x == 0 {
                left
            } else if x == d {
                right
            } else {
                interior(x, y)
            }
        };
        let n_faces = d * (d - 1);
        let bottom = n_faces;
        let top = n_faces + 1;
        let face = |x: usize, y: isize| {
            if y < 0 {
                bottom
            } else if y as usize >= d - 1 {
                top
            } else {
                x + d * y as usize
            }
        };

        let mut edges = Vec::with_capacity(d * d + (d - 1) * (d - 1));
        for y in 0..d {
            for x in 0..d {
                edges.push(EdgeIncidence {
                    primal: (pvertex(x, y), pvertex(x + 1, y)),
                    primal_disp: (0, 0),
                    dual: (face(x, y as isize - 1), face(x, y as isize)),
                    dual_disp: (0, 0),
                });
            }
        }
        for y in 0..d - 1 {
            for x in 1..d {
                edges.push(EdgeIncidence {
                    primal: (pvertex(x, y), pvertex(x, y + 1)),
                    primal_disp: (0, 0),
                    dual: (face(x - 1, y as isize), face(x, y as isize)),
                    dual_disp: (0, 0),
                });
            }
        }
        SurfaceLattice {
            dist: d,
            geometry: Geometry::Planar,
            edges,
            primal_nodes: n_interior + 2,
            dual_nodes: n_faces + 2,
            primal_terminals: Some((left, right)),
            dual_terminals: Some((bottom, top)),
        }
    }

    pub fn dist(&self) -> usize {
        self.dist
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// An erasure configuration over the lattice edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasureSample {
    pub erased: Vec<bool>,
    /// Master seed and substream the sample was drawn from (0,0 if drawn
    /// from a caller-supplied generator).
    pub seed: u64,
    pub stream: u64,
}

impl ErasureSample {
    pub fn from_set(lattice: &SurfaceLattice, erased_edges: &[usize]) -> Self {
        let mut erased = vec![false; lattice.edge_count()];
        for &e in erased_edges {
            erased[e] = true;
        }
        ErasureSample {
            erased,
            seed: 0,
            stream: 0,
        }
    }

    pub fn erased_count(&self) -> usize {
        self.erased.iter().filter(|&&b| b).count()
    }
}

/// Erases each edge independently with probability `p_l`.
pub fn sample_erasure<R: Rng + ?Sized>(
    lattice: &SurfaceLattice,
    p_l: f64,
    rng: &mut R,
) -> ErasureSample {
    ErasureSample {
        erased: (0..lattice.edge_count())
            .map(|_| rng.random::<f64>() < p_l)
            .collect(),
        seed: 0,
        stream: 0,
    }
}

/// Same, on the counter-based substream `(seed, stream)` for reproducibility.
pub fn sample_erasure_stream(
    lattice: &SurfaceLattice,
    p_l: f64,
    seed: u64,
    stream: u64,
) -> ErasureSample {
    let mut rng = substream(seed, stream);
    let mut sample = sample_erasure(lattice, p_l, &mut rng);
    sample.seed = seed;
    sample.stream = stream;
    sample
}

/// Union-find over lifted positions: each node stores its offset relative to
/// its parent, so roots can answer "where is this node in the universal
/// cover" and closing edges can detect winding.
struct WindingUf {
    parent: Vec<usize>,
    rank: Vec<u8>,
    offset: Vec<(i64, i64)>,
}

impl WindingUf {
    fn new(n: usize) -> Self {
        WindingUf {
            parent: (0..n).collect(),
            rank: vec![0; n],
            offset: vec![(0, 0); n],
        }
    }

    fn find(&mut self, v: usize) -> (usize, (i64, i64)) {
        // Two passes: walk to the root, then compress with accumulated offsets.
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut node = v;
        let mut to_root = (0i64, 0i64);
        while self.parent[node] != node {
            to_root.0 += self.offset[node].0;
            to_root.1 += self.offset[node].1;
            node = self.parent[node];
        }
        let mut node = v;
        let mut remaining = to_root;
        while self.parent[node] != node {
            let next = self.parent[node];
            let step = self.offset[node];
            self.parent[node] = root;
            self.offset[node] = remaining;
            remaining = (remaining.0 - step.0, remaining.1 - step.1);
            node = next;
        }
        (root, to_root)
    }

    /// Merges the endpoints of an edge `u -> v` whose lifted displacement is
    /// `disp`. Returns `true` when the edge closes a cycle with nonzero
    /// winding.
    fn union(&mut self, u: usize, v: usize, disp: (i64, i64)) -> bool {
        let (ru, ou) = self.find(u);
        let (rv, ov) = self.find(v);
        if ru == rv {
            let winding = (ou.0 + disp.0 - ov.0, ou.1 + disp.1 - ov.1);
            return winding != (0, 0);
        }
        // offset[rv] must satisfy pos(v) = pos(u) + disp.
        let new_offset = (ou.0 + disp.0 - ov.0, ou.1 + disp.1 - ov.1);
        if self.rank[ru] >= self.rank[rv] {
            self.parent[rv] = ru;
            self.offset[rv] = new_offset;
            if self.rank[ru] == self.rank[rv] {
                self.rank[ru] += 1;
            }
        } else {
            self.parent[ru] = rv;
            self.offset[ru] = (-new_offset.0, -new_offset.1);
        }
        false
    }

    fn connected(&mut self, u: usize, v: usize) -> bool {
        self.find(u).0 == self.find(v).0
    }
}

fn graph_fails(
    lattice: &SurfaceLattice,
    sample: &ErasureSample,
    dual: bool,
) -> bool {
    let (nodes, terminals) = if dual {
        (lattice.dual_nodes, lattice.dual_terminals)
    } else {
        (lattice.primal_nodes, lattice.primal_terminals)
    };
    let mut uf = WindingUf::new(nodes);
    let mut winding = false;
    for (e, inc) in lattice.edges.iter().enumerate() {
        if !sample.erased[e] {
            continue;
        }
        let ((u, v), disp) = if dual {
            (inc.dual, inc.dual_disp)
        } else {
            (inc.primal, inc.primal_disp)
        };
        winding |= uf.union(u, v, disp);
        if winding && terminals.is_none() {
            return true;
        }
    }
    match terminals {
        Some((a, b)) => uf.connected(a, b),
        None => winding,
    }
}

/// Whether the erasure pattern is recoverable: no winding erased cycle
/// (torus) and no erased boundary-to-boundary path (patch), in both the
/// primal and dual lattices.
pub fn decodable(lattice: &SurfaceLattice, sample: &ErasureSample) -> bool {
    assert_eq!(sample.erased.len(), lattice.edge_count());
    !graph_fails(lattice, sample, false) && !graph_fails(lattice, sample, true)
}

/// Per-graph failure breakdown of a Monte Carlo batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PercolationTally {
    pub success: MonteCarloResult,
    pub primal_failure: MonteCarloResult,
    pub dual_failure: MonteCarloResult,
}

/// Fraction of decodable samples over `runs` independent erasure draws.
pub fn mc_success_prob(
    dist: usize,
    p_l: f64,
    runs: u64,
    seed: u64,
    geometry: Geometry,
) -> MonteCarloResult {
    mc_tally(dist, p_l, runs, seed, geometry).success
}

/// Like [`mc_success_prob`] but also reporting how often each lattice failed
/// (events are not exclusive).
pub fn mc_tally(
    dist: usize,
    p_l: f64,
    runs: u64,
    seed: u64,
    geometry: Geometry,
) -> PercolationTally {
    let lattice = SurfaceLattice::new(dist, geometry);
    let counts = (0..runs)
        .into_par_iter()
        .map(|run| {
            let sample = sample_erasure_stream(&lattice, p_l, seed, run);
            let primal = graph_fails(&lattice, &sample, false);
            let dual = graph_fails(&lattice, &sample, true);
            [
                (!primal && !dual) as u64,
                primal as u64,
                dual as u64,
            ]
        })
        .reduce(
            || [0u64; 3],
            |mut acc, item| {
                for (a, b) in acc.iter_mut().zip(item) {
                    *a += b;
                }
                acc
            },
        );
    PercolationTally {
        success: MonteCarloResult::from_counts(counts[0], runs, seed),
        primal_failure: MonteCarloResult::from_counts(counts[1], runs, seed),
        dual_failure: MonteCarloResult::from_counts(counts[2], runs, seed),
    }
}

/// Exhaustive homology oracle: enumerates simple cycles of the erased
/// subgraph by depth-first search, tracking lifted displacement, and reports
/// whether any cycle winds. Exponential; for cross-checking tiny lattices.
pub fn decodable_brute_force(lattice: &SurfaceLattice, sample: &ErasureSample) -> bool {
    match lattice.geometry {
        Geometry::Toric => {
            !has_winding_cycle_brute(lattice, sample, false)
                && !has_winding_cycle_brute(lattice, sample, true)
        }
        Geometry::Planar => {
            !boundary_path_brute(lattice, sample, false) && !boundary_path_brute(lattice, sample, true)
        }
    }
}

/// Neighbor list entry: (node, lifted displacement, edge id).
type Adjacency = Vec<Vec<(usize, (i64, i64), usize)>>;

fn adjacency(
    lattice: &SurfaceLattice,
    sample: &ErasureSample,
    dual: bool,
    nodes: usize,
) -> Adjacency {
    let mut adj: Adjacency = vec![Vec::new(); nodes];
    for (e, inc) in lattice.edges.iter().enumerate() {
        if !sample.erased[e] {
            continue;
        }
        let ((u, v), disp) = if dual {
            (inc.dual, inc.dual_disp)
        } else {
            (inc.primal, inc.primal_disp)
        };
        adj[u].push((v, disp, e));
        adj[v].push((u, (-disp.0, -disp.1), e));
    }
    adj
}

fn has_winding_cycle_brute(lattice: &SurfaceLattice, sample: &ErasureSample, dual: bool) -> bool {
    assert!(lattice.dist >= 3, "oracle assumes simple toric graphs");
    let nodes = if dual {
        lattice.dual_nodes
    } else {
        lattice.primal_nodes
    };
    let adj = adjacency(lattice, sample, dual, nodes);

    // Simple-cycle enumeration anchored at the smallest vertex of the cycle.
    // The walk may close back onto the anchor at any time; a zero total
    // displacement (including the degenerate same-edge backtrack) is simply
    // a contractible cycle, so only nonzero totals report winding.
    fn dfs(
        adj: &Adjacency,
        anchor: usize,
        node: usize,
        disp: (i64, i64),
        visited: &mut Vec<bool>,
    ) -> bool {
        for &(next, step, _) in &adj[node] {
            let total = (disp.0 + step.0, disp.1 + step.1);
            if next == anchor {
                if total != (0, 0) {
                    return true;
                }
                continue;
            }
            if next < anchor || visited[next] {
                continue;
            }
            visited[next] = true;
            let found = dfs(adj, anchor, next, total, visited);
            visited[next] = false;
            if found {
                return true;
            }
        }
        false
    }

    let mut visited = vec![false; nodes];
    for anchor in 0..nodes {
        for &(start, step, _) in &adj[anchor] {
            if start < anchor {
                continue;
            }
            visited[start] = true;
            let found = dfs(&adj, anchor, start, step, &mut visited);
            visited[start] = false;
            if found {
                return true;
            }
        }
    }
    false
}

fn boundary_path_brute(lattice: &SurfaceLattice, sample: &ErasureSample, dual: bool) -> bool {
    let (nodes, terminals) = if dual {
        (lattice.dual_nodes, lattice.dual_terminals.unwrap())
    } else {
        (lattice.primal_nodes, lattice.primal_terminals.unwrap())
    };
    let adj = adjacency(lattice, sample, dual, nodes);
    // Plain breadth-first search between the terminals.
    let mut queue = std::collections::VecDeque::from([terminals.0]);
    let mut seen = vec![false; nodes];
    seen[terminals.0] = true;
    while let Some(v) = queue.pop_front() {
        if v == terminals.1 {
            return true;
        }
        for &(w, _, _) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}
