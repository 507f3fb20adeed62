//! Graphs the processes run on: the discrete torus `Z^d / L Z^d`, the
//! hypercube `{0,1}^d`, and small arbitrary connected graphs.
//!
//! Torus vertices are indexed row-major with coordinate 0 varying fastest:
//! `index = x_0 + L x_1 + L^2 x_2 + ...`. Coordinate 0 is the "first
//! coordinate" used by the lower-bound experiment.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into [`Graph::edges`].
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphKind {
    Torus { l: usize, d: usize },
    Hypercube { d: usize },
    General,
}

/// An undirected simple connected graph. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    incident: Vec<Vec<EdgeId>>,
    lookup: HashMap<(usize, usize), EdgeId>,
    kind: GraphKind,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    fn build(n: usize, pairs: Vec<(usize, usize)>, kind: GraphKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut incident = vec![Vec::new(); n];
        let mut lookup = HashMap::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        for (u, v) in pairs {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {{{u}, {v}}} references a vertex outside [0, {n})"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            let e = key(u, v);
            if lookup.contains_key(&e) {
                return Err(Error::InvalidGraph(format!("duplicate edge {{{u}, {v}}}")));
            }
            let id = edges.len();
            lookup.insert(e, id);
            edges.push(e);
            adjacency[u].push(v);
            adjacency[v].push(u);
            incident[u].push(id);
            incident[v].push(id);
        }
        let g = Graph {
            n,
            edges,
            adjacency,
            incident,
            lookup,
            kind,
        };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    /// The d-dimensional torus with side `l`. `l = 2` is rejected because the
    /// wrap-around edge would duplicate the direct one.
    pub fn torus(l: usize, d: usize) -> Result<Self> {
        if l < 3 {
            return Err(Error::InvalidGraph(format!(
                "torus side L = {l} is too small (need L >= 3); use Graph::hypercube for {{0,1}}^d"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidGraph("torus dimension must be >= 1".into()));
        }
        let n = checked_pow(l, d)?;
        let mut pairs = Vec::with_capacity(n * d);
        let mut stride = 1;
        for _ in 0..d {
            for v in 0..n {
                let x = (v / stride) % l;
                let w = if x + 1 == l { v - x * stride } else { v + stride };
                pairs.push((v, w));
            }
            stride *= l;
        }
        Self::build(n, pairs, GraphKind::Torus { l, d })
    }

    /// The cycle on `l` vertices, i.e. the one-dimensional torus.
    pub fn cycle(l: usize) -> Result<Self> {
        Self::torus(l, 1)
    }

    pub fn hypercube(d: usize) -> Result<Self> {
        if d == 0 || d > 20 {
            return Err(Error::InvalidGraph(format!(
                "hypercube dimension {d} outside [1, 20]"
            )));
        }
        let n = 1usize << d;
        let mut pairs = Vec::with_capacity(d * n / 2);
        for v in 0..n {
            for bit in 0..d {
                if v & (1 << bit) == 0 {
                    pairs.push((v, v | (1 << bit)));
                }
            }
        }
        Self::build(n, pairs, GraphKind::Hypercube { d })
    }

    /// The path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph("path needs at least 2 vertices".into()));
        }
        Self::from_edges(n, (0..n - 1).map(|v| (v, v + 1)).collect())
    }

    /// A general graph from an explicit edge list.
    pub fn from_edges(n: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        Self::build(n, pairs, GraphKind::General)
    }

    /// Reads whitespace-separated 0-indexed vertex pairs. The vertex count is
    /// one more than the largest index seen.
    pub fn from_edge_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let tokens = text
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad vertex index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if tokens.len() % 2 != 0 {
            return Err(Error::Parse("odd number of vertex indices".into()));
        }
        let pairs: Vec<_> = tokens.chunks(2).map(|c| (c[0], c[1])).collect();
        let n = tokens.iter().max().map_or(0, |m| m + 1);
        Self::from_edges(n, pairs)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// Edges as `(u, v)` with `u < v`, in construction order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> (usize, usize) {
        self.edges[e]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<EdgeId> {
        self.lookup.get(&key(u, v)).copied()
    }

    /// All edges sharing an endpoint with `{u, v}`, excluding that edge.
    pub fn edge_neighbors(&self, u: usize, v: usize) -> Result<Vec<(usize, usize)>> {
        let id = self.edge_id(u, v).ok_or(Error::UnknownEdge(u, v))?;
        let mut out: Vec<EdgeId> = self.incident[u]
            .iter()
            .chain(&self.incident[v])
            .copied()
            .filter(|&f| f != id)
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out.into_iter().map(|f| self.edges[f]).collect())
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Side length and dimension for torus graphs.
    pub fn torus_dims(&self) -> Option<(usize, usize)> {
        match self.kind {
            GraphKind::Torus { l, d } => Some((l, d)),
            _ => None,
        }
    }

    /// Coordinates of a torus vertex (coordinate 0 first).
    pub fn coords(&self, v: usize) -> Option<Vec<usize>> {
        let (l, d) = self.torus_dims()?;
        let mut rest = v;
        let mut out = Vec::with_capacity(d);
        for _ in 0..d {
            out.push(rest % l);
            rest /= l;
        }
        Some(out)
    }

    /// Inverse of [`Graph::coords`]; coordinates are reduced mod `L`.
    pub fn index_of(&self, coords: &[usize]) -> Option<usize> {
        let (l, d) = self.torus_dims()?;
        if coords.len() != d {
            return None;
        }
        Some(coords.iter().rev().fold(0, |acc, &x| acc * l + x % l))
    }

    /// Vertex permutations by translation (the torus group or XOR on the
    /// hypercube); `None` for general graphs.
    pub fn translations(&self) -> Option<Vec<Vec<usize>>> {
        match self.kind {
            GraphKind::Torus { l, d } => {
                let shift = |v: usize, by: usize| -> usize {
                    let (mut a, mut b, mut out, mut stride) = (v, by, 0, 1);
                    for _ in 0..d {
                        out += ((a % l + b % l) % l) * stride;
                        a /= l;
                        b /= l;
                        stride *= l;
                    }
                    out
                };
                Some(
                    (0..self.n)
                        .map(|by| (0..self.n).map(|v| shift(v, by)).collect())
                        .collect(),
                )
            }
            GraphKind::Hypercube { .. } => Some(
                (0..self.n)
                    .map(|by| (0..self.n).map(|v| v ^ by).collect())
                    .collect(),
            ),
            GraphKind::General => None,
        }
    }
}

fn checked_pow(l: usize, d: usize) -> Result<usize> {
    u32::try_from(d)
        .ok()
        .and_then(|d| l.checked_pow(d))
        .filter(|&n| n <= 1 << 24)
        .ok_or_else(|| Error::InvalidGraph(format!("torus L={l}, d={d} is too large")))
}

/// A parsed graph description, as accepted on the command line:
/// `torus:L=8,d=2`, `hypercube:d=4`, `cycle:L=5`, `path:n=4` or
/// `edges:file.txt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphSpec {
    Torus { l: usize, d: usize },
    Hypercube { d: usize },
    Path { n: usize },
    EdgeFile(String),
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Torus { l, d } => Graph::torus(*l, *d),
            GraphSpec::Hypercube { d } => Graph::hypercube(*d),
            GraphSpec::Path { n } => Graph::path(*n),
            GraphSpec::EdgeFile(path) => Graph::from_edge_file(path),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Torus { l, d } => write!(f, "torus:L={l},d={d}"),
            GraphSpec::Hypercube { d } => write!(f, "hypercube:d={d}"),
            GraphSpec::Path { n } => write!(f, "path:n={n}"),
            GraphSpec::EdgeFile(p) => write!(f, "edges:{p}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("graph spec {s:?}: {msg}"));
        let (name, rest) = s.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        if name == "edges" {
            if rest.is_empty() {
                return Err(bad("missing file name"));
            }
            return Ok(GraphSpec::EdgeFile(rest.to_string()));
        }
        let mut params = HashMap::new();
        for item in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            let v: usize = v.trim().parse().map_err(|_| bad("non-integer value"))?;
            if params.insert(k.trim().to_string(), v).is_some() {
                return Err(bad("repeated key"));
            }
        }
        let mut take = |k: &str| params.remove(k).ok_or_else(|| bad(&format!("missing {k}")));
        let spec = match name {
            "torus" => GraphSpec::Torus {
                l: take("L")?,
                d: take("d")?,
            },
            "cycle" => GraphSpec::Torus { l: take("L")?, d: 1 },
            "hypercube" => GraphSpec::Hypercube { d: take("d")? },
            "path" => GraphSpec::Path { n: take("n")? },
            _ => return Err(bad("unknown graph kind")),
        };
        if !params.is_empty() {
            return Err(bad("unexpected parameters"));
        }
        Ok(spec)
    }
}
