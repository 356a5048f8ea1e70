//! Spatial models: weighted directed graphs over a fixed universe of
//! locations, plus the path machinery the reach/escape operators need.
//!
//! A trace is a sequence of [`SpatialModel`] snapshots sharing one
//! [`Universe`]. Paths are location-simple (no repeated location);
//! enumeration is a depth-first search that extends a path while the
//! distance bound allows, marking locations visited and unmarking on
//! backtrack. Child order is deterministic: lexicographic by destination
//! name, then by weight.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraError, DistValue, DistanceFunction, f64_key};

/// Index of a location within its [`Universe`].
pub type LocationId = u32;

/// Ordered set of location names shared by all snapshots of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    names: Vec<String>,
    index: HashMap<String, LocationId>,
    /// `lex_rank[l]` is the position of location `l` in name order; used
    /// for deterministic traversal order.
    lex_rank: Vec<u32>,
}

impl Universe {
    pub fn new(names: Vec<String>) -> Result<Arc<Self>, ModelError> {
        let mut index = HashMap::with_capacity(names.len());
        let mut issues = Vec::new();
        if names.is_empty() {
            issues.push(ModelIssue::EmptyUniverse);
        }
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i as LocationId).is_some() {
                issues.push(ModelIssue::DuplicateLocation { id: name.clone() });
            }
        }
        if !issues.is_empty() {
            return Err(ModelError { issues });
        }
        let mut by_name: Vec<u32> = (0..names.len() as u32).collect();
        by_name.sort_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
        let mut lex_rank = vec![0u32; names.len()];
        for (rank, &loc) in by_name.iter().enumerate() {
            lex_rank[loc as usize] = rank as u32;
        }
        Ok(Arc::new(Universe { names, index, lex_rank }))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, l: LocationId) -> &str {
        &self.names[l as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<LocationId> {
        self.index.get(name).copied()
    }

    pub fn locations(&self) -> impl Iterator<Item = LocationId> {
        0..self.len() as LocationId
    }

    fn rank(&self, l: LocationId) -> u32 {
        self.lex_rank[l as usize]
    }
}

/// Node payload: a kind tag plus named real-valued attributes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeData {
    pub kind: String,
    pub attrs: BTreeMap<String, f64>,
}

/// Outgoing edge of a snapshot graph.
#[derive(Debug, Copy, Clone, PartialEq)]
pub struct Edge {
    pub dst: LocationId,
    pub weight: f64,
}

/// Unvalidated node record, as read from a trace.
#[derive(Debug, Clone)]
pub struct RawNode {
    pub id: String,
    pub kind: String,
    pub attrs: BTreeMap<String, f64>,
}

/// Unvalidated edge record, as read from a trace.
#[derive(Debug, Clone)]
pub struct RawEdge {
    pub src: String,
    pub weight: f64,
    pub dst: String,
}

/// One violation found while validating a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelIssue {
    EmptyUniverse,
    DuplicateLocation { id: String },
    UnknownNode { id: String },
    DuplicateNode { id: String },
    MissingNode { id: String },
    UnknownEndpoint { src: String, dst: String, missing: String },
    DuplicateEdge { src: String, weight: f64, dst: String },
    NonFiniteWeight { src: String, dst: String },
    NonFiniteAttr { id: String, attr: String },
}

impl fmt::Display for ModelIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelIssue::EmptyUniverse => write!(f, "universe is empty"),
            ModelIssue::DuplicateLocation { id } => write!(f, "duplicate location '{id}' in universe"),
            ModelIssue::UnknownNode { id } => write!(f, "node '{id}' is not in the universe"),
            ModelIssue::DuplicateNode { id } => write!(f, "duplicate node record for '{id}'"),
            ModelIssue::MissingNode { id } => write!(f, "no node record for location '{id}'"),
            ModelIssue::UnknownEndpoint { src, dst, missing } => {
                write!(f, "edge ({src} -> {dst}) references unknown location '{missing}'")
            }
            ModelIssue::DuplicateEdge { src, weight, dst } => {
                write!(f, "duplicate edge ({src}, {weight}, {dst})")
            }
            ModelIssue::NonFiniteWeight { src, dst } => {
                write!(f, "edge ({src} -> {dst}) has a non-finite weight")
            }
            ModelIssue::NonFiniteAttr { id, attr } => {
                write!(f, "node '{id}' attribute '{attr}' is non-finite")
            }
        }
    }
}

/// Validation failure listing every violation found, not just the first.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ModelError {
    pub issues: Vec<ModelIssue>,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid spatial model: ")?;
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Errors from path and distance operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("unknown location index {0}")]
    UnknownLocation(LocationId),
    #[error("no edge between consecutive path locations '{src}' and '{dst}'")]
    MissingEdge { src: String, dst: String },
    #[error("distance function '{0}' does not declare non-negativity")]
    NegativeDistanceFunction(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// One snapshot of the spatial configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialModel {
    universe: Arc<Universe>,
    nodes: Vec<NodeData>,
    out: Vec<Vec<Edge>>,
}

impl SpatialModel {
    /// Validates raw records against a universe and builds a snapshot.
    ///
    /// Every location must have exactly one node record; edges must
    /// reference known locations, carry finite weights, and contain no
    /// duplicate `(src, weight, dst)` triple. With `undirected` set, each
    /// edge record stands for both directions (and is normalized before
    /// duplicate detection). On failure the error lists every violation.
    pub fn validate(
        universe: Arc<Universe>,
        nodes: Vec<RawNode>,
        edges: Vec<RawEdge>,
        undirected: bool,
    ) -> Result<Self, ModelError> {
        let mut issues = Vec::new();
        let mut data: Vec<Option<NodeData>> = vec![None; universe.len()];
        for node in nodes {
            match universe.index_of(&node.id) {
                None => issues.push(ModelIssue::UnknownNode { id: node.id }),
                Some(l) => {
                    for (attr, value) in &node.attrs {
                        if !value.is_finite() {
                            issues.push(ModelIssue::NonFiniteAttr {
                                id: node.id.clone(),
                                attr: attr.clone(),
                            });
                        }
                    }
                    if data[l as usize].is_some() {
                        issues.push(ModelIssue::DuplicateNode { id: node.id });
                    } else {
                        data[l as usize] = Some(NodeData { kind: node.kind, attrs: node.attrs });
                    }
                }
            }
        }
        for l in universe.locations() {
            if data[l as usize].is_none() {
                issues.push(ModelIssue::MissingNode { id: universe.name(l).to_string() });
            }
        }

        let mut seen: HashSet<(LocationId, u64, LocationId)> = HashSet::new();
        let mut out: Vec<Vec<Edge>> = vec![Vec::new(); universe.len()];
        for edge in edges {
            let src = universe.index_of(&edge.src);
            let dst = universe.index_of(&edge.dst);
            let (src, dst) = match (src, dst) {
                (Some(s), Some(d)) => (s, d),
                (missing_src, _) => {
                    let missing = if missing_src.is_none() { edge.src.clone() } else { edge.dst.clone() };
                    issues.push(ModelIssue::UnknownEndpoint { src: edge.src, dst: edge.dst, missing });
                    continue;
                }
            };
            if !edge.weight.is_finite() {
                issues.push(ModelIssue::NonFiniteWeight { src: edge.src, dst: edge.dst });
                continue;
            }
            let key = if undirected && src > dst {
                (dst, f64_key(edge.weight), src)
            } else {
                (src, f64_key(edge.weight), dst)
            };
            if !seen.insert(key) {
                issues.push(ModelIssue::DuplicateEdge { src: edge.src, weight: edge.weight, dst: edge.dst });
                continue;
            }
            out[src as usize].push(Edge { dst, weight: edge.weight });
            if undirected && src != dst {
                out[dst as usize].push(Edge { dst: src, weight: edge.weight });
            }
        }

        if !issues.is_empty() {
            return Err(ModelError { issues });
        }
        for list in &mut out {
            list.sort_by(|a, b| {
                universe
                    .rank(a.dst)
                    .cmp(&universe.rank(b.dst))
                    .then(a.weight.partial_cmp(&b.weight).expect("finite weights"))
            });
        }
        let nodes = data.into_iter().map(|d| d.expect("checked above")).collect();
        Ok(SpatialModel { universe, nodes, out })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn node(&self, l: LocationId) -> &NodeData {
        &self.nodes[l as usize]
    }

    pub fn out_edges(&self, l: LocationId) -> &[Edge] {
        &self.out[l as usize]
    }

    fn check_loc(&self, l: LocationId) -> Result<(), SpatialError> {
        if (l as usize) < self.universe.len() {
            Ok(())
        } else {
            Err(SpatialError::UnknownLocation(l))
        }
    }

    /// Distinct successors of `l` with the cheapest `f`-distance among
    /// parallel edges, in deterministic (name-rank) order.
    pub fn successors(&self, l: LocationId, f: &DistanceFunction) -> Vec<(LocationId, DistValue)> {
        let domain = f.domain();
        let mut result: Vec<(LocationId, DistValue)> = Vec::with_capacity(self.out[l as usize].len());
        for edge in &self.out[l as usize] {
            let d = f.apply(edge.weight);
            match result.last_mut() {
                Some((dst, best)) if *dst == edge.dst => {
                    if domain.le(d, *best).expect("one domain") {
                        *best = d;
                    }
                }
                _ => result.push((edge.dst, d)),
            }
        }
        result
    }

    /// `f`-distance of the cheapest edge from `src` to `dst`.
    pub fn edge_distance(
        &self,
        src: LocationId,
        dst: LocationId,
        f: &DistanceFunction,
    ) -> Result<DistValue, SpatialError> {
        self.check_loc(src)?;
        self.check_loc(dst)?;
        let domain = f.domain();
        let mut best: Option<DistValue> = None;
        for edge in &self.out[src as usize] {
            if edge.dst != dst {
                continue;
            }
            let d = f.apply(edge.weight);
            best = Some(match best {
                None => d,
                Some(b) if domain.le(d, b)? => d,
                Some(b) => b,
            });
        }
        best.ok_or_else(|| SpatialError::MissingEdge {
            src: self.universe.name(src).to_string(),
            dst: self.universe.name(dst).to_string(),
        })
    }

    /// Cumulative `f`-distance of a location sequence; `⊥_D` when the
    /// sequence has fewer than two locations.
    pub fn path_distance(
        &self,
        locs: &[LocationId],
        f: &DistanceFunction,
    ) -> Result<DistValue, SpatialError> {
        for &l in locs {
            self.check_loc(l)?;
        }
        let domain = f.domain();
        let mut total = domain.zero();
        for pair in locs.windows(2) {
            total = domain.add(total, self.edge_distance(pair[0], pair[1], f)?)?;
        }
        Ok(total)
    }

    /// Shortest `f`-distances from `from` to every location (Dijkstra;
    /// `f` is non-negative). Unreachable locations get `⊤_D`; the origin
    /// gets `⊥_D`.
    pub fn shortest_distances(
        &self,
        from: LocationId,
        f: &DistanceFunction,
    ) -> Result<Vec<DistValue>, SpatialError> {
        self.check_loc(from)?;
        if !f.is_nonnegative() {
            return Err(SpatialError::NegativeDistanceFunction(f.name().to_string()));
        }
        let domain = f.domain();
        let n = self.universe.len();
        let mut dist = vec![domain.inf(); n];
        let mut done = vec![false; n];
        dist[from as usize] = domain.zero();
        for _ in 0..n {
            let mut next: Option<usize> = None;
            for v in 0..n {
                if done[v] {
                    continue;
                }
                match next {
                    None => next = Some(v),
                    Some(u) if domain.le(dist[v], dist[u])? && dist[v] != dist[u] => next = Some(v),
                    _ => {}
                }
            }
            let Some(u) = next else { break };
            if dist[u].is_inf() {
                break;
            }
            done[u] = true;
            for (dst, d) in self.successors(u as LocationId, f) {
                let cand = domain.add(dist[u], d)?;
                if domain.le(cand, dist[dst as usize])? && cand != dist[dst as usize] {
                    dist[dst as usize] = cand;
                }
            }
        }
        Ok(dist)
    }

    /// Shortest `f`-distance between two locations.
    pub fn shortest_distance(
        &self,
        from: LocationId,
        to: LocationId,
        f: &DistanceFunction,
    ) -> Result<DistValue, SpatialError> {
        self.check_loc(to)?;
        Ok(self.shortest_distances(from, f)?[to as usize])
    }

    /// All location-simple paths from `origin` whose every prefix stays
    /// within `d_hi`, in depth-first discovery order. The singleton path
    /// is always included.
    pub fn enumerate_bounded_paths(
        &self,
        origin: LocationId,
        f: &DistanceFunction,
        d_hi: DistValue,
    ) -> Result<Vec<Path>, SpatialError> {
        let mut paths = Vec::new();
        self.walk_bounded_paths(origin, f, d_hi, &mut |locs, dists| {
            paths.push(Path { locs: locs.to_vec(), dists: dists.to_vec() });
            Ok(true)
        })?;
        Ok(paths)
    }

    /// Depth-first visitor over the same prefix tree that
    /// [`enumerate_bounded_paths`](Self::enumerate_bounded_paths)
    /// materializes. `visit` receives each prefix once, paired with its
    /// cumulative distances; returning `false` prunes extensions of the
    /// current prefix.
    pub fn walk_bounded_paths(
        &self,
        origin: LocationId,
        f: &DistanceFunction,
        d_hi: DistValue,
        visit: &mut dyn FnMut(&[LocationId], &[DistValue]) -> Result<bool, SpatialError>,
    ) -> Result<(), SpatialError> {
        self.check_loc(origin)?;
        if !f.is_nonnegative() {
            return Err(SpatialError::NegativeDistanceFunction(f.name().to_string()));
        }
        let domain = f.domain();
        if !domain.contains(d_hi) {
            return Err(AlgebraError::NotInDomain(d_hi, domain).into());
        }
        let mut visited = vec![false; self.universe.len()];
        let mut locs = vec![origin];
        let mut dists = vec![domain.zero()];
        visited[origin as usize] = true;
        self.dfs(f, d_hi, &mut visited, &mut locs, &mut dists, visit)?;
        Ok(())
    }

    fn dfs(
        &self,
        f: &DistanceFunction,
        d_hi: DistValue,
        visited: &mut Vec<bool>,
        locs: &mut Vec<LocationId>,
        dists: &mut Vec<DistValue>,
        visit: &mut dyn FnMut(&[LocationId], &[DistValue]) -> Result<bool, SpatialError>,
    ) -> Result<(), SpatialError> {
        if !visit(locs, dists)? {
            return Ok(());
        }
        let domain = f.domain();
        let here = *locs.last().expect("non-empty path");
        let so_far = *dists.last().expect("non-empty path");
        for (dst, d) in self.successors(here, f) {
            if visited[dst as usize] {
                continue;
            }
            let total = domain.add(so_far, d)?;
            if !domain.le(total, d_hi)? {
                continue;
            }
            visited[dst as usize] = true;
            locs.push(dst);
            dists.push(total);
            self.dfs(f, d_hi, visited, locs, dists, visit)?;
            dists.pop();
            locs.pop();
            visited[dst as usize] = false;
        }
        Ok(())
    }
}

/// A location-simple path with its cumulative prefix distances under one
/// distance function: `dists[i]` is the distance of the prefix ending at
/// `locs[i]`, so `dists[0]` is `⊥_D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    locs: Vec<LocationId>,
    dists: Vec<DistValue>,
}

impl Path {
    pub fn locations(&self) -> &[LocationId] {
        &self.locs
    }

    pub fn prefix_distances(&self) -> &[DistValue] {
        &self.dists
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn end(&self) -> LocationId {
        *self.locs.last().expect("paths are non-empty")
    }
}
