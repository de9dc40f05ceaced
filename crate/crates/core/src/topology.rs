//! Network graph, topology file I/O and k-shortest-path routing.
//!
//! Topology files are plain text:
//!
//! ```text
//! nodes 3
//! link 0 1 100
//! link 1 2 100
//! link 0 2 100
//! ```
//!
//! Node ids are 0-based. Blank lines and lines starting with `#` are ignored.
//! Every link is split into `ceil(length / max_span_km)` spans of equal length.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SPAN_KM: f64 = 80.0;

const NSFNET: &str = include_str!("../data/nsfnet.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub length_km: f64,
    pub spans_km: Vec<f64>,
}

impl Link {
    pub fn other(&self, node: usize) -> usize {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, node: usize) -> bool {
        self.a == node || self.b == node
    }
}

/// Undirected, connected network with a per-link amplifier span layout.
#[derive(Debug, Clone)]
pub struct NetworkTopology {
    num_nodes: usize,
    links: Vec<Link>,
    // node -> (neighbor, link index), sorted by neighbor
    adjacency: Vec<Vec<(usize, usize)>>,
    max_span_km: f64,
}

impl NetworkTopology {
    /// Builds and validates a topology from `(a, b, length_km)` triples.
    pub fn new(num_nodes: usize, links: &[(usize, usize, f64)], max_span_km: f64) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Topology("topology has no nodes".into()));
        }
        if !(max_span_km > 0.0) {
            return Err(Error::Topology(format!("max span length {max_span_km} must be positive")));
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        let mut built = Vec::with_capacity(links.len());
        for (idx, &(a, b, length_km)) in links.iter().enumerate() {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::Topology(format!("link {a}-{b} references a node outside 0..{num_nodes}")));
            }
            if a == b {
                return Err(Error::Topology(format!("self-loop on node {a}")));
            }
            if !(length_km > 0.0) || !length_km.is_finite() {
                return Err(Error::Topology(format!("link {a}-{b} has non-positive length {length_km}")));
            }
            if adjacency[a].iter().any(|&(n, _)| n == b) {
                return Err(Error::Topology(format!("duplicate link {a}-{b}")));
            }
            adjacency[a].push((b, idx));
            adjacency[b].push((a, idx));
            built.push(Link {
                a,
                b,
                length_km,
                spans_km: split_spans(length_km, max_span_km),
            });
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let topo = NetworkTopology {
            num_nodes,
            links: built,
            adjacency,
            max_span_km,
        };
        if !topo.is_connected() {
            return Err(Error::Topology("graph is not connected".into()));
        }
        Ok(topo)
    }

    pub fn parse(text: &str, origin: &Path, max_span_km: f64) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut num_nodes = None;
        let mut links = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["nodes", n] => {
                    if num_nodes.is_some() {
                        return Err(parse_err(lineno, "repeated `nodes` line".into()));
                    }
                    let n = n
                        .parse::<usize>()
                        .map_err(|e| parse_err(lineno, format!("bad node count: {e}")))?;
                    num_nodes = Some(n);
                }
                ["link", a, b, len] => {
                    if num_nodes.is_none() {
                        return Err(parse_err(lineno, "`link` before `nodes`".into()));
                    }
                    let a = a.parse::<usize>().map_err(|e| parse_err(lineno, format!("bad node id: {e}")))?;
                    let b = b.parse::<usize>().map_err(|e| parse_err(lineno, format!("bad node id: {e}")))?;
                    let len = len
                        .parse::<f64>()
                        .map_err(|e| parse_err(lineno, format!("bad length: {e}")))?;
                    links.push((a, b, len));
                }
                _ => return Err(parse_err(lineno, format!("unrecognised line `{line}`"))),
            }
        }
        let num_nodes = num_nodes.ok_or_else(|| parse_err(1, "missing `nodes` line".into()))?;
        NetworkTopology::new(num_nodes, &links, max_span_km)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, idx: usize) -> &Link {
        &self.links[idx]
    }

    pub fn max_span_km(&self) -> f64 {
        self.max_span_km
    }

    /// `(neighbor, link index)` pairs of `node`, sorted by neighbor.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, l)| l)
    }

    /// All span lengths traversed by `route`, in order.
    pub fn route_spans(&self, route: &Route) -> Vec<f64> {
        route
            .links
            .iter()
            .flat_map(|&l| self.links[l].spans_km.iter().copied())
            .collect()
    }

    /// Writes the topology back out in the file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {}\n", self.num_nodes);
        for l in &self.links {
            out.push_str(&format!("link {} {} {}\n", l.a, l.b, l.length_km));
        }
        out
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &(m, _) in &self.adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node < self.num_nodes {
            Ok(())
        } else {
            Err(Error::UnknownNode(node))
        }
    }
}

fn split_spans(length_km: f64, max_span_km: f64) -> Vec<f64> {
    let n = (length_km / max_span_km).ceil().max(1.0) as usize;
    vec![length_km / n as f64; n]
}

pub fn load_topology(path: impl AsRef<Path>, max_span_km: f64) -> Result<NetworkTopology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    NetworkTopology::parse(&text, path, max_span_km)
}

/// The 14-node, 21-link NSFNET shipped in `data/nsfnet.txt`.
pub fn builtin_nsfnet() -> NetworkTopology {
    NetworkTopology::parse(NSFNET, Path::new("data/nsfnet.txt"), DEFAULT_MAX_SPAN_KM)
        .expect("shipped NSFNET file is valid")
}

/// A simple path through the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    pub length_km: f64,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn source(&self) -> usize {
        self.nodes[0]
    }

    pub fn destination(&self) -> usize {
        *self.nodes.last().expect("route has nodes")
    }

    fn from_nodes(topo: &NetworkTopology, nodes: Vec<usize>) -> Route {
        let links: Vec<usize> = nodes
            .windows(2)
            .map(|w| topo.link_between(w[0], w[1]).expect("consecutive route nodes are adjacent"))
            .collect();
        let length_km = links.iter().map(|&l| topo.links[l].length_km).sum();
        Route {
            nodes,
            links,
            length_km,
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        write!(f, "{} ({:.1} km)", names.join("-"), self.length_km)
    }
}

const LENGTH_EPS: f64 = 1e-9;

/// Total order used everywhere routes are ranked: length, then hop count,
/// then node sequence.
pub fn route_order(a_len: f64, a_nodes: &[usize], b_len: f64, b_nodes: &[usize]) -> Ordering {
    let scale = a_len.abs().max(b_len.abs()).max(1.0);
    if (a_len - b_len).abs() > LENGTH_EPS * scale {
        return a_len.partial_cmp(&b_len).unwrap_or(Ordering::Equal);
    }
    a_nodes
        .len()
        .cmp(&b_nodes.len())
        .then_with(|| a_nodes.cmp(b_nodes))
}

/// Shortest path from `src` to `dst` under [`route_order`], avoiding the
/// given nodes and links.
fn constrained_shortest_path(
    topo: &NetworkTopology,
    src: usize,
    dst: usize,
    banned_nodes: &[bool],
    banned_links: &[bool],
) -> Option<(f64, Vec<usize>)> {
    let n = topo.num_nodes;
    let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
    let mut done = vec![false; n];
    best[src] = Some((0.0, vec![src]));
    loop {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if done[v] {
                continue;
            }
            if let Some((len, path)) = &best[v] {
                let better = match pick {
                    None => true,
                    Some(p) => {
                        let (pl, pp) = best[p].as_ref().unwrap();
                        route_order(*len, path, *pl, pp) == Ordering::Less
                    }
                };
                if better {
                    pick = Some(v);
                }
            }
        }
        let u = pick?;
        if u == dst {
            return best[u].take();
        }
        done[u] = true;
        let (ulen, upath) = best[u].clone().unwrap();
        for &(v, l) in &topo.adjacency[u] {
            if done[v] || banned_nodes[v] || banned_links[l] {
                continue;
            }
            let cand_len = ulen + topo.links[l].length_km;
            let mut cand_path = upath.clone();
            cand_path.push(v);
            let replace = match &best[v] {
                None => true,
                Some((bl, bp)) => route_order(cand_len, &cand_path, *bl, bp) == Ordering::Less,
            };
            if replace {
                best[v] = Some((cand_len, cand_path));
            }
        }
    }
}

/// Yen's k loopless shortest paths, ascending by length with ties broken
/// by fewer hops and then lexicographic node order.
pub fn k_shortest_paths(topo: &NetworkTopology, src: usize, dst: usize, k: usize) -> Result<Vec<Route>> {
    topo.check_node(src)?;
    topo.check_node(dst)?;
    if src == dst {
        return Err(Error::SameEndpoints(src));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = topo.num_nodes;
    let m = topo.links.len();
    let mut accepted: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();

    match constrained_shortest_path(topo, src, dst, &vec![false; n], &vec![false; m]) {
        Some(p) => accepted.push(p),
        None => return Ok(Vec::new()),
    }

    while accepted.len() < k {
        let (_, last) = accepted.last().unwrap().clone();
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let root_len: f64 = root
                .windows(2)
                .map(|w| topo.links[topo.link_between(w[0], w[1]).unwrap()].length_km)
                .sum();

            let mut banned_links = vec![false; m];
            for (_, p) in &accepted {
                if p.len() > i && &p[..=i] == root {
                    if let Some(l) = topo.link_between(p[i], p[i + 1]) {
                        banned_links[l] = true;
                    }
                }
            }
            let mut banned_nodes = vec![false; n];
            for &r in &root[..i] {
                banned_nodes[r] = true;
            }

            if let Some((spur_len, spur_path)) =
                constrained_shortest_path(topo, spur, dst, &banned_nodes, &banned_links)
            {
                let mut full = root[..i].to_vec();
                full.extend_from_slice(&spur_path);
                let total = root_len + spur_len;
                let known = accepted.iter().chain(candidates.iter()).any(|(_, p)| *p == full);
                if !known {
                    candidates.push((total, full));
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let best_idx = (0..candidates.len())
            .min_by(|&a, &b| {
                let (al, ap) = &candidates[a];
                let (bl, bp) = &candidates[b];
                route_order(*al, ap, *bl, bp)
            })
            .unwrap();
        accepted.push(candidates.swap_remove(best_idx));
    }

    Ok(accepted
        .into_iter()
        .map(|(_, nodes)| Route::from_nodes(topo, nodes))
        .collect())
}

/// Candidate routes for every ordered node pair.
#[derive(Debug, Clone)]
pub struct RouteTable {
    num_nodes: usize,
    k: usize,
    routes: Vec<Vec<Route>>,
}

impl RouteTable {
    pub fn build(topo: &NetworkTopology, k: usize) -> Result<Self> {
        let n = topo.num_nodes();
        let mut routes = Vec::with_capacity(n * n);
        for s in 0..n {
            for d in 0..n {
                if s == d {
                    routes.push(Vec::new());
                } else {
                    routes.push(k_shortest_paths(topo, s, d, k)?);
                }
            }
        }
        Ok(RouteTable {
            num_nodes: n,
            k,
            routes,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Routes for `(src, dst)`; empty for `src == dst` or out-of-range nodes.
    pub fn routes(&self, src: usize, dst: usize) -> &[Route] {
        if src >= self.num_nodes || dst >= self.num_nodes {
            return &[];
        }
        &self.routes[src * self.num_nodes + dst]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> NetworkTopology {
        NetworkTopology::new(3, &[(0, 1, 100.0), (1, 2, 100.0), (0, 2, 100.0)], 80.0).unwrap()
    }

    #[test]
    fn triangle_spans_split_evenly() {
        let t = triangle();
        assert_eq!(t.num_links(), 3);
        for l in t.links() {
            assert_eq!(l.spans_km, vec![50.0, 50.0]);
        }
    }

    #[test]
    fn single_80km_link_is_one_span() {
        let t = NetworkTopology::new(2, &[(0, 1, 80.0)], 80.0).unwrap();
        assert_eq!(t.link(0).spans_km, vec![80.0]);
    }

    #[test]
    fn parse_rejects_duplicate_link() {
        let err = NetworkTopology::parse("nodes 2\nlink 0 1 10\nlink 1 0 20\n", Path::new("x"), 80.0);
        assert!(matches!(err, Err(Error::Topology(m)) if m.contains("duplicate")));
    }

    #[test]
    fn parse_rejects_bad_input() {
        let p = Path::new("t");
        assert!(matches!(
            NetworkTopology::parse("nodes 3\nlink 0 1 10\n", p, 80.0),
            Err(Error::Topology(m)) if m.contains("connected")
        ));
        assert!(NetworkTopology::parse("nodes 2\nlink 0 1 0\n", p, 80.0).is_err());
        assert!(NetworkTopology::parse("nodes 2\nlink 0 1 -5\n", p, 80.0).is_err());
        assert!(matches!(
            NetworkTopology::parse("nodes 2\nlnk 0 1 5\n", p, 80.0),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(NetworkTopology::parse("link 0 1 5\n", p, 80.0).is_err());
    }

    #[test]
    fn nsfnet_shape() {
        let t = builtin_nsfnet();
        assert_eq!(t.num_nodes(), 14);
        assert_eq!(t.num_links(), 21);
        assert!(t.is_connected());
        for l in t.links() {
            let total: f64 = l.spans_km.iter().sum();
            assert!((total - l.length_km).abs() < 1e-9);
            assert!(l.spans_km.iter().all(|&s| s <= DEFAULT_MAX_SPAN_KM + 1e-9));
        }
    }

    #[test]
    fn ksp_triangle_has_two_routes() {
        let t = triangle();
        let r = k_shortest_paths(&t, 0, 1, 3).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].nodes, vec![0, 1]);
        assert_eq!(r[1].nodes, vec![0, 2, 1]);
        assert_eq!(r[1].length_km, 200.0);
    }

    #[test]
    fn ksp_errors() {
        let t = triangle();
        assert!(matches!(k_shortest_paths(&t, 1, 1, 2), Err(Error::SameEndpoints(1))));
        assert!(matches!(k_shortest_paths(&t, 0, 9, 2), Err(Error::UnknownNode(9))));
    }

    #[test]
    fn ksp_tie_prefers_fewer_hops_then_lexicographic() {
        // 0-1-3 and 0-2-3 both 200 km; direct 0-3 also 200 km
        let t = NetworkTopology::new(
            4,
            &[(0, 1, 100.0), (1, 3, 100.0), (0, 2, 100.0), (2, 3, 100.0), (0, 3, 200.0)],
            80.0,
        )
        .unwrap();
        let r = k_shortest_paths(&t, 0, 3, 3).unwrap();
        let nodes: Vec<_> = r.iter().map(|r| r.nodes.clone()).collect();
        assert_eq!(nodes, vec![vec![0, 3], vec![0, 1, 3], vec![0, 2, 3]]);
    }
}
