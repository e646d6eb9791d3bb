//! Gammoids from digraphs: `Γ(D, T, E)` has as independent sets the subsets
//! of `E` that can be linked to `T` by pairwise vertex-disjoint paths.
//!
//! Independence is decided by unit vertex-capacity max-flow (each vertex is
//! split into an in- and an out-node joined by a capacity-1 arc), which by
//! Menger's theorem counts vertex-disjoint paths.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matroid::Matroid;
use crate::set::{k_subsets, ElementSet, MAX_ELEMENTS};

/// Largest vertex count accepted by [`gamma`].
pub const ORACLE_VERTEX_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Digraph {
    pub vertex_count: usize,
    /// Arcs `(u, v)`; loops are allowed and never used by paths.
    pub arcs: BTreeSet<(usize, usize)>,
}

impl Digraph {
    pub fn new(vertex_count: usize) -> Self {
        Digraph {
            vertex_count,
            arcs: BTreeSet::new(),
        }
    }

    pub fn add_arc(&mut self, u: usize, v: usize) -> Result<()> {
        if u >= self.vertex_count || v >= self.vertex_count {
            return Err(Error::Invalid(format!(
                "arc ({u}, {v}) leaves the vertex range 0..{}",
                self.vertex_count
            )));
        }
        self.arcs.insert((u, v));
        Ok(())
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.arcs.contains(&(u, v))
    }

    pub fn successors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.range((u, 0)..(u + 1, 0)).map(|&(_, v)| v)
    }
}

/// A triple `(D, T, E)`. Ground element `i` of the represented matroid is
/// vertex `ground[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    pub digraph: Digraph,
    pub targets: BTreeSet<usize>,
    pub ground: Vec<usize>,
}

impl Representation {
    pub fn new(digraph: Digraph, targets: BTreeSet<usize>, ground: Vec<usize>) -> Result<Self> {
        let n = digraph.vertex_count;
        if let Some(t) = targets.iter().find(|&&t| t >= n) {
            return Err(Error::Invalid(format!("target {t} is not a vertex")));
        }
        if let Some(e) = ground.iter().find(|&&e| e >= n) {
            return Err(Error::Invalid(format!(
                "ground element {e} is not a vertex"
            )));
        }
        let distinct: BTreeSet<usize> = ground.iter().copied().collect();
        if distinct.len() != ground.len() {
            return Err(Error::Invalid("ground set lists a vertex twice".into()));
        }
        Ok(Representation {
            digraph,
            targets,
            ground,
        })
    }

    /// Vertices of the ground elements in `x`.
    pub fn vertices_of(&self, x: ElementSet) -> Vec<usize> {
        x.iter().map(|i| self.ground[i]).collect()
    }
}

/// A family of paths, each a vertex sequence.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Routing {
    pub paths: Vec<Vec<usize>>,
}

/// Checks that `routing` is a routing from `from` to the targets: every
/// vertex of `from` starts a path, every path ends in a target, and distinct
/// paths share no vertex.
pub fn verify_routing(rep: &Representation, routing: &Routing, from: &BTreeSet<usize>) -> bool {
    let d = &rep.digraph;
    let mut used = BTreeSet::new();
    for p in &routing.paths {
        let Some(&last) = p.last() else {
            return false;
        };
        if p.iter().any(|&v| v >= d.vertex_count) {
            return false;
        }
        if !p.windows(2).all(|w| d.has_arc(w[0], w[1])) {
            return false;
        }
        if !rep.targets.contains(&last) {
            return false;
        }
        for &v in p {
            // Also rejects repeated vertices within one path.
            if !used.insert(v) {
                return false;
            }
        }
    }
    from.iter()
        .all(|x| routing.paths.iter().any(|p| p.first() == Some(x)))
}

struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i32>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: i32) {
        self.adj[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.adj[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0);
    }

    /// Edmonds-Karp, stopping once `limit` units flow.
    fn max_flow(&mut self, s: usize, t: usize, limit: i32) -> i32 {
        let mut flow = 0;
        let nodes = self.adj.len();
        while flow < limit {
            let mut prev_edge = vec![usize::MAX; nodes];
            let mut seen = vec![false; nodes];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.adj[u] {
                    let v = self.to[e];
                    if !seen[v] && self.cap[e] > 0 {
                        seen[v] = true;
                        prev_edge[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut v = t;
            while v != s {
                let e = prev_edge[v];
                self.cap[e] -= 1;
                self.cap[e ^ 1] += 1;
                v = self.to[e ^ 1];
            }
            flow += 1;
        }
        flow
    }
}

/// Maximum number of vertex-disjoint paths from the vertices `sources` to
/// the targets of `rep`.
pub fn disjoint_path_count(rep: &Representation, sources: &[usize]) -> usize {
    let d = &rep.digraph;
    let n = d.vertex_count;
    let (src, sink) = (2 * n, 2 * n + 1);
    let mut net = FlowNetwork::new(2 * n + 2);
    for v in 0..n {
        net.add_edge(2 * v, 2 * v + 1, 1);
    }
    for &(u, v) in &d.arcs {
        if u != v {
            net.add_edge(2 * u + 1, 2 * v, 1);
        }
    }
    for &s in sources {
        net.add_edge(src, 2 * s, 1);
    }
    for &t in &rep.targets {
        net.add_edge(2 * t + 1, sink, 1);
    }
    net.max_flow(src, sink, sources.len() as i32) as usize
}

pub fn is_linked(rep: &Representation, x: ElementSet) -> bool {
    let vertices = rep.vertices_of(x);
    disjoint_path_count(rep, &vertices) == vertices.len()
}

/// The gammoid `Γ(D, T, E)`.
pub fn gamma(rep: &Representation) -> Result<Matroid> {
    let n = rep.ground.len();
    if n > MAX_ELEMENTS {
        return Err(Error::TooLarge {
            size: n,
            cap: MAX_ELEMENTS,
        });
    }
    if rep.digraph.vertex_count > ORACLE_VERTEX_CAP {
        return Err(Error::TooLarge {
            size: rep.digraph.vertex_count,
            cap: ORACLE_VERTEX_CAP,
        });
    }
    let rank = disjoint_path_count(rep, &rep.ground);
    let bases: Vec<ElementSet> = k_subsets(n, rank).filter(|&b| is_linked(rep, b)).collect();
    let labels = rep.ground.iter().map(|v| v.to_string()).collect();
    Matroid::from_bases(n, bases)?.with_labels(labels)
}

/// Adds a new vertex with arcs to every vertex of `flat` and appends it to
/// the ground set. If `flat` is the unique minimal flat of the cut attaching
/// an element to `Γ(rep)`, the result represents that extension.
pub fn deflation_extend_representation(
    rep: &Representation,
    flat: &[usize],
) -> Result<Representation> {
    if let Some(v) = flat.iter().find(|v| !rep.ground.contains(v)) {
        return Err(Error::Invalid(format!(
            "vertex {v} is not a ground element"
        )));
    }
    let mut digraph = rep.digraph.clone();
    let fresh = digraph.vertex_count;
    digraph.vertex_count += 1;
    for &v in flat {
        digraph.add_arc(fresh, v)?;
    }
    let mut ground = rep.ground.clone();
    ground.push(fresh);
    Representation::new(digraph, rep.targets.clone(), ground)
}

/// Deterministic pseudo-random representation and its gammoid.
///
/// Distribution, for seed `s`: `|V|` uniform in `1..=v_max`; with
/// probability 1/3 (when `e_max ≥ |V|`) the gammoid is strict (`E = V`),
/// otherwise `|E|` is uniform in `0..=min(e_max, |V|)` over a random subset;
/// `|T|` is uniform in `1..=|V|/2 + 1`; each ordered pair of distinct
/// vertices is an arc independently with a probability drawn uniformly from
/// `[0.2, 0.6)`.
pub fn random_gammoid(seed: u64, v_max: usize, e_max: usize) -> Result<(Representation, Matroid)> {
    if v_max > ORACLE_VERTEX_CAP {
        return Err(Error::TooLarge {
            size: v_max,
            cap: ORACLE_VERTEX_CAP,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = if v_max == 0 {
        0
    } else {
        rng.gen_range(1..=v_max)
    };
    let e_cap = e_max.min(nv).min(MAX_ELEMENTS);
    let strict = nv > 0 && e_cap == nv && rng.gen_ratio(1, 3);
    let mut vertices: Vec<usize> = (0..nv).collect();
    let ground: Vec<usize> = if strict {
        vertices.clone()
    } else {
        let ne = rng.gen_range(0..=e_cap);
        shuffle(&mut vertices, &mut rng);
        let mut g = vertices[..ne].to_vec();
        g.sort_unstable();
        g
    };
    let mut targets = BTreeSet::new();
    if nv > 0 {
        let nt = rng.gen_range(1..=(nv / 2 + 1).min(nv));
        let mut order: Vec<usize> = (0..nv).collect();
        shuffle(&mut order, &mut rng);
        targets.extend(order[..nt].iter().copied());
    }
    let density: f64 = rng.gen_range(0.2..0.6);
    let mut digraph = Digraph::new(nv);
    for u in 0..nv {
        for v in 0..nv {
            if u != v && rng.gen_bool(density) {
                digraph.add_arc(u, v)?;
            }
        }
    }
    let rep = Representation::new(digraph, targets, ground)?;
    let m = gamma(&rep)?;
    Ok((rep, m))
}

fn shuffle(items: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Parses the digraph text format:
///
/// ```text
/// VERTICES 4
/// TARGETS 0 1
/// GROUND 0 1 2 3
/// ARCS
/// 2 0
/// 3 1
/// ```
pub fn parse_representation(text: &str) -> Result<Representation> {
    let mut vertices: Option<usize> = None;
    let mut targets: Option<BTreeSet<usize>> = None;
    let mut ground: Option<Vec<usize>> = None;
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut in_arcs = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let numbers = |ts: &[&str]| -> Result<Vec<usize>> {
            ts.iter()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| err(format!("{t:?} is not a vertex index")))
                })
                .collect()
        };
        if in_arcs {
            let uv = numbers(&tokens)?;
            if uv.len() != 2 {
                return Err(err("arc lines hold exactly two vertices".into()));
            }
            arcs.push((uv[0], uv[1]));
            continue;
        }
        match tokens[0] {
            "VERTICES" => {
                let v = numbers(&tokens[1..])?;
                if v.len() != 1 {
                    return Err(err("VERTICES takes one number".into()));
                }
                vertices = Some(v[0]);
            }
            "TARGETS" => targets = Some(numbers(&tokens[1..])?.into_iter().collect()),
            "GROUND" => ground = Some(numbers(&tokens[1..])?),
            "ARCS" => {
                if tokens.len() != 1 {
                    return Err(err("trailing tokens after ARCS".into()));
                }
                in_arcs = true;
            }
            other => return Err(err(format!("unexpected keyword {other:?}"))),
        }
    }
    let missing = |what: &str| Error::Parse {
        line: 0,
        message: format!("missing {what} line"),
    };
    let n = vertices.ok_or_else(|| missing("VERTICES"))?;
    let mut digraph = Digraph::new(n);
    for (u, v) in arcs {
        digraph.add_arc(u, v)?;
    }
    Representation::new(
        digraph,
        targets.ok_or_else(|| missing("TARGETS"))?,
        ground.ok_or_else(|| missing("GROUND"))?,
    )
}

pub fn write_representation(rep: &Representation) -> String {
    let join =
        |xs: &mut dyn Iterator<Item = &usize>| xs.map(|v| format!(" {v}")).collect::<String>();
    let mut out = String::new();
    writeln!(out, "VERTICES {}", rep.digraph.vertex_count).unwrap();
    writeln!(out, "TARGETS{}", join(&mut rep.targets.iter())).unwrap();
    writeln!(out, "GROUND{}", join(&mut rep.ground.iter())).unwrap();
    out.push_str("ARCS\n");
    for (u, v) in &rep.digraph.arcs {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(
        n: usize,
        arcs: &[(usize, usize)],
        targets: &[usize],
        ground: &[usize],
    ) -> Representation {
        let mut d = Digraph::new(n);
        for &(u, v) in arcs {
            d.add_arc(u, v).unwrap();
        }
        Representation::new(d, targets.iter().copied().collect(), ground.to_vec()).unwrap()
    }

    #[test]
    fn routing_checks() {
        let r = rep(3, &[(0, 2), (1, 2)], &[2], &[0, 1]);
        assert!(verify_routing(&r, &Routing::default(), &BTreeSet::new()));
        let single = Routing {
            paths: vec![vec![0, 2]],
        };
        assert!(verify_routing(&r, &single, &[0].into()));
        let clash = Routing {
            paths: vec![vec![0, 2], vec![1, 2]],
        };
        assert!(!verify_routing(&r, &clash, &[0, 1].into()));
        let not_a_path = Routing {
            paths: vec![vec![0, 1, 2]],
        };
        assert!(!verify_routing(&r, &not_a_path, &[0].into()));
    }

    #[test]
    fn gamma_examples() {
        let r = rep(3, &[(0, 2), (1, 2)], &[2], &[0, 1]);
        assert_eq!(gamma(&r).unwrap(), Matroid::uniform(1, 2));

        let all = [0, 1, 2, 3];
        let free = rep(4, &[(0, 1), (2, 3)], &all, &all);
        assert_eq!(gamma(&free).unwrap(), Matroid::free(4));

        let u24 = rep(4, &[(2, 0), (2, 1), (3, 0), (3, 1)], &[0, 1], &all);
        assert_eq!(gamma(&u24).unwrap(), Matroid::uniform(2, 4));
    }

    #[test]
    fn deflation_extension_examples() {
        let r = rep(3, &[(0, 2), (1, 2)], &[2], &[0, 1]);
        // New vertex 3 pointing at 0 becomes parallel to 0.
        let ext = deflation_extend_representation(&r, &[0]).unwrap();
        let m = gamma(&ext).unwrap();
        assert_eq!(m.rank_of(ElementSet::from_elements([0, 2])), 1);
        assert_eq!(
            m.restrict(ElementSet::from_elements([0, 1])),
            gamma(&r).unwrap()
        );

        let looped = gamma(&deflation_extend_representation(&r, &[]).unwrap()).unwrap();
        assert_eq!(looped.loops(), ElementSet::singleton(2));

        let all = [0, 1, 2];
        let free = rep(3, &[], &all, &all);
        let general = gamma(&deflation_extend_representation(&free, &all).unwrap()).unwrap();
        assert_eq!(general, Matroid::uniform(3, 4));
    }

    #[test]
    fn random_is_reproducible() {
        let a = random_gammoid(42, 5, 5).unwrap();
        let b = random_gammoid(42, 5, 5).unwrap();
        assert_eq!(a, b);
        let (_, empty) = random_gammoid(3, 5, 0).unwrap();
        assert_eq!((empty.size(), empty.rank()), (0, 0));
    }

    #[test]
    fn text_round_trip() {
        let r = rep(4, &[(2, 0), (2, 1), (3, 0), (3, 1)], &[0, 1], &[0, 1, 2, 3]);
        let text = write_representation(&r);
        assert_eq!(parse_representation(&text).unwrap(), r);
        assert!(parse_representation("VERTICES 2\nTARGETS 5\nGROUND 0\n").is_err());
        assert!(parse_representation("VERTICES 2\nTARGETS 0\nGROUND 0\nARCS\n0\n").is_err());
    }
}
