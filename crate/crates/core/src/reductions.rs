//! Planning instances built from independent-set instances.
//!
//! Both constructions encode "choose k pairwise non-adjacent vertices" so
//! that a plan of a known target cost exists exactly when such a choice
//! exists. One relies on minimum order quantities alone, the other on
//! minimum shares in groups of alternatives alone.

use std::fmt::Write as _;

use crate::error::ModelError;
use crate::model::{Instance, Material, Recipe, Scenario, Weights};

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u64>,
}

pub const MAX_VERTICES: usize = 64;
/// Largest graph [`brute_force_independent_set`] accepts.
pub const MAX_BRUTE_FORCE_VERTICES: usize = 25;

impl Graph {
    /// Edges are 0-based and unordered; self-loops and repeats are errors.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        if n > MAX_VERTICES {
            return Err(ModelError::InvalidParameter(format!(
                "graphs are limited to {MAX_VERTICES} vertices, got {n}"
            )));
        }
        let mut adjacency = vec![0u64; n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(ModelError::InvalidParameter(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(ModelError::InvalidParameter(format!("self-loop at vertex {u}")));
            }
            if adjacency[u] >> v & 1 == 1 {
                return Err(ModelError::InvalidParameter(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u] |= 1 << v;
            adjacency[v] |= 1 << u;
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        Ok(Self {
            n,
            edges: normalized,
            adjacency,
        })
    }

    /// The graph on `n` vertices whose edges are the set bits of `mask`
    /// over the pairs `(0,1), (0,2), .., (n-2,n-1)` in order.
    pub fn from_pair_mask(n: usize, mask: u64) -> Self {
        let mut edges = Vec::new();
        let mut bit = 0;
        for u in 0..n {
            for v in u + 1..n {
                if mask >> bit & 1 == 1 {
                    edges.push((u, v));
                }
                bit += 1;
            }
        }
        Self::new(n, &edges).expect("pair mask yields a simple graph")
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u] >> v & 1 == 1
    }

    /// Edge list text: a line `n m`, then `m` lines `u v` with 1-based
    /// vertices. Blank lines and `#` comments are ignored.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{} {}", u + 1, v + 1);
        }
        out
    }
}

pub fn parse_edge_list(text: &str) -> Result<Graph, ModelError> {
    let bad = |msg: String| ModelError::InvalidParameter(format!("edge list: {msg}"));
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    let numbers = |lineno: usize, line: &str| -> Result<(usize, usize), ModelError> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(bad(format!("line {}: expected two integers", lineno + 1)));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(format!("line {}: '{s}' is not a non-negative integer", lineno + 1)))
        };
        Ok((parse(parts[0])?, parse(parts[1])?))
    };
    let (lineno, header) = lines.next().ok_or_else(|| bad("empty input".into()))?;
    let (n, m) = numbers(lineno, header)?;
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines.by_ref() {
        let (u, v) = numbers(lineno, line)?;
        if u == 0 || v == 0 {
            return Err(bad(format!("line {}: vertices are 1-based", lineno + 1)));
        }
        edges.push((u - 1, v - 1));
    }
    if edges.len() != m {
        return Err(bad(format!("header announces {m} edges, found {}", edges.len())));
    }
    Graph::new(n, &edges)
}

/// Whether some `k` vertices are pairwise non-adjacent, by exhaustive
/// search.
pub fn brute_force_independent_set(graph: &Graph, k: usize) -> Result<bool, ModelError> {
    if graph.n > MAX_BRUTE_FORCE_VERTICES {
        return Err(ModelError::InvalidParameter(format!(
            "exhaustive search is limited to {MAX_BRUTE_FORCE_VERTICES} vertices, got {}",
            graph.n
        )));
    }
    fn extend(g: &Graph, next: usize, allowed: u64, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        if (allowed >> next).count_ones() < need as u32 {
            return false;
        }
        (next..g.n).any(|v| allowed >> v & 1 == 1 && extend(g, v + 1, allowed & !g.adjacency[v], need - 1))
    }
    let all = if graph.n == 64 { u64::MAX } else { (1u64 << graph.n) - 1 };
    Ok(extend(graph, 0, all, k))
}

fn check_k(graph: &Graph, k: usize) -> Result<(), ModelError> {
    if k == 0 || k > graph.n {
        return Err(ModelError::InvalidParameter(format!(
            "k must lie in 1..={}, got {k}",
            graph.n
        )));
    }
    Ok(())
}

fn vertex(i: usize) -> String {
    format!("v{}", i + 1)
}

fn pair(i: usize, j: usize) -> String {
    format!("p{}_{}", i + 1, j + 1)
}

/// Vertex recipe outputs: an equal share of 100 into every pair material
/// that contains the vertex, or 100 of the target directly when the graph
/// has a single vertex.
fn vertex_outputs(mut recipe: Recipe, n: usize, i: usize) -> Recipe {
    if n == 1 {
        return recipe.output("t", 100.0);
    }
    let share = 100.0 / (n - 1) as f64;
    for j in 0..n {
        if j != i {
            recipe = recipe.output(pair(i.min(j), i.max(j)), share);
        }
    }
    recipe
}

fn gate_stock(graph: &Graph, i: usize, j: usize) -> f64 {
    if graph.has_edge(i, j) {
        0.5
    } else {
        1.0
    }
}

/// Reduction through minimum order quantities. Returns the scenario and
/// the cost that is attainable exactly when an independent set of size
/// `k` exists.
pub fn reduce_is_moq(graph: &Graph, k: usize) -> Result<(Scenario, f64), ModelError> {
    check_k(graph, k)?;
    let n = graph.n;
    let expensive = 100.0 * (k as f64 + 1.0);
    let mut materials = Vec::new();
    let mut recipes = Vec::new();
    for i in 0..n {
        materials.push(Material::new(vertex(i)).with_cost(1.0));
        materials.push(Material::new(format!("{}~", vertex(i))).with_cost(expensive).with_batch(1.0, 0.0));
        let recipe = Recipe::new(format!("r{}", i + 1))
            .input(vertex(i), 100.0)
            .input(format!("{}~", vertex(i)), 1.0);
        recipes.push(vertex_outputs(recipe, n, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            let share = 200.0 / (n - 1) as f64;
            materials.push(Material::new(pair(i, j)));
            materials.push(
                Material::new(format!("{}~", pair(i, j)))
                    .with_cost(expensive)
                    .with_batch(gate_stock(graph, i, j), 0.0),
            );
            recipes.push(
                Recipe::new(format!("r{}_{}", i + 1, j + 1))
                    .input(pair(i, j), share)
                    .input(format!("{}~", pair(i, j)), 1.0)
                    .output("t", share),
            );
        }
    }
    materials.push(Material::new("t").with_demand(100.0 * k as f64));
    let scenario = Scenario::new(Instance::load(materials, recipes)?)?
        .with_weights(Weights::COST_ONLY)
        .with_moq(Some(100.0));
    Ok((scenario, 100.0 * k as f64))
}

/// Reduction through minimum shares in groups of alternatives.
///
/// Each vertex material holds 100 units of costly stock that must be
/// consumed, either by its vertex recipe or as exactly 5% of a 2000-unit
/// group whose other member is a filler bought at cost 1. Routing the
/// stock to the vertex recipe therefore costs 100 more filler. Gate
/// materials are free but can only be replenished through an expensive
/// supply recipe, so leftover gate stock carries no cost.
pub fn reduce_is_mpa(graph: &Graph, k: usize) -> Result<(Scenario, f64), ModelError> {
    check_k(graph, k)?;
    let n = graph.n;
    let expensive = 100.0 * (k as f64 + 1.0);
    let mut materials = Vec::new();
    let mut recipes = Vec::new();
    for i in 0..n {
        let v = vertex(i);
        materials.push(Material::new(v.clone()).with_cost(expensive).with_batch(100.0, 0.0));
        materials.push(Material::new(format!("{v}~")).with_cost(1.0));
        materials.push(Material::new(format!("{v}-")).with_demand(1.0));
        recipes.push(vertex_outputs(Recipe::new(format!("r{}", i + 1)).input(v.clone(), 100.0), n, i));
        recipes.push(
            Recipe::new(format!("h{}", i + 1))
                .output(format!("{v}-"), 1.0)
                .alternatives([v.clone(), format!("{v}~")], 2000.0),
        );
    }
    if n > 1 {
        let mut supply = Recipe::new("gates").input("g", 1.0);
        materials.push(Material::new("g").with_cost(expensive));
        for i in 0..n {
            for j in i + 1..n {
                let share = 200.0 / (n - 1) as f64;
                let gate = format!("{}~", pair(i, j));
                materials.push(Material::new(pair(i, j)));
                materials.push(Material::new(gate.clone()).with_batch(gate_stock(graph, i, j), 0.0));
                supply = supply.output(gate.clone(), 1.0);
                recipes.push(
                    Recipe::new(format!("r{}_{}", i + 1, j + 1))
                        .input(pair(i, j), share)
                        .input(gate, 1.0)
                        .output("t", share),
                );
            }
        }
        recipes.push(supply);
    }
    materials.push(Material::new("t").with_demand(100.0 * k as f64));
    let scenario = Scenario::new(Instance::load(materials, recipes)?)?
        .with_weights(Weights([1.0, 1.0, 0.0, 0.0, 0.0]))
        .with_moq(Some(0.0));
    Ok((scenario, 1900.0 * n as f64 + 100.0 * k as f64))
}
