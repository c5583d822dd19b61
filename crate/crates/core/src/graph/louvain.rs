//! Louvain community detection on the weight-summed undirected projection.
//!
//! Two-phase greedy modularity optimization (Blondel et al. 2008): local
//! node moves until no positive gain, then aggregation of communities into
//! meta-nodes, repeated until the per-level modularity gain drops below
//! threshold. The seed fixes the node visiting order, making the result
//! deterministic.

use super::DiscourseGraph;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

const LEVEL_GAIN_THRESHOLD: f64 = 1e-7;
const MOVE_GAIN_EPS: f64 = 1e-12;

/// Result of Louvain community detection.
#[derive(Debug, Clone)]
pub struct CommunityAssignment {
    /// Community id per node index, compact and deterministic.
    pub communities: Vec<usize>,
    /// Modularity of the returned partition.
    pub modularity: f64,
    /// Modularity of the all-singletons partition, for comparison.
    pub singleton_modularity: f64,
}

impl CommunityAssignment {
    pub fn community_count(&self) -> usize {
        self.communities.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Meta-graph state during aggregation. Adjacency holds each undirected
/// edge in both directions; self-loop entries are stored pre-doubled so
/// degrees and modularity use the usual conventions.
struct MetaGraph {
    adj: Vec<BTreeMap<usize, f64>>,
    /// Sum of all degrees (2m).
    total_weight: f64,
}

impl MetaGraph {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, node: usize) -> f64 {
        self.adj[node].values().sum()
    }

    fn modularity(&self, node_to_comm: &[usize]) -> f64 {
        if self.total_weight == 0.0 {
            return 0.0;
        }
        let m2 = self.total_weight;
        let comm_count = node_to_comm.iter().copied().max().unwrap_or(0) + 1;
        let mut intra = vec![0.0; comm_count];
        let mut total = vec![0.0; comm_count];
        for node in 0..self.node_count() {
            let comm = node_to_comm[node];
            total[comm] += self.degree(node);
            for (&neighbor, &weight) in &self.adj[node] {
                if node_to_comm[neighbor] == comm {
                    intra[comm] += weight;
                }
            }
        }
        (0..comm_count)
            .map(|c| intra[c] / m2 - (total[c] / m2).powi(2))
            .sum()
    }

    fn aggregate(&self, node_to_comm: &[usize]) -> MetaGraph {
        let comm_count = node_to_comm.iter().copied().max().unwrap_or(0) + 1;
        let mut adj = vec![BTreeMap::new(); comm_count];
        for node in 0..self.node_count() {
            let src = node_to_comm[node];
            for (&neighbor, &weight) in &self.adj[node] {
                let dst = node_to_comm[neighbor];
                *adj[src].entry(dst).or_insert(0.0) += weight;
            }
        }
        MetaGraph {
            adj,
            total_weight: self.total_weight,
        }
    }
}

/// One pass of local moving. Returns true if any node changed community.
fn local_moving(graph: &MetaGraph, node_to_comm: &mut [usize], rng: &mut ChaCha8Rng) -> bool {
    let m2 = graph.total_weight;
    let n = graph.node_count();
    let mut comm_degree = vec![0.0; n];
    for node in 0..n {
        comm_degree[node_to_comm[node]] += graph.degree(node);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut moved_any = false;
    let max_passes = 64;
    for _ in 0..max_passes {
        let mut moves = 0usize;
        for &node in &order {
            let current = node_to_comm[node];
            let k = graph.degree(node);
            comm_degree[current] -= k;

            // Weight from this node to each neighboring community,
            // self-loops excluded. BTreeMap keeps tie-breaking deterministic.
            let mut neigh_weights: BTreeMap<usize, f64> = BTreeMap::new();
            for (&neighbor, &weight) in &graph.adj[node] {
                if neighbor != node {
                    *neigh_weights.entry(node_to_comm[neighbor]).or_insert(0.0) += weight;
                }
            }

            let w_current = neigh_weights.get(&current).copied().unwrap_or(0.0);
            let removal_cost = -w_current / m2 + comm_degree[current] * k / (m2 * m2);

            let mut best_comm = current;
            let mut best_gain = 0.0;
            for (&candidate, &w) in &neigh_weights {
                if candidate == current {
                    continue;
                }
                let gain = removal_cost + w / m2 - comm_degree[candidate] * k / (m2 * m2);
                if gain > best_gain + MOVE_GAIN_EPS {
                    best_gain = gain;
                    best_comm = candidate;
                }
            }

            comm_degree[best_comm] += k;
            if best_comm != current {
                node_to_comm[node] = best_comm;
                moves += 1;
                moved_any = true;
            }
        }
        if moves == 0 {
            break;
        }
    }
    moved_any
}

/// Renumber communities compactly in order of first appearance.
fn compact(labels: &mut [usize]) {
    let mut remap = BTreeMap::new();
    for label in labels.iter_mut() {
        let next = remap.len();
        *label = *remap.entry(*label).or_insert(next);
    }
}

/// Detect communities on the undirected projection of `g`.
///
/// The returned partition's modularity is never below the all-singletons
/// modularity (asserted numerically on every run).
pub fn louvain_communities(g: &DiscourseGraph, seed: u64) -> CommunityAssignment {
    let n = g.node_count();
    let adj_maps = g.undirected_adjacency();
    let total_weight: f64 = adj_maps
        .iter()
        .map(|m| m.values().sum::<f64>())
        .sum();

    let meta = MetaGraph {
        adj: adj_maps,
        total_weight,
    };

    if n == 0 || total_weight == 0.0 {
        // Edgeless: every node its own community, modularity 0.
        return CommunityAssignment {
            communities: (0..n).collect(),
            modularity: 0.0,
            singleton_modularity: 0.0,
        };
    }

    let singletons: Vec<usize> = (0..n).collect();
    let singleton_modularity = meta.modularity(&singletons);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = meta;
    let mut current_modularity = singleton_modularity;

    loop {
        let mut node_to_comm: Vec<usize> = (0..level.node_count()).collect();
        let moved = local_moving(&level, &mut node_to_comm, &mut rng);
        if !moved {
            break;
        }
        compact(&mut node_to_comm);
        for slot in membership.iter_mut() {
            *slot = node_to_comm[*slot];
        }
        let next = level.aggregate(&node_to_comm);
        let new_modularity = next.modularity(&(0..next.node_count()).collect::<Vec<_>>());
        let gained = new_modularity - current_modularity;
        current_modularity = new_modularity;
        level = next;
        if gained <= LEVEL_GAIN_THRESHOLD {
            break;
        }
    }

    compact(&mut membership);
    assert!(
        current_modularity >= singleton_modularity - 1e-12,
        "louvain must not decrease modularity ({current_modularity} < {singleton_modularity})"
    );
    CommunityAssignment {
        communities: membership,
        modularity: current_modularity,
        singleton_modularity,
    }
}
