//! Per-participant graph feature vector and per-node feature matrix.

use crate::chat::{ParaphasiaClass, PosClass, Transcript};
use crate::graph::{DiscourseGraph, EdgeKind, NodeKind};
use serde::{Deserialize, Serialize};

/// Frozen column order of the graph-derived feature vector. Ablation masks
/// index into this order, so it must never be rearranged.
pub const GD_COLUMNS: [&str; 20] = [
    "density",
    "reciprocity",
    "transitivity",
    "gesture_ratio",
    "degree_entropy",
    "ww_avg",
    "ww_max",
    "gw_avg",
    "gw_max",
    "wg_avg",
    "wg_max",
    "noun_count",
    "verb_count",
    "noun_rate",
    "verb_rate",
    "noun_verb_ratio",
    "para_any",
    "para_sem",
    "para_phon",
    "para_neo",
];

/// Schema tag written next to any persisted feature table.
pub const GD_SCHEMA_VERSION: &str = "gd-v1";

/// Column index ranges of the three feature groups.
pub const GRAPH_COLUMN_RANGE: std::ops::Range<usize> = 0..11;
pub const POS_COLUMN_RANGE: std::ops::Range<usize> = 11..16;
pub const PARA_COLUMN_RANGE: std::ops::Range<usize> = 16..20;

/// The 20-value per-participant feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFeatureVector {
    pub density: f64,
    pub reciprocity: f64,
    pub transitivity: f64,
    pub gesture_ratio: f64,
    pub degree_entropy: f64,
    pub ww_avg: f64,
    pub ww_max: f64,
    pub gw_avg: f64,
    pub gw_max: f64,
    pub wg_avg: f64,
    pub wg_max: f64,
    pub noun_count: u32,
    pub verb_count: u32,
    pub noun_rate: f64,
    pub verb_rate: f64,
    pub noun_verb_ratio: f64,
    pub para_any: f64,
    pub para_sem: f64,
    pub para_phon: f64,
    pub para_neo: f64,
}

impl GraphFeatureVector {
    /// Values in [`GD_COLUMNS`] order.
    pub fn to_row(&self) -> [f64; 20] {
        [
            self.density,
            self.reciprocity,
            self.transitivity,
            self.gesture_ratio,
            self.degree_entropy,
            self.ww_avg,
            self.ww_max,
            self.gw_avg,
            self.gw_max,
            self.wg_avg,
            self.wg_max,
            f64::from(self.noun_count),
            f64::from(self.verb_count),
            self.noun_rate,
            self.verb_rate,
            self.noun_verb_ratio,
            self.para_any,
            self.para_sem,
            self.para_phon,
            self.para_neo,
        ]
    }
}

/// Edge density m / n(n-1) over distinct directed edges; 0 when n < 2.
pub fn density(g: &DiscourseGraph) -> f64 {
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    g.edge_count() as f64 / (n * (n - 1)) as f64
}

/// Fraction of directed edges whose reverse also exists; 0 when edgeless.
pub fn reciprocity(g: &DiscourseGraph) -> f64 {
    let m = g.edge_count();
    if m == 0 {
        return 0.0;
    }
    let mutual = g.edges().filter(|(src, dst, _)| g.has_edge(*dst, *src)).count();
    mutual as f64 / m as f64
}

/// Transitivity (global clustering) of the undirected projection:
/// 3 x closed triangles over connected triples; 0 when no triple exists.
pub fn transitivity(g: &DiscourseGraph) -> f64 {
    let neighbors = g.undirected_neighbors();
    let mut closed = 0usize;
    let mut triples = 0usize;
    for center in 0..neighbors.len() {
        let adjacent = &neighbors[center];
        let d = adjacent.len();
        triples += d * d.saturating_sub(1) / 2;
        for i in 0..d {
            for j in (i + 1)..d {
                if neighbors[adjacent[i]].binary_search(&adjacent[j]).is_ok() {
                    closed += 1;
                }
            }
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

/// Gesture nodes over all nodes; 0 for an empty graph.
pub fn gesture_ratio(g: &DiscourseGraph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let gestures = g
        .nodes()
        .iter()
        .filter(|node| node.kind == NodeKind::Gesture)
        .count();
    gestures as f64 / n as f64
}

/// Shannon entropy (natural log) of the normalized total-degree
/// distribution. Degree is in + out over distinct directed edges,
/// unweighted. Zero-degree nodes contribute nothing; 0 when the degree sum
/// is 0.
pub fn degree_entropy(g: &DiscourseGraph) -> f64 {
    let degrees = g.total_degrees();
    let total: usize = degrees.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    -degrees
        .iter()
        .filter(|&&d| d > 0)
        .map(|&d| {
            let p = d as f64 / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Mean and max edge weight per edge type; (0, 0) for absent types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeightStats {
    pub ww_avg: f64,
    pub ww_max: f64,
    pub gw_avg: f64,
    pub gw_max: f64,
    pub wg_avg: f64,
    pub wg_max: f64,
}

pub fn edge_weight_stats(g: &DiscourseGraph) -> EdgeWeightStats {
    let mut sums = [0.0f64; 3];
    let mut maxes = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for (_, _, edge) in g.edges() {
        let slot = match edge.kind {
            EdgeKind::WordWord => 0,
            EdgeKind::GestureWord => 1,
            EdgeKind::WordGesture => 2,
        };
        let w = f64::from(edge.weight);
        sums[slot] += w;
        maxes[slot] = maxes[slot].max(w);
        counts[slot] += 1;
    }
    let avg = |slot: usize| {
        if counts[slot] == 0 {
            0.0
        } else {
            sums[slot] / counts[slot] as f64
        }
    };
    EdgeWeightStats {
        ww_avg: avg(0),
        ww_max: maxes[0],
        gw_avg: avg(1),
        gw_max: maxes[1],
        wg_avg: avg(2),
        wg_max: maxes[2],
    }
}

/// POS counts and rates over word token occurrences (not node types).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosFeatures {
    pub noun_count: u32,
    pub verb_count: u32,
    pub noun_rate: f64,
    pub verb_rate: f64,
    /// noun_count / max(verb_count, 1).
    pub noun_verb_ratio: f64,
}

pub fn pos_features(t: &Transcript) -> PosFeatures {
    let mut noun = 0u32;
    let mut verb = 0u32;
    for word in t.words() {
        match word.pos {
            PosClass::Noun => noun += 1,
            PosClass::Verb => verb += 1,
            PosClass::Other => {}
        }
    }
    let tokens = t.token_count as f64;
    let rate = |count: u32| if t.token_count == 0 { 0.0 } else { f64::from(count) / tokens };
    PosFeatures {
        noun_count: noun,
        verb_count: verb,
        noun_rate: rate(noun),
        verb_rate: rate(verb),
        noun_verb_ratio: f64::from(noun) / f64::from(verb.max(1)),
    }
}

/// Tagged-token proportions per paraphasia class; all 0 when token_count = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParaphasiaRates {
    pub para_any: f64,
    pub para_sem: f64,
    pub para_phon: f64,
    pub para_neo: f64,
}

pub fn paraphasia_rates(t: &Transcript) -> ParaphasiaRates {
    if t.token_count == 0 {
        return ParaphasiaRates {
            para_any: 0.0,
            para_sem: 0.0,
            para_phon: 0.0,
            para_neo: 0.0,
        };
    }
    let mut sem = 0usize;
    let mut phon = 0usize;
    let mut neo = 0usize;
    for word in t.words() {
        match word.paraphasia {
            ParaphasiaClass::Semantic => sem += 1,
            ParaphasiaClass::Phonemic => phon += 1,
            ParaphasiaClass::Neologistic => neo += 1,
            ParaphasiaClass::None => {}
        }
    }
    let tokens = t.token_count as f64;
    ParaphasiaRates {
        para_any: (sem + phon + neo) as f64 / tokens,
        para_sem: sem as f64 / tokens,
        para_phon: phon as f64 / tokens,
        para_neo: neo as f64 / tokens,
    }
}

/// Compose the full 20-value feature vector for a graph built from `t`.
pub fn graph_feature_vector(g: &DiscourseGraph, t: &Transcript) -> GraphFeatureVector {
    let weights = edge_weight_stats(g);
    let pos = pos_features(t);
    let para = paraphasia_rates(t);
    GraphFeatureVector {
        density: density(g),
        reciprocity: reciprocity(g),
        transitivity: transitivity(g),
        gesture_ratio: gesture_ratio(g),
        degree_entropy: degree_entropy(g),
        ww_avg: weights.ww_avg,
        ww_max: weights.ww_max,
        gw_avg: weights.gw_avg,
        gw_max: weights.gw_max,
        wg_avg: weights.wg_avg,
        wg_max: weights.wg_max,
        noun_count: pos.noun_count,
        verb_count: pos.verb_count,
        noun_rate: pos.noun_rate,
        verb_rate: pos.verb_rate,
        noun_verb_ratio: pos.noun_verb_ratio,
        para_any: para.para_any,
        para_sem: para.para_sem,
        para_phon: para.para_phon,
        para_neo: para.para_neo,
    }
}

/// Feature dimension with the paraphasia indicator included.
pub const NODE_FEATURE_DIM: usize = 7;

/// Per-node feature rows in the graph's stable node order.
///
/// Columns: `[log(1+freq), is_gesture, is_word, is_verb, is_noun,
/// is_other_pos, has_paraphasia]`. The trailing paraphasia indicator can be
/// disabled, shrinking rows to six columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub dim: usize,
}

pub fn node_feature_matrix(g: &DiscourseGraph, include_paraphasia: bool) -> NodeFeatureMatrix {
    let dim = if include_paraphasia { 7 } else { 6 };
    let rows = g
        .nodes()
        .iter()
        .map(|node| {
            let mut row = Vec::with_capacity(dim);
            row.push((1.0 + f64::from(node.frequency)).ln());
            let is_gesture = node.kind == NodeKind::Gesture;
            row.push(if is_gesture { 1.0 } else { 0.0 });
            row.push(if is_gesture { 0.0 } else { 1.0 });
            row.push(if node.pos == PosClass::Verb { 1.0 } else { 0.0 });
            row.push(if node.pos == PosClass::Noun { 1.0 } else { 0.0 });
            row.push(if node.pos == PosClass::Other { 1.0 } else { 0.0 });
            if include_paraphasia {
                row.push(if node.has_paraphasia { 1.0 } else { 0.0 });
            }
            row
        })
        .collect();
    NodeFeatureMatrix { rows, dim }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::parse_transcript;
    use crate::graph::{build_graph, DiscourseGraph, Edge, GraphConfig, Node};
    use approx::assert_relative_eq;

    fn word_node(label: &str) -> Node {
        Node {
            label: label.to_string(),
            kind: NodeKind::Word,
            pos: PosClass::Other,
            frequency: 1,
            has_paraphasia: false,
            community: 0,
        }
    }

    fn directed(n: usize, edges: &[(usize, usize)]) -> DiscourseGraph {
        let nodes = (0..n).map(|i| word_node(&format!("w{i:02}"))).collect();
        let list = edges
            .iter()
            .map(|&(s, d)| {
                (
                    s,
                    d,
                    Edge {
                        kind: EdgeKind::WordWord,
                        weight: 1,
                    },
                )
            })
            .collect();
        DiscourseGraph::from_parts("t".into(), nodes, list).unwrap()
    }

    fn parse(raw: &str) -> crate::chat::Transcript {
        parse_transcript(raw, "PAR").unwrap().transcript
    }

    #[test]
    fn density_examples() {
        assert_relative_eq!(density(&directed(3, &[(0, 1), (1, 2)])), 2.0 / 6.0);
        assert_relative_eq!(density(&directed(2, &[(0, 1), (1, 0)])), 1.0);
        assert_eq!(density(&directed(1, &[])), 0.0);
    }

    #[test]
    fn reciprocity_examples() {
        assert_relative_eq!(reciprocity(&directed(2, &[(0, 1), (1, 0)])), 1.0);
        assert_relative_eq!(reciprocity(&directed(3, &[(0, 1), (1, 2)])), 0.0);
        assert_relative_eq!(
            reciprocity(&directed(3, &[(0, 1), (1, 0), (0, 2)])),
            2.0 / 3.0
        );
        assert_eq!(reciprocity(&directed(2, &[])), 0.0);
    }

    #[test]
    fn transitivity_examples() {
        // Undirected triangle.
        assert_relative_eq!(transitivity(&directed(3, &[(0, 1), (1, 2), (2, 0)])), 1.0);
        // Path a-b-c: one open triple.
        assert_relative_eq!(transitivity(&directed(3, &[(0, 1), (1, 2)])), 0.0);
        // 4-cycle: no triangles.
        assert_relative_eq!(
            transitivity(&directed(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])),
            0.0
        );
    }

    #[test]
    fn degree_entropy_examples() {
        // Complete directed K3: uniform degrees, entropy ln 3.
        let k3 = directed(3, &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
        assert_relative_eq!(degree_entropy(&k3), 3.0f64.ln(), epsilon = 1e-12);
        // Star with center degree 3, three leaves of degree 1.
        let star = directed(4, &[(0, 1), (0, 2), (0, 3)]);
        let expected = -(0.5 * 0.5f64.ln() + 3.0 * (1.0 / 6.0) * (1.0f64 / 6.0).ln());
        assert_relative_eq!(degree_entropy(&star), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 1.2424533248940002, epsilon = 1e-12);
        // Edgeless.
        assert_eq!(degree_entropy(&directed(3, &[])), 0.0);
    }

    #[test]
    fn edge_weight_stats_by_type() {
        let raw = "*PAR:\tthe boy the boy &=points runs .\n";
        let g = build_graph(&parse(raw), &GraphConfig::default()).unwrap();
        let stats = edge_weight_stats(&g);
        // the->boy weight 2; boy->the, boy->runs weight 1.
        assert_relative_eq!(stats.ww_avg, 4.0 / 3.0);
        assert_relative_eq!(stats.ww_max, 2.0);
        // One WG edge (boy -> points, preceding tie-break), no GW.
        assert_relative_eq!(stats.wg_avg, 1.0);
        assert_eq!(stats.gw_avg, 0.0);
        assert_eq!(stats.gw_max, 0.0);
    }

    #[test]
    fn pos_features_counts_tokens_not_nodes() {
        let raw = "*PAR:\tboy runs fast boy .\n%mor:\tn|boy v|run adv|fast n|boy .\n";
        let t = parse(raw);
        let pos = pos_features(&t);
        assert_eq!(pos.noun_count, 2);
        assert_eq!(pos.verb_count, 1);
        assert_relative_eq!(pos.noun_rate, 0.5);
        assert_relative_eq!(pos.verb_rate, 0.25);
        assert_relative_eq!(pos.noun_verb_ratio, 2.0);
    }

    #[test]
    fn noun_verb_ratio_clamps_zero_verbs() {
        let raw = "*PAR:\tboy dog cat .\n%mor:\tn|boy n|dog n|cat .\n";
        let pos = pos_features(&parse(raw));
        assert_eq!(pos.verb_count, 0);
        assert_relative_eq!(pos.noun_verb_ratio, 3.0);
    }

    #[test]
    fn empty_transcript_all_zero() {
        let t = parse("*PAR:\t.\n");
        let pos = pos_features(&t);
        assert_eq!(pos.noun_count, 0);
        assert_eq!(pos.noun_rate, 0.0);
        assert_eq!(pos.noun_verb_ratio, 0.0);
        let para = paraphasia_rates(&t);
        assert_eq!(para.para_any, 0.0);
    }

    #[test]
    fn paraphasia_rates_example() {
        let mut lines = String::from("*PAR:\t");
        lines.push_str("hammer [* s:r] krumplik [* n] w1 w2 w3 w4 w5 w6 w7 w8 .\n");
        let t = parse(&lines);
        assert_eq!(t.token_count, 10);
        let rates = paraphasia_rates(&t);
        assert_relative_eq!(rates.para_sem, 0.1);
        assert_relative_eq!(rates.para_neo, 0.1);
        assert_eq!(rates.para_phon, 0.0);
        assert_relative_eq!(rates.para_any, 0.2);
        assert_relative_eq!(
            rates.para_any,
            rates.para_sem + rates.para_phon + rates.para_neo
        );
    }

    #[test]
    fn vector_matches_individual_operations() {
        let raw = "*PAR:\tthe boy &=points runs .\n%mor:\tdet|the n|boy v|run .\n\
                   *PAR:\tthe dog sink [* p:n] .\n%mor:\tdet|the n|dog n|sink .\n";
        let t = parse(raw);
        let g = build_graph(&t, &GraphConfig::default()).unwrap();
        let v = graph_feature_vector(&g, &t);
        assert_relative_eq!(v.density, density(&g));
        assert_relative_eq!(v.reciprocity, reciprocity(&g));
        assert_relative_eq!(v.transitivity, transitivity(&g));
        assert_relative_eq!(v.gesture_ratio, gesture_ratio(&g));
        assert_relative_eq!(v.degree_entropy, degree_entropy(&g));
        assert_eq!(v.noun_count, 3);
        assert_relative_eq!(v.para_phon, 1.0 / 6.0);
        let row = v.to_row();
        assert_eq!(row.len(), GD_COLUMNS.len());
        assert_relative_eq!(row[0], v.density);
        assert_relative_eq!(row[19], v.para_neo);
    }

    #[test]
    fn two_word_fixture_density_half() {
        let raw = "*PAR:\ta b .\n";
        let t = parse(raw);
        let g = build_graph(&t, &GraphConfig::default()).unwrap();
        let v = graph_feature_vector(&g, &t);
        assert_relative_eq!(v.density, 0.5);
        assert_eq!(v.para_any, 0.0);
    }

    #[test]
    fn node_matrix_encoding() {
        let raw = "*PAR:\tdog dog dog &=points runs [* s] .\n%mor:\tn|dog n|dog n|dog v|run .\n";
        let t = parse(raw);
        let g = build_graph(&t, &GraphConfig::default()).unwrap();
        let m = node_feature_matrix(&g, true);
        assert_eq!(m.dim, NODE_FEATURE_DIM);
        assert_eq!(m.rows.len(), g.node_count());
        let dog = g.node_index("dog", NodeKind::Word).unwrap();
        assert_eq!(
            m.rows[dog],
            vec![4.0f64.ln(), 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]
        );
        let points = g.node_index("points", NodeKind::Gesture).unwrap();
        assert_eq!(
            m.rows[points],
            vec![2.0f64.ln(), 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        );
        let runs = g.node_index("runs", NodeKind::Word).unwrap();
        assert_eq!(
            m.rows[runs],
            vec![2.0f64.ln(), 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]
        );
        // One-hot invariants per row.
        for row in &m.rows {
            assert_eq!(row[1] + row[2], 1.0);
            assert_eq!(row[3] + row[4] + row[5], 1.0);
            assert!(row[0] >= 2.0f64.ln());
        }
        let without = node_feature_matrix(&g, false);
        assert_eq!(without.dim, 6);
        assert!(without.rows.iter().all(|r| r.len() == 6));
    }

    #[test]
    fn utterance_order_does_not_matter() {
        let a = parse("*PAR:\tzebra apple mango .\n*PAR:\tapple zebra .\n");
        let b = parse("*PAR:\tapple zebra .\n*PAR:\tzebra apple mango .\n");
        let ga = build_graph(&a, &GraphConfig::default()).unwrap();
        let gb = build_graph(&b, &GraphConfig::default()).unwrap();
        assert_eq!(graph_feature_vector(&ga, &a), graph_feature_vector(&gb, &b));
        assert_eq!(node_feature_matrix(&ga, true), node_feature_matrix(&gb, true));
        // Node rows follow the stable sorted-label order.
        let labels: Vec<&str> = ga.nodes().iter().map(|n| n.label.as_str()).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
    }
}
