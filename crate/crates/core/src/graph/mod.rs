//! Directed multimodal discourse graphs.
//!
//! Nodes are lexical items and gestures; edges carry word-word transitions
//! within utterances plus windowed gesture-word links, with occurrence
//! counts as weights.

mod louvain;

pub use louvain::{louvain_communities, CommunityAssignment};

use crate::chat::{Item, PosClass, Transcript};
use crate::error::GraphError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Node modality.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Word,
    Gesture,
}

/// Edge type, determined by its endpoint kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "WW")]
    WordWord,
    #[serde(rename = "GW")]
    GestureWord,
    #[serde(rename = "WG")]
    WordGesture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub label: String,
    pub kind: NodeKind,
    /// Gesture nodes carry [`PosClass::Other`].
    pub pos: PosClass,
    /// Occurrences of this label in the transcript.
    pub frequency: u32,
    /// True if any occurrence carried a paraphasia tag.
    pub has_paraphasia: bool,
    /// Community id assigned by Louvain; 0 until assigned.
    pub community: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub weight: u32,
}

/// Directed weighted graph for one participant's discourse.
///
/// Nodes are held in a stable order sorted by `(label, kind)`, so identical
/// transcripts always produce identical serializations. Node identity is the
/// `(label, kind)` pair: a word and a gesture may share a label without
/// colliding.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscourseGraph {
    participant_id: String,
    nodes: Vec<Node>,
    edges: BTreeMap<(usize, usize), Edge>,
}

impl DiscourseGraph {
    pub fn participant_id(&self) -> &str {
        &self.participant_id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Edge)> {
        self.edges.iter().map(|(&(s, d), e)| (s, d, e))
    }

    pub fn node_index(&self, label: &str, kind: NodeKind) -> Option<usize> {
        self.nodes
            .binary_search_by(|n| (n.label.as_str(), n.kind).cmp(&(label, kind)))
            .ok()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.contains_key(&(src, dst))
    }

    /// Total (in + out) degree per node over distinct directed edges.
    pub fn total_degrees(&self) -> Vec<usize> {
        let mut degrees = vec![0usize; self.nodes.len()];
        for (&(src, dst), _) in &self.edges {
            degrees[src] += 1;
            degrees[dst] += 1;
        }
        degrees
    }

    /// Weight-summed undirected projection as adjacency maps.
    pub fn undirected_adjacency(&self) -> Vec<BTreeMap<usize, f64>> {
        let mut adj = vec![BTreeMap::new(); self.nodes.len()];
        for (&(src, dst), edge) in &self.edges {
            let w = f64::from(edge.weight);
            *adj[src].entry(dst).or_insert(0.0) += w;
            *adj[dst].entry(src).or_insert(0.0) += w;
        }
        adj
    }

    /// Undirected neighbor sets (no weights).
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        self.undirected_adjacency()
            .into_iter()
            .map(|m| m.into_keys().collect())
            .collect()
    }

    pub fn apply_communities(&mut self, assignment: &CommunityAssignment) {
        for (node, &community) in self.nodes.iter_mut().zip(&assignment.communities) {
            node.community = community;
        }
    }

    /// Build a graph directly from node and edge lists. Used by tests and
    /// deserialization; validates the edge-kind/endpoint-kind invariant.
    pub fn from_parts(
        participant_id: String,
        nodes: Vec<Node>,
        edge_list: Vec<(usize, usize, Edge)>,
    ) -> Result<Self, GraphError> {
        let mut edges = BTreeMap::new();
        for (src, dst, edge) in edge_list {
            assert!(src != dst, "self-loops are not allowed");
            assert!(src < nodes.len() && dst < nodes.len(), "dangling edge endpoint");
            let expected = edge_kind(nodes[src].kind, nodes[dst].kind);
            assert_eq!(edge.kind, expected, "edge kind inconsistent with endpoints");
            edges.insert((src, dst), edge);
        }
        Ok(DiscourseGraph {
            participant_id,
            nodes,
            edges,
        })
    }
}

fn edge_kind(src: NodeKind, dst: NodeKind) -> EdgeKind {
    match (src, dst) {
        (NodeKind::Word, NodeKind::Word) => EdgeKind::WordWord,
        (NodeKind::Gesture, NodeKind::Word) => EdgeKind::GestureWord,
        (NodeKind::Word, NodeKind::Gesture) => EdgeKind::WordGesture,
        (NodeKind::Gesture, NodeKind::Gesture) => {
            unreachable!("gesture-gesture edges are never constructed")
        }
    }
}

/// Which word wins when a gesture sits equidistant between two words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureTieBreak {
    /// Prefer the word before the gesture (gesture follows speech).
    Preceding,
    Following,
}

/// Graph construction knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Maximum item-position distance for gesture-word links.
    pub gesture_window: usize,
    pub tie_break: GestureTieBreak,
    /// Seed for the Louvain node visiting order.
    pub louvain_seed: u64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            gesture_window: 5,
            tie_break: GestureTieBreak::Preceding,
            louvain_seed: 7,
        }
    }
}

/// Direction of a gesture-word link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    /// The word precedes the gesture: word → gesture (WG).
    WordToGesture,
    /// The word follows the gesture: gesture → word (GW).
    GestureToWord,
}

/// Pair a gesture at `gesture_position` with the nearest word item within
/// `window` item positions on either side. The distance is measured in item
/// positions (words and gestures both count). Equidistant ties go to the
/// side selected by `tie_break`; no word in the window means no link.
pub fn link_gesture(
    items: &[Item],
    gesture_position: usize,
    window: usize,
    tie_break: GestureTieBreak,
) -> Option<(usize, LinkDirection)> {
    let mut best: Option<(usize, usize, LinkDirection)> = None;
    for distance in 1..=window {
        let before = gesture_position
            .checked_sub(distance)
            .filter(|&i| matches!(items.get(i), Some(Item::Word(_))))
            .map(|i| (distance, i, LinkDirection::WordToGesture));
        let after = gesture_position
            .checked_add(distance)
            .filter(|&i| matches!(items.get(i), Some(Item::Word(_))))
            .map(|i| (distance, i, LinkDirection::GestureToWord));
        let candidate = match (before, after) {
            (Some(b), Some(a)) => Some(match tie_break {
                GestureTieBreak::Preceding => b,
                GestureTieBreak::Following => a,
            }),
            (Some(b), None) => Some(b),
            (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        if let Some(c) = candidate {
            best = Some(c);
            break;
        }
    }
    best.map(|(_, index, direction)| (index, direction))
}

struct NodeStats {
    frequency: u32,
    pos_counts: [u32; 3],
    has_paraphasia: bool,
}

fn pos_slot(pos: PosClass) -> usize {
    match pos {
        PosClass::Noun => 0,
        PosClass::Verb => 1,
        PosClass::Other => 2,
    }
}

/// Convert a transcript into a [`DiscourseGraph`] (without communities; run
/// [`louvain_communities`] and [`DiscourseGraph::apply_communities`] after,
/// or use [`build_graph_with_communities`]).
///
/// Word-word edges connect consecutive word tokens of an utterance (gesture
/// items do not break adjacency); immediate repetitions of the same surface
/// are skipped so the graph stays loop-free. Edges never cross utterance
/// boundaries.
pub fn build_graph(t: &Transcript, config: &GraphConfig) -> Result<DiscourseGraph, GraphError> {
    if t.item_count() == 0 {
        return Err(GraphError::EmptyTranscript {
            participant_id: t.participant_id.clone(),
        });
    }

    // First pass: node statistics keyed by (label, kind).
    let mut stats: BTreeMap<(String, NodeKind), NodeStats> = BTreeMap::new();
    for utterance in &t.utterances {
        for item in &utterance.items {
            let (key, pos, para) = match item {
                Item::Word(w) => (
                    (w.surface.clone(), NodeKind::Word),
                    w.pos,
                    w.paraphasia != crate::chat::ParaphasiaClass::None,
                ),
                Item::Gesture(g) => ((g.label.clone(), NodeKind::Gesture), PosClass::Other, false),
            };
            let entry = stats.entry(key).or_insert(NodeStats {
                frequency: 0,
                pos_counts: [0; 3],
                has_paraphasia: false,
            });
            entry.frequency += 1;
            entry.pos_counts[pos_slot(pos)] += 1;
            entry.has_paraphasia |= para;
        }
    }

    let mut nodes = Vec::with_capacity(stats.len());
    let mut index = BTreeMap::new();
    for ((label, kind), s) in stats {
        // Majority POS across occurrences; ties prefer noun, then verb.
        let pos = match kind {
            NodeKind::Gesture => PosClass::Other,
            NodeKind::Word => {
                let max = *s.pos_counts.iter().max().unwrap();
                if s.pos_counts[0] == max {
                    PosClass::Noun
                } else if s.pos_counts[1] == max {
                    PosClass::Verb
                } else {
                    PosClass::Other
                }
            }
        };
        index.insert((label.clone(), kind), nodes.len());
        nodes.push(Node {
            label,
            kind,
            pos,
            frequency: s.frequency,
            has_paraphasia: s.has_paraphasia,
            community: 0,
        });
    }

    // Second pass: edges.
    let mut edges: BTreeMap<(usize, usize), Edge> = BTreeMap::new();
    let mut bump = |src: usize, dst: usize, kind: EdgeKind| {
        edges
            .entry((src, dst))
            .and_modify(|e| e.weight += 1)
            .or_insert(Edge { kind, weight: 1 });
    };

    for utterance in &t.utterances {
        let word_indices: Vec<usize> = utterance
            .items
            .iter()
            .filter_map(Item::as_word)
            .map(|w| index[&(w.surface.clone(), NodeKind::Word)])
            .collect();
        for pair in word_indices.windows(2) {
            if pair[0] != pair[1] {
                bump(pair[0], pair[1], EdgeKind::WordWord);
            }
        }
        for (position, item) in utterance.items.iter().enumerate() {
            let Item::Gesture(g) = item else { continue };
            let gesture_idx = index[&(g.label.clone(), NodeKind::Gesture)];
            if let Some((word_position, direction)) =
                link_gesture(&utterance.items, position, config.gesture_window, config.tie_break)
            {
                let word = utterance.items[word_position].as_word().unwrap();
                let word_idx = index[&(word.surface.clone(), NodeKind::Word)];
                match direction {
                    LinkDirection::WordToGesture => {
                        bump(word_idx, gesture_idx, EdgeKind::WordGesture)
                    }
                    LinkDirection::GestureToWord => {
                        bump(gesture_idx, word_idx, EdgeKind::GestureWord)
                    }
                }
            }
        }
    }

    Ok(DiscourseGraph {
        participant_id: t.participant_id.clone(),
        nodes,
        edges,
    })
}

/// [`build_graph`] followed by Louvain community assignment.
pub fn build_graph_with_communities(
    t: &Transcript,
    config: &GraphConfig,
) -> Result<(DiscourseGraph, CommunityAssignment), GraphError> {
    let mut graph = build_graph(t, config)?;
    let assignment = louvain_communities(&graph, config.louvain_seed);
    graph.apply_communities(&assignment);
    Ok((graph, assignment))
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeJson {
    src: String,
    dst: String,
    kind: EdgeKind,
    weight: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphJson {
    participant_id: String,
    nodes: Vec<Node>,
    edges: Vec<EdgeJson>,
}

impl DiscourseGraph {
    pub fn to_json(&self) -> String {
        let edges = self
            .edges
            .iter()
            .map(|(&(src, dst), e)| EdgeJson {
                src: self.nodes[src].label.clone(),
                dst: self.nodes[dst].label.clone(),
                kind: e.kind,
                weight: e.weight,
            })
            .collect();
        let json = GraphJson {
            participant_id: self.participant_id.clone(),
            nodes: self.nodes.clone(),
            edges,
        };
        serde_json::to_string_pretty(&json).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let json: GraphJson = serde_json::from_str(text)?;
        let mut graph = DiscourseGraph {
            participant_id: json.participant_id,
            nodes: json.nodes,
            edges: BTreeMap::new(),
        };
        graph
            .nodes
            .sort_by(|a, b| (&a.label, a.kind).cmp(&(&b.label, b.kind)));
        for e in json.edges {
            // Endpoint kinds are implied by the edge kind.
            let (src_kind, dst_kind) = match e.kind {
                EdgeKind::WordWord => (NodeKind::Word, NodeKind::Word),
                EdgeKind::GestureWord => (NodeKind::Gesture, NodeKind::Word),
                EdgeKind::WordGesture => (NodeKind::Word, NodeKind::Gesture),
            };
            let src = graph.node_index(&e.src, src_kind);
            let dst = graph.node_index(&e.dst, dst_kind);
            if let (Some(src), Some(dst)) = (src, dst) {
                graph.edges.insert(
                    (src, dst),
                    Edge {
                        kind: e.kind,
                        weight: e.weight,
                    },
                );
            }
        }
        Ok(graph)
    }

    /// DOT export for visual inspection. Nodes are colored by class:
    /// gestures orange, nouns green, verbs purple, other POS light blue.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph discourse {\n  rankdir=LR;\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let color = match (node.kind, node.pos) {
                (NodeKind::Gesture, _) => "orange",
                (NodeKind::Word, PosClass::Noun) => "palegreen",
                (NodeKind::Word, PosClass::Verb) => "plum",
                (NodeKind::Word, PosClass::Other) => "lightblue",
            };
            out.push_str(&format!(
                "  n{i} [label=\"{} ({})\" style=filled fillcolor={color}];\n",
                node.label.replace('"', "'"),
                node.frequency
            ));
        }
        for (&(src, dst), edge) in &self.edges {
            out.push_str(&format!(
                "  n{src} -> n{dst} [label=\"{}\" penwidth={}];\n",
                edge.weight,
                1 + edge.weight.min(4)
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::parse_transcript;

    fn transcript(raw: &str) -> Transcript {
        parse_transcript(raw, "PAR").unwrap().transcript
    }

    fn graph(raw: &str) -> DiscourseGraph {
        build_graph(&transcript(raw), &GraphConfig::default()).unwrap()
    }

    fn edge_weight(g: &DiscourseGraph, src: &str, dst: &str) -> Option<u32> {
        let (sk, dk) = (
            g.node_index(src, NodeKind::Word)
                .map(|_| NodeKind::Word)
                .unwrap_or(NodeKind::Gesture),
            g.node_index(dst, NodeKind::Word)
                .map(|_| NodeKind::Word)
                .unwrap_or(NodeKind::Gesture),
        );
        let s = g.node_index(src, sk)?;
        let d = g.node_index(dst, dk)?;
        g.edges().find(|(a, b, _)| (*a, *b) == (s, d)).map(|(_, _, e)| e.weight)
    }

    #[test]
    fn consecutive_pairs_become_edges() {
        let g = graph("*PAR:\tthe boy runs .\n");
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(edge_weight(&g, "the", "boy"), Some(1));
        assert_eq!(edge_weight(&g, "boy", "runs"), Some(1));
    }

    #[test]
    fn repeated_pairs_accumulate_weight() {
        let g = graph("*PAR:\tthe boy the boy .\n");
        assert_eq!(edge_weight(&g, "the", "boy"), Some(2));
        assert_eq!(edge_weight(&g, "boy", "the"), Some(1));
    }

    #[test]
    fn no_cross_utterance_edges() {
        let g = graph("*PAR:\ta b .\n*PAR:\tc d .\n");
        assert_eq!(g.edge_count(), 2);
        assert_eq!(edge_weight(&g, "b", "c"), None);
    }

    #[test]
    fn immediate_repetition_skipped_no_self_loops() {
        let g = graph("*PAR:\tno no no way .\n");
        assert!(g.edges().all(|(s, d, _)| s != d));
        assert_eq!(edge_weight(&g, "no", "way"), Some(1));
        let no = g.node_index("no", NodeKind::Word).unwrap();
        assert_eq!(g.nodes()[no].frequency, 3);
    }

    #[test]
    fn empty_transcript_errors() {
        let t = transcript("*PAR:\t.\n");
        assert!(matches!(
            build_graph(&t, &GraphConfig::default()),
            Err(GraphError::EmptyTranscript { .. })
        ));
    }

    #[test]
    fn gesture_tie_goes_to_preceding_word() {
        // [w1, G, w2]: equidistant, so the link is w1 → G (WG).
        let g = graph("*PAR:\tcat &=points dog .\n");
        let cat = g.node_index("cat", NodeKind::Word).unwrap();
        let points = g.node_index("points", NodeKind::Gesture).unwrap();
        assert!(g.has_edge(cat, points));
        let dog = g.node_index("dog", NodeKind::Word).unwrap();
        assert!(!g.has_edge(points, dog));
        let (_, _, e) = g.edges().find(|(s, d, _)| (*s, *d) == (cat, points)).unwrap();
        assert_eq!(e.kind, EdgeKind::WordGesture);
    }

    #[test]
    fn gesture_before_word_links_forward() {
        let g = graph("*PAR:\t&=waves hello .\n");
        let waves = g.node_index("waves", NodeKind::Gesture).unwrap();
        let hello = g.node_index("hello", NodeKind::Word).unwrap();
        let (_, _, e) = g.edges().find(|(s, d, _)| (*s, *d) == (waves, hello)).unwrap();
        assert_eq!(e.kind, EdgeKind::GestureWord);
    }

    #[test]
    fn gesture_outside_window_unlinked() {
        use crate::chat::{GestureEvent, WordToken, ParaphasiaClass};
        // Six fillers of distance between the gesture and the only word.
        let mut items: Vec<Item> = vec![Item::Gesture(GestureEvent {
            label: "shrug".into(),
            position: 0,
        })];
        for i in 0..5 {
            items.push(Item::Gesture(GestureEvent {
                label: format!("g{i}"),
                position: i + 1,
            }));
        }
        items.push(Item::Word(WordToken {
            surface: "far".into(),
            pos: PosClass::Other,
            paraphasia: ParaphasiaClass::None,
        }));
        assert_eq!(
            link_gesture(&items, 0, 5, GestureTieBreak::Preceding),
            None
        );
        assert!(link_gesture(&items, 0, 6, GestureTieBreak::Preceding).is_some());
    }

    #[test]
    fn gesture_alone_unlinked() {
        let g = graph("*PAR:\t&=laughs .\n");
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn words_skip_interleaved_gestures_for_ww() {
        let g = graph("*PAR:\tboy &=points runs .\n");
        assert_eq!(edge_weight(&g, "boy", "runs"), Some(1));
    }

    #[test]
    fn ww_weight_conservation() {
        let t = transcript("*PAR:\tthe boy the boy runs .\n*PAR:\tthe dog no no runs .\n");
        let g = build_graph(&t, &GraphConfig::default()).unwrap();
        let mut expected = 0u32;
        for u in &t.utterances {
            let words: Vec<&str> = u.words().map(|w| w.surface.as_str()).collect();
            expected += words.windows(2).filter(|p| p[0] != p[1]).count() as u32;
        }
        let total: u32 = g
            .edges()
            .filter(|(_, _, e)| e.kind == EdgeKind::WordWord)
            .map(|(_, _, e)| e.weight)
            .sum();
        assert_eq!(total, expected);
        // Word node frequencies sum to token_count.
        let word_freq: u32 = g
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::Word)
            .map(|n| n.frequency)
            .sum();
        assert_eq!(word_freq as usize, t.token_count);
    }

    #[test]
    fn construction_is_deterministic() {
        let raw = "*PAR:\tthe boy &=points runs fast .\n*PAR:\tthe dog barks &=waves .\n";
        let g1 = graph(raw);
        let g2 = graph(raw);
        assert_eq!(g1.to_json(), g2.to_json());
    }

    #[test]
    fn json_roundtrip() {
        let g = graph("*PAR:\tthe boy &=points runs .\n*PAR:\tthe boy walks .\n");
        let restored = DiscourseGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, restored);
    }

    #[test]
    fn word_and_gesture_share_label_without_collision() {
        let g = graph("*PAR:\tshe laughs &=laughs often .\n");
        assert!(g.node_index("laughs", NodeKind::Word).is_some());
        assert!(g.node_index("laughs", NodeKind::Gesture).is_some());
        assert_eq!(g.node_count(), 4);
    }
}
