use crate::embed::NoiseDistribution;
use crate::error::Result;
use crate::graph::Graph;
use crate::par;
use crate::rng::{self, purpose};

/// One training node viewed as a "sentence": the node followed by its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSentence {
    pub node: usize,
    /// Positive labels, ascending.
    pub labels: Vec<usize>,
    /// Ordered `(context, target)` label pairs with distinct members. Empty
    /// for single-label nodes.
    pub label_pairs: Vec<(usize, usize)>,
}

impl NodeSentence {
    pub fn new(node: usize, labels: Vec<usize>) -> Self {
        let label_pairs = labels
            .iter()
            .flat_map(|&a| labels.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .collect();
        Self {
            node,
            labels,
            label_pairs,
        }
    }
}

/// Positive node-label and label-label pairs for every training node.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSets {
    sentences: Vec<NodeSentence>,
}

impl PairSets {
    /// Train-masked nodes in ascending id order.
    pub fn from_graph(g: &Graph) -> Self {
        Self::from_nodes(g, g.train_nodes())
    }

    /// Visits `nodes` in the given order. Unlabeled nodes are skipped.
    pub fn from_nodes(g: &Graph, nodes: impl IntoIterator<Item = usize>) -> Self {
        let sentences = nodes
            .into_iter()
            .map(|i| NodeSentence::new(i, g.node_labels(i)))
            .filter(|s| !s.labels.is_empty())
            .collect();
        Self { sentences }
    }

    pub fn sentences(&self) -> &[NodeSentence] {
        &self.sentences
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Nodes that contribute label-label terms.
    pub fn multi_label_count(&self) -> usize {
        self.sentences
            .iter()
            .filter(|s| !s.label_pairs.is_empty())
            .count()
    }
}

/// Sampled negatives, indexed `[sentence][positive pair][slot]` in the
/// sentence order of the [`PairSets`] they were drawn for.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeDraws(pub Vec<Vec<Vec<usize>>>);

impl NegativeDraws {
    pub fn for_sentence(&self, i: usize) -> &[Vec<usize>] {
        &self.0[i]
    }

    /// Every negative, flattened. Handy for assertions.
    pub fn iter_all(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().flatten().flatten().copied()
    }
}

/// Draws `k` negatives per node-label pair. Each pair reads from its own
/// stream keyed by `(seed, epoch, node id, pair index)`, so the result does
/// not depend on the order sentences are visited in.
pub fn draw_node_label_negatives(
    pairs: &PairSets,
    dist: &NoiseDistribution,
    k: usize,
    seed: u64,
    epoch: u64,
) -> Result<NegativeDraws> {
    let per_node = par::map_collect(pairs.sentences(), |s| {
        s.labels
            .iter()
            .enumerate()
            .map(|(j, &target)| {
                let mut r = rng::keyed(
                    seed,
                    &[purpose::NODE_LABEL, epoch, s.node as u64, j as u64],
                );
                dist.sample_negatives(target, k, &mut r)
            })
            .collect::<Result<Vec<_>>>()
    });
    Ok(NegativeDraws(per_node.into_iter().collect::<Result<_>>()?))
}

/// Draws `k` negatives per ordered label-label pair, excluding the pair's
/// target label.
pub fn draw_label_label_negatives(
    pairs: &PairSets,
    dist: &NoiseDistribution,
    k: usize,
    seed: u64,
    epoch: u64,
) -> Result<NegativeDraws> {
    let per_node = par::map_collect(pairs.sentences(), |s| {
        s.label_pairs
            .iter()
            .enumerate()
            .map(|(p, &(_, target))| {
                let mut r = rng::keyed(
                    seed,
                    &[purpose::LABEL_LABEL, epoch, s.node as u64, p as u64],
                );
                dist.sample_negatives(target, k, &mut r)
            })
            .collect::<Result<Vec<_>>>()
    });
    Ok(NegativeDraws(per_node.into_iter().collect::<Result<_>>()?))
}
