use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `value <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { counts: Vec<u32> },
}

/// Flat CART tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_for(&self, row: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Adds this tree's normalized leaf distribution for `row` into `acc`.
    pub fn accumulate_proba(&self, row: &[f64], acc: &mut [f64]) {
        let counts = self.leaf_for(row);
        let total: u32 = counts.iter().sum();
        let total = total as f64;
        for (a, &c) in acc.iter_mut().zip(counts) {
            *a += c as f64 / total;
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// `1 - sum (c_i / n)^2`.
pub fn gini_impurity(class_counts: &[u32]) -> Result<f64> {
    let n: u64 = class_counts.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return Err(Error::EmptyNode);
    }
    let n = n as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

/// Column-major view of the training data with per-feature value ranks, shared
/// by every tree of a forest.
pub(crate) struct RankedData {
    /// `ranks[f][row]`: index of the row's value in `values[f]`.
    ranks: Vec<Vec<u32>>,
    /// Sorted distinct values per feature.
    values: Vec<Vec<f64>>,
    labels: Vec<u8>,
    n_classes: usize,
}

impl RankedData {
    pub fn new(x: &[Vec<f64>], y: &[usize], n_features: usize, n_classes: usize) -> Result<RankedData> {
        if n_classes > 255 {
            return Err(Error::InvalidConfig("at most 255 classes are supported".into()));
        }
        let mut ranks = Vec::with_capacity(n_features);
        let mut values = Vec::with_capacity(n_features);
        for f in 0..n_features {
            let col: Vec<f64> = x.iter().map(|r| r[f]).collect();
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("non-finite value in feature {f}")));
            }
            let mut uniq = col.clone();
            uniq.sort_by(f64::total_cmp);
            uniq.dedup();
            let r = col
                .iter()
                .map(|v| uniq.binary_search_by(|u| u.total_cmp(v)).expect("value present") as u32)
                .collect();
            ranks.push(r);
            values.push(uniq);
        }
        let labels = y
            .iter()
            .map(|&c| {
                if c < n_classes {
                    Ok(c as u8)
                } else {
                    Err(Error::UnknownClass(c))
                }
            })
            .collect::<Result<_>>()?;
        Ok(RankedData {
            ranks,
            values,
            labels,
            n_classes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.ranks.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub min_samples_split: usize,
    /// Features examined per node before settling for the best found.
    pub max_features: usize,
}

struct BestSplit {
    feature: usize,
    /// Left side takes ranks `<= left_rank`.
    left_rank: u32,
    right_rank: u32,
    score: f64,
}

/// Grows one tree over `sample` (row indices, duplicates allowed).
///
/// Candidate features are drawn in random order. After `max_features`
/// non-constant features the best split so far is taken if it strictly lowers
/// weighted Gini; otherwise drawing continues through the remaining features.
/// A node with no strictly improving split becomes a leaf.
pub(crate) fn grow_tree<R: Rng>(data: &RankedData, mut sample: Vec<u32>, params: TreeParams, rng: &mut R) -> DecisionTree {
    let n_classes = data.n_classes;
    let mut nodes: Vec<Node> = Vec::new();
    let mut keys: Vec<u64> = Vec::with_capacity(sample.len());
    let mut features: Vec<usize> = (0..data.n_features()).collect();
    let mut counts = vec![0u32; n_classes];
    let mut left = vec![0u32; n_classes];

    // (start, end, slot to patch in the parent or usize::MAX for root)
    let mut stack: Vec<(usize, usize, usize, bool)> = vec![(0, sample.len(), usize::MAX, false)];
    while let Some((start, end, parent, is_right)) = stack.pop() {
        let id = nodes.len();
        if parent != usize::MAX {
            if let Node::Split { left, right, .. } = &mut nodes[parent] {
                if is_right {
                    *right = id;
                } else {
                    *left = id;
                }
            }
        }
        let rows = &sample[start..end];
        counts.iter_mut().for_each(|c| *c = 0);
        for &r in rows {
            counts[data.labels[r as usize] as usize] += 1;
        }
        let n = rows.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || n < params.min_samples_split {
            nodes.push(Node::Leaf { counts: counts.clone() });
            continue;
        }

        let parent_sq: u64 = counts.iter().map(|&c| (c as u64) * (c as u64)).sum();
        let mut best: Option<BestSplit> = None;
        let mut examined = 0usize;
        features.shuffle(rng);
        for &f in &features {
            if examined >= params.max_features && best.is_some() {
                break;
            }
            let ranks = &data.ranks[f];
            keys.clear();
            keys.extend(rows.iter().map(|&r| ((ranks[r as usize] as u64) << 8) | data.labels[r as usize] as u64));
            keys.sort_unstable();
            if keys[0] >> 8 == keys[n - 1] >> 8 {
                continue;
            }
            examined += 1;

            left.iter_mut().for_each(|c| *c = 0);
            let (mut left_sq, mut right_sq) = (0u64, parent_sq);
            let mut right_counts = counts.clone();
            for i in 0..n - 1 {
                let label = (keys[i] & 0xff) as usize;
                let (l, r) = (left[label] as u64, right_counts[label] as u64);
                left_sq += 2 * l + 1;
                right_sq -= 2 * r - 1;
                left[label] += 1;
                right_counts[label] -= 1;
                let (rank, next_rank) = ((keys[i] >> 8) as u32, (keys[i + 1] >> 8) as u32);
                if rank == next_rank {
                    continue;
                }
                let (nl, nr) = ((i + 1) as u64, (n - i - 1) as u64);
                // strictly better than the parent: lsq/nl + rsq/nr > psq/n
                let lhs = (left_sq as u128 * nr as u128 + right_sq as u128 * nl as u128) * n as u128;
                let rhs = parent_sq as u128 * nl as u128 * nr as u128;
                if lhs <= rhs {
                    continue;
                }
                let score = left_sq as f64 / nl as f64 + right_sq as f64 / nr as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(BestSplit {
                        feature: f,
                        left_rank: rank,
                        right_rank: next_rank,
                        score,
                    });
                }
            }
        }

        let Some(split) = best else {
            nodes.push(Node::Leaf { counts: counts.clone() });
            continue;
        };
        let vals = &data.values[split.feature];
        let (a, b) = (vals[split.left_rank as usize], vals[split.right_rank as usize]);
        let mid = a + (b - a) / 2.0;
        let threshold = if mid < b { mid } else { a };

        let ranks = &data.ranks[split.feature];
        let node_rows = &mut sample[start..end];
        let mut mid_idx = 0;
        for i in 0..node_rows.len() {
            if ranks[node_rows[i] as usize] <= split.left_rank {
                node_rows.swap(i, mid_idx);
                mid_idx += 1;
            }
        }
        nodes.push(Node::Split {
            feature: split.feature,
            threshold,
            left: usize::MAX,
            right: usize::MAX,
        });
        // right pushed first so the left subtree is numbered first
        stack.push((start + mid_idx, end, id, true));
        stack.push((start, start + mid_idx, id, false));
    }
    DecisionTree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&[5, 0, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[2, 2]).unwrap(), 0.5);
        assert_eq!(gini_impurity(&[3, 1]).unwrap(), 0.375);
        assert!(matches!(gini_impurity(&[0, 0, 0]), Err(Error::EmptyNode)));
    }

    fn grow(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> DecisionTree {
        let data = RankedData::new(x, y, x[0].len(), n_classes).unwrap();
        let sample = (0..x.len() as u32).collect();
        let params = TreeParams { min_samples_split: 2, max_features: x[0].len() };
        grow_tree(&data, sample, params, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn threshold_is_midpoint_of_adjacent_values() {
        let x = vec![vec![1.0], vec![2.0], vec![4.0], vec![8.0]];
        let tree = grow(&x, &[0, 0, 1, 1], 2);
        match &tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 3.0);
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(tree.n_leaves(), 2);
    }

    #[test]
    fn no_reducing_split_makes_leaf() {
        // identical feature values with mixed labels
        let x = vec![vec![1.0], vec![1.0], vec![1.0]];
        let tree = grow(&x, &[0, 1, 1], 2);
        assert_eq!(tree.nodes, vec![Node::Leaf { counts: vec![1, 2] }]);
    }

    #[test]
    fn fits_training_data_exactly_when_separable() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * 7 % 11) as f64]).collect();
        let y: Vec<usize> = (0..50).map(|i| if i < 20 { 0 } else if i < 35 { 1 } else { 2 }).collect();
        let tree = grow(&x, &y, 3);
        for (row, &label) in x.iter().zip(&y) {
            let counts = tree.leaf_for(row);
            assert_eq!(counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0, label);
        }
    }
}
