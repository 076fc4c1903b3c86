//! Binary classification and regression trees grown by exhaustive threshold
//! search. Shared by the random forest and the bagged-tree imputer.
//!
//! A split `(t, s)` sends `x[t] <= s` left and `x[t] > s` right. Candidate
//! thresholds are midpoints between consecutive distinct sorted values.
//! Classification minimises the count-weighted Gini impurity, regression the
//! sum of squared errors. Equal losses keep the lower feature index, then the
//! lower threshold.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    /// Targets are 0/1; leaves hold the positive-class proportion.
    Classify,
    /// Leaves hold the mean response.
    Regress,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.feature] <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        rule: SplitRule,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub mode: TreeMode,
    pub leaf_size: usize,
    pub feature_subset_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    mode: TreeMode,
    n_features: usize,
    nodes: Vec<Node>,
}

/// Count-weighted node loss: `n * gini` for 0/1 targets (`2 n1 n0 / n`), SSE otherwise.
pub fn node_loss(mode: TreeMode, targets: &[f64]) -> f64 {
    let n = targets.len() as f64;
    if targets.is_empty() {
        return 0.0;
    }
    match mode {
        TreeMode::Classify => {
            let n1: f64 = targets.iter().sum();
            2.0 * n1 * (n - n1) / n
        }
        TreeMode::Regress => {
            let mean = targets.iter().sum::<f64>() / n;
            targets.iter().map(|y| (y - mean) * (y - mean)).sum()
        }
    }
}

/// Gini impurity `2 p (1 - p)` of a set of 0/1 targets.
pub fn gini(targets: &[f64]) -> f64 {
    if targets.is_empty() {
        0.0
    } else {
        node_loss(TreeMode::Classify, targets) / targets.len() as f64
    }
}

const TIE_EPS: f64 = 1e-12;

#[inline]
fn strictly_less(a: f64, b: f64) -> bool {
    a < b - TIE_EPS * (1.0 + b.abs())
}

#[derive(Default, Clone, Copy)]
struct Stats {
    n: f64,
    sum: f64,
    sumsq: f64,
}

impl Stats {
    fn push(&mut self, y: f64) {
        self.n += 1.0;
        self.sum += y;
        self.sumsq += y * y;
    }

    fn loss(&self, mode: TreeMode) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        match mode {
            TreeMode::Classify => 2.0 * self.sum * (self.n - self.sum) / self.n,
            TreeMode::Regress => (self.sumsq - self.sum * self.sum / self.n).max(0.0),
        }
    }

    fn minus(&self, other: &Stats) -> Stats {
        Stats {
            n: self.n - other.n,
            sum: self.sum - other.sum,
            sumsq: self.sumsq - other.sumsq,
        }
    }
}

struct Grower<'a, R> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Grower<'_, R> {
    fn leaf(&mut self, count: usize, mean: f64) -> usize {
        // for 0/1 targets the mean is the positive proportion
        self.nodes.push(Node::Leaf { value: mean, count });
        self.nodes.len() - 1
    }

    fn grow(&mut self, idx: Vec<usize>) -> usize {
        let n = idx.len();
        let mean = idx.iter().map(|&i| self.targets[i]).sum::<f64>() / n as f64;
        // regression losses are computed on node-centred targets for stability
        let centred: Vec<f64> = match self.params.mode {
            TreeMode::Classify => idx.iter().map(|&i| self.targets[i]).collect(),
            TreeMode::Regress => idx.iter().map(|&i| self.targets[i] - mean).collect(),
        };
        let first = self.targets[idx[0]];
        let pure = idx.iter().all(|&i| self.targets[i] == first);
        if pure || n <= self.params.leaf_size || n < 2 * self.params.leaf_size {
            return self.leaf(n, mean);
        }

        let mut total = Stats::default();
        for &y in &centred {
            total.push(y);
        }
        let parent_loss = total.loss(self.params.mode);

        let p = self.rows[0].len();
        let mut features = index::sample(self.rng, p, self.params.feature_subset_size).into_vec();
        features.sort_unstable();

        let mut best: Option<(f64, SplitRule)> = None;
        let mut order: Vec<usize> = (0..n).collect();
        for &t in &features {
            order.sort_by(|&a, &b| {
                self.rows[idx[a]][t]
                    .total_cmp(&self.rows[idx[b]][t])
                    .then(a.cmp(&b))
            });
            let mut left = Stats::default();
            for pos in 0..n - 1 {
                left.push(centred[order[pos]]);
                let lo = self.rows[idx[order[pos]]][t];
                let hi = self.rows[idx[order[pos + 1]]][t];
                if lo >= hi {
                    continue;
                }
                let n_left = pos + 1;
                if n_left < self.params.leaf_size || n - n_left < self.params.leaf_size {
                    continue;
                }
                let right = total.minus(&left);
                let loss = left.loss(self.params.mode) + right.loss(self.params.mode);
                if best.as_ref().is_none_or(|(b, _)| strictly_less(loss, *b)) {
                    best = Some((
                        loss,
                        SplitRule {
                            feature: t,
                            threshold: midpoint(lo, hi),
                        },
                    ));
                }
            }
        }

        match best {
            Some((loss, rule)) if strictly_less(loss, parent_loss) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| rule.goes_left(&self.rows[i]));
                let slot = self.nodes.len();
                self.nodes.push(Node::Leaf {
                    value: f64::NAN,
                    count: 0,
                });
                let left = self.grow(l);
                let right = self.grow(r);
                self.nodes[slot] = Node::Split { rule, left, right };
                slot
            }
            _ => self.leaf(n, mean),
        }
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let s = lo + (hi - lo) * 0.5;
    if s >= hi || !s.is_finite() {
        lo
    } else {
        s
    }
}

/// Grow a tree on complete `rows` with one target per row.
pub fn grow_tree<R: Rng>(
    rows: &[Vec<f64>],
    targets: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> Result<DecisionTree> {
    if rows.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if rows.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows but {} targets",
            rows.len(),
            targets.len()
        )));
    }
    let p = rows[0].len();
    if params.feature_subset_size == 0 || params.feature_subset_size > p {
        return Err(Error::InvalidArgument(format!(
            "feature subset size {} outside 1..={p}",
            params.feature_subset_size
        )));
    }
    if params.leaf_size == 0 {
        return Err(Error::InvalidArgument(
            "leaf size must be at least 1".into(),
        ));
    }
    if rows
        .iter()
        .any(|r| r.len() != p || r.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NonFinite(
            "tree rows must be complete, finite and rectangular".into(),
        ));
    }
    if targets.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite("tree targets".into()));
    }
    if params.mode == TreeMode::Classify && targets.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidArgument(
            "classification targets must be 0 or 1".into(),
        ));
    }
    let mut grower = Grower {
        rows,
        targets,
        params,
        rng,
        nodes: Vec::new(),
    };
    let root = grower.grow((0..rows.len()).collect());
    debug_assert_eq!(root, 0);
    Ok(DecisionTree {
        mode: params.mode,
        n_features: p,
        nodes: grower.nodes,
    })
}

impl DecisionTree {
    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root_split(&self) -> Option<SplitRule> {
        match self.nodes[0] {
            Node::Split { rule, .. } => Some(rule),
            Node::Leaf { .. } => None,
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn leaf_for(&self, x: &[f64]) -> (f64, usize) {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { rule, left, right } => {
                    i = if rule.goes_left(x) { *left } else { *right };
                }
                Node::Leaf { value, count } => return (*value, *count),
            }
        }
    }

    /// Positive-class proportion (classification) or mean response (regression).
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.leaf_for(x).0
    }

    /// `[negative, positive]` leaf proportions for a classification tree.
    pub fn predict_proportions(&self, x: &[f64]) -> [f64; 2] {
        let p = self.predict(x);
        [1.0 - p, p]
    }

    /// Leaf argmax for a classification tree; a 50/50 leaf votes positive.
    pub fn vote(&self, x: &[f64]) -> bool {
        self.predict(x) >= 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn full(p: usize, mode: TreeMode, leaf_size: usize) -> TreeParams {
        TreeParams {
            mode,
            leaf_size,
            feature_subset_size: p,
        }
    }

    #[test]
    fn pure_targets_give_single_leaf() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let tree = grow_tree(
            &rows,
            &[1.0; 3],
            full(1, TreeMode::Classify, 1),
            &mut rng::stream(0, &[]),
        )
        .unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.predict(&[100.0]), 1.0);
        assert!(tree.root_split().is_none());
    }

    #[test]
    fn one_dimensional_split_at_midpoint() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let y = [0.0, 0.0, 1.0, 1.0];
        let tree = grow_tree(
            &rows,
            &y,
            full(1, TreeMode::Classify, 1),
            &mut rng::stream(0, &[]),
        )
        .unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(
            tree.root_split(),
            Some(SplitRule {
                feature: 0,
                threshold: 2.5
            })
        );
        // boundary value goes left
        assert_eq!(tree.predict(&[2.5]), 0.0);
        assert_eq!(tree.predict(&[2.5000001]), 1.0);
    }

    #[test]
    fn gini_of_balanced_node() {
        assert_eq!(gini(&[1.0, 1.0, 0.0, 0.0]), 0.5);
        assert_eq!(gini(&[1.0, 1.0]), 0.0);
    }

    #[test]
    fn proportions_sum_to_one() {
        // duplicate x with conflicting labels cannot be split
        let rows = vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]];
        let y = [1.0, 1.0, 1.0, 0.0];
        let tree = grow_tree(
            &rows,
            &y,
            full(1, TreeMode::Classify, 1),
            &mut rng::stream(0, &[]),
        )
        .unwrap();
        let p = tree.predict_proportions(&[1.0]);
        assert_eq!(p, [0.25, 0.75]);
        assert_eq!(p[0] + p[1], 1.0);
        assert!(tree.vote(&[1.0]));
    }

    #[test]
    fn regression_leaf_size_respected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i)]).collect();
        let y: Vec<f64> = (0..20).map(|i| f64::from(i * i)).collect();
        let tree = grow_tree(
            &rows,
            &y,
            full(1, TreeMode::Regress, 5),
            &mut rng::stream(1, &[]),
        )
        .unwrap();
        for node in tree.nodes() {
            if let Node::Leaf { count, .. } = node {
                assert!(*count >= 5);
            }
        }
        assert!(tree.n_leaves() >= 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut r = rng::stream(0, &[]);
        let p = full(1, TreeMode::Classify, 1);
        assert!(grow_tree(&[], &[], p, &mut r).is_err());
        assert!(grow_tree(&[vec![1.0]], &[1.0], full(2, TreeMode::Classify, 1), &mut r).is_err());
        assert!(grow_tree(&[vec![1.0]], &[1.0], full(0, TreeMode::Classify, 1), &mut r).is_err());
        assert!(grow_tree(&[vec![1.0]], &[0.5], p, &mut r).is_err());
        assert!(grow_tree(&[vec![f64::NAN]], &[1.0], p, &mut r).is_err());
    }

    #[test]
    fn same_seed_same_tree() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![f64::from(i % 7), f64::from((i * 13) % 11), f64::from(i % 3)])
            .collect();
        let y: Vec<f64> = (0..30).map(|i| f64::from(u8::from(i % 4 == 0))).collect();
        let params = TreeParams {
            mode: TreeMode::Classify,
            leaf_size: 1,
            feature_subset_size: 1,
        };
        let a = grow_tree(&rows, &y, params, &mut rng::stream(9, &[1])).unwrap();
        let b = grow_tree(&rows, &y, params, &mut rng::stream(9, &[1])).unwrap();
        assert_eq!(a, b);
    }
}
