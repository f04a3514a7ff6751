use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Randomized decision forest settings. Defaults: 100 Gini trees on
/// bootstrap resamples, `ceil(sqrt(k))` candidate features per split,
/// grown until pure or fewer than two samples remain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(k))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { counts: Vec<usize> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn leaf(&self, x: &[f64]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the reached leaf, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_first(self.leaf(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    n_classes: usize,
    n_features: usize,
}

impl ForestModel {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Per-class tally of tree predictions.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "feature vector has length {}, forest expects {}",
                x.len(),
                self.n_features
            )));
        }
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        Ok(votes)
    }
}

struct Grower<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    max_features: usize,
    min_samples_split: usize,
    max_depth: Option<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &s in samples {
            c[self.labels[s]] += 1;
        }
        c
    }

    /// `n * gini` summed over both sides; lower is better.
    fn best_split(&self, samples: &[usize], rng: &mut Rng) -> Option<BestSplit> {
        let n_features = self.features[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        rng.shuffle(&mut order);
        let total = self.counts(samples);
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
        for &f in &order {
            if visited >= self.max_features {
                break;
            }
            sorted.clear();
            sorted.extend(samples.iter().map(|&s| (self.features[s][f], self.labels[s])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            visited += 1;
            let mut left = vec![0usize; self.n_classes];
            let mut right = total.clone();
            let (mut sq_left, mut sq_right) = (0.0f64, total.iter().map(|&c| (c * c) as f64).sum::<f64>());
            let n = sorted.len();
            for i in 0..n - 1 {
                let c = sorted[i].1;
                sq_left += (2 * left[c] + 1) as f64;
                left[c] += 1;
                sq_right -= (2 * right[c] - 1) as f64;
                right[c] -= 1;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = (n - i - 1) as f64;
                let score = (nl - sq_left / nl) + (nr - sq_right / nr);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let (a, b) = (sorted[i].0, sorted[i + 1].0);
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, samples: Vec<usize>, rng: &mut Rng) -> DecisionTree {
        let mut nodes = vec![Node::Leaf { counts: Vec::new() }];
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((slot, samples, depth)) = stack.pop() {
            let counts = self.counts(&samples);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_capped = self.max_depth.is_some_and(|m| depth >= m);
            let split = if pure || samples.len() < self.min_samples_split || depth_capped {
                None
            } else {
                self.best_split(&samples, rng)
            };
            match split {
                None => nodes[slot] = Node::Leaf { counts },
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        samples.iter().partition(|&&i| self.features[i][s.feature] <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { counts: Vec::new() });
                    let right = nodes.len();
                    nodes.push(Node::Leaf { counts: Vec::new() });
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        DecisionTree { nodes }
    }
}

/// Grows `cfg.n_trees` trees, tree `t` drawing from stream `t` of the seed.
pub fn forest_train(features: &[Vec<f64>], labels: &[usize], n_classes: usize, cfg: &ForestConfig) -> Result<ForestModel> {
    if features.is_empty() {
        return Err(Error::Spec("cannot train a forest on zero samples".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Shape(format!("{} feature rows vs {} labels", features.len(), labels.len())));
    }
    let k = features[0].len();
    if k == 0 || features.iter().any(|f| f.len() != k) {
        return Err(Error::Shape("feature rows must share a positive length".into()));
    }
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::Spec(format!("label index outside 0..{n_classes}")));
    }
    if cfg.n_trees == 0 {
        return Err(Error::Spec("forest needs at least one tree".into()));
    }
    let max_features = cfg
        .max_features
        .unwrap_or_else(|| libm::ceil(libm::sqrt(k as f64)) as usize)
        .clamp(1, k);
    let grower = Grower {
        features,
        labels,
        n_classes,
        max_features,
        min_samples_split: cfg.min_samples_split.max(2),
        max_depth: cfg.max_depth,
    };
    let root = Rng::new(cfg.seed);
    let n = features.len();
    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = root.fork(t as u64);
            let samples: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.below(n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(samples, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_classes,
        n_features: k,
    })
}

/// Majority vote over trees, lowest class index on ties.
pub fn forest_predict(model: &ForestModel, x: &[f64]) -> Result<usize> {
    model.votes(x).map(|v| argmax_first(&v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(rng: &mut Rng, per: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (class, center) in [(0usize, [0.0, 0.0]), (1, [10.0, 0.0])] {
            for _ in 0..per {
                xs.push(vec![center[0] + 0.1 * rng.normal(), center[1] + 0.1 * rng.normal()]);
                ys.push(class);
            }
        }
        (xs, ys)
    }

    #[test]
    fn single_class_always_predicted() {
        let xs = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 0.0]];
        let model = forest_train(&xs, &[2, 2, 2], 3, &ForestConfig::default()).unwrap();
        for probe in [[0.0, 0.0], [100.0, -5.0]] {
            assert_eq!(forest_predict(&model, &probe).unwrap(), 2);
        }
    }

    #[test]
    fn separated_blobs_fit_perfectly() {
        let (xs, ys) = blobs(&mut Rng::new(1), 20);
        let model = forest_train(&xs, &ys, 2, &ForestConfig { seed: 4, ..ForestConfig::default() }).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(forest_predict(&model, x).unwrap(), *y);
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let (xs, ys) = blobs(&mut Rng::new(2), 10);
        let cfg = ForestConfig {
            n_trees: 10,
            seed: 77,
            ..ForestConfig::default()
        };
        assert_eq!(forest_train(&xs, &ys, 2, &cfg).unwrap(), forest_train(&xs, &ys, 2, &cfg).unwrap());
    }

    #[test]
    fn vote_tie_goes_to_first_class() {
        let leaf = |c: Vec<usize>| DecisionTree {
            nodes: vec![Node::Leaf { counts: c }],
        };
        let model = ForestModel {
            trees: vec![leaf(vec![0, 3, 0]), leaf(vec![0, 0, 5])],
            n_classes: 3,
            n_features: 1,
        };
        assert_eq!(model.votes(&[0.0]).unwrap(), [0, 1, 1]);
        assert_eq!(forest_predict(&model, &[0.0]).unwrap(), 1);
        assert!(forest_predict(&model, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn one_tree_without_bootstrap_is_that_tree() {
        let (xs, ys) = blobs(&mut Rng::new(3), 8);
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let model = forest_train(&xs, &ys, 2, &cfg).unwrap();
        let mut rng = Rng::new(9);
        for _ in 0..50 {
            let p = [rng.uniform() * 12.0 - 1.0, rng.normal()];
            assert_eq!(forest_predict(&model, &p).unwrap(), model.trees()[0].predict(&p));
        }
    }

    #[test]
    fn leaves_are_nonempty() {
        let (xs, ys) = blobs(&mut Rng::new(5), 15);
        let model = forest_train(&xs, &ys, 2, &ForestConfig { n_trees: 5, ..ForestConfig::default() }).unwrap();
        for t in model.trees() {
            for node in t.nodes() {
                if let Node::Leaf { counts } = node {
                    assert!(counts.iter().sum::<usize>() > 0);
                }
            }
        }
    }

    #[test]
    fn input_errors() {
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(matches!(forest_train(&empty, &[], 2, &ForestConfig::default()), Err(Error::Spec(_))));
        assert!(forest_train(&[vec![1.0]], &[0, 1], 2, &ForestConfig::default()).is_err());
        assert!(forest_train(&[vec![1.0]], &[3], 2, &ForestConfig::default()).is_err());
    }
}
