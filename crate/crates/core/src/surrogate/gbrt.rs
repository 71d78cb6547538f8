use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_BINS: usize = 256;

/// Per-feature bin edges; value `x` falls in bin `#{edges < x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinMapper {
    edges: Vec<Vec<f64>>,
}

impl BinMapper {
    /// Edges from the listed rows: midpoints between distinct values when
    /// there are at most 256 of them, otherwise 255 quantiles.
    pub fn fit(x: &[Vec<f64>], rows: &[usize], n_features: usize) -> Self {
        let edges = (0..n_features)
            .map(|f| {
                let mut v: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                if v.len() <= MAX_BINS {
                    v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
                } else {
                    let mut e: Vec<f64> = (1..MAX_BINS)
                        .map(|k| v[k * v.len() / MAX_BINS])
                        .collect();
                    e.dedup();
                    e
                }
            })
            .collect();
        Self { edges }
    }

    pub fn bin(&self, feature: usize, x: f64) -> u8 {
        self.edges[feature].partition_point(|e| *e < x) as u8
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    /// Upper value bound of `bin`.
    pub fn threshold(&self, feature: usize, bin: u8) -> f64 {
        self.edges[feature][bin as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(f64),
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.predict_with(row, usize::MAX, 0.0)
    }

    /// Prediction with `row[feature]` replaced by `value`.
    pub fn predict_with(&self, row: &[f64], feature: usize, value: f64) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature: f,
                    threshold,
                    left,
                    right,
                } => {
                    let x = if *f == feature { value } else { row[*f] };
                    k = if x <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn uses_feature(&self, feature: usize) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Split { feature: f, .. } if *f == feature))
    }
}

/// Binned training columns.
struct Binned<'a> {
    mapper: &'a BinMapper,
    /// `cols[f][i]`: bin of training row `i`.
    cols: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    bin: u8,
}

struct Leaf {
    node: usize,
    rows: Vec<u32>,
    sum: f64,
    hist: Vec<(f64, u32)>,
    best: Option<Candidate>,
}

fn histogram(b: &Binned, rows: &[u32], r: &[f64]) -> Vec<(f64, u32)> {
    let mut hist = vec![(0.0, 0u32); b.cols.len() * MAX_BINS];
    for (f, col) in b.cols.iter().enumerate() {
        let h = &mut hist[f * MAX_BINS..(f + 1) * MAX_BINS];
        for &i in rows {
            let cell = &mut h[col[i as usize] as usize];
            cell.0 += r[i as usize];
            cell.1 += 1;
        }
    }
    hist
}

fn best_split(b: &Binned, hist: &[(f64, u32)], sum: f64, count: u32, min_leaf: u32) -> Option<Candidate> {
    let parent = sum * sum / count as f64;
    let mut best: Option<Candidate> = None;
    for f in 0..b.cols.len() {
        let h = &hist[f * MAX_BINS..(f + 1) * MAX_BINS];
        let (mut sl, mut nl) = (0.0, 0u32);
        for (bin, &(hs, hn)) in h.iter().enumerate().take(b.mapper.n_bins(f).saturating_sub(1)) {
            sl += hs;
            nl += hn;
            let nr = count - nl;
            if nl < min_leaf {
                continue;
            }
            if nr < min_leaf {
                break;
            }
            let sr = sum - sl;
            let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent;
            if gain > best.map_or(0.0, |c| c.gain) {
                best = Some(Candidate {
                    gain,
                    feature: f,
                    bin: bin as u8,
                });
            }
        }
    }
    best
}

/// Grows one best-first tree on residuals `r` of `rows` (indices into the
/// binned training set). Returns the tree and the leaf value of each row.
fn grow_tree(
    b: &Binned,
    r: &[f64],
    max_leaves: usize,
    min_leaf: u32,
    shrinkage: f64,
) -> (Tree, Vec<f64>) {
    let n = r.len();
    let all: Vec<u32> = (0..n as u32).collect();
    let sum: f64 = r.iter().sum();
    let hist = histogram(b, &all, r);
    let best = best_split(b, &hist, sum, n as u32, min_leaf);
    let mut nodes = vec![Node::Leaf(0.0)];
    let mut leaves = vec![Leaf {
        node: 0,
        rows: all,
        sum,
        hist,
        best,
    }];
    while leaves.len() < max_leaves {
        let mut pick: Option<usize> = None;
        for (k, l) in leaves.iter().enumerate() {
            if let Some(c) = l.best {
                if pick.is_none_or(|p| c.gain > leaves[p].best.unwrap().gain) {
                    pick = Some(k);
                }
            }
        }
        let Some(k) = pick else { break };
        let parent = leaves.swap_remove(k);
        let c = parent.best.unwrap();
        let col = &b.cols[c.feature];
        let (lrows, rrows): (Vec<u32>, Vec<u32>) =
            parent.rows.iter().partition(|&&i| col[i as usize] <= c.bin);
        let lsum: f64 = lrows.iter().map(|&i| r[i as usize]).sum();
        let rsum = parent.sum - lsum;
        let (small, large_is_left) = if lrows.len() <= rrows.len() {
            (&lrows, false)
        } else {
            (&rrows, true)
        };
        let small_hist = histogram(b, small, r);
        let mut large_hist = parent.hist;
        for (a, s) in large_hist.iter_mut().zip(&small_hist) {
            a.0 -= s.0;
            a.1 -= s.1;
        }
        let (lhist, rhist) = if large_is_left {
            (large_hist, small_hist)
        } else {
            (small_hist, large_hist)
        };
        let li = nodes.len();
        nodes.push(Node::Leaf(0.0));
        nodes.push(Node::Leaf(0.0));
        nodes[parent.node] = Node::Split {
            feature: c.feature,
            threshold: b.mapper.threshold(c.feature, c.bin),
            left: li,
            right: li + 1,
        };
        for (node, rows, s, hist) in [(li, lrows, lsum, lhist), (li + 1, rrows, rsum, rhist)] {
            let best = best_split(b, &hist, s, rows.len() as u32, min_leaf);
            leaves.push(Leaf {
                node,
                rows,
                sum: s,
                hist,
                best,
            });
        }
    }
    let mut fitted = vec![0.0; n];
    for l in &leaves {
        let v = shrinkage * l.sum / l.rows.len() as f64;
        nodes[l.node] = Node::Leaf(v);
        for &i in &l.rows {
            fitted[i as usize] = v;
        }
    }
    (Tree { nodes }, fitted)
}

/// Boosting settings for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostParams {
    pub max_leaves: usize,
    pub n_trees_max: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub min_samples_leaf: usize,
}

/// Squared-error gradient-boosted trees.
#[derive(Debug, Clone, PartialEq)]
pub struct GbrtModel {
    pub init: f64,
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Validation MSE after 0, 1, 2, ... trees, up to the stopping round.
    pub val_history: Vec<f64>,
}

impl GbrtModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    /// Validation MSE of the kept trees.
    pub fn val_mse(&self) -> f64 {
        self.val_history[self.trees.len()]
    }

    /// Running minimum of the validation history.
    pub fn best_sequence(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.val_history
            .iter()
            .map(|v| {
                best = best.min(*v);
                best
            })
            .collect()
    }
}

fn mse(y: &[f64], pred: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    for (a, p) in y.iter().zip(pred) {
        s += (a - p) * (a - p);
    }
    s / y.len() as f64
}

/// Fits on `train` rows, early-stopping on `valid` rows. The kept model is
/// the prefix with the lowest validation MSE.
pub fn fit_boosted(
    x: &[Vec<f64>],
    y: &[f64],
    train: &[usize],
    valid: &[usize],
    p: &BoostParams,
) -> Result<GbrtModel> {
    if p.max_leaves < 2 {
        return Err(Error::config("max_leaves must be at least 2"));
    }
    if train.is_empty() || valid.is_empty() {
        return Err(Error::data("training and validation sets must be non-empty"));
    }
    let n_features = x[train[0]].len();
    if x.iter().any(|r| r.len() != n_features || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::data("feature rows must be finite and of equal length"));
    }
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let y_valid: Vec<f64> = valid.iter().map(|&i| y[i]).collect();
    let init = y_train.iter().sum::<f64>() / y_train.len() as f64;

    let mapper = BinMapper::fit(x, train, n_features);
    let binned = Binned {
        mapper: &mapper,
        cols: (0..n_features)
            .map(|f| train.iter().map(|&i| mapper.bin(f, x[i][f])).collect())
            .collect(),
    };

    let mut pred_train = vec![init; train.len()];
    let mut pred_valid = vec![init; valid.len()];
    let mut trees = Vec::new();
    let mut history = vec![mse(&y_valid, pred_valid.iter().copied())];
    let mut best = (history[0], 0usize);
    let constant = y_train.iter().all(|v| *v == y_train[0]);
    while !constant && trees.len() < p.n_trees_max {
        let resid: Vec<f64> = y_train.iter().zip(&pred_train).map(|(a, b)| a - b).collect();
        let (tree, fitted) = grow_tree(
            &binned,
            &resid,
            p.max_leaves,
            p.min_samples_leaf.max(1) as u32,
            p.learning_rate,
        );
        if tree.nodes.len() == 1 {
            break;
        }
        for (a, f) in pred_train.iter_mut().zip(&fitted) {
            *a += f;
        }
        for (a, &i) in pred_valid.iter_mut().zip(valid) {
            *a += tree.predict(&x[i]);
        }
        trees.push(tree);
        let m = mse(&y_valid, pred_valid.iter().copied());
        history.push(m);
        if m < best.0 {
            best = (m, trees.len());
        } else if trees.len() - best.1 >= p.patience {
            break;
        }
    }
    trees.truncate(best.1);
    Ok(GbrtModel {
        init,
        trees,
        n_features,
        val_history: history,
    })
}

/// Mean increase in MSE on `rows` when one feature column is shuffled,
/// averaged over `repeats` seeded permutations. Features no tree uses get
/// exactly 0.
pub fn permutation_importance(
    model: &GbrtModel,
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    repeats: usize,
    seed: u64,
) -> Vec<f64> {
    let y_rows: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let per_tree: Vec<Vec<f64>> = model
        .trees
        .iter()
        .map(|t| rows.iter().map(|&i| t.predict(&x[i])).collect())
        .collect();
    let base: Vec<f64> = (0..rows.len())
        .map(|k| model.init + per_tree.iter().map(|p| p[k]).sum::<f64>())
        .collect();
    let base_mse = mse(&y_rows, base.iter().copied());
    (0..model.n_features)
        .map(|f| {
            let using: Vec<usize> = (0..model.trees.len())
                .filter(|&t| model.trees[t].uses_feature(f))
                .collect();
            if using.is_empty() || repeats == 0 {
                return 0.0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(f as u64);
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            let mut total = 0.0;
            for _ in 0..repeats {
                perm.shuffle(&mut rng);
                let pred = (0..rows.len()).map(|k| {
                    let row = &x[rows[k]];
                    let v = x[rows[perm[k]]][f];
                    let mut p = base[k];
                    for &t in &using {
                        p += model.trees[t].predict_with(row, f, v) - per_tree[t][k];
                    }
                    p
                });
                total += mse(&y_rows, pred) - base_mse;
            }
            total / repeats as f64
        })
        .collect()
}
