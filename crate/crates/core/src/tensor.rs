//! Sparse user × item × cluster sentiment tensor, cluster weighting by
//! masked CP decomposition, and the weighted rating matrix that blends
//! overall stars with cluster-weighted aspect ratings.
//!
//! The CP factors are fit by alternating least squares over observed
//! entries only; A and B columns are normalized after their updates so
//! the cluster-mode factor C carries all scale, and the cluster weights
//! are its squared row norms, normalized to sum to one.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::aspects::AspectMention;
use crate::error::{Error, Result};
use crate::linalg::{solve_damped, Mat};
use crate::recommend::{RatingMatrix, RatingTriple};
use crate::rng::Lcg;

/// Sparse mean aspect-rating tensor over (user, item, cluster).
#[derive(Debug, Clone)]
pub struct AspectTensor {
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub n_clusters: usize,
    /// (user, item, cluster) -> mean star-scale rating
    cells: BTreeMap<(usize, usize, usize), f64>,
}

impl AspectTensor {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.users.len(), self.items.len(), self.n_clusters)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, u: usize, i: usize, k: usize) -> Option<f64> {
        self.cells.get(&(u, i, k)).copied()
    }

    pub fn observed(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.cells.iter().map(|(&(u, i, k), &v)| (u, i, k, v))
    }

    /// Scale every stored value (test hook for the weight-invariance
    /// property).
    pub fn scaled(&self, factor: f64) -> AspectTensor {
        AspectTensor {
            users: self.users.clone(),
            items: self.items.clone(),
            n_clusters: self.n_clusters,
            cells: self.cells.iter().map(|(&k, &v)| (k, v * factor)).collect(),
        }
    }

    /// Fully-observed constructor for tests and small fixtures.
    pub fn dense(users: usize, items: usize, clusters: usize, values: &[f64]) -> AspectTensor {
        assert_eq!(values.len(), users * items * clusters);
        let mut cells = BTreeMap::new();
        for u in 0..users {
            for i in 0..items {
                for k in 0..clusters {
                    cells.insert((u, i, k), values[(u * items + i) * clusters + k]);
                }
            }
        }
        AspectTensor {
            users: (0..users).map(|u| format!("u{u}")).collect(),
            items: (0..items).map(|i| format!("i{i}")).collect(),
            n_clusters: clusters,
            cells,
        }
    }
}

/// Mean the mention ratings into tensor cells. Every mention's head stem
/// must belong to exactly one cluster.
pub fn build_tensor(
    mentions: &[AspectMention],
    assignment: &HashMap<String, usize>,
    n_clusters: usize,
) -> Result<AspectTensor> {
    let users: Vec<String> = mentions
        .iter()
        .map(|m| m.user_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let items: Vec<String> = mentions
        .iter()
        .map(|m| m.item_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let user_index: HashMap<&str, usize> = users
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i))
        .collect();
    let item_index: HashMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let mut sums: BTreeMap<(usize, usize, usize), (f64, usize)> = BTreeMap::new();
    for m in mentions {
        let cluster = *assignment
            .get(&m.head_stem)
            .ok_or_else(|| Error::Domain(format!("head stem {:?} has no cluster", m.head_stem)))?;
        if cluster >= n_clusters {
            return Err(Error::Domain(format!(
                "cluster id {cluster} out of range ({n_clusters})"
            )));
        }
        let key = (
            user_index[m.user_id.as_str()],
            item_index[m.item_id.as_str()],
            cluster,
        );
        let e = sums.entry(key).or_insert((0.0, 0));
        e.0 += m.rating;
        e.1 += 1;
    }
    Ok(AspectTensor {
        users,
        items,
        n_clusters,
        cells: sums
            .into_iter()
            .map(|(k, (sum, n))| (k, sum / n as f64))
            .collect(),
    })
}

const CP_DAMPING: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CpDecomposition {
    /// cluster weights: squared row norms of C, normalized to sum 1
    pub weights: Vec<f64>,
    pub user_factors: Mat,
    pub item_factors: Mat,
    pub cluster_factors: Mat,
}

impl CpDecomposition {
    /// Reconstructed value at (u, i, k).
    pub fn predict(&self, u: usize, i: usize, k: usize) -> f64 {
        let rank = self.user_factors.cols;
        (0..rank)
            .map(|r| {
                self.user_factors.at(u, r)
                    * self.item_factors.at(i, r)
                    * self.cluster_factors.at(k, r)
            })
            .sum()
    }

    /// Relative Frobenius fit error over the observed cells.
    pub fn fit_error(&self, tensor: &AspectTensor) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (u, i, k, v) in tensor.observed() {
            let e = self.predict(u, i, k) - v;
            num += e * e;
            den += v * v;
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }
}

fn normalize_columns(m: &mut Mat) {
    for c in 0..m.cols {
        let mut norm = 0.0;
        for r in 0..m.rows {
            norm += m.at(r, c) * m.at(r, c);
        }
        let norm = norm.sqrt();
        if norm > 1e-300 {
            for r in 0..m.rows {
                *m.at_mut(r, c) /= norm;
            }
        }
    }
}

/// One masked ALS update of the factor for `mode`; rows with no observed
/// entries keep their previous values.
fn als_update(
    tensor: &AspectTensor,
    mode: usize,
    target: &mut Mat,
    other1: &Mat,
    other2: &Mat,
    rank: usize,
) -> Result<()> {
    let n_rows = target.rows;
    // Group observed entries by the target-mode index.
    let mut by_row: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n_rows];
    for (u, i, k, v) in tensor.observed() {
        let (row, a, b) = match mode {
            0 => (u, i, k),
            1 => (i, u, k),
            _ => (k, u, i),
        };
        by_row[row].push((a, b, v));
    }
    for (row, entries) in by_row.iter().enumerate() {
        if entries.is_empty() {
            continue;
        }
        let mut gram = Mat::zeros(rank, rank);
        let mut rhs = vec![0.0; rank];
        for &(a, b, v) in entries {
            let g: Vec<f64> = (0..rank)
                .map(|r| other1.at(a, r) * other2.at(b, r))
                .collect();
            for p in 0..rank {
                rhs[p] += v * g[p];
                for q in 0..rank {
                    *gram.at_mut(p, q) += g[p] * g[q];
                }
            }
        }
        let mut solution = solve_damped(&gram, &rhs, CP_DAMPING)?;
        // One iterative-refinement step cancels the O(damping) bias of
        // the regularized solve while keeping its stability on
        // rank-deficient systems.
        let mut residual = rhs.clone();
        for p in 0..rank {
            for q in 0..rank {
                residual[p] -= gram.at(p, q) * solution[q];
            }
        }
        let correction = solve_damped(&gram, &residual, CP_DAMPING)?;
        for (s, c) in solution.iter_mut().zip(&correction) {
            *s += c;
        }
        target.row_mut(row).copy_from_slice(&solution);
    }
    Ok(())
}

/// Masked CP decomposition by alternating least squares; returns the
/// cluster weights and all three factors. Factors start seeded-uniform
/// in [0,1); the cluster mode is solved last each sweep so it carries
/// the tensor's scale.
pub fn cp_weights(
    tensor: &AspectTensor,
    rank: usize,
    iters: usize,
    seed: u64,
) -> Result<CpDecomposition> {
    let (n_users, n_items, n_clusters) = tensor.dims();
    if n_clusters < 1 {
        return Err(Error::Domain("tensor has no clusters".into()));
    }
    if rank < 1 {
        return Err(Error::Domain("cp rank must be >= 1".into()));
    }
    if tensor.is_empty() {
        return Err(Error::Domain("cp decomposition of an empty tensor".into()));
    }
    let mut rng = Lcg::new(seed);
    let mut fill = |rows: usize| {
        let mut m = Mat::zeros(rows, rank);
        for v in &mut m.data {
            *v = rng.uniform();
        }
        m
    };
    let mut a = fill(n_users);
    let mut b = fill(n_items);
    let mut c = fill(n_clusters);

    for iter in 0..iters.max(1) {
        als_update(tensor, 0, &mut a, &b, &c, rank)?;
        normalize_columns(&mut a);
        als_update(tensor, 1, &mut b, &a, &c, rank)?;
        normalize_columns(&mut b);
        als_update(tensor, 2, &mut c, &a, &b, rank)?;
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Numeric(format!(
                "cp-als produced non-finite values at iteration {iter}"
            )));
        }
    }

    let row_norms_sq: Vec<f64> = (0..n_clusters)
        .map(|k| (0..rank).map(|r| c.at(k, r) * c.at(k, r)).sum())
        .collect();
    let total: f64 = row_norms_sq.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::Numeric("cluster factor collapsed to zero".into()));
    }
    let weights: Vec<f64> = row_norms_sq.iter().map(|&n| n / total).collect();
    Ok(CpDecomposition {
        weights,
        user_factors: a,
        item_factors: b,
        cluster_factors: c,
    })
}

/// Blend overall ratings with cluster-weighted aspect ratings:
/// `r' = α·r + (1-α)·Σ w_k·ā_uik / Σ w_k` over the clusters observed for
/// that (user, item). Pairs with only one side present keep that side.
pub fn weighted_rating_matrix(
    tensor: &AspectTensor,
    weights: &[f64],
    overall: &RatingMatrix,
    alpha: f64,
) -> Result<Vec<RatingTriple>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} outside [0,1]")));
    }
    if weights.len() != tensor.n_clusters {
        return Err(Error::Shape(format!(
            "{} weights for {} clusters",
            weights.len(),
            tensor.n_clusters
        )));
    }
    // Aspect term per (user, item): weight-renormalized mean over the
    // observed clusters.
    let mut aspect_num: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut aspect_den: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut aspect_plain: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for (u, i, k, v) in tensor.observed() {
        let key = (tensor.users[u].clone(), tensor.items[i].clone());
        *aspect_num.entry(key.clone()).or_insert(0.0) += weights[k] * v;
        *aspect_den.entry(key.clone()).or_insert(0.0) += weights[k];
        let e = aspect_plain.entry(key).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let aspect_term = |key: &(String, String)| -> Option<f64> {
        let den = *aspect_den.get(key)?;
        if den > 0.0 {
            Some(aspect_num[key] / den)
        } else {
            // All observed clusters carry zero weight: plain mean.
            let (sum, n) = aspect_plain[key];
            Some(sum / n as f64)
        }
    };

    let mut keys: BTreeSet<(String, String)> = aspect_den.keys().cloned().collect();
    for (u, i, _) in overall.observed() {
        keys.insert((overall.users[u].clone(), overall.items[i].clone()));
    }

    let mut triples = Vec::with_capacity(keys.len());
    for key in keys {
        let rating = overall
            .user_id(&key.0)
            .zip(overall.item_id(&key.1))
            .and_then(|(u, i)| overall.get(u, i));
        let blended = match (rating, aspect_term(&key)) {
            (Some(r), Some(a)) => alpha * r + (1.0 - alpha) * a,
            (Some(r), None) => r,
            (None, Some(a)) => a,
            (None, None) => continue,
        };
        triples.push(RatingTriple {
            user: key.0,
            item: key.1,
            rating: blended,
        });
    }
    Ok(triples)
}
