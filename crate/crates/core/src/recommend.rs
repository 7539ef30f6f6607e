//! SVD-backed user-based collaborative filtering: the (weighted) rating
//! matrix is mean-imputed, centered, and factorized with the randomized
//! truncated SVD; user neighbors are found by cosine similarity in the
//! latent space and predictions are weighted rating deviations over those
//! neighbors. A plain biased matrix-factorization trainer serves as the
//! comparison baseline.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::linalg::{cosine, Mat};
use crate::rng::Lcg;
use crate::svd::randomized_svd;

/// One observed (user, item, rating) cell of the rating matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTriple {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

/// Sparse rating matrix with stable (sorted) user/item indexing.
#[derive(Debug, Clone)]
pub struct RatingMatrix {
    pub users: Vec<String>,
    pub items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    /// (user, item) -> rating; duplicate triples keep the mean.
    cells: BTreeMap<(usize, usize), f64>,
}

impl RatingMatrix {
    pub fn from_triples(triples: &[RatingTriple]) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::Domain("empty rating matrix".into()));
        }
        let users: Vec<String> = triples
            .iter()
            .map(|t| t.user.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let items: Vec<String> = triples
            .iter()
            .map(|t| t.item.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let user_index: HashMap<String, usize> = users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();
        let item_index: HashMap<String, usize> = items
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
        for t in triples {
            let key = (user_index[&t.user], item_index[&t.item]);
            let e = sums.entry(key).or_insert((0.0, 0));
            e.0 += t.rating;
            e.1 += 1;
        }
        let cells = sums
            .into_iter()
            .map(|(k, (sum, n))| (k, sum / n as f64))
            .collect();
        Ok(RatingMatrix {
            users,
            items,
            user_index,
            item_index,
            cells,
        })
    }

    pub fn observed(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.cells.iter().map(|(&(u, i), &r)| (u, i, r))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, user: usize, item: usize) -> Option<f64> {
        self.cells.get(&(user, item)).copied()
    }

    pub fn user_id(&self, user: &str) -> Option<usize> {
        self.user_index.get(user).copied()
    }

    pub fn item_id(&self, item: &str) -> Option<usize> {
        self.item_index.get(item).copied()
    }
}

/// Fitted collaborative-filtering model.
#[derive(Debug, Clone)]
pub struct RatingModel {
    pub users: Vec<String>,
    pub items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    /// global mean rating
    pub global_mean: f64,
    /// per-user observed mean
    pub user_means: Vec<f64>,
    /// per-item bias relative to user means
    pub item_bias: Vec<f64>,
    /// U × f latent users
    pub user_factors: Mat,
    /// I × f latent items
    pub item_factors: Mat,
    pub singular_values: Vec<f64>,
    /// per-item observers as (user, rating), user-sorted
    observers: Vec<Vec<(usize, f64)>>,
    /// per-user observed item set
    seen: Vec<BTreeSet<usize>>,
    pub k_nn: usize,
    /// set when the requested rank was clamped to min(U, I)
    pub rank_clamped: bool,
}

pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 5.0;

fn clamp_rating(r: f64) -> f64 {
    r.clamp(RATING_MIN, RATING_MAX)
}

/// Impute missing cells with `mu_u + mu_i - mu`, center rows by user
/// mean, and factorize with the seeded randomized SVD.
pub fn fit_rating_model(
    matrix: &RatingMatrix,
    rank: usize,
    power_iters: usize,
    k_nn: usize,
    seed: u64,
) -> Result<RatingModel> {
    if matrix.is_empty() {
        return Err(Error::Domain("cannot fit on an empty rating matrix".into()));
    }
    if rank == 0 {
        return Err(Error::Domain("rank must be >= 1".into()));
    }
    let n_users = matrix.users.len();
    let n_items = matrix.items.len();
    let max_rank = n_users.min(n_items);
    let rank_clamped = rank > max_rank;
    let rank = rank.min(max_rank);

    let mut user_sum = vec![0.0; n_users];
    let mut user_cnt = vec![0usize; n_users];
    let mut item_sum = vec![0.0; n_items];
    let mut item_cnt = vec![0usize; n_items];
    let mut total = 0.0;
    for (u, i, r) in matrix.observed() {
        user_sum[u] += r;
        user_cnt[u] += 1;
        item_sum[i] += r;
        item_cnt[i] += 1;
        total += r;
    }
    let global_mean = total / matrix.len() as f64;
    let user_means: Vec<f64> = (0..n_users)
        .map(|u| {
            if user_cnt[u] > 0 {
                user_sum[u] / user_cnt[u] as f64
            } else {
                global_mean
            }
        })
        .collect();
    let item_means: Vec<f64> = (0..n_items)
        .map(|i| {
            if item_cnt[i] > 0 {
                item_sum[i] / item_cnt[i] as f64
            } else {
                global_mean
            }
        })
        .collect();

    let mut centered = Mat::zeros(n_users, n_items);
    for u in 0..n_users {
        for i in 0..n_items {
            let value = match matrix.get(u, i) {
                Some(r) => r,
                None => user_means[u] + item_means[i] - global_mean,
            };
            *centered.at_mut(u, i) = value - user_means[u];
        }
    }

    let svd = randomized_svd(&centered, rank, power_iters, seed)?;
    let kept = svd.singular_values.len();
    let mut user_factors = Mat::zeros(n_users, kept);
    let mut item_factors = Mat::zeros(n_items, kept);
    for c in 0..kept {
        let scale = svd.singular_values[c].max(0.0).sqrt();
        for r in 0..n_users {
            *user_factors.at_mut(r, c) = svd.u.at(r, c) * scale;
        }
        for r in 0..n_items {
            *item_factors.at_mut(r, c) = svd.v.at(r, c) * scale;
        }
    }

    let mut item_bias = vec![0.0; n_items];
    let mut observers = vec![Vec::new(); n_items];
    let mut seen = vec![BTreeSet::new(); n_users];
    for (u, i, r) in matrix.observed() {
        item_bias[i] += r - user_means[u];
        observers[i].push((u, r));
        seen[u].insert(i);
    }
    for i in 0..n_items {
        if item_cnt[i] > 0 {
            item_bias[i] /= item_cnt[i] as f64;
        }
    }

    Ok(RatingModel {
        users: matrix.users.clone(),
        items: matrix.items.clone(),
        user_index: matrix.user_index.clone(),
        item_index: matrix.item_index.clone(),
        global_mean,
        user_means,
        item_bias,
        user_factors,
        item_factors,
        singular_values: svd.singular_values,
        observers,
        seen,
        k_nn,
        rank_clamped,
    })
}

impl RatingModel {
    pub fn user_id(&self, user: &str) -> Option<usize> {
        self.user_index.get(user).copied()
    }

    pub fn item_id(&self, item: &str) -> Option<usize> {
        self.item_index.get(item).copied()
    }

    /// Cosine similarity of two users' latent vectors.
    pub fn user_similarity(&self, a: &str, b: &str) -> Result<f64> {
        let ua = self
            .user_id(a)
            .ok_or_else(|| Error::Domain(format!("unknown user {a:?}")))?;
        let ub = self
            .user_id(b)
            .ok_or_else(|| Error::Domain(format!("unknown user {b:?}")))?;
        Ok(cosine(self.user_factors.row(ua), self.user_factors.row(ub)))
    }

    /// Items the user rated in the training matrix.
    pub fn seen_items(&self, user: &str) -> BTreeSet<String> {
        match self.user_id(user) {
            Some(u) => self.seen[u]
                .iter()
                .map(|&i| self.items[i].clone())
                .collect(),
            None => BTreeSet::new(),
        }
    }

    fn predict_indexed(&self, user: Option<usize>, item: Option<usize>) -> f64 {
        let raw = match (user, item) {
            (Some(u), Some(i)) => {
                // Top-k positive-similarity users who observed this item.
                let mut sims: Vec<(f64, usize, f64)> = self.observers[i]
                    .iter()
                    .filter(|&&(v, _)| v != u)
                    .map(|&(v, r)| {
                        (
                            cosine(self.user_factors.row(u), self.user_factors.row(v)),
                            v,
                            r,
                        )
                    })
                    .filter(|&(s, _, _)| s > 0.0)
                    .collect();
                sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                sims.truncate(self.k_nn);
                if sims.is_empty() {
                    self.user_means[u] + self.item_bias[i]
                } else {
                    let num: f64 = sims
                        .iter()
                        .map(|&(s, v, r)| s * (r - self.user_means[v]))
                        .sum();
                    let den: f64 = sims.iter().map(|&(s, _, _)| s.abs()).sum();
                    self.user_means[u] + num / den
                }
            }
            (Some(u), None) => self.user_means[u],
            (None, Some(i)) => self.global_mean + self.item_bias[i],
            (None, None) => self.global_mean,
        };
        clamp_rating(raw)
    }

    /// Predicted rating, clamped to [1, 5]. Unknown users/items fall back
    /// through item bias to the global mean; never an error.
    pub fn predict(&self, user: &str, item: &str) -> f64 {
        self.predict_indexed(self.user_id(user), self.item_id(item))
    }

    /// Top-n unseen items by predicted rating; ties broken by observation
    /// count (descending) then item id (ascending).
    pub fn top_n(&self, user: &str, n: usize, seen: &BTreeSet<String>) -> Vec<(String, f64)> {
        let uid = self.user_id(user);
        let mut scored: Vec<(usize, f64)> = (0..self.items.len())
            .filter(|&i| !seen.contains(&self.items[i]))
            .map(|i| (i, self.predict_indexed(uid, Some(i))))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then(self.observers[b.0].len().cmp(&self.observers[a.0].len()))
                .then(self.items[a.0].cmp(&self.items[b.0]))
        });
        scored
            .into_iter()
            .take(n)
            .map(|(i, r)| (self.items[i].clone(), r))
            .collect()
    }
}

/// Plain biased matrix factorization trained by seeded SGD; the Table-style
/// comparison baseline.
#[derive(Debug, Clone)]
pub struct MfModel {
    pub users: Vec<String>,
    pub items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    pub global_mean: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub user_factors: Mat,
    pub item_factors: Mat,
}

#[derive(Debug, Clone)]
pub struct MfOptions {
    pub rank: usize,
    pub epochs: usize,
    pub lr: f64,
    pub reg: f64,
    pub seed: u64,
}

impl Default for MfOptions {
    fn default() -> Self {
        MfOptions {
            rank: 20,
            epochs: 50,
            lr: 0.01,
            reg: 0.05,
            seed: 1,
        }
    }
}

pub fn baseline_mf(matrix: &RatingMatrix, opts: &MfOptions) -> Result<MfModel> {
    if matrix.is_empty() {
        return Err(Error::Domain("empty training set".into()));
    }
    let n_users = matrix.users.len();
    let n_items = matrix.items.len();
    let rank = opts.rank.max(1);
    let mut rng = Lcg::new(opts.seed);
    let scale = 0.1 / (rank as f64).sqrt();
    let mut p = Mat::zeros(n_users, rank);
    let mut q = Mat::zeros(n_items, rank);
    for v in &mut p.data {
        *v = rng.uniform_in(-scale, scale);
    }
    for v in &mut q.data {
        *v = rng.uniform_in(-scale, scale);
    }
    let mut b_u = vec![0.0; n_users];
    let mut b_i = vec![0.0; n_items];
    let triples: Vec<(usize, usize, f64)> = matrix.observed().collect();
    let global_mean = triples.iter().map(|t| t.2).sum::<f64>() / triples.len() as f64;

    let mut order: Vec<usize> = (0..triples.len()).collect();
    for epoch in 0..opts.epochs {
        rng.shuffle(&mut order);
        for &idx in &order {
            let (u, i, r) = triples[idx];
            let pred = global_mean
                + b_u[u]
                + b_i[i]
                + p.row(u)
                    .iter()
                    .zip(q.row(i))
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            let err = r - pred;
            if !err.is_finite() {
                return Err(Error::Numeric(format!(
                    "matrix factorization diverged at epoch {epoch}"
                )));
            }
            b_u[u] += opts.lr * (err - opts.reg * b_u[u]);
            b_i[i] += opts.lr * (err - opts.reg * b_i[i]);
            for c in 0..rank {
                let pu = p.at(u, c);
                let qi = q.at(i, c);
                *p.at_mut(u, c) += opts.lr * (err * qi - opts.reg * pu);
                *q.at_mut(i, c) += opts.lr * (err * pu - opts.reg * qi);
            }
        }
    }
    Ok(MfModel {
        users: matrix.users.clone(),
        items: matrix.items.clone(),
        user_index: matrix.user_index.clone(),
        item_index: matrix.item_index.clone(),
        global_mean,
        user_bias: b_u,
        item_bias: b_i,
        user_factors: p,
        item_factors: q,
    })
}

impl MfModel {
    pub fn predict(&self, user: &str, item: &str) -> f64 {
        let u = self.user_index.get(user);
        let i = self.item_index.get(item);
        let raw = match (u, i) {
            (Some(&u), Some(&i)) => {
                self.global_mean
                    + self.user_bias[u]
                    + self.item_bias[i]
                    + self
                        .user_factors
                        .row(u)
                        .iter()
                        .zip(self.item_factors.row(i))
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            }
            (Some(&u), None) => self.global_mean + self.user_bias[u],
            (None, Some(&i)) => self.global_mean + self.item_bias[i],
            (None, None) => self.global_mean,
        };
        clamp_rating(raw)
    }

    pub fn train_rmse(&self, matrix: &RatingMatrix) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (u, i, r) in matrix.observed() {
            let e = self.predict(&matrix.users[u], &matrix.items[i]) - r;
            sum += e * e;
            n += 1;
        }
        (sum / n as f64).sqrt()
    }
}
