//! Greedy agglomeration of aspect head stems by embedding cosine
//! similarity. Stems are visited in descending frequency order; each
//! joins the first existing cluster whose medoid is at least `theta`
//! similar, otherwise it founds a new cluster. The medoid is recomputed
//! after every join as the member with the highest mean similarity to
//! the rest, ties broken by stem order.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::cosine;

/// A stem to cluster, with its mention frequency and embedding vector.
#[derive(Debug, Clone)]
pub struct AspectStem {
    pub stem: String,
    pub frequency: usize,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AspectCluster {
    pub id: usize,
    pub members: Vec<String>,
    pub medoid: String,
    /// Filled by the tensor-weighting stage; clusters partition the stems
    /// and their weights sum to one.
    pub weight: f64,
}

pub const DEFAULT_CLUSTER_THETA: f64 = 0.6;

struct Working {
    member_idx: Vec<usize>,
    medoid_idx: usize,
}

fn recompute_medoid(stems: &[AspectStem], members: &[usize]) -> usize {
    debug_assert!(!members.is_empty());
    let mut best = members[0];
    let mut best_score = f64::NEG_INFINITY;
    for &cand in members {
        let mut total = 0.0;
        let mut n = 0usize;
        for &other in members {
            if other == cand {
                continue;
            }
            total += cosine(&stems[cand].vector, &stems[other].vector);
            n += 1;
        }
        let score = if n > 0 { total / n as f64 } else { 0.0 };
        let better =
            score > best_score || (score == best_score && stems[cand].stem < stems[best].stem);
        if better {
            best = cand;
            best_score = score;
        }
    }
    best
}

/// Cluster stems greedily; the output is a partition.
pub fn cluster_aspects(stems: &[AspectStem], theta: f64) -> Result<Vec<AspectCluster>> {
    if !theta.is_finite() {
        return Err(Error::Domain("theta must be finite".into()));
    }
    if stems.is_empty() {
        return Ok(Vec::new());
    }
    let dim = stems[0].vector.len();
    if stems.iter().any(|s| s.vector.len() != dim) {
        return Err(Error::Shape("inconsistent embedding dimensions".into()));
    }

    // Descending frequency, ties by stem order.
    let mut order: Vec<usize> = (0..stems.len()).collect();
    order.sort_by(|&a, &b| {
        stems[b]
            .frequency
            .cmp(&stems[a].frequency)
            .then(stems[a].stem.cmp(&stems[b].stem))
    });

    let mut clusters: Vec<Working> = Vec::new();
    for idx in order {
        let mut joined = false;
        for cluster in clusters.iter_mut() {
            let sim = cosine(&stems[idx].vector, &stems[cluster.medoid_idx].vector);
            if sim >= theta {
                cluster.member_idx.push(idx);
                cluster.medoid_idx = recompute_medoid(stems, &cluster.member_idx);
                joined = true;
                break;
            }
        }
        if !joined {
            clusters.push(Working {
                member_idx: vec![idx],
                medoid_idx: idx,
            });
        }
    }

    Ok(clusters
        .into_iter()
        .enumerate()
        .map(|(id, w)| AspectCluster {
            id,
            members: w
                .member_idx
                .iter()
                .map(|&i| stems[i].stem.clone())
                .collect(),
            medoid: stems[w.medoid_idx].stem.clone(),
            weight: 0.0,
        })
        .collect())
}

/// stem -> cluster id lookup for tensor construction.
pub fn cluster_assignment(clusters: &[AspectCluster]) -> HashMap<String, usize> {
    let mut map = HashMap::new();
    for cluster in clusters {
        for member in &cluster.members {
            map.insert(member.clone(), cluster.id);
        }
    }
    map
}
