//! Set and ranked-list diversity measures.
//!
//! * [`div1`]: clustering-based submodular coverage (square root per cluster).
//! * [`div2`]: DPP probability `det(L_S) / det(L + I)`.
//! * [`div3`]: size-normalized determinant `det(L_S)^(1/n)`.
//! * [`div_r`]: rank diversity, the sum over prefixes of `ln det(L_{S(k)}) / k`.
//! * [`shannon_entropy`]: cluster-label entropy, used as ground truth when
//!   comparing the measures.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::cholesky::IncrementalCholesky;
use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;
use crate::ranking::Ranking;

/// Hard assignment of every item to exactly one of `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterPartition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {k} clusters"
            )));
        }
        Ok(ClusterPartition { labels, k })
    }

    /// `k = 1 + max(label)`; every label in `0..k` must be used.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let used: HashSet<usize> = labels.iter().copied().collect();
        if used.len() != k {
            return Err(Error::invalid("labels must be contiguous from 0"));
        }
        Ok(ClusterPartition { labels, k })
    }

    /// Every item in one cluster.
    pub fn single(n: usize) -> Self {
        ClusterPartition {
            labels: vec![0; n],
            k: 1,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |&(_, &l)| l == cluster)
            .map(|(i, _)| i)
    }
}

/// A set of distinct item indices, stored in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItemSet(Vec<usize>);

impl ItemSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!(
                "item {} appears twice in set",
                w[0]
            )));
        }
        if let Some(&bad) = indices.last().filter(|&&i| i >= n) {
            return Err(Error::invalid(format!(
                "item {bad} out of range for {n} items"
            )));
        }
        Ok(ItemSet(indices))
    }

    pub fn empty() -> Self {
        ItemSet(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Clustering-based diversity:
/// `Σ_k sqrt( Σ_{j ∈ S ∩ P_k} (1 / (N·M)) Σ_{i ∈ P_k} L_ij )` with `M = |S|`.
///
/// The inner sum runs over the whole cluster, selected or not. An empty set scores 0.
pub fn div1(set: &ItemSet, kernel: &SimilarityKernel, partition: &ClusterPartition) -> Result<f64> {
    div1_with_size(set, kernel, partition, set.len())
}

/// [`div1`] with the normalizing set size `M` held fixed. For a fixed `M` and
/// non-negative kernel entries this is monotone and submodular in `S`.
pub fn div1_with_size(
    set: &ItemSet,
    kernel: &SimilarityKernel,
    partition: &ClusterPartition,
    m: usize,
) -> Result<f64> {
    let n = kernel.n();
    if partition.len() != n {
        return Err(Error::invalid(format!(
            "partition covers {} items but kernel has {n}",
            partition.len()
        )));
    }
    if set.is_empty() {
        return Ok(0.0);
    }
    if m == 0 {
        return Err(Error::invalid("normalizing set size must be at least 1"));
    }
    let scale = 1.0 / (n as f64 * m as f64);
    let labels = partition.labels();
    let mut per_cluster = vec![0.0; partition.k()];
    for &j in set.indices() {
        let cluster = labels[j];
        let column: f64 = (0..n)
            .filter(|&i| labels[i] == cluster)
            .map(|i| kernel.get(i, j))
            .sum();
        per_cluster[cluster] += scale * column;
    }
    Ok(per_cluster.iter().map(|v| v.max(0.0).sqrt()).sum())
}

/// `ln det(L_S)` by Cholesky with every squared pivot floored at
/// [`crate::cholesky::PIVOT_FLOOR`]. Returns the value and whether the floor fired.
pub fn log_det_with_floor(set: &[usize], kernel: &SimilarityKernel) -> (f64, bool) {
    let mut chol = IncrementalCholesky::with_capacity(kernel, set.len());
    for &i in set {
        chol.push(i);
    }
    (chol.log_det(), chol.floored())
}

/// Floored log-determinant of the restricted kernel `L_S`.
pub fn log_det_s(set: &ItemSet, kernel: &SimilarityKernel) -> f64 {
    log_det_with_floor(set.indices(), kernel).0
}

/// `det(L_S)`, or 0 when the factorization hit the pivot floor.
pub fn det_s(set: &ItemSet, kernel: &SimilarityKernel) -> f64 {
    match log_det_with_floor(set.indices(), kernel) {
        (_, true) => 0.0,
        (ld, false) => ld.exp(),
    }
}

/// `ln det(L + I)`.
pub fn log_det_l_plus_i(kernel: &SimilarityKernel) -> f64 {
    let n = kernel.n();
    let mut entries = kernel.entries().to_vec();
    for i in 0..n {
        entries[i * n + i] += 1.0;
    }
    let shifted = SimilarityKernel::new(kernel.ids().to_vec(), entries).expect("shape preserved");
    let all: Vec<usize> = (0..n).collect();
    log_det_with_floor(&all, &shifted).0
}

/// DPP probability of `S` under the L-ensemble: `det(L_S) / det(L + I)`.
pub fn div2(set: &ItemSet, kernel: &SimilarityKernel) -> f64 {
    match log_det_with_floor(set.indices(), kernel) {
        (_, true) => 0.0,
        (ld, false) => (ld - log_det_l_plus_i(kernel)).exp(),
    }
}

/// `det(L_S)^(1/n)`: the geometric mean of the eigenvalues of `L_S`.
pub fn div3(set: &ItemSet, kernel: &SimilarityKernel) -> f64 {
    if set.is_empty() {
        return 1.0;
    }
    match log_det_with_floor(set.indices(), kernel) {
        (_, true) => 0.0,
        (ld, false) => (ld / set.len() as f64).exp(),
    }
}

/// Rank diversity `Σ_{k=1}^{min(N,H)} ln det(L_{S(k)}) / k` where `S(k)` is the
/// top-`k` prefix. One incremental factorization covers every prefix.
/// `horizon = None` means the whole ranking.
pub fn div_r(ranking: &Ranking, kernel: &SimilarityKernel, horizon: Option<usize>) -> f64 {
    div_r_order(ranking.order(), kernel, horizon)
}

pub(crate) fn div_r_order(
    order: &[usize],
    kernel: &SimilarityKernel,
    horizon: Option<usize>,
) -> f64 {
    let depth = horizon.map_or(order.len(), |h| h.min(order.len()));
    let mut chol = IncrementalCholesky::with_capacity(kernel, depth);
    let mut total = 0.0;
    for (k, &item) in order[..depth].iter().enumerate() {
        chol.push(item);
        total += chol.log_det() / (k + 1) as f64;
    }
    total
}

/// Shannon entropy (natural log) of the cluster proportions among the set's members.
pub fn shannon_entropy(set: &ItemSet, partition: &ClusterPartition) -> f64 {
    entropy_of_counts(&cluster_counts(set.indices(), partition))
}

/// Sorted per-cluster member counts of a set (the entropy's sufficient statistic).
pub fn cluster_counts(set: &[usize], partition: &ClusterPartition) -> Vec<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in set {
        *counts.entry(partition.labels()[i]).or_insert(0) += 1;
    }
    let mut v: Vec<usize> = counts.into_values().collect();
    v.sort_unstable();
    v
}

pub(crate) fn entropy_of_counts(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            p * p.ln()
        })
        .sum::<f64>()
}
