//! Diagnostics over rankings and fronts: prefix determinant curves, random
//! percentile bands, top-k persistence along a front, and the agreement of
//! set-diversity measures with cluster entropy.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cholesky::IncrementalCholesky;
use crate::diversity::{
    cluster_counts, div1, entropy_of_counts, log_det_with_floor, ClusterPartition, ItemSet,
};
use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;
use crate::moo::TradeoffFront;
use crate::ranking::{random_rankings, Ranking};

/// `(k, det(L_{S(k)}))` for `k = 1..=max_k`, from one incremental factorization.
/// Once a pivot hits the floor the curve reports 0 from there on.
pub fn det_curve(
    ranking: &Ranking,
    kernel: &SimilarityKernel,
    max_k: usize,
) -> Result<Vec<(usize, f64)>> {
    if max_k > ranking.len() {
        return Err(Error::invalid(format!(
            "max_k = {max_k} exceeds ranking length {}",
            ranking.len()
        )));
    }
    Ok(prefix_dets(&ranking.order()[..max_k], kernel)
        .into_iter()
        .enumerate()
        .map(|(i, d)| (i + 1, d))
        .collect())
}

fn prefix_dets(prefix: &[usize], kernel: &SimilarityKernel) -> Vec<f64> {
    let mut chol = IncrementalCholesky::with_capacity(kernel, prefix.len());
    prefix
        .iter()
        .map(|&i| {
            chol.push(i);
            chol.det()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandConfig {
    pub n_samples: usize,
    pub percentiles: Vec<f64>,
    pub seed: u64,
    pub max_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercentileBand {
    pub percentiles: Vec<f64>,
    /// `curves[p][k - 1]` = the `percentiles[p]` percentile of `det(L_{S(k)})`.
    pub curves: Vec<Vec<f64>>,
    /// First `k` at which the highest requested percentile drops below 1e-6.
    pub collapse_k: Option<usize>,
}

/// Linear-interpolation percentile (`p` in `[0, 100]`) of sorted data:
/// position `p/100 · (n − 1)` between the neighbouring order statistics.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Per-`k` percentiles of prefix determinants over seeded random permutations.
pub fn percentile_band(kernel: &SimilarityKernel, config: &BandConfig) -> Result<PercentileBand> {
    if config.n_samples < 100 {
        return Err(Error::invalid("percentile bands need at least 100 samples"));
    }
    let n = kernel.n();
    if config.max_k == 0 || config.max_k > n {
        return Err(Error::invalid(format!("max_k must lie in 1..={n}")));
    }
    if config
        .percentiles
        .iter()
        .any(|p| !(0.0..=100.0).contains(p))
    {
        return Err(Error::invalid("percentiles must lie in [0, 100]"));
    }
    let samples = random_rankings(n, config.n_samples, config.seed);
    let curves: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|r| prefix_dets(&r.order()[..config.max_k], kernel))
        .collect();

    let mut bands = vec![Vec::with_capacity(config.max_k); config.percentiles.len()];
    let mut column = Vec::with_capacity(curves.len());
    for k in 0..config.max_k {
        column.clear();
        column.extend(curves.iter().map(|c| c[k]));
        column.sort_by(f64::total_cmp);
        for (band, &p) in bands.iter_mut().zip(&config.percentiles) {
            band.push(percentile_sorted(&column, p));
        }
    }
    let top = config
        .percentiles
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i);
    let collapse_k = top.and_then(|t| bands[t].iter().position(|&v| v < 1e-6).map(|k| k + 1));
    Ok(PercentileBand {
        percentiles: config.percentiles.clone(),
        curves: bands,
        collapse_k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Persistence {
    pub k: usize,
    pub front_size: usize,
    /// Item index → fraction of front rankings with the item in their top `k`.
    pub frequency: BTreeMap<usize, f64>,
    /// `|unique ids| / N`.
    pub compression: f64,
}

impl Persistence {
    pub fn unique_ids(&self) -> Vec<usize> {
        self.frequency.keys().copied().collect()
    }
}

/// How often each item appears in the top `k` across all rankings of a front.
pub fn top_k_persistence(front: &TradeoffFront, k: usize) -> Result<Persistence> {
    let first = front
        .points
        .first()
        .ok_or_else(|| Error::invalid("trade-off front is empty"))?;
    let n = first.ranking.len();
    let k = k.min(n);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for p in &front.points {
        for &item in &p.ranking.order()[..k] {
            *counts.entry(item).or_insert(0) += 1;
        }
    }
    let size = front.len() as f64;
    let frequency: BTreeMap<usize, f64> = counts
        .into_iter()
        .map(|(i, c)| (i, c as f64 / size))
        .collect();
    Ok(Persistence {
        k,
        front_size: front.len(),
        compression: frequency.len() as f64 / n as f64,
        frequency,
    })
}

/// A set-diversity measure compared against entropy.
#[derive(Debug, Clone)]
pub enum DiversityMethod {
    /// `div2`; compared through `ln det(L_S)`, which orders sets identically.
    Dpp,
    /// Clustering-based `div1` under a given partition.
    Submodular {
        name: String,
        partition: ClusterPartition,
    },
}

impl DiversityMethod {
    pub fn name(&self) -> String {
        match self {
            DiversityMethod::Dpp => "div2".to_string(),
            DiversityMethod::Submodular { name, .. } => name.clone(),
        }
    }

    fn score(&self, set: &[usize], kernel: &SimilarityKernel) -> Result<f64> {
        match self {
            DiversityMethod::Dpp => Ok(log_det_with_floor(set, kernel).0),
            DiversityMethod::Submodular { partition, .. } => {
                div1(&ItemSet::new(set.to_vec(), kernel.n())?, kernel, partition)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementConfig {
    pub sizes: Vec<usize>,
    pub comparisons: usize,
    pub seed: u64,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        AgreementConfig {
            sizes: (2..=20).collect(),
            comparisons: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub method: String,
    pub size: usize,
    /// Fraction of comparisons whose ordering matches entropy (metric ties count one half).
    pub agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub rows: Vec<AgreementRow>,
}

impl AgreementReport {
    pub fn get(&self, method: &str, size: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.size == size)
            .map(|r| r.agreement)
    }
}

const MAX_REDRAWS: usize = 10_000;

/// For each set size, draw pairs of random sets, keep the pairs whose cluster
/// entropies (under `gold`) differ, and record how often each method ranks the
/// pair the same way entropy does. Comparison `t` of size `s` draws from its
/// own ChaCha8 stream, so results do not depend on scheduling or method order.
pub fn agreement_experiment(
    kernel: &SimilarityKernel,
    gold: &ClusterPartition,
    methods: &[DiversityMethod],
    config: &AgreementConfig,
) -> Result<AgreementReport> {
    let n = kernel.n();
    if gold.len() != n {
        return Err(Error::invalid("gold labels and kernel sizes differ"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("at least one diversity method is required"));
    }
    if let Some(&s) = config.sizes.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::invalid(format!("set size {s} outside 1..={n}")));
    }

    let mut rows = Vec::new();
    for &size in &config.sizes {
        let pairs: Vec<(Vec<usize>, Vec<usize>, f64)> = (0..config.comparisons)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(((size as u64) << 32) | t as u64);
                for _ in 0..MAX_REDRAWS {
                    let a = sample(&mut rng, n, size).into_vec();
                    let b = sample(&mut rng, n, size).into_vec();
                    let ha = entropy_of_counts(&cluster_counts(&a, gold));
                    let hb = entropy_of_counts(&cluster_counts(&b, gold));
                    if (ha - hb).abs() > 1e-12 {
                        return Ok((a, b, ha - hb));
                    }
                }
                Err(Error::invalid(format!(
                    "could not draw two sets of size {size} with different entropy"
                )))
            })
            .collect::<Result<_>>()?;

        for method in methods {
            let scores: Vec<f64> = pairs
                .par_iter()
                .map(|(a, b, dh)| {
                    let diff = method.score(a, kernel)? - method.score(b, kernel)?;
                    Ok(if diff == 0.0 {
                        0.5
                    } else if (diff > 0.0) == (*dh > 0.0) {
                        1.0
                    } else {
                        0.0
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(AgreementRow {
                method: method.name(),
                size,
                agreement: scores.iter().sum::<f64>() / scores.len() as f64,
            });
        }
    }
    Ok(AgreementReport { rows })
}
