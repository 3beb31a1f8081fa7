//! Quality/diversity trade-off fronts over rankings.
//!
//! Rankings are searched through real-valued genotypes: a vector of `N` genes
//! in `[0, 1]` decodes to the permutation that sorts the genes ascending.
//! [`evolve`] runs NSGA-II on the two minimized objectives
//! `f_quality = 1 − nDCG_N` and `f_diversity = −Div_R`.

mod nsga2;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diversity::div_r_order;
use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;
use crate::quality::{NdcgEvaluator, RelevanceVector};
use crate::ranking::Ranking;

pub use nsga2::{crowding_distance, dominates, evolve, fast_non_dominated_sort, EvolveConfig};

/// Real-valued encoding of a ranking; every gene lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genotype(Vec<f64>);

impl Genotype {
    pub fn new(genes: Vec<f64>) -> Result<Self> {
        if genes.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::invalid("genes must lie in [0, 1]"));
        }
        Ok(Genotype(genes))
    }

    pub fn genes(&self) -> &[f64] {
        &self.0
    }
}

/// Argsort ascending by gene value, ties by ascending index.
pub fn decode(genotype: &Genotype) -> Ranking {
    Ranking::from_vec_unchecked(argsort(genotype.genes()))
}

pub(crate) fn argsort(genes: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..genes.len()).collect();
    order.sort_by(|&a, &b| genes[a].total_cmp(&genes[b]).then(a.cmp(&b)));
    order
}

/// The item at position `p` gets gene `(p + 0.5) / N`, so `decode(encode(r)) == r`.
pub fn encode(ranking: &Ranking) -> Genotype {
    let n = ranking.len() as f64;
    let mut genes = vec![0.0; ranking.len()];
    for (p, &item) in ranking.order().iter().enumerate() {
        genes[item] = (p as f64 + 0.5) / n;
    }
    Genotype(genes)
}

/// Evaluates both minimized objectives for a ranking.
#[derive(Debug, Clone)]
pub struct Objectives<'a> {
    kernel: &'a SimilarityKernel,
    ndcg: NdcgEvaluator<'a>,
    horizon: Option<usize>,
}

impl<'a> Objectives<'a> {
    pub fn new(
        kernel: &'a SimilarityKernel,
        rel: &'a RelevanceVector,
        horizon: Option<usize>,
    ) -> Result<Self> {
        if kernel.n() != rel.len() {
            return Err(Error::invalid(format!(
                "kernel has {} items but relevance vector has {}",
                kernel.n(),
                rel.len()
            )));
        }
        Ok(Objectives {
            kernel,
            ndcg: NdcgEvaluator::new(rel),
            horizon,
        })
    }

    /// `[1 − nDCG_N, −Div_R]`.
    pub fn evaluate(&self, ranking: &Ranking) -> [f64; 2] {
        self.evaluate_order(ranking.order())
    }

    pub(crate) fn evaluate_order(&self, order: &[usize]) -> [f64; 2] {
        [
            1.0 - self.ndcg.full_depth(order),
            -div_r_order(order, self.kernel, self.horizon),
        ]
    }
}

/// One ranking on the trade-off front.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    pub ranking: Ranking,
    /// `1 − nDCG_N` (minimized).
    pub f_quality: f64,
    /// `−Div_R` (minimized).
    pub f_diversity: f64,
    /// Min–max normalized over the final front.
    pub norm_q: f64,
    pub norm_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrontMetadata {
    pub seed: u64,
    pub generations: usize,
    pub pop_size: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub horizon: Option<usize>,
    pub archive_all: bool,
    /// Number of distinct rankings whose objectives were computed.
    pub evaluations: usize,
    /// Normalized hypervolume of the running non-dominated archive after each generation
    /// (index 0 = initial population).
    pub hypervolume: Vec<f64>,
    /// Item ids in kernel order; rankings in the JSON file refer to these.
    pub item_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualities: Option<Vec<f64>>,
}

/// Mutually non-dominated rankings sorted by `f_quality` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffFront {
    pub points: Vec<FrontPoint>,
    pub metadata: FrontMetadata,
}

impl TradeoffFront {
    /// Filter to the non-dominated, objective-deduplicated subset, sort and normalize.
    pub fn from_candidates(
        candidates: impl IntoIterator<Item = (Ranking, [f64; 2])>,
        metadata: FrontMetadata,
    ) -> Self {
        let mut cands: Vec<(Ranking, [f64; 2])> = candidates.into_iter().collect();
        // canonical order: objectives, then ranking; dedup keeps the smallest ranking per pair
        cands.sort_by(|a, b| {
            a.1[0]
                .total_cmp(&b.1[0])
                .then(a.1[1].total_cmp(&b.1[1]))
                .then_with(|| a.0.cmp(&b.0))
        });
        cands.dedup_by(|b, a| a.1 == b.1);
        // after sorting by (f1, f2), a point is non-dominated iff its f2 beats every earlier f2
        let mut best_f2 = f64::INFINITY;
        let kept: Vec<(Ranking, [f64; 2])> = cands
            .into_iter()
            .filter(|(_, f)| {
                if f[1] < best_f2 {
                    best_f2 = f[1];
                    true
                } else {
                    false
                }
            })
            .collect();

        let (q_lo, q_hi) = min_max(kept.iter().map(|(_, f)| f[0]));
        let (d_lo, d_hi) = min_max(kept.iter().map(|(_, f)| f[1]));
        let points = kept
            .into_iter()
            .map(|(ranking, f)| FrontPoint {
                ranking,
                f_quality: f[0],
                f_diversity: f[1],
                norm_q: scale(f[0], q_lo, q_hi),
                norm_d: scale(f[1], d_lo, d_hi),
            })
            .collect();
        TradeoffFront { points, metadata }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let ids = &self.metadata.item_ids;
        let file = FrontFile {
            metadata: self.metadata.clone(),
            points: self
                .points
                .iter()
                .map(|p| FrontPointFile {
                    f_quality: p.f_quality,
                    f_diversity: p.f_diversity,
                    norm_q: p.norm_q,
                    norm_d: p.norm_d,
                    ranking: p.ranking.order().iter().map(|&i| ids[i].clone()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::format("front", e.to_string()))
    }

    pub fn from_json(raw: &str, origin: &str) -> Result<Self> {
        let file: FrontFile =
            serde_json::from_str(raw).map_err(|e| Error::format(origin, e.to_string()))?;
        let ids = &file.metadata.item_ids;
        let index: std::collections::HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let points =
            file.points
                .iter()
                .map(|p| {
                    let order =
                        p.ranking
                            .iter()
                            .map(|id| {
                                index.get(id.as_str()).copied().ok_or_else(|| {
                                    Error::format(origin, format!("unknown id `{id}`"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                    Ok(FrontPoint {
                        ranking: Ranking::new(order, ids.len())
                            .map_err(|e| Error::format(origin, e.to_string()))?,
                        f_quality: p.f_quality,
                        f_diversity: p.f_diversity,
                        norm_q: p.norm_q,
                        norm_d: p.norm_d,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        Ok(TradeoffFront {
            points,
            metadata: file.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw, &path.display().to_string())
    }
}

#[derive(Serialize, Deserialize)]
struct FrontFile {
    metadata: FrontMetadata,
    points: Vec<FrontPointFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FrontPointFile {
    f_quality: f64,
    f_diversity: f64,
    norm_q: f64,
    norm_d: f64,
    ranking: Vec<String>,
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// The point closest to the utopia origin in normalized objective space
/// (circular indifference curves); ties go to the smaller `f_quality`.
pub fn select_indifference(front: &TradeoffFront) -> Result<&FrontPoint> {
    front
        .points
        .iter()
        .min_by(|a, b| {
            a.norm_q
                .hypot(a.norm_d)
                .total_cmp(&b.norm_q.hypot(b.norm_d))
                .then(a.f_quality.total_cmp(&b.f_quality))
        })
        .ok_or_else(|| Error::invalid("trade-off front is empty"))
}

/// Area dominated by `points` (minimization) and bounded by `reference`.
/// Points outside the reference box contribute nothing.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut staircase: Vec<[f64; 2]> = Vec::new();
    for p in pts {
        if staircase.last().is_none_or(|last| p[1] < last[1]) {
            staircase.push(p);
        }
    }
    staircase
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let next_x = staircase.get(i + 1).map_or(reference[0], |q| q[0]);
            (next_x - p[0]) * (reference[1] - p[1])
        })
        .sum()
}
