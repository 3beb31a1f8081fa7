//! Relevance normalization and (n)DCG ranked-list quality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::Ranking;

/// Per-item relevance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceVector(Vec<f64>);

impl RelevanceVector {
    /// Wrap already-normalized relevances.
    pub fn new(rel: Vec<f64>) -> Result<Self> {
        if rel.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::invalid("relevance values must lie in [0, 1]"));
        }
        Ok(RelevanceVector(rel))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Min–max scale raw qualities to `[0, 1]`. All-equal qualities map to all zeros.
pub fn normalize_relevance(qualities: &[f64]) -> RelevanceVector {
    let min = qualities.iter().copied().fold(f64::INFINITY, f64::min);
    let max = qualities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span.is_nan() || span <= 0.0 {
        return RelevanceVector(vec![0.0; qualities.len()]);
    }
    RelevanceVector(
        qualities
            .iter()
            .map(|q| ((q - min) / span).clamp(0.0, 1.0))
            .collect(),
    )
}

fn check_depth(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("depth k={k} outside 1..={n}")));
    }
    Ok(())
}

fn gain(rel: f64) -> f64 {
    rel.exp2() - 1.0
}

// 1 / log2(position + 1) for 1-based positions
fn discount(pos: usize) -> f64 {
    1.0 / ((pos + 1) as f64).log2()
}

fn dcg_of(order: &[usize], rel: &[f64], k: usize) -> f64 {
    order[..k]
        .iter()
        .enumerate()
        .map(|(i, &item)| gain(rel[item]) * discount(i + 1))
        .sum()
}

/// `DCG_k = Σ_{i=1}^{k} (2^{rel_i} − 1) / log2(i + 1)`.
pub fn dcg(ranking: &Ranking, rel: &RelevanceVector, k: usize) -> Result<f64> {
    check_aligned(ranking, rel)?;
    check_depth(k, ranking.len())?;
    Ok(dcg_of(ranking.order(), rel.values(), k))
}

/// DCG of the relevance-sorted ranking (descending, ties by ascending index).
pub fn idcg(rel: &RelevanceVector, k: usize) -> Result<f64> {
    check_depth(k, rel.len())?;
    let ideal = ideal_order(rel.values());
    Ok(dcg_of(&ideal, rel.values(), k))
}

pub(crate) fn ideal_order(rel: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rel.len()).collect();
    order.sort_by(|&a, &b| rel[b].total_cmp(&rel[a]).then(a.cmp(&b)));
    order
}

/// `nDCG_k = DCG_k / IDCG_k`, defined as 1 when `IDCG_k = 0`.
pub fn ndcg(ranking: &Ranking, rel: &RelevanceVector, k: usize) -> Result<f64> {
    let ideal = idcg(rel, k)?;
    let actual = dcg(ranking, rel, k)?;
    Ok(ndcg_from(actual, ideal))
}

pub(crate) fn ndcg_from(actual: f64, ideal: f64) -> f64 {
    if ideal <= 0.0 {
        1.0
    } else {
        (actual / ideal).min(1.0)
    }
}

/// Precomputed IDCG for repeated full-depth nDCG evaluation.
#[derive(Debug, Clone)]
pub(crate) struct NdcgEvaluator<'a> {
    rel: &'a [f64],
    ideal: f64,
}

impl<'a> NdcgEvaluator<'a> {
    pub(crate) fn new(rel: &'a RelevanceVector) -> Self {
        let ideal = dcg_of(&ideal_order(rel.values()), rel.values(), rel.len());
        NdcgEvaluator {
            rel: rel.values(),
            ideal,
        }
    }

    pub(crate) fn full_depth(&self, order: &[usize]) -> f64 {
        ndcg_from(dcg_of(order, self.rel, order.len()), self.ideal)
    }
}

fn check_aligned(ranking: &Ranking, rel: &RelevanceVector) -> Result<()> {
    if ranking.len() != rel.len() {
        return Err(Error::invalid(format!(
            "ranking has {} items but relevance vector has {}",
            ranking.len(),
            rel.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_based(order: &[usize]) -> Ranking {
        Ranking::new(order.iter().map(|i| i - 1).collect(), order.len()).unwrap()
    }

    #[test]
    fn worked_normalization() {
        let rel = normalize_relevance(&[11.0, 5.0, 3.0, 2.0, 1.0]);
        let expected = [1.0, 0.4, 0.2, 0.1, 0.0];
        for (a, b) in rel.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_qualities_all_zero() {
        assert_eq!(
            normalize_relevance(&[7.0, 7.0, 7.0]).values(),
            &[0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn affine_invariance() {
        let q = [4.0, 1.0, 9.0, 2.5];
        let t: Vec<f64> = q.iter().map(|x| 3.0 * x + 5.0).collect();
        let a = normalize_relevance(&q);
        let b = normalize_relevance(&t);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn worked_dcg_and_ndcg() {
        let rel = normalize_relevance(&[11.0, 5.0, 3.0, 2.0, 1.0]);
        let l1 = one_based(&[1, 2, 3, 5, 4]);
        let l2 = one_based(&[4, 1, 2, 3, 5]);
        assert!((dcg(&l1, &rel, 5).unwrap() - 1.304).abs() < 2e-3);
        assert!((dcg(&l2, &rel, 5).unwrap() - 0.927).abs() < 2e-3);
        assert!((idcg(&rel, 5).unwrap() - 1.307).abs() < 2e-3);
        assert!((ndcg(&l1, &rel, 5).unwrap() - 0.998).abs() < 2e-3);
        assert!((ndcg(&l2, &rel, 5).unwrap() - 0.709).abs() < 2e-3);
    }

    #[test]
    fn zero_relevance() {
        let rel = RelevanceVector::new(vec![0.0; 4]).unwrap();
        let r = Ranking::new(vec![3, 1, 0, 2], 4).unwrap();
        assert_eq!(dcg(&r, &rel, 4).unwrap(), 0.0);
        assert_eq!(ndcg(&r, &rel, 4).unwrap(), 1.0);
    }

    #[test]
    fn ideal_ranking_scores_one() {
        let rel = normalize_relevance(&[2.0, 9.0, 4.0, 4.0, 0.0]);
        let r = Ranking::new(ideal_order(rel.values()), 5).unwrap();
        for k in 1..=5 {
            assert_eq!(ndcg(&r, &rel, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn depth_out_of_range() {
        let rel = normalize_relevance(&[1.0, 2.0]);
        let r = Ranking::identity(2);
        assert!(dcg(&r, &rel, 0).is_err());
        assert!(ndcg(&r, &rel, 3).is_err());
    }
}
