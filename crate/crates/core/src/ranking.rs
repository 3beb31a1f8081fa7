//! Rankings and the polynomial-time ranking constructors: greedy DPP
//! diversity, quality sort, MMR and seeded random permutations.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cholesky::PIVOT_FLOOR;
use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;
use crate::quality::RelevanceVector;

/// A permutation of item indices `0..N`; position 0 is the top of the list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    pub fn new(order: Vec<usize>, n: usize) -> Result<Self> {
        if order.len() != n {
            return Err(Error::invalid(format!(
                "ranking has {} entries, expected {n}",
                order.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!(
                    "ranking is not a permutation of 0..{n} (offending entry {i})"
                )));
            }
        }
        Ok(Ranking(order))
    }

    pub fn identity(n: usize) -> Self {
        Ranking((0..n).collect())
    }

    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(Ranking::new(order.clone(), order.len()).is_ok());
        Ranking(order)
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Position of every item (`positions()[item] = rank`).
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (p, &i) in self.0.iter().enumerate() {
            pos[i] = p;
        }
        pos
    }
}

/// Items in descending `score`, ties by ascending index.
fn sorted_desc(indices: impl Iterator<Item = usize>, score: &[f64]) -> Vec<usize> {
    let mut v: Vec<usize> = indices.collect();
    v.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    v
}

/// Descending quality, ties by ascending index.
pub fn quality_sort(qualities: &[f64]) -> Ranking {
    Ranking(sorted_desc(0..qualities.len(), qualities))
}

/// Greedy DPP diversity ranking.
///
/// Seeds with the pair of least absolute off-diagonal similarity (ties →
/// lexicographically smallest pair), then repeatedly appends the item with
/// the largest incremental Cholesky pivot, i.e. the one maximizing
/// `det(L_{A ∪ {i}})` (ties → smallest index). Once every remaining pivot is
/// below the floor the rest is appended by descending relevance when `rel`
/// is given, otherwise by index.
pub fn greedy_diverse(kernel: &SimilarityKernel, rel: Option<&RelevanceVector>) -> Ranking {
    let n = kernel.n();
    if n == 1 {
        return Ranking::identity(1);
    }

    let mut seed = (0, 1);
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = kernel.sym(i, j).abs();
            if s < best {
                best = s;
                seed = (i, j);
            }
        }
    }

    let mut state = GreedyState {
        kernel,
        c: vec![Vec::new(); n],
        d2: (0..n).map(|i| kernel.get(i, i)).collect(),
        chosen: vec![false; n],
        order: Vec::with_capacity(n),
    };
    let mut alive = state.select(seed.0) && state.select(seed.1);
    while alive {
        let mut pick = None;
        let mut best = f64::NEG_INFINITY;
        for j in 0..n {
            if !state.chosen[j] && state.d2[j] > best {
                best = state.d2[j];
                pick = Some(j);
            }
        }
        alive = match pick {
            Some(j) if best >= PIVOT_FLOOR => state.select(j),
            _ => false,
        };
    }

    let GreedyState {
        chosen, mut order, ..
    } = state;
    let remaining = (0..n).filter(|&i| !chosen[i]);
    let tail: Vec<usize> = match rel {
        Some(rel) => sorted_desc(remaining, rel.values()),
        None => remaining.collect(),
    };
    order.extend(tail);
    Ranking(order)
}

// Fast greedy MAP bookkeeping: c[i] is the factor row item i would receive,
// d2[i] its squared pivot given the current selection.
struct GreedyState<'k> {
    kernel: &'k SimilarityKernel,
    c: Vec<Vec<f64>>,
    d2: Vec<f64>,
    chosen: Vec<bool>,
    order: Vec<usize>,
}

impl GreedyState<'_> {
    /// Append `item`; false when its pivot is below the floor (nothing further can be factored).
    fn select(&mut self, item: usize) -> bool {
        self.chosen[item] = true;
        self.order.push(item);
        let pivot2 = self.d2[item];
        if pivot2 < PIVOT_FLOOR {
            return false;
        }
        let pivot = pivot2.sqrt();
        let ci = std::mem::take(&mut self.c[item]);
        for j in 0..self.chosen.len() {
            if self.chosen[j] {
                continue;
            }
            let dot: f64 = ci.iter().zip(&self.c[j]).map(|(a, b)| a * b).sum();
            let e = (self.kernel.sym(item, j) - dot) / pivot;
            self.c[j].push(e);
            self.d2[j] -= e * e;
        }
        true
    }
}

/// Maximal marginal relevance: start from the most relevant item, then append
/// `argmax λ·rel_i − (1 − λ)·max_{j selected} L_ij`; ties → smallest index.
pub fn mmr(kernel: &SimilarityKernel, rel: &RelevanceVector, lambda: f64) -> Result<Ranking> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let n = kernel.n();
    if rel.len() != n {
        return Err(Error::invalid("relevance vector and kernel sizes differ"));
    }
    let r = rel.values();
    let mut chosen = vec![false; n];
    let mut max_sim = vec![f64::NEG_INFINITY; n];
    let mut order = Vec::with_capacity(n);
    for step in 0..n {
        let mut pick = 0;
        let mut best = f64::NEG_INFINITY;
        for i in (0..n).filter(|&i| !chosen[i]) {
            let score = if step == 0 {
                lambda * r[i]
            } else {
                lambda * r[i] - (1.0 - lambda) * max_sim[i]
            };
            if score > best {
                best = score;
                pick = i;
            }
        }
        chosen[pick] = true;
        order.push(pick);
        for (i, m) in max_sim.iter_mut().enumerate() {
            *m = m.max(kernel.get(i, pick));
        }
    }
    Ok(Ranking(order))
}

/// `count` independent uniform permutations of `0..n` (Fisher–Yates on a ChaCha8 stream).
pub fn random_rankings(n: usize, count: usize, seed: u64) -> Vec<Ranking> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v: Vec<usize> = (0..n).collect();
            v.shuffle(&mut rng);
            Ranking(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::normalize_relevance;

    fn intro() -> SimilarityKernel {
        SimilarityKernel::from_rows_unnamed(&[
            vec![1.0, 0.61, 0.0, 0.0],
            vec![0.61, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    fn one_based(r: &Ranking) -> Vec<usize> {
        r.order().iter().map(|i| i + 1).collect()
    }

    #[test]
    fn ranking_validation() {
        assert!(Ranking::new(vec![0, 0], 2).is_err());
        assert!(Ranking::new(vec![0, 2], 2).is_err());
        assert!(Ranking::new(vec![0], 2).is_err());
        assert_eq!(
            Ranking::new(vec![2, 0, 1], 3).unwrap().positions(),
            vec![1, 2, 0]
        );
    }

    #[test]
    fn greedy_intro() {
        assert_eq!(one_based(&greedy_diverse(&intro(), None)), vec![1, 3, 4, 2]);
    }

    #[test]
    fn greedy_identity() {
        let r = greedy_diverse(&SimilarityKernel::identity(4), None);
        assert_eq!(r.order(), &[0, 1, 2, 3]);
    }

    #[test]
    fn greedy_duplicate_goes_last() {
        // item 3 duplicates item 0
        let k = SimilarityKernel::from_rows_unnamed(&[
            vec![1.0, 0.3, 0.2, 1.0],
            vec![0.3, 1.0, 0.1, 0.3],
            vec![0.2, 0.1, 1.0, 0.2],
            vec![1.0, 0.3, 0.2, 1.0],
        ])
        .unwrap();
        let r = greedy_diverse(&k, None);
        assert_eq!(r.order(), &[1, 2, 0, 3]);
        // appending the duplicate floors the pivot
        let mut chol = crate::cholesky::IncrementalCholesky::new(&k);
        for &i in &r.order()[..3] {
            chol.push(i);
        }
        assert_eq!(chol.push(3), PIVOT_FLOOR);
    }

    #[test]
    fn greedy_tail_by_quality() {
        // all items identical: after the seed pair everything is floor-tied
        let k = SimilarityKernel::from_rows_unnamed(&vec![vec![1.0; 4]; 4]).unwrap();
        let rel = normalize_relevance(&[1.0, 2.0, 5.0, 3.0]);
        let r = greedy_diverse(&k, Some(&rel));
        assert_eq!(r.order(), &[0, 1, 2, 3]);
        let k = SimilarityKernel::from_rows_unnamed(&[
            vec![1.0, 0.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 1.0],
        ])
        .unwrap();
        let r = greedy_diverse(&k, Some(&rel));
        assert_eq!(r.order(), &[0, 1, 2, 3]);
        let rel = normalize_relevance(&[1.0, 2.0, 3.0, 5.0]);
        let r = greedy_diverse(&k, Some(&rel));
        assert_eq!(r.order(), &[0, 1, 3, 2]);
    }

    #[test]
    fn quality_sort_examples() {
        assert_eq!(
            one_based(&quality_sort(&[20.0, 12.0, 9.0, 3.0])),
            vec![1, 2, 3, 4]
        );
        assert_eq!(
            one_based(&quality_sort(&[3.0, 2.0, 7.0, 8.0, 6.0])),
            vec![4, 3, 5, 1, 2]
        );
        assert_eq!(quality_sort(&[1.0; 5]), Ranking::identity(5));
    }

    #[test]
    fn mmr_relevance_limit() {
        let q = [3.0, 2.0, 7.0, 8.0, 6.0];
        let rel = normalize_relevance(&q);
        let k = SimilarityKernel::from_rows_unnamed(&[
            vec![1.0, 0.1, 0.2, 0.3, 0.0],
            vec![0.1, 1.0, 0.0, 0.2, 0.1],
            vec![0.2, 0.0, 1.0, 0.9, 0.2],
            vec![0.3, 0.2, 0.9, 1.0, 0.1],
            vec![0.0, 0.1, 0.2, 0.1, 1.0],
        ])
        .unwrap();
        assert_eq!(mmr(&k, &rel, 1.0).unwrap(), quality_sort(&q));
    }

    #[test]
    fn mmr_zero_lambda_intro() {
        let rel = normalize_relevance(&[20.0, 12.0, 9.0, 3.0]);
        let r = mmr(&intro(), &rel, 0.0).unwrap();
        assert_eq!(r.order()[0], 0);
        // step 2 scores: item 1 → -0.61, items 2 and 3 → 0
        assert_ne!(r.order()[1], 1);
        assert_eq!(one_based(&r), vec![1, 3, 4, 2]);
    }

    #[test]
    fn mmr_rejects_bad_lambda() {
        let rel = normalize_relevance(&[1.0, 2.0, 3.0, 4.0]);
        assert!(mmr(&intro(), &rel, 1.5).is_err());
    }

    #[test]
    fn random_rankings_deterministic() {
        let a = random_rankings(10, 5, 7);
        assert_eq!(a, random_rankings(10, 5, 7));
        assert_ne!(a, random_rankings(10, 5, 8));
        assert_eq!(random_rankings(1, 1, 0), vec![Ranking::identity(1)]);
        for r in &a {
            assert!(Ranking::new(r.order().to_vec(), 10).is_ok());
        }
    }
}
