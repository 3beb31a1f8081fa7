use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{argsort, encode, hypervolume_2d, FrontMetadata, Objectives, TradeoffFront};
use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;
use crate::quality::RelevanceVector;
use crate::ranking::{greedy_diverse, Ranking};

/// NSGA-II parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    /// Even, at least 4.
    pub pop_size: usize,
    pub generations: usize,
    pub p_crossover: f64,
    /// Per-gene probability of resampling from `U[0, 1]`.
    pub p_mutation: f64,
    pub seed: u64,
    /// Depth of the rank-diversity sum; `None` = all items.
    pub horizon: Option<usize>,
    /// Build the final front from every evaluated ranking instead of the last population.
    pub archive_all: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            pop_size: 500,
            generations: 1000,
            p_crossover: 0.8,
            p_mutation: 0.01,
            seed: 42,
            horizon: None,
            archive_all: false,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 4 || !self.pop_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "population size must be even and at least 4, got {}",
                self.pop_size
            )));
        }
        for (name, p) in [
            ("crossover", self.p_crossover),
            ("mutation", self.p_mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!(
                    "{name} probability must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.horizon == Some(0) {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        Ok(())
    }
}

/// `a` dominates `b` under minimization.
pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Deb's fast non-dominated sort. Returns fronts of indices, best first;
/// indices within a front are ascending.
pub fn fast_non_dominated_sort(objs: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for p in 0..n {
        for q in (p + 1)..n {
            if dominates(&objs[p], &objs[q]) {
                dominated_by[p].push(q);
                count[q] += 1;
            } else if dominates(&objs[q], &objs[p]) {
                dominated_by[q].push(p);
                count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                count[q] -= 1;
                if count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of `front` (aligned with `front`).
/// Boundary points get infinity.
#[allow(clippy::needless_range_loop)]
pub fn crowding_distance(front: &[usize], objs: &[[f64; 2]]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            objs[front[a]][obj]
                .total_cmp(&objs[front[b]][obj])
                .then(front[a].cmp(&front[b]))
        });
        let lo = objs[front[order[0]]][obj];
        let hi = objs[front[order[m - 1]]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..m - 1 {
                let gap = objs[front[order[w + 1]]][obj] - objs[front[order[w - 1]]][obj];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

#[derive(Debug, Clone)]
struct Individual {
    genes: Vec<f64>,
    order: Vec<usize>,
    objs: [f64; 2],
    rank: usize,
    crowding: f64,
}

struct Evaluator<'a> {
    objectives: Objectives<'a>,
    cache: HashMap<Vec<usize>, [f64; 2]>,
}

impl Evaluator<'_> {
    /// Decode and score genotypes. Unseen rankings are scored in parallel;
    /// the result does not depend on thread count.
    fn evaluate(&mut self, genes: Vec<Vec<f64>>) -> Vec<Individual> {
        let orders: Vec<Vec<usize>> = genes.par_iter().map(|g| argsort(g)).collect();
        let mut fresh: Vec<&Vec<usize>> = Vec::new();
        {
            let mut pending = std::collections::HashSet::new();
            for o in &orders {
                if !self.cache.contains_key(o) && pending.insert(o) {
                    fresh.push(o);
                }
            }
        }
        let scored: Vec<[f64; 2]> = fresh
            .par_iter()
            .map(|o| self.objectives.evaluate_order(o))
            .collect();
        for (o, s) in fresh.into_iter().zip(scored) {
            self.cache.insert(o.clone(), s);
        }
        genes
            .into_iter()
            .zip(orders)
            .map(|(genes, order)| Individual {
                objs: self.cache[&order],
                genes,
                order,
                rank: 0,
                crowding: 0.0,
            })
            .collect()
    }
}

/// Assign rank and crowding to everyone, then keep `size` survivors
/// (whole fronts first, the last front by descending crowding, ties by index).
fn survive(mut pop: Vec<Individual>, size: usize) -> Vec<Individual> {
    let objs: Vec<[f64; 2]> = pop.iter().map(|i| i.objs).collect();
    let fronts = fast_non_dominated_sort(&objs);
    let mut keep = Vec::with_capacity(size);
    for (rank, front) in fronts.iter().enumerate() {
        let crowd = crowding_distance(front, &objs);
        for (&i, &c) in front.iter().zip(&crowd) {
            pop[i].rank = rank;
            pop[i].crowding = c;
        }
        if keep.len() + front.len() <= size {
            keep.extend(front.iter().copied());
        } else if keep.len() < size {
            let mut by_crowd: Vec<usize> = (0..front.len()).collect();
            by_crowd.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(front[a].cmp(&front[b])));
            keep.extend(
                by_crowd
                    .into_iter()
                    .take(size - keep.len())
                    .map(|w| front[w]),
            );
        }
    }
    let mut slots: Vec<Option<Individual>> = pop.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| slots[i].take().expect("kept once"))
        .collect()
}

fn tournament<'p>(pop: &'p [Individual], rng: &mut ChaCha8Rng) -> &'p Individual {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if b.rank < a.rank || (b.rank == a.rank && b.crowding > a.crowding) {
        b
    } else {
        a
    }
}

/// Fixed normalization for the per-generation hypervolume log.
struct HvScale {
    d_lo: f64,
    d_span: f64,
}

impl HvScale {
    fn point(&self, f: &[f64; 2]) -> [f64; 2] {
        [f[0], (f[1] - self.d_lo) / self.d_span]
    }
}

/// Non-dominated objective pairs seen so far.
#[derive(Default)]
struct Archive(Vec<[f64; 2]>);

impl Archive {
    fn insert(&mut self, f: [f64; 2]) {
        if self.0.iter().any(|a| dominates(a, &f) || *a == f) {
            return;
        }
        self.0.retain(|a| !dominates(&f, a));
        self.0.push(f);
    }

    fn hypervolume(&self, scale: &HvScale) -> f64 {
        let pts: Vec<[f64; 2]> = self.0.iter().map(|f| scale.point(f)).collect();
        hypervolume_2d(&pts, [1.1, 1.1])
    }
}

/// Run NSGA-II over ranking genotypes and return the final trade-off front.
///
/// Generation 0 is uniform random except for the encoded greedy-diversity and
/// quality-sort rankings. Each generation draws `pop_size / 2` parent pairs by
/// binary tournament on (rank, crowding), applies uniform crossover with
/// probability `p_crossover` (each gene swapped with probability 0.5) and
/// per-gene uniform mutation, then keeps the best `pop_size` of parents plus
/// offspring. All random draws come from one ChaCha8 stream seeded by
/// `config.seed`.
pub fn evolve(
    kernel: &SimilarityKernel,
    rel: &RelevanceVector,
    config: &EvolveConfig,
) -> Result<TradeoffFront> {
    config.validate()?;
    let n = kernel.n();
    if n < 2 {
        return Err(Error::invalid("need at least 2 items"));
    }
    let mut evaluator = Evaluator {
        objectives: Objectives::new(kernel, rel, config.horizon)?,
        cache: HashMap::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut genes: Vec<Vec<f64>> = (0..config.pop_size)
        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    genes[0] = encode(&greedy_diverse(kernel, Some(rel))).genes().to_vec();
    genes[1] = encode(&crate::ranking::quality_sort(rel.values()))
        .genes()
        .to_vec();
    let mut pop = survive(evaluator.evaluate(genes), config.pop_size);

    let (d_lo, d_hi) = pop
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            (lo.min(i.objs[1]), hi.max(i.objs[1]))
        });
    let scale = HvScale {
        d_lo,
        d_span: if d_hi > d_lo { d_hi - d_lo } else { 1.0 },
    };
    let mut archive = Archive::default();
    for ind in &pop {
        archive.insert(ind.objs);
    }
    let mut hypervolume = vec![archive.hypervolume(&scale)];

    for _ in 0..config.generations {
        let mut children = Vec::with_capacity(config.pop_size);
        for _ in 0..config.pop_size / 2 {
            let mut a = tournament(&pop, &mut rng).genes.clone();
            let mut b = tournament(&pop, &mut rng).genes.clone();
            if rng.gen::<f64>() < config.p_crossover {
                for g in 0..n {
                    if rng.gen_bool(0.5) {
                        std::mem::swap(&mut a[g], &mut b[g]);
                    }
                }
            }
            for child in [&mut a, &mut b] {
                for gene in child.iter_mut() {
                    if rng.gen::<f64>() < config.p_mutation {
                        *gene = rng.gen::<f64>();
                    }
                }
            }
            children.push(a);
            children.push(b);
        }
        let offspring = evaluator.evaluate(children);
        for ind in &offspring {
            archive.insert(ind.objs);
        }
        pop.extend(offspring);
        pop = survive(pop, config.pop_size);
        hypervolume.push(archive.hypervolume(&scale));
    }

    let metadata = FrontMetadata {
        seed: config.seed,
        generations: config.generations,
        pop_size: config.pop_size,
        p_crossover: config.p_crossover,
        p_mutation: config.p_mutation,
        horizon: config.horizon,
        archive_all: config.archive_all,
        evaluations: evaluator.cache.len(),
        hypervolume,
        item_ids: kernel.ids().to_vec(),
        qualities: None,
    };
    let candidates: Vec<(Ranking, [f64; 2])> = if config.archive_all {
        evaluator
            .cache
            .into_iter()
            .map(|(o, f)| (Ranking::from_vec_unchecked(o), f))
            .collect()
    } else {
        pop.into_iter()
            .map(|i| (Ranking::from_vec_unchecked(i.order), i.objs))
            .collect()
    };
    Ok(TradeoffFront::from_candidates(candidates, metadata))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance() {
        assert!(dominates(&[0.0, 0.0], &[0.0, 1.0]));
        assert!(!dominates(&[0.0, 1.0], &[0.0, 1.0]));
        assert!(!dominates(&[0.0, 1.0], &[1.0, 0.0]));
    }

    #[test]
    fn sort_fronts() {
        let objs = [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.5, 0.5]];
        let fronts = fast_non_dominated_sort(&objs);
        assert_eq!(fronts, vec![vec![0, 1, 4], vec![2], vec![3]]);
    }

    #[test]
    fn crowding_boundaries_infinite() {
        let objs = [[0.0, 1.0], [0.25, 0.75], [0.5, 0.5], [1.0, 0.0]];
        let d = crowding_distance(&[0, 1, 2, 3], &objs);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert!((d[1] - 1.0).abs() < 1e-12);
        assert!((d[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = EvolveConfig {
            pop_size: 3,
            ..EvolveConfig::default()
        };
        assert!(c.validate().is_err());
        c.pop_size = 2;
        assert!(c.validate().is_err());
        c.pop_size = 4;
        assert!(c.validate().is_ok());
        c.p_mutation = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn survivors_prefer_first_front() {
        let mk = |objs: [f64; 2]| Individual {
            genes: vec![],
            order: vec![],
            objs,
            rank: 0,
            crowding: 0.0,
        };
        let pop = vec![
            mk([2.0, 2.0]),
            mk([0.0, 1.0]),
            mk([1.0, 0.0]),
            mk([0.5, 0.5]),
        ];
        let kept = survive(pop, 2);
        let objs: Vec<[f64; 2]> = kept.iter().map(|i| i.objs).collect();
        assert_eq!(objs, vec![[0.0, 1.0], [1.0, 0.0]]);
    }
}
