//! Randomized invariant suites shared by the `properties` and `acceptance` targets.
#![allow(dead_code)]

use divrank::analysis::{det_curve, top_k_persistence};
use divrank::corpus::{Corpus, Item};
use divrank::diversity::{div1_with_size, log_det_s, ClusterPartition, ItemSet};
use divrank::kernel::{cosine_kernel, rbf_kernel, validate, Sigma, SimilarityKernel};
use divrank::moo::{
    decode, encode, evolve, EvolveConfig, FrontMetadata, FrontPoint, Genotype, TradeoffFront,
};
use divrank::quality::{ndcg, normalize_relevance, RelevanceVector};
use divrank::ranking::{greedy_diverse, mmr, quality_sort, random_rankings, Ranking};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 128;

pub struct Suite {
    pub name: &'static str,
    pub run: fn() -> Result<(), String>,
}

pub fn suites() -> Vec<Suite> {
    vec![
        Suite {
            name: "det in [0,1] and prefix monotone",
            run: det_bounds_and_prefix_monotone,
        },
        Suite {
            name: "log-det submodular on jittered kernels",
            run: log_det_submodular,
        },
        Suite {
            name: "div1 monotone and submodular",
            run: div1_monotone_submodular,
        },
        Suite {
            name: "nDCG in [0,1], equal to 1 iff rel-sorted",
            run: ndcg_bounds_and_ideal,
        },
        Suite {
            name: "rankings are valid permutations",
            run: permutations_valid,
        },
        Suite {
            name: "decode/encode round trip",
            run: genotype_round_trip,
        },
        Suite {
            name: "relevance normalization affine invariant",
            run: normalization_affine_invariant,
        },
        Suite {
            name: "kernels PSD with unit diagonal",
            run: kernels_psd,
        },
        Suite {
            name: "set diversity invariant to relabeling",
            run: relabeling_invariant,
        },
        Suite {
            name: "persistence frequencies balance",
            run: persistence_mass_balance,
        },
        Suite {
            name: "evolve independent of thread count",
            run: evolve_thread_independent,
        },
    ]
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

/// Gram matrix of normalized vectors with an exact unit diagonal.
fn gram(vectors: &[Vec<f64>]) -> SimilarityKernel {
    let unit: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / norm).collect()
        })
        .collect();
    let n = unit.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            rows[i][j] = if i == j {
                1.0
            } else {
                unit[i].iter().zip(&unit[j]).map(|(a, b)| a * b).sum()
            };
        }
    }
    SimilarityKernel::from_rows_unnamed(&rows).unwrap()
}

fn vectors(
    n: std::ops::Range<usize>,
    dim: std::ops::Range<usize>,
) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (n, dim).prop_flat_map(|(n, d)| {
        prop::collection::vec(
            prop::collection::vec(-1.0f64..1.0, d)
                .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6),
            n,
        )
    })
}

fn kernel_and_perm() -> impl Strategy<Value = (SimilarityKernel, Vec<usize>)> {
    vectors(2..14, 1..8).prop_flat_map(|v| {
        let n = v.len();
        (
            Just(gram(&v)),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}

/// `gram(v)` with off-diagonals shrunk by `1 / (1 + jitter)`: `L + εI` rescaled
/// back to unit diagonal, which is strictly positive definite.
fn jittered(v: &[Vec<f64>], jitter: f64) -> SimilarityKernel {
    let base = gram(v);
    let n = base.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        base.get(i, j) / (1.0 + jitter)
                    }
                })
                .collect()
        })
        .collect();
    SimilarityKernel::from_rows_unnamed(&rows).unwrap()
}

fn is_perm(r: &Ranking, n: usize) -> bool {
    let mut v = r.order().to_vec();
    v.sort_unstable();
    v == (0..n).collect::<Vec<_>>()
}

pub fn det_bounds_and_prefix_monotone() -> Result<(), String> {
    check(CASES, kernel_and_perm(), |(k, perm)| {
        let n = k.n();
        let curve = det_curve(&Ranking::new(perm, n).unwrap(), &k, n).unwrap();
        let mut prev = 1.0;
        for (_, d) in curve {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&d), "det {d}");
            prop_assert!(d <= prev + 1e-12, "{d} > {prev}");
            prev = d;
        }
        Ok(())
    })
}

pub fn log_det_submodular() -> Result<(), String> {
    let strategy = (vectors(3..12, 2..8), 0.05f64..0.5).prop_flat_map(|(v, jitter)| {
        let n = v.len();
        (
            Just(jittered(&v, jitter)),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            0..n,
            0..n,
        )
    });
    check(CASES, strategy, |(k, perm, a_len, b_extra)| {
        let n = k.n();
        // B = first a_len + b_extra of perm (capped), A = first a_len, i = last item of perm
        let i = perm[n - 1];
        let b_len = (a_len + b_extra).min(n - 1);
        let a_len = a_len.min(b_len);
        let set = |s: &[usize]| ItemSet::new(s.to_vec(), n).unwrap();
        let a = &perm[..a_len];
        let b = &perm[..b_len];
        let with = |s: &[usize]| {
            let mut v = s.to_vec();
            v.push(i);
            v
        };
        let ld = |s: &[usize]| {
            if s.is_empty() {
                0.0
            } else {
                log_det_s(&set(s), &k)
            }
        };
        let gain_a = ld(&with(a)) - ld(a);
        let gain_b = ld(&with(b)) - ld(b);
        prop_assert!(gain_a >= gain_b - 1e-9, "{gain_a} < {gain_b}");
        Ok(())
    })
}

pub fn div1_monotone_submodular() -> Result<(), String> {
    let strategy = (vectors(3..16, 1..4), 1usize..5).prop_flat_map(|(pts, k)| {
        let n = pts.len();
        (
            Just(pts),
            prop::collection::vec(0..k.min(n), n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            0..n,
            0..n,
        )
    });
    check(
        CASES,
        strategy,
        |(pts, raw_labels, perm, a_len, b_extra)| {
            let n = pts.len();
            let ids = (0..n).map(|i| i.to_string()).collect();
            let kernel = rbf_kernel(ids, &pts, Sigma::Fixed(1.0)).unwrap();
            // relabel to contiguous cluster ids
            let mut seen = Vec::new();
            let labels: Vec<usize> = raw_labels
                .iter()
                .map(|l| match seen.iter().position(|s| s == l) {
                    Some(p) => p,
                    None => {
                        seen.push(*l);
                        seen.len() - 1
                    }
                })
                .collect();
            let part = ClusterPartition::from_labels(labels).unwrap();
            let i = perm[n - 1];
            let b_len = (a_len + b_extra).min(n - 1);
            let a_len = a_len.min(b_len);
            let f = |s: &[usize]| {
                div1_with_size(&ItemSet::new(s.to_vec(), n).unwrap(), &kernel, &part, n).unwrap()
            };
            let with = |s: &[usize]| {
                let mut v = s.to_vec();
                v.push(i);
                v
            };
            let (a, b) = (&perm[..a_len], &perm[..b_len]);
            prop_assert!(f(a) <= f(b) + 1e-12, "not monotone");
            prop_assert!(
                f(&with(a)) - f(a) >= f(&with(b)) - f(b) - 1e-12,
                "not submodular"
            );
            Ok(())
        },
    )
}

pub fn ndcg_bounds_and_ideal() -> Result<(), String> {
    let strategy = prop::collection::vec(0u8..=10, 2..12).prop_flat_map(|grid| {
        let n = grid.len();
        (Just(grid), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    });
    check(CASES, strategy, |(grid, perm)| {
        let n = grid.len();
        let rel = RelevanceVector::new(grid.iter().map(|&g| g as f64 / 10.0).collect()).unwrap();
        let r = Ranking::new(perm.clone(), n).unwrap();
        let v = ndcg(&r, &rel, n).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "nDCG {v}");
        let sorted = perm.windows(2).all(|w| grid[w[0]] >= grid[w[1]]);
        prop_assert_eq!(
            (v - 1.0).abs() < 1e-12,
            sorted,
            "nDCG {} sorted {}",
            v,
            sorted
        );
        Ok(())
    })
}

pub fn permutations_valid() -> Result<(), String> {
    let strategy = (
        vectors(2..12, 1..6),
        prop::collection::vec(0.0f64..100.0, 12),
        0.0f64..=1.0,
        any::<u64>(),
    );
    check(CASES, strategy, |(v, q, lambda, seed)| {
        let n = v.len();
        let k = gram(&v);
        let q = &q[..n];
        let rel = normalize_relevance(q);
        prop_assert!(is_perm(&greedy_diverse(&k, None), n));
        prop_assert!(is_perm(&greedy_diverse(&k, Some(&rel)), n));
        prop_assert!(is_perm(&quality_sort(q), n));
        prop_assert!(is_perm(&mmr(&k, &rel, lambda).unwrap(), n));
        for r in random_rankings(n, 3, seed) {
            prop_assert!(is_perm(&r, n));
        }
        let genes = random_rankings(n, 1, seed)[0]
            .order()
            .iter()
            .map(|&i| i as f64 / n as f64)
            .collect();
        prop_assert!(is_perm(&decode(&Genotype::new(genes).unwrap()), n));
        Ok(())
    })
}

pub fn genotype_round_trip() -> Result<(), String> {
    let strategy = (2usize..40).prop_flat_map(|n| {
        (
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(0.0f64..=1.0, n),
        )
    });
    check(CASES, strategy, |(perm, genes)| {
        let n = perm.len();
        let r = Ranking::new(perm, n).unwrap();
        prop_assert_eq!(decode(&encode(&r)), r);
        let x = Genotype::new(genes).unwrap();
        let once = decode(&x);
        prop_assert_eq!(decode(&encode(&once)), once);
        Ok(())
    })
}

pub fn normalization_affine_invariant() -> Result<(), String> {
    let strategy = (
        prop::collection::vec(0.0f64..1000.0, 2..20),
        0.01f64..100.0,
        -100.0f64..100.0,
    );
    check(CASES, strategy, |(q, a, b)| {
        let base = normalize_relevance(&q);
        let moved: Vec<f64> = q.iter().map(|x| a * x + b).collect();
        let other = normalize_relevance(&moved);
        for (x, y) in base.values().iter().zip(other.values()) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        Ok(())
    })
}

const WORDS: [&str; 30] = [
    "apple", "river", "stone", "garden", "engine", "market", "violin", "planet", "candle",
    "harbor", "pencil", "forest", "ladder", "window", "silver", "meadow", "rocket", "bridge",
    "castle", "tunnel", "island", "mirror", "jacket", "pepper", "saddle", "tomato", "walnut",
    "yellow", "zipper", "orange",
];

pub fn kernels_psd() -> Result<(), String> {
    let docs = prop::collection::vec(prop::collection::vec(0usize..30, 3..15), 4..25);
    check(CASES, (docs, vectors(2..30, 1..6)), |(docs, pts)| {
        let items = docs
            .iter()
            .enumerate()
            .map(|(i, d)| Item {
                id: i.to_string(),
                title: String::new(),
                text: d.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" "),
                quality: 1.0,
            })
            .collect();
        let corpus = Corpus::new(items).unwrap().vectorize().unwrap();
        // an error means every term of some document was filtered out
        if let Ok(k) = cosine_kernel(&corpus) {
            prop_assert!(validate(&k).is_valid(), "{:?}", validate(&k));
        }
        let ids = (0..pts.len()).map(|i| i.to_string()).collect();
        // an error means all points coincide, so the median distance is 0
        if let Ok(k) = rbf_kernel(ids, &pts, Sigma::Median) {
            prop_assert!(validate(&k).is_valid(), "{:?}", validate(&k));
        }
        Ok(())
    })
}

pub fn relabeling_invariant() -> Result<(), String> {
    let strategy = (vectors(2..14, 1..8), 0.05f64..0.5).prop_flat_map(|(v, jitter)| {
        let n = v.len();
        (
            Just(jittered(&v, jitter)),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(any::<bool>(), n),
        )
    });
    check(CASES, strategy, |(k, perm, mask)| {
        let n = k.n();
        let set: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        prop_assume!(!set.is_empty());
        let moved = k.permuted(&perm).unwrap();
        // item perm[p] of the original sits at position p of `moved`
        let pos = Ranking::new(perm.clone(), n).unwrap().positions();
        let relabeled: Vec<usize> = set.iter().map(|&i| pos[i]).collect();
        let a = log_det_s(&ItemSet::new(set, n).unwrap(), &k);
        let b = log_det_s(&ItemSet::new(relabeled, n).unwrap(), &moved);
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        Ok(())
    })
}

pub fn persistence_mass_balance() -> Result<(), String> {
    let strategy = (2usize..30, 1usize..8, 1usize..12, any::<u64>());
    check(CASES, strategy, |(n, size, k, seed)| {
        let points = random_rankings(n, size, seed)
            .into_iter()
            .map(|ranking| FrontPoint {
                ranking,
                f_quality: 0.0,
                f_diversity: 0.0,
                norm_q: 0.0,
                norm_d: 0.0,
            })
            .collect();
        let front = TradeoffFront {
            points,
            metadata: FrontMetadata {
                seed,
                generations: 0,
                pop_size: 4,
                p_crossover: 0.8,
                p_mutation: 0.01,
                horizon: None,
                archive_all: false,
                evaluations: 0,
                hypervolume: vec![],
                item_ids: (0..n).map(|i| i.to_string()).collect(),
                qualities: None,
            },
        };
        let p = top_k_persistence(&front, k).unwrap();
        let k = k.min(n);
        let mass: f64 = p.frequency.values().map(|f| f * size as f64).sum();
        prop_assert!((mass - (k * size) as f64).abs() < 1e-9);
        prop_assert!(p.frequency.values().all(|&f| f > 0.0 && f <= 1.0));
        Ok(())
    })
}

pub fn evolve_thread_independent() -> Result<(), String> {
    let strategy = (
        vectors(3..9, 2..6),
        prop::collection::vec(0.0f64..50.0, 9),
        any::<u64>(),
    );
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    check(CASES, strategy, |(v, q, seed)| {
        let k = gram(&v);
        let rel = normalize_relevance(&q[..k.n()]);
        let config = EvolveConfig {
            pop_size: 8,
            generations: 4,
            seed,
            ..EvolveConfig::default()
        };
        let a = one.install(|| evolve(&k, &rel, &config)).unwrap();
        let b = four.install(|| evolve(&k, &rel, &config)).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        Ok(())
    })
}
