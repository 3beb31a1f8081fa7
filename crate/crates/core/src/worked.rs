//! Worked examples with published reference values, checked end to end.

use crate::clustering::{read_labels, write_labels};
use crate::corpus::{ingest_str, InputFormat};
use crate::diversity::{det_s, div1, ClusterPartition, ItemSet};
use crate::error::Result;
use crate::kernel::SimilarityKernel;
use crate::moo::{decode, evolve, EvolveConfig, Genotype};
use crate::quality::{dcg, ndcg, normalize_relevance};
use crate::ranking::{quality_sort, Ranking};
use crate::synthetic::{fifteen_blob_centers, gaussian_blobs};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

fn num(name: &str, expected: f64, actual: f64, tol: f64) -> Check {
    Check {
        name: name.to_string(),
        expected: format!("{expected} ± {tol:e}"),
        actual: format!("{actual:.6}"),
        pass: (expected - actual).abs() <= tol,
    }
}

fn list<T: PartialEq + std::fmt::Debug>(name: &str, expected: T, actual: T) -> Check {
    Check {
        name: name.to_string(),
        expected: format!("{expected:?}"),
        actual: format!("{actual:?}"),
        pass: expected == actual,
    }
}

fn one_based(r: &Ranking) -> Vec<usize> {
    r.order().iter().map(|i| i + 1).collect()
}

pub const INTRO_JSONL: &str = r#"{"id":"1","title":"Community compost","text":"Neighbours share a compost bin and turn food scraps into compost for local gardens","quality":20}
{"id":"2","title":"Compost at school","text":"Schools collect lunch scraps to compost and use the compost in school gardens","quality":12}
{"id":"3","title":"Harvest food festival","text":"A seasonal festival where local farmers cook and sell fresh produce","quality":9}
{"id":"4","title":"Online web community","text":"A website where growers trade tips and organize swaps online","quality":3}
"#;

/// Unit diagonal, `L_12 = 0.61`, all other entries 0.
pub fn intro_kernel() -> SimilarityKernel {
    SimilarityKernel::from_rows(
        (1..=4).map(|i| i.to_string()).collect(),
        &[
            vec![1.0, 0.61, 0.0, 0.0],
            vec![0.61, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ],
    )
    .expect("valid kernel")
}

/// Three items, each contributing exactly 1 under the square root of its cluster.
fn idealized(labels: [usize; 3]) -> Result<f64> {
    let size = |c: usize| labels.iter().filter(|&&l| l == c).count() as f64;
    let rows: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    if labels[i] == labels[j] {
                        9.0 / size(labels[i])
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let kernel = SimilarityKernel::from_rows_unnamed(&rows)?;
    let partition = ClusterPartition::from_labels(labels.to_vec())?;
    div1(&ItemSet::new(vec![0, 1, 2], 3)?, &kernel, &partition)
}

/// Five items rated `[3, 2, 7, 8, 6]`; items 3 and 4 are near duplicates.
pub fn five_item_kernel() -> SimilarityKernel {
    let mut rows = vec![vec![0.0; 5]; 5];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    rows[2][3] = 0.9;
    rows[3][2] = 0.9;
    SimilarityKernel::from_rows((1..=5).map(|i| i.to_string()).collect(), &rows)
        .expect("valid kernel")
}

/// Run every worked example.
pub fn checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let corpus = ingest_str(INTRO_JSONL, InputFormat::Jsonl, "intro")?;
    out.push(list(
        "intro corpus qualities",
        vec![20.0, 12.0, 9.0, 3.0],
        corpus.qualities(),
    ));
    let cos = crate::kernel::cosine_kernel(&corpus.vectorize()?)?;
    let strongest = (0..4)
        .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
        .max_by(|a, b| cos.get(a.0, a.1).total_cmp(&cos.get(b.0, b.1)))
        .expect("pairs");
    out.push(list(
        "intro cosine: most similar pair",
        (1, 2),
        (strongest.0 + 1, strongest.1 + 1),
    ));

    out.push(num(
        "div1 one cluster",
        3f64.sqrt(),
        idealized([0, 0, 0])?,
        1e-9,
    ));
    out.push(num(
        "div1 two clusters",
        1.0 + 2f64.sqrt(),
        idealized([0, 0, 1])?,
        1e-9,
    ));
    out.push(num("div1 three clusters", 3.0, idealized([0, 1, 2])?, 1e-9));

    let k = intro_kernel();
    out.push(num(
        "det L_{1,2}",
        0.6279,
        det_s(&ItemSet::new(vec![0, 1], 4)?, &k),
        1e-6,
    ));
    out.push(num(
        "det L_{1,3}",
        1.0,
        det_s(&ItemSet::new(vec![0, 2], 4)?, &k),
        1e-9,
    ));

    let rel = normalize_relevance(&[11.0, 5.0, 3.0, 2.0, 1.0]);
    out.push(list(
        "relevance normalization",
        vec![1.0, 0.4, 0.2, 0.1, 0.0],
        rel.values().to_vec(),
    ));
    let list1 = Ranking::new(vec![0, 1, 2, 4, 3], 5)?;
    let list2 = Ranking::new(vec![3, 0, 1, 2, 4], 5)?;
    out.push(num("DCG_5 list 1", 1.304, dcg(&list1, &rel, 5)?, 0.002));
    out.push(num("DCG_5 list 2", 0.927, dcg(&list2, &rel, 5)?, 0.002));
    out.push(num("nDCG_5 list 1", 0.998, ndcg(&list1, &rel, 5)?, 0.002));
    out.push(num("nDCG_5 list 2", 0.709, ndcg(&list2, &rel, 5)?, 0.002));

    out.push(list(
        "quality sort 20,12,9,3",
        vec![1, 2, 3, 4],
        one_based(&quality_sort(&[20.0, 12.0, 9.0, 3.0])),
    ));
    let ratings = [3.0, 2.0, 7.0, 8.0, 6.0];
    out.push(list(
        "quality sort 3,2,7,8,6",
        vec![4, 3, 5, 1, 2],
        one_based(&quality_sort(&ratings)),
    ));

    let x2 = Genotype::new(vec![0.8, 0.2, 0.1, 0.4, 0.0])?;
    out.push(list(
        "decode x2",
        vec![5, 3, 2, 4, 1],
        one_based(&decode(&x2)),
    ));

    let rel = normalize_relevance(&ratings);
    let config = EvolveConfig {
        pop_size: 20,
        generations: 30,
        seed: 7,
        ..EvolveConfig::default()
    };
    let front = evolve(&five_item_kernel(), &rel, &config)?;
    let quality_end = &front.points[0];
    out.push(list(
        "five-item front: quality extreme",
        vec![4, 3, 5, 1, 2],
        one_based(&quality_end.ranking),
    ));
    let diversity_end = front.points.last().expect("non-empty front");
    let top3 = &diversity_end.ranking.order()[..3];
    let adjacent = top3
        .windows(2)
        .any(|w| (w[0] == 2 && w[1] == 3) || (w[0] == 3 && w[1] == 2));
    out.push(list(
        "five-item front: items 3,4 not adjacent in diverse top 3",
        false,
        adjacent,
    ));

    let blobs = gaussian_blobs(&fifteen_blob_centers(), 4, 0.5, 0);
    let mut buf = Vec::new();
    write_labels(
        &blobs.ids,
        &ClusterPartition::from_labels(blobs.labels.clone())?,
        &mut buf,
    )?;
    let gold = read_labels(buf.as_slice(), &blobs.ids, "gold")?;
    out.push(list("fifteen-cluster labels file", 15, gold.k()));

    Ok(out)
}
