//! Cluster partitions for the clustering-based diversity measure: seeded
//! k-means and external label files.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diversity::ClusterPartition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: ClusterPartition,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn sse(&self) -> f64 {
        self.sse_history.last().copied().unwrap_or(0.0)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, m)| (c, sq_dist(p, m)))
        .fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// A cluster that loses all its points is re-seeded with the point lying
/// farthest from its current centroid.
pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeansResult> {
    let n = points.len();
    let k = config.k;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the number of points ({n})"
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("all points must have the same dimension"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // k-means++
    let mut centroids: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(&mut rng),
            Err(_) => {
                return Err(Error::invalid(format!(
                    "k = {k} exceeds the number of distinct points"
                )))
            }
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }

    let mut labels = vec![0usize; n];
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut sse = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            labels[i] = c;
            sse += d;
        }
        sse_history.push(sse);

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&labels) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            let updated = if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centroids[c])
                            .total_cmp(&sq_dist(&points[b], &centroids[c]))
                            .then(b.cmp(&a))
                    })
                    .expect("non-empty");
                points[far].clone()
            } else {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            };
            shift = shift.max(sq_dist(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        if shift < config.tol || iterations >= config.max_iter {
            break;
        }
    }
    // final assignment against the last centroids
    let mut sse = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (c, d) = nearest(p, &centroids);
        labels[i] = c;
        sse += d;
    }
    sse_history.push(sse);

    Ok(KMeansResult {
        partition: ClusterPartition::new(labels, k)?,
        centroids,
        sse_history,
        iterations,
    })
}

/// Read a labels CSV (`id,label`) and align it with `corpus_ids`.
pub fn read_labels<R: Read>(
    reader: R,
    corpus_ids: &[String],
    origin: &str,
) -> Result<ClusterPartition> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::format(origin, e.to_string()))?;
        let id = record.get(0).unwrap_or_default().to_string();
        let raw = record.get(1).unwrap_or_default().trim();
        let label: usize = raw.parse().map_err(|_| {
            Error::format(
                origin,
                format!("row {}: label `{raw}` is not a non-negative integer", r + 1),
            )
        })?;
        if by_id.insert(id.clone(), label).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    let mut labels = Vec::with_capacity(corpus_ids.len());
    for id in corpus_ids {
        match by_id.remove(id) {
            Some(l) => labels.push(l),
            None => {
                return Err(Error::invalid(format!(
                    "labels file has no entry for id `{id}`"
                )))
            }
        }
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(Error::invalid(format!(
            "labels file has unknown id `{extra}`"
        )));
    }
    ClusterPartition::from_labels(labels)
}

pub fn load_labels(path: &Path, corpus_ids: &[String]) -> Result<ClusterPartition> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_labels(raw.as_slice(), corpus_ids, &path.display().to_string())
}

pub fn write_labels<W: std::io::Write>(
    ids: &[String],
    partition: &ClusterPartition,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| Error::format("labels", e.to_string());
    wtr.write_record(["id", "label"]).map_err(map)?;
    for (id, l) in ids.iter().zip(partition.labels()) {
        wtr.write_record([id.as_str(), &l.to_string()])
            .map_err(map)?;
    }
    wtr.flush().map_err(|e| Error::io("labels", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::gaussian_blobs;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn k_equals_n() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 5.0],
            vec![3.0, 3.0],
        ];
        let r = kmeans(&pts, &KMeansConfig::new(4, 1)).unwrap();
        assert_eq!(r.sse(), 0.0);
        let mut l = r.partition.labels().to_vec();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3]);
    }

    #[test]
    fn separated_blobs_recovered() {
        let blobs = gaussian_blobs(&[vec![0.0, 0.0], vec![10.0, 0.0]], 40, 1.0, 3);
        let r = kmeans(&blobs.points, &KMeansConfig::new(2, 11)).unwrap();
        let l = r.partition.labels();
        for (i, &truth) in blobs.labels.iter().enumerate() {
            // same-blob points share a label, different blobs differ
            assert_eq!(l[i] == l[0], truth == blobs.labels[0]);
        }
    }

    #[test]
    fn deterministic_and_sse_non_increasing() {
        let blobs = gaussian_blobs(
            &[vec![0.0, 0.0], vec![4.0, 1.0], vec![1.0, 5.0]],
            30,
            1.5,
            9,
        );
        let a = kmeans(&blobs.points, &KMeansConfig::new(3, 5)).unwrap();
        let b = kmeans(&blobs.points, &KMeansConfig::new(3, 5)).unwrap();
        assert_eq!(a.partition, b.partition);
        for w in a.sse_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", a.sse_history);
        }
    }

    #[test]
    fn k_too_large() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(kmeans(&pts, &KMeansConfig::new(3, 0)).is_err());
        let dup = vec![vec![0.0], vec![0.0], vec![0.0]];
        assert!(kmeans(&dup, &KMeansConfig::new(2, 0)).is_err());
    }

    #[test]
    fn labels_file() {
        let raw = "id,label\np1,1\np0,0\np2,1\n";
        let p = read_labels(raw.as_bytes(), &ids(3), "m").unwrap();
        assert_eq!(p.labels(), &[0, 1, 1]);
        assert_eq!(p.k(), 2);
    }

    #[test]
    fn labels_missing_extra_duplicate_noncontiguous() {
        let err = read_labels("id,label\np0,0\np1,0\n".as_bytes(), &ids(3), "m").unwrap_err();
        assert!(err.to_string().contains("p2"));
        let err = read_labels("id,label\np0,0\np1,0\nzz,0\n".as_bytes(), &ids(2), "m").unwrap_err();
        assert!(err.to_string().contains("zz"));
        assert!(read_labels("id,label\np0,0\np0,1\n".as_bytes(), &ids(2), "m").is_err());
        let err = read_labels("id,label\np0,0\np1,2\n".as_bytes(), &ids(2), "m").unwrap_err();
        assert_eq!(err.to_string(), "labels must be contiguous from 0");
    }

    #[test]
    fn fifteen_gold_clusters() {
        let centers: Vec<Vec<f64>> = (0..15).map(|c| vec![c as f64 * 10.0, 0.0]).collect();
        let blobs = gaussian_blobs(&centers, 4, 1.0, 0);
        let mut buf = Vec::new();
        let p = ClusterPartition::from_labels(blobs.labels.clone()).unwrap();
        write_labels(&blobs.ids, &p, &mut buf).unwrap();
        let back = read_labels(buf.as_slice(), &blobs.ids, "m").unwrap();
        assert_eq!(back.k(), 15);
    }
}
