//! Positive semi-definite similarity kernels.

use std::collections::HashSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Tolerance for symmetry and unit-diagonal checks.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Smallest eigenvalue still considered positive semi-definite.
pub const PSD_TOL: f64 = -1e-8;

/// A dense `n × n` similarity matrix with row ids.
///
/// Construction only checks shape and finiteness. Symmetry, unit diagonal
/// and positive semi-definiteness are reported by [`validate`], so that
/// externally supplied near-PSD kernels can still be used.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityKernel {
    ids: Vec<String>,
    entries: Vec<f64>,
}

impl SimilarityKernel {
    /// `entries` is row-major, length `ids.len()²`.
    pub fn new(ids: Vec<String>, entries: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::invalid("kernel must have at least one item"));
        }
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "kernel with {n} ids needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "kernel entry ({}, {}) is not finite",
                pos / n,
                pos % n
            )));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(SimilarityKernel { ids, entries })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != ids.len() || rows.iter().any(|r| r.len() != ids.len()) {
            return Err(Error::invalid("kernel rows must form a square matrix"));
        }
        Self::new(ids, rows.concat())
    }

    /// Kernel with generated ids `0..n`.
    pub fn from_rows_unnamed(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(default_ids(rows.len()), rows)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        SimilarityKernel {
            ids: default_ids(n),
            entries,
        }
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.ids.len() + j]
    }

    /// Symmetrized entry `(L_ij + L_ji) / 2`.
    #[inline]
    pub fn sym(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.get(i, i)
        } else {
            0.5 * (self.get(i, j) + self.get(j, i))
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Restriction `L_S` to the given indices, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Vec<Vec<f64>> {
        indices
            .iter()
            .map(|&i| indices.iter().map(|&j| self.get(i, j)).collect())
            .collect()
    }

    /// Relabel items: position `p` of the result holds old item `order[p]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        crate::ranking::Ranking::new(order.to_vec(), self.n())?;
        let ids = order.iter().map(|&i| self.ids[i].clone()).collect();
        let entries = order
            .iter()
            .flat_map(|&i| order.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Ok(SimilarityKernel { ids, entries })
    }

    /// Reorder rows/columns to follow `ids`. Fails unless `ids` is a permutation of the kernel's ids.
    pub fn aligned_to(&self, ids: &[String]) -> Result<Self> {
        if ids == self.ids.as_slice() {
            return Ok(self.clone());
        }
        if ids.len() != self.n() {
            return Err(Error::invalid(format!(
                "kernel has {} items but corpus has {}",
                self.n(),
                ids.len()
            )));
        }
        let order = ids
            .iter()
            .map(|id| {
                self.ids
                    .iter()
                    .position(|k| k == id)
                    .ok_or_else(|| Error::invalid(format!("id `{id}` missing from kernel")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.permuted(&order)
    }
}

fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Cosine similarity of the corpus TF-IDF rows.
pub fn cosine_kernel(corpus: &Corpus) -> Result<SimilarityKernel> {
    let rows = corpus
        .tfidf()
        .ok_or_else(|| Error::invalid("corpus is not vectorized"))?;
    if let Some(i) = rows.iter().position(|r| r.is_empty()) {
        return Err(Error::invalid(format!(
            "item `{}` has an all-zero TF-IDF vector; cosine similarity is undefined",
            corpus.items()[i].id
        )));
    }
    let n = rows.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = sparse_dot(&rows[i], &rows[j]).clamp(-1.0, 1.0);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    SimilarityKernel::new(corpus.ids(), entries)
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Bandwidth for [`rbf_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma {
    Fixed(f64),
    /// Median pairwise Euclidean distance.
    Median,
}

impl std::str::FromStr for Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(Sigma::Median);
        }
        s.parse::<f64>()
            .map(Sigma::Fixed)
            .map_err(|_| Error::invalid(format!("sigma must be a number or `median`, got `{s}`")))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of all pairwise Euclidean distances (mean of the two middle values for even counts).
pub fn median_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut d: Vec<f64> = (0..points.len())
        .flat_map(|i| ((i + 1)..points.len()).map(move |j| (i, j)))
        .map(|(i, j)| sq_dist(&points[i], &points[j]).sqrt())
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    if d.len() % 2 == 1 {
        d[m]
    } else {
        0.5 * (d[m - 1] + d[m])
    }
}

/// Radial basis function kernel `exp(-‖x_i - x_j‖² / (2σ²))`.
pub fn rbf_kernel(ids: Vec<String>, points: &[Vec<f64>], sigma: Sigma) -> Result<SimilarityKernel> {
    if points.len() < 2 {
        return Err(Error::invalid("rbf kernel needs at least 2 points"));
    }
    if ids.len() != points.len() {
        return Err(Error::invalid("one id per point required"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("all points must have the same dimension"));
    }
    let sigma = match sigma {
        Sigma::Fixed(s) => s,
        Sigma::Median => median_pairwise_distance(points),
    };
    if sigma.is_nan() || sigma <= 0.0 || sigma.is_infinite() {
        return Err(Error::invalid(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let n = points.len();
    let denom = 2.0 * sigma * sigma;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        entries[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = (-sq_dist(&points[i], &points[j]) / denom).exp();
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    SimilarityKernel::new(ids, entries)
}

/// Structural diagnostics for a kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub symmetric: bool,
    pub unit_diagonal: bool,
    pub entries_in_range: bool,
    pub psd: bool,
    pub min_eigenvalue: f64,
}

impl KernelReport {
    pub fn is_valid(&self) -> bool {
        self.symmetric && self.unit_diagonal && self.entries_in_range && self.psd
    }
}

/// Check symmetry, unit diagonal, entry range and PSD-ness (smallest eigenvalue of
/// the symmetrized matrix ≥ −1e-8).
pub fn validate(kernel: &SimilarityKernel) -> KernelReport {
    let n = kernel.n();
    let mut symmetric = true;
    let mut unit_diagonal = true;
    for i in 0..n {
        if (kernel.get(i, i) - 1.0).abs() > STRUCTURE_TOL {
            unit_diagonal = false;
        }
        for j in (i + 1)..n {
            if (kernel.get(i, j) - kernel.get(j, i)).abs() > STRUCTURE_TOL {
                symmetric = false;
            }
        }
    }
    let entries_in_range = kernel.entries().iter().all(|v| (-1.0..=1.0).contains(v));
    let sym = DMatrix::from_fn(n, n, |i, j| kernel.sym(i, j));
    let min_eigenvalue = sym
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    KernelReport {
        symmetric,
        unit_diagonal,
        entries_in_range,
        psd: min_eigenvalue >= PSD_TOL,
        min_eigenvalue,
    }
}

/// Parse a kernel CSV: header `ids,<id1>,...`, then one `<id>,<v>,...` row per item.
pub fn read_kernel<R: Read>(reader: R, origin: &str) -> Result<SimilarityKernel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| Error::format(origin, "empty kernel file"))?
        .map_err(|e| Error::format(origin, e.to_string()))?;
    if header.len() < 2 {
        return Err(Error::format(
            origin,
            "header must be `ids,<id1>,<id2>,...`",
        ));
    }
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = ids.len();
    let mut entries = Vec::with_capacity(n * n);
    let mut row_count = 0;
    for (r, record) in records.enumerate() {
        let record = record.map_err(|e| Error::format(origin, e.to_string()))?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != n + 1 {
            return Err(Error::format(
                origin,
                format!(
                    "kernel is not square: row {} has {} values, expected {n}",
                    r + 1,
                    record.len() - 1
                ),
            ));
        }
        if row_count >= n {
            return Err(Error::format(
                origin,
                format!("kernel is not square: more than {n} rows"),
            ));
        }
        if record[0] != ids[row_count] {
            return Err(Error::format(
                origin,
                format!(
                    "row {} id `{}` does not match column id `{}`",
                    r + 1,
                    &record[0],
                    ids[row_count]
                ),
            ));
        }
        for field in record.iter().skip(1) {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(origin, format!("row {}: `{field}` is not a number", r + 1))
            })?;
            if v.is_nan() {
                return Err(Error::format(origin, format!("row {}: NaN entry", r + 1)));
            }
            entries.push(v);
        }
        row_count += 1;
    }
    if row_count != n {
        return Err(Error::format(
            origin,
            format!("kernel is not square: {row_count} rows for {n} columns"),
        ));
    }
    SimilarityKernel::new(ids, entries).map_err(|e| Error::format(origin, e.to_string()))
}

/// Write a kernel CSV. Values use the shortest representation that parses
/// back to the same `f64`, so save/load round-trips exactly.
pub fn write_kernel<W: Write>(kernel: &SimilarityKernel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| Error::format("kernel", e.to_string());
    let mut header = vec!["ids".to_string()];
    header.extend(kernel.ids().iter().cloned());
    wtr.write_record(&header).map_err(map)?;
    for i in 0..kernel.n() {
        let mut rec = vec![kernel.ids()[i].clone()];
        rec.extend(kernel.row(i).iter().map(|v| format!("{v:?}")));
        wtr.write_record(&rec).map_err(map)?;
    }
    wtr.flush().map_err(|e| Error::io("kernel", e))
}

pub fn load_kernel(path: &Path) -> Result<SimilarityKernel> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_kernel(std::io::BufReader::new(file), &path.display().to_string())
}

/// Load, then require every structural invariant when `strict` is set.
pub fn load_kernel_checked(path: &Path, strict: bool) -> Result<SimilarityKernel> {
    let kernel = load_kernel(path)?;
    if strict {
        let report = validate(&kernel);
        if !report.is_valid() {
            return Err(Error::Numerical(format!(
                "{}: kernel failed validation (symmetric={}, unit_diagonal={}, in_range={}, psd={}, min_eigenvalue={:e})",
                path.display(),
                report.symmetric,
                report.unit_diagonal,
                report.entries_in_range,
                report.psd,
                report.min_eigenvalue
            )));
        }
    }
    Ok(kernel)
}

pub fn save_kernel(kernel: &SimilarityKernel, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_kernel(kernel, std::io::BufWriter::new(file))
}

/// Read a points CSV with header `id,x1,...,xd`.
pub fn read_points<R: Read>(reader: R, origin: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut ids = Vec::new();
    let mut points = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::format(origin, e.to_string()))?;
        ids.push(record.get(0).unwrap_or_default().to_string());
        let p = record
            .iter()
            .skip(1)
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::format(origin, format!("row {}: `{f}` is not a number", r + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(p);
    }
    Ok((ids, points))
}

pub fn load_points(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_points(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn write_points<W: Write>(ids: &[String], points: &[Vec<f64>], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let map = |e: csv::Error| Error::format("points", e.to_string());
    let dim = points.first().map_or(0, Vec::len);
    let mut header = vec!["id".to_string()];
    header.extend((1..=dim).map(|d| format!("x{d}")));
    wtr.write_record(&header).map_err(map)?;
    for (id, p) in ids.iter().zip(points) {
        let mut rec = vec![id.clone()];
        rec.extend(p.iter().map(|v| format!("{v:?}")));
        wtr.write_record(&rec).map_err(map)?;
    }
    wtr.flush().map_err(|e| Error::io("points", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Item};

    fn intro_kernel() -> SimilarityKernel {
        SimilarityKernel::from_rows_unnamed(&[
            vec![1.0, 0.61, 0.0, 0.0],
            vec![0.61, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap()
    }

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Item {
                    id: format!("d{i}"),
                    title: String::new(),
                    text: t.to_string(),
                    quality: 1.0,
                })
                .collect(),
        )
        .unwrap()
        .vectorize()
        .unwrap()
    }

    #[test]
    fn cosine_identical_and_orthogonal() {
        let c = corpus(&[
            "solar panel roof",
            "solar panel roof",
            "bicycle lane city",
            "river water filter",
        ]);
        let k = cosine_kernel(&c).unwrap();
        assert_eq!(k.get(0, 1), 1.0);
        assert_eq!(k.get(0, 2), 0.0);
        assert_eq!(k.get(2, 3), 0.0);
        assert!(validate(&k).is_valid());
    }

    #[test]
    fn cosine_rejects_zero_row() {
        let c = corpus(&["solar panel", "bicycle lane", "the of and"]);
        let err = cosine_kernel(&c).unwrap_err();
        assert!(err.to_string().contains("d2"));
    }

    #[test]
    fn rbf_coincident_and_analytic() {
        let ids = vec!["a".into(), "b".into()];
        let k = rbf_kernel(
            ids.clone(),
            &[vec![1.0, 2.0], vec![1.0, 2.0]],
            Sigma::Fixed(0.5),
        )
        .unwrap();
        assert_eq!(k.get(0, 1), 1.0);

        let sigma = 1.7;
        let d = sigma * 2f64.sqrt();
        let k = rbf_kernel(ids, &[vec![0.0], vec![d]], Sigma::Fixed(sigma)).unwrap();
        assert!((k.get(0, 1) - (-1f64).exp()).abs() < 1e-12);
        assert!((k.get(0, 1) - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn rbf_collinear() {
        let ids = vec!["a".into(), "b".into(), "c".into()];
        let k = rbf_kernel(ids, &[vec![0.0], vec![2.0], vec![4.0]], Sigma::Fixed(2.0)).unwrap();
        let e05 = (-0.5f64).exp();
        let e2 = (-2f64).exp();
        let expected = [[1.0, e05, e2], [e05, 1.0, e05], [e2, e05, 1.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                assert!((k.get(i, j) - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rbf_rejects_bad_sigma() {
        let ids = vec!["a".into(), "b".into()];
        assert!(rbf_kernel(ids.clone(), &[vec![0.0], vec![1.0]], Sigma::Fixed(0.0)).is_err());
        assert!(rbf_kernel(ids.clone(), &[vec![0.0], vec![1.0]], Sigma::Fixed(-1.0)).is_err());
        // all points coincide → median distance 0
        assert!(rbf_kernel(ids, &[vec![0.0], vec![0.0]], Sigma::Median).is_err());
    }

    #[test]
    fn median_heuristic() {
        // pairwise distances 1, 2, 3 → median 2
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        assert_eq!(median_pairwise_distance(&pts), 2.0);
    }

    #[test]
    fn validate_examples() {
        let r = validate(&SimilarityKernel::identity(5));
        assert!(r.psd && r.is_valid());
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);

        let r = validate(
            &SimilarityKernel::from_rows_unnamed(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap(),
        );
        assert!(!r.psd);
        assert!(!r.entries_in_range);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);

        let r = validate(&intro_kernel());
        assert!(r.psd);
        assert!((r.min_eigenvalue - 0.39).abs() < 1e-12);
    }

    #[test]
    fn validate_flags_asymmetry() {
        let k = SimilarityKernel::from_rows_unnamed(&[vec![1.0, 0.2], vec![0.3, 1.0]]).unwrap();
        let r = validate(&k);
        assert!(!r.symmetric);
        assert!(r.unit_diagonal);
    }

    #[test]
    fn csv_round_trip() {
        let k = SimilarityKernel::identity(3);
        let mut buf = Vec::new();
        write_kernel(&k, &mut buf).unwrap();
        let back = read_kernel(buf.as_slice(), "mem").unwrap();
        assert_eq!(k, back);
    }

    #[test]
    fn csv_round_trip_awkward_values() {
        let v = 0.1 + 0.2;
        let k = SimilarityKernel::new(
            vec!["x,1".into(), "y".into()],
            vec![1.0, v, v, 1.0 - f64::EPSILON],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_kernel(&k, &mut buf).unwrap();
        assert_eq!(read_kernel(buf.as_slice(), "mem").unwrap(), k);
    }

    #[test]
    fn csv_shape_errors() {
        let raw = "ids,a,b,c\na,1,0,0\nb,0,1,0\n";
        assert!(read_kernel(raw.as_bytes(), "m")
            .unwrap_err()
            .to_string()
            .contains("square"));
        let raw = "ids,a,b\na,1,0,0\nb,0,1\n";
        assert!(read_kernel(raw.as_bytes(), "m").is_err());
        let raw = "ids,a,b\na,1,NaN\nb,0,1\n";
        assert!(read_kernel(raw.as_bytes(), "m").is_err());
    }

    #[test]
    fn permutation_relabels_consistently() {
        let k = intro_kernel();
        let p = k.permuted(&[2, 0, 3, 1]).unwrap();
        assert_eq!(p.ids(), &["2", "0", "3", "1"]);
        assert_eq!(p.get(1, 3), 0.61);
        let back = p.aligned_to(k.ids()).unwrap();
        assert_eq!(back, k);
    }
}
