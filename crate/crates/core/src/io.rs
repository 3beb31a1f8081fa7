//! CSV readers and writers for rankings and analysis outputs.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::analysis::{AgreementReport, Persistence};
use crate::cholesky::IncrementalCholesky;
use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;
use crate::ranking::Ranking;

fn csv_err(origin: &str) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(origin, e.to_string())
}

/// `rank,id,quality,prefix_det` with 1-based ranks. `quality` is left empty
/// without qualities and `prefix_det` without a kernel.
pub fn write_ranking<W: Write>(
    ranking: &Ranking,
    ids: &[String],
    qualities: Option<&[f64]>,
    kernel: Option<&SimilarityKernel>,
    writer: W,
) -> Result<()> {
    if ids.len() != ranking.len() {
        return Err(Error::invalid("ranking and id list lengths differ"));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let map = csv_err("ranking");
    wtr.write_record(["rank", "id", "quality", "prefix_det"])
        .map_err(&map)?;
    let mut chol = kernel.map(|k| IncrementalCholesky::with_capacity(k, ranking.len()));
    for (p, &item) in ranking.order().iter().enumerate() {
        let det = chol
            .as_mut()
            .map(|c| {
                c.push(item);
                c.det().to_string()
            })
            .unwrap_or_default();
        let quality = qualities.map(|q| q[item].to_string()).unwrap_or_default();
        wtr.write_record([(p + 1).to_string(), ids[item].clone(), quality, det])
            .map_err(&map)?;
    }
    wtr.flush().map_err(|e| Error::io("ranking", e))
}

/// Read the `id` column of a ranking CSV and map it onto `ids`.
pub fn read_ranking<R: Read>(reader: R, ids: &[String], origin: &str) -> Result<Ranking> {
    let mut rdr = csv::Reader::from_reader(reader);
    let map = csv_err(origin);
    let col = rdr
        .headers()
        .map_err(&map)?
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| Error::format(origin, "missing `id` column"))?;
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut order = Vec::with_capacity(ids.len());
    for record in rdr.records() {
        let record = record.map_err(&map)?;
        let id = record.get(col).unwrap_or_default();
        let &i = index
            .get(id)
            .ok_or_else(|| Error::invalid(format!("ranking names unknown id `{id}`")))?;
        order.push(i);
    }
    Ranking::new(order, ids.len())
}

/// One `k,value` series.
pub fn write_series<W: Write>(series: &[(usize, f64)], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let map = csv_err("series");
    wtr.write_record(["k", "value"]).map_err(&map)?;
    for (k, v) in series {
        wtr.write_record([k.to_string(), v.to_string()])
            .map_err(&map)?;
    }
    wtr.flush().map_err(|e| Error::io("series", e))
}

/// `id,frequency`, most frequent first, ties by id.
pub fn write_persistence<W: Write>(p: &Persistence, ids: &[String], writer: W) -> Result<()> {
    let mut rows: Vec<(&str, f64)> = p
        .frequency
        .iter()
        .map(|(&i, &f)| (ids[i].as_str(), f))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let mut wtr = csv::Writer::from_writer(writer);
    let map = csv_err("persistence");
    wtr.write_record(["id", "frequency"]).map_err(&map)?;
    for (id, f) in rows {
        wtr.write_record([id, &f.to_string()]).map_err(&map)?;
    }
    wtr.flush().map_err(|e| Error::io("persistence", e))
}

pub fn write_agreement<W: Write>(report: &AgreementReport, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let map = csv_err("agreement");
    wtr.write_record(["method", "size", "agreement"])
        .map_err(&map)?;
    for r in &report.rows {
        wtr.write_record([
            r.method.clone(),
            r.size.to_string(),
            r.agreement.to_string(),
        ])
        .map_err(&map)?;
    }
    wtr.flush().map_err(|e| Error::io("agreement", e))
}
