//! Per-site prediction tables: the full 20-way distribution and the
//! ranked top-k view used when choosing substitutions.

use std::str::FromStr;

use thiserror::Error;

use crate::amino::{AminoAcid, NUM_CLASSES};
use crate::analysis::SitePrediction;
use crate::train::{argmax, ranked_classes};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredictionsError {
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub structure: String,
    pub chain: String,
    /// Residue number with any insertion code appended.
    pub seq: String,
    pub truth: AminoAcid,
    pub probs: Vec<f64>,
}

impl PredictionRow {
    /// Splits a `source/chain/seq` site id; ids without separators become the
    /// structure with empty chain and sequence fields.
    pub fn new(site_id: &str, truth: AminoAcid, probs: Vec<f64>) -> Self {
        let mut parts = site_id.rsplitn(3, '/');
        let (seq, chain, structure) = match (parts.next(), parts.next(), parts.next()) {
            (Some(seq), Some(chain), Some(structure)) => (seq, chain, structure),
            _ => ("", "", site_id),
        };
        PredictionRow {
            structure: structure.to_string(),
            chain: chain.to_string(),
            seq: seq.to_string(),
            truth,
            probs,
        }
    }

    pub fn predicted(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn site(&self) -> SitePrediction {
        SitePrediction {
            structure: self.structure.clone(),
            predicted: self.predicted(),
            truth: self.truth.index(),
        }
    }
}

fn csv_err(e: csv::Error) -> PredictionsError {
    PredictionsError::Csv(e.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

/// Columns `structure, chain, seq, true, p_ALA … p_VAL`, after `header`.
pub fn write_predictions_csv(rows: &[PredictionRow], header: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut cols = vec!["structure".to_string(), "chain".into(), "seq".into(), "true".into()];
    cols.extend(AminoAcid::ALL.iter().map(|a| format!("p_{}", a.three_letter())));
    w.write_record(&cols).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.structure.clone(), r.chain.clone(), r.seq.clone(), r.truth.three_letter().to_string()];
        rec.extend(r.probs.iter().map(|p| format!("{p:?}")));
        w.write_record(&rec).expect("in-memory write");
    }
    format!("{header}{}", finish(w))
}

/// `k` rows per site: rank (1-based), class and probability, most probable
/// first with ties to the lower class index.
pub fn write_topk_csv(rows: &[PredictionRow], k: usize, header: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["structure", "chain", "seq", "true", "rank", "class", "prob"])
        .expect("in-memory write");
    for r in rows {
        for (rank, &c) in ranked_classes(&r.probs).iter().take(k).enumerate() {
            let class = AminoAcid::from_index(c).expect("class index");
            w.write_record([
                r.structure.as_str(),
                &r.chain,
                &r.seq,
                r.truth.three_letter(),
                &(rank + 1).to_string(),
                class.three_letter(),
                &format!("{:?}", r.probs[c]),
            ])
            .expect("in-memory write");
        }
    }
    format!("{header}{}", finish(w))
}

/// Reads the table written by [`write_predictions_csv`]; `#` lines are
/// skipped.
pub fn read_predictions_csv(text: &str) -> Result<Vec<PredictionRow>, PredictionsError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.len() != 4 + NUM_CLASSES || &headers[3] != "true" {
        return Err(PredictionsError::Csv(format!(
            "expected structure,chain,seq,true and 20 probability columns, got {} columns",
            headers.len()
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| PredictionsError::Row { line, message };
        let truth = AminoAcid::from_str(&rec[3]).map_err(|_| bad(format!("unknown class {:?}", &rec[3])))?;
        let probs = (4..4 + NUM_CLASSES)
            .map(|i| {
                rec[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|p| p.is_finite())
                    .ok_or_else(|| bad(format!("malformed probability {:?}", &rec[i])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(PredictionRow {
            structure: rec[0].to_string(),
            chain: rec[1].to_string(),
            seq: rec[2].to_string(),
            truth,
            probs,
        });
    }
    Ok(out)
}
