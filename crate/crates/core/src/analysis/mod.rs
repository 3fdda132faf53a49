//! Per-structure accuracy versus amino-acid composition: correlations,
//! significance, the positive/negative/neutral partition and histograms.

pub mod stats;

use serde::{Deserialize, Serialize};

use crate::amino::{AminoAcid, NUM_CLASSES};
pub use stats::{incomplete_beta, ln_gamma, pearson_r, significance_p, student_t_two_tailed, Significance, StatsError};

/// Significance threshold separating the positive and negative groups from
/// the neutral one.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// One predicted site: which structure it belongs to, the predicted class and
/// the true class (both as class indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SitePrediction {
    pub structure: String,
    pub predicted: usize,
    pub truth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureResult {
    pub id: String,
    pub sites: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Fraction of sites of each true class; sums to 1.
    pub content: [f64; NUM_CLASSES],
}

/// Groups sites by structure (first-appearance order) and scores each group.
/// Ids listed in `declared` that have no sites are returned separately so
/// the caller can warn about them.
pub fn per_structure_accuracy(sites: &[SitePrediction], declared: &[String]) -> (Vec<StructureResult>, Vec<String>) {
    let mut order: Vec<String> = Vec::new();
    let mut tallies: Vec<(usize, [usize; NUM_CLASSES])> = Vec::new();
    for s in sites {
        let i = match order.iter().position(|id| *id == s.structure) {
            Some(i) => i,
            None => {
                order.push(s.structure.clone());
                tallies.push((0, [0; NUM_CLASSES]));
                order.len() - 1
            }
        };
        tallies[i].0 += usize::from(s.predicted == s.truth);
        tallies[i].1[s.truth] += 1;
    }
    let results = order
        .into_iter()
        .zip(tallies)
        .map(|(id, (correct, hist))| {
            let n: usize = hist.iter().sum();
            StructureResult {
                id,
                sites: n,
                correct,
                accuracy: correct as f64 / n as f64,
                content: hist.map(|h| h as f64 / n as f64),
            }
        })
        .collect::<Vec<_>>();
    let empty = declared
        .iter()
        .filter(|d| !results.iter().any(|r| &r.id == *d))
        .cloned()
        .collect();
    (results, empty)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Positive,
    Negative,
    Neutral,
}

/// `p < alpha` with `r > 0` is positive, `p < alpha` with `r < 0` negative,
/// anything else (including undefined correlations) neutral.
pub fn classify(r: Option<f64>, p: Option<f64>, alpha: f64) -> Group {
    match (r, p) {
        (Some(r), Some(p)) if p < alpha && r > 0.0 => Group::Positive,
        (Some(r), Some(p)) if p < alpha && r < 0.0 => Group::Negative,
        _ => Group::Neutral,
    }
}

pub fn classify_amino_acids(r: &[f64; NUM_CLASSES], p: &[f64; NUM_CLASSES], alpha: f64) -> [Group; NUM_CLASSES] {
    std::array::from_fn(|i| classify(Some(r[i]), Some(p[i]), alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AminoCorrelation {
    pub class: AminoAcid,
    /// `None` when the content or the accuracy has zero variance.
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub boundary: bool,
    pub group: Group,
}

/// Correlation of each amino acid's content with per-structure accuracy.
pub fn amino_correlations(structures: &[StructureResult], alpha: f64) -> Result<Vec<AminoCorrelation>, StatsError> {
    let acc: Vec<f64> = structures.iter().map(|s| s.accuracy).collect();
    AminoAcid::ALL
        .iter()
        .map(|&aa| {
            let content: Vec<f64> = structures.iter().map(|s| s.content[aa.index()]).collect();
            let (r, p, boundary) = match pearson_r(&content, &acc) {
                Ok(r) => {
                    let s = significance_p(r, structures.len())?;
                    (Some(r), Some(s.p), s.boundary)
                }
                Err(StatsError::ZeroVariance) => (None, None, false),
                Err(e) => return Err(e),
            };
            Ok(AminoCorrelation {
                class: aa,
                r,
                p,
                boundary,
                group: classify(r, p, alpha),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCorrelation {
    pub group: Group,
    pub members: Vec<AminoAcid>,
    /// `None` (with `skipped` set) when the summed content has zero
    /// variance, for example because the group is empty.
    pub r: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub id: String,
    pub accuracy: f64,
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
}

impl ScatterRow {
    fn content(&self, g: Group) -> f64 {
        match g {
            Group::Positive => self.positive,
            Group::Negative => self.negative,
            Group::Neutral => self.neutral,
        }
    }
}

/// Summed content of each group per structure, and the correlation of each
/// group's content with accuracy.
pub fn grouped_content_correlation(
    structures: &[StructureResult],
    partition: &[Group; NUM_CLASSES],
) -> Result<(Vec<GroupCorrelation>, Vec<ScatterRow>), StatsError> {
    let scatter: Vec<ScatterRow> = structures
        .iter()
        .map(|s| {
            let sum = |g: Group| (0..NUM_CLASSES).filter(|&i| partition[i] == g).map(|i| s.content[i]).sum();
            ScatterRow {
                id: s.id.clone(),
                accuracy: s.accuracy,
                positive: sum(Group::Positive),
                negative: sum(Group::Negative),
                neutral: sum(Group::Neutral),
            }
        })
        .collect();
    let acc: Vec<f64> = scatter.iter().map(|r| r.accuracy).collect();
    let groups = [Group::Positive, Group::Negative, Group::Neutral]
        .into_iter()
        .map(|g| {
            let members = AminoAcid::ALL.iter().copied().filter(|a| partition[a.index()] == g).collect();
            let content: Vec<f64> = scatter.iter().map(|r| r.content(g)).collect();
            match pearson_r(&content, &acc) {
                Ok(r) => Ok(GroupCorrelation {
                    group: g,
                    members,
                    r: Some(r),
                    skipped: None,
                }),
                Err(e @ StatsError::ZeroVariance) => Ok(GroupCorrelation {
                    group: g,
                    members,
                    r: None,
                    skipped: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((groups, scatter))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extreme {
    pub id: String,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyHistogram {
    pub bin_width: f64,
    /// `counts[i]` covers `[i·w, (i+1)·w)`; the last bin also holds 1.0.
    pub counts: Vec<usize>,
    pub best: Extreme,
    pub worst: Extreme,
}

/// Bins per-structure accuracy over [0, 1]. Returns `None` without
/// structures. Ties for best and worst go to the earlier structure.
pub fn accuracy_histogram(structures: &[StructureResult], bin_width: f64) -> Option<AccuracyHistogram> {
    assert!(bin_width > 0.0 && bin_width <= 1.0, "bin width must lie in (0, 1]");
    let first = structures.first()?;
    let bins = (1.0 / bin_width).round().max(1.0) as usize;
    let mut counts = vec![0; bins];
    // A small slack keeps values such as 0.7 out of the bin below when
    // 0.7 / 0.01 lands a hair under 70.
    for s in structures {
        let i = ((s.accuracy / bin_width) + 1e-9).floor() as usize;
        counts[i.min(bins - 1)] += 1;
    }
    let (mut best, mut worst) = (first, first);
    for s in structures {
        if s.accuracy > best.accuracy {
            best = s;
        }
        if s.accuracy < worst.accuracy {
            worst = s;
        }
    }
    let ext = |s: &StructureResult| Extreme {
        id: s.id.clone(),
        accuracy: s.accuracy,
    };
    Some(AccuracyHistogram {
        bin_width,
        counts,
        best: ext(best),
        worst: ext(worst),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub structures: usize,
    pub alpha: f64,
    pub amino_acids: Vec<AminoCorrelation>,
    pub groups: Vec<GroupCorrelation>,
    pub histogram: Option<AccuracyHistogram>,
    pub excluded_structures: Vec<String>,
}

/// Runs the whole composition study over a set of site predictions.
pub fn analyze(sites: &[SitePrediction], alpha: f64, bin_width: f64) -> Result<(CorrelationReport, Vec<StructureResult>, Vec<ScatterRow>), StatsError> {
    let (structures, excluded) = per_structure_accuracy(sites, &[]);
    let amino_acids = amino_correlations(&structures, alpha)?;
    let partition: [Group; NUM_CLASSES] = std::array::from_fn(|i| amino_acids[i].group);
    let (groups, scatter) = grouped_content_correlation(&structures, &partition)?;
    let report = CorrelationReport {
        structures: structures.len(),
        alpha,
        amino_acids,
        groups,
        histogram: accuracy_histogram(&structures, bin_width),
        excluded_structures: excluded,
    };
    Ok((report, structures, scatter))
}
