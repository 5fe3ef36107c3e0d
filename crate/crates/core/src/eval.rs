// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Scoring detections against ground truth.
//!
//! Confusion counts are taken over the space of developer-function pairs
//! (target dev functions times candidate dev functions).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detection::DetectionResult;

pub const UNIVERSE: &str = "developer-function pairs";

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ground truth is for {truth_target} vs {truth_candidate}, result is for {result_target} vs {result_candidate}")]
    ProgramMismatch {
        truth_target: String,
        truth_candidate: String,
        result_target: String,
        result_candidate: String,
    },
    #[error("confusion counts ({0}) exceed the pair universe ({1})")]
    UniverseTooSmall(usize, usize),
    #[error("reduction ratio is undefined for an empty pair space")]
    EmptyPairSpace,
}

/// Labeled reused function pairs for one target/candidate pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub target: String,
    pub candidate: String,
    pub pairs: BTreeSet<(String, String)>,
}

#[derive(Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum TruthFile {
    Pairs {
        target: String,
        candidate: String,
        pairs: Vec<(String, String)>,
    },
    // functions keep their ids in both programs
    Project {
        target: String,
        candidate: String,
        reused_library_function_ids: Vec<String>,
    },
}

impl GroundTruth {
    pub fn new(
        target: impl Into<String>,
        candidate: impl Into<String>,
        pairs: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        GroundTruth {
            target: target.into(),
            candidate: candidate.into(),
            pairs: pairs.into_iter().collect(),
        }
    }

    /// Reads either the pair form `{target, candidate, pairs: [[t, c], ..]}`
    /// or the project form `{target, candidate, reused_library_function_ids:
    /// [..]}`. The project form labels every listed function as reused
    /// under the same id on both sides.
    pub fn from_json(text: &str) -> Result<Self, crate::SchemaError> {
        let file: TruthFile = crate::from_json_with_path(text)?;
        Ok(match file {
            TruthFile::Pairs {
                target,
                candidate,
                pairs,
            } => GroundTruth::new(target, candidate, pairs),
            TruthFile::Project {
                target,
                candidate,
                reused_library_function_ids,
            } => GroundTruth::new(
                target,
                candidate,
                reused_library_function_ids
                    .into_iter()
                    .map(|id| (id.clone(), id)),
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
    pub fnr: f64,
    /// Metrics whose denominator was zero; they are reported as 0.
    pub undefined: Vec<String>,
    pub universe: String,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let mut undefined = Vec::new();
        let mut ratio = |name: &str, num: usize, den: usize| {
            if den == 0 {
                undefined.push(name.to_string());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio("precision", tp, tp + fp);
        let recall = ratio("recall", tp, tp + fn_);
        // 2PR/(P+R) in integer form, exact when P and R are
        let f1 = ratio("f1", 2 * tp, 2 * tp + fp + fn_);
        let fpr = ratio("fpr", fp, fp + tn);
        let fnr = ratio("fnr", fn_, tp + fn_);
        Metrics {
            tp,
            tn,
            fp,
            fn_,
            precision,
            recall,
            f1,
            fpr,
            fnr,
            undefined,
            universe: UNIVERSE.to_string(),
        }
    }

    pub fn csv_header() -> &'static str {
        "tp,fp,fn,tn,precision,recall,f1,fpr,fnr"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.tp,
            self.fp,
            self.fn_,
            self.tn,
            self.precision,
            self.recall,
            self.f1,
            self.fpr,
            self.fnr
        )
    }
}

/// Function-level confusion counts of `result` against `truth`.
pub fn score_against_truth(
    result: &DetectionResult,
    truth: &GroundTruth,
) -> Result<Metrics, EvalError> {
    if truth.target != result.target || truth.candidate != result.candidate {
        return Err(EvalError::ProgramMismatch {
            truth_target: truth.target.clone(),
            truth_candidate: truth.candidate.clone(),
            result_target: result.target.clone(),
            result_candidate: result.candidate.clone(),
        });
    }
    let detected: BTreeSet<(String, String)> = result
        .dev_pairs()
        .map(|p| (p.t.clone(), p.c.clone()))
        .collect();
    let tp = detected.intersection(&truth.pairs).count();
    let fp = detected.len() - tp;
    let fn_ = truth.pairs.len() - tp;
    let universe = result.total_pair_count;
    let used = tp + fp + fn_;
    if used > universe {
        return Err(EvalError::UniverseTooSmall(used, universe));
    }
    Ok(Metrics::from_counts(tp, fp, fn_, universe - used))
}

/// Share of the pair space that was never compared.
pub fn reduction_ratio(result: &DetectionResult) -> Result<f64, EvalError> {
    if result.total_pair_count == 0 {
        return Err(EvalError::EmptyPairSpace);
    }
    let r = 1.0 - result.comparison_count as f64 / result.total_pair_count as f64;
    Ok(r.clamp(0.0, 1.0))
}
