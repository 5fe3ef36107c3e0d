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

//! Reuse detection between a target and a candidate program.
//!
//! Matching starts from anchors and grows outward over the two call graphs.
//! At each step the unmatched target function with the most matched
//! neighbors is examined: its neighbors' images propose candidate
//! functions, each proposal is scored by path-set similarity, and the best
//! proposal is accepted if it reaches the threshold.

pub mod anchors;
pub mod intent;
pub mod similarity;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anchors::{one_to_one, recognize_anchors, AnchorKind, AnchorPair};
pub use intent::{intent_search, MatchEntry, MatchSource, MatchState};
pub use similarity::{
    best_match, lcs_alignment, lcs_len, sequence_similarity, sim_mbp, sim_mbp_set,
};

use crate::birthmark::ProgramBirthmark;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("max candidates per function must be positive")]
    ZeroCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    threshold: f64,
    max_candidates_per_function: Option<usize>,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            threshold: DEFAULT_THRESHOLD,
            max_candidates_per_function: None,
        }
    }
}

impl SimilarityConfig {
    pub fn new(threshold: f64) -> Result<Self, ConfigError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ConfigError::Threshold(threshold));
        }
        Ok(SimilarityConfig {
            threshold,
            max_candidates_per_function: None,
        })
    }

    /// Caps how many proposals are scored for one target function; the
    /// proposals kept are the first ones in candidate id order.
    pub fn with_max_candidates(mut self, cap: usize) -> Result<Self, ConfigError> {
        if cap == 0 {
            return Err(ConfigError::ZeroCandidates);
        }
        self.max_candidates_per_function = Some(cap);
        Ok(self)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn max_candidates_per_function(&self) -> Option<usize> {
        self.max_candidates_per_function
    }
}

/// One matched function pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchedPair {
    pub t: String,
    pub c: String,
    /// Path-set similarity; absent for library call anchors.
    pub score: Option<f64>,
    pub source: MatchSource,
}

impl MatchedPair {
    pub fn is_library(&self) -> bool {
        self.source == MatchSource::LibraryCall
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    /// Unmatched target functions that never had a matched neighbor.
    pub unreached: Vec<String>,
    /// Unmatched target functions that were examined but had no proposal
    /// at or above the threshold.
    pub rejected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionResult {
    pub target: String,
    pub candidate: String,
    pub threshold: f64,
    /// Sorted by target id.
    pub matched: Vec<MatchedPair>,
    /// Matched developer functions over developer functions of the
    /// candidate.
    pub program_similarity: f64,
    /// Distinct function pairs whose path sets were compared.
    pub comparison_count: usize,
    /// Developer functions of the target times those of the candidate.
    pub total_pair_count: usize,
    pub diagnostics: Diagnostics,
}

impl DetectionResult {
    /// Matched developer-function pairs, library anchors excluded.
    pub fn dev_pairs(&self) -> impl Iterator<Item = &MatchedPair> {
        self.matched.iter().filter(|p| !p.is_library())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("detection result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, crate::SchemaError> {
        crate::from_json_with_path(text)
    }
}

/// Runs anchor recognition and the priority-driven search loop.
pub fn detect(
    tb: &ProgramBirthmark,
    cb: &ProgramBirthmark,
    config: &SimilarityConfig,
) -> DetectionResult {
    let (fcg_t, fcg_c) = (&tb.fcg, &cb.fcg);
    let mut state = MatchState::new(fcg_t, fcg_c);

    for a in one_to_one(&recognize_anchors(tb, cb)) {
        let t = fcg_t
            .index_of(&a.target)
            .expect("anchor target in call graph");
        let c = fcg_c
            .index_of(&a.candidate)
            .expect("anchor candidate in call graph");
        let (score, source) = match a.kind {
            AnchorKind::Instructions => (Some(1.0), MatchSource::Instructions),
            AnchorKind::LibraryCall => (None, MatchSource::LibraryCall),
        };
        state.add_anchor(fcg_t, t, c, score, source);
    }

    let mut scores: HashMap<(usize, usize), f64> = HashMap::new();
    while let Some(t) = state.next_target() {
        let mut ff = intent_search(&state, t, fcg_t, fcg_c);
        if let Some(cap) = config.max_candidates_per_function {
            ff.truncate(cap);
        }
        let t_mbps = &tb.functions[fcg_t.id(t)].mbps;
        let fresh: Vec<(usize, f64)> = ff
            .par_iter()
            .filter(|pair| !scores.contains_key(pair))
            .map(|&(_, c)| (c, sim_mbp_set(t_mbps, &cb.functions[fcg_c.id(c)].mbps)))
            .collect();
        for (c, s) in fresh {
            scores.insert((t, c), s);
        }

        // highest score wins; ff is in id order so the first maximum is
        // the smallest candidate id
        let mut best: Option<(usize, f64)> = None;
        for &(_, c) in &ff {
            let s = scores[&(t, c)];
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((c, s));
            }
        }
        match best {
            Some((c, s)) if s >= config.threshold => {
                state.insert(fcg_t, t, c, Some(s), MatchSource::Search);
            }
            _ => state.mark_examined(t),
        }
    }

    let matched: Vec<MatchedPair> = state
        .matched()
        .iter()
        .map(|(&t, e)| MatchedPair {
            t: fcg_t.id(t).to_string(),
            c: fcg_c.id(e.candidate).to_string(),
            score: e.score,
            source: e.source,
        })
        .collect();

    let mut diagnostics = Diagnostics::default();
    for t in 0..fcg_t.len() {
        if fcg_t.is_library(t) || state.candidate_of(t).is_some() {
            continue;
        }
        let id = fcg_t.id(t).to_string();
        if state.was_examined(t) {
            diagnostics.rejected.push(id);
        } else {
            diagnostics.unreached.push(id);
        }
    }

    let dev_matched = matched.iter().filter(|p| !p.is_library()).count();
    let program_similarity = if cb.dev_count() == 0 {
        0.0
    } else {
        dev_matched as f64 / cb.dev_count() as f64
    };

    DetectionResult {
        target: tb.program_id.clone(),
        candidate: cb.program_id.clone(),
        threshold: config.threshold,
        matched,
        program_similarity,
        comparison_count: scores.len(),
        total_pair_count: tb.dev_count() * cb.dev_count(),
        diagnostics,
    }
}
