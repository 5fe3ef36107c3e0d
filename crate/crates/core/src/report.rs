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

//! Evidence behind a detection, at function, path and operation level.

use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::birthmark::{Mbp, OperationClass, ProgramBirthmark};
use crate::detection::{best_match, lcs_alignment, DetectionResult, MatchSource};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error(
        "result was computed for {side} program `{expected}`, but birthmark `{found}` was given"
    )]
    Provenance {
        side: &'static str,
        expected: String,
        found: String,
    },
    #[error("matched function `{id}` does not exist in the {side} birthmark")]
    UnknownFunction { side: &'static str, id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairRef {
    pub t: String,
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphNode {
    pub t: String,
    pub c: String,
    pub score: Option<f64>,
    pub source: MatchSource,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgraphEdge {
    pub from: PairRef,
    pub to: PairRef,
}

/// Matched pairs plus every call edge present on both sides between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedSubgraph {
    pub node_pairs: Vec<SubgraphNode>,
    pub edges: Vec<SubgraphEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathView {
    pub block_ids: Vec<String>,
    pub ops: Vec<OperationClass>,
}

impl From<&Mbp> for PathView {
    fn from(m: &Mbp) -> Self {
        PathView {
            block_ids: m.block_ids.clone(),
            ops: m.ops.clone(),
        }
    }
}

/// A target path, its best candidate path, and their operation alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAlignment {
    pub target: PathView,
    pub candidate: PathView,
    pub score: f64,
    /// `(target op index, candidate op index)` along one LCS.
    pub op_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEvidence {
    pub t: String,
    pub c: String,
    pub score: f64,
    pub mbp_pairs: Vec<PathAlignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReuseReport {
    pub target: String,
    pub candidate: String,
    pub threshold: f64,
    pub program_similarity: f64,
    pub subgraph: MatchedSubgraph,
    pub evidence: Vec<AlignmentEvidence>,
}

impl ReuseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Reconstructs the reuse scene for `result`.
pub fn build_report(
    result: &DetectionResult,
    tb: &ProgramBirthmark,
    cb: &ProgramBirthmark,
) -> Result<ReuseReport, ReportError> {
    if result.target != tb.program_id {
        return Err(ReportError::Provenance {
            side: "target",
            expected: result.target.clone(),
            found: tb.program_id.clone(),
        });
    }
    if result.candidate != cb.program_id {
        return Err(ReportError::Provenance {
            side: "candidate",
            expected: result.candidate.clone(),
            found: cb.program_id.clone(),
        });
    }

    let mut image: HashMap<usize, usize> = HashMap::new();
    for p in &result.matched {
        let t = tb
            .fcg
            .index_of(&p.t)
            .ok_or_else(|| ReportError::UnknownFunction {
                side: "target",
                id: p.t.clone(),
            })?;
        let c = cb
            .fcg
            .index_of(&p.c)
            .ok_or_else(|| ReportError::UnknownFunction {
                side: "candidate",
                id: p.c.clone(),
            })?;
        image.insert(t, c);
    }

    let node_pairs = result
        .matched
        .iter()
        .map(|p| SubgraphNode {
            t: p.t.clone(),
            c: p.c.clone(),
            score: p.score,
            source: p.source,
        })
        .collect();

    let mut edges: Vec<SubgraphEdge> = tb
        .fcg
        .edges()
        .filter_map(|(t1, t2)| {
            let (&c1, &c2) = (image.get(&t1)?, image.get(&t2)?);
            cb.fcg.has_edge(c1, c2).then(|| SubgraphEdge {
                from: PairRef {
                    t: tb.fcg.id(t1).to_string(),
                    c: cb.fcg.id(c1).to_string(),
                },
                to: PairRef {
                    t: tb.fcg.id(t2).to_string(),
                    c: cb.fcg.id(c2).to_string(),
                },
            })
        })
        .collect();
    edges.sort();

    let mut evidence = Vec::new();
    for p in result.dev_pairs() {
        let tf = tb
            .function(&p.t)
            .ok_or_else(|| ReportError::UnknownFunction {
                side: "target",
                id: p.t.clone(),
            })?;
        let cf = cb
            .function(&p.c)
            .ok_or_else(|| ReportError::UnknownFunction {
                side: "candidate",
                id: p.c.clone(),
            })?;
        let mbp_pairs = tf
            .mbps
            .iter()
            .filter_map(|m| {
                let (j, score) = best_match(m, &cf.mbps)?;
                let other = &cf.mbps[j];
                Some(PathAlignment {
                    target: m.into(),
                    candidate: other.into(),
                    score,
                    op_pairs: lcs_alignment(&m.ops, &other.ops),
                })
            })
            .collect();
        evidence.push(AlignmentEvidence {
            t: p.t.clone(),
            c: p.c.clone(),
            score: p.score.unwrap_or(0.0),
            mbp_pairs,
        });
    }

    Ok(ReuseReport {
        target: result.target.clone(),
        candidate: result.candidate.clone(),
        threshold: result.threshold,
        program_similarity: result.program_similarity,
        subgraph: MatchedSubgraph { node_pairs, edges },
        evidence,
    })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

/// Renders the matched subgraph as a DOT digraph: one cluster per program
/// and a dashed edge, labeled with its score, for every matched pair.
pub fn render_dot(report: &ReuseReport) -> String {
    let mut out = String::new();
    let t_node = |id: &str| quote(&format!("t:{id}"));
    let c_node = |id: &str| quote(&format!("c:{id}"));

    writeln!(out, "digraph reuse {{").unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();

    for (side, program, node) in [
        ("target", &report.target, &t_node as &dyn Fn(&str) -> String),
        ("candidate", &report.candidate, &c_node),
    ] {
        writeln!(out, "  subgraph cluster_{side} {{").unwrap();
        writeln!(out, "    label={};", quote(&format!("{side}: {program}"))).unwrap();
        for p in &report.subgraph.node_pairs {
            let id = if side == "target" { &p.t } else { &p.c };
            writeln!(out, "    {} [label={}];", node(id), quote(id)).unwrap();
        }
        for e in &report.subgraph.edges {
            let (a, b) = if side == "target" {
                (&e.from.t, &e.to.t)
            } else {
                (&e.from.c, &e.to.c)
            };
            writeln!(out, "    {} -> {};", node(a), node(b)).unwrap();
        }
        writeln!(out, "  }}").unwrap();
    }

    for p in &report.subgraph.node_pairs {
        let label = match p.score {
            Some(s) => format!("{s:.3}"),
            None => "lib".to_string(),
        };
        writeln!(
            out,
            "  {} -> {} [style=dashed, constraint=false, dir=none, label={}];",
            t_node(&p.t),
            c_node(&p.c),
            quote(&label)
        )
        .unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}
