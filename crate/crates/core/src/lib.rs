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

//! Partial software reuse detection between two disassembled programs.
//!
//! The pipeline:
//!
//! 1. [`ir`] parses a disassembly document into functions, basic blocks and
//!    call edges.
//! 2. [`birthmark`] turns a program into a three-level birthmark: the call
//!    graph, the minimum branch paths of each function, and the normalized
//!    operations along each path.
//! 3. [`detection`] recognizes anchor pairs and grows the match outward over
//!    both call graphs, scoring proposals by LCS similarity of path sets.
//! 4. [`report`] distills the matched call subgraph and the path- and
//!    operation-level alignments behind every match.
//! 5. [`eval`] scores a detection against labeled ground truth.

pub mod birthmark;
pub mod detection;
pub mod eval;
pub mod fcg;
pub mod ir;
pub mod report;
pub mod synth;

pub use birthmark::{
    build_birthmark, extract_mbps, FunctionBirthmark, LiftingTable, Mbp, OperationClass,
    ProgramBirthmark,
};
pub use detection::{detect, DetectionResult, MatchedPair, SimilarityConfig};
pub use eval::{reduction_ratio, score_against_truth, GroundTruth, Metrics};
pub use fcg::{build_fcg, FunctionCallGraph};
pub use ir::{parse_program_ir, Cfg, FunctionKind, IrError, ProgramIr};
pub use report::{build_report, render_dot, ReuseReport};

use serde::de::DeserializeOwned;

/// A JSON document that does not match the expected shape.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

pub(crate) fn from_json_with_path<T: DeserializeOwned>(text: &str) -> Result<T, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| SchemaError {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
