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

//! Three-level program birthmarks.
//!
//! The function level is the call graph, the basic-block level is the set of
//! minimum branch paths of each function, and the instruction level is the
//! normalized operation sequence carried by each path.

pub mod lifting;
pub mod mbp;
pub mod normalize;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lifting::{LiftingTable, OperationClass, TableError};
pub use mbp::{extract_paths, BlockPath, PathOrigin};
pub use normalize::{collapse_transfers, normalize, normalize_mnemonics};

use crate::fcg::{build_fcg, FunctionCallGraph};
use crate::ir::{Cfg, FunctionKind, FunctionRecord, ProgramIr};

/// Version tag written into serialized birthmarks.
pub const BIRTHMARK_FORMAT_VERSION: u32 = 1;

/// One minimum branch path with its normalized operations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mbp {
    pub block_ids: Vec<String>,
    pub ops: Vec<OperationClass>,
    /// Instruction count before normalization.
    pub raw_len: usize,
    pub origin: PathOrigin,
}

impl Mbp {
    /// Length used for weighting: the normalized operation count.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionBirthmark {
    pub function_id: String,
    pub mbps: Vec<Mbp>,
    /// Normalized operations over all blocks in document order.
    pub flat_ops: Vec<OperationClass>,
    /// Names of the library stubs this function calls.
    pub library_calls: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramBirthmark {
    pub format_version: u32,
    pub program_id: String,
    pub fcg: FunctionCallGraph,
    /// One entry per developer-defined function, keyed by id.
    pub functions: BTreeMap<String, FunctionBirthmark>,
    /// Library stubs: id to name.
    pub libraries: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum BirthmarkError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported birthmark format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("inconsistent birthmark: {0}")]
    Inconsistent(String),
}

impl ProgramBirthmark {
    pub fn dev_ids(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    pub fn dev_count(&self) -> usize {
        self.functions.len()
    }

    pub fn function(&self, id: &str) -> Option<&FunctionBirthmark> {
        self.functions.get(id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("birthmark serializes")
    }

    /// Reads a serialized birthmark and checks it against its own call
    /// graph.
    pub fn from_json(text: &str) -> Result<Self, BirthmarkError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let bm: ProgramBirthmark =
            serde_path_to_error::deserialize(de).map_err(|e| BirthmarkError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        bm.check()?;
        Ok(bm)
    }

    fn check(&self) -> Result<(), BirthmarkError> {
        if self.format_version != BIRTHMARK_FORMAT_VERSION {
            return Err(BirthmarkError::Version {
                found: self.format_version,
                expected: BIRTHMARK_FORMAT_VERSION,
            });
        }
        for node in self.fcg.nodes() {
            let ok = match node.kind {
                FunctionKind::Developer => self.functions.contains_key(&node.id),
                FunctionKind::Library => self.libraries.get(&node.id) == Some(&node.name),
            };
            if !ok {
                return Err(BirthmarkError::Inconsistent(format!(
                    "call graph node `{}` has no matching birthmark entry",
                    node.id
                )));
            }
        }
        let devs = self
            .fcg
            .nodes()
            .iter()
            .filter(|n| n.kind == FunctionKind::Developer);
        if devs.count() != self.functions.len()
            || self.fcg.len() != self.functions.len() + self.libraries.len()
        {
            return Err(BirthmarkError::Inconsistent(
                "function entries do not match call graph nodes".into(),
            ));
        }
        for (id, f) in &self.functions {
            if &f.function_id != id {
                return Err(BirthmarkError::Inconsistent(format!(
                    "entry `{id}` holds function `{}`",
                    f.function_id
                )));
            }
        }
        Ok(())
    }
}

/// Extracts the minimum branch paths of `cfg` and normalizes each one over
/// the concatenated instructions of its blocks.
pub fn extract_mbps(cfg: &Cfg, table: &LiftingTable) -> Vec<Mbp> {
    extract_paths(cfg)
        .into_iter()
        .map(|p| {
            let insns = p
                .blocks
                .iter()
                .flat_map(|&b| cfg.block(b).instructions.iter());
            let raw_len = insns.clone().count();
            Mbp {
                block_ids: p.blocks.iter().map(|&b| cfg.block(b).id.clone()).collect(),
                ops: normalize_mnemonics(table, insns.map(|i| i.mnemonic.as_str())),
                raw_len,
                origin: p.origin,
            }
        })
        .collect()
}

pub fn build_function_birthmark(
    program: &ProgramIr,
    function_id: &str,
    table: &LiftingTable,
) -> Option<FunctionBirthmark> {
    let f = program.function(function_id)?;
    f.cfg.as_ref()?;
    let by_id = program
        .functions
        .iter()
        .map(|f| (f.id.as_str(), f))
        .collect();
    Some(function_mark(f, &by_id, table))
}

fn function_mark(
    f: &FunctionRecord,
    by_id: &HashMap<&str, &FunctionRecord>,
    table: &LiftingTable,
) -> FunctionBirthmark {
    let cfg = f.cfg.as_ref().expect("developer function has a cfg");
    let flat_ops = normalize_mnemonics(
        table,
        cfg.blocks()
            .iter()
            .flat_map(|b| b.instructions.iter())
            .map(|i| i.mnemonic.as_str()),
    );
    let library_calls = f
        .callees
        .iter()
        .filter_map(|c| by_id.get(c.as_str()))
        .filter(|c| c.kind == FunctionKind::Library)
        .map(|c| c.name.clone())
        .collect();
    FunctionBirthmark {
        function_id: f.id.clone(),
        mbps: extract_mbps(cfg, table),
        flat_ops,
        library_calls,
    }
}

/// Builds the birthmark of every developer-defined function, in parallel.
pub fn build_birthmark(program: &ProgramIr, table: &LiftingTable) -> ProgramBirthmark {
    let fcg = build_fcg(program);
    let by_id: HashMap<&str, &FunctionRecord> = program
        .functions
        .iter()
        .map(|f| (f.id.as_str(), f))
        .collect();

    let marks: Vec<FunctionBirthmark> = program
        .functions
        .par_iter()
        .filter(|f| f.kind == FunctionKind::Developer)
        .map(|f| function_mark(f, &by_id, table))
        .collect();
    let functions = marks
        .into_iter()
        .map(|m| (m.function_id.clone(), m))
        .collect();

    let libraries = program
        .functions
        .iter()
        .filter(|f| f.kind == FunctionKind::Library)
        .map(|f| (f.id.clone(), f.name.clone()))
        .collect();

    ProgramBirthmark {
        format_version: BIRTHMARK_FORMAT_VERSION,
        program_id: program.program_id.clone(),
        fcg,
        functions,
        libraries,
    }
}
