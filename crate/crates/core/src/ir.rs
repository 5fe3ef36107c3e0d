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

//! Disassembly intermediate representation.
//!
//! A program arrives as a JSON document produced by some external
//! disassembler. Parsing validates the document and resolves callee
//! references, so every later stage can assume a well-formed program:
//! block successors exist, function ids are unique, and every call edge
//! points at a known function or library stub.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while reading an IR document.
///
/// Every variant carries a JSON-style path (`functions[2].blocks[0].succ[1]`)
/// naming the offending element.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IrError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: block `{block}` of function `{function}` lists successor `{successor}` which is not a block of that function")]
    DanglingSuccessor {
        path: String,
        function: String,
        block: String,
        successor: String,
    },
    #[error("{path}: duplicate function id `{id}`")]
    DuplicateFunction { path: String, id: String },
    #[error("{path}: duplicate library name `{name}`")]
    DuplicateLibraryName { path: String, name: String },
    #[error("{path}: duplicate block id `{block}` in function `{function}`")]
    DuplicateBlock {
        path: String,
        function: String,
        block: String,
    },
    #[error("{path}: developer-defined function `{function}` has no entry block")]
    MissingEntry { path: String, function: String },
    #[error("{path}: entry `{entry}` of function `{function}` is not one of its blocks")]
    UnknownEntry {
        path: String,
        function: String,
        entry: String,
    },
    #[error("{path}: library function `{function}` must not carry blocks or an entry")]
    LibraryWithBody { path: String, function: String },
    #[error("{path}: empty mnemonic")]
    EmptyMnemonic { path: String },
    #[error("{path}: address {address:#x} appears twice in function `{function}`")]
    DuplicateAddress {
        path: String,
        function: String,
        address: u64,
    },
    #[error("{path}: block `{block}` has no instructions and is not flagged as a stub")]
    EmptyBlock { path: String, block: String },
}

/// Non-fatal findings from parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IrWarning {
    /// A callee that names neither a function id nor a library stub.
    /// Typically an indirect call; the edge is dropped.
    UnresolvedCallee { function: String, callee: String },
}

impl std::fmt::Display for IrWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IrWarning::UnresolvedCallee { function, callee } => write!(
                f,
                "function `{function}`: dropping unresolved callee `{callee}`"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionKind {
    #[serde(rename = "dev")]
    Developer,
    #[serde(rename = "lib")]
    Library,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub mnemonic: String,
    pub operands: Vec<String>,
    /// Display only.
    pub address: Option<u64>,
}

impl Instruction {
    pub fn new(mnemonic: &str, operands: &[&str]) -> Self {
        Instruction {
            mnemonic: mnemonic.to_ascii_lowercase(),
            operands: operands.iter().map(|s| s.to_string()).collect(),
            address: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: String,
    pub instructions: Vec<Instruction>,
    /// Successor block ids, duplicates removed, in document order.
    pub successors: Vec<String>,
    /// Synthetic entry/exit stub; the only kind of block allowed to be empty.
    pub stub: bool,
}

/// Control flow graph of one developer-defined function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    function: String,
    entry: String,
    blocks: Vec<BasicBlock>,
    index: HashMap<String, usize>,
    succ: Vec<Vec<usize>>,
    in_degree: Vec<usize>,
}

impl Cfg {
    /// Builds a CFG, checking that the entry and every successor resolve.
    pub fn new(
        function: impl Into<String>,
        entry: impl Into<String>,
        blocks: Vec<BasicBlock>,
    ) -> Result<Self, IrError> {
        let function = function.into();
        let fpath = format!("function `{function}`");
        Self::build(function, entry.into(), blocks, &fpath)
    }

    fn build(
        function: String,
        entry: String,
        blocks: Vec<BasicBlock>,
        fpath: &str,
    ) -> Result<Self, IrError> {
        let mut index = HashMap::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if index.insert(b.id.clone(), i).is_some() {
                return Err(IrError::DuplicateBlock {
                    path: format!("{fpath}.blocks[{i}].id"),
                    function,
                    block: b.id.clone(),
                });
            }
        }
        if !index.contains_key(&entry) {
            return Err(IrError::UnknownEntry {
                path: format!("{fpath}.entry"),
                function,
                entry,
            });
        }
        let mut succ = Vec::with_capacity(blocks.len());
        let mut in_degree = vec![0; blocks.len()];
        for (i, b) in blocks.iter().enumerate() {
            let mut out = Vec::with_capacity(b.successors.len());
            for (k, s) in b.successors.iter().enumerate() {
                let Some(&j) = index.get(s) else {
                    return Err(IrError::DanglingSuccessor {
                        path: format!("{fpath}.blocks[{i}].succ[{k}]"),
                        function,
                        block: b.id.clone(),
                        successor: s.clone(),
                    });
                };
                if !out.contains(&j) {
                    out.push(j);
                    in_degree[j] += 1;
                }
            }
            succ.push(out);
        }
        Ok(Cfg {
            function,
            entry,
            blocks,
            index,
            succ,
            in_degree,
        })
    }

    pub fn function(&self) -> &str {
        &self.function
    }

    pub fn entry(&self) -> &str {
        &self.entry
    }

    /// Blocks in document order.
    pub fn blocks(&self) -> &[BasicBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn block(&self, idx: usize) -> &BasicBlock {
        &self.blocks[idx]
    }

    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.succ[idx]
    }

    pub fn in_degree(&self, idx: usize) -> usize {
        self.in_degree[idx]
    }

    pub fn out_degree(&self, idx: usize) -> usize {
        self.succ[idx].len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Edges as `(from, to)` block indices.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, out)| out.iter().map(move |&j| (i, j)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionRecord {
    pub id: String,
    pub name: String,
    pub kind: FunctionKind,
    /// Present exactly when `kind` is [`FunctionKind::Developer`].
    pub cfg: Option<Cfg>,
    /// Resolved callee function ids, in call order; repeats are kept.
    pub callees: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramIr {
    pub program_id: String,
    /// Functions in document order.
    pub functions: Vec<FunctionRecord>,
    /// `(caller id, callee id)`, one per call statement.
    pub call_edges: Vec<(String, String)>,
}

impl ProgramIr {
    pub fn function(&self, id: &str) -> Option<&FunctionRecord> {
        self.functions.iter().find(|f| f.id == id)
    }

    /// Serializes back into the external document form.
    pub fn to_document(&self) -> IrDocument {
        IrDocument {
            program_id: self.program_id.clone(),
            functions: self
                .functions
                .iter()
                .map(|f| IrFunction {
                    id: f.id.clone(),
                    name: f.name.clone(),
                    kind: f.kind.clone(),
                    entry: f.cfg.as_ref().map(|c| c.entry.clone()),
                    blocks: f
                        .cfg
                        .as_ref()
                        .map(|c| {
                            c.blocks
                                .iter()
                                .map(|b| IrBlock {
                                    id: b.id.clone(),
                                    insns: b
                                        .instructions
                                        .iter()
                                        .map(|i| IrInsn {
                                            m: i.mnemonic.clone(),
                                            ops: i.operands.clone(),
                                            addr: i.address,
                                        })
                                        .collect(),
                                    succ: b.successors.clone(),
                                    stub: b.stub,
                                })
                                .collect()
                        })
                        .unwrap_or_default(),
                    callees: f.callees.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("IR document serializes")
    }
}

/// Wire form of an IR document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrDocument {
    pub program_id: String,
    pub functions: Vec<IrFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrFunction {
    pub id: String,
    pub name: String,
    pub kind: FunctionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
    #[serde(default)]
    pub blocks: Vec<IrBlock>,
    #[serde(default)]
    pub callees: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrBlock {
    pub id: String,
    pub insns: Vec<IrInsn>,
    #[serde(default)]
    pub succ: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stub: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrInsn {
    pub m: String,
    #[serde(default)]
    pub ops: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addr: Option<u64>,
}

/// Parses and validates an IR document. Warnings are logged.
pub fn parse_program_ir(text: &str) -> Result<ProgramIr, IrError> {
    let (program, warnings) = parse_program_ir_with_warnings(text)?;
    for w in &warnings {
        log::warn!("{}: {w}", program.program_id);
    }
    Ok(program)
}

pub fn parse_program_ir_with_warnings(text: &str) -> Result<(ProgramIr, Vec<IrWarning>), IrError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: IrDocument = serde_path_to_error::deserialize(de).map_err(|e| IrError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    validate_document(doc)
}

/// Validates an already-deserialized document.
pub fn validate_document(doc: IrDocument) -> Result<(ProgramIr, Vec<IrWarning>), IrError> {
    let mut ids = HashSet::new();
    let mut lib_by_name: BTreeMap<&str, &str> = BTreeMap::new();
    for (fi, f) in doc.functions.iter().enumerate() {
        if !ids.insert(f.id.as_str()) {
            return Err(IrError::DuplicateFunction {
                path: format!("functions[{fi}].id"),
                id: f.id.clone(),
            });
        }
        if f.kind == FunctionKind::Library
            && lib_by_name.insert(f.name.as_str(), f.id.as_str()).is_some()
        {
            return Err(IrError::DuplicateLibraryName {
                path: format!("functions[{fi}].name"),
                name: f.name.clone(),
            });
        }
    }

    let mut warnings = Vec::new();
    let mut functions = Vec::with_capacity(doc.functions.len());
    let mut call_edges = Vec::new();
    for (fi, f) in doc.functions.iter().enumerate() {
        let fpath = format!("functions[{fi}]");
        let cfg = match f.kind {
            FunctionKind::Library => {
                if f.entry.is_some() || !f.blocks.is_empty() {
                    return Err(IrError::LibraryWithBody {
                        path: fpath,
                        function: f.id.clone(),
                    });
                }
                None
            }
            FunctionKind::Developer => Some(build_cfg(f, &fpath)?),
        };

        let mut callees = Vec::with_capacity(f.callees.len());
        for callee in &f.callees {
            let resolved = if ids.contains(callee.as_str()) {
                Some(callee.as_str())
            } else {
                lib_by_name.get(callee.as_str()).copied()
            };
            match resolved {
                Some(id) => {
                    callees.push(id.to_string());
                    call_edges.push((f.id.clone(), id.to_string()));
                }
                None => warnings.push(IrWarning::UnresolvedCallee {
                    function: f.id.clone(),
                    callee: callee.clone(),
                }),
            }
        }

        functions.push(FunctionRecord {
            id: f.id.clone(),
            name: f.name.clone(),
            kind: f.kind.clone(),
            cfg,
            callees,
        });
    }

    Ok((
        ProgramIr {
            program_id: doc.program_id,
            functions,
            call_edges,
        },
        warnings,
    ))
}

fn build_cfg(f: &IrFunction, fpath: &str) -> Result<Cfg, IrError> {
    let Some(entry) = &f.entry else {
        return Err(IrError::MissingEntry {
            path: fpath.to_string(),
            function: f.id.clone(),
        });
    };
    let block_ids: HashSet<&str> = f.blocks.iter().map(|b| b.id.as_str()).collect();
    let mut seen_addr = HashSet::new();
    let mut blocks = Vec::with_capacity(f.blocks.len());
    for (bi, b) in f.blocks.iter().enumerate() {
        let bpath = format!("{fpath}.blocks[{bi}]");
        if b.insns.is_empty() && !b.stub {
            return Err(IrError::EmptyBlock {
                path: bpath,
                block: b.id.clone(),
            });
        }
        let mut instructions = Vec::with_capacity(b.insns.len());
        for (ii, insn) in b.insns.iter().enumerate() {
            let ipath = format!("{bpath}.insns[{ii}]");
            let mnemonic = insn.m.trim().to_ascii_lowercase();
            if mnemonic.is_empty() {
                return Err(IrError::EmptyMnemonic {
                    path: format!("{ipath}.m"),
                });
            }
            if let Some(addr) = insn.addr {
                if !seen_addr.insert(addr) {
                    return Err(IrError::DuplicateAddress {
                        path: format!("{ipath}.addr"),
                        function: f.id.clone(),
                        address: addr,
                    });
                }
            }
            instructions.push(Instruction {
                mnemonic,
                operands: insn.ops.clone(),
                address: insn.addr,
            });
        }
        let mut successors: Vec<String> = Vec::with_capacity(b.succ.len());
        for (si, s) in b.succ.iter().enumerate() {
            if !block_ids.contains(s.as_str()) {
                return Err(IrError::DanglingSuccessor {
                    path: format!("{bpath}.succ[{si}]"),
                    function: f.id.clone(),
                    block: b.id.clone(),
                    successor: s.clone(),
                });
            }
            if !successors.contains(s) {
                successors.push(s.clone());
            }
        }
        blocks.push(BasicBlock {
            id: b.id.clone(),
            instructions,
            successors,
            stub: b.stub,
        });
    }
    Cfg::build(f.id.clone(), entry.clone(), blocks, fpath)
}
