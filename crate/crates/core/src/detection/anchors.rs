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

//! Anchor recognition.
//!
//! Two developer-defined functions anchor each other when their normalized
//! instruction streams are identical, and two library stubs anchor each
//! other when both programs invoke the same library call.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::birthmark::{FunctionBirthmark, OperationClass, ProgramBirthmark};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    /// Identical normalized instructions.
    Instructions,
    /// Same library call name on both sides.
    LibraryCall,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnchorPair {
    pub target: String,
    pub candidate: String,
    pub kind: AnchorKind,
}

/// Equality key for instruction anchors: the whole-function stream plus
/// the multiset of path streams. Requiring the paths to agree as well
/// guarantees an instruction anchor has path-set similarity 1.
type InstructionKey<'a> = (&'a [OperationClass], Vec<&'a [OperationClass]>);

fn instruction_key(f: &FunctionBirthmark) -> InstructionKey<'_> {
    let mut paths: Vec<&[OperationClass]> = f.mbps.iter().map(|m| m.ops.as_slice()).collect();
    paths.sort_unstable();
    (f.flat_ops.as_slice(), paths)
}

/// Every anchor pair between the two programs.
///
/// Instruction anchors may be many-to-many when a program contains
/// duplicate functions; [`one_to_one`] picks a consistent subset. Output is
/// sorted by kind, then target id, then candidate id.
pub fn recognize_anchors(tb: &ProgramBirthmark, cb: &ProgramBirthmark) -> Vec<AnchorPair> {
    let mut by_key: HashMap<InstructionKey<'_>, Vec<&str>> = HashMap::new();
    for (id, f) in &cb.functions {
        by_key.entry(instruction_key(f)).or_default().push(id);
    }
    let mut out = Vec::new();
    for (tid, f) in &tb.functions {
        if let Some(cands) = by_key.get(&instruction_key(f)) {
            for cid in cands {
                out.push(AnchorPair {
                    target: tid.clone(),
                    candidate: cid.to_string(),
                    kind: AnchorKind::Instructions,
                });
            }
        }
    }

    let c_libs: BTreeMap<&str, &str> = cb
        .libraries
        .iter()
        .map(|(id, name)| (name.as_str(), id.as_str()))
        .collect();
    for (tid, name) in &tb.libraries {
        if let Some(cid) = c_libs.get(name.as_str()) {
            out.push(AnchorPair {
                target: tid.clone(),
                candidate: cid.to_string(),
                kind: AnchorKind::LibraryCall,
            });
        }
    }
    out.sort();
    out
}

/// Reduces anchors to a one-to-one set.
///
/// Functions sharing an instruction key are paired in id order: the k-th
/// target of a group with its k-th candidate. Library anchors are already
/// one-to-one because library names are unique per program.
pub fn one_to_one(anchors: &[AnchorPair]) -> Vec<AnchorPair> {
    // group instruction anchors by the candidate set each target sees;
    // targets with the same key see exactly the same candidates
    let mut groups: BTreeMap<Vec<&str>, Vec<&str>> = BTreeMap::new();
    let mut cands_of: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for a in anchors
        .iter()
        .filter(|a| a.kind == AnchorKind::Instructions)
    {
        cands_of.entry(&a.target).or_default().push(&a.candidate);
    }
    for (t, mut cs) in cands_of {
        cs.sort_unstable();
        groups.entry(cs).or_default().push(t);
    }
    let mut out = Vec::new();
    for (cands, mut targets) in groups {
        targets.sort_unstable();
        for (t, c) in targets.iter().zip(cands.iter()) {
            out.push(AnchorPair {
                target: t.to_string(),
                candidate: c.to_string(),
                kind: AnchorKind::Instructions,
            });
        }
    }
    out.extend(
        anchors
            .iter()
            .filter(|a| a.kind == AnchorKind::LibraryCall)
            .cloned(),
    );
    out.sort();
    out
}
