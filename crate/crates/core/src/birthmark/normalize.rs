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

//! Instruction normalization.
//!
//! Each mnemonic is lifted to its operation class, branches are removed,
//! and every run of consecutive data transfers is reduced to its first
//! element. Operands are never read.

use super::lifting::{LiftingTable, OperationClass};
use crate::ir::Instruction;

/// Normalizes a mnemonic stream.
///
/// Jumps are dropped before transfer runs are collapsed, so a branch
/// between two moves cannot leave two adjacent `TRANSFER`s behind.
pub fn normalize_mnemonics<'a, I>(table: &LiftingTable, mnemonics: I) -> Vec<OperationClass>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = Vec::new();
    for m in mnemonics {
        let class = table.lift(m);
        match class {
            OperationClass::Jump => {}
            OperationClass::Transfer if out.last() == Some(&OperationClass::Transfer) => {}
            _ => out.push(class),
        }
    }
    out
}

pub fn normalize(table: &LiftingTable, instructions: &[Instruction]) -> Vec<OperationClass> {
    normalize_mnemonics(table, instructions.iter().map(|i| i.mnemonic.as_str()))
}

/// Collapses runs of `TRANSFER` in an already-lifted sequence.
pub fn collapse_transfers(ops: &[OperationClass]) -> Vec<OperationClass> {
    let mut out: Vec<OperationClass> = Vec::with_capacity(ops.len());
    for &op in ops {
        if op == OperationClass::Transfer && out.last() == Some(&OperationClass::Transfer) {
            continue;
        }
        out.push(op);
    }
    out
}
