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

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_TABLE: &str = include_str!("../../data/lifting.tbl");

/// High-level operation an instruction lifts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperationClass {
    #[serde(rename = "TRANSFER")]
    Transfer,
    #[serde(rename = "ADD")]
    Add,
    #[serde(rename = "SUB")]
    Sub,
    #[serde(rename = "MUL")]
    Mul,
    #[serde(rename = "DIV")]
    Div,
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "OR")]
    Or,
    #[serde(rename = "XOR")]
    Xor,
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "SHIFT")]
    Shift,
    #[serde(rename = "COMPARE")]
    Compare,
    #[serde(rename = "CALL")]
    Call,
    #[serde(rename = "RET")]
    Ret,
    #[serde(rename = "ADDRESS")]
    Address,
    #[serde(rename = "STACKFRAME")]
    StackFrame,
    #[serde(rename = "FLOAT_ARITH")]
    FloatArith,
    #[serde(rename = "STRING_OP")]
    StringOp,
    #[serde(rename = "NOP")]
    Nop,
    #[serde(rename = "OTHER")]
    Other,
    /// Branches. Only produced by lifting; normalization removes them.
    #[serde(rename = "JUMP")]
    Jump,
}

impl OperationClass {
    pub const ALL: [OperationClass; 20] = [
        OperationClass::Transfer,
        OperationClass::Add,
        OperationClass::Sub,
        OperationClass::Mul,
        OperationClass::Div,
        OperationClass::And,
        OperationClass::Or,
        OperationClass::Xor,
        OperationClass::Not,
        OperationClass::Shift,
        OperationClass::Compare,
        OperationClass::Call,
        OperationClass::Ret,
        OperationClass::Address,
        OperationClass::StackFrame,
        OperationClass::FloatArith,
        OperationClass::StringOp,
        OperationClass::Nop,
        OperationClass::Other,
        OperationClass::Jump,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperationClass::Transfer => "TRANSFER",
            OperationClass::Add => "ADD",
            OperationClass::Sub => "SUB",
            OperationClass::Mul => "MUL",
            OperationClass::Div => "DIV",
            OperationClass::And => "AND",
            OperationClass::Or => "OR",
            OperationClass::Xor => "XOR",
            OperationClass::Not => "NOT",
            OperationClass::Shift => "SHIFT",
            OperationClass::Compare => "COMPARE",
            OperationClass::Call => "CALL",
            OperationClass::Ret => "RET",
            OperationClass::Address => "ADDRESS",
            OperationClass::StackFrame => "STACKFRAME",
            OperationClass::FloatArith => "FLOAT_ARITH",
            OperationClass::StringOp => "STRING_OP",
            OperationClass::Nop => "NOP",
            OperationClass::Other => "OTHER",
            OperationClass::Jump => "JUMP",
        }
    }
}

impl fmt::Display for OperationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperationClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        OperationClass::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown operation class `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("lifting table line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot read lifting table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Mnemonic to [`OperationClass`] map. Read-only once loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftingTable {
    map: HashMap<String, OperationClass>,
}

impl LiftingTable {
    /// The table shipped with the crate.
    pub fn builtin() -> &'static LiftingTable {
        static TABLE: OnceLock<LiftingTable> = OnceLock::new();
        TABLE.get_or_init(|| LiftingTable::parse(BUILTIN_TABLE).expect("builtin lifting table"))
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN_TABLE
    }

    /// Parses `mnemonic CLASS` lines; `#` starts a comment. A mnemonic
    /// listed twice keeps its last class.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut map = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(mnemonic), Some(class), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(TableError::Syntax {
                    line: n + 1,
                    message: format!("expected `mnemonic CLASS`, got `{line}`"),
                });
            };
            let class = class.parse().map_err(|message| TableError::Syntax {
                line: n + 1,
                message,
            })?;
            map.insert(mnemonic.to_ascii_lowercase(), class);
        }
        Ok(LiftingTable { map })
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Class of `mnemonic`; unknown mnemonics lift to [`OperationClass::Other`].
    pub fn lift(&self, mnemonic: &str) -> OperationClass {
        if let Some(&c) = self.map.get(mnemonic) {
            return c;
        }
        self.map
            .get(&mnemonic.to_ascii_lowercase())
            .copied()
            .unwrap_or(OperationClass::Other)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Mnemonics in the table, sorted.
    pub fn mnemonics(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.map.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}
