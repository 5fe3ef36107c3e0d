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

//! Function call graph.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ir::{FunctionKind, ProgramIr};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcgNode {
    pub id: String,
    pub name: String,
    pub kind: FunctionKind,
}

/// Simple directed graph over every function of a program, library stubs
/// included. Nodes are sorted by id, so a node index doubles as its rank in
/// id order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FcgRepr", into = "FcgRepr")]
pub struct FunctionCallGraph {
    nodes: Vec<FcgNode>,
    index: HashMap<String, usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FcgRepr {
    nodes: Vec<FcgNode>,
    edges: Vec<(String, String)>,
}

impl From<FunctionCallGraph> for FcgRepr {
    fn from(g: FunctionCallGraph) -> Self {
        let edges = g
            .edges()
            .map(|(a, b)| (g.nodes[a].id.clone(), g.nodes[b].id.clone()))
            .collect();
        FcgRepr {
            nodes: g.nodes,
            edges,
        }
    }
}

impl TryFrom<FcgRepr> for FunctionCallGraph {
    type Error = String;

    fn try_from(r: FcgRepr) -> Result<Self, String> {
        let n = r.nodes.len();
        let mut g = FunctionCallGraph::from_nodes(r.nodes);
        if g.index.len() != n {
            return Err("duplicate node id in call graph".into());
        }
        for (a, b) in r.edges {
            let (Some(&i), Some(&j)) = (g.index.get(&a), g.index.get(&b)) else {
                return Err(format!(
                    "call graph edge {a} -> {b} references an unknown node"
                ));
            };
            g.add_edge(i, j);
        }
        g.finish();
        Ok(g)
    }
}

impl FunctionCallGraph {
    fn from_nodes(mut nodes: Vec<FcgNode>) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let n = nodes.len();
        FunctionCallGraph {
            nodes,
            index,
            succ: vec![Vec::new(); n],
            pred: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize) {
        self.succ[from].push(to);
        self.pred[to].push(from);
    }

    fn finish(&mut self) {
        for adj in self.succ.iter_mut().chain(self.pred.iter_mut()) {
            adj.sort_unstable();
            adj.dedup();
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[FcgNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &FcgNode {
        &self.nodes[idx]
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.nodes[idx].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn is_library(&self, idx: usize) -> bool {
        self.nodes[idx].kind == FunctionKind::Library
    }

    /// Callees of `idx`, ascending.
    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.succ[idx]
    }

    /// Callers of `idx`, ascending.
    pub fn predecessors(&self, idx: usize) -> &[usize] {
        &self.pred[idx]
    }

    /// Callers and callees of `idx`, ascending, without repeats.
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.succ[idx]
            .iter()
            .chain(self.pred[idx].iter())
            .copied()
            .collect();
        set.into_iter().collect()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Edges in `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, out)| out.iter().map(move |&j| (i, j)))
    }
}

/// Builds the call graph of a validated program. Repeated call sites
/// collapse into one edge.
pub fn build_fcg(program: &ProgramIr) -> FunctionCallGraph {
    let nodes = program
        .functions
        .iter()
        .map(|f| FcgNode {
            id: f.id.clone(),
            name: f.name.clone(),
            kind: f.kind.clone(),
        })
        .collect();
    let mut g = FunctionCallGraph::from_nodes(nodes);
    for (caller, callee) in &program.call_edges {
        let i = g.index[caller];
        let j = g.index[callee];
        g.add_edge(i, j);
    }
    g.finish();
    g
}
