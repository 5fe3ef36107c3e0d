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

//! Minimum branch path extraction.
//!
//! A minimum branch path starts at an initial node (no predecessor, or more
//! than one successor), follows single-successor nodes, and stops at the
//! first node whose out-degree is not one. One path is emitted per out-edge
//! of every initial node.

use serde::{Deserialize, Serialize};

use crate::ir::Cfg;

/// How a path came to be emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOrigin {
    /// Regular walk along one out-edge of an initial node.
    Branch,
    /// A block with neither predecessors nor successors, kept as a
    /// one-block path so single-block functions still carry a birthmark.
    IsolatedBlock,
    /// The CFG has no initial node at all (it is a union of cycles); the
    /// walk starts at the smallest block id of each cycle.
    CycleEntry,
}

/// A path as block indices into its CFG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPath {
    pub blocks: Vec<usize>,
    pub origin: PathOrigin,
}

/// Extracts every minimum branch path of `cfg`.
///
/// Paths are ordered by start block id, then by the id of the block the
/// walk left through. A walk that loops back to its branching start ends
/// there, so `[head, body, head]` is a valid path. Inside a loop with no
/// branch at all the walk stops before re-entering a block it already holds.
pub fn extract_paths(cfg: &Cfg) -> Vec<BlockPath> {
    let n = cfg.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cfg.block(a).id.cmp(&cfg.block(b).id));

    let sorted_succ = |v: usize| -> Vec<usize> {
        let mut s = cfg.successors(v).to_vec();
        s.sort_by(|&a, &b| cfg.block(a).id.cmp(&cfg.block(b).id));
        s
    };

    let mut walker = Walker {
        cfg,
        stamp: vec![0; n],
        generation: 0,
    };
    let mut paths = Vec::new();

    let initial: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&v| cfg.in_degree(v) == 0 || cfg.out_degree(v) > 1)
        .collect();

    if initial.is_empty() {
        // every block has in- and out-degree one
        let mut covered = vec![false; n];
        for &v in &order {
            if covered[v] {
                continue;
            }
            let blocks = walker.walk(v, cfg.successors(v)[0]);
            for &b in &blocks {
                covered[b] = true;
            }
            paths.push(BlockPath {
                blocks,
                origin: PathOrigin::CycleEntry,
            });
        }
        return paths;
    }

    for v in initial {
        if cfg.out_degree(v) == 0 {
            paths.push(BlockPath {
                blocks: vec![v],
                origin: PathOrigin::IsolatedBlock,
            });
            continue;
        }
        for w in sorted_succ(v) {
            paths.push(BlockPath {
                blocks: walker.walk(v, w),
                origin: PathOrigin::Branch,
            });
        }
    }
    paths
}

struct Walker<'a> {
    cfg: &'a Cfg,
    stamp: Vec<u32>,
    generation: u32,
}

impl Walker<'_> {
    fn walk(&mut self, start: usize, next: usize) -> Vec<usize> {
        self.generation += 1;
        let g = self.generation;
        self.stamp[start] = g;
        let mut path = vec![start];
        let mut cur = next;
        loop {
            let out = self.cfg.out_degree(cur);
            if self.stamp[cur] == g && out == 1 {
                break;
            }
            self.stamp[cur] = g;
            path.push(cur);
            if out != 1 {
                break;
            }
            cur = self.cfg.successors(cur)[0];
        }
        path
    }
}
