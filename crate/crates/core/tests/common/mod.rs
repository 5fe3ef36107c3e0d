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

//! Reference implementations used as test oracles. They favor obviousness
//! over speed and share no code with the crate under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use reusedetect_core::ir::{FunctionKind, IrDocument};
use reusedetect_core::{Mbp, OperationClass, ProgramBirthmark};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

/// Valid hand-written fixture documents.
pub const VALID_FIXTURES: &[&str] = &[
    "branch_cfg.json",
    "minimal.json",
    "compressor.json",
    "archiver.json",
];

/// A CFG as plain adjacency: node names and successor lists.
#[derive(Debug, Clone)]
pub struct Graph {
    pub names: Vec<String>,
    pub succ: Vec<Vec<usize>>,
}

impl Graph {
    fn out(&self, v: usize) -> usize {
        self.succ[v].len()
    }

    fn in_deg(&self, v: usize) -> usize {
        self.succ.iter().filter(|s| s.contains(&v)).count()
    }
}

/// Brute-force minimum-branch-path segmentation.
///
/// Enumerates every walk that starts at an initial node (no predecessor,
/// or more than one successor), never repeats a node except that it may
/// return to its start as last step, and keeps exactly those walks whose
/// interior nodes all have one successor and which cannot be extended: the
/// last node has out-degree other than one, or its only successor is
/// already one of the nodes after the start. An initial node without
/// successors is a path on its own. If no node is initial, every node lies
/// on a simple cycle and each cycle yields one path from its smallest name.
pub fn mbp_oracle(g: &Graph) -> BTreeSet<Vec<String>> {
    let n = g.names.len();
    let mut found = BTreeSet::new();
    let initial: Vec<usize> = (0..n)
        .filter(|&v| g.in_deg(v) == 0 || g.out(v) > 1)
        .collect();

    if initial.is_empty() {
        let mut seen = vec![false; n];
        let mut by_name: Vec<usize> = (0..n).collect();
        by_name.sort_by(|&a, &b| g.names[a].cmp(&g.names[b]));
        for s in by_name {
            if seen[s] {
                continue;
            }
            let mut cyc = vec![s];
            seen[s] = true;
            let mut v = g.succ[s][0];
            while v != s {
                seen[v] = true;
                cyc.push(v);
                v = g.succ[v][0];
            }
            found.insert(cyc.iter().map(|&v| g.names[v].clone()).collect());
        }
        return found;
    }

    for &s in &initial {
        if g.out(s) == 0 {
            found.insert(vec![g.names[s].clone()]);
            continue;
        }
        let mut stack: Vec<Vec<usize>> = g.succ[s].iter().map(|&w| vec![s, w]).collect();
        while let Some(walk) = stack.pop() {
            if is_mbp(g, &walk) {
                found.insert(walk.iter().map(|&v| g.names[v].clone()).collect());
            }
            let last = *walk.last().unwrap();
            if last == s {
                continue;
            }
            for &w in &g.succ[last] {
                if w == s || !walk[1..].contains(&w) {
                    let mut next = walk.clone();
                    next.push(w);
                    stack.push(next);
                }
            }
        }
    }
    found
}

fn is_mbp(g: &Graph, walk: &[usize]) -> bool {
    let k = walk.len() - 1;
    let interior_ok = (1..k).all(|i| g.out(walk[i]) == 1);
    if !interior_ok {
        return false;
    }
    let last = walk[k];
    if g.out(last) != 1 {
        return true;
    }
    walk[1..].contains(&g.succ[last][0])
}

/// Longest common subsequence length by trying every subsequence of `a`,
/// longest first.
pub fn lcs_exhaustive<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    assert!(a.len() <= 16);
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let sub: Vec<&T> = (0..a.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &a[i])
            .collect();
        let mut it = b.iter();
        if sub.iter().all(|x| it.any(|y| y == *x)) {
            best = len;
        }
    }
    best
}

/// Textbook memoized recursion for LCS; used where sequences are too long
/// for the exhaustive version.
pub fn lcs_memo<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut Vec<Vec<Option<usize>>>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

pub fn path_sim(a: &[OperationClass], b: &[OperationClass]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * lcs_memo(a, b) as f64 / (a.len() + b.len()) as f64
}

/// Length-weighted mean, over target paths, of each path's best similarity
/// against the candidate paths.
pub fn path_set_sim(t: &[Mbp], c: &[Mbp]) -> f64 {
    if t.is_empty() && c.is_empty() {
        return 1.0;
    }
    if t.is_empty() || c.is_empty() {
        return 0.0;
    }
    let best: Vec<f64> = t
        .iter()
        .map(|m| {
            c.iter()
                .map(|o| path_sim(&m.ops, &o.ops))
                .fold(0.0, f64::max)
        })
        .collect();
    let weight: usize = t.iter().map(|m| m.ops.len()).sum();
    if weight == 0 {
        return best.iter().sum::<f64>() / best.len() as f64;
    }
    t.iter()
        .zip(&best)
        .map(|(m, s)| m.ops.len() as f64 * s)
        .sum::<f64>()
        / weight as f64
}

fn path_multiset(f: &reusedetect_core::FunctionBirthmark) -> Vec<Vec<OperationClass>> {
    let mut v: Vec<Vec<OperationClass>> = f.mbps.iter().map(|m| m.ops.clone()).collect();
    v.sort();
    v
}

/// Anchors recomputed from scratch: developer functions whose flat
/// operations and path operation multisets are equal (paired in id order
/// within each group), and library stubs of equal name.
pub fn anchor_oracle(tb: &ProgramBirthmark, cb: &ProgramBirthmark) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for (tid, tf) in &tb.functions {
        for (cid, cf) in &cb.functions {
            if used.contains(cid) {
                continue;
            }
            if tf.flat_ops == cf.flat_ops && path_multiset(tf) == path_multiset(cf) {
                out.insert(tid.clone(), cid.clone());
                used.insert(cid.clone());
                break;
            }
        }
    }
    for (tid, tname) in &tb.libraries {
        if let Some((cid, _)) = cb.libraries.iter().find(|(_, n)| *n == tname) {
            out.insert(tid.clone(), cid.clone());
        }
    }
    out
}

/// Anchors, then every remaining developer pair scored, then greedy
/// one-to-one assignment by descending score (ties by target id, then
/// candidate id), accepting scores at or above `threshold`.
pub fn greedy_oracle(
    tb: &ProgramBirthmark,
    cb: &ProgramBirthmark,
    threshold: f64,
) -> BTreeMap<String, String> {
    let mut matched = anchor_oracle(tb, cb);
    let mut taken: BTreeSet<String> = matched.values().cloned().collect();
    let mut scored: Vec<(f64, &String, &String)> = Vec::new();
    for (tid, tf) in &tb.functions {
        if matched.contains_key(tid) {
            continue;
        }
        for (cid, cf) in &cb.functions {
            if !taken.contains(cid) {
                scored.push((path_set_sim(&tf.mbps, &cf.mbps), tid, cid));
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(b.2)));
    for (s, tid, cid) in scored {
        if s >= threshold && !matched.contains_key(tid) && !taken.contains(cid) {
            matched.insert(tid.clone(), cid.clone());
            taken.insert(cid.clone());
        }
    }
    matched
}

/// Caller-to-callee edges read directly off the document.
pub fn call_edges(doc: &IrDocument) -> BTreeSet<(String, String)> {
    let lib_by_name: BTreeMap<&str, &str> = doc
        .functions
        .iter()
        .filter(|f| f.kind == FunctionKind::Library)
        .map(|f| (f.name.as_str(), f.id.as_str()))
        .collect();
    let ids: BTreeSet<&str> = doc.functions.iter().map(|f| f.id.as_str()).collect();
    let mut edges = BTreeSet::new();
    for f in &doc.functions {
        for c in &f.callees {
            let to = if ids.contains(c.as_str()) {
                Some(c.as_str())
            } else {
                lib_by_name.get(c.as_str()).copied()
            };
            if let Some(to) = to {
                edges.insert((f.id.clone(), to.to_string()));
            }
        }
    }
    edges
}

/// Target edges whose endpoints are both matched and whose images are an
/// edge of the candidate.
pub fn common_edges(
    t_edges: &BTreeSet<(String, String)>,
    c_edges: &BTreeSet<(String, String)>,
    matched: &BTreeMap<String, String>,
) -> BTreeSet<(String, String, String, String)> {
    t_edges
        .iter()
        .filter_map(|(a, b)| {
            let (ca, cb) = (matched.get(a)?, matched.get(b)?);
            c_edges
                .contains(&(ca.clone(), cb.clone()))
                .then(|| (a.clone(), ca.clone(), b.clone(), cb.clone()))
        })
        .collect()
}

/// Pairs of `matched` outside `anchors` that no other matched pair
/// supports through a call edge present on both sides.
pub fn unsupported_pairs(
    t_edges: &BTreeSet<(String, String)>,
    c_edges: &BTreeSet<(String, String)>,
    matched: &BTreeMap<String, String>,
    anchors: &BTreeMap<String, String>,
) -> Vec<(String, String)> {
    matched
        .iter()
        .filter(|(a, _)| !anchors.contains_key(*a))
        .filter(|(a, b)| {
            !t_edges.iter().any(|(x, y)| {
                let caller = y == *a
                    && matched
                        .get(x)
                        .is_some_and(|cx| c_edges.contains(&(cx.clone(), (*b).clone())));
                let callee = x == *a
                    && matched
                        .get(y)
                        .is_some_and(|cy| c_edges.contains(&((*b).clone(), cy.clone())));
                caller || callee
            })
        })
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect()
}
