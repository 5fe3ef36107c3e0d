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

//! Match state and neighbor-guided candidate search.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::fcg::FunctionCallGraph;

/// Why a pair entered the matched set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchSource {
    /// Instruction anchor.
    Instructions,
    /// Library call anchor; carries no score.
    LibraryCall,
    /// Found by neighbor search and accepted on score.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEntry {
    pub candidate: usize,
    pub score: Option<f64>,
    pub source: MatchSource,
}

/// Matching progress, indexed by call graph node on each side.
///
/// `priority[t]` is the number of call graph neighbors of `t` that are
/// already matched. The frontier holds every unmatched developer function
/// of the target with positive priority that has not been examined since
/// its priority last changed, ordered by descending priority then id.
#[derive(Debug, Clone)]
pub struct MatchState {
    anchors: BTreeSet<(usize, usize)>,
    matched: BTreeMap<usize, MatchEntry>,
    candidate_taken: Vec<bool>,
    priority: Vec<usize>,
    examined: Vec<bool>,
    frontier: BTreeSet<(Reverse<usize>, usize)>,
    is_library: Vec<bool>,
}

impl MatchState {
    pub fn new(fcg_t: &FunctionCallGraph, fcg_c: &FunctionCallGraph) -> Self {
        MatchState {
            anchors: BTreeSet::new(),
            matched: BTreeMap::new(),
            candidate_taken: vec![false; fcg_c.len()],
            priority: vec![0; fcg_t.len()],
            examined: vec![false; fcg_t.len()],
            frontier: BTreeSet::new(),
            is_library: (0..fcg_t.len()).map(|i| fcg_t.is_library(i)).collect(),
        }
    }

    /// Records an anchor pair and matches it.
    pub fn add_anchor(
        &mut self,
        fcg_t: &FunctionCallGraph,
        t: usize,
        c: usize,
        score: Option<f64>,
        source: MatchSource,
    ) -> bool {
        if self.insert(fcg_t, t, c, score, source) {
            self.anchors.insert((t, c));
            true
        } else {
            false
        }
    }

    /// Adds `(t, c)` to the matched set. Returns false, leaving the state
    /// untouched, when either side is already matched.
    pub fn insert(
        &mut self,
        fcg_t: &FunctionCallGraph,
        t: usize,
        c: usize,
        score: Option<f64>,
        source: MatchSource,
    ) -> bool {
        if self.matched.contains_key(&t) || self.candidate_taken[c] {
            return false;
        }
        self.frontier.remove(&(Reverse(self.priority[t]), t));
        self.matched.insert(
            t,
            MatchEntry {
                candidate: c,
                score,
                source,
            },
        );
        self.candidate_taken[c] = true;
        for n in fcg_t.neighbors(t) {
            if n == t {
                continue;
            }
            let old = self.priority[n];
            self.frontier.remove(&(Reverse(old), n));
            self.priority[n] = old + 1;
            self.examined[n] = false;
            if !self.matched.contains_key(&n) && !self.is_library[n] {
                self.frontier.insert((Reverse(old + 1), n));
            }
        }
        true
    }

    /// Highest-priority target still worth examining.
    pub fn next_target(&self) -> Option<usize> {
        self.frontier.iter().next().map(|&(_, t)| t)
    }

    /// Takes `t` off the frontier until one more of its neighbors matches.
    pub fn mark_examined(&mut self, t: usize) {
        self.examined[t] = true;
        self.frontier.remove(&(Reverse(self.priority[t]), t));
    }

    pub fn was_examined(&self, t: usize) -> bool {
        self.examined[t]
    }

    pub fn candidate_of(&self, t: usize) -> Option<usize> {
        self.matched.get(&t).map(|e| e.candidate)
    }

    pub fn is_candidate_matched(&self, c: usize) -> bool {
        self.candidate_taken[c]
    }

    pub fn priority(&self, t: usize) -> usize {
        self.priority[t]
    }

    pub fn anchors(&self) -> &BTreeSet<(usize, usize)> {
        &self.anchors
    }

    /// Matched pairs by target index.
    pub fn matched(&self) -> &BTreeMap<usize, MatchEntry> {
        &self.matched
    }
}

/// Candidate pairs for target function `f_tb`.
///
/// For every matched caller of `f_tb`, the callees of its image are
/// proposed (`pre`); for every matched callee, the callers of its image
/// (`suc`). When both are non-empty only their intersection is kept,
/// otherwise their union. Library stubs and candidates that are already
/// matched are then removed. Output is sorted by candidate index.
pub fn intent_search(
    state: &MatchState,
    f_tb: usize,
    fcg_t: &FunctionCallGraph,
    fcg_c: &FunctionCallGraph,
) -> Vec<(usize, usize)> {
    let mut pre = BTreeSet::new();
    for &a in fcg_t.predecessors(f_tb) {
        if let Some(ca) = state.candidate_of(a) {
            pre.extend(fcg_c.successors(ca).iter().copied());
        }
    }
    let mut suc = BTreeSet::new();
    for &d in fcg_t.successors(f_tb) {
        if let Some(cd) = state.candidate_of(d) {
            suc.extend(fcg_c.predecessors(cd).iter().copied());
        }
    }
    let ff: BTreeSet<usize> = if !pre.is_empty() && !suc.is_empty() {
        pre.intersection(&suc).copied().collect()
    } else {
        pre.union(&suc).copied().collect()
    };
    ff.into_iter()
        .filter(|&c| !fcg_c.is_library(c) && !state.is_candidate_matched(c))
        .map(|c| (f_tb, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcg::build_fcg;
    use crate::ir::parse_program_ir;

    fn graph(calls: &[(&str, &[&str])]) -> FunctionCallGraph {
        let functions: Vec<String> = calls
            .iter()
            .map(|(id, callees)| {
                let callees: Vec<String> = callees.iter().map(|c| format!("\"{c}\"")).collect();
                format!(
                    r#"{{"id": "{id}", "name": "{id}", "kind": "dev", "entry": "B",
                        "blocks": [{{"id": "B", "insns": [{{"m": "ret"}}]}}],
                        "callees": [{}]}}"#,
                    callees.join(",")
                )
            })
            .collect();
        build_fcg(
            &parse_program_ir(&format!(
                r#"{{"program_id": "p", "functions": [{}]}}"#,
                functions.join(",")
            ))
            .unwrap(),
        )
    }

    fn names(
        t: &FunctionCallGraph,
        c: &FunctionCallGraph,
        ff: &[(usize, usize)],
    ) -> Vec<(String, String)> {
        ff.iter()
            .map(|&(a, b)| (t.id(a).to_string(), c.id(b).to_string()))
            .collect()
    }

    fn anchor(
        state: &mut MatchState,
        t: &FunctionCallGraph,
        c: &FunctionCallGraph,
        a: &str,
        b: &str,
    ) {
        let (ti, ci) = (t.index_of(a).unwrap(), c.index_of(b).unwrap());
        assert!(state.add_anchor(t, ti, ci, Some(1.0), MatchSource::Instructions));
    }

    #[test]
    fn callee_of_anchor() {
        let t = graph(&[("A", &["B"]), ("B", &[])]);
        let c = graph(&[("a", &["b"]), ("b", &[])]);
        let mut s = MatchState::new(&t, &c);
        anchor(&mut s, &t, &c, "A", "a");
        let ff = intent_search(&s, t.index_of("B").unwrap(), &t, &c);
        assert_eq!(names(&t, &c, &ff), vec![("B".into(), "b".into())]);
    }

    #[test]
    fn both_sides_intersect() {
        let t = graph(&[("A", &["B"]), ("B", &["D"]), ("D", &[])]);
        let c = graph(&[("a", &["b", "x"]), ("b", &["d"]), ("d", &[]), ("x", &[])]);
        let mut s = MatchState::new(&t, &c);
        anchor(&mut s, &t, &c, "A", "a");
        anchor(&mut s, &t, &c, "D", "d");
        let b = t.index_of("B").unwrap();
        assert_eq!(s.priority(b), 2);
        let ff = intent_search(&s, b, &t, &c);
        assert_eq!(names(&t, &c, &ff), vec![("B".into(), "b".into())]);
    }

    #[test]
    fn no_matched_neighbors() {
        let t = graph(&[("A", &["B"]), ("B", &[]), ("Z", &[])]);
        let c = graph(&[("a", &["b"]), ("b", &[])]);
        let mut s = MatchState::new(&t, &c);
        anchor(&mut s, &t, &c, "A", "a");
        assert!(intent_search(&s, t.index_of("Z").unwrap(), &t, &c).is_empty());
    }

    #[test]
    fn matched_candidates_excluded() {
        let t = graph(&[("A", &["B", "C"]), ("B", &[]), ("C", &[])]);
        let c = graph(&[("a", &["b", "c"]), ("b", &[]), ("c", &[])]);
        let mut s = MatchState::new(&t, &c);
        anchor(&mut s, &t, &c, "A", "a");
        anchor(&mut s, &t, &c, "C", "b");
        let ff = intent_search(&s, t.index_of("B").unwrap(), &t, &c);
        assert_eq!(names(&t, &c, &ff), vec![("B".into(), "c".into())]);
    }

    #[test]
    fn frontier_orders_by_priority_then_id() {
        let t = graph(&[("A", &["C", "D"]), ("B", &["D"]), ("C", &[]), ("D", &[])]);
        let c = graph(&[("a", &[]), ("b", &[])]);
        let mut s = MatchState::new(&t, &c);
        assert_eq!(s.next_target(), None);
        anchor(&mut s, &t, &c, "A", "a");
        // C and D both have one matched neighbor; C wins on id
        assert_eq!(s.next_target(), t.index_of("C"));
        anchor(&mut s, &t, &c, "B", "b");
        assert_eq!(s.priority(t.index_of("D").unwrap()), 2);
        assert_eq!(s.next_target(), t.index_of("D"));
        s.mark_examined(t.index_of("D").unwrap());
        assert_eq!(s.next_target(), t.index_of("C"));
        s.mark_examined(t.index_of("C").unwrap());
        assert_eq!(s.next_target(), None);
    }

    #[test]
    fn one_to_one_enforced() {
        let t = graph(&[("A", &[]), ("B", &[])]);
        let c = graph(&[("a", &[])]);
        let mut s = MatchState::new(&t, &c);
        assert!(s.insert(&t, 0, 0, Some(0.9), MatchSource::Search));
        assert!(!s.insert(&t, 1, 0, Some(0.9), MatchSource::Search));
        assert!(!s.insert(&t, 0, 0, Some(0.9), MatchSource::Search));
        assert_eq!(s.matched().len(), 1);
    }
}
