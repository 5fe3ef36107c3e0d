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

//! LCS-based similarity between paths and between path sets.

use crate::birthmark::{Mbp, OperationClass};

/// Length of the longest common subsequence of `a` and `b`.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // keep the shorter sequence on the row
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// One longest common subsequence as `(index in a, index in b)` pairs,
/// strictly increasing in both components.
///
/// Among equally long alignments the one matching the earliest elements of
/// `a` is returned.
pub fn lcs_alignment<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    // suffix table: table[i][j] = LCS of a[i..] and b[j..]
    let w = m + 1;
    let mut table = vec![0usize; (n + 1) * w];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i * w + j] = if a[i] == b[j] {
                table[(i + 1) * w + j + 1] + 1
            } else {
                table[(i + 1) * w + j].max(table[i * w + j + 1])
            };
        }
    }
    let mut out = Vec::with_capacity(table[0]);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] && table[i * w + j] == table[(i + 1) * w + j + 1] + 1 {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if table[(i + 1) * w + j] >= table[i * w + j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// `2 * lcs / (|a| + |b|)`. Two empty sequences score 1.
pub fn sequence_similarity(a: &[OperationClass], b: &[OperationClass]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    (2 * lcs_len(a, b)) as f64 / total as f64
}

/// Similarity of two minimum branch paths over their normalized operations.
pub fn sim_mbp(m1: &Mbp, m2: &Mbp) -> f64 {
    sequence_similarity(&m1.ops, &m2.ops)
}

/// Best match for `m` in `set`: `(index, score)`.
///
/// Ties go to the candidate path with the smallest block id sequence.
/// `None` when `set` is empty.
pub fn best_match(m: &Mbp, set: &[Mbp]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, other) in set.iter().enumerate() {
        let s = sim_mbp(m, other);
        best = match best {
            None => Some((j, s)),
            Some((bj, bs)) => {
                if s > bs || (s == bs && other.block_ids < set[bj].block_ids) {
                    Some((j, s))
                } else {
                    Some((bj, bs))
                }
            }
        };
    }
    best
}

fn max_score(m: &Mbp, set: &[Mbp]) -> f64 {
    let mut best = 0.0f64;
    for other in set {
        let s = sim_mbp(m, other);
        if s > best {
            best = s;
            if best >= 1.0 {
                break;
            }
        }
    }
    best
}

/// Length-weighted average of each target path's best score in `candidate`.
///
/// Directional: every path of `target` looks for its best partner in
/// `candidate`, weighted by its operation count. If every target path is
/// empty the unweighted mean of the best scores is used.
pub fn sim_mbp_set(target: &[Mbp], candidate: &[Mbp]) -> f64 {
    match (target.is_empty(), candidate.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let total: usize = target.iter().map(Mbp::len).sum();
    if total == 0 {
        let sum: f64 = target.iter().map(|m| max_score(m, candidate)).sum();
        return sum / target.len() as f64;
    }
    let weighted: f64 = target
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.len() as f64 * max_score(m, candidate))
        .sum();
    weighted / total as f64
}
