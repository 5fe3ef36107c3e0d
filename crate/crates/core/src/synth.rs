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

//! Seeded generators for synthetic IR programs with known reuse.
//!
//! Everything here is deterministic in the seed, so fixtures built from
//! these generators double as regression data for tests and benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::eval::GroundTruth;
use crate::ir::{FunctionKind, IrBlock, IrDocument, IrFunction, IrInsn};

// (mnemonic, weight); a rough x86-64 -O2 instruction mix
const BODY_POOL: &[(&str, u32)] = &[
    ("mov", 30),
    ("lea", 8),
    ("push", 4),
    ("pop", 4),
    ("movzx", 4),
    ("add", 8),
    ("sub", 6),
    ("inc", 2),
    ("dec", 2),
    ("imul", 3),
    ("idiv", 1),
    ("and", 3),
    ("or", 2),
    ("xor", 4),
    ("not", 1),
    ("shl", 2),
    ("sar", 2),
    ("cmp", 6),
    ("test", 4),
    ("sete", 1),
    ("cmovne", 2),
    ("addsd", 1),
    ("mulsd", 1),
    ("stosb", 1),
    ("cpuid", 1),
];

const CONDITIONAL_JUMPS: &[&str] = &["je", "jne", "jg", "jle", "jb", "jae", "js"];
const REGISTERS: &[&str] = &[
    "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "r8", "r9", "r12", "r13",
];

/// Library stubs the embedded library calls.
pub const LIBRARY_STUBS: &[&str] = &["memcpy", "memset", "malloc", "free", "strlen"];
/// Library stubs the host's own code calls.
pub const HOST_STUBS: &[&str] = &[
    "printf", "puts", "fopen", "fread", "fclose", "malloc", "free", "exit",
];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn operand<R: Rng>(rng: &mut R) -> String {
    match rng.gen_range(0..3) {
        0 => REGISTERS.choose(rng).unwrap().to_string(),
        1 => format!("[rbp-{:#x}]", 8 * rng.gen_range(1..16)),
        _ => format!("{:#x}", rng.gen_range(0..256)),
    }
}

fn insn<R: Rng>(rng: &mut R, pool: &WeightedIndex<u32>) -> IrInsn {
    let m = BODY_POOL[pool.sample(rng)].0;
    let arity = if matches!(m, "push" | "pop" | "inc" | "dec" | "not" | "idiv" | "sete") {
        1
    } else if matches!(m, "cpuid" | "stosb") {
        0
    } else {
        2
    };
    IrInsn {
        m: m.to_string(),
        ops: (0..arity).map(|_| operand(rng)).collect(),
        addr: None,
    }
}

fn plain(m: &str, ops: &[&str]) -> IrInsn {
    IrInsn {
        m: m.to_string(),
        ops: ops.iter().map(|s| s.to_string()).collect(),
        addr: None,
    }
}

/// A developer function with a random but structured body.
///
/// Blocks are laid out in order; each falls through to the next, some end
/// in a conditional branch forward or back (loops), and the last returns.
/// `calls` are `(callee id, callee name)` pairs, each placed as a call
/// instruction in some block.
pub fn random_function<R: Rng>(
    rng: &mut R,
    id: &str,
    name: &str,
    calls: &[(String, String)],
) -> IrFunction {
    let pool = WeightedIndex::new(BODY_POOL.iter().map(|&(_, w)| w)).unwrap();
    let n = rng.gen_range(3..=9);
    let ids: Vec<String> = (0..n).map(|i| format!("bb{i}")).collect();
    let mut blocks: Vec<IrBlock> = Vec::with_capacity(n);
    for i in 0..n {
        let mut insns: Vec<IrInsn> = (0..rng.gen_range(2..=7))
            .map(|_| insn(rng, &pool))
            .collect();
        if i == 0 {
            insns.insert(0, plain("push", &["rbp"]));
            insns.insert(1, plain("mov", &["rbp", "rsp"]));
        }
        let mut succ = Vec::new();
        if i + 1 == n {
            insns.push(plain("pop", &["rbp"]));
            insns.push(plain("ret", &[]));
        } else if rng.gen_bool(0.45) {
            // two-way branch: fall through, or jump elsewhere
            let mut other = rng.gen_range(0..n);
            if other == i + 1 {
                other = (other + 1) % n;
            }
            let cond = *CONDITIONAL_JUMPS.choose(rng).unwrap();
            insns.push(plain(cond, &[&ids[other]]));
            succ.push(ids[i + 1].clone());
            if other != i + 1 {
                succ.push(ids[other].clone());
            }
        } else {
            succ.push(ids[i + 1].clone());
        }
        blocks.push(IrBlock {
            id: ids[i].clone(),
            insns,
            succ,
            stub: false,
        });
    }
    for (_, callee_name) in calls {
        let b = rng.gen_range(0..n);
        let at = rng.gen_range(0..blocks[b].insns.len());
        let at = at.min(terminator_slot(&blocks[b]));
        blocks[b].insns.insert(at, plain("call", &[callee_name]));
    }
    IrFunction {
        id: id.to_string(),
        name: name.to_string(),
        kind: FunctionKind::Developer,
        entry: Some(ids[0].clone()),
        blocks,
        callees: calls.iter().map(|(id, _)| id.clone()).collect(),
    }
}

// index before which new straight-line code may go
fn terminator_slot(b: &IrBlock) -> usize {
    match b.insns.last() {
        Some(last) if last.m == "ret" || last.m.starts_with('j') => {
            // keep `pop rbp; ret` together too
            let n = b.insns.len() - 1;
            if last.m == "ret" && n > 0 && b.insns[n - 1].m == "pop" {
                n - 1
            } else {
                n
            }
        }
        _ => b.insns.len(),
    }
}

fn stub(name: &str) -> IrFunction {
    IrFunction {
        id: format!("lib:{name}"),
        name: name.to_string(),
        kind: FunctionKind::Library,
        entry: None,
        blocks: vec![],
        callees: vec![],
    }
}

fn stub_call(name: &str) -> (String, String) {
    (format!("lib:{name}"), name.to_string())
}

/// A 10-function library: `lib_f0` is the entry, every other function is
/// called by a lower-numbered one, and about half call libc stubs.
pub fn library_program(seed: u64) -> IrDocument {
    let mut rng = rng(seed);
    let n = 10;
    let mut children: Vec<Vec<usize>> = vec![vec![]; n];
    for i in 1..n {
        children[rng.gen_range(0..i)].push(i);
    }
    let mut used_stubs = BTreeSet::new();
    let mut functions = Vec::new();
    for (i, kids) in children.iter().enumerate() {
        let mut calls: Vec<(String, String)> = kids
            .iter()
            .map(|&k| (format!("lib_f{k}"), format!("lib_f{k}")))
            .collect();
        if i == 0 || rng.gen_bool(0.5) {
            let s = *LIBRARY_STUBS.choose(&mut rng).unwrap();
            used_stubs.insert(s);
            calls.push(stub_call(s));
        }
        let id = format!("lib_f{i}");
        functions.push(random_function(&mut rng, &id, &id, &calls));
    }
    functions.extend(used_stubs.into_iter().map(stub));
    IrDocument {
        program_id: "synthlib".to_string(),
        functions,
    }
}

/// A host program embedding a library, with the labeled reuse.
#[derive(Debug, Clone)]
pub struct ReuseFixture {
    pub library: IrDocument,
    pub host: IrDocument,
    /// Library function id to its id inside the host.
    pub truth: GroundTruth,
}

/// Builds a host with 30 functions of its own plus a verbatim copy of
/// [`library_program`] under shuffled, stripped-looking ids. Detection is
/// meant to run with the library as target and the host as candidate.
pub fn reuse_fixture(seed: u64) -> ReuseFixture {
    let library = library_program(seed);
    let mut rng = rng(seed ^ 0x9e37_79b9_7f4a_7c15);

    let lib_dev: Vec<&IrFunction> = library
        .functions
        .iter()
        .filter(|f| f.kind == FunctionKind::Developer)
        .collect();
    let own = 30;
    let mut addrs: Vec<u64> = (0..(own + lib_dev.len()) as u64)
        .map(|i| 0x401000 + 0x40 * i)
        .collect();
    addrs.shuffle(&mut rng);
    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    for (f, a) in lib_dev.iter().zip(&addrs) {
        rename.insert(f.id.clone(), format!("sub_{a:x}"));
    }
    let own_ids: Vec<String> = addrs[lib_dev.len()..]
        .iter()
        .map(|a| format!("sub_{a:x}"))
        .collect();

    let mut functions: Vec<IrFunction> = Vec::new();
    for f in &lib_dev {
        let mut g = (*f).clone();
        g.id = rename[&f.id].clone();
        g.name = g.id.clone();
        g.callees = f
            .callees
            .iter()
            .map(|c| rename.get(c).cloned().unwrap_or_else(|| c.clone()))
            .collect();
        for b in &mut g.blocks {
            for i in &mut b.insns {
                if i.m == "call" {
                    if let Some(new) = i.ops.first().and_then(|o| rename.get(o)) {
                        i.ops = vec![new.clone()];
                    }
                }
            }
        }
        functions.push(g);
    }

    // own call tree rooted at the first own function; a few own functions
    // call into the library entry
    let mut stubs: BTreeSet<String> = library
        .functions
        .iter()
        .filter(|f| f.kind == FunctionKind::Library)
        .map(|f| f.name.clone())
        .collect();
    let mut calls: Vec<Vec<(String, String)>> = vec![vec![]; own];
    for (i, id) in own_ids.iter().enumerate().skip(1) {
        let p = rng.gen_range(0..i);
        calls[p].push((id.clone(), id.clone()));
    }
    let entry = rename["lib_f0"].clone();
    for _ in 0..2 {
        let p = rng.gen_range(0..own);
        calls[p].push((entry.clone(), entry.clone()));
    }
    for c in calls.iter_mut() {
        if rng.gen_bool(0.4) {
            let s = *HOST_STUBS.choose(&mut rng).unwrap();
            stubs.insert(s.to_string());
            c.push(stub_call(s));
        }
    }
    for (i, c) in calls.iter().enumerate() {
        functions.push(random_function(&mut rng, &own_ids[i], &own_ids[i], c));
    }
    functions.sort_by(|a, b| a.id.cmp(&b.id));
    functions.extend(stubs.iter().map(|s| stub(s)));

    let host = IrDocument {
        program_id: "synthhost".to_string(),
        functions,
    };
    let truth = GroundTruth::new(library.program_id.clone(), host.program_id.clone(), rename);
    ReuseFixture {
        library,
        host,
        truth,
    }
}

/// Applies semantics-preserving noise to every developer function:
/// all register operands are renamed, one run of three data-transfer
/// instructions is inserted before some block's terminator, and one
/// block is split in two.
pub fn perturb(doc: &IrDocument, seed: u64) -> IrDocument {
    let mut rng = rng(seed);
    let mut regs: Vec<&str> = REGISTERS.to_vec();
    regs.shuffle(&mut rng);
    let map: BTreeMap<&str, &str> = REGISTERS.iter().copied().zip(regs).collect();

    let mut out = doc.clone();
    for f in out
        .functions
        .iter_mut()
        .filter(|f| f.kind == FunctionKind::Developer)
    {
        for b in &mut f.blocks {
            for i in &mut b.insns {
                if i.m == "call" || i.m.starts_with('j') {
                    continue;
                }
                for o in &mut i.ops {
                    if let Some(r) = map.get(o.as_str()) {
                        *o = r.to_string();
                    } else if o.starts_with("[rbp-") {
                        *o = o.replace("[rbp-", "[rsp+");
                    }
                }
            }
        }

        let b = rng.gen_range(0..f.blocks.len());
        let at = terminator_slot(&f.blocks[b]);
        for k in 0..3 {
            let ops = [REGISTERS[k], REGISTERS[k + 3]];
            f.blocks[b].insns.insert(at, plain("mov", &ops));
        }

        let splittable: Vec<usize> = (0..f.blocks.len())
            .filter(|&i| f.blocks[i].insns.len() >= 2)
            .collect();
        if let Some(&b) = splittable.choose(&mut rng) {
            let cut = rng.gen_range(1..f.blocks[b].insns.len());
            let block = &mut f.blocks[b];
            let new_id = format!("{}_split", block.id);
            let tail = IrBlock {
                id: new_id.clone(),
                insns: block.insns.split_off(cut),
                succ: std::mem::replace(&mut block.succ, vec![new_id]),
                stub: false,
            };
            f.blocks.insert(b + 1, tail);
        }
    }
    out
}

/// Replaces about `rate` of the instructions of every developer function
/// with random ones, keeping control flow and calls intact.
pub fn mutate(doc: &IrDocument, rate: f64, seed: u64) -> IrDocument {
    let mut rng = rng(seed);
    let pool = WeightedIndex::new(BODY_POOL.iter().map(|&(_, w)| w)).unwrap();
    let mut out = doc.clone();
    for f in out
        .functions
        .iter_mut()
        .filter(|f| f.kind == FunctionKind::Developer)
    {
        mutate_function(&mut rng, &pool, f, rate);
    }
    out
}

fn mutate_function<R: Rng>(rng: &mut R, pool: &WeightedIndex<u32>, f: &mut IrFunction, rate: f64) {
    for b in &mut f.blocks {
        let slot = terminator_slot(b);
        for i in &mut b.insns[..slot] {
            if i.m != "call" && rng.gen_bool(rate) {
                *i = insn(rng, pool);
            }
        }
    }
}

/// A small target/candidate pair for exhaustive cross-checks.
///
/// The target has 3 to 8 developer functions in a connected call tree.
/// The candidate is a renamed copy where the first function stays
/// verbatim (so an instruction anchor always exists) and each other
/// function is, at random, kept verbatim, lightly mutated, heavily
/// mutated or replaced by an unrelated body.
pub fn small_pair(seed: u64) -> (IrDocument, IrDocument) {
    let mut rng = rng(seed);
    let pool = WeightedIndex::new(BODY_POOL.iter().map(|&(_, w)| w)).unwrap();
    let n = rng.gen_range(3..=8);
    let mut calls: Vec<Vec<(String, String)>> = vec![vec![]; n];
    for i in 1..n {
        let p = rng.gen_range(0..i);
        calls[p].push((format!("f{i}"), format!("f{i}")));
    }
    // occasional extra edge, possibly a back edge
    if rng.gen_bool(0.5) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !calls[a].iter().any(|(id, _)| *id == format!("f{b}")) {
            calls[a].push((format!("f{b}"), format!("f{b}")));
        }
    }
    let with_stub = rng.gen_bool(0.3);
    if with_stub {
        let i = rng.gen_range(0..n);
        calls[i].push(stub_call("memcpy"));
    }
    let mut target: Vec<IrFunction> = (0..n)
        .map(|i| random_function(&mut rng, &format!("f{i}"), &format!("f{i}"), &calls[i]))
        .collect();
    if with_stub {
        target.push(stub("memcpy"));
    }

    let mut candidate: Vec<IrFunction> = Vec::new();
    for f in &target {
        let mut g = f.clone();
        if g.kind == FunctionKind::Developer {
            let rn = |s: &String| {
                s.strip_prefix('f')
                    .map(|k| format!("g{k}"))
                    .unwrap_or_else(|| s.clone())
            };
            g.id = format!("g{}", &f.id[1..]);
            g.name = g.id.clone();
            g.callees = f.callees.iter().map(rn).collect();
            if f.id != "f0" {
                match rng.gen_range(0..4) {
                    0 => {}
                    1 => mutate_function(&mut rng, &pool, &mut g, 0.15),
                    2 => mutate_function(&mut rng, &pool, &mut g, 0.6),
                    _ => {
                        let calls: Vec<(String, String)> =
                            g.callees.iter().map(|c| (c.clone(), c.clone())).collect();
                        g = random_function(&mut rng, &g.id, &g.name, &calls);
                    }
                }
            }
        }
        candidate.push(g);
    }
    (
        IrDocument {
            program_id: format!("small_t{seed}"),
            functions: target,
        },
        IrDocument {
            program_id: format!("small_c{seed}"),
            functions: candidate,
        },
    )
}
