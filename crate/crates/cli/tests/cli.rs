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

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use reusedetect_core::synth::reuse_fixture;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_reusedetect"));
    c.env_remove("REUSEDETECT_LIFTING_TABLE");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Writes birthmarks for the synthetic library and host into `dir`.
fn synthetic_birthmarks(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let fx = reuse_fixture(0);
    let lib_ir = dir.join("lib.ir.json");
    let host_ir = dir.join("host.ir.json");
    std::fs::write(&lib_ir, serde_json::to_string(&fx.library).unwrap()).unwrap();
    std::fs::write(&host_ir, serde_json::to_string(&fx.host).unwrap()).unwrap();
    let truth = dir.join("truth.json");
    std::fs::write(&truth, serde_json::to_string(&fx.truth).unwrap()).unwrap();
    let (lib, host) = (dir.join("lib.bm.json"), dir.join("host.bm.json"));
    assert_eq!(code(&run(&["birthmark", s(&lib_ir), "--out", s(&lib)])), 0);
    assert_eq!(
        code(&run(&["birthmark", s(&host_ir), "--out", s(&host)])),
        0
    );
    (lib, host, truth)
}

#[test]
fn birthmark_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let input = fixture("compressor.json");
    assert_eq!(code(&run(&["birthmark", s(&input), "--out", s(&a)])), 0);
    assert_eq!(
        code(&run(&[
            "birthmark",
            s(&input),
            "-o",
            s(&b),
            "--parallelism",
            "3"
        ])),
        0
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(json(&a)["program_id"], "compressor");
}

#[test]
fn birthmark_to_stdout() {
    let o = run(&["birthmark", s(&fixture("minimal.json"))]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        v["functions"]["main"]["flat_ops"],
        serde_json::json!(["XOR", "RET"])
    );
}

#[test]
fn dangling_edge_is_a_validation_error() {
    let o = run(&["birthmark", s(&fixture("dangling_edge.json"))]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("B0") && err.contains("B9"), "{err}");
    assert!(err.contains("functions[0].blocks[0].succ[0]"), "{err}");
}

#[test]
fn missing_input_is_a_validation_error() {
    assert_eq!(code(&run(&["birthmark", "/nonexistent/ir.json"])), 2);
}

#[test]
fn self_detection() {
    let dir = tempfile::tempdir().unwrap();
    let bm = dir.path().join("bm.json");
    assert_eq!(
        code(&run(&[
            "birthmark",
            s(&fixture("compressor.json")),
            "-o",
            s(&bm)
        ])),
        0
    );
    let out = dir.path().join("r.json");
    assert_eq!(code(&run(&["detect", s(&bm), s(&bm), "-o", s(&out)])), 0);
    assert_eq!(json(&out)["program_similarity"], 1.0);
}

#[test]
fn library_in_host() {
    let dir = tempfile::tempdir().unwrap();
    let (lib, host, truth) = synthetic_birthmarks(dir.path());
    let result = dir.path().join("r.json");
    assert_eq!(
        code(&run(&[
            "detect",
            s(&lib),
            s(&host),
            "--threshold",
            "0.5",
            "-o",
            s(&result)
        ])),
        0
    );
    assert_eq!(json(&result)["program_similarity"], 0.25);

    let metrics = dir.path().join("m.json");
    assert_eq!(
        code(&run(&["eval", s(&result), s(&truth), "-o", s(&metrics)])),
        0
    );
    let m = json(&metrics);
    assert_eq!(
        (m["precision"].as_f64(), m["recall"].as_f64()),
        (Some(1.0), Some(1.0))
    );
    assert_eq!(m["tp"], 10);

    let o = run(&["eval", s(&result), s(&truth), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("tp,fp,fn,tn,precision"), "{csv}");

    let o = run(&[
        "report",
        s(&result),
        "--target",
        s(&lib),
        "--candidate",
        s(&host),
        "--dot",
    ]);
    assert_eq!(code(&o), 0);
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("digraph"));
    assert_eq!(
        dot.matches("style=dashed").count(),
        json(&result)["matched"].as_array().unwrap().len()
    );

    let o = run(&[
        "report",
        s(&result),
        "--target",
        s(&lib),
        "--candidate",
        s(&host),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["evidence"].as_array().unwrap().len(), 10);
}

#[test]
fn threshold_out_of_range_is_usage_error() {
    let bm = fixture("minimal.json");
    assert_eq!(
        code(&run(&["detect", s(&bm), s(&bm), "--threshold", "1.01"])),
        64
    );
    assert_eq!(
        code(&run(&["detect", s(&bm), s(&bm), "--threshold", "nan"])),
        64
    );
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(
        code(&run(&[
            "report",
            "r.json",
            "--target",
            "a",
            "--candidate",
            "b",
            "--dot",
            "--json"
        ])),
        64
    );
}

#[test]
fn ir_is_not_a_birthmark() {
    let ir = fixture("minimal.json");
    let o = run(&["detect", s(&ir), s(&ir)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn birthmark_version_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let bm = dir.path().join("bm.json");
    assert_eq!(
        code(&run(&[
            "birthmark",
            s(&fixture("minimal.json")),
            "-o",
            s(&bm)
        ])),
        0
    );
    let text = std::fs::read_to_string(&bm)
        .unwrap()
        .replace("\"format_version\": 1", "\"format_version\": 99");
    std::fs::write(&bm, text).unwrap();
    let o = run(&["detect", s(&bm), s(&bm)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("99"));
}

#[test]
fn empty_result_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let (t, c) = (dir.path().join("t.json"), dir.path().join("c.json"));
    assert_eq!(
        code(&run(&[
            "birthmark",
            s(&fixture("minimal.json")),
            "-o",
            s(&t)
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "birthmark",
            s(&fixture("branch_cfg.json")),
            "-o",
            s(&c)
        ])),
        0
    );
    let r = dir.path().join("r.json");
    assert_eq!(code(&run(&["detect", s(&t), s(&c), "-o", s(&r)])), 0);
    let o = run(&["report", s(&r), "--target", s(&t), "--candidate", s(&c)]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["subgraph"]["node_pairs"], serde_json::json!([]));
    // birthmarks swapped: the result was not computed for them
    assert_eq!(
        code(&run(&[
            "report",
            s(&r),
            "--target",
            s(&c),
            "--candidate",
            s(&t)
        ])),
        2
    );
}

#[test]
fn lifting_table_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.tbl");
    std::fs::write(&table, "xor ADD\nret RET\n").unwrap();
    let o = bin()
        .args(["birthmark", s(&fixture("minimal.json"))])
        .env("REUSEDETECT_LIFTING_TABLE", &table)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        v["functions"]["main"]["flat_ops"],
        serde_json::json!(["ADD", "RET"])
    );

    std::fs::write(&table, "xor NOT_A_CLASS\n").unwrap();
    let o = run(&[
        "birthmark",
        s(&fixture("minimal.json")),
        "--lifting-table",
        s(&table),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn batch_birthmarks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "birthmark",
        s(&fixture("compressor.json")),
        s(&fixture("archiver.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("compressor.birthmark.json").exists());
    assert!(dir.path().join("archiver.birthmark.json").exists());
    let o = run(&[
        "birthmark",
        s(&fixture("compressor.json")),
        s(&fixture("archiver.json")),
    ]);
    assert_eq!(code(&o), 2);
}
