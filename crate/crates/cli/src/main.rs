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

//! `reusedetect`: birthmark generation, detection, reporting and evaluation.
//!
//! Exit status: 0 on success, 1 when output cannot be written, 2 when an
//! input fails to read or validate, 64 on a usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use reusedetect_core::ir::parse_program_ir_with_warnings;
use reusedetect_core::{
    build_birthmark, build_report, detect, render_dot, score_against_truth, DetectionResult,
    GroundTruth, LiftingTable, Metrics, ProgramBirthmark, SimilarityConfig,
};

const EXIT_OUTPUT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "reusedetect",
    version,
    about = "Detect partial code reuse between two programs"
)]
struct Cli {
    /// Worker threads for parallel sections; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    parallelism: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build birthmarks from IR documents.
    Birthmark(BirthmarkArgs),
    /// Match a target birthmark against a candidate birthmark.
    Detect(DetectArgs),
    /// Explain a detection result: matched subgraph and path alignments.
    Report(ReportArgs),
    /// Score a detection result against ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct BirthmarkArgs {
    /// IR documents. With more than one, `--out` must be a directory.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    /// Mnemonic lifting table replacing the built-in one.
    #[arg(long, env = "REUSEDETECT_LIFTING_TABLE")]
    lifting_table: Option<PathBuf>,

    /// Output file, or directory for several inputs; stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    target: PathBuf,
    candidate: PathBuf,

    /// Minimum path-set similarity for a searched match.
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    threshold: f64,

    /// Cap on proposals scored per target function.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_candidates: Option<u64>,

    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Dot,
}

#[derive(Args)]
struct ReportArgs {
    /// Detection result to explain.
    result: PathBuf,

    /// Birthmark of the target program the result was computed for.
    #[arg(long)]
    target: PathBuf,

    /// Birthmark of the candidate program.
    #[arg(long)]
    candidate: PathBuf,

    #[arg(long, value_enum, default_value_t = ReportFormat::Json, conflicts_with_all = ["dot", "json"])]
    format: ReportFormat,

    /// Shorthand for `--format dot`.
    #[arg(long)]
    dot: bool,

    /// Shorthand for `--format json`.
    #[arg(long, conflicts_with = "dot")]
    json: bool,

    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct EvalArgs {
    result: PathBuf,
    truth: PathBuf,

    #[arg(long, value_enum, default_value_t = EvalFormat::Json)]
    format: EvalFormat,

    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&t) {
        Ok(t)
    } else {
        Err(format!("{t} is outside [0, 1]"))
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }
}

fn input(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input(path, e))
}

fn write(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn load_birthmark(path: &Path) -> Result<ProgramBirthmark, CliError> {
    ProgramBirthmark::from_json(&read(path)?).map_err(|e| input(path, e))
}

fn load_result(path: &Path) -> Result<DetectionResult, CliError> {
    DetectionResult::from_json(&read(path)?).map_err(|e| input(path, e))
}

fn cmd_birthmark(args: BirthmarkArgs) -> Result<(), CliError> {
    let custom;
    let table = match &args.lifting_table {
        Some(p) => {
            custom = LiftingTable::load(p).map_err(|e| input(p, e))?;
            &custom
        }
        None => LiftingTable::builtin(),
    };
    let many = args.inputs.len() > 1;
    if many && args.out.as_deref().is_none_or(|o| !o.is_dir()) {
        return Err(CliError::Input(
            "several inputs need --out pointing at an existing directory".into(),
        ));
    }
    for path in &args.inputs {
        let (ir, warnings) =
            parse_program_ir_with_warnings(&read(path)?).map_err(|e| input(path, e))?;
        for w in warnings {
            log::warn!("{}: {w}", path.display());
        }
        let json = with_newline(build_birthmark(&ir, table).to_json());
        if many {
            let dir = args.out.as_deref().unwrap();
            write(
                Some(&dir.join(format!("{}.birthmark.json", ir.program_id))),
                &json,
            )?;
        } else {
            write(args.out.as_deref(), &json)?;
        }
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<(), CliError> {
    let mut config =
        SimilarityConfig::new(args.threshold).expect("threshold validated by the parser");
    if let Some(cap) = args.max_candidates {
        config = config
            .with_max_candidates(cap as usize)
            .expect("cap validated by the parser");
    }
    let tb = load_birthmark(&args.target)?;
    let cb = load_birthmark(&args.candidate)?;
    let result = detect(&tb, &cb, &config);
    write(args.out.as_deref(), &with_newline(result.to_json()))
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let result = load_result(&args.result)?;
    let tb = load_birthmark(&args.target)?;
    let cb = load_birthmark(&args.candidate)?;
    let report = build_report(&result, &tb, &cb).map_err(|e| input(&args.result, e))?;
    let format = if args.dot {
        ReportFormat::Dot
    } else if args.json {
        ReportFormat::Json
    } else {
        args.format
    };
    let text = match format {
        ReportFormat::Json => with_newline(report.to_json()),
        ReportFormat::Dot => render_dot(&report),
    };
    write(args.out.as_deref(), &text)
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let result = load_result(&args.result)?;
    let truth = GroundTruth::from_json(&read(&args.truth)?).map_err(|e| input(&args.truth, e))?;
    let metrics = score_against_truth(&result, &truth).map_err(|e| input(&args.truth, e))?;
    let text = match args.format {
        EvalFormat::Json => {
            with_newline(serde_json::to_string_pretty(&metrics).expect("metrics serialize"))
        }
        EvalFormat::Csv => format!("{}\n{}\n", Metrics::csv_header(), metrics.csv_row()),
    };
    write(args.out.as_deref(), &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                // --help and --version
                ExitCode::SUCCESS
            };
        }
    };

    if cli.parallelism > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.parallelism)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let outcome = match cli.command {
        Command::Birthmark(a) => cmd_birthmark(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Report(a) => cmd_report(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
