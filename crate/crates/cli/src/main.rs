//! `keycast`: generate, validate, check, transform, and search network
//! codes for multicast key dissemination.
//!
//! Exit codes: 0 success / passing verdict, 1 failing verdict, 2 usage or
//! data error, 3 resource limit (space caps, budgets, unfinished cursored
//! searches). All outputs are newline-terminated single JSON documents
//! except `mincut` (a bare rational) and `report` (human-readable lines).

use std::collections::BTreeSet;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use keycast_core::analysis::{
    check_key_feasibility, check_secure_feasibility, check_two_stage_feasibility,
    find_two_stage_witness, CheckMode, Coord, FeasibilityReport, TwoStageWitness,
};
use keycast_core::constructions::{
    fig1b_instance_and_code, gap_instance, sum_code, two_stage_gap_code, GapMode,
};
use keycast_core::gf2::Gf2Matrix;
use keycast_core::io as kio;
use keycast_core::model::NetworkInstance;
use keycast_core::rational::{display_rational, parse_rational};
use keycast_core::search::{
    max_feasible_rate, CodeShape, EncoderFamily, SearchOptions, SourceBehavior,
};
use keycast_core::transforms::{
    apply_preencoding, lift_secure_code, linear_key_to_secure, preencoding_permutation,
    reduce_secure_to_key, restrict_key_code_to_secure, Reduction,
};
use keycast_core::{Error, Limits, Rational64};

#[derive(Parser)]
#[command(name = "keycast", version, about = "Workbench for multicast key dissemination over coded networks")]
struct Cli {
    /// Stamp JSON outputs with the current unix time.
    #[arg(long, global = true)]
    timestamps: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit canonical instances and codes.
    Gen {
        #[command(subcommand)]
        what: GenWhat,
    },
    /// Check instance invariants and report violations.
    Validate {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact min-cut value from a source set to a sink.
    Mincut {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        /// Comma-separated source node ids.
        #[arg(long)]
        sources: String,
        #[arg(long)]
        sink: String,
    },
    /// Verify a code against an instance at a rate.
    Check {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[arg(short = 'c', long)]
        code: String,
        #[arg(long)]
        mode: String,
        /// Exact rate as P/Q (or a bare integer).
        #[arg(long)]
        rate: String,
        /// Coordinates `node:bit,...`: message bits for sec, the recovered
        /// collection for key2 (searched automatically when omitted).
        #[arg(long)]
        witness: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exhaustively scan a code shape for the best feasible rate.
    Search {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[arg(long)]
        mode: String,
        /// Shape string: `n=1,l=1,forward|free,tables|linear[,maxkey=K]`.
        #[arg(long)]
        shape: String,
        /// Candidate-space budget (default from KEYCAST_BUDGET or 2^20).
        #[arg(long)]
        budget: Option<u64>,
        /// Concurrent chunks; never changes the result.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Cursor file for resumable runs.
        #[arg(long)]
        cursor: Option<PathBuf>,
        /// Visit at most this many candidates, then save the cursor.
        #[arg(long)]
        chunk: Option<u64>,
        /// Also write the witness code here.
        #[arg(long)]
        witness_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Constructive code rewrites.
    Transform {
        #[command(subcommand)]
        what: TransformWhat,
    },
    /// Render a report document as human-readable lines.
    Report {
        #[arg(short = 'i', long, default_value = "-")]
        input: String,
    },
}

#[derive(Subcommand)]
enum GenWhat {
    /// Layered gap-family instance with alpha+1 sources.
    Gap {
        #[arg(long)]
        alpha: u32,
        /// Also observe every source node.
        #[arg(long)]
        node_all: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// The minimal two-source example instance.
    Fig1b {
        #[command(flatten)]
        out: OutArg,
    },
    /// The parity code for the two-source example.
    Fig1bCode {
        #[command(flatten)]
        out: OutArg,
    },
    /// Sum-of-sources code for a gap instance.
    SumCode {
        #[arg(long)]
        alpha: Option<u32>,
        #[arg(short = 'i', long)]
        instance: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Blocklength-2 forwarding code for a gap instance.
    TwoStageCode {
        #[arg(long)]
        alpha: Option<u32>,
        #[arg(short = 'i', long)]
        instance: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum TransformWhat {
    /// Pre-encode at the single source so the key becomes a bit prefix.
    Preencode {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[arg(short = 'c', long)]
        code: String,
        /// Also write the permutation as a JSON array.
        #[arg(long)]
        perm_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Zero redundant key-matrix columns; input `{"rows":["10",...]}`.
    ZeroColumns {
        #[arg(long, default_value = "-")]
        matrix: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Rewrite a linear key code on an eavesdropper-free instance into a
    /// secure-multicast code.
    LinearToSecure {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[arg(short = 'c', long)]
        code: String,
        /// Write only the code document here.
        #[arg(long)]
        code_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Add the key terminal and its rate-capacity edge.
    Reduce {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[arg(long)]
        rate: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Lift a secure code onto the reduced instance.
    Lift {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[arg(short = 'c', long)]
        code: String,
        #[arg(long)]
        rate: String,
        /// Message coordinates of the secure code, `node:bit,...`.
        #[arg(long)]
        witness: String,
        /// Also write the reduced instance here.
        #[arg(long)]
        instance_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Restrict a key code on a reduced instance back to a secure code.
    Restrict {
        #[arg(short = 'i', long, default_value = "-")]
        instance: String,
        #[arg(short = 'c', long)]
        code: String,
        #[arg(long, default_value = "d_key")]
        key_terminal: String,
        #[arg(long, default_value = "e_key")]
        key_edge: String,
        /// Write only the code document here.
        #[arg(long)]
        code_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("keycast: {}: {err}", err.code());
            if err.is_resource_limit() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn limits_from_env() -> Limits {
    let mut limits = Limits::default();
    if let Ok(v) = std::env::var("KEYCAST_ENUM_CAP") {
        if let Ok(cap) = v.parse::<u32>() {
            limits.enum_cap = cap;
            limits.witness_cap = limits.witness_cap.min(cap);
        }
    }
    if let Ok(v) = std::env::var("KEYCAST_BUDGET") {
        if let Ok(budget) = v.parse::<u64>() {
            limits.budget = budget;
        }
    }
    limits
}

fn read_input(path: &str) -> Result<String, Error> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn emit(out: &OutArg, content: &str) -> Result<(), Error> {
    let line = format!("{content}\n");
    match &out.out {
        None => print!("{line}"),
        Some(path) => std::fs::write(path, line)?,
    }
    Ok(())
}

fn write_file(path: &PathBuf, content: &str) -> Result<(), Error> {
    std::fs::write(path, format!("{content}\n"))?;
    Ok(())
}

fn load_instance(path: &str) -> Result<NetworkInstance, Error> {
    kio::instance_from_json(&read_input(path)?)
}

fn load_code(path: &str) -> Result<keycast_core::code::NetworkCode, Error> {
    kio::code_from_json(&read_input(path)?)
}

fn parse_mode(mode: &str) -> Result<CheckMode, Error> {
    match mode {
        "key" => Ok(CheckMode::Key),
        "sec" => Ok(CheckMode::Sec),
        "key2" => Ok(CheckMode::Key2),
        other => Err(Error::BadFormat(format!(
            "mode must be key, sec, or key2, got `{other}`"
        ))),
    }
}

fn now_timestamp(enabled: bool) -> Option<u64> {
    enabled.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

fn run(cli: Cli) -> Result<u8, Error> {
    let limits = limits_from_env();
    let timestamp = now_timestamp(cli.timestamps);
    match cli.command {
        Command::Gen { what } => run_gen(what),
        Command::Validate { instance, out } => {
            let inst = load_instance(&instance)?;
            let report = inst.validate();
            emit(&out, &kio::validation_to_json(&report))?;
            Ok(if report.is_valid() { 0 } else { 1 })
        }
        Command::Mincut {
            instance,
            sources,
            sink,
        } => {
            let inst = load_instance(&instance)?;
            let sources: BTreeSet<String> = sources
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            let value = inst.min_cut(&sources, &sink)?;
            println!("{}", display_rational(value));
            Ok(0)
        }
        Command::Check {
            instance,
            code,
            mode,
            rate,
            witness,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let code = load_code(&code)?;
            let rate = parse_rational(&rate)?;
            let mode = parse_mode(&mode)?;
            let report = run_check(&inst, &code, mode, rate, witness.as_deref(), &limits)?;
            emit(&out, &kio::report_to_json(&report, timestamp))?;
            Ok(if report.overall { 0 } else { 1 })
        }
        Command::Search {
            instance,
            mode,
            shape,
            budget,
            jobs,
            cursor,
            chunk,
            witness_out,
            out,
        } => run_search(
            &instance,
            &mode,
            &shape,
            budget,
            jobs,
            cursor,
            chunk,
            witness_out,
            out,
            limits,
            timestamp,
        ),
        Command::Transform { what } => run_transform(what, &limits),
        Command::Report { input } => {
            let report = kio::report_from_json(&read_input(&input)?)?;
            print_report(&report);
            Ok(if report.overall { 0 } else { 1 })
        }
    }
}

fn run_gen(what: GenWhat) -> Result<u8, Error> {
    let gap_from = |alpha: Option<u32>, instance: &Option<String>| -> Result<NetworkInstance, Error> {
        match (alpha, instance) {
            (Some(a), None) => gap_instance(a, GapMode::EdgeSets),
            (None, Some(path)) => load_instance(path),
            _ => Err(Error::BadFormat(
                "give exactly one of --alpha or --instance".into(),
            )),
        }
    };
    match what {
        GenWhat::Gap {
            alpha,
            node_all,
            out,
        } => {
            let mode = if node_all {
                GapMode::NodeAll
            } else {
                GapMode::EdgeSets
            };
            emit(&out, &kio::instance_to_json(&gap_instance(alpha, mode)?))?;
            Ok(0)
        }
        GenWhat::Fig1b { out } => {
            let (inst, _) = fig1b_instance_and_code();
            emit(&out, &kio::instance_to_json(&inst))?;
            Ok(0)
        }
        GenWhat::Fig1bCode { out } => {
            let (_, code) = fig1b_instance_and_code();
            emit(&out, &kio::code_to_json(&code))?;
            Ok(0)
        }
        GenWhat::SumCode {
            alpha,
            instance,
            out,
        } => {
            let inst = gap_from(alpha, &instance)?;
            emit(&out, &kio::code_to_json(&sum_code(&inst)?))?;
            Ok(0)
        }
        GenWhat::TwoStageCode {
            alpha,
            instance,
            out,
        } => {
            let inst = gap_from(alpha, &instance)?;
            emit(&out, &kio::code_to_json(&two_stage_gap_code(&inst)?))?;
            Ok(0)
        }
    }
}

fn run_check(
    inst: &NetworkInstance,
    code: &keycast_core::code::NetworkCode,
    mode: CheckMode,
    rate: Rational64,
    witness: Option<&str>,
    limits: &Limits,
) -> Result<FeasibilityReport, Error> {
    match mode {
        CheckMode::Key => check_key_feasibility(inst, code, rate, limits),
        CheckMode::Sec => {
            let coords = kio::coords_from_arg(witness.ok_or_else(|| {
                Error::BadCoords("sec mode needs --witness message coordinates".into())
            })?)?;
            check_secure_feasibility(inst, code, rate, &coords, limits)
        }
        CheckMode::Key2 => {
            let coords = match witness {
                Some(arg) => kio::coords_from_arg(arg)?,
                None => match find_two_stage_witness(inst, code, rate, limits)? {
                    Some(w) => {
                        eprintln!("keycast: witness found: {}", kio::coords_to_arg(&w.coords));
                        w.coords
                    }
                    None => {
                        eprintln!("keycast: no witness collection exists; checking all bits");
                        all_source_coords(code)
                    }
                },
            };
            check_two_stage_feasibility(inst, code, rate, &TwoStageWitness { coords }, limits)
        }
    }
}

fn all_source_coords(code: &keycast_core::code::NetworkCode) -> Vec<Coord> {
    code.source_bits
        .iter()
        .flat_map(|(node, bits)| (0..*bits).map(move |b| Coord::new(node.clone(), b)))
        .collect()
}

fn parse_shape(text: &str, instance: &NetworkInstance) -> Result<CodeShape, Error> {
    let mut blocklength = None;
    let mut bits = None;
    let mut family = None;
    let mut behavior = None;
    let mut max_key_bits = None;
    for token in text.split(',') {
        let token = token.trim();
        match token {
            "tables" => family = Some(EncoderFamily::AllTables),
            "linear" => family = Some(EncoderFamily::Linear),
            "forward" => behavior = Some(SourceBehavior::Forward),
            "free" => behavior = Some(SourceBehavior::Free),
            _ => {
                let (k, v) = token.split_once('=').ok_or_else(|| {
                    Error::BadFormat(format!("bad shape token `{token}`"))
                })?;
                let value: u32 = v
                    .parse()
                    .map_err(|_| Error::BadFormat(format!("bad shape token `{token}`")))?;
                match k {
                    "n" => blocklength = Some(value),
                    "l" | "bits" => bits = Some(value),
                    "maxkey" => max_key_bits = Some(value),
                    _ => return Err(Error::BadFormat(format!("bad shape token `{token}`"))),
                }
            }
        }
    }
    let blocklength =
        blocklength.ok_or_else(|| Error::BadFormat("shape needs n=<blocklength>".into()))?;
    let bits = bits.ok_or_else(|| Error::BadFormat("shape needs l=<bits per source>".into()))?;
    let source_bits = instance
        .sources
        .iter()
        .map(|s| (s.node.clone(), bits))
        .collect();
    let total = bits * instance.sources.len() as u32;
    Ok(CodeShape {
        blocklength,
        source_bits,
        family: family.ok_or_else(|| Error::BadFormat("shape needs tables|linear".into()))?,
        source_behavior: behavior
            .ok_or_else(|| Error::BadFormat("shape needs forward|free".into()))?,
        max_key_bits: max_key_bits.unwrap_or(total),
    })
}

#[derive(Serialize, Deserialize)]
struct CursorFile {
    format: String,
    next: u64,
    best: Option<(u32, u64)>,
    done: bool,
}

#[allow(clippy::too_many_arguments)]
fn run_search(
    instance: &str,
    mode: &str,
    shape: &str,
    budget: Option<u64>,
    jobs: usize,
    cursor: Option<PathBuf>,
    chunk: Option<u64>,
    witness_out: Option<PathBuf>,
    out: OutArg,
    mut limits: Limits,
    timestamp: Option<u64>,
) -> Result<u8, Error> {
    if let Some(b) = budget {
        limits.budget = b;
    }
    let inst = load_instance(instance)?;
    let mode = parse_mode(mode)?;
    let shape = parse_shape(shape, &inst)?;

    let mut opts = SearchOptions {
        jobs,
        max_candidates: chunk,
        ..SearchOptions::default()
    };
    if let Some(path) = &cursor {
        if path.exists() {
            let file: CursorFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            if file.format != "keycast-cursor/1" {
                return Err(Error::BadFormat("not a cursor file".into()));
            }
            if !file.done {
                opts.start = file.next;
                opts.prior_best = file.best;
            }
        }
    }

    let result = max_feasible_rate(&inst, mode, &shape, &limits, &opts)?;
    if let Some(path) = &cursor {
        let file = CursorFile {
            format: "keycast-cursor/1".into(),
            next: result.next_cursor.unwrap_or(0),
            best: result.best_candidate,
            done: result.exhaustive,
        };
        write_file(path, &serde_json::to_string(&file)?)?;
    }
    if let (Some(path), Some(witness)) = (&witness_out, &result.witness) {
        write_file(path, &kio::code_to_json(witness))?;
    }
    emit(
        &out,
        &kio::search_result_to_json(&result, shape.blocklength, timestamp),
    )?;
    Ok(if result.exhaustive { 0 } else { 3 })
}

fn run_transform(what: TransformWhat, limits: &Limits) -> Result<u8, Error> {
    match what {
        TransformWhat::Preencode {
            instance,
            code,
            perm_out,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let code = load_code(&code)?;
            let perm = preencoding_permutation(&code.key, code.key.out_bits(), limits)?;
            let recoded = apply_preencoding(&inst, &code, &perm, limits)?;
            if let Some(path) = &perm_out {
                write_file(path, &kio::permutation_to_json(&perm))?;
            }
            emit(&out, &kio::code_to_json(&recoded))?;
            Ok(0)
        }
        TransformWhat::ZeroColumns { matrix, out } => {
            #[derive(Serialize, Deserialize)]
            struct MatrixFile {
                rows: Vec<String>,
            }
            let file: MatrixFile = serde_json::from_str(&read_input(&matrix)?)?;
            let m = if file.rows.is_empty() {
                Gf2Matrix::zero(0, 0)?
            } else {
                Gf2Matrix::from_bitstrings(&file.rows)?
            };
            let (zeroed, kept) = keycast_core::transforms::zero_redundant_columns(&m);
            #[derive(Serialize)]
            struct Output {
                matrix: MatrixFile,
                kept: Vec<u32>,
            }
            emit(
                &out,
                &serde_json::to_string(&Output {
                    matrix: MatrixFile {
                        rows: zeroed.to_bitstrings(),
                    },
                    kept,
                })?,
            )?;
            Ok(0)
        }
        TransformWhat::LinearToSecure {
            instance,
            code,
            code_out,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let code = load_code(&code)?;
            let (secure, coords) = linear_key_to_secure(&inst, &code)?;
            emit_code_with_coords(&out, code_out, &secure, &coords)
        }
        TransformWhat::Reduce {
            instance,
            rate,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let rate = parse_rational(&rate)?;
            let (reduced, reduction) = reduce_secure_to_key(&inst, rate)?;
            eprintln!(
                "keycast: added terminal `{}` fed by edge `{}` from `{}`",
                reduction.key_terminal, reduction.key_edge, reduction.message_source
            );
            emit(&out, &kio::instance_to_json(&reduced))?;
            Ok(0)
        }
        TransformWhat::Lift {
            instance,
            code,
            rate,
            witness,
            instance_out,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let code = load_code(&code)?;
            let rate = parse_rational(&rate)?;
            let coords = kio::coords_from_arg(&witness)?;
            let (reduced, reduction) = reduce_secure_to_key(&inst, rate)?;
            let lifted = lift_secure_code(&reduced, &reduction, &code, &coords)?;
            if let Some(path) = &instance_out {
                write_file(path, &kio::instance_to_json(&reduced))?;
            }
            emit(&out, &kio::code_to_json(&lifted))?;
            Ok(0)
        }
        TransformWhat::Restrict {
            instance,
            code,
            key_terminal,
            key_edge,
            code_out,
            out,
        } => {
            let reduced = load_instance(&instance)?;
            let code = load_code(&code)?;
            let edge = reduced
                .edge(&key_edge)
                .ok_or_else(|| Error::UnknownEdge(key_edge.clone()))?;
            let reduction = Reduction {
                key_terminal,
                key_edge: key_edge.clone(),
                message_source: edge.tail.clone(),
            };
            let (secure, coords) =
                restrict_key_code_to_secure(&reduced, &reduction, &code, limits)?;
            emit_code_with_coords(&out, code_out, &secure, &coords)
        }
    }
}

fn emit_code_with_coords(
    out: &OutArg,
    code_out: Option<PathBuf>,
    code: &keycast_core::code::NetworkCode,
    coords: &[Coord],
) -> Result<u8, Error> {
    if let Some(path) = &code_out {
        write_file(path, &kio::code_to_json(code))?;
    }
    #[derive(Serialize)]
    struct CoordOut {
        source: String,
        bit: u32,
    }
    #[derive(Serialize)]
    struct Envelope {
        code: serde_json::Value,
        message_coords: Vec<CoordOut>,
    }
    let envelope = Envelope {
        code: serde_json::from_str(&kio::code_to_json(code))?,
        message_coords: coords
            .iter()
            .map(|c| CoordOut {
                source: c.source.clone(),
                bit: c.bit,
            })
            .collect(),
    };
    emit(out, &serde_json::to_string(&envelope)?)?;
    Ok(0)
}

fn print_report(report: &FeasibilityReport) {
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!(
        "mode: {}  rate: {}  blocklength: {}",
        report.mode.as_str(),
        display_rational(report.rate),
        report.blocklength
    );
    println!("rate:      {}", verdict(report.rate_verdict.ok));
    let detail = |cex: &Option<keycast_core::analysis::Counterexample>| -> String {
        let Some(c) = cex else {
            return String::new();
        };
        let mut parts = Vec::new();
        if let Some(m) = c.assignment {
            parts.push(format!("assignment {}", kio::assignment_hex(m)));
        }
        if let Some(t) = &c.terminal {
            parts.push(format!("terminal {t}"));
        }
        if let Some(i) = c.eavesdrop_set {
            parts.push(format!("eavesdrop set {i}"));
        }
        if parts.is_empty() {
            String::new()
        } else {
            format!(" ({})", parts.join(", "))
        }
    };
    println!(
        "decoding:  {}{}",
        verdict(report.decoding.ok),
        detail(&report.decoding.counterexample)
    );
    println!(
        "secrecy:   {}{}",
        verdict(report.secrecy.ok),
        detail(&report.secrecy.counterexample)
    );
    match &report.witness {
        None => println!("witness:   n/a"),
        Some(w) => println!("witness:   {}{}", verdict(w.ok), detail(&w.counterexample)),
    }
    println!(
        "advisory:  H(K)={:.6} bits, max H(K|terminal view)={:.6}, max I(K;eavesdropper)={:.6}",
        report.advisory.key_entropy_bits,
        report.advisory.max_decoder_conditional_entropy_bits,
        report.advisory.max_eavesdrop_mutual_information_bits
    );
    println!("overall:   {}", verdict(report.overall));
}
