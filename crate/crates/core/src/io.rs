//! Versioned JSON file formats.
//!
//! Three document kinds are exchanged: instances (`keycast-instance/1`),
//! codes (`keycast-code/1`), and feasibility reports (`keycast-report/1`);
//! search runs additionally emit `keycast-search/1` documents. All output
//! is a single compact JSON document with deterministic key order. Code
//! files record the input-ordering convention explicitly: every function
//! reads its node's incoming edge messages in ascending edge-id order
//! followed by the node's own source bits, and bitstrings are MSB-first.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    Advisory, CheckMode, Coord, Counterexample, FeasibilityReport, Verdict,
};
use crate::code::{BitFunction, NetworkCode, TruthTable};
use crate::gf2::Gf2Matrix;
use crate::model::{
    EavesdropSet, Edge, NetworkInstance, SourceDecl, SourceRole, ValidationReport,
};
use crate::search::SearchResult;
use crate::transforms::Permutation;
use crate::{Error, Result};

pub const INSTANCE_FORMAT: &str = "keycast-instance/1";
pub const CODE_FORMAT: &str = "keycast-code/1";
pub const REPORT_FORMAT: &str = "keycast-report/1";
pub const SEARCH_FORMAT: &str = "keycast-search/1";
pub const INPUT_ORDER: &str = "in_edges_by_id_then_source_bits";

fn check_format(found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::BadFormat(format!(
            "expected format `{want}`, found `{found}`"
        )));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RatWire {
    num: i64,
    den: i64,
}

impl RatWire {
    fn to_rational(&self) -> Result<Rational64> {
        if self.den == 0 {
            return Err(Error::BadFormat("zero denominator".into()));
        }
        Ok(Rational64::new(self.num, self.den))
    }
    fn from_rational(r: Rational64) -> Self {
        RatWire {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

// ---------------------------------------------------------------------------
// Instances

#[derive(Serialize, Deserialize)]
struct EdgeWire {
    id: String,
    tail: String,
    head: String,
    capacity: RatWire,
}

#[derive(Serialize, Deserialize)]
struct SourceWire {
    node: String,
    role: String,
}

#[derive(Serialize, Deserialize)]
struct EavesdropWire {
    edges: Vec<String>,
    observed_sources: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    format: String,
    nodes: Vec<String>,
    edges: Vec<EdgeWire>,
    sources: Vec<SourceWire>,
    terminals: Vec<String>,
    eavesdrop_sets: Vec<EavesdropWire>,
}

pub fn instance_to_json(instance: &NetworkInstance) -> String {
    let wire = InstanceWire {
        format: INSTANCE_FORMAT.to_string(),
        nodes: instance.nodes.clone(),
        edges: instance
            .edges
            .iter()
            .map(|e| EdgeWire {
                id: e.id.clone(),
                tail: e.tail.clone(),
                head: e.head.clone(),
                capacity: RatWire::from_rational(e.capacity),
            })
            .collect(),
        sources: instance
            .sources
            .iter()
            .map(|s| SourceWire {
                node: s.node.clone(),
                role: s.role.as_str().to_string(),
            })
            .collect(),
        terminals: instance.terminals.clone(),
        eavesdrop_sets: instance
            .eavesdrop_sets
            .iter()
            .map(|b| EavesdropWire {
                edges: b.edges.iter().cloned().collect(),
                observed_sources: b.observed_sources.iter().cloned().collect(),
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("instance serializes")
}

fn parse_role(role: &str) -> Result<SourceRole> {
    match role {
        "message" => Ok(SourceRole::Message),
        "random" => Ok(SourceRole::Random),
        "both" => Ok(SourceRole::Both),
        other => Err(Error::BadFormat(format!("unknown source role `{other}`"))),
    }
}

pub fn instance_from_json(text: &str) -> Result<NetworkInstance> {
    let wire: InstanceWire = serde_json::from_str(text)?;
    check_format(&wire.format, INSTANCE_FORMAT)?;
    Ok(NetworkInstance {
        nodes: wire.nodes,
        edges: wire
            .edges
            .into_iter()
            .map(|e| {
                Ok(Edge {
                    id: e.id,
                    tail: e.tail,
                    head: e.head,
                    capacity: e.capacity.to_rational()?,
                })
            })
            .collect::<Result<_>>()?,
        sources: wire
            .sources
            .into_iter()
            .map(|s| {
                Ok(SourceDecl {
                    node: s.node,
                    role: parse_role(&s.role)?,
                })
            })
            .collect::<Result<_>>()?,
        terminals: wire.terminals,
        eavesdrop_sets: wire
            .eavesdrop_sets
            .into_iter()
            .map(|b| EavesdropSet {
                edges: b.edges.into_iter().collect::<BTreeSet<_>>(),
                observed_sources: b.observed_sources.into_iter().collect(),
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Codes

#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
enum FuncWire {
    #[serde(rename = "table")]
    Table { out_bits: u32, table: Vec<u64> },
    #[serde(rename = "gf2")]
    Gf2 { cols: u32, rows: Vec<String> },
}

impl FuncWire {
    fn from_function(f: &BitFunction) -> Self {
        match f {
            BitFunction::Table(t) => FuncWire::Table {
                out_bits: t.out_bits(),
                table: t.entries().to_vec(),
            },
            BitFunction::Linear(m) => FuncWire::Gf2 {
                cols: m.cols(),
                rows: m.to_bitstrings(),
            },
        }
    }

    fn to_function(&self) -> Result<BitFunction> {
        match self {
            FuncWire::Table { out_bits, table } => {
                if !table.len().is_power_of_two() {
                    return Err(Error::BadFormat(format!(
                        "table length {} is not a power of two",
                        table.len()
                    )));
                }
                let in_bits = table.len().trailing_zeros();
                Ok(BitFunction::Table(TruthTable::new(
                    in_bits,
                    *out_bits,
                    table.clone(),
                )?))
            }
            FuncWire::Gf2 { cols, rows } => {
                let m = if rows.is_empty() {
                    Gf2Matrix::zero(0, *cols)?
                } else {
                    let m = Gf2Matrix::from_bitstrings(rows)?;
                    if m.cols() != *cols {
                        return Err(Error::BadFormat(format!(
                            "matrix declares {cols} columns but rows have {}",
                            m.cols()
                        )));
                    }
                    m
                };
                Ok(BitFunction::Linear(m))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CodeWire {
    format: String,
    blocklength: u32,
    input_order: String,
    source_bits: BTreeMap<String, u32>,
    edge_encoders: BTreeMap<String, FuncWire>,
    decoders: BTreeMap<String, FuncWire>,
    key: FuncWire,
}

pub fn code_to_json(code: &NetworkCode) -> String {
    let wire = CodeWire {
        format: CODE_FORMAT.to_string(),
        blocklength: code.blocklength,
        input_order: INPUT_ORDER.to_string(),
        source_bits: code.source_bits.clone(),
        edge_encoders: code
            .edge_encoders
            .iter()
            .map(|(k, v)| (k.clone(), FuncWire::from_function(v)))
            .collect(),
        decoders: code
            .decoders
            .iter()
            .map(|(k, v)| (k.clone(), FuncWire::from_function(v)))
            .collect(),
        key: FuncWire::from_function(&code.key),
    };
    serde_json::to_string(&wire).expect("code serializes")
}

pub fn code_from_json(text: &str) -> Result<NetworkCode> {
    let wire: CodeWire = serde_json::from_str(text)?;
    check_format(&wire.format, CODE_FORMAT)?;
    if wire.input_order != INPUT_ORDER {
        return Err(Error::BadFormat(format!(
            "unsupported input order `{}`",
            wire.input_order
        )));
    }
    Ok(NetworkCode {
        blocklength: wire.blocklength,
        source_bits: wire.source_bits,
        edge_encoders: wire
            .edge_encoders
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.to_function()?)))
            .collect::<Result<_>>()?,
        decoders: wire
            .decoders
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.to_function()?)))
            .collect::<Result<_>>()?,
        key: wire.key.to_function()?,
    })
}

// ---------------------------------------------------------------------------
// Reports

pub fn assignment_hex(value: u64) -> String {
    format!("{value:#x}")
}

pub fn assignment_from_hex(text: &str) -> Result<u64> {
    let digits = text
        .strip_prefix("0x")
        .ok_or_else(|| Error::BadFormat(format!("assignment `{text}` lacks 0x prefix")))?;
    u64::from_str_radix(digits, 16)
        .map_err(|_| Error::BadFormat(format!("bad assignment `{text}`")))
}

#[derive(Serialize, Deserialize)]
struct CexWire {
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eavesdrop_set: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terminal: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct VerdictWire {
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<CexWire>,
}

#[derive(Serialize, Deserialize)]
struct VerdictsWire {
    rate: VerdictWire,
    decoding: VerdictWire,
    secrecy: VerdictWire,
    witness: Option<VerdictWire>,
}

#[derive(Serialize, Deserialize)]
struct AdvisoryWire {
    key_entropy_bits: f64,
    max_decoder_conditional_entropy_bits: f64,
    max_eavesdrop_mutual_information_bits: f64,
}

#[derive(Serialize, Deserialize)]
struct ReportWire {
    format: String,
    mode: String,
    rate: RatWire,
    blocklength: u32,
    verdicts: VerdictsWire,
    advisory: AdvisoryWire,
    overall: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

fn verdict_wire(v: &Verdict) -> VerdictWire {
    VerdictWire {
        ok: v.ok,
        counterexample: v.counterexample.as_ref().map(|c| CexWire {
            assignment: c.assignment.map(assignment_hex),
            eavesdrop_set: c.eavesdrop_set,
            terminal: c.terminal.clone(),
        }),
    }
}

fn verdict_from_wire(w: &VerdictWire) -> Result<Verdict> {
    Ok(Verdict {
        ok: w.ok,
        counterexample: match &w.counterexample {
            None => None,
            Some(c) => Some(Counterexample {
                assignment: c.assignment.as_deref().map(assignment_from_hex).transpose()?,
                eavesdrop_set: c.eavesdrop_set,
                terminal: c.terminal.clone(),
            }),
        },
    })
}

fn parse_mode(mode: &str) -> Result<CheckMode> {
    match mode {
        "key" => Ok(CheckMode::Key),
        "sec" => Ok(CheckMode::Sec),
        "key2" => Ok(CheckMode::Key2),
        other => Err(Error::BadFormat(format!("unknown mode `{other}`"))),
    }
}

pub fn report_to_json(report: &FeasibilityReport, timestamp: Option<u64>) -> String {
    let wire = ReportWire {
        format: REPORT_FORMAT.to_string(),
        mode: report.mode.as_str().to_string(),
        rate: RatWire::from_rational(report.rate),
        blocklength: report.blocklength,
        verdicts: VerdictsWire {
            rate: verdict_wire(&report.rate_verdict),
            decoding: verdict_wire(&report.decoding),
            secrecy: verdict_wire(&report.secrecy),
            witness: report.witness.as_ref().map(verdict_wire),
        },
        advisory: AdvisoryWire {
            key_entropy_bits: report.advisory.key_entropy_bits,
            max_decoder_conditional_entropy_bits: report
                .advisory
                .max_decoder_conditional_entropy_bits,
            max_eavesdrop_mutual_information_bits: report
                .advisory
                .max_eavesdrop_mutual_information_bits,
        },
        overall: report.overall,
        timestamp,
    };
    serde_json::to_string(&wire).expect("report serializes")
}

pub fn report_from_json(text: &str) -> Result<FeasibilityReport> {
    let wire: ReportWire = serde_json::from_str(text)?;
    check_format(&wire.format, REPORT_FORMAT)?;
    Ok(FeasibilityReport {
        mode: parse_mode(&wire.mode)?,
        rate: wire.rate.to_rational()?,
        blocklength: wire.blocklength,
        rate_verdict: verdict_from_wire(&wire.verdicts.rate)?,
        decoding: verdict_from_wire(&wire.verdicts.decoding)?,
        secrecy: verdict_from_wire(&wire.verdicts.secrecy)?,
        witness: wire
            .verdicts
            .witness
            .as_ref()
            .map(verdict_from_wire)
            .transpose()?,
        advisory: Advisory {
            key_entropy_bits: wire.advisory.key_entropy_bits,
            max_decoder_conditional_entropy_bits: wire
                .advisory
                .max_decoder_conditional_entropy_bits,
            max_eavesdrop_mutual_information_bits: wire
                .advisory
                .max_eavesdrop_mutual_information_bits,
        },
        overall: wire.overall,
    })
}

// ---------------------------------------------------------------------------
// Validation reports, search results, permutations

pub fn validation_to_json(report: &ValidationReport) -> String {
    #[derive(Serialize)]
    struct ViolationWire<'a> {
        code: &'static str,
        subject: &'a str,
        message: &'a str,
    }
    #[derive(Serialize)]
    struct Wire<'a> {
        format: &'static str,
        valid: bool,
        violations: Vec<ViolationWire<'a>>,
        notes: &'a [String],
    }
    serde_json::to_string(&Wire {
        format: "keycast-validation/1",
        valid: report.is_valid(),
        violations: report
            .violations
            .iter()
            .map(|v| ViolationWire {
                code: v.code.as_str(),
                subject: &v.subject,
                message: &v.message,
            })
            .collect(),
        notes: &report.notes,
    })
    .expect("validation serializes")
}

#[derive(Serialize, Deserialize)]
struct CoordWire {
    source: String,
    bit: u32,
}

#[derive(Serialize, Deserialize)]
struct BestWire {
    key_bits: u32,
    index: u64,
}

#[derive(Serialize, Deserialize)]
struct SearchWire {
    format: String,
    mode: String,
    rate: RatWire,
    blocklength: u32,
    candidates_examined: u64,
    exhaustive: bool,
    shape_restricted: bool,
    next_cursor: Option<u64>,
    best_candidate: Option<BestWire>,
    witness_coords: Option<Vec<CoordWire>>,
    witness: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

pub fn search_result_to_json(
    result: &SearchResult,
    blocklength: u32,
    timestamp: Option<u64>,
) -> String {
    let wire = SearchWire {
        format: SEARCH_FORMAT.to_string(),
        mode: result.mode.as_str().to_string(),
        rate: RatWire::from_rational(result.rate),
        blocklength,
        candidates_examined: result.candidates_examined,
        exhaustive: result.exhaustive,
        shape_restricted: result.shape_restricted,
        next_cursor: result.next_cursor,
        best_candidate: result
            .best_candidate
            .map(|(key_bits, index)| BestWire { key_bits, index }),
        witness_coords: result.witness_coords.as_ref().map(|coords| {
            coords
                .iter()
                .map(|c| CoordWire {
                    source: c.source.clone(),
                    bit: c.bit,
                })
                .collect()
        }),
        witness: result
            .witness
            .as_ref()
            .map(|w| serde_json::from_str(&code_to_json(w)).expect("code round-trips")),
        timestamp,
    };
    serde_json::to_string(&wire).expect("search result serializes")
}

pub fn permutation_to_json(perm: &Permutation) -> String {
    serde_json::to_string(perm.table()).expect("permutation serializes")
}

pub fn permutation_from_json(text: &str) -> Result<Permutation> {
    let table: Vec<u64> = serde_json::from_str(text)?;
    if !table.len().is_power_of_two() {
        return Err(Error::BadFormat(
            "permutation length is not a power of two".into(),
        ));
    }
    Permutation::new(table.len().trailing_zeros(), table)
}

/// Parses coordinates written as `node:bit,node:bit`.
pub fn coords_from_arg(arg: &str) -> Result<Vec<Coord>> {
    if arg.trim().is_empty() {
        return Ok(Vec::new());
    }
    arg.split(',')
        .map(|part| {
            let (node, bit) = part
                .trim()
                .rsplit_once(':')
                .ok_or_else(|| Error::BadFormat(format!("bad coordinate `{part}`")))?;
            let bit: u32 = bit
                .parse()
                .map_err(|_| Error::BadFormat(format!("bad coordinate `{part}`")))?;
            Ok(Coord::new(node.to_string(), bit))
        })
        .collect()
}

pub fn coords_to_arg(coords: &[Coord]) -> String {
    coords
        .iter()
        .map(|c| format!("{}:{}", c.source, c.bit))
        .collect::<Vec<_>>()
        .join(",")
}
