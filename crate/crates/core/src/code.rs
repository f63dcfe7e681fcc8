//! Network codes and their exact evaluation.
//!
//! All bit vectors are packed MSB-first into `u64` values: the first
//! coordinate of a vector is the highest used bit of the integer. The input
//! to an encoder or decoder at node `u` is the concatenation of the messages
//! on `u`'s incoming edges in ascending edge-id order followed by `u`'s own
//! source bits, and a global assignment packs the per-source bit blocks in
//! ascending source-id order. These orders are part of the file format.

use std::collections::BTreeMap;

use crate::gf2::{mask, Gf2Matrix};
use crate::model::{EdgeId, NetworkInstance, NodeId};
use crate::rational::integral_bits;
use crate::{Error, Limits, Result};

/// An explicit function table: `table[x]` is the output on input `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    in_bits: u32,
    out_bits: u32,
    table: Vec<u64>,
}

impl TruthTable {
    pub fn new(in_bits: u32, out_bits: u32, table: Vec<u64>) -> Result<Self> {
        if in_bits > 24 {
            return Err(Error::SpaceLimit(format!(
                "truth table over {in_bits} input bits"
            )));
        }
        if out_bits > 64 {
            return Err(Error::SpaceLimit(format!(
                "truth table with {out_bits} output bits"
            )));
        }
        if table.len() != 1usize << in_bits {
            return Err(Error::WidthMismatch(format!(
                "truth table over {in_bits} bits needs {} entries, got {}",
                1usize << in_bits,
                table.len()
            )));
        }
        if table.iter().any(|v| *v & !mask(out_bits) != 0) {
            return Err(Error::WidthMismatch(format!(
                "truth table entry exceeds {out_bits} output bits"
            )));
        }
        Ok(TruthTable {
            in_bits,
            out_bits,
            table,
        })
    }

    pub fn constant(in_bits: u32, out_bits: u32, value: u64) -> Result<Self> {
        Self::new(in_bits, out_bits, vec![value; 1usize << in_bits])
    }

    pub fn in_bits(&self) -> u32 {
        self.in_bits
    }

    pub fn out_bits(&self) -> u32 {
        self.out_bits
    }

    pub fn entries(&self) -> &[u64] {
        &self.table
    }

    pub fn eval(&self, input: u64) -> u64 {
        self.table[input as usize]
    }
}

/// An encoder, decoder, or key map: either an explicit table or a GF(2)
/// matrix applied to the packed input vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BitFunction {
    Table(TruthTable),
    Linear(Gf2Matrix),
}

/// The global map from a full source assignment to the shared key.
pub type KeyMap = BitFunction;

impl BitFunction {
    pub fn in_bits(&self) -> u32 {
        match self {
            BitFunction::Table(t) => t.in_bits(),
            BitFunction::Linear(m) => m.cols(),
        }
    }

    pub fn out_bits(&self) -> u32 {
        match self {
            BitFunction::Table(t) => t.out_bits(),
            BitFunction::Linear(m) => m.rows(),
        }
    }

    pub fn eval(&self, input: u64) -> u64 {
        match self {
            BitFunction::Table(t) => t.eval(input),
            BitFunction::Linear(m) => m.apply(input),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, BitFunction::Linear(_))
    }

    pub fn as_matrix(&self) -> Option<&Gf2Matrix> {
        match self {
            BitFunction::Linear(m) => Some(m),
            BitFunction::Table(_) => None,
        }
    }

    /// Materializes the function as a table; `cap` bounds the input width.
    pub fn to_table(&self, cap: u32) -> Result<TruthTable> {
        if self.in_bits() > cap {
            return Err(Error::SpaceLimit(format!(
                "materializing a function over {} input bits (cap {cap})",
                self.in_bits()
            )));
        }
        match self {
            BitFunction::Table(t) => Ok(t.clone()),
            BitFunction::Linear(m) => {
                let table = (0..1u64 << m.cols()).map(|x| m.apply(x)).collect();
                TruthTable::new(m.cols(), m.rows(), table)
            }
        }
    }
}

/// A complete network code for some instance: blocklength, per-source bit
/// counts, one encoder per edge, one decoder per terminal, and the global
/// key map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkCode {
    pub blocklength: u32,
    pub source_bits: BTreeMap<NodeId, u32>,
    pub edge_encoders: BTreeMap<EdgeId, BitFunction>,
    pub decoders: BTreeMap<NodeId, BitFunction>,
    pub key: KeyMap,
}

impl NetworkCode {
    pub fn key_bits(&self) -> u32 {
        self.key.out_bits()
    }

    pub fn is_linear(&self) -> bool {
        self.edge_encoders.values().all(BitFunction::is_linear)
            && self.decoders.values().all(BitFunction::is_linear)
            && self.key.is_linear()
    }
}

/// One piece of a node's packed input: an incoming edge message or the
/// node's own source bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum InputPiece {
    /// (index into `instance.edges`, width)
    Edge(usize, u32),
    /// (offset of the source block in the assignment, width)
    SourceBits(u32, u32),
}

/// Width bookkeeping for a (instance, code) pair: per-edge bit widths, the
/// global assignment layout, per-node input assembly, and the edge
/// evaluation order. Building a layout performs all code validation.
#[derive(Debug, Clone)]
pub struct CodeLayout {
    pub total_bits: u32,
    /// source node -> (offset from the top of the assignment, bits)
    pub source_layout: BTreeMap<NodeId, (u32, u32)>,
    pub(crate) edge_bits: Vec<u32>,
    pub(crate) edge_index: BTreeMap<EdgeId, usize>,
    /// Indices into `instance.edges`, in evaluation order.
    pub(crate) eval_order: Vec<usize>,
    pub(crate) node_inputs: BTreeMap<NodeId, Vec<InputPiece>>,
    pub(crate) node_in_width: BTreeMap<NodeId, u32>,
}

impl CodeLayout {
    pub fn new(instance: &NetworkInstance, code: &NetworkCode) -> Result<Self> {
        if code.blocklength == 0 {
            return Err(Error::WidthMismatch("blocklength must be positive".into()));
        }
        let order = instance.topological_order()?;
        let topo_pos: BTreeMap<&str, usize> = order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();

        for node in code.source_bits.keys() {
            if instance.source_role(node).is_none() {
                return Err(Error::UnknownNode(format!(
                    "source_bits entry `{node}` is not a source"
                )));
            }
        }

        let mut source_layout = BTreeMap::new();
        let mut total_bits: u32 = 0;
        for decl in instance.sorted_sources() {
            let bits = code.source_bits.get(&decl.node).copied().unwrap_or(0);
            source_layout.insert(decl.node.clone(), (total_bits, bits));
            total_bits = total_bits
                .checked_add(bits)
                .filter(|t| *t <= 64)
                .ok_or_else(|| Error::SpaceLimit("more than 64 source bits".into()))?;
        }

        let mut edge_bits = Vec::with_capacity(instance.edges.len());
        let mut edge_index = BTreeMap::new();
        for (i, e) in instance.edges.iter().enumerate() {
            let bits = integral_bits(e.capacity, code.blocklength)
                .ok_or_else(|| Error::NonintegralAlphabet(e.id.clone()))?;
            if bits > 64 {
                return Err(Error::SpaceLimit(format!(
                    "edge `{}` carries {bits} bits",
                    e.id
                )));
            }
            edge_bits.push(bits);
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::BadFormat(format!("duplicate edge id `{}`", e.id)));
            }
        }

        let mut node_inputs = BTreeMap::new();
        let mut node_in_width = BTreeMap::new();
        for node in &instance.nodes {
            let mut pieces = Vec::new();
            let mut width: u32 = 0;
            for e in instance.in_edges(node) {
                let idx = edge_index[&e.id];
                pieces.push(InputPiece::Edge(idx, edge_bits[idx]));
                width = width
                    .checked_add(edge_bits[idx])
                    .filter(|w| *w <= 64)
                    .ok_or_else(|| {
                        Error::SpaceLimit(format!("node `{node}` input exceeds 64 bits"))
                    })?;
            }
            if let Some(&(off, bits)) = source_layout.get(node) {
                if bits > 0 {
                    pieces.push(InputPiece::SourceBits(off, bits));
                    width = width.checked_add(bits).filter(|w| *w <= 64).ok_or_else(|| {
                        Error::SpaceLimit(format!("node `{node}` input exceeds 64 bits"))
                    })?;
                }
            }
            node_inputs.insert(node.clone(), pieces);
            node_in_width.insert(node.clone(), width);
        }

        for id in code.edge_encoders.keys() {
            if !edge_index.contains_key(id) {
                return Err(Error::UnknownEdge(id.clone()));
            }
        }
        for e in &instance.edges {
            let f = code
                .edge_encoders
                .get(&e.id)
                .ok_or_else(|| Error::WidthMismatch(format!("missing encoder for edge `{}`", e.id)))?;
            let want_in = node_in_width[&e.tail];
            let want_out = edge_bits[edge_index[&e.id]];
            if f.in_bits() != want_in || f.out_bits() != want_out {
                return Err(Error::WidthMismatch(format!(
                    "encoder for edge `{}` is {}->{} bits, needs {}->{}",
                    e.id,
                    f.in_bits(),
                    f.out_bits(),
                    want_in,
                    want_out
                )));
            }
        }

        if code.key.in_bits() != total_bits {
            return Err(Error::WidthMismatch(format!(
                "key map reads {} bits, assignment has {total_bits}",
                code.key.in_bits()
            )));
        }
        for node in code.decoders.keys() {
            if !instance.is_terminal(node) {
                return Err(Error::UnknownNode(format!(
                    "decoder entry `{node}` is not a terminal"
                )));
            }
        }
        for t in &instance.terminals {
            let g = code
                .decoders
                .get(t)
                .ok_or_else(|| Error::WidthMismatch(format!("missing decoder for terminal `{t}`")))?;
            if g.in_bits() != node_in_width[t] || g.out_bits() != code.key.out_bits() {
                return Err(Error::WidthMismatch(format!(
                    "decoder for `{t}` is {}->{} bits, needs {}->{}",
                    g.in_bits(),
                    g.out_bits(),
                    node_in_width[t],
                    code.key.out_bits()
                )));
            }
        }

        let mut eval_order: Vec<usize> = (0..instance.edges.len()).collect();
        eval_order.sort_by(|&a, &b| {
            let ea = &instance.edges[a];
            let eb = &instance.edges[b];
            topo_pos[ea.tail.as_str()]
                .cmp(&topo_pos[eb.tail.as_str()])
                .then_with(|| ea.id.cmp(&eb.id))
        });

        Ok(CodeLayout {
            total_bits,
            source_layout,
            edge_bits,
            edge_index,
            eval_order,
            node_inputs,
            node_in_width,
        })
    }

    /// The bits generated by `node`, extracted from a packed assignment.
    pub fn source_segment(&self, assignment: u64, node: &str) -> u64 {
        let &(off, bits) = self.source_layout.get(node).expect("known source");
        if bits == 0 {
            return 0;
        }
        (assignment >> (self.total_bits - off - bits)) & mask(bits)
    }

    pub fn node_input_width(&self, node: &str) -> u32 {
        self.node_in_width[node]
    }

    pub(crate) fn assemble(
        &self,
        assignment: u64,
        edge_values: &[u64],
        pieces: &[InputPiece],
    ) -> u64 {
        let mut acc = 0u64;
        for p in pieces {
            let (v, w) = match *p {
                InputPiece::Edge(idx, w) => (edge_values[idx], w),
                InputPiece::SourceBits(off, w) => {
                    ((assignment >> (self.total_bits - off - w)) & mask(w), w)
                }
            };
            acc = (acc << w) | v;
        }
        acc
    }
}

/// The full forward evaluation of a code on one assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationTrace {
    pub assignment: u64,
    pub edge_messages: BTreeMap<EdgeId, u64>,
    pub decoder_outputs: BTreeMap<NodeId, u64>,
    pub key_value: u64,
}

/// Reusable evaluation engine over a validated layout.
pub(crate) struct Evaluator<'a> {
    pub instance: &'a NetworkInstance,
    pub code: &'a NetworkCode,
    pub layout: CodeLayout,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a NetworkInstance, code: &'a NetworkCode) -> Result<Self> {
        let layout = CodeLayout::new(instance, code)?;
        Ok(Evaluator {
            instance,
            code,
            layout,
        })
    }

    /// Fills `edge_values` (indexed like `instance.edges`) by forward
    /// evaluation in topological order.
    pub fn edge_values_into(&self, assignment: u64, edge_values: &mut [u64]) {
        for &idx in &self.layout.eval_order {
            let e = &self.instance.edges[idx];
            let input =
                self.layout
                    .assemble(assignment, edge_values, &self.layout.node_inputs[&e.tail]);
            edge_values[idx] = self.code.edge_encoders[&e.id].eval(input);
        }
    }

    pub fn decoder_input(&self, assignment: u64, edge_values: &[u64], terminal: &str) -> u64 {
        self.layout
            .assemble(assignment, edge_values, &self.layout.node_inputs[terminal])
    }

    pub fn trace(&self, assignment: u64) -> Result<EvaluationTrace> {
        if assignment & !mask(self.layout.total_bits) != 0 {
            return Err(Error::WidthMismatch(format!(
                "assignment 0x{assignment:x} exceeds {} bits",
                self.layout.total_bits
            )));
        }
        let mut edge_values = vec![0u64; self.instance.edges.len()];
        self.edge_values_into(assignment, &mut edge_values);
        let edge_messages = self
            .instance
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), edge_values[i]))
            .collect();
        let decoder_outputs = self
            .instance
            .terminals
            .iter()
            .map(|t| {
                let input = self.decoder_input(assignment, &edge_values, t);
                (t.clone(), self.code.decoders[t].eval(input))
            })
            .collect();
        Ok(EvaluationTrace {
            assignment,
            edge_messages,
            decoder_outputs,
            key_value: self.code.key.eval(assignment),
        })
    }
}

/// Evaluates `code` on one packed assignment, producing the unique forward
/// fixpoint trace.
pub fn evaluate(
    instance: &NetworkInstance,
    code: &NetworkCode,
    assignment: u64,
) -> Result<EvaluationTrace> {
    Evaluator::new(instance, code)?.trace(assignment)
}

/// The key map in canonical truth-table form, materialized over all
/// assignments.
pub fn global_key_map(
    instance: &NetworkInstance,
    code: &NetworkCode,
    limits: &Limits,
) -> Result<TruthTable> {
    let layout = CodeLayout::new(instance, code)?;
    limits.check_enum(layout.total_bits, "global key map")?;
    code.key.to_table(limits.enum_cap)
}

/// Converts an all-linear code to an equivalent all-table code.
pub fn linear_to_general(
    instance: &NetworkInstance,
    code: &NetworkCode,
    limits: &Limits,
) -> Result<NetworkCode> {
    CodeLayout::new(instance, code)?;
    if !code.is_linear() {
        return Err(Error::NotLinear);
    }
    let convert = |f: &BitFunction| -> Result<BitFunction> {
        Ok(BitFunction::Table(f.to_table(limits.enum_cap)?))
    };
    Ok(NetworkCode {
        blocklength: code.blocklength,
        source_bits: code.source_bits.clone(),
        edge_encoders: code
            .edge_encoders
            .iter()
            .map(|(k, v)| Ok((k.clone(), convert(v)?)))
            .collect::<Result<_>>()?,
        decoders: code
            .decoders
            .iter()
            .map(|(k, v)| Ok((k.clone(), convert(v)?)))
            .collect::<Result<_>>()?,
        key: convert(&code.key)?,
    })
}
