//! Exhaustive certification of fixed-blocklength feasibility maxima on
//! desk-scale instances.
//!
//! A [`CodeShape`] fixes the blocklength, per-source bit counts, the
//! encoder family, and how sources behave; the stream of candidate encoder
//! assignments is then totally ordered (lexicographic over the concatenated
//! function tables) and every reported maximum is relative to that shape.
//! Key maps are not enumerated alongside the encoders: for each encoder
//! candidate the best admissible key is derived from the terminal views,
//! which collapses the decoder dimension entirely.

use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;
use num_traits::Zero;

use crate::analysis::{
    check_key_feasibility, check_secure_feasibility, check_two_stage_feasibility,
    find_two_stage_witness, CheckMode, Coord, TwoStageWitness,
};
use crate::code::{BitFunction, NetworkCode, TruthTable};
use crate::constructions::gap_source_count;
use crate::gf2::{mask, Gf2Matrix};
use crate::model::{NetworkInstance, NodeId};
use crate::rational::integral_bits;
use crate::{Error, Limits, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderFamily {
    AllTables,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceBehavior {
    /// Source-edge encoders are enumerated like any other.
    Free,
    /// Sources copy their bits verbatim to every outgoing edge; only the
    /// remaining encoders are enumerated. Results are shape-relative.
    Forward,
}

/// The candidate space for one search run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeShape {
    pub blocklength: u32,
    pub source_bits: BTreeMap<NodeId, u32>,
    pub family: EncoderFamily,
    pub source_behavior: SourceBehavior,
    pub max_key_bits: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// First candidate index to visit (resume cursor).
    pub start: u64,
    /// Visit at most this many candidates in this run.
    pub max_candidates: Option<u64>,
    /// Contiguous chunks processed concurrently; results are identical for
    /// any value.
    pub jobs: usize,
    /// Best result carried over from earlier runs: (key bits, candidate).
    pub prior_best: Option<(u32, u64)>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            start: 0,
            max_candidates: None,
            jobs: 1,
            prior_best: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub mode: CheckMode,
    pub rate: Rational64,
    pub witness: Option<NetworkCode>,
    /// Message coordinates (`sec`) or the recovered bit collection (`key2`)
    /// of the witness.
    pub witness_coords: Option<Vec<Coord>>,
    pub candidates_examined: u64,
    pub exhaustive: bool,
    /// Next candidate index when the run stopped early.
    pub next_cursor: Option<u64>,
    /// True when the shape restricts source encoders, making the maximum
    /// relative to the shape rather than to all codes.
    pub shape_restricted: bool,
    /// Winning candidate index, for resumable merging.
    pub best_candidate: Option<(u32, u64)>,
}

// ---------------------------------------------------------------------------
// Candidate space

/// One enumerated encoder slot.
#[derive(Debug, Clone)]
struct Position {
    edge_slot: usize,
    in_bits: u32,
    out_bits: u32,
    count: u128,
}

/// Static description of the candidate space plus everything needed to
/// evaluate candidates quickly: integer-indexed input assembly, fixed
/// (forwarding) encoders, and view plans.
struct Space {
    ell: u32,
    positions: Vec<Position>,
    /// Per position, suffix product of the counts after it.
    suffix: Vec<u128>,
    total: u128,
    /// edges in evaluation order: (edge slot, pieces, function source)
    eval_plan: Vec<(usize, Vec<Piece>, FuncSlot)>,
    /// decoder input pieces per terminal
    terminal_views: Vec<(NodeId, Vec<Piece>)>,
    /// eavesdropper view pieces per eavesdrop set
    eave_views: Vec<Vec<Piece>>,
    /// (source node, assignment shift of bit 0 .. bits) per source, sorted
    source_coords: Vec<(NodeId, u32, u32)>,
    edge_count: usize,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Edge(usize, u32),
    /// (right-shift from assignment bit 0, width)
    Source(u32, u32),
}

#[derive(Debug, Clone)]
enum FuncSlot {
    Fixed(BitFunction),
    Enumerated(usize),
}

fn table_space(in_bits: u32, out_bits: u32) -> Option<u128> {
    let exponent = u128::from(out_bits) << in_bits;
    if exponent >= 128 {
        return None;
    }
    Some(1u128 << exponent)
}

fn linear_space(in_bits: u32, out_bits: u32) -> Option<u128> {
    let exponent = u128::from(out_bits) * u128::from(in_bits);
    if exponent >= 128 {
        return None;
    }
    Some(1u128 << exponent)
}

impl Space {
    fn build(instance: &NetworkInstance, shape: &CodeShape, limits: &Limits) -> Result<Space> {
        if shape.blocklength == 0 {
            return Err(Error::WidthMismatch("blocklength must be positive".into()));
        }
        let order = instance.topological_order()?;
        let topo_pos: BTreeMap<&str, usize> = order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();

        for node in shape.source_bits.keys() {
            if instance.source_role(node).is_none() {
                return Err(Error::UnknownNode(format!(
                    "shape names `{node}`, which is not a source"
                )));
            }
        }
        let mut source_coords = Vec::new();
        let mut ell: u32 = 0;
        for decl in instance.sorted_sources() {
            let bits = shape.source_bits.get(&decl.node).copied().unwrap_or(0);
            source_coords.push((decl.node.clone(), ell, bits));
            ell += bits;
        }
        if ell > limits.search_cap.min(24) {
            return Err(Error::SpaceLimit(format!(
                "shape has {ell} source bits, search cap is {}",
                limits.search_cap.min(24)
            )));
        }
        // Shift from assignment bit 0 of each source block's first bit.
        let source_coords: Vec<(NodeId, u32, u32)> = source_coords
            .into_iter()
            .map(|(n, off, bits)| (n, ell - off - bits, bits))
            .collect();
        let block = |node: &str| -> Option<(u32, u32)> {
            source_coords
                .iter()
                .find(|(n, _, _)| n == node)
                .map(|(_, sh, b)| (*sh, *b))
        };

        let mut edge_bits = Vec::with_capacity(instance.edges.len());
        for e in &instance.edges {
            let bits = integral_bits(e.capacity, shape.blocklength)
                .ok_or_else(|| Error::NonintegralAlphabet(e.id.clone()))?;
            edge_bits.push(bits);
        }
        let edge_slot: BTreeMap<&str, usize> = instance
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();

        let node_pieces = |node: &str| -> Result<(Vec<Piece>, u32)> {
            let mut pieces = Vec::new();
            let mut width = 0u32;
            for e in instance.in_edges(node) {
                let slot = edge_slot[e.id.as_str()];
                pieces.push(Piece::Edge(slot, edge_bits[slot]));
                width += edge_bits[slot];
            }
            if let Some((shift, bits)) = block(node) {
                if bits > 0 {
                    pieces.push(Piece::Source(shift, bits));
                    width += bits;
                }
            }
            if width > 64 {
                return Err(Error::SpaceLimit(format!(
                    "node `{node}` input spans {width} bits"
                )));
            }
            Ok((pieces, width))
        };

        // Enumerated positions: ascending edge id, skipping forwarding
        // source edges.
        let mut ids: Vec<&str> = instance.edges.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        let mut positions = Vec::new();
        let mut fixed: HashMap<usize, BitFunction> = HashMap::new();
        for id in &ids {
            let slot = edge_slot[id];
            let e = &instance.edges[slot];
            let (_, in_bits) = node_pieces(&e.tail)?;
            let out_bits = edge_bits[slot];
            let is_source_edge = instance.source_role(&e.tail).is_some();
            if is_source_edge && shape.source_behavior == SourceBehavior::Forward {
                let (_, bits) = block(&e.tail).unwrap_or((0, 0));
                if out_bits != bits {
                    return Err(Error::WidthMismatch(format!(
                        "forwarding source `{}` has {bits} bits but edge `{id}` carries {out_bits}",
                        e.tail
                    )));
                }
                let mut m = Gf2Matrix::zero(out_bits, in_bits)?;
                for b in 0..bits {
                    m.set(b, in_bits - bits + b, true);
                }
                fixed.insert(slot, BitFunction::Linear(m));
                continue;
            }
            let count = match shape.family {
                EncoderFamily::AllTables => table_space(in_bits, out_bits),
                EncoderFamily::Linear => linear_space(in_bits, out_bits),
            }
            .ok_or_else(|| {
                Error::BudgetExceeded(format!("edge `{id}` alone has over 2^127 encoders"))
            })?;
            positions.push(Position {
                edge_slot: slot,
                in_bits,
                out_bits,
                count,
            });
        }

        let mut total: u128 = if instance.nodes.is_empty() { 0 } else { 1 };
        for p in &positions {
            total = total
                .checked_mul(p.count)
                .ok_or_else(|| Error::BudgetExceeded("over 2^127 candidates".into()))?;
        }
        if total > u128::from(limits.budget) {
            return Err(Error::BudgetExceeded(format!(
                "{total} candidates exceed the budget of {}",
                limits.budget
            )));
        }
        let mut suffix = vec![1u128; positions.len()];
        for i in (0..positions.len().saturating_sub(1)).rev() {
            suffix[i] = suffix[i + 1] * positions[i + 1].count;
        }

        let mut eval_plan = Vec::new();
        let mut eval_slots: Vec<usize> = (0..instance.edges.len()).collect();
        eval_slots.sort_by(|&a, &b| {
            let ea = &instance.edges[a];
            let eb = &instance.edges[b];
            topo_pos[ea.tail.as_str()]
                .cmp(&topo_pos[eb.tail.as_str()])
                .then_with(|| ea.id.cmp(&eb.id))
        });
        let position_of: HashMap<usize, usize> = positions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.edge_slot, i))
            .collect();
        for slot in eval_slots {
            let e = &instance.edges[slot];
            let (pieces, _) = node_pieces(&e.tail)?;
            let func = match position_of.get(&slot) {
                Some(i) => FuncSlot::Enumerated(*i),
                None => FuncSlot::Fixed(fixed[&slot].clone()),
            };
            eval_plan.push((slot, pieces, func));
        }

        let mut terminal_views = Vec::new();
        for t in &instance.terminals {
            terminal_views.push((t.clone(), node_pieces(t)?.0));
        }
        let mut eave_views = Vec::new();
        for set in &instance.eavesdrop_sets {
            let mut pieces = Vec::new();
            let mut width = 0u32;
            for id in &set.edges {
                let slot = *edge_slot
                    .get(id.as_str())
                    .ok_or_else(|| Error::UnknownEdge(id.clone()))?;
                pieces.push(Piece::Edge(slot, edge_bits[slot]));
                width += edge_bits[slot];
            }
            for node in &set.observed_sources {
                let (shift, bits) =
                    block(node).ok_or_else(|| Error::UnknownNode(node.clone()))?;
                pieces.push(Piece::Source(shift, bits));
                width += bits;
            }
            if width > 64 {
                return Err(Error::SpaceLimit("eavesdrop view spans over 64 bits".into()));
            }
            eave_views.push(pieces);
        }

        Ok(Space {
            ell,
            positions,
            suffix,
            total,
            eval_plan,
            terminal_views,
            eave_views,
            source_coords,
            edge_count: instance.edges.len(),
        })
    }

    /// Decodes the function at `position` for candidate `index`.
    fn function_at(&self, family: EncoderFamily, index: u128, position: usize) -> BitFunction {
        let p = &self.positions[position];
        let digit = (index / self.suffix[position]) % p.count;
        match family {
            EncoderFamily::AllTables => {
                let entries = 1usize << p.in_bits;
                let table: Vec<u64> = (0..entries)
                    .map(|x| {
                        let shift = p.out_bits * (entries - 1 - x) as u32;
                        ((digit >> shift) as u64) & mask(p.out_bits)
                    })
                    .collect();
                BitFunction::Table(
                    TruthTable::new(p.in_bits, p.out_bits, table).expect("shape-valid table"),
                )
            }
            EncoderFamily::Linear => {
                let words: Vec<u64> = (0..p.out_bits)
                    .map(|r| {
                        let shift = p.in_bits * (p.out_bits - 1 - r);
                        ((digit >> shift) as u64) & mask(p.in_bits)
                    })
                    .collect();
                BitFunction::Linear(
                    Gf2Matrix::from_row_words(p.in_bits, words).expect("shape-valid matrix"),
                )
            }
        }
    }

    fn assemble(&self, assignment: u64, edge_vals: &[u64], pieces: &[Piece]) -> u64 {
        let mut acc = 0u64;
        for p in pieces {
            let (v, w) = match *p {
                Piece::Edge(slot, w) => (edge_vals[slot], w),
                Piece::Source(shift, w) => ((assignment >> shift) & mask(w), w),
            };
            acc = (acc << w) | v;
        }
        acc
    }

    /// Evaluates candidate functions over every assignment, filling
    /// per-terminal and per-eavesdropper view tables.
    fn evaluate_candidate(
        &self,
        funcs: &[BitFunction],
        term_views: &mut [Vec<u64>],
        eave_views: &mut [Vec<u64>],
    ) {
        let n_assign = 1usize << self.ell;
        for views in term_views.iter_mut() {
            views.clear();
            views.reserve(n_assign);
        }
        for views in eave_views.iter_mut() {
            views.clear();
            views.reserve(n_assign);
        }
        let mut edge_vals = vec![0u64; self.edge_count];
        for m in 0..n_assign as u64 {
            for (slot, pieces, func) in &self.eval_plan {
                let input = self.assemble(m, &edge_vals, pieces);
                let value = match func {
                    FuncSlot::Fixed(f) => f.eval(input),
                    FuncSlot::Enumerated(i) => funcs[*i].eval(input),
                };
                edge_vals[*slot] = value;
            }
            for (i, (_, pieces)) in self.terminal_views.iter().enumerate() {
                term_views[i].push(self.assemble(m, &edge_vals, pieces));
            }
            for (i, pieces) in self.eave_views.iter().enumerate() {
                eave_views[i].push(self.assemble(m, &edge_vals, pieces));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Public stream

/// Deterministic, restartable stream of candidate codes for a shape. The
/// yielded codes carry the enumerated encoders plus degenerate (zero-bit)
/// decoders and key; searches derive keys and decoders per candidate.
pub struct CodeStream<'a> {
    instance: &'a NetworkInstance,
    shape: CodeShape,
    space: Space,
    next: u128,
}

/// Validates a shape against an instance and opens the candidate stream.
pub fn enumerate_codes<'a>(
    instance: &'a NetworkInstance,
    shape: &CodeShape,
    limits: &Limits,
) -> Result<CodeStream<'a>> {
    let space = Space::build(instance, shape, limits)?;
    Ok(CodeStream {
        instance,
        shape: shape.clone(),
        space,
        next: 0,
    })
}

impl<'a> CodeStream<'a> {
    pub fn candidate_count(&self) -> u128 {
        self.space.total
    }

    pub fn cursor(&self) -> u128 {
        self.next
    }

    /// Repositions the stream; the candidate at `cursor` is yielded next.
    pub fn seek(&mut self, cursor: u128) {
        self.next = cursor;
    }

    fn code_at(&self, index: u128) -> NetworkCode {
        let mut edge_encoders = BTreeMap::new();
        for (slot, _, func) in &self.space.eval_plan {
            let id = self.instance.edges[*slot].id.clone();
            let f = match func {
                FuncSlot::Fixed(f) => f.clone(),
                FuncSlot::Enumerated(i) => self.space.function_at(self.shape.family, index, *i),
            };
            edge_encoders.insert(id, f);
        }
        let decoders = self
            .space
            .terminal_views
            .iter()
            .map(|(t, pieces)| {
                let width: u32 = pieces.iter().map(|p| piece_width(*p)).sum();
                (
                    t.clone(),
                    BitFunction::Linear(Gf2Matrix::zero(0, width).expect("empty matrix")),
                )
            })
            .collect();
        NetworkCode {
            blocklength: self.shape.blocklength,
            source_bits: self.shape.source_bits.clone(),
            edge_encoders,
            decoders,
            key: BitFunction::Linear(Gf2Matrix::zero(0, self.space.ell).expect("empty matrix")),
        }
    }
}

fn piece_width(p: Piece) -> u32 {
    match p {
        Piece::Edge(_, w) | Piece::Source(_, w) => w,
    }
}

impl<'a> Iterator for CodeStream<'a> {
    type Item = NetworkCode;

    fn next(&mut self) -> Option<NetworkCode> {
        if self.next >= self.space.total {
            return None;
        }
        let code = self.code_at(self.next);
        self.next += 1;
        Some(code)
    }
}

// ---------------------------------------------------------------------------
// Key derivation per candidate

/// Union-find over assignment indices.
struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }
    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Finds the widest balanced labeling of the given assignment groups that
/// is exactly independent of every eavesdropper view, trying key widths
/// from `max_k` down. Returns the width and the per-assignment key table
/// (the lexicographically smallest valid one).
fn best_balanced_key(
    ell: u32,
    group_of: &[u32],
    eave_views: &[Vec<u64>],
    max_k: u32,
) -> Option<(u32, Vec<u64>)> {
    let n_assign = 1usize << ell;
    // Blocks in first-occurrence order.
    let mut block_id: HashMap<u32, usize> = HashMap::new();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    for (m, g) in group_of.iter().enumerate() {
        let id = *block_id.entry(*g).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[id].push(m as u32);
    }
    // Eavesdropper cells, globally indexed.
    let mut cell_sizes: Vec<u64> = Vec::new();
    let mut cell_of: Vec<Vec<usize>> = Vec::new(); // [eave][assignment] -> cell
    for views in eave_views {
        let mut ids: HashMap<u64, usize> = HashMap::new();
        let mut per_assign = Vec::with_capacity(n_assign);
        for v in views {
            let id = *ids.entry(*v).or_insert_with(|| {
                cell_sizes.push(0);
                cell_sizes.len() - 1
            });
            cell_sizes[id] += 1;
            per_assign.push(id);
        }
        cell_of.push(per_assign);
    }
    // Per block: total size and per-cell membership counts.
    let block_cells: Vec<Vec<(usize, u64)>> = blocks
        .iter()
        .map(|members| {
            let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
            for &m in members {
                for per_assign in &cell_of {
                    *counts.entry(per_assign[m as usize]).or_insert(0) += 1;
                }
            }
            counts.into_iter().collect()
        })
        .collect();

    let upper = max_k.min(ell);
    for k in (1..=upper).rev() {
        let labels = 1usize << k;
        let per_label = (n_assign as u64) >> k;
        if blocks.iter().any(|b| b.len() as u64 > per_label) {
            continue;
        }
        if cell_sizes.iter().any(|s| s % (labels as u64) != 0) {
            continue;
        }
        let mut global_left = vec![per_label; labels];
        let mut cell_left: Vec<u64> = cell_sizes
            .iter()
            .flat_map(|s| std::iter::repeat_n(s / labels as u64, labels))
            .collect();
        let mut assigned: Vec<usize> = Vec::with_capacity(blocks.len());
        let mut next_label = 0usize;
        // Depth-first over blocks, smallest label first: the first complete
        // labeling induces the lexicographically smallest key table.
        loop {
            if assigned.len() == blocks.len() {
                let mut table = vec![0u64; n_assign];
                for (b, &label) in assigned.iter().enumerate() {
                    for &m in &blocks[b] {
                        table[m as usize] = label as u64;
                    }
                }
                return Some((k, table));
            }
            let depth = assigned.len();
            let placed = (next_label..labels).find(|&label| {
                try_place(
                    &blocks,
                    &block_cells,
                    depth,
                    label,
                    &mut global_left,
                    &mut cell_left,
                    labels,
                )
            });
            match placed {
                Some(label) => {
                    assigned.push(label);
                    next_label = 0;
                }
                None => match assigned.pop() {
                    None => break,
                    Some(prev) => {
                        unplace(
                            &blocks,
                            &block_cells,
                            assigned.len(),
                            prev,
                            &mut global_left,
                            &mut cell_left,
                            labels,
                        );
                        next_label = prev + 1;
                    }
                },
            }
        }
    }
    None
}

fn try_place(
    blocks: &[Vec<u32>],
    block_cells: &[Vec<(usize, u64)>],
    block: usize,
    label: usize,
    global_left: &mut [u64],
    cell_left: &mut [u64],
    labels: usize,
) -> bool {
    let size = blocks[block].len() as u64;
    if global_left[label] < size {
        return false;
    }
    for &(cell, count) in &block_cells[block] {
        if cell_left[cell * labels + label] < count {
            return false;
        }
    }
    global_left[label] -= size;
    for &(cell, count) in &block_cells[block] {
        cell_left[cell * labels + label] -= count;
    }
    true
}

fn unplace(
    blocks: &[Vec<u32>],
    block_cells: &[Vec<(usize, u64)>],
    block: usize,
    label: usize,
    global_left: &mut [u64],
    cell_left: &mut [u64],
    labels: usize,
) {
    global_left[label] += blocks[block].len() as u64;
    for &(cell, count) in &block_cells[block] {
        cell_left[cell * labels + label] += count;
    }
}

/// Projection values of the assignments at the given bit shifts.
fn projection_table(ell: u32, shifts: &[u32]) -> Vec<u64> {
    (0..1u64 << ell)
        .map(|m| shifts.iter().fold(0u64, |acc, s| (acc << 1) | ((m >> s) & 1)))
        .collect()
}

/// Exact independence of a key table from a view table.
fn tables_independent(keys: &[u64], views: &[u64]) -> bool {
    let mut joint: HashMap<(u64, u64), u64> = HashMap::new();
    let mut ka: HashMap<u64, u64> = HashMap::new();
    let mut vb: HashMap<u64, u64> = HashMap::new();
    for (k, v) in keys.iter().zip(views) {
        *joint.entry((*k, *v)).or_insert(0) += 1;
        *ka.entry(*k).or_insert(0) += 1;
        *vb.entry(*v).or_insert(0) += 1;
    }
    if joint.len() as u128 != ka.len() as u128 * vb.len() as u128 {
        return false;
    }
    let total = keys.len() as u128;
    joint
        .iter()
        .all(|((k, v), c)| u128::from(*c) * total == u128::from(ka[k]) * u128::from(vb[v]))
}

// ---------------------------------------------------------------------------
// The search itself

struct CandidateOutcome {
    key_bits: u32,
    index: u128,
}

/// Per-candidate evaluation: returns the best key width achievable for the
/// encoder assignment at `index`, or `None` when only the zero-rate key
/// works.
fn assess_candidate(
    space: &Space,
    shape: &CodeShape,
    mode: CheckMode,
    is_gap: bool,
    index: u128,
    scratch: &mut Scratch,
) -> Option<u32> {
    let funcs: Vec<BitFunction> = (0..space.positions.len())
        .map(|i| space.function_at(shape.family, index, i))
        .collect();
    space.evaluate_candidate(&funcs, &mut scratch.term_views, &mut scratch.eave_views);
    let n_assign = 1usize << space.ell;

    let found = match mode {
        CheckMode::Key => {
            // Common-knowledge components across all terminal views.
            let mut uf = UnionFind::new(n_assign);
            for views in &scratch.term_views {
                let mut first: HashMap<u64, u32> = HashMap::new();
                for (m, v) in views.iter().enumerate() {
                    match first.entry(*v) {
                        std::collections::hash_map::Entry::Vacant(e) => {
                            e.insert(m as u32);
                        }
                        std::collections::hash_map::Entry::Occupied(e) => {
                            uf.union(*e.get(), m as u32);
                        }
                    }
                }
            }
            let group_of: Vec<u32> = (0..n_assign as u32).map(|m| uf.find(m)).collect();
            best_balanced_key(space.ell, &group_of, &scratch.eave_views, shape.max_key_bits)
                .map(|(k, table)| {
                    scratch.key_table = table;
                    k
                })
        }
        CheckMode::Key2 => {
            let det_mask = determinable_mask(space, scratch);
            let group_of: Vec<u32> = (0..n_assign as u64)
                .map(|m| (m & det_mask) as u32)
                .collect();
            best_balanced_key(space.ell, &group_of, &scratch.eave_views, shape.max_key_bits)
                .map(|(k, table)| {
                    scratch.key_table = table;
                    k
                })
        }
        CheckMode::Sec => 'sec: {
            let det_mask = determinable_mask(space, scratch);
            let mut coords: Vec<(Coord, u32)> = Vec::new();
            for (node, shift, bits) in &space.source_coords {
                for b in 0..*bits {
                    let bit_shift = shift + bits - 1 - b;
                    if (det_mask >> bit_shift) & 1 == 1 {
                        coords.push((Coord::new(node.clone(), b), bit_shift));
                    }
                }
            }
            let upper = shape.max_key_bits.min(coords.len() as u32);
            for k in (1..=upper).rev() {
                let mut combo: Vec<usize> = (0..k as usize).collect();
                loop {
                    let shifts: Vec<u32> = combo.iter().map(|&i| coords[i].1).collect();
                    let proj = projection_table(space.ell, &shifts);
                    if scratch
                        .eave_views
                        .iter()
                        .all(|views| tables_independent(&proj, views))
                    {
                        scratch.key_table = proj;
                        scratch.sec_coords =
                            combo.iter().map(|&i| coords[i].0.clone()).collect();
                        break 'sec Some(k);
                    }
                    if !crate::analysis::next_combination(&mut combo, coords.len()) {
                        break;
                    }
                }
            }
            None
        }
    };
    if let Some(k) = found {
        // Cut argument on the gap family: a key surviving every per-node
        // eavesdropper fits through one intermediate edge.
        if is_gap && mode == CheckMode::Key {
            assert!(
                k <= shape.blocklength,
                "gap-family key width {k} exceeds blocklength {}",
                shape.blocklength
            );
        }
    }
    found
}

/// Assignment-bit mask of the source coordinates every terminal can
/// determine from its view.
fn determinable_mask(space: &Space, scratch: &Scratch) -> u64 {
    let mut det = mask(space.ell);
    for views in &scratch.term_views {
        let mut acc: HashMap<u64, (u64, u64)> = HashMap::new();
        for (m, v) in views.iter().enumerate() {
            let entry = acc.entry(*v).or_insert((u64::MAX, 0));
            entry.0 &= m as u64;
            entry.1 |= m as u64;
        }
        let mut stable = mask(space.ell);
        for (and_acc, or_acc) in acc.values() {
            stable &= !(and_acc ^ or_acc);
        }
        det &= stable;
    }
    det
}

struct Scratch {
    term_views: Vec<Vec<u64>>,
    eave_views: Vec<Vec<u64>>,
    key_table: Vec<u64>,
    sec_coords: Vec<Coord>,
}

impl Scratch {
    fn new(space: &Space) -> Self {
        Scratch {
            term_views: space.terminal_views.iter().map(|_| Vec::new()).collect(),
            eave_views: space.eave_views.iter().map(|_| Vec::new()).collect(),
            key_table: Vec::new(),
            sec_coords: Vec::new(),
        }
    }
}

/// Exhaustively determines the maximum feasible rate over a shape, with a
/// re-verified witness. The scan order is fixed, chunking never changes the
/// result, and the reported maximum is exhaustive iff the whole space was
/// visited (this run plus the cursor prefix).
pub fn max_feasible_rate(
    instance: &NetworkInstance,
    mode: CheckMode,
    shape: &CodeShape,
    limits: &Limits,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    let space = Space::build(instance, shape, limits)?;
    let total = space.total;
    let start = u128::from(opts.start).min(total);
    let end = match opts.max_candidates {
        Some(cap) => (start + u128::from(cap)).min(total),
        None => total,
    };
    let is_gap = gap_source_count(instance).is_some();

    let jobs = opts.jobs.max(1).min(((end - start).max(1)) as usize);
    let chunk = ((end - start) + jobs as u128 - 1) / jobs.max(1) as u128;
    let mut best: Option<CandidateOutcome> = None;
    if jobs <= 1 || chunk == 0 {
        let mut scratch = Scratch::new(&space);
        for index in start..end {
            if let Some(k) = assess_candidate(&space, shape, mode, is_gap, index, &mut scratch) {
                if best.as_ref().is_none_or(|b| k > b.key_bits) {
                    best = Some(CandidateOutcome { key_bits: k, index });
                }
            }
        }
    } else {
        let results: Vec<Option<CandidateOutcome>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for j in 0..jobs {
                let lo = start + chunk * j as u128;
                let hi = (lo + chunk).min(end);
                let space = &space;
                handles.push(scope.spawn(move || {
                    let mut scratch = Scratch::new(space);
                    let mut local: Option<CandidateOutcome> = None;
                    for index in lo..hi {
                        if let Some(k) =
                            assess_candidate(space, shape, mode, is_gap, index, &mut scratch)
                        {
                            if local.as_ref().is_none_or(|b| k > b.key_bits) {
                                local = Some(CandidateOutcome { key_bits: k, index });
                            }
                        }
                    }
                    local
                }));
            }
            handles.into_iter().map(|h| h.join().expect("search worker")).collect()
        });
        for outcome in results.into_iter().flatten() {
            // chunks are scanned in index order, so highest k then lowest
            // index stays deterministic
            let better = match &best {
                None => true,
                Some(b) => {
                    outcome.key_bits > b.key_bits
                        || (outcome.key_bits == b.key_bits && outcome.index < b.index)
                }
            };
            if better {
                best = Some(outcome);
            }
        }
    }

    if let Some((prior_k, prior_index)) = opts.prior_best {
        let better = match &best {
            None => true,
            Some(b) => {
                prior_k > b.key_bits || (prior_k == b.key_bits && u128::from(prior_index) < b.index)
            }
        };
        if better {
            best = Some(CandidateOutcome {
                key_bits: prior_k,
                index: u128::from(prior_index),
            });
        }
    }

    let exhaustive = end == total;
    let mut result = SearchResult {
        mode,
        rate: Rational64::zero(),
        witness: None,
        witness_coords: None,
        candidates_examined: (end - start) as u64,
        exhaustive,
        next_cursor: (!exhaustive).then_some(end as u64),
        shape_restricted: shape.source_behavior == SourceBehavior::Forward,
        best_candidate: None,
    };

    let Some(win) = best else {
        return Ok(result);
    };
    // Re-derive the winner and re-verify it through the analysis engine;
    // the search loop's bookkeeping is never trusted.
    let mut scratch = Scratch::new(&space);
    let k = assess_candidate(&space, shape, mode, is_gap, win.index, &mut scratch)
        .ok_or_else(|| Error::WitnessRejected("winning candidate no longer assesses".into()))?;
    if k != win.key_bits {
        return Err(Error::WitnessRejected(format!(
            "winning candidate re-assessed at {k} bits, expected {}",
            win.key_bits
        )));
    }

    let rate = Rational64::new(i64::from(k), i64::from(shape.blocklength));
    let stream = CodeStream {
        instance,
        shape: shape.clone(),
        space: Space::build(instance, shape, limits)?,
        next: 0,
    };
    let mut witness = stream.code_at(win.index);
    witness.key = match mode {
        CheckMode::Sec => {
            let mut projection = Gf2Matrix::zero(k, space.ell)?;
            for (i, c) in scratch.sec_coords.iter().enumerate() {
                let (_, shift, bits) = space
                    .source_coords
                    .iter()
                    .find(|(n, _, _)| *n == c.source)
                    .expect("witness coord source");
                projection.set(i as u32, space.ell - (shift + bits - c.bit), true);
            }
            BitFunction::Linear(projection)
        }
        _ => BitFunction::Table(TruthTable::new(space.ell, k, scratch.key_table.clone())?),
    };
    // Induced decoders: each terminal tabulates view -> key.
    space.evaluate_candidate(
        &(0..space.positions.len())
            .map(|i| space.function_at(shape.family, win.index, i))
            .collect::<Vec<_>>(),
        &mut scratch.term_views,
        &mut scratch.eave_views,
    );
    let key_of: Vec<u64> = (0..1u64 << space.ell)
        .map(|m| witness.key.eval(m))
        .collect();
    for (t_idx, (t, pieces)) in space.terminal_views.iter().enumerate() {
        let width: u32 = pieces.iter().map(|p| piece_width(*p)).sum();
        if width > limits.enum_cap {
            return Err(Error::SpaceLimit(format!(
                "decoder for `{t}` spans {width} bits"
            )));
        }
        let mut table = vec![0u64; 1usize << width];
        for (m, view) in scratch.term_views[t_idx].iter().enumerate() {
            table[*view as usize] = key_of[m];
        }
        witness
            .decoders
            .insert(t.clone(), BitFunction::Table(TruthTable::new(width, k, table)?));
    }

    let verified = match mode {
        CheckMode::Key => check_key_feasibility(instance, &witness, rate, limits)?.overall,
        CheckMode::Sec => {
            result.witness_coords = Some(scratch.sec_coords.clone());
            check_secure_feasibility(instance, &witness, rate, &scratch.sec_coords, limits)?
                .overall
        }
        CheckMode::Key2 => {
            let found = find_two_stage_witness(instance, &witness, rate, limits)?;
            match found {
                Some(TwoStageWitness { coords }) => {
                    let ok = check_two_stage_feasibility(
                        instance,
                        &witness,
                        rate,
                        &TwoStageWitness {
                            coords: coords.clone(),
                        },
                        limits,
                    )?
                    .overall;
                    result.witness_coords = Some(coords);
                    ok
                }
                None => false,
            }
        }
    };
    if !verified {
        return Err(Error::WitnessRejected(format!(
            "candidate {} failed the {} feasibility check at rate {rate}",
            win.index,
            mode.as_str()
        )));
    }

    result.rate = rate;
    result.witness = Some(witness);
    result.best_candidate = Some((k, win.index as u64));
    Ok(result)
}
