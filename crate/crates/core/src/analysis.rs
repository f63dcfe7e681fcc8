//! Exact joint distributions over uniform source bits and the three
//! feasibility checks.
//!
//! Everything a code produces is a deterministic function of the uniform
//! source assignment, so every distribution here is a table of integer
//! counts over the 2^ell assignments. Verdicts use integer-exact predicates
//! only; the floating-point entropy helpers exist for reporting.

use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;

use crate::code::{CodeLayout, Evaluator, InputPiece, NetworkCode};
use crate::gf2::mask;
use crate::model::{EavesdropSet, NetworkInstance, NodeId};
use crate::rational::integral_bits;
use crate::{Error, Limits, Result};

/// A variable whose exact law can be tabulated: an edge message, a decoder
/// output, the key, or a single source bit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    Edge(String),
    Decoder(NodeId),
    Key,
    SourceBit(NodeId, u32),
}

/// Exact joint counts of a variable tuple over all source assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    vars: Vec<(Var, u32)>,
    counts: BTreeMap<Vec<u64>, u64>,
    total: u64,
}

/// One source bit, named by its source node and bit index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Coord {
    pub source: NodeId,
    pub bit: u32,
}

impl Coord {
    pub fn new(source: impl Into<NodeId>, bit: u32) -> Self {
        Coord {
            source: source.into(),
            bit,
        }
    }
}

/// The bit collection a two-stage decoder recovers before deriving the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoStageWitness {
    pub coords: Vec<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Key,
    Sec,
    Key2,
}

impl CheckMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckMode::Key => "key",
            CheckMode::Sec => "sec",
            CheckMode::Key2 => "key2",
        }
    }
}

/// A concrete witness to a failed verdict.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Counterexample {
    pub assignment: Option<u64>,
    pub eavesdrop_set: Option<usize>,
    pub terminal: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub ok: bool,
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict {
            ok: true,
            counterexample: None,
        }
    }
    fn fail(cex: Counterexample) -> Self {
        Verdict {
            ok: false,
            counterexample: Some(cex),
        }
    }
}

/// Float entropies carried along for display; never consulted by verdicts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Advisory {
    pub key_entropy_bits: f64,
    pub max_decoder_conditional_entropy_bits: f64,
    pub max_eavesdrop_mutual_information_bits: f64,
}

/// The outcome of one feasibility check. `witness` is the mode-specific
/// extra condition: projection equality for `sec`, recoverability of the
/// bit collection for `key2`, absent for plain `key`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub mode: CheckMode,
    pub rate: Rational64,
    pub blocklength: u32,
    pub rate_verdict: Verdict,
    pub decoding: Verdict,
    pub secrecy: Verdict,
    pub witness: Option<Verdict>,
    pub advisory: Advisory,
    pub overall: bool,
}

impl FeasibilityReport {
    fn finish(mut self) -> Self {
        self.overall = self.rate_verdict.ok
            && self.decoding.ok
            && self.secrecy.ok
            && self.witness.as_ref().is_none_or(|w| w.ok);
        self
    }
}

// ---------------------------------------------------------------------------
// Count tables

/// Enumerates all assignments and tabulates the exact joint law of `vars`.
/// Only the requested variables are retained; traces are never stored.
pub fn joint_counts(
    instance: &NetworkInstance,
    code: &NetworkCode,
    vars: &[Var],
    limits: &Limits,
) -> Result<CountTable> {
    let ev = Evaluator::new(instance, code)?;
    let ell = ev.layout.total_bits;
    limits.check_enum(ell, "joint counts")?;

    // Resolve each variable to an extraction plan up front.
    enum Extract {
        Edge(usize),
        Decoder(NodeId),
        Key,
        Bit(u32), // shift from the bottom of the assignment
    }
    let mut plan = Vec::with_capacity(vars.len());
    let mut widths = Vec::with_capacity(vars.len());
    for v in vars {
        match v {
            Var::Edge(id) => {
                let idx = *ev
                    .layout
                    .edge_index
                    .get(id)
                    .ok_or_else(|| Error::UnknownEdge(id.clone()))?;
                plan.push(Extract::Edge(idx));
                widths.push(ev.layout.edge_bits[idx]);
            }
            Var::Decoder(t) => {
                if !instance.is_terminal(t) {
                    return Err(Error::UnknownNode(t.clone()));
                }
                plan.push(Extract::Decoder(t.clone()));
                widths.push(code.key.out_bits());
            }
            Var::Key => {
                plan.push(Extract::Key);
                widths.push(code.key.out_bits());
            }
            Var::SourceBit(node, bit) => {
                let shift = source_bit_shift(&ev.layout, node, *bit)?;
                plan.push(Extract::Bit(shift));
                widths.push(1);
            }
        }
    }

    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut edge_values = vec![0u64; instance.edges.len()];
    for m in 0..1u64 << ell {
        ev.edge_values_into(m, &mut edge_values);
        let tuple: Vec<u64> = plan
            .iter()
            .map(|p| match p {
                Extract::Edge(idx) => edge_values[*idx],
                Extract::Decoder(t) => {
                    let input = ev.decoder_input(m, &edge_values, t);
                    ev.code.decoders[t].eval(input)
                }
                Extract::Key => ev.code.key.eval(m),
                Extract::Bit(shift) => (m >> shift) & 1,
            })
            .collect();
        *counts.entry(tuple).or_insert(0) += 1;
    }
    let total = 1u64 << ell;
    debug_assert_eq!(counts.values().sum::<u64>(), total);
    Ok(CountTable {
        vars: vars.iter().cloned().zip(widths).collect(),
        counts,
        total,
    })
}

/// Shift (from bit 0 of the packed assignment) of coordinate `(node, bit)`.
fn source_bit_shift(layout: &CodeLayout, node: &str, bit: u32) -> Result<u32> {
    let &(off, bits) = layout
        .source_layout
        .get(node)
        .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
    if bit >= bits {
        return Err(Error::BadCoords(format!(
            "source `{node}` has {bits} bits, coordinate {bit} requested"
        )));
    }
    Ok(layout.total_bits - 1 - (off + bit))
}

impl CountTable {
    pub fn variables(&self) -> &[(Var, u32)] {
        &self.vars
    }

    pub fn counts(&self) -> &BTreeMap<Vec<u64>, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Builds a table directly from counts; used by tests and oracles.
    pub fn from_counts(vars: Vec<(Var, u32)>, counts: BTreeMap<Vec<u64>, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 || !total.is_power_of_two() {
            return Err(Error::BadFormat(
                "count table mass must be a power of two".into(),
            ));
        }
        for tuple in counts.keys() {
            if tuple.len() != vars.len() {
                return Err(Error::WidthMismatch("tuple arity mismatch".into()));
            }
            for (v, (_, w)) in tuple.iter().zip(&vars) {
                if *v & !mask(*w) != 0 {
                    return Err(Error::WidthMismatch("tuple exceeds variable width".into()));
                }
            }
        }
        Ok(CountTable { vars, counts, total })
    }

    /// Marginal counts; ordered so float accumulations are reproducible.
    fn project_counts(&self, idxs: &[usize]) -> BTreeMap<Vec<u64>, u64> {
        let mut out: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
        for (tuple, c) in &self.counts {
            let key: Vec<u64> = idxs.iter().map(|i| tuple[*i]).collect();
            *out.entry(key).or_insert(0) += c;
        }
        out
    }

    /// Integer-exact independence: every joint count factors through the
    /// marginals, with no missing support pairs.
    pub fn is_independent(&self, part_a: &[usize], part_b: &[usize]) -> bool {
        debug_assert!(part_a.iter().all(|i| !part_b.contains(i)));
        let joint = self.project_counts(&[part_a, part_b].concat());
        let a = self.project_counts(part_a);
        let b = self.project_counts(part_b);
        if joint.len() as u128 != a.len() as u128 * b.len() as u128 {
            return false;
        }
        joint.iter().all(|(tuple, c)| {
            let (ta, tb) = tuple.split_at(part_a.len());
            u128::from(*c) * u128::from(self.total)
                == u128::from(a[ta]) * u128::from(b[tb])
        })
    }

    /// True iff each value of `given` with positive count pins down exactly
    /// one value of `target`.
    pub fn is_determined(&self, given: &[usize], target: &[usize]) -> bool {
        let mut seen: HashMap<Vec<u64>, Vec<u64>> = HashMap::new();
        for tuple in self.counts.keys() {
            let g: Vec<u64> = given.iter().map(|i| tuple[*i]).collect();
            let t: Vec<u64> = target.iter().map(|i| tuple[*i]).collect();
            match seen.entry(g) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(t);
                }
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != t {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// True iff all 2^width values of the variable occur equally often.
    pub fn is_uniform(&self, var: usize) -> bool {
        let width = self.vars[var].1;
        let marginal = self.project_counts(&[var]);
        if u128::try_from(marginal.len()).unwrap() != 1u128 << width {
            return false;
        }
        let mut values = marginal.values();
        let first = *values.next().expect("nonempty");
        values.all(|c| *c == first)
    }

    pub fn entropy_bits(&self, vars: &[usize]) -> f64 {
        entropy_from_counts(self.project_counts(vars).values().copied(), self.total)
    }

    /// H(target | given), computed directly from grouped counts so that
    /// exact determinism yields exactly 0.0.
    pub fn conditional_entropy_bits(&self, target: &[usize], given: &[usize]) -> f64 {
        let joint = self.project_counts(&[given, target].concat());
        let g = self.project_counts(given);
        let total = self.total as f64;
        joint
            .iter()
            .map(|(tuple, c)| {
                let cg = g[&tuple[..given.len()].to_vec()];
                (*c as f64) / total * ((cg as f64) / (*c as f64)).log2()
            })
            .sum()
    }

    /// I(A;B), computed directly so that exact independence yields 0.0.
    pub fn mutual_information_bits(&self, part_a: &[usize], part_b: &[usize]) -> f64 {
        let joint = self.project_counts(&[part_a, part_b].concat());
        let a = self.project_counts(part_a);
        let b = self.project_counts(part_b);
        let total = self.total as f64;
        joint
            .iter()
            .map(|(tuple, c)| {
                let (ta, tb) = tuple.split_at(part_a.len());
                let ratio = (*c as f64) * total / ((a[ta] as f64) * (b[tb] as f64));
                (*c as f64) / total * ratio.log2()
            })
            .sum()
    }
}

fn entropy_from_counts(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let t = total as f64;
    counts
        .filter(|c| *c > 0)
        .map(|c| (c as f64) / t * (t / (c as f64)).log2())
        .sum()
}

// ---------------------------------------------------------------------------
// Feasibility checking

/// Assembly plan for one eavesdropper's view: messages of the set's edges in
/// ascending id order, then the full bit blocks of its observed sources in
/// ascending id order.
fn eavesdrop_pieces(
    layout: &CodeLayout,
    set: &EavesdropSet,
) -> Result<Vec<InputPiece>> {
    let mut pieces = Vec::new();
    let mut width: u32 = 0;
    for id in &set.edges {
        let idx = *layout
            .edge_index
            .get(id)
            .ok_or_else(|| Error::UnknownEdge(id.clone()))?;
        pieces.push(InputPiece::Edge(idx, layout.edge_bits[idx]));
        width += layout.edge_bits[idx];
    }
    for node in &set.observed_sources {
        let &(off, bits) = layout
            .source_layout
            .get(node)
            .ok_or_else(|| Error::UnknownNode(node.clone()))?;
        pieces.push(InputPiece::SourceBits(off, bits));
        width += bits;
    }
    if width > 64 {
        return Err(Error::SpaceLimit(format!(
            "eavesdrop view spans {width} bits"
        )));
    }
    Ok(pieces)
}

struct PassConfig {
    /// Bit shifts (from assignment bit 0) whose values, packed in order,
    /// must equal the key pointwise.
    projection_shifts: Option<Vec<u32>>,
    /// Assignment mask of the two-stage bit collection.
    two_stage_mask: Option<u64>,
}

/// Joint counts of (key value, view value).
type KeyViewCounts = HashMap<(u64, u64), u64>;

struct PassOutput {
    key_counts: HashMap<u64, u64>,
    decode_fail: Option<(u64, NodeId)>,
    /// per eavesdrop set: (key, view) -> count
    eve_joint: Vec<KeyViewCounts>,
    /// per terminal: (key, view) -> count, for advisory entropies
    term_joint: Vec<(NodeId, KeyViewCounts)>,
    projection_fail: Option<u64>,
    /// first assignment whose terminal view collides on the bit collection
    determination_fail: Option<(u64, NodeId)>,
    /// first assignment whose bit-collection pattern maps to two key values
    key_from_m_fail: Option<u64>,
}

fn run_pass(ev: &Evaluator<'_>, cfg: &PassConfig) -> Result<PassOutput> {
    let instance = ev.instance;
    let layout = &ev.layout;
    let ell = layout.total_bits;
    let eve_pieces: Vec<Vec<InputPiece>> = instance
        .eavesdrop_sets
        .iter()
        .map(|set| eavesdrop_pieces(layout, set))
        .collect::<Result<_>>()?;

    let mut out = PassOutput {
        key_counts: HashMap::new(),
        decode_fail: None,
        eve_joint: (0..instance.eavesdrop_sets.len())
            .map(|_| HashMap::new())
            .collect(),
        term_joint: instance
            .terminals
            .iter()
            .map(|t| (t.clone(), HashMap::new()))
            .collect(),
        projection_fail: None,
        determination_fail: None,
        key_from_m_fail: None,
    };
    let mut view_to_pattern: Vec<HashMap<u64, u64>> = instance
        .terminals
        .iter()
        .map(|_| HashMap::new())
        .collect();
    let mut pattern_to_key: HashMap<u64, u64> = HashMap::new();

    let mut edge_values = vec![0u64; instance.edges.len()];
    for m in 0..1u64 << ell {
        ev.edge_values_into(m, &mut edge_values);
        let key = ev.code.key.eval(m);
        *out.key_counts.entry(key).or_insert(0) += 1;

        for (t_idx, t) in instance.terminals.iter().enumerate() {
            let view = ev.decoder_input(m, &edge_values, t);
            let output = ev.code.decoders[t].eval(view);
            if output != key && out.decode_fail.is_none() {
                out.decode_fail = Some((m, t.clone()));
            }
            *out.term_joint[t_idx].1.entry((key, view)).or_insert(0) += 1;
            if let Some(mask_bits) = cfg.two_stage_mask {
                let pattern = m & mask_bits;
                match view_to_pattern[t_idx].entry(view) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(pattern);
                    }
                    std::collections::hash_map::Entry::Occupied(e) => {
                        if *e.get() != pattern && out.determination_fail.is_none() {
                            out.determination_fail = Some((m, t.clone()));
                        }
                    }
                }
            }
        }

        for (i, pieces) in eve_pieces.iter().enumerate() {
            let view = layout.assemble(m, &edge_values, pieces);
            *out.eve_joint[i].entry((key, view)).or_insert(0) += 1;
        }

        if let Some(shifts) = &cfg.projection_shifts {
            let projected = shifts
                .iter()
                .fold(0u64, |acc, s| (acc << 1) | ((m >> s) & 1));
            if projected != key && out.projection_fail.is_none() {
                out.projection_fail = Some(m);
            }
        }
        if let Some(mask_bits) = cfg.two_stage_mask {
            match pattern_to_key.entry(m & mask_bits) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(key);
                }
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != key && out.key_from_m_fail.is_none() {
                        out.key_from_m_fail = Some(m);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn joint_is_independent(joint: &KeyViewCounts, total: u64) -> bool {
    let mut a: HashMap<u64, u64> = HashMap::new();
    let mut b: HashMap<u64, u64> = HashMap::new();
    for ((ka, kb), c) in joint {
        *a.entry(*ka).or_insert(0) += c;
        *b.entry(*kb).or_insert(0) += c;
    }
    if joint.len() as u128 != a.len() as u128 * b.len() as u128 {
        return false;
    }
    joint
        .iter()
        .all(|((ka, kb), c)| u128::from(*c) * u128::from(total) == u128::from(a[ka]) * u128::from(b[kb]))
}

fn joint_mutual_information(joint: &KeyViewCounts, total: u64) -> f64 {
    let mut a: BTreeMap<u64, u64> = BTreeMap::new();
    let mut b: BTreeMap<u64, u64> = BTreeMap::new();
    for ((ka, kb), c) in joint {
        *a.entry(*ka).or_insert(0) += c;
        *b.entry(*kb).or_insert(0) += c;
    }
    let mut cells: Vec<(&(u64, u64), &u64)> = joint.iter().collect();
    cells.sort();
    let t = total as f64;
    cells
        .into_iter()
        .map(|((ka, kb), c)| {
            let ratio = (*c as f64) * t / ((a[ka] as f64) * (b[kb] as f64));
            (*c as f64) / t * ratio.log2()
        })
        .sum()
}

/// H(key | view) from a (key, view) joint.
fn joint_conditional_entropy(joint: &KeyViewCounts, total: u64) -> f64 {
    let mut view_marginal: BTreeMap<u64, u64> = BTreeMap::new();
    for ((_, v), c) in joint {
        *view_marginal.entry(*v).or_insert(0) += c;
    }
    let mut cells: Vec<(&(u64, u64), &u64)> = joint.iter().collect();
    cells.sort();
    let t = total as f64;
    cells
        .into_iter()
        .map(|((_, v), c)| (*c as f64) / t * ((view_marginal[v] as f64) / (*c as f64)).log2())
        .sum()
}

fn uniform_on(key_counts: &HashMap<u64, u64>, width: u32, total: u64) -> bool {
    if width >= 64 {
        // more values than assignments can ever realize at desk scale
        return false;
    }
    if key_counts.len() as u128 != 1u128 << width {
        return false;
    }
    let expected = total >> width;
    key_counts.values().all(|c| *c == expected)
}

fn build_report(
    mode: CheckMode,
    rate: Rational64,
    code: &NetworkCode,
    pass: &PassOutput,
    total: u64,
    witness: Option<Verdict>,
) -> FeasibilityReport {
    let key_bits = code.key.out_bits();
    let claimed = integral_bits(rate, code.blocklength);
    let rate_ok =
        claimed == Some(key_bits) && uniform_on(&pass.key_counts, key_bits, total);
    let decoding = match &pass.decode_fail {
        None => Verdict::pass(),
        Some((m, t)) => Verdict::fail(Counterexample {
            assignment: Some(*m),
            terminal: Some(t.clone()),
            ..Default::default()
        }),
    };
    let secrecy = match pass
        .eve_joint
        .iter()
        .position(|j| !joint_is_independent(j, total))
    {
        None => Verdict::pass(),
        Some(i) => Verdict::fail(Counterexample {
            eavesdrop_set: Some(i),
            ..Default::default()
        }),
    };
    let sorted_key_counts = {
        let mut v: Vec<(u64, u64)> = pass.key_counts.iter().map(|(k, c)| (*k, *c)).collect();
        v.sort_unstable();
        v
    };
    let advisory = Advisory {
        key_entropy_bits: entropy_from_counts(sorted_key_counts.iter().map(|(_, c)| *c), total),
        max_decoder_conditional_entropy_bits: pass
            .term_joint
            .iter()
            .map(|(_, j)| joint_conditional_entropy(j, total))
            .fold(0.0, f64::max),
        max_eavesdrop_mutual_information_bits: pass
            .eve_joint
            .iter()
            .map(|j| joint_mutual_information(j, total))
            .fold(0.0, f64::max),
    };
    FeasibilityReport {
        mode,
        rate,
        blocklength: code.blocklength,
        rate_verdict: if rate_ok {
            Verdict::pass()
        } else {
            Verdict {
                ok: false,
                counterexample: None,
            }
        },
        decoding,
        secrecy,
        witness,
        advisory,
        overall: false,
    }
    .finish()
}

/// Verifies the plain key-dissemination criteria: the key is uniform at
/// `rate * blocklength` bits, every decoder outputs it on every assignment,
/// and it is exactly independent of every eavesdropper's view.
pub fn check_key_feasibility(
    instance: &NetworkInstance,
    code: &NetworkCode,
    rate: Rational64,
    limits: &Limits,
) -> Result<FeasibilityReport> {
    let ev = Evaluator::new(instance, code)?;
    limits.check_enum(ev.layout.total_bits, "feasibility check")?;
    let pass = run_pass(
        &ev,
        &PassConfig {
            projection_shifts: None,
            two_stage_mask: None,
        },
    )?;
    Ok(build_report(
        CheckMode::Key,
        rate,
        code,
        &pass,
        1u64 << ev.layout.total_bits,
        None,
    ))
}

fn resolve_coords(
    instance: &NetworkInstance,
    layout: &CodeLayout,
    coords: &[Coord],
    require_message_role: bool,
) -> Result<Vec<u32>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut shifts = Vec::with_capacity(coords.len());
    for c in coords {
        if !seen.insert((c.source.clone(), c.bit)) {
            return Err(Error::BadCoords(format!(
                "coordinate ({}, {}) listed twice",
                c.source, c.bit
            )));
        }
        let role = instance
            .source_role(&c.source)
            .ok_or_else(|| Error::BadCoords(format!("`{}` is not a source", c.source)))?;
        if require_message_role && !role.is_message() {
            return Err(Error::BadCoords(format!(
                "source `{}` has role {}, message bits require message or both",
                c.source,
                role.as_str()
            )));
        }
        shifts.push(source_bit_shift(layout, &c.source, c.bit)?);
    }
    Ok(shifts)
}

/// Verifies secure-multicast feasibility: key-dissemination criteria plus
/// the key map being exactly the projection onto `message_coords`.
pub fn check_secure_feasibility(
    instance: &NetworkInstance,
    code: &NetworkCode,
    rate: Rational64,
    message_coords: &[Coord],
    limits: &Limits,
) -> Result<FeasibilityReport> {
    let ev = Evaluator::new(instance, code)?;
    limits.check_enum(ev.layout.total_bits, "feasibility check")?;
    let shifts = resolve_coords(instance, &ev.layout, message_coords, true)?;
    let widths_match = message_coords.len() as u32 == code.key.out_bits();
    let pass = run_pass(
        &ev,
        &PassConfig {
            projection_shifts: widths_match.then(|| shifts.clone()),
            two_stage_mask: None,
        },
    )?;
    let witness = if !widths_match {
        Verdict {
            ok: false,
            counterexample: None,
        }
    } else {
        match pass.projection_fail {
            None => Verdict::pass(),
            Some(m) => Verdict::fail(Counterexample {
                assignment: Some(m),
                ..Default::default()
            }),
        }
    };
    Ok(build_report(
        CheckMode::Sec,
        rate,
        code,
        &pass,
        1u64 << ev.layout.total_bits,
        Some(witness),
    ))
}

/// Verifies two-stage feasibility: key-dissemination criteria plus the
/// existence condition instantiated at `witness`: every terminal's view
/// determines the bit collection, and the key is a function of it.
pub fn check_two_stage_feasibility(
    instance: &NetworkInstance,
    code: &NetworkCode,
    rate: Rational64,
    witness: &TwoStageWitness,
    limits: &Limits,
) -> Result<FeasibilityReport> {
    let ev = Evaluator::new(instance, code)?;
    limits.check_enum(ev.layout.total_bits, "feasibility check")?;
    let shifts = resolve_coords(instance, &ev.layout, &witness.coords, false)?;
    let m_mask = shifts.iter().fold(0u64, |acc, s| acc | (1u64 << s));
    let pass = run_pass(
        &ev,
        &PassConfig {
            projection_shifts: None,
            two_stage_mask: Some(m_mask),
        },
    )?;
    let witness_verdict = if let Some((m, t)) = &pass.determination_fail {
        Verdict::fail(Counterexample {
            assignment: Some(*m),
            terminal: Some(t.clone()),
            ..Default::default()
        })
    } else if let Some(m) = pass.key_from_m_fail {
        Verdict::fail(Counterexample {
            assignment: Some(m),
            ..Default::default()
        })
    } else {
        Verdict::pass()
    };
    Ok(build_report(
        CheckMode::Key2,
        rate,
        code,
        &pass,
        1u64 << ev.layout.total_bits,
        Some(witness_verdict),
    ))
}

/// Searches for the first bit collection (smallest, then lexicographically
/// by sorted coordinate list) under which `check_two_stage_feasibility`
/// passes at `rate`. Returns `None` when no collection works.
pub fn find_two_stage_witness(
    instance: &NetworkInstance,
    code: &NetworkCode,
    rate: Rational64,
    limits: &Limits,
) -> Result<Option<TwoStageWitness>> {
    let ev = Evaluator::new(instance, code)?;
    let ell = ev.layout.total_bits;
    if ell > limits.witness_cap {
        return Err(Error::SpaceLimit(format!(
            "witness search over {ell} source bits, cap is {}",
            limits.witness_cap
        )));
    }

    // Base criteria do not depend on the collection; bail out early.
    let base = check_key_feasibility(instance, code, rate, limits)?;
    if !base.overall {
        return Ok(None);
    }

    // All source coordinates, sorted; shift i belongs to coordinate i.
    let mut coords: Vec<Coord> = Vec::new();
    for (node, &(_, bits)) in &ev.layout.source_layout {
        for b in 0..bits {
            coords.push(Coord::new(node.clone(), b));
        }
    }
    coords.sort();
    let shifts: Vec<u32> = coords
        .iter()
        .map(|c| source_bit_shift(&ev.layout, &c.source, c.bit).expect("valid coord"))
        .collect();

    // Per-terminal determinable coordinates: a coordinate survives when no
    // two assignments with the same view disagree on it.
    let mut per_view: Vec<HashMap<u64, (u64, u64)>> = instance
        .terminals
        .iter()
        .map(|_| HashMap::new())
        .collect();
    let mut key_values = vec![0u64; 1usize << ell];
    let mut edge_values = vec![0u64; instance.edges.len()];
    for m in 0..1u64 << ell {
        ev.edge_values_into(m, &mut edge_values);
        key_values[m as usize] = ev.code.key.eval(m);
        for (t_idx, t) in instance.terminals.iter().enumerate() {
            let view = ev.decoder_input(m, &edge_values, t);
            let entry = per_view[t_idx].entry(view).or_insert((u64::MAX, 0));
            entry.0 &= m;
            entry.1 |= m;
        }
    }
    let mut determinable = mask(ell);
    for views in &per_view {
        let mut stable = mask(ell);
        for (and_acc, or_acc) in views.values() {
            stable &= !(and_acc ^ or_acc);
        }
        determinable &= stable;
    }
    let candidates: Vec<usize> = (0..coords.len())
        .filter(|i| (determinable >> shifts[*i]) & 1 == 1)
        .collect();

    // The key must be a function of the full candidate set for any subset
    // to work.
    let full_mask = candidates
        .iter()
        .fold(0u64, |acc, i| acc | (1u64 << shifts[*i]));
    let mut pattern_key: HashMap<u64, u64> = HashMap::new();
    for m in 0..1u64 << ell {
        let pat = m & full_mask;
        match pattern_key.entry(pat) {
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(key_values[m as usize]);
            }
            std::collections::hash_map::Entry::Occupied(e) => {
                if *e.get() != key_values[m as usize] {
                    return Ok(None);
                }
            }
        }
    }

    // Subsets by increasing size, lexicographic within a size.
    for size in 0..=candidates.len() {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let m_mask = combo
                .iter()
                .fold(0u64, |acc, &i| acc | (1u64 << shifts[candidates[i]]));
            let mut ok = true;
            let mut seen: HashMap<u64, u64> = HashMap::new();
            for (pat, key) in &pattern_key {
                match seen.entry(pat & m_mask) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(*key);
                    }
                    std::collections::hash_map::Entry::Occupied(e) => {
                        if *e.get() != *key {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                return Ok(Some(TwoStageWitness {
                    coords: combo.iter().map(|&i| coords[candidates[i]].clone()).collect(),
                }));
            }
            if !next_combination(&mut combo, candidates.len()) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advances `combo` to the next k-subset of `0..n` in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] != i + n - k {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
