//! Executable code rewrites: source pre-encoding that turns any uniform key
//! into a bit projection, key-matrix column zeroing for the non-secure
//! linear case, and the round trip between secure-multicast codes and
//! key-dissemination codes on a reduced instance.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Zero;

use crate::analysis::Coord;
use crate::code::{BitFunction, CodeLayout, Evaluator, NetworkCode, TruthTable};
use crate::gf2::{mask, Gf2Matrix};
use crate::model::{Edge, EdgeId, NetworkInstance, NodeId, SourceRole};
use crate::rational::integral_bits;
use crate::{Error, Limits, Result};

/// A bijection on `bits`-bit values, stored as a full table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    bits: u32,
    table: Vec<u64>,
}

impl Permutation {
    pub fn new(bits: u32, table: Vec<u64>) -> Result<Self> {
        if bits > 24 {
            return Err(Error::SpaceLimit(format!("permutation over {bits} bits")));
        }
        if table.len() != 1usize << bits {
            return Err(Error::WidthMismatch(format!(
                "permutation over {bits} bits needs {} entries",
                1usize << bits
            )));
        }
        let mut seen = vec![false; table.len()];
        for &v in &table {
            if v & !mask(bits) != 0 || seen[v as usize] {
                return Err(Error::BadFormat(
                    "permutation table is not a bijection".into(),
                ));
            }
            seen[v as usize] = true;
        }
        Ok(Permutation { bits, table })
    }

    pub fn identity(bits: u32) -> Result<Self> {
        Self::new(bits, (0..1u64 << bits).collect())
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn apply(&self, value: u64) -> u64 {
        self.table[value as usize]
    }
}

/// Builds the canonical input permutation under which a uniform map becomes
/// the projection onto the leading key bits: for every input, the map
/// applied after the permutation equals the input's `key_bits`-bit prefix.
///
/// Preimages of each key value are listed in ascending order, key values
/// ascending, and the block of inputs sharing a prefix is routed to the
/// matching preimage list indexed by the suffix.
pub fn preencoding_permutation(
    key_map: &BitFunction,
    key_bits: u32,
    limits: &Limits,
) -> Result<Permutation> {
    let ell = key_map.in_bits();
    limits.check_enum(ell, "pre-encoding permutation")?;
    if key_map.out_bits() != key_bits || key_bits > ell {
        return Err(Error::NotUniform);
    }
    let expected = 1u64 << (ell - key_bits);
    let mut preimages: Vec<Vec<u64>> = vec![Vec::new(); 1usize << key_bits];
    for m in 0..1u64 << ell {
        preimages[key_map.eval(m) as usize].push(m);
    }
    if preimages.iter().any(|p| p.len() as u64 != expected) {
        return Err(Error::NotUniform);
    }
    let suffix_bits = ell - key_bits;
    let mut table = vec![0u64; 1usize << ell];
    for (m, slot) in table.iter_mut().enumerate() {
        let m = m as u64;
        let prefix = (m >> suffix_bits) as usize;
        let suffix = (m & mask(suffix_bits)) as usize;
        *slot = preimages[prefix][suffix];
    }
    Permutation::new(ell, table)
}

/// Rewrites `func` to consume a permuted copy of its trailing source-bit
/// segment, materializing the result as a table.
fn compose_source_segment(
    func: &BitFunction,
    segment_bits: u32,
    perm: &Permutation,
    cap: u32,
) -> Result<BitFunction> {
    debug_assert_eq!(perm.bits(), segment_bits);
    let w = func.in_bits();
    if w > cap {
        return Err(Error::SpaceLimit(format!(
            "pre-encoding a function over {w} input bits (cap {cap})"
        )));
    }
    let seg_mask = mask(segment_bits);
    let table = (0..1u64 << w)
        .map(|x| {
            let head = x >> segment_bits;
            let seg = x & seg_mask;
            func.eval((head << segment_bits) | perm.apply(seg))
        })
        .collect();
    Ok(BitFunction::Table(TruthTable::new(w, func.out_bits(), table)?))
}

/// Applies a pre-encoding permutation at the unique source: every function
/// that reads the source's bits (its encoders, its own decoder if it is a
/// terminal, and the key map) is composed with the permutation. The new
/// code's trace on `m` equals the old code's trace on `perm(m)`.
pub fn apply_preencoding(
    instance: &NetworkInstance,
    code: &NetworkCode,
    perm: &Permutation,
    limits: &Limits,
) -> Result<NetworkCode> {
    if instance.sources.len() != 1 {
        return Err(Error::MultiSource(instance.sources.len()));
    }
    let source = instance.sources[0].node.clone();
    let layout = CodeLayout::new(instance, code)?;
    if perm.bits() != layout.total_bits {
        return Err(Error::WidthMismatch(format!(
            "permutation over {} bits, assignment has {}",
            perm.bits(),
            layout.total_bits
        )));
    }
    let seg_bits = layout.source_layout[&source].1;
    debug_assert_eq!(seg_bits, layout.total_bits);

    let mut edge_encoders = BTreeMap::new();
    for e in &instance.edges {
        let f = &code.edge_encoders[&e.id];
        let f = if e.tail == source {
            compose_source_segment(f, seg_bits, perm, limits.enum_cap)?
        } else {
            f.clone()
        };
        edge_encoders.insert(e.id.clone(), f);
    }
    let mut decoders = BTreeMap::new();
    for t in &instance.terminals {
        let g = &code.decoders[t];
        let g = if *t == source {
            compose_source_segment(g, seg_bits, perm, limits.enum_cap)?
        } else {
            g.clone()
        };
        decoders.insert(t.clone(), g);
    }
    Ok(NetworkCode {
        blocklength: code.blocklength,
        source_bits: code.source_bits.clone(),
        edge_encoders,
        decoders,
        key: compose_source_segment(&code.key, seg_bits, perm, limits.enum_cap)?,
    })
}

/// Repeatedly zeroes the highest-index column lying in the span of the
/// other nonzero columns. The rank never changes, and on return the
/// surviving nonzero columns are linearly independent, so their count
/// equals the rank. Returns the reduced matrix and the surviving indices.
pub fn zero_redundant_columns(matrix: &Gf2Matrix) -> (Gf2Matrix, Vec<u32>) {
    let mut m = matrix.clone();
    let rank = m.rank();
    loop {
        let mut changed = false;
        for c in (0..m.cols()).rev() {
            if m.column_is_zero(c) {
                continue;
            }
            let mut trial = m.clone();
            trial.zero_column(c);
            if trial.rank() == rank {
                m = trial;
                changed = true;
                break;
            }
        }
        if !changed {
            break;
        }
    }
    debug_assert_eq!(m.rank(), rank);
    let kept = m.nonzero_columns();
    debug_assert_eq!(kept.len() as u32, rank);
    (m, kept)
}

/// Maps a global assignment column to its (source, bit) coordinate.
fn column_coord(layout: &CodeLayout, column: u32) -> Coord {
    for (node, &(off, bits)) in &layout.source_layout {
        if column >= off && column < off + bits {
            return Coord::new(node.clone(), column - off);
        }
    }
    unreachable!("column {column} outside the assignment");
}

/// Turns a linear key-dissemination code on an eavesdropper-free instance
/// into a secure-multicast code of the same rate: dependent key-matrix
/// columns are zeroed, those source bits are frozen to zero wherever they
/// are read, and decoders are composed with the inverse of the remaining
/// invertible submatrix so every terminal outputs the surviving bits.
pub fn linear_key_to_secure(
    instance: &NetworkInstance,
    code: &NetworkCode,
) -> Result<(NetworkCode, Vec<Coord>)> {
    if !instance.eavesdrop_sets.is_empty() {
        return Err(Error::NonzeroB);
    }
    if !code.is_linear() {
        return Err(Error::NotLinear);
    }
    let layout = CodeLayout::new(instance, code)?;
    let key_matrix = code.key.as_matrix().expect("linear code");
    let key_bits = key_matrix.rows();
    if key_matrix.rank() != key_bits {
        return Err(Error::RankDeficient);
    }

    let (reduced, kept) = zero_redundant_columns(key_matrix);
    let frozen: Vec<Coord> = (0..key_matrix.cols())
        .filter(|&c| !key_matrix.column_is_zero(c) && reduced.column_is_zero(c))
        .map(|c| column_coord(&layout, c))
        .collect();

    // Freeze a bit by zeroing its column in every matrix that reads it:
    // the encoders on its source's outgoing edges, and the source's own
    // decoder when it is also a terminal.
    let freeze = |func: &BitFunction, node: &str| -> BitFunction {
        let mut m = func.as_matrix().expect("linear code").clone();
        let in_width = m.cols();
        let seg_bits = layout.source_layout[node].1;
        for coord in &frozen {
            if coord.source == node {
                m.zero_column(in_width - seg_bits + coord.bit);
            }
        }
        BitFunction::Linear(m)
    };

    let mut edge_encoders = BTreeMap::new();
    for e in &instance.edges {
        let f = &code.edge_encoders[&e.id];
        let f = if layout.source_layout.contains_key(&e.tail) {
            freeze(f, &e.tail)
        } else {
            f.clone()
        };
        edge_encoders.insert(e.id.clone(), f);
    }

    // The frozen code's terminals output `reduced * m`, which equals the
    // invertible submatrix applied to the kept bits.
    let mut submatrix = Gf2Matrix::zero(key_bits, key_bits)?;
    for r in 0..key_bits {
        for (i, &c) in kept.iter().enumerate() {
            submatrix.set(r, i as u32, reduced.get(r, c));
        }
    }
    let correction = submatrix.inverse()?;

    let mut decoders = BTreeMap::new();
    for t in &instance.terminals {
        let g = &code.decoders[t];
        let g = if layout.source_layout.contains_key(t) {
            freeze(g, t)
        } else {
            g.clone()
        };
        let m = g.as_matrix().expect("linear code");
        decoders.insert(t.clone(), BitFunction::Linear(correction.multiply(m)?));
    }

    let mut projection = Gf2Matrix::zero(key_bits, layout.total_bits)?;
    for (i, &c) in kept.iter().enumerate() {
        projection.set(i as u32, c, true);
    }
    let coords = kept.iter().map(|&c| column_coord(&layout, c)).collect();

    Ok((
        NetworkCode {
            blocklength: code.blocklength,
            source_bits: code.source_bits.clone(),
            edge_encoders,
            decoders,
            key: BitFunction::Linear(projection),
        },
        coords,
    ))
}

/// Identifiers introduced by [`reduce_secure_to_key`], needed to lift codes
/// onto the reduced instance and to restrict them back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub key_terminal: NodeId,
    pub key_edge: EdgeId,
    pub message_source: NodeId,
}

fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (2..)
        .map(|i| format!("{base}_{i}"))
        .find(|name| !taken(name))
        .expect("unbounded candidates")
}

/// Builds the key-dissemination instance for a secure-multicast instance
/// with a single message source: a fresh terminal is connected from that
/// source by a new edge of capacity `rate`, eavesdrop sets are unchanged,
/// and every source becomes a plain (both-role) key source.
pub fn reduce_secure_to_key(
    instance: &NetworkInstance,
    rate: Rational64,
) -> Result<(NetworkInstance, Reduction)> {
    let message_sources: Vec<&NodeId> = instance
        .sources
        .iter()
        .filter(|s| s.role.is_message())
        .map(|s| &s.node)
        .collect();
    if message_sources.len() != 1 {
        return Err(Error::MultiMessageSource(message_sources.len()));
    }
    if rate <= Rational64::zero() {
        return Err(Error::BadRate);
    }
    let source = message_sources[0].clone();
    let key_terminal = fresh_name("d_key", |n| instance.node_exists(n));
    let key_edge = fresh_name("e_key", |n| instance.edge(n).is_some());

    let mut reduced = instance.clone();
    reduced.nodes.push(key_terminal.clone());
    reduced.edges.push(Edge {
        id: key_edge.clone(),
        tail: source.clone(),
        head: key_terminal.clone(),
        capacity: rate,
    });
    reduced.terminals.push(key_terminal.clone());
    for s in &mut reduced.sources {
        s.role = SourceRole::Both;
    }
    Ok((
        reduced,
        Reduction {
            key_terminal,
            key_edge,
            message_source: source,
        },
    ))
}

/// Lifts a secure-multicast code onto the reduced instance: the new edge
/// carries the key bits straight off the message source and the new
/// terminal reads them back.
pub fn lift_secure_code(
    reduced: &NetworkInstance,
    reduction: &Reduction,
    code: &NetworkCode,
    message_coords: &[Coord],
) -> Result<NetworkCode> {
    let source = &reduction.message_source;
    let edge = reduced
        .edge(&reduction.key_edge)
        .ok_or_else(|| Error::UnknownEdge(reduction.key_edge.clone()))?;
    let edge_bits = integral_bits(edge.capacity, code.blocklength)
        .ok_or_else(|| Error::NonintegralAlphabet(edge.id.clone()))?;
    let key_bits = code.key.out_bits();
    if key_bits > edge_bits {
        return Err(Error::CapacityExceeded { key_bits, edge_bits });
    }
    if message_coords.len() as u32 != key_bits {
        return Err(Error::BadCoords(format!(
            "{} coordinates for a {key_bits}-bit key",
            message_coords.len()
        )));
    }
    let source_bits = code.source_bits.get(source).copied().unwrap_or(0);
    for c in message_coords {
        if c.source != *source || c.bit >= source_bits {
            return Err(Error::BadCoords(format!(
                "coordinate ({}, {}) is not a bit of source `{source}`",
                c.source, c.bit
            )));
        }
    }

    // Input to the new encoder: the source's incoming edges, then its bits.
    let mut edge_part = 0u32;
    for e in reduced.in_edges(source) {
        if e.id == reduction.key_edge {
            continue; // not incoming; guard anyway
        }
        edge_part += integral_bits(e.capacity, code.blocklength)
            .ok_or_else(|| Error::NonintegralAlphabet(e.id.clone()))?;
    }
    let in_width = edge_part + source_bits;
    let mut encoder = Gf2Matrix::zero(edge_bits, in_width)?;
    for (i, c) in message_coords.iter().enumerate() {
        encoder.set(i as u32, edge_part + c.bit, true);
    }
    let mut decoder = Gf2Matrix::zero(key_bits, edge_bits)?;
    for i in 0..key_bits {
        decoder.set(i, i, true);
    }

    let mut lifted = code.clone();
    lifted
        .edge_encoders
        .insert(reduction.key_edge.clone(), BitFunction::Linear(encoder));
    lifted
        .decoders
        .insert(reduction.key_terminal.clone(), BitFunction::Linear(decoder));
    Ok(lifted)
}

/// Restricts a key-dissemination code on a reduced instance back to a
/// secure-multicast code on the underlying instance. The key must be a
/// function of the message source's bits; a pre-encoding permutation at
/// that source then turns it into the projection onto the source's leading
/// bits, and the added terminal and edge are dropped.
pub fn restrict_key_code_to_secure(
    reduced: &NetworkInstance,
    reduction: &Reduction,
    code: &NetworkCode,
    limits: &Limits,
) -> Result<(NetworkCode, Vec<Coord>)> {
    let ev = Evaluator::new(reduced, code)?;
    let ell = ev.layout.total_bits;
    limits.check_enum(ell, "code restriction")?;
    let source = &reduction.message_source;
    let &(seg_off, seg_bits) = ev
        .layout
        .source_layout
        .get(source)
        .ok_or_else(|| Error::UnknownNode(source.clone()))?;
    let key_bits = code.key.out_bits();

    // The key must depend on the assignment only through the source's bits.
    let mut by_segment: Vec<Option<u64>> = vec![None; 1usize << seg_bits];
    for m in 0..1u64 << ell {
        let seg = ev.layout.source_segment(m, source);
        let key = code.key.eval(m);
        match by_segment[seg as usize] {
            None => by_segment[seg as usize] = Some(key),
            Some(prev) if prev != key => return Err(Error::KeyNotSourceFunction),
            Some(_) => {}
        }
    }
    let segment_table: Vec<u64> = by_segment
        .into_iter()
        .map(|v| v.expect("all segments visited"))
        .collect();
    let source_key = BitFunction::Table(TruthTable::new(seg_bits, key_bits, segment_table)?);
    let perm = preencoding_permutation(&source_key, key_bits, limits)?;

    let mut restricted = NetworkCode {
        blocklength: code.blocklength,
        source_bits: code.source_bits.clone(),
        edge_encoders: BTreeMap::new(),
        decoders: BTreeMap::new(),
        key: code.key.clone(),
    };
    for e in &reduced.edges {
        if e.id == reduction.key_edge {
            continue;
        }
        let f = &code.edge_encoders[&e.id];
        let f = if e.tail == *source {
            compose_source_segment(f, seg_bits, &perm, limits.enum_cap)?
        } else {
            f.clone()
        };
        restricted.edge_encoders.insert(e.id.clone(), f);
    }
    for t in &reduced.terminals {
        if *t == reduction.key_terminal {
            continue;
        }
        let g = &code.decoders[t];
        let g = if t == source {
            compose_source_segment(g, seg_bits, &perm, limits.enum_cap)?
        } else {
            g.clone()
        };
        restricted.decoders.insert(t.clone(), g);
    }

    let mut projection = Gf2Matrix::zero(key_bits, ell)?;
    for i in 0..key_bits {
        projection.set(i, seg_off + i, true);
    }
    restricted.key = BitFunction::Linear(projection);

    let coords = (0..key_bits).map(|b| Coord::new(source.clone(), b)).collect();
    Ok((restricted, coords))
}

/// Drops the reduction's added terminal and edge from an instance,
/// recovering the secure-multicast topology (source roles are left as the
/// reduced instance declares them).
pub fn strip_reduction(reduced: &NetworkInstance, reduction: &Reduction) -> NetworkInstance {
    let mut original = reduced.clone();
    original.nodes.retain(|n| *n != reduction.key_terminal);
    original.edges.retain(|e| e.id != reduction.key_edge);
    original.terminals.retain(|t| *t != reduction.key_terminal);
    original
}
