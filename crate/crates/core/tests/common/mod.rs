//! Shared generators and independent oracles for the integration suites.
//!
//! Everything here is seeded and deterministic. The oracles deliberately
//! recompute results by brute force so the library paths they check stay
//! independent.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use keycast_core::analysis::{
    check_key_feasibility, check_secure_feasibility, CountTable, Coord, Var,
};
use keycast_core::code::{BitFunction, NetworkCode, TruthTable};
use keycast_core::gf2::Gf2Matrix;
use keycast_core::model::{
    EavesdropSet, Edge, NetworkInstance, NodeId, SourceDecl, SourceRole,
};
use keycast_core::Limits;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn edge(id: &str, tail: &str, head: &str, capacity: i64) -> Edge {
    Edge {
        id: id.to_string(),
        tail: tail.to_string(),
        head: head.to_string(),
        capacity: Rational64::from_integer(capacity),
    }
}

/// A balanced map over `ell` bits with `key_bits` output bits, drawn
/// uniformly by shuffling the input space.
pub fn random_uniform_key_map(rng: &mut ChaCha8Rng, ell: u32, key_bits: u32) -> BitFunction {
    let mut inputs: Vec<u64> = (0..1u64 << ell).collect();
    inputs.shuffle(rng);
    let per_value = 1usize << (ell - key_bits);
    let mut table = vec![0u64; 1 << ell];
    for (pos, &input) in inputs.iter().enumerate() {
        table[input as usize] = (pos / per_value) as u64;
    }
    BitFunction::Table(TruthTable::new(ell, key_bits, table).unwrap())
}

pub fn random_table(rng: &mut ChaCha8Rng, in_bits: u32, out_bits: u32) -> BitFunction {
    let table = (0..1u64 << in_bits)
        .map(|_| rng.gen_range(0..1u64 << out_bits))
        .collect();
    BitFunction::Table(TruthTable::new(in_bits, out_bits, table).unwrap())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: u32, cols: u32) -> Gf2Matrix {
    let words = (0..rows)
        .map(|_| rng.gen_range(0..1u64 << cols))
        .collect();
    Gf2Matrix::from_row_words(cols, words).unwrap()
}

pub fn random_invertible(rng: &mut ChaCha8Rng, n: u32) -> Gf2Matrix {
    loop {
        let m = random_matrix(rng, n, n);
        if m.rank() == n {
            return m;
        }
    }
}

pub fn random_full_rank(rng: &mut ChaCha8Rng, rows: u32, cols: u32) -> Gf2Matrix {
    loop {
        let m = random_matrix(rng, rows, cols);
        if m.rank() == rows {
            return m;
        }
    }
}

/// Span size of the rows, counted by enumerating every row combination.
/// Independent of the elimination-based rank.
pub fn rank_by_row_span(m: &Gf2Matrix) -> u32 {
    let mut span = std::collections::HashSet::new();
    for subset in 0..1u64 << m.rows() {
        let mut acc = 0u64;
        for r in 0..m.rows() {
            if (subset >> r) & 1 == 1 {
                acc ^= m.row_word(r);
            }
        }
        span.insert(acc);
    }
    debug_assert!(span.len().is_power_of_two());
    span.len().trailing_zeros()
}

/// Minimum-capacity edge set disconnecting `sources` from `sink`, by
/// enumerating all edge subsets. Exponential; keep instances tiny.
pub fn brute_force_min_cut(
    instance: &NetworkInstance,
    sources: &BTreeSet<NodeId>,
    sink: &NodeId,
) -> Rational64 {
    let edges = &instance.edges;
    let reachable = |removed: u64| -> bool {
        let mut frontier: Vec<&str> = sources.iter().map(|s| s.as_str()).collect();
        let mut seen: BTreeSet<&str> = frontier.iter().copied().collect();
        while let Some(node) = frontier.pop() {
            if node == sink.as_str() {
                return true;
            }
            for (i, e) in edges.iter().enumerate() {
                if (removed >> i) & 1 == 0 && e.tail == node && !seen.contains(e.head.as_str()) {
                    seen.insert(&e.head);
                    frontier.push(&e.head);
                }
            }
        }
        false
    };
    let mut best: Option<Rational64> = None;
    for removed in 0..1u64 << edges.len() {
        if reachable(removed) {
            continue;
        }
        let weight = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| (removed >> i) & 1 == 1)
            .map(|(_, e)| e.capacity)
            .fold(Rational64::from_integer(0), |a, b| a + b);
        best = Some(match best {
            Some(b) if b <= weight => b,
            _ => weight,
        });
    }
    best.expect("removing all edges always disconnects")
}

/// A random single-source instance with a relay and one or two terminals,
/// together with a code whose key map is uniform. About half the draws
/// route the source bits verbatim so that decoding actually succeeds; the
/// rest use arbitrary tables. Eavesdrop sets are drawn at random.
pub fn random_single_source_setup(
    rng: &mut ChaCha8Rng,
) -> (NetworkInstance, NetworkCode, Rational64) {
    let ell = rng.gen_range(2..=4u32);
    let key_bits = rng.gen_range(1..=ell.min(2));
    let terminals = rng.gen_range(1..=2usize);
    let mut nodes = vec!["s".to_string(), "v".to_string()];
    let mut edges = vec![edge("s->v", "s", "v", i64::from(ell))];
    let mut eavesdrop = Vec::new();
    for t in 1..=terminals {
        let d = format!("d{t}");
        edges.push(edge(&format!("v->{d}"), "v", &d, i64::from(ell)));
        nodes.push(d);
    }
    if rng.gen_bool(0.5) {
        eavesdrop.push(EavesdropSet {
            edges: ["s->v".to_string()].into(),
            observed_sources: BTreeSet::new(),
        });
    }
    if rng.gen_bool(0.3) {
        eavesdrop.push(EavesdropSet {
            edges: BTreeSet::new(),
            observed_sources: ["s".to_string()].into(),
        });
    }
    let instance = NetworkInstance {
        nodes,
        edges: edges.clone(),
        sources: vec![SourceDecl {
            node: "s".into(),
            role: SourceRole::Both,
        }],
        terminals: (1..=terminals).map(|t| format!("d{t}")).collect(),
        eavesdrop_sets: eavesdrop,
    };

    let key = random_uniform_key_map(rng, ell, key_bits);
    let routing = rng.gen_bool(0.5);
    let mut edge_encoders = BTreeMap::new();
    let mut decoders = BTreeMap::new();
    if routing {
        for e in &edges {
            edge_encoders.insert(
                e.id.clone(),
                BitFunction::Linear(Gf2Matrix::identity(ell).unwrap()),
            );
        }
        let decoder = key.to_table(24).unwrap();
        for t in &instance.terminals {
            decoders.insert(t.clone(), BitFunction::Table(decoder.clone()));
        }
    } else {
        for e in &edges {
            edge_encoders.insert(e.id.clone(), random_table(rng, ell, ell));
        }
        for t in &instance.terminals {
            decoders.insert(t.clone(), random_table(rng, ell, key_bits));
        }
    }
    let code = NetworkCode {
        blocklength: 1,
        source_bits: [("s".to_string(), ell)].into(),
        edge_encoders,
        decoders,
        key,
    };
    let rate = Rational64::from_integer(i64::from(key_bits));
    (instance, code, rate)
}

/// A random all-linear code on a hub topology that provably passes the
/// plain key check: sources feed a hub, the hub applies an invertible mix,
/// and each terminal inverts it behind a full-rank key matrix. B is empty.
pub fn random_linear_key_setup(
    rng: &mut ChaCha8Rng,
) -> (NetworkInstance, NetworkCode, Rational64) {
    let n_sources = rng.gen_range(1..=3usize);
    let bits: Vec<u32> = (0..n_sources).map(|_| rng.gen_range(1..=2u32)).collect();
    let ell: u32 = bits.iter().sum();
    let key_bits = rng.gen_range(1..=ell);
    let terminals = rng.gen_range(1..=2usize);

    let mut nodes: Vec<String> = (1..=n_sources).map(|i| format!("s{i}")).collect();
    nodes.push("v".into());
    let mut edges = Vec::new();
    for (i, b) in bits.iter().enumerate() {
        let s = format!("s{}", i + 1);
        edges.push(edge(&format!("{s}->v"), &s, "v", i64::from(*b)));
    }
    for t in 1..=terminals {
        let d = format!("d{t}");
        edges.push(edge(&format!("v->{d}"), "v", &d, i64::from(ell)));
        nodes.push(d);
    }
    let instance = NetworkInstance {
        nodes,
        edges: edges.clone(),
        sources: (1..=n_sources)
            .map(|i| SourceDecl {
                node: format!("s{i}"),
                role: SourceRole::Both,
            })
            .collect(),
        terminals: (1..=terminals).map(|t| format!("d{t}")).collect(),
        eavesdrop_sets: vec![],
    };

    let mix = random_invertible(rng, ell);
    let key_matrix = random_full_rank(rng, key_bits, ell);
    let unmix = mix.inverse().unwrap();
    let decode = key_matrix.multiply(&unmix).unwrap();

    let mut edge_encoders = BTreeMap::new();
    for (i, b) in bits.iter().enumerate() {
        edge_encoders.insert(
            format!("s{}->v", i + 1),
            BitFunction::Linear(Gf2Matrix::identity(*b).unwrap()),
        );
    }
    let mut decoders = BTreeMap::new();
    for t in &instance.terminals {
        edge_encoders.insert(format!("v->{t}"), BitFunction::Linear(mix.clone()));
        decoders.insert(t.clone(), BitFunction::Linear(decode.clone()));
    }
    let code = NetworkCode {
        blocklength: 1,
        source_bits: bits
            .iter()
            .enumerate()
            .map(|(i, b)| (format!("s{}", i + 1), *b))
            .collect(),
        edge_encoders,
        decoders,
        key: BitFunction::Linear(key_matrix),
    };
    let rate = Rational64::from_integer(i64::from(key_bits));
    let report = check_key_feasibility(&instance, &code, rate, &Limits::default()).unwrap();
    assert!(report.overall, "generator must produce passing key codes");
    (instance, code, rate)
}

/// A random secure-multicast setup with exactly one message source that
/// provably passes the secure check. Half the draws forward message bits
/// directly with no eavesdropper; the other half mask them with a second
/// source's pad behind per-edge eavesdroppers.
pub fn random_secure_setup(
    rng: &mut ChaCha8Rng,
) -> (NetworkInstance, NetworkCode, Vec<Coord>, Rational64) {
    let (instance, code, coords, rate) = if rng.gen_bool(0.5) {
        direct_secure_setup(rng)
    } else {
        padded_secure_setup(rng)
    };
    let report =
        check_secure_feasibility(&instance, &code, rate, &coords, &Limits::default()).unwrap();
    assert!(report.overall, "generator must produce passing secure codes");
    (instance, code, coords, rate)
}

fn projection_rows(selected: &[u32], in_bits: u32) -> Gf2Matrix {
    let mut m = Gf2Matrix::zero(selected.len() as u32, in_bits).unwrap();
    for (r, c) in selected.iter().enumerate() {
        m.set(r as u32, *c, true);
    }
    m
}

fn direct_secure_setup(
    rng: &mut ChaCha8Rng,
) -> (NetworkInstance, NetworkCode, Vec<Coord>, Rational64) {
    let ell = rng.gen_range(1..=3u32);
    let key_bits = rng.gen_range(1..=ell);
    let mut selectable: Vec<u32> = (0..ell).collect();
    selectable.shuffle(rng);
    let mut selected: Vec<u32> = selectable[..key_bits as usize].to_vec();
    selected.sort_unstable();
    let terminals = rng.gen_range(1..=2usize);

    let mut nodes = vec!["s1".to_string()];
    let mut edges = Vec::new();
    for t in 1..=terminals {
        let d = format!("d{t}");
        edges.push(edge(&format!("s1->{d}"), "s1", &d, i64::from(ell)));
        nodes.push(d);
    }
    let instance = NetworkInstance {
        nodes,
        edges: edges.clone(),
        sources: vec![SourceDecl {
            node: "s1".into(),
            role: SourceRole::Message,
        }],
        terminals: (1..=terminals).map(|t| format!("d{t}")).collect(),
        eavesdrop_sets: vec![],
    };
    let mut edge_encoders = BTreeMap::new();
    let mut decoders = BTreeMap::new();
    for t in &instance.terminals {
        edge_encoders.insert(
            format!("s1->{t}"),
            BitFunction::Linear(Gf2Matrix::identity(ell).unwrap()),
        );
        decoders.insert(
            t.clone(),
            BitFunction::Linear(projection_rows(&selected, ell)),
        );
    }
    let code = NetworkCode {
        blocklength: 1,
        source_bits: [("s1".to_string(), ell)].into(),
        edge_encoders,
        decoders,
        key: BitFunction::Linear(projection_rows(&selected, ell)),
    };
    let coords = selected.iter().map(|b| Coord::new("s1", *b)).collect();
    (instance, code, coords, Rational64::from_integer(i64::from(key_bits)))
}

fn padded_secure_setup(
    rng: &mut ChaCha8Rng,
) -> (NetworkInstance, NetworkCode, Vec<Coord>, Rational64) {
    let key_bits = rng.gen_range(1..=2u32);
    let extra = rng.gen_range(0..=1u32);
    let ell1 = key_bits + extra;
    let selected: Vec<u32> = (0..key_bits).collect();
    let terminals = rng.gen_range(1..=2usize);

    let mut nodes: Vec<String> = ["s1", "s2", "v", "w1", "w2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let k = i64::from(key_bits);
    let mut edges = vec![
        edge("s1->v", "s1", "v", k),
        edge("s2->v", "s2", "v", k),
        edge("v->w1", "v", "w1", k),
        edge("v->w2", "v", "w2", k),
    ];
    for t in 1..=terminals {
        let d = format!("d{t}");
        edges.push(edge(&format!("w1->{d}"), "w1", &d, k));
        edges.push(edge(&format!("w2->{d}"), "w2", &d, k));
        nodes.push(d);
    }
    // The pad protects everything from the mixing node onward.
    let mut eavesdrop: Vec<EavesdropSet> = edges
        .iter()
        .filter(|e| e.tail != "s1" && e.tail != "s2")
        .map(|e| EavesdropSet {
            edges: [e.id.clone()].into(),
            observed_sources: BTreeSet::new(),
        })
        .collect();
    if rng.gen_bool(0.5) {
        eavesdrop.push(EavesdropSet {
            edges: BTreeSet::new(),
            observed_sources: ["s2".to_string()].into(),
        });
    }
    let instance = NetworkInstance {
        nodes,
        edges: edges.clone(),
        sources: vec![
            SourceDecl {
                node: "s1".into(),
                role: SourceRole::Message,
            },
            SourceDecl {
                node: "s2".into(),
                role: SourceRole::Random,
            },
        ],
        terminals: (1..=terminals).map(|t| format!("d{t}")).collect(),
        eavesdrop_sets: eavesdrop,
    };

    let identity = || BitFunction::Linear(Gf2Matrix::identity(key_bits).unwrap());
    // (a, b) -> a xor b and (a, b) -> b over a 2k-bit input.
    let xor_halves = {
        let mut m = Gf2Matrix::zero(key_bits, 2 * key_bits).unwrap();
        for r in 0..key_bits {
            m.set(r, r, true);
            m.set(r, key_bits + r, true);
        }
        BitFunction::Linear(m)
    };
    let second_half = {
        let mut m = Gf2Matrix::zero(key_bits, 2 * key_bits).unwrap();
        for r in 0..key_bits {
            m.set(r, key_bits + r, true);
        }
        BitFunction::Linear(m)
    };

    let mut edge_encoders = BTreeMap::new();
    edge_encoders.insert(
        "s1->v".to_string(),
        BitFunction::Linear(projection_rows(&selected, ell1)),
    );
    edge_encoders.insert("s2->v".to_string(), identity());
    edge_encoders.insert("v->w1".to_string(), xor_halves.clone());
    edge_encoders.insert("v->w2".to_string(), second_half);
    let mut decoders = BTreeMap::new();
    for t in &instance.terminals {
        edge_encoders.insert(format!("w1->{t}"), identity());
        edge_encoders.insert(format!("w2->{t}"), identity());
        decoders.insert(t.clone(), xor_halves.clone());
    }
    // Global key: projection onto s1's leading bits within (s1, s2) packing.
    let key = BitFunction::Linear(projection_rows(&selected, ell1 + key_bits));
    let code = NetworkCode {
        blocklength: 1,
        source_bits: [
            ("s1".to_string(), ell1),
            ("s2".to_string(), key_bits),
        ]
        .into(),
        edge_encoders,
        decoders,
        key,
    };
    let coords = selected.iter().map(|b| Coord::new("s1", *b)).collect();
    (instance, code, coords, Rational64::from_integer(k))
}

/// A random count table built as the exact law of random functions of a
/// uniform seed, sometimes with forced structure (copies, parities) so
/// that determinism and independence both occur.
pub fn random_count_table(rng: &mut ChaCha8Rng) -> CountTable {
    let ell = rng.gen_range(4..=8u32);
    let n_vars = rng.gen_range(2..=4usize);
    let widths: Vec<u32> = (0..n_vars).map(|_| rng.gen_range(1..=3u32)).collect();
    let funcs: Vec<Vec<u64>> = widths
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let style = rng.gen_range(0..4);
            (0..1u64 << ell)
                .map(|m| match style {
                    // raw low bits: makes later variables functions of
                    // earlier ones
                    0 => m & ((1 << w) - 1),
                    // parity fill
                    1 => u64::from(m.count_ones() & 1) & ((1 << w) - 1),
                    // shifted window, independent of the low-bit window
                    2 => (m >> i) & ((1 << w) - 1),
                    _ => rng.gen_range(0..1u64 << w),
                })
                .collect()
        })
        .collect();
    let mut counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for m in 0..1u64 << ell {
        let tuple: Vec<u64> = funcs.iter().map(|f| f[m as usize]).collect();
        *counts.entry(tuple).or_insert(0) += 1;
    }
    let vars = widths
        .iter()
        .enumerate()
        .map(|(i, w)| (Var::Edge(format!("x{i}")), *w))
        .collect();
    CountTable::from_counts(vars, counts).unwrap()
}
