//! Canonical builders: the layered rate-gap family, its sum-of-sources and
//! two-stage forwarding codes, and the minimal two-source example network.

use std::collections::BTreeMap;

use num_rational::Rational64;

use crate::code::{BitFunction, NetworkCode};
use crate::gf2::Gf2Matrix;
use crate::model::{EavesdropSet, Edge, NetworkInstance, SourceDecl, SourceRole};
use crate::{Error, Result};

/// Which eavesdropper collection a gap instance carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    /// One set per intermediate node, holding its incoming edges.
    EdgeSets,
    /// `EdgeSets` plus, per source, a set observing that source's bits, so
    /// that every non-terminal node is covered.
    NodeAll,
}

fn unit_edge(tail: &str, head: &str) -> Edge {
    Edge {
        id: format!("{tail}->{head}"),
        tail: tail.to_string(),
        head: head.to_string(),
        capacity: Rational64::from_integer(1),
    }
}

/// Builds the three-layer instance with `r = alpha + 1` sources: source
/// `s_i` feeds `u_i` and every `ubar_j` with `j != i`, and terminal `d_i`
/// reads `u_i` and `ubar_i`. All capacities are 1.
///
/// `alpha >= 2` exhibits the direct-versus-two-stage rate gap; `alpha = 1`
/// is accepted for smoke tests.
pub fn gap_instance(alpha: u32, mode: GapMode) -> Result<NetworkInstance> {
    if alpha == 0 {
        return Err(Error::BadAlpha);
    }
    let r = alpha as usize + 1;
    let s = |i: usize| format!("s{i}");
    let u = |i: usize| format!("u{i}");
    let ubar = |i: usize| format!("ubar{i}");
    let d = |i: usize| format!("d{i}");

    let mut nodes = Vec::with_capacity(4 * r);
    for i in 1..=r {
        nodes.push(s(i));
    }
    for i in 1..=r {
        nodes.push(u(i));
    }
    for i in 1..=r {
        nodes.push(ubar(i));
    }
    for i in 1..=r {
        nodes.push(d(i));
    }

    let mut edges = Vec::new();
    for i in 1..=r {
        edges.push(unit_edge(&s(i), &u(i)));
    }
    for i in 1..=r {
        for j in 1..=r {
            if j != i {
                edges.push(unit_edge(&s(j), &ubar(i)));
            }
        }
    }
    for i in 1..=r {
        edges.push(unit_edge(&u(i), &d(i)));
        edges.push(unit_edge(&ubar(i), &d(i)));
    }

    let mut eavesdrop_sets = Vec::new();
    for i in 1..=r {
        eavesdrop_sets.push(EavesdropSet {
            edges: [format!("{}->{}", s(i), u(i))].into(),
            observed_sources: Default::default(),
        });
    }
    for i in 1..=r {
        eavesdrop_sets.push(EavesdropSet {
            edges: (1..=r)
                .filter(|j| *j != i)
                .map(|j| format!("{}->{}", s(j), ubar(i)))
                .collect(),
            observed_sources: Default::default(),
        });
    }
    if mode == GapMode::NodeAll {
        for i in 1..=r {
            eavesdrop_sets.push(EavesdropSet {
                edges: Default::default(),
                observed_sources: [s(i)].into(),
            });
        }
    }

    Ok(NetworkInstance {
        nodes,
        edges,
        sources: (1..=r)
            .map(|i| SourceDecl {
                node: s(i),
                role: SourceRole::Both,
            })
            .collect(),
        terminals: (1..=r).map(d).collect(),
        eavesdrop_sets,
    })
}

/// Recognizes a gap-family instance and returns its source count `r`.
pub fn gap_source_count(instance: &NetworkInstance) -> Option<usize> {
    let r = instance.nodes.len() / 4;
    if r < 2 || instance.nodes.len() != 4 * r {
        return None;
    }
    let expected = gap_instance(r as u32 - 1, GapMode::EdgeSets).ok()?;
    let same_edges = {
        let mut a: Vec<&str> = instance.edges.iter().map(|e| e.id.as_str()).collect();
        let mut b: Vec<&str> = expected.edges.iter().map(|e| e.id.as_str()).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b && instance
            .edges
            .iter()
            .all(|e| e.capacity == Rational64::from_integer(1))
    };
    let mut nodes_a = instance.nodes.clone();
    let mut nodes_b = expected.nodes.clone();
    nodes_a.sort();
    nodes_b.sort();
    let mut term_a = instance.terminals.clone();
    let mut term_b = expected.terminals.clone();
    term_a.sort();
    term_b.sort();
    let mut src_a: Vec<&str> = instance.sources.iter().map(|s| s.node.as_str()).collect();
    let mut src_b: Vec<&str> = expected.sources.iter().map(|s| s.node.as_str()).collect();
    src_a.sort_unstable();
    src_b.sort_unstable();
    (same_edges && nodes_a == nodes_b && term_a == term_b && src_a == src_b).then_some(r)
}

fn ones_row(cols: u32) -> Result<Gf2Matrix> {
    Gf2Matrix::from_row_words(cols, vec![crate::gf2::mask(cols)])
}

/// The blocklength-1 code that forwards each source bit and sums everywhere:
/// every terminal and the key map output the parity of all source bits.
pub fn sum_code(instance: &NetworkInstance) -> Result<NetworkCode> {
    let r = gap_source_count(instance).ok_or(Error::NotGapInstance)?;
    let mut edge_encoders = BTreeMap::new();
    for e in &instance.edges {
        let in_bits = if instance.source_role(&e.tail).is_some() {
            1 // a source reads its single bit
        } else {
            instance.in_edges(&e.tail).len() as u32
        };
        edge_encoders.insert(e.id.clone(), BitFunction::Linear(ones_row(in_bits)?));
    }
    let decoders = instance
        .terminals
        .iter()
        .map(|t| Ok((t.clone(), BitFunction::Linear(ones_row(2)?))))
        .collect::<Result<_>>()?;
    Ok(NetworkCode {
        blocklength: 1,
        source_bits: instance
            .sources
            .iter()
            .map(|s| (s.node.clone(), 1))
            .collect(),
        edge_encoders,
        decoders,
        key: BitFunction::Linear(ones_row(r as u32)?),
    })
}

/// The blocklength-2 forwarding code under which every terminal first
/// recovers all source bits and then outputs their parity. Each edge
/// carries two bits; `ubar_i` packs the bits of the other sources into its
/// outgoing pair, which only fits while `r <= 3`.
pub fn two_stage_gap_code(instance: &NetworkInstance) -> Result<NetworkCode> {
    let r = gap_source_count(instance).ok_or(Error::NotGapInstance)?;
    if r > 3 {
        return Err(Error::UnsupportedR);
    }
    let mut edge_encoders = BTreeMap::new();
    for e in &instance.edges {
        let f = if instance.source_role(&e.tail).is_some() {
            // one bit in, repeated on both channel uses
            Gf2Matrix::from_bitstrings(&["1".into(), "1".into()])?
        } else if e.tail.starts_with("ubar") {
            let fan_in = r as u32 - 1;
            let in_bits = 2 * fan_in;
            let mut m = Gf2Matrix::zero(2, in_bits)?;
            // first bit of each incoming duplicated pair
            m.set(0, 0, true);
            if fan_in == 2 {
                m.set(1, 2, true);
            } else {
                m.set(1, 1, true); // r = 2: forward the single pair verbatim
            }
            m
        } else {
            Gf2Matrix::identity(2)?
        };
        edge_encoders.insert(e.id.clone(), BitFunction::Linear(f));
    }
    let decoders = instance
        .terminals
        .iter()
        .map(|t| {
            // input = (b_i, b_i, x, y) where (x, y) carries the other bits
            let row = if r == 3 { "1011" } else { "1010" };
            Ok((
                t.clone(),
                BitFunction::Linear(Gf2Matrix::from_bitstrings(&[row.to_string()])?),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(NetworkCode {
        blocklength: 2,
        source_bits: instance
            .sources
            .iter()
            .map(|s| (s.node.clone(), 1))
            .collect(),
        edge_encoders,
        decoders,
        key: BitFunction::Linear(ones_row(r as u32)?),
    })
}

/// The minimal two-source network: both sources feed one terminal directly,
/// the eavesdropper may sit on either source, and the code shares the
/// two-bit parity as the key.
pub fn fig1b_instance_and_code() -> (NetworkInstance, NetworkCode) {
    let instance = NetworkInstance {
        nodes: vec!["s1".into(), "s2".into(), "d".into()],
        edges: vec![unit_edge("s1", "d"), unit_edge("s2", "d")],
        sources: vec![
            SourceDecl {
                node: "s1".into(),
                role: SourceRole::Both,
            },
            SourceDecl {
                node: "s2".into(),
                role: SourceRole::Both,
            },
        ],
        terminals: vec!["d".into()],
        eavesdrop_sets: vec![
            EavesdropSet {
                edges: Default::default(),
                observed_sources: ["s1".to_string()].into(),
            },
            EavesdropSet {
                edges: Default::default(),
                observed_sources: ["s2".to_string()].into(),
            },
        ],
    };
    let identity1 = || BitFunction::Linear(Gf2Matrix::identity(1).unwrap());
    let parity2 = || BitFunction::Linear(ones_row(2).unwrap());
    let code = NetworkCode {
        blocklength: 1,
        source_bits: [("s1".to_string(), 1), ("s2".to_string(), 1)].into(),
        edge_encoders: [
            ("s1->d".to_string(), identity1()),
            ("s2->d".to_string(), identity1()),
        ]
        .into(),
        decoders: [("d".to_string(), parity2())].into(),
        key: parity2(),
    };
    (instance, code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::evaluate;

    #[test]
    fn gap_two_has_expected_shape() {
        let inst = gap_instance(2, GapMode::EdgeSets).unwrap();
        assert_eq!(inst.nodes.len(), 12);
        assert_eq!(inst.edges.len(), 15);
        assert_eq!(inst.eavesdrop_sets.len(), 6);
        assert!(inst.validate().is_valid());
        let node_all = gap_instance(2, GapMode::NodeAll).unwrap();
        assert_eq!(node_all.eavesdrop_sets.len(), 9);
        assert!(node_all.validate().is_valid());
    }

    #[test]
    fn gap_rejects_zero_alpha() {
        assert!(matches!(gap_instance(0, GapMode::EdgeSets), Err(Error::BadAlpha)));
    }

    #[test]
    fn gap_recognizer_accepts_builders_only() {
        let inst = gap_instance(3, GapMode::NodeAll).unwrap();
        assert_eq!(gap_source_count(&inst), Some(4));
        let (fig, _) = fig1b_instance_and_code();
        assert_eq!(gap_source_count(&fig), None);
        assert!(matches!(sum_code(&fig), Err(Error::NotGapInstance)));
    }

    #[test]
    fn sum_code_hand_evaluation() {
        let inst = gap_instance(2, GapMode::EdgeSets).unwrap();
        let code = sum_code(&inst).unwrap();
        // m = (b1, b2, b3) = (1, 0, 1)
        let trace = evaluate(&inst, &code, 0b101).unwrap();
        assert_eq!(trace.edge_messages["s1->u1"], 1);
        assert_eq!(trace.edge_messages["s2->u2"], 0);
        assert_eq!(trace.edge_messages["s3->u3"], 1);
        assert_eq!(trace.edge_messages["ubar1->d1"], 1); // b2 + b3
        assert_eq!(trace.key_value, 0);
        for t in &inst.terminals {
            assert_eq!(trace.decoder_outputs[t], 0);
        }
        // All-zero assignment stays zero everywhere.
        let zero = evaluate(&inst, &code, 0).unwrap();
        assert!(zero.edge_messages.values().all(|v| *v == 0));
        assert_eq!(zero.key_value, 0);
        // All-ones: key is the parity of three ones.
        assert_eq!(evaluate(&inst, &code, 0b111).unwrap().key_value, 1);
    }

    #[test]
    fn two_stage_code_recovers_all_bits() {
        let inst = gap_instance(2, GapMode::EdgeSets).unwrap();
        let code = two_stage_gap_code(&inst).unwrap();
        for m in 0..8u64 {
            let trace = evaluate(&inst, &code, m).unwrap();
            let parity = (m.count_ones() & 1) as u64;
            assert_eq!(trace.key_value, parity);
            for t in &inst.terminals {
                assert_eq!(trace.decoder_outputs[t], parity);
            }
            // ubar1 carries (b2, b3) verbatim.
            assert_eq!(trace.edge_messages["ubar1->d1"], m & 0b11, "m={m}");
        }
        let big = gap_instance(3, GapMode::EdgeSets).unwrap();
        assert!(matches!(two_stage_gap_code(&big), Err(Error::UnsupportedR)));
    }

    #[test]
    fn fig1b_evaluates_like_a_pad() {
        let (inst, code) = fig1b_instance_and_code();
        assert!(inst.validate().is_valid());
        assert_eq!(
            inst.topological_order().unwrap(),
            vec!["s1".to_string(), "s2".to_string(), "d".to_string()]
        );
        let trace = evaluate(&inst, &code, 0b11).unwrap();
        assert_eq!(trace.edge_messages["s1->d"], 1);
        assert_eq!(trace.edge_messages["s2->d"], 1);
        assert_eq!(trace.key_value, 0);
    }
}
