//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test -p keycast-core --test acceptance --
//! --nocapture` to see the lines.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use num_traits::Zero;
use rand::Rng;

use keycast_core::analysis::{
    check_key_feasibility, check_secure_feasibility, check_two_stage_feasibility,
    find_two_stage_witness, CheckMode, Coord, TwoStageWitness,
};
use keycast_core::constructions::{
    fig1b_instance_and_code, gap_instance, sum_code, two_stage_gap_code, GapMode,
};
use keycast_core::gf2::Gf2Matrix;
use keycast_core::search::{
    max_feasible_rate, CodeShape, EncoderFamily, SearchOptions, SourceBehavior,
};
use keycast_core::transforms::{
    apply_preencoding, lift_secure_code, linear_key_to_secure, preencoding_permutation,
    reduce_secure_to_key, restrict_key_code_to_secure, zero_redundant_columns,
};
use keycast_core::Limits;

use common::*;

struct Criterion {
    name: &'static str,
    started: Instant,
    deadline: Duration,
}

impl Criterion {
    fn start(name: &'static str, deadline: Duration) -> Self {
        Criterion {
            name,
            started: Instant::now(),
            deadline,
        }
    }

    fn finish(self) {
        let elapsed = self.started.elapsed();
        let ok = elapsed <= self.deadline;
        println!(
            "criterion {}: {} ({:.3}s, limit {:.0}s)",
            self.name,
            if ok { "PASS" } else { "FAIL (overtime)" },
            elapsed.as_secs_f64(),
            self.deadline.as_secs_f64()
        );
        assert!(
            ok,
            "criterion {} exceeded its time limit: {elapsed:?}",
            self.name
        );
    }
}

fn limits() -> Limits {
    Limits::default()
}

fn gap_table_shape() -> CodeShape {
    CodeShape {
        blocklength: 1,
        source_bits: [("s1", 1), ("s2", 1), ("s3", 1)]
            .into_iter()
            .map(|(n, b)| (n.to_string(), b))
            .collect(),
        family: EncoderFamily::AllTables,
        source_behavior: SourceBehavior::Forward,
        max_key_bits: 3,
    }
}

#[test]
fn criterion_01_gap_achievability() {
    let c = Criterion::start("1 (gap achievability, rate 1)", Duration::from_secs(1));
    for mode in [GapMode::EdgeSets, GapMode::NodeAll] {
        let instance = gap_instance(2, mode).unwrap();
        let code = sum_code(&instance).unwrap();
        let report =
            check_key_feasibility(&instance, &code, Rational64::from_integer(1), &limits())
                .unwrap();
        assert!(report.rate_verdict.ok, "{mode:?}: {report:?}");
        assert!(report.decoding.ok, "{mode:?}: {report:?}");
        assert!(report.secrecy.ok, "{mode:?}: {report:?}");
        assert!(report.overall);
    }
    c.finish();
}

#[test]
fn criterion_02_two_stage_achievability() {
    let c = Criterion::start("2 (two-stage rate 1/2)", Duration::from_secs(1));
    let instance = gap_instance(2, GapMode::EdgeSets).unwrap();
    let code = two_stage_gap_code(&instance).unwrap();
    let witness = TwoStageWitness {
        coords: vec![
            Coord::new("s1", 0),
            Coord::new("s2", 0),
            Coord::new("s3", 0),
        ],
    };
    let report = check_two_stage_feasibility(
        &instance,
        &code,
        Rational64::new(1, 2),
        &witness,
        &limits(),
    )
    .unwrap();
    assert!(report.overall, "{report:?}");
    c.finish();
}

#[test]
fn criterion_03_gap_converse_at_blocklength_one() {
    let c = Criterion::start(
        "3 (exhaustive gap search: two-stage 0, direct 1)",
        Duration::from_secs(300),
    );
    let instance = gap_instance(2, GapMode::EdgeSets).unwrap();
    let shape = gap_table_shape();

    let two_stage = max_feasible_rate(
        &instance,
        CheckMode::Key2,
        &shape,
        &limits(),
        &SearchOptions::default(),
    )
    .unwrap();
    assert!(two_stage.exhaustive);
    assert_eq!(two_stage.candidates_examined, 262_144);
    assert_eq!(two_stage.rate, Rational64::zero());
    assert!(two_stage.witness.is_none());

    let direct = max_feasible_rate(
        &instance,
        CheckMode::Key,
        &shape,
        &limits(),
        &SearchOptions::default(),
    )
    .unwrap();
    assert!(direct.exhaustive);
    assert_eq!(direct.rate, Rational64::from_integer(1));
    let witness = direct.witness.expect("rate-1 witness");
    let reverify =
        check_key_feasibility(&instance, &witness, Rational64::from_integer(1), &limits())
            .unwrap();
    assert!(reverify.overall, "witness must re-pass independently");
    c.finish();
}

#[test]
fn criterion_04_secure_capacity_zero() {
    let c = Criterion::start("4 (secure searches return 0)", Duration::from_secs(300));
    let (fig, _) = fig1b_instance_and_code();
    let fig_shape = CodeShape {
        blocklength: 1,
        source_bits: [("s1", 1), ("s2", 1)]
            .into_iter()
            .map(|(n, b)| (n.to_string(), b))
            .collect(),
        family: EncoderFamily::AllTables,
        source_behavior: SourceBehavior::Free,
        max_key_bits: 2,
    };
    let fig_result = max_feasible_rate(
        &fig,
        CheckMode::Sec,
        &fig_shape,
        &limits(),
        &SearchOptions::default(),
    )
    .unwrap();
    assert!(fig_result.exhaustive);
    assert_eq!(fig_result.rate, Rational64::zero());

    let gap = gap_instance(2, GapMode::NodeAll).unwrap();
    let gap_result = max_feasible_rate(
        &gap,
        CheckMode::Sec,
        &gap_table_shape(),
        &limits(),
        &SearchOptions::default(),
    )
    .unwrap();
    assert!(gap_result.exhaustive);
    assert_eq!(gap_result.rate, Rational64::zero());
    c.finish();
}

#[test]
fn criterion_05_preencoding_pipeline() {
    let c = Criterion::start("5 (pre-encoding pipeline)", Duration::from_secs(300));
    let mut r = rng(501);
    for trial in 0..200 {
        let ell = r.gen_range(1..=10u32);
        let key_bits = r.gen_range(1..=ell);
        let key_map = random_uniform_key_map(&mut r, ell, key_bits);
        let perm = preencoding_permutation(&key_map, key_bits, &limits()).unwrap();
        let mut seen = vec![false; 1 << ell];
        for m in 0..1u64 << ell {
            let image = perm.apply(m);
            assert!(!seen[image as usize], "trial {trial}: not a bijection");
            seen[image as usize] = true;
            assert_eq!(
                key_map.eval(image),
                m >> (ell - key_bits),
                "trial {trial}: key of permuted input must be the prefix"
            );
        }
    }

    let mut r = rng(502);
    for trial in 0..50 {
        let (instance, code, rate) = random_single_source_setup(&mut r);
        let before = check_key_feasibility(&instance, &code, rate, &limits()).unwrap();
        let perm =
            preencoding_permutation(&code.key, code.key.out_bits(), &limits()).unwrap();
        let recoded = apply_preencoding(&instance, &code, &perm, &limits()).unwrap();
        let after = check_key_feasibility(&instance, &recoded, rate, &limits()).unwrap();
        assert_eq!(
            before.decoding.ok, after.decoding.ok,
            "trial {trial}: decoding verdict changed"
        );
        assert_eq!(
            before.secrecy.ok, after.secrecy.ok,
            "trial {trial}: secrecy verdict changed"
        );
        assert_eq!(before.rate_verdict.ok, after.rate_verdict.ok, "trial {trial}");
    }
    c.finish();
}

#[test]
fn criterion_06_column_zeroing_pipeline() {
    let c = Criterion::start("6 (column-zeroing pipeline)", Duration::from_secs(300));
    let mut r = rng(601);
    for trial in 0..500 {
        let rows = r.gen_range(1..=12u32);
        let cols = r.gen_range(1..=20u32);
        let matrix = random_matrix(&mut r, rows, cols);
        let oracle_rank = rank_by_row_span(&matrix);
        assert_eq!(matrix.rank(), oracle_rank, "trial {trial}: rank vs span oracle");
        let (zeroed, kept) = zero_redundant_columns(&matrix);
        assert_eq!(zeroed.rank(), oracle_rank, "trial {trial}: rank preserved");
        assert_eq!(
            zeroed.nonzero_columns().len() as u32,
            oracle_rank,
            "trial {trial}: nonzero columns equal rank"
        );
        assert_eq!(kept.len() as u32, oracle_rank, "trial {trial}");
    }

    let mut r = rng(602);
    for trial in 0..50 {
        let (instance, code, rate) = random_linear_key_setup(&mut r);
        let (secure, coords) = linear_key_to_secure(&instance, &code).unwrap();
        let report =
            check_secure_feasibility(&instance, &secure, rate, &coords, &limits()).unwrap();
        assert!(report.overall, "trial {trial}: {report:?}");
    }
    c.finish();
}

#[test]
fn criterion_07_reduction_round_trip() {
    let c = Criterion::start("7 (reduction round trip)", Duration::from_secs(300));
    let mut r = rng(701);
    for trial in 0..50 {
        let (instance, code, coords, rate) = random_secure_setup(&mut r);
        let (reduced, reduction) = reduce_secure_to_key(&instance, rate).unwrap();
        let lifted = lift_secure_code(&reduced, &reduction, &code, &coords).unwrap();
        let key_report = check_key_feasibility(&reduced, &lifted, rate, &limits()).unwrap();
        assert!(key_report.overall, "trial {trial}: lift failed: {key_report:?}");

        let (restricted, back_coords) =
            restrict_key_code_to_secure(&reduced, &reduction, &lifted, &limits()).unwrap();
        let sec_report =
            check_secure_feasibility(&instance, &restricted, rate, &back_coords, &limits())
                .unwrap();
        assert!(
            sec_report.overall,
            "trial {trial}: restrict failed: {sec_report:?}"
        );
    }
    c.finish();
}

#[test]
fn criterion_08_cut_bounds() {
    let c = Criterion::start("8 (single-edge cut bounds)", Duration::from_secs(300));
    for alpha in 2..=8u32 {
        let instance = gap_instance(alpha, GapMode::EdgeSets).unwrap();
        let r = alpha as usize + 1;
        for i in 1..=r {
            let sources: BTreeSet<String> = (1..=r)
                .filter(|j| *j != i)
                .map(|j| format!("s{j}"))
                .collect();
            let cut = instance.min_cut(&sources, &format!("d{i}")).unwrap();
            assert_eq!(
                cut,
                Rational64::from_integer(1),
                "alpha={alpha}, terminal d{i}"
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_09_analysis_engine() {
    let c = Criterion::start("9 (analysis engine)", Duration::from_secs(300));
    let mut r = rng(901);
    let tolerance = 1e-9;
    for trial in 0..1000 {
        let table = random_count_table(&mut r);
        let n_vars = table.variables().len();
        let split = r.gen_range(1..n_vars);
        let first: Vec<usize> = (0..split).collect();
        let second: Vec<usize> = (split..n_vars).collect();

        let joint = table.entropy_bits(&(0..n_vars).collect::<Vec<_>>());
        let chain =
            table.entropy_bits(&first) + table.conditional_entropy_bits(&second, &first);
        assert!(
            (joint - chain).abs() < tolerance,
            "trial {trial}: chain rule off by {}",
            (joint - chain).abs()
        );

        let mi = table.mutual_information_bits(&first, &second);
        assert_eq!(
            table.is_independent(&first, &second),
            mi.abs() < tolerance,
            "trial {trial}: independence vs mutual information {mi}"
        );
        let ce = table.conditional_entropy_bits(&second, &first);
        assert_eq!(
            table.is_determined(&first, &second),
            ce < tolerance,
            "trial {trial}: determinism vs conditional entropy {ce}"
        );
        let width = table.variables()[0].1;
        let h = table.entropy_bits(&[0]);
        assert_eq!(
            table.is_uniform(0),
            (f64::from(width) - h).abs() < tolerance,
            "trial {trial}: uniformity vs entropy {h} at width {width}"
        );
    }
    c.finish();
}

#[test]
fn criterion_10_feasibility_containments() {
    let c = Criterion::start("10 (feasibility containments)", Duration::from_secs(300));
    // Secure-multicast passes imply plain key passes, same code and rate.
    let mut r = rng(1001);
    for trial in 0..50 {
        let (instance, code, coords, rate) = random_secure_setup(&mut r);
        let sec = check_secure_feasibility(&instance, &code, rate, &coords, &limits()).unwrap();
        assert!(sec.overall);
        let key = check_key_feasibility(&instance, &code, rate, &limits()).unwrap();
        assert!(key.overall, "trial {trial}: secure pass must imply key pass");
    }

    // Two-stage passes imply plain key passes, same code and rate.
    for alpha in [1u32, 2] {
        for mode in [GapMode::EdgeSets, GapMode::NodeAll] {
            let instance = gap_instance(alpha, mode).unwrap();
            let code = two_stage_gap_code(&instance).unwrap();
            let rate = Rational64::new(1, 2);
            let witness = find_two_stage_witness(&instance, &code, rate, &limits())
                .unwrap()
                .expect("two-stage witness exists");
            let two = check_two_stage_feasibility(&instance, &code, rate, &witness, &limits())
                .unwrap();
            assert!(two.overall);
            let key = check_key_feasibility(&instance, &code, rate, &limits()).unwrap();
            assert!(key.overall, "two-stage pass must imply key pass");
        }
    }

    // Column zeroing preserves the containment chain end to end.
    let mut r = rng(1002);
    for _ in 0..20 {
        let (instance, code, rate) = random_linear_key_setup(&mut r);
        let (secure, coords) = linear_key_to_secure(&instance, &code).unwrap();
        let sec = check_secure_feasibility(&instance, &secure, rate, &coords, &limits()).unwrap();
        let key = check_key_feasibility(&instance, &secure, rate, &limits()).unwrap();
        assert!(sec.overall && key.overall);
    }
    c.finish();
}

// Shared-suite helper: keep the zero-matrix edge case exercised where the
// reviewer expects it.
#[test]
fn zero_width_keys_round_trip_through_reports() {
    let (mut instance, mut code) = fig1b_instance_and_code();
    instance.eavesdrop_sets.clear();
    code.key = keycast_core::code::BitFunction::Linear(Gf2Matrix::zero(0, 2).unwrap());
    code.decoders.insert(
        "d".into(),
        keycast_core::code::BitFunction::Linear(Gf2Matrix::zero(0, 2).unwrap()),
    );
    let report =
        check_key_feasibility(&instance, &code, Rational64::zero(), &limits()).unwrap();
    assert!(report.overall);
    let json = keycast_core::io::report_to_json(&report, None);
    let back = keycast_core::io::report_from_json(&json).unwrap();
    assert_eq!(back.overall, report.overall);
}
