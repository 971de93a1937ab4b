use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sssplus_core::oracle::exact_fdr;
use sssplus_core::trial::TrialRunner;
use sssplus_core::{
    build_spec, canonical_t, derive_ab, reject_threshold, CompetitionSequence, ProcedureParams, Rational, Truth, Win,
};

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d).unwrap()
}

#[test]
fn sweep_parameters_reduce_to_small_ratios() {
    assert_eq!(derive_ab(r(1, 20), r(1, 2)).unwrap(), (1, 20));
    assert_eq!(derive_ab(r(2, 7), r(2, 5)).unwrap(), (3, 7));
    assert_eq!(derive_ab(r(1, 10), r(1, 2)).unwrap(), (1, 10));
}

#[test]
fn construction_layout_for_alpha_tenth() {
    let spec = build_spec(1, 10, 33).unwrap();
    assert_eq!(spec.true_null_positions(), vec![9, 10, 11, 20, 21, 22, 31, 32, 33]);
    let spec = build_spec(3, 7, 20).unwrap();
    assert_eq!(spec.true_null_count(), 14);
    assert_eq!(spec.cycle_null_offsets, vec![2, 3, 5, 6, 8, 9, 10]);
}

#[test]
fn all_decoy_sequence_rejects_nothing() {
    let p = ProcedureParams::new(r(1, 10), r(1, 2), Rational::ONE).unwrap();
    let seq = CompetitionSequence::new(vec![Win::Decoy; 12], vec![Truth::TrueNull; 12]).unwrap();
    let out = reject_threshold(&seq, &p);
    assert_eq!((out.k, out.discoveries), (0, 0));
}

#[test]
fn canonical_t_rounds_up_to_grid() {
    assert_eq!(canonical_t(r(19, 20), 10), Rational::ONE);
    assert_eq!(canonical_t(r(9, 10), 10), r(9, 10));
    assert_eq!(canonical_t(r(17, 20), 10), r(9, 10));
}

#[test]
fn exact_fdr_exceeds_alpha_below_t_one_and_not_at_t_one() {
    let below = exact_fdr(1, 10, 1, 33, r(1, 2)).unwrap();
    assert!(below.fdr > Rational::ZERO);
    assert_eq!(below.probability_mass, Rational::ONE);
    let at_one = exact_fdr(1, 10, 0, 33, r(1, 2)).unwrap();
    assert!(at_one.fdr <= r(1, 10));
}

#[test]
fn runner_is_reproducible() {
    let spec = build_spec(1, 20, 105).unwrap();
    let p = ProcedureParams::new(r(1, 20), r(1, 2), r(19, 20)).unwrap();
    let mut a = TrialRunner::new(&spec, &p).unwrap();
    let mut b = a.clone();
    for trial in 0..50 {
        assert_eq!(a.run(9, trial), b.run(9, trial));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let out = a.run_with(&mut rng);
    assert!(out.k <= 105 && out.false_discoveries <= out.discoveries);
}
