use circlestat_core::classify::{check_prop34_cover, weak_witness_prop34};
use circlestat_core::membership::{
    default_eps_grid, not_in_t_evidence, verdict, witness_half_digits, witness_theorem35, MembershipVerdict,
};
use circlestat_core::presets::{parse_custom_schedule, sequence_preset};
use circlestat_core::radix::{canonical_digits, eval_prefix};
use circlestat_core::*;
use num_bigint::BigUint;

#[test]
fn weak_witness_feeds_both_constructions() {
    let e = sequence_preset("factorial", true).unwrap();
    let w = weak_witness_prop34(&e, 12, 400).unwrap();
    assert_eq!(&w.u[..3], &[1, 4, 8]);
    for m in 1..=3 {
        // only the first m members of A - m can escape B_m
        let limit = e.schedule().n(w.u[m as usize]).unwrap();
        let c = check_prop34_cover(&e, &w, m, 5000).unwrap();
        assert!(c.exceptions.iter().all(|&j| j < limit), "{:?}", c.exceptions);
    }
    let r = witness_theorem35(&w.set(), &e, &|_, _| 1, &rat(1, 20), 5000).unwrap();
    assert!(r.proofs.iter().all(|p| p.violations == 0));
    let x = witness_half_digits(&w.set(), e.base(), 60).unwrap();
    let evidence = not_in_t_evidence(&x, e.base(), 60).unwrap();
    assert_eq!(evidence.branch, "b-divergent");
}

#[test]
fn rational_elements_through_the_pipeline() {
    let b = sequence_preset("binary", false).unwrap();
    let third = DigitExpansion::from_rational(b.base(), &BigUint::from(1u8), &BigUint::from(3u8)).unwrap();
    let r = verdict(&third, &b, &default_eps_grid(), &[64, 128, 256], &rat(1, 100)).unwrap();
    assert_eq!(r.verdict, MembershipVerdict::NotInTsEvidence);
    let json = serde_json::to_string(&r).unwrap();
    let back: circlestat_core::membership::MembershipReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

#[test]
fn custom_schedule_digits_agree_with_value() {
    let e = parse_custom_schedule(r#"{"b": [3, 5, 7, 2, 4, 6, 8, 10], "R": {"3": [1, 2, 6]}}"#).unwrap();
    let (p, q) = (BigUint::from(17u8), BigUint::from(29u8));
    let digits = canonical_digits(&p, &q, e.base(), 8).unwrap();
    let x = DigitExpansion::from_digits(
        e.base(),
        digits.iter().enumerate().map(|(i, &c)| (i as u64 + 1, c)),
    )
    .unwrap();
    let approx = eval_prefix(&x, 8).unwrap();
    let gap = rat(17, 29) - approx;
    assert!(gap >= rat(0, 1) && gap < rat(1, 3 * 5 * 7 * 2 * 4 * 6 * 8 * 10));
}
