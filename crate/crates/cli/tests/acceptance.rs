//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//! Every report is written under the cargo tmpdir; the determinism criterion
//! regenerates all of them and compares bytes.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_integer::Integer;
use serde_json::{json, Value};

use circlestat_cli::{exit_code, verify_identities};
use circlestat_core::classify::{
    check_prop34_cover, lemma31_rate_check, lemma38_block_bound, lifted_profile, weak_witness_prop34,
};
use circlestat_core::density::check_lift_laws;
use circlestat_core::membership::{
    default_eps_grid, eps_exceed_density, exceedance_profiles, not_in_t_evidence, sparse_support,
    thm39_sandwich, witness_half_digits, witness_theorem35,
};
use circlestat_core::presets::sequence_preset;
use circlestat_core::radix::{canonical_digits, scaled_frac_laws, LawStatus};
use circlestat_core::seqgen::{
    full_selection, prop32_base, prop32_divergent_set, prop32_s, thm39_variant, Thm39Variant,
};
use circlestat_core::{
    geometric_ladder, lift, rat, DigitExpansion, EnumeratedSequence, Error, IndexSet, RatioSequence, Rational,
};

const ORACLE_DENOMINATOR_MAX: u64 = 200;
const ORACLE_PREFIX_LEN: usize = 8;
const IDENTITY_TRIALS: u64 = 1000;
const SCALING_R_MAX: u64 = 20;
const SCALING_DEN_MAX: i64 = 64;
const LIFT_SET_UNIVERSE: u64 = 6;
const COVER_N: u64 = 1_000_000;
const COVER_DENSITY_MAX: (i64, i64) = (3, 1000);
const PROP32_N_MAX: u64 = 10_000_000;
const PROP32_DENSITY_MAX: (i64, i64) = (1, 100);
const PROP34_N: u64 = 100_000;
const BLOCK_RATIO_MIN: (i64, i64) = (49, 100);
const CHAIN_TERMS: u64 = 10_000;
const PROFILE_TOL: (i64, i64) = (1, 100);
const SUPPORT_NORM_MIN: (i64, i64) = (49, 100);

struct Outcome {
    ok: bool,
    detail: String,
    report: Value,
}

type Check = fn() -> Result<Outcome, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn small(v: &[BigUint]) -> Vec<String> {
    v.iter().map(|t| t.to_string()).collect()
}

fn bases() -> Vec<RatioSequence> {
    vec![
        RatioSequence::binary(),
        RatioSequence::factorial(),
        RatioSequence::double(),
    ]
}

/// Greedy digits against a search over every length-8 digit string: the
/// strings enumerate `T = Σ c_i a_8 / a_i` in increasing order, and the
/// canonical prefix is the unique `T` with `T ≤ x a_8 < T + 1`.
fn c1_canonical_oracle() -> Result<Outcome, String> {
    let mut checked = 0u64;
    let mut per_base = Vec::new();
    for base in bases() {
        let b: Vec<u64> = (1..=ORACLE_PREFIX_LEN as u64)
            .map(|k| base.ratio(k))
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        let a8: u64 = b.iter().product();
        let mut table: Vec<u32> = Vec::with_capacity(a8 as usize);
        let mut digits = [0u64; ORACLE_PREFIX_LEN];
        loop {
            let mut t = 0u64;
            for (i, &c) in digits.iter().enumerate() {
                t = t * b[i] + c;
            }
            table.push(t as u32);
            // odometer, last digit fastest
            let mut i = ORACLE_PREFIX_LEN;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < b[i] {
                    break;
                }
                digits[i] = 0;
            }
            if digits.iter().all(|&c| c == 0) {
                break;
            }
        }
        if table.len() as u64 != a8 || table.windows(2).any(|w| w[0] >= w[1]) {
            return Ok(Outcome {
                ok: false,
                detail: format!("{}: prefixes are not a strict order", base.id()),
                report: Value::Null,
            });
        }
        let mut mismatches = Vec::new();
        for q in 1..=ORACLE_DENOMINATOR_MAX {
            for p in 0..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let target = (u128::from(p) * u128::from(a8)) / u128::from(q);
                // binary search for the last T with T ≤ x a_8, i.e. T ≤ ⌊p a_8 / q⌋
                let idx = table.partition_point(|&t| u128::from(t) <= target);
                let matches: Vec<usize> = [idx.checked_sub(1), Some(idx)]
                    .into_iter()
                    .flatten()
                    .filter(|&i| i < table.len())
                    .filter(|&i| {
                        let t = u128::from(table[i]);
                        // T/a_8 ≤ p/q < (T+1)/a_8
                        t * u128::from(q) <= u128::from(p) * u128::from(a8)
                            && u128::from(p) * u128::from(a8) < (t + 1) * u128::from(q)
                    })
                    .collect();
                if matches.len() != 1 {
                    mismatches.push(format!("{p}/{q}: {} candidates", matches.len()));
                    continue;
                }
                let mut rest = matches[0] as u64;
                let mut oracle = vec![0u64; ORACLE_PREFIX_LEN];
                for i in (0..ORACLE_PREFIX_LEN).rev() {
                    oracle[i] = rest % b[i];
                    rest /= b[i];
                }
                let greedy = canonical_digits(
                    &BigUint::from(p),
                    &BigUint::from(q),
                    &base,
                    ORACLE_PREFIX_LEN as u64,
                )
                .map_err(fail)?;
                if greedy != oracle {
                    mismatches.push(format!("{p}/{q}: greedy {greedy:?} vs oracle {oracle:?}"));
                }
                checked += 1;
            }
        }
        per_base.push(json!({"base": base.id(), "a_8": a8, "mismatches": mismatches}));
    }
    let bad: usize = per_base
        .iter()
        .map(|v| v["mismatches"].as_array().unwrap().len())
        .sum();
    Ok(Outcome {
        ok: bad == 0,
        detail: format!("{checked} (value, base) pairs, {bad} mismatches"),
        report: json!({"pairs": checked, "bases": per_base}),
    })
}

fn c2_identity() -> Result<Outcome, String> {
    let report = verify_identities(7, IDENTITY_TRIALS).map_err(fail)?;
    let bases: BTreeSet<&str> = report.log.iter().map(|t| t.base.as_str()).collect();
    let ok = report.failures == 0 && bases.len() == 3 && report.log.iter().all(|t| t.general && t.two_term);
    Ok(Outcome {
        ok,
        detail: format!(
            "{} trials over {} bases, {} failures",
            report.trials,
            bases.len(),
            report.failures
        ),
        report: serde_json::to_value(&report).map_err(fail)?,
    })
}

/// Law applicability decided from the library and, independently, from
/// integer residues: with `v = p/q`, `r{v} < 1 ⇔ rp < q` and
/// `r‖v‖ < 1/2 ⇔ 2r·min(p, q-p) < q`.
fn c3_scaling_laws() -> Result<Outcome, String> {
    let mut cases = 0u64;
    let mut disagreements = Vec::new();
    let (mut frac_boundary, mut norm_boundary, mut frac_applies, mut norm_applies) = (0u64, 0u64, 0u64, 0u64);
    for q in 1..=SCALING_DEN_MAX {
        for p in 0..q {
            if p.gcd(&q) != 1 {
                continue;
            }
            let v = rat(p, q);
            for r in 1..=SCALING_R_MAX as i64 {
                cases += 1;
                let laws = scaled_frac_laws(r as u64, &v);
                let rp = r * p;
                let frac_rv = rat(rp.rem_euclid(q), q);
                let m = p.min(q - p);
                let res = rp.rem_euclid(q);
                let norm_rv = rat(res.min(q - res), q);
                let frac_expect = if rp < q {
                    frac_applies += 1;
                    if frac_rv == rat(rp, q) {
                        LawStatus::Holds
                    } else {
                        LawStatus::Violated
                    }
                } else {
                    if rp == q {
                        frac_boundary += 1;
                    }
                    LawStatus::NotApplicable
                };
                let norm_expect = if 2 * r * m < q {
                    norm_applies += 1;
                    if norm_rv == rat(r * m, q) {
                        LawStatus::Holds
                    } else {
                        LawStatus::Violated
                    }
                } else {
                    if 2 * r * m == q {
                        norm_boundary += 1;
                    }
                    LawStatus::NotApplicable
                };
                if laws.frac_law != frac_expect
                    || laws.norm_law != norm_expect
                    || laws.frac != frac_rv
                    || laws.norm != norm_rv
                {
                    disagreements.push(format!("r = {r}, v = {p}/{q}"));
                }
                if laws.frac_law == LawStatus::Violated || laws.norm_law == LawStatus::Violated {
                    disagreements.push(format!("law violated at r = {r}, v = {p}/{q}"));
                }
            }
        }
    }
    let ok = disagreements.is_empty() && frac_boundary > 0 && norm_boundary > 0;
    Ok(Outcome {
        ok,
        detail: format!(
            "{cases} cases; applies {frac_applies}/{norm_applies}; boundary non-applicable {frac_boundary}/{norm_boundary}; {} disagreements",
            disagreements.len()
        ),
        report: json!({
            "cases": cases,
            "frac_law_applies": frac_applies,
            "norm_law_applies": norm_applies,
            "frac_boundary": frac_boundary,
            "norm_boundary": norm_boundary,
            "disagreements": disagreements,
        }),
    })
}

fn c4_zeta() -> Result<Outcome, String> {
    let e = sequence_preset("factorial", true).map_err(fail)?;
    let terms = small(&e.enumerate_terms(7).map_err(fail)?);
    let map = e.schedule().index_map(3).map_err(fail)?.as_slice().to_vec();
    let gaps_ok = (1..=3u64).all(|k| map[k as usize] - map[k as usize - 1] == e.base().ratio(k).unwrap() - 1);
    let expected_terms: Vec<String> = [1, 2, 4, 6, 12, 18, 24]
        .iter()
        .map(|t: &u64| t.to_string())
        .collect();
    Ok(Outcome {
        ok: terms == expected_terms && map == [1, 2, 4, 7] && gaps_ok,
        detail: format!("terms {}, index map {:?}", terms.join(","), map),
        report: json!({"terms": terms, "index_map": map}),
    })
}

fn c5_lift_laws() -> Result<Outcome, String> {
    let family: Vec<BTreeSet<u64>> = (0u32..1 << LIFT_SET_UNIVERSE)
        .map(|mask| {
            (1..=LIFT_SET_UNIVERSE)
                .filter(|&i| mask >> (i - 1) & 1 == 1)
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    let mut ok = true;
    for (name, e) in [
        (
            "factorial/full",
            sequence_preset("factorial", true).map_err(fail)?,
        ),
        ("double/full", sequence_preset("double", true).map_err(fail)?),
        (
            "thm39-full-even",
            sequence_preset("thm39-full-even", false).map_err(fail)?,
        ),
    ] {
        let n_map = e.schedule().index_map(LIFT_SET_UNIVERSE + 1).map_err(fail)?;
        let n = n_map.at(LIFT_SET_UNIVERSE) - 1;
        let report = check_lift_laws(&n_map, &family, n).map_err(fail)?;
        // the interval form of L agrees with the block definition on every set
        let mut direct_ok = true;
        for a in &family {
            let lifted = lift(&n_map, &IndexSet::finite("A", a.iter().copied()), n).map_err(fail)?;
            let direct: Vec<u64> = (1..=n)
                .filter(|&j| n_map.block_of(j).is_some_and(|k| a.contains(&k)))
                .collect();
            direct_ok &= lifted.members_up_to(n).map_err(fail)? == direct;
        }
        ok &= report.all_hold() && direct_ok;
        rows.push(json!({"sequence": name, "pairs": report.pairs_checked, "laws": report.all_hold(), "direct": direct_ok}));
    }
    Ok(Outcome {
        ok,
        detail: format!("{} sets × 3 index maps", family.len()),
        report: json!(rows),
    })
}

fn c6_cover_rate() -> Result<Outcome, String> {
    let e = EnumeratedSequence::new(full_selection(&RatioSequence::binary()));
    let r = lemma31_rate_check(&e, &IndexSet::squares(), &[1000, 10_000, 100_000, COVER_N]).map_err(fail)?;
    let last = r.rows.last().unwrap();
    let ok = r.covering_holds
        && r.rows
            .iter()
            .all(|row| row.count_bound_holds && row.lifted <= (r.bound + 1) * row.leaders)
        && last.n == COVER_N
        && last.density <= rat(COVER_DENSITY_MAX.0, COVER_DENSITY_MAX.1);
    Ok(Outcome {
        ok,
        detail: format!(
            "M = {}, |L(A) ∩ [1, 10^6]| = {}, density {}",
            r.bound, last.lifted, last.density
        ),
        report: serde_json::to_value(&r).map_err(fail)?,
    })
}

fn c7_sparse_divergent() -> Result<Outcome, String> {
    let e = EnumeratedSequence::new(full_selection(&prop32_base()));
    // block-aligned: N = l_{j+1} - 1 = m_j + j - 1, the end of L's j-th block
    let mut ladder = Vec::new();
    let mut j = 1u64;
    loop {
        let m_j = e.schedule().n(prop32_s(j)).map_err(fail)?;
        let n = m_j + j - 1;
        if n > PROP32_N_MAX {
            break;
        }
        ladder.push(n);
        j += 1;
    }
    let n_map = e
        .schedule()
        .index_map_reaching(*ladder.last().unwrap())
        .map_err(fail)?;
    let profile = lifted_profile(&n_map, &prop32_divergent_set(), &ladder).map_err(fail)?;
    let decreasing = profile.samples.windows(2).all(|w| w[1] < w[0]);
    let last = profile.last().clone();
    Ok(Outcome {
        ok: decreasing && last < rat(PROP32_DENSITY_MAX.0, PROP32_DENSITY_MAX.1),
        detail: format!(
            "{} block ends up to N = {}, strictly decreasing: {decreasing}, last {}",
            ladder.len(),
            ladder.last().unwrap(),
            circlestat_core::rational::to_decimal_string(&last, 8)
        ),
        report: serde_json::to_value(&profile).map_err(fail)?,
    })
}

/// The recursion redone from `n_k = 1 + k(k+1)/2`.
fn recursion_oracle(steps: usize) -> Vec<u64> {
    let n = |k: i64| -> u64 {
        if k < 0 {
            1
        } else {
            1 + (k * (k + 1) / 2) as u64
        }
    };
    let mut u = vec![1u64];
    let mut s = 0u64;
    while u.len() < steps {
        let j = u.len() as u64;
        let uj = u[j as usize - 1] as i64;
        for t in 0..=j as i64 {
            s += n(uj + 1 - t) - n(uj - t);
        }
        let mut k = uj as u64 + j + 2;
        while n(k as i64) <= j * s {
            k += 1;
        }
        u.push(k);
    }
    u
}

fn c8_support_recursion() -> Result<Outcome, String> {
    let e = sequence_preset("factorial", true).map_err(fail)?;
    let w = weak_witness_prop34(&e, 12, 2000).map_err(fail)?;
    let oracle = recursion_oracle(12);
    let mut covers = Vec::new();
    let mut cover_ok = true;
    for m in 0..=3u64 {
        let c = check_prop34_cover(&e, &w, m, PROP34_N).map_err(fail)?;
        // ⊂*: only blocks of the first m members may escape
        let limit = e.schedule().n(w.u[m as usize]).map_err(fail)?;
        cover_ok &= c.exceptions.iter().all(|&j| j < limit);
        covers.push(json!({"m": m, "exceptions": c.exceptions.len(), "below": limit}));
    }
    let ok = w.u[0] == 1
        && w.u[..3] == oracle[..3]
        && w.u == oracle
        && w.growth_condition_holds(&e).map_err(fail)?
        && w.gaps_hold()
        && cover_ok;
    Ok(Outcome {
        ok,
        detail: format!(
            "u = {:?}, sums {:?}, oracle agrees on {} steps",
            &w.u[..3],
            &w.sums[..2],
            oracle.len()
        ),
        report: json!({"u": w.u, "oracle": oracle, "covers": covers}),
    })
}

fn c9_block_bound() -> Result<Outcome, String> {
    let e = thm39_variant(Thm39Variant::Geometric);
    let (valid, err) = e.schedule().valid_prefix(64);
    let last_three: Vec<u64> = (valid.saturating_sub(2)..=valid).collect();
    let mut rows = Vec::new();
    let mut ok = last_three.len() == 3 && matches!(err, Some(Error::Unsatisfiable { .. }));
    for &k in &last_three {
        let row = lemma38_block_bound(&e, &[k], 1)
            .map_err(fail)?
            .pop()
            .ok_or("no row")?;
        // brute force: |[n_{k-1}, n_k - 1]| / (n_k - 1)
        let n_prev = e.schedule().n(k - 1).map_err(fail)?;
        let n_k = e.schedule().n(k).map_err(fail)?;
        let brute = rat((n_k - n_prev) as i64, (n_k - 1) as i64);
        ok &= row.ratio == brute && row.ratio >= rat(BLOCK_RATIO_MIN.0, BLOCK_RATIO_MIN.1);
        rows.push(serde_json::to_value(&row).map_err(fail)?);
    }
    // jointly the blocks fill 1/2, 3/4, 7/8 of each prefix
    let joint = lemma38_block_bound(&e, &last_three, 3).map_err(fail)?;
    let joint_ratios: Vec<Rational> = joint.iter().map(|r| r.ratio.clone()).collect();
    ok &= joint_ratios == [rat(1, 2), rat(3, 4), rat(7, 8)];
    Ok(Outcome {
        ok,
        detail: format!(
            "valid prefix K = {valid}, blocks {last_three:?} give {} alone, {} together",
            rows.iter()
                .map(|r| format!(
                    "{}/{}",
                    r["ratio"]["num"].as_str().unwrap(),
                    r["ratio"]["den"].as_str().unwrap()
                ))
                .collect::<Vec<_>>()
                .join(", "),
            joint_ratios
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
        report: json!({"singletons": rows, "joint": serde_json::to_value(&joint).map_err(fail)?}),
    })
}

fn c10_chains() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, e) in [
        (
            "factorial/full",
            sequence_preset("factorial", true).map_err(fail)?,
        ),
        (
            "thm39-full-even",
            sequence_preset("thm39-full-even", false).map_err(fail)?,
        ),
    ] {
        let w = weak_witness_prop34(&e, 20, 5000).map_err(fail)?;
        for eps in [rat(1, 4), rat(1, 8)] {
            let r = witness_theorem35(&w.set(), &e, &|_, _| 1, &eps, CHAIN_TERMS).map_err(fail)?;
            let checks: u64 = r.proofs.iter().map(|p| p.checked).sum();
            ok &= r.outside_b > 0 && r.proofs.iter().all(|p| p.violations == 0);
            detail.push(format!(
                "{name} ε={eps}: {} of {} terms outside B exceed ε, {checks} checks",
                r.exceedances, r.outside_b
            ));
            parts.push(serde_json::to_value(&r).map_err(fail)?);
        }
    }
    let e = thm39_variant(Thm39Variant::FullEven);
    let k_max = e
        .schedule()
        .index_map_reaching(CHAIN_TERMS)
        .map_err(fail)?
        .last_k();
    let x = witness_half_digits(&sparse_support(), e.base(), 2 * k_max + 2).map_err(fail)?;
    let s = thm39_sandwich(&x, &e, k_max, None, &rat(1, 100)).map_err(fail)?;
    let checks: u64 = s.proofs.iter().map(|p| p.checked).sum();
    ok &= s.levels_checked == k_max && s.proofs.iter().all(|p| p.violations == 0 && p.checked > 0);
    detail.push(format!("sandwich: {k_max} levels, {checks} checks"));
    parts.push(serde_json::to_value(&s).map_err(fail)?);
    // violations map to exit code 2, everything else to 1
    ok &= exit_code(&Error::violation("probe", 1, "injected")) == 2
        && exit_code(&Error::precondition("probe")) == 1;
    Ok(Outcome {
        ok,
        detail: detail.join("; "),
        report: json!(parts),
    })
}

fn c11_profiles() -> Result<Outcome, String> {
    let b = sequence_preset("binary", false).map_err(fail)?;
    let third =
        DigitExpansion::from_rational(b.base(), &BigUint::from(1u8), &BigUint::from(3u8)).map_err(fail)?;
    let ladder = geometric_ladder(1000, 2, 11).map_err(fail)?;
    let third_profile = eps_exceed_density(&third, &b, &rat(1, 4), &ladder).map_err(fail)?;
    let third_ok = third_profile.samples.iter().all(|s| *s == rat(1, 1));

    let e = sequence_preset("thm39-full-even", false).map_err(fail)?;
    let w = weak_witness_prop34(&e, 30, 5000).map_err(fail)?;
    let n = *ladder.last().unwrap();
    let k_max = e.schedule().index_map_reaching(n).map_err(fail)?.last_k();
    let a = w.set();
    let x = witness_half_digits(&a, e.base(), (2 * k_max + 2).min(a.horizon().unwrap())).map_err(fail)?;
    let profiles = exceedance_profiles(&x, &e, &default_eps_grid(), &ladder).map_err(fail)?;
    let tol = rat(PROFILE_TOL.0, PROFILE_TOL.1);
    let worst = profiles.iter().map(|(_, p)| p.last().clone()).max().unwrap();
    let evidence = not_in_t_evidence(&x, e.base(), k_max).map_err(fail)?;
    let norms_ok = evidence
        .points
        .iter()
        .all(|p| p.norm >= rat(SUPPORT_NORM_MIN.0, SUPPORT_NORM_MIN.1));
    let ok = third_ok && worst <= tol && norms_ok && !evidence.points.is_empty();
    let profile_map: serde_json::Map<String, Value> = profiles
        .iter()
        .map(|(eps, p)| (eps.to_string(), serde_json::to_value(p).unwrap()))
        .collect();
    Ok(Outcome {
        ok,
        detail: format!(
            "1/3: density 1 at all {} points: {third_ok}; witness on {}: worst profile {} at N = {n}, {} support points, min ‖a_(n-1)x‖ = {}",
            ladder.len(),
            e.label(),
            circlestat_core::rational::to_decimal_string(&worst, 6),
            evidence.points.len(),
            circlestat_core::rational::to_decimal_string(&evidence.min_norm, 6),
        ),
        report: json!({
            "third": serde_json::to_value(&third_profile).map_err(fail)?,
            "witness_support": w.u,
            "witness_profiles": profile_map,
            "evidence": serde_json::to_value(&evidence).map_err(fail)?,
        }),
    })
}

const CRITERIA: [(u32, &str, u64, Check); 11] = [
    (
        1,
        "canonical expansion matches brute-force prefixes",
        10,
        c1_canonical_oracle,
    ),
    (2, "telescoping identity, general and t = 1", 30, c2_identity),
    (3, "scaling-law applicability", 5, c3_scaling_laws),
    (4, "full factorial selection prefix and index map", 1, c4_zeta),
    (5, "lifting laws on all subsets of [1,6]", 5, c5_lift_laws),
    (
        6,
        "covering bound and density for squares, b ≡ 2",
        60,
        c6_cover_rate,
    ),
    (
        7,
        "sparse-divergent base: lifted profile decreasing below 1e-2",
        120,
        c7_sparse_divergent,
    ),
    (
        8,
        "support recursion against oracle; cover ⊂* B_m",
        60,
        c8_support_recursion,
    ),
    (
        9,
        "block-end ratios on the geometric valid prefix",
        10,
        c9_block_bound,
    ),
    (10, "witness proof chains, zero violations", 120, c10_chains),
    (11, "membership profiles", 120, c11_profiles),
];

fn report_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("report dir");
    dir
}

fn render(report: &Value) -> String {
    serde_json::to_string_pretty(report).unwrap() + "\n"
}

fn line(pass: bool, id: u32, name: &str, elapsed: Duration, bound: Option<u64>, detail: &str) {
    let bound = bound.map_or("no bound".to_string(), |b| format!("bound {b}s"));
    println!(
        "[{}] {id:>2} {name} ({:.2}s, {bound}): {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_circlestat"))
        .args(args)
        .env("CIRCLESTAT_THREADS", threads)
        .output()
        .map_err(fail)?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {:?}", out.status.code()));
    }
    Ok(out.stdout)
}

fn main() -> ExitCode {
    let dir = report_dir();
    let mut failures = 0;
    let mut first_run = Vec::new();
    for (id, name, bound, check) in CRITERIA {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        match result {
            Ok(outcome) => {
                let pass = outcome.ok && elapsed <= Duration::from_secs(bound);
                failures += usize::from(!pass);
                let body = render(&outcome.report);
                std::fs::write(dir.join(format!("criterion-{id:02}.json")), &body).expect("write report");
                first_run.push((id, body));
                line(pass, id, name, elapsed, Some(bound), &outcome.detail);
            }
            Err(err) => {
                failures += 1;
                first_run.push((id, String::new()));
                line(false, id, name, elapsed, Some(bound), &format!("error: {err}"));
            }
        }
    }

    let start = Instant::now();
    let mut differing = Vec::new();
    for ((id, _, _, check), (_, before)) in CRITERIA.iter().zip(&first_run) {
        match check() {
            Ok(outcome) if render(&outcome.report) == *before => {}
            _ => differing.push(id.to_string()),
        }
    }
    let cli_runs = [
        vec![
            "member",
            "--preset",
            "thm39-full-even",
            "--half-digits-on",
            "witness",
            "--ladder-count",
            "6",
        ],
        vec!["verify-identities", "--trials", "200", "--seed", "11"],
        vec![
            "witness",
            "--preset",
            "thm39-full-even",
            "--kind",
            "sandwich",
            "-n",
            "2000",
            "--format",
            "csv",
        ],
    ];
    for args in &cli_runs {
        match (cli(args, "1"), cli(args, "4"), cli(args, "4")) {
            (Ok(a), Ok(b), Ok(c)) if a == b && b == c => {}
            _ => differing.push(format!("cli {}", args[0])),
        }
    }
    let pass = differing.is_empty();
    failures += usize::from(!pass);
    line(
        pass,
        12,
        "byte-identical reports on rerun",
        start.elapsed(),
        None,
        &if pass {
            format!(
                "11 reports and {} CLI reports (1 and 4 threads) identical",
                cli_runs.len()
            )
        } else {
            format!("differs: {}", differing.join(", "))
        },
    );

    println!("reports in {}", dir.display());
    if failures == 0 {
        println!("acceptance: all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
