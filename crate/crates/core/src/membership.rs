//! Exceedance profiles `{j ≤ N : ‖e_j x‖ ≥ ε}`, evidence-graded membership
//! verdicts for `t_{(e_n)}` and `t^s_{(e_n)}`, and the witness elements
//! built in the proofs, with every inequality of their chains checked
//! exactly.
//!
//! `{a_k x}` is never formed from `a_k` times a rational. With `x = P/Q` in
//! lowest terms, `ρ_k = a_k P mod Q` satisfies `ρ_k = ρ_{k-1} b_k mod Q` and
//! `{a_k x} = ρ_k / Q`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{
    almost_equal, check_ladder, classify_b, lift, translate, BClass, DensityProfile, Extent, IndexSet,
};
use crate::error::{Error, Result};
use crate::radix::{DigitExpansion, DigitRecord, RatioSequence};
use crate::rational::{self, norm_int, rat, rat_big, Rational};
use crate::seqgen::EnumeratedSequence;

/// `{1/4, 1/8, 1/16, 1/32}`.
pub fn default_eps_grid() -> Vec<Rational> {
    vec![rat(1, 4), rat(1, 8), rat(1, 16), rat(1, 32)]
}

fn check_eps(eps: &Rational) -> Result<()> {
    if !eps.is_positive() || *eps > rat(1, 2) {
        return Err(Error::InvalidEpsilon(eps.to_string()));
    }
    Ok(())
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

/// `ρ_0, ..., ρ_K` with `{a_k x} = ρ_k / Q`, and `Q`.
pub fn frac_residues(
    x: &DigitExpansion,
    base: &RatioSequence,
    k_max: u64,
) -> Result<(Vec<BigUint>, BigUint)> {
    let (p, q) = x.value_parts()?;
    let mut rho = Vec::with_capacity(k_max as usize + 1);
    rho.push(&p % &q);
    for k in 1..=k_max {
        let next = (rho.last().unwrap() * big(base.ratio(k)?)) % &q;
        rho.push(next);
    }
    Ok((rho, q))
}

/// For every term `j ≤ N`: how many thresholds of the ascending grid
/// satisfy `‖e_j x‖ ≥ ε`.
fn exceedance_levels(
    x: &DigitExpansion,
    e: &EnumeratedSequence,
    eps_asc: &[Rational],
    n: u64,
) -> Result<Vec<u8>> {
    let n_map = e.schedule().index_map_reaching(n)?;
    let k_max = n_map.last_k();
    let (rho, q) = frac_residues(x, e.base(), k_max)?;
    // ‖v/Q‖ ≥ a/b  ⇔  b·min(v, Q - v) ≥ a·Q
    let thresholds: Vec<(BigUint, BigUint)> = eps_asc
        .iter()
        .map(|eps| {
            let a = eps.numer().to_biguint().unwrap();
            let b = eps.denom().to_biguint().unwrap();
            (b, a * &q)
        })
        .collect();
    let mut blocks = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let start = n_map.at(k - 1);
        let take = (n_map.at(k).min(n + 1) - start) as usize;
        let mut r = e.schedule().block(k)?;
        r.truncate(take);
        blocks.push((k, r));
    }
    let levels: Vec<Vec<u8>> = blocks
        .par_iter()
        .map(|(k, rs)| {
            let base_res = &rho[*k as usize - 1];
            rs.iter()
                .map(|&r| {
                    let nrm = rational::residue_norm(&((base_res * big(r)) % &q), &q);
                    thresholds.iter().take_while(|(b, aq)| &(&nrm * b) >= aq).count() as u8
                })
                .collect()
        })
        .collect();
    Ok(levels.concat())
}

fn profile_from_levels(levels: &[u8], threshold_rank: u8, ladder: &[u64]) -> Result<DensityProfile> {
    let mut counts = Vec::with_capacity(ladder.len());
    let mut count = 0u64;
    let mut j = 0usize;
    for &n in ladder {
        while (j as u64) < n {
            if levels[j] > threshold_rank {
                count += 1;
            }
            j += 1;
        }
        counts.push(count);
    }
    DensityProfile::from_counts(ladder.to_vec(), counts)
}

fn sorted_grid(eps: &[Rational]) -> Result<Vec<Rational>> {
    if eps.is_empty() {
        return Err(Error::precondition("empty ε-grid"));
    }
    let mut grid = eps.to_vec();
    for e in &grid {
        check_eps(e)?;
    }
    grid.sort();
    grid.dedup();
    Ok(grid)
}

/// Exceedance profiles for each `ε` in the grid, keyed by `ε`.
pub fn exceedance_profiles(
    x: &DigitExpansion,
    e: &EnumeratedSequence,
    eps: &[Rational],
    ladder: &[u64],
) -> Result<Vec<(Rational, DensityProfile)>> {
    check_ladder(ladder)?;
    let grid = sorted_grid(eps)?;
    let levels = exceedance_levels(x, e, &grid, *ladder.last().unwrap())?;
    grid.iter()
        .enumerate()
        .map(|(i, eps)| Ok((eps.clone(), profile_from_levels(&levels, i as u8, ladder)?)))
        .collect()
}

/// The profile of `{j ≤ N : ‖e_j x‖ ≥ ε}` along `ladder`.
pub fn eps_exceed_density(
    x: &DigitExpansion,
    e: &EnumeratedSequence,
    eps: &Rational,
    ladder: &[u64],
) -> Result<DensityProfile> {
    Ok(exceedance_profiles(x, e, std::slice::from_ref(eps), ladder)?
        .pop()
        .unwrap()
        .1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipVerdict {
    InTEvidence,
    InTsNotTEvidence,
    NotInTsEvidence,
    Inconclusive,
}

/// An element as it appears in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementDescriptor {
    Digits(DigitRecord),
    Rational {
        #[serde(with = "rational::exact")]
        value: Rational,
    },
}

impl ElementDescriptor {
    pub fn of(x: &DigitExpansion) -> Result<Self> {
        Ok(match x.finite_digits() {
            Some(_) => ElementDescriptor::Digits(x.to_record(None)?),
            None => ElementDescriptor::Rational { value: x.value()? },
        })
    }
}

/// One exact check from a proof chain, summarized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofEntry {
    pub check: String,
    pub checked: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub element: ElementDescriptor,
    pub sequence: String,
    #[serde(with = "rational::exact")]
    pub tol: Rational,
    pub profiles: BTreeMap<String, DensityProfile>,
    /// Terms `j ∈ (N/2, N]` with `‖e_j x‖ ≥ min ε`.
    pub tail_exceedances: u64,
    pub verdict: MembershipVerdict,
    pub proofs: Vec<ProofEntry>,
}

/// Grades the evidence for membership at truncation `N = ladder.last()`:
///
/// 1. `in_t` when no term of the tail window `(N/2, N]` reaches `min ε`;
/// 2. `not_in_ts` when some profile stays above `tol` over the trailing half;
/// 3. `in_ts_not_t` when every profile ends at or below `tol` while
///    exceedances still occur in the tail window;
/// 4. `inconclusive` otherwise.
pub fn verdict(
    x: &DigitExpansion,
    e: &EnumeratedSequence,
    eps: &[Rational],
    ladder: &[u64],
    tol: &Rational,
) -> Result<MembershipReport> {
    check_ladder(ladder)?;
    if !tol.is_positive() {
        return Err(Error::precondition("tolerance must be positive"));
    }
    let grid = sorted_grid(eps)?;
    let n = *ladder.last().unwrap();
    let levels = exceedance_levels(x, e, &grid, n)?;
    let profiles: Vec<(Rational, DensityProfile)> = grid
        .iter()
        .enumerate()
        .map(|(i, eps)| Ok((eps.clone(), profile_from_levels(&levels, i as u8, ladder)?)))
        .collect::<Result<_>>()?;
    let tail_exceedances = levels[(n / 2) as usize..].iter().filter(|&&l| l > 0).count() as u64;
    let mut monotone = ProofEntry {
        check: "smaller ε dominates pointwise".into(),
        checked: 0,
        violations: 0,
    };
    for w in profiles.windows(2) {
        for (lo, hi) in w[0].1.counts.iter().zip(&w[1].1.counts) {
            monotone.checked += 1;
            if lo < hi {
                monotone.violations += 1;
            }
        }
    }
    if monotone.violations > 0 {
        return Err(Error::violation(
            "ε-monotonicity",
            0,
            "a larger ε has more exceedances",
        ));
    }
    let verdict = if tail_exceedances == 0 {
        MembershipVerdict::InTEvidence
    } else if profiles.iter().any(|(_, p)| p.liminf_est > *tol) {
        MembershipVerdict::NotInTsEvidence
    } else if profiles.iter().all(|(_, p)| p.last() <= tol) {
        MembershipVerdict::InTsNotTEvidence
    } else {
        MembershipVerdict::Inconclusive
    };
    Ok(MembershipReport {
        element: ElementDescriptor::of(x)?,
        sequence: e.label().to_owned(),
        tol: tol.clone(),
        profiles: profiles
            .into_iter()
            .map(|(eps, p)| (eps.to_string(), p))
            .collect(),
        tail_exceedances,
        verdict,
        proofs: vec![monotone],
    })
}

/// `x + y` in `𝕋`, re-expanded canonically.
pub fn add(x: &DigitExpansion, y: &DigitExpansion) -> Result<DigitExpansion> {
    if x.base() != y.base() {
        return Err(Error::BaseMismatch {
            left: x.base().id().to_owned(),
            right: y.base().id().to_owned(),
        });
    }
    let s = rational::frac(&(x.value()? + y.value()?));
    let (p, q) = (s.numer().to_biguint().unwrap(), s.denom().to_biguint().unwrap());
    DigitExpansion::from_rational(x.base(), &p, &q)
}

/// `c_n = ⌊b_n / 2⌋` on `A ∩ [1, N]`, zero elsewhere.
pub fn witness_half_digits(a: &IndexSet, base: &RatioSequence, n: u64) -> Result<DigitExpansion> {
    let digits = a
        .iter_up_to(n)?
        .map(|k| Ok((k, base.ratio(k)? / 2)))
        .collect::<Result<Vec<_>>>()?;
    DigitExpansion::from_digits(base, digits)
}

/// `A = {l_k}` with `l_1 = 1` and `l_{k+1} - l_k = k`.
pub fn sparse_support() -> IndexSet {
    IndexSet::generated("{l_k}", |k| 1 + k * (k - 1) / 2)
}

/// `a_{from-1}/a_to = 1 / (b_from ··· b_to)`, as a rational.
fn inv_product(base: &RatioSequence, from: u64, to: u64) -> Result<Rational> {
    Ok(rat_big(&BigUint::one(), &base.ratio_product(from, to)?))
}

fn residue_rat(rho: &BigUint, q: &BigUint) -> Rational {
    rat_big(rho, q)
}

fn record(
    entries: &mut BTreeMap<&'static str, ProofEntry>,
    check: &'static str,
    ok: bool,
    index: u64,
    detail: impl FnOnce() -> String,
) -> Result<()> {
    let entry = entries.entry(check).or_insert_with(|| ProofEntry {
        check: check.to_owned(),
        checked: 0,
        violations: 0,
    });
    entry.checked += 1;
    if ok {
        Ok(())
    } else {
        Err(Error::violation(check, index, detail()))
    }
}

/// The support-subset witness for weakly `L`-invariant sequences, with its
/// chain checked at every term outside the exceptional set `B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thm35Report {
    #[serde(with = "rational::exact")]
    pub eps: Rational,
    pub m: u64,
    pub truncation: u64,
    pub element: DigitRecord,
    /// `A` is finite with fewer than `m` members: `B` runs to the last
    /// support point and the chain holds trivially past it.
    pub vacuous: bool,
    /// `|B ∩ [1, N]|`.
    pub b_count: u64,
    #[serde(with = "rational::exact")]
    pub b_density: Rational,
    /// `B Δ ∪_{i<m} L(A - i)` on `[1, N]`.
    pub b_exceptions: Vec<u64>,
    /// First term outside `B`; the chain holds from there on.
    pub j_eps: Option<u64>,
    /// Terms of `[1, N] ∖ B`, each with the full chain checked.
    pub outside_b: u64,
    /// Terms with `‖e_j x‖ ≥ ε`; all of them lie in `B`.
    pub exceedances: u64,
    pub proofs: Vec<ProofEntry>,
}

/// Smallest `m` with `1 / 2^{m-2} < ε`.
pub fn thm35_m(eps: &Rational) -> Result<u64> {
    if !eps.is_positive() || *eps >= rat(1, 2) {
        return Err(Error::InvalidEpsilon(format!(
            "{eps} (the chain needs 0 < ε < 1/2)"
        )));
    }
    let mut m = 2u64;
    let mut bound = Rational::one();
    while bound >= *eps {
        m += 1;
        bound /= Rational::from_integer(2.into());
    }
    Ok(m)
}

/// Builds `x` with `supp(x) ⊆ A` (digits from `digit_rule(n, b_n)`), forms
/// `B = [1, n_{u_m-m+1} - 1] ∪ ∪_{j ≥ m} [n_{u_j-m+1}, n_{u_j+1} - 1]`
/// with `A = {u_j + 1}`, and checks for every `j ∈ [1, N] ∖ B`, writing
/// `e_j = r a_k`:
///
/// `{e_j x} = r{a_k x} ≤ r a_k Σ_{i≥k+m} c_i/a_i ≤ r a_k/a_{k+m-1}
///  ≤ (r/b_{k+1})(a_{k+1}/a_{k+m-1}) ≤ 1/2^{m-2} < ε`.
pub fn witness_theorem35(
    a: &IndexSet,
    e: &EnumeratedSequence,
    digit_rule: &dyn Fn(u64, u64) -> u64,
    eps: &Rational,
    n: u64,
) -> Result<Thm35Report> {
    let m = thm35_m(eps)?;
    let base = e.base();
    let n_map = e.schedule().index_map_reaching(n)?;
    let k_last = n_map.last_k();
    let h = k_last + m;
    let members = a.members_up_to(h)?;
    let mut digits = Vec::new();
    for &s in &members {
        let b = base.ratio(s)?;
        let c = digit_rule(s, b);
        if c == 0 || c >= b {
            return Err(Error::precondition(format!(
                "digit rule gives c_{s} = {c}, outside [1, {}]",
                b - 1
            )));
        }
        digits.push((s, c));
    }
    let x = DigitExpansion::from_digits(base, digits.iter().copied())?;
    let support: BTreeSet<u64> = members.iter().copied().collect();
    let u: Vec<u64> = members.iter().map(|s| s - 1).collect();
    // B's head needs u_m even when it lies past the levels in play
    let u_m = if u.len() as u64 >= m {
        Some(u[m as usize - 1])
    } else if a.extent() == Extent::Finite {
        None
    } else {
        let horizon = a.horizon().unwrap_or(u64::MAX);
        let found: Vec<u64> = a.iter_up_to(horizon)?.take(m as usize).collect();
        if (found.len() as u64) < m {
            return Err(Error::HorizonExceeded {
                label: format!("{} (member #{m})", a.label()),
                needed: horizon.saturating_add(1),
                horizon,
            });
        }
        Some(found[m as usize - 1] - 1)
    };
    let vacuous = u_m.is_none();

    // B as block spans [lo_k, hi_k] of the map, clipped to blocks that exist.
    let span = |lo_k: u64, hi_k: u64| -> Option<(u64, u64)> {
        let lo = n_map.get(lo_k)?;
        let hi = n_map.get(hi_k).map(|v| v - 1).unwrap_or(n_map.reach() - 1);
        (lo <= hi).then_some((lo, hi.min(n)))
    };
    let mut spans = Vec::new();
    let head_k = match u_m {
        Some(um) => um - m + 1,
        None => u.last().map(|&ul| ul + 1).unwrap_or(0),
    };
    if head_k >= 1 {
        spans.push((1, n_map.get(head_k).map(|v| v - 1).unwrap_or(n).min(n)));
    }
    if u.len() as u64 >= m {
        for &uj in &u[m as usize - 1..] {
            if let Some(s) = span(uj - m + 1, uj + 1) {
                spans.push(s);
            }
        }
    }
    let mut merged: Vec<(u64, u64)> = Vec::new();
    for (lo, hi) in spans {
        if lo > n || hi < lo {
            continue;
        }
        match merged.last_mut() {
            Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let b_set = IndexSet::intervals("B", merged, crate::density::Extent::Infinite, Some(n))?;

    let b_exceptions = if vacuous {
        Vec::new()
    } else {
        let lifts: BTreeSet<u64> = (0..m)
            .map(|i| lift(&n_map, &translate(a, i), n)?.members_up_to(n))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let union = IndexSet::finite("∪ L(A-i)", lifts);
        almost_equal(&b_set, &union, n)?
    };

    // {a_k x} by residues; W_k = Σ_{i>k} c_i a_k / a_i by the digit recursion
    // W_k = (c_{k+1} + W_{k+1}) / b_{k+1}.
    let (rho, q) = frac_residues(&x, base, h)?;
    let mut w = vec![Rational::zero(); h as usize + 1];
    for k in (0..h).rev() {
        let c = digits
            .iter()
            .find(|(s, _)| *s == k + 1)
            .map(|(_, c)| *c)
            .unwrap_or(0);
        w[k as usize] = (Rational::from_integer(BigInt::from(c)) + &w[k as usize + 1])
            / Rational::from_integer(BigInt::from(base.ratio(k + 1)?));
    }
    let (p, _) = x.value_parts()?;
    let bound_m = rat_big(&BigUint::one(), &(BigUint::one() << (m - 2)));
    let mut entries = BTreeMap::new();
    record(&mut entries, "1/2^(m-2) < ε", bound_m < *eps, 0, || {
        format!("m = {m}")
    })?;

    let mut j_eps = None;
    let mut outside_b = 0u64;
    let mut exceedances = 0u64;
    for kk in 1..=k_last {
        let k = kk - 1; // e_j = r a_k in block kk
        let lo = n_map.at(k);
        if lo > n {
            break;
        }
        let hi = (n_map.at(kk) - 1).min(n);
        let block = e.schedule().block(kk)?;
        let a_k = base.prefix(k)?;
        let f = residue_rat(&rho[k as usize], &q);
        let outside: Vec<u64> = (lo..=hi).filter(|&j| !b_set.contains(j)).collect();
        if outside.is_empty() {
            // still count exceedances inside B
            for j in lo..=hi {
                let r = block[(j - lo) as usize];
                if norm_int(&(&f * Rational::from_integer(BigInt::from(r)))) >= *eps {
                    exceedances += 1;
                }
            }
            continue;
        }
        let gap_clear = (k + 1..k + m).all(|i| !support.contains(&i));
        record(
            &mut entries,
            "support gap k+1..k+m-1",
            gap_clear,
            outside[0],
            || format!("support meets ({k}, {})", k + m),
        )?;
        let tail = &w[(k + m - 1) as usize] * inv_product(base, k + 1, k + m - 1)?;
        let step2 = inv_product(base, k + 1, k + m - 1)?;
        let step3 = rat(1, base.ratio(k + 1)? as i64) * inv_product(base, k + 2, k + m - 1)?;
        for j in lo..=hi {
            let r = block[(j - lo) as usize];
            let r_q = Rational::from_integer(BigInt::from(r));
            let rf = &f * &r_q;
            if !b_set.contains(j) {
                j_eps.get_or_insert(j);
                outside_b += 1;
                record(
                    &mut entries,
                    "r{a_k x} ≤ r a_k Σ_{i≥k+m} c_i/a_i",
                    rf <= &tail * &r_q,
                    j,
                    || format!("r = {r}, k = {k}"),
                )?;
                record(
                    &mut entries,
                    "r a_k Σ_{i≥k+m} c_i/a_i ≤ r a_k/a_{k+m-1}",
                    &tail * &r_q <= &step2 * &r_q,
                    j,
                    || format!("r = {r}, k = {k}"),
                )?;
                record(
                    &mut entries,
                    "r a_k/a_{k+m-1} ≤ (r/b_{k+1})(a_{k+1}/a_{k+m-1})",
                    &step2 * &r_q <= &step3 * &r_q,
                    j,
                    || format!("r = {r}, k = {k}"),
                )?;
                record(
                    &mut entries,
                    "(r/b_{k+1})(a_{k+1}/a_{k+m-1}) ≤ 1/2^(m-2)",
                    &step3 * &r_q <= bound_m,
                    j,
                    || format!("r = {r}, k = {k}"),
                )?;
                // {e_j x} straight from the term, independent of the residue walk
                let e_j = a_k.as_ref() * big(r);
                let direct = residue_rat(&((e_j * &p) % &q), &q);
                record(&mut entries, "{e_j x} = r{a_k x}", direct == rf, j, || {
                    format!("{direct} ≠ {rf}")
                })?;
                record(
                    &mut entries,
                    "‖e_j x‖ < ε outside B",
                    norm_int(&direct) < *eps,
                    j,
                    || format!("‖e_j x‖ = {}", norm_int(&direct)),
                )?;
            } else if norm_int(&rf) >= *eps {
                exceedances += 1;
            }
        }
    }
    let b_count = b_set.count_up_to(n)?;
    Ok(Thm35Report {
        eps: eps.clone(),
        m,
        truncation: n,
        element: x.to_record(None)?,
        vacuous,
        b_count,
        b_density: Rational::new(BigInt::from(b_count), BigInt::from(n)),
        b_exceptions,
        j_eps,
        outside_b,
        exceedances,
        proofs: entries.into_values().collect(),
    })
}

/// The support-subset construction run once per digit pattern: the first
/// `J` members of `A` carry digit 1 or 2 by the pattern's bits, later members
/// carry 1. Every pattern is a distinct element with its own checked chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternReport {
    #[serde(with = "rational::exact")]
    pub eps: Rational,
    pub m: u64,
    pub truncation: u64,
    pub bits: u32,
    /// The `J` members the bits are placed on.
    pub positions: Vec<u64>,
    pub patterns: u64,
    /// Distinct values among the elements, compared as exact rationals.
    pub distinct: u64,
    /// Chain inequalities checked over all patterns.
    pub checked: u64,
    pub violations: u64,
    pub max_exceedances: u64,
}

pub const MAX_PATTERN_BITS: u32 = 20;

pub fn witness_patterns(
    a: &IndexSet,
    e: &EnumeratedSequence,
    eps: &Rational,
    n: u64,
    bits: u32,
) -> Result<PatternReport> {
    if bits > MAX_PATTERN_BITS {
        return Err(Error::precondition(format!(
            "{bits} pattern bits (at most {MAX_PATTERN_BITS})"
        )));
    }
    let m = thm35_m(eps)?;
    let base = e.base();
    let h = e.schedule().index_map_reaching(n)?.last_k() + m;
    let members = a.members_up_to(h)?;
    if (members.len() as u64) < u64::from(bits) {
        return Err(Error::precondition(format!(
            "{} has {} members up to level {h}, fewer than {bits}",
            a.label(),
            members.len()
        )));
    }
    let positions = members[..bits as usize].to_vec();
    for &s in &positions {
        if base.ratio(s)? < 3 {
            return Err(Error::precondition(format!(
                "b_{s} < 3 leaves no room for digit 2"
            )));
        }
    }
    let digit = |pattern: u64, s: u64| -> u64 {
        positions
            .iter()
            .position(|&t| t == s)
            .map_or(1, |i| 1 + (pattern >> i & 1))
    };
    let runs: Vec<(Rational, Thm35Report)> = (0..1u64 << bits)
        .into_par_iter()
        .map(|pattern| {
            let r = witness_theorem35(a, e, &|s, _| digit(pattern, s), eps, n)?;
            let x = DigitExpansion::from_digits(base, members.iter().map(|&s| (s, digit(pattern, s))))?;
            Ok((x.value()?, r))
        })
        .collect::<Result<_>>()?;
    let distinct = runs.iter().map(|(v, _)| v).collect::<BTreeSet<_>>().len() as u64;
    let proofs = runs.iter().flat_map(|(_, r)| &r.proofs);
    let (checked, violations) = proofs.fold((0, 0), |(c, v), p| (c + p.checked, v + p.violations));
    Ok(PatternReport {
        eps: eps.clone(),
        m,
        truncation: n,
        bits,
        positions,
        patterns: runs.len() as u64,
        distinct,
        checked,
        violations,
        max_exceedances: runs.iter().map(|(_, r)| r.exceedances).max().unwrap_or(0),
    })
}

/// The next support point after `k`, if any.
fn next_support(support: &BTreeSet<u64>, k: u64) -> Option<u64> {
    support.range(k + 1..).next().copied()
}

fn support_digits(x: &DigitExpansion, upto: u64) -> Result<BTreeMap<u64, u64>> {
    Ok(x.digits_prefix(upto)?
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c != 0)
        .map(|(i, c)| (i as u64 + 1, c))
        .collect())
}

/// Evaluation of the small-digit criterion for `t^s` membership.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma37Report {
    /// Empty support: membership holds vacuously.
    pub vacuous: bool,
    /// `max c_n/b_n` over the trailing half of the support points.
    #[serde(with = "rational::exact")]
    pub digit_ratio_max: Rational,
    pub digit_ratio_ok: bool,
    pub lifted_support: Option<DensityProfile>,
    pub lifted_support_ok: bool,
    /// Both hypotheses pass at truncation and the bound was verified.
    pub conclusion: bool,
    pub proofs: Vec<ProofEntry>,
}

/// Checks `c_n/b_n → 0` and `d(L(supp x)) = 0` at truncation, then the
/// bound `{a_k x} ≤ (c_{k+l_k} + 1) / (b_{k+1} ··· b_{k+l_k})` for every
/// `k ∉ supp(x)` below the last support point, `l_k` being the distance to
/// the next one.
pub fn lemma37_check(
    x: &DigitExpansion,
    e: &EnumeratedSequence,
    ladder: &[u64],
    tol: &Rational,
) -> Result<Lemma37Report> {
    check_ladder(ladder)?;
    let n = *ladder.last().unwrap();
    let n_map = e.schedule().index_map_reaching(n)?;
    let k_max = n_map.last_k();
    let digits = support_digits(x, x.support_max().unwrap_or(0).max(k_max))?;
    let base = e.base();
    if digits.is_empty() {
        return Ok(Lemma37Report {
            vacuous: true,
            digit_ratio_max: Rational::zero(),
            digit_ratio_ok: true,
            lifted_support: None,
            lifted_support_ok: true,
            conclusion: true,
            proofs: Vec::new(),
        });
    }
    let pts: Vec<(u64, u64)> = digits.iter().map(|(&k, &c)| (k, c)).collect();
    let mut digit_ratio_max = Rational::zero();
    for &(k, c) in &pts[pts.len() / 2..] {
        let r = rat(c as i64, base.ratio(k)? as i64);
        if r > digit_ratio_max {
            digit_ratio_max = r;
        }
    }
    let digit_ratio_ok = digit_ratio_max <= *tol;
    let horizon = digits.keys().next_back().copied().unwrap().max(k_max);
    let supp = IndexSet::infinite_prefix("supp(x)", digits.keys().copied(), horizon);
    let lifted = lift(&n_map, &supp, n)?;
    let profile = crate::density::density_profile(&lifted, ladder)?;
    let lifted_support_ok = profile.last() <= tol;
    let mut entries = BTreeMap::new();
    let conclusion = digit_ratio_ok && lifted_support_ok;
    if conclusion {
        let (rho, q) = frac_residues(x, base, k_max)?;
        let support: BTreeSet<u64> = digits.keys().copied().collect();
        for k in 1..=k_max {
            if support.contains(&k) {
                continue;
            }
            let Some(s) = next_support(&support, k) else { break };
            let f = residue_rat(&rho[k as usize], &q);
            let bound = rat((digits[&s] + 1) as i64, 1) * inv_product(base, k + 1, s)?;
            record(
                &mut entries,
                "{a_k x} ≤ (c_{k+l_k}+1)/(b_{k+1}···b_{k+l_k})",
                f <= bound,
                k,
                || format!("{f} > {bound}"),
            )?;
        }
    }
    Ok(Lemma37Report {
        vacuous: false,
        digit_ratio_max,
        digit_ratio_ok,
        lifted_support: Some(profile),
        lifted_support_ok,
        conclusion,
        proofs: entries.into_values().collect(),
    })
}

/// A gap-structure problem at one level of the sandwich check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapIssue {
    pub k: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub k_max: u64,
    #[serde(with = "rational::exact")]
    pub eps: Rational,
    pub levels_checked: u64,
    pub proofs: Vec<ProofEntry>,
    /// Levels skipped or flagged because the support gap is too small.
    pub gap_issues: Vec<GapIssue>,
    /// Smallest `k` from which every even multiplier gives
    /// `‖r{a_{k-1} x}‖ < ε`.
    pub k_eps: Option<u64>,
    /// `|{n_k} ∩ [1, n_K]| / n_K`, the density of the block leaders.
    #[serde(with = "rational::exact")]
    pub leader_density: Rational,
}

/// Checks, for `k ≤ K`, with `m` the given gap or the distance from `k` to
/// the next support point:
///
/// * `k ∈ supp`: `c_k/b_k ≤ {a_{k-1}x} ≤ c_k/b_k + (c_{k+m}+1)/(b_k···b_{k+m})`,
///   `1/2 ≤ {a_{k-1}x} ≤ 1/2 + 1/(b_k···b_{k+m-1})`, and for each `r ∈ R_k`,
///   `r/2 ≤ r{a_{k-1}x} ≤ r/2 + 1/(b_{k+1}···b_{k+m-1})`;
/// * `k ∉ supp`: `{a_{k-1}x} ≤ (c_{k+m}+1)/(b_k···b_{k+m})` and
///   `r{a_{k-1}x} ≤ 1/(b_{k+1}···b_{k+m-1})`;
///
/// and for even `r`, `‖r{a_{k-1}x}‖ ≤ 1/(b_{k+1}···b_{k+m-1})`.
pub fn thm39_sandwich(
    x: &DigitExpansion,
    e: &EnumeratedSequence,
    k_max: u64,
    m: Option<u64>,
    eps: &Rational,
) -> Result<SandwichReport> {
    check_eps(eps)?;
    let base = e.base();
    let digits = support_digits(x, x.support_max().unwrap_or(0).max(k_max))?;
    let support: BTreeSet<u64> = digits.keys().copied().collect();
    let (rho, q) = frac_residues(x, base, k_max)?;
    let half = rat(1, 2);
    let mut entries = BTreeMap::new();
    let mut gap_issues = Vec::new();
    let mut last_bad_eps: Option<u64> = None;
    let mut levels_checked = 0;
    for k in 1..=k_max {
        let next = next_support(&support, k);
        let natural = next.map(|s| s - k);
        let gap = match (m, natural) {
            (Some(m), Some(nat)) if m > nat => {
                gap_issues.push(GapIssue {
                    k,
                    reason: format!("support point {} lies inside the gap of {m}", k + nat),
                });
                continue;
            }
            (Some(0), _) => {
                gap_issues.push(GapIssue {
                    k,
                    reason: "m must be positive".into(),
                });
                continue;
            }
            (Some(m), _) => m,
            (None, Some(nat)) => nat,
            // nothing after k: every gap works
            (None, None) => 2,
        };
        if gap < 2 {
            gap_issues.push(GapIssue {
                k,
                reason: format!("next support point is k + {gap}; checked with m = {gap}"),
            });
        }
        levels_checked += 1;
        let f = residue_rat(&rho[k as usize - 1], &q);
        let b_k = base.ratio(k)?;
        let c_k = digits.get(&k).copied().unwrap_or(0);
        let c_next = if natural == Some(gap) {
            digits[&(k + gap)]
        } else {
            0
        };
        let first_line = rat(c_next as i64 + 1, 1) * inv_product(base, k, k + gap)?;
        let err_k = inv_product(base, k, k + gap - 1)?;
        let err_r = inv_product(base, k + 1, k + gap - 1)?;
        let lead = rat(c_k as i64, b_k as i64);
        if c_k != 0 {
            record(
                &mut entries,
                "c_k/b_k ≤ {a_{k-1}x} ≤ c_k/b_k + (c_{k+m}+1)/(b_k···b_{k+m})",
                lead <= f && f <= &lead + &first_line,
                k,
                || format!("{{a_(k-1) x}} = {f}"),
            )?;
            record(
                &mut entries,
                "1/2 ≤ {a_{k-1}x} ≤ 1/2 + 1/(b_k···b_{k+m-1})",
                half <= f && f <= &half + &err_k,
                k,
                || format!("{{a_(k-1) x}} = {f}"),
            )?;
        } else {
            record(
                &mut entries,
                "{a_{k-1}x} ≤ (c_{k+m}+1)/(b_k···b_{k+m})",
                f <= first_line,
                k,
                || format!("{{a_(k-1) x}} = {f}"),
            )?;
        }
        let mut level_bad = false;
        for r in e.schedule().block(k)? {
            let r_q = Rational::from_integer(BigInt::from(r));
            let rf = &f * &r_q;
            if c_k != 0 {
                let rh = &r_q * &half;
                record(
                    &mut entries,
                    "r/2 ≤ r{a_{k-1}x} ≤ r/2 + 1/(b_{k+1}···b_{k+m-1})",
                    rh <= rf && rf <= &rh + &err_r,
                    k,
                    || format!("r = {r}"),
                )?;
            } else {
                record(
                    &mut entries,
                    "r{a_{k-1}x} ≤ 1/(b_{k+1}···b_{k+m-1})",
                    rf <= err_r,
                    k,
                    || format!("r = {r}"),
                )?;
            }
            if r % 2 == 0 {
                let nrm = norm_int(&rf);
                record(
                    &mut entries,
                    "‖r{a_{k-1}x}‖ ≤ 1/(b_{k+1}···b_{k+m-1}) for even r",
                    nrm <= err_r,
                    k,
                    || format!("r = {r}, norm = {nrm}"),
                )?;
                if nrm >= *eps {
                    level_bad = true;
                }
            }
        }
        if level_bad {
            last_bad_eps = Some(k);
        }
    }
    let n_map = e.schedule().index_map(k_max)?;
    let reach = n_map.reach();
    Ok(SandwichReport {
        k_max,
        eps: eps.clone(),
        levels_checked,
        proofs: entries.into_values().collect(),
        gap_issues,
        k_eps: match last_bad_eps {
            Some(k) if k == k_max => None,
            Some(k) => Some(k + 1),
            None => Some(1),
        },
        leader_density: Rational::new(BigInt::from(n_map.as_slice().len() as u64), BigInt::from(reach)),
    })
}

/// `{a_{n-1} x}` at one support point with the interval it must lie in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub n: u64,
    #[serde(with = "rational::exact")]
    pub frac: Rational,
    #[serde(with = "rational::exact")]
    pub lower: Rational,
    #[serde(with = "rational::exact")]
    pub upper: Rational,
    #[serde(with = "rational::exact")]
    pub norm: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotInTReport {
    /// `b-bounded`, `b-divergent`, `mixed`, `empty` or `inconclusive`.
    pub branch: String,
    pub points: Vec<SupportPoint>,
    #[serde(with = "rational::exact")]
    pub min_norm: Rational,
    /// The external result the conclusion rests on, if any.
    pub assumption: Option<String>,
}

/// At each support point `n ≤ K`, checks
/// `c_n/b_n ≤ {a_{n-1}x} ≤ c_n/b_n + (c_s+1)/(b_n···b_s)` with `s` the next
/// support point, and reports `‖a_{n-1}x‖`.
pub fn not_in_t_evidence(x: &DigitExpansion, base: &RatioSequence, k_max: u64) -> Result<NotInTReport> {
    let digits = support_digits(x, x.support_max().unwrap_or(0).max(k_max))?;
    let support: BTreeSet<u64> = digits.keys().copied().collect();
    let probed: Vec<u64> = support.range(..=k_max).copied().collect();
    if probed.is_empty() {
        return Ok(NotInTReport {
            branch: "empty".into(),
            points: Vec::new(),
            min_norm: Rational::zero(),
            assumption: None,
        });
    }
    let set = IndexSet::infinite_prefix("supp(x)", probed.iter().copied(), k_max);
    let (branch, assumption) = match classify_b(&set, base, k_max)? {
        BClass::Bounded { .. } => (
            "b-bounded",
            Some("an infinite b-bounded support forces x ∉ t_(a_n) (external result, not re-derived)"),
        ),
        BClass::Divergent => (
            "b-divergent",
            Some("c_n/b_n → 1/2 along a b-divergent part of supp(x) forces x ∉ t_(a_n) (external result, not re-derived)"),
        ),
        BClass::Mixed => ("mixed", None),
        BClass::Inconclusive => ("inconclusive", None),
    };
    let (rho, q) = frac_residues(x, base, k_max)?;
    let mut points = Vec::new();
    for &n in &probed {
        let f = residue_rat(&rho[n as usize - 1], &q);
        let c = digits[&n];
        let lower = rat(c as i64, base.ratio(n)? as i64);
        let upper = match next_support(&support, n) {
            Some(s) => &lower + rat(digits[&s] as i64 + 1, 1) * inv_product(base, n, s)?,
            None => lower.clone(),
        };
        if f < lower || f > upper {
            return Err(Error::violation(
                "c_n/b_n ≤ {a_(n-1)x} ≤ upper",
                n,
                format!("{f} ∉ [{lower}, {upper}]"),
            ));
        }
        let norm = norm_int(&f);
        points.push(SupportPoint {
            n,
            frac: f,
            lower,
            upper,
            norm,
        });
    }
    let min_norm = points.iter().map(|p| p.norm.clone()).min().unwrap();
    Ok(NotInTReport {
        branch: branch.into(),
        points,
        min_norm,
        assumption: assumption.map(str::to_owned),
    })
}

/// `count / n` as a decimal, for log lines.
pub fn ratio_string(count: u64, n: u64) -> String {
    rational::to_decimal_string(&Rational::new(BigInt::from(count), BigInt::from(n)), 20)
}
