//! Testers for the three invariance properties of an arithmetic-type
//! sequence, and the explicit constructions that witness each side.
//!
//! With `L` the lifting function of the sequence's index map:
//!
//! * `L`-invariant: `d(A) = 0 ⇒ d(L(A)) = 0` for every infinite `A`;
//! * weakly `L`-invariant: some infinite `A` has `d(L(A - m)) = 0` for all `m`;
//! * strongly non `L`-invariant: `d̄(L(A)) > 0` for every `b`-divergent `A`.
//!
//! Each property quantifies over infinite sets, so verdicts are one-sided:
//! "supported" only means no counterexample was seen up to the ladder end.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::density::{
    almost_subset, check_ladder, classify_b, density_profile, lift, translate, BClass, DensityProfile,
    Extent, IndexMap, IndexSet,
};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::seqgen::EnumeratedSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    LInvariant,
    WeaklyLInvariant,
    StronglyNonLInvariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Supported,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub label: String,
    pub profile: DensityProfile,
    #[serde(with = "rational::exact")]
    pub threshold: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub property: Property,
    pub verdict: Verdict,
    pub evidence: Vec<Evidence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn check_tol(tol: &Rational) -> Result<()> {
    if *tol <= Rational::from_integer(0.into()) {
        return Err(Error::precondition("tolerance must be positive"));
    }
    Ok(())
}

fn ladder_map(e: &EnumeratedSequence, ladder: &[u64]) -> Result<IndexMap> {
    check_ladder(ladder)?;
    e.schedule().index_map_reaching(*ladder.last().unwrap())
}

/// The density profile of `L(A)` along `ladder`.
pub fn lifted_profile(n_map: &IndexMap, a: &IndexSet, ladder: &[u64]) -> Result<DensityProfile> {
    check_ladder(ladder)?;
    let lifted = lift(n_map, a, *ladder.last().unwrap())?;
    density_profile(&lifted, ladder)
}

/// A profile that at least halves across the trailing half of the ladder
/// is still falling: being above `tol` there is no evidence it stays above.
fn still_falling(p: &DensityProfile) -> bool {
    let t = p.trailing();
    t.len() >= 2 && t[t.len() - 1].clone() * Rational::from_integer(2.into()) <= t[0]
}

/// Supported when every profile ends at or below `tol`, refuted when one
/// stays above `tol` over the trailing half of the ladder without falling.
fn vanishing_verdict(evidence: &[Evidence], tol: &Rational) -> Verdict {
    if evidence
        .iter()
        .any(|ev| ev.profile.liminf_est > *tol && !still_falling(&ev.profile))
    {
        Verdict::Refuted
    } else if evidence.iter().all(|ev| ev.profile.last() <= tol) {
        Verdict::Supported
    } else {
        Verdict::Inconclusive
    }
}

/// Lifts each certified zero-density set and checks that the lifted
/// profile vanishes.
pub fn test_l_invariant(
    e: &EnumeratedSequence,
    family: &[IndexSet],
    ladder: &[u64],
    tol: &Rational,
) -> Result<InvarianceReport> {
    check_tol(tol)?;
    let n_map = ladder_map(e, ladder)?;
    let mut evidence = Vec::new();
    for a in family {
        if a.certificate().is_none() {
            return Err(Error::MissingCertificate {
                label: a.label().to_owned(),
            });
        }
        evidence.push(Evidence {
            label: format!("L({})", a.label()),
            profile: lifted_profile(&n_map, a, ladder)?,
            threshold: tol.clone(),
        });
    }
    let mut notes = Vec::new();
    let verdict = if family.is_empty() {
        notes.push("empty family".into());
        Verdict::Inconclusive
    } else {
        vanishing_verdict(&evidence, tol)
    };
    Ok(InvarianceReport {
        property: Property::LInvariant,
        verdict,
        evidence,
        notes,
    })
}

/// One ladder point of the covering argument for `b`-bounded sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverRow {
    pub n: u64,
    /// `|L(A) ∩ [1, N]|`
    pub lifted: u64,
    /// `|A′ ∩ [1, N]|` with `A′ = {n_{k-1} : k ∈ A}`
    pub leaders: u64,
    pub count_bound_holds: bool,
    #[serde(with = "rational::exact")]
    pub density: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma31Report {
    pub set: String,
    /// `M` with `b_n ≤ M` on `A`.
    pub bound: u64,
    /// `L(A) ⊆ ∪_{i=0}^{M} (A′ + i)` on `[1, N_max]`.
    pub covering_holds: bool,
    pub rows: Vec<CoverRow>,
}

/// Checks the covering `L(A) ⊆ ∪_{i ≤ M} (A′ + i)` and the count bound
/// `|L(A) ∩ [1, N]| ≤ (M + 1) |A′ ∩ [1, N]|` exactly at each ladder point.
pub fn lemma31_rate_check(e: &EnumeratedSequence, a: &IndexSet, ladder: &[u64]) -> Result<Lemma31Report> {
    let n_map = ladder_map(e, ladder)?;
    let n_max = *ladder.last().unwrap();
    let k_max = n_map.block_of(n_max).expect("map reaches past N");
    let bound = match classify_b(a, e.base(), k_max) {
        Ok(BClass::Bounded { bound }) => bound,
        Ok(other) => {
            return Err(Error::precondition(format!(
                "`{}` is not b-bounded on [1, {k_max}] ({other:?})",
                a.label()
            )))
        }
        Err(Error::Precondition(_)) => 0, // A ∩ [1, K] is empty
        Err(err) => return Err(err),
    };
    let lifted = lift(&n_map, a, n_max)?;
    let leaders: Vec<u64> = a
        .iter_up_to(k_max)?
        .map(|k| n_map.at(k - 1))
        .filter(|&x| x <= n_max)
        .collect();
    for x in lifted.iter_up_to(n_max)? {
        let p = leaders.partition_point(|&l| l <= x);
        if p == 0 || x - leaders[p - 1] > bound {
            return Err(Error::violation(
                "b-bounded covering",
                x,
                format!("no leader within {bound} below {x}"),
            ));
        }
    }
    let rows = ladder
        .iter()
        .map(|&n| {
            let lifted_n = lifted.count_up_to(n)?;
            let leaders_n = leaders.partition_point(|&l| l <= n) as u64;
            Ok(CoverRow {
                n,
                lifted: lifted_n,
                leaders: leaders_n,
                count_bound_holds: lifted_n <= (bound + 1) * leaders_n,
                density: Rational::new(BigInt::from(lifted_n), BigInt::from(n)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = rows.iter().find(|r| !r.count_bound_holds) {
        return Err(Error::violation(
            "b-bounded count bound",
            bad.n,
            format!("{} > ({bound} + 1) · {}", bad.lifted, bad.leaders),
        ));
    }
    Ok(Lemma31Report {
        set: a.label().to_owned(),
        bound,
        covering_holds: true,
        rows,
    })
}

/// A recursively constructed `A = {u_j + 1}` with `d(L(A - m)) = 0` for all
/// `m`, valid when `(n_k - n_{k-1}) / (n_k - n_0) → 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prop34Witness {
    pub u: Vec<u64>,
    /// `S_j = Σ_{i ≤ j} Σ_{t=0}^{i} (n_{u_i+1-t} - n_{u_i-t})`.
    #[serde(with = "decimal_sums")]
    pub sums: Vec<u128>,
    /// `(i, t)` pairs where `u_i - t < 0` and `n_0` was used instead.
    pub clamped: Vec<(u64, u64)>,
    /// Block indices through which `A` is known exactly.
    pub horizon: u64,
    /// Why the recursion stopped before `j_max`, if it did.
    pub stalled: Option<String>,
    /// `(k, (n_k - n_{k-1}) / (n_k - n_0))` sampled at `k = u_j`.
    #[serde(with = "hypothesis_samples")]
    pub hypothesis: Vec<(u64, Rational)>,
}

mod hypothesis_samples {
    use super::*;
    use crate::rational::RationalRecord;

    pub fn serialize<S: serde::Serializer>(
        v: &[(u64, Rational)],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let recs: Vec<(u64, RationalRecord)> = v.iter().map(|(k, r)| (*k, r.into())).collect();
        recs.serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<(u64, Rational)>, D::Error> {
        let recs = Vec::<(u64, RationalRecord)>::deserialize(d)?;
        recs.iter()
            .map(|(k, r)| Ok((*k, Rational::try_from(r).map_err(serde::de::Error::custom)?)))
            .collect()
    }
}

// u128 does not survive serde's buffering of internally tagged enums
mod decimal_sums {
    use super::*;

    pub fn serialize<S: serde::Serializer>(v: &[u128], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(u128::to_string).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<u128>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

impl Prop34Witness {
    /// `A = {u_j + 1}`, exact on `[1, horizon]`.
    pub fn set(&self) -> IndexSet {
        IndexSet::infinite_prefix("{u_j+1}", self.u.iter().map(|u| u + 1), self.horizon)
    }

    /// `B_m = ∪_{j > m} [n_{u_j - m}, n_{u_j - m + 1} - 1] ∩ [1, N]`.
    pub fn cover(&self, n_map: &IndexMap, m: u64, n: u64) -> Result<IndexSet> {
        let blocks = IndexSet::infinite_prefix(
            format!("B_{m} blocks"),
            self.u.iter().skip(m as usize).map(|&u| u - m + 1),
            self.horizon.saturating_sub(m),
        );
        Ok(lift(n_map, &blocks, n)?.with_label(format!("B_{m}")))
    }

    /// `n_{u_{j-1}} > (j - 2) S_{j-2}` for every `j ≥ 2` computed.
    pub fn growth_condition_holds(&self, e: &EnumeratedSequence) -> Result<bool> {
        for j in 2..=self.u.len() as u64 {
            let lhs = u128::from(e.schedule().n(self.u[j as usize - 2])?);
            let s = if j >= 3 { self.sums[j as usize - 3] } else { 0 };
            if lhs <= u128::from(j - 2) * s {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `u_{j+1} > u_j + j + 1` for every computed `j`.
    pub fn gaps_hold(&self) -> bool {
        self.u
            .windows(2)
            .enumerate()
            .all(|(i, w)| w[1] > w[0] + i as u64 + 2)
    }
}

fn n_clamped(e: &EnumeratedSequence, idx: i128) -> Result<u64> {
    e.schedule().n(idx.max(0) as u64)
}

/// Runs `u_1 = 1`,
/// `u_{j+1} = min{k > u_j + j + 1 : n_k > j S_j}` for `j < j_max`, searching
/// blocks up to `k_cap`.
pub fn weak_witness_prop34(e: &EnumeratedSequence, j_max: u64, k_cap: u64) -> Result<Prop34Witness> {
    if j_max == 0 {
        return Err(Error::precondition("need j_max ≥ 1"));
    }
    let n0 = u128::from(e.schedule().n(0)?);
    let mut u = vec![1u64];
    let mut sums = Vec::new();
    let mut clamped = Vec::new();
    let mut stalled = None;
    let mut s: u128 = 0;
    let mut hypothesis = Vec::new();
    while (u.len() as u64) < j_max {
        let j = u.len() as u64;
        let uj = u[j as usize - 1];
        for t in 0..=j {
            let hi = i128::from(uj) + 1 - i128::from(t);
            let lo = hi - 1;
            if lo < 0 {
                clamped.push((j, t));
            }
            s += u128::from(n_clamped(e, hi)? - n_clamped(e, lo)?);
        }
        sums.push(s);
        let target = u128::from(j) * s;
        let mut k = uj + j + 2;
        let next = loop {
            if k > k_cap {
                break None;
            }
            match e.schedule().n(k) {
                Ok(nk) if u128::from(nk) > target => break Some(k),
                Ok(_) => k += 1,
                Err(err) => {
                    stalled = Some(format!("index map unavailable at k = {k}: {err}"));
                    break None;
                }
            }
        };
        match next {
            Some(k) => u.push(k),
            None => {
                stalled.get_or_insert_with(|| {
                    format!("no k ≤ {k_cap} satisfies the recursion at depth {}", j + 1)
                });
                break;
            }
        }
    }
    for &k in &u {
        let nk = u128::from(e.schedule().n(k)?);
        let prev = u128::from(e.schedule().n(k - 1)?);
        hypothesis.push((k, Rational::new(BigInt::from(nk - prev), BigInt::from(nk - n0))));
    }
    let last = *u.last().unwrap();
    let horizon = if stalled.is_some() {
        k_cap.max(last) + 1
    } else {
        last + u.len() as u64 + 1
    };
    Ok(Prop34Witness {
        u,
        sums,
        clamped,
        horizon,
        stalled,
        hypothesis,
    })
}

/// `L(A - m) ⊂* B_m` on `[1, N]`, with the exception set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub m: u64,
    pub truncation: u64,
    pub exceptions: Vec<u64>,
    #[serde(with = "rational::exact")]
    pub cover_density: Rational,
    #[serde(with = "rational::exact")]
    pub lifted_density: Rational,
}

pub fn check_prop34_cover(e: &EnumeratedSequence, w: &Prop34Witness, m: u64, n: u64) -> Result<CoverCheck> {
    let n_map = e.schedule().index_map_reaching(n)?;
    let lifted = lift(&n_map, &translate(&w.set(), m), n)?;
    let cover = w.cover(&n_map, m, n)?;
    let dens = |s: &IndexSet| -> Result<Rational> {
        Ok(Rational::new(BigInt::from(s.count_up_to(n)?), BigInt::from(n)))
    };
    Ok(CoverCheck {
        m,
        truncation: n,
        exceptions: almost_subset(&lifted, &cover, n)?,
        cover_density: dens(&cover)?,
        lifted_density: dens(&lifted)?,
    })
}

/// Profiles `L(A - m)` for `m = 0..=m_max`.
pub fn test_weak_l_invariant(
    e: &EnumeratedSequence,
    a: &IndexSet,
    m_max: u64,
    ladder: &[u64],
    tol: &Rational,
) -> Result<InvarianceReport> {
    check_tol(tol)?;
    let n_map = ladder_map(e, ladder)?;
    let mut evidence = Vec::new();
    for m in 0..=m_max {
        let shifted = translate(a, m);
        evidence.push(Evidence {
            label: format!("L({})", shifted.label()),
            profile: lifted_profile(&n_map, &shifted, ladder)?,
            threshold: tol.clone(),
        });
    }
    let mut notes = Vec::new();
    let verdict = if a.extent() == Extent::Finite {
        notes.push("finite test set: the property needs an infinite one".into());
        Verdict::Inconclusive
    } else {
        vanishing_verdict(&evidence, tol)
    };
    Ok(InvarianceReport {
        property: Property::WeaklyLInvariant,
        verdict,
        evidence,
        notes,
    })
}

/// Looks for a `b`-divergent set whose lift has vanishing upper density.
/// Refuted if some candidate's profile stays below `tol` over the trailing
/// half of the ladder, inconclusive if one is still falling, otherwise
/// supported relative to the candidates, with the smallest upper estimate
/// seen recorded in the notes.
pub fn test_strong_non_l(
    e: &EnumeratedSequence,
    candidates: &[IndexSet],
    ladder: &[u64],
    tol: &Rational,
) -> Result<InvarianceReport> {
    check_tol(tol)?;
    let n_map = ladder_map(e, ladder)?;
    let k_max = n_map
        .block_of(*ladder.last().unwrap())
        .expect("map reaches past N");
    let mut evidence = Vec::new();
    for c in candidates {
        match classify_b(c, e.base(), k_max)? {
            BClass::Divergent => {}
            other => {
                return Err(Error::precondition(format!(
                    "candidate `{}` is not certified b-divergent ({other:?})",
                    c.label()
                )))
            }
        }
        evidence.push(Evidence {
            label: format!("L({})", c.label()),
            profile: lifted_profile(&n_map, c, ladder)?,
            threshold: tol.clone(),
        });
    }
    let mut notes = Vec::new();
    let verdict = if evidence.is_empty() {
        notes.push("empty candidate family".into());
        Verdict::Inconclusive
    } else if evidence.iter().any(|ev| ev.profile.limsup_est < *tol) {
        Verdict::Refuted
    } else if let Some(ev) = evidence.iter().find(|ev| still_falling(&ev.profile)) {
        notes.push(format!("{} is above tol but still falling", ev.label));
        Verdict::Inconclusive
    } else {
        let lowest = evidence.iter().map(|ev| &ev.profile.limsup_est).min().unwrap();
        notes.push(format!(
            "smallest upper-density estimate among candidates: {}",
            rational::to_decimal_string(lowest, 20)
        ));
        Verdict::Supported
    };
    Ok(InvarianceReport {
        property: Property::StronglyNonLInvariant,
        verdict,
        evidence,
        notes,
    })
}

/// `|L(A) ∩ [1, n_k - 1]| / (n_k - 1)` at a member `k = u_j + 1` of `A`,
/// against the lower bound `(n_k - n_{k-1}) / (n_k - 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockBoundRow {
    pub k: u64,
    pub n: u64,
    pub count: u64,
    #[serde(with = "rational::exact")]
    pub ratio: Rational,
    #[serde(with = "rational::exact")]
    pub lower_bound: Rational,
}

/// Block-end ratios of `L(A)` for members `k` of `A` with
/// `n_k = 2 n_{k-1} - n_0`, taking the first `j_max` members.
pub fn lemma38_block_bound(e: &EnumeratedSequence, a: &[u64], j_max: usize) -> Result<Vec<BlockBoundRow>> {
    let members: BTreeSet<u64> = a.iter().copied().filter(|&k| k >= 1).collect();
    let n0 = e.schedule().n(0)?;
    let mut rows = Vec::new();
    for (j, &k) in members.iter().take(j_max).enumerate() {
        let nk = e.schedule().n(k)?;
        let prev = e.schedule().n(k - 1)?;
        if nk + n0 != 2 * prev {
            return Err(Error::precondition(format!(
                "member {} (k = {k}): n_k = {nk} ≠ 2 n_{{k-1}} - n_0 = {}",
                j + 1,
                2 * prev - n0
            )));
        }
        let n = nk - 1;
        // brute-force count of ∪_{k' ∈ A} [n_{k'-1}, n_{k'} - 1] within [1, n]
        let mut covered = BTreeSet::new();
        for &k2 in &members {
            let lo = e.schedule().n(k2 - 1)?;
            if lo > n {
                break;
            }
            let hi = e.schedule().n(k2)? - 1;
            covered.extend(lo..=hi.min(n));
        }
        let count = covered.len() as u64;
        let ratio = Rational::new(BigInt::from(count), BigInt::from(n));
        let lower_bound = Rational::new(BigInt::from(nk - prev), BigInt::from(n));
        if ratio < lower_bound {
            return Err(Error::violation(
                "block-end lower bound",
                k,
                format!("{ratio} < {lower_bound}"),
            ));
        }
        rows.push(BlockBoundRow {
            k,
            n,
            count,
            ratio,
            lower_bound,
        });
    }
    Ok(rows)
}
