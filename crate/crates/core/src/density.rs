//! Index sets, natural-density sampling at finite truncation, and the lifting
//! function `L(A) = ⋃_{k∈A} [n_{k-1}, n_k - 1]`.
//!
//! Densities are counted on `[1, N]`. Every density figure produced here is a
//! sample at a concrete truncation, never a limit.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radix::{RatioGrowth, RatioSequence};
use crate::rational::{self, Rational, RationalRecord};

/// Whether an index set is known to be finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extent {
    Finite,
    Infinite,
    Unknown,
}

type Generator = Arc<dyn Fn(u64) -> u64 + Send + Sync>;
type Predicate = Arc<dyn Fn(u64) -> bool + Send + Sync>;
type CountBound = Arc<dyn Fn(u64) -> u64 + Send + Sync>;

/// A closed-form upper bound on `|A ∩ [1, N]|` whose ratio to `N` tends to
/// zero. This is how a set's `d(A) = 0` hypothesis is supplied, rather than
/// estimated.
#[derive(Clone)]
pub struct ZeroDensityCertificate {
    claim: String,
    bound: CountBound,
}

impl ZeroDensityCertificate {
    pub fn new(claim: impl Into<String>, bound: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        ZeroDensityCertificate {
            claim: claim.into(),
            bound: Arc::new(bound),
        }
    }

    pub fn claim(&self) -> &str {
        &self.claim
    }

    pub fn bound(&self, n: u64) -> u64 {
        (self.bound)(n)
    }
}

impl fmt::Debug for ZeroDensityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZeroDensityCertificate")
            .field("claim", &self.claim)
            .finish()
    }
}

#[derive(Clone)]
enum Repr {
    Sorted(Arc<Vec<u64>>),
    /// Disjoint closed intervals in increasing order, with running counts.
    Intervals {
        spans: Arc<Vec<(u64, u64)>>,
        before: Arc<Vec<u64>>,
    },
    /// `k ↦ k-th member`, strictly increasing.
    Generator(Generator),
    Predicate(Predicate),
    Translate(Box<IndexSet>, u64),
}

/// A subset of `ℕ = {1, 2, ...}`, queried through truncations `[1, N]`.
///
/// Sets built from a computed prefix of an infinite object (a recursive
/// witness, a lifted set) carry a horizon: membership is exact on
/// `[1, horizon]` and queries past it are rejected.
#[derive(Clone)]
pub struct IndexSet {
    label: String,
    repr: Repr,
    extent: Extent,
    horizon: Option<u64>,
    certificate: Option<ZeroDensityCertificate>,
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IndexSet")
            .field("label", &self.label)
            .field("extent", &self.extent)
            .field("horizon", &self.horizon)
            .finish()
    }
}

fn normalize(members: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut v: Vec<u64> = members.into_iter().filter(|&n| n >= 1).collect();
    v.sort_unstable();
    v.dedup();
    v
}

impl IndexSet {
    fn with_repr(label: impl Into<String>, repr: Repr, extent: Extent) -> Self {
        IndexSet {
            label: label.into(),
            repr,
            extent,
            horizon: None,
            certificate: None,
        }
    }

    pub fn finite(label: impl Into<String>, members: impl IntoIterator<Item = u64>) -> Self {
        let v = normalize(members);
        let n = v.len() as u64;
        IndexSet::with_repr(label, Repr::Sorted(Arc::new(v)), Extent::Finite).with_certificate(
            ZeroDensityCertificate::new(format!("finite set of {n} elements"), move |_| n),
        )
    }

    pub fn empty() -> Self {
        IndexSet::finite("∅", [])
    }

    /// The known members of an infinite set, exact on `[1, horizon]`.
    pub fn infinite_prefix(
        label: impl Into<String>,
        members: impl IntoIterator<Item = u64>,
        horizon: u64,
    ) -> Self {
        let v: Vec<u64> = normalize(members).into_iter().filter(|&n| n <= horizon).collect();
        let mut s = IndexSet::with_repr(label, Repr::Sorted(Arc::new(v)), Extent::Infinite);
        s.horizon = Some(horizon);
        s
    }

    /// The infinite set `{f(1) < f(2) < ...}`.
    pub fn generated(label: impl Into<String>, kth: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        IndexSet::with_repr(label, Repr::Generator(Arc::new(kth)), Extent::Infinite)
    }

    pub fn predicate(
        label: impl Into<String>,
        extent: Extent,
        member: impl Fn(u64) -> bool + Send + Sync + 'static,
    ) -> Self {
        IndexSet::with_repr(label, Repr::Predicate(Arc::new(member)), extent)
    }

    /// A union of disjoint closed intervals, exact on `[1, horizon]` when a
    /// horizon is given.
    pub fn intervals(
        label: impl Into<String>,
        spans: Vec<(u64, u64)>,
        extent: Extent,
        horizon: Option<u64>,
    ) -> Result<Self> {
        let label = label.into();
        let mut before = Vec::with_capacity(spans.len());
        let mut acc = 0u64;
        let mut prev_hi = 0u64;
        for (i, &(lo, hi)) in spans.iter().enumerate() {
            if lo < 1 || hi < lo || (i > 0 && lo <= prev_hi) {
                return Err(Error::precondition(format!(
                    "set `{label}`: interval [{lo}, {hi}] is empty, unordered or overlapping"
                )));
            }
            before.push(acc);
            acc += hi - lo + 1;
            prev_hi = hi;
        }
        let mut s = IndexSet::with_repr(
            label,
            Repr::Intervals {
                spans: Arc::new(spans),
                before: Arc::new(before),
            },
            extent,
        );
        s.horizon = horizon;
        Ok(s)
    }

    pub fn naturals() -> Self {
        IndexSet::generated("ℕ", |k| k)
    }

    pub fn evens() -> Self {
        IndexSet::generated("evens", |k| 2 * k)
    }

    pub fn squares() -> Self {
        IndexSet::generated("squares", |k| k * k).with_certificate(ZeroDensityCertificate::new(
            "|squares ∩ [1,N]| = ⌊√N⌋",
            |n| n.isqrt(),
        ))
    }

    pub fn powers_of_two() -> Self {
        IndexSet::generated("powers-of-2", |k| 1u64 << (k - 1)).with_certificate(ZeroDensityCertificate::new(
            "|{2^i} ∩ [1,N]| = ⌊log₂ N⌋ + 1",
            |n| {
                if n == 0 {
                    0
                } else {
                    u64::from(n.ilog2()) + 1
                }
            },
        ))
    }

    pub fn with_certificate(mut self, cert: ZeroDensityCertificate) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn horizon(&self) -> Option<u64> {
        self.horizon
    }

    pub fn certificate(&self) -> Option<&ZeroDensityCertificate> {
        self.certificate.as_ref()
    }

    fn ensure_known(&self, n: u64) -> Result<()> {
        match self.horizon {
            Some(h) if n > h => Err(Error::HorizonExceeded {
                label: self.label.clone(),
                needed: n,
                horizon: h,
            }),
            _ => Ok(()),
        }
    }

    /// Membership test. Past the horizon this reports what is known, which
    /// for prefix-backed sets means `false`.
    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match &self.repr {
            Repr::Sorted(v) => v.binary_search(&n).is_ok(),
            Repr::Intervals { spans, .. } => {
                let i = spans.partition_point(|&(lo, _)| lo <= n);
                i > 0 && spans[i - 1].1 >= n
            }
            Repr::Generator(f) => {
                // Members grow at least linearly, so a doubling search is cheap.
                let mut hi = 1u64;
                while f(hi) < n {
                    hi *= 2;
                }
                let mut lo = 1u64;
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if f(mid) < n {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                f(lo) == n
            }
            Repr::Predicate(p) => p(n),
            Repr::Translate(inner, m) => inner.contains(n + m),
        }
    }

    /// Members in `[1, n]`, ascending.
    pub fn iter_up_to(&self, n: u64) -> Result<Box<dyn Iterator<Item = u64> + '_>> {
        self.ensure_known(n)?;
        Ok(self.iter_unchecked(n))
    }

    fn iter_unchecked(&self, n: u64) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.repr {
            Repr::Sorted(v) => Box::new(v.iter().copied().take_while(move |&x| x <= n)),
            Repr::Intervals { spans, .. } => Box::new(
                spans
                    .iter()
                    .take_while(move |&&(lo, _)| lo <= n)
                    .flat_map(move |&(lo, hi)| lo..=hi.min(n)),
            ),
            Repr::Generator(f) => Box::new((1u64..).map(move |k| f(k)).take_while(move |&x| x <= n)),
            Repr::Predicate(p) => Box::new((1..=n).filter(move |&x| p(x))),
            Repr::Translate(inner, m) => {
                let m = *m;
                Box::new(
                    inner
                        .iter_unchecked(n + m)
                        .filter(move |&x| x > m)
                        .map(move |x| x - m),
                )
            }
        }
    }

    pub fn members_up_to(&self, n: u64) -> Result<Vec<u64>> {
        Ok(self.iter_up_to(n)?.collect())
    }

    /// `|A ∩ [1, n]|`.
    pub fn count_up_to(&self, n: u64) -> Result<u64> {
        self.ensure_known(n)?;
        Ok(match &self.repr {
            Repr::Sorted(v) => v.partition_point(|&x| x <= n) as u64,
            Repr::Intervals { spans, before } => {
                let i = spans.partition_point(|&(lo, _)| lo <= n);
                if i == 0 {
                    0
                } else {
                    let (lo, hi) = spans[i - 1];
                    before[i - 1] + hi.min(n) - lo + 1
                }
            }
            _ => self.iter_unchecked(n).count() as u64,
        })
    }

    /// The greatest known member not exceeding `n`.
    pub fn last_member_up_to(&self, n: u64) -> Result<Option<u64>> {
        Ok(self.iter_up_to(n)?.last())
    }
}

/// The induced index map `n_0 < n_1 < ... < n_K` of a selection schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMap {
    n: Vec<u64>,
}

impl IndexMap {
    pub fn new(n: Vec<u64>) -> Result<Self> {
        if n.is_empty() || n[0] < 1 {
            return Err(Error::precondition("index map needs n_0 ≥ 1"));
        }
        if n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::precondition("index map must be strictly increasing"));
        }
        Ok(IndexMap { n })
    }

    pub fn get(&self, k: u64) -> Option<u64> {
        self.n.get(usize::try_from(k).ok()?).copied()
    }

    /// `n_k`, panicking past the computed prefix.
    pub fn at(&self, k: u64) -> u64 {
        self.n[k as usize]
    }

    pub fn last_k(&self) -> u64 {
        (self.n.len() - 1) as u64
    }

    /// `n_K` for the last computed `K`.
    pub fn reach(&self) -> u64 {
        *self.n.last().unwrap()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.n
    }

    /// The block `k ≥ 1` with `n_{k-1} ≤ i < n_k`, if it is computed.
    pub fn block_of(&self, i: u64) -> Option<u64> {
        if i < self.n[0] {
            return None;
        }
        let p = self.n.partition_point(|&x| x <= i);
        (p < self.n.len()).then_some(p as u64)
    }

    /// Block boundaries `n_k - 1` for `k = 1..=K`, the natural ladder for
    /// lifted sets.
    pub fn block_ends(&self) -> Vec<u64> {
        self.n[1..].iter().map(|&x| x - 1).collect()
    }

    /// Ends `n_a - 1` of the lifted blocks of `a ∈ A` that fall in
    /// `[from, to]`, where `L(A)` is sampled at its local maxima.
    pub fn block_aligned_ladder(&self, a: &IndexSet, from: u64, to: u64) -> Result<Vec<u64>> {
        let k_max = a.horizon().unwrap_or(u64::MAX).min(self.last_k());
        Ok(a.iter_up_to(k_max)?
            .map(|k| self.at(k) - 1)
            .filter(|&n| (from..=to).contains(&n))
            .collect())
    }

    fn ensure_resolves(&self, n: u64) -> Result<()> {
        if self.reach() > n {
            Ok(())
        } else {
            Err(Error::IndexMapTooShort {
                last: self.last_k(),
                reach: self.reach(),
                needed: n,
            })
        }
    }
}

/// `|A ∩ [1, N]| / N`.
pub fn count_density(a: &IndexSet, n: u64) -> Result<Rational> {
    if n == 0 {
        return Err(Error::InvalidLadder("truncation must be positive".into()));
    }
    Ok(Rational::new(BigInt::from(a.count_up_to(n)?), BigInt::from(n)))
}

/// Counting-density samples along an increasing ladder of truncations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityProfile {
    pub ladder: Vec<u64>,
    pub counts: Vec<u64>,
    pub samples: Vec<Rational>,
    /// Minimum over the trailing half of the ladder.
    pub liminf_est: Rational,
    /// Maximum over the trailing half of the ladder.
    pub limsup_est: Rational,
}

#[derive(Serialize, Deserialize)]
struct ProfilePoint {
    n: u64,
    count: u64,
    ratio: RationalRecord,
}

#[derive(Serialize, Deserialize)]
struct ProfileRecord {
    points: Vec<ProfilePoint>,
    liminf_est: RationalRecord,
    limsup_est: RationalRecord,
}

impl Serialize for DensityProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProfileRecord {
            points: self
                .ladder
                .iter()
                .zip(&self.counts)
                .zip(&self.samples)
                .map(|((&n, &count), r)| ProfilePoint {
                    n,
                    count,
                    ratio: r.into(),
                })
                .collect(),
            liminf_est: (&self.liminf_est).into(),
            limsup_est: (&self.limsup_est).into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = ProfileRecord::deserialize(d)?;
        let mut ladder = Vec::new();
        let mut counts = Vec::new();
        for p in &rec.points {
            ladder.push(p.n);
            counts.push(p.count);
        }
        let profile = DensityProfile::from_counts(ladder, counts).map_err(D::Error::custom)?;
        for (p, s) in rec.points.iter().zip(&profile.samples) {
            if Rational::try_from(&p.ratio).map_err(D::Error::custom)? != *s {
                return Err(D::Error::custom(format!(
                    "ratio at N = {} disagrees with count",
                    p.n
                )));
            }
        }
        Ok(profile)
    }
}

pub(crate) fn check_ladder(ladder: &[u64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::InvalidLadder("empty ladder".into()));
    }
    if ladder[0] == 0 {
        return Err(Error::InvalidLadder("truncations must be positive".into()));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidLadder("ladder must be strictly increasing".into()));
    }
    Ok(())
}

/// `start, start·factor, ..., start·factor^(count-1)`.
pub fn geometric_ladder(start: u64, factor: u64, count: usize) -> Result<Vec<u64>> {
    if start == 0 || factor < 2 || count == 0 {
        return Err(Error::InvalidLadder(format!(
            "geometric ladder needs start ≥ 1, factor ≥ 2, count ≥ 1 (got {start}, {factor}, {count})"
        )));
    }
    let mut out = Vec::with_capacity(count);
    let mut x = start;
    for _ in 0..count {
        out.push(x);
        x = x
            .checked_mul(factor)
            .ok_or_else(|| Error::InvalidLadder("ladder overflows u64".into()))?;
    }
    Ok(out)
}

impl DensityProfile {
    pub fn from_counts(ladder: Vec<u64>, counts: Vec<u64>) -> Result<Self> {
        check_ladder(&ladder)?;
        if ladder.len() != counts.len() {
            return Err(Error::InvalidLadder("counts do not match ladder".into()));
        }
        let samples: Vec<Rational> = ladder
            .iter()
            .zip(&counts)
            .map(|(&n, &c)| {
                if c > n {
                    Err(Error::precondition(format!("count {c} exceeds truncation {n}")))
                } else {
                    Ok(Rational::new(BigInt::from(c), BigInt::from(n)))
                }
            })
            .collect::<Result<_>>()?;
        let tail = &samples[samples.len() / 2..];
        let liminf_est = tail.iter().min().cloned().unwrap_or_else(Rational::zero);
        let limsup_est = tail.iter().max().cloned().unwrap_or_else(Rational::zero);
        Ok(DensityProfile {
            ladder,
            counts,
            samples,
            liminf_est,
            limsup_est,
        })
    }

    pub fn last(&self) -> &Rational {
        self.samples.last().unwrap()
    }

    /// The trailing half of the samples, over which the estimates are taken.
    pub fn trailing(&self) -> &[Rational] {
        &self.samples[self.samples.len() / 2..]
    }

    /// `N,count,ratio` rows; ratios are exact decimals when they terminate and
    /// truncated to 20 places otherwise.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count,ratio\n");
        for ((n, c), r) in self.ladder.iter().zip(&self.counts).zip(&self.samples) {
            out.push_str(&format!("{n},{c},{}\n", rational::to_decimal_string(r, 20)));
        }
        out
    }
}

pub fn density_profile(a: &IndexSet, ladder: &[u64]) -> Result<DensityProfile> {
    check_ladder(ladder)?;
    let counts = ladder
        .iter()
        .map(|&n| a.count_up_to(n))
        .collect::<Result<Vec<_>>>()?;
    DensityProfile::from_counts(ladder.to_vec(), counts)
}

/// `L(A) ∩ [1, N]` for the given index map. The result is exact on
/// `[1, n_K - 1]`, where `K` is the last block both the map and `A` resolve.
pub fn lift(n_map: &IndexMap, a: &IndexSet, n: u64) -> Result<IndexSet> {
    n_map.ensure_resolves(n)?;
    let mut last_k = n_map.last_k();
    if let Some(h) = a.horizon() {
        last_k = last_k.min(h);
    }
    let horizon = n_map.at(last_k) - 1;
    if horizon < n {
        return Err(Error::HorizonExceeded {
            label: format!("L({})", a.label()),
            needed: n,
            horizon,
        });
    }
    let spans: Vec<(u64, u64)> = a
        .iter_up_to(last_k)?
        .filter(|&k| k >= 1)
        .map(|k| (n_map.at(k - 1), n_map.at(k) - 1))
        .collect();
    IndexSet::intervals(format!("L({})", a.label()), spans, a.extent(), Some(horizon))
}

/// `A - m = {n ∈ ℕ : n + m ∈ A}`.
pub fn translate(a: &IndexSet, m: u64) -> IndexSet {
    if m == 0 {
        return a.clone();
    }
    let horizon = a.horizon().map(|h| h.saturating_sub(m));
    let certificate = a.certificate().cloned();
    IndexSet {
        label: format!("{}-{m}", a.label()),
        repr: Repr::Translate(Box::new(a.clone()), m),
        extent: a.extent(),
        horizon,
        // |(A - m) ∩ [1,N]| ≤ |A ∩ [1,N+m]|
        certificate: certificate.map(|c| {
            ZeroDensityCertificate::new(format!("{} (shifted by {m})", c.claim()), move |n| c.bound(n + m))
        }),
    }
}

/// The exception set of `A ⊂* B` on `[1, N]`: members of `A` missing from `B`.
pub fn almost_subset(a: &IndexSet, b: &IndexSet, n: u64) -> Result<Vec<u64>> {
    b.ensure_known(n)?;
    Ok(a.iter_up_to(n)?.filter(|&x| !b.contains(x)).collect())
}

/// The exception set of `A =* B` on `[1, N]`: the symmetric difference.
pub fn almost_equal(a: &IndexSet, b: &IndexSet, n: u64) -> Result<Vec<u64>> {
    let mut out = almost_subset(a, b, n)?;
    out.extend(almost_subset(b, a, n)?);
    out.sort_unstable();
    Ok(out)
}

/// Outcome of checking the lifting laws on a finite family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftLawReport {
    pub truncation: u64,
    pub family_size: usize,
    pub pairs_checked: u64,
    pub union_ok: bool,
    pub intersection_ok: bool,
    pub difference_ok: bool,
    pub injective: bool,
    pub failures: Vec<String>,
}

impl LiftLawReport {
    pub fn all_hold(&self) -> bool {
        self.union_ok && self.intersection_ok && self.difference_ok && self.injective
    }
}

fn lift_finite(n_map: &IndexMap, a: &BTreeSet<u64>, n: u64) -> BTreeSet<u64> {
    a.iter()
        .filter(|&&k| k >= 1 && k <= n_map.last_k())
        .flat_map(|&k| n_map.at(k - 1)..n_map.at(k))
        .filter(|&x| x <= n)
        .collect()
}

/// Checks `L(A ∪ B) = L(A) ∪ L(B)`, `L(A ∩ B) = L(A) ∩ L(B)`,
/// `L(A ∖ B) = L(A) ∖ L(B)` on every ordered pair of the family, the same
/// union and intersection laws over the whole family, and injectivity.
pub fn check_lift_laws(n_map: &IndexMap, family: &[BTreeSet<u64>], n: u64) -> Result<LiftLawReport> {
    n_map.ensure_resolves(n)?;
    // Blocks past the map start at or after n_K > n and so cannot meet [1, n].
    let lifted: Vec<BTreeSet<u64>> = family.iter().map(|a| lift_finite(n_map, a, n)).collect();
    let mut report = LiftLawReport {
        truncation: n,
        family_size: family.len(),
        pairs_checked: 0,
        union_ok: true,
        intersection_ok: true,
        difference_ok: true,
        injective: true,
        failures: Vec::new(),
    };
    for (i, a) in family.iter().enumerate() {
        for (j, b) in family.iter().enumerate() {
            report.pairs_checked += 1;
            let (la, lb) = (&lifted[i], &lifted[j]);
            let union: BTreeSet<u64> = a.union(b).copied().collect();
            if lift_finite(n_map, &union, n) != la.union(lb).copied().collect() {
                report.union_ok = false;
                report
                    .failures
                    .push(format!("union law fails for sets #{i}, #{j}"));
            }
            let inter: BTreeSet<u64> = a.intersection(b).copied().collect();
            if lift_finite(n_map, &inter, n) != la.intersection(lb).copied().collect() {
                report.intersection_ok = false;
                report
                    .failures
                    .push(format!("intersection law fails for sets #{i}, #{j}"));
            }
            let diff: BTreeSet<u64> = a.difference(b).copied().collect();
            if lift_finite(n_map, &diff, n) != la.difference(lb).copied().collect() {
                report.difference_ok = false;
                report
                    .failures
                    .push(format!("difference law fails for sets #{i}, #{j}"));
            }
            if i < j && a != b && la == lb {
                report.injective = false;
                report
                    .failures
                    .push(format!("sets #{i} and #{j} lift to the same set"));
            }
        }
    }
    if !family.is_empty() {
        let big_union: BTreeSet<u64> = family.iter().flatten().copied().collect();
        let lifted_union: BTreeSet<u64> = lifted.iter().flatten().copied().collect();
        if lift_finite(n_map, &big_union, n) != lifted_union {
            report.union_ok = false;
            report
                .failures
                .push("union law fails over the whole family".into());
        }
        let big_inter = family[1..]
            .iter()
            .fold(family[0].clone(), |acc, s| acc.intersection(s).copied().collect());
        let lifted_inter = lifted[1..]
            .iter()
            .fold(lifted[0].clone(), |acc, s| acc.intersection(s).copied().collect());
        if lift_finite(n_map, &big_inter, n) != lifted_inter {
            report.intersection_ok = false;
            report
                .failures
                .push("intersection law fails over the whole family".into());
        }
    }
    Ok(report)
}

/// How the ratios `b_n` behave along an index set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum BClass {
    Bounded { bound: u64 },
    Divergent,
    Mixed,
    Inconclusive,
}

/// Classifies `A` as `b`-bounded or `b`-divergent, using what the base knows
/// about its own growth plus the sample `A ∩ [1, K]`.
pub fn classify_b(a: &IndexSet, base: &RatioSequence, k_max: u64) -> Result<BClass> {
    let members = a.members_up_to(k_max)?;
    if members.is_empty() {
        return Err(Error::precondition(format!(
            "`{}` has no members in [1, {k_max}]",
            a.label()
        )));
    }
    let mut sample_max = 0;
    for &n in &members {
        sample_max = sample_max.max(base.ratio(n)?);
    }
    if a.extent() == Extent::Finite {
        return Ok(BClass::Bounded { bound: sample_max });
    }
    Ok(match base.growth() {
        RatioGrowth::Bounded(_) => BClass::Bounded { bound: sample_max },
        RatioGrowth::Divergent => match a.extent() {
            Extent::Infinite => BClass::Divergent,
            _ => BClass::Inconclusive,
        },
        RatioGrowth::BoundedOffSparse { bound, exceptional } => {
            let hits = members.iter().filter(|&&n| exceptional.contains(n)).count();
            if hits == 0 {
                BClass::Bounded { bound: *bound }
            } else if hits == members.len() {
                BClass::Divergent
            } else {
                BClass::Mixed
            }
        }
        RatioGrowth::Unknown => BClass::Inconclusive,
    })
}
