//! Mixed-radix expansions of circle elements relative to an arithmetic
//! sequence `1 = a_0 < a_1 < ...` with ratios `b_k = a_k / a_{k-1} ≥ 2`.
//!
//! An element `x ∈ [0, 1)` is written canonically as `x = Σ c_n / a_n` with
//! `0 ≤ c_n ≤ b_n - 1` and `c_n < b_n - 1` infinitely often. Digits are
//! 1-based: `c_1` is the coefficient of `1 / a_1`.
//!
//! Elements are either finitely supported digit maps or rationals `p / q`
//! whose digits are produced on demand by greedy extraction.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::density::IndexSet;
use crate::error::{Error, Result};
use crate::rational::{frac, norm_int, rat_big, rat_int, Rational};

/// Prefix products beyond this many bits are refused.
pub const DEFAULT_BIT_BUDGET: u64 = 1_000_000;

/// Ratios checked eagerly when a sequence is built.
pub const PROBE_DEPTH: u64 = 64;

/// What is known about how `(b_n)` grows, used to classify index sets as
/// `b`-bounded or `b`-divergent without guessing from samples.
#[derive(Debug, Clone)]
pub enum RatioGrowth {
    /// `b_n ≤ bound` for every `n`.
    Bounded(u64),
    /// `b_n` is nondecreasing and unbounded, so it diverges along every
    /// infinite index set.
    Divergent,
    /// `b_n ≤ bound` off `exceptional`, and `b_n → ∞` along `exceptional`.
    BoundedOffSparse {
        bound: u64,
        exceptional: IndexSet,
    },
    Unknown,
}

type RatioRule = dyn Fn(u64) -> Option<u64> + Send + Sync;

struct RatioInner {
    id: String,
    rule: Arc<RatioRule>,
    growth: RatioGrowth,
    bit_budget: u64,
    /// a_0, a_1, ... computed so far.
    prefix: RwLock<Vec<Arc<BigUint>>>,
}

/// The ratio stream `(b_k)` and its lazily cached prefix products `(a_k)`.
///
/// Cloning is cheap and clones share the cache. The cache grows under a write
/// lock; reads proceed concurrently.
#[derive(Clone)]
pub struct RatioSequence(Arc<RatioInner>);

impl fmt::Debug for RatioSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RatioSequence").field(&self.0.id).finish()
    }
}

impl PartialEq for RatioSequence {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.id == other.0.id
    }
}

/// Builds a ratio sequence from `k ↦ b_k`. A rule returning `None` is
/// undefined from that `k` on (finitely specified prefixes). The first
/// [`PROBE_DEPTH`] ratios are checked immediately; later ones on first use.
pub fn build_ratio_sequence(
    id: impl Into<String>,
    rule: impl Fn(u64) -> Option<u64> + Send + Sync + 'static,
) -> Result<RatioSequence> {
    let seq = RatioSequence(Arc::new(RatioInner {
        id: id.into(),
        rule: Arc::new(rule),
        growth: RatioGrowth::Unknown,
        bit_budget: DEFAULT_BIT_BUDGET,
        prefix: RwLock::new(vec![Arc::new(BigUint::one())]),
    }));
    for k in 1..=PROBE_DEPTH {
        match seq.ratio(k) {
            Ok(_) => {}
            Err(Error::UndefinedRatio { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(seq)
}

impl RatioSequence {
    fn rebuilt(&self, growth: RatioGrowth, bit_budget: u64) -> Self {
        RatioSequence(Arc::new(RatioInner {
            id: self.0.id.clone(),
            rule: Arc::clone(&self.0.rule),
            growth,
            bit_budget,
            prefix: RwLock::new(vec![Arc::new(BigUint::one())]),
        }))
    }

    pub fn with_growth(self, growth: RatioGrowth) -> Self {
        let budget = self.0.bit_budget;
        self.rebuilt(growth, budget)
    }

    pub fn with_bit_budget(self, bits: u64) -> Self {
        let growth = self.0.growth.clone();
        self.rebuilt(growth, bits)
    }

    pub fn id(&self) -> &str {
        &self.0.id
    }

    pub fn growth(&self) -> &RatioGrowth {
        &self.0.growth
    }

    pub fn bit_budget(&self) -> u64 {
        self.0.bit_budget
    }

    /// `b_k` for `k ≥ 1`.
    pub fn ratio(&self, k: u64) -> Result<u64> {
        assert!(k >= 1, "ratios are indexed from 1");
        match (self.0.rule)(k) {
            None => Err(Error::UndefinedRatio {
                id: self.0.id.clone(),
                k,
            }),
            Some(b) if b < 2 => Err(Error::NonArithmetic {
                id: self.0.id.clone(),
                k,
                value: b,
            }),
            Some(b) => Ok(b),
        }
    }

    /// `a_k = b_1 ··· b_k`, with `a_0 = 1`.
    pub fn prefix(&self, k: u64) -> Result<Arc<BigUint>> {
        let idx = usize::try_from(k).map_err(|_| Error::precondition("index too large"))?;
        {
            let cache = self.0.prefix.read().unwrap();
            if let Some(a) = cache.get(idx) {
                return Ok(Arc::clone(a));
            }
        }
        let mut cache = self.0.prefix.write().unwrap();
        while cache.len() <= idx {
            let next_k = cache.len() as u64;
            let b = self.ratio(next_k)?;
            let a = cache.last().unwrap().as_ref() * BigUint::from(b);
            if a.bits() > self.0.bit_budget {
                return Err(Error::BitBudget {
                    id: self.0.id.clone(),
                    k: next_k,
                    bits: a.bits(),
                    budget: self.0.bit_budget,
                });
            }
            cache.push(Arc::new(a));
        }
        Ok(Arc::clone(&cache[idx]))
    }

    /// `b_from ··· b_to = a_to / a_{from-1}`; the empty product is 1.
    pub fn ratio_product(&self, from: u64, to: u64) -> Result<BigUint> {
        let mut p = BigUint::one();
        for k in from..=to {
            p *= self.ratio(k)?;
        }
        Ok(p)
    }

    pub fn ratios(&self, upto: u64) -> Result<Vec<u64>> {
        (1..=upto).map(|k| self.ratio(k)).collect()
    }

    /// `b ≡ value`.
    pub fn constant(value: u64) -> Result<Self> {
        let id = if value == 2 {
            "binary".to_owned()
        } else {
            format!("constant-{value}")
        };
        Ok(build_ratio_sequence(id, move |_| Some(value))?.with_growth(RatioGrowth::Bounded(value)))
    }

    /// `b_k = 2`, so `a_k = 2^k`.
    pub fn binary() -> Self {
        RatioSequence::constant(2).expect("constant 2 is arithmetic")
    }

    /// `b_k = k + 1`, so `a_k = (k + 1)!`.
    pub fn factorial() -> Self {
        build_ratio_sequence("factorial", |k| Some(k + 1))
            .expect("k + 1 ≥ 2")
            .with_growth(RatioGrowth::Divergent)
    }

    /// `b_k = 2k`, so `a_k = 2^k k!`.
    pub fn double() -> Self {
        build_ratio_sequence("double", |k| Some(2 * k))
            .expect("2k ≥ 2")
            .with_growth(RatioGrowth::Divergent)
    }

    /// A finitely specified prefix `b_1, ..., b_L`; undefined past `L`.
    pub fn from_list(ratios: Vec<u64>) -> Result<Self> {
        let id = format!(
            "custom:{}",
            ratios.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
        );
        let ratios = Arc::new(ratios);
        build_ratio_sequence(id, move |k| ratios.get((k - 1) as usize).copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum DigitSource {
    Finite(BTreeMap<u64, u64>),
    /// `num / den` in lowest terms, `num < den`.
    Rational {
        num: BigUint,
        den: BigUint,
    },
}

/// A circle element in canonical digits relative to a ratio sequence.
#[derive(Debug, Clone)]
pub struct DigitExpansion {
    base: RatioSequence,
    source: DigitSource,
}

impl DigitExpansion {
    pub fn zero(base: &RatioSequence) -> Self {
        DigitExpansion {
            base: base.clone(),
            source: DigitSource::Finite(BTreeMap::new()),
        }
    }

    /// A finitely supported element; zero digits are dropped.
    pub fn from_digits(base: &RatioSequence, digits: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, c) in digits {
            if n == 0 {
                return Err(Error::precondition("digits are indexed from 1"));
            }
            let b = base.ratio(n)?;
            if c >= b {
                return Err(Error::DigitOutOfRange {
                    n,
                    digit: c,
                    ratio: b,
                });
            }
            if c != 0 {
                map.insert(n, c);
            }
        }
        Ok(DigitExpansion {
            base: base.clone(),
            source: DigitSource::Finite(map),
        })
    }

    /// The element `p / q`, which must lie in `[0, 1)`.
    pub fn from_rational(base: &RatioSequence, p: &BigUint, q: &BigUint) -> Result<Self> {
        if q.is_zero() || p >= q {
            return Err(Error::OutOfUnitInterval {
                value: format!("{p}/{q}"),
            });
        }
        let g = p.gcd(q);
        Ok(DigitExpansion {
            base: base.clone(),
            source: DigitSource::Rational {
                num: p / &g,
                den: q / &g,
            },
        })
    }

    pub fn base(&self) -> &RatioSequence {
        &self.base
    }

    /// `Some(map)` for finitely supported elements.
    pub fn finite_digits(&self) -> Option<&BTreeMap<u64, u64>> {
        match &self.source {
            DigitSource::Finite(m) => Some(m),
            DigitSource::Rational { .. } => None,
        }
    }

    /// The largest `n` with `c_n ≠ 0`, for finitely supported elements.
    pub fn support_max(&self) -> Option<u64> {
        self.finite_digits()
            .map(|m| m.keys().next_back().copied().unwrap_or(0))
    }

    /// `c_1, ..., c_N` (index 0 holds `c_1`).
    pub fn digits_prefix(&self, n: u64) -> Result<Vec<u64>> {
        match &self.source {
            DigitSource::Finite(m) => {
                for k in 1..=n {
                    self.base.ratio(k)?;
                }
                Ok((1..=n).map(|k| m.get(&k).copied().unwrap_or(0)).collect())
            }
            DigitSource::Rational { num, den } => greedy_digits(num, den, &self.base, n),
        }
    }

    pub fn digit(&self, n: u64) -> Result<u64> {
        match &self.source {
            DigitSource::Finite(m) => Ok(m.get(&n).copied().unwrap_or(0)),
            DigitSource::Rational { .. } => Ok(*self.digits_prefix(n)?.last().unwrap_or(&0)),
        }
    }

    /// The finitely supported element with digits `c_1..c_M` of `self`.
    pub fn truncated(&self, m: u64) -> Result<Self> {
        let digits = match &self.source {
            DigitSource::Finite(map) => map.range(..=m).map(|(&k, &c)| (k, c)).collect(),
            DigitSource::Rational { .. } => self
                .digits_prefix(m)?
                .into_iter()
                .enumerate()
                .map(|(i, c)| (i as u64 + 1, c))
                .collect::<Vec<_>>(),
        };
        DigitExpansion::from_digits(&self.base, digits)
    }

    /// Resolves an optional truncation into a finitely supported element.
    pub(crate) fn resolve(&self, truncation: Option<u64>) -> Result<Self> {
        match (truncation, &self.source) {
            (Some(m), _) => self.truncated(m),
            (None, DigitSource::Finite(_)) => Ok(self.clone()),
            (None, DigitSource::Rational { .. }) => Err(Error::UnboundedSource),
        }
    }

    /// The exact value as `(numerator, denominator)` in lowest terms.
    pub fn value_parts(&self) -> Result<(BigUint, BigUint)> {
        match &self.source {
            DigitSource::Rational { num, den } => Ok((num.clone(), den.clone())),
            DigitSource::Finite(_) => {
                let m = self.support_max().unwrap_or(0);
                let (t, a) = horner(self, 1, m)?;
                let g = t.gcd(&a);
                Ok((t / &g, a / &g))
            }
        }
    }

    pub fn value(&self) -> Result<Rational> {
        let (p, q) = self.value_parts()?;
        Ok(rat_big(&p, &q))
    }

    /// `{n : c_n ≠ 0} ∩ [1, N]`.
    pub fn supp(&self, n: u64) -> Result<IndexSet> {
        let digits = self.digits_prefix(n)?;
        Ok(IndexSet::finite(
            "supp(x)",
            digits
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(i, _)| i as u64 + 1),
        ))
    }

    /// `{n : c_n = b_n - 1} ∩ [1, N]`.
    pub fn supp_b(&self, n: u64) -> Result<IndexSet> {
        let digits = self.digits_prefix(n)?;
        let mut members = Vec::new();
        for (i, &c) in digits.iter().enumerate() {
            let k = i as u64 + 1;
            if c == self.base.ratio(k)? - 1 {
                members.push(k);
            }
        }
        Ok(IndexSet::finite("supp_b(x)", members))
    }

    /// Wire form. Rational sources are materialized to `n` digits.
    pub fn to_record(&self, n: Option<u64>) -> Result<DigitRecord> {
        let digits = match (&self.source, n) {
            (DigitSource::Finite(m), None) => m.clone(),
            (_, Some(n)) => self
                .digits_prefix(n)?
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c != 0)
                .map(|(i, c)| (i as u64 + 1, c))
                .collect(),
            (DigitSource::Rational { .. }, None) => return Err(Error::UnboundedSource),
        };
        Ok(DigitRecord {
            base: self.base.id().to_owned(),
            digits: digits.into_iter().map(|(k, c)| (k, c.to_string())).collect(),
        })
    }

    pub fn from_record(
        rec: &DigitRecord,
        resolve_base: impl FnOnce(&str) -> Result<RatioSequence>,
    ) -> Result<Self> {
        let base = resolve_base(&rec.base)?;
        let digits = rec
            .digits
            .iter()
            .map(|(&k, c)| {
                c.parse::<u64>()
                    .map(|c| (k, c))
                    .map_err(|_| Error::Parse(format!("bad digit `{c}` at {k}")))
            })
            .collect::<Result<Vec<_>>>()?;
        DigitExpansion::from_digits(&base, digits)
    }
}

/// `{"base": "<id>", "digits": {"n": "c_n", ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitRecord {
    pub base: String,
    #[serde(with = "string_keys")]
    pub digits: BTreeMap<u64, String>,
}

// integer map keys only parse back when deserialized directly, not from the
// buffered content that tagged and untagged enums go through
mod string_keys {
    use super::*;

    pub fn serialize<S: serde::Serializer>(
        v: &BTreeMap<u64, String>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(v.iter().map(|(k, c)| (k.to_string(), c)))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<u64, String>, D::Error> {
        BTreeMap::<String, String>::deserialize(d)?
            .into_iter()
            .map(|(k, c)| Ok((k.parse().map_err(serde::de::Error::custom)?, c)))
            .collect()
    }
}

fn greedy_digits(p: &BigUint, q: &BigUint, base: &RatioSequence, n: u64) -> Result<Vec<u64>> {
    let mut rem = p.clone();
    let mut out = Vec::with_capacity(n as usize);
    for k in 1..=n {
        let b = base.ratio(k)?;
        let t = rem * BigUint::from(b);
        let (c, r) = t.div_rem(q);
        out.push(c.to_u64().expect("digit below b_k"));
        rem = r;
    }
    Ok(out)
}

/// Greedy canonical digits of `p / q`: `c_n = ⌊b_n x_{n-1}⌋`,
/// `x_n = b_n x_{n-1} - c_n`, starting from `x_0 = p / q`.
///
/// Greedy extraction never ends in an all-`(b_n - 1)` tail for `x < 1`, so
/// this is the canonical expansion.
pub fn canonical_digits(p: &BigUint, q: &BigUint, base: &RatioSequence, n: u64) -> Result<Vec<u64>> {
    if q.is_zero() || p >= q {
        return Err(Error::OutOfUnitInterval {
            value: format!("{p}/{q}"),
        });
    }
    greedy_digits(p, q, base, n)
}

/// `Σ_{i=from}^{to} c_i · (b_{i+1} ··· b_to)` together with `b_from ··· b_to`,
/// so that the pair is `Σ_{i=from}^{to} c_i / (b_from ··· b_i)`.
fn horner(x: &DigitExpansion, from: u64, to: u64) -> Result<(BigUint, BigUint)> {
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    if to < from {
        return Ok((num, den));
    }
    let digits = x.digits_prefix(to)?;
    for k in from..=to {
        let b = x.base.ratio(k)?;
        num = num * BigUint::from(b) + BigUint::from(digits[(k - 1) as usize]);
        den *= BigUint::from(b);
    }
    Ok((num, den))
}

/// `Σ_{n ≤ N} c_n / a_n`.
pub fn eval_prefix(x: &DigitExpansion, n: u64) -> Result<Rational> {
    let upto = match x.support_max() {
        Some(m) => m.min(n),
        None => n,
    };
    let (num, den) = horner(x, 1, upto)?;
    Ok(rat_big(&num, &den))
}

/// `Σ_{i=j}^{M} c_i / a_i`.
pub fn tail_sum(x: &DigitExpansion, j: u64, m: u64) -> Result<Rational> {
    if m < j {
        return Ok(Rational::zero());
    }
    let (num, den) = horner(x, j, m)?;
    let a = x.base.prefix(j - 1)?;
    Ok(rat_big(&num, &(den * a.as_ref())))
}

/// `1 / a_{j-1}`, which bounds every tail `Σ_{i ≥ j} c_i / a_i`.
pub fn tail_bound(base: &RatioSequence, j: u64) -> Result<Rational> {
    if j == 0 {
        return Err(Error::precondition("tail bound needs j ≥ 1"));
    }
    let a = base.prefix(j - 1)?;
    Ok(rat_big(&BigUint::one(), &a))
}

/// `{a_{n-1} x}` computed as the fractional part of `a_{n-1} · Σ_{i≤M} c_i / a_i`.
///
/// `n = 1` reads `{a_0 x} = {x}`. Without a truncation the element must be
/// finitely supported.
pub fn frac_multiple(x: &DigitExpansion, n: u64, truncation: Option<u64>) -> Result<Rational> {
    if n == 0 {
        return Err(Error::precondition("frac_multiple needs n ≥ 1"));
    }
    let x = x.resolve(truncation)?;
    let m = x.support_max().unwrap_or(0);
    let v = eval_prefix(&x, m)?;
    let a = x.base.prefix(n - 1)?;
    Ok(frac(&(v * rat_int(BigInt::from(a.as_ref().clone())))))
}

/// The telescoped form
/// `c_n/b_n + c_{n+1}/(b_n b_{n+1}) + ... + c_{n+t}/(b_n···b_{n+t}) + {a_{n+t} x}/(b_n···b_{n+t})`.
///
/// The identity is usually stated for `n > 1`; it is checked here for `n = 1`
/// as well, where the left side is `{x}`.
pub fn frac_multiple_expanded(
    x: &DigitExpansion,
    n: u64,
    t: u64,
    truncation: Option<u64>,
) -> Result<Rational> {
    if n == 0 {
        return Err(Error::precondition("frac_multiple needs n ≥ 1"));
    }
    let x = x.resolve(truncation)?;
    let mut sum = Rational::zero();
    let mut den = BigUint::one();
    for i in n..=n + t {
        den *= BigUint::from(x.base.ratio(i)?);
        let c = x.digit(i)?;
        if c != 0 {
            sum += rat_big(&BigUint::from(c), &den);
        }
    }
    let rest = frac_multiple(&x, n + t + 1, None)?;
    Ok(sum + rest / rat_big(&den, &BigUint::one()))
}

/// Both sides of the telescoping identity for `{a_{n-1} x}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub n: u64,
    pub t: u64,
    #[serde(with = "crate::rational::exact")]
    pub direct: Rational,
    #[serde(with = "crate::rational::exact")]
    pub expanded: Rational,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.direct == self.expanded
    }
}

pub fn check_frac_identity(
    x: &DigitExpansion,
    n: u64,
    t: u64,
    truncation: Option<u64>,
) -> Result<IdentityCheck> {
    Ok(IdentityCheck {
        n,
        t,
        direct: frac_multiple(x, n, truncation)?,
        expanded: frac_multiple_expanded(x, n, t, truncation)?,
    })
}

/// Whether a scaling law's hypothesis held, and if so whether its
/// conclusion did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawStatus {
    NotApplicable,
    Holds,
    Violated,
}

/// `{r v}` and `‖r v‖`, with the two scaling laws checked exactly:
/// `r{v} < 1 ⇒ {r v} = r{v}` and `r‖v‖ < 1/2 ⇒ ‖r v‖ = r‖v‖`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledFrac {
    pub frac: Rational,
    pub norm: Rational,
    pub frac_law: LawStatus,
    pub norm_law: LawStatus,
}

pub fn scaled_frac_laws(r: u64, v: &Rational) -> ScaledFrac {
    let r_q = rat_int(BigInt::from(r));
    let rv = &r_q * v;
    let f = frac(&rv);
    let nrm = norm_int(&rv);
    let r_frac = &r_q * frac(v);
    let r_norm = &r_q * norm_int(v);
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let status = |applies: bool, ok: bool| match (applies, ok) {
        (false, _) => LawStatus::NotApplicable,
        (true, true) => LawStatus::Holds,
        (true, false) => LawStatus::Violated,
    };
    ScaledFrac {
        frac_law: status(r_frac < Rational::one(), f == r_frac),
        norm_law: status(r_norm < half, nrm == r_norm),
        frac: f,
        norm: nrm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn prefix_products() {
        let b = RatioSequence::binary();
        let a: Vec<u64> = (0..5).map(|k| b.prefix(k).unwrap().to_u64().unwrap()).collect();
        assert_eq!(a, vec![1, 2, 4, 8, 16]);
        let f = RatioSequence::factorial();
        let a: Vec<u64> = (0..5).map(|k| f.prefix(k).unwrap().to_u64().unwrap()).collect();
        assert_eq!(a, vec![1, 2, 6, 24, 120]);
        let d = RatioSequence::double();
        let a: Vec<u64> = (0..4).map(|k| d.prefix(k).unwrap().to_u64().unwrap()).collect();
        assert_eq!(a, vec![1, 2, 8, 48]);
    }

    #[test]
    fn rejects_non_arithmetic_rule() {
        let err = build_ratio_sequence("bad", |k| Some(if k == 5 { 1 } else { 3 })).unwrap_err();
        assert_eq!(
            err,
            Error::NonArithmetic {
                id: "bad".into(),
                k: 5,
                value: 1
            }
        );
        // past the probe depth, the error surfaces on first use
        let late = build_ratio_sequence("late", |k| Some(if k == 100 { 0 } else { 2 })).unwrap();
        assert!(matches!(
            late.prefix(100),
            Err(Error::NonArithmetic { k: 100, .. })
        ));
    }

    #[test]
    fn bit_budget_is_enforced() {
        let b = RatioSequence::binary().with_bit_budget(10);
        assert!(b.prefix(9).is_ok());
        assert!(matches!(b.prefix(10), Err(Error::BitBudget { k: 10, .. })));
    }

    #[test]
    fn custom_prefix_is_finite() {
        let c = RatioSequence::from_list(vec![2, 3, 5]).unwrap();
        assert_eq!(c.id(), "custom:2,3,5");
        assert_eq!(c.prefix(3).unwrap().to_u64(), Some(30));
        assert!(matches!(c.ratio(4), Err(Error::UndefinedRatio { k: 4, .. })));
    }

    #[test]
    fn canonical_digit_examples() {
        let b = RatioSequence::binary();
        assert_eq!(
            canonical_digits(&big(5), &big(8), &b, 4).unwrap(),
            vec![1, 0, 1, 0]
        );
        assert_eq!(canonical_digits(&big(0), &big(1), &b, 5).unwrap(), vec![0; 5]);
        assert_eq!(
            canonical_digits(&big(1), &big(3), &b, 6).unwrap(),
            vec![0, 1, 0, 1, 0, 1]
        );
        assert!(canonical_digits(&big(3), &big(3), &b, 2).is_err());
        assert!(canonical_digits(&big(1), &big(0), &b, 2).is_err());
    }

    #[test]
    fn eval_prefix_examples() {
        let b = RatioSequence::binary();
        assert!(eval_prefix(&DigitExpansion::zero(&b), 10).unwrap().is_zero());
        let x = DigitExpansion::from_digits(&b, [(1, 1), (3, 1)]).unwrap();
        assert_eq!(eval_prefix(&x, 3).unwrap(), rat(5, 8));
        let f = RatioSequence::factorial();
        let full = DigitExpansion::from_digits(&f, (1..=6).map(|n| (n, n))).unwrap();
        let a6 = f.prefix(6).unwrap();
        assert_eq!(
            eval_prefix(&full, 6).unwrap(),
            Rational::one() - rat_big(&BigUint::one(), &a6)
        );
    }

    #[test]
    fn tail_bound_examples() {
        assert_eq!(tail_bound(&RatioSequence::binary(), 4).unwrap(), rat(1, 8));
        assert_eq!(tail_bound(&RatioSequence::double(), 1).unwrap(), rat(1, 1));
        assert_eq!(tail_bound(&RatioSequence::factorial(), 3).unwrap(), rat(1, 6));
    }

    #[test]
    fn frac_multiple_examples() {
        let b = RatioSequence::binary();
        let x = DigitExpansion::from_digits(&b, [(1, 1), (3, 1)]).unwrap();
        assert_eq!(frac_multiple(&x, 2, None).unwrap(), rat(1, 4));
        assert_eq!(frac_multiple_expanded(&x, 2, 0, None).unwrap(), rat(1, 4));
        assert_eq!(frac_multiple_expanded(&x, 2, 1, None).unwrap(), rat(1, 4));
        assert_eq!(frac_multiple(&x, 1, None).unwrap(), rat(5, 8));
        let zero = DigitExpansion::zero(&b);
        assert!(frac_multiple(&zero, 7, None).unwrap().is_zero());
    }

    #[test]
    fn frac_multiple_needs_truncation_for_rationals() {
        let b = RatioSequence::binary();
        let third = DigitExpansion::from_rational(&b, &big(1), &big(3)).unwrap();
        assert_eq!(frac_multiple(&third, 2, None), Err(Error::UnboundedSource));
        // truncated to 1/4 + 1/16 = 5/16; a_1 · 5/16 = 5/8
        assert_eq!(frac_multiple(&third, 2, Some(4)).unwrap(), rat(5, 8));
    }

    #[test]
    fn scaled_law_examples() {
        let s = scaled_frac_laws(3, &rat(1, 8));
        assert_eq!((s.frac.clone(), s.norm.clone()), (rat(3, 8), rat(3, 8)));
        assert_eq!((s.frac_law, s.norm_law), (LawStatus::Holds, LawStatus::Holds));
        let v = rat(7, 5);
        let s = scaled_frac_laws(1, &v);
        assert_eq!((s.frac, s.norm), (frac(&v), norm_int(&v)));
        let s = scaled_frac_laws(2, &rat(3, 8));
        assert_eq!((s.frac.clone(), s.norm.clone()), (rat(3, 4), rat(1, 4)));
        assert_eq!(s.norm_law, LawStatus::NotApplicable);
        assert_eq!(s.frac_law, LawStatus::Holds);
    }

    #[test]
    fn support_examples() {
        let b = RatioSequence::binary();
        let zero = DigitExpansion::zero(&b);
        assert!(zero.supp(10).unwrap().members_up_to(10).unwrap().is_empty());
        assert!(zero.supp_b(10).unwrap().members_up_to(10).unwrap().is_empty());
        let x = DigitExpansion::from_digits(&b, [(1, 1), (3, 1)]).unwrap();
        assert_eq!(x.supp(5).unwrap().members_up_to(5).unwrap(), vec![1, 3]);
        assert_eq!(x.supp_b(5).unwrap().members_up_to(5).unwrap(), vec![1, 3]);
        let f = RatioSequence::factorial();
        let y = DigitExpansion::from_digits(&f, [(2, 2), (4, 1)]).unwrap();
        assert_eq!(y.supp(6).unwrap().members_up_to(6).unwrap(), vec![2, 4]);
        assert_eq!(y.supp_b(6).unwrap().members_up_to(6).unwrap(), vec![2]);
    }

    #[test]
    fn digit_range_is_checked() {
        let f = RatioSequence::factorial();
        assert!(matches!(
            DigitExpansion::from_digits(&f, [(2, 3)]),
            Err(Error::DigitOutOfRange {
                n: 2,
                digit: 3,
                ratio: 3
            })
        ));
    }

    #[test]
    fn record_roundtrip() {
        let f = RatioSequence::factorial();
        let y = DigitExpansion::from_digits(&f, [(2, 2), (10, 7)]).unwrap();
        let rec = y.to_record(None).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(json, r#"{"base":"factorial","digits":{"2":"2","10":"7"}}"#);
        let back: DigitRecord = serde_json::from_str(&json).unwrap();
        let z = DigitExpansion::from_record(&back, |_| Ok(f.clone())).unwrap();
        assert_eq!(z.value().unwrap(), y.value().unwrap());
    }

    #[test]
    fn rational_value_is_reduced() {
        let b = RatioSequence::binary();
        let x = DigitExpansion::from_rational(&b, &big(2), &big(6)).unwrap();
        assert_eq!(x.value_parts().unwrap(), (big(1), big(3)));
        let t = x.truncated(6).unwrap();
        assert_eq!(
            t.finite_digits().unwrap().keys().copied().collect::<Vec<_>>(),
            vec![2, 4, 6]
        );
    }
}
