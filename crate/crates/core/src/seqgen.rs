//! Arithmetic-type sequences `(a_n) ⊆ (e_n) ⊆ (d_n)` built from per-level
//! multiplier sets.
//!
//! A schedule picks `R_k ⊆ [1, b_k - 1]` with `1 ∈ R_k` for each `k ≥ 1`.
//! Block `k` of the sequence is `r · a_{k-1}` for `r ∈ R_k`, occupying term
//! indices `n_{k-1} .. n_k - 1`, where `n_0 = 1` and `n_k = n_{k-1} + |R_k|`.
//! So `e_{n_k} = a_k`.

use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::density::{IndexMap, IndexSet};
use crate::error::{Error, Result};
use crate::radix::{build_ratio_sequence, RatioGrowth, RatioSequence};

type SelectRule = dyn Fn(u64, u64) -> Result<Vec<u64>> + Send + Sync;

#[derive(Clone)]
enum Selector {
    /// `R_k = [1, b_k - 1]`.
    Full,
    /// `R_k = {1}`.
    Minimal,
    /// `(k, b_k) ↦ R_k`.
    Rule(Arc<SelectRule>),
}

/// Per-level multiplier sets over a base. Blocks are computed on demand and
/// checked when used; only the index map is cached.
#[derive(Clone)]
pub struct SelectionSchedule {
    label: String,
    base: RatioSequence,
    selector: Selector,
    n_cache: Arc<RwLock<Vec<u64>>>,
}

impl fmt::Debug for SelectionSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelectionSchedule")
            .field("label", &self.label)
            .field("base", &self.base)
            .finish()
    }
}

pub(crate) fn check_block(label: &str, k: u64, b: u64, r: &[u64]) -> Result<()> {
    let bad = |reason: String| Error::InvalidSchedule {
        label: label.to_owned(),
        k,
        reason,
    };
    match r.first() {
        None => return Err(bad("empty block".into())),
        Some(&first) if first != 1 => return Err(bad(format!("1 ∉ R_{k}"))),
        _ => {}
    }
    if r.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("multipliers are not strictly increasing".into()));
    }
    let last = *r.last().unwrap();
    if last >= b {
        return Err(bad(format!(
            "multiplier {last} is outside [1, b_{k} - 1] = [1, {}]",
            b - 1
        )));
    }
    Ok(())
}

impl SelectionSchedule {
    fn with_selector(label: impl Into<String>, base: &RatioSequence, selector: Selector) -> Self {
        SelectionSchedule {
            label: label.into(),
            base: base.clone(),
            selector,
            n_cache: Arc::new(RwLock::new(vec![1])),
        }
    }

    /// A schedule from `(k, b_k) ↦ R_k`. Nothing is checked until a block is
    /// used; see [`make_arithmetic_type`] for eager checking.
    pub fn new(
        label: impl Into<String>,
        base: &RatioSequence,
        select: impl Fn(u64, u64) -> Result<Vec<u64>> + Send + Sync + 'static,
    ) -> Self {
        SelectionSchedule::with_selector(label, base, Selector::Rule(Arc::new(select)))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn base(&self) -> &RatioSequence {
        &self.base
    }

    pub fn is_full(&self) -> bool {
        matches!(self.selector, Selector::Full)
    }

    /// `R_k` as the rule produced it, unchecked.
    pub fn raw_block(&self, k: u64) -> Result<Vec<u64>> {
        let b = self.base.ratio(k)?;
        match &self.selector {
            Selector::Full => Ok((1..b).collect()),
            Selector::Minimal => Ok(vec![1]),
            Selector::Rule(f) => f(k, b),
        }
    }

    /// `R_k`, checked against `1 ∈ R_k ⊆ [1, b_k - 1]` and strict order.
    pub fn block(&self, k: u64) -> Result<Vec<u64>> {
        let r = self.raw_block(k)?;
        if let Selector::Rule(_) = self.selector {
            check_block(&self.label, k, self.base.ratio(k)?, &r)?;
        }
        Ok(r)
    }

    fn block_len(&self, k: u64) -> Result<u64> {
        match self.selector {
            Selector::Full => Ok(self.base.ratio(k)? - 1),
            Selector::Minimal => {
                self.base.ratio(k)?;
                Ok(1)
            }
            Selector::Rule(_) => Ok(self.block(k)?.len() as u64),
        }
    }

    /// Extends the cached index map until `done(n_0..n_K)` holds.
    fn extend_until(&self, mut done: impl FnMut(&[u64]) -> bool) -> Result<Vec<u64>> {
        {
            let cache = self.n_cache.read().unwrap();
            if done(&cache) {
                return Ok(cache.clone());
            }
        }
        let mut cache = self.n_cache.write().unwrap();
        while !done(&cache) {
            let k = cache.len() as u64;
            let len = self.block_len(k)?;
            let next = cache.last().unwrap() + len;
            cache.push(next);
        }
        Ok(cache.clone())
    }

    /// `n_k`.
    pub fn n(&self, k: u64) -> Result<u64> {
        let v = self.extend_until(|c| c.len() as u64 > k)?;
        Ok(v[k as usize])
    }

    /// `n_0, ..., n_K`.
    pub fn index_map(&self, k_max: u64) -> Result<IndexMap> {
        let mut v = self.extend_until(|c| c.len() as u64 > k_max)?;
        v.truncate(k_max as usize + 1);
        IndexMap::new(v)
    }

    /// The shortest map `n_0, ..., n_K` with `n_K > n`, which resolves every
    /// term index in `[1, n]`.
    pub fn index_map_reaching(&self, n: u64) -> Result<IndexMap> {
        let mut v = self.extend_until(|c| *c.last().unwrap() > n)?;
        let k = v.partition_point(|&x| x <= n);
        v.truncate(k + 1);
        IndexMap::new(v)
    }

    /// The number of blocks that can be built, up to `cap`, and the error that
    /// stopped construction if any.
    pub fn valid_prefix(&self, cap: u64) -> (u64, Option<Error>) {
        for k in 1..=cap {
            if let Err(e) = self.n(k) {
                return (k - 1, Some(e));
            }
        }
        (cap, None)
    }
}

/// The enumerated sequence `(e_j)` of a schedule.
#[derive(Clone, Debug)]
pub struct EnumeratedSequence {
    schedule: SelectionSchedule,
}

impl EnumeratedSequence {
    /// Wraps a schedule without checking any block.
    pub fn new(schedule: SelectionSchedule) -> Self {
        EnumeratedSequence { schedule }
    }

    pub fn schedule(&self) -> &SelectionSchedule {
        &self.schedule
    }

    /// The same selection over the base with a different bit budget.
    pub fn with_bit_budget(&self, bits: u64) -> Self {
        let mut schedule = self.schedule.clone();
        schedule.base = schedule.base.clone().with_bit_budget(bits);
        schedule.n_cache = Arc::new(RwLock::new(vec![1]));
        EnumeratedSequence { schedule }
    }

    pub fn base(&self) -> &RatioSequence {
        &self.schedule.base
    }

    pub fn label(&self) -> &str {
        &self.schedule.label
    }

    /// The block `k` and multiplier `r` with `e_j = r · a_{k-1}`.
    pub fn locate(&self, j: u64) -> Result<(u64, u64)> {
        if j == 0 {
            return Err(Error::precondition("terms are indexed from 1"));
        }
        let map = self.schedule.index_map_reaching(j)?;
        let k = map.block_of(j).expect("map reaches past j");
        let block = self.schedule.block(k)?;
        Ok((k, block[(j - map.at(k - 1)) as usize]))
    }

    pub fn term(&self, j: u64) -> Result<BigUint> {
        let (k, r) = self.locate(j)?;
        Ok(self.base().prefix(k - 1)?.as_ref() * BigUint::from(r))
    }

    /// `e_1, ..., e_N`.
    pub fn enumerate_terms(&self, n: u64) -> Result<Vec<BigUint>> {
        let map = self.schedule.index_map_reaching(n)?;
        let mut out = Vec::with_capacity(n as usize);
        'blocks: for k in 1..=map.last_k() {
            let a = self.base().prefix(k - 1)?;
            for r in self.schedule.block(k)? {
                if out.len() as u64 == n {
                    break 'blocks;
                }
                out.push(a.as_ref() * BigUint::from(r));
            }
        }
        Ok(out)
    }
}

/// `R_k = [1, b_k - 1]`: the full non-arithmetic sequence `(d_n)`.
pub fn full_selection(base: &RatioSequence) -> SelectionSchedule {
    SelectionSchedule::with_selector(format!("{}/full", base.id()), base, Selector::Full)
}

/// `R_k = {1}`: the arithmetic sequence `(a_n)` itself, `e_j = a_{j-1}`.
pub fn minimal_selection(base: &RatioSequence) -> SelectionSchedule {
    SelectionSchedule::with_selector(format!("{}/minimal", base.id()), base, Selector::Minimal)
}

/// Blocks checked eagerly by [`make_arithmetic_type`].
pub const EAGER_BLOCKS: u64 = 4;

/// Builds `(e_n)` from a multiplier rule, checking the first
/// [`EAGER_BLOCKS`] blocks (or fewer, if the base is a shorter prefix).
pub fn make_arithmetic_type(
    label: impl Into<String>,
    base: &RatioSequence,
    select: impl Fn(u64, u64) -> Result<Vec<u64>> + Send + Sync + 'static,
) -> Result<EnumeratedSequence> {
    let schedule = SelectionSchedule::new(label, base, select);
    for k in 1..=EAGER_BLOCKS {
        match schedule.block(k) {
            Ok(_) => {}
            Err(Error::UndefinedRatio { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(EnumeratedSequence::new(schedule))
}

/// Whether blocks `1..=K` sit between `(a_n)` and `(d_n)`:
/// `{a_{k-1}} ⊆ {r a_{k-1} : r ∈ R_k} ⊆ {r a_{k-1} : 1 ≤ r < b_k}`.
pub fn validate_sandwich(e: &EnumeratedSequence, k_max: u64) -> Result<bool> {
    for k in 1..=k_max {
        let b = e.base().ratio(k)?;
        let r = e.schedule.raw_block(k)?;
        if !r.contains(&1) || r.iter().any(|&x| x == 0 || x >= b) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One block `[l_j, m_j]` of the density-one set `D` and its last position
/// `s_j` in the enumeration of `D` (so `n_{s_j} = m_j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DBlock {
    pub j: u64,
    pub l: u64,
    pub m: u64,
    pub s: u64,
}

/// The non-`b`-bounded base whose every arithmetic-type sequence is
/// `L`-invariant, together with the literal construction of `D`.
#[derive(Debug, Clone)]
pub struct Prop32 {
    pub base: RatioSequence,
    pub blocks: Vec<DBlock>,
    /// `D ∩ [1, m_{j_max}]` enumerated, `n_0 = 1 < n_1 < ...`.
    pub d: Vec<u64>,
}

/// `s_j = (j(j+1)/2)² + j - 1`, the enumeration position of `m_j`.
pub fn prop32_s(j: u64) -> u64 {
    let t = j * (j + 1) / 2;
    t * t + j - 1
}

/// `b_k` of the construction in closed form: `j + 1` at `k = s_j + 1`, else 2.
pub fn prop32_ratio(k: u64) -> u64 {
    let target = k - 1;
    // s_j ≈ j⁴/4, so j ≈ (4 target)^{1/4}
    let guess = ((4.0 * target as f64).sqrt().sqrt()) as u64;
    for j in guess.saturating_sub(2).max(1)..=guess + 2 {
        if prop32_s(j) == target {
            return j + 1;
        }
    }
    2
}

/// `{s_j + 1 : j ≥ 1}`.
pub fn prop32_divergent_set() -> IndexSet {
    IndexSet::generated("{s_j+1}", |j| prop32_s(j) + 1)
}

/// The closed-form base, exact for every `k`.
pub fn prop32_base() -> RatioSequence {
    build_ratio_sequence("prop32", |k| Some(prop32_ratio(k)))
        .expect("ratios are at least 2")
        .with_growth(RatioGrowth::BoundedOffSparse {
            bound: 2,
            exceptional: prop32_divergent_set(),
        })
}

/// Builds `D = ∪ [l_j, m_j]` with `l_1 = 1`, `m_j - l_j = j³`,
/// `l_{j+1} - m_j = j`, enumerates it, and reads `b_{k+1} = n_{k+1} - n_k + 1`
/// off the enumeration for `j ≤ j_max`.
pub fn prop32_sequence(j_max: u64) -> Result<Prop32> {
    if j_max == 0 {
        return Err(Error::precondition("prop32 needs j_max ≥ 1"));
    }
    let mut blocks = Vec::new();
    let mut d = Vec::new();
    let mut l = 1u64;
    for j in 1..=j_max {
        let m = l + j * j * j;
        d.extend(l..=m);
        blocks.push(DBlock {
            j,
            l,
            m,
            s: d.len() as u64 - 1,
        });
        l = m + j;
    }
    let literal: Arc<Vec<u64>> = Arc::new(d.windows(2).map(|w| w[1] - w[0] + 1).collect());
    let table = Arc::clone(&literal);
    let tabulated = build_ratio_sequence("prop32", move |k| table.get((k - 1) as usize).copied())?;
    let closed = prop32_base();
    for k in 1..=literal.len() as u64 {
        if tabulated.ratio(k)? != closed.ratio(k)? {
            return Err(Error::violation(
                "prop32 closed form",
                k,
                format!("enumeration gives b = {}", tabulated.ratio(k)?),
            ));
        }
    }
    Ok(Prop32 {
        base: closed,
        blocks,
        d,
    })
}

/// The two readings of the `b_n = 2n` construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Thm39Variant {
    /// `R_k = ({1} ∪ 2ℕ) ∩ [1, 2k - 1]`, so `n_k - n_{k-1} = k = b_k / 2`.
    FullEven,
    /// `n_k = 2 n_{k-1} - n_0`, taking the first `n_k - n_{k-1}` admissible
    /// multipliers; unsatisfiable from `k = 5` on.
    Geometric,
}

/// `({1} ∪ 2ℕ) ∩ [1, b - 1]`.
fn one_and_evens(b: u64) -> Vec<u64> {
    std::iter::once(1).chain((2..b).step_by(2)).collect()
}

pub fn thm39_variant(variant: Thm39Variant) -> EnumeratedSequence {
    let base = RatioSequence::double();
    let schedule = match variant {
        Thm39Variant::FullEven => {
            SelectionSchedule::new("thm39-full-even", &base, |_, b| Ok(one_and_evens(b)))
        }
        Thm39Variant::Geometric => SelectionSchedule::new("thm39-geometric", &base, |k, b| {
            // n_1 - n_0 = 1 and n_k - n_{k-1} = n_{k-1} - n_0 = 2^{k-2} after
            let needed = if k == 1 { 1 } else { 1u64 << (k - 2).min(63) };
            let admissible = one_and_evens(b);
            if needed > admissible.len() as u64 {
                return Err(Error::Unsatisfiable {
                    label: "thm39-geometric".into(),
                    k,
                    needed,
                    available: admissible.len() as u64,
                });
            }
            Ok(admissible[..needed as usize].to_vec())
        }),
    };
    EnumeratedSequence::new(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn small(v: Vec<BigUint>) -> Vec<u64> {
        v.into_iter().map(|x| x.to_u64().unwrap()).collect()
    }

    #[test]
    fn zeta_prefix() {
        let e = EnumeratedSequence::new(full_selection(&RatioSequence::factorial()));
        assert_eq!(
            small(e.enumerate_terms(8).unwrap()),
            vec![1, 2, 4, 6, 12, 18, 24, 48]
        );
        assert_eq!(e.schedule().index_map(3).unwrap().as_slice(), &[1, 2, 4, 7]);
    }

    #[test]
    fn binary_full_is_minimal() {
        let b = RatioSequence::binary();
        let full = EnumeratedSequence::new(full_selection(&b));
        let min = EnumeratedSequence::new(minimal_selection(&b));
        assert_eq!(small(full.enumerate_terms(5).unwrap()), vec![1, 2, 4, 8, 16]);
        assert_eq!(
            full.enumerate_terms(12).unwrap(),
            min.enumerate_terms(12).unwrap()
        );
    }

    #[test]
    fn minimal_on_factorial_is_a() {
        let f = RatioSequence::factorial();
        let e = make_arithmetic_type("min", &f, |_, _| Ok(vec![1])).unwrap();
        assert_eq!(small(e.enumerate_terms(5).unwrap()), vec![1, 2, 6, 24, 120]);
    }

    #[test]
    fn rejects_bad_blocks() {
        let f = RatioSequence::factorial();
        let err = make_arithmetic_type("no-one", &f, |k, _| Ok(if k == 2 { vec![2] } else { vec![1] }))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidSchedule { k: 2, .. }));
        let err = make_arithmetic_type("unsorted", &f, |k, b| {
            Ok(if k == 3 { vec![1, 3, 2] } else { (1..b).collect() })
        })
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSchedule { k: 3, .. }));
        let err = make_arithmetic_type("range", &f, |_, b| Ok(vec![1, b])).unwrap_err();
        assert!(matches!(err, Error::InvalidSchedule { k: 1, .. }));
    }

    #[test]
    fn sandwich_examples() {
        let f = RatioSequence::factorial();
        let full = EnumeratedSequence::new(full_selection(&f));
        assert!(validate_sandwich(&full, 10).unwrap());
        let hand = EnumeratedSequence::new(SelectionSchedule::new("hand", &f, |k, _| {
            Ok(if k == 2 { vec![2] } else { vec![1] })
        }));
        assert!(!validate_sandwich(&hand, 3).unwrap());
        assert!(validate_sandwich(&hand, 1).unwrap());
    }

    #[test]
    fn full_even_blocks() {
        let e = thm39_variant(Thm39Variant::FullEven);
        assert_eq!(e.schedule().block(1).unwrap(), vec![1]);
        assert_eq!(e.schedule().block(2).unwrap(), vec![1, 2]);
        assert_eq!(e.schedule().block(3).unwrap(), vec![1, 2, 4]);
        let n = e.schedule().index_map(3).unwrap();
        assert_eq!(n.as_slice(), &[1, 2, 4, 7]);
        assert_eq!(small(e.enumerate_terms(4).unwrap()), vec![1, 2, 4, 8]);
    }

    #[test]
    fn geometric_fails_at_five() {
        let e = thm39_variant(Thm39Variant::Geometric);
        assert_eq!(e.schedule().index_map(4).unwrap().as_slice(), &[1, 2, 3, 5, 9]);
        let (valid, err) = e.schedule().valid_prefix(10);
        assert_eq!(valid, 4);
        assert_eq!(
            err,
            Some(Error::Unsatisfiable {
                label: "thm39-geometric".into(),
                k: 5,
                needed: 8,
                available: 5
            })
        );
    }

    #[test]
    fn sparse_divergent_blocks() {
        let p = prop32_sequence(3).unwrap();
        assert_eq!((p.blocks[0].l, p.blocks[0].m, p.blocks[0].s), (1, 2, 1));
        assert_eq!((p.blocks[1].l, p.blocks[1].m), (3, 11));
        assert_eq!(p.blocks[1].s, prop32_s(2));
        assert_eq!(p.base.ratio(p.blocks[0].s + 1).unwrap(), 2);
        assert_eq!(p.base.ratio(p.blocks[1].s + 1).unwrap(), 3);
        // full-selection index map of the base is the enumeration of D
        let full = full_selection(&p.base);
        let n = full.index_map(p.d.len() as u64 - 1).unwrap();
        assert_eq!(n.as_slice(), p.d.as_slice());
    }

    #[test]
    fn locate_and_term() {
        let e = EnumeratedSequence::new(full_selection(&RatioSequence::factorial()));
        assert_eq!(e.locate(5).unwrap(), (3, 2));
        assert_eq!(e.term(7).unwrap().to_u64(), Some(24));
        assert!(e.locate(0).is_err());
    }

    #[test]
    fn custom_prefix_runs_out() {
        let c = RatioSequence::from_list(vec![2, 3, 5]).unwrap();
        let e = EnumeratedSequence::new(full_selection(&c));
        assert_eq!(small(e.enumerate_terms(7).unwrap()), vec![1, 2, 4, 6, 12, 18, 24]);
        assert!(matches!(
            e.enumerate_terms(8),
            Err(Error::UndefinedRatio { k: 4, .. })
        ));
    }
}
