//! Named bases and sequences, and the JSON schedule format for finitely
//! specified prefixes: `{"b": [b_1, ..., b_L], "R": {"k": [r, ...], ...}}`.
//! Levels missing from `R` use `{1}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radix::RatioSequence;
use crate::seqgen::{
    check_block, full_selection, minimal_selection, prop32_base, thm39_variant, EnumeratedSequence,
    SelectionSchedule, Thm39Variant,
};

pub const SEQUENCE_PRESETS: &[&str] = &[
    "binary",
    "factorial",
    "double",
    "prop32",
    "thm39-full-even",
    "thm39-geometric",
];

/// Resolves a base id as written in digit records.
pub fn base_by_id(id: &str) -> Result<RatioSequence> {
    match id {
        "binary" => Ok(RatioSequence::binary()),
        "factorial" => Ok(RatioSequence::factorial()),
        "double" => Ok(RatioSequence::double()),
        "prop32" => Ok(prop32_base()),
        _ => {
            if let Some(list) = id.strip_prefix("custom:") {
                let ratios = list
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::Parse(format!("bad ratio `{s}` in `{id}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                RatioSequence::from_list(ratios)
            } else if let Some(v) = id.strip_prefix("constant-") {
                let b = v
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad constant base `{id}`")))?;
                RatioSequence::constant(b)
            } else {
                Err(Error::Parse(format!("unknown base `{id}`")))
            }
        }
    }
}

/// A named sequence. Plain bases give `(a_n)` itself, or `(d_n)` with `full`.
pub fn sequence_preset(name: &str, full: bool) -> Result<EnumeratedSequence> {
    match name {
        "thm39-full-even" => Ok(thm39_variant(Thm39Variant::FullEven)),
        "thm39-geometric" => Ok(thm39_variant(Thm39Variant::Geometric)),
        "binary" | "factorial" | "double" | "prop32" => {
            let base = base_by_id(name)?;
            Ok(EnumeratedSequence::new(if full {
                full_selection(&base)
            } else {
                minimal_selection(&base)
            }))
        }
        _ => Err(Error::Parse(format!(
            "unknown preset `{name}` (known: {})",
            SEQUENCE_PRESETS.join(", ")
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSchedule {
    pub b: Vec<u64>,
    #[serde(rename = "R", default)]
    pub r: BTreeMap<u64, Vec<u64>>,
}

impl CustomSchedule {
    pub fn build(&self) -> Result<EnumeratedSequence> {
        let base = RatioSequence::from_list(self.b.clone())?;
        for (&k, r) in &self.r {
            if k == 0 || k as usize > self.b.len() {
                return Err(Error::Parse(format!(
                    "R has level {k} outside [1, {}]",
                    self.b.len()
                )));
            }
            check_block("custom", k, self.b[k as usize - 1], r)?;
        }
        let table = Arc::new(self.r.clone());
        Ok(EnumeratedSequence::new(SelectionSchedule::new(
            "custom",
            &base,
            move |k, _| Ok(table.get(&k).cloned().unwrap_or_else(|| vec![1])),
        )))
    }
}

pub fn parse_custom_schedule(json: &str) -> Result<EnumeratedSequence> {
    let spec: CustomSchedule =
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("schedule JSON: {e}")))?;
    spec.build()
}
