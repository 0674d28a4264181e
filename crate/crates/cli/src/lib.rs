//! Argument model, subcommand runners and report types behind the
//! `circlestat` binary. Every report is serde-typed so that scripts (and the
//! tests) can read it back.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use circlestat_core::classify::{
    check_prop34_cover, lemma31_rate_check, lemma38_block_bound, test_l_invariant, test_strong_non_l,
    test_weak_l_invariant, weak_witness_prop34, BlockBoundRow, CoverCheck, InvarianceReport, Lemma31Report,
    Prop34Witness,
};
use circlestat_core::membership::{
    self, default_eps_grid, not_in_t_evidence, sparse_support, thm39_sandwich, verdict, witness_half_digits,
    witness_patterns, witness_theorem35, Lemma37Report, MembershipReport, NotInTReport, PatternReport,
    SandwichReport, Thm35Report,
};
use circlestat_core::presets::{parse_custom_schedule, sequence_preset};
use circlestat_core::radix::{canonical_digits, check_frac_identity, DEFAULT_BIT_BUDGET};
use circlestat_core::rational::{self, to_decimal_string};
use circlestat_core::seqgen::prop32_divergent_set;
use circlestat_core::{
    geometric_ladder, lift, parse_rational, DensityProfile, DigitExpansion, DigitRecord, EnumeratedSequence,
    Error, IndexSet, RatioSequence, Rational, Result,
};

/// Environment variable read for the worker thread count.
pub const THREADS_ENV: &str = "CIRCLESTAT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "circlestat",
    version,
    about = "Exact experiments on characterized subgroups of the circle"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// binary, factorial, double, prop32, thm39-full-even, thm39-geometric.
    #[arg(long, global = true, default_value = "factorial")]
    pub preset: String,
    /// Use the full selection R_k = [1, b_k - 1] on a plain base.
    #[arg(long, global = true)]
    pub full: bool,
    /// Schedule JSON file, `{"b": [...], "R": {"k": [...]}}`; overrides --preset.
    #[arg(long, global = true)]
    pub schedule: Option<PathBuf>,
    /// Ladder `start · factor^i`; defaults to 1000 · 2^i, 8 points, or
    /// 1000 · 10^i, 5 points, for `classify`.
    #[arg(long, global = true)]
    pub ladder_start: Option<u64>,
    #[arg(long, global = true)]
    pub ladder_factor: Option<u64>,
    #[arg(long, global = true)]
    pub ladder_count: Option<usize>,
    /// Density tolerance; defaults to 1/100, or 1/1000 for `classify`.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    /// Seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest bit length allowed for any a_n.
    #[arg(long, global = true, default_value_t = DEFAULT_BIT_BUDGET)]
    pub bit_budget: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// First N terms of the sequence and its index map.
    GenSeq {
        #[arg(short = 'n', default_value_t = 20)]
        n: u64,
    },
    /// Canonical digits of a rational in [0, 1).
    Digits {
        #[arg(long)]
        value: String,
        #[arg(short = 'n', default_value_t = 20)]
        n: u64,
    },
    /// L(A) for an index set.
    Lift {
        #[command(flatten)]
        set: SetArgs,
        /// Truncation; defaults to the end of the last lifted block of a finite set.
        #[arg(short = 'n')]
        n: Option<u64>,
    },
    /// Density profile of A, or of L(A) with --lifted.
    Density {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        lifted: bool,
    },
    /// Invariance tests and the finite forms of the supporting lemmas.
    Classify {
        #[arg(long, value_enum, default_value_t = Check::LInvariant)]
        check: Check,
        #[command(flatten)]
        set: SetArgs,
        /// Translates A - m, m ≤ this, for the weak test and cover check.
        #[arg(long, default_value_t = 3)]
        m_max: u64,
    },
    /// Exceedance profiles and a membership verdict.
    Member {
        #[command(flatten)]
        element: ElementArgs,
        /// Comma-separated ε grid.
        #[arg(long, default_value = "1/4,1/8,1/16,1/32")]
        eps: String,
    },
    /// Witness constructions with their proof chains checked exactly.
    Witness {
        #[arg(long, value_enum)]
        kind: WitnessKind,
        #[arg(long, default_value = "1/8")]
        eps: String,
        /// Terms `e_1..e_n` to check; level-wise checks cover the levels these reach.
        #[arg(short = 'n', default_value_t = 10_000)]
        n: u64,
        /// Fixed gap for the sandwich check; adaptive when omitted.
        #[arg(long)]
        m: Option<u64>,
        /// Pattern bits for `patterns` (at most 20); each pattern reruns the chain.
        #[arg(long, default_value_t = 4)]
        bits: u32,
        #[command(flatten)]
        witness: WitnessArgs,
    },
    /// Randomized checks of the telescoping identity for {a_{n-1} x}.
    VerifyIdentities {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    LInvariant,
    WeaklyLInvariant,
    StronglyNonLInvariant,
    CoverRate,
    Prop34Cover,
    BlockBound,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// supp(x) ⊆ A for the recursion set A; chain outside B.
    SupportSubset,
    /// The support-subset chain for each of 2^bits digit patterns.
    Patterns,
    /// c_n = ⌊b_n/2⌋ on the recursion set; bounds at support points.
    HalfDigits,
    /// c_n = ⌊b_n/2⌋ on {l_k}; the sandwich inequalities.
    Sandwich,
    /// The small-digit criterion on a finite element.
    SmallDigits,
}

#[derive(Args, Debug, Clone)]
pub struct SetArgs {
    /// squares, evens, naturals, powers-of-two, prop32-divergent, sparse,
    /// witness, `a..b`, or a comma list.
    #[arg(long, default_value = "squares")]
    pub set: String,
    #[command(flatten)]
    pub witness: WitnessArgs,
}

#[derive(Args, Debug, Clone)]
pub struct WitnessArgs {
    /// Steps of the recursion for `witness` sets.
    #[arg(long, default_value_t = 30)]
    pub j_max: u64,
    /// Largest block searched by the recursion.
    #[arg(long, default_value_t = 5000)]
    pub k_cap: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ElementArgs {
    /// A rational p/q in [0, 1).
    #[arg(long, conflicts_with_all = ["digits", "half_digits_on"])]
    pub value: Option<String>,
    /// Finite digits `n:c,n:c,...`.
    #[arg(long, conflicts_with = "half_digits_on")]
    pub digits: Option<String>,
    /// c_n = ⌊b_n/2⌋ on this set (same syntax as --set).
    #[arg(long)]
    pub half_digits_on: Option<String>,
    #[command(flatten)]
    pub witness: WitnessArgs,
}

/// Shell exit code for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_proof_violation() {
        2
    } else {
        1
    }
}

/// Reads the thread count from [`THREADS_ENV`] and sizes the global pool.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Parse(format!("{THREADS_ENV}={v} is not a thread count")))?;
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSeqReport {
    pub sequence: String,
    pub terms: Vec<String>,
    /// `n_0, n_1, ...` up to the first leader past the last term.
    pub index_map: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitsReport {
    #[serde(with = "rational::exact")]
    pub value: Rational,
    pub base: String,
    pub digits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftReport {
    pub sequence: String,
    pub set: String,
    pub truncation: u64,
    pub lifted: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityReport {
    pub sequence: String,
    pub set: String,
    pub lifted: bool,
    pub profile: DensityProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum ClassifyReport {
    Invariance(InvarianceReport),
    CoverRate(Lemma31Report),
    Prop34Cover {
        witness: Prop34Witness,
        covers: Vec<CoverCheck>,
    },
    BlockBound {
        rows: Vec<BlockBoundRow>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessReport {
    SupportSubset(Thm35Report),
    Patterns(PatternReport),
    HalfDigits {
        element: DigitRecord,
        evidence: NotInTReport,
        membership: MembershipReport,
    },
    Sandwich(SandwichReport),
    SmallDigits(Lemma37Report),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityTrial {
    pub base: String,
    #[serde(with = "rational::exact")]
    pub x: Rational,
    pub n: u64,
    pub t: u64,
    pub general: bool,
    pub two_term: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub trials: u64,
    pub failures: u64,
    pub log: Vec<IdentityTrial>,
}

/// A finished report in both renderings.
pub struct Rendered {
    pub json: String,
    pub csv: String,
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn dec(v: &Rational) -> String {
    to_decimal_string(v, 20)
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(contents)?;
    f.sync_all()?;
    fs::rename(&tmp, path)
}

pub fn sequence(common: &Common) -> Result<EnumeratedSequence> {
    let e = match &common.schedule {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|err| Error::Parse(format!("{}: {err}", path.display())))?;
            parse_custom_schedule(&text)?
        }
        None => sequence_preset(&common.preset, common.full)?,
    };
    Ok(e.with_bit_budget(common.bit_budget))
}

/// `(start, factor, count)` when no ladder flag is given.
pub const PROFILE_LADDER: (u64, u64, usize) = (1000, 2, 8);
pub const CLASSIFY_LADDER: (u64, u64, usize) = (1000, 10, 5);
/// Sets whose lifts are sampled at block ends by `classify`.
pub const BLOCK_CONSTRUCTIONS: [&str; 2] = ["witness", "prop32-divergent"];
pub const PROFILE_TOL: &str = "1/100";
pub const CLASSIFY_TOL: &str = "1/1000";

pub fn ladder(common: &Common, (start, factor, count): (u64, u64, usize)) -> Result<Vec<u64>> {
    geometric_ladder(
        common.ladder_start.unwrap_or(start),
        common.ladder_factor.unwrap_or(factor),
        common.ladder_count.unwrap_or(count),
    )
}

fn recursion_witness(e: &EnumeratedSequence, w: &WitnessArgs) -> Result<Prop34Witness> {
    let witness = weak_witness_prop34(e, w.j_max, w.k_cap)?;
    if witness.u.len() < 2 {
        return Err(Error::precondition(format!(
            "the recursion stalled before u_2 within k ≤ {}",
            w.k_cap
        )));
    }
    Ok(witness)
}

/// Resolves a set spec against a sequence.
pub fn parse_set(spec: &str, e: &EnumeratedSequence, w: &WitnessArgs) -> Result<IndexSet> {
    Ok(match spec.trim() {
        "squares" => IndexSet::squares(),
        "evens" => IndexSet::evens(),
        "naturals" => IndexSet::naturals(),
        "powers-of-two" => IndexSet::powers_of_two(),
        "prop32-divergent" => prop32_divergent_set(),
        "sparse" => sparse_support(),
        "witness" => recursion_witness(e, w)?.set(),
        s => {
            let bad = || Error::Parse(format!("bad set `{s}`"));
            if let Some((a, b)) = s.split_once("..") {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().parse().map_err(|_| bad())?;
                IndexSet::finite(s, a..=b)
            } else {
                let members = s
                    .split(',')
                    .map(|p| p.trim().parse::<u64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                IndexSet::finite(format!("{{{s}}}"), members)
            }
        }
    })
}

fn parse_value(s: &str) -> Result<(BigUint, BigUint)> {
    let v = parse_rational(s)?;
    let out = || Error::OutOfUnitInterval { value: s.to_owned() };
    if v < Rational::from_integer(0.into()) || v >= Rational::from_integer(1.into()) {
        return Err(out());
    }
    Ok((
        v.numer().to_biguint().ok_or_else(out)?,
        v.denom().to_biguint().ok_or_else(out)?,
    ))
}

fn parse_element(args: &ElementArgs, e: &EnumeratedSequence, horizon: u64) -> Result<DigitExpansion> {
    if let Some(v) = &args.value {
        let (p, q) = parse_value(v)?;
        return DigitExpansion::from_rational(e.base(), &p, &q);
    }
    if let Some(d) = &args.digits {
        let digits = d
            .split(',')
            .map(|pair| {
                let bad = || Error::Parse(format!("bad digit `{pair}` (want n:c)"));
                let (n, c) = pair.split_once(':').ok_or_else(bad)?;
                Ok((
                    n.trim().parse().map_err(|_| bad())?,
                    c.trim().parse().map_err(|_| bad())?,
                ))
            })
            .collect::<Result<Vec<(u64, u64)>>>()?;
        return DigitExpansion::from_digits(e.base(), digits);
    }
    if let Some(spec) = &args.half_digits_on {
        let a = parse_set(spec, e, &args.witness)?;
        let upto = match a.horizon() {
            Some(h) => h.min(horizon),
            None => horizon,
        };
        return witness_half_digits(&a, e.base(), upto);
    }
    Err(Error::precondition("give --value, --digits or --half-digits-on"))
}

fn parse_eps_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(parse_rational).collect()
}

/// Levels needed for `n` terms, plus room for the next support points.
fn element_horizon(e: &EnumeratedSequence, n: u64) -> Result<u64> {
    let k = e.schedule().index_map_reaching(n)?.last_k();
    Ok(2 * k + 2)
}

pub fn run(cli: &Cli) -> Result<Rendered> {
    let common = &cli.common;
    let default_tol = match cli.command {
        Command::Classify { .. } => CLASSIFY_TOL,
        _ => PROFILE_TOL,
    };
    let tol = parse_rational(common.tol.as_deref().unwrap_or(default_tol))?;
    if tol <= Rational::from_integer(0.into()) {
        return Err(Error::precondition("--tol must be positive"));
    }
    let e = sequence(common)?;
    match &cli.command {
        Command::GenSeq { n } => {
            let terms = e.enumerate_terms(*n)?;
            let index_map = e.schedule().index_map_reaching(*n)?.as_slice().to_vec();
            let report = GenSeqReport {
                sequence: e.label().to_owned(),
                terms: terms.iter().map(|t| t.to_string()).collect(),
                index_map,
            };
            let mut csv = String::from("j,term\n");
            for (j, t) in report.terms.iter().enumerate() {
                csv.push_str(&format!("{},{t}\n", j + 1));
            }
            Ok(Rendered {
                json: json(&report),
                csv,
            })
        }
        Command::Digits { value, n } => {
            let (p, q) = parse_value(value)?;
            let digits = canonical_digits(&p, &q, e.base(), *n)?;
            let report = DigitsReport {
                value: parse_rational(value)?,
                base: e.base().id().to_owned(),
                digits,
            };
            let mut csv = String::from("n,digit\n");
            for (i, c) in report.digits.iter().enumerate() {
                csv.push_str(&format!("{},{c}\n", i + 1));
            }
            Ok(Rendered {
                json: json(&report),
                csv,
            })
        }
        Command::Lift { set, n } => {
            let a = parse_set(&set.set, &e, &set.witness)?;
            let truncation = match (n, a.last_member_up_to(u64::MAX)) {
                (Some(n), _) => *n,
                (None, Ok(Some(k))) => e.schedule().n(k)? - 1,
                (None, Ok(None)) => 1,
                (None, Err(_)) => return Err(Error::precondition("infinite set: give -n")),
            };
            let n_map = e.schedule().index_map_reaching(truncation)?;
            let lifted = lift(&n_map, &a, truncation)?.members_up_to(truncation)?;
            let report = LiftReport {
                sequence: e.label().to_owned(),
                set: a.label().to_owned(),
                truncation,
                lifted,
            };
            let mut csv = String::from("j\n");
            for j in &report.lifted {
                csv.push_str(&format!("{j}\n"));
            }
            Ok(Rendered {
                json: json(&report),
                csv,
            })
        }
        Command::Density { set, lifted } => {
            let a = parse_set(&set.set, &e, &set.witness)?;
            let ladder = ladder(common, PROFILE_LADDER)?;
            let profile = if *lifted {
                let n_map = e.schedule().index_map_reaching(*ladder.last().unwrap())?;
                circlestat_core::classify::lifted_profile(&n_map, &a, &ladder)?
            } else {
                circlestat_core::density_profile(&a, &ladder)?
            };
            let csv = profile.to_csv();
            let report = DensityReport {
                sequence: e.label().to_owned(),
                set: a.label().to_owned(),
                lifted: *lifted,
                profile,
            };
            Ok(Rendered {
                json: json(&report),
                csv,
            })
        }
        Command::Classify { check, set, m_max } => run_classify(common, &e, *check, set, *m_max, &tol),
        Command::Member { element, eps } => {
            let ladder = ladder(common, PROFILE_LADDER)?;
            let horizon = element_horizon(&e, *ladder.last().unwrap())?;
            let x = parse_element(element, &e, horizon)?;
            let report = verdict(&x, &e, &parse_eps_list(eps)?, &ladder, &tol)?;
            Ok(Rendered {
                json: json(&report),
                csv: membership_csv(&report),
            })
        }
        Command::Witness {
            kind,
            eps,
            n,
            m,
            bits,
            witness,
        } => {
            let eps = parse_rational(eps)?;
            run_witness(common, &e, *kind, &eps, (*n, *m, *bits), witness, &tol)
        }
        Command::VerifyIdentities { trials } => {
            let report = verify_identities(common.seed, *trials)?;
            let mut csv = String::from("base,x,n,t,general,two_term\n");
            for t in &report.log {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    t.base, t.x, t.n, t.t, t.general, t.two_term
                ));
            }
            let rendered = Rendered {
                json: json(&report),
                csv,
            };
            if report.failures > 0 {
                return Err(Error::violation(
                    "telescoping identity",
                    report.failures,
                    "identity failed on some trials",
                ));
            }
            Ok(rendered)
        }
    }
}

fn membership_csv(report: &MembershipReport) -> String {
    let mut csv = String::from("eps,n,count,ratio\n");
    for (eps, p) in &report.profiles {
        for ((n, c), r) in p.ladder.iter().zip(&p.counts).zip(&p.samples) {
            csv.push_str(&format!("{eps},{n},{c},{}\n", dec(r)));
        }
    }
    csv
}

fn proofs_csv(proofs: &[membership::ProofEntry]) -> String {
    let mut csv = String::from("check,checked,violations\n");
    for p in proofs {
        csv.push_str(&format!(
            "\"{}\",{},{}\n",
            p.check.replace('"', "\"\""),
            p.checked,
            p.violations
        ));
    }
    csv
}

fn invariance_csv(r: &InvarianceReport) -> String {
    let mut csv = String::from("label,n,count,ratio\n");
    for ev in &r.evidence {
        for ((n, c), s) in ev
            .profile
            .ladder
            .iter()
            .zip(&ev.profile.counts)
            .zip(&ev.profile.samples)
        {
            csv.push_str(&format!("\"{}\",{n},{c},{}\n", ev.label, dec(s)));
        }
    }
    csv
}

/// Block constructions are sampled at their lifted block ends unless a
/// ladder is given.
fn classify_ladder(common: &Common, e: &EnumeratedSequence, set: &SetArgs) -> Result<Vec<u64>> {
    let geometric = ladder(common, CLASSIFY_LADDER)?;
    let flags = [
        common.ladder_start.is_some(),
        common.ladder_factor.is_some(),
        common.ladder_count.is_some(),
    ];
    if flags.iter().any(|&f| f) || !BLOCK_CONSTRUCTIONS.contains(&set.set.as_str()) {
        return Ok(geometric);
    }
    let (from, to) = (geometric[0], *geometric.last().unwrap());
    let a = parse_set(&set.set, e, &set.witness)?;
    let n_map = e.schedule().index_map_reaching(to)?;
    let aligned = n_map.block_aligned_ladder(&a, from, to)?;
    Ok(if aligned.len() >= 2 { aligned } else { geometric })
}

fn run_classify(
    common: &Common,
    e: &EnumeratedSequence,
    check: Check,
    set: &SetArgs,
    m_max: u64,
    tol: &Rational,
) -> Result<Rendered> {
    let ladder = classify_ladder(common, e, set)?;
    let (report, csv) = match check {
        Check::LInvariant => {
            let family = if set.set == "squares" {
                vec![IndexSet::squares(), IndexSet::powers_of_two()]
            } else {
                vec![parse_set(&set.set, e, &set.witness)?]
            };
            let r = test_l_invariant(e, &family, &ladder, tol)?;
            let csv = invariance_csv(&r);
            (ClassifyReport::Invariance(r), csv)
        }
        Check::WeaklyLInvariant => {
            let a = parse_set(&set.set, e, &set.witness)?;
            let r = test_weak_l_invariant(e, &a, m_max, &ladder, tol)?;
            let csv = invariance_csv(&r);
            (ClassifyReport::Invariance(r), csv)
        }
        Check::StronglyNonLInvariant => {
            let a = parse_set(&set.set, e, &set.witness)?;
            let r = test_strong_non_l(e, &[a], &ladder, tol)?;
            let csv = invariance_csv(&r);
            (ClassifyReport::Invariance(r), csv)
        }
        Check::CoverRate => {
            let a = parse_set(&set.set, e, &set.witness)?;
            let r = lemma31_rate_check(e, &a, &ladder)?;
            let mut csv = String::from("n,lifted,leaders,count_bound_holds,density\n");
            for row in &r.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.n,
                    row.lifted,
                    row.leaders,
                    row.count_bound_holds,
                    dec(&row.density)
                ));
            }
            if !r.covering_holds || r.rows.iter().any(|row| !row.count_bound_holds) {
                return Err(Error::violation(
                    "covering bound",
                    0,
                    "covering or count bound failed",
                ));
            }
            (ClassifyReport::CoverRate(r), csv)
        }
        Check::Prop34Cover => {
            let witness = recursion_witness(e, &set.witness)?;
            let n = *ladder.last().unwrap();
            let covers = (0..=m_max)
                .map(|m| check_prop34_cover(e, &witness, m, n))
                .collect::<Result<Vec<_>>>()?;
            let mut csv = String::from("m,n,exceptions,cover_density,lifted_density\n");
            for c in &covers {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.m,
                    c.truncation,
                    c.exceptions.len(),
                    dec(&c.cover_density),
                    dec(&c.lifted_density)
                ));
            }
            (ClassifyReport::Prop34Cover { witness, covers }, csv)
        }
        Check::BlockBound => {
            let a = parse_set(&set.set, e, &set.witness)?;
            let (valid, _) = e.schedule().valid_prefix(64);
            let members = a.members_up_to(valid)?;
            let rows = lemma38_block_bound(e, &members, members.len())?;
            let mut csv = String::from("k,n,count,ratio,lower_bound\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.k,
                    r.n,
                    r.count,
                    dec(&r.ratio),
                    dec(&r.lower_bound)
                ));
            }
            (ClassifyReport::BlockBound { rows }, csv)
        }
    };
    Ok(Rendered {
        json: json(&report),
        csv,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_witness(
    common: &Common,
    e: &EnumeratedSequence,
    kind: WitnessKind,
    eps: &Rational,
    (n, m, bits): (u64, Option<u64>, u32),
    w: &WitnessArgs,
    tol: &Rational,
) -> Result<Rendered> {
    let levels = || -> Result<u64> { Ok(e.schedule().index_map_reaching(n)?.last_k()) };
    let (report, csv) = match kind {
        WitnessKind::SupportSubset => {
            let a = recursion_witness(e, w)?.set();
            let r = witness_theorem35(&a, e, &|_, _| 1, eps, n)?;
            let csv = proofs_csv(&r.proofs);
            (WitnessReport::SupportSubset(r), csv)
        }
        WitnessKind::Patterns => {
            let a = recursion_witness(e, w)?.set();
            let r = witness_patterns(&a, e, eps, n, bits)?;
            let csv = format!(
                "bits,patterns,distinct,checked,violations,max_exceedances\n{},{},{},{},{},{}\n",
                r.bits, r.patterns, r.distinct, r.checked, r.violations, r.max_exceedances
            );
            (WitnessReport::Patterns(r), csv)
        }
        WitnessKind::HalfDigits => {
            let ladder = ladder(common, PROFILE_LADDER)?;
            let horizon = element_horizon(e, *ladder.last().unwrap())?;
            let a = recursion_witness(e, w)?.set();
            let x = witness_half_digits(&a, e.base(), horizon.min(a.horizon().unwrap_or(horizon)))?;
            let evidence = not_in_t_evidence(&x, e.base(), levels()?.min(horizon))?;
            let membership = verdict(&x, e, &default_eps_grid(), &ladder, tol)?;
            let csv = membership_csv(&membership);
            (
                WitnessReport::HalfDigits {
                    element: x.to_record(None)?,
                    evidence,
                    membership,
                },
                csv,
            )
        }
        WitnessKind::Sandwich => {
            let k_max = levels()?;
            let x = witness_half_digits(&sparse_support(), e.base(), 2 * k_max + 2)?;
            let r = thm39_sandwich(&x, e, k_max, m, eps)?;
            let csv = proofs_csv(&r.proofs);
            (WitnessReport::Sandwich(r), csv)
        }
        WitnessKind::SmallDigits => {
            let ladder = ladder(common, PROFILE_LADDER)?;
            let a = recursion_witness(e, w)?;
            let digits = a.u.iter().map(|&u| (u + 1, 1));
            let x = DigitExpansion::from_digits(e.base(), digits)?;
            let r = membership::lemma37_check(&x, e, &ladder, tol)?;
            let csv = proofs_csv(&r.proofs);
            (WitnessReport::SmallDigits(r), csv)
        }
    };
    Ok(Rendered {
        json: json(&report),
        csv,
    })
}

/// Draws `(base, x, n, t)` and checks the telescoped identity at `t` and
/// at `t = 1` against the direct fractional part.
pub fn verify_identities(seed: u64, trials: u64) -> Result<IdentityReport> {
    let bases = [
        RatioSequence::binary(),
        RatioSequence::factorial(),
        RatioSequence::double(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::with_capacity(trials as usize);
    let mut failures = 0;
    for i in 0..trials {
        let base = &bases[(i % 3) as usize];
        let len = rng.gen_range(1..=24u64);
        let digits: Vec<(u64, u64)> = (1..=len)
            .map(|k| Ok((k, rng.gen_range(0..base.ratio(k)?))))
            .collect::<Result<_>>()?;
        let x = DigitExpansion::from_digits(base, digits)?;
        let n = rng.gen_range(1..=20u64);
        let t = rng.gen_range(0..=10u64);
        let general = check_frac_identity(&x, n, t, None)?.holds();
        let two_term = check_frac_identity(&x, n, 1, None)?.holds();
        if !(general && two_term) {
            failures += 1;
        }
        log.push(IdentityTrial {
            base: base.id().to_owned(),
            x: x.value()?,
            n,
            t,
            general,
            two_term,
        });
    }
    Ok(IdentityReport {
        seed,
        trials,
        failures,
        log,
    })
}

/// Runs a parsed command line and emits the report; returns the exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let result = init_threads().and_then(|_| run(cli));
    match result {
        Ok(rendered) => {
            let body = match cli.common.format {
                Format::Json => rendered.json,
                Format::Csv => rendered.csv,
            };
            match &cli.common.out {
                Some(path) => {
                    if let Err(err) = write_atomic(path, body.as_bytes()) {
                        eprintln!("error: {}: {err}", path.display());
                        return 1;
                    }
                }
                None => print!("{body}"),
            }
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
