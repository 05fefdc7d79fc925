//! Exhaustive weighted enumeration of finite-support random walks.
//!
//! Every path of length `n` over a finite step law is visited once with its
//! exact product weight; conditional laws of the walk functionals are then
//! exact rationals, and equalities between them are certified with zero
//! tolerance rather than tested statistically.
//!
//! Enumeration partitions the path space by fixed-length prefixes and
//! reduces per-prefix accumulators by exact addition, so results are
//! independent of the worker count.

use crate::walk::{functionals_from_sums, WalkFunctionals};
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Default cap on `|support|^n`, the number of enumerated paths.
pub const DEFAULT_PATH_CAP: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("conditioning event has probability zero under enumeration")]
    ZeroProbabilityEvent,
    #[error("enumeration of {paths} paths exceeds the cap of {cap}")]
    SizeLimit { paths: u128, cap: u64 },
    #[error("invalid step law: {0}")]
    InvalidLaw(String),
    #[error("invalid conditioning event: {0}")]
    InvalidEvent(String),
    #[error("unknown functional name `{0}`")]
    UnknownFunctional(String),
}

/// Finite step law: distinct rational atoms with positive weights summing
/// to exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepLaw {
    atoms: Vec<(BigRational, BigRational)>,
}

impl StepLaw {
    pub fn new(atoms: Vec<(BigRational, BigRational)>) -> Result<Self, EnumError> {
        if atoms.is_empty() {
            return Err(EnumError::InvalidLaw("no atoms".into()));
        }
        let mut total = BigRational::zero();
        for (value, weight) in &atoms {
            if !weight.is_positive() {
                return Err(EnumError::InvalidLaw(format!(
                    "weight of atom {value} is not positive"
                )));
            }
            total += weight;
        }
        if !total.is_one() {
            return Err(EnumError::InvalidLaw(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if atoms[i].0 == atoms[j].0 {
                    return Err(EnumError::InvalidLaw(format!(
                        "duplicate atom value {}",
                        atoms[i].0
                    )));
                }
            }
        }
        Ok(Self { atoms })
    }

    /// The fair `{-1, +1}` law.
    pub fn fair_pm1() -> Self {
        let half = BigRational::new(1.into(), 2.into());
        Self::new(vec![
            (BigRational::from_integer((-1).into()), half.clone()),
            (BigRational::from_integer(1.into()), half),
        ])
        .unwrap()
    }

    pub fn atoms(&self) -> &[(BigRational, BigRational)] {
        &self.atoms
    }

    pub fn path_count(&self, n: usize) -> u128 {
        (self.atoms.len() as u128)
            .checked_pow(n as u32)
            .unwrap_or(u128::MAX)
    }
}

impl fmt::Display for StepLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(v, w)| format!("{v}:{w}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Parse a rational written as `p/q` or as a plain integer.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    BigRational::from_str(s.trim()).map_err(|e| format!("cannot parse `{s}` as a rational: {e}"))
}

impl FromStr for StepLaw {
    type Err = EnumError;

    /// Parses `value:weight` pairs separated by commas, e.g. `-1:1/2,1:1/2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut atoms = Vec::new();
        for part in s.split(',') {
            let (v, w) = part
                .split_once(':')
                .ok_or_else(|| EnumError::InvalidLaw(format!("missing `:` in `{part}`")))?;
            let value = parse_rational(v).map_err(EnumError::InvalidLaw)?;
            let weight = parse_rational(w).map_err(EnumError::InvalidLaw)?;
            atoms.push((value, weight));
        }
        StepLaw::new(atoms)
    }
}

/// Conditioning event for the enumerated walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConditionEvent {
    /// No conditioning.
    AllPaths,
    /// `{S_n in [lo, hi]}` with closed finite endpoints; `None` means the
    /// endpoint is infinite.
    TerminalIn {
        lo: Option<BigRational>,
        hi: Option<BigRational>,
    },
    /// `{S_sigma = 0}`: the walk sits at zero at its last nonpositive index.
    LastVisitZero,
}

impl ConditionEvent {
    /// Half-line `[0, inf)`.
    pub fn terminal_nonnegative() -> Self {
        ConditionEvent::TerminalIn {
            lo: Some(BigRational::zero()),
            hi: None,
        }
    }

    pub fn validate(&self) -> Result<(), EnumError> {
        if let ConditionEvent::TerminalIn { lo: Some(lo), hi: Some(hi) } = self {
            if lo > hi {
                return Err(EnumError::InvalidEvent(format!(
                    "empty interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn admits(&self, sums: &[BigRational], f: &WalkFunctionals) -> bool {
        match self {
            ConditionEvent::AllPaths => true,
            ConditionEvent::TerminalIn { lo, hi } => {
                let terminal = sums.last().expect("nonempty sums");
                lo.as_ref().is_none_or(|l| terminal >= l)
                    && hi.as_ref().is_none_or(|h| terminal <= h)
            }
            ConditionEvent::LastVisitZero => f.s_sigma.is_zero(),
        }
    }

    /// True for events of the form `{S_n in B}` (including `B` = everything).
    pub fn is_terminal_event(&self) -> bool {
        !matches!(self, ConditionEvent::LastVisitZero)
    }
}

impl fmt::Display for ConditionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionEvent::AllPaths => write!(f, "all"),
            ConditionEvent::TerminalIn { lo, hi } => {
                let lo = lo.as_ref().map_or("-inf".to_string(), |v| v.to_string());
                let hi = hi.as_ref().map_or("inf".to_string(), |v| v.to_string());
                write!(f, "terminal in [{lo}, {hi}]")
            }
            ConditionEvent::LastVisitZero => write!(f, "last visit at zero"),
        }
    }
}

/// The nine integer-valued walk functionals, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Functional {
    Sigma,
    NMinus,
    NPlus,
    NtMinus,
    NtPlus,
    FFwd,
    FBwd,
    GFwd,
    GBwd,
}

impl Functional {
    pub const ALL: [Functional; 9] = [
        Functional::Sigma,
        Functional::NMinus,
        Functional::NPlus,
        Functional::NtMinus,
        Functional::NtPlus,
        Functional::FFwd,
        Functional::FBwd,
        Functional::GFwd,
        Functional::GBwd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Functional::Sigma => "sigma",
            Functional::NMinus => "n_minus",
            Functional::NPlus => "n_plus",
            Functional::NtMinus => "nt_minus",
            Functional::NtPlus => "nt_plus",
            Functional::FFwd => "f_fwd",
            Functional::FBwd => "f_bwd",
            Functional::GFwd => "g_fwd",
            Functional::GBwd => "g_bwd",
        }
    }

    pub fn extract(self, f: &WalkFunctionals) -> usize {
        match self {
            Functional::Sigma => f.sigma,
            Functional::NMinus => f.n_minus,
            Functional::NPlus => f.n_plus,
            Functional::NtMinus => f.nt_minus,
            Functional::NtPlus => f.nt_plus,
            Functional::FFwd => f.f_fwd,
            Functional::FBwd => f.f_bwd,
            Functional::GFwd => f.g_fwd,
            Functional::GBwd => f.g_bwd,
        }
    }
}

impl FromStr for Functional {
    type Err = EnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Functional::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| EnumError::UnknownFunctional(s.to_string()))
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A finite rational-valued probability distribution with exact weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDist {
    support: Vec<(BigRational, BigRational)>,
}

impl ExactDist {
    /// Normalizes an accumulated mass map by `total`. Zero-mass values are
    /// dropped; the result sums to exactly one.
    fn from_masses(masses: BTreeMap<BigRational, BigRational>, total: &BigRational) -> Self {
        assert!(total.is_positive(), "cannot normalize by zero mass");
        let support: Vec<_> = masses
            .into_iter()
            .filter(|(_, m)| m.is_positive())
            .map(|(v, m)| (v, m / total))
            .collect();
        Self { support }
    }

    pub fn support(&self) -> &[(BigRational, BigRational)] {
        &self.support
    }

    pub fn total_mass(&self) -> BigRational {
        self.support
            .iter()
            .fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn prob_of(&self, value: &BigRational) -> BigRational {
        self.support
            .iter()
            .find(|(v, _)| v == value)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Exact total-variation distance `1/2 * sum |p - q|`.
    pub fn tv_distance(&self, other: &ExactDist) -> BigRational {
        let mut values: Vec<&BigRational> = self
            .support
            .iter()
            .chain(other.support.iter())
            .map(|(v, _)| v)
            .collect();
        values.sort();
        values.dedup();
        let mut acc = BigRational::zero();
        for v in values {
            acc += (self.prob_of(v) - other.prob_of(v)).abs();
        }
        acc / BigRational::from_integer(2.into())
    }
}

impl fmt::Display for ExactDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .support
            .iter()
            .map(|(v, p)| format!("{v}: {p}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl Serialize for ExactDist {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.support.len()))?;
        for (v, p) in &self.support {
            seq.serialize_element(&[v.to_string(), p.to_string()])?;
        }
        seq.end()
    }
}

/// Exhaustive enumerator with a configurable path-count cap.
#[derive(Debug, Clone, Copy)]
pub struct Enumerator {
    pub path_cap: u64,
}

impl Default for Enumerator {
    fn default() -> Self {
        Self { path_cap: DEFAULT_PATH_CAP }
    }
}

/// Per-path data handed to an accumulator: partial sums, functionals and
/// the exact path weight.
struct PathView<'a> {
    sums: &'a [BigRational],
    functionals: &'a WalkFunctionals,
    weight: &'a BigRational,
}

/// One enumeration pass accumulates into this; merging must commute with
/// exact addition so the prefix partition cannot change results.
trait Accum: Send {
    type Ctx: Clone + Send + Sync;
    fn new(ctx: &Self::Ctx) -> Self;
    fn visit(&mut self, path: PathView<'_>);
    fn absorb(&mut self, other: Self);
}

fn dfs<A: Accum>(
    atoms: &[(BigRational, BigRational)],
    n: usize,
    sums: &mut Vec<BigRational>,
    weights: &mut Vec<BigRational>,
    acc: &mut A,
) {
    if sums.len() == n + 1 {
        let f = functionals_from_sums(sums);
        acc.visit(PathView {
            sums,
            functionals: &f,
            weight: weights.last().expect("weight stack nonempty"),
        });
        return;
    }
    for (value, weight) in atoms {
        let next_sum = sums.last().expect("sum stack nonempty") + value;
        let next_weight = weights.last().expect("weight stack nonempty") * weight;
        sums.push(next_sum);
        weights.push(next_weight);
        dfs(atoms, n, sums, weights, acc);
        sums.pop();
        weights.pop();
    }
}

impl Enumerator {
    pub fn with_path_cap(path_cap: u64) -> Self {
        Self { path_cap }
    }

    /// Runs one full enumeration, reducing per-prefix accumulators in
    /// prefix order.
    fn run<A: Accum>(&self, law: &StepLaw, n: usize, ctx: &A::Ctx) -> Result<A, EnumError> {
        let paths = law.path_count(n);
        if paths > self.path_cap as u128 {
            return Err(EnumError::SizeLimit { paths, cap: self.path_cap });
        }
        let k = law.atoms.len();

        // Split into prefix subtrees only when the tree is big enough for
        // parallelism to matter.
        let mut prefix_len = 0usize;
        if paths >= 1 << 16 {
            let mut subtrees = 1u128;
            while prefix_len < n && subtrees < 512 {
                subtrees *= k as u128;
                prefix_len += 1;
            }
        }
        let prefix_count = (k as u64).pow(prefix_len as u32);

        let accs: Vec<A> = (0..prefix_count)
            .into_par_iter()
            .map(|prefix| {
                let mut sums = Vec::with_capacity(n + 1);
                let mut weights = Vec::with_capacity(n + 1);
                sums.push(BigRational::zero());
                weights.push(BigRational::one());
                // decode the prefix, most significant digit = first step
                let mut rem = prefix;
                let mut digits = vec![0usize; prefix_len];
                for d in (0..prefix_len).rev() {
                    digits[d] = (rem % k as u64) as usize;
                    rem /= k as u64;
                }
                for &d in &digits {
                    let (value, weight) = &law.atoms[d];
                    let next_sum = sums.last().unwrap() + value;
                    let next_weight = weights.last().unwrap() * weight;
                    sums.push(next_sum);
                    weights.push(next_weight);
                }
                let mut acc = A::new(ctx);
                dfs(&law.atoms, n, &mut sums, &mut weights, &mut acc);
                acc
            })
            .collect();

        let mut it = accs.into_iter();
        let mut first = it.next().expect("at least one prefix");
        for acc in it {
            first.absorb(acc);
        }
        Ok(first)
    }

    /// Exact conditional law of one functional given the event.
    pub fn exact_distribution(
        &self,
        law: &StepLaw,
        n: usize,
        event: &ConditionEvent,
        functional: Functional,
    ) -> Result<ExactDist, EnumError> {
        event.validate()?;
        let ctx = (event.clone(), functional);
        let acc: MarginalAccum = self.run(law, n, &ctx)?;
        if !acc.event_mass.is_positive() {
            return Err(EnumError::ZeroProbabilityEvent);
        }
        Ok(ExactDist::from_masses(acc.masses, &acc.event_mass))
    }

    /// Exact conditional laws of one functional, further partitioned by the
    /// value of `sigma`. Keys are the sigma values of positive conditional
    /// probability.
    pub fn exact_conditional_by_sigma(
        &self,
        law: &StepLaw,
        n: usize,
        event: &ConditionEvent,
        functional: Functional,
    ) -> Result<BTreeMap<usize, ExactDist>, EnumError> {
        event.validate()?;
        let ctx = (event.clone(), functional);
        let acc: BySigmaAccum = self.run(law, n, &ctx)?;
        if !acc.event_mass.is_positive() {
            return Err(EnumError::ZeroProbabilityEvent);
        }
        Ok(acc
            .by_sigma
            .into_iter()
            .map(|(sigma, cell)| {
                let dist = ExactDist::from_masses(cell.masses, &cell.mass);
                (sigma, dist)
            })
            .collect())
    }

    fn run_full(
        &self,
        law: &StepLaw,
        n: usize,
        event: &ConditionEvent,
    ) -> Result<FullAccum, EnumError> {
        event.validate()?;
        let acc: FullAccum = self.run(law, n, &event.clone())?;
        if !acc.event_mass.is_positive() {
            return Err(EnumError::ZeroProbabilityEvent);
        }
        Ok(acc)
    }

    /// Certifies, with exact arithmetic, the two four-way law equalities
    /// and the path-reversal law equality under a terminal event.
    ///
    /// Class 1 is `{n_minus, nt_plus, f_fwd, g_bwd}`; class 2 is
    /// `{n_plus, nt_minus, f_bwd, g_fwd}`.
    pub fn check_prop3(
        &self,
        law: &StepLaw,
        n: usize,
        event: &ConditionEvent,
    ) -> Result<CheckReport, EnumError> {
        if !event.is_terminal_event() {
            return Err(EnumError::InvalidEvent(
                "the two-class check conditions on terminal events; use the corollary check for {S_sigma = 0}".into(),
            ));
        }
        let acc = self.run_full(law, n, event)?;
        let laws = normalized_laws(&acc);

        let class1 = [Functional::NMinus, Functional::NtPlus, Functional::FFwd, Functional::GBwd];
        let class2 = [Functional::NPlus, Functional::NtMinus, Functional::FBwd, Functional::GFwd];
        let class1_equal = all_equal(&laws, &class1);
        let class2_equal = all_equal(&laws, &class2);
        let reversal_equal = acc.forward_paths == acc.reversed_paths;
        let tv = path_measure_tv(&acc);

        Ok(CheckReport {
            kind: "prop3".into(),
            law: law.to_string(),
            n,
            event: event.to_string(),
            paths: law.path_count(n) as u64,
            event_probability: acc.event_mass.to_string(),
            pass: class1_equal && class2_equal && reversal_equal,
            class1_law: Some(laws[&Functional::NMinus].clone()),
            class2_law: Some(laws[&Functional::NPlus].clone()),
            class1_equal: Some(class1_equal),
            class2_equal: Some(class2_equal),
            laws: named_laws(&laws),
            reversal_tv: Some(tv.to_string()),
            reversal_equal: Some(reversal_equal),
            six_way_equal: None,
            per_path_tilde_match: None,
        })
    }

    /// Certifies the six-way law equality of the plain times on the event
    /// `{S_sigma = 0}`, and per path on that event `n_minus = nt_minus`,
    /// `n_plus = nt_plus`.
    pub fn check_corollary(&self, law: &StepLaw, n: usize) -> Result<CheckReport, EnumError> {
        let event = ConditionEvent::LastVisitZero;
        let acc = self.run_full(law, n, &event)?;
        let laws = normalized_laws(&acc);

        let six = [
            Functional::NMinus,
            Functional::NPlus,
            Functional::FFwd,
            Functional::FBwd,
            Functional::GFwd,
            Functional::GBwd,
        ];
        let six_way_equal = all_equal(&laws, &six);

        Ok(CheckReport {
            kind: "corollary".into(),
            law: law.to_string(),
            n,
            event: event.to_string(),
            paths: law.path_count(n) as u64,
            event_probability: acc.event_mass.to_string(),
            pass: six_way_equal && acc.tilde_match,
            class1_law: None,
            class2_law: None,
            class1_equal: None,
            class2_equal: None,
            laws: named_laws(&laws),
            reversal_tv: None,
            reversal_equal: None,
            six_way_equal: Some(six_way_equal),
            per_path_tilde_match: Some(acc.tilde_match),
        })
    }

    /// Certifies that the conditional path measure of `(S_0..S_sigma)`
    /// equals that of the reversal `(R_0..R_sigma)`, reporting their exact
    /// total-variation distance.
    pub fn check_reversal_law(
        &self,
        law: &StepLaw,
        n: usize,
        event: &ConditionEvent,
    ) -> Result<CheckReport, EnumError> {
        let acc = self.run_full(law, n, event)?;
        let tv = path_measure_tv(&acc);
        let equal = acc.forward_paths == acc.reversed_paths;
        Ok(CheckReport {
            kind: "reversal".into(),
            law: law.to_string(),
            n,
            event: event.to_string(),
            paths: law.path_count(n) as u64,
            event_probability: acc.event_mass.to_string(),
            pass: equal,
            class1_law: None,
            class2_law: None,
            class1_equal: None,
            class2_equal: None,
            laws: BTreeMap::new(),
            reversal_tv: Some(tv.to_string()),
            reversal_equal: Some(equal),
            six_way_equal: None,
            per_path_tilde_match: None,
        })
    }
}

struct MarginalAccum {
    event: ConditionEvent,
    functional: Functional,
    event_mass: BigRational,
    masses: BTreeMap<BigRational, BigRational>,
}

impl Accum for MarginalAccum {
    type Ctx = (ConditionEvent, Functional);

    fn new(ctx: &Self::Ctx) -> Self {
        Self {
            event: ctx.0.clone(),
            functional: ctx.1,
            event_mass: BigRational::zero(),
            masses: BTreeMap::new(),
        }
    }

    fn visit(&mut self, path: PathView<'_>) {
        if !self.event.admits(path.sums, path.functionals) {
            return;
        }
        self.event_mass += path.weight;
        let value = BigRational::from_integer(self.functional.extract(path.functionals).into());
        add_mass(&mut self.masses, value, path.weight);
    }

    fn absorb(&mut self, other: Self) {
        self.event_mass += other.event_mass;
        for (v, m) in other.masses {
            add_mass_owned(&mut self.masses, v, m);
        }
    }
}

#[derive(Default)]
struct SigmaCell {
    mass: BigRational,
    masses: BTreeMap<BigRational, BigRational>,
}

struct BySigmaAccum {
    event: ConditionEvent,
    functional: Functional,
    event_mass: BigRational,
    by_sigma: BTreeMap<usize, SigmaCell>,
}

impl Accum for BySigmaAccum {
    type Ctx = (ConditionEvent, Functional);

    fn new(ctx: &Self::Ctx) -> Self {
        Self {
            event: ctx.0.clone(),
            functional: ctx.1,
            event_mass: BigRational::zero(),
            by_sigma: BTreeMap::new(),
        }
    }

    fn visit(&mut self, path: PathView<'_>) {
        if !self.event.admits(path.sums, path.functionals) {
            return;
        }
        self.event_mass += path.weight;
        let cell = self.by_sigma.entry(path.functionals.sigma).or_default();
        cell.mass += path.weight;
        let value = BigRational::from_integer(self.functional.extract(path.functionals).into());
        add_mass(&mut cell.masses, value, path.weight);
    }

    fn absorb(&mut self, other: Self) {
        self.event_mass += other.event_mass;
        for (sigma, cell) in other.by_sigma {
            let dst = self.by_sigma.entry(sigma).or_default();
            dst.mass += cell.mass;
            for (v, m) in cell.masses {
                add_mass_owned(&mut dst.masses, v, m);
            }
        }
    }
}

fn add_mass(map: &mut BTreeMap<BigRational, BigRational>, value: BigRational, w: &BigRational) {
    if let Some(m) = map.get_mut(&value) {
        *m += w;
    } else {
        map.insert(value, w.clone());
    }
}

fn add_mass_owned<K: Ord>(map: &mut BTreeMap<K, BigRational>, value: K, w: BigRational) {
    if let Some(m) = map.get_mut(&value) {
        *m += w;
    } else {
        map.insert(value, w);
    }
}

/// Outcome of one certified-exact enumeration check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    /// Which check ran: `prop3`, `corollary` or `reversal`.
    pub kind: String,
    pub law: String,
    pub n: usize,
    pub event: String,
    /// Total number of enumerated paths.
    pub paths: u64,
    /// Exact probability of the conditioning event, as `p/q`.
    pub event_probability: String,
    pub pass: bool,
    /// The common law of `{n_minus, nt_plus, f_fwd, g_bwd}` if they agree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class1_law: Option<ExactDist>,
    /// The common law of `{n_plus, nt_minus, f_bwd, g_fwd}` if they agree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class2_law: Option<ExactDist>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class1_equal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class2_equal: Option<bool>,
    /// Conditional law of every functional, keyed by name.
    pub laws: BTreeMap<String, ExactDist>,
    /// Exact total-variation distance between the forward and reversed
    /// path measures, as `p/q`; must be `0` to pass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversal_tv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversal_equal: Option<bool>,
    /// All six plain-time laws agree on `{S_sigma = 0}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub six_way_equal: Option<bool>,
    /// Per path on `{S_sigma = 0}`: `n_minus = nt_minus` and
    /// `n_plus = nt_plus`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_path_tilde_match: Option<bool>,
}

/// Accumulates everything the certified checks need in one pass: all nine
/// marginal mass maps, the forward and reversed path measures, and the
/// per-path corollary flags.
struct FullAccum {
    event: ConditionEvent,
    event_mass: BigRational,
    marginals: [BTreeMap<BigRational, BigRational>; 9],
    forward_paths: BTreeMap<Vec<BigRational>, BigRational>,
    reversed_paths: BTreeMap<Vec<BigRational>, BigRational>,
    tilde_match: bool,
}

impl Accum for FullAccum {
    type Ctx = ConditionEvent;

    fn new(ctx: &Self::Ctx) -> Self {
        Self {
            event: ctx.clone(),
            event_mass: BigRational::zero(),
            marginals: Default::default(),
            forward_paths: BTreeMap::new(),
            reversed_paths: BTreeMap::new(),
            tilde_match: true,
        }
    }

    fn visit(&mut self, path: PathView<'_>) {
        let f = path.functionals;
        if !self.event.admits(path.sums, f) {
            return;
        }
        self.event_mass += path.weight;
        for (slot, functional) in self.marginals.iter_mut().zip(Functional::ALL) {
            let value = BigRational::from_integer(functional.extract(f).into());
            add_mass(slot, value, path.weight);
        }
        let forward: Vec<BigRational> = path.sums[..=f.sigma].to_vec();
        let reversed: Vec<BigRational> = (0..=f.sigma)
            .map(|i| &path.sums[f.sigma] - &path.sums[f.sigma - i])
            .collect();
        add_mass_owned(&mut self.forward_paths, forward, path.weight.clone());
        add_mass_owned(&mut self.reversed_paths, reversed, path.weight.clone());
        if f.n_minus != f.nt_minus || f.n_plus != f.nt_plus {
            self.tilde_match = false;
        }
    }

    fn absorb(&mut self, other: Self) {
        self.event_mass += other.event_mass;
        for (dst, src) in self.marginals.iter_mut().zip(other.marginals) {
            for (v, m) in src {
                add_mass_owned(dst, v, m);
            }
        }
        for (v, m) in other.forward_paths {
            add_mass_owned(&mut self.forward_paths, v, m);
        }
        for (v, m) in other.reversed_paths {
            add_mass_owned(&mut self.reversed_paths, v, m);
        }
        self.tilde_match &= other.tilde_match;
    }
}

fn normalized_laws(acc: &FullAccum) -> BTreeMap<Functional, ExactDist> {
    Functional::ALL
        .into_iter()
        .zip(acc.marginals.iter())
        .map(|(f, masses)| (f, ExactDist::from_masses(masses.clone(), &acc.event_mass)))
        .collect()
}

fn named_laws(laws: &BTreeMap<Functional, ExactDist>) -> BTreeMap<String, ExactDist> {
    laws.iter()
        .map(|(f, d)| (f.as_str().to_string(), d.clone()))
        .collect()
}

fn all_equal(laws: &BTreeMap<Functional, ExactDist>, group: &[Functional]) -> bool {
    group.windows(2).all(|w| laws[&w[0]] == laws[&w[1]])
}

/// Exact TV distance between the two (conditional) path measures.
fn path_measure_tv(acc: &FullAccum) -> BigRational {
    let mut keys: Vec<&Vec<BigRational>> = acc
        .forward_paths
        .keys()
        .chain(acc.reversed_paths.keys())
        .collect();
    keys.sort();
    keys.dedup();
    let zero = BigRational::zero();
    let mut total = BigRational::zero();
    for k in keys {
        let p = acc.forward_paths.get(k).unwrap_or(&zero);
        let q = acc.reversed_paths.get(k).unwrap_or(&zero);
        total += (p - q).abs();
    }
    total / (BigRational::from_integer(2.into()) * &acc.event_mass)
}

/// Convenience wrappers at the default path cap.
pub fn exact_distribution(
    law: &StepLaw,
    n: usize,
    event: &ConditionEvent,
    functional: Functional,
) -> Result<ExactDist, EnumError> {
    Enumerator::default().exact_distribution(law, n, event, functional)
}

pub fn exact_conditional_by_sigma(
    law: &StepLaw,
    n: usize,
    event: &ConditionEvent,
    functional: Functional,
) -> Result<BTreeMap<usize, ExactDist>, EnumError> {
    Enumerator::default().exact_conditional_by_sigma(law, n, event, functional)
}

pub fn check_prop3(
    law: &StepLaw,
    n: usize,
    event: &ConditionEvent,
) -> Result<CheckReport, EnumError> {
    Enumerator::default().check_prop3(law, n, event)
}

pub fn check_corollary(law: &StepLaw, n: usize) -> Result<CheckReport, EnumError> {
    Enumerator::default().check_corollary(law, n)
}

pub fn check_reversal_law(
    law: &StepLaw,
    n: usize,
    event: &ConditionEvent,
) -> Result<CheckReport, EnumError> {
    Enumerator::default().check_reversal_law(law, n, event)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn dist(pairs: &[(&str, &str)]) -> ExactDist {
        ExactDist {
            support: pairs.iter().map(|(v, p)| (rat(v), rat(p))).collect(),
        }
    }

    fn law_third_twothirds() -> StepLaw {
        "-1:1/3,2:2/3".parse().unwrap()
    }

    #[test]
    fn law_parsing_and_validation() {
        assert_eq!("-1:1/2,1:1/2".parse::<StepLaw>().unwrap(), StepLaw::fair_pm1());
        assert!("-1:1/2,1:1/3".parse::<StepLaw>().is_err()); // sum != 1
        assert!("-1:1/2,-1:1/2".parse::<StepLaw>().is_err()); // duplicate
        assert!("-1:0,1:1".parse::<StepLaw>().is_err()); // nonpositive weight
    }

    #[test]
    fn sigma_law_fair_two_steps() {
        let d = exact_distribution(
            &StepLaw::fair_pm1(),
            2,
            &ConditionEvent::AllPaths,
            Functional::Sigma,
        )
        .unwrap();
        assert_eq!(d, dist(&[("0", "1/4"), ("2", "3/4")]));
    }

    #[test]
    fn f_fwd_law_fair_two_steps() {
        let d = exact_distribution(
            &StepLaw::fair_pm1(),
            2,
            &ConditionEvent::AllPaths,
            Functional::FFwd,
        )
        .unwrap();
        assert_eq!(d, dist(&[("0", "1/4"), ("1", "1/4"), ("2", "1/2")]));
    }

    #[test]
    fn n_minus_law_matches_f_fwd_law() {
        let law = StepLaw::fair_pm1();
        let a = exact_distribution(&law, 2, &ConditionEvent::AllPaths, Functional::NMinus).unwrap();
        let b = exact_distribution(&law, 2, &ConditionEvent::AllPaths, Functional::FFwd).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, dist(&[("0", "1/4"), ("1", "1/4"), ("2", "1/2")]));
    }

    #[test]
    fn cross_class_laws_differ() {
        // negative control: f_fwd is class 1, n_plus is class 2
        let law = StepLaw::fair_pm1();
        let a = exact_distribution(&law, 2, &ConditionEvent::AllPaths, Functional::FFwd).unwrap();
        let b = exact_distribution(&law, 2, &ConditionEvent::AllPaths, Functional::NPlus).unwrap();
        assert_ne!(a, b);
        assert_eq!(b, dist(&[("0", "1/2"), ("1", "1/4"), ("2", "1/4")]));
    }

    #[test]
    fn conditional_by_sigma_fair_two_steps() {
        let map = exact_conditional_by_sigma(
            &StepLaw::fair_pm1(),
            2,
            &ConditionEvent::AllPaths,
            Functional::FFwd,
        )
        .unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map[&0], dist(&[("0", "1")]));
        assert_eq!(map[&2], dist(&[("1", "1/3"), ("2", "2/3")]));
    }

    #[test]
    fn conditional_by_sigma_last_visit_zero() {
        // On {S_sigma = 0} the forward and backward extremum times coincide
        // in law conditionally on sigma.
        let f = exact_conditional_by_sigma(
            &StepLaw::fair_pm1(),
            4,
            &ConditionEvent::LastVisitZero,
            Functional::FFwd,
        )
        .unwrap();
        let g = exact_conditional_by_sigma(
            &StepLaw::fair_pm1(),
            4,
            &ConditionEvent::LastVisitZero,
            Functional::GBwd,
        )
        .unwrap();
        assert_eq!(f[&2], g[&2]);
    }

    #[test]
    fn marginal_is_sigma_mixture() {
        for (law, event) in [
            (StepLaw::fair_pm1(), ConditionEvent::AllPaths),
            (law_third_twothirds(), ConditionEvent::terminal_nonnegative()),
        ] {
            let marginal = exact_distribution(&law, 5, &event, Functional::FFwd).unwrap();
            let by_sigma =
                exact_conditional_by_sigma(&law, 5, &event, Functional::FFwd).unwrap();
            let sigma_law = exact_distribution(&law, 5, &event, Functional::Sigma).unwrap();
            let mut mixed: BTreeMap<BigRational, BigRational> = BTreeMap::new();
            for (sigma, d) in &by_sigma {
                let ps = sigma_law.prob_of(&BigRational::from_integer((*sigma).into()));
                for (v, p) in d.support() {
                    add_mass_owned(&mut mixed, v.clone(), p * &ps);
                }
            }
            let mixed = ExactDist {
                support: mixed.into_iter().collect(),
            };
            assert_eq!(mixed, marginal);
        }
    }

    #[test]
    fn prop3_fair_two_steps() {
        let report = check_prop3(&StepLaw::fair_pm1(), 2, &ConditionEvent::AllPaths).unwrap();
        assert!(report.pass);
        assert_eq!(
            report.class1_law.unwrap(),
            dist(&[("0", "1/4"), ("1", "1/4"), ("2", "1/2")])
        );
        assert_eq!(
            report.class2_law.unwrap(),
            dist(&[("0", "1/2"), ("1", "1/4"), ("2", "1/4")])
        );
        assert_eq!(report.reversal_tv.unwrap(), "0");
    }

    #[test]
    fn prop3_skewed_law_conditioned() {
        let report = check_prop3(
            &law_third_twothirds(),
            8,
            &ConditionEvent::terminal_nonnegative(),
        )
        .unwrap();
        assert!(report.pass, "exact equality certified: {report:?}");
    }

    #[test]
    fn prop3_rejects_last_visit_event() {
        let err = check_prop3(&StepLaw::fair_pm1(), 2, &ConditionEvent::LastVisitZero);
        assert!(matches!(err, Err(EnumError::InvalidEvent(_))));
    }

    #[test]
    fn corollary_fair_walks() {
        for n in [2usize, 4, 6] {
            let report = check_corollary(&StepLaw::fair_pm1(), n).unwrap();
            assert!(report.pass, "n = {n}: {report:?}");
            assert_eq!(report.six_way_equal, Some(true));
            assert_eq!(report.per_path_tilde_match, Some(true));
        }
    }

    #[test]
    fn corollary_big_down_steps() {
        let law: StepLaw = "-2:1/2,1:1/2".parse().unwrap();
        let report = check_corollary(&law, 6).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn corollary_per_path_example() {
        // S = (0, 1, 0, 1, 2): sigma = 2, n_minus = nt_minus = 1,
        // n_plus = nt_plus = 2, and S_sigma = 0.
        use crate::walk::WalkPath;
        let one = BigRational::from_integer(1.into());
        let p = WalkPath::new(vec![one.clone(), -one.clone(), one.clone(), one.clone()]);
        let f = p.functionals();
        assert_eq!(f.sigma, 2);
        assert!(f.s_sigma.is_zero());
        assert_eq!((f.n_minus, f.nt_minus), (1, 1));
        assert_eq!((f.n_plus, f.nt_plus), (2, 2));
    }

    #[test]
    fn reversal_law_checks() {
        let r = check_reversal_law(&StepLaw::fair_pm1(), 3, &ConditionEvent::AllPaths).unwrap();
        assert!(r.pass);
        assert_eq!(r.reversal_tv.unwrap(), "0");

        let r = check_reversal_law(&StepLaw::fair_pm1(), 0, &ConditionEvent::AllPaths).unwrap();
        assert!(r.pass, "single empty path");

        let law: StepLaw = "-1:1/4,1:3/4".parse().unwrap();
        let r = check_reversal_law(&law, 6, &ConditionEvent::terminal_nonnegative()).unwrap();
        assert!(r.pass);
        assert_eq!(r.reversal_tv.unwrap(), "0");
    }

    #[test]
    fn zero_probability_event() {
        let event = ConditionEvent::TerminalIn {
            lo: Some(rat("100")),
            hi: None,
        };
        let err = exact_distribution(&StepLaw::fair_pm1(), 2, &event, Functional::Sigma);
        assert!(matches!(err, Err(EnumError::ZeroProbabilityEvent)));
    }

    #[test]
    fn size_limit() {
        let err = Enumerator::with_path_cap(1000).exact_distribution(
            &StepLaw::fair_pm1(),
            30,
            &ConditionEvent::AllPaths,
            Functional::Sigma,
        );
        assert!(matches!(err, Err(EnumError::SizeLimit { .. })));
    }

    #[test]
    fn dist_mass_sums_to_one() {
        for n in 0..=8 {
            let d = exact_distribution(
                &law_third_twothirds(),
                n,
                &ConditionEvent::AllPaths,
                Functional::GFwd,
            )
            .unwrap();
            assert!(d.total_mass().is_one());
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let law = law_third_twothirds();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                check_prop3(&law, 17, &ConditionEvent::terminal_nonnegative()).unwrap()
            })
        };
        let a = serde_json::to_string(&run(1)).unwrap();
        let b = serde_json::to_string(&run(4)).unwrap();
        assert_eq!(a, b);
    }
}
