//! Exact functionals of a finite random walk around its last visit to
//! `(-inf, 0]`, in rational arithmetic.
//!
//! For a walk `S_0 = 0, S_i = z_1 + ... + z_i` define
//! `sigma = max{i <= n : S_i <= 0}` (well defined because `S_0 = 0`).
//! Up to `sigma` we count weak occupation of both half-lines, occupation
//! relative to the terminal level `S_sigma`, and the forward/backward
//! attainment times of the running minimum and maximum. Everything here is
//! exact; no floating point enters this module.

use num::rational::BigRational;
use num::traits::Zero;

/// A finite walk stored as its exact rational increments; `S_0 = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    increments: Vec<BigRational>,
}

/// The nine indices/counts of a single walk realization, plus the level
/// `S_sigma` they are taken at.
///
/// Conventions: occupation counts use weak inequalities on both sides, so
/// an index with `S_i = 0` contributes to both `n_minus` and `n_plus`.
/// Forward extremum times record the last attainment of the extremum over
/// `{0..sigma}`, backward times are `sigma` minus the first attainment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkFunctionals {
    /// Last index `i <= n` with `S_i <= 0`.
    pub sigma: usize,
    /// `#{1 <= i <= sigma : S_i <= 0}`.
    pub n_minus: usize,
    /// `#{1 <= i <= sigma : S_i >= 0}`.
    pub n_plus: usize,
    /// `#{0 <= i < sigma : S_i <= S_sigma}`.
    pub nt_minus: usize,
    /// `#{0 <= i < sigma : S_i >= S_sigma}`.
    pub nt_plus: usize,
    /// Last attainment index of `min{S_i : i <= sigma}`.
    pub f_fwd: usize,
    /// `sigma` minus the first attainment index of the minimum.
    pub f_bwd: usize,
    /// Last attainment index of `max{S_i : i <= sigma}`.
    pub g_fwd: usize,
    /// `sigma` minus the first attainment index of the maximum.
    pub g_bwd: usize,
    /// The exact level `S_sigma`.
    pub s_sigma: BigRational,
}

impl WalkPath {
    pub fn new(increments: Vec<BigRational>) -> Self {
        Self { increments }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self) -> &[BigRational] {
        &self.increments
    }

    /// Partial sums `S_0 = 0, ..., S_n`; length `n + 1`.
    pub fn partial_sums(&self) -> Vec<BigRational> {
        let mut sums = Vec::with_capacity(self.increments.len() + 1);
        let mut acc = BigRational::zero();
        sums.push(acc.clone());
        for z in &self.increments {
            acc += z;
            sums.push(acc.clone());
        }
        sums
    }

    pub fn functionals(&self) -> WalkFunctionals {
        functionals_from_sums(&self.partial_sums())
    }
}

/// All nine functionals of a walk given as its partial sums `S_0..S_n`.
///
/// `sums` must be nonempty with `sums[0] = 0`. This is the hot kernel used
/// by exhaustive enumeration, hence the sums-slice interface.
pub fn functionals_from_sums(sums: &[BigRational]) -> WalkFunctionals {
    assert!(!sums.is_empty(), "partial sums must include S_0");
    debug_assert!(sums[0].is_zero());
    let zero = BigRational::zero();

    let sigma = sums
        .iter()
        .rposition(|s| *s <= zero)
        .expect("S_0 = 0 guarantees a nonpositive index");
    let s_sigma = sums[sigma].clone();

    let mut n_minus = 0;
    let mut n_plus = 0;
    for s in &sums[1..=sigma] {
        if *s <= zero {
            n_minus += 1;
        }
        if *s >= zero {
            n_plus += 1;
        }
    }

    let mut nt_minus = 0;
    let mut nt_plus = 0;
    for s in &sums[..sigma] {
        if *s <= s_sigma {
            nt_minus += 1;
        }
        if *s >= s_sigma {
            nt_plus += 1;
        }
    }

    let prefix = &sums[..=sigma];
    let min = prefix.iter().min().expect("nonempty prefix");
    let max = prefix.iter().max().expect("nonempty prefix");
    let f_first = prefix.iter().position(|s| s == min).unwrap();
    let f_last = prefix.iter().rposition(|s| s == min).unwrap();
    let g_first = prefix.iter().position(|s| s == max).unwrap();
    let g_last = prefix.iter().rposition(|s| s == max).unwrap();

    WalkFunctionals {
        sigma,
        n_minus,
        n_plus,
        nt_minus,
        nt_plus,
        f_fwd: f_last,
        f_bwd: sigma - f_first,
        g_fwd: g_last,
        g_bwd: sigma - g_first,
        s_sigma,
    }
}

/// The walk `-S` time reversed at `sigma`: partial sums
/// `R_i = S_sigma - S_{sigma-i}` for `i = 0..sigma`.
///
/// The increments of the reversed walk are the first `sigma` increments of
/// `path` in reverse order, so no arithmetic is needed. `sigma = 0` yields
/// the empty walk.
pub fn reverse_at_sigma(path: &WalkPath) -> WalkPath {
    let sums = path.partial_sums();
    let f = functionals_from_sums(&sums);
    let mut rev: Vec<BigRational> = path.increments[..f.sigma].to_vec();
    rev.reverse();
    WalkPath::new(rev)
}
