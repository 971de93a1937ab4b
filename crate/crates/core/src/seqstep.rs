//! The SSS_t+ rejection threshold.
//!
//! Hypotheses are scanned in their prescribed order. With `T_k` target wins
//! and `D_k` decoy wins among the first `k`, the threshold `K_t` is the
//! largest `k` for which `(D_k + t) / max(T_k, 1) <= a/b`, or 0 when no
//! prefix qualifies. With `t = u/v` the test is decided on integers as
//! `b·(v·D_k + u) <= a·v·max(T_k, 1)`.

use alloc::vec::Vec;

use crate::rational::{gcd_u128, Rational};
use crate::Error;

/// Outcome of comparing a hypothesis' p-value against `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Win {
    /// `p_j <= c`
    Target,
    /// `p_j > c`
    Decoy,
}

/// Ground truth for a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Truth {
    TrueNull,
    FalseNull,
}

/// Largest magnitude accepted for `a`, `b` and the denominator of `t`.
///
/// Keeps every term of the integer threshold test below `2^64 · n`, so the
/// scan runs in `u128` for any sequence length that fits in memory.
pub const MAX_PARAM_MAGNITUDE: u64 = u32::MAX as u64;

/// `(alpha, c, t)` together with the reduced ratio `a/b = (1-c)/c · alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProcedureParams {
    alpha: Rational,
    c: Rational,
    t: Rational,
    a: u64,
    b: u64,
}

impl ProcedureParams {
    pub fn new(alpha: Rational, c: Rational, t: Rational) -> Result<Self, Error> {
        let open_unit = |name: &'static str, v: Rational| {
            if v.is_positive() && v < Rational::ONE {
                Ok(())
            } else {
                Err(Error::OutOfRange { name, value: v })
            }
        };
        open_unit("alpha", alpha)?;
        open_unit("c", c)?;
        if !t.is_positive() || t > Rational::ONE {
            return Err(Error::OutOfRange { name: "t", value: t });
        }
        if t.denom() as u128 > u128::from(MAX_PARAM_MAGNITUDE) {
            return Err(Error::TooLarge { name: "t denominator" });
        }
        let (a, b) = crate::construction::derive_ab(alpha, c)?;
        Ok(Self { alpha, c, t, a, b })
    }

    /// Parameters with `t = 1 - u/b`.
    pub fn with_u(alpha: Rational, c: Rational, u: u64) -> Result<Self, Error> {
        let (_, b) = crate::construction::derive_ab(alpha, c)?;
        if u >= b {
            return Err(Error::OutOfRange {
                name: "u",
                value: Rational::from_integer(i128::from(u)),
            });
        }
        let t = Rational::new(i128::from(b - u), i128::from(b))?;
        Self::new(alpha, c, t)
    }

    /// Same `alpha` and `c`, different `t`.
    pub fn with_t(&self, t: Rational) -> Result<Self, Error> {
        Self::new(self.alpha, self.c, t)
    }

    /// Checks the extra conditions the adversarial construction needs:
    /// `c <= 1/2` and `a < b`.
    pub fn require_construction(&self) -> Result<(), Error> {
        let half = Rational::new(1, 2)?;
        if self.c > half {
            return Err(Error::OutOfRange { name: "c", value: self.c });
        }
        if self.a >= self.b {
            return Err(Error::NotConstructible { a: self.a, b: self.b });
        }
        Ok(())
    }

    pub fn alpha(&self) -> Rational {
        self.alpha
    }
    pub fn c(&self) -> Rational {
        self.c
    }
    pub fn t(&self) -> Rational {
        self.t
    }
    pub fn a(&self) -> u64 {
        self.a
    }
    pub fn b(&self) -> u64 {
        self.b
    }

    /// `a/b` as a fraction.
    pub fn ratio(&self) -> Rational {
        Rational::new(i128::from(self.a), i128::from(self.b)).expect("b is positive")
    }

    /// The integer-form test used by [`reject_threshold`].
    pub fn threshold(&self) -> Threshold {
        Threshold::new(self.a, self.b, self.t)
    }
}

/// Precomputed coefficients of `b·v·D + b·u <= a·v·max(T, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    per_decoy: u128,
    offset: u128,
    per_target: u128,
}

impl Threshold {
    /// `t` must be positive with a denominator below `2^32`; `a`, `b` below `2^32`.
    pub fn new(a: u64, b: u64, t: Rational) -> Self {
        debug_assert!(t.is_positive());
        let u = t.numer() as u128;
        let v = t.denom() as u128;
        let (a, b) = (u128::from(a), u128::from(b));
        Self {
            per_decoy: b * v,
            offset: b * u,
            per_target: a * v,
        }
    }

    #[inline]
    pub fn accepts(&self, decoys: u64, targets: u64) -> bool {
        let lhs = self.per_decoy * u128::from(decoys) + self.offset;
        let rhs = self.per_target * u128::from(targets.max(1));
        lhs <= rhs
    }
}

/// Per-hypothesis win indicators and truth labels, indexed from position 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompetitionSequence {
    wins: Vec<Win>,
    labels: Vec<Truth>,
}

impl CompetitionSequence {
    pub fn new(wins: Vec<Win>, labels: Vec<Truth>) -> Result<Self, Error> {
        if wins.len() != labels.len() {
            return Err(Error::LengthMismatch {
                wins: wins.len(),
                labels: labels.len(),
            });
        }
        Ok(Self { wins, labels })
    }

    /// Discretizes raw p-values against `c`: `p <= c` is a target win.
    ///
    /// The comparison is exact: each finite `f64` is a dyadic rational.
    /// p-values outside `[0, 1]` (or NaN) are rejected.
    pub fn from_p_values(p_values: &[f64], labels: Vec<Truth>, c: Rational) -> Result<Self, Error> {
        if !c.is_positive() || c >= Rational::ONE {
            return Err(Error::OutOfRange { name: "c", value: c });
        }
        let wins = p_values
            .iter()
            .map(|&p| {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidPValue);
                }
                Ok(if f64_at_most(p, c) { Win::Target } else { Win::Decoy })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(wins, labels)
    }

    pub fn len(&self) -> usize {
        self.wins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wins.is_empty()
    }

    pub fn wins(&self) -> &[Win] {
        &self.wins
    }

    pub fn labels(&self) -> &[Truth] {
        &self.labels
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [Win], &[Truth]) {
        (&mut self.wins, &self.labels)
    }

    /// Replaces the labels, keeping the wins. Used to check label-blindness.
    pub fn with_labels(mut self, labels: Vec<Truth>) -> Result<Self, Error> {
        if labels.len() != self.wins.len() {
            return Err(Error::LengthMismatch {
                wins: self.wins.len(),
                labels: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }
}

/// Exact `p <= c` for `p` in `[0, 1]` and `c` in `(0, 1)`.
///
/// Writes `p = m · 2^e` and compares `m` against `floor(c · 2^-e)`, built
/// one bit at a time by long division.
fn f64_at_most(p: f64, c: Rational) -> bool {
    if p == 0.0 {
        return true;
    }
    let bits = p.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    debug_assert!(exp <= 0);
    let mantissa = u128::from(mantissa);
    let den = c.denom() as u128;
    let mut rem = c.numer() as u128;
    let mut quotient = 0u128;
    for _ in 0..exp.unsigned_abs() {
        rem <<= 1;
        quotient <<= 1;
        if rem >= den {
            rem -= den;
            quotient |= 1;
        }
        if quotient > mantissa {
            return true;
        }
    }
    mantissa <= quotient
}

/// Prefix counts over a sequence.
///
/// Index `k` holds the counts among the first `k` hypotheses; index 0 is all zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanCounts {
    /// Target wins.
    pub targets: Vec<u64>,
    /// Decoy wins.
    pub decoys: Vec<u64>,
    /// True-null target wins (false discoveries if rejected).
    pub false_targets: Vec<u64>,
    /// True nulls.
    pub true_nulls: Vec<u64>,
}

/// Single left-to-right pass computing `T_k`, `D_k`, `I_k` and `N_k`.
pub fn scan_counts(seq: &CompetitionSequence) -> ScanCounts {
    let n = seq.len();
    let mut counts = ScanCounts {
        targets: Vec::with_capacity(n + 1),
        decoys: Vec::with_capacity(n + 1),
        false_targets: Vec::with_capacity(n + 1),
        true_nulls: Vec::with_capacity(n + 1),
    };
    let (mut t, mut d, mut i, mut nulls) = (0, 0, 0, 0);
    counts.targets.push(0);
    counts.decoys.push(0);
    counts.false_targets.push(0);
    counts.true_nulls.push(0);
    for (&win, &label) in seq.wins.iter().zip(&seq.labels) {
        let null = label == Truth::TrueNull;
        nulls += u64::from(null);
        match win {
            Win::Target => {
                t += 1;
                i += u64::from(null);
            }
            Win::Decoy => d += 1,
        }
        counts.targets.push(t);
        counts.decoys.push(d);
        counts.false_targets.push(i);
        counts.true_nulls.push(nulls);
    }
    counts
}

/// Threshold and discovery accounting for one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TrialOutcome {
    /// `K_t`
    pub k: u64,
    /// `T_K`
    pub discoveries: u64,
    /// `I_K`
    pub false_discoveries: u64,
    pub fdp: Rational,
    /// `K = n`
    pub hit_end: bool,
}

impl TrialOutcome {
    /// `D_K = K - T_K`.
    pub fn decoys(&self) -> u64 {
        self.k - self.discoveries
    }
}

/// `I/max(T, 1)` in lowest terms.
pub(crate) fn fdp_of(false_discoveries: u64, discoveries: u64) -> Rational {
    let den = discoveries.max(1);
    let g = gcd_u128(u128::from(false_discoveries), u128::from(den)).max(1) as u64;
    Rational::new(i128::from(false_discoveries / g), i128::from(den / g))
        .expect("denominator is at least one")
}

/// The false discovery proportion of an outcome.
pub fn fdp(outcome: &TrialOutcome) -> Rational {
    fdp_of(outcome.false_discoveries, outcome.discoveries)
}

/// Computes `K_t` for `seq` in one pass, keeping the last prefix that passes.
pub fn reject_threshold(seq: &CompetitionSequence, params: &ProcedureParams) -> TrialOutcome {
    reject_with(seq.wins(), seq.labels(), &params.threshold())
}

pub(crate) fn reject_with(wins: &[Win], labels: &[Truth], threshold: &Threshold) -> TrialOutcome {
    let (mut targets, mut decoys, mut false_targets) = (0u64, 0u64, 0u64);
    let (mut k, mut t_at_k, mut i_at_k) = (0u64, 0u64, 0u64);
    for (pos, (&win, &label)) in wins.iter().zip(labels).enumerate() {
        match win {
            Win::Target => {
                targets += 1;
                false_targets += u64::from(label == Truth::TrueNull);
            }
            Win::Decoy => decoys += 1,
        }
        if threshold.accepts(decoys, targets) {
            k = pos as u64 + 1;
            t_at_k = targets;
            i_at_k = false_targets;
        }
    }
    TrialOutcome {
        k,
        discoveries: t_at_k,
        false_discoveries: i_at_k,
        fdp: fdp_of(i_at_k, t_at_k),
        hit_end: k == wins.len() as u64,
    }
}

/// 1-based indices of the target wins among the first `k` hypotheses.
pub fn discovery_indices(seq: &CompetitionSequence, k: u64) -> Vec<u64> {
    seq.wins()
        .iter()
        .take(k as usize)
        .enumerate()
        .filter(|(_, w)| **w == Win::Target)
        .map(|(i, _)| i as u64 + 1)
        .collect()
}

/// `ceil(t·b)/b`: the representative of `t`'s interval `((m-1)/b, m/b]`.
///
/// All `t` in the same interval produce the same threshold, and every
/// `t > 1 - 1/b` maps to 1.
pub fn canonical_t(t: Rational, b: u64) -> Rational {
    debug_assert!(t.is_positive() && t <= Rational::ONE);
    let scaled = t * Rational::from_integer(i128::from(b));
    Rational::new(scaled.ceil(), i128::from(b)).expect("b is positive")
}
