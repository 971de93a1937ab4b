//! Brute-force ground truth for small instances.
//!
//! Every check here enumerates its whole case space and refuses to run when
//! that space exceeds the budget; nothing is sampled or truncated. Win
//! patterns are encoded as bitmasks: in [`check_theorem1`] bit `j` set means
//! position `j + 1` is a decoy win, and in the construction checks bit `i`
//! set means the `i`-th true null (in position order) is a target win.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::construction::{build_spec, labels, ConstructionSpec};
use crate::rational::Rational;
use crate::seqstep::{canonical_t, reject_with, ProcedureParams, Threshold, TrialOutcome, Truth, Win};
use crate::Error;

/// Largest `n_max` accepted by [`check_theorem1`].
pub const THRESHOLD_CHECK_MAX_LEN: u64 = 20;
/// Largest number of true nulls accepted by the construction enumerations.
pub const MAX_TRUE_NULLS: u64 = 22;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Violation {
    pub encoding: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExhaustReport {
    pub property: String,
    pub parameters: BTreeMap<String, String>,
    pub n: u64,
    pub cases_checked: u64,
    /// Sorted by encoding.
    pub violations: Vec<Violation>,
    pub diagnostics: BTreeMap<String, String>,
}

impl ExhaustReport {
    fn new(property: &str, n: u64) -> Self {
        Self {
            property: property.into(),
            parameters: BTreeMap::new(),
            n,
            cases_checked: 0,
            violations: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    fn finish(mut self) -> Self {
        self.violations.sort_by(|x, y| x.encoding.cmp(&y.encoding).then_with(|| x.detail.cmp(&y.detail)));
        self
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `(D + t)/max(T, 1) <= a/b`, evaluated on fractions rather than the
/// integer form the procedure uses.
fn ratio_passes(decoys: u64, targets: u64, t: Rational, ratio: Rational) -> bool {
    let numerator = Rational::from_integer(i128::from(decoys)) + t;
    numerator / Rational::from_integer(i128::from(targets.max(1))) <= ratio
}

/// The `t` values probed for each interval `((i-1)/b, i/b]`: the midpoint
/// and the right endpoint.
fn t_lattice(b: u64) -> Vec<Rational> {
    let b = i128::from(b);
    (1..=b)
        .flat_map(|i| {
            [
                Rational::new(2 * i - 1, 2 * b).expect("b > 0"),
                Rational::new(i, b).expect("b > 0"),
            ]
        })
        .collect()
}

/// Values of `t` inside `(1 - 1/b, 1]` used to confirm `K_t = K_1`.
fn top_interval_samples(b: u64) -> Vec<Rational> {
    let b = i128::from(b);
    let left = Rational::new(b - 1, b).expect("b > 0");
    vec![
        left + Rational::new(1, 1000 * b).expect("b > 0"),
        Rational::new(2 * b - 1, 2 * b).expect("b > 0"),
        Rational::ONE - Rational::new(1, 1000 * b).expect("b > 0"),
        Rational::ONE,
    ]
}

/// Exhaustively checks that only `ceil(t·b)/b` matters.
///
/// For every win pattern of every length up to `n_max` and every probed
/// `t`, the per-prefix test at `t` must agree with the test at
/// `m/b = ceil(t·b)/b`, and the threshold computed by the procedure must
/// equal both the brute-force maximum at `t` and the threshold at `m/b`.
/// For `t` in `(1 - 1/b, 1]` the threshold must equal `K_1`.
pub fn check_theorem1(params: &ProcedureParams, n_max: u64) -> Result<ExhaustReport, Error> {
    if n_max > THRESHOLD_CHECK_MAX_LEN {
        return Err(Error::BudgetExceeded { needed: n_max, limit: THRESHOLD_CHECK_MAX_LEN });
    }
    let (a, b) = (params.a(), params.b());
    let ratio = params.ratio();
    let mut lattice = t_lattice(b);
    lattice.push(params.t());
    let top = top_interval_samples(b);

    let mut report = ExhaustReport::new("threshold-depends-only-on-ceil-tb", n_max)
        .param("alpha", params.alpha())
        .param("c", params.c())
        .param("a", a)
        .param("b", b)
        .param("n_max", n_max)
        .param("t_values", lattice.len() + top.len());

    for t in &lattice {
        let canon = canonical_t(*t, b);
        if canonical_t(canon, b) != canon {
            report.violations.push(Violation {
                encoding: 0,
                detail: format!("canonical_t is not idempotent at t={t}: {canon}"),
            });
        }
    }

    let one = Threshold::new(a, b, Rational::ONE);
    let probes: Vec<(Rational, Rational, Threshold, Threshold)> = lattice
        .iter()
        .map(|&t| {
            let canon = canonical_t(t, b);
            (t, canon, Threshold::new(a, b, t), Threshold::new(a, b, canon))
        })
        .collect();

    let mut wins = Vec::with_capacity(n_max as usize);
    let mut nulls = Vec::with_capacity(n_max as usize);
    let mut differing_pairs = 0u64;
    for len in 0..=n_max {
        nulls.clear();
        nulls.resize(len as usize, Truth::FalseNull);
        for mask in 0..(1u64 << len) {
            wins.clear();
            wins.extend((0..len).map(|j| if mask >> j & 1 == 1 { Win::Decoy } else { Win::Target }));

            for (t, canon, at_t, at_canon) in &probes {
                report.cases_checked += 1;
                let (mut targets, mut decoys, mut brute_k) = (0u64, 0u64, 0u64);
                for (j, w) in wins.iter().enumerate() {
                    match w {
                        Win::Target => targets += 1,
                        Win::Decoy => decoys += 1,
                    }
                    let lhs = ratio_passes(decoys, targets, *t, ratio);
                    let rhs = ratio_passes(decoys, targets, *canon, ratio);
                    if lhs != rhs {
                        report.violations.push(Violation {
                            encoding: mask,
                            detail: format!("len={len} k={} t={t} m/b={canon}: test gives {lhs} vs {rhs}", j + 1),
                        });
                    }
                    if lhs {
                        brute_k = j as u64 + 1;
                    }
                }
                let k_t = reject_with(&wins, &nulls, at_t).k;
                let k_canon = reject_with(&wins, &nulls, at_canon).k;
                if k_t != brute_k || k_t != k_canon {
                    report.violations.push(Violation {
                        encoding: mask,
                        detail: format!("len={len} t={t}: K_t={k_t}, brute={brute_k}, K_m/b={k_canon}"),
                    });
                }
            }

            let k_one = reject_with(&wins, &nulls, &one).k;
            for t in &top {
                report.cases_checked += 1;
                let k_t = reject_with(&wins, &nulls, &Threshold::new(a, b, *t)).k;
                if k_t != k_one {
                    report.violations.push(Violation {
                        encoding: mask,
                        detail: format!("len={len} t={t}: K_t={k_t} but K_1={k_one}"),
                    });
                }
            }
            // Adjacent intervals are allowed to differ; count how often they do.
            if let Some(below) = b.checked_sub(1).filter(|v| *v > 0) {
                let t_low = Threshold::new(a, b, Rational::new(i128::from(below), i128::from(b)).expect("b > 0"));
                if reject_with(&wins, &nulls, &t_low).k != k_one {
                    differing_pairs += 1;
                }
            }
        }
    }
    report
        .diagnostics
        .insert("patterns_where_K_(b-1)/b_differs_from_K_1".into(), differing_pairs.to_string());
    Ok(report.finish())
}

/// Parameters of a construction enumeration.
struct Enumeration {
    spec: ConstructionSpec,
    null_positions: Vec<usize>,
    labels: Vec<Truth>,
    threshold: Threshold,
}

impl Enumeration {
    fn new(a: u64, b: u64, t: Rational, n: u64) -> Result<Self, Error> {
        if !t.is_positive() || t > Rational::ONE {
            return Err(Error::OutOfRange { name: "t", value: t });
        }
        let spec = build_spec(a, b, n)?;
        let labels = labels(&spec);
        let null_positions: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Truth::TrueNull)
            .map(|(i, _)| i)
            .collect();
        let m = null_positions.len() as u64;
        if m > MAX_TRUE_NULLS {
            return Err(Error::BudgetExceeded { needed: m, limit: MAX_TRUE_NULLS });
        }
        Ok(Self {
            spec,
            null_positions,
            labels,
            threshold: Threshold::new(a, b, t),
        })
    }

    /// Calls `visit(mask, outcome)` for every assignment of the true nulls.
    fn for_each(&self, mut visit: impl FnMut(u64, &TrialOutcome)) {
        let mut wins = vec![Win::Target; self.labels.len()];
        for mask in 0..(1u64 << self.null_positions.len()) {
            for (bit, &pos) in self.null_positions.iter().enumerate() {
                wins[pos] = if mask >> bit & 1 == 1 { Win::Target } else { Win::Decoy };
            }
            let outcome = reject_with(&wins, &self.labels, &self.threshold);
            visit(mask, &outcome);
        }
    }

    fn cases(&self) -> u64 {
        1u64 << self.null_positions.len()
    }
}

fn t_from_u(b: u64, u: u64) -> Result<Rational, Error> {
    if u >= b {
        return Err(Error::OutOfRange { name: "u", value: Rational::from_integer(i128::from(u)) });
    }
    Ok(Rational::new(i128::from(b - u), i128::from(b))?)
}

fn require_u_at_least_a(a: u64, u: u64) -> Result<(), Error> {
    if u < a {
        return Err(Error::OutOfRange { name: "u", value: Rational::from_integer(i128::from(u)) });
    }
    Ok(())
}

/// On the construction with `t = 1 - u/b` (`u >= a`), checks that every
/// assignment with `K < n` has `(D_K + 1)/max(T_K, 1) >= a/b`.
///
/// Also records whether the bound is attained with equality somewhere.
pub fn check_lemma1(a: u64, b: u64, u: u64, n: u64) -> Result<ExhaustReport, Error> {
    require_u_at_least_a(a, u)?;
    let t = t_from_u(b, u)?;
    let e = Enumeration::new(a, b, t, n)?;
    let mut report = ExhaustReport::new("lower-bound-on-estimated-fdp-when-K<n", n)
        .param("a", a)
        .param("b", b)
        .param("u", u)
        .param("t", t);
    let (a128, b128) = (u128::from(a), u128::from(b));
    let (mut tight, mut below_end) = (0u64, 0u64);
    let mut tight_example = None;
    e.for_each(|mask, out| {
        if out.k >= n {
            return;
        }
        below_end += 1;
        let lhs = b128 * u128::from(out.decoys() + 1);
        let rhs = a128 * u128::from(out.discoveries.max(1));
        if lhs < rhs {
            report.violations.push(Violation {
                encoding: mask,
                detail: format!("K={} D_K={} T_K={}", out.k, out.decoys(), out.discoveries),
            });
        } else if lhs == rhs {
            tight += 1;
            tight_example.get_or_insert(mask);
        }
    });
    report.cases_checked = e.cases();
    report.diagnostics.insert("assignments_with_K<n".into(), below_end.to_string());
    report.diagnostics.insert("tight_cases".into(), tight.to_string());
    report.diagnostics.insert(
        "tightness".into(),
        match tight_example {
            Some(mask) => format!("attained (first mask {mask})"),
            None => "not attained; inspect".into(),
        },
    );
    Ok(report.finish())
}

/// On the same enumeration as [`check_lemma1`], checks that every realized
/// `0 < K < n` has a true null at `K + 1`. For `a = 1, b = 10, u = 1` it
/// also checks `K mod 11` is 9 or 10.
pub fn check_k_residues(a: u64, b: u64, u: u64, n: u64) -> Result<ExhaustReport, Error> {
    require_u_at_least_a(a, u)?;
    let t = t_from_u(b, u)?;
    let e = Enumeration::new(a, b, t, n)?;
    let period = e.spec.period;
    let mut report = ExhaustReport::new("threshold-stops-before-a-true-null", n)
        .param("a", a)
        .param("b", b)
        .param("u", u)
        .param("t", t);
    let tdc_tenth = (a, b, u) == (1, 10, 1);
    let mut realized = BTreeSet::new();
    e.for_each(|mask, out| {
        realized.insert(out.k);
        if out.k == 0 || out.k >= n {
            return;
        }
        if !e.spec.is_true_null(out.k + 1) {
            report.violations.push(Violation {
                encoding: mask,
                detail: format!("K={} but position {} is a false null", out.k, out.k + 1),
            });
        }
        if tdc_tenth && !matches!(out.k % period, 9 | 10) {
            report.violations.push(Violation {
                encoding: mask,
                detail: format!("K={} has residue {} mod {period}", out.k, out.k % period),
            });
        }
    });
    report.cases_checked = e.cases();
    let residues: BTreeSet<u64> = realized.iter().filter(|k| **k > 0 && **k < n).map(|k| k % period).collect();
    report.diagnostics.insert("realized_K".into(), join(realized.iter()));
    report.diagnostics.insert("realized_residues_0<K<n".into(), join(residues.iter()));
    Ok(report.finish())
}

fn join<'a>(values: impl Iterator<Item = &'a u64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Exact expectations over every assignment of the true nulls.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExactFdr {
    /// `E[FDP]`
    pub fdr: Rational,
    /// `P(K = n)`
    pub p_hit_end: Rational,
    /// `E[I_K/(D_K + 1) · 1{K < n}]`
    pub z_mean: Rational,
    pub assignments: u64,
    /// Total probability of all assignments; 1 by construction.
    pub probability_mass: Rational,
}

/// Exact FDR of the construction with `t = 1 - u/b`, true nulls winning with probability `c`.
pub fn exact_fdr(a: u64, b: u64, u: u64, n: u64, c: Rational) -> Result<ExactFdr, Error> {
    exact_fdr_at(a, b, t_from_u(b, u)?, n, c)
}

/// [`exact_fdr`] for an arbitrary `t` in `(0, 1]`.
pub fn exact_fdr_at(a: u64, b: u64, t: Rational, n: u64, c: Rational) -> Result<ExactFdr, Error> {
    if !c.is_positive() || c >= Rational::ONE {
        return Err(Error::OutOfRange { name: "c", value: c });
    }
    let e = Enumeration::new(a, b, t, n)?;
    let m = e.null_positions.len() as u32;
    // Probability of an assignment is num^w (den-num)^(m-w) / den^m.
    let num = u128::try_from(c.numer()).map_err(|_| Error::Overflow)?;
    let den = u128::try_from(c.denom()).map_err(|_| Error::Overflow)?;
    let total = den.checked_pow(m).ok_or(Error::Overflow)?;
    let mut weights = Vec::with_capacity(m as usize + 1);
    for w in 0..=m {
        let heads = num.checked_pow(w).ok_or(Error::Overflow)?;
        let tails = (den - num).checked_pow(m - w).ok_or(Error::Overflow)?;
        weights.push(heads.checked_mul(tails).ok_or(Error::Overflow)?);
    }

    // Sum of weight·I_K grouped by denominator, so each group is one fraction.
    let mut fdp_by_targets = vec![0u128; n as usize + 2];
    let mut z_by_decoys = vec![0u128; n as usize + 2];
    let (mut mass, mut hit_end) = (0u128, 0u128);
    let mut overflow = false;
    e.for_each(|mask, out| {
        let weight = weights[mask.count_ones() as usize];
        let mut add = |slot: &mut u128, v: u128| match slot.checked_add(v) {
            Some(s) => *slot = s,
            None => overflow = true,
        };
        add(&mut mass, weight);
        let fd = weight.checked_mul(u128::from(out.false_discoveries));
        match fd {
            Some(fd) => {
                add(&mut fdp_by_targets[out.discoveries.max(1) as usize], fd);
                if out.hit_end {
                    add(&mut hit_end, weight);
                } else {
                    add(&mut z_by_decoys[(out.decoys() + 1) as usize], fd);
                }
            }
            None => overflow = true,
        }
    });
    if overflow {
        return Err(Error::Overflow);
    }

    let total_r = to_rational(total, 1)?;
    let grouped = |buckets: &[u128]| -> Result<Rational, Error> {
        let mut sum = Rational::ZERO;
        for (k, &s) in buckets.iter().enumerate().filter(|(_, s)| **s > 0) {
            sum = sum.checked_add(to_rational(s, k as u128)?).ok_or(Error::Overflow)?;
        }
        sum.checked_div(total_r).ok_or(Error::Overflow)
    };
    Ok(ExactFdr {
        fdr: grouped(&fdp_by_targets)?,
        p_hit_end: to_rational(hit_end, total)?,
        z_mean: grouped(&z_by_decoys)?,
        assignments: e.cases(),
        probability_mass: to_rational(mass, total)?,
    })
}

fn to_rational(num: u128, den: u128) -> Result<Rational, Error> {
    let num = i128::try_from(num).map_err(|_| Error::Overflow)?;
    let den = i128::try_from(den).map_err(|_| Error::Overflow)?;
    Ok(Rational::new(num, den)?)
}
