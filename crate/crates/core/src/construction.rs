//! The periodic arrangement of true and false nulls that defeats `t < 1`.
//!
//! With `a/b = (1-c)/c · alpha` coprime and `a < b`, positions repeat with
//! period `a + b`. Inside each cycle the true nulls sit at the residues
//! `-j·a^{-1} (mod a+b)` for `j = 0..=2a`, which is the same set as
//! `j·b^{-1}` because `-a ≡ b`. Residue 0 is stored as offset `a + b` so
//! offsets are 1-based like positions. Every false null gets `p = c`, so it
//! is always a target win; each true null is a target win with probability
//! exactly `c`.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::rational::{gcd_u128, Rational};
use crate::seqstep::{CompetitionSequence, Truth, Win, MAX_PARAM_MAGNITUDE};
use crate::Error;

/// `y` in `[1, modulus)` with `x·y ≡ 1 (mod modulus)`, by extended Euclid.
pub fn mod_inverse(x: i64, modulus: u64) -> Result<u64, Error> {
    if modulus < 2 {
        return Err(Error::NotInvertible { value: x, modulus });
    }
    let m = i128::from(modulus);
    let (mut old_r, mut r) = (i128::from(x).rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible { value: x, modulus });
    }
    Ok(old_s.rem_euclid(m) as u64)
}

/// Lowest-terms `(a, b)` with `a/b = (1-c)/c · alpha`.
pub fn derive_ab(alpha: Rational, c: Rational) -> Result<(u64, u64), Error> {
    for (name, v) in [("alpha", alpha), ("c", c)] {
        if !v.is_positive() || v >= Rational::ONE {
            return Err(Error::OutOfRange { name, value: v });
        }
    }
    let ratio = (Rational::ONE - c)
        .checked_div(c)
        .and_then(|odds| odds.checked_mul(alpha))
        .ok_or(Error::TooLarge { name: "(1-c)/c·alpha" })?;
    let limit = i128::from(MAX_PARAM_MAGNITUDE);
    if ratio.numer() > limit || ratio.denom() > limit {
        return Err(Error::TooLarge { name: "(1-c)/c·alpha" });
    }
    Ok((ratio.numer() as u64, ratio.denom() as u64))
}

/// Where the true nulls sit, cycle by cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConstructionSpec {
    pub a: u64,
    pub b: u64,
    pub n: u64,
    pub period: u64,
    /// Sorted 1-based offsets within a cycle; `period` stands for residue 0.
    pub cycle_null_offsets: Vec<u64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    null_at_offset: Vec<bool>,
}

/// Maps a residue mod `period` onto `1..=period`.
fn offset_of(residue: u64, period: u64) -> u64 {
    if residue == 0 {
        period
    } else {
        residue
    }
}

/// True-null offsets computed as `{j·b^{-1} mod (a+b)}`, the second route.
pub fn offsets_via_b_inverse(a: u64, b: u64) -> Result<Vec<u64>, Error> {
    let period = a + b;
    let b_inv = u128::from(mod_inverse(b as i64, period)?);
    let mut out: Vec<u64> = (0..=2 * a)
        .map(|j| offset_of(((u128::from(j) * b_inv) % u128::from(period)) as u64, period))
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Builds the construction for `n` hypotheses.
pub fn build_spec(a: u64, b: u64, n: u64) -> Result<ConstructionSpec, Error> {
    if a == 0 || a >= b || gcd_u128(a.into(), b.into()) != 1 {
        return Err(Error::NotConstructible { a, b });
    }
    if n == 0 {
        return Err(Error::EmptyConstruction);
    }
    if b > MAX_PARAM_MAGNITUDE {
        return Err(Error::TooLarge { name: "b" });
    }
    let period = a + b;
    let p = u128::from(period);
    let a_inv = u128::from(mod_inverse(a as i64, period)?);
    let mut offsets: Vec<u64> = (0..=2 * a)
        .map(|j| {
            // -j·a^{-1} mod p
            let forward = (u128::from(j) * a_inv) % p;
            offset_of(((p - forward) % p) as u64, period)
        })
        .collect();
    offsets.sort_unstable();
    offsets.dedup();
    if offsets.len() as u64 != 2 * a + 1 {
        return Err(Error::NotConstructible { a, b });
    }
    let mut null_at_offset = vec![false; period as usize + 1];
    for &o in &offsets {
        null_at_offset[o as usize] = true;
    }
    Ok(ConstructionSpec {
        a,
        b,
        n,
        period,
        cycle_null_offsets: offsets,
        null_at_offset,
    })
}

impl ConstructionSpec {
    /// Same cycle structure, different length.
    pub fn with_n(&self, n: u64) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::EmptyConstruction);
        }
        Ok(Self { n, ..self.clone() })
    }

    /// Whether 1-based `position` is a true null.
    #[inline]
    pub fn is_true_null(&self, position: u64) -> bool {
        self.null_at_offset[offset_of(position % self.period, self.period) as usize]
    }

    /// Number of true nulls among positions `1..=n`.
    pub fn true_null_count(&self) -> u64 {
        let full = self.n / self.period;
        let partial = (1..=self.n % self.period).filter(|&o| self.null_at_offset[o as usize]).count();
        full * self.cycle_null_offsets.len() as u64 + partial as u64
    }

    /// 1-based positions of the true nulls.
    pub fn true_null_positions(&self) -> Vec<u64> {
        (1..=self.n).filter(|&k| self.is_true_null(k)).collect()
    }
}

/// Truth label at every position `1..=n`.
pub fn labels(spec: &ConstructionSpec) -> Vec<Truth> {
    (1..=spec.n)
        .map(|k| if spec.is_true_null(k) { Truth::TrueNull } else { Truth::FalseNull })
        .collect()
}

/// A coin that lands heads with probability exactly `num/den`.
///
/// Draws a uniform `u64`, rejects the top `2^64 mod den` values so that
/// the remainder mod `den` is exactly uniform, and reports heads when that
/// remainder is below `num`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactBernoulli {
    num: u64,
    den: u64,
    /// Draws `>= zone` are rejected; `zone` is the largest multiple of `den` that fits.
    zone: u128,
}

impl ExactBernoulli {
    pub fn new(p: Rational) -> Result<Self, Error> {
        if !p.is_positive() || p >= Rational::ONE {
            return Err(Error::OutOfRange { name: "c", value: p });
        }
        let num = u64::try_from(p.numer()).map_err(|_| Error::TooLarge { name: "c" })?;
        let den = u64::try_from(p.denom()).map_err(|_| Error::TooLarge { name: "c" })?;
        let span = 1u128 << 64;
        Ok(Self {
            num,
            den,
            zone: span - span % u128::from(den),
        })
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> bool {
        loop {
            let draw = rng.next_u64();
            if u128::from(draw) < self.zone {
                return draw % self.den < self.num;
            }
        }
    }
}

/// Draws one trial: false nulls win as targets, true nulls win with probability `c`.
pub fn sample_trial<R: RngCore + ?Sized>(
    spec: &ConstructionSpec,
    c: Rational,
    rng: &mut R,
) -> Result<CompetitionSequence, Error> {
    let half = Rational::new(1, 2)?;
    if c > half {
        return Err(Error::OutOfRange { name: "c", value: c });
    }
    let coin = ExactBernoulli::new(c)?;
    let labels = labels(spec);
    let mut seq = CompetitionSequence::new(vec![Win::Target; labels.len()], labels)?;
    resample(&mut seq, &coin, rng);
    Ok(seq)
}

/// Redraws the wins of `seq` in place; labels are left untouched.
///
/// Draws are consumed in position order, one coin per true null.
pub fn resample<R: RngCore + ?Sized>(seq: &mut CompetitionSequence, coin: &ExactBernoulli, rng: &mut R) {
    let (wins, labels) = seq.parts_mut();
    for (win, label) in wins.iter_mut().zip(labels) {
        *win = match label {
            Truth::FalseNull => Win::Target,
            Truth::TrueNull if coin.sample(rng) => Win::Target,
            Truth::TrueNull => Win::Decoy,
        };
    }
}
