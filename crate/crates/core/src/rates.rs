//! Closed-form rate model for the concatenation baseline.
//!
//! Each strand is protected by an inner combinatorial deletion code that
//! corrects up to `d` deletions with redundancy `r(d)`; strands with more than
//! `d` deletions are erased and recovered by an idealized outer erasure code
//! whose rate equals the probability that a strand survives. The overall rate
//! at deletion probability `delta` is
//!
//! ```text
//! (1 - r(d) / ell) * P[Bin(ell, delta) <= d]
//! ```
//!
//! and the envelope takes the best `d` for every `delta`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::STRAND_LENGTH;

/// Alphabet size of the strand symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alphabet {
    Binary,
    Quaternary,
}

impl Alphabet {
    pub fn size(self) -> u32 {
        match self {
            Alphabet::Binary => 2,
            Alphabet::Quaternary => 4,
        }
    }

    pub fn from_size(q: u32) -> Result<Self> {
        match q {
            2 => Ok(Alphabet::Binary),
            4 => Ok(Alphabet::Quaternary),
            other => invalid(format!("alphabet size must be 2 or 4, got {other}")),
        }
    }

    /// `log_q(x)`.
    pub fn log<T: Scalar>(self, x: T) -> T {
        x.log2() / T::from_u32(self.size()).unwrap().log2()
    }
}

/// Which redundancy curve `r(d)` is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// Best known explicit constructions.
    Explicit,
    /// Existence results without an efficient construction (`2 d log_q ell`).
    Implicit,
    /// Hypothetical codes meeting the lower bound (`d log_q ell`).
    Putative,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 3] = [FamilyKind::Explicit, FamilyKind::Implicit, FamilyKind::Putative];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Explicit => "explicit",
            FamilyKind::Implicit => "implicit",
            FamilyKind::Putative => "putative",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" => Ok(FamilyKind::Explicit),
            "implicit" => Ok(FamilyKind::Implicit),
            "putative" => Ok(FamilyKind::Putative),
            other => invalid(format!("unknown rate family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RateFamily {
    pub alphabet: Alphabet,
    pub kind: FamilyKind,
}

impl RateFamily {
    pub fn new(alphabet: Alphabet, kind: FamilyKind) -> Self {
        Self { alphabet, kind }
    }

    pub fn binary(kind: FamilyKind) -> Self {
        Self::new(Alphabet::Binary, kind)
    }

    pub fn quaternary(kind: FamilyKind) -> Self {
        Self::new(Alphabet::Quaternary, kind)
    }
}

/// Binary entropy `h2(p)` in bits.
pub fn h2<T: Scalar>(p: T) -> T {
    if p <= T::zero() || p >= T::one() {
        return T::zero();
    }
    -(p * p.log2()) - (T::one() - p) * (T::one() - p).log2()
}

/// Symmetric quaternary entropy `h4(p)` in quaternary digits, with the
/// substitution mass `p` spread evenly over the three wrong letters.
pub fn h4<T: Scalar>(p: T) -> T {
    if p <= T::zero() {
        return T::zero();
    }
    let four = T::lit(4.0);
    let three = T::lit(3.0);
    let mut h = -(p * (p / three).log(four));
    if p < T::one() {
        h = h - (T::one() - p) * (T::one() - p).log(four);
    }
    h
}

fn check_probability<T: Scalar>(name: &str, p: T) -> Result<()> {
    if !(p >= T::zero() && p <= T::one()) {
        return invalid(format!("{name} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

/// `h2(p)` or `h4(p)` depending on the alphabet.
pub fn entropy<T: Scalar>(alphabet: Alphabet, p: T) -> Result<T> {
    check_probability("probability", p)?;
    Ok(match alphabet {
        Alphabet::Binary => h2(p),
        Alphabet::Quaternary => h4(p),
    })
}

/// Capacity of the binary or quaternary symmetric channel, `1 - h_q(delta)`.
pub fn capacity<T: Scalar>(alphabet: Alphabet, delta: T) -> Result<T> {
    let h = entropy(alphabet, delta)?;
    Ok((T::one() - h).max(T::zero()).min(T::one()))
}

fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `P[Bin(ell, delta) <= d]` for every `d` in `0..=ell`, accumulated in the log
/// domain.
pub fn binom_cdf_table<T: Scalar>(ell: usize, delta: T) -> Result<Vec<T>> {
    check_probability("delta", delta)?;
    if delta == T::zero() {
        return Ok(vec![T::one(); ell + 1]);
    }
    if delta == T::one() {
        let mut table = vec![T::zero(); ell + 1];
        table[ell] = T::one();
        return Ok(table);
    }
    let ln_p = delta.ln();
    let ln_q = (-delta).ln_1p();
    let mut ln_choose = T::zero();
    let mut acc = T::neg_infinity();
    let mut table = Vec::with_capacity(ell + 1);
    for k in 0..=ell {
        if k > 0 {
            ln_choose = ln_choose + (T::from_count(ell - k + 1) / T::from_count(k)).ln();
        }
        let term = ln_choose + T::from_count(k) * ln_p + T::from_count(ell - k) * ln_q;
        acc = log_add_exp(acc, term);
        table.push(acc.exp().min(T::one()));
    }
    table[ell] = T::one();
    Ok(table)
}

/// `P[Bin(ell, delta) <= d]`.
pub fn binom_cdf<T: Scalar>(ell: usize, delta: T, d: usize) -> Result<T> {
    if d > ell {
        return invalid(format!("d = {d} exceeds ell = {ell}"));
    }
    Ok(binom_cdf_table(ell, delta)?[d])
}

/// Redundancy `r(d)` of the inner deletion code, in q-ary symbols.
///
/// The asymptotic expressions are taken as exact at the strand length. For the
/// quaternary explicit constructions the `log2 ell` multipliers are counted as
/// quaternary symbols, which is what places the `d = 2` point at 5 and the
/// `d >= 3` plateau at 8 on the normalized redundancy chart.
pub fn redundancy<T: Scalar>(family: RateFamily, d: usize, ell: usize) -> Result<T> {
    if ell < 2 {
        return invalid(format!("strand length must be at least 2, got {ell}"));
    }
    if d == 0 {
        return Ok(T::zero());
    }
    let ell_t = T::from_count(ell);
    let log2_ell = ell_t.log2();
    let logq_ell = family.alphabet.log(ell_t);
    let d_t = T::from_count(d);
    let r = match (family.kind, family.alphabet) {
        (FamilyKind::Putative, _) => d_t * logq_ell,
        // Single-deletion codes already meet the bound; the factor 2 starts at d = 2.
        (FamilyKind::Implicit, _) if d == 1 => logq_ell,
        (FamilyKind::Implicit, _) => T::lit(2.0) * d_t * logq_ell,
        (FamilyKind::Explicit, Alphabet::Binary) => match d {
            1 => log2_ell,
            2 => T::lit(4.0) * log2_ell,
            _ => (T::lit(4.0) * d_t - T::one()) * log2_ell,
        },
        (FamilyKind::Explicit, Alphabet::Quaternary) => match d {
            1 => logq_ell,
            2 => T::lit(5.0) * log2_ell,
            _ => T::lit(4.0) * d_t * log2_ell,
        },
    };
    Ok(r)
}

/// `r(d) / (d log_q ell)`, the quantity charted against `d` when comparing
/// families. Undefined at `d = 0`.
pub fn normalized_redundancy<T: Scalar>(family: RateFamily, d: usize, ell: usize) -> Result<T> {
    if d == 0 {
        return invalid("normalized redundancy is undefined at d = 0");
    }
    let r: T = redundancy(family, d, ell)?;
    Ok(r / (T::from_count(d) * family.alphabet.log(T::from_count(ell))))
}

fn inner_rate<T: Scalar>(family: RateFamily, d: usize, ell: usize) -> Result<T> {
    let r: T = redundancy(family, d, ell)?;
    Ok((T::one() - r / T::from_count(ell)).max(T::zero()))
}

/// Overall concatenation rate for a fixed inner correction capability `d`.
pub fn concat_rate<T: Scalar>(family: RateFamily, delta: T, d: usize, ell: usize) -> Result<T> {
    let outer = binom_cdf(ell, delta, d)?;
    Ok(inner_rate::<T>(family, d, ell)? * outer)
}

/// Pointwise maximum of [`concat_rate`] over `d` in `0..=ell`, with ties going
/// to the smaller `d`. Returns `(rate, argmax d)`.
pub fn concat_envelope<T: Scalar>(family: RateFamily, delta: T, ell: usize) -> Result<(T, usize)> {
    let cdf = binom_cdf_table(ell, delta)?;
    let mut best = (T::neg_infinity(), 0);
    for (d, outer) in cdf.into_iter().enumerate() {
        let rate = inner_rate::<T>(family, d, ell)? * outer;
        if rate > best.0 {
            best = (rate, d);
        }
    }
    Ok(best)
}

/// `points` values spaced evenly in `log10` between `lo` and `hi` inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, points: usize) -> Result<Vec<T>> {
    if !(lo > T::zero() && hi >= lo) || points == 0 {
        return invalid("log grid needs 0 < lo <= hi and at least one point");
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / T::from_count(points - 1);
    let ten = T::lit(10.0);
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                ten.powf(a + step * T::from_count(i))
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcatPoint<T> {
    pub delta: T,
    pub d: usize,
    pub rate: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint<T> {
    pub delta: T,
    pub rate: T,
    pub opt_d: usize,
}

/// The `(delta, d, rate)` grid behind the per-`d` concatenation curves.
pub fn concat_grid<T: Scalar>(
    family: RateFamily,
    deltas: &[T],
    ds: impl IntoIterator<Item = usize> + Clone,
    ell: usize,
) -> Result<Vec<ConcatPoint<T>>> {
    let mut out = Vec::new();
    for &delta in deltas {
        let cdf = binom_cdf_table(ell, delta)?;
        for d in ds.clone() {
            if d > ell {
                return invalid(format!("d = {d} exceeds ell = {ell}"));
            }
            out.push(ConcatPoint {
                delta,
                d,
                rate: inner_rate::<T>(family, d, ell)? * cdf[d],
            });
        }
    }
    Ok(out)
}

pub fn envelope_curve<T: Scalar>(family: RateFamily, deltas: &[T], ell: usize) -> Result<Vec<EnvelopePoint<T>>> {
    deltas
        .iter()
        .map(|&delta| {
            let (rate, opt_d) = concat_envelope(family, delta, ell)?;
            Ok(EnvelopePoint { delta, rate, opt_d })
        })
        .collect()
}

/// Default strand length for the free functions that take `ell`.
pub const DEFAULT_ELL: usize = STRAND_LENGTH;
