//! Strand-level channel simulators and symbol plumbing.
//!
//! Deletion and insertion channels act on one strand at a time and return a
//! [`ReceivedStrand`]. Reads past the end of a shortened strand yield
//! [`Symbol::Erasure`], which is a separate value and never aliases a data bit.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::polar::bsc_llr_magnitude;
use crate::scalar::Scalar;

/// A received binary symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Symbol {
    Zero = 0,
    One = 1,
    Erasure = 2,
}

impl Symbol {
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Symbol::Zero
        } else {
            Symbol::One
        }
    }

    /// The data bit, or `None` for an erasure.
    pub fn bit(self) -> Option<u8> {
        match self {
            Symbol::Zero => Some(0),
            Symbol::One => Some(1),
            Symbol::Erasure => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Erasure => '?',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Symbol::Zero),
            '1' => Some(Symbol::One),
            '?' => Some(Symbol::Erasure),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Substitution,
    Deletion,
    Insertion,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Substitution => "substitution",
            ChannelKind::Deletion => "deletion",
            ChannelKind::Insertion => "insertion",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "substitution" | "bsc" => Ok(ChannelKind::Substitution),
            "deletion" | "deletions" => Ok(ChannelKind::Deletion),
            "insertion" | "insertions" => Ok(ChannelKind::Insertion),
            other => invalid(format!("unknown error kind `{other}`")),
        }
    }
}

fn check_channel_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta >= T::zero() && delta < T::one()) {
        return invalid(format!("channel probability must lie in [0, 1), got {delta}"));
    }
    Ok(())
}

/// Error model and its per-symbol probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec<T> {
    kind: ChannelKind,
    delta: T,
}

impl<T: Scalar> ChannelSpec<T> {
    pub fn new(kind: ChannelKind, delta: T) -> Result<Self> {
        check_channel_delta(delta)?;
        Ok(Self { kind, delta })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn apply<R: Rng + ?Sized>(&self, strand: &[u8], rng: &mut R) -> ReceivedStrand {
        let p = self.delta.to_f64_lossy();
        match self.kind {
            ChannelKind::Substitution => ReceivedStrand::from_bits(&flip_bits(strand, p, rng)),
            ChannelKind::Deletion => apply_kept(strand, &sample_kept(strand.len(), p, rng)),
            ChannelKind::Insertion => apply_insertions(strand, &sample_insertions(strand.len(), p, rng)),
        }
    }
}

/// Post-channel strand. Reads beyond the raw output are erasures, so the
/// padded length is `max(original_length, raw length)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedStrand {
    symbols: Vec<Symbol>,
    original_length: usize,
}

impl ReceivedStrand {
    pub fn new(symbols: Vec<Symbol>, original_length: usize) -> Self {
        Self {
            symbols,
            original_length,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self::new(bits.iter().map(|&b| Symbol::from_bit(b)).collect(), bits.len())
    }

    /// Raw channel output, without padding.
    pub fn raw(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn raw_len(&self) -> usize {
        self.symbols.len()
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    pub fn len(&self) -> usize {
        self.symbols.len().max(self.original_length)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symbol at 0-based `index`; erasure past the raw output.
    pub fn get(&self, index: usize) -> Symbol {
        self.symbols.get(index).copied().unwrap_or(Symbol::Erasure)
    }

    pub fn padded(&self) -> Vec<Symbol> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

fn flip_bits<R: Rng + ?Sized>(strand: &[u8], p: f64, rng: &mut R) -> Vec<u8> {
    strand
        .iter()
        .map(|&b| (b & 1) ^ u8::from(rng.gen::<f64>() < p))
        .collect()
}

/// Binary symmetric channel: each bit flips independently with probability `delta`.
pub fn bsc_apply<T: Scalar, R: Rng + ?Sized>(strand: &[u8], delta: T, rng: &mut R) -> Result<Vec<u8>> {
    check_channel_delta(delta)?;
    Ok(flip_bits(strand, delta.to_f64_lossy(), rng))
}

/// Kept-index mask of a probabilistic deletion channel over `len` symbols.
pub fn sample_kept<R: Rng + ?Sized>(len: usize, delta: f64, rng: &mut R) -> Vec<bool> {
    (0..len).map(|_| rng.gen::<f64>() >= delta).collect()
}

/// Keeps the symbols whose mask entry is set, in order.
pub fn apply_kept(strand: &[u8], kept: &[bool]) -> ReceivedStrand {
    debug_assert_eq!(strand.len(), kept.len());
    let symbols = strand
        .iter()
        .zip(kept)
        .filter(|(_, &k)| k)
        .map(|(&b, _)| Symbol::from_bit(b))
        .collect();
    ReceivedStrand::new(symbols, strand.len())
}

/// Probabilistic deletion channel.
pub fn delete_apply<T: Scalar, R: Rng + ?Sized>(strand: &[u8], delta: T, rng: &mut R) -> Result<ReceivedStrand> {
    check_channel_delta(delta)?;
    let kept = sample_kept(strand.len(), delta.to_f64_lossy(), rng);
    Ok(apply_kept(strand, &kept))
}

/// Deletes exactly the listed 0-based positions.
pub fn delete_at(strand: &[u8], positions: &[usize]) -> Result<ReceivedStrand> {
    let mut kept = vec![true; strand.len()];
    for &p in positions {
        if p >= strand.len() {
            return invalid(format!("deletion position {p} out of range"));
        }
        kept[p] = false;
    }
    Ok(apply_kept(strand, &kept))
}

/// Insertion pattern: for each original slot, the symbol inserted right before it.
pub type InsertionPattern = Vec<Option<u8>>;

/// One Bernoulli(`delta`) trial per original symbol; inserted bits are uniform.
pub fn sample_insertions<R: Rng + ?Sized>(len: usize, delta: f64, rng: &mut R) -> InsertionPattern {
    (0..len)
        .map(|_| {
            if rng.gen::<f64>() < delta {
                Some(rng.gen_range(0..=1u8))
            } else {
                None
            }
        })
        .collect()
}

pub fn apply_insertions(strand: &[u8], pattern: &[Option<u8>]) -> ReceivedStrand {
    debug_assert_eq!(strand.len(), pattern.len());
    let mut symbols = Vec::with_capacity(strand.len() + pattern.iter().flatten().count());
    for (&b, ins) in strand.iter().zip(pattern) {
        if let Some(extra) = ins {
            symbols.push(Symbol::from_bit(*extra));
        }
        symbols.push(Symbol::from_bit(b));
    }
    ReceivedStrand::new(symbols, strand.len())
}

/// Probabilistic insertion channel.
pub fn insert_apply<T: Scalar, R: Rng + ?Sized>(strand: &[u8], delta: T, rng: &mut R) -> Result<ReceivedStrand> {
    check_channel_delta(delta)?;
    let pattern = sample_insertions(strand.len(), delta.to_f64_lossy(), rng);
    Ok(apply_insertions(strand, &pattern))
}

/// Inserts `bit` immediately before 0-based position `position`.
pub fn insert_at(strand: &[u8], position: usize, bit: u8) -> Result<ReceivedStrand> {
    if position >= strand.len() {
        return invalid(format!("insertion position {position} out of range"));
    }
    let mut pattern = vec![None; strand.len()];
    pattern[position] = Some(bit & 1);
    Ok(apply_insertions(strand, &pattern))
}

/// LLR of a received symbol under BSC(`delta`); erasures carry no information.
pub fn llr_of<T: Scalar>(symbol: Symbol, delta: T) -> Result<T> {
    if !(delta > T::zero() && delta < T::lit(0.5)) {
        return invalid(format!("LLR model probability must lie in (0, 1/2), got {delta}"));
    }
    Ok(llr_with_magnitude(symbol, bsc_llr_magnitude(delta)))
}

/// `llr_of` with a precomputed `|log((1 - delta) / delta)|`.
#[inline]
pub fn llr_with_magnitude<T: Scalar>(symbol: Symbol, magnitude: T) -> T {
    match symbol {
        Symbol::Zero => magnitude,
        Symbol::One => -magnitude,
        Symbol::Erasure => T::zero(),
    }
}

/// A nucleotide. Identified with `{0, 1, i, 1 + i}` so that the real part is the
/// low bit and the imaginary part the high bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    A,
    C,
    G,
    T,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    pub fn from_parts(real: u8, imag: u8) -> Self {
        match ((real & 1), (imag & 1)) {
            (0, 0) => Base::A,
            (1, 0) => Base::C,
            (0, 1) => Base::G,
            _ => Base::T,
        }
    }

    pub fn real(self) -> u8 {
        matches!(self, Base::C | Base::T) as u8
    }

    pub fn imag(self) -> u8 {
        matches!(self, Base::G | Base::T) as u8
    }

    pub fn to_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(Base::A),
            'C' => Some(Base::C),
            'G' => Some(Base::G),
            'T' => Some(Base::T),
            _ => None,
        }
    }
}

pub fn parse_bases(s: &str) -> Result<Vec<Base>> {
    s.chars()
        .map(|c| Base::from_char(c).ok_or_else(|| Error::InvalidArgument(format!("`{c}` is not a nucleotide"))))
        .collect()
}

/// Splits a quaternary strand into its real and imaginary binary strands.
pub fn quaternary_split(strand: &[Base]) -> (Vec<u8>, Vec<u8>) {
    strand.iter().map(|b| (b.real(), b.imag())).unzip()
}

pub fn quaternary_merge(real: &[u8], imag: &[u8]) -> Result<Vec<Base>> {
    if real.len() != imag.len() {
        return invalid(format!("part lengths differ: {} vs {}", real.len(), imag.len()));
    }
    Ok(real.iter().zip(imag).map(|(&r, &i)| Base::from_parts(r, i)).collect())
}

/// Quaternary channel on a strand of bases. Deletions remove whole letters,
/// so the real and imaginary parts lose the same positions; inserted letters
/// are uniform; substitutions pick one of the three other letters uniformly.
pub fn quaternary_apply<T: Scalar, R: Rng + ?Sized>(
    strand: &[Base],
    channel: &ChannelSpec<T>,
    rng: &mut R,
) -> Vec<Base> {
    let p = channel.delta().to_f64_lossy();
    match channel.kind() {
        ChannelKind::Deletion => strand.iter().copied().filter(|_| rng.gen::<f64>() >= p).collect(),
        ChannelKind::Insertion => {
            let mut out = Vec::with_capacity(strand.len() + strand.len() / 8);
            for &b in strand {
                if rng.gen::<f64>() < p {
                    out.push(Base::ALL[rng.gen_range(0..4)]);
                }
                out.push(b);
            }
            out
        }
        ChannelKind::Substitution => strand
            .iter()
            .map(|&b| {
                if rng.gen::<f64>() < p {
                    let mask = rng.gen_range(1..4u8);
                    Base::from_parts(b.real() ^ (mask & 1), b.imag() ^ (mask >> 1))
                } else {
                    b
                }
            })
            .collect(),
    }
}
