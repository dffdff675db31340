//! Cross-strand polar coding of a DNA pool and the resynchronizing decoder.
//!
//! A pool is an `n x ell` bit matrix, one row per strand. Column `p` (the `p`-th
//! letter of every strand) is one codeword of a length-`n` polar code, so a pool
//! carries `ell * k` information bits.
//!
//! Decoding walks the columns in order. Each strand keeps an offset that tracks
//! how many deletions (push) or insertions (pull) have been inferred on it so
//! far; column `p` reads symbol `p - offset` or `p + offset` of each received
//! strand. When the re-encoded decoded column disagrees with a strand's
//! (non-erased) observation, that strand's offset grows by one.

use rand::Rng;

use crate::channels::{self, Base, ChannelKind, ChannelSpec, ReceivedStrand, Symbol};
use crate::error::{invalid, Result};
use crate::polar::{bsc_llr_magnitude, transform_in_place, PolarCode, ScDecoder};
use crate::scalar::Scalar;

/// Dense row-major matrix of bits stored one per byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return invalid(format!("row {i} has {} entries, expected {cols}", r.len()));
            }
            data.extend(r.iter().map(|b| b & 1));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.gen_range(0..=1u8)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, bit: u8) {
        self.data[r * self.cols + c] = bit & 1;
    }

    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.cols + c] ^= 1;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u8] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// Number of positions where the two matrices differ.
    pub fn hamming(&self, other: &BitMatrix) -> Result<usize> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return invalid(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        Ok(self.data.iter().zip(&other.data).filter(|(a, b)| a != b).count())
    }
}

/// `n` strands of `ell` bits; column `p` is a codeword of the installed code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    strands: BitMatrix,
}

impl Pool {
    pub fn from_strands(strands: BitMatrix) -> Self {
        Self { strands }
    }

    pub fn n(&self) -> usize {
        self.strands.rows()
    }

    pub fn strand_length(&self) -> usize {
        self.strands.cols()
    }

    pub fn strand(&self, s: usize) -> &[u8] {
        self.strands.row(s)
    }

    pub fn strands(&self) -> &BitMatrix {
        &self.strands
    }

    pub fn column(&self, p: usize) -> Vec<u8> {
        self.strands.column(p)
    }

    /// Passes every strand through the channel using `rng_for(s)` as its stream.
    pub fn transmit<T: Scalar, R: Rng>(
        &self,
        channel: &ChannelSpec<T>,
        mut rng_for: impl FnMut(usize) -> R,
    ) -> Vec<ReceivedStrand> {
        (0..self.n())
            .map(|s| channel.apply(self.strand(s), &mut rng_for(s)))
            .collect()
    }
}

/// Encodes `info` (`ell` rows of `k` bits) into a pool, one column per row.
pub fn weave_encode<T: Scalar>(info: &BitMatrix, code: &PolarCode<T>) -> Result<Pool> {
    if info.cols() != code.k() {
        return invalid(format!(
            "info rows carry {} bits, code carries {}",
            info.cols(),
            code.k()
        ));
    }
    let n = code.n();
    let ell = info.rows();
    let mut strands = BitMatrix::zeros(n, ell);
    for p in 0..ell {
        let x = code.encode(info.row(p))?;
        for (s, &bit) in x.iter().enumerate() {
            strands.set(s, p, bit);
        }
    }
    Ok(Pool { strands })
}

/// Inverts the transform column by column and reads the info channels back.
pub fn genie_extract<T: Scalar>(pool: &Pool, code: &PolarCode<T>) -> Result<BitMatrix> {
    if pool.n() != code.n() {
        return invalid(format!("pool has {} strands, code length is {}", pool.n(), code.n()));
    }
    let mut info = BitMatrix::zeros(pool.strand_length(), code.k());
    for p in 0..pool.strand_length() {
        let mut u = pool.column(p);
        transform_in_place(&mut u)?;
        info.row_mut(p).copy_from_slice(&code.extract(&u));
    }
    Ok(info)
}

/// How observations are re-aligned after a mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resync {
    /// Deletions: a mismatching observation is read again at the next column.
    Push,
    /// Insertions: a mismatching observation is skipped.
    Pull,
    /// Substitutions: no re-alignment.
    Fixed,
}

impl Resync {
    pub fn for_kind(kind: ChannelKind) -> Self {
        match kind {
            ChannelKind::Deletion => Resync::Push,
            ChannelKind::Insertion => Resync::Pull,
            ChannelKind::Substitution => Resync::Fixed,
        }
    }
}

/// Per-strand count of inferred deletions or insertions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetState {
    pub offsets: Vec<usize>,
}

/// Column-by-column decoder state.
#[derive(Debug)]
pub struct WeaveDecoder<'a, T> {
    code: &'a PolarCode<T>,
    received: &'a [ReceivedStrand],
    mode: Resync,
    ell: usize,
    position: usize,
    offsets: Vec<usize>,
    magnitude: T,
    sc: ScDecoder<T>,
    llrs: Vec<T>,
    observed: Vec<Symbol>,
    info: BitMatrix,
    pool: BitMatrix,
}

/// Outcome of decoding a single column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnStep {
    pub position: usize,
    pub observed: Vec<Symbol>,
    pub decoded: Vec<u8>,
    /// Strands whose offset was incremented after this column.
    pub shifted: Vec<usize>,
}

impl<'a, T: Scalar> WeaveDecoder<'a, T> {
    pub fn new(received: &'a [ReceivedStrand], code: &'a PolarCode<T>, mode: Resync) -> Result<Self> {
        let n = code.n();
        if received.len() != n {
            return invalid(format!("received {} strands, code length is {n}", received.len()));
        }
        let ell = received[0].original_length();
        if received.iter().any(|r| r.original_length() != ell) {
            return invalid("received strands disagree on the original strand length");
        }
        Ok(Self {
            code,
            received,
            mode,
            ell,
            position: 0,
            offsets: vec![0; n],
            magnitude: bsc_llr_magnitude(code.design_delta()),
            sc: ScDecoder::new(n)?,
            llrs: vec![T::zero(); n],
            observed: vec![Symbol::Erasure; n],
            info: BitMatrix::zeros(ell, code.k()),
            pool: BitMatrix::zeros(n, ell),
        })
    }

    /// 0-based column about to be decoded.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn is_done(&self) -> bool {
        self.position >= self.ell
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Index into strand `s` read at the current column, or `None` when it
    /// would fall before the start.
    pub fn observation_index(&self, s: usize) -> Option<usize> {
        let (p, off) = (self.position, self.offsets[s]);
        match self.mode {
            Resync::Push => p.checked_sub(off),
            Resync::Pull => Some(p + off),
            Resync::Fixed => Some(p),
        }
    }

    /// Symbols the column decoder sees at the current position.
    pub fn observations(&self) -> Vec<Symbol> {
        (0..self.received.len()).map(|s| self.observe(s)).collect()
    }

    fn observe(&self, s: usize) -> Symbol {
        self.observation_index(s)
            .map_or(Symbol::Erasure, |i| self.received[s].get(i))
    }

    /// Decodes the current column and updates the offsets.
    pub fn step(&mut self) -> Result<ColumnStep> {
        if self.is_done() {
            return invalid("all columns already decoded");
        }
        let n = self.code.n();
        for s in 0..n {
            let sym = self.observe(s);
            self.observed[s] = sym;
            self.llrs[s] = channels::llr_with_magnitude(sym, self.magnitude);
        }
        let out = self.sc.decode(&self.llrs, self.code)?;
        let p = self.position;
        let mut shifted = Vec::new();
        for s in 0..n {
            let bit = out.x_hat[s];
            self.pool.set(s, p, bit);
            if self.mode == Resync::Fixed {
                continue;
            }
            if let Some(obs) = self.observed[s].bit() {
                if obs != bit {
                    self.offsets[s] += 1;
                    shifted.push(s);
                }
            }
        }
        self.info.row_mut(p).copy_from_slice(&self.code.extract(&out.u_hat));
        self.position += 1;
        Ok(ColumnStep {
            position: p,
            observed: self.observed.clone(),
            decoded: out.x_hat,
            shifted,
        })
    }

    pub fn run(mut self) -> Result<WeaveDecoded> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> WeaveDecoded {
        WeaveDecoded {
            info: self.info,
            pool: Pool { strands: self.pool },
            offsets: OffsetState { offsets: self.offsets },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeaveDecoded {
    /// One decoded info row per column.
    pub info: BitMatrix,
    /// Re-encoded columns.
    pub pool: Pool,
    pub offsets: OffsetState,
}

/// Decodes all columns of a received pool.
pub fn weave_decode<T: Scalar>(received: &[ReceivedStrand], code: &PolarCode<T>, mode: Resync) -> Result<WeaveDecoded> {
    WeaveDecoder::new(received, code, mode)?.run()
}

/// `true` iff any decoded info bit differs from the truth.
pub fn pool_failure_check(decoded: &BitMatrix, truth: &BitMatrix) -> Result<bool> {
    Ok(decoded.hamming(truth)? > 0)
}

/// Joins a real and an imaginary pool into quaternary strands.
pub fn merge_pools(real: &Pool, imag: &Pool) -> Result<Vec<Vec<Base>>> {
    if (real.n(), real.strand_length()) != (imag.n(), imag.strand_length()) {
        return invalid("real and imaginary pools differ in shape");
    }
    (0..real.n())
        .map(|s| channels::quaternary_merge(real.strand(s), imag.strand(s)))
        .collect()
}

/// Applies a quaternary channel to each strand and splits the output into the
/// two binary received pools. Both parts of a strand see the same kept set.
pub fn quaternary_transmit<T: Scalar, R: Rng + ?Sized>(
    strands: &[Vec<Base>],
    channel: &ChannelSpec<T>,
    rng: &mut R,
) -> (Vec<ReceivedStrand>, Vec<ReceivedStrand>) {
    strands
        .iter()
        .map(|strand| {
            let out = channels::quaternary_apply(strand, channel, rng);
            let (re, im) = channels::quaternary_split(&out);
            let ell = strand.len();
            (
                ReceivedStrand::new(re.iter().map(|&b| Symbol::from_bit(b)).collect(), ell),
                ReceivedStrand::new(im.iter().map(|&b| Symbol::from_bit(b)).collect(), ell),
            )
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuaternaryOutcome {
    pub real_failed: bool,
    pub imag_failed: bool,
}

impl QuaternaryOutcome {
    pub fn failed(&self) -> bool {
        self.real_failed || self.imag_failed
    }
}

/// Encodes two binary pools, sends them as one quaternary pool and decodes the
/// parts independently.
pub fn weave_quaternary<T: Scalar, R: Rng + ?Sized>(
    real_info: &BitMatrix,
    imag_info: &BitMatrix,
    code: &PolarCode<T>,
    channel: &ChannelSpec<T>,
    rng: &mut R,
) -> Result<QuaternaryOutcome> {
    let real = weave_encode(real_info, code)?;
    let imag = weave_encode(imag_info, code)?;
    let strands = merge_pools(&real, &imag)?;
    let (rx_real, rx_imag) = quaternary_transmit(&strands, channel, rng);
    let mode = Resync::for_kind(channel.kind());
    let real_failed = pool_failure_check(&weave_decode(&rx_real, code, mode)?.info, real_info)?;
    let imag_failed = pool_failure_check(&weave_decode(&rx_imag, code, mode)?.info, imag_info)?;
    Ok(QuaternaryOutcome {
        real_failed,
        imag_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{delete_at, insert_at};
    use crate::polar::polar_transform;
    use crate::rng;

    fn clean(pool: &Pool) -> Vec<ReceivedStrand> {
        (0..pool.n())
            .map(|s| ReceivedStrand::from_bits(pool.strand(s)))
            .collect()
    }

    #[test]
    fn zero_info_gives_zero_pool() {
        let code = PolarCode::<f64>::from_info_set(8, 0.01, &[3, 5, 6, 7]).unwrap();
        let pool = weave_encode(&BitMatrix::zeros(256, 4), &code).unwrap();
        assert!(pool.strands().iter_rows().all(|r| r.iter().all(|&b| b == 0)));
    }

    #[test]
    fn full_rate_columns_are_transforms_of_rows() {
        let code = PolarCode::<f64>::from_info_set(4, 0.0, &[0, 1, 2, 3]).unwrap();
        let rows: Vec<Vec<u8>> = (0..16)
            .map(|v| (0..4).map(|i| ((v >> i) & 1) as u8).collect())
            .collect();
        let info = BitMatrix::from_rows(&rows).unwrap();
        let pool = weave_encode(&info, &code).unwrap();
        for (p, row) in rows.iter().enumerate() {
            assert_eq!(pool.column(p), polar_transform(row).unwrap());
        }
        assert_eq!(genie_extract(&pool, &code).unwrap(), info);
    }

    #[test]
    fn encode_rejects_wrong_width() {
        let code = PolarCode::<f64>::from_info_set(8, 0.01, &[7]).unwrap();
        assert!(weave_encode(&BitMatrix::zeros(256, 2), &code).is_err());
    }

    #[test]
    fn noiseless_decode_keeps_offsets_at_zero() {
        let code = PolarCode::<f64>::from_info_set(16, 0.01, &[7, 11, 13, 14, 15]).unwrap();
        let mut r = rng::stream(&[11]);
        for mode in [Resync::Push, Resync::Pull, Resync::Fixed] {
            let info = BitMatrix::random(256, code.k(), &mut r);
            let pool = weave_encode(&info, &code).unwrap();
            let out = weave_decode(&clean(&pool), &code, mode).unwrap();
            assert_eq!(out.info, info);
            assert_eq!(out.pool, pool);
            assert!(out.offsets.offsets.iter().all(|&o| o == 0));
        }
    }

    #[test]
    fn push_follows_the_worked_example() {
        // All-zero pool; strand 99 (index 98) loses its first letter, so its
        // first observation is X_2 = 1.
        let n = 128;
        let code = PolarCode::<f64>::from_info_set(n, 0.01, &[127]).unwrap();
        let mut strands = BitMatrix::zeros(n, 8);
        strands.set(98, 1, 1);
        let mut received: Vec<ReceivedStrand> = (0..n).map(|s| ReceivedStrand::from_bits(strands.row(s))).collect();
        received[98] = delete_at(strands.row(98), &[0]).unwrap();
        let mut dec = WeaveDecoder::new(&received, &code, Resync::Push).unwrap();
        let first = dec.step().unwrap();
        assert_eq!(first.observed[98], Symbol::One);
        assert_eq!(first.decoded, vec![0; n]);
        assert_eq!(first.shifted, vec![98]);
        assert_eq!(dec.offsets()[98], 1);
        // Block 2 sees Y^(s)_2 for every strand except Y^(99)_1.
        assert_eq!(dec.observation_index(98), Some(0));
        assert!((0..n).filter(|&s| s != 98).all(|s| dec.observation_index(s) == Some(1)));
        let obs = dec.observations();
        assert_eq!(obs[98], received[98].get(0));
    }

    #[test]
    fn pull_follows_the_worked_example() {
        let n = 128;
        let code = PolarCode::<f64>::from_info_set(n, 0.01, &[127]).unwrap();
        let strands = BitMatrix::zeros(n, 8);
        let mut received: Vec<ReceivedStrand> = (0..n).map(|s| ReceivedStrand::from_bits(strands.row(s))).collect();
        received[98] = insert_at(strands.row(98), 0, 1).unwrap();
        let mut dec = WeaveDecoder::new(&received, &code, Resync::Pull).unwrap();
        let first = dec.step().unwrap();
        assert_eq!(first.shifted, vec![98]);
        // Block 2 reads Y^(99)_3 and Y^(s)_2 elsewhere.
        assert_eq!(dec.observation_index(98), Some(2));
        assert_eq!(dec.observation_index(0), Some(1));
        let out = WeaveDecoder::new(&received, &code, Resync::Pull)
            .unwrap()
            .run()
            .unwrap();
        assert_eq!(out.info, BitMatrix::zeros(8, 1));
        assert_eq!(out.offsets.offsets[98], 1);
    }

    #[test]
    fn erasures_never_shift() {
        let n = 16;
        let code = PolarCode::<f64>::from_info_set(n, 0.01, &[15]).unwrap();
        let strands = BitMatrix::zeros(n, 4);
        let mut received: Vec<ReceivedStrand> = (0..n).map(|s| ReceivedStrand::from_bits(strands.row(s))).collect();
        received[3] = ReceivedStrand::new(vec![], 4);
        let out = weave_decode(&received, &code, Resync::Push).unwrap();
        assert_eq!(out.offsets.offsets, vec![0; n]);
        assert_eq!(out.info, BitMatrix::zeros(4, 1));
    }

    #[test]
    fn failure_check() {
        let mut r = rng::stream(&[12]);
        let a = BitMatrix::random(256, 9, &mut r);
        assert!(!pool_failure_check(&a, &a.clone()).unwrap());
        let mut b = a.clone();
        b.flip(200, 4);
        assert!(pool_failure_check(&b, &a).unwrap());
        assert!(pool_failure_check(&a, &BitMatrix::zeros(256, 8)).is_err());
    }

    #[test]
    fn decoder_rejects_mismatched_inputs() {
        let code = PolarCode::<f64>::from_info_set(4, 0.01, &[3]).unwrap();
        let rx = vec![ReceivedStrand::from_bits(&[0; 8]); 3];
        assert!(weave_decode(&rx, &code, Resync::Push).is_err());
        let mut rx = vec![ReceivedStrand::from_bits(&[0; 8]); 4];
        rx[2] = ReceivedStrand::from_bits(&[0; 7]);
        assert!(weave_decode(&rx, &code, Resync::Push).is_err());
    }

    #[test]
    fn quaternary_noiseless_roundtrip() {
        let code = PolarCode::<f64>::from_info_set(8, 0.01, &[5, 6, 7]).unwrap();
        let mut r = rng::stream(&[13]);
        let re = BitMatrix::random(256, 3, &mut r);
        let im = BitMatrix::random(256, 3, &mut r);
        let ch = ChannelSpec::new(ChannelKind::Deletion, 0.0).unwrap();
        let out = weave_quaternary(&re, &im, &code, &ch, &mut r).unwrap();
        assert!(!out.failed());
    }
}
