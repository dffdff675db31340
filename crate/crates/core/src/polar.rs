//! Binary polar codes: transform, successive-cancellation decoding and
//! Monte-Carlo construction.
//!
//! The transform is `x = u F^{(x)m}` over GF(2) with `F = [[1, 0], [1, 1]]` in
//! natural (non bit-reversed) order, so for `n = 2` it maps `(u1, u2)` to
//! `(u1 ^ u2, u2)`. Bit channels are indexed from 0 in that same order.
//!
//! LLRs follow the convention `log P(obs | x = 0) / P(obs | x = 1)`, with
//! `+inf`/`-inf` standing for certainty.

use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::scalar::{log2_exact, Scalar};
use crate::STRAND_LENGTH;

/// Applies the polar transform in place. The transform is its own inverse.
pub fn transform_in_place(bits: &mut [u8]) -> Result<()> {
    let n = bits.len();
    if log2_exact(n).is_none() {
        return invalid(format!("block length {n} is not a power of two"));
    }
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
    Ok(())
}

pub fn polar_transform(u: &[u8]) -> Result<Vec<u8>> {
    let mut x = u.to_vec();
    transform_in_place(&mut x)?;
    Ok(x)
}

/// Exact check-node combination `2 atanh(tanh(a/2) tanh(b/2))`.
///
/// With `m = min(|a|, |b|)` and `M = max(|a|, |b|)` this equals
/// `sign * (m + ln(1 + e^-(M+m)) - ln(1 + e^-(M-m)))`, evaluated as one
/// `ln_1p` of `(v - u) / (1 + u)` with `u = e^-(M-m)` and `v = u e^-2m`.
#[inline]
pub fn boxplus<T: Scalar>(a: T, b: T) -> T {
    if a.is_nan() || b.is_nan() {
        return T::zero();
    }
    let sign = if (a < T::zero()) != (b < T::zero()) {
        -T::one()
    } else {
        T::one()
    };
    let (abs_a, abs_b) = (a.abs(), b.abs());
    let (m, big) = if abs_a < abs_b { (abs_a, abs_b) } else { (abs_b, abs_a) };
    if big.is_infinite() {
        return sign * m;
    }
    let gap = big - m;
    if gap > tail_cutoff::<T>() {
        return sign * m;
    }
    let u = (-gap).exp();
    let v = u * (-(m + m)).exp();
    sign * (m + ((v - u) / (T::one() + u)).ln_1p())
}

/// Beyond this, `ln(1 + e^-x)` is below the precision of `T`.
#[inline]
fn tail_cutoff<T: Scalar>() -> T {
    T::lit(14.0) - T::epsilon().ln()
}

/// Variable-node update given the already decided partner bit.
#[inline]
pub fn combine<T: Scalar>(a: T, b: T, partner: u8) -> T {
    let v = if partner == 0 { b + a } else { b - a };
    if v.is_nan() {
        T::zero()
    } else {
        v
    }
}

/// Hard decision; an LLR of exactly zero decodes to 0.
#[inline]
pub fn hard_decision<T: Scalar>(llr: T) -> u8 {
    u8::from(llr < T::zero())
}

/// Binary entropy, in bits, of the posterior whose LLR is `llr`.
///
/// Evaluated as `ln(1 + e^-a) + a e^-a / (1 + e^-a)` with `a = |llr|`, which
/// keeps full relative precision for tiny entropies.
#[inline]
pub fn entropy_of_llr<T: Scalar>(llr: T) -> T {
    let a = llr.abs();
    if a.is_nan() {
        return T::one();
    }
    if a.is_infinite() {
        return T::zero();
    }
    let e = (-a).exp();
    let nats = e.ln_1p() + a * e / (T::one() + e);
    (nats / T::LN_2()).min(T::one())
}

/// `P(bit = 0)` for a given LLR.
#[inline]
pub fn prob_zero<T: Scalar>(llr: T) -> T {
    if llr.is_nan() {
        return T::lit(0.5);
    }
    T::one() / (T::one() + (-llr).exp())
}

/// Default info-set threshold `1 / (ell * n)` so that the summed uncertainty over
/// all `ell` column codes of a pool stays below one bit.
pub fn default_threshold<T: Scalar>(n: usize) -> T {
    T::one() / (T::from_count(STRAND_LENGTH) * T::from_count(n))
}

/// Indices whose equivocation is strictly below `threshold`.
pub fn select_info_set<T: Scalar>(equivocations: &[T], threshold: T) -> Result<Vec<usize>> {
    if threshold.is_nan() || threshold <= T::zero() || threshold.is_infinite() {
        return invalid(format!("threshold must be positive and finite, got {threshold}"));
    }
    if let Some(bad) = equivocations.iter().find(|&&h| !(h >= T::zero() && h <= T::one())) {
        return invalid(format!("equivocation {bad} outside [0, 1]"));
    }
    Ok(equivocations
        .iter()
        .enumerate()
        .filter(|(_, &h)| h < threshold)
        .map(|(j, _)| j)
        .collect())
}

/// A polar code of length `n`: which bit channels carry data and what the
/// frozen ones are fixed to. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode<T> {
    n: usize,
    design_delta: T,
    equivocations: Vec<T>,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
    frozen_values: Vec<u8>,
    /// `info_prefix[j]` = number of info channels below `j`.
    info_prefix: Vec<u32>,
}

impl<T: Scalar> PolarCode<T> {
    /// Builds the code from per-channel equivocations by thresholding.
    pub fn from_equivocations(design_delta: T, equivocations: Vec<T>, threshold: T) -> Result<Self> {
        let n = equivocations.len();
        if log2_exact(n).is_none() {
            return invalid(format!("block length {n} is not a power of two"));
        }
        check_delta(design_delta)?;
        let info_set = select_info_set(&equivocations, threshold)?;
        let mut frozen = vec![true; n];
        for &j in &info_set {
            frozen[j] = false;
        }
        let mut info_prefix = Vec::with_capacity(n + 1);
        info_prefix.push(0);
        for &f in &frozen {
            info_prefix.push(info_prefix.last().unwrap() + u32::from(!f));
        }
        Ok(Self {
            n,
            design_delta,
            equivocations,
            info_set,
            frozen,
            frozen_values: vec![0; n],
            info_prefix,
        })
    }

    /// Builds a code with an explicit info set. Equivocations are recorded as 0
    /// on info channels and 1 on frozen ones.
    pub fn from_info_set(n: usize, design_delta: T, info_set: &[usize]) -> Result<Self> {
        if log2_exact(n).is_none() {
            return invalid(format!("block length {n} is not a power of two"));
        }
        let mut equivocations = vec![T::one(); n];
        for &j in info_set {
            if j >= n {
                return invalid(format!("info index {j} out of range for n = {n}"));
            }
            equivocations[j] = T::zero();
        }
        Self::from_equivocations(design_delta, equivocations, T::lit(0.5))
    }

    /// Monte-Carlo construction for BSC(`delta`) with the default threshold.
    pub fn construct(n: usize, delta: T, samples: usize, seed: u64) -> Result<Self> {
        let estimate = monte_carlo_construct(n, delta, samples, seed)?;
        Self::from_equivocations(delta, estimate.equivocations, default_threshold(n))
    }

    /// Replaces the values the frozen channels are pinned to. Entries at info
    /// positions are ignored and stored as 0.
    pub fn with_frozen_values(mut self, values: &[u8]) -> Result<Self> {
        if values.len() != self.n {
            return invalid(format!("expected {} frozen values, got {}", self.n, values.len()));
        }
        for (j, &v) in values.iter().enumerate() {
            if v > 1 {
                return invalid(format!("frozen value {v} at {j} is not a bit"));
            }
            self.frozen_values[j] = if self.frozen[j] { v } else { 0 };
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn design_delta(&self) -> T {
        self.design_delta
    }

    pub fn equivocations(&self) -> &[T] {
        &self.equivocations
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> T {
        T::from_count(self.k()) / T::from_count(self.n)
    }

    pub fn is_frozen(&self, j: usize) -> bool {
        self.frozen[j]
    }

    pub fn frozen_values(&self) -> &[u8] {
        &self.frozen_values
    }

    /// Places `message` on the info channels and frozen values elsewhere.
    pub fn embed(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k() {
            return invalid(format!("message has {} bits, code carries {}", message.len(), self.k()));
        }
        let mut u = self.frozen_values.clone();
        for (&j, &bit) in self.info_set.iter().zip(message) {
            u[j] = bit & 1;
        }
        Ok(u)
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        let mut x = self.embed(message)?;
        transform_in_place(&mut x)?;
        Ok(x)
    }

    /// Reads the info channels out of a full input vector `u`.
    pub fn extract(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&j| u[j]).collect()
    }
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta >= T::zero() && delta <= T::lit(0.5)) {
        return invalid(format!("design delta must lie in [0, 1/2], got {delta}"));
    }
    Ok(())
}

/// `log((1 - delta) / delta)`, infinite at `delta = 0`.
pub fn bsc_llr_magnitude<T: Scalar>(delta: T) -> T {
    if delta <= T::zero() {
        T::infinity()
    } else {
        ((T::one() - delta) / delta).ln()
    }
}

/// Output of a successive-cancellation pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScOutput {
    pub u_hat: Vec<u8>,
    pub x_hat: Vec<u8>,
}

/// Successive-cancellation decoder with reusable scratch space.
///
/// Level buffers are packed into one array: the node of length `L` keeps its
/// input LLRs in `llr[L..2L]` and its re-encoded output in `bits[L..2L]`.
#[derive(Debug, Clone)]
pub struct ScDecoder<T> {
    n: usize,
    llr: Vec<T>,
    bits: Vec<u8>,
}

impl<T: Scalar> ScDecoder<T> {
    pub fn new(n: usize) -> Result<Self> {
        if log2_exact(n).is_none() {
            return invalid(format!("block length {n} is not a power of two"));
        }
        Ok(Self {
            n,
            llr: vec![T::zero(); 2 * n],
            bits: vec![0; 2 * n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_input(&self, llrs: &[T]) -> Result<()> {
        if llrs.len() != self.n {
            return invalid(format!("expected {} LLRs, got {}", self.n, llrs.len()));
        }
        if llrs.iter().any(|v| v.is_nan()) {
            return invalid("LLRs must not be NaN");
        }
        Ok(())
    }

    /// Runs the SC schedule; `leaf(j, llr_j)` returns the bit to commit for
    /// channel `j`. Returns the re-encoded codeword.
    ///
    /// With `info_prefix`, subtrees without info channels are not evaluated:
    /// their leaves are visited with a zero LLR, which the caller must ignore.
    fn run<F: FnMut(usize, T) -> u8>(&mut self, llrs: &[T], info_prefix: Option<&[u32]>, mut leaf: F) -> &[u8] {
        let n = self.n;
        self.llr[n..].copy_from_slice(llrs);
        let mut next = 0;
        self.node(n, &mut next, info_prefix, &mut leaf);
        &self.bits[n..]
    }

    fn node<F: FnMut(usize, T) -> u8>(
        &mut self,
        len: usize,
        next: &mut usize,
        info_prefix: Option<&[u32]>,
        leaf: &mut F,
    ) {
        if let Some(prefix) = info_prefix {
            if len > 1 && prefix[*next + len] == prefix[*next] {
                let out = &mut self.bits[len..2 * len];
                for (j, slot) in (*next..*next + len).zip(out.iter_mut()) {
                    *slot = leaf(j, T::zero()) & 1;
                }
                transform_in_place(out).expect("power-of-two subtree");
                *next += len;
                return;
            }
        }
        if len == 1 {
            self.bits[1] = leaf(*next, self.llr[1]) & 1;
            *next += 1;
            return;
        }
        let h = len / 2;
        for i in 0..h {
            self.llr[h + i] = boxplus(self.llr[len + i], self.llr[len + h + i]);
        }
        self.node(h, next, info_prefix, leaf);
        self.bits.copy_within(h..len, len);
        for i in 0..h {
            self.llr[h + i] = combine(self.llr[len + i], self.llr[len + h + i], self.bits[len + i]);
        }
        self.node(h, next, info_prefix, leaf);
        for i in 0..h {
            let right = self.bits[h + i];
            self.bits[len + i] ^= right;
            self.bits[len + h + i] = right;
        }
    }

    pub fn decode(&mut self, llrs: &[T], code: &PolarCode<T>) -> Result<ScOutput> {
        self.check_input(llrs)?;
        if code.n() != self.n {
            return invalid(format!(
                "code length {} does not match decoder length {}",
                code.n(),
                self.n
            ));
        }
        let mut u_hat = vec![0u8; self.n];
        let x_hat = self
            .run(llrs, Some(&code.info_prefix), |j, l| {
                let bit = if code.frozen[j] {
                    code.frozen_values[j]
                } else {
                    hard_decision(l)
                };
                u_hat[j] = bit;
                bit
            })
            .to_vec();
        Ok(ScOutput { u_hat, x_hat })
    }

    /// Genie-aided pass: every earlier input is fixed to its true value, and the
    /// LLR seen by each bit channel is recorded.
    pub fn genie(&mut self, llrs: &[T], true_u: &[u8]) -> Result<PosteriorSample<T>> {
        self.check_input(llrs)?;
        if true_u.len() != self.n {
            return invalid(format!("expected {} true inputs, got {}", self.n, true_u.len()));
        }
        let mut out = vec![T::zero(); self.n];
        self.run(llrs, None, |j, l| {
            out[j] = l;
            true_u[j]
        });
        Ok(PosteriorSample { llrs: out })
    }
}

/// Successive-cancellation decoding of one block.
pub fn sc_decode<T: Scalar>(llrs: &[T], code: &PolarCode<T>) -> Result<ScOutput> {
    ScDecoder::new(code.n())?.decode(llrs, code)
}

/// Per-channel posteriors from one genie-aided pass, stored as LLRs so that
/// posteriors extremely close to 0 or 1 keep their precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample<T> {
    pub llrs: Vec<T>,
}

impl<T: Scalar> PosteriorSample<T> {
    /// `rho[j] = P(U_j = 0 | observations, U_1..U_{j-1})`.
    pub fn rho(&self) -> Vec<T> {
        self.llrs.iter().map(|&l| prob_zero(l)).collect()
    }

    /// `h2(rho[j])` per channel.
    pub fn entropies(&self) -> Vec<T> {
        self.llrs.iter().map(|&l| entropy_of_llr(l)).collect()
    }
}

pub fn genie_posteriors<T: Scalar>(llrs: &[T], true_u: &[u8]) -> Result<PosteriorSample<T>> {
    ScDecoder::new(llrs.len())?.genie(llrs, true_u)
}

/// Result of a Monte-Carlo construction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionEstimate<T> {
    pub n: usize,
    pub delta: T,
    pub samples: usize,
    pub seed: u64,
    /// Estimated `H(W_j)` per bit channel.
    pub equivocations: Vec<T>,
    /// Mean over samples of the per-sample total `sum_j h2(rho_j)`.
    pub total_mean: T,
    /// Standard error of `total_mean`.
    pub total_std_error: T,
}

impl<T: Scalar> ConstructionEstimate<T> {
    pub fn mean_equivocation(&self) -> T {
        self.total_mean / T::from_count(self.n)
    }

    pub fn mean_std_error(&self) -> T {
        self.total_std_error / T::from_count(self.n)
    }

    pub fn into_code(self, threshold: T) -> Result<PolarCode<T>> {
        PolarCode::from_equivocations(self.delta, self.equivocations, threshold)
    }
}

const SAMPLES_PER_CHUNK: usize = 8;

struct ChunkSum<T> {
    per_channel: Vec<T>,
    total: T,
    total_sq: T,
}

/// Estimates bit-channel equivocations for BSC(`delta`) by averaging
/// `h2(rho_j)` over `samples` genie-aided runs of the all-zero codeword.
///
/// Sample `s` draws its noise from the stream keyed by `(seed, s)`; samples are
/// summed in fixed-size chunks and the chunks reduced in order, so the result
/// is identical for any number of worker threads.
pub fn monte_carlo_construct<T: Scalar>(
    n: usize,
    delta: T,
    samples: usize,
    seed: u64,
) -> Result<ConstructionEstimate<T>> {
    if log2_exact(n).is_none() {
        return invalid(format!("block length {n} is not a power of two"));
    }
    check_delta(delta)?;
    if samples == 0 {
        return invalid("at least one sample is required");
    }
    let magnitude = bsc_llr_magnitude(delta);
    let flip = delta.to_f64_lossy();
    let zeros = vec![0u8; n];
    let chunks = samples.div_ceil(SAMPLES_PER_CHUNK);

    let sums: Vec<ChunkSum<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut decoder = ScDecoder::<T>::new(n).expect("validated length");
            let mut llrs = vec![T::zero(); n];
            let mut acc = ChunkSum {
                per_channel: vec![T::zero(); n],
                total: T::zero(),
                total_sq: T::zero(),
            };
            let lo = c * SAMPLES_PER_CHUNK;
            let hi = (lo + SAMPLES_PER_CHUNK).min(samples);
            for s in lo..hi {
                let mut rng = rng::stream(&[seed, s as u64]);
                for l in llrs.iter_mut() {
                    *l = if rng.gen::<f64>() < flip { -magnitude } else { magnitude };
                }
                let sample = decoder.genie(&llrs, &zeros).expect("validated shapes");
                let mut total = T::zero();
                for (slot, &l) in acc.per_channel.iter_mut().zip(&sample.llrs) {
                    let h = entropy_of_llr(l);
                    *slot = *slot + h;
                    total = total + h;
                }
                acc.total = acc.total + total;
                acc.total_sq = acc.total_sq + total * total;
            }
            acc
        })
        .collect();

    let mut per_channel = vec![T::zero(); n];
    let mut total = T::zero();
    let mut total_sq = T::zero();
    for chunk in sums {
        for (a, b) in per_channel.iter_mut().zip(chunk.per_channel) {
            *a = *a + b;
        }
        total = total + chunk.total;
        total_sq = total_sq + chunk.total_sq;
    }
    let s = T::from_count(samples);
    let equivocations = per_channel.into_iter().map(|v| (v / s).min(T::one())).collect();
    let total_mean = total / s;
    let total_std_error = if samples > 1 {
        let var = ((total_sq - s * total_mean * total_mean) / (s - T::one())).max(T::zero());
        (var / s).sqrt()
    } else {
        T::zero()
    };
    Ok(ConstructionEstimate {
        n,
        delta,
        samples,
        seed,
        equivocations,
        total_mean,
        total_std_error,
    })
}

/// Writes `index,equivocation` rows, preceded by `# ...` comment lines.
pub fn write_equivocations_csv<T: Scalar, W: Write>(
    mut out: W,
    equivocations: &[T],
    comments: &[String],
) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "equivocation"])?;
    for (j, h) in equivocations.iter().enumerate() {
        w.write_record([j.to_string(), h.to_f64_lossy().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed equivocation file: values in index order plus the comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivocationFile<T> {
    pub equivocations: Vec<T>,
    pub comments: Vec<String>,
}

impl<T> EquivocationFile<T> {
    /// Looks up `key=value` among whitespace-separated comment tokens.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .flat_map(|c| c.split_whitespace())
            .find_map(|tok| tok.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
    }
}

pub fn read_equivocations_csv<T: Scalar, R: Read>(input: R) -> Result<EquivocationFile<T>> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    let comments = text
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix('#'))
        .map(|c| c.trim().to_string())
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["index", "equivocation"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `index,equivocation`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut equivocations = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row + 2, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse { line, message };
        let index: usize = record[0].parse().map_err(|e| parse_err(format!("bad index: {e}")))?;
        if index != row {
            return Err(parse_err(format!("expected index {row}, got {index}")));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|e| parse_err(format!("bad equivocation: {e}")))?;
        equivocations.push(T::lit(value));
    }
    Ok(EquivocationFile {
        equivocations,
        comments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_of(v: usize, n: usize) -> Vec<u8> {
        (0..n).map(|i| ((v >> i) & 1) as u8).collect()
    }

    #[test]
    fn transform_small_cases() {
        assert_eq!(polar_transform(&[0u8; 8]).unwrap(), vec![0u8; 8]);
        assert_eq!(polar_transform(&[1, 0]).unwrap(), vec![1, 0]);
        assert_eq!(polar_transform(&[0, 1]).unwrap(), vec![1, 1]);
        assert!(polar_transform(&[0, 1, 1]).is_err());
        assert!(polar_transform(&[]).is_err());
        assert_eq!(polar_transform(&[1]).unwrap(), vec![1]);
    }

    #[test]
    fn transform_is_involution_for_all_length_eight_inputs() {
        for v in 0..256 {
            let u = bits_of(v, 8);
            assert_eq!(polar_transform(&polar_transform(&u).unwrap()).unwrap(), u);
        }
    }

    #[test]
    fn transform_matches_kronecker_matrix() {
        // Row j of F^{(x)3} has a one in column i iff i is a submask of j.
        for v in 0..256usize {
            let u = bits_of(v, 8);
            let x = polar_transform(&u).unwrap();
            for (i, &xi) in x.iter().enumerate() {
                let expect = (0..8).filter(|&j| u[j] == 1 && (j & i) == i).count() % 2;
                assert_eq!(xi as usize, expect);
            }
        }
    }

    #[test]
    fn boxplus_matches_tanh_rule() {
        for &(a, b) in &[(0.3f64, -1.2f64), (4.0, 5.0), (-2.5, -0.1), (0.0, 3.0), (6.0, -7.0)] {
            let expect = 2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh();
            assert!((boxplus(a, b) - expect).abs() < 1e-9, "{a} {b}");
        }
        assert_eq!(boxplus(f64::INFINITY, -2.0), -2.0);
        assert_eq!(boxplus(f64::NEG_INFINITY, f64::INFINITY), f64::NEG_INFINITY);
        assert_eq!(combine(f64::INFINITY, f64::NEG_INFINITY, 0), 0.0);
    }

    #[test]
    fn entropy_of_llr_matches_direct_formula() {
        for &l in &[0.0f64, 0.5, -1.0, 4.0, 12.0] {
            let p = prob_zero(l);
            let direct = crate::rates::h2(p);
            assert!((entropy_of_llr(l) - direct).abs() < 1e-12);
        }
        assert_eq!(entropy_of_llr(0.0f64), 1.0);
        assert_eq!(entropy_of_llr(f64::INFINITY), 0.0);
        let tiny = entropy_of_llr(600.0f64);
        assert!(tiny > 0.0 && tiny < 1e-250);
    }

    #[test]
    fn noiseless_all_zero_decodes_to_zero() {
        for info in [vec![], vec![3usize, 5, 6, 7], (0..8).collect::<Vec<_>>()] {
            let code = PolarCode::<f64>::from_info_set(8, 0.01, &info).unwrap();
            let out = sc_decode(&[f64::INFINITY; 8], &code).unwrap();
            assert_eq!(out.u_hat, vec![0; 8]);
            assert_eq!(out.x_hat, vec![0; 8]);
        }
    }

    #[test]
    fn full_rate_length_four_recovers_every_codeword() {
        let code = PolarCode::<f64>::from_info_set(4, 0.0, &[0, 1, 2, 3]).unwrap();
        for v in 0..16 {
            let x = bits_of(v, 4);
            let llrs: Vec<f64> = x
                .iter()
                .map(|&b| if b == 0 { f64::INFINITY } else { f64::NEG_INFINITY })
                .collect();
            let out = sc_decode(&llrs, &code).unwrap();
            assert_eq!(out.x_hat, x);
            assert_eq!(polar_transform(&out.u_hat).unwrap(), x);
        }
    }

    #[test]
    fn frozen_bits_are_forced() {
        let code = PolarCode::<f64>::from_info_set(4, 0.1, &[3])
            .unwrap()
            .with_frozen_values(&[1, 0, 1, 1])
            .unwrap();
        assert_eq!(code.frozen_values(), &[1, 0, 1, 0]);
        let out = sc_decode(&[-1.0, 2.0, -0.5, 3.0], &code).unwrap();
        assert_eq!(&out.u_hat[..3], &[1, 0, 1]);
        assert_eq!(out.x_hat, polar_transform(&out.u_hat).unwrap());
    }

    #[test]
    fn zero_llr_decides_zero() {
        let code = PolarCode::<f64>::from_info_set(1, 0.1, &[0]).unwrap();
        assert_eq!(sc_decode(&[0.0], &code).unwrap().u_hat, vec![0]);
        assert_eq!(sc_decode(&[-0.0], &code).unwrap().u_hat, vec![0]);
    }

    #[test]
    fn decode_rejects_bad_input() {
        let code = PolarCode::<f64>::from_info_set(4, 0.1, &[3]).unwrap();
        assert!(sc_decode(&[0.0; 3], &code).is_err());
        assert!(sc_decode(&[0.0, f64::NAN, 0.0, 0.0], &code).is_err());
        assert!(PolarCode::<f64>::from_info_set(6, 0.1, &[]).is_err());
        assert!(PolarCode::<f64>::from_info_set(4, 0.1, &[4]).is_err());
        assert!(PolarCode::<f64>::from_info_set(4, 0.6, &[]).is_err());
    }

    #[test]
    fn genie_trivial_cases() {
        let s = genie_posteriors(&[f64::INFINITY; 8], &[0; 8]).unwrap();
        assert_eq!(s.rho(), vec![1.0; 8]);
        let s = genie_posteriors(&[0.0f64], &[0]).unwrap();
        assert_eq!(s.rho(), vec![0.5]);
    }

    #[test]
    fn genie_length_two_matches_joint_enumeration() {
        // x = (u1 ^ u2, u2) over BSC(delta), u uniform. Enumerate P(u, y).
        let delta = 0.07f64;
        let mag = ((1.0 - delta) / delta).ln();
        for y in 0..4usize {
            let y = bits_of(y, 2);
            let lik = |x: &[u8]| -> f64 {
                x.iter()
                    .zip(&y)
                    .map(|(a, b)| if a == b { 1.0 - delta } else { delta })
                    .product()
            };
            let llrs: Vec<f64> = y.iter().map(|&b| if b == 0 { mag } else { -mag }).collect();
            for u2_true in 0..2u8 {
                let mut joint = [[0.0; 2]; 2];
                for u1 in 0..2u8 {
                    for u2 in 0..2u8 {
                        joint[u1 as usize][u2 as usize] = lik(&[u1 ^ u2, u2]);
                    }
                }
                let p_u1_zero = (joint[0][0] + joint[0][1]) / (joint[0][0] + joint[0][1] + joint[1][0] + joint[1][1]);
                for u1_true in 0..2u8 {
                    let s = genie_posteriors(&llrs, &[u1_true, u2_true]).unwrap();
                    let rho = s.rho();
                    assert!((rho[0] - p_u1_zero).abs() < 1e-12);
                    let row = joint[u1_true as usize];
                    let p_u2_zero = row[0] / (row[0] + row[1]);
                    assert!((rho[1] - p_u2_zero).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn construction_extremes() {
        let e = monte_carlo_construct(64, 0.0f64, 10, 1).unwrap();
        assert!(e.equivocations.iter().all(|&h| h == 0.0));
        let e = monte_carlo_construct(64, 0.5f64, 10, 1).unwrap();
        assert!(e.equivocations.iter().all(|&h| (h - 1.0).abs() < 1e-12));
        assert!(monte_carlo_construct(64, 0.6f64, 10, 1).is_err());
        assert!(monte_carlo_construct(48, 0.1f64, 10, 1).is_err());
        assert!(monte_carlo_construct(64, 0.1f64, 0, 1).is_err());
    }

    #[test]
    fn construction_is_reproducible_and_seed_sensitive() {
        let a = monte_carlo_construct(32, 0.05f64, 50, 9).unwrap();
        let b = monte_carlo_construct(32, 0.05f64, 50, 9).unwrap();
        let c = monte_carlo_construct(32, 0.05f64, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.equivocations, c.equivocations);
    }

    #[test]
    fn info_set_selection() {
        let n = 16;
        let t = default_threshold::<f64>(n);
        assert_eq!(select_info_set(&vec![0.0; n], t).unwrap().len(), n);
        assert!(select_info_set(&vec![1.0; n], t).unwrap().is_empty());
        assert_eq!(select_info_set(&[0.5, 0.2, 0.1], 0.2).unwrap(), vec![2]);
        assert!(select_info_set(&[0.5], 0.0).is_err());
        assert!(select_info_set(&[1.5], 0.1).is_err());
    }

    #[test]
    fn equivocation_csv_roundtrip() {
        let values = vec![0.0f64, 1.0, 0.123_456_789_012_345_68, 3.5e-301];
        let mut buf = Vec::new();
        write_equivocations_csv(&mut buf, &values, &["seed=7 n=4 delta=0.01".to_string()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=7 n=4 delta=0.01\nindex,equivocation\n0,0\n"));
        let back = read_equivocations_csv::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(back.equivocations, values);
        assert_eq!(back.meta("delta"), Some("0.01"));
        assert_eq!(back.meta("seed"), Some("7"));
        assert!(read_equivocations_csv::<f64, _>("index,equivocation\n1,0.5\n".as_bytes()).is_err());
        assert!(read_equivocations_csv::<f64, _>("i,h\n0,0.5\n".as_bytes()).is_err());
    }
}
