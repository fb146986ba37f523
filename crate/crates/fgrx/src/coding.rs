//! Bit pipeline: Gray-mapped constellations, the rate-1/2 convolutional code
//! with exact log-domain BCJR decoding, and the LLR plumbing between symbol
//! messages and the decoder.
//!
//! Conventions:
//!
//! * LLRs are log(P(bit = 0)/P(bit = 1)) — positive means 0 is more likely —
//!   and are clamped to ±[`LLR_CLAMP`] at every construction of a
//!   [`BitLlrBlock`];
//! * constellation bit labels are MSB-first, first half of the bits selecting
//!   the imaginary axis, second half the real axis, Gray-coded per axis; for
//!   QPSK this places 00,01,11,10 counterclockwise starting at (1+1j)/√2;
//! * the encoder is zero-tailed: `constraint_length − 1` flush bits are
//!   appended, so a length-n input produces 2·(n + constraint_length − 1)
//!   coded bits and the trellis ends in state 0.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numerics::DiscreteMessage;

/// Saturation bound for all bit LLRs.
pub const LLR_CLAMP: f64 = 40.0;

pub fn clamp_llr(x: f64) -> f64 {
    debug_assert!(!x.is_nan(), "NaN LLR");
    x.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// P(bit = 0) for a given LLR.
pub fn prob_zero(llr: f64) -> f64 {
    1.0 / (1.0 + (-llr).exp())
}

// ---------------------------------------------------------------------------
// Constellations
// ---------------------------------------------------------------------------

/// Unit-average-energy Gray-mapped constellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constellation {
    Qpsk,
    Qam16,
}

/// Gray amplitude ladder for one axis of 16-QAM: 00,01,11,10 → +3,+1,−1,−3.
fn gray_level(hi: bool, lo: bool) -> f64 {
    match (hi, lo) {
        (false, false) => 3.0,
        (false, true) => 1.0,
        (true, true) => -1.0,
        (true, false) => -3.0,
    }
}

impl Constellation {
    pub fn bits_per_symbol(&self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }

    pub fn size(&self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Points indexed by their MSB-first bit label.
    pub fn points(&self) -> &'static [Complex64] {
        static QPSK: OnceLock<Vec<Complex64>> = OnceLock::new();
        static QAM16: OnceLock<Vec<Complex64>> = OnceLock::new();
        match self {
            Constellation::Qpsk => QPSK.get_or_init(|| build_points(2)),
            Constellation::Qam16 => QAM16.get_or_init(|| build_points(4)),
        }
    }

    /// The point labelled by `bits` (MSB first, length = bits_per_symbol).
    pub fn map_bits(&self, bits: &[bool]) -> Complex64 {
        assert_eq!(bits.len(), self.bits_per_symbol());
        self.points()[index_of_bits(bits)]
    }

    /// Bit `b` of point index `idx` (MSB first).
    pub fn bit_of_point(&self, idx: usize, b: usize) -> bool {
        let bps = self.bits_per_symbol();
        debug_assert!(idx < self.size() && b < bps);
        (idx >> (bps - 1 - b)) & 1 == 1
    }
}

fn index_of_bits(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn build_points(bps: usize) -> Vec<Complex64> {
    let half = bps / 2;
    let energy: f64 = match bps {
        2 => 2.0,   // (±1)² per axis
        4 => 10.0,  // mean of {1,9} per axis, two axes
        _ => unreachable!(),
    };
    let scale = energy.sqrt().recip();
    (0..1usize << bps)
        .map(|idx| {
            let bit = |b: usize| (idx >> (bps - 1 - b)) & 1 == 1;
            let axis = |off: usize| match half {
                1 => {
                    if bit(off) {
                        -1.0
                    } else {
                        1.0
                    }
                }
                2 => gray_level(bit(off), bit(off + 1)),
                _ => unreachable!(),
            };
            Complex64::new(axis(half) * scale, axis(0) * scale)
        })
        .collect()
}

/// Maps coded bits onto constellation points, bits_per_symbol at a time.
pub fn map_symbols(coded: &[bool], constellation: Constellation) -> Vec<Complex64> {
    let bps = constellation.bits_per_symbol();
    assert_eq!(coded.len() % bps, 0, "coded length not a multiple of bits/symbol");
    coded
        .chunks_exact(bps)
        .map(|chunk| constellation.map_bits(chunk))
        .collect()
}

// ---------------------------------------------------------------------------
// LLR blocks
// ---------------------------------------------------------------------------

/// A block of bit LLRs, clamped to ±[`LLR_CLAMP`] on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct BitLlrBlock {
    llrs: Vec<f64>,
}

impl BitLlrBlock {
    pub fn new(llrs: Vec<f64>) -> Self {
        let llrs = llrs.into_iter().map(clamp_llr).collect();
        BitLlrBlock { llrs }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.llrs
    }

    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }

    /// Hard decisions: negative LLR ⇒ bit 1 (ties resolve to 0).
    pub fn hard_decisions(&self) -> Vec<bool> {
        self.llrs.iter().map(|&l| l < 0.0).collect()
    }
}

// ---------------------------------------------------------------------------
// Code specification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    ConvRate1_2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ZeroTail,
}

/// Rate-1/2 feed-forward convolutional code. Generator taps are the binary
/// digits of the integers (e.g. 7 = 111, 5 = 101), MSB applied to the newest
/// bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct CodeSpec {
    pub kind: CodeKind,
    pub generators: [u32; 2],
    pub constraint_length: usize,
    pub termination: Termination,
}

impl Default for CodeSpec {
    fn default() -> Self {
        CodeSpec {
            kind: CodeKind::ConvRate1_2,
            generators: [0o7, 0o5],
            constraint_length: 3,
            termination: Termination::ZeroTail,
        }
    }
}

impl CodeSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.constraint_length;
        if !(2..=16).contains(&k) {
            return Err(Error::config(format!("constraint_length {k} outside 2..=16")));
        }
        for &g in &self.generators {
            if g == 0 || g >= (1 << k) {
                return Err(Error::config(format!(
                    "generator {g:o} (octal) does not fit constraint length {k}"
                )));
            }
        }
        Ok(())
    }

    /// Coded length for a given number of information bits (zero tail included).
    pub fn coded_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.constraint_length - 1)
    }

    /// Information bits recoverable from a coded block of the given length.
    pub fn info_len(&self, coded_len: usize) -> Result<usize> {
        let tail = self.constraint_length - 1;
        if coded_len % 2 != 0 || coded_len / 2 < tail + 1 {
            return Err(Error::LengthMismatch {
                context: "coded block length",
                expected: 2 * (tail + 1),
                got: coded_len,
            });
        }
        Ok(coded_len / 2 - tail)
    }
}

/// Shared trellis arithmetic for the encoder and the decoders.
#[derive(Clone, Copy)]
struct Trellis {
    gens: [u32; 2],
    k: usize,
}

impl Trellis {
    fn new(spec: &CodeSpec) -> Self {
        Trellis {
            gens: spec.generators,
            k: spec.constraint_length,
        }
    }

    fn n_states(&self) -> usize {
        1 << (self.k - 1)
    }

    /// (next state, two output bits) for input `bit` in `state`.
    fn step(&self, state: usize, bit: bool) -> (usize, [bool; 2]) {
        let reg = ((bit as u32) << (self.k - 1)) | state as u32;
        let out = [
            (reg & self.gens[0]).count_ones() & 1 == 1,
            (reg & self.gens[1]).count_ones() & 1 == 1,
        ];
        ((reg >> 1) as usize, out)
    }
}

/// Zero-tail convolutional encoding; output length is `spec.coded_len(bits.len())`.
pub fn conv_encode(bits: &[bool], spec: &CodeSpec) -> Vec<bool> {
    let trellis = Trellis::new(spec);
    let tail = spec.constraint_length - 1;
    let mut out = Vec::with_capacity(spec.coded_len(bits.len()));
    let mut state = 0usize;
    for &b in bits.iter().chain(std::iter::repeat(&false).take(tail)) {
        let (next, coded) = trellis.step(state, b);
        out.push(coded[0]);
        out.push(coded[1]);
        state = next;
    }
    debug_assert_eq!(state, 0, "zero tail must flush the register");
    out
}

// ---------------------------------------------------------------------------
// BCJR decoding (exact log-MAP)
// ---------------------------------------------------------------------------

/// ln(eᵃ + eᵇ) with −∞ handled exactly.
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exact log-domain forward-backward decoding of a zero-tailed block.
///
/// Input: channel LLRs for every coded bit (tail included). Output: posterior
/// LLRs for the information bits and extrinsic LLRs (posterior − input) for
/// every coded bit, both clamped to ±[`LLR_CLAMP`].
pub fn bcjr_decode(coded_llrs: &BitLlrBlock, spec: &CodeSpec) -> Result<(BitLlrBlock, BitLlrBlock)> {
    let trellis = Trellis::new(spec);
    let n_states = trellis.n_states();
    let tail = spec.constraint_length - 1;
    let n_info = spec.info_len(coded_llrs.len())?;
    let steps = n_info + tail;
    let llrs = coded_llrs.as_slice();

    // Branch metric: +λ/2 per coded 0, −λ/2 per coded 1 (constant offsets cancel).
    let metric = |t: usize, state: usize, bit: bool| -> (usize, f64) {
        let (next, out) = trellis.step(state, bit);
        let mut m = 0.0;
        for (j, &c) in out.iter().enumerate() {
            let lam = llrs[2 * t + j];
            m += if c { -lam / 2.0 } else { lam / 2.0 };
        }
        (next, m)
    };
    let inputs_at = |t: usize| -> &'static [bool] {
        if t < n_info {
            &[false, true]
        } else {
            &[false] // zero tail
        }
    };

    let mut alpha = vec![vec![f64::NEG_INFINITY; n_states]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        for s in 0..n_states {
            let a = alpha[t][s];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for &b in inputs_at(t) {
                let (next, m) = metric(t, s, b);
                alpha[t + 1][next] = log_add(alpha[t + 1][next], a + m);
            }
        }
    }

    let mut beta = vec![vec![f64::NEG_INFINITY; n_states]; steps + 1];
    beta[steps][0] = 0.0; // zero tail ends in state 0
    for t in (0..steps).rev() {
        for s in 0..n_states {
            let mut acc = f64::NEG_INFINITY;
            for &b in inputs_at(t) {
                let (next, m) = metric(t, s, b);
                acc = log_add(acc, m + beta[t + 1][next]);
            }
            beta[t][s] = acc;
        }
    }

    let mut info_llrs = Vec::with_capacity(n_info);
    let mut coded_post = vec![[f64::NEG_INFINITY; 2]; 2 * steps];
    for t in 0..steps {
        let mut num = f64::NEG_INFINITY; // input bit 0
        let mut den = f64::NEG_INFINITY; // input bit 1
        for s in 0..n_states {
            let a = alpha[t][s];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for &b in inputs_at(t) {
                let (next, out) = trellis.step(s, b);
                let (_, m) = metric(t, s, b);
                let w = a + m + beta[t + 1][next];
                if b {
                    den = log_add(den, w);
                } else {
                    num = log_add(num, w);
                }
                for (j, &c) in out.iter().enumerate() {
                    let slot = &mut coded_post[2 * t + j][c as usize];
                    *slot = log_add(*slot, w);
                }
            }
        }
        if t < n_info {
            info_llrs.push(num - den);
        }
    }

    let coded_extrinsic: Vec<f64> = coded_post
        .iter()
        .enumerate()
        .map(|(j, post)| (post[0] - post[1]) - llrs[j])
        .collect();

    Ok((BitLlrBlock::new(info_llrs), BitLlrBlock::new(coded_extrinsic)))
}

// ---------------------------------------------------------------------------
// Symbol ↔ bit message conversion
// ---------------------------------------------------------------------------

/// Per-symbol prior from extrinsic coded-bit probabilities of zero:
/// weight of each point is the product of its bits' probabilities.
pub fn symbol_prior(bit_prob_zero: &[f64], constellation: Constellation) -> DiscreteMessage {
    let bps = constellation.bits_per_symbol();
    assert_eq!(bit_prob_zero.len(), bps);
    let weights = (0..constellation.size())
        .map(|idx| {
            (0..bps)
                .map(|b| {
                    let p0 = bit_prob_zero[b];
                    debug_assert!((0.0..=1.0).contains(&p0));
                    if constellation.bit_of_point(idx, b) {
                        1.0 - p0
                    } else {
                        p0
                    }
                })
                .product()
        })
        .collect();
    DiscreteMessage::new(constellation.points().to_vec(), weights)
}

/// Splits a block of coded-bit LLRs into per-symbol priors.
pub fn symbol_priors_from_llrs(
    llrs: &BitLlrBlock,
    constellation: Constellation,
) -> Vec<DiscreteMessage> {
    let bps = constellation.bits_per_symbol();
    assert_eq!(llrs.len() % bps, 0);
    llrs.as_slice()
        .chunks_exact(bps)
        .map(|chunk| {
            let p0: Vec<f64> = chunk.iter().map(|&l| prob_zero(l)).collect();
            symbol_prior(&p0, constellation)
        })
        .collect()
}

/// Extrinsic bit LLRs from a symbol-level message and the current per-symbol
/// prior (both on the constellation support, same point order).
///
/// Pointwise posterior = msg · prior; the LLR of bit b is the posterior
/// log-ratio minus the prior's own log-ratio for that bit, which (because the
/// prior factorizes over bits) equals the true extrinsic sum over the other
/// bits' priors.
pub fn bit_llrs_from_symbol_message(
    msg: &DiscreteMessage,
    prior: &DiscreteMessage,
    constellation: Constellation,
) -> Vec<f64> {
    let bps = constellation.bits_per_symbol();
    let size = constellation.size();
    assert_eq!(msg.len(), size);
    assert_eq!(prior.len(), size);
    debug_assert!(msg
        .support()
        .iter()
        .zip(constellation.points())
        .all(|(a, b)| a == b));

    let log_ratio = |p0: f64, p1: f64| -> f64 {
        if p0 <= 0.0 {
            return -LLR_CLAMP;
        }
        if p1 <= 0.0 {
            return LLR_CLAMP;
        }
        (p0 / p1).ln()
    };

    (0..bps)
        .map(|b| {
            let mut post = [0.0f64; 2];
            let mut pri = [0.0f64; 2];
            for idx in 0..size {
                let bit = constellation.bit_of_point(idx, b) as usize;
                post[bit] += msg.weights()[idx] * prior.weights()[idx];
                pri[bit] += prior.weights()[idx];
            }
            clamp_llr(log_ratio(post[0], post[1]) - log_ratio(pri[0], pri[1]))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Interleaving
// ---------------------------------------------------------------------------

/// Seeded pseudorandom bit interleaver (Fisher–Yates permutation).
#[derive(Clone, Debug)]
pub struct Interleaver {
    perm: Vec<usize>,
}

/// Salt for deriving per-stream interleavers; fixed so transmitter and
/// receiver agree without carrying extra state.
const INTERLEAVER_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        perm.shuffle(&mut rng);
        Interleaver { perm }
    }

    /// Deterministic interleaver for one spatial stream.
    pub fn for_stream(len: usize, stream: usize) -> Self {
        Interleaver::new(len, INTERLEAVER_SALT ^ (stream as u64).wrapping_mul(0xd134_2543_de82_ef95))
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn interleave<T: Copy>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.perm.len());
        self.perm.iter().map(|&i| x[i]).collect()
    }

    pub fn deinterleave<T: Copy>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.perm.len());
        let mut out = vec![x[0]; x.len()];
        for (j, &i) in self.perm.iter().enumerate() {
            out[i] = x[j];
        }
        out
    }
}

// ---------------------------------------------------------------------------
