//! Binary codes from real constant-amplitude frames and the Grey-Rankin bound.
//!
//! Codeword `n` of a frame's code reads column `n` top to bottom, with `+` as 0
//! and `-` as 1. The text format stores one codeword per line, so it is the
//! transpose of the usual column display.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::frames::{Frame, Provenance};
use crate::metrics::{certify_etf, EtfCertificate};

#[derive(Debug, Error, PartialEq)]
pub enum CodeError {
    #[error("frame is not real with entries ±1/√m")]
    NotRealConstantAmplitude,
    #[error("code is not self-complementary")]
    NotSelfComplementary,
    #[error("need at least two codewords, have {0}")]
    TooFewWords(usize),
    #[error("codeword {index} has length {len}, expected {expected}")]
    LengthMismatch { index: usize, len: usize, expected: usize },
    #[error("malformed code file: {0}")]
    Parse(String),
}

/// A word of `len` bits, packed little-endian into 64-bit limbs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword {
    len: usize,
    limbs: Vec<u64>,
}

impl Codeword {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            limbs: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut w = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            w.set(i, b);
        }
        w
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.limbs[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.limbs[i / 64] |= mask;
        } else {
            self.limbs[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.limbs[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for limb in &mut out.limbs {
            *limb = !*limb;
        }
        out.clear_tail();
        out
    }

    pub fn xor(&self, other: &Codeword) -> Self {
        Self {
            len: self.len,
            limbs: self.limbs.iter().zip(&other.limbs).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn weight(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &Codeword) -> usize {
        self.limbs
            .iter()
            .zip(&other.limbs)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn clear_tail(&mut self) {
        if self.len % 64 != 0 {
            if let Some(last) = self.limbs.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.bit(i) { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCode {
    m: usize,
    words: Vec<Codeword>,
}

impl BinaryCode {
    pub fn new(m: usize, words: Vec<Codeword>) -> Result<Self, CodeError> {
        if let Some((index, w)) = words.iter().enumerate().find(|(_, w)| w.len() != m) {
            return Err(CodeError::LengthMismatch {
                index,
                len: w.len(),
                expected: m,
            });
        }
        Ok(Self { m, words })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn words(&self) -> &[Codeword] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Word `n + N` is the complement of word `n` for every `n < N = len/2`.
    pub fn is_self_complementary(&self) -> bool {
        let half = self.words.len() / 2;
        self.words.len() % 2 == 0
            && (0..half).all(|n| self.words[n + half] == self.words[n].complement())
    }

    pub fn all_distinct(&self) -> bool {
        let mut sorted = self.words.clone();
        sorted.sort();
        sorted.windows(2).all(|w| w[0] != w[1])
    }

    /// Flips bit `bit` of word `n` and of its complement partner.
    pub fn flip_pair(&mut self, n: usize, bit: usize) {
        let half = self.words.len() / 2;
        let partner = if n < half { n + half } else { n - half };
        self.words[n].flip(bit);
        self.words[partner].flip(bit);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# etfkit-code m={} n={} selfcomp={}",
            self.m,
            self.words.len(),
            u8::from(self.is_self_complementary())
        );
        out.push_str("# one codeword per line (columns of the usual display)\n");
        for w in &self.words {
            out.push_str(&w.to_bit_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CodeError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| CodeError::Parse("empty input".into()))?;
        let fields: Vec<&str> = header
            .strip_prefix("# etfkit-code ")
            .ok_or_else(|| CodeError::Parse("missing '# etfkit-code' header".into()))?
            .split_whitespace()
            .collect();
        let field = |key: &str| -> Result<usize, CodeError> {
            fields
                .iter()
                .find_map(|f| f.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| CodeError::Parse(format!("header lacks {key}")))?
                .parse()
                .map_err(|_| CodeError::Parse(format!("bad {key} in header")))
        };
        let (m, count, selfcomp) = (field("m")?, field("n")?, field("selfcomp")?);
        let mut words = Vec::with_capacity(count);
        for line in lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let bits = line
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(CodeError::Parse(format!("unexpected character {c:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            words.push(Codeword::from_bits(&bits));
        }
        if words.len() != count {
            return Err(CodeError::Parse(format!("header says {count} words, found {}", words.len())));
        }
        let code = BinaryCode::new(m, words)?;
        if (selfcomp == 1) != code.is_self_complementary() {
            return Err(CodeError::Parse("selfcomp flag disagrees with the words".into()));
        }
        Ok(code)
    }
}

/// `+ ↦ 0`, `- ↦ 1` on the columns, followed by their complements.
pub fn frame_to_code(frame: &Frame) -> Result<BinaryCode, CodeError> {
    let (m, n) = (frame.m(), frame.n());
    let sf = frame
        .detect_sign_form(m as u64, 1e-12)
        .filter(|sf| sf.signs.iter().all(|&s| s != 0))
        .ok_or(CodeError::NotRealConstantAmplitude)?;
    let mut words: Vec<Codeword> = (0..n)
        .map(|c| {
            let bits: Vec<bool> = (0..m).map(|r| sf.signs[r * n + c] < 0).collect();
            Codeword::from_bits(&bits)
        })
        .collect();
    let complements: Vec<Codeword> = words.iter().map(Codeword::complement).collect();
    words.extend(complements);
    BinaryCode::new(m, words)
}

/// The first half of a self-complementary code as a `±1/√m` frame.
pub fn code_to_frame(code: &BinaryCode) -> Result<Frame, CodeError> {
    if !code.is_self_complementary() {
        return Err(CodeError::NotSelfComplementary);
    }
    let (m, n) = (code.m(), code.len() / 2);
    let signs = (0..m * n)
        .map(|i| if code.words()[i % n].bit(i / n) { -1 } else { 1 })
        .collect();
    Ok(Frame::from_signs(m, n, signs, m as u64, Provenance::Code { words: code.len() }))
}

/// Minimum Hamming distance with a pair attaining it.
pub fn distance_with_witness(code: &BinaryCode) -> Result<(usize, (usize, usize)), CodeError> {
    if code.len() < 2 {
        return Err(CodeError::TooFewWords(code.len()));
    }
    let w = code.words();
    let mut best = (usize::MAX, (0, 1));
    for a in 0..w.len() {
        for b in a + 1..w.len() {
            let d = w[a].hamming(&w[b]);
            if d < best.0 {
                best = (d, (a, b));
            }
        }
    }
    Ok(best)
}

pub fn distance(code: &BinaryCode) -> Result<usize, CodeError> {
    distance_with_witness(code).map(|(d, _)| d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreyRankinBound {
    pub m: usize,
    pub delta: usize,
    pub applicable: bool,
    /// `8Δ(m−Δ)`.
    pub numerator: i128,
    /// `m − (m − 2Δ)²`.
    pub denominator: i128,
    pub bound: Option<f64>,
    /// The bound when it is a whole number.
    pub bound_integral: Option<u128>,
}

/// Largest size of a self-complementary code of length `m` and distance `Δ`, when the bound applies.
pub fn grey_rankin_bound(m: usize, delta: usize) -> GreyRankinBound {
    let (mi, di) = (m as i128, delta as i128);
    let numerator = 8 * di * (mi - di);
    let denominator = mi - (mi - 2 * di).pow(2);
    let applicable = denominator > 0 && numerator > 0;
    GreyRankinBound {
        m,
        delta,
        applicable,
        numerator,
        denominator,
        bound: applicable.then(|| numerator as f64 / denominator as f64),
        bound_integral: (applicable && numerator % denominator == 0).then(|| (numerator / denominator) as u128),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrbeCertificate {
    pub m: usize,
    pub size: usize,
    pub distance: usize,
    pub distance_pair: (usize, usize),
    pub self_complementary: bool,
    pub bound: GreyRankinBound,
    /// `size · (m − (m−2Δ)²) = 8Δ(m−Δ)` in integers.
    pub meets_bound: bool,
    /// `⟨φ_a, φ_b⟩ = (m − 2 d(c_a, c_b))/m` for every pair in the first half.
    pub inner_product_identity: bool,
    pub etf: EtfCertificate,
    /// Length-one codes: every frame in one dimension is trivially equiangular and the bound is vacuous.
    pub degenerate: bool,
    /// Meeting the bound and the frame being an ETF coincide (or the code is degenerate).
    pub agree: bool,
}

/// Decides Grey-Rankin equality exactly and cross-checks it against the ETF certificate of the code's frame.
pub fn certify_grbe(code: &BinaryCode) -> Result<GrbeCertificate, CodeError> {
    let frame = code_to_frame(code)?;
    let (delta, pair) = distance_with_witness(code)?;
    let bound = grey_rankin_bound(code.m(), delta);
    let meets_bound = bound.applicable && code.len() as i128 * bound.denominator == bound.numerator;
    let n = frame.n();
    let gram = frame.exact_gram().expect("code frames carry sign forms");
    let w = code.words();
    let inner_product_identity = (0..n).all(|a| {
        (0..n).all(|b| gram[a * n + b] == code.m() as i64 - 2 * w[a].hamming(&w[b]) as i64)
    });
    let etf = certify_etf(&frame, 0.0).map_err(|_| CodeError::TooFewWords(code.len()))?;
    let degenerate = code.m() == 1;
    let agree = degenerate || meets_bound == etf.verdict.is_etf;
    Ok(GrbeCertificate {
        m: code.m(),
        size: code.len(),
        distance: delta,
        distance_pair: pair,
        self_complementary: true,
        bound,
        meets_bound,
        inner_product_identity,
        etf,
        degenerate,
        agree,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityReport {
    pub contains_zero: bool,
    /// A pair of words whose sum is not in the code.
    pub witness: Option<(usize, usize)>,
    pub linear: bool,
    pub dimension: Option<u32>,
    /// For linear GRBE codes: which known family the parameters fit, if any.
    pub family: Option<String>,
    /// A linear GRBE code whose parameters fit no known family.
    pub contradiction: bool,
}

/// Known parameters of linear codes meeting the Grey-Rankin bound.
pub fn linear_grbe_family(m: usize, size: usize) -> Option<String> {
    for j in 1..=30u32 {
        let pj = 1usize << j;
        if m == 2 * pj - 1 && size == 4 * pj {
            return Some(format!("simplex-type, j = {j}"));
        }
        let bent_size = 1usize.checked_shl(2 * j + 3).unwrap_or(0);
        if size == bent_size && (m == pj * (2 * pj + 1) || m == pj * (2 * pj - 1)) {
            return Some(format!("bent-type, j = {j}"));
        }
    }
    None
}

pub fn is_linear(code: &BinaryCode) -> LinearityReport {
    let words = code.words();
    let set: std::collections::HashSet<&Codeword> = words.iter().collect();
    let contains_zero = set.contains(&Codeword::zeros(code.m()));
    let mut witness = None;
    'outer: for a in 0..words.len() {
        for b in a + 1..words.len() {
            if !set.contains(&words[a].xor(&words[b])) {
                witness = Some((a, b));
                break 'outer;
            }
        }
    }
    let linear = contains_zero && witness.is_none();
    let distinct = set.len();
    let dimension = (linear && distinct.is_power_of_two()).then(|| distinct.trailing_zeros());
    let (family, contradiction) = if linear && code.is_self_complementary() && code.len() >= 2 {
        match certify_grbe(code) {
            Ok(cert) if cert.meets_bound => {
                let fam = linear_grbe_family(code.m(), code.len());
                let missing = fam.is_none();
                (fam, missing)
            }
            _ => (None, false),
        }
    } else {
        (None, false)
    };
    LinearityReport {
        contains_zero,
        witness,
        linear,
        dimension,
        family,
        contradiction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::round_robin_design;
    use crate::flatmat::{drop_row_simplex, hadamard};
    use crate::frames::{kirkman_etf, real_kirkman_k2, steiner_etf};

    fn fig2() -> Frame {
        kirkman_etf(
            &round_robin_design(4).unwrap(),
            &drop_row_simplex(&hadamard(4).unwrap(), 0).unwrap(),
            &hadamard(2).unwrap(),
        )
        .unwrap()
    }

    // the 6 x 32 display, one string per row
    const FIG3: [&str; 6] = [
        "01010101010101011010101010101010",
        "01010101101010101010101001010101",
        "00110011001100111100110011001100",
        "00111100001111001100001111000011",
        "01100110011001101001100110011001",
        "01101001100101101001011001101001",
    ];

    #[test]
    fn code_matches_hand_entered_display() {
        let code = frame_to_code(&fig2()).unwrap();
        assert_eq!(code.len(), 32);
        for (r, row) in FIG3.iter().enumerate() {
            let got: String = code.words().iter().map(|w| if w.bit(r) { '1' } else { '0' }).collect();
            assert_eq!(&got, row);
        }
        assert!(code.is_self_complementary());
        assert_eq!(code.words()[0], Codeword::zeros(6));
    }

    #[test]
    fn grey_rankin_values() {
        let b = grey_rankin_bound(6, 2);
        assert_eq!((b.bound_integral, b.applicable), (Some(32), true));
        assert_eq!(grey_rankin_bound(28, 12).bound_integral, Some(128));
        assert!(!grey_rankin_bound(6, 1).applicable);
        assert!(!grey_rankin_bound(6, 0).applicable);
    }

    #[test]
    fn small_code_meets_bound() {
        let code = frame_to_code(&fig2()).unwrap();
        let cert = certify_grbe(&code).unwrap();
        assert_eq!(cert.distance, 2);
        assert!(cert.meets_bound && cert.etf.verdict.is_etf && cert.agree && cert.inner_product_identity);
    }

    #[test]
    fn perturbation_keeps_self_complementarity_and_breaks_equality() {
        let mut code = frame_to_code(&fig2()).unwrap();
        code.flip_pair(3, 0);
        assert!(code.is_self_complementary());
        let cert = certify_grbe(&code).unwrap();
        assert!(!cert.meets_bound && !cert.etf.verdict.is_etf && cert.agree);
    }

    #[test]
    fn text_round_trip() {
        let code = frame_to_code(&fig2()).unwrap();
        let text = code.to_text();
        assert!(text.starts_with("# etfkit-code m=6 n=32 selfcomp=1\n"));
        assert_eq!(BinaryCode::from_text(&text).unwrap(), code);
        assert!(BinaryCode::from_text("# etfkit-code m=2 n=1 selfcomp=0\n012\n").is_err());
        assert!(BinaryCode::from_text("# etfkit-code m=2 n=2 selfcomp=1\n01\n11\n").is_err());
    }

    #[test]
    fn conversion_errors() {
        let sparse = steiner_etf(&round_robin_design(4).unwrap(), &drop_row_simplex(&hadamard(4).unwrap(), 0).unwrap()).unwrap();
        assert_eq!(frame_to_code(&sparse), Err(CodeError::NotRealConstantAmplitude));
        let one = BinaryCode::new(3, vec![Codeword::zeros(3)]).unwrap();
        assert_eq!(distance(&one), Err(CodeError::TooFewWords(1)));
        assert_eq!(code_to_frame(&one), Err(CodeError::NotSelfComplementary));
    }

    #[test]
    fn linearity() {
        let code = frame_to_code(&fig2()).unwrap();
        let rep = is_linear(&code);
        assert!(rep.linear, "{rep:?}");
        assert_eq!(rep.dimension, Some(5));
        assert_eq!(rep.family.as_deref(), Some("bent-type, j = 1"));
        assert!(!rep.contradiction);

        let big = frame_to_code(&real_kirkman_k2(3).unwrap()).unwrap();
        let cert = certify_grbe(&big).unwrap();
        assert!(cert.meets_bound && cert.agree);
        assert_eq!(cert.distance, 12);
    }
}
