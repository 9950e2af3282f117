//! Coherence, the Welch bound and ETF certificates; Gram comparison; spark and
//! restricted-isometry constants by exhaustive subset search.

use itertools::Itertools;
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::frames::Frame;

/// Largest number of subsets any exhaustive search will visit.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;
/// Largest frame `spark` accepts without `allow_large`.
pub const SPARK_MAX_COLUMNS: usize = 64;
/// A subset is dependent when its smallest singular value is below this times `√n`.
pub const SPARK_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("need at least two columns, have {0}")]
    TooFewColumns(usize),
    #[error("column {column} has norm {norm}, not 1")]
    NotUnitNorm { column: usize, norm: f64 },
    #[error("bad dimensions m = {m}, n = {n}")]
    BadDimensions { m: usize, n: usize },
    #[error("shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("{subsets} subsets exceeds the enumeration budget of {budget}")]
    EnumerationBudgetExceeded { subsets: u128, budget: u128 },
    #[error("frame has {0} columns; spark search is limited to {SPARK_MAX_COLUMNS} without allow_large")]
    TooLarge(usize),
    #[error("subset size must be at least 1")]
    ZeroSubset,
    #[error("frame has no Steiner provenance")]
    NotApplicable,
}

/// Result of comparing two matrices of the same shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub max_deviation: f64,
    /// Location of the largest deviation.
    pub witness: Option<(usize, usize)>,
    pub tol: f64,
    /// Exact rational verdict, when both sides have sign forms.
    pub exact: Option<bool>,
    pub passed: bool,
}

fn max_deviation(a: &[Complex64], b: &[Complex64], cols: usize) -> (f64, Option<(usize, usize)>) {
    let mut best = (0.0, None);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let d = (x - y).norm();
        if d > best.0 || best.1.is_none() {
            best = (d, Some((i / cols, i % cols)));
        }
    }
    best
}

/// Entrywise comparison of two frames; frames of different shape never match.
pub fn entries_equal(a: &Frame, b: &Frame, tol: f64) -> MatchReport {
    if (a.m(), a.n()) != (b.m(), b.n()) {
        return MatchReport {
            max_deviation: f64::INFINITY,
            witness: None,
            tol,
            exact: Some(false),
            passed: false,
        };
    }
    let (dev, witness) = max_deviation(a.entries(), b.entries(), a.n());
    let exact = match (a.sign_form(), b.sign_form()) {
        (Some(x), Some(y)) if x.scale_sq_inv == y.scale_sq_inv => Some(x.signs == y.signs),
        _ => None,
    };
    MatchReport {
        max_deviation: dev,
        witness,
        tol,
        exact,
        passed: exact.unwrap_or(dev <= tol),
    }
}

/// Compares Gram matrices; exact when both frames have sign forms.
pub fn gram_equal(a: &Frame, b: &Frame, tol: f64) -> Result<MatchReport, MetricsError> {
    if a.n() != b.n() {
        return Err(MetricsError::ShapeMismatch((a.m(), a.n()), (b.m(), b.n())));
    }
    let (dev, witness) = max_deviation(&a.gram(), &b.gram(), a.n());
    let exact = match (a.sign_form(), b.sign_form()) {
        (Some(x), Some(y)) => {
            let (ga, gb) = (a.exact_gram().unwrap(), b.exact_gram().unwrap());
            let (sa, sb) = (x.scale_sq_inv as i128, y.scale_sq_inv as i128);
            Some(ga.iter().zip(&gb).all(|(&p, &q)| p as i128 * sb == q as i128 * sa))
        }
        _ => None,
    };
    Ok(MatchReport {
        max_deviation: dev,
        witness,
        tol,
        exact,
        passed: exact.unwrap_or(dev <= tol),
    })
}

/// `max |(ΦΦ*)_{ab} − (n/m) δ_{ab}|`.
pub fn tightness_residual(frame: &Frame) -> f64 {
    let m = frame.m();
    if m == 0 {
        return 0.0;
    }
    let a = frame.n() as f64 / m as f64;
    frame
        .frame_operator()
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let target = if i / m == i % m { a } else { 0.0 };
            (z - target).norm()
        })
        .fold(0.0, f64::max)
}

/// `√((n−m)/(m(n−1)))`.
pub fn welch_bound(m: usize, n: usize) -> Result<f64, MetricsError> {
    if m == 0 || n < 2 || n < m {
        return Err(MetricsError::BadDimensions { m, n });
    }
    Ok(((n - m) as f64 / (m as f64 * (n - 1) as f64)).sqrt())
}

/// The squared Welch bound as a reduced fraction.
pub fn welch_bound_sq_exact(m: usize, n: usize) -> Result<Ratio<u64>, MetricsError> {
    welch_bound(m, n)?;
    Ok(Ratio::new((n - m) as u64, (m * (n - 1)) as u64))
}

/// The Welch bound itself when it is rational.
pub fn welch_bound_exact(m: usize, n: usize) -> Result<Option<Ratio<u64>>, MetricsError> {
    let sq = welch_bound_sq_exact(m, n)?;
    Ok(exact_sqrt(*sq.numer()).zip(exact_sqrt(*sq.denom())).map(|(a, b)| Ratio::new(a, b)))
}

fn exact_sqrt(x: u64) -> Option<u64> {
    let r = (x as f64).sqrt().round() as u64;
    (r.checked_mul(r) == Some(x)).then_some(r)
}

/// Largest `|⟨φ_a, φ_b⟩|` over distinct columns, with the pair attaining it.
pub fn coherence_with_witness(frame: &Frame) -> Result<(f64, (usize, usize)), MetricsError> {
    if frame.n() < 2 {
        return Err(MetricsError::TooFewColumns(frame.n()));
    }
    if let Some((column, norm)) = frame.unit_norm_violation(crate::frames::UNIT_NORM_TOL) {
        return Err(MetricsError::NotUnitNorm { column, norm });
    }
    let (best, pair) = off_diagonal_extremes(frame).max;
    Ok((best, pair))
}

/// Coherence of a sign-form frame as a reduced fraction.
pub fn exact_coherence(frame: &Frame) -> Option<Ratio<i64>> {
    let sf = frame.sign_form()?;
    let n = frame.n();
    if n < 2 || frame.unit_norm_violation(0.0).is_some() {
        return None;
    }
    let g = frame.exact_gram()?;
    let d = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| g[a * n + b].abs())
        .max()?;
    Some(Ratio::new(d, sf.scale_sq_inv as i64))
}

pub fn coherence(frame: &Frame) -> Result<f64, MetricsError> {
    coherence_with_witness(frame).map(|(mu, _)| mu)
}

struct Extremes {
    max: (f64, (usize, usize)),
    min: (f64, (usize, usize)),
}

fn off_diagonal_extremes(frame: &Frame) -> Extremes {
    let n = frame.n();
    let scale = frame.sign_form().map(|sf| sf.scale_sq_inv as f64);
    let moduli: Vec<f64> = match (frame.exact_gram(), scale) {
        (Some(g), Some(s)) => g.iter().map(|&x| x.abs() as f64 / s).collect(),
        _ => frame.gram().iter().map(|z| z.norm()).collect(),
    };
    let mut ext = Extremes {
        max: (f64::NEG_INFINITY, (0, 1)),
        min: (f64::INFINITY, (0, 1)),
    };
    for a in 0..n {
        for b in a + 1..n {
            let v = moduli[a * n + b];
            if v > ext.max.0 {
                ext.max = (v, (a, b));
            }
            if v < ext.min.0 {
                ext.min = (v, (a, b));
            }
        }
    }
    ext
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtfVerdict {
    pub unit_norm: bool,
    pub tight: bool,
    pub equiangular: bool,
    pub welch_equality: bool,
    /// More vectors than dimensions.
    pub redundant: bool,
    /// Unit norm, tight, equiangular and meeting the Welch bound; orthonormal bases qualify.
    pub is_etf: bool,
    /// `is_etf` and redundant.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtfCertificate {
    pub m: usize,
    pub n: usize,
    /// Largest off-diagonal Gram modulus (of the frame as given, even if not unit norm).
    pub coherence: f64,
    pub coherence_pair: Option<(usize, usize)>,
    pub welch_bound: f64,
    pub tightness_residual: f64,
    pub max_off_diagonal: f64,
    pub min_off_diagonal: f64,
    /// Pair with the smallest off-diagonal modulus, reported when equiangularity fails.
    pub equiangularity_witness: Option<(usize, usize)>,
    /// First column that is not unit norm.
    pub unit_norm_witness: Option<usize>,
    pub frame_potential: f64,
    pub frame_potential_target: f64,
    pub exact: bool,
    pub tol: f64,
    pub verdict: EtfVerdict,
}

/// Checks unit norm, tightness, equiangularity and Welch equality.
/// Sign-form frames are decided in exact integer arithmetic and `tol` is ignored.
pub fn certify_etf(frame: &Frame, tol: f64) -> Result<EtfCertificate, MetricsError> {
    let (m, n) = (frame.m(), frame.n());
    if m == 0 || n == 0 {
        return Err(MetricsError::BadDimensions { m, n });
    }
    let welch = if n >= 2 && n >= m { welch_bound(m, n)? } else { 0.0 };
    let residual = tightness_residual(frame);
    let gram = frame.gram();
    let potential: f64 = match (frame.exact_gram(), frame.sign_form()) {
        (Some(g), Some(sf)) => {
            let sum: i128 = g.iter().map(|&x| (x as i128).pow(2)).sum();
            sum as f64 / (sf.scale_sq_inv as f64).powi(2)
        }
        _ => gram.iter().map(|z| z.norm_sqr()).sum(),
    };
    let ext = (n >= 2).then(|| off_diagonal_extremes(frame));
    let (max_off, min_off) = ext.as_ref().map_or((0.0, 0.0), |e| (e.max.0, e.min.0));
    let unit_norm_witness = frame.unit_norm_violation(tol).map(|(c, _)| c);

    let (unit_norm, tight, equiangular, welch_equality, exact) = match frame.sign_form() {
        Some(sf) => {
            let s = sf.scale_sq_inv as i128;
            let g = frame.exact_gram().unwrap();
            let unit = (0..n).all(|a| g[a * n + a] as i128 == s);
            let off = || (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)));
            let dmax = off().map(|(a, b)| g[a * n + b].unsigned_abs()).max().unwrap_or(0) as i128;
            let dmin = off().map(|(a, b)| g[a * n + b].unsigned_abs()).min().unwrap_or(0) as i128;
            let equi = dmax == dmin;
            let welch_eq = n >= m && dmax * dmax * (m * (n.max(1) - 1)) as i128 == s * s * (n - m) as i128;
            (unit, exact_tight(frame, sf), equi, welch_eq, true)
        }
        None => {
            let unit = unit_norm_witness.is_none();
            let equi = max_off - min_off <= tol;
            let welch_eq = n >= m && (max_off - welch).abs() <= tol;
            (unit, residual <= tol, equi, welch_eq, false)
        }
    };
    // at n = 1 there is nothing to compare
    let (equiangular, welch_equality) = if n < 2 { (true, true) } else { (equiangular, welch_equality) };
    let is_etf = unit_norm && tight && equiangular && welch_equality;
    let unit_norm_witness = if exact && !unit_norm {
        frame.unit_norm_violation(0.0).map(|(c, _)| c)
    } else {
        unit_norm_witness
    };

    Ok(EtfCertificate {
        m,
        n,
        coherence: max_off.max(0.0),
        coherence_pair: ext.as_ref().map(|e| e.max.1),
        welch_bound: welch,
        tightness_residual: residual,
        max_off_diagonal: max_off.max(0.0),
        min_off_diagonal: min_off.max(0.0),
        equiangularity_witness: if equiangular { None } else { ext.as_ref().map(|e| e.min.1) },
        unit_norm_witness,
        frame_potential: potential,
        frame_potential_target: (n * n) as f64 / m as f64,
        exact,
        tol,
        verdict: EtfVerdict {
            unit_norm,
            tight,
            equiangular,
            welch_equality,
            redundant: n > m,
            is_etf,
            pass: is_etf && n > m,
        },
    })
}

/// `m · SSᵀ = n · s · I` over the integers.
fn exact_tight(frame: &Frame, sf: &crate::frames::SignForm) -> bool {
    let (m, n) = (frame.m(), frame.n());
    let target = (n as i128) * sf.scale_sq_inv as i128;
    (0..m).all(|a| {
        (a..m).all(|b| {
            let dot: i128 = (0..n)
                .map(|c| (sf.signs[a * n + c] * sf.signs[b * n + c]) as i128)
                .sum();
            let want = if a == b { target } else { 0 };
            dot * m as i128 == want
        })
    })
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Column data in the cheapest numeric form available.
enum Columns {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Columns {
    fn of(frame: &Frame) -> Self {
        if frame.entries().iter().all(|z| z.im == 0.0) {
            Columns::Real(frame.entries().iter().map(|z| z.re).collect())
        } else {
            Columns::Complex(frame.entries().to_vec())
        }
    }
}

fn smallest_singular_value(frame: &Frame, cols: &Columns, subset: &[usize]) -> f64 {
    let (m, n) = (frame.m(), frame.n());
    match cols {
        Columns::Real(e) => {
            let a = DMatrix::from_fn(m, subset.len(), |r, c| e[r * n + subset[c]]);
            a.singular_values().min()
        }
        Columns::Complex(e) => {
            let a = DMatrix::from_fn(m, subset.len(), |r, c| {
                let z = e[r * n + subset[c]];
                Complex::new(z.re, z.im)
            });
            a.singular_values().min()
        }
    }
}

fn numerical_rank(frame: &Frame, subset: &[usize], threshold: f64) -> usize {
    let (m, n) = (frame.m(), frame.n());
    let a = DMatrix::from_fn(m, subset.len(), |r, c| {
        let z = frame.entries()[r * n + subset[c]];
        Complex::new(z.re, z.im)
    });
    a.singular_values().iter().filter(|&&s| s > threshold).count()
}

/// Calls `f` on every lexicographic `size`-subset of `0..n` until it returns `Some`,
/// sharding the work over the first two indices. The first hit in lexicographic order wins.
fn find_first_subset<F>(n: usize, size: usize, f: F) -> Option<Vec<usize>>
where
    F: Fn(&[usize]) -> bool + Sync,
{
    if size == 1 {
        return (0..n).find(|&i| f(&[i])).map(|i| vec![i]);
    }
    let heads: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    heads.par_iter().find_map_first(|&(i, j)| {
        (j + 1..n).combinations(size - 2).find_map(|tail| {
            let mut s = Vec::with_capacity(size);
            s.push(i);
            s.push(j);
            s.extend(tail);
            f(&s).then_some(s)
        })
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SparkOptions {
    /// Stop after subsets of this size.
    pub max_subset: Option<usize>,
    pub allow_large: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparkReport {
    /// Size of the smallest dependent subset; `None` if none was found within the search.
    pub spark: Option<usize>,
    /// Lexicographically first dependent subset of that size.
    pub witness: Option<Vec<usize>>,
    /// Every subset of size at most this is independent.
    pub independent_up_to: usize,
    pub threshold: f64,
    /// The `R + 1` vectors at one point of a Steiner-type frame, which lie in `R` dimensions.
    pub structural_witness: Option<Vec<usize>>,
    pub structural_rank: Option<usize>,
}

pub fn spark(frame: &Frame, opts: &SparkOptions) -> Result<SparkReport, MetricsError> {
    let (m, n) = (frame.m(), frame.n());
    if n > SPARK_MAX_COLUMNS && !opts.allow_large {
        return Err(MetricsError::TooLarge(n));
    }
    let threshold = SPARK_REL_TOL * (n as f64).sqrt();
    let limit = opts.max_subset.unwrap_or(n).min(n).min(m + 1);
    let cols = Columns::of(frame);

    let (structural_witness, structural_rank) = match frame.provenance.steiner_replication() {
        Some(r) if r < n => {
            let idx: Vec<usize> = match &frame.column_labels {
                Some(l) => (0..n).filter(|&c| l[c].1 == 0).collect(),
                None => (0..=r).collect(),
            };
            let rank = numerical_rank(frame, &idx, threshold);
            (Some(idx), Some(rank))
        }
        _ => (None, None),
    };

    let mut independent_up_to = 0;
    for size in 1..=limit {
        // past the budget only the lower bound is reported
        if binomial(n, size) > ENUMERATION_BUDGET && size <= m && !opts.allow_large {
            break;
        }
        let hit = if size > m {
            Some((0..size).collect())
        } else {
            find_first_subset(n, size, |s| smallest_singular_value(frame, &cols, s) <= threshold)
        };
        if let Some(w) = hit {
            return Ok(SparkReport {
                spark: Some(size),
                witness: Some(w),
                independent_up_to,
                threshold,
                structural_witness,
                structural_rank,
            });
        }
        independent_up_to = size;
    }
    Ok(SparkReport {
        spark: None,
        witness: None,
        independent_up_to,
        threshold,
        structural_witness,
        structural_rank,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipReport {
    pub l: usize,
    /// `max |λ − 1|` over eigenvalues of all `l × l` principal Gram submatrices.
    pub delta: f64,
    pub witness: Vec<usize>,
    pub subsets: u128,
    pub coherence: f64,
    /// `(l − 1) μ`.
    pub gershgorin_bound: f64,
}

fn subset_deviation(gram: &[Complex64], real: bool, n: usize, s: &[usize]) -> f64 {
    let l = s.len();
    let eig = if real {
        let g = DMatrix::from_fn(l, l, |a, b| gram[s[a] * n + s[b]].re);
        SymmetricEigen::new(g).eigenvalues
    } else {
        let g = DMatrix::from_fn(l, l, |a, b| {
            let z = gram[s[a] * n + s[b]];
            Complex::new(z.re, z.im)
        });
        SymmetricEigen::new(g).eigenvalues
    };
    eig.iter().map(|&x| (x - 1.0).abs()).fold(0.0, f64::max)
}

/// Restricted isometry constant of order `l` by exhaustive search.
pub fn rip_delta(frame: &Frame, l: usize) -> Result<RipReport, MetricsError> {
    let n = frame.n();
    if l == 0 {
        return Err(MetricsError::ZeroSubset);
    }
    if l > n {
        return Err(MetricsError::BadDimensions { m: l, n });
    }
    let subsets = binomial(n, l);
    if subsets > ENUMERATION_BUDGET {
        return Err(MetricsError::EnumerationBudgetExceeded {
            subsets,
            budget: ENUMERATION_BUDGET,
        });
    }
    let gram = frame.gram();
    let real = gram.iter().all(|z| z.im == 0.0);
    let mu = if n >= 2 { off_diagonal_extremes(frame).max.0 } else { 0.0 };

    let best_in = |iter: &mut dyn Iterator<Item = Vec<usize>>| -> Option<(f64, Vec<usize>)> {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for s in iter {
            let d = subset_deviation(&gram, real, n, &s);
            if best.as_ref().is_none_or(|(b, _)| d > *b) {
                best = Some((d, s));
            }
        }
        best
    };
    let (delta, witness) = if l == 1 {
        best_in(&mut (0..n).map(|i| vec![i])).unwrap()
    } else {
        let heads: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let per_head: Vec<Option<(f64, Vec<usize>)>> = heads
            .par_iter()
            .map(|&(i, j)| {
                best_in(&mut (j + 1..n).combinations(l - 2).map(|tail| {
                    let mut s = vec![i, j];
                    s.extend(tail);
                    s
                }))
            })
            .collect();
        // sequential reduction keeps the earliest maximiser regardless of scheduling
        per_head
            .into_iter()
            .flatten()
            .fold(None::<(f64, Vec<usize>)>, |acc, cand| match acc {
                Some(a) if a.0 >= cand.0 => Some(a),
                _ => Some(cand),
            })
            .unwrap()
    };
    Ok(RipReport {
        l,
        delta,
        witness,
        subsets,
        coherence: mu,
        gershgorin_bound: (l - 1) as f64 * mu,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipLevel {
    pub l: usize,
    pub delta: f64,
    pub below_one: bool,
    /// Whether `δ_l < 1` agrees with `l ≤ R`.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinerRipReport {
    pub replication: usize,
    /// `√((ρm − 1)/(ρ − 1))` with `ρ = n/m`; equals `R` for Steiner ETFs.
    pub replication_from_redundancy: f64,
    pub levels: Vec<RipLevel>,
    /// Orders that were not searched because they exceed the enumeration budget.
    pub skipped: Vec<usize>,
    pub consistent: bool,
}

/// `δ_l < 1` exactly for `l ≤ R`: checks every order up to `R + 1` that fits the budget.
pub fn steiner_rip_verdict(frame: &Frame) -> Result<SteinerRipReport, MetricsError> {
    let r = frame
        .provenance
        .steiner_replication()
        .ok_or(MetricsError::NotApplicable)?;
    let (m, n) = (frame.m() as f64, frame.n() as f64);
    let rho = n / m;
    let from_redundancy = ((rho * m - 1.0) / (rho - 1.0)).sqrt();
    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    for l in 1..=(r + 1).min(frame.n()) {
        if binomial(frame.n(), l) > ENUMERATION_BUDGET {
            skipped.push(l);
            continue;
        }
        let rep = rip_delta(frame, l)?;
        let below_one = rep.delta < 1.0 - 1e-9;
        levels.push(RipLevel {
            l,
            delta: rep.delta,
            below_one,
            consistent: below_one == (l <= r),
        });
    }
    let consistent = levels.iter().all(|x| x.consistent);
    Ok(SteinerRipReport {
        replication: r,
        replication_from_redundancy: from_redundancy,
        levels,
        skipped,
        consistent,
    })
}
