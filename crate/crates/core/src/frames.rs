//! Frame synthesis: Steiner and Kirkman ETFs from resolvable designs,
//! McFarland difference sets and their harmonic ETFs, and Naimark complements.
//!
//! A [`Frame`] is an `m × n` synthesis matrix whose columns are the frame
//! vectors. Frames whose entries are all of the form `±1/√s` or `0` also keep
//! an exact integer [`SignForm`], so Gram entries of real constant-amplitude
//! frames can be computed as integers over `s`.
//!
//! Columns of design-based frames are ordered point-major: column
//! `v(R+1) + u` is the vector `φ_{u,v}`. Rows are ordered class by class,
//! row `(r, s)` being the `s`-th block of parallel class `r`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designs::{AffineGeometry, DesignError, SteinerSystem};
use crate::flatmat::{
    hadamard, drop_row_simplex, root_of_unity, simplex_from_characters, AbelianGroup, FlatError,
    MatrixKind, UnimodularMatrix,
};
use crate::metrics::{entries_equal, MatchReport};

pub const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("design has no resolution into parallel classes")]
    NotResolvable,
    #[error("design fails validation: {0}")]
    InvalidDesign(String),
    #[error("simplex is {rows}x{cols} but the design needs {expected_rows}x{}", expected_rows + 1)]
    SimplexShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
    },
    #[error("basis is {rows}x{cols} but parallel classes have {expected} blocks")]
    BasisShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("group has order {actual}, expected {expected}")]
    GroupOrderMismatch { expected: usize, actual: usize },
    #[error("difference set belongs to a different group")]
    GroupMismatch,
    #[error("not a difference set: nonzero element {element} arises {count} times, expected {expected}")]
    NotADifferenceSet {
        element: usize,
        count: usize,
        expected: usize,
    },
    #[error("frame is not tight: residual {0:e}")]
    NotTight(f64),
    #[error("malformed frame file: {0}")]
    Parse(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Flat(#[from] FlatError),
}

/// Where a frame came from; carries what later analyses need (e.g. the replication `R`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Steiner { v: usize, k: usize, replication: usize },
    Kirkman { v: usize, k: usize, replication: usize },
    Harmonic { group: Vec<usize>, set_size: usize },
    McfarlandHarmonic { q: u64, j: u32, group: Vec<usize> },
    Naimark { source: Box<Provenance> },
    Code { words: usize },
    Unspecified,
}

impl Provenance {
    /// The replication number of the underlying resolvable design, for Steiner-type frames.
    pub fn steiner_replication(&self) -> Option<usize> {
        match self {
            Provenance::Steiner { replication, .. } | Provenance::Kirkman { replication, .. } => {
                Some(*replication)
            }
            Provenance::McfarlandHarmonic { q, j, .. } => {
                let v = q.pow(j + 1);
                Some(((v - 1) / (q - 1)) as usize)
            }
            _ => None,
        }
    }
}

/// Exact entries `signs[i] / √scale_sq_inv`, with `signs[i] ∈ {-1, 0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignForm {
    pub signs: Vec<i8>,
    pub scale_sq_inv: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    m: usize,
    n: usize,
    entries: Vec<Complex64>,
    exact: Option<SignForm>,
    pub column_labels: Option<Vec<(usize, usize)>>,
    pub row_labels: Option<Vec<(usize, usize)>>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct FrameFile {
    m: usize,
    n: usize,
    scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    signs: Option<Vec<Vec<i8>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale_sq_inv: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column_labels: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    row_labels: Option<Vec<(usize, usize)>>,
    #[serde(default = "unspecified")]
    provenance: Provenance,
}

fn unspecified() -> Provenance {
    Provenance::Unspecified
}

impl Frame {
    /// Wraps raw row-major entries; nothing about the columns is checked.
    pub fn from_entries(m: usize, n: usize, entries: Vec<Complex64>, provenance: Provenance) -> Self {
        assert_eq!(entries.len(), m * n, "entry count does not match shape");
        Self {
            m,
            n,
            entries,
            exact: None,
            column_labels: None,
            row_labels: None,
            provenance,
        }
    }

    pub fn from_signs(
        m: usize,
        n: usize,
        signs: Vec<i8>,
        scale_sq_inv: u64,
        provenance: Provenance,
    ) -> Self {
        assert_eq!(signs.len(), m * n, "entry count does not match shape");
        assert!(scale_sq_inv > 0, "scale must be positive");
        let scale = 1.0 / (scale_sq_inv as f64).sqrt();
        let entries = signs.iter().map(|&s| Complex64::new(s as f64 * scale, 0.0)).collect();
        Self {
            m,
            n,
            entries,
            exact: Some(SignForm {
                signs,
                scale_sq_inv,
            }),
            column_labels: None,
            row_labels: None,
            provenance,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.n + c]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn sign_form(&self) -> Option<&SignForm> {
        self.exact.as_ref()
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.m).map(|r| self.get(r, c)).collect()
    }

    /// `⟨φ_a, φ_b⟩ = Σ_r φ_a(r) conj(φ_b(r))`.
    pub fn inner(&self, a: usize, b: usize) -> Complex64 {
        (0..self.m).map(|r| self.get(r, a) * self.get(r, b).conj()).sum()
    }

    /// Integer `Σ_r s_a(r) s_b(r)`; the inner product is this over `scale_sq_inv`.
    pub fn exact_inner(&self, a: usize, b: usize) -> Option<i64> {
        let sf = self.exact.as_ref()?;
        Some(
            (0..self.m)
                .map(|r| sf.signs[r * self.n + a] as i64 * sf.signs[r * self.n + b] as i64)
                .sum(),
        )
    }

    /// `n × n` Gram matrix `Φ*Φ`, row-major.
    pub fn gram(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut g = vec![Complex64::default(); n * n];
        for r in 0..self.m {
            let row = &self.entries[r * n..(r + 1) * n];
            for a in 0..n {
                let ca = row[a].conj();
                if ca == Complex64::default() {
                    continue;
                }
                for b in 0..n {
                    g[a * n + b] += ca * row[b];
                }
            }
        }
        g
    }

    /// Integer Gram matrix `SᵀS` of the sign form.
    pub fn exact_gram(&self) -> Option<Vec<i64>> {
        let sf = self.exact.as_ref()?;
        let n = self.n;
        let mut g = vec![0i64; n * n];
        for r in 0..self.m {
            let row = &sf.signs[r * n..(r + 1) * n];
            for a in 0..n {
                if row[a] == 0 {
                    continue;
                }
                for b in 0..n {
                    g[a * n + b] += (row[a] * row[b]) as i64;
                }
            }
        }
        Some(g)
    }

    /// `m × m` frame operator `ΦΦ*`, row-major.
    pub fn frame_operator(&self) -> Vec<Complex64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![Complex64::default(); m * m];
        for a in 0..m {
            for b in a..m {
                let v: Complex64 = (0..n)
                    .map(|c| self.entries[a * n + c] * self.entries[b * n + c].conj())
                    .sum();
                out[a * m + b] = v;
                out[b * m + a] = v.conj();
            }
        }
        out
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.n)
            .map(|c| (0..self.m).map(|r| self.get(r, c).norm_sqr()).sum())
            .collect()
    }

    /// First column whose norm is off by more than `tol`, with its norm.
    pub fn unit_norm_violation(&self, tol: f64) -> Option<(usize, f64)> {
        if let Some(sf) = &self.exact {
            return (0..self.n).find_map(|c| {
                let sq: i64 = (0..self.m).map(|r| (sf.signs[r * self.n + c] as i64).pow(2)).sum();
                (sq != sf.scale_sq_inv as i64)
                    .then(|| (c, (sq as f64 / sf.scale_sq_inv as f64).sqrt()))
            });
        }
        self.column_norms_sq()
            .into_iter()
            .enumerate()
            .map(|(c, sq)| (c, sq.sqrt()))
            .find(|&(_, norm)| (norm - 1.0).abs() > tol)
    }

    /// True when every entry has modulus `m^{-1/2}` within `tol`.
    pub fn is_constant_amplitude(&self, tol: f64) -> bool {
        let target = 1.0 / (self.m as f64).sqrt();
        self.entries.iter().all(|z| (z.norm() - target).abs() <= tol)
    }

    /// Recovers the sign form of a real frame whose entries are `±1/√m` or `0` within `tol`.
    pub fn detect_sign_form(&self, scale_sq_inv: u64, tol: f64) -> Option<SignForm> {
        if let Some(sf) = &self.exact {
            if sf.scale_sq_inv == scale_sq_inv {
                return Some(sf.clone());
            }
        }
        let scale = 1.0 / (scale_sq_inv as f64).sqrt();
        let signs = self
            .entries
            .iter()
            .map(|z| {
                if z.im.abs() > tol {
                    None
                } else if (z.re - scale).abs() <= tol {
                    Some(1)
                } else if (z.re + scale).abs() <= tol {
                    Some(-1)
                } else if z.re.abs() <= tol {
                    Some(0)
                } else {
                    None
                }
            })
            .collect::<Option<Vec<i8>>>()?;
        Some(SignForm {
            signs,
            scale_sq_inv,
        })
    }

    /// Copy with columns reordered: column `i` of the result is column `order[i]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> Frame {
        assert_eq!(order.len(), self.n);
        let n = self.n;
        let pick = |i: usize| (i / n, order[i % n]);
        let entries = (0..self.m * n)
            .map(|i| {
                let (r, c) = pick(i);
                self.get(r, c)
            })
            .collect();
        let exact = self.exact.as_ref().map(|sf| SignForm {
            signs: (0..self.m * n)
                .map(|i| {
                    let (r, c) = pick(i);
                    sf.signs[r * n + c]
                })
                .collect(),
            scale_sq_inv: sf.scale_sq_inv,
        });
        Frame {
            m: self.m,
            n,
            entries,
            exact,
            column_labels: self
                .column_labels
                .as_ref()
                .map(|l| order.iter().map(|&c| l[c]).collect()),
            row_labels: self.row_labels.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Copy with one entry overwritten; the sign form is dropped unless the new value keeps it exact.
    pub fn with_entry(&self, r: usize, c: usize, value: Complex64) -> Frame {
        let mut out = self.clone();
        out.entries[r * self.n + c] = value;
        out.exact = None;
        if let Some(sf) = &self.exact {
            if value == Complex64::default() {
                let mut signs = sf.signs.clone();
                signs[r * self.n + c] = 0;
                out.exact = Some(SignForm {
                    signs,
                    scale_sq_inv: sf.scale_sq_inv,
                });
            }
        }
        out
    }

    /// Left-multiplies by an `m × m` matrix (row-major).
    pub fn left_multiply(&self, a: &[Complex64], provenance: Provenance) -> Frame {
        let (m, n) = (self.m, self.n);
        assert_eq!(a.len(), m * m);
        let mut entries = vec![Complex64::default(); m * n];
        for i in 0..m {
            for k in 0..m {
                let aik = a[i * m + k];
                if aik == Complex64::default() {
                    continue;
                }
                for c in 0..n {
                    entries[i * n + c] += aik * self.entries[k * n + c];
                }
            }
        }
        Frame::from_entries(m, n, entries, provenance)
    }

    pub fn to_json(&self) -> String {
        let (entries, signs, scale_sq_inv, scale) = match &self.exact {
            Some(sf) => (
                None,
                Some(
                    sf.signs
                        .chunks(self.n.max(1))
                        .take(self.m)
                        .map(|c| c.to_vec())
                        .collect(),
                ),
                Some(sf.scale_sq_inv),
                Some(1.0 / (sf.scale_sq_inv as f64).sqrt()),
            ),
            None => (
                Some(
                    (0..self.m)
                        .map(|r| (0..self.n).map(|c| {
                            let z = self.get(r, c);
                            [z.re, z.im]
                        }).collect())
                        .collect(),
                ),
                None,
                None,
                None,
            ),
        };
        let file = FrameFile {
            m: self.m,
            n: self.n,
            scale,
            entries,
            signs,
            scale_sq_inv,
            column_labels: self.column_labels.clone(),
            row_labels: self.row_labels.clone(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string(&file).expect("frames always serialize")
    }

    pub fn from_json(text: &str) -> Result<Frame, FrameError> {
        let file: FrameFile =
            serde_json::from_str(text).map_err(|e| FrameError::Parse(e.to_string()))?;
        let (m, n) = (file.m, file.n);
        let shape_ok = |rows: usize, lens: &[usize]| rows == m && lens.iter().all(|&l| l == n);
        let mut frame = match (file.signs, file.entries) {
            (Some(signs), _) => {
                if !shape_ok(signs.len(), &signs.iter().map(Vec::len).collect::<Vec<_>>()) {
                    return Err(FrameError::Parse("signs do not match m x n".into()));
                }
                if signs.iter().flatten().any(|&s| !(-1..=1).contains(&s)) {
                    return Err(FrameError::Parse("signs must be -1, 0 or 1".into()));
                }
                let scale_sq_inv = file
                    .scale_sq_inv
                    .filter(|&s| s > 0)
                    .ok_or_else(|| FrameError::Parse("sign form needs a positive scale_sq_inv".into()))?;
                Frame::from_signs(m, n, signs.concat(), scale_sq_inv, file.provenance)
            }
            (None, Some(entries)) => {
                if !shape_ok(entries.len(), &entries.iter().map(Vec::len).collect::<Vec<_>>()) {
                    return Err(FrameError::Parse("entries do not match m x n".into()));
                }
                let flat = entries
                    .iter()
                    .flatten()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect();
                Frame::from_entries(m, n, flat, file.provenance)
            }
            (None, None) => return Err(FrameError::Parse("frame has neither entries nor signs".into())),
        };
        if let Some(l) = &file.column_labels {
            if l.len() != n {
                return Err(FrameError::Parse("column_labels length differs from n".into()));
            }
        }
        if let Some(l) = &file.row_labels {
            if l.len() != m {
                return Err(FrameError::Parse("row_labels length differs from m".into()));
            }
        }
        frame.column_labels = file.column_labels;
        frame.row_labels = file.row_labels;
        Ok(frame)
    }

    /// `+`/`-`/`0` grid for sign-form frames; one row per line, prefixed by the scale.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.exact {
            Some(sf) => {
                out.push_str(&format!("1/sqrt({}) x\n", sf.scale_sq_inv));
                for r in 0..self.m {
                    let line: String = sf.signs[r * self.n..(r + 1) * self.n]
                        .iter()
                        .map(|&s| match s {
                            1 => '+',
                            -1 => '-',
                            _ => '0',
                        })
                        .collect();
                    out.push_str(&line);
                    out.push('\n');
                }
            }
            None => {
                for r in 0..self.m {
                    let line: Vec<String> = (0..self.n)
                        .map(|c| {
                            let z = self.get(r, c);
                            format!("{:+.6}{:+.6}i", z.re, z.im)
                        })
                        .collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
            }
        }
        out
    }
}

struct ResolvedLayout {
    replication: usize,
    per_class: usize,
    /// `positions[r][v]`: index within class `r` of the block containing `v`.
    positions: Vec<Vec<usize>>,
}

fn resolved_layout(design: &SteinerSystem) -> Result<ResolvedLayout, FrameError> {
    if !design.is_resolved() {
        return Err(FrameError::NotResolvable);
    }
    let report = design.validate();
    if let Some(bad) = report.checks.iter().find(|c| !c.passed) {
        return Err(FrameError::InvalidDesign(format!(
            "{}: {}",
            bad.name,
            bad.counterexample.clone().unwrap_or_default()
        )));
    }
    let positions = design.class_positions().ok_or(FrameError::NotResolvable)?;
    Ok(ResolvedLayout {
        replication: positions.len(),
        per_class: design.v / design.k,
        positions,
    })
}

fn check_simplex_shape(simplex: &UnimodularMatrix, replication: usize) -> Result<(), FrameError> {
    if simplex.rows() != replication || simplex.cols() != replication + 1 {
        return Err(FrameError::SimplexShapeMismatch {
            rows: simplex.rows(),
            cols: simplex.cols(),
            expected_rows: replication,
        });
    }
    simplex.check_simplex()?;
    Ok(())
}

type Labels = Vec<(usize, usize)>;

fn design_labels(design: &SteinerSystem, layout: &ResolvedLayout) -> (Labels, Labels) {
    let cols = (0..design.v)
        .flat_map(|v| (0..=layout.replication).map(move |u| (u, v)))
        .collect();
    let rows = (0..layout.replication)
        .flat_map(|r| (0..layout.per_class).map(move |s| (r, s)))
        .collect();
    (cols, rows)
}

/// Steiner ETF `φ_{u,v}(r,s) = R^{-1/2} f_u(r)` when `v ∈ b_{r,s}`, zero otherwise.
pub fn steiner_etf(design: &SteinerSystem, simplex: &UnimodularMatrix) -> Result<Frame, FrameError> {
    let layout = resolved_layout(design)?;
    let big_r = layout.replication;
    check_simplex_shape(simplex, big_r)?;
    let (m, n) = (big_r * layout.per_class, design.v * (big_r + 1));
    let provenance = Provenance::Steiner {
        v: design.v,
        k: design.k,
        replication: big_r,
    };

    let support = |row: usize, col: usize| -> Option<(usize, usize)> {
        let (r, s) = (row / layout.per_class, row % layout.per_class);
        let (v, u) = (col / (big_r + 1), col % (big_r + 1));
        (layout.positions[r][v] == s).then_some((r, u))
    };

    let mut frame = if simplex.signs().is_some() {
        let signs = (0..m * n)
            .map(|i| support(i / n, i % n).map_or(0, |(r, u)| simplex.sign(r, u).unwrap()))
            .collect();
        Frame::from_signs(m, n, signs, big_r as u64, provenance)
    } else {
        let scale = 1.0 / (big_r as f64).sqrt();
        let entries = (0..m * n)
            .map(|i| support(i / n, i % n).map_or(Complex64::default(), |(r, u)| simplex.get(r, u) * scale))
            .collect();
        Frame::from_entries(m, n, entries, provenance)
    };
    let (cols, rows) = design_labels(design, &layout);
    frame.column_labels = Some(cols);
    frame.row_labels = Some(rows);
    Ok(frame)
}

/// Kirkman ETF `ψ_{u,v}(r,s) = B^{-1/2} f_u(r) h_{s(r,v)}(s)`, `h_{s'}` being column `s'` of `basis`.
pub fn kirkman_etf(
    design: &SteinerSystem,
    simplex: &UnimodularMatrix,
    basis: &UnimodularMatrix,
) -> Result<Frame, FrameError> {
    let layout = resolved_layout(design)?;
    let big_r = layout.replication;
    check_simplex_shape(simplex, big_r)?;
    if basis.rows() != layout.per_class || basis.cols() != layout.per_class {
        return Err(FrameError::BasisShapeMismatch {
            rows: basis.rows(),
            cols: basis.cols(),
            expected: layout.per_class,
        });
    }
    basis.check_orthogonal()?;
    let (m, n) = (big_r * layout.per_class, design.v * (big_r + 1));
    let provenance = Provenance::Kirkman {
        v: design.v,
        k: design.k,
        replication: big_r,
    };
    // (r, u, block of v in class r, s)
    let coords = |i: usize| {
        let (row, col) = (i / n, i % n);
        let (r, s) = (row / layout.per_class, row % layout.per_class);
        let (v, u) = (col / (big_r + 1), col % (big_r + 1));
        (r, u, layout.positions[r][v], s)
    };

    let mut frame = match (simplex.signs(), basis.signs()) {
        (Some(_), Some(_)) => {
            let signs = (0..m * n)
                .map(|i| {
                    let (r, u, sv, s) = coords(i);
                    simplex.sign(r, u).unwrap() * basis.sign(s, sv).unwrap()
                })
                .collect();
            Frame::from_signs(m, n, signs, m as u64, provenance)
        }
        _ => {
            let scale = 1.0 / (m as f64).sqrt();
            let entries = (0..m * n)
                .map(|i| {
                    let (r, u, sv, s) = coords(i);
                    simplex.get(r, u) * basis.get(s, sv) * scale
                })
                .collect();
            Frame::from_entries(m, n, entries, provenance)
        }
    };
    let (cols, rows) = design_labels(design, &layout);
    frame.column_labels = Some(cols);
    frame.row_labels = Some(rows);
    Ok(frame)
}

/// A subset of an abelian group in which every nonzero element is a difference
/// of members exactly `lambda` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceSet {
    pub group: AbelianGroup,
    pub elements: Vec<usize>,
    pub lambda: usize,
}

impl DifferenceSet {
    /// Sorts and deduplicates `elements`, then verifies the difference property exhaustively.
    pub fn new(group: AbelianGroup, mut elements: Vec<usize>) -> Result<Self, FrameError> {
        elements.sort_unstable();
        elements.dedup();
        let order = group.order();
        if let Some(&bad) = elements.iter().find(|&&e| e >= order) {
            return Err(FlatError::IndexOutOfRange { index: bad, order }.into());
        }
        let digits: Vec<Vec<usize>> = elements.iter().map(|&e| group.digits(e)).collect();
        let mut counts = vec![0usize; order];
        for a in &digits {
            for b in &digits {
                let diff: Vec<usize> = a
                    .iter()
                    .zip(b)
                    .zip(group.factors())
                    .map(|((&x, &y), &f)| (x + f - y) % f)
                    .collect();
                counts[group.index(&diff)] += 1;
            }
        }
        let lambda = counts.get(1).copied().unwrap_or(0);
        if let Some((g, &c)) = counts.iter().enumerate().skip(1).find(|&(_, &c)| c != lambda) {
            return Err(FrameError::NotADifferenceSet {
                element: g,
                count: c,
                expected: lambda,
            });
        }
        Ok(Self {
            group,
            elements,
            lambda,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn complement(&self) -> Result<DifferenceSet, FrameError> {
        let rest = (0..self.group.order())
            .filter(|g| self.elements.binary_search(g).is_err())
            .collect();
        DifferenceSet::new(self.group.clone(), rest)
    }
}

/// The McFarland construction over `G × GF(q^{j+1})`: the geometry it is built from
/// and the group and set it produces.
#[derive(Debug, Clone)]
pub struct McFarland {
    pub geometry: AffineGeometry,
    pub g: AbelianGroup,
    /// `G × V`, with the field's additive group as the less significant factors.
    pub group: AbelianGroup,
}

impl McFarland {
    pub fn new(q: u64, j: u32, g: AbelianGroup) -> Result<Self, FrameError> {
        let geometry = AffineGeometry::new(q, j)?;
        let expected = geometry.num_classes() + 1;
        if g.order() != expected {
            return Err(FrameError::GroupOrderMismatch {
                expected,
                actual: g.order(),
            });
        }
        let f = &geometry.field;
        let v_group = AbelianGroup::elementary_abelian(f.characteristic() as usize, f.degree() as usize);
        let group = g.product(&v_group);
        Ok(Self { geometry, g, group })
    }

    /// Index in `G × V` of `(g_r, v)`.
    pub fn element(&self, r: usize, v: usize) -> usize {
        r * self.geometry.field.order() + v
    }

    /// `{(g_r, v) : v ∈ γ^r S, r < R}`, listed r-major with `s` in hyperplane order.
    pub fn raw_elements(&self) -> Vec<usize> {
        let f = &self.geometry.field;
        (0..self.geometry.num_classes())
            .flat_map(|r| {
                self.geometry
                    .hyperplane
                    .iter()
                    .map(move |&s| self.element(r, f.mul(f.primitive_pow(r as i64), s).index()))
            })
            .collect()
    }

    pub fn difference_set(&self) -> Result<DifferenceSet, FrameError> {
        DifferenceSet::new(self.group.clone(), self.raw_elements())
    }
}

/// The default `G` for a McFarland set: `Z_2^{j+1}` when `q = 2` (giving real frames), else cyclic.
pub fn default_mcfarland_group(q: u64, j: u32) -> AbelianGroup {
    if q == 2 {
        AbelianGroup::elementary_abelian(2, j as usize + 1)
    } else {
        let r = (q.pow(j + 1) - 1) / (q - 1);
        AbelianGroup::cyclic(r as usize + 1)
    }
}

pub fn mcfarland_set(q: u64, j: u32, g: &AbelianGroup) -> Result<DifferenceSet, FrameError> {
    McFarland::new(q, j, g.clone())?.difference_set()
}

/// Characters of `group` restricted to `dset`: entry `(d, n) = |D|^{-1/2} χ_n(d)`.
pub fn harmonic_etf(group: &AbelianGroup, dset: &DifferenceSet) -> Result<Frame, FrameError> {
    if &dset.group != group {
        return Err(FrameError::GroupMismatch);
    }
    let (m, n) = (dset.len(), group.order());
    let provenance = Provenance::Harmonic {
        group: group.factors().to_vec(),
        set_size: m,
    };
    let exponent = group.exponent();
    let mut frame = if exponent <= 2 {
        let signs = (0..m * n)
            .map(|i| {
                if group.character_phase(i % n, dset.elements[i / n]) == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Frame::from_signs(m, n, signs, m as u64, provenance)
    } else {
        let scale = 1.0 / (m as f64).sqrt();
        let entries = (0..m * n)
            .map(|i| group.character(i % n, dset.elements[i / n]) * scale)
            .collect();
        Frame::from_entries(m, n, entries, provenance)
    };
    frame.row_labels = Some(dset.elements.iter().map(|&d| (d, 0)).collect());
    Ok(frame)
}

fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

fn frame_from_phases(m: usize, n: usize, phases: Vec<u64>, period: u64, provenance: Provenance) -> Frame {
    if period <= 2 {
        let signs = phases.iter().map(|&k| if k % period == 0 { 1 } else { -1 }).collect();
        Frame::from_signs(m, n, signs, m as u64, provenance)
    } else {
        let scale = 1.0 / (m as f64).sqrt();
        let entries = phases.iter().map(|&k| root_of_unity(k, period) * scale).collect();
        Frame::from_entries(m, n, entries, provenance)
    }
}

/// The two routes to the McFarland ETF and how closely they agree.
#[derive(Debug, Clone)]
pub struct McFarlandComparison {
    /// Restricted characters `D^{-1/2} χ_u(g_r) e_v(γ^r s)`, rows `(r,s)`, columns `(u,v)`.
    pub harmonic: Frame,
    /// Kirkman ETF over the labelled affine geometry.
    pub kirkman: Frame,
    pub entrywise: MatchReport,
}

impl McFarland {
    /// Additive-character basis `h_{s'}(s) = exp(2πi/p · tr(s' s δ^{-1}))`, entry `(s, s')`.
    pub fn trace_basis(&self) -> UnimodularMatrix {
        let ag = &self.geometry;
        let f = &ag.field;
        let delta_inv = f.inv(ag.delta).expect("δ is nonzero");
        let big_s = ag.hyperplane.len();
        let phases: Vec<u64> = (0..big_s * big_s)
            .map(|i| {
                let (s, s_prime) = (ag.hyperplane[i / big_s], ag.hyperplane[i % big_s]);
                f.absolute_trace(f.mul(f.mul(s_prime, s), delta_inv)) as u64
            })
            .collect();
        UnimodularMatrix::from_phases(big_s, big_s, &phases, f.characteristic() as u64, MatrixKind::CharacterTable)
    }

    /// `f_u(r) = χ_u(g_r)` for `r < R`, i.e. the character table with `g_R` deleted.
    pub fn character_simplex(&self) -> Result<UnimodularMatrix, FlatError> {
        simplex_from_characters(&self.g, self.g.order() - 1)
    }

    pub fn harmonic_frame(&self) -> Frame {
        let ag = &self.geometry;
        let f = &ag.field;
        let p = f.characteristic() as u64;
        let g_exp = self.g.exponent() as u64;
        let period = lcm(g_exp, p);
        let (big_r, big_s) = (ag.num_classes(), ag.hyperplane.len());
        let (m, n) = (big_r * big_s, f.order() * (big_r + 1));
        let mut phases = Vec::with_capacity(m * n);
        for r in 0..big_r {
            let gamma_r = f.primitive_pow(r as i64);
            for &s in &ag.hyperplane {
                let d = f.mul(gamma_r, s);
                for v in f.elements() {
                    let tr = f.absolute_trace(f.mul(v, d)) as u64;
                    for u in 0..=big_r {
                        let chi = self.g.character_phase(u, r);
                        phases.push((chi * (period / g_exp) + tr * (period / p)) % period);
                    }
                }
            }
        }
        let mut frame = frame_from_phases(
            m,
            n,
            phases,
            period,
            Provenance::McfarlandHarmonic {
                q: ag.q,
                j: ag.j,
                group: self.g.factors().to_vec(),
            },
        );
        frame.row_labels = Some((0..big_r).flat_map(|r| (0..big_s).map(move |s| (r, s))).collect());
        frame.column_labels = Some(
            (0..f.order())
                .flat_map(|v| (0..=big_r).map(move |u| (u, v)))
                .collect(),
        );
        frame
    }

    pub fn kirkman_frame(&self) -> Result<Frame, FrameError> {
        kirkman_etf(
            &self.geometry.labelled_design(),
            &self.character_simplex()?,
            &self.trace_basis(),
        )
    }
}

/// Builds the McFarland harmonic ETF and the affine Kirkman ETF it should equal, and compares them entrywise.
pub fn mcfarland_as_kirkman(q: u64, j: u32, g: &AbelianGroup, tol: f64) -> Result<McFarlandComparison, FrameError> {
    let mc = McFarland::new(q, j, g.clone())?;
    let harmonic = mc.harmonic_frame();
    let kirkman = mc.kirkman_frame()?;
    let entrywise = entries_equal(&harmonic, &kirkman, tol);
    Ok(McFarlandComparison {
        harmonic,
        kirkman,
        entrywise,
    })
}

/// Naimark complement: an `(n-m) × n` frame whose rows complete those of `√(m/n) Φ`
/// to an orthonormal system, rescaled to unit-norm columns.
pub fn naimark_complement(frame: &Frame, require_tight: bool) -> Result<Frame, FrameError> {
    let (m, n) = (frame.m(), frame.n());
    let residual = crate::metrics::tightness_residual(frame);
    if require_tight && residual > UNIT_NORM_TOL {
        return Err(FrameError::NotTight(residual));
    }
    let provenance = Provenance::Naimark {
        source: Box::new(frame.provenance.clone()),
    };
    if n <= m {
        return Ok(Frame::from_entries(0, n, Vec::new(), provenance));
    }
    let c = m as f64 / n as f64;
    // projection onto the complement of the row space: I - c Σ_a conj(φ_a) φ_aᵀ, taken column-wise
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n - m);
    for j in 0..n {
        if basis.len() == n - m {
            break;
        }
        let mut col: Vec<Complex64> = (0..n)
            .map(|i| {
                let proj: Complex64 = (0..m).map(|a| frame.get(a, i) * frame.get(a, j).conj()).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                Complex64::new(id, 0.0) - proj * c
            })
            .collect();
        for _ in 0..2 {
            for q in &basis {
                let coeff: Complex64 = col.iter().zip(q).map(|(x, y)| x * y.conj()).sum();
                for (x, y) in col.iter_mut().zip(q) {
                    *x -= coeff * y;
                }
            }
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(col.into_iter().map(|z| z / norm).collect());
        }
    }
    let k = basis.len();
    let scale = (n as f64 / k as f64).sqrt();
    let entries = basis.into_iter().flatten().map(|z| z * scale).collect();
    Ok(Frame::from_entries(k, n, entries, provenance))
}

/// Parameters of the real Kirkman ETF family for `K ≡ 2 (mod 4)`, `W ≡ 3 (mod 4)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealKirkmanReport {
    pub k: u64,
    pub w: u64,
    pub k_congruence: bool,
    pub w_congruence: bool,
    pub v: u64,
    pub m: u64,
    pub n: u64,
    /// `R + 1 = WK + 2`.
    pub simplex_hadamard_order: u64,
    /// `V/K = W(K-1) + 1`.
    pub basis_hadamard_order: u64,
    pub simplex_hadamard_constructible: bool,
    pub basis_hadamard_constructible: bool,
    /// A resolvable design generator exists here (round-robin, `K = 2`).
    pub design_available: bool,
    pub buildable: bool,
}

pub fn real_kirkman_params(k: u64, w: u64) -> RealKirkmanReport {
    let basis_order = w * (k.saturating_sub(1)) + 1;
    let v = k * basis_order;
    let simplex_order = w * k + 2;
    let simplex_ok = hadamard_constructible_u64(simplex_order);
    let basis_ok = hadamard_constructible_u64(basis_order);
    let design_available = k == 2;
    RealKirkmanReport {
        k,
        w,
        k_congruence: k % 4 == 2,
        w_congruence: w % 4 == 3,
        v,
        m: (w * k + 1) * basis_order,
        n: k * simplex_order * basis_order,
        simplex_hadamard_order: simplex_order,
        basis_hadamard_order: basis_order,
        simplex_hadamard_constructible: simplex_ok,
        basis_hadamard_constructible: basis_ok,
        design_available,
        buildable: simplex_ok && basis_ok && design_available,
    }
}

fn hadamard_constructible_u64(n: u64) -> bool {
    usize::try_from(n).is_ok_and(crate::flatmat::hadamard_constructible)
}

/// Real Kirkman ETF from the round-robin design on `2W + 2` points with Hadamard simplex and basis.
pub fn real_kirkman_k2(w: u64) -> Result<Frame, FrameError> {
    let v = (2 * w + 2) as usize;
    let design = crate::designs::round_robin_design(v)?;
    let simplex = drop_row_simplex(&hadamard(v)?, 0)?;
    let basis = hadamard(v / 2)?;
    kirkman_etf(&design, &simplex, &basis)
}

/// Confirms every column of `frame` is unit norm within tolerance; used by constructors' tests.
pub fn has_unit_columns(frame: &Frame) -> bool {
    frame.unit_norm_violation(UNIT_NORM_TOL).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{affine_design, round_robin_design};
    use crate::flatmat::dft;

    fn parse_signs(rows: &[&str]) -> Vec<i8> {
        rows.iter()
            .flat_map(|r| {
                r.chars().map(|c| match c {
                    '+' => 1,
                    '-' => -1,
                    _ => 0,
                })
            })
            .collect()
    }

    const FIG1: [&str; 6] = [
        "+-+-+-+-00000000",
        "00000000+-+-+-+-",
        "++--0000++--0000",
        "0000++--0000++--",
        "+--+00000000+--+",
        "0000+--++--+0000",
    ];

    const FIG2: [&str; 6] = [
        "+-+-+-+-+-+-+-+-",
        "+-+-+-+--+-+-+-+",
        "++--++--++--++--",
        "++----++++----++",
        "+--++--++--++--+",
        "+--+-++--++-+--+",
    ];

    fn h4_simplex() -> UnimodularMatrix {
        drop_row_simplex(&hadamard(4).unwrap(), 0).unwrap()
    }

    #[test]
    fn steiner_frame_matches_hand_entered_six_by_sixteen() {
        let design = round_robin_design(4).unwrap();
        let frame = steiner_etf(&design, &h4_simplex()).unwrap();
        let sf = frame.sign_form().unwrap();
        assert_eq!(sf.scale_sq_inv, 3);
        assert_eq!(sf.signs, parse_signs(&FIG1));
        let affine = steiner_etf(&affine_design(2, 1).unwrap(), &h4_simplex()).unwrap();
        assert_eq!(affine.sign_form(), frame.sign_form());
    }

    #[test]
    fn kirkman_frame_matches_hand_entered_and_block_product() {
        let design = round_robin_design(4).unwrap();
        let phi = steiner_etf(&design, &h4_simplex()).unwrap();
        let psi = kirkman_etf(&design, &h4_simplex(), &hadamard(2).unwrap()).unwrap();
        let sf = psi.sign_form().unwrap();
        assert_eq!(sf.scale_sq_inv, 6);
        assert_eq!(sf.signs, parse_signs(&FIG2));

        // blockdiag(H2/√2) · Φ
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut block = vec![Complex64::default(); 36];
        for b in 0..3 {
            for (i, j, s) in [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)] {
                block[(2 * b + i) * 6 + 2 * b + j] = Complex64::new(s * h, 0.0);
            }
        }
        let product = phi.left_multiply(&block, Provenance::Unspecified);
        for (x, y) in product.entries().iter().zip(psi.entries()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn steiner_columns_group_by_point() {
        let frame = steiner_etf(&round_robin_design(4).unwrap(), &h4_simplex()).unwrap();
        let labels = frame.column_labels.as_ref().unwrap();
        assert_eq!(labels[0], (0, 0));
        assert_eq!(labels[5], (1, 1));
        assert!(has_unit_columns(&frame));
    }

    #[test]
    fn shape_errors() {
        let design = round_robin_design(4).unwrap();
        assert!(matches!(
            steiner_etf(&design, &drop_row_simplex(&dft(5), 0).unwrap()),
            Err(FrameError::SimplexShapeMismatch { .. })
        ));
        assert!(matches!(
            kirkman_etf(&design, &h4_simplex(), &hadamard(4).unwrap()),
            Err(FrameError::BasisShapeMismatch { expected: 2, .. })
        ));
        let mut unresolved = design.clone();
        unresolved.resolution = None;
        assert!(matches!(steiner_etf(&unresolved, &h4_simplex()), Err(FrameError::NotResolvable)));
    }

    #[test]
    fn complex_steiner_frame_from_dft_simplex() {
        let design = affine_design(3, 1).unwrap();
        let simplex = drop_row_simplex(&dft(5), 0).unwrap();
        let frame = steiner_etf(&design, &simplex).unwrap();
        assert_eq!((frame.m(), frame.n()), (12, 45));
        assert!(frame.sign_form().is_none());
        assert!(has_unit_columns(&frame));
    }

    #[test]
    fn mcfarland_small_cases() {
        let ds = mcfarland_set(2, 1, &default_mcfarland_group(2, 1)).unwrap();
        assert_eq!((ds.group.order(), ds.len(), ds.lambda), (16, 6, 2));
        let ds = mcfarland_set(3, 1, &default_mcfarland_group(3, 1)).unwrap();
        assert_eq!((ds.group.order(), ds.len(), ds.lambda), (45, 12, 3));
        assert!(matches!(
            mcfarland_set(2, 1, &AbelianGroup::cyclic(3)),
            Err(FrameError::GroupOrderMismatch { expected: 4, actual: 3 })
        ));
    }

    #[test]
    fn non_difference_set_is_rejected() {
        let err = DifferenceSet::new(AbelianGroup::cyclic(7), vec![0, 1, 2]).unwrap_err();
        assert!(matches!(err, FrameError::NotADifferenceSet { .. }));
        let fano = DifferenceSet::new(AbelianGroup::cyclic(7), vec![4, 2, 1]).unwrap();
        assert_eq!(fano.lambda, 1);
        assert_eq!(fano.complement().unwrap().lambda, 2);
    }

    #[test]
    fn mcfarland_harmonic_equals_kirkman() {
        for (q, j) in [(2, 1), (3, 1), (2, 2), (4, 1)] {
            let cmp = mcfarland_as_kirkman(q, j, &default_mcfarland_group(q, j), 1e-9).unwrap();
            assert!(cmp.entrywise.passed, "q={q} j={j}: {:?}", cmp.entrywise);
        }
    }

    #[test]
    fn harmonic_rows_are_the_mcfarland_set() {
        let mc = McFarland::new(2, 1, default_mcfarland_group(2, 1)).unwrap();
        let ds = mc.difference_set().unwrap();
        let frame = harmonic_etf(&mc.group, &ds).unwrap();
        assert_eq!((frame.m(), frame.n()), (6, 16));
        assert_eq!(frame.sign_form().unwrap().scale_sq_inv, 6);
        let other = AbelianGroup::cyclic(16);
        assert!(matches!(harmonic_etf(&other, &ds), Err(FrameError::GroupMismatch)));
    }

    #[test]
    fn naimark_complement_is_orthogonal_completion() {
        let psi = kirkman_etf(&round_robin_design(4).unwrap(), &h4_simplex(), &hadamard(2).unwrap()).unwrap();
        let comp = naimark_complement(&psi, true).unwrap();
        assert_eq!((comp.m(), comp.n()), (10, 16));
        assert!(has_unit_columns(&comp));
        // rows of √(6/16)Ψ and √(10/16)Ψ' are jointly orthonormal
        let (a, b) = ((6.0f64 / 16.0).sqrt(), (10.0f64 / 16.0).sqrt());
        for i in 0..6 {
            for k in 0..10 {
                let dot: Complex64 = (0..16).map(|c| psi.get(i, c) * a * (comp.get(k, c) * b).conj()).sum();
                assert!(dot.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn naimark_rejects_non_tight_and_empties_bases() {
        let frame = Frame::from_signs(2, 3, vec![1, 0, 1, 0, 1, 0], 1, Provenance::Unspecified);
        assert!(matches!(naimark_complement(&frame, true), Err(FrameError::NotTight(_))));
        let basis = Frame::from_signs(2, 2, vec![1, 0, 0, 1], 1, Provenance::Unspecified);
        assert_eq!(naimark_complement(&basis, true).unwrap().m(), 0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let psi = kirkman_etf(&round_robin_design(4).unwrap(), &h4_simplex(), &hadamard(2).unwrap()).unwrap();
        let text = psi.to_json();
        assert_eq!(Frame::from_json(&text).unwrap(), psi);
        let cplx = steiner_etf(&affine_design(3, 1).unwrap(), &drop_row_simplex(&dft(5), 0).unwrap()).unwrap();
        let back = Frame::from_json(&cplx.to_json()).unwrap();
        assert_eq!(back.entries(), cplx.entries());
        assert!(Frame::from_json(r#"{"m":2,"n":1,"scale":null,"entries":[[[1,0]]]}"#).is_err());
    }

    #[test]
    fn real_kirkman_parameters() {
        let r = real_kirkman_params(2, 3);
        assert_eq!((r.v, r.m, r.n), (8, 28, 64));
        assert!(r.buildable && r.k_congruence && r.w_congruence);
        let r = real_kirkman_params(2, 11);
        assert_eq!((r.m, r.n), (276, 576));
        assert!(r.simplex_hadamard_constructible && r.basis_hadamard_constructible);
        assert!(!real_kirkman_params(2, 1).w_congruence);
        let frame = real_kirkman_k2(3).unwrap();
        assert_eq!((frame.m(), frame.n()), (28, 64));
        assert!(frame.is_constant_amplitude(1e-12));
    }
}
