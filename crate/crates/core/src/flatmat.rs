//! Unimodular ("flat") matrices: DFT and Hadamard bases, regular simplices
//! obtained by deleting a row, and character tables of finite abelian groups.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{prime_power, FiniteField};

pub const MODULUS_TOL: f64 = 1e-12;
pub const ORTHO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlatError {
    #[error("no Hadamard matrix of order {0} exists (order must be 1, 2 or a multiple of 4)")]
    InadmissibleHadamardOrder(usize),
    #[error("Hadamard order {0} is not reachable by Sylvester doubling of a Paley-I matrix")]
    UnsupportedHadamardOrder(usize),
    #[error("row {row} out of range for a matrix with {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("group element {index} out of range for a group of order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("matrix is not a unimodular orthogonal basis: {0}")]
    NotOrthogonal(String),
    #[error("matrix is not a unimodular regular simplex: {0}")]
    NotSimplex(String),
    #[error("cyclic factor orders must be positive")]
    EmptyFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Dft,
    Hadamard,
    Simplex,
    CharacterTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnimodularMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
    kind: MatrixKind,
    /// Exact ±1 view, present whenever every entry is real.
    signs: Option<Vec<i8>>,
}

/// `exp(2πi k / n)`, exact at quarter turns.
pub fn root_of_unity(k: u64, n: u64) -> Complex64 {
    let k = k % n;
    if k == 0 {
        Complex64::new(1.0, 0.0)
    } else if 2 * k == n {
        Complex64::new(-1.0, 0.0)
    } else if 4 * k == n {
        Complex64::new(0.0, 1.0)
    } else if 4 * k == 3 * n {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)
    }
}

fn sign_of(z: Complex64) -> Option<i8> {
    if z.im != 0.0 {
        None
    } else if z.re == 1.0 {
        Some(1)
    } else if z.re == -1.0 {
        Some(-1)
    } else {
        None
    }
}

impl UnimodularMatrix {
    fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>, kind: MatrixKind) -> Self {
        let signs = entries.iter().map(|&z| sign_of(z)).collect();
        Self {
            rows,
            cols,
            entries,
            kind,
            signs,
        }
    }

    fn from_signs(rows: usize, cols: usize, signs: Vec<i8>, kind: MatrixKind) -> Self {
        let entries = signs.iter().map(|&s| Complex64::new(s as f64, 0.0)).collect();
        Self {
            rows,
            cols,
            entries,
            kind,
            signs: Some(signs),
        }
    }

    /// Entry `(r, c)` is `exp(2πi phases[r·cols + c] / n)`.
    pub fn from_phases(rows: usize, cols: usize, phases: &[u64], n: u64, kind: MatrixKind) -> Self {
        assert_eq!(phases.len(), rows * cols);
        Self::from_entries(rows, cols, phases.iter().map(|&k| root_of_unity(k, n)).collect(), kind)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn signs(&self) -> Option<&[i8]> {
        self.signs.as_deref()
    }

    pub fn sign(&self, r: usize, c: usize) -> Option<i8> {
        self.signs.as_ref().map(|s| s[r * self.cols + c])
    }

    pub fn is_real(&self) -> bool {
        self.signs.is_some()
    }

    pub fn column_inner(&self, a: usize, b: usize) -> Complex64 {
        (0..self.rows).map(|r| self.get(r, a) * self.get(r, b).conj()).sum()
    }

    fn check_unimodular(&self) -> Result<(), String> {
        match self
            .entries
            .iter()
            .position(|z| (z.norm() - 1.0).abs() > MODULUS_TOL)
        {
            Some(i) => Err(format!(
                "entry ({}, {}) has modulus {}",
                i / self.cols,
                i % self.cols,
                self.entries[i].norm()
            )),
            None => Ok(()),
        }
    }

    /// Square, unimodular, pairwise orthogonal columns.
    pub fn check_orthogonal(&self) -> Result<(), FlatError> {
        if self.rows != self.cols {
            return Err(FlatError::NotOrthogonal(format!(
                "shape {}x{} is not square",
                self.rows, self.cols
            )));
        }
        self.check_unimodular().map_err(FlatError::NotOrthogonal)?;
        for a in 0..self.cols {
            for b in a + 1..self.cols {
                let ip = self.column_inner(a, b);
                if ip.norm() > ORTHO_TOL {
                    return Err(FlatError::NotOrthogonal(format!(
                        "columns {a} and {b} have inner product of modulus {}",
                        ip.norm()
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(n-1) × n`, unimodular, distinct columns with inner products of modulus one.
    pub fn check_simplex(&self) -> Result<(), FlatError> {
        if self.cols != self.rows + 1 {
            return Err(FlatError::NotSimplex(format!(
                "shape {}x{} is not (n-1) x n",
                self.rows, self.cols
            )));
        }
        self.check_unimodular().map_err(FlatError::NotSimplex)?;
        for a in 0..self.cols {
            for b in a + 1..self.cols {
                let ip = self.column_inner(a, b);
                if (ip.norm() - 1.0).abs() > ORTHO_TOL {
                    return Err(FlatError::NotSimplex(format!(
                        "columns {a} and {b} have inner product of modulus {}",
                        ip.norm()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact `HᵀH = nI` for sign matrices.
    pub fn is_exact_hadamard(&self) -> bool {
        let Some(s) = &self.signs else {
            return false;
        };
        if self.rows != self.cols {
            return false;
        }
        let n = self.rows;
        (0..n).all(|a| {
            (a..n).all(|b| {
                let dot: i64 = (0..n).map(|r| (s[r * n + a] * s[r * n + b]) as i64).sum();
                dot == if a == b { n as i64 } else { 0 }
            })
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &UnimodularMatrix, kind: MatrixKind) -> UnimodularMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        if let (Some(a), Some(b)) = (&self.signs, &other.signs) {
            let mut out = vec![0i8; rows * cols];
            for (i, slot) in out.iter_mut().enumerate() {
                let (r, c) = (i / cols, i % cols);
                *slot = a[(r / other.rows) * self.cols + c / other.cols]
                    * b[(r % other.rows) * other.cols + c % other.cols];
            }
            return Self::from_signs(rows, cols, out, kind);
        }
        let mut out = vec![Complex64::default(); rows * cols];
        for (i, slot) in out.iter_mut().enumerate() {
            let (r, c) = (i / cols, i % cols);
            *slot = self.get(r / other.rows, c / other.cols) * other.get(r % other.rows, c % other.cols);
        }
        Self::from_entries(rows, cols, out, kind)
    }

    /// Text grid in the `+`/`-` notation for sign matrices, complex pairs otherwise.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|c| match self.sign(r, c) {
                    Some(1) => "+".to_string(),
                    Some(_) => "-".to_string(),
                    None => {
                        let z = self.get(r, c);
                        format!("({:.6},{:.6})", z.re, z.im)
                    }
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn dft(n: usize) -> UnimodularMatrix {
    let entries = (0..n * n)
        .map(|i| root_of_unity(((i / n) * (i % n)) as u64, n as u64))
        .collect();
    UnimodularMatrix::from_entries(n, n, entries, MatrixKind::Dft)
}

fn sylvester(n: usize) -> UnimodularMatrix {
    debug_assert!(n.is_power_of_two());
    let signs = (0..n * n)
        .map(|i| {
            if ((i / n) & (i % n)).count_ones() % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect();
    UnimodularMatrix::from_signs(n, n, signs, MatrixKind::Hadamard)
}

/// Paley type I matrix of order `q + 1` for a prime power `q ≡ 3 (mod 4)`.
fn paley_one(q: u64) -> UnimodularMatrix {
    let field = FiniteField::of_order(q).expect("caller checked q is a prime power");
    let chi = |x: usize| -> i8 {
        let e = field.element(x);
        match field.log(e) {
            None => 0,
            Some(l) if l % 2 == 0 => 1,
            Some(_) => -1,
        }
    };
    let n = q as usize + 1;
    let mut s = vec![0i8; n * n];
    for c in 1..n {
        s[c] = 1;
        s[c * n] = -1;
    }
    for a in 0..n - 1 {
        for b in 0..n - 1 {
            let diff = field.sub(field.element(a), field.element(b));
            s[(a + 1) * n + b + 1] = chi(diff.index());
        }
    }
    for d in 0..n {
        s[d * n + d] += 1;
    }
    UnimodularMatrix::from_signs(n, n, s, MatrixKind::Hadamard)
}

fn paley_order(m: usize) -> Option<u64> {
    let q = m.checked_sub(1)? as u64;
    (m >= 4 && q % 4 == 3 && prime_power(q).is_some()).then_some(q)
}

/// How `hadamard(n)` would build its matrix: `(2^a, q)` means Sylvester(2^a) ⊗ Paley(q+1).
fn hadamard_plan(n: usize) -> Result<(usize, Option<u64>), FlatError> {
    if n == 0 || (n > 2 && n % 4 != 0) {
        return Err(FlatError::InadmissibleHadamardOrder(n));
    }
    if n.is_power_of_two() {
        return Ok((n, None));
    }
    let mut two = 1;
    while n % two == 0 {
        if let Some(q) = paley_order(n / two) {
            return Ok((two, Some(q)));
        }
        two *= 2;
    }
    Err(FlatError::UnsupportedHadamardOrder(n))
}

pub fn hadamard_constructible(n: usize) -> bool {
    hadamard_plan(n).is_ok()
}

/// Hadamard matrix from Sylvester doubling and Paley-I, `Sylvester(2^a) ⊗ Paley(q+1)`.
pub fn hadamard(n: usize) -> Result<UnimodularMatrix, FlatError> {
    let (two, paley) = hadamard_plan(n)?;
    let syl = sylvester(two);
    Ok(match paley {
        None => syl,
        Some(q) => syl.kron(&paley_one(q), MatrixKind::Hadamard),
    })
}

/// Deletes one row of an orthogonal basis, leaving an `(n-1) × n` regular simplex.
pub fn drop_row_simplex(basis: &UnimodularMatrix, row: usize) -> Result<UnimodularMatrix, FlatError> {
    basis.check_orthogonal()?;
    if row >= basis.rows {
        return Err(FlatError::RowOutOfRange {
            row,
            rows: basis.rows,
        });
    }
    let n = basis.cols;
    let entries: Vec<Complex64> = (0..basis.rows)
        .filter(|&r| r != row)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| basis.get(r, c))
        .collect();
    Ok(UnimodularMatrix::from_entries(basis.rows - 1, n, entries, MatrixKind::Simplex))
}

/// `Z_{n_1} × … × Z_{n_t}`, elements enumerated lexicographically by digit
/// vectors with the first factor most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianGroup {
    factors: Vec<usize>,
}

impl AbelianGroup {
    pub fn new(factors: Vec<usize>) -> Result<Self, FlatError> {
        if factors.contains(&0) {
            return Err(FlatError::EmptyFactor);
        }
        Ok(Self { factors })
    }

    pub fn cyclic(n: usize) -> Self {
        Self::new(vec![n]).expect("positive order")
    }

    pub fn elementary_abelian(p: usize, rank: usize) -> Self {
        Self::new(vec![p; rank]).expect("positive order")
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.iter().product()
    }

    /// Direct product, `self` digits more significant.
    pub fn product(&self, other: &AbelianGroup) -> AbelianGroup {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        AbelianGroup { factors }
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, &n) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % n;
            index /= n;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&d, &n)| acc * n + d % n)
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (da, db) = (self.digits(a), self.digits(b));
        let sum: Vec<usize> = da
            .iter()
            .zip(&db)
            .zip(&self.factors)
            .map(|((&x, &y), &n)| (x + y) % n)
            .collect();
        self.index(&sum)
    }

    pub fn neg(&self, a: usize) -> usize {
        let d: Vec<usize> = self
            .digits(a)
            .iter()
            .zip(&self.factors)
            .map(|(&x, &n)| (n - x) % n)
            .collect();
        self.index(&d)
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// Least common multiple of the factor orders.
    pub fn exponent(&self) -> usize {
        self.factors.iter().fold(1, |acc, &n| acc / gcd(acc, n) * n)
    }

    /// `χ_u(g)` as a phase `k` with `χ_u(g) = exp(2πi k / exponent)`.
    pub fn character_phase(&self, u: usize, g: usize) -> u64 {
        let e = self.exponent();
        let (du, dg) = (self.digits(u), self.digits(g));
        let phase: usize = du
            .iter()
            .zip(&dg)
            .zip(&self.factors)
            .map(|((&a, &b), &n)| (a * b % n) * (e / n))
            .sum();
        (phase % e) as u64
    }

    pub fn character(&self, u: usize, g: usize) -> Complex64 {
        root_of_unity(self.character_phase(u, g), self.exponent() as u64)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `|G| × |G|` table with entry `(u, r) = χ_u(g_r)`.
pub fn character_table(g: &AbelianGroup) -> UnimodularMatrix {
    let n = g.order();
    let entries = (0..n * n).map(|i| g.character(i / n, i % n)).collect();
    UnimodularMatrix::from_entries(n, n, entries, MatrixKind::CharacterTable)
}

/// Restricts every character to all group elements but `dropped`:
/// row `r` runs over the remaining elements in order, column `u` over characters.
pub fn simplex_from_characters(g: &AbelianGroup, dropped: usize) -> Result<UnimodularMatrix, FlatError> {
    let n = g.order();
    if dropped >= n {
        return Err(FlatError::IndexOutOfRange {
            index: dropped,
            order: n,
        });
    }
    let entries: Vec<Complex64> = (0..n)
        .filter(|&r| r != dropped)
        .flat_map(|r| (0..n).map(move |u| g.character(u, r)))
        .collect();
    Ok(UnimodularMatrix::from_entries(n - 1, n, entries, MatrixKind::Simplex))
}
