//! Finite fields GF(p^k) in polynomial-basis representation.
//!
//! Elements are identified by their canonical index: the coefficient vector
//! `c_0 + c_1 x + ... + c_{k-1} x^{k-1}` read as the base-p integer
//! `c_0 + c_1 p + ... + c_{k-1} p^{k-1}`. Every construction downstream uses
//! this index as its point ordering.
//!
//! The modulus is the monic irreducible polynomial of degree `k` with the
//! smallest index (non-leading coefficients read the same way), and the
//! primitive element is the smallest-index generator of the multiplicative
//! group, so two calls to [`FiniteField::new`] always agree.

use thiserror::Error;

/// Largest field order accepted by [`FiniteField::new`].
pub const MAX_FIELD_ORDER: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("characteristic {0} is not prime")]
    NonPrimeCharacteristic(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{k} exceeds the limit of 2^20")]
    SizeLimitExceeded { p: u64, k: u32 },
    #[error("{sub} does not divide the extension degree {k}")]
    NotADivisor { sub: u32, k: u32 },
    #[error("{q} is not the order of a subfield of GF({p}^{k})")]
    NotASubfield { q: u64, p: u32, k: u32 },
    #[error("{0} is not a prime power")]
    NotAPrimePower(u64),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q = p^d` into `(p, d)` when `q` is a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while q % p != 0 {
        p += 1;
    }
    let mut rest = q;
    let mut d = 0;
    while rest % p == 0 {
        rest /= p;
        d += 1;
    }
    (rest == 1).then_some((p, d))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// An element of a [`FiniteField`], stored as its canonical index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// GF(p^k) with precomputed exponent/logarithm tables for the primitive element.
#[derive(Debug, Clone)]
pub struct FiniteField {
    p: u32,
    k: u32,
    order: u32,
    modulus: Vec<u32>,
    primitive: FieldElement,
    exp: Vec<u32>,
    log: Vec<u32>,
}

// Dense polynomial helpers over Z_p, coefficients low-to-high.

fn digits(mut index: u32, p: u32, k: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        out.push(index % p);
        index /= p;
    }
    out
}

fn undigits(coeffs: &[u32], p: u32) -> u32 {
    coeffs.iter().rev().fold(0, |acc, &c| acc * p + c)
}

fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn inv_mod_p(a: u32, p: u32) -> u32 {
    // p is tiny; Fermat is fine.
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    result as u32
}

/// Remainder of `a` modulo a nonzero `b`.
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let b = trim(b.to_vec());
    let mut r = trim(a.to_vec());
    let lead_inv = inv_mod_p(*b.last().expect("nonzero divisor"), p);
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let factor = r.last().unwrap() * lead_inv % p;
        for (i, &bc) in b.iter().enumerate() {
            let sub = bc * factor % p;
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        r = trim(r);
    }
    r
}

fn poly_mul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u32; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&prod, modulus, p)
}

/// Trial division by every monic polynomial of degree 1..=deg/2.
fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let deg = poly.len() as u32 - 1;
    for d in 1..=deg / 2 {
        for low in 0..p.pow(d) {
            let mut divisor = digits(low, p, d);
            divisor.push(1);
            if poly_rem(poly, &divisor, p).is_empty() {
                return false;
            }
        }
    }
    true
}

impl FiniteField {
    pub fn new(p: u64, k: u32) -> Result<Self, GfError> {
        if !is_prime(p) {
            return Err(GfError::NonPrimeCharacteristic(p));
        }
        if k == 0 {
            return Err(GfError::ZeroDegree);
        }
        let order = (p as u128).checked_pow(k).unwrap_or(u128::MAX);
        if order > MAX_FIELD_ORDER as u128 {
            return Err(GfError::SizeLimitExceeded { p, k });
        }
        let p = p as u32;
        let order = order as u32;

        let modulus = (0..order)
            .map(|low| {
                let mut m = digits(low, p, k);
                m.push(1);
                m
            })
            .find(|m| is_irreducible(m, p))
            .expect("an irreducible polynomial of every degree exists");

        let n = order as u64 - 1;
        let factors = prime_factors(n);
        let slow_pow = |base: &[u32], mut e: u64| {
            let mut acc = vec![1u32];
            let mut b = trim(base.to_vec());
            while e > 0 {
                if e & 1 == 1 {
                    acc = poly_mul_mod(&acc, &b, &modulus, p);
                }
                b = poly_mul_mod(&b, &b, &modulus, p);
                e >>= 1;
            }
            acc
        };
        let primitive = (1..order)
            .find(|&idx| {
                let g = digits(idx, p, k);
                factors.iter().all(|&l| slow_pow(&g, n / l) != vec![1])
            })
            .expect("the multiplicative group of a finite field is cyclic");

        let mut exp = vec![0u32; n as usize];
        let mut log = vec![0u32; order as usize];
        let g = digits(primitive, p, k);
        let mut cur = vec![1u32];
        for (e, slot) in exp.iter_mut().enumerate() {
            let mut padded = cur.clone();
            padded.resize(k as usize, 0);
            let idx = undigits(&padded, p);
            *slot = idx;
            log[idx as usize] = e as u32;
            cur = poly_mul_mod(&cur, &g, &modulus, p);
        }

        Ok(Self {
            p,
            k,
            order,
            modulus,
            primitive: FieldElement(primitive),
            exp,
            log,
        })
    }

    /// Builds GF(q) for a prime power `q`.
    pub fn of_order(q: u64) -> Result<Self, GfError> {
        let (p, d) = prime_power(q).ok_or(GfError::NotAPrimePower(q))?;
        Self::new(p, d)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Monic modulus, coefficients low-to-high (length `k + 1`).
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn primitive(&self) -> FieldElement {
        self.primitive
    }

    /// All elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.order).map(FieldElement)
    }

    pub fn element(&self, index: usize) -> FieldElement {
        assert!(index < self.order as usize, "element index out of range");
        FieldElement(index as u32)
    }

    pub fn coeffs(&self, x: FieldElement) -> Vec<u32> {
        digits(x.0, self.p, self.k)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> FieldElement {
        assert_eq!(coeffs.len(), self.k as usize, "coefficient vector has wrong length");
        let reduced: Vec<u32> = coeffs.iter().map(|c| c % self.p).collect();
        FieldElement(undigits(&reduced, self.p))
    }

    /// Embeds an integer of the prime subfield.
    pub fn from_int(&self, n: u64) -> FieldElement {
        FieldElement((n % self.p as u64) as u32)
    }

    /// Integer value of an element of the prime subfield, if it lies there.
    pub fn to_int(&self, x: FieldElement) -> Option<u32> {
        (x.0 < self.p).then_some(x.0)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0;
        let mut place = 1;
        while x > 0 || y > 0 {
            out += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place *= self.p;
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.p == 2 {
            return a;
        }
        let mut x = a.0;
        let mut out = 0;
        let mut place = 1;
        while x > 0 {
            out += ((self.p - x % self.p) % self.p) * place;
            x /= self.p;
            place *= self.p;
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let n = self.exp.len();
        let e = (self.log[a.index()] as usize + self.log[b.index()] as usize) % n;
        FieldElement(self.exp[e])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.is_zero() {
            return None;
        }
        let n = self.exp.len();
        let e = (n - self.log[a.index()] as usize) % n;
        Some(FieldElement(self.exp[e]))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.is_zero() {
            return FieldElement::ZERO;
        }
        let n = self.exp.len() as u64;
        let le = (self.log[a.index()] as u64 * (e % n)) % n;
        FieldElement(self.exp[le as usize])
    }

    /// `γ^e` for the primitive element γ; negative exponents allowed.
    pub fn primitive_pow(&self, e: i64) -> FieldElement {
        let n = self.exp.len() as i64;
        FieldElement(self.exp[e.rem_euclid(n) as usize])
    }

    /// Exponent of `a` with respect to the primitive element.
    pub fn log(&self, a: FieldElement) -> Option<u32> {
        (!a.is_zero()).then(|| self.log[a.index()])
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElement) -> Option<u64> {
        let l = self.log(a)? as u64;
        let n = self.exp.len() as u64;
        Some(n / gcd(n, l))
    }

    /// Trace from GF(p^k) down to GF(p^sub_degree): `Σ x^{q^i}`, `q = p^sub_degree`.
    pub fn trace(&self, x: FieldElement, sub_degree: u32) -> Result<FieldElement, GfError> {
        self.relative_trace(x, self.k, sub_degree)
    }

    /// Trace from the subfield GF(p^from) onto GF(p^to), for `x` in GF(p^from).
    pub fn relative_trace(
        &self,
        x: FieldElement,
        from: u32,
        to: u32,
    ) -> Result<FieldElement, GfError> {
        if from == 0 || self.k % from != 0 {
            return Err(GfError::NotADivisor { sub: from, k: self.k });
        }
        if to == 0 || from % to != 0 {
            return Err(GfError::NotADivisor { sub: to, k: from });
        }
        let q = (self.p as u64).pow(to);
        let mut acc = FieldElement::ZERO;
        let mut conj = x;
        for _ in 0..from / to {
            acc = self.add(acc, conj);
            conj = self.pow(conj, q);
        }
        Ok(acc)
    }

    /// Absolute trace onto GF(p), as an integer in `0..p`.
    pub fn absolute_trace(&self, x: FieldElement) -> u32 {
        let t = self.trace(x, 1).expect("1 divides every degree");
        self.to_int(t).expect("absolute trace lies in the prime field")
    }

    /// The subfield GF(p^d), in canonical order.
    pub fn subfield(&self, d: u32) -> Result<Vec<FieldElement>, GfError> {
        if d == 0 || self.k % d != 0 {
            return Err(GfError::NotADivisor { sub: d, k: self.k });
        }
        let q = (self.p as u64).pow(d);
        Ok(self.elements().filter(|&x| self.pow(x, q) == x).collect())
    }

    /// Resolves a subfield order `q` to its degree over GF(p).
    pub fn subfield_degree(&self, q: u64) -> Result<u32, GfError> {
        let err = GfError::NotASubfield {
            q,
            p: self.p,
            k: self.k,
        };
        let (p, d) = prime_power(q).ok_or(err.clone())?;
        if p != self.p as u64 || self.k % d != 0 {
            return Err(err);
        }
        Ok(d)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The canonical hyperplane `{v : tr(v) = 0}` for the trace onto GF(q), in canonical order.
pub fn hyperplane_kernel(field: &FiniteField, q: u64) -> Result<Vec<FieldElement>, GfError> {
    let d = field.subfield_degree(q)?;
    Ok(field
        .elements()
        .filter(|&v| field.trace(v, d).map(|t| t.is_zero()).unwrap_or(false))
        .collect())
}

/// First element, in canonical order, whose trace onto GF(q) is one.
pub fn trace_one_element(field: &FiniteField, q: u64) -> Result<FieldElement, GfError> {
    let d = field.subfield_degree(q)?;
    Ok(field
        .elements()
        .find(|&v| field.trace(v, d).ok() == Some(FieldElement::ONE))
        .expect("the trace onto a proper subfield is onto"))
}
