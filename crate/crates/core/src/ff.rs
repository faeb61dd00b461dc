//! Arithmetic in finite fields `F_{p^e}`.
//!
//! Elements are stored as integer codes `c = a_0 + a_1 p + ... + a_{e-1} p^{e-1}`
//! where `a_0 + a_1 t + ... + a_{e-1} t^{e-1}` is the polynomial representative
//! modulo the field's defining polynomial. The defining polynomial is the
//! lexicographically least monic irreducible of degree `e` (coefficients
//! compared from the constant term upwards), so every run of the program sees
//! the same representation of every field.
//!
//! Fields of size at most [`TABLE_LIMIT`] precompute addition and
//! multiplication tables; larger fields fall back to polynomial arithmetic.

use std::fmt;

use thiserror::Error;

/// Largest field size for which full operation tables are built.
pub const TABLE_LIMIT: u32 = 1024;

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("extension degree {0} outside 1..={MAX_DEGREE}")]
    BadDegree(u32),
    #[error("field of size {p}^{e} does not fit in 32 bits")]
    TooLarge { p: u64, e: u32 },
    #[error("no monic irreducible polynomial of degree {e} over F_{p} was found")]
    NoModulus { p: u64, e: u32 },
    #[error("the Legendre symbol needs an odd prime, got 2")]
    EvenPrime,
    #[error("coefficient vector does not describe an element of F_{q}")]
    BadCoefficients { q: u32 },
}

/// An element of some [`Field`], stored as its integer code.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
}

/// The finite field `F_{p^e}`. Immutable after construction.
pub struct Field {
    p: u32,
    e: u32,
    q: u32,
    modulus: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    tables: Option<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)?;
        if self.e > 1 {
            write!(f, " (modulus {:?})", self.modulus)?;
        }
        Ok(())
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}

impl Eq for Field {}

/// Builds `F_{p^e}` with its canonical modulus.
pub fn make_field(p: u64, e: u32) -> Result<Field, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NonPrime(p));
    }
    if e == 0 || e > MAX_DEGREE {
        return Err(FieldError::BadDegree(e));
    }
    let q = (p as u128).pow(e);
    if q > u32::MAX as u128 {
        return Err(FieldError::TooLarge { p, e });
    }
    let p = p as u32;
    let modulus = least_irreducible(p, e).ok_or(FieldError::NoModulus { p: p as u64, e })?;
    Ok(Field::with_modulus(p, e, modulus))
}

impl Field {
    fn with_modulus(p: u32, e: u32, modulus: Vec<u32>) -> Field {
        let q = p.pow(e);
        let mut field = Field {
            p,
            e,
            q,
            modulus,
            neg: Vec::new(),
            inv: Vec::new(),
            tables: None,
        };
        if q <= TABLE_LIMIT {
            field.neg = (0..q).map(|a| field.neg_slow(a)).collect();
            if e > 1 {
                let n = q as usize;
                let mut add = vec![0u32; n * n];
                let mut mul = vec![0u32; n * n];
                for a in 0..q {
                    for b in 0..q {
                        add[a as usize * n + b as usize] = field.add_slow(a, b);
                        mul[a as usize * n + b as usize] = field.mul_slow(a, b);
                    }
                }
                field.tables = Some(Tables { add, mul });
            }
            let mut inv = vec![0u32; q as usize];
            for a in 1..q {
                if inv[a as usize] == 0 {
                    let b = field.pow(FieldElement(a), (q - 2) as u64).0;
                    inv[a as usize] = b;
                    inv[b as usize] = a;
                }
            }
            field.inv = inv;
        }
        field
    }

    #[inline]
    pub fn characteristic(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.e
    }

    #[inline]
    pub fn size(&self) -> u32 {
        self.q
    }

    /// Coefficients of the defining polynomial, constant term first (monic).
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.p as i64) as u32)
    }

    /// Element from its code; `None` when the code is out of range.
    pub fn from_code(&self, code: u32) -> Option<FieldElement> {
        (code < self.q).then_some(FieldElement(code))
    }

    pub fn element(&self, coeffs: &[u32]) -> Result<FieldElement, FieldError> {
        if coeffs.len() != self.e as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(FieldError::BadCoefficients { q: self.q });
        }
        Ok(FieldElement(self.encode(coeffs)))
    }

    /// Polynomial coefficients of `x`, constant term first; always `e` entries.
    pub fn coeffs(&self, x: FieldElement) -> Vec<u32> {
        self.decode(x.0)
    }

    /// The class of `t` in `F_p[t]/(modulus)`.
    pub fn generator_t(&self) -> FieldElement {
        if self.e == 1 {
            // t reduces to -a_0 modulo t + a_0.
            FieldElement((self.p - self.modulus[0]) % self.p)
        } else {
            FieldElement(self.p)
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.e == 1 {
            let s = a.0 + b.0;
            return FieldElement(if s >= self.p { s - self.p } else { s });
        }
        match &self.tables {
            Some(t) => FieldElement(t.add[(a.0 * self.q + b.0) as usize]),
            None => FieldElement(self.add_slow(a.0, b.0)),
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if !self.neg.is_empty() {
            return FieldElement(self.neg[a.0 as usize]);
        }
        FieldElement(self.neg_slow(a.0))
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.e == 1 {
            return FieldElement(((a.0 as u64 * b.0 as u64) % self.p as u64) as u32);
        }
        match &self.tables {
            Some(t) => FieldElement(t.mul[(a.0 * self.q + b.0) as usize]),
            None => FieldElement(self.mul_slow(a.0, b.0)),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.is_zero() {
            return None;
        }
        if !self.inv.is_empty() {
            return Some(FieldElement(self.inv[a.0 as usize]));
        }
        Some(self.pow(a, self.q as u64 - 2))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Option<FieldElement> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    pub fn pow(&self, a: FieldElement, mut k: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// `x ↦ x^{p^k}`. With `k = e` this is the identity.
    pub fn frobenius(&self, x: FieldElement, k: u32) -> FieldElement {
        let mut y = x;
        for _ in 0..(k % self.e.max(1)) {
            y = self.pow(y, self.p as u64);
        }
        y
    }

    /// Multiplicative order of a nonzero element.
    pub fn mult_order(&self, a: FieldElement) -> Option<u64> {
        if a.is_zero() {
            return None;
        }
        let n = self.q as u64 - 1;
        let mut order = n;
        for (l, _) in factorize(n) {
            while order.is_multiple_of(l) && self.pow(a, order / l) == FieldElement::ONE {
                order /= l;
            }
        }
        Some(order)
    }

    /// Least element code generating the multiplicative group.
    pub fn primitive_element(&self) -> FieldElement {
        if self.q == 2 {
            return FieldElement::ONE;
        }
        let n = self.q as u64 - 1;
        let primes: Vec<u64> = factorize(n).into_iter().map(|(l, _)| l).collect();
        (1..self.q)
            .map(FieldElement)
            .find(|&g| primes.iter().all(|&l| self.pow(g, n / l) != FieldElement::ONE))
            .expect("finite fields have cyclic unit groups")
    }

    /// True when `x` lies in the subfield of size `p^k` (`k | e`).
    pub fn in_subfield(&self, x: FieldElement, k: u32) -> bool {
        self.frobenius(x, k) == x
    }

    fn encode(&self, coeffs: &[u32]) -> u32 {
        coeffs.iter().rev().fold(0u32, |acc, &c| acc * self.p + c)
    }

    fn decode(&self, mut code: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.e as usize);
        for _ in 0..self.e {
            out.push(code % self.p);
            code /= self.p;
        }
        out
    }

    fn add_slow(&self, a: u32, b: u32) -> u32 {
        let (x, y) = (self.decode(a), self.decode(b));
        let s: Vec<u32> = x.iter().zip(&y).map(|(u, v)| (u + v) % self.p).collect();
        self.encode(&s)
    }

    fn neg_slow(&self, a: u32) -> u32 {
        let x = self.decode(a);
        let s: Vec<u32> = x.iter().map(|&u| (self.p - u) % self.p).collect();
        self.encode(&s)
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let (x, y) = (self.decode(a), self.decode(b));
        let prod = poly::mul(&x, &y, self.p);
        let mut r = poly::rem(&prod, &self.modulus, self.p);
        r.resize(self.e as usize, 0);
        self.encode(&r)
    }
}

/// Polynomials over `F_p` as coefficient vectors, constant term first.
pub(crate) mod poly {
    pub fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let p64 = p as u64;
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x as u64 * y as u64) % p64;
            }
        }
        let mut out: Vec<u32> = out.into_iter().map(|c| c as u32).collect();
        trim(&mut out);
        out
    }

    pub fn inv_mod(a: u32, p: u32) -> u32 {
        let mut r = 1u64;
        let mut b = a as u64 % p as u64;
        let mut k = p as u64 - 2;
        while k > 0 {
            if k & 1 == 1 {
                r = r * b % p as u64;
            }
            b = b * b % p as u64;
            k >>= 1;
        }
        r as u32
    }

    /// Remainder of `a` modulo a nonzero `m`.
    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let mut r = a.to_vec();
        trim(&mut r);
        let mut m = m.to_vec();
        trim(&mut m);
        let dm = m.len() - 1;
        let lead_inv = inv_mod(m[dm], p) as u64;
        while r.len() > dm {
            let k = r.len() - 1 - dm;
            let c = r[r.len() - 1] as u64 * lead_inv % p as u64;
            for (i, &mi) in m.iter().enumerate() {
                let sub = c * mi as u64 % p as u64;
                r[k + i] = ((r[k + i] as u64 + p as u64 - sub) % p as u64) as u32;
            }
            trim(&mut r);
        }
        r
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let n = a.len().max(b.len());
        let mut out: Vec<u32> = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(&mut out);
        out
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        trim(&mut x);
        trim(&mut y);
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = y;
            y = r;
        }
        x
    }

    /// `base^(p^k)` modulo `m`.
    pub fn pow_p_iter(base: &[u32], k: u32, m: &[u32], p: u32) -> Vec<u32> {
        let mut x = rem(base, m, p);
        for _ in 0..k {
            // x^p by square-and-multiply
            let mut acc = vec![1u32];
            let mut b = x.clone();
            let mut e = p;
            while e > 0 {
                if e & 1 == 1 {
                    acc = rem(&mul(&acc, &b, p), m, p);
                }
                b = rem(&mul(&b, &b, p), m, p);
                e >>= 1;
            }
            x = acc;
        }
        x
    }

    /// Rabin's irreducibility test for a monic polynomial.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let n = f.len() as u32 - 1;
        if n == 1 {
            return true;
        }
        let x = vec![0u32, 1];
        if pow_p_iter(&x, n, f, p) != rem(&x, f, p) {
            return false;
        }
        for (r, _) in super::factorize(n as u64) {
            let h = pow_p_iter(&x, n / r as u32, f, p);
            let g = gcd(&sub(&h, &x, p), f, p);
            if g.len() != 1 {
                return false;
            }
        }
        true
    }
}

/// Lexicographically least monic irreducible of degree `e`, comparing the
/// constant term first.
fn least_irreducible(p: u32, e: u32) -> Option<Vec<u32>> {
    let count = (p as u64).pow(e);
    (0..count).find_map(|idx| {
        // idx enumerates (a_0, ..., a_{e-1}) with a_0 as the most significant digit.
        let mut coeffs = vec![0u32; e as usize + 1];
        let mut rest = idx;
        for i in (0..e as usize).rev() {
            coeffs[i] = (rest % p as u64) as u32;
            rest /= p as u64;
        }
        coeffs[e as usize] = 1;
        poly::is_irreducible(&coeffs, p).then_some(coeffs)
    })
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut k = 0;
            while n.is_multiple_of(d) {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `(p, e)` with `q = p^e`, or `None` when `q` is not a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    match factorize(q).as_slice() {
        [(p, e)] => Some((*p, *e)),
        _ => None,
    }
}

/// The Legendre symbol `(a | p)` for an odd prime `p`.
pub fn legendre(a: i64, p: u64) -> Result<i8, FieldError> {
    if p == 2 {
        return Err(FieldError::EvenPrime);
    }
    if !is_prime(p) {
        return Err(FieldError::NonPrime(p));
    }
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return Ok(0);
    }
    let r = modpow(a, (p - 1) / 2, p);
    Ok(if r == 1 { 1 } else { -1 })
}

pub(crate) fn modpow(mut b: u64, mut k: u64, m: u64) -> u64 {
    let mut acc = 1u128 % m as u128;
    let mut base = b as u128 % m as u128;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base % m as u128;
        }
        base = base * base % m as u128;
        k >>= 1;
    }
    b = acc as u64;
    b
}
