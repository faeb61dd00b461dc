//! The supported Lie-type classes (A1; A2 untwisted and unitary): adjoint
//! representations of the inner-diagonal groups, order formulas, the table of
//! exceptional subgroups, and subfield inclusion arithmetic.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::{make_field, prime_power, Field, FieldElement, FieldError};
use crate::matgrp::{close_group, GroupError, MatGroup};
use crate::matrix::{Echelon, Matrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LieError {
    #[error("q = {0} is not usable for this class")]
    BadQ(u64),
    #[error("twist d = {d} is not available for {xtype}")]
    BadClass { xtype: XType, d: u8 },
    #[error("exponents {0:?} do not share a d-part")]
    MixedDParts(Vec<u64>),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XType {
    A1,
    A2,
}

impl fmt::Display for XType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XType::A1 => "A1",
            XType::A2 => "A2",
        })
    }
}

impl std::str::FromStr for XType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A1" | "a1" => Ok(XType::A1),
            "A2" | "a2" => Ok(XType::A2),
            _ => Err(format!("unknown type {s:?} (expected A1 or A2)")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LieClass {
    pub xtype: XType,
    pub d: u8,
}

impl LieClass {
    pub fn new(xtype: XType, d: u8) -> Result<LieClass, LieError> {
        match (xtype, d) {
            (_, 1) | (XType::A2, 2) => Ok(LieClass { xtype, d }),
            _ => Err(LieError::BadClass { xtype, d }),
        }
    }

    pub fn rank(&self) -> usize {
        match self.xtype {
            XType::A1 => 1,
            XType::A2 => 2,
        }
    }

    /// Size of the natural matrices, `rank + 1`.
    pub fn natural_dim(&self) -> usize {
        self.rank() + 1
    }

    pub fn adjoint_dim(&self) -> usize {
        let n = self.natural_dim();
        n * n - 1
    }
}

impl fmt::Display for LieClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.d == 1 {
            write!(f, "{}", self.xtype)
        } else {
            write!(f, "{}{}", self.d, self.xtype)
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Simple,
    InnerDiagonal,
}

fn check_q(c: LieClass, q: u64) -> Result<(u64, u32), LieError> {
    let (p, e) = prime_power(q).ok_or(LieError::BadQ(q))?;
    if c.d == 2 && q < 3 {
        return Err(LieError::BadQ(q));
    }
    Ok((p, e))
}

/// `|ID(X(q)) : X(q)|`.
pub fn diagonal_index(c: LieClass, q: u64) -> u64 {
    let n = c.natural_dim() as u64;
    if c.d == 1 {
        n.gcd(&(q - 1))
    } else {
        n.gcd(&(q + 1))
    }
}

pub fn group_order(c: LieClass, q: u64, variant: Variant) -> u64 {
    let full = match (c.xtype, c.d) {
        (XType::A1, _) => q * (q * q - 1),
        (XType::A2, 1) => q.pow(3) * (q * q - 1) * (q.pow(3) - 1),
        (XType::A2, _) => q.pow(3) * (q * q - 1) * (q.pow(3) + 1),
    };
    match variant {
        Variant::InnerDiagonal => full,
        Variant::Simple => full / diagonal_index(c, q),
    }
}

/// Composition factor dimensions of the adjoint module in characteristic `p`.
pub fn adjoint_factor_dims(c: LieClass, p: u64) -> Vec<usize> {
    let n = c.natural_dim();
    if (n as u64).is_multiple_of(p) {
        vec![n * n - 2, 1]
    } else {
        vec![n * n - 1]
    }
}

/// Whether `dX(p^e)` embeds in `ID(dX(p^f))`.
pub fn includes(d: u64, e: u64, f: u64) -> bool {
    e > 0 && f.is_multiple_of(e) && d.gcd(&(f / e)) == 1
}

/// Largest power of `d` dividing `e`; 1 when `d = 1`.
pub fn d_part(d: u64, e: u64) -> u64 {
    if d <= 1 || e == 0 {
        return 1;
    }
    let mut part = 1;
    let mut rest = e;
    while rest.is_multiple_of(d) {
        rest /= d;
        part *= d;
    }
    part
}

/// Least common multiple `g` of the exponents with every `g / e_i` coprime
/// to `d`.
pub fn common_overfield(d: u64, exponents: &[u64]) -> Result<u64, LieError> {
    let Some(&first) = exponents.first() else {
        return Ok(1);
    };
    let part = d_part(d, first);
    if exponents.iter().any(|&e| e == 0 || d_part(d, e) != part) {
        return Err(LieError::MixedDParts(exponents.to_vec()));
    }
    let l = exponents.iter().fold(1u64, |acc, &e| acc.lcm(&e));
    let mut g = l;
    loop {
        if exponents.iter().all(|&e| includes(d, e, g)) {
            return Ok(g);
        }
        g += l;
    }
}

/// A row of the table of exceptional subgroups.
#[derive(Clone, Debug)]
pub struct ExceptionRow {
    pub family: &'static str,
    pub characteristic: u64,
    pub subgroup: &'static str,
    /// Upper bound on `|H|` as a function of `q`, where the row gives one.
    pub order_bound: Option<fn(u64) -> u64>,
}

fn bound_a1(q: u64) -> u64 {
    2 * (q + 1)
}

fn bound_c2(q: u64) -> u64 {
    // |Sp_2(q^2).2| = 2 q^2 (q^4 - 1)
    2 * q * q * (q.pow(4) - 1)
}

fn bound_suzuki(q: u64) -> u64 {
    let r = (2 * q).isqrt();
    4 * (q + r + 1)
}

pub const TABLE1: [ExceptionRow; 6] = [
    ExceptionRow {
        family: "Cn",
        characteristic: 2,
        subgroup: "D_n^±(q0), D_n^±(q0).2 with F_q0 ⊆ F_q",
        order_bound: None,
    },
    ExceptionRow {
        family: "C4",
        characteristic: 2,
        subgroup: "3D4(q0) with F_q0^3 ⊆ F_q",
        order_bound: None,
    },
    ExceptionRow {
        family: "C3",
        characteristic: 2,
        subgroup: "G2(q0) with F_q0 ⊆ F_q",
        order_bound: None,
    },
    ExceptionRow {
        family: "C2",
        characteristic: 2,
        subgroup: "H ≤ Sp_2(q^2).2",
        order_bound: Some(bound_c2),
    },
    ExceptionRow {
        family: "2B2",
        characteristic: 2,
        subgroup: "H ≤ (q ± sqrt(2q) + 1).4",
        order_bound: Some(bound_suzuki),
    },
    ExceptionRow {
        family: "A1",
        characteristic: 2,
        subgroup: "H ≤ (q ± 1).2",
        order_bound: Some(bound_a1),
    },
];

/// Rows applying to the family `xtype` (e.g. "A1", "A2", "C4", "2B2") in
/// characteristic `p`.
pub fn table1_exceptions(xtype: &str, p: u64) -> Vec<&'static ExceptionRow> {
    TABLE1
        .iter()
        .filter(|row| row.characteristic == p)
        .filter(|row| row.family == xtype || (row.family == "Cn" && xtype.starts_with('C')))
        .collect()
}

/// Adjoint action of `GL_n(q)` on `gl_n / scalars`, in the basis `E_ij`,
/// `(i, j) ≠ (n, n)`, coordinates taken after subtracting `X_nn · I`.
pub fn adjoint_gl(g: &Matrix, f: &Field) -> Matrix {
    let n = g.dim();
    let ginv = g.inverse(f).expect("invertible");
    let dim = n * n - 1;
    let mut out = Matrix::zero(dim);
    for k in 0..dim {
        let (i, j) = (k / n, k % n);
        // g E_ij g^-1 has (a, b) entry g_ai * ginv_jb.
        let corner = f.mul(g.get(n - 1, i), ginv.get(j, n - 1));
        for r in 0..dim {
            let (a, b) = (r / n, r % n);
            let mut y = f.mul(g.get(a, i), ginv.get(j, b));
            if a == b {
                y = f.sub(y, corner);
            }
            out.set(r, k, y);
        }
    }
    out
}

fn gl_generators(n: usize, f: &Field) -> Vec<Matrix> {
    let w = f.primitive_element();
    let mut d = vec![f.one(); n];
    d[0] = w;
    let mut u = Matrix::identity(n);
    u.set(0, 1, f.one());
    vec![Matrix::diagonal(&d), u, cycle(n, f, false)]
}

fn sl_generators(n: usize, f: &Field) -> Vec<Matrix> {
    let w = f.primitive_element();
    let mut d = vec![f.one(); n];
    d[0] = w;
    d[1] = f.inv(w).expect("nonzero");
    let mut u = Matrix::identity(n);
    u.set(0, 1, f.one());
    let mut uw = Matrix::identity(n);
    uw.set(0, 1, w);
    vec![u, uw, Matrix::diagonal(&d), cycle(n, f, true)]
}

/// Permutation matrix of the `n`-cycle `e_j ↦ e_{j+1}`, optionally with a sign
/// fixed so that the determinant is one.
fn cycle(n: usize, f: &Field, det_one: bool) -> Matrix {
    let mut m = Matrix::zero(n);
    for j in 0..n {
        m.set((j + 1) % n, j, f.one());
    }
    if det_one && n.is_multiple_of(2) {
        m.set(0, n - 1, f.neg(f.one()));
    }
    m
}

/// `F_q`-form of `u_3 / scalars` inside `gl_3(F_{q^2})`, used for the
/// unitary groups.
pub struct UnitaryModule {
    /// `F_{q^2}`.
    pub big: Arc<Field>,
    /// `F_q`.
    pub small: Arc<Field>,
    /// Image of each `F_q` code in `F_{q^2}`.
    embed: Vec<FieldElement>,
    /// `F_q` coordinates `(a, b)` of each `F_{q^2}` code in the basis `1, β`.
    split: Vec<(FieldElement, FieldElement)>,
    /// Augmented basis rows `[vec(B_k) | e_k]`, `B_0 = λ I`.
    basis: Echelon,
    basis_mats: Vec<Matrix>,
    e: u32,
}

impl UnitaryModule {
    pub fn new(q: u64) -> Result<UnitaryModule, LieError> {
        let (p, e) = prime_power(q).ok_or(LieError::BadQ(q))?;
        let small = Arc::new(make_field(p, e)?);
        let big = Arc::new(make_field(p, 2 * e)?);
        let root = find_root(&big, small.modulus());
        let embed: Vec<FieldElement> = small
            .elements()
            .map(|x| {
                small.coeffs(x).iter().rev().fold(big.zero(), |acc, &c| {
                    big.add(big.mul(acc, root), FieldElement(c))
                })
            })
            .collect();
        let beta = big.generator_t();
        let mut split = vec![(FieldElement::ZERO, FieldElement::ZERO); big.size() as usize];
        for a in small.elements() {
            for b in small.elements() {
                let x = big.add(embed[a.0 as usize], big.mul(embed[b.0 as usize], beta));
                split[x.0 as usize] = (a, b);
            }
        }
        let mut module = UnitaryModule {
            big,
            small,
            embed,
            split,
            basis: Echelon::new(),
            basis_mats: Vec::new(),
            e,
        };
        let big = module.big.clone();
        let lambda = big.sub(beta, module.conj(beta));
        let mut candidates = vec![Matrix::identity(3).scale(lambda, &big)];
        for i in 0..3 {
            for j in 0..3 {
                for c in [big.one(), beta] {
                    let mut x = Matrix::zero(3);
                    x.set(i, j, c);
                    candidates.push(x.add(&module.sigma(&x), &big));
                }
            }
        }
        let mut plain = Echelon::new();
        let mut chosen = Vec::new();
        for x in candidates {
            let v = module.vectorize(&x);
            if plain.insert(&v, &module.small) {
                chosen.push(v);
                module.basis_mats.push(x);
            }
        }
        assert_eq!(chosen.len(), 9, "u_3 has dimension 9 over F_q");
        for (k, v) in chosen.into_iter().enumerate() {
            let mut row = v;
            row.extend((0..9).map(|t| FieldElement(u32::from(t == k))));
            module.basis.insert(&row, &module.small);
        }
        Ok(module)
    }

    pub fn conj(&self, x: FieldElement) -> FieldElement {
        self.big.frobenius(x, self.e)
    }

    pub fn embed(&self, x: FieldElement) -> FieldElement {
        self.embed[x.0 as usize]
    }

    /// `σ(X) = −J X̄ᵀ J`.
    pub fn sigma(&self, x: &Matrix) -> Matrix {
        let f = &self.big;
        let mut out = Matrix::zero(3);
        for i in 0..3 {
            for j in 0..3 {
                out.set(i, j, f.neg(self.conj(x.get(2 - j, 2 - i))));
            }
        }
        out
    }

    fn vectorize(&self, x: &Matrix) -> Vec<FieldElement> {
        let mut v = Vec::with_capacity(18);
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = self.split[x.get(i, j).0 as usize];
                v.push(a);
                v.push(b);
            }
        }
        v
    }

    /// Coordinates of `X ∈ u_3` modulo scalars.
    fn coords(&self, x: &Matrix) -> Vec<FieldElement> {
        let mut v = self.vectorize(x);
        v.extend(std::iter::repeat_n(FieldElement::ZERO, 9));
        let r = self.basis.reduce(&v, &self.small);
        debug_assert!(r[..18].iter().all(|c| c.is_zero()), "element outside u_3");
        r[19..].iter().map(|&c| self.small.neg(c)).collect()
    }

    /// Whether `g J ḡᵀ = J`.
    pub fn is_unitary(&self, g: &Matrix) -> bool {
        let f = &self.big;
        let gbar_t = Matrix::from_rows(
            &(0..3)
                .map(|i| (0..3).map(|j| self.conj(g.get(j, i))).collect())
                .collect::<Vec<_>>(),
        );
        g.mul(&antidiag(f), f).mul(&gbar_t, f) == antidiag(f)
    }

    /// Action of `g ∈ GU_3(q)` on the 8-dimensional module.
    pub fn adjoint(&self, g: &Matrix) -> Matrix {
        let f = &self.big;
        let ginv = g.inverse(f).expect("invertible");
        let mut out = Matrix::zero(8);
        for k in 0..8 {
            let row = g.mul(&self.basis_mats[k + 1], f).mul(&ginv, f);
            for (r, c) in self.coords(&row).into_iter().enumerate() {
                out.set(r, k, c);
            }
        }
        out
    }

    /// Generators of `GU_3(q)`: `J`, two diagonal tori and a root element.
    pub fn gu_generators(&self) -> Vec<Matrix> {
        let f = &self.big;
        let q = self.small.size() as u64;
        let w = f.primitive_element();
        let t1 = Matrix::diagonal(&[w, f.one(), f.inv(self.conj(w)).expect("nonzero")]);
        let mu = f.pow(w, q - 1);
        let t2 = Matrix::diagonal(&[f.one(), mu, f.one()]);
        vec![antidiag(f), t1, t2, self.root_element()]
    }

    fn root_element(&self) -> Matrix {
        let f = &self.big;
        for a in f.elements().skip(1) {
            for c in f.elements() {
                for b in f.elements() {
                    let mut u = Matrix::identity(3);
                    u.set(0, 1, a);
                    u.set(0, 2, b);
                    u.set(1, 2, c);
                    if self.is_unitary(&u) {
                        return u;
                    }
                }
            }
        }
        unreachable!("GU_3 contains unipotent elements")
    }
}

fn antidiag(f: &Field) -> Matrix {
    let mut j = Matrix::zero(3);
    for i in 0..3 {
        j.set(i, 2 - i, f.one());
    }
    j
}

/// Least root in `big` of the polynomial with coefficients `poly` (constant first).
fn find_root(big: &Field, poly: &[u32]) -> FieldElement {
    big.elements()
        .find(|&x| {
            poly.iter()
                .rev()
                .fold(big.zero(), |acc, &c| big.add(big.mul(acc, x), FieldElement(c)))
                .is_zero()
        })
        .expect("subfield modulus splits in the extension")
}

/// `ID(c(q))` acting on the adjoint module.
pub fn build_id_group(c: LieClass, q: u64, cap: usize) -> Result<MatGroup, LieError> {
    check_q(c, q)?;
    let (gens, field) = adjoint_generators(c, q, Variant::InnerDiagonal)?;
    Ok(close_group(&gens, field, cap)?)
}

/// The simple group `c(q)` acting on the adjoint module.
pub fn build_simple_group(c: LieClass, q: u64, cap: usize) -> Result<MatGroup, LieError> {
    check_q(c, q)?;
    if c.d == 2 {
        let full = build_id_group(c, q, cap)?;
        if diagonal_index(c, q) == 1 {
            return Ok(full);
        }
        let derived = full.derived_idx(full.generator_indices());
        let gens = full.generating_set(&derived);
        return Ok(full.subgroup(&derived, &gens));
    }
    let (gens, field) = adjoint_generators(c, q, Variant::Simple)?;
    Ok(close_group(&gens, field, cap)?)
}

/// Adjoint images of standard generators, with the field of the module.
pub fn adjoint_generators(c: LieClass, q: u64, variant: Variant) -> Result<(Vec<Matrix>, Arc<Field>), LieError> {
    let (p, e) = check_q(c, q)?;
    if c.d == 2 {
        let module = UnitaryModule::new(q)?;
        let gens = module.gu_generators().iter().map(|g| module.adjoint(g)).collect();
        return Ok((gens, module.small.clone()));
    }
    let field = Arc::new(make_field(p, e)?);
    let n = c.natural_dim();
    let natural = match variant {
        Variant::InnerDiagonal => gl_generators(n, &field),
        Variant::Simple => sl_generators(n, &field),
    };
    let gens = natural.iter().map(|g| adjoint_gl(g, &field)).collect();
    Ok((gens, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgrp::{normalizer, DEFAULT_CAP};
    use crate::module::absolutely_irreducible;

    const A1: LieClass = LieClass { xtype: XType::A1, d: 1 };
    const A2: LieClass = LieClass { xtype: XType::A2, d: 1 };
    const U3: LieClass = LieClass { xtype: XType::A2, d: 2 };

    #[test]
    fn classes_reject_twisted_a1() {
        assert!(LieClass::new(XType::A1, 2).is_err());
        assert_eq!(LieClass::new(XType::A2, 2).unwrap().adjoint_dim(), 8);
    }

    #[test]
    fn order_formulas() {
        assert_eq!(group_order(A1, 7, Variant::InnerDiagonal), 336);
        assert_eq!(group_order(A1, 7, Variant::Simple), 168);
        assert_eq!(group_order(U3, 3, Variant::Simple), 6048);
        assert_eq!(group_order(U3, 5, Variant::Simple), 126000);
        assert_eq!(group_order(A2, 4, Variant::Simple), 20160);
    }

    #[test]
    fn small_a1_groups_match_formulas() {
        for q in [2, 3, 4, 5, 7, 8, 9] {
            let h = build_id_group(A1, q, DEFAULT_CAP).unwrap();
            assert_eq!(h.order(), group_order(A1, q, Variant::InnerDiagonal), "PGL2({q})");
            assert_eq!(h.dim(), 3);
            let s = build_simple_group(A1, q, DEFAULT_CAP).unwrap();
            assert_eq!(s.order(), group_order(A1, q, Variant::Simple), "PSL2({q})");
        }
    }

    #[test]
    fn pgl3_small_matches_formula() {
        let h = build_id_group(A2, 2, DEFAULT_CAP).unwrap();
        assert_eq!(h.order(), 168);
        let h = build_id_group(A2, 3, DEFAULT_CAP).unwrap();
        assert_eq!(h.order(), group_order(A2, 3, Variant::InnerDiagonal));
    }

    #[test]
    fn pgu3_3_has_order_6048() {
        let h = build_id_group(U3, 3, DEFAULT_CAP).unwrap();
        assert_eq!(h.order(), 6048);
        assert_eq!(h.dim(), 8);
    }

    #[test]
    fn unitary_q2_is_rejected() {
        assert_eq!(build_id_group(U3, 2, DEFAULT_CAP).unwrap_err(), LieError::BadQ(2));
    }

    #[test]
    fn adjoint_factor_dims_table() {
        assert_eq!(adjoint_factor_dims(A1, 5), vec![3]);
        assert_eq!(adjoint_factor_dims(A1, 2), vec![2, 1]);
        assert_eq!(adjoint_factor_dims(A2, 3), vec![7, 1]);
        assert_eq!(adjoint_factor_dims(A2, 2), vec![8]);
    }

    #[test]
    fn adjoint_module_factors_match_dims() {
        for (c, q) in [(A1, 5), (A1, 4), (A2, 3)] {
            let h = build_id_group(c, q, DEFAULT_CAP).unwrap();
            let (p, _) = prime_power(q).unwrap();
            let dims = adjoint_factor_dims(c, p);
            let (_, factors) = crate::module::invariant_submodule_factors(h.generators(), &dims, h.field()).unwrap();
            let mut found: Vec<usize> = factors.iter().map(|fa| fa.basis.len()).collect();
            found.sort_unstable();
            let mut want = dims.clone();
            want.sort_unstable();
            assert_eq!(found, want, "{c} q={q}");
        }
    }

    #[test]
    fn pgl2_5_generators_are_absolutely_irreducible() {
        let h = build_id_group(A1, 5, DEFAULT_CAP).unwrap();
        assert!(absolutely_irreducible(h.generators(), 3, h.field()));
    }

    #[test]
    fn sylow7_normalizer_in_psl2_7() {
        let s = build_simple_group(A1, 7, DEFAULT_CAP).unwrap();
        let x = (0..s.len() as u32).find(|&i| s.order_of_idx(i) == 7).unwrap();
        let sylow = s.closure_full(&[x]);
        let sub = s.subgroup(&sylow, &[x]);
        let n = normalizer(&sub, &s).unwrap();
        assert_eq!(n.order(), 21);
    }

    #[test]
    fn inclusion_examples() {
        assert!(!includes(2, 1, 2));
        assert!(includes(2, 1, 3));
        assert!(includes(1, 2, 6));
        assert!(!includes(1, 2, 3));
        assert_eq!(d_part(2, 12), 4);
        assert_eq!(d_part(3, 12), 3);
        assert_eq!(d_part(1, 12), 1);
        assert_eq!(common_overfield(2, &[1, 3]).unwrap(), 3);
        assert_eq!(common_overfield(2, &[1]).unwrap(), 1);
        assert_eq!(common_overfield(1, &[2, 3]).unwrap(), 6);
        assert!(matches!(common_overfield(2, &[1, 2]), Err(LieError::MixedDParts(_))));
    }

    #[test]
    fn table1_lookup() {
        let rows = table1_exceptions("A1", 2);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].order_bound.unwrap())(8), 18);
        assert!(table1_exceptions("A2", 3).is_empty());
        assert!(table1_exceptions("A1", 5).is_empty());
        assert_eq!(table1_exceptions("C4", 2).len(), 2);
    }
}
