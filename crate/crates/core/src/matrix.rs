//! Dense square matrices over a [`Field`] and the row-reduction helpers the
//! module computations are built from.
//!
//! Entries are stored as `u16` field codes, so matrices only exist over fields
//! of size at most 65536. The field itself is passed to each operation rather
//! than stored, which keeps enumerated groups compact.

use crate::ff::{Field, FieldElement};

/// Largest field size a [`Matrix`] can hold.
pub const MATRIX_FIELD_LIMIT: u32 = 1 << 16;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    n: usize,
    data: Box<[u16]>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|c| c.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn identity(n: usize) -> Matrix {
        let mut data = vec![0u16; n * n].into_boxed_slice();
        for i in 0..n {
            data[i * n + i] = 1;
        }
        Matrix { n, data }
    }

    pub fn zero(n: usize) -> Matrix {
        Matrix {
            n,
            data: vec![0u16; n * n].into_boxed_slice(),
        }
    }

    /// Builds a matrix from rows; panics if the rows are not square or the
    /// field is too large for `u16` codes.
    pub fn from_rows(rows: &[Vec<FieldElement>]) -> Matrix {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix rows must be square");
            data.extend(r.iter().map(|x| to_u16(*x)));
        }
        Matrix {
            n,
            data: data.into_boxed_slice(),
        }
    }

    /// Builds a matrix from small signed integers reduced into the prime field.
    pub fn from_ints(f: &Field, rows: &[&[i64]]) -> Matrix {
        let rows: Vec<Vec<FieldElement>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| f.from_int(x)).collect())
            .collect();
        Matrix::from_rows(&rows)
    }

    pub fn diagonal(entries: &[FieldElement]) -> Matrix {
        let n = entries.len();
        let mut m = Matrix::zero(n);
        for (i, &x) in entries.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        FieldElement(self.data[i * self.n + j] as u32)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: FieldElement) {
        self.data[i * self.n + j] = to_u16(x);
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entry codes.
    pub fn codes(&self) -> &[u16] {
        &self.data
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| self.data[i * self.n + j] == u16::from(i == j))
        })
    }

    pub fn mul(&self, rhs: &Matrix, f: &Field) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = vec![0u16; n * n];
        if f.degree() == 1 {
            let p = f.characteristic() as u64;
            for i in 0..n {
                let a = &self.data[i * n..(i + 1) * n];
                for j in 0..n {
                    let mut acc = 0u64;
                    for k in 0..n {
                        acc += a[k] as u64 * rhs.data[k * n + j] as u64;
                    }
                    out[i * n + j] = (acc % p) as u16;
                }
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = FieldElement::ZERO;
                    for k in 0..n {
                        let a = self.data[i * n + k];
                        let b = rhs.data[k * n + j];
                        if a != 0 && b != 0 {
                            acc = f.add(acc, f.mul(FieldElement(a as u32), FieldElement(b as u32)));
                        }
                    }
                    out[i * n + j] = acc.0 as u16;
                }
            }
        }
        Matrix {
            n,
            data: out.into_boxed_slice(),
        }
    }

    pub fn add(&self, rhs: &Matrix, f: &Field) -> Matrix {
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(&a, &b)| f.add(FieldElement(a as u32), FieldElement(b as u32)).0 as u16)
            .collect();
        Matrix { n: self.n, data }
    }

    pub fn sub(&self, rhs: &Matrix, f: &Field) -> Matrix {
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(&a, &b)| f.sub(FieldElement(a as u32), FieldElement(b as u32)).0 as u16)
            .collect();
        Matrix { n: self.n, data }
    }

    pub fn scale(&self, c: FieldElement, f: &Field) -> Matrix {
        let data = self
            .data
            .iter()
            .map(|&a| f.mul(c, FieldElement(a as u32)).0 as u16)
            .collect();
        Matrix { n: self.n, data }
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    /// Applies a map to every entry (e.g. a field automorphism).
    pub fn map_entries(&self, mut g: impl FnMut(FieldElement) -> FieldElement) -> Matrix {
        let data = self
            .data
            .iter()
            .map(|&a| to_u16(g(FieldElement(a as u32))))
            .collect();
        Matrix { n: self.n, data }
    }

    pub fn trace(&self, f: &Field) -> FieldElement {
        (0..self.n).fold(FieldElement::ZERO, |acc, i| f.add(acc, self.get(i, i)))
    }

    pub fn pow(&self, mut k: u64, f: &Field) -> Matrix {
        let mut base = self.clone();
        let mut acc = Matrix::identity(self.n);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base, f);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base, f);
            }
        }
        acc
    }

    /// Gauss-Jordan inverse; `None` for singular matrices.
    pub fn inverse(&self, f: &Field) -> Option<Matrix> {
        let n = self.n;
        let mut a: Vec<Vec<FieldElement>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect();
        let mut inv: Vec<Vec<FieldElement>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { f.one() } else { f.zero() }).collect())
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, piv);
            inv.swap(col, piv);
            let s = f.inv(a[col][col])?;
            for j in 0..n {
                a[col][j] = f.mul(a[col][j], s);
                inv[col][j] = f.mul(inv[col][j], s);
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let c = a[r][col];
                    for j in 0..n {
                        a[r][j] = f.sub(a[r][j], f.mul(c, a[col][j]));
                        inv[r][j] = f.sub(inv[r][j], f.mul(c, inv[col][j]));
                    }
                }
            }
        }
        Some(Matrix::from_rows(&inv))
    }

    pub fn det(&self, f: &Field) -> FieldElement {
        let n = self.n;
        let mut a: Vec<Vec<FieldElement>> = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect();
        let mut det = f.one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
                return f.zero();
            };
            if piv != col {
                a.swap(col, piv);
                det = f.neg(det);
            }
            det = f.mul(det, a[col][col]);
            let s = f.inv(a[col][col]).expect("pivot is nonzero");
            for r in col + 1..n {
                if !a[r][col].is_zero() {
                    let c = f.mul(a[r][col], s);
                    for j in col..n {
                        a[r][j] = f.sub(a[r][j], f.mul(c, a[col][j]));
                    }
                }
            }
        }
        det
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[FieldElement], f: &Field) -> Vec<FieldElement> {
        let n = self.n;
        (0..n)
            .map(|j| {
                (0..n).fold(FieldElement::ZERO, |acc, k| {
                    f.add(acc, f.mul(v[k], self.get(k, j)))
                })
            })
            .collect()
    }

    /// Entries flattened into a vector of field elements (row-major).
    pub fn to_vector(&self) -> Vec<FieldElement> {
        self.data.iter().map(|&a| FieldElement(a as u32)).collect()
    }

    pub fn from_vector(n: usize, v: &[FieldElement]) -> Matrix {
        assert_eq!(v.len(), n * n);
        Matrix {
            n,
            data: v.iter().map(|x| to_u16(*x)).collect(),
        }
    }
}

#[inline]
fn to_u16(x: FieldElement) -> u16 {
    debug_assert!(x.0 < MATRIX_FIELD_LIMIT);
    x.0 as u16
}

/// Incrementally maintained row-echelon basis of a subspace of `F^m`.
///
/// Every stored row is monic at its pivot and zero at the pivots of the other
/// rows, so reduction is a single pass.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<Vec<FieldElement>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new() -> Echelon {
        Echelon::default()
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<FieldElement>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` against the basis; the result is zero iff `v` is in the span.
    pub fn reduce(&self, v: &[FieldElement], f: &Field) -> Vec<FieldElement> {
        let mut w = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = w[p];
            if !c.is_zero() {
                for (x, &r) in w.iter_mut().zip(row) {
                    if !r.is_zero() {
                        *x = f.sub(*x, f.mul(c, r));
                    }
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[FieldElement], f: &Field) -> bool {
        self.reduce(v, f).iter().all(|x| x.is_zero())
    }

    /// Adds `v` to the span; returns false if it was already there.
    pub fn insert(&mut self, v: &[FieldElement], f: &Field) -> bool {
        let mut w = self.reduce(v, f);
        let Some(p) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let s = f.inv(w[p]).expect("nonzero pivot");
        for x in w.iter_mut() {
            *x = f.mul(*x, s);
        }
        for (row, _) in self.rows.iter_mut().zip(&self.pivots) {
            let c = row[p];
            if !c.is_zero() {
                for (x, &r) in row.iter_mut().zip(&w) {
                    if !r.is_zero() {
                        *x = f.sub(*x, f.mul(c, r));
                    }
                }
            }
        }
        self.rows.push(w);
        self.pivots.push(p);
        true
    }

    /// Coordinates of `v` with respect to the stored rows, if `v` is in the span.
    pub fn coordinates(&self, v: &[FieldElement], f: &Field) -> Option<Vec<FieldElement>> {
        let coords: Vec<FieldElement> = self.pivots.iter().map(|&p| v[p]).collect();
        // Rows are reduced at every pivot, so the pivot entries are the coordinates.
        let mut w = v.to_vec();
        for (row, &c) in self.rows.iter().zip(&coords) {
            if !c.is_zero() {
                for (x, &r) in w.iter_mut().zip(row) {
                    *x = f.sub(*x, f.mul(c, r));
                }
            }
        }
        w.iter().all(|x| x.is_zero()).then_some(coords)
    }
}

/// Basis of the right null space `{x : A x = 0}` of an `r × c` matrix given by rows.
pub fn nullspace(rows: &[Vec<FieldElement>], cols: usize, f: &Field) -> Vec<Vec<FieldElement>> {
    let mut ech = Echelon::new();
    for r in rows {
        ech.insert(r, f);
    }
    let pivots: Vec<usize> = ech.pivots().to_vec();
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut x = vec![FieldElement::ZERO; cols];
            x[fc] = FieldElement::ONE;
            for (row, &p) in ech.rows().iter().zip(&pivots) {
                x[p] = f.neg(row[fc]);
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::make_field;

    #[test]
    fn inverse_and_det_over_extension_field() {
        let f = make_field(2, 3).unwrap();
        let t = f.generator_t();
        let m = Matrix::from_rows(&[
            vec![t, f.one(), f.zero()],
            vec![f.zero(), t, f.one()],
            vec![f.one(), f.zero(), t],
        ]);
        let inv = m.inverse(&f).unwrap();
        assert!(m.mul(&inv, &f).is_identity());
        assert!(!m.det(&f).is_zero());
        let sing = Matrix::from_rows(&[vec![t, t], vec![t, t]]);
        assert!(sing.inverse(&f).is_none());
        assert!(sing.det(&f).is_zero());
    }

    #[test]
    fn nullspace_of_rank_one_rows() {
        let f = make_field(5, 1).unwrap();
        let row = vec![f.from_int(1), f.from_int(2), f.from_int(3)];
        let ns = nullspace(std::slice::from_ref(&row), 3, &f);
        assert_eq!(ns.len(), 2);
        for v in ns {
            let dot = (0..3).fold(f.zero(), |a, i| f.add(a, f.mul(row[i], v[i])));
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn echelon_coordinates_recover_combination() {
        let f = make_field(7, 1).unwrap();
        let a: Vec<FieldElement> = [1, 2, 0, 3].iter().map(|&x| f.from_int(x)).collect();
        let b: Vec<FieldElement> = [0, 1, 4, 1].iter().map(|&x| f.from_int(x)).collect();
        let mut e = Echelon::new();
        assert!(e.insert(&a, &f));
        assert!(e.insert(&b, &f));
        let c: Vec<FieldElement> = (0..4)
            .map(|i| f.add(f.mul(f.from_int(3), a[i]), f.mul(f.from_int(5), b[i])))
            .collect();
        assert!(!e.insert(&c, &f));
        let coords = e.coordinates(&c, &f).unwrap();
        let back: Vec<FieldElement> = (0..4)
            .map(|i| f.add(f.mul(coords[0], e.rows()[0][i]), f.mul(coords[1], e.rows()[1][i])))
            .collect();
        assert_eq!(back, c);
    }
}
