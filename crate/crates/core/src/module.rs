//! Modules for matrix groups: absolute irreducibility via the enveloping
//! algebra, and composition series by spinning eigenvectors of random
//! algebra elements (Norton's criterion).
//!
//! Matrices act on column vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ff::{Field, FieldElement};
use crate::matrix::{nullspace, Echelon, Matrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModuleError {
    #[error("composition factor dimensions {found:?} do not match the expected {expected:?}")]
    FactorMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("could not decide irreducibility of a {dim}-dimensional module")]
    Undecided { dim: usize },
}

const SEARCH_ATTEMPTS: usize = 64;
const EXHAUSTIVE_LINE_LIMIT: u64 = 1 << 20;

pub fn mat_vec(g: &Matrix, v: &[FieldElement], f: &Field) -> Vec<FieldElement> {
    let n = g.dim();
    (0..n)
        .map(|i| {
            (0..n).fold(FieldElement::ZERO, |acc, j| {
                let a = g.get(i, j);
                if a.is_zero() || v[j].is_zero() {
                    acc
                } else {
                    f.add(acc, f.mul(a, v[j]))
                }
            })
        })
        .collect()
}

/// Dimension over `f` of the algebra spanned by all words in `gens`
/// (the empty word included).
pub fn enveloping_algebra_dim(gens: &[Matrix], n: usize, f: &Field) -> usize {
    let full = n * n;
    let mut span = Echelon::new();
    let id = Matrix::identity(n);
    span.insert(&id.to_vector(), f);
    let mut queue = vec![id];
    while let Some(m) = queue.pop() {
        for g in gens {
            let prod = m.mul(g, f);
            if span.insert(&prod.to_vector(), f) {
                if span.dim() == full {
                    return full;
                }
                queue.push(prod);
            }
        }
    }
    span.dim()
}

/// Burnside: the action is absolutely irreducible iff the enveloping algebra
/// is the full matrix algebra.
pub fn absolutely_irreducible(gens: &[Matrix], n: usize, f: &Field) -> bool {
    enveloping_algebra_dim(gens, n, f) == n * n
}

/// Smallest invariant subspace containing `v`.
pub fn spin(gens: &[Matrix], v: &[FieldElement], f: &Field) -> Echelon {
    let mut span = Echelon::new();
    if !span.insert(v, f) {
        return span;
    }
    let mut queue = vec![v.to_vec()];
    while let Some(w) = queue.pop() {
        for g in gens {
            let gw = mat_vec(g, &w, f);
            if span.insert(&gw, f) {
                queue.push(gw);
            }
        }
    }
    span
}

enum Search {
    Found(Vec<Vec<FieldElement>>),
    Irreducible,
}

/// Annihilator `{v : u·v = 0 for all u}` of a set of row vectors.
fn annihilator(rows: &[Vec<FieldElement>], n: usize, f: &Field) -> Vec<Vec<FieldElement>> {
    nullspace(rows, n, f)
}

fn random_algebra_element(gens: &[Matrix], n: usize, f: &Field, rng: &mut ChaCha8Rng) -> Matrix {
    let mut acc = Matrix::zero(n);
    for _ in 0..3 {
        let len = rng.gen_range(1..=3);
        let mut word = Matrix::identity(n);
        for _ in 0..len {
            word = word.mul(&gens[rng.gen_range(0..gens.len())], f);
        }
        let c = FieldElement(rng.gen_range(1..f.size()));
        acc = acc.add(&word.scale(c, f), f);
    }
    acc
}

fn find_submodule(gens: &[Matrix], n: usize, f: &Field) -> Result<Search, ModuleError> {
    if n <= 1 {
        return Ok(Search::Irreducible);
    }
    if gens.is_empty() {
        let mut v = vec![FieldElement::ZERO; n];
        v[0] = FieldElement::ONE;
        return Ok(Search::Found(vec![v]));
    }
    let duals: Vec<Matrix> = gens.iter().map(Matrix::transpose).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + n as u64);
    for _ in 0..SEARCH_ATTEMPTS {
        let theta = random_algebra_element(gens, n, f, &mut rng);
        for lambda in f.elements() {
            let shifted = theta.sub(&Matrix::identity(n).scale(lambda, f), f);
            let rows: Vec<Vec<FieldElement>> =
                (0..n).map(|i| (0..n).map(|j| shifted.get(i, j)).collect()).collect();
            let kernel = nullspace(&rows, n, f);
            if kernel.is_empty() {
                continue;
            }
            for v in &kernel {
                let s = spin(gens, v, f);
                if s.dim() < n {
                    return Ok(Search::Found(s.rows().to_vec()));
                }
            }
            let trows: Vec<Vec<FieldElement>> =
                (0..n).map(|i| (0..n).map(|j| shifted.get(j, i)).collect()).collect();
            let cokernel = nullspace(&trows, n, f);
            for w in &cokernel {
                let s = spin(&duals, w, f);
                if s.dim() < n {
                    return Ok(Search::Found(annihilator(s.rows(), n, f)));
                }
            }
            if kernel.len() == 1 {
                // Norton: a linear factor with one-dimensional eigenspace whose
                // vector and dual vector both spin to everything.
                return Ok(Search::Irreducible);
            }
        }
    }
    exhaustive_search(gens, n, f)
}

fn exhaustive_search(gens: &[Matrix], n: usize, f: &Field) -> Result<Search, ModuleError> {
    let q = f.size() as u64;
    let lines = (q.pow(n as u32) - 1) / (q - 1);
    if lines > EXHAUSTIVE_LINE_LIMIT {
        return Err(ModuleError::Undecided { dim: n });
    }
    // One representative per line: first nonzero coordinate equal to one.
    for lead in 0..n {
        let tail = q.pow((n - lead - 1) as u32);
        for mut idx in 0..tail {
            let mut v = vec![FieldElement::ZERO; n];
            v[lead] = FieldElement::ONE;
            for slot in v.iter_mut().skip(lead + 1) {
                *slot = FieldElement((idx % q) as u32);
                idx /= q;
            }
            let s = spin(gens, &v, f);
            if s.dim() < n {
                return Ok(Search::Found(s.rows().to_vec()));
            }
        }
    }
    Ok(Search::Irreducible)
}

/// A basis adapted to a composition series: the first `dims[0]` columns span
/// the bottom factor, and so on upwards.
#[derive(Clone, Debug)]
pub struct CompositionSeries {
    basis: Matrix,
    basis_inv: Matrix,
    dims: Vec<usize>,
}

impl CompositionSeries {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Columns of the adapted basis.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Action of `g` on each composition factor, bottom first.
    pub fn factor_actions(&self, g: &Matrix, f: &Field) -> Vec<Matrix> {
        let conj = self.basis_inv.mul(g, f).mul(&self.basis, f);
        let mut out = Vec::with_capacity(self.dims.len());
        let mut start = 0;
        for &d in &self.dims {
            let rows: Vec<Vec<FieldElement>> = (start..start + d)
                .map(|i| (start..start + d).map(|j| conj.get(i, j)).collect())
                .collect();
            out.push(Matrix::from_rows(&rows));
            start += d;
        }
        out
    }
}

fn series_rec(gens: &[Matrix], n: usize, f: &Field) -> Result<(Vec<Vec<FieldElement>>, Vec<usize>), ModuleError> {
    let sub = match find_submodule(gens, n, f)? {
        Search::Irreducible => {
            let basis = (0..n)
                .map(|i| (0..n).map(|j| FieldElement(u32::from(i == j))).collect())
                .collect();
            return Ok((basis, vec![n]));
        }
        Search::Found(sub) => sub,
    };
    let k = sub.len();
    let mut ech = Echelon::new();
    let mut cols: Vec<Vec<FieldElement>> = Vec::with_capacity(n);
    for v in &sub {
        ech.insert(v, f);
        cols.push(v.clone());
    }
    for i in 0..n {
        let mut e = vec![FieldElement::ZERO; n];
        e[i] = FieldElement::ONE;
        if ech.insert(&e, f) {
            cols.push(e);
        }
    }
    let p = columns_to_matrix(&cols);
    let p_inv = p.inverse(f).expect("adapted basis is invertible");
    let conj: Vec<Matrix> = gens.iter().map(|g| p_inv.mul(g, f).mul(&p, f)).collect();
    let block = |g: &Matrix, lo: usize, hi: usize| {
        let rows: Vec<Vec<FieldElement>> =
            (lo..hi).map(|i| (lo..hi).map(|j| g.get(i, j)).collect()).collect();
        Matrix::from_rows(&rows)
    };
    let bottom: Vec<Matrix> = conj.iter().map(|g| block(g, 0, k)).collect();
    let top: Vec<Matrix> = conj.iter().map(|g| block(g, k, n)).collect();
    let (bb, bd) = series_rec(&bottom, k, f)?;
    let (tb, td) = series_rec(&top, n - k, f)?;
    let mut basis = Vec::with_capacity(n);
    for v in bb {
        let mut full = v;
        full.resize(n, FieldElement::ZERO);
        basis.push(mat_vec(&p, &full, f));
    }
    for v in tb {
        let mut full = vec![FieldElement::ZERO; k];
        full.extend(v);
        basis.push(mat_vec(&p, &full, f));
    }
    let mut dims = bd;
    dims.extend(td);
    Ok((basis, dims))
}

fn columns_to_matrix(cols: &[Vec<FieldElement>]) -> Matrix {
    let n = cols.len();
    let rows: Vec<Vec<FieldElement>> = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    Matrix::from_rows(&rows)
}

pub fn composition_series(gens: &[Matrix], n: usize, f: &Field) -> Result<CompositionSeries, ModuleError> {
    let (cols, dims) = series_rec(gens, n, f)?;
    let basis = columns_to_matrix(&cols);
    let basis_inv = basis.inverse(f).expect("adapted basis is invertible");
    Ok(CompositionSeries {
        basis,
        basis_inv,
        dims,
    })
}

/// One composition factor: a basis (columns of the adapted basis lifting the
/// factor) and the action of each generator on it.
#[derive(Clone, Debug)]
pub struct ModuleFactor {
    pub basis: Vec<Vec<FieldElement>>,
    pub action: Vec<Matrix>,
}

/// Composition factors of the module, checked against the expected factor
/// dimensions (compared as multisets).
pub fn invariant_submodule_factors(
    gens: &[Matrix],
    dims: &[usize],
    f: &Field,
) -> Result<(CompositionSeries, Vec<ModuleFactor>), ModuleError> {
    let n: usize = dims.iter().sum();
    let series = composition_series(gens, n, f)?;
    let mut found = series.dims.clone();
    let mut expected = dims.to_vec();
    found.sort_unstable();
    expected.sort_unstable();
    if found != expected {
        return Err(ModuleError::FactorMismatch {
            expected: dims.to_vec(),
            found: series.dims.clone(),
        });
    }
    let per_gen: Vec<Vec<Matrix>> = gens.iter().map(|g| series.factor_actions(g, f)).collect();
    let mut factors = Vec::with_capacity(series.dims.len());
    let mut start = 0;
    for (i, &d) in series.dims.iter().enumerate() {
        let basis = (start..start + d)
            .map(|c| (0..n).map(|r| series.basis.get(r, c)).collect())
            .collect();
        let action = per_gen.iter().map(|acts| acts[i].clone()).collect();
        factors.push(ModuleFactor { basis, action });
        start += d;
    }
    Ok((series, factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::make_field;

    #[test]
    fn identity_alone_spans_scalars() {
        let f = make_field(5, 1).unwrap();
        let id = Matrix::identity(2);
        assert_eq!(enveloping_algebra_dim(std::slice::from_ref(&id), 2, &f), 1);
        assert!(!absolutely_irreducible(&[id], 2, &f));
    }

    #[test]
    fn diagonal_pair_is_not_absolutely_irreducible() {
        let f = make_field(5, 1).unwrap();
        let a = Matrix::from_ints(&f, &[&[2, 0], &[0, 3]]);
        let b = Matrix::from_ints(&f, &[&[4, 0], &[0, 1]]);
        assert_eq!(enveloping_algebra_dim(&[a.clone(), b.clone()], 2, &f), 2);
        assert!(!absolutely_irreducible(&[a, b], 2, &f));
    }

    #[test]
    fn natural_sl2_module_is_absolutely_irreducible() {
        let f = make_field(5, 1).unwrap();
        let u = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
        let w = Matrix::from_ints(&f, &[&[0, -1], &[1, 0]]);
        assert!(absolutely_irreducible(&[u.clone(), w.clone()], 2, &f));
        let series = composition_series(&[u, w], 2, &f).unwrap();
        assert_eq!(series.dims(), &[2]);
    }

    #[test]
    fn rotation_is_irreducible_but_not_absolutely() {
        // [[0,-1],[1,0]] over F_3 has no eigenvalue; its algebra is F_9.
        let f = make_field(3, 1).unwrap();
        let r = Matrix::from_ints(&f, &[&[0, -1], &[1, 0]]);
        let series = composition_series(std::slice::from_ref(&r), 2, &f).unwrap();
        assert_eq!(series.dims(), &[2]);
        assert!(!absolutely_irreducible(&[r], 2, &f));
    }

    #[test]
    fn upper_triangular_unipotent_has_two_factors() {
        let f = make_field(7, 1).unwrap();
        let u = Matrix::from_ints(&f, &[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]);
        let series = composition_series(std::slice::from_ref(&u), 3, &f).unwrap();
        assert_eq!(series.dims(), &[1, 1, 1]);
        let err = invariant_submodule_factors(&[u], &[2, 1], &f).unwrap_err();
        assert!(matches!(err, ModuleError::FactorMismatch { .. }));
    }
}
