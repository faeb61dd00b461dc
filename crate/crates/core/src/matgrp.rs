//! Finite matrix groups with full element enumeration.
//!
//! Elements are sorted by their row-major entries and addressed by `u32`
//! index; most algorithms work on index sets so that subgroups of an
//! enumerated group cost nothing beyond their index lists.

use std::hash::BuildHasher;
use std::sync::{Arc, OnceLock};

use hashbrown::{DefaultHashBuilder, HashTable};
use thiserror::Error;

use crate::ff::Field;
use crate::matrix::Matrix;

pub use crate::module::{absolutely_irreducible, invariant_submodule_factors};

/// Default enumeration cap.
pub const DEFAULT_CAP: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("group closure exceeded the enumeration cap of {cap} elements")]
    CapExceeded { cap: usize },
    #[error("generator {index} is not invertible")]
    Singular { index: usize },
    #[error("generators have inconsistent dimensions")]
    DimensionMismatch,
    #[error("the given group is not a subgroup of the ambient group")]
    NotSubgroup,
}

/// Conjugacy classes: representative (least index in its class), size, and
/// the class of every element.
#[derive(Clone, Debug)]
pub struct ClassData {
    pub reps: Vec<u32>,
    pub sizes: Vec<u64>,
    pub class_of: Vec<u32>,
}

pub struct MatGroup {
    field: Arc<Field>,
    dim: usize,
    generators: Vec<Matrix>,
    elements: Vec<Matrix>,
    table: HashTable<u32>,
    hasher: DefaultHashBuilder,
    identity: u32,
    gen_idx: Vec<u32>,
    inverses: OnceLock<Vec<u32>>,
    orders: OnceLock<Vec<u32>>,
    classes: OnceLock<ClassData>,
}

impl std::fmt::Debug for MatGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatGroup")
            .field("field", &self.field)
            .field("dim", &self.dim)
            .field("order", &self.elements.len())
            .finish()
    }
}

/// Fixed-size bit set over element indices.
pub(crate) struct BitSet(Vec<u64>);

impl BitSet {
    pub(crate) fn new(n: usize) -> BitSet {
        BitSet(vec![0; n.div_ceil(64)])
    }

    #[inline]
    pub(crate) fn insert(&mut self, i: u32) -> bool {
        let (w, b) = ((i / 64) as usize, i % 64);
        let fresh = self.0[w] & (1 << b) == 0;
        self.0[w] |= 1 << b;
        fresh
    }

    #[inline]
    pub(crate) fn contains(&self, i: u32) -> bool {
        self.0[(i / 64) as usize] & (1 << (i % 64)) != 0
    }
}

/// Breadth-first closure of `generators` under multiplication.
pub fn close_group(generators: &[Matrix], field: Arc<Field>, cap: usize) -> Result<MatGroup, GroupError> {
    let dim = generators.first().map_or(1, Matrix::dim);
    if generators.iter().any(|g| g.dim() != dim) {
        return Err(GroupError::DimensionMismatch);
    }
    for (index, g) in generators.iter().enumerate() {
        if g.det(&field).is_zero() {
            return Err(GroupError::Singular { index });
        }
    }
    let mut seen: hashbrown::HashSet<Matrix> = hashbrown::HashSet::new();
    let id = Matrix::identity(dim);
    seen.insert(id.clone());
    let mut order = vec![id];
    let mut i = 0;
    while i < order.len() {
        for g in generators {
            let y = order[i].mul(g, &field);
            if !seen.contains(&y) {
                if order.len() >= cap {
                    return Err(GroupError::CapExceeded { cap });
                }
                seen.insert(y.clone());
                order.push(y);
            }
        }
        i += 1;
    }
    drop(seen);
    Ok(MatGroup::from_sorted(field, dim, generators.to_vec(), order))
}

impl MatGroup {
    fn from_sorted(field: Arc<Field>, dim: usize, generators: Vec<Matrix>, mut elements: Vec<Matrix>) -> MatGroup {
        elements.sort_unstable();
        elements.dedup();
        let hasher = DefaultHashBuilder::default();
        let mut table = HashTable::with_capacity(elements.len());
        for (i, m) in elements.iter().enumerate() {
            table.insert_unique(hasher.hash_one(m), i as u32, |&j| hasher.hash_one(&elements[j as usize]));
        }
        let mut group = MatGroup {
            field,
            dim,
            generators: Vec::new(),
            elements,
            table,
            hasher,
            identity: 0,
            gen_idx: Vec::new(),
            inverses: OnceLock::new(),
            orders: OnceLock::new(),
            classes: OnceLock::new(),
        };
        group.identity = group.index_of(&Matrix::identity(dim)).expect("identity present");
        group.gen_idx = generators
            .iter()
            .map(|g| group.index_of(g).expect("generator present"))
            .collect();
        group.generators = generators;
        group
    }

    /// The subgroup on the given (closed) index set of this group, generated
    /// by the elements at `gens`.
    pub fn subgroup(&self, elems: &[u32], gens: &[u32]) -> MatGroup {
        let elements = elems.iter().map(|&i| self.elements[i as usize].clone()).collect();
        let generators = gens.iter().map(|&i| self.elements[i as usize].clone()).collect();
        MatGroup::from_sorted(self.field.clone(), self.dim, generators, elements)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn field_arc(&self) -> Arc<Field> {
        self.field.clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    pub fn generator_indices(&self) -> &[u32] {
        &self.gen_idx
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    #[inline]
    pub fn element(&self, i: u32) -> &Matrix {
        &self.elements[i as usize]
    }

    pub fn identity_index(&self) -> u32 {
        self.identity
    }

    pub fn index_of(&self, m: &Matrix) -> Option<u32> {
        let h = self.hasher.hash_one(m);
        self.table.find(h, |&i| &self.elements[i as usize] == m).copied()
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        self.index_of(m).is_some()
    }

    #[inline]
    pub fn mul_idx(&self, a: u32, b: u32) -> u32 {
        let m = self.elements[a as usize].mul(&self.elements[b as usize], &self.field);
        self.index_of(&m).expect("group is closed under products")
    }

    pub fn inverses(&self) -> &[u32] {
        self.inverses.get_or_init(|| {
            let mut inv = vec![u32::MAX; self.elements.len()];
            for i in 0..self.elements.len() {
                if inv[i] != u32::MAX {
                    continue;
                }
                let m = self.elements[i].inverse(&self.field).expect("invertible element");
                let j = self.index_of(&m).expect("group is closed under inverses");
                inv[i] = j;
                inv[j as usize] = i as u32;
            }
            inv
        })
    }

    #[inline]
    pub fn inv_idx(&self, a: u32) -> u32 {
        self.inverses()[a as usize]
    }

    /// `g x g^-1`.
    pub fn conj_idx(&self, g: u32, x: u32) -> u32 {
        let f = &self.field;
        let m = self.elements[g as usize]
            .mul(&self.elements[x as usize], f)
            .mul(&self.elements[self.inv_idx(g) as usize], f);
        self.index_of(&m).expect("group is closed under conjugation")
    }

    /// Orders of all elements, indexed like `elements`.
    pub fn orders(&self) -> &[u32] {
        self.orders.get_or_init(|| {
            let n = self.elements.len();
            let mut ord = vec![0u32; n];
            for i in 0..n {
                if ord[i] != 0 {
                    continue;
                }
                let mut powers = vec![i as u32];
                let mut cur = i as u32;
                while cur != self.identity {
                    cur = self.mul_idx(cur, i as u32);
                    powers.push(cur);
                }
                let k = powers.len() as u32;
                for (j, &x) in powers.iter().enumerate() {
                    let e = j as u32 + 1;
                    ord[x as usize] = k / num_integer::gcd(e, k);
                }
            }
            ord
        })
    }

    pub fn order_of_idx(&self, a: u32) -> u32 {
        self.orders()[a as usize]
    }

    pub fn classes(&self) -> &ClassData {
        self.classes.get_or_init(|| {
            let n = self.elements.len();
            let gen_inv: Vec<u32> = self.gen_idx.iter().map(|&g| self.inv_idx(g)).collect();
            let mut class_of = vec![u32::MAX; n];
            let mut reps = Vec::new();
            let mut sizes = Vec::new();
            for i in 0..n {
                if class_of[i] != u32::MAX {
                    continue;
                }
                let c = reps.len() as u32;
                reps.push(i as u32);
                class_of[i] = c;
                let mut queue = vec![i as u32];
                let mut size = 1u64;
                while let Some(x) = queue.pop() {
                    for (&g, &gi) in self.gen_idx.iter().zip(&gen_inv) {
                        let y = self.mul_idx(self.mul_idx(g, x), gi);
                        if class_of[y as usize] == u32::MAX {
                            class_of[y as usize] = c;
                            size += 1;
                            queue.push(y);
                        }
                    }
                }
                sizes.push(size);
            }
            ClassData { reps, sizes, class_of }
        })
    }

    /// Indices of the elements commuting with `x`, ascending.
    pub fn centralizer_idx(&self, x: u32) -> Vec<u32> {
        let xm = &self.elements[x as usize];
        (0..self.elements.len() as u32)
            .filter(|&g| {
                let gm = &self.elements[g as usize];
                gm.mul(xm, &self.field) == xm.mul(gm, &self.field)
            })
            .collect()
    }

    /// Closure of the index set `gens`; `None` once more than `limit`
    /// elements have been found. The result is sorted.
    pub fn closure_idx(&self, gens: &[u32], limit: usize) -> Option<Vec<u32>> {
        let mut mark = BitSet::new(self.elements.len());
        mark.insert(self.identity);
        let mut out = vec![self.identity];
        let mut i = 0;
        while i < out.len() {
            for &g in gens {
                let y = self.mul_idx(out[i], g);
                if mark.insert(y) {
                    out.push(y);
                    if out.len() > limit {
                        return None;
                    }
                }
            }
            i += 1;
        }
        out.sort_unstable();
        Some(out)
    }

    /// Closure of the index set `gens`, sorted.
    pub fn closure_full(&self, gens: &[u32]) -> Vec<u32> {
        self.closure_idx(gens, usize::MAX).expect("unbounded closure")
    }

    /// A small generating set of a subgroup given by its sorted index set.
    pub fn generating_set(&self, elems: &[u32]) -> Vec<u32> {
        let mut gens = Vec::new();
        let mut cur = vec![self.identity];
        for &x in elems {
            if cur.binary_search(&x).is_err() {
                gens.push(x);
                cur = self.closure_full(&gens);
                if cur.len() == elems.len() {
                    break;
                }
            }
        }
        gens
    }

    /// Normal closure of `xs` in the subgroup generated by `within`.
    pub fn normal_closure_idx(&self, xs: &[u32], within: &[u32]) -> Vec<u32> {
        let mut gens: Vec<u32> = xs.to_vec();
        let mut cur = self.closure_full(&gens);
        loop {
            let mut grew = false;
            'scan: for &w in within {
                for i in 0..gens.len() {
                    let y = self.conj_idx(w, gens[i]);
                    if cur.binary_search(&y).is_err() {
                        gens.push(y);
                        cur = self.closure_full(&gens);
                        grew = true;
                        break 'scan;
                    }
                }
            }
            if !grew {
                return cur;
            }
        }
    }

    /// Derived subgroup of the subgroup generated by `gens`.
    pub fn derived_idx(&self, gens: &[u32]) -> Vec<u32> {
        let mut comms = Vec::new();
        for (i, &a) in gens.iter().enumerate() {
            for &b in &gens[i + 1..] {
                let ab = self.mul_idx(a, b);
                let ba = self.mul_idx(b, a);
                let c = self.mul_idx(ab, self.inv_idx(ba));
                if c != self.identity && !comms.contains(&c) {
                    comms.push(c);
                }
            }
        }
        if comms.is_empty() {
            return vec![self.identity];
        }
        self.normal_closure_idx(&comms, gens)
    }

    /// Whether the subgroup with sorted index set `elems` and generators
    /// `gens` is simple, by normal closures of its class representatives.
    pub fn is_simple_idx(&self, elems: &[u32], gens: &[u32]) -> bool {
        if elems.len() <= 1 {
            return false;
        }
        let gen_inv: Vec<u32> = gens.iter().map(|&g| self.inv_idx(g)).collect();
        let mut done = BitSet::new(self.elements.len());
        done.insert(self.identity);
        for &x in elems {
            if done.contains(x) {
                continue;
            }
            let mut queue = vec![x];
            done.insert(x);
            while let Some(y) = queue.pop() {
                for (&g, &gi) in gens.iter().zip(&gen_inv) {
                    let z = self.mul_idx(self.mul_idx(g, y), gi);
                    if done.insert(z) {
                        queue.push(z);
                    }
                }
            }
            if self.normal_closure_idx(&[x], gens).len() != elems.len() {
                return false;
            }
        }
        true
    }

    /// `{g : g S g^-1 = S}` for the subgroup with sorted elements `sub` and
    /// generators `sub_gens`, ascending.
    pub fn normalizer_idx(&self, sub: &[u32], sub_gens: &[u32]) -> Vec<u32> {
        (0..self.elements.len() as u32)
            .filter(|&g| sub_gens.iter().all(|&s| sub.binary_search(&self.conj_idx(g, s)).is_ok()))
            .collect()
    }

    /// Orbits of the group generated by `actors` acting by conjugation,
    /// as (least element, orbit size), ascending.
    pub fn conjugation_orbits(&self, actors: &[u32]) -> Vec<(u32, u64)> {
        let inv: Vec<u32> = actors.iter().map(|&g| self.inv_idx(g)).collect();
        let mut mark = BitSet::new(self.elements.len());
        let mut out = Vec::new();
        for x in 0..self.elements.len() as u32 {
            if !mark.insert(x) {
                continue;
            }
            let mut size = 1u64;
            let mut queue = vec![x];
            while let Some(y) = queue.pop() {
                for (&g, &gi) in actors.iter().zip(&inv) {
                    let z = self.mul_idx(self.mul_idx(g, y), gi);
                    if mark.insert(z) {
                        size += 1;
                        queue.push(z);
                    }
                }
            }
            out.push((x, size));
        }
        out
    }

    /// Whether the center is trivial.
    pub fn is_centerless(&self) -> bool {
        let n = self.elements.len() as u32;
        (0..n).filter(|&z| z != self.identity).all(|z| {
            let zm = &self.elements[z as usize];
            self.generators.iter().any(|g| g.mul(zm, &self.field) != zm.mul(g, &self.field))
        })
    }
}

/// Least `k ≥ 1` with `m^k = 1`.
pub fn element_order(m: &Matrix, f: &Field) -> u64 {
    let mut k = 1;
    let mut cur = m.clone();
    while !cur.is_identity() {
        cur = cur.mul(m, f);
        k += 1;
    }
    k
}

/// `{g ∈ ambient : g·sub·g⁻¹ = sub}`.
pub fn normalizer(sub: &MatGroup, ambient: &MatGroup) -> Result<MatGroup, GroupError> {
    let mut idx: Vec<u32> = sub
        .elements()
        .iter()
        .map(|m| ambient.index_of(m).ok_or(GroupError::NotSubgroup))
        .collect::<Result<_, _>>()?;
    idx.sort_unstable();
    let gens = ambient.generating_set(&idx);
    let norm = ambient.normalizer_idx(&idx, &gens);
    let norm_gens = ambient.generating_set(&norm);
    Ok(ambient.subgroup(&norm, &norm_gens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::make_field;
    use rand::{Rng, SeedableRng};

    fn field(p: u64, e: u32) -> Arc<Field> {
        Arc::new(make_field(p, e).unwrap())
    }

    #[test]
    fn trivial_group() {
        let f = field(5, 1);
        let g = close_group(&[Matrix::identity(2)], f, 10).unwrap();
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn sl2_f2_has_order_6() {
        let f = field(2, 1);
        let a = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
        let b = Matrix::from_ints(&f, &[&[0, 1], &[1, 0]]);
        assert_eq!(close_group(&[a, b], f, 100).unwrap().order(), 6);
    }

    #[test]
    fn sl2_f3_has_order_24() {
        let f = field(3, 1);
        let a = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
        let b = Matrix::from_ints(&f, &[&[0, -1], &[1, 0]]);
        let g = close_group(&[a, b], f, 100).unwrap();
        assert_eq!(g.order(), 24);
        let classes = g.classes();
        assert_eq!(classes.sizes.iter().sum::<u64>(), 24);
        assert_eq!(classes.reps.len(), 7);
    }

    #[test]
    fn cap_is_enforced() {
        let f = field(3, 1);
        let a = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
        let b = Matrix::from_ints(&f, &[&[0, -1], &[1, 0]]);
        assert_eq!(close_group(&[a, b], f, 23).unwrap_err(), GroupError::CapExceeded { cap: 23 });
    }

    #[test]
    fn element_order_examples() {
        let f2 = make_field(2, 1).unwrap();
        let f7 = make_field(7, 1).unwrap();
        assert_eq!(element_order(&Matrix::identity(3), &f2), 1);
        assert_eq!(element_order(&Matrix::from_ints(&f2, &[&[0, 1], &[1, 0]]), &f2), 2);
        assert_eq!(element_order(&Matrix::from_ints(&f7, &[&[1, 1], &[0, 1]]), &f7), 7);
    }

    #[test]
    fn closure_is_closed_and_orders_agree() {
        let f = field(5, 1);
        let a = Matrix::from_ints(&f, &[&[2, 0], &[0, 1]]);
        let b = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
        let c = Matrix::from_ints(&f, &[&[0, 1], &[1, 0]]);
        let g = close_group(&[a, b, c], f.clone(), 1000).unwrap();
        assert_eq!(g.order(), 480);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x = rng.gen_range(0..g.len() as u32);
            let y = rng.gen_range(0..g.len() as u32);
            let xy = g.element(x).mul(g.element(y), &f);
            assert!(g.contains(&xy));
            assert!(g.contains(&g.element(x).inverse(&f).unwrap()));
            assert_eq!(g.order_of_idx(x) as u64, element_order(g.element(x), &f));
        }
    }

    #[test]
    fn normalizer_of_whole_and_trivial() {
        let f = field(3, 1);
        let a = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
        let b = Matrix::from_ints(&f, &[&[0, -1], &[1, 0]]);
        let g = close_group(&[a, b], f.clone(), 100).unwrap();
        assert_eq!(normalizer(&g, &g).unwrap().order(), 24);
        let triv = close_group(&[Matrix::identity(2)], f.clone(), 1).unwrap();
        assert_eq!(normalizer(&triv, &g).unwrap().order(), 24);
        let other = close_group(&[Matrix::from_ints(&f, &[&[2, 0], &[0, 1]])], f, 10).unwrap();
        assert_eq!(normalizer(&other, &g).unwrap_err(), GroupError::NotSubgroup);
    }

    #[test]
    fn derived_subgroup_of_gl2_f3_is_sl2() {
        let f = field(3, 1);
        let a = Matrix::from_ints(&f, &[&[2, 0], &[0, 1]]);
        let b = Matrix::from_ints(&f, &[&[1, 1], &[0, 1]]);
        let c = Matrix::from_ints(&f, &[&[0, 1], &[1, 0]]);
        let g = close_group(&[a, b, c], f, 100).unwrap();
        assert_eq!(g.order(), 48);
        let d = g.derived_idx(g.generator_indices());
        assert_eq!(d.len(), 24);
        assert!(!g.is_simple_idx(&d, &g.generating_set(&d)));
    }
}
