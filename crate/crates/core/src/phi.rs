//! Solution sets of a presentation's relators inside `ID(X(q))`: exact
//! counting with class and centralizer-orbit reduction, the absolute
//! irreducibility and same-type filter, image classification, the subgroup
//! census behind the orbit identity, and a randomized search.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::{prime_power, Field};
use crate::fp::{Presentation, Word};
use crate::lietype::{
    adjoint_factor_dims, adjoint_generators, build_id_group, group_order, includes, LieClass, LieError, Variant,
    XType,
};
use crate::matgrp::{close_group, BitSet, MatGroup};
use crate::matrix::Matrix;
use crate::module::{absolutely_irreducible, composition_series, CompositionSeries, ModuleError};

#[derive(Debug, Error)]
pub enum PhiError {
    #[error("work budget of {0} units exhausted")]
    BudgetExceeded(u64),
    #[error("|H| = {order} does not divide {count}; a kept tuple has a nontrivial centralizer")]
    DivisibilityViolation { count: u64, order: u64 },
    #[error("subgroup of order {order} matches several descriptors: {found:?}")]
    Ambiguous { order: u64, found: Vec<ImageDescriptor> },
    #[error("group has a nontrivial center")]
    NotCenterless,
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

/// Shared work counter: DFS nodes plus closure sizes.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Budget {
    pub fn new(limit: u64) -> Budget {
        Budget {
            limit,
            used: AtomicU64::new(0),
        }
    }

    pub fn unlimited() -> Budget {
        Budget::new(u64::MAX)
    }

    pub fn charge(&self, units: u64) -> Result<(), PhiError> {
        let before = self.used.fetch_add(units, Ordering::Relaxed);
        if before.saturating_add(units) > self.limit {
            Err(PhiError::BudgetExceeded(self.limit))
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }
}

/// Position of a subgroup in a sandwich `eX(q0) ≤ Y ≤ ID(eX(q0))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImageDescriptor {
    /// `q0 = p^e0`.
    pub e0: u32,
    pub twist: u8,
    /// `|Y : eX(q0)|`.
    pub variant_index: u64,
    pub order: u64,
}

impl ImageDescriptor {
    pub fn q0(&self, p: u64) -> u64 {
        p.pow(self.e0)
    }

    pub fn label(&self, xtype: XType, p: u64) -> String {
        let q0 = self.q0(p);
        let (simple, full) = match (xtype, self.twist) {
            (XType::A1, _) => ("PSL2", "PGL2"),
            (XType::A2, 1) => ("PSL3", "PGL3"),
            (XType::A2, _) => ("PSU3", "PGU3"),
        };
        if self.variant_index == 1 {
            format!("{simple}({q0})")
        } else {
            format!("{full}({q0})")
        }
    }
}

/// A candidate descriptor with the order of its simple group.
#[derive(Clone, Copy, Debug)]
pub struct Candidate {
    pub desc: ImageDescriptor,
    pub simple_order: u64,
}

/// All sandwich groups of the class's type that embed in `ID(c(p^e))`.
pub fn sandwich_candidates(c: LieClass, p: u64, e: u32) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut push = |e0: u32, twist: u8, simple: u64, index: u64| {
        out.push(Candidate {
            desc: ImageDescriptor {
                e0,
                twist,
                variant_index: 1,
                order: simple,
            },
            simple_order: simple,
        });
        if index > 1 {
            out.push(Candidate {
                desc: ImageDescriptor {
                    e0,
                    twist,
                    variant_index: index,
                    order: simple * index,
                },
                simple_order: simple,
            });
        }
    };
    let linear = LieClass { xtype: c.xtype, d: 1 };
    let unitary = LieClass { xtype: XType::A2, d: 2 };
    for e0 in (1..=e).filter(|e0| e.is_multiple_of(*e0)) {
        let q0 = p.pow(e0);
        match (c.xtype, c.d) {
            (XType::A1, _) => {
                if q0 >= 4 {
                    let s = group_order(linear, q0, Variant::Simple);
                    push(e0, 1, s, group_order(linear, q0, Variant::InnerDiagonal) / s);
                }
            }
            (XType::A2, 1) => {
                let s = group_order(linear, q0, Variant::Simple);
                push(e0, 1, s, group_order(linear, q0, Variant::InnerDiagonal) / s);
                if e.is_multiple_of(2 * e0) && q0 >= 3 {
                    let s = group_order(unitary, q0, Variant::Simple);
                    push(e0, 2, s, group_order(unitary, q0, Variant::InnerDiagonal) / s);
                }
            }
            (XType::A2, _) => {
                if includes(2, e0 as u64, e as u64) && q0 >= 3 {
                    let s = group_order(unitary, q0, Variant::Simple);
                    push(e0, 2, s, group_order(unitary, q0, Variant::InnerDiagonal) / s);
                }
            }
        }
    }
    out.sort_by_key(|c| c.desc);
    out
}

/// Classifies the subgroup of `g` with sorted elements `elems` generated by
/// `gens`: order match against the candidates, confirmed by the derived
/// subgroup having the simple order and being perfect and simple.
pub fn classify_subgroup(
    g: &MatGroup,
    elems: &[u32],
    gens: &[u32],
    candidates: &[Candidate],
) -> Result<Option<ImageDescriptor>, PhiError> {
    let order = elems.len() as u64;
    let matches: Vec<&Candidate> = candidates.iter().filter(|c| c.desc.order == order).collect();
    if matches.is_empty() {
        return Ok(None);
    }
    let derived = g.derived_idx(gens);
    let dorder = derived.len() as u64;
    if !matches.iter().any(|c| c.simple_order == dorder) {
        return Ok(None);
    }
    let dgens = if dorder == order { gens.to_vec() } else { g.generating_set(&derived) };
    let perfect = dorder == order || g.derived_idx(&dgens).len() as u64 == dorder;
    if !perfect || !g.is_simple_idx(&derived, &dgens) {
        return Ok(None);
    }
    let found: Vec<ImageDescriptor> = matches
        .iter()
        .filter(|c| c.simple_order == dorder)
        .map(|c| c.desc)
        .collect();
    match found.len() {
        1 => Ok(Some(found[0])),
        _ => Err(PhiError::Ambiguous { order, found }),
    }
}

/// A representative tuple standing for `weight` tuples of its orbit class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedTuple {
    pub tuple: Vec<u32>,
    pub weight: u64,
}

/// Per-generator sets of admissible element indices from power relators.
fn prefilter(pres: &Presentation, h: &MatGroup) -> Vec<Vec<u32>> {
    let s = pres.s();
    let mut modulus = vec![0u64; s];
    for w in &pres.relators {
        if let Some((i, k)) = w.as_generator_power() {
            modulus[i - 1] = modulus[i - 1].gcd(&k);
        }
    }
    let orders = h.orders();
    modulus
        .iter()
        .map(|&k| {
            (0..h.len() as u32)
                .filter(|&x| k == 0 || k % orders[x as usize] as u64 == 0)
                .collect()
        })
        .collect()
}

/// Relators grouped by their largest generator index, power relators
/// (already enforced by the prefilter) and empty words dropped.
fn relators_by_depth(pres: &Presentation) -> Vec<Vec<Word>> {
    let mut out = vec![Vec::new(); pres.s() + 1];
    for w in &pres.relators {
        if w.is_empty() || w.as_generator_power().is_some() {
            continue;
        }
        out[w.max_generator()].push(w.clone());
    }
    out
}

fn satisfies(h: &MatGroup, w: &Word, tuple: &[u32]) -> bool {
    let f = h.field();
    let mut acc: Option<Matrix> = None;
    for &x in &w.0 {
        let i = tuple[x.unsigned_abs() as usize - 1];
        let idx = if x > 0 { i } else { h.inv_idx(i) };
        let m = h.element(idx);
        acc = Some(match acc {
            None => m.clone(),
            Some(a) => a.mul(m, f),
        });
    }
    acc.is_none_or(|a| a.is_identity())
}

fn dfs(
    h: &MatGroup,
    cands: &[Vec<u32>],
    rels: &[Vec<Word>],
    tuple: &mut Vec<u32>,
    weight: u64,
    budget: &Budget,
    out: &mut Vec<WeightedTuple>,
) -> Result<(), PhiError> {
    let depth = tuple.len();
    if depth == cands.len() {
        out.push(WeightedTuple {
            tuple: tuple.clone(),
            weight,
        });
        return Ok(());
    }
    budget.charge(cands[depth].len() as u64)?;
    for &x in &cands[depth] {
        tuple.push(x);
        if rels[depth + 1].iter().all(|w| satisfies(h, w, tuple)) {
            dfs(h, cands, rels, tuple, weight, budget, out)?;
        }
        tuple.pop();
    }
    Ok(())
}

/// `|Φ₀|` and the weighted representatives: first coordinate over class
/// representatives, second over orbits of the representative's centralizer,
/// the rest by depth-first search.
pub fn count_phi0(pres: &Presentation, h: &MatGroup, budget: &Budget) -> Result<(u64, Vec<WeightedTuple>), PhiError> {
    let cands = prefilter(pres, h);
    let rels = relators_by_depth(pres);
    let classes = h.classes();
    let reps: Vec<(u32, u64)> = classes
        .reps
        .iter()
        .zip(&classes.sizes)
        .filter(|(r, _)| cands[0].binary_search(r).is_ok())
        .map(|(&r, &s)| (r, s))
        .collect();
    let per_rep: Vec<Result<Vec<WeightedTuple>, PhiError>> = reps
        .par_iter()
        .map(|&(rep, size)| {
            let mut out = Vec::new();
            let first = [rep];
            if !rels[1].iter().all(|w| satisfies(h, w, &first)) {
                return Ok(out);
            }
            if cands.len() == 1 {
                out.push(WeightedTuple {
                    tuple: vec![rep],
                    weight: size,
                });
                return Ok(out);
            }
            let orbits = centralizer_orbits(h, rep, &cands[1], budget)?;
            let mut tuple = vec![rep];
            for (y, osize) in orbits {
                tuple.push(y);
                if rels[2].iter().all(|w| satisfies(h, w, &tuple)) {
                    dfs(h, &cands, &rels, &mut tuple, size * osize, budget, &mut out)?;
                }
                tuple.pop();
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_rep {
        all.extend(r?);
    }
    let count = all.iter().map(|t| t.weight).sum();
    Ok((count, all))
}

fn centralizer_orbits(h: &MatGroup, rep: u32, cands: &[u32], budget: &Budget) -> Result<Vec<(u32, u64)>, PhiError> {
    let actors = if rep == h.identity_index() {
        h.generator_indices().to_vec()
    } else {
        budget.charge(h.order())?;
        h.generating_set(&h.centralizer_idx(rep))
    };
    let inv: Vec<u32> = actors.iter().map(|&a| h.inv_idx(a)).collect();
    let mut mark = BitSet::new(h.len());
    let mut out = Vec::new();
    for &y in cands {
        if !mark.insert(y) {
            continue;
        }
        let mut size = 1u64;
        let mut queue = vec![y];
        while let Some(z) = queue.pop() {
            for (&a, &ai) in actors.iter().zip(&inv) {
                let w = h.mul_idx(h.mul_idx(a, z), ai);
                if mark.insert(w) {
                    size += 1;
                    queue.push(w);
                }
            }
        }
        budget.charge(size)?;
        out.push((y, size));
    }
    Ok(out)
}

/// Everything fixed for one `(class, q)`: the group, its module structure,
/// the candidate images and a per-subgroup classification cache.
pub struct PhiContext {
    pub class: LieClass,
    pub q: u64,
    pub p: u64,
    pub e: u32,
    pub h: MatGroup,
    pub dims: Vec<usize>,
    series: Option<CompositionSeries>,
    pub candidates: Vec<Candidate>,
    cache: Mutex<HashMap<Vec<u32>, Option<ImageDescriptor>>>,
}

fn module_series(gens: &[Matrix], dims: &[usize], f: &Field) -> Result<Option<CompositionSeries>, PhiError> {
    if dims.len() == 1 {
        return Ok(None);
    }
    let (series, _) = crate::module::invariant_submodule_factors(gens, dims, f)?;
    Ok(Some(series))
}

fn irreducible_on_factors(mats: &[Matrix], series: Option<&CompositionSeries>, f: &Field) -> bool {
    match series {
        None => absolutely_irreducible(mats, mats[0].dim(), f),
        Some(series) => {
            let blocks: Vec<Vec<Matrix>> = mats.iter().map(|m| series.factor_actions(m, f)).collect();
            series
                .dims()
                .iter()
                .enumerate()
                .all(|(i, &d)| {
                    let acts: Vec<Matrix> = blocks.iter().map(|b| b[i].clone()).collect();
                    absolutely_irreducible(&acts, d, f)
                })
        }
    }
}

impl PhiContext {
    pub fn new(class: LieClass, q: u64, cap: usize) -> Result<PhiContext, PhiError> {
        let h = build_id_group(class, q, cap)?;
        PhiContext::from_group(class, q, h)
    }

    pub fn from_group(class: LieClass, q: u64, h: MatGroup) -> Result<PhiContext, PhiError> {
        let (p, e) = prime_power(q).ok_or(LieError::BadQ(q))?;
        let dims = adjoint_factor_dims(class, p);
        let series = module_series(h.generators(), &dims, h.field())?;
        Ok(PhiContext {
            class,
            q,
            p,
            e,
            dims,
            series,
            candidates: sandwich_candidates(class, p, e),
            cache: Mutex::new(HashMap::new()),
            h,
        })
    }

    /// Whether the tuple acts absolutely irreducibly on every adjoint
    /// composition factor.
    pub fn irreducible(&self, tuple: &[u32]) -> bool {
        let mats: Vec<Matrix> = tuple.iter().map(|&i| self.h.element(i).clone()).collect();
        irreducible_on_factors(&mats, self.series.as_ref(), self.h.field())
    }

    /// Classifies the subgroup generated by an index tuple.
    pub fn classify_tuple(&self, tuple: &[u32], budget: &Budget) -> Result<Option<ImageDescriptor>, PhiError> {
        let Some(max) = self.candidates.iter().map(|c| c.desc.order).max() else {
            return Ok(None);
        };
        let Some(elems) = self.h.closure_idx(tuple, max as usize) else {
            return Ok(None);
        };
        budget.charge(elems.len() as u64)?;
        if !self.candidates.iter().any(|c| c.desc.order == elems.len() as u64) {
            return Ok(None);
        }
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&elems) {
            return Ok(*hit);
        }
        let result = classify_subgroup(&self.h, &elems, tuple, &self.candidates)?;
        self.cache.lock().expect("cache lock").insert(elems, result);
        Ok(result)
    }
}

/// Keeps the tuples whose image is absolutely irreducible on every factor
/// and of the same type, paired with the image descriptor.
pub fn filter_phi(
    ctx: &PhiContext,
    tuples: &[WeightedTuple],
    budget: &Budget,
) -> Result<Vec<(WeightedTuple, ImageDescriptor)>, PhiError> {
    let verdicts: Vec<Result<Option<ImageDescriptor>, PhiError>> = tuples
        .par_iter()
        .map(|t| {
            if !ctx.irreducible(&t.tuple) {
                return Ok(None);
            }
            ctx.classify_tuple(&t.tuple, budget)
        })
        .collect();
    let mut out = Vec::new();
    for (t, v) in tuples.iter().zip(verdicts) {
        if let Some(desc) = v? {
            out.push((t.clone(), desc));
        }
    }
    Ok(out)
}

/// `n_phi / |H|`, which must be exact.
pub fn orbit_count(n_phi: u64, h_order: u64) -> Result<u64, PhiError> {
    if !n_phi.is_multiple_of(h_order) {
        return Err(PhiError::DivisibilityViolation {
            count: n_phi,
            order: h_order,
        });
    }
    Ok(n_phi / h_order)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCount {
    pub e0: u32,
    pub twist: u8,
    pub variant_index: u64,
    pub order: u64,
    /// Number of `H`-orbits of kept tuples with this image.
    pub s_count: u64,
}

impl ImageCount {
    pub fn descriptor(&self) -> ImageDescriptor {
        ImageDescriptor {
            e0: self.e0,
            twist: self.twist,
            variant_index: self.variant_index,
            order: self.order,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiRecord {
    pub hash: String,
    pub xtype: XType,
    pub d: u8,
    pub q: u64,
    pub n_phi0: u64,
    pub n_phi: u64,
    pub orbit_count: u64,
    pub images: Vec<ImageCount>,
    pub exact: bool,
}

impl PhiRecord {
    pub fn class(&self) -> LieClass {
        LieClass {
            xtype: self.xtype,
            d: self.d,
        }
    }
}

/// Exact record for one presentation, class and `q`.
pub fn compute_record(pres: &Presentation, ctx: &PhiContext, budget: &Budget) -> Result<PhiRecord, PhiError> {
    let (n_phi0, reps) = count_phi0(pres, &ctx.h, budget)?;
    let kept = filter_phi(ctx, &reps, budget)?;
    let order = ctx.h.order();
    let n_phi: u64 = kept.iter().map(|(t, _)| t.weight).sum();
    let orbits = orbit_count(n_phi, order)?;
    let mut by_desc: BTreeMap<ImageDescriptor, u64> = BTreeMap::new();
    for (t, d) in &kept {
        *by_desc.entry(*d).or_default() += t.weight;
    }
    let mut images = Vec::new();
    for (d, w) in by_desc {
        images.push(ImageCount {
            e0: d.e0,
            twist: d.twist,
            variant_index: d.variant_index,
            order: d.order,
            s_count: orbit_count(w, order)?,
        });
    }
    Ok(PhiRecord {
        hash: pres.hash.clone(),
        xtype: ctx.class.xtype,
        d: ctx.class.d,
        q: ctx.q,
        n_phi0,
        n_phi,
        orbit_count: orbits,
        images,
        exact: true,
    })
}

/// Number of `T`-orbits of relator-satisfying tuples generating `T`. The
/// first coordinate runs over class representatives weighted by class size,
/// the rest over all of `T`; each tuple's generation is checked directly.
pub fn sj_oracle(pres: &Presentation, t: &MatGroup, budget: &Budget) -> Result<u64, PhiError> {
    if !t.is_centerless() {
        return Err(PhiError::NotCenterless);
    }
    let cands = prefilter(pres, t);
    let rels = relators_by_depth(pres);
    let order = t.order();
    let half = (order / 2) as usize;
    let classes = t.classes();
    let firsts: Vec<(u32, u64)> = cands[0]
        .iter()
        .filter_map(|&x| {
            let c = classes.class_of[x as usize] as usize;
            (classes.reps[c] == x).then_some((x, classes.sizes[c]))
        })
        .collect();
    let counts: Vec<Result<u64, PhiError>> = firsts
        .par_iter()
        .map(|&(x, weight)| {
            let mut tuple = vec![x];
            if !rels[1].iter().all(|w| satisfies(t, w, &tuple)) {
                return Ok(0);
            }
            let mut found = Vec::new();
            dfs(t, &cands, &rels, &mut tuple, 1, budget, &mut found)?;
            let mut n = 0;
            for wt in found {
                budget.charge(half as u64)?;
                let generates = match t.closure_idx(&wt.tuple, half) {
                    None => true,
                    Some(sub) => sub.len() as u64 == order,
                };
                n += u64::from(generates);
            }
            Ok(n * weight)
        })
        .collect();
    let mut total = 0;
    for c in counts {
        total += c?;
    }
    if total % order != 0 {
        return Err(PhiError::DivisibilityViolation { count: total, order });
    }
    Ok(total / order)
}

/// Conjugacy classes of subgroups of `H` with a given descriptor.
#[derive(Clone, Debug)]
pub struct Census {
    pub t: Ratio<u64>,
    /// Representative subgroup (sorted indices), its generators, and `|N_H(T)|`.
    pub classes: Vec<(Vec<u32>, Vec<u32>, u64)>,
}

/// `t = Σ |T| / |N_H(T)|` over conjugacy class representatives `T` of
/// subgroups of `H` with descriptor `desc`, by closing pairs.
pub fn tj_oracle(desc: ImageDescriptor, ctx: &PhiContext, budget: &Budget) -> Result<Census, PhiError> {
    let h = &ctx.h;
    let order = desc.order;
    if !h.order().is_multiple_of(order) {
        return Ok(Census {
            t: Ratio::from_integer(0),
            classes: Vec::new(),
        });
    }
    let orders = h.orders();
    let admissible: Vec<u32> = (0..h.len() as u32)
        .filter(|&x| order.is_multiple_of(orders[x as usize] as u64))
        .collect();
    let classes = h.classes();
    let reps: Vec<u32> = classes
        .reps
        .iter()
        .copied()
        .filter(|&r| order.is_multiple_of(orders[r as usize] as u64))
        .collect();
    let found: Vec<Result<Vec<(Vec<u32>, Vec<u32>)>, PhiError>> = reps
        .par_iter()
        .map(|&a| {
            let mut subs = Vec::new();
            for (b, _) in centralizer_orbits(h, a, &admissible, budget)? {
                let Some(elems) = h.closure_idx(&[a, b], order as usize) else {
                    continue;
                };
                budget.charge(elems.len() as u64)?;
                if elems.len() as u64 == order
                    && classify_subgroup(h, &elems, &[a, b], &ctx.candidates)? == Some(desc)
                {
                    subs.push((elems, vec![a, b]));
                }
            }
            Ok(subs)
        })
        .collect();
    let mut subgroups: BTreeMap<Vec<u32>, Vec<u32>> = BTreeMap::new();
    for f in found {
        for (elems, gens) in f? {
            subgroups.entry(elems).or_insert(gens);
        }
    }
    let mut seen: std::collections::HashSet<Vec<u32>> = std::collections::HashSet::new();
    let mut t = Ratio::from_integer(0u64);
    let mut out = Vec::new();
    for (elems, gens) in &subgroups {
        if seen.contains(elems) {
            continue;
        }
        let mut orbit = vec![elems.clone()];
        seen.insert(elems.clone());
        let mut i = 0;
        while i < orbit.len() {
            for &g in h.generator_indices() {
                let mut conj: Vec<u32> = orbit[i].iter().map(|&x| h.conj_idx(g, x)).collect();
                conj.sort_unstable();
                if seen.insert(conj.clone()) {
                    orbit.push(conj);
                }
            }
            i += 1;
        }
        budget.charge(orbit.len() as u64 * order)?;
        let norm = h.order() / orbit.len() as u64;
        let direct = h.normalizer_idx(elems, gens).len() as u64;
        assert_eq!(norm, direct, "orbit-stabilizer disagrees with the normalizer scan");
        t += Ratio::new(order, norm);
        out.push((elems.clone(), gens.clone(), norm));
    }
    Ok(Census { t, classes: out })
}

/// One term of the orbit identity.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityTerm {
    pub descriptor: ImageDescriptor,
    pub t_num: u64,
    pub t_den: u64,
    pub s: u64,
    /// `s_count` of the record for this descriptor.
    pub observed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub lhs: u64,
    pub rhs_num: u64,
    pub rhs_den: u64,
    pub holds: bool,
    pub terms: Vec<IdentityTerm>,
}

/// Checks `|Φ| = |H| Σ_j t_j s_j`, the left side from the exact count and
/// the right side from the subgroup census and the `s_j` scan.
pub fn orbit_identity_check(pres: &Presentation, ctx: &PhiContext, budget: &Budget) -> Result<IdentityReport, PhiError> {
    let record = compute_record(pres, ctx, budget)?;
    let mut sum = Ratio::from_integer(0u64);
    let mut terms = Vec::new();
    for cand in &ctx.candidates {
        let census = tj_oracle(cand.desc, ctx, budget)?;
        let s = match census.classes.first() {
            None => 0,
            Some((elems, gens, _)) => sj_oracle(pres, &ctx.h.subgroup(elems, gens), budget)?,
        };
        sum += census.t * Ratio::from_integer(s);
        let observed = record
            .images
            .iter()
            .find(|i| i.descriptor() == cand.desc)
            .map_or(0, |i| i.s_count);
        terms.push(IdentityTerm {
            descriptor: cand.desc,
            t_num: *census.t.numer(),
            t_den: *census.t.denom(),
            s,
            observed,
        });
    }
    let rhs = sum * Ratio::from_integer(ctx.h.order());
    Ok(IdentityReport {
        lhs: record.n_phi,
        rhs_num: *rhs.numer(),
        rhs_den: *rhs.denom(),
        holds: rhs == Ratio::from_integer(record.n_phi),
        terms,
    })
}

/// Random elements of the group generated by `gens` by product replacement.
pub struct ProductReplacement {
    state: Vec<Matrix>,
    acc: Matrix,
    rng: ChaCha8Rng,
    field: Arc<Field>,
}

impl ProductReplacement {
    pub fn new(gens: &[Matrix], field: Arc<Field>, seed: u64) -> ProductReplacement {
        let n = gens[0].dim();
        let mut state = Vec::new();
        while state.len() < 10 {
            state.extend(gens.iter().cloned());
        }
        let mut pr = ProductReplacement {
            state,
            acc: Matrix::identity(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
            field,
        };
        for _ in 0..60 {
            pr.next_element();
        }
        pr
    }

    pub fn next_element(&mut self) -> Matrix {
        let f = &self.field;
        let len = self.state.len();
        let i = self.rng.gen_range(0..len);
        let mut j = self.rng.gen_range(0..len - 1);
        if j >= i {
            j += 1;
        }
        let other = if self.rng.gen_bool(0.5) {
            self.state[j].clone()
        } else {
            self.state[j].inverse(f).expect("invertible")
        };
        self.state[i] = if self.rng.gen_bool(0.5) {
            self.state[i].mul(&other, f)
        } else {
            other.mul(&self.state[i], f)
        };
        self.acc = self.acc.mul(&self.state[i], f);
        self.acc.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomReport {
    pub trials: u64,
    pub satisfying: u64,
    pub kept: u64,
    pub found: Vec<ImageDescriptor>,
}

/// Samples random tuples from `ID(c(q))` without enumerating it and
/// classifies the images of those satisfying the relators. Positive
/// findings only.
pub fn random_search(
    pres: &Presentation,
    class: LieClass,
    q: u64,
    trials: u64,
    seed: u64,
    cap: usize,
) -> Result<RandomReport, PhiError> {
    let (p, e) = prime_power(q).ok_or(LieError::BadQ(q))?;
    let (gens, field) = adjoint_generators(class, q, Variant::InnerDiagonal)?;
    let dims = adjoint_factor_dims(class, p);
    let series = if dims.len() > 1 {
        let s = composition_series(&gens, class.adjoint_dim(), &field)?;
        Some(s)
    } else {
        None
    };
    let candidates = sandwich_candidates(class, p, e);
    let limit = candidates.iter().map(|c| c.desc.order).max().unwrap_or(0).min(cap as u64) as usize;
    let full_order = group_order(class, q, Variant::InnerDiagonal);
    let mut full_class: Option<Option<ImageDescriptor>> = None;
    let mut pr = ProductReplacement::new(&gens, field.clone(), seed);
    let mut report = RandomReport {
        trials,
        satisfying: 0,
        kept: 0,
        found: Vec::new(),
    };
    for _ in 0..trials {
        let tuple: Vec<Matrix> = (0..pres.s()).map(|_| pr.next_element()).collect();
        let ok = pres
            .relators
            .iter()
            .all(|w| crate::fp::evaluate_word(w, &tuple, &field).is_ok_and(|m| m.is_identity()));
        if !ok {
            continue;
        }
        report.satisfying += 1;
        if !irreducible_on_factors(&tuple, series.as_ref(), &field) {
            continue;
        }
        let Ok(k) = close_group(&tuple, field.clone(), limit) else {
            continue;
        };
        let cached = full_class.filter(|_| k.order() == full_order);
        let desc = if let Some(d) = cached {
            d
        } else {
            let all: Vec<u32> = (0..k.len() as u32).collect();
            let d = classify_subgroup(&k, &all, k.generator_indices(), &candidates)?;
            if k.order() == full_order {
                full_class = Some(d);
            }
            d
        };
        if let Some(d) = desc {
            report.kept += 1;
            if !report.found.contains(&d) {
                report.found.push(d);
            }
        }
    }
    report.found.sort();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::parse_presentation;
    use crate::lietype::build_simple_group;
    use crate::matgrp::DEFAULT_CAP;

    const A1: LieClass = LieClass { xtype: XType::A1, d: 1 };
    const HURWITZ: &str = "<x,y | x^2, y^3, (x*y)^7>";

    fn naive_phi0(pres: &Presentation, h: &MatGroup) -> u64 {
        let n = h.len() as u32;
        let s = pres.s();
        let mut count = 0;
        let mut idx = vec![0u32; s];
        'outer: loop {
            let mats: Vec<Matrix> = idx.iter().map(|&i| h.element(i).clone()).collect();
            if pres
                .relators
                .iter()
                .all(|w| crate::fp::evaluate_word(w, &mats, h.field()).unwrap().is_identity())
            {
                count += 1;
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < n {
                    continue 'outer;
                }
                *slot = 0;
            }
            return count;
        }
    }

    #[test]
    fn killed_generator_has_one_solution() {
        let pres = parse_presentation("<x | x>").unwrap();
        let h = build_id_group(A1, 5, DEFAULT_CAP).unwrap();
        assert_eq!(count_phi0(&pres, &h, &Budget::unlimited()).unwrap().0, 1);
    }

    #[test]
    fn free_rank_two_counts_every_pair() {
        let pres = Presentation::free(2);
        let h = build_id_group(A1, 5, DEFAULT_CAP).unwrap();
        assert_eq!(count_phi0(&pres, &h, &Budget::unlimited()).unwrap().0, 120 * 120);
    }

    #[test]
    fn hurwitz_count_matches_double_loop_at_q7() {
        let pres = parse_presentation(HURWITZ).unwrap();
        let h = build_id_group(A1, 7, DEFAULT_CAP).unwrap();
        let (n, _) = count_phi0(&pres, &h, &Budget::unlimited()).unwrap();
        assert_eq!(n, naive_phi0(&pres, &h));
        assert!(n > 0);
    }

    #[test]
    fn filter_examples_in_pgl2_5() {
        let ctx = PhiContext::new(A1, 5, DEFAULT_CAP).unwrap();
        let h = &ctx.h;
        let b = Budget::unlimited();
        let id = h.identity_index();
        assert!(!ctx.irreducible(&[id, id]));
        let gens = h.generator_indices();
        let pair = [gens[0], h.mul_idx(gens[1], gens[2])];
        assert_eq!(h.closure_full(&pair).len(), 120);
        let d = ctx.classify_tuple(&pair, &b).unwrap().unwrap();
        assert_eq!((d.e0, d.variant_index, d.order), (1, 2, 120));
        // A dihedral subgroup of order 12: an element of order 6 and an involution inverting it.
        let r = (0..h.len() as u32).find(|&x| h.order_of_idx(x) == 6).unwrap();
        let s = (0..h.len() as u32)
            .find(|&x| h.order_of_idx(x) == 2 && h.conj_idx(x, r) == h.inv_idx(r))
            .unwrap();
        assert_eq!(h.closure_full(&[r, s]).len(), 12);
        assert!(!ctx.irreducible(&[r, s]));
    }

    #[test]
    fn hurwitz_orbit_count_at_q7() {
        let pres = parse_presentation(HURWITZ).unwrap();
        let ctx = PhiContext::new(A1, 7, DEFAULT_CAP).unwrap();
        let rec = compute_record(&pres, &ctx, &Budget::unlimited()).unwrap();
        assert_eq!(rec.n_phi % 336, 0);
        assert_eq!(rec.orbit_count, 1);
        assert_eq!(rec.images.len(), 1);
        assert_eq!(rec.images[0].order, 168);
    }

    #[test]
    fn classify_psl2_7_in_pgl2_7() {
        let ctx = PhiContext::new(A1, 7, DEFAULT_CAP).unwrap();
        let h = &ctx.h;
        let derived = h.derived_idx(h.generator_indices());
        let gens = h.generating_set(&derived);
        let d = classify_subgroup(h, &derived, &gens, &ctx.candidates).unwrap().unwrap();
        assert_eq!(
            d,
            ImageDescriptor {
                e0: 1,
                twist: 1,
                variant_index: 1,
                order: 168
            }
        );
    }

    #[test]
    fn sym3_in_pgl2_4_is_not_same_type() {
        let ctx = PhiContext::new(A1, 4, DEFAULT_CAP).unwrap();
        let h = &ctx.h;
        let x = (0..h.len() as u32).find(|&x| h.order_of_idx(x) == 3).unwrap();
        let y = (0..h.len() as u32)
            .find(|&y| h.order_of_idx(y) == 2 && h.closure_full(&[x, y]).len() == 6)
            .unwrap();
        assert_eq!(ctx.classify_tuple(&[x, y], &Budget::unlimited()).unwrap(), None);
    }

    #[test]
    fn sj_examples() {
        let b = Budget::unlimited();
        let triv = build_simple_group(A1, 2, DEFAULT_CAP).unwrap();
        let triv = triv.subgroup(&[triv.identity_index()], &[]);
        assert_eq!(sj_oracle(&Presentation::free(1), &triv, &b).unwrap(), 1);
        let pres = parse_presentation(HURWITZ).unwrap();
        assert!(sj_oracle(&pres, &build_simple_group(A1, 7, DEFAULT_CAP).unwrap(), &b).unwrap() > 0);
        assert_eq!(sj_oracle(&pres, &build_simple_group(A1, 11, DEFAULT_CAP).unwrap(), &b).unwrap(), 0);
    }

    #[test]
    fn tj_examples() {
        let b = Budget::unlimited();
        let ctx = PhiContext::new(A1, 5, DEFAULT_CAP).unwrap();
        let whole = ImageDescriptor {
            e0: 1,
            twist: 1,
            variant_index: 2,
            order: 120,
        };
        assert_eq!(tj_oracle(whole, &ctx, &b).unwrap().t, Ratio::from_integer(1));
        let psl = ImageDescriptor {
            variant_index: 1,
            order: 60,
            ..whole
        };
        assert_eq!(tj_oracle(psl, &ctx, &b).unwrap().t, Ratio::new(1, 2));
        let psl7 = ImageDescriptor { order: 168, ..psl };
        assert_eq!(tj_oracle(psl7, &ctx, &b).unwrap().t, Ratio::from_integer(0));
    }

    #[test]
    fn identity_holds_for_hurwitz_at_q7() {
        let pres = parse_presentation(HURWITZ).unwrap();
        let ctx = PhiContext::new(A1, 7, DEFAULT_CAP).unwrap();
        let report = orbit_identity_check(&pres, &ctx, &Budget::unlimited()).unwrap();
        assert!(report.holds, "{report:?}");
    }

    #[test]
    fn identity_is_vacuous_when_generators_die() {
        let pres = parse_presentation("<x,y | x, y>").unwrap();
        let ctx = PhiContext::new(A1, 5, DEFAULT_CAP).unwrap();
        let report = orbit_identity_check(&pres, &ctx, &Budget::unlimited()).unwrap();
        assert_eq!(report.lhs, 0);
        assert!(report.holds);
    }

    #[test]
    fn budget_is_enforced() {
        let pres = Presentation::free(2);
        let h = build_id_group(A1, 7, DEFAULT_CAP).unwrap();
        assert!(matches!(
            count_phi0(&pres, &h, &Budget::new(100)),
            Err(PhiError::BudgetExceeded(100))
        ));
    }

    #[test]
    fn random_search_examples() {
        let killed = parse_presentation("<x | x>").unwrap();
        let r = random_search(&killed, A1, 7, 50, 1, DEFAULT_CAP).unwrap();
        assert!(r.found.is_empty());
        let r = random_search(&Presentation::free(2), A1, 7, 200, 1, DEFAULT_CAP).unwrap();
        assert!(!r.found.is_empty());
    }
}
