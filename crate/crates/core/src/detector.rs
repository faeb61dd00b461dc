//! Empirical readings of exact counts across many fields: growth of the
//! solution counts in `q`, periodicity of the nonempty exponents in one
//! characteristic, and the unitary-versus-linear image comparison.

use serde::{Deserialize, Serialize};

use crate::ff::prime_power;
use crate::fp::Presentation;
use crate::lietype::{d_part, LieClass, XType};
use crate::matgrp::GroupError;
use crate::lietype::LieError;
use crate::phi::{compute_record, random_search, Budget, PhiContext, PhiError, PhiRecord};

pub const HEURISTIC_DISCLAIMER: &str =
    "heuristic: evidence from a finite window of fields; no finite scan decides behaviour over all q";

/// Slack allowed below `x + 1` when reading superlinear growth.
pub const EXPONENT_TOLERANCE: f64 = 0.5;
/// Nonzero points needed before a growth exponent is trusted.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NoQuotients,
    BoundedOrbitCounts,
    SuperlinearGrowth,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub q: u64,
    pub n_phi: u64,
    pub orbit_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub xtype: XType,
    pub d: u8,
    pub verdict: Verdict,
    /// Least-squares slope of `ln |Φ|` against `ln q` over the nonzero points.
    pub rho: Option<f64>,
    /// Normal-approximation 95% interval for `rho`.
    pub rho_interval: Option<(f64, f64)>,
    pub points: Vec<GrowthPoint>,
    pub notes: Vec<String>,
    pub disclaimer: String,
}

/// Least-squares slope and its standard error.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<(f64, Option<f64>)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let se = (n > 2).then(|| {
        let intercept = my - slope * mx;
        let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    });
    Some((slope, se))
}

/// Verdict from exact records of one class.
pub fn growth_verdict(class: LieClass, records: &[PhiRecord]) -> GrowthVerdict {
    let mut points: Vec<GrowthPoint> = records
        .iter()
        .map(|r| GrowthPoint {
            q: r.q,
            n_phi: r.n_phi,
            orbit_count: r.orbit_count,
        })
        .collect();
    points.sort_by_key(|p| p.q);
    let x = class.adjoint_dim() as f64;
    let nonzero: Vec<&GrowthPoint> = points.iter().filter(|p| p.n_phi > 0).collect();
    let logs: Vec<(f64, f64)> = nonzero
        .iter()
        .map(|p| ((p.q as f64).ln(), (p.n_phi as f64).ln()))
        .collect();
    let fit = fit_exponent(&logs);
    let rho = fit.map(|f| f.0);
    let rho_interval = fit.and_then(|(s, se)| se.map(|e| (s - 1.96 * e, s + 1.96 * e)));
    let mut notes = Vec::new();
    let verdict = if nonzero.is_empty() {
        notes.push("no field in the window admits a same-type image".to_string());
        Verdict::NoQuotients
    } else if nonzero.len() >= MIN_FIT_POINTS && rho.is_some_and(|r| r >= x + 1.0 - EXPONENT_TOLERANCE) {
        notes.push(format!(
            "many images per field: |Φ| grows like q^{:.2}, beyond |H| ~ q^{x}; orbit counts rise with q",
            rho.unwrap_or_default()
        ));
        Verdict::SuperlinearGrowth
    } else if nonzero.iter().all(|p| p.orbit_count < p.q) {
        let max = nonzero.iter().map(|p| p.orbit_count).max().unwrap_or(0);
        notes.push(format!(
            "orbit counts stay below q (at most {max}); consistent with |Φ| ~ c·q^{x} and a bounded number of images per field"
        ));
        Verdict::BoundedOrbitCounts
    } else {
        notes.push("counts neither vanish, stay small, nor fit a superlinear exponent".to_string());
        Verdict::Inconclusive
    };
    let mut chars: Vec<u64> = nonzero.iter().filter_map(|p| prime_power(p.q).map(|(p, _)| p)).collect();
    chars.sort_unstable();
    chars.dedup();
    if !nonzero.is_empty() {
        notes.push(format!("images seen in characteristics {chars:?}"));
    }
    if class.d == 2 {
        let parts: Vec<(u64, u64)> = nonzero
            .iter()
            .filter_map(|p| prime_power(p.q).map(|(_, e)| (p.q, d_part(2, e as u64))))
            .collect();
        let max_part = parts.iter().map(|p| p.1).max().unwrap_or(1);
        notes.push(format!(
            "growing 2-part: 2-parts of e at nonzero q {parts:?}; counts {} as the 2-part grows",
            if max_part > 1 { "persist" } else { "are not observed" }
        ));
    }
    GrowthVerdict {
        xtype: class.xtype,
        d: class.d,
        verdict,
        rho,
        rho_interval,
        points,
        notes,
        disclaimer: HEURISTIC_DISCLAIMER.to_string(),
    }
}

/// Exact records for every `q` of the window, then the verdict.
pub fn growth_scan(
    pres: &Presentation,
    class: LieClass,
    qs: &[u64],
    cap: usize,
    budget: &Budget,
) -> Result<(GrowthVerdict, Vec<PhiRecord>), PhiError> {
    let mut records = Vec::with_capacity(qs.len());
    for &q in qs {
        let ctx = PhiContext::new(class, q, cap)?;
        records.push(compute_record(pres, &ctx, budget)?);
    }
    Ok((growth_verdict(class, &records), records))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub p: u64,
    pub exponents: Vec<u32>,
    /// Whether the solution set is nonempty at `p^e`, per exponent.
    pub bits: Vec<bool>,
    /// Proposed `(onset, period)`, least period first, then least onset.
    pub onset: Option<u32>,
    pub period: Option<u32>,
    /// Set when the budget or cap stopped the scan early.
    pub truncated: bool,
    pub disclaimer: String,
}

/// Least `(N, B)` with `bits[e] = bits[e + N]` whenever `B ≤ e` and `e + N`
/// is scanned, and at least one full repeat `B + 2N - 1 ≤ e_max` observed.
/// Exponents start at 1.
pub fn propose_period(bits: &[bool]) -> Option<(u32, u32)> {
    let len = bits.len() as u32;
    if len == 0 {
        return None;
    }
    for n in 1..=len {
        for b in 1..=len {
            if b + 2 * n - 1 > len {
                break;
            }
            let ok = (b..=len)
                .filter(|e| e + n <= len)
                .all(|e| bits[(e - 1) as usize] == bits[(e + n - 1) as usize]);
            if ok {
                return Some((b, n));
            }
        }
    }
    None
}

pub fn residue_scan(
    p: u64,
    class: LieClass,
    pres: &Presentation,
    e_max: u32,
    cap: usize,
    budget: &Budget,
) -> Result<PeriodicityReport, PhiError> {
    let mut exponents = Vec::new();
    let mut bits = Vec::new();
    let mut truncated = false;
    for e in 1..=e_max {
        let q = p.pow(e);
        if class.d == 2 && q < 3 {
            exponents.push(e);
            bits.push(false);
            continue;
        }
        let outcome = PhiContext::new(class, q, cap).and_then(|ctx| compute_record(pres, &ctx, budget));
        match outcome {
            Ok(rec) => {
                exponents.push(e);
                bits.push(rec.n_phi > 0);
            }
            Err(PhiError::BudgetExceeded(_)) | Err(PhiError::Lie(LieError::Group(GroupError::CapExceeded { .. }))) => {
                truncated = true;
                break;
            }
            Err(other) => return Err(other),
        }
    }
    let proposal = propose_period(&bits);
    if let Some((b, n)) = proposal {
        for e in b..=bits.len() as u32 {
            if e + n <= bits.len() as u32 {
                assert_eq!(bits[(e - 1) as usize], bits[(e + n - 1) as usize]);
            }
        }
    }
    Ok(PeriodicityReport {
        p,
        exponents,
        bits,
        onset: proposal.map(|x| x.0),
        period: proposal.map(|x| x.1),
        truncated,
        disclaimer: HEURISTIC_DISCLAIMER.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosscheckRow {
    pub q: u64,
    pub unitary: Vec<String>,
    pub linear: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub rows: Vec<CrosscheckRow>,
    /// Characteristics with unitary images but no linear ones in the window.
    pub unmatched_characteristics: Vec<u64>,
    pub trials: u64,
    pub disclaimer: String,
}

/// Unitary and linear A2 image inventories side by side, from random search.
pub fn untwisted_crosscheck(
    pres: &Presentation,
    qs: &[u64],
    trials: u64,
    seed: u64,
    cap: usize,
) -> Result<CrosscheckReport, PhiError> {
    let unitary = LieClass { xtype: XType::A2, d: 2 };
    let linear = LieClass { xtype: XType::A2, d: 1 };
    let mut rows = Vec::new();
    for &q in qs {
        let (p, _) = prime_power(q).ok_or(LieError::BadQ(q))?;
        let u = if q >= 3 {
            random_search(pres, unitary, q, trials, seed, cap)?
                .found
                .iter()
                .map(|d| d.label(XType::A2, p))
                .collect()
        } else {
            Vec::new()
        };
        let l = random_search(pres, linear, q, trials, seed, cap)?
            .found
            .iter()
            .map(|d| d.label(XType::A2, p))
            .collect();
        rows.push(CrosscheckRow { q, unitary: u, linear: l });
    }
    let mut unmatched = Vec::new();
    for row in &rows {
        let p = prime_power(row.q).map_or(0, |x| x.0);
        let has_linear = rows
            .iter()
            .any(|r| prime_power(r.q).map(|x| x.0) == Some(p) && !r.linear.is_empty());
        if !row.unitary.is_empty() && !has_linear && !unmatched.contains(&p) {
            unmatched.push(p);
        }
    }
    Ok(CrosscheckReport {
        rows,
        unmatched_characteristics: unmatched,
        trials,
        disclaimer: HEURISTIC_DISCLAIMER.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::parse_presentation;
    use crate::matgrp::DEFAULT_CAP;

    const A1: LieClass = LieClass { xtype: XType::A1, d: 1 };

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [2.0f64, 3.0, 5.0, 7.0].iter().map(|&q| (q.ln(), 3.0 * q.ln() + 1.0)).collect();
        let (s, se) = fit_exponent(&pts).unwrap();
        assert!((s - 3.0).abs() < 1e-12);
        assert!(se.unwrap() < 1e-9);
    }

    #[test]
    fn killed_presentation_has_no_quotients() {
        let pres = parse_presentation("<x | x>").unwrap();
        let (v, _) = growth_scan(&pres, A1, &[4, 5, 7], DEFAULT_CAP, &Budget::unlimited()).unwrap();
        assert_eq!(v.verdict, Verdict::NoQuotients);
    }

    #[test]
    fn period_proposals() {
        assert_eq!(propose_period(&[false; 5]), Some((1, 1)));
        assert_eq!(propose_period(&[false, false, true, false, false]), Some((4, 1)));
        assert_eq!(propose_period(&[true, false, true, false, true, false]), Some((1, 2)));
    }

    #[test]
    fn residue_scan_killed_and_free() {
        let killed = parse_presentation("<x,y | x, y>").unwrap();
        let r = residue_scan(2, A1, &killed, 3, DEFAULT_CAP, &Budget::unlimited()).unwrap();
        assert_eq!(r.bits, vec![false; 3]);
        assert_eq!((r.onset, r.period), (Some(1), Some(1)));
        let free = Presentation::free(2);
        let r = residue_scan(3, A1, &free, 2, DEFAULT_CAP, &Budget::unlimited()).unwrap();
        assert_eq!(r.bits, vec![false, true]);
    }

    #[test]
    fn residue_scan_truncates_on_budget() {
        let free = Presentation::free(2);
        let r = residue_scan(3, A1, &free, 3, DEFAULT_CAP, &Budget::new(1000)).unwrap();
        assert!(r.truncated);
    }

    #[test]
    fn crosscheck_with_no_quotients_is_empty() {
        let killed = parse_presentation("<x,y | x, y>").unwrap();
        let r = untwisted_crosscheck(&killed, &[3], 5, 1, DEFAULT_CAP).unwrap();
        assert!(r.rows[0].unitary.is_empty() && r.rows[0].linear.is_empty());
    }
}
