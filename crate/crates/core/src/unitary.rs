//! Prime classes of the imaginary quadratic field `Q(sqrt -2)` and the
//! scalar obstruction separating `PSU_m(q)` from `PGU_m(q)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ff::{is_prime, legendre, make_field, prime_power, FieldError};

#[derive(Debug, Error)]
pub enum UnitaryError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("q = {0} must be an odd prime power congruent to 3 mod 4")]
    BadQ(u64),
    #[error("matrix size m = {0} must be at least 2")]
    BadSize(u64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStatus {
    Split,
    Inert,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    P1,
    P3,
    P7,
    #[serde(rename = "ramified")]
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeClass {
    pub p: u64,
    pub status: SplitStatus,
    /// Size of the residue field.
    pub residue_size: u64,
    pub class: Class,
}

pub fn classify_prime(p: u64) -> Result<PrimeClass, UnitaryError> {
    if !is_prime(p) {
        return Err(UnitaryError::NotPrime(p));
    }
    if p == 2 {
        return Ok(PrimeClass {
            p,
            status: SplitStatus::Ramified,
            residue_size: 2,
            class: Class::Ramified,
        });
    }
    let (status, residue_size) = if legendre(-2, p)? == 1 {
        (SplitStatus::Split, p)
    } else {
        (SplitStatus::Inert, p * p)
    };
    let class = match residue_size % 8 {
        1 | 5 => Class::P1,
        3 => Class::P3,
        _ => Class::P7,
    };
    Ok(PrimeClass {
        p,
        status,
        residue_size,
        class,
    })
}

/// Primes below `limit` landing in `P7`.
pub fn p7_scan(limit: u64) -> Vec<PrimeClass> {
    (2..limit)
        .into_par_iter()
        .filter(|&p| is_prime(p))
        .filter_map(|p| classify_prime(p).ok())
        .filter(|c| c.class == Class::P7)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conclusion {
    /// No scalar fixes the determinant; the reflection image lies outside `PSU_m(q)`.
    NoMu,
    MuExists,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionResult {
    pub q: u64,
    pub m: u64,
    /// Code of `mu` in `F_{q^2}`.
    pub witness: Option<u32>,
    pub witness_order: Option<u64>,
    pub conclusion: Conclusion,
}

/// Searches `F_{q^2}^*` for `mu` with `mu^(q+1) = 1` and `mu^m = -1`.
pub fn mu_obstruction(q: u64, m: u64) -> Result<ObstructionResult, UnitaryError> {
    if q % 4 != 3 {
        return Err(UnitaryError::BadQ(q));
    }
    if m < 2 {
        return Err(UnitaryError::BadSize(m));
    }
    let (p, e) = prime_power(q).ok_or(UnitaryError::BadQ(q))?;
    let f = make_field(p, 2 * e)?;
    let g = f.primitive_element();
    let one = f.one();
    let minus_one = f.neg(one);
    let g_norm = f.pow(g, q + 1);
    let g_m = f.pow(g, m);
    // mu = g^k along with mu^(q+1) and mu^m.
    let (mut mu, mut mu_norm, mut mu_m) = (one, one, one);
    for _ in 0..f.size() - 1 {
        if mu_norm == one && mu_m == minus_one {
            return Ok(ObstructionResult {
                q,
                m,
                witness: Some(mu.code()),
                witness_order: f.mult_order(mu),
                conclusion: Conclusion::MuExists,
            });
        }
        mu = f.mul(mu, g);
        mu_norm = f.mul(mu_norm, g_norm);
        mu_m = f.mul(mu_m, g_m);
    }
    Ok(ObstructionResult {
        q,
        m,
        witness: None,
        witness_order: None,
        conclusion: Conclusion::NoMu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes() {
        let c = classify_prime(2).unwrap();
        assert_eq!(c.class, Class::Ramified);
        let c = classify_prime(3).unwrap();
        assert_eq!((c.status, c.residue_size, c.class), (SplitStatus::Split, 3, Class::P3));
        let c = classify_prime(5).unwrap();
        assert_eq!((c.status, c.residue_size, c.class), (SplitStatus::Inert, 25, Class::P1));
        let c = classify_prime(11).unwrap();
        assert_eq!((c.status, c.residue_size, c.class), (SplitStatus::Split, 11, Class::P3));
        assert!(classify_prime(9).is_err());
    }

    #[test]
    fn splitting_matches_square_roots_of_minus_two() {
        for p in (3..2000u64).filter(|&p| is_prime(p)) {
            let has_root = (0..p).any(|x| (x * x + 2) % p == 0);
            let c = classify_prime(p).unwrap();
            assert_eq!(c.status == SplitStatus::Split, has_root, "p = {p}");
            if c.status == SplitStatus::Inert {
                assert_eq!(c.residue_size % 8, 1);
            }
        }
    }

    #[test]
    fn no_p7_primes() {
        assert!(p7_scan(3).is_empty());
        assert!(p7_scan(100).is_empty());
    }

    #[test]
    fn obstruction_examples() {
        assert_eq!(mu_obstruction(3, 4).unwrap().conclusion, Conclusion::NoMu);
        assert_eq!(mu_obstruction(11, 4).unwrap().conclusion, Conclusion::NoMu);
        let r = mu_obstruction(7, 4).unwrap();
        assert_eq!(r.conclusion, Conclusion::MuExists);
        assert_eq!(r.witness_order, Some(8));
        assert!(matches!(mu_obstruction(5, 4), Err(UnitaryError::BadQ(5))));
    }
}
