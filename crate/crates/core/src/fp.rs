//! Finite presentations: parsing, printing, word evaluation and
//! abelianization.
//!
//! Grammar: `< g1, g2, ... | w1, w2, ... >`. A word is a product of factors,
//! optionally separated by `*`; a factor is a generator name or a
//! parenthesized word, optionally raised to an integer power with `^`.
//! Juxtaposed single-letter generators (`xy`) are split when the run is not
//! itself a generator name. `1` denotes the empty word.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ff::Field;
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FpError {
    #[error("syntax error at byte {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("unknown generator {name:?} at byte {pos}")]
    UnknownGenerator { name: String, pos: usize },
    #[error("expected {expected} images of dimension {dim}, got a mismatch")]
    DimensionMismatch { expected: usize, dim: usize },
}

/// A word over signed generator indices: `i` is generator `i` (1-based) and
/// `-i` its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&x| -x).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn power(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(base.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v)
    }

    pub fn freely_reduced(&self) -> Word {
        let mut out: Vec<i32> = Vec::with_capacity(self.0.len());
        for &x in &self.0 {
            if out.last() == Some(&-x) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        Word(out)
    }

    /// Exponent sum of each of the `s` generators.
    pub fn exponent_sums(&self, s: usize) -> Vec<i64> {
        let mut sums = vec![0i64; s];
        for &x in &self.0 {
            sums[x.unsigned_abs() as usize - 1] += x.signum() as i64;
        }
        sums
    }

    /// If the word is a power `x_i^k` (k ≠ 0) of one generator, `(i, |k|)`.
    pub fn as_generator_power(&self) -> Option<(usize, u64)> {
        let first = *self.0.first()?;
        self.0
            .iter()
            .all(|&x| x == first)
            .then(|| (first.unsigned_abs() as usize, self.0.len() as u64))
    }

    /// Largest generator index appearing, 0 for the empty word.
    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<String>,
    /// Freely reduced relators.
    pub relators: Vec<Word>,
    /// Relators as parsed, before reduction.
    pub raw_relators: Vec<Word>,
    pub source_text: String,
    pub hash: String,
}

impl PartialEq for Presentation {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash
    }
}

impl Presentation {
    pub fn new(generators: Vec<String>, raw_relators: Vec<Word>, source_text: String) -> Presentation {
        let relators: Vec<Word> = raw_relators.iter().map(Word::freely_reduced).collect();
        let hash = content_hash(generators.len(), &relators);
        Presentation {
            generators,
            relators,
            raw_relators,
            source_text,
            hash,
        }
    }

    /// Free group of rank `s` on `x1, ..., xs` (or `x, y, z, w` for `s ≤ 4`).
    pub fn free(s: usize) -> Presentation {
        let names: Vec<String> = if s <= 4 {
            ["x", "y", "z", "w"][..s].iter().map(|n| n.to_string()).collect()
        } else {
            (1..=s).map(|i| format!("x{i}")).collect()
        };
        let p = Presentation::new(names, Vec::new(), String::new());
        let text = p.to_string();
        Presentation { source_text: text, ..p }
    }

    pub fn s(&self) -> usize {
        self.generators.len()
    }

    /// Canonical text form.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    pub fn word_to_string(&self, w: &Word) -> String {
        if w.is_empty() {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        let mut i = 0;
        while i < w.0.len() {
            let x = w.0[i];
            let mut j = i;
            while j < w.0.len() && w.0[j] == x {
                j += 1;
            }
            let run = (j - i) as i64 * x.signum() as i64;
            let name = &self.generators[x.unsigned_abs() as usize - 1];
            if run == 1 {
                parts.push(name.clone());
            } else {
                parts.push(format!("{name}^{run}"));
            }
            i = j;
        }
        parts.join("*")
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rels: Vec<String> = self.relators.iter().map(|w| self.word_to_string(w)).collect();
        if rels.is_empty() {
            write!(f, "<{} | >", self.generators.join(","))
        } else {
            write!(f, "<{} | {}>", self.generators.join(","), rels.join(", "))
        }
    }
}

fn content_hash(s: usize, relators: &[Word]) -> String {
    let mut text = format!("s={s}");
    for w in relators {
        text.push(';');
        let letters: Vec<String> = w.0.iter().map(|x| x.to_string()).collect();
        text.push_str(&letters.join(","));
    }
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: Vec<String>,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FpError> {
        Err(FpError::SyntaxError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), FpError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {:?}", c as char))
        }
    }

    fn ident(&mut self) -> Result<(String, usize), FpError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            if self.pos == start && self.src[self.pos].is_ascii_digit() {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a generator name");
        }
        Ok((String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(), start))
    }

    fn integer(&mut self) -> Result<i64, FpError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'-') | Some(b'+')) {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<i64>() {
            Ok(k) if k.unsigned_abs() <= 1 << 20 => Ok(k),
            _ => {
                self.pos = start;
                self.err("expected an integer exponent")
            }
        }
    }

    /// Resolves a name, splitting runs of single-letter generators.
    fn resolve(&self, name: &str, pos: usize) -> Result<Word, FpError> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(Word(vec![i as i32 + 1]));
        }
        let mut letters = Vec::new();
        let mut rest = name;
        'outer: while !rest.is_empty() {
            let mut best: Option<usize> = None;
            for (i, n) in self.names.iter().enumerate() {
                if rest.starts_with(n.as_str()) && best.is_none_or(|b| self.names[b].len() < n.len()) {
                    best = Some(i);
                }
            }
            match best {
                Some(i) => {
                    letters.push(i as i32 + 1);
                    rest = &rest[self.names[i].len()..];
                    continue 'outer;
                }
                None => {
                    return Err(FpError::UnknownGenerator {
                        name: name.to_string(),
                        pos,
                    })
                }
            }
        }
        Ok(Word(letters))
    }

    fn factor(&mut self) -> Result<Word, FpError> {
        let base = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let w = self.word()?;
                self.expect(b')')?;
                w
            }
            Some(b'1') => {
                self.pos += 1;
                Word::empty()
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let (name, pos) = self.ident()?;
                self.resolve(&name, pos)?
            }
            _ => return self.err("expected a generator or '('"),
        };
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.integer()?;
            Ok(base.power(k))
        } else {
            Ok(base)
        }
    }

    fn word(&mut self) -> Result<Word, FpError> {
        let mut w = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    w = w.concat(&self.factor()?);
                }
                Some(c) if c == b'(' || c == b'_' || c.is_ascii_alphabetic() => {
                    w = w.concat(&self.factor()?);
                }
                _ => return Ok(w),
            }
        }
    }
}

/// Removes `#` comments (for `.fp` files).
pub fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse_presentation(text: &str) -> Result<Presentation, FpError> {
    let cleaned = strip_comments(text);
    let mut p = Parser {
        src: cleaned.as_bytes(),
        pos: 0,
        names: Vec::new(),
    };
    p.expect(b'<')?;
    loop {
        if p.peek() == Some(b'|') {
            break;
        }
        let (name, pos) = p.ident()?;
        if p.names.contains(&name) {
            return Err(FpError::SyntaxError {
                pos,
                msg: format!("duplicate generator {name:?}"),
            });
        }
        p.names.push(name);
        match p.peek() {
            Some(b',') => p.pos += 1,
            Some(b'|') => {}
            _ => return p.err("expected ',' or '|'"),
        }
    }
    p.expect(b'|')?;
    let mut relators = Vec::new();
    if p.peek() != Some(b'>') {
        loop {
            relators.push(p.word()?);
            match p.peek() {
                Some(b',') => p.pos += 1,
                Some(b'>') => break,
                _ => return p.err("expected ',' or '>'"),
            }
        }
    }
    p.expect(b'>')?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    if p.names.is_empty() {
        return Err(FpError::SyntaxError {
            pos: 1,
            msg: "a presentation needs at least one generator".into(),
        });
    }
    Ok(Presentation::new(p.names, relators, text.trim().to_string()))
}

/// Product of the images along `w`; the empty word gives the identity.
pub fn evaluate_word(w: &Word, images: &[Matrix], f: &Field) -> Result<Matrix, FpError> {
    let dim = images.first().map_or(0, Matrix::dim);
    if images.iter().any(|m| m.dim() != dim) || w.max_generator() > images.len() || (images.is_empty() && !w.is_empty()) {
        return Err(FpError::DimensionMismatch {
            expected: w.max_generator(),
            dim,
        });
    }
    let inverses: Vec<Option<Matrix>> = (0..images.len())
        .map(|i| w.0.contains(&-(i as i32 + 1)).then(|| images[i].inverse(f).expect("invertible image")))
        .collect();
    let mut acc = Matrix::identity(dim.max(1));
    for &x in &w.0 {
        let i = x.unsigned_abs() as usize - 1;
        let m = if x > 0 { &images[i] } else { inverses[i].as_ref().expect("computed") };
        acc = acc.mul(m, f);
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abelianization {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl fmt::Display for Abelianization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.torsion.iter().map(|d| format!("Z/{d}")).collect();
        if self.free_rank > 0 {
            parts.push(if self.free_rank == 1 {
                "Z".to_string()
            } else {
                format!("Z^{}", self.free_rank)
            });
        }
        if parts.is_empty() {
            write!(f, "trivial")
        } else {
            write!(f, "{}", parts.join(" x "))
        }
    }
}

pub fn abelianization(p: &Presentation) -> Abelianization {
    let s = p.s();
    let rows: Vec<Vec<BigInt>> = p
        .relators
        .iter()
        .map(|w| w.exponent_sums(s).into_iter().map(BigInt::from).collect())
        .collect();
    let diag = smith_diagonal(rows, s);
    let rank = diag.len();
    Abelianization {
        free_rank: s - rank,
        torsion: diag.into_iter().filter(|d| *d > BigInt::from(1)).collect(),
    }
}

/// Nonzero diagonal of the Smith normal form, each entry dividing the next.
pub fn smith_diagonal(mut a: Vec<Vec<BigInt>>, cols: usize) -> Vec<BigInt> {
    let rows = a.len();
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // Least absolute value pivot in the remaining block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        let piv = a[t][t].clone();
        let mut clean = true;
        for i in t + 1..rows {
            if !a[i][t].is_zero() {
                let m = &a[i][t] / &piv;
                for j in t..cols {
                    let v = &m * &a[t][j];
                    a[i][j] -= v;
                }
                clean &= a[i][t].is_zero();
            }
        }
        for j in t + 1..cols {
            if !a[t][j].is_zero() {
                let m = &a[t][j] / &piv;
                for i in t..rows {
                    let v = &m * &a[i][t];
                    a[i][j] -= v;
                }
                clean &= a[t][j].is_zero();
            }
        }
        if !clean {
            continue;
        }
        // Divisibility: fold an offending row into the pivot row and retry.
        let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !(&a[i][j] % &piv).is_zero()));
        if let Some(i) = bad {
            for j in t..cols {
                let v = a[i][j].clone();
                a[t][j] += v;
            }
            continue;
        }
        diag.push(piv.abs());
        t += 1;
    }
    diag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ff::make_field;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        let p = parse_presentation("<x | x^5>").unwrap();
        assert_eq!(p.s(), 1);
        assert_eq!(p.relators, vec![Word(vec![1; 5])]);
        let h = parse_presentation("<x,y | x^2, y^3, (x*y)^7>").unwrap();
        assert_eq!(h.relators.len(), 3);
        assert_eq!(h.relators[2].len(), 14);
        let f = parse_presentation("<x,y | >").unwrap();
        assert_eq!(f.s(), 2);
        assert!(f.relators.is_empty());
    }

    #[test]
    fn juxtaposition_and_star_agree() {
        let a = parse_presentation("<x,y | x^2,y^3,(xy)^7>").unwrap();
        let b = parse_presentation("<x, y | x^2, y^3, (x*y)^7>").unwrap();
        assert_eq!(a.hash, b.hash);
        assert_eq!(a.relators, b.relators);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(
            parse_presentation("<x | z>"),
            Err(FpError::UnknownGenerator { pos: 5, .. })
        ));
        assert!(matches!(parse_presentation("<x | x^>"), Err(FpError::SyntaxError { .. })));
        assert!(matches!(parse_presentation("x | x"), Err(FpError::SyntaxError { pos: 0, .. })));
    }

    #[test]
    fn relators_are_freely_reduced() {
        let p = parse_presentation("<a,b | a*b*b^-1*a^-1*a^3>").unwrap();
        assert_eq!(p.relators[0], Word(vec![1, 1, 1]));
        assert_eq!(p.raw_relators[0].len(), 7);
    }

    #[test]
    fn comments_are_ignored() {
        let p = parse_presentation("# triangle group\n<x,y | x^2, # involution\n y^3, (x*y)^7>").unwrap();
        assert_eq!(p.relators.len(), 3);
    }

    #[test]
    fn canonical_text_round_trips() {
        let p = parse_presentation("<x,y | x^2, y^-3, (x*y^-1)^2, [x]>".replace("[x]", "x*y*x^-1*y^-1").as_str()).unwrap();
        let text = p.canonical();
        let q = parse_presentation(&text).unwrap();
        assert_eq!(q.canonical(), text);
        assert_eq!(q.hash, p.hash);
    }

    #[test]
    fn evaluation_examples() {
        let f = make_field(3, 1).unwrap();
        let x = Matrix::from_ints(&f, &[&[0, 1], &[1, 0]]);
        assert!(evaluate_word(&Word::empty(), std::slice::from_ref(&x), &f).unwrap().is_identity());
        assert!(evaluate_word(&Word(vec![1, 1]), std::slice::from_ref(&x), &f).unwrap().is_identity());
        let a = Matrix::from_ints(&f, &[&[2, 0], &[0, 1]]);
        let b = Matrix::from_ints(&f, &[&[1, 0], &[0, 2]]);
        let comm = Word(vec![1, 2, -1, -2]);
        assert!(evaluate_word(&comm, &[a, b], &f).unwrap().is_identity());
        assert!(evaluate_word(&Word(vec![2]), &[x], &f).is_err());
    }

    #[test]
    fn abelianization_examples() {
        let ab = |t: &str| abelianization(&parse_presentation(t).unwrap());
        assert_eq!(ab("<x,y | >"), Abelianization { free_rank: 2, torsion: vec![] });
        assert_eq!(ab("<x | x^5>"), Abelianization { free_rank: 0, torsion: vec![BigInt::from(5)] });
        assert_eq!(ab("<x,y | x^2, y^3, (x*y)^7>"), Abelianization { free_rank: 0, torsion: vec![] });
        assert_eq!(ab("<x,y | x^3,y^3,(x*y)^4>").torsion, vec![BigInt::from(3)]);
        assert_eq!(ab("<x,y | x^4, y^6>").torsion, vec![BigInt::from(2), BigInt::from(12)]);
    }

    fn random_word(s: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec((1..=s as i32, any::<bool>()), 0..12)
            .prop_map(|v| Word(v.into_iter().map(|(i, neg)| if neg { -i } else { i }).collect()))
    }

    proptest! {
        #[test]
        fn evaluation_is_a_homomorphism(u in random_word(2), v in random_word(2), seed in 0u64..1000) {
            let f = make_field(5, 1).unwrap();
            let mk = |k: u64| Matrix::from_ints(&f, &[&[1, (k % 5) as i64], &[(k / 5 % 5) as i64, 1 + (k % 5 * (k / 5 % 5)) as i64]]);
            let images = [mk(seed % 25), mk(seed / 25 % 25 + 1)];
            prop_assume!(images.iter().all(|m| !m.det(&f).is_zero()));
            let uv = evaluate_word(&u.concat(&v), &images, &f).unwrap();
            let prod = evaluate_word(&u, &images, &f).unwrap().mul(&evaluate_word(&v, &images, &f).unwrap(), &f);
            prop_assert_eq!(uv, prod);
        }

        #[test]
        fn invariant_factors_divide(entries in prop::collection::vec(-12i64..12, 9)) {
            let rows: Vec<Vec<BigInt>> = entries.chunks(3).map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            let diag = smith_diagonal(rows, 3);
            for w in diag.windows(2) {
                prop_assert!((&w[1] % &w[0]).is_zero());
            }
        }

        #[test]
        fn print_parse_is_stable(rels in prop::collection::vec(random_word(3), 0..4)) {
            let p = Presentation::new(vec!["a".into(), "b".into(), "c".into()], rels, String::new());
            let text = p.canonical();
            let q = parse_presentation(&text).unwrap();
            prop_assert_eq!(q.canonical(), text);
            prop_assert_eq!(q.hash, p.hash);
        }
    }
}
