//! Exact arithmetic for certified lattice verdicts.
//!
//! Certified span detection needs provably incommensurable values, so the
//! value domain is the field Q + Q*sqrt(2): pairs of big rationals. One
//! quadratic irrational keeps gcd, divisibility and sign all decidable
//! while covering every incommensurability the test corpus exercises.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Parse a rational written either as "p/q" or as a decimal literal with
/// optional exponent ("0.7", "-3", "1e-3").
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).ok()?;
        let d = BigInt::from_str(den.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    // decimal with optional exponent
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, i64::from_str(e).ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let negative = int_part.starts_with('-');
    let digits: String = format!("{}{}", int_part.trim_start_matches(['+', '-']), frac_part);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut numer = BigInt::from_str(&digits).ok()?;
    if negative {
        numer = -numer;
    }
    let scale = frac_part.len() as i64 - exp;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::new(numer, ten.pow(scale as u32))
    } else {
        BigRational::from_integer(numer * ten.pow((-scale) as u32))
    })
}

/// The exact rational carried by an f64 through its shortest round-trip
/// decimal representation. This recovers author intent for files written
/// with decimal literals (0.7 becomes exactly 7/10).
pub fn rational_from_f64_literal(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    parse_rational(&format!("{x}"))
}

/// gcd of two non-negative rationals: the largest g with a/g and b/g integer.
pub fn rational_gcd(a: &BigRational, b: &BigRational) -> BigRational {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let an = a.numer().abs();
    let ad = a.denom().clone();
    let bn = b.numer().abs();
    let bd = b.denom().clone();
    // common denominator L = ad*bd / gcd(ad,bd)
    let dg = gcd_int(&ad, &bd);
    let l = &ad * (&bd / &dg);
    let na = &an * (&l / &ad);
    let nb = &bn * (&l / &bd);
    BigRational::new(gcd_int(&na, &nb), l)
}

fn gcd_int(a: &BigInt, b: &BigInt) -> BigInt {
    let mut a = a.abs();
    let mut b = b.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// An element a + b*sqrt(2) of Q + Q*sqrt(2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSqrt2 {
    pub a: BigRational,
    pub b: BigRational,
}

impl QSqrt2 {
    pub fn zero() -> Self {
        Self {
            a: BigRational::zero(),
            b: BigRational::zero(),
        }
    }

    pub fn from_rational(a: BigRational) -> Self {
        Self {
            a,
            b: BigRational::zero(),
        }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn sqrt2() -> Self {
        Self {
            a: BigRational::zero(),
            b: BigRational::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            a: &self.a + &o.a,
            b: &self.b + &o.b,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            a: &self.a - &o.a,
            b: &self.b - &o.b,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            a: -self.a.clone(),
            b: -self.b.clone(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        // (a + b r)(c + d r) = ac + 2bd + (ad + bc) r,  r^2 = 2
        let two = BigRational::from_integer(BigInt::from(2));
        Self {
            a: &self.a * &o.a + two * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self {
            a: &self.a * c,
            b: &self.b * c,
        }
    }

    /// Field inverse; None for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // 1/(a + b r) = (a - b r)/(a^2 - 2 b^2); the norm is nonzero for
        // nonzero elements because sqrt(2) is irrational.
        let two = BigRational::from_integer(BigInt::from(2));
        let norm = &self.a * &self.a - two * &self.b * &self.b;
        Some(Self {
            a: &self.a / &norm,
            b: -(&self.b / &norm),
        })
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul(&i))
    }

    /// Sign of the real number a + b*sqrt(2): -1, 0 or +1.
    pub fn sign(&self) -> i8 {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        match (sa, sb) {
            (0, 0) => 0,
            (s, 0) => s,
            (0, s) => s,
            (1, 1) => 1,
            (-1, -1) => -1,
            // mixed signs: compare a^2 with 2 b^2; the rational part wins
            // exactly when a^2 > 2 b^2
            _ => {
                let two = BigRational::from_integer(BigInt::from(2));
                let a2 = &self.a * &self.a;
                let b2 = two * &self.b * &self.b;
                match a2.cmp(&b2) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    // a^2 = 2 b^2 with a,b nonzero is impossible over Q
                    Ordering::Equal => unreachable!("sqrt(2) is irrational"),
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
            + std::f64::consts::SQRT_2 * self.b.to_f64().unwrap_or(f64::NAN)
    }

    /// True when self = k*h for some integer k.
    pub fn divisible_by(&self, h: &Self) -> bool {
        match self.div(h) {
            Some(q) => q.is_rational() && q.a.is_integer(),
            None => self.is_zero(),
        }
    }
}

fn rational_sign(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sub(other).sign() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let coeff = if self.b.abs() == BigRational::one() {
            String::new()
        } else {
            format!("{}*", self.b.abs())
        };
        if self.a.is_zero() {
            let sign = if self.b.is_negative() { "-" } else { "" };
            write!(f, "{sign}{coeff}sqrt2")
        } else {
            let op = if self.b.is_negative() { "-" } else { "+" };
            write!(f, "{}{op}{coeff}sqrt2", self.a)
        }
    }
}

impl FromStr for QSqrt2 {
    type Err = String;

    /// Accepts rationals ("3", "-1/2", "0.25") and sqrt2 terms
    /// ("sqrt2", "-1/3*sqrt2", "1/2+3/4*sqrt2"). The unicode radical is
    /// accepted as an alias for "sqrt2".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized: String = s
            .replace('√', "sqrt")
            .replace("sqrt(2)", "sqrt2")
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        if normalized.is_empty() {
            return Err("empty value".into());
        }
        // split into signed terms; +/- separates terms only after a digit,
        // which keeps exponent signs ("2.5e-1") intact
        let mut terms: Vec<(i8, String)> = Vec::new();
        let mut current = String::new();
        let mut sign: i8 = 1;
        let mut chars = normalized.chars().peekable();
        if let Some(&c) = chars.peek() {
            if c == '+' || c == '-' {
                sign = if c == '-' { -1 } else { 1 };
                chars.next();
            }
        }
        let mut prev: Option<char> = None;
        for c in chars {
            if (c == '+' || c == '-') && prev.is_some_and(|p| p.is_ascii_digit()) {
                terms.push((sign, std::mem::take(&mut current)));
                sign = if c == '-' { -1 } else { 1 };
                prev = None;
            } else {
                current.push(c);
                prev = Some(c);
            }
        }
        terms.push((sign, current));

        let mut result = QSqrt2::zero();
        for (sg, term) in terms {
            let term = term.trim();
            if term.is_empty() {
                return Err(format!("malformed value {s:?}"));
            }
            let signed = |r: BigRational| if sg < 0 { -r } else { r };
            if let Some(prefix) = term.strip_suffix("sqrt2") {
                let prefix = prefix.trim_end_matches('*').trim();
                let coeff = if prefix.is_empty() {
                    BigRational::one()
                } else {
                    parse_rational(prefix).ok_or_else(|| format!("bad coefficient in {s:?}"))?
                };
                result.b += signed(coeff);
            } else {
                let r = parse_rational(term).ok_or_else(|| format!("bad rational in {s:?}"))?;
                result.a += signed(r);
            }
        }
        Ok(result)
    }
}

impl serde::Serialize for QSqrt2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for QSqrt2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcome of computing the common span of a finite difference set.
#[derive(Clone, Debug, PartialEq)]
pub enum Span {
    /// All differences vanish: every h > 0 works, the supremum is unbounded.
    Unbounded,
    /// The differences are incommensurable: no common span exists.
    Empty,
    /// The largest h with every difference in h*Z.
    Value(QSqrt2),
}

/// Largest h > 0 such that every element of `diffs` is an integer multiple
/// of h, with `Empty` when the set is incommensurable and `Unbounded` when
/// every difference is zero.
pub fn span_of(diffs: &[QSqrt2]) -> Span {
    let nonzero: Vec<&QSqrt2> = diffs.iter().filter(|d| !d.is_zero()).collect();
    if nonzero.is_empty() {
        return Span::Unbounded;
    }
    let reference = nonzero[0];
    let mut ratios: Vec<BigRational> = Vec::with_capacity(nonzero.len());
    for d in &nonzero {
        // d = r * reference demands the (a, b) vectors be Q-collinear
        let cross = &reference.a * &d.b - &reference.b * &d.a;
        if !cross.is_zero() {
            return Span::Empty;
        }
        let r = if !reference.a.is_zero() {
            &d.a / &reference.a
        } else {
            &d.b / &reference.b
        };
        ratios.push(r.abs());
    }
    let mut g = ratios[0].clone();
    for r in &ratios[1..] {
        g = rational_gcd(&g, r);
    }
    let span = reference.scale(&g).abs();
    Span::Value(span)
}

/// Float analogue of `span_of` for heuristic verdicts. `tol` is the
/// absolute tolerance below which a difference counts as zero; spans that
/// collapse under the Euclidean recursion are reported as `Empty`.
pub fn float_span_of(diffs: &[f64], tol: f64) -> FloatSpan {
    let nonzero: Vec<f64> = diffs.iter().map(|d| d.abs()).filter(|d| *d > tol).collect();
    if nonzero.is_empty() {
        return FloatSpan::Unbounded;
    }
    let scale = nonzero.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = (tol).max(1e-12 * scale);
    let mut g = 0.0;
    for d in &nonzero {
        g = float_gcd(g, *d, cutoff);
    }
    // an honest span explains every difference as a near-exact multiple
    let consistent = nonzero.iter().all(|d| {
        let k = (d / g).round();
        k >= 1.0 && (d - k * g).abs() <= 1e-9 * scale.max(1.0)
    });
    if !consistent || g < 1e-7 * scale {
        FloatSpan::Empty
    } else {
        FloatSpan::Value(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FloatSpan {
    Unbounded,
    Empty,
    Value(f64),
}

fn float_gcd(a: f64, b: f64, cutoff: f64) -> f64 {
    let mut a = a.abs();
    let mut b = b.abs();
    while b > cutoff {
        let r = a % b;
        a = b;
        b = if r > b - cutoff { 0.0 } else { r };
    }
    a
}

/// Exact stationary vector of an exactly row-stochastic rational matrix:
/// solves mu (P - I) = 0 with the normalization sum(mu) = 1 by Gaussian
/// elimination. None when the kernel is not one-dimensional.
pub fn exact_stationary(p: &[Vec<BigRational>]) -> Option<Vec<BigRational>> {
    let n = p.len();
    // rows of the system: (P^T - I) with the last row replaced by ones
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let mut v = p[c][r].clone();
                    if r == c {
                        v -= BigRational::one();
                    }
                    v
                })
                .collect()
        })
        .collect();
    let mut rhs: Vec<BigRational> = vec![BigRational::zero(); n];
    m[n - 1] = vec![BigRational::one(); n];
    rhs[n - 1] = BigRational::one();

    // forward elimination with column pivoting
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let pivot = m[col][col].clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
            let sub = &factor * &rhs[col];
            rhs[r] -= sub;
        }
    }
    // back substitution
    let mut x = vec![BigRational::zero(); n];
    for col in (0..n).rev() {
        let mut v = rhs[col].clone();
        for c in col + 1..n {
            v -= &m[col][c] * &x[c];
        }
        if m[col][col].is_zero() {
            return None;
        }
        x[col] = v / &m[col][col];
    }
    Some(x)
}
