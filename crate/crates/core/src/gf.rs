//! Exact arithmetic in GF(q) for odd prime powers `q = p^k`.
//!
//! Elements are polynomials over GF(p) of degree `< k`, reduced modulo a monic
//! irreducible `modulus`. Each element is stored as the integer
//! `c_0 + c_1 p + ... + c_{k-1} p^{k-1}` of its coefficient digits, which is
//! also its position in the canonical element order. Addition and
//! multiplication tables are filled once from the polynomial arithmetic, so
//! every later operation is a table lookup.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest field order we build tables for.
pub const MAX_ORDER: u32 = 1024;

/// Moduli used when the caller does not supply one: for each `(p, k)` the
/// first monic irreducible polynomial in canonical order of its lower
/// coefficients. Little-endian by degree.
const BUILTIN_MODULI: &[(u32, u32, &[u32])] = &[
    (3, 2, &[1, 0, 1]),
    (5, 2, &[2, 0, 1]),
    (7, 2, &[1, 0, 1]),
    (11, 2, &[1, 0, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (5, 3, &[1, 1, 0, 1]),
    (3, 4, &[2, 1, 0, 0, 1]),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("characteristic {0} is not an odd prime")]
    NotOddPrime(u32),
    #[error("modulus {modulus:?} is not a monic irreducible polynomial of degree {k} over GF({p})")]
    NotIrreducible { p: u32, k: u32, modulus: Vec<u32> },
    #[error("no built-in modulus for GF({p}^{k}); supply one explicitly")]
    NoBuiltinModulus { p: u32, k: u32 },
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    TooLarge(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse field element {0:?}")]
    Parse(String),
}

/// Descriptor of a finite field: characteristic, degree and reducing polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub p: u32,
    pub k: u32,
    /// `k + 1` coefficients of a monic polynomial, little-endian by degree.
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    pub fn order(&self) -> u32 {
        self.p.pow(self.k)
    }
}

/// A field element, identified by its index in the canonical element order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fe(u16);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

struct Tables {
    spec: FieldSpec,
    q: usize,
    add: Vec<Fe>,
    mul: Vec<Fe>,
    neg: Vec<Fe>,
    inv: Vec<Fe>,
    square: Vec<bool>,
}

/// GF(q) with precomputed operation tables. Cloning is cheap.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t) || self.t.spec == other.t.spec
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.t.spec;
        write!(f, "GF({}^{}) mod {:?}", s.p, s.k, s.modulus)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Remainder of `a` modulo the monic polynomial `b`, coefficients mod `p`.
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut a = a.to_vec();
    let db = b.len() - 1;
    while a.len() > db {
        let lead = *a.last().unwrap() % p;
        if lead != 0 {
            let shift = a.len() - b.len();
            for (i, &bc) in b.iter().enumerate() {
                a[shift + i] = (a[shift + i] + p - (lead * bc) % p) % p;
            }
        }
        a.pop();
    }
    a
}

fn digits(mut idx: u32, p: u32, k: u32) -> Vec<u32> {
    (0..k)
        .map(|_| {
            let c = idx % p;
            idx /= p;
            c
        })
        .collect()
}

fn undigits(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &x| acc * p + x)
}

/// Trial division by every monic polynomial of degree `1..=k/2`.
pub fn is_irreducible(p: u32, modulus: &[u32]) -> bool {
    let k = modulus.len().saturating_sub(1) as u32;
    if k == 0 || modulus[k as usize] != 1 || modulus.iter().any(|&c| c >= p) {
        return false;
    }
    for deg in 1..=k / 2 {
        for lower in 0..p.pow(deg) {
            let mut g = digits(lower, p, deg);
            g.push(1);
            if poly_rem(modulus, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// First monic irreducible of degree `k` in canonical order of its lower coefficients.
pub fn first_irreducible(p: u32, k: u32) -> Vec<u32> {
    (0..p.pow(k))
        .map(|lower| {
            let mut m = digits(lower, p, k);
            m.push(1);
            m
        })
        .find(|m| is_irreducible(p, m))
        .expect("an irreducible polynomial of every degree exists")
}

impl Field {
    /// Builds GF(p^k). With `modulus == None` the built-in table is consulted
    /// (prime fields need no modulus).
    pub fn new(p: u32, k: u32, modulus: Option<&[u32]>) -> Result<Field, FieldError> {
        if p.is_multiple_of(2) || !is_prime(p) {
            return Err(FieldError::NotOddPrime(p));
        }
        if k == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let order = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        if order > MAX_ORDER as u64 {
            return Err(FieldError::TooLarge(order));
        }
        let modulus = match modulus {
            Some(m) => m.to_vec(),
            None if k == 1 => vec![0, 1],
            None => BUILTIN_MODULI
                .iter()
                .find(|(bp, bk, _)| *bp == p && *bk == k)
                .map(|(_, _, m)| m.to_vec())
                .ok_or(FieldError::NoBuiltinModulus { p, k })?,
        };
        if modulus.len() != k as usize + 1 || !is_irreducible(p, &modulus) {
            return Err(FieldError::NotIrreducible { p, k, modulus });
        }
        Ok(Self::build(FieldSpec { p, k, modulus }))
    }

    pub fn prime(p: u32) -> Result<Field, FieldError> {
        Field::new(p, 1, None)
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Field, FieldError> {
        Field::new(spec.p, spec.k, Some(&spec.modulus))
    }

    fn build(spec: FieldSpec) -> Field {
        let (p, k) = (spec.p, spec.k);
        let q = spec.order() as usize;
        let elems: Vec<Vec<u32>> = (0..q as u32).map(|i| digits(i, p, k)).collect();

        let mut add = vec![Fe::ZERO; q * q];
        let mut mul = vec![Fe::ZERO; q * q];
        for a in 0..q {
            for b in 0..q {
                let s: Vec<u32> = elems[a].iter().zip(&elems[b]).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = Fe(undigits(&s, p) as u16);

                let mut prod = vec![0u32; 2 * k as usize - 1];
                for (i, x) in elems[a].iter().enumerate() {
                    for (j, y) in elems[b].iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                let mut r = poly_rem(&prod, &spec.modulus, p);
                r.resize(k as usize, 0);
                mul[a * q + b] = Fe(undigits(&r, p) as u16);
            }
        }

        let mut neg = vec![Fe::ZERO; q];
        let mut inv = vec![Fe::ZERO; q];
        let mut square = vec![false; q];
        for a in 0..q {
            for b in 0..q {
                if add[a * q + b] == Fe::ZERO {
                    neg[a] = Fe(b as u16);
                }
                if mul[a * q + b] == Fe::ONE {
                    inv[a] = Fe(b as u16);
                }
            }
        }

        // Euler's criterion, a^((q-1)/2) = 1; zero counts as a square.
        let half_order = (q as u64 - 1) / 2;
        for (a, sq) in square.iter_mut().enumerate() {
            let (mut base, mut acc, mut e) = (Fe(a as u16), Fe::ONE, half_order);
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul[acc.index() * q + base.index()];
                }
                base = mul[base.index() * q + base.index()];
                e >>= 1;
            }
            *sq = a == 0 || acc == Fe::ONE;
        }

        Field { t: Arc::new(Tables { spec, q, add, mul, neg, inv, square }) }
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.t.q
    }

    pub fn p(&self) -> u32 {
        self.t.spec.p
    }

    pub fn k(&self) -> u32 {
        self.t.spec.k
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.t.spec
    }

    /// All `q` elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (0..self.t.q).map(|i| Fe(i as u16))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Fe> + '_ {
        (1..self.t.q).map(|i| Fe(i as u16))
    }

    /// Element at position `i` of the canonical order.
    pub fn element(&self, i: usize) -> Fe {
        assert!(i < self.t.q, "element index {i} out of range");
        Fe(i as u16)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        self.t.add[a.index() * self.t.q + b.index()]
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        self.t.neg[a.index()]
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        self.t.mul[a.index() * self.t.q + b.index()]
    }

    /// `a + b * c`, the inner step of every dot product.
    #[inline]
    pub fn mul_add(&self, a: Fe, b: Fe, c: Fe) -> Fe {
        self.add(a, self.mul(b, c))
    }

    pub fn inv(&self, a: Fe) -> Result<Fe, FieldError> {
        if a.is_zero() {
            Err(FieldError::DivisionByZero)
        } else {
            Ok(self.t.inv[a.index()])
        }
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Inverse of a value the caller knows to be nonzero.
    #[inline]
    pub(crate) fn inv_nz(&self, a: Fe) -> Fe {
        debug_assert!(!a.is_zero());
        self.t.inv[a.index()]
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc = Fe::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn is_square(&self, a: Fe) -> bool {
        self.t.square[a.index()]
    }

    /// The first non-square in canonical order.
    pub fn first_nonsquare(&self) -> Fe {
        self.elements().find(|&a| !self.is_square(a)).expect("odd q has non-squares")
    }

    /// Image of an integer under `Z -> GF(p) ⊂ GF(q)`.
    pub fn from_int(&self, n: i64) -> Fe {
        let p = self.p() as i64;
        Fe(n.rem_euclid(p) as u16)
    }

    pub fn half(&self) -> Fe {
        self.inv_nz(self.from_int(2))
    }

    pub fn coeffs(&self, a: Fe) -> Vec<u32> {
        digits(a.0 as u32, self.p(), self.k())
    }

    pub fn from_coeffs(&self, c: &[u32]) -> Result<Fe, FieldError> {
        if c.len() != self.k() as usize || c.iter().any(|&x| x >= self.p()) {
            return Err(FieldError::Parse(format!("{c:?}")));
        }
        Ok(Fe(undigits(c, self.p()) as u16))
    }

    /// Base-p digits, low degree first, comma separated: `2 + x` in GF(9) is `"2,1"`.
    pub fn format(&self, a: Fe) -> String {
        let c = self.coeffs(a);
        let parts: Vec<String> = c.iter().map(|d| d.to_string()).collect();
        parts.join(",")
    }

    pub fn parse(&self, s: &str) -> Result<Fe, FieldError> {
        let c: Result<Vec<u32>, _> = s.trim().split(',').map(|d| d.trim().parse::<u32>()).collect();
        let c = c.map_err(|_| FieldError::Parse(s.to_string()))?;
        self.from_coeffs(&c).map_err(|_| FieldError::Parse(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn supported() -> Vec<Field> {
        let mut v: Vec<Field> = [3, 5, 7, 11, 13].iter().map(|&p| Field::prime(p).unwrap()).collect();
        for &(p, k, _) in BUILTIN_MODULI {
            v.push(Field::new(p, k, None).unwrap());
        }
        v
    }

    #[test]
    fn builtin_table_matches_search() {
        for &(p, k, m) in BUILTIN_MODULI {
            assert_eq!(first_irreducible(p, k), m, "p={p} k={k}");
        }
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Field::prime(2).unwrap_err(), FieldError::NotOddPrime(2));
        assert_eq!(Field::prime(9).unwrap_err(), FieldError::NotOddPrime(9));
        assert!(matches!(Field::new(3, 2, Some(&[2, 0, 1])), Err(FieldError::NotIrreducible { .. })));
        assert!(matches!(Field::new(13, 2, None), Err(FieldError::NoBuiltinModulus { p: 13, k: 2 })));
        assert!(matches!(Field::new(3, 7, None), Err(FieldError::TooLarge(2187))));
    }

    #[test]
    fn small_examples() {
        let f7 = Field::prime(7).unwrap();
        assert_eq!(f7.inv(f7.from_int(3)).unwrap(), f7.from_int(5));
        assert_eq!(f7.inv(Fe::ZERO), Err(FieldError::DivisionByZero));
        assert!(f7.is_square(f7.from_int(2)));
        assert!(!f7.is_square(f7.from_int(3)));

        let f5 = Field::prime(5).unwrap();
        assert_eq!(f5.add(f5.from_int(4), f5.from_int(3)), f5.from_int(2));

        let f9 = Field::new(3, 2, Some(&[1, 0, 1])).unwrap();
        let x = f9.from_coeffs(&[0, 1]).unwrap();
        assert_eq!(f9.mul(x, x), f9.from_int(2));
        assert_eq!(f9.format(f9.from_coeffs(&[2, 1]).unwrap()), "2,1");
        assert_eq!(f9.parse("2,1").unwrap(), f9.from_coeffs(&[2, 1]).unwrap());
        assert!(f9.parse("2").is_err());
    }

    #[test]
    fn element_order() {
        let f3 = Field::prime(3).unwrap();
        let e: Vec<_> = f3.elements().map(|a| f3.coeffs(a)).collect();
        assert_eq!(e, vec![vec![0], vec![1], vec![2]]);
        let f9 = Field::new(3, 2, None).unwrap();
        let e: Vec<_> = f9.elements().collect();
        assert_eq!(e.len(), 9);
        assert_eq!(&e[..3], &[Fe::ZERO, Fe::ONE, f9.from_int(2)]);
        let mut d = e.clone();
        d.dedup();
        assert_eq!(d.len(), 9);
    }

    #[test]
    fn axioms_exhaustive() {
        for f in supported().into_iter().filter(|f| f.q() <= 81) {
            let el: Vec<Fe> = f.elements().collect();
            for &a in &el {
                assert_eq!(f.add(a, f.neg(a)), Fe::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
                }
                assert_eq!(f.pow(a, f.q() as u64), a, "Frobenius in {f:?}");
                for &b in &el {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for &c in &el {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn squares_by_enumeration() {
        for f in supported() {
            let mut sq = vec![false; f.q()];
            for a in f.elements() {
                sq[f.mul(a, a).index()] = true;
            }
            for a in f.elements() {
                assert_eq!(f.is_square(a), sq[a.index()]);
            }
            let nonsq = f.nonzero().filter(|&a| !f.is_square(a)).count();
            assert_eq!(nonsq, (f.q() - 1) / 2);
        }
    }
}
