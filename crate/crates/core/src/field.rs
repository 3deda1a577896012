//! Arithmetic in binary extension fields GF(2^k).
//!
//! An element is a `k`-bit coefficient vector (bit `i` is the coefficient of
//! `t^i`) reduced modulo an irreducible polynomial of degree `k`. Elements
//! carry their modulus, so operations between elements of different fields
//! are detected: the `try_*` methods return [`FieldError::Mismatch`], the
//! operator impls panic.
//!
//! Two families of moduli are supported:
//! - the tower family `t^(2·3^e) + t^(3^e) + 1`, which is irreducible for
//!   every `e` and gives GF(2^6), GF(2^18), GF(2^54), ...
//! - custom moduli, checked for irreducibility by trial division (`k ≤ 24`).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest degree for which irreducibility is verified by trial division.
pub const MAX_VERIFIED_DEGREE: u32 = 24;
/// Largest supported extension degree (the modulus must fit in a `u64`).
pub const MAX_DEGREE: u32 = 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("operands belong to different fields (moduli {0:#x} and {1:#x})")]
    Mismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulus {modulus:#x} does not have degree {k}")]
    WrongDegree { k: u32, modulus: u64 },
    #[error("modulus {0:#x} is reducible over GF(2)")]
    Reducible(u64),
    #[error("degree {0} is outside the supported range 1..={max}", max = MAX_VERIFIED_DEGREE)]
    UnverifiableDegree(u32),
    #[error("tower exponent {0} gives a degree above {max}", max = MAX_DEGREE)]
    TowerTooLarge(u32),
    #[error("value {value:#x} does not fit in {k} bits")]
    OutOfRange { value: u64, k: u32 },
    #[error("malformed field description: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Tower,
    Custom,
}

/// Description of a field GF(2^k): its degree, modulus and where the modulus
/// came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FieldSpecRepr", into = "FieldSpecRepr")]
pub struct FieldSpec {
    k: u32,
    modulus: u64,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct FieldSpecRepr {
    k: u32,
    modulus_hex: String,
    provenance: Provenance,
}

impl From<FieldSpec> for FieldSpecRepr {
    fn from(spec: FieldSpec) -> Self {
        FieldSpecRepr {
            k: spec.k,
            modulus_hex: format!("{:#x}", spec.modulus),
            provenance: spec.provenance,
        }
    }
}

impl TryFrom<FieldSpecRepr> for FieldSpec {
    type Error = FieldError;

    fn try_from(repr: FieldSpecRepr) -> Result<Self, FieldError> {
        let hex = repr.modulus_hex.trim_start_matches("0x");
        let modulus =
            u64::from_str_radix(hex, 16).map_err(|e| FieldError::Parse(e.to_string()))?;
        match repr.provenance {
            Provenance::Custom => FieldSpec::custom(repr.k, modulus),
            Provenance::Tower => {
                let spec = FieldSpec::tower_for_degree(repr.k)?;
                if spec.modulus != modulus {
                    return Err(FieldError::Parse(format!(
                        "tower field of degree {} has modulus {:#x}, not {modulus:#x}",
                        repr.k, spec.modulus
                    )));
                }
                Ok(spec)
            }
        }
    }
}

fn degree(poly: u128) -> Option<u32> {
    if poly == 0 {
        None
    } else {
        Some(127 - poly.leading_zeros())
    }
}

/// Remainder of `a` modulo `b` as polynomials over GF(2).
fn poly_rem(mut a: u128, b: u128) -> u128 {
    let db = degree(b).expect("nonzero divisor");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Carry-less product of two polynomials of degree < 64.
fn clmul(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut b = b;
    let mut acc = 0u128;
    let mut shift = 0;
    while b != 0 {
        let tz = b.trailing_zeros();
        shift += tz;
        acc ^= a << shift;
        b >>= tz;
        b >>= 1;
        shift += 1;
    }
    acc
}

/// Trial-division irreducibility test for a polynomial of degree `k ≥ 1`.
pub fn is_irreducible(poly: u64) -> bool {
    let Some(k) = degree(poly as u128) else {
        return false;
    };
    if k == 0 {
        return false;
    }
    for d in 1..=k / 2 {
        for low in 0..(1u64 << d) {
            let divisor = (1u128 << d) | low as u128;
            if poly_rem(poly as u128, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

impl FieldSpec {
    /// The tower field of degree `2·3^e` with modulus `t^(2·3^e) + t^(3^e) + 1`.
    pub fn tower(e: u32) -> Result<Self, FieldError> {
        if e == 0 {
            return Err(FieldError::Parse("tower exponent must be at least 1".into()));
        }
        let half = 3u64
            .checked_pow(e)
            .filter(|&h| 2 * h <= MAX_DEGREE as u64)
            .ok_or(FieldError::TowerTooLarge(e))? as u32;
        let k = 2 * half;
        let modulus = (1u64 << k) | (1u64 << half) | 1;
        if k <= MAX_VERIFIED_DEGREE {
            debug_assert!(is_irreducible(modulus));
        }
        Ok(FieldSpec {
            k,
            modulus,
            provenance: Provenance::Tower,
        })
    }

    fn tower_for_degree(k: u32) -> Result<Self, FieldError> {
        (1..=3)
            .map(FieldSpec::tower)
            .filter_map(Result::ok)
            .find(|s| s.k == k)
            .ok_or_else(|| FieldError::Parse(format!("no tower field of degree {k}")))
    }

    /// A field with an explicitly supplied modulus, verified irreducible.
    pub fn custom(k: u32, modulus: u64) -> Result<Self, FieldError> {
        if k == 0 || k > MAX_VERIFIED_DEGREE {
            return Err(FieldError::UnverifiableDegree(k));
        }
        if degree(modulus as u128) != Some(k) {
            return Err(FieldError::WrongDegree { k, modulus });
        }
        if !is_irreducible(modulus) {
            return Err(FieldError::Reducible(modulus));
        }
        Ok(FieldSpec {
            k,
            modulus,
            provenance: Provenance::Custom,
        })
    }

    /// GF(2^k) with the numerically smallest irreducible modulus of degree `k`.
    pub fn binary(k: u32) -> Result<Self, FieldError> {
        if k == 0 || k > MAX_VERIFIED_DEGREE {
            return Err(FieldError::UnverifiableDegree(k));
        }
        let modulus = ((1u64 << k)..(1u64 << (k + 1)))
            .find(|&m| is_irreducible(m))
            .expect("an irreducible polynomial exists in every degree");
        FieldSpec::custom(k, modulus)
    }

    /// GF(4) = GF(2)[t]/(t^2 + t + 1).
    pub fn gf4() -> Self {
        FieldSpec::custom(2, 0b111).expect("t^2+t+1 is irreducible")
    }

    /// GF(2^6) from the tower family (`e = 1`).
    pub fn gf64() -> Self {
        FieldSpec::tower(1).expect("e = 1 is in range")
    }

    /// GF(2^18) from the tower family (`e = 2`).
    pub fn gf2_18() -> Self {
        FieldSpec::tower(2).expect("e = 2 is in range")
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Number of field elements, `2^k`.
    pub fn size(&self) -> u64 {
        1u64 << self.k
    }

    fn mask(&self) -> u64 {
        if self.k == 64 {
            u64::MAX
        } else {
            (1u64 << self.k) - 1
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            bits: 0,
            modulus: self.modulus,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            bits: 1 & self.mask(),
            modulus: self.modulus,
        }
        .reduced()
    }

    /// The distinguished element `α = t`.
    pub fn alpha(&self) -> FieldElement {
        FieldElement {
            bits: 2,
            modulus: self.modulus,
        }
        .reduced()
    }

    /// The element whose coefficient vector is `bits`.
    pub fn element(&self, bits: u64) -> Result<FieldElement, FieldError> {
        if bits & !self.mask() != 0 {
            return Err(FieldError::OutOfRange {
                value: bits,
                k: self.k,
            });
        }
        Ok(FieldElement {
            bits,
            modulus: self.modulus,
        })
    }

    /// Like [`FieldSpec::element`] but reduces out-of-range values instead of
    /// rejecting them.
    pub fn element_reduced(&self, bits: u64) -> FieldElement {
        FieldElement {
            bits,
            modulus: self.modulus,
        }
        .reduced()
    }

    /// Iterates over every element in order of the integer encoding.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let modulus = self.modulus;
        (0..self.size()).map(move |bits| FieldElement { bits, modulus })
    }

    /// Uniformly random element.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement {
            bits: rng.gen::<u64>() & self.mask(),
            modulus: self.modulus,
        }
    }

    /// Uniformly random nonzero element.
    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement {
            bits: rng.gen_range(1..=self.mask()),
            modulus: self.modulus,
        }
    }

    /// Maps an integer into the field through its parity (characteristic two).
    pub fn from_int(&self, value: i64) -> FieldElement {
        if value.rem_euclid(2) == 1 {
            self.one()
        } else {
            self.zero()
        }
    }

    /// Whether `x` belongs to this field.
    pub fn contains(&self, x: &FieldElement) -> bool {
        x.modulus == self.modulus
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.k, self.modulus)
    }
}

/// An element of GF(2^k), tagged with its field's modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    bits: u64,
    modulus: u64,
}

impl FieldElement {
    fn reduced(self) -> Self {
        FieldElement {
            bits: poly_rem(self.bits as u128, self.modulus as u128) as u64,
            modulus: self.modulus,
        }
    }

    /// Coefficient vector, bit `i` = coefficient of `t^i`.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Modulus of the field this element lives in.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn is_one(&self) -> bool {
        self.bits == 1
    }

    pub fn zero_like(&self) -> Self {
        FieldElement {
            bits: 0,
            modulus: self.modulus,
        }
    }

    pub fn one_like(&self) -> Self {
        FieldElement {
            bits: 1,
            modulus: self.modulus,
        }
    }

    /// Another element of the same field.
    pub fn sibling(&self, bits: u64) -> Self {
        FieldElement {
            bits,
            modulus: self.modulus,
        }
        .reduced()
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.modulus == other.modulus {
            Ok(())
        } else {
            Err(FieldError::Mismatch(self.modulus, other.modulus))
        }
    }

    pub fn try_add(self, rhs: Self) -> Result<Self, FieldError> {
        self.check(&rhs)?;
        Ok(FieldElement {
            bits: self.bits ^ rhs.bits,
            modulus: self.modulus,
        })
    }

    pub fn try_mul(self, rhs: Self) -> Result<Self, FieldError> {
        self.check(&rhs)?;
        let product = clmul(self.bits, rhs.bits);
        Ok(FieldElement {
            bits: poly_rem(product, self.modulus as u128) as u64,
            modulus: self.modulus,
        })
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = self.one_like();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base.square();
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by the extended Euclidean algorithm over GF(2)[t].
    pub fn inv(self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        // Invariant: s_i · self ≡ r_i (mod modulus).
        let (mut r0, mut r1) = (self.modulus as u128, self.bits as u128);
        let (mut s0, mut s1) = (0u128, 1u128);
        while r1 != 0 {
            let (d0, d1) = (degree(r0).unwrap(), degree(r1).unwrap());
            if d0 < d1 {
                std::mem::swap(&mut r0, &mut r1);
                std::mem::swap(&mut s0, &mut s1);
                continue;
            }
            let shift = d0 - d1;
            r0 ^= r1 << shift;
            s0 ^= s1 << shift;
            if r0 == 0 {
                break;
            }
        }
        // The nonzero remainder is the gcd, which is 1 for an irreducible modulus.
        let (r, s) = if r0 == 0 { (r1, s1) } else { (r0, s0) };
        debug_assert_eq!(r, 1);
        Ok(FieldElement {
            bits: poly_rem(s, self.modulus as u128) as u64,
            modulus: self.modulus,
        })
    }

    pub fn try_div(self, rhs: Self) -> Result<Self, FieldError> {
        self.check(&rhs)?;
        Ok(self * rhs.inv()?)
    }

    /// GF(2)-inner product of the coefficient vectors.
    pub fn dot_bits(&self, other: &Self) -> bool {
        (self.bits & other.bits).count_ones() & 1 == 1
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.bits)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.bits)
    }
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs).expect("field mismatch in addition")
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        self
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(rhs).expect("field mismatch in multiplication")
    }
}

impl Div for FieldElement {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.try_div(rhs).expect("invalid division")
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Schoolbook product followed by long division, kept separate from
    /// `clmul`/`poly_rem`.
    fn schoolbook_mul(a: u64, b: u64, modulus: u64, k: u32) -> u64 {
        let mut coeffs = vec![0u8; 2 * k as usize];
        for i in 0..k {
            for j in 0..k {
                coeffs[(i + j) as usize] ^= (((a >> i) & 1) & ((b >> j) & 1)) as u8;
            }
        }
        for top in (k as usize..coeffs.len()).rev() {
            if coeffs[top] == 1 {
                for j in 0..=k as usize {
                    coeffs[top - k as usize + j] ^= ((modulus >> j) & 1) as u8;
                }
            }
        }
        coeffs[..k as usize]
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &c)| acc | ((c as u64) << i))
    }

    #[test]
    fn addition_examples() {
        let f = FieldSpec::gf64();
        let a = f.random(&mut ChaCha8Rng::seed_from_u64(3));
        assert!((a + a).is_zero());
        assert_eq!(f.zero() + a, a);
        let t2 = f.element(0b100).unwrap();
        let t2p1 = f.element(0b101).unwrap();
        assert_eq!(t2 + t2p1, f.one());
    }

    #[test]
    fn multiplication_examples() {
        let f = FieldSpec::gf64();
        assert_eq!(f.modulus(), 0b1001001);
        let t = f.alpha();
        let t5 = f.element(1 << 5).unwrap();
        assert_eq!(t * t5, f.element(0b1001).unwrap());
        let b = f.element(0b110101).unwrap();
        assert_eq!(f.one() * b, b);
        let t3 = f.element(0b1000).unwrap();
        let expected = schoolbook_mul(0b1000, 0b1000, f.modulus(), 6);
        assert_eq!((t3 * t3).bits(), expected);
        // t^6 = t^3 + 1
        assert_eq!(expected, 0b1001);
    }

    #[test]
    fn mul_matches_schoolbook_exhaustively() {
        for f in [FieldSpec::gf4(), FieldSpec::gf64(), FieldSpec::binary(5).unwrap()] {
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!((a * b).bits(), schoolbook_mul(a.bits(), b.bits(), f.modulus(), f.k()));
                }
            }
        }
    }

    #[test]
    fn inverse_by_exhaustive_search() {
        let f = FieldSpec::gf64();
        assert_eq!(f.one().inv().unwrap(), f.one());
        assert_eq!(f.zero().inv(), Err(FieldError::DivisionByZero));
        for a in f.elements().skip(1) {
            let found: Vec<_> = f.elements().filter(|&b| (a * b).is_one()).collect();
            assert_eq!(found.len(), 1);
            assert_eq!(a.inv().unwrap(), found[0]);
            assert_eq!(a.pow(f.size() - 2), found[0]);
        }
    }

    #[test]
    fn field_axioms_gf64() {
        let f = FieldSpec::gf64();
        let elems: Vec<_> = f.elements().collect();
        for &a in &elems {
            assert_eq!(a.pow(f.size() - 1), if a.is_zero() { f.zero() } else { f.one() });
            for &b in &elems {
                assert_eq!(a * b, b * a);
                assert_eq!(a + b, b + a);
                assert_eq!((a + b).square(), a.square() + b.square());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20_000 {
            let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
            assert_eq!((a * b) * c, a * (b * c));
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!((a + b) + c, a + (b + c));
        }
    }

    #[test]
    fn tower_moduli_are_irreducible() {
        assert!(is_irreducible(FieldSpec::tower(1).unwrap().modulus()));
        assert!(is_irreducible(FieldSpec::tower(2).unwrap().modulus()));
        assert_eq!(FieldSpec::tower(2).unwrap().modulus(), (1 << 18) | (1 << 9) | 1);
        assert_eq!(FieldSpec::tower(3).unwrap().k(), 54);
        assert!(FieldSpec::tower(4).is_err());
    }

    #[test]
    fn custom_modulus_validation() {
        assert!(FieldSpec::custom(2, 0b111).is_ok());
        assert_eq!(FieldSpec::custom(2, 0b101), Err(FieldError::Reducible(0b101)));
        assert!(matches!(FieldSpec::custom(3, 0b111), Err(FieldError::WrongDegree { .. })));
        assert_eq!(FieldSpec::custom(30, 1 << 30 | 3), Err(FieldError::UnverifiableDegree(30)));
        assert_eq!(FieldSpec::binary(8).unwrap().modulus(), 0x11b);
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let a = FieldSpec::gf4().one();
        let b = FieldSpec::gf64().one();
        assert!(matches!(a.try_add(b), Err(FieldError::Mismatch(..))));
        assert!(matches!(a.try_mul(b), Err(FieldError::Mismatch(..))));
    }

    #[test]
    fn sampling_is_uniform_and_deterministic() {
        let f = FieldSpec::gf64();
        let draws = 100_000;
        let mut counts = vec![0u64; 64];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..draws {
            counts[f.random(&mut rng).bits() as usize] += 1;
        }
        let stat = crate::stats::chi_square_uniform(&counts);
        assert!(stat < crate::stats::chi_square_critical(63, 0.001), "chi2 = {stat}");

        let seq = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..32).map(|_| f.random(&mut rng).bits()).collect::<Vec<_>>()
        };
        assert_eq!(seq(5), seq(5));
        assert_ne!(seq(5), seq(6));
    }

    #[test]
    fn spec_serialization() {
        let spec = FieldSpec::gf64();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"k":6,"modulus_hex":"0x49","provenance":"tower"}"#);
        let back: FieldSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"k":2,"modulus_hex":"0x5","provenance":"custom"}"#;
        assert!(serde_json::from_str::<FieldSpec>(bad).is_err());
    }
}
