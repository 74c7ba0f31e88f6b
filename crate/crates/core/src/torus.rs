//! The circle S = ℝ/2ℤ, its N-fold power, and the metrics ρ and ρ_N.
//!
//! Elements are stored by their canonical representative in `[0, 2)`.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Scalar};

/// A point of ℝ/2ℤ.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusElem<S: Scalar> {
    value: S,
}

/// Reduces any rational to its representative in `[0, 2)`.
pub fn torus_reduce<S: Scalar>(q: S) -> TorusElem<S> {
    TorusElem::new(q)
}

impl<S: Scalar> TorusElem<S> {
    pub fn new(q: S) -> Self {
        let two = S::two();
        let k = (q.clone() / two.clone()).floor();
        Self { value: q - k * two }
    }

    pub fn zero() -> Self {
        Self { value: S::zero() }
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Self::new(S::ratio(numer, denom))
    }

    pub fn value(&self) -> &S {
        &self.value
    }

    pub fn into_value(self) -> S {
        self.value
    }

    /// Multiplies by an integer, as a group element.
    pub fn times(&self, k: i64) -> Self {
        Self::new(self.value.clone() * S::from_int(k))
    }
}

/// ρ(x, y) = min over n of |x − y − 2n|; always in `[0, 1]`.
pub fn rho<S: Scalar>(x: &TorusElem<S>, y: &TorusElem<S>) -> S {
    let d = (x.clone() - y.clone()).value;
    let other = S::two() - d.clone();
    if d <= other {
        d
    } else {
        other
    }
}

impl<S: Scalar> Add for TorusElem<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value)
    }
}

impl<S: Scalar> Add<&TorusElem<S>> for &TorusElem<S> {
    type Output = TorusElem<S>;
    fn add(self, rhs: &TorusElem<S>) -> TorusElem<S> {
        TorusElem::new(self.value.clone() + rhs.value.clone())
    }
}

impl<S: Scalar> Sub for TorusElem<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value)
    }
}

impl<S: Scalar> Sub<&TorusElem<S>> for &TorusElem<S> {
    type Output = TorusElem<S>;
    fn sub(self, rhs: &TorusElem<S>) -> TorusElem<S> {
        TorusElem::new(self.value.clone() - rhs.value.clone())
    }
}

impl<S: Scalar> Neg for TorusElem<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value)
    }
}

impl<S: Scalar> AddAssign<&TorusElem<S>> for TorusElem<S> {
    fn add_assign(&mut self, rhs: &TorusElem<S>) {
        *self = &*self + rhs;
    }
}

impl<S: Scalar> SubAssign<&TorusElem<S>> for TorusElem<S> {
    fn sub_assign(&mut self, rhs: &TorusElem<S>) {
        *self = &*self - rhs;
    }
}

impl<S: Scalar> fmt::Debug for TorusElem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value.to_fraction_string())
    }
}

impl<S: Scalar> fmt::Display for TorusElem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value.to_fraction_string())
    }
}

impl<S: Scalar> Serialize for TorusElem<S> {
    fn serialize<Z: Serializer>(&self, ser: Z) -> Result<Z::Ok, Z::Error> {
        ser.serialize_str(&self.value.to_fraction_string())
    }
}

impl<'de, S: Scalar> Deserialize<'de> for TorusElem<S> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        parse_rational(&text).map(Self::new).map_err(serde::de::Error::custom)
    }
}

/// A point of S^N.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent, bound = "S: Scalar")]
pub struct TorusVec<S: Scalar> {
    coords: Vec<TorusElem<S>>,
}

impl<S: Scalar> TorusVec<S> {
    pub fn new(coords: Vec<TorusElem<S>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        Ok(Self { coords })
    }

    pub fn from_scalars(values: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(values.into_iter().map(TorusElem::new).collect())
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim > 0, "alphabet dimension must be positive");
        Self { coords: vec![TorusElem::zero(); dim] }
    }

    /// The same element in every coordinate.
    pub fn splat(value: TorusElem<S>, dim: usize) -> Self {
        assert!(dim > 0, "alphabet dimension must be positive");
        Self { coords: vec![value; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[TorusElem<S>] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.value.is_zero())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub(crate) fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() })
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&TorusElem<S>, &TorusElem<S>) -> TorusElem<S>) -> Self {
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| f(a, b)).collect() }
    }
}

/// ρ_N(x, y) = max over coordinates of ρ.
pub fn rho_n<S: Scalar>(x: &TorusVec<S>, y: &TorusVec<S>) -> Result<S> {
    x.same_dim(y)?;
    Ok(x.coords
        .iter()
        .zip(&y.coords)
        .map(|(a, b)| rho(a, b))
        .max()
        .expect("dimension is positive"))
}

// Panicking operators for internal loops where dimensions were checked up front.
impl<S: Scalar> Add<&TorusVec<S>> for &TorusVec<S> {
    type Output = TorusVec<S>;
    fn add(self, rhs: &TorusVec<S>) -> TorusVec<S> {
        assert_eq!(self.dim(), rhs.dim(), "alphabet dimension mismatch");
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<S: Scalar> Sub<&TorusVec<S>> for &TorusVec<S> {
    type Output = TorusVec<S>;
    fn sub(self, rhs: &TorusVec<S>) -> TorusVec<S> {
        assert_eq!(self.dim(), rhs.dim(), "alphabet dimension mismatch");
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<S: Scalar> AddAssign<&TorusVec<S>> for TorusVec<S> {
    fn add_assign(&mut self, rhs: &TorusVec<S>) {
        assert_eq!(self.dim(), rhs.dim(), "alphabet dimension mismatch");
        for (a, b) in self.coords.iter_mut().zip(&rhs.coords) {
            *a += b;
        }
    }
}

impl<S: Scalar> SubAssign<&TorusVec<S>> for TorusVec<S> {
    fn sub_assign(&mut self, rhs: &TorusVec<S>) {
        assert_eq!(self.dim(), rhs.dim(), "alphabet dimension mismatch");
        for (a, b) in self.coords.iter_mut().zip(&rhs.coords) {
            *a -= b;
        }
    }
}

impl<S: Scalar> Neg for &TorusVec<S> {
    type Output = TorusVec<S>;
    fn neg(self) -> TorusVec<S> {
        TorusVec { coords: self.coords.iter().cloned().map(Neg::neg).collect() }
    }
}

impl<S: Scalar> fmt::Debug for TorusVec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.coords).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use crate::{Rational, Torus, TorusPoint};
    use num_traits::{One, Zero};

    fn t(n: i64, d: i64) -> Torus {
        Torus::from_ratio(n, d)
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(torus_reduce(Rational::zero()).value(), &Rational::zero());
        assert_eq!(torus_reduce(Rational::ratio(8, 3)).value(), &Rational::ratio(2, 3));
        assert_eq!(torus_reduce(Rational::ratio(-1, 2)).value(), &Rational::ratio(3, 2));
        assert_eq!(torus_reduce(Rational::from_int(2)).value(), &Rational::zero());
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&t(1, 3), &t(1, 3)), Rational::zero());
        assert_eq!(rho(&t(0, 1), &t(1, 1)), Rational::one());
        // brute force over n in -2..=2 of |1/3 - 5/3 - 2n|
        let brute = (-2..=2)
            .map(|n| (Rational::ratio(1, 3) - Rational::ratio(5, 3) - Rational::from_int(2 * n)).abs())
            .min()
            .unwrap();
        assert_eq!(brute, Rational::ratio(2, 3));
        assert_eq!(rho(&t(1, 3), &t(5, 3)), brute);
    }

    #[test]
    fn rho_n_examples() {
        let origin = TorusPoint::zero(2);
        let y = TorusPoint::new(vec![t(1, 1), t(1, 2)]).unwrap();
        assert_eq!(rho_n(&origin, &origin).unwrap(), Rational::zero());
        assert_eq!(rho_n(&origin, &y).unwrap(), Rational::one());
        let a = TorusPoint::new(vec![t(1, 3), t(0, 1)]).unwrap();
        let b = TorusPoint::new(vec![t(5, 3), t(0, 1)]).unwrap();
        assert_eq!(rho_n(&a, &b).unwrap(), Rational::ratio(2, 3));
    }

    #[test]
    fn rho_n_rejects_mismatched_dimensions() {
        let err = rho_n(&TorusPoint::zero(1), &TorusPoint::zero(2)).unwrap_err();
        assert!(err.to_string().contains("alphabet dimension mismatch"));
    }

    #[test]
    fn serializes_canonical_representative() {
        let v = TorusPoint::new(vec![t(-1, 2), t(4, 1)]).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["3/2","0/1"]"#);
        let back: TorusPoint = serde_json::from_str(r#"["-1/2","4"]"#).unwrap();
        assert_eq!(back, v);
    }
}
