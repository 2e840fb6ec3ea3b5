use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Coordinates of a Lie algebra element in the basis of its [`LieAlgebra`](super::LieAlgebra).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlgebraVector(pub DVector<f64>);

/// Coordinates of a dual element (momentum) in the dual basis.
///
/// The pairing with an [`AlgebraVector`] is the coordinate dot product; every
/// metric identification goes through [`Inertia`](super::Inertia).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct DualVector(pub DVector<f64>);

macro_rules! coordinate_newtype {
    ($ty:ident) => {
        impl $ty {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(DVector::from_vec(coords))
            }

            pub fn from_slice(coords: &[f64]) -> Self {
                Self(DVector::from_column_slice(coords))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> f64) -> Self {
                Self(DVector::from_fn(dim, |i, _| f(i)))
            }

            /// The `i`-th basis (or dual basis) vector.
            pub fn unit(dim: usize, i: usize) -> Self {
                let mut v = DVector::zeros(dim);
                v[i] = 1.0;
                Self(v)
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn coords(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn into_inner(self) -> DVector<f64> {
                self.0
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn amax(&self) -> f64 {
                self.0.amax()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            pub fn scale(&self, s: f64) -> Self {
                Self(&self.0 * s)
            }
        }

        impl Index<usize> for $ty {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl From<Vec<f64>> for $ty {
            fn from(v: Vec<f64>) -> Self {
                Self(DVector::from_vec(v))
            }
        }

        impl From<$ty> for Vec<f64> {
            fn from(v: $ty) -> Vec<f64> {
                v.0.as_slice().to_vec()
            }
        }

        impl From<DVector<f64>> for $ty {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                $ty(self.0 + rhs.0)
            }
        }

        impl<'a> Add<&'a $ty> for &'a $ty {
            type Output = $ty;
            fn add(self, rhs: &'a $ty) -> $ty {
                $ty(&self.0 + &rhs.0)
            }
        }

        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                $ty(self.0 - rhs.0)
            }
        }

        impl<'a> Sub<&'a $ty> for &'a $ty {
            type Output = $ty;
            fn sub(self, rhs: &'a $ty) -> $ty {
                $ty(&self.0 - &rhs.0)
            }
        }

        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ty(-self.0)
            }
        }

        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ty(-&self.0)
            }
        }

        impl Mul<f64> for $ty {
            type Output = $ty;
            fn mul(self, rhs: f64) -> $ty {
                $ty(self.0 * rhs)
            }
        }

        impl Mul<f64> for &$ty {
            type Output = $ty;
            fn mul(self, rhs: f64) -> $ty {
                $ty(&self.0 * rhs)
            }
        }

        impl AddAssign<&$ty> for $ty {
            fn add_assign(&mut self, rhs: &$ty) {
                self.0 += &rhs.0;
            }
        }

        impl SubAssign<&$ty> for $ty {
            fn sub_assign(&mut self, rhs: &$ty) {
                self.0 -= &rhs.0;
            }
        }
    };
}

coordinate_newtype!(AlgebraVector);
coordinate_newtype!(DualVector);

impl DualVector {
    /// ⟨μ, x⟩.
    pub fn pair(&self, x: &AlgebraVector) -> f64 {
        self.0.dot(&x.0)
    }
}

impl AlgebraVector {
    /// ⟨μ, x⟩, argument order flipped.
    pub fn pair(&self, mu: &DualVector) -> f64 {
        self.0.dot(&mu.0)
    }
}

/// Concatenate coordinate blocks into one flat vector.
pub(crate) fn stack<'a, I>(blocks: I) -> DVector<f64>
where
    I: IntoIterator<Item = &'a DVector<f64>>,
{
    let mut out = Vec::new();
    for b in blocks {
        out.extend_from_slice(b.as_slice());
    }
    DVector::from_vec(out)
}

/// Sequential reader over a flat state vector.
pub(crate) struct Unstack<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> Unstack<'a> {
    pub(crate) fn new(v: &'a DVector<f64>) -> Self {
        Self {
            data: v.as_slice(),
            pos: 0,
        }
    }

    pub(crate) fn take(&mut self, n: usize) -> DVector<f64> {
        let out = DVector::from_column_slice(&self.data[self.pos..self.pos + n]);
        self.pos += n;
        out
    }

    pub(crate) fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }
}
