use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

use crate::poly::Basis;

/// Coefficient field for polynomial forms.
///
/// `f64` is used by the solvers; `BigRational` lets the linear operators
/// (d, h, p, s, pullbacks) be checked for exact identities.
pub trait Scalar:
    Num + Signed + Clone + FromPrimitive + ToPrimitive + Debug + PartialOrd + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer fits scalar")
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_rational(q: &BigRational) -> Self;

    /// Integral of the `i`-th basis monomial times the top form over the simplex.
    fn dirichlet_weight(b: &Basis, i: usize) -> Self {
        Self::from_rational(&b.dirichlet()[i])
    }
}

impl Scalar for f64 {
    fn from_rational(q: &BigRational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }

    fn dirichlet_weight(b: &Basis, i: usize) -> Self {
        b.dirichlet_f64()[i]
    }
}

impl Scalar for BigRational {
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(0.into()))
}
