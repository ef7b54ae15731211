//! Lie algebras read off from charts with only odd degree-1 coordinates and
//! quadratic `Q`, and the Baker–Campbell–Hausdorff product.

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;

use crate::graded::ChartedDgManifold;

/// Structure constants: `[e_j, e_k] = Σ_i c[i][j][k] e_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    pub dim: usize,
    c: Vec<Vec<Vec<f64>>>,
}

/// Coefficients of `x/(1 - e^{-x})` up to `x^12`.
const PSI: [f64; 13] = [
    1.0,
    0.5,
    1.0 / 12.0,
    0.0,
    -1.0 / 720.0,
    0.0,
    1.0 / 30240.0,
    0.0,
    -1.0 / 1209600.0,
    0.0,
    1.0 / 47900160.0,
    0.0,
    -691.0 / 1307674368000.0,
];

impl LieAlgebra {
    /// `None` unless every coordinate has degree 1 and `Q` is quadratic.
    pub fn from_chart(dg: &ChartedDgManifold) -> Option<Self> {
        let cs = dg.coords();
        if cs.is_empty() || (0..cs.len()).any(|i| cs.degree(i) != 1) {
            return None;
        }
        let n = cs.len();
        let mut c = vec![vec![vec![0.0; n]; n]; n];
        for (i, f) in dg.fq().iter().enumerate() {
            for (m, v) in f.terms() {
                if m.xi.len() != 2 {
                    return None;
                }
                let (j, k) = (m.xi[0], m.xi[1]);
                let v = v.to_f64()?;
                c[i][j][k] = v;
                c[i][k][j] = -v;
            }
        }
        Some(LieAlgebra { dim: n, c })
    }

    pub fn bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..self.dim {
                    for k in 0..self.dim {
                        s += self.c[i][j][k] * a[j] * b[k];
                    }
                }
                s
            })
            .collect()
    }

    /// Matrix of `ad_z`.
    pub fn ad(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, k| {
            (0..self.dim).map(|j| self.c[i][j][k] * z[j]).sum()
        })
    }

    /// `log(e^a e^b)`, integrating `dz/dt = ψ(ad_z) b` from `z(0) = a`.
    pub fn bch(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let bv = DVector::from_column_slice(b);
        let rhs = |z: &DVector<f64>| -> DVector<f64> {
            let x = self.ad(z.as_slice());
            let mut term = bv.clone();
            let mut out = bv.clone();
            for coef in &PSI[1..] {
                term = &x * term;
                if *coef != 0.0 {
                    out += &term * *coef;
                }
            }
            out
        };
        let steps = 256;
        let h = 1.0 / steps as f64;
        let mut z = DVector::from_column_slice(a);
        for _ in 0..steps {
            let k1 = rhs(&z);
            let k2 = rhs(&(&z + &k1 * (h / 2.0)));
            let k3 = rhs(&(&z + &k2 * (h / 2.0)));
            let k4 = rhs(&(&z + &k3 * h));
            z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        z.as_slice().to_vec()
    }
}
