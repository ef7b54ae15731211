//! Seeded random forms for property checks.

use std::sync::Arc;

use rand::Rng;

use crate::form::{PolyForm, ScalarForm};
use crate::poly::MAX_VARS;
use crate::scalar::Scalar;

/// Random scalar form with integer coefficients in `-3..=3` and x-degree at most `max_deg`.
pub fn scalar_form<T: Scalar, R: Rng>(
    rng: &mut R,
    n: usize,
    cap: usize,
    max_deg: usize,
) -> ScalarForm<T> {
    let mut f = ScalarForm::zero(n, cap);
    for mask in 0..(1usize << n) {
        for _ in 0..3 {
            let mut e = [0u8; MAX_VARS];
            let mut left = rng.gen_range(0..=max_deg);
            for v in 0..n {
                let a = rng.gen_range(0..=left);
                e[v] = a as u8;
                left -= a;
            }
            let c: i64 = rng.gen_range(-3..=3);
            f.add_assign(&ScalarForm::monomial(
                n,
                cap,
                mask,
                &e[..n.max(1)],
                T::from_int(c),
            ));
        }
    }
    f
}

/// Random W-valued form of total degree `degree`.
pub fn poly_form<T: Scalar, R: Rng>(
    rng: &mut R,
    wdeg: &Arc<Vec<usize>>,
    n: usize,
    cap: usize,
    degree: i32,
    max_deg: usize,
) -> PolyForm<T> {
    let comps = wdeg
        .iter()
        .map(|_| scalar_form(rng, n, cap, max_deg))
        .collect();
    PolyForm::from_comps(wdeg.clone(), degree, comps)
}

/// Small closed form of total degree 0: constant coefficients plus an exact
/// part `dβ` with `β` of x-degree at most 2. Coefficients are at most `amp`.
pub fn small_closed<R: Rng>(
    rng: &mut R,
    wdeg: &Arc<Vec<usize>>,
    n: usize,
    cap: usize,
    amp: f64,
) -> PolyForm<f64> {
    let mut comps = Vec::new();
    for _ in wdeg.iter() {
        let mut f = ScalarForm::zero(n, cap);
        for mask in 0..(1usize << n) {
            let c = rng.gen_range(-amp..amp);
            f.add_assign(&ScalarForm::monomial(n, cap, mask, &[], c));
        }
        comps.push(f);
    }
    let base = PolyForm::from_comps(wdeg.clone(), 0, comps);
    let mut beta: PolyForm<f64> = poly_form(rng, wdeg, n, cap, -1, 2);
    beta = beta.scale(&(amp / 6.0));
    base.add(&beta.d())
}
