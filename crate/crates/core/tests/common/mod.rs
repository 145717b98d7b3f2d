#![allow(dead_code)]

use green_precoding::linalg::{lift_vec, CMatrix, Matrix};
use green_precoding::scalar::Real;
use num_complex::Complex;
use rand::Rng;

/// i.i.d. CN(0, 1) channel.
pub fn iid_channel<R: Rng>(k: usize, m: usize, rng: &mut R) -> CMatrix<f64> {
    let half = 0.5f64.sqrt();
    CMatrix::from_fn(k, m, |_, _| {
        Complex::new(
            f64::standard_normal(rng) * half,
            f64::standard_normal(rng) * half,
        )
    })
}

/// Uniform unit-energy QPSK symbols.
pub fn qpsk<R: Rng>(k: usize, rng: &mut R) -> Vec<Complex<f64>> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..k)
        .map(|_| {
            Complex::new(
                if rng.random() { a } else { -a },
                if rng.random() { a } else { -a },
            )
        })
        .collect()
}

pub fn random_vec<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| scale * f64::standard_normal(rng)).collect()
}

/// Random lifted instance `(s_r, H_r)`.
pub fn lifted_instance<R: Rng>(k: usize, m: usize, rng: &mut R) -> (Vec<f64>, Matrix<f64>) {
    let h = iid_channel(k, m, rng);
    (lift_vec(&qpsk(k, rng)), h.lift())
}

pub fn to_nalgebra(m: &Matrix<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}
