//! LMMSE receive vectors in closed form.
//!
//! With a diagonal noise covariance the stacked receiver is
//! `v = conj(xbar) Sigma^{-1} b / (1 + b^H Sigma^{-1} b)`, the rank-one
//! inverse written out elementwise.

use num_complex::Complex64;

use crate::cvec::CVec;
use crate::metrics::{mse_explicit, EffectiveVector, NoiseDiagonal};
use crate::{Error, Result};

/// One stacked receive vector per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveVectors {
    pub v: Vec<CVec>,
}

pub fn lmmse_vector(b: &EffectiveVector, noise: &NoiseDiagonal, xbar_q: Complex64) -> Result<CVec> {
    let u = b.weighted_energy(noise)?;
    let scale = xbar_q.conj() / (1.0 + u);
    let v: CVec = b
        .stacked()
        .iter()
        .zip(&noise.diag)
        .map(|(bi, n)| scale * bi / n)
        .collect();
    if !crate::cvec::is_finite(&v) {
        return Err(Error::Numerical("non-finite receive vector".into()));
    }
    Ok(v)
}

pub fn lmmse_vectors(bs: &[EffectiveVector], noise: &NoiseDiagonal, xbar: &[Complex64]) -> Result<ReceiveVectors> {
    if bs.len() != xbar.len() {
        return Err(Error::Dimension("one effective vector per slot required".into()));
    }
    let v = bs
        .iter()
        .zip(xbar)
        .map(|(b, x)| lmmse_vector(b, noise, *x))
        .collect::<Result<_>>()?;
    Ok(ReceiveVectors { v })
}

/// Largest MSE decrease found by perturbing `v` along each real and
/// imaginary coordinate by `+-step`. Nonpositive means no improving move.
pub fn grid_optimality_check(
    v: &[Complex64],
    b: &EffectiveVector,
    noise: &NoiseDiagonal,
    xbar_q: Complex64,
    step: f64,
) -> Result<f64> {
    let base = mse_explicit(v, b, noise, xbar_q)?;
    let mut best = f64::NEG_INFINITY;
    let mut probe = v.to_vec();
    for i in 0..v.len() {
        for d in [
            Complex64::new(step, 0.0),
            Complex64::new(-step, 0.0),
            Complex64::new(0.0, step),
            Complex64::new(0.0, -step),
        ] {
            probe[i] = v[i] + d;
            best = best.max(base - mse_explicit(&probe, b, noise, xbar_q)?);
        }
        probe[i] = v[i];
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mse_reduced;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_case(seed: u64, n5: usize, m: usize, nwf: usize) -> (EffectiveVector, NoiseDiagonal, Complex64) {
        let mut rng = crate::rng::stream(seed, &[1]);
        let len = n5 + 2 * m * nwf;
        let s: CVec = (0..len).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
        let diag = (0..len).map(|_| rng.random_range(0.1..3.0)).collect();
        let x = c(rng.random_range(1.0..30.0), rng.random_range(1.0..30.0));
        (EffectiveVector::from_stacked(&s, n5, m, nwf).unwrap(), NoiseDiagonal { diag }, x)
    }

    /// `(b b^H + Sigma)^{-1} b xbar^*` by dense inversion.
    fn dense_lmmse(b: &EffectiveVector, noise: &NoiseDiagonal, x: Complex64) -> CVec {
        let s = b.stacked();
        let n = s.len();
        let bv = DVector::from_vec(s);
        let mut a = &bv * bv.adjoint();
        for i in 0..n {
            a[(i, i)] += c(noise.diag[i], 0.0);
        }
        let inv: DMatrix<Complex64> = a.try_inverse().unwrap();
        let v = inv * bv * x.conj();
        v.iter().copied().collect()
    }

    #[test]
    fn matches_dense_inverse() {
        for seed in 0..20 {
            let (b, noise, x) = random_case(seed, 4, 3, 2);
            let v = lmmse_vector(&b, &noise, x).unwrap();
            let dense = dense_lmmse(&b, &noise, x);
            for (a, d) in v.iter().zip(&dense) {
                assert!((a - d).norm() <= 1e-10 * (1.0 + d.norm()), "{a} vs {d}");
            }
        }
    }

    #[test]
    fn explicit_mse_equals_reduced_at_optimum() {
        for seed in 0..20 {
            let (b, noise, x) = random_case(seed + 100, 4, 2, 2);
            let v = lmmse_vector(&b, &noise, x).unwrap();
            let e = mse_explicit(&v, &b, &noise, x).unwrap();
            let r = mse_reduced(&b, &noise, x).unwrap();
            assert!((e - r).abs() <= 1e-10 * r.abs().max(1e-300));
        }
    }

    #[test]
    fn zero_effective_vector_gives_zero_receiver() {
        let b = EffectiveVector::zeros(2, 1, 2);
        let noise = NoiseDiagonal { diag: vec![1.0; 6] };
        let v = lmmse_vector(&b, &noise, c(4.0, 1.0)).unwrap();
        assert!(v.iter().all(|z| z.norm() == 0.0));
        assert!((mse_explicit(&v, &b, &noise, c(4.0, 1.0)).unwrap() - 17.0).abs() < 1e-12);
    }

    #[test]
    fn no_grid_move_improves() {
        for seed in 0..5 {
            let (b, noise, x) = random_case(seed + 200, 3, 1, 2);
            let v = lmmse_vector(&b, &noise, x).unwrap();
            assert!(grid_optimality_check(&v, &b, &noise, x, 1e-3).unwrap() <= 0.0);
        }
    }

    #[test]
    fn slot_count_checked() {
        let (b, noise, x) = random_case(1, 2, 1, 1);
        assert!(lmmse_vectors(&[b.clone(), b], &noise, &[x]).is_err());
    }

    proptest! {
        #[test]
        fn sherman_morrison_form(seed in 0u64..10_000) {
            let (b, noise, x) = random_case(seed, 2, 2, 1);
            let v = lmmse_vector(&b, &noise, x).unwrap();
            let dense = dense_lmmse(&b, &noise, x);
            for (a, d) in v.iter().zip(&dense) {
                prop_assert!((a - d).norm() <= 1e-10 * (1.0 + d.norm()));
            }
        }
    }
}
