//! Small dense complex vector helpers. Dimensions here never exceed a few
//! dozen entries, so plain `Vec<Complex64>` is enough.

use num_complex::Complex64;

pub type CVec = Vec<Complex64>;

/// `a^H b`
pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// `acc += scale * v`
pub fn axpy(acc: &mut [Complex64], scale: Complex64, v: &[Complex64]) {
    debug_assert_eq!(acc.len(), v.len());
    for (a, x) in acc.iter_mut().zip(v) {
        *a += scale * x;
    }
}

pub fn zeros(n: usize) -> CVec {
    vec![Complex64::new(0.0, 0.0); n]
}

pub fn is_finite(a: &[Complex64]) -> bool {
    a.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}
