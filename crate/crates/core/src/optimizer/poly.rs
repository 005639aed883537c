//! Real roots of small real polynomials on an interval.
//!
//! Coefficients are stored lowest degree first.

pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Drops leading coefficients that are negligible next to the largest one.
fn trim(p: &[f64]) -> &[f64] {
    let big = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut n = p.len();
    while n > 0 && p[n - 1].abs() <= big * 1e-14 {
        n -= 1;
    }
    &p[..n]
}

/// All real roots in `[lo, hi]`, sorted. Critical points of the derivative
/// split the interval into monotone pieces, each bisected on a sign change.
pub fn real_roots_in(p: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let p = trim(p);
    if p.len() <= 1 || !(lo <= hi) {
        return vec![];
    }
    if p.len() == 2 {
        let r = -p[0] / p[1];
        return if (lo..=hi).contains(&r) { vec![r] } else { vec![] };
    }
    let mut knots = vec![lo];
    knots.extend(real_roots_in(&derivative(p), lo, hi).into_iter().filter(|&c| c > lo && c < hi));
    knots.push(hi);
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(p, a), eval(p, b));
        let r = if fa == 0.0 {
            Some(a)
        } else if fb == 0.0 {
            Some(b)
        } else if fa.signum() != fb.signum() {
            Some(bisect(p, a, b, fa))
        } else {
            None
        };
        if let Some(r) = r {
            if roots.last().is_none_or(|&last| r > last) {
                roots.push(r);
            }
        }
    }
    roots
}

fn bisect(p: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = eval(p, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_roots(roots: &[f64]) -> Vec<f64> {
        roots.iter().fold(vec![1.0], |acc, r| mul(&acc, &[-r, 1.0]))
    }

    #[test]
    fn finds_all_roots_of_quintic() {
        let rs = [-0.9, -0.2, 0.1, 0.45, 0.8];
        let got = real_roots_in(&from_roots(&rs), -1.0, 1.0);
        assert_eq!(got.len(), 5);
        for (g, r) in got.iter().zip(&rs) {
            assert!((g - r).abs() < 1e-10, "{g} vs {r}");
        }
    }

    #[test]
    fn respects_interval() {
        let p = from_roots(&[-2.0, 0.5, 3.0]);
        assert_eq!(real_roots_in(&p, 0.0, 1.0).len(), 1);
    }

    #[test]
    fn no_real_roots() {
        assert!(real_roots_in(&[1.0, 0.0, 1.0], -5.0, 5.0).is_empty());
        assert!(real_roots_in(&[3.0], 0.0, 1.0).is_empty());
    }

    #[test]
    fn double_root_touching_zero() {
        let p = from_roots(&[0.3, 0.3]);
        let got = real_roots_in(&p, 0.0, 1.0);
        assert_eq!(got.len(), 1);
        assert!((got[0] - 0.3).abs() < 1e-7);
    }

    #[test]
    fn arithmetic_helpers() {
        assert_eq!(eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(derivative(&[1.0, 2.0, 3.0]), vec![2.0, 6.0]);
        assert_eq!(add(&[1.0], &[0.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(scale(&[1.0, -2.0], 3.0), vec![3.0, -6.0]);
    }

    proptest! {
        #[test]
        fn separated_roots_recovered(mut rs in proptest::collection::vec(0.0f64..1.0, 1..6)) {
            rs.sort_by(f64::total_cmp);
            prop_assume!(rs.windows(2).all(|w| w[1] - w[0] > 1e-2));
            let got = real_roots_in(&from_roots(&rs), -0.01, 1.01);
            prop_assert_eq!(got.len(), rs.len());
            for (g, r) in got.iter().zip(&rs) {
                prop_assert!((g - r).abs() < 1e-8);
            }
        }
    }
}
