//! RAT-selection subproblem: relaxed coordinate pass, rounding, repair.

use num_complex::Complex64;

use crate::metrics::{assemble_b, tx_power, NoiseDiagonal, RatSelection, SelectionForm, SlotCoeffs};
use crate::scenario::{Role, Scenario};
use crate::{Error, Result};

use super::poly;

/// Half-width of the band around 0.5 treated as an exact tie.
pub const TIE_EPS: f64 = 1e-12;

/// `g_q` restricted to one device's selection: every term is an exact
/// polynomial in `a` except the MSE ratio and the delay kink.
struct Section {
    c: f64,
    u: [f64; 3],
    pi: [f64; 3],
    kappa: f64,
    delay_slope: f64,
    kink: Option<f64>,
    delay_rest: f64,
    path: f64,
    delay_w: f64,
}

impl Section {
    fn u_at(&self, a: f64) -> f64 {
        poly::eval(&self.u, a)
    }

    fn value(&self, a: f64) -> f64 {
        let delay = self.delay_w * (self.delay_rest.max((1.0 - a) * self.path) + 1.0);
        self.c / (1.0 + self.u_at(a)) + poly::eval(&self.pi, a) + self.kappa * a + delay
    }

    /// Numerator of `g'` on a smooth piece with delay slope `slope`.
    fn stationarity_poly(&self, slope: f64) -> Vec<f64> {
        let one_u = [1.0 + self.u[0], self.u[1], self.u[2]];
        let sq = poly::mul(&one_u, &one_u);
        let du = poly::derivative(&self.u);
        let lin = poly::add(&poly::derivative(&self.pi), &[self.kappa + slope]);
        poly::add(&poly::scale(&du, -self.c), &poly::mul(&lin, &sq))
    }

    fn argmin(&self) -> f64 {
        let mut cands = vec![0.0, 1.0];
        let mut pieces = vec![];
        match self.kink {
            Some(t) => {
                cands.push(t);
                pieces.push((0.0, t, self.delay_slope));
                pieces.push((t, 1.0, 0.0));
            }
            None => pieces.push((0.0, 1.0, if self.delay_rest < self.path { self.delay_slope } else { 0.0 })),
        }
        for (lo, hi, slope) in pieces {
            cands.extend(poly::real_roots_in(&self.stationarity_poly(slope), lo, hi));
        }
        cands.retain(|a| a.is_finite());
        cands.sort_by(f64::total_cmp);
        let mut best = (cands[0], self.value(cands[0]));
        for &a in &cands[1..] {
            let v = self.value(a);
            if v < best.1 {
                best = (a, v);
            }
        }
        best.0.clamp(0.0, 1.0)
    }
}

fn weighted_power(alpha_q: &[f64], beta: &SlotCoeffs, lambda: &[f64], scn: &Scenario, q: usize, who: &[usize]) -> Result<f64> {
    let mut s = 0.0;
    for &j in who {
        s += lambda[j] * tx_power(alpha_q, beta, scn, j, q)?;
    }
    Ok(s)
}

fn section(alpha_q: &mut [f64], beta: &SlotCoeffs, lambda: &[f64], scn: &Scenario, q: usize, k: usize) -> Result<Section> {
    let p = &scn.params;
    let cov = &scn.coverage;
    let noise = NoiseDiagonal::for_params(p);
    let saved = alpha_q[k];

    alpha_q[k] = 0.0;
    let b0 = assemble_b(alpha_q, beta, scn, q)?.stacked();
    alpha_q[k] = 1.0;
    let b1 = assemble_b(alpha_q, beta, scn, q)?.stacked();
    let (mut u0, mut u1, mut u2) = (0.0, 0.0, 0.0);
    for ((x, y), n) in b0.iter().zip(&b1).zip(&noise.diag) {
        let d: Complex64 = y - x;
        u0 += x.norm_sqr() / n;
        u1 += 2.0 * (x.conj() * d).re / n;
        u2 += d.norm_sqr() / n;
    }

    let mut who = vec![k];
    if let Role::TypeII { relay, .. } = cov.roles[k] {
        who.push(relay);
    }
    let mut pw = [0.0; 3];
    for (i, a) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        alpha_q[k] = a;
        pw[i] = weighted_power(alpha_q, beta, lambda, scn, q, &who)?;
    }
    alpha_q[k] = saved;
    let pi2 = 2.0 * (pw[2] - 2.0 * pw[1] + pw[0]);
    let pi1 = pw[2] - pw[0] - pi2;

    let path = match cov.roles[k] {
        Role::TypeII { .. } => cov.path_len[k].map_or(0.0, |l| l as f64),
        _ => 0.0,
    };
    let delay_rest = cov
        .type_two
        .iter()
        .filter(|&&j| j != k)
        .filter_map(|&j| cov.path_len[j].map(|l| (1.0 - alpha_q[j]) * l as f64))
        .fold(0.0, f64::max);
    let delay_w = p.w_delay * p.t_tx;
    let kink = if path > 0.0 && delay_rest > 0.0 && delay_rest < path {
        Some(1.0 - delay_rest / path)
    } else {
        None
    };
    Ok(Section {
        c: p.w_mse * scn.ivas.xbar[q].norm_sqr(),
        u: [u0, u1, u2],
        pi: [pw[0], pi1, pi2],
        kappa: p.w_cost * (p.cost_5g - p.cost_wf),
        delay_slope: -delay_w * path,
        kink,
        delay_rest,
        path,
        delay_w,
    })
}

/// One block-coordinate pass over the devices of slot `q`, each entry set
/// to the exact minimizer over `[0, 1]` of the slot's Lagrangian piece with
/// the other entries held at their current values. Ties go to the smaller
/// selection. 5G-forced devices are pinned to 1.
pub fn relaxed_rat_update(alpha_q: &[f64], beta: &SlotCoeffs, lambda: &[f64], scn: &Scenario, q: usize) -> Result<Vec<f64>> {
    let p = &scn.params;
    if alpha_q.len() != p.k || lambda.len() != p.k {
        return Err(Error::Dimension("selection and multipliers need K entries".into()));
    }
    let mut a = alpha_q.to_vec();
    for k in 0..p.k {
        if scn.coverage.is_forced_5g(k) {
            a[k] = 1.0;
            continue;
        }
        a[k] = section(&mut a, beta, lambda, scn, q, k)?.argmin();
    }
    Ok(a)
}

pub fn round_entry(a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Dimension(format!("selection entry {a} outside [0,1]")));
    }
    Ok(if a >= 0.5 + TIE_EPS { 1.0 } else { 0.0 })
}

/// Entries at or above `0.5 + TIE_EPS` go to 5G, everything else (including
/// exact ties) to WiFi.
pub fn round_selection(relaxed: &RatSelection) -> Result<RatSelection> {
    let cols = relaxed
        .columns()
        .iter()
        .map(|col| col.iter().map(|&a| round_entry(a)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    RatSelection::binary(cols)
}

/// A reachable type-II device needs at least one 5G slot to spend its
/// energy budget; if rounding left it on WiFi everywhere, its slot with
/// the largest relaxed value (lowest index on ties) is moved to 5G.
pub fn repair(alpha: &mut RatSelection, relaxed: &RatSelection, scn: &Scenario) -> usize {
    debug_assert_eq!(alpha.form(), SelectionForm::Binary);
    let mut fixed = 0;
    for k in 0..scn.params.k {
        if !matches!(scn.coverage.roles[k], Role::TypeII { .. }) {
            continue;
        }
        if (0..scn.params.q).any(|q| alpha.get(k, q) == 1.0) {
            continue;
        }
        let mut best = 0;
        for q in 1..scn.params.q {
            if relaxed.get(k, q) > relaxed.get(k, best) {
                best = q;
            }
        }
        alpha.set(k, best, 1.0);
        fixed += 1;
    }
    fixed
}
