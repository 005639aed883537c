//! Transmit-coefficient subproblem.
//!
//! Internally the solver works with signal amplitudes ("drives"): `beta*x`
//! for the 5G and WiFi roles and `beta*S` for a relay's D2D role, where `S`
//! is the sum of the IVAs it forwards. Power is then `|drive|^2` per open
//! role and the stationarity condition for every open role reads
//! `drive = s_q h^H b_B / (sigma_B^2 lambda_k)` with
//! `s_q = w_mse |xbar_q|^2 / (1 + b^H Sigma^{-1} b)^2`.

use num_complex::Complex64;

use crate::cvec::{self, CVec};
use crate::metrics::{assemble_b, client_sum, EffectiveVector, NoiseDiagonal, RatSelection, SlotCoeffs};
use crate::scenario::{Role, Scenario};
use crate::{Error, Result};

use super::AlgoConfig;

/// Per-slot drives, laid out like [`SlotCoeffs`].
pub type Drives = Vec<SlotCoeffs>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Gates {
    pub g5: f64,
    pub gw: f64,
    pub gd: f64,
}

pub(crate) fn gates(scn: &Scenario, alpha_q: &[f64], k: usize, q: usize) -> Gates {
    let a = alpha_q[k];
    let role = scn.coverage.roles[k];
    let gd = match role {
        Role::Relay { .. } if client_sum(alpha_q, scn, q, k) != Complex64::new(0.0, 0.0) => 1.0,
        _ => 0.0,
    };
    Gates {
        g5: a,
        gw: if role.is_type_one() { 1.0 - a } else { 0.0 },
        gd,
    }
}

fn full_client_sum(scn: &Scenario, q: usize, relay: usize) -> Complex64 {
    scn.coverage.clients[relay].iter().map(|&j| scn.ivas.x[j][q]).sum()
}

fn safe_div(z: Complex64, d: Complex64) -> Complex64 {
    if d == Complex64::new(0.0, 0.0) {
        Complex64::new(0.0, 0.0)
    } else {
        z / d
    }
}

/// Forwarded sum used to convert a D2D drive; falls back to the full client
/// sum when every client is currently on 5G.
fn d2d_scale(scn: &Scenario, alpha_q: &[f64], q: usize, k: usize) -> Complex64 {
    let s = client_sum(alpha_q, scn, q, k);
    if s == Complex64::new(0.0, 0.0) {
        full_client_sum(scn, q, k)
    } else {
        s
    }
}

pub fn drives_to_beta(scn: &Scenario, alpha_q: &[f64], drive: &SlotCoeffs, q: usize) -> SlotCoeffs {
    let k = scn.params.k;
    let mut out = SlotCoeffs::zeros(k);
    for i in 0..k {
        let x = scn.ivas.x[i][q];
        out.b5g[i] = safe_div(drive.b5g[i], x);
        out.bwf[i] = safe_div(drive.bwf[i], x);
        if matches!(scn.coverage.roles[i], Role::Relay { .. }) {
            out.bd2d[i] = safe_div(drive.bd2d[i], d2d_scale(scn, alpha_q, q, i));
        }
    }
    out
}

pub fn beta_to_drives(scn: &Scenario, alpha_q: &[f64], beta: &SlotCoeffs, q: usize) -> SlotCoeffs {
    let k = scn.params.k;
    let mut out = SlotCoeffs::zeros(k);
    for i in 0..k {
        let x = scn.ivas.x[i][q];
        out.b5g[i] = beta.b5g[i] * x;
        out.bwf[i] = beta.bwf[i] * x;
        if matches!(scn.coverage.roles[i], Role::Relay { .. }) {
            out.bd2d[i] = beta.bd2d[i] * d2d_scale(scn, alpha_q, q, i);
        }
    }
    out
}

/// Effective vector built directly from drives.
pub fn blocks_from_drives(scn: &Scenario, alpha_q: &[f64], drive: &SlotCoeffs, q: usize) -> EffectiveVector {
    let p = &scn.params;
    let ch = &scn.channels;
    let mut b = EffectiveVector::zeros(p.n_5g, p.m, p.n_wf);
    for k in 0..p.k {
        let g = gates(scn, alpha_q, k, q);
        if g.g5 != 0.0 {
            cvec::axpy(&mut b.b5g, g.g5 * drive.b5g[k], &ch.h5g[k][q]);
        }
        if let Some(ap) = scn.coverage.roles[k].ap() {
            if g.gw != 0.0 {
                let h = &ch.hwf[k].as_ref().expect("type-I device has a WiFi channel")[q];
                cvec::axpy(&mut b.bwf[ap], g.gw * drive.bwf[k], h);
            }
            if g.gd != 0.0 {
                let h = &ch.hd2d[k].as_ref().expect("relay has a D2D channel")[q];
                cvec::axpy(&mut b.bd2d[ap], g.gd * drive.bd2d[k], h);
            }
        }
    }
    b
}

/// Matched directions `s_q h^H b_B / sigma_B^2` for every role a device can
/// hold, whether open or not.
#[derive(Debug, Clone)]
pub(crate) struct SlotGradient {
    pub w5: CVec,
    pub ww: CVec,
    pub wd: CVec,
}

pub(crate) fn slot_gradient(scn: &Scenario, b: &EffectiveVector, q: usize) -> Result<SlotGradient> {
    let p = &scn.params;
    let noise = NoiseDiagonal::for_params(p);
    let u = b.weighted_energy(&noise)?;
    let s = p.w_mse * scn.ivas.xbar[q].norm_sqr() / ((1.0 + u) * (1.0 + u));
    let ch = &scn.channels;
    let mut g = SlotGradient {
        w5: cvec::zeros(p.k),
        ww: cvec::zeros(p.k),
        wd: cvec::zeros(p.k),
    };
    for k in 0..p.k {
        g.w5[k] = s * cvec::dot_h(&ch.h5g[k][q], &b.b5g) / p.sigma2;
        if let Some(ap) = scn.coverage.roles[k].ap() {
            let sig = p.sigma2_ap.get(ap);
            let hw = &ch.hwf[k].as_ref().expect("type-I device has a WiFi channel")[q];
            g.ww[k] = s * cvec::dot_h(hw, &b.bwf[ap]) / sig;
            if let Some(hd) = ch.hd2d[k].as_ref() {
                g.wd[k] = s * cvec::dot_h(&hd[q], &b.bd2d[ap]) / sig;
            }
        }
    }
    Ok(g)
}

/// Transmit power left for the OTA roles of each device once its
/// full-power D2D hops are paid for.
pub fn available_power(scn: &Scenario, alpha: &RatSelection, ptilde: &[f64]) -> Vec<f64> {
    (0..scn.params.k)
        .map(|k| {
            let hops: f64 = if scn.coverage.roles[k].is_type_one() {
                0.0
            } else {
                (0..scn.params.q).map(|q| 1.0 - alpha.get(k, q)).sum()
            };
            ptilde[k] - hops * scn.params.p_max.get(k)
        })
        .collect()
}

/// Equal power over open roles, real phase.
pub fn initial_drives(scn: &Scenario, alpha: &RatSelection, ptilde: &[f64]) -> Drives {
    let p = &scn.params;
    let avail = available_power(scn, alpha, ptilde);
    let mut drives = vec![SlotCoeffs::zeros(p.k); p.q];
    for k in 0..p.k {
        let mut open = 0.0;
        for q in 0..p.q {
            let g = gates(scn, alpha.column(q), k, q);
            open += g.g5 + g.gw + g.gd;
        }
        let amp = if open > 0.0 && avail[k] > 0.0 { (avail[k] / open).sqrt() } else { 0.0 };
        let base = if avail[k] > 0.0 { (avail[k] / p.q as f64).sqrt() } else { 0.0 };
        for (q, d) in drives.iter_mut().enumerate() {
            let g = gates(scn, alpha.column(q), k, q);
            let pick = |gate: f64| Complex64::new(if gate > 0.0 { amp } else { base }, 0.0);
            d.b5g[k] = pick(g.g5);
            if scn.coverage.roles[k].is_type_one() {
                d.bwf[k] = pick(g.gw);
            }
            if matches!(scn.coverage.roles[k], Role::Relay { .. }) {
                d.bd2d[k] = pick(g.gd);
            }
        }
    }
    drives
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedReport {
    pub iterations: usize,
    pub converged: bool,
    /// Multiplier implied by each device's energy equality; `None` when the
    /// device has no open role or no usable gradient.
    pub lambda_hat: Vec<Option<f64>>,
    /// Largest relative stationarity residual over devices.
    pub residual: f64,
}

fn device_terms(scn: &Scenario, alpha: &RatSelection, drives: &Drives, grads: &[SlotGradient], k: usize) -> (f64, f64, f64) {
    // (sum gate*|w|^2, sum gate*|z|^2, total gate weight)
    let mut ww = 0.0;
    let mut zz = 0.0;
    let mut open = 0.0;
    for q in 0..scn.params.q {
        let g = gates(scn, alpha.column(q), k, q);
        let d = &drives[q];
        let gr = &grads[q];
        ww += g.g5 * gr.w5[k].norm_sqr() + g.gw * gr.ww[k].norm_sqr() + g.gd * gr.wd[k].norm_sqr();
        zz += g.g5 * d.b5g[k].norm_sqr() + g.gw * d.bwf[k].norm_sqr() + g.gd * d.bd2d[k].norm_sqr();
        open += g.g5 + g.gw + g.gd;
    }
    (ww, zz, open)
}

fn gradients(scn: &Scenario, alpha: &RatSelection, drives: &Drives) -> Result<Vec<SlotGradient>> {
    (0..scn.params.q)
        .map(|q| {
            let b = blocks_from_drives(scn, alpha.column(q), &drives[q], q);
            slot_gradient(scn, &b, q)
        })
        .collect()
}

/// Relative residual of `z = w / lambda` over the open roles of `k`.
fn device_residual(scn: &Scenario, alpha: &RatSelection, drives: &Drives, grads: &[SlotGradient], k: usize, lam: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for q in 0..scn.params.q {
        let g = gates(scn, alpha.column(q), k, q);
        let d = &drives[q];
        let gr = &grads[q];
        for (gate, z, w) in [(g.g5, d.b5g[k], gr.w5[k]), (g.gw, d.bwf[k], gr.ww[k]), (g.gd, d.bd2d[k], gr.wd[k])] {
            if gate > 0.0 {
                num += gate * (z - w / lam).norm_sqr();
                den += gate * z.norm_sqr();
            }
        }
    }
    if den > 0.0 { (num / den).sqrt() } else { 0.0 }
}

/// Largest relative residual over devices and the implied multipliers.
fn residuals(scn: &Scenario, alpha: &RatSelection, drives: &Drives, grads: &[SlotGradient], avail: &[f64]) -> (f64, Vec<Option<f64>>) {
    let mut worst: f64 = 0.0;
    let mut hats = vec![None; scn.params.k];
    for k in 0..scn.params.k {
        let (ww, _, open) = device_terms(scn, alpha, drives, grads, k);
        if open > 0.0 && avail[k] > 0.0 && ww > 0.0 {
            let lam = (ww / avail[k]).sqrt();
            hats[k] = Some(lam);
            worst = worst.max(device_residual(scn, alpha, drives, grads, k, lam));
        }
    }
    (worst, hats)
}

/// Damped fixed point of the stationarity system in which each device's
/// multiplier is the one that makes its energy equality hold exactly.
/// Warm-starts from `drives`, which it overwrites for open roles.
pub fn balanced_transmit(
    scn: &Scenario,
    alpha: &RatSelection,
    ptilde: &[f64],
    drives: &mut Drives,
    cfg: &AlgoConfig,
) -> Result<BalancedReport> {
    let p = &scn.params;
    let avail = available_power(scn, alpha, ptilde);
    let d = cfg.fp_damping;
    let mut lambda_hat = vec![None; p.k];
    let mut converged = false;
    let mut iterations = 0;
    let mut grads = gradients(scn, alpha, drives)?;
    let mut residual = f64::INFINITY;
    for it in 0..cfg.fp_max_iters {
        let (r, hats) = residuals(scn, alpha, drives, &grads, &avail);
        residual = r;
        lambda_hat = hats;
        if residual <= cfg.fp_tol {
            converged = true;
            break;
        }
        iterations = it + 1;
        for k in 0..p.k {
            let (ww, zz, open) = device_terms(scn, alpha, drives, &grads, k);
            if open == 0.0 {
                continue;
            }
            if avail[k] <= 0.0 {
                for q in 0..p.q {
                    let g = gates(scn, alpha.column(q), k, q);
                    let dq = &mut drives[q];
                    if g.g5 > 0.0 { dq.b5g[k] = Complex64::new(0.0, 0.0); }
                    if g.gw > 0.0 { dq.bwf[k] = Complex64::new(0.0, 0.0); }
                    if g.gd > 0.0 { dq.bd2d[k] = Complex64::new(0.0, 0.0); }
                }
                continue;
            }
            if !ww.is_finite() {
                return Err(Error::Numerical(format!("non-finite gradient for device {k}")));
            }
            let lam = if ww > 0.0 { Some((ww / avail[k]).sqrt()) } else { None };
            let mut new_zz = 0.0;
            for q in 0..p.q {
                let g = gates(scn, alpha.column(q), k, q);
                let gr = &grads[q];
                let dq = &mut drives[q];
                for (gate, z, w) in [
                    (g.g5, &mut dq.b5g[k], gr.w5[k]),
                    (g.gw, &mut dq.bwf[k], gr.ww[k]),
                    (g.gd, &mut dq.bd2d[k], gr.wd[k]),
                ] {
                    if gate > 0.0 {
                        if let Some(l) = lam {
                            *z = (1.0 - d) * *z + d * (w / l);
                        }
                        new_zz += gate * z.norm_sqr();
                    }
                }
            }
            let target = if new_zz > 0.0 { new_zz } else { zz };
            if target <= 0.0 {
                continue;
            }
            let scale = (avail[k] / target).sqrt();
            for q in 0..p.q {
                let g = gates(scn, alpha.column(q), k, q);
                let dq = &mut drives[q];
                for (gate, z) in [(g.g5, &mut dq.b5g[k]), (g.gw, &mut dq.bwf[k]), (g.gd, &mut dq.bd2d[k])] {
                    if gate > 0.0 {
                        *z = if new_zz > 0.0 { *z * scale } else { Complex64::new(scale, 0.0) };
                    }
                }
            }
        }
        grads = gradients(scn, alpha, drives)?;
    }
    if !converged {
        let (r, hats) = residuals(scn, alpha, drives, &grads, &avail);
        residual = r;
        lambda_hat = hats;
        converged = residual <= cfg.fp_tol;
    }
    if !drives.iter().all(SlotCoeffs::is_finite) {
        return Err(Error::Numerical("non-finite transmit drive".into()));
    }
    Ok(BalancedReport { iterations, converged, lambda_hat, residual })
}

/// Gives every closed role a candidate drive: the device's mean per-slot
/// power, phased along the role's matched direction. The RAT subproblem
/// needs these to price switching.
pub fn fill_candidates(scn: &Scenario, alpha: &RatSelection, ptilde: &[f64], drives: &mut Drives) -> Result<()> {
    let p = &scn.params;
    let avail = available_power(scn, alpha, ptilde);
    let grads = gradients(scn, alpha, drives)?;
    for q in 0..p.q {
        for k in 0..p.k {
            let amp = if avail[k] > 0.0 { (avail[k] / p.q as f64).sqrt() } else { 0.0 };
            let g = gates(scn, alpha.column(q), k, q);
            let gr = &grads[q];
            let dq = &mut drives[q];
            let phased = |w: Complex64| {
                if w.norm() > 0.0 {
                    w / w.norm() * amp
                } else {
                    Complex64::new(amp, 0.0)
                }
            };
            if g.g5 == 0.0 {
                dq.b5g[k] = phased(gr.w5[k]);
            }
            let role = scn.coverage.roles[k];
            if role.is_type_one() && g.gw == 0.0 {
                dq.bwf[k] = phased(gr.ww[k]);
            }
            if matches!(role, Role::Relay { .. }) && g.gd == 0.0 {
                dq.bd2d[k] = phased(gr.wd[k]);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitUpdate {
    pub beta: SlotCoeffs,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

fn literal_targets(scn: &Scenario, alpha_q: &[f64], beta: &SlotCoeffs, lambda: &[f64], q: usize, floor: f64) -> Result<(SlotCoeffs, OpenRoles)> {
    let p = &scn.params;
    let b = assemble_b(alpha_q, beta, scn, q)?;
    let grad = slot_gradient(scn, &b, q)?;
    let mut t = SlotCoeffs::zeros(p.k);
    let mut open = OpenRoles { g5: vec![false; p.k], gw: vec![false; p.k], gd: vec![false; p.k] };
    for k in 0..p.k {
        let lam = if lambda[k].abs() < floor { floor.copysign(lambda[k]) } else { lambda[k] };
        let x = scn.ivas.x[k][q];
        let g = gates(scn, alpha_q, k, q);
        if g.g5 > 0.0 {
            t.b5g[k] = safe_div(grad.w5[k] / lam, x);
            open.g5[k] = true;
        }
        if g.gw > 0.0 {
            t.bwf[k] = safe_div(grad.ww[k] / lam, x);
            open.gw[k] = true;
        }
        if g.gd > 0.0 {
            t.bd2d[k] = safe_div(grad.wd[k] / lam, client_sum(alpha_q, scn, q, k));
            open.gd[k] = true;
        }
    }
    Ok((t, open))
}

struct OpenRoles {
    g5: Vec<bool>,
    gw: Vec<bool>,
    gd: Vec<bool>,
}

fn literal_residual(beta: &SlotCoeffs, t: &SlotCoeffs) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in [(&beta.b5g, &t.b5g), (&beta.bwf, &t.bwf), (&beta.bd2d, &t.bd2d)] {
        for (x, y) in a.iter().zip(b.iter()) {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    if den > 0.0 { (num / den).sqrt() } else { num.sqrt() }
}

/// Damped fixed-point solve of the stationarity system for slot `q` with the
/// multipliers held fixed. Roles whose gate is closed get zero.
pub fn transmit_update(
    alpha_q: &[f64],
    beta0: &SlotCoeffs,
    lambda: &[f64],
    scn: &Scenario,
    q: usize,
    cfg: &AlgoConfig,
) -> Result<TransmitUpdate> {
    if lambda.len() != scn.params.k {
        return Err(Error::Dimension("one multiplier per device required".into()));
    }
    let d = cfg.fp_damping;
    let mut beta = beta0.clone();
    let mut best: Option<(f64, SlotCoeffs)> = None;
    for it in 0..cfg.fp_max_iters {
        let (t, open) = literal_targets(scn, alpha_q, &beta, lambda, q, cfg.lambda_floor)?;
        let res = literal_residual(&beta, &t);
        if best.as_ref().is_none_or(|(r, _)| res < *r) {
            best = Some((res, beta.clone()));
        }
        if res <= cfg.fp_tol {
            return Ok(TransmitUpdate { beta, iterations: it, converged: true, residual: res });
        }
        for k in 0..scn.params.k {
            let step = |b: Complex64, t: Complex64, on: bool| if on { (1.0 - d) * b + d * t } else { Complex64::new(0.0, 0.0) };
            beta.b5g[k] = step(beta.b5g[k], t.b5g[k], open.g5[k]);
            beta.bwf[k] = step(beta.bwf[k], t.bwf[k], open.gw[k]);
            beta.bd2d[k] = step(beta.bd2d[k], t.bd2d[k], open.gd[k]);
        }
        if !beta.is_finite() {
            return Err(Error::Numerical("non-finite transmit coefficient".into()));
        }
    }
    let (residual, beta) = best.expect("at least one iteration");
    log::warn!("transmit fixed point for slot {q} stopped at residual {residual:.3e}");
    Ok(TransmitUpdate { beta, iterations: cfg.fp_max_iters, converged: false, residual })
}
