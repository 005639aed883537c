//! Digital baseline: 4-bit quantization, 16-QAM, orthogonal uploads.
//!
//! Each device quantizes its aggregated IVA with a 2-bit uniform quantizer
//! per component, sends one unit-energy 16-QAM symbol in its own mini-slot,
//! and the receiver applies maximum-ratio combining followed by
//! minimum-distance detection. Relays forward client symbols over WiFi and
//! split their power over everything they send; D2D hops are error-free.
//! The distortion is the exact expectation over detection errors.

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::cvec;
use crate::metrics::{cost_q, delay_q, RatSelection, SlotMetrics};
use crate::optimizer::{energy_rhs_all, AlgoConfig};
use crate::params::ScenarioParams;
use crate::scenario::{map_energy, Role, Scenario};
use crate::{Error, Result};

const LEVELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    pub bits_per_component: u32,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl QuantizerSpec {
    pub fn new(range_lo: f64, range_hi: f64) -> Result<Self> {
        if !(range_lo.is_finite() && range_hi.is_finite() && range_lo < range_hi) {
            return Err(Error::InvalidParams(format!("quantizer range [{range_lo}, {range_hi}] is empty")));
        }
        Ok(Self { bits_per_component: 2, range_lo, range_hi })
    }

    /// Support of one component of an aggregated IVA: `n_k * [1, 3]`.
    pub fn for_device(params: &ScenarioParams) -> Self {
        let n = params.files_per_device() as f64;
        Self { bits_per_component: 2, range_lo: n, range_hi: 3.0 * n }
    }

    pub fn step(&self) -> f64 {
        (self.range_hi - self.range_lo) / LEVELS as f64
    }

    /// Half-open cells `[lo + i*step, lo + (i+1)*step)`, the top one closed.
    /// Values outside the range are clamped.
    pub fn cell(&self, v: f64) -> usize {
        let v = v.clamp(self.range_lo, self.range_hi);
        let i = ((v - self.range_lo) / self.step()).floor() as usize;
        i.min(LEVELS - 1)
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        self.range_lo + (cell as f64 + 0.5) * self.step()
    }
}

/// 4-bit code (real cell in the high bits) and the reconstructed value.
pub fn quantize_iva(x: Complex64, spec: &QuantizerSpec) -> (u8, Complex64) {
    let (i, j) = (spec.cell(x.re), spec.cell(x.im));
    ((i << 2 | j) as u8, Complex64::new(spec.midpoint(i), spec.midpoint(j)))
}

/// Natural-order 4-PAM level of a cell, unit average energy per complex
/// symbol when used on both components.
pub fn pam_level(cell: usize) -> f64 {
    (2.0 * cell as f64 - 3.0) / 10f64.sqrt()
}

pub fn qam_symbol(code: u8) -> Complex64 {
    Complex64::new(pam_level((code >> 2) as usize), pam_level((code & 3) as usize))
}

fn gauss_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Probability of detecting each level when `sent` is transmitted and the
/// per-component noise standard deviation is `sd` (symbol units).
pub fn detection_probs(sent: usize, sd: f64) -> [f64; LEVELS] {
    let mut out = [0.0; LEVELS];
    if sd == 0.0 {
        out[sent] = 1.0;
        return out;
    }
    let thr = [f64::NEG_INFINITY, -2.0 / 10f64.sqrt(), 0.0, 2.0 / 10f64.sqrt(), f64::INFINITY];
    let l = pam_level(sent);
    for j in 0..LEVELS {
        let lo = gauss_tail((thr[j] - l) / sd);
        let hi = gauss_tail((thr[j + 1] - l) / sd);
        out[j] = (lo - hi).max(0.0);
    }
    out
}

/// Mean and variance of the reconstruction of one component.
fn component_stats(value: f64, spec: &QuantizerSpec, sd: f64) -> (f64, f64) {
    let probs = detection_probs(spec.cell(value), sd);
    let mean: f64 = probs.iter().enumerate().map(|(j, p)| p * spec.midpoint(j)).sum();
    let second: f64 = probs.iter().enumerate().map(|(j, p)| p * spec.midpoint(j).powi(2)).sum();
    (mean, (second - mean * mean).max(0.0))
}

/// Per-component noise standard deviation after MRC with receive SNR `snr`.
fn noise_sd(snr: f64) -> f64 {
    if snr.is_infinite() {
        0.0
    } else if snr <= 0.0 {
        f64::INFINITY
    } else {
        (0.5 / snr).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct DigitalSolution {
    pub alpha: RatSelection,
    pub slots: Vec<SlotMetrics>,
    pub objective: f64,
    /// Improvement passes of the selection search.
    pub iterations: usize,
    pub energy_used: Vec<f64>,
}

impl DigitalSolution {
    pub fn mse_total(&self) -> f64 {
        self.slots.iter().map(|m| m.mse).sum()
    }
}

struct Model<'a> {
    scn: &'a Scenario,
    ptilde: Vec<f64>,
    spec: QuantizerSpec,
}

impl Model<'_> {
    /// Power each device puts into every symbol-carrying slot.
    fn slot_power(&self, alpha: &RatSelection) -> Vec<f64> {
        let p = &self.scn.params;
        (0..p.k)
            .map(|k| match self.scn.coverage.roles[k] {
                Role::TypeII { .. } => {
                    let on5g = (0..p.q).filter(|&q| alpha.get(k, q) == 1.0).count();
                    let hops = (p.q - on5g) as f64;
                    let left = self.ptilde[k] - hops * p.p_max.get(k);
                    if on5g == 0 || left <= 0.0 { 0.0 } else { left / on5g as f64 }
                }
                _ => self.ptilde[k] / p.q as f64,
            })
            .collect()
    }

    fn slot_mse(&self, alpha_q: &[f64], power: &[f64], q: usize) -> f64 {
        let p = &self.scn.params;
        let cov = &self.scn.coverage;
        let ch = &self.scn.channels;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut var = 0.0;
        for k in 0..p.k {
            let share = |relay: usize| {
                let fwd = cov.clients[relay].iter().filter(|&&j| alpha_q[j] == 0.0).count();
                power[relay] / (1 + fwd) as f64
            };
            let snr = match (cov.roles[k], alpha_q[k] == 1.0) {
                (Role::Forced5g, false) => continue,
                (Role::Relay { .. }, true) => share(k) * cvec::norm_sqr(&ch.h5g[k][q]) / p.sigma2,
                (_, true) => power[k] * cvec::norm_sqr(&ch.h5g[k][q]) / p.sigma2,
                (Role::Plain { ap }, false) => {
                    power[k] * cvec::norm_sqr(&ch.hwf[k].as_ref().expect("WiFi channel")[q]) / p.sigma2_ap.get(ap)
                }
                (Role::Relay { ap }, false) => {
                    share(k) * cvec::norm_sqr(&ch.hwf[k].as_ref().expect("WiFi channel")[q]) / p.sigma2_ap.get(ap)
                }
                (Role::TypeII { relay, .. }, false) => {
                    let ap = cov.roles[relay].ap().expect("relay is type-I");
                    share(relay) * cvec::norm_sqr(&ch.hd2d[relay].as_ref().expect("D2D channel")[q]) / p.sigma2_ap.get(ap)
                }
            };
            let sd = noise_sd(snr);
            let x = self.scn.ivas.x[k][q];
            let (mr, vr) = component_stats(x.re, &self.spec, sd);
            let (mi, vi) = component_stats(x.im, &self.spec, sd);
            mean += Complex64::new(mr, mi);
            var += vr + vi;
        }
        (mean - self.scn.ivas.xbar[q]).norm_sqr() + var
    }

    fn evaluate(&self, alpha: &RatSelection) -> (f64, Vec<SlotMetrics>) {
        let p = &self.scn.params;
        let power = self.slot_power(alpha);
        let slots: Vec<SlotMetrics> = (0..p.q)
            .map(|q| SlotMetrics {
                mse: self.slot_mse(alpha.column(q), &power, q),
                cost: cost_q(alpha.column(q), p),
                delay: delay_q(alpha.column(q), &self.scn.coverage, p),
            })
            .collect();
        let obj = slots.iter().map(|m| p.w_mse * m.mse + p.w_cost * m.cost + p.w_delay * m.delay).sum();
        (obj, slots)
    }
}

/// Digital distortion of a fixed selection.
pub fn evaluate_digital(scn: &Scenario, alpha: &RatSelection) -> Result<(f64, Vec<SlotMetrics>)> {
    let model = Model { scn, ptilde: energy_rhs_all(&scn.params)?, spec: QuantizerSpec::for_device(&scn.params) };
    Ok(model.evaluate(alpha))
}

/// Greedy single-entry flips from the cheapest feasible selection until no
/// flip lowers the objective.
pub fn solve_digital_16qam(scn: &Scenario, cfg: &AlgoConfig) -> Result<DigitalSolution> {
    cfg.validate()?;
    let p = &scn.params;
    let model = Model { scn, ptilde: energy_rhs_all(p)?, spec: QuantizerSpec::for_device(p) };
    let mut alpha = RatSelection::initial(scn);
    let (mut best, _) = model.evaluate(&alpha);
    let mut passes = 0;
    for _ in 0..cfg.max_outer_iters {
        passes += 1;
        let mut improved = false;
        for q in 0..p.q {
            for k in 0..p.k {
                if scn.coverage.is_forced_5g(k) {
                    continue;
                }
                let old = alpha.get(k, q);
                alpha.set(k, q, 1.0 - old);
                let (obj, _) = model.evaluate(&alpha);
                if obj < best - 1e-12 * best.abs() {
                    best = obj;
                    improved = true;
                } else {
                    alpha.set(k, q, old);
                }
            }
        }
        if !improved {
            break;
        }
    }
    let (objective, slots) = model.evaluate(&alpha);
    let power = model.slot_power(&alpha);
    let energy_used = (0..p.k)
        .map(|k| {
            let mut e = map_energy(p, k);
            for q in 0..p.q {
                let on5g = alpha.get(k, q) == 1.0;
                e += p.t_tx
                    * match scn.coverage.roles[k] {
                        Role::TypeII { .. } if !on5g => p.p_max.get(k),
                        Role::TypeII { .. } => power[k],
                        _ => power[k],
                    };
            }
            e
        })
        .collect();
    Ok(DigitalSolution { alpha, slots, objective, iterations: passes, energy_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> QuantizerSpec {
        QuantizerSpec::new(1.0, 3.0).unwrap()
    }

    #[test]
    fn quantizer_examples() {
        let s = unit();
        let (code, xq) = quantize_iva(Complex64::new(1.0, 3.0), &s);
        assert_eq!(xq, Complex64::new(1.25, 2.75));
        assert_eq!(code, 0b0011);
        assert_eq!(s.cell(1.5), 1);
        assert_eq!(s.cell(3.0), 3);
        assert_eq!(s.cell(-7.0), 0);
        assert!(QuantizerSpec::new(2.0, 2.0).is_err());
    }

    #[test]
    fn constellation_has_unit_energy() {
        let e: f64 = (0..16u8).map(|c| qam_symbol(c).norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detection_probabilities() {
        for sent in 0..4 {
            let p = detection_probs(sent, 0.3);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p[sent] == p.iter().cloned().fold(0.0, f64::max));
            assert_eq!(detection_probs(sent, 0.0)[sent], 1.0);
        }
        // outer level, one threshold at distance 1/sqrt(10)
        let sd = 0.2;
        let p = detection_probs(0, sd);
        let want = 0.5 * erfc((1.0 / 10f64.sqrt()) / sd / std::f64::consts::SQRT_2);
        assert!((1.0 - p[0] - want).abs() < 1e-12);
    }

    fn noiseless(seed: u64) -> Scenario {
        let p = ScenarioParams { k: 6, m: 2, n: 60, q: 3, sigma2: 1e-300, sigma2_ap: 1e-300.into(), ..Default::default() };
        Scenario::generate(&p, seed).unwrap()
    }

    #[test]
    fn noiseless_mse_is_quantization_error() {
        for seed in 0..5 {
            let scn = noiseless(seed);
            let spec = QuantizerSpec::for_device(&scn.params);
            let sol = solve_digital_16qam(&scn, &AlgoConfig::default()).unwrap();
            for q in 0..scn.params.q {
                let err: Complex64 = (0..scn.params.k).map(|k| quantize_iva(scn.ivas.x[k][q], &spec).1 - scn.ivas.x[k][q]).sum();
                let forced_missing: Complex64 = (0..scn.params.k)
                    .filter(|&k| scn.coverage.is_forced_5g(k) && sol.alpha.get(k, q) == 0.0)
                    .map(|k| scn.ivas.x[k][q])
                    .sum();
                assert_eq!(forced_missing, Complex64::new(0.0, 0.0));
                assert!((sol.slots[q].mse - err.norm_sqr()).abs() <= 1e-9 * (1.0 + err.norm_sqr()));
            }
        }
    }

    #[test]
    fn high_power_reaches_quantization_floor() {
        let p = ScenarioParams { k: 6, m: 2, n: 60, q: 2, ..Default::default() };
        let scn = Scenario::generate(&p, 3).unwrap();
        let spec = QuantizerSpec::for_device(&p);
        let strong = Scenario { params: ScenarioParams { energy_budget: 1e9.into(), ..p.clone() }, ..scn.clone() };
        let sol = solve_digital_16qam(&strong, &AlgoConfig::default()).unwrap();
        for q in 0..p.q {
            let err: Complex64 = (0..p.k).map(|k| quantize_iva(scn.ivas.x[k][q], &spec).1 - scn.ivas.x[k][q]).sum();
            assert!((sol.slots[q].mse - err.norm_sqr()).abs() <= 1e-6 * (1.0 + err.norm_sqr()));
        }
    }

    #[test]
    fn selection_search_never_worse_than_start() {
        for seed in 0..5 {
            let p = ScenarioParams { k: 8, m: 4, n: 80, q: 3, ..Default::default() };
            let scn = Scenario::generate(&p, seed).unwrap();
            let start = evaluate_digital(&scn, &RatSelection::initial(&scn)).unwrap().0;
            let sol = solve_digital_16qam(&scn, &AlgoConfig::default()).unwrap();
            assert!(sol.objective <= start);
            for k in 0..p.k {
                if scn.coverage.is_forced_5g(k) {
                    assert!((0..p.q).all(|q| sol.alpha.get(k, q) == 1.0));
                }
                assert!(sol.energy_used[k] <= p.energy_budget.get(k) * (1.0 + 1e-9));
            }
        }
    }

    proptest! {
        #[test]
        fn quantization_error_bounded(re in 0.0f64..4.0, im in 0.0f64..4.0) {
            let s = unit();
            let x = Complex64::new(re.clamp(1.0, 3.0), im.clamp(1.0, 3.0));
            let (_, xq) = quantize_iva(x, &s);
            prop_assert!((xq.re - x.re).abs() <= 2.0 / 8.0 + 1e-15);
            prop_assert!((xq.im - x.im).abs() <= 2.0 / 8.0 + 1e-15);
        }

        #[test]
        fn symbol_decodes_to_code(code in 0u8..16) {
            let s = qam_symbol(code);
            let nearest = |v: f64| (0..4).min_by(|&a, &b| (pam_level(a) - v).abs().total_cmp(&(pam_level(b) - v).abs())).unwrap();
            prop_assert_eq!((nearest(s.re) << 2 | nearest(s.im)) as u8, code);
        }
    }
}
