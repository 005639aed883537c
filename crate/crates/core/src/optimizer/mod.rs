//! Lagrangian dual decomposition solver for joint RAT selection and
//! transceiver design.
//!
//! Each outer iteration solves the transmit subproblem for the current
//! selection, runs one relaxed coordinate pass over the selection, rounds
//! it, and takes a subgradient step on the per-device energy multipliers.
//! The loop stops once the relative change of the dual value drops below
//! `eps`.

pub mod poly;
pub mod rat;
pub mod transmit;

use serde::{Deserialize, Serialize};

use crate::metrics::{
    assemble_b, cost_q, delay_q, mse_reduced, tx_power, DecisionState, EffectiveVector, NoiseDiagonal,
    RatSelection, SlotCoeffs, SlotMetrics, TransmitCoeffs,
};
use crate::params::ScenarioParams;
use crate::receiver::{lmmse_vectors, ReceiveVectors};
use crate::scenario::{map_energy, Scenario};
use crate::{Error, Result};

pub use rat::{relaxed_rat_update, repair, round_selection};
pub use transmit::{balanced_transmit, transmit_update, BalancedReport, TransmitUpdate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoConfig {
    /// Relative dual-value change that ends the outer loop.
    pub eps: f64,
    /// Base subgradient step; step `l` is `gamma0 / sqrt(l + 1)`.
    pub gamma0: f64,
    pub max_outer_iters: usize,
    pub fp_max_iters: usize,
    pub fp_tol: f64,
    pub fp_damping: f64,
    pub lambda_floor: f64,
    pub lambda_init: f64,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            gamma0: 0.01,
            max_outer_iters: 100,
            fp_max_iters: 20_000,
            fp_tol: 1e-8,
            fp_damping: 0.35,
            lambda_floor: 1e-8,
            lambda_init: 1.0,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("eps", self.eps),
            ("gamma0", self.gamma0),
            ("fp_tol", self.fp_tol),
            ("fp_damping", self.fp_damping),
            ("lambda_floor", self.lambda_floor),
            ("lambda_init", self.lambda_init),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be positive")));
            }
        }
        if self.fp_damping > 1.0 {
            return Err(Error::InvalidParams("fp_damping must be at most 1".into()));
        }
        if self.max_outer_iters == 0 || self.fp_max_iters == 0 {
            return Err(Error::InvalidParams("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Per-slot transmit power budget `(E_k - E_map) / T_tx`.
pub fn energy_rhs(params: &ScenarioParams, k: usize) -> Result<f64> {
    let budget = params.energy_budget.get(k);
    let emap = map_energy(params, k);
    if budget < emap {
        return Err(Error::Infeasible { device: k, budget, map_energy: emap });
    }
    Ok((budget - emap) / params.t_tx)
}

pub fn energy_rhs_all(params: &ScenarioParams) -> Result<Vec<f64>> {
    (0..params.k).map(|k| energy_rhs(params, k)).collect()
}

/// `sum_q tx_power(k, q)` for every device.
pub fn power_used(alpha: &RatSelection, beta: &TransmitCoeffs, scn: &Scenario) -> Result<Vec<f64>> {
    let p = &scn.params;
    let mut used = vec![0.0; p.k];
    for q in 0..p.q {
        for (k, u) in used.iter_mut().enumerate() {
            *u += tx_power(alpha.column(q), &beta[q], scn, k, q)?;
        }
    }
    Ok(used)
}

/// The slot piece `g_q`: multiplier-weighted power plus the weighted
/// LMMSE error, cost and delay of slot `q`.
pub fn slot_piece(alpha_q: &[f64], beta_q: &SlotCoeffs, lambda: &[f64], scn: &Scenario, q: usize) -> Result<f64> {
    let p = &scn.params;
    let b = assemble_b(alpha_q, beta_q, scn, q)?;
    let noise = NoiseDiagonal::for_params(p);
    let mut g = p.w_mse * mse_reduced(&b, &noise, scn.ivas.xbar[q])?
        + p.w_cost * cost_q(alpha_q, p)
        + p.w_delay * delay_q(alpha_q, &scn.coverage, p);
    for (k, lam) in lambda.iter().enumerate() {
        g += lam * tx_power(alpha_q, beta_q, scn, k, q)?;
    }
    Ok(g)
}

/// `sum_q g_q - sum_k lambda_k p~_k`.
pub fn lagrangian(alpha: &RatSelection, beta: &TransmitCoeffs, lambda: &[f64], scn: &Scenario) -> Result<f64> {
    let p = &scn.params;
    if lambda.len() != p.k || beta.len() != p.q || alpha.slots() != p.q {
        return Err(Error::Dimension("lagrangian inputs disagree with the scenario".into()));
    }
    let mut total = 0.0;
    for q in 0..p.q {
        total += slot_piece(alpha.column(q), &beta[q], lambda, scn, q)?;
    }
    for k in 0..p.k {
        total -= lambda[k] * energy_rhs(p, k)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub iter: usize,
    /// Dual value after each step, starting with the initial one.
    pub history: Vec<f64>,
}

impl DualState {
    pub fn new(lambda: Vec<f64>, initial_value: f64) -> Self {
        Self { lambda, iter: 0, history: vec![initial_value] }
    }
}

pub fn step_size(cfg: &AlgoConfig, iter: usize) -> f64 {
    cfg.gamma0 / ((iter + 1) as f64).sqrt()
}

/// Subgradient step `lambda += gamma_l (sum_q p_kq - p~_k)`. The energy
/// constraints are equalities, so the multipliers are left unprojected.
pub fn dual_step(state: &DualState, alpha: &RatSelection, beta: &TransmitCoeffs, scn: &Scenario, cfg: &AlgoConfig) -> Result<DualState> {
    let p = &scn.params;
    let gamma = step_size(cfg, state.iter);
    let used = power_used(alpha, beta, scn)?;
    let mut lambda = state.lambda.clone();
    for k in 0..p.k {
        lambda[k] += gamma * (used[k] - energy_rhs(p, k)?);
    }
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical("non-finite multiplier".into()));
    }
    let value = lagrangian(alpha, beta, &lambda, scn)?;
    let mut history = state.history.clone();
    history.push(value);
    Ok(DualState { lambda, iter: state.iter + 1, history })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub dual_value: f64,
    pub flag: f64,
    /// `sum_q tx_power - p~_k` per device.
    pub energy_surplus: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub alpha: RatSelection,
    pub beta: TransmitCoeffs,
    pub v: ReceiveVectors,
    pub slots: Vec<SlotMetrics>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
    /// Total energy per device: map phase plus uplink.
    pub energy_used: Vec<f64>,
    /// Largest stationarity residual of the transmit subproblem seen at a
    /// converged fixed point.
    pub stationarity_residual: f64,
}

impl Solution {
    /// Attaches LMMSE receivers and metrics to a decision.
    pub fn from_decision(
        scn: &Scenario,
        alpha: RatSelection,
        beta: TransmitCoeffs,
        iterations: usize,
        converged: bool,
        trace: Vec<TraceRecord>,
        stationarity_residual: f64,
    ) -> Result<Self> {
        let p = &scn.params;
        let noise = NoiseDiagonal::for_params(p);
        let bs: Vec<EffectiveVector> = (0..p.q)
            .map(|q| assemble_b(alpha.column(q), &beta[q], scn, q))
            .collect::<Result<_>>()?;
        let v = lmmse_vectors(&bs, &noise, &scn.ivas.xbar)?;
        let state = DecisionState { alpha, beta, v: Some(v.v) };
        let slots = (0..p.q)
            .map(|q| crate::metrics::slot_metrics(&state, scn, q))
            .collect::<Result<Vec<_>>>()?;
        let objective = slots.iter().map(|m| p.w_mse * m.mse + p.w_cost * m.cost + p.w_delay * m.delay).sum();
        let used = power_used(&state.alpha, &state.beta, scn)?;
        let energy_used = (0..p.k).map(|k| used[k] * p.t_tx + map_energy(p, k)).collect();
        let DecisionState { alpha, beta, v } = state;
        Ok(Self {
            alpha,
            beta,
            v: ReceiveVectors { v: v.expect("receivers attached") },
            slots,
            objective,
            iterations,
            converged,
            trace,
            energy_used,
            stationarity_residual,
        })
    }

    pub fn mse_total(&self) -> f64 {
        self.slots.iter().map(|m| m.mse).sum()
    }

    pub fn cost_total(&self) -> f64 {
        self.slots.iter().map(|m| m.cost).sum()
    }

    pub fn delay_total(&self) -> f64 {
        self.slots.iter().map(|m| m.delay).sum()
    }
}

/// Transmit coefficients that spend every device's budget exactly for a
/// fixed binary selection, with candidate values on closed roles.
pub(crate) struct BalancedPoint {
    pub beta: TransmitCoeffs,
    pub report: BalancedReport,
}

pub(crate) fn balanced_point(
    scn: &Scenario,
    alpha: &RatSelection,
    ptilde: &[f64],
    drives: &mut transmit::Drives,
    cfg: &AlgoConfig,
) -> Result<BalancedPoint> {
    let report = balanced_transmit(scn, alpha, ptilde, drives, cfg)?;
    transmit::fill_candidates(scn, alpha, ptilde, drives)?;
    let beta = (0..scn.params.q)
        .map(|q| transmit::drives_to_beta(scn, alpha.column(q), &drives[q], q))
        .collect();
    Ok(BalancedPoint { beta, report })
}

/// Runs the outer loop from the cheapest feasible selection.
pub fn solve(scn: &Scenario, cfg: &AlgoConfig) -> Result<Solution> {
    cfg.validate()?;
    let p = &scn.params;
    let ptilde = energy_rhs_all(p)?;
    let mut alpha = RatSelection::initial(scn);
    let mut drives = transmit::initial_drives(scn, &alpha, &ptilde);
    let mut dual = DualState::new(vec![cfg.lambda_init; p.k], f64::NAN);
    let mut trace = Vec::new();
    let mut best: Option<(f64, RatSelection, TransmitCoeffs)> = None;
    let mut prev: Option<f64> = None;
    let mut converged = false;
    let mut residual: f64 = 0.0;
    let mut iterations = 0;

    for l in 0..cfg.max_outer_iters {
        iterations = l + 1;
        let point = balanced_point(scn, &alpha, &ptilde, &mut drives, cfg)?;
        if point.report.converged {
            residual = residual.max(point.report.residual);
        }
        for (lam, hat) in dual.lambda.iter_mut().zip(&point.report.lambda_hat) {
            if let Some(h) = hat {
                *lam = *h;
            }
        }
        let beta = point.beta;
        let value = lagrangian(&alpha, &beta, &dual.lambda, scn)?;
        let state = DecisionState { alpha: alpha.clone(), beta: beta.clone(), v: None };
        let obj = crate::metrics::objective(&state, scn)?;
        if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
            best = Some((obj, alpha.clone(), beta.clone()));
        }
        let flag = match prev {
            Some(d) => (value - d).abs() / d.abs(),
            None => f64::INFINITY,
        };
        let used = power_used(&alpha, &beta, scn)?;
        trace.push(TraceRecord {
            iter: l,
            dual_value: value,
            flag,
            energy_surplus: used.iter().zip(&ptilde).map(|(u, t)| u - t).collect(),
        });
        log::debug!("outer {l}: dual {value:.6e} flag {flag:.3e}");
        if flag < cfg.eps {
            converged = true;
            break;
        }
        prev = Some(value);

        let mut relaxed_cols = Vec::with_capacity(p.q);
        for q in 0..p.q {
            relaxed_cols.push(relaxed_rat_update(alpha.column(q), &beta[q], &dual.lambda, scn, q)?);
        }
        let relaxed = RatSelection::relaxed(relaxed_cols)?;
        let mut next = round_selection(&relaxed)?;
        repair(&mut next, &relaxed, scn);
        if let Some(last) = dual.history.last_mut() {
            *last = value;
        }
        dual = dual_step(&dual, &next, &beta, scn, cfg)?;
        alpha = next;
    }

    if !converged {
        log::warn!("outer loop stopped after {iterations} iterations without meeting eps");
    }
    let (_, alpha, beta) = best.expect("at least one outer iteration");
    Solution::from_decision(scn, alpha, beta, iterations, converged, trace, residual)
}
