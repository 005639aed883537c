//! Single-RAT analog baselines.

use num_complex::Complex64;

use crate::metrics::{assemble_b, mse_explicit, NoiseDiagonal, RatSelection};
use crate::optimizer::{balanced_point, energy_rhs_all, lagrangian, transmit, AlgoConfig, Solution, TraceRecord};
use crate::receiver::lmmse_vector;
use crate::scenario::{Role, Scenario};
use crate::Result;

/// Balanced transmit design for a fixed selection, with closed roles zeroed.
fn fixed_selection(scn: &Scenario, alpha: RatSelection, cfg: &AlgoConfig) -> Result<Solution> {
    cfg.validate()?;
    let p = &scn.params;
    let ptilde = energy_rhs_all(p)?;
    let mut drives = transmit::initial_drives(scn, &alpha, &ptilde);
    let point = balanced_point(scn, &alpha, &ptilde, &mut drives, cfg)?;
    let mut beta = point.beta;
    for (q, slot) in beta.iter_mut().enumerate() {
        for k in 0..p.k {
            let g = transmit::gates(scn, alpha.column(q), k, q);
            if g.g5 == 0.0 {
                slot.b5g[k] = Complex64::new(0.0, 0.0);
            }
            if g.gw == 0.0 {
                slot.bwf[k] = Complex64::new(0.0, 0.0);
            }
            if g.gd == 0.0 {
                slot.bd2d[k] = Complex64::new(0.0, 0.0);
            }
        }
    }
    let lambda: Vec<f64> = point
        .report
        .lambda_hat
        .iter()
        .map(|h| h.unwrap_or(cfg.lambda_init))
        .collect();
    let dual_value = lagrangian(&alpha, &beta, &lambda, scn)?;
    let used = crate::optimizer::power_used(&alpha, &beta, scn)?;
    let trace = vec![TraceRecord {
        iter: 0,
        dual_value,
        flag: 0.0,
        energy_surplus: used.iter().zip(&ptilde).map(|(u, t)| u - t).collect(),
    }];
    let residual = if point.report.converged { point.report.residual } else { f64::INFINITY };
    Solution::from_decision(scn, alpha, beta, 1, point.report.converged, trace, residual)
}

/// Every device uploads over 5G.
pub fn solve_only_5g(scn: &Scenario, cfg: &AlgoConfig) -> Result<Solution> {
    let p = &scn.params;
    fixed_selection(scn, RatSelection::constant(p.k, p.q, 1.0), cfg)
}

/// Every device uploads over WiFi, directly or through D2D relaying.
/// Devices with no WiFi path send nothing; the receiver estimates the sum
/// it can actually hear and the error is measured against the full sum.
pub fn solve_only_wifi(scn: &Scenario, cfg: &AlgoConfig) -> Result<Solution> {
    let p = &scn.params;
    let mut sol = fixed_selection(scn, RatSelection::constant(p.k, p.q, 0.0), cfg)?;
    let reachable: Vec<usize> = (0..p.k)
        .filter(|&k| !matches!(scn.coverage.roles[k], Role::Forced5g))
        .collect();
    if reachable.len() == p.k {
        return Ok(sol);
    }
    let noise = NoiseDiagonal::for_params(p);
    for q in 0..p.q {
        let heard: Complex64 = reachable.iter().map(|&k| scn.ivas.x[k][q]).sum();
        let b = assemble_b(sol.alpha.column(q), &sol.beta[q], scn, q)?;
        let v = lmmse_vector(&b, &noise, heard)?;
        sol.slots[q].mse = mse_explicit(&v, &b, &noise, scn.ivas.xbar[q])?;
        sol.v.v[q] = v;
    }
    sol.objective = sol
        .slots
        .iter()
        .map(|m| p.w_mse * m.mse + p.w_cost * m.cost + p.w_delay * m.delay)
        .sum();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mse_reduced;
    use crate::optimizer::solve;
    use crate::params::ScenarioParams;

    #[test]
    fn only_5g_cost_and_delay() {
        let p = ScenarioParams { k: 6, m: 2, n: 6, q: 3, ..Default::default() };
        let scn = Scenario::generate(&p, 1).unwrap();
        let sol = solve_only_5g(&scn, &AlgoConfig::default()).unwrap();
        for m in &sol.slots {
            assert_eq!(m.cost, 6.0);
            assert_eq!(m.delay, p.t_tx);
        }
        for k in 0..p.k {
            assert!((sol.energy_used[k] - 10.0).abs() < 1e-6);
        }
        let wifi_len = 2 * p.m * p.n_wf;
        assert!(sol.v.v.iter().all(|v| v[p.n_5g..].iter().all(|z| z.norm() == 0.0) && v.len() == p.n_5g + wifi_len));
    }

    #[test]
    fn only_wifi_full_coverage_cost_and_delay() {
        let p = ScenarioParams {
            k: 6,
            m: 2,
            n: 6,
            q: 2,
            wifi_cover_radius_m: 1e4,
            ..Default::default()
        };
        let scn = Scenario::generate(&p, 2).unwrap();
        let sol = solve_only_wifi(&scn, &AlgoConfig::default()).unwrap();
        for m in &sol.slots {
            assert!((m.cost - 6.0 * p.cost_wf).abs() < 1e-12);
            assert_eq!(m.delay, p.t_tx);
        }
        let noise = NoiseDiagonal::for_params(&p);
        for q in 0..p.q {
            let b = assemble_b(sol.alpha.column(q), &sol.beta[q], &scn, q).unwrap();
            let r = mse_reduced(&b, &noise, scn.ivas.xbar[q]).unwrap();
            assert!((sol.slots[q].mse - r).abs() <= 1e-9 * r);
        }
    }

    #[test]
    fn only_wifi_delay_counts_longest_path() {
        for seed in 0..30 {
            let p = ScenarioParams { k: 12, m: 2, n: 12, q: 1, d2d_link_radius_m: 250.0, ..Default::default() };
            let scn = Scenario::generate(&p, seed).unwrap();
            let longest = scn.coverage.max_path_len();
            if longest == 0 {
                continue;
            }
            let sol = solve_only_wifi(&scn, &AlgoConfig::default()).unwrap();
            assert!((sol.slots[0].delay - (1 + longest) as f64 * p.t_tx).abs() < 1e-15);
            return;
        }
        panic!("no seed produced a D2D path");
    }

    #[test]
    fn missing_devices_are_penalized() {
        let p = ScenarioParams { k: 10, m: 1, n: 10, q: 1, ..Default::default() };
        for seed in 0..20 {
            let scn = Scenario::generate(&p, seed).unwrap();
            let missing: Complex64 = (0..p.k)
                .filter(|&k| matches!(scn.coverage.roles[k], Role::Forced5g))
                .map(|k| scn.ivas.x[k][0])
                .sum();
            if missing.norm() == 0.0 {
                continue;
            }
            let sol = solve_only_wifi(&scn, &AlgoConfig::default()).unwrap();
            assert!(sol.slots[0].mse >= 0.5 * missing.norm_sqr(), "seed {seed}");
        }
    }

    #[test]
    fn tiny_instance_only_5g_not_better_than_proposed() {
        let p = ScenarioParams { k: 2, m: 1, n: 2, q: 1, wifi_cover_radius_m: 400.0, ..Default::default() };
        for seed in 0..10 {
            let scn = Scenario::generate(&p, seed).unwrap();
            let five = solve_only_5g(&scn, &AlgoConfig::default()).unwrap();
            let prop = solve(&scn, &AlgoConfig::default()).unwrap();
            let exh = crate::baselines::solve_exhaustive(&scn, &AlgoConfig::default()).unwrap();
            assert!(exh.objective <= five.objective * (1.0 + 1e-9));
            assert!(exh.objective <= prop.objective * (1.0 + 1e-12));
        }
    }
}
