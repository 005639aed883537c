//! Globally searched RAT selection for small instances.
//!
//! Depth-first enumeration of every binary selection, pruned with a lower
//! bound from the cost and delay terms (the MSE term is nonnegative). Each
//! leaf gets the best of several starts of the balanced transmit fixed
//! point. The proposed solver's answer seeds the incumbent, so the result
//! never exceeds it.

use num_complex::Complex64;
use rand::Rng;

use crate::metrics::{cost_q, delay_q, objective, DecisionState, RatSelection, TransmitCoeffs};
use crate::optimizer::{balanced_transmit, energy_rhs_all, solve, transmit, AlgoConfig, Solution};
use crate::scenario::{Role, Scenario};
use crate::{rng, Error, Result};

/// Largest `K * Q` the enumeration accepts.
pub const MAX_ENTRIES: usize = 16;

/// Random-phase restarts per leaf on top of the real-phase start.
const EXTRA_STARTS: usize = 2;

const LEAF_TAG: u64 = 0xE5;

struct Search<'a> {
    scn: &'a Scenario,
    cfg: &'a AlgoConfig,
    ptilde: Vec<f64>,
    order: Vec<(usize, usize)>,
    best: (f64, RatSelection, TransmitCoeffs, f64),
    leaves: u64,
}

impl Search<'_> {
    /// Cost and delay with every unassigned entry at its cheapest value.
    fn bound(&self, alpha: &RatSelection, assigned: usize) -> f64 {
        let p = &self.scn.params;
        let mut cheap = alpha.clone();
        let mut fast = alpha.clone();
        for &(k, q) in &self.order[assigned..] {
            cheap.set(k, q, 0.0);
            fast.set(k, q, 1.0);
        }
        (0..p.q)
            .map(|q| p.w_cost * cost_q(cheap.column(q), p) + p.w_delay * delay_q(fast.column(q), &self.scn.coverage, p))
            .sum()
    }

    fn feasible(&self, alpha: &RatSelection) -> bool {
        let p = &self.scn.params;
        (0..p.k).all(|k| {
            !matches!(self.scn.coverage.roles[k], Role::TypeII { .. }) || (0..p.q).any(|q| alpha.get(k, q) == 1.0)
        })
    }

    fn leaf(&mut self, alpha: &RatSelection) -> Result<()> {
        if !self.feasible(alpha) {
            return Ok(());
        }
        self.leaves += 1;
        let p = &self.scn.params;
        let mut rng = rng::stream(self.scn.seed, &[LEAF_TAG, self.leaves]);
        for start in 0..=EXTRA_STARTS {
            let mut drives = transmit::initial_drives(self.scn, alpha, &self.ptilde);
            if start > 0 {
                for slot in drives.iter_mut() {
                    for z in slot.b5g.iter_mut().chain(slot.bwf.iter_mut()).chain(slot.bd2d.iter_mut()) {
                        *z *= Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                    }
                }
            }
            let rep = balanced_transmit(self.scn, alpha, &self.ptilde, &mut drives, self.cfg)?;
            let beta: TransmitCoeffs = (0..p.q)
                .map(|q| transmit::drives_to_beta(self.scn, alpha.column(q), &drives[q], q))
                .collect();
            let state = DecisionState { alpha: alpha.clone(), beta, v: None };
            let obj = objective(&state, self.scn)?;
            if obj < self.best.0 {
                let res = if rep.converged { rep.residual } else { f64::INFINITY };
                self.best = (obj, state.alpha, state.beta, res);
            }
        }
        Ok(())
    }

    fn dfs(&mut self, alpha: &mut RatSelection, depth: usize) -> Result<()> {
        if self.bound(alpha, depth) >= self.best.0 {
            return Ok(());
        }
        if depth == self.order.len() {
            return self.leaf(alpha);
        }
        let (k, q) = self.order[depth];
        for v in [0.0, 1.0] {
            alpha.set(k, q, v);
            self.dfs(alpha, depth + 1)?;
        }
        Ok(())
    }
}

pub fn solve_exhaustive(scn: &Scenario, cfg: &AlgoConfig) -> Result<Solution> {
    let p = &scn.params;
    if p.k * p.q > MAX_ENTRIES {
        return Err(Error::TooLarge(p.k * p.q));
    }
    cfg.validate()?;
    let incumbent = solve(scn, cfg)?;
    let order: Vec<(usize, usize)> = (0..p.q)
        .flat_map(|q| (0..p.k).map(move |k| (k, q)))
        .filter(|&(k, _)| !scn.coverage.is_forced_5g(k))
        .collect();
    let mut search = Search {
        scn,
        cfg,
        ptilde: energy_rhs_all(p)?,
        order,
        best: (
            incumbent.objective,
            incumbent.alpha.clone(),
            incumbent.beta.clone(),
            incumbent.stationarity_residual,
        ),
        leaves: 0,
    };
    let mut alpha = RatSelection::constant(p.k, p.q, 1.0);
    search.dfs(&mut alpha, 0)?;
    let leaves = search.leaves as usize;
    let (_, alpha, beta, residual) = search.best;
    log::debug!("exhaustive search evaluated {leaves} leaves");
    Solution::from_decision(scn, alpha, beta, leaves.max(1), true, Vec::new(), residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{assemble_b, mse_reduced, NoiseDiagonal, SlotCoeffs};
    use crate::optimizer::energy_rhs;
    use crate::params::ScenarioParams;
    use crate::scenario::Scenario;

    #[test]
    fn refuses_large_instances() {
        let p = ScenarioParams { k: 5, m: 1, n: 5, q: 4, ..Default::default() };
        let scn = Scenario::generate(&p, 0).unwrap();
        assert!(matches!(solve_exhaustive(&scn, &AlgoConfig::default()), Err(Error::TooLarge(20))));
    }

    #[test]
    fn single_device_picks_better_rat() {
        let p = ScenarioParams { k: 1, m: 1, n: 1, q: 1, wifi_cover_radius_m: 300.0, ..Default::default() };
        for seed in 0..10 {
            let scn = Scenario::generate(&p, seed).unwrap();
            if !scn.coverage.roles[0].is_type_one() {
                continue;
            }
            let ptilde = energy_rhs(&p, 0).unwrap();
            let amp = ptilde.sqrt() / scn.ivas.x[0][0].norm();
            let noise = NoiseDiagonal::for_params(&p);
            let direct = |a: f64| {
                let one = Complex64::new(amp, 0.0);
                let beta = SlotCoeffs { b5g: vec![one], bwf: vec![one], bd2d: vec![Complex64::new(0.0, 0.0)] };
                let b = assemble_b(&[a], &beta, &scn, 0).unwrap();
                p.w_mse * mse_reduced(&b, &noise, scn.ivas.xbar[0]).unwrap()
                    + p.w_cost * (a * p.cost_5g + (1.0 - a) * p.cost_wf)
                    + p.w_delay * p.t_tx
            };
            let want = direct(0.0).min(direct(1.0));
            let got = solve_exhaustive(&scn, &AlgoConfig::default()).unwrap().objective;
            assert!((got - want).abs() <= 1e-9 * want, "seed {seed}: {got} vs {want}");
        }
    }

    #[test]
    fn two_forced_devices_match_phase_grid() {
        let p = ScenarioParams {
            k: 2,
            m: 1,
            n: 2,
            q: 1,
            wifi_cover_radius_m: 0.0,
            d2d_link_radius_m: 0.0,
            w_mse: 1e9,
            ..Default::default()
        };
        for seed in 0..5 {
            let scn = Scenario::generate(&p, seed).unwrap();
            let noise = NoiseDiagonal::for_params(&p);
            let amps: Vec<f64> = (0..2).map(|k| energy_rhs(&p, k).unwrap().sqrt() / scn.ivas.x[k][0].norm()).collect();
            let mut best = f64::INFINITY;
            for i in 0..20_000 {
                let phi = i as f64 / 20_000.0 * std::f64::consts::TAU;
                let beta = SlotCoeffs {
                    b5g: vec![Complex64::new(amps[0], 0.0), Complex64::from_polar(amps[1], phi)],
                    bwf: vec![Complex64::new(0.0, 0.0); 2],
                    bd2d: vec![Complex64::new(0.0, 0.0); 2],
                };
                let b = assemble_b(&[1.0, 1.0], &beta, &scn, 0).unwrap();
                best = best.min(mse_reduced(&b, &noise, scn.ivas.xbar[0]).unwrap());
            }
            let want = p.w_mse * best + p.w_cost * 2.0 + p.w_delay * p.t_tx;
            let got = solve_exhaustive(&scn, &AlgoConfig::default()).unwrap().objective;
            assert!((got - want).abs() <= 1e-3 * want, "seed {seed}: {got} vs {want}");
            assert!(got <= want * (1.0 + 1e-9));
        }
    }

    #[test]
    fn never_worse_than_proposed() {
        let p = ScenarioParams { k: 4, m: 2, n: 4, q: 2, d2d_link_radius_m: 200.0, wifi_cover_radius_m: 150.0, ..Default::default() };
        for seed in 0..6 {
            let scn = Scenario::generate(&p, seed).unwrap();
            let prop = solve(&scn, &AlgoConfig::default()).unwrap();
            let ex = solve_exhaustive(&scn, &AlgoConfig::default()).unwrap();
            assert!(ex.objective <= prop.objective);
        }
    }
}
