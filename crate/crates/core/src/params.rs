//! Scalar knobs of the system model.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A value that is either shared by every device (or AP) or given per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Knob {
    Uniform(f64),
    PerItem(Vec<f64>),
}

impl Knob {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            Knob::Uniform(v) => *v,
            Knob::PerItem(vs) => vs[i],
        }
    }

    fn check(&self, name: &str, count: usize, positive: bool) -> Result<()> {
        let vals: Vec<f64> = match self {
            Knob::Uniform(v) => vec![*v],
            Knob::PerItem(vs) => {
                if vs.len() != count {
                    return Err(Error::InvalidParams(format!(
                        "{name} has {} entries, expected {count}",
                        vs.len()
                    )));
                }
                vs.clone()
            }
        };
        for v in vals {
            let bad = !v.is_finite() || v < 0.0 || (positive && v == 0.0);
            if bad {
                return Err(Error::InvalidParams(format!("{name} = {v} out of range")));
            }
        }
        Ok(())
    }
}

impl From<f64> for Knob {
    fn from(v: f64) -> Self {
        Knob::Uniform(v)
    }
}

/// Every knob of a scenario. Field names follow the usual symbols of the
/// system model; units are SI (seconds, joules, watts, meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// Number of wireless devices.
    pub k: usize,
    /// Number of WiFi access points.
    pub m: usize,
    /// Number of data files, split evenly over the devices.
    pub n: usize,
    /// Number of reduce functions (one upload slot each).
    pub q: usize,
    /// Bits per data file.
    pub d: f64,
    pub n_5g: usize,
    pub n_wf: usize,
    pub t_map: f64,
    pub t_tx: f64,
    /// CPU cycles per bit.
    pub cycles_per_bit: Knob,
    /// Effective switched capacitance.
    pub capacitance: Knob,
    /// Energy budget per device.
    pub energy_budget: Knob,
    /// Full transmit power used on D2D hops.
    pub p_max: Knob,
    /// gNB noise power per antenna.
    pub sigma2: f64,
    /// AP noise power per antenna.
    pub sigma2_ap: Knob,
    pub cost_5g: f64,
    pub cost_wf: f64,
    pub w_mse: f64,
    pub w_cost: f64,
    pub w_delay: f64,
    pub cell_radius_m: f64,
    pub ap_ring_radius_m: f64,
    pub wifi_cover_radius_m: f64,
    pub d2d_link_radius_m: f64,
    pub shadow_std_db: f64,
    /// Hold small-scale fading fixed over the Q slots instead of redrawing.
    pub freeze_channels: bool,
}

/// -174 dBW taken as total per-antenna noise power.
pub const DEFAULT_NOISE_W: f64 = 3.981_071_705_534_969e-18;

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            k: 10,
            m: 4,
            n: 120,
            q: 10,
            d: 100.0,
            n_5g: 4,
            n_wf: 2,
            t_map: 0.01,
            t_tx: 0.02,
            cycles_per_bit: 1000.0.into(),
            capacitance: 1e-28.into(),
            energy_budget: 10.0.into(),
            p_max: 0.1.into(),
            sigma2: DEFAULT_NOISE_W,
            sigma2_ap: DEFAULT_NOISE_W.into(),
            cost_5g: 1.0,
            cost_wf: 0.2,
            w_mse: 1e4,
            w_cost: 1.0,
            w_delay: 10.0,
            cell_radius_m: 500.0,
            ap_ring_radius_m: 200.0,
            wifi_cover_radius_m: 100.0,
            d2d_link_radius_m: 100.0,
            shadow_std_db: 8.0,
            freeze_channels: false,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.q == 0 {
            return bad("Q must be at least 1".into());
        }
        if self.n == 0 || !self.n.is_multiple_of(self.k) {
            return bad(format!("N = {} must be a positive multiple of K = {}", self.n, self.k));
        }
        if self.n_5g == 0 || self.n_wf == 0 {
            return bad("antenna counts must be positive".into());
        }
        if !(self.cost_wf < self.cost_5g) {
            return bad(format!(
                "WiFi cost {} must be below 5G cost {}",
                self.cost_wf, self.cost_5g
            ));
        }
        let positive = [
            ("t_map", self.t_map),
            ("t_tx", self.t_tx),
            ("d", self.d),
            ("sigma2", self.sigma2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        let nonneg = [
            ("cost_wf", self.cost_wf),
            ("w_mse", self.w_mse),
            ("w_cost", self.w_cost),
            ("w_delay", self.w_delay),
            ("cell_radius_m", self.cell_radius_m),
            ("ap_ring_radius_m", self.ap_ring_radius_m),
            ("wifi_cover_radius_m", self.wifi_cover_radius_m),
            ("d2d_link_radius_m", self.d2d_link_radius_m),
            ("shadow_std_db", self.shadow_std_db),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v} must be nonnegative"));
            }
        }
        self.cycles_per_bit.check("cycles_per_bit", self.k, false)?;
        self.capacitance.check("capacitance", self.k, false)?;
        self.energy_budget.check("energy_budget", self.k, false)?;
        self.p_max.check("p_max", self.k, false)?;
        self.sigma2_ap.check("sigma2_ap", self.m, true)?;
        Ok(())
    }

    /// Data files stored per device.
    pub fn files_per_device(&self) -> usize {
        self.n / self.k
    }

    /// Length of the stacked receive / effective vector.
    pub fn stacked_len(&self) -> usize {
        self.n_5g + 2 * self.m * self.n_wf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ScenarioParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_indivisible_file_count() {
        let p = ScenarioParams { n: 101, ..Default::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn rejects_wifi_not_cheaper() {
        let p = ScenarioParams { cost_wf: 1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn per_item_knob_length_checked() {
        let p = ScenarioParams {
            energy_budget: Knob::PerItem(vec![10.0; 3]),
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = ScenarioParams {
            energy_budget: Knob::PerItem(vec![10.0; 10]),
            ..Default::default()
        };
        p.validate().unwrap();
    }

    #[test]
    fn knob_parses_scalar_or_list() {
        let k: Knob = serde_json::from_str("2.5").unwrap();
        assert_eq!(k, Knob::Uniform(2.5));
        let k: Knob = serde_json::from_str("[1.0, 2.0]").unwrap();
        assert_eq!(k.get(1), 2.0);
    }
}
