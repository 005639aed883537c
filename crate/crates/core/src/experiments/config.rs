//! Experiment configuration: TOML or JSON files, sweep specs and scheme lists.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::exhaustive::MAX_ENTRIES;
use crate::optimizer::AlgoConfig;
use crate::params::ScenarioParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposed,
    Only5g,
    Onlywifi,
    Qam16,
    Exhaustive,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Proposed, Scheme::Only5g, Scheme::Onlywifi, Scheme::Qam16, Scheme::Exhaustive];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Only5g => "only5g",
            Scheme::Onlywifi => "onlywifi",
            Scheme::Qam16 => "qam16",
            Scheme::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

/// Comma-separated scheme names. An empty string is an empty list;
/// duplicates are dropped, first occurrence wins.
pub fn parse_scheme_list(s: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let sc: Scheme = part.parse()?;
        if !out.contains(&sc) {
            out.push(sc);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    K,
    M,
    #[serde(rename = "w1")]
    W1,
    #[serde(rename = "w2")]
    W2,
    #[serde(rename = "w3")]
    W3,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::K => "K",
            SweepAxis::M => "M",
            SweepAxis::W1 => "w1",
            SweepAxis::W2 => "w2",
            SweepAxis::W3 => "w3",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, SweepAxis::K | SweepAxis::M)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepAxis::K, SweepAxis::M, SweepAxis::W1, SweepAxis::W2, SweepAxis::W3]
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown sweep axis {s:?} (expected K, M, w1, w2 or w3)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// Scenario parameters at one point of the sweep.
    pub fn apply(&self, base: &ScenarioParams, value: f64) -> Result<ScenarioParams> {
        let mut p = base.clone();
        let count = || -> Result<usize> {
            if value.fract() == 0.0 && (1.0..=1e6).contains(&value) {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{} = {value} is not a positive integer", self.axis.name())))
            }
        };
        match self.axis {
            SweepAxis::K => p.k = count()?,
            SweepAxis::M => p.m = count()?,
            SweepAxis::W1 => p.w_mse = value,
            SweepAxis::W2 => p.w_cost = value,
            SweepAxis::W3 => p.w_delay = value,
        }
        p.validate()?;
        Ok(p)
    }
}

/// `AXIS=v1,v2,...`
impl FromStr for SweepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (axis, list) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep {s:?} is not of the form AXIS=v1,v2,...")))?;
        let axis: SweepAxis = axis.parse()?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("sweep value {v:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = SweepSpec { axis, values };
        spec.check_values()?;
        Ok(spec)
    }
}

impl SweepSpec {
    fn check_values(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no values".into()));
        }
        for &v in &self.values {
            let ok = if self.axis.is_count() {
                v.fract() == 0.0 && (1.0..=1e6).contains(&v)
            } else {
                v.is_finite() && v >= 0.0
            };
            if !ok {
                return Err(Error::Config(format!("sweep value {v} invalid for axis {}", self.axis.name())));
            }
        }
        Ok(())
    }
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::Proposed, Scheme::Only5g, Scheme::Onlywifi, Scheme::Qam16]
}

fn default_trials() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: ScenarioParams,
    #[serde(default)]
    pub algo: AlgoConfig,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioParams::default(),
            algo: AlgoConfig::default(),
            schemes: default_schemes(),
            trials: default_trials(),
            base_seed: 0,
            sweep: None,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `.json` files are read as JSON, anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json { Self::from_json_str(&text) } else { Self::from_toml_str(&text) }
    }

    /// Scenario parameters for every sweep point; a single point when there
    /// is no sweep.
    pub fn points(&self) -> Result<Vec<(Option<f64>, ScenarioParams)>> {
        match &self.sweep {
            None => Ok(vec![(None, self.scenario.clone())]),
            Some(sw) => sw.values.iter().map(|&v| Ok((Some(v), sw.apply(&self.scenario, v)?))).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.algo.validate()?;
        self.scenario.validate()?;
        if let Some(sw) = &self.sweep {
            sw.check_values()?;
        }
        for (_, p) in self.points()? {
            if self.schemes.contains(&Scheme::Exhaustive) && p.k.saturating_mul(p.q) > MAX_ENTRIES {
                return Err(Error::Config(format!(
                    "exhaustive search needs K*Q <= {MAX_ENTRIES}, got K = {}, Q = {}",
                    p.k, p.q
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_list_parsing() {
        assert_eq!(parse_scheme_list("").unwrap(), vec![]);
        assert_eq!(
            parse_scheme_list("proposed, only5g,proposed,QAM16").unwrap(),
            vec![Scheme::Proposed, Scheme::Only5g, Scheme::Qam16]
        );
        assert!(parse_scheme_list("proposed,lte").is_err());
        for sc in Scheme::ALL {
            assert_eq!(sc.to_string().parse::<Scheme>().unwrap(), sc);
        }
    }

    #[test]
    fn sweep_spec_parsing() {
        let s: SweepSpec = "K=10,20".parse().unwrap();
        assert_eq!(s, SweepSpec { axis: SweepAxis::K, values: vec![10.0, 20.0] });
        let w: SweepSpec = "w1=1e6, 1e8".parse().unwrap();
        assert_eq!(w.axis, SweepAxis::W1);
        assert!("K=2.5".parse::<SweepSpec>().is_err());
        assert!("K=0".parse::<SweepSpec>().is_err());
        assert!("w2=-1".parse::<SweepSpec>().is_err());
        assert!("Z=1".parse::<SweepSpec>().is_err());
        assert!("K=".parse::<SweepSpec>().is_err());
        assert!("K".parse::<SweepSpec>().is_err());
    }

    #[test]
    fn sweep_applies_to_params() {
        let base = ScenarioParams::default();
        let s: SweepSpec = "M=8".parse().unwrap();
        assert_eq!(s.apply(&base, 8.0).unwrap().m, 8);
        // N must stay a multiple of K
        let k: SweepSpec = "K=7".parse().unwrap();
        assert!(k.apply(&base, 7.0).is_err());
    }

    #[test]
    fn toml_and_json_agree() {
        let toml = r#"
            schemes = ["proposed", "only5g"]
            trials = 3
            base_seed = 9
            [scenario]
            k = 5
            n = 60
            [algo]
            eps = 1e-4
            [sweep]
            axis = "M"
            values = [2, 4]
        "#;
        let json = r#"{"schemes": ["proposed", "only5g"], "trials": 3, "base_seed": 9,
            "scenario": {"k": 5, "n": 60}, "algo": {"eps": 1e-4},
            "sweep": {"axis": "M", "values": [2, 4]}}"#;
        let a = ExperimentConfig::from_toml_str(toml).unwrap();
        let b = ExperimentConfig::from_json_str(json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scenario.k, 5);
        assert_eq!(a.points().unwrap().len(), 2);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ExperimentConfig::from_toml_str("trials = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("schemes = [\"exhaustive\"]").is_err());
        let small = "schemes = [\"exhaustive\"]\n[scenario]\nk = 4\nn = 8\nq = 2\n";
        assert!(ExperimentConfig::from_toml_str(small).is_ok());
        assert!(ExperimentConfig::from_json_str("{\"trials\": -1}").is_err());
        assert!(ExperimentConfig::from_json_str("[").is_err());
    }

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }
}
