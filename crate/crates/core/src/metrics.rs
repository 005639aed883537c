//! Per-slot figures of merit: effective vectors, computation MSE, cost,
//! delay, transmit power and the weighted MSE-cost-delay objective.

use num_complex::Complex64;

use crate::cvec::{self, CVec};
use crate::params::ScenarioParams;
use crate::scenario::{CoverageStructure, Role, Scenario};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionForm {
    Binary,
    Relaxed,
}

/// RAT selection, `1` = 5G and `0` = WiFi. Stored slot-major: `cols[q][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatSelection {
    form: SelectionForm,
    cols: Vec<Vec<f64>>,
}

impl RatSelection {
    pub fn binary(cols: Vec<Vec<f64>>) -> Result<Self> {
        if cols.iter().flatten().any(|&a| a != 0.0 && a != 1.0) {
            return Err(Error::Dimension("binary selection has entries outside {0,1}".into()));
        }
        Ok(Self { form: SelectionForm::Binary, cols })
    }

    pub fn relaxed(cols: Vec<Vec<f64>>) -> Result<Self> {
        if cols.iter().flatten().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(Error::Dimension("relaxed selection has entries outside [0,1]".into()));
        }
        Ok(Self { form: SelectionForm::Relaxed, cols })
    }

    pub fn constant(k: usize, q: usize, value: f64) -> Self {
        let form = if value == 0.0 || value == 1.0 { SelectionForm::Binary } else { SelectionForm::Relaxed };
        Self { form, cols: vec![vec![value; k]; q] }
    }

    /// Devices in WiFi coverage start on WiFi, everyone else on 5G.
    pub fn initial(scn: &Scenario) -> Self {
        let col: Vec<f64> = scn
            .coverage
            .roles
            .iter()
            .map(|r| if r.is_type_one() { 0.0 } else { 1.0 })
            .collect();
        Self { form: SelectionForm::Binary, cols: vec![col; scn.params.q] }
    }

    pub fn form(&self) -> SelectionForm {
        self.form
    }

    pub fn get(&self, k: usize, q: usize) -> f64 {
        self.cols[q][k]
    }

    pub fn set(&mut self, k: usize, q: usize, v: f64) {
        self.cols[q][k] = v;
        if v != 0.0 && v != 1.0 {
            self.form = SelectionForm::Relaxed;
        }
    }

    pub fn column(&self, q: usize) -> &[f64] {
        &self.cols[q]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    pub fn slots(&self) -> usize {
        self.cols.len()
    }

    pub fn devices(&self) -> usize {
        self.cols.first().map_or(0, |c| c.len())
    }
}

/// Transmit coefficients of one slot, indexed by device. Entries for roles a
/// device does not hold are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCoeffs {
    pub b5g: CVec,
    pub bwf: CVec,
    pub bd2d: CVec,
}

impl SlotCoeffs {
    pub fn zeros(k: usize) -> Self {
        Self {
            b5g: cvec::zeros(k),
            bwf: cvec::zeros(k),
            bd2d: cvec::zeros(k),
        }
    }

    pub fn is_finite(&self) -> bool {
        cvec::is_finite(&self.b5g) && cvec::is_finite(&self.bwf) && cvec::is_finite(&self.bd2d)
    }
}

pub type TransmitCoeffs = Vec<SlotCoeffs>;

/// `b_q` split per receiver: gNB, then each AP's direct block, then each
/// AP's forwarded (D2D) block.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveVector {
    pub b5g: CVec,
    pub bwf: Vec<CVec>,
    pub bd2d: Vec<CVec>,
}

impl EffectiveVector {
    pub fn zeros(n_5g: usize, m: usize, n_wf: usize) -> Self {
        Self {
            b5g: cvec::zeros(n_5g),
            bwf: vec![cvec::zeros(n_wf); m],
            bd2d: vec![cvec::zeros(n_wf); m],
        }
    }

    /// Concatenation in the order (5g, wf_1..wf_M, d2d_1..d2d_M).
    pub fn stacked(&self) -> CVec {
        let mut out = self.b5g.clone();
        for b in self.bwf.iter().chain(&self.bd2d) {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn from_stacked(v: &[Complex64], n_5g: usize, m: usize, n_wf: usize) -> Result<Self> {
        if v.len() != n_5g + 2 * m * n_wf {
            return Err(Error::Dimension(format!(
                "stacked length {} != {}",
                v.len(),
                n_5g + 2 * m * n_wf
            )));
        }
        let block = |i: usize| v[n_5g + i * n_wf..n_5g + (i + 1) * n_wf].to_vec();
        Ok(Self {
            b5g: v[..n_5g].to_vec(),
            bwf: (0..m).map(block).collect(),
            bd2d: (m..2 * m).map(block).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.b5g.len() + self.bwf.iter().chain(&self.bd2d).map(|b| b.len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `b^H Sigma^{-1} b`.
    pub fn weighted_energy(&self, noise: &NoiseDiagonal) -> Result<f64> {
        noise.check_positive()?;
        let s = self.stacked();
        if s.len() != noise.diag.len() {
            return Err(Error::Dimension("effective vector and noise lengths differ".into()));
        }
        Ok(s.iter().zip(&noise.diag).map(|(b, n)| b.norm_sqr() / n).sum())
    }
}

/// Diagonal of the stacked noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDiagonal {
    pub diag: Vec<f64>,
}

impl NoiseDiagonal {
    pub fn for_params(p: &ScenarioParams) -> Self {
        let mut diag = vec![p.sigma2; p.n_5g];
        for _ in 0..2 {
            for m in 0..p.m {
                diag.extend(std::iter::repeat_n(p.sigma2_ap.get(m), p.n_wf));
            }
        }
        Self { diag }
    }

    pub fn check_positive(&self) -> Result<()> {
        match self.diag.iter().find(|&&d| !(d > 0.0)) {
            Some(d) => Err(Error::Domain(format!("noise entry {d} is not positive"))),
            None => Ok(()),
        }
    }
}

/// `sum_{j in clients(relay)} (1 - alpha_j) x_j`.
pub fn client_sum(alpha_q: &[f64], scn: &Scenario, q: usize, relay: usize) -> Complex64 {
    scn.coverage.clients[relay]
        .iter()
        .map(|&j| (1.0 - alpha_q[j]) * scn.ivas.x[j][q])
        .sum()
}

pub fn assemble_b(alpha_q: &[f64], coeffs: &SlotCoeffs, scn: &Scenario, q: usize) -> Result<EffectiveVector> {
    let p = &scn.params;
    if alpha_q.len() != p.k || coeffs.b5g.len() != p.k || coeffs.bwf.len() != p.k || coeffs.bd2d.len() != p.k {
        return Err(Error::Dimension(format!(
            "slot inputs must have K = {} entries",
            p.k
        )));
    }
    if q >= p.q {
        return Err(Error::Dimension(format!("slot {q} out of range")));
    }
    let mut b = EffectiveVector::zeros(p.n_5g, p.m, p.n_wf);
    let ch = &scn.channels;
    for k in 0..p.k {
        let x = scn.ivas.x[k][q];
        let a = alpha_q[k];
        if a != 0.0 {
            cvec::axpy(&mut b.b5g, a * coeffs.b5g[k] * x, &ch.h5g[k][q]);
        }
        match scn.coverage.roles[k] {
            Role::Plain { ap } | Role::Relay { ap } => {
                let hwf = ch.hwf[k].as_ref().ok_or_else(|| Error::Dimension(format!("device {k} lacks WiFi channel")))?;
                if a != 1.0 {
                    cvec::axpy(&mut b.bwf[ap], (1.0 - a) * coeffs.bwf[k] * x, &hwf[q]);
                }
                if matches!(scn.coverage.roles[k], Role::Relay { .. }) {
                    let s = client_sum(alpha_q, scn, q, k);
                    let hd = ch.hd2d[k].as_ref().ok_or_else(|| Error::Dimension(format!("relay {k} lacks D2D channel")))?;
                    cvec::axpy(&mut b.bd2d[ap], coeffs.bd2d[k] * s, &hd[q]);
                }
            }
            Role::TypeII { .. } | Role::Forced5g => {}
        }
    }
    Ok(b)
}

/// `|v^H b - xbar|^2 + v^H Sigma v`.
pub fn mse_explicit(v: &[Complex64], b: &EffectiveVector, noise: &NoiseDiagonal, xbar_q: Complex64) -> Result<f64> {
    let bs = b.stacked();
    if v.len() != bs.len() || v.len() != noise.diag.len() {
        return Err(Error::Dimension(format!(
            "receive vector {} / effective vector {} / noise {} lengths differ",
            v.len(),
            bs.len(),
            noise.diag.len()
        )));
    }
    let bias = (cvec::dot_h(v, &bs) - xbar_q).norm_sqr();
    let var: f64 = v.iter().zip(&noise.diag).map(|(vi, n)| vi.norm_sqr() * n).sum();
    Ok(bias + var)
}

/// MSE under the LMMSE receiver: `|xbar|^2 / (1 + b^H Sigma^{-1} b)`.
pub fn mse_reduced(b: &EffectiveVector, noise: &NoiseDiagonal, xbar_q: Complex64) -> Result<f64> {
    let u = b.weighted_energy(noise)?;
    Ok(xbar_q.norm_sqr() / (1.0 + u))
}

pub fn cost_q(alpha_q: &[f64], params: &ScenarioParams) -> f64 {
    alpha_q
        .iter()
        .map(|a| a * params.cost_5g + (1.0 - a) * params.cost_wf)
        .sum()
}

/// `max_j (1 - alpha_j) |P_j| T_tx + T_tx` over reachable type-II devices.
pub fn delay_q(alpha_q: &[f64], cov: &CoverageStructure, params: &ScenarioParams) -> f64 {
    let worst = cov
        .type_two
        .iter()
        .filter_map(|&j| cov.path_len[j].map(|l| (1.0 - alpha_q[j]) * l as f64))
        .fold(0.0, f64::max);
    worst * params.t_tx + params.t_tx
}

/// Transmit power of device `k` in slot `q`; the slot's energy is this
/// times `T_tx`.
pub fn tx_power(alpha_q: &[f64], coeffs: &SlotCoeffs, scn: &Scenario, k: usize, q: usize) -> Result<f64> {
    if k >= scn.params.k {
        return Err(Error::Dimension(format!("unknown device {k}")));
    }
    let x = scn.ivas.x[k][q];
    let a = alpha_q[k];
    let p5 = a * (coeffs.b5g[k] * x).norm_sqr();
    Ok(match scn.coverage.roles[k] {
        Role::TypeII { .. } => p5 + (1.0 - a) * scn.params.p_max.get(k),
        Role::Forced5g => p5,
        Role::Plain { .. } => p5 + (1.0 - a) * (coeffs.bwf[k] * x).norm_sqr(),
        Role::Relay { .. } => {
            let s = client_sum(alpha_q, scn, q, k);
            p5 + (1.0 - a) * (coeffs.bwf[k] * x).norm_sqr() + (coeffs.bd2d[k] * s).norm_sqr()
        }
    })
}

/// Full decision: selection, transmit coefficients and optionally explicit
/// stacked receive vectors (one per slot).
#[derive(Debug, Clone)]
pub struct DecisionState {
    pub alpha: RatSelection,
    pub beta: TransmitCoeffs,
    pub v: Option<Vec<CVec>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotMetrics {
    pub mse: f64,
    pub cost: f64,
    pub delay: f64,
}

pub fn slot_metrics(state: &DecisionState, scn: &Scenario, q: usize) -> Result<SlotMetrics> {
    let p = &scn.params;
    let a = state.alpha.column(q);
    let b = assemble_b(a, &state.beta[q], scn, q)?;
    let noise = NoiseDiagonal::for_params(p);
    let xbar = scn.ivas.xbar[q];
    let mse = match &state.v {
        Some(v) => mse_explicit(&v[q], &b, &noise, xbar)?,
        None => mse_reduced(&b, &noise, xbar)?,
    };
    Ok(SlotMetrics {
        mse,
        cost: cost_q(a, p),
        delay: delay_q(a, &scn.coverage, p),
    })
}

/// `w1 sum MSE + w2 sum cost + w3 sum delay`.
pub fn objective(state: &DecisionState, scn: &Scenario) -> Result<f64> {
    let p = &scn.params;
    let mut total = 0.0;
    for q in 0..p.q {
        let m = slot_metrics(state, scn, q)?;
        total += p.w_mse * m.mse + p.w_cost * m.cost + p.w_delay * m.delay;
    }
    Ok(total)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::params::ScenarioParams;
    use crate::scenario::{build_coverage, draw_channels, IvaMatrix, Point, Topology};
    use crate::Complex64;

    /// One device next to the gNB, no APs, unit-scale channels and noise.
    pub fn single_device(h: Vec<Complex64>, x: Complex64) -> Scenario {
        let params = ScenarioParams {
            k: 1,
            m: 0,
            n: 1,
            q: 1,
            n_5g: h.len(),
            sigma2: 1.0,
            sigma2_ap: 1.0.into(),
            ..ScenarioParams::default()
        };
        let topo = Topology {
            gnb: Point::new(0.0, 0.0),
            aps: vec![],
            devices: vec![Point::new(10.0, 0.0)],
        };
        let cov = build_coverage(&params, &topo);
        let mut ch = draw_channels(&params, &topo, &cov, 0);
        ch.h5g[0][0] = h;
        let ivas = IvaMatrix::from_raw(&[vec![vec![x]]]);
        Scenario::from_parts(params, topo, cov, ch, ivas).unwrap()
    }
}
