//! Topology, channels, coverage/relay structure and synthetic IVAs.
//!
//! Every generator is a pure function of `(params, seed)`. Independent
//! quantities come from independent, coordinate-keyed streams (see
//! [`crate::rng`]) so that, for example, the 5G channels of a trial do not
//! change when the number of APs is swept.

use std::collections::VecDeque;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::cvec::CVec;
use crate::params::ScenarioParams;
use crate::rng::{stream, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub gnb: Point,
    pub aps: Vec<Point>,
    pub devices: Vec<Point>,
}

/// gNB at the origin, APs equally spaced on the ring starting at angle 0,
/// devices i.i.d. uniform over the cell disk.
pub fn place_topology(params: &ScenarioParams, seed: u64) -> Topology {
    let aps = ap_positions(params.m, params.ap_ring_radius_m);
    let mut rng = stream(seed, &[tag::TOPOLOGY]);
    let devices = (0..params.k)
        .map(|_| uniform_disk(&mut rng, params.cell_radius_m))
        .collect();
    Topology {
        gnb: Point::new(0.0, 0.0),
        aps,
        devices,
    }
}

pub fn ap_positions(m: usize, ring_radius: f64) -> Vec<Point> {
    (0..m)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            Point::new(ring_radius * theta.cos(), ring_radius * theta.sin())
        })
        .collect()
}

pub fn uniform_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    Point::new(r * theta.cos(), r * theta.sin())
}

/// Large-scale pathloss `30.6 + 37.6 log10(d)` in dB.
pub fn pathloss_db(distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(Error::Domain(format!(
            "pathloss distance must be positive, got {distance_m}"
        )));
    }
    Ok(30.6 + 37.6 * distance_m.log10())
}

/// Links shorter than this are evaluated at this distance.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Amplitude `sqrt(10^(gain_db/10))` of a link with the given shadowing.
pub fn link_amplitude(distance_m: f64, shadow_db: f64) -> f64 {
    let pl = pathloss_db(distance_m.max(MIN_LINK_DISTANCE_M)).expect("clamped distance is positive");
    10f64.powf((-pl + shadow_db) / 20.0)
}

/// Circular-symmetric complex Gaussian vector with unit variance per entry,
/// scaled by `amplitude`.
pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R, n: usize, amplitude: f64) -> CVec {
    let s = amplitude * std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// What a device does in the uplink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Type-I device that only carries its own IVA.
    Plain { ap: usize },
    /// Type-I device that also forwards the IVAs of type-II clients.
    Relay { ap: usize },
    /// Type-II device reaching WiFi through `relay` over `hops` D2D hops.
    TypeII { relay: usize, hops: usize },
    /// Type-II device with no D2D path to any type-I device; always on 5G.
    Forced5g,
}

impl Role {
    pub fn ap(&self) -> Option<usize> {
        match *self {
            Role::Plain { ap } | Role::Relay { ap } => Some(ap),
            _ => None,
        }
    }

    pub fn is_type_one(&self) -> bool {
        self.ap().is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageStructure {
    /// Devices directly served by each AP.
    pub type_one: Vec<Vec<usize>>,
    /// Type-I devices of each AP that forward for type-II clients.
    pub relays: Vec<Vec<usize>>,
    /// Type-II clients of each device (empty unless the device is a relay).
    pub clients: Vec<Vec<usize>>,
    /// Closest type-I device of each type-II device, if reachable.
    pub closest_type_one: Vec<Option<usize>>,
    /// D2D hop count to the closest type-I device.
    pub path_len: Vec<Option<usize>>,
    /// Devices outside every AP's coverage, ascending.
    pub type_two: Vec<usize>,
    pub roles: Vec<Role>,
}

impl CoverageStructure {
    pub fn is_forced_5g(&self, k: usize) -> bool {
        self.roles[k] == Role::Forced5g
    }

    pub fn max_path_len(&self) -> usize {
        self.path_len.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Type-I sets by distance (nearest AP wins, ties to the lower index), D2D
/// graph by link radius, closest type-I device by breadth-first search (ties
/// to the lower device index).
pub fn build_coverage(params: &ScenarioParams, topo: &Topology) -> CoverageStructure {
    let k = topo.devices.len();
    let m = topo.aps.len();
    let mut ap_of = vec![None; k];
    for (dev, p) in topo.devices.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (a, ap) in topo.aps.iter().enumerate() {
            let d = p.dist(ap);
            if d <= params.wifi_cover_radius_m && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((a, d));
            }
        }
        ap_of[dev] = best.map(|(a, _)| a);
    }
    let mut type_one = vec![Vec::new(); m];
    for (dev, ap) in ap_of.iter().enumerate() {
        if let Some(a) = ap {
            type_one[*a].push(dev);
        }
    }
    let type_two: Vec<usize> = (0..k).filter(|&d| ap_of[d].is_none()).collect();

    let adjacency: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i && topo.devices[i].dist(&topo.devices[j]) <= params.d2d_link_radius_m)
                .collect()
        })
        .collect();

    let mut closest = vec![None; k];
    let mut path_len = vec![None; k];
    for &j in &type_two {
        if let Some((target, hops)) = nearest_type_one(j, &adjacency, &ap_of) {
            closest[j] = Some(target);
            path_len[j] = Some(hops);
        }
    }

    let mut clients = vec![Vec::new(); k];
    for &j in &type_two {
        if let Some(i) = closest[j] {
            clients[i].push(j);
        }
    }
    let mut relays = vec![Vec::new(); m];
    for (a, members) in type_one.iter().enumerate() {
        relays[a] = members.iter().copied().filter(|&i| !clients[i].is_empty()).collect();
    }

    let roles = (0..k)
        .map(|d| match ap_of[d] {
            Some(ap) if clients[d].is_empty() => Role::Plain { ap },
            Some(ap) => Role::Relay { ap },
            None => match (closest[d], path_len[d]) {
                (Some(relay), Some(hops)) => Role::TypeII { relay, hops },
                _ => Role::Forced5g,
            },
        })
        .collect();

    CoverageStructure {
        type_one,
        relays,
        clients,
        closest_type_one: closest,
        path_len,
        type_two,
        roles,
    }
}

fn nearest_type_one(
    start: usize,
    adjacency: &[Vec<usize>],
    ap_of: &[Option<usize>],
) -> Option<(usize, usize)> {
    let mut depth = vec![usize::MAX; adjacency.len()];
    depth[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut found: Option<(usize, usize)> = None;
    while let Some(u) = queue.pop_front() {
        if let Some((_, d)) = found {
            if depth[u] >= d {
                break;
            }
        }
        for &v in &adjacency[u] {
            if depth[v] != usize::MAX {
                continue;
            }
            depth[v] = depth[u] + 1;
            if ap_of[v].is_some() {
                found = match found {
                    Some((best, d)) if best < v => Some((best, d)),
                    _ => Some((v, depth[v])),
                };
            } else {
                queue.push_back(v);
            }
        }
    }
    found
}

/// Per-device, per-slot channel vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `h5g[k][q]`, length `n_5g`.
    pub h5g: Vec<Vec<CVec>>,
    /// `hwf[k][q]` to the device's AP, type-I devices only.
    pub hwf: Vec<Option<Vec<CVec>>>,
    /// `hd2d[k][q]` for the forwarding transmission, relays only.
    pub hd2d: Vec<Option<Vec<CVec>>>,
}

/// Draws all links. Shadowing is one draw per link; small-scale fading is
/// redrawn per slot unless `freeze_channels` is set.
pub fn draw_channels(
    params: &ScenarioParams,
    topo: &Topology,
    cov: &CoverageStructure,
    seed: u64,
) -> ChannelRealization {
    let shadow = Normal::new(0.0, params.shadow_std_db).expect("validated shadow std");
    let link = |tag_id: u64, dev: usize, dist: f64, n_ant: usize| -> Vec<CVec> {
        let mut rng = stream(seed, &[tag_id, dev as u64]);
        let s: f64 = if params.shadow_std_db > 0.0 { shadow.sample(&mut rng) } else { 0.0 };
        let amp = link_amplitude(dist, s);
        if params.freeze_channels {
            let h = draw_fading(&mut rng, n_ant, amp);
            vec![h; params.q]
        } else {
            (0..params.q).map(|_| draw_fading(&mut rng, n_ant, amp)).collect()
        }
    };
    let mut h5g = Vec::with_capacity(params.k);
    let mut hwf = Vec::with_capacity(params.k);
    let mut hd2d = Vec::with_capacity(params.k);
    for (dev, pos) in topo.devices.iter().enumerate() {
        h5g.push(link(tag::CHAN_5G, dev, pos.dist(&topo.gnb), params.n_5g));
        let role = cov.roles[dev];
        match role.ap() {
            Some(ap) => {
                let d = pos.dist(&topo.aps[ap]);
                hwf.push(Some(link(tag::CHAN_WF, dev, d, params.n_wf)));
                if matches!(role, Role::Relay { .. }) {
                    hd2d.push(Some(link(tag::CHAN_D2D, dev, d, params.n_wf)));
                } else {
                    hd2d.push(None);
                }
            }
            None => {
                hwf.push(None);
                hd2d.push(None);
            }
        }
    }
    ChannelRealization { h5g, hwf, hd2d }
}

/// Aggregated IVAs `x[k][q]` and their exact per-slot sums.
#[derive(Debug, Clone, PartialEq)]
pub struct IvaMatrix {
    pub x: Vec<Vec<Complex64>>,
    pub xbar: Vec<Complex64>,
}

impl IvaMatrix {
    /// Aggregates raw per-file IVAs `raw[k][q][file]`.
    pub fn from_raw(raw: &[Vec<Vec<Complex64>>]) -> Self {
        let x: Vec<Vec<Complex64>> = raw
            .iter()
            .map(|dev| dev.iter().map(|files| files.iter().sum()).collect())
            .collect();
        let q = x.first().map_or(0, |r| r.len());
        let xbar = (0..q).map(|s| x.iter().map(|row| row[s]).sum()).collect();
        Self { x, xbar }
    }
}

/// Raw IVAs with real and imaginary parts i.i.d. uniform on [1, 3].
pub fn generate_ivas(params: &ScenarioParams, seed: u64) -> IvaMatrix {
    let per_dev = params.files_per_device();
    let raw: Vec<Vec<Vec<Complex64>>> = (0..params.k)
        .map(|dev| {
            let mut rng = stream(seed, &[tag::IVA, dev as u64]);
            (0..params.q)
                .map(|_| {
                    (0..per_dev)
                        .map(|_| Complex64::new(rng.random_range(1.0..=3.0), rng.random_range(1.0..=3.0)))
                        .collect()
                })
                .collect()
        })
        .collect();
    IvaMatrix::from_raw(&raw)
}

/// Map-phase CPU energy of device `k`:
/// `xi * (Q D C n_k) * f^2` with `f = Q D C n_k / T_map`.
pub fn map_energy(params: &ScenarioParams, k: usize) -> f64 {
    let cycles = params.q as f64 * params.d * params.cycles_per_bit.get(k) * params.files_per_device() as f64;
    let freq = cycles / params.t_map;
    params.capacitance.get(k) * cycles * freq * freq
}

/// Everything one trial needs, immutable once built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub seed: u64,
    pub topology: Topology,
    pub coverage: CoverageStructure,
    pub channels: ChannelRealization,
    pub ivas: IvaMatrix,
}

impl Scenario {
    pub fn generate(params: &ScenarioParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let topology = place_topology(params, seed);
        let coverage = build_coverage(params, &topology);
        let channels = draw_channels(params, &topology, &coverage, seed);
        let ivas = generate_ivas(params, seed);
        Ok(Self {
            params: params.clone(),
            seed,
            topology,
            coverage,
            channels,
            ivas,
        })
    }

    /// Assembles a scenario from explicit parts (used by tests and tools).
    pub fn from_parts(
        params: ScenarioParams,
        topology: Topology,
        coverage: CoverageStructure,
        channels: ChannelRealization,
        ivas: IvaMatrix,
    ) -> Result<Self> {
        params.validate()?;
        let k = params.k;
        let ok = topology.devices.len() == k
            && coverage.roles.len() == k
            && channels.h5g.len() == k
            && ivas.x.len() == k
            && ivas.xbar.len() == params.q
            && channels.h5g.iter().all(|h| h.len() == params.q);
        if !ok {
            return Err(Error::Dimension("scenario parts disagree with params".into()));
        }
        Ok(Self {
            params,
            seed: 0,
            topology,
            coverage,
            channels,
            ivas,
        })
    }

    pub fn noise_5g(&self) -> f64 {
        self.params.sigma2
    }

    pub fn noise_ap(&self, m: usize) -> f64 {
        self.params.sigma2_ap.get(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn params() -> ScenarioParams {
        ScenarioParams::default()
    }

    #[test]
    fn ap_ring_is_equally_spaced() {
        let aps = ap_positions(4, 200.0);
        let expect = [(200.0, 0.0), (0.0, 200.0), (-200.0, 0.0), (0.0, -200.0)];
        for (p, (x, y)) in aps.iter().zip(expect) {
            assert!((p.x - x).abs() < 1e-9 && (p.y - y).abs() < 1e-9, "{p:?}");
            assert!((p.radius() - 200.0).abs() < 1e-9);
        }
    }

    #[test]
    fn topology_is_deterministic_and_inside_cell() {
        let p = params();
        let a = place_topology(&p, 11);
        let b = place_topology(&p, 11);
        assert_eq!(a, b);
        assert!(a.devices.iter().all(|d| d.radius() <= p.cell_radius_m));
        assert_ne!(a, place_topology(&p, 12));
    }

    #[test]
    fn uniform_disk_second_moment() {
        let mut rng = stream(3, &[99]);
        let n = 10_000;
        let r = 500.0;
        let mean_sq: f64 = (0..n).map(|_| uniform_disk(&mut rng, r).radius().powi(2)).sum::<f64>() / n as f64;
        let expect = r * r / 2.0;
        assert!((mean_sq - expect).abs() / expect < 0.02, "{mean_sq}");
    }

    #[test]
    fn pathloss_values() {
        assert!((pathloss_db(1.0).unwrap() - 30.6).abs() < 1e-12);
        assert!((pathloss_db(100.0).unwrap() - 105.8).abs() < 1e-9);
        assert!((pathloss_db(500.0).unwrap() - 132.08).abs() < 0.01);
        assert!(matches!(pathloss_db(0.0), Err(Error::Domain(_))));
        assert!(pathloss_db(-3.0).is_err());
    }

    #[test]
    fn fading_power_at_one_meter() {
        let mut rng = stream(5, &[1]);
        let amp = link_amplitude(1.0, 0.0);
        let n = 100_000;
        let mut power = 0.0;
        let mut re_sum = 0.0;
        let mut re_sq = 0.0;
        for _ in 0..n {
            let h = draw_fading(&mut rng, 1, amp)[0];
            power += h.norm_sqr();
            let g = h / amp;
            re_sum += g.re;
            re_sq += g.re * g.re;
        }
        let expect = 10f64.powf(-3.06);
        assert!((power / n as f64 - expect).abs() / expect < 0.02);
        let mean = re_sum / n as f64;
        let var = re_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.015);
        assert!((var - 0.5).abs() / 0.5 < 0.03);
    }

    #[test]
    fn channels_deterministic_and_sized() {
        let p = params();
        let topo = place_topology(&p, 4);
        let cov = build_coverage(&p, &topo);
        let a = draw_channels(&p, &topo, &cov, 4);
        assert_eq!(a, draw_channels(&p, &topo, &cov, 4));
        for k in 0..p.k {
            assert_eq!(a.h5g[k].len(), p.q);
            assert!(a.h5g[k].iter().all(|h| h.len() == p.n_5g));
            assert_eq!(a.hwf[k].is_some(), cov.roles[k].is_type_one());
            if let Some(h) = &a.hwf[k] {
                assert!(h.iter().all(|v| v.len() == p.n_wf));
            }
        }
    }

    #[test]
    fn frozen_channels_repeat_over_slots() {
        let p = ScenarioParams { freeze_channels: true, ..params() };
        let topo = place_topology(&p, 4);
        let cov = build_coverage(&p, &topo);
        let ch = draw_channels(&p, &topo, &cov, 4);
        assert!(ch.h5g[0].iter().all(|h| *h == ch.h5g[0][0]));
    }

    fn line_params() -> ScenarioParams {
        ScenarioParams {
            k: 3,
            m: 1,
            n: 3,
            wifi_cover_radius_m: 10.0,
            d2d_link_radius_m: 100.0,
            ..params()
        }
    }

    #[test]
    fn device_at_ap_is_type_one() {
        let p = ScenarioParams { k: 1, m: 1, n: 1, ..params() };
        let topo = Topology {
            gnb: Point::new(0.0, 0.0),
            aps: ap_positions(1, 200.0),
            devices: vec![Point::new(200.0, 0.0)],
        };
        let cov = build_coverage(&p, &topo);
        assert_eq!(cov.type_one[0], vec![0]);
        assert!(cov.type_two.is_empty());
    }

    #[test]
    fn collinear_chain_gives_two_hops() {
        let p = line_params();
        let topo = Topology {
            gnb: Point::new(0.0, 0.0),
            aps: ap_positions(1, 200.0),
            devices: vec![Point::new(200.0, 0.0), Point::new(120.0, 0.0), Point::new(40.0, 0.0)],
        };
        let cov = build_coverage(&p, &topo);
        assert_eq!(cov.type_one[0], vec![0]);
        assert_eq!(cov.path_len[1], Some(1));
        assert_eq!(cov.path_len[2], Some(2));
        assert_eq!(cov.closest_type_one[2], Some(0));
        assert_eq!(cov.relays[0], vec![0]);
        assert_eq!(cov.clients[0], vec![1, 2]);
        assert_eq!(cov.roles[2], Role::TypeII { relay: 0, hops: 2 });
    }

    #[test]
    fn isolated_device_is_forced_to_5g() {
        let p = line_params();
        let topo = Topology {
            gnb: Point::new(0.0, 0.0),
            aps: ap_positions(1, 200.0),
            devices: vec![Point::new(200.0, 0.0), Point::new(-300.0, 0.0), Point::new(40.0, 0.0)],
        };
        let cov = build_coverage(&p, &topo);
        assert!(cov.is_forced_5g(1));
        assert!(cov.is_forced_5g(2));
        assert_eq!(cov.closest_type_one[1], None);
    }

    #[test]
    fn equidistant_device_goes_to_lower_ap() {
        let p = ScenarioParams {
            k: 1,
            m: 2,
            n: 1,
            wifi_cover_radius_m: 300.0,
            ..params()
        };
        let topo = Topology {
            gnb: Point::new(0.0, 0.0),
            aps: vec![Point::new(100.0, 0.0), Point::new(-100.0, 0.0)],
            devices: vec![Point::new(0.0, 50.0)],
        };
        let cov = build_coverage(&p, &topo);
        assert_eq!(cov.type_one[0], vec![0]);
        assert!(cov.type_one[1].is_empty());
    }

    #[test]
    fn ivas_from_forced_raw() {
        let raw = vec![vec![vec![Complex64::new(1.0, 1.0)]]];
        let iv = IvaMatrix::from_raw(&raw);
        assert_eq!(iv.x[0][0], Complex64::new(1.0, 1.0));
        assert_eq!(iv.xbar[0], Complex64::new(1.0, 1.0));
    }

    #[test]
    fn iva_sum_is_exact() {
        let p = params();
        let iv = generate_ivas(&p, 9);
        for q in 0..p.q {
            let s: Complex64 = iv.x.iter().map(|r| r[q]).sum();
            assert_eq!(s, iv.xbar[q]);
        }
    }

    #[test]
    fn iva_mean_with_many_files() {
        // 250 files per device: E[Re x] = 500.
        let p = ScenarioParams { k: 1, n: 250, q: 1, ..params() };
        let trials = 10_000;
        let mean: f64 = (0..trials).map(|s| generate_ivas(&p, s).x[0][0].re).sum::<f64>() / trials as f64;
        assert!((mean - 500.0).abs() / 500.0 < 0.01, "{mean}");
    }

    #[test]
    fn map_energy_values_and_scaling() {
        let base = ScenarioParams {
            k: 1,
            n: 10,
            q: 10,
            d: 100.0,
            t_map: 0.01,
            ..params()
        };
        assert!((map_energy(&base, 0) - 1e-3).abs() < 1e-15);
        let zero = ScenarioParams { capacitance: 0.0.into(), ..base.clone() };
        assert_eq!(map_energy(&zero, 0), 0.0);
        let doubled = ScenarioParams { q: 20, ..base.clone() };
        assert!((map_energy(&doubled, 0) / map_energy(&base, 0) - 8.0).abs() < 1e-12);
        let half_time = ScenarioParams { t_map: 0.005, ..base.clone() };
        assert!((map_energy(&half_time, 0) / map_energy(&base, 0) - 4.0).abs() < 1e-12);
    }
}
