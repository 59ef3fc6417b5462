//! Photon-channel bookkeeping and the Bessel-product factors of the
//! Gaussian-mode Volkov state.
//!
//! Only photon-number differences are represented: `j` photons absorbed on
//! entering the field, `j_pp` absorbed in total, `j' = j − j_pp`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j_sequence, minus_i_pow};
use crate::field::{self, ElectronConfig, LaserConfig};
use crate::units::{joule_to_ev, ELECTRON_MASS as M};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub j: i32,
    pub j_pp: i32,
    pub j2: i32,
    pub j2_prime: i32,
}

impl Channel {
    pub fn new(j: i32, j_pp: i32, j2: i32, j2_prime: i32) -> Self {
        Self { j, j_pp, j2, j2_prime }
    }

    pub fn j_prime(&self) -> i32 {
        self.j - self.j_pp
    }

    pub fn j1(&self) -> i32 {
        self.j - 2 * self.j2
    }

    pub fn j1_prime(&self) -> i32 {
        self.j_prime() - 2 * self.j2_prime
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelKinematics {
    /// Final z-momentum `j_pp ħk`, kg·m/s.
    pub p_zf: f64,
    /// z-momentum inside the beam `(j − u_p) ħk`, kg·m/s.
    pub p_z_inside: f64,
    /// Final x-momentum, kg·m/s (0 for a closed channel).
    pub p_xf: f64,
    pub final_energy_ev: f64,
    pub open: bool,
}

/// Final-state energy `E_0 + j_pp ħω − P_zf²/2m`, J.
pub fn final_energy(j_pp: i32, electron: &ElectronConfig, laser: &LaserConfig) -> f64 {
    let p_zf = j_pp as f64 * laser.photon_momentum();
    electron.initial_energy() + j_pp as f64 * laser.photon_energy() - p_zf * p_zf / (2.0 * M)
}

pub fn channel_kinematics(ch: &Channel, electron: &ElectronConfig, laser: &LaserConfig) -> ChannelKinematics {
    let hk = laser.photon_momentum();
    let energy = final_energy(ch.j_pp, electron, laser);
    let open = energy >= 0.0;
    ChannelKinematics {
        p_zf: ch.j_pp as f64 * hk,
        p_z_inside: (ch.j as f64 - laser.normalized_ponderomotive()) * hk,
        p_xf: if open { (2.0 * M * energy).sqrt() } else { 0.0 },
        final_energy_ev: joule_to_ev(energy),
        open,
    }
}

/// Available x-kinetic energy far from the beam for the intermediate channel
/// with `j` photons absorbed, off the energy shell by `offset` (J).
pub fn channel_energy_x(j: i32, offset: f64, electron: &ElectronConfig, laser: &LaserConfig) -> f64 {
    let p_z = (j as f64 - laser.normalized_ponderomotive()) * laser.photon_momentum();
    electron.initial_energy() + j as f64 * laser.photon_energy() + offset - p_z * p_z / (2.0 * M)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationPolicy {
    /// Extra Bessel orders beyond `ceil(η_max)` for `j1`.
    pub margin_1: u32,
    /// Extra orders beyond `ceil(u_p/2)` for `j2`.
    pub margin_2: u32,
    /// Reported net orders run over `|j_pp| ≤ ceil(u_p) + report_margin`.
    pub report_margin: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            margin_1: 10,
            margin_2: 10,
            report_margin: 6,
        }
    }
}

impl TruncationPolicy {
    pub fn doubled(&self) -> Self {
        Self {
            margin_1: 2 * self.margin_1,
            margin_2: 2 * self.margin_2,
            report_margin: self.report_margin,
        }
    }

    /// Resolves the index ranges for an operating point.
    pub fn bounds(&self, electron: &ElectronConfig, laser: &LaserConfig) -> TruncationBounds {
        let u_p = laser.normalized_ponderomotive();
        let max_j2 = if u_p == 0.0 { 0 } else { (u_p / 2.0).ceil() as i32 + self.margin_2 as i32 };
        let (max_j1, eta_max) = if u_p == 0.0 {
            (0, 0.0)
        } else {
            // the most energetic channel sets η_max, which in turn sets the channel range
            let mut max_j1 = self.margin_1 as i32;
            let mut eta = 0.0;
            for _ in 0..100 {
                let top = max_j1 + 2 * max_j2;
                eta = max_eta(channel_energy_x(top, 0.0, electron, laser), laser);
                let next = eta.ceil() as i32 + self.margin_1 as i32;
                if next <= max_j1 {
                    break;
                }
                max_j1 = next;
            }
            (max_j1, eta)
        };
        let reach = if u_p == 0.0 { 0 } else { u_p.ceil() as i32 + self.report_margin as i32 };
        TruncationBounds {
            max_j1,
            max_j2,
            max_j: max_j1 + 2 * max_j2,
            max_report: reach,
            eta_max,
        }
    }
}

/// `max_x |η(x)|` for a channel of x-energy `energy` (J).
fn max_eta(energy: f64, laser: &LaserConfig) -> f64 {
    let up = laser.peak_ponderomotive();
    let g = |u: f64| u * (energy - u).abs();
    let mut best = g(up);
    if energy > 0.0 {
        best = best.max(g((energy / 2.0).min(up)));
    }
    2.0 * 2f64.sqrt() * best.sqrt() / laser.photon_energy()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationBounds {
    pub max_j1: i32,
    pub max_j2: i32,
    /// `|j| ≤ max_j1 + 2 max_j2`.
    pub max_j: i32,
    /// Net orders reported: `|j_pp| ≤ max_report`.
    pub max_report: i32,
    #[serde(skip)]
    pub eta_max: f64,
}

impl TruncationBounds {
    pub fn j_range(&self) -> std::ops::RangeInclusive<i32> {
        -self.max_j..=self.max_j
    }

    pub fn report_range(&self) -> std::ops::RangeInclusive<i32> {
        -self.max_report..=self.max_report
    }

    /// `j2` values with `|j2| ≤ max_j2` and `|n − 2 j2| ≤ max_j1`.
    pub fn j2_range(&self, n: i32) -> std::ops::RangeInclusive<i32> {
        let lo = (n - self.max_j1 + 1).div_euclid(2).max(-self.max_j2);
        let hi = (n + self.max_j1).div_euclid(2).min(self.max_j2);
        lo..=hi
    }
}

/// Every retained index tuple; exit side limited to open reported orders.
pub fn enumerate_channels(electron: &ElectronConfig, laser: &LaserConfig, policy: &TruncationPolicy) -> Vec<Channel> {
    let b = policy.bounds(electron, laser);
    let mut out = Vec::new();
    for j_pp in b.report_range() {
        if final_energy(j_pp, electron, laser) < 0.0 {
            continue;
        }
        for j in b.j_range() {
            let jp = j - j_pp;
            if jp.abs() > b.max_j {
                continue;
            }
            for j2 in b.j2_range(j) {
                for j2p in b.j2_range(jp) {
                    out.push(Channel::new(j, j_pp, j2, j2p));
                }
            }
        }
    }
    out
}

/// `(−i)^{j1} J_{j1}(η(x)) J_{j2}(−u_p(x)/2)` on the entrance side of `ch`.
pub fn volkov_bessel_factor(ch: &Channel, x: f64, channel_energy_x: f64, laser: &LaserConfig) -> crate::Result<C64> {
    let (eta, u) = field::bessel_arguments(x, channel_energy_x, laser);
    let j1 = ch.j1();
    let a = crate::bessel::bessel_j(j1, eta)?;
    let b = crate::bessel::bessel_j(ch.j2, C64::new(-u / 2.0, 0.0))?;
    Ok(minus_i_pow(j1) * a * b)
}

/// Bessel values at one point, reused for every `B_n` there.
#[derive(Debug, Clone)]
pub struct BesselTable {
    max_j1: i32,
    max_j2: i32,
    /// `(−i)^k J_k(η)` for `k = −max_j1..=max_j1`.
    eta: Vec<C64>,
    /// `J_m(−u/2)` for `m = −max_j2..=max_j2`.
    up: Vec<f64>,
}

impl BesselTable {
    pub fn new(bounds: &TruncationBounds) -> Self {
        Self {
            max_j1: bounds.max_j1,
            max_j2: bounds.max_j2,
            eta: vec![C64::new(0.0, 0.0); 2 * bounds.max_j1 as usize + 1],
            up: vec![0.0; 2 * bounds.max_j2 as usize + 1],
        }
    }

    pub fn fill(&mut self, eta: C64, u_local: f64) {
        let n1 = self.max_j1 as usize;
        bessel_j_sequence(eta, &mut self.eta[n1..]);
        for k in 0..=n1 {
            let v = self.eta[n1 + k];
            self.eta[n1 + k] = minus_i_pow(k as i32) * v;
            // (−i)^{−k} J_{−k} = (−i)^{−k} (−1)^k J_k = i^k (−1)^k J_k = (−i)^k J_k
            self.eta[n1 - k] = self.eta[n1 + k];
        }
        let n2 = self.max_j2 as usize;
        let mut tmp = [C64::new(0.0, 0.0); 64];
        let mut heap;
        let pos: &mut [C64] = if n2 < 64 {
            &mut tmp[..=n2]
        } else {
            heap = vec![C64::new(0.0, 0.0); n2 + 1];
            &mut heap
        };
        // J_m(−u/2) = (−1)^m J_m(u/2), and J_{−m}(y) = (−1)^m J_m(y)
        bessel_j_sequence(C64::new(u_local / 2.0, 0.0), pos);
        for m in 0..=n2 {
            let odd = m % 2 == 1;
            let v = if odd { -pos[m].re } else { pos[m].re };
            self.up[n2 + m] = v;
            self.up[n2 - m] = if odd { -v } else { v };
        }
    }

    /// `B_n = Σ_{j2} (−i)^{n−2j2} J_{n−2j2}(η) J_{j2}(−u/2)` over the retained range.
    pub fn combined(&self, n: i32, bounds: &TruncationBounds) -> C64 {
        let mut sum = C64::new(0.0, 0.0);
        for j2 in bounds.j2_range(n) {
            let j1 = n - 2 * j2;
            sum += self.eta[(j1 + self.max_j1) as usize] * self.up[(j2 + self.max_j2) as usize];
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;

    fn fig2() -> (ElectronConfig, LaserConfig) {
        (ElectronConfig::new(0.54).unwrap(), LaserConfig::reference(2.9))
    }

    #[test]
    fn kinematics_examples() {
        let (e, l) = fig2();
        let k0 = channel_kinematics(&Channel::new(0, 0, 0, 0), &e, &l);
        assert_eq!(k0.p_zf, 0.0);
        assert_eq!(k0.p_xf, e.momentum_x());
        assert_eq!(k0.final_energy_ev, 0.54);
        let k1 = channel_kinematics(&Channel::new(1, 1, 0, 0), &e, &l);
        assert!((k1.final_energy_ev - 1.705).abs() < 1e-3);
        // 7.054e-25 to four digits
        assert!((k1.p_xf - 7.04e-25).abs() < 0.02e-25);
        let recoil = 0.54 + l.photon_energy_ev() - k1.final_energy_ev;
        assert!((recoil - 1.33e-6).abs() < 0.01e-6);
        let km = channel_kinematics(&Channel::new(0, -1, 0, 0), &e, &l);
        assert!(!km.open && km.final_energy_ev < 0.0);
    }

    #[test]
    fn energy_conservation_identity() {
        let (e, l) = fig2();
        for j_pp in -3..12 {
            let k = channel_kinematics(&Channel::new(j_pp, j_pp, 0, 0), &e, &l);
            let back = crate::units::ev_to_joule(k.final_energy_ev) + k.p_zf * k.p_zf / (2.0 * M) - j_pp as f64 * l.photon_energy();
            assert!((back - e.initial_energy()).abs() < 1e-15 * e.initial_energy() * (1 + j_pp.abs()) as f64);
        }
    }

    #[test]
    fn zero_field_keeps_single_channel() {
        let e = ElectronConfig::new(0.54).unwrap();
        let l = LaserConfig::reference(0.0);
        let ch = enumerate_channels(&e, &l, &TruncationPolicy::default());
        assert_eq!(ch, vec![Channel::new(0, 0, 0, 0)]);
    }

    #[test]
    fn j2_cutoff_arithmetic() {
        let e = ElectronConfig::new(0.54).unwrap();
        let l = LaserConfig::reference(0.0).with_normalized_ponderomotive(2.0).unwrap();
        let b = TruncationPolicy::default().bounds(&e, &l);
        assert_eq!(b.max_j2, 11);
        for n in -30..30 {
            for j2 in b.j2_range(n) {
                assert!(j2.abs() <= b.max_j2 && (n - 2 * j2).abs() <= b.max_j1);
            }
            // nothing admissible left out
            let count = (-b.max_j2..=b.max_j2).filter(|j2| (n - 2 * j2).abs() <= b.max_j1).count();
            assert_eq!(count, b.j2_range(n).count());
        }
    }

    #[test]
    fn factor_far_from_beam() {
        let (_, l) = fig2();
        let energy = 1e-19;
        assert_eq!(volkov_bessel_factor(&Channel::new(0, 0, 0, 0), 1.0, energy, &l).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(volkov_bessel_factor(&Channel::new(2, 0, 1, 0), 1.0, energy, &l).unwrap(), C64::new(0.0, 0.0));
        let f = volkov_bessel_factor(&Channel::new(0, 0, 0, 0), 1e-6, 1e-18, &l).unwrap();
        let (eta, u) = field::bessel_arguments(1e-6, 1e-18, &l);
        let expected = bessel_j(0, eta).unwrap() * bessel_j(0, C64::new(-u / 2.0, 0.0)).unwrap();
        assert!(f.im.abs() < 1e-15 && (f - expected).norm() < 1e-14);
    }

    #[test]
    fn neumann_sum_at_eta() {
        let (e, l) = fig2();
        let b = TruncationPolicy::default().bounds(&e, &l);
        let mut t = BesselTable::new(&b);
        t.fill(C64::new(3.7, 0.0), 0.0);
        let s: f64 = t.eta.iter().map(|v| v.norm_sqr()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn combined_matches_generating_function() {
        // B_n are the Fourier coefficients of exp(−iη cosθ − i(u/2) sin 2θ)
        let (e, l) = fig2();
        let b = TruncationPolicy::default().bounds(&e, &l);
        let mut t = BesselTable::new(&b);
        let eta = C64::new(4.2, 1.3);
        let u = 2.489;
        t.fill(eta, u);
        let n_theta = 512;
        for n in -8..=8 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n_theta {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64;
                let g = (C64::new(0.0, -1.0) * (eta * th.cos() + u / 2.0 * (2.0 * th).sin())).exp();
                acc += g * C64::from_polar(1.0, -(n as f64) * th);
            }
            acc /= n_theta as f64;
            let got = t.combined(n, &b);
            assert!((got - acc).norm() < 1e-12, "n={n} {got} vs {acc}");
        }
    }

    #[test]
    fn eta_bound_covers_grid() {
        let (e, l) = fig2();
        let b = TruncationPolicy::default().bounds(&e, &l);
        let energy = channel_energy_x(b.max_j, 0.0, &e, &l);
        let s = l.beam_width;
        let mut seen = 0.0f64;
        for i in 0..2001 {
            let x = -3.0 * s + 6.0 * s * i as f64 / 2000.0;
            seen = seen.max(field::bessel_arguments(x, energy, &l).0.norm());
        }
        assert!(seen <= b.eta_max * (1.0 + 1e-12));
        assert!(seen > 0.99 * b.eta_max);
        assert!(b.max_j1 >= b.eta_max.ceil() as i32 + 10);
    }
}
