//! Gaussian beam, ponderomotive potential and the semiclassical (WKB)
//! channel wavefunction of an electron crossing the focus along `x`.
//!
//! Geometry: the laser propagates along `z`, is polarised along `x`, and the
//! electron travels along `x` through the beam centre (`y = 0`).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::units::{self, ELECTRON_MASS as M, HBAR};

/// `4 ln 2`, the exponent scale of the intensity profile written with a FWHM-style width.
const FOUR_LN2: f64 = 4.0 * std::f64::consts::LN_2;

/// Minimum ratio of beam width to electron de Broglie wavelength for the
/// slowly-varying-envelope treatment.
pub const SLOW_ENVELOPE_RATIO: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig {
    /// Wavelength, m.
    pub wavelength: f64,
    /// Beam width σ, m.
    pub beam_width: f64,
    /// Peak ponderomotive energy, eV.
    pub peak_ponderomotive_ev: f64,
}

impl LaserConfig {
    pub fn new(wavelength: f64, beam_width: f64, peak_ponderomotive_ev: f64) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid("wavelength", format!("must be positive, got {wavelength}")));
        }
        if !(beam_width > 0.0 && beam_width.is_finite()) {
            return Err(Error::invalid("beam_width", format!("must be positive, got {beam_width}")));
        }
        if !(peak_ponderomotive_ev >= 0.0 && peak_ponderomotive_ev.is_finite()) {
            return Err(Error::invalid(
                "peak_ponderomotive",
                format!("must be non-negative, got {peak_ponderomotive_ev}"),
            ));
        }
        Ok(Self {
            wavelength,
            beam_width,
            peak_ponderomotive_ev,
        })
    }

    /// 1.064 µm, σ = 6 µm.
    pub fn reference(peak_ponderomotive_ev: f64) -> Self {
        Self::new(1.064e-6, 6e-6, peak_ponderomotive_ev).expect("reference laser is valid")
    }

    /// Same beam with the peak ponderomotive energy set to `u_p · ħω`.
    pub fn with_normalized_ponderomotive(&self, u_p: f64) -> Result<Self> {
        Self::new(self.wavelength, self.beam_width, u_p * self.photon_energy_ev())
    }

    pub fn photon_energy_ev(&self) -> f64 {
        units::joule_to_ev(self.photon_energy())
    }

    /// ħω in J.
    pub fn photon_energy(&self) -> f64 {
        units::PLANCK * units::SPEED_OF_LIGHT / self.wavelength
    }

    /// ħk in kg·m/s.
    pub fn photon_momentum(&self) -> f64 {
        units::PLANCK / self.wavelength
    }

    /// Peak ponderomotive energy in J.
    pub fn peak_ponderomotive(&self) -> f64 {
        units::ev_to_joule(self.peak_ponderomotive_ev)
    }

    /// `U_p / ħω`.
    pub fn normalized_ponderomotive(&self) -> f64 {
        self.peak_ponderomotive() / self.photon_energy()
    }

    /// Recoil energy `(ħk)²/2m`, J.
    pub fn recoil_energy(&self) -> f64 {
        let p = self.photon_momentum();
        p * p / (2.0 * M)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronConfig {
    /// Initial kinetic energy, eV.
    pub initial_energy_ev: f64,
    /// Transverse momentum along y, kg·m/s.
    #[serde(default)]
    pub transverse_momentum_y: f64,
}

impl ElectronConfig {
    pub fn new(initial_energy_ev: f64) -> Result<Self> {
        if !(initial_energy_ev > 0.0 && initial_energy_ev.is_finite()) {
            return Err(Error::invalid(
                "initial_energy",
                format!("must be positive, got {initial_energy_ev}"),
            ));
        }
        Ok(Self {
            initial_energy_ev,
            transverse_momentum_y: 0.0,
        })
    }

    pub fn initial_energy(&self) -> f64 {
        units::ev_to_joule(self.initial_energy_ev)
    }

    /// `P_xi = √(2 m E_0)`.
    pub fn momentum_x(&self) -> f64 {
        (2.0 * M * self.initial_energy()).sqrt()
    }

    pub fn velocity(&self) -> f64 {
        self.momentum_x() / M
    }

    pub fn de_broglie_wavelength(&self) -> f64 {
        units::PLANCK / self.momentum_x()
    }

    /// Beam crossing time `2σ / v_0`.
    pub fn transit_time(&self, laser: &LaserConfig) -> f64 {
        2.0 * laser.beam_width / self.velocity()
    }

    /// `ħ / T` for the crossing time above, J.
    pub fn energy_uncertainty(&self, laser: &LaserConfig) -> f64 {
        HBAR / self.transit_time(laser)
    }

    pub fn transverse_energy(&self) -> f64 {
        self.transverse_momentum_y * self.transverse_momentum_y / (2.0 * M)
    }
}

/// Rejects beams that are not wide compared with the electron wavelength.
pub fn check_slow_envelope(laser: &LaserConfig, electron: &ElectronConfig) -> Result<()> {
    let ratio = laser.beam_width / electron.de_broglie_wavelength();
    if ratio < SLOW_ENVELOPE_RATIO {
        return Err(Error::invalid(
            "beam_width",
            format!("σ/λ_dB = {ratio:.1} is below {SLOW_ENVELOPE_RATIO}; the envelope is not slowly varying"),
        ));
    }
    Ok(())
}

/// Field amplitude profile `exp(−4 ln2 (x² + y²)/σ²)`.
#[inline]
pub fn profile(x: f64, y: f64, laser: &LaserConfig) -> f64 {
    let s = laser.beam_width;
    (-FOUR_LN2 * (x * x + y * y) / (s * s)).exp()
}

/// Local ponderomotive energy on the axis `y = 0`, eV.
pub fn ponderomotive_potential(x: f64, laser: &LaserConfig) -> f64 {
    let f = profile(x, 0.0, laser);
    laser.peak_ponderomotive_ev * f * f
}

/// Local ponderomotive energy on the axis, J.
#[inline]
pub(crate) fn ponderomotive_energy(x: f64, laser: &LaserConfig) -> f64 {
    let s = laser.beam_width;
    laser.peak_ponderomotive() * (-2.0 * FOUR_LN2 * x * x / (s * s)).exp()
}

/// Complex continuation of `√(2 m K)`: real for `K ≥ 0`, `+i√(2m|K|)` otherwise.
#[inline]
pub fn momentum_from_kinetic(kinetic: f64) -> C64 {
    if kinetic >= 0.0 {
        C64::new((2.0 * M * kinetic).sqrt(), 0.0)
    } else {
        C64::new(0.0, (-2.0 * M * kinetic).sqrt())
    }
}

/// x-momentum inside the beam for a channel whose available x-kinetic energy
/// far from the beam is `channel_energy_x` (J).
pub fn local_momentum(x: f64, channel_energy_x: f64, laser: &LaserConfig) -> C64 {
    momentum_from_kinetic(channel_energy_x - ponderomotive_energy(x, laser))
}

/// Bessel arguments `η(x)` (complex) and `u_p(x) = U_p(x)/ħω` at `x`.
pub fn bessel_arguments(x: f64, channel_energy_x: f64, laser: &LaserConfig) -> (C64, f64) {
    let local = ponderomotive_energy(x, laser);
    let p = momentum_from_kinetic(channel_energy_x - local);
    bessel_arguments_from(local, p, laser)
}

#[inline]
pub(crate) fn bessel_arguments_from(local_up: f64, momentum: C64, laser: &LaserConfig) -> (C64, f64) {
    let hw = laser.photon_energy();
    let eta = momentum * (2.0f64.sqrt() * (2.0 * M * local_up).sqrt() / (M * hw));
    (eta, local_up / hw)
}

/// Diagnostics of the photon-mode squeezing transformation, parametrised by
/// `r = 2 U_p(x) / (n ħω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezeDiagnostics {
    pub chi: f64,
    /// Multiplies the electron x-momentum; units 1/(kg·m/s).
    pub delta_coefficient: f64,
    /// J.
    pub c: f64,
}

pub fn squeeze_parameters(ratio: f64, laser: &LaserConfig) -> Result<SqueezeDiagnostics> {
    if !(ratio >= 0.0) {
        return Err(Error::invalid("ratio", format!("must be non-negative, got {ratio}")));
    }
    let hw = laser.photon_energy();
    // per-photon coupling (ħ²/m)(e²g²/c²) f² = r ħω
    let coupling = ratio * hw;
    let chi = if ratio.is_infinite() {
        f64::NEG_INFINITY
    } else {
        // ½ artanh(−r/(1+r)) = −¼ ln(1 + 2r)
        -0.25 * (2.0 * ratio).ln_1p()
    };
    let c2 = (2.0 * chi).cosh();
    let s2 = (2.0 * chi).sinh();
    let c = 0.5 * hw * c2 + 0.5 * coupling * (s2 + c2);
    // ħ e g f / (m c) = √(coupling / m)
    let delta_coefficient = if ratio == 0.0 {
        0.0
    } else {
        -(coupling / M).sqrt() * (chi.cosh() + chi.sinh()) / (2.0 * c)
    };
    Ok(SqueezeDiagnostics {
        chi,
        delta_coefficient,
        c,
    })
}

/// How the photon recoil term `P_z²/2m` with `P_z = (j − u_p) ħk` enters the
/// x-kinetic energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoilConvention {
    /// `u_p` taken at the beam centre; a constant shift of the channel energy.
    #[default]
    Peak,
    /// `u_p(x)` evaluated locally.
    Local,
}

/// x-kinetic energy model of one photon channel.
#[derive(Debug, Clone, Copy)]
pub struct ChannelEnergy {
    /// Available x-kinetic energy far from the beam with the peak-recoil
    /// convention already applied, J.
    pub channel_energy_x: f64,
    pub recoil: RecoilConvention,
    /// Photons absorbed entering the field; used only by the local recoil convention.
    pub absorbed: i32,
}

impl ChannelEnergy {
    pub fn simple(channel_energy_x: f64) -> Self {
        Self {
            channel_energy_x,
            recoil: RecoilConvention::Peak,
            absorbed: 0,
        }
    }

    /// x-kinetic energy at `x` given the local ponderomotive energy there.
    #[inline]
    pub fn kinetic(&self, local_up: f64, laser: &LaserConfig) -> f64 {
        let base = self.channel_energy_x - local_up;
        match self.recoil {
            RecoilConvention::Peak => base,
            RecoilConvention::Local => {
                let hw = laser.photon_energy();
                let r = laser.recoil_energy();
                let j = self.absorbed as f64;
                let peak = j - laser.normalized_ponderomotive();
                let local = j - local_up / hw;
                base + (peak * peak - local * local) * r
            }
        }
    }
}

/// Momentum and ponderomotive data at one point.
#[derive(Debug, Clone, Copy)]
pub struct LocalState {
    pub momentum: C64,
    pub ponderomotive: f64,
}

/// WKB wavefunction of one channel on `[x_min, x_max]`:
///
/// `X̃(x) = √(P_∞/P(x)) · exp(i S(x))`, `S(x) = Re P_∞ x_min/ħ + ∫_{x_min}^x P dx'/ħ`,
///
/// which is the incident plane wave `e^{iP_∞ x/ħ}` left of the beam (unit
/// incident flux once divided by `√P_∞`). Under the barrier `P = +i|P|` and the
/// wave decays. The `1/√P` prefactor is regularised by clamping `|P|` from
/// below at `clamp_floor`.
#[derive(Debug, Clone)]
pub struct WkbWave {
    laser: LaserConfig,
    energy: ChannelEnergy,
    x_min: f64,
    x_max: f64,
    clamp_floor: f64,
    asymptotic: C64,
    turning_points: Vec<f64>,
    knots: Vec<f64>,
    knot_phase: Vec<C64>,
}

impl WkbWave {
    pub fn new(laser: &LaserConfig, energy: ChannelEnergy, x_min: f64, x_max: f64, clamp_floor: f64) -> Self {
        assert!(x_min < x_max);
        let asymptotic = momentum_from_kinetic(energy.kinetic(0.0, laser));
        let mut wave = Self {
            laser: *laser,
            energy,
            x_min,
            x_max,
            clamp_floor,
            asymptotic,
            turning_points: Vec::new(),
            knots: Vec::new(),
            knot_phase: Vec::new(),
        };
        wave.turning_points = wave.find_turning_points();
        wave.build_knots();
        wave
    }

    pub fn laser(&self) -> &LaserConfig {
        &self.laser
    }

    pub fn energy(&self) -> &ChannelEnergy {
        &self.energy
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    /// Momentum far from the beam (`+i|P|` for a closed channel).
    pub fn asymptotic_momentum(&self) -> C64 {
        self.asymptotic
    }

    pub fn is_open(&self) -> bool {
        self.asymptotic.im == 0.0 && self.asymptotic.re > 0.0
    }

    pub fn turning_points(&self) -> &[f64] {
        &self.turning_points
    }

    #[inline]
    pub fn kinetic(&self, x: f64) -> f64 {
        self.energy.kinetic(ponderomotive_energy(x, &self.laser), &self.laser)
    }

    #[inline]
    pub fn state(&self, x: f64) -> LocalState {
        let up = ponderomotive_energy(x, &self.laser);
        LocalState {
            momentum: momentum_from_kinetic(self.energy.kinetic(up, &self.laser)),
            ponderomotive: up,
        }
    }

    #[inline]
    pub fn momentum(&self, x: f64) -> C64 {
        momentum_from_kinetic(self.kinetic(x))
    }

    fn find_turning_points(&self) -> Vec<f64> {
        // sign changes of the kinetic energy on a fine scan, refined by bisection
        let n = 4096;
        let h = (self.x_max - self.x_min) / n as f64;
        let mut points = Vec::new();
        let mut prev_x = self.x_min;
        let mut prev = self.kinetic(prev_x);
        for i in 1..=n {
            let x = self.x_min + h * i as f64;
            let k = self.kinetic(x);
            if (prev >= 0.0) != (k >= 0.0) {
                let (mut a, mut b) = (prev_x, x);
                let left_positive = prev >= 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if (self.kinetic(mid) >= 0.0) == left_positive {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                points.push(0.5 * (a + b));
            }
            prev_x = x;
            prev = k;
        }
        points
    }

    fn build_knots(&mut self) {
        let count = 256usize;
        let h = (self.x_max - self.x_min) / count as f64;
        let mut knots: Vec<f64> = (0..=count).map(|i| self.x_min + h * i as f64).collect();
        *knots.last_mut().unwrap() = self.x_max;
        for &t in &self.turning_points {
            knots.push(t);
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-18);
        let mut phase = Vec::with_capacity(knots.len());
        let mut acc = C64::new(self.asymptotic.re * self.x_min / HBAR, 0.0);
        phase.push(acc);
        for w in knots.windows(2) {
            acc += self.integrate_momentum(w[0], w[1]) / HBAR;
            phase.push(acc);
        }
        self.knots = knots;
        self.knot_phase = phase;
    }

    fn is_turning_point(&self, x: f64) -> bool {
        self.turning_points.iter().any(|&t| (t - x).abs() <= 1e-15 * self.laser.beam_width)
    }

    /// `∫_a^b P dx` where a turning point may sit at either end (but not inside).
    fn integrate_momentum(&self, a: f64, b: f64) -> C64 {
        if a == b {
            return C64::new(0.0, 0.0);
        }
        let left = self.is_turning_point(a);
        let right = self.is_turning_point(b);
        if left && right {
            let mid = 0.5 * (a + b);
            if (b - a).abs() <= 4e-15 * self.laser.beam_width {
                // both ends at the same turning point
                return self.momentum(mid) * (b - a);
            }
            return self.integrate_momentum(a, mid) + self.integrate_momentum(mid, b);
        }
        let rule = gauss_legendre(24);
        let len = b - a;
        let mut sum = C64::new(0.0, 0.0);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let u = 0.5 * (t + 1.0);
            // square-root endpoint singularity removed by x = end ± len·u²
            let (x, jac) = if left {
                (a + len * u * u, 2.0 * len * u)
            } else if right {
                (b - len * u * u, 2.0 * len * u)
            } else {
                (a + len * u, len)
            };
            sum += self.momentum(x) * (0.5 * w * jac);
        }
        sum
    }

    /// Phase exponent `S(x)` (complex; the imaginary part is the accumulated attenuation).
    pub fn phase(&self, x: f64) -> C64 {
        let x = x.clamp(self.x_min, self.x_max);
        let idx = match self.knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.knot_phase[i],
            Err(i) => i, // knots[i-1] < x < knots[i]
        };
        let (lo, hi) = (idx - 1, idx);
        let use_right = if self.is_turning_point(self.knots[hi]) && !self.is_turning_point(self.knots[lo]) {
            true
        } else if self.is_turning_point(self.knots[lo]) && !self.is_turning_point(self.knots[hi]) {
            false
        } else {
            x - self.knots[lo] > self.knots[hi] - x
        };
        if use_right {
            self.knot_phase[hi] - self.integrate_momentum(x, self.knots[hi]) / HBAR
        } else {
            self.knot_phase[lo] + self.integrate_momentum(self.knots[lo], x) / HBAR
        }
    }

    /// Distance from turning point `t` towards `side` (±1) at which `|P|` climbs back to the clamp floor.
    pub fn clamp_radius(&self, t: f64, side: f64) -> f64 {
        if self.clamp_floor <= 0.0 {
            return 0.0;
        }
        let size = |d: f64| self.momentum(t + side * d).norm();
        let limit = if side > 0.0 { self.x_max - t } else { t - self.x_min };
        let mut hi = 1e-12 * self.laser.beam_width;
        while size(hi) < self.clamp_floor {
            hi *= 2.0;
            if hi >= limit {
                return 0.0;
            }
        }
        let mut lo = 0.0;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return hi;
            }
            if size(mid) < self.clamp_floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// Prefactor `√(P_∞/P(x))` with the clamp applied; the flag reports whether it was.
    pub fn prefactor(&self, momentum: C64) -> (C64, bool) {
        let size = momentum.norm();
        let (p, clamped) = if size < self.clamp_floor {
            if size == 0.0 {
                (C64::new(self.clamp_floor, 0.0), true)
            } else {
                (momentum * (self.clamp_floor / size), true)
            }
        } else {
            (momentum, false)
        };
        let reference = if self.is_open() {
            self.asymptotic
        } else {
            C64::new(self.asymptotic.norm(), 0.0)
        };
        ((reference / p).sqrt(), clamped)
    }

    /// `X̃(x)` together with the regularisation flag.
    pub fn value(&self, x: f64) -> (C64, bool) {
        let (pre, clamped) = self.prefactor(self.momentum(x));
        (pre * (C64::i() * self.phase(x)).exp(), clamped)
    }

    /// Complex transmission amplitude: `X̃(x) e^{−iP_∞x/ħ}` right of the beam.
    pub fn transmission(&self) -> C64 {
        if !self.is_open() {
            return C64::new(0.0, 0.0);
        }
        let (pre, _) = self.prefactor(self.momentum(self.x_max));
        let s = self.phase(self.x_max) - self.asymptotic.re * self.x_max / HBAR;
        pre * (C64::i() * s).exp()
    }

    /// `ln |T|` with `T = |transmission|²`, without underflow.
    pub fn log_transmission(&self) -> f64 {
        -2.0 * self.phase(self.x_max).im
    }
}

/// Single-point evaluation: builds the channel wave and evaluates it at `x`.
pub fn wkb_wavefunction(
    x: f64,
    channel_energy_x: f64,
    laser: &LaserConfig,
    x_min: f64,
    x_max: f64,
    clamp_floor: f64,
) -> (C64, bool) {
    WkbWave::new(laser, ChannelEnergy::simple(channel_energy_x), x_min, x_max, clamp_floor).value(x)
}
