//! Reference calculations without photon exchange: transmission through the
//! static barrier `U_p f²(x)` (exact and WKB) and classical ponderomotive
//! trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ponderomotive_energy, ElectronConfig, LaserConfig};
use crate::quadrature::{oscillatory_integral, QuadratureGrid};
use crate::units::{ev_to_joule, ELECTRON_MASS as M, HBAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierMethod {
    Exact,
    Wkb,
}

impl std::fmt::Display for BarrierMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BarrierMethod::Exact => "exact",
            BarrierMethod::Wkb => "wkb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticBarrierResult {
    /// Natural log of the transmission probability.
    pub log_transmission: f64,
    pub method: BarrierMethod,
    pub energy_ev: f64,
    pub peak_ev: f64,
    pub beam_width: f64,
    pub converged: bool,
}

impl StaticBarrierResult {
    /// The probability itself, when it is representable.
    pub fn transmission(&self) -> Option<f64> {
        (self.log_transmission > -700.0).then(|| self.log_transmission.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarrierResolution {
    /// Cells of constant potential at the first attempt.
    pub cells: usize,
    /// Half-width of the marched region in σ.
    pub extent_sigmas: f64,
    /// Relative change in `ln T` accepted between successive doublings.
    pub tolerance: f64,
    pub max_doublings: u32,
}

impl Default for BarrierResolution {
    fn default() -> Self {
        Self {
            cells: 4096,
            extent_sigmas: 4.0,
            tolerance: 1e-6,
            max_doublings: 8,
        }
    }
}

/// `ln T` through an arbitrary potential (J) on `[a, b]` split into `cells`
/// constant steps, marched from the transmitted wave on the right.
pub fn transfer_log_transmission(energy: f64, potential: impl Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> f64 {
    let k0 = (2.0 * M * energy).sqrt() / HBAR;
    let h = (b - a) / cells as f64;
    // (ψ, ψ') at the right edge for a pure outgoing wave, with a running log scale
    let mut psi = num_complex::Complex64::new(1.0, 0.0);
    let mut dpsi = num_complex::Complex64::new(0.0, k0);
    let mut log_scale = 0.0;
    for i in (0..cells).rev() {
        let mid = a + h * (i as f64 + 0.5);
        let kinetic = energy - potential(mid);
        if kinetic >= 0.0 {
            let k = (2.0 * M * kinetic).sqrt() / HBAR;
            let (s, c) = (k * h).sin_cos();
            let sk = if k == 0.0 { h } else { s / k };
            let p = psi * c - dpsi * sk;
            let d = psi * (k * s) + dpsi * c;
            psi = p;
            dpsi = d;
        } else {
            let q = (-2.0 * M * kinetic).sqrt() / HBAR;
            let (s, c) = ((q * h).sinh(), (q * h).cosh());
            let p = psi * c - dpsi * (s / q);
            let d = -psi * (q * s) + dpsi * c;
            psi = p;
            dpsi = d;
        }
        let size = psi.norm().max(dpsi.norm() / k0);
        if size > 1e50 || size < 1e-50 {
            psi /= size;
            dpsi /= size;
            log_scale += size.ln();
        }
    }
    // incident amplitude on the left
    let incident = (psi + dpsi / num_complex::Complex64::new(0.0, k0)) * 0.5;
    -2.0 * (incident.norm().ln() + log_scale)
}

fn check_energy(energy_ev: f64) -> Result<()> {
    if !(energy_ev > 0.0 && energy_ev.is_finite()) {
        return Err(Error::invalid("energy", format!("must be positive, got {energy_ev}")));
    }
    Ok(())
}

/// Static transmission from the Schrödinger equation, grid-doubled until converged.
pub fn static_transmission_exact(energy_ev: f64, laser: &LaserConfig, resolution: &BarrierResolution) -> Result<StaticBarrierResult> {
    check_energy(energy_ev)?;
    let e = ev_to_joule(energy_ev);
    let half = resolution.extent_sigmas * laser.beam_width;
    let result = |log_t: f64, converged: bool| StaticBarrierResult {
        log_transmission: log_t.min(0.0),
        method: BarrierMethod::Exact,
        energy_ev,
        peak_ev: laser.peak_ponderomotive_ev,
        beam_width: laser.beam_width,
        converged,
    };
    if laser.peak_ponderomotive_ev == 0.0 {
        return Ok(result(0.0, true));
    }
    let mut cells = resolution.cells.max(2);
    let mut prev = transfer_log_transmission(e, |x| ponderomotive_energy(x, laser), -half, half, cells);
    for _ in 0..resolution.max_doublings {
        cells *= 2;
        let next = transfer_log_transmission(e, |x| ponderomotive_energy(x, laser), -half, half, cells);
        if (next - prev).abs() <= resolution.tolerance * next.abs() + 1e-12 {
            return Ok(result(next, true));
        }
        prev = next;
    }
    Ok(result(prev, false))
}

/// Analytic turning point of the on-axis barrier at energy `energy` (J).
fn barrier_turning_point(energy: f64, laser: &LaserConfig) -> f64 {
    let ratio = laser.peak_ponderomotive() / energy;
    laser.beam_width * (ratio.ln() / (8.0 * std::f64::consts::LN_2)).sqrt()
}

/// WKB barrier exponent `−2∫κ dx/ħ` across the forbidden region.
pub fn static_transmission_wkb(energy_ev: f64, laser: &LaserConfig, resolution: &BarrierResolution) -> Result<StaticBarrierResult> {
    check_energy(energy_ev)?;
    if energy_ev >= laser.peak_ponderomotive_ev {
        return Err(Error::NoForbiddenRegion {
            energy_ev,
            peak_ev: laser.peak_ponderomotive_ev,
        });
    }
    let e = ev_to_joule(energy_ev);
    let xt = barrier_turning_point(e, laser);
    // x = −x_t cos θ removes the square-root zeros at both turning points
    let integrand = |theta: f64| {
        let x = -xt * theta.cos();
        let k = (ponderomotive_energy(x, laser) - e).max(0.0);
        num_complex::Complex64::new((2.0 * M * k).sqrt() * xt * theta.sin(), 0.0)
    };
    let grid = QuadratureGrid {
        base_panels: 8,
        refinement_limit: 16,
        tolerance: resolution.tolerance.min(1e-10),
        absolute_floor: 0.0,
    };
    let q = oscillatory_integral(integrand, 0.0, std::f64::consts::PI, &grid);
    Ok(StaticBarrierResult {
        log_transmission: -2.0 * q.value.re / HBAR,
        method: BarrierMethod::Wkb,
        energy_ev,
        peak_ev: laser.peak_ponderomotive_ev,
        beam_width: laser.beam_width,
        converged: q.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSettings {
    /// Time step as a fraction of the transit time.
    pub step_fraction: f64,
    /// Start and stop distance from the beam centre in σ.
    pub start_sigmas: f64,
    /// Give up after this many transit times.
    pub max_transits: f64,
    /// Relative energy drift that aborts the run.
    pub drift_limit: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            step_fraction: 1e-5,
            start_sigmas: 3.5,
            max_transits: 50.0,
            drift_limit: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalResult {
    /// Final momentum `(P_x, P_y)`, kg·m/s.
    pub final_momentum: [f64; 2],
    pub reflected: bool,
    /// Largest relative deviation of the total energy along the path.
    pub energy_drift: f64,
    pub steps: usize,
}

/// Newtonian path through `U_p f²(x, y)` by velocity Verlet, starting left of
/// the beam at transverse offset `impact_offset` (m).
pub fn classical_deflection(
    impact_offset: f64,
    laser: &LaserConfig,
    electron: &ElectronConfig,
    settings: &IntegratorSettings,
) -> Result<ClassicalResult> {
    if settings.start_sigmas < 3.0 {
        return Err(Error::invalid("start_sigmas", "the electron must start outside the beam (|x| > 3σ)"));
    }
    let s = laser.beam_width;
    let up = laser.peak_ponderomotive();
    let alpha = 8.0 * std::f64::consts::LN_2 / (s * s);
    let potential = |x: f64, y: f64| up * (-alpha * (x * x + y * y)).exp();
    // F = −∇U = 2α U (x, y)
    let force = |x: f64, y: f64| {
        let u = potential(x, y);
        [2.0 * alpha * u * x, 2.0 * alpha * u * y]
    };
    let edge = settings.start_sigmas * s;
    let mut pos = [-edge, impact_offset];
    let mut mom = [electron.momentum_x(), electron.transverse_momentum_y];
    let energy = |p: &[f64; 2], q: &[f64; 2]| (p[0] * p[0] + p[1] * p[1]) / (2.0 * M) + potential(q[0], q[1]);
    let e0 = energy(&mom, &pos);
    let dt = settings.step_fraction * electron.transit_time(laser);
    let max_steps = (settings.max_transits / settings.step_fraction) as usize;
    let mut f = force(pos[0], pos[1]);
    let mut drift = 0.0f64;
    let mut steps = 0;
    while steps < max_steps {
        for k in 0..2 {
            mom[k] += 0.5 * dt * f[k];
            pos[k] += dt * mom[k] / M;
        }
        f = force(pos[0], pos[1]);
        for k in 0..2 {
            mom[k] += 0.5 * dt * f[k];
        }
        steps += 1;
        drift = drift.max(((energy(&mom, &pos) - e0) / e0).abs());
        if drift > settings.drift_limit {
            return Err(Error::EnergyDrift {
                drift,
                limit: settings.drift_limit,
            });
        }
        if pos[0].abs() > edge || pos[1].abs() > edge {
            break;
        }
    }
    Ok(ClassicalResult {
        final_momentum: mom,
        reflected: mom[0] < 0.0,
        energy_drift: drift,
        steps,
    })
}
