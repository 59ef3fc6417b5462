//! Moller amplitudes, transition rates, spectra and resonance sweeps.
//!
//! `Ω(j_pp) = Σ_j m(j, j_pp)` and `W(j_pp) = (4/T) |Ω(j_pp)|²`; the total rate is
//! the incoherent sum over net orders. In band mode the on-shell matrix element
//! is replaced by its Lorentzian-weighted average over `E_i ± Bε`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{channel_overlaps, AmplitudeContext, AmplitudeGrid, OverlapDiagnostics};
use crate::error::{Error, Result};
use crate::field::{ElectronConfig, LaserConfig, RecoilConvention};
use crate::units::{joule_to_ev, HBAR};
use crate::volkov::{self, TruncationBounds, TruncationPolicy};

/// Fixed crossing time for the reference beam, kept as an override to the formula, s.
pub const PAPER_TRANSIT_TIME: f64 = 6.9e-11;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TransitTime {
    /// `2σ / v_0`.
    #[default]
    Formula,
    /// [`PAPER_TRANSIT_TIME`].
    Paper,
    Explicit(f64),
}

impl TransitTime {
    pub fn seconds(&self, electron: &ElectronConfig, laser: &LaserConfig) -> f64 {
        match *self {
            TransitTime::Formula => electron.transit_time(laser),
            TransitTime::Paper => PAPER_TRANSIT_TIME,
            TransitTime::Explicit(t) => t,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "formula" => Ok(TransitTime::Formula),
            "paper" => Ok(TransitTime::Paper),
            other => match other.parse::<f64>() {
                Ok(t) if t > 0.0 && t.is_finite() => Ok(TransitTime::Explicit(t)),
                _ => Err(Error::invalid("transit", format!("expected formula, paper or a positive time in s, got {other:?}"))),
            },
        }
    }
}

impl std::fmt::Display for TransitTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransitTime::Formula => write!(f, "formula"),
            TransitTime::Paper => write!(f, "paper"),
            TransitTime::Explicit(t) => write!(f, "{t:e}"),
        }
    }
}

impl Serialize for TransitTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TransitTime::Explicit(t) => s.serialize_f64(*t),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for TransitTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Seconds(f64),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Text(t) => TransitTime::parse(&t),
            Raw::Seconds(t) => TransitTime::parse(&t.to_string()),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    /// Only the on-shell Volkov state, unit weight.
    #[default]
    Onshell,
    /// Lorentzian-weighted average across the off-shell band.
    Band,
}

impl std::str::FromStr for RateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onshell" => Ok(RateMode::Onshell),
            "band" => Ok(RateMode::Band),
            other => Err(Error::invalid("mode", format!("expected onshell or band, got {other:?}"))),
        }
    }
}

/// Full specification of one rate computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub laser: LaserConfig,
    pub electron: ElectronConfig,
    #[serde(default)]
    pub grid: AmplitudeGrid,
    #[serde(default)]
    pub policy: TruncationPolicy,
    #[serde(default)]
    pub transit: TransitTime,
    #[serde(default)]
    pub mode: RateMode,
    #[serde(default)]
    pub recoil: RecoilConvention,
}

impl RateConfig {
    pub fn new(laser: LaserConfig, electron: ElectronConfig) -> Self {
        Self {
            laser,
            electron,
            grid: AmplitudeGrid::default(),
            policy: TruncationPolicy::default(),
            transit: TransitTime::Formula,
            mode: RateMode::Onshell,
            recoil: RecoilConvention::Peak,
        }
    }

    /// 1.064 µm, σ = 6 µm, E_0 = 0.54 eV.
    pub fn reference(peak_ponderomotive_ev: f64) -> Self {
        Self::new(LaserConfig::reference(peak_ponderomotive_ev), ElectronConfig::new(0.54).expect("valid"))
    }

    pub fn context(&self) -> Result<AmplitudeContext> {
        Ok(AmplitudeContext::new(self.electron, self.laser, self.grid, self.policy)?.with_recoil(self.recoil))
    }

    pub fn transit_time(&self) -> f64 {
        self.transit.seconds(&self.electron, &self.laser)
    }

    /// `ε = ħ/T`, J.
    pub fn epsilon(&self) -> f64 {
        HBAR / self.transit_time()
    }

    /// `4/T`, the rate of a fully transmitted electron, 1/s.
    pub fn free_rate(&self) -> f64 {
        4.0 / self.transit_time()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralWeight {
    /// J.
    pub epsilon: f64,
    /// `E_µ − E_i`, J.
    pub offset: f64,
}

impl SpectralWeight {
    pub fn value(&self) -> C64 {
        let e = self.epsilon;
        let d = self.offset;
        C64::new(e * e, e * d) / (d * d + e * e)
    }
}

/// `(ε² + iεΔE)/(ΔE² + ε²)`.
pub fn spectral_weight(offset: f64, epsilon: f64) -> Result<C64> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    Ok(SpectralWeight { epsilon, offset }.value())
}

/// Fixed-shape pairwise summation, independent of thread scheduling.
pub fn pairwise_sum(values: &[C64]) -> C64 {
    match values.len() {
        0 => C64::new(0.0, 0.0),
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn pairwise_sum_real(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum_real(a) + pairwise_sum_real(b)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RateDiagnostics {
    pub converged: bool,
    pub max_error: f64,
    pub gl_panels: usize,
    pub levin_panels: usize,
    pub clamped_nodes: usize,
    pub channels_evaluated: usize,
    pub channels_pruned: usize,
    pub energy_samples: usize,
    pub max_j: i32,
    pub max_j1: i32,
    pub max_j2: i32,
}

impl RateDiagnostics {
    fn absorb(&mut self, d: &OverlapDiagnostics) {
        self.converged &= d.converged;
        self.max_error = self.max_error.max(d.max_error);
        self.gl_panels += d.gl_panels;
        self.levin_panels += d.levin_panels;
        self.clamped_nodes += d.clamped_nodes;
    }

    fn merge(&mut self, o: &RateDiagnostics) {
        self.converged &= o.converged;
        self.max_error = self.max_error.max(o.max_error);
        self.gl_panels += o.gl_panels;
        self.levin_panels += o.levin_panels;
        self.clamped_nodes += o.clamped_nodes;
        self.channels_evaluated += o.channels_evaluated;
        self.channels_pruned += o.channels_pruned;
        self.energy_samples += o.energy_samples;
    }

    fn with_bounds(b: &TruncationBounds) -> Self {
        Self {
            converged: true,
            max_j: b.max_j,
            max_j1: b.max_j1,
            max_j2: b.max_j2,
            ..Self::default()
        }
    }
}

/// Moller amplitudes at one off-shell offset for every order in `orders`.
fn amplitudes_at(ctx: &AmplitudeContext, offset: f64, orders: &[i32]) -> (Vec<C64>, RateDiagnostics) {
    let per_channel: Vec<_> = ctx
        .bounds
        .j_range()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| channel_overlaps(ctx, j, offset, orders))
        .collect();
    let mut diag = RateDiagnostics::with_bounds(&ctx.bounds);
    diag.energy_samples = 1;
    for c in &per_channel {
        diag.absorb(&c.diagnostics);
        if c.entrance.norm() >= ctx.grid.prune_threshold {
            diag.channels_evaluated += 1;
        } else {
            diag.channels_pruned += 1;
        }
    }
    let amplitudes = orders
        .iter()
        .map(|&o| {
            let terms: Vec<C64> = per_channel.iter().map(|c| c.matrix_element(o)).collect();
            pairwise_sum(&terms)
        })
        .collect();
    (amplitudes, diag)
}

/// Lobatto points `cos(πk/(n−1))` mapped to `[−h, h]`.
fn lobatto(n: usize, half: f64) -> Vec<f64> {
    (0..n)
        .map(|k| half * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
        .collect()
}

fn barycentric(nodes: &[f64], values: &[C64], t: f64) -> C64 {
    let n = nodes.len();
    let mut num = C64::new(0.0, 0.0);
    let mut den = 0.0;
    for k in 0..n {
        let d = t - nodes[k];
        if d == 0.0 {
            return values[k];
        }
        let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
        if k == 0 || k == n - 1 {
            w *= 0.5;
        }
        num += values[k] * (w / d);
        den += w / d;
    }
    num / den
}

/// Moller amplitudes for `orders` under the configured mode.
pub fn moller_amplitudes(cfg: &RateConfig, orders: &[i32]) -> Result<(Vec<C64>, RateDiagnostics)> {
    let ctx = cfg.context()?;
    match cfg.mode {
        RateMode::Onshell => Ok(amplitudes_at(&ctx, 0.0, orders)),
        RateMode::Band => {
            let eps = cfg.epsilon();
            let half = cfg.grid.energy_band_halfwidth * eps;
            let nodes = lobatto(cfg.grid.energy_samples, half);
            let mut diag = RateDiagnostics::with_bounds(&ctx.bounds);
            let mut sampled = Vec::with_capacity(nodes.len());
            for &offset in &nodes {
                let (a, d) = amplitudes_at(&ctx, offset, orders);
                diag.merge(&d);
                sampled.push(a);
            }
            let points = cfg.grid.energy_point_count;
            let h = 2.0 * half / (points - 1) as f64;
            let mut weights = Vec::with_capacity(points);
            let mut offsets = Vec::with_capacity(points);
            for k in 0..points {
                let offset = if k == (points - 1) / 2 { 0.0 } else { -half + h * k as f64 };
                let c = if k == 0 || k == points - 1 { 0.5 * h } else { h };
                weights.push(spectral_weight(offset, eps)? * c);
                offsets.push(offset);
            }
            let norm = pairwise_sum(&weights);
            let out = (0..orders.len())
                .map(|i| {
                    let values: Vec<C64> = sampled.iter().map(|s| s[i]).collect();
                    let terms: Vec<C64> = offsets
                        .iter()
                        .zip(&weights)
                        .map(|(&o, &w)| w * barycentric(&nodes, &values, o))
                        .collect();
                    pairwise_sum(&terms) / norm
                })
                .collect();
            Ok((out, diag))
        }
    }
}

fn require_open(j_pp: i32, cfg: &RateConfig) -> Result<()> {
    let e = volkov::final_energy(j_pp, &cfg.electron, &cfg.laser);
    if e < 0.0 {
        return Err(Error::ClosedChannel {
            j_pp,
            final_energy_ev: joule_to_ev(e),
        });
    }
    Ok(())
}

pub fn moller_amplitude(j_pp: i32, cfg: &RateConfig) -> Result<C64> {
    require_open(j_pp, cfg)?;
    Ok(moller_amplitudes(cfg, &[j_pp])?.0[0])
}

/// `(4/T) |Ω(j_pp)|²`, 1/s.
pub fn transition_rate(j_pp: i32, cfg: &RateConfig) -> Result<f64> {
    let a = moller_amplitude(j_pp, cfg)?;
    Ok(cfg.free_rate() * a.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelRate {
    pub j_pp: i32,
    pub open: bool,
    pub final_energy_ev: f64,
    /// kg·m/s.
    pub p_zf: f64,
    pub amplitude: C64,
    /// 1/s.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    /// Every reported order, ascending, closed ones with zero rate.
    pub channels: Vec<ChannelRate>,
    pub total_rate: f64,
    pub laser: LaserConfig,
    pub electron: ElectronConfig,
    pub transit_time: f64,
    pub mode: RateMode,
    pub diagnostics: RateDiagnostics,
}

impl RateResult {
    pub fn open_channels(&self) -> impl Iterator<Item = &ChannelRate> {
        self.channels.iter().filter(|c| c.open)
    }

    pub fn channel(&self, j_pp: i32) -> Option<&ChannelRate> {
        self.channels.iter().find(|c| c.j_pp == j_pp)
    }

    /// `Σ rate(j_pp < 0) / Σ rate(j_pp > 0)`.
    pub fn asymmetry(&self) -> f64 {
        let neg: Vec<f64> = self.channels.iter().filter(|c| c.j_pp < 0).map(|c| c.rate).collect();
        let pos: Vec<f64> = self.channels.iter().filter(|c| c.j_pp > 0).map(|c| c.rate).collect();
        pairwise_sum_real(&neg) / pairwise_sum_real(&pos)
    }
}

/// Rates for every reported net order (`|j_pp| ≤ max_report`).
pub fn energy_spectrum(cfg: &RateConfig) -> Result<RateResult> {
    let ctx = cfg.context()?;
    let orders: Vec<i32> = ctx.bounds.report_range().collect();
    let open: Vec<i32> = orders
        .iter()
        .copied()
        .filter(|&o| volkov::final_energy(o, &cfg.electron, &cfg.laser) >= 0.0)
        .collect();
    let (amps, diagnostics) = moller_amplitudes(cfg, &open)?;
    let free = cfg.free_rate();
    let hk = cfg.laser.photon_momentum();
    let channels: Vec<ChannelRate> = orders
        .iter()
        .map(|&o| {
            let energy = volkov::final_energy(o, &cfg.electron, &cfg.laser);
            let amplitude = open.iter().position(|&x| x == o).map(|i| amps[i]).unwrap_or_default();
            ChannelRate {
                j_pp: o,
                open: energy >= 0.0,
                final_energy_ev: joule_to_ev(energy),
                p_zf: o as f64 * hk,
                amplitude,
                rate: free * amplitude.norm_sqr(),
            }
        })
        .collect();
    let rates: Vec<f64> = channels.iter().map(|c| c.rate).collect();
    Ok(RateResult {
        total_rate: pairwise_sum_real(&rates),
        channels,
        laser: cfg.laser,
        electron: cfg.electron,
        transit_time: cfg.transit_time(),
        mode: cfg.mode,
        diagnostics,
    })
}

/// The same rates keyed by `P_zf = j_pp ħk`, over `j_pp ∈ [−max_report, max_report]`.
pub fn diffraction_distribution(cfg: &RateConfig) -> Result<RateResult> {
    energy_spectrum(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub u_p: f64,
    pub total_rate: f64,
    pub converged: bool,
}

/// Sweep points: `steps` evenly spaced values, or the single endpoint of a degenerate range.
pub fn sweep_values(u_min: f64, u_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(u_min >= 0.0 && u_max >= u_min && u_max.is_finite()) {
        return Err(Error::invalid("u_p range", format!("need 0 ≤ min ≤ max, got [{u_min}, {u_max}]")));
    }
    if u_min == u_max {
        return Ok(vec![u_min]);
    }
    if steps < 2 {
        return Err(Error::invalid("steps", "need at least 2 points for a non-degenerate range"));
    }
    Ok((0..steps)
        .map(|i| if i + 1 == steps { u_max } else { u_min + (u_max - u_min) * i as f64 / (steps - 1) as f64 })
        .collect())
}

/// Total rate against `u_p = U_p/ħω`.
pub fn resonance_sweep(u_min: f64, u_max: f64, steps: usize, cfg: &RateConfig) -> Result<Vec<SweepPoint>> {
    let values = sweep_values(u_min, u_max, steps)?;
    values
        .into_par_iter()
        .map(|u| {
            let mut point = *cfg;
            point.laser = cfg.laser.with_normalized_ponderomotive(u)?;
            let r = energy_spectrum(&point)?;
            Ok(SweepPoint {
                u_p: u,
                total_rate: r.total_rate,
                converged: r.diagnostics.converged,
            })
        })
        .collect()
}

/// Indices of interior local maxima of a sampled curve.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}
