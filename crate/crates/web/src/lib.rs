//! Browser bindings for the demo page in `www/`.
//!
//! Each export has a plain Rust twin so the numbers can be checked natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ponderotunnel::baselines::{classical_deflection, static_transmission_exact, static_transmission_wkb, BarrierResolution, IntegratorSettings};
use ponderotunnel::field::{ponderomotive_potential, ElectronConfig, LaserConfig};
use ponderotunnel::rate::{energy_spectrum, RateConfig};
use ponderotunnel::Result;

const WAVELENGTH: f64 = 1.064e-6;

fn laser(up_ev: f64, sigma_um: f64) -> Result<LaserConfig> {
    LaserConfig::new(WAVELENGTH, sigma_um * 1e-6, up_ev)
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierView {
    pub x_um: Vec<f64>,
    pub potential_ev: Vec<f64>,
    pub log_t_exact: f64,
    /// Absent when the electron passes above the peak.
    pub log_t_wkb: Option<f64>,
}

pub fn barrier_view(up_ev: f64, sigma_um: f64, e0_ev: f64, points: usize) -> Result<BarrierView> {
    let l = laser(up_ev, sigma_um)?;
    let n = points.clamp(2, 4000);
    let x_um: Vec<f64> = (0..n).map(|i| -2.0 * sigma_um + 4.0 * sigma_um * i as f64 / (n - 1) as f64).collect();
    let potential_ev = x_um.iter().map(|x| ponderomotive_potential(x * 1e-6, &l)).collect();
    let res = BarrierResolution::default();
    let log_t_exact = static_transmission_exact(e0_ev, &l, &res)?.log_transmission;
    let log_t_wkb = static_transmission_wkb(e0_ev, &l, &res).ok().map(|r| r.log_transmission);
    Ok(BarrierView {
        x_um,
        potential_ev,
        log_t_exact,
        log_t_wkb,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Line {
    pub j_pp: i32,
    pub final_energy_ev: f64,
    pub p_zf: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumView {
    pub lines: Vec<Line>,
    pub total_rate: f64,
    pub free_rate: f64,
    pub converged: bool,
}

pub fn spectrum_view(up_ev: f64, e0_ev: f64) -> Result<SpectrumView> {
    let cfg = RateConfig::new(laser(up_ev, 6.0)?, ElectronConfig::new(e0_ev)?);
    let r = energy_spectrum(&cfg)?;
    Ok(SpectrumView {
        lines: r
            .open_channels()
            .map(|c| Line {
                j_pp: c.j_pp,
                final_energy_ev: c.final_energy_ev,
                p_zf: c.p_zf,
                rate: c.rate,
            })
            .collect(),
        total_rate: r.total_rate,
        free_rate: cfg.free_rate(),
        converged: r.diagnostics.converged,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Deflection {
    pub impact_um: f64,
    /// Outgoing angle from the incident direction, rad.
    pub angle: f64,
    pub reflected: bool,
}

pub fn deflection_scan(up_ev: f64, e0_ev: f64, max_impact_um: f64, count: usize) -> Result<Vec<Deflection>> {
    let l = laser(up_ev, 6.0)?;
    let e = ElectronConfig::new(e0_ev)?;
    // coarser steps keep the page responsive, drift stays far below the abort limit
    let settings = IntegratorSettings {
        step_fraction: 1e-4,
        ..IntegratorSettings::default()
    };
    let n = count.clamp(2, 200);
    (0..n)
        .map(|i| {
            let b = max_impact_um * i as f64 / (n - 1) as f64;
            let r = classical_deflection(b * 1e-6, &l, &e, &settings)?;
            Ok(Deflection {
                impact_um: b,
                angle: r.final_momentum[1].atan2(r.final_momentum[0]),
                reflected: r.reflected,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<JsValue, JsError> {
    let v = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_wasm_bindgen::to_value(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Potential profile and static-barrier `ln T` at `e0_ev`.
#[wasm_bindgen]
pub fn barrier(up_ev: f64, sigma_um: f64, e0_ev: f64, points: usize) -> std::result::Result<JsValue, JsError> {
    to_js(barrier_view(up_ev, sigma_um, e0_ev, points))
}

/// Line spectrum at the reference beam (1.064 µm, σ = 6 µm).
#[wasm_bindgen]
pub fn spectrum(up_ev: f64, e0_ev: f64) -> std::result::Result<JsValue, JsError> {
    to_js(spectrum_view(up_ev, e0_ev))
}

/// Classical scattering angle against impact parameter.
#[wasm_bindgen]
pub fn deflection(up_ev: f64, e0_ev: f64, max_impact_um: f64, count: usize) -> std::result::Result<JsValue, JsError> {
    to_js(deflection_scan(up_ev, e0_ev, max_impact_um, count))
}
