//! Experiment runner: resolves configs, runs the rate and baseline
//! computations, and writes CSV data plus a JSON metadata sidecar.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

use ponderotunnel::baselines::{classical_deflection, static_transmission_exact, static_transmission_wkb};
use ponderotunnel::rate::{energy_spectrum, local_maxima, resonance_sweep, RateConfig, RateMode, RateResult};
use ponderotunnel::Error;

pub use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNCONVERGED: i32 = 3;

/// Relative change a rate may show in the convergence study.
pub const STABILITY_TOLERANCE: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Core(Error::InvalidParameter { .. }) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub converged: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            EXIT_OK
        } else {
            EXIT_UNCONVERGED
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

struct Run<'a> {
    name: &'static str,
    config: &'a ExperimentConfig,
    started: Instant,
}

impl<'a> Run<'a> {
    fn start(name: &'static str, config: &'a ExperimentConfig) -> Result<Self, RunError> {
        std::fs::create_dir_all(&config.out).map_err(|source| RunError::Io {
            path: config.out.clone(),
            source,
        })?;
        Ok(Self {
            name,
            config,
            started: Instant::now(),
        })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.config.out.join(format!("{}{suffix}", self.name))
    }

    /// Writes the data files and then the metadata sidecar.
    fn finish(&self, data: Vec<(PathBuf, String)>, extra: serde_json::Value, converged: bool) -> Result<RunOutcome, RunError> {
        let mut files = Vec::new();
        for (path, text) in data {
            files.push(write_file(&path, &text)?);
        }
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let meta = json!({
            "command": self.name,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "converged": converged,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "timestamp_unix": timestamp,
            "results": extra,
        });
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        files.push(write_file(&self.path(".json"), &text)?);
        Ok(RunOutcome { files, converged })
    }
}

fn diagnostics_json(r: &RateResult) -> serde_json::Value {
    json!({
        "diagnostics": r.diagnostics,
        "total_rate_per_s": r.total_rate,
        "transit_time_s": r.transit_time,
        "free_rate_per_s": 4.0 / r.transit_time,
    })
}

pub fn run_spectrum(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let rc = config.rate_config()?;
    let run = Run::start("spectrum", config)?;
    let r = energy_spectrum(&rc)?;
    let mut csv = String::from("j_pp,final_energy_ev,rate_per_s\n");
    for c in r.open_channels() {
        writeln!(csv, "{},{},{}", c.j_pp, sci(c.final_energy_ev), sci(c.rate)).unwrap();
    }
    let converged = r.diagnostics.converged;
    run.finish(vec![(run.path(".csv"), csv)], diagnostics_json(&r), converged)
}

pub fn run_diffraction(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let rc = config.rate_config()?;
    let run = Run::start("diffraction", config)?;
    let r = energy_spectrum(&rc)?;
    let mut csv = String::from("j_pp,p_zf,rate_per_s\n");
    for c in r.open_channels() {
        writeln!(csv, "{},{},{}", c.j_pp, sci(c.p_zf), sci(c.rate)).unwrap();
    }
    let mut extra = diagnostics_json(&r);
    extra["negative_to_positive_ratio"] = json!(r.asymmetry());
    extra["photon_momentum"] = json!(rc.laser.photon_momentum());
    let converged = r.diagnostics.converged;
    run.finish(vec![(run.path(".csv"), csv)], extra, converged)
}

pub fn run_resonance(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let rc = config.rate_config()?;
    let s = &config.resonance;
    let run = Run::start("resonance", config)?;
    let points = resonance_sweep(s.u_min, s.u_max, s.steps, &rc)?;
    let mut csv = String::from("u_p,total_rate_per_s\n");
    for p in &points {
        writeln!(csv, "{},{}", sci(p.u_p), sci(p.total_rate)).unwrap();
    }
    let rates: Vec<f64> = points.iter().map(|p| p.total_rate).collect();
    let maxima: Vec<f64> = local_maxima(&rates).into_iter().map(|i| points[i].u_p).collect();
    let unconverged: Vec<f64> = points.iter().filter(|p| !p.converged).map(|p| p.u_p).collect();
    let converged = unconverged.is_empty();
    let extra = json!({
        "local_maxima_u_p": maxima,
        "unconverged_u_p": unconverged,
        "all_finite": rates.iter().all(|r| r.is_finite()),
    });
    run.finish(vec![(run.path(".csv"), csv)], extra, converged)
}

pub fn run_baseline(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let rc = config.rate_config()?;
    let b = &config.baseline;
    let run = Run::start("baseline", config)?;
    let mut converged = true;
    let mut csv = String::from("method,energy_ev,log_transmission\n");
    let mut skipped = Vec::new();
    for &e in &b.energies_ev {
        let exact = static_transmission_exact(e, &rc.laser, &b.resolution)?;
        converged &= exact.converged;
        writeln!(csv, "exact,{},{}", sci(e), sci(exact.log_transmission)).unwrap();
        match static_transmission_wkb(e, &rc.laser, &b.resolution) {
            Ok(w) => {
                converged &= w.converged;
                writeln!(csv, "wkb,{},{}", sci(e), sci(w.log_transmission)).unwrap();
            }
            Err(Error::NoForbiddenRegion { .. }) => skipped.push(e),
            Err(other) => return Err(other.into()),
        }
    }
    let mut classical = String::from("impact_offset_m,p_x,p_y,reflected,energy_drift\n");
    for &offset_um in &b.impact_offsets_um {
        let c = classical_deflection(offset_um * 1e-6, &rc.laser, &rc.electron, &b.integrator)?;
        writeln!(
            classical,
            "{},{},{},{},{}",
            sci(offset_um * 1e-6),
            sci(c.final_momentum[0]),
            sci(c.final_momentum[1]),
            c.reflected,
            sci(c.energy_drift)
        )
        .unwrap();
    }
    // headline comparison at E_0
    let spectrum = energy_spectrum(&rc)?;
    converged &= spectrum.diagnostics.converged;
    let static_e0 = static_transmission_exact(rc.electron.initial_energy_ev, &rc.laser, &b.resolution)?;
    converged &= static_e0.converged;
    let log10_ratio = (spectrum.total_rate.ln() - (rc.free_rate().ln() + static_e0.log_transmission)) / std::f64::consts::LN_10;
    let extra = json!({
        "wkb_skipped_energies_ev": skipped,
        "ponderomotive_total_rate_per_s": spectrum.total_rate,
        "static_log_transmission_at_e0": static_e0.log_transmission,
        "log10_rate_ratio": log10_ratio,
    });
    let data = vec![(run.path(".csv"), csv), (run.path("_classical.csv"), classical)];
    run.finish(data, extra, converged)
}

/// The refinements the convergence study applies one at a time.
pub fn convergence_variants(base: &RateConfig) -> Vec<(&'static str, RateConfig)> {
    let mut out = vec![("base", *base)];
    let mut v = *base;
    v.policy = base.policy.doubled();
    out.push(("margins", v));
    let mut v = *base;
    v.grid.base_panel_count *= 2;
    out.push(("panels", v));
    let mut v = *base;
    v.grid.x_min_sigmas = -4.0;
    v.grid.x_max_sigmas = 4.0;
    out.push(("bounds", v));
    let mut v = *base;
    v.grid.clamp_fraction *= 0.5;
    out.push(("clamp", v));
    if base.mode == RateMode::Band {
        let mut v = *base;
        // same sampling density across the wider band
        v.grid.energy_band_halfwidth *= 2.0;
        v.grid.energy_samples = 2 * v.grid.energy_samples - 1;
        v.grid.energy_point_count = 2 * v.grid.energy_point_count - 1;
        out.push(("band", v));
    }
    out
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let rc = config.rate_config()?;
    let run = Run::start("convergence", config)?;
    let mut results = Vec::new();
    for (name, v) in convergence_variants(&rc) {
        results.push((name, energy_spectrum(&v)?));
    }
    let base = &results[0].1;
    let mut converged = true;
    let mut stable = true;
    let mut worst = serde_json::Map::new();
    let mut csv = String::from("variant,j_pp,rate_per_s,relative_change\n");
    for (name, r) in &results {
        converged &= r.diagnostics.converged;
        let mut max_rel = 0.0f64;
        for c in r.open_channels() {
            let reference = base.channel(c.j_pp).map(|b| b.rate).unwrap_or(0.0);
            let change = (c.rate - reference).abs();
            let rel = if change == 0.0 { 0.0 } else { change / reference.abs() };
            stable &= change <= STABILITY_TOLERANCE * reference.abs();
            max_rel = max_rel.max(rel);
            writeln!(csv, "{name},{},{},{}", c.j_pp, sci(c.rate), sci(rel)).unwrap();
        }
        worst.insert(name.to_string(), json!(max_rel));
    }
    let extra = json!({
        "max_relative_change": worst,
        "stable": stable,
        "tolerance": STABILITY_TOLERANCE,
        "band_checked": rc.mode == RateMode::Band,
    });
    run.finish(vec![(run.path(".csv"), csv)], extra, converged && stable)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_has_17_digits() {
        assert_eq!(sci(0.54), "5.4000000000000004e-1");
        assert_eq!(sci(-0.375), "-3.7500000000000000e-1");
        assert_eq!(sci(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::Config("x".into()).exit_code(), EXIT_CONFIG);
        let e: RunError = ponderotunnel::field::ElectronConfig::new(-1.0).unwrap_err().into();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert_eq!(RunOutcome { files: vec![], converged: false }.exit_code(), EXIT_UNCONVERGED);
    }
}
