//! Entrance and exit overlaps of the Volkov channels with the free states,
//! and the matrix element `m(j, j_pp; ΔE)` built from them.
//!
//! With box factors removed, for the intermediate channel `j` with normalised
//! WKB wave `X̃_j` (incident plane wave of unit amplitude):
//!
//! ```text
//! in(j)      = δ_{j0}           + (1/L) ∫ e^{−iP_xi x/ħ} (B_j(x)  − δ_{j0})  X̃_j(x)  dx
//! out(j, j') = δ_{j'0} conj(τ_j) + (1/L) ∫ e^{+iP_xf x/ħ} (B_j'(x) − δ_{j'0}) X̃_j*(x) dx
//! ```
//!
//! where `B_n = Σ_{j2} (−i)^{n−2j2} J_{n−2j2}(η) J_{j2}(−u_p/2)`, `τ_j` is the
//! channel's transmission amplitude and `L = 2σ` is the crossing length. The
//! Kronecker pieces are the free-space overlaps taken in the infinite-box limit;
//! what remains under the integrals is localised in the beam.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ElectronConfig, LaserConfig, RecoilConvention, WkbWave, ChannelEnergy};
use crate::quadrature::{integrate_bundle, BundleDiagnostics, BundleSettings, OscillatoryBundle, Segment, Term};
use crate::units::HBAR;
use crate::volkov::{self, BesselTable, Channel, TruncationBounds, TruncationPolicy};

pub use crate::quadrature::{oscillatory_integral, QuadratureGrid, QuadratureResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmplitudeGrid {
    /// Left integration bound in units of σ.
    pub x_min_sigmas: f64,
    /// Right integration bound in units of σ.
    pub x_max_sigmas: f64,
    /// Level-0 panels across `[x_min, x_max]`.
    pub base_panel_count: usize,
    pub refinement_limit: u32,
    /// Relative tolerance between successive refinement levels.
    pub convergence_tol: f64,
    /// Absolute tolerance on the normalised overlaps, raised to the phase rounding floor when that is larger.
    pub absolute_tol: f64,
    /// Half-width of the off-shell band in units of ε.
    pub energy_band_halfwidth: f64,
    /// Odd number of trapezoid points across the band.
    pub energy_point_count: usize,
    /// Number of exact evaluations across the band; the trapezoid points are interpolated from them.
    pub energy_samples: usize,
    /// `|P|` floor in the WKB prefactor as a fraction of `P_xi`.
    pub clamp_fraction: f64,
    pub use_levin: bool,
    /// Exit overlaps are skipped for channels whose `|in(j)|` is below this.
    pub prune_threshold: f64,
}

impl Default for AmplitudeGrid {
    fn default() -> Self {
        Self {
            x_min_sigmas: -3.0,
            x_max_sigmas: 3.0,
            base_panel_count: 96,
            refinement_limit: 6,
            convergence_tol: 1e-6,
            absolute_tol: 1e-15,
            energy_band_halfwidth: 10.0,
            energy_point_count: 201,
            energy_samples: 25,
            clamp_fraction: 1e-8,
            use_levin: true,
            prune_threshold: 1e-13,
        }
    }
}

impl AmplitudeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min_sigmas < 0.0 && self.x_max_sigmas > 0.0) {
            return Err(Error::invalid("grid bounds", "need x_min < 0 < x_max"));
        }
        if self.base_panel_count == 0 {
            return Err(Error::invalid("base_panel_count", "must be positive"));
        }
        if self.energy_point_count % 2 == 0 || self.energy_point_count < 3 {
            return Err(Error::invalid("energy_point_count", "must be odd and at least 3"));
        }
        if self.energy_samples < 2 {
            return Err(Error::invalid("energy_samples", "must be at least 2"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::invalid("convergence_tol", "must be positive"));
        }
        Ok(())
    }

    pub fn x_bounds(&self, laser: &LaserConfig) -> (f64, f64) {
        (self.x_min_sigmas * laser.beam_width, self.x_max_sigmas * laser.beam_width)
    }

    /// `momentum` is the largest plane-wave momentum in the bundle. `e^{iPx/ħ}` cannot be
    /// formed better than `|Px/ħ|·ε` in absolute phase, so the floor never drops below that.
    fn bundle_settings(&self, laser: &LaserConfig, momentum: f64) -> BundleSettings {
        let (a, b) = self.x_bounds(laser);
        let phase_noise = f64::EPSILON * momentum * a.abs().max(b.abs()) / HBAR;
        BundleSettings {
            tolerance: self.convergence_tol,
            absolute_floor: self.absolute_tol.max(phase_noise) * interaction_length(laser),
            base_panel: (b - a) / self.base_panel_count as f64,
            refinement_limit: self.refinement_limit,
            use_levin: self.use_levin,
            grade_length: 50e-9f64.min(0.01 * laser.beam_width),
            ..BundleSettings::default()
        }
    }
}

/// The `L` dividing the overlaps: the beam crossing length `2σ`.
pub fn interaction_length(laser: &LaserConfig) -> f64 {
    2.0 * laser.beam_width
}

/// Everything that fixes a matrix element apart from the channel indices.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeContext {
    pub electron: ElectronConfig,
    pub laser: LaserConfig,
    pub grid: AmplitudeGrid,
    pub policy: TruncationPolicy,
    pub recoil: RecoilConvention,
    pub bounds: TruncationBounds,
}

impl AmplitudeContext {
    pub fn new(electron: ElectronConfig, laser: LaserConfig, grid: AmplitudeGrid, policy: TruncationPolicy) -> Result<Self> {
        grid.validate()?;
        crate::field::check_slow_envelope(&laser, &electron)?;
        let bounds = policy.bounds(&electron, &laser);
        Ok(Self {
            electron,
            laser,
            grid,
            policy,
            recoil: RecoilConvention::Peak,
            bounds,
        })
    }

    pub fn with_recoil(mut self, recoil: RecoilConvention) -> Self {
        self.recoil = recoil;
        self
    }

    /// Channel wave for `j` photons absorbed at off-shell offset `offset` (J).
    pub fn wave(&self, j: i32, offset: f64) -> WkbWave {
        let (a, b) = self.grid.x_bounds(&self.laser);
        let energy = ChannelEnergy {
            channel_energy_x: volkov::channel_energy_x(j, offset, &self.electron, &self.laser),
            recoil: self.recoil,
            absorbed: j,
        };
        WkbWave::new(&self.laser, energy, a, b, self.grid.clamp_fraction * self.electron.momentum_x())
    }

    /// Final x-momentum for net order `j_pp`, `None` when closed.
    pub fn final_momentum(&self, j_pp: i32) -> Option<f64> {
        let e = volkov::final_energy(j_pp, &self.electron, &self.laser);
        (e >= 0.0).then(|| (2.0 * crate::units::ELECTRON_MASS * e).sqrt())
    }
}

/// Shared per-point data.
pub struct NodeData {
    x: f64,
    momentum: C64,
    phase: C64,
    prefactor: C64,
    clamped: bool,
    table: BesselTable,
}

#[derive(Debug, Clone, Copy)]
enum Side {
    /// Overlap with the incident plane wave; `n = j`.
    Entrance { n: i32, p: f64 },
    /// Overlap with the final plane wave; `n = j'`.
    Exit { n: i32, p: f64 },
}

/// All overlaps of one intermediate channel, evaluated on shared panels.
struct ChannelIntegrands<'a> {
    wave: &'a WkbWave,
    bounds: &'a TruncationBounds,
    sides: Vec<Side>,
}

impl OscillatoryBundle for ChannelIntegrands<'_> {
    type Node = NodeData;

    fn len(&self) -> usize {
        self.sides.len()
    }

    fn node(&self, x: f64) -> NodeData {
        let state = self.wave.state(x);
        let (prefactor, clamped) = self.wave.prefactor(state.momentum);
        let (eta, u) = crate::field::bessel_arguments_from(state.ponderomotive, state.momentum, self.wave.laser());
        let mut table = BesselTable::new(self.bounds);
        table.fill(eta, u);
        NodeData {
            x,
            momentum: state.momentum,
            phase: self.wave.phase(x),
            prefactor,
            clamped,
            table,
        }
    }

    fn term(&self, node: &NodeData, k: usize) -> Term {
        match self.sides[k] {
            Side::Entrance { n, p } => {
                let b = node.table.combined(n, self.bounds) - kronecker(n);
                Term {
                    amplitude: b * node.prefactor,
                    phase: node.phase - p * node.x / HBAR,
                    rate: (node.momentum - p) / HBAR,
                }
            }
            Side::Exit { n, p } => {
                let b = node.table.combined(n, self.bounds) - kronecker(n);
                Term {
                    amplitude: b * node.prefactor.conj(),
                    phase: p * node.x / HBAR - node.phase.conj(),
                    rate: (p - node.momentum.conj()) / HBAR,
                }
            }
        }
    }

    fn flagged(&self, node: &NodeData) -> bool {
        node.clamped
    }
}

#[inline]
fn kronecker(n: i32) -> f64 {
    if n == 0 {
        1.0
    } else {
        0.0
    }
}

fn segments(wave: &WkbWave) -> Vec<Segment> {
    let (a, b) = wave.bounds();
    let mut cuts = vec![a];
    cuts.extend(wave.turning_points().iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    cuts.windows(2)
        .map(|w| {
            let singular_left = w[0] != a;
            let singular_right = w[1] != b;
            Segment {
                a: w[0],
                b: w[1],
                singular_left,
                singular_right,
                kink_left: if singular_left { wave.clamp_radius(w[0], 1.0) } else { 0.0 },
                kink_right: if singular_right { wave.clamp_radius(w[1], -1.0) } else { 0.0 },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OverlapDiagnostics {
    pub converged: bool,
    /// Largest quadrature error estimate among the overlaps, normalised like the overlaps.
    pub max_error: f64,
    pub gl_panels: usize,
    pub levin_panels: usize,
    pub clamped_nodes: usize,
    pub levels: u32,
}

impl OverlapDiagnostics {
    fn from_bundle(d: &BundleDiagnostics, max_error: f64) -> Self {
        Self {
            converged: d.converged,
            max_error,
            gl_panels: d.gl_panels,
            levin_panels: d.levin_panels,
            clamped_nodes: d.flagged_nodes,
            levels: d.levels,
        }
    }

    pub fn merge(&mut self, other: &OverlapDiagnostics) {
        self.converged &= other.converged;
        self.max_error = self.max_error.max(other.max_error);
        self.gl_panels += other.gl_panels;
        self.levin_panels += other.levin_panels;
        self.clamped_nodes += other.clamped_nodes;
        self.levels = self.levels.max(other.levels);
    }
}

/// Entrance overlap and the exit overlaps for a list of net orders, all for
/// one intermediate channel `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelOverlaps {
    pub j: i32,
    pub entrance: C64,
    /// `(j_pp, out(j, j − j_pp))`.
    pub exits: Vec<(i32, C64)>,
    pub diagnostics: OverlapDiagnostics,
}

impl ChannelOverlaps {
    pub fn exit(&self, j_pp: i32) -> Option<C64> {
        self.exits.iter().find(|(k, _)| *k == j_pp).map(|(_, v)| *v)
    }

    /// `m(j, j_pp) = in(j) · out(j, j − j_pp)`; zero when not computed.
    pub fn matrix_element(&self, j_pp: i32) -> C64 {
        self.exit(j_pp).map(|o| self.entrance * o).unwrap_or_default()
    }
}

/// Computes `in(j)` and `out(j, j − j_pp)` for every requested open `j_pp`.
/// Channels closed far from the beam carry no incident flux and give zeros.
pub fn channel_overlaps(ctx: &AmplitudeContext, j: i32, offset: f64, orders: &[i32]) -> ChannelOverlaps {
    overlaps(ctx, j, offset, orders, ctx.grid.prune_threshold)
}

fn overlaps(ctx: &AmplitudeContext, j: i32, offset: f64, orders: &[i32], prune: f64) -> ChannelOverlaps {
    let wave = ctx.wave(j, offset);
    let mut exits: Vec<(i32, C64)> = Vec::new();
    if !wave.is_open() {
        return ChannelOverlaps {
            j,
            entrance: C64::new(0.0, 0.0),
            exits: orders.iter().map(|&o| (o, C64::new(0.0, 0.0))).collect(),
            diagnostics: OverlapDiagnostics {
                converged: true,
                ..Default::default()
            },
        };
    }
    let momentum = orders
        .iter()
        .filter_map(|&o| ctx.final_momentum(o))
        .fold(ctx.electron.momentum_x(), f64::max);
    let settings = ctx.grid.bundle_settings(&ctx.laser, momentum);
    let segs = segments(&wave);
    let length = interaction_length(&ctx.laser);
    let entrance_bundle = ChannelIntegrands {
        wave: &wave,
        bounds: &ctx.bounds,
        sides: vec![Side::Entrance {
            n: j,
            p: ctx.electron.momentum_x(),
        }],
    };
    let first = integrate_bundle(&entrance_bundle, &segs, &settings);
    let entrance = kronecker(j) + first.values[0] / length;
    let mut diagnostics = OverlapDiagnostics::from_bundle(&first.diagnostics, first.errors[0] / length);

    let mut sides = Vec::new();
    let mut slots = Vec::new();
    let keep = entrance.norm() >= prune;
    for &j_pp in orders {
        let jp = j - j_pp;
        match ctx.final_momentum(j_pp) {
            Some(p) if keep && jp.abs() <= ctx.bounds.max_j => {
                slots.push(Some(sides.len()));
                sides.push(Side::Exit { n: jp, p });
            }
            _ => slots.push(None),
        }
    }
    let values = if sides.is_empty() {
        Vec::new()
    } else {
        let bundle = ChannelIntegrands {
            wave: &wave,
            bounds: &ctx.bounds,
            sides,
        };
        let result = integrate_bundle(&bundle, &segs, &settings);
        let max_error = result.errors.iter().fold(0.0f64, |a, &e| a.max(e)) / length;
        diagnostics.merge(&OverlapDiagnostics::from_bundle(&result.diagnostics, max_error));
        result.values
    };
    let tau = wave.transmission();
    for (&j_pp, slot) in orders.iter().zip(&slots) {
        let value = match slot {
            Some(k) => {
                let free = if j == j_pp { tau.conj() } else { C64::new(0.0, 0.0) };
                free + values[*k] / length
            }
            None => C64::new(0.0, 0.0),
        };
        exits.push((j_pp, value));
    }
    ChannelOverlaps {
        j,
        entrance,
        exits,
        diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overlap {
    pub value: C64,
    pub diagnostics: OverlapDiagnostics,
}

/// `in(j)` at off-shell offset `offset` (J).
pub fn entrance_braket(ch: &Channel, offset: f64, ctx: &AmplitudeContext) -> Overlap {
    let r = channel_overlaps(ctx, ch.j, offset, &[]);
    Overlap {
        value: r.entrance,
        diagnostics: r.diagnostics,
    }
}

/// `out(j, j − j_pp)` at off-shell offset `offset` (J). Closed final states are rejected.
pub fn exit_braket(ch: &Channel, offset: f64, ctx: &AmplitudeContext) -> Result<Overlap> {
    check_open(ch.j_pp, ctx)?;
    let r = overlaps(ctx, ch.j, offset, &[ch.j_pp], 0.0);
    Ok(Overlap {
        value: r.exits[0].1,
        diagnostics: r.diagnostics,
    })
}

fn check_open(j_pp: i32, ctx: &AmplitudeContext) -> Result<()> {
    if ctx.final_momentum(j_pp).is_none() {
        return Err(Error::ClosedChannel {
            j_pp,
            final_energy_ev: crate::units::joule_to_ev(volkov::final_energy(j_pp, &ctx.electron, &ctx.laser)),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixElement {
    pub value: C64,
    pub j: i32,
    pub j_pp: i32,
    /// `E_µ − E_i`, J.
    pub offset: f64,
    pub diagnostics: OverlapDiagnostics,
}

/// `m(j, j_pp; ΔE) = in(j) · out(j, j − j_pp)`.
pub fn matrix_element(j: i32, j_pp: i32, offset: f64, ctx: &AmplitudeContext) -> Result<MatrixElement> {
    check_open(j_pp, ctx)?;
    let r = channel_overlaps(ctx, j, offset, &[j_pp]);
    Ok(MatrixElement {
        value: r.matrix_element(j_pp),
        j,
        j_pp,
        offset,
        diagnostics: r.diagnostics,
    })
}
