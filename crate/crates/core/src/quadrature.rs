//! Quadrature for smooth and highly oscillatory integrands.
//!
//! Two layers:
//! * [`oscillatory_integral`], composite Gauss–Legendre with panel halving for
//!   a single closure;
//! * [`integrate_bundle`], an adaptive engine for families of integrands of the
//!   form `A_k(x) exp(i φ_k(x))` sharing expensive per-point data. Panels where
//!   the phase is fast and monotone use Levin collocation; everything else,
//!   including graded pieces at square-root endpoints, uses Gauss–Legendre.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_CACHED: usize = 64;

/// Gauss–Legendre rule on `[-1, 1]`, cached for `n ≤ 64`.
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    assert!((1..=MAX_CACHED).contains(&n), "unsupported Gauss–Legendre order {n}");
    #[allow(clippy::declare_interior_mutable_const)]
    const EMPTY: OnceLock<GaussRule> = OnceLock::new();
    static CACHE: [OnceLock<GaussRule>; MAX_CACHED + 1] = [EMPTY; MAX_CACHED + 1];
    CACHE[n].get_or_init(|| compute_gauss_legendre(n))
}

fn compute_gauss_legendre(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Controls for [`oscillatory_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct QuadratureGrid {
    pub base_panels: usize,
    pub refinement_limit: u32,
    pub tolerance: f64,
    pub absolute_floor: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self {
            base_panels: 64,
            refinement_limit: 12,
            tolerance: 1e-10,
            absolute_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: C64,
    pub error_estimate: f64,
    pub panels: usize,
    pub converged: bool,
}

fn composite_gl(f: &impl Fn(f64) -> C64, a: f64, b: f64, panels: usize) -> C64 {
    let rule = gauss_legendre(16);
    let h = (b - a) / panels as f64;
    let mut sum = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mut part = C64::new(0.0, 0.0);
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            part += f(lo + 0.5 * h * (t + 1.0)) * w;
        }
        sum += part * (0.5 * h);
    }
    sum
}

/// `∫_a^b f dx` by 16-point Gauss–Legendre panels, halved until two
/// successive estimates agree to `tolerance` (relative) or `absolute_floor`.
pub fn oscillatory_integral(f: impl Fn(f64) -> C64, a: f64, b: f64, grid: &QuadratureGrid) -> QuadratureResult {
    let mut panels = grid.base_panels.max(1);
    let mut prev = composite_gl(&f, a, b, panels);
    for _ in 0..grid.refinement_limit {
        panels *= 2;
        let next = composite_gl(&f, a, b, panels);
        let err = (next - prev).norm();
        if err <= grid.tolerance * next.norm() + grid.absolute_floor {
            return QuadratureResult {
                value: next,
                error_estimate: err,
                panels,
                converged: true,
            };
        }
        prev = next;
    }
    QuadratureResult {
        value: prev,
        error_estimate: f64::INFINITY,
        panels,
        converged: false,
    }
}

/// Chebyshev–Lobatto points `cos(πi/n)` and the differentiation matrix on them.
struct Chebyshev {
    points: Vec<f64>,
    diff: Vec<f64>,
}

const LEVIN_DEGREE: usize = 16;

fn chebyshev() -> &'static Chebyshev {
    static CHEB: OnceLock<Chebyshev> = OnceLock::new();
    CHEB.get_or_init(|| {
        let n = LEVIN_DEGREE;
        let points: Vec<f64> = (0..=n).map(|i| (PI * i as f64 / n as f64).cos()).collect();
        let c = |i: usize| {
            let edge = if i == 0 || i == n { 2.0 } else { 1.0 };
            if i % 2 == 0 {
                edge
            } else {
                -edge
            }
        };
        let m = n + 1;
        let mut diff = vec![0.0; m * m];
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                if i != j {
                    let v = c(i) / c(j) / (points[i] - points[j]);
                    diff[i * m + j] = v;
                    row += v;
                }
            }
            diff[i * m + i] = -row;
        }
        Chebyshev { points, diff }
    })
}

/// Solves the dense complex system in place by partial-pivot elimination.
/// Returns `false` if it is singular.
fn solve_dense(a: &mut [C64], b: &mut [C64], n: usize) -> bool {
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].norm();
        for r in col + 1..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let inv = a[col * n + col].inv();
        for r in col + 1..n {
            let factor = a[r * n + col] * inv;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= factor * v;
            }
            let v = b[col];
            b[r] -= factor * v;
        }
    }
    for r in (0..n).rev() {
        let mut acc = b[r];
        for k in r + 1..n {
            acc -= a[r * n + k] * b[k];
        }
        b[r] = acc / a[r * n + r];
    }
    b.iter().all(|v| v.is_finite())
}

/// One term of an oscillatory family at a point.
#[derive(Debug, Clone, Copy)]
pub struct Term {
    pub amplitude: C64,
    /// The integrand is `amplitude · exp(i · phase)`.
    pub phase: C64,
    /// `dφ/dx`.
    pub rate: C64,
}

/// A family of integrands `A_k(x) exp(i φ_k(x))` sharing per-point data.
pub trait OscillatoryBundle: Sync {
    type Node;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn node(&self, x: f64) -> Self::Node;
    fn term(&self, node: &Self::Node, k: usize) -> Term;
    /// Whether the point needed a regularisation (counted in the diagnostics).
    fn flagged(&self, _node: &Self::Node) -> bool {
        false
    }
}

/// Interval between breakpoints; flagged ends carry a square-root type singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub singular_left: bool,
    pub singular_right: bool,
    /// Distance from a singular end to a derivative kink in the integrand, 0 when there is none.
    pub kink_left: f64,
    pub kink_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct BundleSettings {
    /// Relative convergence tolerance between successive refinement levels.
    pub tolerance: f64,
    /// Absolute convergence floor, same units as the integrals.
    pub absolute_floor: f64,
    /// Panel length at level 0 on regular pieces, m.
    pub base_panel: f64,
    /// Largest number of refinement levels tried.
    pub refinement_limit: u32,
    /// Phase cycles allowed on one Gauss–Legendre panel at level 0.
    pub gl_cycles: f64,
    /// Minimum phase cycles on a panel for Levin collocation.
    pub levin_cycles: f64,
    /// Maximum ratio of largest to smallest `|φ'|` on a Levin panel.
    pub levin_rate_ratio: f64,
    pub use_levin: bool,
    /// Length of the graded pieces next to singular ends, m.
    pub grade_length: f64,
    /// Recursion depth cap on one panel.
    pub max_depth: u32,
}

impl Default for BundleSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            absolute_floor: 1e-30,
            base_panel: 6e-6 / 16.0,
            refinement_limit: 6,
            gl_cycles: 2.5,
            levin_cycles: 4.0,
            levin_rate_ratio: 4.0,
            use_levin: true,
            grade_length: 50e-9,
            max_depth: 40,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BundleDiagnostics {
    pub levels: u32,
    pub converged: bool,
    pub gl_panels: usize,
    pub levin_panels: usize,
    pub flagged_nodes: usize,
    pub depth_capped_panels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleResult {
    pub values: Vec<C64>,
    pub errors: Vec<f64>,
    pub diagnostics: BundleDiagnostics,
}

#[derive(Clone, Copy)]
enum Map {
    Identity,
    /// `x = origin + sign · len · u⁴`, `u ∈ [0, 1]`.
    Graded { origin: f64, sign: f64, len: f64 },
}

impl Map {
    #[inline]
    fn x(&self, u: f64) -> f64 {
        match *self {
            Map::Identity => u,
            Map::Graded { origin, sign, len } => origin + sign * len * u * u * u * u,
        }
    }

    #[inline]
    fn jacobian(&self, u: f64) -> f64 {
        match *self {
            Map::Identity => 1.0,
            Map::Graded { len, .. } => 4.0 * len * u * u * u,
        }
    }
}

#[derive(Clone, Copy)]
struct Piece {
    map: Map,
    u0: f64,
    u1: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Choice {
    Skip,
    Gauss,
    Levin,
    Split,
}

struct Pass<'a, B: OscillatoryBundle> {
    bundle: &'a B,
    settings: &'a BundleSettings,
    gl_cycles: f64,
    levin_cycles: f64,
    sums: Vec<C64>,
    diag: BundleDiagnostics,
}

impl<B: OscillatoryBundle> Pass<'_, B> {
    fn panel(&mut self, map: Map, u0: f64, u1: f64, depth: u32) {
        let cheb = chebyshev();
        let m = LEVIN_DEGREE + 1;
        let n_terms = self.bundle.len();
        let h = u1 - u0;
        let mut nodes = Vec::with_capacity(m);
        let mut terms = vec![
            Term {
                amplitude: C64::new(0.0, 0.0),
                phase: C64::new(0.0, 0.0),
                rate: C64::new(0.0, 0.0)
            };
            m * n_terms
        ];
        for (i, &t) in cheb.points.iter().enumerate() {
            let u = u0 + 0.5 * h * (t + 1.0);
            let node = self.bundle.node(map.x(u));
            for k in 0..n_terms {
                terms[i * n_terms + k] = self.bundle.term(&node, k);
            }
            nodes.push(node);
        }

        let mut choices = vec![Choice::Skip; n_terms];
        let identity = matches!(map, Map::Identity);
        for (k, choice) in choices.iter_mut().enumerate() {
            let mut max_rate = 0.0f64;
            let mut min_rate = f64::INFINITY;
            let mut envelope = 0.0f64;
            for i in 0..m {
                let u = u0 + 0.5 * h * (cheb.points[i] + 1.0);
                let jac = map.jacobian(u);
                let t = terms[i * n_terms + k];
                let r = t.rate.norm() * jac;
                max_rate = max_rate.max(r);
                min_rate = min_rate.min(r);
                let mag = t.amplitude.norm() * (-t.phase.im).exp() * jac;
                envelope = envelope.max(mag);
            }
            *choice = if !envelope.is_finite() {
                Choice::Split
            } else if envelope * h < 1e-6 * self.settings.absolute_floor {
                Choice::Skip
            } else if max_rate * h <= 2.0 * PI * self.gl_cycles {
                Choice::Gauss
            } else if identity
                && self.settings.use_levin
                && min_rate * h >= 2.0 * PI * self.levin_cycles
                && max_rate <= self.settings.levin_rate_ratio * min_rate
            {
                Choice::Levin
            } else {
                Choice::Split
            };
        }

        if choices.contains(&Choice::Split) {
            if depth < self.settings.max_depth {
                let mid = 0.5 * (u0 + u1);
                self.panel(map, u0, mid, depth + 1);
                self.panel(map, mid, u1, depth + 1);
                return;
            }
            self.diag.depth_capped_panels += 1;
            for c in choices.iter_mut() {
                if *c == Choice::Split {
                    *c = Choice::Gauss;
                }
            }
        }

        if choices.contains(&Choice::Levin) {
            self.diag.levin_panels += 1;
            self.diag.flagged_nodes += nodes.iter().filter(|n| self.bundle.flagged(n)).count();
            let scale = 2.0 / h;
            let mut matrix = vec![C64::new(0.0, 0.0); m * m];
            let mut rhs = vec![C64::new(0.0, 0.0); m];
            for k in 0..n_terms {
                if choices[k] != Choice::Levin {
                    continue;
                }
                for i in 0..m {
                    for j in 0..m {
                        matrix[i * m + j] = C64::new(cheb.diff[i * m + j] * scale, 0.0);
                    }
                    let t = terms[i * n_terms + k];
                    matrix[i * m + i] += C64::i() * t.rate;
                    rhs[i] = t.amplitude;
                }
                if solve_dense(&mut matrix, &mut rhs, m) {
                    let top = terms[k];
                    let bottom = terms[(m - 1) * n_terms + k];
                    self.sums[k] += rhs[0] * (C64::i() * top.phase).exp() - rhs[m - 1] * (C64::i() * bottom.phase).exp();
                } else {
                    choices[k] = Choice::Gauss;
                }
            }
        }

        if choices.contains(&Choice::Gauss) {
            self.diag.gl_panels += 1;
            let rule = gauss_legendre(16);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let u = u0 + 0.5 * h * (t + 1.0);
                let node = self.bundle.node(map.x(u));
                if self.bundle.flagged(&node) {
                    self.diag.flagged_nodes += 1;
                }
                let weight = 0.5 * h * w * map.jacobian(u);
                for k in (0..n_terms).filter(|&k| choices[k] == Choice::Gauss) {
                    let term = self.bundle.term(&node, k);
                    self.sums[k] += term.amplitude * (C64::i() * term.phase).exp() * weight;
                }
            }
        }
    }
}

fn pieces(segments: &[Segment], settings: &BundleSettings) -> Vec<Piece> {
    let mut out = Vec::new();
    for s in segments {
        if s.b <= s.a {
            continue;
        }
        let len = s.b - s.a;
        let ends = s.singular_left as u32 + s.singular_right as u32;
        let d = settings.grade_length.min(len / (2.0 * ends.max(1) as f64));
        let mut a = s.a;
        let mut b = s.b;
        if s.singular_left {
            graded(&mut out, s.a, 1.0, d, s.kink_left);
            a += d;
        }
        if s.singular_right {
            graded(&mut out, s.b, -1.0, d, s.kink_right);
            b -= d;
        }
        if b > a {
            out.push(Piece {
                map: Map::Identity,
                u0: a,
                u1: b,
            });
        }
    }
    out
}

// a kink inside the graded piece becomes a panel boundary in u
fn graded(out: &mut Vec<Piece>, origin: f64, sign: f64, len: f64, kink: f64) {
    let map = Map::Graded { origin, sign, len };
    let uk = (kink / len).powf(0.25);
    if kink > 0.0 && uk < 1.0 {
        out.push(Piece { map, u0: 0.0, u1: uk });
        out.push(Piece { map, u0: uk, u1: 1.0 });
    } else {
        out.push(Piece { map, u0: 0.0, u1: 1.0 });
    }
}

fn run_level<B: OscillatoryBundle>(bundle: &B, pieces: &[Piece], settings: &BundleSettings, level: u32) -> (Vec<C64>, BundleDiagnostics) {
    let factor = (1u64 << level) as f64;
    let mut pass = Pass {
        bundle,
        settings,
        gl_cycles: settings.gl_cycles / factor,
        levin_cycles: (settings.levin_cycles / factor).max(1.0),
        sums: vec![C64::new(0.0, 0.0); bundle.len()],
        diag: BundleDiagnostics::default(),
    };
    for p in pieces {
        let count = match p.map {
            Map::Identity => (((p.u1 - p.u0) / settings.base_panel * factor).ceil() as usize).max(1),
            Map::Graded { .. } => 1usize << level,
        };
        let h = (p.u1 - p.u0) / count as f64;
        for i in 0..count {
            let lo = p.u0 + h * i as f64;
            let hi = if i + 1 == count { p.u1 } else { lo + h };
            pass.panel(p.map, lo, hi, 0);
        }
    }
    (pass.sums, pass.diag)
}

/// Integrates every member of the bundle over the union of `segments`,
/// refining all panels together until successive levels agree.
pub fn integrate_bundle<B: OscillatoryBundle>(bundle: &B, segments: &[Segment], settings: &BundleSettings) -> BundleResult {
    let pieces = pieces(segments, settings);
    let (mut prev, _) = run_level(bundle, &pieces, settings, 0);
    let mut errors = vec![f64::INFINITY; bundle.len()];
    for level in 1..=settings.refinement_limit.max(1) {
        let (next, mut diag) = run_level(bundle, &pieces, settings, level);
        let mut converged = true;
        for k in 0..next.len() {
            errors[k] = (next[k] - prev[k]).norm();
            if !(errors[k] <= settings.tolerance * next[k].norm() + settings.absolute_floor) {
                converged = false;
            }
        }
        diag.levels = level;
        diag.converged = converged;
        if converged || level == settings.refinement_limit.max(1) {
            return BundleResult {
                values: next,
                errors,
                diagnostics: diag,
            };
        }
        prev = next;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 24, 64] {
            let r = gauss_legendre(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn simple_integral_converges() {
        let r = oscillatory_integral(|x| C64::new(0.0, 50.0 * x).exp(), 0.0, 1.0, &QuadratureGrid::default());
        let exact = (C64::new(0.0, 50.0).exp() - 1.0) / C64::new(0.0, 50.0);
        assert!(r.converged);
        assert!((r.value - exact).norm() < 1e-12);
    }

    struct Chirp {
        freq: f64,
    }

    impl OscillatoryBundle for Chirp {
        type Node = f64;
        fn len(&self) -> usize {
            2
        }
        fn node(&self, x: f64) -> f64 {
            x
        }
        fn term(&self, x: &f64, k: usize) -> Term {
            let x = *x;
            if k == 0 {
                // smooth Gaussian times a linear phase
                Term {
                    amplitude: C64::new((-x * x).exp(), 0.0),
                    phase: C64::new(self.freq * x, 0.0),
                    rate: C64::new(self.freq, 0.0),
                }
            } else {
                // √x endpoint behaviour with a quadratic phase
                Term {
                    amplitude: C64::new(x.abs().sqrt(), 0.0),
                    phase: C64::new(self.freq * x * x, 0.0),
                    rate: C64::new(2.0 * self.freq * x, 0.0),
                }
            }
        }
    }

    #[test]
    fn bundle_matches_closed_forms() {
        let freq = 300.0;
        let segments = [Segment {
            a: 0.0,
            b: 6.0,
            singular_left: true,
            singular_right: false,
            kink_left: 0.0,
            kink_right: 0.0,
        }];
        let settings = BundleSettings {
            base_panel: 0.5,
            grade_length: 0.05,
            tolerance: 1e-10,
            absolute_floor: 1e-14,
            refinement_limit: 8,
            ..BundleSettings::default()
        };
        let r = integrate_bundle(&Chirp { freq }, &segments, &settings);
        assert!(r.diagnostics.converged, "{:?}", r.diagnostics);
        assert!(r.diagnostics.levin_panels > 0);
        // reference by brute force with many Gauss panels (after x = t² to remove the root)
        let fine = QuadratureGrid {
            base_panels: 4000,
            refinement_limit: 3,
            tolerance: 1e-12,
            absolute_floor: 0.0,
        };
        let g0 = oscillatory_integral(|x| C64::new((-x * x).exp(), 0.0) * C64::new(0.0, freq * x).exp(), 0.0, 6.0, &fine);
        let g1 = oscillatory_integral(
            |t| C64::new(2.0 * t * t, 0.0) * C64::new(0.0, freq * t.powi(4)).exp(),
            0.0,
            6f64.sqrt(),
            &fine,
        );
        assert!((r.values[0] - g0.value).norm() < 1e-9, "{} vs {}", r.values[0], g0.value);
        assert!((r.values[1] - g1.value).norm() < 1e-9, "{} vs {}", r.values[1], g1.value);
    }

    #[test]
    fn levin_and_gauss_agree() {
        let segments = [
            Segment {
                a: -3.0,
                b: 0.0,
                singular_left: false,
                singular_right: true,
                kink_left: 0.0,
                kink_right: 0.0,
            },
            Segment {
                a: 0.0,
                b: 3.0,
                singular_left: true,
                singular_right: false,
                kink_left: 0.0,
                kink_right: 0.0,
            },
        ];
        let base = BundleSettings {
            base_panel: 0.25,
            grade_length: 0.05,
            tolerance: 1e-11,
            absolute_floor: 1e-15,
            refinement_limit: 8,
            ..BundleSettings::default()
        };
        let chirp = Chirp { freq: 400.0 };
        let with = integrate_bundle(&chirp, &segments, &base);
        let without = integrate_bundle(&chirp, &segments, &BundleSettings { use_levin: false, ..base });
        assert!(with.diagnostics.levin_panels > 0, "{:?}", with.diagnostics);
        assert_eq!(without.diagnostics.levin_panels, 0);
        let fine = QuadratureGrid {
            base_panels: 2000,
            refinement_limit: 3,
            tolerance: 1e-12,
            absolute_floor: 0.0,
        };
        let reference = oscillatory_integral(|x| C64::new((-x * x).exp(), 0.0) * C64::new(0.0, 400.0 * x).exp(), -3.0, 3.0, &fine);
        assert!((without.values[0] - reference.value).norm() < 1e-12);
        for k in 0..2 {
            assert!((with.values[k] - without.values[k]).norm() < 1e-10, "k={k}");
        }
    }
}
