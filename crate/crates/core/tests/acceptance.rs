//! End-to-end acceptance checks. Runs as a plain binary (no libtest harness)
//! so that every criterion prints one PASS/FAIL line in `cargo test` output.
//!
//! Set `ACCEPTANCE_ONLY=2,5` to run a subset.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C64;

use ponderotunnel::amplitude::{entrance_braket, exit_braket, interaction_length, matrix_element, AmplitudeContext, AmplitudeGrid};
use ponderotunnel::baselines::{classical_deflection, static_transmission_exact, static_transmission_wkb, BarrierResolution, IntegratorSettings};
use ponderotunnel::bessel::bessel_j;
use ponderotunnel::field::{bessel_arguments, ElectronConfig, LaserConfig};
use ponderotunnel::rate::{energy_spectrum, local_maxima, moller_amplitudes, resonance_sweep, RateConfig, RateMode, RateResult};
use ponderotunnel::volkov::{channel_energy_x, Channel, TruncationPolicy};

/// Criteria known to fail under the specified model; see the README.
const DOCUMENTED_RED: &[u32] = &[2, 4, 7];

const E0: f64 = 0.54;
const UP_FIG2: f64 = 2.9;

// independent constants for the line-energy check (exact SI values where defined)
const H: f64 = 6.626_070_15e-34;
const HBAR: f64 = H / (2.0 * PI);
const C: f64 = 299_792_458.0;
const ME: f64 = 9.109_383_7015e-31;
const QE: f64 = 1.602_176_634e-19;
const LAMBDA: f64 = 1.064e-6;

struct Outcome {
    id: u32,
    pass: bool,
}

fn report(id: u32, name: &str, pass: bool, detail: String) -> Outcome {
    println!("criterion {id} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, pass }
}

fn within(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * b.abs() + abs
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let cfg = RateConfig::reference(0.0);
    let r = energy_spectrum(&cfg).unwrap();
    let contributing: Vec<_> = r.open_channels().filter(|c| c.rate > 0.0).collect();
    let free = cfg.free_rate();
    let single = contributing.len() == 1 && contributing[0].j_pp == 0;
    let rate_ok = single && within(contributing[0].rate, free, 1e-6, 0.0);
    let inelastic: Vec<i32> = (1..=5).collect();
    let (amps, _) = moller_amplitudes(&cfg, &inelastic).unwrap();
    let worst = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    let pass = single && rate_ok && worst < 1e-10 && secs < 1.0;
    let rate = contributing.first().map(|c| c.rate / free - 1.0).unwrap_or(f64::NAN);
    report(
        1,
        "zero-field completeness",
        pass,
        format!("channels={} rate/(4/T)-1={rate:.2e} max|inelastic|={worst:.2e} t={secs:.3}s", contributing.len()),
    )
}

fn criterion_2(r: &RateResult, secs: f64) -> Outcome {
    let hw = H * C / LAMBDA / QE;
    let hk = H / LAMBDA;
    let mut max_line_err = 0.0f64;
    for c in r.open_channels() {
        let j = c.j_pp as f64;
        let recoil = (j * hk).powi(2) / (2.0 * ME) / QE;
        let expected = E0 + j * hw - recoil;
        max_line_err = max_line_err.max(((c.final_energy_ev - expected) / expected).abs());
    }
    let open: Vec<_> = r.open_channels().collect();
    let threshold = open.iter().find(|c| c.final_energy_ev > UP_FIG2).map(|c| c.j_pp).unwrap();
    let argmax = open.iter().max_by(|a, b| a.rate.total_cmp(&b.rate)).map(|c| c.j_pp).unwrap();
    let decays = (threshold..threshold + 3).all(|j| match (r.channel(j), r.channel(j + 1)) {
        (Some(a), Some(b)) => b.rate < a.rate,
        _ => false,
    });
    let pass = max_line_err < 1e-14 && argmax == threshold && decays && secs < 600.0;
    let rates: Vec<String> = open.iter().map(|c| format!("{}:{:.3e}", c.j_pp, c.rate)).collect();
    report(
        2,
        "spectral comb",
        pass,
        format!(
            "line rel err={max_line_err:.1e} threshold j_pp={threshold} argmax j_pp={argmax} decay after threshold={decays} t={secs:.1}s rates=[{}]",
            rates.join(" ")
        ),
    )
}

fn criterion_3(r: &RateResult) -> Outcome {
    let ratio = r.asymmetry();
    report(3, "diffraction asymmetry", ratio < 0.05, format!("neg/pos={ratio:.3e}"))
}

fn sweep(steps: usize) -> (Vec<(f64, f64)>, f64) {
    let t = Instant::now();
    let points = resonance_sweep(0.5, 4.5, steps, &RateConfig::reference(UP_FIG2)).unwrap();
    (points.iter().map(|p| (p.u_p, p.total_rate)).collect(), t.elapsed().as_secs_f64())
}

fn criterion_4() -> Outcome {
    let (smoke, smoke_secs) = sweep(21);
    let (full, secs) = sweep(81);
    let rates: Vec<f64> = full.iter().map(|p| p.1).collect();
    let finite = rates.iter().all(|r| r.is_finite()) && smoke.iter().all(|p| p.1.is_finite());
    let maxima: Vec<f64> = local_maxima(&rates).into_iter().map(|i| full[i].0).collect();
    let near_integer = !maxima.is_empty() && maxima.iter().all(|u| (u - u.round()).abs() <= 0.05 + 1e-12);
    let pass = finite && near_integer && secs < 7200.0 && smoke_secs < 600.0;
    let curve: Vec<String> = full.iter().map(|(u, r)| format!("{u:.2}:{r:.3e}")).collect();
    report(
        4,
        "resonance sweep",
        pass,
        format!(
            "maxima at u_p={maxima:?} finite={finite} t81={secs:.0}s t21={smoke_secs:.0}s curve=[{}]",
            curve.join(" ")
        ),
    )
}

fn criterion_5(total_rate: f64) -> Outcome {
    let t = Instant::now();
    let res = BarrierResolution::default();
    let mut worst = 0.0f64;
    let mut compared = 0;
    let beams = [LaserConfig::reference(UP_FIG2), LaserConfig::new(LAMBDA, 0.3e-6, UP_FIG2).unwrap()];
    for laser in &beams {
        for e in [0.3, 0.54, 1.0, 1.5, 2.0, 2.5, 2.8] {
            let exact = static_transmission_exact(e, laser, &res).unwrap();
            let wkb = static_transmission_wkb(e, laser, &res).unwrap();
            if exact.log_transmission.abs() > 50.0 {
                compared += 1;
                worst = worst.max(((exact.log_transmission - wkb.log_transmission) / exact.log_transmission).abs());
            }
        }
    }
    let cfg = RateConfig::reference(UP_FIG2);
    let static_e0 = static_transmission_exact(E0, &cfg.laser, &res).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let log10_ratio = (total_rate.ln() - cfg.free_rate().ln() - static_e0.log_transmission) / std::f64::consts::LN_10;
    let pass = compared > 0 && worst < 0.05 && log10_ratio > 100.0 && secs < 60.0;
    report(
        5,
        "static-barrier suppression",
        pass,
        format!("pairs={compared} worst rel diff={worst:.2e} log10(ratio)={log10_ratio:.4e} t={secs:.1}s"),
    )
}

/// Degree-7 smoothstep with vanishing first three derivatives at both ends.
fn sigmoid(u: f64) -> (f64, f64) {
    let g = u.powi(4) * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u.powi(3));
    let dg = 140.0 * (u * (1.0 - u)).powi(3);
    (g, dg)
}

#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: C64,
    carry: C64,
}

impl Compensated {
    fn add(&mut self, v: C64) {
        let part = |s: &mut f64, c: &mut f64, x: f64| {
            let t = *s + x;
            *c += if s.abs() >= x.abs() { (*s - t) + x } else { (x - t) + *s };
            *s = t;
        };
        part(&mut self.sum.re, &mut self.carry.re, v.re);
        part(&mut self.sum.im, &mut self.carry.im, v.im);
    }
    fn value(&self) -> C64 {
        self.sum + self.carry
    }
}

const THETA_POINTS: usize = 64;

/// Overlaps of channel `j` by a midpoint rule in smoothstep-mapped coordinates,
/// with `B_n` from its generating integral
/// `(1/2π)∫ exp(−inθ − iη cosθ − i(u/2) sin2θ) dθ`.
/// Returns `in(j)` and `out(j, j − j_pp)` for each `j_pp`.
fn oracle(ctx: &AmplitudeContext, j: i32, orders: &[i32]) -> (C64, Vec<C64>) {
    let wave = ctx.wave(j, 0.0);
    let laser = ctx.laser;
    let ce = channel_energy_x(j, 0.0, &ctx.electron, &laser);
    let pi = ctx.electron.momentum_x();
    let pf: Vec<f64> = orders.iter().map(|&o| ctx.final_momentum(o).unwrap()).collect();
    let mut ns = vec![j];
    ns.extend(orders.iter().map(|o| j - o));
    let twiddles: Vec<Vec<C64>> = ns
        .iter()
        .map(|&n| (0..THETA_POINTS).map(|k| C64::from_polar(1.0, -(n as f64) * 2.0 * PI * k as f64 / THETA_POINTS as f64)).collect())
        .collect();
    let trig: Vec<(f64, f64)> = (0..THETA_POINTS)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / THETA_POINTS as f64;
            (th.cos(), (2.0 * th).sin())
        })
        .collect();

    let (a, b) = ctx.grid.x_bounds(&laser);
    let mut cuts = vec![a];
    cuts.extend(wave.turning_points().iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);

    let mut sums = vec![Compensated::default(); 1 + orders.len()];
    let mut f = vec![C64::new(0.0, 0.0); THETA_POINTS];
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let len = hi - lo;
        let mut max_rate = 0.0f64;
        for k in 0..=2000 {
            let p = wave.momentum(lo + len * k as f64 / 2000.0).re;
            max_rate = max_rate.max((p - pi).abs());
            for q in &pf {
                max_rate = max_rate.max((q - p).abs());
            }
        }
        let cycles = max_rate / HBAR * len / (2.0 * PI);
        let n = ((64.0 * 2.2 * cycles).ceil() as usize).max(8192);
        for k in 0..n {
            let (g, dg) = sigmoid((k as f64 + 0.5) / n as f64);
            let x = lo + len * g;
            let w = len * dg / n as f64;
            let (psi, _) = wave.value(x);
            let (eta, u) = bessel_arguments(x, ce, &laser);
            for (fk, &(c, s2)) in f.iter_mut().zip(&trig) {
                *fk = (C64::new(0.0, -1.0) * (eta * c + 0.5 * u * s2)).exp();
            }
            for (i, tw) in twiddles.iter().enumerate() {
                let mut bn = C64::new(0.0, 0.0);
                for (fk, t) in f.iter().zip(tw) {
                    bn += fk * t;
                }
                bn /= THETA_POINTS as f64;
                if ns[i] == 0 {
                    bn -= 1.0;
                }
                let term = if i == 0 {
                    C64::from_polar(1.0, -pi * x / HBAR) * bn * psi
                } else {
                    C64::from_polar(1.0, pf[i - 1] * x / HBAR) * bn * psi.conj()
                };
                sums[i].add(term * w);
            }
        }
    }
    let l = interaction_length(&laser);
    let tau = wave.transmission();
    let entrance = if j == 0 { 1.0 } else { 0.0 } + sums[0].value() / l;
    let exits = (1..sums.len())
        .map(|i| {
            let delta = if ns[i] == 0 { tau.conj() } else { C64::new(0.0, 0.0) };
            delta + sums[i].value() / l
        })
        .collect();
    (entrance, exits)
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let electron = ElectronConfig::new(E0).unwrap();
    let orders = [0, 1, 2];
    let mut worst = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut count = 0;
    let mut all_ok = true;
    for up in [0.0, 0.5, UP_FIG2] {
        let ctx = AmplitudeContext::new(electron, LaserConfig::reference(up), AmplitudeGrid::default(), TruncationPolicy::default()).unwrap();
        // e^{iPx/ħ} carries an absolute phase rounding of about |Px/ħ|·ε, so smaller overlaps are noise
        let (_, edge) = ctx.grid.x_bounds(&ctx.laser);
        let floor = ctx.electron.momentum_x() * edge / HBAR * f64::EPSILON;
        for j in 0..=2 {
            let (o_in, o_out) = oracle(&ctx, j, &orders);
            let e_in = entrance_braket(&Channel::new(j, 0, 0, 0), 0.0, &ctx).value;
            let mut pairs = vec![("in", 0, e_in, o_in)];
            for (k, &o) in orders.iter().enumerate() {
                let e_out = exit_braket(&Channel::new(j, o, 0, 0), 0.0, &ctx).unwrap().value;
                let e_m = matrix_element(j, o, 0.0, &ctx).unwrap().value;
                pairs.push(("out", o, e_out, o_out[k]));
                pairs.push(("m", o, e_m, o_in * o_out[k]));
            }
            for (what, o, engine, reference) in pairs {
                count += 1;
                let err = (engine - reference).norm();
                let ok = err <= 1e-6 * reference.norm() + floor;
                if !ok {
                    println!("  U_p={up} j={j} {what} j_pp={o}: engine={engine:.6e} oracle={reference:.6e}");
                }
                all_ok &= ok;
                if reference.norm() > 1e3 * floor {
                    worst = worst.max(err / reference.norm());
                }
                worst_abs = worst_abs.max(err);
            }
        }
    }

    let z_max = ponderotunnel::volkov::TruncationPolicy::default()
        .bounds(&electron, &LaserConfig::reference(UP_FIG2))
        .eta_max;
    let mut neumann = 0.0f64;
    let mut z = 0.0;
    while z <= z_max {
        let n_max = (z as i32) + 60;
        let zc = C64::new(z, 0.0);
        let mut s = 0.0;
        for n in -n_max..=n_max {
            s += bessel_j(n, zc).unwrap().norm_sqr();
        }
        neumann = neumann.max((s - 1.0).abs());
        z += 0.37;
    }
    let mut parity = 0.0f64;
    for zc in [C64::new(0.7, 0.0), C64::new(12.5, 0.0), C64::new(30.0, 0.0), C64::new(2.0, 1.5), C64::new(0.0, 3.0)] {
        for n in 1..60 {
            let plus = bessel_j(n, zc).unwrap();
            let minus = bessel_j(-n, zc).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            parity = parity.max((minus - sign * plus).norm() / plus.norm().max(1e-300));
        }
    }
    let pass = all_ok && neumann < 1e-12 && parity < 1e-13;
    report(
        6,
        "oracle equivalence",
        pass,
        format!(
            "{count} values, worst rel err={worst:.2e} (above 1e3x phase floor), worst abs err={worst_abs:.1e}; Neumann err={neumann:.1e} up to z={z_max:.1}; parity err={parity:.1e} t={:.0}s",
            t.elapsed().as_secs_f64()
        ),
    )
}

fn worst_change(base: &RateResult, other: &RateResult) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut ok = true;
    for c in base.open_channels() {
        let o = other.channel(c.j_pp).map(|x| x.rate).unwrap_or(f64::NAN);
        let change = (o - c.rate).abs();
        ok &= change <= 1e-4 * c.rate.abs();
        if c.rate != 0.0 {
            worst = worst.max(change / c.rate.abs());
        }
    }
    (worst, ok)
}

fn criterion_7(base: &RateResult) -> Outcome {
    let t = Instant::now();
    let reference = RateConfig::reference(UP_FIG2);
    let mut details = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, base: &RateResult, cfg: RateConfig| {
        let r = energy_spectrum(&cfg).unwrap();
        let (worst, ok) = worst_change(base, &r);
        pass &= ok && r.diagnostics.converged;
        details.push(format!("{name}={worst:.1e}"));
    };
    let mut v = reference;
    v.policy = reference.policy.doubled();
    check("margins", base, v);
    let mut v = reference;
    v.grid.base_panel_count *= 2;
    check("panels", base, v);
    let mut v = reference;
    v.grid.x_min_sigmas = -4.0;
    v.grid.x_max_sigmas = 4.0;
    check("bounds", base, v);
    let mut v = reference;
    v.grid.clamp_fraction *= 0.5;
    check("clamp", base, v);
    let mut band = reference;
    band.mode = RateMode::Band;
    let band_base = energy_spectrum(&band).unwrap();
    let mut v = band;
    v.grid.energy_band_halfwidth *= 2.0;
    v.grid.energy_samples = 2 * v.grid.energy_samples - 1;
    v.grid.energy_point_count = 2 * v.grid.energy_point_count - 1;
    check("band", &band_base, v);
    report(
        7,
        "convergence stability",
        pass,
        format!("worst relative change: {} t={:.0}s", details.join(" "), t.elapsed().as_secs_f64()),
    )
}

fn criterion_8() -> Outcome {
    let electron = ElectronConfig::new(E0).unwrap();
    let settings = IntegratorSettings::default();
    let mut ok = true;
    let mut drift = 0.0f64;
    for up in [0.1, 0.5, 0.53, 0.55, 1.0, UP_FIG2, 5.0] {
        let r = classical_deflection(0.0, &LaserConfig::reference(up), &electron, &settings).unwrap();
        ok &= r.reflected == (E0 < up);
        drift = drift.max(r.energy_drift);
    }
    let pass = ok && drift < 1e-9;
    report(8, "classical baseline", pass, format!("reflection iff E0<U_p: {ok}; max drift={drift:.2e}"))
}

fn csv(r: &RateResult) -> String {
    r.open_channels()
        .map(|c| format!("{},{:.16e},{:.16e}\n", c.j_pp, c.final_energy_ev, c.rate))
        .collect()
}

fn criterion_9(base: &RateResult) -> Outcome {
    let cfg = RateConfig::reference(UP_FIG2);
    let runs: Vec<String> = [1, 3]
        .iter()
        .map(|&n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            csv(&pool.install(|| energy_spectrum(&cfg)).unwrap())
        })
        .collect();
    let pass = runs[0] == runs[1] && runs[0] == csv(base);
    report(9, "determinism", pass, format!("1 thread vs 3 threads vs default pool identical: {pass}"))
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |id: u32| only.as_ref().map_or(true, |v| v.contains(&id));
    let mut outcomes = Vec::new();

    if wanted(1) {
        outcomes.push(criterion_1());
    }
    let needs_fig2 = [2, 3, 5, 7, 9].iter().any(|&i| wanted(i));
    let fig2 = needs_fig2.then(|| {
        let t = Instant::now();
        let r = energy_spectrum(&RateConfig::reference(UP_FIG2)).unwrap();
        (r, t.elapsed().as_secs_f64())
    });
    if let Some((r, secs)) = &fig2 {
        if wanted(2) {
            outcomes.push(criterion_2(r, *secs));
        }
        if wanted(3) {
            outcomes.push(criterion_3(r));
        }
        if wanted(5) {
            outcomes.push(criterion_5(r.total_rate));
        }
    }
    if wanted(6) {
        outcomes.push(criterion_6());
    }
    if wanted(8) {
        outcomes.push(criterion_8());
    }
    if let Some((r, _)) = &fig2 {
        if wanted(9) {
            outcomes.push(criterion_9(r));
        }
        if wanted(7) {
            outcomes.push(criterion_7(r));
        }
    }
    if wanted(4) {
        outcomes.push(criterion_4());
    }

    let unexpected: Vec<u32> = outcomes.iter().filter(|o| !o.pass && !DOCUMENTED_RED.contains(&o.id)).map(|o| o.id).collect();
    let fixed: Vec<u32> = outcomes.iter().filter(|o| o.pass && DOCUMENTED_RED.contains(&o.id)).map(|o| o.id).collect();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass; documented red: {DOCUMENTED_RED:?}", outcomes.len());
    if !fixed.is_empty() {
        println!("note: criteria {fixed:?} now pass; drop them from DOCUMENTED_RED");
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
