use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ponderotunnel::rate::{RateMode, TransitTime};
use ponderotunnel_cli::config::ExperimentConfig;
use ponderotunnel_cli::{run_baseline, run_convergence, run_diffraction, run_resonance, run_spectrum, RunError, RunOutcome};

#[derive(Parser)]
#[command(name = "ponderotunnel", version, about = "Electron tunnelling through the ponderomotive potential of a focused laser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rates per photon order against final energy.
    Spectrum(Common),
    /// Rates per photon order against transverse momentum.
    Diffraction(Common),
    /// Total rate against U_p/ħω.
    Resonance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        u_min: Option<f64>,
        #[arg(long)]
        u_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Static-barrier transmission and classical trajectories.
    Baseline(Common),
    /// Rate changes under margin, panel, bound and band doubling and clamp halving.
    Convergence(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config laid over a preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base preset when no config file is given: fig2, fig3 or fig4.
    #[arg(long)]
    preset: Option<String>,
    /// Peak ponderomotive energy in eV.
    #[arg(long)]
    up: Option<f64>,
    /// Normalized ponderomotive energy U_p/ħω.
    #[arg(long)]
    u_p: Option<f64>,
    /// Electron energy in eV.
    #[arg(long)]
    e0: Option<f64>,
    /// Beam width in µm.
    #[arg(long)]
    sigma: Option<f64>,
    /// Wavelength in µm.
    #[arg(long)]
    lambda: Option<f64>,
    /// formula, paper or a time in seconds.
    #[arg(long)]
    transit: Option<String>,
    /// onshell or band.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self, default_preset: &str) -> Result<ExperimentConfig, RunError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(_), Some(_)) => return Err(RunError::Config("use either --config or --preset; a config file names its own preset".into())),
            (Some(path), None) => ExperimentConfig::load(path)?,
            (None, Some(p)) => ExperimentConfig::preset(p)?,
            (None, None) => ExperimentConfig::preset(default_preset)?,
        };
        match (self.up, self.u_p) {
            (Some(_), Some(_)) => return Err(RunError::Config("give only one of --up and --u-p".into())),
            (Some(up), None) => cfg.set_up_ev(up),
            (None, Some(u)) => cfg.set_u_p(u),
            _ => {}
        }
        if let Some(e0) = self.e0 {
            cfg.electron.e0_ev = e0;
        }
        if let Some(s) = self.sigma {
            cfg.laser.sigma_um = s;
        }
        if let Some(l) = self.lambda {
            cfg.laser.wavelength_um = l;
        }
        if let Some(t) = &self.transit {
            cfg.transit = TransitTime::parse(t)?;
        }
        if let Some(m) = &self.mode {
            cfg.mode = m.parse::<RateMode>()?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(RunError::Config("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dispatch(cli: Cli) -> Result<RunOutcome, RunError> {
    match cli.command {
        Command::Spectrum(c) => run_spectrum(&c.resolve("fig2")?),
        Command::Diffraction(c) => run_diffraction(&c.resolve("fig3")?),
        Command::Resonance { common, u_min, u_max, steps } => {
            let mut cfg = common.resolve("fig4")?;
            if let Some(v) = u_min {
                cfg.resonance.u_min = v;
            }
            if let Some(v) = u_max {
                cfg.resonance.u_max = v;
            }
            if let Some(v) = steps {
                cfg.resonance.steps = v;
            }
            cfg.validate()?;
            run_resonance(&cfg)
        }
        Command::Baseline(c) => run_baseline(&c.resolve("fig2")?),
        Command::Convergence(c) => run_convergence(&c.resolve("fig2")?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if !outcome.converged {
                eprintln!("warning: some quantities did not converge; see the metadata file");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
