use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("channel j''={j_pp} is closed (final kinetic energy {final_energy_ev:.6e} eV < 0)")]
    ClosedChannel { j_pp: i32, final_energy_ev: f64 },

    #[error("Bessel evaluation overflowed for order {order} at argument {re:+e}{im:+e}i")]
    BesselOverflow { order: i32, re: f64, im: f64 },

    #[error("no forbidden region: energy {energy_ev} eV is not below the barrier peak {peak_ev} eV")]
    NoForbiddenRegion { energy_ev: f64, peak_ev: f64 },

    #[error("classical integration unstable: relative energy drift {drift:.3e} exceeds {limit:.1e}")]
    EnergyDrift { drift: f64, limit: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
