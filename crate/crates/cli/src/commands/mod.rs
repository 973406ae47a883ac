pub mod design;
pub mod drive;
pub mod dynamics;
pub mod optimize_kex;
pub mod psmax;
pub mod sweep;
pub mod verify;

use cqed_core::drive::DEFAULT_SAMPLES;
use cqed_core::io::Units;
use cqed_core::simulate::DEFAULT_TOL;
use cqed_core::{AtomCavityParams, Detunings, PulseSpec};

use crate::config::{parse_taus, Config};
use crate::error::CliError;
use crate::output::Output;
use crate::Common;

pub const DEFAULT_PS_FRACTION: f64 = 0.99;

/// Flags merged over the config file.
pub struct Context {
    pub flags: Common,
    pub cfg: Config,
}

impl Context {
    pub fn new(flags: Common) -> Result<Self, CliError> {
        let cfg = match &flags.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        Ok(Self { flags, cfg })
    }

    pub fn output(&self, command: &'static str) -> Result<Output, CliError> {
        let mut out = Output::new(command, self.flags.out.clone())?;
        if let Some(c) = &self.flags.config {
            out.param("config", c.display().to_string());
        }
        out.param("gamma_units", self.flags.gamma_units);
        Ok(out)
    }

    pub fn gamma(&self) -> f64 {
        self.cfg.gamma()
    }

    pub fn units(&self) -> Units {
        if self.flags.gamma_units {
            Units::gamma_normalized(self.gamma())
        } else {
            Units::natural()
        }
    }

    pub fn params(&self) -> Result<Option<AtomCavityParams>, CliError> {
        self.cfg.params()
    }

    pub fn require_params(&self) -> Result<AtomCavityParams, CliError> {
        self.params()?.ok_or_else(|| {
            CliError::Usage(
                "no atom-cavity parameters; pass --config with (g, kappa_in, kappa_ex), \
                 (g_over_kappa, cooperativity, eta_esc) or a physical cavity"
                    .into(),
            )
        })
    }

    pub fn tol(&self) -> f64 {
        self.flags.tol.or(self.cfg.tol).unwrap_or(DEFAULT_TOL)
    }

    pub fn samples(&self) -> Result<usize, CliError> {
        let n = self.flags.grid.or(self.cfg.samples).unwrap_or(DEFAULT_SAMPLES);
        if n < 5 {
            return Err(CliError::Usage(format!("--grid {n}: need at least 5 samples")));
        }
        Ok(n)
    }

    pub fn ps_fraction(&self) -> f64 {
        self.flags
            .ps_fraction
            .or(self.cfg.ps_fraction)
            .unwrap_or(DEFAULT_PS_FRACTION)
    }

    pub fn detunings(&self) -> Result<Detunings, CliError> {
        let u = self.flags.detuning_u.or(self.cfg.detuning_u).unwrap_or(0.0);
        let e = self.flags.detuning_e.or(self.cfg.detuning_e).unwrap_or(0.0);
        Ok(Detunings::new(u, e)?)
    }

    /// Pulse widths from `--tau` if given, otherwise from the config file.
    pub fn taus(&self, p: Option<&AtomCavityParams>) -> Result<Vec<f64>, CliError> {
        if !self.flags.tau.is_empty() {
            parse_taus(&self.flags.tau, p)
        } else {
            self.cfg.taus(p)
        }
    }

    pub fn require_tau(&self, p: Option<&AtomCavityParams>) -> Result<f64, CliError> {
        let taus = self.taus(p)?;
        match taus.as_slice() {
            [t] => Ok(*t),
            [] => Err(CliError::Usage(
                "a pulse width is required (--tau or `tau` in the config)".into(),
            )),
            _ => Err(CliError::Usage("this command takes a single pulse width".into())),
        }
    }

    pub fn pulse(&self, tau: f64) -> Result<PulseSpec, CliError> {
        Ok(match self.cfg.window {
            Some(n) => PulseSpec::with_window(tau, n)?,
            None => PulseSpec::new(tau)?,
        })
    }
}

pub fn record_params(out: &mut Output, p: &AtomCavityParams) {
    out.param("g", p.g());
    out.param("gamma", p.gamma());
    out.param("kappa_in", p.kappa_in());
    out.param("kappa_ex", p.kappa_ex());
}

/// CSV writer into memory.
pub fn csv_bytes<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w).map_err(|e| CliError::Domain(format!("csv: {e}")))?;
        w.flush()?;
    }
    Ok(buf)
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}
