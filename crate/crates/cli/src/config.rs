//! Flat TOML configuration. Command-line flags override file values.

use std::path::Path;

use serde::Deserialize;

use cqed_core::analytic::tau_critical;
use cqed_core::{AtomCavityParams, PhysicalCavity};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    // rates
    pub g: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa_in: Option<f64>,
    pub kappa_ex: Option<f64>,
    // ratios
    pub g_over_kappa: Option<f64>,
    pub cooperativity: Option<f64>,
    pub eta_esc: Option<f64>,
    // physical cavity
    pub a_eff_tilde: Option<f64>,
    pub l_cav: Option<f64>,
    pub alpha_loss: Option<f64>,
    pub t_ex: Option<f64>,
    // pulse and drive
    pub tau: Option<OneOrMany>,
    pub tau_over_tau_c: Option<OneOrMany>,
    pub window: Option<f64>,
    pub ps_fraction: Option<f64>,
    pub ps: Option<f64>,
    #[serde(alias = "delta_u")]
    pub detuning_u: Option<f64>,
    #[serde(alias = "delta_e")]
    pub detuning_e: Option<f64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub waveform: Option<String>,
    // optimization and sweeps
    pub c_in: Option<f64>,
    pub kappa_in_over_gamma: Option<f64>,
    pub kex_min: Option<f64>,
    pub kex_max: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub x_count: Option<usize>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub y_count: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    fn has_rates(&self) -> bool {
        self.g.is_some() || self.kappa_in.is_some() || self.kappa_ex.is_some()
    }

    fn has_ratios(&self) -> bool {
        self.g_over_kappa.is_some() || self.cooperativity.is_some() || self.eta_esc.is_some()
    }

    fn has_physical(&self) -> bool {
        self.a_eff_tilde.is_some() || self.l_cav.is_some() || self.alpha_loss.is_some() || self.t_ex.is_some()
    }

    /// Rates from whichever description the file uses: explicit rates,
    /// ratios `(g_over_kappa, cooperativity, eta_esc)`, or a physical cavity.
    /// `None` when no description is present.
    pub fn params(&self) -> Result<Option<AtomCavityParams>, CliError> {
        let groups = [self.has_rates(), self.has_ratios(), self.has_physical()];
        if groups.iter().filter(|&&x| x).count() > 1 {
            return Err(CliError::Usage(
                "config mixes parameter descriptions; use one of (g, kappa_in, kappa_ex), \
                 (g_over_kappa, cooperativity, eta_esc) or (a_eff_tilde, l_cav, alpha_loss, t_ex)"
                    .into(),
            ));
        }
        let gamma = self.gamma();
        if self.has_rates() {
            let g = require(self.g, "g")?;
            let kex = require(self.kappa_ex, "kappa_ex")?;
            return Ok(Some(AtomCavityParams::new(
                g,
                gamma,
                self.kappa_in.unwrap_or(0.0),
                kex,
            )?));
        }
        if self.has_ratios() {
            let r = require(self.g_over_kappa, "g_over_kappa")?;
            let c = require(self.cooperativity, "cooperativity")?;
            let eta = self.eta_esc.unwrap_or(0.95);
            return Ok(Some(AtomCavityParams::from_ratios(r, c, eta, gamma)?));
        }
        if self.has_physical() {
            return Ok(Some(self.cavity()?.to_rates(gamma)?));
        }
        Ok(None)
    }

    /// Physical cavity; a missing `t_ex` defaults to the recommendation
    /// `sqrt(2 alpha_loss / a_eff_tilde)`.
    pub fn cavity(&self) -> Result<PhysicalCavity, CliError> {
        let a = require(self.a_eff_tilde, "a_eff_tilde")?;
        let l = require(self.l_cav, "l_cav")?;
        let alpha = require(self.alpha_loss, "alpha_loss")?;
        let t = match self.t_ex {
            Some(t) => t,
            None if a > 0.0 && alpha > 0.0 => (2.0 * alpha / a).sqrt().min(1.0),
            None => 1.0,
        };
        Ok(PhysicalCavity::new(a, l, alpha, t)?)
    }

    /// Pulse widths in absolute time units. Relative widths are scaled by
    /// the critical width of `p`.
    pub fn taus(&self, p: Option<&AtomCavityParams>) -> Result<Vec<f64>, CliError> {
        let mut out = Vec::new();
        if let Some(t) = &self.tau {
            out.extend(t.to_vec());
        }
        if let Some(t) = &self.tau_over_tau_c {
            let p = p.ok_or_else(|| CliError::Usage("tau_over_tau_c needs atom-cavity parameters".into()))?;
            out.extend(t.to_vec().iter().map(|f| f * tau_critical(p)));
        }
        Ok(out)
    }
}

fn require(v: Option<f64>, key: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("config key `{key}` is required")))
}

/// Parses a pulse width: a number (absolute) or a number followed by `tc`
/// (multiple of the critical width). Comma-separated lists are accepted.
pub fn parse_taus(specs: &[String], p: Option<&AtomCavityParams>) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for spec in specs.iter().flat_map(|s| s.split(',')) {
        let s = spec.trim();
        if s.is_empty() {
            continue;
        }
        let value = if let Some(rel) = s.strip_suffix("tc") {
            let f: f64 = rel
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid pulse width `{s}`")))?;
            let p = p.ok_or_else(|| CliError::Usage(format!("`{s}` needs atom-cavity parameters")))?;
            f * tau_critical(p)
        } else {
            s.parse()
                .map_err(|_| CliError::Usage(format!("invalid pulse width `{s}`")))?
        };
        out.push(value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ratio_description() {
        let c =
            Config::parse("g_over_kappa = 10\ncooperativity = 10\neta_esc = 0.95\ntau_over_tau_c = [1, 10]").unwrap();
        let p = c.params().unwrap().unwrap();
        assert!((p.g() - 2.0).abs() < 1e-12);
        let taus = c.taus(Some(&p)).unwrap();
        assert_eq!(taus.len(), 2);
        assert!((taus[1] - 10.0 * tau_critical(&p)).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_reported_with_location() {
        let e = Config::parse("g = 1\nkapa_ex = 2\n").unwrap_err();
        assert!(e.contains("kapa_ex") && e.contains("line 2"), "{e}");
    }

    #[test]
    fn mixed_descriptions_are_rejected() {
        let c = Config::parse("g = 1\nkappa_ex = 1\ng_over_kappa = 2").unwrap();
        assert!(matches!(c.params(), Err(CliError::Usage(_))));
    }

    #[test]
    fn tau_specs() {
        let p = AtomCavityParams::new(2.0, 1.0, 0.01, 0.19).unwrap();
        let t = parse_taus(&["1.5, 2tc".to_string()], Some(&p)).unwrap();
        assert_eq!(t[0], 1.5);
        assert!((t[1] - 2.0 * tau_critical(&p)).abs() < 1e-12);
        assert!(parse_taus(&["x".to_string()], Some(&p)).is_err());
    }
}
