//! Physical parameters of the atom-cavity system and the output pulse.
//!
//! All rates are field (amplitude) decay rates in inverse time; the library
//! accepts absolute values and never assumes `gamma = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing rates for regime classification.
pub const REGIME_TOLERANCE: f64 = 1e-6;

/// Default half-width of the truncation window, in units of the pulse width.
pub const DEFAULT_WINDOW: f64 = 6.0;

fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(name, value, "must be finite and positive"))
    }
}

/// The rate quadruple `(g, gamma, kappa_in, kappa_ex)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomCavityParams {
    g: f64,
    gamma: f64,
    kappa_in: f64,
    kappa_ex: f64,
}

impl AtomCavityParams {
    pub fn new(g: f64, gamma: f64, kappa_in: f64, kappa_ex: f64) -> Result<Self> {
        require_positive("g", g)?;
        require_positive("gamma", gamma)?;
        require_positive("kappa_ex", kappa_ex)?;
        if !(kappa_in.is_finite() && kappa_in >= 0.0) {
            return Err(Error::domain("kappa_in", kappa_in, "must be finite and non-negative"));
        }
        Ok(Self {
            g,
            gamma,
            kappa_in,
            kappa_ex,
        })
    }

    /// Places a point on the `(g/kappa, C, eta_esc)` axes at the given `gamma`.
    ///
    /// From `C = g^2 / (2 kappa gamma)` and `g = r kappa` it follows that
    /// `kappa = 2 C gamma / r^2` and `g = 2 C gamma / r`.
    pub fn from_ratios(g_over_kappa: f64, cooperativity: f64, eta_esc: f64, gamma: f64) -> Result<Self> {
        let r = require_positive("g_over_kappa", g_over_kappa)?;
        let c = require_positive("cooperativity", cooperativity)?;
        require_positive("gamma", gamma)?;
        if !(eta_esc > 0.0 && eta_esc <= 1.0) {
            return Err(Error::domain("eta_esc", eta_esc, "must lie in (0, 1]"));
        }
        let kappa = 2.0 * c * gamma / (r * r);
        let g = 2.0 * c * gamma / r;
        let kappa_ex = eta_esc * kappa;
        let kappa_in = if eta_esc == 1.0 { 0.0 } else { (1.0 - eta_esc) * kappa };
        Self::new(g, gamma, kappa_in, kappa_ex)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa_in(&self) -> f64 {
        self.kappa_in
    }

    pub fn kappa_ex(&self) -> f64 {
        self.kappa_ex
    }

    /// Total cavity field decay rate.
    pub fn kappa(&self) -> f64 {
        self.kappa_in + self.kappa_ex
    }

    /// `C = g^2 / (2 kappa gamma)`.
    pub fn cooperativity(&self) -> f64 {
        self.g * self.g / (2.0 * self.kappa() * self.gamma)
    }

    /// `C_in = g^2 / (2 kappa_in gamma)`; `None` in the lossless limit `kappa_in = 0`.
    pub fn internal_cooperativity(&self) -> Option<f64> {
        (self.kappa_in > 0.0).then(|| self.g * self.g / (2.0 * self.kappa_in * self.gamma))
    }

    /// `eta_esc = kappa_ex / kappa`.
    pub fn escape_efficiency(&self) -> f64 {
        self.kappa_ex / self.kappa()
    }

    pub fn g_over_kappa(&self) -> f64 {
        self.g / self.kappa()
    }

    /// Same `g`, `gamma`, `kappa_in` with a different external rate.
    pub fn with_kappa_ex(&self, kappa_ex: f64) -> Result<Self> {
        Self::new(self.g, self.gamma, self.kappa_in, kappa_ex)
    }

    /// All four rates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        require_positive("factor", factor)?;
        Self::new(
            self.g * factor,
            self.gamma * factor,
            self.kappa_in * factor,
            self.kappa_ex * factor,
        )
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }
}

/// Gaussian output pulse of width `tau` centred at `t = 0`, truncated to
/// `[-N tau, N tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    tau: f64,
    window_halfwidth_in_tau: f64,
}

impl PulseSpec {
    pub fn new(tau: f64) -> Result<Self> {
        Self::with_window(tau, DEFAULT_WINDOW)
    }

    pub fn with_window(tau: f64, window_halfwidth_in_tau: f64) -> Result<Self> {
        require_positive("tau", tau)?;
        if !(window_halfwidth_in_tau.is_finite() && window_halfwidth_in_tau >= 4.0) {
            return Err(Error::domain(
                "window_halfwidth_in_tau",
                window_halfwidth_in_tau,
                "must be at least 4",
            ));
        }
        Ok(Self {
            tau,
            window_halfwidth_in_tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn window_halfwidth_in_tau(&self) -> f64 {
        self.window_halfwidth_in_tau
    }

    /// `(t_start, t_end)` of the truncation window.
    pub fn window(&self) -> (f64, f64) {
        let half = self.window_halfwidth_in_tau * self.tau;
        (-half, half)
    }

    /// Uniform grid of `samples` points spanning the window.
    pub fn grid(&self, samples: usize) -> Result<Vec<f64>> {
        if samples < 5 {
            return Err(Error::Grid(format!("need at least 5 samples, got {samples}")));
        }
        let (a, b) = self.window();
        let step = (b - a) / (samples - 1) as f64;
        Ok((0..samples)
            .map(|i| if i == samples - 1 { b } else { a + step * i as f64 })
            .collect())
    }
}

/// One-photon (`delta_e`) and two-photon (`delta_u`) detunings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Detunings {
    pub delta_u: f64,
    pub delta_e: f64,
}

impl Detunings {
    pub fn new(delta_u: f64, delta_e: f64) -> Result<Self> {
        if !delta_u.is_finite() {
            return Err(Error::domain("delta_u", delta_u, "must be finite"));
        }
        if !delta_e.is_finite() {
            return Err(Error::domain("delta_e", delta_e, "must be finite"));
        }
        Ok(Self { delta_u, delta_e })
    }

    pub fn resonant() -> Self {
        Self::default()
    }

    pub fn is_resonant(&self) -> bool {
        self.delta_u == 0.0 && self.delta_e == 0.0
    }
}

/// Cavity described by its geometry and mirror properties, in natural units
/// (`c = 1`, so the length carries units of time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalCavity {
    a_eff_tilde: f64,
    l_cav: f64,
    alpha_loss: f64,
    t_ex: f64,
}

impl PhysicalCavity {
    pub fn new(a_eff_tilde: f64, l_cav: f64, alpha_loss: f64, t_ex: f64) -> Result<Self> {
        require_positive("a_eff_tilde", a_eff_tilde)?;
        require_positive("l_cav", l_cav)?;
        if !(alpha_loss > 0.0 && alpha_loss < 1.0) {
            return Err(Error::domain("alpha_loss", alpha_loss, "must lie in (0, 1)"));
        }
        if !(t_ex > 0.0 && t_ex <= 1.0) {
            return Err(Error::domain("t_ex", t_ex, "must lie in (0, 1]"));
        }
        Ok(Self {
            a_eff_tilde,
            l_cav,
            alpha_loss,
            t_ex,
        })
    }

    pub fn a_eff_tilde(&self) -> f64 {
        self.a_eff_tilde
    }

    pub fn l_cav(&self) -> f64 {
        self.l_cav
    }

    pub fn alpha_loss(&self) -> f64 {
        self.alpha_loss
    }

    pub fn t_ex(&self) -> f64 {
        self.t_ex
    }

    /// `C_in = 1 / (A_eff alpha_loss)`.
    pub fn internal_cooperativity(&self) -> f64 {
        1.0 / (self.a_eff_tilde * self.alpha_loss)
    }

    /// `kappa_ex / kappa_in = T_ex / alpha_loss`.
    pub fn loss_ratio(&self) -> f64 {
        self.t_ex / self.alpha_loss
    }

    pub fn with_t_ex(&self, t_ex: f64) -> Result<Self> {
        Self::new(self.a_eff_tilde, self.l_cav, self.alpha_loss, t_ex)
    }

    pub fn with_l_cav(&self, l_cav: f64) -> Result<Self> {
        Self::new(self.a_eff_tilde, l_cav, self.alpha_loss, self.t_ex)
    }

    pub fn to_rates(&self, gamma: f64) -> Result<AtomCavityParams> {
        physical_to_rates(self, gamma)
    }
}

/// `g = sqrt(gamma / (2 A_eff L))`, `kappa_in = alpha_loss / (4 L)`, `kappa_ex = T_ex / (4 L)`.
pub fn physical_to_rates(cav: &PhysicalCavity, gamma: f64) -> Result<AtomCavityParams> {
    require_positive("gamma", gamma)?;
    let g = (gamma / (2.0 * cav.a_eff_tilde * cav.l_cav)).sqrt();
    let kappa_in = cav.alpha_loss / (4.0 * cav.l_cav);
    let kappa_ex = cav.t_ex / (4.0 * cav.l_cav);
    AtomCavityParams::new(g, gamma, kappa_in, kappa_ex)
}

pub fn resolve_from_ratios(
    g_over_kappa: f64,
    cooperativity: f64,
    eta_esc: f64,
    gamma: f64,
) -> Result<AtomCavityParams> {
    AtomCavityParams::from_ratios(g_over_kappa, cooperativity, eta_esc, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `kappa > g^2/kappa > gamma`
    Purcell,
    /// `g > kappa` and `g > gamma`
    Strong,
    /// `gamma > g > kappa`
    WeakHighC,
    Intermediate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Purcell => "purcell",
            Regime::Strong => "strong",
            Regime::WeakHighC => "weak_high_c",
            Regime::Intermediate => "intermediate",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn clearly_greater(a: f64, b: f64) -> bool {
    a > b * (1.0 + REGIME_TOLERANCE)
}

/// Coupling regime. Ties within [`REGIME_TOLERANCE`] fall to `Intermediate`.
pub fn classify_regime(p: &AtomCavityParams) -> Regime {
    let (g, gamma, kappa) = (p.g(), p.gamma(), p.kappa());
    let dressed = g * g / kappa;
    if clearly_greater(g, kappa) && clearly_greater(g, gamma) {
        Regime::Strong
    } else if clearly_greater(gamma, g) && clearly_greater(g, kappa) {
        Regime::WeakHighC
    } else if clearly_greater(kappa, dressed) && clearly_greater(dressed, gamma) {
        Regime::Purcell
    } else {
        Regime::Intermediate
    }
}
