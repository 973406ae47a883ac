//! Closed-form populations for a Gaussian output wavepacket, the stationary
//! points of the uncoupled-state population, and the resulting bounds on the
//! success probability.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{quad, special};
use crate::params::{AtomCavityParams, PulseSpec};

/// Absolute tolerance of the adaptive quadratures in this module.
pub const QUAD_TOL: f64 = 1e-10;

/// Candidates closer than this multiple of `tau` are merged.
const CANDIDATE_MERGE: f64 = 1e-12;

/// Relative slack allowed when checking `ps <= ps_max`.
const PS_SLACK: f64 = 1e-12;

/// Above this magnitude Gaussian-weighted prefactors are combined in log space.
const LOG_SPACE_THRESHOLD: f64 = 1e300;

fn sqrt_pi() -> f64 {
    PI.sqrt()
}

/// `prefactor * exp(-x2)`, falling back to log space for huge prefactors.
pub(crate) fn gaussian_weighted(prefactor: f64, x2: f64) -> f64 {
    if prefactor.abs() > LOG_SPACE_THRESHOLD || !prefactor.is_finite() {
        prefactor.signum() * (prefactor.abs().ln() - x2).exp()
    } else {
        prefactor * (-x2).exp()
    }
}

/// Normalized Gaussian target waveform `(sqrt(pi) tau)^(-1/2) exp(-t^2 / 2 tau^2)`.
pub fn waveform_w0(t: f64, pulse: &PulseSpec) -> f64 {
    let tau = pulse.tau();
    let x = t / tau;
    (sqrt_pi() * tau).sqrt().recip() * (-0.5 * x * x).exp()
}

/// `tau_c = max(1/kappa, kappa/g^2)`.
pub fn tau_critical(p: &AtomCavityParams) -> f64 {
    let kappa = p.kappa();
    (1.0 / kappa).max(kappa / (p.g() * p.g()))
}

/// Adiabatic bound `eta_esc 2C / (2C + 1)`.
pub fn ps_ub(p: &AtomCavityParams) -> f64 {
    let c = p.cooperativity();
    p.escape_efficiency() * 2.0 * c / (2.0 * c + 1.0)
}

/// Stationary-point candidates of `rho_uu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalTimes {
    pub t0: f64,
    pub t_plus: Option<f64>,
    pub t_minus: Option<f64>,
    /// `1 - tau^2 [g^2 - ((kappa - gamma)/2)^2]`
    pub discriminant: f64,
}

impl CriticalTimes {
    /// The real candidates, `t0` first.
    pub fn real_candidates(&self) -> Vec<f64> {
        let mut v = vec![self.t0];
        v.extend(self.t_plus);
        v.extend(self.t_minus);
        v
    }
}

pub fn critical_times(p: &AtomCavityParams, pulse: &PulseSpec) -> CriticalTimes {
    let tau = pulse.tau();
    let (g, gamma, kappa) = (p.g(), p.gamma(), p.kappa());
    let half_diff = 0.5 * (kappa - gamma);
    let discriminant = 1.0 - tau * tau * (g * g - half_diff * half_diff);
    let centre = 0.5 * (kappa + gamma) * tau * tau;
    let (t_plus, t_minus) = if discriminant >= 0.0 {
        let spread = tau * discriminant.sqrt();
        (Some(centre + spread), Some(centre - spread))
    } else {
        (None, None)
    };
    CriticalTimes {
        t0: kappa * tau * tau,
        t_plus,
        t_minus,
        discriminant,
    }
}

/// Result of the success-probability bound with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct PsMax {
    pub value: f64,
    /// Candidate at which the bound is attained.
    pub t_m: f64,
    pub critical: CriticalTimes,
    /// Value before clamping to the adiabatic bound.
    pub raw: f64,
    /// Set when round-off pushed the raw value above `ps_ub`.
    pub clamped: bool,
    /// Set when two or more candidates coincided and were merged.
    pub merged_candidates: bool,
}

/// Success-probability bound obtained by requiring `rho_uu(t_m) = 0` at one candidate.
fn ps_bound_at(p: &AtomCavityParams, tau: f64, t_m: f64) -> f64 {
    let (gamma, kappa) = (p.gamma(), p.kappa());
    let c = p.cooperativity();
    let x = t_m / tau;
    let k2t2 = kappa * kappa * tau * tau;
    let step = (2.0 * c + 1.0 + 1.0 / (2.0 * k2t2)) * 0.5 * special::erf_plus_one(x);
    let bracket = (t_m / (tau * tau) - gamma - 2.0 * kappa) * t_m + k2t2 + 2.0 * kappa * gamma * tau * tau * (c + 1.0);
    let transient = gaussian_weighted(
        bracket / (2.0 * sqrt_pi() * kappa * kappa * gamma * tau * tau * tau),
        x * x,
    );
    p.escape_efficiency() * 2.0 * c / (step + transient)
}

pub fn ps_max_detailed(p: &AtomCavityParams, pulse: &PulseSpec) -> PsMax {
    let tau = pulse.tau();
    let critical = critical_times(p, pulse);
    let mut candidates: Vec<f64> = Vec::with_capacity(3);
    let mut merged = false;
    for t in critical.real_candidates() {
        if candidates.iter().any(|&c| (c - t).abs() <= CANDIDATE_MERGE * tau) {
            merged = true;
        } else {
            candidates.push(t);
        }
    }
    let (t_m, raw) = candidates
        .iter()
        .map(|&t| (t, ps_bound_at(p, tau, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("t0 is always a candidate");
    let ub = ps_ub(p);
    let clamped = raw > ub;
    PsMax {
        value: raw.min(ub),
        t_m,
        critical,
        raw,
        clamped,
        merged_candidates: merged,
    }
}

/// Upper bound on the success probability for pulse width `tau`.
pub fn ps_max(p: &AtomCavityParams, pulse: &PulseSpec) -> f64 {
    ps_max_detailed(p, pulse).value
}

/// Success probability implied by a residual uncoupled population `rho_uu(+inf)`.
pub fn ps_finite_tau(p: &AtomCavityParams, pulse: &PulseSpec, rho_uu_inf: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho_uu_inf) {
        return Err(Error::domain("rho_uu_inf", rho_uu_inf, "must lie in [0, 1)"));
    }
    let tau = pulse.tau();
    let kappa = p.kappa();
    let c = p.cooperativity();
    let num = 2.0 * c * p.kappa_ex() * tau * tau;
    let den = 1.0 / (2.0 * kappa) + (2.0 * c + 1.0) * kappa * tau * tau;
    Ok((1.0 - rho_uu_inf) * num / den)
}

/// Populations at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationSnapshot {
    pub t: f64,
    pub rho_uu: f64,
    pub rho_ee: f64,
    pub rho_gg: f64,
}

/// The Gaussian-ansatz solution for fixed parameters, pulse and success probability.
#[derive(Debug, Clone, Copy)]
pub struct GaussianModel {
    params: AtomCavityParams,
    pulse: PulseSpec,
    ps: f64,
    ps_max: f64,
}

impl GaussianModel {
    /// Validates `0 < ps <= ps_max`.
    pub fn new(params: AtomCavityParams, pulse: PulseSpec, ps: f64) -> Result<Self> {
        let limit = ps_max(&params, &pulse);
        if !(ps > 0.0 && ps <= limit * (1.0 + PS_SLACK)) {
            return Err(Error::ProbabilityOutOfRange { ps, limit });
        }
        Ok(Self {
            params,
            pulse,
            ps,
            ps_max: limit,
        })
    }

    /// Model saturating the bound, `ps = ps_max`.
    pub fn at_bound(params: AtomCavityParams, pulse: PulseSpec) -> Self {
        let limit = ps_max(&params, &pulse);
        Self {
            params,
            pulse,
            ps: limit,
            ps_max: limit,
        }
    }

    pub fn params(&self) -> &AtomCavityParams {
        &self.params
    }

    pub fn pulse(&self) -> &PulseSpec {
        &self.pulse
    }

    pub fn ps(&self) -> f64 {
        self.ps
    }

    pub fn ps_max(&self) -> f64 {
        self.ps_max
    }

    fn tau(&self) -> f64 {
        self.pulse.tau()
    }

    /// Real cavity amplitude `alpha_g = sqrt(ps / 2 kappa_ex) w0(t)`.
    pub fn alpha_g(&self, t: f64) -> f64 {
        (self.ps / (2.0 * self.params.kappa_ex())).sqrt() * waveform_w0(t, &self.pulse)
    }

    pub fn alpha_g_dot(&self, t: f64) -> f64 {
        -t / (self.tau() * self.tau()) * self.alpha_g(t)
    }

    /// `alpha_e = -(d alpha_g/dt + kappa alpha_g) / g`.
    pub fn alpha_e(&self, t: f64) -> f64 {
        let tau2 = self.tau() * self.tau();
        self.alpha_g(t) * (t / tau2 - self.params.kappa()) / self.params.g()
    }

    pub fn alpha_e_dot(&self, t: f64) -> f64 {
        let tau2 = self.tau() * self.tau();
        let s = t / tau2;
        self.alpha_g(t) * (1.0 / tau2 - s * (s - self.params.kappa())) / self.params.g()
    }

    pub fn rho_gg(&self, t: f64) -> f64 {
        let tau = self.tau();
        let x = t / tau;
        gaussian_weighted(self.ps / (2.0 * sqrt_pi() * self.params.kappa_ex() * tau), x * x)
    }

    pub fn rho_ee(&self, t: f64) -> f64 {
        let tau = self.tau();
        let (g, kappa) = (self.params.g(), self.params.kappa());
        let x = t / tau;
        let lever = kappa - t / (tau * tau);
        gaussian_weighted(
            self.ps * lever * lever / (2.0 * sqrt_pi() * self.params.kappa_ex() * g * g * tau),
            x * x,
        )
    }

    /// Closed-form uncoupled-state population.
    pub fn rho_uu(&self, t: f64) -> f64 {
        if t == f64::NEG_INFINITY {
            return 1.0;
        }
        if t == f64::INFINITY {
            return self.rho_uu_at_infinity();
        }
        let tau = self.tau();
        let tau2 = tau * tau;
        let (g, gamma, kappa, kex) = (
            self.params.g(),
            self.params.gamma(),
            self.params.kappa(),
            self.params.kappa_ex(),
        );
        let x = t / tau;
        let step = self.ps * (gamma + 2.0 * kappa * tau2 * (g * g + gamma * kappa)) * special::erf_plus_one(x)
            / (4.0 * g * g * kex * tau2);
        let poly = t * t - t * (gamma + 2.0 * kappa) * tau2 + (g * g + kappa * (2.0 * gamma + kappa)) * tau2 * tau2;
        let transient = gaussian_weighted(
            self.ps * poly / (2.0 * sqrt_pi() * kex * g * g * tau2 * tau2 * tau),
            x * x,
        );
        1.0 - step - transient
    }

    /// Time derivative of `rho_uu`, factored through its stationary points.
    pub fn rho_uu_dot(&self, t: f64) -> f64 {
        let tau = self.tau();
        let tau2 = tau * tau;
        let (g, gamma, kappa, kex) = (
            self.params.g(),
            self.params.gamma(),
            self.params.kappa(),
            self.params.kappa_ex(),
        );
        let half_diff = 0.5 * (kappa - gamma);
        let disc = 1.0 - tau2 * (g * g - half_diff * half_diff);
        let centre = 0.5 * (kappa + gamma) * tau2;
        // (t - t+)(t - t-) stays real for complex t+-.
        let quad = (t - centre) * (t - centre) - tau2 * disc;
        let x = t / tau;
        gaussian_weighted(
            self.ps * (t - kappa * tau2) * quad / (g * g * kex * tau2 * tau2 * tau2 * tau * sqrt_pi()),
            x * x,
        )
    }

    /// `rho_uu(+inf) = 1 - ps (1/kappa + 4 C kappa tau^2 + 2 kappa tau^2) / (4 C kappa_ex tau^2)`.
    pub fn rho_uu_at_infinity(&self) -> f64 {
        let tau2 = self.tau() * self.tau();
        let kappa = self.params.kappa();
        let c = self.params.cooperativity();
        1.0 - self.ps * (1.0 / kappa + 4.0 * c * kappa * tau2 + 2.0 * kappa * tau2)
            / (4.0 * c * self.params.kappa_ex() * tau2)
    }

    /// `rho_uu` from norm bookkeeping: `1 - rho_ee - rho_gg - 2 int (gamma rho_ee + kappa rho_gg)`.
    pub fn rho_uu_integral_form(&self, t: f64) -> f64 {
        let tau = self.tau();
        let lower = -40.0 * tau;
        let head = 1.0 - self.rho_ee(t) - self.rho_gg(t);
        if t <= lower {
            return head;
        }
        let (gamma, kappa) = (self.params.gamma(), self.params.kappa());
        let loss = |s: f64| 2.0 * (gamma * self.rho_ee(s) + kappa * self.rho_gg(s));
        let mut breaks: Vec<f64> = [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|k| k * tau)
            .collect();
        breaks.push(kappa * tau * tau);
        head - quad::integrate_with_breaks(loss, lower, t, &breaks, QUAD_TOL)
    }

    pub fn snapshot(&self, t: f64) -> PopulationSnapshot {
        PopulationSnapshot {
            t,
            rho_uu: self.rho_uu(t),
            rho_ee: self.rho_ee(t),
            rho_gg: self.rho_gg(t),
        }
    }
}

pub fn rho_gg(t: f64, p: &AtomCavityParams, pulse: &PulseSpec, ps: f64) -> Result<f64> {
    Ok(GaussianModel::new(*p, *pulse, ps)?.rho_gg(t))
}

pub fn rho_ee(t: f64, p: &AtomCavityParams, pulse: &PulseSpec, ps: f64) -> Result<f64> {
    Ok(GaussianModel::new(*p, *pulse, ps)?.rho_ee(t))
}

pub fn rho_uu(t: f64, p: &AtomCavityParams, pulse: &PulseSpec, ps: f64) -> Result<f64> {
    Ok(GaussianModel::new(*p, *pulse, ps)?.rho_uu(t))
}

pub fn rho_uu_integral_form(t: f64, p: &AtomCavityParams, pulse: &PulseSpec, ps: f64) -> Result<f64> {
    Ok(GaussianModel::new(*p, *pulse, ps)?.rho_uu_integral_form(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::resolve_from_ratios;
    use proptest::prelude::*;

    fn fig_point(g_over_kappa: f64) -> AtomCavityParams {
        resolve_from_ratios(g_over_kappa, 10.0, 0.95, 1.0).unwrap()
    }

    fn pulse(tau: f64) -> PulseSpec {
        PulseSpec::new(tau).unwrap()
    }

    #[test]
    fn w0_peak_and_symmetry() {
        let p1 = pulse(1.0);
        assert!((waveform_w0(0.0, &p1) - PI.powf(-0.25)).abs() < 1e-15);
        assert!((waveform_w0(0.0, &p1) - 0.751_125_544_464_942_5).abs() < 1e-15);
        for t in [0.3, 1.7, 4.2] {
            assert_eq!(waveform_w0(t, &p1), waveform_w0(-t, &p1));
            assert!(waveform_w0(t, &p1) > 0.0);
        }
    }

    #[test]
    fn w0_is_normalized_on_window() {
        for tau in [0.01, 1.0, 250.0] {
            for n in [4.5, 6.0] {
                let p = PulseSpec::with_window(tau, n).unwrap();
                let (a, b) = p.window();
                let norm = quad::integrate(|t| waveform_w0(t, &p).powi(2), a, b, 1e-14);
                assert!((norm - 1.0).abs() < 1e-9, "tau {tau}, N {n}: {norm}");
            }
        }
    }

    #[test]
    fn population_reference_values() {
        let p = fig_point(10.0);
        let m = GaussianModel::new(p, pulse(50.0), 0.8).unwrap();
        let expected_gg = 0.8 / (2.0 * PI.sqrt() * 0.19 * 50.0);
        assert!((m.rho_gg(0.0) - expected_gg).abs() < 1e-15);
        assert!((m.rho_gg(0.0) - 0.023_755).abs() < 1e-6);
        assert!((m.rho_ee(0.0) - expected_gg * 0.01).abs() < 1e-15);
        // rho_ee vanishes at t0 = kappa tau^2
        assert_eq!(m.rho_ee(0.2 * 2500.0), 0.0);
    }

    #[test]
    fn emitted_probability_equals_ps() {
        let p = fig_point(1.0);
        let pl = pulse(0.3);
        let ps = 0.5 * ps_max(&p, &pl);
        let m = GaussianModel::new(p, pl, ps).unwrap();
        let emitted = 2.0 * p.kappa_ex() * quad::integrate(|t| m.rho_gg(t), -12.0, 12.0, 1e-14);
        assert!((emitted - ps).abs() < 1e-12);
    }

    #[test]
    fn tiny_ps_leaves_atom_in_u() {
        let p = fig_point(0.1);
        let m = GaussianModel::new(p, pulse(0.1), 1e-14).unwrap();
        for t in [-0.3, 0.0, 0.05, 0.6] {
            assert!(m.rho_gg(t) < 1e-13);
            assert!((m.rho_uu(t) - 1.0).abs() < 1e-12);
            assert!((m.rho_uu_integral_form(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_uu_limits() {
        let p = fig_point(10.0);
        let m = GaussianModel::new(p, pulse(20.0), 0.7).unwrap();
        assert_eq!(m.rho_uu(f64::NEG_INFINITY), 1.0);
        assert_eq!(m.rho_uu(-400.0), 1.0);
        assert!((m.rho_uu(-120.0) - 1.0).abs() < 1e-9);
        assert!((m.rho_uu(1e4) - m.rho_uu_at_infinity()).abs() < 1e-12);
        assert_eq!(m.rho_uu(f64::INFINITY), m.rho_uu_at_infinity());
    }

    #[test]
    fn excitation_vanishes_for_long_pulses() {
        let p = fig_point(1.0);
        let mut last = f64::INFINITY;
        for tau in [1.0, 10.0, 100.0, 1000.0] {
            let m = GaussianModel::new(p, pulse(tau), 0.5).unwrap();
            let v = m.rho_ee(0.0);
            let limit = 0.5 * p.kappa().powi(2) / (2.0 * PI.sqrt() * p.kappa_ex() * p.g().powi(2) * tau);
            assert!((v - limit).abs() < 1e-15 * limit.max(1.0));
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn rho_uu_dot_matches_finite_difference() {
        let p = fig_point(1.0);
        let pl = pulse(0.07);
        let m = GaussianModel::new(p, pl, 0.9 * ps_max(&p, &pl)).unwrap();
        for k in -20..=20 {
            let t = 0.02 * k as f64;
            let h = 1e-5;
            let fd = (m.rho_uu(t + h) - m.rho_uu(t - h)) / (2.0 * h);
            let scale = m.rho_uu_dot(t).abs().max(1.0);
            assert!((fd - m.rho_uu_dot(t)).abs() < 1e-6 * scale, "t = {t}");
        }
    }

    #[test]
    fn critical_time_examples() {
        let p = AtomCavityParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let ct = critical_times(&p, &pulse(0.5));
        assert!((ct.discriminant - 0.75).abs() < 1e-15);
        assert!((ct.t0 - 0.25).abs() < 1e-15);
        let spread = 0.5 * 0.75f64.sqrt();
        assert!((ct.t_plus.unwrap() - (0.25 + spread)).abs() < 1e-15);
        assert!((ct.t_minus.unwrap() - (0.25 - spread)).abs() < 1e-15);
        assert!((ct.t_plus.unwrap() - 0.683_012_701_892_219_3).abs() < 1e-12);

        // strong coupling, long pulse: negative discriminant
        let strong = AtomCavityParams::new(3.0, 1.0, 0.0, 1.0).unwrap();
        let ct = critical_times(&strong, &pulse(2.0));
        assert!(ct.discriminant < 0.0 && ct.t_plus.is_none() && ct.t_minus.is_none());
        assert_eq!(ct.real_candidates(), vec![4.0]);

        // g -> 0 with gamma = kappa: t+- = kappa tau^2 +- tau
        let weak = AtomCavityParams::new(1e-9, 1.0, 0.5, 0.5).unwrap();
        let ct = critical_times(&weak, &pulse(0.8));
        assert!((ct.t_plus.unwrap() - (0.64 + 0.8)).abs() < 1e-12);
        assert!((ct.t_minus.unwrap() - (0.64 - 0.8)).abs() < 1e-12);
    }

    #[test]
    fn candidates_are_roots_of_the_cubic() {
        // Cubic from differentiating the norm bookkeeping directly, in units of tau:
        // (kappa tau - x) [g^2 tau^2 + (gamma tau - x)(kappa tau - x) - 1].
        for (r, tau) in [(0.1, 0.01), (1.0, 0.03), (10.0, 0.1), (0.3, 1.0), (100.0, 2.0)] {
            let p = fig_point(r);
            let ct = critical_times(&p, &pulse(tau));
            let (kt, gt, yt) = (p.kappa() * tau, p.g() * tau, p.gamma() * tau);
            for t in ct.real_candidates() {
                let x = t / tau;
                let cubic = (kt - x) * (gt * gt + (yt - x) * (kt - x) - 1.0);
                assert!(cubic.abs() < 1e-9 * kt.powi(3).max(1.0), "r {r}: {cubic}");
            }
        }
    }

    #[test]
    fn ps_ub_values() {
        let p = fig_point(1.0);
        assert!((ps_ub(&p) - 0.95 * 20.0 / 21.0).abs() < 1e-15);
        assert!((ps_ub(&p) - 0.904_762).abs() < 1e-6);
        let lossless = resolve_from_ratios(1.0, 10.0, 1.0, 1.0).unwrap();
        assert!((ps_ub(&lossless) - 20.0 / 21.0).abs() < 1e-15);
        let huge_c = resolve_from_ratios(1.0, 1e9, 0.8, 1.0).unwrap();
        assert!((ps_ub(&huge_c) - 0.8).abs() < 1e-9);
    }

    #[test]
    fn tau_critical_branches() {
        let strong = fig_point(10.0);
        assert_eq!(tau_critical(&strong), 1.0 / strong.kappa());
        let purcell = AtomCavityParams::new(200.0, 1.0, 100.0, 1900.0).unwrap();
        assert!((tau_critical(&purcell) - 0.05).abs() < 1e-15);
        let tie = AtomCavityParams::new(4.0, 1.0, 1.0, 3.0).unwrap();
        assert_eq!(1.0 / tie.kappa(), tie.kappa() / tie.g().powi(2));
        assert_eq!(tau_critical(&tie), 0.25);
    }

    #[test]
    fn ps_max_anchor_ratios() {
        let ub = 0.95 * 20.0 / 21.0;
        let ratio = |r: f64, f: f64| {
            let p = fig_point(r);
            ps_max(&p, &pulse(f * tau_critical(&p))) / ub
        };
        assert!((ratio(0.1, 1.3) - 0.99).abs() <= 0.01);
        assert!((ratio(10.0, 0.24) - 0.5).abs() <= 0.05);
        for r in [0.1, 1.0, 10.0, 100.0] {
            let p = fig_point(r);
            let v = ps_max(&p, &pulse(1e3 * tau_critical(&p)));
            assert!((v - ub).abs() < 1e-3, "g/kappa {r}: {v}");
        }
    }

    #[test]
    fn ps_max_reports_attaining_candidate() {
        let p = fig_point(0.1);
        let d = ps_max_detailed(&p, &pulse(1.3 * tau_critical(&p)));
        assert!(d.critical.real_candidates().contains(&d.t_m));
        assert!(!d.clamped);
        assert!(d.value > 0.0 && d.value <= ps_ub(&p));
    }

    #[test]
    fn ps_max_merges_coincident_candidates() {
        // gamma = kappa and tau = 1/g makes t+ = t- (zero discriminant).
        let p = AtomCavityParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let d = ps_max_detailed(&p, &pulse(1.0));
        assert_eq!(d.critical.discriminant, 0.0);
        assert!(d.merged_candidates);
    }

    #[test]
    fn finite_tau_probability() {
        let p = fig_point(1.0);
        let pl = pulse(1.0);
        assert!(ps_finite_tau(&p, &pl, 1.0).is_err());
        assert!(ps_finite_tau(&p, &pl, -0.1).is_err());
        let full = ps_finite_tau(&p, &pl, 0.0).unwrap();
        let eps = 1e-6;
        let near = ps_finite_tau(&p, &pl, 1.0 - eps).unwrap();
        assert!((near / eps - full).abs() < 1e-9);

        let long = pulse(1e3 / p.kappa());
        let v = ps_finite_tau(&p, &long, 0.0).unwrap();
        assert!(((v - ps_ub(&p)) / ps_ub(&p)).abs() < 1e-3);

        let huge_c = resolve_from_ratios(1.0, 1e6, 0.9, 1.0).unwrap();
        let pl = pulse(1.0 / huge_c.kappa());
        let v = ps_finite_tau(&huge_c, &pl, 0.3).unwrap();
        assert!((v / (0.9 * 0.7) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn probability_precondition() {
        let p = fig_point(1.0);
        let pl = pulse(0.05);
        let limit = ps_max(&p, &pl);
        assert!(rho_gg(0.0, &p, &pl, 0.0).is_err());
        assert!(rho_ee(0.0, &p, &pl, limit * 1.01).is_err());
        assert!(rho_uu(0.0, &p, &pl, limit).is_ok());
        assert!(matches!(
            rho_uu_integral_form(0.0, &p, &pl, 1.5),
            Err(Error::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn long_time_limit_form() {
        let p = fig_point(1.0);
        let pl = pulse(2.0 / p.kappa());
        let m = GaussianModel::at_bound(p, pl);
        assert!((m.rho_uu(6.0 * pl.tau()) - m.rho_uu_at_infinity()).abs() < 1e-6);
    }

    #[test]
    fn log_space_guard_matches_direct_product() {
        let direct = 1e299 * (-3.0f64).exp();
        assert!((gaussian_weighted(1e299, 3.0) / direct - 1.0).abs() < 1e-15);
        let guarded = gaussian_weighted(1e305, 700.0);
        assert!(((guarded.ln() - (1e305f64.ln() - 700.0)) / 700.0).abs() < 1e-14);
        assert!(gaussian_weighted(f64::MAX, 1000.0) < 1e-100);
    }

    fn arb_model() -> impl Strategy<Value = (GaussianModel, f64)> {
        (
            -2.0f64..2.0, // log10 g/kappa
            -1.0f64..2.0, // log10 C
            0.5f64..1.0,  // eta
            -1.0f64..2.0, // log10 tau / tau_c
            -6.0f64..6.0, // t / tau
            0.01f64..1.0, // ps / ps_max
        )
            .prop_map(|(lr, lc, eta, lt, x, frac)| {
                let p = resolve_from_ratios(10f64.powf(lr), 10f64.powf(lc), eta, 1.0).unwrap();
                let pl = pulse(10f64.powf(lt) * tau_critical(&p));
                let m = GaussianModel::new(p, pl, frac * ps_max(&p, &pl)).unwrap();
                (m, x * pl.tau())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn closed_form_matches_quadrature((m, t) in arb_model()) {
            let d = (m.rho_uu(t) - m.rho_uu_integral_form(t)).abs();
            prop_assert!(d < 1e-8, "difference {d:e}");
        }

        #[test]
        fn populations_are_probabilities((m, t) in arb_model()) {
            let s = m.snapshot(t);
            for v in [s.rho_uu, s.rho_ee, s.rho_gg] {
                prop_assert!((-1e-9..=1.0 + 1e-12).contains(&v), "{s:?}");
            }
        }

        #[test]
        fn bound_ordering(lr in -2.0f64..2.0, lc in -1.0f64..3.0, eta in 0.05f64..1.0, lt in -3.0f64..4.0) {
            let p = resolve_from_ratios(10f64.powf(lr), 10f64.powf(lc), eta, 1.0).unwrap();
            let pl = pulse(10f64.powf(lt) * tau_critical(&p));
            let v = ps_max(&p, &pl);
            prop_assert!(v > 0.0);
            prop_assert!(v <= ps_ub(&p));
            prop_assert!(ps_ub(&p) <= p.escape_efficiency());
            prop_assert!(p.escape_efficiency() <= 1.0);
        }

        #[test]
        fn bound_zeroes_minimum_population(lr in -2.0f64..2.0, lc in -1.0f64..2.0, eta in 0.5f64..1.0, lt in -1.0f64..2.0) {
            let p = resolve_from_ratios(10f64.powf(lr), 10f64.powf(lc), eta, 1.0).unwrap();
            let pl = pulse(10f64.powf(lt) * tau_critical(&p));
            let m = GaussianModel::at_bound(p, pl);
            let min = critical_times(&p, &pl)
                .real_candidates()
                .into_iter()
                .map(|t| m.rho_uu(t))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(min.abs() <= 1e-9, "min rho_uu = {min:e}");
        }
    }
}
