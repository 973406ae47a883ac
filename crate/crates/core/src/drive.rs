//! Synthesis of the control field `Omega(t)` that makes the cavity emit a
//! prescribed single-photon waveform.
//!
//! Global phase convention: the emitted photon's phase is chosen so that the
//! drive starts with zero phase (`Omega >= 0` on the leading edge). With the
//! atom starting in `|u>` with unit amplitude, the simulated cavity field is
//! then the target up to a constant phase factor.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{gaussian_weighted, GaussianModel};
use crate::error::{Error, Result};
use crate::numerics::{diff, quad};
use crate::params::{AtomCavityParams, Detunings, PulseSpec};
use crate::waveform::SampledWaveform;

/// Default divergence guard: requested `P_S` may be at most this fraction of `P_S^max`.
pub const DEFAULT_SAFETY: f64 = 0.99;
pub const DEFAULT_SAMPLES: usize = 4096;
/// Drive magnitudes below this fraction of the peak are set to zero.
pub const CLAMP_RELATIVE: f64 = 1e-14;
/// Absolute tolerance for the phase quadratures.
pub const PHASE_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveOptions {
    pub samples: usize,
    pub safety_factor: f64,
}

impl Default for DriveOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            safety_factor: DEFAULT_SAFETY,
        }
    }
}

/// `Omega(t) = omega_mag exp(i omega_phase)` on a time grid, with the phase
/// `phi_u` of the uncoupled-state amplitude it was built for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveWaveform {
    pub grid: Vec<f64>,
    pub omega_mag: Vec<f64>,
    pub omega_phase: Vec<f64>,
    pub phi_u: Vec<f64>,
}

impl DriveWaveform {
    /// `Omega = 0` everywhere on `grid`.
    pub fn zero(grid: Vec<f64>) -> Self {
        let n = grid.len();
        Self {
            grid,
            omega_mag: vec![0.0; n],
            omega_phase: vec![0.0; n],
            phi_u: vec![0.0; n],
        }
    }

    /// Wraps complex samples; the phase is unwrapped and `phi_u` left at zero.
    pub fn from_complex(grid: Vec<f64>, omega: &[Complex64]) -> Result<Self> {
        if grid.len() != omega.len() {
            return Err(Error::Grid("grid and drive lengths differ".into()));
        }
        let n = grid.len();
        Ok(Self {
            grid,
            omega_mag: omega.iter().map(|w| w.norm()).collect(),
            omega_phase: unwrap_phase(omega.iter().map(|w| w.arg())),
            phi_u: vec![0.0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn omega(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.omega_mag[i], self.omega_phase[i])
    }

    pub fn omega_values(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.omega(i)).collect()
    }

    pub fn peak(&self) -> f64 {
        self.omega_mag.iter().copied().fold(0.0, f64::max)
    }

    /// The same drive multiplied by the constant phase factor `exp(i phase)`.
    pub fn rotated(&self, phase: f64) -> Self {
        Self {
            omega_phase: self.omega_phase.iter().map(|p| p + phase).collect(),
            ..self.clone()
        }
    }

    /// Typical rate of change of the drive phase: the median slope of
    /// `omega_phase` between adjacent samples where the drive is not negligible.
    /// Isolated phase jumps (sign flips) do not move the median.
    pub fn carrier_frequency(&self) -> f64 {
        let floor = 1e-6 * self.peak();
        let mut slopes: Vec<f64> = (1..self.len())
            .filter(|&i| self.omega_mag[i - 1] > floor && self.omega_mag[i] > floor)
            .map(|i| (self.omega_phase[i] - self.omega_phase[i - 1]) / (self.grid[i] - self.grid[i - 1]))
            .collect();
        if slopes.is_empty() {
            return 0.0;
        }
        slopes.sort_by(f64::total_cmp);
        slopes[slopes.len() / 2]
    }

    /// Indices `i` where `Re Omega` changes sign between samples `i` and `i + 1`.
    pub fn sign_changes(&self) -> Vec<usize> {
        let re: Vec<f64> = self.omega_values().iter().map(|w| w.re).collect();
        let mut out = Vec::new();
        let mut last: Option<(usize, f64)> = None;
        for (i, &v) in re.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            if let Some((j, prev)) = last {
                if prev.signum() != v.signum() {
                    out.push(j);
                }
            }
            last = Some((i, v));
        }
        out
    }
}

/// Target amplitudes and the auxiliaries `z`, `y` on a grid.
///
/// `alpha_u` carries the modulus `sqrt(rho_uu)` with the phase reference
/// `phi_u = 0`; the detuned synthesis supplies the actual phase separately.
#[derive(Debug, Clone)]
pub struct AmplitudeTriple {
    pub grid: Vec<f64>,
    pub alpha_u: Vec<Complex64>,
    pub alpha_e: Vec<Complex64>,
    pub alpha_g: Vec<Complex64>,
    /// `z = d alpha_e/dt + (gamma + i delta_e) alpha_e - g alpha_g`
    pub z: Vec<Complex64>,
    /// `y = i delta_u + (d rho_uu/dt) / (2 rho_uu)`
    pub y: Vec<Complex64>,
    pub rho_uu: Vec<f64>,
    pub rho_uu_dot: Vec<f64>,
}

/// Target waveform for the detuned synthesis.
#[derive(Debug, Clone)]
pub enum TargetWaveform {
    /// The Gaussian of the pulse, with analytic derivatives.
    Gaussian,
    /// Arbitrary complex samples on a uniform grid; renormalized to unit norm.
    Sampled(SampledWaveform),
}

fn check_probability(model: &GaussianModel, safety: f64) -> Result<()> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::domain("safety_factor", safety, "must lie in (0, 1]"));
    }
    let limit = safety * model.ps_max();
    if model.ps() > limit {
        return Err(Error::DriveDivergence {
            ps: model.ps(),
            safety,
            limit,
        });
    }
    Ok(())
}

fn z_value(p: &AtomCavityParams, d: &Detunings, a_e: Complex64, a_e_dot: Complex64, a_g: Complex64) -> Complex64 {
    a_e_dot + Complex64::new(p.gamma(), d.delta_e) * a_e - p.g() * a_g
}

/// Continuous phase from wrapped samples (jumps larger than pi are removed).
pub fn unwrap_phase<I: IntoIterator<Item = f64>>(wrapped: I) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for w in wrapped {
        if let Some(p) = prev {
            let jump = w - p;
            if jump > PI {
                offset -= 2.0 * PI * ((jump - PI) / (2.0 * PI)).ceil();
            } else if jump < -PI {
                offset += 2.0 * PI * ((-jump - PI) / (2.0 * PI)).ceil();
            }
        }
        out.push(w + offset);
        prev = Some(w);
    }
    out
}

fn clamp_small(mag: &mut [f64]) {
    let peak = mag.iter().copied().fold(0.0, f64::max);
    for m in mag.iter_mut() {
        if *m < CLAMP_RELATIVE * peak {
            *m = 0.0;
        }
    }
}

/// Real resonant drive for the Gaussian target.
pub fn drive_resonant(p: &AtomCavityParams, pulse: &PulseSpec, ps: f64, opts: &DriveOptions) -> Result<DriveWaveform> {
    let model = GaussianModel::new(*p, *pulse, ps)?;
    check_probability(&model, opts.safety_factor)?;
    let grid = pulse.grid(opts.samples)?;
    let tau = pulse.tau();
    let tau2 = tau * tau;
    let (g, gamma, kappa, kex) = (p.g(), p.gamma(), p.kappa(), p.kappa_ex());
    let half_diff = 0.5 * (kappa - gamma);
    let disc = 1.0 - tau2 * (g * g - half_diff * half_diff);
    let centre = 0.5 * (kappa + gamma) * tau2;
    let prefactor = ps.sqrt() / (g * tau.powf(4.5) * (2.0 * kex * PI.sqrt()).sqrt());

    let mut values = Vec::with_capacity(grid.len());
    for (index, &t) in grid.iter().enumerate() {
        let rho_uu = model.rho_uu(t);
        if !(rho_uu > 0.0) {
            return Err(Error::NonPositivePopulation { index, t, rho_uu });
        }
        // (t - t+)(t - t-), real also when t+- are complex
        let quad = (t - centre) * (t - centre) - tau2 * disc;
        let x = t / tau;
        values.push(gaussian_weighted(prefactor * quad, 0.5 * x * x) / rho_uu.sqrt());
    }
    let mut omega_mag: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    clamp_small(&mut omega_mag);
    let omega_phase = values
        .iter()
        .zip(&omega_mag)
        .map(|(v, m)| if *m > 0.0 && *v < 0.0 { PI } else { 0.0 })
        .collect();
    let n = grid.len();
    Ok(DriveWaveform {
        grid,
        omega_mag,
        omega_phase,
        phi_u: vec![0.0; n],
    })
}

/// Target amplitudes for the Gaussian waveform on the pulse's uniform grid.
pub fn amplitude_targets(
    p: &AtomCavityParams,
    pulse: &PulseSpec,
    ps: f64,
    d: &Detunings,
    samples: usize,
) -> Result<AmplitudeTriple> {
    let model = GaussianModel::new(*p, *pulse, ps)?;
    gaussian_targets(&model, d, pulse.grid(samples)?)
}

fn gaussian_targets(model: &GaussianModel, d: &Detunings, grid: Vec<f64>) -> Result<AmplitudeTriple> {
    let p = model.params();
    let n = grid.len();
    let mut out = AmplitudeTriple {
        grid: Vec::with_capacity(n),
        alpha_u: Vec::with_capacity(n),
        alpha_e: Vec::with_capacity(n),
        alpha_g: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        rho_uu: Vec::with_capacity(n),
        rho_uu_dot: Vec::with_capacity(n),
    };
    for (index, &t) in grid.iter().enumerate() {
        let rho_uu = model.rho_uu(t);
        if !(rho_uu > 0.0) {
            return Err(Error::NonPositivePopulation { index, t, rho_uu });
        }
        let rho_dot = model.rho_uu_dot(t);
        let a_g = Complex64::new(model.alpha_g(t), 0.0);
        let a_e = Complex64::new(model.alpha_e(t), 0.0);
        let a_e_dot = Complex64::new(model.alpha_e_dot(t), 0.0);
        out.alpha_u.push(Complex64::new(rho_uu.sqrt(), 0.0));
        out.alpha_e.push(a_e);
        out.alpha_g.push(a_g);
        out.z.push(z_value(p, d, a_e, a_e_dot, a_g));
        out.y.push(Complex64::new(rho_dot / (2.0 * rho_uu), d.delta_u));
        out.rho_uu.push(rho_uu);
        out.rho_uu_dot.push(rho_dot);
    }
    out.grid = grid;
    Ok(out)
}

fn sampled_targets(p: &AtomCavityParams, ps: f64, d: &Detunings, target: &SampledWaveform) -> Result<AmplitudeTriple> {
    let h = diff::uniform_spacing(&target.t)?;
    let w = target.normalized()?;
    let (g, gamma, kappa) = (p.g(), p.gamma(), p.kappa());
    let scale = (ps / (2.0 * p.kappa_ex())).sqrt();
    let alpha_g: Vec<Complex64> = w.values.iter().map(|v| v * scale).collect();
    let alpha_g_dot = diff::derivative(&alpha_g, h);
    let alpha_e: Vec<Complex64> = alpha_g
        .iter()
        .zip(&alpha_g_dot)
        .map(|(a, da)| -(da + a * kappa) / g)
        .collect();
    let alpha_e_dot = diff::derivative(&alpha_e, h);

    let loss: Vec<f64> = alpha_e
        .iter()
        .zip(&alpha_g)
        .map(|(e, a)| 2.0 * (gamma * e.norm_sqr() + kappa * a.norm_sqr()))
        .collect();
    let lost = quad::cumulative_samples(&target.t, &loss);

    let n = target.t.len();
    let mut out = AmplitudeTriple {
        grid: target.t.clone(),
        alpha_u: Vec::with_capacity(n),
        alpha_e: alpha_e.clone(),
        alpha_g: alpha_g.clone(),
        z: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        rho_uu: Vec::with_capacity(n),
        rho_uu_dot: Vec::with_capacity(n),
    };
    for i in 0..n {
        let rho_uu = 1.0 - alpha_e[i].norm_sqr() - alpha_g[i].norm_sqr() - lost[i];
        if !(rho_uu > 0.0) {
            return Err(Error::NonPositivePopulation {
                index: i,
                t: target.t[i],
                rho_uu,
            });
        }
        let rho_dot =
            -2.0 * (alpha_e[i].conj() * alpha_e_dot[i]).re - 2.0 * (alpha_g[i].conj() * alpha_g_dot[i]).re - loss[i];
        out.alpha_u.push(Complex64::new(rho_uu.sqrt(), 0.0));
        out.z.push(z_value(p, d, alpha_e[i], alpha_e_dot[i], alpha_g[i]));
        out.y.push(Complex64::new(rho_dot / (2.0 * rho_uu), d.delta_u));
        out.rho_uu.push(rho_uu);
        out.rho_uu_dot.push(rho_dot);
    }
    Ok(out)
}

/// `d phi_u/dt = -Im[conj(alpha_e) y z] / Re[conj(alpha_e) z]`.
fn phase_rate(a_e: Complex64, y: Complex64, z: Complex64) -> f64 {
    let w = a_e.conj() * z;
    -(w * y).im / w.re
}

fn check_phase_denominators(targets: &AmplitudeTriple) -> Result<()> {
    for (index, (a_e, z)) in targets.alpha_e.iter().zip(&targets.z).enumerate() {
        if (a_e.conj() * z).re == 0.0 {
            return Err(Error::SingularPhaseIntegrand {
                index,
                t: targets.grid[index],
            });
        }
    }
    Ok(())
}

/// Drive for arbitrary detunings and target waveform.
///
/// `phi_u(t) = -int_{t_st}^t Im[conj(alpha_e) y z] / Re[conj(alpha_e) z] dt'`
/// (the integrand is the rate returned by `phase_rate`),
/// `Omega_0 = |z| / sqrt(rho_uu)` and `phi_0 = arg z - phi_u` (unwrapped).
/// `t_st` defaults to the first grid sample.
pub fn drive_detuned(
    p: &AtomCavityParams,
    pulse: &PulseSpec,
    ps: f64,
    d: &Detunings,
    target: &TargetWaveform,
    t_st: Option<f64>,
    opts: &DriveOptions,
) -> Result<DriveWaveform> {
    let (targets, phi_u) = match target {
        TargetWaveform::Gaussian => {
            let model = GaussianModel::new(*p, *pulse, ps)?;
            check_probability(&model, opts.safety_factor)?;
            let targets = gaussian_targets(&model, d, pulse.grid(opts.samples)?)?;
            check_phase_denominators(&targets)?;
            let t_st = t_st.unwrap_or(targets.grid[0]);
            let rate = |t: f64| {
                let rho = model.rho_uu(t);
                let a_e = Complex64::new(model.alpha_e(t), 0.0);
                let a_e_dot = Complex64::new(model.alpha_e_dot(t), 0.0);
                let a_g = Complex64::new(model.alpha_g(t), 0.0);
                let y = Complex64::new(model.rho_uu_dot(t) / (2.0 * rho), d.delta_u);
                phase_rate(a_e, y, z_value(p, d, a_e, a_e_dot, a_g))
            };
            let phi_u = if d.delta_u == 0.0 && d.delta_e == 0.0 {
                vec![0.0; targets.grid.len()]
            } else {
                integrate_on_grid(&rate, &targets.grid, t_st)
            };
            (targets, phi_u)
        }
        TargetWaveform::Sampled(w) => {
            if !(ps > 0.0 && ps <= 1.0) {
                return Err(Error::ProbabilityOutOfRange { ps, limit: 1.0 });
            }
            let targets = sampled_targets(p, ps, d, w)?;
            check_phase_denominators(&targets)?;
            let rates: Vec<f64> = (0..targets.grid.len())
                .map(|i| phase_rate(targets.alpha_e[i], targets.y[i], targets.z[i]))
                .collect();
            let cumulative = quad::cumulative_samples(&targets.grid, &rates);
            let origin = t_st.map_or(0.0, |t| interpolate_linear(&targets.grid, &cumulative, t));
            let phi_u = cumulative.iter().map(|c| c - origin).collect();
            (targets, phi_u)
        }
    };

    let mut omega_mag: Vec<f64> = targets
        .z
        .iter()
        .zip(&targets.rho_uu)
        .map(|(z, rho)| z.norm() / rho.sqrt())
        .collect();
    clamp_small(&mut omega_mag);
    // arg z varies slowly; phi_u is already continuous and may wind many
    // turns per sample (two-photon detuning), so only arg z is unwrapped.
    let arg_z = unwrap_phase(targets.z.iter().map(|z| z.arg()));
    let raw_phase: Vec<f64> = arg_z.iter().zip(&phi_u).map(|(a, phi)| a - phi).collect();
    let reference = raw_phase[0];
    let omega_phase = raw_phase.iter().map(|ph| ph - reference).collect();
    Ok(DriveWaveform {
        grid: targets.grid,
        omega_mag,
        omega_phase,
        phi_u,
    })
}

fn interpolate_linear(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t <= x[0] {
        return y[0];
    }
    let n = x.len();
    if t >= x[n - 1] {
        return y[n - 1];
    }
    let i = x.partition_point(|&v| v <= t) - 1;
    let s = (t - x[i]) / (x[i + 1] - x[i]);
    y[i] + s * (y[i + 1] - y[i])
}

/// `int_{t_st}^{t_k} rate` at every grid sample, by adaptive quadrature between samples.
fn integrate_on_grid<F: Fn(f64) -> f64>(rate: &F, grid: &[f64], t_st: f64) -> Vec<f64> {
    let n = grid.len();
    let tol = PHASE_QUAD_TOL / n as f64;
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in grid.windows(2) {
        acc += quad::integrate(rate, w[0], w[1], tol);
        cumulative.push(acc);
    }
    let origin = quad::integrate(rate, grid[0], t_st, PHASE_QUAD_TOL);
    cumulative.iter().map(|c| c - origin).collect()
}

/// `phi_u(t) = -delta_u (t - t_st) + delta_e int_{t_st}^t alpha_e^2 / rho_uu dt'`,
/// valid for a real target waveform. Evaluated at every sample of `grid`.
pub fn phase_closed_reduction(model: &GaussianModel, d: &Detunings, grid: &[f64], t_st: f64) -> Vec<f64> {
    let integrand = |t: f64| {
        let a = model.alpha_e(t);
        a * a / model.rho_uu(t)
    };
    let n = grid.len();
    let tol = PHASE_QUAD_TOL / n as f64;
    let origin = quad::integrate(integrand, grid[0], t_st, PHASE_QUAD_TOL);
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n);
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            acc += quad::integrate(integrand, grid[k - 1], t, tol);
        }
        out.push(-d.delta_u * (t - t_st) + d.delta_e * (acc - origin));
    }
    out
}
