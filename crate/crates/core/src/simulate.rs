//! Forward integration of the three-level amplitude equations
//!
//! ```text
//! d alpha_u/dt = -i delta_u alpha_u - conj(Omega) alpha_e
//! d alpha_e/dt = -(gamma + i delta_e) alpha_e + Omega alpha_u + g alpha_g
//! d alpha_g/dt = -kappa alpha_g - g alpha_e
//! ```
//!
//! with the drive interpolated by cubic splines between its samples (after
//! removing its carrier frequency). Three
//! running integrals are carried along: the emitted probability
//! `2 kappa_ex int |alpha_g|^2`, the internal cavity loss `2 kappa_in int |alpha_g|^2`
//! and the atomic decay `2 gamma int |alpha_e|^2`.

use num_complex::Complex64;

use crate::drive::DriveWaveform;
use crate::error::{Error, Result};
use crate::numerics::ode::{dopri5, OdeOptions, OdeStats};
use crate::numerics::spline::CubicSpline;
use crate::numerics::{diff, quad};
use crate::params::{AtomCavityParams, Detunings};
use crate::waveform::SampledWaveform;

pub const DEFAULT_TOL: f64 = 1e-11;
pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-4;
/// The step size is capped at this many drive-sample spacings so that no
/// feature of the interpolated drive is stepped over.
const H_MAX_IN_SAMPLES: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub alpha_u: Vec<Complex64>,
    pub alpha_e: Vec<Complex64>,
    pub alpha_g: Vec<Complex64>,
    /// `2 kappa_ex int |alpha_g|^2` from the start of the span.
    pub emitted: Vec<f64>,
    /// `2 kappa_in int |alpha_g|^2`.
    pub internal_loss: Vec<f64>,
    /// `2 gamma int |alpha_e|^2`.
    pub decayed: Vec<f64>,
    pub stats: StepStats,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl From<OdeStats> for StepStats {
    fn from(s: OdeStats) -> Self {
        Self {
            accepted: s.accepted,
            rejected: s.rejected,
            evaluations: s.evaluations,
        }
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn rho_uu(&self) -> Vec<f64> {
        self.alpha_u.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn rho_ee(&self) -> Vec<f64> {
        self.alpha_e.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn rho_gg(&self) -> Vec<f64> {
        self.alpha_g.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Largest deviation of the probability bookkeeping from one.
    pub fn norm_residual(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let total = self.alpha_u[i].norm_sqr()
                    + self.alpha_e[i].norm_sqr()
                    + self.alpha_g[i].norm_sqr()
                    + self.emitted[i]
                    + self.internal_loss[i]
                    + self.decayed[i];
                (total - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Plain rate set; `g = 0` is allowed here so that bare decay can be tested.
#[derive(Debug, Clone, Copy)]
struct Rates {
    g: f64,
    gamma: f64,
    kappa_in: f64,
    kappa_ex: f64,
}

impl From<&AtomCavityParams> for Rates {
    fn from(p: &AtomCavityParams) -> Self {
        Self {
            g: p.g(),
            gamma: p.gamma(),
            kappa_in: p.kappa_in(),
            kappa_ex: p.kappa_ex(),
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::domain("tol", tol, "must lie in [1e-12, 1e-4]"));
    }
    Ok(())
}

/// Integrates from `alpha_u = 1`, `alpha_e = alpha_g = 0` at `t_span.0`.
pub fn integrate(
    p: &AtomCavityParams,
    d: &Detunings,
    drive: &DriveWaveform,
    t_span: (f64, f64),
    tol: f64,
) -> Result<Trajectory> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    integrate_from(p, d, drive, t_span, tol, [one, zero, zero])
}

/// Same as [`integrate`] with an explicit initial state `[alpha_u, alpha_e, alpha_g]`.
pub fn integrate_from(
    p: &AtomCavityParams,
    d: &Detunings,
    drive: &DriveWaveform,
    t_span: (f64, f64),
    tol: f64,
    initial: [Complex64; 3],
) -> Result<Trajectory> {
    run(Rates::from(p), d, drive, t_span, tol, initial)
}

fn run(
    r: Rates,
    d: &Detunings,
    drive: &DriveWaveform,
    t_span: (f64, f64),
    tol: f64,
    initial: [Complex64; 3],
) -> Result<Trajectory> {
    check_tol(tol)?;
    if drive.len() < 2 {
        return Err(Error::Grid("drive needs at least two samples".into()));
    }
    let (t0, t1) = t_span;
    let (lo, hi) = (drive.grid[0], drive.grid[drive.len() - 1]);
    let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    if !(t1 > t0) || t0 < lo - slack || t1 > hi + slack {
        return Err(Error::Grid(format!(
            "time span [{t0}, {t1}] is not inside the drive support [{lo}, {hi}]"
        )));
    }

    // The carrier is taken out before interpolation and restored afterwards,
    // so a drive that winds several radians per sample stays resolved.
    let carrier = drive.carrier_frequency();
    let omega: Vec<Complex64> = (0..drive.len())
        .map(|i| drive.omega(i) * Complex64::from_polar(1.0, -carrier * (drive.grid[i] - lo)))
        .collect();
    let re = CubicSpline::new(drive.grid.clone(), omega.iter().map(|w| w.re).collect());
    let im = CubicSpline::new(drive.grid.clone(), omega.iter().map(|w| w.im).collect());
    let spacing = (hi - lo) / (drive.len() - 1) as f64;

    let kappa = r.kappa_in + r.kappa_ex;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let w = Complex64::new(re.eval(t), im.eval(t)) * Complex64::from_polar(1.0, carrier * (t - lo));
        let au = Complex64::new(y[0], y[1]);
        let ae = Complex64::new(y[2], y[3]);
        let ag = Complex64::new(y[4], y[5]);
        let du = Complex64::new(0.0, -d.delta_u) * au - w.conj() * ae;
        let de = -Complex64::new(r.gamma, d.delta_e) * ae + w * au + r.g * ag;
        let dg = -kappa * ag - r.g * ae;
        dy[0] = du.re;
        dy[1] = du.im;
        dy[2] = de.re;
        dy[3] = de.im;
        dy[4] = dg.re;
        dy[5] = dg.im;
        let pg = ag.norm_sqr();
        dy[6] = 2.0 * r.kappa_ex * pg;
        dy[7] = 2.0 * r.kappa_in * pg;
        dy[8] = 2.0 * r.gamma * ae.norm_sqr();
    };

    let mut t_out: Vec<f64> = drive.grid.iter().copied().filter(|&t| t > t0 && t < t1).collect();
    t_out.insert(0, t0);
    t_out.push(t1);

    let y0 = [
        initial[0].re,
        initial[0].im,
        initial[1].re,
        initial[1].im,
        initial[2].re,
        initial[2].im,
        0.0,
        0.0,
        0.0,
    ];
    let opts = OdeOptions {
        rtol: tol,
        atol: tol,
        h_max: Some(H_MAX_IN_SAMPLES * spacing),
        ..Default::default()
    };
    let (states, stats) = dopri5(rhs, t0, &y0, t1, &t_out, &opts)?;

    let n = t_out.len();
    let mut traj = Trajectory {
        grid: t_out,
        alpha_u: Vec::with_capacity(n),
        alpha_e: Vec::with_capacity(n),
        alpha_g: Vec::with_capacity(n),
        emitted: Vec::with_capacity(n),
        internal_loss: Vec::with_capacity(n),
        decayed: Vec::with_capacity(n),
        stats: stats.into(),
    };
    for y in states {
        traj.alpha_u.push(Complex64::new(y[0], y[1]));
        traj.alpha_e.push(Complex64::new(y[2], y[3]));
        traj.alpha_g.push(Complex64::new(y[4], y[5]));
        traj.emitted.push(y[6]);
        traj.internal_loss.push(y[7]);
        traj.decayed.push(y[8]);
    }
    Ok(traj)
}

/// `2 kappa_ex int |alpha_g|^2 dt` by spline quadrature over the stored samples.
pub fn success_probability(traj: &Trajectory, kappa_ex: f64) -> f64 {
    let y: Vec<f64> = traj.alpha_g.iter().map(|a| a.norm_sqr()).collect();
    2.0 * kappa_ex * quad::integrate_samples(&traj.grid, &y)
}

/// Emitted temporal mode `sqrt(2 kappa_ex) alpha_g(t)`; its squared norm is `P_S`.
pub fn output_waveform(traj: &Trajectory, kappa_ex: f64) -> SampledWaveform {
    let s = (2.0 * kappa_ex).sqrt();
    SampledWaveform {
        t: traj.grid.clone(),
        values: traj.alpha_g.iter().map(|a| a * s).collect(),
    }
}

/// `|int conj(a) b|^2 / (int |a|^2 int |b|^2)`. `b` is resampled onto the grid
/// of `a` when the grids differ.
pub fn mode_overlap(a: &SampledWaveform, b: &SampledWaveform) -> Result<f64> {
    let resampled;
    let b = if a.same_grid(b) {
        b
    } else {
        resampled = b.resample(&a.t);
        &resampled
    };
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if !(na > 0.0) || !(nb > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let products: Vec<Complex64> = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).collect();
    let re = quad::integrate_samples(&a.t, &products.iter().map(|c| c.re).collect::<Vec<_>>());
    let im = quad::integrate_samples(&a.t, &products.iter().map(|c| c.im).collect::<Vec<_>>());
    Ok(((re * re + im * im) / (na * nb)).clamp(0.0, 1.0))
}

/// Maximum over samples of
/// `|d/dt(rho_uu + rho_ee + rho_gg) + 2 gamma rho_ee + 2 kappa rho_gg|`,
/// divided by the largest dissipation rate along the trajectory. The time
/// derivative is taken by finite differences, so the grid must be uniform.
pub fn norm_dissipation_residual(traj: &Trajectory, p: &AtomCavityParams) -> Result<f64> {
    let h = diff::uniform_spacing(&traj.grid)?;
    let total: Vec<f64> = (0..traj.len())
        .map(|i| traj.alpha_u[i].norm_sqr() + traj.alpha_e[i].norm_sqr() + traj.alpha_g[i].norm_sqr())
        .collect();
    let dtotal = diff::derivative(&total, h);
    let loss: Vec<f64> = (0..traj.len())
        .map(|i| 2.0 * p.gamma() * traj.alpha_e[i].norm_sqr() + 2.0 * p.kappa() * traj.alpha_g[i].norm_sqr())
        .collect();
    let scale = loss.iter().copied().fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Ok(dtotal.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok(dtotal.iter().zip(&loss).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{ps_max, tau_critical, GaussianModel};
    use crate::drive::{drive_resonant, DriveOptions};
    use crate::params::{resolve_from_ratios, PulseSpec};

    fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn undriven_uncoupled_state_only_rotates() {
        let p = AtomCavityParams::new(1.0, 1.0, 0.1, 0.5).unwrap();
        let d = Detunings::new(0.7, -0.3).unwrap();
        let drive = DriveWaveform::zero(uniform(-5.0, 5.0, 201));
        let traj = integrate(&p, &d, &drive, (-5.0, 5.0), 1e-10).unwrap();
        for (t, a) in traj.grid.iter().zip(&traj.alpha_u) {
            let expect = Complex64::from_polar(1.0, -0.7 * (t + 5.0));
            assert!((a - expect).norm() < 1e-8, "t = {t}");
        }
        assert_eq!(success_probability(&traj, p.kappa_ex()), 0.0);
        assert!(traj.norm_residual() < 1e-9);
    }

    #[test]
    fn bare_excited_state_decay() {
        let r = Rates {
            g: 0.0,
            gamma: 1.3,
            kappa_in: 0.0,
            kappa_ex: 1.0,
        };
        let drive = DriveWaveform::zero(uniform(0.0, 4.0, 101));
        let zero = Complex64::new(0.0, 0.0);
        let traj = run(
            r,
            &Detunings::resonant(),
            &drive,
            (0.0, 4.0),
            1e-11,
            [zero, Complex64::new(1.0, 0.0), zero],
        )
        .unwrap();
        for (t, a) in traj.grid.iter().zip(&traj.alpha_e) {
            assert!((a.norm() - (-1.3 * t).exp()).abs() < 1e-9);
        }
        assert!(traj.norm_residual() < 1e-9);
    }

    #[test]
    fn rejects_bad_tolerance_and_span() {
        let p = AtomCavityParams::new(1.0, 1.0, 0.1, 0.5).unwrap();
        let drive = DriveWaveform::zero(uniform(0.0, 1.0, 11));
        let d = Detunings::resonant();
        assert!(matches!(
            integrate(&p, &d, &drive, (0.0, 1.0), 1e-15),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            integrate(&p, &d, &drive, (0.0, 1.0), 1e-3),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            integrate(&p, &d, &drive, (-1.0, 1.0), 1e-8),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn success_probability_of_known_gaussian() {
        let p = AtomCavityParams::new(2.0, 1.0, 0.01, 0.19).unwrap();
        let pulse = PulseSpec::new(50.0).unwrap();
        let ps = 0.8;
        let model = GaussianModel::new(p, pulse, ps).unwrap();
        let grid = pulse.grid(2001).unwrap();
        let n = grid.len();
        let traj = Trajectory {
            alpha_u: vec![Complex64::new(0.0, 0.0); n],
            alpha_e: vec![Complex64::new(0.0, 0.0); n],
            alpha_g: grid.iter().map(|&t| Complex64::new(model.alpha_g(t), 0.0)).collect(),
            emitted: vec![0.0; n],
            internal_loss: vec![0.0; n],
            decayed: vec![0.0; n],
            grid,
            stats: StepStats::default(),
        };
        assert!((success_probability(&traj, p.kappa_ex()) - ps).abs() < 1e-6);
        let w = output_waveform(&traj, p.kappa_ex());
        let w0 = SampledWaveform::gaussian(&pulse, w.t.clone()).unwrap();
        assert!((mode_overlap(&w, &w0).unwrap() - 1.0).abs() < 1e-12);
        assert!((w.norm_sqr() - ps).abs() < 1e-6);
    }

    #[test]
    fn overlap_properties() {
        let t = uniform(-30.0, 30.0, 3001);
        let gauss = |width: f64, shift: f64| {
            let v: Vec<f64> = t
                .iter()
                .map(|&s| (-(s - shift).powi(2) / (2.0 * width * width)).exp())
                .collect();
            SampledWaveform::from_real(t.clone(), &v).unwrap()
        };
        let w = gauss(1.0, 0.0);
        assert!((mode_overlap(&w, &w).unwrap() - 1.0).abs() < 1e-12);
        assert!(mode_overlap(&w, &gauss(1.0, 5.0)).unwrap() < 1e-4);
        // Independent oracle: closed-form Gaussian overlap 2 s1 s2 / (s1^2 + s2^2).
        let expected = 2.0 * 1.0 * 2.0 / (1.0 + 4.0);
        let o = mode_overlap(&w, &gauss(2.0, 0.0)).unwrap();
        assert!((o - expected).abs() < 1e-10, "{o}");
        let o2 = mode_overlap(&gauss(2.0, 0.0), &w).unwrap();
        assert!((o - o2).abs() < 1e-14);
        let zero = SampledWaveform::from_real(t.clone(), &vec![0.0; t.len()]).unwrap();
        assert!(matches!(mode_overlap(&w, &zero), Err(Error::ZeroNorm)));
    }

    #[test]
    fn overlap_resamples_other_grid() {
        let t1 = uniform(-8.0, 8.0, 1601);
        let t2 = uniform(-8.0, 8.0, 1001);
        let f = |t: &[f64]| {
            let v: Vec<Complex64> = t
                .iter()
                .map(|&s| Complex64::from_polar((-s * s / 2.0).exp(), 0.3 * s))
                .collect();
            SampledWaveform::new(t.to_vec(), v).unwrap()
        };
        assert!((mode_overlap(&f(&t1), &f(&t2)).unwrap() - 1.0).abs() < 1e-9);
    }

    fn point(r: f64) -> (AtomCavityParams, PulseSpec, f64) {
        let p = resolve_from_ratios(r, 10.0, 0.95, 1.0).unwrap();
        let pulse = PulseSpec::new(10.0 * tau_critical(&p)).unwrap();
        let ps = 0.99 * ps_max(&p, &pulse);
        (p, pulse, ps)
    }

    #[test]
    fn strong_coupling_round_trip() {
        let (p, pulse, ps) = point(10.0);
        assert!((p.g() - 2.0).abs() < 1e-12 && (p.kappa() - 0.2).abs() < 1e-12);
        let drive = drive_resonant(&p, &pulse, ps, &DriveOptions::default()).unwrap();
        let traj = integrate(&p, &Detunings::resonant(), &drive, pulse.window(), DEFAULT_TOL).unwrap();
        let recovered = success_probability(&traj, p.kappa_ex());
        assert!((recovered / ps - 1.0).abs() < 1e-3, "{recovered} vs {ps}");
        assert!((traj.emitted.last().unwrap() - recovered).abs() < 1e-9);
        let w0 = SampledWaveform::gaussian(&pulse, traj.grid.clone()).unwrap();
        assert!(mode_overlap(&output_waveform(&traj, p.kappa_ex()), &w0).unwrap() >= 0.999);
        assert!(traj.norm_residual() < 1e-6);
        assert!(norm_dissipation_residual(&traj, &p).unwrap() < 1e-5);
        for w in traj.emitted.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn global_phase_rotation_leaves_populations() {
        let (p, pulse, ps) = point(1.0);
        let drive = drive_resonant(&p, &pulse, ps, &DriveOptions::default()).unwrap();
        let d = Detunings::resonant();
        let phase = 1.1;
        let a = integrate(&p, &d, &drive, pulse.window(), 1e-10).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        let b = integrate_from(
            &p,
            &d,
            &drive.rotated(phase),
            pulse.window(),
            1e-10,
            [Complex64::from_polar(1.0, -phase), zero, zero],
        )
        .unwrap();
        for i in 0..a.len() {
            assert!((a.alpha_e[i].norm_sqr() - b.alpha_e[i].norm_sqr()).abs() < 1e-9);
            assert!((a.alpha_g[i].norm_sqr() - b.alpha_g[i].norm_sqr()).abs() < 1e-9);
            assert!((a.alpha_u[i].norm_sqr() - b.alpha_u[i].norm_sqr()).abs() < 1e-9);
        }
        let (pa, pb) = (
            success_probability(&a, p.kappa_ex()),
            success_probability(&b, p.kappa_ex()),
        );
        assert!((pa - pb).abs() < 1e-9);
    }

    #[test]
    fn halving_tolerance_converges() {
        let (p, pulse, ps) = point(1.0);
        let drive = drive_resonant(&p, &pulse, ps, &DriveOptions::default()).unwrap();
        let d = Detunings::resonant();
        let tol = 1e-8;
        let a = integrate(&p, &d, &drive, pulse.window(), tol).unwrap();
        let b = integrate(&p, &d, &drive, pulse.window(), tol / 2.0).unwrap();
        let (pa, pb) = (
            success_probability(&a, p.kappa_ex()),
            success_probability(&b, p.kappa_ex()),
        );
        assert!((pa - pb).abs() < 1e-2 * tol, "{pa} vs {pb}");
    }
}
