//! Round trip from a requested photon to a simulated one: synthesize the
//! drive, integrate the amplitude equations under it, and compare the emitted
//! photon with the target.

use serde::Serialize;

use crate::drive::{drive_detuned, drive_resonant, DriveOptions, TargetWaveform};
use crate::error::Result;
use crate::params::{AtomCavityParams, Detunings, PulseSpec};
use crate::simulate::{self, mode_overlap, output_waveform, success_probability};
use crate::waveform::SampledWaveform;

pub const DEFAULT_PS_REL_TOL: f64 = 1e-3;
pub const DEFAULT_MIN_OVERLAP: f64 = 0.999;
pub const DEFAULT_MAX_REFINEMENTS: usize = 2;
pub const DENSIFY_FACTOR: usize = 4;
pub const NORM_TOL: f64 = 1e-6;
pub const DISSIPATION_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct RoundTripOptions {
    pub drive: DriveOptions,
    pub tol: f64,
    pub ps_rel_tol: f64,
    pub min_overlap: f64,
    pub max_refinements: usize,
}

impl Default for RoundTripOptions {
    fn default() -> Self {
        Self {
            drive: DriveOptions::default(),
            tol: simulate::DEFAULT_TOL,
            ps_rel_tol: DEFAULT_PS_REL_TOL,
            min_overlap: DEFAULT_MIN_OVERLAP,
            max_refinements: DEFAULT_MAX_REFINEMENTS,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub requested_ps: f64,
    pub recovered_ps: f64,
    pub relative_error: f64,
    pub overlap: f64,
    /// Largest deviation of total probability (populations plus losses) from one.
    pub norm_residual: f64,
    /// Relative residual of the population-loss identity along the trajectory.
    pub dissipation_residual: f64,
    pub samples: usize,
    pub refinements: usize,
    pub detuned: bool,
    pub passed: bool,
}

impl RoundTripReport {
    pub fn failures(&self, opts: &RoundTripOptions) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.relative_error <= opts.ps_rel_tol) {
            out.push(format!(
                "recovered P_S {} differs from requested {} by {:.3e} (limit {:.0e})",
                self.recovered_ps, self.requested_ps, self.relative_error, opts.ps_rel_tol
            ));
        }
        if !(self.overlap >= opts.min_overlap) {
            out.push(format!("mode overlap {} below {}", self.overlap, opts.min_overlap));
        }
        if !(self.norm_residual <= NORM_TOL) {
            out.push(format!("norm residual {:.3e} above {NORM_TOL:.0e}", self.norm_residual));
        }
        if !(self.dissipation_residual <= DISSIPATION_TOL) {
            out.push(format!(
                "dissipation residual {:.3e} above {DISSIPATION_TOL:.0e}",
                self.dissipation_residual
            ));
        }
        out
    }
}

/// One round trip on a fixed grid, without refinement.
pub fn round_trip_once(
    p: &AtomCavityParams,
    pulse: &PulseSpec,
    ps: f64,
    d: &Detunings,
    drive_opts: &DriveOptions,
    tol: f64,
) -> Result<RoundTripReport> {
    let drive = if d.is_resonant() {
        drive_resonant(p, pulse, ps, drive_opts)?
    } else {
        drive_detuned(p, pulse, ps, d, &TargetWaveform::Gaussian, None, drive_opts)?
    };
    let traj = simulate::integrate(p, d, &drive, pulse.window(), tol)?;
    let recovered = success_probability(&traj, p.kappa_ex());
    let target = SampledWaveform::gaussian(pulse, traj.grid.clone())?;
    let overlap = mode_overlap(&output_waveform(&traj, p.kappa_ex()), &target)?;
    let relative_error = (recovered / ps - 1.0).abs();
    let norm_residual = traj.norm_residual();
    let dissipation_residual = simulate::norm_dissipation_residual(&traj, p)?;
    Ok(RoundTripReport {
        requested_ps: ps,
        recovered_ps: recovered,
        relative_error,
        overlap,
        norm_residual,
        dissipation_residual,
        samples: drive_opts.samples,
        refinements: 0,
        detuned: !d.is_resonant(),
        passed: false,
    })
}

/// Round trip with automatic densification of the drive grid while the
/// overlap is below target.
pub fn round_trip(
    p: &AtomCavityParams,
    pulse: &PulseSpec,
    ps: f64,
    d: &Detunings,
    opts: &RoundTripOptions,
) -> Result<RoundTripReport> {
    let mut drive_opts = opts.drive;
    let mut refinements = 0;
    loop {
        let mut report = round_trip_once(p, pulse, ps, d, &drive_opts, opts.tol)?;
        report.refinements = refinements;
        if report.overlap >= opts.min_overlap || refinements >= opts.max_refinements {
            report.passed = report.failures(opts).is_empty();
            return Ok(report);
        }
        refinements += 1;
        drive_opts.samples = (drive_opts.samples - 1) * DENSIFY_FACTOR + 1;
    }
}
