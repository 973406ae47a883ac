use serde::Serialize;

use cqed_core::analytic::{ps_finite_tau, ps_ub, waveform_w0, GaussianModel};
use cqed_core::drive::{drive_detuned, drive_resonant, DriveOptions, DriveWaveform, TargetWaveform};
use cqed_core::{AtomCavityParams, Detunings, PulseSpec};

use super::{csv_bytes, num, record_params, Context};
use crate::error::CliError;

#[derive(Serialize)]
struct Summary {
    tau: f64,
    ps_fraction: f64,
    ps: f64,
    ps_max: f64,
    ps_ub: f64,
    rho_uu_final: f64,
    rho_uu_inf: f64,
    /// Success probability implied by `rho_uu_inf` for a finite pulse.
    ps_from_residual: f64,
    omega_peak: f64,
    omega_sign_changes: usize,
    carrier_frequency: f64,
}

/// Drive for `ps` on the pulse grid; the detuned construction is used
/// whenever either detuning is nonzero.
pub(crate) fn synthesize(
    p: &AtomCavityParams,
    pulse: &PulseSpec,
    ps: f64,
    d: &Detunings,
    samples: usize,
) -> Result<DriveWaveform, CliError> {
    let opts = DriveOptions {
        samples,
        safety_factor: 1.0,
    };
    Ok(if d.is_resonant() {
        drive_resonant(p, pulse, ps, &opts)?
    } else {
        drive_detuned(p, pulse, ps, d, &TargetWaveform::Gaussian, None, &opts)?
    })
}

pub(crate) fn check_fraction(f: f64) -> Result<(), CliError> {
    if !(f > 0.0 && f < 1.0) {
        return Err(CliError::Domain(format!(
            "ps fraction {f} must lie in (0, 1); at the bound the drive diverges"
        )));
    }
    Ok(())
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let p = ctx.require_params()?;
    let tau = ctx.require_tau(Some(&p))?;
    let pulse = ctx.pulse(tau)?;
    let fraction = ctx.ps_fraction();
    check_fraction(fraction)?;
    let d = ctx.detunings()?;
    let samples = ctx.samples()?;
    let units = ctx.units();

    let ps_max = GaussianModel::at_bound(p, pulse).ps_max();
    let ps = fraction * ps_max;
    let model = GaussianModel::new(p, pulse, ps)?;
    let drive = synthesize(&p, &pulse, ps, &d, samples)?;

    let mut out = ctx.output("dynamics")?;
    record_params(&mut out, &p);
    out.param("tau", tau);
    out.param("ps_fraction", fraction);
    out.param("delta_u", d.delta_u);
    out.param("delta_e", d.delta_e);
    out.param("samples", samples);

    let bytes = csv_bytes(|w| {
        w.write_record([
            units.time_col("t"),
            units.amplitude_col("w0"),
            "rho_uu [1]".into(),
            "rho_ee [1]".into(),
            "rho_gg [1]".into(),
            units.rate_col("omega_mag"),
            "omega_phase [rad]".into(),
            units.rate_col("re_omega"),
            units.rate_col("im_omega"),
        ])?;
        for (i, &t) in drive.grid.iter().enumerate() {
            let s = model.snapshot(t);
            let o = drive.omega(i);
            w.write_record([
                num(units.time(t)),
                num(units.amplitude(waveform_w0(t, &pulse))),
                num(s.rho_uu),
                num(s.rho_ee),
                num(s.rho_gg),
                num(units.rate(drive.omega_mag[i])),
                num(drive.omega_phase[i]),
                num(units.rate(o.re)),
                num(units.rate(o.im)),
            ])?;
        }
        Ok(())
    })?;
    out.table("dynamics.csv", &bytes)?;

    let rho_uu_inf = model.rho_uu_at_infinity();
    let summary = Summary {
        tau: units.time(tau),
        ps_fraction: fraction,
        ps,
        ps_max,
        ps_ub: ps_ub(&p),
        rho_uu_final: model.rho_uu(*drive.grid.last().expect("grid is non-empty")),
        rho_uu_inf,
        ps_from_residual: ps_finite_tau(&p, &pulse, rho_uu_inf.clamp(0.0, 1.0 - f64::EPSILON))?,
        omega_peak: units.rate(drive.peak()),
        omega_sign_changes: drive.sign_changes().len(),
        carrier_frequency: units.rate(drive.carrier_frequency()),
    };
    out.json("dynamics.json", &summary)?;
    out.finish()
}
