use std::fs::File;
use std::path::PathBuf;

use serde::Serialize;

use cqed_core::analytic::GaussianModel;
use cqed_core::drive::{drive_detuned, DriveOptions, TargetWaveform};
use cqed_core::io::{read_waveform_csv, write_drive_csv};
use cqed_core::PulseSpec;

use super::dynamics::{check_fraction, synthesize};
use super::{record_params, Context};
use crate::error::CliError;

#[derive(Serialize)]
struct Summary {
    target: String,
    ps: f64,
    samples: usize,
    omega_peak: f64,
    omega_sign_changes: usize,
    carrier_frequency: f64,
}

pub fn run(ctx: &Context, waveform: Option<PathBuf>, ps: Option<f64>) -> Result<(), CliError> {
    let p = ctx.require_params()?;
    let d = ctx.detunings()?;
    let units = ctx.units();
    let ps = ps.or(ctx.cfg.ps);
    let waveform = waveform.or_else(|| ctx.cfg.waveform.as_ref().map(PathBuf::from));

    let mut out = ctx.output("drive")?;
    record_params(&mut out, &p);
    out.param("delta_u", d.delta_u);
    out.param("delta_e", d.delta_e);

    let (drive, target, ps) = match waveform {
        Some(path) => {
            let ps =
                ps.ok_or_else(|| CliError::Usage("--waveform needs --ps (absolute success probability)".into()))?;
            let file = File::open(&path)
                .map_err(|e| CliError::Usage(format!("cannot open waveform {}: {e}", path.display())))?;
            let w = read_waveform_csv(file, &units)?;
            // the pulse only matters for the Gaussian target
            let span = w.t[w.len() - 1] - w.t[0];
            let pulse = PulseSpec::new(span / 12.0)?;
            let opts = DriveOptions {
                samples: w.len(),
                safety_factor: 1.0,
            };
            let drive = drive_detuned(&p, &pulse, ps, &d, &TargetWaveform::Sampled(w), None, &opts)?;
            out.param("waveform", path.display().to_string());
            (drive, path.display().to_string(), ps)
        }
        None => {
            let tau = ctx.require_tau(Some(&p))?;
            let pulse = ctx.pulse(tau)?;
            let ps = match ps {
                Some(ps) => ps,
                None => {
                    let f = ctx.ps_fraction();
                    check_fraction(f)?;
                    out.param("ps_fraction", f);
                    f * GaussianModel::at_bound(p, pulse).ps_max()
                }
            };
            let samples = ctx.samples()?;
            out.param("tau", tau);
            out.param("samples", samples);
            (synthesize(&p, &pulse, ps, &d, samples)?, "gaussian".to_string(), ps)
        }
    };
    out.param("ps", ps);

    let mut bytes = Vec::new();
    write_drive_csv(&mut bytes, &drive, &units)?;
    out.table("drive.csv", &bytes)?;
    out.json(
        "drive.json",
        &Summary {
            target,
            ps,
            samples: drive.len(),
            omega_peak: units.rate(drive.peak()),
            omega_sign_changes: drive.sign_changes().len(),
            carrier_frequency: units.rate(drive.carrier_frequency()),
        },
    )?;
    out.finish()
}
