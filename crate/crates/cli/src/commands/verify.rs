use serde::Serialize;

use cqed_core::analytic::{tau_critical, GaussianModel};
use cqed_core::drive::DriveOptions;
use cqed_core::simulate::{MAX_TOL, MIN_TOL};
use cqed_core::verify::{round_trip, RoundTripOptions, RoundTripReport};
use cqed_core::{AtomCavityParams, Detunings};

use super::dynamics::check_fraction;
use super::{csv_bytes, num, Context};
use crate::config::parse_taus;
use crate::error::CliError;

/// Reference points spanning the four regimes: `C = 10`, `eta_esc = 0.95`, `gamma = 1`.
pub const REFERENCE_POINTS: [(&str, f64); 4] = [("A", 0.1), ("B", 1.0), ("C", 10.0), ("D", 100.0)];
const REFERENCE_C: f64 = 10.0;
const REFERENCE_ETA: f64 = 0.95;
const DEFAULT_TAU_OVER_TAU_C: f64 = 10.0;

#[derive(Serialize)]
struct Case {
    point: String,
    g: f64,
    gamma: f64,
    kappa_in: f64,
    kappa_ex: f64,
    tau: f64,
    delta_u: f64,
    delta_e: f64,
    report: RoundTripReport,
    /// Relative difference between detuned and resonant recovered P_S.
    detuning_deviation: Option<f64>,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct Report {
    requested_tol: f64,
    integrator_tol: f64,
    ps_fraction: f64,
    passed: bool,
    failures: Vec<String>,
    cases: Vec<Case>,
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let requested_tol = ctx.tol();
    if !(requested_tol > 0.0) || requested_tol > MAX_TOL {
        return Err(CliError::Domain(format!(
            "--tol {requested_tol} outside (0, {MAX_TOL:e}]"
        )));
    }
    // Tighter than the integrator can honour: run at its floor and fail.
    let tol = requested_tol.max(MIN_TOL);
    let fraction = ctx.ps_fraction();
    check_fraction(fraction)?;
    let d = ctx.detunings()?;
    let units = ctx.units();
    let opts = RoundTripOptions {
        drive: DriveOptions {
            samples: ctx.samples()?,
            safety_factor: 1.0,
        },
        tol,
        ..RoundTripOptions::default()
    };

    let points: Vec<(String, AtomCavityParams)> = match ctx.params()? {
        Some(p) => vec![("config".to_string(), p)],
        None => REFERENCE_POINTS
            .iter()
            .map(|&(name, r)| {
                Ok((
                    name.to_string(),
                    AtomCavityParams::from_ratios(r, REFERENCE_C, REFERENCE_ETA, 1.0)?,
                ))
            })
            .collect::<Result<_, CliError>>()?,
    };

    let mut cases = Vec::new();
    for (name, p) in &points {
        let mut taus = if ctx.flags.tau.is_empty() && ctx.cfg.tau.is_none() && ctx.cfg.tau_over_tau_c.is_none() {
            vec![DEFAULT_TAU_OVER_TAU_C * tau_critical(p)]
        } else if ctx.flags.tau.is_empty() {
            ctx.cfg.taus(Some(p))?
        } else {
            parse_taus(&ctx.flags.tau, Some(p))?
        };
        taus.dedup();
        for tau in taus {
            let pulse = ctx.pulse(tau)?;
            let ps = fraction * GaussianModel::at_bound(*p, pulse).ps_max();
            let context = |e: cqed_core::Error| CliError::Domain(format!("point {name}, tau {tau}: {e}"));
            let resonant = round_trip(p, &pulse, ps, &Detunings::resonant(), &opts).map_err(context)?;
            let mut runs = vec![(Detunings::resonant(), resonant.clone(), None)];
            if !d.is_resonant() {
                let detuned = round_trip(p, &pulse, ps, &d, &opts).map_err(context)?;
                let dev = (detuned.recovered_ps / resonant.recovered_ps - 1.0).abs();
                runs.push((d, detuned, Some(dev)));
            }
            for (det, report, dev) in runs {
                let mut failures = report.failures(&opts);
                if let Some(dev) = dev {
                    if !(dev <= opts.ps_rel_tol) {
                        failures.push(format!(
                            "detuned P_S differs from resonant by {dev:.3e} (limit {:.0e})",
                            opts.ps_rel_tol
                        ));
                    }
                }
                cases.push(Case {
                    point: name.clone(),
                    g: p.g(),
                    gamma: p.gamma(),
                    kappa_in: p.kappa_in(),
                    kappa_ex: p.kappa_ex(),
                    tau,
                    delta_u: det.delta_u,
                    delta_e: det.delta_e,
                    report,
                    detuning_deviation: dev,
                    failures,
                });
            }
        }
    }

    let mut failures: Vec<String> = cases
        .iter()
        .flat_map(|c| {
            c.failures
                .iter()
                .map(move |f| format!("point {} ({}, {}): {f}", c.point, c.delta_u, c.delta_e))
        })
        .collect();
    if tol != requested_tol {
        failures.push(format!(
            "requested tolerance {requested_tol:e} is below the integrator floor {MIN_TOL:e}; ran at the floor"
        ));
    }

    let mut out = ctx.output("verify")?;
    out.param("tol", requested_tol);
    out.param("ps_fraction", fraction);
    out.param("delta_u", d.delta_u);
    out.param("delta_e", d.delta_e);
    out.param("samples", opts.drive.samples);

    let bytes = csv_bytes(|w| {
        w.write_record([
            "point".to_string(),
            units.rate_col("g"),
            units.rate_col("kappa_in"),
            units.rate_col("kappa_ex"),
            units.time_col("tau"),
            units.rate_col("delta_u"),
            units.rate_col("delta_e"),
            "requested_ps [1]".into(),
            "recovered_ps [1]".into(),
            "relative_error [1]".into(),
            "overlap [1]".into(),
            "norm_residual [1]".into(),
            "dissipation_residual [1]".into(),
            "samples [1]".into(),
            "passed".into(),
        ])?;
        for c in &cases {
            let r = &c.report;
            w.write_record([
                c.point.clone(),
                num(units.rate(c.g)),
                num(units.rate(c.kappa_in)),
                num(units.rate(c.kappa_ex)),
                num(units.time(c.tau)),
                num(units.rate(c.delta_u)),
                num(units.rate(c.delta_e)),
                num(r.requested_ps),
                num(r.recovered_ps),
                num(r.relative_error),
                num(r.overlap),
                num(r.norm_residual),
                num(r.dissipation_residual),
                r.samples.to_string(),
                c.failures.is_empty().to_string(),
            ])?;
        }
        Ok(())
    })?;
    out.table("verify.csv", &bytes)?;
    let passed = failures.is_empty();
    out.json(
        "verify.json",
        &Report {
            requested_tol,
            integrator_tol: tol,
            ps_fraction: fraction,
            passed,
            failures: failures.clone(),
            cases,
        },
    )?;
    out.finish()?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join("\n  ")))
    }
}
