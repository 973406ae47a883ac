use std::collections::BTreeMap;

use serde::Serialize;

use cqed_core::io::write_sweep_csv;
use cqed_core::optimize::{kappa_ub_opt, sweep_fig2, sweep_fig6, sweep_fig7, Axis, Overlay, RidgePoint, Scale};

use super::{csv_bytes, num, Context};
use crate::error::CliError;
use crate::SweepKind;

const FIG2_C: f64 = 10.0;
const FIG2_ETA: f64 = 0.95;
const FIG6_C_IN: f64 = 200.0;
const FIG6_KAPPA_IN: f64 = 1.0;
const FIG7_C_IN: f64 = 200.0;
const FIG7_ALPHA: f64 = 1e-3;

#[derive(Serialize)]
struct Meta<'a> {
    kind: &'a str,
    axis1: &'a Axis,
    axis2: &'a Axis,
    fixed: &'a BTreeMap<String, f64>,
    cells: usize,
    overlays: &'a [Overlay],
    ridge: &'a [RidgePoint],
}

/// Log axis over `[min, max]` unless the config overrides it. `--grid`
/// fixes the point count; otherwise the default resolution is used.
fn axis(ctx: &Context, name: &str, first: bool, min: f64, max: f64) -> Result<Axis, CliError> {
    let (lo, hi, count) = if first {
        (ctx.cfg.x_min, ctx.cfg.x_max, ctx.cfg.x_count)
    } else {
        (ctx.cfg.y_min, ctx.cfg.y_max, ctx.cfg.y_count)
    };
    let (min, max) = (lo.unwrap_or(min), hi.unwrap_or(max));
    Ok(match count.or(ctx.flags.grid) {
        Some(n) => Axis::new(name, Scale::Log, min, max, n)?,
        None => Axis::log_default(name, min, max)?,
    })
}

pub fn run(ctx: &Context, kind: SweepKind) -> Result<(), CliError> {
    let units = ctx.units();
    let mut out = ctx.output("sweep")?;
    let grid = match kind {
        SweepKind::Fig2 => {
            let c = ctx.cfg.cooperativity.unwrap_or(FIG2_C);
            let eta = ctx.cfg.eta_esc.unwrap_or(FIG2_ETA);
            let x = axis(ctx, "gamma_tau", true, 1e-3, 1e4)?;
            let y = axis(ctx, "g_over_kappa", false, 1e-2, 1e2)?;
            sweep_fig2(c, eta, x, y)?
        }
        SweepKind::Fig6 => {
            let c_in = ctx.cfg.c_in.unwrap_or(FIG6_C_IN);
            let kin = ctx.cfg.kappa_in_over_gamma.unwrap_or(FIG6_KAPPA_IN);
            let k = kappa_ub_opt(kin, c_in);
            let g2 = 2.0 * c_in * kin;
            let tau_c = (1.0 / k).max(k / g2);
            let x = axis(ctx, "gamma_tau", true, 1e-2 * tau_c, 1e3 * tau_c)?;
            let y = axis(ctx, "kappa_ex_over_kappa_in", false, 1e-1, 1e3)?;
            sweep_fig6(c_in, kin, x, y)?
        }
        SweepKind::Fig7 => {
            let c_in = ctx.cfg.c_in.unwrap_or(FIG7_C_IN);
            let alpha = ctx.cfg.alpha_loss.unwrap_or(FIG7_ALPHA);
            let x = axis(ctx, "gamma_tau", true, 1e-3, 1e3)?;
            let y = axis(ctx, "l_cav", false, 1e-6, 1.0)?;
            sweep_fig7(c_in, alpha, x, y)?
        }
    };
    out.param("kind", &grid.kind);
    out.param("axis1", &grid.axis1);
    out.param("axis2", &grid.axis2);
    out.param("fixed", &grid.fixed);

    let mut bytes = Vec::new();
    write_sweep_csv(&mut bytes, &grid, &units)?;
    out.table("sweep.csv", &bytes)?;
    out.json(
        "sweep.meta.json",
        &Meta {
            kind: &grid.kind,
            axis1: &grid.axis1,
            axis2: &grid.axis2,
            fixed: &grid.fixed,
            cells: grid.cells.len(),
            overlays: &grid.overlays,
            ridge: &grid.ridge,
        },
    )?;
    if !grid.ridge.is_empty() {
        let ridge = csv_bytes(|w| {
            w.write_record([
                "gamma_tau [1]",
                "kappa_ex_over_kappa_in [1]",
                "ps [1]",
                "boundary_hit",
                "discontinuous",
            ])?;
            for r in &grid.ridge {
                w.write_record([
                    num(r.x),
                    num(r.kappa_ex_over_kappa_in),
                    num(r.ps),
                    r.boundary_hit.to_string(),
                    r.discontinuous.to_string(),
                ])?;
            }
            Ok(())
        })?;
        out.file("ridge.csv", &ridge)?;
    }
    out.finish()
}
