use cqed_core::analytic::tau_critical;
use cqed_core::optimize::{kappa_ub_opt, kex_opt_adiabatic, kex_opt_numeric, Optimum};
use cqed_core::AtomCavityParams;

use super::{csv_bytes, num, Context};
use crate::error::CliError;

/// `(g, kappa_in)` from explicit rates, from `c_in` with `kappa_in_over_gamma`,
/// or from a physical cavity.
fn coupling(ctx: &Context) -> Result<(f64, f64), CliError> {
    let cfg = &ctx.cfg;
    let gamma = ctx.gamma();
    if let (Some(g), Some(kin)) = (cfg.g, cfg.kappa_in) {
        return Ok((g, kin));
    }
    if let Some(c_in) = cfg.c_in {
        let kin = cfg.kappa_in_over_gamma.unwrap_or(1.0) * gamma;
        return Ok(((2.0 * c_in * kin * gamma).sqrt(), kin));
    }
    if cfg.a_eff_tilde.is_some() || cfg.l_cav.is_some() || cfg.alpha_loss.is_some() {
        let p = cfg.cavity()?.to_rates(gamma)?;
        return Ok((p.g(), p.kappa_in()));
    }
    Err(CliError::Usage(
        "optimize-kex needs (g, kappa_in), (c_in, kappa_in_over_gamma) or a physical cavity in the config".into(),
    ))
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let gamma = ctx.gamma();
    let (g, kin) = coupling(ctx)?;
    if !(kin > 0.0) {
        return Err(CliError::Domain(
            "kappa_in must be positive: the internal cooperativity is unbounded".into(),
        ));
    }
    let c_in = g * g / (2.0 * kin * gamma);
    let closed = kex_opt_adiabatic(kin, c_in)?;
    let bounds = (
        ctx.cfg.kex_min.unwrap_or(1e-3 * kin),
        ctx.cfg.kex_max.unwrap_or(1e4 * kin),
    );
    // relative widths refer to the adiabatic optimum
    let reference = AtomCavityParams::new(g, gamma, kin, closed.kappa_ex_opt)?;
    let taus = ctx.taus(Some(&reference))?;
    let rows: Vec<(Option<f64>, Optimum)> = std::iter::once(Ok((None, closed.clone())))
        .chain(
            taus.iter()
                .map(|&tau| Ok((Some(tau), kex_opt_numeric(g, gamma, kin, &ctx.pulse(tau)?, bounds)?))),
        )
        .collect::<Result<_, CliError>>()?;

    let units = ctx.units();
    let mut out = ctx.output("optimize-kex")?;
    out.param("g", g);
    out.param("gamma", gamma);
    out.param("kappa_in", kin);
    out.param("c_in", c_in);
    out.param("kex_bounds", bounds);
    out.param("tau", &taus);
    out.param("tau_c_ub_opt", tau_critical(&reference));
    out.param("kappa_ub_opt", kappa_ub_opt(kin, c_in));

    let bytes = csv_bytes(|w| {
        w.write_record([
            units.time_col("tau"),
            "method".into(),
            units.rate_col("kappa_ex_opt"),
            "kappa_ex_over_kappa_in [1]".into(),
            "ps_opt [1]".into(),
            "boundary_hit".into(),
        ])?;
        for (tau, o) in &rows {
            let method = serde_json::to_value(o.method)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            w.write_record([
                tau.map(|t| num(units.time(t))).unwrap_or_else(|| "inf".into()),
                method,
                num(units.rate(o.kappa_ex_opt)),
                num(o.kappa_ex_opt / kin),
                num(o.ps_opt),
                o.boundary_hit.to_string(),
            ])?;
        }
        Ok(())
    })?;
    out.table("optimize_kex.csv", &bytes)?;
    let optima: Vec<&Optimum> = rows.iter().map(|(_, o)| o).collect();
    out.json("optimize_kex.json", &optima)?;
    out.finish()
}
