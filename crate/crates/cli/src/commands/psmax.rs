use cqed_core::analytic::{ps_max_detailed, ps_ub, tau_critical};

use super::{csv_bytes, num, record_params, Context};
use crate::error::CliError;

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let p = ctx.require_params()?;
    let taus = ctx.taus(Some(&p))?;
    if taus.is_empty() {
        return Err(CliError::Usage(
            "psmax needs at least one pulse width (--tau or `tau` in the config)".into(),
        ));
    }
    let units = ctx.units();
    let ub = ps_ub(&p);
    let tc = tau_critical(&p);
    let regime = p.regime();

    let mut out = ctx.output("psmax")?;
    record_params(&mut out, &p);
    out.param("tau", &taus);

    let rows = taus
        .iter()
        .map(|&tau| Ok((tau, ps_max_detailed(&p, &ctx.pulse(tau)?))))
        .collect::<Result<Vec<_>, CliError>>()?;
    let bytes = csv_bytes(|w| {
        w.write_record([
            units.time_col("tau"),
            "ps_max [1]".into(),
            "ps_ub [1]".into(),
            "ratio [1]".into(),
            "regime".into(),
            units.time_col("tau_c"),
            units.time_col("t_m"),
        ])?;
        for (tau, r) in &rows {
            w.write_record([
                num(units.time(*tau)),
                num(r.value),
                num(ub),
                num(r.value / ub),
                regime.as_str().into(),
                num(units.time(tc)),
                num(units.time(r.t_m)),
            ])?;
        }
        Ok(())
    })?;
    out.table("psmax.csv", &bytes)?;
    out.finish()
}
