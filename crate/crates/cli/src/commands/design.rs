use std::fmt::Write as _;

use serde::Serialize;

use cqed_core::optimize::{design_conditions, DesignReport};

use super::{record_params, Context};
use crate::error::CliError;

#[derive(Serialize)]
struct Rates {
    g: f64,
    gamma: f64,
    kappa_in: f64,
    kappa_ex: f64,
    kappa: f64,
}

#[derive(Serialize)]
struct Document<'a> {
    a_eff_tilde: f64,
    l_cav: f64,
    alpha_loss: f64,
    tau: Option<f64>,
    rates: Rates,
    #[serde(flatten)]
    report: &'a DesignReport,
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let cav = ctx.cfg.cavity()?;
    let gamma = ctx.gamma();
    let p = cav.to_rates(gamma)?;
    let taus = ctx.taus(Some(&p))?;
    let tau = match taus.as_slice() {
        [] => None,
        [t] => Some(*t),
        _ => return Err(CliError::Usage("design takes at most one pulse width".into())),
    };
    let report = design_conditions(&cav, gamma, tau)?;
    let units = ctx.units();

    let mut out = ctx.output("design")?;
    out.param("a_eff_tilde", cav.a_eff_tilde());
    out.param("l_cav", cav.l_cav());
    out.param("alpha_loss", cav.alpha_loss());
    out.param("t_ex", cav.t_ex());
    out.param("tau", tau);
    record_params(&mut out, &p);

    let mut text = String::new();
    let _ = writeln!(
        text,
        "cavity: A_eff = {}, L_cav = {}, alpha_loss = {}, T_ex = {}",
        cav.a_eff_tilde(),
        cav.l_cav(),
        cav.alpha_loss(),
        cav.t_ex()
    );
    let rl = units.rate_label();
    let _ = writeln!(
        text,
        "rates [{rl}]: g = {}, kappa_in = {}, kappa_ex = {}, gamma = {}",
        units.rate(p.g()),
        units.rate(p.kappa_in()),
        units.rate(p.kappa_ex()),
        units.rate(p.gamma())
    );
    let _ = writeln!(text, "C_in = {}, regime = {}", report.c_in, report.regime);
    let _ = writeln!(
        text,
        "T_ex recommended = {} (exact optimum {})",
        report.t_ex_recommended, report.t_ex_exact
    );
    let _ = writeln!(text, "ps_ub = {} (optimum {})", report.ps_ub_actual, report.ps_ub_opt);
    let _ = writeln!(
        text,
        "tau_c = {} [{}] ({} branch)",
        units.time(report.tau_c),
        units.time_label(),
        report.tau_c_branch
    );
    for c in &report.conditions {
        let _ = writeln!(
            text,
            "[{}] {}: margin {:.4}; {}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.margin,
            c.detail
        );
    }
    out.table("design.txt", text.as_bytes())?;
    out.json(
        "design.json",
        &Document {
            a_eff_tilde: cav.a_eff_tilde(),
            l_cav: cav.l_cav(),
            alpha_loss: cav.alpha_loss(),
            tau,
            rates: Rates {
                g: p.g(),
                gamma: p.gamma(),
                kappa_in: p.kappa_in(),
                kappa_ex: p.kappa_ex(),
                kappa: p.kappa(),
            },
            report: &report,
        },
    )?;
    out.finish()
}
