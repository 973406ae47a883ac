//! Dormand-Prince 5(4) explicit integrator with step-size control and
//! fourth-order continuous output.
//!
//! The state is a flat `f64` slice; complex systems pack real and imaginary
//! parts side by side.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size. `None` means the whole span.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-9,
            h_max: None,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output (Hairer, Norsett & Wanner, contd5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `dy/dt = f(t, y)` from `t0` to `t_end` and returns the state at
/// every time in `t_out` (which must be sorted and lie inside `[t0, t_end]`).
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    t_out: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<f64>>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    if !(t_end > t0) {
        return Err(Error::domain("t_end", t_end, "must exceed the start time"));
    }
    if t_out.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Grid("output times must be sorted".into()));
    }
    if t_out.first().is_some_and(|&t| t < t0) || t_out.last().is_some_and(|&t| t > t_end) {
        return Err(Error::Grid("output times must lie inside the integration span".into()));
    }

    let span = t_end - t0;
    let h_max = opts.h_max.unwrap_or(span).min(span);
    let mut stats = OdeStats::default();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut rcont = vec![[0.0; 5]; n];

    f(t, &y, &mut k1);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, opts, h_max, &mut stats);

    let mut out = Vec::with_capacity(t_out.len());
    let mut next_out = 0;
    while next_out < t_out.len() && t_out[next_out] <= t {
        out.push(y.clone());
        next_out += 1;
    }

    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::TooManySteps { steps, t, t_end });
        }
        steps += 1;
        if h < 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, &mut k6);
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y1, &mut k7);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n as f64).sqrt();

        if err <= 1.0 {
            // Lund stabilisation as in Hairer's DOPRI5 (beta = 0.04).
            let fac11 = err.max(1e-16).powf(0.2 - 0.04 * 0.75);
            let mut fac = fac11 / fac_old.powf(0.04);
            fac = (fac / 0.9).clamp(0.1, 5.0);
            let mut h_new = h / fac;
            fac_old = err.max(1e-4);

            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[i] = [
                    y[i],
                    ydiff,
                    bspl,
                    ydiff - h * k7[i] - bspl,
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]),
                ];
            }
            let t_new = if last { t_end } else { t + h };
            while next_out < t_out.len() && t_out[next_out] <= t_new {
                let s = (t_out[next_out] - t) / h;
                let s1 = 1.0 - s;
                out.push(
                    rcont
                        .iter()
                        .map(|r| r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4]))))
                        .collect(),
                );
                next_out += 1;
            }

            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut y1);
            t = t_new;
            stats.accepted += 1;

            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(h_max);
        } else {
            let fac11 = err.powf(0.2 - 0.04 * 0.75);
            h /= (fac11 / 0.9).min(5.0);
            last_rejected = true;
            stats.rejected += 1;
        }
    }
    // Output times equal to t_end that were not reached through round-off.
    while next_out < t_out.len() {
        out.push(y.clone());
        next_out += 1;
    }
    Ok((out, stats))
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], opts: &OdeOptions, h_max: f64, stats: &mut OdeStats) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(h_max);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(t + h, &y1, &mut f1);
    stats.evaluations += 1;
    let mut der2 = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let opts = OdeOptions {
            rtol: 1e-10,
            atol: 1e-10,
            ..Default::default()
        };
        let (ys, stats) = dopri5(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            10.0,
            &ts,
            &opts,
        )
        .unwrap();
        assert_eq!(ys.len(), ts.len());
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t = {t}");
            assert!((y[1] + t.sin()).abs() < 1e-8);
        }
        assert!(stats.accepted > 10);
    }

    #[test]
    fn exponential_decay() {
        let (ys, _) = dopri5(
            |_t, y, dy| dy[0] = -3.0 * y[0],
            0.0,
            &[1.0],
            2.0,
            &[2.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((ys[0][0] - (-6.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_output_times() {
        let r = dopri5(|_, _, dy| dy[0] = 0.0, 0.0, &[1.0], 1.0, &[2.0], &OdeOptions::default());
        assert!(matches!(r, Err(Error::Grid(_))));
    }

    #[test]
    fn step_limit_is_reported() {
        let opts = OdeOptions {
            max_steps: 3,
            h_max: Some(1e-3),
            ..Default::default()
        };
        let r = dopri5(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 1.0, &[], &opts);
        assert!(matches!(r, Err(Error::TooManySteps { .. })));
    }
}
