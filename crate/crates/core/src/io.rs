//! CSV import and export.
//!
//! Every numeric column header carries its unit. With [`Units::gamma_normalized`]
//! times are reported in units of `1/gamma` and rates in units of `gamma`;
//! otherwise values are written in the units the rates were given in.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::drive::DriveWaveform;
use crate::error::{Error, Result};
use crate::optimize::SweepGrid;
use crate::simulate::Trajectory;
use crate::waveform::SampledWaveform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    gamma: f64,
    normalized: bool,
}

impl Units {
    pub fn gamma_normalized(gamma: f64) -> Self {
        Self {
            gamma,
            normalized: true,
        }
    }

    pub fn natural() -> Self {
        Self {
            gamma: 1.0,
            normalized: false,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn time(&self, t: f64) -> f64 {
        if self.normalized {
            t * self.gamma
        } else {
            t
        }
    }

    pub fn rate(&self, r: f64) -> f64 {
        if self.normalized {
            r / self.gamma
        } else {
            r
        }
    }

    /// Inverse of [`Units::time`], for reading files written in these units.
    pub fn time_from(&self, t: f64) -> f64 {
        if self.normalized {
            t / self.gamma
        } else {
            t
        }
    }

    pub fn time_label(&self) -> &'static str {
        if self.normalized {
            "1/gamma"
        } else {
            "time"
        }
    }

    pub fn rate_label(&self) -> &'static str {
        if self.normalized {
            "gamma"
        } else {
            "1/time"
        }
    }

    pub fn time_col(&self, name: &str) -> String {
        format!("{name} [{}]", self.time_label())
    }

    pub fn rate_col(&self, name: &str) -> String {
        format!("{name} [{}]", self.rate_label())
    }

    /// Waveform amplitudes scale as `1/sqrt(time)`.
    pub fn amplitude_col(&self, name: &str) -> String {
        if self.normalized {
            format!("{name} [sqrt(gamma)]")
        } else {
            format!("{name} [1/sqrt(time)]")
        }
    }

    pub fn amplitude(&self, a: f64) -> f64 {
        if self.normalized {
            a / self.gamma.sqrt()
        } else {
            a
        }
    }
}

fn fmt(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:e}")
}

/// Columns `t, omega_mag, omega_phase, re_omega, im_omega`.
pub fn write_drive_csv<W: Write>(out: W, drive: &DriveWaveform, units: &Units) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        units.time_col("t"),
        units.rate_col("omega_mag"),
        "omega_phase [rad]".to_string(),
        units.rate_col("re_omega"),
        units.rate_col("im_omega"),
    ])?;
    for i in 0..drive.len() {
        let o = drive.omega(i);
        w.write_record([
            fmt(units.time(drive.grid[i])),
            fmt(units.rate(drive.omega_mag[i])),
            fmt(drive.omega_phase[i]),
            fmt(units.rate(o.re)),
            fmt(units.rate(o.im)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t`, re/im of each amplitude, the three populations, `emitted`,
/// `internal_loss`, `decayed`, and optionally the drive's real and imaginary
/// parts at the same times.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    traj: &Trajectory,
    drive: Option<&[Complex64]>,
    units: &Units,
) -> Result<()> {
    if let Some(d) = drive {
        if d.len() != traj.len() {
            return Err(Error::Grid("drive and trajectory lengths differ".into()));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![units.time_col("t")];
    for name in [
        "re_alpha_u",
        "im_alpha_u",
        "re_alpha_e",
        "im_alpha_e",
        "re_alpha_g",
        "im_alpha_g",
    ] {
        header.push(format!("{name} [1]"));
    }
    for name in ["rho_uu", "rho_ee", "rho_gg", "emitted", "internal_loss", "decayed"] {
        header.push(format!("{name} [1]"));
    }
    if drive.is_some() {
        header.push(units.rate_col("re_omega"));
        header.push(units.rate_col("im_omega"));
    }
    w.write_record(&header)?;
    for i in 0..traj.len() {
        let (u, e, g) = (traj.alpha_u[i], traj.alpha_e[i], traj.alpha_g[i]);
        let mut row = vec![
            fmt(units.time(traj.grid[i])),
            fmt(u.re),
            fmt(u.im),
            fmt(e.re),
            fmt(e.im),
            fmt(g.re),
            fmt(g.im),
            fmt(u.norm_sqr()),
            fmt(e.norm_sqr()),
            fmt(g.norm_sqr()),
            fmt(traj.emitted[i]),
            fmt(traj.internal_loss[i]),
            fmt(traj.decayed[i]),
        ];
        if let Some(d) = drive {
            row.push(fmt(units.rate(d[i].re)));
            row.push(fmt(units.rate(d[i].im)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Generic table writer: header names are taken as given (they should carry units).
pub fn write_table<W: Write>(out: W, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Grid(format!(
                "row has {} values for {} columns",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|v| fmt(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format sweep table: `axis1, axis2, ps_max, ps_ub, kappa_ex_opt, t_ex_opt, regime`.
/// Empty fields mark quantities that the sweep does not produce.
pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepGrid, units: &Units) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let axis_header = |name: &str| match name {
        "gamma_tau" => "gamma_tau [1]".to_string(),
        "l_cav" => units.time_col("l_cav"),
        other => format!("{other} [1]"),
    };
    let axis_value = |name: &str, v: f64| if name == "l_cav" { units.time(v) } else { v };
    w.write_record([
        axis_header(&sweep.axis1.name),
        axis_header(&sweep.axis2.name),
        "ps_max [1]".to_string(),
        "ps_ub [1]".to_string(),
        units.rate_col("kappa_ex_opt"),
        "t_ex_opt [1]".to_string(),
        "regime".to_string(),
    ])?;
    for c in &sweep.cells {
        w.write_record([
            fmt(axis_value(&sweep.axis1.name, c.x)),
            fmt(axis_value(&sweep.axis2.name, c.y)),
            fmt(c.ps_max),
            fmt(c.ps_ub),
            c.kappa_ex_opt.map(|k| fmt(units.rate(k))).unwrap_or_default(),
            c.t_ex_opt.map(fmt).unwrap_or_default(),
            c.regime.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a waveform from CSV with two columns `(t, value)` or three columns
/// `(t, re, im)`. A non-numeric first row is treated as a header; lines
/// starting with `#` are skipped. Times are converted back with `units`.
pub fn read_waveform_csv<R: Read>(input: R, units: &Units) -> Result<SampledWaveform> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut t = Vec::new();
    let mut values = Vec::new();
    let mut columns: Option<usize> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let fields = match parsed {
            Ok(f) => f,
            Err(_) if t.is_empty() && columns.is_none() => {
                // header row
                columns = Some(record.len());
                continue;
            }
            Err(e) => return Err(Error::Format(format!("line {line}: {e}"))),
        };
        let n = *columns.get_or_insert(fields.len());
        if fields.len() != n {
            return Err(Error::Format(format!(
                "line {line}: expected {n} columns, found {}",
                fields.len()
            )));
        }
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("line {line}: non-finite value")));
        }
        let value = match n {
            2 => Complex64::new(fields[1], 0.0),
            3 => Complex64::new(fields[1], fields[2]),
            _ => {
                return Err(Error::Format(format!(
                    "line {line}: expected 2 columns (t, value) or 3 columns (t, re, im), found {n}"
                )))
            }
        };
        t.push(units.time_from(fields[0]));
        values.push(value);
    }
    if t.is_empty() {
        return Err(Error::Format("no samples".into()));
    }
    // amplitudes are renormalized downstream, so only the time axis is converted
    SampledWaveform::new(t, values).map_err(|e| match e {
        Error::Grid(msg) => Error::Format(msg),
        other => other,
    })
}

/// Writes a waveform as `(t, re, im)`.
pub fn write_waveform_csv<W: Write>(out: W, w: &SampledWaveform, units: &Units) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record([
        units.time_col("t"),
        units.amplitude_col("re"),
        units.amplitude_col("im"),
    ])?;
    for (t, v) in w.t.iter().zip(&w.values) {
        wr.write_record([
            fmt(units.time(*t)),
            fmt(units.amplitude(v.re)),
            fmt(units.amplitude(v.im)),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
