//! Complex waveforms sampled on a time grid.

use num_complex::Complex64;

use crate::analytic::waveform_w0;
use crate::error::{Error, Result};
use crate::numerics::{quad, spline::CubicSpline};
use crate::params::PulseSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl SampledWaveform {
    pub fn new(t: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::Grid(format!("{} times but {} values", t.len(), values.len())));
        }
        if t.len() < 2 {
            return Err(Error::Grid("need at least two samples".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("times must be strictly increasing".into()));
        }
        Ok(Self { t, values })
    }

    pub fn from_real(t: Vec<f64>, values: &[f64]) -> Result<Self> {
        Self::new(t, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// The Gaussian target `w0` sampled on `t`.
    pub fn gaussian(pulse: &PulseSpec, t: Vec<f64>) -> Result<Self> {
        let values: Vec<f64> = t.iter().map(|&s| waveform_w0(s, pulse)).collect();
        Self::from_real(t, &values)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// `int |w|^2 dt`.
    pub fn norm_sqr(&self) -> f64 {
        let y: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        quad::integrate_samples(&self.t, &y)
    }

    /// Copy rescaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let s = n.sqrt().recip();
        Ok(Self {
            t: self.t.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        })
    }

    /// Cubic resampling onto `t`; zero outside the original support.
    pub fn resample(&self, t: &[f64]) -> Self {
        let re = CubicSpline::new(self.t.clone(), self.values.iter().map(|v| v.re).collect());
        let im = CubicSpline::new(self.t.clone(), self.values.iter().map(|v| v.im).collect());
        let (lo, hi) = re.domain();
        let values = t
            .iter()
            .map(|&s| {
                if s < lo || s > hi {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(re.eval(s), im.eval(s))
                }
            })
            .collect();
        Self { t: t.to_vec(), values }
    }

    pub(crate) fn same_grid(&self, other: &Self) -> bool {
        if self.t.len() != other.t.len() {
            return false;
        }
        let scale = self.t[0]
            .abs()
            .max(self.t[self.t.len() - 1].abs())
            .max(f64::MIN_POSITIVE);
        self.t.iter().zip(&other.t).all(|(a, b)| (a - b).abs() <= 1e-12 * scale)
    }
}
