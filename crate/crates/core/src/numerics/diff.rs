//! Fourth-order finite differences on uniform grids.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Returns the spacing of `x` if it is uniform to relative precision 1e-9.
pub fn uniform_spacing(x: &[f64]) -> Result<f64> {
    if x.len() < 5 {
        return Err(Error::Grid(format!("need at least 5 samples, got {}", x.len())));
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Grid("abscissa is not increasing".into()));
    }
    let scale = x[0].abs().max(x[x.len() - 1].abs());
    for (i, w) in x.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h + 1e-12 * scale {
            return Err(Error::Grid(format!("non-uniform spacing at sample {i}")));
        }
    }
    Ok(h)
}

/// Derivative of uniformly sampled data: central differences in the interior,
/// one-sided fourth-order stencils on the two samples nearest each edge.
pub fn derivative<T>(y: &[T], h: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = y.len();
    assert!(n >= 5, "derivative: need at least 5 samples");
    let s = 1.0 / (12.0 * h);
    let mut d = Vec::with_capacity(n);
    d.push((y[1] * 48.0 - y[0] * 25.0 - y[2] * 36.0 + y[3] * 16.0 - y[4] * 3.0) * s);
    d.push((y[2] * 18.0 - y[0] * 3.0 - y[1] * 10.0 - y[3] * 6.0 + y[4]) * s);
    for i in 2..n - 2 {
        d.push((y[i - 2] - y[i - 1] * 8.0 + y[i + 1] * 8.0 - y[i + 2]) * s);
    }
    let k = n - 1;
    d.push((y[k] * 3.0 + y[k - 1] * 10.0 - y[k - 2] * 18.0 + y[k - 3] * 6.0 - y[k - 4]) * s);
    d.push((y[k] * 25.0 - y[k - 1] * 48.0 + y[k - 2] * 36.0 - y[k - 3] * 16.0 + y[k - 4] * 3.0) * s);
    d
}
