//! Quadrature: adaptive Gauss-Kronrod for callables and spline-exact rules for samples.

use super::spline::CubicSpline;

// Nodes and weights as published, kept at full length.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive G7/K15 quadrature of `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Intervals are bisected until the Kronrod/Gauss difference drops below their
/// share of the tolerance, or until a depth of 60 bisections is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let width = hi - lo;
    let mut total = 0.0;
    let mut stack = vec![(lo, hi, 0u32)];
    while let Some((x0, x1, depth)) = stack.pop() {
        let (value, err) = gk15(&f, x0, x1);
        let share = abs_tol * (x1 - x0) / width;
        if err <= share.max(f64::EPSILON * value.abs()) || depth >= 60 {
            total += value;
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((mid, x1, depth + 1));
            stack.push((x0, mid, depth + 1));
        }
    }
    sign * total
}

/// Integrates `f` over `[a, b]` after splitting at the given interior breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], abs_tol: f64) -> f64 {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points = vec![lo];
    points.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    points.push(hi);
    points.sort_by(|x, y| x.total_cmp(y));
    let pieces = (points.len() - 1) as f64;
    let total: f64 = points
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], abs_tol / pieces))
        .sum();
    sign * total
}

/// Integral of sampled data, exact for the natural cubic spline through the samples.
pub fn integrate_samples(x: &[f64], y: &[f64]) -> f64 {
    cumulative_samples(x, y).last().copied().unwrap_or(0.0)
}

/// Running integral of sampled data from `x[0]`, one value per sample.
pub fn cumulative_samples(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len(), "cumulative_samples: length mismatch");
    if x.len() < 3 {
        let mut out = vec![0.0; x.len()];
        if x.len() == 2 {
            out[1] = 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
        }
        return out;
    }
    let spline = CubicSpline::new(x.to_vec(), y.to_vec());
    let m = spline.second_derivatives();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        acc += 0.5 * h * (y[i] + y[i + 1]) - h * h * h * (m[i] + m[i + 1]) / 24.0;
        out.push(acc);
    }
    out
}
