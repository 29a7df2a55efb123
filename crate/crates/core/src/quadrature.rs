//! Adaptive Gauss–Kronrod (7/15-point) integration on finite intervals, and
//! a nested 2-D variant for rectangles.

use crate::error::{Error, Result};

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
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

/// One 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, abs_tol: f64, depth: u32) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let (left, el) = kronrod(f, a, mid);
    let (right, er) = kronrod(f, mid, b);
    let sum = left + right;
    if el + er <= abs_tol || (sum - whole).abs() <= abs_tol * 1e-3 {
        return Ok(sum);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Convergence(format!(
            "quadrature on [{a}, {b}] did not reach tolerance {abs_tol}"
        )));
    }
    Ok(adapt(f, a, mid, left, abs_tol / 2.0, depth + 1)? + adapt(f, mid, b, right, abs_tol / 2.0, depth + 1)?)
}

/// `∫_a^b f` to roughly `rel_tol` relative (or `abs_floor` absolute) accuracy.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (whole, err) = kronrod(&f, a, b);
    let tol = (rel_tol * whole.abs()).max(abs_floor);
    if err <= tol * 1e-2 {
        return Ok(whole);
    }
    adapt(&f, a, b, whole, tol, 0)
}

/// `∫_{x0}^{x1} ∫_{y0}^{y1} f(x, y) dy dx` by nesting [`integrate`].
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64> {
    let inner_error = std::cell::Cell::new(None);
    let outer = integrate(
        |x| match integrate(|y| f(x, y), y0, y1, rel_tol * 0.1, abs_floor * 0.1) {
            Ok(v) => v,
            Err(e) => {
                inner_error.set(Some(e.to_string()));
                f64::NAN
            }
        },
        x0,
        x1,
        rel_tol,
        abs_floor,
    )?;
    match inner_error.into_inner() {
        Some(msg) => Err(Error::Convergence(msg)),
        None => Ok(outer),
    }
}
