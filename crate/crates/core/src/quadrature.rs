//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The interval is first split at the caller's breakpoints; the subinterval
//! with the largest error estimate is bisected until the summed estimate
//! meets `max(abs_tol, rel_tol * |I|)`.

#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

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
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values that can be integrated: a vector space with a norm.
pub trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        // Componentwise max keeps a relative tolerance meaningful for the
        // smaller component too.
        self.re.abs().max(self.im.abs())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-6,
            abs: 0.0,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T: Integrand, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).norm())
}

/// Integrate `f` over `[a, b]`, splitting first at every breakpoint strictly
/// inside the interval.
pub fn integrate<T, F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<QuadResult<T>>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::usage("integration limits must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            error: 0.0,
            evaluations: 0,
        });
    }
    if a > b {
        let r = integrate(f, b, a, breakpoints, tol)?;
        return Ok(QuadResult {
            value: r.value * -1.0,
            ..r
        });
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b && p.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        let (value, error) = kronrod(&f, lo, hi);
        evaluations += 15;
        heap.push(Segment {
            a: lo,
            b: hi,
            value,
            error,
        });
        lo = hi;
    }

    loop {
        let (total, err) = heap.iter().fold((T::zero(), 0.0), |(s, e), seg| {
            (s + seg.value, e + seg.error)
        });
        let target = tol.abs.max(tol.rel * total.norm());
        if err <= target {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        if heap.len() >= tol.max_subdivisions {
            return Err(Error::Quadrature {
                achieved: err / total.norm().max(f64::MIN_POSITIVE),
                requested: tol.rel,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be bisected in f64.
            return Err(Error::Quadrature {
                achieved: err / total.norm().max(f64::MIN_POSITIVE),
                requested: tol.rel,
            });
        }
        for (x0, x1) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod(&f, x0, x1);
            evaluations += 15;
            heap.push(Segment {
                a: x0,
                b: x1,
                value,
                error,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(
            |x: f64| x.powi(5) - 3.0 * x * x,
            0.0,
            2.0,
            &[],
            Tolerance::default(),
        )
        .unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn lorentzian_peak_with_breakpoint() {
        let w = 1e-4;
        let f = |x: f64| w / (x * x + w * w);
        let r = integrate(
            f,
            -1.0,
            1.0,
            &[0.0],
            Tolerance {
                rel: 1e-10,
                ..Default::default()
            },
        )
        .unwrap();
        let exact = 2.0 * (1.0 / w).atan();
        assert!((r.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn reversed_limits_negate() {
        let r = integrate(|x: f64| x.exp(), 1.0, 0.0, &[], Tolerance::default()).unwrap();
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        let r = integrate(
            |x: f64| Complex64::new(x.cos(), x.sin()),
            0.0,
            std::f64::consts::PI,
            &[],
            Tolerance::default(),
        )
        .unwrap();
        assert!(r.value.re.abs() < 1e-12);
        assert!((r.value.im - 2.0).abs() < 1e-12);
    }

    #[test]
    fn subdivision_cap_reports_error() {
        let tol = Tolerance {
            rel: 1e-14,
            abs: 0.0,
            max_subdivisions: 4,
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, &[], tol).unwrap_err();
        match err {
            Error::Quadrature {
                achieved,
                requested,
            } => {
                assert!(achieved > requested);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
