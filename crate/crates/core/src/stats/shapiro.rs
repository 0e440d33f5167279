//! Shapiro-Wilk W test with Royston's (1995, AS R94) coefficient and
//! p-value approximations, complete samples only.

use super::dist::{normal_quantile, normal_sf};
use super::{check_finite, Method, StatsError, TestResult};
use crate::scalar::Scalar;

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

const C1: [f64; 6] = [0.0, 0.221_157, -0.147_981, -2.071_19, 4.434_685, -2.706_056];
const C2: [f64; 6] = [0.0, 0.042_981, -0.293_762, -1.752_461, 5.682_633, -3.582_633];
const C3: [f64; 4] = [0.544, -0.399_78, 0.025_054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.778_57, 0.062_767, -0.002_032_2];
const C5: [f64; 4] = [-1.5861, -0.310_82, -0.083_751, 0.003_891_5];
const C6: [f64; 3] = [-0.4803, -0.082_676, 0.003_030_2];
const G: [f64; 2] = [-2.273, 0.459];

/// `c[0] + c[1] x + c[2] x^2 + ...`
fn poly<T: Scalar>(c: &[f64], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + T::lit(ci))
}

/// Antisymmetric coefficients for the lower half of the order statistics;
/// `a[i]` pairs `x_(n-1-i)` with `x_(i)`.
fn coefficients<T: Scalar>(n: usize) -> Vec<T> {
    let nn2 = n / 2;
    if n == 3 {
        return vec![T::FRAC_1_SQRT_2()];
    }
    let an = T::from_usize_lossy(n);
    let an25 = an + T::lit(0.25);
    let m: Vec<T> = (1..=nn2)
        .map(|i| normal_quantile((T::from_usize_lossy(i) - T::lit(0.375)) / an25))
        .collect();
    let summ2 = T::lit(2.0) * m.iter().map(|&v| v * v).sum::<T>();
    let ssumm2 = summ2.sqrt();
    let rsn = T::one() / an.sqrt();
    let two = T::lit(2.0);
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![T::zero(); nn2];
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - two * m[0] * m[0] - two * m[1] * m[1])
            / (T::one() - two * a1 * a1 - two * a2 * a2))
            .sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - two * m[0] * m[0]) / (T::one() - two * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for i in first..nn2 {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk normality test for `3 <= n <= 5000` non-constant values.
///
/// `W` is invariant under positive affine transforms of the data.
pub fn shapiro_wilk<T: Scalar>(values: &[T]) -> Result<TestResult<T>, StatsError> {
    let n = values.len();
    if n < MIN_N {
        return Err(StatsError::TooFewObservations { needed: MIN_N, got: n });
    }
    if n > MAX_N {
        return Err(StatsError::TooManyObservations { max: MAX_N, got: n });
    }
    check_finite(values)?;
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let range = x[n - 1] - x[0];
    if range <= T::zero() {
        return Err(StatsError::ZeroVariance);
    }

    let a = coefficients::<T>(n);
    let nn2 = n / 2;
    // full antisymmetric coefficient vector, sums to zero and has unit norm
    let full: Vec<T> = (0..n)
        .map(|i| {
            if i < nn2 {
                -a[i]
            } else if n % 2 == 1 && i == nn2 {
                T::zero()
            } else {
                a[n - 1 - i]
            }
        })
        .collect();
    let scaled: Vec<T> = x.iter().map(|&v| v / range).collect();
    let xbar = crate::scalar::mean(&scaled);
    let abar = crate::scalar::mean(&full);
    let (mut ssa, mut ssx, mut sax) = (T::zero(), T::zero(), T::zero());
    for (&ai, &xi) in full.iter().zip(&scaled) {
        let da = ai - abar;
        let dx = xi - xbar;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = T::one() - w1;

    let p = p_value(n, w, w1);
    Ok(TestResult::new(Method::ShapiroWilk, w, p, vec![n]))
}

fn p_value<T: Scalar>(n: usize, w: T, w1: T) -> f64 {
    let w = w.as_f64();
    let w1 = w1.as_f64();
    let an = n as f64;
    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::PI / 3.0;
        return (pi6 * (w.sqrt().asin() - stqr)).max(0.0);
    }
    let y = w1.ln();
    if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        let y = -(gamma - y).ln();
        let m = poly(&C3, an);
        let s = poly(&C4, an).exp();
        normal_sf((y - m) / s)
    } else {
        let xx = an.ln();
        let m = poly(&C5, xx);
        let s = poly(&C6, xx).exp();
        normal_sf((y - m) / s)
    }
}
