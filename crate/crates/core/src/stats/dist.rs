use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::scalar::Scalar;

pub(crate) fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

pub(crate) fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").sf(x)
}

pub(crate) fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    FisherSnedecor::new(df1, df2).expect("positive dfs").sf(x)
}

pub(crate) fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    2.0 * StudentsT::new(0.0, 1.0, df).expect("positive df").sf(t.abs())
}

/// Normal quantile, algorithm AS 111 (the approximation the Shapiro-Wilk
/// coefficient polynomials were fitted against).
pub(crate) fn normal_quantile<T: Scalar>(p: T) -> T {
    let l = T::lit;
    let q = p - l(0.5);
    if q.abs() <= l(0.42) {
        let r = q * q;
        return q * (((l(-25.441_060_496_37) * r + l(41.391_197_735_34)) * r + l(-18.615_000_625_29)) * r
            + l(2.506_628_238_84))
            / ((((l(3.130_829_098_33) * r + l(-21.062_241_018_26)) * r + l(23.083_367_437_43)) * r
                + l(-8.473_510_930_90))
                * r
                + T::one());
    }
    let r = if q > T::zero() { T::one() - p } else { p };
    if r <= T::zero() {
        return T::zero();
    }
    let r = (-r.ln()).sqrt();
    let v = (((l(2.321_212_768_58) * r + l(4.850_141_271_35)) * r + l(-2.297_964_791_34)) * r
        + l(-2.787_189_311_38))
        / ((l(1.637_067_818_97) * r + l(3.543_889_247_62)) * r + T::one());
    if q < T::zero() {
        -v
    } else {
        v
    }
}
