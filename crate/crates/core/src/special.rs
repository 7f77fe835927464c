//! Modified Bessel functions of the second kind of orders 0 and 1.
//!
//! Both come from the integral `K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt`
//! evaluated with the trapezoid rule, which converges geometrically for this
//! analytic, doubly decaying integrand.

use crate::scalar::Real;

/// `(K₀(x), K₁(x))` for `x > 0`.
pub fn bessel_k01<T: Real>(x: T) -> (T, T) {
    if x > T::lit(700.0) {
        return (T::zero(), T::zero());
    }
    let h = T::lit(0.25).min(T::lit(0.5) / x.sqrt());
    let t_max = (T::lit(750.0) / x).acosh();
    let n = (t_max / h).ceil().to_f64_lossy() as usize;
    let mut k0 = T::lit(0.5) * (-x).exp();
    let mut k1 = k0;
    for j in 1..=n {
        let t = h * T::from_count(j);
        let e = (-x * t.cosh()).exp();
        k0 = k0 + e;
        k1 = k1 + e * t.cosh();
    }
    (k0 * h, k1 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // reference values from an independent implementation
        let table = [
            (1e-3, 7.0236888005623825, 999.9962381560855),
            (0.1, 2.4270690247020164, 9.853844780870606),
            (1.0, 0.42102443824070823, 0.6019072301972346),
            (5.0, 0.0036910983340425942, 0.004044613445452163),
            (10.0, 1.778006231616765e-05, 1.8648773453825585e-05),
            (50.0, 3.410167749789495e-23, 3.4441022267175555e-23),
            (300.0, 3.723694854889142e-132, 3.7298958583323724e-132),
        ];
        for (x, k0, k1) in table {
            let (a, b) = bessel_k01::<f64>(x);
            assert!(((a - k0) / k0).abs() < 1e-13, "K0({x}) = {a}");
            assert!(((b - k1) / k1).abs() < 1e-13, "K1({x}) = {b}");
        }
    }

    #[test]
    fn underflow_is_zero() {
        assert_eq!(bessel_k01(800.0_f64), (0.0, 0.0));
    }
}
