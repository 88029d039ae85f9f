//! Hurwitz zeta function for real arguments, used to build endpoint
//! corrections for midpoint quadrature of `r^p g(r)`.

const BERNOULLI_2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// `ζ(s, a) = Σ_{n≥0} (n + a)^{-s}`, analytically continued to all real `s ≠ 1`.
///
/// Euler–Maclaurin summation with 40 explicit terms; accurate to roughly
/// machine precision for `-12 <= s <= 12` and `a` of order one.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s != 1.0, "hurwitz_zeta has a pole at s = 1");
    assert!(a > 0.0);
    const N: usize = 40;
    let mut sum = 0.0;
    for n in 0..N {
        sum += (n as f64 + a).powf(-s);
    }
    let x = N as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) divided by (2k)!
    let mut rising = s;
    let mut fact = 2.0;
    let mut xpow = x.powf(-s - 1.0);
    for (k, b2k) in BERNOULLI_2K.iter().enumerate() {
        let term = b2k / fact * rising * xpow;
        sum += term;
        let k1 = (k + 1) as f64;
        rising *= (s + 2.0 * k1 - 1.0) * (s + 2.0 * k1);
        fact *= (2.0 * k1 + 1.0) * (2.0 * k1 + 2.0);
        xpow /= x * x;
    }
    sum
}
