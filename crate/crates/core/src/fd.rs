//! Central finite differences.
//!
//! These serve as the independent oracle for the analytic derivatives and
//! gradients elsewhere in the crate. Tests compare jet propagation and the
//! reverse pass against them; they are deliberately simple and kept free of
//! any shared code with the quantities they check.

/// d f / d x[d] by central difference with step `h`.
pub fn first(f: &impl Fn(&[f64]) -> f64, x: &[f64], d: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[d] += h;
    xm[d] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// d^2 f / (d x[i] d x[j]) by central differences with step `h`.
pub fn second(f: &impl Fn(&[f64]) -> f64, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    if i == j {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - 2.0 * f(x) + f(&xm)) / (h * h)
    } else {
        let mut xpp = x.to_vec();
        let mut xpm = x.to_vec();
        let mut xmp = x.to_vec();
        let mut xmm = x.to_vec();
        xpp[i] += h;
        xpp[j] += h;
        xpm[i] += h;
        xpm[j] -= h;
        xmp[i] -= h;
        xmp[j] += h;
        xmm[i] -= h;
        xmm[j] -= h;
        (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h * h)
    }
}

/// Full gradient by central differences, one coordinate at a time.
pub fn gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len()).map(|d| first(f, x, d, h)).collect()
}
