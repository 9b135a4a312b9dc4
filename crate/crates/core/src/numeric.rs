//! Small numerical helpers shared across modules.

/// `x^e` for `x >= 0`, with exact fast paths for the exponents that show up
/// for integer `p`. `0^e` is mapped to `0` for `e > 0`.
#[inline]
pub fn pow_nonneg(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        return if e > 0.0 { 0.0 } else { 1.0 };
    }
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 3.0 {
        x * x * x
    } else if e == 4.0 {
        let x2 = x * x;
        x2 * x2
    } else if e == 0.5 {
        x.sqrt()
    } else if e == -1.0 {
        1.0 / x
    } else if e == -2.0 {
        1.0 / (x * x)
    } else {
        (e * x.ln()).exp()
    }
}

/// `|u|^{p-1} u`.
#[inline]
pub fn signed_power(u: f64, p: f64) -> f64 {
    let a = u.abs();
    let m = pow_nonneg(a, p);
    if u < 0.0 {
        -m
    } else {
        m
    }
}

/// Ordinary least-squares fit of `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square of the residuals.
    pub rms: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || !sxx.is_finite() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LinearFit { slope, intercept, r_squared, rms: (sse / nf).sqrt(), slope_stderr })
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `argth d = ½ log((1+d)/(1-d))`.
#[inline]
pub fn argth(d: f64) -> f64 {
    d.atanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_fast_paths_agree_with_powf() {
        for &x in &[0.3, 1.0, 2.5, 17.0] {
            for &e in &[1.0, 2.0, 3.0, 4.0, 0.5, -1.0, -2.0, 1.7] {
                let a = pow_nonneg(x, e);
                let b = x.powf(e);
                assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0), "{x}^{e}");
            }
        }
        assert_eq!(pow_nonneg(0.0, 2.5), 0.0);
    }

    #[test]
    fn signed_power_is_odd() {
        assert_eq!(signed_power(-2.0, 3.0), -8.0);
        assert_eq!(signed_power(2.0, 3.0), 8.0);
        assert!((signed_power(-2.0, 2.5) + 2f64.powf(2.5)).abs() < 1e-12);
    }

    #[test]
    fn exact_line_fit() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 3.0).abs() < 1e-13);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
