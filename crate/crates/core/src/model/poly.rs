//! Positive-coefficient polynomial evaluation guarded against overflow, and
//! elementary symmetric polynomials.

use crate::numeric::log_sum_exp;

/// Horner sum of `c_k x^k` after factoring out `x^n` when `x > 1`.
///
/// Returns `(s, log_scale)` with the polynomial equal to `s * exp(log_scale)`;
/// `s` stays within a factor `Σ|c_k|` of the leading coefficient.
fn scaled_horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    let n = coeffs.len() - 1;
    if x <= 1.0 {
        let s = coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        (s, 0.0)
    } else {
        let t = 1.0 / x;
        let s = coeffs.iter().fold(0.0, |acc, c| acc * t + c);
        (s, n as f64 * x.ln())
    }
}

/// `ln Σ c_k x^k`, or `None` when the sum is not positive.
pub fn log_eval(coeffs: &[f64], x: f64) -> Option<f64> {
    let (s, scale) = scaled_horner(coeffs, x);
    (s > 0.0).then(|| s.ln() + scale)
}

/// `ln Σ c_k x^k` term-wise with log-sum-exp. Slower than [`log_eval`] but
/// insensitive to coefficients spanning many orders of magnitude. Requires
/// positive coefficients and `x > 0`.
pub fn log_eval_lse(coeffs: &[f64], x: f64) -> f64 {
    let lx = x.ln();
    let terms: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c.ln() + k as f64 * lx)
        .collect();
    log_sum_exp(&terms)
}

/// Logarithmic derivative `P'(x) / P(x)` of a positive-coefficient polynomial.
pub fn log_derivative(coeffs: &[f64], x: f64) -> f64 {
    if x <= 1.0 {
        let (mut p, mut dp) = (0.0, 0.0);
        for c in coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        dp / p
    } else {
        // mean degree under the weights c_k x^k, divided by x
        let t = 1.0 / x;
        let (mut s, mut ws) = (0.0, 0.0);
        for (k, c) in coeffs.iter().enumerate() {
            s = s * t + c;
            ws = ws * t + k as f64 * c;
        }
        ws / s / x
    }
}

/// `Σ a_k x^k / Σ b_k x^k` for two polynomials of the same degree.
pub fn ratio(a: &[f64], b: &[f64], x: f64) -> f64 {
    let (sa, _) = scaled_horner(a, x);
    let (sb, _) = scaled_horner(b, x);
    sa / sb
}

/// Elementary symmetric polynomials `σ_0..σ_n` of `x`, built by adding one
/// element at a time (`σ_k ← σ_k + x_i σ_{k-1}`), `O(n^2)`.
pub fn sym_polys(x: &[f64]) -> Vec<f64> {
    let mut sigma = vec![0.0; x.len() + 1];
    sigma[0] = 1.0;
    for (i, xi) in x.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            sigma[k] += xi * sigma[k - 1];
        }
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::theta::binomial;

    #[test]
    fn sigma_two_of_three() {
        let (x, y, z) = (2.0, 3.0, 5.0);
        let s = sym_polys(&[x, y, z]);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], x + y + z);
        assert_eq!(s[2], x * y + x * z + y * z);
        assert_eq!(s[3], x * y * z);
        assert_eq!(sym_polys(&[]), vec![1.0]);
    }

    #[test]
    fn equal_entries_give_binomials() {
        let s = sym_polys(&[0.7; 6]);
        for (k, v) in s.iter().enumerate() {
            let want = binomial(6, k) * 0.7f64.powi(k as i32);
            assert!((v - want).abs() < 1e-13 * want.max(1.0));
        }
    }

    #[test]
    fn log_derivative_matches_closed_form() {
        // (1 + x)^4 has log-derivative 4 / (1 + x)
        let c = [1.0, 4.0, 6.0, 4.0, 1.0];
        for &x in &[0.0, 0.5, 1.0, 1.5, 1e3, 1e150] {
            let want = 4.0 / (1.0 + x);
            assert!((log_derivative(&c, x) - want).abs() <= 1e-14 * want, "{x}");
        }
    }

    #[test]
    fn horner_and_lse_agree() {
        let c = [1e-30, 3.0, 1e20, 4.0, 1e-5];
        for &x in &[1e-3, 0.5, 1.0, 2.0, 1e6, 1e80] {
            let a = log_eval(&c, x).unwrap();
            let b = log_eval_lse(&c, x);
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{x}: {a} {b}");
        }
    }
}
