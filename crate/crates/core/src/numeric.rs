//! Small numerical kernels shared by the solvers: bracketed bisection,
//! finite-difference stencils, Richardson extrapolation and scan grids.

/// Hard cap on bisection steps. Floating-point brackets collapse long before.
pub const MAX_BISECTION_STEPS: usize = 200;

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// `f_lo` must be `f(lo)`. Stops when the bracket can no longer be split in
/// floating point or after [`MAX_BISECTION_STEPS`]. Returns the endpoint of the
/// final bracket with the smaller residual.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_sign = f_lo > 0.0;
    let mut r_lo = f_lo;
    let mut r_hi = f64::NAN;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == lo_sign {
            lo = mid;
            r_lo = v;
        } else {
            hi = mid;
            r_hi = v;
        }
    }
    if r_hi.is_nan() {
        r_hi = f(hi);
    }
    if r_lo.abs() <= r_hi.abs() {
        lo
    } else {
        hi
    }
}

/// Finite-difference weights (Fornberg's recursion) for derivatives of order
/// `0..=max_order` at `z`, using function values at `nodes`.
///
/// Row `m` of the result holds the weights for the `m`-th derivative.
pub fn fd_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First, second and third derivatives of `f` at `x` with step `h`.
///
/// Uses the symmetric five-point stencil when `[x - 2h, x + 2h]` fits inside
/// `[lo, hi]`, otherwise a seven-point one-sided stencil pointing into the
/// domain. One-sided stencils amplify rounding more, so callers near a
/// boundary should use a few times the interior step.
pub fn derivatives_123<F: FnMut(f64) -> f64>(
    mut f: F,
    x: f64,
    h: f64,
    lo: f64,
    hi: f64,
) -> [f64; 3] {
    let offsets: Vec<f64> = if x - 2.0 * h >= lo && x + 2.0 * h <= hi {
        vec![-2.0, -1.0, 0.0, 1.0, 2.0]
    } else if x - 2.0 * h < lo {
        (0..7).map(|i| i as f64).collect()
    } else {
        (0..7).map(|i| -(i as f64)).collect()
    };
    let w = fd_weights(0.0, &offsets, 3);
    let values: Vec<f64> = offsets.iter().map(|o| f(x + o * h)).collect();
    let mut out = [0.0; 3];
    for (m, slot) in out.iter_mut().enumerate() {
        let s: f64 = w[m + 1].iter().zip(&values).map(|(a, b)| a * b).sum();
        *slot = s / h.powi(m as i32 + 1);
    }
    out
}

/// Two-point central difference.
pub fn central_difference<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Five-point central first derivative, fourth-order accurate.
pub fn five_point_derivative<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Richardson extrapolation of a first-order one-sided difference quotient
/// sampled at steps `h`, `h/2`, `h/4` (two elimination levels).
pub fn richardson3(d_h: f64, d_h2: f64, d_h4: f64) -> f64 {
    let a = 2.0 * d_h2 - d_h;
    let b = 2.0 * d_h4 - d_h2;
    (4.0 * b - a) / 3.0
}

/// `ln(Σ exp(a_i))`, tolerant of `-inf` entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Sorted scan grid on `[lo, hi]` mixing `n_uniform` equispaced points with
/// `n_geometric` log-spaced points clustered near `lo`, so features living at
/// very different scales are all sampled.
pub fn mixed_grid(lo: f64, hi: f64, n_uniform: usize, n_geometric: usize) -> Vec<f64> {
    let width = hi - lo;
    let mut pts = Vec::with_capacity(n_uniform + n_geometric + 2);
    pts.push(lo);
    pts.push(hi);
    if n_uniform > 1 {
        for i in 0..n_uniform {
            pts.push(lo + width * i as f64 / (n_uniform - 1) as f64);
        }
    }
    if n_geometric > 1 && width > 0.0 {
        let (a, b) = ((width * 1e-15).ln(), width.ln());
        for i in 0..n_geometric {
            let t = a + (b - a) * i as f64 / (n_geometric - 1) as f64;
            pts.push(lo + t.exp());
        }
    }
    pts.retain(|p| *p >= lo && *p <= hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

/// Geometric (log-spaced) grid with `n` points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, -2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fornberg_reproduces_classic_central_weights() {
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 3);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d3 = [-0.5, 1.0, 0.0, -1.0, 0.5];
        for i in 0..5 {
            assert!((w[1][i] - d1[i]).abs() < 1e-14);
            assert!((w[3][i] - d3[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn stencils_on_smooth_functions_within_budget() {
        // exp has all derivatives equal to itself
        for &(x, h) in &[(0.0, 5e-3), (0.3, 1e-3), (1.0, 5e-3)] {
            let d = derivatives_123(f64::exp, x, h, 0.0, 1.0);
            for v in d {
                assert!((v - x.exp()).abs() / x.exp() < 1e-6, "{v} vs {}", x.exp());
            }
        }
        let d = five_point_derivative(f64::sin, 0.7, 1e-3);
        assert!((d - 0.7f64.cos()).abs() < 1e-12);
        let d = central_difference(f64::sin, 0.7, 1e-6);
        assert!((d - 0.7f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn richardson_kills_linear_and_quadratic_error() {
        let slope = |h: f64| 3.0 + 5.0 * h + 7.0 * h * h;
        let r = richardson3(slope(1e-2), slope(5e-3), slope(2.5e-3));
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_neg_inf() {
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn grids_are_sorted_and_bounded() {
        let g = mixed_grid(0.0, 5.0, 100, 100);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 5.0);
        let g = geometric_grid(0.25, 20.0, 64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 0.25);
        assert_eq!(g[63], 20.0);
    }
}
