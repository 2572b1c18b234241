//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerics.
#![allow(dead_code)]

/// Composite Simpson rule on `[a, b]` with `intervals` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

const PANELS: usize = 20_000;

/// Two-sided Student-t tail by quadrature. With `u = sqrt(nu) tan(theta)`
/// the density becomes proportional to `cos^(nu-1)(theta)` on `[0, pi/2)`,
/// so the tail is a ratio of two smooth integrals and needs no Gamma values.
pub fn t_two_sided_quadrature(t: f64, nu: f64) -> f64 {
    let theta = (t.abs() / nu.sqrt()).atan();
    let g = |th: f64| th.cos().powf(nu - 1.0);
    let half = std::f64::consts::FRAC_PI_2;
    simpson(g, theta, half, PANELS) / simpson(g, 0.0, half, PANELS)
}

/// Upper F tail by quadrature: `P(F > f) = P(B < x)` with
/// `B ~ Beta(d2/2, d1/2)` and `x = d2 / (d2 + d1 f)`; `w = sin^2(phi)` turns
/// the Beta density into `sin^(d2-1)(phi) cos^(d1-1)(phi)`.
pub fn f_tail_quadrature(f: f64, d1: f64, d2: f64) -> f64 {
    let x = d2 / (d2 + d1 * f);
    let phi = x.sqrt().asin();
    let g = |p: f64| p.sin().powf(d2 - 1.0) * p.cos().powf(d1 - 1.0);
    simpson(g, 0.0, phi, PANELS) / simpson(g, 0.0, std::f64::consts::FRAC_PI_2, PANELS)
}

/// Inverse of a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting.
pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let factor = a[i][col];
                for j in 0..n {
                    a[i][j] -= factor * a[col][j];
                    inv[i][j] -= factor * inv[col][j];
                }
            }
        }
    }
    inv
}

/// `(W^T W)^-1 W^T y` with `W` given column-major.
pub fn normal_equation_solution(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let q = columns.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram: Vec<Vec<f64>> = (0..q).map(|i| (0..q).map(|j| dot(&columns[i], &columns[j])).collect()).collect();
    let wty: Vec<f64> = columns.iter().map(|c| dot(c, y)).collect();
    let inv = invert(gram);
    inv.iter().map(|row| dot(row, &wty)).collect()
}

/// Kolmogorov-Smirnov distance between a sample and Uniform(0, 1).
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &u)| {
            let lo = u - i as f64 / n;
            let hi = (i + 1) as f64 / n - u;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// `I_x(a, b)` for integer shapes as a binomial tail sum.
pub fn beta_binomial_sum(x: f64, a: u32, b: u32) -> f64 {
    let n = a + b - 1;
    (a..=n)
        .map(|j| {
            let c: f64 = (0..j).map(|i| f64::from(n - i) / f64::from(i + 1)).product();
            c * x.powi(j as i32) * (1.0 - x).powi((n - j) as i32)
        })
        .sum()
}
