//! Finite-difference weights and derivative helpers on uniform grids.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

/// Finite-difference weights for the `order`-th derivative at `x0` from the
/// nodes `xs` (Fornberg's recursion). Works for arbitrary distinct nodes.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > order, "need more nodes than the derivative order");
    // c[k][j]: weight of node j for derivative k
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
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
    c.swap_remove(order)
}

/// Derivative of `order` (1 or 2) of uniformly sampled data with formal
/// accuracy `accuracy` (an even number). Interior nodes use centred stencils,
/// nodes near either end use shifted one-sided stencils of the same width.
pub fn uniform_derivative(values: &[f64], spacing: f64, order: usize, accuracy: usize) -> Vec<f64> {
    let n = values.len();
    let width = centred_width(order, accuracy);
    let onesided = order + accuracy;
    assert!(n >= onesided, "grid too short for the requested stencil");
    let half = width / 2;
    let scale = spacing.powi(order as i32);

    let centred: Vec<f64> = {
        let xs: Vec<f64> = (0..width).map(|k| k as f64 - half as f64).collect();
        fornberg_weights(0.0, &xs, order)
    };
    let xs_one: Vec<f64> = (0..onesided).map(|k| k as f64).collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        if i >= half && i + half < n {
            let mut acc = 0.0;
            for (k, w) in centred.iter().enumerate() {
                acc += w * values[i + k - half];
            }
            out[i] = acc / scale;
        } else {
            let start = if i < half { 0 } else { n - onesided };
            let w = fornberg_weights((i - start) as f64, &xs_one, order);
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * values[start + k];
            }
            out[i] = acc / scale;
        }
    }
    out
}

fn centred_width(order: usize, accuracy: usize) -> usize {
    2 * ((order + 1) / 2) - 1 + accuracy
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            spacing * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}
