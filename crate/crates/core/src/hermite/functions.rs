//! One-dimensional Hermite functions
//! `h_n(t) = (2^n n! sqrt(pi))^{-1/2} e^{-t^2/2} H_n(t)` and their derivatives.
//!
//! Values come from the normalized three-term recurrence carried in
//! function form. The Gaussian factor is tracked as a separate log-scale so
//! neither the polynomial part nor the exponential overflows for large `n` or
//! `|t|`.

use std::f64::consts::PI;

const RESCALE_THRESHOLD: f64 = 1e150;
const RESCALE_FACTOR: f64 = 1e-150;
const LN_RESCALE: f64 = 345.387_763_949_107_0; // 150 ln 10

/// `pi^{-1/4}`, the value of `h_0(0)`.
pub fn h0_at_zero() -> f64 {
    PI.powf(-0.25)
}

/// Writes `h_0(t), ..., h_{out.len()-1}(t)` into `out`.
pub fn hermite_functions_into(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut log_scale = -0.5 * t * t;
    let mut factor = log_scale.exp();
    let emit = |v: f64, log_scale: f64, factor: f64| -> f64 {
        if log_scale < -700.0 {
            if v == 0.0 {
                0.0
            } else {
                v.signum() * (v.abs().ln() + log_scale).exp()
            }
        } else {
            v * factor
        }
    };
    let mut prev = 0.0;
    let mut cur = h0_at_zero();
    out[0] = emit(cur, log_scale, factor);
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            prev *= RESCALE_FACTOR;
            cur *= RESCALE_FACTOR;
            log_scale += LN_RESCALE;
            factor = log_scale.exp();
        }
        out[k + 1] = emit(cur, log_scale, factor);
    }
}

/// `h_0(t), ..., h_n(t)`.
pub fn hermite_functions(n: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    hermite_functions_into(t, &mut out);
    out
}

/// Applies the ladder identity
/// `h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}` to a table of values,
/// returning a table one entry shorter.
fn differentiate_table(values: &[f64]) -> Vec<f64> {
    let len = values.len().saturating_sub(1);
    (0..len)
        .map(|k| {
            let kf = k as f64;
            let down = if k > 0 { (kf / 2.0).sqrt() * values[k - 1] } else { 0.0 };
            down - ((kf + 1.0) / 2.0).sqrt() * values[k + 1]
        })
        .collect()
}

/// `(d/dt)^m h_k(t)` for `k = 0..=n`.
pub fn hermite_function_derivatives(n: usize, m: usize, t: f64) -> Vec<f64> {
    let mut table = hermite_functions(n + m, t);
    for _ in 0..m {
        table = differentiate_table(&table);
    }
    table.truncate(n + 1);
    table
}

/// Derivative tables for every order `0..=max_order`: `out[m][k] = h_k^{(m)}(t)`.
pub fn hermite_derivative_tables(n: usize, max_order: usize, t: f64) -> Vec<Vec<f64>> {
    let mut table = hermite_functions(n + max_order, t);
    let mut out = Vec::with_capacity(max_order + 1);
    for m in 0..=max_order {
        if m > 0 {
            table = differentiate_table(&table);
        }
        out.push(table[..=n].to_vec());
    }
    out
}
