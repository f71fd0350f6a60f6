//! Causal Toeplitz products `y_i = sum_{k<=i} w_k x_{i-k}` via FFT.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

const DIRECT_LIMIT: usize = 96;

pub(crate) fn causal<W: Copy + Into<C64>>(weights: &[W], x: &[C64]) -> Vec<C64> {
    let n = x.len();
    assert!(weights.len() >= n);
    if n <= DIRECT_LIMIT {
        return (0..n)
            .map(|i| (0..=i).map(|k| weights[k].into() * x[i - k]).sum())
            .collect();
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a = vec![C64::new(0.0, 0.0); size];
    let mut b = vec![C64::new(0.0, 0.0); size];
    for k in 0..n {
        a[k] = weights[k].into();
        b[k] = x[k];
    }
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a.truncate(n);
    a.iter_mut().for_each(|z| *z *= scale);
    a
}

/// Anti-causal counterpart `y_j = sum_{k>=0} w_k x_{j+k}`.
pub(crate) fn anticausal<W: Copy + Into<C64>>(weights: &[W], x: &[C64]) -> Vec<C64> {
    let rev: Vec<C64> = x.iter().rev().copied().collect();
    let mut y = causal(weights, &rev);
    y.reverse();
    y
}
