//! Linear convolution via FFT, used by the full-grid series evaluators.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Full linear convolution of two real sequences: result has length
/// a.len() + b.len() - 1 with result[n] = sum_i a[i] * b[n-i].
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    // FFT pays off only for moderately large inputs.
    if a.len().min(b.len()) <= 32 {
        return convolve_naive(a, b);
    }
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fa.resize(size, Complex64::new(0.0, 0.0));
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fb.resize(size, Complex64::new(0.0, 0.0));

    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x *= *y;
    }
    ifft.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Direct O(n*m) convolution; oracle for the FFT path and fast path for
/// tiny inputs.
pub fn convolve_naive(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn small_known_convolution() {
        let out = convolve(&[1.0, 2.0], &[3.0, 4.0, 5.0]);
        assert_eq!(out, vec![3.0, 10.0, 13.0, 10.0]);
    }

    #[test]
    fn fft_matches_naive_on_random_inputs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(na, nb) in &[(100, 100), (513, 257), (2048, 2048)] {
            let a: Vec<f64> = (0..na).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = convolve(&a, &b);
            let slow = convolve_naive(&a, &b);
            let max_err = fast
                .iter()
                .zip(slow.iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            assert!(max_err < 1e-9, "max_err = {max_err}");
        }
    }

    #[test]
    fn empty_inputs_yield_empty_output() {
        assert!(convolve(&[], &[1.0]).is_empty());
        assert!(convolve(&[1.0], &[]).is_empty());
    }
}
