//! Multi-dimensional FFT over row-major arrays, one axis at a time.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place transform of `data` with the given row-major `shape`.
///
/// Forward uses `e^{-2 pi i jk/N}`; neither direction normalises.
pub(crate) fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    let mut planner = FftPlanner::new();
    let mut stride = 1usize;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        if n > 1 {
            let fft = planner.plan_fft(n, direction);
            let block = n * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_dft_in_2d() {
        let shape = [3usize, 4];
        let input: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, (i * i % 5) as f64)).collect();
        let mut out = input.clone();
        fft_nd(&mut out, &shape, FftDirection::Forward);
        for a in 0..3 {
            for b in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..3 {
                    for y in 0..4 {
                        let phase = -2.0 * std::f64::consts::PI * ((a * x) as f64 / 3.0 + (b * y) as f64 / 4.0);
                        acc += input[x * 4 + y] * Complex64::from_polar(1.0, phase);
                    }
                }
                assert!((acc - out[a * 4 + b]).norm() < 1e-10);
            }
        }
    }
}
