//! Three-dimensional FFT on the cubic grid, built from 1-D rustfft plans.
//!
//! Convention: `forward` returns Fourier-series coefficients (scaled by
//! 1/n^3), so `spec[0]` is the field mean and Parseval reads
//! mean(|f|^2) = sum_k |f_k|^2. `inverse` is unscaled.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::Grid;

/// Forward 3-D transform of a real field to complex coefficients.
pub fn forward(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    debug_assert_eq!(values.len(), grid.len());
    let mut spec: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(grid, &mut spec, Direction::Forward);
    let scale = 1.0 / grid.len() as f64;
    spec.par_iter_mut().for_each(|c| *c *= scale);
    spec
}

/// Inverse 3-D transform; returns the real part of the result.
///
/// For Hermitian-symmetric input the imaginary residue is round-off only;
/// it is discarded here and asserted small in the test suite.
pub fn inverse(grid: &Grid, spec: &[Complex64]) -> Vec<f64> {
    debug_assert_eq!(spec.len(), grid.len());
    let mut work = spec.to_vec();
    transform(grid, &mut work, Direction::Inverse);
    work.iter().map(|c| c.re).collect()
}

/// Inverse transform keeping the complex result (used by realness checks).
pub fn inverse_complex(grid: &Grid, spec: &[Complex64]) -> Vec<Complex64> {
    let mut work = spec.to_vec();
    transform(grid, &mut work, Direction::Inverse);
    work
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn transform(grid: &Grid, data: &mut [Complex64], dir: Direction) {
    let n = grid.n();
    let fft = match dir {
        Direction::Forward => grid.fft_fwd().clone(),
        Direction::Inverse => grid.fft_inv().clone(),
    };
    let scratch_len = fft.get_inplace_scratch_len();

    // Axis x: contiguous lines of length n.
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, line| fft.process_with_scratch(line, scratch),
    );

    // Axis y: stride n within each z-plane.
    let plane = n * n;
    data.par_chunks_mut(plane).for_each_init(
        || {
            (
                vec![Complex64::default(); n],
                vec![Complex64::default(); scratch_len],
            )
        },
        |(line, scratch), zplane| {
            for ix in 0..n {
                for iy in 0..n {
                    line[iy] = zplane[ix + n * iy];
                }
                fft.process_with_scratch(line, scratch);
                for iy in 0..n {
                    zplane[ix + n * iy] = line[iy];
                }
            }
        },
    );

    // Axis z: stride n^2. Transpose x<->z so z-lines become contiguous,
    // reuse the contiguous path, transpose back.
    let mut scratch3d = vec![Complex64::default(); data.len()];
    transpose_xz(n, data, &mut scratch3d);
    scratch3d.par_chunks_mut(n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, line| fft.process_with_scratch(line, scratch),
    );
    transpose_xz(n, &scratch3d, data);
}

/// out[iz + n*(iy + n*ix)] = input[ix + n*(iy + n*iz)]
fn transpose_xz(n: usize, input: &[Complex64], out: &mut [Complex64]) {
    out.par_chunks_mut(n).enumerate().for_each(|(c, run)| {
        let iy = c % n;
        let ix = c / n;
        let base = ix + n * iy;
        for (iz, v) in run.iter_mut().enumerate() {
            *v = input[base + n * n * iz];
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sample(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        let n = grid.n();
        let mut v = vec![0.0; grid.len()];
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    v[grid.index(ix, iy, iz)] =
                        f(grid.coord(ix), grid.coord(iy), grid.coord(iz));
                }
            }
        }
        v
    }

    #[test]
    fn roundtrip_is_identity() {
        let grid = Grid::standard(16).unwrap();
        let v = sample(&grid, |x, y, z| {
            (x).sin() + 0.3 * (2.0 * y).cos() * (z).sin() + 0.1
        });
        let spec = forward(&grid, &v);
        let back = inverse(&grid, &spec);
        for (a, b) in v.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn single_mode_lands_on_expected_coefficient() {
        let grid = Grid::standard(16).unwrap();
        // f = cos(2y) -> coefficients 1/2 at ky = +-2.
        let v = sample(&grid, |_, y, _| (2.0 * y).cos());
        let spec = forward(&grid, &v);
        let n = grid.n();
        let plus = spec[grid.index(0, 2, 0)];
        let minus = spec[grid.index(0, n - 2, 0)];
        assert!((plus.re - 0.5).abs() < 1e-12 && plus.im.abs() < 1e-12);
        assert!((minus.re - 0.5).abs() < 1e-12 && minus.im.abs() < 1e-12);
        // Everything else is zero.
        let mut energy_rest = 0.0;
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    if ix == 0 && iz == 0 && (iy == 2 || iy == n - 2) {
                        continue;
                    }
                    energy_rest += spec[grid.index(ix, iy, iz)].norm_sqr();
                }
            }
        }
        assert!(energy_rest < 1e-24);
    }

    #[test]
    fn mean_is_zero_mode() {
        let grid = Grid::standard(8).unwrap();
        let v = sample(&grid, |x, _, _| 1.75 + x.sin());
        let spec = forward(&grid, &v);
        assert!((spec[0].re - 1.75).abs() < 1e-13);
        assert!(spec[0].im.abs() < 1e-14);
        let _ = TAU;
    }
}
