//! Cubic periodic grid: wavenumber tables, dealias mask, FFT plans.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Immutable description of a triply-periodic cubic grid.
///
/// The struct is a cheap handle (`Arc` inside); clones share wavenumber
/// tables and cached FFT plans. Two grids compare equal when `n`,
/// `box_length` and `dealias_fraction` agree.
#[derive(Clone)]
pub struct Grid {
    data: Arc<GridData>,
}

pub(crate) struct GridData {
    pub n: usize,
    pub box_length: f64,
    pub dealias_fraction: f64,
    /// Derivative wavenumber per 1-D index, Nyquist entry forced to zero.
    pub k_deriv: Vec<f64>,
    /// Per-axis dealias keep flag: true where |k_int| <= dealias_fraction * n/2.
    pub keep: Vec<bool>,
    pub fft_fwd: Arc<dyn Fft<f64>>,
    pub fft_inv: Arc<dyn Fft<f64>>,
}

impl Grid {
    /// Build a grid with `n` points per axis (power of two, >= 8).
    pub fn new(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Grid> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::config(
                "grid_n",
                format!("n must be a power of two >= 8, got {n}"),
            ));
        }
        if !(box_length > 0.0) {
            return Err(Error::config("box_length", "must be positive"));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::config("dealias_fraction", "must lie in (0, 1]"));
        }
        let k0 = TAU / box_length;
        let half = n / 2;
        let kmax_keep = dealias_fraction * half as f64;
        let mut k_deriv = vec![0.0; n];
        let mut keep = vec![false; n];
        for (i, (kd, kp)) in k_deriv.iter_mut().zip(keep.iter_mut()).enumerate() {
            let k_int = if i <= half { i as i64 } else { i as i64 - n as i64 };
            // Nyquist mode: derivative coefficient zeroed to avoid the
            // asymmetric odd-derivative artifact.
            *kd = if i == half { 0.0 } else { k0 * k_int as f64 };
            *kp = (k_int.unsigned_abs() as f64) <= kmax_keep;
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);
        Ok(Grid {
            data: Arc::new(GridData {
                n,
                box_length,
                dealias_fraction,
                k_deriv,
                keep,
                fft_fwd,
                fft_inv,
            }),
        })
    }

    /// 2pi box with the 2/3-rule dealias mask.
    pub fn standard(n: usize) -> Result<Grid> {
        Grid::new(n, TAU, 2.0 / 3.0)
    }

    pub fn n(&self) -> usize {
        self.data.n
    }

    pub fn box_length(&self) -> f64 {
        self.data.box_length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.data.dealias_fraction
    }

    /// Number of grid points, n^3.
    pub fn len(&self) -> usize {
        self.data.n * self.data.n * self.data.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing.
    pub fn dx(&self) -> f64 {
        self.data.box_length / self.data.n as f64
    }

    /// Cell volume.
    pub fn cell_volume(&self) -> f64 {
        let d = self.dx();
        d * d * d
    }

    /// Domain volume, L^3.
    pub fn volume(&self) -> f64 {
        let l = self.data.box_length;
        l * l * l
    }

    /// Linear index of grid point (ix, iy, iz), x-fastest.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        let n = self.data.n;
        ix + n * (iy + n * iz)
    }

    /// Physical coordinate of the i-th point along an axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.dx() * i as f64
    }

    /// Derivative wavenumber for 1-D index `i` (Nyquist entry is zero).
    #[inline]
    pub fn k_at(&self, i: usize) -> f64 {
        self.data.k_deriv[i]
    }

    /// Per-axis dealias keep flag for 1-D index `i`.
    #[inline]
    pub fn keep_at(&self, i: usize) -> bool {
        self.data.keep[i]
    }

    pub(crate) fn fft_fwd(&self) -> &Arc<dyn Fft<f64>> {
        &self.data.fft_fwd
    }

    pub(crate) fn fft_inv(&self) -> &Arc<dyn Fft<f64>> {
        &self.data.fft_inv
    }

    /// Error unless `other` describes the same grid.
    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "n {} vs {}, box {} vs {}, dealias {} vs {}",
                self.n(),
                other.n(),
                self.box_length(),
                other.box_length(),
                self.dealias_fraction(),
                other.dealias_fraction()
            )))
        }
    }

    /// Iterate (ix, iy, iz, linear index). Helper for tests and synthesis.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let n = self.data.n;
        (0..n).flat_map(move |iz| {
            (0..n).flat_map(move |iy| {
                (0..n).map(move |ix| (ix, iy, iz, ix + n * (iy + n * iz)))
            })
        })
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.data.n == other.data.n
            && self.data.box_length == other.data.box_length
            && self.data.dealias_fraction == other.data.dealias_fraction
    }
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.data.n)
            .field("box_length", &self.data.box_length)
            .field("dealias_fraction", &self.data.dealias_fraction)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_n() {
        assert!(Grid::standard(7).is_err());
        assert!(Grid::standard(12).is_err());
        assert!(Grid::standard(4).is_err());
        assert!(Grid::standard(8).is_ok());
    }

    #[test]
    fn wavenumbers_and_nyquist() {
        let g = Grid::standard(8).unwrap();
        // k = 0, 1, 2, 3, [nyquist -> 0], -3, -2, -1 for L = 2pi
        let expect = [0.0, 1.0, 2.0, 3.0, 0.0, -3.0, -2.0, -1.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((g.k_at(i) - e).abs() < 1e-14, "k[{i}]");
        }
    }

    #[test]
    fn dealias_mask_two_thirds() {
        // n = 64: keep |k| <= 2/3 * 32 = 21.33 -> integer |k| <= 21.
        let g = Grid::standard(64).unwrap();
        let kept: Vec<i64> = (0..64)
            .filter(|&i| g.keep_at(i))
            .map(|i| if i <= 32 { i as i64 } else { i as i64 - 64 })
            .collect();
        assert!(kept.iter().all(|k| k.abs() <= 21));
        assert_eq!(kept.iter().filter(|k| k.abs() <= 21).count(), 43);
        assert!(!g.keep_at(22));
        assert!(g.keep_at(21));
        assert!(g.keep_at(64 - 21));
        assert!(!g.keep_at(64 - 22));
    }

    #[test]
    fn grid_equality_is_structural() {
        let a = Grid::standard(16).unwrap();
        let b = Grid::standard(16).unwrap();
        let c = Grid::standard(32).unwrap();
        assert_eq!(a, b);
        assert!(a.check_same(&b).is_ok());
        assert!(a.check_same(&c).is_err());
    }
}
