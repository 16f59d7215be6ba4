//! Masking machinery for pseudo-velocity quotients.
//!
//! The pseudo-velocity is undefined at zeros of q, so cells with
//! |q| < epsilon_rel * max|q| are masked. Norm-taking additionally erodes
//! the unmasked region by a fixed Chebyshev radius to keep near-singular
//! quotients out of the reported numbers.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;

/// Boolean region on the grid: `true` marks cells that participate.
#[derive(Clone, Debug)]
pub struct Region {
    grid: Grid,
    keep: Vec<bool>,
}

impl Region {
    pub fn full(grid: &Grid) -> Region {
        Region {
            grid: grid.clone(),
            keep: vec![true; grid.len()],
        }
    }

    pub fn from_keep(grid: &Grid, keep: Vec<bool>) -> Region {
        assert_eq!(keep.len(), grid.len());
        Region {
            grid: grid.clone(),
            keep,
        }
    }

    /// Cells where |q| >= threshold.
    pub fn above_threshold(q: &ScalarField, threshold: f64) -> Region {
        Region {
            grid: q.grid().clone(),
            keep: q.values().iter().map(|v| v.abs() >= threshold).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn contains(&self, index: usize) -> bool {
        self.keep[index]
    }

    pub fn count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// Fraction of grid cells excluded.
    pub fn excluded_fraction(&self) -> f64 {
        1.0 - self.count() as f64 / self.keep.len() as f64
    }

    /// Periodic Chebyshev erosion: a cell survives only if every cell
    /// within max-norm radius `cells` is kept. Applied per axis
    /// sequentially, which is equivalent for the box neighborhood.
    pub fn eroded(&self, cells: usize) -> Region {
        if cells == 0 {
            return self.clone();
        }
        let n = self.grid.n();
        let mut keep = self.keep.clone();
        for axis in 0..3 {
            let mut next = keep.clone();
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let idx = self.grid.index(ix, iy, iz);
                        if !keep[idx] {
                            continue;
                        }
                        let mut ok = true;
                        for d in 1..=cells {
                            let (pa, pb) = match axis {
                                0 => (
                                    self.grid.index((ix + d) % n, iy, iz),
                                    self.grid.index((ix + n - d % n) % n, iy, iz),
                                ),
                                1 => (
                                    self.grid.index(ix, (iy + d) % n, iz),
                                    self.grid.index(ix, (iy + n - d % n) % n, iz),
                                ),
                                _ => (
                                    self.grid.index(ix, iy, (iz + d) % n),
                                    self.grid.index(ix, iy, (iz + n - d % n) % n),
                                ),
                            };
                            if !keep[pa] || !keep[pb] {
                                ok = false;
                                break;
                            }
                        }
                        if !ok {
                            next[idx] = false;
                        }
                    }
                }
            }
            keep = next;
        }
        Region {
            grid: self.grid.clone(),
            keep,
        }
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region {
            grid: self.grid.clone(),
            keep: self
                .keep
                .iter()
                .zip(other.keep.iter())
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    /// L2 norm of a field over the region: sqrt(mean of f^2 over kept cells).
    pub fn l2(&self, f: &ScalarField) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (v, &k) in f.values().iter().zip(self.keep.iter()) {
            if k {
                sum += v * v;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            (sum / count as f64).sqrt()
        }
    }

    /// L2 norm of a vector field over the region.
    pub fn l2_vec(&self, v: &VectorField) -> f64 {
        let (x, y, z) = (v.x.values(), v.y.values(), v.z.values());
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, &k) in self.keep.iter().enumerate() {
            if k {
                sum += x[i] * x[i] + y[i] * y[i] + z[i] * z[i];
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            (sum / count as f64).sqrt()
        }
    }

    /// max |f| over the region.
    pub fn linf(&self, f: &ScalarField) -> f64 {
        f.values()
            .iter()
            .zip(self.keep.iter())
            .filter(|(_, &k)| k)
            .fold(0.0f64, |m, (v, _)| m.max(v.abs()))
    }

    pub fn linf_vec(&self, v: &VectorField) -> f64 {
        self.linf(&v.x).max(self.linf(&v.y)).max(self.linf(&v.z))
    }
}

/// A vector field defined away from zeros of a scalar quotient.
#[derive(Clone, Debug)]
pub struct MaskedVelocity {
    /// The quotient field; zero-filled where masked.
    pub field: VectorField,
    /// True where the quotient is defined.
    pub mask: Region,
    /// Fraction of cells masked (no erosion applied).
    pub masked_fraction: f64,
    /// Relative threshold used to build the mask.
    pub epsilon_rel: f64,
}

impl MaskedVelocity {
    /// Divide `numerator` by `q` where |q| >= epsilon_rel * max|q|;
    /// zero-fill masked cells. Errors when every cell is masked.
    pub fn from_quotient(
        numerator: &VectorField,
        q: &ScalarField,
        epsilon_rel: f64,
    ) -> Result<MaskedVelocity> {
        let qmax = q.linf();
        if qmax == 0.0 {
            return Err(Error::AllMasked);
        }
        let threshold = epsilon_rel * qmax;
        let mask = Region::above_threshold(q, threshold);
        if mask.count() == 0 {
            return Err(Error::AllMasked);
        }
        let qv = q.values();
        let quotient = |num: &ScalarField| -> ScalarField {
            let vals = num
                .values()
                .iter()
                .zip(qv.iter().zip(mask.keep().iter()))
                .map(|(&n, (&q, &keep))| if keep { n / q } else { 0.0 })
                .collect();
            ScalarField::from_values(num.grid(), vals)
        };
        let field = VectorField {
            x: quotient(&numerator.x),
            y: quotient(&numerator.y),
            z: quotient(&numerator.z),
        };
        let masked_fraction = mask.excluded_fraction();
        Ok(MaskedVelocity {
            field,
            mask,
            masked_fraction,
            epsilon_rel,
        })
    }

    /// The norm-taking region: unmasked cells after the standard erosion.
    pub fn eroded_region(&self) -> Region {
        self.mask.eroded(crate::tolerances::MASK_EROSION_CELLS)
    }

    pub fn is_finite_on_mask(&self) -> bool {
        let (x, y, z) = (
            self.field.x.values(),
            self.field.y.values(),
            self.field.z.values(),
        );
        self.mask
            .keep()
            .iter()
            .enumerate()
            .all(|(i, &k)| !k || (x[i].is_finite() && y[i].is_finite() && z[i].is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erosion_shrinks_region() {
        let g = Grid::standard(8).unwrap();
        let mut keep = vec![true; g.len()];
        // Mask a single plane x = 0.
        for iz in 0..8 {
            for iy in 0..8 {
                keep[g.index(0, iy, iz)] = false;
            }
        }
        let r = Region::from_keep(&g, keep);
        let e = r.eroded(2);
        // Planes x in {0 (masked), 1, 2, 6, 7} end up excluded.
        for iz in 0..8 {
            for iy in 0..8 {
                for ix in 0..8 {
                    let expect = !(ix == 0 || ix == 1 || ix == 2 || ix == 6 || ix == 7);
                    assert_eq!(e.contains(g.index(ix, iy, iz)), expect, "ix={ix}");
                }
            }
        }
    }

    #[test]
    fn quotient_masks_near_zeros() {
        let g = Grid::standard(16).unwrap();
        let q = ScalarField::from_fn(&g, |x, _, _| x.cos());
        let num = VectorField::from_fns(&g, |x, _, _| x.cos(), |_, _, _| 0.0, |_, _, _| 0.0);
        // cos hits exact zeros on this grid at x = pi/2, 3pi/2.
        let mv = MaskedVelocity::from_quotient(&num, &q, 1e-6).unwrap();
        assert!(mv.masked_fraction > 0.0);
        assert!(mv.is_finite_on_mask());
        // Quotient is exactly 1 wherever defined.
        for (i, &k) in mv.mask.keep().iter().enumerate() {
            if k {
                assert!((mv.field.x.values()[i] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_masked_is_an_error() {
        let g = Grid::standard(8).unwrap();
        let q = ScalarField::zeros(&g);
        let num = VectorField::zeros(&g);
        assert!(matches!(
            MaskedVelocity::from_quotient(&num, &q, 1e-6),
            Err(Error::AllMasked)
        ));
    }
}
