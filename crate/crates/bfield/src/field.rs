//! Grid-sampled real fields with on-demand spectral representation.
//!
//! Storage is physical-space `Vec<f64>` in x-fastest order; spectral
//! coefficients are produced per operation by `ops`. Keeping the physical
//! samples canonical makes pointwise products and divisions exact where
//! the diagnostics need them to be.

use num_complex::Complex64;

use crate::error::Result;
use crate::fft;
use crate::grid::Grid;

/// Real scalar field sampled on a [`Grid`], x-fastest ordering.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> ScalarField {
        assert_eq!(values.len(), grid.len(), "value length must be n^3");
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    /// Sample an analytic function f(x, y, z) on the grid.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> ScalarField {
        let n = grid.n();
        let mut values = vec![0.0; grid.len()];
        for iz in 0..n {
            let z = grid.coord(iz);
            for iy in 0..n {
                let y = grid.coord(iy);
                for ix in 0..n {
                    values[grid.index(ix, iy, iz)] = f(grid.coord(ix), y, z);
                }
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_spectral(&self) -> Vec<Complex64> {
        fft::forward(&self.grid, &self.values)
    }

    pub fn from_spectral(grid: &Grid, spec: &[Complex64]) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: fft::inverse(grid, spec),
        }
    }

    /// Pointwise map into a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two same-grid fields (no dealiasing).
    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert!(self.grid == *other.grid());
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a - b)
    }

    /// a*self + b*other.
    pub fn axpy(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        self.zip(other, |x, y| a * x + b * y)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max |f|.
    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Grid mean (sequential sum: deterministic).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Domain integral, mean * L^3.
    pub fn integral(&self) -> f64 {
        self.mean() * self.grid.volume()
    }

    /// Discrete L2 norm: sqrt(mean(f^2)).
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|&v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Three scalar components sharing a grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
    pub z: ScalarField,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> VectorField {
        VectorField {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
            z: ScalarField::zeros(grid),
        }
    }

    pub fn new(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<VectorField> {
        x.grid().check_same(y.grid())?;
        x.grid().check_same(z.grid())?;
        Ok(VectorField { x, y, z })
    }

    pub fn from_fns(
        grid: &Grid,
        fx: impl Fn(f64, f64, f64) -> f64,
        fy: impl Fn(f64, f64, f64) -> f64,
        fz: impl Fn(f64, f64, f64) -> f64,
    ) -> VectorField {
        VectorField {
            x: ScalarField::from_fn(grid, fx),
            y: ScalarField::from_fn(grid, fy),
            z: ScalarField::from_fn(grid, fz),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField {
            x: f(&self.x),
            y: f(&self.y),
            z: f(&self.z),
        }
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        self.map(|c| c.scaled(a))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.add(&other.x),
            y: self.y.add(&other.y),
            z: self.z.add(&other.z),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            x: self.x.sub(&other.x),
            y: self.y.sub(&other.y),
            z: self.z.sub(&other.z),
        }
    }

    pub fn axpy(&self, a: f64, other: &VectorField, b: f64) -> VectorField {
        VectorField {
            x: self.x.axpy(a, &other.x, b),
            y: self.y.axpy(a, &other.y, b),
            z: self.z.axpy(a, &other.z, b),
        }
    }

    /// max over components of max |v_i|.
    pub fn linf(&self) -> f64 {
        self.x.linf().max(self.y.linf()).max(self.z.linf())
    }

    /// Pointwise max of |v| (Euclidean).
    pub fn max_magnitude(&self) -> f64 {
        let (vx, vy, vz) = (self.x.values(), self.y.values(), self.z.values());
        let mut m: f64 = 0.0;
        for i in 0..vx.len() {
            m = m.max(vx[i] * vx[i] + vy[i] * vy[i] + vz[i] * vz[i]);
        }
        m.sqrt()
    }

    /// L2 norm over all components: sqrt(mean |v|^2).
    pub fn l2(&self) -> f64 {
        let (vx, vy, vz) = (self.x.values(), self.y.values(), self.z.values());
        let s: f64 = (0..vx.len())
            .map(|i| vx[i] * vx[i] + vy[i] * vy[i] + vz[i] * vz[i])
            .sum();
        (s / vx.len() as f64).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Symmetric rank-2 tensor field (six independent components).
#[derive(Clone, Debug)]
pub struct SymTensorField {
    pub xx: ScalarField,
    pub yy: ScalarField,
    pub zz: ScalarField,
    pub xy: ScalarField,
    pub xz: ScalarField,
    pub yz: ScalarField,
}

impl SymTensorField {
    /// trace = xx + yy + zz.
    pub fn trace(&self) -> ScalarField {
        self.xx.add(&self.yy).add(&self.zz)
    }

    /// Tensor applied to a vector, pointwise: (S v)_i = S_ij v_j.
    pub fn apply(&self, v: &VectorField) -> VectorField {
        let g = self.xx.grid();
        let n3 = g.len();
        let mut rx = vec![0.0; n3];
        let mut ry = vec![0.0; n3];
        let mut rz = vec![0.0; n3];
        let (sxx, syy, szz) = (self.xx.values(), self.yy.values(), self.zz.values());
        let (sxy, sxz, syz) = (self.xy.values(), self.xz.values(), self.yz.values());
        let (vx, vy, vz) = (v.x.values(), v.y.values(), v.z.values());
        for i in 0..n3 {
            rx[i] = sxx[i] * vx[i] + sxy[i] * vy[i] + sxz[i] * vz[i];
            ry[i] = sxy[i] * vx[i] + syy[i] * vy[i] + syz[i] * vz[i];
            rz[i] = sxz[i] * vx[i] + syz[i] * vy[i] + szz[i] * vz[i];
        }
        VectorField {
            x: ScalarField::from_values(g, rx),
            y: ScalarField::from_values(g, ry),
            z: ScalarField::from_values(g, rz),
        }
    }
}
