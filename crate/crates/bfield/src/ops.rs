//! Spectral differential calculus and dealiased pointwise algebra.
//!
//! Derivatives are exact for resolved modes (multiplication by ik with the
//! Nyquist coefficient zeroed). Nonlinear products are formed pointwise in
//! physical space and passed through the grid's dealias mask on return to
//! spectral space; `*_raw` variants skip the mask and are reserved for
//! final residual assembly that is never differentiated again.

use num_complex::Complex64;

use crate::error::Result;
use crate::fft;
use crate::field::{ScalarField, SymTensorField, VectorField};
use crate::grid::Grid;

/// Visit every mode with its derivative wavenumbers (Nyquist entries 0).
#[inline]
pub fn for_each_mode(grid: &Grid, mut f: impl FnMut(usize, f64, f64, f64)) {
    let n = grid.n();
    let mut idx = 0;
    for iz in 0..n {
        let kz = grid.k_at(iz);
        for iy in 0..n {
            let ky = grid.k_at(iy);
            for ix in 0..n {
                f(idx, grid.k_at(ix), ky, kz);
                idx += 1;
            }
        }
    }
}

/// Zero every mode outside the dealias band (per-axis 2/3-rule by default).
pub fn apply_dealias_mask(grid: &Grid, spec: &mut [Complex64]) {
    let n = grid.n();
    let mut idx = 0;
    for iz in 0..n {
        let kz_ok = grid.keep_at(iz);
        for iy in 0..n {
            let row_ok = kz_ok && grid.keep_at(iy);
            for ix in 0..n {
                if !(row_ok && grid.keep_at(ix)) {
                    spec[idx] = Complex64::new(0.0, 0.0);
                }
                idx += 1;
            }
        }
    }
}

/// Spectral gradient: exact for resolved modes.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let spec = f.to_spectral();
    let mut gx = vec![Complex64::default(); spec.len()];
    let mut gy = vec![Complex64::default(); spec.len()];
    let mut gz = vec![Complex64::default(); spec.len()];
    for_each_mode(grid, |i, kx, ky, kz| {
        let c = spec[i];
        let ic = Complex64::new(-c.im, c.re); // i * c
        gx[i] = ic * kx;
        gy[i] = ic * ky;
        gz[i] = ic * kz;
    });
    VectorField {
        x: ScalarField::from_spectral(grid, &gx),
        y: ScalarField::from_spectral(grid, &gy),
        z: ScalarField::from_spectral(grid, &gz),
    }
}

/// Horizontal-rotation gradient (d/dy, -d/dx, 0).
pub fn perp_gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let spec = f.to_spectral();
    let mut gx = vec![Complex64::default(); spec.len()];
    let mut gy = vec![Complex64::default(); spec.len()];
    for_each_mode(grid, |i, kx, ky, _| {
        let c = spec[i];
        let ic = Complex64::new(-c.im, c.re);
        gx[i] = ic * ky;
        gy[i] = -ic * kx;
    });
    VectorField {
        x: ScalarField::from_spectral(grid, &gx),
        y: ScalarField::from_spectral(grid, &gy),
        z: ScalarField::zeros(grid),
    }
}

/// Spectral curl.
pub fn curl(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let sx = v.x.to_spectral();
    let sy = v.y.to_spectral();
    let sz = v.z.to_spectral();
    let mut cx = vec![Complex64::default(); sx.len()];
    let mut cy = vec![Complex64::default(); sx.len()];
    let mut cz = vec![Complex64::default(); sx.len()];
    for_each_mode(grid, |i, kx, ky, kz| {
        let (ax, ay, az) = (sx[i], sy[i], sz[i]);
        let i_unit = Complex64::new(0.0, 1.0);
        cx[i] = i_unit * (ky * az - kz * ay);
        cy[i] = i_unit * (kz * ax - kx * az);
        cz[i] = i_unit * (kx * ay - ky * ax);
    });
    VectorField {
        x: ScalarField::from_spectral(grid, &cx),
        y: ScalarField::from_spectral(grid, &cy),
        z: ScalarField::from_spectral(grid, &cz),
    }
}

/// Spectral divergence.
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    let sx = v.x.to_spectral();
    let sy = v.y.to_spectral();
    let sz = v.z.to_spectral();
    let mut d = vec![Complex64::default(); sx.len()];
    for_each_mode(grid, |i, kx, ky, kz| {
        d[i] = Complex64::new(0.0, 1.0) * (kx * sx[i] + ky * sy[i] + kz * sz[i]);
    });
    ScalarField::from_spectral(grid, &d)
}

/// Scalar Laplacian.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut spec = f.to_spectral();
    for_each_mode(grid, |i, kx, ky, kz| {
        spec[i] *= -(kx * kx + ky * ky + kz * kz);
    });
    ScalarField::from_spectral(grid, &spec)
}

/// Componentwise vector Laplacian.
pub fn laplacian_vec(v: &VectorField) -> VectorField {
    v.map(laplacian)
}

/// Pointwise product, dealiased on return to spectral space.
pub fn mul(a: &ScalarField, b: &ScalarField) -> ScalarField {
    dealias(&mul_raw(a, b))
}

/// Pointwise product without the dealias pass.
pub fn mul_raw(a: &ScalarField, b: &ScalarField) -> ScalarField {
    a.zip(b, |x, y| x * y)
}

/// Push a field through the dealias mask (forward, mask, inverse).
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut spec = f.to_spectral();
    apply_dealias_mask(grid, &mut spec);
    ScalarField::from_spectral(grid, &spec)
}

pub fn dealias_vec(v: &VectorField) -> VectorField {
    v.map(dealias)
}

/// Pointwise cross product, dealiased.
pub fn cross(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    a.grid().check_same(b.grid())?;
    Ok(dealias_vec(&cross_raw(a, b)))
}

/// Pointwise cross product, no dealiasing.
pub fn cross_raw(a: &VectorField, b: &VectorField) -> VectorField {
    VectorField {
        x: a.y.zip(&b.z, |p, q| p * q).sub(&a.z.zip(&b.y, |p, q| p * q)),
        y: a.z.zip(&b.x, |p, q| p * q).sub(&a.x.zip(&b.z, |p, q| p * q)),
        z: a.x.zip(&b.y, |p, q| p * q).sub(&a.y.zip(&b.x, |p, q| p * q)),
    }
}

/// Pointwise dot product, dealiased.
pub fn dot(a: &VectorField, b: &VectorField) -> Result<ScalarField> {
    a.grid().check_same(b.grid())?;
    Ok(dealias(&dot_raw(a, b)))
}

/// Pointwise dot product, no dealiasing.
pub fn dot_raw(a: &VectorField, b: &VectorField) -> ScalarField {
    let mut r = a.x.zip(&b.x, |p, q| p * q);
    let terms = [(&a.y, &b.y), (&a.z, &b.z)];
    for (p, q) in terms {
        r = r.add(&p.zip(q, |s, t| s * t));
    }
    r
}

/// Scalar times vector, dealiased.
pub fn scale_vec(s: &ScalarField, v: &VectorField) -> VectorField {
    dealias_vec(&scale_vec_raw(s, v))
}

pub fn scale_vec_raw(s: &ScalarField, v: &VectorField) -> VectorField {
    v.map(|c| s.zip(c, |a, b| a * b))
}

/// Advective derivative (v . grad) f, dealiased.
pub fn advect_scalar(v: &VectorField, f: &ScalarField) -> ScalarField {
    let g = gradient(f);
    dealias(&dot_raw(v, &g))
}

/// (v . grad) w componentwise, dealiased.
pub fn advect_vector(v: &VectorField, w: &VectorField) -> VectorField {
    VectorField {
        x: advect_scalar(v, &w.x),
        y: advect_scalar(v, &w.y),
        z: advect_scalar(v, &w.z),
    }
}

/// Rate-of-strain tensor S_ij = (u_{i,j} + u_{j,i}) / 2.
pub fn strain(u: &VectorField) -> SymTensorField {
    let gx = gradient(&u.x);
    let gy = gradient(&u.y);
    let gz = gradient(&u.z);
    let half = |a: &ScalarField, b: &ScalarField| a.axpy(0.5, b, 0.5);
    SymTensorField {
        xx: gx.x.clone(),
        yy: gy.y.clone(),
        zz: gz.z.clone(),
        xy: half(&gx.y, &gy.x),
        xz: half(&gx.z, &gz.x),
        yz: half(&gy.z, &gz.y),
    }
}

/// Directional derivative along a vector: (a . grad) u as a vector, i.e.
/// a_j d_j u_i, dealiased. Same as `advect_vector` with roles named for
/// the vortex-stretching term.
pub fn stretch(a: &VectorField, u: &VectorField) -> VectorField {
    advect_vector(a, u)
}

/// Leray projection: remove the gradient part in spectral space.
///
/// Exact on the periodic domain; the k = 0 mode (mean flow) passes
/// through untouched. Modes whose effective |k| is zero (Nyquist rows)
/// carry no resolvable gradient direction and also pass through.
pub fn leray_project(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let mut sx = v.x.to_spectral();
    let mut sy = v.y.to_spectral();
    let mut sz = v.z.to_spectral();
    for_each_mode(grid, |i, kx, ky, kz| {
        let k2 = kx * kx + ky * ky + kz * kz;
        if k2 > 0.0 {
            let kdotv = kx * sx[i] + ky * sy[i] + kz * sz[i];
            let factor = kdotv / k2;
            sx[i] -= kx * factor;
            sy[i] -= ky * factor;
            sz[i] -= kz * factor;
        }
    });
    VectorField {
        x: ScalarField::from_spectral(grid, &sx),
        y: ScalarField::from_spectral(grid, &sy),
        z: ScalarField::from_spectral(grid, &sz),
    }
}

/// The gradient part removed by [`leray_project`]; `v = project + gradient_part`.
pub fn leray_complement(v: &VectorField) -> VectorField {
    v.sub(&leray_project(v))
}

/// Relative solenoidality defect: ||div v||_2 / ||grad v||_2 (0 for v = 0).
pub fn divergence_defect(v: &VectorField) -> f64 {
    let d = divergence(v).l2();
    let mut g2 = 0.0;
    for c in v.components() {
        let g = gradient(c);
        g2 += g.x.l2().powi(2) + g.y.l2().powi(2) + g.z.l2().powi(2);
    }
    let scale = g2.sqrt();
    if scale == 0.0 {
        0.0
    } else {
        d / scale
    }
}

/// Translate a field by whole grid cells (periodic); exact permutation.
pub fn shift_cells(f: &ScalarField, sx: usize, sy: usize, sz: usize) -> ScalarField {
    let grid = f.grid();
    let n = grid.n();
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let jx = (ix + sx) % n;
                let jy = (iy + sy) % n;
                let jz = (iz + sz) % n;
                out[grid.index(jx, jy, jz)] = v[grid.index(ix, iy, iz)];
            }
        }
    }
    ScalarField::from_values(grid, out)
}

pub fn shift_cells_vec(v: &VectorField, sx: usize, sy: usize, sz: usize) -> VectorField {
    v.map(|c| shift_cells(c, sx, sy, sz))
}

/// Spectral L2 norm: sqrt(sum_k |f_k|^2). Equals the physical L2 norm
/// (Parseval) for the chosen transform normalization.
pub fn spectral_l2(f: &ScalarField) -> f64 {
    f.to_spectral().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest imaginary residue of the inverse transform relative to the
/// field L2 norm; realness diagnostic for Hermitian symmetry.
pub fn imaginary_residue(grid: &Grid, spec: &[Complex64]) -> f64 {
    let back = fft::inverse_complex(grid, spec);
    let im_max = back.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    let norm = (back.iter().map(|c| c.norm_sqr()).sum::<f64>() / back.len() as f64).sqrt();
    if norm == 0.0 {
        im_max
    } else {
        im_max / norm
    }
}
