//! Deterministic band-limited random field synthesis.
//!
//! Mode amplitudes are derived by hashing (seed, mode) with SplitMix64,
//! so results are bit-identical for a given seed regardless of thread
//! count or iteration order.

use num_complex::Complex64;

use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::ops::for_each_mode;

/// SplitMix64 step; the standard finalizer used as a counter-based RNG.
#[inline]
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform in [-1, 1) from a hashed counter.
#[inline]
fn unit(seed: u64, counter: u64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(counter));
    (h >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
}

fn mode_id(n: usize, ix: usize, iy: usize, iz: usize) -> u64 {
    (ix + n * (iy + n * iz)) as u64
}

/// Random real scalar field with modes only inside |k| <= kmax
/// (Euclidean, integer wavenumbers), zero mean, deterministic in `seed`.
/// The field is scaled so max |f| equals `amplitude`. `kmax = 0` gives
/// the zero field.
pub fn random_bandlimited(grid: &Grid, seed: u64, kmax: usize, amplitude: f64) -> ScalarField {
    let n = grid.n();
    let mut spec = vec![Complex64::default(); grid.len()];
    if kmax == 0 {
        return ScalarField::zeros(grid);
    }
    assert!(
        kmax < n / 2,
        "kmax must stay below the Nyquist wavenumber n/2"
    );
    let kmax2 = (kmax * kmax) as i64;
    let int_k = |i: usize| -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    };
    for iz in 0..n {
        let kz = int_k(iz);
        for iy in 0..n {
            let ky = int_k(iy);
            for ix in 0..n {
                let kx = int_k(ix);
                if kx * kx + ky * ky + kz * kz > kmax2 {
                    continue;
                }
                if kx == 0 && ky == 0 && kz == 0 {
                    continue;
                }
                // Only fill the lexicographically positive half, then mirror;
                // this enforces exact Hermitian symmetry.
                if !((kx > 0) || (kx == 0 && ky > 0) || (kx == 0 && ky == 0 && kz > 0)) {
                    continue;
                }
                let id = mode_id(n, ix, iy, iz);
                let re = unit(seed, 2 * id);
                let im = unit(seed, 2 * id + 1);
                let c = Complex64::new(re, im);
                let jx = (n - ix) % n;
                let jy = (n - iy) % n;
                let jz = (n - iz) % n;
                spec[grid.index(ix, iy, iz)] = c;
                spec[grid.index(jx, jy, jz)] = c.conj();
            }
        }
    }
    let f = ScalarField::from_spectral(grid, &spec);
    let m = f.linf();
    if m == 0.0 {
        f
    } else {
        f.scaled(amplitude / m)
    }
}

/// Random solenoidal (divergence-free) vector field: three band-limited
/// components with each retained mode projected orthogonal to k. Scaled
/// so max |v| over components equals `amplitude`.
pub fn random_solenoidal(grid: &Grid, seed: u64, kmax: usize, amplitude: f64) -> VectorField {
    let raw = VectorField {
        x: random_bandlimited(grid, seed.wrapping_add(0x517c), kmax, 1.0),
        y: random_bandlimited(grid, seed.wrapping_add(0xa3f9), kmax, 1.0),
        z: random_bandlimited(grid, seed.wrapping_add(0xee21), kmax, 1.0),
    };
    if kmax == 0 {
        return raw;
    }
    let mut sx = raw.x.to_spectral();
    let mut sy = raw.y.to_spectral();
    let mut sz = raw.z.to_spectral();
    for_each_mode(grid, |i, kx, ky, kz| {
        let k2 = kx * kx + ky * ky + kz * kz;
        if k2 > 0.0 {
            let kv = kx * sx[i] + ky * sy[i] + kz * sz[i];
            let f = kv / k2;
            sx[i] -= kx * f;
            sy[i] -= ky * f;
            sz[i] -= kz * f;
        }
    });
    let v = VectorField {
        x: ScalarField::from_spectral(grid, &sx),
        y: ScalarField::from_spectral(grid, &sy),
        z: ScalarField::from_spectral(grid, &sz),
    };
    let m = v.linf();
    if m == 0.0 {
        v
    } else {
        v.scaled(amplitude / m)
    }
}
