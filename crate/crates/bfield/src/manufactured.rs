//! Stock manufactured states for the verification suites.
//!
//! Smooth band-limited fields chosen so every identity check is exercised
//! with all of its terms active, while products of the orders appearing
//! in the residual assemblies stay inside the dealias band at the stock
//! resolutions.

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::flow::{CompressibleState, IncompressibleState};
use crate::grid::Grid;
use crate::random::{random_bandlimited, random_solenoidal};

/// Periodic Beltrami flow with coefficients (a, b, c), scaled by `amp`.
pub fn abc_velocity(grid: &Grid, a: f64, b: f64, c: f64, amp: f64) -> VectorField {
    let k0 = std::f64::consts::TAU / grid.box_length();
    VectorField::from_fns(
        grid,
        move |_, y, z| amp * (a * (k0 * z).sin() + c * (k0 * y).cos()),
        move |x, _, z| amp * (b * (k0 * x).sin() + a * (k0 * z).cos()),
        move |x, y, _| amp * (c * (k0 * y).sin() + b * (k0 * x).cos()),
    )
}

/// Random solenoidal velocity plus random temperature, both band-limited
/// to `kmax`.
pub fn incompressible_random(
    grid: &Grid,
    seed: u64,
    kmax: usize,
    u_amp: f64,
    theta_amp: f64,
) -> IncompressibleState {
    IncompressibleState {
        u: random_solenoidal(grid, seed, kmax, u_amp),
        theta: random_bandlimited(grid, seed.wrapping_add(0x7411), kmax, theta_amp),
    }
}

/// Parameters of the stock compressible state.
#[derive(Clone, Copy, Debug)]
pub struct CompressibleStateSpec {
    pub rho_base: f64,
    pub rho_amplitude: f64,
    pub u_amplitude: f64,
    /// Amplitude of the weak compressive z-mode added to the Beltrami
    /// part; keeps the div(u)-proportional terms of the balances active.
    pub compressive_amplitude: f64,
    pub theta_base: f64,
    pub theta_variation: f64,
}

impl Default for CompressibleStateSpec {
    fn default() -> Self {
        CompressibleStateSpec {
            rho_base: 2.0,
            rho_amplitude: 0.3,
            u_amplitude: 0.2,
            compressive_amplitude: 0.05,
            theta_base: 1.0,
            theta_variation: 0.1,
        }
    }
}

/// Stock compressible state: rho = base + amp sin(x) sin(y), a small
/// Beltrami velocity with a weak compressive mode, theta = base
/// + variation cos(z).
pub fn compressible_stock(grid: &Grid, spec: &CompressibleStateSpec) -> Result<CompressibleState> {
    if spec.rho_base <= spec.rho_amplitude.abs() {
        return Err(Error::config(
            "rho_base",
            "density must stay positive: rho_base must exceed |rho_amplitude|",
        ));
    }
    let k0 = std::f64::consts::TAU / grid.box_length();
    let mut u = abc_velocity(grid, 1.0, 1.1, 0.9, spec.u_amplitude);
    if spec.compressive_amplitude != 0.0 {
        let ca = spec.compressive_amplitude;
        u.z = u
            .z
            .add(&ScalarField::from_fn(grid, move |_, _, z| ca * (k0 * z).sin()));
    }
    let (rb, ra) = (spec.rho_base, spec.rho_amplitude);
    let (tb, tv) = (spec.theta_base, spec.theta_variation);
    Ok(CompressibleState {
        u,
        rho: ScalarField::from_fn(grid, move |x, y, _| {
            rb + ra * (k0 * x).sin() * (k0 * y).sin()
        }),
        theta: ScalarField::from_fn(grid, move |_, _, z| tb + tv * (k0 * z).cos()),
    })
}

/// Incompressible initial state selected by config keys
/// (`init_velocity`, `init_theta`, amplitudes, kmax, seed).
pub fn incompressible_from_config(cfg: &ConfigFile, grid: &Grid) -> Result<IncompressibleState> {
    let seed = cfg.seed()?;
    let kmax = cfg.get_u64("init_kmax", 3)? as usize;
    let u_amp = cfg.get_f64("init_amplitude", 1.0)?;
    let u = match cfg.get_str("init_velocity", "random_solenoidal").as_str() {
        "random_solenoidal" => random_solenoidal(grid, seed, kmax, u_amp),
        "abc" => abc_velocity(
            grid,
            cfg.get_f64("abc_a", 1.0)?,
            cfg.get_f64("abc_b", 1.1)?,
            cfg.get_f64("abc_c", 0.9)?,
            u_amp,
        ),
        // Beltrami base flow plus a weak solenoidal perturbation: the
        // base is a steady ideal solution, so time-integration error
        // scales with the dynamic part alone.
        "abc_perturbed" => {
            let rel = cfg.get_f64("perturbation_rel", 0.1)?;
            abc_velocity(
                grid,
                cfg.get_f64("abc_a", 1.0)?,
                cfg.get_f64("abc_b", 1.1)?,
                cfg.get_f64("abc_c", 0.9)?,
                u_amp,
            )
            .add(&random_solenoidal(grid, seed, kmax, u_amp * rel))
        }
        "zero" => VectorField::zeros(grid),
        other => {
            return Err(Error::config(
                "init_velocity",
                format!(
                    "unknown initial velocity `{other}` (random_solenoidal, abc, abc_perturbed, zero)"
                ),
            ))
        }
    };
    let th_amp = cfg.get_f64("theta_amplitude", 1.0)?;
    let th_kmax = cfg.get_u64("theta_kmax", 3)? as usize;
    let theta = match cfg.get_str("init_theta", "random").as_str() {
        "random" => random_bandlimited(grid, seed.wrapping_add(0x7411), th_kmax, th_amp),
        "mode_z" => {
            let k0 = std::f64::consts::TAU / grid.box_length();
            ScalarField::from_fn(grid, move |_, _, z| th_amp * (k0 * z).sin())
        }
        "zero" => ScalarField::zeros(grid),
        other => {
            return Err(Error::config(
                "init_theta",
                format!("unknown initial theta `{other}` (random, mode_z, zero)"),
            ))
        }
    };
    IncompressibleState::new(u, theta)
}

/// Compressible stock state selected by config keys.
pub fn compressible_from_config(cfg: &ConfigFile, grid: &Grid) -> Result<CompressibleState> {
    let spec = CompressibleStateSpec {
        rho_base: cfg.get_f64("rho_base", 2.0)?,
        rho_amplitude: cfg.get_f64("rho_amplitude", 0.3)?,
        u_amplitude: cfg.get_f64("comp_u_amplitude", 0.2)?,
        compressive_amplitude: cfg.get_f64("comp_compressive_amplitude", 0.05)?,
        theta_base: cfg.get_f64("theta_base", 1.0)?,
        theta_variation: cfg.get_f64("theta_variation", 0.1)?,
    };
    compressible_stock(grid, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    #[test]
    fn abc_velocity_is_beltrami_and_solenoidal() {
        let g = Grid::standard(16).unwrap();
        let u = abc_velocity(&g, 1.0, 1.1, 0.9, 0.5);
        assert!(ops::divergence(&u).linf() < 1e-12);
        let w = ops::curl(&u);
        assert!(w.sub(&u).linf() < 1e-11);
    }

    #[test]
    fn compressible_stock_has_active_compression() {
        let g = Grid::standard(16).unwrap();
        let state = compressible_stock(&g, &CompressibleStateSpec::default()).unwrap();
        assert!(state.rho.min() > 0.0);
        let div = ops::divergence(&state.u);
        assert!(div.linf() > 1e-3, "compressive mode must be active");
    }

    #[test]
    fn compressible_stock_guards_density() {
        let g = Grid::standard(16).unwrap();
        let spec = CompressibleStateSpec {
            rho_base: 0.2,
            rho_amplitude: 0.3,
            ..Default::default()
        };
        assert!(compressible_stock(&g, &spec).is_err());
    }
}
