//! Right-hand-side tendencies for the three flow systems.
//!
//! Incompressible models handle pressure through spectral Leray
//! projection, so produced velocity tendencies are solenoidal to
//! round-off. The compressible model evaluates the advective-form
//! momentum law with an ideal-gas pressure and a prescribed heating rate;
//! no compressible time integrator exists by design — compressible
//! tendencies feed instantaneous identity checks only.

use crate::catalog::Heating;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::ops;
use crate::tolerances;

/// Parameters of the rotating, buoyant, stratified system.
///
/// `reynolds = f64::INFINITY` selects the ideal (inviscid, non-diffusive)
/// limit. Rotation is retained as an optional parameter with default zero,
/// covering both the rotating and non-rotating readings of the viscous
/// system.
#[derive(Clone, Copy, Debug)]
pub struct BoussinesqParams {
    pub reynolds: f64,
    pub prandtl: f64,
    /// Buoyancy coefficient multiplying theta in the vertical momentum law.
    pub a0: f64,
    /// Rotation vector Omega; the Coriolis term is 2 Omega x u.
    pub omega: [f64; 3],
}

impl BoussinesqParams {
    pub fn ideal(a0: f64, omega: [f64; 3]) -> BoussinesqParams {
        BoussinesqParams {
            reynolds: f64::INFINITY,
            prandtl: 1.0,
            a0,
            omega,
        }
    }

    pub fn viscous(reynolds: f64, prandtl: f64, a0: f64) -> BoussinesqParams {
        BoussinesqParams {
            reynolds,
            prandtl,
            a0,
            omega: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reynolds > 0.0) {
            return Err(Error::config("reynolds", "must be positive (or infinite)"));
        }
        if !(self.prandtl > 0.0) || !self.prandtl.is_finite() {
            return Err(Error::config("prandtl", "must be positive and finite"));
        }
        Ok(())
    }

    /// 1/Re, zero in the ideal limit.
    pub fn inv_re(&self) -> f64 {
        if self.reynolds.is_finite() {
            1.0 / self.reynolds
        } else {
            0.0
        }
    }

    /// 1/(sigma Re), zero in the ideal limit.
    pub fn inv_sigma_re(&self) -> f64 {
        self.inv_re() / self.prandtl
    }

    pub fn is_ideal(&self) -> bool {
        !self.reynolds.is_finite()
    }

    pub fn has_rotation(&self) -> bool {
        self.omega.iter().any(|&w| w != 0.0)
    }
}

/// Constitutive constants of the compressible fluid plus the prescribed
/// heating rate.
#[derive(Clone, Debug)]
pub struct CompressibleParams {
    /// Shear viscosity.
    pub mu: f64,
    /// Volume viscosity.
    pub mu_v: f64,
    /// Ideal-gas constant in p = R rho theta.
    pub gas_r: f64,
    /// Specific heat at constant volume.
    pub c_v: f64,
    pub heating: Heating,
}

impl CompressibleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::config("mu", "shear viscosity must be >= 0"));
        }
        if !(self.mu_v >= 0.0) || !self.mu_v.is_finite() {
            return Err(Error::config("mu_v", "volume viscosity must be >= 0"));
        }
        if !(self.gas_r > 0.0) {
            return Err(Error::config("gas_r", "gas constant must be positive"));
        }
        if !(self.c_v > 0.0) {
            return Err(Error::config("c_v", "specific heat must be positive"));
        }
        Ok(())
    }
}

/// Incompressible state: solenoidal velocity and temperature.
#[derive(Clone, Debug)]
pub struct IncompressibleState {
    pub u: VectorField,
    pub theta: ScalarField,
}

impl IncompressibleState {
    pub fn new(u: VectorField, theta: ScalarField) -> Result<IncompressibleState> {
        u.grid().check_same(theta.grid())?;
        Ok(IncompressibleState { u, theta })
    }

    pub fn grid(&self) -> &crate::grid::Grid {
        self.u.grid()
    }

    /// Error unless the velocity is solenoidal to the library precondition.
    pub fn check_solenoidal(&self) -> Result<()> {
        let rel = ops::divergence_defect(&self.u);
        if rel > tolerances::SOLENOIDAL_PRECONDITION {
            Err(Error::NonSolenoidal {
                rel,
                tol: tolerances::SOLENOIDAL_PRECONDITION,
            })
        } else {
            Ok(())
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.theta.is_finite()
    }
}

/// Compressible state: velocity, mass density, temperature.
#[derive(Clone, Debug)]
pub struct CompressibleState {
    pub u: VectorField,
    pub rho: ScalarField,
    pub theta: ScalarField,
}

impl CompressibleState {
    pub fn new(u: VectorField, rho: ScalarField, theta: ScalarField) -> Result<CompressibleState> {
        u.grid().check_same(rho.grid())?;
        u.grid().check_same(theta.grid())?;
        Ok(CompressibleState { u, rho, theta })
    }

    pub fn grid(&self) -> &crate::grid::Grid {
        self.u.grid()
    }

    /// Error unless min rho > 0 (log-density and 1/rho need the guard).
    pub fn check_positive_density(&self) -> Result<()> {
        let min = self.rho.min();
        if min <= 0.0 {
            Err(Error::NonPositiveDensity { min })
        } else {
            Ok(())
        }
    }
}

/// Time-derivative fields matching a flow state.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub du_dt: VectorField,
    pub dtheta_dt: ScalarField,
    /// Present for compressible states only.
    pub drho_dt: Option<ScalarField>,
}

/// Ideal rotating-buoyant tendency:
/// du/dt = P[u x omega - 2 Omega x u - a0 theta zhat], dtheta/dt = -u.grad(theta),
/// with P the Leray projection carrying the pressure gradient.
pub fn euler_tendency(state: &IncompressibleState, params: &BoussinesqParams) -> Result<Tendency> {
    params.validate()?;
    state.check_solenoidal()?;
    Ok(stratified_rhs(state, params, false))
}

/// Viscous stratified tendency: the ideal terms plus Re^-1 Lap(u) and
/// (sigma Re)^-1 Lap(theta).
pub fn boussinesq_tendency(
    state: &IncompressibleState,
    params: &BoussinesqParams,
) -> Result<Tendency> {
    params.validate()?;
    state.check_solenoidal()?;
    Ok(stratified_rhs(state, params, true))
}

fn stratified_rhs(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    viscous: bool,
) -> Tendency {
    let u = &state.u;
    let omega = ops::curl(u);
    // u x omega, dealiased quadratic product.
    let mut rhs = ops::cross_raw(u, &omega);
    // Coriolis: 2 Omega x u with constant Omega is linear in u.
    if params.has_rotation() {
        let [wx, wy, wz] = params.omega;
        let cor = VectorField {
            x: state.u.y.scaled(-2.0 * wz).add(&state.u.z.scaled(2.0 * wy)),
            y: state.u.z.scaled(-2.0 * wx).add(&state.u.x.scaled(2.0 * wz)),
            z: state.u.x.scaled(-2.0 * wy).add(&state.u.y.scaled(2.0 * wx)),
        };
        rhs = rhs.sub(&cor);
    }
    // Buoyancy -a0 theta zhat.
    if params.a0 != 0.0 {
        rhs.z = rhs.z.add(&state.theta.scaled(-params.a0));
    }
    let mut rhs = ops::dealias_vec(&rhs);
    let mut dtheta = ops::advect_scalar(u, &state.theta).scaled(-1.0);
    if viscous && !params.is_ideal() {
        rhs = rhs.add(&ops::laplacian_vec(u).scaled(params.inv_re()));
        dtheta = dtheta.add(&ops::laplacian(&state.theta).scaled(params.inv_sigma_re()));
    }
    Tendency {
        du_dt: ops::leray_project(&rhs),
        dtheta_dt: dtheta,
        drho_dt: None,
    }
}

/// Pressure field carried by the projection: the scalar p (up to a
/// constant) with grad(p) = unprojected rhs - projected rhs. Recovered
/// spectrally; the k = 0 mode is set to zero mean.
pub fn recover_pressure(gradient_part: &VectorField) -> ScalarField {
    use num_complex::Complex64;
    let grid = gradient_part.grid();
    let sx = gradient_part.x.to_spectral();
    let sy = gradient_part.y.to_spectral();
    let sz = gradient_part.z.to_spectral();
    let mut p = vec![Complex64::default(); sx.len()];
    ops::for_each_mode(grid, |i, kx, ky, kz| {
        let k2 = kx * kx + ky * ky + kz * kz;
        if k2 > 0.0 {
            // grad p = g  =>  p_k = (k . g_k) / (i |k|^2)
            let kdotg = kx * sx[i] + ky * sy[i] + kz * sz[i];
            p[i] = kdotg / (Complex64::new(0.0, 1.0) * k2);
        }
    });
    ScalarField::from_spectral(grid, &p)
}

/// Compressible tendency with ideal-gas pressure:
/// du/dt = rho^-1 (mu Lap(u) - grad(pi)) - u.grad(u),
/// pi = p - (mu/3 + mu_v) div(u), p = R rho theta,
/// drho/dt = -div(rho u),
/// dtheta/dt = c_v^-1 [(p/rho) div(u) + Q(., t)] - u.grad(theta).
pub fn compressible_tendency(
    state: &CompressibleState,
    params: &CompressibleParams,
    t: f64,
) -> Result<Tendency> {
    params.validate()?;
    state.check_positive_density()?;
    let grid = state.grid();
    let u = &state.u;
    let div_u = ops::divergence(u);
    let varpi = effective_pressure(state, params, &div_u);
    let grad_varpi = ops::gradient(&varpi);

    // rho^-1 (mu Lap u - grad pi), pointwise inverse density then dealias.
    let inv_rho = state.rho.map(|r| 1.0 / r);
    let mut force = grad_varpi.scaled(-1.0);
    if params.mu != 0.0 {
        force = force.add(&ops::laplacian_vec(u).scaled(params.mu));
    }
    let du_dt = ops::scale_vec(&inv_rho, &force).sub(&ops::advect_vector(u, u));

    // Mass: conservative divergence form.
    let rho_u = ops::scale_vec(&state.rho, u);
    let drho_dt = ops::divergence(&rho_u).scaled(-1.0);

    // Temperature: (p/rho) div u = R theta div u by the ideal-gas law.
    let mut heat = ops::mul(&state.theta.scaled(params.gas_r), &div_u);
    let q = params.heating.sample(grid, t);
    heat = heat.add(&q);
    let dtheta_dt = heat
        .scaled(1.0 / params.c_v)
        .sub(&ops::advect_scalar(u, &state.theta));

    Ok(Tendency {
        du_dt,
        dtheta_dt,
        drho_dt: Some(drho_dt),
    })
}

/// Effective pressure pi = p - (mu/3 + mu_v) div(u) with p = R rho theta.
pub fn effective_pressure(
    state: &CompressibleState,
    params: &CompressibleParams,
    div_u: &ScalarField,
) -> ScalarField {
    let p = ops::mul(&state.rho, &state.theta).scaled(params.gas_r);
    p.add(&div_u.scaled(-(params.mu / 3.0 + params.mu_v)))
}

/// Curl of the velocity tendency: the instantaneous vorticity tendency.
pub fn vorticity_tendency(tendency: &Tendency) -> VectorField {
    ops::curl(&tendency.du_dt)
}

/// Analytic vorticity right-hand side for the incompressible models:
/// curl(u x omega) - curl(2 Omega x u) - a0 perp_grad(theta) + Re^-1 Lap(omega).
pub fn incompressible_vorticity_rhs(
    state: &IncompressibleState,
    params: &BoussinesqParams,
) -> Result<VectorField> {
    let u = &state.u;
    let omega = ops::curl(u);
    let mut rhs = ops::curl(&ops::cross(u, &omega)?);
    if params.has_rotation() {
        // curl(2 Omega x u) = 2 Omega div(u) - 2 (Omega.grad) u; the first
        // term vanishes for solenoidal u but is kept for honesty.
        let [wx, wy, wz] = params.omega;
        let div_u = ops::divergence(u);
        let adv = VectorField {
            x: directional(&state.u.x, wx, wy, wz),
            y: directional(&state.u.y, wx, wy, wz),
            z: directional(&state.u.z, wx, wy, wz),
        };
        let coriolis_curl = VectorField {
            x: div_u.scaled(2.0 * wx),
            y: div_u.scaled(2.0 * wy),
            z: div_u.scaled(2.0 * wz),
        }
        .sub(&adv.scaled(2.0));
        rhs = rhs.sub(&coriolis_curl);
    }
    if params.a0 != 0.0 {
        rhs = rhs.sub(&ops::perp_gradient(&state.theta).scaled(params.a0));
    }
    if !params.is_ideal() {
        rhs = rhs.add(&ops::laplacian_vec(&omega).scaled(params.inv_re()));
    }
    Ok(rhs)
}

/// (w . grad) f for a constant vector w: linear, no dealiasing needed.
fn directional(f: &ScalarField, wx: f64, wy: f64, wz: f64) -> ScalarField {
    let g = ops::gradient(f);
    g.x.scaled(wx).add(&g.y.scaled(wy)).add(&g.z.scaled(wz))
}
