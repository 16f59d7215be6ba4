//! Named analytic function catalogs.
//!
//! Heating rates, gauge potentials, and conserved-family generators are
//! selected by name from finite catalogs so that every run is reproducible
//! from its config file without an expression parser.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

/// Prescribed heating rate Q(x, t) for the compressible temperature law.
#[derive(Clone, Debug, PartialEq)]
pub enum Heating {
    Zero,
    /// A cos(kx x + ky y + kz z), steady single Fourier mode.
    Mode {
        amplitude: f64,
        k: [i32; 3],
    },
    /// Single mode modulated by a Gaussian pulse in time.
    Pulse {
        amplitude: f64,
        k: [i32; 3],
        t0: f64,
        tau: f64,
    },
}

impl Heating {
    pub fn from_name(name: &str, amplitude: f64, k: [i32; 3], t0: f64, tau: f64) -> Result<Heating> {
        match name {
            "zero" => Ok(Heating::Zero),
            "mode" => Ok(Heating::Mode { amplitude, k }),
            "pulse" => {
                if tau <= 0.0 {
                    return Err(Error::config("heating_tau", "must be positive"));
                }
                Ok(Heating::Pulse {
                    amplitude,
                    k,
                    t0,
                    tau,
                })
            }
            other => Err(Error::config(
                "heating",
                format!("unknown heating `{other}` (catalog: zero, mode, pulse)"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Heating::Zero => "zero",
            Heating::Mode { .. } => "mode",
            Heating::Pulse { .. } => "pulse",
        }
    }

    /// Sample Q(., t) on the grid.
    pub fn sample(&self, grid: &Grid, t: f64) -> ScalarField {
        match self {
            Heating::Zero => ScalarField::zeros(grid),
            Heating::Mode { amplitude, k } => mode_field(grid, *amplitude, *k),
            Heating::Pulse {
                amplitude,
                k,
                t0,
                tau,
            } => {
                let env = (-((t - t0) / tau).powi(2)).exp();
                mode_field(grid, amplitude * env, *k)
            }
        }
    }
}

fn mode_field(grid: &Grid, amplitude: f64, k: [i32; 3]) -> ScalarField {
    let k0 = std::f64::consts::TAU / grid.box_length();
    let (kx, ky, kz) = (k[0] as f64 * k0, k[1] as f64 * k0, k[2] as f64 * k0);
    ScalarField::from_fn(grid, |x, y, z| amplitude * (kx * x + ky * y + kz * z).cos())
}

/// Gauge potential phi(x) for the divergence-free current-density freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugePhi {
    Zero,
    SinX,
    SinY,
    SinXSinY,
}

impl GaugePhi {
    pub fn from_name(name: &str) -> Result<GaugePhi> {
        match name {
            "zero" => Ok(GaugePhi::Zero),
            "sin_x" => Ok(GaugePhi::SinX),
            "sin_y" => Ok(GaugePhi::SinY),
            "sin_x_sin_y" => Ok(GaugePhi::SinXSinY),
            other => Err(Error::config(
                "gauge_phi",
                format!("unknown gauge potential `{other}` (catalog: zero, sin_x, sin_y, sin_x_sin_y)"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GaugePhi::Zero => "zero",
            GaugePhi::SinX => "sin_x",
            GaugePhi::SinY => "sin_y",
            GaugePhi::SinXSinY => "sin_x_sin_y",
        }
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        let k0 = std::f64::consts::TAU / grid.box_length();
        match self {
            GaugePhi::Zero => ScalarField::zeros(grid),
            GaugePhi::SinX => ScalarField::from_fn(grid, move |x, _, _| (k0 * x).sin()),
            GaugePhi::SinY => ScalarField::from_fn(grid, move |_, y, _| (k0 * y).sin()),
            GaugePhi::SinXSinY => {
                ScalarField::from_fn(grid, move |x, y, _| (k0 * x).sin() * (k0 * y).sin())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, GaugePhi::Zero)
    }
}

/// Differentiable function of density used for gauge terms (psi) and
/// conserved families (Phi). The catalog is deliberately small: identity,
/// rho^2/2, ln rho, and exp clipped to avoid overflow at large rho.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityFn {
    Identity,
    SquareHalf,
    Log,
    ExpClipped,
}

/// exp is clipped above this argument; densities in the toolkit's regime
/// sit far below it, so the clip never activates in practice.
const EXP_CLIP: f64 = 50.0;

impl DensityFn {
    pub fn from_name(key: &'static str, name: &str) -> Result<DensityFn> {
        match name {
            "identity" => Ok(DensityFn::Identity),
            "square_half" => Ok(DensityFn::SquareHalf),
            "log" => Ok(DensityFn::Log),
            "exp_clipped" => Ok(DensityFn::ExpClipped),
            other => Err(Error::config(
                key,
                format!(
                    "unknown density function `{other}` (catalog: identity, square_half, log, exp_clipped)"
                ),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DensityFn::Identity => "identity",
            DensityFn::SquareHalf => "square_half",
            DensityFn::Log => "log",
            DensityFn::ExpClipped => "exp_clipped",
        }
    }

    /// Value of the function at rho.
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            DensityFn::Identity => rho,
            DensityFn::SquareHalf => 0.5 * rho * rho,
            DensityFn::Log => rho.ln(),
            DensityFn::ExpClipped => rho.min(EXP_CLIP).exp(),
        }
    }

    /// Analytic derivative d/drho.
    pub fn deriv(&self, rho: f64) -> f64 {
        match self {
            DensityFn::Identity => 1.0,
            DensityFn::SquareHalf => rho,
            DensityFn::Log => 1.0 / rho,
            DensityFn::ExpClipped => {
                if rho < EXP_CLIP {
                    rho.exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Second derivative d2/drho2, used by conserved-family chain rules.
    pub fn second_deriv(&self, rho: f64) -> f64 {
        match self {
            DensityFn::Identity => 0.0,
            DensityFn::SquareHalf => 1.0,
            DensityFn::Log => -1.0 / (rho * rho),
            DensityFn::ExpClipped => {
                if rho < EXP_CLIP {
                    rho.exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval_field(&self, rho: &ScalarField) -> ScalarField {
        rho.map(|r| self.eval(r))
    }

    pub fn deriv_field(&self, rho: &ScalarField) -> ScalarField {
        rho.map(|r| self.deriv(r))
    }

    /// Worst relative mismatch between the analytic derivative and a
    /// centered difference over `[lo, hi]`; the consistency invariant for
    /// catalog entries.
    pub fn derivative_defect(&self, lo: f64, hi: f64) -> f64 {
        let h = 1e-6 * (hi - lo).abs().max(1.0);
        let mut worst = 0.0f64;
        let samples = 64;
        for i in 0..=samples {
            let r = lo + (hi - lo) * i as f64 / samples as f64;
            let fd = (self.eval(r + h) - self.eval(r - h)) / (2.0 * h);
            let an = self.deriv(r);
            let scale = an.abs().max(1.0);
            worst = worst.max((fd - an).abs() / scale);
        }
        worst
    }
}

/// Gauge specification: contribution grad(phi) x grad(psi(rho)) to the
/// current density. Divergence-free by construction; zero by default.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSpec {
    pub phi: GaugePhi,
    pub psi: DensityFn,
}

impl Default for GaugeSpec {
    fn default() -> Self {
        GaugeSpec {
            phi: GaugePhi::Zero,
            psi: DensityFn::Identity,
        }
    }
}

/// Conserved-family specification: the generator Phi with derivative Phi'.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub phi: DensityFn,
}

impl FamilySpec {
    pub fn new(phi: DensityFn) -> FamilySpec {
        FamilySpec { phi }
    }
}
