//! Hamiltonian builders for the single spin-1, the coupled two-qutrit model
//! and the outer-product circuit Hamiltonian.
//!
//! All energies are angular frequencies in rad/µs. Parameter files give
//! frequencies in MHz, converted once by ×2π when loaded.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, KeyValueConfig};
use crate::numerics::{ComplexMatrix, C64};
use crate::spin_algebra::{spin1_operators, two_site_m, two_site_operators, SITE_M};

/// rad/µs per MHz.
pub const RAD_PER_US_PER_MHZ: f64 = TAU;

pub fn mhz_to_rad_per_us(mhz: f64) -> f64 {
    mhz * RAD_PER_US_PER_MHZ
}

pub fn rad_per_us_to_mhz(omega: f64) -> f64 {
    omega / RAD_PER_US_PER_MHZ
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("field magnitude must be finite and non-negative, got {0}")]
    BadMagnitude(f64),
    #[error("parameter `{0}` is not finite")]
    NotFinite(&'static str),
    #[error("U(1) rotation needs a 3x3 or 9x9 matrix, got {0}x{0}")]
    BadDimension(usize),
    #[error("unknown sign convention `{0}` (expected `ramp` or `circuit`)")]
    UnknownConvention(String),
}

/// Applied field H_r (sinθ cosφ, sinθ sinφ, cosθ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldVector {
    pub magnitude: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FieldVector {
    pub fn new(magnitude: f64, theta: f64, phi: f64) -> Result<Self, HamiltonianError> {
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(HamiltonianError::BadMagnitude(magnitude));
        }
        if !theta.is_finite() {
            return Err(HamiltonianError::NotFinite("theta"));
        }
        if !phi.is_finite() {
            return Err(HamiltonianError::NotFinite("phi"));
        }
        Ok(Self {
            magnitude,
            theta,
            phi,
        })
    }

    pub fn along_z(magnitude: f64) -> Self {
        Self {
            magnitude,
            theta: 0.0,
            phi: 0.0,
        }
    }

    pub fn with_angles(self, theta: f64, phi: f64) -> Self {
        Self { theta, phi, ..self }
    }

    pub fn cartesian(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [
            self.magnitude * st * cp,
            self.magnitude * st * sp,
            self.magnitude * ct,
        ]
    }
}

/// Overall sign choice. `RampStyle` is H = −(H0 S₁ᶻ + H_r·ΣS) + couplings,
/// so the aligned state is the ground state at θ = 0; `CircuitStyle` keeps
/// every term positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    #[default]
    #[serde(rename = "ramp")]
    RampStyle,
    #[serde(rename = "circuit")]
    CircuitStyle,
}

impl SignConvention {
    /// Sign multiplying the field and offset terms.
    pub fn field_sign(self) -> f64 {
        match self {
            SignConvention::RampStyle => -1.0,
            SignConvention::CircuitStyle => 1.0,
        }
    }
}

impl FromStr for SignConvention {
    type Err = HamiltonianError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ramp" | "rampstyle" => Ok(SignConvention::RampStyle),
            "circuit" | "circuitstyle" => Ok(SignConvention::CircuitStyle),
            other => Err(HamiltonianError::UnknownConvention(other.to_string())),
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::RampStyle => "ramp",
            SignConvention::CircuitStyle => "circuit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleSpinParams {
    pub h0: f64,
    pub field: FieldVector,
    #[serde(default)]
    pub convention: SignConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledParams {
    /// Offset field on site 1.
    pub h0: f64,
    /// Applied to both sites.
    pub field: FieldVector,
    pub g: f64,
    pub j_z: f64,
    pub j_02: f64,
    #[serde(default)]
    pub convention: SignConvention,
}

impl CoupledParams {
    pub fn decoupled(h0: f64, field: FieldVector) -> Self {
        Self {
            h0,
            field,
            g: 0.0,
            j_z: 0.0,
            j_02: 0.0,
            convention: SignConvention::RampStyle,
        }
    }

    pub fn validate(&self) -> Result<(), HamiltonianError> {
        FieldVector::new(self.field.magnitude, self.field.theta, self.field.phi)?;
        for (name, v) in [("h0", self.h0), ("g", self.g), ("j_z", self.j_z), ("j_02", self.j_02)] {
            if !v.is_finite() {
                return Err(HamiltonianError::NotFinite(name));
            }
        }
        Ok(())
    }

    pub const CONFIG_KEYS: &'static [&'static str] =
        &["h0", "hr", "theta", "phi", "g", "j_z", "j_02", "convention"];

    /// Reads `h0, hr, g, j_z, j_02` (MHz), `theta, phi` (radians) and
    /// `convention` (`ramp`/`circuit`). Only `hr` is required.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self, ConfigError> {
        cfg.reject_unknown(Self::CONFIG_KEYS)?;
        let freq = |k: &str| cfg.number_or(k, 0.0).map(mhz_to_rad_per_us);
        let hr = mhz_to_rad_per_us(cfg.require_number("hr")?);
        let field = FieldVector::new(hr, cfg.number_or("theta", 0.0)?, cfg.number_or("phi", 0.0)?)
            .map_err(|e| ConfigError::Invalid {
                key: "hr".into(),
                reason: e.to_string(),
            })?;
        let convention = match cfg.get("convention") {
            None => SignConvention::RampStyle,
            Some(v) => v.parse().map_err(|e: HamiltonianError| ConfigError::Invalid {
                key: "convention".into(),
                reason: e.to_string(),
            })?,
        };
        Ok(Self {
            h0: freq("h0")?,
            field,
            g: freq("g")?,
            j_z: freq("j_z")?,
            j_02: freq("j_02")?,
            convention,
        })
    }
}

/// H = −(H0 Sᶻ + H_r·S), the ramp-protocol single spin.
pub fn single_spin(h0: f64, field: FieldVector) -> ComplexMatrix {
    single_spin_at(h0, field.cartesian(), SignConvention::RampStyle)
}

/// Single spin at a cartesian field point.
pub fn single_spin_at(h0: f64, r: [f64; 3], convention: SignConvention) -> ComplexMatrix {
    let s = spin1_operators();
    let sign = convention.field_sign();
    let mut h = s.sz.scale_real(sign * (h0 + r[2]));
    h.add_scaled(sign * r[0], &s.sx);
    h.add_scaled(sign * r[1], &s.sy);
    h
}

/// Two coupled qutrits, 9×9 in the basis {↑,0,↓} ⊗ {↑,0,↓}.
pub fn coupled(params: &CoupledParams) -> ComplexMatrix {
    coupled_at(params, params.field.cartesian())
}

/// Coupled Hamiltonian with the common field replaced by the cartesian
/// point `r`.
pub fn coupled_at(params: &CoupledParams, r: [f64; 3]) -> ComplexMatrix {
    let ops = two_site_operators();
    let sign = params.convention.field_sign();
    let mut h = ops.s1[2].scale_real(sign * params.h0);
    for (axis, &component) in r.iter().enumerate() {
        if component != 0.0 {
            h.add_scaled(sign * component, &ops.s1[axis]);
            h.add_scaled(sign * component, &ops.s2[axis]);
        }
    }
    h.add_scaled(params.g, &ops.flip_flop);
    h.add_scaled(params.j_z, &ops.zz);
    h.add_scaled(params.j_02 / 4.0, &ops.double_flip);
    h
}

/// A parameterized Hamiltonian family: everything except the field point,
/// which enters linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Model {
    Single(SingleSpinParams),
    Coupled(CoupledParams),
}

impl Model {
    pub fn single(h0: f64, field: FieldVector) -> Self {
        Model::Single(SingleSpinParams {
            h0,
            field,
            convention: SignConvention::RampStyle,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Single(_) => 3,
            Model::Coupled(_) => 9,
        }
    }

    pub fn field(&self) -> FieldVector {
        match self {
            Model::Single(p) => p.field,
            Model::Coupled(p) => p.field,
        }
    }

    pub fn h0(&self) -> f64 {
        match self {
            Model::Single(p) => p.h0,
            Model::Coupled(p) => p.h0,
        }
    }

    pub fn convention(&self) -> SignConvention {
        match self {
            Model::Single(p) => p.convention,
            Model::Coupled(p) => p.convention,
        }
    }

    pub fn with_field(&self, field: FieldVector) -> Self {
        match *self {
            Model::Single(p) => Model::Single(SingleSpinParams { field, ..p }),
            Model::Coupled(p) => Model::Coupled(CoupledParams { field, ..p }),
        }
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        self.hamiltonian_at(self.field().cartesian())
    }

    pub fn hamiltonian_at(&self, r: [f64; 3]) -> ComplexMatrix {
        match self {
            Model::Single(p) => single_spin_at(p.h0, r, p.convention),
            Model::Coupled(p) => coupled_at(p, r),
        }
    }

    /// ∂H/∂R_i, constant because the field enters linearly.
    pub fn field_gradient(&self) -> [ComplexMatrix; 3] {
        let sign = self.convention().field_sign();
        match self {
            Model::Single(_) => spin1_operators().vector().map(|s| s.scale_real(sign)),
            Model::Coupled(_) => {
                let ops = two_site_operators();
                [0, 1, 2].map(|k| (&ops.s1[k] + &ops.s2[k]).scale_real(sign))
            }
        }
    }

    /// Total Sᶻ quantum number of each basis state.
    pub fn basis_m(&self) -> Vec<i32> {
        match self {
            Model::Single(_) => SITE_M.to_vec(),
            Model::Coupled(_) => two_site_m().to_vec(),
        }
    }

    /// Natural energy scale for relative tolerances.
    pub fn scale(&self) -> f64 {
        let hr = self.field().magnitude;
        if hr > 0.0 {
            hr
        } else {
            1.0
        }
    }
}

/// e^{−iφJ_z} H e^{iφJ_z}, with J_z = Sᶻ (3×3) or S₁ᶻ + S₂ᶻ (9×9).
///
/// This is the rotation carrying the field azimuth from 0 to φ, so
/// `coupled(θ, φ) == u1_rotate(coupled(θ, 0), φ)`.
pub fn u1_rotate(h: &ComplexMatrix, phi: f64) -> Result<ComplexMatrix, HamiltonianError> {
    let m: Vec<i32> = match h.dim() {
        3 => SITE_M.to_vec(),
        9 => two_site_m().to_vec(),
        d => return Err(HamiltonianError::BadDimension(d)),
    };
    Ok(ComplexMatrix::from_fn(h.dim(), |j, k| {
        h[(j, k)] * C64::from_polar(1.0, -phi * f64::from(m[j] - m[k]))
    }))
}

/// Parameters of the outer-product circuit Hamiltonian. Levels 0, 1, 2 of
/// each qutrit are m = −1, 0, +1 (↓, 0, ↑).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CircuitParams {
    pub delta11: f64,
    pub delta12: f64,
    pub delta21: f64,
    pub delta22: f64,
    pub j0101: f64,
    pub j0112: f64,
    pub j1201: f64,
    pub j1212: f64,
    pub j02: f64,
    pub jzz: f64,
    pub d11: f64,
    pub d12: f64,
    pub d21: f64,
    pub d22: f64,
}

impl CircuitParams {
    const FREQUENCY_KEYS: [&'static str; 10] = [
        "delta11", "delta12", "delta21", "delta22", "j0101", "j0112", "j1201", "j1212", "j02", "jzz",
    ];
    const RATIO_KEYS: [&'static str; 4] = ["d11", "d12", "d21", "d22"];

    /// Missing keys are zero. Frequencies are MHz; `d..` are dimensionless.
    pub fn from_config(cfg: &KeyValueConfig) -> Result<Self, ConfigError> {
        let allowed: Vec<&str> = Self::FREQUENCY_KEYS
            .iter()
            .chain(Self::RATIO_KEYS.iter())
            .copied()
            .collect();
        cfg.reject_unknown(&allowed)?;
        let f = |k: &str| cfg.number_or(k, 0.0).map(mhz_to_rad_per_us);
        let d = |k: &str| cfg.number_or(k, 0.0);
        Ok(Self {
            delta11: f("delta11")?,
            delta12: f("delta12")?,
            delta21: f("delta21")?,
            delta22: f("delta22")?,
            j0101: f("j0101")?,
            j0112: f("j0112")?,
            j1201: f("j1201")?,
            j1212: f("j1212")?,
            j02: f("j02")?,
            jzz: f("jzz")?,
            d11: d("d11")?,
            d12: d("d12")?,
            d21: d("d21")?,
            d22: d("d22")?,
        })
    }

    /// Closest spin-operator form. Exact when the level spacings are equal
    /// (Δ_{i,1} = Δ_{i,2}), the ZZ weights are linear (D_{i,2} = 2 D_{i,1})
    /// and all four exchange couplings agree.
    pub fn spin_form(&self) -> SpinForm {
        // Fit diag(e0, e1, e2) over m = (−1, 0, +1) by b·Sᶻ + c through the
        // two outer levels.
        let fit = |e0: f64, e2: f64| ((e2 - e0) / 2.0, (e2 + e0) / 2.0);
        let (b1, o1) = fit(0.0, self.delta11 + self.delta12);
        let (b2, o2) = fit(0.0, self.delta21 + self.delta22);
        let (u1, c1) = fit(0.0, self.d12);
        let (u2, c2) = fit(0.0, self.d22);
        SpinForm {
            g: (self.j0101 + self.j0112 + self.j1201 + self.j1212) / 4.0,
            j_z: self.jzz * u1 * u2,
            j_02: self.j02,
            delta1: b1 + self.jzz * u1 * c2,
            delta2: b2 + self.jzz * c1 * u2,
            offset: o1 + o2 + self.jzz * c1 * c2,
        }
    }
}

/// g(XX+YY) + J_Z ZZ + Δ₁S₁ᶻ + Δ₂S₂ᶻ + (J₀₂/4)((S₁⁺S₂⁻)² + h.c.) + offset·I
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinForm {
    pub g: f64,
    pub j_z: f64,
    pub j_02: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub offset: f64,
}

impl SpinForm {
    pub fn hamiltonian(&self) -> ComplexMatrix {
        // Circuit-style coupled model with the site-2 field along z and the
        // site-1 excess as H0.
        let params = CoupledParams {
            h0: self.delta1 - self.delta2,
            field: FieldVector::along_z(0.0),
            g: self.g,
            j_z: self.j_z,
            j_02: self.j_02,
            convention: SignConvention::CircuitStyle,
        };
        let mut h = coupled_at(&params, [0.0, 0.0, self.delta2]);
        h.add_scaled(self.offset, &ComplexMatrix::identity(9));
        h
    }
}

fn level_index(level: usize) -> usize {
    2 - level
}

fn outer(a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3);
    m[(level_index(a), level_index(b))] = C64::new(1.0, 0.0);
    m
}

fn site_diag(e1: f64, e2: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(3);
    m[(level_index(1), level_index(1))] = C64::new(e1, 0.0);
    m[(level_index(2), level_index(2))] = C64::new(e2, 0.0);
    m
}

/// H_full built term by term from |a⟩⟨b| products.
pub fn circuit_outer_product(p: &CircuitParams) -> ComplexMatrix {
    use crate::numerics::kron;
    let id = ComplexMatrix::identity(3);
    let mut h = kron(&site_diag(p.delta11, p.delta11 + p.delta12), &id);
    h = &h + &kron(&id, &site_diag(p.delta21, p.delta21 + p.delta22));

    let exchange = |j: f64, a1: (usize, usize), a2: (usize, usize)| -> ComplexMatrix {
        let forward = kron(&outer(a1.0, a1.1), &outer(a2.0, a2.1));
        (&forward + &forward.adjoint()).scale_real(j)
    };
    h = &h + &exchange(p.j0101, (0, 1), (1, 0));
    h = &h + &exchange(p.j0112, (0, 1), (2, 1));
    h = &h + &exchange(p.j1201, (1, 2), (1, 0));
    h = &h + &exchange(p.j1212, (1, 2), (2, 1));
    h = &h + &exchange(p.j02, (0, 2), (2, 0));

    let zz = kron(&site_diag(p.d11, p.d12), &site_diag(p.d21, p.d22)).scale_real(p.jzz);
    &h + &zz
}

/// Angle of a field point on the ramp: θ(t) = πt/t_ramp.
pub fn ramp_angle(t: f64, t_ramp: f64) -> f64 {
    PI * t / t_ramp
}
