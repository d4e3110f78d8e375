//! Berry curvature, exactly from the instantaneous eigenbasis and
//! dynamically from the generalized force along a finite-speed ramp.
//!
//! Sign convention: Chern numbers are reported so that the ramp-style single
//! spin with its Weyl point enclosed gives +2 by both routes. The exact flux
//! is therefore −(1/2π)∮F·dS while the ramp integral is ∫F_θφ dθ.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonians::Model;
use crate::numerics::{
    hermitian_eigs, linspace, propagate_step, trapezoid_integrate, ComplexMatrix, NumericsError, C64,
};
use crate::output::{fmt_g12, to_json_string};

/// Minimum spectral gap for the sum-over-states formula.
pub const CURVATURE_GAP: f64 = 1e-6;
/// Minimum gap anywhere on a flux sphere.
pub const SURFACE_GAP: f64 = 1e-4;
/// Minimum ground gap at the start of a ramp.
pub const START_GAP: f64 = 1e-8;
pub const MIN_SAMPLES: usize = 100;
/// No propagation step is longer than this fraction of the ramp.
pub const MIN_STEPS_PER_RAMP: f64 = 20_000.0;
const RESIDUAL_WARNING: f64 = 0.25;
/// Meridian samples used by adiabatic_ramp_time.
pub const ADIABATIC_SAMPLES: usize = 721;

// Fourth-order commutator-free exponential integrator: two exact
// exponentials per step built from H at the Gauss nodes. A second-order
// midpoint step leaves an error of order (‖H‖ dt)² that does not shrink
// with the ramp speed and swamps the response of slow ramps.
const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const GAUSS_NODES: [f64; 2] = [0.5 - SQRT3_6, 0.5 + SQRT3_6];
const CF4_WEIGHTS: [f64; 2] = [0.25 + SQRT3_6, 0.25 - SQRT3_6];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BerryError {
    #[error("band {band} is degenerate at the evaluation point (gap {gap:e})")]
    DegenerateBand { band: usize, gap: f64 },
    #[error("degeneracy on the flux sphere near θ={theta}, φ={phi} (gap {gap:e})")]
    DegenerateOnSurface { theta: f64, phi: f64, gap: f64 },
    #[error("ground state at θ = 0 is degenerate (gap {gap:e})")]
    DegenerateStart { gap: f64 },
    #[error("band {band} out of range for dimension {dim}")]
    BadBand { band: usize, dim: usize },
    #[error("invalid ramp protocol: {0}")]
    InvalidProtocol(String),
    #[error("invalid flux grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureVector {
    pub components: [f64; 3],
}

impl CurvatureVector {
    pub fn dot(&self, v: [f64; 3]) -> f64 {
        self.components.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self.components).sqrt()
    }
}

/// F_n(R) = −Im Σ_{m≠n} ⟨n|∇H|m⟩ × ⟨m|∇H|n⟩ / (E_m − E_n)².
pub fn exact_curvature(model: &Model, r: [f64; 3], band: usize) -> Result<CurvatureVector, BerryError> {
    let dim = model.dim();
    if band >= dim {
        return Err(BerryError::BadBand { band, dim });
    }
    let eig = hermitian_eigs(&model.hamiltonian_at(r))?;
    let gap = eig.gap_to_neighbours(band);
    if gap < CURVATURE_GAP {
        return Err(BerryError::DegenerateBand { band, gap });
    }
    let grad = model.field_gradient();
    Ok(curvature_from_eigs(&eig.energies, &eig.states, &grad, band))
}

fn curvature_from_eigs(
    energies: &[f64],
    states: &[crate::numerics::StateVector],
    grad: &[ComplexMatrix; 3],
    band: usize,
) -> CurvatureVector {
    let n = &states[band];
    let mut f = [0.0; 3];
    for (m, state) in states.iter().enumerate() {
        if m == band {
            continue;
        }
        let de = energies[m] - energies[band];
        let a: [C64; 3] = [0, 1, 2].map(|k| n.matrix_element(&grad[k], state));
        let b = a.map(|z| z.conj());
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        for k in 0..3 {
            f[k] -= cross[k].im / (de * de);
        }
    }
    CurvatureVector { components: f }
}

/// Chern number of `band` from the exact flux through a sphere.
///
/// θ uses `n_theta` trapezoid nodes on [0, π] (the poles carry zero weight),
/// φ uses `n_phi` equally spaced periodic nodes.
pub fn exact_chern_flux(
    model: &Model,
    center: [f64; 3],
    radius: f64,
    band: usize,
    n_theta: usize,
    n_phi: usize,
) -> Result<f64, BerryError> {
    if n_theta < 3 {
        return Err(BerryError::InvalidGrid(format!("{n_theta}x{n_phi}")));
    }
    exact_chern_flux_on(model, center, radius, band, &linspace(0.0, PI, n_theta), n_phi)
}

/// θ nodes on [0, π] crowded towards both poles, θ ∝ u³ near each end.
///
/// Anisotropic or quadratic touchings concentrate their curvature in small
/// polar caps of a sphere centred on the axis; this grid resolves them with
/// a few dozen nodes.
pub fn pole_clustered_thetas(n: usize) -> Vec<f64> {
    linspace(0.0, 1.0, n)
        .into_iter()
        .map(|u| PI * (u - (TAU * u).sin() / TAU))
        .collect()
}

/// As [`exact_chern_flux`] with explicit θ nodes, which must ascend from 0
/// to π.
pub fn exact_chern_flux_on(
    model: &Model,
    center: [f64; 3],
    radius: f64,
    band: usize,
    thetas: &[f64],
    n_phi: usize,
) -> Result<f64, BerryError> {
    let valid = thetas.len() >= 3
        && thetas[0] == 0.0
        && (thetas[thetas.len() - 1] - PI).abs() < 1e-12
        && thetas.windows(2).all(|w| w[1] > w[0]);
    if !valid || n_phi < 1 {
        return Err(BerryError::InvalidGrid(format!("{} θ nodes x {n_phi}", thetas.len())));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(BerryError::InvalidGrid(format!("radius {radius}")));
    }
    let dim = model.dim();
    if band >= dim {
        return Err(BerryError::BadBand { band, dim });
    }
    // The poles carry no weight but are still checked for degeneracies.
    for (theta, z) in [(0.0, radius), (PI, -radius)] {
        let r = [center[0], center[1], center[2] + z];
        let gap = hermitian_eigs(&model.hamiltonian_at(r))?.gap_to_neighbours(band);
        if gap < SURFACE_GAP {
            return Err(BerryError::DegenerateOnSurface { theta, phi: 0.0, gap });
        }
    }
    let grad = model.field_gradient();
    let d_phi = TAU / n_phi as f64;
    let mut ring = vec![0.0; thetas.len()];
    for (i, &theta) in thetas.iter().enumerate().skip(1).take(thetas.len() - 2) {
        let (st, ct) = theta.sin_cos();
        for j in 0..n_phi {
            let phi = j as f64 * d_phi;
            let (sp, cp) = phi.sin_cos();
            let normal = [st * cp, st * sp, ct];
            let r = [0, 1, 2].map(|k| center[k] + radius * normal[k]);
            let eig = hermitian_eigs(&model.hamiltonian_at(r))?;
            let gap = eig.gap_to_neighbours(band);
            if gap < SURFACE_GAP {
                return Err(BerryError::DegenerateOnSurface { theta, phi, gap });
            }
            let f = curvature_from_eigs(&eig.energies, &eig.states, &grad, band);
            ring[i] += f.dot(normal) * radius * radius * st * d_phi;
        }
    }
    Ok(-trapezoid_integrate(thetas, &ring)? / TAU)
}

/// θ(t) = v_θ t with v_θ = π / t_ramp, sampled at `n_samples` equally
/// spaced times including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampProtocol {
    pub t_ramp: f64,
    pub n_samples: usize,
    pub v_theta: f64,
}

impl RampProtocol {
    pub const DEFAULT_SAMPLES: usize = 2000;

    pub fn new(t_ramp: f64, n_samples: usize) -> Result<Self, BerryError> {
        if !(t_ramp.is_finite() && t_ramp > 0.0) {
            return Err(BerryError::InvalidProtocol(format!("t_ramp must be positive, got {t_ramp}")));
        }
        if n_samples < MIN_SAMPLES {
            return Err(BerryError::InvalidProtocol(format!(
                "need at least {MIN_SAMPLES} samples, got {n_samples}"
            )));
        }
        Ok(Self {
            t_ramp,
            n_samples,
            v_theta: PI / t_ramp,
        })
    }

    pub fn with_t_ramp(t_ramp: f64) -> Result<Self, BerryError> {
        Self::new(t_ramp, Self::DEFAULT_SAMPLES)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTrace {
    pub thetas: Vec<f64>,
    pub f_values: Vec<f64>,
    pub chern: f64,
    pub chern_rounded: i64,
    pub residual: f64,
}

impl CurvatureTrace {
    pub fn from_samples(thetas: Vec<f64>, f_values: Vec<f64>) -> Result<Self, BerryError> {
        let chern = trapezoid_integrate(&thetas, &f_values)?;
        let chern_rounded = chern.round() as i64;
        let residual = (chern - chern_rounded as f64).abs();
        Ok(Self {
            thetas,
            f_values,
            chern,
            chern_rounded,
            residual,
        })
    }

    pub fn summary_line(&self) -> String {
        format!(
            "chern={} rounded={} residual={}",
            fmt_g12(self.chern),
            self.chern_rounded,
            fmt_g12(self.residual)
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,F_theta_phi\n");
        for (t, f) in self.thetas.iter().zip(&self.f_values) {
            out.push_str(&fmt_g12(*t));
            out.push(',');
            out.push_str(&fmt_g12(*f));
            out.push('\n');
        }
        out.push_str("# ");
        out.push_str(&self.summary_line());
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> String {
        to_json_string(self).expect("trace serializes")
    }
}

/// Runs the ramp θ: 0 → π at the field's azimuth and records
/// F_θφ = ⟨M_φ⟩ / v_θ with M_φ = −∂H/∂φ.
///
/// The state starts in the instantaneous ground state at θ = 0 and is
/// propagated with a fourth-order commutator-free exponential scheme.
pub fn simulate_ramp(model: &Model, protocol: &RampProtocol) -> Result<CurvatureTrace, BerryError> {
    let protocol = RampProtocol::new(protocol.t_ramp, protocol.n_samples)?;
    let field = model.field();
    let hr = field.magnitude;
    let (sp, cp) = field.phi.sin_cos();
    let point = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        [hr * st * cp, hr * st * sp, hr * ct]
    };

    let start = hermitian_eigs(&model.hamiltonian_at(point(0.0)))?;
    let gap = start.energies[1] - start.energies[0];
    if gap < START_GAP {
        return Err(BerryError::DegenerateStart { gap });
    }
    let mut psi = start.ground_state().clone();

    let grad = model.field_gradient();
    // ∂H/∂φ = Hr sinθ (−sinφ Gx + cosφ Gy)
    let mut azimuthal = grad[0].scale_real(-sp);
    azimuthal.add_scaled(cp, &grad[1]);

    // Upper bound on ‖H(t)‖₂; the Frobenius norm of the field term is
    // invariant under rotation of its direction.
    let bound = model.hamiltonian_at([0.0; 3]).frobenius_norm() + hr * grad[2].frobenius_norm();
    let mut dt_max = protocol.t_ramp / MIN_STEPS_PER_RAMP;
    if bound > 0.0 {
        dt_max = dt_max.min(crate::numerics::MAX_PHASE_PER_STEP / bound);
    }

    let n = protocol.n_samples;
    let interval = protocol.t_ramp / (n - 1) as f64;
    let substeps = (interval / dt_max).ceil().max(1.0) as usize;
    let dt = interval / substeps as f64;
    let v = protocol.v_theta;

    let mut thetas = Vec::with_capacity(n);
    let mut f_values = Vec::with_capacity(n);
    let mut record = |k: usize, psi: &crate::numerics::StateVector| {
        let theta = PI * k as f64 / (n - 1) as f64;
        thetas.push(theta);
        f_values.push(-hr * theta.sin() * psi.expectation(&azimuthal) / v);
    };
    record(0, &psi);
    for k in 1..n {
        let t0 = (k - 1) as f64 * interval;
        for s in 0..substeps {
            let ta = t0 + s as f64 * dt;
            let h1 = model.hamiltonian_at(point(v * (ta + GAUSS_NODES[0] * dt)));
            let h2 = model.hamiltonian_at(point(v * (ta + GAUSS_NODES[1] * dt)));
            let mut first = h1.scale_real(CF4_WEIGHTS[0]);
            first.add_scaled(CF4_WEIGHTS[1], &h2);
            let mut second = h1.scale_real(CF4_WEIGHTS[1]);
            second.add_scaled(CF4_WEIGHTS[0], &h2);
            psi = propagate_step(&psi, &first, dt)?;
            psi = propagate_step(&psi, &second, dt)?.normalized();
        }
        record(k, &psi);
    }
    let trace = CurvatureTrace::from_samples(thetas, f_values)?;
    if trace.residual > RESIDUAL_WARNING {
        log::warn!(
            "ramp chern {:.6} is {:.3} away from the nearest integer",
            trace.chern,
            trace.residual
        );
    }
    Ok(trace)
}

/// Largest |⟨m|∂H/∂θ|0⟩| / (E_m − E_0)² over the ramp meridian, sampled
/// at `n` angles. A ramp at speed v_θ follows the ground state when
/// v_θ times this is small; infinite if the ground level closes.
pub fn adiabatic_parameter(model: &Model, n: usize) -> Result<f64, BerryError> {
    let field = model.field();
    let hr = field.magnitude;
    let (sp, cp) = field.phi.sin_cos();
    let grad = model.field_gradient();
    let mut worst: f64 = 0.0;
    for theta in linspace(0.0, PI, n.max(2)) {
        let (st, ct) = theta.sin_cos();
        let eig = hermitian_eigs(&model.hamiltonian_at([hr * st * cp, hr * st * sp, hr * ct]))?;
        // ∂H/∂θ = Hr (cosθ cosφ Gx + cosθ sinφ Gy − sinθ Gz)
        let mut d_theta = grad[0].scale_real(hr * ct * cp);
        d_theta.add_scaled(hr * ct * sp, &grad[1]);
        d_theta.add_scaled(-hr * st, &grad[2]);
        let ground = eig.ground_state();
        for m in 1..eig.dim() {
            let gap = eig.energies[m] - eig.energies[0];
            if gap < START_GAP {
                return Ok(f64::INFINITY);
            }
            let coupling = eig.states[m].matrix_element(&d_theta, ground).norm();
            worst = worst.max(coupling / (gap * gap));
        }
    }
    Ok(worst)
}

/// Shortest ramp, but at least `floor`, with v_θ · adiabatic_parameter ≤ `epsilon`.
pub fn adiabatic_ramp_time(model: &Model, epsilon: f64, floor: f64) -> Result<f64, BerryError> {
    if !(epsilon > 0.0 && floor > 0.0) {
        return Err(BerryError::InvalidProtocol(format!(
            "epsilon {epsilon} and floor {floor} must be positive"
        )));
    }
    let a = adiabatic_parameter(model, ADIABATIC_SAMPLES)?;
    Ok((PI * a / epsilon).max(floor))
}

fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..values.len())
        .map(|i| {
            let h = half.min(i).min(values.len() - 1 - i);
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}

fn zero_crossings(values: &[f64], threshold: f64) -> usize {
    let mut state = 0i8;
    let mut count = 0;
    for &v in values {
        let s = if v > threshold {
            1
        } else if v < -threshold {
            -1
        } else {
            0
        };
        if s != 0 {
            if state != 0 && s != state {
                count += 1;
            }
            state = s;
        }
    }
    count
}

/// Number of sign changes of F_θφ about its local mean.
///
/// The local mean is a centred moving average. A first pass with a window
/// of n/8 samples estimates the period; the count is then redone with a
/// window of one period, which removes a sinusoid exactly. Excursions
/// smaller than 2% of the largest deviation are ignored.
pub fn oscillation_count(trace: &CurvatureTrace) -> usize {
    let f = &trace.f_values;
    let n = f.len();
    if n < 3 {
        return 0;
    }
    let count_with = |window: usize| {
        let mean = moving_average(f, window.max(1));
        let dev: Vec<f64> = f.iter().zip(&mean).map(|(a, b)| a - b).collect();
        let peak = dev.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let scale = f.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if peak <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return 0;
        }
        zero_crossings(&dev, 0.02 * peak)
    };
    let rough = count_with(n / 8);
    if rough < 2 {
        return rough;
    }
    let period = (2 * n) / rough;
    count_with(period.clamp(3, n))
}
