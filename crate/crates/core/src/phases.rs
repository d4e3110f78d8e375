//! Weyl points on the field axis, enclosure-counting Chern predictions and
//! two-parameter phase diagrams.
//!
//! On the z-axis every family conserves total Sᶻ, so the ground level is the
//! lowest of the per-sector ground levels and changes label only where two
//! sectors cross. Those crossings are the ground-band Weyl points. For an
//! isolated crossing the flux through a small enclosing sphere equals the
//! jump m_above − m_below of the ground label (sign convention of
//! [`crate::berry`]), so that jump is the charge; the measured flux is kept
//! alongside as a check.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::berry::{exact_chern_flux_on, pole_clustered_thetas, simulate_ramp, BerryError, RampProtocol};
use crate::hamiltonians::{CoupledParams, FieldVector, Model, SignConvention};
use crate::numerics::{hermitian_eigs, NumericsError};
use crate::output::{fmt_g12, to_json_string, SvgDocument};

pub const SCAN_POINTS: usize = 2000;
/// Crossings are refined until bracketed to this width (rad/µs).
pub const BISECTION_TOL: f64 = 1e-8;
/// Crossings closer than this fraction of Hr are one point.
pub const MERGE_FRACTION: f64 = 1e-7;
/// Flux-sphere radius as a fraction of Hr, before clipping to neighbours.
pub const FLUX_RADIUS_FRACTION: f64 = 5e-2;
/// Pole-clustered θ nodes × φ nodes for the check flux. The integrand is
/// φ-independent for an on-axis centre, so few φ nodes suffice.
pub const FLUX_GRID: (usize, usize) = (96, 4);
/// Minimum distance of a Weyl point from the Chern sphere, as a fraction of Hr.
pub const BOUNDARY_FRACTION: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("scan range [{lo}, {hi}] must cover [{need_lo}, {need_hi}]")]
    RangeTooNarrow { lo: f64, hi: f64, need_lo: f64, need_hi: f64 },
    #[error("Weyl point at h_z = {h_z} lies within {tol} of the sphere radius {radius}")]
    BoundaryDegeneracy { h_z: f64, radius: f64, tol: f64 },
    #[error("unknown parameter `{0}` (expected h0, g, j_z or j_02)")]
    UnknownParameter(String),
    #[error("unknown method `{0}` (expected analytic or dynamical)")]
    UnknownMethod(String),
    #[error("dynamical diagrams need a ramp protocol")]
    MissingProtocol,
    #[error("{0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Berry(#[from] BerryError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub h_z: f64,
    pub charge: i32,
    /// (m above the point, m below it) of the ground level along z.
    pub gap_sector: (i32, i32),
    /// Ground-band flux through a small sphere around the point, when
    /// measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<f64>,
}

impl WeylPoint {
    fn new(h_z: f64, charge: i32, above: i32, below: i32) -> Self {
        Self {
            h_z,
            charge,
            gap_sector: (above, below),
            flux: None,
        }
    }
}

impl fmt::Display for WeylPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "h_z={} charge={} sectors={},{}",
            fmt_g12(self.h_z),
            self.charge,
            self.gap_sector.0,
            self.gap_sector.1
        )
    }
}

/// Closed-form locations for an exchange coupling g (ramp convention).
///
/// The first pair sits at −H0/2 ± ½√(H0²+4g²); the second pair is the
/// first shifted inward by √(H0²+2g²). Each carries charge +1.
pub fn weyl_points_g(h0: f64, g: f64) -> Vec<WeylPoint> {
    let s = (h0 * h0 + 4.0 * g * g).sqrt();
    let q = (h0 * h0 + 2.0 * g * g).sqrt();
    vec![
        WeylPoint::new((s - h0) / 2.0, 1, 2, 1),
        WeylPoint::new(-(s + h0) / 2.0, 1, -1, -2),
        WeylPoint::new((s - h0) / 2.0 - q, 1, 0, -1),
        WeylPoint::new(q - (s + h0) / 2.0, 1, 1, 0),
    ]
}

/// Closed-form locations for the double spin flip J02 (ramp convention):
/// −H0/2 ± ½√(H0²+J02²). The ground level jumps by two units of m at each,
/// so each carries charge 2.
pub fn weyl_points_j02(h0: f64, j02: f64) -> Vec<WeylPoint> {
    let p = (h0 * h0 + j02 * j02).sqrt();
    vec![
        WeylPoint::new((p - h0) / 2.0, 2, 2, 0),
        WeylPoint::new(-(p + h0) / 2.0, 2, 0, -2),
    ]
}

/// Closed-form locations for an Ising coupling J_Z ≥ 0 with H0 ≥ 0: the
/// second spin flips at h_z = J_Z, the first at h_z = −(H0 + J_Z).
pub fn weyl_points_jz(h0: f64, j_z: f64) -> Vec<WeylPoint> {
    vec![
        WeylPoint::new(j_z, 2, 2, 0),
        WeylPoint::new(-(h0 + j_z), 2, 0, -2),
    ]
}

/// Closed-form Weyl points where one exists for this parameter set.
pub fn closed_form_points(model: &Model) -> Option<Vec<WeylPoint>> {
    if model.convention() != SignConvention::RampStyle {
        return None;
    }
    match model {
        Model::Single(p) => Some(vec![WeylPoint::new(-p.h0, 2, 1, -1)]),
        Model::Coupled(p) => match (p.g != 0.0, p.j_z != 0.0, p.j_02 != 0.0) {
            (_, false, false) => Some(weyl_points_g(p.h0, p.g)),
            (false, true, false) if p.h0 >= 0.0 && p.j_z > 0.0 => Some(weyl_points_jz(p.h0, p.j_z)),
            (false, false, true) => Some(weyl_points_j02(p.h0, p.j_02)),
            _ => None,
        },
    }
}

/// Per-sector ground energies along the field axis.
struct AxisSectors<'a> {
    model: &'a Model,
    sectors: Vec<(i32, Vec<usize>)>,
}

impl<'a> AxisSectors<'a> {
    fn new(model: &'a Model) -> Self {
        let m = model.basis_m();
        let labels: BTreeSet<i32> = m.iter().copied().collect();
        let sectors = labels
            .into_iter()
            .rev()
            .map(|label| {
                let idx = m.iter().enumerate().filter(|(_, &v)| v == label).map(|(i, _)| i).collect();
                (label, idx)
            })
            .collect();
        Self { model, sectors }
    }

    fn energies(&self, h_z: f64) -> Result<Vec<(i32, f64)>, NumericsError> {
        let h = self.model.hamiltonian_at([0.0, 0.0, h_z]);
        self.sectors
            .iter()
            .map(|(label, idx)| Ok((*label, hermitian_eigs(&h.submatrix(idx))?.ground_energy())))
            .collect()
    }

    /// Ground label; ties go to the larger m.
    fn ground(&self, h_z: f64) -> Result<(i32, Vec<(i32, f64)>), NumericsError> {
        let e = self.energies(h_z)?;
        let best = e
            .iter()
            .fold((i32::MIN, f64::INFINITY), |acc, &(m, en)| if en < acc.1 { (m, en) } else { acc });
        Ok((best.0, e))
    }
}

fn sector_energy(e: &[(i32, f64)], label: i32) -> f64 {
    e.iter().find(|(m, _)| *m == label).map(|(_, en)| *en).unwrap_or(f64::NAN)
}

/// Raw crossing: location plus ground labels above and below.
#[derive(Debug, Clone, Copy)]
struct Crossing {
    h_z: f64,
    above: i32,
    below: i32,
}

fn refine(
    axis: &AxisSectors,
    lo: f64,
    hi: f64,
    below: i32,
    above: i32,
    out: &mut Vec<Crossing>,
) -> Result<(), NumericsError> {
    if hi - lo <= BISECTION_TOL {
        // The two sector levels are straight lines in h_z, so linear
        // interpolation of their difference lands on the crossing.
        let (e_lo, e_hi) = (axis.energies(lo)?, axis.energies(hi)?);
        let d_lo = sector_energy(&e_lo, above) - sector_energy(&e_lo, below);
        let d_hi = sector_energy(&e_hi, above) - sector_energy(&e_hi, below);
        let h_z = if d_lo != d_hi && d_lo.is_finite() && d_hi.is_finite() {
            (lo + (hi - lo) * d_lo / (d_lo - d_hi)).clamp(lo, hi)
        } else {
            0.5 * (lo + hi)
        };
        out.push(Crossing { h_z, above, below });
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    let (label, _) = axis.ground(mid)?;
    if label == below {
        refine(axis, mid, hi, below, above, out)
    } else if label == above {
        refine(axis, lo, mid, below, above, out)
    } else {
        refine(axis, lo, mid, below, label, out)?;
        refine(axis, mid, hi, label, above, out)
    }
}

fn merge(crossings: Vec<Crossing>, tol: f64) -> Vec<Crossing> {
    let mut merged: Vec<(Crossing, Vec<f64>)> = Vec::new();
    for c in crossings {
        match merged.last_mut() {
            Some((last, locs)) if (c.h_z - last.h_z).abs() <= tol => {
                // Ascending scan: the newer crossing has the higher label.
                last.above = c.above;
                locs.push(c.h_z);
                last.h_z = locs.iter().sum::<f64>() / locs.len() as f64;
            }
            _ => merged.push((c, vec![c.h_z])),
        }
    }
    merged.into_iter().map(|(c, _)| c).collect()
}

/// Locates every ground-level crossing on the field axis in `range`, with
/// its charge and measured flux.
pub fn scan_weyl_points(model: &Model, range: (f64, f64)) -> Result<Vec<WeylPoint>, PhaseError> {
    let hr = model.field().magnitude;
    let scale = model.scale();
    let (lo, hi) = range;
    let mut need = (-3.0 * hr, 3.0 * hr);
    if let Some(points) = closed_form_points(model) {
        for p in points {
            need.0 = need.0.min(p.h_z);
            need.1 = need.1.max(p.h_z);
        }
    }
    if !(lo <= need.0 && hi >= need.1 && hi > lo) {
        return Err(PhaseError::RangeTooNarrow {
            lo,
            hi,
            need_lo: need.0,
            need_hi: need.1,
        });
    }
    let mut points = scan_unchecked(model, lo, hi, scale)?;
    attach_flux(model, &mut points, scale);
    Ok(points)
}

fn scan_unchecked(model: &Model, lo: f64, hi: f64, scale: f64) -> Result<Vec<WeylPoint>, PhaseError> {
    let axis = AxisSectors::new(model);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut raw = Vec::new();
    let mut prev = (lo, axis.ground(lo)?.0);
    for k in 1..SCAN_POINTS {
        let z = if k == SCAN_POINTS - 1 { hi } else { lo + k as f64 * step };
        let (label, _) = axis.ground(z)?;
        if label != prev.1 {
            refine(&axis, prev.0, z, prev.1, label, &mut raw)?;
        }
        prev = (z, label);
    }
    raw.sort_by(|a, b| a.h_z.total_cmp(&b.h_z));
    let crossings = merge(raw, MERGE_FRACTION * scale);

    Ok(crossings
        .iter()
        .map(|c| WeylPoint::new(c.h_z, c.above - c.below, c.above, c.below))
        .collect())
}

/// Adds the measured small-sphere flux to each point.
///
/// Near exchange-symmetric parameters the touchings turn into nodal shells
/// or very flat cones and the flux stops resolving the charge; those cases
/// are logged and the flux is still recorded.
fn attach_flux(model: &Model, points: &mut [WeylPoint], scale: f64) {
    let (nt, np) = FLUX_GRID;
    let thetas = pole_clustered_thetas(nt);
    let locations: Vec<f64> = points.iter().map(|p| p.h_z).collect();
    for (i, p) in points.iter_mut().enumerate() {
        let neighbour = locations
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, z)| (z - p.h_z).abs())
            .fold(f64::INFINITY, f64::min);
        let radius = (FLUX_RADIUS_FRACTION * scale).min(0.45 * neighbour);
        match exact_chern_flux_on(model, [0.0, 0.0, p.h_z], radius, 0, &thetas, np) {
            Ok(flux) => {
                if (flux - p.charge as f64).abs() > 0.1 {
                    log::info!(
                        "flux {flux:.4} around h_z = {:.6} does not resolve charge {}",
                        p.h_z,
                        p.charge
                    );
                }
                p.flux = Some(flux);
            }
            Err(e) => log::info!("no flux around h_z = {:.6}: {e}", p.h_z),
        }
    }
}

/// Symmetric scan half-width that is certain to contain every crossing:
/// two sector lines with slopes differing by at least one unit meet within
/// the spread of the sector energies at h_z = 0.
fn safe_half_width(model: &Model, radius: f64) -> Result<f64, PhaseError> {
    let e = AxisSectors::new(model).energies(0.0)?;
    let (min, max) = e
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, x)| (a.min(x), b.max(x)));
    let hr = model.field().magnitude;
    Ok((3.0 * hr).max(1.25 * radius).max(1.25 * (max - min)).max(model.scale()))
}

/// Symmetric axis range guaranteed to contain every Weyl point of `model`.
pub fn default_scan_range(model: &Model) -> Result<(f64, f64), PhaseError> {
    let w = safe_half_width(model, 0.0)?;
    Ok((-w, w))
}

/// Sum of Weyl charges with |h_z| < `sphere_radius`.
pub fn predict_chern(model: &Model, sphere_radius: f64) -> Result<i32, PhaseError> {
    let points = scan_for_prediction(model, sphere_radius)?;
    enclosed_charge(&points, sphere_radius, model.scale())
}

fn scan_for_prediction(model: &Model, sphere_radius: f64) -> Result<Vec<WeylPoint>, PhaseError> {
    let half = safe_half_width(model, sphere_radius)?;
    scan_unchecked(model, -half, half, model.scale())
}

fn enclosed_charge(points: &[WeylPoint], radius: f64, scale: f64) -> Result<i32, PhaseError> {
    let tol = BOUNDARY_FRACTION * scale;
    let mut total = 0;
    for p in points {
        if (p.h_z.abs() - radius).abs() < tol {
            return Err(PhaseError::BoundaryDegeneracy {
                h_z: p.h_z,
                radius,
                tol,
            });
        }
        if p.h_z.abs() < radius {
            total += p.charge;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "h0")]
    H0,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "j_z")]
    JZ,
    #[serde(rename = "j_02")]
    J02,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::H0 => "h0",
            Param::G => "g",
            Param::JZ => "j_z",
            Param::J02 => "j_02",
        }
    }

    pub fn apply(self, params: &mut CoupledParams, value: f64) {
        match self {
            Param::H0 => params.h0 = value,
            Param::G => params.g = value,
            Param::JZ => params.j_z = value,
            Param::J02 => params.j_02 = value,
        }
    }
}

impl FromStr for Param {
    type Err = PhaseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h0" => Ok(Param::H0),
            "g" => Ok(Param::G),
            "j_z" | "jz" | "j-z" => Ok(Param::JZ),
            "j_02" | "j02" | "j-02" => Ok(Param::J02),
            other => Err(PhaseError::UnknownParameter(other.to_string())),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Dynamical,
}

impl FromStr for Method {
    type Err = PhaseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Method::Analytic),
            "dynamical" => Ok(Method::Dynamical),
            other => Err(PhaseError::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub x_param: Param,
    pub y_param: Param,
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// Indexed `[iy][ix]`.
    pub chern_grid: Vec<Vec<i32>>,
    /// Cells next to a Weyl point or with a poorly quantized ramp integral.
    pub flagged: Vec<Vec<bool>>,
    pub source: Method,
    /// Field magnitude the diagram was computed at.
    pub hr: f64,
}

/// Outcome for one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResult {
    pub chern: i32,
    pub flagged: bool,
}

/// Enclosure count at the field sphere, retrying with the radius nudged by
/// ±1e−3·Hr when a Weyl point sits on it.
pub fn analytic_cell(model: &Model) -> Result<CellResult, PhaseError> {
    let hr = model.field().magnitude;
    let nudge = BOUNDARY_FRACTION * model.scale();
    let points = scan_for_prediction(model, hr + nudge)?;
    let scale = model.scale();
    match enclosed_charge(&points, hr, scale) {
        Ok(chern) => Ok(CellResult { chern, flagged: false }),
        Err(PhaseError::BoundaryDegeneracy { .. }) => {
            let chern = enclosed_charge(&points, hr + nudge, scale)
                .or_else(|_| enclosed_charge(&points, hr - nudge, scale))?;
            Ok(CellResult { chern, flagged: true })
        }
        Err(e) => Err(e),
    }
}

pub fn dynamical_cell(model: &Model, protocol: &RampProtocol) -> Result<CellResult, PhaseError> {
    let mut flagged = analytic_cell(model)?.flagged;
    let trace = match simulate_ramp(model, protocol) {
        // A Weyl point on the pole: ramp a slightly larger sphere.
        Err(BerryError::DegenerateStart { .. }) => {
            flagged = true;
            let f = model.field();
            let nudged = FieldVector {
                magnitude: f.magnitude + BOUNDARY_FRACTION * model.scale(),
                ..f
            };
            simulate_ramp(&model.with_field(nudged), protocol)?
        }
        other => other?,
    };
    Ok(CellResult {
        chern: trace.chern_rounded as i32,
        flagged: flagged || trace.residual > 0.25,
    })
}

/// Fills a diagram over `x_grid × y_grid`, all other couplings taken from
/// `fixed`. Cells run in parallel on the current rayon pool.
pub fn phase_diagram(
    x_param: Param,
    y_param: Param,
    x_grid: &[f64],
    y_grid: &[f64],
    fixed: &CoupledParams,
    method: Method,
    protocol: Option<&RampProtocol>,
) -> Result<PhaseDiagram, PhaseError> {
    if x_param == y_param {
        return Err(PhaseError::InvalidGrid(format!("x and y are both {x_param}")));
    }
    for (name, grid) in [("x", x_grid), ("y", y_grid)] {
        if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PhaseError::InvalidGrid(format!("{name} grid must be non-empty and ascending")));
        }
    }
    if method == Method::Dynamical && protocol.is_none() {
        return Err(PhaseError::MissingProtocol);
    }
    let nx = x_grid.len();
    let cells: Vec<CellResult> = (0..nx * y_grid.len())
        .into_par_iter()
        .map(|k| {
            let mut params = *fixed;
            x_param.apply(&mut params, x_grid[k % nx]);
            y_param.apply(&mut params, y_grid[k / nx]);
            let model = Model::Coupled(params);
            match (method, protocol) {
                (Method::Dynamical, Some(p)) => dynamical_cell(&model, p),
                _ => analytic_cell(&model),
            }
        })
        .collect::<Result<_, _>>()?;
    let rows = |f: fn(&CellResult) -> i32| -> Vec<Vec<i32>> {
        cells.chunks(nx).map(|row| row.iter().map(f).collect()).collect()
    };
    let chern_grid = rows(|c| c.chern);
    let flagged = rows(|c| c.flagged as i32)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v != 0).collect())
        .collect();
    Ok(PhaseDiagram {
        x_param,
        y_param,
        x_grid: x_grid.to_vec(),
        y_grid: y_grid.to_vec(),
        chern_grid,
        flagged,
        source: method,
        hr: fixed.field.magnitude,
    })
}

const PALETTE: [&str; 9] = [
    "#f7f7f7", "#fdd49e", "#9ecae1", "#a1d99b", "#bcbddc", "#fc9272", "#6baed6", "#74c476", "#969696",
];

impl PhaseDiagram {
    pub fn distinct_values(&self) -> BTreeSet<i32> {
        self.chern_grid.iter().flatten().copied().collect()
    }

    /// Number of 4-connected regions of equal Chern number.
    pub fn region_count(&self) -> usize {
        let ny = self.chern_grid.len();
        let nx = self.x_grid.len();
        let mut seen = vec![vec![false; nx]; ny];
        let mut regions = 0;
        for sy in 0..ny {
            for sx in 0..nx {
                if seen[sy][sx] {
                    continue;
                }
                regions += 1;
                let value = self.chern_grid[sy][sx];
                let mut stack = vec![(sx, sy)];
                seen[sy][sx] = true;
                while let Some((x, y)) = stack.pop() {
                    let mut visit = |x: usize, y: usize| {
                        if !seen[y][x] && self.chern_grid[y][x] == value {
                            seen[y][x] = true;
                            stack.push((x, y));
                        }
                    };
                    if x > 0 {
                        visit(x - 1, y);
                    }
                    if x + 1 < nx {
                        visit(x + 1, y);
                    }
                    if y > 0 {
                        visit(x, y - 1);
                    }
                    if y + 1 < ny {
                        visit(x, y + 1);
                    }
                }
            }
        }
        regions
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,chern,flagged\n");
        for (iy, y) in self.y_grid.iter().enumerate() {
            for (ix, x) in self.x_grid.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_g12(*x),
                    fmt_g12(*y),
                    self.chern_grid[iy][ix],
                    self.flagged[iy][ix]
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        to_json_string(self).expect("diagram serializes")
    }

    /// Heatmap with one rectangle per cell; axes in units of Hr.
    pub fn to_svg(&self) -> String {
        let (cell, margin) = (12.0, 60.0);
        let nx = self.x_grid.len() as f64;
        let ny = self.y_grid.len() as f64;
        let (w, h) = (nx * cell, ny * cell);
        let mut doc = SvgDocument::new(w + margin + 110.0, h + 2.0 * margin);
        let top = margin / 2.0;
        for (iy, row) in self.chern_grid.iter().enumerate() {
            for (ix, &c) in row.iter().enumerate() {
                let x = margin + ix as f64 * cell;
                // Larger y drawn higher up.
                let y = top + (ny - 1.0 - iy as f64) * cell;
                doc.rect(x, y, cell, cell, color(c));
            }
        }
        doc.polyline(
            &[(margin, top), (margin, top + h), (margin + w, top + h)],
            "#000",
        );
        let unit = if self.hr > 0.0 { self.hr } else { 1.0 };
        let ticks = |grid: &[f64]| -> Vec<(usize, String)> {
            let last = grid.len() - 1;
            let mut v = vec![(0, fmt_g12(grid[0] / unit))];
            if last > 1 {
                v.push((last / 2, fmt_g12((grid[last / 2] / unit * 100.0).round() / 100.0)));
            }
            if last > 0 {
                v.push((last, fmt_g12(grid[last] / unit)));
            }
            v
        };
        for (i, label) in ticks(&self.x_grid) {
            let x = margin + (i as f64 + 0.5) * cell;
            doc.text(x, top + h + 16.0, "middle", &label);
        }
        for (i, label) in ticks(&self.y_grid) {
            let y = top + (ny - 1.0 - i as f64 + 0.5) * cell + 4.0;
            doc.text(margin - 6.0, y, "end", &label);
        }
        doc.text(margin + w / 2.0, top + h + 36.0, "middle", &format!("{} / Hr", self.x_param));
        doc.text(12.0, top + h / 2.0, "start", &format!("{} / Hr", self.y_param));
        for (k, value) in self.distinct_values().iter().enumerate() {
            let y = top + k as f64 * 18.0;
            doc.rect(margin + w + 20.0, y, 12.0, 12.0, color(*value));
            doc.text(margin + w + 38.0, y + 10.0, "start", &format!("Ch = {value}"));
        }
        doc.finish()
    }
}

fn color(chern: i32) -> &'static str {
    PALETTE[(chern + 4).clamp(0, 8) as usize]
}
