//! Invariant checks shared by the property suite and the acceptance run.
//! Each check takes a seed and reports the first violation it finds.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use qutrit_topology::berry::{exact_curvature, simulate_ramp, RampProtocol};
use qutrit_topology::cli;
use qutrit_topology::hamiltonians::{
    coupled, mhz_to_rad_per_us, single_spin_at, u1_rotate, CoupledParams, FieldVector, Model,
    SignConvention, SingleSpinParams,
};
use qutrit_topology::numerics::{
    hermitian_eigs, linspace, propagate_step, trapezoid_integrate, ComplexMatrix, StateVector,
};
use qutrit_topology::phases::{
    closed_form_points, default_scan_range, phase_diagram, scan_weyl_points, weyl_points_g, Method,
    Param,
};
use qutrit_topology::spin_algebra::{embed, spin1_operators, total_sz, SiteIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn hr() -> f64 {
    mhz_to_rad_per_us(10.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + &a.adjoint()).scale_real(0.5)
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    StateVector::new((0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .normalized()
}

pub fn coupled_model(h0: f64, g: f64, j_z: f64, j_02: f64) -> Model {
    Model::Coupled(CoupledParams {
        h0,
        field: FieldVector::along_z(hr()),
        g,
        j_z,
        j_02,
        convention: SignConvention::RampStyle,
    })
}

fn convention(rng: &mut ChaCha8Rng) -> SignConvention {
    if rng.gen_bool(0.5) {
        SignConvention::RampStyle
    } else {
        SignConvention::CircuitStyle
    }
}

/// A random member of either family with couplings up to 2Hr.
pub fn random_model(rng: &mut ChaCha8Rng) -> Model {
    let hr = hr();
    let field = FieldVector::new(hr, rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU)).unwrap();
    let conv = convention(rng);
    if rng.gen_bool(0.25) {
        Model::Single(SingleSpinParams {
            h0: rng.gen_range(-2.0..2.0) * hr,
            field,
            convention: conv,
        })
    } else {
        Model::Coupled(CoupledParams {
            h0: rng.gen_range(-2.0..2.0) * hr,
            field,
            g: rng.gen_range(-2.0..2.0) * hr,
            j_z: rng.gen_range(-2.0..2.0) * hr,
            j_02: rng.gen_range(-2.0..2.0) * hr,
            convention: conv,
        })
    }
}

// numerics

pub fn eig_residual(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.gen_range(1..=9);
    let h = random_hermitian(&mut rng, n);
    let eig = hermitian_eigs(&h).map_err(|e| e.to_string())?;
    for (e, v) in eig.energies.iter().zip(&eig.states) {
        let hv = h.apply(v);
        let residual = hv.max_abs_diff(&v.scale(C64::new(*e, 0.0)));
        ensure(residual <= 1e-10 * e.abs().max(1.0), || format!("residual {residual:e} at E = {e}"))?;
    }
    Ok(())
}

/// Largest step the propagator accepts for `h`, with some margin.
fn safe_dt(h: &ComplexMatrix) -> f64 {
    0.05 / hermitian_eigs(h).unwrap().spectral_radius().max(1e-12)
}

pub fn propagation_unitary(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = if rng.gen_bool(0.5) { 3 } else { 9 };
    let h = random_hermitian(&mut rng, n).scale_real(rng.gen_range(0.1..50.0));
    let dt = safe_dt(&h);
    let mut psi = random_state(&mut rng, n);
    let once = propagate_step(&psi, &h, dt).map_err(|e| e.to_string())?;
    ensure((once.norm() - 1.0).abs() <= 1e-12, || format!("single step norm {}", once.norm()))?;
    for _ in 0..100_000 {
        psi = propagate_step(&psi, &h, dt).map_err(|e| e.to_string())?;
    }
    ensure((psi.norm() - 1.0).abs() <= 1e-9, || format!("norm after 1e5 steps {}", psi.norm()))
}

pub fn eigenstate_phase(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.gen_range(2..=9);
    let h = random_hermitian(&mut rng, n).scale_real(hr());
    let eig = hermitian_eigs(&h).map_err(|e| e.to_string())?;
    let k = rng.gen_range(0..n);
    let (e, v) = (eig.energies[k], eig.states[k].clone());
    let steps = (1.0 / safe_dt(&h)).ceil() as usize;
    let mut psi = v.clone();
    for _ in 0..steps {
        psi = propagate_step(&psi, &h, 1.0 / steps as f64).map_err(|e| e.to_string())?;
    }
    let expected = v.scale(C64::from_polar(1.0, -e));
    let err = psi.max_abs_diff(&expected);
    ensure(err <= 1e-8, || format!("phase error {err:e} for E = {e} after {steps} steps"))
}

pub fn trapezoid_second_order(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (a, w, c) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0));
    let f = |x: f64| a * (w * x).sin() + c * x * x;
    let exact = a * (1.0 - w.cos()) / w + c / 3.0;
    let err = |n: usize| {
        let xs = linspace(0.0, 1.0, n);
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        (trapezoid_integrate(&xs, &ys).unwrap() - exact).abs()
    };
    let (coarse, fine) = (err(11), err(41));
    ensure(fine == 0.0 || coarse / fine >= 12.0, || format!("error ratio {}", coarse / fine))
}

// spin algebra

pub fn spin_operator_identities() -> Check {
    let s = spin1_operators();
    let i = C64::new(0.0, 1.0);
    let ops = [&s.sx, &s.sy, &s.sz];
    for k in 0..3 {
        let (a, b, c) = (ops[k], ops[(k + 1) % 3], ops[(k + 2) % 3]);
        let d = a.commutator(b).max_abs_diff(&c.scale(i));
        ensure(d <= 1e-14, || format!("commutator {k} off by {d:e}"))?;
    }
    ensure((&s.sx + &s.sy.scale(i)).max_abs_diff(&s.s_plus) <= 1e-15, || "S+ != Sx + iSy".into())?;
    ensure((&s.sx - &s.sy.scale(i)).max_abs_diff(&s.s_minus) <= 1e-15, || "S- != Sx - iSy".into())?;
    let casimir = &(&ops[0].matmul(ops[0]) + &ops[1].matmul(ops[1])) + &ops[2].matmul(ops[2]);
    ensure(casimir.max_abs_diff(&ComplexMatrix::identity(3).scale_real(2.0)) <= 1e-15, || "S^2 != 2".into())?;
    ensure(s.s_plus == s.s_minus.adjoint(), || "S+ != (S-)^dagger".into())
}

pub fn embed_preserves_spectrum(seed: u64) -> Check {
    let mut rng = rng(seed);
    let op = random_hermitian(&mut rng, 3);
    let base = hermitian_eigs(&op).unwrap().energies;
    for site in [SiteIndex::One, SiteIndex::Two] {
        let big = embed(&op, site).map_err(|e| e.to_string())?;
        let e = hermitian_eigs(&big).unwrap().energies;
        for (k, value) in e.iter().enumerate() {
            let d = (value - base[k / 3]).abs();
            ensure(d <= 1e-12, || format!("eigenvalue {k} off by {d:e}"))?;
        }
    }
    Ok(())
}

pub fn total_sz_commutes_on_axis(seed: u64) -> Check {
    let mut rng = rng(seed);
    let model = random_model(&mut rng);
    let field = model.field().with_angles(0.0, 0.0);
    let h = model.with_field(field).hamiltonian();
    let jz = if h.dim() == 9 { total_sz() } else { spin1_operators().sz.clone() };
    let d = h.commutator(&jz).max_abs();
    ensure(d <= 1e-13, || format!("[H, Jz] = {d:e}"))
}

// hamiltonians

pub fn builders_hermitian(seed: u64) -> Check {
    let mut rng = rng(seed);
    let h = random_model(&mut rng).hamiltonian();
    let d = h.hermiticity_deviation();
    ensure(d <= 1e-12, || format!("hermiticity deviation {d:e}"))
}

pub fn aligned_limit() -> Check {
    let eig = hermitian_eigs(&coupled_model(0.0, 0.0, 0.0, 0.0).hamiltonian()).unwrap();
    let d = (eig.ground_energy() + 2.0 * hr()).abs();
    ensure(d <= 1e-10, || format!("ground energy off by {d:e}"))?;
    let overlap = eig.ground_state().inner(&StateVector::basis(9, 0)).norm();
    ensure((overlap - 1.0).abs() <= 1e-10, || format!("|<up up|ground>| = {overlap}"))
}

pub fn u1_identity(seed: u64) -> Check {
    let mut rng = rng(seed);
    let model = random_model(&mut rng);
    let (theta, phi) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU));
    let base = model.with_field(model.field().with_angles(theta, 0.0)).hamiltonian();
    let rotated = model.with_field(model.field().with_angles(theta, phi)).hamiltonian();
    let d = rotated.max_abs_diff(&u1_rotate(&base, phi).map_err(|e| e.to_string())?);
    ensure(d <= 1e-12, || format!("U(1) identity off by {d:e} at theta={theta}, phi={phi}"))
}

// berry

pub fn ramp_error_shrinks_with_time() -> Check {
    let model = Model::single(0.0, FieldVector::along_z(hr()));
    let fast = simulate_ramp(&model, &RampProtocol::with_t_ramp(0.5).unwrap()).map_err(|e| e.to_string())?;
    let slow = simulate_ramp(&model, &RampProtocol::with_t_ramp(10.0).unwrap()).map_err(|e| e.to_string())?;
    ensure((slow.chern - 2.0).abs() < (fast.chern - 2.0).abs(), || {
        format!("chern {} at 10 us vs {} at 0.5 us", slow.chern, fast.chern)
    })
}

pub fn ground_curvature_radial(seed: u64) -> Check {
    let mut rng = rng(seed);
    let r = rng.gen_range(0.1..3.0) * hr();
    let (t, p) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU));
    let point = FieldVector::new(r, t, p).unwrap().cartesian();
    let model = Model::single(0.0, FieldVector::along_z(hr()));
    let f = exact_curvature(&model, point, 0).map_err(|e| e.to_string())?;
    let radial = f.dot(point) / r;
    let rel = (f.norm() - 1.0 / (r * r)).abs() * r * r;
    ensure(rel <= 1e-8, || format!("|F| relative error {rel:e}"))?;
    ensure((radial.abs() - f.norm()).abs() <= 1e-8 * f.norm(), || "curvature is not radial".into())
}

pub fn curvature_sum_rule(seed: u64) -> Check {
    let mut rng = rng(seed);
    let model = random_model(&mut rng);
    let r = model.field().cartesian();
    let mut total = [0.0; 3];
    let mut scale: f64 = 0.0;
    for band in 0..model.dim() {
        match exact_curvature(&model, r, band) {
            Ok(f) => {
                for (t, c) in total.iter_mut().zip(f.components) {
                    *t += c;
                }
                scale = scale.max(f.norm());
            }
            // A random draw landing on a degeneracy says nothing about the rule.
            Err(_) => return Ok(()),
        }
    }
    let sum = total.iter().map(|x| x.abs()).fold(0.0, f64::max);
    ensure(sum <= 1e-10 * scale.max(1.0), || format!("band sum {sum:e}"))
}

pub fn ramp_phi_independent(seed: u64) -> Check {
    let mut rng = rng(seed);
    let phi0 = rng.gen_range(0.0..TAU);
    let base = if rng.gen_bool(0.5) {
        Model::single(rng.gen_range(0.0..0.8) * hr(), FieldVector::along_z(hr()))
    } else {
        coupled_model(rng.gen_range(0.0..0.8) * hr(), rng.gen_range(0.0..1.0) * hr(), 0.0, 0.0)
    };
    let rotated = base.with_field(base.field().with_angles(0.0, phi0));
    let protocol = RampProtocol::new(0.5, 500).unwrap();
    let a = simulate_ramp(&base, &protocol).map_err(|e| e.to_string())?;
    let b = simulate_ramp(&rotated, &protocol).map_err(|e| e.to_string())?;
    let d = a
        .f_values
        .iter()
        .zip(&b.f_values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    ensure(d <= 1e-9, || format!("f_values differ by {d:e} at phi0 = {phi0}"))
}

/// Points of the acceptance runs at which ramp rounding must not depend on
/// the sampling density.
pub fn refinement_points() -> Vec<(Model, f64)> {
    let hr = hr();
    let single = |h0: f64| Model::single(h0 * hr, FieldVector::along_z(hr));
    vec![
        (single(0.0), 0.5),
        (single(0.0), 10.0),
        (single(0.5), 10.0),
        (single(1.5), 10.0),
        (coupled_model(0.0, 0.0, 0.0, 0.0), 10.0),
        (coupled_model(2.0 * hr, 0.0, 0.0, 0.0), 10.0),
    ]
}

pub fn rounding_stable_under_refinement() -> Check {
    for (model, t) in refinement_points() {
        let coarse = simulate_ramp(&model, &RampProtocol::new(t, 500).unwrap()).map_err(|e| e.to_string())?;
        let fine = simulate_ramp(&model, &RampProtocol::new(t, 2000).unwrap()).map_err(|e| e.to_string())?;
        ensure(coarse.chern_rounded == fine.chern_rounded, || {
            format!("h0 = {}, t = {t}: {} vs {}", model.h0(), coarse.chern, fine.chern)
        })?;
    }
    Ok(())
}

// phases

/// Smallest ||h_z| − Hr| over the closed-form points: distance of a (h0, g)
/// point from the nearest phase boundary along the field axis.
pub fn boundary_distance(model: &Model) -> f64 {
    closed_form_points(model)
        .unwrap_or_default()
        .iter()
        .map(|p| (p.h_z.abs() - model.field().magnitude).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Scanned locations against the closed form: returns the worst deviation.
pub fn oracle_deviation(h0: f64, g: f64) -> Result<f64, String> {
    let model = coupled_model(h0, g, 0.0, 0.0);
    let range = default_scan_range(&model).map_err(|e| e.to_string())?;
    let scanned = scan_weyl_points(&model, range).map_err(|e| e.to_string())?;
    let analytic = weyl_points_g(h0, g);
    if scanned.len() != analytic.len() {
        return Err(format!("scanned {} points, expected {}", scanned.len(), analytic.len()));
    }
    let mut worst: f64 = 0.0;
    for a in &analytic {
        let s = scanned
            .iter()
            .find(|s| s.gap_sector == a.gap_sector)
            .ok_or_else(|| format!("no scanned point for sectors {:?}", a.gap_sector))?;
        if s.charge != a.charge {
            return Err(format!("charge {} at sectors {:?}", s.charge, a.gap_sector));
        }
        worst = worst.max((s.h_z - a.h_z).abs());
    }
    let total = |v: &[_]| -> i32 { v.iter().map(|p: &qutrit_topology::phases::WeylPoint| p.charge).sum() };
    if total(&scanned) != total(&analytic) {
        return Err("total charge differs".into());
    }
    Ok(worst)
}

pub fn oracle_agreement(seed: u64) -> Check {
    let mut rng = rng(seed);
    let (h0, g) = (rng.gen_range(0.0..2.0) * hr(), rng.gen_range(0.0..2.0) * hr());
    let d = oracle_deviation(h0, g)?;
    ensure(d <= 1e-6, || format!("location deviation {d:e} at h0={h0}, g={g}"))
}

/// Charge strictly inside the field sphere, straight from the scan.
fn enclosed_on_ray(h0: f64, g: f64) -> Result<i32, String> {
    let model = coupled_model(h0, g, 0.0, 0.0);
    let range = default_scan_range(&model).map_err(|e| e.to_string())?;
    Ok(scan_weyl_points(&model, range)
        .map_err(|e| e.to_string())?
        .iter()
        .filter(|p| p.h_z.abs() < hr())
        .map(|p| p.charge)
        .sum())
}

/// Along h0 at fixed g in (0, Hr) the charge drops 4 → 3 → 2. The middle
/// window is only about g²/Hr wide, so jumps seen on the coarse grid are
/// bisected until a unit step shows up.
pub fn monotone_boundary(seed: u64) -> Check {
    let mut rng = rng(seed);
    let g = rng.gen_range(0.01..0.99) * hr();
    let h0s = linspace(0.0, 2.0 * hr(), 81);
    let mut samples: Vec<(f64, i32)> = Vec::new();
    for &h0 in &h0s {
        samples.push((h0, enclosed_on_ray(h0, g)?));
    }
    let mut k = 0;
    while k + 1 < samples.len() {
        let ((a, ca), (b, cb)) = (samples[k], samples[k + 1]);
        if (ca - cb).abs() > 1 && b - a > 1e-9 * hr() {
            let mid = 0.5 * (a + b);
            samples.insert(k + 1, (mid, enclosed_on_ray(mid, g)?));
        } else {
            k += 1;
        }
    }
    let mut steps: Vec<i32> = Vec::new();
    for (_, c) in samples {
        if steps.last() != Some(&c) {
            steps.push(c);
        }
    }
    ensure(steps == [4, 3, 2], || format!("g = {:.4}Hr: sequence {steps:?}", g / hr()))
}

pub fn charge_conserved(seed: u64) -> Check {
    let mut rng = rng(seed);
    let model = random_model(&mut rng);
    let model = model.with_field(FieldVector::along_z(hr()));
    let range = default_scan_range(&model).map_err(|e| e.to_string())?;
    let total: i32 = scan_weyl_points(&model, range)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|p| p.charge)
        .sum();
    // The ground label runs from m_min to m_max along the axis, reversed
    // when the field enters with a plus sign.
    let span = if model.dim() == 3 { 2 } else { 4 };
    let expected = -span * model.convention().field_sign() as i32;
    ensure(total == expected, || format!("total charge {total} for {model:?}"))
}

/// Dynamical against analytic on a 9×9 (h0, g) grid over [0, 2Hr]²,
/// skipping cells within 2% of Hr from a boundary. Returns (compared, mismatches).
pub fn method_agreement() -> Result<(usize, Vec<String>), String> {
    let hr = hr();
    let grid = linspace(0.0, 2.0 * hr, 9);
    let fixed = CoupledParams::decoupled(0.0, FieldVector::along_z(hr));
    let protocol = RampProtocol::with_t_ramp(10.0).unwrap();
    let analytic = phase_diagram(Param::H0, Param::G, &grid, &grid, &fixed, Method::Analytic, None)
        .map_err(|e| e.to_string())?;
    let dynamical = phase_diagram(Param::H0, Param::G, &grid, &grid, &fixed, Method::Dynamical, Some(&protocol))
        .map_err(|e| e.to_string())?;
    let (mut compared, mut mismatches) = (0, Vec::new());
    for (iy, &g) in grid.iter().enumerate() {
        for (ix, &h0) in grid.iter().enumerate() {
            if boundary_distance(&coupled_model(h0, g, 0.0, 0.0)) < 0.02 * hr {
                continue;
            }
            compared += 1;
            let (a, d) = (analytic.chern_grid[iy][ix], dynamical.chern_grid[iy][ix]);
            if a != d {
                mismatches.push(format!("h0={:.3}Hr g={:.3}Hr analytic={a} dynamical={d}", h0 / hr, g / hr));
            }
        }
    }
    Ok((compared, mismatches))
}

pub fn methods_agree() -> Check {
    let (compared, mismatches) = method_agreement()?;
    ensure(compared > 0 && mismatches.is_empty(), || mismatches.join("; "))
}

// cli

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(args.iter().copied(), &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err))
}

/// Two identical invocations write byte-identical files, and replaying the
/// saved config writes them again.
pub fn cli_deterministic_and_replayable() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).display().to_string();
    let runs: [(&str, Vec<&str>); 3] = [
        ("trace", vec!["single-ramp", "--h0", "2", "--hr", "10", "--t-ramp", "0.5", "--samples", "400"]),
        ("diagram", vec!["phase-diagram", "--x", "h0", "--y", "j_z", "--x-max", "20", "--y-max", "20", "--steps", "5"]),
        ("weyl", vec!["weyl", "--h0", "3", "--g", "4", "--hr", "10"]),
    ];
    for (name, args) in runs {
        for format in ["csv", "json"] {
            let (first, second, replay) = (path(&format!("{name}1.{format}")), path(&format!("{name}2.{format}")), path(&format!("{name}.cfg")));
            let mut a = vec!["qutrit-topo"];
            a.extend(&args);
            a.extend(["--format", format, "--output", &first, "--save-config", &replay]);
            let (code, text) = run_cli(&a);
            ensure(code == 0, || format!("{name}: exit {code}: {text}"))?;
            let mut b = vec!["qutrit-topo"];
            b.extend(&args);
            b.extend(["--format", format, "--output", &second]);
            ensure(run_cli(&b).0 == 0, || format!("{name}: second run failed"))?;
            let read = |p: &str| std::fs::read(p).map_err(|e| e.to_string());
            let original = read(&first)?;
            ensure(original == read(&second)?, || format!("{name}.{format}: outputs differ"))?;
            std::fs::remove_file(&first).map_err(|e| e.to_string())?;
            let (code, text) = run_cli(&["qutrit-topo", "run-config", "--config", &replay]);
            ensure(code == 0, || format!("{name}: replay exit {code}: {text}"))?;
            ensure(original == read(&first)?, || format!("{name}.{format}: replay differs"))?;
        }
    }
    Ok(())
}

/// Typing 10 MHz is the same as building the model at 10·2π rad/µs.
pub fn cli_converts_once() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("t.csv").display().to_string();
    let (code, text) = run_cli(&[
        "qutrit-topo", "single-ramp", "--h0", "3", "--hr", "10", "--t-ramp", "0.5", "--samples", "300", "--output", &out,
    ]);
    ensure(code == 0, || text.clone())?;
    let model = Model::single(mhz_to_rad_per_us(3.0), FieldVector::along_z(mhz_to_rad_per_us(10.0)));
    let direct = simulate_ramp(&model, &RampProtocol::new(0.5, 300).unwrap()).map_err(|e| e.to_string())?;
    let written = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    ensure(written == direct.to_csv(), || "CLI trace differs from the library trace".into())?;
    ensure(text.trim() == direct.summary_line(), || format!("summary {text:?}"))
}

/// Builders agree with the explicit single-spin formula; kept here so the
/// suite also exercises the public point-wise builder.
pub fn single_spin_point_builder(seed: u64) -> Check {
    let mut rng = rng(seed);
    let h0 = rng.gen_range(-1.0..1.0) * hr();
    let f = FieldVector::new(hr(), rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU)).unwrap();
    let model = Model::single(h0, f);
    let d = model.hamiltonian().max_abs_diff(&single_spin_at(h0, f.cartesian(), SignConvention::RampStyle));
    let coupled_d = coupled_model(h0, 0.0, 0.0, 0.0).hamiltonian().max_abs_diff(&coupled(&CoupledParams::decoupled(h0, FieldVector::along_z(hr()))));
    ensure(d == 0.0 && coupled_d == 0.0, || "model and builder disagree".into())
}

pub struct Invariant {
    pub name: &'static str,
    pub seeded: Option<fn(u64) -> Check>,
    pub fixed: Option<fn() -> Check>,
}

const fn seeded(name: &'static str, f: fn(u64) -> Check) -> Invariant {
    Invariant { name, seeded: Some(f), fixed: None }
}

const fn fixed(name: &'static str, f: fn() -> Check) -> Invariant {
    Invariant { name, seeded: None, fixed: Some(f) }
}

/// Every invariant, in module order.
pub const INVARIANTS: &[Invariant] = &[
    seeded("numerics: eigen residual", eig_residual),
    seeded("numerics: propagation unitary", propagation_unitary),
    seeded("numerics: eigenstate phase", eigenstate_phase),
    seeded("numerics: trapezoid second order", trapezoid_second_order),
    fixed("spin_algebra: operator identities", spin_operator_identities),
    seeded("spin_algebra: embed spectra", embed_preserves_spectrum),
    seeded("spin_algebra: total Sz commutes on axis", total_sz_commutes_on_axis),
    seeded("hamiltonians: hermitian builders", builders_hermitian),
    fixed("hamiltonians: aligned limit", aligned_limit),
    seeded("hamiltonians: U(1) identity", u1_identity),
    seeded("hamiltonians: point builder", single_spin_point_builder),
    fixed("berry: ramp error shrinks", ramp_error_shrinks_with_time),
    seeded("berry: radial inverse-square curvature", ground_curvature_radial),
    seeded("berry: band sum rule", curvature_sum_rule),
    fixed("berry: rounding stable under refinement", rounding_stable_under_refinement),
    seeded("berry: azimuth independence", ramp_phi_independent),
    seeded("phases: oracle agreement", oracle_agreement),
    fixed("phases: method agreement", methods_agree),
    seeded("phases: monotone boundary", monotone_boundary),
    seeded("phases: charge conservation", charge_conserved),
    fixed("cli: deterministic and replayable", cli_deterministic_and_replayable),
    fixed("cli: MHz converted once", cli_converts_once),
];
