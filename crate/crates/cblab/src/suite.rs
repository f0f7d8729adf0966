//! Bundled check suites behind `cblab suite`: the canonical convergence
//! sweeps with their slope windows, and the symmetry/gradient property
//! batteries.
//!
//! Every battery draws from a fixed-seed generator, so suite output is
//! reproducible run to run and across thread counts.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::convergence::{
    run_experiment, to_csv, ConvergenceReport, ExperimentConfig, SlopeFit, Symmetrization,
};
use crate::energy::{atomistic_energy, ModelTag};
use crate::fields::{
    base_shift, builtin_field, generic_strain, AtomisticDeformation, ContinuumField, PeriodicMap,
    TrigMap, TrigTerm, Waveform,
};
use crate::lattice::{
    range_from_cutoff, InteractionRange, MultiIndex, PeriodicCell, SymmetryOp,
};
use crate::potentials::{
    builtin_potential, check_derivative_symmetry, gradient_fd_defect, symmetrize_neg,
    symmetrize_point, SitePotential,
};
use crate::{Matrix, Result, Vector};

const SUITE_SEED: u64 = 20260809;

/// One named pass/fail line of a suite.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} - {}", self.name, self.detail)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SuiteKind {
    Rates,
    Symmetry,
    All,
}

/// Runs a suite, writing one CSV per executed sweep into `out_dir` when
/// given. Returns the outcome list; the caller decides the exit status.
pub fn run_suite(kind: SuiteKind, out_dir: Option<&Path>) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = Vec::new();
    match kind {
        SuiteKind::Rates => outcomes.extend(run_rates(out_dir)?),
        SuiteKind::Symmetry => outcomes.extend(run_symmetry()),
        SuiteKind::All => {
            outcomes.extend(run_rates(out_dir)?);
            outcomes.extend(run_symmetry());
        }
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------------
// Rate sweeps
// ---------------------------------------------------------------------

/// A canonical sweep with its expected slope window and an optional
/// fallback field tried when the primary misses the window.
pub struct RateCheck {
    pub name: &'static str,
    pub config: ExperimentConfig,
    pub window: (f64, f64),
    pub fallback_field: Option<&'static str>,
}

/// The canonical rate sweeps: second order for the Bravais model, first
/// order for the classical 2-lattice model, second order for the centroid
/// connection (pair and many-body) and for the shift-gradient density,
/// plus the centroid/classical cross-check.
pub fn rate_checks() -> Vec<RateCheck> {
    let mut checks = Vec::new();
    for dim in [1usize, 2] {
        checks.push(RateCheck {
            name: if dim == 1 { "bravais_d1" } else { "bravais_d2" },
            config: ExperimentConfig::canonical(ModelTag::CbBravais, dim),
            window: (1.8, 2.2),
            fallback_field: None,
        });
        checks.push(RateCheck {
            name: if dim == 1 {
                "classical_2lattice_d1"
            } else {
                "classical_2lattice_d2"
            },
            config: ExperimentConfig::canonical(ModelTag::CbClassical, dim),
            window: (0.8, 1.2),
            fallback_field: Some("trig_shift_only"),
        });
        checks.push(RateCheck {
            name: if dim == 1 {
                "centroid_pair_d1"
            } else {
                "centroid_pair_d2"
            },
            config: ExperimentConfig::canonical(ModelTag::CbCentroid, dim),
            window: (1.8, 2.2),
            fallback_field: None,
        });
        let mut eam = ExperimentConfig::canonical(ModelTag::CbCentroid, dim);
        eam.potential = "eam_toy_single".into();
        checks.push(RateCheck {
            name: if dim == 1 {
                "centroid_eam_d1"
            } else {
                "centroid_eam_d2"
            },
            config: eam,
            window: (1.8, 2.2),
            fallback_field: None,
        });
        checks.push(RateCheck {
            name: if dim == 1 { "weps_d1" } else { "weps_d2" },
            config: ExperimentConfig::canonical(ModelTag::WEps, dim),
            window: (1.8, 2.2),
            fallback_field: None,
        });
        // Same neg-symmetrized potential as the centroid sweep, but under
        // the classical connection: the shift-coupled first-order term
        // comes back.
        let mut cross = ExperimentConfig::canonical(ModelTag::CbClassical, dim);
        cross.potential = "morse_single".into();
        cross.symmetrize = Symmetrization::Neg;
        checks.push(RateCheck {
            name: if dim == 1 {
                "cross_classical_d1"
            } else {
                "cross_classical_d2"
            },
            config: cross,
            window: (0.8, 1.2),
            fallback_field: None,
        });
    }
    checks
}

fn fitted_slope(report: &ConvergenceReport) -> Option<f64> {
    match report.fit {
        SlopeFit::Fitted { slope, .. } => Some(slope),
        SlopeFit::Exact => None,
    }
}

/// err(2N) < err(N) over consecutive retained rows.
fn monotone_trend(report: &ConvergenceReport) -> bool {
    report
        .rows
        .windows(2)
        .filter(|w| w[0].retained && w[1].retained)
        .all(|w| w[1].err < w[0].err)
}

fn emit_csv_to(dir: Option<&Path>, name: &str, report: &ConvergenceReport) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{name}.csv")), to_csv(report))?;
    }
    Ok(())
}

fn judge_sweep(report: &ConvergenceReport, window: (f64, f64)) -> (bool, String) {
    match fitted_slope(report) {
        Some(slope) => {
            let in_window = slope >= window.0 && slope <= window.1;
            let monotone = monotone_trend(report);
            (
                in_window && monotone,
                format!(
                    "slope {slope:.3} vs [{}, {}], monotone: {}",
                    window.0, window.1, monotone
                ),
            )
        }
        None => (false, "unexpected exact fit".into()),
    }
}

/// Criterion battery: affine deformation with a constant shift is
/// reproduced exactly by every model.
pub fn homogeneous_exactness() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for model in [
        ModelTag::CbBravais,
        ModelTag::CbClassical,
        ModelTag::CbCentroid,
        ModelTag::WEps,
    ] {
        let mut cfg = ExperimentConfig::canonical(model, 1);
        cfg.field = "affine".into();
        cfg.n_list = vec![4, 16];
        let field = crate::convergence::build_field(&cfg)?;
        let site = crate::convergence::build_site_potential(&cfg, &field)?;
        for &n in &cfg.n_list {
            let report = crate::energy::compare_at(&field, &site, model, n, &cfg.quad)?;
            worst = worst.max(report.err);
        }
        detail.push_str(&format!("{model} "));
    }
    Ok(CheckOutcome::new(
        "homogeneous_exactness",
        worst <= 1e-11,
        format!("max |N^-d E^a - E^c| = {worst:.3e} over {detail}(N = 4, 16)"),
    ))
}

/// Runs all canonical sweeps, judging slope windows and monotone error
/// decay; sweeps with a fallback field pass if either field lands in the
/// window.
pub fn run_rates(out_dir: Option<&Path>) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = vec![homogeneous_exactness()?];
    for check in rate_checks() {
        let report = run_experiment(&check.config)?;
        emit_csv_to(out_dir, check.name, &report)?;
        let (passed, detail) = judge_sweep(&report, check.window);
        if passed {
            outcomes.push(CheckOutcome::new(check.name, true, detail));
            continue;
        }
        let Some(fallback_field) = check.fallback_field else {
            outcomes.push(CheckOutcome::new(check.name, false, detail));
            continue;
        };
        let mut fallback_cfg = check.config.clone();
        fallback_cfg.field = fallback_field.into();
        let fallback_report = run_experiment(&fallback_cfg)?;
        emit_csv_to(out_dir, &format!("{}_fallback", check.name), &fallback_report)?;
        let (fb_passed, fb_detail) = judge_sweep(&fallback_report, check.window);
        outcomes.push(CheckOutcome::new(
            check.name,
            fb_passed,
            format!("{detail}; fallback {fallback_field}: {fb_detail}"),
        ));
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------------
// Symmetry and gradient batteries
// ---------------------------------------------------------------------

fn random_strain(rng: &mut StdRng, dim: usize) -> Matrix {
    let mut m = generic_strain(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] += rng.gen_range(-0.05..0.05);
        }
    }
    m
}

fn random_vector(rng: &mut StdRng, dim: usize, scale: f64) -> Vector {
    let mut v = Vector::zeros();
    for i in 0..dim {
        v[i] = rng.gen_range(-scale..scale);
    }
    v
}

fn random_trig(rng: &mut StdRng, dim: usize, base: Vector) -> TrigMap {
    let terms = (0..dim)
        .map(|_| TrigTerm {
            wave: if rng.gen_bool(0.5) {
                Waveform::Sin
            } else {
                Waveform::Cos
            },
            // Gradients scale with 2 pi * amp; keep every sampled bond
            // above the potentials' guard radius.
            amp: rng.gen_range(0.01..0.035),
            coord: rng.gen_range(0..dim),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    TrigMap::new(dim, base, terms).expect("valid trig map")
}

fn random_field(rng: &mut StdRng, dim: usize) -> ContinuumField {
    ContinuumField::new(
        dim,
        generic_strain(dim),
        Arc::new(random_trig(rng, dim, Vector::zeros())),
        Arc::new(random_trig(rng, dim, base_shift(dim))),
    )
    .expect("valid field")
}

/// Reference bond tuple of a range plus per-component noise.
fn random_bonds(
    rng: &mut StdRng,
    range: &InteractionRange,
    strain: &Matrix,
    shift: &Vector,
    noise: f64,
) -> Vec<Vector> {
    range
        .iter()
        .map(|mi| {
            strain * mi.rho_vector()
                + (mi.beta() as f64 - mi.alpha() as f64) * shift
                + random_vector(rng, range.dim(), noise)
        })
        .collect()
}

fn cutoff_range(dim: usize, r_cut: f64) -> InteractionRange {
    range_from_cutoff(
        dim,
        &generic_strain(dim),
        &Vector::zeros(),
        &base_shift(dim),
        r_cut,
    )
    .expect("builtin reference state is regular")
}

/// Entries that come lexicographically before their image, i.e. one
/// representative per orbit of `op`.
fn one_sided(range: &InteractionRange, op: SymmetryOp) -> InteractionRange {
    let entries: Vec<MultiIndex> = range
        .iter()
        .filter(|mi| **mi < op.apply(mi))
        .copied()
        .collect();
    InteractionRange::new(range.dim(), entries).expect("subset of a valid range")
}

/// Finite-difference reflection identity of homogeneous states:
/// `D_rhohat y = -D_{neg rhohat} y` for every entry and site.
pub fn reflection_identity_battery() -> CheckOutcome {
    let mut rng = StdRng::seed_from_u64(SUITE_SEED);
    let mut worst = 0.0f64;
    for rep in 0..10 {
        let dim = 1 + rep % 2;
        let strain = random_strain(&mut rng, dim);
        let p0 = random_vector(&mut rng, dim, 0.3);
        let p1 = random_vector(&mut rng, dim, 0.3);
        let range = match range_from_cutoff(dim, &strain, &p0, &p1, 2.2) {
            Ok(r) => r,
            Err(e) => {
                return CheckOutcome::new(
                    "reflection_identity",
                    false,
                    format!("range construction failed: {e}"),
                )
            }
        };
        let cell = PeriodicCell::new(4, dim).expect("valid cell");
        let def = AtomisticDeformation::homogeneous(cell, strain, p0, p1);
        for xi in cell.sites() {
            for mi in range.iter() {
                let defect = (def.fd(&xi, mi) + def.fd(&xi, &mi.neg())).norm();
                worst = worst.max(defect);
            }
        }
    }
    CheckOutcome::new(
        "reflection_identity",
        worst <= 1e-13,
        format!("max |D_rho y + D_(neg rho) y| = {worst:.3e} (tol 1e-13)"),
    )
}

/// Point-symmetry function identities of certified potentials at random
/// argument tuples.
pub fn point_symmetry_identity_battery() -> CheckOutcome {
    let mut rng = StdRng::seed_from_u64(SUITE_SEED ^ 1);
    let mut worst = 0.0f64;
    let mut checked = 0usize;

    for dim in [1usize, 2] {
        let strain = generic_strain(dim);
        let shift = base_shift(dim);
        let full = cutoff_range(dim, 2.2);

        // neg: a symmetrized one-sided single-species potential and the
        // naturally closed one.
        let single = builtin_potential("morse_single").expect("builtin");
        let halves = one_sided(&full, SymmetryOp::Neg);
        let symmetrized = symmetrize_neg(single.site(halves));
        let natural = single.site(full.clone());
        // sim: the species-symmetric two-species pair.
        let two = builtin_potential("morse_two_species").expect("builtin");
        let pair = two.site(full.clone());

        let cases: Vec<(&dyn SitePotential, SymmetryOp)> = vec![
            (&symmetrized, SymmetryOp::Neg),
            (&natural, SymmetryOp::Neg),
            (&pair, SymmetryOp::Sim),
        ];
        for (v, op) in cases {
            for _ in 0..34 {
                let g = random_bonds(&mut rng, v.range(), &strain, &shift, 0.08);
                let mut h = vec![Vector::zeros(); g.len()];
                for (i, mi) in v.range().iter().enumerate() {
                    let j = v.range().index_of(&op.apply(mi)).expect("closed range");
                    h[i] = -g[j];
                }
                match (v.value(&g), v.value(&h)) {
                    (Ok(a), Ok(b)) => {
                        worst = worst.max((a - b).abs());
                        checked += 1;
                    }
                    _ => {
                        return CheckOutcome::new(
                            "point_symmetry_identities",
                            false,
                            "potential evaluation failed on random tuple".into(),
                        )
                    }
                }
            }
        }
    }
    CheckOutcome::new(
        "point_symmetry_identities",
        worst <= 1e-12 && checked >= 200,
        format!("max |V(g) - V(op g)| = {worst:.3e} over {checked} tuples (tol 1e-12)"),
    )
}

/// Gradient antisymmetry `V_rhohat = -V_(op rhohat)` at directional
/// derivative arguments of random fields.
pub fn derivative_symmetry_battery() -> CheckOutcome {
    let mut rng = StdRng::seed_from_u64(SUITE_SEED ^ 2);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for rep in 0..50 {
        let dim = 1 + rep % 2;
        let field = random_field(&mut rng, dim);
        let x = {
            let mut v = Vector::zeros();
            for i in 0..dim {
                v[i] = rng.gen_range(0.0..1.0);
            }
            v
        };
        let full = cutoff_range(dim, 2.2);
        let single = builtin_potential("morse_single").expect("builtin");
        let eam = builtin_potential("eam_toy_single").expect("builtin");
        let two = builtin_potential("morse_two_species").expect("builtin");

        let neg_half = symmetrize_neg(single.site(one_sided(&full, SymmetryOp::Neg)));
        let cases: Vec<(Box<dyn SitePotential>, SymmetryOp)> = vec![
            (Box::new(neg_half), SymmetryOp::Neg),
            (eam.site(full.clone()), SymmetryOp::Neg),
            (two.site(full.clone()), SymmetryOp::Sim),
        ];
        for (v, op) in cases {
            debug_assert!(v.certificate().has(op));
            match check_derivative_symmetry(&v, &field, &x, op) {
                Ok(defect) => {
                    worst = worst.max(defect);
                    count += 1;
                }
                Err(e) => {
                    return CheckOutcome::new(
                        "derivative_symmetry",
                        false,
                        format!("evaluation failed: {e}"),
                    )
                }
            }
        }
    }
    CheckOutcome::new(
        "derivative_symmetry",
        worst <= 1e-10,
        format!("max |V_rho + V_(op rho)| = {worst:.3e} over {count} arguments (tol 1e-10)"),
    )
}

fn one_sided_energy_case(
    rng: &mut StdRng,
    dim: usize,
    point_case: bool,
) -> Result<(f64, f64)> {
    // Ranges whose bond orbits are balanced under the relevant reversal,
    // so symmetrization must preserve the total lattice energy.
    let entries: Vec<MultiIndex> = if point_case {
        let mut es = vec![MultiIndex::new(dim, &[1, 0, 0][..dim], 0, 0)?];
        if dim == 2 {
            es.push(MultiIndex::new(dim, &[0, 1], 0, 0)?);
        }
        es
    } else {
        let mut es = vec![
            MultiIndex::new(dim, &[1, 0, 0][..dim], 0, 1)?,
            MultiIndex::new(dim, &[1, 0, 0][..dim], 0, 0)?,
            MultiIndex::new(dim, &[1, 0, 0][..dim], 1, 1)?,
        ];
        if dim == 2 {
            es.push(MultiIndex::new(dim, &[0, 1], 0, 1)?);
        }
        es
    };
    let range = InteractionRange::new(dim, entries)?;
    let single = builtin_potential("morse_single").expect("builtin");
    let one_sided_site = single.site(range.clone());
    let symmetrized: Box<dyn SitePotential> = if point_case {
        Box::new(symmetrize_point(single.site(range))?)
    } else {
        Box::new(symmetrize_neg(single.site(range)))
    };

    let cell = PeriodicCell::new(4, dim)?;
    let strain = random_strain(rng, dim);
    let u0: Vec<Vector> = (0..cell.num_sites())
        .map(|_| random_vector(rng, dim, 0.05))
        .collect();
    let u1: Vec<Vector> = (0..cell.num_sites())
        .map(|_| random_vector(rng, dim, 0.05))
        .collect();
    let def = AtomisticDeformation::from_parts(cell, strain, u0, u1)?;

    let direct = atomistic_energy(&def, &one_sided_site)?;
    let tilde = atomistic_energy(&def, &*symmetrized)?;
    Ok((direct, tilde))
}

/// Total-energy invariance of the two symmetrization constructions on
/// random periodic deformations.
pub fn symmetrization_energy_battery() -> CheckOutcome {
    let mut rng = StdRng::seed_from_u64(SUITE_SEED ^ 3);
    let mut worst = 0.0f64;
    for rep in 0..20 {
        let dim = 1 + rep % 2;
        for point_case in [false, true] {
            match one_sided_energy_case(&mut rng, dim, point_case) {
                Ok((direct, tilde)) => {
                    let rel = (direct - tilde).abs() / direct.abs().max(1e-12);
                    worst = worst.max(rel);
                }
                Err(e) => {
                    return CheckOutcome::new(
                        "symmetrization_energy_invariance",
                        false,
                        format!("evaluation failed: {e}"),
                    )
                }
            }
        }
    }
    CheckOutcome::new(
        "symmetrization_energy_invariance",
        worst <= 1e-11,
        format!("max relative energy defect = {worst:.3e} (tol 1e-11)"),
    )
}

/// Analytic site-potential gradients against central finite differences.
pub fn potential_gradient_battery() -> CheckOutcome {
    let mut rng = StdRng::seed_from_u64(SUITE_SEED ^ 4);
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for dim in [1usize, 2] {
        let strain = generic_strain(dim);
        let shift = base_shift(dim);
        for name in [
            "morse_single",
            "morse_two_species",
            "lj_smooth_single",
            "eam_toy_single",
        ] {
            let pot = builtin_potential(name).expect("builtin");
            let site = pot.site(cutoff_range(dim, pot.r_cut()));
            for _ in 0..7 {
                let g = random_bonds(&mut rng, site.range(), &strain, &shift, 0.05);
                match gradient_fd_defect(&site, &g, 1e-6) {
                    Ok(rel) => {
                        worst = worst.max(rel);
                        count += 1;
                    }
                    Err(e) => {
                        return CheckOutcome::new(
                            "potential_gradients",
                            false,
                            format!("evaluation failed: {e}"),
                        )
                    }
                }
            }
        }
    }
    CheckOutcome::new(
        "potential_gradients",
        worst <= 1e-6,
        format!("max relative gradient defect = {worst:.3e} over {count} tuples (tol 1e-6)"),
    )
}

fn map_fd_defect(map: &dyn PeriodicMap, dim: usize, pts: &[Vector], h: f64) -> f64 {
    let mut abs_worst = 0.0f64;
    let mut scale = 0.0f64;
    for x in pts {
        let jac = map.jacobian(x);
        let hess = map.hessian(x);
        let third = map.third(x);
        for j in 0..dim {
            let mut xp = *x;
            let mut xm = *x;
            xp[j] += h;
            xm[j] -= h;
            // value -> jacobian column j
            let dv = (map.value(&xp) - map.value(&xm)) / (2.0 * h);
            // jacobian -> hessian slice (., ., j)
            let dj = (map.jacobian(&xp) - map.jacobian(&xm)) / (2.0 * h);
            // hessian -> third slice (., ., ., j)
            let hp = map.hessian(&xp);
            let hm = map.hessian(&xm);
            for i in 0..dim {
                abs_worst = abs_worst.max((dv[i] - jac[(i, j)]).abs());
                scale = scale.max(jac[(i, j)].abs());
                for k in 0..dim {
                    abs_worst = abs_worst.max((dj[(i, k)] - hess[i][(k, j)]).abs());
                    scale = scale.max(hess[i][(k, j)].abs());
                    for l in 0..dim {
                        let dh = (hp[i][(k, l)] - hm[i][(k, l)]) / (2.0 * h);
                        abs_worst = abs_worst.max((dh - third[i][k][(l, j)]).abs());
                        scale = scale.max(third[i][k][(l, j)].abs());
                    }
                }
            }
        }
    }
    abs_worst / scale.max(1.0)
}

/// Analytic field derivatives (all orders carried by the field library)
/// against central finite differences at random points.
pub fn field_derivative_battery() -> CheckOutcome {
    let mut rng = StdRng::seed_from_u64(SUITE_SEED ^ 5);
    let mut worst = 0.0f64;
    for dim in [1usize, 2] {
        let pts: Vec<Vector> = (0..50)
            .map(|_| {
                let mut v = Vector::zeros();
                for i in 0..dim {
                    v[i] = rng.gen_range(0.0..1.0);
                }
                v
            })
            .collect();
        for name in ["affine", "trig_generic", "trig_shift_only"] {
            let field = builtin_field(name, dim, 0.05).expect("builtin");
            worst = worst.max(map_fd_defect(field.displacement(), dim, &pts, 1e-5));
            worst = worst.max(map_fd_defect(field.shift_map(), dim, &pts, 1e-5));
        }
    }
    CheckOutcome::new(
        "field_derivatives",
        worst <= 1e-6,
        format!("max relative derivative defect = {worst:.3e} (tol 1e-6)"),
    )
}

/// The symmetry and oracle batteries (no file output).
pub fn run_symmetry() -> Vec<CheckOutcome> {
    vec![
        reflection_identity_battery(),
        point_symmetry_identity_battery(),
        derivative_symmetry_battery(),
        symmetrization_energy_battery(),
        potential_gradient_battery(),
        field_derivative_battery(),
    ]
}
