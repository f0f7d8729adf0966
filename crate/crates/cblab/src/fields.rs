//! Continuum kinematic fields and their connection to atomistic
//! deformations.
//!
//! A continuum state is a deformation field `Y(x) = B x + U(x)` plus a
//! shift field `P(x)`, with `U` and `P` smooth and 1-periodic. Scaling
//! to atomic units gives `Y^N(x) = N Y(x/N)`, `P^N(x) = P(x/N)`; sampling
//! at lattice sites under a connection rule produces an N-periodic
//! atomistic deformation.

use std::sync::Arc;

use crate::lattice::{LatVec, MultiIndex, PeriodicCell};
use crate::{Error, Matrix, Result, Vector};

/// Second derivative of a vector map: entry `[i]` is the Hessian of
/// component `i`, indexed `(j, k)`.
pub type SecondDeriv = [Matrix; 3];

/// Third derivative of a vector map: entry `[i][j]` collects
/// `d^3 f_i / dx_j dx_k dx_l` over `(k, l)`.
pub type ThirdDeriv = [[Matrix; 3]; 3];

/// A smooth 1-periodic map from the unit cell to displacement space,
/// with analytic derivatives.
pub trait PeriodicMap: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> Vector;
    /// Jacobian, `(i, j) = d f_i / dx_j`.
    fn jacobian(&self, x: &Vector) -> Matrix;
    fn hessian(&self, x: &Vector) -> SecondDeriv;
    fn third(&self, x: &Vector) -> ThirdDeriv;
    /// Cell average, used as the reference value of the map.
    fn mean(&self) -> Vector;
}

/// The identically zero map.
#[derive(Clone, Copy, Debug)]
pub struct ZeroMap {
    pub dim: usize,
}

impl PeriodicMap for ZeroMap {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Vector) -> Vector {
        Vector::zeros()
    }
    fn jacobian(&self, _x: &Vector) -> Matrix {
        Matrix::zeros()
    }
    fn hessian(&self, _x: &Vector) -> SecondDeriv {
        [Matrix::zeros(); 3]
    }
    fn third(&self, _x: &Vector) -> ThirdDeriv {
        [[Matrix::zeros(); 3]; 3]
    }
    fn mean(&self) -> Vector {
        Vector::zeros()
    }
}

/// A constant map.
#[derive(Clone, Copy, Debug)]
pub struct ConstMap {
    pub dim: usize,
    pub value: Vector,
}

impl PeriodicMap for ConstMap {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Vector) -> Vector {
        self.value
    }
    fn jacobian(&self, _x: &Vector) -> Matrix {
        Matrix::zeros()
    }
    fn hessian(&self, _x: &Vector) -> SecondDeriv {
        [Matrix::zeros(); 3]
    }
    fn third(&self, _x: &Vector) -> ThirdDeriv {
        [[Matrix::zeros(); 3]; 3]
    }
    fn mean(&self) -> Vector {
        self.value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Waveform {
    Sin,
    Cos,
}

/// One sinusoidal component: `amp * wave(2 pi x_coord + phase)`.
#[derive(Clone, Copy, Debug)]
pub struct TrigTerm {
    pub wave: Waveform,
    pub amp: f64,
    pub coord: usize,
    pub phase: f64,
}

impl TrigTerm {
    /// k-th derivative with respect to `x_coord`, evaluated at `x`.
    fn deriv(&self, x: &Vector, k: u32) -> f64 {
        let arg = 2.0 * std::f64::consts::PI * x[self.coord] + self.phase;
        let scale = self.amp * (2.0 * std::f64::consts::PI).powi(k as i32);
        // Differentiation cycles sin -> cos -> -sin -> -cos.
        let shift = match self.wave {
            Waveform::Sin => 0,
            Waveform::Cos => 1,
        };
        match (shift + k as usize) % 4 {
            0 => scale * arg.sin(),
            1 => scale * arg.cos(),
            2 => -scale * arg.sin(),
            _ => -scale * arg.cos(),
        }
    }
}

/// A vector map whose component `i` is `base_i` plus one sinusoidal term.
#[derive(Clone, Debug)]
pub struct TrigMap {
    dim: usize,
    base: Vector,
    terms: Vec<TrigTerm>,
}

impl TrigMap {
    /// One term per component; `terms.len()` must equal `dim` and each
    /// term's coordinate must be an active axis.
    pub fn new(dim: usize, base: Vector, terms: Vec<TrigTerm>) -> Result<Self> {
        if terms.len() != dim {
            return Err(Error::DimensionMismatch {
                entry: terms.len(),
                range: dim,
            });
        }
        if let Some(t) = terms.iter().find(|t| t.coord >= dim) {
            return Err(Error::BadDimension(t.coord));
        }
        Ok(Self { dim, base, terms })
    }
}

impl PeriodicMap for TrigMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> Vector {
        let mut v = self.base;
        for (i, t) in self.terms.iter().enumerate() {
            v[i] += t.deriv(x, 0);
        }
        v
    }

    fn jacobian(&self, x: &Vector) -> Matrix {
        let mut m = Matrix::zeros();
        for (i, t) in self.terms.iter().enumerate() {
            m[(i, t.coord)] = t.deriv(x, 1);
        }
        m
    }

    fn hessian(&self, x: &Vector) -> SecondDeriv {
        let mut h = [Matrix::zeros(); 3];
        for (i, t) in self.terms.iter().enumerate() {
            h[i][(t.coord, t.coord)] = t.deriv(x, 2);
        }
        h
    }

    fn third(&self, x: &Vector) -> ThirdDeriv {
        let mut d3 = [[Matrix::zeros(); 3]; 3];
        for (i, t) in self.terms.iter().enumerate() {
            d3[i][t.coord][(t.coord, t.coord)] = t.deriv(x, 3);
        }
        d3
    }

    fn mean(&self) -> Vector {
        self.base
    }
}

/// Continuum state `(Y, P)` with `Y(x) = B x + U(x)`.
#[derive(Clone)]
pub struct ContinuumField {
    dim: usize,
    macro_strain: Matrix,
    displacement: Arc<dyn PeriodicMap>,
    shift: Arc<dyn PeriodicMap>,
}

impl ContinuumField {
    pub fn new(
        dim: usize,
        macro_strain: Matrix,
        displacement: Arc<dyn PeriodicMap>,
        shift: Arc<dyn PeriodicMap>,
    ) -> Result<Self> {
        if !(1..=crate::MAX_DIM).contains(&dim) {
            return Err(Error::BadDimension(dim));
        }
        Ok(Self {
            dim,
            macro_strain,
            displacement,
            shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn macro_strain(&self) -> &Matrix {
        &self.macro_strain
    }

    /// Reference shift: the cell average of `P`.
    pub fn reference_shift(&self) -> Vector {
        self.shift.mean()
    }

    pub fn y(&self, x: &Vector) -> Vector {
        self.macro_strain * x + self.displacement.value(x)
    }

    pub fn grad_y(&self, x: &Vector) -> Matrix {
        self.macro_strain + self.displacement.jacobian(x)
    }

    pub fn hess_y(&self, x: &Vector) -> SecondDeriv {
        self.displacement.hessian(x)
    }

    pub fn third_y(&self, x: &Vector) -> ThirdDeriv {
        self.displacement.third(x)
    }

    pub fn displacement(&self) -> &dyn PeriodicMap {
        self.displacement.as_ref()
    }

    pub fn shift_map(&self) -> &dyn PeriodicMap {
        self.shift.as_ref()
    }

    pub fn displacement_arc(&self) -> Arc<dyn PeriodicMap> {
        Arc::clone(&self.displacement)
    }

    pub fn shift_arc(&self) -> Arc<dyn PeriodicMap> {
        Arc::clone(&self.shift)
    }

    pub fn p(&self, x: &Vector) -> Vector {
        self.shift.value(x)
    }

    pub fn grad_p(&self, x: &Vector) -> Matrix {
        self.shift.jacobian(x)
    }

    pub fn hess_p(&self, x: &Vector) -> SecondDeriv {
        self.shift.hessian(x)
    }

    /// 2-lattice directional derivative `grad Y(x) rho + (beta - alpha) P(x)`.
    pub fn dirder(&self, x: &Vector, mi: &MultiIndex) -> Vector {
        let sign = mi.beta() as f64 - mi.alpha() as f64;
        self.grad_y(x) * mi.rho_vector() + sign * self.p(x)
    }

    /// Shift-gradient directional derivative: `dirder` augmented by
    /// `(alpha + beta)/2 * eps * (grad P(x)) rho`.
    pub fn dirder_eps(&self, x: &Vector, mi: &MultiIndex, eps: f64) -> Vector {
        let weight = 0.5 * (mi.alpha() + mi.beta()) as f64;
        self.dirder(x, mi) + weight * eps * (self.grad_p(x) * mi.rho_vector())
    }

    /// Same deformation with the shift replaced by zero; used to treat a
    /// field as a Bravais (single-sublattice) deformation.
    pub fn without_shift(&self) -> ContinuumField {
        ContinuumField {
            dim: self.dim,
            macro_strain: self.macro_strain,
            displacement: Arc::clone(&self.displacement),
            shift: Arc::new(ZeroMap { dim: self.dim }),
        }
    }

    /// True when `P` is identically zero (sampled on a coarse grid).
    pub fn is_shift_free(&self) -> bool {
        unit_grid(self.dim, 5)
            .iter()
            .all(|x| self.p(x).norm() == 0.0 && self.grad_p(x).norm() == 0.0)
    }
}

/// Base shift used by the built-in fields.
pub fn base_shift(dim: usize) -> Vector {
    let full = [0.5, 0.25, 0.125];
    let mut v = Vector::zeros();
    for i in 0..dim {
        v[i] = full[i];
    }
    v
}

/// Mildly sheared generic macro strain used by the built-in fields; kept
/// away from the identity so that accidental lattice symmetries do not
/// cancel the error terms under study.
pub fn generic_strain(dim: usize) -> Matrix {
    match dim {
        1 => crate::lattice::pad_strain(1, &[&[1.03]]),
        2 => crate::lattice::pad_strain(2, &[&[1.02, 0.04], &[-0.03, 0.98]]),
        _ => crate::lattice::pad_strain(
            3,
            &[
                &[1.02, 0.04, -0.02],
                &[-0.03, 0.98, 0.03],
                &[0.02, -0.04, 1.01],
            ],
        ),
    }
}

fn trig_shift(dim: usize, amplitude: f64) -> Result<TrigMap> {
    // P_i(x) = base_i + a cos(2 pi x_{(i mod d)+1} + 2i), indices 1-based.
    let terms = (0..dim)
        .map(|i| TrigTerm {
            wave: Waveform::Cos,
            amp: amplitude,
            coord: (i + 1) % dim,
            phase: 2.0 * (i + 1) as f64,
        })
        .collect();
    TrigMap::new(dim, base_shift(dim), terms)
}

/// The built-in test fields: `affine`, `trig_generic`, `trig_shift_only`.
pub fn builtin_field(name: &str, dim: usize, amplitude: f64) -> Result<ContinuumField> {
    if !(1..=crate::MAX_DIM).contains(&dim) {
        return Err(Error::BadDimension(dim));
    }
    let strain = generic_strain(dim);
    match name {
        "affine" => ContinuumField::new(
            dim,
            strain,
            Arc::new(ZeroMap { dim }),
            Arc::new(ConstMap {
                dim,
                value: base_shift(dim),
            }),
        ),
        "trig_generic" => {
            // U_i(x) = a sin(2 pi x_i + i), indices 1-based.
            let terms = (0..dim)
                .map(|i| TrigTerm {
                    wave: Waveform::Sin,
                    amp: amplitude,
                    coord: i,
                    phase: (i + 1) as f64,
                })
                .collect();
            ContinuumField::new(
                dim,
                strain,
                Arc::new(TrigMap::new(dim, Vector::zeros(), terms)?),
                Arc::new(trig_shift(dim, amplitude)?),
            )
        }
        "trig_shift_only" => ContinuumField::new(
            dim,
            strain,
            Arc::new(ZeroMap { dim }),
            Arc::new(trig_shift(dim, amplitude)?),
        ),
        other => Err(Error::UnknownField(other.to_string())),
    }
}

/// A continuum state rescaled to atomic units: `Y^N(x) = N Y(x/N)`,
/// `P^N(x) = P(x/N)`.
#[derive(Clone)]
pub struct ScaledField {
    field: ContinuumField,
    n: usize,
}

impl ScaledField {
    pub fn new(field: ContinuumField, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("period N must be >= 2, got {n}")));
        }
        Ok(Self { field, n })
    }

    pub fn period(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &ContinuumField {
        &self.field
    }

    pub fn y_n(&self, x: &Vector) -> Vector {
        let n = self.n as f64;
        n * self.field.y(&(x / n))
    }

    pub fn p_n(&self, x: &Vector) -> Vector {
        self.field.p(&(x / self.n as f64))
    }

    pub fn grad_y_n(&self, x: &Vector) -> Matrix {
        self.field.grad_y(&(x / self.n as f64))
    }

    pub fn grad_p_n(&self, x: &Vector) -> Matrix {
        self.field.grad_p(&(x / self.n as f64)) / self.n as f64
    }

    pub fn hess_y_n(&self, x: &Vector) -> SecondDeriv {
        let h = self.field.hess_y(&(x / self.n as f64));
        let inv = 1.0 / self.n as f64;
        [h[0] * inv, h[1] * inv, h[2] * inv]
    }

    pub fn third_y_n(&self, x: &Vector) -> ThirdDeriv {
        let mut t = self.field.third_y(&(x / self.n as f64));
        let inv = 1.0 / (self.n * self.n) as f64;
        for ti in &mut t {
            for tj in ti.iter_mut() {
                *tj *= inv;
            }
        }
        t
    }

    /// Samples the field at lattice sites under a connection rule.
    pub fn sample(&self, rule: ConnectionRule) -> AtomisticDeformation {
        let dim = self.field.dim();
        let cell = PeriodicCell::new(self.n, dim).expect("validated dims");
        let strain = *self.field.macro_strain();
        let mut u0 = Vec::with_capacity(cell.num_sites());
        let mut u1 = Vec::with_capacity(cell.num_sites());
        for xi in cell.sites() {
            let xi_v = Vector::new(xi[0] as f64, xi[1] as f64, xi[2] as f64);
            let y = self.y_n(&xi_v);
            let p = self.p_n(&xi_v);
            let (y0, y1) = match rule {
                ConnectionRule::Classical => (y, y + p),
                ConnectionRule::Centroid => (y - 0.5 * p, y + 0.5 * p),
            };
            let affine = strain * xi_v;
            u0.push(y0 - affine);
            u1.push(y1 - affine);
        }
        AtomisticDeformation {
            cell,
            macro_strain: strain,
            u0,
            u1,
        }
    }
}

/// How continuum fields map to atom positions: `y_0 = Y^N` (classical)
/// or `Y^N` as the midpoint of the two atoms at a site (centroid).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConnectionRule {
    Classical,
    Centroid,
}

/// An N-periodic atomistic deformation, stored as a macro strain plus
/// periodic displacements of both sublattices.
#[derive(Clone)]
pub struct AtomisticDeformation {
    cell: PeriodicCell,
    macro_strain: Matrix,
    u0: Vec<Vector>,
    u1: Vec<Vector>,
}

impl AtomisticDeformation {
    pub fn from_parts(
        cell: PeriodicCell,
        macro_strain: Matrix,
        u0: Vec<Vector>,
        u1: Vec<Vector>,
    ) -> Result<Self> {
        if u0.len() != cell.num_sites() || u1.len() != cell.num_sites() {
            return Err(Error::Config(format!(
                "displacement arrays must have {} entries, got {} and {}",
                cell.num_sites(),
                u0.len(),
                u1.len()
            )));
        }
        Ok(Self {
            cell,
            macro_strain,
            u0,
            u1,
        })
    }

    /// The homogeneous state `y_alpha(xi) = F xi + p_alpha`.
    pub fn homogeneous(cell: PeriodicCell, strain: Matrix, p0: Vector, p1: Vector) -> Self {
        let sites = cell.num_sites();
        Self {
            cell,
            macro_strain: strain,
            u0: vec![p0; sites],
            u1: vec![p1; sites],
        }
    }

    pub fn cell(&self) -> &PeriodicCell {
        &self.cell
    }

    pub fn macro_strain(&self) -> &Matrix {
        &self.macro_strain
    }

    /// Deformed position `y_alpha(xi) = B xi + u_alpha(wrap(xi))`, valid
    /// for sites outside the periodic cell.
    pub fn position(&self, alpha: usize, xi: &LatVec) -> Vector {
        let xi_v = Vector::new(xi[0] as f64, xi[1] as f64, xi[2] as f64);
        self.macro_strain * xi_v + self.displacement(alpha, xi)
    }

    fn displacement(&self, alpha: usize, xi: &LatVec) -> Vector {
        let idx = self.cell.site_index(xi);
        match alpha {
            0 => self.u0[idx],
            _ => self.u1[idx],
        }
    }

    /// 2-lattice finite difference `y_beta(xi + rho) - y_alpha(xi)`.
    ///
    /// Computed as `B rho + u_beta(wrap(xi + rho)) - u_alpha(wrap(xi))`
    /// so the affine part never suffers wraparound error.
    pub fn fd(&self, xi: &LatVec, mi: &MultiIndex) -> Vector {
        let rho = mi.rho_padded();
        let shifted = [xi[0] + rho[0], xi[1] + rho[1], xi[2] + rho[2]];
        self.macro_strain * mi.rho_vector() + self.displacement(mi.beta(), &shifted)
            - self.displacement(mi.alpha(), xi)
    }

    /// Recovers grid samples of `(Y^N, P^N)` from atom positions under
    /// the given connection rule; exact inverse of [`ScaledField::sample`].
    pub fn recover(&self, rule: ConnectionRule) -> (Vec<Vector>, Vec<Vector>) {
        let mut y = Vec::with_capacity(self.cell.num_sites());
        let mut p = Vec::with_capacity(self.cell.num_sites());
        for xi in self.cell.sites() {
            let y0 = self.position(0, &xi);
            let y1 = self.position(1, &xi);
            match rule {
                ConnectionRule::Classical => y.push(y0),
                ConnectionRule::Centroid => y.push(0.5 * (y0 + y1)),
            }
            p.push(y1 - y0);
        }
        (y, p)
    }
}

/// Uniform sample grid over the unit cell, `per_axis` points per axis.
pub fn unit_grid(dim: usize, per_axis: usize) -> Vec<Vector> {
    let mut pts = vec![Vector::zeros()];
    for axis in 0..dim {
        let mut next = Vec::with_capacity(pts.len() * per_axis);
        for p in &pts {
            for k in 0..per_axis {
                let mut q = *p;
                q[axis] = k as f64 / per_axis as f64;
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

/// Largest absolute entry of a second derivative over the active block.
pub fn max_abs_second(h: &SecondDeriv, dim: usize) -> f64 {
    let mut m: f64 = 0.0;
    for hi in h.iter().take(dim) {
        for j in 0..dim {
            for k in 0..dim {
                m = m.max(hi[(j, k)].abs());
            }
        }
    }
    m
}

/// Largest absolute entry of a third derivative over the active block.
pub fn max_abs_third(t: &ThirdDeriv, dim: usize) -> f64 {
    let mut m: f64 = 0.0;
    for ti in t.iter().take(dim) {
        for tj in ti.iter().take(dim) {
            for k in 0..dim {
                for l in 0..dim {
                    m = m.max(tj[(k, l)].abs());
                }
            }
        }
    }
    m
}

/// Largest absolute entry of a matrix over the active block.
pub fn max_abs_matrix(m: &Matrix, dim: usize) -> f64 {
    let mut out: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            out = out.max(m[(i, j)].abs());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{pad_strain, MultiIndex};
    use approx::assert_abs_diff_eq;

    fn mi(dim: usize, rho: &[i64], alpha: usize, beta: usize) -> MultiIndex {
        MultiIndex::new(dim, rho, alpha, beta).unwrap()
    }

    #[test]
    fn affine_classical_sample_is_homogeneous() {
        let field = builtin_field("affine", 2, 0.0).unwrap();
        let scaled = ScaledField::new(field.clone(), 4).unwrap();
        let def = scaled.sample(ConnectionRule::Classical);
        let b = *field.macro_strain();
        let p = base_shift(2);
        for xi in def.cell().sites() {
            let xi_v = Vector::new(xi[0] as f64, xi[1] as f64, 0.0);
            assert_abs_diff_eq!(def.position(0, &xi), b * xi_v, epsilon = 1e-14);
            assert_abs_diff_eq!(def.position(1, &xi), b * xi_v + p, epsilon = 1e-14);
        }
    }

    #[test]
    fn affine_centroid_sample_centers_the_pair() {
        let field = builtin_field("affine", 2, 0.0).unwrap();
        let def = ScaledField::new(field.clone(), 4)
            .unwrap()
            .sample(ConnectionRule::Centroid);
        let b = *field.macro_strain();
        let p = base_shift(2);
        for xi in def.cell().sites() {
            let xi_v = Vector::new(xi[0] as f64, xi[1] as f64, 0.0);
            let y0 = def.position(0, &xi);
            let y1 = def.position(1, &xi);
            assert_abs_diff_eq!(y1 - y0, p, epsilon = 1e-14);
            assert_abs_diff_eq!(0.5 * (y0 + y1), b * xi_v, epsilon = 1e-14);
        }
    }

    #[test]
    fn sampled_deformation_is_n_periodic() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let n = 6;
        for rule in [ConnectionRule::Classical, ConnectionRule::Centroid] {
            let def = ScaledField::new(field.clone(), n).unwrap().sample(rule);
            let nb = *field.macro_strain() * Vector::new(n as f64, 0.0, 0.0);
            for xi in def.cell().sites() {
                for alpha in 0..2 {
                    let shifted = [xi[0] + n as i64, xi[1], xi[2]];
                    let diff = def.position(alpha, &shifted) - def.position(alpha, &xi);
                    assert_abs_diff_eq!(diff, nb, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn recover_roundtrips_sampled_fields() {
        let field = builtin_field("trig_generic", 1, 0.05).unwrap();
        let n = 8;
        for rule in [ConnectionRule::Classical, ConnectionRule::Centroid] {
            let scaled = ScaledField::new(field.clone(), n).unwrap();
            let def = scaled.sample(rule);
            let (y, p) = def.recover(rule);
            for (idx, xi) in def.cell().sites().enumerate() {
                let xi_v = Vector::new(xi[0] as f64, 0.0, 0.0);
                assert_abs_diff_eq!(y[idx], scaled.y_n(&xi_v), epsilon = 1e-12);
                assert_abs_diff_eq!(p[idx], scaled.p_n(&xi_v), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn recover_homogeneous_centroid() {
        let cell = PeriodicCell::new(4, 2).unwrap();
        let f = pad_strain(2, &[&[1.1, 0.0], &[0.2, 0.9]]);
        let p0 = Vector::new(0.1, -0.2, 0.0);
        let p1 = Vector::new(0.4, 0.3, 0.0);
        let def = AtomisticDeformation::homogeneous(cell, f, p0, p1);
        let (y, p) = def.recover(ConnectionRule::Centroid);
        for (idx, xi) in cell.sites().enumerate() {
            let xi_v = Vector::new(xi[0] as f64, xi[1] as f64, 0.0);
            assert_abs_diff_eq!(y[idx], f * xi_v + 0.5 * (p0 + p1), epsilon = 1e-14);
            assert_abs_diff_eq!(p[idx], p1 - p0, epsilon = 1e-14);
        }
    }

    #[test]
    fn recover_zero_deformation() {
        let cell = PeriodicCell::new(3, 1).unwrap();
        let def = AtomisticDeformation::homogeneous(
            cell,
            Matrix::zeros(),
            Vector::zeros(),
            Vector::zeros(),
        );
        let (y, p) = def.recover(ConnectionRule::Classical);
        assert!(y.iter().all(|v| v.norm() == 0.0));
        assert!(p.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn fd_of_homogeneous_state() {
        let cell = PeriodicCell::new(4, 2).unwrap();
        let f = pad_strain(2, &[&[1.1, 0.3], &[-0.1, 0.9]]);
        let p0 = Vector::new(-0.25, 0.05, 0.0);
        let p1 = Vector::new(0.25, -0.05, 0.0);
        let def = AtomisticDeformation::homogeneous(cell, f, p0, p1);
        let entries = [
            mi(2, &[1, 0], 0, 1),
            mi(2, &[0, -1], 1, 0),
            mi(2, &[2, 1], 1, 1),
            mi(2, &[-1, 2], 0, 0),
        ];
        for m in &entries {
            let p = [p0, p1];
            let expected = f * m.rho_vector() + p[m.beta()] - p[m.alpha()];
            for xi in cell.sites() {
                assert_abs_diff_eq!(def.fd(&xi, m), expected, epsilon = 1e-14);
                // Reflection identity for homogeneous states.
                assert_abs_diff_eq!(def.fd(&xi, m), -def.fd(&xi, &m.neg()), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn fd_across_cell_boundary_matches_unwrapped_evaluation() {
        // Oracle: evaluate y_beta directly from the scaled field at the
        // unwrapped site.
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let n = 4;
        let scaled = ScaledField::new(field, n).unwrap();
        let def = scaled.sample(ConnectionRule::Classical);
        let m = mi(2, &[2, 1], 0, 1);
        let xi = [3i64, 3, 0]; // xi + rho crosses the boundary
        let unwrapped = [5i64, 4, 0];
        let x_out = Vector::new(unwrapped[0] as f64, unwrapped[1] as f64, 0.0);
        let x_in = Vector::new(xi[0] as f64, xi[1] as f64, 0.0);
        let oracle = (scaled.y_n(&x_out) + scaled.p_n(&x_out)) - scaled.y_n(&x_in);
        assert_abs_diff_eq!(def.fd(&xi, &m), oracle, epsilon = 1e-11);
    }

    #[test]
    fn dirder_drops_shift_for_equal_indices() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let x = Vector::new(0.37, 0.81, 0.0);
        let m = mi(2, &[1, -1], 1, 1);
        let expected = field.grad_y(&x) * m.rho_vector();
        assert_abs_diff_eq!(field.dirder(&x, &m), expected, epsilon = 1e-15);
    }

    #[test]
    fn dirder_of_affine_field() {
        let field = builtin_field("affine", 2, 0.0).unwrap();
        let x = Vector::new(0.2, 0.6, 0.0);
        let m = mi(2, &[1, 0], 0, 1);
        let expected = *field.macro_strain() * m.rho_vector() + base_shift(2);
        assert_abs_diff_eq!(field.dirder(&x, &m), expected, epsilon = 1e-15);
    }

    #[test]
    fn dirder_antisymmetric_under_neg() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        for x in unit_grid(2, 4) {
            for m in [mi(2, &[1, 0], 0, 1), mi(2, &[2, -1], 1, 1)] {
                assert_abs_diff_eq!(
                    field.dirder(&x, &m),
                    -field.dirder(&x, &m.neg()),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn dirder_eps_reduces_to_dirder_at_zero() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let x = Vector::new(0.11, 0.73, 0.0);
        for m in [
            mi(2, &[1, 0], 0, 1),
            mi(2, &[0, 1], 1, 0),
            mi(2, &[1, 1], 1, 1),
        ] {
            assert_abs_diff_eq!(
                field.dirder_eps(&x, &m, 0.0),
                field.dirder(&x, &m),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn dirder_eps_inert_for_zero_indices() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let x = Vector::new(0.5, 0.25, 0.0);
        let m = mi(2, &[1, 0], 0, 0);
        assert_abs_diff_eq!(
            field.dirder_eps(&x, &m, 0.3),
            field.dirder(&x, &m),
            epsilon = 1e-15
        );
    }

    #[test]
    fn dirder_eps_antisymmetric_under_sim() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let eps = 0.125;
        for x in unit_grid(2, 3) {
            for m in [
                mi(2, &[1, 0], 0, 1),
                mi(2, &[1, -1], 1, 1),
                mi(2, &[0, 1], 0, 0),
            ] {
                assert_abs_diff_eq!(
                    field.dirder_eps(&x, &m, eps),
                    -field.dirder_eps(&x, &m.sim(), eps),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn affine_field_has_no_curvature() {
        let field = builtin_field("affine", 2, 0.7).unwrap();
        for x in unit_grid(2, 4) {
            assert_eq!(max_abs_second(&field.hess_y(&x), 2), 0.0);
            assert_eq!(max_abs_matrix(&field.grad_p(&x), 2), 0.0);
        }
    }

    #[test]
    fn trig_generic_with_zero_amplitude_is_affine() {
        let trig = builtin_field("trig_generic", 2, 0.0).unwrap();
        let affine = builtin_field("affine", 2, 0.0).unwrap();
        for x in unit_grid(2, 5) {
            assert_abs_diff_eq!(trig.y(&x), affine.y(&x), epsilon = 1e-15);
            assert_abs_diff_eq!(trig.p(&x), affine.p(&x), epsilon = 1e-15);
        }
    }

    /// Central-difference jacobian oracle.
    fn fd_jacobian(map: &dyn PeriodicMap, x: &Vector, dim: usize, h: f64) -> Matrix {
        let mut m = Matrix::zeros();
        for j in 0..dim {
            let mut xp = *x;
            let mut xm = *x;
            xp[j] += h;
            xm[j] -= h;
            let diff = (map.value(&xp) - map.value(&xm)) / (2.0 * h);
            for i in 0..dim {
                m[(i, j)] = diff[i];
            }
        }
        m
    }

    #[test]
    fn trig_jacobian_matches_finite_differences() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let h = 1e-5;
        for x in unit_grid(2, 7) {
            let analytic = field.displacement().jacobian(&x);
            let numeric = fd_jacobian(field.displacement(), &x, 2, h);
            assert_abs_diff_eq!(
                max_abs_matrix(&(analytic - numeric), 2),
                0.0,
                epsilon = 1e-6
            );
            let analytic_p = field.grad_p(&x);
            let numeric_p = fd_jacobian(field.shift_map(), &x, 2, h);
            assert_abs_diff_eq!(
                max_abs_matrix(&(analytic_p - numeric_p), 2),
                0.0,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn builtin_maps_are_one_periodic() {
        for name in ["affine", "trig_generic", "trig_shift_only"] {
            let field = builtin_field(name, 2, 0.05).unwrap();
            for x in unit_grid(2, 4) {
                for eta in [[1.0, 0.0], [0.0, 1.0], [2.0, -1.0]] {
                    let shifted = x + Vector::new(eta[0], eta[1], 0.0);
                    assert_abs_diff_eq!(
                        field.displacement().value(&shifted),
                        field.displacement().value(&x),
                        epsilon = 1e-12
                    );
                    assert_abs_diff_eq!(field.p(&shifted), field.p(&x), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn scaling_identities_hold_on_sampled_grid() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        for n in [2usize, 8, 32] {
            let scaled = ScaledField::new(field.clone(), n).unwrap();
            let mut sup_scaled_h = 0.0f64;
            let mut sup_h = 0.0f64;
            let mut sup_scaled_gp = 0.0f64;
            let mut sup_gp = 0.0f64;
            let mut sup_scaled_t = 0.0f64;
            let mut sup_t = 0.0f64;
            for g in unit_grid(2, 100) {
                let x = g * n as f64;
                sup_scaled_h = sup_scaled_h.max(max_abs_second(&scaled.hess_y_n(&x), 2));
                sup_h = sup_h.max(max_abs_second(&field.hess_y(&g), 2));
                sup_scaled_gp = sup_scaled_gp.max(max_abs_matrix(&scaled.grad_p_n(&x), 2));
                sup_gp = sup_gp.max(max_abs_matrix(&field.grad_p(&g), 2));
                sup_scaled_t = sup_scaled_t.max(max_abs_third(&scaled.third_y_n(&x), 2));
                sup_t = sup_t.max(max_abs_third(&field.third_y(&g), 2));
            }
            let n = n as f64;
            assert_abs_diff_eq!(sup_scaled_h, sup_h / n, epsilon = 1e-10 * sup_h.max(1.0));
            assert_abs_diff_eq!(
                sup_scaled_gp,
                sup_gp / n,
                epsilon = 1e-10 * sup_gp.max(1.0)
            );
            assert_abs_diff_eq!(
                sup_scaled_t,
                sup_t / (n * n),
                epsilon = 1e-10 * sup_t.max(1.0)
            );
        }
    }

    #[test]
    fn fd_of_sampled_affine_field_equals_dirder() {
        // For a homogeneous state the finite differences coincide with the
        // directional derivatives of the underlying field at every site.
        let field = builtin_field("affine", 2, 0.0).unwrap();
        let def = ScaledField::new(field.clone(), 4)
            .unwrap()
            .sample(ConnectionRule::Classical);
        let x = Vector::new(0.63, 0.17, 0.0);
        for m in [
            mi(2, &[1, 0], 0, 1),
            mi(2, &[0, -1], 1, 0),
            mi(2, &[1, 1], 0, 0),
        ] {
            let expected = field.dirder(&x, &m);
            for xi in def.cell().sites() {
                assert_abs_diff_eq!(def.fd(&xi, &m), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn unknown_field_is_an_error() {
        assert!(matches!(
            builtin_field("quadratic", 2, 0.1),
            Err(Error::UnknownField(_))
        ));
    }

    #[test]
    fn without_shift_zeroes_p_only() {
        let field = builtin_field("trig_generic", 2, 0.05).unwrap();
        let bare = field.without_shift();
        assert!(bare.is_shift_free());
        assert!(!field.is_shift_free());
        let x = Vector::new(0.3, 0.9, 0.0);
        assert_abs_diff_eq!(bare.y(&x), field.y(&x), epsilon = 1e-15);
    }
}
