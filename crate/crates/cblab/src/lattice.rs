//! Reference-configuration combinatorics: multi-indices, interaction
//! ranges, the symmetry operators on them, and periodic-cell iteration.
//!
//! An interaction multi-index `(rho; alpha, beta)` addresses "the atom of
//! index `beta` at site `xi + rho` relative to the atom of index `alpha`
//! at site `xi`". Interaction ranges are finite ordered sets of such
//! triples, kept in lexicographic order on `(rho, alpha, beta)` so that
//! gradient tuples and test expectations are reproducible.

use std::fmt;

use crate::{Error, Matrix, Result, Vector};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Integer lattice vector, zero-padded beyond the active dimension.
pub type LatVec = [i64; 3];

/// Pads a slice of lattice coordinates to a [`LatVec`].
pub fn lat_vec(coords: &[i64]) -> LatVec {
    let mut v = [0i64; 3];
    v[..coords.len()].copy_from_slice(coords);
    v
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::BadDimension(dim))
    }
}

/// An interaction triple `(rho; alpha, beta)`.
///
/// The diagonal `(0; alpha, alpha)` is excluded: an atom does not
/// interact with itself.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex {
    // Field order matters: derived comparisons are lexicographic on
    // (rho, alpha, beta), which is the canonical range order.
    rho: LatVec,
    alpha: u8,
    beta: u8,
    dim: u8,
}

impl MultiIndex {
    pub fn new(dim: usize, rho: &[i64], alpha: usize, beta: usize) -> Result<Self> {
        check_dim(dim)?;
        if rho.len() != dim {
            return Err(Error::DimensionMismatch {
                entry: rho.len(),
                range: dim,
            });
        }
        if alpha > 1 {
            return Err(Error::BadAtomIndex(alpha));
        }
        if beta > 1 {
            return Err(Error::BadAtomIndex(beta));
        }
        if alpha == beta && rho.iter().all(|&c| c == 0) {
            return Err(Error::ExcludedDiagonal { alpha });
        }
        Ok(Self {
            rho: lat_vec(rho),
            alpha: alpha as u8,
            beta: beta as u8,
            dim: dim as u8,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Lattice offset as a slice of length `dim`.
    pub fn rho(&self) -> &[i64] {
        &self.rho[..self.dim as usize]
    }

    /// Lattice offset zero-padded to length 3.
    pub fn rho_padded(&self) -> LatVec {
        self.rho
    }

    /// Offset as a real vector, for contraction with strains and gradients.
    pub fn rho_vector(&self) -> Vector {
        Vector::new(self.rho[0] as f64, self.rho[1] as f64, self.rho[2] as f64)
    }

    pub fn alpha(&self) -> usize {
        self.alpha as usize
    }

    pub fn beta(&self) -> usize {
        self.beta as usize
    }

    /// Index reversal `(rho; alpha, beta) -> (-rho; 1-alpha, 1-beta)`.
    ///
    /// The excluded diagonal maps to itself under this operator, so the
    /// image of a valid multi-index is always valid.
    pub fn neg(&self) -> MultiIndex {
        MultiIndex {
            rho: [-self.rho[0], -self.rho[1], -self.rho[2]],
            alpha: 1 - self.alpha,
            beta: 1 - self.beta,
            dim: self.dim,
        }
    }

    /// Bond reversal `(rho; alpha, beta) -> (-rho; beta, alpha)`.
    pub fn sim(&self) -> MultiIndex {
        MultiIndex {
            rho: [-self.rho[0], -self.rho[1], -self.rho[2]],
            alpha: self.beta,
            beta: self.alpha,
            dim: self.dim,
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.rho().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "; {}, {})", self.alpha, self.beta)
    }
}

/// The two involutive multi-index symmetries.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SymmetryOp {
    /// Index reversal: `(-rho; 1-alpha, 1-beta)`.
    Neg,
    /// Bond reversal: `(-rho; beta, alpha)`.
    Sim,
}

impl SymmetryOp {
    pub fn apply(&self, mi: &MultiIndex) -> MultiIndex {
        match self {
            SymmetryOp::Neg => mi.neg(),
            SymmetryOp::Sim => mi.sim(),
        }
    }
}

impl fmt::Display for SymmetryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetryOp::Neg => write!(f, "neg"),
            SymmetryOp::Sim => write!(f, "sim"),
        }
    }
}

/// A finite set of interaction multi-indices, sorted lexicographically
/// on `(rho, alpha, beta)` with no duplicates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InteractionRange {
    dim: usize,
    entries: Vec<MultiIndex>,
}

impl InteractionRange {
    pub fn new(dim: usize, mut entries: Vec<MultiIndex>) -> Result<Self> {
        check_dim(dim)?;
        for mi in &entries {
            if mi.dim() != dim {
                return Err(Error::DimensionMismatch {
                    entry: mi.dim(),
                    range: dim,
                });
            }
        }
        entries.sort_unstable();
        for pair in entries.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateEntry(pair[0].to_string()));
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MultiIndex] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.entries.iter()
    }

    /// Position of `mi` in the sorted entry list.
    pub fn index_of(&self, mi: &MultiIndex) -> Option<usize> {
        self.entries.binary_search(mi).ok()
    }

    pub fn is_closed(&self, op: SymmetryOp) -> bool {
        self.entries
            .iter()
            .all(|mi| self.index_of(&op.apply(mi)).is_some())
    }

    pub fn is_neg_closed(&self) -> bool {
        self.is_closed(SymmetryOp::Neg)
    }

    pub fn is_sim_closed(&self) -> bool {
        self.is_closed(SymmetryOp::Sim)
    }

    /// True when every entry has `alpha = beta = 0`, i.e. the range
    /// addresses a single Bravais sublattice.
    pub fn is_bravais(&self) -> bool {
        self.entries.iter().all(|mi| mi.alpha() == 0 && mi.beta() == 0)
    }

    /// The union of the range with its image under `op`, deduplicated
    /// and reordered. The result is closed under `op` and contains the
    /// input.
    pub fn close(&self, op: SymmetryOp) -> InteractionRange {
        let mut entries = self.entries.clone();
        entries.extend(self.entries.iter().map(|mi| op.apply(mi)));
        entries.sort_unstable();
        entries.dedup();
        InteractionRange {
            dim: self.dim,
            entries,
        }
    }
}

/// The union `range ∪ op(range)` with duplicates removed.
pub fn close_range(range: &InteractionRange, op: SymmetryOp) -> InteractionRange {
    range.close(op)
}

fn det_block(strain: &Matrix, dim: usize) -> f64 {
    match dim {
        1 => strain[(0, 0)],
        2 => strain[(0, 0)] * strain[(1, 1)] - strain[(0, 1)] * strain[(1, 0)],
        _ => strain.determinant(),
    }
}

/// Max absolute row sum of the top-left `dim x dim` block.
fn inf_norm_block(m: &Matrix, dim: usize) -> f64 {
    (0..dim)
        .map(|i| (0..dim).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Identity-pads a `dim x dim` strain given in row-major order.
pub fn pad_strain(dim: usize, rows: &[&[f64]]) -> Matrix {
    let mut m = Matrix::identity();
    for (i, row) in rows.iter().enumerate().take(dim) {
        for (j, &v) in row.iter().enumerate().take(dim) {
            m[(i, j)] = v;
        }
    }
    m
}

fn checked_inverse(strain: &Matrix, dim: usize) -> Result<Matrix> {
    let det = det_block(strain, dim);
    if det.abs() < 1e-12 {
        return Err(Error::SingularStrain { det });
    }
    // The padding is the identity, so full 3x3 inversion inverts the block.
    strain
        .try_inverse()
        .ok_or(Error::SingularStrain { det })
}

/// All multi-indices whose reference-configuration bond vector lies
/// within the cutoff: `|B rho + p_beta - p_alpha| <= r_cut`.
///
/// The shifts are centered to `(-p/2, +p/2)` with `p = p1 - p0` before
/// measuring distances. The bond length is then invariant under both
/// `neg` and `sim`, so the returned range is closed under both.
pub fn range_from_cutoff(
    dim: usize,
    strain: &Matrix,
    p0: &Vector,
    p1: &Vector,
    r_cut: f64,
) -> Result<InteractionRange> {
    check_dim(dim)?;
    let inv = checked_inverse(strain, dim)?;
    let p = p1 - p0;
    let shifts = [-0.5 * p, 0.5 * p];
    let bound = ((r_cut + p.norm()) * inf_norm_block(&inv, dim)).ceil() as i64 + 1;

    let mut entries = Vec::new();
    let mut rho = [0i64; 3];
    let scan = |rho: &LatVec, entries: &mut Vec<MultiIndex>| {
        for alpha in 0..2usize {
            for beta in 0..2usize {
                if alpha == beta && rho.iter().all(|&c| c == 0) {
                    continue;
                }
                let rho_v = Vector::new(rho[0] as f64, rho[1] as f64, rho[2] as f64);
                let bond = strain * rho_v + shifts[beta] - shifts[alpha];
                if bond.norm() <= r_cut {
                    entries.push(MultiIndex {
                        rho: *rho,
                        alpha: alpha as u8,
                        beta: beta as u8,
                        dim: dim as u8,
                    });
                }
            }
        }
    };
    for_each_box_point(dim, bound, &mut rho, 0, &mut |rho| scan(rho, &mut entries));

    InteractionRange::new(dim, entries)
}

/// Bravais specialization: all offsets `0 < |B rho| <= r_cut`, every
/// entry carrying `alpha = beta = 0`.
pub fn bravais_range_from_cutoff(
    dim: usize,
    strain: &Matrix,
    r_cut: f64,
) -> Result<InteractionRange> {
    check_dim(dim)?;
    let inv = checked_inverse(strain, dim)?;
    let bound = (r_cut * inf_norm_block(&inv, dim)).ceil() as i64 + 1;

    let mut entries = Vec::new();
    let mut rho = [0i64; 3];
    for_each_box_point(dim, bound, &mut rho, 0, &mut |rho| {
        if rho.iter().all(|&c| c == 0) {
            return;
        }
        let rho_v = Vector::new(rho[0] as f64, rho[1] as f64, rho[2] as f64);
        if (strain * rho_v).norm() <= r_cut {
            entries.push(MultiIndex {
                rho: *rho,
                alpha: 0,
                beta: 0,
                dim: dim as u8,
            });
        }
    });

    InteractionRange::new(dim, entries)
}

fn for_each_box_point(
    dim: usize,
    bound: i64,
    rho: &mut LatVec,
    axis: usize,
    f: &mut impl FnMut(&LatVec),
) {
    if axis == dim {
        f(rho);
        return;
    }
    for c in -bound..=bound {
        rho[axis] = c;
        for_each_box_point(dim, bound, rho, axis + 1, f);
    }
    rho[axis] = 0;
}

/// Componentwise `xi mod n` into `{0, ..., n-1}`, correct for negative
/// components.
pub fn wrap(xi: &LatVec, n: usize, dim: usize) -> LatVec {
    let n = n as i64;
    let mut out = [0i64; 3];
    for i in 0..dim {
        out[i] = xi[i].rem_euclid(n);
    }
    out
}

/// The periodic cell `{0, ..., N-1}^d`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PeriodicCell {
    n: usize,
    dim: usize,
}

impl PeriodicCell {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n == 0 {
            return Err(Error::Config("period N must be positive".into()));
        }
        Ok(Self { n, dim })
    }

    pub fn period(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_sites(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn wrap(&self, xi: &LatVec) -> LatVec {
        wrap(xi, self.n, self.dim)
    }

    /// Flat index of a wrapped site, consistent with [`Self::sites`] order.
    pub fn site_index(&self, xi: &LatVec) -> usize {
        let w = self.wrap(xi);
        w[..self.dim]
            .iter()
            .fold(0usize, |idx, &c| idx * self.n + c as usize)
    }

    /// All sites of the cell in lexicographic order.
    pub fn sites(&self) -> CellSites {
        CellSites {
            cell: *self,
            next: 0,
        }
    }

    /// Site at a given flat index (inverse of [`Self::site_index`]).
    pub fn site_at(&self, mut idx: usize) -> LatVec {
        let mut xi = [0i64; 3];
        for i in (0..self.dim).rev() {
            xi[i] = (idx % self.n) as i64;
            idx /= self.n;
        }
        xi
    }
}

/// Lexicographic iterator over cell sites.
pub struct CellSites {
    cell: PeriodicCell,
    next: usize,
}

impl Iterator for CellSites {
    type Item = LatVec;

    fn next(&mut self) -> Option<LatVec> {
        if self.next >= self.cell.num_sites() {
            return None;
        }
        let xi = self.cell.site_at(self.next);
        self.next += 1;
        Some(xi)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.cell.num_sites() - self.next;
        (rem, Some(rem))
    }
}

/// Sites of a periodic cell in lexicographic order.
pub fn iter_cell(cell: &PeriodicCell) -> CellSites {
    cell.sites()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(dim: usize, rho: &[i64], alpha: usize, beta: usize) -> MultiIndex {
        MultiIndex::new(dim, rho, alpha, beta).unwrap()
    }

    #[test]
    fn neg_flips_offset_and_indices() {
        let m = mi(2, &[1, 0], 0, 1);
        let n = m.neg();
        assert_eq!(n, mi(2, &[-1, 0], 1, 0));
    }

    #[test]
    fn neg_at_zero_offset() {
        assert_eq!(mi(2, &[0, 0], 0, 1).neg(), mi(2, &[0, 0], 1, 0));
    }

    #[test]
    fn neg_is_involution() {
        let m = mi(2, &[2, -1], 1, 1);
        assert_eq!(m.neg().neg(), m);
    }

    #[test]
    fn sim_swaps_indices() {
        assert_eq!(mi(2, &[1, 0], 0, 1).sim(), mi(2, &[-1, 0], 1, 0));
        assert_eq!(mi(1, &[3], 0, 0).sim(), mi(1, &[-3], 0, 0));
        let m = mi(2, &[1, 1], 0, 1);
        assert_eq!(m.sim().sim(), m);
    }

    #[test]
    fn excluded_diagonal_rejected() {
        assert!(MultiIndex::new(2, &[0, 0], 0, 0).is_err());
        assert!(MultiIndex::new(2, &[0, 0], 1, 1).is_err());
        assert!(MultiIndex::new(2, &[0, 0], 0, 1).is_ok());
    }

    #[test]
    fn close_range_adds_neg_images() {
        let r = InteractionRange::new(1, vec![mi(1, &[1], 0, 1)]).unwrap();
        let closed = r.close(SymmetryOp::Neg);
        assert_eq!(
            closed.entries(),
            &[mi(1, &[-1], 1, 0), mi(1, &[1], 0, 1)]
        );
        assert!(closed.is_neg_closed());
    }

    #[test]
    fn close_range_idempotent() {
        let r = InteractionRange::new(1, vec![mi(1, &[1], 0, 1), mi(1, &[-1], 1, 0)]).unwrap();
        let closed = r.close(SymmetryOp::Neg);
        assert_eq!(closed.entries(), r.entries());
    }

    #[test]
    fn close_range_sim_on_symmetric_pair() {
        let r = InteractionRange::new(1, vec![mi(1, &[1], 0, 0), mi(1, &[-1], 0, 0)]).unwrap();
        // Hand enumeration: sim maps the two entries onto each other.
        let closed = r.close(SymmetryOp::Sim);
        assert_eq!(closed.entries(), r.entries());
        assert!(closed.is_sim_closed());
    }

    #[test]
    fn cutoff_range_1d_two_lattice() {
        let strain = pad_strain(1, &[&[1.0]]);
        let p0 = Vector::zeros();
        let p1 = Vector::new(0.5, 0.0, 0.0);
        let range = range_from_cutoff(1, &strain, &p0, &p1, 1.1).unwrap();

        // Independent oracle: brute-force |rho + 0.5 (beta - alpha)| <= 1.1
        // over |rho| <= 2.
        let mut expected = Vec::new();
        for rho in -2i64..=2 {
            for alpha in 0..2usize {
                for beta in 0..2usize {
                    if rho == 0 && alpha == beta {
                        continue;
                    }
                    if (rho as f64 + 0.5 * (beta as f64 - alpha as f64)).abs() <= 1.1 {
                        expected.push(mi(1, &[rho], alpha, beta));
                    }
                }
            }
        }
        expected.sort_unstable();
        assert_eq!(range.entries(), expected.as_slice());
        assert_eq!(range.len(), 8);
        assert!(range.is_neg_closed());
        assert!(range.is_sim_closed());
    }

    #[test]
    fn cutoff_below_min_distance_gives_empty_range() {
        let strain = pad_strain(1, &[&[1.0]]);
        let p0 = Vector::zeros();
        let p1 = Vector::new(0.5, 0.0, 0.0);
        let range = range_from_cutoff(1, &strain, &p0, &p1, 0.1).unwrap();
        assert!(range.is_empty());
    }

    #[test]
    fn honeycomb_nearest_neighbors() {
        // Bond length 1: lattice vectors (3/2, ±√3/2), shift (1, 0).
        let s3 = 3f64.sqrt();
        let strain = pad_strain(2, &[&[1.5, 1.5], &[s3 / 2.0, -s3 / 2.0]]);
        let p0 = Vector::zeros();
        let p1 = Vector::new(1.0, 0.0, 0.0);
        let range = range_from_cutoff(2, &strain, &p0, &p1, 1.2).unwrap();

        // Independent oracle: brute force over the box |rho|_inf <= 2.
        let mut expected = 0usize;
        let p = Vector::new(1.0, 0.0, 0.0);
        for r0 in -2i64..=2 {
            for r1 in -2i64..=2 {
                for (alpha, beta) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
                    if r0 == 0 && r1 == 0 && alpha == beta {
                        continue;
                    }
                    let rho_v = Vector::new(r0 as f64, r1 as f64, 0.0);
                    let bond =
                        strain * rho_v + (beta as f64 - alpha as f64) * p;
                    if bond.norm() <= 1.2 {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(expected, 6);
        assert_eq!(range.len(), 6);
        assert!(range.is_neg_closed() && range.is_sim_closed());
        // Three bonds per orientation.
        let forward = range.iter().filter(|mi| mi.alpha() == 0).count();
        assert_eq!(forward, 3);
    }

    #[test]
    fn singular_strain_rejected() {
        let strain = pad_strain(2, &[&[1.0, 1.0], &[1.0, 1.0]]);
        let err = range_from_cutoff(2, &strain, &Vector::zeros(), &Vector::zeros(), 1.0);
        assert!(matches!(err, Err(Error::SingularStrain { .. })));
    }

    #[test]
    fn bravais_range_symmetric() {
        let strain = pad_strain(2, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let range = bravais_range_from_cutoff(2, &strain, 1.5).unwrap();
        // Nearest (4) + next-nearest (4) neighbors of the square lattice.
        assert_eq!(range.len(), 8);
        assert!(range.is_bravais());
        assert!(range.is_sim_closed());
        assert!(!range.is_neg_closed());
    }

    #[test]
    fn wrap_handles_negatives() {
        assert_eq!(wrap(&[-1, 0, 0], 4, 1), [3, 0, 0]);
        assert_eq!(wrap(&[5, -7, 0], 4, 2), [1, 1, 0]);
        assert_eq!(wrap(&[0, 0, 0], 4, 2), [0, 0, 0]);
    }

    #[test]
    fn cell_iteration_lexicographic() {
        let c = PeriodicCell::new(2, 1).unwrap();
        let sites: Vec<_> = c.sites().collect();
        assert_eq!(sites, vec![[0, 0, 0], [1, 0, 0]]);

        let c = PeriodicCell::new(2, 2).unwrap();
        let sites: Vec<_> = c.sites().collect();
        assert_eq!(
            sites,
            vec![[0, 0, 0], [0, 1, 0], [1, 0, 0], [1, 1, 0]]
        );

        let c = PeriodicCell::new(3, 1).unwrap();
        assert_eq!(c.sites().count(), 3);
        for (i, xi) in c.sites().enumerate() {
            assert_eq!(c.site_index(&xi), i);
        }
    }

    #[test]
    fn site_index_roundtrip() {
        let c = PeriodicCell::new(4, 3).unwrap();
        assert_eq!(c.num_sites(), 64);
        for (i, xi) in c.sites().enumerate() {
            assert_eq!(c.site_index(&xi), i);
            assert_eq!(c.site_at(i), xi);
        }
    }

    fn arb_multi_index() -> impl Strategy<Value = MultiIndex> {
        (1usize..=3, -4i64..=4, -4i64..=4, -4i64..=4, 0usize..2, 0usize..2).prop_filter_map(
            "excluded diagonal",
            |(dim, r0, r1, r2, alpha, beta)| {
                let all = [r0, r1, r2];
                MultiIndex::new(dim, &all[..dim], alpha, beta).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn ops_are_involutions(mi in arb_multi_index()) {
            prop_assert_eq!(mi.neg().neg(), mi);
            prop_assert_eq!(mi.sim().sim(), mi);
        }

        #[test]
        fn neg_and_sim_commute(mi in arb_multi_index()) {
            let a = mi.neg().sim();
            let b = mi.sim().neg();
            prop_assert_eq!(a, b);
            // Both equal (rho; 1-beta, 1-alpha).
            prop_assert_eq!(a.rho(), mi.rho());
            prop_assert_eq!(a.alpha(), 1 - mi.beta());
            prop_assert_eq!(a.beta(), 1 - mi.alpha());
        }

        #[test]
        fn closure_is_superset_and_closed(
            entries in proptest::collection::vec(arb_multi_index(), 1..8),
            use_sim in proptest::bool::ANY,
        ) {
            let dim = entries[0].dim();
            let same_dim: Vec<_> = entries.into_iter().filter(|m| m.dim() == dim).collect();
            let mut dedup = same_dim.clone();
            dedup.sort_unstable();
            dedup.dedup();
            let range = InteractionRange::new(dim, dedup).unwrap();
            let op = if use_sim { SymmetryOp::Sim } else { SymmetryOp::Neg };
            let closed = range.close(op);
            prop_assert!(closed.is_closed(op));
            for mi in range.iter() {
                prop_assert!(closed.index_of(mi).is_some());
            }
        }

        #[test]
        fn wrap_is_n_periodic(
            xi in -20i64..20, eta in -3i64..3, n in 1usize..9
        ) {
            let shifted = [xi + (n as i64) * eta, 0, 0];
            prop_assert_eq!(wrap(&shifted, n, 1), wrap(&[xi, 0, 0], n, 1));
        }
    }
}
