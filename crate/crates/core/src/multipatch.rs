//! Multipatch spline spaces with strong boundary constraints.
//!
//! A multipatch space concatenates per-patch maximally smooth spline spaces
//! and couples them across interfaces with C⁰ (second-order problems) or C¹
//! (fourth-order problems) continuity. Essential boundary conditions and the
//! boundary outlier-removal constraints are eliminated strongly. The result
//! is an extraction matrix `E` mapping reduced coefficients to raw per-patch
//! coefficients; every operator is later assembled on the raw basis and
//! congruence-transformed with `E`.
//!
//! The outlier-removal recipe constrains higher boundary derivatives whose
//! parity matches the essential data: even orders for value-pinned ends
//! (sine-family modes), odd orders for free ends (cosine family). For
//! fourth-order simply supported ends the value and the even orders up to
//! `p - 1` are constrained.

use alloc::vec;
use alloc::vec::Vec;

use crate::bspline::{Side, SplineSpace1D};
use crate::error::{Error, Result};
use crate::linalg::{nullspace, sym_eigenvalues, DMat, SymMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorOrder {
    /// Gradient–gradient stiffness (rods, membranes).
    Second,
    /// Laplacian–Laplacian stiffness (beams, plates).
    Fourth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    DirichletFixed,
    NeumannFree,
    SimplySupported,
}

/// Problem family: operator order, boundary condition per side, and whether
/// boundary outlier-removal constraints are applied on top of the essential
/// ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemKind {
    pub order: OperatorOrder,
    pub boundary: [BoundaryCondition; 2],
    pub outlier_removal: bool,
}

impl ProblemKind {
    pub fn fixed_bar() -> Self {
        Self {
            order: OperatorOrder::Second,
            boundary: [BoundaryCondition::DirichletFixed; 2],
            outlier_removal: true,
        }
    }

    pub fn free_bar() -> Self {
        Self {
            order: OperatorOrder::Second,
            boundary: [BoundaryCondition::NeumannFree; 2],
            outlier_removal: true,
        }
    }

    pub fn supported_beam() -> Self {
        Self {
            order: OperatorOrder::Fourth,
            boundary: [BoundaryCondition::SimplySupported; 2],
            outlier_removal: true,
        }
    }

    pub fn without_removal(mut self) -> Self {
        self.outlier_removal = false;
        self
    }

    /// Continuity order enforced at patch interfaces.
    pub fn coupling_smoothness(&self) -> usize {
        match self.order {
            OperatorOrder::Second => 0,
            OperatorOrder::Fourth => 1,
        }
    }
}

/// Interior outlier count of a 1D multipatch discretization:
/// `(Np - 1)(p - 1)` for second-order problems, `(Np - 1)(p - 2)` for
/// fourth-order ones.
pub fn count_interior_outliers(order: OperatorOrder, degree: usize, n_patches: usize) -> usize {
    let per_interface = match order {
        OperatorOrder::Second => degree.saturating_sub(1),
        OperatorOrder::Fourth => degree.saturating_sub(2),
    };
    n_patches.saturating_sub(1) * per_interface
}

/// Derivative orders constrained strongly at one boundary.
fn boundary_constraint_orders(kind: &ProblemKind, bc: BoundaryCondition, degree: usize) -> Result<Vec<usize>> {
    let p = degree;
    let mut orders: Vec<usize> = Vec::new();
    match (kind.order, bc) {
        (OperatorOrder::Second, BoundaryCondition::DirichletFixed) => {
            orders.push(0);
            if kind.outlier_removal {
                orders.extend((2..p).step_by(2));
            }
        }
        (OperatorOrder::Second, BoundaryCondition::NeumannFree) => {
            if kind.outlier_removal {
                orders.extend((1..p).step_by(2));
            }
        }
        (OperatorOrder::Second, BoundaryCondition::SimplySupported) => {
            return Err(Error::InvalidArgument(
                "simply supported boundary applies to fourth-order problems".into(),
            ));
        }
        (OperatorOrder::Fourth, BoundaryCondition::SimplySupported) => {
            orders.push(0);
            if kind.outlier_removal {
                orders.extend((2..p).step_by(2));
            }
        }
        (OperatorOrder::Fourth, BoundaryCondition::DirichletFixed) => {
            if kind.outlier_removal {
                return Err(Error::InvalidArgument(
                    "no outlier-removal recipe for clamped fourth-order ends".into(),
                ));
            }
            orders.push(0);
            orders.push(1);
        }
        (OperatorOrder::Fourth, BoundaryCondition::NeumannFree) => {
            if kind.outlier_removal {
                return Err(Error::InvalidArgument(
                    "no outlier-removal recipe for free fourth-order ends".into(),
                ));
            }
        }
    }
    Ok(orders)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface1D {
    pub x: f64,
    pub left_patch: usize,
    pub right_patch: usize,
}

/// A coupled, boundary-constrained 1D multipatch space on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MultipatchSpace1D {
    kind: ProblemKind,
    degree: usize,
    patches: Vec<SplineSpace1D>,
    patch_offsets: Vec<usize>,
    interfaces: Vec<Interface1D>,
    extraction: DMat,
}

impl MultipatchSpace1D {
    pub fn build(
        kind: ProblemKind,
        degree: usize,
        n_patches: usize,
        elems_per_patch: usize,
    ) -> Result<Self> {
        match kind.order {
            OperatorOrder::Second if degree < 1 => {
                return Err(Error::InvalidArgument("second-order problems need p >= 1".into()))
            }
            OperatorOrder::Fourth if degree < 2 => {
                return Err(Error::InvalidArgument("fourth-order problems need p >= 2".into()))
            }
            _ => {}
        }
        if n_patches < 1 {
            return Err(Error::InvalidArgument("need at least one patch".into()));
        }
        let np = n_patches;
        let width = 1.0 / np as f64;
        let mut patches = Vec::with_capacity(np);
        let mut patch_offsets = Vec::with_capacity(np);
        let mut offset = 0usize;
        for q in 0..np {
            let dom = [q as f64 * width, (q + 1) as f64 * width];
            let sp = SplineSpace1D::open_uniform(degree, elems_per_patch, dom)?;
            patch_offsets.push(offset);
            offset += sp.dim();
            patches.push(sp);
        }
        let n_raw = offset;
        let interfaces: Vec<Interface1D> = (1..np)
            .map(|q| Interface1D {
                x: q as f64 * width,
                left_patch: q - 1,
                right_patch: q,
            })
            .collect();

        let coupling = kind.coupling_smoothness();
        let n_funcs = patches[0].dim();
        if coupling == 1 && n_funcs < 3 {
            return Err(Error::InvalidArgument(
                "C1 coupling needs at least three functions per patch".into(),
            ));
        }

        // Interface coupling: expansions of each raw coefficient over the
        // coupled reduced columns. C0 shares the interface value coefficient;
        // C1 additionally slaves the first interior coefficient of the right
        // patch to the uniform-mesh derivative-match stencil v₂ = 2w − a.
        let n_c = np * n_funcs - (np - 1) * (1 + coupling);
        let mut expansions: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n_raw);
        let mut next_col = 0usize;
        for q in 0..np {
            for j in 0..n_funcs {
                let g = patch_offsets[q] + j;
                debug_assert_eq!(g, expansions.len());
                if q > 0 && j == 0 {
                    let prev_last = patch_offsets[q] - 1;
                    expansions.push(expansions[prev_last].clone());
                } else if q > 0 && coupling == 1 && j == 1 {
                    let shared = patch_offsets[q];
                    let prev_second_last = patch_offsets[q] - 2;
                    let mut combo: Vec<(usize, f64)> = Vec::new();
                    for &(c, v) in &expansions[shared] {
                        push_term(&mut combo, c, 2.0 * v);
                    }
                    for &(c, v) in &expansions[prev_second_last] {
                        push_term(&mut combo, c, -v);
                    }
                    expansions.push(combo);
                } else {
                    expansions.push(vec![(next_col, 1.0)]);
                    next_col += 1;
                }
            }
        }
        debug_assert_eq!(next_col, n_c);
        let mut ec = DMat::zeros(n_raw, n_c);
        for (g, terms) in expansions.iter().enumerate() {
            for &(c, v) in terms {
                ec.add_to(g, c, v);
            }
        }

        // Boundary constraint rows in coupled coordinates.
        let mut left_rows: Vec<Vec<f64>> = Vec::new();
        let mut right_rows: Vec<Vec<f64>> = Vec::new();
        for (side, rows) in [(0usize, &mut left_rows), (1usize, &mut right_rows)] {
            let orders = boundary_constraint_orders(&kind, kind.boundary[side], degree)?;
            let (patch, eval_side, x) = if side == 0 {
                (0, Side::Right, 0.0)
            } else {
                (np - 1, Side::Left, 1.0)
            };
            for d in orders {
                let (first, vals) = patches[patch].eval_basis_side(x, d, eval_side)?;
                let mut raw = vec![0.0; n_raw];
                for (j, &v) in vals.iter().enumerate() {
                    raw[patch_offsets[patch] + first + j] = v;
                }
                rows.push(ec.tr_matvec(&raw));
            }
        }

        let extraction = eliminate_boundary_rows(&ec, &left_rows, &right_rows)?;

        Ok(Self {
            kind,
            degree,
            patches,
            patch_offsets,
            interfaces,
            extraction,
        })
    }

    #[inline]
    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn n_patches(&self) -> usize {
        self.patches.len()
    }

    #[inline]
    pub fn patches(&self) -> &[SplineSpace1D] {
        &self.patches
    }

    #[inline]
    pub fn patch_offset(&self, q: usize) -> usize {
        self.patch_offsets[q]
    }

    #[inline]
    pub fn interfaces(&self) -> &[Interface1D] {
        &self.interfaces
    }

    #[inline]
    pub fn extraction(&self) -> &DMat {
        &self.extraction
    }

    /// Reduced dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.extraction.ncols()
    }

    #[inline]
    pub fn raw_dim(&self) -> usize {
        self.extraction.nrows()
    }

    /// Uniform element size across the whole domain.
    pub fn element_size(&self) -> f64 {
        self.patches[0].element_size()
    }

    pub fn domain(&self) -> [f64; 2] {
        [0.0, 1.0]
    }

    pub fn raw_coeffs(&self, reduced: &[f64]) -> Vec<f64> {
        self.extraction.matvec(reduced)
    }

    /// Patch index containing `x`, honoring the side at interfaces.
    fn patch_of(&self, x: f64, side: Side) -> Result<usize> {
        let np = self.patches.len();
        if !(-1e-12..=1.0 + 1e-12).contains(&x) {
            return Err(Error::OutOfDomain { x, lo: 0.0, hi: 1.0 });
        }
        let rel = x * np as f64;
        let nearest = libm::round(rel);
        let q = if (rel - nearest).abs() < 1e-9 {
            match side {
                Side::Right => nearest as isize,
                Side::Left => nearest as isize - 1,
            }
        } else {
            libm::floor(rel) as isize
        };
        Ok(q.clamp(0, np as isize - 1) as usize)
    }

    /// Raw basis values at `x` (global raw index of the first active
    /// function plus the `p + 1` derivative values from the chosen side).
    pub fn eval_raw_basis(&self, x: f64, deriv: usize, side: Side) -> Result<(usize, Vec<f64>)> {
        let q = self.patch_of(x, side)?;
        let (first, vals) = self.patches[q].eval_basis_side(x, deriv, side)?;
        Ok((self.patch_offsets[q] + first, vals))
    }

    /// Point value of the reduced-coefficient function.
    pub fn eval(&self, reduced: &[f64], x: f64, deriv: usize, side: Side) -> Result<f64> {
        let raw = self.raw_coeffs(reduced);
        self.eval_raw(&raw, x, deriv, side)
    }

    pub fn eval_raw(&self, raw: &[f64], x: f64, deriv: usize, side: Side) -> Result<f64> {
        let (first, vals) = self.eval_raw_basis(x, deriv, side)?;
        Ok(vals
            .iter()
            .enumerate()
            .map(|(j, v)| v * raw[first + j])
            .sum())
    }

    /// Condition number of `EᵀE` (reported, not asserted).
    pub fn extraction_condition(&self) -> Result<f64> {
        let e = &self.extraction;
        let gram = SymMat::from_dense_symmetrized(&e.tr_mul(e));
        let vals = sym_eigenvalues(&gram)?;
        let lo = vals.first().copied().unwrap_or(0.0);
        let hi = vals.last().copied().unwrap_or(0.0);
        if lo <= 0.0 {
            return Err(Error::InvalidArgument("extraction map is rank deficient".into()));
        }
        Ok(hi / lo)
    }
}

fn push_term(terms: &mut Vec<(usize, f64)>, col: usize, v: f64) {
    for t in terms.iter_mut() {
        if t.0 == col {
            t.1 += v;
            return;
        }
    }
    terms.push((col, v));
}

/// Eliminates boundary constraint rows from the coupled map. When the left
/// and right supports are disjoint the nullspace is computed on the local
/// boundary blocks only; otherwise (tiny spaces, e.g. single-element
/// patches with C¹ chaining) a dense nullspace over all columns is used.
fn eliminate_boundary_rows(
    ec: &DMat,
    left_rows: &[Vec<f64>],
    right_rows: &[Vec<f64>],
) -> Result<DMat> {
    let n_c = ec.ncols();
    let (ml, mr) = (left_rows.len(), right_rows.len());
    if ml + mr == 0 {
        return Ok(ec.clone());
    }
    if ml + mr >= n_c {
        return Err(Error::InvalidArgument(
            "more boundary constraints than coupled degrees of freedom".into(),
        ));
    }
    // Equilibrate: derivative rows of different orders differ by powers of
    // 1/h; unit-scaling each row keeps the QR well conditioned without
    // changing the kernel.
    let scale_row = |r: &Vec<f64>| -> Vec<f64> {
        let m = r.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
        if m > 0.0 {
            r.iter().map(|&v| v / m).collect()
        } else {
            r.clone()
        }
    };
    let left_rows: Vec<Vec<f64>> = left_rows.iter().map(scale_row).collect();
    let right_rows: Vec<Vec<f64>> = right_rows.iter().map(scale_row).collect();
    let (left_rows, right_rows) = (&left_rows[..], &right_rows[..]);
    let span_left = left_rows
        .iter()
        .flat_map(|r| r.iter().enumerate().filter(|(_, v)| v.abs() > 1e-14))
        .map(|(j, _)| j + 1)
        .max()
        .unwrap_or(0);
    let span_right_start = right_rows
        .iter()
        .flat_map(|r| r.iter().enumerate().filter(|(_, v)| v.abs() > 1e-14))
        .map(|(j, _)| j)
        .min()
        .unwrap_or(n_c);

    let g = if span_left <= span_right_start {
        // Disjoint local blocks: nullspace on each boundary block,
        // identity in between.
        let mut cols: Vec<Vec<f64>> = Vec::new();
        if ml > 0 {
            let c = DMat::from_fn(ml, span_left, |i, j| left_rows[i][j]);
            let z = nullspace(&c);
            for k in 0..z.ncols() {
                let mut col = vec![0.0; n_c];
                for i in 0..span_left {
                    col[i] = z.get(i, k);
                }
                cols.push(col);
            }
        }
        for j in span_left..span_right_start {
            let mut col = vec![0.0; n_c];
            col[j] = 1.0;
            cols.push(col);
        }
        if mr > 0 {
            let w = n_c - span_right_start;
            let c = DMat::from_fn(mr, w, |i, j| right_rows[i][span_right_start + j]);
            let z = nullspace(&c);
            for k in 0..z.ncols() {
                let mut col = vec![0.0; n_c];
                for i in 0..w {
                    col[span_right_start + i] = z.get(i, k);
                }
                cols.push(col);
            }
        }
        let mut g = DMat::zeros(n_c, cols.len());
        for (k, col) in cols.iter().enumerate() {
            g.set_col(k, col);
        }
        g
    } else {
        let m = ml + mr;
        let c = DMat::from_fn(m, n_c, |i, j| {
            if i < ml {
                left_rows[i][j]
            } else {
                right_rows[i - ml][j]
            }
        });
        nullspace(&c)
    };
    Ok(ec.mul(&g))
}

/// Tensor-product 2D multipatch space: the reduced basis is the Kronecker
/// product of two reduced 1D directional bases.
#[derive(Debug, Clone)]
pub struct MultipatchSpace2D {
    x: MultipatchSpace1D,
    y: MultipatchSpace1D,
}

impl MultipatchSpace2D {
    pub fn build(
        kind: ProblemKind,
        degree: usize,
        n_patches: [usize; 2],
        elems_per_patch: [usize; 2],
    ) -> Result<Self> {
        let x = MultipatchSpace1D::build(kind, degree, n_patches[0], elems_per_patch[0])?;
        let y = MultipatchSpace1D::build(kind, degree, n_patches[1], elems_per_patch[1])?;
        Ok(Self { x, y })
    }

    #[inline]
    pub fn dir_x(&self) -> &MultipatchSpace1D {
        &self.x
    }

    #[inline]
    pub fn dir_y(&self) -> &MultipatchSpace1D {
        &self.y
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.x.dim() * self.y.dim()
    }

    #[inline]
    pub fn raw_dim(&self) -> usize {
        self.x.raw_dim() * self.y.raw_dim()
    }

    pub fn kind(&self) -> &ProblemKind {
        self.x.kind()
    }

    pub fn degree(&self) -> usize {
        self.x.degree()
    }

    /// Raw tensor coefficients as a matrix: `Ex C Eyᵀ` with `C` the reduced
    /// coefficients reshaped to `dim_x × dim_y` (x-major vector layout).
    pub fn raw_coeff_matrix(&self, reduced: &[f64]) -> DMat {
        assert_eq!(reduced.len(), self.dim());
        let c = DMat::from_fn(self.x.dim(), self.y.dim(), |i, j| reduced[i * self.y.dim() + j]);
        self.x.extraction().mul(&c).mul(&self.y.extraction().transpose())
    }

    /// Point evaluation with per-direction derivative orders and sides.
    pub fn eval(
        &self,
        reduced: &[f64],
        at: [f64; 2],
        deriv: [usize; 2],
        side: [Side; 2],
    ) -> Result<f64> {
        let raw = self.raw_coeff_matrix(reduced);
        self.eval_raw(&raw, at, deriv, side)
    }

    pub fn eval_raw(
        &self,
        raw: &DMat,
        at: [f64; 2],
        deriv: [usize; 2],
        side: [Side; 2],
    ) -> Result<f64> {
        let (fx, vx) = self.x.eval_raw_basis(at[0], deriv[0], side[0])?;
        let (fy, vy) = self.y.eval_raw_basis(at[1], deriv[1], side[1])?;
        let mut acc = 0.0;
        for (i, &bx) in vx.iter().enumerate() {
            for (j, &by) in vy.iter().enumerate() {
                acc += bx * by * raw.get(fx + i, fy + j);
            }
        }
        Ok(acc)
    }
}
