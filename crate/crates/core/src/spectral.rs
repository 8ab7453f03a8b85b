//! Spectrum post-processing: analytic references, mode-matched ordering,
//! normalized frequencies, L² mode errors, outlier flagging, and
//! convergence-order fits.
//!
//! Discrete spectra are reported against the analytic frequencies in
//! mode-matched order: each analytic mode is paired with the discrete mode
//! of maximal normalized L² projection, processed in ascending analytic
//! order. Analytic degeneracies (symmetric membrane/plate pairs) are
//! resolved by projecting onto the span of the whole degenerate group;
//! per-mode errors inside a group are subspace distances.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::OperatorSet;
use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};
use crate::linalg::DMat;
use crate::multipatch::{MultipatchSpace1D, MultipatchSpace2D};
use crate::num;
use crate::quadrature::gauss_rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticProblem {
    /// `-u'' = ω² u`, `u(0) = u(1) = 0`: `ω_n = nπ`, `U_n = sin(nπx)`.
    FixedBar,
    /// `-u'' = ω² u`, free ends: `ω_n = nπ`, `U_n = cos(nπx)`, `n ≥ 0`.
    FreeBar,
    /// `u'''' = ω² u`, simply supported: `ω_n = (nπ)²`, `U_n = sin(nπx)`.
    SupportedBeam,
    /// `-Δu = ω² u` on the unit square, fixed: `ω_{mn} = π sqrt(m² + n²)`.
    FixedMembrane,
    /// `Δ²u = ω² u`, simply supported: `ω_{mn} = π² (m² + n²)`.
    SupportedPlate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeIndex {
    OneD(usize),
    TwoD(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMode {
    pub omega: f64,
    pub index: ModeIndex,
}

/// Closed-form eigenpairs of one of the model problems, ascending in ω.
#[derive(Debug, Clone)]
pub struct AnalyticModeSet {
    pub problem: AnalyticProblem,
    pub modes: Vec<AnalyticMode>,
}

impl AnalyticModeSet {
    pub fn new_1d(problem: AnalyticProblem, count: usize) -> Result<Self> {
        let pi = core::f64::consts::PI;
        let modes: Vec<AnalyticMode> = match problem {
            AnalyticProblem::FixedBar => (1..=count)
                .map(|n| AnalyticMode {
                    omega: n as f64 * pi,
                    index: ModeIndex::OneD(n),
                })
                .collect(),
            AnalyticProblem::FreeBar => (0..count)
                .map(|n| AnalyticMode {
                    omega: n as f64 * pi,
                    index: ModeIndex::OneD(n),
                })
                .collect(),
            AnalyticProblem::SupportedBeam => (1..=count)
                .map(|n| AnalyticMode {
                    omega: (n as f64 * pi) * (n as f64 * pi),
                    index: ModeIndex::OneD(n),
                })
                .collect(),
            _ => {
                return Err(Error::InvalidArgument(
                    "two-dimensional problem passed to the 1D mode set".into(),
                ))
            }
        };
        Ok(Self { problem, modes })
    }

    /// Tensor modes `(m, n) ∈ [1, nx] × [1, ny]`, flattened ascending in ω.
    pub fn new_2d(problem: AnalyticProblem, nx: usize, ny: usize) -> Result<Self> {
        let pi = core::f64::consts::PI;
        let omega = |m: usize, n: usize| -> f64 {
            let s = (m * m + n * n) as f64;
            match problem {
                AnalyticProblem::FixedMembrane => pi * num::sqrt(s),
                AnalyticProblem::SupportedPlate => pi * pi * s,
                _ => f64::NAN,
            }
        };
        if !matches!(
            problem,
            AnalyticProblem::FixedMembrane | AnalyticProblem::SupportedPlate
        ) {
            return Err(Error::InvalidArgument(
                "one-dimensional problem passed to the 2D mode set".into(),
            ));
        }
        let mut modes = Vec::with_capacity(nx * ny);
        for m in 1..=nx {
            for n in 1..=ny {
                modes.push(AnalyticMode {
                    omega: omega(m, n),
                    index: ModeIndex::TwoD(m, n),
                });
            }
        }
        modes.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap());
        Ok(Self { problem, modes })
    }

    /// Point value of a 1D analytic mode.
    pub fn eval_1d(&self, mode: &AnalyticMode, x: f64) -> f64 {
        let pi = core::f64::consts::PI;
        let ModeIndex::OneD(n) = mode.index else {
            return f64::NAN;
        };
        match self.problem {
            AnalyticProblem::FixedBar | AnalyticProblem::SupportedBeam => {
                num::sin(n as f64 * pi * x)
            }
            AnalyticProblem::FreeBar => num::cos(n as f64 * pi * x),
            _ => f64::NAN,
        }
    }
}

/// Discrete spectrum paired with the analytic reference.
#[derive(Debug, Clone)]
pub struct MatchedSpectrum {
    /// σ: position in analytic order → discrete mode index.
    pub permutation: Vec<usize>,
    pub analytic_omega: Vec<f64>,
    pub discrete_omega: Vec<f64>,
    /// `ω^h_{σ(n)} / ω_n`.
    pub normalized: Vec<f64>,
    /// Relative L² mode errors (subspace distances inside degenerate groups).
    pub mode_errors: Vec<f64>,
    /// Outlier flags of the assigned discrete modes (empty if no operator
    /// set was supplied for flagging).
    pub outlier_flags: Vec<bool>,
}

impl MatchedSpectrum {
    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn normalized_frequencies(&self) -> &[f64] {
        &self.normalized
    }

    pub fn mode_l2_errors(&self) -> &[f64] {
        &self.mode_errors
    }
}

/// Quadrature resolution for L² pairings: a little above the assembly rule
/// so the oscillatory analytic factors are integrated adequately.
fn l2_points_per_element(p: usize) -> usize {
    (p + 3).min(16)
}

struct Grid1D {
    xs: Vec<f64>,
    ws: Vec<f64>,
    /// Reduced basis values at the grid: `nq × dim`.
    phi: DMat,
}

fn build_grid(space: &MultipatchSpace1D, pts: usize) -> Result<Grid1D> {
    let rule = gauss_rule(pts)?;
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let e = space.extraction();
    let mut rows: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    for (q, patch) in space.patches().iter().enumerate() {
        let off = space.patch_offset(q);
        let h = patch.element_size();
        let [a, _] = patch.domain();
        for el in 0..patch.n_elements() {
            let xl = a + el as f64 * h;
            for (&pt, &w) in rule.points.iter().zip(rule.weights.iter()) {
                let x = xl + pt * h;
                let (first, vals) = patch.eval_basis(x, 0)?;
                let row = vals
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (off + first + j, v))
                    .collect();
                rows.push((xs.len(), row));
                xs.push(x);
                ws.push(w * h);
            }
        }
    }
    let mut phi = DMat::zeros(xs.len(), space.dim());
    for (r, terms) in rows {
        for (g, v) in terms {
            for c in 0..space.dim() {
                let ev = e.get(g, c);
                if ev != 0.0 {
                    phi.add_to(r, c, v * ev);
                }
            }
        }
    }
    Ok(Grid1D { xs, ws, phi })
}

/// Greedy assignment over degenerate analytic groups given the score matrix
/// `scores[a][k] ∈ [0, 1]`. Returns (permutation, per-position error).
fn assign_modes(
    analytic_omega: &[f64],
    scores: &DMat,
    n_modes: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n_cmp = analytic_omega.len().min(n_modes);
    let mut assigned = vec![false; n_modes];
    let mut permutation = vec![usize::MAX; n_cmp];
    let mut errors = vec![0.0; n_cmp];
    let mut a = 0usize;
    while a < n_cmp {
        // Degenerate group [a, b).
        let mut b = a + 1;
        while b < n_cmp
            && (analytic_omega[b] - analytic_omega[a]).abs()
                <= 1e-9 * analytic_omega[a].abs().max(1.0)
        {
            b += 1;
        }
        let g = b - a;
        if g == 1 {
            let mut best = usize::MAX;
            let mut best_score = -1.0;
            for k in 0..n_modes {
                if assigned[k] {
                    continue;
                }
                let s = scores.get(a, k);
                if s > best_score {
                    best_score = s;
                    best = k;
                }
            }
            if best == usize::MAX {
                return Err(Error::Matching("ran out of discrete modes".into()));
            }
            assigned[best] = true;
            permutation[a] = best;
            errors[a] = num::sqrt((2.0 * (1.0 - best_score.clamp(0.0, 1.0))).max(0.0));
        } else {
            // Group projection: the analytic modes of a group are mutually
            // orthogonal, so the squared projection is the score-square sum.
            let mut proj: Vec<(f64, usize)> = (0..n_modes)
                .filter(|&k| !assigned[k])
                .map(|k| {
                    let p2: f64 = (a..b).map(|i| scores.get(i, k) * scores.get(i, k)).sum();
                    (p2, k)
                })
                .collect();
            proj.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            if proj.len() < g {
                return Err(Error::Matching("ran out of discrete modes".into()));
            }
            if proj[g - 1].0 <= 1e-12 {
                return Err(Error::Matching(format!(
                    "rank-deficient degenerate group at ω = {}",
                    analytic_omega[a]
                )));
            }
            let chosen: Vec<usize> = proj[..g].iter().map(|&(_, k)| k).collect();
            let projections: Vec<f64> = proj[..g].iter().map(|&(p2, _)| num::sqrt(p2)).collect();
            // Within the group, pair greedily by individual score.
            let mut used = vec![false; g];
            for i in a..b {
                let mut best = usize::MAX;
                let mut best_score = -1.0;
                for (t, &k) in chosen.iter().enumerate() {
                    if used[t] {
                        continue;
                    }
                    let s = scores.get(i, k);
                    if s > best_score {
                        best_score = s;
                        best = t;
                    }
                }
                used[best] = true;
                assigned[chosen[best]] = true;
                permutation[i] = chosen[best];
                let pr = projections[best].clamp(0.0, 1.0);
                errors[i] = num::sqrt((2.0 * (1.0 - pr)).max(0.0));
            }
        }
        a = b;
    }
    Ok((permutation, errors))
}

fn finish_matching(
    spectrum: &Spectrum,
    analytic: &AnalyticModeSet,
    permutation: Vec<usize>,
    errors: Vec<f64>,
    flags: Option<Vec<bool>>,
) -> MatchedSpectrum {
    let n_cmp = permutation.len();
    let analytic_omega: Vec<f64> = analytic.modes[..n_cmp].iter().map(|m| m.omega).collect();
    let discrete_omega: Vec<f64> = permutation
        .iter()
        .map(|&k| spectrum.frequencies[k])
        .collect();
    let normalized: Vec<f64> = analytic_omega
        .iter()
        .zip(discrete_omega.iter())
        .map(|(&a, &d)| if a > 0.0 { d / a } else { d })
        .collect();
    let outlier_flags = match flags {
        Some(f) => permutation.iter().map(|&k| f[k]).collect(),
        None => Vec::new(),
    };
    MatchedSpectrum {
        permutation,
        analytic_omega,
        discrete_omega,
        normalized,
        mode_errors: errors,
        outlier_flags,
    }
}

/// Mode matching for 1D problems. Errors at non-degenerate positions are
/// computed by direct quadrature of the normalized, sign-aligned
/// difference (accurate far below the `√(2(1−score))` round-off floor);
/// degenerate-group positions report subspace distances.
pub fn match_modes_1d(
    spectrum: &Spectrum,
    space: &MultipatchSpace1D,
    analytic: &AnalyticModeSet,
    ops: Option<&OperatorSet>,
) -> Result<MatchedSpectrum> {
    let grid = build_grid(space, l2_points_per_element(space.degree()))?;
    let nq = grid.xs.len();
    let n_modes = spectrum.len();
    let n_an = analytic.modes.len();
    // Discrete values at the grid.
    let v = grid.phi.mul(&spectrum.vectors);
    // Analytic values.
    let mut s = DMat::zeros(nq, n_an);
    for (ai, mode) in analytic.modes.iter().enumerate() {
        for (r, &x) in grid.xs.iter().enumerate() {
            s.set(r, ai, analytic.eval_1d(mode, x));
        }
    }
    let mut sw = s.clone();
    for r in 0..nq {
        let w = grid.ws[r];
        for val in sw.row_mut(r).iter_mut() {
            *val *= w;
        }
    }
    let ip = sw.tr_mul(&v); // n_an × n_modes
    let mut norm_d = vec![0.0; n_modes];
    for k in 0..n_modes {
        let mut acc = 0.0;
        for r in 0..nq {
            let val = v.get(r, k);
            acc += grid.ws[r] * val * val;
        }
        norm_d[k] = num::sqrt(acc);
    }
    let mut norm_a = vec![0.0; n_an];
    for ai in 0..n_an {
        let mut acc = 0.0;
        for r in 0..nq {
            let val = s.get(r, ai);
            acc += grid.ws[r] * val * val;
        }
        norm_a[ai] = num::sqrt(acc);
    }
    let scores = DMat::from_fn(n_an, n_modes, |a, k| {
        let denom = norm_a[a] * norm_d[k];
        if denom > 0.0 {
            (ip.get(a, k) / denom).abs()
        } else if norm_a[a] == 0.0 && norm_d[k] == 0.0 {
            1.0
        } else {
            0.0
        }
    });
    let omegas: Vec<f64> = analytic.modes.iter().map(|m| m.omega).collect();
    let (permutation, mut errors) = assign_modes(&omegas, &scores, n_modes)?;
    // Replace score-derived errors by direct differences outside degenerate
    // groups: normalize the discrete mode to the analytic norm, align the
    // sign, subtract on the grid.
    let mut a = 0usize;
    while a < permutation.len() {
        let mut b = a + 1;
        while b < permutation.len()
            && (omegas[b] - omegas[a]).abs() <= 1e-9 * omegas[a].abs().max(1.0)
        {
            b += 1;
        }
        if b - a == 1 {
            let k = permutation[a];
            if norm_d[k] > 0.0 && norm_a[a] > 0.0 {
                let gamma =
                    (norm_a[a] / norm_d[k]) * if ip.get(a, k) >= 0.0 { 1.0 } else { -1.0 };
                let mut acc = 0.0;
                for r in 0..nq {
                    let d = gamma * v.get(r, k) - s.get(r, a);
                    acc += grid.ws[r] * d * d;
                }
                errors[a] = num::sqrt(acc) / norm_a[a];
            }
        }
        a = b;
    }
    let flags = ops.map(|o| flag_outliers(spectrum, o));
    Ok(finish_matching(spectrum, analytic, permutation, errors, flags))
}

/// Mode matching for the tensor-product 2D problems; exploits the
/// separability of the analytic modes.
pub fn match_modes_2d(
    spectrum: &Spectrum,
    space: &MultipatchSpace2D,
    analytic: &AnalyticModeSet,
    ops: Option<&OperatorSet>,
) -> Result<MatchedSpectrum> {
    if !matches!(
        analytic.problem,
        AnalyticProblem::FixedMembrane | AnalyticProblem::SupportedPlate
    ) {
        return Err(Error::InvalidArgument(
            "2D matching expects a membrane or plate mode set".into(),
        ));
    }
    let pi = core::f64::consts::PI;
    let p = space.degree();
    let gx = build_grid(space.dir_x(), l2_points_per_element(p))?;
    let gy = build_grid(space.dir_y(), l2_points_per_element(p))?;
    let (nx, ny) = (space.dir_x().dim(), space.dir_y().dim());
    let n_modes = spectrum.len();
    // Largest tensor index appearing in the analytic set.
    let (mut mx, mut my) = (0usize, 0usize);
    for mode in &analytic.modes {
        if let ModeIndex::TwoD(m, n) = mode.index {
            mx = mx.max(m);
            my = my.max(n);
        }
    }
    // Weighted sine tables per direction.
    let sxw = DMat::from_fn(gx.xs.len(), mx, |r, m| {
        gx.ws[r] * num::sin((m + 1) as f64 * pi * gx.xs[r])
    });
    let syw = DMat::from_fn(gy.xs.len(), my, |r, n| {
        gy.ws[r] * num::sin((n + 1) as f64 * pi * gy.xs[r])
    });
    let sine_norm = |grid: &Grid1D, k: usize| -> f64 {
        let mut acc = 0.0;
        for (r, &x) in grid.xs.iter().enumerate() {
            let v = num::sin(k as f64 * pi * x);
            acc += grid.ws[r] * v * v;
        }
        num::sqrt(acc)
    };
    let norm_ax: Vec<f64> = (1..=mx).map(|m| sine_norm(&gx, m)).collect();
    let norm_ay: Vec<f64> = (1..=my).map(|n| sine_norm(&gy, n)).collect();

    let n_an = analytic.modes.len();
    let mut scores = DMat::zeros(n_an, n_modes);
    for k in 0..n_modes {
        let vk = spectrum.mode(k);
        let c = DMat::from_fn(nx, ny, |i, j| vk[i * ny + j]);
        // Values on the tensor grid: Φx C Φyᵀ.
        let u = gx.phi.mul(&c).mul(&gy.phi.transpose());
        let mut norm2 = 0.0;
        for (r, &wr) in gx.ws.iter().enumerate() {
            for (s, &ws) in gy.ws.iter().enumerate() {
                let val = u.get(r, s);
                norm2 += wr * ws * val * val;
            }
        }
        let norm_d = num::sqrt(norm2);
        let t = sxw.tr_mul(&u.mul(&syw)); // mx × my inner products
        for (ai, mode) in analytic.modes.iter().enumerate() {
            let ModeIndex::TwoD(m, n) = mode.index else {
                continue;
            };
            let denom = norm_ax[m - 1] * norm_ay[n - 1] * norm_d;
            let s = if denom > 0.0 {
                (t.get(m - 1, n - 1) / denom).abs()
            } else {
                0.0
            };
            scores.set(ai, k, s);
        }
    }
    let omegas: Vec<f64> = analytic.modes.iter().map(|m| m.omega).collect();
    let (permutation, errors) = assign_modes(&omegas, &scores, n_modes)?;
    let flags = ops.map(|o| flag_outliers(spectrum, o));
    Ok(finish_matching(spectrum, analytic, permutation, errors, flags))
}

/// Outlier-flagging separation factor. Interface Rayleigh quotients of
/// regular modes ramp smoothly toward the top of the spectrum while the
/// interior outliers sit a multiplicative gap above them; the flag boundary
/// is the largest consecutive ratio in the sorted quotients, accepted only
/// when it exceeds this factor. Validated against the closed-form interior
/// outlier counts.
pub const OUTLIER_THRESHOLD: f64 = 10.0;

/// Flags the modes above the dominant gap of the combined
/// interface-penalty Rayleigh quotients `vᵀ K_Γ v / vᵀ M v`. Returns all
/// false when no gap of at least [`OUTLIER_THRESHOLD`] exists within the
/// top third of the spectrum (in particular when there are no interfaces).
pub fn flag_outliers(spectrum: &Spectrum, ops: &OperatorSet) -> Vec<bool> {
    let n = spectrum.len();
    let quotients: Vec<f64> = (0..n)
        .map(|k| {
            let v = spectrum.mode(k);
            let m = ops.mass.mat.quadratic_form(&v);
            if m <= 0.0 {
                return 0.0;
            }
            (ops.combined_quadratic_form(&v) / m).max(0.0)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| quotients[b].partial_cmp(&quotients[a]).unwrap());
    let mut flags = vec![false; n];
    if n < 2 || quotients[order[0]] <= 0.0 {
        return flags;
    }
    let scan = (n / 3).max(1).min(n - 1);
    let mut best_split = 0usize;
    let mut best_ratio = 0.0_f64;
    for s in 1..=scan {
        let hi = quotients[order[s - 1]];
        let lo = quotients[order[s]].max(1e-300);
        let ratio = hi / lo;
        if ratio > best_ratio {
            best_ratio = ratio;
            best_split = s;
        }
    }
    if best_ratio >= OUTLIER_THRESHOLD {
        for &k in &order[..best_split] {
            flags[k] = true;
        }
    }
    flags
}

/// L² norm of the difference between a reduced-coefficient field and a
/// closed-form reference on the tensor quadrature grid, relative to the
/// reference norm. Used by the transient studies.
pub fn relative_l2_error_2d(
    space: &MultipatchSpace2D,
    coeffs: &[f64],
    reference: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let p = space.degree();
    let gx = build_grid(space.dir_x(), l2_points_per_element(p))?;
    let gy = build_grid(space.dir_y(), l2_points_per_element(p))?;
    let (nx, ny) = (space.dir_x().dim(), space.dir_y().dim());
    let c = DMat::from_fn(nx, ny, |i, j| coeffs[i * ny + j]);
    let u = gx.phi.mul(&c).mul(&gy.phi.transpose());
    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for (r, (&x, &wr)) in gx.xs.iter().zip(gx.ws.iter()).enumerate() {
        for (s, (&y, &ws)) in gy.xs.iter().zip(gy.ws.iter()).enumerate() {
            let w = wr * ws;
            let want = reference(x, y);
            let d = u.get(r, s) - want;
            err2 += w * d * d;
            ref2 += w * want * want;
        }
    }
    if ref2 <= 0.0 {
        return Err(Error::InvalidArgument("reference field has zero norm".into()));
    }
    Ok(num::sqrt(err2 / ref2))
}

/// L² projection of a closed-form field onto the reduced 2D basis
/// (consistent-mass Galerkin projection).
pub fn project_field_2d(
    space: &MultipatchSpace2D,
    mass: &crate::linalg::SymMat,
    field: impl Fn(f64, f64) -> f64,
) -> Result<Vec<f64>> {
    let p = space.degree();
    let gx = build_grid(space.dir_x(), l2_points_per_element(p))?;
    let gy = build_grid(space.dir_y(), l2_points_per_element(p))?;
    let (nx, ny) = (space.dir_x().dim(), space.dir_y().dim());
    // Load vector b_ij = ∫ φ_i(x) φ_j(y) f(x,y): evaluate f on the grid and
    // contract with the weighted basis tables.
    let f = DMat::from_fn(gx.xs.len(), gy.xs.len(), |r, s| {
        gx.ws[r] * gy.ws[s] * field(gx.xs[r], gy.xs[s])
    });
    let b = gx.phi.tr_mul(&f.mul(&gy.phi));
    let mut rhs: Vec<f64> = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            rhs.push(b.get(i, j));
        }
    }
    let chol = crate::linalg::Cholesky::factor(mass)?;
    chol.solve(&mut rhs);
    Ok(rhs)
}

/// Least-squares slope of `log(error)` against `log(h)`: the observed
/// convergence order.
pub fn convergence_order(hs: &[f64], errors: &[f64]) -> Result<f64> {
    if hs.len() < 3 || hs.len() != errors.len() {
        return Err(Error::InvalidArgument(
            "need at least three refinement levels".into(),
        ));
    }
    if errors.iter().any(|&e| e <= 0.0) || hs.iter().any(|&h| h <= 0.0) {
        return Err(Error::InvalidArgument(
            "convergence fit needs positive mesh sizes and errors".into(),
        ));
    }
    let lx: Vec<f64> = hs.iter().map(|&h| num::ln(h)).collect();
    let ly: Vec<f64> = errors.iter().map(|&e| num::ln(e)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&lx), mean(&ly));
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in lx.iter().zip(ly.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    Ok(sxy / sxx)
}
