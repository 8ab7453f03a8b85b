//! Behavioral tests of spectrum post-processing on assembled problems.

use patchspec::*;

fn solve_ops(ops: &OperatorSet) -> Spectrum {
    solve_gevp(&ops.stiffness.mat, &ops.mass.mat).unwrap()
}

#[test]
fn single_patch_fixed_bar_matches_identity_on_lower_half() {
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 3, 1, 30).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space.clone())).unwrap();
    let sp = solve_ops(&ops);
    let analytic = AnalyticModeSet::new_1d(AnalyticProblem::FixedBar, sp.len()).unwrap();
    let matched = match_modes_1d(&sp, &space, &analytic, Some(&ops)).unwrap();
    for n in 0..sp.len() / 2 {
        assert_eq!(matched.permutation[n], n, "mode {n} not identity-matched");
    }
    // Outlier-free single patch: no flags at all.
    assert!(matched.outlier_flags.iter().all(|&f| !f));
}

#[test]
fn projected_analytic_modes_match_exactly() {
    // Project the analytic modes onto the spline space and feed them back
    // as a fake spectrum: matching must return the identity with tiny
    // errors on the well-resolved lower third.
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 3, 1, 24).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space.clone())).unwrap();
    let n = ops.dim();
    let analytic = AnalyticModeSet::new_1d(AnalyticProblem::FixedBar, n).unwrap();
    // 1D projection through the 2D helper is not available; do it directly
    // with the mass matrix and a fine midpoint rule.
    let chol = linalg::Cholesky::factor(&ops.mass.mat).unwrap();
    let mut vectors = linalg::DMat::zeros(n, n);
    let quad = gauss_rule(8).unwrap();
    for (a, mode) in analytic.modes.iter().enumerate() {
        let mut rhs = vec![0.0; space.raw_dim()];
        for patch_idx in 0..space.n_patches() {
            let patch = &space.patches()[patch_idx];
            let h = patch.element_size();
            let [x0, _] = patch.domain();
            for e in 0..patch.n_elements() {
                for (&pt, &w) in quad.points.iter().zip(quad.weights.iter()) {
                    let x = x0 + (e as f64 + pt) * h;
                    let (first, vals) = patch.eval_basis(x, 0).unwrap();
                    let f = analytic.eval_1d(mode, x);
                    for (j, &v) in vals.iter().enumerate() {
                        rhs[space.patch_offset(patch_idx) + first + j] += w * h * v * f;
                    }
                }
            }
        }
        let mut reduced = space.extraction().tr_matvec(&rhs);
        chol.solve(&mut reduced);
        vectors.set_col(a, &reduced);
    }
    let fake = Spectrum {
        eigenvalues: analytic.modes.iter().map(|m| m.omega * m.omega).collect(),
        frequencies: analytic.modes.iter().map(|m| m.omega).collect(),
        vectors,
        normalization: eigensolve::Normalization::MassOrthonormal,
    };
    let matched = match_modes_1d(&fake, &space, &analytic, None).unwrap();
    // Projection error grows like (nπh)^{p+1}: essentially zero at the
    // bottom, still small over the lower third.
    for a in 0..n / 3 {
        assert_eq!(matched.permutation[a], a);
        let bound = if a < 3 { 1e-4 } else { 1e-2 };
        assert!(
            matched.mode_errors[a] < bound,
            "mode {a}: error {}",
            matched.mode_errors[a]
        );
        assert!((matched.normalized[a] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn free_bar_outliers_match_top_indices_with_large_errors() {
    let space = MultipatchSpace1D::build(ProblemKind::free_bar(), 3, 2, 12).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space.clone())).unwrap();
    let sp = solve_ops(&ops);
    let analytic = AnalyticModeSet::new_1d(AnalyticProblem::FreeBar, sp.len()).unwrap();
    let matched = match_modes_1d(&sp, &space, &analytic, Some(&ops)).unwrap();
    let n = sp.len();
    // Two interior outliers for p=3, two patches.
    let flagged: Vec<usize> = (0..n).filter(|&i| matched.outlier_flags[i]).collect();
    assert_eq!(flagged.len(), 2, "flags: {flagged:?}");
    // They are matched to the top analytic positions and fit poorly there.
    for &pos in &flagged {
        assert!(pos >= n - 4, "outlier matched to low position {pos}");
        assert!(
            matched.mode_errors[pos] > 0.2,
            "outlier at {pos} unexpectedly accurate: {}",
            matched.mode_errors[pos]
        );
    }
    // The well-resolved lower half stays accurate.
    for pos in 1..n / 2 {
        assert!(
            matched.mode_errors[pos] < 0.05,
            "mode {pos} error {}",
            matched.mode_errors[pos]
        );
    }
}

#[test]
fn pragmatic_estimation_compresses_the_spectrum_top() {
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 2, 2, 50).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space.clone())).unwrap();
    let analytic = AnalyticModeSet::new_1d(AnalyticProblem::FixedBar, ops.dim()).unwrap();
    let before = solve_ops(&ops);
    let matched_before = match_modes_1d(&before, &space, &analytic, None).unwrap();
    let params = estimate_pragmatic(&ops, 2.0, 0.9, 30).unwrap();
    let pair = perturb(&ops, &params).unwrap();
    let after = solve_gevp(&pair.k_tilde, &pair.m_tilde).unwrap();
    let matched_after = match_modes_1d(&after, &space, &analytic, None).unwrap();
    let max_before = matched_before
        .normalized
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    let max_after = matched_after
        .normalized
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    // Ratios are bounded below by one; compare the overshoot above it.
    assert!(
        max_after - 1.0 < 0.5 * (max_before - 1.0) && max_after < 1.1,
        "max normalized frequency {max_before} -> {max_after}"
    );
    // Lower half of the spectrum: ratios stay in the IGA band [1, 1.01].
    let n = matched_after.len();
    for pos in 0..n / 2 {
        let r = matched_after.normalized[pos];
        assert!((1.0 - 1e-9..1.01).contains(&r), "position {pos}: ratio {r}");
    }
    // With exact analytic targets the suppressed outlier also fits its
    // analytic counterpart better than before.
    let n = ops.dim();
    let target = n as f64 * std::f64::consts::PI;
    let exact = estimate_exact_targets_1d(&ops, 2.0, &[target], 30).unwrap();
    let pair = perturb(&ops, &exact).unwrap();
    let sp_exact = solve_gevp(&pair.k_tilde, &pair.m_tilde).unwrap();
    let matched_exact = match_modes_1d(&sp_exact, &space, &analytic, None).unwrap();
    let top = matched_before.len() - 1;
    assert!(
        matched_exact.mode_errors[top] < matched_before.mode_errors[top],
        "outlier mode error {} -> {}",
        matched_before.mode_errors[top],
        matched_exact.mode_errors[top]
    );
}

#[test]
fn membrane_flag_count_follows_tensor_prediction() {
    let space =
        MultipatchSpace2D::build(ProblemKind::fixed_bar(), 2, [2, 2], [8, 8]).unwrap();
    let n1 = space.dir_x().dim();
    let ops = OperatorSet::assemble(&Space::TwoD(space.clone())).unwrap();
    let sp = solve_ops(&ops);
    let flags = flag_outliers(&sp, &ops);
    let count = flags.iter().filter(|&&b| b).count();
    let n_out_1d = count_interior_outliers(OperatorOrder::Second, 2, 2);
    let expected = n1 * n1 - (n1 - n_out_1d) * (n1 - n_out_1d);
    assert_eq!(count, expected);
}

#[test]
fn membrane_matching_handles_degenerate_pairs() {
    let space =
        MultipatchSpace2D::build(ProblemKind::fixed_bar(), 2, [2, 2], [6, 6]).unwrap();
    let ops = OperatorSet::assemble(&Space::TwoD(space.clone())).unwrap();
    let sp = solve_ops(&ops);
    let analytic =
        AnalyticModeSet::new_2d(AnalyticProblem::FixedMembrane, space.dir_x().dim(), space.dir_y().dim())
            .unwrap();
    let matched = match_modes_2d(&sp, &space, &analytic, Some(&ops)).unwrap();
    // Bijection.
    let mut seen = matched.permutation.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), matched.len());
    // The lowest (1,1) mode and the degenerate (1,2)/(2,1) pair are
    // resolved with small errors and ratios near one.
    for pos in 0..3 {
        assert!(
            matched.mode_errors[pos] < 1e-2,
            "position {pos}: error {}",
            matched.mode_errors[pos]
        );
        assert!(
            (matched.normalized[pos] - 1.0).abs() < 1e-2,
            "position {pos}: ratio {}",
            matched.normalized[pos]
        );
    }
}

#[test]
fn smallest_bar_frequency_is_pi() {
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 3, 1, 10).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space)).unwrap();
    let sp = solve_ops(&ops);
    let pi = std::f64::consts::PI;
    assert!(
        (sp.frequencies[0] - pi).abs() < 1e-6,
        "omega_1 = {}",
        sp.frequencies[0]
    );
}

#[test]
fn quadratic_single_patch_band() {
    // Outlier-free single-patch bar at p=2: lower half within [1, 1.02].
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 2, 1, 25).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space)).unwrap();
    let sp = solve_ops(&ops);
    let pi = std::f64::consts::PI;
    for (i, &w) in sp.frequencies.iter().enumerate().take(sp.len() / 2) {
        let ratio = w / ((i + 1) as f64 * pi);
        assert!((1.0 - 1e-12..=1.02).contains(&ratio), "mode {}: {ratio}", i + 1);
    }
}

#[test]
fn bar_lower_spectrum_preserved_to_half_percent() {
    // Two-patch quadratic bar: after suppression, matched non-outlier
    // frequencies in the first 80% move by less than 0.5%.
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 2, 2, 25).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space.clone())).unwrap();
    let analytic = AnalyticModeSet::new_1d(AnalyticProblem::FixedBar, ops.dim()).unwrap();
    let sp0 = solve_ops(&ops);
    let m0 = match_modes_1d(&sp0, &space, &analytic, Some(&ops)).unwrap();
    let params = estimate_pragmatic(&ops, 2.0, 0.9, 40).unwrap();
    let pair = perturb(&ops, &params).unwrap();
    let sp1 = solve_gevp(&pair.k_tilde, &pair.m_tilde).unwrap();
    let m1 = match_modes_1d(&sp1, &space, &analytic, None).unwrap();
    let n80 = 4 * m0.len() / 5;
    for pos in 0..n80 {
        if m0.outlier_flags[pos] {
            continue;
        }
        let rel = ((m1.discrete_omega[pos] - m0.discrete_omega[pos]) / m0.discrete_omega[pos]).abs();
        assert!(rel < 5e-3, "position {pos}: change {rel}");
    }
}
