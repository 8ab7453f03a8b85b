//! Property tests of the structural invariants.

use proptest::prelude::*;
use patchspec::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_partition_of_unity(
        p in 1usize..=5,
        smooth_pick in 0usize..5,
        nele in 1usize..=9,
        xr in 0.0f64..1.0,
    ) {
        let k = smooth_pick.min(p - 1);
        let sp = SplineSpace1D::uniform(p, nele, [0.0, 1.0], k).unwrap();
        let (_, vals) = sp.eval_basis(xr, 0).unwrap();
        let sum: f64 = vals.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(vals.iter().all(|&v| v >= -1e-14));
        // Derivative rows sum to zero.
        if p >= 1 {
            let (_, dv) = sp.eval_basis(xr, 1).unwrap();
            let dsum: f64 = dv.iter().sum();
            prop_assert!(dsum.abs() < 1e-9 * (1.0 + dv.iter().fold(0.0f64, |m, &v| m.max(v.abs()))));
        }
    }

    #[test]
    fn gauss_rules_integrate_polynomials(
        n in 1usize..=16,
        coeffs in proptest::collection::vec(-2.0f64..2.0, 1..8),
    ) {
        let rule = gauss_rule(n).unwrap();
        let degree = (coeffs.len() - 1).min(2 * n - 1);
        let eval = |x: f64| -> f64 {
            coeffs[..=degree].iter().rev().fold(0.0, |acc, &c| acc * x + c)
        };
        let got: f64 = rule
            .points
            .iter()
            .zip(rule.weights.iter())
            .map(|(&x, &w)| w * eval(x))
            .sum();
        let exact: f64 = coeffs[..=degree]
            .iter()
            .enumerate()
            .map(|(k, &c)| c / (k as f64 + 1.0))
            .sum();
        prop_assert!((got - exact).abs() < 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn symmetric_pencils_solve_consistently(
        seed in 0u64..1000,
        n in 2usize..=10,
    ) {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(seed);
        let mut k = linalg::SymMat::zeros(n);
        let mut m = linalg::SymMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                k.set(i, j, rng.gen_range(-1.0..1.0));
                m.set(i, j, rng.gen_range(-0.3..0.3));
            }
            k.add_to(i, i, 2.0 + n as f64);
            m.add_to(i, i, 1.0 + 0.3 * n as f64);
        }
        let sp = solve_gevp(&k, &m).unwrap();
        for w in sp.eigenvalues.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        let (res, orth) = eigensolve::spectrum_defects(&sp, &k, &m);
        prop_assert!(res < 1e-9, "residual {res}");
        prop_assert!(orth < 1e-9, "orthonormality {orth}");
    }
}

#[test]
fn matching_is_permutation_invariant() {
    // Re-running the matching on a column-permuted spectrum recovers the
    // same analytic-to-frequency pairing.
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 2, 2, 8).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space.clone())).unwrap();
    let sp = solve_gevp(&ops.stiffness.mat, &ops.mass.mat).unwrap();
    let analytic = AnalyticModeSet::new_1d(AnalyticProblem::FixedBar, sp.len()).unwrap();
    let matched = match_modes_1d(&sp, &space, &analytic, None).unwrap();

    let n = sp.len();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let mut vectors = linalg::DMat::zeros(n, n);
    for (new, &old) in perm.iter().enumerate() {
        vectors.set_col(new, &sp.mode(old));
    }
    let shuffled = Spectrum {
        eigenvalues: perm.iter().map(|&o| sp.eigenvalues[o]).collect(),
        frequencies: perm.iter().map(|&o| sp.frequencies[o]).collect(),
        vectors,
        normalization: eigensolve::Normalization::MassOrthonormal,
    };
    let rematched = match_modes_1d(&shuffled, &space, &analytic, None).unwrap();
    for pos in 0..matched.len() {
        assert_eq!(
            matched.discrete_omega[pos], rematched.discrete_omega[pos],
            "pairing changed at position {pos}"
        );
    }
}

#[test]
fn power_iteration_matches_full_solve_on_a_bar() {
    // 200-DOF scale: two patches of 100 quadratic elements.
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 2, 2, 100).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space)).unwrap();
    let sp = solve_gevp(&ops.stiffness.mat, &ops.mass.mat).unwrap();
    let (omega, _) = max_eigenpair_default(&ops.stiffness.mat, &ops.mass.mat).unwrap();
    let top = sp.max_frequency();
    assert!(
        (omega - top).abs() <= 1e-8 * top,
        "power {omega} vs full {top}"
    );
}

#[test]
fn per_interface_parameters_reduce_to_per_level() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let space = MultipatchSpace1D::build(ProblemKind::fixed_bar(), 3, 3, 5).unwrap();
    let ops = OperatorSet::assemble(&Space::OneD(space)).unwrap();
    let levels = ops.n_levels();
    let interfaces = ops.n_interfaces();
    let mut rng = StdRng::seed_from_u64(21);
    let alpha: Vec<f64> = (0..levels).map(|_| rng.gen_range(0.0..1.0)).collect();
    let beta: Vec<f64> = (0..levels).map(|_| rng.gen_range(0.0..1e-3)).collect();
    let per_level = perturb(
        &ops,
        &PerturbationParams {
            f: 2.0,
            c: None,
            scaling: ParamScaling::PerLevel {
                alpha: alpha.clone(),
                beta: beta.clone(),
            },
            trace: vec![],
        },
    )
    .unwrap();
    let per_interface = perturb(
        &ops,
        &PerturbationParams {
            f: 2.0,
            c: None,
            scaling: ParamScaling::PerInterface {
                alpha: alpha.iter().map(|&a| vec![a; interfaces]).collect(),
                beta: beta.iter().map(|&b| vec![b; interfaces]).collect(),
            },
            trace: vec![],
        },
    )
    .unwrap();
    for i in 0..ops.dim() {
        for j in 0..=i {
            let a = per_level.k_tilde.get(i, j);
            let b = per_interface.k_tilde.get(i, j);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            let a = per_level.m_tilde.get(i, j);
            let b = per_interface.m_tilde.get(i, j);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}

#[test]
fn core_types_are_shareable_across_workers() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<SplineSpace1D>();
    assert_send_sync::<MultipatchSpace1D>();
    assert_send_sync::<MultipatchSpace2D>();
    assert_send_sync::<OperatorSet>();
    assert_send_sync::<Spectrum>();
    assert_send_sync::<PerturbationParams>();
}
