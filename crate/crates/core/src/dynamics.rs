//! Explicit central-difference time integration of the perturbed
//! semi-discrete system `M̃ ü = -K̃ u` and the critical-time-step bound
//! `Δt_crit = 2/ω_max`. The mass-side factor is computed once; each step
//! costs one stiffness multiply and two triangular solves.

use alloc::vec::Vec;

use crate::assembly::OperatorSet;
use crate::eigensolve::max_eigenpair;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::perturbation::{perturb, PerturbationParams};

/// Stability bound of the undamped central-difference scheme.
pub fn critical_timestep(omega_max: f64) -> Result<f64> {
    if !(omega_max > 0.0) {
        return Err(Error::InvalidArgument(
            "critical time step needs a positive maximum frequency".into(),
        ));
    }
    Ok(2.0 / omega_max)
}

/// Displacement pair around one time level.
#[derive(Debug, Clone)]
pub struct TransientState {
    pub u_current: Vec<f64>,
    pub u_previous: Vec<f64>,
    pub t: f64,
    pub dt: f64,
}

/// Sampled states of one integration run; the final state is always the
/// last sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<TransientState>,
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &TransientState {
        self.states.last().expect("trajectory has at least one state")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// Keep every `sample_stride`-th step (0 picks a stride that keeps
    /// roughly 256 samples); the final step is always kept.
    pub sample_stride: usize,
    /// Skip the `Δt < Δt_crit` guard (used only to demonstrate blow-up).
    pub skip_stability_check: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            sample_stride: 0,
            skip_stability_check: false,
        }
    }
}

/// Integrates `M̃ ü = -K̃ u` from `(u0, v0)` to `t_end` with the
/// central-difference update
/// `u_{k+1} = 2 u_k - u_{k-1} - Δt² M̃⁻¹ K̃ u_k`,
/// started by `u_{-1} = u_0 - Δt v_0 + (Δt²/2) M̃⁻¹ (-K̃ u_0)`.
pub fn integrate(
    ops: &OperatorSet,
    params: &PerturbationParams,
    u0: &[f64],
    v0: &[f64],
    dt: f64,
    t_end: f64,
    options: IntegrateOptions,
) -> Result<Trajectory> {
    let n = ops.dim();
    if u0.len() != n || v0.len() != n {
        return Err(Error::InvalidArgument("initial data dimension mismatch".into()));
    }
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= 0".into()));
    }
    let pair = perturb(ops, params)?;
    if !options.skip_stability_check {
        // A stalled power iteration still brackets the maximum well enough
        // for the stability guard.
        let omega_max = match max_eigenpair(&pair.k_tilde, &pair.m_tilde, 1e-8, 10 * n.max(100)) {
            Ok((w, _)) => w,
            Err(Error::PowerIterationStalled { last_frequency, .. }) => last_frequency,
            Err(e) => return Err(e),
        };
        let dt_crit = critical_timestep(omega_max)?;
        if dt >= dt_crit {
            return Err(Error::UnstableTimeStep { dt, dt_crit });
        }
    }
    let chol = Cholesky::factor(&pair.m_tilde)?;
    let steps = libm::floor(t_end / dt + 1e-9) as usize;
    let stride = if options.sample_stride == 0 {
        (steps / 256).max(1)
    } else {
        options.sample_stride
    };

    let mut a0 = pair.k_tilde.matvec(u0);
    for v in a0.iter_mut() {
        *v = -*v;
    }
    chol.solve(&mut a0);
    let mut u_prev: Vec<f64> = (0..n)
        .map(|i| u0[i] - dt * v0[i] + 0.5 * dt * dt * a0[i])
        .collect();
    let mut u_cur = u0.to_vec();
    let mut states = Vec::new();
    states.push(TransientState {
        u_current: u_cur.clone(),
        u_previous: u_prev.clone(),
        t: 0.0,
        dt,
    });
    for k in 1..=steps {
        let mut f = pair.k_tilde.matvec(&u_cur);
        chol.solve(&mut f);
        let u_next: Vec<f64> = (0..n)
            .map(|i| 2.0 * u_cur[i] - u_prev[i] - dt * dt * f[i])
            .collect();
        u_prev = u_cur;
        u_cur = u_next;
        if k % stride == 0 || k == steps {
            states.push(TransientState {
                u_current: u_cur.clone(),
                u_previous: u_prev.clone(),
                t: k as f64 * dt,
                dt,
            });
        }
    }
    Ok(Trajectory { states, dt, steps })
}

/// Kinetic, strain, and total energy of a state; the velocity is the
/// backward difference `(u_k - u_{k-1})/Δt` of the stored pair.
pub fn energy(
    ops: &OperatorSet,
    params: &PerturbationParams,
    state: &TransientState,
) -> Result<(f64, f64, f64)> {
    let pair = perturb(ops, params)?;
    let v: Vec<f64> = state
        .u_current
        .iter()
        .zip(state.u_previous.iter())
        .map(|(c, p)| (c - p) / state.dt)
        .collect();
    let kinetic = 0.5 * pair.m_tilde.quadratic_form(&v);
    let strain = 0.5 * pair.k_tilde.quadratic_form(&state.u_current);
    Ok((kinetic, strain, kinetic + strain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{OperatorKind, Space, SymOperator};
    use crate::linalg::SymMat;
    use crate::multipatch::{MultipatchSpace1D, ProblemKind};

    /// Hand-built operator set around explicit matrices (no interfaces).
    fn toy_ops(k: SymMat, m: SymMat) -> OperatorSet {
        let space = Space::OneD(
            MultipatchSpace1D::build(ProblemKind::fixed_bar().without_removal(), 1, 1, 2).unwrap(),
        );
        let mut ops = OperatorSet::assemble(&space).unwrap();
        assert_eq!(ops.dim(), 1);
        let dim = k.dim();
        ops.mass = SymOperator {
            kind: OperatorKind::Mass,
            mat: m,
        };
        ops.stiffness = SymOperator {
            kind: OperatorKind::Stiffness,
            mat: k,
        };
        ops.penalties.clear();
        ops.combined = SymOperator {
            kind: OperatorKind::CombinedPenalty,
            mat: SymMat::zeros(dim),
        };
        ops
    }

    #[test]
    fn critical_timestep_formula() {
        assert!((critical_timestep(2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(critical_timestep(0.0).is_err());
        assert!(critical_timestep(-1.0).is_err());
    }

    #[test]
    fn scalar_oscillator_tracks_cosine() {
        let omega = 3.0;
        let mut k = SymMat::zeros(1);
        k.set(0, 0, omega * omega);
        let mut m = SymMat::zeros(1);
        m.set(0, 0, 1.0);
        let ops = toy_ops(k, m);
        let dt = 1e-4;
        let t_end = 2.0;
        let traj = integrate(
            &ops,
            &PerturbationParams::none(),
            &[1.0],
            &[0.0],
            dt,
            t_end,
            IntegrateOptions::default(),
        )
        .unwrap();
        let fin = traj.final_state();
        let want = libm::cos(omega * fin.t);
        assert!(
            (fin.u_current[0] - want).abs() < 50.0 * dt * dt * omega * omega * t_end,
            "{} vs {}",
            fin.u_current[0],
            want
        );
    }

    #[test]
    fn energy_bounded_at_half_critical_step() {
        let omega = 2.0;
        let mut k = SymMat::zeros(1);
        k.set(0, 0, omega * omega);
        let mut m = SymMat::zeros(1);
        m.set(0, 0, 1.0);
        let ops = toy_ops(k, m);
        let dt = 0.5 * critical_timestep(omega).unwrap();
        let traj = integrate(
            &ops,
            &PerturbationParams::none(),
            &[1.0],
            &[0.0],
            dt,
            dt * 1e4,
            IntegrateOptions {
                sample_stride: 100,
                skip_stability_check: false,
            },
        )
        .unwrap();
        let (_, _, e0) = energy(&ops, &PerturbationParams::none(), &traj.states[1]).unwrap();
        for st in &traj.states[1..] {
            let (_, _, e) = energy(&ops, &PerturbationParams::none(), st).unwrap();
            assert!(e < 4.0 * e0 && e > 0.25 * e0, "energy drifted to {e} from {e0}");
        }
    }

    #[test]
    fn unstable_step_is_refused_and_blows_up_unguarded() {
        // 2-DOF diagonal system with eigenfrequencies 1 and 3.
        let mut k = SymMat::zeros(2);
        k.set(0, 0, 1.0);
        k.set(1, 1, 9.0);
        let mut m = SymMat::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        let ops = toy_ops(k, m);
        let dt_crit = 2.0 / 3.0;
        let dt = 1.02 * dt_crit;
        let refused = integrate(
            &ops,
            &PerturbationParams::none(),
            &[1.0, 1.0],
            &[0.0, 0.0],
            dt,
            10.0,
            IntegrateOptions::default(),
        );
        assert!(matches!(refused, Err(Error::UnstableTimeStep { .. })));

        let traj = integrate(
            &ops,
            &PerturbationParams::none(),
            &[1.0, 1.0],
            &[0.0, 0.0],
            dt,
            dt * 100.0,
            IntegrateOptions {
                sample_stride: 1,
                skip_stability_check: true,
            },
        )
        .unwrap();
        let (_, _, e_start) = energy(&ops, &PerturbationParams::none(), &traj.states[1]).unwrap();
        let (_, _, e_end) = energy(&ops, &PerturbationParams::none(), traj.final_state()).unwrap();
        assert!(e_end > 1e6 * e_start, "no blow-up: {e_start} -> {e_end}");
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let mut k = SymMat::zeros(2);
        k.set(0, 0, 4.0);
        k.set(1, 1, 1.0);
        let mut m = SymMat::zeros(2);
        m.set(0, 0, 1.0);
        m.set(1, 1, 1.0);
        let ops = toy_ops(k, m);
        let traj = integrate(
            &ops,
            &PerturbationParams::none(),
            &[0.0, 0.0],
            &[0.0, 0.0],
            0.01,
            1.0,
            IntegrateOptions::default(),
        )
        .unwrap();
        for st in &traj.states {
            let (kin, strain, total) = energy(&ops, &PerturbationParams::none(), st).unwrap();
            assert_eq!(kin, 0.0);
            assert_eq!(strain, 0.0);
            assert_eq!(total, 0.0);
        }
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let space = Space::OneD(
            MultipatchSpace1D::build(ProblemKind::fixed_bar(), 2, 2, 6).unwrap(),
        );
        let ops = OperatorSet::assemble(&space).unwrap();
        let n = ops.dim();
        let u0: Vec<f64> = (0..n).map(|i| libm::sin(i as f64 + 0.3)).collect();
        let v0: Vec<f64> = (0..n).map(|i| 0.1 * libm::cos(2.0 * i as f64)).collect();
        let pair = perturb(&ops, &PerturbationParams::none()).unwrap();
        let (omega_max, _) =
            max_eigenpair(&pair.k_tilde, &pair.m_tilde, 1e-10, 10 * n.max(100)).unwrap();
        let dt = 0.2 * critical_timestep(omega_max).unwrap();
        let k_steps = 40usize;
        let fwd = integrate(
            &ops,
            &PerturbationParams::none(),
            &u0,
            &v0,
            dt,
            dt * (k_steps as f64 + 0.5),
            IntegrateOptions {
                sample_stride: 1,
                skip_stability_check: false,
            },
        )
        .unwrap();
        assert_eq!(fwd.steps, k_steps);
        // The update is time-symmetric: starting from the swapped final pair
        // (u_{K-1}, u_K) and stepping K-1 times reproduces u_0. The startup
        // velocity is chosen so the internal previous level equals u_K.
        let last = fwd.final_state();
        let chol = Cholesky::factor(&pair.m_tilde).unwrap();
        let mut a0 = pair.k_tilde.matvec(&last.u_previous);
        for v in a0.iter_mut() {
            *v = -*v;
        }
        chol.solve(&mut a0);
        let v0_rev: Vec<f64> = (0..n)
            .map(|i| (last.u_previous[i] - last.u_current[i] + 0.5 * dt * dt * a0[i]) / dt)
            .collect();
        let rev = integrate(
            &ops,
            &PerturbationParams::none(),
            &last.u_previous.clone(),
            &v0_rev,
            dt,
            dt * (k_steps as f64 - 0.5),
            IntegrateOptions {
                sample_stride: 1,
                skip_stability_check: false,
            },
        )
        .unwrap();
        assert_eq!(rev.steps, k_steps - 1);
        let back = rev.final_state();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            err = err.max((back.u_current[i] - u0[i]).abs());
            scale = scale.max(u0[i].abs());
        }
        assert!(err <= 1e-8 * scale.max(1.0), "reversal error {err}");
    }
}
