//! The experiment runners behind `patchspec run`.

use std::path::Path;

use anyhow::Result;
use patchspec::dynamics::{critical_timestep, energy, integrate, IntegrateOptions};
use patchspec::*;

use crate::config::{Config, ConfigError};
use crate::{csvio, gnuplot, mtx, registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProblemId {
    FixedBar,
    FreeBar,
    SupportedBeam,
    FixedMembrane,
    SupportedPlate,
}

impl ProblemId {
    fn parse(cfg: &Config) -> Result<Self, ConfigError> {
        match cfg.require("problem")? {
            "fixed_bar" => Ok(Self::FixedBar),
            "free_bar" => Ok(Self::FreeBar),
            "supported_beam" => Ok(Self::SupportedBeam),
            "fixed_membrane" => Ok(Self::FixedMembrane),
            "supported_plate" => Ok(Self::SupportedPlate),
            other => Err(ConfigError(format!(
                "unknown problem `{other}` (expected fixed_bar, free_bar, supported_beam, fixed_membrane, supported_plate)"
            ))),
        }
    }

    fn is_2d(self) -> bool {
        matches!(self, Self::FixedMembrane | Self::SupportedPlate)
    }

    fn kind(self, removal: bool) -> ProblemKind {
        let base = match self {
            Self::FixedBar | Self::FixedMembrane => ProblemKind::fixed_bar(),
            Self::FreeBar => ProblemKind::free_bar(),
            Self::SupportedBeam | Self::SupportedPlate => ProblemKind::supported_beam(),
        };
        if removal {
            base
        } else {
            base.without_removal()
        }
    }

    fn analytic_1d(self, count: usize) -> Result<AnalyticModeSet> {
        let problem = match self {
            Self::FixedBar => AnalyticProblem::FixedBar,
            Self::FreeBar => AnalyticProblem::FreeBar,
            Self::SupportedBeam => AnalyticProblem::SupportedBeam,
            _ => {
                return Err(ConfigError("expected a one-dimensional problem".into()).into());
            }
        };
        Ok(AnalyticModeSet::new_1d(problem, count)?)
    }

    fn analytic_2d(self, nx: usize, ny: usize) -> Result<AnalyticModeSet> {
        let problem = match self {
            Self::FixedMembrane => AnalyticProblem::FixedMembrane,
            Self::SupportedPlate => AnalyticProblem::SupportedPlate,
            _ => {
                return Err(ConfigError("expected a two-dimensional problem".into()).into());
            }
        };
        Ok(AnalyticModeSet::new_2d(problem, nx, ny)?)
    }
}

fn header_lines(cfg: &Config, experiment: &str) -> Vec<String> {
    let mut lines = vec![format!("patchspec experiment: {experiment}")];
    lines.extend(cfg.resolved_lines());
    lines
}

/// Maximum frequency with stall tolerance.
fn max_frequency(k: &linalg::SymMat, m: &linalg::SymMat) -> Result<f64> {
    match max_eigenpair(k, m, 1e-9, 10 * k.dim().max(100)) {
        Ok((w, _)) => Ok(w),
        Err(Error::PowerIterationStalled { last_frequency, .. }) => Ok(last_frequency),
        Err(e) => Err(e.into()),
    }
}

fn resolve_params(
    cfg: &Config,
    ops: &OperatorSet,
    analytic_top: Option<&[f64]>,
) -> Result<PerturbationParams> {
    let f = cfg.get_f64("f", 2.0)?;
    let c = cfg.get_f64("c", 0.9)?;
    match cfg.get("perturbation").unwrap_or("none") {
        "none" => Ok(PerturbationParams::none()),
        "pragmatic" => Ok(estimate_pragmatic(ops, f, c, 60)?),
        "exact_target" => {
            let Some(tops) = analytic_top else {
                return Err(ConfigError(
                    "exact_target estimation is available for 1D problems only".into(),
                )
                .into());
            };
            Ok(estimate_exact_targets_1d(ops, f, tops, 40)?)
        }
        "penalty_only_f0" => {
            let alpha = cfg.require_f64("alpha")?;
            Ok(PerturbationParams::uniform(alpha, 0.0))
        }
        "mass_only" => {
            let beta = cfg.require_f64("beta")?;
            Ok(PerturbationParams::uniform(0.0, beta))
        }
        other => Err(ConfigError(format!(
            "unknown perturbation `{other}` (expected none, exact_target, pragmatic, penalty_only_f0, mass_only)"
        ))
        .into()),
    }
}

/// Top `p - 1` analytic frequencies, one target per constraint level.
fn exact_targets(analytic: &AnalyticModeSet, levels: usize) -> Vec<f64> {
    let n = analytic.modes.len();
    (0..levels).map(|l| analytic.modes[n - 1 - l].omega).collect()
}

fn write_spectrum_csv(
    path: &Path,
    header: &[String],
    matched: &MatchedSpectrum,
) -> std::io::Result<()> {
    let mut w = csvio::CsvWriter::new(
        header,
        &[
            "n",
            "omega_exact",
            "omega_h",
            "ratio",
            "l2_mode_err",
            "outlier_flag",
        ],
    );
    for pos in 0..matched.len() {
        let flag = matched
            .outlier_flags
            .get(pos)
            .map(|&b| if b { "1" } else { "0" })
            .unwrap_or("0");
        w.row(&[
            (pos + 1).to_string(),
            csvio::format_real(matched.analytic_omega[pos]),
            csvio::format_real(matched.discrete_omega[pos]),
            csvio::format_real(matched.normalized[pos]),
            csvio::format_real(matched.mode_errors[pos]),
            flag.to_string(),
        ]);
    }
    w.write_to(path)
}

fn write_trace_csv(
    path: &Path,
    header: &[String],
    trace: &[IterationRecord],
) -> std::io::Result<()> {
    let mut w = csvio::CsvWriter::new(header, &["iteration", "alpha", "beta", "omega_max"]);
    for rec in trace {
        w.row(&[
            rec.iteration.to_string(),
            csvio::format_real(rec.alpha),
            csvio::format_real(rec.beta),
            csvio::format_real(rec.omega_max),
        ]);
    }
    w.write_to(path)
}

fn export_operator_matrices(cfg: &Config, ops: &OperatorSet, out: &Path) -> Result<()> {
    if cfg.get_bool("export_matrices", false)? {
        mtx::write_symmetric(&out.join("stiffness.mtx"), &ops.stiffness.mat)?;
        mtx::write_symmetric(&out.join("mass.mtx"), &ops.mass.mat)?;
        mtx::write_symmetric(&out.join("penalty_combined.mtx"), &ops.combined.mat)?;
    }
    Ok(())
}

pub fn run(cfg: &Config, out: &Path) -> Result<()> {
    match cfg.require("experiment")? {
        "spectrum_1d" => spectrum_1d(cfg, out),
        "spectrum_2d" => spectrum_2d(cfg, out),
        "regime_probe" => regime_probe_run(cfg, out),
        "estimation_trace" => estimation_trace(cfg, out),
        "convergence" => convergence(cfg, out),
        "dynamics" => dynamics_run(cfg, out),
        "timestep_sweep" => timestep_sweep(cfg, out),
        other => Err(ConfigError(format!(
            "unknown experiment `{other}`; valid names: {}",
            registry::names().join(", ")
        ))
        .into()),
    }
}

fn spectrum_1d(cfg: &Config, out: &Path) -> Result<()> {
    let id = ProblemId::parse(cfg)?;
    if id.is_2d() {
        return Err(ConfigError("spectrum_1d expects a one-dimensional problem".into()).into());
    }
    let degree = cfg.require_usize("degree")?;
    let patches = cfg.get_usize("patches", 2)?;
    let elems = cfg.require_usize("elements_per_patch")?;
    let removal = cfg.get_bool("boundary_outlier_removal", true)?;
    let space = MultipatchSpace1D::build(id.kind(removal), degree, patches, elems)?;
    let ops = OperatorSet::assemble(&Space::OneD(space.clone()))?;
    let analytic = id.analytic_1d(ops.dim())?;
    let targets = exact_targets(&analytic, ops.n_levels());
    let params = resolve_params(cfg, &ops, Some(&targets))?;
    let pair = perturb(&ops, &params)?;
    let sp = solve_gevp(&pair.k_tilde, &pair.m_tilde)?;
    let matched = match_modes_1d(&sp, &space, &analytic, Some(&ops))?;
    let header = header_lines(cfg, "spectrum_1d");
    write_spectrum_csv(&out.join("spectrum.csv"), &header, &matched)?;
    gnuplot::write_script(
        &out.join("spectrum.gp"),
        &gnuplot::spectrum_script("spectrum.csv"),
    )?;
    if !params.trace.is_empty() {
        write_trace_csv(&out.join("trace.csv"), &header, &params.trace)?;
        gnuplot::write_script(&out.join("trace.gp"), &gnuplot::trace_script("trace.csv"))?;
    }
    export_operator_matrices(cfg, &ops, out)?;
    Ok(())
}

fn spectrum_2d(cfg: &Config, out: &Path) -> Result<()> {
    let id = ProblemId::parse(cfg)?;
    if !id.is_2d() {
        return Err(ConfigError("spectrum_2d expects a two-dimensional problem".into()).into());
    }
    let degree = cfg.require_usize("degree")?;
    let patches = cfg.get_usize("patches", 2)?;
    let elems = cfg.require_usize("elements_per_patch")?;
    let removal = cfg.get_bool("boundary_outlier_removal", true)?;
    let space =
        MultipatchSpace2D::build(id.kind(removal), degree, [patches, patches], [elems, elems])?;
    let ops = OperatorSet::assemble(&Space::TwoD(space.clone()))?;
    let params = resolve_params(cfg, &ops, None)?;
    let pair = perturb(&ops, &params)?;
    let sp = solve_gevp(&pair.k_tilde, &pair.m_tilde)?;
    let analytic = id.analytic_2d(space.dir_x().dim(), space.dir_y().dim())?;
    let matched = match_modes_2d(&sp, &space, &analytic, Some(&ops))?;
    let header = header_lines(cfg, "spectrum_2d");
    write_spectrum_csv(&out.join("spectrum.csv"), &header, &matched)?;
    gnuplot::write_script(
        &out.join("spectrum.gp"),
        &gnuplot::spectrum_script("spectrum.csv"),
    )?;
    if !params.trace.is_empty() {
        write_trace_csv(&out.join("trace.csv"), &header, &params.trace)?;
        gnuplot::write_script(&out.join("trace.gp"), &gnuplot::trace_script("trace.csv"))?;
    }
    export_operator_matrices(cfg, &ops, out)?;
    Ok(())
}

fn regime_probe_run(cfg: &Config, out: &Path) -> Result<()> {
    let id = ProblemId::parse(cfg)?;
    if id.is_2d() {
        return Err(ConfigError("regime_probe runs on one-dimensional problems".into()).into());
    }
    let degree = cfg.require_usize("degree")?;
    let patches = cfg.get_usize("patches", 2)?;
    let elems = cfg.require_usize("elements_per_patch")?;
    let space = MultipatchSpace1D::build(id.kind(true), degree, patches, elems)?;
    let ops = OperatorSet::assemble(&Space::OneD(space.clone()))?;
    let regime = match cfg.require("regime")? {
        "stiffness_only" => Regime::StiffnessOnly {
            alpha: cfg.require_f64("alpha")?,
        },
        "low_ratio" => Regime::LowMassRatio {
            f: cfg.get_f64("f", 0.5)?,
            alpha: cfg.require_f64("alpha")?,
        },
        "high_ratio" => Regime::HighMassRatio {
            f: cfg.get_f64("f", 2.0)?,
        },
        "mass_only" => Regime::MassOnly {
            beta: cfg.require_f64("beta")?,
        },
        other => {
            return Err(ConfigError(format!(
                "unknown regime `{other}` (expected stiffness_only, low_ratio, high_ratio, mass_only)"
            ))
            .into());
        }
    };
    let sp = regime_probe(&ops, regime)?;
    let analytic = id.analytic_1d(sp.len())?;
    let matched = match_modes_1d(&sp, &space, &analytic, Some(&ops))?;
    let header = header_lines(cfg, "regime_probe");
    write_spectrum_csv(&out.join("spectrum.csv"), &header, &matched)?;
    gnuplot::write_script(
        &out.join("spectrum.gp"),
        &gnuplot::spectrum_script("spectrum.csv"),
    )?;
    Ok(())
}

fn estimation_trace(cfg: &Config, out: &Path) -> Result<()> {
    let mode = cfg.get("perturbation").unwrap_or("pragmatic");
    if mode != "pragmatic" && mode != "exact_target" {
        return Err(ConfigError(
            "estimation_trace needs perturbation = pragmatic or exact_target".into(),
        )
        .into());
    }
    let id = ProblemId::parse(cfg)?;
    if id.is_2d() {
        spectrum_2d(cfg, out)
    } else {
        spectrum_1d(cfg, out)
    }
}

fn convergence(cfg: &Config, out: &Path) -> Result<()> {
    let id = ProblemId::parse(cfg)?;
    let (default_degrees, order_label): (&[usize], &str) = match id {
        ProblemId::FixedBar => (&[2, 3, 4, 5], "2p"),
        ProblemId::SupportedBeam => (&[3, 4, 5, 6], "2(p-1)"),
        _ => {
            return Err(ConfigError(
                "convergence studies run on fixed_bar or supported_beam".into(),
            )
            .into());
        }
    };
    let degrees = cfg.get_usize_list("degrees", default_degrees)?;
    let meshes = cfg.get_usize_list("meshes", &[20, 40, 80])?;
    if meshes.len() < 3 {
        return Err(ConfigError("need at least three refinement levels".into()).into());
    }
    let mode_index = cfg.get_usize("mode_index", 18)?;
    if mode_index == 0 {
        return Err(ConfigError("mode_index is one-based".into()).into());
    }
    let patches = cfg.get_usize("patches", 2)?;
    let f = cfg.get_f64("f", 2.0)?;
    let c = cfg.get_f64("c", 0.9)?;

    let header = header_lines(cfg, "convergence");
    let mut errors = csvio::CsvWriter::new(
        &header,
        &["p", "variant", "h", "freq_error", "l2_mode_error"],
    );
    let mut slopes = csvio::CsvWriter::new(
        &header,
        &["p", "variant", "freq_slope", "l2_slope", "freq_target", "l2_target"],
    );
    for &p in &degrees {
        for variant in ["standard", "suppressed"] {
            let mut hs = Vec::new();
            let mut freq_errs = Vec::new();
            let mut l2_errs = Vec::new();
            for &elems in &meshes {
                let space = MultipatchSpace1D::build(id.kind(true), p, patches, elems)?;
                let ops = OperatorSet::assemble(&Space::OneD(space.clone()))?;
                if ops.dim() < mode_index {
                    return Err(ConfigError(format!(
                        "mode {mode_index} does not exist at p={p}, {elems} elements per patch"
                    ))
                    .into());
                }
                let params = if variant == "standard" {
                    PerturbationParams::none()
                } else {
                    estimate_pragmatic(&ops, f, c, 60)?
                };
                let pair = perturb(&ops, &params)?;
                let sp = solve_gevp(&pair.k_tilde, &pair.m_tilde)?;
                let analytic = id.analytic_1d(sp.len())?;
                let matched = match_modes_1d(&sp, &space, &analytic, None)?;
                let pos = mode_index - 1;
                let freq_err = (matched.normalized[pos] - 1.0).abs();
                let l2_err = matched.mode_errors[pos];
                let h = 1.0 / (patches * elems) as f64;
                errors.row(&[
                    p.to_string(),
                    variant.to_string(),
                    csvio::format_real(h),
                    csvio::format_real(freq_err),
                    csvio::format_real(l2_err),
                ]);
                hs.push(h);
                freq_errs.push(freq_err);
                l2_errs.push(l2_err);
            }
            let freq_slope = convergence_order(&hs, &freq_errs)?;
            let l2_slope = convergence_order(&hs, &l2_errs)?;
            let freq_target = match id {
                ProblemId::FixedBar => 2 * p,
                _ => 2 * (p - 1),
            };
            slopes.row(&[
                p.to_string(),
                variant.to_string(),
                csvio::format_real(freq_slope),
                csvio::format_real(l2_slope),
                freq_target.to_string(),
                (p + 1).to_string(),
            ]);
        }
    }
    let _ = order_label;
    errors.write_to(&out.join("errors.csv"))?;
    slopes.write_to(&out.join("slopes.csv"))?;
    gnuplot::write_script(
        &out.join("convergence.gp"),
        &gnuplot::convergence_script("errors.csv"),
    )?;
    Ok(())
}

fn dynamics_run(cfg: &Config, out: &Path) -> Result<()> {
    let id = ProblemId::parse(cfg)?;
    if id != ProblemId::FixedMembrane {
        return Err(ConfigError(
            "the transient study runs on the fixed membrane (closed-form standing wave)".into(),
        )
        .into());
    }
    let degree = cfg.require_usize("degree")?;
    let patches = cfg.get_usize("patches", 2)?;
    let elems = cfg.require_usize("elements_per_patch")?;
    let periods = cfg.get_f64("periods", 1.0)?;
    let space =
        MultipatchSpace2D::build(id.kind(true), degree, [patches, patches], [elems, elems])?;
    let ops = OperatorSet::assemble(&Space::TwoD(space.clone()))?;
    let params = resolve_params(cfg, &ops, None)?;

    let pi = std::f64::consts::PI;
    let omega = std::f64::consts::SQRT_2 * pi;
    let t_end = periods * 2.0 * pi / omega;
    let nele = patches * elems;
    let dt = (degree as f64 / (2.0 * nele as f64)).powi(degree as i32);
    let u0 = spectral::project_field_2d(&space, &ops.mass.mat, |x, y| {
        (pi * x).sin() * (pi * y).sin()
    })?;
    let v0 = vec![0.0; ops.dim()];
    let traj = integrate(&ops, &params, &u0, &v0, dt, t_end, IntegrateOptions::default())?;

    let header = header_lines(cfg, "dynamics");
    let mut w = csvio::CsvWriter::new(&header, &["t", "l2_error", "total_energy"]);
    for state in &traj.states {
        let err = spectral::relative_l2_error_2d(&space, &state.u_current, |x, y| {
            (pi * x).sin() * (pi * y).sin() * (omega * state.t).cos()
        })?;
        let (_, _, total) = energy(&ops, &params, state)?;
        w.row(&[
            csvio::format_real(state.t),
            csvio::format_real(err),
            csvio::format_real(total),
        ]);
    }
    w.write_to(&out.join("trajectory.csv"))?;
    gnuplot::write_script(
        &out.join("trajectory.gp"),
        &gnuplot::trajectory_script("trajectory.csv"),
    )?;
    Ok(())
}

fn timestep_sweep(cfg: &Config, out: &Path) -> Result<()> {
    let id = ProblemId::parse(cfg)?;
    let default_degrees: &[usize] = match id {
        ProblemId::FixedMembrane => &[2, 3, 4, 5, 6],
        ProblemId::SupportedPlate => &[3, 4, 5, 6],
        _ => {
            return Err(ConfigError(
                "timestep_sweep runs on fixed_membrane or supported_plate".into(),
            )
            .into());
        }
    };
    let degrees = cfg.get_usize_list("degrees", default_degrees)?;
    let patches = cfg.get_usize("patches", 2)?;
    let elems = cfg.require_usize("elements_per_patch")?;
    let f = cfg.get_f64("f", 2.0)?;
    let c = cfg.get_f64("c", 0.9)?;

    let header = header_lines(cfg, "timestep_sweep");
    let mut w = csvio::CsvWriter::new(&header, &["p", "variant", "omega_max", "dt_crit"]);
    for &p in &degrees {
        let space =
            MultipatchSpace2D::build(id.kind(true), p, [patches, patches], [elems, elems])?;
        let ops = OperatorSet::assemble(&Space::TwoD(space))?;
        let w_std = max_frequency(&ops.stiffness.mat, &ops.mass.mat)?;
        w.row(&[
            p.to_string(),
            "standard".into(),
            csvio::format_real(w_std),
            csvio::format_real(critical_timestep(w_std)?),
        ]);
        let params = estimate_pragmatic(&ops, f, c, 60)?;
        let pair = perturb(&ops, &params)?;
        let w_impr = max_frequency(&pair.k_tilde, &pair.m_tilde)?;
        w.row(&[
            p.to_string(),
            "improved".into(),
            csvio::format_real(w_impr),
            csvio::format_real(critical_timestep(w_impr)?),
        ]);
    }
    w.write_to(&out.join("dtcrit.csv"))?;
    gnuplot::write_script(&out.join("dtcrit.gp"), &gnuplot::dtcrit_script("dtcrit.csv"))?;
    Ok(())
}
