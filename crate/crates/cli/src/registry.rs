//! Experiment registry: every runnable kind with its parameter schema and
//! the study it reproduces.

pub struct ExperimentInfo {
    pub name: &'static str,
    pub reproduces: &'static str,
    pub params: &'static str,
    pub outputs: &'static str,
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "spectrum_1d",
        reproduces: "mode-matched normalized spectrum and mode errors of a multipatch bar or beam, optionally with suppressed interior outliers",
        params: "problem(fixed_bar|free_bar|supported_beam) degree patches elements_per_patch perturbation(none|exact_target|pragmatic|penalty_only_f0|mass_only) f c alpha beta boundary_outlier_removal export_matrices",
        outputs: "spectrum.csv spectrum.gp [trace.csv]",
    },
    ExperimentInfo {
        name: "spectrum_2d",
        reproduces: "mode-matched normalized spectrum of a multipatch membrane or plate, including single-element-per-patch limit cases",
        params: "problem(fixed_membrane|supported_plate) degree patches elements_per_patch perturbation f c alpha beta export_matrices",
        outputs: "spectrum.csv spectrum.gp [trace.csv]",
    },
    ExperimentInfo {
        name: "regime_probe",
        reproduces: "qualitative scaling-parameter windows: stiffness-only penalties push the top up, mass-side scaling with f>1 pulls it down",
        params: "problem degree patches elements_per_patch regime(stiffness_only|low_ratio|high_ratio|mass_only) alpha beta f",
        outputs: "spectrum.csv spectrum.gp",
    },
    ExperimentInfo {
        name: "estimation_trace",
        reproduces: "per-iteration scaling parameters and maximum frequency of the two-input estimation loop on a membrane or bar",
        params: "problem degree patches elements_per_patch perturbation(pragmatic|exact_target) f c",
        outputs: "trace.csv spectrum.csv spectrum.gp",
    },
    ExperimentInfo {
        name: "convergence",
        reproduces: "mesh-refinement orders of a chosen eigenfrequency and mode (2p or 2(p-1) for the frequency, p+1 for the L2 mode error), with and without suppression",
        params: "problem(fixed_bar|supported_beam) degrees meshes mode_index f c",
        outputs: "errors.csv slopes.csv convergence.gp",
    },
    ExperimentInfo {
        name: "dynamics",
        reproduces: "explicit central-difference standing-wave transient on the fixed membrane with the order-dependent step (p/(2 nele))^p",
        params: "problem(fixed_membrane) degree patches elements_per_patch perturbation f c periods",
        outputs: "trajectory.csv trajectory.gp",
    },
    ExperimentInfo {
        name: "timestep_sweep",
        reproduces: "critical time step of standard vs outlier-suppressed operators across polynomial degrees on a membrane or plate",
        params: "problem(fixed_membrane|supported_plate) degrees patches elements_per_patch f c",
        outputs: "dtcrit.csv dtcrit.gp",
    },
];

pub fn names() -> Vec<&'static str> {
    EXPERIMENTS.iter().map(|e| e.name).collect()
}

pub fn print_human() {
    println!("available experiments:");
    for e in EXPERIMENTS {
        println!("\n{}", e.name);
        println!("  reproduces: {}", e.reproduces);
        println!("  params:     {}", e.params);
        println!("  outputs:    {}", e.outputs);
    }
}

pub fn print_machine() {
    for e in EXPERIMENTS {
        println!("{}\t{}\t{}\t{}", e.name, e.params, e.outputs, e.reproduces);
    }
}
