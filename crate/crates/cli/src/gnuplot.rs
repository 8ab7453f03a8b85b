//! Gnuplot script emission: data stays in CSV, plots are reproducible
//! externally with `gnuplot <file>.gp`.

use std::path::Path;

pub fn write_script(path: &Path, body: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, body)
}

pub fn spectrum_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key left top\n\
         set xlabel 'mode number n'\n\
         set ylabel 'omega_h / omega'\n\
         plot '{csv_name}' using 1:4 with linespoints title 'normalized frequency'\n"
    )
}

pub fn trace_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key left top\n\
         set xlabel 'iteration'\n\
         set logscale y\n\
         plot '{csv_name}' using 1:2 with linespoints title 'alpha', \\\n\
              '{csv_name}' using 1:3 with linespoints title 'beta', \\\n\
              '{csv_name}' using 1:4 with linespoints title 'max frequency'\n"
    )
}

pub fn convergence_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key right bottom\n\
         set logscale xy\n\
         set xlabel 'mesh size h'\n\
         set ylabel 'relative error'\n\
         plot '{csv_name}' using 3:4 with points title 'frequency error', \\\n\
              '{csv_name}' using 3:5 with points title 'mode L2 error'\n"
    )
}

pub fn trajectory_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key right top\n\
         set xlabel 't'\n\
         plot '{csv_name}' using 1:2 with lines title 'L2 error', \\\n\
              '{csv_name}' using 1:3 with lines title 'total energy'\n"
    )
}

pub fn dtcrit_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key left top\n\
         set xlabel 'degree p'\n\
         set ylabel 'critical time step'\n\
         set logscale y\n\
         plot '{csv_name}' using 1:(strcol(2) eq 'standard' ? $4 : 1/0) with linespoints title 'standard', \\\n\
              '{csv_name}' using 1:(strcol(2) eq 'improved' ? $4 : 1/0) with linespoints title 'improved'\n"
    )
}
