//! gnuplot scripts reading the CSV files of an experiment.

use crate::config::{ExperimentKind, ExperimentSpec};

fn schemes(spec: &ExperimentSpec) -> String {
    spec.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(" ")
}

fn preamble(spec: &ExperimentSpec, output: &str) -> String {
    format!(
        "set datafile separator \",\"\nset terminal pngcairo size 800,560\nset output \"{output}\"\nset grid\nset key best\nset title \"{}\"\n",
        spec.name
    )
}

/// Plot script for `spec`; run from the output directory.
pub fn gnuplot_script(spec: &ExperimentSpec) -> String {
    let name = &spec.name;
    let list = schemes(spec);
    let mut s = preamble(spec, &format!("{name}.png"));
    match spec.kind {
        ExperimentKind::Convergence => {
            let seed = spec.seeds[0];
            let points: Vec<String> = spec.grid.iter().map(|v| format!("{v}")).collect();
            s += "set xlabel \"outer iteration\"\nset ylabel \"SCNR (dB)\"\n";
            s += &format!(
                "plot for [a in \"{}\"] for [s in \"{list}\"] \"{name}_trace.csv\" every ::1 \
                 using 4:((abs($1 - real(a)) < 1e-9 && strcol(2) eq s && $3 == {seed}) ? $5 : NaN) \
                 with linespoints title sprintf(\"%s, a_max = %s\", s, a)\n",
                points.join(" ")
            );
        }
        ExperimentKind::Roc => {
            let seed = spec.seeds[0];
            s += "set logscale x\nset xlabel \"P_fa\"\nset ylabel \"P_d\"\n";
            s += &format!(
                "plot for [s in \"{list}\"] \"{name}_roc.csv\" every ::1 \
                 using 4:((strcol(2) eq s && $3 == {seed}) ? $5 : NaN) with linespoints title s\n"
            );
        }
        kind => {
            s += &format!("set xlabel \"{}\"\nset ylabel \"median SCNR (dB)\"\n", kind.axis_label());
            s += &format!(
                "plot for [s in \"{list}\"] \"{name}_summary.csv\" every ::1 \
                 using 1:(strcol(2) eq s ? $3 : NaN) with linespoints title s\n"
            );
            if kind == ExperimentKind::QosTradeoff {
                s += &format!(
                    "set output \"{name}_ber.png\"\nset logscale y\nset ylabel \"median BER\"\n\
                     plot for [s in \"{list}\"] \"{name}_summary.csv\" every ::1 \
                     using 1:(strcol(2) eq s ? $4 : NaN) with linespoints title s\n"
                );
            }
        }
    }
    s
}
