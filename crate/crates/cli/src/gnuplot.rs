//! Gnuplot scripts for the CSVs written by [`crate::experiments`]. Each
//! script renders `<stem>.svg` next to `<stem>.csv`.

use crate::experiments::Report;

fn preamble(stem: &str, title: &str) -> String {
    format!(
        "# Generated by ep-aloha; run with: gnuplot {stem}.gp\n\
         set datafile separator ','\n\
         set terminal svg size 720,480 dynamic enhanced\n\
         set output '{stem}.svg'\n\
         set title '{title}'\n\
         set grid\n\
         set key top left\n"
    )
}

pub fn script(report: &Report, stem: &str, title: &str) -> String {
    let csv = format!("{stem}.csv");
    let mut s = preamble(stem, title);
    let body = match report {
        Report::Fig1(_) => format!(
            "set logscale x\n\
             set xlabel 'K'\n\
             set ylabel 'throughput'\n\
             plot '{csv}' using 1:2 skip 1 with linespoints title 'known K', \\\n\
             \x20    '' using 1:3 skip 1 with lines dashtype 2 title 'e^{{-1}}'\n"
        ),
        Report::PoolSizing(_) => format!(
            "set xlabel 'alpha = lambda/M'\n\
             set ylabel 'L required'\n\
             set y2label 'preamble collision probability'\n\
             set y2tics\n\
             set ytics nomirror\n\
             plot '{csv}' using 1:4 skip 1 with linespoints title 'L required', \\\n\
             \x20    '' using 1:5:6 skip 1 axes x1y2 with yerrorbars title 'simulated', \\\n\
             \x20    '' using 1:7 skip 1 axes x1y2 with lines dashtype 2 title 'first-order'\n"
        ),
        Report::Throughput(rows) => {
            let mut plot = format!(
                "set xlabel 'M'\n\
                 set ylabel 'packets per slot'\n\
                 plot '{csv}' using 1:3:4 skip 1 with yerrorlines title 'conventional', \\\n\
                 \x20    '' using 1:5:6 skip 1 with yerrorlines title 'exploration', \\\n\
                 \x20    '' using 1:7 skip 1 with lines dashtype 2 title 'conventional (analytic)', \\\n\
                 \x20    '' using 1:8 skip 1 with lines dashtype 3 title 'exploration bound'"
            );
            if rows.iter().any(|r| r.ep_effective.is_some()) {
                plot.push_str(", \\\n     '' using 1:9 skip 1 with linespoints title 'exploration x kappa'");
            }
            plot.push('\n');
            plot
        }
        Report::Gain(sweep) => format!(
            "set xlabel 'K'\n\
             set ylabel 'packets per slot'\n\
             set arrow from {m},graph 0 to {m},graph 1 nohead dashtype 3\n\
             plot '{csv}' using 1:2:3 skip 1 with yerrorlines title 'conventional', \\\n\
             \x20    '' using 1:4:5 skip 1 with yerrorlines title 'exploration'\n",
            m = sweep.m
        ),
    };
    s.push_str(&body);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::run_fig_gap_sa;

    #[test]
    fn references_csv_and_output() {
        let report = Report::Fig1(run_fig_gap_sa(&[1, 2]).unwrap());
        let s = script(&report, "fig1", "Known K");
        assert!(s.contains("set output 'fig1.svg'"));
        assert!(s.contains("plot 'fig1.csv' using 1:2"));
        assert!(s.contains("separator ','"));
    }
}
