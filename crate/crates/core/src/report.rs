//! Dwell-time sweeps, their CSV tables, and trajectory output.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::certificate::{
    certificate_a_from_solution, certificate_b_from_solution, verify_certificate_a, verify_certificate_b,
    Certificate, DEFAULT_VERIFY_TOL,
};
use crate::cycles::{enumerate_cycles, Condition, CycleSpec, DEFAULT_CYCLE_CAP};
use crate::error::{Error, Result};
use crate::lmi::build;
use crate::oracle::{instability_witness_search, longest_length_within_cap, WitnessReport};
use crate::solver::{solve_feasibility, SolverOptions, Status};
use crate::system::{Dwell, SwitchedSystem, Trajectory};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub tau_min: u32,
    pub tau_max: u32,
    pub l_min: usize,
    pub l_max: usize,
    pub condition: Condition,
    pub solver: SolverOptions,
    pub cap: usize,
    pub verify_tol: f64,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            tau_min: 1,
            tau_max: 15,
            l_min: 1,
            l_max: 10,
            condition: Condition::B,
            solver: SolverOptions::default(),
            cap: DEFAULT_CYCLE_CAP,
            verify_tol: DEFAULT_VERIFY_TOL,
            parallel: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_min == 0 || self.tau_min > self.tau_max {
            return Err(Error::DwellBounds {
                min: self.tau_min,
                max: self.tau_max,
            });
        }
        if self.l_min == 0 || self.l_min > self.l_max {
            return Err(Error::InvalidArgument(format!(
                "cycle lengths need 1 <= L_min <= L_max, got {}..{}",
                self.l_min, self.l_max
            )));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    /// Solver succeeded and the certificate verified independently.
    Feasible,
    Inconclusive,
    /// Not feasible, and an instability witness exists at this dwell time.
    WitnessUnstable,
    Skipped(String),
    NumericalFailure(String),
}

impl RowStatus {
    pub fn label(&self) -> String {
        match self {
            RowStatus::Feasible => "feasible".into(),
            RowStatus::Inconclusive => "inconclusive".into(),
            RowStatus::WitnessUnstable => "witness-unstable".into(),
            RowStatus::Skipped(reason) => format!("skipped ({reason})"),
            RowStatus::NumericalFailure(_) => "numerical-failure".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub tau: u32,
    pub length: usize,
    pub status: RowStatus,
    /// Attained `t`; `None` for skipped rows.
    pub margin: Option<f64>,
    pub wallclock_ms: u128,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone)]
pub struct TauSummary {
    pub tau: u32,
    pub min_length: Option<usize>,
    /// Feasible at `L = 1`, the single-cycle condition.
    pub lemma_feasible: bool,
    pub witness: WitnessReport,
}

impl TauSummary {
    pub fn verdict(&self) -> String {
        match (self.min_length, &self.witness.cycle) {
            (Some(l), _) => format!("GUAS certified (L={l})"),
            (None, Some(c)) => format!("not GUAS (witness {})", signal_label(c)),
            (None, None) => "undetermined".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<TauSummary>,
}

/// Cycle in the `mode:duration` signal syntax, separated by `;` so that it
/// fits in one CSV field.
pub fn signal_label(c: &CycleSpec) -> String {
    c.modes()
        .iter()
        .zip(c.durations())
        .map(|(m, d)| format!("{m}:{d}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn sweep_point(sys: &SwitchedSystem, tau: u32, length: usize, cfg: &SweepConfig, witness: bool) -> Result<SweepRow> {
    let start = Instant::now();
    let finish = |status, margin, certificate| SweepRow {
        tau,
        length,
        status,
        margin,
        wallclock_ms: start.elapsed().as_millis(),
        certificate,
    };
    let family = match enumerate_cycles(sys, length, cfg.cap) {
        Ok(f) => f,
        Err(Error::CapExceeded { count, cap }) => {
            return Ok(finish(RowStatus::Skipped(format!("{count} cycles exceed cap {cap}")), None, None))
        }
        Err(e) => return Err(e),
    };
    let problem = build(sys, &family, cfg.condition);
    let result = solve_feasibility(&problem, &cfg.solver)?;
    let margin = Some(result.margin);
    let fallback = if witness {
        RowStatus::WitnessUnstable
    } else {
        RowStatus::Inconclusive
    };
    Ok(match result.status {
        Status::Feasible => {
            let (cert, passed) = match cfg.condition {
                Condition::B => {
                    let c = certificate_b_from_solution(sys, &family, &problem, &result)?;
                    let ok = verify_certificate_b(sys, &family, &c, cfg.verify_tol)?.passed();
                    (Certificate::B(c), ok)
                }
                Condition::A => {
                    let c = certificate_a_from_solution(sys, &family, &problem, &result)?;
                    let ok = verify_certificate_a(sys, &family, &c, cfg.verify_tol)?.passed();
                    (Certificate::A(c), ok)
                }
            };
            if passed {
                finish(RowStatus::Feasible, margin, Some(cert))
            } else {
                finish(
                    RowStatus::NumericalFailure("solver point failed independent verification".into()),
                    margin,
                    None,
                )
            }
        }
        Status::Inconclusive => finish(fallback, margin, None),
        Status::NumericalFailure => finish(RowStatus::NumericalFailure(result.message.clone().unwrap_or_default()), margin, None),
    })
}

/// Runs the LMI test for every `(τ, L)` with dwell range `[τ, τ]`, and the
/// instability witness search for every `τ`. Rows come back in `(τ, L)` order
/// regardless of `parallel`.
pub fn run_sweep(sys: &SwitchedSystem, cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let taus: Vec<u32> = (cfg.tau_min..=cfg.tau_max).collect();
    let systems = taus
        .iter()
        .map(|&t| sys.with_dwell(Dwell::periodic(t)?))
        .collect::<Result<Vec<_>>>()?;
    let witness_of = |s: &SwitchedSystem| match longest_length_within_cap(s, cfg.l_max, cfg.cap) {
        0 => Ok(WitnessReport {
            found: false,
            cycle: None,
            radius: None,
            searched_up_to: 0,
        }),
        l => instability_witness_search(s, l, cfg.cap),
    };
    let witnesses: Vec<WitnessReport> = if cfg.parallel {
        systems.par_iter().map(witness_of).collect::<Result<_>>()?
    } else {
        systems.iter().map(witness_of).collect::<Result<_>>()?
    };
    let points: Vec<(usize, usize)> = (0..taus.len())
        .flat_map(|i| (cfg.l_min..=cfg.l_max).map(move |l| (i, l)))
        .collect();
    let run = |&(i, l): &(usize, usize)| sweep_point(&systems[i], taus[i], l, cfg, witnesses[i].found);
    let rows: Vec<SweepRow> = if cfg.parallel {
        points.par_iter().map(run).collect::<Result<_>>()?
    } else {
        points.iter().map(run).collect::<Result<_>>()?
    };
    let summary = taus
        .iter()
        .zip(witnesses)
        .map(|(&tau, witness)| {
            let feasible = |r: &&SweepRow| r.tau == tau && r.status == RowStatus::Feasible;
            TauSummary {
                tau,
                min_length: rows.iter().filter(feasible).map(|r| r.length).min(),
                lemma_feasible: rows.iter().filter(feasible).any(|r| r.length == 1),
                witness,
            }
        })
        .collect();
    Ok(SweepReport {
        config: cfg.clone(),
        rows,
        summary,
    })
}

impl SweepReport {
    pub fn has_numerical_failure(&self) -> bool {
        self.rows
            .iter()
            .any(|r| matches!(r.status, RowStatus::NumericalFailure(_)))
    }

    pub fn row(&self, tau: u32, length: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.tau == tau && r.length == length)
    }

    pub fn summary_for(&self, tau: u32) -> Option<&TauSummary> {
        self.summary.iter().find(|s| s.tau == tau)
    }

    /// `tau,L,status,margin,wallclock_ms`. With `timings = false` the last
    /// column is left empty so the output is reproducible byte for byte.
    pub fn rows_csv(&self, timings: bool) -> String {
        let mut out = String::from("tau,L,status,margin,wallclock_ms\n");
        for r in &self.rows {
            let margin = r.margin.map(|m| format!("{m:e}")).unwrap_or_default();
            let ms = if timings { r.wallclock_ms.to_string() } else { String::new() };
            let _ = writeln!(out, "{},{},{},{},{}", r.tau, r.length, r.status.label(), margin, ms);
        }
        out
    }

    /// `tau,min_L,lemma_feasible,witness,verdict`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("tau,min_L,lemma_feasible,witness,verdict\n");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.tau,
                s.min_length.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
                s.lemma_feasible,
                s.witness.cycle.as_ref().map(signal_label).unwrap_or_else(|| "-".into()),
                s.verdict()
            );
        }
        out
    }
}

/// `k,mode,x1..xn,norm`; `mode` is the mode applied from step `k` to `k+1`
/// and is empty on the final row.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut out = String::from("k,mode");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",norm\n");
    for (k, (x, norm)) in traj.states.iter().zip(traj.norms()).enumerate() {
        let mode = traj.modes.get(k).map(ToString::to_string).unwrap_or_default();
        let _ = write!(out, "{k},{mode}");
        for v in x {
            let _ = write!(out, ",{v:e}");
        }
        let _ = writeln!(out, ",{norm:e}");
    }
    out
}

/// Line plot of `log10 ‖x(k)‖` for one or more labelled series.
pub fn norm_plot_svg(series: &[(String, Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let logs: Vec<Vec<f64>> = series
        .iter()
        .map(|(_, v)| v.iter().map(|&x| x.max(f64::MIN_POSITIVE).log10()).collect())
        .collect();
    let kmax = logs.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1).max(1) as f64;
    let (mut lo, mut hi) = logs
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let px = |k: usize| PAD + (W - 2.0 * PAD) * k as f64 / kmax;
    let py = |y: f64| H - PAD - (H - 2.0 * PAD) * (y - lo) / (hi - lo);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{PAD}\" y=\"{t}\" font-size=\"12\">log10 |x(k)|  [{lo:.2}, {hi:.2}]</text>\n\
         <text x=\"{r}\" y=\"{kb}\" font-size=\"12\" text-anchor=\"end\">k = {kmax}</text>\n",
        b = H - PAD,
        r = W - PAD,
        t = PAD - 12.0,
        kb = H - PAD + 20.0,
    );
    for (i, ((label, _), ys)) in series.iter().zip(&logs).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ys
            .iter()
            .enumerate()
            .map(|(k, &y)| format!("{:.2},{:.2}", px(k), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>",
            W - PAD - 120.0,
            PAD + 16.0 * i as f64,
            xml_escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::system::{simulate, SwitchingSignal};

    fn example() -> SwitchedSystem {
        let a1 = Matrix::from_rows(&[vec![1.0, 0.1], vec![-0.2, 0.9]]).unwrap();
        let a2 = Matrix::from_rows(&[vec![1.0, 0.1], vec![-0.9, 0.9]]).unwrap();
        SwitchedSystem::new(vec![a1, a2], Dwell::periodic(10).unwrap()).unwrap()
    }

    fn small_config(parallel: bool) -> SweepConfig {
        SweepConfig {
            tau_min: 5,
            tau_max: 12,
            l_min: 1,
            l_max: 2,
            parallel,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_reversed_ranges() {
        let cfg = SweepConfig {
            tau_min: 5,
            tau_max: 4,
            ..Default::default()
        };
        assert!(matches!(run_sweep(&example(), &cfg), Err(Error::DwellBounds { .. })));
    }

    #[test]
    fn rows_are_ordered_and_deterministic() {
        let a = run_sweep(&example(), &small_config(true)).unwrap();
        let b = run_sweep(&example(), &small_config(false)).unwrap();
        assert_eq!(a.rows_csv(false), b.rows_csv(false));
        assert_eq!(a.summary_csv(), b.summary_csv());
        let keys: Vec<(u32, usize)> = a.rows.iter().map(|r| (r.tau, r.length)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(a.rows_csv(true).starts_with("tau,L,status,margin,wallclock_ms\n"));
    }

    #[test]
    fn small_sweep_statuses() {
        let rep = run_sweep(&example(), &small_config(false)).unwrap();
        assert_eq!(rep.row(10, 1).unwrap().status, RowStatus::Feasible);
        assert_eq!(rep.row(12, 1).unwrap().status, RowStatus::Inconclusive);
        assert_eq!(rep.row(6, 1).unwrap().status, RowStatus::WitnessUnstable);
        let s6 = rep.summary_for(6).unwrap();
        assert!(s6.verdict().starts_with("not GUAS"));
        assert_eq!(rep.summary_for(10).unwrap().min_length, Some(1));
        assert!(rep.summary_for(10).unwrap().lemma_feasible);
        assert!(!rep.has_numerical_failure());
    }

    #[test]
    fn no_witness_is_never_called_stable() {
        let rep = run_sweep(&example(), &small_config(false)).unwrap();
        for s in &rep.summary {
            if s.min_length.is_none() && !s.witness.found {
                assert_eq!(s.verdict(), "undetermined");
            }
        }
    }

    #[test]
    fn over_cap_points_are_skipped() {
        let cfg = SweepConfig {
            tau_min: 10,
            tau_max: 10,
            l_min: 1,
            l_max: 2,
            cap: 3,
            parallel: false,
            ..Default::default()
        };
        let sys = example();
        let rep = run_sweep(&sys, &cfg).unwrap();
        assert_eq!(rep.row(10, 1).unwrap().status, RowStatus::Feasible);
        let cfg = SweepConfig { cap: 1, ..cfg };
        let rep = run_sweep(&sys, &cfg).unwrap();
        assert!(matches!(rep.row(10, 1).unwrap().status, RowStatus::Skipped(_)));
        assert!(rep.rows_csv(false).contains("skipped (2 cycles exceed cap 1)"));
    }

    #[test]
    fn trajectory_table_and_plot() {
        let sys = example();
        let sig = SwitchingSignal::parse(&sys, "1:10,2:10").unwrap();
        let traj = simulate(&sys, &sig, &[1.0, 0.0], 20).unwrap();
        let csv = trajectory_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,mode,x1,x2,norm");
        assert_eq!(lines.len(), 22);
        assert!(lines[1].starts_with("0,1,"));
        assert!(lines[21].starts_with("20,,"));
        let svg = norm_plot_svg(&[("tau=10".into(), traj.norms())]);
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    }
}
