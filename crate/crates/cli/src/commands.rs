//! One function per subcommand. Each returns a table, the checks it ran and
//! an optional plot; writing files is left to the caller.

use crate::config::{ParseError, Scenario};
use crate::plot::Plot;
use crate::suite;
use concave_l2::analysis::{
    concavity_check, jet_equality, linearity_check, sample_curve_with, theorem11_predicate, theorem12_predicate, CurveReport,
    PredicateReport,
};
use concave_l2::closedforms::{shell_integral, sublevel_integral};
use concave_l2::l2min::L2Solver;
use concave_l2::oracle::{quad_integral, IntegrandSpec, PolarFactor, Region};
use concave_l2::suita::{extended_suita_check, ohsawa_check, suita_check, SUITA_EQUALITY_TOL};
use concave_l2::weights::{mass_to_f64, parse_mass};
use concave_l2::{Complex64, L2Problem, Mass};
use rayon::prelude::*;

pub const CLOSED_FORM_TOL: f64 = 1e-6;
pub const CONCAVITY_TOL: f64 = 1e-6;
pub const LINEAR_TOL: f64 = 1e-3;
pub const RATIO_MIN: f64 = 0.995;
/// `G(0)` may exceed the extension bound only by solver noise.
pub const RATIO_SLACK: f64 = 1e-6;
pub const TAIL_T: f64 = 15.0;
pub const TAIL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub grid_scale: f64,
    pub basis_n: Option<usize>,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { grid_scale: 1.0, basis_n: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: String,
    pub table: Table,
    pub checks: Vec<Check>,
    pub plot: Option<Plot>,
    /// Free-form lines for the terminal report.
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug)]
pub enum CommandError {
    Config(ParseError),
    Compute(concave_l2::Error),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "config: {e}"),
            CommandError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<ParseError> for CommandError {
    fn from(e: ParseError) -> Self {
        CommandError::Config(e)
    }
}

impl From<concave_l2::Error> for CommandError {
    fn from(e: concave_l2::Error) -> Self {
        CommandError::Compute(e)
    }
}

type Res<T> = std::result::Result<T, CommandError>;

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

// ---------------------------------------------------------------- closed forms

const GRID_MASSES: [&str; 4] = ["0.7", "1", "2", "4"];
const GRID_T: [f64; 3] = [0.0, 1.0, 5.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormCase {
    pub shell: bool,
    pub alpha: Vec<u32>,
    pub p: Vec<Mass>,
    pub t: f64,
}

/// The comparison grid with each factor drawn from `α ≤ 3` and the mass
/// list. Both integrals are symmetric under permuting factors, so only
/// sorted factor tuples are listed.
pub fn closed_form_grid() -> Vec<ClosedFormCase> {
    let pairs: Vec<(u32, Mass)> = (0..=3u32).flat_map(|a| GRID_MASSES.iter().map(move |m| (a, parse_mass(m).unwrap()))).collect();
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    for n in 1..=3usize {
        let mut idx = vec![0usize; n];
        loop {
            tuples.push(idx.clone());
            let mut k = n;
            while k > 0 && idx[k - 1] == pairs.len() - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            let v = idx[k - 1];
            for x in &mut idx[k..] {
                *x = v;
            }
        }
    }
    let mut out = Vec::new();
    for shell in [true, false] {
        for tup in &tuples {
            for &t in &GRID_T {
                out.push(ClosedFormCase {
                    shell,
                    alpha: tup.iter().map(|&i| pairs[i].0).collect(),
                    p: tup.iter().map(|&i| pairs[i].1).collect(),
                    t,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormRow {
    pub case: ClosedFormCase,
    pub closed: f64,
    pub oracle: f64,
    pub oracle_error: f64,
    pub rel_err: f64,
}

pub fn compare_case(case: &ClosedFormCase, resolution: usize) -> Res<ClosedFormRow> {
    let pf: Vec<f64> = case.p.iter().map(mass_to_f64).collect();
    let factors: Vec<PolarFactor> = pf.iter().map(|&x| PolarFactor::disc().with_log_psi(x)).collect();
    let alpha = case.alpha.clone();
    let monomial = move |z: &[Complex64]| z.iter().zip(&alpha).map(|(w, &a)| w.norm_sqr().powi(a as i32)).product::<f64>();
    let (closed, spec) = if case.shell {
        let p1 = pf.clone();
        let spec = IntegrandSpec::new(factors, Region::Shell(case.t), move |z: &[Complex64]| {
            let psi = z.iter().zip(&p1).map(|(w, pj)| 2.0 * pj * w.norm().ln()).fold(f64::NEG_INFINITY, f64::max);
            monomial(z) * (-psi).exp()
        });
        (shell_integral(&case.alpha, &case.p, case.t)?.value, spec)
    } else {
        let b = [(case.alpha.clone(), Complex64::new(1.0, 0.0))];
        (sublevel_integral(&b, &case.p, case.t)?.value, IntegrandSpec::new(factors, Region::Sublevel(case.t), monomial))
    };
    let o = quad_integral(&spec.radial(), resolution)?;
    Ok(ClosedFormRow {
        case: case.clone(),
        closed,
        oracle: o.value,
        oracle_error: o.error,
        rel_err: (o.value - closed).abs() / closed.abs(),
    })
}

pub fn validate_closedforms(opts: &RunOptions) -> Res<Outcome> {
    let resolution = ((8.0 * opts.grid_scale).round() as usize).max(8);
    let rows: Vec<ClosedFormRow> = closed_form_grid().par_iter().map(|c| compare_case(c, resolution)).collect::<Res<_>>()?;
    let mut table =
        Table { header: vec!["kind", "n", "alpha", "p", "t", "closed_form", "oracle", "oracle_error", "rel_err", "pass"], rows: vec![] };
    let mut worst = (0.0f64, None);
    let mut failed = 0;
    for r in &rows {
        let pass = r.rel_err <= CLOSED_FORM_TOL;
        failed += usize::from(!pass);
        if r.rel_err > worst.0 || worst.1.is_none() {
            worst = (r.rel_err, Some(r));
        }
        let list = |v: Vec<String>| v.join(" ");
        table.rows.push(vec![
            if r.case.shell { "shell" } else { "sublevel" }.into(),
            r.case.alpha.len().to_string(),
            list(r.case.alpha.iter().map(u32::to_string).collect()),
            list(r.case.p.iter().map(|m| m.to_string()).collect()),
            r.case.t.to_string(),
            num(r.closed),
            num(r.oracle),
            num(r.oracle_error),
            num(r.rel_err),
            pass.to_string(),
        ]);
    }
    let detail = match worst.1 {
        Some(r) => {
            format!("{} cases, {failed} above {CLOSED_FORM_TOL:e}; worst {:e} at α={:?} t={}", rows.len(), worst.0, r.case.alpha, r.case.t)
        }
        None => "no cases".into(),
    };
    Ok(Outcome {
        id: "closedforms".into(),
        table,
        checks: vec![Check::new("closed forms match quadrature", failed == 0, detail)],
        plot: None,
        notes: vec![],
    })
}

// ---------------------------------------------------------------- curves

/// Radii for a curve: explicit `r_grid`, else `t_grid`, else an even grid
/// of `10·grid_scale` points in `(0, h(t₀)]`.
pub fn radii(sc: &Scenario, p: &L2Problem, grid_scale: f64) -> Res<Vec<f64>> {
    if let Some(r) = &sc.r_grid {
        return Ok(r.clone());
    }
    let gain = p.gain();
    if let Some(ts) = &sc.t_grid {
        return ts.iter().map(|&t| gain.h(t).map_err(CommandError::from)).collect();
    }
    let top = gain.h(gain.t_start())?;
    let k = ((10.0 * grid_scale).round() as usize).max(3);
    Ok((0..k).map(|i| top * (k - i) as f64 / k as f64).collect())
}

pub fn predicate(p: &L2Problem) -> Res<PredicateReport> {
    Ok(if p.weights().single_point() { theorem11_predicate(p)? } else { theorem12_predicate(p)? })
}

fn predicate_notes(pr: &PredicateReport) -> Vec<String> {
    let mut v: Vec<String> = pr.conditions.iter().map(|c| format!("condition {}: {} ({})", c.name, c.holds, c.evidence)).collect();
    v.push(format!("predicted linear: {}", pr.predicted_linear));
    v
}

fn curve_table(cr: &CurveReport) -> Table {
    Table {
        header: vec!["r", "t", "G", "second_diff", "fit_residual"],
        rows: cr.samples.iter().map(|s| vec![num(s.r), num(s.t), num(s.g), num(s.second_diff), num(s.fit_residual)]).collect(),
    }
}

pub fn g_curve(sc: &Scenario, opts: &RunOptions) -> Res<Outcome> {
    let p = sc.problem(opts.basis_n)?;
    let rs = radii(sc, &p, opts.grid_scale)?;
    let solver = L2Solver::new(&p)?;
    let cr = sample_curve_with(&solver, &rs)?;
    let ctol = sc.option_f64("concavity_tol")?.unwrap_or(CONCAVITY_TOL);
    let ltol = sc.option_f64("linear_tol")?.unwrap_or(LINEAR_TOL);
    let conc = concavity_check(&cr, ctol);
    let lin = linearity_check(&cr, ltol);
    let mut checks =
        vec![Check::new("concavity", conc.pass, format!("max second difference {:e} vs {:e}·{:e}", -conc.margin, ctol, cr.scale()))];
    let mut notes = Vec::new();
    let expect = sc.option("expect").unwrap_or("auto");
    match expect {
        "linear" => checks.push(Check::new("linearity", lin.pass, format!("fit residual {:e} vs {ltol:e}", lin.residual))),
        "nonlinear" => checks.push(Check::new("nonlinearity", !lin.pass, format!("fit residual {:e} vs {ltol:e}", lin.residual))),
        "auto" => match predicate(&p) {
            Ok(pr) => {
                notes.extend(predicate_notes(&pr));
                if pr.predicted_linear {
                    checks.push(Check::new("predicted linearity", lin.pass, format!("fit residual {:e} vs {ltol:e}", lin.residual)));
                }
            }
            Err(e) => notes.push(format!("no prediction: {e}")),
        },
        "none" => {}
        other => return Err(ParseError { line: 0, msg: format!("expect must be auto, linear, nonlinear or none, got `{other}`") }.into()),
    }
    notes.push(format!("fit residual {:e}", cr.fit_residual));
    let pts: Vec<(f64, f64)> = cr.samples.iter().map(|s| (s.r, s.g)).collect();
    Ok(Outcome {
        id: sc.id.clone(),
        table: curve_table(&cr),
        checks,
        plot: Some(Plot::new(format!("{}: G against r", sc.id), "r", "G").series("G", pts)),
        notes,
    })
}

// ---------------------------------------------------------------- jet equality

/// Moves the first pole of the first factor to modulus `m`, keeping its argument.
pub fn with_modulus(sc: &Scenario, m: f64) -> Res<Scenario> {
    let mut out = sc.clone();
    let z = out.factors[0].points[0].z;
    out.factors[0].points[0].z = if z.norm() > 0.0 { z * (m / z.norm()) } else { Complex64::new(m, 0.0) };
    concave_l2::WeightSpec::with_perturbation(out.factors.clone(), out.perturbation.clone())?;
    Ok(out)
}

pub fn jet_equality_sweep(sc: &Scenario, opts: &RunOptions) -> Res<Outcome> {
    let moduli = sc.option_list("sweep_modulus")?.unwrap_or_else(|| vec![sc.factors[0].points[0].z.norm()]);
    let ratio_min = sc.option_f64("ratio_min")?.unwrap_or(RATIO_MIN);
    let ratio_max = sc.option_f64("ratio_max")?;
    let rows: Vec<(f64, concave_l2::analysis::JetEquality, bool)> = moduli
        .par_iter()
        .map(|&m| {
            let p = with_modulus(sc, m)?.problem(opts.basis_n)?;
            let je = jet_equality(&p)?;
            Ok((m, je, predicate(&p)?.predicted_linear))
        })
        .collect::<Res<_>>()?;
    let mut checks = Vec::new();
    for (m, je, lin) in &rows {
        checks.push(Check::new(format!("bound at |z|={m}"), je.ratio <= 1.0 + RATIO_SLACK, format!("ratio {:.8}", je.ratio)));
        if *lin {
            checks.push(Check::new(format!("equality at |z|={m}"), je.ratio >= ratio_min, format!("ratio {:.8} vs {ratio_min}", je.ratio)));
        } else if let Some(mx) = ratio_max {
            checks.push(Check::new(format!("strictness at |z|={m}"), je.ratio <= mx, format!("ratio {:.8} vs {mx}", je.ratio)));
        }
    }
    let table = Table {
        header: vec!["modulus", "G0", "rhs", "ratio", "predicted_linear"],
        rows: rows.iter().map(|(m, je, lin)| vec![num(*m), num(je.g0), num(je.rhs), num(je.ratio), lin.to_string()]).collect(),
    };
    let pts = rows.iter().map(|(m, je, _)| (*m, je.ratio)).collect();
    Ok(Outcome {
        id: sc.id.clone(),
        table,
        checks,
        plot: Some(Plot::new(format!("{}: G(0) over the bound", sc.id), "|z|", "ratio").series("ratio", pts)),
        notes: vec![],
    })
}

// ---------------------------------------------------------------- Suita and Ohsawa

const SUITA_HEADER: [&str; 6] = ["config_id", "lhs", "rhs", "gap", "predicted_equality", "measured_equality"];

fn first_points(sc: &Scenario) -> Vec<Complex64> {
    sc.factors.iter().map(|f| f.points[0].z).collect()
}

pub fn suita(sc: &Scenario) -> Res<Outcome> {
    let r = suita_check(&sc.surfaces(), &first_points(sc))?;
    let predicted = sc.factors.iter().all(|f| f.surface.is_disc());
    let measured = r.gap.abs() <= SUITA_EQUALITY_TOL * r.rhs;
    let mut checks = vec![Check::new("inequality", r.gap >= -SUITA_EQUALITY_TOL * r.rhs, format!("gap {:e}", r.gap))];
    checks.push(Check::new("equality verdict", predicted == measured, format!("predicted {predicted}, measured {measured}")));
    Ok(Outcome {
        id: sc.id.clone(),
        table: Table {
            header: SUITA_HEADER.to_vec(),
            rows: vec![vec![sc.id.clone(), num(r.lhs), num(r.rhs), num(r.gap), predicted.to_string(), measured.to_string()]],
        },
        checks,
        plot: None,
        notes: vec![],
    })
}

pub fn extended_suita(sc: &Scenario) -> Res<Outcome> {
    let u: Vec<_> = sc.factors.iter().map(|f| f.u.clone()).collect();
    let r = extended_suita_check(&sc.surfaces(), &first_points(sc), &u)?;
    let checks = vec![
        Check::new("inequality", r.relative_gap >= -SUITA_EQUALITY_TOL, format!("relative gap {:e}", r.relative_gap)),
        Check::new("character verdict", r.consistent(), format!("predicted {}, measured {}", r.predicted_equality, r.measured_equality)),
    ];
    Ok(Outcome {
        id: sc.id.clone(),
        table: Table {
            header: SUITA_HEADER.to_vec(),
            rows: vec![vec![
                sc.id.clone(),
                num(r.lhs),
                num(r.rhs),
                num(r.gap),
                r.predicted_equality.to_string(),
                r.measured_equality.to_string(),
            ]],
        },
        checks,
        plot: None,
        notes: vec![format!("relative gap {:e}", r.relative_gap)],
    })
}

pub fn ohsawa(sc: &Scenario) -> Res<Outcome> {
    let s: Vec<Vec<Complex64>> = sc.factors.iter().map(|f| f.points.iter().map(|p| p.z).collect()).collect();
    let rows = ohsawa_check(&sc.surfaces(), &s)?;
    let mut table =
        Table { header: vec!["config_id", "point", "lhs", "rhs", "margin", "predicted_equality", "measured_equality"], rows: vec![] };
    let mut checks = Vec::new();
    for r in &rows {
        let pt = r.point.iter().map(|z| complex(*z)).collect::<Vec<_>>().join(" ");
        checks.push(Check::new(
            format!("verdict at ({pt})"),
            r.predicted_equality == r.measured_equality,
            format!("margin {:e}; predicted {}, measured {}", r.margin, r.predicted_equality, r.measured_equality),
        ));
        table.rows.push(vec![
            sc.id.clone(),
            pt,
            num(r.lhs),
            num(r.rhs),
            num(r.margin),
            r.predicted_equality.to_string(),
            r.measured_equality.to_string(),
        ]);
    }
    Ok(Outcome { id: sc.id.clone(), table, checks, plot: None, notes: vec![] })
}

// ---------------------------------------------------------------- concavity suite

#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub id: String,
    pub g0: f64,
    pub g_tail: f64,
    pub max_second_diff: f64,
    pub concave: bool,
    pub vanishes: bool,
    pub report: CurveReport,
}

/// Samples one scenario at `10·grid_scale` radii plus `r = h(15)`.
pub fn suite_row(sc: &Scenario, opts: &RunOptions) -> Res<SuiteRow> {
    let p = sc.problem(opts.basis_n)?;
    let mut rs = radii(&Scenario { r_grid: None, t_grid: None, ..sc.clone() }, &p, opts.grid_scale)?;
    rs.push(p.gain().h(TAIL_T)?);
    let cr = sample_curve_with(&L2Solver::new(&p)?, &rs)?;
    let g0 = cr.g_top;
    let tail = cr.samples[0].g;
    let conc = concavity_check(&cr, CONCAVITY_TOL);
    Ok(SuiteRow {
        id: sc.id.clone(),
        g0,
        g_tail: tail,
        max_second_diff: cr.max_second_diff / cr.scale(),
        concave: conc.pass,
        vanishes: tail <= TAIL_TOL * g0,
        report: cr,
    })
}

pub fn concavity_suite(sc: Option<&Scenario>, opts: &RunOptions) -> Res<Outcome> {
    let count = match sc.and_then(|s| s.option("scenarios")) {
        Some(v) => v.trim().parse::<usize>().map_err(|_| ParseError { line: 0, msg: format!("scenarios must be a count, got `{v}`") })?,
        None => suite::DEFAULT_COUNT,
    };
    let scenarios = suite::random_scenarios(opts.seed, count);
    let rows: Vec<SuiteRow> = scenarios.par_iter().map(|s| suite_row(s, opts)).collect::<Res<_>>()?;
    let mut checks = Vec::new();
    let mut plot = Plot::new("normalised curves", "r", "G / G(0)");
    for r in &rows {
        checks.push(Check::new(format!("{} concavity", r.id), r.concave, format!("max second difference {:e}·G(0)", r.max_second_diff)));
        checks.push(Check::new(format!("{} tail", r.id), r.vanishes, format!("G(15) = {:e}·G(0)", r.g_tail / r.g0)));
        plot = plot.series(&r.id, r.report.samples.iter().map(|s| (s.r, s.g / r.g0)).collect());
    }
    let table = Table {
        header: vec!["scenario", "G0", "G_t15", "max_second_diff_rel", "concave", "vanishes"],
        rows: rows
            .iter()
            .map(|r| vec![r.id.clone(), num(r.g0), num(r.g_tail), num(r.max_second_diff), r.concave.to_string(), r.vanishes.to_string()])
            .collect(),
    };
    let notes = scenarios.iter().map(suite::describe).collect();
    Ok(Outcome { id: sc.map_or_else(|| "suite".into(), |s| s.id.clone()), table, checks, plot: Some(plot), notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_sorted_tuples() {
        let g = closed_form_grid();
        // 16 + C(17,2) + C(18,3) factor tuples, three t values, two kinds
        assert_eq!(g.len(), (16 + 136 + 816) * 3 * 2);
        assert!(g.iter().all(|c| c.alpha.iter().all(|&a| a <= 3)));
    }

    #[test]
    fn one_case_matches() {
        let case = ClosedFormCase { shell: true, alpha: vec![0, 0], p: vec![Mass::from_integer(2); 2], t: 1.0 };
        let r = compare_case(&case, 8).unwrap();
        assert!((r.closed - std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!(r.rel_err <= CLOSED_FORM_TOL);
    }
}
