//! Scenario files: `key = value` lines with `[factor]` and `[germ]` sections.
//! The grammar is documented in `docs/config.md`.

use concave_l2::surfaces::HarmonicWeight;
use concave_l2::weights::{parse_mass, PolePoint};
use concave_l2::{BasisSpec, Complex64, FactorSpec, GainFunction, JetGerm, L2Problem, ModelSurface, Perturbation, WeightSpec};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}: {}", self.line, self.msg)
        }
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, msg: msg.into() })
}

/// A validated experiment description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub factors: Vec<FactorSpec>,
    pub perturbation: Perturbation,
    pub gain: GainFunction,
    pub germs: Vec<JetGerm>,
    pub basis_n: Option<usize>,
    pub r_grid: Option<Vec<f64>>,
    pub t_grid: Option<Vec<f64>>,
    /// Subcommand-specific keys, kept verbatim.
    pub options: BTreeMap<String, String>,
}

const OPTION_KEYS: &[&str] = &["expect", "linear_tol", "concavity_tol", "ratio_min", "ratio_max", "sweep_modulus", "scenarios"];

impl Scenario {
    pub fn weights(&self) -> WeightSpec {
        WeightSpec::with_perturbation(self.factors.clone(), self.perturbation.clone()).expect("validated at parse time")
    }

    pub fn surfaces(&self) -> Vec<ModelSurface> {
        self.factors.iter().map(|f| f.surface).collect()
    }

    /// The minimal-integral problem, with an optional basis override.
    pub fn problem(&self, basis_n: Option<usize>) -> concave_l2::Result<L2Problem> {
        let n = basis_n.or(self.basis_n).unwrap_or(DEFAULT_BASIS_N);
        L2Problem::new(self.weights(), self.gain.clone(), self.germs.clone(), BasisSpec::uniform(self.factors.len(), n))
    }

    pub fn option(&self, key: &str) -> Option<&str> {
        self.options.get(key).map(String::as_str)
    }

    pub fn option_f64(&self, key: &str) -> Result<Option<f64>, ParseError> {
        self.option(key).map(|v| parse_f64(0, v)).transpose()
    }

    pub fn option_list(&self, key: &str) -> Result<Option<Vec<f64>>, ParseError> {
        self.option(key).map(|v| parse_list(0, v)).transpose()
    }
}

pub const DEFAULT_BASIS_N: usize = 16;

pub fn load(path: &Path) -> Result<Scenario, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError { line: 0, msg: format!("{}: {e}", path.display()) })?;
    parse(&text, path.parent())
}

#[derive(Default)]
struct FactorDraft {
    line: usize,
    surface: Option<ModelSurface>,
    points: Vec<PolePoint>,
    g: Option<Vec<Complex64>>,
    u: HarmonicWeight,
}

struct GermDraft {
    line: usize,
    base: Option<Vec<usize>>,
    terms: Vec<(Vec<u32>, Complex64)>,
}

enum Section {
    Top,
    Factor,
    Germ,
}

/// Parses scenario text; relative table paths resolve against `dir`.
pub fn parse(text: &str, dir: Option<&Path>) -> Result<Scenario, ParseError> {
    let mut top: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut factors: Vec<FactorDraft> = Vec::new();
    let mut germs: Vec<GermDraft> = Vec::new();
    let mut section = Section::Top;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[factor]" => {
                    factors.push(FactorDraft { line: ln, ..Default::default() });
                    Section::Factor
                }
                "[germ]" => {
                    germs.push(GermDraft { line: ln, base: None, terms: Vec::new() });
                    Section::Germ
                }
                _ => return err(ln, format!("unknown section {line}")),
            };
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => return err(ln, "expected `key = value`"),
        };
        match section {
            Section::Top => {
                if top.insert(key.to_string(), (ln, value.to_string())).is_some() {
                    return err(ln, format!("duplicate key {key}"));
                }
            }
            Section::Factor => {
                let f = factors.last_mut().expect("inside a factor section");
                match key {
                    "surface" => f.surface = Some(parse_surface(ln, value)?),
                    "point" => f.points.push(parse_point(ln, value)?),
                    "g" => f.g = Some(parse_complex_list(ln, value)?),
                    "u_kappa" => f.u.kappa = parse_f64(ln, value)?,
                    "u_const" => f.u.constant = parse_f64(ln, value)?,
                    "u_poly" => f.u.poly = parse_complex_list(ln, value)?,
                    _ => return err(ln, format!("unknown factor key {key}")),
                }
            }
            Section::Germ => {
                let g = germs.last_mut().expect("inside a germ section");
                match key {
                    "base" => g.base = Some(parse_usize_list(ln, value)?),
                    "term" => {
                        let (a, c) = value.split_once(':').ok_or(ParseError { line: ln, msg: "term needs `α : coefficient`".into() })?;
                        let alpha = parse_usize_list(ln, a)?.into_iter().map(|x| x as u32).collect();
                        g.terms.push((alpha, parse_complex(ln, c.trim())?));
                    }
                    _ => return err(ln, format!("unknown germ key {key}")),
                }
            }
        }
    }

    if factors.is_empty() {
        return err(0, "at least one [factor] section is required");
    }
    let mut specs = Vec::new();
    for f in factors {
        let surface = f.surface.ok_or(ParseError { line: f.line, msg: "factor needs `surface`".into() })?;
        if f.points.is_empty() {
            return err(f.line, "factor needs at least one `point`");
        }
        let mut spec = FactorSpec::new(surface, f.points).with_u(f.u);
        if let Some(g) = f.g {
            spec = spec.with_g(g);
        }
        specs.push(spec);
    }
    let n = specs.len();

    let take = |top: &mut BTreeMap<String, (usize, String)>, k: &str| top.remove(k);
    let id = take(&mut top, "id").map(|v| v.1).unwrap_or_else(|| "scenario".into());
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return err(0, format!("id `{id}` must be non-empty and use only letters, digits, '-' and '_'"));
    }
    let gain = match take(&mut top, "gain") {
        None => GainFunction::constant(),
        Some((ln, v)) => parse_gain(ln, &v, dir)?,
    };
    let perturbation = match take(&mut top, "psi") {
        None => Perturbation::None,
        Some((ln, v)) if v == "none" => {
            let _ = ln;
            Perturbation::None
        }
        Some((ln, v)) => Perturbation::Constant(parse_f64(ln, &v)?),
    };
    let basis_n = take(&mut top, "basis_n").map(|(ln, v)| parse_usize(ln, &v)).transpose()?;
    let r_grid = take(&mut top, "r_grid").map(|(ln, v)| parse_list(ln, &v)).transpose()?;
    let t_grid = take(&mut top, "t_grid").map(|(ln, v)| parse_list(ln, &v)).transpose()?;
    let mut options = BTreeMap::new();
    for (k, (ln, v)) in top {
        if !OPTION_KEYS.contains(&k.as_str()) {
            return err(ln, format!("unknown key {k}"));
        }
        options.insert(k, v);
    }

    let weights =
        WeightSpec::with_perturbation(specs.clone(), perturbation.clone()).map_err(|e| ParseError { line: 0, msg: e.to_string() })?;
    let mut jets = Vec::new();
    for g in germs {
        let base = g.base.unwrap_or_else(|| vec![0; n]);
        if base.len() != n || base.iter().zip(weights.factors()).any(|(&k, f)| k >= f.points.len()) {
            return err(g.line, format!("germ base {base:?} does not name a base point"));
        }
        let mut germ = JetGerm::new(base);
        for (alpha, c) in g.terms {
            if alpha.len() != n {
                return err(g.line, format!("multi-index {alpha:?} needs {n} entries"));
            }
            germ.set(alpha, c);
        }
        jets.push(germ);
    }
    let sc = Scenario { id, factors: specs, perturbation, gain, germs: jets, basis_n, r_grid, t_grid, options };
    if !sc.germs.is_empty() {
        sc.problem(None).map_err(|e| ParseError { line: 0, msg: e.to_string() })?;
    }
    Ok(sc)
}

fn parse_f64(ln: usize, s: &str) -> Result<f64, ParseError> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(ln, format!("`{s}` is not a finite number")),
    }
}

fn parse_usize(ln: usize, s: &str) -> Result<usize, ParseError> {
    s.trim().parse::<usize>().or_else(|_| err(ln, format!("`{s}` is not a non-negative integer")))
}

fn parse_list(ln: usize, s: &str) -> Result<Vec<f64>, ParseError> {
    s.split(',').map(|x| parse_f64(ln, x)).collect()
}

fn parse_usize_list(ln: usize, s: &str) -> Result<Vec<usize>, ParseError> {
    s.split(',').map(|x| parse_usize(ln, x)).collect()
}

/// `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(ln: usize, s: &str) -> Result<Complex64, ParseError> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || ParseError { line: ln, msg: format!("`{s}` is not a complex number") };
    if let Some(body) = s.strip_suffix('i') {
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        return Ok(Complex64::new(re, im));
    }
    s.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad())
}

fn parse_complex_list(ln: usize, s: &str) -> Result<Vec<Complex64>, ParseError> {
    s.split(',').map(|x| parse_complex(ln, x)).collect()
}

fn parse_surface(ln: usize, s: &str) -> Result<ModelSurface, ParseError> {
    if s == "disc" {
        return Ok(ModelSurface::disc());
    }
    if let Some(r) = s.strip_prefix("annulus:") {
        return ModelSurface::annulus(parse_f64(ln, r)?).map_err(|e| ParseError { line: ln, msg: e.to_string() });
    }
    err(ln, format!("surface must be `disc` or `annulus:<r>`, got `{s}`"))
}

fn parse_point(ln: usize, s: &str) -> Result<PolePoint, ParseError> {
    let (z, p) = s.split_once('@').ok_or(ParseError { line: ln, msg: "point needs `<z> @ <mass>`".into() })?;
    let z = parse_complex(ln, z.trim())?;
    let p = parse_mass(p.trim()).map_err(|e| ParseError { line: ln, msg: e.to_string() })?;
    Ok(PolePoint { z, p })
}

fn parse_gain(ln: usize, s: &str, dir: Option<&Path>) -> Result<GainFunction, ParseError> {
    let wrap = |r: concave_l2::Result<GainFunction>| r.map_err(|e| ParseError { line: ln, msg: e.to_string() });
    if s == "const" {
        return Ok(GainFunction::constant());
    }
    if let Some(a) = s.strip_prefix("exp:") {
        return wrap(GainFunction::exponential(parse_f64(ln, a)?));
    }
    if let Some(p) = s.strip_prefix("table:") {
        let path = dir.map_or_else(|| Path::new(p).to_path_buf(), |d| d.join(p));
        return wrap(GainFunction::from_table_file(&path));
    }
    err(ln, format!("gain must be `const`, `exp:<a>` or `table:<path>`, got `{s}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BIDISC: &str = "
id = bidisc
gain = exp:0.5
basis_n = 6
r_grid = 1, 0.5
[factor]
surface = disc
point = 0 @ 2
[factor]
surface = annulus:0.25
point = 0.5i @ 4   # on the imaginary axis
u_kappa = 0.5
[germ]
term = 0,1 : 1-2i
";

    #[test]
    fn parses_a_full_scenario() {
        let s = parse(BIDISC, None).unwrap();
        assert_eq!(s.id, "bidisc");
        assert_eq!(s.factors.len(), 2);
        assert_eq!(s.factors[1].points[0].z, Complex64::new(0.0, 0.5));
        assert_eq!(s.factors[1].u.kappa, 0.5);
        assert_eq!(s.germs[0].get(&[0, 1]), Complex64::new(1.0, -2.0));
        assert_eq!(s.r_grid, Some(vec![1.0, 0.5]));
        assert_eq!(s.basis_n, Some(6));
    }

    #[test]
    fn complex_forms() {
        for (s, re, im) in
            [("1", 1.0, 0.0), ("-2.5i", 0.0, -2.5), ("0.3-0.4i", 0.3, -0.4), ("1e-3+i", 1e-3, 1.0), ("-1e-2-2e-1i", -1e-2, -0.2)]
        {
            assert_eq!(parse_complex(1, s).unwrap(), Complex64::new(re, im), "{s}");
        }
        assert!(parse_complex(1, "1+").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("[factor]\nsurface = disc\n", None).is_err());
        assert!(parse("bogus = 1\n[factor]\nsurface = disc\npoint = 0 @ 1\n", None).is_err());
        assert!(parse("[factor]\nsurface = disc\npoint = 1.5 @ 1\n", None).is_err());
        let e = parse("[factor]\nsurface = ellipse\n", None).unwrap_err();
        assert_eq!(e.line, 2);
        // basis too small for the constrained jet
        assert!(parse("basis_n = 2\n[factor]\nsurface = disc\npoint = 0 @ 3\n[germ]\nterm = 2 : 1\n", None).is_err());
    }
}
