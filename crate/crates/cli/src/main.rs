//! `aniso-rt`: geometry audits, interpolation-error bounds and refinement
//! studies for anisotropic simplices.
//!
//! Exit codes: 0 ok, 1 usage error, 2 data error, 3 a requested property
//! check failed.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use aniso_rt::experiments::sampling::{
    random_polynomial_field, random_sweep_simplex, random_tet_of_type, random_thin_triangle,
};
use aniso_rt::experiments::study::{fill_orders, study_level, summarize, DEFAULT_GAMMA0, DEFAULT_M};
use aniso_rt::experiments::{
    bound_breakdown, check_scaling_lemma, counterexample, BoundVariant, FamilyKind, FamilySpec,
    ScalingLemma, StudyRow,
};
use aniso_rt::fields::{field_by_name, FieldRef, FIELD_NAMES};
use aniso_rt::geometry::{angle_report, canonical_decompose, Simplex, TetCase};
use aniso_rt::mesh_io::{generate_family, parse_mesh, write_mesh};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "aniso-rt", version, about = "Anisotropic simplex geometry and Raviart-Thomas interpolation bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Geometric report and canonical decomposition of one simplex.
    AnalyzeSimplex {
        /// A file with one vertex per line, or inline `x,y;x,y;x,y`.
        #[arg(long)]
        vertices: String,
        #[arg(long, default_value_t = DEFAULT_GAMMA0)]
        gamma0: f64,
    },
    /// Per-element geometric audit of a mesh file.
    ///
    /// CSV columns: element, h, volume, h_t, h_t0, ratio_h, max_angle,
    /// max_dihedral, inradius_diameter, assumption1_m, good.
    AuditMesh {
        #[arg(long)]
        mesh: String,
        #[arg(long, default_value_t = DEFAULT_GAMMA0)]
        gamma0: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// With `--format csv`, also write the summary JSON here.
        #[arg(long)]
        summary: Option<String>,
        /// Exit with status 3 unless every element is good.
        #[arg(long)]
        require_good: bool,
    },
    /// Interpolation error and right-hand sides on one simplex.
    InterpError {
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Derivative order l (defaults to k).
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value = "trig")]
        field: String,
        /// 1, 2 or inf.
        #[arg(long, default_value = "2", value_parser = parse_p)]
        p: f64,
        /// A file with one vertex per line, or inline `x,y;x,y;x,y`.
        #[arg(long)]
        simplex: String,
        /// `all` or one of rt61, rt62, rt616, rt616b, classical, stability51, stability58.
        #[arg(long, default_value = "all")]
        variant: String,
        /// Allowed constant M in the shear bound |s22| <= M alpha2 t1 / alpha3.
        #[arg(long, default_value_t = DEFAULT_M)]
        m: f64,
    },
    /// Dyadic refinement study of a family.
    ///
    /// Families: shape_regular[:dim], needle_2d[:gamma], cap_2d[:kappa],
    /// tet_type_i[:gamma], tet_type_ii[:gamma], sliver[:gamma].
    ///
    /// CSV columns: level, h, h_t0, h_ratio, max_angle, max_dihedral,
    /// element_type, assumption1_m, lhs, interp_norm, then rhs_<v> and
    /// ratio_<v> for v in rt61, rt62, rt616, rt616b, classical, stability51,
    /// stability58 (empty when not applicable), then order.
    Study {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value = "trig")]
        field: String,
        #[arg(long, default_value = "2", value_parser = parse_p)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        h0: f64,
        #[arg(long, default_value_t = DEFAULT_M)]
        m: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// With `--format csv`, also write the summary JSON here.
        #[arg(long)]
        summary: Option<String>,
        /// Exit with status 3 if any sup ratio grows by more than 10% after level 3.
        #[arg(long)]
        check: bool,
    },
    /// Interpolates (0, y^2) (or (0, y^3) with --k 1) on the reference triangle.
    Counterexample {
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
    /// Seeded Monte-Carlo sweep of the scaling inequalities.
    Sweep {
        /// `all` or one of rt41, rt42, rt43, rt12, rt13, rt14, rt14b.
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "2", value_parser = parse_p)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_M)]
        m: f64,
    },
    /// Writes the mesh of one family level in the text mesh format.
    GenerateMesh {
        #[arg(long)]
        family: String,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 1.0)]
        h0: f64,
    },
}

fn parse_p(s: &str) -> Result<f64, String> {
    match s {
        "1" => Ok(1.0),
        "2" => Ok(2.0),
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => Err(format!("p must be 1, 2 or inf, got `{s}`")),
    }
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<aniso_rt::Error> for Failure {
    fn from(e: aniso_rt::Error) -> Self {
        data_error(e)
    }
}

fn data_error(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn check_failed(message: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn read_input(spec: &str) -> Result<String, Failure> {
    if Path::new(spec).is_file() {
        fs::read_to_string(spec).map_err(|e| data_error(format!("{spec}: {e}")))
    } else {
        Ok(spec.to_string())
    }
}

/// Vertices from `x,y;x,y;...` or from a file with one vertex per line
/// (comma or whitespace separated, `#` comments).
fn parse_vertices(spec: &str) -> Result<Simplex, Failure> {
    let text = read_input(spec)?;
    let rows: Vec<Vec<f64>> = text
        .split(['\n', ';'])
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| data_error(format!("bad coordinate `{t}`"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(Simplex::new(&rows)?)
}

fn field_for(name: &str, dim: usize) -> Result<FieldRef, Failure> {
    field_by_name(name, dim).map_err(|_| {
        data_error(format!(
            "unknown field `{name}`; available: {}",
            FIELD_NAMES.join(", ")
        ))
    })
}

/// Writes to stdout; a closed pipe (e.g. `| head`) ends the command quietly.
fn emit(text: &str) -> CmdResult {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(data_error(e)),
        _ => Ok(()),
    }
}

fn csv_error(e: csv::Error) -> Failure {
    match e.kind() {
        csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe => Failure {
            code: 0,
            message: String::new(),
        },
        _ => data_error(e),
    }
}

fn print_json<T: Serialize>(value: &T) -> CmdResult {
    let s = serde_json::to_string_pretty(value).map_err(data_error)?;
    emit(&(s + "\n"))
}

fn write_summary<T: Serialize>(path: &Option<String>, value: &T) -> CmdResult {
    if let Some(p) = path {
        let s = serde_json::to_string_pretty(value).map_err(data_error)?;
        fs::write(p, s + "\n").map_err(|e| data_error(format!("{p}: {e}")))?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn analyze_simplex(vertices: &str, gamma0: f64) -> CmdResult {
    let simplex = parse_vertices(vertices)?;
    let report = angle_report(&simplex, gamma0)?;
    let decomposition = canonical_decompose(&simplex)?;
    print_json(&json!({
        "schema": SCHEMA,
        "vertices": simplex.to_vecs(),
        "report": report,
        "decomposition": decomposition,
    }))
}

#[derive(Serialize)]
struct AuditSummary {
    schema: u32,
    elements: usize,
    good: usize,
    bad: usize,
    good_fraction: Option<f64>,
    max_ratio_h: f64,
    max_angle: f64,
    gamma0: f64,
}

fn audit_mesh(path: &str, gamma0: f64, format: Format, summary: &Option<String>, require_good: bool) -> CmdResult {
    let text = fs::read_to_string(path).map_err(|e| data_error(format!("{path}: {e}")))?;
    let mesh = parse_mesh(&text)?;
    let reports = mesh
        .simplices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| angle_report(s, gamma0))
        .collect::<Result<Vec<_>, _>>()?;
    let good = reports.iter().filter(|r| r.good_element).count();
    let sum = AuditSummary {
        schema: SCHEMA,
        elements: reports.len(),
        good,
        bad: reports.len() - good,
        good_fraction: (!reports.is_empty()).then(|| good as f64 / reports.len() as f64),
        max_ratio_h: reports.iter().map(|r| r.ratio_h).fold(0.0, f64::max),
        max_angle: reports.iter().map(|r| r.max_angle).fold(0.0, f64::max),
        gamma0,
    };
    match format {
        Format::Json => print_json(&json!({ "summary": sum, "elements": reports }))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record([
                "element", "h", "volume", "h_t", "h_t0", "ratio_h", "max_angle", "max_dihedral",
                "inradius_diameter", "assumption1_m", "good",
            ])
            .map_err(csv_error)?;
            for (i, r) in reports.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    r.h.to_string(),
                    r.volume.to_string(),
                    r.h_t.to_string(),
                    r.h_t0.to_string(),
                    r.ratio_h.to_string(),
                    r.max_angle.to_string(),
                    opt(r.max_dihedral),
                    r.inradius_diameter.to_string(),
                    r.assumption1_m.to_string(),
                    r.good_element.to_string(),
                ])
                .map_err(csv_error)?;
            }
            w.flush().map_err(|e| csv_error(e.into()))?;
            write_summary(summary, &sum)?;
        }
    }
    if require_good && sum.bad > 0 {
        return Err(check_failed(format!("{} of {} elements are not good", sum.bad, sum.elements)));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn interp_error(k: usize, ell: Option<usize>, field: &str, p: f64, simplex: &str, variant: &str, m: f64) -> CmdResult {
    let simplex = parse_vertices(simplex)?;
    let f = field_for(field, simplex.dim())?;
    let breakdown = bound_breakdown(k, ell.unwrap_or(k), &simplex, &f, p, m)?;
    if variant == "all" {
        return print_json(&json!({ "schema": SCHEMA, "breakdown": breakdown }));
    }
    let v: BoundVariant = variant.parse()?;
    let rhs = breakdown.rhs(v).ok_or_else(|| {
        data_error(format!(
            "{v} is not available for a {} element{}",
            breakdown.element_type,
            breakdown
                .notes
                .iter()
                .find(|n| n.starts_with(v.name()))
                .map(|n| format!(" ({n})"))
                .unwrap_or_default()
        ))
    })?;
    print_json(&json!({
        "schema": SCHEMA,
        "variant": v,
        "k": breakdown.k,
        "ell": breakdown.ell,
        "p": breakdown.p,
        "field": breakdown.field,
        "element_type": breakdown.element_type,
        "lhs": breakdown.lhs,
        "interp_norm": breakdown.interp_norm,
        "rhs": rhs,
        "ratio": breakdown.ratio(v),
        "notes": breakdown.notes,
    }))
}

fn study_csv(rows: &[StudyRow]) -> CmdResult {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let mut header: Vec<String> = [
        "level", "h", "h_t0", "h_ratio", "max_angle", "max_dihedral", "element_type", "assumption1_m", "lhs",
        "interp_norm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for v in BoundVariant::ALL {
        header.push(format!("rhs_{v}"));
        header.push(format!("ratio_{v}"));
    }
    header.push("order".into());
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        let mut rec = vec![
            r.level.to_string(),
            r.h.to_string(),
            r.h_t0.to_string(),
            r.h_ratio.to_string(),
            r.max_angle.to_string(),
            opt(r.max_dihedral),
            r.element_type.to_string(),
            r.assumption1_m.to_string(),
            r.lhs.to_string(),
            r.interp_norm.to_string(),
        ];
        for v in BoundVariant::ALL {
            rec.push(opt(r.rhs.get(v.name()).copied()));
            rec.push(opt(r.ratios.get(v.name()).copied()));
        }
        rec.push(opt(r.order));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush().map_err(|e| csv_error(e.into()))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn study(
    family: &str,
    levels: usize,
    k: usize,
    ell: Option<usize>,
    field: &str,
    p: f64,
    h0: f64,
    m: f64,
    format: Format,
    summary: &Option<String>,
    check: bool,
) -> CmdResult {
    let kind: FamilyKind = family.parse()?;
    let mut spec = FamilySpec::new(kind, levels);
    spec.h0 = h0;
    spec.validate()?;
    if levels < 3 {
        return Err(data_error(format!("a study needs at least 3 levels, got {levels}")));
    }
    let f = field_for(field, kind.dim())?;
    let ell = ell.unwrap_or(k);
    let mut rows = (0..levels)
        .into_par_iter()
        .map(|l| study_level(&spec, l, k, ell, &f, p, m))
        .collect::<Result<Vec<_>, _>>()?;
    fill_orders(&mut rows);
    let sum = summarize(&rows);
    let verdict = json!({
        "schema": SCHEMA,
        "family": kind.to_string(),
        "k": k,
        "ell": ell,
        "p": p,
        "field": field,
        "h0": h0,
        "summary": sum,
    });
    match format {
        Format::Json => print_json(&json!({ "study": verdict, "rows": rows }))?,
        Format::Csv => {
            study_csv(&rows)?;
            write_summary(summary, &verdict)?;
        }
    }
    if check {
        let grown: Vec<&String> = sum.bounded.iter().filter(|(_, ok)| !**ok).map(|(n, _)| n).collect();
        if !grown.is_empty() {
            return Err(check_failed(format!("sup ratio grew by more than 10% after level 3 for {grown:?}")));
        }
    }
    Ok(())
}

fn run_counterexample(k: usize, as_json: bool) -> CmdResult {
    let r = counterexample(k)?;
    let pass = r.estimate_fails && r.coefficient_error.is_none_or(|e| e <= 1e-12);
    if as_json {
        print_json(&json!({ "schema": SCHEMA, "report": r, "pass": pass }))?;
    } else {
        let mut out = io::stdout().lock();
        let comps: Vec<String> = r
            .interpolant
            .iter()
            .map(|terms| {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|(e, c)| {
                        let mono: String = ["x1", "x2"]
                            .iter()
                            .zip(e)
                            .filter(|(_, &n)| n > 0)
                            .map(|(v, &n)| if n == 1 { v.to_string() } else { format!("{v}^{n}") })
                            .collect::<Vec<_>>()
                            .join("*");
                        if mono.is_empty() { format!("{c}") } else { format!("{c}*{mono}") }
                    })
                    .collect();
                if parts.is_empty() { "0".into() } else { parts.join(" + ") }
            })
            .collect();
        let w = |out: &mut io::StdoutLock, s: String| match writeln!(out, "{s}") {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(data_error(e)),
            _ => Ok(()),
        };
        w(&mut out, format!("field: {} (k = {})", r.field, r.k))?;
        w(&mut out, format!("I v = ({})", comps.join(", ")))?;
        if k == 0 {
            w(&mut out, "exact: I v = (x1/3, x2/3)".into())?;
            w(&mut out, format!("coefficient error: {:e}", r.coefficient_error.unwrap_or(f64::NAN)))?;
        }
        w(&mut out, format!("|v_1|_H1 = {}", r.first_component_seminorm))?;
        w(&mut out, format!("||(I v)_1 - v_1||_L2 = {}", r.first_component_error))?;
        if let Some(e) = r.exact_error {
            w(&mut out, format!("exact value 1/(6 sqrt 3) = {e}"))?;
        }
        w(
            &mut out,
            format!(
                "error > {}: {}",
                r.threshold,
                if r.exceeds_threshold { "yes" } else { "no" }
            ),
        )?;
        w(&mut out, format!("{}: component-wise estimate {}", if pass { "PASS" } else { "FAIL" }, if r.estimate_fails { "fails as expected" } else { "was not violated" }))?;
    }
    if pass {
        Ok(())
    } else {
        Err(check_failed("counterexample check failed"))
    }
}

#[derive(Serialize)]
struct SweepEntry {
    lemma: ScalingLemma,
    dim: usize,
    order: usize,
    samples: usize,
    skipped_assumption1: usize,
    sup_ratio: f64,
}

fn sweep(lemma: &str, samples: usize, seed: u64, p: f64, m: f64) -> CmdResult {
    let lemmas: Vec<ScalingLemma> = if lemma == "all" {
        ScalingLemma::ALL.to_vec()
    } else {
        vec![lemma.parse()?]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements: Vec<(Simplex, Simplex, Simplex, FieldRef, FieldRef)> = (0..samples)
        .map(|_| {
            (
                random_thin_triangle(&mut rng),
                random_sweep_simplex(&mut rng, 3),
                random_tet_of_type(&mut rng, TetCase::TypeII),
                Arc::new(random_polynomial_field(&mut rng, 2, 3)) as FieldRef,
                Arc::new(random_polynomial_field(&mut rng, 3, 3)) as FieldRef,
            )
        })
        .collect();
    let mut entries = Vec::new();
    for l in lemmas {
        for order in 0..=l.max_order() {
            let dims: &[usize] = if l.needs_type_ii() { &[3] } else { &[2, 3] };
            for &dim in dims {
                let results = elements
                    .par_iter()
                    .map(|(tri, tet, tet2, f2, f3)| {
                        let (s, f) = match dim {
                            2 => (tri, f2),
                            _ if l.needs_type_ii() => (tet2, f3),
                            _ => (tet, f3),
                        };
                        match check_scaling_lemma(s, f, p, l, order, m) {
                            Ok(r) => Ok(Some(r.ratio)),
                            Err(aniso_rt::Error::Assumption1Violated { .. }) => Ok(None),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                entries.push(SweepEntry {
                    lemma: l,
                    dim,
                    order,
                    samples,
                    skipped_assumption1: results.iter().filter(|r| r.is_none()).count(),
                    sup_ratio: results.iter().flatten().copied().fold(0.0, f64::max),
                });
            }
        }
    }
    let finite = entries.iter().all(|e| e.sup_ratio.is_finite());
    print_json(&json!({ "schema": SCHEMA, "seed": seed, "p": p, "m": m, "results": entries, "all_finite": finite }))?;
    if finite {
        Ok(())
    } else {
        Err(check_failed("a sup ratio is not finite"))
    }
}

fn generate_mesh(family: &str, level: usize, h0: f64) -> CmdResult {
    let mut spec = FamilySpec::new(family.parse()?, level + 1);
    spec.h0 = h0;
    let mesh = generate_family(&spec, level)?;
    emit(&write_mesh(&mesh))
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("ANISO_RT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure {
                code: 1,
                message: format!("ANISO_RT_THREADS must be a positive integer, got `{v}`"),
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(data_error)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match cli.command {
        Command::AnalyzeSimplex { vertices, gamma0 } => analyze_simplex(&vertices, gamma0),
        Command::AuditMesh {
            mesh,
            gamma0,
            format,
            summary,
            require_good,
        } => audit_mesh(&mesh, gamma0, format, &summary, require_good),
        Command::InterpError {
            k,
            ell,
            field,
            p,
            simplex,
            variant,
            m,
        } => interp_error(k, ell, &field, p, &simplex, &variant, m),
        Command::Study {
            family,
            levels,
            k,
            ell,
            field,
            p,
            h0,
            m,
            format,
            summary,
            check,
        } => study(&family, levels, k, ell, &field, p, h0, m, format, &summary, check),
        Command::Counterexample { k, json } => run_counterexample(k, json),
        Command::Sweep {
            lemma,
            samples,
            seed,
            p,
            m,
        } => sweep(&lemma, samples, seed, p, m),
        Command::GenerateMesh { family, level, h0 } => generate_mesh(&family, level, h0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.code == 0 => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
