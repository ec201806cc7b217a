//! Command-line front end.
//!
//! Exit codes: 0 all applicable checks pass, 1 a check failed, 2 malformed
//! flags or input, 3 the metric could not be evaluated (domain error).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::catalog::{default_rho, list_catalog, Family, MetricSpec};
use crate::curvature::BundleSummary;
use crate::error::{Error, Result};
use crate::verify::{
    self, check_table, Grid, KHat, OracleReport, QuarticSolution, SuiteConfig, VerificationReport,
    DEFAULT_DELTA, DEFAULT_GRID, DEFAULT_ORACLE_POINTS, DEFAULT_SEED, DEFAULT_TOL, ORACLE_TOL,
    SCHEMA_VERSION,
};

/// Directory for reports when `--output` is not given; unset means stdout.
pub const OUTPUT_DIR_ENV: &str = "SSFINSLER_OUTPUT_DIR";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

/// Curvature checks for spherically symmetric Finsler metrics F = |y| φ(|x|, <x,y>/|y|).
#[derive(Debug, Parser)]
#[command(name = "ssfinsler", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in metric families.
    Catalog {
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run every check on a grid and report residuals and verdicts.
    Verify(VerifyArgs),
    /// Tabulate P, Q, psi, R1..R4, M and K_hat over a grid.
    Scan {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare the reduced curvature formulas with the generic computation at random points.
    OracleCheck {
        #[command(flatten)]
        metric: MetricArgs,
        /// Number of random (x, y) pairs.
        #[arg(long, default_value_t = DEFAULT_ORACLE_POINTS)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = ORACLE_TOL)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve D^2 q^4 + (u - C) q^2 - K = 0 and evaluate phi = q / (q^2 (Dq + v)^2 + K).
    SolveQ {
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[arg(long = "C", allow_negative_numbers = true)]
        c: f64,
        #[arg(long = "D", allow_negative_numbers = true)]
        d: f64,
        #[arg(long = "K", allow_negative_numbers = true)]
        k: f64,
        /// Evaluate phi at this v (= s) and select a branch with phi > 0.
        #[arg(long, allow_negative_numbers = true)]
        v: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Family id (see `catalog`).
    #[arg(long)]
    metric: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long = "C", allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long = "D", allow_negative_numbers = true)]
    d: Option<f64>,
    /// Family parameter K (soln1, soln_family) and the curvature constant checked.
    #[arg(long = "K", allow_negative_numbers = true)]
    k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    branch: Option<u8>,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Domain radius; defaults to the family's (pre-scanned) radius.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Samples in r and s: `40` or `40x30`.
    #[arg(long, default_value_t = DEFAULT_GRID.to_string())]
    grid: String,
    #[arg(long, default_value_t = crate::catalog::R_MIN)]
    r_min: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Random points for the oracle comparison (0 disables it).
    #[arg(long, default_value_t = DEFAULT_ORACLE_POINTS)]
    oracle_points: usize,
    /// Re-read a JSON report, re-derive its verdicts and report them.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Output file; defaults to $SSFINSLER_OUTPUT_DIR/<command>.<ext>, else stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

/// Parse `args` (including the program name), run the command and return the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                EXIT_DOMAIN
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Catalog { out } => cmd_catalog(&out),
        Command::Verify(args) => cmd_verify(&args),
        Command::Scan { metric, grid, out } => cmd_scan(&metric, &grid, &out),
        Command::OracleCheck {
            metric,
            points,
            seed,
            tol,
            out,
        } => cmd_oracle_check(&metric, points, seed, tol, &out),
        Command::SolveQ { u, c, d, k, v, out } => cmd_solve_q(u, c, d, k, v, &out),
    }
}

fn build_family(m: &MetricArgs) -> Result<Family> {
    let id = m
        .metric
        .as_deref()
        .ok_or_else(|| Error::usage("--metric is required"))?;
    let or = |v: Option<f64>, default: f64| v.unwrap_or(default);
    let family = match id {
        "euclidean" => Family::Euclidean {},
        "klein" => Family::Klein {},
        "proj_sphere" => Family::ProjSphere {},
        "funk" => Family::Funk {},
        "berwald" => Family::Berwald {},
        "shen" => Family::Shen {
            eps: m.eps.ok_or_else(|| Error::usage("shen needs --eps"))?,
        },
        "soln1" => Family::Soln1 {
            c: or(m.c, 1.0),
            k: or(m.k, -1.0),
        },
        "soln_family" => Family::SolnFamily {
            c: or(m.c, 1.0),
            d: or(m.d, 0.3),
            k: or(m.k, 1.0),
            branch: m.branch.unwrap_or(0),
        },
        "soln_k0" => Family::SolnK0 {
            c: or(m.c, 2.0),
            d: or(m.d, 0.5),
        },
        "soln_km1" => Family::SolnKm1 {
            c: or(m.c, 2.0),
            d: or(m.d, 0.5),
        },
        "bryant" => Family::Bryant {
            c: or(m.c, 1.0),
            d: or(m.d, 0.3),
        },
        "test_poly" => Family::TestPoly {
            a: or(m.a, 0.1),
            b: or(m.b, 0.05),
        },
        other => {
            let known: Vec<&str> = list_catalog().iter().map(|e| e.family).collect();
            return Err(Error::usage(format!(
                "unknown metric '{other}' (known: {})",
                known.join(", ")
            )));
        }
    };
    Ok(family)
}

fn build_spec(m: &MetricArgs) -> Result<MetricSpec> {
    let family = build_family(m)?;
    match m.rho {
        Some(rho) => MetricSpec::with_rho(family, m.n, rho),
        None => MetricSpec::new(family, m.n),
    }
}

fn build_grid(g: &GridArgs, rho: f64) -> Result<Grid> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::usage(format!("bad --grid '{}'", g.grid)))
    };
    let (nr, ns) = match g.grid.split_once(['x', 'X']) {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let n = parse(&g.grid)?;
            (n, n)
        }
    };
    Grid::new(nr, ns, g.r_min, rho, g.delta)
}

/// Write `body` to `--output`, the env directory, or stdout.
fn emit(out: &OutputArgs, stem: &str, body: &str) -> Result<()> {
    let path = out.output.clone().or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{stem}.{}", out.format.ext())))
    });
    let mut body = body.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .map_err(|e| Error::usage(format!("cannot create {}: {e}", dir.display())))?;
            }
            fs::write(&p, body)
                .map_err(|e| Error::usage(format!("cannot write {}: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(body.as_bytes());
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

fn csv_rows<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::usage(format!("csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_catalog(out: &OutputArgs) -> Result<i32> {
    let entries = list_catalog();
    let body = match out.format {
        Format::Json => to_json(&entries),
        Format::Csv => csv_rows(
            &["family", "params", "constraints", "K_target", "note"],
            entries.iter().map(|e| {
                vec![
                    e.family.to_string(),
                    e.params.join(" "),
                    e.constraints.to_string(),
                    serde_json::to_string(&e.k_target).unwrap_or_default(),
                    e.note.to_string(),
                ]
            }),
        )?,
        Format::Text => {
            let mut t = format!("{:<12} {:<22} {:<9} {}\n", "family", "params", "K", "note");
            for e in &entries {
                let k = serde_json::to_string(&e.k_target).unwrap_or_default();
                t += &format!(
                    "{:<12} {:<22} {:<9} {}\n",
                    e.family,
                    e.params.join(", "),
                    if k == "null" {
                        "-"
                    } else {
                        k.trim_matches('"')
                    },
                    e.note
                );
            }
            t
        }
    };
    emit(out, "catalog", &body)?;
    Ok(EXIT_PASS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    if let Some(path) = &args.replay {
        return cmd_replay(path, &args.out);
    }
    let spec = build_spec(&args.metric)?;
    let config = SuiteConfig {
        grid: build_grid(&args.grid, spec.rho)?,
        tol: args.tol,
        seed: args.seed,
        oracle_points: args.oracle_points,
        k: args.metric.k,
    };
    let report = verify::run_suite(&spec, &config)?;
    write_report(&report, &args.out)?;
    Ok(report_exit(report.pass, report.numeric_error))
}

fn report_exit(pass: bool, numeric_error: bool) -> i32 {
    if numeric_error {
        EXIT_DOMAIN
    } else if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn write_report(report: &VerificationReport, out: &OutputArgs) -> Result<()> {
    let body = match out.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv()?,
        Format::Text => report.to_string(),
    };
    emit(out, &format!("verify-{}", report.spec.family.id()), &body)
}

fn cmd_replay(path: &PathBuf, out: &OutputArgs) -> Result<i32> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read {}: {e}", path.display())))?;
    let report = VerificationReport::from_json(&text)?;
    let verdicts = report.recomputed_verdicts();
    if verdicts != report.verdicts {
        eprintln!(
            "verdicts in {} do not follow from its residuals:\n  stored     {:?}\n  recomputed {:?}",
            path.display(),
            report.verdicts.as_map(),
            verdicts.as_map()
        );
        return Ok(EXIT_FAIL);
    }
    write_report(&report, out)?;
    Ok(report_exit(report.pass, report.numeric_error))
}

#[derive(Debug, Serialize)]
struct ScanPoint {
    #[serde(flatten)]
    summary: Option<BundleSummary>,
    r: Option<f64>,
    s: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ScanReport {
    schema_version: u32,
    spec: MetricSpec,
    grid: Grid,
    feasible_radius: Option<f64>,
    #[serde(rename = "K_hat")]
    k_hat: Option<KHat>,
    points: Vec<ScanPoint>,
}

fn cmd_scan(metric: &MetricArgs, grid: &GridArgs, out: &OutputArgs) -> Result<i32> {
    let spec = build_spec(metric)?;
    let grid = build_grid(grid, spec.rho)?;
    let samples = verify::Samples::evaluate(&spec, &grid);
    let mut errors = 0;
    let points: Vec<ScanPoint> = samples
        .bundles
        .iter()
        .map(|(p, b)| match b {
            Ok(b) => ScanPoint {
                summary: Some(b.summary()),
                r: None,
                s: None,
                error: None,
            },
            Err(e) => {
                errors += 1;
                ScanPoint {
                    summary: None,
                    r: Some(p.r),
                    s: Some(p.s),
                    error: Some(e.to_string()),
                }
            }
        })
        .collect();
    let report = ScanReport {
        schema_version: SCHEMA_VERSION,
        spec,
        grid,
        feasible_radius: spec
            .family
            .has_scanned_domain()
            .then(|| default_rho(&spec.family).ok())
            .flatten(),
        k_hat: samples.k_hat(),
        points,
    };
    let cols = [
        "r", "s", "P", "Q", "psi", "R1", "R2", "R3", "R4", "M", "K_hat",
    ];
    let row = |b: &BundleSummary| {
        [
            b.r, b.s, b.p, b.q, b.psi, b.r1, b.r2, b.r3, b.r4, b.m, b.k_hat,
        ]
    };
    let body = match out.format {
        Format::Json => to_json(&report),
        Format::Csv => csv_rows(
            &cols,
            report
                .points
                .iter()
                .filter_map(|p| p.summary.as_ref())
                .map(|b| row(b).iter().map(|v| format!("{v:?}")).collect::<Vec<_>>()),
        )?,
        Format::Text => {
            let mut t = format!(
                "metric {} (n = {}, rho = {}), grid {}x{}, r_min = {}, delta = {}\n",
                spec.family, spec.n, spec.rho, grid.nr, grid.ns, grid.r_min, grid.delta
            );
            if let Some(k) = report.k_hat {
                t += &format!("K_hat mean {:.12} spread {:.3e}\n", k.mean, k.spread);
            }
            t += &cols.iter().map(|c| format!("{c:>12}")).collect::<String>();
            t.push('\n');
            for p in &report.points {
                match (&p.summary, &p.error) {
                    (Some(b), _) => {
                        t += &row(b)
                            .iter()
                            .map(|v| format!("{v:>12.4e}"))
                            .collect::<String>()
                    }
                    (None, Some(e)) => t += &format!("error: {e}"),
                    _ => {}
                }
                t.push('\n');
            }
            t
        }
    };
    emit(out, &format!("scan-{}", spec.family.id()), &body)?;
    Ok(if errors > 0 { EXIT_DOMAIN } else { EXIT_PASS })
}

fn cmd_oracle_check(
    metric: &MetricArgs,
    points: usize,
    seed: u64,
    tol: f64,
    out: &OutputArgs,
) -> Result<i32> {
    let spec = build_spec(metric)?;
    if spec.n > 6 {
        return Err(Error::usage(format!(
            "oracle-check is limited to n <= 6 (got {})",
            spec.n
        )));
    }
    if points == 0 {
        return Err(Error::usage("--points must be at least 1"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::usage(format!("tol must lie in (0, 1), got {tol}")));
    }
    let k = metric.k.or_else(|| spec.k_target());
    let report = verify::run_oracle_check(&spec, points, seed, k, tol);
    let body = match out.format {
        Format::Json => to_json(&report),
        Format::Csv => oracle_csv(&report)?,
        Format::Text => format!(
            "metric {} (n = {}, rho = {}), {} points, seed {}\n\n{}\noverall {}",
            spec.family,
            spec.n,
            spec.rho,
            points,
            seed,
            check_table(&report.checks),
            if report.pass { "PASS" } else { "FAIL" }
        ),
    };
    emit(out, &format!("oracle-{}", spec.family.id()), &body)?;
    Ok(report_exit(report.pass, report.numeric_error))
}

fn oracle_csv(report: &OracleReport) -> Result<String> {
    csv_rows(
        &["r", "s", "check", "residual"],
        report.checks.iter().flat_map(|c| {
            c.per_point.iter().map(move |&(r, s, v)| {
                vec![
                    format!("{r:?}"),
                    format!("{s:?}"),
                    c.name.clone(),
                    format!("{v:?}"),
                ]
            })
        }),
    )
}

fn cmd_solve_q(u: f64, c: f64, d: f64, k: f64, v: Option<f64>, out: &OutputArgs) -> Result<i32> {
    let mut sol = verify::solve_q(u, c, d, k)?;
    if let Some(v) = v {
        sol = sol.evaluate(v, None)?;
    }
    let ok = match v {
        Some(_) => sol.branch_used.is_some(),
        None => !sol.roots.is_empty(),
    };
    let body = match out.format {
        Format::Json => to_json(&sol),
        Format::Csv => csv_rows(
            &["q", "q2", "multiplicity", "residual", "phi", "admissible"],
            sol.roots.iter().map(|r| {
                vec![
                    r.q.to_string(),
                    (r.q * r.q).to_string(),
                    r.multiplicity.to_string(),
                    r.residual.to_string(),
                    r.phi.map_or(String::new(), |p| p.to_string()),
                    r.admissible.map_or(String::new(), |a| a.to_string()),
                ]
            }),
        )?,
        Format::Text => solve_q_text(&sol),
    };
    emit(out, "solve-q", &body)?;
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn solve_q_text(sol: &QuarticSolution) -> String {
    let mut t = format!(
        "D^2 q^4 + (u - C) q^2 - K = 0 with u = {}, C = {}, D = {}, K = {}\ndiscriminant (C - u)^2 + 4 D^2 K = {:e}\n",
        sol.u, sol.c, sol.d, sol.k, sol.discriminant
    );
    if let Some(d) = &sol.diagnostic {
        t += &format!("{d}\n");
    }
    for (i, r) in sol.roots.iter().enumerate() {
        t += &format!(
            "q = {:>+.10}  q^2 = {:.10}  mult {}  residual {:.1e}",
            r.q,
            r.q * r.q,
            r.multiplicity,
            r.residual
        );
        if let Some(phi) = r.phi {
            t += &format!("  phi = {phi:.10}");
            if r.admissible == Some(false) {
                t += " (phi <= 0, not admissible)";
            }
        }
        if sol.branch_used == Some(i) {
            t += "  <- selected";
        }
        t.push('\n');
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("ssfinsler").chain(args.iter().copied()))
    }

    fn metric_of(args: &[&str]) -> MetricArgs {
        match parse(args).unwrap().command {
            Command::Verify(v) => v.metric,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_parameters_parse() {
        let m = metric_of(&["verify", "--metric", "shen", "--eps", "-0.5", "--K", "-1"]);
        assert_eq!(build_family(&m).unwrap(), Family::Shen { eps: -0.5 });
        assert_eq!(m.k, Some(-1.0));
    }

    #[test]
    fn family_defaults_and_errors() {
        let m = metric_of(&["verify", "--metric", "bryant"]);
        assert_eq!(build_family(&m).unwrap(), Family::Bryant { c: 1.0, d: 0.3 });
        let m = metric_of(&["verify", "--metric", "soln1", "--K", "-2"]);
        assert_eq!(build_family(&m).unwrap(), Family::Soln1 { c: 1.0, k: -2.0 });
        assert!(build_family(&metric_of(&["verify", "--metric", "shen"])).is_err());
        assert!(build_family(&metric_of(&["verify", "--metric", "nope"])).is_err());
        assert!(build_family(&metric_of(&["verify"])).is_err());
    }

    #[test]
    fn grid_flag_forms() {
        let g = |s: &str| GridArgs {
            grid: s.into(),
            r_min: 1e-3,
            delta: 1e-3,
        };
        let grid = build_grid(&g("40x30"), 1.0).unwrap();
        assert_eq!((grid.nr, grid.ns), (40, 30));
        assert_eq!(build_grid(&g("12"), 1.0).unwrap().ns, 12);
        assert!(build_grid(&g("ax3"), 1.0).is_err());
        assert!(build_grid(&g("0"), 1.0).is_err());
    }

    #[test]
    fn malformed_flags_exit_2() {
        assert_eq!(
            main_with_args(["ssfinsler", "verify", "--tol", "abc"]),
            EXIT_USAGE
        );
        assert_eq!(main_with_args(["ssfinsler", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["ssfinsler", "verify", "--metric", "funk", "--tol", "2"]),
            EXIT_USAGE
        );
        assert_eq!(main_with_args(["ssfinsler", "--help"]), EXIT_PASS);
    }
}
