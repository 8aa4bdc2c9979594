//! Command-line front end.
//!
//! Exit codes: 0 success or Metric, 1 not metric (or not compatible),
//! 2 inconclusive or flat with a global defect, 3 input error.

pub mod report;
pub mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::connection::{compatibility_residual_max, curvature, ConnectionMatrix, MetricField};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forms::{Chart, OneForm};
use crate::gallery::{self, Example, RiemannianMetric2D};
use crate::metrizability::{
    check_metrizability_with, CheckOptions, MetrizabilityReport, RecoveredMetric, Verdict,
    CERTIFICATION, NORMALIZATION,
};
use crate::tolerance::Tolerances;
use crate::volume_euler::{compare_euler, euler_form, volume_criterion, VolumeReport};

pub use report::Envelope;
pub use spec::SpecFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_METRIC: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Steps used for metric transport in the torus example.
const TRANSPORT_STEPS: usize = 1024;

#[derive(Debug, Parser)]
#[command(
    name = "locmet",
    version,
    about = "Local metrizability of connections on surface charts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Override the grid size of the chart.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"], global = true)]
    grid: Option<Vec<usize>>,
    /// Scale every tolerance by this factor.
    #[arg(long, value_name = "T", default_value_t = 1.0, global = true)]
    tol: f64,
    /// Emit the machine-readable JSON envelope.
    #[arg(long, global = true)]
    json: bool,
    /// Basepoint for parallel frames and sign choices (snapped to a node).
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true, global = true)]
    basepoint: Option<Vec<f64>>,
    /// Include wall-clock time in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether the connection is locally metric.
    Check { spec: PathBuf },
    /// Like `check`, and dump the recovered metric on the grid.
    Metric { spec: PathBuf },
    /// Test for a parallel volume form.
    Volume { spec: PathBuf },
    /// Euler form and number of a connection compatible with `[metric]`.
    Euler { spec: PathBuf },
    /// Compare Euler numbers of two connections sharing one metric.
    Compare {
        spec: PathBuf,
        /// Spec holding the second connection; `[connection2]` of SPEC otherwise.
        other: Option<PathBuf>,
        /// Spec holding the shared metric; `[metric]` of SPEC otherwise.
        #[arg(long)]
        metric: Option<PathBuf>,
    },
    /// Torsion of a tangent-bundle connection in the coordinate frame.
    Torsion { spec: PathBuf },
    /// Levi-Civita connection of `[metric]`.
    LeviCivita { spec: PathBuf },
    /// Semi-symmetric connection of `[metric]` and `[oneform]`.
    SemiSymmetric { spec: PathBuf },
    /// Run a gallery example: torus, hyperbolic_band, semi_symmetric.
    Example { name: String },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Metric { .. } => "metric",
            Command::Volume { .. } => "volume",
            Command::Euler { .. } => "euler",
            Command::Compare { .. } => "compare",
            Command::Torsion { .. } => "torsion",
            Command::LeviCivita { .. } => "levi-civita",
            Command::SemiSymmetric { .. } => "semi-symmetric",
            Command::Example { .. } => "example",
        }
    }
}

struct Context {
    tol: Tolerances,
    grid: Option<(usize, usize)>,
    basepoint: Option<(f64, f64)>,
}

impl Context {
    fn load(&self, path: &Path, env: &mut Envelope, key: &str) -> Result<SpecFile> {
        let mut spec = SpecFile::read(path)?;
        if let Some((nx, ny)) = self.grid {
            spec.chart = spec.chart.with_grid(nx, ny)?;
        }
        env.text(format!("{key}.digest"), spec.digest.clone());
        Ok(spec)
    }

    fn chart(&self, chart: Chart) -> Result<Chart> {
        match self.grid {
            Some((nx, ny)) => chart.with_grid(nx, ny),
            None => Ok(chart),
        }
    }

    fn check_options(&self) -> CheckOptions {
        CheckOptions {
            tolerances: self.tol,
            basepoint: self.basepoint,
            ..CheckOptions::default()
        }
    }
}

fn exit_code_of(err: &Error) -> i32 {
    match err {
        Error::NotCompatible { .. } => EXIT_NOT_METRIC,
        _ => EXIT_INPUT,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Parse(_) => "parse",
        Error::Spec(_) => "spec",
        Error::Domain(_) => "domain",
        Error::InvalidChart(_) => "invalid_chart",
        Error::InvalidPath(_) => "invalid_path",
        Error::SingularFrame(_) => "singular_frame",
        Error::NotFlat { .. } => "not_flat",
        Error::ChartMismatch => "chart_mismatch",
        Error::DegenerateVolume(_) => "degenerate_volume",
        Error::EigenPreconditionFailed(_) => "eigen_precondition",
        Error::NotSpd(_) => "not_spd",
        Error::NotCompatible { .. } => "not_compatible",
        Error::Precondition(_) => "precondition",
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_INPUT
                }
            };
        }
    };
    let start = Instant::now();
    let name = cli.command.name();
    let mut env = Envelope::new(name);
    let common = &cli.common;
    let code = match context(common) {
        Ok(ctx) => {
            env.tolerances(&ctx.tol);
            match dispatch(&cli.command, &ctx, &mut env) {
                Ok(code) => code,
                Err(e) => {
                    let _ = writeln!(err, "locmet {name}: {e}");
                    env.text("error.kind", error_kind(&e));
                    env.text("error.message", e.to_string());
                    exit_code_of(&e)
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "locmet {name}: {e}");
            env.text("error.kind", error_kind(&e));
            env.text("error.message", e.to_string());
            EXIT_INPUT
        }
    };
    env.int("exit_code", code as i64);
    let elapsed = start.elapsed().as_secs_f64();
    if common.timing {
        env.num("wall_clock_seconds", elapsed);
    }
    let _ = writeln!(err, "locmet {name}: finished in {elapsed:.3} s");
    let body = if common.json {
        env.to_json()
    } else {
        env.to_text()
    };
    let _ = out.write_all(body.as_bytes());
    code
}

fn context(c: &Common) -> Result<Context> {
    if !(c.tol.is_finite() && c.tol > 0.0) {
        return Err(Error::Precondition(format!(
            "--tol must be positive, got {}",
            c.tol
        )));
    }
    Ok(Context {
        tol: Tolerances::default().scaled(c.tol),
        grid: c.grid.as_ref().map(|g| (g[0], g[1])),
        basepoint: c.basepoint.as_ref().map(|b| (b[0], b[1])),
    })
}

fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Precondition(format!("spec has no {what} section")))
}

fn dispatch(cmd: &Command, ctx: &Context, env: &mut Envelope) -> Result<i32> {
    match cmd {
        Command::Check { spec } | Command::Metric { spec } => {
            let s = ctx.load(spec, env, "spec")?;
            let theta = require(s.connection(), "[connection]")?;
            put_chart(env, &s.chart);
            let r = check_metrizability_with(&theta, &ctx.check_options())?;
            put_check(env, "", &r)?;
            if matches!(cmd, Command::Metric { .. }) {
                put_metric_grid(env, &r)?;
            }
            Ok(check_code(&r))
        }
        Command::Volume { spec } => {
            let s = ctx.load(spec, env, "spec")?;
            let theta = require(s.connection(), "[connection]")?;
            put_chart(env, &s.chart);
            let r = volume_criterion(&theta, ctx.basepoint, &ctx.tol)?;
            put_volume(env, "", &r, true);
            Ok(volume_code(&r, &ctx.tol))
        }
        Command::Euler { spec } => {
            let s = ctx.load(spec, env, "spec")?;
            let theta = require(s.connection(), "[connection]")?;
            let g = require(s.metric_field(), "[metric]")?;
            put_chart(env, &s.chart);
            let r = euler_form(&theta, &g, &ctx.tol)?;
            env.num("euler.number", r.euler_number);
            env.text("euler.form", r.euler_form.coeff.to_string());
            env.num("euler.compat_residual", r.compat_residual);
            env.num("euler.skew_residual", r.skew_residual);
            Ok(EXIT_OK)
        }
        Command::Compare {
            spec,
            other,
            metric,
        } => {
            let s = ctx.load(spec, env, "spec")?;
            let first = require(s.connection(), "[connection]")?;
            let second = match other {
                Some(p) => require(ctx.load(p, env, "spec2")?.connection(), "[connection]")?,
                None => require(s.connection2(), "[connection2]")?,
            };
            let g = match metric {
                Some(p) => require(ctx.load(p, env, "metric_spec")?.metric_field(), "[metric]")?,
                None => require(s.metric_field(), "[metric]")?,
            };
            put_chart(env, &s.chart);
            let r = compare_euler(&first, &second, &g, &ctx.tol)?;
            env.num("euler.first", r.first.euler_number);
            env.num("euler.second", r.second.euler_number);
            env.num("euler.difference", r.difference);
            env.flag("euler.equal", r.difference <= ctx.tol.defect);
            Ok(EXIT_OK)
        }
        Command::Torsion { spec } => {
            let s = ctx.load(spec, env, "spec")?;
            let theta = require(s.connection(), "[connection]")?;
            put_chart(env, &s.chart);
            put_torsion(env, &theta)?;
            Ok(EXIT_OK)
        }
        Command::LeviCivita { spec } => {
            let s = ctx.load(spec, env, "spec")?;
            put_chart(env, &s.chart);
            let g = RiemannianMetric2D::new(require(s.metric_field(), "[metric]")?)?;
            let theta = gallery::levi_civita(&g);
            put_connection(env, "connection", &theta);
            env.num(
                "compat_residual",
                compatibility_residual_max(&theta, g.metric())?.value,
            );
            env.num("torsion.max_abs", gallery::torsion(&theta).max_abs()?);
            Ok(EXIT_OK)
        }
        Command::SemiSymmetric { spec } => {
            let s = ctx.load(spec, env, "spec")?;
            put_chart(env, &s.chart);
            let g = RiemannianMetric2D::new(require(s.metric_field(), "[metric]")?)?;
            let u = s.oneform.clone().unwrap_or_else(OneForm::zero);
            put_semi_symmetric(env, &g, &u)?;
            Ok(EXIT_OK)
        }
        Command::Example { name } => {
            let ex = gallery::by_name(name).ok_or_else(|| {
                Error::Precondition(format!(
                    "unknown example `{name}`; expected one of {}",
                    gallery::EXAMPLES.join(", ")
                ))
            })?;
            run_example(ex, ctx, env)
        }
    }
}

fn run_example(ex: Example, ctx: &Context, env: &mut Envelope) -> Result<i32> {
    match ex {
        Example::Torus(theta) => {
            env.text("example", "torus");
            let theta = theta.on_chart(ctx.chart(*theta.chart())?);
            put_chart(env, theta.chart());
            put_connection(env, "connection", &theta);
            let exact = curvature(&theta)
                .entries()
                .iter()
                .all(|w| w.coeff.is_zero());
            env.flag("curvature.exactly_zero", exact);
            let r = check_metrizability_with(&theta, &ctx.check_options())?;
            put_check(env, "", &r)?;
            let growth = gallery::transport_growth(&theta, r.basepoint.y, TRANSPORT_STEPS)?;
            let want = (4.0 * std::f64::consts::PI).exp();
            env.num("transport.growth", growth);
            env.num("transport.expected", want);
            env.num("transport.relative_error", (growth - want).abs() / want);
            env.int("transport.steps", TRANSPORT_STEPS as i64);
            let v = volume_criterion(&theta, ctx.basepoint, &ctx.tol)?;
            put_volume(env, "volume.", &v, false);
            Ok(check_code(&r))
        }
        Example::HyperbolicBand(g) => {
            env.text("example", "hyperbolic_band");
            let g = RiemannianMetric2D::new(g.metric().on_chart(ctx.chart(*g.chart())?))?;
            put_chart(env, g.chart());
            put_metric(env, "metric.input", g.metric());
            let theta = gallery::levi_civita(&g);
            put_connection(env, "connection", &theta);
            env.num(
                "compat_residual",
                compatibility_residual_max(&theta, g.metric())?.value,
            );
            let r = check_metrizability_with(&theta, &ctx.check_options())?;
            put_check(env, "", &r)?;
            let e = euler_form(&theta, g.metric(), &ctx.tol)?;
            env.num("euler.number", e.euler_number);
            env.text("euler.form", e.euler_form.coeff.to_string());
            Ok(check_code(&r))
        }
        Example::SemiSymmetric(g, u) => {
            env.text("example", "semi_symmetric");
            let g = RiemannianMetric2D::new(g.metric().on_chart(ctx.chart(*g.chart())?))?;
            put_chart(env, g.chart());
            put_metric(env, "metric.input", g.metric());
            let theta = put_semi_symmetric(env, &g, &u)?;
            let lc = gallery::levi_civita(&g);
            let r = compare_euler(&lc, &theta, g.metric(), &ctx.tol)?;
            env.num("euler.levi_civita", r.first.euler_number);
            env.num("euler.semi_symmetric", r.second.euler_number);
            env.num("euler.difference", r.difference);
            // The band is open in x, so the two integrals may differ by a
            // boundary term. On the torus they must agree.
            let torus = ctx.chart(Chart::torus())?;
            let wave = (Expr::x().sin() * 0.4).exp();
            let gp =
                RiemannianMetric2D::new(MetricField::new(Expr::one(), Expr::zero(), wave, torus))?;
            let up = OneForm::new(Expr::constant(0.3), Expr::y().cos() * 0.2);
            let r = compare_euler(
                &gallery::levi_civita(&gp),
                &gallery::semi_symmetric(&gp, &up),
                gp.metric(),
                &ctx.tol,
            )?;
            env.text(
                "euler.periodic.metric",
                "diag(1, exp(0.4*sin(x))) on the torus",
            );
            env.text("euler.periodic.oneform", "0.3 dx + 0.2*cos(y) dy");
            env.num("euler.periodic.levi_civita", r.first.euler_number);
            env.num("euler.periodic.semi_symmetric", r.second.euler_number);
            env.num("euler.periodic.difference", r.difference);
            Ok(EXIT_OK)
        }
    }
}

/// The envelope `check --json` prints for `spec` and its report.
pub fn check_envelope(spec: &SpecFile, r: &MetrizabilityReport) -> Result<Envelope> {
    let mut env = Envelope::new("check");
    env.tolerances(&r.tolerances);
    env.text("spec.digest", spec.digest.clone());
    put_chart(&mut env, &r.chart);
    put_check(&mut env, "", r)?;
    env.int("exit_code", check_code(r) as i64);
    Ok(env)
}

/// Exit code of `check` for a report.
pub fn check_code(r: &MetrizabilityReport) -> i32 {
    match r.verdict {
        Verdict::Metric => EXIT_OK,
        Verdict::Flat if r.has_flat_defect() => EXIT_INCONCLUSIVE,
        Verdict::Flat => EXIT_OK,
        Verdict::NotMetricEigen | Verdict::NotMetricSkew => EXIT_NOT_METRIC,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn volume_code(r: &VolumeReport, tol: &Tolerances) -> i32 {
    let defect = [r.period_defects.0, r.period_defects.1]
        .into_iter()
        .flatten()
        .any(|d| !(d.abs() <= tol.defect));
    if !r.closed {
        EXIT_NOT_METRIC
    } else if defect {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}

fn put_chart(env: &mut Envelope, c: &Chart) {
    let (x, y) = (c.x_range(), c.y_range());
    env.num("chart.x0", x.0);
    env.num("chart.x1", x.1);
    env.num("chart.y0", y.0);
    env.num("chart.y1", y.1);
    env.flag("chart.periodic.x", c.periodic().0);
    env.flag("chart.periodic.y", c.periodic().1);
    env.int("chart.grid.nx", c.grid().0 as i64);
    env.int("chart.grid.ny", c.grid().1 as i64);
}

fn put_connection(env: &mut Envelope, prefix: &str, theta: &ConnectionMatrix) {
    for i in 0..2 {
        for j in 0..2 {
            let a = theta.entry(i, j);
            env.text(format!("{prefix}.{}.{}.dx", i + 1, j + 1), a.dx.to_string());
            env.text(format!("{prefix}.{}.{}.dy", i + 1, j + 1), a.dy.to_string());
        }
    }
}

fn put_metric(env: &mut Envelope, prefix: &str, g: &MetricField) {
    let e = g.entries();
    env.text(format!("{prefix}.1.1"), e.get(0, 0).to_string());
    env.text(format!("{prefix}.1.2"), e.get(0, 1).to_string());
    env.text(format!("{prefix}.2.2"), e.get(1, 1).to_string());
}

fn put_check(env: &mut Envelope, prefix: &str, r: &MetrizabilityReport) -> Result<()> {
    let k = |s: &str| format!("{prefix}{s}");
    env.text(k("verdict"), r.verdict.name());
    env.point(&k("witness"), r.witness);
    env.point(&k("basepoint"), Some(r.basepoint));
    match &r.note {
        Some(n) => env.text(k("note"), n.clone()),
        None => env.set(k("note"), serde_json::Value::Null),
    }
    env.text(k("normalization"), NORMALIZATION);
    env.text(k("certification"), CERTIFICATION);
    let d = &r.diagnostics;
    env.num(k("diagnostics.max_curvature"), d.max_curvature);
    env.num(k("diagnostics.flat_threshold"), d.flat_threshold);
    env.num(
        k("diagnostics.curvature_zero_fraction"),
        d.curvature_zero_fraction,
    );
    env.opt_num(k("diagnostics.max_abs_trace_u"), d.max_abs_trace_u);
    env.opt_num(k("diagnostics.min_det_u"), d.min_det_u);
    env.opt_num(
        k("diagnostics.symmetrizer_residual"),
        d.symmetrizer_residual,
    );
    env.opt_num(k("diagnostics.sqrt_residual"), d.sqrt_residual);
    env.opt_num(k("diagnostics.max_skew_residual"), d.max_skew_residual);
    env.opt_num(k("diagnostics.skew_threshold"), d.skew_threshold);
    env.opt_num(k("diagnostics.max_abs_trace_theta"), d.max_abs_trace_theta);
    env.opt_num(k("diagnostics.compat_residual"), d.compat_residual);
    env.opt_num(k("diagnostics.compat_threshold"), d.compat_threshold);
    if let Some(f) = d.flat {
        env.num(k("diagnostics.flat.frame_residual"), f.frame_residual);
        env.num(k("diagnostics.flat.sweep_discrepancy"), f.sweep_discrepancy);
        env.opt_num(k("diagnostics.flat.x_loop_defect"), f.x_loop_defect);
        env.opt_num(k("diagnostics.flat.y_loop_defect"), f.y_loop_defect);
        env.flag(k("diagnostics.flat.has_defect"), r.has_flat_defect());
    }
    match &r.metric {
        Some(m) => {
            let b = r.basepoint;
            env.matrix(&k("metric.at_basepoint"), &m.at(b.ix, b.iy)?);
            match m {
                RecoveredMetric::Symbolic(g) => {
                    env.text(k("metric.kind"), "symbolic");
                    put_metric(env, &k("metric"), g);
                }
                RecoveredMetric::Conformal { base, .. } => {
                    env.text(k("metric.kind"), "conformal");
                    put_metric(env, &k("metric.base"), base);
                }
                RecoveredMetric::Sampled(_) => env.text(k("metric.kind"), "sampled"),
            }
        }
        None => env.set(k("metric"), serde_json::Value::Null),
    }
    Ok(())
}

fn put_metric_grid(env: &mut Envelope, r: &MetrizabilityReport) -> Result<()> {
    let Some(m) = &r.metric else {
        return Ok(());
    };
    let values = m.sample()?;
    for p in r.chart.points() {
        let g = &values[r.chart.index(p.ix, p.iy)];
        let key = format!("metric.grid.{:04}.{:04}", p.ix, p.iy);
        env.num(format!("{key}.x"), p.x);
        env.num(format!("{key}.y"), p.y);
        env.num(format!("{key}.g11"), g.0[0][0]);
        env.num(format!("{key}.g12"), g.0[0][1]);
        env.num(format!("{key}.g22"), g.0[1][1]);
    }
    Ok(())
}

fn put_volume(env: &mut Envelope, prefix: &str, r: &VolumeReport, dump: bool) {
    let k = |s: &str| format!("{prefix}{s}");
    env.flag(k("closed"), r.closed);
    env.num(k("trace_curvature_max"), r.trace_curvature_max);
    env.num(k("threshold"), r.threshold);
    env.opt_num(k("period_defect.x"), r.period_defects.0);
    env.opt_num(k("period_defect.y"), r.period_defects.1);
    env.opt_num(k("reconstruction_residual"), r.reconstruction_residual);
    env.point(&k("basepoint"), Some(r.basepoint));
    if let (true, Some(f)) = (dump, &r.log_f) {
        for p in f.chart.points() {
            let key = format!("{prefix}log_f.grid.{:04}.{:04}", p.ix, p.iy);
            env.num(format!("{key}.x"), p.x);
            env.num(format!("{key}.y"), p.y);
            env.num(format!("{key}.value"), f.at(p.ix, p.iy));
        }
    }
}

fn put_torsion(env: &mut Envelope, theta: &ConnectionMatrix) -> Result<()> {
    let t = gallery::torsion(theta);
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                env.text(
                    format!("torsion.{}.{}.{}", k + 1, i + 1, j + 1),
                    t.component(k, i, j).to_string(),
                );
            }
        }
    }
    env.num("torsion.max_abs", t.max_abs()?);
    env.num("torsion.antisymmetry_defect", t.antisymmetry_defect()?);
    Ok(())
}

fn put_semi_symmetric(
    env: &mut Envelope,
    g: &RiemannianMetric2D,
    u: &OneForm,
) -> Result<ConnectionMatrix> {
    env.text("oneform.dx", u.dx.to_string());
    env.text("oneform.dy", u.dy.to_string());
    let theta = gallery::semi_symmetric(g, u);
    put_connection(env, "connection", &theta);
    env.num(
        "compat_residual",
        compatibility_residual_max(&theta, g.metric())?.value,
    );
    put_torsion(env, &theta)?;
    env.num(
        "torsion.formula_residual",
        gallery::torsion_formula_residual(&theta, u)?,
    );
    Ok(theta)
}
