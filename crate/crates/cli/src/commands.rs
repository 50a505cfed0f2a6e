use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::str::FromStr;

use quarter_cantor::measure::{self, LeakagePolicy, UnitaryTruncation};
use num_rational::Ratio;
use quarter_cantor::operator::{self, OperatorKind};
use quarter_cantor::sim::{self, IntervalQuery, Representation};
use quarter_cantor::spectrum::{self, gamma_set, CoeffVector, GammaSet};
use quarter_cantor::transform::{ScaleRatio, Transform};

use crate::output::{self, envelope, finite, num, Artifact, Format};

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(name = "qcantor", version, about = "Spectral computations for the 1/4-Cantor measure")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalOpts {
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (written atomically). Defaults to $QCANTOR_OUT_DIR/<command>.<ext>, then stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 = automatic. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
    /// Absolute accuracy of every transform evaluation.
    #[arg(long, global = true, default_value_t = quarter_cantor::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Evaluate μ̂_λ at one or more frequencies.
    Transform(TransformArgs),
    /// List the first 2^m elements of scale·Γ.
    Gamma(SetArgs),
    /// Gram matrix of the first 2^m exponentials of scale·Γ.
    Gram(SetArgs),
    /// Coefficients of e_t in the truncated basis.
    Expand(ExpandArgs),
    /// Parseval defect of e_t for every truncation up to m digits.
    Parseval(ExpandArgs),
    /// Dump a truncated operator and its structural checks.
    Operator(OperatorArgs),
    /// e₅ coefficients of U³e₁ and e₁₂₅.
    Regression(RegressionArgs),
    /// Moments c_k = ⟨Uᵏv, v⟩.
    Moments(MomentArgs),
    /// Atom at 1 and Fejér density of m_v.
    Atom(MomentArgs),
    /// Cesàro averages of Uᵏf.
    Ergodic(ErgodicArgs),
    /// Monte Carlo samples of μ_λ.
    Sample(SampleArgs),
    /// Empirical characteristic function against the product formula.
    Char(CharArgs),
    /// Mass of an interval under the τ_n pushforward.
    Pushforward(PushforwardArgs),
    /// Plot data for τ₅ over the Cantor set.
    Figure1(FigureArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Transform(_) => "transform",
            Command::Gamma(_) => "gamma",
            Command::Gram(_) => "gram",
            Command::Expand(_) => "expand",
            Command::Parseval(_) => "parseval",
            Command::Operator(_) => "operator",
            Command::Regression(_) => "regression",
            Command::Moments(_) => "moments",
            Command::Atom(_) => "atom",
            Command::Ergodic(_) => "ergodic",
            Command::Sample(_) => "sample",
            Command::Char(_) => "char",
            Command::Pushforward(_) => "pushforward",
            Command::Figure1(_) => "figure1",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Regression(_) | Command::Pushforward(_) => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    /// Comma-separated frequencies.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub lambda: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SetArgs {
    #[arg(long, default_value_t = 9)]
    pub m: u32,
    #[arg(long, default_value_t = 1)]
    pub scale: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpandArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = 9)]
    pub m: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    U5,
    U5Adjoint,
    S0,
    S1,
    S0Adjoint,
    S1Adjoint,
}

#[derive(Debug, Args, Serialize)]
pub struct OperatorArgs {
    #[arg(long, default_value_t = 9)]
    pub m: u32,
    #[arg(long, value_enum, default_value_t = KindArg::U5)]
    pub kind: KindArg,
}

#[derive(Debug, Args, Serialize)]
pub struct RegressionArgs {
    /// Digit count; 9 gives the 512-term truncation.
    #[arg(long, default_value_t = operator::REFERENCE_DIGITS)]
    pub m: u32,
}

/// Leakage limit: a number, or `none` to report without refusing.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaxLeakage(pub Option<f64>);

impl FromStr for MaxLeakage {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(MaxLeakage(None));
        }
        let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
        if x.is_finite() && x >= 0.0 {
            Ok(MaxLeakage(Some(x)))
        } else {
            Err(format!("leakage limit must be finite and nonnegative, got {s}"))
        }
    }
}

impl std::fmt::Display for MaxLeakage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(x) => write!(f, "{x}"),
            None => write!(f, "none"),
        }
    }
}

impl MaxLeakage {
    fn policy(self) -> LeakagePolicy {
        LeakagePolicy { max_leakage: self.0 }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct MomentArgs {
    /// e<γ> (e.g. e0, e21), mix = (e0+e1)/√2, or random (seeded).
    #[arg(long, default_value = "e0")]
    pub v: String,
    #[arg(long, default_value_t = 9)]
    pub m: u32,
    #[arg(long = "K", default_value_t = 8)]
    pub order: usize,
    #[arg(long, default_value_t = MaxLeakage(Some(LeakagePolicy::DEFAULT_LIMIT)))]
    pub max_leakage: MaxLeakage,
}

#[derive(Debug, Args, Serialize)]
pub struct ErgodicArgs {
    #[arg(long, default_value = "e1")]
    pub v: String,
    #[arg(long, default_value_t = 9)]
    pub m: u32,
    #[arg(long = "N", default_value_t = 64)]
    pub steps: usize,
    #[arg(long, default_value_t = MaxLeakage(Some(LeakagePolicy::DEFAULT_LIMIT)))]
    pub max_leakage: MaxLeakage,
}

#[derive(Debug, Args, Serialize)]
pub struct BatchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = sim::DEFAULT_DEPTH)]
    pub depth: u32,
    #[arg(long, default_value_t = 0.25)]
    pub lambda: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub batch: BatchArgs,
    /// Grid size for the self-similarity residual.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CharArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub batch: BatchArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20", allow_hyphen_values = true)]
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReprArg {
    Unit,
    Symmetric,
}

#[derive(Debug, Args, Serialize)]
pub struct PushforwardArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub batch: BatchArgs,
    #[arg(long = "n-scale", default_value_t = 5)]
    pub n_scale: u64,
    /// Interval (a, b] as two rationals, e.g. "2/3,1".
    #[arg(long, default_value = "2/3,1", allow_hyphen_values = true)]
    pub interval: String,
    #[arg(long, value_enum, default_value_t = ReprArg::Unit)]
    pub representation: ReprArg,
}

#[derive(Debug, Args, Serialize)]
pub struct FigureArgs {
    #[arg(long, default_value_t = 2)]
    pub levels: u32,
    #[arg(long, default_value_t = 501)]
    pub grid: usize,
}

pub fn run(cli: &Cli) -> Result<()> {
    let cmd = &cli.command;
    let format = cli.global.format.unwrap_or_else(|| cmd.default_format());
    let g = &cli.global;
    let (csv, summary) = match cmd {
        Command::Transform(a) => transform(a, g)?,
        Command::Gamma(a) => gamma(a)?,
        Command::Gram(a) => gram(a, g)?,
        Command::Expand(a) => expand(a, g)?,
        Command::Parseval(a) => parseval(a, g)?,
        Command::Operator(a) => operator_cmd(a, g)?,
        Command::Regression(a) => regression(a, g)?,
        Command::Moments(a) => moments(a, g)?,
        Command::Atom(a) => atom(a, g)?,
        Command::Ergodic(a) => ergodic(a, g)?,
        Command::Sample(a) => sample(a, g)?,
        Command::Char(a) => char_cmd(a, g)?,
        Command::Pushforward(a) => pushforward(a, g)?,
        Command::Figure1(a) => figure1(a)?,
    };
    let artifact = match format {
        Format::Csv => csv,
        Format::Json => {
            let config = json!({
                "subcommand": cmd.name(),
                "params": cmd,
                "format": format,
                "tol": g.tol,
                "seed": g.seed,
            });
            Artifact::Json(envelope(cmd.name(), &config, g.seed, summary))
        }
    };
    let bytes = artifact.render()?;
    let dest = output::destination(g.out.as_deref(), cmd.name(), format);
    output::emit(&bytes, dest.as_deref())
}

type Outputs = (Artifact, Value);

fn unit_set(m: u32) -> Result<GammaSet> {
    Ok(gamma_set(m, 1)?)
}

fn parse_vector(spec: &str, set: &GammaSet, seed: u64) -> Result<CoeffVector> {
    let one = Complex64::new(1.0, 0.0);
    match spec {
        "mix" => {
            let v = CoeffVector::from_terms(set.clone(), &[(0, one), (1, one)])?;
            Ok(v.normalized()?)
        }
        "random" => Ok(spectrum::random_unit_vector(set, seed)),
        s => match s.strip_prefix('e').map(str::parse::<u64>) {
            Some(Ok(g)) => Ok(CoeffVector::basis(set.clone(), g)?),
            _ => usage(format!("unknown vector '{s}': use e<γ>, mix, or random")),
        },
    }
}

fn transform(a: &TransformArgs, g: &GlobalOpts) -> Result<Outputs> {
    let tr = Transform::new(ScaleRatio::new(a.lambda)?, g.tol)?;
    let mut table = Artifact::csv(&["t", "value", "depth", "tail_bound"]);
    let mut values = Vec::new();
    for &t in &a.t {
        let v = tr.evaluate(t)?;
        table.push_row(vec![num(t), num(v.value), v.depth.to_string(), num(v.tail_bound)]);
        values.push(json!({"t": t, "value": v.value, "depth": v.depth, "tail_bound": v.tail_bound}));
    }
    Ok((table, json!({ "values": values })))
}

fn gamma(a: &SetArgs) -> Result<Outputs> {
    let set = gamma_set(a.m, a.scale)?;
    let mut table = Artifact::csv(&["index", "gamma", "digits"]);
    for (i, &g) in set.elements().iter().enumerate() {
        let digits: String = set
            .digit_representation(i)
            .iter()
            .rev()
            .map(|d| char::from(b'0' + d))
            .collect();
        table.push_row(vec![i.to_string(), g.to_string(), digits]);
    }
    let summary = json!({
        "m": a.m,
        "scale": a.scale,
        "count": set.len(),
        "max": set.max(),
        "elements": set.elements(),
    });
    Ok((table, summary))
}

fn gram(a: &SetArgs, g: &GlobalOpts) -> Result<Outputs> {
    let set = gamma_set(a.m, a.scale)?;
    let gram = spectrum::gram_matrix(&set.frequencies(), g.tol)?;
    let report = spectrum::gram_report(&gram);
    let mut table = Artifact::csv(&["i", "j", "gamma_i", "gamma_j", "value"]);
    let el = set.elements();
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            table.push_row(vec![
                i.to_string(),
                j.to_string(),
                el[i].to_string(),
                el[j].to_string(),
                num(gram[(i, j)]),
            ]);
        }
    }
    let summary = json!({
        "m": a.m,
        "scale": a.scale,
        "size": report.size,
        "max_off_diagonal": report.max_off_diagonal,
        "max_diagonal_deviation": report.max_diagonal_deviation,
    });
    Ok((table, summary))
}

fn coeff_table(v: &CoeffVector) -> Artifact {
    let mut table = Artifact::csv(&["index", "gamma", "coefficient_real", "coefficient_imag"]);
    for (i, (g, c)) in v.index_set().elements().iter().zip(v.coeffs()).enumerate() {
        table.push_row(vec![i.to_string(), g.to_string(), num(c.re), num(c.im)]);
    }
    table
}

fn expand(a: &ExpandArgs, g: &GlobalOpts) -> Result<Outputs> {
    let set = unit_set(a.m)?;
    let v = spectrum::expand(a.t, &set, g.tol)?;
    let summary = json!({
        "t": a.t,
        "m": a.m,
        "terms": set.len(),
        "norm2": v.norm2(),
        "parseval_defect": 1.0 - v.norm2(),
    });
    Ok((coeff_table(&v), summary))
}

fn parseval(a: &ExpandArgs, g: &GlobalOpts) -> Result<Outputs> {
    let mut table = Artifact::csv(&["m", "terms", "defect"]);
    let mut rows = Vec::new();
    for m in 0..=a.m {
        let set = unit_set(m)?;
        let d = spectrum::parseval_defect(a.t, &set, g.tol)?;
        table.push_row(vec![m.to_string(), set.len().to_string(), num(d)]);
        rows.push(json!({"m": m, "terms": set.len(), "defect": d}));
    }
    let last = rows.last().cloned().unwrap_or(Value::Null);
    Ok((table, json!({ "t": a.t, "defect": last["defect"], "profile": rows })))
}

fn operator_cmd(a: &OperatorArgs, g: &GlobalOpts) -> Result<Outputs> {
    let set = unit_set(a.m)?;
    let op = match a.kind {
        KindArg::U5 => operator::build_u(&set, g.tol)?,
        KindArg::U5Adjoint => operator::build_u(&set, g.tol)?.adjoint(),
        KindArg::S0 => operator::build_s(&set, 0)?,
        KindArg::S1 => operator::build_s(&set, 1)?,
        KindArg::S0Adjoint => operator::build_s(&set, 0)?.adjoint(),
        KindArg::S1Adjoint => operator::build_s(&set, 1)?.adjoint(),
    };
    let mut table = Artifact::csv(&["row", "col", "xi", "gamma", "value"]);
    let el = set.elements();
    let m = op.entries();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            table.push_row(vec![
                i.to_string(),
                j.to_string(),
                el[i].to_string(),
                el[j].to_string(),
                num(m[(i, j)]),
            ]);
        }
    }
    let norms = op.column_norms2();
    let (min_norm, max_norm) = norms
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let comm = operator::commutator_norms(&set, g.tol)?;
    let cuntz = operator::cuntz_relations(&set)?;
    let eigen: Vec<Value> = [1u64, 4, 5, 16, 21]
        .iter()
        .filter(|&&gm| set.contains(gm))
        .map(|&gm| {
            match operator::eigen_residual_on(&set, gm, Complex64::new(1.0, 0.0), g.tol) {
                Ok(r) => json!({"gamma": gm, "phase": 1.0, "residual": finite(r)}),
                Err(e) => json!({"gamma": gm, "phase": 1.0, "residual": null, "reason": e.to_string()}),
            }
        })
        .collect();
    let kind = match op.kind() {
        OperatorKind::U5 => "u5",
        OperatorKind::U5Adjoint => "u5-adjoint",
        OperatorKind::S0 => "s0",
        OperatorKind::S1 => "s1",
        OperatorKind::S0Adjoint => "s0-adjoint",
        OperatorKind::S1Adjoint => "s1-adjoint",
        OperatorKind::Product => "product",
    };
    let summary = json!({
        "kind": kind,
        "m": a.m,
        "dim": op.dim(),
        "column_norm2_min": finite(min_norm),
        "column_norm2_max": finite(max_norm),
        "commutators": comm,
        "cuntz": cuntz,
        "eigen_residuals": eigen,
    });
    Ok((table, summary))
}

fn regression(a: &RegressionArgs, g: &GlobalOpts) -> Result<Outputs> {
    let r = operator::iterate_regression_with(a.m, g.tol)?;
    let mut table = Artifact::csv(&["terms", "coeff_e5_of_U3e1", "coeff_e5_of_e125"]);
    table.push_row(vec![r.terms.to_string(), num(r.coeff_e5_of_u3e1), num(r.coeff_e5_of_e125)]);
    let summary = json!({
        "coeff_e5_of_U3e1": r.coeff_e5_of_u3e1,
        "coeff_e5_of_e125": r.coeff_e5_of_e125,
        "terms": r.terms,
    });
    Ok((table, summary))
}

fn moments(a: &MomentArgs, g: &GlobalOpts) -> Result<Outputs> {
    let set = unit_set(a.m)?;
    let trunc = UnitaryTruncation::new(&set, g.tol)?;
    let v = parse_vector(&a.v, &set, g.seed)?;
    let ms = measure::moments(&v, a.order, &trunc, &a.max_leakage.policy())?;
    let mut table = Artifact::csv(&["k", "re", "im", "cumulative_leakage"]);
    let mut list = Vec::new();
    for k in 0..=a.order as i64 {
        let c = ms.moment(k);
        table.push_row(vec![k.to_string(), num(c.re), num(c.im), num(ms.cumulative_leakage(k))]);
        list.push(json!({"k": k, "re": c.re, "im": c.im, "cumulative_leakage": ms.cumulative_leakage(k)}));
    }
    let summary = json!({
        "v": a.v,
        "m": a.m,
        "terms": set.len(),
        "K": a.order,
        "atom_at_1": measure::atom_at_one(&ms),
        "herglotz_defect": measure::herglotz_defect(&ms)?,
        "hermitian_defect": ms.hermitian_defect(),
        "leakage_budget": ms.leakage_budget(),
        "moments": list,
    });
    Ok((table, summary))
}

fn atom(a: &MomentArgs, g: &GlobalOpts) -> Result<Outputs> {
    let set = unit_set(a.m)?;
    let trunc = UnitaryTruncation::new(&set, g.tol)?;
    let v = parse_vector(&a.v, &set, g.seed)?;
    let ms = measure::moments(&v, a.order, &trunc, &a.max_leakage.policy())?;
    let est = measure::estimate_measure(&ms)?;
    let mut table = Artifact::csv(&["theta", "density"]);
    for (t, d) in est.grid.iter().zip(&est.density) {
        table.push_row(vec![num(*t), num(*d)]);
    }
    let min_density = est.density.iter().copied().fold(f64::INFINITY, f64::min);
    let summary = json!({
        "v": a.v,
        "m": a.m,
        "terms": set.len(),
        "K": a.order,
        "grid_points": est.grid.len(),
        "atom_at_1": est.atom_at_1,
        "total_mass": est.total_mass(),
        "min_density": finite(min_density),
        "herglotz_defect": measure::herglotz_defect(&ms)?,
        "leakage_budget": ms.leakage_budget(),
    });
    Ok((table, summary))
}

fn ergodic(a: &ErgodicArgs, g: &GlobalOpts) -> Result<Outputs> {
    let set = unit_set(a.m)?;
    let trunc = UnitaryTruncation::new(&set, g.tol)?;
    let f = parse_vector(&a.v, &set, g.seed)?;
    let traj = measure::cesaro_trajectory(&f, a.steps, &trunc, &a.max_leakage.policy())?;
    let mut table = Artifact::csv(&["n", "residual_norm", "cumulative_leakage"]);
    for r in &traj {
        table.push_row(vec![r.steps.to_string(), num(r.residual_norm), num(r.leakage_budget)]);
    }
    let last = traj.last().expect("trajectory is never empty");
    let summary = json!({
        "v": a.v,
        "m": a.m,
        "terms": set.len(),
        "N": a.steps,
        "projection_coeff": {"re": last.projection_coeff.re, "im": last.projection_coeff.im},
        "residual_norm": last.residual_norm,
        "leakage_budget": last.leakage_budget,
    });
    Ok((table, summary))
}

fn batch(a: &BatchArgs, g: &GlobalOpts) -> Result<sim::SampleBatch> {
    Ok(sim::sample_batch(ScaleRatio::new(a.lambda)?, a.depth, a.samples, g.seed)?)
}

fn sample(a: &SampleArgs, g: &GlobalOpts) -> Result<Outputs> {
    let b = batch(&a.batch, g)?;
    let unit = b.pushforward_points(1).ok();
    let mut table = Artifact::csv(&["index", "x", "unit"]);
    for (i, x) in b.points().iter().enumerate() {
        let u = unit.as_ref().map_or(String::new(), |u| num(u[i]));
        table.push_row(vec![i.to_string(), num(*x), u]);
    }
    let (mean, stderr) = sim::mean_and_stderr(&b);
    let hutch = sim::hutchinson_residual(&b, a.grid)?;
    let summary = json!({
        "samples": b.len(),
        "depth": b.depth(),
        "lambda": b.lambda().get(),
        "truncation_error": b.truncation_error(),
        "mean": mean,
        "stderr": stderr,
        "hutchinson_residual": hutch.residual,
        "hutchinson_scaled": hutch.scaled,
        "grid": hutch.grid_points,
    });
    Ok((table, summary))
}

fn char_cmd(a: &CharArgs, g: &GlobalOpts) -> Result<Outputs> {
    let b = batch(&a.batch, g)?;
    let tr = Transform::new(b.lambda(), g.tol)?;
    let bound = 4.0 / (b.len() as f64).sqrt();
    let mut table = Artifact::csv(&["t", "re", "im", "mu_hat", "abs_error", "bound"]);
    let mut rows = Vec::new();
    for &t in &a.t {
        let e = sim::empirical_char(t, &b);
        let exact = tr.evaluate(t)?.value;
        let err = (e - Complex64::new(exact, 0.0)).norm();
        table.push_row(vec![num(t), num(e.re), num(e.im), num(exact), num(err), num(bound)]);
        rows.push(json!({"t": t, "re": e.re, "im": e.im, "mu_hat": exact, "abs_error": err}));
    }
    let summary = json!({
        "samples": b.len(),
        "depth": b.depth(),
        "bound": bound,
        "values": rows,
    });
    Ok((table, summary))
}

fn parse_interval(s: &str) -> Result<(Ratio<i64>, Ratio<i64>)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return usage(format!("interval must be 'a,b', got '{s}'"));
    }
    let parse = |p: &str| {
        Ratio::<i64>::from_str(p).map_err(|e| UsageError(format!("bad rational '{p}': {e}")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}

fn pushforward(a: &PushforwardArgs, g: &GlobalOpts) -> Result<Outputs> {
    let b = batch(&a.batch, g)?;
    let (lo, hi) = parse_interval(&a.interval)?;
    let repr = match a.representation {
        ReprArg::Unit => Representation::UnitEmbedded,
        ReprArg::Symmetric => Representation::Symmetric,
    };
    let q = IntervalQuery::new(lo, hi, repr)?;
    let r = sim::pushforward_mass(&b, a.n_scale, &q)?;
    let mut table = Artifact::csv(&["n_scale", "a", "b", "count", "n", "estimate", "ci_low", "ci_high"]);
    table.push_row(vec![
        a.n_scale.to_string(),
        lo.to_string(),
        hi.to_string(),
        r.count.to_string(),
        r.n.to_string(),
        num(r.estimate),
        num(r.wilson_ci_95.0),
        num(r.wilson_ci_95.1),
    ]);
    let summary = json!({
        "n_scale": a.n_scale,
        "interval": [lo.to_string(), hi.to_string()],
        "representation": a.representation,
        "samples": r.n,
        "depth": b.depth(),
        "count": r.count,
        "estimate": r.estimate,
        "wilson_ci_95": [r.wilson_ci_95.0, r.wilson_ci_95.1],
    });
    Ok((table, summary))
}

fn figure1(a: &FigureArgs) -> Result<Outputs> {
    let rows = sim::figure1_data(a.levels, a.grid)?;
    let mut table = Artifact::csv(&["series", "level", "index", "a", "b"]);
    for r in &rows {
        table.push_row(vec![
            r.series.to_string(),
            r.level.to_string(),
            r.index.to_string(),
            num(r.a),
            num(r.b),
        ]);
    }
    Ok((table, json!({ "levels": a.levels, "grid": a.grid, "rows": rows })))
}
