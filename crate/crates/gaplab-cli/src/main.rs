//! Command-line reports over the gaplab library.
//!
//! Verbs: `geom` (curvature-diameter bounds table and test-function
//! search), `chain` (spectral gap, log-Sobolev constant, Dirichlet
//! functionals), `cheeger` (isoperimetric constants and the classical
//! spectral/log-Sobolev estimates), `ergodic` (decay curves, rates, and
//! the algebraic-decay constant), `probe` (truncation-family trends).
//!
//! Exit codes: 0 success, 2 precondition or input errors, 3 numerical
//! non-convergence, 64 usage errors. Identical inputs and --seed produce
//! byte-identical output.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaplab::cheeger::{
    self, cheeger_constant, cheeger_constant_intervals, CheegerError, CheegerReport,
    CheegerVariant, RateWeight,
};
use gaplab::ergodicity::{
    self, algebraic_decay_check, diagram_probe, tv_decay, variance_decay_check, ErgodicityError,
    TruncationFamily, VFunctional,
};
use gaplab::forms::{
    self, dirichlet_form, gap_eigenpair, spectral_gap_exact, variance_and_entropy, FormsError,
    LogSobolevOptions, ReversibleChain, SymmetricForm,
};
use gaplab::geometry::{
    bounds_table, optimize_over_family, GeometryError, GeometryParams, QuadratureSpec,
    TestFunctionFamily,
};
use gaplab::report::{emit, format_sig12, sort_rows, ReportFormat, ReportRow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "gaplab",
    version,
    about = "Spectral-gap bounds, Cheeger constants, and ergodicity diagnostics",
    after_help = "Exit codes: 0 ok, 2 precondition error, 3 non-convergence, 64 usage.\n\
                  Module tolerance defaults: quadrature 1e-9 (relative), optimizer\n\
                  gradient 1e-9; override with --tol where it applies."
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct OutputOpts {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Write the report to this path instead of standard output.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Seed for every randomized search in the run.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Tolerance override: quadrature relative tolerance for geom,
    /// optimizer gradient tolerance for log-Sobolev computations.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Subcommand)]
enum Verb {
    /// Eigenvalue lower bounds from dimension, diameter, and a Ricci
    /// curvature floor.
    Geom(GeomArgs),
    /// Spectral gap, log-Sobolev constant, and Dirichlet functionals of a
    /// reversible chain.
    Chain(ChainArgs),
    /// Cheeger-type constants and the classical spectral estimates built
    /// from them.
    Cheeger(CheegerArgs),
    /// Semigroup decay curves, fitted rates, and the algebraic-decay
    /// constant.
    Ergodic(ErgodicArgs),
    /// Truncation-family trends across section sizes.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct GeomArgs {
    /// Dimension d >= 1.
    #[arg(long)]
    d: u32,
    /// Diameter upper bound D > 0.
    #[arg(long = "D")]
    diameter: f64,
    /// Ricci curvature floor K (any sign).
    #[arg(long = "K", allow_hyphen_values = true)]
    ricci: f64,
    /// Extra test-function family search to report alongside the table.
    #[arg(long = "f-family", value_enum)]
    f_family: Option<FamilyKind>,
    /// Lower sin rate for --f-family sin-box.
    #[arg(long, default_value_t = 0.1)]
    sin_lo: f64,
    /// Upper sin rate for --f-family sin-box.
    #[arg(long, default_value_t = 2.0)]
    sin_hi: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    /// Built-in candidates for the given curvature sign.
    BuiltIn,
    /// The constant function 1.
    Const,
    /// sin(rate r) over a rate interval with refinement.
    SinBox,
}

#[derive(Args)]
struct ChainInput {
    /// Inline chain JSON: {"Q": [[...]]} or {"birth": [...], "death": [...]}.
    #[arg(long, conflicts_with = "input")]
    inline: Option<String>,
    /// Path to a chain JSON file with the same schema as --inline.
    #[arg(long)]
    input: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    #[command(flatten)]
    chain: ChainInput,
    /// Which quantities to report.
    #[arg(long, value_enum, default_value_t = ChainOp::All)]
    op: ChainOp,
    /// Function values (comma-separated), required for --op dirichlet.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChainOp {
    Gap,
    Sigma,
    Dirichlet,
    All,
}

#[derive(Args)]
struct CheegerArgs {
    #[command(flatten)]
    chain: ChainInput,
    /// Exponent alpha of the reweighted form J^(alpha).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Which isoperimetric constant to compute.
    #[arg(long, value_enum, default_value_t = VariantKind::All)]
    variant: VariantKind,
    /// Nash exponent nu > 1.
    #[arg(long, default_value_t = 2.0)]
    nu: f64,
    /// Delta grid for the Chen log-Sobolev variant (comma-separated).
    #[arg(long = "delta-grid")]
    delta_grid: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantKind {
    Poincare,
    Nash,
    Wang,
    Chen,
    All,
}

#[derive(Args)]
struct ErgodicArgs {
    #[command(flatten)]
    chain: ChainInput,
    /// Time grid (comma-separated, strictly increasing, positive);
    /// defaults to 16 points spanning four e-foldings of the gap.
    #[arg(long)]
    times: Option<String>,
    /// Function for the variance-decay check (comma-separated); defaults
    /// to the gap eigenfunction.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// Contraction functional for the algebraic-decay scan.
    #[arg(long = "v-functional", value_enum, default_value_t = VKind::Var)]
    v_functional: VKind,
    /// Norm exponent r in [1, 2] for --v-functional norm.
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    /// Algebraic decay exponent q > 1.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Number of random functions in the algebraic-decay scan.
    #[arg(long = "f-count", default_value_t = 20)]
    f_count: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum VKind {
    Var,
    Norm,
    Lip,
}

#[derive(Args)]
struct ProbeArgs {
    /// Family JSON {"b": "expr", "a": "expr", "sizes": [...]}.
    #[arg(long, conflicts_with_all = ["b", "a", "sizes"])]
    family: Option<String>,
    /// Birth-rate expression in i (e.g. "(i+1)^2").
    #[arg(long, requires = "a", requires = "sizes")]
    b: Option<String>,
    /// Death-rate expression in i.
    #[arg(long, requires = "b", requires = "sizes")]
    a: Option<String>,
    /// Section sizes (comma-separated, strictly increasing).
    #[arg(long)]
    sizes: Option<String>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn precondition(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn forms_failure(e: FormsError) -> Failure {
    let code = match &e {
        FormsError::NonConvergence { .. } => 3,
        _ => 2,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn geometry_failure(e: GeometryError) -> Failure {
    let code = match &e {
        GeometryError::QuadratureNoConvergence { .. } => 3,
        _ => 2,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn cheeger_failure(e: CheegerError) -> Failure {
    match e {
        CheegerError::Forms(f) => forms_failure(f),
        other => Failure::precondition(other.to_string()),
    }
}

fn ergodicity_failure(e: ErgodicityError) -> Failure {
    match e {
        ErgodicityError::Forms(f) => forms_failure(f),
        ErgodicityError::Cheeger(c) => cheeger_failure(c),
        other => Failure::precondition(other.to_string()),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(64);
                }
            }
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(f) => {
            eprintln!("{}", f.message);
            std::process::exit(f.code);
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut rows = match &cli.verb {
        Verb::Geom(args) => run_geom(args, &cli.output)?,
        Verb::Chain(args) => run_chain(args, &cli.output)?,
        Verb::Cheeger(args) => run_cheeger(args, &cli.output)?,
        Verb::Ergodic(args) => run_ergodic(args, &cli.output)?,
        Verb::Probe(args) => run_probe(args, &cli.output)?,
    };
    sort_rows(&mut rows);
    let format = match cli.output.format {
        Format::Tsv => ReportFormat::Tsv,
        Format::Json => ReportFormat::Json,
    };
    let text = emit(&rows, format).map_err(|e| Failure::precondition(e.to_string()))?;
    match &cli.output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::precondition(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Failure::precondition(format!("bad {what} entry '{s}': {e}")))
        })
        .collect()
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|e| Failure::precondition(format!("bad size entry '{s}': {e}")))
        })
        .collect()
}

fn load_chain(input: &ChainInput) -> Result<ReversibleChain, Failure> {
    let text = match (&input.inline, &input.input) {
        (Some(inline), None) => inline.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| Failure::precondition(format!("cannot read {}: {e}", path.display())))?,
        _ => {
            return Err(Failure::precondition(
                "provide exactly one of --inline or --input",
            ))
        }
    };
    ReversibleChain::from_json(&text).map_err(forms_failure)
}

fn run_geom(args: &GeomArgs, out: &OutputOpts) -> Result<Vec<ReportRow>, Failure> {
    let params =
        GeometryParams::new(args.d, args.diameter, args.ricci).map_err(geometry_failure)?;
    let mut quadrature = QuadratureSpec::default();
    if let Some(tol) = out.tol {
        quadrature.rel_tol = tol;
    }
    let table = bounds_table(&params, &quadrature).map_err(geometry_failure)?;
    let mut rows = Vec::new();
    for row in &table.rows {
        let name = row.id.to_string();
        let detail = format!("{}; {}", row.id.label(), row.condition);
        let mut report = match row.value {
            Some(v) => ReportRow::value("geom.bounds", &name, v),
            None => ReportRow::text("geom.bounds", &name, "not applicable"),
        };
        report = report.with_detail(&detail);
        if row.applicable {
            report = report.with_flag("applicable");
        }
        if table.is_sharp(row.id) {
            report = report.with_flag("sharp");
        }
        rows.push(report);
    }
    for check in &table.dominance {
        let name = format!("{}>={}", check.improved, check.baseline);
        let mut report = match (check.lhs, check.rhs) {
            (Some(lhs), Some(rhs)) => ReportRow::value("geom.dominance", &name, lhs - rhs)
                .with_detail(&format!(
                    "lhs={} rhs={} tol={:e}",
                    format_sig12(lhs),
                    format_sig12(rhs),
                    check.tolerance
                )),
            _ => ReportRow::text("geom.dominance", &name, "one side not applicable"),
        };
        match check.ok {
            Some(true) => report = report.with_flag("dominance_ok"),
            Some(false) => report = report.with_flag("dominance_violated"),
            None => {}
        }
        rows.push(report);
    }
    rows.push(ReportRow::value("geom.meta", "d", f64::from(args.d)));
    rows.push(ReportRow::value("geom.meta", "diameter", args.diameter));
    rows.push(ReportRow::value("geom.meta", "ricci_floor", args.ricci));
    if let Some(gap) = table.reference_gap {
        rows.push(
            ReportRow::value("geom.meta", "reference_gap", gap)
                .with_detail("model-space eigenvalue for these parameters"),
        );
    }
    if let Some(kind) = args.f_family {
        let family = match kind {
            FamilyKind::BuiltIn => TestFunctionFamily::BuiltIn,
            FamilyKind::Const => TestFunctionFamily::ConstantOne,
            FamilyKind::SinBox => TestFunctionFamily::SinRateBox {
                lo: args.sin_lo,
                hi: args.sin_hi,
            },
        };
        let search = optimize_over_family(&params, &family, &quadrature).map_err(geometry_failure)?;
        rows.push(
            ReportRow::value("geom.family", "best", search.value)
                .with_detail(&member_detail(&search.best)),
        );
        for (idx, (label, value)) in search.evaluated.iter().enumerate() {
            rows.push(
                ReportRow::value("geom.family", &format!("member{idx:03}"), *value)
                    .with_detail(label),
            );
        }
        for (idx, label) in search.skipped.iter().enumerate() {
            rows.push(
                ReportRow::text("geom.family", &format!("skipped{idx:03}"), label)
                    .with_flag("inadmissible"),
            );
        }
    }
    Ok(rows)
}

fn member_detail(f: &gaplab::geometry::TestFunction) -> String {
    if f.parameters.is_empty() {
        f.family_id.clone()
    } else {
        let ps: Vec<String> = f.parameters.iter().map(|p| format_sig12(*p)).collect();
        format!("{}({})", f.family_id, ps.join(","))
    }
}

fn sigma_options(out: &OutputOpts) -> LogSobolevOptions {
    let mut opts = LogSobolevOptions {
        seed: out.seed,
        ..LogSobolevOptions::default()
    };
    if let Some(tol) = out.tol {
        opts.gradient_tolerance = tol;
    }
    opts
}

fn run_chain(args: &ChainArgs, out: &OutputOpts) -> Result<Vec<ReportRow>, Failure> {
    let chain = load_chain(&args.chain)?;
    let mut rows = vec![ReportRow::value(
        "chain.meta",
        "states",
        chain.n() as f64,
    )];
    if matches!(args.op, ChainOp::Gap | ChainOp::All) {
        let gap = spectral_gap_exact(&chain).map_err(forms_failure)?;
        rows.push(ReportRow::value("chain", "gap", gap));
    }
    if matches!(args.op, ChainOp::Sigma | ChainOp::All) {
        let est =
            forms::log_sobolev_constant_with(&chain, &sigma_options(out)).map_err(forms_failure)?;
        let mut row = ReportRow::value("chain", "sigma", est.value).with_detail(&format!(
            "{} of {} starts converged",
            est.converged_starts, est.total_starts
        ));
        if est.converged {
            row = row.with_flag("converged");
        }
        rows.push(row);
    }
    if matches!(args.op, ChainOp::Dirichlet | ChainOp::All) {
        if let Some(ftext) = &args.f {
            let f = parse_floats(ftext, "--f")?;
            let d = dirichlet_form(&chain, &f).map_err(forms_failure)?;
            let stats = variance_and_entropy(&chain, &f).map_err(forms_failure)?;
            rows.push(ReportRow::value("chain", "dirichlet", d));
            rows.push(ReportRow::value("chain", "variance", stats.variance));
            rows.push(ReportRow::value("chain", "entropy", stats.entropy));
            rows.push(ReportRow::value("chain", "mean", stats.mean));
            rows.push(ReportRow::value("chain", "l1_norm", stats.l1_norm));
            rows.push(ReportRow::value("chain", "l2_norm", stats.l2_norm));
        } else if args.op == ChainOp::Dirichlet {
            return Err(Failure::precondition(
                "--op dirichlet requires --f with comma-separated values",
            ));
        }
    }
    Ok(rows)
}

fn variant_rows(rows: &mut Vec<ReportRow>, rep: &CheegerReport) {
    let name = rep.variant.clone();
    let mut row = ReportRow::value("cheeger.k", &name, rep.value)
        .with_detail(&format!("argmin states {:?}", rep.argmin));
    if rep.converged {
        row = row.with_flag("converged");
    }
    if rep.restricted_to_intervals {
        row = row.with_flag("restricted_to_intervals");
    }
    rows.push(row);
    for (key, value) in &rep.extras {
        rows.push(ReportRow::value(
            "cheeger.k",
            &format!("{name}.{key}"),
            *value,
        ));
    }
}

fn run_cheeger(args: &CheegerArgs, _out: &OutputOpts) -> Result<Vec<ReportRow>, Failure> {
    let chain = load_chain(&args.chain)?;
    let form = SymmetricForm::from_chain(&chain);
    let w = RateWeight::default_for(&form, args.alpha).map_err(cheeger_failure)?;
    let exhaustive = chain.n() <= 24;
    let constant = |variant: &CheegerVariant| -> Result<CheegerReport, Failure> {
        let rep = if exhaustive {
            cheeger_constant(&form, variant, &w)
        } else {
            cheeger_constant_intervals(&form, variant, &w)
        };
        rep.map_err(cheeger_failure)
    };
    let mut rows = vec![
        ReportRow::value("cheeger.meta", "alpha", args.alpha)
            .with_detail(&format!("rate weight {}", w.label())),
        ReportRow::value("cheeger.meta", "states", chain.n() as f64),
    ];

    let mut variants = Vec::new();
    if matches!(args.variant, VariantKind::Poincare | VariantKind::All) {
        variants.push(CheegerVariant::Poincare);
    }
    if matches!(args.variant, VariantKind::Nash | VariantKind::All) {
        variants.push(CheegerVariant::Nash { nu: args.nu });
    }
    if matches!(args.variant, VariantKind::Wang | VariantKind::All) {
        variants.push(CheegerVariant::LogSobWang);
    }
    if matches!(args.variant, VariantKind::Chen | VariantKind::All) {
        let variant = match &args.delta_grid {
            Some(text) => CheegerVariant::LogSobChen {
                deltas: parse_floats(text, "--delta-grid")?,
            },
            None => CheegerVariant::default_chen(),
        };
        variants.push(variant);
    }
    for variant in &variants {
        variant_rows(&mut rows, &constant(variant)?);
    }

    if exhaustive {
        let ls = cheeger::lawler_sokal_bound(&chain).map_err(cheeger_failure)?;
        rows.push(ReportRow::value("cheeger.lawler_sokal", "k", ls.k));
        rows.push(ReportRow::value("cheeger.lawler_sokal", "m", ls.m));
        rows.push(ReportRow::value("cheeger.lawler_sokal", "bound", ls.bound));
    } else {
        rows.push(ReportRow::text(
            "cheeger.lawler_sokal",
            "bound",
            "skipped: state space exceeds the exhaustive enumeration cap",
        ));
    }

    match cheeger::dsc_log_sobolev_bound(&chain) {
        Ok(bound) => rows.push(ReportRow::value("cheeger.dsc", "bound", bound)),
        Err(CheegerError::NotUnitActivity(bad)) => rows.push(
            ReportRow::text(
                "cheeger.dsc",
                "bound",
                &format!("not applicable: rows {bad:?} are not unit-activity"),
            )
            .with_flag("not_applicable"),
        ),
        Err(e) => return Err(cheeger_failure(e)),
    }

    if exhaustive {
        let rep = cheeger::main_theorem_check(&form, &w).map_err(cheeger_failure)?;
        let section = "cheeger.main_theorem";
        rows.push(ReportRow::value(section, "k_poincare", rep.k_poincare));
        rows.push(ReportRow::value(section, "k_nash", rep.k_nash));
        rows.push(ReportRow::value(section, "k_wang", rep.k_wang));
        let mut chen = ReportRow::value(section, "k_chen", rep.k_chen);
        if rep.chen_converged {
            chen = chen.with_flag("converged");
        }
        rows.push(chen);
        rows.push(ReportRow::value(section, "lambda1", rep.lambda1));
        let mut sigma = ReportRow::value(section, "sigma", rep.sigma);
        if rep.sigma_converged {
            sigma = sigma.with_flag("converged");
        }
        rows.push(sigma);
        rows.push(ReportRow::value(
            section,
            "nash_constant",
            rep.nash_constant,
        ));
        let mut verdict = ReportRow::text(
            section,
            "verdict",
            if rep.all_positive && rep.inequalities_hold {
                "all four constants positive; finite-space inequalities hold"
            } else {
                "degenerate: see the constants"
            },
        );
        if rep.all_positive {
            verdict = verdict.with_flag("all_positive");
        }
        if rep.inequalities_hold {
            verdict = verdict.with_flag("inequalities_hold");
        }
        rows.push(verdict);
    }
    Ok(rows)
}

fn default_times(lambda1: f64) -> Vec<f64> {
    (1..=16).map(|k| k as f64 * 0.25 / lambda1).collect()
}

fn run_ergodic(args: &ErgodicArgs, out: &OutputOpts) -> Result<Vec<ReportRow>, Failure> {
    let chain = load_chain(&args.chain)?;
    let (lambda1, eigenfunction) = gap_eigenpair(&chain).map_err(forms_failure)?;
    let times = match &args.times {
        Some(text) => parse_floats(text, "--times")?,
        None => default_times(lambda1),
    };
    let f = match &args.f {
        Some(text) => parse_floats(text, "--f")?,
        None => eigenfunction,
    };

    let mut rows = vec![
        ReportRow::value("ergodic.meta", "lambda1", lambda1),
        ReportRow::value("ergodic.meta", "states", chain.n() as f64),
    ];

    let (curve, pass) =
        variance_decay_check(&chain, &f, &times).map_err(ergodicity_failure)?;
    let mut head = ReportRow::text(
        "ergodic.variance",
        "envelope",
        "Var(P_t f) against Var(f) exp(-2 lambda_1 t)",
    );
    if pass {
        head = head.with_flag("pass");
    } else {
        head = head.with_flag("violated");
    }
    rows.push(head);
    for (idx, (t, v)) in curve.times.iter().zip(&curve.values).enumerate() {
        rows.push(
            ReportRow::value("ergodic.variance", &format!("t{idx:03}"), *v)
                .with_detail(&format!("t={}", format_sig12(*t))),
        );
    }

    let tv = tv_decay(&chain, &times).map_err(ergodicity_failure)?;
    let mut rate_row = match tv.fitted_rate {
        Some(rate) => ReportRow::value("ergodic.tv", "fitted_rate", rate),
        None => ReportRow::text("ergodic.tv", "fitted_rate", "not identifiable")
            .with_flag("not_identifiable"),
    };
    rate_row = rate_row.with_detail(tv.convention);
    rows.push(rate_row);
    for (idx, (t, v)) in tv.sup.times.iter().zip(&tv.sup.values).enumerate() {
        rows.push(
            ReportRow::value("ergodic.tv", &format!("sup_t{idx:03}"), *v)
                .with_detail(&format!("t={}", format_sig12(*t))),
        );
    }

    let v = match args.v_functional {
        VKind::Var => VFunctional::Var,
        VKind::Norm => VFunctional::NormRSquared { r: args.r },
        VKind::Lip => VFunctional::LipSquared,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(out.seed);
    let mut f_set: Vec<Vec<f64>> = vec![f.clone()];
    for _ in 0..args.f_count {
        f_set.push(forms::random_function(chain.n(), &mut rng));
    }
    let rep =
        algebraic_decay_check(&chain, v, args.q, &f_set, &times).map_err(ergodicity_failure)?;
    let mut c_row = ReportRow::value("ergodic.algebraic", "c", rep.c).with_detail(&format!(
        "V = {}, q = {}, {} functions",
        rep.functional,
        rep.q,
        f_set.len()
    ));
    if rep.premise_ok {
        c_row = c_row.with_flag("premise_ok");
    } else {
        c_row = c_row.with_flag("premise_violated");
    }
    rows.push(c_row);
    Ok(rows)
}

fn run_probe(args: &ProbeArgs, _out: &OutputOpts) -> Result<Vec<ReportRow>, Failure> {
    let family = match (&args.family, &args.b, &args.a, &args.sizes) {
        (Some(text), None, None, None) => {
            TruncationFamily::from_json(text).map_err(ergodicity_failure)?
        }
        (None, Some(b), Some(a), Some(sizes)) => {
            let sizes = parse_sizes(sizes)?;
            TruncationFamily::from_exprs(b, a, &sizes).map_err(ergodicity_failure)?
        }
        _ => {
            return Err(Failure::precondition(
                "provide either --family or all of --b, --a, --sizes",
            ))
        }
    };
    let report = diagram_probe(&family).map_err(ergodicity_failure)?;
    let mut rows = vec![ReportRow::text(
        "probe.meta",
        "family",
        &format!(
            "b(i) = {}, a(i) = {}",
            family.birth_text, family.death_text
        ),
    )];
    for row in &report.rows {
        let prefix = format!("n{:03}", row.n);
        let section = "probe.rows";
        rows.push(ReportRow::value(
            section,
            &format!("{prefix}.lambda1"),
            row.lambda1,
        ));
        let mut sigma = ReportRow::value(section, &format!("{prefix}.sigma"), row.sigma);
        if row.sigma_converged {
            sigma = sigma.with_flag("converged");
        }
        rows.push(sigma);
        rows.push(ReportRow::value(
            section,
            &format!("{prefix}.nash_c"),
            row.nash_c,
        ));
        match row.tv_rate {
            Some(rate) => {
                rows.push(ReportRow::value(section, &format!("{prefix}.tv_rate"), rate))
            }
            None => rows.push(
                ReportRow::text(section, &format!("{prefix}.tv_rate"), "not identifiable")
                    .with_flag("not_identifiable"),
            ),
        }
        for (name, value) in [
            ("k_poincare", row.k_poincare),
            ("k_nash", row.k_nash),
            ("k_wang", row.k_wang),
            ("k_chen", row.k_chen),
        ] {
            let mut k_row = ReportRow::value(section, &format!("{prefix}.{name}"), value);
            if row.cheeger_restricted {
                k_row = k_row.with_flag("restricted_to_intervals");
            }
            rows.push(k_row);
        }
    }
    for (n, message) in &report.failures {
        rows.push(
            ReportRow::text("probe.failures", &format!("n{n:03}"), message)
                .with_flag("generator_failed"),
        );
    }
    let trend_label = |t: ergodicity::Trend| match t {
        ergodicity::Trend::DecayingToZero => "decaying-to-zero",
        ergodicity::Trend::BoundedBelow => "bounded-below",
    };
    rows.push(ReportRow::text(
        "probe.meta",
        "trend_rule",
        report.trend_rule,
    ));
    for (name, trend) in [
        ("lambda1", report.lambda1_trend),
        ("sigma", report.sigma_trend),
        ("nash_c", report.nash_c_trend),
        ("tv_rate", report.tv_rate_trend),
    ] {
        rows.push(ReportRow::text("probe.trends", name, trend_label(trend)));
    }
    Ok(rows)
}
