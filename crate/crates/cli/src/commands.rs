use std::io::Write;
use std::path::PathBuf;

use affmf::cones::{
    domination_ratio_test, find_invariant_multicone, furstenberg_cover, DEFAULT_MAX_DEPTH,
};
use affmf::empirical::{exact_dimension_check, validate_legendre, ExactDimOptions, LegendreConfig};
use affmf::geometry::{check_projective_strong_separation, check_strong_separation};
use affmf::pressure::{
    pressure_estimate, PressureOptions, DEFAULT_BUDGET, DEFAULT_CALIBRATION_SAMPLES,
};
use affmf::spectrum::{spectrum_table, uniform_grid, PointStatus, SpectrumContext, TableOptions};
use affmf::{Error, PotentialSpec, Verdict};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::{load, LoadedSystem};
use crate::output::{list, num, opt, CsvDoc};
use crate::{EXIT_ANALYSIS, EXIT_INPUT, EXIT_OK};

pub const SPECTRUM_HEADER: [&str; 12] = [
    "q",
    "s_q",
    "tau",
    "tau_prime_fd",
    "tau_prime_formula",
    "f",
    "regime",
    "h",
    "h_cross",
    "lambda1",
    "lambda2",
    "status",
];
pub const EMPIRICAL_HEADER: [&str; 4] = ["alpha", "f_emp", "scale", "stability"];
pub const PRESSURE_HEADER: [&str; 5] = ["n", "P_n", "lower", "upper", "qb_const"];
pub const CHECK_HEADER: [&str; 4] = ["hypothesis", "verdict", "margin", "detail"];

#[derive(Debug, Parser)]
#[command(
    name = "affmf",
    version,
    about = "Multifractal analysis of planar self-affine measures"
)]
pub struct Cli {
    /// Worker threads; defaults to AFFMF_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Domination and separation hypotheses.
    Check(CheckArgs),
    /// Table of s_q, tau, tau' and f over a q grid.
    Spectrum(SpectrumArgs),
    /// Monte-Carlo coarse spectrum, exact-dimension check and Legendre overlay.
    Empirical(EmpiricalArgs),
    /// Finite-level pressure with its bracket.
    Pressure(PressureArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file, or builtin:<name> for a reference system.
    pub config: String,
    /// CSV destination; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write a JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Domination,
    StrongSeparation,
    ProjectiveSeparation,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Hypotheses that must hold for exit code 0.
    #[arg(long, value_delimiter = ',', default_values = ["domination", "strong-separation", "projective-separation"])]
    pub hypotheses: Vec<Hypothesis>,
    #[arg(long, default_value_t = 8)]
    pub max_intervals: usize,
    #[arg(long, default_value_t = 16)]
    pub cover_depth: usize,
    #[arg(long, default_value_t = 10)]
    pub separation_depth: usize,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.25)]
    pub qmin: f64,
    #[arg(long, default_value_t = 4.0)]
    pub qmax: f64,
    #[arg(long, default_value_t = 16)]
    pub steps: usize,
    /// Word depth; defaults to the config value, then 12.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    /// Half-width of the excluded band around q = 1.
    #[arg(long, default_value_t = 0.02)]
    pub exclusion: f64,
    /// Second depth for the linear-in-1/n extrapolation reported in the JSON.
    #[arg(long)]
    pub extrapolate: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmpiricalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1_000_000)]
    pub points: usize,
    /// Box-grid exponents k (boxes of side L·2^-k).
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 5, 6, 7, 8, 9, 10, 11])]
    pub scales: Vec<u32>,
    /// Exponents used in the q-weighted regressions.
    #[arg(long, value_delimiter = ',', default_values_t = [6u32, 7, 8, 9, 10, 11])]
    pub fit_scales: Vec<u32>,
    /// Defaults to the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 24)]
    pub alpha_bins: usize,
    #[arg(long, default_value_t = 64)]
    pub test_points: usize,
    #[arg(long, default_value_t = affmf::empirical::DEFAULT_WORD_DEPTH)]
    pub word_depth: usize,
    /// Depth of the symbolic Legendre curve.
    #[arg(long, default_value_t = 12)]
    pub spectrum_depth: usize,
}

#[derive(Debug, Args)]
pub struct PressureArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 5, 6, 7, 8, 9, 10, 11, 12])]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_SAMPLES)]
    pub samples: usize,
    /// Calibration seed; defaults to the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

/// Failure of a subcommand, carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn analysis(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ANALYSIS,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::input(e.to_string()),
            Error::InsufficientSampling(_) => {
                Failure::analysis(format!("{e}; increase --points or use coarser --scales"))
            }
            _ => Failure::analysis(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<i32, Failure>;

pub fn dispatch(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match command {
        Command::Check(a) => check(a, out, err),
        Command::Spectrum(a) => spectrum(a, out, err),
        Command::Empirical(a) => empirical(a, out, err),
        Command::Pressure(a) => pressure(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load_system(common: &Common) -> std::result::Result<LoadedSystem, Failure> {
    load(&common.config).map_err(|e| Failure::input(e.to_string()))
}

fn system_name(sys: &LoadedSystem) -> String {
    sys.config.name.clone().unwrap_or_else(|| "unnamed".into())
}

fn emit(
    common: &Common,
    doc: CsvDoc,
    report: serde_json::Value,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let text = doc.finish();
    match &common.output {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::analysis(e.to_string()))?,
    }
    if let Some(path) = &common.report {
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let sys = load_system(&args.common)?;
    if args.cover_depth == 0 || args.separation_depth == 0 || args.max_intervals == 0 {
        return Err(Failure::input(
            "depths and --max-intervals must be positive",
        ));
    }
    let dom = find_invariant_multicone(&sys.ifs, args.max_intervals, DEFAULT_MAX_DEPTH);
    let ratio = domination_ratio_test(&sys.ifs, dom.depth_used.max(1));
    let ssc = check_strong_separation(&sys.ifs, args.separation_depth)?;
    let cover = match &dom.multicone {
        Some(cone) => Some(furstenberg_cover(&sys.ifs, cone, args.cover_depth)?),
        None => None,
    };
    let pssc = match &cover {
        Some(c) => Some(check_projective_strong_separation(
            &sys.ifs,
            c,
            args.separation_depth,
        )?),
        None => None,
    };
    let pssc_verdict = pssc.as_ref().map_or(Verdict::Inconclusive, |r| r.satisfied);

    let mut doc = CsvDoc::new("check", &system_name(&sys), &sys.hash);
    doc.meta("max_intervals", args.max_intervals);
    doc.meta("cover_depth", args.cover_depth);
    doc.meta("separation_depth", args.separation_depth);
    doc.meta(
        "projection_convention",
        "onto (-sin t, cos t) for direction angle t",
    );
    doc.header(&CHECK_HEADER);
    let cone_text = dom.multicone.as_ref().map_or("none".to_string(), |c| {
        c.intervals()
            .iter()
            .map(|i| format!("[{};{}]", num(i.lo()), num(i.hi())))
            .collect::<Vec<_>>()
            .join(" ")
    });
    doc.row(&[
        "domination".into(),
        dom.dominated.to_string(),
        String::new(),
        format!("cone {cone_text}"),
    ]);
    doc.row(&[
        "ratio_test".into(),
        String::new(),
        String::new(),
        match &ratio {
            Ok((c, tau)) => format!(
                "C_est {} tau_est {} depth {}",
                num(*c),
                num(*tau),
                dom.depth_used
            ),
            Err(e) => format!("failed: {e}"),
        },
    ]);
    doc.row(&[
        "strong_separation".into(),
        ssc.satisfied.to_string(),
        num(ssc.margin),
        format!("depth {}", ssc.depth),
    ]);
    doc.row(&[
        "furstenberg_cover".into(),
        String::new(),
        String::new(),
        match &cover {
            Some(c) => format!(
                "depth {} width {} intervals {}",
                c.depth,
                num(c.total_width()),
                c.intervals().len()
            ),
            None => "unavailable without a multicone".into(),
        },
    ]);
    doc.row(&[
        "projective_separation".into(),
        pssc_verdict.to_string(),
        pssc.as_ref().map_or(String::new(), |r| num(r.margin)),
        pssc.as_ref()
            .map_or("unavailable without a cover".into(), |r| {
                format!("depth {}", r.depth)
            }),
    ]);

    let verdict_of = |h: Hypothesis| match h {
        Hypothesis::Domination => dom.dominated,
        Hypothesis::StrongSeparation => ssc.satisfied,
        Hypothesis::ProjectiveSeparation => pssc_verdict,
    };
    let all_yes = args
        .hypotheses
        .iter()
        .all(|h| verdict_of(*h) == Verdict::Yes);
    let report = json!({
        "command": "check",
        "config_hash": sys.hash,
        "requested": args.hypotheses,
        "domination": dom,
        "ratio_test": ratio.as_ref().ok().map(|(c, t)| json!({"c_est": c, "tau_est": t})),
        "strong_separation": ssc,
        "furstenberg_cover": cover,
        "projective_separation": pssc,
        "all_requested_yes": all_yes,
    });
    emit(&args.common, doc, report, out)?;
    for h in &args.hypotheses {
        let _ = writeln!(err, "{:?}: {}", h, verdict_of(*h));
    }
    Ok(if all_yes { EXIT_OK } else { EXIT_ANALYSIS })
}

fn spectrum(args: &SpectrumArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let sys = load_system(&args.common)?;
    if args.qmin.partial_cmp(&args.qmax) != Some(std::cmp::Ordering::Less) && args.steps > 1 {
        return Err(Failure::input("--qmin must be below --qmax"));
    }
    let opts = TableOptions {
        depth: args.depth.or(sys.config.depth).unwrap_or(12),
        tol: args
            .tol
            .or(sys.config.tol)
            .unwrap_or(affmf::spectrum::DEFAULT_TOL),
        fd_step: args.fd_step,
        exclusion: args.exclusion,
        extrapolation_depth: args.extrapolate,
    };
    let ctx = SpectrumContext::new(&sys.ifs, &sys.mu);
    let grid = uniform_grid(args.qmin, args.qmax, args.steps);
    let table = spectrum_table(&ctx, &grid, &opts)?;
    if table.points.is_empty() {
        return Err(Failure::analysis(
            "empty effective q grid after excluding the band around q = 1",
        ));
    }
    let mut doc = CsvDoc::new("spectrum", &system_name(&sys), &sys.hash);
    doc.meta("seed", sys.config.seed);
    doc.meta("depth", opts.depth);
    doc.meta("tol", format!("{:e}", opts.tol));
    doc.meta("fd_step", opts.fd_step);
    doc.meta("exclusion", opts.exclusion);
    doc.meta("excluded_q", list(&table.excluded));
    doc.header(&SPECTRUM_HEADER);
    for p in &table.points {
        let f = p.functionals;
        doc.row(&[
            num(p.q),
            opt(p.s_q),
            opt(p.tau),
            opt(p.tau_prime_fd),
            opt(p.tau_prime_formula),
            opt(p.f),
            p.regime.map_or(String::new(), |r| r.label().into()),
            opt(f.map(|f| f.h)),
            opt(f.map(|f| f.h_cross)),
            opt(f.map(|f| f.lambda1)),
            opt(f.map(|f| f.lambda2)),
            match p.status {
                PointStatus::Ok => "ok",
                PointStatus::Boundary => "boundary",
                PointStatus::Failed => "failed",
            }
            .into(),
        ]);
        if let Some(m) = &p.message {
            let _ = writeln!(err, "q={}: {m}", p.q);
        }
    }
    let report = json!({
        "command": "spectrum",
        "config_hash": sys.hash,
        "table": table,
    });
    emit(&args.common, doc, report, out)?;
    let succeeded = table.points.iter().any(|p| p.status == PointStatus::Ok);
    Ok(if succeeded { EXIT_OK } else { EXIT_ANALYSIS })
}

fn empirical(args: &EmpiricalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let sys = load_system(&args.common)?;
    let seed = args.seed.unwrap_or(sys.config.seed);
    let config = LegendreConfig {
        n_points: args.points,
        seed,
        word_depth: args.word_depth,
        spectrum_depth: args.spectrum_depth,
        box_scales: args.scales.clone(),
        fit_scales: args.fit_scales.clone(),
        alpha_bins: args.alpha_bins,
        ..LegendreConfig::default()
    };
    let overlay = validate_legendre(&sys.ifs, &sys.mu, &config)?;
    let exact_opts = ExactDimOptions {
        n_points: args.points,
        n_test_points: args.test_points,
        seed,
        word_depth: args.word_depth,
        ..ExactDimOptions::default()
    };
    let exact = exact_dimension_check(&sys.ifs, &sys.mu, &sys.mu, &exact_opts);

    let mut doc = CsvDoc::new("empirical", &system_name(&sys), &sys.hash);
    doc.meta("seed", seed);
    doc.meta("points", args.points);
    doc.meta("word_depth", args.word_depth);
    doc.meta("spectrum_depth", args.spectrum_depth);
    doc.meta("tol", format!("{:e}", config.tol));
    doc.meta("scales", list(&config.box_scales));
    doc.meta("fit_scales", list(&config.fit_scales));
    doc.meta("stability_tol", affmf::empirical::STABILITY_TOL);
    doc.meta("conditional", overlay.conditional);
    doc.meta("overlay_sup_deviation", num(overlay.sup_deviation));
    doc.meta(
        "exact_dimension",
        match &exact {
            Ok(r) => format!(
                "slope {} target {} deviation {}",
                num(r.mean_slope),
                num(r.target),
                num(r.deviation)
            ),
            Err(e) => format!("not run: {e}"),
        },
    );
    doc.header(&EMPIRICAL_HEADER);
    for r in &overlay.histogram.rows {
        doc.row(&[
            num(r.alpha),
            num(r.f_emp),
            r.scale.to_string(),
            num(r.stability),
        ]);
    }
    let _ = writeln!(
        err,
        "overlay deviation {} over {} points{}",
        num(overlay.sup_deviation),
        overlay.compared,
        if overlay.conditional {
            " (conditional)"
        } else {
            ""
        }
    );
    let report = json!({
        "command": "empirical",
        "config_hash": sys.hash,
        "seed": seed,
        "overlay": overlay,
        "exact_dimension": match &exact {
            Ok(r) => json!(r),
            Err(e) => json!({"not_run": e.to_string()}),
        },
    });
    emit(&args.common, doc, report, out)?;
    Ok(EXIT_OK)
}

fn pressure(args: &PressureArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Outcome {
    let sys = load_system(&args.common)?;
    if args.depths.is_empty() || args.depths.contains(&0) {
        return Err(Failure::input("--depths must list positive depths"));
    }
    let spec = PotentialSpec::psi(&sys.ifs, &sys.mu, args.q, args.s)?;
    let seed = args.seed.unwrap_or(sys.config.seed);
    let opts = PressureOptions {
        budget: args.budget,
        calibration_samples: args.samples,
        seed,
    };
    let mut doc = CsvDoc::new("pressure", &system_name(&sys), &sys.hash);
    doc.meta("seed", seed);
    doc.meta("q", args.q);
    doc.meta("s", args.s);
    doc.meta("depths", list(&args.depths));
    doc.meta("calibration_samples", args.samples);
    doc.meta("lower", "heuristic: P_n - log(C_est)/n");
    doc.header(&PRESSURE_HEADER);
    let mut rows = Vec::new();
    for &n in &args.depths {
        let est = pressure_estimate(&spec, n, &opts)?;
        doc.row(&[
            n.to_string(),
            num(est.p_n),
            num(est.lower),
            num(est.upper),
            num(est.qb_constant_est),
        ]);
        rows.push(est);
    }
    let report = json!({
        "command": "pressure",
        "config_hash": sys.hash,
        "q": args.q,
        "s": args.s,
        "rows": rows,
    });
    emit(&args.common, doc, report, out)?;
    Ok(EXIT_OK)
}
