//! Subcommand implementations. Each one computes its rows in full before
//! anything is written, so a failed run leaves no partial output.

use std::io::Write;
use std::path::Path;

use meinardus::asymptotics::{self, EnumerationReport, EstimateVariant};
use meinardus::models::{builtin, load_model};
use meinardus::nllt::{self, CharFn, IntegralCheck};
use meinardus::saddle::{self, SaddleSolution, TiltedMoments};
use meinardus::series::{self, Enumeration};
use meinardus::{Error, PrecisionContext, Result, WeightedModel};
use serde::Serialize;

use crate::args::{
    CharFnArgs, Common, EnumerateArgs, EnumerateMethod, EstimateArgs, Format, NlltArgs, SaddleArgs,
};

const DEFAULT_N: &[u64] = &[1000];
const DEFAULT_NLLT_GRID: &[u64] = &[250, 500, 1000, 2000];
const DEFAULT_SAMPLES: usize = 11;

fn context(common: &Common) -> Result<PrecisionContext> {
    PrecisionContext::new(common.bits, common.tol)
}

/// Resolve `--model` (and `--eps`) to a model: an existing file or a name
/// ending in `.json` is read as a model file, anything else is a built-in.
pub fn resolve_model(common: &Common) -> Result<WeightedModel> {
    let path = Path::new(&common.model);
    if path.is_file() || common.model.ends_with(".json") {
        if common.eps.is_some() {
            return Err(Error::InvalidArgument(
                "--eps applies only to the example3 built-in".into(),
            ));
        }
        return load_model(path);
    }
    match common.eps {
        Some(eps) if common.model == "example3" => builtin(&format!("example3({eps})")),
        Some(_) => Err(Error::InvalidArgument(
            "--eps applies only to the example3 built-in".into(),
        )),
        None => builtin(&common.model),
    }
}

fn emit<R: Serialize, J: Serialize + ?Sized>(common: &Common, rows: &[R], json: &J) -> Result<()> {
    let bytes = match common.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Error::Io(e.to_string()))?
        }
        Format::Json => {
            let mut s = serde_json::to_vec_pretty(json)?;
            s.push(b'\n');
            s
        }
    };
    match &common.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct CoefficientRow {
    n: usize,
    c_n: String,
    log_c_n: Option<f64>,
}

#[derive(Serialize)]
struct EnumerationDoc<'a> {
    model: &'a str,
    method: &'static str,
    bits: u32,
    min_significant_bits: Option<f64>,
    negative: &'a [usize],
    rows: &'a [CoefficientRow],
}

fn format_coefficient(e: &Enumeration, n: usize, integral: bool) -> String {
    let c = e.coeff(n);
    if c.is_zero() {
        return "0".into();
    }
    if integral {
        if let Some(i) = c.to_integer() {
            return i.to_string();
        }
    }
    c.to_string_radix(10, Some(20))
}

pub fn enumerate(args: &EnumerateArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let model = resolve_model(&args.common)?;
    let (e, method) = match args.method {
        EnumerateMethod::Recurrence => {
            (series::enumerate_exact(&model, args.n, &ctx)?, "recurrence")
        }
        EnumerateMethod::Oracle => (
            series::direct_factor_oracle(&model, args.n, &ctx)?,
            "oracle",
        ),
    };
    if !e.negative.is_empty() {
        eprintln!(
            "warning: {} negative coefficients, first at n = {}",
            e.negative.len(),
            e.negative[0]
        );
    }
    let integral = model.is_integer_model(args.n as u64);
    let first = if args.last { args.n } else { 0 };
    let rows: Vec<CoefficientRow> = (first..=args.n)
        .map(|n| CoefficientRow {
            n,
            c_n: format_coefficient(&e, n, integral),
            log_c_n: finite(e.log_abs(n)),
        })
        .collect();
    let doc = EnumerationDoc {
        model: &model.name,
        method,
        bits: e.bits,
        min_significant_bits: finite(e.min_significant_bits),
        negative: &e.negative,
        rows: &rows,
    };
    emit(&args.common, &rows, &doc)
}

#[derive(Serialize)]
struct EstimateRow {
    n: u64,
    variant: EstimateVariant,
    delta: f64,
    log_cn_estimate: f64,
    n_delta: f64,
    log_gen_fn: f64,
    gaussian: f64,
    variance: f64,
    log_cn_exact: Option<f64>,
    ratio: Option<f64>,
    #[serde(rename = "L_used")]
    l_used: usize,
    delta_tail: Option<f64>,
}

impl From<&EnumerationReport> for EstimateRow {
    fn from(r: &EnumerationReport) -> Self {
        Self {
            n: r.n,
            variant: r.variant,
            delta: r.delta,
            log_cn_estimate: r.log_cn_estimate,
            n_delta: r.components.n_delta,
            log_gen_fn: r.components.log_gen_fn,
            gaussian: r.components.gaussian,
            variance: r.variance,
            log_cn_exact: r.log_cn_exact,
            ratio: r.ratio,
            l_used: r.l_used,
            delta_tail: r.delta_tail,
        }
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let variant: EstimateVariant = args.variant.parse()?;
    let model = resolve_model(&args.common)?;
    let grid = args.select.values(DEFAULT_N);
    let reports = asymptotics::estimate_grid(&model, &grid, variant, &ctx, args.compare)?;
    let rows: Vec<EstimateRow> = reports.iter().map(EstimateRow::from).collect();
    emit(&args.common, &rows, &reports)
}

#[derive(Serialize)]
struct SaddleRow {
    n: u64,
    delta: f64,
    residual: f64,
    iterations: usize,
    #[serde(rename = "K")]
    k: usize,
    method: saddle::SolveMethod,
    asymptotic_delta: Option<f64>,
    delta_ratio: Option<f64>,
    mean: f64,
    variance: f64,
    third: f64,
}

#[derive(Serialize)]
struct SaddleDoc {
    solution: SaddleSolution,
    asymptotic_delta: Option<f64>,
    delta_ratio: Option<f64>,
    moments: TiltedMoments,
}

pub fn saddle(args: &SaddleArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let model = resolve_model(&args.common)?;
    let mut docs = Vec::new();
    for n in args.select.values(DEFAULT_N) {
        let solution = saddle::solve_khintchine_with_depth(&model, n, &ctx, args.truncation)?;
        let moments = saddle::tilted_moments(&model, solution.delta, solution.k, &ctx)?;
        let asymptotic_delta = model
            .profile
            .as_ref()
            .map(|p| saddle::asymptotic_delta(p, n));
        docs.push(SaddleDoc {
            solution,
            asymptotic_delta,
            delta_ratio: asymptotic_delta.map(|a| solution.delta / a),
            moments,
        });
    }
    let rows: Vec<SaddleRow> = docs
        .iter()
        .map(|d| SaddleRow {
            n: d.solution.n,
            delta: d.solution.delta,
            residual: d.solution.residual,
            iterations: d.solution.iterations,
            k: d.solution.k,
            method: d.solution.method,
            asymptotic_delta: d.asymptotic_delta,
            delta_ratio: d.delta_ratio,
            mean: d.moments.mean,
            variance: d.moments.variance,
            third: d.moments.third,
        })
        .collect();
    emit(&args.common, &rows, &docs)
}

#[derive(Serialize)]
struct NlltRow {
    n: u64,
    delta: Option<f64>,
    prob: Option<f64>,
    variance: Option<f64>,
    ratio: Option<f64>,
    case: nllt::NlltCase,
    condition_holds: bool,
    offending_q: String,
}

pub fn nllt(args: &NlltArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let model = resolve_model(&args.common)?;
    let grid = args.select.values(DEFAULT_NLLT_GRID);
    let report = nllt::check_nllt(&model, &grid, args.q_max, &ctx)?;
    let offending = report
        .offending_q
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(";");
    if report.condition_holds {
        eprintln!("condition holds for q <= {}", args.q_max);
    } else {
        eprintln!(
            "condition violated; offending q: {}",
            offending.replace(';', ", ")
        );
    }
    let rows: Vec<NlltRow> = grid
        .iter()
        .map(|&n| {
            let p = report.ratio_series.iter().find(|p| p.n == n);
            NlltRow {
                n,
                delta: p.map(|p| p.delta),
                prob: p.map(|p| p.prob),
                variance: p.map(|p| p.variance),
                ratio: p.map(|p| p.ratio),
                case: report.case,
                condition_holds: report.condition_holds,
                offending_q: offending.clone(),
            }
        })
        .collect();
    emit(&args.common, &rows, &report)
}

#[derive(Serialize)]
struct CharFnRow {
    n: u64,
    delta: f64,
    alpha: f64,
    re: f64,
    im: f64,
    abs: f64,
    log_abs: f64,
}

pub fn charfn(args: &CharFnArgs) -> Result<()> {
    let ctx = context(&args.common)?;
    let model = resolve_model(&args.common)?;
    if args.integral {
        let check: IntegralCheck = nllt::integral_check(&model, args.n, &ctx)?;
        return emit(&args.common, &[check], &check);
    }
    let delta = match args.delta {
        Some(d) => d,
        None => saddle::solve_khintchine(&model, args.n, &ctx)?.delta,
    };
    let alphas: Vec<f64> = if args.alpha.is_empty() {
        let m = args.samples.unwrap_or(DEFAULT_SAMPLES);
        if m < 2 {
            return Err(Error::InvalidArgument(
                "--samples needs at least 2 points".into(),
            ));
        }
        (0..m).map(|i| 0.5 * i as f64 / (m - 1) as f64).collect()
    } else {
        args.alpha.clone()
    };
    let cf = CharFn::new(&model, args.n, delta, &ctx)?;
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let s = cf.sample(alpha)?;
            Ok(CharFnRow {
                n: args.n,
                delta,
                alpha,
                re: s.value.re,
                im: s.value.im,
                abs: s.value.norm(),
                log_abs: s.log_abs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(&args.common, &rows, &rows)
}
