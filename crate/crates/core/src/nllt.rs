//! Conditions for the normal local limit theorem
//! `P(Z_n = n) ~ 1/sqrt(2 pi Var Z_n)` and the experiments around it.
//!
//! The theorem holds iff `gcd{j : d_j > 0} = 1` and, for every `q >= 2`, the
//! weight mass `sum_{k<=n, q!|k} b_k` grows at least like `log n` (a pole of
//! `S` away from 1 on the unit circle, case A) or `log^2 n` (a zero on the
//! unit circle, case B).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{InnerKind, InnerSeriesSpec, SingularityKind, TailRule, WeightedModel};
use crate::precision::PrecisionContext;
use crate::quadrature;
use crate::saddle::{self, SaddleSolution};
use crate::series::{self, Enumeration};

/// Largest denominator of the rational `alpha` probes.
pub const PROBE_DENOMINATOR: u64 = 12;
/// Default `q_max` of [`check_nllt`].
pub const DEFAULT_Q_MAX: u64 = 12;
/// Relative slack on `P(Z_n = n) <= 1` for rounding in `f64`.
const PROB_SLACK: f64 = 1e-9;
/// Terms of the `xi`-series are dropped once `|w|^j` falls below this.
const SERIES_CUTOFF: f64 = 1e-20;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `gcd{j <= Jmax : d_j > 0}`.
///
/// A gcd of 1 is final. Otherwise the tail rule has to vouch for the rest:
/// a zero tail is certified once every declared coefficient is scanned, a
/// periodic one after a further full period.
pub fn gcd_support(inner: &InnerSeriesSpec, jmax: usize) -> Result<u64> {
    let certified_at = match inner.kind() {
        InnerKind::Explicit { coeffs, tail } => match tail {
            TailRule::Zero => Some(coeffs.len() - 1),
            TailRule::Periodic { period } => Some(coeffs.len() - 1 + period),
        },
        _ => None,
    };
    let limit = certified_at.map_or(jmax, |c| c.min(jmax));
    let mut g = 0;
    for j in 1..=limit {
        if inner.coeff(j) > 0.0 {
            g = gcd(g, j as u64);
            if g == 1 {
                return Ok(1);
            }
        }
    }
    match certified_at {
        Some(c) if c <= jmax && g > 0 => Ok(g),
        _ => Err(Error::Unstabilized(jmax)),
    }
}

/// `sum_{k<=n, q!|k} b_k`.
pub fn weight_mass(model: &WeightedModel, n: u64, q: u64) -> f64 {
    (1..=n)
        .filter(|k| k % q != 0)
        .map(|k| model.weight(k))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NlltCase {
    /// A pole of `S` on the unit circle away from `z = 1`.
    A,
    /// A zero of `S` on the unit circle.
    B,
    NotApplicable,
}

impl NlltCase {
    /// Growth the weight mass needs: `log n` for A (and when neither case
    /// applies), `log^2 n` for B.
    pub fn required_growth(self) -> GrowthClass {
        match self {
            NlltCase::B => GrowthClass::LogSquared,
            NlltCase::A | NlltCase::NotApplicable => GrowthClass::Log,
        }
    }
}

/// Case A when a unit-circle pole away from 1 is declared, B when a
/// unit-circle zero is; A wins when both are present.
pub fn classify_case(inner: &InnerSeriesSpec) -> NlltCase {
    let sings = inner.singularities();
    if sings
        .iter()
        .any(|s| s.kind == SingularityKind::Pole && s.is_complex())
    {
        NlltCase::A
    } else if sings.iter().any(|s| s.kind == SingularityKind::Zero) {
        NlltCase::B
    } else {
        NlltCase::NotApplicable
    }
}

fn mixed_singularities(inner: &InnerSeriesSpec) -> bool {
    let sings = inner.singularities();
    sings
        .iter()
        .any(|s| s.kind == SingularityKind::Pole && s.is_complex())
        && sings.iter().any(|s| s.kind == SingularityKind::Zero)
}

/// Growth of a weight mass along the grid, from the slope `gamma` of
/// `log(mass)` against `log log n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum GrowthClass {
    Zero,
    /// `gamma < 0.75`
    SubLog,
    /// `0.75 <= gamma < 1.75`
    Log,
    /// `1.75 <= gamma < 2.5`
    LogSquared,
    Faster,
}

impl GrowthClass {
    fn from_exponent(gamma: f64) -> Self {
        match gamma {
            g if g < 0.75 => GrowthClass::SubLog,
            g if g < 1.75 => GrowthClass::Log,
            g if g < 2.5 => GrowthClass::LogSquared,
            _ => GrowthClass::Faster,
        }
    }
}

/// Least-squares `C` in `mass ~ C g(n)` and the relative residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub c: f64,
    pub rel_residual: f64,
}

fn fit_against(masses: &[(u64, f64)], g: impl Fn(f64) -> f64) -> GrowthFit {
    let (mut num, mut den, mut norm) = (0.0, 0.0, 0.0);
    for &(n, m) in masses {
        let x = g(n as f64);
        num += m * x;
        den += x * x;
        norm += m * m;
    }
    let c = if den > 0.0 { num / den } else { 0.0 };
    let resid: f64 = masses
        .iter()
        .map(|&(n, m)| (m - c * g(n as f64)).powi(2))
        .sum::<f64>()
        .sqrt();
    GrowthFit {
        c,
        rel_residual: if norm > 0.0 { resid / norm.sqrt() } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QMass {
    pub q: u64,
    /// `(n, mass_n)` along the grid.
    pub masses: Vec<(u64, f64)>,
    /// Slope of `log mass` against `log log n`; `None` with fewer than two
    /// usable points.
    pub exponent: Option<f64>,
    pub growth: GrowthClass,
    pub fit_log: GrowthFit,
    pub fit_log_squared: GrowthFit,
    /// `min_n mass_n / g(n)` for the required `g`.
    pub inf_ratio: f64,
    pub passes: bool,
}

fn mass_growth(model: &WeightedModel, grid: &[u64], q: u64, required: GrowthClass) -> QMass {
    // one pass over k up to max(grid)
    let mut masses = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut k = 0;
    for &n in grid {
        while k < n {
            k += 1;
            if k % q != 0 {
                acc += model.weight(k);
            }
        }
        masses.push((n, acc));
    }
    let required_fn = |n: f64| match required {
        GrowthClass::LogSquared => n.ln().powi(2),
        _ => n.ln(),
    };
    let inf_ratio = masses
        .iter()
        .filter(|(n, _)| *n >= 2)
        .map(|&(n, m)| m / required_fn(n as f64))
        .fold(f64::INFINITY, f64::min);
    let usable: Vec<(f64, f64)> = masses
        .iter()
        .filter(|(n, m)| *n >= 3 && *m > 0.0)
        .map(|&(n, m)| ((n as f64).ln().ln(), m.ln()))
        .collect();
    let exponent = (usable.len() >= 2).then(|| {
        let len = usable.len() as f64;
        let mx = usable.iter().map(|p| p.0).sum::<f64>() / len;
        let my = usable.iter().map(|p| p.1).sum::<f64>() / len;
        let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let last = masses.last().map_or(0.0, |m| m.1);
    let growth = if last <= 0.0 {
        GrowthClass::Zero
    } else {
        match exponent {
            Some(g) => GrowthClass::from_exponent(g),
            // a single point: only positivity can be judged
            None => required,
        }
    };
    QMass {
        q,
        fit_log: fit_against(&masses, f64::ln),
        fit_log_squared: fit_against(&masses, |n| n.ln().powi(2)),
        masses,
        exponent,
        growth,
        inf_ratio,
        passes: growth >= required && inf_ratio > 0.0,
    }
}

/// `sqrt(2 pi Var Z_n) P(Z_n = n)` at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub n: u64,
    pub delta: f64,
    pub prob: f64,
    pub variance: f64,
    pub ratio: f64,
}

/// `|phi_n(p/q)|` at a rational point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RationalProbe {
    pub p: u64,
    pub q: u64,
    pub n: u64,
    pub abs_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NlltReport {
    pub model: String,
    pub gcd_support: u64,
    pub case: NlltCase,
    pub case_note: Option<String>,
    pub required_growth: GrowthClass,
    pub per_q: Vec<QMass>,
    pub offending_q: Vec<u64>,
    pub condition_holds: bool,
    pub ratio_series: Vec<RatioPoint>,
    pub rational_probes: Vec<RationalProbe>,
}

/// Evaluate both conditions over `n_grid` for `q = 2..=q_max`, plus the
/// NLLT ratio at grid points within the enumeration cap and rational probes
/// of `|phi_n|` at the largest such point.
pub fn check_nllt(
    model: &WeightedModel,
    n_grid: &[u64],
    q_max: u64,
    ctx: &PrecisionContext,
) -> Result<NlltReport> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return Err(Error::InvalidArgument(
            "n grid must be positive and strictly increasing".into(),
        ));
    }
    if q_max < 2 {
        return Err(Error::InvalidArgument("q_max must be at least 2".into()));
    }
    let jmax = 4 * n_grid[n_grid.len() - 1].max(64) as usize;
    let g = gcd_support(&model.inner, jmax)?;
    let case = classify_case(&model.inner);
    let required = case.required_growth();
    let per_q: Vec<QMass> = (2..=q_max)
        .map(|q| mass_growth(model, n_grid, q, required))
        .collect();
    let offending_q: Vec<u64> = per_q.iter().filter(|m| !m.passes).map(|m| m.q).collect();

    let small: Vec<u64> = n_grid
        .iter()
        .copied()
        .filter(|&n| n as usize <= series::ENUMERATION_CAP)
        .collect();
    let ratio_series = ratio_series(model, &small, ctx)?;
    let rational_probes = match small.last() {
        Some(&n) => rational_probes(model, n, ctx)?,
        None => Vec::new(),
    };
    Ok(NlltReport {
        model: model.name.clone(),
        gcd_support: g,
        case,
        case_note: mixed_singularities(&model.inner)
            .then(|| "unit-circle pole and zero both declared; case A (log n) applied".to_string()),
        required_growth: required,
        condition_holds: g == 1 && offending_q.is_empty(),
        per_q,
        offending_q,
        ratio_series,
        rational_probes,
    })
}

/// `log f_n(e^{-delta}) = sum_{k<=n} b_k log S(a_k e^{-k delta})`.
pub fn log_truncated_gen_fn(
    model: &WeightedModel,
    n: u64,
    delta: f64,
    ctx: &PrecisionContext,
) -> Result<f64> {
    let cf = CharFn::new(model, n, delta, ctx)?;
    Ok(cf.factors.iter().map(|f| f.b * f.log_s_r).sum())
}

fn prob_from(
    model: &WeightedModel,
    exact: &Enumeration,
    sol: &SaddleSolution,
    ctx: &PrecisionContext,
) -> Result<f64> {
    let n = sol.n;
    let c = exact.coeff(n as usize);
    if c.is_zero() {
        return Ok(0.0);
    }
    if *c < 0 {
        return Err(Error::OutOfRange(
            -(exact.log_abs(n as usize) - n as f64 * sol.delta).exp(),
        ));
    }
    let log_fn = log_truncated_gen_fn(model, n, sol.delta, ctx)?;
    let p = (exact.log_abs(n as usize) - n as f64 * sol.delta - log_fn).exp();
    if !(p <= 1.0 + PROB_SLACK) {
        return Err(Error::OutOfRange(p));
    }
    Ok(p)
}

/// `P(Z_n = n) = c_n e^{-n delta_n} / f_n(e^{-delta_n})`.
pub fn prob_exact(model: &WeightedModel, n: u64, ctx: &PrecisionContext) -> Result<f64> {
    let exact = series::enumerate_exact(model, n as usize, ctx)?;
    let sol = saddle::solve_khintchine(model, n, ctx)?;
    prob_from(model, &exact, &sol, ctx)
}

fn ratio_series(
    model: &WeightedModel,
    grid: &[u64],
    ctx: &PrecisionContext,
) -> Result<Vec<RatioPoint>> {
    let Some(&top) = grid.last() else {
        return Ok(Vec::new());
    };
    let exact = series::enumerate_exact(model, top as usize, ctx)?;
    grid.iter()
        .map(|&n| {
            let sol = saddle::solve_khintchine(model, n, ctx)?;
            let prob = prob_from(model, &exact, &sol, ctx)?;
            let variance = saddle::truncated_moments(model, sol.delta, n as usize, ctx)?.variance;
            Ok(RatioPoint {
                n,
                delta: sol.delta,
                prob,
                variance,
                ratio: (2.0 * PI * variance).sqrt() * prob,
            })
        })
        .collect()
}

/// `sqrt(2 pi Var Z_n) P(Z_n = n)` along `grid` (all within the cap).
pub fn nllt_ratios(
    model: &WeightedModel,
    grid: &[u64],
    ctx: &PrecisionContext,
) -> Result<Vec<RatioPoint>> {
    if grid
        .iter()
        .any(|&n| n == 0 || n as usize > series::ENUMERATION_CAP)
    {
        return Err(Error::InvalidArgument(format!(
            "ratio grid must lie in 1..={}",
            series::ENUMERATION_CAP
        )));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    ratio_series(model, &sorted, ctx)
}

fn rational_probes(
    model: &WeightedModel,
    n: u64,
    ctx: &PrecisionContext,
) -> Result<Vec<RationalProbe>> {
    let sol = saddle::solve_khintchine(model, n, ctx)?;
    let cf = CharFn::new(model, n, sol.delta, ctx)?;
    let mut out = Vec::new();
    for q in 2..=PROBE_DENOMINATOR {
        for p in 1..=q / 2 {
            if gcd(p, q) == 1 {
                let alpha = p as f64 / q as f64;
                out.push(RationalProbe {
                    p,
                    q,
                    n,
                    abs_phi: cf.log_phi(alpha)?.re.exp(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharFnSample {
    pub n: u64,
    pub alpha: f64,
    pub value: Complex64,
    pub log_abs: f64,
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    k: u64,
    b: f64,
    /// `a_k e^{-k delta}`
    r: f64,
    /// `log S(r)`
    log_s_r: f64,
}

/// `phi_n(alpha) = E e^{2 pi i alpha Z_n}` for fixed `n` and `delta`, with
/// the per-factor data precomputed.
#[derive(Debug, Clone)]
pub struct CharFn {
    n: u64,
    delta: f64,
    inner: InnerSeriesSpec,
    /// `xi_1..xi_J` when `log S` is summed as a series.
    xi: Option<Vec<f64>>,
    factors: Vec<Factor>,
}

impl CharFn {
    /// Uses the closed-form `log S` when the kernel has one.
    pub fn new(model: &WeightedModel, n: u64, delta: f64, ctx: &PrecisionContext) -> Result<Self> {
        Self::build(model, n, delta, ctx, !model.inner.has_closed_form())
    }

    /// Forces the `xi`-series for `log S`.
    pub fn with_series(
        model: &WeightedModel,
        n: u64,
        delta: f64,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        Self::build(model, n, delta, ctx, true)
    }

    fn build(
        model: &WeightedModel,
        n: u64,
        delta: f64,
        ctx: &PrecisionContext,
        series: bool,
    ) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let mut factors = Vec::new();
        let mut r_max: f64 = 0.0;
        for k in 1..=n {
            let b = model.weight(k);
            if b == 0.0 {
                continue;
            }
            let r = model.frequency(k) * (-(k as f64) * delta).exp();
            if r >= 1.0 {
                return Err(Error::SeriesDivergence(r));
            }
            r_max = r_max.max(r);
            factors.push(Factor {
                k,
                b,
                r,
                log_s_r: 0.0,
            });
        }
        let xi = if series {
            let terms = if r_max > 0.0 {
                (SERIES_CUTOFF.ln() / r_max.ln()).ceil() as usize + 1
            } else {
                1
            };
            Some(model.inner.log_coefficients(terms.max(1), ctx)?.to_f64())
        } else {
            None
        };
        let mut cf = Self {
            n,
            delta,
            inner: model.inner.clone(),
            xi,
            factors,
        };
        for i in 0..cf.factors.len() {
            let r = cf.factors[i].r;
            cf.factors[i].log_s_r = cf.log_s(Complex64::new(r, 0.0))?.re;
        }
        Ok(cf)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn log_s(&self, w: Complex64) -> Result<Complex64> {
        let modulus = w.norm();
        if modulus >= 1.0 {
            return Err(Error::SeriesDivergence(modulus));
        }
        match &self.xi {
            None => Ok(self
                .inner
                .closed_form_log(w)
                .expect("closed form checked at build")),
            Some(xi) => {
                let mut sum = Complex64::new(0.0, 0.0);
                let mut power = Complex64::new(1.0, 0.0);
                let mut size = 1.0;
                for x in xi {
                    power *= w;
                    size *= modulus;
                    if size < SERIES_CUTOFF {
                        break;
                    }
                    sum += power * *x;
                }
                Ok(sum)
            }
        }
    }

    /// `log phi_n(alpha) = sum_k b_k (log S(r_k e^{2 pi i alpha k}) - log S(r_k))`.
    pub fn log_phi(&self, alpha: f64) -> Result<Complex64> {
        check_alpha(alpha)?;
        let mut total = Complex64::new(0.0, 0.0);
        for f in &self.factors {
            let theta = 2.0 * PI * (alpha * f.k as f64).fract();
            let w = Complex64::from_polar(f.r, theta);
            total += (self.log_s(w)? - f.log_s_r) * f.b;
        }
        Ok(total)
    }

    pub fn sample(&self, alpha: f64) -> Result<CharFnSample> {
        let lp = self.log_phi(alpha)?;
        Ok(CharFnSample {
            n: self.n,
            alpha,
            value: lp.exp(),
            log_abs: lp.re,
        })
    }

    /// `U_n(k; alpha) = log(S(r_k)^2 / |S(r_k e^{2 pi i alpha k})|^2)`; zero
    /// for `k` without a factor.
    pub fn u_term(&self, k: u64, alpha: f64) -> Result<f64> {
        let Some(f) = self.factors.iter().find(|f| f.k == k) else {
            return Ok(0.0);
        };
        let theta = 2.0 * PI * (alpha * k as f64).fract();
        let w = Complex64::from_polar(f.r, theta);
        Ok(2.0 * (f.log_s_r - self.log_s(w)?.re))
    }

    /// `sum_k b_k U_n(k; alpha)`, which equals `-2 log|phi_n(alpha)|`.
    pub fn weighted_u_sum(&self, alpha: f64) -> Result<f64> {
        let mut s = 0.0;
        for f in &self.factors {
            s += f.b * self.u_term(f.k, alpha)?;
        }
        Ok(s)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.abs() <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [-1/2, 1/2], got {alpha}"
        )));
    }
    Ok(())
}

/// `phi_n(alpha)` at one point; `alpha` in `[-1/2, 1/2]`.
pub fn char_fn(
    model: &WeightedModel,
    n: u64,
    delta: f64,
    alpha: f64,
    ctx: &PrecisionContext,
) -> Result<CharFnSample> {
    check_alpha(alpha)?;
    CharFn::new(model, n, delta, ctx)?.sample(alpha)
}

/// `U_n(k; alpha)` for a single `k <= n`.
pub fn u_term(
    model: &WeightedModel,
    n: u64,
    k: u64,
    alpha: f64,
    delta: f64,
    ctx: &PrecisionContext,
) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={n}")));
    }
    let mut single = model.clone();
    let b = model.weight(k);
    if b == 0.0 {
        return Ok(0.0);
    }
    // keep only factor k
    let mut table = vec![0.0; k as usize];
    table[k as usize - 1] = b;
    single.weights = crate::models::SequenceSpec::Table {
        values: table,
        tail: 0.0,
    };
    CharFn::new(&single, n, delta, ctx)?.u_term(k, alpha)
}

/// Pieces of `P(Z_n = n) = int_{-1/2}^{1/2} phi_n(alpha) e^{-2 pi i n alpha} d alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralCheck {
    pub n: u64,
    pub delta: f64,
    pub alpha0: f64,
    /// integral over `|alpha| <= alpha0`
    pub i1: f64,
    /// integral over `alpha0 < |alpha| <= 1/2`
    pub i2: f64,
    pub total: f64,
    pub quad_error: f64,
    pub prob_exact: f64,
    /// `1/sqrt(2 pi B_n^2)` with the `n`-truncated variance.
    pub gaussian: f64,
}

/// `alpha_0 = delta^{(rho_r+2)/2} log n`, at most `1/2`.
pub fn alpha0(model: &WeightedModel, n: u64, delta: f64) -> f64 {
    let rho = model.profile.as_ref().map_or(1.0, |p| p.rightmost().0);
    (delta.powf((rho + 2.0) / 2.0) * (n as f64).ln()).min(0.5)
}

/// Quadrature of the inversion integral split at `alpha_0`, checked against
/// the exact probability. Uses `phi(-alpha) = conj(phi(alpha))` to integrate
/// over `[0, 1/2]` only, with break points at the zeros of `cos(2 pi n alpha)`.
pub fn integral_check(
    model: &WeightedModel,
    n: u64,
    ctx: &PrecisionContext,
) -> Result<IntegralCheck> {
    let sol = saddle::solve_khintchine(model, n, ctx)?;
    let exact = series::enumerate_exact(model, n as usize, ctx)?;
    let prob = prob_from(model, &exact, &sol, ctx)?;
    let delta = sol.delta;
    let cf = CharFn::new(model, n, delta, ctx)?;
    let variance = saddle::truncated_moments(model, delta, n as usize, ctx)?.variance;
    let gaussian = 1.0 / (2.0 * PI * variance).sqrt();
    let a0 = alpha0(model, n, delta);

    let mut failure = None;
    let mut integrand = |alpha: f64| -> f64 {
        match cf.log_phi(alpha) {
            Ok(lp) => {
                2.0 * (lp - Complex64::new(0.0, 2.0 * PI * n as f64 * alpha))
                    .exp()
                    .re
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let nf = n as f64;
    let breaks = |lo: f64, hi: f64| -> Vec<f64> {
        let mut pts = vec![lo];
        let first = ((4.0 * nf * lo - 1.0) / 2.0).ceil().max(0.0) as u64;
        let mut m = first;
        loop {
            let z = (2 * m + 1) as f64 / (4.0 * nf);
            if z >= hi {
                break;
            }
            if z > lo {
                pts.push(z);
            }
            m += 1;
        }
        pts.push(hi);
        pts
    };
    let abs_tol = 1e-13 * gaussian;
    let r1 = quadrature::integrate_with_breaks(
        &mut integrand,
        &breaks(0.0, a0),
        abs_tol,
        1e-12,
        200_000,
    )?;
    let r2 = if a0 < 0.5 {
        quadrature::integrate_with_breaks(&mut integrand, &breaks(a0, 0.5), abs_tol, 0.0, 400_000)?
    } else {
        quadrature::QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(IntegralCheck {
        n,
        delta,
        alpha0: a0,
        i1: r1.value,
        i2: r2.value,
        total: r1.value + r2.value,
        quad_error: r1.abs_error + r2.abs_error,
        prob_exact: prob,
        gaussian,
    })
}

/// `min_{alpha0 <= alpha <= 1/2} -log|phi_n(alpha)|` and `C = min / log^2 n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBound {
    pub n: u64,
    pub alpha_min: f64,
    pub min_decay: f64,
    pub c_fit: f64,
}

/// Sample `-log|phi_n|` on a grid of spacing `1/(8n)` over `[alpha0, 1/2]`
/// plus the rational points `p/q`, `q <= 12`, and return the minimum.
pub fn decay_lower_bound(
    model: &WeightedModel,
    n: u64,
    ctx: &PrecisionContext,
) -> Result<DecayBound> {
    let sol = saddle::solve_khintchine(model, n, ctx)?;
    let cf = CharFn::new(model, n, sol.delta, ctx)?;
    let a0 = alpha0(model, n, sol.delta);
    let steps = ((0.5 - a0) * 8.0 * n as f64).ceil().max(1.0) as usize;
    let mut points: Vec<f64> = (0..=steps)
        .map(|i| (a0 + (0.5 - a0) * i as f64 / steps as f64).min(0.5))
        .collect();
    for q in 2..=PROBE_DENOMINATOR {
        for p in 1..=q / 2 {
            let a = p as f64 / q as f64;
            if gcd(p, q) == 1 && a >= a0 {
                points.push(a);
            }
        }
    }
    let mut best = (a0, f64::INFINITY);
    for a in points {
        let v = -cf.log_phi(a)?.re;
        if v < best.1 {
            best = (a, v);
        }
    }
    let l = (n as f64).ln();
    Ok(DecayBound {
        n,
        alpha_min: best.0,
        min_decay: best.1,
        c_fit: best.1 / (l * l),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(
            gcd_support(&InnerSeriesSpec::geometric_pole(), 10).unwrap(),
            1
        );
        let g2 = builtin("gcd2").unwrap();
        assert_eq!(gcd_support(&g2.inner, 10).unwrap(), 2);
        let rk = InnerSeriesSpec::ratio_kernel(3).unwrap();
        assert_eq!(rk.coeffs(7), vec![1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(gcd_support(&rk, 12).unwrap(), 1);
    }

    #[test]
    fn gcd_periodic_tail_needs_a_period() {
        // 1 + z^2 + z^4 + ... declared as [1, 0, 1] repeating with period 2
        let inner = InnerSeriesSpec::explicit(
            vec![1.0, 0.0, 1.0],
            TailRule::Periodic { period: 2 },
            vec![],
        )
        .unwrap();
        assert_eq!(gcd_support(&inner, 4).unwrap(), 2);
        assert_eq!(gcd_support(&inner, 3), Err(Error::Unstabilized(3)));
    }

    #[test]
    fn masses() {
        let p = builtin("partitions").unwrap();
        assert_eq!(weight_mass(&p, 10, 2), 5.0);
        let q4 = builtin("q4-indicator").unwrap();
        assert_eq!(weight_mass(&q4, 1000, 4), 0.0);
    }

    #[test]
    fn cases() {
        assert_eq!(
            classify_case(&InnerSeriesSpec::distinct_binomial()),
            NlltCase::B
        );
        assert_eq!(
            classify_case(&InnerSeriesSpec::geometric_pole()),
            NlltCase::NotApplicable
        );
        // (1+z)/(1-z^2) = 1/(1-z): only the pole at 1
        assert_eq!(
            classify_case(&InnerSeriesSpec::ratio_kernel(2).unwrap()),
            NlltCase::NotApplicable
        );
        let rk3 = InnerSeriesSpec::ratio_kernel(3).unwrap();
        assert_eq!(classify_case(&rk3), NlltCase::A);
        assert!(mixed_singularities(&rk3));
    }

    #[test]
    fn growth_classes() {
        let p = builtin("partitions").unwrap();
        let grid = [100, 1000, 10_000, 100_000];
        let m = mass_growth(&p, &grid, 3, GrowthClass::Log);
        assert_eq!(m.growth, GrowthClass::Faster);
        assert!(m.passes);
        let e3 = builtin("example3").unwrap();
        let m = mass_growth(&e3, &grid, 4, GrowthClass::Log);
        assert_eq!(m.growth, GrowthClass::SubLog, "{m:?}");
        assert!(!m.passes);
    }

    #[test]
    fn prob_partitions_one() {
        let m = builtin("partitions").unwrap();
        let sol = saddle::solve_khintchine(&m, 1, &ctx()).unwrap();
        let x = (-sol.delta).exp();
        let p = prob_exact(&m, 1, &ctx()).unwrap();
        assert!((p - x * (1.0 - x)).abs() < 1e-14, "{p}");
    }

    #[test]
    fn prob_zero_off_support() {
        let m = builtin("gcd2").unwrap();
        assert_eq!(prob_exact(&m, 7, &ctx()).unwrap(), 0.0);
    }

    #[test]
    fn phi_basic_properties() {
        let m = builtin("partitions").unwrap();
        let sol = saddle::solve_khintchine(&m, 500, &ctx()).unwrap();
        let cf = CharFn::new(&m, 500, sol.delta, &ctx()).unwrap();
        let near = cf.sample(1e-9).unwrap();
        assert!((near.value - Complex64::new(1.0, 0.0)).norm() < 1e-4);
        let half = cf.sample(0.5).unwrap();
        assert!(half.value.norm() < 1e-6, "{half:?}");
        let a = cf.sample(0.123).unwrap().value;
        let b = cf.sample(-0.123).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn phi_gcd2_periodic() {
        let m = builtin("gcd2").unwrap();
        let s = char_fn(&m, 200, 0.1, 0.5, &ctx()).unwrap();
        assert!((s.value.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u_terms() {
        let m = builtin("partitions").unwrap();
        assert!(u_term(&m, 10, 4, 0.25, 0.1, &ctx()).unwrap().abs() < 1e-15);
        assert!(u_term(&m, 1000, 700, 0.3, 0.1, &ctx()).unwrap().abs() < 1e-20);
        let closed = CharFn::new(&m, 5, 0.1, &ctx())
            .unwrap()
            .u_term(1, 0.5)
            .unwrap();
        let series = CharFn::with_series(&m, 5, 0.1, &ctx())
            .unwrap()
            .u_term(1, 0.5)
            .unwrap();
        let x = (-0.1f64).exp();
        let want = 2.0 * ((1.0 + x) / (1.0 - x)).ln();
        assert!((closed - want).abs() < 1e-12);
        assert!((series - want).abs() < 1e-12);
    }

    #[test]
    fn u_sum_matches_log_modulus() {
        let m = builtin("distinct").unwrap();
        let cf = CharFn::new(&m, 300, 0.08, &ctx()).unwrap();
        for alpha in [0.01, 0.2, 1.0 / 3.0, 0.5] {
            let lp = cf.log_phi(alpha).unwrap();
            assert!((-2.0 * lp.re - cf.weighted_u_sum(alpha).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn decay_bound_positive() {
        let m = builtin("partitions").unwrap();
        let d = decay_lower_bound(&m, 300, &ctx()).unwrap();
        assert!(d.c_fit > 0.0 && d.min_decay > 0.0);
    }
}
