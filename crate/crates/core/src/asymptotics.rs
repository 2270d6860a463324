//! The generating function at the saddle and asymptotic estimates of `c_n`.
//!
//! `log f(e^{-delta})` is available two ways: the truncated sum
//! `sum Lambda_k e^{-k delta}` and the residue expansion
//! `sum_l h_l delta^{-rho_l} + h_0 - A_0 log delta + Delta(delta)`. The
//! estimate of `c_n` rests on `c_n = e^{n delta} f(e^{-delta}) P(Z_n = n)` with
//! `P(Z_n = n)` replaced by the Gaussian density at the mean.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::dirichlet::{self, AsymptoticProfile};
use crate::error::{Error, Result};
use crate::models::WeightedModel;
use crate::precision::PrecisionContext;
use crate::saddle::{self, LambdaTable, SaddleSolution, TruncatedSum};
use crate::series::{self, Enumeration};

/// Default number of `Delta` terms.
pub const DEFAULT_DELTA_TERMS: usize = 8;

/// `sum_{k<=K} Lambda_k e^{-k delta}`; fails when the tail bound exceeds
/// `tol * max(1, |value|)`.
pub fn log_gen_fn_direct(
    model: &WeightedModel,
    delta: f64,
    k: usize,
    ctx: &PrecisionContext,
) -> Result<f64> {
    let table = LambdaTable::from_model(model, k, ctx)?;
    log_gen_fn_from_table(&table, delta, k, ctx.tol())
}

/// As [`log_gen_fn_direct`] with `K` from [`saddle::truncation_depth`].
pub fn log_gen_fn_default(
    model: &WeightedModel,
    delta: f64,
    ctx: &PrecisionContext,
) -> Result<f64> {
    log_gen_fn_direct(
        model,
        delta,
        saddle::truncation_depth(delta, ctx.tol()),
        ctx,
    )
}

fn log_gen_fn_from_table(table: &LambdaTable, delta: f64, k: usize, tol: f64) -> Result<f64> {
    let TruncatedSum { value, tail } = table.power_sum(delta, k, 0)?;
    let allowed = tol * value.abs().max(1.0);
    if tail > allowed {
        return Err(Error::TruncationTooShallow { k, tail, allowed });
    }
    Ok(value)
}

/// `sum_l h_l delta^{-rho_l} + h_0 - A_0 log delta + Delta(delta)` with `L`
/// terms of `Delta`.
pub fn log_gen_fn_residue(profile: &AsymptoticProfile, delta: f64, l: usize) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let mut value: f64 = (0..profile.poles.len())
        .map(|i| profile.h(i) * delta.powf(-profile.poles[i].rho))
        .sum();
    value += profile.h0 - profile.a0 * delta.ln();
    value += dirichlet::delta_remainder(profile, Complex64::new(delta, 0.0), l)?.re;
    Ok(value)
}

/// Hardy's expansion for ordinary partitions,
/// `zeta(2)/delta + log(delta)/2 - log(2 pi)/2 - delta/24`.
pub fn hardy_expansion(delta: f64) -> f64 {
    PI * PI / 6.0 / delta + 0.5 * delta.ln() - 0.5 * (2.0 * PI).ln() - delta / 24.0
}

/// Size of the exponentially small term dropped by [`hardy_expansion`]:
/// `e^{-4 pi^2/delta}`.
pub fn hardy_error_bar(delta: f64) -> f64 {
    (-4.0 * PI * PI / delta).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenFnEvaluation {
    pub delta: f64,
    pub log_value_direct: f64,
    pub log_value_residue: f64,
    /// direct minus residue
    pub gap: f64,
    #[serde(rename = "L_used")]
    pub l_used: usize,
    #[serde(rename = "K_used")]
    pub k_used: usize,
}

/// Both evaluations of `log f(e^{-delta})` side by side.
pub fn compare_gen_fn(
    model: &WeightedModel,
    delta: f64,
    l: usize,
    ctx: &PrecisionContext,
) -> Result<GenFnEvaluation> {
    let profile = model.profile()?;
    let k = saddle::truncation_depth(delta, ctx.tol());
    let direct = log_gen_fn_direct(model, delta, k, ctx)?;
    let residue = log_gen_fn_residue(profile, delta, l)?;
    Ok(GenFnEvaluation {
        delta,
        log_value_direct: direct,
        log_value_residue: residue,
        gap: direct - residue,
        l_used: l,
        k_used: k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateVariant {
    /// Residue expansion and `B_n^2 ~ K_2 delta^{-rho_r-2}`.
    PureAsymptotic,
    /// Direct `log f(e^{-delta_n})` and the exact tilted variance.
    SemiExact,
}

impl std::str::FromStr for EstimateVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" | "pure-asymptotic" => Ok(Self::PureAsymptotic),
            "semi-exact" | "semi" => Ok(Self::SemiExact),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant {other:?}; expected pure or semi-exact"
            ))),
        }
    }
}

/// Terms of `log c_n ~ n delta + log f(e^{-delta}) - log(2 pi B^2)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateComponents {
    pub n_delta: f64,
    pub log_gen_fn: f64,
    pub gaussian: f64,
}

impl EstimateComponents {
    pub fn total(&self) -> f64 {
        self.n_delta + self.log_gen_fn + self.gaussian
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationReport {
    pub n: u64,
    pub variant: EstimateVariant,
    pub delta: f64,
    /// `log c_n`, present when the exact value was computed and is positive.
    pub log_cn_exact: Option<f64>,
    pub log_cn_estimate: f64,
    pub components: EstimateComponents,
    /// `B_n^2` as used in the Gaussian term.
    pub variance: f64,
    /// `estimate / exact`.
    pub ratio: Option<f64>,
    /// `Delta` terms used (pure variant).
    #[serde(rename = "L_used")]
    pub l_used: usize,
    /// `|D(-L-1)| delta^{L+1}/(L+1)!` when `D(-L-1)` is known.
    pub delta_tail: Option<f64>,
}

/// `exp(a - b)` with the exponent clamped to the `f64` range.
pub fn ratio_from_logs(estimate: f64, exact: f64) -> f64 {
    (estimate - exact).clamp(-700.0, 700.0).exp()
}

fn components(
    model: &WeightedModel,
    sol: &SaddleSolution,
    variant: EstimateVariant,
    ctx: &PrecisionContext,
) -> Result<(EstimateComponents, f64, usize, Option<f64>)> {
    let delta = sol.delta;
    let n_delta = sol.n as f64 * delta;
    match variant {
        EstimateVariant::PureAsymptotic => {
            let profile = model.profile()?;
            let l = DEFAULT_DELTA_TERMS.min(profile.depth());
            let log_gen_fn = log_gen_fn_residue(profile, delta, l)?;
            let (rho, _) = profile.rightmost();
            let variance = profile.k2() * delta.powf(-rho - 2.0);
            let gaussian = -0.5 * (2.0 * PI * variance).ln();
            Ok((
                EstimateComponents {
                    n_delta,
                    log_gen_fn,
                    gaussian,
                },
                variance,
                l,
                profile.omitted_delta_term(delta, l),
            ))
        }
        EstimateVariant::SemiExact => {
            let table = LambdaTable::from_model(model, sol.k, ctx)?;
            let log_gen_fn = log_gen_fn_from_table(&table, delta, sol.k, ctx.tol())?;
            let variance = saddle::moments_from_table(&table, delta, sol.k)?.variance;
            let gaussian = -0.5 * (2.0 * PI * variance).ln();
            Ok((
                EstimateComponents {
                    n_delta,
                    log_gen_fn,
                    gaussian,
                },
                variance,
                0,
                None,
            ))
        }
    }
}

fn exact_log(enumeration: &Enumeration, n: usize) -> Option<f64> {
    (*enumeration.coeff(n) > 0).then(|| enumeration.log_abs(n))
}

fn report(
    model: &WeightedModel,
    n: u64,
    variant: EstimateVariant,
    ctx: &PrecisionContext,
    exact: Option<&Enumeration>,
) -> Result<EnumerationReport> {
    if variant == EstimateVariant::PureAsymptotic {
        model.profile()?;
    }
    let sol = saddle::solve_khintchine(model, n, ctx)?;
    let (components, variance, l_used, delta_tail) = components(model, &sol, variant, ctx)?;
    let log_cn_estimate = components.total();
    let log_cn_exact = exact.and_then(|e| exact_log(e, n as usize));
    Ok(EnumerationReport {
        n,
        variant,
        delta: sol.delta,
        log_cn_exact,
        log_cn_estimate,
        components,
        variance,
        ratio: log_cn_exact.map(|x| ratio_from_logs(log_cn_estimate, x)),
        l_used,
        delta_tail,
    })
}

/// Estimate `c_n`, comparing with the exact value when `n` is within the
/// enumeration cap.
pub fn estimate_cn(
    model: &WeightedModel,
    n: u64,
    variant: EstimateVariant,
    ctx: &PrecisionContext,
) -> Result<EnumerationReport> {
    let compare = n as usize <= series::ENUMERATION_CAP;
    Ok(estimate_grid(model, &[n], variant, ctx, compare)?.remove(0))
}

/// Reports for every `n` in `grid`; with `compare`, one enumeration up to
/// the largest `n` supplies all exact values.
pub fn estimate_grid(
    model: &WeightedModel,
    grid: &[u64],
    variant: EstimateVariant,
    ctx: &PrecisionContext,
    compare: bool,
) -> Result<Vec<EnumerationReport>> {
    if grid.contains(&0) {
        return Err(Error::InvalidArgument("estimates need n >= 1".into()));
    }
    let exact = if compare {
        let top = grid.iter().copied().max().unwrap_or(0) as usize;
        Some(series::enumerate_exact(model, top, ctx)?)
    } else {
        None
    };
    grid.iter()
        .map(|&n| report(model, n, variant, ctx, exact.as_ref()))
        .collect()
}
