//! Power-series arithmetic over MPFR floats.
//!
//! The coefficients of `log f(z) = sum_k Lambda_k z^k` are assembled by a
//! divisor sieve over the model, and `c_n` follows from the exponential
//! recurrence `n c_n = sum_{k<=n} k Lambda_k c_{n-k}`. An independent
//! product-of-factors path ([`direct_factor_oracle`]) exists for validation.

use rug::Float;

use crate::error::{Error, Result};
use crate::models::WeightedModel;
use crate::precision::PrecisionContext;

/// Largest `N` accepted by the exact enumeration paths.
pub const ENUMERATION_CAP: usize = 5000;

/// Precision of the running magnitude and error bounds.
const TRACK_BITS: u32 = 64;

/// Coefficients `c_0..c_N` of a truncated power series.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeriesReal {
    coeffs: Vec<Float>,
}

impl PowerSeriesReal {
    pub fn new(coeffs: Vec<Float>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "power series needs at least c_0".into(),
            ));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient {i} is not finite"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn from_f64(coeffs: &[f64], prec: u32) -> Result<Self> {
        Self::new(coeffs.iter().map(|c| Float::with_val(prec, *c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Float] {
        &self.coeffs
    }

    pub fn get(&self, n: usize) -> &Float {
        &self.coeffs[n]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(Float::to_f64).collect()
    }

    /// `log |c_n|`, or `-inf` for a zero coefficient. Safe far beyond the
    /// `f64` exponent range.
    pub fn log_abs(&self, n: usize) -> f64 {
        let c = &self.coeffs[n];
        if c.is_zero() {
            return f64::NEG_INFINITY;
        }
        Float::with_val(c.prec(), c.abs_ref()).ln().to_f64()
    }
}

/// `xi_1..xi_J`, the coefficients of `log S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogCoefficients {
    values: Vec<Float>,
}

impl LogCoefficients {
    pub(crate) fn from_values(values: Vec<Float>) -> Self {
        Self { values }
    }

    pub fn degree(&self) -> usize {
        self.values.len()
    }

    /// `xi_j` for `1 <= j <= J`.
    pub fn get(&self, j: usize) -> &Float {
        &self.values[j - 1]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Float::to_f64).collect()
    }
}

/// `Lambda_1..Lambda_N`, the coefficients of `log f`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSequence {
    values: Vec<Float>,
}

impl LambdaSequence {
    pub fn new(values: Vec<Float>) -> Result<Self> {
        if let Some(i) = values.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Lambda_{} is not finite",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn from_f64(values: &[f64], prec: u32) -> Result<Self> {
        Self::new(values.iter().map(|v| Float::with_val(prec, *v)).collect())
    }

    pub fn degree(&self) -> usize {
        self.values.len()
    }

    /// `Lambda_k` for `1 <= k <= N`.
    pub fn get(&self, k: usize) -> &Float {
        &self.values[k - 1]
    }

    pub fn values(&self) -> &[Float] {
        &self.values
    }

    /// Values as `f64`, index 0 holding `Lambda_1`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Float::to_f64).collect()
    }
}

/// Log-coefficients of a series with `d_0 = 1`:
/// `j xi_j = j d_j - sum_{m<j} m xi_m d_{j-m}`.
pub fn log_series(d: &PowerSeriesReal) -> Result<LogCoefficients> {
    let c0 = d.get(0);
    if *c0 != 1 {
        return Err(Error::NonUnitConstantTerm(c0.to_f64()));
    }
    let prec = c0.prec();
    let degree = d.degree();
    let support: Vec<usize> = (1..=degree).filter(|&i| !d.get(i).is_zero()).collect();
    // weighted[m] = m * xi_m
    let mut weighted: Vec<Float> = vec![Float::new(prec); degree + 1];
    for j in 1..=degree {
        let mut acc = Float::with_val(prec, d.get(j) * j as u64);
        for &i in support.iter().take_while(|&&i| i < j) {
            acc -= &weighted[j - i] * d.get(i);
        }
        weighted[j] = acc;
    }
    let values = weighted
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(j, w)| w / j as u64)
        .collect();
    Ok(LogCoefficients::from_values(values))
}

/// `exp(sum_k Lambda_k z^k)` through degree `n`.
pub fn exp_series(lambda: &LambdaSequence, n: usize) -> Result<PowerSeriesReal> {
    if lambda.degree() < n {
        return Err(Error::InvalidArgument(format!(
            "Lambda has degree {} < {n}",
            lambda.degree()
        )));
    }
    let prec = lambda
        .values
        .first()
        .map_or(PrecisionContext::DEFAULT_BITS, Float::prec);
    Ok(exp_recurrence(lambda, n, prec, false).0)
}

/// The recurrence shared by [`exp_series`] and [`enumerate_exact`]; with
/// `track` set it also returns an absolute error bound for each `c_n`.
fn exp_recurrence(
    lambda: &LambdaSequence,
    n: usize,
    prec: u32,
    track: bool,
) -> (PowerSeriesReal, Vec<Float>) {
    let support: Vec<(usize, Float)> = (1..=n)
        .filter(|&k| !lambda.get(k).is_zero())
        .map(|k| (k, Float::with_val(prec, lambda.get(k) * k as u64)))
        .collect();
    let abs_support: Vec<(usize, Float)> = if track {
        support
            .iter()
            .map(|(k, v)| (*k, Float::with_val(TRACK_BITS, v.abs_ref())))
            .collect()
    } else {
        Vec::new()
    };
    let unit = Float::with_val(TRACK_BITS, Float::u_exp(1, 1 - prec as i32));

    let mut c: Vec<Float> = Vec::with_capacity(n + 1);
    c.push(Float::with_val(prec, 1));
    // magnitude of exp(sum |Lambda_k| z^k) and the error bound
    let mut mag: Vec<Float> = vec![Float::with_val(TRACK_BITS, 1)];
    let mut err: Vec<Float> = vec![Float::new(TRACK_BITS)];

    for m in 1..=n {
        let mut acc = Float::new(prec);
        for (k, kl) in support.iter().take_while(|(k, _)| *k <= m) {
            acc += kl * &c[m - k];
        }
        acc /= m as u64;
        c.push(acc);

        if track {
            // Each c_{m-k} carries err_{m-k}; the products, the m-term sum
            // and the divisor sums behind Lambda_k add O((m + 64) u) relative.
            let slack = Float::with_val(TRACK_BITS, &unit * (m as u64 + 67));
            let mut mag_acc = Float::new(TRACK_BITS);
            let mut err_acc = Float::new(TRACK_BITS);
            for (k, kl) in abs_support.iter().take_while(|(k, _)| *k <= m) {
                mag_acc += kl * &mag[m - k];
                let term = Float::with_val(TRACK_BITS, &mag[m - k] * &slack) + &err[m - k];
                err_acc += kl * &term;
            }
            mag.push(mag_acc / m as u64);
            err.push(err_acc / m as u64);
        }
    }
    let series = PowerSeriesReal { coeffs: c };
    (series, err)
}

/// `Lambda_m = sum_{j | m} b_j a_j^{m/j} xi_{m/j}` by a sieve over multiples.
pub fn lambda_from_model(
    model: &WeightedModel,
    n: usize,
    ctx: &PrecisionContext,
) -> Result<LambdaSequence> {
    let prec = ctx.bits();
    let xi = model.inner.log_coefficients(n, ctx)?;
    let unit_freq = model.frequencies.is_unit();
    let mut values = vec![Float::new(prec); n];
    for j in 1..=n {
        if model.weight(j as u64) == 0.0 {
            continue;
        }
        let b = model.weights.value_mp(j as u64, prec);
        if unit_freq {
            for t in 1..=n / j {
                values[j * t - 1] += &b * xi.get(t);
            }
        } else {
            let a = model.frequencies.value_mp(j as u64, prec);
            let mut scale = Float::with_val(prec, &b * &a);
            for t in 1..=n / j {
                values[j * t - 1] += &scale * xi.get(t);
                scale *= &a;
            }
        }
    }
    LambdaSequence::new(values)
}

/// The same sieve in `f64`, for the analytic paths (saddle, moments,
/// generating-function values) where `K` reaches `10^5` and beyond.
pub fn lambda_f64(model: &WeightedModel, n: usize, ctx: &PrecisionContext) -> Result<Vec<f64>> {
    let xi = model.inner.log_coefficients(n, ctx)?.to_f64();
    let mut values = vec![0.0; n];
    for j in 1..=n {
        let b = model.weight(j as u64);
        if b == 0.0 {
            continue;
        }
        let a = model.frequency(j as u64);
        let mut scale = b;
        for t in 1..=n / j {
            scale *= a;
            values[j * t - 1] += scale * xi[t - 1];
        }
    }
    Ok(values)
}

/// Result of an enumeration run.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub series: PowerSeriesReal,
    /// Indices with `c_n < -tol`; possible when some `b_k` is not an integer.
    pub negative: Vec<usize>,
    /// Smallest number of certified significant bits over nonzero `c_n`.
    pub min_significant_bits: f64,
    /// Mantissa width actually used (after any escalation).
    pub bits: u32,
}

impl Enumeration {
    pub fn coeff(&self, n: usize) -> &Float {
        self.series.get(n)
    }

    pub fn log_abs(&self, n: usize) -> f64 {
        self.series.log_abs(n)
    }
}

/// Significant bits of `value` given an absolute error bound.
fn significant_bits(value: &Float, err: &Float) -> f64 {
    if err.is_zero() {
        return f64::INFINITY;
    }
    if value.is_zero() {
        return 0.0;
    }
    let ratio = Float::with_val(TRACK_BITS, value.abs_ref()) / err;
    ratio.log2().to_f64()
}

const MIN_SIGNIFICANT_BITS: f64 = 10.0;

fn finish(
    mut series: PowerSeriesReal,
    err: &[Float],
    ctx: &PrecisionContext,
) -> Result<Enumeration> {
    let mut min_bits = f64::INFINITY;
    for (n, (c, e)) in series.coeffs.iter_mut().zip(err).enumerate() {
        // A value inside its own error bound, with that bound below tol, is a
        // certified zero (cancellation, e.g. (1+z)(1+z^2)^0 at z^2).
        if Float::with_val(TRACK_BITS, c.abs_ref()) <= *e && e.to_f64() <= ctx.tol() {
            *c = Float::new(c.prec());
            continue;
        }
        let bits = significant_bits(c, e);
        if bits < MIN_SIGNIFICANT_BITS {
            return Err(Error::PrecisionExhausted {
                index: n,
                bits,
                precision: ctx.bits(),
            });
        }
        min_bits = min_bits.min(bits);
    }
    let negative = series
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c < -ctx.tol())
        .map(|(n, _)| n)
        .collect();
    Ok(Enumeration {
        series,
        negative,
        min_significant_bits: min_bits,
        bits: ctx.bits(),
    })
}

fn check_cap(n: usize) -> Result<()> {
    if n > ENUMERATION_CAP {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration is capped at N = {ENUMERATION_CAP}, got {n}"
        )));
    }
    Ok(())
}

/// Retry once at doubled precision when the first attempt runs out of bits.
fn with_escalation(
    ctx: &PrecisionContext,
    run: impl Fn(&PrecisionContext) -> Result<Enumeration>,
) -> Result<Enumeration> {
    match run(ctx) {
        Err(Error::PrecisionExhausted { .. }) => run(&ctx.escalated()),
        other => other,
    }
}

/// Exact coefficients `c_0..c_N` via the `Lambda` sieve and the exponential
/// recurrence, with certified error bounds.
pub fn enumerate_exact(
    model: &WeightedModel,
    n: usize,
    ctx: &PrecisionContext,
) -> Result<Enumeration> {
    check_cap(n)?;
    with_escalation(ctx, |ctx| {
        let lambda = lambda_from_model(model, n, ctx)?;
        let (series, err) = exp_recurrence(&lambda, n, ctx.bits(), true);
        finish(series, &err, ctx)
    })
}

/// Coefficients of `S(a w)^b` through degree `m` by the power recurrence
/// `j g_j = sum_{i=1}^{j} ((b + 1) i - j) s_i g_{j-i}`.
fn factor_power(s: &[Float], b: &Float, m: usize, prec: u32) -> Vec<Float> {
    let support: Vec<usize> = (1..s.len().min(m + 1))
        .filter(|&i| !s[i].is_zero())
        .collect();
    let b1 = Float::with_val(prec, b + 1u32);
    let mut g = Vec::with_capacity(m + 1);
    g.push(Float::with_val(prec, 1));
    for j in 1..=m {
        let mut acc = Float::new(prec);
        for &i in support.iter().take_while(|&&i| i <= j) {
            let w = Float::with_val(prec, &b1 * i as u64) - j as u64;
            let t = Float::with_val(prec, &s[i] * &g[j - i]);
            acc += w * t;
        }
        g.push(acc / j as u64);
    }
    g
}

fn factor_product(model: &WeightedModel, n: usize, prec: u32) -> Vec<Float> {
    let mut product = vec![Float::new(prec); n + 1];
    product[0] = Float::with_val(prec, 1);
    for k in 1..=n {
        if model.weight(k as u64) == 0.0 {
            continue;
        }
        let b = model.weights.value_mp(k as u64, prec);
        let a = model.frequencies.value_mp(k as u64, prec);
        let m = n / k;
        let mut s = Vec::with_capacity(m + 1);
        let mut scale = Float::with_val(prec, 1);
        for i in 0..=m {
            s.push(Float::with_val(prec, model.inner.coeff(i)) * &scale);
            scale *= &a;
        }
        let g = factor_power(&s, &b, m, prec);
        // multiply in place, highest degree first
        for deg in (k..=n).rev() {
            let mut acc = product[deg].clone();
            for (j, gj) in g
                .iter()
                .enumerate()
                .skip(1)
                .take_while(|(j, _)| j * k <= deg)
            {
                if !gj.is_zero() {
                    acc += gj * &product[deg - j * k];
                }
            }
            product[deg] = acc;
        }
    }
    product
}

/// Independent validation path: `prod_{k<=N} S(a_k z^k)^{b_k}` built factor
/// by factor with truncated multiplication. The error bound is the
/// difference to a shadow run carrying 64 extra bits.
pub fn direct_factor_oracle(
    model: &WeightedModel,
    n: usize,
    ctx: &PrecisionContext,
) -> Result<Enumeration> {
    check_cap(n)?;
    with_escalation(ctx, |ctx| {
        let coeffs = factor_product(model, n, ctx.bits());
        let shadow = factor_product(model, n, ctx.bits() + 64);
        let err: Vec<Float> = coeffs
            .iter()
            .zip(&shadow)
            .map(|(c, s)| {
                let diff = Float::with_val(TRACK_BITS, s - c).abs();
                // one extra ulp covers the shadow's own rounding
                let ulp = Float::with_val(TRACK_BITS, s.abs_ref())
                    * Float::with_val(TRACK_BITS, Float::u_exp(1, -(ctx.bits() as i32)));
                diff + ulp
            })
            .collect();
        finish(PowerSeriesReal { coeffs }, &err, ctx)
    })
}
