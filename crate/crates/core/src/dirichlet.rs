//! Dirichlet series attached to a model and the analytic data that drive
//! the residue expansion of `log f(e^{-tau})`.
//!
//! `D(s) = sum_k Lambda_k k^{-s}` factors as `D_b(s) D_{(xi,a)}(s)` when the
//! frequencies are constant. Its poles `rho_l` with residues `A_l`, the
//! constants `A_0`, `h_0` and the values `D(-l)` are collected in an
//! [`AsymptoticProfile`]. Built-in profiles are closed forms in zeta values;
//! user models supply them in the model file.

use std::sync::OnceLock;

use num_complex::Complex64;
use rug::ops::Pow;
use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{SequenceSpec, WeightedModel};
use crate::precision::PrecisionContext;
use crate::quadrature;

/// Precision used by the `f64`-returning special functions.
const SPECIAL_BITS: u32 = 128;
/// Highest Bernoulli index kept in the cache.
pub const BERNOULLI_MAX: usize = 64;
/// Default number of `D(-l)` values stored in built-in profiles.
pub const DEFAULT_DELTA_TERMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    pub rho: f64,
    pub residue: f64,
}

/// Poles, residues and the Taylor data of the remainder `Delta`.
///
/// The expansion reads
/// `log f(e^{-tau}) = sum_l h_l tau^{-rho_l} + h_0 - A_0 log tau + Delta(tau)`
/// with `h_l = A_l Gamma(rho_l)` and
/// `Delta(tau) = sum_{l>=1} (-1)^l D(-l) tau^l / l!`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    pub poles: Vec<Pole>,
    pub a0: f64,
    pub h0: f64,
    /// `D(-1), ..., D(-L)`.
    pub delta_coeffs: Vec<f64>,
}

impl AsymptoticProfile {
    pub fn validate(&self) -> Result<()> {
        if self.poles.is_empty() {
            return Err(Error::Validation(
                "profile needs at least one positive pole".into(),
            ));
        }
        let mut prev = 0.0;
        for p in &self.poles {
            if !(p.rho > prev) || !p.rho.is_finite() {
                return Err(Error::Validation(format!(
                    "poles must be positive and strictly increasing, got {} after {prev}",
                    p.rho
                )));
            }
            if !(p.residue > 0.0) || !p.residue.is_finite() {
                return Err(Error::Validation(format!(
                    "residue at rho = {} must be positive, got {}",
                    p.rho, p.residue
                )));
            }
            prev = p.rho;
        }
        if !self.a0.is_finite()
            || !self.h0.is_finite()
            || self.delta_coeffs.iter().any(|d| !d.is_finite())
        {
            return Err(Error::Validation("profile constants must be finite".into()));
        }
        Ok(())
    }

    /// Number of stored `D(-l)` values.
    pub fn depth(&self) -> usize {
        self.delta_coeffs.len()
    }

    /// `h_l = A_l Gamma(rho_l)` for the pole at `index`.
    pub fn h(&self, index: usize) -> f64 {
        let p = &self.poles[index];
        p.residue * gamma_f64(p.rho)
    }

    /// `(rho_r, h_r)` of the rightmost pole.
    pub fn rightmost(&self) -> (f64, f64) {
        let r = self.poles.len() - 1;
        (self.poles[r].rho, self.h(r))
    }

    /// `K_2 = h_r rho_r (rho_r + 1)`, the constant in `B_n^2 ~ K_2 delta^{-rho_r-2}`.
    pub fn k2(&self) -> f64 {
        let (rho, h) = self.rightmost();
        h * rho * (rho + 1.0)
    }

    /// `K_3 = h_r rho_r (rho_r + 1)(rho_r + 2)`.
    pub fn k3(&self) -> f64 {
        let (rho, h) = self.rightmost();
        h * rho * (rho + 1.0) * (rho + 2.0)
    }

    /// `|D(-L-1)| delta^{L+1}/(L+1)!` when that coefficient is stored, else
    /// `None`.
    pub fn omitted_delta_term(&self, delta: f64, l: usize) -> Option<f64> {
        self.delta_coeffs.get(l).map(|d| {
            let mut term = d.abs();
            for i in 1..=l + 1 {
                term *= delta / i as f64;
            }
            term
        })
    }
}

/// A value of a Dirichlet series with its truncation error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletValue {
    pub s: Complex64,
    pub value: Complex64,
    pub abs_error: f64,
}

fn bernoulli_table() -> &'static [Rational] {
    static TABLE: OnceLock<Vec<Rational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        let mut b: Vec<Rational> = vec![Rational::from(1)];
        for m in 1..=BERNOULLI_MAX {
            let mut acc = Rational::new();
            let mut binom = rug::Integer::from(1);
            for (j, bj) in b.iter().enumerate() {
                acc += Rational::from(bj * &binom);
                binom *= (m + 1 - j) as u64;
                binom /= (j + 1) as u64;
            }
            b.push(-acc / (m as u64 + 1));
        }
        b
    })
}

/// Force the Bernoulli cache; call once at startup to keep later calls
/// allocation free.
pub fn init_tables() {
    let _ = bernoulli_table();
}

/// `B_m` with `B_1 = -1/2`, for `m <= 64`.
pub fn bernoulli(m: usize) -> Result<Rational> {
    bernoulli_table()
        .get(m)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("Bernoulli index {m} above {BERNOULLI_MAX}")))
}

/// `zeta(-l) = (-1)^l B_{l+1}/(l+1)` exactly.
pub fn zeta_neg_int(l: usize) -> Result<Rational> {
    let b = bernoulli(l + 1)?;
    let v = b / (l as u64 + 1);
    Ok(if l % 2 == 1 { -v } else { v })
}

/// `zeta'(0) = -log(2 pi)/2`.
pub fn zeta_prime_zero() -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Euler–Maclaurin evaluation of `zeta(s)`, valid for `s > -(2M - 1)` with
/// `M = 32` correction terms.
pub fn zeta_euler_maclaurin(s: &Float) -> Result<Float> {
    let prec = s.prec();
    if *s == 1 {
        return Err(Error::PoleAtOne);
    }
    let m_terms = BERNOULLI_MAX / 2;
    let n = 20 + (prec as usize * 5) / 8;
    let mut sum = Float::new(prec);
    for k in 1..n {
        let base = Float::with_val(prec, k);
        sum += base.pow(&Float::with_val(prec, -s));
    }
    let nf = Float::with_val(prec, n);
    let n_pow = Float::with_val(prec, (&nf).pow(&Float::with_val(prec, -s)));
    // N^{1-s}/(s-1) + N^{-s}/2
    sum += Float::with_val(prec, &n_pow * &nf) / Float::with_val(prec, s - 1u32);
    sum += Float::with_val(prec, &n_pow / 2u32);
    // B_{2j}/(2j)! s(s+1)...(s+2j-2) N^{-s-2j+1}
    let mut rising = s.clone();
    let mut npow = Float::with_val(prec, &n_pow / &nf);
    let mut fact = Float::with_val(prec, 2);
    let nsq = Float::with_val(prec, &nf * &nf);
    for j in 1..=m_terms {
        let b = Float::with_val(prec, &bernoulli(2 * j)?);
        sum += Float::with_val(prec, &b * &rising) * &npow / &fact;
        let r1 = Float::with_val(prec, s + (2 * j - 1) as u32);
        let r2 = Float::with_val(prec, s + (2 * j) as u32);
        rising *= r1 * r2;
        npow /= &nsq;
        fact *= ((2 * j + 1) * (2 * j + 2)) as u64;
    }
    Ok(sum)
}

/// `zeta(s)` at the precision of `s`.
pub fn zeta_mp(s: &Float) -> Result<Float> {
    let prec = s.prec();
    if *s == 1 {
        return Err(Error::PoleAtOne);
    }
    if s.is_integer() && *s <= 0 {
        let l = s.to_f64().abs() as usize;
        return Ok(Float::with_val(prec, &zeta_neg_int(l)?));
    }
    if *s > 0 {
        return zeta_euler_maclaurin(s);
    }
    // zeta(s) = 2^s pi^{s-1} sin(pi s/2) Gamma(1-s) zeta(1-s)
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let one_minus = Float::with_val(prec, 1u32 - s);
    let two_s = Float::with_val(prec, 2).pow(s);
    let pi_s = Float::with_val(prec, (&pi).pow(&Float::with_val(prec, s - 1u32)));
    let sine = (Float::with_val(prec, &pi * s) / 2u32).sin();
    let gamma = one_minus.clone().gamma();
    let reflected = zeta_euler_maclaurin(&one_minus)?;
    Ok(two_s * pi_s * sine * gamma * reflected)
}

/// `zeta(s)` for real `s != 1`.
pub fn zeta_real(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "zeta argument {s} is not finite"
        )));
    }
    Ok(zeta_mp(&Float::with_val(SPECIAL_BITS, s))?.to_f64())
}

pub(crate) fn gamma_f64(x: f64) -> f64 {
    Float::with_val(SPECIAL_BITS, x).gamma().to_f64()
}

fn zeta2() -> f64 {
    std::f64::consts::PI.powi(2) / 6.0
}

fn rat(r: Rational) -> f64 {
    r.to_f64()
}

/// `D(-l) = zeta(-l) zeta(1-l) g(-l)` for `l = 1..=depth`, where `D(s)` is
/// `g(s) zeta(s) zeta(s+1)`.
fn zeta_product_delta(depth: usize, g: impl Fn(u32) -> Rational) -> Vec<f64> {
    (1..=depth)
        .map(|l| {
            let z =
                zeta_neg_int(l).expect("within table") * zeta_neg_int(l - 1).expect("within table");
            rat(z * g(l as u32))
        })
        .collect()
}

fn pow_int(base: i64, exp: u32) -> Rational {
    Rational::from(rug::Integer::from(base).pow(exp))
}

/// Ordinary partitions: `D(s) = zeta(s) zeta(s+1)`.
///
/// `A_0` is stored as `zeta(0) = -1/2`, the value that makes `-A_0 log delta`
/// equal to `+log(delta)/2` in Hardy's expansion.
pub fn profile_partitions() -> AsymptoticProfile {
    AsymptoticProfile {
        poles: vec![Pole {
            rho: 1.0,
            residue: zeta2(),
        }],
        a0: -0.5,
        h0: zeta_prime_zero(),
        delta_coeffs: zeta_product_delta(DEFAULT_DELTA_TERMS, |_| Rational::from(1)),
    }
}

/// Partitions into distinct parts: `D(s) = (1 - 2^{-s}) zeta(s) zeta(s+1)`.
pub fn profile_distinct() -> AsymptoticProfile {
    AsymptoticProfile {
        poles: vec![Pole {
            rho: 1.0,
            residue: zeta2() / 2.0,
        }],
        a0: 0.0,
        h0: -0.5 * 2f64.ln(),
        delta_coeffs: zeta_product_delta(DEFAULT_DELTA_TERMS, |l| {
            Rational::from(1) - pow_int(2, l)
        }),
    }
}

/// Partitions into prime powers, `D(s) = -zeta'(s)/zeta(s) zeta(s+1)`: only
/// the main pole at `s = 1` is recorded.
pub fn profile_prime_powers() -> AsymptoticProfile {
    AsymptoticProfile {
        poles: vec![Pole {
            rho: 1.0,
            residue: zeta2(),
        }],
        a0: 0.0,
        h0: 0.0,
        delta_coeffs: Vec::new(),
    }
}

/// `S = (1+z)/(1-z^p)`: `D(s) = (1 - 2^{-s} + p^{-s}) zeta(s) zeta(s+1)`.
pub fn profile_ratio_kernel(p: u32) -> AsymptoticProfile {
    let pf = f64::from(p);
    AsymptoticProfile {
        poles: vec![Pole {
            rho: 1.0,
            residue: zeta2() * (0.5 + 1.0 / pf),
        }],
        a0: -0.5,
        h0: zeta_prime_zero() - 0.5 * (2.0 / pf).ln(),
        delta_coeffs: zeta_product_delta(DEFAULT_DELTA_TERMS, |l| {
            Rational::from(1) - pow_int(2, l) + pow_int(i64::from(p), l)
        }),
    }
}

/// `S = 1/(1-z)` with `b_k = [m | k]`: `D(s) = m^{-s} zeta(s) zeta(s+1)`.
pub fn profile_indicator(m: u64) -> AsymptoticProfile {
    let mf = m as f64;
    AsymptoticProfile {
        poles: vec![Pole {
            rho: 1.0,
            residue: zeta2() / mf,
        }],
        a0: -0.5,
        h0: zeta_prime_zero() + 0.5 * mf.ln(),
        delta_coeffs: zeta_product_delta(DEFAULT_DELTA_TERMS, |l| pow_int(m as i64, l)),
    }
}

/// `S = 1 + z^2`: `D(s) = 2^{-s}(1 - 2^{-s}) zeta(s) zeta(s+1)`.
pub fn profile_gcd2() -> AsymptoticProfile {
    AsymptoticProfile {
        poles: vec![Pole {
            rho: 1.0,
            residue: zeta2() / 4.0,
        }],
        a0: 0.0,
        h0: -0.5 * 2f64.ln(),
        delta_coeffs: zeta_product_delta(DEFAULT_DELTA_TERMS, |l| {
            pow_int(2, l) * (Rational::from(1) - pow_int(2, l))
        }),
    }
}

/// Partitions into primes have no meromorphic continuation past
/// `Re(s) = 0`, so no profile can be built.
pub fn profile_primes() -> Result<AsymptoticProfile> {
    Err(Error::UnsupportedForm(
        "partitions into primes: the prime zeta function has a natural boundary at Re(s) = 0"
            .into(),
    ))
}

/// `Delta(tau) = sum_{l=1}^{L} (-1)^l D(-l) tau^l / l!`.
pub fn delta_remainder(
    profile: &AsymptoticProfile,
    tau: Complex64,
    l_max: usize,
) -> Result<Complex64> {
    if profile.depth() < l_max {
        return Err(Error::MissingDeltaCoeffs {
            requested: l_max,
            available: profile.depth(),
        });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for (l, d) in profile.delta_coeffs.iter().take(l_max).enumerate() {
        power = power * tau / (l + 1) as f64;
        let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
        sum += power * (sign * d);
    }
    Ok(sum)
}

fn rightmost_rho(model: &WeightedModel) -> f64 {
    model.profile.as_ref().map_or(1.0, |p| p.rightmost().0)
}

/// `D(s)` as the truncated double sum `sum_{k,j<=K} b_k xi_j a_k^j (jk)^{-s}`.
///
/// The error bound models the dropped tails as `b_k <~ C k^{rho_r - 1}` and
/// `|xi_j| <~ C' / j`, with constants read off the last half of the window.
pub fn eval_d_direct(model: &WeightedModel, s: f64, k_max: usize) -> Result<DirichletValue> {
    if k_max == 0 {
        return Err(Error::InvalidArgument(
            "truncation K must be positive".into(),
        ));
    }
    let rho = rightmost_rho(model);
    if let Some(p) = &model.profile {
        if s <= p.rightmost().0 {
            return Err(Error::NotConvergent { s, rho });
        }
    }
    let ctx = PrecisionContext::new(SPECIAL_BITS, 1e-30)?;
    let xi = model.inner.log_coefficients(k_max, &ctx)?.to_f64();
    let mut value = 0.0;
    let mut abs_bk = 0.0;
    let mut abs_xi = 0.0;
    for (j, x) in xi.iter().enumerate() {
        abs_xi += x.abs() * ((j + 1) as f64).powf(-s);
    }
    for k in 1..=k_max as u64 {
        let b = model.weight(k);
        if b == 0.0 {
            continue;
        }
        let a = model.frequency(k);
        let ks = (k as f64).powf(-s);
        abs_bk += b * ks;
        let mut inner = 0.0;
        let mut apow = 1.0;
        for (j, x) in xi.iter().enumerate() {
            apow *= a;
            inner += x * apow * ((j + 1) as f64).powf(-s);
        }
        value += b * ks * inner;
    }
    let window = (k_max / 2 + 1)..=k_max;
    let kf = k_max as f64;
    let c_b = window
        .clone()
        .map(|k| model.weight(k as u64) / (k as f64).powf(rho - 1.0))
        .fold(0.0, f64::max);
    let c_xi = window
        .map(|j| xi[j - 1].abs() * j as f64)
        .fold(0.0, f64::max);
    let tail_k = if s > rho {
        c_b * kf.powf(rho - s) / (s - rho)
    } else {
        f64::INFINITY
    };
    let tail_j = if s > 0.0 {
        c_xi * kf.powf(-s) / s
    } else {
        f64::INFINITY
    };
    let abs_error = tail_k * abs_xi + tail_j * abs_bk + tail_k * tail_j;
    Ok(DirichletValue {
        s: Complex64::new(s, 0.0),
        value: Complex64::new(value, 0.0),
        abs_error,
    })
}

/// `D_b(s) = sum_k b_k k^{-s}` truncated at `K`, with the same tail model.
pub fn eval_db(model: &WeightedModel, s: f64, k_max: usize) -> Result<DirichletValue> {
    let rho = rightmost_rho(model);
    if s <= rho {
        return Err(Error::NotConvergent { s, rho });
    }
    let value: f64 = (1..=k_max as u64)
        .map(|k| model.weight(k) * (k as f64).powf(-s))
        .sum();
    let c_b = ((k_max / 2 + 1)..=k_max)
        .map(|k| model.weight(k as u64) / (k as f64).powf(rho - 1.0))
        .fold(0.0, f64::max);
    Ok(DirichletValue {
        s: Complex64::new(s, 0.0),
        value: Complex64::new(value, 0.0),
        abs_error: c_b * (k_max as f64).powf(rho - s) / (s - rho),
    })
}

/// `D_{(xi,a)}(s) = sum_j xi_j a^j j^{-s}` for a constant frequency `a`.
pub fn eval_dxi(model: &WeightedModel, s: f64, j_max: usize) -> Result<DirichletValue> {
    let SequenceSpec::Constant(a) = model.frequencies else {
        return Err(Error::UnsupportedForm(
            "D_(xi,a) needs constant frequencies".into(),
        ));
    };
    if s <= 0.0 {
        return Err(Error::NotConvergent { s, rho: 0.0 });
    }
    let ctx = PrecisionContext::new(SPECIAL_BITS, 1e-30)?;
    let xi = model.inner.log_coefficients(j_max, &ctx)?.to_f64();
    let mut value = 0.0;
    let mut apow = 1.0;
    for (j, x) in xi.iter().enumerate() {
        apow *= a;
        value += x * apow * ((j + 1) as f64).powf(-s);
    }
    let c_xi = ((j_max / 2 + 1)..=j_max)
        .map(|j| xi[j - 1].abs() * j as f64)
        .fold(0.0, f64::max);
    Ok(DirichletValue {
        s: Complex64::new(s, 0.0),
        value: Complex64::new(value, 0.0),
        abs_error: c_xi * (j_max as f64).powf(-s) / s,
    })
}

fn example3_epsilon(weights: &SequenceSpec) -> Result<f64> {
    match weights {
        SequenceSpec::Example3 { epsilon } => Ok(*epsilon),
        other => Err(Error::UnsupportedForm(format!(
            "Euler-Maclaurin evaluation needs the smooth k^(-s-1) log^(-eps) k form, got {other:?}"
        ))),
    }
}

/// `Q(s) = int_2^inf x^{-s-1} log^{-eps} x dx` for `s > 0`, by quadrature of
/// `int_{log 2}^inf e^{-s t} t^{-eps} dt`.
pub fn example3_integral(s: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::NotConvergent { s, rho: 0.0 });
    }
    let ln2 = 2f64.ln();
    let scale = (-s * ln2).exp() / s;
    let r = quadrature::integrate_half_line(
        |v| (-v).exp() * (ln2 + v / s).powf(-epsilon),
        1e-15,
        1e-13,
    )?;
    Ok((r.value * scale, r.abs_error * scale))
}

/// Continuation of `Q` through the incomplete-gamma form
/// `Q(s) = Gamma(1-eps) s^{eps-1} - log^{1-eps}2 sum_k (-s log 2)^k / (k! (1-eps+k))`,
/// on the principal branch of `s^{eps-1}`.
pub fn example3_integral_continued(s: f64, epsilon: f64) -> Result<Complex64> {
    if s == 0.0 {
        return Err(Error::InvalidArgument("Q(s) is singular at s = 0".into()));
    }
    let a = 1.0 - epsilon;
    let ln2 = 2f64.ln();
    let x = -s * ln2;
    let mut term = 1.0;
    let mut series = 0.0;
    for k in 0..200 {
        if k > 0 {
            term *= x / k as f64;
        }
        let t = term / (a + k as f64);
        series += t;
        if t.abs() < 1e-18 * series.abs() && k > 4 {
            break;
        }
    }
    let power = Complex64::new(s, 0.0).powf(epsilon - 1.0);
    Ok(power * gamma_f64(a) - Complex64::new(ln2.powf(a) * series, 0.0))
}

/// `D_b^{(1)}(s; eps) = sum_{k>=2} k^{-s-1} log^{-eps} k` for `s > -1` by
/// Euler–Maclaurin: the integral term, the boundary term `f(2)/2`, and the
/// periodic remainder integral summed over `terms` unit intervals.
pub fn euler_maclaurin_db(weights: &SequenceSpec, s: f64, terms: usize) -> Result<DirichletValue> {
    let epsilon = example3_epsilon(weights)?;
    if !(s > -1.0) {
        return Err(Error::NotConvergent { s, rho: -1.0 });
    }
    if terms < 3 {
        return Err(Error::InvalidArgument(
            "need at least 3 Euler-Maclaurin intervals".into(),
        ));
    }
    let f = |x: f64| x.powf(-s - 1.0) * x.ln().powf(-epsilon);
    let fprime = |x: f64| {
        let l = x.ln();
        -x.powf(-s - 2.0) * l.powf(-epsilon) * (s + 1.0 + epsilon / l)
    };
    let (integral, integral_err) = if s > 0.0 {
        example3_integral(s, epsilon).map(|(v, e)| (Complex64::new(v, 0.0), e))?
    } else {
        (example3_integral_continued(s, epsilon)?, 1e-15)
    };
    // f(2)/2 from the boundary term plus f(2)/2 from splitting off the
    // constant -1/2 of the periodic Bernoulli function
    let boundary = f(2.0);
    let m = terms as f64;
    let mut remainder = 0.0;
    let mut quad_err = 0.0;
    for i in 2..terms {
        let lo = i as f64;
        let (v, e) = quadrature::gk15(&mut |x| fprime(x) * (x - lo), lo, lo + 1.0);
        remainder += v;
        quad_err += e;
    }
    // int_M^inf f'(x)({x} - 1/2) dx is bounded by |f'(M)|/6
    remainder -= f(m) / 2.0;
    let abs_error = integral_err + quad_err + fprime(m).abs() / 6.0;
    Ok(DirichletValue {
        s: Complex64::new(s, 0.0),
        value: integral + boundary + remainder,
        abs_error,
    })
}
