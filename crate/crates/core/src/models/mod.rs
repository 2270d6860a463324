//! Model definitions for multiplicative generating functions
//! `f(z) = prod_k S(a_k z^k)^{b_k}`.
//!
//! A [`WeightedModel`] bundles the inner series `S`, the weight sequence
//! `b_k`, the frequency sequence `a_k` and, optionally, the analytic data of
//! its Dirichlet series ([`AsymptoticProfile`]). The built-in catalogue lives
//! in [`builtin`]; models can also be read from JSON files ([`load_model`]).

mod schema;

use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;

use crate::dirichlet::{self, AsymptoticProfile};
use crate::error::{Error, Result};
use crate::precision::PrecisionContext;
use crate::series::{self, LogCoefficients, PowerSeriesReal};

pub use schema::{load_model, model_from_json, model_to_json, save_model};

/// How the coefficients of an explicit inner series continue past the last
/// declared index `J`.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    /// `d_j = 0` for `j > J`.
    Zero,
    /// `d_j = d_{j - period}` for `j > J`.
    Periodic { period: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnerKind {
    /// `S(z) = 1/(1 - z)`.
    GeometricPole,
    /// `S(z) = 1 + z`.
    DistinctBinomial,
    /// `S(z) = (1 + z)/(1 - z^p)`.
    RatioKernel { p: u32 },
    /// Finitely many declared coefficients plus a tail rule.
    Explicit { coeffs: Vec<f64>, tail: TailRule },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityKind {
    Pole,
    Zero,
}

/// A pole or zero of `S` on the unit circle. `regular_part_modulus` is
/// `|L(z_0)|` in `S(z) ~ L(z)/(z - z_0)` for poles and `|S(z)/(z - z_0)^m|`
/// at `z_0` for zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityDescriptor {
    pub location: Complex64,
    pub order: u32,
    pub kind: SingularityKind,
    pub regular_part_modulus: f64,
}

impl SingularityDescriptor {
    fn validate(&self) -> Result<()> {
        if (self.location.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "singularity at {} is not on the unit circle",
                self.location
            )));
        }
        if self.order == 0 {
            return Err(Error::Validation(
                "singularity order must be positive".into(),
            ));
        }
        if self.kind == SingularityKind::Pole && self.order != 1 {
            return Err(Error::Validation(format!(
                "pole at {} must be simple, got order {}",
                self.location, self.order
            )));
        }
        if !(self.regular_part_modulus > 0.0) || !self.regular_part_modulus.is_finite() {
            return Err(Error::Validation(
                "singularity regular part modulus must be positive".into(),
            ));
        }
        Ok(())
    }

    /// True for a singularity away from `z = 1`.
    pub fn is_complex(&self) -> bool {
        (self.location - Complex64::new(1.0, 0.0)).norm() > 1e-12
    }
}

/// The inner series `S(z) = sum_j d_j z^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSeriesSpec {
    kind: InnerKind,
    singularities: Vec<SingularityDescriptor>,
}

impl InnerSeriesSpec {
    pub fn geometric_pole() -> Self {
        Self {
            kind: InnerKind::GeometricPole,
            singularities: vec![SingularityDescriptor {
                location: Complex64::new(1.0, 0.0),
                order: 1,
                kind: SingularityKind::Pole,
                regular_part_modulus: 1.0,
            }],
        }
    }

    pub fn distinct_binomial() -> Self {
        Self {
            kind: InnerKind::DistinctBinomial,
            singularities: vec![SingularityDescriptor {
                location: Complex64::new(-1.0, 0.0),
                order: 1,
                kind: SingularityKind::Zero,
                regular_part_modulus: 1.0,
            }],
        }
    }

    /// `(1 + z)/(1 - z^p)`. For even `p` the zero at `-1` cancels against a
    /// root of the denominator, so only the remaining roots of unity are
    /// declared as poles.
    pub fn ratio_kernel(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::Validation("ratio kernel needs p >= 1".into()));
        }
        let mut singularities = Vec::new();
        for r in 0..p {
            let theta = 2.0 * std::f64::consts::PI * f64::from(r) / f64::from(p);
            let omega = Complex64::from_polar(1.0, theta);
            if p.is_multiple_of(2) && 2 * r == p {
                continue;
            }
            // 1 - z^p ~ -p w^{p-1} (z - w) near a root w.
            singularities.push(SingularityDescriptor {
                location: omega,
                order: 1,
                kind: SingularityKind::Pole,
                regular_part_modulus: (Complex64::new(1.0, 0.0) + omega).norm() / f64::from(p),
            });
        }
        if p % 2 == 1 {
            singularities.push(SingularityDescriptor {
                location: Complex64::new(-1.0, 0.0),
                order: 1,
                kind: SingularityKind::Zero,
                regular_part_modulus: 0.5,
            });
        }
        Ok(Self {
            kind: InnerKind::RatioKernel { p },
            singularities,
        })
    }

    pub fn explicit(
        coeffs: Vec<f64>,
        tail: TailRule,
        singularities: Vec<SingularityDescriptor>,
    ) -> Result<Self> {
        let spec = Self {
            kind: InnerKind::Explicit { coeffs, tail },
            singularities,
        };
        spec.validate(1e-12)?;
        Ok(spec)
    }

    pub fn kind(&self) -> &InnerKind {
        &self.kind
    }

    pub fn singularities(&self) -> &[SingularityDescriptor] {
        &self.singularities
    }

    pub(crate) fn validate(&self, tol: f64) -> Result<()> {
        for s in &self.singularities {
            s.validate()?;
        }
        let InnerKind::Explicit { coeffs, tail } = &self.kind else {
            return Ok(());
        };
        if coeffs.is_empty() || coeffs[0] != 1.0 {
            return Err(Error::Validation(format!(
                "d_0 must equal 1, got {:?}",
                coeffs.first()
            )));
        }
        if let Some((j, d)) = coeffs
            .iter()
            .enumerate()
            .find(|(_, d)| !d.is_finite() || **d < 0.0)
        {
            return Err(Error::Validation(format!(
                "d_{j} = {d} must be finite and nonnegative"
            )));
        }
        if let TailRule::Periodic { period } = tail {
            if *period == 0 || *period >= coeffs.len() {
                return Err(Error::Validation(format!(
                    "periodic tail needs 1 <= period <= J, got period {period} with J = {}",
                    coeffs.len() - 1
                )));
            }
        }
        if self.l0(coeffs.len() + 2 * coeffs.len()).is_none() {
            return Err(Error::Validation(
                "S(z) = 1 is excluded: no positive d_j for j >= 1".into(),
            ));
        }
        for (j, d) in coeffs.iter().enumerate().skip(1) {
            if *d > 0.0 && d.powf(1.0 / j as f64) > 1.0 + tol {
                return Err(Error::Validation(format!(
                    "radius of convergence below 1: d_{j}^(1/{j}) = {} > 1",
                    d.powf(1.0 / j as f64)
                )));
            }
        }
        Ok(())
    }

    /// The coefficient `d_j`.
    pub fn coeff(&self, j: usize) -> f64 {
        match &self.kind {
            InnerKind::GeometricPole => 1.0,
            InnerKind::DistinctBinomial => {
                if j <= 1 {
                    1.0
                } else {
                    0.0
                }
            }
            InnerKind::RatioKernel { p } => {
                if j == 0 {
                    return 1.0;
                }
                let p = *p as usize;
                let mut d = 0.0;
                if j.is_multiple_of(p) {
                    d += 1.0;
                }
                if j % p == 1 % p {
                    d += 1.0;
                }
                d
            }
            InnerKind::Explicit { coeffs, tail } => {
                if j < coeffs.len() {
                    return coeffs[j];
                }
                match tail {
                    TailRule::Zero => 0.0,
                    TailRule::Periodic { period } => {
                        let last = coeffs.len() - 1;
                        let back = (j - last).div_ceil(*period) * period;
                        coeffs[j - back]
                    }
                }
            }
        }
    }

    pub fn coeffs(&self, degree: usize) -> Vec<f64> {
        (0..=degree).map(|j| self.coeff(j)).collect()
    }

    /// `l_0 = min{j >= 1 : d_j > 0}`, searched up to `jmax`.
    pub fn l0(&self, jmax: usize) -> Option<usize> {
        (1..=jmax).find(|&j| self.coeff(j) > 0.0)
    }

    /// Log-coefficients `xi_1..xi_J` of `log S`.
    pub fn log_coefficients(
        &self,
        degree: usize,
        ctx: &PrecisionContext,
    ) -> Result<LogCoefficients> {
        let prec = ctx.bits();
        let values = match &self.kind {
            InnerKind::GeometricPole => (1..=degree)
                .map(|j| Float::with_val(prec, 1) / j as u64)
                .collect(),
            InnerKind::DistinctBinomial => (1..=degree)
                .map(|j| {
                    let x = Float::with_val(prec, 1) / j as u64;
                    if j % 2 == 0 {
                        -x
                    } else {
                        x
                    }
                })
                .collect(),
            InnerKind::RatioKernel { p } => {
                let p = *p as usize;
                (1..=degree)
                    .map(|j| {
                        let mut x = Float::with_val(prec, 1) / j as u64;
                        if j % 2 == 0 {
                            x = -x;
                        }
                        if j % p == 0 {
                            x += Float::with_val(prec, 1) / (j / p) as u64;
                        }
                        x
                    })
                    .collect()
            }
            InnerKind::Explicit { coeffs, tail } => {
                return explicit_log_coefficients(coeffs, tail, degree, ctx);
            }
        };
        Ok(LogCoefficients::from_values(values))
    }

    /// `log S(w)` on the principal branch continued from `w = 0`, for the
    /// kernels with a closed form.
    pub fn closed_form_log(&self, w: Complex64) -> Option<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            InnerKind::GeometricPole => Some(-(one - w).ln()),
            InnerKind::DistinctBinomial => Some((one + w).ln()),
            InnerKind::RatioKernel { p } => Some((one + w).ln() - (one - w.powu(*p)).ln()),
            InnerKind::Explicit { .. } => None,
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(self.kind, InnerKind::Explicit { .. })
    }
}

fn explicit_log_coefficients(
    coeffs: &[f64],
    tail: &TailRule,
    degree: usize,
    ctx: &PrecisionContext,
) -> Result<LogCoefficients> {
    let prec = ctx.bits();
    match tail {
        TailRule::Zero => {
            let d: Vec<Float> = (0..=degree)
                .map(|j| Float::with_val(prec, coeffs.get(j).copied().unwrap_or(0.0)))
                .collect();
            series::log_series(&PowerSeriesReal::new(d)?)
        }
        TailRule::Periodic { period } => {
            // S(z)(1 - z^P) is a polynomial of degree <= J, and
            // -log(1 - z^P) contributes P/j at multiples of P.
            let p = *period;
            let spec = InnerSeriesSpec {
                kind: InnerKind::Explicit {
                    coeffs: coeffs.to_vec(),
                    tail: tail.clone(),
                },
                singularities: Vec::new(),
            };
            let t: Vec<Float> = (0..=degree)
                .map(|j| {
                    let back = if j >= p { spec.coeff(j - p) } else { 0.0 };
                    Float::with_val(prec, spec.coeff(j) - back)
                })
                .collect();
            let base = series::log_series(&PowerSeriesReal::new(t)?)?;
            let values = (1..=degree)
                .map(|j| {
                    let mut x = base.get(j).clone();
                    if j % p == 0 {
                        x += Float::with_val(prec, p as u64) / j as u64;
                    }
                    x
                })
                .collect();
            Ok(LogCoefficients::from_values(values))
        }
    }
}

/// A nonnegative sequence indexed by `k >= 1`, used for weights and
/// frequencies.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    Constant(f64),
    /// `c * k^beta`.
    PowerLaw {
        c: f64,
        beta: f64,
    },
    /// The von Mangoldt function.
    VonMangoldt,
    /// `(k log^eps k)^{-1}` for `k >= 2`, plus 1 when `4 | k`; zero at `k = 1`.
    Example3 {
        epsilon: f64,
    },
    /// 1 when `m | k`, else 0.
    IndicatorModulus(u64),
    /// `values[k-1]` for `k <= len`, `tail` afterwards.
    Table {
        values: Vec<f64>,
        tail: f64,
    },
}

impl SequenceSpec {
    pub fn example3(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Validation(format!(
                "example3 epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(SequenceSpec::Example3 { epsilon })
    }

    pub fn value(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        match self {
            SequenceSpec::Constant(v) => *v,
            SequenceSpec::PowerLaw { c, beta } => c * (k as f64).powf(*beta),
            SequenceSpec::VonMangoldt => von_mangoldt(k),
            SequenceSpec::Example3 { epsilon } => {
                if k < 2 {
                    return 0.0;
                }
                let kf = k as f64;
                let base = 1.0 / (kf * kf.ln().powf(*epsilon));
                if k.is_multiple_of(4) {
                    base + 1.0
                } else {
                    base
                }
            }
            SequenceSpec::IndicatorModulus(m) => {
                if k.is_multiple_of(*m) {
                    1.0
                } else {
                    0.0
                }
            }
            SequenceSpec::Table { values, tail } => {
                values.get(k as usize - 1).copied().unwrap_or(*tail)
            }
        }
    }

    /// The `k`-th value at `prec` bits.
    pub fn value_mp(&self, k: u64, prec: u32) -> Float {
        match self {
            SequenceSpec::Constant(v) => Float::with_val(prec, *v),
            SequenceSpec::PowerLaw { c, beta } => {
                let kf = Float::with_val(prec, k);
                kf.pow(Float::with_val(prec, *beta)) * Float::with_val(prec, *c)
            }
            SequenceSpec::VonMangoldt => match prime_power_base(k) {
                Some(p) => Float::with_val(prec, p).ln(),
                None => Float::new(prec),
            },
            SequenceSpec::Example3 { epsilon } => {
                if k < 2 {
                    return Float::new(prec);
                }
                let kf = Float::with_val(prec, k);
                let logk = kf.clone().ln();
                let denom = kf * logk.pow(Float::with_val(prec, *epsilon));
                let mut v = denom.recip();
                if k.is_multiple_of(4) {
                    v += 1;
                }
                v
            }
            SequenceSpec::IndicatorModulus(_) | SequenceSpec::Table { .. } => {
                Float::with_val(prec, self.value(k))
            }
        }
    }

    pub(crate) fn validate_weights(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Validation(format!("negative weight: {what}")));
        match self {
            SequenceSpec::Constant(v) if !(*v >= 0.0) || !v.is_finite() => {
                bad(format!("b_k = {v}"))
            }
            SequenceSpec::PowerLaw { c, beta } if !(*c >= 0.0) || !beta.is_finite() => {
                bad(format!("c = {c}, beta = {beta}"))
            }
            SequenceSpec::Example3 { epsilon } if !(*epsilon > 0.0 && *epsilon < 1.0) => {
                Err(Error::Validation(format!(
                    "example3 epsilon must lie in (0, 1), got {epsilon}"
                )))
            }
            SequenceSpec::IndicatorModulus(0) => Err(Error::Validation(
                "indicator modulus must be positive".into(),
            )),
            SequenceSpec::Table { values, tail } => {
                if let Some((i, v)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
                {
                    return bad(format!("b_{} = {v}", i + 1));
                }
                if !(*tail >= 0.0) || !tail.is_finite() {
                    return bad(format!("table tail {tail}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn validate_frequencies(&self) -> Result<()> {
        let in_range = |v: f64| v > 0.0 && v <= 1.0;
        let bad = |what: String| {
            Err(Error::Validation(format!(
                "frequency outside (0, 1]: {what}"
            )))
        };
        match self {
            SequenceSpec::Constant(v) if !in_range(*v) => bad(format!("a_k = {v}")),
            SequenceSpec::Constant(_) => Ok(()),
            SequenceSpec::PowerLaw { c, beta } if !in_range(*c) || !(*beta <= 0.0) => {
                bad(format!("c = {c}, beta = {beta}"))
            }
            SequenceSpec::PowerLaw { .. } => Ok(()),
            SequenceSpec::Table { values, tail } => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !in_range(**v)) {
                    return bad(format!("a_{} = {v}", i + 1));
                }
                if !in_range(*tail) {
                    return bad(format!("table tail {tail}"));
                }
                Ok(())
            }
            other => bad(format!("{other:?} vanishes for some k")),
        }
    }

    /// True when every value equals 1.
    pub(crate) fn is_unit(&self) -> bool {
        match self {
            SequenceSpec::Constant(v) => *v == 1.0,
            SequenceSpec::PowerLaw { c, beta } => *c == 1.0 && *beta == 0.0,
            SequenceSpec::Table { values, tail } => {
                *tail == 1.0 && values.iter().all(|v| *v == 1.0)
            }
            _ => false,
        }
    }
}

/// `log p` when `k = p^r` for a prime `p`, else 0.
pub fn von_mangoldt(k: u64) -> f64 {
    prime_power_base(k).map_or(0.0, |p| (p as f64).ln())
}

/// The prime `p` with `k = p^r`, found by trial division.
pub fn prime_power_base(k: u64) -> Option<u64> {
    if k < 2 {
        return None;
    }
    let mut p = 0;
    let mut d = 2;
    let mut m = k;
    while d * d <= m {
        if m.is_multiple_of(d) {
            p = d;
            break;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if p == 0 {
        return Some(k);
    }
    while m.is_multiple_of(p) {
        m /= p;
    }
    (m == 1).then_some(p)
}

/// A complete multiplicative model.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedModel {
    pub name: String,
    pub inner: InnerSeriesSpec,
    pub weights: SequenceSpec,
    pub frequencies: SequenceSpec,
    pub profile: Option<AsymptoticProfile>,
}

impl WeightedModel {
    pub fn new(
        name: impl Into<String>,
        inner: InnerSeriesSpec,
        weights: SequenceSpec,
        frequencies: SequenceSpec,
        profile: Option<AsymptoticProfile>,
    ) -> Result<Self> {
        let model = Self {
            name: name.into(),
            inner,
            weights,
            frequencies,
            profile,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.inner.validate(1e-12)?;
        self.weights.validate_weights()?;
        self.frequencies.validate_frequencies()?;
        if let Some(p) = &self.profile {
            p.validate()?;
        }
        Ok(())
    }

    pub fn weight(&self, k: u64) -> f64 {
        self.weights.value(k)
    }

    pub fn frequency(&self, k: u64) -> f64 {
        self.frequencies.value(k)
    }

    pub fn profile(&self) -> Result<&AsymptoticProfile> {
        self.profile
            .as_ref()
            .ok_or_else(|| Error::MissingProfile(self.name.clone()))
    }

    /// True when `b_k` is integral, `a_k = 1` and `d_j` integral: the
    /// coefficients `c_n` are then counts.
    pub fn is_integer_model(&self, upto: u64) -> bool {
        self.frequencies.is_unit()
            && (1..=upto).all(|k| self.weight(k).fract() == 0.0)
            && (0..=upto as usize).all(|j| self.inner.coeff(j).fract() == 0.0)
    }
}

/// Names accepted by [`builtin`]; `example3` and `ratio-kernel` take a
/// parameter in parentheses.
pub const BUILTIN_NAMES: &[&str] = &[
    "partitions",
    "distinct",
    "prime-powers",
    "example3(eps)",
    "ratio-kernel(p)",
    "q4-indicator",
    "gcd2",
    "empty-weights",
];

/// Look up a catalogue model by name.
pub fn builtin(name: &str) -> Result<WeightedModel> {
    let unknown = || Error::UnknownModel(name.to_string());
    let (base, arg) = match name.split_once('(') {
        Some((base, rest)) => {
            let arg = rest.strip_suffix(')').ok_or_else(unknown)?;
            (base.trim(), Some(arg.trim()))
        }
        None => (name.trim(), None),
    };
    let ones = || SequenceSpec::Constant(1.0);
    let model = match (base, arg) {
        ("partitions", None) => WeightedModel::new(
            "partitions",
            InnerSeriesSpec::geometric_pole(),
            ones(),
            ones(),
            Some(dirichlet::profile_partitions()),
        )?,
        ("distinct", None) => WeightedModel::new(
            "distinct",
            InnerSeriesSpec::distinct_binomial(),
            ones(),
            ones(),
            Some(dirichlet::profile_distinct()),
        )?,
        ("prime-powers", None) => WeightedModel::new(
            "prime-powers",
            InnerSeriesSpec::geometric_pole(),
            SequenceSpec::VonMangoldt,
            ones(),
            Some(dirichlet::profile_prime_powers()),
        )?,
        ("example3", arg) => {
            let eps = match arg {
                Some(a) => a.parse::<f64>().map_err(|_| unknown())?,
                None => 0.5,
            };
            WeightedModel::new(
                format!("example3({eps})"),
                InnerSeriesSpec::geometric_pole(),
                SequenceSpec::example3(eps)?,
                ones(),
                None,
            )?
        }
        ("ratio-kernel", Some(a)) => {
            let p: u32 = a.parse().map_err(|_| unknown())?;
            WeightedModel::new(
                format!("ratio-kernel({p})"),
                InnerSeriesSpec::ratio_kernel(p)?,
                ones(),
                ones(),
                Some(dirichlet::profile_ratio_kernel(p)),
            )?
        }
        ("q4-indicator", None) => WeightedModel::new(
            "q4-indicator",
            InnerSeriesSpec::geometric_pole(),
            SequenceSpec::IndicatorModulus(4),
            ones(),
            Some(dirichlet::profile_indicator(4)),
        )?,
        ("gcd2", None) => WeightedModel::new(
            "gcd2",
            InnerSeriesSpec::explicit(
                vec![1.0, 0.0, 1.0],
                TailRule::Zero,
                vec![
                    SingularityDescriptor {
                        location: Complex64::new(0.0, 1.0),
                        order: 1,
                        kind: SingularityKind::Zero,
                        regular_part_modulus: 2.0,
                    },
                    SingularityDescriptor {
                        location: Complex64::new(0.0, -1.0),
                        order: 1,
                        kind: SingularityKind::Zero,
                        regular_part_modulus: 2.0,
                    },
                ],
            )?,
            ones(),
            ones(),
            Some(dirichlet::profile_gcd2()),
        )?,
        ("primes", None) => return Err(dirichlet::profile_primes().unwrap_err()),
        ("empty-weights", None) => WeightedModel::new(
            "empty-weights",
            InnerSeriesSpec::geometric_pole(),
            SequenceSpec::Constant(0.0),
            ones(),
            None,
        )?,
        _ => return Err(unknown()),
    };
    Ok(model)
}
