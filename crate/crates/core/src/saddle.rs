//! Khintchine's tilt equation `sum_k k Lambda_k e^{-k delta} = n` and the
//! moments of the tilted ensemble `Z_n = sum_k Y_k`.
//!
//! All sums here run in `f64`: the terms are smooth, mostly positive and the
//! targets are relative accuracies around `1e-10`, while the truncation
//! depths reach several hundred thousand.

use serde::Serialize;

use crate::dirichlet::AsymptoticProfile;
use crate::error::{Error, Result};
use crate::models::WeightedModel;
use crate::precision::PrecisionContext;
use crate::series;

/// `c` in `K = ceil(c / delta * log(1/tol))`.
pub const DEPTH_FACTOR: f64 = 2.0;
/// Largest `Lambda` table the solver will build.
pub const MAX_DEPTH: usize = 20_000_000;
/// Residual contract of the solver, relative to `n`.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Allowed truncation tail of a moment sum, relative to the moment.
pub const MOMENT_TAIL_REL: f64 = 1e-12;
const MAX_NEWTON: usize = 30;
/// `e^{-80}` is far below every tolerance used with the per-factor paths.
const FACTOR_CUTOFF: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    Bisection,
    NewtonPolished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub n: u64,
    pub delta: f64,
    /// `sum_{k<=K} k Lambda_k e^{-k delta} - n`.
    pub residual: f64,
    pub iterations: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub method: SolveMethod,
}

/// Cumulants of the tilted ensemble: mean, variance `B_n^2` and third
/// cumulant `T_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedMoments {
    pub mean: f64,
    pub variance: f64,
    pub third: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

/// `K = ceil(2/delta * log(1/tol))`.
pub fn truncation_depth(delta: f64, tol: f64) -> usize {
    (DEPTH_FACTOR / delta * (1.0 / tol).ln()).ceil().max(1.0) as usize
}

/// `Lambda_1..Lambda_K` in `f64` together with the growth exponent used for
/// tail bounds (`|Lambda_k| <= C k^{rho+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    values: Vec<f64>,
    rho: f64,
}

/// A truncated sum with a bound on the dropped tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSum {
    pub value: f64,
    pub tail: f64,
}

fn growth_exponent(profile: Option<&AsymptoticProfile>) -> f64 {
    profile.map_or(1.0, |p| p.rightmost().0)
}

impl LambdaTable {
    pub fn from_model(model: &WeightedModel, k: usize, ctx: &PrecisionContext) -> Result<Self> {
        Ok(Self {
            values: series::lambda_f64(model, k, ctx)?,
            rho: growth_exponent(model.profile.as_ref()),
        })
    }

    pub fn from_values(values: Vec<f64>, rho: f64) -> Self {
        Self { values, rho }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_positive_mass(&self) -> bool {
        self.values.iter().any(|&v| v > 0.0)
    }

    /// `sum_{m<=K} m^p Lambda_m e^{-m delta}` with a tail bound from
    /// `|Lambda_m| <= C m^{rho+1}`, `C` read off the top half of the window.
    pub fn power_sum(&self, delta: f64, k: usize, p: i32) -> Result<TruncatedSum> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if k == 0 || k > self.values.len() {
            return Err(Error::InvalidArgument(format!(
                "truncation {k} outside the table of {} values",
                self.values.len()
            )));
        }
        let step = (-delta).exp();
        let mut x = 1.0;
        let mut value = 0.0;
        for (i, lam) in self.values[..k].iter().enumerate() {
            let m = i + 1;
            // reseed the running power now and then to stop error build-up
            x = if m % 256 == 0 {
                (-(m as f64) * delta).exp()
            } else {
                x * step
            };
            if *lam != 0.0 {
                value += (m as f64).powi(p) * lam * x;
            }
        }
        Ok(TruncatedSum {
            value,
            tail: self.tail_bound(delta, k, p),
        })
    }

    fn tail_bound(&self, delta: f64, k: usize, p: i32) -> f64 {
        let q = f64::from(p) + self.rho + 1.0;
        let c = ((k / 2 + 1)..=k)
            .map(|m| self.values[m - 1].abs() / (m as f64).powf(self.rho + 1.0))
            .fold(0.0, f64::max);
        if c == 0.0 {
            return 0.0;
        }
        let kf = k as f64;
        let slope = delta - q / kf;
        if slope <= 0.0 {
            return f64::INFINITY;
        }
        // terms decrease past the mode q/delta, so the integral bounds the sum
        c * (q * kf.ln() - kf * delta - slope.ln()).exp()
    }
}

/// Left side of Khintchine's equation, failing when the truncation tail may
/// exceed `allowed`.
pub fn khintchine_lhs(table: &LambdaTable, delta: f64, k: usize, allowed: f64) -> Result<f64> {
    let s = table.power_sum(delta, k, 1)?;
    if s.tail > allowed {
        return Err(Error::TruncationTooShallow {
            k,
            tail: s.tail,
            allowed,
        });
    }
    Ok(s.value)
}

/// `delta_n ~ (rho_r h_r)^{1/(rho_r+1)} n^{-1/(rho_r+1)}`.
pub fn asymptotic_delta(profile: &AsymptoticProfile, n: u64) -> f64 {
    let (rho, h) = profile.rightmost();
    (rho * h).powf(1.0 / (rho + 1.0)) * (n as f64).powf(-1.0 / (rho + 1.0))
}

struct Solver<'a> {
    model: &'a WeightedModel,
    ctx: &'a PrecisionContext,
    table: LambdaTable,
    depth: Option<usize>,
}

impl Solver<'_> {
    fn depth_at(&self, delta: f64) -> usize {
        self.depth
            .unwrap_or_else(|| truncation_depth(delta, self.ctx.tol()))
    }

    fn ensure(&mut self, k: usize) -> Result<()> {
        if k > MAX_DEPTH {
            return Err(Error::TruncationTooShallow {
                k: MAX_DEPTH,
                tail: f64::INFINITY,
                allowed: 0.0,
            });
        }
        if k > self.table.len() {
            let size = k.max(2 * self.table.len()).min(MAX_DEPTH);
            self.table = LambdaTable::from_model(self.model, size, self.ctx)?;
        }
        Ok(())
    }

    /// `(F(delta), F'(delta), K)` with `F` the truncated Khintchine sum.
    fn eval(&mut self, delta: f64) -> Result<(f64, f64, usize)> {
        let k = self.depth_at(delta);
        self.ensure(k)?;
        let f = self.table.power_sum(delta, k, 1)?.value;
        let df = -self.table.power_sum(delta, k, 2)?.value;
        Ok((f, df, k))
    }
}

pub fn solve_khintchine(
    model: &WeightedModel,
    n: u64,
    ctx: &PrecisionContext,
) -> Result<SaddleSolution> {
    solve_khintchine_with_depth(model, n, ctx, None)
}

/// As [`solve_khintchine`], optionally pinning the truncation depth `K`
/// instead of deriving it from `delta` and `tol`.
pub fn solve_khintchine_with_depth(
    model: &WeightedModel,
    n: u64,
    ctx: &PrecisionContext,
    depth: Option<usize>,
) -> Result<SaddleSolution> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Khintchine's equation needs n >= 1".into(),
        ));
    }
    if depth == Some(0) {
        return Err(Error::InvalidArgument(
            "truncation depth must be positive".into(),
        ));
    }
    let target = n as f64;
    let guess = model.profile.as_ref().map(|p| asymptotic_delta(p, n));
    let mut solver = Solver {
        model,
        ctx,
        table: LambdaTable::from_model(model, 64, ctx)?,
        depth,
    };
    let start = guess.unwrap_or(1.0);
    solver.ensure(solver.depth_at(start).max(64))?;
    if !solver.table.has_positive_mass() {
        return Err(Error::NoPositiveMass);
    }

    let (mut lo, mut hi) = match guess {
        Some(g) => (g / 8.0, g * 8.0),
        None => (start, start),
    };
    let mut iterations = 0;
    // widen until F(lo) > n > F(hi); F decreases in delta
    while solver.eval(lo)?.0 <= target {
        lo /= 2.0;
        iterations += 1;
        if lo < 1e-12 {
            return Err(match depth {
                // a pinned depth caps the sum below n
                Some(k) => Error::TruncationTooShallow {
                    k,
                    tail: f64::INFINITY,
                    allowed: RESIDUAL_TOL * target,
                },
                None => Error::NoPositiveMass,
            });
        }
    }
    while solver.eval(hi)?.0 >= target {
        hi *= 2.0;
        iterations += 1;
        if hi > 50.0 * 1024.0 {
            return Err(Error::InvalidArgument(format!(
                "no sign change of the Khintchine sum for n = {n}"
            )));
        }
    }

    // geometric bisection down to a narrow bracket
    while hi / lo > 1.0 + 1e-4 {
        let mid = (lo * hi).sqrt();
        if solver.eval(mid)?.0 > target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let mut delta = (lo * hi).sqrt();
    let mut method = SolveMethod::NewtonPolished;
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let (f, df, _) = solver.eval(delta)?;
        iterations += 1;
        let res = f - target;
        if res.abs() <= 1e-12 * target {
            converged = true;
            break;
        }
        if res > 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
        let next = delta - res / df;
        let next = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if (next - delta).abs() <= 1e-15 * delta {
            delta = next;
            converged = true;
            break;
        }
        delta = next;
    }
    if !converged {
        method = SolveMethod::Bisection;
        for _ in 0..200 {
            let (f, _, _) = solver.eval(delta)?;
            iterations += 1;
            if (f - target).abs() <= RESIDUAL_TOL * target || hi - lo <= 1e-16 * hi {
                break;
            }
            if f > target {
                lo = delta;
            } else {
                hi = delta;
            }
            delta = 0.5 * (lo + hi);
        }
    }

    let k = solver.depth_at(delta);
    solver.ensure(k)?;
    let f = khintchine_lhs(&solver.table, delta, k, ctx.tol() * target)?;
    Ok(SaddleSolution {
        n,
        delta,
        residual: f - target,
        iterations,
        k,
        method,
    })
}

fn checked(sum: TruncatedSum, k: usize) -> Result<f64> {
    let allowed = MOMENT_TAIL_REL * sum.value.abs();
    if sum.tail > allowed {
        return Err(Error::TruncationTooShallow {
            k,
            tail: sum.tail,
            allowed,
        });
    }
    Ok(sum.value)
}

/// Cumulants from derivatives of `log f(e^{-delta}) = sum Lambda_k e^{-k delta}`.
pub fn tilted_moments(
    model: &WeightedModel,
    delta: f64,
    k: usize,
    ctx: &PrecisionContext,
) -> Result<TiltedMoments> {
    let table = LambdaTable::from_model(model, k, ctx)?;
    moments_from_table(&table, delta, k)
}

pub fn moments_from_table(table: &LambdaTable, delta: f64, k: usize) -> Result<TiltedMoments> {
    Ok(TiltedMoments {
        mean: checked(table.power_sum(delta, k, 1)?, k)?,
        variance: checked(table.power_sum(delta, k, 2)?, k)?,
        third: checked(table.power_sum(delta, k, 3)?, k)?,
        delta,
        k,
    })
}

fn check_delta(delta: f64, k_max: usize) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("need at least one factor".into()));
    }
    Ok(())
}

/// Cumulants of `Z = sum_{k<=K} Y_k` factor by factor: `Y_k` contributes
/// `b_k sum_t (kt)^p xi_t a_k^t e^{-kt delta}` to the `p`-th cumulant.
///
/// With `K = n` this is the ensemble of the `n`-truncated product `f_n`.
pub fn truncated_moments(
    model: &WeightedModel,
    delta: f64,
    k_max: usize,
    ctx: &PrecisionContext,
) -> Result<TiltedMoments> {
    check_delta(delta, k_max)?;
    let t_max = (FACTOR_CUTOFF / delta).ceil() as usize + 4;
    let xi = model.inner.log_coefficients(t_max, ctx)?.to_f64();
    let (mut mean, mut variance, mut third) = (0.0, 0.0, 0.0);
    for k in 1..=k_max {
        let b = model.weight(k as u64);
        if b == 0.0 {
            continue;
        }
        let kf = k as f64;
        let x = model.frequency(k as u64) * (-kf * delta).exp();
        let terms = ((FACTOR_CUTOFF / (kf * delta)).ceil() as usize + 4).min(t_max);
        let (mut m1, mut m2, mut m3) = (0.0, 0.0, 0.0);
        let mut xt = 1.0;
        for (i, xi_t) in xi[..terms].iter().enumerate() {
            xt *= x;
            let kt = kf * (i + 1) as f64;
            let w = xi_t * xt;
            m1 += kt * w;
            m2 += kt * kt * w;
            m3 += kt * kt * kt * w;
        }
        mean += b * m1;
        variance += b * m2;
        third += b * m3;
    }
    Ok(TiltedMoments {
        mean,
        variance,
        third,
        delta,
        k: k_max,
    })
}

/// `[w^j] S(a w)^b` for `j <= jmax`, by the power recurrence
/// `j g_j = sum_{i=1}^{j} ((b+1) i - j) s_i g_{j-i}` with `s_i = d_i a^i`.
pub fn factor_coefficients(d: &[f64], a: f64, b: f64, jmax: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(jmax + 1);
    let mut ai = 1.0;
    for j in 0..=jmax {
        s.push(d.get(j).copied().unwrap_or(0.0) * ai);
        ai *= a;
    }
    let support: Vec<usize> = (1..=jmax).filter(|&i| s[i] != 0.0).collect();
    let mut g = vec![0.0; jmax + 1];
    g[0] = 1.0;
    for j in 1..=jmax {
        let mut acc = 0.0;
        for &i in &support {
            if i > j {
                break;
            }
            acc += ((b + 1.0) * i as f64 - j as f64) * s[i] * g[j - i];
        }
        g[j] = acc / j as f64;
    }
    g
}

/// Cumulants of `Z = sum_{k<=K} Y_k` from the explicit laws
/// `P(Y_k = jk) = g_k(j) e^{-delta k j} / S_k(e^{-delta})`.
///
/// Independent of the `xi` and `Lambda` machinery; cost grows like
/// `delta^{-2}` for dense `S`, so it is meant for validation.
pub fn y_path_moments(model: &WeightedModel, delta: f64, k_max: usize) -> Result<TiltedMoments> {
    check_delta(delta, k_max)?;
    let jmax_all = (FACTOR_CUTOFF / delta).ceil() as usize + 4;
    let d = model.inner.coeffs(jmax_all);
    let (mut mean, mut variance, mut third) = (0.0, 0.0, 0.0);
    for k in 1..=k_max {
        let b = model.weight(k as u64);
        if b == 0.0 {
            continue;
        }
        let kf = k as f64;
        let jmax = ((FACTOR_CUTOFF / (kf * delta)).ceil() as usize + 4).min(jmax_all);
        let g = factor_coefficients(&d, model.frequency(k as u64), b, jmax);
        let x = (-kf * delta).exp();
        let mut mass = Vec::with_capacity(jmax + 1);
        let mut xj = 1.0;
        for gj in &g {
            mass.push(gj * xj);
            xj *= x;
        }
        let total: f64 = mass.iter().sum();
        let m: f64 = mass
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * p)
            .sum::<f64>()
            / total;
        let (mut c2, mut c3) = (0.0, 0.0);
        for (j, p) in mass.iter().enumerate() {
            let dev = j as f64 - m;
            c2 += dev * dev * p;
            c3 += dev * dev * dev * p;
        }
        mean += kf * m;
        variance += kf * kf * c2 / total;
        third += kf * kf * kf * c3 / total;
    }
    Ok(TiltedMoments {
        mean,
        variance,
        third,
        delta,
        k: k_max,
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
    fn lhs_trivial_sequences() {
        let zero = LambdaTable::from_values(vec![0.0; 10], 1.0);
        assert_eq!(khintchine_lhs(&zero, 0.3, 10, 1e-30).unwrap(), 0.0);
        let single = LambdaTable::from_values(vec![1.0, 0.0, 0.0, 0.0], 1.0);
        let v = khintchine_lhs(&single, 0.5, 4, 1e-30).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn lhs_leading_term_partitions() {
        let m = builtin("partitions").unwrap();
        let table = LambdaTable::from_model(&m, 4000, &ctx()).unwrap();
        let v = table.power_sum(0.1, 2000, 1).unwrap().value;
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        // leading term alone is 3.01% high at delta = 0.1; the next two terms
        // of -d/d delta of the Hardy expansion close the gap
        assert!((v / (z2 / 0.01) - 1.0).abs() < 0.031, "{v}");
        let expansion = z2 / 0.01 - 0.5 / 0.1 + 1.0 / 24.0;
        assert!((v - expansion).abs() < 1e-10 * v, "{v} vs {expansion}");
        let reference = table.power_sum(0.1, 4000, 1).unwrap().value;
        assert!((v - reference).abs() < 1e-9 * reference);
    }

    #[test]
    fn shallow_truncation_is_reported() {
        let m = builtin("partitions").unwrap();
        let table = LambdaTable::from_model(&m, 50, &ctx()).unwrap();
        assert!(matches!(
            khintchine_lhs(&table, 0.1, 50, 1e-6),
            Err(Error::TruncationTooShallow { k: 50, .. })
        ));
    }

    #[test]
    fn asymptotic_delta_formula() {
        let p = crate::dirichlet::AsymptoticProfile {
            poles: vec![crate::dirichlet::Pole {
                rho: 2.0,
                residue: 1.0,
            }],
            a0: 0.0,
            h0: 0.0,
            delta_coeffs: vec![],
        };
        // h = A Gamma(2) = 1
        assert!((asymptotic_delta(&p, 64) - 2f64.powf(1.0 / 3.0) / 4.0).abs() < 1e-15);
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let part = crate::dirichlet::profile_partitions();
        assert!((asymptotic_delta(&part, 100) - (z2 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn solve_partitions_ten_thousand() {
        let m = builtin("partitions").unwrap();
        let sol = solve_khintchine(&m, 10_000, &ctx()).unwrap();
        assert!(sol.residual.abs() <= 1e-9 * 1e4);
        let asym = asymptotic_delta(m.profile().unwrap(), 10_000);
        assert!(
            (sol.delta / asym - 1.0).abs() < 0.02,
            "{} vs {asym}",
            sol.delta
        );
    }

    #[test]
    fn delta_decreases_with_n() {
        let m = builtin("partitions").unwrap();
        let mut prev = f64::INFINITY;
        for n in 10..=100 {
            let d = solve_khintchine(&m, n, &ctx()).unwrap().delta;
            assert!(d < prev, "n = {n}");
            prev = d;
        }
    }

    #[test]
    fn n_times_delta_grows() {
        let m = builtin("partitions").unwrap();
        let v: Vec<f64> = [100u64, 1000, 10_000]
            .iter()
            .map(|&n| n as f64 * solve_khintchine(&m, n, &ctx()).unwrap().delta)
            .collect();
        assert!(v[0] < v[1] && v[1] < v[2]);
    }

    #[test]
    fn solver_without_profile_and_small_n() {
        let m = builtin("example3").unwrap();
        let sol = solve_khintchine(&m, 500, &ctx()).unwrap();
        assert!(sol.residual.abs() <= 1e-9 * 500.0);
        let m = builtin("partitions").unwrap();
        let sol = solve_khintchine(&m, 1, &ctx()).unwrap();
        assert!(sol.residual.abs() <= 1e-9);
        assert!(sol.delta > 0.0);
    }

    #[test]
    fn empty_weights_have_no_mass() {
        let m = builtin("empty-weights").unwrap();
        assert_eq!(solve_khintchine(&m, 10, &ctx()), Err(Error::NoPositiveMass));
    }

    #[test]
    fn moments_leading_terms() {
        let m = builtin("partitions").unwrap();
        let delta = 0.05;
        let k = truncation_depth(delta, 1e-30);
        let mo = tilted_moments(&m, delta, k, &ctx()).unwrap();
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let r = mo.variance / (2.0 * z2 * delta.powi(-3));
        assert!(r > 0.9 && r < 1.1, "{r}");
        assert!(mo.third > 0.0);
    }

    #[test]
    fn single_term_both_paths() {
        // S = 1 + z with b_1 = 1 only: Lambda_k = (-1)^{k-1}/k, Y_1 is Bernoulli(p)
        let mut m = builtin("distinct").unwrap();
        m.weights = crate::models::SequenceSpec::Table {
            values: vec![1.0],
            tail: 0.0,
        };
        let delta: f64 = 0.7;
        let p = (-delta).exp() / (1.0 + (-delta).exp());
        let y = y_path_moments(&m, delta, 1).unwrap();
        assert!((y.mean - p).abs() < 1e-15);
        assert!((y.variance - p * (1.0 - p)).abs() < 1e-15);
        let l = tilted_moments(&m, delta, 400, &ctx()).unwrap();
        assert!((l.mean - p).abs() < 1e-13);
        assert!((l.variance - p * (1.0 - p)).abs() < 1e-13);
        let t = truncated_moments(&m, delta, 1, &ctx()).unwrap();
        assert!((t.variance - p * (1.0 - p)).abs() < 1e-13);
    }

    #[test]
    fn moments_vanish_for_large_delta() {
        let m = builtin("partitions").unwrap();
        let mo = tilted_moments(&m, 60.0, 10, &ctx()).unwrap();
        assert!(mo.mean < 1e-25 && mo.variance < 1e-25 && mo.third < 1e-25);
    }

    #[test]
    fn factor_coefficient_recurrence() {
        // (1 - z)^{-2} = sum (j+1) z^j
        let g = factor_coefficients(&[1.0; 8], 1.0, 2.0, 7);
        for (j, v) in g.iter().enumerate() {
            assert!((v - (j + 1) as f64).abs() < 1e-12);
        }
        // (1 + z)^{1/2}: 1, 1/2, -1/8
        let g = factor_coefficients(&[1.0, 1.0], 1.0, 0.5, 2);
        assert_eq!(g, vec![1.0, 0.5, -0.125]);
    }
}
