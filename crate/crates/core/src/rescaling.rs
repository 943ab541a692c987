//! Initial-data families, their scaling functions `f(k)`, and the rescaled
//! views `u^k(x, t) = f(k) u(kx, k^2 t)` of a solution.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Tail class of an initial datum, named after the weight in its defining limit:
/// e.g. `PowerLawOverLog` means `|x|^α / log|x| · u0(x) → A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    PowerLaw,
    PowerLawOverLog,
    PowerLawTimesLog,
    CriticalPower,
    CriticalPowerOverLog,
    CriticalPowerTimesLog,
    Integrable,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 7] = [
        FamilyKind::PowerLaw,
        FamilyKind::PowerLawOverLog,
        FamilyKind::PowerLawTimesLog,
        FamilyKind::CriticalPower,
        FamilyKind::CriticalPowerOverLog,
        FamilyKind::CriticalPowerTimesLog,
        FamilyKind::Integrable,
    ];

    fn has_free_alpha(self) -> bool {
        matches!(self, FamilyKind::PowerLaw | FamilyKind::PowerLawOverLog | FamilyKind::PowerLawTimesLog)
    }

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::PowerLaw => "power_law",
            FamilyKind::PowerLawOverLog => "power_law_over_log",
            FamilyKind::PowerLawTimesLog => "power_law_times_log",
            FamilyKind::CriticalPower => "critical_power",
            FamilyKind::CriticalPowerOverLog => "critical_power_over_log",
            FamilyKind::CriticalPowerTimesLog => "critical_power_times_log",
            FamilyKind::Integrable => "integrable",
        }
    }
}

/// Configuration form: `{kind, A, alpha, N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub dimension: usize,
}

/// An initial-data family with amplitude `A`, tail exponent `α` and dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyConfig", into = "FamilyConfig")]
pub struct ScalingFamily {
    kind: FamilyKind,
    amplitude: f64,
    alpha: f64,
    dimension: usize,
}

impl TryFrom<FamilyConfig> for ScalingFamily {
    type Error = Error;
    fn try_from(c: FamilyConfig) -> Result<Self> {
        ScalingFamily::new(c.kind, c.amplitude, c.alpha, c.dimension)
    }
}

impl From<ScalingFamily> for FamilyConfig {
    fn from(f: ScalingFamily) -> Self {
        FamilyConfig {
            kind: f.kind,
            amplitude: f.amplitude,
            alpha: f.kind.has_free_alpha().then_some(f.alpha),
            dimension: f.dimension,
        }
    }
}

/// Width of the cosine ramp of the smoothed unit-ball indicator.
const BALL_RAMP: f64 = 0.25;

impl ScalingFamily {
    pub fn new(kind: FamilyKind, amplitude: f64, alpha: Option<f64>, dimension: usize) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidParameter(format!("family dimension must be 1 or 2, got {dimension}")));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidParameter(format!("amplitude A must be positive, got {amplitude}")));
        }
        let n = dimension as f64;
        let alpha = if kind.has_free_alpha() {
            let a = alpha.ok_or(Error::InvalidAlpha { alpha: f64::NAN, dimension, reason: "family needs alpha" })?;
            if !(a > 0.0 && a < n) {
                return Err(Error::InvalidAlpha { alpha: a, dimension, reason: "power-law families need 0 < alpha < N" });
            }
            a
        } else {
            if let Some(a) = alpha {
                if kind != FamilyKind::Integrable && a != n {
                    return Err(Error::InvalidAlpha { alpha: a, dimension, reason: "critical families pin alpha = N" });
                }
            }
            n
        };
        Ok(Self { kind, amplitude, alpha, dimension })
    }

    pub fn power_law(amplitude: f64, alpha: f64, dimension: usize) -> Result<Self> {
        Self::new(FamilyKind::PowerLaw, amplitude, Some(alpha), dimension)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Tail exponent; `N` for the critical and integrable families.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Exponent `1 + 2/α` (or `1 + 2/N`) separating the regimes.
    pub fn critical_exponent(&self) -> f64 {
        1.0 + 2.0 / self.alpha
    }

    /// Smooth, bounded, radial representative `u0(|x|)`.
    pub fn profile(&self, r: f64) -> f64 {
        let a = self.amplitude;
        let s = self.alpha;
        let r = r.abs();
        match self.kind {
            FamilyKind::PowerLaw => a * (1.0 + r * r).powf(-0.5 * s),
            // core width chosen so that ∫_{B_k} u0 = |S^{N-1}| A log k + o(1)
            FamilyKind::CriticalPower => {
                let core = if self.dimension == 1 { 4.0 } else { 1.0 };
                a * (core + r * r).powf(-0.5 * s)
            }
            FamilyKind::PowerLawOverLog | FamilyKind::CriticalPowerOverLog => a * (E + r).ln() * (E + r).powf(-s),
            FamilyKind::PowerLawTimesLog | FamilyKind::CriticalPowerTimesLog => a * (1.0 + r * r).powf(-0.5 * s) / (E + r).ln(),
            FamilyKind::Integrable => {
                if r <= 1.0 - BALL_RAMP {
                    a
                } else if r >= 1.0 + BALL_RAMP {
                    0.0
                } else {
                    0.5 * a * (1.0 + (std::f64::consts::PI * (r - 1.0 + BALL_RAMP) / (2.0 * BALL_RAMP)).cos())
                }
            }
        }
    }

    /// Weight `w(r)` with `w(|x|) u0(x) → A` for the non-integrable families.
    pub fn tail_weight(&self, r: f64) -> Option<f64> {
        let s = self.alpha;
        Some(match self.kind {
            FamilyKind::PowerLaw | FamilyKind::CriticalPower => r.powf(s),
            FamilyKind::PowerLawOverLog | FamilyKind::CriticalPowerOverLog => r.powf(s) / r.ln(),
            FamilyKind::PowerLawTimesLog | FamilyKind::CriticalPowerTimesLog => r.powf(s) * r.ln(),
            FamilyKind::Integrable => return None,
        })
    }

    pub fn representative_datum(&self, grid: &Grid) -> Result<Field> {
        if grid.dimension() != self.dimension {
            return Err(Error::GridMismatch(format!(
                "family in dimension {} sampled on a {}-d grid",
                self.dimension,
                grid.dimension()
            )));
        }
        Ok(Field::from_radial(*grid, 0.0, |r| self.profile(r)))
    }

    /// Analytic rescaled datum `u0^k(x) = f(k) u0(k x)`.
    pub fn rescaled_profile(&self, law: &ScalingLaw, k: f64, r: f64) -> f64 {
        law.f(k) * self.profile(k * r)
    }
}

pub fn representative_datum(family: &ScalingFamily, grid: &Grid) -> Result<Field> {
    family.representative_datum(grid)
}

/// `f(k)`, `F(k) = f(k)^{1-p} k^2` and `c0 = lim F(k)` for a family and exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingLaw {
    pub family: ScalingFamily,
    pub p: f64,
    pub c0: f64,
}

fn is_critical(p: f64, critical: f64) -> bool {
    (p - critical).abs() <= 1e-12 * critical
}

impl ScalingLaw {
    pub fn new(family: ScalingFamily, p: f64) -> Result<Self> {
        let critical = family.critical_exponent();
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("absorption exponent must exceed 1, got {p}")));
        }
        let at_critical = is_critical(p, critical);
        if p < critical && !at_critical {
            return Err(Error::SubcriticalExponent { p, critical });
        }
        // Families whose F(k) diverges at the critical exponent.
        let strict = matches!(
            family.kind,
            FamilyKind::PowerLawOverLog
                | FamilyKind::CriticalPower
                | FamilyKind::CriticalPowerOverLog
                | FamilyKind::CriticalPowerTimesLog
        );
        if strict && at_critical {
            return Err(Error::SubcriticalExponent { p, critical });
        }
        let c0 = match family.kind {
            FamilyKind::PowerLaw | FamilyKind::Integrable if at_critical => 1.0,
            _ => 0.0,
        };
        Ok(Self { family, p, c0 })
    }

    /// Smallest `k` where `f` is defined and positive.
    pub fn domain_start(&self) -> f64 {
        match self.family.kind {
            FamilyKind::PowerLaw | FamilyKind::Integrable => 0.0,
            FamilyKind::CriticalPowerTimesLog => E,
            _ => 1.0,
        }
    }

    /// `f(k)`
    pub fn f(&self, k: f64) -> f64 {
        let s = self.family.alpha;
        let n = self.family.dimension as f64;
        match self.family.kind {
            FamilyKind::PowerLaw => k.powf(s),
            FamilyKind::PowerLawOverLog => k.powf(s) / k.ln(),
            FamilyKind::PowerLawTimesLog => k.powf(s) * k.ln(),
            FamilyKind::CriticalPower => k.powf(n) / k.ln(),
            FamilyKind::CriticalPowerOverLog => k.powf(n) / k.ln().powi(2),
            FamilyKind::CriticalPowerTimesLog => k.powf(n) / k.ln().ln(),
            FamilyKind::Integrable => k.powf(n),
        }
    }

    /// `F(k) = f(k)^{1-p} k^2`
    pub fn big_f(&self, k: f64) -> f64 {
        self.f(k).powf(1.0 - self.p) * k * k
    }

    /// Power of `t^{1/2}` in the normalization of the limit profile: `α` or `N`.
    pub fn decay_power(&self) -> f64 {
        self.family.alpha
    }

    /// Measured `C_δ = sup f(k)/f(l)` over `k0 <= k <= δ l`, with `k, l` on a
    /// geometric ladder up to `k_max`.
    pub fn comparability_constant(&self, delta: f64, k0: f64, k_max: f64) -> f64 {
        let ladder: Vec<f64> = (0..)
            .map(|i| k0 * 1.1f64.powi(i))
            .take_while(|&k| k <= k_max)
            .collect();
        let mut c = 0.0f64;
        for &k in &ladder {
            for &l in ladder.iter().filter(|&&l| k <= l * delta) {
                c = c.max(self.f(k) / self.f(l));
            }
        }
        c
    }
}

pub fn scaling_law(family: &ScalingFamily, p: f64) -> Result<ScalingLaw> {
    ScalingLaw::new(*family, p)
}

/// `F(k)`, the absorption coefficient of the rescaled equation
/// `u^k_t = k^2 L_k u^k - F(k) (u^k)^p`. Rescaled solutions are always read off
/// a single fine solve through [`rescale_field`]; this value is used for
/// auditing the limit coefficient `c0`.
pub fn rescaled_absorption_coefficient(family: &ScalingFamily, p: f64, k: f64) -> Result<f64> {
    Ok(ScalingLaw::new(*family, p)?.big_f(k))
}

/// `u^k(x, t) = f_k · u(k x, k^2 t)` sampled on `target`, where `fine` holds `u(·, k^2 t)`.
pub fn rescale_field(fine: &Field, k: f64, f_k: f64, target: &Grid) -> Result<Field> {
    if target.dimension() != fine.grid().dimension() {
        return Err(Error::GridMismatch("rescale target has a different dimension".into()));
    }
    let needed = k * target.half_length();
    let available = fine.grid().half_length();
    if needed > available * (1.0 + 1e-12) {
        return Err(Error::DomainTooSmall { needed, available });
    }
    let n = target.dimension();
    let mut values = Vec::with_capacity(target.len());
    for i in 0..target.len() {
        let p = target.point(i);
        let mut x = [0.0; 2];
        for d in 0..n {
            // keep reads inside [-L, L) despite rounding in k·x
            x[d] = (k * p[d]).clamp(-available, available - available * 1e-15);
        }
        values.push(f_k * fine.interpolate(&x[..n])?);
    }
    Field::new(*target, values, fine.time() / (k * k))
}

/// Numerical check of the admissibility conditions on `f` for a datum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `sup f(|x|) u0(x)` over the grid (beyond the domain start of `f`).
    pub f1_bound: f64,
    /// `(δ, C_δ)` pairs.
    pub f2_constants: Vec<(f64, f64)>,
    /// `F(k)` along `k = 10, 10^2, ..., 10^6`.
    pub f3_values: Vec<(f64, f64)>,
}

pub fn check_conditions(law: &ScalingLaw, datum: &Field) -> ConditionReport {
    let start = law.domain_start().max(1.0);
    let f1_bound = datum
        .grid()
        .radii()
        .into_iter()
        .zip(datum.values())
        .filter(|(r, _)| *r > start)
        .map(|(r, &u)| law.f(r) * u)
        .fold(0.0, f64::max);
    let k0 = start.max(E) * 1.5;
    let f2_constants = [0.5, 0.25].iter().map(|&d| (d, law.comparability_constant(d, k0, 1e6))).collect();
    let f3_values = (1..=6).map(|e| {
        let k = 10f64.powi(e);
        (k, law.big_f(k))
    });
    ConditionReport { f1_bound, f2_constants, f3_values: f3_values.collect() }
}
