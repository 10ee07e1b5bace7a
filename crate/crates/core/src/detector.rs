//! Binary anomaly decisions with a bounded false-positive probability.
//!
//! The raw current-tick estimate `a_hat` is shifted down by `nu * N_t`, the
//! sketch's worst-case overestimate at confidence `1 - epsilon/2`, before the
//! chi-squared statistic is recomputed. Comparing that adjusted statistic
//! against the `1 - epsilon/2` quantile of chi-squared(1) splits the error
//! budget evenly between the test and the sketch, bounding false positives by
//! `epsilon`.
//!
//! The bound only follows when both the adjusted and the exact deviation lie
//! above the mean level, so edges whose adjusted count falls below `s_hat / t`
//! are never flagged.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scorer::{chi2_unchecked, Counts, Observation};
use crate::sketch::SketchParams;

/// Standard normal quantile.
///
/// Acklam's rational approximation (relative error about 1.15e-9) followed by
/// one Newton step against the exact CDF. Returns `±inf` at 0 and 1 and NaN
/// outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let x = acklam(p);
    // Newton in whichever tail keeps the residual well conditioned.
    let residual = if p < 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_cdf(-x)
    };
    x - residual / normal_pdf(x)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Quantile of the chi-squared distribution with one degree of freedom.
///
/// A chi-squared(1) variable is the square of a standard normal, so the `p`
/// quantile is `z^2` with `z` the normal quantile of `(1 - p)/2`.
pub fn chi2_quantile_1df(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let z = normal_quantile(0.5 * (1.0 - p));
    Ok(z * z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectorConfig {
    epsilon: f64,
    nu: f64,
    threshold: f64,
}

impl DetectorConfig {
    pub fn new(epsilon: f64, nu: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::param(format!("nu must lie in (0, 1), got {nu}")));
        }
        Ok(DetectorConfig {
            epsilon,
            nu,
            threshold: chi2_quantile_1df(1.0 - epsilon / 2.0)?,
        })
    }

    /// Detector matched to a sketch's bucket count (`nu = e / b`).
    pub fn for_sketch(epsilon: f64, params: &SketchParams) -> Result<Self> {
        DetectorConfig::new(epsilon, params.nu())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Chi-squared(1) quantile at `1 - epsilon/2`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Decide on every count pair of an observation. The edge is flagged if
    /// any component is; the reported statistic is the largest one.
    pub fn evaluate(&self, obs: &Observation) -> Decision {
        let mut out = Decision {
            adjusted: 0.0,
            anomalous: false,
        };
        for Counts { current, total } in obs.components() {
            let stat = adjusted_unchecked(current, total, obs.t, obs.tick_edges, self.nu);
            out.adjusted = out.adjusted.max(stat.x_tilde_sq);
            out.anomalous |= decide(&stat, self);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decision {
    pub adjusted: f64,
    pub anomalous: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdjustedStatistic {
    /// `a_hat - nu * N_t`; may be negative.
    pub a_tilde: f64,
    /// Mean level `s_hat / t`.
    pub expected: f64,
    pub x_tilde_sq: f64,
}

pub fn adjusted_statistic(
    a_hat: f64,
    s_hat: f64,
    t: u64,
    tick_edges: u64,
    nu: f64,
) -> Result<AdjustedStatistic> {
    if t < 1 {
        return Err(Error::param("tick must be at least 1 for scoring"));
    }
    if !(a_hat >= 0.0 && s_hat >= 0.0 && nu >= 0.0) {
        return Err(Error::param("counts and nu must be nonnegative"));
    }
    Ok(adjusted_unchecked(a_hat, s_hat, t, tick_edges, nu))
}

fn adjusted_unchecked(a_hat: f64, s_hat: f64, t: u64, tick_edges: u64, nu: f64) -> AdjustedStatistic {
    let a_tilde = a_hat - nu * tick_edges as f64;
    AdjustedStatistic {
        a_tilde,
        expected: s_hat / t as f64,
        x_tilde_sq: chi2_unchecked(a_tilde, s_hat, t),
    }
}

/// `true` iff the adjusted count is at or above the mean level and the
/// adjusted statistic strictly exceeds the threshold.
pub fn decide(stat: &AdjustedStatistic, config: &DetectorConfig) -> bool {
    stat.a_tilde >= stat.expected && stat.x_tilde_sq > config.threshold
}
