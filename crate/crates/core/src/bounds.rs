//! Closed-form envelopes and thresholds, carried in natural-log space.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::binomial;

/// One evaluated bound. `log_value` is a natural log; `value` is linear.
/// Exactly one of the two is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub satisfied: Option<bool>,
}

impl BoundReport {
    pub fn log(name: &str, params: &[(&str, f64)], log_value: f64) -> Self {
        Self {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            log_value: Some(log_value),
            value: None,
            satisfied: None,
        }
    }

    pub fn linear(name: &str, params: &[(&str, f64)], value: f64) -> Self {
        Self {
            value: Some(value),
            log_value: None,
            ..Self::log(name, params, 0.0)
        }
    }

    pub fn with_check(mut self, satisfied: bool) -> Self {
        self.satisfied = Some(satisfied);
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `ln(n!)` by direct summation.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn sq(n: u64) -> f64 {
    (n * n) as f64
}

/// `ln(n! / 2^{n^2})`.
pub fn uniform_baseline(n: u64) -> f64 {
    ln_factorial(n) - sq(n) * LN_2
}

fn l4_rate(beta: f64) -> f64 {
    (0.5 + (2.0 * beta).sin().powi(2) / 4.0).ln()
}

/// `N ln(1/2 + sin^2(2b)/4)`.
pub fn l4_envelope(n_qubits: u64, beta: f64) -> f64 {
    n_qubits as f64 * l4_rate(beta)
}

/// `ln sqrt(n!) + (n^2/2) ln(1/2 + sin^2(2b)/4)`.
pub fn l4_feasible_envelope(n: u64, beta: f64) -> f64 {
    0.5 * ln_factorial(n) + sq(n) / 2.0 * l4_rate(beta)
}

/// `n [ln(2p+1) - (n-1) ln 2]`.
pub fn lightcone_1d_bound(n: u64, p: u64) -> f64 {
    n as f64 * ((2 * p + 1) as f64).ln() - n as f64 * (n as f64 - 1.0) * LN_2
}

/// `n [ln C + p ln D - (n-1) ln 2]`.
pub fn lightcone_degree_bound(n: u64, p: f64, delta_row: f64, c: f64) -> Result<f64> {
    if delta_row < 1.0 || c <= 0.0 || p < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "light-cone bound needs delta_row >= 1, C > 0, p >= 0 (got {delta_row}, {c}, {p})"
        )));
    }
    Ok(n as f64 * (c.ln() + p * delta_row.ln() - (n as f64 - 1.0) * LN_2))
}

/// `ln 2 / ln D`, `+inf` at `D = 1`.
pub fn alpha_star(delta_row: f64) -> Result<f64> {
    if delta_row < 1.0 {
        return Err(Error::InvalidArgument(format!("delta_row {delta_row} < 1")));
    }
    if delta_row == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(LN_2 / delta_row.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferFactor {
    /// `ln(2^{n^2} / n^n)`.
    pub exact: f64,
    /// `ln(sqrt(2 pi n) e^n)`.
    pub stirling_floor: f64,
}

impl TransferFactor {
    pub fn floor_holds(&self) -> bool {
        self.exact >= self.stirling_floor
    }
}

pub fn transfer_factor(n: u64) -> TransferFactor {
    let nf = n as f64;
    TransferFactor {
        exact: sq(n) * LN_2 - nf * nf.ln(),
        stirling_floor: 0.5 * (2.0 * PI * nf).ln() + nf,
    }
}

/// `n^2 (ln 2 - a ln D) - K n ln n + ln c_CE`.
pub fn ratio_master(n: u64, alpha: f64, delta_row: f64, c_ce: f64, k: f64) -> Result<f64> {
    if c_ce < 1.0 || delta_row < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "ratio bound needs c_ce >= 1 and delta_row >= 1 (got {c_ce}, {delta_row})"
        )));
    }
    let nf = n as f64;
    Ok(nf * nf * (LN_2 - alpha * delta_row.ln()) - k * nf * nf.ln() + c_ce.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Uniform,
    Gaussian,
}

/// Cross-term factor of a wide angle window at frequency gap `delta`.
pub fn cross_term_suppression(kind: Window, width: f64, delta: f64) -> f64 {
    match kind {
        Window::Uniform => {
            let x = width * delta;
            if x == 0.0 {
                1.0
            } else {
                x.sin() / x
            }
        }
        Window::Gaussian => (-(width * width) * (delta * delta) / 2.0).exp(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSize {
    /// `sum_{r <= d} C(N, r)`.
    pub exact: BigInt,
    /// `d ln(eN/d)`, zero at `d = 0`.
    pub log_bound: f64,
}

impl WindowSize {
    pub fn holds(&self) -> bool {
        big_ln(&self.exact) <= self.log_bound + 1e-12
    }
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN).ln()
    } else {
        let shift = bits - 64;
        let top: BigInt = x >> shift;
        num_traits::ToPrimitive::to_f64(&top).unwrap_or(f64::NAN).ln() + shift as f64 * LN_2
    }
}

pub fn low_degree_window_size(n_bits: u64, d: u64) -> Result<WindowSize> {
    if d > n_bits {
        return Err(Error::InvalidArgument(format!("degree {d} exceeds {n_bits}")));
    }
    let exact = (0..=d).map(|r| binomial(n_bits as i64, r as i64)).sum();
    let log_bound = if d == 0 {
        0.0
    } else {
        d as f64 * (std::f64::consts::E * n_bits as f64 / d as f64).ln()
    };
    Ok(WindowSize { exact, log_bound })
}

/// `1/t`.
pub fn markov_tail(t: f64) -> Result<f64> {
    if t <= 1.0 {
        return Err(Error::InvalidArgument(format!("Markov level t = {t} must exceed 1")));
    }
    Ok(1.0 / t)
}

/// Exact degree-`<= d` energy of the one-hot block indicator,
/// `2^{-2n} sum_{r <= d} C(n,r) (n-2r)^2`.
pub fn one_hot_low_degree_mass(n: u64, d: u64) -> f64 {
    let sum: BigInt = (0..=d.min(n))
        .map(|r| {
            let m = n as i64 - 2 * r as i64;
            binomial(n as i64, r as i64) * BigInt::from(m * m)
        })
        .sum();
    (big_ln(&sum) - 2.0 * n as f64 * LN_2).exp()
}

/// `2(d+1) n^{d+2} 2^{-2n}`.
pub fn one_hot_low_degree_bound(n: u64, d: u64) -> f64 {
    let nf = n as f64;
    ((2.0 * (d as f64 + 1.0)).ln() + (d as f64 + 2.0) * nf.ln() - 2.0 * nf * LN_2).exp()
}

/// Both sides of `2 ln(n^n / n!) > n(n-1) ln((n+1)/n)`.
pub fn nn_over_factorial_sides(n: u64) -> (f64, f64) {
    let nf = n as f64;
    (
        2.0 * (nf * nf.ln() - ln_factorial(n)),
        nf * (nf - 1.0) * ((nf + 1.0) / nf).ln(),
    )
}

pub fn nn_over_factorial_sweep(lo: u64, hi: u64) -> Vec<BoundReport> {
    (lo..=hi)
        .map(|n| {
            let (lhs, rhs) = nn_over_factorial_sides(n);
            BoundReport::log("nn_over_factorial", &[("n", n as f64), ("rhs", rhs)], lhs)
                .with_check(lhs > rhs)
        })
        .collect()
}

/// `max{9, ceil(4/a^2)}` with `a = c ln 2 / 2`.
pub fn control_threshold(c_t: f64) -> Result<u64> {
    if c_t <= 0.0 {
        return Err(Error::InvalidArgument(format!("c_T = {c_t} must be positive")));
    }
    let a = c_t * LN_2 / 2.0;
    Ok(9u64.max((4.0 / (a * a)).ceil() as u64))
}

/// `n ln n - (c ln 2 / 2) n^2`; negative means `n^n 2^{-c n^2 / 2} < 1`.
pub fn control_exponent(n: u64, c_t: f64) -> f64 {
    let nf = n as f64;
    nf * nf.ln() - c_t * LN_2 / 2.0 * nf * nf
}

/// Checks the control inequality on every `n` from the threshold to `n_max`.
pub fn control_sweep(c_t: f64, n_max: u64) -> Result<BoundReport> {
    let threshold = control_threshold(c_t)?;
    let worst = (threshold..=n_max)
        .map(|n| control_exponent(n, c_t))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundReport::log(
        "control_threshold",
        &[("c_t", c_t), ("threshold", threshold as f64), ("n_max", n_max as f64)],
        worst,
    )
    .with_check(threshold > n_max || worst < 0.0))
}

/// Exact transfer factor vs. its Stirling floor for each `n`.
pub fn stirling_floor_sweep(lo: u64, hi: u64) -> Vec<BoundReport> {
    (lo..=hi)
        .map(|n| {
            let t = transfer_factor(n);
            BoundReport::log("stirling_floor", &[("n", n as f64), ("floor", t.stirling_floor)], t.exact)
                .with_check(t.floor_holds())
        })
        .collect()
}

/// `ln(|E_d| n^{2n} 2^{-2N})`, the low-degree energy bound for the
/// permutation indicator with the exact window count.
pub fn permutation_low_degree_bound(n: u64, d: u64) -> Result<f64> {
    let window = low_degree_window_size(n * n, d)?;
    let nf = n as f64;
    Ok(big_ln(&window.exact) + 2.0 * nf * nf.ln() - 2.0 * sq(n) * LN_2)
}

/// `ln(C_T n^{k} / 2^N)`.
pub fn low_degree_correlation_bound(n: u64, c_t: f64, t_exponent: f64) -> f64 {
    c_t.ln() + t_exponent * (n as f64).ln() - sq(n) * LN_2
}

/// `ln(sqrt(n!) / 2^N)`.
pub fn high_degree_correlation_bound(n: u64) -> f64 {
    0.5 * ln_factorial(n) - sq(n) * LN_2
}

/// Log of the sum of the low- and high-degree contributions.
pub fn harmonic_baseline_bound(n: u64, c_t: f64, t_exponent: f64) -> f64 {
    let a = low_degree_correlation_bound(n, c_t, t_exponent);
    let b = high_degree_correlation_bound(n);
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Bound table printed by `baseline`.
pub fn baseline_table(n: u64) -> Vec<BoundReport> {
    let nf = n as f64;
    let t = transfer_factor(n);
    let mut rows = vec![
        BoundReport::log("uniform_baseline", &[("n", nf)], uniform_baseline(n)),
        BoundReport::log("transfer_factor", &[("n", nf)], t.exact),
        BoundReport::log("transfer_stirling_floor", &[("n", nf)], t.stirling_floor).with_check(t.floor_holds()),
    ];
    let mut depths = vec![1, n / 2, n];
    depths.dedup();
    for p in depths {
        rows.push(BoundReport::log(
            "lightcone_1d",
            &[("n", nf), ("p", p as f64)],
            lightcone_1d_bound(n, p),
        ));
    }
    rows
}
