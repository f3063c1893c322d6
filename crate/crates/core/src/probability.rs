//! The event model: independent events `C_n` with `P(C_n) = 1 - e^{-ns}`,
//! and `A_k` the event that no `k` consecutive `C_i` all fail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::log_partition_product;
use crate::error::{Error, Result};
use crate::precision::{Precision, PrecisionReal};
use crate::transfer::gk_eval;

/// Trials per independently seeded stream.
pub const BATCH_SIZE: u64 = 10_000;
/// Largest truncation point the simulator accepts.
pub const MAX_TRUNCATION: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub k: usize,
    pub s: f64,
    pub trials: u64,
    pub seed: u64,
    pub trunc_eps: f64,
}

impl ModelParams {
    pub fn new(k: usize, s: f64, trials: u64, seed: u64, trunc_eps: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("k = {k}; k must be at least 2")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidArgument(format!("s = {s} must lie in (0, 1)")));
        }
        if trials < 1000 {
            return Err(Error::InvalidArgument(format!("{trials} trials; at least 1000 are required")));
        }
        if !(trunc_eps > 0.0 && trunc_eps <= 1e-3) {
            return Err(Error::InvalidArgument(format!("trunc_eps = {trunc_eps} must lie in (0, 1e-3]")));
        }
        Ok(ModelParams {
            k,
            s,
            trials,
            seed,
            trunc_eps,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactProb {
    pub k: usize,
    pub s: PrecisionReal,
    pub log_value: PrecisionReal,
    pub value: PrecisionReal,
    /// Bound on the error of `log_value`.
    pub log_error_bound: f64,
}

/// `P_s(A_k) = G_k(q)/G(q)`, both factors truncated by the same
/// unrestricted-product tail bound.
pub fn exact_prob(k: usize, s: &PrecisionReal, tol: f64) -> Result<ExactProb> {
    let sf = s.to_f64();
    if !(sf > 0.0 && sf < 1.0) {
        return Err(Error::InvalidArgument(format!("s = {sf} must lie in (0, 1)")));
    }
    let gk = gk_eval(k, s, tol / 2.0)?;
    let (log_g, g_bound) = log_partition_product(s, tol / 2.0)?;
    let log_value = gk.log_value.clone() - log_g;
    let value = log_value.exp();
    Ok(ExactProb {
        k,
        s: s.clone(),
        log_value,
        value,
        log_error_bound: gk.total_bound() + g_bound,
    })
}

/// Bound on the probability that a window starting at `N` or later fails:
/// `Σ_{i≥N} ∏_{j<k} e^{-(i+j)s} = e^{-s(kN + k(k-1)/2)} / (1 - e^{-sk})`.
pub fn truncation_bias(k: usize, s: f64, n_trunc: u64) -> f64 {
    let kf = k as f64;
    (-s * (kf * n_trunc as f64 + kf * (kf - 1.0) / 2.0)).exp() / (-(-s * kf).exp_m1())
}

/// Smallest `N ≥ 1` with `truncation_bias(k, s, N) < eps`.
pub fn truncation_point(k: usize, s: f64, eps: f64) -> Result<u64> {
    let kf = k as f64;
    let guess = ((-(eps * (-(-s * kf).exp_m1())).ln() - s * kf * (kf - 1.0) / 2.0) / (s * kf)).ceil();
    let mut n = guess.max(1.0) as u64;
    if n > MAX_TRUNCATION {
        return Err(Error::GuardExceeded {
            what: "simulation truncation point",
            size: n as u128,
            limit: MAX_TRUNCATION as u128,
        });
    }
    while n > 1 && truncation_bias(k, s, n - 1) < eps {
        n -= 1;
    }
    while truncation_bias(k, s, n) >= eps {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationRecord {
    pub k: usize,
    pub s: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n_trunc: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub bias_bound: f64,
    pub exact: Option<f64>,
    pub sigma_distance: Option<f64>,
}

impl SimulationRecord {
    /// Attaches the exact probability and the distance in standard errors.
    pub fn with_exact(mut self, exact: f64) -> Self {
        self.exact = Some(exact);
        self.sigma_distance = Some((self.estimate - exact).abs() / self.stderr.max(f64::MIN_POSITIVE));
        self
    }

    /// `|estimate - exact| ≤ 3σ + bias`.
    pub fn within_three_sigma(&self) -> Option<bool> {
        self.exact
            .map(|e| (self.estimate - e).abs() <= 3.0 * self.stderr + self.bias_bound)
    }
}

/// Runs one trial: true when every window of `k` indices in `1..=N+k-1`
/// contains an occurring event.
fn trial(rng: &mut ChaCha8Rng, k: usize, fail_prob: &[f64]) -> bool {
    let mut gap = 0;
    for &p in fail_prob {
        if rng.random::<f64>() < p {
            gap += 1;
            if gap >= k {
                return false;
            }
        } else {
            gap = 0;
        }
    }
    true
}

/// Monte Carlo estimate of `P_s(A_k)`.
///
/// Trials are split into batches of [`BATCH_SIZE`]; batch `b` draws from
/// the ChaCha8 stream `b` of `seed`, so the result does not depend on
/// scheduling.
pub fn simulate(params: &ModelParams) -> Result<SimulationRecord> {
    let ModelParams {
        k,
        s,
        trials,
        seed,
        trunc_eps,
    } = *params;
    let n_trunc = truncation_point(k, s, trunc_eps)?;
    let last = n_trunc + k as u64 - 1;
    let fail_prob: Vec<f64> = (1..=last).map(|i| (-(i as f64) * s).exp()).collect();
    let batches = trials.div_ceil(BATCH_SIZE);
    let successes: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH_SIZE.min(trials - b * BATCH_SIZE);
            (0..count).filter(|_| trial(&mut rng, k, &fail_prob)).count() as u64
        })
        .sum();
    let estimate = successes as f64 / trials as f64;
    let stderr = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(SimulationRecord {
        k,
        s,
        trials,
        seed,
        n_trunc,
        estimate,
        stderr,
        bias_bound: truncation_bias(k, s, n_trunc),
        exact: None,
        sigma_distance: None,
    })
}

/// Simulation with the exact probability attached.
pub fn simulate_and_compare(params: &ModelParams, precision: Precision) -> Result<SimulationRecord> {
    let record = simulate(params)?;
    let exact = exact_prob(params.k, &PrecisionReal::from_f64(params.s, precision), 1e-30)?;
    Ok(record.with_exact(exact.value.to_f64()))
}
