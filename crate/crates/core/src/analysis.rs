//! Statistical post-processing: error-rate estimates with exact binomial
//! intervals, the binary-entropy key rate and its threshold, and Monte Carlo
//! fidelity estimation for the purification stage.

use thiserror::Error;

use crate::adversary::EveStrategy;
use crate::bell::{derive_seed, ChannelModel};
use crate::protocol::{run_stage1, ConfigError, SessionConfig, Stage1Outcome};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{context} must lie in [{low}, {high}], got {value}")]
    OutOfRange {
        context: &'static str,
        low: f64,
        high: f64,
        value: f64,
    },
    #[error("cannot estimate an error rate from an empty sample")]
    EmptySample,
    #[error("fidelity estimation needs at least one trial")]
    ZeroTrials,
    #[error("gave up after {attempts} sessions: too many aborts for {wanted} completed trials")]
    ExcessiveAborts { attempts: usize, wanted: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Binary entropy in bits, with the continuity convention h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(AnalysisError::OutOfRange {
            context: "entropy argument",
            low: 0.0,
            high: 1.0,
            value: p,
        });
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Net key fraction at error rate `delta`: one subtracted entropy term for
/// bit-error correction and one for phase-error correction.
pub fn css_key_rate(delta: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=0.5).contains(&delta) || delta.is_nan() {
        return Err(AnalysisError::OutOfRange {
            context: "error rate",
            low: 0.0,
            high: 0.5,
            value: delta,
        });
    }
    Ok(1.0 - 2.0 * binary_entropy(delta)?)
}

/// The unique zero crossing of [`css_key_rate`] on (0, 0.5), by bisection.
/// The rate is positive below the returned threshold (close to 11%) and
/// negative above it.
pub fn threshold_solve() -> f64 {
    let mut lo = 1e-9;
    let mut hi = 0.5 - 1e-9;
    debug_assert!(css_key_rate(lo).unwrap() > 0.0);
    debug_assert!(css_key_rate(hi).unwrap() < 0.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if css_key_rate(mid).unwrap() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A disagreement-rate estimate with its exact (Clopper-Pearson) two-sided
/// 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QberEstimate {
    pub point: f64,
    pub lower95: f64,
    pub upper95: f64,
}

/// Estimates a disagreement probability from agree/disagree counts. The
/// interval is computed from the binomial distribution itself, not a normal
/// approximation.
pub fn estimate_qber(agreements: usize, disagreements: usize) -> Result<QberEstimate, AnalysisError> {
    let n = agreements + disagreements;
    if n == 0 {
        return Err(AnalysisError::EmptySample);
    }
    let x = disagreements;
    let point = x as f64 / n as f64;
    let lower95 = if x == 0 {
        0.0
    } else {
        // largest p with P(X >= x | p) <= 0.025
        solve_probability(|p| upper_tail(x, n, p), 0.025)
    };
    let upper95 = if x == n {
        1.0
    } else {
        // smallest p with P(X <= x | p) <= 0.025, i.e. P(X >= x+1 | p) = 0.975
        solve_probability(|p| upper_tail(x + 1, n, p), 0.975)
    };
    Ok(QberEstimate {
        point,
        lower95,
        upper95,
    })
}

/// Monte Carlo estimate of the probability that a stage-1 run purifies
/// every block with zero residual, with an exact one-sided lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub trials: usize,
    pub successes: usize,
    pub point: f64,
    /// Exact binomial one-sided 95% lower confidence bound on the success
    /// probability.
    pub lower_bound95: f64,
}

/// Runs independent stage-1 sessions (no adversary) and counts the fraction
/// whose purification leaves zero residual in every block — the operational
/// stand-in for the fidelity of the purified pairs.
///
/// Trials that abort at the stage-1 check are excluded and retried: the
/// estimate is conditioned on the protocol continuing, which is the regime
/// the purified pairs exist in at all. Trial `i` runs under the seed derived
/// from `(cfg.seed, i)`.
pub fn estimate_fidelity(
    cfg: &SessionConfig,
    channel: &ChannelModel,
    trials: usize,
) -> Result<FidelityEstimate, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::ZeroTrials);
    }
    let mut successes = 0usize;
    let mut completed = 0usize;
    let mut attempts = 0usize;
    let max_attempts = trials.saturating_mul(1000).saturating_add(1000);
    while completed < trials {
        if attempts >= max_attempts {
            return Err(AnalysisError::ExcessiveAborts {
                attempts,
                wanted: trials,
            });
        }
        let mut trial_cfg = cfg.clone();
        trial_cfg.seed = derive_seed(cfg.seed, attempts as u64);
        attempts += 1;
        let mut eve = EveStrategy::none();
        match run_stage1(&trial_cfg, channel, &mut eve)? {
            Stage1Outcome::Aborted(_) => continue,
            Stage1Outcome::Continued(state) => {
                completed += 1;
                if state.all_blocks_clean() {
                    successes += 1;
                }
            }
        }
    }
    let point = successes as f64 / trials as f64;
    let lower_bound95 = if successes == 0 {
        0.0
    } else {
        // largest p with P(X >= successes | p) <= 0.05
        solve_probability(|p| upper_tail(successes, trials, p), 0.05)
    };
    Ok(FidelityEstimate {
        trials,
        successes,
        point,
        lower_bound95,
    })
}

/// P(X >= x) for X ~ Binomial(n, p), computed in the log domain.
fn upper_tail(x: usize, n: usize, p: f64) -> f64 {
    if x == 0 {
        return 1.0;
    }
    if x > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    // sum over the smaller tail for accuracy
    let direct: f64 = (x..=n)
        .map(|i| (ln_choose(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q).exp())
        .sum();
    direct.min(1.0)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: usize) -> f64 {
    // ln Gamma(n+1) via Stirling's series with exact values for small n.
    if n < 16 {
        let mut acc = 0.0f64;
        for i in 2..=n {
            acc += (i as f64).ln();
        }
        return acc;
    }
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Finds the p in (0, 1) where the monotone-increasing `tail(p)` crosses
/// `target`, by bisection.
fn solve_probability(tail: impl Fn(f64) -> f64, target: f64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}
