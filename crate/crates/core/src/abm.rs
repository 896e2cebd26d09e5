//! Agent-based population simulation.
//!
//! [`simulate_abm`] runs a finite population of imitating agents under one of
//! three revision rules (pairwise payoff difference, positive-proportional,
//! logit), with exact expected payoffs against the current mixture (complete
//! matching, self-play excluded). In a large population the pairwise rule
//! tracks the replicator flow, the proportional rule the adjusted replicator,
//! and the logit rule the logit flow.
//!
//! [`simulate_session`] is a small-population stand-in for experiment-format
//! data: six players randomly paired each period, each playing a noisy best
//! reply to the opponent mix observed over a sliding window.

use nalgebra::Vector4;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{LogitConvention, SampleSpace, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::game::{GameSpec, N_STRATEGIES};

/// How a revising agent picks the strategies it considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CandidateSelection {
    /// Candidates are agents: the reviser itself plus sampled others.
    #[default]
    Imitative,
}

/// How a revising agent decides among candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecisionMethod {
    /// Switch to the observed agent's strategy with probability
    /// max(0, U_other - U_self) / (max payoff spread).
    PairwiseDifference,
    /// Adopt a candidate's strategy with probability proportional to the
    /// positive part of its payoff.
    PositiveProportional,
    /// Adopt a candidate's strategy with softmax weights on payoffs.
    Logit { noise: f64, convention: LogitConvention },
}

impl std::fmt::Display for DecisionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecisionMethod::PairwiseDifference => write!(f, "pairwise-difference"),
            DecisionMethod::PositiveProportional => write!(f, "positive-proportional"),
            DecisionMethod::Logit { noise, .. } => write!(f, "logit[{noise}]"),
        }
    }
}

/// Configuration of one population run; defaults mirror the reference
/// simulation protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbmConfig {
    pub n_agents: usize,
    pub initial_counts: [usize; 4],
    pub candidate_selection: CandidateSelection,
    pub n_candidates: usize,
    pub decision: DecisionMethod,
    /// Probability each agent revises in a tick.
    pub prob_revision: f64,
    /// Hard cap on revisions per tick.
    pub revisions_per_tick: usize,
    /// After deciding, the agent instead adopts a uniform random strategy
    /// with this probability.
    pub prob_mutation: f64,
    /// Payoffs are exact expectations against the current mixture. Sampled
    /// matching is not implemented; this must stay true.
    pub complete_matching: bool,
    pub seed: u64,
}

impl Default for AbmConfig {
    fn default() -> Self {
        AbmConfig {
            n_agents: 1000,
            initial_counts: [250, 250, 250, 250],
            candidate_selection: CandidateSelection::Imitative,
            n_candidates: 2,
            decision: DecisionMethod::PairwiseDifference,
            prob_revision: 0.2,
            revisions_per_tick: 500,
            prob_mutation: 0.002,
            complete_matching: true,
            seed: 1,
        }
    }
}

impl AbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::InvalidParameter("need at least 2 agents".into()));
        }
        if self.initial_counts.iter().sum::<usize>() != self.n_agents {
            return Err(Error::InvalidParameter(format!(
                "initial counts {:?} do not sum to n_agents={}",
                self.initial_counts, self.n_agents
            )));
        }
        if !(self.prob_revision > 0.0 && self.prob_revision <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "prob_revision must lie in (0, 1], got {}",
                self.prob_revision
            )));
        }
        if !(0.0..1.0).contains(&self.prob_mutation) {
            return Err(Error::InvalidParameter(format!(
                "prob_mutation must lie in [0, 1), got {}",
                self.prob_mutation
            )));
        }
        if self.revisions_per_tick == 0 {
            return Err(Error::InvalidParameter("revisions_per_tick must be positive".into()));
        }
        match self.decision {
            DecisionMethod::PairwiseDifference if self.n_candidates != 2 => {
                return Err(Error::InvalidParameter(
                    "pairwise-difference compares exactly 2 candidates".into(),
                ));
            }
            DecisionMethod::Logit { noise, .. } if !(noise.is_finite() && noise > 0.0) => {
                return Err(Error::InvalidParameter(format!("logit noise must be > 0, got {noise}")));
            }
            _ => {}
        }
        if self.n_candidates < 2 {
            return Err(Error::InvalidParameter("need at least 2 candidates (self + 1)".into()));
        }
        if !self.complete_matching {
            return Err(Error::InvalidParameter(
                "sampled matching is not supported; payoffs are exact expectations".into(),
            ));
        }
        Ok(())
    }

    /// Loads a flat `key = value` file using the reference protocol's row
    /// names, starting from the defaults.
    pub fn from_kv_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))?;
        let mut cfg = AbmConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (key, value) = l.split_once('=').ok_or_else(|| Error::Parse {
                line,
                detail: format!("expected key=value, got {l:?}"),
            })?;
            cfg.apply_kv(key.trim(), value.trim(), line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` line using the reference protocol's row
    /// names (e.g. `n-of-agents`, `prob-revision`, `decision-method`).
    /// Display-only rows are accepted and ignored.
    pub fn apply_kv(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let bad = |detail: String| Error::Parse { line, detail };
        let parse_usize =
            |v: &str| v.trim().parse::<usize>().map_err(|e| bad(format!("{key}: {e}")));
        let parse_f64 = |v: &str| v.trim().parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
        match key {
            "n-of-agents" => self.n_agents = parse_usize(value)?,
            "initial-condition" => {
                let nums: Vec<usize> = value
                    .trim()
                    .trim_start_matches('[')
                    .trim_end_matches(']')
                    .split_whitespace()
                    .map(parse_usize)
                    .collect::<Result<_>>()?;
                if nums.len() != N_STRATEGIES {
                    return Err(bad(format!("initial-condition needs 4 counts, got {}", nums.len())));
                }
                self.initial_counts = [nums[0], nums[1], nums[2], nums[3]];
            }
            "candidate-selection" => {
                if value.trim() != "imitative" {
                    return Err(bad(format!("unsupported candidate-selection {value:?}")));
                }
            }
            "n-of-candidates" => self.n_candidates = parse_usize(value)?,
            "decision-method" => {
                self.decision = match value.trim() {
                    "pairwise-difference" => DecisionMethod::PairwiseDifference,
                    "positive-proportional" => DecisionMethod::PositiveProportional,
                    "logit" => DecisionMethod::Logit {
                        noise: match self.decision {
                            DecisionMethod::Logit { noise, .. } => noise,
                            _ => 0.05,
                        },
                        convention: LogitConvention::Temperature,
                    },
                    other => return Err(bad(format!("unknown decision-method {other:?}"))),
                };
            }
            "log-noise-level" => {
                let noise = parse_f64(value)?;
                if noise > 0.0 {
                    let convention = match self.decision {
                        DecisionMethod::Logit { convention, .. } => convention,
                        _ => LogitConvention::Temperature,
                    };
                    self.decision = DecisionMethod::Logit { noise, convention };
                }
            }
            "prob-revision" => self.prob_revision = parse_f64(value)?,
            "n-of-revisions-per-tick" => self.revisions_per_tick = parse_usize(value)?,
            "prob-mutation" => self.prob_mutation = parse_f64(value)?,
            "complete-matching?" => self.complete_matching = parse_bool(value, line)?,
            "seed" => {
                self.seed =
                    value.trim().parse::<u64>().map_err(|e| bad(format!("seed: {e}")))?
            }
            // sampling and display rows of the reference platform; complete
            // matching makes the sampled-trial settings moot
            "payoff-matrix" | "random-initial-condition?" | "n-of-trials" | "single-sample?"
            | "tie-breaker" | "use-prob-revision?" | "trials-with-replacement?"
            | "self-matching?" | "imitatees-with-replacement?" | "consider-imitating-self?"
            | "plot-every-?-secs" | "duration-of-recent" | "show-recent-history?"
            | "show-complete-history?" => {}
            other => return Err(bad(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }
}

fn parse_bool(v: &str, line: usize) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Parse { line, detail: format!("expected TRUE/FALSE, got {other:?}") }),
    }
}

/// Expected payoff of strategy `strat` against the population mixture with
/// the focal agent itself removed.
fn expected_payoff(g: &GameSpec, counts: &[usize; 4], n_agents: usize, strat: usize) -> f64 {
    let m = g.payoff_matrix();
    let denom = (n_agents - 1) as f64;
    let mut acc = 0.0;
    for j in 0..N_STRATEGIES {
        let mut opponents = counts[j] as f64;
        if j == strat {
            opponents -= 1.0;
        }
        acc += m[(strat, j)] * opponents;
    }
    acc / denom
}

/// Runs the population for `ticks` ticks and returns the frequency series
/// (initial state plus one sample per tick). Deterministic given the seed.
pub fn simulate_abm(g: &GameSpec, cfg: &AbmConfig, ticks: usize) -> Result<Trajectory> {
    cfg.validate()?;
    if ticks == 0 {
        return Err(Error::InvalidParameter("tick count must be positive".into()));
    }

    let n = cfg.n_agents;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut strategies: Vec<u8> = Vec::with_capacity(n);
    for (s, &count) in cfg.initial_counts.iter().enumerate() {
        strategies.extend(std::iter::repeat_n(s as u8, count));
    }
    let mut counts = cfg.initial_counts;
    let spread = g.payoff_spread();

    let freq = |counts: &[usize; 4]| {
        Vector4::new(
            counts[0] as f64 / n as f64,
            counts[1] as f64 / n as f64,
            counts[2] as f64 / n as f64,
            counts[3] as f64 / n as f64,
        )
    };

    let mut samples = Vec::with_capacity(ticks + 1);
    samples.push(freq(&counts));
    let mut revisers: Vec<usize> = Vec::with_capacity(n);

    for _tick in 0..ticks {
        revisers.clear();
        for agent in 0..n {
            if rng.random_bool(cfg.prob_revision) {
                revisers.push(agent);
            }
        }
        revisers.shuffle(&mut rng);
        revisers.truncate(cfg.revisions_per_tick);

        for &agent in &revisers {
            let own = strategies[agent] as usize;
            let mut adopted = own;

            match cfg.decision {
                DecisionMethod::PairwiseDifference => {
                    let other = sample_other(&mut rng, n, agent);
                    let cand = strategies[other] as usize;
                    if cand != own {
                        let u_own = expected_payoff(g, &counts, n, own);
                        let u_cand = expected_payoff(g, &counts, n, cand);
                        // zero spread means no payoff signal: never switch
                        if spread > 0.0 && u_cand > u_own {
                            let p = ((u_cand - u_own) / spread).min(1.0);
                            if rng.random_bool(p) {
                                adopted = cand;
                            }
                        }
                    }
                }
                DecisionMethod::PositiveProportional => {
                    let candidates = candidate_strategies(&mut rng, &strategies, n, agent, cfg.n_candidates);
                    let weights: Vec<f64> = candidates
                        .iter()
                        .map(|&s| expected_payoff(g, &counts, n, s).max(0.0))
                        .collect();
                    adopted = pick_weighted(&mut rng, &candidates, &weights);
                }
                DecisionMethod::Logit { noise, convention } => {
                    let candidates = candidate_strategies(&mut rng, &strategies, n, agent, cfg.n_candidates);
                    let z: Vec<f64> = candidates
                        .iter()
                        .map(|&s| {
                            let u = expected_payoff(g, &counts, n, s);
                            match convention {
                                LogitConvention::Temperature => u / noise,
                                LogitConvention::Gain => u * noise,
                            }
                        })
                        .collect();
                    let shift = z.iter().cloned().fold(f64::MIN, f64::max);
                    let weights: Vec<f64> = z.iter().map(|v| (v - shift).exp()).collect();
                    adopted = pick_weighted(&mut rng, &candidates, &weights);
                }
            }

            if cfg.prob_mutation > 0.0 && rng.random_bool(cfg.prob_mutation) {
                adopted = rng.random_range(0..N_STRATEGIES);
            }
            if adopted != own {
                counts[own] -= 1;
                counts[adopted] += 1;
                strategies[agent] = adopted as u8;
            }
        }
        samples.push(freq(&counts));
    }

    Trajectory::new(
        samples,
        1.0,
        0.0,
        TrajectoryMeta {
            source: format!("abm:{}", cfg.decision),
            a: g.a(),
            model: Some(cfg.decision.to_string()),
            noise: match cfg.decision {
                DecisionMethod::Logit { noise, .. } => Some(noise),
                _ => None,
            },
            seed: Some(cfg.seed),
            drift_renormalizations: 0,
            space: SampleSpace::Simplex,
        },
    )
}

fn sample_other(rng: &mut ChaCha12Rng, n: usize, exclude: usize) -> usize {
    let k = rng.random_range(0..n - 1);
    if k >= exclude {
        k + 1
    } else {
        k
    }
}

/// The reviser's own strategy first, then the strategies of `k - 1` sampled
/// distinct other agents.
fn candidate_strategies(
    rng: &mut ChaCha12Rng,
    strategies: &[u8],
    n: usize,
    agent: usize,
    k: usize,
) -> Vec<usize> {
    let mut out = vec![strategies[agent] as usize];
    let mut chosen: Vec<usize> = Vec::with_capacity(k - 1);
    while chosen.len() < k - 1 {
        let other = sample_other(rng, n, agent);
        if !chosen.contains(&other) {
            chosen.push(other);
            out.push(strategies[other] as usize);
        }
    }
    out
}

/// Weighted pick; a zero total weight falls back to the uniform tie-breaker.
fn pick_weighted(rng: &mut ChaCha12Rng, candidates: &[usize], weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return candidates[rng.random_range(0..candidates.len())];
    }
    let mut draw = rng.random_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if draw < w {
            return candidates[i];
        }
        draw -= w;
    }
    candidates[candidates.len() - 1]
}

/// Behavior of the surrogate session players: a logit best reply to the
/// opponent mixture observed over a sliding window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SessionRule {
    pub window: usize,
    pub temperature: f64,
}

impl Default for SessionRule {
    fn default() -> Self {
        // tuned so 8 sessions x 1000 periods reproduce the sign structure
        // and the parameter-free identities without a detectable sigma24 bias
        SessionRule { window: 50, temperature: 0.02 }
    }
}

/// Per-period strategy counts of one small-population session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub a: f64,
    pub population_size: usize,
    /// One count vector per period; each sums to `population_size`.
    pub periods: Vec<[u32; 4]>,
}

impl SessionRecord {
    /// Frequency trajectory with one sample per period (dt = 1).
    pub fn to_trajectory(&self) -> Result<Trajectory> {
        let n = self.population_size as f64;
        let samples = self
            .periods
            .iter()
            .map(|c| Vector4::new(c[0] as f64 / n, c[1] as f64 / n, c[2] as f64 / n, c[3] as f64 / n))
            .collect();
        Trajectory::new(
            samples,
            1.0,
            0.0,
            TrajectoryMeta {
                source: format!("session:{}", self.session_id),
                a: Some(self.a),
                model: None,
                noise: None,
                seed: None,
                drift_renormalizations: 0,
                space: SampleSpace::Simplex,
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.periods.iter().enumerate() {
            let sum: u32 = c.iter().sum();
            if sum as usize != self.population_size {
                return Err(Error::InvalidState(format!(
                    "session {}: period {} counts {:?} sum to {}, expected {}",
                    self.session_id,
                    i + 1,
                    c,
                    sum,
                    self.population_size
                )));
            }
        }
        Ok(())
    }
}

/// Simulates one session: `n_players` agents randomly paired each period,
/// each playing one round and then logit-responding to its sliding-window
/// opponent history. Returns the per-period strategy counts.
pub fn simulate_session(
    g: &GameSpec,
    session_id: &str,
    n_players: usize,
    periods: usize,
    rule: SessionRule,
    seed: u64,
) -> Result<SessionRecord> {
    if n_players < 2 || !n_players.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "n_players must be even and at least 2, got {n_players}"
        )));
    }
    if periods == 0 {
        return Err(Error::InvalidParameter("periods must be positive".into()));
    }
    if rule.window == 0 || !rule.temperature.is_finite() || rule.temperature <= 0.0 {
        return Err(Error::InvalidParameter(format!("bad session rule {rule:?}")));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let a = g.a().ok_or_else(|| {
        Error::UnsupportedGame("session simulation expects the cyclic family".into())
    })?;

    let mut history: Vec<Vec<u8>> = vec![Vec::with_capacity(rule.window); n_players];
    let mut current: Vec<u8> =
        (0..n_players).map(|_| rng.random_range(0..N_STRATEGIES) as u8).collect();
    let mut order: Vec<usize> = (0..n_players).collect();
    let mut record = Vec::with_capacity(periods);

    for _ in 0..periods {
        let mut counts = [0u32; 4];
        for &s in &current {
            counts[s as usize] += 1;
        }
        record.push(counts);

        // random matching: a shuffled order read off in pairs
        order.shuffle(&mut rng);
        for pair in order.chunks_exact(2) {
            let (i, j) = (pair[0], pair[1]);
            push_window(&mut history[i], current[j], rule.window);
            push_window(&mut history[j], current[i], rule.window);
        }

        let mut next = current.clone();
        for (i, hist) in history.iter().enumerate() {
            let mut mix = Vector4::zeros();
            for &s in hist {
                mix[s as usize] += 1.0;
            }
            mix /= hist.len() as f64;
            let u = g.payoff_matrix() * mix;
            let w = crate::dynamics::softmax_response(&u, rule.temperature, LogitConvention::Temperature);
            next[i] = pick_weighted(&mut rng, &[0, 1, 2, 3], w.as_slice()) as u8;
        }
        current = next;
    }

    Ok(SessionRecord {
        session_id: session_id.to_string(),
        a,
        population_size: n_players,
        periods: record,
    })
}

fn push_window(hist: &mut Vec<u8>, observed: u8, window: usize) {
    if hist.len() == window {
        hist.remove(0);
    }
    hist.push(observed);
}
