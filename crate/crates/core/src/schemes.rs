//! First-stage secondary access and PT powering.
//!
//! Each scheme maps one channel realization to the energy the PT harvests
//! during the first stage (`e_h1`, J/Hz) and the rate of every secondary
//! transmitter (bits/s/Hz). Powering signals are known to every secondary
//! receiver and cancelled before decoding, so they never appear as
//! interference.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::config::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    /// Transmitters take turns, each for `α/(N/2)` of the slot.
    First,
    /// All transmitters share the whole first stage and interfere.
    Second,
    /// Strongest data link transmits; the best remaining node powers the PT.
    Third,
    /// Strongest data link transmits; `K` nodes beamform energy to the PT.
    Fourth,
    /// Transmitters take turns; `K` nodes beamform energy during each turn.
    Fifth,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::First,
        SchemeId::Second,
        SchemeId::Third,
        SchemeId::Fourth,
        SchemeId::Fifth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::First => "first",
            SchemeId::Second => "second",
            SchemeId::Third => "third",
            SchemeId::Fourth => "fourth",
            SchemeId::Fifth => "fifth",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown scheme {s:?}, expected one of first, second, third, fourth, fifth")
            })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BeamformError {
    #[error("beamforming set is empty")]
    EmptySet,
    #[error("every channel in the beamforming set is zero")]
    DegenerateSet,
}

/// Matched-filter energy beamformer toward the PT.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformWeights {
    /// Powering nodes Ω.
    pub nodes: Vec<usize>,
    /// `β_j` aligned with `nodes`; unit total power.
    pub weights: Vec<Complex64>,
}

impl BeamformWeights {
    /// `|Σ_j β_j^† h(s_j, p)|²`, the beamformed channel gain at the PT.
    pub fn received_gain(&self, ch: &ChannelRealization) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&j, b)| b.conj() * ch.pt_secondary(j))
            .sum::<Complex64>()
            .norm_sqr()
    }

    pub fn total_power(&self) -> f64 {
        self.weights.iter().map(|b| b.norm_sqr()).sum()
    }
}

/// `β_j = h(s_j, p) / sqrt(Σ_{j∈Ω} |h(s_j, p)|²)`.
pub fn beamform_weights(
    ch: &ChannelRealization,
    omega: &[usize],
) -> Result<BeamformWeights, BeamformError> {
    if omega.is_empty() {
        return Err(BeamformError::EmptySet);
    }
    let total: f64 = omega.iter().map(|&j| ch.gain_to_pt(j)).sum();
    if total == 0.0 {
        return Err(BeamformError::DegenerateSet);
    }
    let scale = total.sqrt().recip();
    Ok(BeamformWeights {
        nodes: omega.to_vec(),
        weights: omega.iter().map(|&j| ch.pt_secondary(j) * scale).collect(),
    })
}

/// Per-slot result of a first-stage scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: SchemeId,
    /// Energy harvested at the PT during the first stage, J/Hz.
    pub e_h1: f64,
    /// One rate per secondary transmitter, bits/s/Hz; zero if not scheduled.
    pub secondary_rates: Vec<f64>,
    /// Transmitters that sent data this slot.
    pub scheduled_transmitters: Vec<usize>,
    /// Dedicated powering nodes, one set per scheduled transmitter (empty
    /// for schemes where only data signals power the PT).
    pub powering_sets: Vec<Vec<usize>>,
    /// The requested beamforming size exceeded `N - 2` and was clamped.
    pub beam_size_clamped: bool,
}

impl SchemeOutcome {
    pub fn secondary_sum_rate(&self) -> f64 {
        self.secondary_rates.iter().sum()
    }
}

pub fn evaluate(scheme: SchemeId, ch: &ChannelRealization, cfg: &SimConfig) -> SchemeOutcome {
    match scheme {
        SchemeId::First => eval_first_psa(ch, cfg),
        SchemeId::Second => eval_second_psa(ch, cfg),
        SchemeId::Third => eval_third_psa(ch, cfg),
        SchemeId::Fourth => eval_fourth_psa(ch, cfg),
        SchemeId::Fifth => eval_fifth_psa(ch, cfg),
    }
}

fn snr_rate(ch: &ChannelRealization, cfg: &SimConfig, tx: usize, interference: f64) -> f64 {
    let rx = ch.topology().pair_of(tx);
    (1.0 + cfg.p_s * ch.secondary_gain(tx, rx) / (cfg.kappa + interference)).log2()
}

/// Transmitter with the strongest link to its own receiver; lowest index on ties.
pub fn best_data_link(ch: &ChannelRealization) -> usize {
    let topo = ch.topology();
    let mut best = 0;
    let mut best_gain = f64::NEG_INFINITY;
    for i in 0..topo.n_pairs() {
        let g = ch.secondary_gain(i, topo.pair_of(i));
        if g > best_gain {
            best = i;
            best_gain = g;
        }
    }
    best
}

/// Secondary nodes other than `tx` and its receiver, ordered by decreasing
/// gain to the PT (lowest index first on ties).
fn ranked_powering_candidates(ch: &ChannelRealization, tx: usize) -> Vec<usize> {
    let topo = ch.topology();
    let rx = topo.pair_of(tx);
    let mut nodes: Vec<usize> = (0..topo.n_secondary())
        .filter(|&n| n != tx && n != rx)
        .collect();
    nodes.sort_by(|&a, &b| {
        ch.gain_to_pt(b)
            .total_cmp(&ch.gain_to_pt(a))
            .then(a.cmp(&b))
    });
    nodes
}

/// Beam set size actually used and whether it was clamped.
fn beam_size(cfg: &SimConfig) -> (usize, bool) {
    let available = cfg.n_secondary - 2;
    let requested = cfg.requested_beam_size();
    (requested.min(available), requested > available)
}

/// Beamformed gain at the PT from Ω, zero when Ω is empty or all-zero.
fn beamformed_gain(ch: &ChannelRealization, omega: &[usize]) -> f64 {
    beamform_weights(ch, omega).map_or(0.0, |w| w.received_gain(ch))
}

/// Transmitters take turns; destinations stay silent.
pub fn eval_first_psa(ch: &ChannelRealization, cfg: &SimConfig) -> SchemeOutcome {
    let pairs = ch.topology().n_pairs();
    let share = cfg.alpha / pairs as f64;
    let gain_sum: f64 = (0..pairs).map(|i| ch.gain_to_pt(i)).sum();
    SchemeOutcome {
        scheme: SchemeId::First,
        e_h1: cfg.p_s * share * cfg.slot_duration * cfg.eta * gain_sum,
        secondary_rates: (0..pairs)
            .map(|i| share * snr_rate(ch, cfg, i, 0.0))
            .collect(),
        scheduled_transmitters: (0..pairs).collect(),
        powering_sets: vec![Vec::new(); pairs],
        beam_size_clamped: false,
    }
}

/// All transmitters at once over the whole first stage.
pub fn eval_second_psa(ch: &ChannelRealization, cfg: &SimConfig) -> SchemeOutcome {
    let topo = ch.topology();
    let pairs = topo.n_pairs();
    let gain_sum: f64 = (0..pairs).map(|i| ch.gain_to_pt(i)).sum();
    let rates = (0..pairs)
        .map(|i| {
            let victim = topo.pair_of(i);
            let interference: f64 = (0..pairs)
                .filter(|&j| j != i)
                .map(|j| {
                    let g = if cfg.paper_literal_interference {
                        ch.secondary_gain(j, topo.pair_of(j))
                    } else {
                        ch.secondary_gain(j, victim)
                    };
                    cfg.p_s * g
                })
                .sum();
            cfg.alpha * snr_rate(ch, cfg, i, interference)
        })
        .collect();
    SchemeOutcome {
        scheme: SchemeId::Second,
        e_h1: cfg.p_s * cfg.alpha * cfg.slot_duration * cfg.eta * gain_sum,
        secondary_rates: rates,
        scheduled_transmitters: (0..pairs).collect(),
        powering_sets: vec![Vec::new(); pairs],
        beam_size_clamped: false,
    }
}

fn single_link_rates(ch: &ChannelRealization, cfg: &SimConfig, k: usize) -> Vec<f64> {
    let mut rates = vec![0.0; ch.topology().n_pairs()];
    rates[k] = cfg.alpha * snr_rate(ch, cfg, k, 0.0);
    rates
}

/// Best data link transmits; the single strongest other node powers the PT.
///
/// With `N = 2` no other node exists and the scheduled receiver powers the PT.
pub fn eval_third_psa(ch: &ChannelRealization, cfg: &SimConfig) -> SchemeOutcome {
    let k = best_data_link(ch);
    let r = ranked_powering_candidates(ch, k)
        .first()
        .copied()
        .unwrap_or_else(|| ch.topology().pair_of(k));
    let e_h1 = cfg.alpha
        * cfg.slot_duration
        * cfg.eta
        * (cfg.p_s * ch.gain_to_pt(k) + cfg.cooperation_power() * ch.gain_to_pt(r));
    SchemeOutcome {
        scheme: SchemeId::Third,
        e_h1,
        secondary_rates: single_link_rates(ch, cfg, k),
        scheduled_transmitters: vec![k],
        powering_sets: vec![vec![r]],
        beam_size_clamped: false,
    }
}

/// Best data link transmits; the top-`K` remaining nodes beamform to the PT.
pub fn eval_fourth_psa(ch: &ChannelRealization, cfg: &SimConfig) -> SchemeOutcome {
    let k = best_data_link(ch);
    let (size, clamped) = beam_size(cfg);
    let omega: Vec<usize> = ranked_powering_candidates(ch, k)
        .into_iter()
        .take(size)
        .collect();
    let e_h1 = cfg.alpha
        * cfg.slot_duration
        * cfg.eta
        * (cfg.p_s * ch.gain_to_pt(k) + cfg.cooperation_power() * beamformed_gain(ch, &omega));
    SchemeOutcome {
        scheme: SchemeId::Fourth,
        e_h1,
        secondary_rates: single_link_rates(ch, cfg, k),
        scheduled_transmitters: vec![k],
        powering_sets: vec![omega],
        beam_size_clamped: clamped,
    }
}

/// Transmitters take turns; during each turn the top-`K` other nodes beamform.
pub fn eval_fifth_psa(ch: &ChannelRealization, cfg: &SimConfig) -> SchemeOutcome {
    let pairs = ch.topology().n_pairs();
    let share = cfg.alpha / pairs as f64;
    let (size, clamped) = beam_size(cfg);
    let mut sets = Vec::with_capacity(pairs);
    let mut received = 0.0;
    for i in 0..pairs {
        let omega: Vec<usize> = ranked_powering_candidates(ch, i)
            .into_iter()
            .take(size)
            .collect();
        received +=
            cfg.p_s * ch.gain_to_pt(i) + cfg.cooperation_power() * beamformed_gain(ch, &omega);
        sets.push(omega);
    }
    SchemeOutcome {
        scheme: SchemeId::Fifth,
        e_h1: share * cfg.slot_duration * cfg.eta * received,
        secondary_rates: (0..pairs)
            .map(|i| share * snr_rate(ch, cfg, i, 0.0))
            .collect(),
        scheduled_transmitters: (0..pairs).collect(),
        powering_sets: sets,
        beam_size_clamped: clamped,
    }
}
