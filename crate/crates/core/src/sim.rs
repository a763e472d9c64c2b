//! Slotted-time simulation: per-slot three-stage pipeline, cross-slot energy
//! carryover, throughput aggregation, and α/scheme sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_realization, ChannelRealization};
use crate::config::{ConfigError, SimConfig};
use crate::relay::{
    build_mmse_system_with, harvest_third_stage, mse, normalize_gains, primary_rate, pt_alone_rate,
    pt_power, sparse_relay_select_with, EnergyLedger, GainVector, MmseOptions, RelayError,
    SlotResult,
};
use crate::schemes::{evaluate, SchemeId, SchemeOutcome};

/// Random stream type used by every simulation replica.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Relay(#[from] RelayError),
    #[error("alpha grid value {0} outside [0, 1)")]
    InvalidAlpha(f64),
    #[error("sweep needs at least one alpha value and one scheme")]
    EmptySweep,
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; derives independent seeds for sweep cells and replicas.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutput {
    pub slot: SlotResult,
    pub scheme: SchemeOutcome,
    /// Third-stage energy to spend in the next slot, J/Hz.
    pub next_carry: f64,
}

/// Draws one realization and runs the three stages on it.
pub fn run_slot(
    carry_e_h2: f64,
    cfg: &SimConfig,
    rng: &mut SimRng,
) -> Result<SlotOutput, SimError> {
    let ch = draw_realization(rng, &cfg.topology(), &cfg.fading());
    run_slot_on(&ch, carry_e_h2, cfg)
}

/// Runs the three stages on a given realization.
pub fn run_slot_on(
    ch: &ChannelRealization,
    carry_e_h2: f64,
    cfg: &SimConfig,
) -> Result<SlotOutput, SimError> {
    let outcome = evaluate(cfg.scheme, ch, cfg);
    let ledger = EnergyLedger::new(cfg.energy_per_hz(), outcome.e_h1, carry_e_h2)?;
    let p_p = pt_power(&ledger, cfg.alpha, cfg.slot_duration)?;
    let n = cfg.n_secondary;

    let mut gain = GainVector::silent(n);
    let mut mse_pre = None;
    let mut mse_post = None;
    let mut degenerate = false;

    if cfg.k_r > 0 {
        let opts = MmseOptions {
            paper_literal_r: cfg.paper_literal_r,
            hermitian_tol: Some(cfg.hermitian_tol),
        };
        match build_mmse_system_with(ch, p_p, cfg.kappa, &opts) {
            Ok(sys) => {
                let sparse = sparse_relay_select_with(&sys, cfg.k_r, &cfg.omp_options())?;
                mse_pre = Some(mse(&sparse.g, &sys)?);
                match normalize_gains(
                    &sparse.g,
                    &sparse.support,
                    ch,
                    p_p,
                    cfg.cooperation_power(),
                    cfg.kappa,
                ) {
                    Ok(scaled) => {
                        mse_post = Some(mse(&scaled.g, &sys)?);
                        gain = scaled;
                    }
                    Err(RelayError::ZeroGain) => degenerate = true,
                    Err(e) => return Err(e.into()),
                }
            }
            // P_p = 0 or a singular covariance: relays stay silent for this slot
            Err(RelayError::NonPositive { .. }) | Err(RelayError::Linalg(_)) => degenerate = true,
            Err(e) => return Err(e.into()),
        }
    }

    let e_h2 = harvest_third_stage(
        &gain,
        ch,
        p_p,
        cfg.alpha,
        cfg.slot_duration,
        cfg.eta,
        cfg.kappa,
    );
    let slot = SlotResult {
        p_p,
        primary_rate: primary_rate(ch, &gain, p_p, cfg.kappa, cfg.alpha, cfg.paper_literal_rate),
        pt_alone_rate: pt_alone_rate(ch, cfg.energy_per_hz(), cfg.slot_duration, cfg.kappa),
        e_h2,
        mse: mse_pre,
        mse_scaled: mse_post,
        gain,
        degenerate,
    };
    Ok(SlotOutput {
        slot,
        scheme: outcome,
        next_carry: e_h2,
    })
}

/// Sample mean with a 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.ci95 / 1.96
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        let ci95 = if self.n > 1 {
            let sd = (self.m2 / (self.n - 1) as f64).sqrt();
            1.96 * sd / (self.n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            ci95,
        }
    }
}

/// Time-averaged statistics of one run.
///
/// Confidence intervals treat slots as independent; the energy carryover
/// couples neighbouring slots only weakly.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub alpha: f64,
    pub scheme: SchemeId,
    pub slots: usize,
    pub primary_rate: Estimate,
    pub secondary_sum_rate: Estimate,
    pub pt_alone_rate: Estimate,
    pub e_h1_mean: f64,
    pub e_h2_mean: f64,
    pub p_p_mean: f64,
    pub degenerate_slots: usize,
}

/// Runs `cfg.slots` slots from `cfg.seed`.
pub fn run_simulation(cfg: &SimConfig) -> Result<RunSummary, SimError> {
    run_simulation_with(cfg, |_, _, _| {})
}

/// As [`run_simulation`], calling `observe(slot_index, carry_in, output)`
/// after every slot.
pub fn run_simulation_with(
    cfg: &SimConfig,
    mut observe: impl FnMut(usize, f64, &SlotOutput),
) -> Result<RunSummary, SimError> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut carry = 0.0;
    let (mut primary, mut secondary, mut alone) = (
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
    );
    let (mut e_h1, mut e_h2, mut p_p) = (
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
    );
    let mut degenerate_slots = 0;

    for t in 0..cfg.slots {
        let out = run_slot(carry, cfg, &mut rng)?;
        observe(t, carry, &out);
        primary.push(out.slot.primary_rate);
        secondary.push(out.scheme.secondary_sum_rate());
        alone.push(out.slot.pt_alone_rate);
        e_h1.push(out.scheme.e_h1);
        e_h2.push(out.slot.e_h2);
        p_p.push(out.slot.p_p);
        degenerate_slots += usize::from(out.slot.degenerate);
        carry = out.next_carry;
    }

    Ok(RunSummary {
        alpha: cfg.alpha,
        scheme: cfg.scheme,
        slots: cfg.slots,
        primary_rate: primary.estimate(),
        secondary_sum_rate: secondary.estimate(),
        pt_alone_rate: alone.estimate(),
        e_h1_mean: e_h1.mean,
        e_h2_mean: e_h2.mean,
        p_p_mean: p_p.mean,
        degenerate_slots,
    })
}

/// Runs `replicas` independent copies of `cfg` with derived seeds, in parallel.
pub fn run_replicas(cfg: &SimConfig, replicas: usize) -> Result<Vec<RunSummary>, SimError> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            run_simulation(&SimConfig {
                seed: derive_seed(cfg.seed, r),
                ..cfg.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKind {
    Scheme(SchemeId),
    /// Non-cooperative PT spending `E_p` over the whole slot.
    PtAlone,
}

impl RowKind {
    pub fn label(&self) -> &'static str {
        match self {
            RowKind::Scheme(id) => id.name(),
            RowKind::PtAlone => "pt_alone",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub alpha: f64,
    pub kind: RowKind,
    pub primary_rate: Estimate,
    pub secondary_sum_rate: Estimate,
    pub e_h1_mean: f64,
    pub e_h2_mean: f64,
    pub p_p_mean: f64,
    pub pt_alone_rate_mean: f64,
}

impl ReportRow {
    pub fn from_run(run: &RunSummary) -> Self {
        Self {
            alpha: run.alpha,
            kind: RowKind::Scheme(run.scheme),
            primary_rate: run.primary_rate,
            secondary_sum_rate: run.secondary_sum_rate,
            e_h1_mean: run.e_h1_mean,
            e_h2_mean: run.e_h2_mean,
            p_p_mean: run.p_p_mean,
            pt_alone_rate_mean: run.pt_alone_rate.mean,
        }
    }

    fn baseline(run: &RunSummary, cfg: &SimConfig) -> Self {
        Self {
            alpha: run.alpha,
            kind: RowKind::PtAlone,
            primary_rate: run.pt_alone_rate,
            secondary_sum_rate: Estimate::default(),
            e_h1_mean: 0.0,
            e_h2_mean: 0.0,
            p_p_mean: cfg.energy_per_hz() / cfg.slot_duration,
            pt_alone_rate_mean: run.pt_alone_rate.mean,
        }
    }
}

/// Rows ordered by α ascending, then scheme order, PT-alone baseline last.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThroughputReport {
    pub rows: Vec<ReportRow>,
}

impl ThroughputReport {
    pub fn single(run: &RunSummary) -> Self {
        Self {
            rows: vec![ReportRow::from_run(run)],
        }
    }

    pub fn get(&self, alpha: f64, kind: RowKind) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.alpha == alpha && r.kind == kind)
    }

    pub fn alphas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.alpha) {
                out.push(r.alpha);
            }
        }
        out
    }

    fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.kind.cmp(&b.kind)));
    }
}

/// Runs every (α, scheme) cell. All schemes at one α share a derived seed,
/// so they see identical channel sequences.
pub fn sweep(
    cfg: &SimConfig,
    alpha_grid: &[f64],
    schemes: &[SchemeId],
) -> Result<ThroughputReport, SimError> {
    if alpha_grid.is_empty() || schemes.is_empty() {
        return Err(SimError::EmptySweep);
    }
    if let Some(&bad) = alpha_grid.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(SimError::InvalidAlpha(bad));
    }
    cfg.validate()?;

    let mut unique_schemes = schemes.to_vec();
    unique_schemes.sort();
    unique_schemes.dedup();

    let cells: Vec<(usize, f64, SchemeId)> = alpha_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| unique_schemes.iter().map(move |&s| (i, a, s)))
        .collect();

    let runs: Vec<RunSummary> = cells
        .par_iter()
        .map(|&(i, alpha, scheme)| {
            run_simulation(&SimConfig {
                alpha,
                scheme,
                seed: derive_seed(cfg.seed, i as u64),
                ..cfg.clone()
            })
        })
        .collect::<Result<_, _>>()?;

    let mut report = ThroughputReport::default();
    for (idx, run) in runs.iter().enumerate() {
        report.rows.push(ReportRow::from_run(run));
        let (i, _, _) = cells[idx];
        let last_of_alpha = cells.get(idx + 1).is_none_or(|&(j, _, _)| j != i);
        if last_of_alpha {
            report.rows.push(ReportRow::baseline(run, cfg));
        }
    }
    report.sort();
    Ok(report)
}

/// `a, a+step, ..., ≤ b`, rounded to 12 decimals to keep CSV output tidy.
pub fn alpha_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return Vec::new();
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect()
}
