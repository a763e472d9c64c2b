//! Second and third protocol stages: PT transmit power, MMSE relay gain
//! selection over all secondary nodes, relay power normalization, energy
//! re-harvested by the PT while the relays forward, and the MRC primary rate.
//!
//! The cascaded PT→relay→destination channel is `h_n = h(s_n, pd)·h(p, s_n)`.
//! With PT power `P_p` and relayed noise covariance `R_vv = diag(θ(p, s_n)·κ)`
//! the destination MSE of a gain vector `g` is
//!
//! ```text
//! MSE(g) = P_p − g^†h̃ − h̃^†g + g^†Rg + κ,   h̃ = P_p h,   R = P_p h h^† + R_vv
//!        = MSE_min + ‖L^†g − L⁻¹h̃‖²,        R = L L^†
//! ```
//!
//! so relay selection is a sparse least-squares problem in `L^†`.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::linalg::{
    cholesky_with_tol, dot, norm_sqr, omp_with, sub_vec, CMatrix, CVector, CholeskyFactor,
    LinalgError, OmpOptions, DEFAULT_HERMITIAN_TOL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelayError {
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("slot duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("energy ledger entry {name} must be finite and >= 0, got {value}")]
    NegativeEnergy { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("gain vector is zero; power scaling is undefined")]
    ZeroGain,
    #[error("relay sparsity {k} out of range 1..={n}")]
    InvalidSparsity { k: usize, n: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// PT energy available in one slot, all J/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    /// Constant supply.
    pub e_p: f64,
    /// Harvested during this slot's first stage.
    pub e_h1: f64,
    /// Harvested during the previous slot's third stage.
    pub e_h2_carry: f64,
}

impl EnergyLedger {
    pub fn new(e_p: f64, e_h1: f64, e_h2_carry: f64) -> Result<Self, RelayError> {
        for (name, value) in [("e_p", e_p), ("e_h1", e_h1), ("e_h2_carry", e_h2_carry)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(RelayError::NegativeEnergy { name, value });
            }
        }
        Ok(Self {
            e_p,
            e_h1,
            e_h2_carry,
        })
    }

    pub fn total(&self) -> f64 {
        self.e_p + self.e_h1 + self.e_h2_carry
    }
}

/// PT transmit power (W/Hz) when the whole ledger is spent over the second
/// stage, which lasts `(1−α)T/2`.
pub fn pt_power(ledger: &EnergyLedger, alpha: f64, slot_duration: f64) -> Result<f64, RelayError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(RelayError::InvalidAlpha(alpha));
    }
    if !(slot_duration > 0.0) {
        return Err(RelayError::InvalidDuration(slot_duration));
    }
    Ok(2.0 * ledger.total() / ((1.0 - alpha) * slot_duration))
}

/// Relay-selection problem for one slot.
#[derive(Debug, Clone)]
pub struct MmseSystem {
    /// Cascaded coefficients `h(s_n, pd)·h(p, s_n)`.
    pub h: CVector,
    /// `P_p · h`.
    pub h_tilde: CVector,
    pub r: CMatrix,
    /// Diagonal of `R_vv`, `θ(p, s_n)·κ`.
    pub r_vv: Vec<f64>,
    pub chol: CholeskyFactor,
    /// `L⁻¹ h̃`, the OMP measurement vector.
    pub whitened_target: CVector,
    pub p_p: f64,
    pub kappa: f64,
}

impl MmseSystem {
    pub fn dim(&self) -> usize {
        self.h.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MmseOptions {
    /// Use `√P_p h h^†` in `R` instead of `P_p h h^†`.
    pub paper_literal_r: bool,
    pub hermitian_tol: Option<f64>,
}

pub fn build_mmse_system(
    ch: &ChannelRealization,
    p_p: f64,
    kappa: f64,
) -> Result<MmseSystem, RelayError> {
    build_mmse_system_with(ch, p_p, kappa, &MmseOptions::default())
}

pub fn build_mmse_system_with(
    ch: &ChannelRealization,
    p_p: f64,
    kappa: f64,
    opts: &MmseOptions,
) -> Result<MmseSystem, RelayError> {
    if !(p_p > 0.0) || !p_p.is_finite() {
        return Err(RelayError::NonPositive {
            name: "P_p",
            value: p_p,
        });
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(RelayError::NonPositive {
            name: "kappa",
            value: kappa,
        });
    }
    let n = ch.topology().n_secondary();
    let h: CVector = (0..n)
        .map(|i| ch.secondary_pd(i) * ch.pt_secondary(i))
        .collect();
    let h_tilde: CVector = h.iter().map(|x| x * p_p).collect();
    let r_vv: Vec<f64> = (0..n).map(|i| ch.gain_to_pt(i) * kappa).collect();

    let outer_scale = if opts.paper_literal_r {
        p_p.sqrt()
    } else {
        p_p
    };
    let mut r = CMatrix::outer_scaled(&h, outer_scale);
    for (i, v) in r_vv.iter().enumerate() {
        r[(i, i)] += Complex64::new(*v, 0.0);
    }
    let chol = cholesky_with_tol(&r, opts.hermitian_tol.unwrap_or(DEFAULT_HERMITIAN_TOL))?;
    let whitened_target = chol.solve_lower(&h_tilde)?;
    Ok(MmseSystem {
        h,
        h_tilde,
        r,
        r_vv,
        chol,
        whitened_target,
        p_p,
        kappa,
    })
}

/// Unconstrained MMSE gains `g* = R⁻¹ h̃`.
pub fn dense_mmse_gains(sys: &MmseSystem) -> Result<CVector, RelayError> {
    Ok(sys.chol.solve(&sys.h_tilde)?)
}

/// MSE split into its gain-independent and gain-dependent parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBreakdown {
    /// Evaluated directly from the quadratic form.
    pub total: f64,
    /// `P_p − h̃^†R⁻¹h̃ + κ`.
    pub min: f64,
    /// `‖L^†g − L⁻¹h̃‖²`.
    pub excess: f64,
}

pub fn mse(g: &[Complex64], sys: &MmseSystem) -> Result<MseBreakdown, RelayError> {
    if g.len() != sys.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: sys.dim(),
            found: g.len(),
        }
        .into());
    }
    let cross = dot(g, &sys.h_tilde).re;
    let quad = dot(g, &sys.r.mul_vec(g)).re;
    let total = sys.p_p - 2.0 * cross + quad + sys.kappa;
    let excess = norm_sqr(&sub_vec(&sys.chol.adjoint_mul_vec(g), &sys.whitened_target));
    let min = sys.p_p - norm_sqr(&sys.whitened_target) + sys.kappa;
    Ok(MseBreakdown { total, min, excess })
}

/// Sparse relay gains from OMP on `(L^†, L⁻¹h̃)` with `k_r` nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGains {
    pub g: CVector,
    pub support: Vec<usize>,
    /// `‖L^†g − L⁻¹h̃‖` after the final iteration.
    pub residual_norm: f64,
    pub rank_deficient: bool,
}

pub fn sparse_relay_select(sys: &MmseSystem, k_r: usize) -> Result<SparseGains, RelayError> {
    sparse_relay_select_with(sys, k_r, &OmpOptions::default())
}

pub fn sparse_relay_select_with(
    sys: &MmseSystem,
    k_r: usize,
    opts: &OmpOptions,
) -> Result<SparseGains, RelayError> {
    let n = sys.dim();
    if k_r == 0 || k_r > n {
        return Err(RelayError::InvalidSparsity { k: k_r, n });
    }
    let a = sys.chol.matrix().adjoint();
    let sol = omp_with(&a, &sys.whitened_target, k_r, opts)?;
    Ok(SparseGains {
        g: sol.to_dense(),
        residual_norm: sol.final_residual_norm(),
        rank_deficient: sol.rank_deficient,
        support: sol.support,
    })
}

/// Relay gains after power scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    pub g: CVector,
    pub support: Vec<usize>,
    /// Scale factor ϱ applied to the unscaled gains.
    pub rho: f64,
}

impl GainVector {
    /// All relays silent.
    pub fn silent(n: usize) -> Self {
        Self {
            g: vec![Complex64::new(0.0, 0.0); n],
            support: Vec::new(),
            rho: 0.0,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.g.iter().all(|x| *x == Complex64::new(0.0, 0.0))
    }
}

/// Average total relay transmit power `g^†(P_p H H^† + κI)g`, where `H`
/// holds `h(p, s_n)`.
pub fn relay_transmit_power(g: &[Complex64], ch: &ChannelRealization, p_p: f64, kappa: f64) -> f64 {
    let h_ps: CVector = (0..g.len()).map(|i| ch.pt_secondary(i)).collect();
    p_p * dot(g, &h_ps).norm_sqr() + kappa * norm_sqr(g)
}

/// Scales `g` so the relays spend exactly `power` on average.
pub fn normalize_gains(
    g: &[Complex64],
    support: &[usize],
    ch: &ChannelRealization,
    p_p: f64,
    power: f64,
    kappa: f64,
) -> Result<GainVector, RelayError> {
    let denom = relay_transmit_power(g, ch, p_p, kappa);
    if !(denom > 0.0) {
        return Err(RelayError::ZeroGain);
    }
    let rho = (power / denom).sqrt();
    Ok(GainVector {
        g: g.iter().map(|x| x * rho).collect(),
        support: support.to_vec(),
        rho,
    })
}

/// Energy (J/Hz) the silent PT harvests from the relay transmissions during
/// the third stage.
pub fn harvest_third_stage(
    gain: &GainVector,
    ch: &ChannelRealization,
    p_p: f64,
    alpha: f64,
    slot_duration: f64,
    eta: f64,
    kappa: f64,
) -> f64 {
    // loop-back channel PT→s_n→PT and relayed noise θ(s_n, p)·κ
    let loop_back: Complex64 = gain
        .g
        .iter()
        .enumerate()
        .map(|(n, g)| g.conj() * ch.pt_secondary(n) * ch.pt_secondary(n))
        .sum();
    let noise: f64 = gain
        .g
        .iter()
        .enumerate()
        .map(|(n, g)| g.norm_sqr() * ch.gain_to_pt(n) * kappa)
        .sum();
    let received = loop_back.norm_sqr() * p_p + noise;
    received * (1.0 - alpha) / 2.0 * slot_duration * eta
}

/// Primary rate (bits/s/Hz) with MRC of the direct and relayed branches.
///
/// MRC yields the sum of branch SNRs. The relayed branch carries `g^†h·x`
/// with `E|x|² = P_p` against noise `κ + g^†R_vv g`. With `literal_rate` the
/// `P_p` factor on the relayed branch is dropped.
pub fn primary_rate(
    ch: &ChannelRealization,
    gain: &GainVector,
    p_p: f64,
    kappa: f64,
    alpha: f64,
    literal_rate: bool,
) -> f64 {
    let direct = p_p * ch.pt_pd().norm_sqr() / kappa;
    let mut relayed_signal = Complex64::new(0.0, 0.0);
    let mut relayed_noise = kappa;
    for (n, g) in gain.g.iter().enumerate() {
        let theta_ps = ch.gain_to_pt(n);
        relayed_signal += g.conj() * ch.secondary_pd(n) * ch.pt_secondary(n);
        relayed_noise += g.norm_sqr() * theta_ps * kappa;
    }
    let signal_scale = if literal_rate { 1.0 } else { p_p };
    let relayed = signal_scale * relayed_signal.norm_sqr() / relayed_noise;
    (1.0 - alpha) / 2.0 * (1.0 + direct + relayed).log2()
}

/// Rate of a PT that spends `e_p` over the whole slot with no cooperation.
pub fn pt_alone_rate(ch: &ChannelRealization, e_p: f64, slot_duration: f64, kappa: f64) -> f64 {
    (1.0 + e_p / slot_duration * ch.pt_pd().norm_sqr() / kappa).log2()
}

/// Per-slot primary-side result.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotResult {
    /// PT transmit power, W/Hz.
    pub p_p: f64,
    pub primary_rate: f64,
    pub pt_alone_rate: f64,
    /// Energy harvested during the third stage, carried into the next slot.
    pub e_h2: f64,
    /// MSE of the unscaled OMP gains; `None` when no relay system was formed.
    pub mse: Option<MseBreakdown>,
    /// MSE of the power-scaled gains actually transmitted.
    pub mse_scaled: Option<MseBreakdown>,
    pub gain: GainVector,
    /// The relay system was degenerate and relays stayed silent.
    pub degenerate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{NetworkTopology, Node};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Two-node realization where secondary node 0 has unit links to PT and
    /// PD and node 1 is cut off from the PT.
    fn scalar_like(hpd: Complex64) -> ChannelRealization {
        let topo = NetworkTopology::new(2).unwrap();
        ChannelRealization::from_fn(topo, |a, b| match (a, b) {
            (Node::Pt, Node::Pd) => hpd,
            (Node::Pt, Node::Secondary(0)) | (Node::Pd, Node::Secondary(0)) => c(1.0, 0.0),
            (Node::Pt, Node::Secondary(1)) => c(1e-3, 0.0),
            _ => c(0.0, 0.0),
        })
    }

    #[test]
    fn pt_power_examples() {
        let ledger = EnergyLedger::new(50e-12, 0.0, 0.0).unwrap();
        let p = pt_power(&ledger, 0.0, 1e-3).unwrap();
        assert!((p - 100e-9).abs() < 1e-20);
        let doubled = EnergyLedger::new(100e-12, 0.0, 0.0).unwrap();
        assert!((pt_power(&doubled, 0.0, 1e-3).unwrap() - 2.0 * p).abs() < 1e-20);
        assert!((pt_power(&ledger, 0.5, 1e-3).unwrap() - 2.0 * p).abs() < 1e-20);
        assert!(matches!(
            pt_power(&ledger, 1.0, 1e-3),
            Err(RelayError::InvalidAlpha(_))
        ));
        assert!(EnergyLedger::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn scalar_system_by_hand() {
        let topo = NetworkTopology::new(2).unwrap();
        // node 1 relays nothing but keeps R positive definite
        let ch = ChannelRealization::from_fn(topo, |a, b| match (a, b) {
            (Node::Pt, Node::Secondary(0)) | (Node::Pd, Node::Secondary(0)) => c(1.0, 0.0),
            (Node::Pt, Node::Secondary(1)) => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let sys = build_mmse_system(&ch, 1.0, 1.0).unwrap();
        assert_eq!(sys.r[(0, 0)], c(2.0, 0.0));
        assert!((sys.chol.matrix()[(0, 0)].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sys.h_tilde[0], c(1.0, 0.0));
        let g = dense_mmse_gains(&sys).unwrap();
        assert!((g[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(g[1].norm() < 1e-15);
        let sparse = sparse_relay_select(&sys, 1).unwrap();
        assert_eq!(sparse.support, vec![0]);
        assert!((sparse.g[0] - g[0]).norm() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_relay_channels() {
        let topo = NetworkTopology::new(2).unwrap();
        let ch = ChannelRealization::from_fn(topo, |_, _| c(0.0, 0.0));
        assert!(matches!(
            build_mmse_system(&ch, 1.0, 1.0),
            Err(RelayError::Linalg(LinalgError::NotPositiveDefinite { .. }))
        ));
        assert!(build_mmse_system(&ch, 0.0, 1.0).is_err());
    }

    #[test]
    fn mse_zero_gain() {
        let ch = scalar_like(c(1.0, 0.0));
        let sys = build_mmse_system(&ch, 2.0, 0.5).unwrap();
        let m = mse(&[c(0.0, 0.0); 2], &sys).unwrap();
        assert_eq!(m.total, 2.5);
        assert!((m.excess - norm_sqr(&sys.whitened_target)).abs() < 1e-15);
        assert!(mse(&[c(0.0, 0.0)], &sys).is_err());
    }

    #[test]
    fn mse_excess_vanishes_at_optimum() {
        let ch = scalar_like(c(1.0, 0.0));
        let sys = build_mmse_system(&ch, 2.0, 0.5).unwrap();
        let g = dense_mmse_gains(&sys).unwrap();
        let m = mse(&g, &sys).unwrap();
        assert!(m.excess <= 1e-10 * (sys.p_p + sys.kappa));
        assert!((m.total - m.min).abs() <= 1e-12);
    }

    #[test]
    fn zero_target_gives_zero_gains() {
        let topo = NetworkTopology::new(2).unwrap();
        // links to PD are zero so the cascaded channel vanishes
        let ch = ChannelRealization::from_fn(topo, |a, _| match a {
            Node::Pt => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let sys = build_mmse_system(&ch, 1.0, 1.0).unwrap();
        assert!(dense_mmse_gains(&sys)
            .unwrap()
            .iter()
            .all(|x| x.norm() == 0.0));
        let sparse = sparse_relay_select(&sys, 2).unwrap();
        assert!(sparse.support.is_empty());
    }

    #[test]
    fn sparse_select_rejects_bad_sparsity() {
        let ch = scalar_like(c(1.0, 0.0));
        let sys = build_mmse_system(&ch, 1.0, 1.0).unwrap();
        assert!(matches!(
            sparse_relay_select(&sys, 0),
            Err(RelayError::InvalidSparsity { .. })
        ));
        assert!(matches!(
            sparse_relay_select(&sys, 3),
            Err(RelayError::InvalidSparsity { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        let topo = NetworkTopology::new(2).unwrap();
        let ch = ChannelRealization::from_fn(topo, |a, b| match (a, b) {
            (Node::Pt, Node::Secondary(0)) => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let g = [c(1.0, 0.0), c(0.0, 0.0)];
        // denominator = P_p·|1|² + κ·1 = 2
        let out = normalize_gains(&g, &[0], &ch, 1.0, 2.0, 1.0).unwrap();
        assert!((out.rho - 1.0).abs() < 1e-15);
        let again = normalize_gains(&out.g, &[0], &ch, 1.0, 2.0, 1.0).unwrap();
        assert!((again.rho - 1.0).abs() < 1e-15);
        assert_eq!(
            normalize_gains(&[c(0.0, 0.0); 2], &[], &ch, 1.0, 2.0, 1.0),
            Err(RelayError::ZeroGain)
        );
    }

    #[test]
    fn harvest_edge_cases() {
        let ch = scalar_like(c(1.0, 0.0));
        let silent = GainVector::silent(2);
        assert_eq!(
            harvest_third_stage(&silent, &ch, 1e-7, 0.3, 1e-3, 0.8, 1e-8),
            0.0
        );
        let gain = GainVector {
            g: vec![c(1.0, 0.5), c(0.0, 0.0)],
            support: vec![0],
            rho: 1.0,
        };
        assert!(harvest_third_stage(&gain, &ch, 1e-7, 0.3, 1e-3, 0.8, 1e-8) > 0.0);
        // the third stage has zero length in the α → 1 limit
        assert_eq!(
            harvest_third_stage(&gain, &ch, 1e-7, 1.0, 1e-3, 0.8, 1e-8),
            0.0
        );
    }

    #[test]
    fn primary_rate_direct_link_only() {
        let ch = scalar_like(c(2.0, 0.0));
        let silent = GainVector::silent(2);
        let r = primary_rate(&ch, &silent, 1e-7, 1e-8, 0.2, false);
        assert!((r - 0.4 * (1.0f64 + 40.0).log2()).abs() < 1e-14);
        let dead = scalar_like(c(0.0, 0.0));
        assert_eq!(primary_rate(&dead, &silent, 1e-7, 1e-8, 0.2, false), 0.0);
    }

    #[test]
    fn primary_rate_scalar_hand_calculation() {
        // one relay with unit links, P_p = 1, κ = 1, direct gain 1
        let ch = scalar_like(c(1.0, 0.0));
        let gain = GainVector {
            g: vec![c(0.5, 0.0), c(0.0, 0.0)],
            support: vec![0],
            rho: 1.0,
        };
        // direct SNR 1; relayed: |0.5|² / (1 + 0.25·1·1) = 0.2
        let r = primary_rate(&ch, &gain, 1.0, 1.0, 0.0, false);
        assert!((r - 0.5 * 2.2f64.log2()).abs() < 1e-14);
        let literal = primary_rate(&ch, &gain, 4.0, 1.0, 0.0, true);
        // direct 4, relayed unscaled 0.2
        assert!((literal - 0.5 * 5.2f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn pt_alone_examples() {
        let ch = scalar_like(c(1.0, 0.0));
        let r = pt_alone_rate(&ch, 50e-12, 1e-3, 1e-8);
        assert!((r - 6f64.log2()).abs() < 1e-12);
        assert!((r - 2.585).abs() < 1e-3);
        assert_eq!(
            pt_alone_rate(&scalar_like(c(0.0, 0.0)), 50e-12, 1e-3, 1e-8),
            0.0
        );
        let doubled = pt_alone_rate(&ch, 100e-12, 1e-3, 1e-8);
        assert!(doubled > r && doubled - r <= 1.0);
    }

    #[test]
    fn literal_r_uses_square_root_of_power() {
        let ch = scalar_like(c(1.0, 0.0));
        let sys = build_mmse_system_with(
            &ch,
            4.0,
            1.0,
            &MmseOptions {
                paper_literal_r: true,
                ..MmseOptions::default()
            },
        )
        .unwrap();
        // √4·|1|² + θ(p,s₀)·κ
        assert_eq!(sys.r[(0, 0)], c(3.0, 0.0));
    }
}
