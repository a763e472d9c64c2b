use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use swipt_cr::sim::{run_simulation_with, sweep, RowKind};
use swipt_cr::{run_simulation, SchemeId, SimConfig};

fn direct_only(alpha: f64, seed: u64) -> SimConfig {
    SimConfig {
        n_secondary: 4,
        slots: 4000,
        k_r: 0,
        eta: 0.0,
        alpha,
        seed,
        ..SimConfig::default()
    }
}

/// `((1−α)/2)·E[log₂(1 + 2e_pθ/((1−α)Tκ))]` with θ ~ Exp(1), and its standard error.
fn direct_link_oracle(cfg: &SimConfig, samples: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let snr = 2.0 * cfg.energy_per_hz() / ((1.0 - cfg.alpha) * cfg.slot_duration * cfg.kappa);
    let xs: Vec<f64> = (0..samples)
        .map(|_| {
            let theta: f64 = Exp1.sample(&mut rng);
            (1.0 - cfg.alpha) / 2.0 * (1.0 + snr * theta).log2()
        })
        .collect();
    let n = samples as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn silent_relays_match_direct_link_oracle() {
    for alpha in [0.05, 0.5, 0.9] {
        let cfg = direct_only(alpha, 11);
        let run = run_simulation(&cfg).unwrap();
        let (mean, se) = direct_link_oracle(&cfg, 200_000);
        let combined = (run.primary_rate.std_error().powi(2) + se * se).sqrt();
        assert!(
            (run.primary_rate.mean - mean).abs() <= 2.0 * combined,
            "alpha {alpha}: simulated {} vs oracle {mean} (2 SE = {})",
            run.primary_rate.mean,
            2.0 * combined
        );
        assert_eq!(run.e_h2_mean, 0.0);
    }
}

#[test]
fn different_seeds_agree_statistically() {
    let cfg = SimConfig {
        n_secondary: 10,
        slots: 2000,
        alpha: 0.3,
        scheme: SchemeId::Fourth,
        ..SimConfig::default()
    };
    let a = run_simulation(&SimConfig {
        seed: 1,
        ..cfg.clone()
    })
    .unwrap();
    let b = run_simulation(&SimConfig { seed: 2, ..cfg }).unwrap();
    for (x, y) in [
        (a.primary_rate, b.primary_rate),
        (a.secondary_sum_rate, b.secondary_sum_rate),
    ] {
        let combined = (x.std_error().powi(2) + y.std_error().powi(2)).sqrt();
        assert!((x.mean - y.mean).abs() <= 3.0 * combined);
    }
}

#[test]
fn same_seed_is_bit_identical() {
    let cfg = SimConfig {
        n_secondary: 10,
        slots: 300,
        ..SimConfig::default()
    };
    assert_eq!(run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
}

#[test]
fn energy_is_causal() {
    let cfg = SimConfig {
        n_secondary: 10,
        slots: 300,
        ..SimConfig::default()
    };
    let mut previous = None;
    run_simulation_with(&cfg, |t, carry_in, out| {
        match previous {
            None => assert_eq!((t, carry_in), (0, 0.0)),
            Some(e_h2) => assert_eq!(carry_in, e_h2),
        }
        assert!(out.slot.e_h2 >= 0.0);
        // the current slot's third-stage energy never feeds its own P_p
        let expected_p_p = 2.0 * (cfg.energy_per_hz() + out.scheme.e_h1 + carry_in)
            / ((1.0 - cfg.alpha) * cfg.slot_duration);
        assert!((out.slot.p_p - expected_p_p).abs() <= 1e-12 * expected_p_p);
        previous = Some(out.slot.e_h2);
    })
    .unwrap();
}

#[test]
fn rate_identities_hold_in_aggregate() {
    let cfg = SimConfig {
        n_secondary: 10,
        slots: 500,
        ..SimConfig::default()
    };
    let report = sweep(&cfg, &[0.2, 0.6], &SchemeId::ALL).unwrap();
    for alpha in [0.2, 0.6] {
        let rate = |s| {
            report
                .get(alpha, RowKind::Scheme(s))
                .unwrap()
                .secondary_sum_rate
                .mean
        };
        assert_eq!(rate(SchemeId::First), rate(SchemeId::Fifth));
        assert_eq!(rate(SchemeId::Third), rate(SchemeId::Fourth));
    }
}
