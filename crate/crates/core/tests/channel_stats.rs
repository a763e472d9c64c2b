use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swipt_cr::{draw_realization, FadingParams, NetworkTopology, Node};

const DRAWS: usize = 100_000;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn gains(mean_gain: f64, a: Node, b: Node) -> Vec<f64> {
    let topo = NetworkTopology::new(4).unwrap();
    let params = FadingParams::new(mean_gain).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..DRAWS)
        .map(|_| {
            draw_realization(&mut rng, &topo, &params)
                .gain(a, b)
                .unwrap()
        })
        .collect()
}

#[test]
fn power_gain_is_exponential() {
    // exponential with mean μ: variance μ², sample-variance SE ≈ √(8/n)·μ²
    for (mu, a, b) in [
        (1.0, Node::Pt, Node::Secondary(0)),
        (2.5, Node::Secondary(1), Node::Pd),
        (0.5, Node::Secondary(0), Node::Secondary(3)),
    ] {
        let (mean, var) = mean_var(&gains(mu, a, b));
        let n = DRAWS as f64;
        assert!(
            (mean - mu).abs() <= 3.0 * mu / n.sqrt(),
            "mean {mean} vs {mu}"
        );
        assert!(
            (var - mu * mu).abs() <= 3.0 * (8.0 / n).sqrt() * mu * mu,
            "variance {var} vs {}",
            mu * mu
        );
    }
}

#[test]
fn consecutive_slots_are_uncorrelated() {
    let xs = gains(1.0, Node::Pt, Node::Pd);
    let (mean, var) = mean_var(&xs);
    let lag1 = xs
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum::<f64>()
        / (xs.len() - 1) as f64;
    assert!(
        (lag1 / var).abs() < 0.05,
        "lag-1 correlation {}",
        lag1 / var
    );
}

#[test]
fn distinct_links_are_uncorrelated() {
    let a = gains(1.0, Node::Pt, Node::Secondary(0));
    let b = gains(1.0, Node::Secondary(0), Node::Pd);
    let (ma, va) = mean_var(&a);
    let (mb, vb) = mean_var(&b);
    let cov = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (DRAWS - 1) as f64;
    assert!((cov / (va * vb).sqrt()).abs() < 0.05);
}

#[test]
fn every_link_is_reciprocal() {
    let topo = NetworkTopology::new(10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = draw_realization(&mut rng, &topo, &FadingParams::default());
    let nodes: Vec<Node> = [Node::Pt, Node::Pd]
        .into_iter()
        .chain((0..10).map(Node::Secondary))
        .collect();
    for &a in &nodes {
        for &b in &nodes {
            if a != b {
                assert_eq!(ch.coefficient(a, b).unwrap(), ch.coefficient(b, a).unwrap());
            }
        }
    }
}
