//! Quasi-static Rayleigh block fading over the primary pair and all secondary nodes.
//!
//! Secondary nodes are indexed from zero: transmitters are `0..N/2` and the
//! receiver paired with transmitter `m` is `m + N/2`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("number of secondary nodes must be even and at least 2, got {0}")]
    InvalidTopology(usize),
    #[error("mean channel gain must be positive and finite, got {0}")]
    InvalidMeanGain(f64),
    #[error("unknown node {0:?}")]
    UnknownNode(Node),
    #[error("self-channel {0:?} is undefined")]
    SelfChannel(Node),
}

/// A node of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    /// Primary transmitter.
    Pt,
    /// Primary destination.
    Pd,
    /// Secondary node, zero-based.
    Secondary(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkTopology {
    n_secondary: usize,
}

impl NetworkTopology {
    pub fn new(n_secondary: usize) -> Result<Self, ChannelError> {
        if n_secondary < 2 || !n_secondary.is_multiple_of(2) {
            return Err(ChannelError::InvalidTopology(n_secondary));
        }
        Ok(Self { n_secondary })
    }

    pub fn n_secondary(&self) -> usize {
        self.n_secondary
    }

    /// Number of secondary transmitter-receiver pairs, `N/2`.
    pub fn n_pairs(&self) -> usize {
        self.n_secondary / 2
    }

    /// Partner of secondary node `m`: `m + N/2` for transmitters and the
    /// inverse for receivers.
    pub fn pair_of(&self, m: usize) -> usize {
        let half = self.n_pairs();
        assert!(m < self.n_secondary, "secondary node {m} out of range");
        if m < half {
            m + half
        } else {
            m - half
        }
    }

    pub fn node_count(&self) -> usize {
        self.n_secondary + 2
    }

    fn index_of(&self, node: Node) -> Result<usize, ChannelError> {
        match node {
            Node::Pt => Ok(0),
            Node::Pd => Ok(1),
            Node::Secondary(m) if m < self.n_secondary => Ok(m + 2),
            other => Err(ChannelError::UnknownNode(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    mean_gain: f64,
}

impl FadingParams {
    pub fn new(mean_gain: f64) -> Result<Self, ChannelError> {
        if !(mean_gain > 0.0) || !mean_gain.is_finite() {
            return Err(ChannelError::InvalidMeanGain(mean_gain));
        }
        Ok(Self { mean_gain })
    }

    pub fn mean_gain(&self) -> f64 {
        self.mean_gain
    }
}

impl Default for FadingParams {
    fn default() -> Self {
        Self { mean_gain: 1.0 }
    }
}

/// One slot's channel coefficients for every unordered node pair.
///
/// Coefficients are stored once per pair, so `h(a, b) == h(b, a)` holds
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    topology: NetworkTopology,
    coeffs: Vec<Complex64>,
}

impl ChannelRealization {
    /// Builds a realization from an explicit coefficient function, called
    /// once per unordered pair `(a, b)` with `a` preceding `b` in the order
    /// `Pt, Pd, Secondary(0), ...`.
    pub fn from_fn(topology: NetworkTopology, mut f: impl FnMut(Node, Node) -> Complex64) -> Self {
        let n = topology.node_count();
        let mut coeffs = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in (a + 1)..n {
                coeffs.push(f(node_at(a), node_at(b)));
            }
        }
        Self { topology, coeffs }
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn coefficient(&self, a: Node, b: Node) -> Result<Complex64, ChannelError> {
        let ia = self.topology.index_of(a)?;
        let ib = self.topology.index_of(b)?;
        if ia == ib {
            return Err(ChannelError::SelfChannel(a));
        }
        Ok(self.coeffs[self.packed(ia, ib)])
    }

    /// Channel gain `|h(a, b)|²`.
    pub fn gain(&self, a: Node, b: Node) -> Result<f64, ChannelError> {
        self.coefficient(a, b).map(|h| h.norm_sqr())
    }

    /// `h(p, s_n)`. Panics if `n` is out of range.
    pub fn pt_secondary(&self, n: usize) -> Complex64 {
        self.by_index(0, n + 2)
    }

    /// `h(s_n, pd)`. Panics if `n` is out of range.
    pub fn secondary_pd(&self, n: usize) -> Complex64 {
        self.by_index(1, n + 2)
    }

    /// `h(p, pd)`.
    pub fn pt_pd(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `h(s_i, s_j)` for `i != j`. Panics otherwise.
    pub fn secondary_secondary(&self, i: usize, j: usize) -> Complex64 {
        assert_ne!(i, j, "self-channel is undefined");
        self.by_index(i + 2, j + 2)
    }

    /// `θ(s_n, p)`.
    pub fn gain_to_pt(&self, n: usize) -> f64 {
        self.pt_secondary(n).norm_sqr()
    }

    /// `θ(s_i, s_j)`.
    pub fn secondary_gain(&self, i: usize, j: usize) -> f64 {
        self.secondary_secondary(i, j).norm_sqr()
    }

    fn by_index(&self, a: usize, b: usize) -> Complex64 {
        let n = self.topology.node_count();
        assert!(a < n && b < n && a != b, "node index out of range");
        self.coeffs[self.packed(a, b)]
    }

    fn packed(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let n = self.topology.node_count();
        a * n - a * (a + 1) / 2 + (b - a - 1)
    }
}

fn node_at(index: usize) -> Node {
    match index {
        0 => Node::Pt,
        1 => Node::Pd,
        m => Node::Secondary(m - 2),
    }
}

/// Draws an i.i.d. circularly-symmetric complex Gaussian coefficient with
/// variance `mean_gain` for every unordered node pair.
pub fn draw_realization<R: Rng + ?Sized>(
    rng: &mut R,
    topology: &NetworkTopology,
    params: &FadingParams,
) -> ChannelRealization {
    let scale = (params.mean_gain / 2.0).sqrt();
    ChannelRealization::from_fn(*topology, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}
