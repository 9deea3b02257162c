//! Lattice models: the dimerized chain, its gain/loss patterns and
//! symmetric hopping disorder.
//!
//! Sites are indexed from 0 internally. Site `i` belongs to unit cell
//! `i / 2`; even sites are the A sublattice, odd sites the B sublattice.
//! In the usual 1-based labelling the A sites are the odd sites `1, 3, ...`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking `|delta cos(theta)| <= 1` and the theta range.
const PARAM_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Which sites couple to particle reservoirs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    /// No reservoir.
    #[serde(rename = "none")]
    None,
    /// Loss on the first site, gain on the last site.
    #[serde(rename = "u1", alias = "U1")]
    U1,
    /// Gain on A sites, loss on B sites.
    #[serde(rename = "u2", alias = "U2")]
    U2,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::None => "none",
            Pattern::U1 => "u1",
            Pattern::U2 => "u2",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "periodic" | "ring" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidConfig(format!("unknown boundary '{other}'"))),
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Pattern::None),
            "u1" => Ok(Pattern::U1),
            "u2" => Ok(Pattern::U2),
            other => Err(Error::InvalidConfig(format!("unknown pattern '{other}'"))),
        }
    }
}

/// Parameters of one dissipative chain.
///
/// Hoppings are parameterized as `t1 = t (1 - delta cos theta)` (intra-cell)
/// and `t2 = t (1 + delta cos theta)` (inter-cell).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub t: f64,
    pub delta: f64,
    pub theta: f64,
    pub gamma: f64,
    pub boundary: Boundary,
    pub pattern: Pattern,
}

impl ModelConfig {
    /// Builds and validates a configuration.
    pub fn new(
        n: usize,
        t: f64,
        delta: f64,
        theta: f64,
        gamma: f64,
        boundary: Boundary,
        pattern: Pattern,
    ) -> Result<Self> {
        let config = Self { n, t, delta, theta, gamma, boundary, pattern };
        config.validate()?;
        Ok(config)
    }

    /// The `t = delta = 1` family used throughout the figures.
    pub fn unit(n: usize, theta: f64, gamma: f64, boundary: Boundary, pattern: Pattern) -> Result<Self> {
        Self::new(n, 1.0, 1.0, theta, gamma, boundary, pattern)
    }

    /// Configuration reproducing explicit hoppings `t1`, `t2 >= 0` (not both zero).
    pub fn with_hoppings(
        n: usize,
        t1: f64,
        t2: f64,
        gamma: f64,
        boundary: Boundary,
        pattern: Pattern,
    ) -> Result<Self> {
        if !(t1 >= 0.0 && t2 >= 0.0 && t1 + t2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "hoppings must be non-negative and not both zero (t1 = {t1}, t2 = {t2})"
            )));
        }
        let t = 0.5 * (t1 + t2);
        let ratio = (t2 - t1) / (t1 + t2);
        let theta = if ratio >= 0.0 { 0.0 } else { PI };
        Self::new(n, t, ratio.abs(), theta, gamma, boundary, pattern)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 || self.n % 2 != 0 {
            return bad(format!("n must be an even integer >= 2, got {}", self.n));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return bad(format!("t must be positive, got {}", self.t));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad(format!("delta must be non-negative, got {}", self.delta));
        }
        if !(self.theta.is_finite() && self.theta >= -PARAM_SLACK && self.theta <= PI + PARAM_SLACK) {
            return bad(format!("theta must lie in [0, pi], got {}", self.theta));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if (self.delta * self.theta.cos()).abs() > 1.0 + PARAM_SLACK {
            return bad(format!(
                "|delta cos theta| = {} exceeds 1 (negative hopping)",
                (self.delta * self.theta.cos()).abs()
            ));
        }
        if self.pattern == Pattern::U1 && self.boundary == Boundary::Periodic {
            return bad("pattern u1 places reservoirs at the chain ends and requires open boundaries".into());
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n / 2
    }

    pub fn hoppings(&self) -> (f64, f64) {
        hopping_amplitudes(self)
    }

    /// Gain rate on each site.
    pub fn gain_rates(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        match self.pattern {
            Pattern::None => {}
            Pattern::U1 => g[self.n - 1] = self.gamma,
            Pattern::U2 => g.iter_mut().step_by(2).for_each(|x| *x = self.gamma),
        }
        g
    }

    /// Loss rate on each site.
    pub fn loss_rates(&self) -> Vec<f64> {
        let mut l = vec![0.0; self.n];
        match self.pattern {
            Pattern::None => {}
            Pattern::U1 => l[0] = self.gamma,
            Pattern::U2 => l.iter_mut().skip(1).step_by(2).for_each(|x| *x = self.gamma),
        }
        l
    }

    /// Imaginary on-site potential of the effective Hamiltonian (`+gamma` on
    /// gain sites, `-gamma` on loss sites).
    pub fn onsite_imaginary(&self) -> Vec<f64> {
        self.gain_rates()
            .iter()
            .zip(self.loss_rates())
            .map(|(g, l)| g - l)
            .collect()
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }
}

/// `(t1, t2) = (t (1 - delta cos theta), t (1 + delta cos theta))`.
pub fn hopping_amplitudes(config: &ModelConfig) -> (f64, f64) {
    let shift = config.delta * config.theta.cos();
    let t1 = config.t * (1.0 - shift);
    let t2 = config.t * (1.0 + shift);
    // |delta cos theta| <= 1 + slack; clamp the slack away.
    (t1.max(0.0), t2.max(0.0))
}

/// One realization of symmetric hopping disorder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub r: f64,
    pub xi: Vec<f64>,
    pub t1_tilde: Vec<f64>,
    pub t2_tilde: Vec<f64>,
}

impl DisorderRealization {
    /// The disorder-free realization (every cell carries `t1`, `t2`).
    pub fn clean(config: &ModelConfig) -> Self {
        let (t1, t2) = hopping_amplitudes(config);
        let cells = config.n_cells();
        Self { r: 0.0, xi: vec![0.0; cells], t1_tilde: vec![t1; cells], t2_tilde: vec![t2; cells] }
    }
}

/// Draws `n_cells` values uniform on `(-1, 1)` with `xi[j] == xi[n_cells - 1 - j]`.
///
/// The first half is sampled in order from a ChaCha8 stream seeded with
/// `seed`, then the middle entry (odd `n_cells` only), then the first half is
/// mirrored onto the second.
pub fn sample_symmetric_disorder(n_cells: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || loop {
        let x: f64 = rng.gen_range(-1.0..1.0);
        if x > -1.0 {
            return x;
        }
    };
    let half = n_cells / 2;
    let mut xi = vec![0.0; n_cells];
    for j in 0..half {
        xi[j] = draw();
    }
    if n_cells % 2 == 1 {
        xi[half] = draw();
    }
    for j in 0..half {
        xi[n_cells - 1 - j] = xi[j];
    }
    xi
}

/// Shifts each cell's hoppings by `+-R xi_j |t1 - t2|`.
pub fn apply_disorder(config: &ModelConfig, r: f64, xi: &[f64]) -> Result<DisorderRealization> {
    let cells = config.n_cells();
    if xi.len() != cells {
        return Err(Error::InvalidDisorder(format!("expected {cells} cell values, got {}", xi.len())));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::InvalidDisorder(format!("disorder strength must be non-negative, got {r}")));
    }
    for j in 0..cells {
        if (xi[j] - xi[cells - 1 - j]).abs() > 1e-12 {
            return Err(Error::InvalidDisorder(format!(
                "xi is not mirror symmetric: xi[{}] = {} but xi[{}] = {}",
                j + 1,
                xi[j],
                cells - j,
                xi[cells - 1 - j]
            )));
        }
    }
    let (t1, t2) = hopping_amplitudes(config);
    let scale = (t1 - t2).abs();
    Ok(DisorderRealization {
        r,
        xi: xi.to_vec(),
        t1_tilde: xi.iter().map(|x| t1 + r * x * scale).collect(),
        t2_tilde: xi.iter().map(|x| t2 - r * x * scale).collect(),
    })
}

/// Critical disorder strengths: `Rc1` closes the gap, `Rc2` (if defined)
/// is the worst-case PT transition for alternating gain and loss.
pub fn critical_disorder_strengths(config: &ModelConfig) -> Result<(f64, Option<f64>)> {
    let (t1, t2) = hopping_amplitudes(config);
    let gap = (t1 - t2).abs();
    if gap <= 1e-12 * (t1 + t2) {
        return Err(Error::UndefinedCritical("t1 == t2: the clean chain is already gapless".into()));
    }
    let rc1 = 0.5;
    let rc2 = if config.gamma >= gap { None } else { Some(0.5 * (1.0 - config.gamma / gap)) };
    Ok((rc1, rc2))
}

/// Real symmetric single-particle hopping matrix `h` with `H = sum h_ij c_i^dag c_j`.
///
/// `disorder` replaces the per-cell hoppings when given.
pub fn hopping_matrix(config: &ModelConfig, disorder: Option<&DisorderRealization>) -> Result<Array2<f64>> {
    config.validate()?;
    let n = config.n;
    let clean;
    let d = match disorder {
        Some(d) => {
            if d.t1_tilde.len() != config.n_cells() || d.t2_tilde.len() != config.n_cells() {
                return Err(Error::InvalidDisorder("realization does not match the lattice size".into()));
            }
            d
        }
        None => {
            clean = DisorderRealization::clean(config);
            &clean
        }
    };
    let mut h = Array2::<f64>::zeros((n, n));
    for i in 0..n - 1 {
        let cell = i / 2;
        let t = if i % 2 == 0 { d.t1_tilde[cell] } else { d.t2_tilde[cell] };
        h[[i, i + 1]] -= t;
        h[[i + 1, i]] -= t;
    }
    if config.boundary == Boundary::Periodic {
        let t = d.t2_tilde[config.n_cells() - 1];
        h[[n - 1, 0]] -= t;
        h[[0, n - 1]] -= t;
    }
    Ok(h)
}

/// Site occupations `<n_i>` of a many-body state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationProfile {
    pub sites: Vec<f64>,
}

impl OccupationProfile {
    pub fn total(&self) -> f64 {
        self.sites.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Occupations of the A sublattice (even internal index).
    pub fn sublattice_a(&self) -> impl Iterator<Item = f64> + '_ {
        self.sites.iter().step_by(2).copied()
    }

    /// Occupations of the B sublattice (odd internal index).
    pub fn sublattice_b(&self) -> impl Iterator<Item = f64> + '_ {
        self.sites.iter().skip(1).step_by(2).copied()
    }
}
