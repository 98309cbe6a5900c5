//! Network configuration and time-extended channel realizations.
//!
//! All indices are zero-based. A channel coefficient's time series over the
//! `d` slots is stored contiguously, so a time-extended diagonal channel is
//! just a slice and never a dense `d x d` matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// `(K, M, N)`: cells, antennas per BS (transmit and receive), and users per
/// cell in each direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub k: usize,
    pub m: usize,
    pub n: usize,
}

impl NetworkConfig {
    pub fn new(k: usize, m: usize, n: usize) -> Result<Self> {
        if k == 0 || m == 0 || n == 0 {
            return Err(Error::InvalidConfig(format!(
                "K, M, N must all be positive (got K={k}, M={m}, N={n})"
            )));
        }
        Ok(Self { k, m, n })
    }

    /// Same network with only `cells` of the cells active.
    pub fn with_cells(&self, cells: usize) -> Self {
        Self { k: cells, ..*self }
    }

    /// Total number of UL (equivalently DL) users, `KN`.
    pub fn users(&self) -> usize {
        self.k * self.n
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(K={}, M={}, N={})", self.k, self.m, self.n)
    }
}

/// Whether each BS's own transmit signal leaks into its receive antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SelfInterference {
    #[default]
    Suppressed,
    Present,
}

/// Identifies one scalar channel coefficient (its whole time series).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum CoefficientId {
    /// `h`: UL user `(tx_cell, tx_user)` to DL user `(rx_cell, rx_user)`.
    UserToUser {
        rx_cell: usize,
        rx_user: usize,
        tx_cell: usize,
        tx_user: usize,
    },
    /// `f`: UL user `(tx_cell, tx_user)` to receive antenna `antenna` of BS `bs`.
    UlCross {
        bs: usize,
        antenna: usize,
        tx_cell: usize,
        tx_user: usize,
    },
    /// `g`: transmit antenna `antenna` of BS `bs` to DL user `(rx_cell, rx_user)`.
    DlCross {
        rx_cell: usize,
        rx_user: usize,
        bs: usize,
        antenna: usize,
    },
    /// `b`: transmit antenna `tx_antenna` of BS `tx_bs` to receive antenna
    /// `rx_antenna` of BS `rx_bs`.
    Bs2Bs {
        rx_bs: usize,
        rx_antenna: usize,
        tx_bs: usize,
        tx_antenna: usize,
    },
}

impl fmt::Display for CoefficientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::UserToUser { rx_cell, rx_user, tx_cell, tx_user } => {
                write!(f, "h[{rx_cell}{rx_user},{tx_cell}{tx_user}]")
            }
            Self::UlCross { bs, antenna, tx_cell, tx_user } => {
                write!(f, "f[{bs}{antenna},{tx_cell}{tx_user}]")
            }
            Self::DlCross { rx_cell, rx_user, bs, antenna } => {
                write!(f, "g[{rx_cell}{rx_user},{bs}{antenna}]")
            }
            Self::Bs2Bs { rx_bs, rx_antenna, tx_bs, tx_antenna } => {
                write!(f, "b[{rx_bs}{rx_antenna},{tx_bs}{tx_antenna}]")
            }
        }
    }
}

/// All scalar channel coefficients of a `(K, M, N)` network over `d` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    config: NetworkConfig,
    d: usize,
    mode: SelfInterference,
    h: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
}

// Stream tags keep the four coefficient families on disjoint ChaCha streams.
const TAG_H: u64 = 1 << 56;
const TAG_F: u64 = 2 << 56;
const TAG_G: u64 = 3 << 56;
const TAG_B: u64 = 4 << 56;

fn sample_series(seed: u64, stream: u64, d: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    for x in out.iter_mut().take(d) {
        let magnitude = 0.5 + 1.5 * rng.random::<f64>();
        *x = if rng.random::<bool>() { magnitude } else { -magnitude };
    }
}

/// Samples every coefficient independently and uniformly from
/// `[-2, -0.5] ∪ [0.5, 2]`. Each coefficient series is drawn from its own
/// ChaCha stream, so values do not depend on generation order.
pub fn generate_channels(
    config: NetworkConfig,
    d: usize,
    seed: u64,
    mode: SelfInterference,
) -> Result<ChannelRealization> {
    if d == 0 {
        return Err(Error::InvalidConfig("time extension d must be positive".into()));
    }
    let NetworkConfig { k, m, n } = config;
    let fill = |count: usize, tag: u64, skip: &dyn Fn(usize) -> bool| {
        let mut data = vec![0.0; count * d];
        for (idx, chunk) in data.chunks_mut(d).enumerate() {
            if !skip(idx) {
                sample_series(seed, tag | idx as u64, d, chunk);
            }
        }
        data
    };

    let h = fill(k * n * k * n, TAG_H, &|_| false);
    let f = fill(k * m * k * n, TAG_F, &|_| false);
    let g = fill(k * n * k * m, TAG_G, &|_| false);
    // b index = ((rx_bs * M + rx_antenna) * K + tx_bs) * M + tx_antenna
    let b = fill(k * m * k * m, TAG_B, &|idx| {
        let tx_bs = (idx / m) % k;
        let rx_bs = idx / (m * k * m);
        mode == SelfInterference::Suppressed && rx_bs == tx_bs
    });

    Ok(ChannelRealization { config, d, mode, h, f, g, b })
}

impl ChannelRealization {
    pub fn config(&self) -> NetworkConfig {
        self.config
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> SelfInterference {
        self.mode
    }

    fn slot_range(&self, idx: usize) -> std::ops::Range<usize> {
        idx * self.d..(idx + 1) * self.d
    }

    pub fn h(&self, rx_cell: usize, rx_user: usize, tx_cell: usize, tx_user: usize) -> &[f64] {
        let NetworkConfig { k, n, .. } = self.config;
        let idx = ((rx_cell * n + rx_user) * k + tx_cell) * n + tx_user;
        &self.h[self.slot_range(idx)]
    }

    pub fn f(&self, bs: usize, antenna: usize, tx_cell: usize, tx_user: usize) -> &[f64] {
        let NetworkConfig { k, m, n } = self.config;
        let idx = ((bs * m + antenna) * k + tx_cell) * n + tx_user;
        &self.f[self.slot_range(idx)]
    }

    pub fn g(&self, rx_cell: usize, rx_user: usize, bs: usize, antenna: usize) -> &[f64] {
        let NetworkConfig { k, m, n } = self.config;
        let idx = ((rx_cell * n + rx_user) * k + bs) * m + antenna;
        &self.g[self.slot_range(idx)]
    }

    pub fn b(&self, rx_bs: usize, rx_antenna: usize, tx_bs: usize, tx_antenna: usize) -> &[f64] {
        let NetworkConfig { k, m, .. } = self.config;
        let idx = ((rx_bs * m + rx_antenna) * k + tx_bs) * m + tx_antenna;
        &self.b[self.slot_range(idx)]
    }

    /// Time series of a coefficient, checking every index against the config.
    pub fn series(&self, id: &CoefficientId) -> Result<&[f64]> {
        let NetworkConfig { k, m, n } = self.config;
        let ok = match *id {
            CoefficientId::UserToUser { rx_cell, rx_user, tx_cell, tx_user } => {
                rx_cell < k && tx_cell < k && rx_user < n && tx_user < n
            }
            CoefficientId::UlCross { bs, antenna, tx_cell, tx_user } => {
                bs < k && antenna < m && tx_cell < k && tx_user < n
            }
            CoefficientId::DlCross { rx_cell, rx_user, bs, antenna } => {
                rx_cell < k && rx_user < n && bs < k && antenna < m
            }
            CoefficientId::Bs2Bs { rx_bs, rx_antenna, tx_bs, tx_antenna } => {
                rx_bs < k && tx_bs < k && rx_antenna < m && tx_antenna < m
            }
        };
        if !ok {
            return Err(Error::Unresolvable(id.to_string()));
        }
        Ok(match *id {
            CoefficientId::UserToUser { rx_cell, rx_user, tx_cell, tx_user } => {
                self.h(rx_cell, rx_user, tx_cell, tx_user)
            }
            CoefficientId::UlCross { bs, antenna, tx_cell, tx_user } => {
                self.f(bs, antenna, tx_cell, tx_user)
            }
            CoefficientId::DlCross { rx_cell, rx_user, bs, antenna } => {
                self.g(rx_cell, rx_user, bs, antenna)
            }
            CoefficientId::Bs2Bs { rx_bs, rx_antenna, tx_bs, tx_antenna } => {
                self.b(rx_bs, rx_antenna, tx_bs, tx_antenna)
            }
        })
    }

    /// Every coefficient value, in storage order (h, f, g, b).
    pub fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.h.iter().chain(&self.f).chain(&self.g).chain(&self.b).copied()
    }
}

/// Action of a time-extended diagonal channel: the slotwise product.
pub fn apply_diagonal(coeffs: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if coeffs.len() != v.len() {
        return Err(Error::Dimension { expected: coeffs.len(), got: v.len() });
    }
    Ok(coeffs.iter().zip(v).map(|(c, x)| c * x).collect())
}

/// `acc += coeffs ⊙ v`, lengths assumed equal.
pub(crate) fn accumulate_diagonal(acc: &mut [f64], coeffs: &[f64], v: &[f64]) {
    for ((a, c), x) in acc.iter_mut().zip(coeffs).zip(v) {
        *a += c * x;
    }
}
