//! Closed-form sum-DoF expressions, evaluated in exact rationals.
//!
//! Piecewise boundaries follow the inequality signs of each formula exactly;
//! no floating point is involved anywhere in this module.

use serde::{Serialize, Serializer};
use std::fmt;

use crate::exact::{frac, q, Q};
use crate::network::NetworkConfig;

/// Which expression produced a [`DofValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum FormulaId {
    FdAchievable,
    FdUpper,
    Hd,
    NoBs2Bs,
    SelfInterference,
    SingleCell,
}

/// Winning term of the intermediate-antenna case of the achievable DoF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MiddleTerm {
    /// `KN(M²+MN)/(M²+N²+MN)`, interference alignment at the BSs.
    Alignment,
    /// `(2MN+M²)/(M+N)`, zero-forcing at the BSs.
    ZeroForcing,
    /// `min{MK/(K-1), (K-1)N}`, one cell switched off.
    CellActivation,
}

/// Dominant term of `max{M + KMN/(M+N), 2M}` in the no-BS-to-BS formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoBs2BsTerm {
    Aligned,
    TwiceM,
    UserLimited,
}

/// Source of an LP-derived optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpSource {
    Scheme1,
    Scheme2,
    SingleCell,
    HalfDuplex,
}

/// Which piece of a piecewise formula fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `K = 1`: `min{2M, N}`.
    SingleCell,
    /// `M <= (K-2)N`.
    LowAntenna,
    /// `(K-2)N < M < (K-1)N`, with the term that attained the max.
    Intermediate(MiddleTerm),
    /// `(K-1)N <= M < K²N/(K+1)`.
    HighAntenna,
    /// `otherwise`: every user served, `KN`.
    UserLimited,
    /// `K min{M, N}`.
    CutSet,
    /// Half-duplex `M < (K-1)N`.
    HdInterferenceLimited,
    /// Half-duplex `(K-1)N <= M < KN`.
    HdAntennaLimited,
    /// No BS-to-BS interference, `min{KN, max{..}}`.
    NoBs2Bs(NoBs2BsTerm),
    /// Self-interference `M <= (K-1)N`.
    SelfLow,
    /// Self-interference `(K-1)N <= M <= KN`.
    SelfHigh,
    /// Optimum found by the LP engine over `cells` active cells.
    LpOptimum { source: LpSource, cells: usize },
}

impl Regime {
    pub fn label(&self) -> String {
        match self {
            Self::SingleCell => "K = 1".into(),
            Self::LowAntenna => "M <= (K-2)N".into(),
            Self::Intermediate(t) => {
                let term = match t {
                    MiddleTerm::Alignment => "alignment",
                    MiddleTerm::ZeroForcing => "zero-forcing",
                    MiddleTerm::CellActivation => "cell activation",
                };
                format!("(K-2)N < M < (K-1)N [{term}]")
            }
            Self::HighAntenna => "(K-1)N <= M < K^2N/(K+1)".into(),
            Self::UserLimited => "otherwise".into(),
            Self::CutSet => "K min{M,N}".into(),
            Self::HdInterferenceLimited => "M < (K-1)N".into(),
            Self::HdAntennaLimited => "(K-1)N <= M < KN".into(),
            Self::NoBs2Bs(t) => match t {
                NoBs2BsTerm::Aligned => "M + KMN/(M+N)".into(),
                NoBs2BsTerm::TwiceM => "2M".into(),
                NoBs2BsTerm::UserLimited => "KN".into(),
            },
            Self::SelfLow => "M <= (K-1)N".into(),
            Self::SelfHigh => "(K-1)N <= M <= KN".into(),
            Self::LpOptimum { source, cells } => {
                let s = match source {
                    LpSource::Scheme1 => "scheme 1",
                    LpSource::Scheme2 => "scheme 2",
                    LpSource::SingleCell => "single cell",
                    LpSource::HalfDuplex => "half duplex",
                };
                format!("{s} LP, {cells} active cells")
            }
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Regime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// Exact sum-DoF value tagged with its formula and regime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DofValue {
    #[serde(with = "crate::exact::serde_fraction")]
    pub value: Q,
    pub regime: Regime,
    #[serde(rename = "formulaId")]
    pub formula: FormulaId,
}

impl DofValue {
    fn new(value: Q, regime: Regime, formula: FormulaId) -> Self {
        Self { value, regime, formula }
    }
}

struct Params {
    k: Q,
    m: Q,
    n: Q,
}

fn params(c: &NetworkConfig) -> Params {
    Params { k: q(c.k as i128), m: q(c.m as i128), n: q(c.n as i128) }
}

/// `KN(M²+MN)/(M²+N²+MN)`.
pub fn alignment_term(c: &NetworkConfig) -> Q {
    let Params { k, m, n } = params(c);
    k * n * (m * m + m * n) / (m * m + n * n + m * n)
}

/// `(2MN+M²)/(M+N)`.
pub fn zero_forcing_term(c: &NetworkConfig) -> Q {
    let Params { m, n, .. } = params(c);
    (q(2) * m * n + m * m) / (m + n)
}

/// `min{MK/(K-1), (K-1)N}`; requires `K >= 2`.
pub fn cell_activation_term(c: &NetworkConfig) -> Q {
    let Params { k, m, n } = params(c);
    let one = q(1);
    (m * k / (k - one)).min((k - one) * n)
}

fn single_cell(c: &NetworkConfig) -> Q {
    q((2 * c.m).min(c.n) as i128)
}

/// Achievable sum DoF of the FD network. `K = 1` uses the single-cell
/// characterisation `min{2M, N}`.
pub fn dof_fd_achievable(c: &NetworkConfig) -> DofValue {
    if c.k == 1 {
        return DofValue::new(single_cell(c), Regime::SingleCell, FormulaId::SingleCell);
    }
    let (k, m, n) = (c.k, c.m, c.n);
    let fd = FormulaId::FdAchievable;
    if m <= (k - 2) * n {
        DofValue::new(alignment_term(c), Regime::LowAntenna, fd)
    } else if m < (k - 1) * n {
        // Ties resolve toward alignment, then zero-forcing.
        let mut best = (alignment_term(c), MiddleTerm::Alignment);
        for cand in [
            (zero_forcing_term(c), MiddleTerm::ZeroForcing),
            (cell_activation_term(c), MiddleTerm::CellActivation),
        ] {
            if cand.0 > best.0 {
                best = cand;
            }
        }
        DofValue::new(best.0, Regime::Intermediate(best.1), fd)
    } else if q(m as i128) < frac((k * k * n) as i128, (k + 1) as i128) {
        let mq = q(m as i128);
        DofValue::new(mq + mq / q(k as i128), Regime::HighAntenna, fd)
    } else {
        DofValue::new(q((k * n) as i128), Regime::UserLimited, fd)
    }
}

/// Upper bound `K min{M, N}` for `K >= 2`; exact `min{2M, N}` for `K = 1`.
pub fn dof_fd_upper(c: &NetworkConfig) -> DofValue {
    if c.k == 1 {
        return DofValue::new(single_cell(c), Regime::SingleCell, FormulaId::SingleCell);
    }
    DofValue::new(q((c.k * c.m.min(c.n)) as i128), Regime::CutSet, FormulaId::FdUpper)
}

/// Optimal sum DoF of the half-duplex network.
pub fn dof_hd(c: &NetworkConfig) -> DofValue {
    let Params { k, m, n } = params(c);
    let (ku, mu, nu) = (c.k, c.m, c.n);
    if mu < (ku - 1) * nu {
        DofValue::new(k * m * n / (m + n), Regime::HdInterferenceLimited, FormulaId::Hd)
    } else if mu < ku * nu {
        DofValue::new(m, Regime::HdAntennaLimited, FormulaId::Hd)
    } else {
        DofValue::new(k * n, Regime::UserLimited, FormulaId::Hd)
    }
}

/// Achievable sum DoF without BS-to-BS interference:
/// `min{KN, max{M + KMN/(M+N), 2M}}`.
pub fn dof_no_bs2bs(c: &NetworkConfig) -> DofValue {
    let Params { k, m, n } = params(c);
    let cap = k * n;
    let aligned = m + k * m * n / (m + n);
    let twice = q(2) * m;
    let (inner, term) = if aligned >= twice {
        (aligned, NoBs2BsTerm::Aligned)
    } else {
        (twice, NoBs2BsTerm::TwiceM)
    };
    let (value, term) = if cap <= inner { (cap, NoBs2BsTerm::UserLimited) } else { (inner, term) };
    DofValue::new(value, Regime::NoBs2Bs(term), FormulaId::NoBs2Bs)
}

/// Achievable sum DoF when each BS suffers residual self-interference.
pub fn dof_self_interference(c: &NetworkConfig) -> DofValue {
    let Params { k, m, n } = params(c);
    let (ku, mu, nu) = (c.k, c.m, c.n);
    let si = FormulaId::SelfInterference;
    if mu <= (ku - 1) * nu {
        DofValue::new(alignment_term(c), Regime::SelfLow, si)
    } else if mu <= ku * nu {
        DofValue::new(k * n * (m * k / (m * k + k * n - m)), Regime::SelfHigh, si)
    } else {
        DofValue::new(k * n, Regime::UserLimited, si)
    }
}

/// Ratio of the FD achievable DoF to the HD DoF.
pub fn dof_gap_ratio(c: &NetworkConfig) -> Q {
    dof_fd_achievable(c).value / dof_hd(c).value
}
