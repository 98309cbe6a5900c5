//! Two-variable achievability LPs, solved exactly by vertex enumeration.
//!
//! Every program maximises `KN(λ1 + λ2)` over `[0, 1]²` intersected with a
//! handful of half-planes, so enumerating the pairwise intersections of the
//! constraint lines (box edges included) and keeping the best feasible point
//! is exact and cheap.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{q, Q};
use crate::formulas::{DofValue, FormulaId, LpSource, Regime};
use crate::network::NetworkConfig;

/// `a·λ1 + b·λ2 <= c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint2D {
    pub a: Q,
    pub b: Q,
    pub c: Q,
    pub id: String,
}

impl Constraint2D {
    pub fn new(a: Q, b: Q, c: Q, id: impl Into<String>) -> Self {
        assert!(a != q(0) || b != q(0), "constraint needs a nonzero normal");
        Self { a, b, c, id: id.into() }
    }

    pub fn slack(&self, l1: &Q, l2: &Q) -> Q {
        self.c - (self.a * l1 + self.b * l2)
    }

    pub fn satisfied(&self, l1: &Q, l2: &Q) -> bool {
        self.slack(l1, l2) >= q(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SchemeId {
    Scheme1,
    Scheme2,
    NoBs2Bs,
}

impl SchemeId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Scheme1 => "scheme1",
            Self::Scheme2 => "scheme2",
            Self::NoBs2Bs => "noBs2Bs",
        }
    }
}

/// Exact optimiser of one of the achievability LPs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LambdaSolution {
    #[serde(rename = "scheme")]
    pub scheme: SchemeId,
    #[serde(with = "crate::exact::serde_fraction")]
    pub lambda1: Q,
    #[serde(with = "crate::exact::serde_fraction")]
    pub lambda2: Q,
    #[serde(with = "crate::exact::serde_fraction")]
    pub objective: Q,
    #[serde(rename = "active")]
    pub active_constraints: Vec<String>,
    /// Set when the optimum sits on an axis (`λ1 = 0` or `λ2 = 0`), i.e. one
    /// direction carries no traffic.
    pub degenerate: bool,
}

impl LambdaSolution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

fn check_regime(c: &NetworkConfig) -> Result<()> {
    if c.m >= c.k * c.n {
        return Err(Error::Regime(format!(
            "{c}: M >= KN, HD operation suffices and the LP does not apply"
        )));
    }
    Ok(())
}

fn boxes() -> [Constraint2D; 2] {
    [
        Constraint2D::new(q(1), q(0), q(1), "lambda1<=1"),
        Constraint2D::new(q(0), q(1), q(1), "lambda2<=1"),
    ]
}

/// `N + min{M, (K-1)N}`: desired plus aligned UL inter-cell dimensions per
/// unit of `λ1` at a BS.
fn bs_ul_load(c: &NetworkConfig) -> Q {
    q((c.n + c.m.min((c.k - 1) * c.n)) as i128)
}

/// Constraints of the scheme with alignment at both users and BSs.
pub fn scheme1_lp(c: &NetworkConfig) -> Result<Vec<Constraint2D>> {
    check_regime(c)?;
    let (m, n) = (q(c.m as i128), q(c.n as i128));
    let [b1, b2] = boxes();
    Ok(vec![
        Constraint2D::new(bs_ul_load(c), n, m, "bs-decoding"),
        Constraint2D::new(q(1), q(1) + n / m, q(1), "dl-user-decoding"),
        b1,
        b2,
    ])
}

/// Constraints of the scheme with UL alignment and DL zero-forcing.
pub fn scheme2_lp(c: &NetworkConfig) -> Result<Vec<Constraint2D>> {
    check_regime(c)?;
    let (k, m, n) = (q(c.k as i128), q(c.m as i128), q(c.n as i128));
    let [b1, b2] = boxes();
    Ok(vec![
        Constraint2D::new(bs_ul_load(c), q(0), m, "bs-decoding"),
        Constraint2D::new((k - q(1)) * n, k * n, m, "zf-nulling"),
        Constraint2D::new(q(1), q(1), q(1), "time-sharing"),
        b1,
        b2,
    ])
}

/// Scheme-2 constraints when there is no BS-to-BS interference.
pub fn no_bs2bs_lp(c: &NetworkConfig) -> Result<Vec<Constraint2D>> {
    check_regime(c)?;
    let (k, m, n) = (q(c.k as i128), q(c.m as i128), q(c.n as i128));
    let [b1, b2] = boxes();
    Ok(vec![
        Constraint2D::new(bs_ul_load(c), q(0), m, "bs-decoding"),
        Constraint2D::new(q(0), k * n, m, "dl-nulling"),
        Constraint2D::new(q(1), q(1), q(1), "time-sharing"),
        b1,
        b2,
    ])
}

fn lines_with_axes(constraints: &[Constraint2D]) -> Vec<(Q, Q, Q)> {
    let mut lines: Vec<(Q, Q, Q)> = constraints.iter().map(|c| (c.a, c.b, c.c)).collect();
    // λ1 >= 0, λ2 >= 0 and the unit box
    lines.extend([(q(1), q(0), q(0)), (q(0), q(1), q(0)), (q(1), q(0), q(1)), (q(0), q(1), q(1))]);
    lines
}

fn intersect(p: &(Q, Q, Q), r: &(Q, Q, Q)) -> Option<(Q, Q)> {
    let det = p.0 * r.1 - p.1 * r.0;
    if det == q(0) {
        return None;
    }
    Some(((p.2 * r.1 - p.1 * r.2) / det, (p.0 * r.2 - p.2 * r.0) / det))
}

fn in_box(x: &Q) -> bool {
    *x >= q(0) && *x <= q(1)
}

/// Maximises `λ1 + λ2` over `[0,1]²` and the given constraints. Ties prefer
/// larger `λ1`, then larger `λ2`.
pub fn maximize(constraints: &[Constraint2D], c: &NetworkConfig) -> Result<LambdaSolution> {
    maximize_tagged(constraints, c, infer_scheme(constraints))
}

fn infer_scheme(constraints: &[Constraint2D]) -> SchemeId {
    if constraints.iter().any(|c| c.id == "dl-user-decoding") {
        SchemeId::Scheme1
    } else if constraints.iter().any(|c| c.id == "dl-nulling") {
        SchemeId::NoBs2Bs
    } else {
        SchemeId::Scheme2
    }
}

fn maximize_tagged(
    constraints: &[Constraint2D],
    c: &NetworkConfig,
    scheme: SchemeId,
) -> Result<LambdaSolution> {
    if constraints.is_empty() {
        return Err(Error::Infeasible);
    }
    let lines = lines_with_axes(constraints);
    let mut best: Option<(Q, Q)> = None;
    for (i, p) in lines.iter().enumerate() {
        for r in &lines[i + 1..] {
            let Some((l1, l2)) = intersect(p, r) else { continue };
            if !(in_box(&l1) && in_box(&l2)) || !constraints.iter().all(|k| k.satisfied(&l1, &l2)) {
                continue;
            }
            let better = match &best {
                None => true,
                Some((b1, b2)) => (l1 + l2, l1, l2) > (*b1 + b2, *b1, *b2),
            };
            if better {
                best = Some((l1, l2));
            }
        }
    }
    let (lambda1, lambda2) = best.ok_or(Error::Infeasible)?;
    let active_constraints = constraints
        .iter()
        .filter(|k| k.slack(&lambda1, &lambda2) == q(0))
        .map(|k| k.id.clone())
        .collect();
    let kn = q((c.k * c.n) as i128);
    Ok(LambdaSolution {
        scheme,
        objective: kn * (lambda1 + lambda2),
        degenerate: lambda1 == q(0) || lambda2 == q(0),
        lambda1,
        lambda2,
        active_constraints,
    })
}

/// Builds and solves the LP for `scheme`.
pub fn solve(scheme: SchemeId, c: &NetworkConfig) -> Result<LambdaSolution> {
    let constraints = match scheme {
        SchemeId::Scheme1 => scheme1_lp(c)?,
        SchemeId::Scheme2 => scheme2_lp(c)?,
        SchemeId::NoBs2Bs => no_bs2bs_lp(c)?,
    };
    maximize_tagged(&constraints, c, scheme)
}

/// No-BS-to-BS LP optimum, with the `KN` value used once `M >= KN`.
pub fn no_bs2bs_value(c: &NetworkConfig) -> Q {
    match solve(SchemeId::NoBs2Bs, c) {
        Ok(sol) => sol.objective,
        Err(_) => q((c.k * c.n) as i128),
    }
}

/// Best sum DoF reachable by the two schemes, allowing any number of cells
/// to stay silent. Inactive cells contribute nothing.
pub fn best_achievable(c: &NetworkConfig) -> DofValue {
    let mut best = (q(0), Regime::LpOptimum { source: LpSource::SingleCell, cells: 1 });
    let mut offer = |value: Q, source: LpSource, cells: usize| {
        if value > best.0 {
            best = (value, Regime::LpOptimum { source, cells });
        }
    };
    offer(q((2 * c.m).min(c.n) as i128), LpSource::SingleCell, 1);
    for cells in 2..=c.k {
        let sub = c.with_cells(cells);
        if sub.m >= sub.k * sub.n {
            offer(q((sub.k * sub.n) as i128), LpSource::HalfDuplex, cells);
            continue;
        }
        for scheme in [SchemeId::Scheme1, SchemeId::Scheme2] {
            let sol = solve(scheme, &sub).expect("LP regime checked above");
            let source = match scheme {
                SchemeId::Scheme1 => LpSource::Scheme1,
                _ => LpSource::Scheme2,
            };
            offer(sol.objective, source, cells);
        }
    }
    DofValue { value: best.0, regime: best.1, formula: FormulaId::FdAchievable }
}
