//! Numeric verification of a construction: per receiver, how many planned
//! streams are linearly separable from everything else it hears.
//!
//! Every column is scaled to unit norm before any projection, so the rank
//! threshold `relTol · max(rows, cols)` is relative to a reference singular
//! value of one.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{q, Q};
use crate::linalg::{
    from_columns, independent_columns, normalize_columns, orthogonal_complement, project_out, range_basis, rank_above,
};
use crate::lp::{self, SchemeId};
use crate::network::{accumulate_diagonal, generate_channels, ChannelRealization, CoefficientId, NetworkConfig, SelfInterference};
use crate::scheme1::{build_scheme1, multiply_exponent, plan_scheme1, BeamformerSet, Caps, DlBeams};
use crate::scheme2::{build_scheme2, plan_scheme2, PlanMode};

pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ReceiverKind {
    Bs,
    DlUser,
}

/// Everything one receiver hears, split into desired and interfering
/// columns.
#[derive(Debug, Clone)]
pub struct ReceiverCase {
    pub kind: ReceiverKind,
    /// `[i]` for BS `i`, `[i, j]` for DL user `j` of cell `i`.
    pub index: Vec<usize>,
    pub desired: DMatrix<f64>,
    pub interference: DMatrix<f64>,
    /// Columns of `interference` from here on are BS-to-BS interference.
    pub bs2bs_start: usize,
    /// Orthonormal receive basis the signal is projected onto first.
    pub receive_projection: Option<DMatrix<f64>>,
    pub planned: usize,
}

fn product(c: &[f64], v: &[f64]) -> Vec<f64> {
    c.iter().zip(v).map(|(a, b)| a * b).collect()
}

/// Stacked BS reception of a UL beam: block `a` is `f(i,a,cell,user) ⊙ v`.
fn ul_at_bs(ch: &ChannelRealization, i: usize, cell: usize, user: usize, v: &[f64]) -> Vec<f64> {
    let (m, d) = (ch.config().m, ch.d());
    let mut y = vec![0.0; m * d];
    for a in 0..m {
        accumulate_diagonal(&mut y[a * d..(a + 1) * d], ch.f(i, a, cell, user), v);
    }
    y
}

/// A DL signal leaving BS `tx`: the per-antenna transmit vectors.
enum DlTx<'a> {
    /// One antenna sends `v`, the others are silent.
    Antenna(usize, &'a [f64]),
    /// Antenna-major `Md` vector.
    Stacked(&'a [f64]),
}

fn dl_at_bs(ch: &ChannelRealization, i: usize, tx: usize, sig: &DlTx<'_>) -> Vec<f64> {
    let (m, d) = (ch.config().m, ch.d());
    let mut y = vec![0.0; m * d];
    for a in 0..m {
        let block = &mut y[a * d..(a + 1) * d];
        match sig {
            DlTx::Antenna(q, v) => accumulate_diagonal(block, ch.b(i, a, tx, *q), v),
            DlTx::Stacked(w) => {
                for q in 0..m {
                    accumulate_diagonal(block, ch.b(i, a, tx, q), &w[q * d..(q + 1) * d]);
                }
            }
        }
    }
    y
}

fn dl_at_user(ch: &ChannelRealization, i: usize, j: usize, tx: usize, sig: &DlTx<'_>) -> Vec<f64> {
    let (m, d) = (ch.config().m, ch.d());
    match sig {
        DlTx::Antenna(q, v) => product(ch.g(i, j, tx, *q), v),
        DlTx::Stacked(w) => {
            let mut y = vec![0.0; d];
            for q in 0..m {
                accumulate_diagonal(&mut y, ch.g(i, j, tx, q), &w[q * d..(q + 1) * d]);
            }
            y
        }
    }
}

/// Every DL signal as `(tx BS, target user in that cell, signal)`.
fn dl_signals(beams: &BeamformerSet) -> Vec<(usize, usize, DlTx<'_>)> {
    let c = beams.config;
    let mut out = Vec::new();
    match &beams.dl {
        DlBeams::None => {}
        DlBeams::Aligned { families, .. } => {
            for tx in 0..c.k {
                for (j, family) in families.iter().enumerate() {
                    for q in 0..c.m {
                        for beam in family {
                            out.push((tx, j, DlTx::Antenna(q, &beam.values)));
                        }
                    }
                }
            }
        }
        DlBeams::ZeroForcing { beams } => {
            for (tx, per_bs) in beams.iter().enumerate() {
                for (j, streams) in per_bs.iter().enumerate() {
                    for w in streams {
                        out.push((tx, j, DlTx::Stacked(w)));
                    }
                }
            }
        }
    }
    out
}

/// One case per BS and, when DL beams exist, one per DL user. Each
/// transmitted beam appears exactly once per receiver. BS self-reception is
/// included only when self-interference is present.
pub fn assemble_receiver_cases(ch: &ChannelRealization, beams: &BeamformerSet) -> Result<Vec<ReceiverCase>> {
    let c = beams.config;
    if ch.d() != beams.d {
        return Err(Error::Dimension { expected: beams.d, got: ch.d() });
    }
    if ch.config() != c {
        return Err(Error::InvalidConfig(format!("channels are for {}, beams for {c}", ch.config())));
    }
    let (d, md) = (beams.d, c.m * beams.d);
    let dl = dl_signals(beams);
    let mut cases = Vec::new();

    for i in 0..c.k {
        let (mut desired, mut inter) = (Vec::new(), Vec::new());
        for cell in 0..c.k {
            for user in 0..c.n {
                for beam in beams.ul_user(cell, user) {
                    let y = ul_at_bs(ch, i, cell, user, &beam.values);
                    if cell == i { desired.push(y) } else { inter.push(y) }
                }
            }
        }
        let bs2bs_start = inter.len();
        for (tx, _, sig) in &dl {
            if *tx == i && ch.mode() == SelfInterference::Suppressed {
                continue;
            }
            inter.push(dl_at_bs(ch, i, *tx, sig));
        }
        cases.push(ReceiverCase {
            kind: ReceiverKind::Bs,
            index: vec![i],
            planned: desired.len(),
            desired: from_columns(md, &desired),
            interference: from_columns(md, &inter),
            bs2bs_start,
            receive_projection: None,
        });
    }

    if dl.is_empty() {
        return Ok(cases);
    }
    for i in 0..c.k {
        for j in 0..c.n {
            let (mut desired, mut inter) = (Vec::new(), Vec::new());
            for (tx, target, sig) in &dl {
                let y = dl_at_user(ch, i, j, *tx, sig);
                if *tx == i && *target == j { desired.push(y) } else { inter.push(y) }
            }
            for cell in 0..c.k {
                for user in 0..c.n {
                    for beam in beams.ul_user(cell, user) {
                        inter.push(product(ch.h(i, j, cell, user), &beam.values));
                    }
                }
            }
            let bs2bs_start = inter.len();
            cases.push(ReceiverCase {
                kind: ReceiverKind::DlUser,
                index: vec![i, j],
                planned: desired.len(),
                desired: from_columns(d, &desired),
                interference: from_columns(d, &inter),
                bs2bs_start,
                receive_projection: beams.receive_bases.as_ref().map(|b| b[i * c.n + j].clone()),
            });
        }
    }
    Ok(cases)
}

/// Rank measurements for one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseOutcome {
    pub desired_rank: usize,
    /// Dimension of the interference as received, before any projection.
    pub interference_dim: usize,
    /// Dimension left after the receive projection.
    pub residual_interference_dim: usize,
    pub decodable: usize,
}

fn tolerance(rel_tol: f64, rows: usize, cols: usize) -> f64 {
    rel_tol * rows.max(cols) as f64
}

/// Counts desired columns outside the span of all other received columns.
fn separable(desired: &DMatrix<f64>, interference: &DMatrix<f64>, tol: f64) -> (usize, usize, usize) {
    let basis = range_basis(interference, tol);
    let cleaned = project_out(desired, &basis);
    let decodable = independent_columns(&cleaned, tol).into_iter().filter(|x| *x).count();
    (rank_above(desired, tol), basis.ncols(), decodable)
}

fn normalized(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = m.clone();
    normalize_columns(&mut m);
    m
}

pub fn evaluate_case(case: &ReceiverCase, rel_tol: f64) -> CaseOutcome {
    let desired = normalized(&case.desired);
    let inter = normalized(&case.interference);
    let cols = desired.ncols() + inter.ncols();
    let interference_dim = rank_above(&inter, tolerance(rel_tol, inter.nrows(), cols));
    let (desired, inter) = match &case.receive_projection {
        Some(w) => (w.transpose() * desired, w.transpose() * inter),
        None => (desired, inter),
    };
    let (desired_rank, residual, decodable) = separable(&desired, &inter, tolerance(rel_tol, desired.nrows(), cols));
    CaseOutcome { desired_rank, interference_dim, residual_interference_dim: residual, decodable }
}

/// Desired streams decodable by zero-forcing at this receiver.
pub fn decodable_streams(case: &ReceiverCase, rel_tol: f64) -> usize {
    evaluate_case(case, rel_tol).decodable
}

/// Same test after first projecting onto the orthogonal complement of the
/// measured BS-to-BS interference span.
pub fn decodable_after_bs2bs_projection(case: &ReceiverCase, rel_tol: f64) -> usize {
    let desired = normalized(&case.desired);
    let inter = normalized(&case.interference);
    let cols = desired.ncols() + inter.ncols();
    let tol = tolerance(rel_tol, desired.nrows(), cols);
    let bs2bs = inter.columns(case.bs2bs_start, inter.ncols() - case.bs2bs_start).into_owned();
    let keep = orthogonal_complement(&bs2bs, tol);
    let ul = inter.columns(0, case.bs2bs_start).into_owned();
    separable(&(keep.transpose() * desired), &(keep.transpose() * ul), tol).2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReceiverReport {
    pub kind: ReceiverKind,
    pub index: Vec<usize>,
    pub desired_rank: usize,
    pub interference_dim: usize,
    pub residual_interference_dim: usize,
    pub decodable: usize,
    pub planned: usize,
    /// Plan's bound on the interference dimension, where it has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interference_budget: Option<u128>,
    /// Scheme 2 BSs: count after projecting out BS-to-BS interference.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projected_decodable: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub scheme: SchemeId,
    pub mode: Option<PlanMode>,
    pub self_interference: SelfInterference,
    pub config: NetworkConfig,
    pub t: u32,
    pub tdl: Option<u32>,
    pub d: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub random_ul_beams: bool,
    pub receivers: Vec<ReceiverReport>,
    pub total_decodable: usize,
    pub total_planned: usize,
    #[serde(with = "crate::exact::serde_fraction")]
    pub achieved_dof: Q,
    #[serde(with = "crate::exact::serde_fraction")]
    pub lp_limit: Q,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_zf_residual: Option<f64>,
}

impl VerificationReport {
    pub fn all_decoded(&self) -> bool {
        self.receivers.iter().all(|r| r.decodable == r.planned)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn receiver(&self, kind: ReceiverKind, index: &[usize]) -> Option<&ReceiverReport> {
        self.receivers.iter().find(|r| r.kind == kind && r.index == index)
    }
}

/// Achieved finite-extension DoF, the scheme's LP value, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofSummary {
    pub achieved: Q,
    pub limit: Q,
    pub ratio: Q,
}

pub fn achieved_dof(report: &VerificationReport) -> DofSummary {
    let achieved = Q::new(report.total_decodable as i128, report.d as i128);
    let ratio = if report.lp_limit == q(0) { q(0) } else { achieved / report.lp_limit };
    DofSummary { achieved, limit: report.lp_limit, ratio }
}

/// LP value of the scheme, or `KN` when `M >= KN` puts the LP out of
/// range.
pub fn lp_limit(scheme: SchemeId, c: &NetworkConfig) -> Q {
    lp::solve(scheme, c).map(|s| s.objective).unwrap_or_else(|_| q((c.k * c.n) as i128))
}

/// One symbolic containment failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ContainmentViolation {
    pub family: String,
    pub receiver: String,
    pub coefficient: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ContainmentReport {
    pub checked: usize,
    pub violations: Vec<ContainmentViolation>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn probe(
    report: &mut ContainmentReport,
    family: &str,
    receiver: String,
    alphabet: &[CoefficientId],
    e: Option<&Vec<u32>>,
    coef: CoefficientId,
    cap: u32,
) {
    report.checked += 1;
    let reason = match e {
        None => Some("beam carries no exponent metadata".to_string()),
        Some(e) => multiply_exponent(alphabet, e, &coef, cap).err(),
    };
    if let Some(reason) = reason {
        report.violations.push(ContainmentViolation {
            family: family.to_string(),
            receiver,
            coefficient: coef.to_string(),
            reason,
        });
    }
}

/// Symbolic check that every interfering beam, multiplied by the channel
/// coefficient it crosses, stays inside the extended exponent set over its
/// alphabet, and that no direct link is part of an alphabet.
pub fn check_containment(beams: &BeamformerSet) -> ContainmentReport {
    let c = beams.config;
    let mut report = ContainmentReport { checked: 0, violations: Vec::new() };
    for cell in 0..c.k {
        for user in 0..c.n {
            let family = format!("ul({cell},{user})");
            for beam in beams.ul_user(cell, user) {
                let e = beam.exponents.as_ref();
                for i in 0..c.k {
                    for j in 0..c.n {
                        let coef = CoefficientId::UserToUser { rx_cell: i, rx_user: j, tx_cell: cell, tx_user: user };
                        probe(&mut report, &family, format!("dlUser({i},{j})"), &beams.ul_alphabet, e, coef, beams.t);
                    }
                }
                for bs in (0..c.k).filter(|&b| b != cell) {
                    for antenna in 0..c.m {
                        let coef = CoefficientId::UlCross { bs, antenna, tx_cell: cell, tx_user: user };
                        probe(&mut report, &family, format!("bs({bs})"), &beams.ul_alphabet, e, coef, beams.t);
                    }
                }
            }
            for antenna in 0..c.m {
                let direct = CoefficientId::UlCross { bs: cell, antenna, tx_cell: cell, tx_user: user };
                if beams.ul_alphabet.contains(&direct) {
                    report.violations.push(ContainmentViolation {
                        family: family.clone(),
                        receiver: format!("bs({cell})"),
                        coefficient: direct.to_string(),
                        reason: "direct link is part of the alphabet".into(),
                    });
                }
            }
        }
    }

    if let (DlBeams::Aligned { alphabets, families }, Some(tdl)) = (&beams.dl, beams.tdl) {
        for (j, (alphabet, family)) in alphabets.iter().zip(families).enumerate() {
            for tx in 0..c.k {
                for q in 0..c.m {
                    let name = format!("dl(bs {tx}, antenna {q}, family {j})");
                    for beam in family {
                        let e = beam.exponents.as_ref();
                        for i in 0..c.k {
                            for p in 0..c.n {
                                if i == tx && p == j {
                                    continue;
                                }
                                let coef = CoefficientId::DlCross { rx_cell: i, rx_user: p, bs: tx, antenna: q };
                                probe(&mut report, &name, format!("dlUser({i},{p})"), alphabet, e, coef, tdl);
                            }
                        }
                        for r in 0..c.k {
                            if r == tx && beams.mode == SelfInterference::Suppressed {
                                continue;
                            }
                            for a in 0..c.m {
                                let coef = CoefficientId::Bs2Bs { rx_bs: r, rx_antenna: a, tx_bs: tx, tx_antenna: q };
                                probe(&mut report, &name, format!("bs({r})"), alphabet, e, coef, tdl);
                            }
                        }
                    }
                    let direct = CoefficientId::DlCross { rx_cell: tx, rx_user: j, bs: tx, antenna: q };
                    if alphabet.contains(&direct) {
                        report.violations.push(ContainmentViolation {
                            family: name,
                            receiver: format!("dlUser({tx},{j})"),
                            coefficient: direct.to_string(),
                            reason: "direct link is part of the alphabet".into(),
                        });
                    }
                }
            }
        }
    }
    report
}

/// Replaces every UL beam with i.i.d. uniform entries in `[-1, 1]`.
pub fn randomize_ul_beams(beams: &mut BeamformerSet, seed: u64) {
    const TAG_RANDOM_BEAMS: u64 = 5 << 56;
    for (u, user) in beams.ul_beams.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(TAG_RANDOM_BEAMS | u as u64);
        for beam in user.iter_mut() {
            beam.exponents = None;
            for x in beam.values.iter_mut() {
                *x = rng.random::<f64>() * 2.0 - 1.0;
            }
        }
    }
}

/// Which construction to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    /// Monomial alignment; `tdl: None` is the UL-only variant.
    Aligned { tdl: Option<u32> },
    ZeroForcing { mode: PlanMode },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub config: NetworkConfig,
    pub scheme: SchemeChoice,
    pub t: u32,
    pub seed: u64,
    pub rel_tol: f64,
    pub self_interference: SelfInterference,
    pub caps: Caps,
    /// Negative control: i.i.d. random UL beams in place of monomials.
    pub random_ul_beams: bool,
}

impl RunSpec {
    pub fn new(config: NetworkConfig, scheme: SchemeChoice, t: u32, seed: u64) -> Self {
        Self {
            config,
            scheme,
            t,
            seed,
            rel_tol: DEFAULT_REL_TOL,
            self_interference: SelfInterference::Suppressed,
            caps: Caps::default(),
            random_ul_beams: false,
        }
    }
}

/// A built construction ready for verification.
pub struct Construction {
    pub channels: ChannelRealization,
    pub beams: BeamformerSet,
    pub bs_budget: Option<u128>,
    pub dl_budget: Option<u128>,
    pub max_zf_residual: Option<f64>,
}

/// Plans, draws channels and builds the beams.
pub fn construct(spec: &RunSpec) -> Result<Construction> {
    let c = spec.config;
    let mode = spec.self_interference;
    match spec.scheme {
        SchemeChoice::Aligned { tdl } => {
            let plan = plan_scheme1(&c, spec.t, tdl, mode, &spec.caps)?;
            let channels = generate_channels(c, plan.d, spec.seed, mode)?;
            let mut beams = build_scheme1(&plan, &channels, &spec.caps)?;
            if spec.random_ul_beams {
                randomize_ul_beams(&mut beams, spec.seed);
            }
            Ok(Construction {
                channels,
                beams,
                bs_budget: Some(plan.bs_budget.interference),
                dl_budget: plan.dl_budget.map(|b| b.interference),
                max_zf_residual: None,
            })
        }
        SchemeChoice::ZeroForcing { mode: plan_mode } => {
            if spec.random_ul_beams {
                return Err(Error::InvalidConfig("random UL beams are only supported for scheme 1".into()));
            }
            let plan = plan_scheme2(&c, spec.t, plan_mode, mode, &spec.caps)?;
            let channels = generate_channels(c, plan.d, spec.seed, mode)?;
            let (beams, diag) = build_scheme2(&plan, &channels, &spec.caps)?;
            Ok(Construction {
                channels,
                beams,
                bs_budget: None,
                dl_budget: None,
                max_zf_residual: Some(diag.max_zf_residual),
            })
        }
    }
}

/// Verifies a built construction.
pub fn verify_construction(spec: &RunSpec, built: &Construction) -> Result<VerificationReport> {
    let beams = &built.beams;
    let cases = assemble_receiver_cases(&built.channels, beams)?;
    let scheme2 = beams.scheme == SchemeId::Scheme2;
    let receivers: Vec<ReceiverReport> = cases
        .par_iter()
        .map(|case| {
            let out = evaluate_case(case, spec.rel_tol);
            let projected = (scheme2 && case.kind == ReceiverKind::Bs)
                .then(|| decodable_after_bs2bs_projection(case, spec.rel_tol));
            ReceiverReport {
                kind: case.kind,
                index: case.index.clone(),
                desired_rank: out.desired_rank,
                interference_dim: out.interference_dim,
                residual_interference_dim: out.residual_interference_dim,
                decodable: out.decodable,
                planned: case.planned,
                interference_budget: match case.kind {
                    ReceiverKind::Bs => built.bs_budget,
                    ReceiverKind::DlUser => built.dl_budget,
                },
                projected_decodable: projected,
            }
        })
        .collect();
    let total_decodable = receivers.iter().map(|r| r.decodable).sum();
    let total_planned = receivers.iter().map(|r| r.planned).sum();
    Ok(VerificationReport {
        scheme: beams.scheme,
        mode: match spec.scheme {
            SchemeChoice::Aligned { .. } => None,
            SchemeChoice::ZeroForcing { mode } => Some(mode),
        },
        self_interference: spec.self_interference,
        config: spec.config,
        t: spec.t,
        tdl: beams.tdl,
        d: beams.d,
        seed: spec.seed,
        rel_tol: spec.rel_tol,
        random_ul_beams: spec.random_ul_beams,
        receivers,
        total_decodable,
        total_planned,
        achieved_dof: Q::new(total_decodable as i128, beams.d as i128),
        lp_limit: lp_limit(beams.scheme, &spec.config),
        max_zf_residual: built.max_zf_residual,
    })
}

/// Plan, channels, build and verify in one go.
pub fn run(spec: &RunSpec) -> Result<VerificationReport> {
    let built = construct(spec)?;
    verify_construction(spec, &built)
}
