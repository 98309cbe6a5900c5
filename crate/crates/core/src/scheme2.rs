//! Scheme 2: the monomial UL beams of scheme 1 plus zero-forcing DL beams.
//!
//! Each DL user first fixes its receive space (the orthogonal complement of
//! its user-to-user interference). Every BS then picks DL beams orthogonal
//! to three families of constraint vectors: the desired UL signals of the
//! other BSs seen through the BS-to-BS channel, and the receive spaces of
//! all DL users other than the target seen through the DL channel.
//!
//! Orthogonality is imposed on the transmit side with transposed channels:
//! `⟨H x, y⟩ = ⟨x, Hᵀ y⟩`, so `x ⟂ Hᵀ y` is exactly "the received `H x` is
//! invisible to `y`".

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{from_columns, normalize_columns, orthogonal_complement, rank_above};
use crate::lp::SchemeId;
use crate::network::{accumulate_diagonal, ChannelRealization, NetworkConfig, SelfInterference};
use crate::scheme1::{build_ul_beams, checked_pow, ul_alphabet, BeamformerSet, Caps, DlBeams};

/// Relative tolerance used when measuring spans during construction.
pub const CONSTRUCTION_REL_TOL: f64 = 1e-9;

/// How the planner budgets BS-to-BS interference at the BSs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum PlanMode {
    /// Only the zero-forcing, receive-space and UL decoding counts.
    Paper,
    /// Additionally reserves BS dimensions for the BS-to-BS interference.
    Conservative,
}

impl PlanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Conservative => "conservative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Scheme2Plan {
    pub config: NetworkConfig,
    pub mode: SelfInterference,
    pub plan_mode: PlanMode,
    pub t: u32,
    pub d: usize,
    pub ul_beams_per_user: usize,
    /// DL streams per DL user.
    pub n_d: usize,
    /// Bound on the user-to-user interference dimension at a DL user.
    pub w_interference_bound: u128,
}

impl Scheme2Plan {
    pub fn bs_streams(&self) -> usize {
        self.config.n * self.ul_beams_per_user
    }

    pub fn total_streams(&self) -> usize {
        self.config.users() * (self.ul_beams_per_user + self.n_d)
    }

    /// Number of BSs whose UL signals each BS has to protect.
    fn protected_cells(&self) -> usize {
        protected_cells(&self.config, self.mode)
    }

    /// Constraint vectors per DL user: protected UL streams, other cells'
    /// receive spaces, and the same cell's other receive spaces.
    pub fn constraint_count(&self) -> usize {
        let NetworkConfig { k, n, .. } = self.config;
        self.protected_cells() * n * self.ul_beams_per_user + (k - 1) * n * self.n_d + (n - 1) * self.n_d
    }
}

fn protected_cells(c: &NetworkConfig, mode: SelfInterference) -> usize {
    match mode {
        SelfInterference::Suppressed => c.k - 1,
        SelfInterference::Present => c.k,
    }
}

struct Counts {
    k: u128,
    m: u128,
    n: u128,
    e_u: u128,
    w_bound: u128,
    bs_need: u128,
    protected: u128,
}

impl Counts {
    /// Largest feasible `n_d` at extension `d`, if any.
    fn max_nd(&self, d: u128, plan_mode: PlanMode) -> Option<u128> {
        let md = self.m * d;
        let zf_used = self.protected * self.n * self.e_u;
        if md < zf_used || d < self.w_bound || md < self.bs_need {
            return None;
        }
        let mut nd = ((md - zf_used) / (self.k * self.n)).min(d - self.w_bound);
        if plan_mode == PlanMode::Conservative && self.protected > 0 {
            nd = nd.min((md - self.bs_need) / (self.protected * self.n));
        }
        (nd > 0).then_some(nd)
    }
}

/// Picks `(d, n_d)` maximising the finite-extension sum DoF
/// `KN(E_u + n_d)/d`, preferring the smaller `d` on ties.
pub fn plan_scheme2(
    c: &NetworkConfig,
    t: u32,
    plan_mode: PlanMode,
    mode: SelfInterference,
    caps: &Caps,
) -> Result<Scheme2Plan> {
    if t == 0 {
        return Err(Error::InvalidConfig("exponent cap T must be positive".into()));
    }
    let a_u = ul_alphabet(c).len();
    let size = |what: &str, count: String| Error::Size { what: what.into(), count, cap: caps.enumeration };
    let e_u = checked_pow(t as u64, a_u).ok_or_else(|| size("UL exponent set", format!("{t}^{a_u}")))?;
    if e_u > caps.enumeration as u128 {
        return Err(size("UL exponent set", e_u.to_string()));
    }
    let e_u_plus = checked_pow(t as u64 + 1, a_u).unwrap_or(u128::MAX);
    let (k, m, n) = (c.k as u128, c.m as u128, c.n as u128);
    let counts = Counts {
        k,
        m,
        n,
        e_u,
        w_bound: (k * n * e_u).min(e_u_plus),
        bs_need: n * e_u + ((k - 1) * n * e_u).min(m.saturating_mul(e_u_plus)),
        protected: protected_cells(c, mode) as u128,
    };

    let mut best: Option<(u128, u128)> = None;
    for d in 1..=caps.max_d as u128 {
        if let Some((bd, bn)) = best {
            // No later d can beat N·E_u/d + M, the zero-forcing ceiling.
            if (n * e_u + m * d) * bd <= k * n * (e_u + bn) * d {
                break;
            }
        }
        let Some(nd) = counts.max_nd(d, plan_mode) else { continue };
        let better = match best {
            None => true,
            Some((bd, bn)) => (e_u + nd) * bd > (e_u + bn) * d,
        };
        if better {
            best = Some((d, nd));
        }
    }
    let (d, n_d) = best.ok_or_else(|| {
        Error::Feasibility(format!("{c}: no (d, n_d) with d <= {} satisfies the scheme 2 counts", caps.max_d))
    })?;
    Ok(Scheme2Plan {
        config: *c,
        mode,
        plan_mode,
        t,
        d: d as usize,
        ul_beams_per_user: e_u as usize,
        n_d: n_d as usize,
        w_interference_bound: counts.w_bound,
    })
}

/// Checks the plan's counting invariants directly.
pub fn plan_is_feasible(p: &Scheme2Plan) -> bool {
    let NetworkConfig { k, m, n } = p.config;
    let (d, e_u, nd) = (p.d as u128, p.ul_beams_per_user as u128, p.n_d as u128);
    let (k, m, n) = (k as u128, m as u128, n as u128);
    let protected = p.protected_cells() as u128;
    let zf = m * d >= protected * n * e_u + k * n * nd;
    let w = d >= p.w_interference_bound + nd;
    let e_u_plus = checked_pow(p.t as u64 + 1, ul_alphabet(&p.config).len()).unwrap_or(u128::MAX);
    let bs_need = n * e_u + ((k - 1) * n * e_u).min(m.saturating_mul(e_u_plus));
    let bs = match p.plan_mode {
        PlanMode::Paper => m * d >= bs_need,
        PlanMode::Conservative => m * d >= bs_need + protected * n * nd,
    };
    zf && w && bs && nd > 0
}

/// Per DL user `(i, j)` (index `i·N + j`): `n_d` orthonormal vectors
/// orthogonal to every UL beam as received through the user-to-user
/// channels. Also returns the measured interference dimensions.
pub fn build_w_basis(
    c: &NetworkConfig,
    channels: &ChannelRealization,
    ul: &BeamformerSet,
    n_d: usize,
) -> Result<(Vec<DMatrix<f64>>, Vec<usize>)> {
    let d = channels.d();
    let per_user: Vec<Result<(DMatrix<f64>, usize)>> = (0..c.users())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / c.n, idx % c.n);
            let mut cols = Vec::new();
            for k in 0..c.k {
                for l in 0..c.n {
                    let h = channels.h(i, j, k, l);
                    for beam in ul.ul_user(k, l) {
                        cols.push(h.iter().zip(&beam.values).map(|(a, b)| a * b).collect::<Vec<f64>>());
                    }
                }
            }
            let mut span = from_columns(d, &cols);
            normalize_columns(&mut span);
            let tol = CONSTRUCTION_REL_TOL * d.max(cols.len()) as f64;
            let measured = rank_above(&span, tol);
            let complement = orthogonal_complement(&span, tol);
            if complement.ncols() < n_d {
                return Err(Error::Feasibility(format!(
                    "DL user ({i},{j}): user-to-user interference spans {measured} of {d} dimensions, \
                     leaving {} < n_d = {n_d}",
                    complement.ncols()
                )));
            }
            Ok((complement.columns(0, n_d).into_owned(), measured))
        })
        .collect();
    let mut bases = Vec::with_capacity(per_user.len());
    let mut dims = Vec::with_capacity(per_user.len());
    for r in per_user {
        let (b, m) = r?;
        bases.push(b);
        dims.push(m);
    }
    Ok((bases, dims))
}

/// Stacked antenna-major vector `[f(q,a,q,k) ⊙ v]_a`.
fn ul_at_bs(channels: &ChannelRealization, q: usize, cell: usize, user: usize, v: &[f64]) -> Vec<f64> {
    let (m, d) = (channels.config().m, channels.d());
    let mut y = vec![0.0; m * d];
    for a in 0..m {
        accumulate_diagonal(&mut y[a * d..(a + 1) * d], channels.f(q, a, cell, user), v);
    }
    y
}

/// `B̄_{qi}ᵀ y`: block `b` is `Σ_a b(q,a,i,b) ⊙ y_a`.
fn bs2bs_transpose(channels: &ChannelRealization, q: usize, i: usize, y: &[f64]) -> Vec<f64> {
    let (m, d) = (channels.config().m, channels.d());
    let mut x = vec![0.0; m * d];
    for tx in 0..m {
        for rx in 0..m {
            accumulate_diagonal(&mut x[tx * d..(tx + 1) * d], channels.b(q, rx, i, tx), &y[rx * d..(rx + 1) * d]);
        }
    }
    x
}

/// `Ḡ_{qp,i}ᵀ w`: block `b` is `g(q,p,i,b) ⊙ w`.
fn dl_transpose(channels: &ChannelRealization, q: usize, p: usize, i: usize, w: &[f64]) -> Vec<f64> {
    let (m, d) = (channels.config().m, channels.d());
    let mut x = vec![0.0; m * d];
    for b in 0..m {
        accumulate_diagonal(&mut x[b * d..(b + 1) * d], channels.g(q, p, i, b), w);
    }
    x
}

/// The constraint vectors a ZF beam of BS `i` for its user `j` must be
/// orthogonal to, as columns of an `Md`-row matrix.
pub fn zf_constraints(
    channels: &ChannelRealization,
    ul: &BeamformerSet,
    w_bases: &[DMatrix<f64>],
    i: usize,
    j: usize,
) -> DMatrix<f64> {
    let c = channels.config();
    let mut cols = Vec::new();
    for q in 0..c.k {
        if q == i && channels.mode() == SelfInterference::Suppressed {
            continue;
        }
        for k in 0..c.n {
            for beam in ul.ul_user(q, k) {
                let y = ul_at_bs(channels, q, q, k, &beam.values);
                cols.push(bs2bs_transpose(channels, q, i, &y));
            }
        }
    }
    for q in 0..c.k {
        for p in 0..c.n {
            if q == i && p == j {
                continue;
            }
            let w = &w_bases[q * c.n + p];
            for col in w.column_iter() {
                let w: Vec<f64> = col.iter().copied().collect();
                cols.push(dl_transpose(channels, q, p, i, &w));
            }
        }
    }
    from_columns(c.m * channels.d(), &cols)
}

/// Largest `|⟨x, u⟩| / (‖x‖ ‖u‖)` over beams `x` and constraints `u`.
pub fn max_relative_inner(beams: &[Vec<f64>], constraints: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for x in beams {
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for u in constraints.column_iter() {
            let un = u.norm();
            if xn == 0.0 || un == 0.0 {
                continue;
            }
            let dot: f64 = x.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            worst = worst.max(dot.abs() / (xn * un));
        }
    }
    worst
}

/// Construction diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Scheme2Diagnostics {
    /// Largest relative inner product between a ZF beam and a constraint.
    pub max_zf_residual: f64,
    /// Measured user-to-user interference dimension per DL user.
    pub w_interference_dims: Vec<usize>,
    pub constraints_per_user: usize,
}

/// ZF beams `[bs][user][stream]` for the given receive bases.
pub fn build_zf_beams(
    channels: &ChannelRealization,
    ul: &BeamformerSet,
    w_bases: &[DMatrix<f64>],
    n_d: usize,
) -> Result<(Vec<Vec<Vec<Vec<f64>>>>, f64)> {
    let c = channels.config();
    let md = c.m * channels.d();
    let per_user: Vec<Result<(Vec<Vec<f64>>, f64)>> = (0..c.users())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / c.n, idx % c.n);
            let raw = zf_constraints(channels, ul, w_bases, i, j);
            let mut cons = raw.clone();
            normalize_columns(&mut cons);
            let tol = CONSTRUCTION_REL_TOL * md.max(cons.ncols()) as f64;
            let free = orthogonal_complement(&cons, tol);
            if free.ncols() < n_d {
                return Err(Error::Feasibility(format!(
                    "BS {i}, DL user {j}: constraints leave {} free dimensions of {md}, need n_d = {n_d}",
                    free.ncols()
                )));
            }
            let beams: Vec<Vec<f64>> = (0..n_d).map(|s| free.column(s).iter().copied().collect()).collect();
            let residual = max_relative_inner(&beams, &raw);
            Ok((beams, residual))
        })
        .collect();
    let mut out = vec![Vec::with_capacity(c.n); c.k];
    let mut worst: f64 = 0.0;
    for (idx, r) in per_user.into_iter().enumerate() {
        let (beams, residual) = r?;
        out[idx / c.n].push(beams);
        worst = worst.max(residual);
    }
    Ok((out, worst))
}

/// Plan, UL beams, receive bases, then ZF beams.
pub fn build_scheme2(
    plan: &Scheme2Plan,
    channels: &ChannelRealization,
    caps: &Caps,
) -> Result<(BeamformerSet, Scheme2Diagnostics)> {
    let c = plan.config;
    if channels.d() != plan.d {
        return Err(Error::Dimension { expected: plan.d, got: channels.d() });
    }
    let (ul_alphabet, ul_beams) = build_ul_beams(&c, plan.t, channels, caps)?;
    let mut set = BeamformerSet {
        scheme: SchemeId::Scheme2,
        config: c,
        mode: plan.mode,
        d: plan.d,
        t: plan.t,
        tdl: None,
        ul_alphabet,
        ul_beams,
        dl: DlBeams::None,
        receive_bases: None,
    };
    let (w_bases, dims) = build_w_basis(&c, channels, &set, plan.n_d)?;
    let (beams, residual) = build_zf_beams(channels, &set, &w_bases, plan.n_d)?;
    set.dl = DlBeams::ZeroForcing { beams };
    set.receive_bases = Some(w_bases);
    let diag = Scheme2Diagnostics {
        max_zf_residual: residual,
        w_interference_dims: dims,
        constraints_per_user: plan.constraint_count(),
    };
    Ok((set, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_channels;

    fn cfg(k: usize, m: usize, n: usize) -> NetworkConfig {
        NetworkConfig::new(k, m, n).unwrap()
    }

    fn plan(k: usize, m: usize, n: usize, mode: PlanMode) -> Scheme2Plan {
        plan_scheme2(&cfg(k, m, n), 1, mode, SelfInterference::Suppressed, &Caps::default()).unwrap()
    }

    #[test]
    fn planner_examples() {
        let p = plan(2, 1, 1, PlanMode::Paper);
        assert_eq!((p.d, p.n_d, p.ul_beams_per_user), (3, 1, 1));
        let p = plan(2, 2, 2, PlanMode::Paper);
        assert_eq!((p.d, p.n_d), (7, 3));
        let p = plan(1, 2, 4, PlanMode::Paper);
        assert_eq!((p.d, p.n_d), (8, 4));
        for mode in [PlanMode::Paper, PlanMode::Conservative] {
            for (k, m, n) in [(2, 1, 1), (2, 2, 2), (1, 2, 4), (3, 1, 1), (2, 1, 2)] {
                assert!(plan_is_feasible(&plan(k, m, n, mode)));
            }
        }
    }

    // Brute force over a small grid: nothing beats the planner's choice.
    #[test]
    fn planner_is_optimal_on_small_grid() {
        for mode in [PlanMode::Paper, PlanMode::Conservative] {
            for (k, m, n) in [(2, 1, 1), (2, 2, 2), (3, 1, 1), (2, 1, 2), (3, 2, 1)] {
                let p = plan(k, m, n, mode);
                let best = (p.ul_beams_per_user + p.n_d) as f64 / p.d as f64;
                for d in 1..60 {
                    for nd in 1..60 {
                        let cand = Scheme2Plan { d, n_d: nd, ..p.clone() };
                        if plan_is_feasible(&cand) {
                            let v = (p.ul_beams_per_user + nd) as f64 / d as f64;
                            assert!(v <= best + 1e-12, "({k},{m},{n}) d={d} nd={nd}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn conservative_never_exceeds_paper() {
        for (k, m, n) in [(2, 1, 1), (2, 2, 2), (3, 1, 1), (3, 2, 2), (2, 3, 2)] {
            let a = plan(k, m, n, PlanMode::Paper);
            let b = plan(k, m, n, PlanMode::Conservative);
            let (pa, pb) = ((a.ul_beams_per_user + a.n_d) * b.d, (b.ul_beams_per_user + b.n_d) * a.d);
            assert!(pb <= pa);
        }
    }

    #[test]
    fn constraint_count_examples() {
        let p = plan(2, 1, 1, PlanMode::Conservative);
        assert_eq!(p.constraint_count(), 1 + p.n_d);
        let p = plan(1, 2, 4, PlanMode::Paper);
        assert_eq!(p.constraint_count(), 3 * p.n_d);
    }

    #[test]
    fn w_basis_boundaries() {
        let c = cfg(2, 1, 1);
        let caps = Caps::default();
        let ch = generate_channels(c, 5, 11, SelfInterference::Suppressed).unwrap();
        let (alpha, beams) = build_ul_beams(&c, 1, &ch, &caps).unwrap();
        let set = BeamformerSet {
            scheme: SchemeId::Scheme2,
            config: c,
            mode: SelfInterference::Suppressed,
            d: 5,
            t: 1,
            tdl: None,
            ul_alphabet: alpha,
            ul_beams: beams,
            dl: DlBeams::None,
            receive_bases: None,
        };
        // Two UL users with the same all-ones beam: span dimension 2.
        let (bases, dims) = build_w_basis(&c, &ch, &set, 3).unwrap();
        assert_eq!(dims, vec![2, 2]);
        assert!(bases.iter().all(|b| b.ncols() == 3));
        assert!(matches!(build_w_basis(&c, &ch, &set, 5), Err(Error::Feasibility(_))));
    }

    #[test]
    fn zf_beams_are_orthogonal_to_constraints() {
        let caps = Caps::default();
        for (k, m, n) in [(2, 1, 1), (2, 2, 2), (1, 2, 4)] {
            for mode in [PlanMode::Paper, PlanMode::Conservative] {
                let p = plan(k, m, n, mode);
                let ch = generate_channels(p.config, p.d, 5, SelfInterference::Suppressed).unwrap();
                let (set, diag) = build_scheme2(&p, &ch, &caps).unwrap();
                assert!(diag.max_zf_residual <= 1e-9, "({k},{m},{n}) {mode:?} {}", diag.max_zf_residual);
                let DlBeams::ZeroForcing { beams } = &set.dl else { panic!() };
                assert_eq!(beams.len(), k);
                assert!(beams.iter().all(|per_bs| per_bs.len() == n && per_bs.iter().all(|s| s.len() == p.n_d)));
            }
        }
    }

    #[test]
    fn self_interference_mode_protects_own_cell() {
        let caps = Caps::default();
        let c = cfg(2, 2, 2);
        let p = plan_scheme2(&c, 1, PlanMode::Conservative, SelfInterference::Present, &caps).unwrap();
        assert!(plan_is_feasible(&p));
        let ch = generate_channels(c, p.d, 9, SelfInterference::Present).unwrap();
        let (_, diag) = build_scheme2(&p, &ch, &caps).unwrap();
        assert!(diag.max_zf_residual <= 1e-9);
        assert_eq!(diag.constraints_per_user, 2 * 2 + 2 * p.n_d + p.n_d);
    }
}
