//! Scheme 1: monomial interference-alignment beams at UL users and at every
//! BS transmit antenna, built at a finite exponent cap on a concrete channel.
//!
//! Exponents range only over the coefficients that actually multiply an
//! interfering beam (the reduced alphabets below). Direct links never enter
//! an alphabet, so desired channels stay independent of the beams.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lp::SchemeId;
use crate::network::{ChannelRealization, CoefficientId, NetworkConfig, SelfInterference};

/// Limits protecting against combinatorial blowup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest exponent set that may be enumerated.
    pub enumeration: u64,
    /// Largest time extension a planner may return.
    pub max_d: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self { enumeration: 1_000_000, max_d: 100_000 }
    }
}

/// UL alphabet: every user-to-user coefficient plus every UL coefficient
/// into a BS of a different cell. `|A_u| = KN(KN + (K-1)M)`.
pub fn ul_alphabet(c: &NetworkConfig) -> Vec<CoefficientId> {
    let NetworkConfig { k, m, n } = *c;
    let mut ids = Vec::with_capacity(k * n * (k * n + (k - 1) * m));
    for rx_cell in 0..k {
        for rx_user in 0..n {
            for tx_cell in 0..k {
                for tx_user in 0..n {
                    ids.push(CoefficientId::UserToUser { rx_cell, rx_user, tx_cell, tx_user });
                }
            }
        }
    }
    for bs in 0..k {
        for antenna in 0..m {
            for tx_cell in (0..k).filter(|&t| t != bs) {
                for tx_user in 0..n {
                    ids.push(CoefficientId::UlCross { bs, antenna, tx_cell, tx_user });
                }
            }
        }
    }
    ids
}

/// DL alphabet of beam family `j` (the beams every BS uses for its `j`-th
/// DL user): every BS-antenna-to-DL-user coefficient except the family's
/// direct links `g[lj, l·]`, plus the BS-to-BS coefficients between
/// different BSs (all of them when self-interference is present).
pub fn dl_alphabet(c: &NetworkConfig, j: usize, mode: SelfInterference) -> Result<Vec<CoefficientId>> {
    let NetworkConfig { k, m, n } = *c;
    if j >= n {
        return Err(Error::IndexOutOfRange(format!("DL user index {j} with N={n}")));
    }
    let mut ids = Vec::new();
    for rx_cell in 0..k {
        for rx_user in 0..n {
            for bs in 0..k {
                if bs == rx_cell && rx_user == j {
                    continue;
                }
                for antenna in 0..m {
                    ids.push(CoefficientId::DlCross { rx_cell, rx_user, bs, antenna });
                }
            }
        }
    }
    for rx_bs in 0..k {
        for rx_antenna in 0..m {
            for tx_bs in 0..k {
                if tx_bs == rx_bs && mode == SelfInterference::Suppressed {
                    continue;
                }
                for tx_antenna in 0..m {
                    ids.push(CoefficientId::Bs2Bs { rx_bs, rx_antenna, tx_bs, tx_antenna });
                }
            }
        }
    }
    Ok(ids)
}

/// `base^exp`, or `None` on `u128` overflow.
pub fn checked_pow(base: u64, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

fn enumeration_size(len: usize, t: u32, cap: u64, what: &str) -> Result<usize> {
    match checked_pow(t as u64, len) {
        Some(count) if count <= cap as u128 => Ok(count as usize),
        Some(count) => Err(Error::Size { what: what.into(), count: count.to_string(), cap }),
        None => Err(Error::Size { what: what.into(), count: format!("{t}^{len}"), cap }),
    }
}

/// All exponent vectors in `[0, T-1]^len`, lexicographic with the first
/// coordinate most significant.
pub fn enumerate_exponents(len: usize, t: u32, cap: u64) -> Result<Vec<Vec<u32>>> {
    if t == 0 {
        return Err(Error::InvalidConfig("exponent cap T must be positive".into()));
    }
    let count = enumeration_size(len, t, cap, "exponent set")?;
    let mut out = Vec::with_capacity(count);
    let mut cur = vec![0u32; len];
    for _ in 0..count {
        out.push(cur.clone());
        for pos in (0..len).rev() {
            cur[pos] += 1;
            if cur[pos] < t {
                break;
            }
            cur[pos] = 0;
        }
    }
    Ok(out)
}

/// Slotwise value of the monomial `∏ coeff^exponent`.
pub fn evaluate_beam(alphabet: &[CoefficientId], exponents: &[u32], channels: &ChannelRealization) -> Result<Vec<f64>> {
    if alphabet.len() != exponents.len() {
        return Err(Error::Dimension { expected: alphabet.len(), got: exponents.len() });
    }
    let mut out = vec![1.0; channels.d()];
    for (id, &e) in alphabet.iter().zip(exponents) {
        if e == 0 {
            continue;
        }
        let series = channels.series(id)?;
        for (o, c) in out.iter_mut().zip(series) {
            *o *= c.powi(e as i32);
        }
    }
    Ok(out)
}

/// Position of `coefficient` in `alphabet`, and whether multiplying the
/// monomial `exponents` by it stays inside `[0, cap]^|alphabet|`.
pub fn multiply_exponent(
    alphabet: &[CoefficientId],
    exponents: &[u32],
    coefficient: &CoefficientId,
    cap: u32,
) -> std::result::Result<Vec<u32>, String> {
    let Some(pos) = alphabet.iter().position(|id| id == coefficient) else {
        return Err(format!("{coefficient} is not in the alphabet"));
    };
    let mut next = exponents.to_vec();
    next[pos] += 1;
    if let Some((i, e)) = next.iter().enumerate().find(|(_, e)| **e > cap) {
        return Err(format!("exponent {e} of {} exceeds {cap}", alphabet[i]));
    }
    Ok(next)
}

/// One beam: its numeric time-extended vector and, for monomial beams, the
/// exponent vector it was evaluated from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Beam {
    pub exponents: Option<Vec<u32>>,
    pub values: Vec<f64>,
}

/// Dimension budget of one receiver type, derived from the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DimensionBudget {
    /// Received-signal dimension (`Md` at a BS, `d` at a DL user).
    pub available: u128,
    pub desired: u128,
    /// Upper bound on the interference dimension.
    pub interference: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Scheme1Plan {
    pub config: NetworkConfig,
    pub mode: SelfInterference,
    pub t: u32,
    /// DL exponent cap; `None` runs the UL-only variant.
    pub tdl: Option<u32>,
    pub d: usize,
    pub ul_alphabet_len: usize,
    pub dl_alphabet_len: usize,
    pub ul_beams_per_user: usize,
    pub dl_beams_per_user_per_antenna: usize,
    pub bs_budget: DimensionBudget,
    pub dl_budget: Option<DimensionBudget>,
}

impl Scheme1Plan {
    /// Streams planned at BS `i` (`N·E_u`).
    pub fn bs_streams(&self) -> usize {
        self.config.n * self.ul_beams_per_user
    }

    /// Streams planned at each DL user (`M·E_d`).
    pub fn dl_user_streams(&self) -> usize {
        if self.tdl.is_some() {
            self.config.m * self.dl_beams_per_user_per_antenna
        } else {
            0
        }
    }

    pub fn total_streams(&self) -> usize {
        let users = self.config.users();
        users * self.ul_beams_per_user + users * self.dl_user_streams()
    }
}

fn ceil_div(a: u128, b: u128) -> u128 {
    a.div_ceil(b)
}

fn size_err(what: &str, count: impl ToString, cap: u64) -> Error {
    Error::Size { what: what.into(), count: count.to_string(), cap }
}

/// Smallest `d` satisfying the BS-side and DL-user-side dimension counts
/// at exponent caps `T` (UL) and `Tdl` (DL).
pub fn plan_scheme1(
    c: &NetworkConfig,
    t: u32,
    tdl: Option<u32>,
    mode: SelfInterference,
    caps: &Caps,
) -> Result<Scheme1Plan> {
    if t == 0 || tdl == Some(0) {
        return Err(Error::InvalidConfig("exponent caps must be positive".into()));
    }
    let NetworkConfig { k, m, n } = *c;
    let (k128, m128, n128) = (k as u128, m as u128, n as u128);
    let a_u = ul_alphabet(c).len();
    let e_u = enumeration_size(a_u, t, caps.enumeration, "UL exponent set")?;
    let e_u_plus = checked_pow(t as u64 + 1, a_u).ok_or_else(|| size_err("extended UL exponent set", format!("{}^{a_u}", t + 1), caps.enumeration))?;
    let ul_inter = ((k128 - 1) * n128 * e_u as u128).min(m128 * e_u_plus);

    let a_d = dl_alphabet(c, 0, mode)?.len();
    let (e_d, e_d_plus) = match tdl {
        Some(tdl) => {
            let e_d = enumeration_size(a_d, tdl, caps.enumeration, "DL exponent set")?;
            let plus = checked_pow(tdl as u64 + 1, a_d)
                .ok_or_else(|| size_err("extended DL exponent set", format!("{}^{a_d}", tdl + 1), caps.enumeration))?;
            (e_d, plus)
        }
        None => (0, 0),
    };

    let bs2bs_present = tdl.is_some() && (k > 1 || mode == SelfInterference::Present);
    let bs2bs = if bs2bs_present { m128 * n128 * e_d_plus } else { 0 };
    let bs_desired = n128 * e_u as u128;
    let bs_need = bs_desired + ul_inter + bs2bs;
    let mut d = ceil_div(bs_need, m128);

    let dl_budget = tdl.map(|_| {
        let desired = m128 * e_d as u128;
        let interference = n128 * e_d_plus + e_u_plus;
        d = d.max(desired + interference);
        (desired, interference)
    });

    if d > caps.max_d as u128 {
        return Err(size_err("time extension d", d, caps.max_d));
    }
    let d_usize = d as usize;
    Ok(Scheme1Plan {
        config: *c,
        mode,
        t,
        tdl,
        d: d_usize,
        ul_alphabet_len: a_u,
        dl_alphabet_len: a_d,
        ul_beams_per_user: e_u,
        dl_beams_per_user_per_antenna: e_d,
        bs_budget: DimensionBudget { available: m128 * d, desired: bs_desired, interference: ul_inter + bs2bs },
        dl_budget: dl_budget.map(|(desired, interference)| DimensionBudget { available: d, desired, interference }),
    })
}

/// DL beams of a BeamformerSet.
#[derive(Debug, Clone, PartialEq)]
pub enum DlBeams {
    /// UL-only run.
    None,
    /// Monomial families: family `j` is used by every BS antenna for that
    /// BS's `j`-th DL user.
    Aligned { alphabets: Vec<Vec<CoefficientId>>, families: Vec<Vec<Beam>> },
    /// Zero-forcing beams `[bs][user][stream]`, each of length `Md` with
    /// antenna-major blocks of length `d`.
    ZeroForcing { beams: Vec<Vec<Vec<Vec<f64>>>> },
}

/// All transmit beams of one construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub scheme: SchemeId,
    pub config: NetworkConfig,
    pub mode: SelfInterference,
    pub d: usize,
    pub t: u32,
    pub tdl: Option<u32>,
    pub ul_alphabet: Vec<CoefficientId>,
    /// Per UL user `(cell, user)` at index `cell·N + user`.
    pub ul_beams: Vec<Vec<Beam>>,
    pub dl: DlBeams,
    /// Per DL user receive bases (`d x n` orthonormal columns), if the
    /// scheme fixes them.
    pub receive_bases: Option<Vec<DMatrix<f64>>>,
}

impl BeamformerSet {
    pub fn ul_user(&self, cell: usize, user: usize) -> &[Beam] {
        &self.ul_beams[cell * self.config.n + user]
    }

    /// Debug dump: exponent vectors and the first 8 entries of every beam.
    pub fn debug_dump(&self) -> Value {
        fn beam_json(b: &Beam) -> Value {
            json!({ "exponents": b.exponents, "head": &b.values[..b.values.len().min(8)] })
        }
        let ul: Vec<Value> = self.ul_beams.iter().map(|bs| Value::Array(bs.iter().map(beam_json).collect())).collect();
        let dl = match &self.dl {
            DlBeams::None => Value::Null,
            DlBeams::Aligned { alphabets, families } => json!({
                "alphabets": alphabets.iter().map(|a| a.iter().map(|id| id.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "families": families.iter().map(|f| f.iter().map(beam_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
            DlBeams::ZeroForcing { beams } => json!({
                "zeroForcing": beams.iter().map(|per_bs| per_bs.iter().map(|per_user| per_user.iter()
                    .map(|w| w[..w.len().min(8)].to_vec()).collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
        };
        json!({
            "scheme": self.scheme.as_str(),
            "d": self.d,
            "t": self.t,
            "tdl": self.tdl,
            "ulAlphabet": self.ul_alphabet.iter().map(|id| id.to_string()).collect::<Vec<_>>(),
            "ul": ul,
            "dl": dl,
        })
    }
}

/// Evaluates a whole generation set on the realization.
pub fn monomial_beams(alphabet: &[CoefficientId], t: u32, channels: &ChannelRealization, caps: &Caps) -> Result<Vec<Beam>> {
    enumerate_exponents(alphabet.len(), t, caps.enumeration)?
        .into_par_iter()
        .map(|e| {
            let values = evaluate_beam(alphabet, &e, channels)?;
            Ok(Beam { exponents: Some(e), values })
        })
        .collect()
}

/// Builds the monomial UL beams shared by every UL user.
pub fn build_ul_beams(
    c: &NetworkConfig,
    t: u32,
    channels: &ChannelRealization,
    caps: &Caps,
) -> Result<(Vec<CoefficientId>, Vec<Vec<Beam>>)> {
    let alphabet = ul_alphabet(c);
    let shared = monomial_beams(&alphabet, t, channels, caps)?;
    Ok((alphabet, vec![shared; c.users()]))
}

pub fn build_scheme1(plan: &Scheme1Plan, channels: &ChannelRealization, caps: &Caps) -> Result<BeamformerSet> {
    let c = plan.config;
    if channels.d() != plan.d {
        return Err(Error::Dimension { expected: plan.d, got: channels.d() });
    }
    if channels.config() != c {
        return Err(Error::InvalidConfig(format!("channels are for {}, plan is for {c}", channels.config())));
    }
    let (ul_alphabet, ul_beams) = build_ul_beams(&c, plan.t, channels, caps)?;
    let dl = match plan.tdl {
        None => DlBeams::None,
        Some(tdl) => {
            let alphabets = (0..c.n).map(|j| dl_alphabet(&c, j, plan.mode)).collect::<Result<Vec<_>>>()?;
            let families =
                alphabets.iter().map(|a| monomial_beams(a, tdl, channels, caps)).collect::<Result<Vec<_>>>()?;
            DlBeams::Aligned { alphabets, families }
        }
    };
    Ok(BeamformerSet {
        scheme: SchemeId::Scheme1,
        config: c,
        mode: plan.mode,
        d: plan.d,
        t: plan.t,
        tdl: plan.tdl,
        ul_alphabet,
        ul_beams,
        dl,
        receive_bases: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_columns, numeric_rank};
    use crate::network::generate_channels;
    use std::collections::HashSet;

    fn cfg(k: usize, m: usize, n: usize) -> NetworkConfig {
        NetworkConfig::new(k, m, n).unwrap()
    }

    #[test]
    fn alphabet_sizes() {
        for (k, m, n) in [(2, 1, 1), (1, 2, 2), (2, 2, 1), (3, 2, 2), (1, 1, 2)] {
            let c = cfg(k, m, n);
            assert_eq!(ul_alphabet(&c).len(), k * n * (k * n + (k - 1) * m));
            for j in 0..n {
                let sup = dl_alphabet(&c, j, SelfInterference::Suppressed).unwrap();
                assert_eq!(sup.len(), k * m * (k * n - 1 + (k - 1) * m));
                let si = dl_alphabet(&c, j, SelfInterference::Present).unwrap();
                assert_eq!(si.len(), k * m * (k * n - 1) + k * m * k * m);
            }
        }
        assert_eq!(ul_alphabet(&cfg(2, 1, 1)).len(), 6);
        assert_eq!(ul_alphabet(&cfg(1, 2, 2)).len(), 4);
        assert_eq!(ul_alphabet(&cfg(2, 2, 1)).len(), 8);
        assert_eq!(dl_alphabet(&cfg(2, 1, 1), 0, SelfInterference::Suppressed).unwrap().len(), 4);
        assert_eq!(dl_alphabet(&cfg(1, 2, 2), 0, SelfInterference::Suppressed).unwrap().len(), 2);
        assert_eq!(dl_alphabet(&cfg(2, 1, 1), 0, SelfInterference::Present).unwrap().len(), 6);
        assert!(matches!(
            dl_alphabet(&cfg(2, 1, 1), 1, SelfInterference::Suppressed),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn alphabets_exclude_direct_links() {
        let c = cfg(3, 2, 2);
        for id in ul_alphabet(&c) {
            if let CoefficientId::UlCross { bs, tx_cell, .. } = id {
                assert_ne!(bs, tx_cell);
            }
        }
        for j in 0..c.n {
            for id in dl_alphabet(&c, j, SelfInterference::Suppressed).unwrap() {
                match id {
                    CoefficientId::DlCross { rx_cell, rx_user, bs, .. } => assert!(!(rx_cell == bs && rx_user == j)),
                    CoefficientId::Bs2Bs { rx_bs, tx_bs, .. } => assert_ne!(rx_bs, tx_bs),
                    other => panic!("unexpected {other}"),
                }
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_exponents(6, 1, 100).unwrap(), vec![vec![0; 6]]);
        assert_eq!(
            enumerate_exponents(2, 2, 100).unwrap(),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        let all = enumerate_exponents(6, 3, 1000).unwrap();
        assert_eq!(all.len(), 729);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 729);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
        assert!(matches!(enumerate_exponents(6, 3, 728), Err(Error::Size { .. })));
        assert!(matches!(enumerate_exponents(60, 9, 1_000_000), Err(Error::Size { .. })));
    }

    #[test]
    fn beam_evaluation_examples() {
        let c = cfg(2, 1, 1);
        let ch = generate_channels(c, 5, 1, SelfInterference::Suppressed).unwrap();
        let a = ul_alphabet(&c);
        assert_eq!(evaluate_beam(&a, &[0; 6], &ch).unwrap(), vec![1.0; 5]);
        let mut e = vec![0; 6];
        e[3] = 1;
        assert_eq!(evaluate_beam(&a, &e, &ch).unwrap(), ch.series(&a[3]).unwrap());
        e[3] = 2;
        let sq: Vec<f64> = ch.series(&a[3]).unwrap().iter().map(|x| x * x).collect();
        assert_eq!(evaluate_beam(&a, &e, &ch).unwrap(), sq);
        let bad = [CoefficientId::UserToUser { rx_cell: 5, rx_user: 0, tx_cell: 0, tx_user: 0 }];
        assert!(matches!(evaluate_beam(&bad, &[1], &ch), Err(Error::Unresolvable(_))));
    }

    #[test]
    fn planner_examples() {
        let caps = Caps::default();
        let p = plan_scheme1(&cfg(2, 1, 1), 1, Some(1), SelfInterference::Suppressed, &caps).unwrap();
        assert_eq!((p.ul_beams_per_user, p.dl_beams_per_user_per_antenna, p.d), (1, 1, 81));
        assert_eq!(p.bs_budget.desired + p.bs_budget.interference, 18);
        assert_eq!(p.total_streams(), 4);

        let p = plan_scheme1(&cfg(1, 1, 2), 1, Some(1), SelfInterference::Suppressed, &caps).unwrap();
        assert_eq!((p.ul_alphabet_len, p.dl_alphabet_len), (4, 1));
        assert_eq!(p.d, 1 + 2 * 2 + 16);

        let ul_only: Vec<usize> = (1..=3)
            .map(|t| plan_scheme1(&cfg(2, 1, 1), t, None, SelfInterference::Suppressed, &caps).unwrap().d)
            .collect();
        assert_eq!(ul_only, vec![2, 128, 1458]);

        assert!(matches!(
            plan_scheme1(&cfg(3, 2, 2), 9, Some(1), SelfInterference::Suppressed, &caps),
            Err(Error::Size { .. })
        ));
    }

    #[test]
    fn plan_respects_both_counts() {
        let caps = Caps::default();
        let cases = [(2, 1, 1), (1, 1, 2), (2, 2, 1), (1, 2, 1)].map(|c| (c, SelfInterference::Suppressed));
        let si = [(2, 1, 1), (1, 1, 2), (1, 2, 1)].map(|c| (c, SelfInterference::Present));
        for ((k, m, n), mode) in cases.into_iter().chain(si) {
            {
                let p = plan_scheme1(&cfg(k, m, n), 1, Some(1), mode, &caps).unwrap();
                let b = p.bs_budget;
                assert!(b.available >= b.desired + b.interference);
                let dl = p.dl_budget.unwrap();
                assert!(dl.available >= dl.desired + dl.interference);
                // minimality
                let tight = (m as u128 * (p.d as u128 - 1) < b.desired + b.interference)
                    || ((p.d as u128 - 1) < dl.desired + dl.interference);
                assert!(tight);
            }
        }
    }

    #[test]
    fn built_beams_match_plan() {
        let caps = Caps::default();
        let c = cfg(2, 1, 1);
        let p = plan_scheme1(&c, 1, Some(1), SelfInterference::Suppressed, &caps).unwrap();
        let ch = generate_channels(c, p.d, 3, SelfInterference::Suppressed).unwrap();
        let set = build_scheme1(&p, &ch, &caps).unwrap();
        for user in &set.ul_beams {
            assert_eq!(user.len(), 1);
            assert_eq!(user[0].values, vec![1.0; 81]);
        }

        let p = plan_scheme1(&c, 2, None, SelfInterference::Suppressed, &caps).unwrap();
        let ch = generate_channels(c, p.d, 3, SelfInterference::Suppressed).unwrap();
        let set = build_scheme1(&p, &ch, &caps).unwrap();
        let beams = set.ul_user(1, 0);
        assert_eq!(beams.len(), p.ul_beams_per_user);
        let cols: Vec<Vec<f64>> = beams.iter().map(|b| b.values.clone()).collect();
        assert_eq!(numeric_rank(&from_columns(p.d, &cols), 1e-9), 64);

        let wrong = generate_channels(c, p.d + 1, 3, SelfInterference::Suppressed).unwrap();
        assert!(matches!(build_scheme1(&p, &wrong, &caps), Err(Error::Dimension { .. })));
    }

    #[test]
    fn multiply_exponent_reports_out_of_set_products() {
        let a = ul_alphabet(&cfg(2, 1, 1));
        assert_eq!(multiply_exponent(&a, &[0; 6], &a[2], 1).unwrap()[2], 1);
        assert!(multiply_exponent(&a, &[0, 0, 1, 0, 0, 0], &a[2], 1).is_err());
        let direct = CoefficientId::UlCross { bs: 0, antenna: 0, tx_cell: 0, tx_user: 0 };
        assert!(multiply_exponent(&a, &[0; 6], &direct, 1).is_err());
    }
}
