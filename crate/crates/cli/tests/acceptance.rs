//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fdcell::exact::{frac, parse_fraction, q, Q};
use fdcell::formulas::{dof_fd_achievable, dof_fd_upper, dof_gap_ratio, dof_hd, dof_no_bs2bs, dof_self_interference};
use fdcell::lp::{self, best_achievable, SchemeId};
use fdcell::scheme2::PlanMode;
use fdcell::verify::{check_containment, construct, run, ReceiverKind, RunSpec, SchemeChoice, VerificationReport};
use fdcell::NetworkConfig;

fn cfg(k: usize, m: usize, n: usize) -> NetworkConfig {
    NetworkConfig::new(k, m, n).unwrap()
}

fn grid() -> impl Iterator<Item = NetworkConfig> {
    (2..=6).flat_map(|k| (1..=40).flat_map(move |m| (1..=40).map(move |n| cfg(k, m, n))))
}

fn fdcell() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdcell"))
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    if took > budget {
        o.passed = false;
        o.detail.push_str(&format!("; took {took:.1?} > {budget:?}"));
    } else {
        o.detail.push_str(&format!(" ({took:.1?})"));
    }
    o
}

fn criterion_1() -> Outcome {
    let mismatches: Vec<_> = grid().filter(|c| best_achievable(c).value != dof_fd_achievable(c).value).collect();
    outcome(mismatches.is_empty(), format!("{} grid points, {} mismatches {:?}", grid().count(), mismatches.len(), mismatches.first()))
}

fn criterion_2() -> Outcome {
    let a = cfg(3, 15, 30);
    let (m, n) = (q(15), q(30));
    let bound = q(1) + m * n / (m * m + n * n + m * n);
    let checks = [
        ("fd(3,15,30)=270/7", dof_fd_achievable(&a).value == frac(270, 7)),
        ("hd(3,15,30)=30", dof_hd(&a).value == q(30)),
        ("ratio=9/7", dof_gap_ratio(&a) == frac(9, 7)),
        ("ratio=1+MN/(M²+N²+MN)", dof_gap_ratio(&a) == bound && 15 <= (3 - 2) * 30),
        ("fd(2,1,1)=3/2", dof_fd_achievable(&cfg(2, 1, 1)).value == frac(3, 2)),
        (
            "fd(2,3,2)=upper=4",
            dof_fd_achievable(&cfg(2, 3, 2)).value == q(4) && dof_fd_upper(&cfg(2, 3, 2)).value == q(4),
        ),
    ];
    let failed: Vec<_> = checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect();
    outcome(failed.is_empty(), if failed.is_empty() { "all named values exact".into() } else { format!("failed {failed:?}") })
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let all: Vec<_> = grid().collect();
    type Closed = fn(&NetworkConfig) -> Q;
    let bands: [(&str, fn(&NetworkConfig) -> bool, Closed); 3] = [
        ("M<=(K-2)N", |c| c.m <= (c.k - 2) * c.n, |c| q((c.m * c.k) as i128) / q(c.k as i128 - 1)),
        ("(K-2)N<M<(K-1)N", |c| (c.k - 2) * c.n < c.m && c.m < (c.k - 1) * c.n, |c| {
            let (m, n) = (q(c.m as i128), q(c.n as i128));
            (q(2) * m * n + m * m) / (m + n)
        }),
        ("(K-1)N<=M<K²N/(K+1)", |c| (c.k - 1) * c.n <= c.m && c.m * (c.k + 1) < c.k * c.k * c.n, |c| {
            let m = q(c.m as i128);
            m + m / q(c.k as i128)
        }),
    ];
    let mut bad = Vec::new();
    for (name, inside, closed) in bands {
        let pool: Vec<_> = all.iter().filter(|c| inside(c)).collect();
        for c in pool.choose_multiple(&mut rng, 20) {
            let lp = lp::solve(SchemeId::Scheme2, c).map(|s| s.objective);
            if lp.as_ref().ok() != Some(&closed(c)) {
                bad.push(format!("{name} {c}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("60 sampled configs, mismatches {bad:?}"))
}

fn criterion_4() -> Outcome {
    let mut lp_bad = Vec::new();
    let mut order_bad = Vec::new();
    for c in grid() {
        let (k, m, n) = (q(c.k as i128), q(c.m as i128), q(c.n as i128));
        let closed = (k * n).min((m + k * m * n / (m + n)).max(q(2) * m));
        let via_lp = lp::no_bs2bs_value(&c);
        if via_lp != closed || dof_no_bs2bs(&c).value != closed {
            lp_bad.push(c);
        }
        let (si, fd) = (dof_self_interference(&c).value, dof_fd_achievable(&c).value);
        if !(si <= fd && fd <= closed) {
            order_bad.push(c);
        }
    }
    outcome(
        lp_bad.is_empty() && order_bad.is_empty(),
        format!(
            "no-BS2BS LP vs closed form: {} mismatches; ordering self <= fd <= no_bs2bs: {} violations, first {:?}",
            lp_bad.len(),
            order_bad.len(),
            order_bad.first().map(|c| (c, dof_fd_achievable(c).value, dof_no_bs2bs(c).value))
        ),
    )
}

fn sweep_csv(var: &str, range: &str, k: usize, m: usize, n: usize) -> Vec<(usize, Q, Q)> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let status = fdcell()
        .args(["sweep", "--var", var, "--range", range])
        .args(["--k", &k.to_string(), "--m", &m.to_string(), "--n", &n.to_string()])
        .arg("--out")
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (ci, fd, hd) = (col(var), col("fd_lower_exact"), col("hd_exact"));
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[ci].parse().unwrap(), parse_fraction(&r[fd]).unwrap(), parse_fraction(&r[hd]).unwrap())
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let ks = sweep_csv("K", "1:8", 1, 15, 30);
    let flat: Vec<_> = ks.windows(2).filter(|w| w[1].1 <= w[0].1).map(|w| (w[0].0, w[1].0)).collect();
    let shrink: Vec<_> = ks.windows(2).filter(|w| w[1].1 - w[1].2 < w[0].1 - w[0].2).map(|w| (w[0].0, w[1].0)).collect();
    let ns = sweep_csv("N", "1:60", 3, 15, 1);
    let gain_off: Vec<_> = ns.iter().filter(|(n, fd, hd)| (fd > hd) != (*n >= 5)).map(|(n, fd, hd)| (*n, *fd, *hd)).collect();
    outcome(
        ks.len() == 8 && flat.is_empty() && shrink.is_empty() && gain_off.is_empty(),
        format!(
            "K-sweep rows {}, non-increasing steps {flat:?}, shrinking gap {shrink:?}; N-sweep points where fd>hd disagrees with N>=5: {gain_off:?}",
            ks.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (k, m, n, t, tdl) in [(2, 1, 1, 1, 1), (2, 1, 1, 2, 1), (2, 2, 1, 1, 1), (1, 1, 2, 2, 1)] {
        let spec = RunSpec::new(cfg(k, m, n), SchemeChoice::Aligned { tdl: Some(tdl) }, t, 1);
        match construct(&spec) {
            Ok(built) => {
                let rep = check_containment(&built.beams);
                ok &= rep.passed() && rep.checked > 0;
                notes.push(format!("({k},{m},{n},{t},{tdl}) {} checked/{} violations", rep.checked, rep.violations.len()));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("({k},{m},{n},{t},{tdl}) error {e}"));
            }
        }
    }
    outcome(ok, notes.join(", "))
}

fn within_budgets(r: &VerificationReport) -> bool {
    r.receivers.iter().all(|x| x.interference_budget.is_none_or(|b| x.interference_dim as u128 <= b))
}

fn criterion_7() -> Outcome {
    let mut bad = Vec::new();
    for seed in 0..20 {
        let spec = |tol| RunSpec { rel_tol: tol, ..RunSpec::new(cfg(2, 1, 1), SchemeChoice::Aligned { tdl: Some(1) }, 1, seed) };
        let r = run(&spec(1e-9)).unwrap();
        let ok = r.d == 81
            && r.all_decoded()
            && r.total_planned == 4
            && r.achieved_dof == frac(4, 81)
            && within_budgets(&r)
            && [1e-8, 1e-10].iter().all(|&tol| {
                let other = run(&spec(tol)).unwrap();
                other.receivers.iter().zip(&r.receivers).all(|(a, b)| a.decodable == b.decodable)
            });
        if !ok {
            bad.push(seed);
        }
    }
    outcome(bad.is_empty(), format!("20 seeds, d=81, 4 streams, achievedDof 4/81; failing seeds {bad:?}"))
}

fn criterion_8() -> Outcome {
    let mut values = Vec::new();
    for t in 1..=3 {
        let r = run(&RunSpec::new(cfg(2, 1, 1), SchemeChoice::Aligned { tdl: None }, t, 1)).unwrap();
        values.push((t, r.d, r.achieved_dof, r.lp_limit));
    }
    let monotone = values.windows(2).all(|w| w[1].2 >= w[0].2);
    let bounded = values.iter().all(|v| v.2 <= v.3);
    outcome(monotone && bounded, format!("(T, d, achieved, limit) = {values:?}"))
}

fn criterion_9() -> Outcome {
    let mut bad = Vec::new();
    for c in [cfg(2, 1, 1), cfg(2, 2, 2)] {
        for seed in 0..10 {
            let r = run(&RunSpec::new(c, SchemeChoice::ZeroForcing { mode: PlanMode::Conservative }, 1, seed)).unwrap();
            let dl_ok = r.receivers.iter().filter(|x| x.kind == ReceiverKind::DlUser).all(|x| x.decodable == x.planned);
            let bs_ok = r.receivers.iter().filter(|x| x.kind == ReceiverKind::Bs).all(|x| x.decodable == x.planned);
            if !(r.max_zf_residual.is_some_and(|e| e <= 1e-9) && dl_ok && bs_ok) {
                bad.push((c, seed));
            }
        }
    }
    let exit = fdcell()
        .args(["verify", "--scheme", "2", "--k", "2", "--m", "2", "--n", "2", "--t", "1", "--mode", "conservative"])
        .output()
        .unwrap()
        .status
        .code();
    outcome(bad.is_empty() && exit == Some(0), format!("20 runs, failing {bad:?}, CLI exit {exit:?}"))
}

/// Largest BS interference dimension increase from monomial to random beams.
fn bs_increase(tdl: Option<u32>, seed: u64) -> (usize, usize, Vec<(usize, usize)>) {
    let base = RunSpec::new(cfg(2, 1, 1), SchemeChoice::Aligned { tdl }, 2, seed);
    let mono = run(&base).unwrap();
    let rand = run(&RunSpec { random_ul_beams: true, ..base }).unwrap();
    let pairs = |kind| {
        mono.receivers
            .iter()
            .zip(&rand.receivers)
            .filter(|(a, _)| a.kind == kind)
            .map(|(a, b)| (a.interference_dim, b.interference_dim))
            .collect::<Vec<_>>()
    };
    let bs = pairs(ReceiverKind::Bs);
    let up = bs.iter().filter(|(a, b)| b > a).count();
    (up, bs.len(), pairs(ReceiverKind::DlUser))
}

fn criterion_10() -> Outcome {
    let mut seeds_without = Vec::new();
    let mut dl_seeds_without = Vec::new();
    let mut sample = String::new();
    for seed in 0..10 {
        let (up, _, _) = bs_increase(None, seed);
        if up == 0 {
            seeds_without.push(seed);
        }
        let (_, _, dl) = bs_increase(Some(1), seed);
        if !dl.iter().any(|(a, b)| b > a) {
            dl_seeds_without.push(seed);
        }
        if seed == 0 {
            sample = format!("seed 0 DL users (monomial, random) {dl:?}");
        }
    }
    outcome(
        seeds_without.is_empty(),
        format!(
            "seeds with no BS increase {seeds_without:?}; with Tdl=1, seeds with no DL-user increase {dl_seeds_without:?}; {sample}"
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(u32, Duration, fn() -> Outcome); 10] = [
        (1, Duration::from_secs(30), criterion_1),
        (2, Duration::from_secs(5), criterion_2),
        (3, Duration::from_secs(30), criterion_3),
        (4, Duration::from_secs(30), criterion_4),
        (5, Duration::from_secs(5), criterion_5),
        (6, Duration::from_secs(10), criterion_6),
        (7, Duration::from_secs(60), criterion_7),
        (8, Duration::from_secs(120), criterion_8),
        (9, Duration::from_secs(60), criterion_9),
        (10, Duration::from_secs(120), criterion_10),
    ];
    let mut failed = Vec::new();
    for (id, budget, check) in criteria {
        let o = timed(budget, check);
        println!("criterion {id:>2}: {} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
