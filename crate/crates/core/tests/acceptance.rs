//! Acceptance suite. Every criterion runs to completion and prints one
//! PASS/FAIL line; the test fails at the end if any criterion failed.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use ychannel::channel::trial_rng;
use ychannel::linalg::{column_space_intersection, hstack, null_space, pseudo_inverse, rank, DEFAULT_TOL};
use ychannel::simulator::MESSAGES;
use ychannel::{
    build_plan, monte_carlo, run_chain, sample_channel, theorem_sum_dof, validate_plan, AntennaConfig, BindingCase,
    PowerConfig, StreamSymbols,
};

type Mat = DMatrix<f64>;

struct Outcome {
    passed: bool,
    detail: String,
    elapsed: Duration,
    limit: Option<Duration>,
}

impl Outcome {
    fn ok(&self) -> bool {
        self.passed && self.limit.is_none_or(|l| self.elapsed <= l)
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = f();
    Outcome {
        passed,
        detail,
        elapsed: start.elapsed(),
        limit,
    }
}

fn cfg(m1: usize, m2: usize, m3: usize, n: usize) -> AntennaConfig {
    AntennaConfig::new(m1, m2, m3, n).unwrap()
}

fn all_configs() -> Vec<AntennaConfig> {
    let mut out = Vec::new();
    for m1 in 1..=6 {
        for m2 in 1..=m1 {
            for m3 in 1..=m2 {
                for n in 1..=9 {
                    out.push(cfg(m1, m2, m3, n));
                }
            }
        }
    }
    out
}

fn theorem_fixtures() -> (bool, String) {
    let a = theorem_sum_dof(&cfg(3, 2, 1, 3)).theorem_sum;
    let b = theorem_sum_dof(&cfg(2, 2, 2, 3)).theorem_sum;
    (a == 6 && b == 6, format!("(3,2,1,3)={a} (2,2,2,3)={b}"))
}

fn bound_dominance() -> (bool, String) {
    let configs = all_configs();
    let mut bad = Vec::new();
    for c in &configs {
        let [m1, m2, m3] = c.users();
        let expected = (2 * m2 + 2 * m3).min(m1 + m2 + m3).min(2 * c.n());
        let b = theorem_sum_dof(c);
        if b.theorem_sum != expected || b.theorem_sum > b.cutset_sum || b.theorem_sum > b.genie_sum {
            bad.push(c.to_string());
        }
    }
    (
        configs.len() == 504 && bad.is_empty(),
        format!("{} configs, {} mismatches {:?}", configs.len(), bad.len(), bad),
    )
}

fn noiseless_round_trip() -> (bool, String) {
    let fixtures = [cfg(3, 2, 1, 3), cfg(2, 2, 2, 3), cfg(2, 2, 1, 3), cfg(3, 3, 3, 2)];
    let mut cases = Vec::new();
    let mut worst = 0.0_f64;
    let mut errors = Vec::new();
    let power = PowerConfig::from_snr_db(30.0).unwrap();
    for c in &fixtures {
        cases.push(theorem_sum_dof(c).binding_case);
        for seed in 0..50 {
            let ch = sample_channel(c, false, seed);
            let result = build_plan(c, &ch).and_then(|plan| {
                let sym = StreamSymbols::gaussian(&plan, &mut trial_rng(seed, 1));
                let out = run_chain(&plan, &ch, &sym, &power, None)?;
                Ok(MESSAGES
                    .iter()
                    .map(|m| (&out.decoded[m] - &sym.u[m]).amax())
                    .fold(0.0, f64::max))
            });
            match result {
                Ok(e) => worst = worst.max(e),
                Err(e) => errors.push(format!("{c} seed {seed}: {e}")),
            }
        }
    }
    let all_cases = [BindingCase::A, BindingCase::B, BindingCase::C]
        .iter()
        .all(|k| cases.contains(k));
    (
        all_cases && errors.is_empty() && worst <= 1e-6,
        format!("max abs error {worst:.3e}, {} errors {:?}", errors.len(), errors),
    )
}

fn plan_invariants() -> (bool, String) {
    let configs = all_configs();
    let mut rng = trial_rng(2024, 0);
    let mut seen = Vec::new();
    let mut failures = Vec::new();
    let (mut span, mut zf) = (0.0_f64, 0.0_f64);
    for draw in 0..200u64 {
        let c = &configs[rng.random_range(0..configs.len())];
        seen.push(theorem_sum_dof(c).binding_case);
        let ch = sample_channel(c, draw % 2 == 1, draw);
        match build_plan(c, &ch) {
            Ok(plan) => {
                let v = validate_plan(&plan, &ch);
                span = span.max(v.worst("alignment"));
                zf = zf.max(v.worst("relay_zf")).max(v.worst("downlink_zf"));
                if !v.passed {
                    let names: Vec<_> = v.failures().map(|f| f.name.clone()).collect();
                    failures.push(format!("{c}: {names:?}"));
                }
            }
            Err(e) => failures.push(format!("{c}: {e}")),
        }
    }
    let all_cases = [BindingCase::A, BindingCase::B, BindingCase::C]
        .iter()
        .all(|k| seen.contains(k));
    (
        all_cases && failures.is_empty() && span <= 1e-8 && zf <= 1e-9,
        format!(
            "span {span:.2e} zf {zf:.2e}, {} failures {:?}",
            failures.len(),
            failures
        ),
    )
}

struct SlopeStats {
    config: AntennaConfig,
    theorem: f64,
    mean: f64,
    min: f64,
    max: f64,
    pass_rate: f64,
}

fn slope_stats() -> Vec<SlopeStats> {
    // 40 dB and 60 dB
    let grid = [1e4, 1e6];
    [cfg(3, 2, 1, 3), cfg(2, 2, 2, 3), cfg(3, 3, 3, 2), cfg(2, 2, 1, 3)]
        .into_iter()
        .map(|c| {
            let r = monte_carlo(&c, 20, &grid, 0, false).unwrap();
            SlopeStats {
                config: c,
                theorem: r.theorem_sum as f64,
                mean: r.mean_slope,
                min: r.min_slope,
                max: r.max_slope,
                pass_rate: r.pass_rate,
            }
        })
        .collect()
}

fn slope_achievability(stats: &[SlopeStats]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in stats {
        let good = s.pass_rate == 1.0 && (s.mean - s.theorem).abs() <= 0.15 && s.min >= s.theorem - 0.2;
        ok &= good;
        parts.push(format!(
            "{}->{} mean {:.3} min {:.3}{}",
            s.config,
            s.theorem,
            s.mean,
            s.min,
            if good { "" } else { " (miss)" }
        ));
    }
    (ok, parts.join("; "))
}

fn converse_consistency(stats: &[SlopeStats]) -> (bool, String) {
    let ok = stats.iter().all(|s| s.max <= s.theorem + 0.15);
    let parts: Vec<String> = stats
        .iter()
        .map(|s| format!("{} max {:.3} <= {}", s.config, s.max, s.theorem + 0.15))
        .collect();
    (ok, parts.join("; "))
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Random matrix with a random rank, so rank-deficient cases are common.
fn random_matrix(rng: &mut impl Rng) -> Mat {
    let rows = rng.random_range(1..=12);
    let cols = rng.random_range(1..=12);
    let r = rng.random_range(0..=rows.min(cols));
    gaussian(rows, r, rng) * gaussian(r, cols, rng)
}

fn linalg_properties() -> (bool, String) {
    let mut rng = trial_rng(7, 0);
    let mut worst_penrose = 0.0_f64;
    let mut failures = Vec::new();
    for i in 0..500 {
        let a = random_matrix(&mut rng);
        let r = rank(&a, DEFAULT_TOL);
        if r + null_space(&a, DEFAULT_TOL).dim() != a.ncols() {
            failures.push(format!("#{i} dimension theorem"));
        }

        let p = pseudo_inverse(&a, DEFAULT_TOL);
        let scale_a = a.norm().max(1.0);
        let scale_p = p.norm().max(1.0);
        let ap = &a * &p;
        let pa = &p * &a;
        let residuals = [
            (&ap * &a - &a).norm() / scale_a,
            (&pa * &p - &p).norm() / scale_p,
            (&ap - ap.transpose()).norm() / ap.norm().max(1.0),
            (&pa - pa.transpose()).norm() / pa.norm().max(1.0),
        ];
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        worst_penrose = worst_penrose.max(worst);
        if worst > 1e-8 {
            failures.push(format!("#{i} penrose {worst:e}"));
        }

        let cols_b = rng.random_range(1..=12);
        let rb = rng.random_range(0..=a.nrows().min(cols_b));
        let b = gaussian(a.nrows(), rb, &mut rng) * gaussian(rb, cols_b, &mut rng);
        let expected = r + rank(&b, DEFAULT_TOL) - rank(&hstack(&[&a, &b]), DEFAULT_TOL);
        let (va, vb) = column_space_intersection(&a, &b, DEFAULT_TOL);
        if va.ncols() != expected || vb.ncols() != expected {
            failures.push(format!("#{i} intersection {} vs {expected}", va.ncols()));
        }
    }
    (
        failures.is_empty(),
        format!(
            "worst penrose {worst_penrose:.2e}, {} failures {:?}",
            failures.len(),
            failures
        ),
    )
}

fn cli_csv(out: &std::path::Path) -> (Vec<u8>, Vec<u8>) {
    let output = Command::new(env!("CARGO_BIN_EXE_ychannel"))
        .args([
            "--antennas",
            "2,2,1,3",
            "--mode",
            "sweep",
            "--trials",
            "4",
            "--seed",
            "42",
            "--out",
        ])
        .arg(out)
        .output()
        .expect("run cli");
    (std::fs::read(out).expect("csv written"), output.stderr)
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = cli_csv(&dir.path().join("a.csv"));
    let (b, _) = cli_csv(&dir.path().join("b.csv"));
    let rows = a.iter().filter(|&&c| c == b'\n').count();
    (
        !a.is_empty() && a == b,
        format!("{} bytes, {rows} lines, identical={}", a.len(), a == b),
    )
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let mut results: Vec<(&str, Outcome)> = vec![
        (
            "1 theorem formula fixtures",
            timed(Some(Duration::from_millis(1)), theorem_fixtures),
        ),
        ("2 bound dominance fuzz", timed(Some(secs(1)), bound_dominance)),
        ("3 noiseless round-trip", timed(Some(secs(10)), noiseless_round_trip)),
        ("4 plan invariants", timed(Some(secs(30)), plan_invariants)),
    ];

    let start = Instant::now();
    let stats = slope_stats();
    let slope_time = start.elapsed();
    let mut five = timed(Some(secs(60)), || slope_achievability(&stats));
    five.elapsed += slope_time;
    results.push(("5 DoF slope achievability", five));
    results.push(("6 converse consistency", timed(None, || converse_consistency(&stats))));

    results.push(("7 linalg properties", timed(Some(secs(5)), linalg_properties)));
    results.push(("8 determinism", timed(None, determinism)));

    let mut failed = Vec::new();
    for (name, o) in &results {
        let verdict = if o.ok() { "PASS" } else { "FAIL" };
        let limit = o.limit.map_or(String::new(), |l| format!(" (limit {l:?})"));
        println!("{verdict} criterion {name}: {} [{:?}{limit}]", o.detail, o.elapsed);
        if !o.ok() {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
