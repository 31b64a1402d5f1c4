//! Acceptance suite: one test per criterion, each printing a PASS line when
//! it holds. Run with `cargo test --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use trex_core::behavior::{
    self, expected_gain, p_aware, reroute_probability, ssd, FpiConfig, FtiConfig, IcmConfig,
    ObConfig, OsConfig, TransitionProbs,
};
use trex_core::control::{ObsKind, RewardKind};
use trex_core::experiment::{run_episode, train, ControllerKind, EpisodeConfig};
use trex_core::incidents::{sample_incident, FixedIncident, IncidentConfig, IncidentMode};
use trex_core::metrics;
use trex_core::netmodel::{
    corridor_scenario, diamond_scenario, grid_scenario, save_scenario, EdgeIdx, Scenario,
};
use trex_core::rng::{SimRng, Stream};
use trex_core::simcore::{SimState, StepEvent, VehicleId};

fn trex_bin() -> &'static str {
    env!("CARGO_BIN_EXE_trex")
}

fn run_cli(args: &[&str]) -> std::process::Output {
    let out = Command::new(trex_bin())
        .args(args)
        .output()
        .expect("spawn trex");
    assert!(
        out.status.success(),
        "trex {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

// ---------------------------------------------------------------------------
// Criterion 1: formula oracle suite
// ---------------------------------------------------------------------------

fn mid_oracle(a: f64, b: f64, c: f64) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v[1]
}

fn fti_rho_oracle(t: f64, start: f64, cfg: &FtiConfig) -> f64 {
    // The published geometric sum, term by term.
    let mut total = 0.0;
    let mut n = 1;
    while start + n as f64 * cfg.period_s <= t {
        total += cfg.penetration * cfg.notice_prob * (1.0 - cfg.notice_prob).powi(n - 1);
        n += 1;
        if n > 100_000 {
            break;
        }
    }
    total
}

fn p_fti_oracle(t: f64, te: f64, start: f64, cfg: &FtiConfig) -> f64 {
    (fti_rho_oracle(t + te, start, cfg) - fti_rho_oracle(t, start, cfg)).clamp(0.0, 1.0)
}

fn p_fpi_oracle(
    vms: bool,
    t: f64,
    dist: f64,
    start: f64,
    end: f64,
    mean_speed: f64,
    cfg: &FpiConfig,
) -> f64 {
    if !vms || t < start + cfg.activation_offset_s {
        return 0.0;
    }
    let l = dist + mean_speed * mid_oracle(0.0, start - t, end - t).abs();
    (1.0 / (1.0 + (l / cfg.range_m).powf(cfg.decay))).clamp(0.0, 1.0)
}

fn p_os_oracle(t: f64, te: f64, start: f64, cfg: &OsConfig) -> f64 {
    let rho = |x: f64| {
        let published = start + cfg.publish_offset_s;
        if x < published {
            0.0
        } else {
            cfg.penetration
                * (1.0
                    - (-((x - published) * (x - published)) / (2.0 * cfg.spread_s * cfg.spread_s))
                        .exp())
        }
    };
    (rho(t + te) - rho(t)).clamp(0.0, 1.0)
}

fn p_ob_oracle(te: f64, typical: f64, cfg: &ObConfig) -> f64 {
    (cfg.sensitivity_per_s * (te - typical - cfg.threshold_s)).clamp(0.0, 1.0)
}

fn p_aware_oracle(channels: &[f64]) -> f64 {
    let mut miss = 1.0;
    for p in channels {
        miss *= 1.0 - p.clamp(0.0, 1.0);
    }
    (1.0 - miss).clamp(0.0, 1.0)
}

fn gain_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut np = 0.0;
    let mut nq = 0.0;
    for i in 0..p.len() {
        dot += p[i] * q[i];
        np += p[i] * p[i];
        nq += q[i] * q[i];
    }
    1.0 - dot / (np.sqrt() * nq.sqrt())
}

fn loss_oracle(p: &[f64], q: &[f64], w: &[f64]) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..p.len() {
        a += p[i] * w[i];
        b += q[i] * w[i];
    }
    (a - b) / b
}

fn kappa_oracle(dp: f64, dw: f64, cfg: &IcmConfig) -> f64 {
    // Logistic via the tanh identity.
    let u = cfg.beta_gain * dp + cfg.beta_loss * dw + cfg.beta_0;
    0.5 * (1.0 + (u / 2.0).tanh())
}

fn lsi_oracle(c: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 1..c.len() {
        s += (c[t] - c[t - 1]) * (c[t] - c[t - 1]);
    }
    s / (c.len() - 1) as f64
}

fn fpd_oracle(c: &[f64]) -> f64 {
    let mut best = c[0];
    for v in c {
        if *v < best {
            best = *v;
        }
    }
    (c[c.len() - 1] - best).abs() / best
}

fn cr_oracle(c: &[f64], eps: f64) -> f64 {
    let last = c[c.len() - 1];
    let first = c[0];
    if last == first {
        return 0.0;
    }
    let band = eps * last.abs();
    let mut t_c = c.len() - 1;
    for start in 0..c.len() {
        if c[start..].iter().all(|v| (v - last).abs() <= band) {
            t_c = start;
            break;
        }
    }
    let t_c = t_c.max(1) as f64;
    if last < first {
        1.0 / t_c
    } else {
        -1.0 / t_c
    }
}

fn auc_oracle(c: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 1..c.len() {
        s += (c[t] + c[t - 1]) / 2.0;
    }
    s
}

#[test]
fn criterion_1_formula_oracles() {
    let started = Instant::now();
    let tol = 1e-9;
    let mut rng = SimRng::from_master(2024, Stream::Awareness);

    // Tagged examples first.
    assert!((ssd(50.0) - (0.278 * 50.0 * 2.5 + 0.039 * 2500.0 / 3.4)).abs() < tol);
    assert!((ssd(100.0) - (0.278 * 100.0 * 2.5 + 0.039 * 10000.0 / 3.4)).abs() < tol);
    let fti = FtiConfig::default();
    assert!((behavior::p_fti(200.0, 150.0, 0.0, &fti) - 0.35).abs() < tol);
    assert!((behavior::p_fti(400.0, 250.0, 0.0, &fti) - 0.175).abs() < tol);
    let icm = IcmConfig::default();
    assert!((reroute_probability(0.0, 0.0, &icm) - 1.0 / (1.0 + 5.0f64.exp())).abs() < tol);
    assert!((reroute_probability(1.0, 1.0, &icm) - 0.5).abs() < tol);
    assert!((metrics::lsi(&[100.0, 110.0, 100.0]).unwrap() - 100.0).abs() < tol);
    assert!((metrics::auc(&vec![100.0; 101]) - 10_000.0).abs() < tol);
    assert!((metrics::pdi(100.0, 150.0).unwrap() - 0.5).abs() < tol);

    for _ in 0..1000 {
        // ssd
        let v = rng.uniform(0.0, 160.0);
        assert!((ssd(v) - (0.278 * v * 2.5 + 0.039 * v * v / 3.4)).abs() < tol);

        // Channel probabilities.
        let fti = FtiConfig {
            enabled: true,
            penetration: rng.uniform01(),
            notice_prob: rng.uniform(0.01, 1.0),
            period_s: rng.uniform(10.0, 900.0),
        };
        let fpi = FpiConfig {
            enabled: true,
            coverage: rng.uniform01(),
            activation_offset_s: rng.uniform(0.0, 1200.0),
            range_m: rng.uniform(10.0, 500.0),
            decay: rng.uniform(0.5, 4.0),
        };
        let os = OsConfig {
            enabled: true,
            penetration: rng.uniform01(),
            publish_offset_s: rng.uniform(0.0, 1200.0),
            spread_s: rng.uniform(10.0, 1200.0),
        };
        let ob = ObConfig {
            enabled: true,
            threshold_s: rng.uniform(0.0, 400.0),
            sensitivity_per_s: rng.uniform(0.0, 0.5),
            literal_formula: false,
        };
        let t = rng.uniform(0.0, 4000.0);
        let te = rng.uniform(0.0, 500.0);
        let start = rng.uniform(0.0, 2500.0);
        let end = start + rng.uniform(60.0, 3000.0);
        let dist = rng.uniform(0.0, 2000.0);
        let speed = rng.uniform(5.0, 30.0);
        let typical = rng.uniform(1.0, 400.0);

        let a = behavior::p_fti(t, te, start, &fti);
        assert!((a - p_fti_oracle(t, te, start, &fti)).abs() < tol, "fti");
        let b = behavior::p_fpi(true, t, dist, start, end, speed, &fpi);
        assert!(
            (b - p_fpi_oracle(true, t, dist, start, end, speed, &fpi)).abs() < tol,
            "fpi"
        );
        let c = behavior::p_os(t, te, start, &os);
        assert!((c - p_os_oracle(t, te, start, &os)).abs() < tol, "os");
        let d = behavior::p_ob(te, typical, &ob);
        assert!((d - p_ob_oracle(te, typical, &ob)).abs() < tol, "ob");
        let combined = p_aware(&[a, b, c, d]);
        assert!(
            (combined - p_aware_oracle(&[a, b, c, d])).abs() < tol,
            "aware"
        );

        // Gain / loss / kappa over random transition vectors.
        let n = rng.uniform_int(2, 6) as usize;
        let mut actual: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 1.0)).collect();
        let total: f64 = actual.iter().sum();
        if total <= 0.0 {
            actual[0] = 1.0;
        }
        let total: f64 = actual.iter().sum();
        for x in &mut actual {
            *x /= total;
        }
        let hot = rng.uniform_int(0, n as u32 - 1) as usize;
        let typical_vec: Vec<f64> = (0..n).map(|i| if i == hot { 1.0 } else { 0.0 }).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.uniform(1.0, 500.0)).collect();
        let probs = TransitionProbs {
            successors: (0..n).map(|i| EdgeIdx(i as u32)).collect(),
            actual: actual.clone(),
            typical: typical_vec.clone(),
        };
        let dp = expected_gain(&probs).unwrap();
        assert!(
            (dp - gain_oracle(&actual, &typical_vec)).abs() < tol,
            "gain"
        );
        let dw = behavior::avoided_loss(&probs, &w).unwrap();
        assert!(
            (dw - loss_oracle(&actual, &typical_vec, &w)).abs() < tol,
            "loss"
        );
        let cfg = IcmConfig {
            beta_gain: rng.uniform(-5.0, 5.0),
            beta_loss: rng.uniform(-5.0, 5.0),
            beta_0: rng.uniform(-8.0, 3.0),
            ..IcmConfig::default()
        };
        let k = reroute_probability(dp, dw, &cfg);
        assert!((k - kappa_oracle(dp, dw, &cfg)).abs() < tol, "kappa");

        // Metrics over a random curve.
        let len = rng.uniform_int(2, 50) as usize;
        let curve: Vec<f64> = (0..len).map(|_| rng.uniform(0.5, 1000.0)).collect();
        assert!(
            (metrics::lsi(&curve).unwrap() - lsi_oracle(&curve)).abs() < tol,
            "lsi"
        );
        assert!(
            (metrics::fpd(&curve).unwrap() - fpd_oracle(&curve)).abs() < tol,
            "fpd"
        );
        let eps = rng.uniform(0.01, 0.25);
        assert!(
            (metrics::cr(&curve, eps) - cr_oracle(&curve, eps)).abs() < tol,
            "cr"
        );
        assert!(
            (metrics::auc(&curve) - auc_oracle(&curve)).abs() < tol,
            "auc"
        );
        let base: Vec<f64> = (0..len).map(|_| rng.uniform(0.5, 1000.0)).collect();
        let rauc = metrics::rauc(&base, &curve).unwrap();
        assert!((rauc - (auc_oracle(&curve) - auc_oracle(&base)) / auc_oracle(&base)).abs() < tol);
        let g = rng.uniform(0.5, 1000.0);
        let g2 = rng.uniform(0.5, 1000.0);
        assert!(
            (metrics::pdi(g, g2).unwrap() - (g2 - g) / g).abs() < tol,
            "pdi"
        );
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "runtime budget: {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: formula oracle suite matches to 1e-9 ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// Criterion 2: byte-identical CLI outputs
// ---------------------------------------------------------------------------

fn write_scenario(dir: &Path, name: &str, scenario: &Scenario) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, save_scenario(scenario)).unwrap();
    path
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            out.insert(
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out
}

#[test]
fn criterion_2_cli_determinism() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut g2 = grid_scenario(2, 2, 150.0, 1, 13.89, 300.0).unwrap();
    g2.incidents = IncidentConfig::default_random();
    let scenarios = [
        (
            write_scenario(
                tmp.path(),
                "g1.json",
                &grid_scenario(1, 1, 150.0, 1, 13.89, 300.0).unwrap(),
            ),
            "fixed",
            "off",
        ),
        (
            write_scenario(tmp.path(), "g2.json", &g2),
            "max-pressure",
            "on",
        ),
        (
            write_scenario(
                tmp.path(),
                "corr.json",
                &corridor_scenario(4, 300.0, 2, 13.89, 600.0).unwrap(),
            ),
            "random",
            "on",
        ),
    ];
    for (i, (path, controller, incidents)) in scenarios.iter().enumerate() {
        let out_a = tmp.path().join(format!("a{i}"));
        let out_b = tmp.path().join(format!("b{i}"));
        for out in [&out_a, &out_b] {
            run_cli(&[
                "run",
                "--scenario",
                path.to_str().unwrap(),
                "--seeds",
                "11,12,13",
                "--controller",
                controller,
                "--incidents",
                incidents,
                "--out",
                out.to_str().unwrap(),
            ]);
        }
        let a = read_dir_bytes(&out_a);
        let b = read_dir_bytes(&out_b);
        assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
        for (name, bytes) in &a {
            assert_eq!(bytes, &b[name], "scenario {i}: {name} differs between runs");
        }
        assert!(a.contains_key("episodes.csv"));
        assert!(a.contains_key("manifest.json"));
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "runtime budget: {elapsed:?}");
    println!("ACCEPTANCE 2 PASS: byte-identical outputs, 3 scenarios x 3 seeds ({elapsed:?})");
}

// ---------------------------------------------------------------------------
// Criterion 3: conservation at every step
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_conservation() {
    let started = Instant::now();
    let mut scenario = grid_scenario(4, 4, 150.0, 1, 13.89, 130.0).unwrap();
    scenario.incidents = IncidentConfig::default_random();
    let mut state = SimState::new(&scenario, 21, scenario.incidents.clone()).unwrap();
    let period = scenario.sim.decision_period_s as u64;
    for t in 0..3600u64 {
        if t % period == 0 {
            for i in 0..scenario.net.intersections.len() {
                let target = trex_core::control::fixed_time_policy(
                    t as f64,
                    &scenario.net.intersections[i].fixed_cycle_s,
                );
                trex_core::control::apply_phase(&mut state, i, target).unwrap();
            }
            state.rotate_delay_periods();
        }
        state.step();
        assert_eq!(
            state.inserted,
            state.in_network() + state.arrived + state.removed,
            "conservation violated at t={t}"
        );
    }
    assert!(
        state.inserted > 1500 && state.inserted < 2800,
        "expected roughly 2000 insertions, got {}",
        state.inserted
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "runtime budget: {elapsed:?}");
    println!(
        "ACCEPTANCE 3 PASS: exact conservation over 3600 s, {} insertions ({elapsed:?})",
        state.inserted
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: incident mechanics on a scripted corridor
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_incident_mechanics() {
    let started = Instant::now();
    // (a) + (b): full blockage at t=600 for 600 s.
    let mut scenario = corridor_scenario(3, 300.0, 1, 10.0, 600.0).unwrap();
    scenario.sim.episode_s = 1500.0;
    scenario.demand.flows[0].end_s = 1500.0;
    let blocked = scenario.net.edge_idx("e1").unwrap();
    let p = 150.0;
    let cfg = IncidentConfig {
        mode: IncidentMode::Fixed,
        fixed: vec![FixedIncident {
            edge: blocked,
            position_m: p,
            lanes_blocked: 1,
            start_s: 600.0,
            duration_s: 600.0,
        }],
        ..IncidentConfig::none()
    };
    let mut state = SimState::new(&scenario, 33, cfg).unwrap();
    let mut prev: BTreeMap<VehicleId, f64> = BTreeMap::new();
    let mut first_cross_after_clear: Option<u64> = None;
    for t in 0..1500u64 {
        let events = state.step();
        let teleported: BTreeSet<VehicleId> = events
            .events
            .iter()
            .filter_map(|e| match e {
                StepEvent::Teleport { vehicle, .. } => Some(*vehicle),
                _ => None,
            })
            .collect();
        let mut now: BTreeMap<VehicleId, f64> = BTreeMap::new();
        for &vid in state.vehicles_on_lane(blocked, 0) {
            let v = state.vehicle(vid).unwrap();
            if v.is_ic {
                continue;
            }
            now.insert(vid, v.offset);
            if let Some(&before) = prev.get(&vid) {
                let crossed = before <= p && v.offset > p;
                if crossed && (600..1200).contains(&t) {
                    assert!(
                        teleported.contains(&vid),
                        "(a) vehicle {vid:?} drove past the blockage at t={t}"
                    );
                }
                // Recovery must be driven, not teleported.
                if crossed
                    && t >= 1200
                    && !teleported.contains(&vid)
                    && first_cross_after_clear.is_none()
                {
                    first_cross_after_clear = Some(t);
                }
            }
        }
        prev = now;
    }
    let recovered = first_cross_after_clear.expect("(b) traffic must resume after clearing");
    assert!(
        recovered < 1260,
        "(b) throughput at p must recover within 60 s, first crossing at t={recovered}"
    );

    // (c) sampled parameters respect their supports over 10k draws,
    // (d) duration mean within 5% of 2069 s.
    let net_scenario = corridor_scenario(4, 300.0, 2, 13.89, 0.0).unwrap();
    let sample_cfg = IncidentConfig::default_random();
    let mut rng = SimRng::from_master(4, Stream::Incidents);
    let mut durations = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let inc = sample_incident(&sample_cfg, &net_scenario.net, 100.0, 3600.0, &mut rng).unwrap();
        let edge = net_scenario.net.edge(inc.edge);
        assert!(
            inc.position_m >= 10.0 && inc.position_m <= edge.length - 10.0,
            "(c) position"
        );
        assert!(
            !inc.blocked_lanes.is_empty() && inc.blocked_lanes.len() as u32 <= edge.lanes,
            "(c) lanes"
        );
        assert!(
            inc.start_s >= 100 && inc.start_s <= 2400,
            "(c) start window"
        );
        durations.push(inc.duration_s as f64);
    }
    let mean = durations.iter().sum::<f64>() / durations.len() as f64;
    let expected = 60.0 / 0.029;
    assert!(
        (mean - expected).abs() / expected < 0.05,
        "(d) duration mean {mean} vs {expected}"
    );
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 4 PASS: blockage holds, recovery at t={recovered}, supports ok, duration mean {mean:.0} s ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: rerouting behavior on the two-route diamond
// ---------------------------------------------------------------------------

/// Runs the diamond and returns (entries onto primary, onto alternative) by
/// vehicles inserted after the incident starts.
fn diamond_entries(scenario: &Scenario, seed: u64, incident_start: u64) -> (u32, u32) {
    let primary = scenario.net.edge_idx("primary").unwrap();
    let alternative = scenario.net.edge_idx("alternative").unwrap();
    let cfg = IncidentConfig {
        mode: IncidentMode::Fixed,
        fixed: vec![FixedIncident {
            edge: primary,
            position_m: 75.0,
            lanes_blocked: 1,
            start_s: incident_start as f64,
            duration_s: 3300.0,
        }],
        ..IncidentConfig::none()
    };
    let mut state = SimState::new(scenario, seed, cfg).unwrap();
    let mut depart: BTreeMap<VehicleId, u64> = BTreeMap::new();
    let mut onto_primary = 0u32;
    let mut onto_alternative = 0u32;
    for t in 0..scenario.sim.episode_s as u64 {
        let events = state.step();
        for e in &events.events {
            match e {
                StepEvent::Insertion { vehicle, .. } => {
                    depart.insert(*vehicle, t);
                }
                StepEvent::EdgeEntered { vehicle, edge } => {
                    let late = depart
                        .get(vehicle)
                        .map(|d| *d >= incident_start)
                        .unwrap_or(false);
                    if late && *edge == primary {
                        onto_primary += 1;
                    }
                    if late && *edge == alternative {
                        onto_alternative += 1;
                    }
                }
                _ => {}
            }
        }
    }
    (onto_primary, onto_alternative)
}

#[test]
fn criterion_5_rerouting_behavior() {
    let started = Instant::now();
    // All channels off: nobody avoids the blocked primary route.
    let mut off = diamond_scenario(600.0).unwrap();
    off.icm = IcmConfig::disabled();
    let (_, alt_off) = diamond_entries(&off, 1, 200);
    assert_eq!(alt_off, 0, "channels off: zero avoidance expected");

    // Awareness forced, kappa forced to 1: at least 90% avoid over 5 seeds.
    let mut forced = diamond_scenario(600.0).unwrap();
    forced.icm.force_aware = true;
    forced.icm.kappa_override = Some(1.0);
    let mut primary_total = 0u32;
    let mut alternative_total = 0u32;
    for seed in 1..=5 {
        let (p, a) = diamond_entries(&forced, seed, 200);
        primary_total += p;
        alternative_total += a;
    }
    let fraction = alternative_total as f64 / (primary_total + alternative_total) as f64;
    assert!(
        fraction >= 0.9,
        "forced awareness: avoidance fraction {fraction} below 0.9"
    );
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 5 PASS: avoidance 0 with channels off, {:.3} when forced ({elapsed:?})",
        fraction
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: directional robustness
// ---------------------------------------------------------------------------

fn episode_travel_time(
    scenario: &Scenario,
    seed: u64,
    controller: ControllerKind,
    incidents_on: bool,
) -> f64 {
    let incident_cfg = if incidents_on {
        IncidentConfig::default_random()
    } else {
        IncidentConfig::none()
    };
    let cfg = EpisodeConfig {
        scenario,
        seed,
        controller,
        reward: RewardKind::QueueWait,
        incident_cfg,
        collect_trace: false,
    };
    run_episode(&cfg, None, 0.0, false)
        .unwrap()
        .stats
        .avg_travel_time_s
}

#[test]
fn criterion_6_directional_robustness() {
    let started = Instant::now();
    // Fixed-time on the 2x2 grid: incidents raise the median paired travel
    // time over 10 seeds.
    let g2 = grid_scenario(2, 2, 150.0, 1, 13.89, 300.0).unwrap();
    let mut diffs: Vec<f64> = (1..=10u64)
        .map(|seed| {
            let on = episode_travel_time(&g2, seed, ControllerKind::Fixed, true);
            let off = episode_travel_time(&g2, seed, ControllerKind::Fixed, false);
            on - off
        })
        .collect();
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = (diffs[4] + diffs[5]) / 2.0;
    assert!(
        median > 0.0,
        "median paired difference {median} not positive"
    );

    // Max-pressure beats random on the 4x4 grid, mean over 5 seeds.
    let g4 = grid_scenario(4, 4, 150.0, 1, 13.89, 250.0).unwrap();
    let mp: f64 = (1..=5u64)
        .map(|s| episode_travel_time(&g4, s, ControllerKind::MaxPressure, false))
        .sum::<f64>()
        / 5.0;
    let rnd: f64 = (1..=5u64)
        .map(|s| episode_travel_time(&g4, s, ControllerKind::Random, false))
        .sum::<f64>()
        / 5.0;
    assert!(mp < rnd, "max-pressure {mp} should beat random {rnd}");
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 6 PASS: incident median +{median:.2} s; max-pressure {mp:.2} < random {rnd:.2} ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: learning sanity
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_learning_sanity() {
    let started = Instant::now();
    let scenario = grid_scenario(1, 1, 150.0, 1, 13.89, 400.0).unwrap();
    let result = train(
        &scenario,
        1,
        100,
        RewardKind::QueueWait,
        ObsKind::LaneFeature,
        &IncidentConfig::none(),
        Default::default(),
        None,
    )
    .unwrap();
    let curve = &result.curve;
    let first10 = curve[..10].iter().sum::<f64>() / 10.0;
    let last20 = curve[curve.len() - 20..].iter().sum::<f64>() / 20.0;
    let improvement = 1.0 - last20 / first10;
    assert!(
        improvement >= 0.10,
        "improvement {improvement:.3} below 10% (first10 {first10:.2}, last20 {last20:.2})"
    );
    let cr = metrics::cr(curve, 0.05);
    assert!(cr > 0.0, "CR {cr} must be positive");
    let fpd = metrics::fpd(curve).unwrap();
    assert!(fpd < 0.5, "FPD {fpd} must stay below 0.5");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 600, "runtime budget: {elapsed:?}");
    println!(
        "ACCEPTANCE 7 PASS: improvement {:.1}%, CR {cr:.4}, FPD {fpd:.3} ({elapsed:?})",
        improvement * 100.0
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: experiment-protocol shape
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_protocol_shape() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let g1 = write_scenario(
        tmp.path(),
        "g1.json",
        &grid_scenario(1, 1, 150.0, 1, 13.89, 400.0).unwrap(),
    );
    let g1s = g1.to_str().unwrap();

    // Train a base and an incident checkpoint, then run the 4-combination
    // evaluation.
    let base_out = tmp.path().join("base");
    let inc_out = tmp.path().join("inc");
    run_cli(&[
        "train",
        "--scenario",
        g1s,
        "--seeds",
        "1",
        "--episodes",
        "15",
        "--out",
        base_out.to_str().unwrap(),
    ]);
    run_cli(&[
        "train",
        "--scenario",
        g1s,
        "--seeds",
        "1",
        "--episodes",
        "15",
        "--incidents",
        "on",
        "--out",
        inc_out.to_str().unwrap(),
    ]);
    let eval_out = tmp.path().join("matrix");
    run_cli(&[
        "eval",
        "--base-scenario",
        g1s,
        "--incident-scenario",
        g1s,
        "--base-checkpoint",
        base_out.join("checkpoint_best_s1.json").to_str().unwrap(),
        "--incident-checkpoint",
        inc_out.join("checkpoint_best_s1.json").to_str().unwrap(),
        "--episodes",
        "2",
        "--out",
        eval_out.to_str().unwrap(),
    ]);
    let pdi: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_out.join("pdi.json")).unwrap()).unwrap();
    let combos = pdi["combos"].as_array().unwrap();
    assert_eq!(combos.len(), 4, "PDI table must have 4 combination entries");
    let names: Vec<&str> = combos
        .iter()
        .map(|c| c["combo"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "base-base",
            "base-incident",
            "incident-incident",
            "incident-base"
        ]
    );
    for combo in combos {
        assert!(combo["pdi"].as_f64().unwrap().is_finite());
    }

    // Transfer: two-phase curve with a detectable jump at the boundary.
    let g2 = write_scenario(
        tmp.path(),
        "g2.json",
        &grid_scenario(2, 2, 150.0, 1, 13.89, 300.0).unwrap(),
    );
    let transfer_out = tmp.path().join("transfer");
    run_cli(&[
        "transfer",
        "--scenario",
        g2.to_str().unwrap(),
        "--episodes",
        "25",
        "--seeds",
        "1",
        "--out",
        transfer_out.to_str().unwrap(),
    ]);
    let curve_text = std::fs::read_to_string(transfer_out.join("curve_s1.csv")).unwrap();
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for line in curve_text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let value: f64 = fields[1].parse().unwrap();
        match fields[2] {
            "1" => pre.push(value),
            "2" => post.push(value),
            other => panic!("unexpected phase {other}"),
        }
    }
    assert_eq!(pre.len(), 25);
    assert_eq!(post.len(), 25);
    let tail = &pre[pre.len() - 10..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let sigma =
        (tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / tail.len() as f64).sqrt();
    let jump = post[0] - mean;
    assert!(
        jump > 2.0 * sigma,
        "boundary jump {jump:.2} must exceed 2 sigma = {:.2}",
        2.0 * sigma
    );
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 8 PASS: 4-combo PDI table, transfer jump {jump:.1} s > 2 sigma {:.2} ({elapsed:?})",
        2.0 * sigma
    );
}
