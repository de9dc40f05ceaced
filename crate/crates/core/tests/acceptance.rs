//! Acceptance checks. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmbsa::agent::{self, loss, loss_and_grad, A2cAgent, PolicyValueNet, Sample, SelectMode, TrainConfig};
use rmbsa::env::{ActionMask, EnvConfig, Environment, Scenario};
use rmbsa::experiment::{evaluate, summarize, PolicySpec, SummaryRow};
use rmbsa::heuristics::{default_band_order, HeuristicKind};
use rmbsa::qot::{
    required_snr_for_ber, FrequencyModel, ModulationTable, PhysicalParams, QotDatabase, QotEstimator,
};
use rmbsa::spectrum::{first_fit_candidates, Band, BandPlan, ChannelBits, SpectrumState};
use rmbsa::topology::{builtin_nsfnet, k_shortest_paths, NetworkTopology, RouteTable};
use rmbsa::traffic::TrafficParams;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, budget_s: f64) -> String {
    let s = elapsed.as_secs_f64();
    if s <= budget_s {
        format!("{s:.2}s")
    } else {
        format!("{s:.2}s, over the {budget_s}s budget")
    }
}

// ---------------------------------------------------------------------------
// 1. GSNR against an independent implementation

const H: f64 = 6.62607015e-34;

/// Center frequency (THz) of global channel `i` of the standard L/C/S plan,
/// counted outward from the lowest C channel at 191.7 THz.
fn standard_center_thz(i: usize) -> f64 {
    let w = 0.075;
    let gap = 0.4;
    if i < 80 {
        191.7 - gap - (80 - i) as f64 * w
    } else if i < 160 {
        191.7 + (i - 80) as f64 * w
    } else {
        191.7 + gap + (i - 80) as f64 * w
    }
}

fn standard_band(i: usize) -> (Band, std::ops::Range<usize>) {
    match i {
        0..=79 => (Band::L, 0..80),
        80..=159 => (Band::C, 80..160),
        _ => (Band::S, 160..268),
    }
}

fn oracle_gsnr_db(p: &PhysicalParams, spans: &[f64], ch: usize) -> f64 {
    let (band, range) = standard_band(ch);
    let f_thz = match p.frequency_model {
        FrequencyModel::PerChannel => standard_center_thz(ch),
        FrequencyModel::BandCenter => {
            let n = range.len() as f64;
            range.map(standard_center_thz).sum::<f64>() / n
        }
    };
    let bp = p.band(band);
    let nf = 10f64.powf(bp.noise_figure_db / 10.0);
    let p_w = 1e-3 * 10f64.powf(p.launch_power_dbm / 10.0);
    let r = p.symbol_rate_gbaud * 1e9;
    let mut ase = 0.0;
    let mut nli = 0.0;
    for &l in spans {
        let g = 10f64.powf(bp.attenuation_db_per_km * l / 10.0);
        ase += nf * H * f_thz * 1e12 * (g - 1.0) * r / p_w;
        nli += bp.nli_eta * p_w * p_w;
    }
    let trx = 10f64.powf(-p.trx_snr_db / 10.0);
    10.0 * (1.0 / (ase + nli + trx)).log10() - p.filtering_penalty_db - p.aging_margin_db
}

fn criterion_gsnr() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let plan = BandPlan::standard();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut p = PhysicalParams::default();
        p.frequency_model = if rng.gen_bool(0.5) {
            FrequencyModel::PerChannel
        } else {
            FrequencyModel::BandCenter
        };
        for band in [Band::L, Band::C, Band::S] {
            let b = p.band_mut(band);
            b.noise_figure_db = rng.gen_range(3.0..8.0);
            b.attenuation_db_per_km = rng.gen_range(0.15..0.3);
            b.nli_eta = rng.gen_range(0.0..2000.0);
        }
        p.launch_power_dbm = rng.gen_range(-5.0..5.0);
        p.symbol_rate_gbaud = rng.gen_range(32.0..96.0);
        p.trx_snr_db = rng.gen_range(12.0..30.0);
        p.filtering_penalty_db = rng.gen_range(0.0..3.0);
        p.aging_margin_db = rng.gen_range(0.0..3.0);
        let spans: Vec<f64> = (0..rng.gen_range(0..40)).map(|_| rng.gen_range(1.0..80.0)).collect();
        let ch = rng.gen_range(0..268);
        let est = QotEstimator::new(plan.clone(), p.clone());
        let err = (est.gsnr_db(&spans, ch) - oracle_gsnr_db(&p, &spans, ch)).abs();
        worst = worst.max(err);
    }
    check(
        worst <= 1e-9,
        format!("1000 draws, max |error| {worst:.2e} dB ({})", within(t.elapsed(), 1.0)),
    )
}

// ---------------------------------------------------------------------------
// 2. Threshold derivation

fn criterion_thresholds() -> Outcome {
    let t = Instant::now();
    let target = 1.5e-2;
    let table = ModulationTable::derive(target).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for f in table.formats() {
        let snr = 10f64.powf(f.threshold_db / 10.0);
        worst = worst.max((f.ber(snr) - target).abs());
        let direct = required_snr_for_ber(f.bits_per_symbol, target).map_err(|e| e.to_string())?;
        worst = worst.max((direct - f.threshold_db).abs());
    }
    let th: Vec<f64> = table.formats().iter().map(|f| f.threshold_db).collect();
    let increasing = th.windows(2).all(|w| w[0] < w[1]);
    let listed = th.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/");
    check(
        table.formats().len() == 6 && increasing && worst <= 1e-6,
        format!("thresholds {listed} dB, round-trip error {worst:.1e} ({})", within(t.elapsed(), 1.0)),
    )
}

// ---------------------------------------------------------------------------
// 3. First fit against brute force

fn brute_first_fit(busy: &[bool], rates: &[u32], range: std::ops::Range<usize>, demand: u32) -> Option<Vec<usize>> {
    let mut picked = Vec::new();
    let mut total = 0u32;
    for ch in range {
        if busy[ch] || rates[ch] == 0 {
            continue;
        }
        picked.push(ch);
        total += rates[ch];
        if total >= demand {
            return Some(picked);
        }
    }
    None
}

fn criterion_first_fit() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let topo = NetworkTopology::new(5, &[(0, 1, 100.0), (1, 2, 100.0), (2, 3, 100.0), (3, 4, 100.0)], 80.0)
        .map_err(|e| e.to_string())?;
    let hop_route = |a: usize| k_shortest_paths(&topo, a, a + 1, 1).unwrap().remove(0);
    let mut mismatches = 0;
    let mut found = 0;
    for _ in 0..10_000 {
        let total = rng.gen_range(1..=16);
        let plan = if total >= 2 && rng.gen_bool(0.5) {
            let c = rng.gen_range(1..total);
            BandPlan::new(vec![(Band::C, c), (Band::S, total - c)], 75.0, 400.0, 191.7)
        } else {
            BandPlan::new(vec![(Band::C, total)], 75.0, 400.0, 191.7)
        }
        .map_err(|e| e.to_string())?;
        let mut state = SpectrumState::new(4, total);
        let p_busy = rng.gen_range(0.0..0.8);
        for link in 0..4 {
            let r = hop_route(link);
            for ch in 0..total {
                if rng.gen_bool(p_busy) {
                    state.allocate(&r, &[ch], &[100], f64::INFINITY).map_err(|e| e.to_string())?;
                }
            }
        }
        let a = rng.gen_range(0..4);
        let b = rng.gen_range(a + 1..=4);
        let route = k_shortest_paths(&topo, a, b, 1).map_err(|e| e.to_string())?.remove(0);
        let rates: Vec<u32> = (0..total)
            .map(|_| if rng.gen_bool(0.15) { 0 } else { 100 * rng.gen_range(1..=6) })
            .collect();
        let band = rng.gen_range(0..plan.num_bands());
        let demand = 100 * rng.gen_range(1..=20);
        let busy: Vec<bool> = (0..total)
            .map(|ch| route.links.iter().any(|&l| !state.is_free(l, ch)))
            .collect();
        let expected = brute_first_fit(&busy, &rates, plan.band_range(band), demand);
        let got = first_fit_candidates(&state, &plan, &route, band, demand, &rates).map_err(|e| e.to_string())?;
        found += usize::from(expected.is_some());
        mismatches += usize::from(got != expected);
    }
    check(
        mismatches == 0,
        format!(
            "10000 cases ({found} feasible), {mismatches} mismatches ({})",
            within(t.elapsed(), 10.0)
        ),
    )
}

// ---------------------------------------------------------------------------
// Desk-scale scenario shared by criteria 4, 8 and 9: a 6-node ring of 400 km
// links with an 800 km chord, C and S bands of 20 channels, K = 3.

const DESK_K: usize = 3;
const DESK_REQUESTS: usize = 200;
/// Offered load at which first-band first-fit blocks about 5% of requests.
const DESK_LOAD: f64 = 130.0;

fn desk_scenario() -> Scenario {
    let links = [
        (0, 1, 400.0),
        (1, 2, 400.0),
        (2, 3, 400.0),
        (3, 4, 400.0),
        (4, 5, 400.0),
        (5, 0, 400.0),
        (0, 3, 800.0),
    ];
    let topo = NetworkTopology::new(6, &links, 80.0).unwrap();
    let plan = BandPlan::new(vec![(Band::C, 20), (Band::S, 20)], 75.0, 400.0, 191.7).unwrap();
    let est = QotEstimator::new(plan.clone(), PhysicalParams::default());
    let qdb = QotDatabase::build(&topo, &est, ModulationTable::standard(), DESK_K).unwrap();
    Scenario {
        topology: Arc::new(topo),
        plan,
        qdb: Arc::new(qdb),
    }
}

fn desk_env(load: f64) -> EnvConfig {
    EnvConfig {
        k: DESK_K,
        episode_length: DESK_REQUESTS,
        max_channels_per_request: 8,
        traffic: TrafficParams {
            load_erlang: load,
            ..TrafficParams::default()
        },
    }
}

// ---------------------------------------------------------------------------
// 4. Mask soundness

fn criterion_mask_soundness() -> Outcome {
    let t = Instant::now();
    let sc = desk_scenario();
    let mut env = Environment::new(sc, desk_env(400.0)).map_err(|e| e.to_string())?;
    let mut agent = A2cAgent::new(
        env.observation_len(),
        env.num_actions(),
        TrainConfig {
            hidden_layers: 1,
            hidden_units: 16,
            ..TrainConfig::default()
        },
        4,
    )
    .map_err(|e| e.to_string())?;
    let reject = env.reject_action();
    let (mut steps, mut probes, mut failed, mut sampled_masked, mut masked_seen) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut episode = 0;
    while steps < 100_000 {
        let mut obs = env.reset(1000 + episode).map_err(|e| e.to_string())?;
        episode += 1;
        while !env.is_done() && steps < 100_000 {
            let mask = env.action_mask();
            masked_seen += mask.as_slice()[..reject].iter().filter(|v| !**v).count();
            for a in (0..reject).filter(|&a| mask.is_valid(a)) {
                let mut probe = env.clone();
                probes += 1;
                if probe.step(a).map_err(|e| e.to_string())?.info.blocked {
                    failed += 1;
                }
            }
            let (action, _) = agent.act(&obs, &mask, SelectMode::Sample);
            if !mask.is_valid(action) {
                sampled_masked += 1;
            }
            obs = env.step(action).map_err(|e| e.to_string())?.observation;
            steps += 1;
        }
    }
    check(
        failed == 0 && sampled_masked == 0 && masked_seen > 0,
        format!(
            "{steps} steps, {probes} unmasked actions probed, {failed} failed, {sampled_masked} masked samples, {masked_seen} masked entries seen ({})",
            within(t.elapsed(), 30.0)
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. Gradient check

fn criterion_gradient() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (input, actions) = (10, 7);
    let cfg = TrainConfig {
        value_loss_weight: 0.5,
        entropy_weight: 0.01,
        ..TrainConfig::default()
    };
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for init in 0..20 {
        let net = PolicyValueNet::new(input, &[8, 8], actions).init(&mut ChaCha8Rng::seed_from_u64(100 + init));
        let obs: Vec<Vec<f64>> = (0..16).map(|_| (0..input).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let masks: Vec<ActionMask> = (0..16)
            .map(|_| {
                let mut m: Vec<bool> = (0..actions).map(|_| rng.gen_bool(0.6)).collect();
                m[actions - 1] = true;
                ActionMask(m)
            })
            .collect();
        let batch: Vec<Sample<'_>> = (0..16)
            .map(|i| {
                let valid: Vec<usize> = (0..actions).filter(|&a| masks[i].is_valid(a)).collect();
                Sample {
                    observation: &obs[i],
                    action: *valid.choose(&mut rng).unwrap(),
                    mask: &masks[i],
                    ret: rng.gen_range(-5.0..5.0),
                    advantage: rng.gen_range(-2.0..2.0),
                }
            })
            .collect();
        let (_, grad) = loss_and_grad(&net, &batch, &cfg);
        let mut probe = net.clone();
        for i in 0..net.num_params() {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + eps;
            let up = loss(&probe, &batch, &cfg);
            probe.params_mut()[i] = orig - eps;
            let down = loss(&probe, &batch, &cfg);
            probe.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            compared += 1;
        }
    }
    check(
        worst <= 1e-4,
        format!(
            "20 inits, {compared} partials, max relative error {worst:.2e} ({})",
            within(t.elapsed(), 10.0)
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Observation shape on NSFNET with the standard plan

fn criterion_observation_shape() -> Outcome {
    let topo = builtin_nsfnet();
    let plan = BandPlan::standard();
    let est = QotEstimator::new(plan.clone(), PhysicalParams::default());
    let qdb = QotDatabase::build(&topo, &est, ModulationTable::standard(), 5).map_err(|e| e.to_string())?;
    let sc = Scenario {
        topology: Arc::new(topo),
        plan,
        qdb: Arc::new(qdb),
    };
    let cfg = EnvConfig {
        episode_length: 1000,
        ..EnvConfig::default()
    };
    let mut env = Environment::new(sc.clone(), cfg).map_err(|e| e.to_string())?;
    let mut policy = PolicySpec::Random.instantiate(&sc, &default_band_order(&sc.plan), 6);
    let mut obs = env.reset(6).map_err(|e| e.to_string())?;
    let (mut bad_len, mut out_of_range, mut bad_mask) = (0, 0, 0);
    loop {
        bad_len += usize::from(obs.len() != 180);
        out_of_range += obs.iter().filter(|&&x| !(0.0..=1.0).contains(&x)).count();
        let ctx = env.context().unwrap();
        let mask = ctx.mask();
        bad_mask += usize::from(mask.len() != 16);
        let a = policy.select(&ctx, &obs, &mask);
        let out = env.step(a).map_err(|e| e.to_string())?;
        obs = out.observation;
        if out.done {
            break;
        }
    }
    check(
        env.observation_len() == 180 && env.num_actions() == 16 && bad_len == 0 && bad_mask == 0 && out_of_range == 0,
        format!(
            "observation {} entries, mask {} entries, 1000 steps with {out_of_range} values outside [0,1]",
            env.observation_len(),
            env.num_actions()
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. Conservation

fn criterion_conservation() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let topo = builtin_nsfnet();
    let table = RouteTable::build(&topo, 3).map_err(|e| e.to_string())?;
    let channels = 268;
    let mut state = SpectrumState::new(topo.num_links(), channels);
    let mut model = vec![vec![false; channels]; topo.num_links()];
    let mut active: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    let mut violations = 0;
    let mut allocs = 0;
    for _ in 0..10_000 {
        if active.is_empty() || rng.gen_bool(0.55) {
            let s = rng.gen_range(0..14);
            let d = (s + rng.gen_range(1..14)) % 14;
            let routes = table.routes(s, d);
            let route = &routes[rng.gen_range(0..routes.len())];
            let free: Vec<usize> = (0..channels)
                .filter(|&c| route.links.iter().all(|&l| !model[l][c]))
                .collect();
            if free.is_empty() {
                continue;
            }
            let n = rng.gen_range(1..=free.len().min(4));
            let chs: Vec<usize> = free.choose_multiple(&mut rng, n).copied().collect();
            let id = state
                .allocate(route, &chs, &vec![100; n], 0.0)
                .map_err(|e| e.to_string())?;
            for &l in &route.links {
                for &c in &chs {
                    model[l][c] = true;
                }
            }
            active.insert(id, (route.hops(), n));
            allocs += 1;
        } else {
            let ids: Vec<u64> = active.keys().copied().collect();
            let id = ids[rng.gen_range(0..ids.len())];
            let lp = state.release(id).map_err(|e| e.to_string())?;
            for &l in &lp.route.links {
                for &c in &lp.channels {
                    model[l][c] = false;
                }
            }
            active.remove(&id);
        }
        let expected: usize = active.values().map(|(h, n)| h * n).sum();
        let bitmap_matches = (0..topo.num_links()).all(|l| (0..channels).all(|c| state.is_free(l, c) != model[l][c]));
        if state.total_occupied() != expected || !bitmap_matches || state.active().len() != active.len() {
            violations += 1;
        }
    }
    let ids: Vec<u64> = state.active().keys().copied().collect();
    for id in ids {
        state.release(id).map_err(|e| e.to_string())?;
    }
    let empty = ChannelBits::new(channels);
    let restored = state.total_occupied() == 0
        && state.active().is_empty()
        && (0..topo.num_links()).all(|l| state.link_bits(l) == &empty);
    check(
        violations == 0 && restored,
        format!(
            "10000 ops ({allocs} allocations), {violations} violations, empty after release: {restored} ({})",
            within(t.elapsed(), 30.0)
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Scaled learning trend

fn mean_bp(rows: &[SummaryRow], policy: &str) -> (f64, f64) {
    let r = rows.iter().find(|r| r.policy == policy).expect("policy evaluated");
    (r.mean_bp, r.std_bp)
}

fn criterion_learning_trend() -> Outcome {
    let t = Instant::now();
    let sc = desk_scenario();
    let env_cfg = desk_env(DESK_LOAD);
    let order = default_band_order(&sc.plan);
    let eval_seeds: Vec<u64> = (1000..1010).collect();
    let baselines = [
        PolicySpec::Heuristic(HeuristicKind::FirstBand),
        PolicySpec::Heuristic(HeuristicKind::DistanceAdaptive),
        PolicySpec::Heuristic(HeuristicKind::BitRateAdaptive),
        PolicySpec::Random,
    ];
    let base = summarize(
        &evaluate(&sc, &env_cfg, &[DESK_LOAD], &eval_seeds, &baselines, &order).map_err(|e| e.to_string())?,
    );
    let (fb, _) = mean_bp(&base, "fbff");
    let (random, _) = mean_bp(&base, "random");
    let best_heuristic = ["fbff", "daff", "baff"]
        .iter()
        .map(|p| mean_bp(&base, p).0)
        .fold(f64::INFINITY, f64::min);

    let cfg = TrainConfig {
        learning_rate: 1e-3,
        buffer_size: 200,
        minibatch_size: 100,
        hidden_layers: 2,
        hidden_units: 64,
        smoothing_window: 50,
        ..TrainConfig::default()
    };
    let episodes = 2000;
    let mut env = Environment::new(sc.clone(), env_cfg.clone()).map_err(|e| e.to_string())?;
    let trained = agent::train(&mut env, &cfg, episodes, 1).map_err(|e| e.to_string())?;
    let drl = summarize(
        &evaluate(&sc, &env_cfg, &[DESK_LOAD], &eval_seeds, &[PolicySpec::Drl(trained.best)], &order)
            .map_err(|e| e.to_string())?,
    );
    let (agent_bp, _) = mean_bp(&drl, "drl");

    let in_band = (0.05..=0.2).contains(&fb);
    let beats_random = agent_bp <= 0.5 * random;
    let near_best = agent_bp <= 1.05 * best_heuristic;
    check(
        in_band && beats_random && near_best,
        format!(
            "load {DESK_LOAD} E: fbff {fb:.4}, best heuristic {best_heuristic:.4}, random {random:.4}, agent {agent_bp:.4} \
             (ratio to best heuristic {:.3}, to random {:.3}) after {episodes} episodes ({})",
            agent_bp / best_heuristic,
            agent_bp / random,
            within(t.elapsed(), 1800.0)
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Heuristic sanity: zero blocking at low load, monotone in load

fn criterion_heuristic_sanity() -> Outcome {
    let t = Instant::now();
    let sc = desk_scenario();
    let order = default_band_order(&sc.plan);
    let seeds: Vec<u64> = (2000..2010).collect();
    let heuristics = [
        PolicySpec::Heuristic(HeuristicKind::FirstBand),
        PolicySpec::Heuristic(HeuristicKind::DistanceAdaptive),
        PolicySpec::Heuristic(HeuristicKind::BitRateAdaptive),
    ];
    let mut everyone = heuristics.to_vec();
    everyone.push(PolicySpec::Random);
    let low = evaluate(&sc, &desk_env(10.0), &[10.0], &seeds, &everyone, &order).map_err(|e| e.to_string())?;
    let low_nonzero = low.iter().filter(|r| r.bp != 0.0).count();

    let loads = [60.0, 100.0, 140.0, 180.0, 220.0];
    let rows = summarize(&evaluate(&sc, &desk_env(DESK_LOAD), &loads, &seeds, &heuristics, &order).map_err(|e| e.to_string())?);
    let mut report = Vec::new();
    let mut ok = low_nonzero == 0;
    for h in &heuristics {
        let curve: Vec<&SummaryRow> = loads
            .iter()
            .map(|&l| rows.iter().find(|r| r.policy == h.name() && r.load == l).unwrap())
            .collect();
        let mut inversions = 0;
        let mut excessive = false;
        for w in curve.windows(2) {
            if w[1].mean_bp < w[0].mean_bp {
                inversions += 1;
                if w[0].mean_bp - w[1].mean_bp > w[0].std_bp.max(w[1].std_bp) {
                    excessive = true;
                }
            }
        }
        ok &= inversions <= 1 && !excessive;
        report.push(format!(
            "{} {}",
            h.name(),
            curve.iter().map(|r| format!("{:.3}", r.mean_bp)).collect::<Vec<_>>().join("<")
        ));
    }
    check(
        ok,
        format!(
            "load 10 E: {low_nonzero} of {} runs block; {} ({})",
            low.len(),
            report.join(", "),
            within(t.elapsed(), 60.0)
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gsnr-oracle", criterion_gsnr),
        ("threshold-derivation", criterion_thresholds),
        ("first-fit-oracle", criterion_first_fit),
        ("mask-soundness", criterion_mask_soundness),
        ("gradient-check", criterion_gradient),
        ("observation-shape", criterion_observation_shape),
        ("conservation", criterion_conservation),
        ("learning-trend", criterion_learning_trend),
        ("heuristic-sanity", criterion_heuristic_sanity),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
