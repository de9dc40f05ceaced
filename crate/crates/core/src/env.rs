//! The provisioning environment: request loop, state encoding, action
//! masking and reward.
//!
//! Actions are numbered `route * B + band` for the `K * B` route/band
//! candidates (bands in band-plan order), followed by a single reject action
//! at index `K * B`.
//!
//! The observation holds one block of `|E| + 5 B` values per candidate
//! route: link indicators, then for every band
//!
//! 1. channels in the first-fit set / `max_channels_per_request`
//! 2. summed max bit rate of that set / (band channels * top bit rate)
//! 3. mean band-local index of the set / band channels
//! 4. free (adjacent link, channel) pairs / (max degree * route nodes * set size)
//! 5. bit rate of every free continuity-feasible channel / (band channels * top bit rate)
//!
//! Features 1-4 are 0 when the band cannot carry the request. Blocks for
//! missing routes are all zero.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qot::QotDatabase;
use crate::spectrum::{self, BandPlan, SpectrumState};
use crate::topology::{NetworkTopology, Route};
use crate::traffic::{self, Request, TrafficParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Candidate routes per request.
    pub k: usize,
    pub episode_length: usize,
    /// Normalization cap for feature (i).
    pub max_channels_per_request: usize,
    pub traffic: TrafficParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            k: 5,
            episode_length: 1000,
            max_channels_per_request: 8,
            traffic: TrafficParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.episode_length == 0 {
            return Err(Error::Config("episode length must be at least 1".into()));
        }
        if self.max_channels_per_request == 0 {
            return Err(Error::Config("max channels per request must be at least 1".into()));
        }
        self.traffic.validate()
    }
}

/// What a (route, band) candidate offers the current request.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub route_idx: usize,
    pub band_idx: usize,
    /// First-fit channel set, `None` when the band cannot carry the request.
    pub channels: Option<Vec<usize>>,
    pub rate_sum_gbps: u32,
    pub mean_local_index: f64,
    pub adjacent_free: usize,
    /// Bit rate of every free continuity-feasible channel in the band.
    pub free_rate_gbps: u32,
}

impl Candidate {
    pub fn is_feasible(&self) -> bool {
        self.channels.is_some()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.as_ref().map_or(0, Vec::len)
    }
}

/// Everything the policies and the encoder need about one request.
#[derive(Debug, Clone)]
pub struct DecisionContext<'a> {
    pub request: Request,
    pub routes: &'a [Route],
    pub k: usize,
    pub num_bands: usize,
    /// `k * num_bands` entries; `None` for routes that do not exist.
    pub candidates: Vec<Option<Candidate>>,
}

impl DecisionContext<'_> {
    pub fn num_actions(&self) -> usize {
        self.k * self.num_bands + 1
    }

    pub fn reject_action(&self) -> usize {
        self.k * self.num_bands
    }

    pub fn candidate(&self, route_idx: usize, band_idx: usize) -> Option<&Candidate> {
        self.candidates[route_idx * self.num_bands + band_idx].as_ref()
    }

    pub fn mask(&self) -> ActionMask {
        let mut m: Vec<bool> = self
            .candidates
            .iter()
            .map(|c| c.as_ref().is_some_and(Candidate::is_feasible))
            .collect();
        m.push(true);
        ActionMask(m)
    }
}

/// Validity of each action; the trailing reject entry is always true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMask(pub Vec<bool>);

impl ActionMask {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_valid(&self, action: usize) -> bool {
        self.0.get(action).copied().unwrap_or(false)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn num_valid(&self) -> usize {
        self.0.iter().filter(|&&v| v).count()
    }
}

/// Analyses every (route, band) candidate for `request`.
pub fn analyze<'a>(
    request: &Request,
    spectrum: &SpectrumState,
    qdb: &'a QotDatabase,
    topo: &NetworkTopology,
    plan: &BandPlan,
    k: usize,
) -> DecisionContext<'a> {
    let routes = qdb.routes(request.source, request.destination);
    let nb = plan.num_bands();
    let mut candidates = vec![None; k * nb];
    for (r, route) in routes.iter().enumerate().take(k) {
        let rates = qdb.rates(request.source, request.destination, r);
        let busy = spectrum.route_occupancy(&route.links);
        for b in 0..nb {
            let range = plan.band_range(b);
            let free_rate_gbps = range.clone().filter(|&c| !busy.get(c)).map(|c| rates[c]).sum();
            let channels = spectrum::first_fit(&busy, rates, range.clone(), request.bitrate_gbps);
            let (rate_sum_gbps, mean_local_index, adjacent_free) = match &channels {
                Some(chs) => (
                    chs.iter().map(|&c| rates[c]).sum(),
                    chs.iter().map(|&c| (c - range.start) as f64).sum::<f64>() / chs.len() as f64,
                    spectrum::adjacent_free_spectrum(topo, spectrum, route, chs),
                ),
                None => (0, 0.0, 0),
            };
            candidates[r * nb + b] = Some(Candidate {
                route_idx: r,
                band_idx: b,
                channels,
                rate_sum_gbps,
                mean_local_index,
                adjacent_free,
                free_rate_gbps,
            });
        }
    }
    DecisionContext {
        request: *request,
        routes,
        k,
        num_bands: nb,
        candidates,
    }
}

pub fn observation_len(k: usize, num_links: usize, num_bands: usize) -> usize {
    k * (num_links + 5 * num_bands)
}

/// Flattens a decision context into the normalized observation vector.
pub fn encode_context(ctx: &DecisionContext<'_>, topo: &NetworkTopology, plan: &BandPlan, qdb: &QotDatabase, max_channels_per_request: usize) -> Vec<f64> {
    let e = topo.num_links();
    let nb = plan.num_bands();
    let block = e + 5 * nb;
    let top_rate = f64::from(qdb.modulation().max_bitrate());
    let max_deg = topo.max_degree() as f64;
    let mut obs = vec![0.0; ctx.k * block];
    for (r, route) in ctx.routes.iter().enumerate().take(ctx.k) {
        let base = r * block;
        for &l in &route.links {
            obs[base + l] = 1.0;
        }
        for b in 0..nb {
            let c = ctx.candidate(r, b).expect("existing route has candidates");
            let band_ch = plan.band_channels(b) as f64;
            let f = base + e + 5 * b;
            obs[f + 4] = (f64::from(c.free_rate_gbps) / (band_ch * top_rate)).min(1.0);
            if let Some(chs) = &c.channels {
                let n = chs.len() as f64;
                obs[f] = (n / max_channels_per_request as f64).min(1.0);
                obs[f + 1] = (f64::from(c.rate_sum_gbps) / (band_ch * top_rate)).min(1.0);
                obs[f + 2] = c.mean_local_index / band_ch;
                let denom = max_deg * route.nodes.len() as f64 * n;
                obs[f + 3] = if denom > 0.0 { (c.adjacent_free as f64 / denom).min(1.0) } else { 0.0 };
            }
        }
    }
    obs
}

pub fn encode_state(
    request: &Request,
    spectrum: &SpectrumState,
    qdb: &QotDatabase,
    topo: &NetworkTopology,
    plan: &BandPlan,
    config: &EnvConfig,
) -> Vec<f64> {
    let ctx = analyze(request, spectrum, qdb, topo, plan, config.k);
    encode_context(&ctx, topo, plan, qdb, config.max_channels_per_request)
}

pub fn valid_actions(request: &Request, spectrum: &SpectrumState, qdb: &QotDatabase, topo: &NetworkTopology, plan: &BandPlan, k: usize) -> ActionMask {
    analyze(request, spectrum, qdb, topo, plan, k).mask()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub request: Request,
    pub action: usize,
    pub route_idx: Option<usize>,
    pub band: Option<usize>,
    pub channels: Vec<usize>,
    pub reward: f64,
}

impl StepRecord {
    pub fn provisioned(&self) -> bool {
        self.reward > 0.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    pub steps: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn provisioned(&self) -> usize {
        self.steps.iter().filter(|s| s.provisioned()).count()
    }

    pub fn blocked(&self) -> usize {
        self.steps.len() - self.provisioned()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// `t,src,dst,bitrate,action,route_idx,band,channels,reward`; channels are `;`-separated.
    pub fn write_csv<W: Write>(&self, plan: &BandPlan, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "src", "dst", "bitrate", "action", "route_idx", "band", "channels", "reward"])?;
        for s in &self.steps {
            let chs: Vec<String> = s.channels.iter().map(|c| c.to_string()).collect();
            w.write_record([
                s.t.to_string(),
                s.request.source.to_string(),
                s.request.destination.to_string(),
                s.request.bitrate_gbps.to_string(),
                s.action.to_string(),
                s.route_idx.map(|r| r.to_string()).unwrap_or_default(),
                s.band.map(|b| plan.band(b).to_string()).unwrap_or_default(),
                chs.join(";"),
                s.reward.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<step csv>", e))?;
        Ok(())
    }
}

pub fn blocking_probability(log: &EpisodeLog) -> Result<f64> {
    if log.steps.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(log.blocked() as f64 / log.steps.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub blocked: bool,
    pub channels: Vec<usize>,
    pub route_idx: Option<usize>,
    pub band: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Shared, read-only inputs of an environment instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Arc<NetworkTopology>,
    pub plan: BandPlan,
    pub qdb: Arc<QotDatabase>,
}

/// One simulation instance; reset it with a seed to start an episode.
#[derive(Debug, Clone)]
pub struct Environment {
    scenario: Scenario,
    config: EnvConfig,
    spectrum: SpectrumState,
    requests: Vec<Request>,
    cursor: usize,
    done: bool,
    log: EpisodeLog,
}

impl Environment {
    pub fn new(scenario: Scenario, config: EnvConfig) -> Result<Self> {
        config.validate()?;
        if scenario.qdb.k() < config.k {
            return Err(Error::Config(format!(
                "QoT database holds {} routes per pair, environment wants {}",
                scenario.qdb.k(),
                config.k
            )));
        }
        if scenario.qdb.num_channels() != scenario.plan.num_channels() {
            return Err(Error::Config("QoT database and band plan disagree on channel count".into()));
        }
        let spectrum = SpectrumState::new(scenario.topology.num_links(), scenario.plan.num_channels());
        Ok(Environment {
            scenario,
            config,
            spectrum,
            requests: Vec::new(),
            cursor: 0,
            done: true,
            log: EpisodeLog::default(),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.scenario.topology
    }

    pub fn plan(&self) -> &BandPlan {
        &self.scenario.plan
    }

    pub fn qdb(&self) -> &QotDatabase {
        &self.scenario.qdb
    }

    pub fn spectrum(&self) -> &SpectrumState {
        &self.spectrum
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn num_actions(&self) -> usize {
        self.config.k * self.scenario.plan.num_bands() + 1
    }

    pub fn reject_action(&self) -> usize {
        self.num_actions() - 1
    }

    pub fn observation_len(&self) -> usize {
        observation_len(self.config.k, self.scenario.topology.num_links(), self.scenario.plan.num_bands())
    }

    /// Starts a new episode with a freshly drawn request stream.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let requests = traffic::generate_requests(
            seed,
            self.scenario.topology.num_nodes(),
            &self.config.traffic,
            self.config.episode_length,
        )?;
        self.reset_with_requests(requests)
    }

    /// Starts a new episode over an explicit request trace.
    pub fn reset_with_requests(&mut self, requests: Vec<Request>) -> Result<Vec<f64>> {
        if requests.is_empty() {
            return Err(Error::Config("request trace is empty".into()));
        }
        let n = self.scenario.topology.num_nodes();
        if let Some(r) = requests
            .iter()
            .find(|r| r.source >= n || r.destination >= n || r.source == r.destination || r.bitrate_gbps == 0)
        {
            return Err(Error::Config(format!("request {} is invalid for this topology", r.id)));
        }
        self.spectrum.clear();
        self.requests = requests;
        self.cursor = 0;
        self.done = false;
        self.log = EpisodeLog::default();
        Ok(self.observation())
    }

    pub fn current_request(&self) -> Option<&Request> {
        if self.done {
            None
        } else {
            self.requests.get(self.cursor)
        }
    }

    pub fn context(&self) -> Option<DecisionContext<'_>> {
        let req = self.current_request()?;
        Some(analyze(
            req,
            &self.spectrum,
            &self.scenario.qdb,
            &self.scenario.topology,
            &self.scenario.plan,
            self.config.k,
        ))
    }

    pub fn observation(&self) -> Vec<f64> {
        match self.context() {
            Some(ctx) => self.encode(&ctx),
            None => vec![0.0; self.observation_len()],
        }
    }

    pub fn encode(&self, ctx: &DecisionContext<'_>) -> Vec<f64> {
        encode_context(
            ctx,
            &self.scenario.topology,
            &self.scenario.plan,
            &self.scenario.qdb,
            self.config.max_channels_per_request,
        )
    }

    pub fn action_mask(&self) -> ActionMask {
        match self.context() {
            Some(ctx) => ctx.mask(),
            None => {
                let mut m = vec![false; self.num_actions()];
                *m.last_mut().unwrap() = true;
                ActionMask(m)
            }
        }
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let size = self.num_actions();
        if action >= size {
            return Err(Error::ActionOutOfRange { action, size });
        }
        let request = self.requests[self.cursor];
        let nb = self.scenario.plan.num_bands();
        let mut info = StepInfo {
            blocked: true,
            channels: Vec::new(),
            route_idx: None,
            band: None,
        };
        if action != size - 1 {
            let (r, b) = (action / nb, action % nb);
            let routes = self.scenario.qdb.routes(request.source, request.destination);
            if let Some(route) = routes.get(r) {
                let rates = self.scenario.qdb.rates(request.source, request.destination, r);
                let busy = self.spectrum.route_occupancy(&route.links);
                if let Some(chs) = spectrum::first_fit(&busy, rates, self.scenario.plan.band_range(b), request.bitrate_gbps) {
                    let ch_rates: Vec<u32> = chs.iter().map(|&c| rates[c]).collect();
                    self.spectrum
                        .allocate(route, &chs, &ch_rates, request.departure_s())
                        .expect("first-fit channels are free on the route");
                    info = StepInfo {
                        blocked: false,
                        channels: chs,
                        route_idx: Some(r),
                        band: Some(b),
                    };
                }
            }
        }
        let reward = if info.blocked { -1.0 } else { 1.0 };
        self.log.steps.push(StepRecord {
            t: self.cursor,
            request,
            action,
            route_idx: info.route_idx,
            band: info.band,
            channels: info.channels.clone(),
            reward,
        });
        self.cursor += 1;
        if self.cursor >= self.requests.len() {
            self.done = true;
        } else {
            let next_arrival = self.requests[self.cursor].arrival_s;
            self.spectrum.release_expired(next_arrival);
        }
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.done,
            info,
        })
    }
}
