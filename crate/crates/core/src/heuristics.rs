//! Baseline provisioning policies over k shortest paths.
//!
//! * first-band first-fit (FB-FF): first feasible route in KSP order, bands
//!   tried in a fixed order.
//! * distance-adaptive first-fit (DA-FF): picks the candidate needing the
//!   fewest channels when the modulation is chosen from route length alone,
//!   using per-band reach limits read off the QoT database.
//! * bit-rate-adaptive first-fit (BA-FF): picks the candidate whose actual
//!   first-fit set is smallest, then the one with the highest summed rate.
//!
//! DA-FF and BA-FF are reconstructions from their names and common usage;
//! the original pseudocode is not reproduced here.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{ActionMask, Candidate, DecisionContext};
use crate::error::{Error, Result};
use crate::qot::QotDatabase;
use crate::spectrum::{Band, BandPlan};

/// Anything that maps the current request to an action index.
pub trait Policy {
    fn select(&mut self, ctx: &DecisionContext<'_>, observation: &[f64], mask: &ActionMask) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    FirstBand,
    DistanceAdaptive,
    BitRateAdaptive,
}

impl HeuristicKind {
    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::FirstBand => "fbff",
            HeuristicKind::DistanceAdaptive => "daff",
            HeuristicKind::BitRateAdaptive => "baff",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fbff" => Ok(HeuristicKind::FirstBand),
            "daff" => Ok(HeuristicKind::DistanceAdaptive),
            "baff" => Ok(HeuristicKind::BitRateAdaptive),
            _ => Err(Error::Config(format!("unknown heuristic `{s}`"))),
        }
    }
}

/// Default band preference: C, then L, then S, restricted to the plan.
pub fn default_band_order(plan: &BandPlan) -> Vec<usize> {
    [Band::C, Band::L, Band::S]
        .into_iter()
        .filter_map(|b| plan.band_index(b))
        .collect()
}

/// Longest route (km) on which each format survives, per band.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachTable {
    // [band][format] -> km, None if the format never survives in the band
    reach_km: Vec<Vec<Option<f64>>>,
    rates_gbps: Vec<u32>,
}

impl ReachTable {
    pub fn from_database(qdb: &QotDatabase, plan: &BandPlan) -> Self {
        let nf = qdb.modulation().formats().len();
        let mut reach_km = vec![vec![None::<f64>; nf]; plan.num_bands()];
        let n = qdb.route_table().num_nodes();
        for s in 0..n {
            for d in 0..n {
                for (r, route) in qdb.routes(s, d).iter().enumerate() {
                    for (b, reach) in reach_km.iter_mut().enumerate() {
                        let best = plan
                            .band_range(b)
                            .filter_map(|c| qdb.entry(s, d, r, c).format)
                            .max();
                        if let Some(best) = best {
                            for slot in reach.iter_mut().take(best + 1) {
                                *slot = Some(slot.map_or(route.length_km, |v: f64| v.max(route.length_km)));
                            }
                        }
                    }
                }
            }
        }
        ReachTable {
            reach_km,
            rates_gbps: qdb.modulation().formats().iter().map(|f| f.bitrate_gbps).collect(),
        }
    }

    pub fn reach_km(&self, band_idx: usize, format: usize) -> Option<f64> {
        self.reach_km[band_idx][format]
    }

    /// Highest format whose reach in the band covers `length_km`.
    pub fn format_for(&self, band_idx: usize, length_km: f64) -> Option<usize> {
        self.reach_km[band_idx]
            .iter()
            .rposition(|r| r.is_some_and(|km| km >= length_km))
    }

    /// Channels needed for `demand_gbps` with distance-adaptive modulation.
    pub fn channels_needed(&self, band_idx: usize, length_km: f64, demand_gbps: u32) -> Option<u32> {
        let f = self.format_for(band_idx, length_km)?;
        Some(demand_gbps.div_ceil(self.rates_gbps[f]))
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicPolicy {
    kind: HeuristicKind,
    band_order: Vec<usize>,
    reach: Option<ReachTable>,
}

impl HeuristicPolicy {
    pub fn new(kind: HeuristicKind, band_order: Vec<usize>, qdb: &QotDatabase, plan: &BandPlan) -> Self {
        let reach = (kind == HeuristicKind::DistanceAdaptive).then(|| ReachTable::from_database(qdb, plan));
        HeuristicPolicy { kind, band_order, reach }
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    /// Feasible candidates in KSP order, bands in the configured order.
    fn feasible<'c>(&self, ctx: &'c DecisionContext<'_>, mask: &ActionMask) -> Vec<(usize, &'c Candidate)> {
        let mut out = Vec::new();
        for r in 0..ctx.k {
            for &b in &self.band_order {
                let action = r * ctx.num_bands + b;
                if !mask.is_valid(action) {
                    continue;
                }
                if let Some(c) = ctx.candidate(r, b).filter(|c| c.is_feasible()) {
                    out.push((action, c));
                }
            }
        }
        out
    }

    pub fn fb_ff(&self, ctx: &DecisionContext<'_>, mask: &ActionMask) -> usize {
        self.feasible(ctx, mask)
            .first()
            .map_or(ctx.reject_action(), |&(a, _)| a)
    }

    pub fn da_ff(&self, ctx: &DecisionContext<'_>, mask: &ActionMask) -> usize {
        let reach = self.reach.as_ref().expect("DA-FF policy carries a reach table");
        // min_by_key keeps the first minimum, i.e. KSP order then band order
        self.feasible(ctx, mask)
            .into_iter()
            .min_by_key(|(_, c)| {
                let len = ctx.routes[c.route_idx].length_km;
                reach
                    .channels_needed(c.band_idx, len, ctx.request.bitrate_gbps)
                    .unwrap_or(u32::MAX)
            })
            .map_or(ctx.reject_action(), |(a, _)| a)
    }

    pub fn ba_ff(&self, ctx: &DecisionContext<'_>, mask: &ActionMask) -> usize {
        self.feasible(ctx, mask)
            .into_iter()
            .min_by_key(|(_, c)| (c.num_channels(), std::cmp::Reverse(c.rate_sum_gbps)))
            .map_or(ctx.reject_action(), |(a, _)| a)
    }
}

impl Policy for HeuristicPolicy {
    fn select(&mut self, ctx: &DecisionContext<'_>, _observation: &[f64], mask: &ActionMask) -> usize {
        match self.kind {
            HeuristicKind::FirstBand => self.fb_ff(ctx, mask),
            HeuristicKind::DistanceAdaptive => self.da_ff(ctx, mask),
            HeuristicKind::BitRateAdaptive => self.ba_ff(ctx, mask),
        }
    }
}

/// Uniform choice among the valid route/band actions; rejects only when
/// nothing else is valid.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn select(&mut self, ctx: &DecisionContext<'_>, _observation: &[f64], mask: &ActionMask) -> usize {
        let reject = ctx.reject_action();
        let valid: Vec<usize> = (0..reject).filter(|&a| mask.is_valid(a)).collect();
        valid.choose(&mut self.rng).copied().unwrap_or(reject)
    }
}
