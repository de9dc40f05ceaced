//! Multi-band channel grid and per-link occupancy.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NetworkTopology, Route};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    L,
    C,
    S,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::L, Band::C, Band::S];

    pub fn name(self) -> &'static str {
        match self {
            Band::L => "L",
            Band::C => "C",
            Band::S => "S",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Band> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L" => Ok(Band::L),
            "C" => Ok(Band::C),
            "S" => Ok(Band::S),
            _ => Err(Error::UnknownBand(s.to_string())),
        }
    }
}

pub const DEFAULT_CHANNEL_WIDTH_GHZ: f64 = 75.0;
pub const DEFAULT_BAND_GAP_GHZ: f64 = 400.0;
pub const DEFAULT_C_BAND_START_THZ: f64 = 191.7;

/// Contiguous channel grid, bands ordered from low to high frequency.
///
/// Channels are numbered globally from 0 at the lowest frequency. Adjacent
/// bands are separated by `gap_ghz` between the outer edges of their
/// boundary channels.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPlan {
    bands: Vec<(Band, usize)>,
    offsets: Vec<usize>,
    channel_width_ghz: f64,
    gap_ghz: f64,
    first_center_thz: f64,
}

impl BandPlan {
    /// `anchor_thz` is the center of the lowest C-band channel, or of the
    /// lowest channel overall when the plan has no C band.
    pub fn new(bands: Vec<(Band, usize)>, channel_width_ghz: f64, gap_ghz: f64, anchor_thz: f64) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Config("band plan has no bands".into()));
        }
        for (i, (b, n)) in bands.iter().enumerate() {
            if *n == 0 {
                return Err(Error::Config(format!("band {b} has no channels")));
            }
            if bands[..i].iter().any(|(o, _)| o == b) {
                return Err(Error::Config(format!("band {b} listed twice")));
            }
            if i > 0 && bands[i - 1].0 > *b {
                return Err(Error::Config("bands must be listed in L, C, S order".into()));
            }
        }
        if !(channel_width_ghz > 0.0) || !(gap_ghz >= 0.0) {
            return Err(Error::Config("channel width must be positive and gap non-negative".into()));
        }
        let mut offsets = Vec::with_capacity(bands.len());
        let mut acc = 0;
        for (_, n) in &bands {
            offsets.push(acc);
            acc += n;
        }
        let mut plan = BandPlan {
            bands,
            offsets,
            channel_width_ghz,
            gap_ghz,
            first_center_thz: 0.0,
        };
        let anchor_channel = plan
            .band_index(Band::C)
            .map(|b| plan.offsets[b])
            .unwrap_or(0);
        plan.first_center_thz = anchor_thz - plan.center_thz(anchor_channel);
        Ok(plan)
    }

    /// L=80, C=80, S=108 channels of 75 GHz with 400 GHz gaps.
    pub fn standard() -> Self {
        BandPlan::new(
            vec![(Band::L, 80), (Band::C, 80), (Band::S, 108)],
            DEFAULT_CHANNEL_WIDTH_GHZ,
            DEFAULT_BAND_GAP_GHZ,
            DEFAULT_C_BAND_START_THZ,
        )
        .expect("standard band plan is valid")
    }

    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn num_channels(&self) -> usize {
        self.offsets.last().unwrap() + self.bands.last().unwrap().1
    }

    pub fn bands(&self) -> impl Iterator<Item = Band> + '_ {
        self.bands.iter().map(|(b, _)| *b)
    }

    pub fn band(&self, idx: usize) -> Band {
        self.bands[idx].0
    }

    pub fn band_index(&self, band: Band) -> Option<usize> {
        self.bands.iter().position(|(b, _)| *b == band)
    }

    pub fn band_channels(&self, idx: usize) -> usize {
        self.bands[idx].1
    }

    pub fn max_band_channels(&self) -> usize {
        self.bands.iter().map(|(_, n)| *n).max().unwrap()
    }

    /// Global channel indices belonging to band `idx`.
    pub fn band_range(&self, idx: usize) -> Range<usize> {
        self.offsets[idx]..self.offsets[idx] + self.bands[idx].1
    }

    pub fn band_of(&self, channel: usize) -> usize {
        match self.offsets.binary_search(&channel) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn channel_width_ghz(&self) -> f64 {
        self.channel_width_ghz
    }

    pub fn gap_ghz(&self) -> f64 {
        self.gap_ghz
    }

    pub fn center_thz(&self, channel: usize) -> f64 {
        let band = self.band_of(channel);
        let w = self.channel_width_ghz * 1e-3;
        let gap = self.gap_ghz * 1e-3;
        self.first_center_thz + channel as f64 * w + band as f64 * gap
    }

    /// Mean of the band's channel center frequencies.
    pub fn band_center_thz(&self, idx: usize) -> f64 {
        let r = self.band_range(idx);
        0.5 * (self.center_thz(r.start) + self.center_thz(r.end - 1))
    }
}

const WORD: usize = 64;

/// Occupancy bitmap for one link; a set bit means the channel is in use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelBits {
    words: Vec<u64>,
    len: usize,
}

impl ChannelBits {
    pub fn new(len: usize) -> Self {
        ChannelBits {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, ch: usize) -> bool {
        self.words[ch / WORD] >> (ch % WORD) & 1 == 1
    }

    fn set(&mut self, ch: usize, v: bool) {
        let m = 1u64 << (ch % WORD);
        if v {
            self.words[ch / WORD] |= m;
        } else {
            self.words[ch / WORD] &= !m;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn or_assign(&mut self, other: &ChannelBits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lightpath {
    pub route: Route,
    pub channels: Vec<usize>,
    pub rates_gbps: Vec<u32>,
    pub expiry: f64,
}

/// Per-link occupancy plus the set of active lightpaths.
#[derive(Debug, Clone)]
pub struct SpectrumState {
    links: Vec<ChannelBits>,
    num_channels: usize,
    active: BTreeMap<u64, Lightpath>,
    next_id: u64,
}

impl SpectrumState {
    pub fn new(num_links: usize, num_channels: usize) -> Self {
        SpectrumState {
            links: vec![ChannelBits::new(num_channels); num_links],
            num_channels,
            active: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn link_bits(&self, link: usize) -> &ChannelBits {
        &self.links[link]
    }

    pub fn is_free(&self, link: usize, channel: usize) -> bool {
        !self.links[link].get(channel)
    }

    /// Channels in use on at least one link of `route_links`.
    pub fn route_occupancy(&self, route_links: &[usize]) -> ChannelBits {
        let mut acc = ChannelBits::new(self.num_channels);
        for &l in route_links {
            acc.or_assign(&self.links[l]);
        }
        acc
    }

    pub fn total_occupied(&self) -> usize {
        self.links.iter().map(ChannelBits::count_ones).sum()
    }

    pub fn active(&self) -> &BTreeMap<u64, Lightpath> {
        &self.active
    }

    pub fn clear(&mut self) {
        for l in &mut self.links {
            *l = ChannelBits::new(self.num_channels);
        }
        self.active.clear();
    }

    pub fn allocate(&mut self, route: &Route, channels: &[usize], rates_gbps: &[u32], expiry: f64) -> Result<u64> {
        if channels.is_empty() {
            return Err(Error::InvalidArgument("lightpath needs at least one channel".into()));
        }
        if channels.len() != rates_gbps.len() {
            return Err(Error::InvalidArgument("one rate per channel required".into()));
        }
        for &l in &route.links {
            if l >= self.links.len() {
                return Err(Error::InvalidArgument(format!("link {l} out of range")));
            }
            for (i, &c) in channels.iter().enumerate() {
                if c >= self.num_channels || channels[..i].contains(&c) {
                    return Err(Error::InvalidArgument(format!("bad channel {c}")));
                }
                if self.links[l].get(c) {
                    return Err(Error::DoubleAllocation { link: l, channel: c });
                }
            }
        }
        for &l in &route.links {
            for &c in channels {
                self.links[l].set(c, true);
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        self.active.insert(
            id,
            Lightpath {
                route: route.clone(),
                channels: channels.to_vec(),
                rates_gbps: rates_gbps.to_vec(),
                expiry,
            },
        );
        Ok(id)
    }

    pub fn release(&mut self, id: u64) -> Result<Lightpath> {
        let lp = self.active.remove(&id).ok_or(Error::UnknownLightpath(id))?;
        for &l in &lp.route.links {
            for &c in &lp.channels {
                self.links[l].set(c, false);
            }
        }
        Ok(lp)
    }

    /// Releases every lightpath whose expiry is `<= now`; returns how many.
    pub fn release_expired(&mut self, now: f64) -> usize {
        let expired: Vec<u64> = self
            .active
            .iter()
            .filter(|(_, lp)| lp.expiry <= now)
            .map(|(&id, _)| id)
            .collect();
        for id in &expired {
            self.release(*id).expect("id taken from the active set");
        }
        expired.len()
    }

    /// Writes `link,channel,occupied` rows for every (link, channel).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["link", "channel", "occupied"])?;
        for (l, bits) in self.links.iter().enumerate() {
            for c in 0..self.num_channels {
                w.write_record([l.to_string(), c.to_string(), u8::from(bits.get(c)).to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<occupancy csv>", e))?;
        Ok(())
    }
}

/// Greedy first fit inside `channels`: scans in ascending index, takes each
/// channel that is free along the route and has a positive rate, and stops
/// as soon as the summed rates cover `demand_gbps`.
///
/// `route_busy` is the route-level occupancy (see
/// [`SpectrumState::route_occupancy`]) and `rates_gbps[c]` the highest rate
/// channel `c` supports on this route.
pub fn first_fit(route_busy: &ChannelBits, rates_gbps: &[u32], channels: Range<usize>, demand_gbps: u32) -> Option<Vec<usize>> {
    if demand_gbps == 0 {
        return None;
    }
    let mut picked = Vec::new();
    let mut total = 0u32;
    for c in channels {
        if route_busy.get(c) || rates_gbps[c] == 0 {
            continue;
        }
        picked.push(c);
        total += rates_gbps[c];
        if total >= demand_gbps {
            return Some(picked);
        }
    }
    None
}

/// First-fit candidate set for `route` in band `band_idx`.
pub fn first_fit_candidates(
    state: &SpectrumState,
    plan: &BandPlan,
    route: &Route,
    band_idx: usize,
    demand_gbps: u32,
    rates_gbps: &[u32],
) -> Result<Option<Vec<usize>>> {
    if band_idx >= plan.num_bands() {
        return Err(Error::UnknownBand(format!("#{band_idx}")));
    }
    if demand_gbps == 0 {
        return Err(Error::InvalidArgument("demand must be positive".into()));
    }
    let busy = state.route_occupancy(&route.links);
    Ok(first_fit(&busy, rates_gbps, plan.band_range(band_idx), demand_gbps))
}

/// Links touching a node of `route` without being part of it.
pub fn adjacent_links(topo: &NetworkTopology, route: &Route) -> Vec<usize> {
    let mut out: Vec<usize> = route
        .nodes
        .iter()
        .flat_map(|&n| topo.neighbors(n).iter().map(|&(_, l)| l))
        .filter(|l| !route.links.contains(l))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Number of free (adjacent link, channel) pairs over `channels`.
pub fn adjacent_free_spectrum(topo: &NetworkTopology, state: &SpectrumState, route: &Route, channels: &[usize]) -> usize {
    adjacent_links(topo, route)
        .iter()
        .map(|&l| channels.iter().filter(|&&c| state.is_free(l, c)).count())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::k_shortest_paths;

    fn line(n: usize) -> NetworkTopology {
        let links: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 50.0)).collect();
        NetworkTopology::new(n, &links, 80.0).unwrap()
    }

    #[test]
    fn standard_plan_layout() {
        let p = BandPlan::standard();
        assert_eq!(p.num_channels(), 268);
        assert_eq!(p.num_bands(), 3);
        assert_eq!(p.band_range(1), 80..160);
        assert!((p.center_thz(80) - 191.7).abs() < 1e-12);
        for c in 1..268 {
            assert!(p.center_thz(c) > p.center_thz(c - 1));
        }
        // L top edge to C bottom edge is exactly the gap
        let w = 0.075 / 2.0;
        let gap = (p.center_thz(80) - w) - (p.center_thz(79) + w);
        assert!((gap - 0.4).abs() < 1e-9);
        let span = (p.center_thz(267) + w) - (p.center_thz(0) - w);
        assert!((span - (268.0 * 0.075 + 2.0 * 0.4)).abs() < 1e-9);
        assert_eq!(p.band_of(0), 0);
        assert_eq!(p.band_of(159), 1);
        assert_eq!(p.band_of(160), 2);
    }

    #[test]
    fn plan_rejects_bad_bands() {
        assert!(BandPlan::new(vec![], 75.0, 400.0, 191.7).is_err());
        assert!(BandPlan::new(vec![(Band::C, 10), (Band::L, 10)], 75.0, 400.0, 191.7).is_err());
        assert!(BandPlan::new(vec![(Band::C, 0)], 75.0, 400.0, 191.7).is_err());
    }

    #[test]
    fn first_fit_on_empty_grid_takes_lowest() {
        let plan = BandPlan::standard();
        let topo = line(3);
        let route = k_shortest_paths(&topo, 0, 2, 1).unwrap().remove(0);
        let state = SpectrumState::new(topo.num_links(), plan.num_channels());
        let rates = vec![100; plan.num_channels()];
        for b in 0..3 {
            let got = first_fit_candidates(&state, &plan, &route, b, 100, &rates).unwrap();
            assert_eq!(got, Some(vec![plan.band_range(b).start]));
        }
    }

    #[test]
    fn first_fit_skips_busy_channels() {
        let plan = BandPlan::new(vec![(Band::C, 8)], 75.0, 400.0, 191.7).unwrap();
        let topo = line(3);
        let route = k_shortest_paths(&topo, 0, 2, 1).unwrap().remove(0);
        let mut state = SpectrumState::new(topo.num_links(), 8);
        let one_link = k_shortest_paths(&topo, 1, 2, 1).unwrap().remove(0);
        state.allocate(&one_link, &[0, 1], &[100, 100], 1.0).unwrap();
        let rates = vec![100; 8];
        let got = first_fit_candidates(&state, &plan, &route, 0, 200, &rates).unwrap();
        assert_eq!(got, Some(vec![2, 3]));
    }

    #[test]
    fn first_fit_full_band_is_none() {
        let plan = BandPlan::new(vec![(Band::C, 4)], 75.0, 400.0, 191.7).unwrap();
        let topo = line(2);
        let route = k_shortest_paths(&topo, 0, 1, 1).unwrap().remove(0);
        let mut state = SpectrumState::new(1, 4);
        state.allocate(&route, &[0, 1, 2, 3], &[100; 4], 1.0).unwrap();
        assert_eq!(first_fit_candidates(&state, &plan, &route, 0, 100, &[100; 4]).unwrap(), None);
        assert!(first_fit_candidates(&state, &plan, &route, 3, 100, &[100; 4]).is_err());
    }

    #[test]
    fn allocate_release_roundtrip() {
        let topo = line(4);
        let route = k_shortest_paths(&topo, 0, 3, 1).unwrap().remove(0);
        let mut state = SpectrumState::new(topo.num_links(), 268);
        let before = state.links.clone();
        let id = state.allocate(&route, &[5, 9], &[200, 300], 2.0).unwrap();
        assert_eq!(state.total_occupied(), 6);
        state.release(id).unwrap();
        assert_eq!(state.links, before);
        assert!(matches!(state.release(id), Err(Error::UnknownLightpath(_))));
    }

    #[test]
    fn continuity_is_per_route() {
        let topo = line(4);
        let a = k_shortest_paths(&topo, 0, 1, 1).unwrap().remove(0);
        let b = k_shortest_paths(&topo, 2, 3, 1).unwrap().remove(0);
        let c = k_shortest_paths(&topo, 0, 2, 1).unwrap().remove(0);
        let mut state = SpectrumState::new(topo.num_links(), 16);
        state.allocate(&a, &[3], &[100], 1.0).unwrap();
        state.allocate(&b, &[3], &[100], 1.0).unwrap();
        assert!(matches!(
            state.allocate(&c, &[3], &[100], 1.0),
            Err(Error::DoubleAllocation { link: 0, channel: 3 })
        ));
        assert_eq!(state.total_occupied(), 2);
    }

    #[test]
    fn adjacent_free_counts() {
        // 0-1-2 path plus a spur 1-3
        let topo = NetworkTopology::new(4, &[(0, 1, 10.0), (1, 2, 10.0), (1, 3, 10.0)], 80.0).unwrap();
        let route = k_shortest_paths(&topo, 0, 2, 1).unwrap().remove(0);
        let mut state = SpectrumState::new(3, 16);
        assert_eq!(adjacent_links(&topo, &route), vec![2]);
        assert_eq!(adjacent_free_spectrum(&topo, &state, &route, &[4, 5]), 2);
        let spur = k_shortest_paths(&topo, 1, 3, 1).unwrap().remove(0);
        state.allocate(&spur, &[5], &[100], 1.0).unwrap();
        assert_eq!(adjacent_free_spectrum(&topo, &state, &route, &[4, 5]), 1);

        let isolated = NetworkTopology::new(2, &[(0, 1, 10.0)], 80.0).unwrap();
        let r = k_shortest_paths(&isolated, 0, 1, 1).unwrap().remove(0);
        let s = SpectrumState::new(1, 16);
        assert_eq!(adjacent_free_spectrum(&isolated, &s, &r, &[0, 1]), 0);
    }

    #[test]
    fn release_expired_frees_only_due() {
        let topo = line(3);
        let r = k_shortest_paths(&topo, 0, 2, 1).unwrap().remove(0);
        let mut state = SpectrumState::new(2, 8);
        state.allocate(&r, &[0], &[100], 1.0).unwrap();
        state.allocate(&r, &[1], &[100], 3.0).unwrap();
        assert_eq!(state.release_expired(2.0), 1);
        assert_eq!(state.total_occupied(), 2);
        assert!(state.is_free(0, 0));
        assert!(!state.is_free(0, 1));
    }
}
