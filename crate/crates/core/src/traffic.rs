//! Poisson request generation.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BITRATES: [u32; 6] = [100, 200, 300, 400, 500, 600];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(rename = "src")]
    pub source: usize,
    #[serde(rename = "dst")]
    pub destination: usize,
    #[serde(rename = "bitrate")]
    pub bitrate_gbps: u32,
    #[serde(rename = "arrival")]
    pub arrival_s: f64,
    #[serde(rename = "holding")]
    pub holding_s: f64,
}

impl Request {
    pub fn departure_s(&self) -> f64 {
        self.arrival_s + self.holding_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficParams {
    pub load_erlang: f64,
    pub mean_holding_s: f64,
    pub bitrates_gbps: Vec<u32>,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            load_erlang: 800.0,
            mean_holding_s: 1.0,
            bitrates_gbps: DEFAULT_BITRATES.to_vec(),
        }
    }
}

impl TrafficParams {
    pub fn arrival_rate(&self) -> f64 {
        self.load_erlang / self.mean_holding_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.load_erlang > 0.0) || !self.load_erlang.is_finite() {
            return Err(Error::Config(format!("load {} Erlang must be positive", self.load_erlang)));
        }
        if !(self.mean_holding_s > 0.0) || !self.mean_holding_s.is_finite() {
            return Err(Error::Config("mean holding time must be positive".into()));
        }
        if self.bitrates_gbps.is_empty() {
            return Err(Error::Config("bit-rate set is empty".into()));
        }
        if self.bitrates_gbps.contains(&0) {
            return Err(Error::Config("bit rates must be positive".into()));
        }
        Ok(())
    }
}

/// Draws `n_requests` arrivals: exponential inter-arrival times with rate
/// `load / mean_holding`, exponential holding times, uniform ordered
/// (source, destination) pairs and uniform bit rates.
pub fn generate_requests(seed: u64, num_nodes: usize, traffic: &TrafficParams, n_requests: usize) -> Result<Vec<Request>> {
    traffic.validate()?;
    if n_requests == 0 {
        return Err(Error::Config("need at least one request".into()));
    }
    if num_nodes < 2 {
        return Err(Error::Config("need at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inter = Exp::new(traffic.arrival_rate()).map_err(|e| Error::Config(e.to_string()))?;
    let hold = Exp::new(1.0 / traffic.mean_holding_s).map_err(|e| Error::Config(e.to_string()))?;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(n_requests);
    for id in 0..n_requests as u64 {
        let mut dt: f64 = inter.sample(&mut rng);
        // keep arrivals strictly increasing
        while dt <= 0.0 {
            dt = inter.sample(&mut rng);
        }
        t += dt;
        let source = rng.gen_range(0..num_nodes);
        let mut destination = rng.gen_range(0..num_nodes - 1);
        if destination >= source {
            destination += 1;
        }
        let bitrate_gbps = traffic.bitrates_gbps[rng.gen_range(0..traffic.bitrates_gbps.len())];
        let mut holding_s: f64 = hold.sample(&mut rng);
        while holding_s <= 0.0 {
            holding_s = hold.sample(&mut rng);
        }
        out.push(Request {
            id,
            source,
            destination,
            bitrate_gbps,
            arrival_s: t,
            holding_s,
        });
    }
    Ok(out)
}

/// `id,src,dst,bitrate,arrival,holding`
pub fn write_requests_csv<W: Write>(requests: &[Request], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in requests {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<request csv>", e))?;
    Ok(())
}

pub fn read_requests_csv<R: Read>(input: R) -> Result<Vec<Request>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut out = Vec::new();
    for r in rdr.deserialize::<Request>() {
        let r = r?;
        if r.source == r.destination || r.bitrate_gbps == 0 || !(r.holding_s > 0.0) {
            return Err(Error::Config(format!("invalid request {}", r.id)));
        }
        out.push(r);
    }
    Ok(out)
}
