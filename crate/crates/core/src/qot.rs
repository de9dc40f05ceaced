//! Lightpath GSNR estimation, modulation thresholds and the precomputed
//! connection QoT database.
//!
//! The GSNR of channel `i` on a lightpath combines three inverse-SNR terms
//! and two dB penalties:
//!
//! ```text
//! GSNR_dB = 10 log10( 1 / (sigma_ase + sigma_nli + 1/snr_trx) ) - penalty_flt_dB - margin_aging_dB
//! sigma_ase = sum over spans of  n_F h f (G - 1) R_ch / P_tx,   G = span loss
//! ```
//!
//! Nonlinear interference is pluggable through [`NliModel`]; the default
//! [`IncoherentGn`] model accumulates `eta_band * P_tx^2` per span.

use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{Band, BandPlan};
use crate::topology::{NetworkTopology, Route, RouteTable};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const DEFAULT_TARGET_BER: f64 = 1.5e-2;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

/// Amplifier and fiber parameters of one band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPhysics {
    pub noise_figure_db: f64,
    pub attenuation_db_per_km: f64,
    /// Incoherent-GN coefficient in 1/W^2: per-span NLI-to-signal ratio is `eta * P_tx^2`.
    pub nli_eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyModel {
    /// Every channel uses its band's center frequency, so GSNR is flat within a band.
    #[default]
    BandCenter,
    /// Every channel uses its own center frequency.
    PerChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalParams {
    pub l_band: BandPhysics,
    pub c_band: BandPhysics,
    pub s_band: BandPhysics,
    pub launch_power_dbm: f64,
    pub symbol_rate_gbaud: f64,
    pub trx_snr_db: f64,
    pub filtering_penalty_db: f64,
    pub aging_margin_db: f64,
    pub frequency_model: FrequencyModel,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            l_band: BandPhysics {
                noise_figure_db: 5.0,
                attenuation_db_per_km: 0.22,
                nli_eta: 400.0,
            },
            c_band: BandPhysics {
                noise_figure_db: 4.5,
                attenuation_db_per_km: 0.20,
                nli_eta: 450.0,
            },
            s_band: BandPhysics {
                noise_figure_db: 6.0,
                attenuation_db_per_km: 0.21,
                nli_eta: 550.0,
            },
            launch_power_dbm: 0.0,
            symbol_rate_gbaud: 64.0,
            trx_snr_db: 20.0,
            filtering_penalty_db: 1.0,
            aging_margin_db: 1.0,
            frequency_model: FrequencyModel::BandCenter,
        }
    }
}

impl PhysicalParams {
    pub fn band(&self, band: Band) -> &BandPhysics {
        match band {
            Band::L => &self.l_band,
            Band::C => &self.c_band,
            Band::S => &self.s_band,
        }
    }

    pub fn band_mut(&mut self, band: Band) -> &mut BandPhysics {
        match band {
            Band::L => &mut self.l_band,
            Band::C => &mut self.c_band,
            Band::S => &mut self.s_band,
        }
    }

    pub fn launch_power_w(&self) -> f64 {
        dbm_to_watt(self.launch_power_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        for b in Band::ALL {
            let p = self.band(b);
            if !(p.noise_figure_db >= 3.0) {
                return Err(Error::Config(format!("{b}-band noise figure {} dB is below 3 dB", p.noise_figure_db)));
            }
            if !(p.attenuation_db_per_km > 0.0) {
                return Err(Error::Config(format!("{b}-band attenuation must be positive")));
            }
            if !(p.nli_eta >= 0.0) {
                return Err(Error::Config(format!("{b}-band NLI coefficient must be non-negative")));
            }
        }
        if !(self.symbol_rate_gbaud > 0.0) {
            return Err(Error::Config("symbol rate must be positive".into()));
        }
        if !self.launch_power_dbm.is_finite() || !self.trx_snr_db.is_finite() {
            return Err(Error::Config("launch power and transceiver SNR must be finite".into()));
        }
        Ok(())
    }
}

/// Nonlinear-interference contribution to the inverse SNR of a lightpath.
pub trait NliModel: Send + Sync + std::fmt::Debug {
    fn nli_sigma(&self, spans_km: &[f64], band: Band, freq_thz: f64, params: &PhysicalParams) -> f64;
}

/// Incoherent GN accumulation: every span adds `eta_band * P_tx^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IncoherentGn;

impl NliModel for IncoherentGn {
    fn nli_sigma(&self, spans_km: &[f64], band: Band, _freq_thz: f64, params: &PhysicalParams) -> f64 {
        let p = params.launch_power_w();
        spans_km.len() as f64 * params.band(band).nli_eta * p * p
    }
}

#[derive(Debug, Clone)]
pub struct QotEstimator {
    plan: BandPlan,
    params: PhysicalParams,
    nli: Arc<dyn NliModel>,
}

impl QotEstimator {
    pub fn new(plan: BandPlan, params: PhysicalParams) -> Self {
        QotEstimator::with_nli(plan, params, Arc::new(IncoherentGn))
    }

    pub fn with_nli(plan: BandPlan, params: PhysicalParams, nli: Arc<dyn NliModel>) -> Self {
        QotEstimator { plan, params, nli }
    }

    pub fn plan(&self) -> &BandPlan {
        &self.plan
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Frequency used for channel `channel` under the configured frequency model.
    pub fn channel_freq_thz(&self, channel: usize) -> f64 {
        match self.params.frequency_model {
            FrequencyModel::PerChannel => self.plan.center_thz(channel),
            FrequencyModel::BandCenter => self.plan.band_center_thz(self.plan.band_of(channel)),
        }
    }

    fn band_of(&self, channel: usize) -> Band {
        self.plan.band(self.plan.band_of(channel))
    }

    pub fn ase_sigma(&self, spans_km: &[f64], channel: usize) -> f64 {
        let band = self.params.band(self.band_of(channel));
        let nf = db_to_linear(band.noise_figure_db);
        let f_hz = self.channel_freq_thz(channel) * 1e12;
        let r_hz = self.params.symbol_rate_gbaud * 1e9;
        let p_tx = self.params.launch_power_w();
        spans_km
            .iter()
            .map(|&len| {
                let gain = db_to_linear(band.attenuation_db_per_km * len);
                nf * PLANCK * f_hz * (gain - 1.0) * r_hz / p_tx
            })
            .sum()
    }

    pub fn nli_sigma(&self, spans_km: &[f64], channel: usize) -> f64 {
        self.nli
            .nli_sigma(spans_km, self.band_of(channel), self.channel_freq_thz(channel), &self.params)
    }

    pub fn gsnr_db(&self, spans_km: &[f64], channel: usize) -> f64 {
        let inv = self.ase_sigma(spans_km, channel)
            + self.nli_sigma(spans_km, channel)
            + 1.0 / db_to_linear(self.params.trx_snr_db);
        linear_to_db(1.0 / inv) - self.params.filtering_penalty_db - self.params.aging_margin_db
    }

    pub fn route_gsnr_db(&self, topo: &NetworkTopology, route: &Route, channel: usize) -> f64 {
        self.gsnr_db(&topo.route_spans(route), channel)
    }
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationFormat {
    pub name: &'static str,
    pub bits_per_symbol: u32,
    pub threshold_db: f64,
    pub bitrate_gbps: u32,
}

impl ModulationFormat {
    /// Pre-FEC bit error rate at linear SNR `snr` (per symbol).
    ///
    /// BPSK uses the exact `Q(sqrt(2 snr))`; every other order uses the
    /// Gray-coded M-QAM expression `4/k (1 - 1/sqrt(M)) Q(sqrt(3 snr / (M - 1)))`,
    /// which is exact for QPSK and the usual nearest-neighbour approximation
    /// for the rest.
    pub fn ber(&self, snr: f64) -> f64 {
        ber_for_bits(self.bits_per_symbol, snr)
    }
}

fn ber_for_bits(bits: u32, snr: f64) -> f64 {
    if bits == 1 {
        return q_function((2.0 * snr).sqrt());
    }
    let m = f64::from(1u32 << bits);
    let k = f64::from(bits);
    4.0 / k * (1.0 - 1.0 / m.sqrt()) * q_function((3.0 * snr / (m - 1.0)).sqrt())
}

const BISECTION_MAX_ITER: usize = 100;

/// SNR in dB at which a `bits_per_symbol` constellation reaches `target_ber`.
pub fn required_snr_for_ber(bits_per_symbol: u32, target_ber: f64) -> Result<f64> {
    if !(target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::InvalidArgument(format!("target BER {target_ber} outside (0, 0.5)")));
    }
    if !(1..=6).contains(&bits_per_symbol) {
        return Err(Error::InvalidArgument(format!("{bits_per_symbol} bits/symbol not supported")));
    }
    let f = |db: f64| ber_for_bits(bits_per_symbol, db_to_linear(db)) - target_ber;
    let (mut lo, mut hi) = (-30.0, 60.0);
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::NoConvergence(0));
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::NoConvergence(BISECTION_MAX_ITER))
}

const FORMATS: [(&str, u32); 6] = [
    ("PM-BPSK", 1),
    ("PM-QPSK", 2),
    ("PM-8QAM", 3),
    ("PM-16QAM", 4),
    ("PM-32QAM", 5),
    ("PM-64QAM", 6),
];

/// Six dual-polarization formats, 100 Gb/s per bit/symbol at 64 GBd.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationTable {
    formats: Vec<ModulationFormat>,
}

impl ModulationTable {
    pub fn derive(target_ber: f64) -> Result<Self> {
        let formats = FORMATS
            .iter()
            .map(|&(name, bits)| {
                Ok(ModulationFormat {
                    name,
                    bits_per_symbol: bits,
                    threshold_db: required_snr_for_ber(bits, target_ber)?,
                    bitrate_gbps: 100 * bits,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModulationTable { formats })
    }

    pub fn standard() -> Self {
        ModulationTable::derive(DEFAULT_TARGET_BER).expect("thresholds converge at the default BER")
    }

    pub fn formats(&self) -> &[ModulationFormat] {
        &self.formats
    }

    pub fn get(&self, idx: usize) -> &ModulationFormat {
        &self.formats[idx]
    }

    pub fn by_name(&self, name: &str) -> Option<usize> {
        self.formats.iter().position(|f| f.name == name)
    }

    /// Highest format whose threshold does not exceed `gsnr_db`.
    pub fn best_format(&self, gsnr_db: f64) -> Option<usize> {
        self.formats.iter().rposition(|f| f.threshold_db <= gsnr_db)
    }

    pub fn max_bitrate(&self) -> u32 {
        self.formats.last().map(|f| f.bitrate_gbps).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QotEntry {
    pub gsnr_db: f64,
    pub format: Option<usize>,
    pub bitrate_gbps: u32,
}

/// GSNR and best modulation for every (ordered node pair, candidate route, channel).
#[derive(Debug, Clone)]
pub struct QotDatabase {
    routes: RouteTable,
    table: ModulationTable,
    num_channels: usize,
    // pair -> flat [route * num_channels + channel]
    entries: Vec<Vec<QotEntry>>,
    rates: Vec<Vec<u32>>,
}

impl QotDatabase {
    pub fn build(topo: &NetworkTopology, estimator: &QotEstimator, table: ModulationTable, k: usize) -> Result<Self> {
        let routes = RouteTable::build(topo, k)?;
        let n = topo.num_nodes();
        let num_channels = estimator.plan().num_channels();
        let entries: Vec<Vec<QotEntry>> = (0..n * n)
            .into_par_iter()
            .map(|pair| {
                let (s, d) = (pair / n, pair % n);
                let mut out = Vec::new();
                for route in routes.routes(s, d) {
                    let spans = topo.route_spans(route);
                    for ch in 0..num_channels {
                        let gsnr_db = estimator.gsnr_db(&spans, ch);
                        out.push(entry_for(&table, gsnr_db));
                    }
                }
                out
            })
            .collect();
        Ok(QotDatabase::from_entries(routes, table, num_channels, entries))
    }

    fn from_entries(routes: RouteTable, table: ModulationTable, num_channels: usize, entries: Vec<Vec<QotEntry>>) -> Self {
        let rates = entries
            .iter()
            .map(|v| v.iter().map(|e| e.bitrate_gbps).collect())
            .collect();
        QotDatabase {
            routes,
            table,
            num_channels,
            entries,
            rates,
        }
    }

    pub fn routes(&self, src: usize, dst: usize) -> &[Route] {
        self.routes.routes(src, dst)
    }

    pub fn route_table(&self) -> &RouteTable {
        &self.routes
    }

    pub fn k(&self) -> usize {
        self.routes.k()
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn modulation(&self) -> &ModulationTable {
        &self.table
    }

    fn pair(&self, src: usize, dst: usize) -> usize {
        src * self.routes.num_nodes() + dst
    }

    /// Per-channel max bit rate on route `route_idx` of `(src, dst)`.
    pub fn rates(&self, src: usize, dst: usize, route_idx: usize) -> &[u32] {
        let c = self.num_channels;
        &self.rates[self.pair(src, dst)][route_idx * c..(route_idx + 1) * c]
    }

    pub fn entry(&self, src: usize, dst: usize, route_idx: usize, channel: usize) -> &QotEntry {
        &self.entries[self.pair(src, dst)][route_idx * self.num_channels + channel]
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `src,dst,route_idx,channel,gsnr_db,format,bitrate_gbps`; format is `none` below threshold.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src", "dst", "route_idx", "channel", "gsnr_db", "format", "bitrate_gbps"])?;
        let n = self.routes.num_nodes();
        for s in 0..n {
            for d in 0..n {
                for r in 0..self.routes(s, d).len() {
                    for ch in 0..self.num_channels {
                        let e = self.entry(s, d, r, ch);
                        let fmt = e.format.map(|f| self.table.get(f).name).unwrap_or("none");
                        w.write_record([
                            s.to_string(),
                            d.to_string(),
                            r.to_string(),
                            ch.to_string(),
                            e.gsnr_db.to_string(),
                            fmt.to_string(),
                            e.bitrate_gbps.to_string(),
                        ])?;
                    }
                }
            }
        }
        w.flush().map_err(|e| Error::io("<qot csv>", e))?;
        Ok(())
    }

    /// Loads a database written by [`write_csv`](Self::write_csv). Routes are
    /// recomputed from `topo` and must match the row layout. Lines starting
    /// with `#` are skipped.
    pub fn read_csv<R: Read>(input: R, topo: &NetworkTopology, table: ModulationTable, k: usize, num_channels: usize) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            src: usize,
            dst: usize,
            route_idx: usize,
            channel: usize,
            gsnr_db: f64,
            format: String,
            bitrate_gbps: u32,
        }
        let routes = RouteTable::build(topo, k)?;
        let n = topo.num_nodes();
        let mut entries: Vec<Vec<Option<QotEntry>>> = (0..n * n)
            .map(|p| vec![None; routes.routes(p / n, p % n).len() * num_channels])
            .collect();
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            let bad = |m: &str| Error::Config(format!("qot database row {}-{}/{}/{}: {m}", row.src, row.dst, row.route_idx, row.channel));
            if row.src >= n || row.dst >= n || row.channel >= num_channels {
                return Err(bad("index out of range"));
            }
            let slot = entries[row.src * n + row.dst]
                .get_mut(row.route_idx * num_channels + row.channel)
                .ok_or_else(|| bad("route index out of range"))?;
            let format = match row.format.as_str() {
                "none" => None,
                name => Some(table.by_name(name).ok_or_else(|| bad("unknown format"))?),
            };
            *slot = Some(QotEntry {
                gsnr_db: row.gsnr_db,
                format,
                bitrate_gbps: row.bitrate_gbps,
            });
        }
        let entries = entries
            .into_iter()
            .map(|v| v.into_iter().collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Config("qot database is missing entries".into()))?;
        Ok(QotDatabase::from_entries(routes, table, num_channels, entries))
    }
}

fn entry_for(table: &ModulationTable, gsnr_db: f64) -> QotEntry {
    let format = table.best_format(gsnr_db);
    QotEntry {
        gsnr_db,
        format,
        bitrate_gbps: format.map(|f| table.get(f).bitrate_gbps).unwrap_or(0),
    }
}
