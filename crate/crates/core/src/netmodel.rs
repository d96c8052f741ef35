//! CAM traffic from airborne drones to the truck over abstract MAC models.
//!
//! Each model reduces a medium-access scheme to the parts that shape latency
//! and loss: grant and backhaul delays for the centralized cell, contention
//! and deferral for CSMA, slot reservations for semi-persistent scheduling.
//! Radio loss comes from a log-distance path loss mapped through a logistic
//! curve, with the exponent picked by building line of sight.
//!
//! Channel draws and MAC decisions use separate random streams, so changing
//! the channel never reshuffles who transmits when.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, SimRng};
use crate::scenario::{Point, Scenario};
use crate::simcore::{DeliveryTrace, VehicleId};

pub const CAM_PERIOD_MS: f64 = 100.0;
pub const CAM_SIZE_BYTES: u32 = 190;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CamMessage {
    pub seq: u32,
    pub sender: VehicleId,
    #[serde(rename = "gen_time_s")]
    pub generated_at: f64,
    pub size: u32,
    pub delivered: bool,
    pub latency_ms: Option<f64>,
    /// Line of sight on the first radio hop.
    pub los: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub exponent_los: f64,
    pub exponent_nlos: f64,
    pub ref_loss_db: f64,
    pub tx_power_dbm: f64,
    pub loss_threshold_db: f64,
    pub logistic_width_db: f64,
    pub sense_range_m: f64,
    /// Height of ground-vehicle antennas.
    pub antenna_height_m: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            exponent_los: 2.0,
            exponent_nlos: 3.2,
            ref_loss_db: 47.0,
            tx_power_dbm: 23.0,
            loss_threshold_db: 125.0,
            logistic_width_db: 4.0,
            sense_range_m: 800.0,
            antenna_height_m: 1.5,
        }
    }
}

impl ChannelConfig {
    /// Every link succeeds.
    pub fn ideal() -> Self {
        Self {
            loss_threshold_db: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if !(self.exponent_los > 0.0) || !(self.exponent_nlos >= self.exponent_los) {
            return bad("path loss exponents must satisfy 0 < LOS <= NLOS");
        }
        if !(self.logistic_width_db > 0.0) {
            return bad("logistic width must be positive");
        }
        if !(self.sense_range_m > 0.0) || !(self.antenna_height_m >= 0.0) {
            return bad("sense range must be positive and antenna height non-negative");
        }
        if self.ref_loss_db.is_nan() || self.loss_threshold_db.is_nan() || !self.tx_power_dbm.is_finite() {
            return bad("channel levels must be numbers");
        }
        Ok(())
    }
}

/// Probability that a single transmission from `a` reaches `b`.
pub fn link_success_probability(cfg: &ChannelConfig, a: Point, b: Point, los: bool) -> f64 {
    let d = a.distance(&b);
    if d == 0.0 {
        return 1.0;
    }
    let n = if los { cfg.exponent_los } else { cfg.exponent_nlos };
    let pl = cfg.ref_loss_db + 10.0 * n * d.log10();
    1.0 / (1.0 + ((pl - cfg.loss_threshold_db) / cfg.logistic_width_db).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum MacModel {
    /// Uplink to the base station, backhaul, downlink to the truck.
    Centralized {
        grant_period_ms: f64,
        processing_ms: f64,
        backhaul_ms: f64,
        airtime_ms: f64,
    },
    Csma {
        slot_us: f64,
        aifs_us: f64,
        contention_window: u32,
        airtime_ms: f64,
    },
    Sps {
        slots: u32,
        slot_ms: f64,
        airtime_ms: f64,
        keep_min: u32,
        keep_max: u32,
        reselect_prob: f64,
    },
}

impl MacModel {
    pub fn centralized() -> Self {
        MacModel::Centralized {
            grant_period_ms: 10.0,
            processing_ms: 4.0,
            backhaul_ms: 10.0,
            airtime_ms: 1.0,
        }
    }

    pub fn csma() -> Self {
        MacModel::Csma {
            slot_us: 13.0,
            aifs_us: 58.0,
            contention_window: 15,
            airtime_ms: 0.5,
        }
    }

    pub fn sps() -> Self {
        MacModel::Sps {
            slots: 100,
            slot_ms: 1.0,
            airtime_ms: 1.0,
            keep_min: 5,
            keep_max: 15,
            reselect_prob: 0.8,
        }
    }

    pub fn all() -> [MacModel; 3] {
        [Self::centralized(), Self::csma(), Self::sps()]
    }

    pub fn name(&self) -> &'static str {
        match self {
            MacModel::Centralized { .. } => "centralized",
            MacModel::Csma { .. } => "csma",
            MacModel::Sps { .. } => "sps",
        }
    }

    pub fn airtime_ms(&self) -> f64 {
        match *self {
            MacModel::Centralized { airtime_ms, .. }
            | MacModel::Csma { airtime_ms, .. }
            | MacModel::Sps { airtime_ms, .. } => airtime_ms,
        }
    }

    pub fn validate(&self, period_ms: f64) -> Result<()> {
        let ok = match *self {
            MacModel::Centralized {
                grant_period_ms,
                processing_ms,
                backhaul_ms,
                airtime_ms,
            } => grant_period_ms >= 0.0 && processing_ms >= 0.0 && backhaul_ms >= 0.0 && airtime_ms > 0.0,
            MacModel::Csma {
                slot_us,
                aifs_us,
                airtime_ms,
                ..
            } => slot_us > 0.0 && aifs_us > 0.0 && airtime_ms > 0.0,
            MacModel::Sps {
                slots,
                slot_ms,
                airtime_ms,
                keep_min,
                keep_max,
                reselect_prob,
            } => {
                if (slots as f64 * slot_ms - period_ms).abs() > 1e-9 {
                    return Err(Error::Parameter(format!(
                        "{slots} slots of {slot_ms} ms do not fill a {period_ms} ms period"
                    )));
                }
                slots > 0
                    && airtime_ms > 0.0
                    && airtime_ms <= slot_ms
                    && keep_min > 0
                    && keep_min <= keep_max
                    && (0.0..=1.0).contains(&reselect_prob)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid {} parameters", self.name())))
        }
    }
}

impl fmt::Display for MacModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MacModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centralized" => Ok(Self::centralized()),
            "csma" => Ok(Self::csma()),
            "sps" => Ok(Self::sps()),
            _ => Err(Error::Parameter(format!("unknown MAC model `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CamTraffic {
    pub period_ms: f64,
    pub size_bytes: u32,
}

impl Default for CamTraffic {
    fn default() -> Self {
        Self {
            period_ms: CAM_PERIOD_MS,
            size_bytes: CAM_SIZE_BYTES,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub sent: usize,
    pub delivered: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetStats {
    pub model: String,
    pub messages: Vec<CamMessage>,
}

impl NetStats {
    pub fn sent(&self) -> usize {
        self.messages.len()
    }

    pub fn delivered(&self) -> usize {
        self.messages.iter().filter(|m| m.delivered).count()
    }

    /// Delivered over sent; 1 when nothing was sent.
    pub fn pdr(&self) -> f64 {
        if self.messages.is_empty() {
            1.0
        } else {
            self.delivered() as f64 / self.sent() as f64
        }
    }

    /// Latencies of delivered messages, ascending.
    pub fn latencies(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.messages.iter().filter_map(|m| m.latency_ms).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn latency_quantile(&self, q: f64) -> Option<f64> {
        quantile(&self.latencies(), q)
    }

    pub fn per_link(&self) -> BTreeMap<VehicleId, LinkStats> {
        let mut out: BTreeMap<VehicleId, LinkStats> = BTreeMap::new();
        for m in &self.messages {
            let e = out.entry(m.sender).or_default();
            e.sent += 1;
            e.delivered += m.delivered as usize;
        }
        out
    }

    /// Per-message CSV: `model,sender,seq,gen_time_s,delivered,latency_ms,los`.
    pub fn write_messages_csv(&self, mut w: impl Write, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "model,sender,seq,gen_time_s,delivered,latency_ms,los")?;
        }
        for m in &self.messages {
            let lat = m.latency_ms.map(|l| format!("{l:.6}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{:.6},{},{},{}",
                self.model, m.sender, m.seq, m.generated_at, m.delivered, lat, m.los
            )?;
        }
        Ok(())
    }
}

/// Linear interpolation between closest ranks on sorted samples.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64))
}

/// Summary CSV: `model,sent,delivered,pdr,lat_p50_ms,lat_p95_ms`.
pub fn write_summary_csv(stats: &[NetStats], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "model,sent,delivered,pdr,lat_p50_ms,lat_p95_ms")?;
    for s in stats {
        let q = |q| s.latency_quantile(q).map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{:.6},{},{}",
            s.model,
            s.sent(),
            s.delivered(),
            s.pdr(),
            q(0.5),
            q(0.95)
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequirementsProfile {
    pub cc_latency_bound_ms: f64,
    pub cc_rate_kbps: (f64, f64),
    pub cc_per: f64,
    pub pdr_target: f64,
    pub drone_delivery_latency_ms: f64,
    pub drone_delivery_rate_kbps: (f64, f64),
}

impl Default for RequirementsProfile {
    fn default() -> Self {
        Self {
            cc_latency_bound_ms: 50.0,
            cc_rate_kbps: (60.0, 100.0),
            cc_per: 1e-3,
            pdr_target: 0.99,
            drone_delivery_latency_ms: 500.0,
            drone_delivery_rate_kbps: (300.0, 200.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequirementsReport {
    pub model: String,
    pub p95_latency_ms: f64,
    pub pdr: f64,
    pub cc_latency_ok: bool,
    pub pdr_ok: bool,
    pub drone_delivery_latency_ok: bool,
}

impl RequirementsReport {
    pub fn all_ok(&self) -> bool {
        self.cc_latency_ok && self.pdr_ok && self.drone_delivery_latency_ok
    }
}

pub fn check_requirements(stats: &NetStats, profile: &RequirementsProfile) -> RequirementsReport {
    // nothing delivered counts as unbounded latency
    let p95 = stats.latency_quantile(0.95).unwrap_or(f64::INFINITY);
    let pdr = stats.pdr();
    RequirementsReport {
        model: stats.model.clone(),
        p95_latency_ms: p95,
        pdr,
        cc_latency_ok: p95 <= profile.cc_latency_bound_ms,
        pdr_ok: pdr >= profile.pdr_target,
        drone_delivery_latency_ok: p95 <= profile.drone_delivery_latency_ms,
    }
}

/// A generated CAM before the MAC decides its fate.
struct Tx {
    drone: u32,
    seq: u32,
    gen: f64,
    pos: Point,
    truck: Point,
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    cfg: &'a ChannelConfig,
    seed: u64,
}

impl Ctx<'_> {
    fn lift(&self, p: Point) -> Point {
        p.with_z(p.z.max(self.cfg.antenna_height_m))
    }

    /// One radio hop: (line of sight, success).
    fn hop(&self, from: Point, to: Point, u: f64) -> (bool, bool) {
        let los = !self.scenario.los_blocked(from, to);
        (los, u < link_success_probability(self.cfg, from, to, los))
    }

    fn channel_rng(&self, drone: u32) -> SimRng {
        substream(self.seed, &[1, drone as u64])
    }
}

fn generate(trace: &DeliveryTrace, ctx: &Ctx<'_>, drone: u32, phase_s: f64, period_s: f64) -> Vec<Tx> {
    let tr = &trace.trajectories;
    let mut out = Vec::new();
    let Some(flights) = tr.flights.get(&drone) else {
        return out;
    };
    let mut seq = 0;
    for f in flights {
        let first = ((f.start() - phase_s) / period_s).ceil().max(0.0) as u64;
        let mut k = first;
        loop {
            let t = phase_s + k as f64 * period_s;
            if t > f.end() {
                break;
            }
            if t >= f.start() {
                out.push(Tx {
                    drone,
                    seq,
                    gen: t,
                    pos: ctx.lift(f.at(t)),
                    truck: ctx.lift(tr.truck.at(t)),
                });
                seq += 1;
            }
            k += 1;
        }
    }
    out
}

/// Plays periodic CAMs from every airborne drone to the truck through `mac`.
///
/// Drones riding the truck are collocated with the receiver and do not
/// contribute traffic.
pub fn run_cam_traffic(
    trace: &DeliveryTrace,
    scenario: &Scenario,
    mac: &MacModel,
    cfg: &ChannelConfig,
    traffic: &CamTraffic,
    seed: u64,
) -> Result<NetStats> {
    cfg.validate()?;
    if !(traffic.period_ms > 0.0) || traffic.size_bytes == 0 {
        return Err(Error::Parameter("CAM period and size must be positive".into()));
    }
    mac.validate(traffic.period_ms)?;
    let ctx = Ctx { scenario, cfg, seed };
    let period_s = traffic.period_ms / 1000.0;
    let drones = trace.trajectories.drone_count;
    let mut mac_rng = substream(seed, &[0]);
    let messages = match *mac {
        MacModel::Centralized {
            grant_period_ms,
            processing_ms,
            backhaul_ms,
            airtime_ms,
        } => {
            let bs = scenario.base_station;
            let mut out = Vec::new();
            for d in 0..drones {
                let phase = mac_rng.random::<f64>() * period_s;
                let mut ch = ctx.channel_rng(d);
                for tx in generate(trace, &ctx, d, phase, period_s) {
                    let grant = mac_rng.random::<f64>() * grant_period_ms;
                    let (u1, u2): (f64, f64) = (ch.random(), ch.random());
                    let (los, up) = ctx.hop(tx.pos, bs, u1);
                    let (_, down) = ctx.hop(bs, tx.truck, u2);
                    let delivered = up && down;
                    let lat = grant + 2.0 * processing_ms + backhaul_ms + 2.0 * airtime_ms;
                    out.push(message(&tx, traffic, delivered, lat, los));
                }
            }
            out
        }
        MacModel::Csma {
            slot_us,
            aifs_us,
            contention_window,
            airtime_ms,
        } => csma(trace, &ctx, &mut mac_rng, traffic, period_s, slot_us, aifs_us, contention_window, airtime_ms),
        MacModel::Sps {
            slots,
            slot_ms,
            airtime_ms,
            keep_min,
            keep_max,
            reselect_prob,
        } => {
            let p = SpsParams {
                slots,
                slot_s: slot_ms / 1000.0,
                airtime_ms,
                keep: (keep_min, keep_max),
                reselect_prob,
            };
            sps(trace, &ctx, &mut mac_rng, traffic, period_s, &p)
        }
    };
    let mut messages = messages;
    messages.sort_by(|a, b| a.generated_at.total_cmp(&b.generated_at).then(a.sender.cmp(&b.sender)));
    Ok(NetStats {
        model: mac.name().to_string(),
        messages,
    })
}

fn message(tx: &Tx, traffic: &CamTraffic, delivered: bool, latency_ms: f64, los: bool) -> CamMessage {
    CamMessage {
        seq: tx.seq,
        sender: VehicleId::Drone(tx.drone),
        generated_at: tx.gen,
        size: traffic.size_bytes,
        delivered,
        latency_ms: delivered.then_some(latency_ms),
        los,
    }
}

#[allow(clippy::too_many_arguments)]
fn csma(
    trace: &DeliveryTrace,
    ctx: &Ctx<'_>,
    rng: &mut SimRng,
    traffic: &CamTraffic,
    period_s: f64,
    slot_us: f64,
    aifs_us: f64,
    cw: u32,
    airtime_ms: f64,
) -> Vec<CamMessage> {
    let mut txs = Vec::new();
    for d in 0..trace.trajectories.drone_count {
        let phase = rng.random::<f64>() * period_s;
        txs.extend(generate(trace, ctx, d, phase, period_s));
    }
    txs.sort_by(|a, b| a.gen.total_cmp(&b.gen).then(a.drone.cmp(&b.drone)));
    let airtime = airtime_ms / 1000.0;
    let backoff = |rng: &mut SimRng| (aifs_us + rng.random_range(0..=cw) as f64 * slot_us) * 1e-6;
    let range = ctx.cfg.sense_range_m;

    // (start, end, index into txs); kept sorted by start
    let mut on_air: Vec<(f64, f64, usize)> = Vec::new();
    for (i, tx) in txs.iter().enumerate() {
        let mut start = tx.gen + backoff(rng);
        // defer while a sender within sensing range holds the medium
        while let Some(end) = on_air
            .iter()
            .rev()
            .take_while(|(_, e, _)| *e > start - 2.0 * period_s)
            .filter(|(s, e, j)| *s <= start && start < *e && txs[*j].pos.distance(&tx.pos) <= range)
            .map(|(_, e, _)| *e)
            .reduce(f64::max)
        {
            start = end + backoff(rng);
        }
        let at = on_air.partition_point(|(s, _, _)| *s <= start);
        on_air.insert(at, (start, start + airtime, i));
    }

    let mut collided = vec![false; txs.len()];
    let audible = |j: usize| txs[j].pos.distance(&txs[j].truck) <= range;
    for (a, &(s, e, i)) in on_air.iter().enumerate() {
        for &(s2, _, j) in &on_air[a + 1..] {
            if s2 >= e {
                break;
            }
            debug_assert!(s2 >= s);
            if audible(i) && audible(j) {
                collided[i] = true;
                collided[j] = true;
            }
        }
    }

    let mut chans: BTreeMap<u32, SimRng> = BTreeMap::new();
    let mut out = Vec::with_capacity(txs.len());
    for &(_, end, i) in &on_air {
        let tx = &txs[i];
        let u: f64 = chans.entry(tx.drone).or_insert_with(|| ctx.channel_rng(tx.drone)).random();
        let (los, ok) = ctx.hop(tx.pos, tx.truck, u);
        out.push(message(tx, traffic, ok && !collided[i], (end - tx.gen) * 1000.0, los));
    }
    out
}

struct SpsParams {
    slots: u32,
    slot_s: f64,
    airtime_ms: f64,
    keep: (u32, u32),
    reselect_prob: f64,
}

#[derive(Clone, Copy)]
struct Reservation {
    slot: u32,
    counter: u32,
}

fn sps(
    trace: &DeliveryTrace,
    ctx: &Ctx<'_>,
    rng: &mut SimRng,
    traffic: &CamTraffic,
    period_s: f64,
    p: &SpsParams,
) -> Vec<CamMessage> {
    let tr = &trace.trajectories;
    let n = tr.drone_count as usize;
    let range = ctx.cfg.sense_range_m;
    let periods = (tr.end_time / period_s).floor() as u64 + 1;
    let mut res: Vec<Option<Reservation>> = vec![None; n];
    let mut seqs = vec![0u32; n];
    let mut chans: Vec<SimRng> = (0..n as u32).map(|d| ctx.channel_rng(d)).collect();
    // what each drone announced in the previous period: (slot, position)
    let mut heard: Vec<Option<(u32, Point)>> = vec![None; n];
    let mut out = Vec::new();

    let select = |rng: &mut SimRng, me: usize, pos: Point, heard: &[Option<(u32, Point)>]| {
        let mut busy = vec![false; p.slots as usize];
        for (d, h) in heard.iter().enumerate() {
            if let Some((s, q)) = h {
                if d != me && q.distance(&pos) <= range {
                    busy[*s as usize] = true;
                }
            }
        }
        let free: Vec<u32> = (0..p.slots).filter(|s| !busy[*s as usize]).collect();
        let slot = if free.is_empty() {
            rng.random_range(0..p.slots)
        } else {
            free[rng.random_range(0..free.len())]
        };
        Reservation {
            slot,
            counter: rng.random_range(p.keep.0..=p.keep.1),
        }
    };

    for k in 0..periods {
        let t0 = k as f64 * period_s;
        let mut now: Vec<Option<(u32, Point)>> = vec![None; n];
        let mut sent: Vec<(usize, Tx)> = Vec::new();
        for d in 0..n {
            let dd = d as u32;
            if res[d].is_none() {
                if !tr.airborne(dd, t0) {
                    continue;
                }
                let pos = ctx.lift(tr.position_at(VehicleId::Drone(dd), t0).expect("in range"));
                res[d] = Some(select(rng, d, pos, &heard));
            }
            let r = res[d].expect("reserved");
            let t = t0 + r.slot as f64 * p.slot_s;
            if t > tr.end_time || !tr.airborne(dd, t) {
                res[d] = None;
                continue;
            }
            let tx = Tx {
                drone: dd,
                seq: seqs[d],
                gen: t,
                pos: ctx.lift(tr.position_at(VehicleId::Drone(dd), t).expect("in range")),
                truck: ctx.lift(tr.truck.at(t)),
            };
            seqs[d] += 1;
            now[d] = Some((r.slot, tx.pos));
            let counter = r.counter - 1;
            res[d] = if counter > 0 {
                Some(Reservation { counter, ..r })
            } else if rng.random::<f64>() < p.reselect_prob {
                // pick again next period from what is sensed then
                None
            } else {
                Some(Reservation {
                    counter: rng.random_range(p.keep.0..=p.keep.1),
                    ..r
                })
            };
            sent.push((d, tx));
        }
        for (i, (d, tx)) in sent.iter().enumerate() {
            let audible = |tx: &Tx| tx.pos.distance(&tx.truck) <= range;
            let slot = now[*d].expect("sent").0;
            let clash = sent.iter().enumerate().any(|(j, (e, other))| {
                j != i && now[*e].expect("sent").0 == slot && audible(tx) && audible(other)
            });
            let u: f64 = chans[*d].random();
            let (los, ok) = ctx.hop(tx.pos, tx.truck, u);
            out.push(message(tx, traffic, ok && !clash, p.airtime_ms, los));
        }
        heard = now;
    }
    out
}
