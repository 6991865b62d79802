//! The event loop.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::io::Write;
use std::rc::Rc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest as _, Sha256};

use crate::authority::Authority;
use crate::crypto::Digest;
use crate::obu::{Frame, Kinematics, Obu, TrustStore};
use crate::rsu::Rsu;
use crate::time::{Duration, Timestamp};
use crate::wire::Encode;

use super::config::ScenarioConfig;
use super::metrics::{Counters, MetricsReport};
use super::mobility::{random_turn, zone_of, Grid, Vehicle};
use super::node::{Command, Ctx, Job, NodeProtocol};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endpoint {
    Vehicle(usize),
    Rsu(usize),
}

enum Event {
    TxStart { from: usize, frame: Rc<Frame>, airtime: Duration },
    RxDeliver { to: Endpoint, from: Endpoint, frame: Rc<Frame> },
    TimerFire { vehicle: usize },
    ProcDone { vehicle: usize },
    MobilityStep,
    RlPush,
}

impl Event {
    fn tag(&self) -> (u8, &'static str, u64) {
        match self {
            Event::TxStart { from, .. } => (1, "tx", *from as u64),
            Event::RxDeliver { to: Endpoint::Vehicle(v), .. } => (2, "rx", *v as u64),
            Event::RxDeliver { to: Endpoint::Rsu(r), .. } => (2, "rx-rsu", *r as u64),
            Event::TimerFire { vehicle } => (3, "timer", *vehicle as u64),
            Event::ProcDone { vehicle } => (4, "proc", *vehicle as u64),
            Event::MobilityStep => (5, "move", 0),
            Event::RlPush => (6, "rl", 0),
        }
    }
}

fn frame_label(f: &Frame) -> &'static str {
    match f {
        Frame::Beacon(_) => "beacon",
        Frame::NeighborList(_) => "list",
        Frame::Disapproval(_) => "disapproval",
        Frame::CertRequest(_) => "cert-request",
        Frame::CertResponse(_) => "cert-response",
    }
}

struct Processor {
    current: Option<Job>,
    waiting: VecDeque<Job>,
}

struct Car {
    node: Box<dyn NodeProtocol>,
    motion: Vehicle,
    zone: usize,
    proc: Processor,
    radio_free: Timestamp,
    timer_at: Option<Timestamp>,
    beaconing: bool,
}

struct BeaconInfo {
    honest: bool,
    measured: bool,
}

pub(super) struct Simulation<'w> {
    cfg: ScenarioConfig,
    grid: Grid,
    queue: super::events::EventQueue<Event>,
    now: Timestamp,
    end: Timestamp,
    warmup_end: Timestamp,
    cars: Vec<Car>,
    rsus: Vec<Rsu>,
    zone_names: Vec<String>,
    authority: Authority,
    rng: ChaCha20Rng,
    counters: Counters,
    beacons: HashMap<Digest, BeaconInfo>,
    verifier_counts: HashMap<Digest, usize>,
    forged: HashSet<Digest>,
    hasher: Sha256,
    trace: Option<&'w mut dyn Write>,
    scratch: Vec<Command>,
}

fn seed_bytes(rng: &mut impl RngCore) -> u64 {
    rng.next_u64()
}

impl<'w> Simulation<'w> {
    pub(super) fn new(cfg: ScenarioConfig, trace: Option<&'w mut dyn Write>) -> Result<Self, SimError> {
        cfg.validate()?;
        let grid = Grid::from_config(&cfg);
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let mut authority = Authority::new(cfg.crypto, seed_bytes(&mut rng));

        let z = cfg.rsu_zones_per_side;
        let zone_names: Vec<String> = (0..z * z).map(|i| format!("zone-{}-{}", i % z, i / z)).collect();
        let mut rsus = Vec::with_capacity(zone_names.len());
        for name in &zone_names {
            let key = authority.provision_rsu(name, 0)?;
            rsus.push(Rsu::new(
                name.clone(),
                0,
                key,
                authority.public_key(),
                cfg.rsu_params(),
                seed_bytes(&mut rng),
            ));
        }
        let public_params = authority.public_params();
        let trust = TrustStore::for_zones(&public_params, zone_names.iter().map(|n| (n.as_str(), 0)))?;

        let mut cars = Vec::with_capacity(cfg.vehicle_count);
        for i in 0..cfg.vehicle_count {
            let lt = authority.enroll_vehicle(&vehicle_identity(i), Timestamp::ZERO)?;
            let obu = Obu::new(lt, public_params, trust.clone(), cfg.obu_params())?;
            let motion = Vehicle::random(&grid, cfg.speed_min_kmh, cfg.speed_max_kmh, &mut rng);
            cars.push(Car {
                node: cfg.protocol.build(obu),
                zone: zone_of(&grid, z, motion.position(&grid)),
                motion,
                proc: Processor {
                    current: None,
                    waiting: VecDeque::new(),
                },
                radio_free: Timestamp::ZERO,
                timer_at: None,
                beaconing: false,
            });
        }

        let mut sim = Self {
            grid,
            queue: super::events::EventQueue::new(),
            now: Timestamp::ZERO,
            end: Timestamp::ZERO + cfg.duration(),
            warmup_end: Timestamp::ZERO + cfg.warmup(),
            cars,
            rsus,
            zone_names,
            authority,
            rng,
            counters: Counters::default(),
            beacons: HashMap::new(),
            verifier_counts: HashMap::new(),
            forged: HashSet::new(),
            hasher: Sha256::new(),
            trace,
            scratch: Vec::new(),
            cfg,
        };
        for i in 0..sim.cars.len() {
            sim.request_cert(i)?;
        }
        sim.queue.push(Timestamp::ZERO + cfg.mobility_step(), Event::MobilityStep);
        if cfg.revoke_count > 0 {
            sim.queue.push(Timestamp::from_secs_f64(cfg.revoke_at_s), Event::RlPush);
        }
        Ok(sim)
    }

    pub(super) fn run(mut self) -> Result<MetricsReport, SimError> {
        while let Some(ev) = self.queue.pop() {
            if ev.time > self.end {
                break;
            }
            self.now = ev.time;
            self.counters.events += 1;
            let (tag, label, who) = ev.event.tag();
            self.hasher.update(ev.time.as_nanos().to_be_bytes());
            self.hasher.update(ev.seq.to_be_bytes());
            self.hasher.update([tag]);
            self.hasher.update(who.to_be_bytes());
            if let Some(w) = self.trace.as_mut() {
                let detail = match &ev.event {
                    Event::TxStart { frame, .. } | Event::RxDeliver { frame, .. } => frame_label(frame),
                    _ => "-",
                };
                writeln!(w, "{} {} {} {} {}", ev.time.as_nanos(), ev.seq, label, who, detail)?;
            }
            self.dispatch(ev.event)?;
        }
        let mut histogram = BTreeMap::new();
        for &c in self.verifier_counts.values() {
            *histogram.entry(c).or_insert(0) += 1;
        }
        let window = (self.end - self.warmup_end).as_secs_f64();
        let hash: [u8; 32] = self.hasher.finalize().into();
        Ok(MetricsReport::from_counters(
            self.cfg.vehicle_count,
            self.counters,
            histogram,
            window,
            Digest(hash).to_string(),
        ))
    }

    fn dispatch(&mut self, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::TxStart { from, frame, airtime } => self.tx_start(from, frame, airtime),
            Event::RxDeliver { to, from, frame } => self.rx_deliver(to, from, &frame)?,
            Event::TimerFire { vehicle } => {
                if self.cars[vehicle].timer_at == Some(self.now) {
                    self.cars[vehicle].timer_at = None;
                    self.maybe_renew(vehicle)?;
                    let ctx = self.ctx(vehicle);
                    let mut out = std::mem::take(&mut self.scratch);
                    self.cars[vehicle].node.on_timer(&ctx, &mut out);
                    self.apply(vehicle, &mut out);
                    self.scratch = out;
                }
            }
            Event::ProcDone { vehicle } => self.proc_done(vehicle),
            Event::MobilityStep => self.mobility_step()?,
            Event::RlPush => {
                for i in 0..self.cfg.revoke_count {
                    self.authority.revoke(&vehicle_identity(i))?;
                }
                let rl = self.authority.current_rl().clone();
                for r in &mut self.rsus {
                    r.apply_rl_update(&rl);
                }
            }
        }
        Ok(())
    }

    fn ctx(&self, i: usize) -> Ctx {
        let car = &self.cars[i];
        let (x, y) = car.motion.position(&self.grid);
        let milli = |v: f64| (v * 1000.0).round() as i64;
        Ctx {
            now: self.now,
            kinematics: Kinematics {
                x_mm: milli(x),
                y_mm: milli(y),
                speed_mm_s: milli(car.motion.speed_m_s),
                heading_mrad: car.motion.heading_mrad(),
                accel_mm_s2: 0,
            },
        }
    }

    fn airtime(&self, bytes: usize) -> Duration {
        super::transmission_delay(bytes, self.cfg.bandwidth_bps())
    }

    fn measured(&self, t: Timestamp) -> bool {
        t >= self.warmup_end
    }

    fn request_cert(&mut self, i: usize) -> Result<(), SimError> {
        let zone = self.cars[i].zone;
        let req = self.cars[i]
            .node
            .obu_mut()
            .build_cert_request(&self.zone_names[zone], 0, &mut self.rng)?;
        let frame = Frame::CertRequest(req);
        let at = self.now + self.airtime(frame.encode().len());
        self.queue.push(
            at,
            Event::RxDeliver {
                to: Endpoint::Rsu(zone),
                from: Endpoint::Vehicle(i),
                frame: Rc::new(frame),
            },
        );
        Ok(())
    }

    /// Asks for a fresh certificate well before the current one runs out.
    fn maybe_renew(&mut self, i: usize) -> Result<(), SimError> {
        let obu = self.cars[i].node.obu();
        if obu.request_outstanding() {
            return Ok(());
        }
        let margin = Duration::from_millis_f64(2.0 * self.cfg.delta_max_ms) + Duration::from_secs(1);
        let due = obu
            .temp_cert()
            .is_some_and(|c| c.expires_at().saturating_since(self.now) <= margin);
        if due {
            self.request_cert(i)?;
        }
        Ok(())
    }

    fn rx_deliver(&mut self, to: Endpoint, from: Endpoint, frame: &Frame) -> Result<(), SimError> {
        match to {
            Endpoint::Rsu(r) => {
                let (Frame::CertRequest(req), Endpoint::Vehicle(v)) = (frame, from) else {
                    return Ok(());
                };
                if let Ok(s) = self.rsus[r].handle_cert_request(req, self.now) {
                    let resp = Frame::CertResponse(s.cert);
                    let at = s.release_at.max(self.now) + self.airtime(resp.encode().len());
                    self.queue.push(
                        at,
                        Event::RxDeliver {
                            to: Endpoint::Vehicle(v),
                            from: Endpoint::Rsu(r),
                            frame: Rc::new(resp),
                        },
                    );
                }
            }
            Endpoint::Vehicle(v) => {
                if let Frame::CertResponse(cert) = frame {
                    let installed = self.cars[v].node.obu_mut().install_temp_cert(*cert, self.now).is_ok();
                    if installed && !self.cars[v].beaconing {
                        self.cars[v].beaconing = true;
                        let period = Duration::from_millis_f64(self.cfg.beacon_period_ms);
                        let phase = Duration::from_nanos(self.rng.gen_range(0..period.as_nanos()));
                        self.cars[v].node.obu_mut().start_beaconing(self.now + phase);
                    }
                    self.reschedule(v);
                    return Ok(());
                }
                if let Frame::Beacon(b) = frame {
                    if self.measured(b.timestamp) {
                        self.counters.beacons_received += 1;
                    }
                }
                let ctx = self.ctx(v);
                let mut out = std::mem::take(&mut self.scratch);
                self.cars[v].node.on_frame(frame, &ctx, &mut out);
                self.apply(v, &mut out);
                self.scratch = out;
            }
        }
        Ok(())
    }

    fn tx_start(&mut self, from: usize, frame: Rc<Frame>, airtime: Duration) {
        let origin = self.cars[from].motion.position(&self.grid);
        let radius = self.cfg.coverage_radius_m;
        let mut receivers = 0u64;
        for (j, car) in self.cars.iter().enumerate() {
            if j != from && super::in_range(&self.grid, origin, car.motion.position(&self.grid), radius) {
                receivers += 1;
                self.queue.push(
                    self.now + airtime,
                    Event::RxDeliver {
                        to: Endpoint::Vehicle(j),
                        from: Endpoint::Vehicle(from),
                        frame: Rc::clone(&frame),
                    },
                );
            }
        }
        if let Frame::Beacon(b) = &*frame {
            let id = b.message_id();
            let honest = !self.forged.contains(&id);
            let measured = self.measured(b.timestamp);
            if measured {
                if honest {
                    self.counters.beacons_sent += 1;
                    self.counters.honest_pairs += receivers;
                    if receivers > 0 {
                        self.verifier_counts.insert(id, 0);
                    }
                } else {
                    self.counters.forged_sent += 1;
                    self.counters.forged_pairs += receivers;
                }
            }
            self.beacons.insert(id, BeaconInfo { honest, measured });
        }
    }

    fn transmit(&mut self, from: usize, mut frame: Frame) {
        if let Frame::Beacon(b) = &mut frame {
            if self.cfg.forged_fraction > 0.0 && self.rng.gen_bool(self.cfg.forged_fraction) {
                // tampered after signing: the signature no longer matches
                b.kinematics.x_mm += 1_000;
                self.forged.insert(b.message_id());
            }
        }
        let airtime = self.airtime(frame.encode().len());
        let car = &mut self.cars[from];
        let start = car.radio_free.max(self.now);
        car.radio_free = start + airtime;
        self.queue.push(
            start,
            Event::TxStart {
                from,
                frame: Rc::new(frame),
                airtime,
            },
        );
    }

    fn beacon_info(&self, b: &crate::obu::Beacon) -> (Digest, bool, bool) {
        let id = b.message_id();
        match self.beacons.get(&id) {
            Some(info) => (id, info.honest, info.measured),
            None => (id, !self.forged.contains(&id), false),
        }
    }

    fn apply(&mut self, v: usize, out: &mut Vec<Command>) {
        for cmd in out.drain(..) {
            match cmd {
                Command::Enqueue(job) => self.enqueue(v, job),
                Command::Transmit(frame) => self.transmit(v, frame),
                Command::Delivered(b) => {
                    let (_, honest, measured) = self.beacon_info(&b);
                    if measured {
                        if honest {
                            self.counters.delivered += 1;
                            self.counters.delay_sum_ns += (self.now - b.timestamp).as_nanos() as u128;
                        } else {
                            self.counters.forged_delivered += 1;
                        }
                    }
                }
                Command::Rejected(b) => {
                    let (_, honest, measured) = self.beacon_info(&b);
                    if measured && honest {
                        self.counters.disapproval_dropped += 1;
                    }
                }
            }
        }
        self.reschedule(v);
    }

    fn enqueue(&mut self, v: usize, job: Job) {
        if let Job::VerifyBeacon(b) = &job {
            let id = b.message_id();
            if let Some(c) = self.verifier_counts.get_mut(&id) {
                *c += 1;
            }
        }
        let cap = self.cfg.rx_buffer_capacity;
        let car = &mut self.cars[v];
        if car.proc.current.is_none() {
            self.start_job(v, job);
            return;
        }
        if !job.is_sign() && car.proc.waiting.len() >= cap {
            self.counters.jobs_dropped += 1;
            if let Job::VerifyBeacon(b) | Job::Recheck(b) = &job {
                let (_, honest, measured) = self.beacon_info(b);
                if honest && measured {
                    self.counters.overflow_lost += 1;
                }
            }
            let ctx = self.ctx(v);
            self.cars[v].node.on_job_dropped(&job, &ctx);
            return;
        }
        car.proc.waiting.push_back(job);
    }

    fn job_cost(&self, job: &Job) -> Duration {
        if job.is_sign() {
            self.cfg.sign_cost()
        } else {
            self.cfg.verify_cost()
        }
    }

    fn proc_done(&mut self, v: usize) {
        let job = self.cars[v].proc.current.take().expect("busy processor");
        if let Job::VerifyBeacon(b) | Job::Recheck(b) = &job {
            if self.measured(b.timestamp) {
                self.counters.beacon_verifications += 1;
            }
            if self.measured(self.now) {
                self.counters.verifications_completed += 1;
            }
        }
        let ctx = self.ctx(v);
        let mut out = std::mem::take(&mut self.scratch);
        self.cars[v].node.on_job_done(job, &ctx, &mut out);
        self.apply(v, &mut out);
        self.scratch = out;
        if self.cars[v].proc.current.is_none() {
            while let Some(next) = self.cars[v].proc.waiting.pop_front() {
                if self.cars[v].node.still_needed(&next) {
                    self.start_job(v, next);
                    break;
                }
            }
        }
    }

    fn start_job(&mut self, v: usize, job: Job) {
        let cost = self.job_cost(&job);
        self.cars[v].proc.current = Some(job);
        self.queue.push(self.now + cost, Event::ProcDone { vehicle: v });
    }

    fn reschedule(&mut self, v: usize) {
        let Some(w) = self.cars[v].node.next_wakeup() else { return };
        let w = w.max(self.now);
        let car = &mut self.cars[v];
        if car.timer_at.is_none_or(|t| w < t) {
            car.timer_at = Some(w);
            self.queue.push(w, Event::TimerFire { vehicle: v });
        }
    }

    fn mobility_step(&mut self) -> Result<(), SimError> {
        let dt = self.cfg.mobility_step();
        let z = self.cfg.rsu_zones_per_side;
        let mut moved_zone = Vec::new();
        for (i, car) in self.cars.iter_mut().enumerate() {
            let rng = &mut self.rng;
            car.motion.advance(&self.grid, dt.as_secs_f64(), || random_turn(rng));
            let zone = zone_of(&self.grid, z, car.motion.position(&self.grid));
            if zone != car.zone {
                car.zone = zone;
                moved_zone.push(i);
            }
        }
        for i in moved_zone {
            self.request_cert(i)?;
        }
        self.queue.push(self.now + dt, Event::MobilityStep);
        Ok(())
    }
}

pub fn vehicle_identity(i: usize) -> String {
    format!("veh-{i}")
}
