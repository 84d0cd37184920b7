use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    AccelReq, ApmSnapshot, Arbitration, Cache, Decision, Dram, EpochTelemetry, LlcPolicy,
    OwnerClass, SystemConfig,
};
use crate::error::{Error, Result};
use crate::predictors::ShipEvent;
use crate::trace::{AccessKind, AccessSequence};

/// Core traces loop forever; the accelerator trace is one input set.
#[derive(Debug, Clone, Default)]
pub struct Workload {
    pub cores: Vec<AccessSequence>,
    pub accel: Option<AccessSequence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimLimits {
    /// Stop after this many accelerator input sets.
    pub max_input_sets: Option<u64>,
    /// Stop once any core retires this many instructions after warm-up.
    pub core_instr_budget: Option<u64>,
    /// Core accesses before measurement starts and the accelerator starts.
    pub warmup_accesses: u64,
    /// Deadline of one input set, in cycles.
    pub d_cycles: u64,
    /// Hard stop.
    pub max_cycles: u64,
    pub event_log: bool,
}

impl Default for SimLimits {
    fn default() -> Self {
        Self {
            max_input_sets: None,
            core_instr_budget: Some(4_000_000),
            warmup_accesses: 100_000,
            d_cycles: 1_000_000,
            max_cycles: u64::MAX / 4,
            event_log: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoreStats {
    pub retired: u64,
    pub accesses: u64,
    pub private_hits: u64,
    pub private_misses: u64,
    pub llc_reads: u64,
    pub llc_read_hits: u64,
    pub llc_bypassed: u64,
    pub llc_writebacks: u64,
    pub llc_wait_cycles: u64,
    pub llc_served: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccelStats {
    /// Accesses per input set.
    pub m: u64,
    pub input_sets: u64,
    pub deadline_misses: u64,
    pub frame_times: Vec<u64>,
    pub llc_requests: u64,
    pub read_hits: u64,
    pub read_misses: u64,
    pub merged: u64,
    pub writes: u64,
    pub bypassed: u64,
    pub cached: u64,
    pub llc_wait_cycles: u64,
    pub slip_cycles: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancySample {
    pub cycle: u64,
    pub core_lines: usize,
    pub accel_lines: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub window_start: u64,
    pub stop_cycle: u64,
    /// Cycle the last in-flight request drained.
    pub end_cycle: u64,
    pub truncated: bool,
    pub cores: Vec<CoreStats>,
    pub accel: Option<AccelStats>,
    pub occupancy: Vec<OccupancySample>,
    pub telemetry: Vec<EpochTelemetry>,
    pub dram_reads: u64,
    pub dram_writes: u64,
    #[serde(skip)]
    pub event_log: Vec<String>,
}

impl SimResult {
    pub fn elapsed(&self) -> u64 {
        self.stop_cycle.saturating_sub(self.window_start)
    }
}

/// Queue entry as seen by the arbiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueuedReq {
    pub id: u64,
    pub arrival: u64,
    pub requester: u8,
    pub class: OwnerClass,
}

/// FIFO: oldest arrival, cores before the accelerator on ties, then lower
/// requester id. ARP: the oldest accelerator request if any, else FIFO over
/// the cores. Returns the index into `queue`.
pub fn arbitrate(queue: &[QueuedReq], policy: Arbitration) -> Option<usize> {
    let key = |q: &QueuedReq| (q.arrival, q.class, q.requester, q.id);
    let oldest = |class: Option<OwnerClass>| {
        queue
            .iter()
            .enumerate()
            .filter(|(_, q)| class.is_none_or(|c| q.class == c))
            .min_by_key(|(_, q)| key(q))
            .map(|(i, _)| i)
    };
    match policy {
        Arbitration::Fifo => oldest(None),
        Arbitration::Arp => oldest(Some(OwnerClass::Accel)).or_else(|| oldest(None)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    DramDone(u64),
    Respond(u64),
    WritebackDone,
    LlcArrive(u64),
    CoreIssue(u8),
    AccelRelease,
    AccelIssue,
    LlcService,
    Epoch,
}

impl Ev {
    /// Same-cycle order: responses, then issues and arrivals, then the LLC
    /// port, then epoch processing.
    fn class(self) -> u8 {
        match self {
            Ev::DramDone(_) | Ev::Respond(_) | Ev::WritebackDone => 0,
            Ev::LlcArrive(_) | Ev::CoreIssue(_) | Ev::AccelRelease | Ev::AccelIssue => 1,
            Ev::LlcService => 2,
            Ev::Epoch => 3,
        }
    }

    /// Events that start new work; dropped once the run is stopping.
    fn is_source(self) -> bool {
        matches!(
            self,
            Ev::CoreIssue(_) | Ev::AccelRelease | Ev::AccelIssue | Ev::Epoch
        )
    }
}

#[derive(Debug, Clone)]
struct Req {
    requester: u8,
    class: OwnerClass,
    address: u64,
    block: u64,
    kind: AccessKind,
    writeback: bool,
    tag: u64,
    arrival: u64,
    decision: Decision,
    accel_pos: usize,
    layer: u32,
    waiters: Vec<u64>,
}

struct CoreState {
    trace: AccessSequence,
    /// Instructions retired with each access (gap to the previous one).
    gaps: Vec<u64>,
    pos: usize,
    blocked: bool,
    stats: CoreStats,
}

struct AccelState {
    rel_ts: Vec<u64>,
    address: Vec<u64>,
    kind: Vec<AccessKind>,
    layer: Vec<u32>,
    m: u64,
    set_start: u64,
    deadline: u64,
    pos: usize,
    outstanding: usize,
    completed: u64,
    slip: u64,
    blocked: bool,
    active: bool,
    active_since: u64,
    active_acc: u64,
    current_layer: Option<u32>,
    stats: AccelStats,
}

pub struct Simulator {
    cfg: SystemConfig,
    limits: SimLimits,
    policy: Box<dyn LlcPolicy>,
    llc: Cache,
    privs: Vec<Cache>,
    dram: Dram,
    heap: BinaryHeap<Reverse<(u64, u8, u64, Ev)>>,
    seq: u64,
    now: u64,
    reqs: HashMap<u64, Req>,
    next_id: u64,
    queue: Vec<QueuedReq>,
    service_pending: bool,
    port_free_at: u64,
    mshr: HashMap<(u8, u64), u64>,
    pending_writebacks: u64,
    cores: Vec<CoreState>,
    accel: Option<AccelState>,
    core_accesses: u64,
    measuring: bool,
    window_start: u64,
    stopping: bool,
    stop_cycle: u64,
    truncated: bool,
    epoch_index: u64,
    epoch_completions: u64,
    epoch_core_reads: u64,
    epoch_core_misses: u64,
    last_active_total: u64,
    occupancy: Vec<OccupancySample>,
    telemetry: Vec<EpochTelemetry>,
    log: Vec<String>,
    failure: Option<Error>,
}

impl Simulator {
    pub fn new(
        cfg: SystemConfig,
        workload: Workload,
        policy: Box<dyn LlcPolicy>,
        limits: SimLimits,
    ) -> Result<Self> {
        cfg.validate()?;
        if workload.cores.len() > 250 {
            return Err(Error::Config("at most 250 cores".into()));
        }
        let mut cores = Vec::new();
        let mut privs = Vec::new();
        for (i, t) in workload.cores.into_iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Config(format!("core {i} has an empty trace")));
            }
            let mut gaps = Vec::with_capacity(t.len());
            let mut prev = None;
            for a in &t.accesses {
                gaps.push(match prev {
                    None => a.timestamp.max(1),
                    Some(p) => a.timestamp.saturating_sub(p).max(1),
                });
                prev = Some(a.timestamp);
            }
            cores.push(CoreState {
                trace: t,
                gaps,
                pos: 0,
                blocked: false,
                stats: CoreStats::default(),
            });
            privs.push(Cache::new(cfg.private)?);
        }
        let accel = match workload.accel {
            Some(t) if !t.is_empty() => {
                if limits.d_cycles == 0 {
                    return Err(Error::Config("deadline must be positive".into()));
                }
                let t0 = t.accesses[0].timestamp;
                let layer = (0..t.len()).map(|i| t.layer_at(i)).collect();
                Some(AccelState {
                    rel_ts: t.accesses.iter().map(|a| a.timestamp - t0).collect(),
                    address: t.accesses.iter().map(|a| a.address).collect(),
                    kind: t.accesses.iter().map(|a| a.kind).collect(),
                    layer,
                    m: t.len() as u64,
                    set_start: 0,
                    deadline: 0,
                    pos: 0,
                    outstanding: 0,
                    completed: 0,
                    slip: 0,
                    blocked: false,
                    active: false,
                    active_since: 0,
                    active_acc: 0,
                    current_layer: None,
                    stats: AccelStats {
                        m: t.len() as u64,
                        ..Default::default()
                    },
                })
            }
            _ => None,
        };
        if accel.is_none() && limits.core_instr_budget.is_none() && limits.max_cycles == u64::MAX / 4
        {
            return Err(Error::Config(
                "run has no stop condition: set an instruction budget or max_cycles".into(),
            ));
        }
        if accel.is_some() && cores.is_empty() && limits.max_input_sets.is_none() {
            return Err(Error::Config(
                "accelerator-only run needs max_input_sets".into(),
            ));
        }
        Ok(Self {
            llc: Cache::new(cfg.llc)?,
            dram: Dram::new(cfg.dram),
            cfg,
            limits,
            policy,
            privs,
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0,
            reqs: HashMap::new(),
            next_id: 0,
            queue: Vec::new(),
            service_pending: false,
            port_free_at: 0,
            mshr: HashMap::new(),
            pending_writebacks: 0,
            cores,
            accel,
            core_accesses: 0,
            measuring: false,
            window_start: 0,
            stopping: false,
            stop_cycle: 0,
            truncated: false,
            epoch_index: 0,
            epoch_completions: 0,
            epoch_core_reads: 0,
            epoch_core_misses: 0,
            last_active_total: 0,
            occupancy: Vec::new(),
            telemetry: Vec::new(),
            log: Vec::new(),
            failure: None,
        })
    }

    fn schedule(&mut self, cycle: u64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Reverse((cycle, ev.class(), self.seq, ev)));
    }

    fn log(&mut self, event: &str, req: u64, addr: u64, detail: &str) {
        if self.limits.event_log {
            self.log
                .push(format!("{},{event},{req},{addr:#x},{detail}", self.now));
        }
    }

    pub fn run(mut self) -> Result<SimResult> {
        for c in 0..self.cores.len() {
            self.schedule(0, Ev::CoreIssue(c as u8));
        }
        if self.limits.warmup_accesses == 0 || self.cores.is_empty() {
            self.start_window();
        }
        while let Some(Reverse((cycle, _, _, ev))) = self.heap.pop() {
            self.now = cycle;
            if self.stopping && ev.is_source() {
                continue;
            }
            if !self.stopping && cycle >= self.limits.max_cycles {
                self.truncated = true;
                self.stop();
                if ev.is_source() {
                    continue;
                }
            }
            match ev {
                Ev::CoreIssue(c) => self.core_issue(c as usize),
                Ev::LlcArrive(id) => self.llc_arrive(id),
                Ev::LlcService => self.llc_service(),
                Ev::DramDone(id) => self.dram_done(id),
                Ev::Respond(id) => self.respond(id),
                Ev::WritebackDone => self.pending_writebacks -= 1,
                Ev::AccelRelease => self.accel_release(),
                Ev::AccelIssue => self.accel_issue(),
                Ev::Epoch => self.epoch(),
            }
            if let Some(e) = self.failure.take() {
                return Err(e);
            }
        }
        if !self.stopping {
            // ran out of work without a stop condition firing
            self.stop();
        }
        self.check_drained()?;
        self.llc.check_single_copy()?;
        let end = self.now;
        Ok(SimResult {
            window_start: self.window_start,
            stop_cycle: self.stop_cycle,
            end_cycle: end,
            truncated: self.truncated,
            cores: self.cores.into_iter().map(|c| c.stats).collect(),
            accel: self.accel.map(|a| a.stats),
            occupancy: self.occupancy,
            telemetry: self.telemetry,
            dram_reads: self.dram.reads,
            dram_writes: self.dram.writes,
            event_log: self.log,
        })
    }

    fn check_drained(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !self.reqs.is_empty() {
            bad.push(format!("{} requests in flight", self.reqs.len()));
        }
        if !self.queue.is_empty() {
            bad.push(format!("{} requests queued at the LLC", self.queue.len()));
        }
        if !self.mshr.is_empty() {
            bad.push(format!("{} MSHR entries", self.mshr.len()));
        }
        if self.pending_writebacks != 0 {
            bad.push(format!("{} writebacks", self.pending_writebacks));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invariant(format!(
                "pending work after drain: {}",
                bad.join(", ")
            )))
        }
    }

    fn start_window(&mut self) {
        if self.measuring {
            return;
        }
        self.measuring = true;
        self.window_start = self.now;
        let (c, a) = self.llc.occupancy();
        self.occupancy.push(OccupancySample {
            cycle: self.now,
            core_lines: c,
            accel_lines: a,
        });
        if self.accel.is_some() {
            self.schedule(self.now, Ev::AccelRelease);
        }
        self.schedule(self.now + self.cfg.epoch_cycles, Ev::Epoch);
    }

    fn stop(&mut self) {
        if self.stopping {
            return;
        }
        self.stopping = true;
        self.stop_cycle = self.now;
        let now = self.now;
        if let Some(a) = self.accel.as_mut() {
            if a.active && now > a.deadline {
                // an unfinished set already past its deadline is a miss
                a.stats.input_sets += 1;
                a.stats.deadline_misses += 1;
            }
        }
    }

    fn new_req(&mut self, r: Req) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let arrival = r.arrival;
        self.reqs.insert(id, r);
        self.schedule(arrival, Ev::LlcArrive(id));
        id
    }

    fn core_issue(&mut self, c: usize) {
        let now = self.now;
        let measuring = self.measuring;
        let st = &mut self.cores[c];
        let j = st.pos;
        let a = st.trace.accesses[j];
        let g = st.gaps[j];
        st.pos = (j + 1) % st.trace.len();
        let next_gap = st.gaps[st.pos];
        if measuring {
            st.stats.retired += g;
            st.stats.accesses += 1;
        }
        let retired = st.stats.retired;
        self.core_accesses += 1;

        let block = a.address >> 6;
        let write = a.kind == AccessKind::Write;
        if self.privs[c].access(block, write).is_some() {
            if measuring {
                self.cores[c].stats.private_hits += 1;
            }
            self.schedule(now + next_gap, Ev::CoreIssue(c as u8));
        } else {
            if measuring {
                self.cores[c].stats.private_misses += 1;
            }
            let arrive = now + self.cfg.private.tag_latency;
            if let Some(ev) = self.privs[c].insert(block, OwnerClass::Core, write, 0) {
                if ev.dirty {
                    self.new_req(Req {
                        requester: c as u8,
                        class: OwnerClass::Core,
                        address: ev.block << 6,
                        block: ev.block,
                        kind: AccessKind::Write,
                        writeback: true,
                        tag: 0,
                        arrival: arrive,
                        decision: Decision::Cache,
                        accel_pos: 0,
                        layer: 0,
                        waiters: Vec::new(),
                    });
                }
            }
            self.new_req(Req {
                requester: c as u8,
                class: OwnerClass::Core,
                address: a.address,
                block,
                kind: AccessKind::Read,
                writeback: false,
                tag: a.tag,
                arrival: arrive,
                decision: Decision::Cache,
                accel_pos: 0,
                layer: 0,
                waiters: Vec::new(),
            });
            self.cores[c].blocked = true;
        }

        if !self.measuring && self.core_accesses >= self.limits.warmup_accesses {
            self.start_window();
        }
        if self.measuring && self.limits.core_instr_budget.is_some_and(|b| retired >= b) {
            self.stop();
        }
    }

    fn llc_arrive(&mut self, id: u64) {
        let r = &self.reqs[&id];
        self.queue.push(QueuedReq {
            id,
            arrival: r.arrival,
            requester: r.requester,
            class: r.class,
        });
        if !self.service_pending {
            self.service_pending = true;
            let at = self.now.max(self.port_free_at);
            self.schedule(at, Ev::LlcService);
        }
    }

    fn llc_service(&mut self) {
        self.service_pending = false;
        let Some(i) = arbitrate(&self.queue, self.policy.arbitration()) else {
            return;
        };
        let q = self.queue.swap_remove(i);
        self.port_free_at = self.now + self.cfg.port_gap();
        self.process(q.id);
        if !self.queue.is_empty() {
            self.service_pending = true;
            self.schedule(self.port_free_at, Ev::LlcService);
        }
    }

    fn accel_req_info(&self, r: &Req) -> AccelReq {
        AccelReq {
            address: r.address,
            kind: r.kind,
            position: r.accel_pos,
            layer: r.layer,
            epoch_completions: self.epoch_completions,
        }
    }

    fn process(&mut self, id: u64) {
        let now = self.now;
        let tag_lat = self.cfg.llc.tag_latency;
        let data_lat = self.cfg.llc.data_latency;
        let r = self.reqs[&id].clone();
        let measuring = self.measuring;
        let wait = now - r.arrival;
        match r.class {
            OwnerClass::Core => {
                let s = &mut self.cores[r.requester as usize].stats;
                if measuring {
                    s.llc_wait_cycles += wait;
                    s.llc_served += 1;
                }
            }
            OwnerClass::Accel => {
                let s = &mut self.accel.as_mut().unwrap().stats;
                s.llc_wait_cycles += wait;
                s.llc_requests += 1;
            }
        }

        match r.kind {
            AccessKind::Read => {
                if r.class == OwnerClass::Core {
                    self.epoch_core_reads += 1;
                    if measuring {
                        self.cores[r.requester as usize].stats.llc_reads += 1;
                    }
                }
                if let Some(before) = self.llc.access(r.block, false) {
                    self.policy.observe(
                        before.owner.unwrap_or(r.class),
                        before.signature,
                        ShipEvent::HitReref,
                    );
                    match r.class {
                        OwnerClass::Core if measuring => {
                            self.cores[r.requester as usize].stats.llc_read_hits += 1
                        }
                        OwnerClass::Core => {}
                        OwnerClass::Accel => {
                            let s = &mut self.accel.as_mut().unwrap().stats;
                            s.read_hits += 1;
                            s.cached += 1;
                        }
                    }
                    self.log("hit", id, r.address, "");
                    self.schedule(now + tag_lat + data_lat, Ev::Respond(id));
                    return;
                }
                if r.class == OwnerClass::Core {
                    self.epoch_core_misses += 1;
                }
                if let Some(&p) = self.mshr.get(&(r.requester, r.block)) {
                    let d = self.reqs[&p].decision;
                    self.reqs.get_mut(&p).unwrap().waiters.push(id);
                    self.count_miss(&r, d, true);
                    self.log("merge", id, r.address, &p.to_string());
                    return;
                }
                let d = match r.class {
                    OwnerClass::Accel => {
                        let info = self.accel_req_info(&r);
                        self.policy.accel_decide(&info)
                    }
                    OwnerClass::Core => self.policy.core_decide(r.requester, r.tag, r.address),
                };
                self.reqs.get_mut(&id).unwrap().decision = d;
                self.count_miss(&r, d, false);
                self.mshr.insert((r.requester, r.block), id);
                let done = self.dram.issue(now + tag_lat, false);
                self.log("miss", id, r.address, decision_str(d));
                self.schedule(done, Ev::DramDone(id));
            }
            AccessKind::Write => {
                let d = match r.class {
                    OwnerClass::Accel => {
                        let info = self.accel_req_info(&r);
                        self.policy.accel_decide(&info)
                    }
                    OwnerClass::Core => Decision::Cache,
                };
                self.reqs.get_mut(&id).unwrap().decision = d;
                match r.class {
                    OwnerClass::Core if measuring => {
                        self.cores[r.requester as usize].stats.llc_writebacks += 1
                    }
                    OwnerClass::Core => {}
                    OwnerClass::Accel => {
                        let s = &mut self.accel.as_mut().unwrap().stats;
                        s.writes += 1;
                        match d {
                            Decision::Cache => s.cached += 1,
                            Decision::Bypass => s.bypassed += 1,
                        }
                    }
                }
                match d {
                    Decision::Cache => {
                        if let Some(before) = self.llc.access(r.block, true) {
                            self.policy.observe(
                                before.owner.unwrap_or(r.class),
                                before.signature,
                                ShipEvent::HitReref,
                            );
                        } else {
                            let sig = self.policy.signature(r.class, r.tag, r.address);
                            self.fill(r.block, r.class, true, sig);
                        }
                        self.log("write", id, r.address, "cache");
                        self.schedule(now + tag_lat + data_lat, Ev::Respond(id));
                    }
                    Decision::Bypass => {
                        // a dirty resident copy may hold words this write
                        // does not cover, so it goes to DRAM first
                        if self.llc.invalidate(r.block).is_some_and(|l| l.dirty) {
                            let wb = self.dram.issue(now + tag_lat, true);
                            self.pending_writebacks += 1;
                            self.schedule(wb, Ev::WritebackDone);
                        }
                        // posted: the requester is released once the
                        // write is handed to the memory controller
                        let done = self.dram.issue(now + tag_lat, true);
                        self.pending_writebacks += 1;
                        self.schedule(done, Ev::WritebackDone);
                        self.log("write", id, r.address, "bypass");
                        self.schedule(now + tag_lat, Ev::Respond(id));
                    }
                }
            }
        }
    }

    fn count_miss(&mut self, r: &Req, d: Decision, merged: bool) {
        match r.class {
            OwnerClass::Accel => {
                let s = &mut self.accel.as_mut().unwrap().stats;
                s.read_misses += 1;
                s.merged += merged as u64;
                match d {
                    Decision::Cache => s.cached += 1,
                    Decision::Bypass => s.bypassed += 1,
                }
            }
            OwnerClass::Core => {
                if self.measuring && d == Decision::Bypass && !merged {
                    self.cores[r.requester as usize].stats.llc_bypassed += 1;
                }
            }
        }
    }

    fn fill(&mut self, block: u64, class: OwnerClass, dirty: bool, signature: u64) {
        if let Some(ev) = self.llc.insert(block, class, dirty, signature) {
            if !ev.referenced {
                self.policy
                    .observe(ev.owner, ev.signature, ShipEvent::InsertEvictNoReuse);
            }
            if ev.dirty {
                let done = self.dram.issue(self.now, true);
                self.pending_writebacks += 1;
                self.schedule(done, Ev::WritebackDone);
            }
        }
    }

    fn dram_done(&mut self, id: u64) {
        let r = &self.reqs[&id];
        let (kind, decision, block, class, tag, address, requester) =
            (r.kind, r.decision, r.block, r.class, r.tag, r.address, r.requester);
        debug_assert_eq!(kind, AccessKind::Read);
        self.mshr.remove(&(requester, block));
        match decision {
            Decision::Cache => {
                let sig = self.policy.signature(class, tag, address);
                self.fill(block, class, false, sig);
                self.schedule(self.now + self.cfg.llc.data_latency, Ev::Respond(id));
            }
            Decision::Bypass => self.schedule(self.now, Ev::Respond(id)),
        }
    }

    fn respond(&mut self, id: u64) {
        let r = self.reqs.remove(&id).expect("live request");
        self.log("respond", id, r.address, "");
        for w in &r.waiters {
            let wr = self.reqs.remove(w).expect("live waiter");
            self.deliver(&wr);
        }
        self.deliver(&r);
    }

    fn deliver(&mut self, r: &Req) {
        let now = self.now;
        match r.class {
            OwnerClass::Core => {
                if r.writeback {
                    return;
                }
                let st = &mut self.cores[r.requester as usize];
                st.blocked = false;
                let g = st.gaps[st.pos];
                self.schedule(now + g, Ev::CoreIssue(r.requester));
            }
            OwnerClass::Accel => {
                self.epoch_completions += 1;
                let a = self.accel.as_mut().unwrap();
                a.outstanding -= 1;
                a.completed += 1;
                if a.completed == a.m {
                    self.set_complete();
                } else if a.blocked {
                    a.blocked = false;
                    let due = a.set_start + a.rel_ts[a.pos] + a.slip;
                    if now > due {
                        a.slip += now - due;
                        a.stats.slip_cycles += now - due;
                    }
                    self.schedule(now, Ev::AccelIssue);
                }
            }
        }
    }

    fn accel_release(&mut self) {
        let now = self.now;
        let d = self.limits.d_cycles;
        let a = self.accel.as_mut().unwrap();
        a.set_start = now;
        a.deadline = now + d;
        a.pos = 0;
        a.completed = 0;
        a.slip = 0;
        a.blocked = false;
        a.active = true;
        a.active_since = now;
        self.schedule(now, Ev::AccelIssue);
    }

    fn accel_issue(&mut self) {
        let now = self.now;
        let window = self.cfg.accel_window;
        loop {
            let a = self.accel.as_mut().unwrap();
            if !a.active || a.pos as u64 >= a.m {
                return;
            }
            if a.outstanding >= window {
                a.blocked = true;
                return;
            }
            let due = a.set_start + a.rel_ts[a.pos] + a.slip;
            if due > now {
                self.schedule(due, Ev::AccelIssue);
                return;
            }
            let p = a.pos;
            let layer = a.layer[p];
            let new_layer = a.current_layer != Some(layer);
            a.current_layer = Some(layer);
            a.pos += 1;
            a.outstanding += 1;
            let (address, kind) = (a.address[p], a.kind[p]);
            if new_layer {
                if let Err(e) = self.policy.on_layer(layer) {
                    self.failure = Some(e);
                    return;
                }
            }
            let requester = self.cores.len() as u8;
            self.new_req(Req {
                requester,
                class: OwnerClass::Accel,
                address,
                block: address >> 6,
                kind,
                writeback: false,
                tag: 0,
                arrival: now,
                decision: Decision::Cache,
                accel_pos: p,
                layer,
                waiters: Vec::new(),
            });
        }
    }

    fn set_complete(&mut self) {
        let now = self.now;
        let d = self.limits.d_cycles;
        let a = self.accel.as_mut().unwrap();
        a.active = false;
        a.active_acc += now - a.active_since;
        a.stats.frame_times.push(now - a.set_start);
        a.stats.input_sets += 1;
        if now > a.deadline {
            a.stats.deadline_misses += 1;
        }
        let next = (a.set_start + d).max(now);
        let done = self
            .limits
            .max_input_sets
            .is_some_and(|n| a.stats.input_sets >= n);
        self.log("set_end", 0, 0, &(now > self.accel.as_ref().unwrap().deadline).to_string());
        self.policy.on_set_end();
        if done {
            self.stop();
        } else if !self.stopping {
            self.schedule(next, Ev::AccelRelease);
        }
    }

    fn epoch(&mut self) {
        let now = self.now;
        self.epoch_index += 1;
        let mr = if self.epoch_core_reads > 0 {
            self.epoch_core_misses as f64 / self.epoch_core_reads as f64
        } else {
            0.0
        };
        let snap = match self.accel.as_ref() {
            Some(a) => {
                let active_total = a.active_acc + if a.active { now - a.active_since } else { 0 };
                let last_active = active_total - self.last_active_total;
                self.last_active_total = active_total;
                ApmSnapshot {
                    cycle: now,
                    epoch: self.epoch_index,
                    epoch_cycles: self.cfg.epoch_cycles,
                    set_active: a.active,
                    m: a.m,
                    d_cycles: self.limits.d_cycles,
                    ra: if a.active { a.m - a.completed } else { 0 },
                    rt: a.deadline as i64 - now as i64,
                    mr,
                    last_completions: self.epoch_completions,
                    last_active_cycles: last_active,
                }
            }
            None => ApmSnapshot {
                cycle: now,
                epoch: self.epoch_index,
                epoch_cycles: self.cfg.epoch_cycles,
                set_active: false,
                m: 0,
                d_cycles: self.limits.d_cycles,
                ra: 0,
                rt: 0,
                mr,
                last_completions: 0,
                last_active_cycles: 0,
            },
        };
        self.epoch_completions = 0;
        self.epoch_core_reads = 0;
        self.epoch_core_misses = 0;
        if let Some(t) = self.policy.epoch_begin(&snap) {
            self.telemetry.push(t);
        }
        let (c, a) = self.llc.occupancy();
        self.occupancy.push(OccupancySample {
            cycle: now,
            core_lines: c,
            accel_lines: a,
        });
        self.schedule(now + self.cfg.epoch_cycles, Ev::Epoch);
    }
}

fn decision_str(d: Decision) -> &'static str {
    match d {
        Decision::Cache => "cache",
        Decision::Bypass => "bypass",
    }
}
