//! Per-vehicle verification policies as seen by the simulator.
//!
//! A policy wraps an [`Obu`] and turns radio frames, finished processor jobs
//! and clock ticks into [`Command`]s. Policies are registered by name in
//! [`PROTOCOLS`]; `protocol = ...` in a scenario selects one.

use crate::baseline::{BaselineObu, VerifyJob};
use crate::obu::{
    Beacon, DisapprovalMsg, Frame, Kinematics, NeighborListMsg, Obu, ReceiveAction, RecheckOutcome, VerifyOutcome,
};
use crate::registry::{Handle, Named, Registry};
use crate::time::Timestamp;

/// Work for the node's processor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Job {
    /// Sign and then transmit.
    Sign(Frame),
    VerifyBeacon(Beacon),
    VerifyList(NeighborListMsg),
    VerifyDisapproval(DisapprovalMsg),
    /// Second look at a parked beacon named by a disapproval.
    Recheck(Beacon),
}

impl Job {
    pub fn is_sign(&self) -> bool {
        matches!(self, Job::Sign(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Job::Sign(_) => "sign",
            Job::VerifyBeacon(_) => "verify-beacon",
            Job::VerifyList(_) => "verify-list",
            Job::VerifyDisapproval(_) => "verify-disapproval",
            Job::Recheck(_) => "recheck",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Enqueue(Job),
    /// Put a frame on the air as is.
    Transmit(Frame),
    /// Beacon handed to the application.
    Delivered(Beacon),
    /// Beacon thrown away as invalid.
    Rejected(Beacon),
}

pub struct Ctx {
    pub now: Timestamp,
    /// Current kinematics of this vehicle, for beacons made now.
    pub kinematics: Kinematics,
}

pub trait NodeProtocol: Send {
    fn obu(&self) -> &Obu;

    fn obu_mut(&mut self) -> &mut Obu;

    fn on_frame(&mut self, frame: &Frame, ctx: &Ctx, out: &mut Vec<Command>);

    fn on_job_done(&mut self, job: Job, ctx: &Ctx, out: &mut Vec<Command>);

    /// Checked when the processor picks the job up; unneeded jobs are
    /// discarded at no cost.
    fn still_needed(&self, _job: &Job) -> bool {
        true
    }

    /// The job never ran: the receive buffer was full.
    fn on_job_dropped(&mut self, _job: &Job, _ctx: &Ctx) {}

    fn on_timer(&mut self, ctx: &Ctx, out: &mut Vec<Command>);

    fn next_wakeup(&self) -> Option<Timestamp> {
        self.obu().next_wakeup()
    }
}

pub trait ProtocolFactory: Named {
    fn build(&self, obu: Obu) -> Box<dyn NodeProtocol>;
}

pub type Protocol = Handle<dyn ProtocolFactory>;

pub static PROTOCOLS: Registry<dyn ProtocolFactory> =
    Registry::new("protocol", &[&CooperativeFactory, &BaselineFactory]);

/// Registry lookup that panics on an unknown name.
pub fn protocol(name: &str) -> Protocol {
    PROTOCOLS.get(name).unwrap_or_else(|e| panic!("{e}"))
}

pub struct CooperativeFactory;

impl Named for CooperativeFactory {
    fn name(&self) -> &'static str {
        "cooperative"
    }
}

impl ProtocolFactory for CooperativeFactory {
    fn build(&self, obu: Obu) -> Box<dyn NodeProtocol> {
        Box::new(Cooperative(obu))
    }
}

pub struct BaselineFactory;

impl Named for BaselineFactory {
    fn name(&self) -> &'static str {
        "baseline-verify-all"
    }
}

impl ProtocolFactory for BaselineFactory {
    fn build(&self, obu: Obu) -> Box<dyn NodeProtocol> {
        Box::new(Baseline(BaselineObu::new(obu)))
    }
}

/// Cooperative checking with the wait window and disapprovals.
pub struct Cooperative(pub Obu);

impl NodeProtocol for Cooperative {
    fn obu(&self) -> &Obu {
        &self.0
    }

    fn obu_mut(&mut self) -> &mut Obu {
        &mut self.0
    }

    fn on_frame(&mut self, frame: &Frame, ctx: &Ctx, out: &mut Vec<Command>) {
        match frame {
            Frame::Beacon(b) => {
                if self.0.on_receive_beacon(b, ctx.now) == ReceiveAction::VerifyNow {
                    out.push(Command::Enqueue(Job::VerifyBeacon(b.clone())));
                }
            }
            Frame::NeighborList(m) => out.push(Command::Enqueue(Job::VerifyList(m.clone()))),
            Frame::Disapproval(d) if self.0.already_disapproved(&d.subject) => {}
            Frame::Disapproval(d) => {
                // keep the named beacon from timing out while the report
                // waits for the processor
                self.0.hold_pending(&d.subject);
                out.push(Command::Enqueue(Job::VerifyDisapproval(d.clone())));
            }
            Frame::CertRequest(_) | Frame::CertResponse(_) => {}
        }
    }

    fn on_job_done(&mut self, job: Job, ctx: &Ctx, out: &mut Vec<Command>) {
        match job {
            Job::Sign(frame) => out.push(Command::Transmit(frame)),
            Job::VerifyBeacon(b) => match self.0.verify_now(&b, ctx.now) {
                VerifyOutcome::Deliver => out.push(Command::Delivered(b)),
                VerifyOutcome::Disapprove(report) => {
                    out.push(Command::Rejected(b));
                    if let Some(d) = report {
                        out.push(Command::Enqueue(Job::Sign(Frame::Disapproval(d))));
                    }
                }
            },
            Job::VerifyList(m) => {
                self.0.on_receive_neighbor_list(&m, ctx.now);
            }
            Job::VerifyDisapproval(d) => {
                let acts = self.0.on_receive_disapproval(&d, ctx.now);
                if acts.forward {
                    out.push(Command::Transmit(Frame::Disapproval(d)));
                }
                if let Some(b) = acts.recheck {
                    out.push(Command::Enqueue(Job::Recheck(b)));
                }
            }
            Job::Recheck(b) => match self.0.complete_recheck(&b, ctx.now) {
                RecheckOutcome::Delivered => out.push(Command::Delivered(b)),
                RecheckOutcome::Dropped => out.push(Command::Rejected(b)),
            },
        }
    }

    fn still_needed(&self, job: &Job) -> bool {
        match job {
            Job::VerifyDisapproval(d) => !self.0.already_disapproved(&d.subject),
            _ => true,
        }
    }

    fn on_job_dropped(&mut self, job: &Job, _ctx: &Ctx) {
        if let Job::VerifyDisapproval(d) = job {
            self.0.release_hold(&d.subject);
        }
    }

    fn on_timer(&mut self, ctx: &Ctx, out: &mut Vec<Command>) {
        let t = self.0.on_timer(ctx.now);
        out.extend(t.delivered.into_iter().map(Command::Delivered));
        if t.beacon_due {
            if let Ok(b) = self.0.make_beacon(ctx.kinematics, ctx.now) {
                out.push(Command::Enqueue(Job::Sign(Frame::Beacon(b))));
            }
        }
        if t.list_due {
            if let Ok(m) = self.0.make_neighbor_list(ctx.now) {
                out.push(Command::Enqueue(Job::Sign(Frame::NeighborList(m))));
            }
        }
    }
}

/// Every beacon checked locally; lists and disapprovals are neither sent
/// nor read.
pub struct Baseline(pub BaselineObu);

impl NodeProtocol for Baseline {
    fn obu(&self) -> &Obu {
        self.0.obu()
    }

    fn obu_mut(&mut self) -> &mut Obu {
        self.0.obu_mut()
    }

    fn on_frame(&mut self, frame: &Frame, ctx: &Ctx, out: &mut Vec<Command>) {
        if let Frame::Beacon(b) = frame {
            if let Some(job) = self.0.baseline_on_receive(b, ctx.now) {
                out.push(Command::Enqueue(Job::VerifyBeacon(job.beacon)));
            }
        }
    }

    fn on_job_done(&mut self, job: Job, ctx: &Ctx, out: &mut Vec<Command>) {
        match job {
            Job::Sign(frame) => out.push(Command::Transmit(frame)),
            Job::VerifyBeacon(beacon) => {
                let job = VerifyJob {
                    message_id: beacon.message_id(),
                    beacon,
                };
                if self.0.complete_verify(&job, ctx.now) {
                    out.push(Command::Delivered(job.beacon));
                } else {
                    out.push(Command::Rejected(job.beacon));
                }
            }
            _ => {}
        }
    }

    fn on_timer(&mut self, ctx: &Ctx, out: &mut Vec<Command>) {
        let t = self.0.obu_mut().on_timer(ctx.now);
        self.0.prune(ctx.now);
        if t.beacon_due {
            if let Ok(b) = self.0.obu().make_beacon(ctx.kinematics, ctx.now) {
                out.push(Command::Enqueue(Job::Sign(Frame::Beacon(b))));
            }
        }
    }

    fn next_wakeup(&self) -> Option<Timestamp> {
        self.0.obu().next_wakeup()
    }
}
