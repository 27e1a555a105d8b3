//! The timed runner: in-flight records, completion phases, clock, halting
//! and answer extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Configuration, MembraneId, RegionRef};
use crate::multiset::Multiset;
use crate::schedule::{
    build_candidates, match_membrane, select_assignment, Assignment, DeferralInfo, RecordId,
    SchedulePolicy, SelectionCtx,
};
use crate::system::{Charge, Label, Phase, RuleId, RuleKind, System};

/// Per-rule execution durations; total over the rule set, all ≥ 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeMapping(BTreeMap<RuleId, u64>);

#[derive(Debug, Error, PartialEq)]
pub enum TimeMappingError {
    #[error("time mapping misses rule `{0}`")]
    Missing(String),
    #[error("rule `{0}` has duration 0; durations must be ≥ 1")]
    Zero(String),
}

impl TimeMapping {
    /// Same duration for every rule. `unit(sys, 1)` is the classical
    /// synchronous semantics.
    pub fn uniform(sys: &System, duration: u64) -> Self {
        assert!(duration >= 1);
        TimeMapping(sys.rules.iter().map(|r| (r.id, duration)).collect())
    }

    pub fn from_map(sys: &System, map: BTreeMap<RuleId, u64>) -> Result<Self, TimeMappingError> {
        for r in &sys.rules {
            match map.get(&r.id) {
                None => return Err(TimeMappingError::Missing(r.name.clone())),
                Some(0) => return Err(TimeMappingError::Zero(r.name.clone())),
                Some(_) => {}
            }
        }
        Ok(TimeMapping(map))
    }

    pub fn duration(&self, rule: RuleId) -> u64 {
        self.0[&rule]
    }

    pub fn iter(&self) -> impl Iterator<Item = (RuleId, u64)> + '_ {
        self.0.iter().map(|(&r, &d)| (r, d))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
    Undetermined,
}

/// Recognizer answer: exactly one of `yes`/`no` in the environment.
pub fn answer_of(sys: &System, cfg: &Configuration) -> Answer {
    let has = |sym: Option<crate::system::SymbolId>| {
        sym.map(|s| cfg.environment.count(s) > 0).unwrap_or(false)
    };
    match (has(sys.yes), has(sys.no)) {
        (true, false) => Answer::Yes,
        (false, true) => Answer::No,
        _ => Answer::Undetermined,
    }
}

/// A started-but-unfinished rule instance.
#[derive(Clone, Debug)]
pub struct InFlight {
    pub id: RecordId,
    pub rule: RuleId,
    /// Subject membrane (communication/structural kinds) or host region
    /// (evolutions).
    pub membrane: MembraneId,
    pub bound: Multiset,
    pub source: RegionRef,
    pub start: u64,
    pub completion: u64,
}

#[derive(Clone, Debug)]
pub struct StartInfo {
    pub record: RecordId,
    pub rule: RuleId,
    pub membrane: MembraneId,
    pub label: Label,
    pub bound: Multiset,
}

#[derive(Clone, Debug)]
pub enum Effect {
    /// Products deposited into a region (evolutions and sends).
    Deposit {
        dest: RegionRef,
        dest_label: Option<Label>,
        produced: Multiset,
    },
    Dissolved {
        into: MembraneId,
        into_label: Label,
        residue: Multiset,
    },
    Divided {
        children: Vec<MembraneId>,
    },
    Separated {
        left: MembraneId,
        right: MembraneId,
    },
}

#[derive(Clone, Debug)]
pub struct CompletionInfo {
    pub record: RecordId,
    pub rule: RuleId,
    pub membrane: MembraneId,
    pub label: Label,
    pub charge: Charge,
    pub effect: Effect,
}

/// What happened in one clock step.
#[derive(Clone, Debug)]
pub struct StepReport {
    /// 1-based step index: step `t` spans instants `t-1` to `t`.
    pub step: u64,
    /// The instant at which this step's completions and starts take effect.
    pub instant: u64,
    pub started: Vec<StartInfo>,
    pub completed: Vec<CompletionInfo>,
    pub deferrals: Vec<DeferralInfo>,
    pub is_rs_step: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunResult {
    pub answer: Answer,
    pub halted: bool,
    pub wall_steps: u64,
    pub rs_steps: u64,
}

type Observer = Box<dyn FnMut(&Configuration, u64)>;

/// Sequential state machine executing one timed run.
pub struct Runner {
    sys: Arc<System>,
    cfg: Configuration,
    tm: TimeMapping,
    rng: ChaCha8Rng,
    policy: SchedulePolicy,
    clock: u64,
    rs_steps: u64,
    next_record: u64,
    live: BTreeMap<RecordId, InFlight>,
    by_completion: BTreeMap<u64, Vec<RecordId>>,
    locks: BTreeMap<MembraneId, RecordId>,
    evo_hosts: BTreeMap<MembraneId, BTreeSet<RecordId>>,
    dirty: BTreeSet<MembraneId>,
    candidates: BTreeMap<MembraneId, Vec<RuleId>>,
    observer: Option<Observer>,
    check_invariants: bool,
}

impl Runner {
    pub fn new(sys: Arc<System>, tm: TimeMapping, seed: u64, policy: SchedulePolicy) -> Self {
        let cfg = Configuration::from_system(&sys);
        let dirty: BTreeSet<MembraneId> = cfg.ids().collect();
        Runner {
            sys,
            cfg,
            tm,
            rng: ChaCha8Rng::seed_from_u64(seed),
            policy,
            clock: 0,
            rs_steps: 0,
            next_record: 0,
            live: BTreeMap::new(),
            by_completion: BTreeMap::new(),
            locks: BTreeMap::new(),
            evo_hosts: BTreeMap::new(),
            dirty,
            candidates: BTreeMap::new(),
            observer: None,
            check_invariants: false,
        }
    }

    pub fn system(&self) -> &System {
        &self.sys
    }

    pub fn config(&self) -> &Configuration {
        &self.cfg
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn rs_steps(&self) -> u64 {
        self.rs_steps
    }

    pub fn live_records(&self) -> impl Iterator<Item = &InFlight> + '_ {
        self.live.values()
    }

    /// Called after completions, before new instances start, with the
    /// configuration and the current instant.
    pub fn set_observer(&mut self, obs: Observer) {
        self.observer = Some(obs);
    }

    /// Enables per-step conservation, cache-consistency and maximality
    /// assertions. Slow; test use only.
    pub fn set_check_invariants(&mut self, on: bool) {
        self.check_invariants = on;
    }

    pub fn answer(&self) -> Answer {
        answer_of(&self.sys, &self.cfg)
    }

    fn mark_dirty(&mut self, id: MembraneId) {
        self.dirty.insert(id);
    }

    /// Marks a region whose object pool changed: the membrane itself and its
    /// children (send-in guards read the parent pool).
    fn mark_region_dirty(&mut self, region: RegionRef) {
        match region {
            RegionRef::Environment => {
                let root = self.cfg.root();
                self.mark_dirty(root);
            }
            RegionRef::Membrane(id) => {
                self.mark_dirty(id);
                let kids: Vec<MembraneId> =
                    self.cfg.membrane(id).children.iter().copied().collect();
                for k in kids {
                    self.mark_dirty(k);
                }
            }
        }
    }

    fn flush_dirty(&mut self) {
        let dirty = std::mem::take(&mut self.dirty);
        for id in dirty {
            if !self.cfg.contains(id) {
                self.candidates.remove(&id);
                continue;
            }
            let c = match_membrane(&self.sys, &self.cfg, id);
            if c.is_empty() {
                self.candidates.remove(&id);
            } else {
                self.candidates.insert(id, c);
            }
        }
        if self.check_invariants {
            let fresh = build_candidates(&self.sys, &self.cfg);
            assert_eq!(
                self.candidates, fresh,
                "incremental candidate cache diverged from full scan"
            );
        }
    }

    /// True iff no record is live and no instance is enabled.
    pub fn is_halted(&mut self) -> bool {
        if !self.live.is_empty() {
            return false;
        }
        self.flush_dirty();
        self.candidates.is_empty()
    }

    /// One clock step: finalize due records, start a maximal assignment,
    /// advance the clock.
    pub fn step(&mut self) -> StepReport {
        let now = self.clock;

        let mut completed = Vec::new();
        if let Some(due) = self.by_completion.remove(&now) {
            let phase_of = |runner: &Runner, rid: RecordId| {
                runner
                    .sys
                    .rule(runner.live[&rid].rule)
                    .kind
                    .phase()
            };
            let mut ordered: Vec<RecordId> = Vec::with_capacity(due.len());
            for phase in [Phase::Evolution, Phase::Structural, Phase::Separation] {
                for &rid in &due {
                    if phase_of(self, rid) == phase {
                        ordered.push(rid);
                    }
                }
            }
            for rid in ordered {
                self.complete(rid, &mut completed);
            }
        }

        self.flush_dirty();
        if let Some(mut obs) = self.observer.take() {
            obs(&self.cfg, now);
            self.observer = Some(obs);
        }

        // Starts move objects from regions into records; totals are
        // preserved between here and the end of the step.
        let total_mid = if self.check_invariants {
            let bound: u64 = self.live.values().map(|r| r.bound.total()).sum();
            Some(self.cfg.total_objects() + bound)
        } else {
            None
        };

        let asg = {
            let ctx = SelectionCtx {
                sys: &self.sys,
                cfg: &self.cfg,
                locks: &self.locks,
                evo_hosts: &self.evo_hosts,
                candidates: &self.candidates,
                policy: self.policy,
                next_record: self.next_record,
            };
            select_assignment(&ctx, &mut self.rng)
        };
        let Assignment { starts, deferrals } = asg;

        let mut started = Vec::with_capacity(starts.len());
        for b in starts {
            let duration = self.tm.duration(b.rule);
            let completion = now + duration;
            self.cfg.region_objects_mut(b.source).remove_all(&b.bound);
            self.mark_region_dirty(b.source);
            let label = self.cfg.membrane(b.membrane).label;
            let rec = InFlight {
                id: b.record,
                rule: b.rule,
                membrane: b.membrane,
                bound: b.bound.clone(),
                source: b.source,
                start: now,
                completion,
            };
            match self.sys.rule(b.rule).kind.phase() {
                Phase::Evolution => {
                    self.evo_hosts
                        .entry(b.membrane)
                        .or_default()
                        .insert(b.record);
                }
                _ => {
                    let prev = self.locks.insert(b.membrane, b.record);
                    assert!(prev.is_none(), "membrane double-locked");
                }
            }
            self.by_completion.entry(completion).or_default().push(b.record);
            self.live.insert(b.record, rec);
            self.next_record = b.record.0 + 1;
            started.push(StartInfo {
                record: b.record,
                rule: b.rule,
                membrane: b.membrane,
                label,
                bound: b.bound,
            });
        }

        let is_rs_step = !started.is_empty();
        if is_rs_step {
            self.rs_steps += 1;
        }
        if completed.is_empty() && started.is_empty() {
            assert!(
                !self.live.is_empty(),
                "stall: step with no completions and no starts on a halted state"
            );
        }

        if let Some(expected) = total_mid {
            let bound_after: u64 = self.live.values().map(|r| r.bound.total()).sum();
            assert_eq!(
                self.cfg.total_objects() + bound_after,
                expected,
                "starting instances must move objects, not create or drop them"
            );
            self.assert_maximal();
        }

        self.clock = now + 1;
        StepReport {
            step: now + 1,
            instant: now,
            started,
            completed,
            deferrals,
            is_rs_step,
        }
    }

    /// Runs to halt or the wall-step limit.
    pub fn run(&mut self, max_wall_steps: u64) -> RunResult {
        loop {
            if self.is_halted() {
                return RunResult {
                    answer: self.answer(),
                    halted: true,
                    wall_steps: self.clock,
                    rs_steps: self.rs_steps,
                };
            }
            if self.clock >= max_wall_steps {
                return RunResult {
                    answer: Answer::Undetermined,
                    halted: false,
                    wall_steps: self.clock,
                    rs_steps: self.rs_steps,
                };
            }
            self.step();
        }
    }

    fn complete(&mut self, rec_id: RecordId, out: &mut Vec<CompletionInfo>) {
        let sys = self.sys.clone();
        let rec = self.live.remove(&rec_id).expect("live record");
        let rule = sys.rule(rec.rule);
        let info = match &rule.kind {
            RuleKind::Evolve { to, .. } | RuleKind::CoopEvolve { to, .. } => {
                if let Some(set) = self.evo_hosts.get_mut(&rec.membrane) {
                    set.remove(&rec_id);
                    if set.is_empty() {
                        self.evo_hosts.remove(&rec.membrane);
                    }
                }
                // Host may have dissolved mid-flight; products land in the
                // region its contents forwarded to. The skin never
                // dissolves, so the destination is always a membrane.
                let dest = self.cfg.resolve_region(rec.membrane);
                self.cfg.deposit(dest, to);
                self.mark_region_dirty(dest);
                let (label, charge) = match dest {
                    RegionRef::Membrane(d) => {
                        let m = self.cfg.membrane(d);
                        (m.label, m.charge)
                    }
                    RegionRef::Environment => unreachable!("evolution host forwarded to a membrane"),
                };
                CompletionInfo {
                    record: rec_id,
                    rule: rec.rule,
                    membrane: rec.membrane,
                    label,
                    charge,
                    effect: Effect::Deposit {
                        dest,
                        dest_label: Some(label),
                        produced: to.clone(),
                    },
                }
            }
            RuleKind::SendIn {
                to_charge, inside, ..
            } => {
                self.locks.remove(&rec.membrane);
                let label = self.cfg.membrane(rec.membrane).label;
                {
                    let m = self.cfg.membrane_mut(rec.membrane);
                    m.objects.add(*inside, 1);
                    m.charge = *to_charge;
                }
                self.mark_region_dirty(RegionRef::Membrane(rec.membrane));
                if let Some(p) = self.cfg.membrane(rec.membrane).parent {
                    self.mark_dirty(p); // separation guards read child charges
                }
                CompletionInfo {
                    record: rec_id,
                    rule: rec.rule,
                    membrane: rec.membrane,
                    label,
                    charge: *to_charge,
                    effect: Effect::Deposit {
                        dest: RegionRef::Membrane(rec.membrane),
                        dest_label: Some(label),
                        produced: Multiset::singleton(*inside),
                    },
                }
            }
            RuleKind::SendOut {
                to_charge, outside, ..
            } => {
                self.locks.remove(&rec.membrane);
                let label = self.cfg.membrane(rec.membrane).label;
                let dest = self.cfg.parent_region(rec.membrane);
                let produced = Multiset::singleton(*outside);
                self.cfg.deposit(dest, &produced);
                self.mark_region_dirty(dest);
                self.cfg.membrane_mut(rec.membrane).charge = *to_charge;
                self.mark_region_dirty(RegionRef::Membrane(rec.membrane));
                if let Some(p) = self.cfg.membrane(rec.membrane).parent {
                    self.mark_dirty(p);
                }
                let dest_label = match dest {
                    RegionRef::Membrane(d) => Some(self.cfg.membrane(d).label),
                    RegionRef::Environment => None,
                };
                CompletionInfo {
                    record: rec_id,
                    rule: rec.rule,
                    membrane: rec.membrane,
                    label,
                    charge: *to_charge,
                    effect: Effect::Deposit {
                        dest,
                        dest_label,
                        produced,
                    },
                }
            }
            RuleKind::Dissolve { to, .. } => {
                self.locks.remove(&rec.membrane);
                let m = self.cfg.membrane(rec.membrane);
                let (label, charge) = (m.label, m.charge);
                let (parent, _grafted) = self.cfg.dissolve(rec.membrane);
                let residue = Multiset::singleton(*to);
                self.cfg.deposit(RegionRef::Membrane(parent), &residue);
                self.candidates.remove(&rec.membrane);
                self.mark_region_dirty(RegionRef::Membrane(parent));
                let into_label = self.cfg.membrane(parent).label;
                CompletionInfo {
                    record: rec_id,
                    rule: rec.rule,
                    membrane: rec.membrane,
                    label,
                    charge,
                    effect: Effect::Dissolved {
                        into: parent,
                        into_label,
                        residue,
                    },
                }
            }
            RuleKind::Divide { children, .. } => {
                self.locks.remove(&rec.membrane);
                debug_assert!(
                    !self.evo_hosts.contains_key(&rec.membrane),
                    "dividing a membrane with in-flight evolutions"
                );
                let m = self.cfg.membrane(rec.membrane);
                let (label, charge) = (m.label, m.charge);
                let kids = self.cfg.divide(rec.membrane, children);
                self.candidates.remove(&rec.membrane);
                if let Some(&first) = kids.first() {
                    if let Some(p) = self.cfg.membrane(first).parent {
                        self.mark_dirty(p);
                    }
                }
                for &k in &kids {
                    self.mark_dirty(k);
                }
                CompletionInfo {
                    record: rec_id,
                    rule: rec.rule,
                    membrane: rec.membrane,
                    label,
                    charge,
                    effect: Effect::Divided { children: kids },
                }
            }
            RuleKind::Separate {
                listed,
                inner_pos,
                inner_neg,
                parent_left,
                parent_right,
                ..
            } => {
                self.locks.remove(&rec.membrane);
                let m = self.cfg.membrane(rec.membrane);
                let (label, charge) = (m.label, m.charge);
                let mut to_left = Vec::new();
                let mut to_right = Vec::new();
                let mut to_dup = Vec::new();
                for &c in &m.children {
                    let cm = self.cfg.membrane(c);
                    if listed.contains(&cm.label) && cm.charge == Charge::Positive {
                        to_left.push(c);
                    } else if listed.contains(&cm.label) && cm.charge == Charge::Negative {
                        to_right.push(c);
                    } else {
                        // Neutral at start; charge drift during execution is
                        // tolerated — the membrane is still duplicated as-is.
                        to_dup.push(c);
                    }
                }
                for &c in &to_left {
                    self.cfg.membrane_mut(c).charge = *inner_pos;
                }
                for &c in &to_right {
                    self.cfg.membrane_mut(c).charge = *inner_neg;
                }
                let (left, right) = self.cfg.separate(
                    rec.membrane,
                    *parent_left,
                    *parent_right,
                    &to_left,
                    &to_right,
                    &to_dup,
                );
                // Evolutions hosted by the separated membrane follow the
                // copy that kept the original children.
                if let Some(set) = self.evo_hosts.remove(&rec.membrane) {
                    for rid in &set {
                        self.live.get_mut(rid).expect("live record").membrane = left;
                    }
                    self.evo_hosts.insert(left, set);
                }
                self.candidates.remove(&rec.membrane);
                self.mark_region_dirty(RegionRef::Membrane(left));
                self.mark_region_dirty(RegionRef::Membrane(right));
                if let Some(p) = self.cfg.membrane(left).parent {
                    self.mark_region_dirty(RegionRef::Membrane(p));
                }
                CompletionInfo {
                    record: rec_id,
                    rule: rec.rule,
                    membrane: rec.membrane,
                    label,
                    charge,
                    effect: Effect::Separated { left, right },
                }
            }
        };
        out.push(info);
    }

    /// After selection, no further instance may be startable on the residual
    /// configuration without violating locks (deferrals excepted).
    fn assert_maximal(&self) {
        let fresh = build_candidates(&self.sys, &self.cfg);
        for (mid, rules) in fresh {
            for rid in rules {
                let kind = &self.sys.rule(rid).kind;
                match kind.phase() {
                    Phase::Evolution => {
                        panic!(
                            "maximality violated: evolution {} still startable in {:?}",
                            self.sys.rule(rid).name,
                            mid
                        );
                    }
                    Phase::Structural | Phase::Separation => {
                        if !self.locks.contains_key(&mid) {
                            let deferrable = kind.is_divide() || kind.phase() == Phase::Separation;
                            assert!(
                                deferrable,
                                "maximality violated: {} startable on unlocked {:?}",
                                self.sys.rule(rid).name,
                                mid
                            );
                        }
                    }
                }
            }
        }
    }
}

