//! Rule matching and the per-step assignment of rule instances under
//! nondeterministic maximal parallelism with bottom-up precedence.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Configuration, MembraneId, RegionRef};
use crate::multiset::Multiset;
use crate::system::{Charge, Phase, RuleId, RuleKind, System};

/// Identifier of a started rule instance (in-flight record).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RecordId(pub u64);

/// How ties between competing instances are broken.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SchedulePolicy {
    /// Uniform choice by the seeded generator, iterating instances in
    /// canonical (rule id, membrane id) order.
    Seeded,
    /// Deterministic order matching the construction's narrative sequencing:
    /// communication and dissolution before division, then lowest rule id.
    PaperOrder,
}

/// A selected instance: rule, subject (or host) membrane, and the objects
/// bound out of their source region for the duration of the execution.
#[derive(Clone, Debug)]
pub struct Binding {
    pub record: RecordId,
    pub rule: RuleId,
    pub membrane: MembraneId,
    pub bound: Multiset,
    pub source: RegionRef,
}

#[derive(Clone, Copy, Debug)]
pub struct DeferralInfo {
    pub rule: RuleId,
    pub membrane: MembraneId,
    pub blocked_by: RecordId,
}

#[derive(Clone, Debug, Default)]
pub struct Assignment {
    pub starts: Vec<Binding>,
    pub deferrals: Vec<DeferralInfo>,
}

/// Rules whose guard and object requirements match on this membrane now,
/// ignoring locks and in-flight state.
pub fn match_membrane(sys: &System, cfg: &Configuration, mid: MembraneId) -> Vec<RuleId> {
    let m = cfg.membrane(mid);
    let mut out = Vec::new();
    for &rid in sys.rules_for(m.label, m.charge) {
        let ok = match &sys.rule(rid).kind {
            RuleKind::Evolve { from, .. } => m.objects.count(*from) >= 1,
            RuleKind::CoopEvolve { from, .. } => m.objects.contains(from),
            RuleKind::SendIn { outside, .. } => {
                cfg.region_objects(cfg.parent_region(mid)).count(*outside) >= 1
            }
            RuleKind::SendOut { inside, .. } => m.objects.count(*inside) >= 1,
            RuleKind::Dissolve { from, .. } => {
                m.parent.is_some() && m.objects.count(*from) >= 1
            }
            RuleKind::Divide { from, .. } => {
                m.parent.is_some() && m.children.is_empty() && m.objects.count(*from) >= 1
            }
            RuleKind::Separate { listed, .. } => {
                m.parent.is_some() && separate_guard(cfg, mid, listed)
            }
        };
        if ok {
            out.push(rid);
        }
    }
    out
}

/// Separation applies when at least one listed child of each charge group is
/// present and every other child is neutral.
fn separate_guard(cfg: &Configuration, mid: MembraneId, listed: &BTreeSet<crate::system::Label>) -> bool {
    let m = cfg.membrane(mid);
    let mut pos = false;
    let mut neg = false;
    for &c in &m.children {
        let cm = cfg.membrane(c);
        if listed.contains(&cm.label) && cm.charge == Charge::Positive {
            pos = true;
        } else if listed.contains(&cm.label) && cm.charge == Charge::Negative {
            neg = true;
        } else if cm.charge != Charge::Neutral {
            return false;
        }
    }
    pos && neg
}

/// Full candidate scan over every membrane.
pub fn build_candidates(
    sys: &System,
    cfg: &Configuration,
) -> BTreeMap<MembraneId, Vec<RuleId>> {
    let mut out = BTreeMap::new();
    for mid in cfg.ids() {
        let c = match_membrane(sys, cfg, mid);
        if !c.is_empty() {
            out.insert(mid, c);
        }
    }
    out
}

/// Every rule instance whose guard matches and whose subject membrane is not
/// locked by a live structural record. Evolution hosts are never locked.
pub fn enabled_instances(
    sys: &System,
    cfg: &Configuration,
    locks: &BTreeMap<MembraneId, RecordId>,
) -> Vec<(RuleId, MembraneId)> {
    let mut out = Vec::new();
    for (mid, rules) in build_candidates(sys, cfg) {
        for rid in rules {
            if sys.rule(rid).kind.phase() != Phase::Evolution && locks.contains_key(&mid) {
                continue;
            }
            out.push((rid, mid));
        }
    }
    out
}

/// Inputs to selection beyond the configuration itself: live locks, live
/// evolution records per host region, and the candidate cache.
pub struct SelectionCtx<'a> {
    pub sys: &'a System,
    pub cfg: &'a Configuration,
    pub locks: &'a BTreeMap<MembraneId, RecordId>,
    pub evo_hosts: &'a BTreeMap<MembraneId, BTreeSet<RecordId>>,
    pub candidates: &'a BTreeMap<MembraneId, Vec<RuleId>>,
    pub policy: SchedulePolicy,
    /// First record id to assign to this step's bindings.
    pub next_record: u64,
}

struct Pools<'a> {
    cfg: &'a Configuration,
    scratch: BTreeMap<RegionRef, Multiset>,
}

impl<'a> Pools<'a> {
    fn new(cfg: &'a Configuration) -> Self {
        Pools {
            cfg,
            scratch: BTreeMap::new(),
        }
    }

    fn get(&mut self, region: RegionRef) -> &mut Multiset {
        let cfg = self.cfg;
        self.scratch
            .entry(region)
            .or_insert_with(|| cfg.region_objects(region).clone())
    }
}

fn kind_rank(kind: &RuleKind) -> u8 {
    if kind.is_divide() {
        1
    } else {
        0
    }
}

/// Computes a maximal multiset of simultaneously startable instances.
///
/// Evolution instances are fixed first with maximal multiplicity per region,
/// then one structural rule per free membrane, separations last. A division
/// or separation that would duplicate in-flight work is deferred rather than
/// started. Deferred instances are excluded from the maximality requirement.
pub fn select_assignment(ctx: &SelectionCtx, rng: &mut ChaCha8Rng) -> Assignment {
    let mut asg = Assignment::default();
    let mut pools = Pools::new(ctx.cfg);
    let mut next = ctx.next_record;
    // Hosts of evolutions started in this step, with a witness record.
    let mut fresh_evo: BTreeMap<MembraneId, RecordId> = BTreeMap::new();
    let mut fresh_locks: BTreeMap<MembraneId, RecordId> = BTreeMap::new();

    // Phase 1: evolutions, maximal multiplicity per region.
    for (&mid, rules) in ctx.candidates {
        let mut evo: Vec<RuleId> = rules
            .iter()
            .copied()
            .filter(|&r| ctx.sys.rule(r).kind.phase() == Phase::Evolution)
            .collect();
        if evo.is_empty() {
            continue;
        }
        if ctx.policy == SchedulePolicy::Seeded {
            evo.shuffle(rng);
        }
        for rid in evo {
            let lhs = match &ctx.sys.rule(rid).kind {
                RuleKind::Evolve { from, .. } => Multiset::singleton(*from),
                RuleKind::CoopEvolve { from, .. } => from.clone(),
                _ => unreachable!(),
            };
            let region = RegionRef::Membrane(mid);
            while pools.get(region).contains(&lhs) {
                pools.get(region).remove_all(&lhs);
                let record = RecordId(next);
                next += 1;
                fresh_evo.entry(mid).or_insert(record);
                asg.starts.push(Binding {
                    record,
                    rule: rid,
                    membrane: mid,
                    bound: lhs.clone(),
                    source: region,
                });
            }
        }
    }

    // Phase 2: send-in/out, dissolution, division — one per free membrane.
    for (&mid, rules) in ctx.candidates {
        if ctx.locks.contains_key(&mid) || fresh_locks.contains_key(&mid) {
            continue;
        }
        let mut startable: Vec<RuleId> = Vec::new();
        for &rid in rules {
            let kind = &ctx.sys.rule(rid).kind;
            if kind.phase() != Phase::Structural {
                continue;
            }
            let available = match kind {
                RuleKind::SendIn { outside, .. } => {
                    let src = ctx.cfg.parent_region(mid);
                    pools.get(src).count(*outside) >= 1
                }
                RuleKind::SendOut { inside, .. } => {
                    pools.get(RegionRef::Membrane(mid)).count(*inside) >= 1
                }
                RuleKind::Dissolve { from, .. } | RuleKind::Divide { from, .. } => {
                    pools.get(RegionRef::Membrane(mid)).count(*from) >= 1
                }
                _ => unreachable!(),
            };
            if !available {
                continue;
            }
            if kind.is_divide() {
                // Dividing a membrane duplicates its region; holding it back
                // while evolutions are running inside keeps the duplication
                // well-defined.
                let blocker = ctx
                    .evo_hosts
                    .get(&mid)
                    .and_then(|s| s.iter().next().copied())
                    .or_else(|| fresh_evo.get(&mid).copied());
                if let Some(blocked_by) = blocker {
                    asg.deferrals.push(DeferralInfo {
                        rule: rid,
                        membrane: mid,
                        blocked_by,
                    });
                    continue;
                }
            }
            startable.push(rid);
        }
        if startable.is_empty() {
            continue;
        }
        let rid = pick(&startable, ctx, rng);
        let kind = &ctx.sys.rule(rid).kind;
        let (bound, source) = match kind {
            RuleKind::SendIn { outside, .. } => {
                (Multiset::singleton(*outside), ctx.cfg.parent_region(mid))
            }
            RuleKind::SendOut { inside, .. } => {
                (Multiset::singleton(*inside), RegionRef::Membrane(mid))
            }
            RuleKind::Dissolve { from, .. } | RuleKind::Divide { from, .. } => {
                (Multiset::singleton(*from), RegionRef::Membrane(mid))
            }
            _ => unreachable!(),
        };
        pools.get(source).remove_all(&bound);
        let record = RecordId(next);
        next += 1;
        fresh_locks.insert(mid, record);
        asg.starts.push(Binding {
            record,
            rule: rid,
            membrane: mid,
            bound,
            source,
        });
    }

    // Phase 3: separations.
    for (&mid, rules) in ctx.candidates {
        if ctx.locks.contains_key(&mid) || fresh_locks.contains_key(&mid) {
            continue;
        }
        let seps: Vec<RuleId> = rules
            .iter()
            .copied()
            .filter(|&r| ctx.sys.rule(r).kind.phase() == Phase::Separation)
            .filter(|&r| {
                if let RuleKind::Separate { listed, .. } = &ctx.sys.rule(r).kind {
                    separate_guard(ctx.cfg, mid, listed)
                } else {
                    false
                }
            })
            .collect();
        if seps.is_empty() {
            continue;
        }
        // Duplication hazard: in-flight work hosted in this region or inside
        // any child that the separation would duplicate.
        let mut blocker = ctx
            .evo_hosts
            .get(&mid)
            .and_then(|s| s.iter().next().copied())
            .or_else(|| fresh_evo.get(&mid).copied());
        if blocker.is_none() {
            if let RuleKind::Separate { listed, .. } = &ctx.sys.rule(seps[0]).kind {
                'outer: for &c in &ctx.cfg.membrane(mid).children {
                    let cm = ctx.cfg.membrane(c);
                    let grouped = listed.contains(&cm.label)
                        && (cm.charge == Charge::Positive || cm.charge == Charge::Negative);
                    if grouped {
                        continue; // moved, not duplicated: records travel with it
                    }
                    let mut stack = vec![c];
                    while let Some(x) = stack.pop() {
                        let found = ctx
                            .locks
                            .get(&x)
                            .or_else(|| fresh_locks.get(&x))
                            .copied()
                            .or_else(|| {
                                ctx.evo_hosts
                                    .get(&x)
                                    .and_then(|s| s.iter().next().copied())
                            })
                            .or_else(|| fresh_evo.get(&x).copied());
                        if let Some(b) = found {
                            blocker = Some(b);
                            break 'outer;
                        }
                        stack.extend(ctx.cfg.membrane(x).children.iter().copied());
                    }
                }
            }
        }
        if let Some(blocked_by) = blocker {
            for rid in seps {
                asg.deferrals.push(DeferralInfo {
                    rule: rid,
                    membrane: mid,
                    blocked_by,
                });
            }
            continue;
        }
        let rid = pick(&seps, ctx, rng);
        let record = RecordId(next);
        next += 1;
        fresh_locks.insert(mid, record);
        asg.starts.push(Binding {
            record,
            rule: rid,
            membrane: mid,
            bound: Multiset::new(),
            source: RegionRef::Membrane(mid),
        });
    }

    asg
}

fn pick(cands: &[RuleId], ctx: &SelectionCtx, rng: &mut ChaCha8Rng) -> RuleId {
    debug_assert!(!cands.is_empty());
    match ctx.policy {
        SchedulePolicy::Seeded => {
            if cands.len() == 1 {
                cands[0]
            } else {
                cands[rng.gen_range(0..cands.len())]
            }
        }
        SchedulePolicy::PaperOrder => cands
            .iter()
            .copied()
            .min_by_key(|&r| (kind_rank(&ctx.sys.rule(r).kind), r))
            .unwrap(),
    }
}
