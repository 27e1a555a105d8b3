//! Structured trace events, one JSON object per line with a stable field
//! order.

use serde::Serialize;

use crate::config::RegionRef;
use crate::runner::{Effect, StepReport};
use crate::system::{RuleKind, System};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceDest {
    pub region: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub membrane_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<i32>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TraceEvent {
    pub step: u64,
    pub instant: u64,
    pub event: String,
    pub rule_id: u32,
    pub rule: String,
    pub membrane_id: u64,
    pub label: i32,
    pub charge: String,
    pub bound: std::collections::BTreeMap<String, u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub produced: Option<std::collections::BTreeMap<String, u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dest: Option<TraceDest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocked_by: Option<u64>,
}

fn dest_json(sys: &System, dest: RegionRef, label: Option<crate::system::Label>) -> TraceDest {
    let _ = sys;
    match dest {
        RegionRef::Environment => TraceDest {
            region: "environment".into(),
            membrane_id: None,
            label: None,
        },
        RegionRef::Membrane(id) => TraceDest {
            region: "membrane".into(),
            membrane_id: Some(id.0),
            label: label.map(|l| l.0),
        },
    }
}

/// Expands one step report into trace events: starts, completions (typed by
/// structural effect), and deferrals.
pub fn events_of_report(sys: &System, report: &StepReport) -> Vec<TraceEvent> {
    let mut out = Vec::new();
    for c in &report.completed {
        let rule = sys.rule(c.rule);
        let (event, produced, dest, children) = match &c.effect {
            Effect::Deposit {
                dest,
                dest_label,
                produced,
            } => (
                "complete",
                Some(produced.to_named(&sys.alphabet)),
                Some(dest_json(sys, *dest, *dest_label)),
                None,
            ),
            Effect::Dissolved {
                into,
                into_label,
                residue,
            } => (
                "dissolve",
                Some(residue.to_named(&sys.alphabet)),
                Some(dest_json(
                    sys,
                    RegionRef::Membrane(*into),
                    Some(*into_label),
                )),
                None,
            ),
            Effect::Divided { children } => (
                "divide",
                None,
                None,
                Some(children.iter().map(|m| m.0).collect::<Vec<u64>>()),
            ),
            Effect::Separated { left, right } => {
                ("separate", None, None, Some(vec![left.0, right.0]))
            }
        };
        let bound = bound_of(sys, c.rule);
        out.push(TraceEvent {
            step: report.step,
            instant: report.instant,
            event: event.into(),
            rule_id: c.rule.0,
            rule: rule.name.clone(),
            membrane_id: c.membrane.0,
            label: c.label.0,
            charge: c.charge.glyph().into(),
            bound,
            produced,
            dest,
            children,
            blocked_by: None,
        });
    }
    for s in &report.started {
        out.push(TraceEvent {
            step: report.step,
            instant: report.instant,
            event: "start".into(),
            rule_id: s.rule.0,
            rule: sys.rule(s.rule).name.clone(),
            membrane_id: s.membrane.0,
            label: s.label.0,
            charge: "".into(),
            bound: s.bound.to_named(&sys.alphabet),
            produced: None,
            dest: None,
            children: None,
            blocked_by: None,
        });
    }
    for d in &report.deferrals {
        out.push(TraceEvent {
            step: report.step,
            instant: report.instant,
            event: "deferral".into(),
            rule_id: d.rule.0,
            rule: sys.rule(d.rule).name.clone(),
            membrane_id: d.membrane.0,
            label: 0,
            charge: "".into(),
            bound: Default::default(),
            produced: None,
            dest: None,
            children: None,
            blocked_by: Some(d.blocked_by.0),
        });
    }
    out
}

fn bound_of(sys: &System, rule: crate::system::RuleId) -> std::collections::BTreeMap<String, u32> {
    use crate::multiset::Multiset;
    let ms = match &sys.rule(rule).kind {
        RuleKind::Evolve { from, .. } => Multiset::singleton(*from),
        RuleKind::CoopEvolve { from, .. } => from.clone(),
        RuleKind::SendIn { outside, .. } => Multiset::singleton(*outside),
        RuleKind::SendOut { inside, .. } => Multiset::singleton(*inside),
        RuleKind::Dissolve { from, .. } => Multiset::singleton(*from),
        RuleKind::Divide { from, .. } => Multiset::singleton(*from),
        RuleKind::Separate { .. } => Multiset::new(),
    };
    ms.to_named(&sys.alphabet)
}

/// One JSON line per event.
pub fn encode_trace_event(event: &TraceEvent) -> String {
    serde_json::to_string(event).expect("trace event serializes")
}
