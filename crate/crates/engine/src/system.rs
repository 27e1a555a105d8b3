//! System definitions: alphabet, labels, membrane structure, rules, and the
//! validation step that produces an interned runtime `System`.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiset::Multiset;

/// Membrane label. The label set may include negative values (dummy labels).
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Label(pub i32);

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Membrane polarization.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub enum Charge {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Neutral,
}

impl Charge {
    pub fn glyph(self) -> &'static str {
        match self {
            Charge::Positive => "+",
            Charge::Negative => "-",
            Charge::Neutral => "0",
        }
    }
}

/// Interned object symbol (index into the system alphabet).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SymbolId(pub u32);

/// Rule identifier (index into the system rule list).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(pub u32);

// ---------------------------------------------------------------------------
// Serialized definition (string symbols), the canonical JSON document.
// ---------------------------------------------------------------------------

pub type NamedMultiset = std::collections::BTreeMap<String, u32>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildSpec {
    pub label: Label,
    pub charge: Charge,
    pub object: String,
}

/// One rule, tagged by kind. Symbols are alphabet strings here; validation
/// interns them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleSpec {
    /// `[a -> v]_h^α`
    Evolve {
        label: Label,
        charge: Charge,
        from: String,
        to: NamedMultiset,
    },
    /// `[u -> v]_h^α` with a multiset left side.
    CoopEvolve {
        label: Label,
        charge: Charge,
        from: NamedMultiset,
        to: NamedMultiset,
    },
    /// `a [ ]_h^α1 -> [b]_h^α2`
    SendIn {
        label: Label,
        from_charge: Charge,
        to_charge: Charge,
        outside: String,
        inside: String,
    },
    /// `[a]_h^α1 -> [ ]_h^α2 b`
    SendOut {
        label: Label,
        from_charge: Charge,
        to_charge: Charge,
        inside: String,
        outside: String,
    },
    /// `[a]_h^α -> b`
    Dissolve {
        label: Label,
        charge: Charge,
        from: String,
        to: String,
    },
    /// `[a]_h^α -> [a1]_h1^α1 ... [ad]_hd^αd`, d ≥ 2, elementary membranes only.
    Divide {
        label: Label,
        charge: Charge,
        from: String,
        children: Vec<ChildSpec>,
    },
    /// Separation of a membrane by the charges of its listed inner membranes.
    /// Positive listed children go to the left copy (charge `inner_pos`),
    /// negative ones to the right copy (charge `inner_neg`); remaining
    /// neutral membranes and the region objects are duplicated into both.
    Separate {
        label: Label,
        charge: Charge,
        listed: Vec<Label>,
        inner_pos: Charge,
        inner_neg: Charge,
        parent_left: Charge,
        parent_right: Charge,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleDef {
    pub id: u32,
    pub name: String,
    #[serde(flatten)]
    pub spec: RuleSpec,
}

/// Initial membrane tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembraneSpec {
    pub label: Label,
    pub charge: Charge,
    #[serde(default)]
    pub objects: NamedMultiset,
    #[serde(default)]
    pub children: Vec<MembraneSpec>,
}

/// The static system: alphabet, labels, initial tree, rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemDefinition {
    pub alphabet: Vec<String>,
    pub labels: Vec<Label>,
    pub skin: MembraneSpec,
    pub rules: Vec<RuleDef>,
}

impl SystemDefinition {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

// ---------------------------------------------------------------------------
// Runtime (interned) form.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum RuleKind {
    Evolve {
        label: Label,
        charge: Charge,
        from: SymbolId,
        to: Multiset,
    },
    CoopEvolve {
        label: Label,
        charge: Charge,
        from: Multiset,
        to: Multiset,
    },
    SendIn {
        label: Label,
        from_charge: Charge,
        to_charge: Charge,
        outside: SymbolId,
        inside: SymbolId,
    },
    SendOut {
        label: Label,
        from_charge: Charge,
        to_charge: Charge,
        inside: SymbolId,
        outside: SymbolId,
    },
    Dissolve {
        label: Label,
        charge: Charge,
        from: SymbolId,
        to: SymbolId,
    },
    Divide {
        label: Label,
        charge: Charge,
        from: SymbolId,
        children: Vec<(Label, Charge, SymbolId)>,
    },
    Separate {
        label: Label,
        charge: Charge,
        listed: BTreeSet<Label>,
        inner_pos: Charge,
        inner_neg: Charge,
        parent_left: Charge,
        parent_right: Charge,
    },
}

/// Phase used for bottom-up precedence: evolutions first, then the rules
/// that take a membrane as subject, separation last.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Phase {
    Evolution,
    Structural,
    Separation,
}

impl RuleKind {
    pub fn phase(&self) -> Phase {
        match self {
            RuleKind::Evolve { .. } | RuleKind::CoopEvolve { .. } => Phase::Evolution,
            RuleKind::Separate { .. } => Phase::Separation,
            _ => Phase::Structural,
        }
    }

    /// True for kinds that duplicate region contents on completion.
    pub fn is_divide(&self) -> bool {
        matches!(self, RuleKind::Divide { .. })
    }

    /// Guard on the subject (or host) membrane: label and charge.
    pub fn subject_guard(&self) -> (Label, Charge) {
        match *self {
            RuleKind::Evolve { label, charge, .. } => (label, charge),
            RuleKind::CoopEvolve { label, charge, .. } => (label, charge),
            RuleKind::SendIn {
                label, from_charge, ..
            } => (label, from_charge),
            RuleKind::SendOut {
                label, from_charge, ..
            } => (label, from_charge),
            RuleKind::Dissolve { label, charge, .. } => (label, charge),
            RuleKind::Divide { label, charge, .. } => (label, charge),
            RuleKind::Separate { label, charge, .. } => (label, charge),
        }
    }

    /// Number of symbols needed to write the rule: objects on both sides,
    /// membrane brackets, and polarizations.
    pub fn written_length(&self) -> u64 {
        match self {
            RuleKind::Evolve { to, .. } => 1 + to.total() + 1 + 1,
            RuleKind::CoopEvolve { from, to, .. } => from.total() + to.total() + 1 + 1,
            RuleKind::SendIn { .. } | RuleKind::SendOut { .. } => 1 + 1 + 2 + 2,
            RuleKind::Dissolve { .. } => 1 + 1 + 1 + 1,
            RuleKind::Divide { children, .. } => {
                let d = children.len() as u64;
                1 + d + (1 + d) + (1 + d)
            }
            RuleKind::Separate { listed, .. } => {
                let inner = (listed.len() as u64).max(1) * 2;
                let membranes = (1 + inner) + (2 + inner);
                membranes * 2
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub id: RuleId,
    pub name: String,
    pub kind: RuleKind,
}

/// Validated, interned system ready to execute.
#[derive(Clone, Debug)]
pub struct System {
    pub def: SystemDefinition,
    pub alphabet: Vec<String>,
    symbol_ids: HashMap<String, SymbolId>,
    pub rules: Vec<Rule>,
    /// Rules indexed by the (label, charge) guard of their subject membrane.
    subject_index: HashMap<(Label, Charge), Vec<RuleId>>,
    pub yes: Option<SymbolId>,
    pub no: Option<SymbolId>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("duplicate symbol `{0}` in alphabet")]
    DuplicateSymbol(String),
    #[error("duplicate label {0} in label set")]
    DuplicateLabel(Label),
    #[error("unknown symbol `{symbol}` in {place}")]
    UnknownSymbol { symbol: String, place: String },
    #[error("unknown label {label} in {place}")]
    UnknownLabel { label: Label, place: String },
    #[error("duplicate initial label {0}: initial membranes must be labelled injectively")]
    DuplicateInitialLabel(Label),
    #[error("rule {0}: cooperative left side must be non-empty")]
    EmptyCoopLeft(String),
    #[error("rule {0}: division must specify at least 2 children")]
    TooFewChildren(String),
    #[error("rule {0}: malformed separate groups (listed labels must be non-empty)")]
    MalformedSeparate(String),
    #[error("duplicate rule id {0}")]
    DuplicateRuleId(u32),
    #[error("rule ids must be dense 0..n (rule {got} at position {at})")]
    NonDenseRuleIds { got: u32, at: usize },
}

/// Checks all static invariants and interns symbols.
pub fn validate_system(def: &SystemDefinition) -> Result<System, ValidationError> {
    let mut symbol_ids = HashMap::new();
    for (i, name) in def.alphabet.iter().enumerate() {
        if symbol_ids
            .insert(name.clone(), SymbolId(i as u32))
            .is_some()
        {
            return Err(ValidationError::DuplicateSymbol(name.clone()));
        }
    }
    let mut label_set = BTreeSet::new();
    for &l in &def.labels {
        if !label_set.insert(l) {
            return Err(ValidationError::DuplicateLabel(l));
        }
    }

    let intern = |s: &str, place: &str| -> Result<SymbolId, ValidationError> {
        symbol_ids
            .get(s)
            .copied()
            .ok_or_else(|| ValidationError::UnknownSymbol {
                symbol: s.to_string(),
                place: place.to_string(),
            })
    };
    let intern_ms = |m: &NamedMultiset, place: &str| -> Result<Multiset, ValidationError> {
        let mut out = Multiset::new();
        for (s, &n) in m {
            out.add(intern(s, place)?, n);
        }
        Ok(out)
    };
    let check_label = |l: Label, place: &str| -> Result<(), ValidationError> {
        if label_set.contains(&l) {
            Ok(())
        } else {
            Err(ValidationError::UnknownLabel {
                label: l,
                place: place.to_string(),
            })
        }
    };

    // Initial tree: labels exist and are injective; objects are known.
    let mut seen_initial = BTreeSet::new();
    let mut stack = vec![&def.skin];
    while let Some(node) = stack.pop() {
        check_label(node.label, "initial membrane")?;
        if !seen_initial.insert(node.label) {
            return Err(ValidationError::DuplicateInitialLabel(node.label));
        }
        intern_ms(&node.objects, "initial multiset")?;
        stack.extend(node.children.iter());
    }

    let mut rules = Vec::with_capacity(def.rules.len());
    let mut seen_ids = BTreeSet::new();
    for (pos, rd) in def.rules.iter().enumerate() {
        if !seen_ids.insert(rd.id) {
            return Err(ValidationError::DuplicateRuleId(rd.id));
        }
        if rd.id as usize != pos {
            return Err(ValidationError::NonDenseRuleIds { got: rd.id, at: pos });
        }
        let place = format!("rule {}", rd.name);
        let kind = match &rd.spec {
            RuleSpec::Evolve {
                label,
                charge,
                from,
                to,
            } => {
                check_label(*label, &place)?;
                RuleKind::Evolve {
                    label: *label,
                    charge: *charge,
                    from: intern(from, &place)?,
                    to: intern_ms(to, &place)?,
                }
            }
            RuleSpec::CoopEvolve {
                label,
                charge,
                from,
                to,
            } => {
                check_label(*label, &place)?;
                let from = intern_ms(from, &place)?;
                if from.is_empty() {
                    return Err(ValidationError::EmptyCoopLeft(rd.name.clone()));
                }
                RuleKind::CoopEvolve {
                    label: *label,
                    charge: *charge,
                    from,
                    to: intern_ms(to, &place)?,
                }
            }
            RuleSpec::SendIn {
                label,
                from_charge,
                to_charge,
                outside,
                inside,
            } => {
                check_label(*label, &place)?;
                RuleKind::SendIn {
                    label: *label,
                    from_charge: *from_charge,
                    to_charge: *to_charge,
                    outside: intern(outside, &place)?,
                    inside: intern(inside, &place)?,
                }
            }
            RuleSpec::SendOut {
                label,
                from_charge,
                to_charge,
                inside,
                outside,
            } => {
                check_label(*label, &place)?;
                RuleKind::SendOut {
                    label: *label,
                    from_charge: *from_charge,
                    to_charge: *to_charge,
                    inside: intern(inside, &place)?,
                    outside: intern(outside, &place)?,
                }
            }
            RuleSpec::Dissolve {
                label,
                charge,
                from,
                to,
            } => {
                check_label(*label, &place)?;
                RuleKind::Dissolve {
                    label: *label,
                    charge: *charge,
                    from: intern(from, &place)?,
                    to: intern(to, &place)?,
                }
            }
            RuleSpec::Divide {
                label,
                charge,
                from,
                children,
            } => {
                check_label(*label, &place)?;
                if children.len() < 2 {
                    return Err(ValidationError::TooFewChildren(rd.name.clone()));
                }
                let mut kids = Vec::with_capacity(children.len());
                for c in children {
                    check_label(c.label, &place)?;
                    kids.push((c.label, c.charge, intern(&c.object, &place)?));
                }
                RuleKind::Divide {
                    label: *label,
                    charge: *charge,
                    from: intern(from, &place)?,
                    children: kids,
                }
            }
            RuleSpec::Separate {
                label,
                charge,
                listed,
                inner_pos,
                inner_neg,
                parent_left,
                parent_right,
            } => {
                check_label(*label, &place)?;
                if listed.is_empty() {
                    return Err(ValidationError::MalformedSeparate(rd.name.clone()));
                }
                for &l in listed {
                    check_label(l, &place)?;
                }
                RuleKind::Separate {
                    label: *label,
                    charge: *charge,
                    listed: listed.iter().copied().collect(),
                    inner_pos: *inner_pos,
                    inner_neg: *inner_neg,
                    parent_left: *parent_left,
                    parent_right: *parent_right,
                }
            }
        };
        rules.push(Rule {
            id: RuleId(rd.id),
            name: rd.name.clone(),
            kind,
        });
    }

    let mut subject_index: HashMap<(Label, Charge), Vec<RuleId>> = HashMap::new();
    for r in &rules {
        subject_index
            .entry(r.kind.subject_guard())
            .or_default()
            .push(r.id);
    }
    for v in subject_index.values_mut() {
        v.sort();
    }

    let yes = symbol_ids.get("yes").copied();
    let no = symbol_ids.get("no").copied();

    Ok(System {
        def: def.clone(),
        alphabet: def.alphabet.clone(),
        symbol_ids,
        rules,
        subject_index,
        yes,
        no,
    })
}

impl System {
    pub fn symbol(&self, name: &str) -> Option<SymbolId> {
        self.symbol_ids.get(name).copied()
    }

    pub fn symbol_name(&self, id: SymbolId) -> &str {
        &self.alphabet[id.0 as usize]
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.0 as usize]
    }

    pub fn rule_by_name(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn rules_for(&self, label: Label, charge: Charge) -> &[RuleId] {
        self.subject_index
            .get(&(label, charge))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn intern_named(&self, m: &NamedMultiset) -> Multiset {
        m.iter()
            .map(|(s, &n)| (self.symbol(s).expect("validated symbol"), n))
            .collect()
    }
}
