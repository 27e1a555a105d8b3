//! Live configuration: the membrane tree, region contents and the environment.

use std::collections::{BTreeMap, BTreeSet};

use crate::multiset::Multiset;
use crate::system::{Charge, Label, System};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MembraneId(pub u64);

/// A region an object can live in or be deposited to.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum RegionRef {
    Environment,
    Membrane(MembraneId),
}

#[derive(Clone, Debug)]
pub struct Membrane {
    pub id: MembraneId,
    pub label: Label,
    pub charge: Charge,
    pub objects: Multiset,
    pub children: BTreeSet<MembraneId>,
    pub parent: Option<MembraneId>,
}

/// Membrane tree plus environment. Ids are never reused within a run.
#[derive(Clone, Debug)]
pub struct Configuration {
    membranes: BTreeMap<MembraneId, Membrane>,
    root: MembraneId,
    pub environment: Multiset,
    next_id: u64,
    /// Where dissolved membranes forwarded their region to, for deposits
    /// completing after the host was dissolved.
    dissolved_into: BTreeMap<MembraneId, MembraneId>,
}

impl Configuration {
    pub fn from_system(sys: &System) -> Self {
        let mut cfg = Configuration {
            membranes: BTreeMap::new(),
            root: MembraneId(0),
            environment: Multiset::new(),
            next_id: 0,
            dissolved_into: BTreeMap::new(),
        };
        let root = cfg.instantiate(sys, &sys.def.skin, None);
        cfg.root = root;
        cfg
    }

    fn instantiate(
        &mut self,
        sys: &System,
        spec: &crate::system::MembraneSpec,
        parent: Option<MembraneId>,
    ) -> MembraneId {
        let id = self.fresh_id();
        let m = Membrane {
            id,
            label: spec.label,
            charge: spec.charge,
            objects: sys.intern_named(&spec.objects),
            children: BTreeSet::new(),
            parent,
        };
        self.membranes.insert(id, m);
        for child in &spec.children {
            let cid = self.instantiate(sys, child, Some(id));
            self.membranes.get_mut(&id).unwrap().children.insert(cid);
        }
        id
    }

    pub fn fresh_id(&mut self) -> MembraneId {
        let id = MembraneId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn root(&self) -> MembraneId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.membranes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membranes.is_empty()
    }

    pub fn contains(&self, id: MembraneId) -> bool {
        self.membranes.contains_key(&id)
    }

    pub fn membrane(&self, id: MembraneId) -> &Membrane {
        &self.membranes[&id]
    }

    pub fn membrane_mut(&mut self, id: MembraneId) -> &mut Membrane {
        self.membranes.get_mut(&id).expect("live membrane")
    }

    /// All live membrane ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = MembraneId> + '_ {
        self.membranes.keys().copied()
    }

    pub fn membranes(&self) -> impl Iterator<Item = &Membrane> + '_ {
        self.membranes.values()
    }

    /// The region surrounding a membrane: its parent, or the environment for
    /// the skin.
    pub fn parent_region(&self, id: MembraneId) -> RegionRef {
        match self.membrane(id).parent {
            Some(p) => RegionRef::Membrane(p),
            None => RegionRef::Environment,
        }
    }

    pub fn region_objects(&self, region: RegionRef) -> &Multiset {
        match region {
            RegionRef::Environment => &self.environment,
            RegionRef::Membrane(id) => &self.membrane(id).objects,
        }
    }

    pub fn region_objects_mut(&mut self, region: RegionRef) -> &mut Multiset {
        match region {
            RegionRef::Environment => &mut self.environment,
            RegionRef::Membrane(id) => &mut self.membrane_mut(id).objects,
        }
    }

    /// Resolves a possibly-dissolved membrane to the region its contents
    /// forwarded to. The skin never dissolves, so the walk terminates.
    pub fn resolve_region(&self, id: MembraneId) -> RegionRef {
        let mut cur = id;
        loop {
            if self.membranes.contains_key(&cur) {
                return RegionRef::Membrane(cur);
            }
            match self.dissolved_into.get(&cur) {
                Some(&next) => cur = next,
                None => panic!("membrane {cur:?} vanished without forwarding"),
            }
        }
    }

    pub fn deposit(&mut self, region: RegionRef, objects: &Multiset) {
        self.region_objects_mut(region).add_all(objects);
    }

    /// Removes the membrane, grafting its objects and children onto the
    /// parent region. Returns the parent and the grafted children.
    pub fn dissolve(&mut self, id: MembraneId) -> (MembraneId, Vec<MembraneId>) {
        let m = self.membranes.remove(&id).expect("live membrane");
        let parent = m.parent.expect("the skin cannot dissolve");
        let kids: Vec<MembraneId> = m.children.iter().copied().collect();
        let p = self.membrane_mut(parent);
        p.children.remove(&id);
        p.objects.add_all(&m.objects);
        for &c in &kids {
            p.children.insert(c);
        }
        for &c in &kids {
            self.membrane_mut(c).parent = Some(parent);
        }
        self.dissolved_into.insert(id, parent);
        (parent, kids)
    }

    /// Replaces an elementary membrane by fresh children, duplicating the
    /// residual objects into every copy and adding each child's own object.
    pub fn divide(
        &mut self,
        id: MembraneId,
        children: &[(Label, Charge, crate::system::SymbolId)],
    ) -> Vec<MembraneId> {
        let m = self.membranes.remove(&id).expect("live membrane");
        assert!(m.children.is_empty(), "dividing a non-elementary membrane");
        let parent = m.parent.expect("the skin cannot divide");
        self.membrane_mut(parent).children.remove(&id);
        let mut out = Vec::with_capacity(children.len());
        for &(label, charge, object) in children {
            let cid = self.fresh_id();
            let mut objects = m.objects.clone();
            objects.add(object, 1);
            self.membranes.insert(
                cid,
                Membrane {
                    id: cid,
                    label,
                    charge,
                    objects,
                    children: BTreeSet::new(),
                    parent: Some(parent),
                },
            );
            self.membrane_mut(parent).children.insert(cid);
            out.push(cid);
        }
        out
    }

    /// Deep-copies a subtree under `new_parent`, assigning fresh ids.
    fn clone_subtree(&mut self, src: MembraneId, new_parent: MembraneId) -> MembraneId {
        let (label, charge, objects, kids) = {
            let m = self.membrane(src);
            (
                m.label,
                m.charge,
                m.objects.clone(),
                m.children.iter().copied().collect::<Vec<_>>(),
            )
        };
        let id = self.fresh_id();
        self.membranes.insert(
            id,
            Membrane {
                id,
                label,
                charge,
                objects,
                children: BTreeSet::new(),
                parent: Some(new_parent),
            },
        );
        for k in kids {
            let ck = self.clone_subtree(k, id);
            self.membrane_mut(id).children.insert(ck);
        }
        id
    }

    /// Separation: replaces `id` by two copies under its parent. Children in
    /// `to_left`/`to_right` are moved (ids preserved); `to_dup` subtrees stay
    /// in the left copy and are cloned into the right one. Region objects are
    /// duplicated into both copies.
    pub fn separate(
        &mut self,
        id: MembraneId,
        left_charge: Charge,
        right_charge: Charge,
        to_left: &[MembraneId],
        to_right: &[MembraneId],
        to_dup: &[MembraneId],
    ) -> (MembraneId, MembraneId) {
        let m = self.membranes.remove(&id).expect("live membrane");
        let parent = m.parent.expect("the skin cannot separate");
        self.membrane_mut(parent).children.remove(&id);

        let left = self.fresh_id();
        self.membranes.insert(
            left,
            Membrane {
                id: left,
                label: m.label,
                charge: left_charge,
                objects: m.objects.clone(),
                children: BTreeSet::new(),
                parent: Some(parent),
            },
        );
        let right = self.fresh_id();
        self.membranes.insert(
            right,
            Membrane {
                id: right,
                label: m.label,
                charge: right_charge,
                objects: m.objects,
                children: BTreeSet::new(),
                parent: Some(parent),
            },
        );
        self.membrane_mut(parent).children.insert(left);
        self.membrane_mut(parent).children.insert(right);

        for &c in to_left.iter().chain(to_dup) {
            self.membrane_mut(c).parent = Some(left);
            self.membrane_mut(left).children.insert(c);
        }
        for &c in to_right {
            self.membrane_mut(c).parent = Some(right);
            self.membrane_mut(right).children.insert(c);
        }
        for &c in to_dup {
            let clone = self.clone_subtree(c, right);
            self.membrane_mut(right).children.insert(clone);
        }
        (left, right)
    }

    /// Total number of objects across all regions and the environment.
    pub fn total_objects(&self) -> u64 {
        self.environment.total()
            + self
                .membranes
                .values()
                .map(|m| m.objects.total())
                .sum::<u64>()
    }

    pub fn count_labelled(&self, label: Label) -> usize {
        self.membranes.values().filter(|m| m.label == label).count()
    }

    /// Id-free canonical form: nested membranes sorted structurally, used to
    /// compare configurations across runs with different id sequences.
    pub fn structural_digest(&self, alphabet: &[String]) -> String {
        fn render(cfg: &Configuration, id: MembraneId, alphabet: &[String]) -> String {
            let m = cfg.membrane(id);
            let mut kids: Vec<String> = m
                .children
                .iter()
                .map(|&c| render(cfg, c, alphabet))
                .collect();
            kids.sort();
            format!(
                "[{}^{} {:?} ({})]",
                m.label,
                m.charge.glyph(),
                m.objects.to_named(alphabet),
                kids.join(",")
            )
        }
        format!(
            "env {:?} | {}",
            self.environment.to_named(alphabet),
            render(self, self.root, alphabet)
        )
    }
}
