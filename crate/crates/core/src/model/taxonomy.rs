use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::ModelError;

/// Event types with their supertype DAG and the roles each type permits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventTypeTaxonomy {
    types: BTreeSet<String>,
    parents: BTreeMap<String, BTreeSet<String>>,
    children: BTreeMap<String, BTreeSet<String>>,
    roles_by_type: BTreeMap<String, BTreeSet<String>>,
    role_vocabulary: BTreeSet<String>,
}

impl EventTypeTaxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_type(&mut self, id: impl Into<String>) -> Result<(), ModelError> {
        let id = id.into();
        if !self.types.insert(id.clone()) {
            return Err(ModelError::Duplicate { kind: "type", id });
        }
        Ok(())
    }

    pub fn add_role(&mut self, label: impl Into<String>) -> Result<(), ModelError> {
        let label = label.into();
        if !self.role_vocabulary.insert(label.clone()) {
            return Err(ModelError::Duplicate { kind: "role", id: label });
        }
        Ok(())
    }

    /// Adds a child→parent edge. Rejects the edge if it would close a cycle.
    pub fn add_supertype(&mut self, child: &str, parent: &str) -> Result<(), ModelError> {
        self.require_type(child)?;
        self.require_type(parent)?;
        if child == parent || self.descendants(child).contains(parent) {
            return Err(ModelError::TaxonomyCycle { child: child.to_owned(), parent: parent.to_owned() });
        }
        self.parents.entry(child.to_owned()).or_default().insert(parent.to_owned());
        self.children.entry(parent.to_owned()).or_default().insert(child.to_owned());
        Ok(())
    }

    pub fn set_roles<I, S>(&mut self, ty: &str, roles: I) -> Result<(), ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.require_type(ty)?;
        let mut set = BTreeSet::new();
        for r in roles {
            let r = r.into();
            if !self.role_vocabulary.contains(&r) {
                return Err(ModelError::UnknownRole(r));
            }
            set.insert(r);
        }
        self.roles_by_type.entry(ty.to_owned()).or_default().extend(set);
        Ok(())
    }

    pub fn contains(&self, ty: &str) -> bool {
        self.types.contains(ty)
    }

    pub fn has_role(&self, label: &str) -> bool {
        self.role_vocabulary.contains(label)
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.types.iter().map(String::as_str)
    }

    pub fn role_vocabulary(&self) -> impl Iterator<Item = &str> {
        self.role_vocabulary.iter().map(String::as_str)
    }

    pub fn supertype_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parents.iter().flat_map(|(c, ps)| ps.iter().map(move |p| (c.as_str(), p.as_str())))
    }

    pub fn roles(&self, ty: &str) -> Result<BTreeSet<String>, ModelError> {
        self.require_type(ty)?;
        Ok(self.roles_by_type.get(ty).cloned().unwrap_or_default())
    }

    /// `ty` together with every type reachable through child edges.
    pub fn descendants(&self, ty: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        if !self.types.contains(ty) {
            return seen;
        }
        let mut queue = VecDeque::from([ty.to_owned()]);
        while let Some(t) = queue.pop_front() {
            if !seen.insert(t.clone()) {
                continue;
            }
            if let Some(kids) = self.children.get(&t) {
                queue.extend(kids.iter().cloned());
            }
        }
        seen
    }

    /// Kahn's algorithm over child→parent edges, parents first.
    pub fn topological_order(&self) -> Result<Vec<String>, ModelError> {
        let mut indegree: BTreeMap<&str, usize> = self.types.iter().map(|t| (t.as_str(), 0)).collect();
        for (child, parents) in &self.parents {
            *indegree.get_mut(child.as_str()).expect("registered type") += parents.len();
        }
        let mut ready: VecDeque<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(t, _)| *t).collect();
        let mut order = Vec::with_capacity(self.types.len());
        while let Some(t) = ready.pop_front() {
            order.push(t.to_owned());
            for kid in self.children.get(t).into_iter().flatten() {
                let d = indegree.get_mut(kid.as_str()).expect("registered type");
                *d -= 1;
                if *d == 0 {
                    ready.push_back(kid);
                }
            }
        }
        if order.len() != self.types.len() {
            let stuck = indegree.into_iter().find(|(_, d)| *d > 0).map(|(t, _)| t.to_owned()).unwrap_or_default();
            return Err(ModelError::TaxonomyCycle { child: stuck.clone(), parent: stuck });
        }
        Ok(order)
    }

    fn require_type(&self, ty: &str) -> Result<(), ModelError> {
        if self.types.contains(ty) {
            Ok(())
        } else {
            Err(ModelError::UnknownType(ty.to_owned()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EventTypeTaxonomy {
        let mut t = EventTypeTaxonomy::new();
        for ty in ["conflict", "war", "battle", "crisis"] {
            t.add_type(ty).unwrap();
        }
        t.add_supertype("war", "conflict").unwrap();
        t.add_supertype("battle", "war").unwrap();
        t.add_supertype("crisis", "conflict").unwrap();
        t
    }

    #[test]
    fn descendants_are_transitive() {
        let t = sample();
        let d: Vec<_> = t.descendants("conflict").into_iter().collect();
        assert_eq!(d, ["battle", "conflict", "crisis", "war"]);
        assert_eq!(t.descendants("battle").len(), 1);
        assert!(t.descendants("nope").is_empty());
    }

    #[test]
    fn cycle_rejected() {
        let mut t = sample();
        assert!(matches!(t.add_supertype("conflict", "battle"), Err(ModelError::TaxonomyCycle { .. })));
        assert!(matches!(t.add_supertype("war", "war"), Err(ModelError::TaxonomyCycle { .. })));
        assert!(t.topological_order().is_ok());
    }

    #[test]
    fn roles_must_be_registered() {
        let mut t = sample();
        assert!(matches!(t.set_roles("war", ["winner"]), Err(ModelError::UnknownRole(_))));
        t.add_role("winner").unwrap();
        t.set_roles("war", ["winner"]).unwrap();
        assert!(t.roles("war").unwrap().contains("winner"));
        assert!(t.roles("conflict").unwrap().is_empty());
        assert!(matches!(t.roles("nope"), Err(ModelError::UnknownType(_))));
    }
}
