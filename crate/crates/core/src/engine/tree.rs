use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::trace::{InfectionEdge, SimTrace};
use crate::error::{Error, Result};
use crate::population::AgentId;

/// Who infected whom, rooted at the seeded cases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InfectionTree {
    pub roots: Vec<AgentId>,
    parent: BTreeMap<AgentId, (AgentId, f64)>,
    children: BTreeMap<AgentId, Vec<AgentId>>,
}

impl InfectionTree {
    /// Fails if an agent is infected twice or an edge points back into its
    /// own ancestry.
    pub fn from_edges(roots: &[AgentId], edges: &[InfectionEdge]) -> Result<Self> {
        let mut t = InfectionTree {
            roots: roots.to_vec(),
            ..Default::default()
        };
        let mut seen: std::collections::BTreeSet<AgentId> = roots.iter().copied().collect();
        if seen.len() != roots.len() {
            return Err(Error::parse("infection tree", "duplicate root"));
        }
        for e in edges {
            if !seen.insert(e.infectee) {
                return Err(Error::parse("infection tree", format!("agent {} infected twice", e.infectee.0)));
            }
            t.parent.insert(e.infectee, (e.infector, e.time));
            t.children.entry(e.infector).or_default().push(e.infectee);
        }
        for e in edges {
            let mut cur = e.infector;
            let mut steps = 0;
            while let Some(&(p, _)) = t.parent.get(&cur) {
                if p == e.infectee || steps > edges.len() {
                    return Err(Error::parse("infection tree", "cycle"));
                }
                cur = p;
                steps += 1;
            }
        }
        Ok(t)
    }

    pub fn from_trace(trace: &SimTrace) -> Result<Self> {
        Self::from_edges(&trace.seeded, &trace.infections)
    }

    pub fn n_edges(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, a: AgentId) -> Option<AgentId> {
        self.parent.get(&a).map(|p| p.0)
    }

    pub fn children(&self, a: AgentId) -> &[AgentId] {
        self.children.get(&a).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every infected agent, roots first.
    pub fn nodes(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.roots.iter().copied().chain(self.parent.keys().copied())
    }
}
