//! Identifiability check on the park–team incidence graph.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::ids::{ParkId, TeamId};

/// One connected piece of the park–team incidence graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub parks: Vec<ParkId>,
    pub teams: Vec<TeamId>,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parks: Vec<_> = self.parks.iter().map(|p| p.0.to_string()).collect();
        let teams: Vec<_> = self.teams.iter().map(|t| t.0.to_string()).collect();
        write!(f, "{{parks [{}], teams [{}]}}", parks.join(" "), teams.join(" "))
    }
}

/// Connected components of the bipartite graph with parks and teams as
/// vertices and observed (park, team) cells as edges. Entities without any
/// cell come out as singleton components.
pub fn components<I>(parks: &[ParkId], teams: &[TeamId], edges: I) -> Vec<Component>
where
    I: IntoIterator<Item = (ParkId, TeamId)>,
{
    let park_ix: BTreeMap<ParkId, usize> = parks.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let team_ix: BTreeMap<TeamId, usize> = teams.iter().enumerate().map(|(i, &t)| (t, parks.len() + i)).collect();
    let mut uf = UnionFind::<usize>::new(parks.len() + teams.len());
    for (p, t) in edges {
        if let (Some(&a), Some(&b)) = (park_ix.get(&p), team_ix.get(&t)) {
            uf.union(a, b);
        }
    }
    let labels = uf.into_labeling();
    let mut groups: BTreeMap<usize, Component> = BTreeMap::new();
    for (i, &p) in parks.iter().enumerate() {
        groups.entry(labels[i]).or_insert_with(|| Component { parks: vec![], teams: vec![] }).parks.push(p);
    }
    for (i, &t) in teams.iter().enumerate() {
        groups
            .entry(labels[parks.len() + i])
            .or_insert_with(|| Component { parks: vec![], teams: vec![] })
            .teams
            .push(t);
    }
    let mut out: Vec<Component> = groups.into_values().collect();
    for c in &mut out {
        c.parks.sort();
        c.teams.sort();
    }
    out.sort_by_key(|c| (c.parks.is_empty(), c.parks.first().copied(), c.teams.first().copied()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blocks() {
        let parks = [ParkId(1), ParkId(2), ParkId(3), ParkId(4)];
        let teams = [TeamId(1), TeamId(2), TeamId(3), TeamId(4)];
        let edges = [(1, 1), (1, 2), (2, 2), (3, 3), (4, 4), (3, 4)].map(|(p, t)| (ParkId(p), TeamId(t)));
        let comps = components(&parks, &teams, edges);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], Component { parks: vec![ParkId(1), ParkId(2)], teams: vec![TeamId(1), TeamId(2)] });
        assert_eq!(comps[1], Component { parks: vec![ParkId(3), ParkId(4)], teams: vec![TeamId(3), TeamId(4)] });
    }

    #[test]
    fn isolated_team_is_its_own_component() {
        let comps = components(&[ParkId(1)], &[TeamId(1), TeamId(2)], [(ParkId(1), TeamId(1))]);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[1], Component { parks: vec![], teams: vec![TeamId(2)] });
    }
}
