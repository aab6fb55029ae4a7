//! Region labels of the δ-optimal strategy.
//!
//! Away from ties the argmax set at a node is a single action, so the
//! measure-zero sets where the continuous strategy pays its incoming premium
//! show up on the grid as no-pay nodes whose forward neighbour pays a lump:
//! from such a node one `E0` step followed by the neighbour's lump returns
//! the surplus to the same place on the branch that pays. A node is labelled
//! `A1` (`A2`) when `E0` is optimal there and `E1` (`E2`) is optimal at the
//! node itself or one step to the right (above); `A0` when both hold.

use serde::{Deserialize, Serialize};

use super::PolicyField;
use crate::hjb2d::{Action, ValueField};
use crate::model::{ModelParams, Side, SurplusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    C,
    B1,
    B2,
    B0,
    A0,
    A1,
    A2,
}

impl Region {
    pub const ALL: [Region; 7] = [
        Region::C,
        Region::B1,
        Region::B2,
        Region::B0,
        Region::A0,
        Region::A1,
        Region::A2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::C => "C",
            Region::B1 => "B1",
            Region::B2 => "B2",
            Region::B0 => "B0",
            Region::A0 => "A0",
            Region::A1 => "A1",
            Region::A2 => "A2",
        }
    }

    /// Small integer code for plotting.
    pub fn code(self) -> u8 {
        match self {
            Region::C => 0,
            Region::B1 => 1,
            Region::B2 => 2,
            Region::B0 => 3,
            Region::A0 => 4,
            Region::A1 => 5,
            Region::A2 => 6,
        }
    }
}

/// Centroid of a cluster of `A0` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A0Point {
    pub x1: f64,
    pub x2: f64,
    pub nodes: usize,
}

/// Maximal run of one label along the no-claim direction `(n + k, m + k)`,
/// which has slope `c2/c1` in surplus coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSegment {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub nodes: usize,
    pub horizontal_extent: f64,
}

#[derive(Debug, Clone)]
pub struct RegionMap {
    pub grid: crate::model::GridSpec,
    labels: Vec<Region>,
}

impl RegionMap {
    #[inline]
    pub fn get(&self, n: usize, m: usize) -> Region {
        self.labels[self.grid.index(n, m)]
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn count(&self, r: Region) -> usize {
        self.labels.iter().filter(|&&l| l == r).count()
    }

    /// Connected components of one label; `diagonal` selects 8-neighbour
    /// connectivity instead of 4.
    pub fn components(&self, r: Region, diagonal: bool) -> Vec<Vec<(usize, usize)>> {
        let g = self.grid;
        let mut seen = vec![false; g.len()];
        let mut out = Vec::new();
        for start in 0..g.len() {
            if seen[start] || self.labels[start] != r {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (n, m) = (i / g.cols(), i % g.cols());
                comp.push((n, m));
                for (dn, dm) in neighbours(diagonal) {
                    let nn = n as i64 + dn;
                    let mm = m as i64 + dm;
                    if nn < 0 || mm < 0 || nn > g.n_max as i64 || mm > g.m_max as i64 {
                        continue;
                    }
                    let j = g.index(nn as usize, mm as usize);
                    if !seen[j] && self.labels[j] == r {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// `A0` clusters (8-connected), reported by their centroids.
    pub fn a0_points(&self) -> Vec<A0Point> {
        let g = self.grid;
        self.components(Region::A0, true)
            .into_iter()
            .map(|c| {
                let k = c.len() as f64;
                let x1 = c.iter().map(|&(n, _)| g.x1(n)).sum::<f64>() / k;
                let x2 = c.iter().map(|&(_, m)| g.x2(m)).sum::<f64>() / k;
                A0Point { x1, x2, nodes: c.len() }
            })
            .collect()
    }

    pub fn diagonal_segments(&self, r: Region) -> Vec<DiagonalSegment> {
        let g = self.grid;
        let mut out = Vec::new();
        for n in 0..g.rows() {
            for m in 0..g.cols() {
                if self.get(n, m) != r {
                    continue;
                }
                // start only where the predecessor along the diagonal is not r
                if n > 0 && m > 0 && self.get(n - 1, m - 1) == r {
                    continue;
                }
                let mut k = 0;
                while n + k < g.n_max && m + k < g.m_max && self.get(n + k + 1, m + k + 1) == r {
                    k += 1;
                }
                out.push(DiagonalSegment {
                    start: (g.x1(n), g.x2(m)),
                    end: (g.x1(n + k), g.x2(m + k)),
                    nodes: k + 1,
                    horizontal_extent: k as f64 * g.dx1,
                });
            }
        }
        out.sort_by_key(|s| std::cmp::Reverse(s.nodes));
        out
    }

    /// Nodes of one label ordered by `x1`, then `x2`: a plotting polyline for
    /// the thin `A1`/`A2` boundaries.
    pub fn boundary_points(&self, r: Region) -> Vec<(f64, f64)> {
        let g = self.grid;
        let mut pts = Vec::new();
        for n in 0..g.rows() {
            for m in 0..g.cols() {
                if self.get(n, m) == r {
                    pts.push((g.x1(n), g.x2(m)));
                }
            }
        }
        pts
    }

    /// Whether every node of the component lies strictly above the
    /// simultaneous-ruin line.
    pub fn component_in_d2(&self, params: &ModelParams, comp: &[(usize, usize)]) -> bool {
        let g = self.grid;
        comp.iter().all(|&(n, m)| {
            SurplusPoint { x1: g.x1(n), x2: g.x2(m) }.side(params) == Side::D2
        })
    }
}

fn neighbours(diagonal: bool) -> &'static [(i64, i64)] {
    const FOUR: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    const EIGHT: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
    if diagonal {
        &EIGHT
    } else {
        &FOUR
    }
}

/// Labels every node from the argmax sets of a converged solve.
pub fn extract_regions(pol: &PolicyField, _v: &ValueField) -> RegionMap {
    let g = pol.grid;
    let mut labels = Vec::with_capacity(g.len());
    for n in 0..g.rows() {
        for m in 0..g.cols() {
            let set = pol.get(n, m);
            let label = if set.contains(Action::E0) {
                let f1 = set.contains(Action::E1) || n == g.n_max || pol.get(n + 1, m).contains(Action::E1);
                let f2 = set.contains(Action::E2) || m == g.m_max || pol.get(n, m + 1).contains(Action::E2);
                match (f1, f2) {
                    (true, true) => Region::A0,
                    (true, false) => Region::A1,
                    (false, true) => Region::A2,
                    (false, false) => Region::C,
                }
            } else {
                match (set.contains(Action::E1), set.contains(Action::E2)) {
                    (true, true) => Region::B0,
                    (true, false) => Region::B1,
                    (false, true) => Region::B2,
                    (false, false) => Region::C,
                }
            };
            labels.push(label);
        }
    }
    RegionMap { grid: g, labels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hjb2d::ActionSet;
    use crate::model::GridSpec;

    fn grid() -> GridSpec {
        let p = ModelParams::new(2.0, 1.0, 0.5, 0.5, 1.0, 0.05);
        GridSpec::new(&p, 0.1, 6, 6).unwrap()
    }

    #[test]
    fn all_no_pay_policy_gives_all_c_except_window_edge() {
        let g = grid();
        let pol = PolicyField::from_actions(g, vec![ActionSet::single(Action::E0); g.len()]).unwrap();
        let map = extract_regions(&pol, &ValueField::zeros(g));
        for n in 0..g.n_max {
            for m in 0..g.m_max {
                assert_eq!(map.get(n, m), Region::C);
            }
        }
        assert!(map.diagonal_segments(Region::A1).iter().all(|s| s.nodes >= 1));
        assert_eq!(map.components(Region::C, false).len(), 1);
    }

    #[test]
    fn corner_of_no_pay_block_is_a0() {
        // E0 on [0,2]x[0,2], E1 to the right, E2 above, both lumps beyond.
        let g = grid();
        let mut acts = Vec::new();
        for n in 0..=6 {
            for m in 0..=6 {
                let s = match (n <= 2, m <= 2) {
                    (true, true) => ActionSet::single(Action::E0),
                    (false, true) => ActionSet::single(Action::E1),
                    (true, false) if n == 0 => ActionSet::single(Action::E2),
                    (true, false) => ActionSet::single(Action::E2),
                    (false, false) => ActionSet::single(Action::E1).with(Action::E2),
                };
                acts.push(s);
            }
        }
        let pol = PolicyField::from_actions(g, acts).unwrap();
        let map = extract_regions(&pol, &ValueField::zeros(g));
        assert_eq!(map.get(2, 2), Region::A0);
        assert_eq!(map.get(2, 0), Region::A1);
        assert_eq!(map.get(0, 2), Region::A2);
        assert_eq!(map.get(1, 1), Region::C);
        assert_eq!(map.get(5, 5), Region::B0);
        let a0 = map.a0_points();
        assert_eq!(a0.len(), 1);
        assert!((a0[0].x1 - g.x1(2)).abs() < 1e-12 && (a0[0].x2 - g.x2(2)).abs() < 1e-12);
        assert_eq!(map.components(Region::B0, false).len(), 1);
    }

    #[test]
    fn inadmissible_policies_rejected() {
        let g = grid();
        let acts = vec![ActionSet::single(Action::E1); g.len()];
        assert!(PolicyField::from_actions(g, acts).is_err());
    }
}
