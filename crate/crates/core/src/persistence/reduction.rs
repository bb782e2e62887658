//! Pairing of simplices.
//!
//! Dimension 0 is a union-find sweep over the sorted edges. When two
//! components merge, the smaller one dies (ties: the one whose smallest
//! vertex index is larger), which is the elder rule with all births at 0.
//!
//! Dimension 1 reduces the coboundary matrix (columns are edges, youngest
//! first; rows are triangles), which yields the same pairs as reducing the
//! boundary matrix. Edges that kill a component are cleared up front. A
//! column whose oldest cofacet is not yet claimed is paired immediately;
//! otherwise it is reduced with a heap, regenerating previously reduced
//! columns from their stored combinations of edges.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use super::rips::RipsFiltration;

const CODE_BITS: u32 = 21;
/// Largest vertex count that fits the packed triangle code.
pub(crate) const MAX_VERTICES: usize = 1 << CODE_BITS;

/// A triangle keyed by `(value, code)`, `code` packing the sorted vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tri {
    pub value: f64,
    pub code: u64,
}

impl Tri {
    pub fn new(value: f64, mut v: [usize; 3]) -> Self {
        v.sort_unstable();
        Tri {
            value,
            code: (v[0] as u64) << (2 * CODE_BITS) | (v[1] as u64) << CODE_BITS | v[2] as u64,
        }
    }

    pub fn vertices(&self) -> [usize; 3] {
        let mask = (1u64 << CODE_BITS) - 1;
        [
            (self.code >> (2 * CODE_BITS)) as usize,
            ((self.code >> CODE_BITS) & mask) as usize,
            (self.code & mask) as usize,
        ]
    }
}

impl Eq for Tri {}

impl Ord for Tri {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.code.cmp(&other.code))
    }
}

impl PartialOrd for Tri {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Every pair of the filtration, zero-length ones included.
#[derive(Debug, Clone)]
pub(crate) struct Reduction {
    /// `(vertex, death edge)`; `vertex` is the smallest index of the dying
    /// component, `None` for components that never die.
    pub h0: Vec<(usize, Option<usize>)>,
    /// `(birth edge, death triangle)`.
    pub h1: Vec<(usize, Option<Tri>)>,
    /// The triangle paired with each edge, if any.
    pub edge_pair: HashMap<usize, Tri>,
}

pub(crate) fn reduce(f: &RipsFiltration) -> Reduction {
    let (h0, negative) = reduce_h0(f);
    let (h1, edge_pair) = reduce_h1(f, &negative);
    Reduction { h0, h1, edge_pair }
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn reduce_h0(f: &RipsFiltration) -> (Vec<(usize, Option<usize>)>, Vec<bool>) {
    let n = f.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut min_vertex: Vec<usize> = (0..n).collect();
    let mut negative = vec![false; f.edges().len()];
    let mut pairs = Vec::new();
    for (k, e) in f.edges().iter().enumerate() {
        let ra = find(&mut parent, e.i as usize);
        let rb = find(&mut parent, e.j as usize);
        if ra == rb {
            continue;
        }
        negative[k] = true;
        let a_dies = (size[ra], Reverse(min_vertex[ra])) < (size[rb], Reverse(min_vertex[rb]));
        let (dead, alive) = if a_dies { (ra, rb) } else { (rb, ra) };
        pairs.push((min_vertex[dead], Some(k)));
        parent[dead] = alive;
        size[alive] += size[dead];
        min_vertex[alive] = min_vertex[alive].min(min_vertex[dead]);
    }
    for v in 0..n {
        if find(&mut parent, v) == v {
            pairs.push((min_vertex[v], None));
        }
    }
    (pairs, negative)
}

/// Calls `sink` for every triangle in the coboundary of edge `k`.
#[inline]
fn cofacets(f: &RipsFiltration, k: usize, mut sink: impl FnMut(Tri)) {
    let e = f.edges()[k];
    let (a, b) = (e.i as usize, e.j as usize);
    let edges = f.edges();
    f.for_each_common_neighbor(a, b, |c, eac, ebc| {
        let value = e.value.max(edges[eac].value).max(edges[ebc].value);
        if f.triangle_allowed([a, b, c], value) {
            sink(Tri::new(value, [a, b, c]));
        }
    });
}

/// Pops cancelling duplicates and returns the oldest surviving entry.
fn pivot(heap: &mut BinaryHeap<Reverse<Tri>>) -> Option<Tri> {
    while let Some(Reverse(top)) = heap.pop() {
        match heap.peek() {
            Some(Reverse(next)) if *next == top => {
                heap.pop();
            }
            _ => {
                heap.push(Reverse(top));
                return Some(top);
            }
        }
    }
    None
}

fn reduce_h1(f: &RipsFiltration, negative: &[bool]) -> (Vec<(usize, Option<Tri>)>, HashMap<usize, Tri>) {
    let mut claimed: HashMap<u64, usize> = HashMap::new();
    let mut combos: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut pairs = Vec::new();
    let mut edge_pair = HashMap::new();
    let mut heap: BinaryHeap<Reverse<Tri>> = BinaryHeap::new();

    for k in (0..f.edges().len()).rev() {
        if negative[k] {
            continue;
        }
        let mut oldest: Option<Tri> = None;
        cofacets(f, k, |t| {
            if oldest.is_none_or(|o| t < o) {
                oldest = Some(t);
            }
        });
        let Some(first) = oldest else {
            pairs.push((k, None));
            continue;
        };
        if !claimed.contains_key(&first.code) {
            claimed.insert(first.code, k);
            edge_pair.insert(k, first);
            pairs.push((k, Some(first)));
            continue;
        }

        heap.clear();
        cofacets(f, k, |t| heap.push(Reverse(t)));
        let mut combo = vec![k];
        let death = loop {
            let Some(p) = pivot(&mut heap) else {
                break None;
            };
            match claimed.get(&p.code) {
                Some(&other) => {
                    let add: &[usize] = combos.get(&other).map_or(std::slice::from_ref(&other), |v| v);
                    for &x in add {
                        cofacets(f, x, |t| heap.push(Reverse(t)));
                    }
                    combo.extend_from_slice(add);
                }
                None => break Some(p),
            }
        };
        match death {
            Some(t) => {
                claimed.insert(t.code, k);
                edge_pair.insert(k, t);
                combo.sort_unstable();
                let mut reduced: Vec<usize> = Vec::with_capacity(combo.len());
                for x in combo {
                    if reduced.last() == Some(&x) {
                        reduced.pop();
                    } else {
                        reduced.push(x);
                    }
                }
                if reduced.len() > 1 {
                    combos.insert(k, reduced);
                }
                pairs.push((k, Some(t)));
            }
            None => pairs.push((k, None)),
        }
    }
    (pairs, edge_pair)
}
