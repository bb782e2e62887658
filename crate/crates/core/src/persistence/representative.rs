use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::diagram::{Feature, Generator};
use super::reduction::{Reduction, Tri};
use super::rips::RipsFiltration;
use crate::error::{Error, Result};

type Column = Vec<u32>;

fn boundary(f: &RipsFiltration, t: &Tri) -> Result<Column> {
    let [a, b, c] = t.vertices();
    let mut col = Vec::with_capacity(3);
    for (x, y) in [(a, b), (a, c), (b, c)] {
        let e = f
            .edge_index(x, y)
            .ok_or_else(|| Error::Internal(format!("triangle {a},{b},{c} lacks edge {x},{y}")))?;
        col.push(e as u32);
    }
    col.sort_unstable();
    Ok(col)
}

fn add_into(acc: &Column, other: &Column) -> Column {
    let mut out = Vec::with_capacity(acc.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < acc.len() && j < other.len() {
        match acc[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                out.push(acc[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&acc[i..]);
    out.extend_from_slice(&other[j..]);
    out
}

/// Reduced boundary column of `target` in the standard (homology)
/// reduction. Only the triangles whose columns actually get added are
/// reduced, found through the known edge-triangle pairing.
fn reduced_column(f: &RipsFiltration, r: &Reduction, target: Tri) -> Result<Column> {
    let mut memo: HashMap<u64, Column> = HashMap::new();
    let mut stack: Vec<(Tri, Column)> = vec![(target, boundary(f, &target)?)];
    while let Some((t, col)) = stack.pop() {
        let Some(&low) = col.last() else {
            return Err(Error::Internal("a paired triangle reduced to zero".into()));
        };
        match r.edge_pair.get(&(low as usize)) {
            Some(&other) if other == t => {
                memo.insert(t.code, col);
                continue;
            }
            Some(&other) if other < t => {
                if let Some(done) = memo.get(&other.code) {
                    let next = add_into(&col, done);
                    stack.push((t, next));
                } else {
                    let b = boundary(f, &other)?;
                    stack.push((t, col));
                    stack.push((other, b));
                }
            }
            _ => {
                return Err(Error::Internal(format!(
                    "inconsistent pairing while reducing triangle {:?}",
                    t.vertices()
                )))
            }
        }
    }
    memo.remove(&target.code)
        .ok_or_else(|| Error::Internal("representative column missing".into()))
}

/// Birth edge closed through a shortest path of strictly older edges.
fn tightened(f: &RipsFiltration, birth: usize) -> Option<Vec<[usize; 2]>> {
    let e = f.edges()[birth];
    let (src, dst) = (e.i as usize, e.j as usize);
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(src, 0.0);
    heap.push(Reverse((OrdF64(0.0), src)));
    while let Some(Reverse((OrdF64(d), v))) = heap.pop() {
        if v == dst {
            break;
        }
        if d > dist[&v] {
            continue;
        }
        for &(u, k) in f.neighbors(v) {
            if k as usize >= birth {
                continue;
            }
            let nd = d + f.edges()[k as usize].value;
            let u = u as usize;
            if dist.get(&u).is_none_or(|&old| nd < old) {
                dist.insert(u, nd);
                prev.insert(u, v);
                heap.push(Reverse((OrdF64(nd), u)));
            }
        }
    }
    if !prev.contains_key(&dst) {
        return None;
    }
    let mut cycle = vec![[src.min(dst), src.max(dst)]];
    let mut v = dst;
    while v != src {
        let p = prev[&v];
        cycle.push([p.min(v), p.max(v)]);
        v = p;
    }
    Some(cycle)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub(crate) fn representative(
    f: &RipsFiltration,
    r: &Reduction,
    feature: &Feature,
    tighten: bool,
) -> Result<Vec<[usize; 2]>> {
    let Generator::Loop {
        birth_edge,
        death_triangle: Some(tri),
    } = feature.generator
    else {
        return Err(Error::NotALoop);
    };
    let birth = f
        .edge_index(birth_edge[0], birth_edge[1])
        .ok_or_else(|| Error::InvalidArgument("feature does not belong to this filtration".into()))?;
    if tighten {
        if let Some(c) = tightened(f, birth) {
            return Ok(c);
        }
    }
    let target = Tri::new(feature.death, tri);
    if r.edge_pair.get(&birth) != Some(&target) {
        return Err(Error::InvalidArgument("feature does not belong to this filtration".into()));
    }
    let col = reduced_column(f, r, target)?;
    Ok(col
        .into_iter()
        .map(|k| {
            let e = f.edges()[k as usize];
            [e.i as usize, e.j as usize]
        })
        .collect())
}
