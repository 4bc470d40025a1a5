//! Multifrontal LU of a sparse matrix under a nested-dissection plan.
//!
//! Each dissection node owns a dense front over its own points plus its
//! boundary (the ancestor points it couples to, directly or through fill).
//! Original entries are assembled at the node eliminated first among the two
//! endpoints, children's Schur complements are extend-added, and the node's
//! own columns are eliminated with pivoting confined to its own rows. Nodes
//! on one level are independent and are factored in parallel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nd::dense::partial_lu;
use crate::nd::ordering::EliminationPlan;
use crate::sparse::CsrMatrix;

/// Factored front of one dissection node.
#[derive(Debug, Clone)]
struct Front {
    own: Vec<usize>,
    boundary: Vec<usize>,
    /// Rows `0..k` of the factored front: `L11 \ U11 | U12`, width `k + r`.
    upper: Vec<f64>,
    /// `L21`, `r x k`.
    lower: Vec<f64>,
    piv: Vec<usize>,
}

impl Front {
    fn k(&self) -> usize {
        self.own.len()
    }

    fn width(&self) -> usize {
        self.own.len() + self.boundary.len()
    }
}

/// Schur complement handed from a node to its parent.
#[derive(Debug)]
struct Update {
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Sparse LU factors stored front by front in elimination order.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    fronts: Vec<Front>,
}

/// Factor `p` using the elimination order and tree in `plan`.
pub fn factorize(p: &CsrMatrix, plan: &EliminationPlan) -> Result<Factorization> {
    let n = p.nrows();
    if p.ncols() != n || plan.order().len() != n {
        return Err(Error::DimensionMismatch {
            expected: plan.order().len(),
            found: n,
        });
    }
    let pt = p.transpose();
    let nodes = plan.nodes();
    let levels = plan.levels();
    let mut fronts: Vec<Option<Front>> = vec![None; nodes.len()];
    let mut updates: Vec<Option<Update>> = (0..nodes.len()).map(|_| None).collect();

    let mut first_pos = Vec::with_capacity(nodes.len());
    let mut pos = 0;
    for node in nodes {
        first_pos.push(pos);
        pos += node.points.len();
    }

    for level in 0..=levels {
        let ids: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].level == level).collect();
        let tasks: Vec<(usize, Vec<Update>)> = ids
            .iter()
            .map(|&id| {
                let child_updates = nodes[id]
                    .children
                    .iter()
                    .filter_map(|&c| updates[c].take())
                    .collect();
                (id, child_updates)
            })
            .collect();
        let results: Vec<Result<(usize, Front, Option<Update>)>> = tasks
            .into_par_iter()
            .map(|(id, child_updates)| {
                let (front, update) = factor_node(p, &pt, plan, id, first_pos[id], child_updates)?;
                Ok((id, front, update))
            })
            .collect();
        for r in results {
            let (id, front, update) = r?;
            fronts[id] = Some(front);
            updates[id] = update;
        }
    }

    Ok(Factorization {
        n,
        fronts: fronts.into_iter().map(|f| f.expect("every node factored")).collect(),
    })
}

fn local_index(sorted: &[(usize, usize)], global: usize) -> usize {
    let i = sorted
        .binary_search_by_key(&global, |&(g, _)| g)
        .expect("index belongs to the front");
    sorted[i].1
}

fn factor_node(
    p: &CsrMatrix,
    pt: &CsrMatrix,
    plan: &EliminationPlan,
    id: usize,
    start: usize,
    child_updates: Vec<Update>,
) -> Result<(Front, Option<Update>)> {
    let own = plan.nodes()[id].points.clone();
    let k = own.len();
    let end = start + k;
    let position = plan.position();
    let node_of = plan.node_of();

    let mut boundary = Vec::new();
    for &q in &own {
        let neighbors = p.row(q).0.iter().chain(pt.row(q).0.iter());
        for &c in neighbors {
            let pc = position[c];
            let owner = node_of[c];
            if pc >= end {
                if !plan.is_ancestor(owner, id) {
                    return Err(Error::StructuralViolation { point: q });
                }
                boundary.push(c);
            } else if pc < start && !plan.is_ancestor(id, owner) {
                return Err(Error::StructuralViolation { point: q });
            }
        }
    }
    for u in &child_updates {
        boundary.extend(u.indices.iter().copied().filter(|&c| position[c] >= end));
    }
    boundary.sort_unstable_by_key(|&c| position[c]);
    boundary.dedup();

    let r = boundary.len();
    let nf = k + r;
    let mut lookup: Vec<(usize, usize)> = own
        .iter()
        .chain(boundary.iter())
        .copied()
        .enumerate()
        .map(|(local, global)| (global, local))
        .collect();
    lookup.sort_unstable();

    let mut front = vec![0.0; nf * nf];
    for (li, &q) in own.iter().enumerate() {
        let (cols, vals) = p.row(q);
        for (&c, &v) in cols.iter().zip(vals) {
            if position[c] >= start {
                front[li * nf + local_index(&lookup, c)] += v;
            }
        }
        let (rows, vals) = pt.row(q);
        for (&rw, &v) in rows.iter().zip(vals) {
            if position[rw] >= end {
                front[local_index(&lookup, rw) * nf + li] += v;
            }
        }
    }
    for u in child_updates {
        let map: Vec<usize> = u.indices.iter().map(|&g| local_index(&lookup, g)).collect();
        let m = map.len();
        for (a, &la) in map.iter().enumerate() {
            let src = &u.values[a * m..(a + 1) * m];
            let dst = &mut front[la * nf..(la + 1) * nf];
            for (&lb, &x) in map.iter().zip(src) {
                dst[lb] += x;
            }
        }
    }

    let scale = front.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let piv = partial_lu(&mut front, nf, k, scale).map_err(|e| match e {
        Error::SingularPivot { step, pivot } => Error::SingularPivot {
            step: start + step,
            pivot,
        },
        other => other,
    })?;

    let upper = front[..k * nf].to_vec();
    let mut lower = Vec::with_capacity(r * k);
    let mut schur = Vec::with_capacity(r * r);
    for row in front[k * nf..].chunks_exact(nf) {
        lower.extend_from_slice(&row[..k]);
        schur.extend_from_slice(&row[k..]);
    }
    let update = (r > 0).then(|| Update {
        indices: boundary.clone(),
        values: schur,
    });
    Ok((
        Front {
            own,
            boundary,
            upper,
            lower,
            piv,
        },
        update,
    ))
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `P x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let mut y = Vec::new();
        for f in &self.fronts {
            let k = f.k();
            let w = f.width();
            y.clear();
            y.extend(f.own.iter().map(|&g| x[g]));
            for (i, &p) in f.piv.iter().enumerate() {
                y.swap(i, p);
            }
            for i in 0..k {
                let row = &f.upper[i * w..i * w + i];
                let dot: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
                y[i] -= dot;
            }
            for (q, &g) in f.boundary.iter().enumerate() {
                let row = &f.lower[q * k..(q + 1) * k];
                x[g] -= row.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
            }
            for (&g, &v) in f.own.iter().zip(&y) {
                x[g] = v;
            }
        }
        let mut xb = Vec::new();
        for f in self.fronts.iter().rev() {
            let k = f.k();
            let w = f.width();
            xb.clear();
            xb.extend(f.boundary.iter().map(|&g| x[g]));
            y.clear();
            y.extend(f.own.iter().map(|&g| x[g]));
            for i in 0..k {
                let u12 = &f.upper[i * w + k..(i + 1) * w];
                y[i] -= u12.iter().zip(&xb).map(|(a, b)| a * b).sum::<f64>();
            }
            for i in (0..k).rev() {
                let row = &f.upper[i * w..i * w + k];
                let dot: f64 = row[i + 1..].iter().zip(&y[i + 1..]).map(|(a, b)| a * b).sum();
                y[i] = (y[i] - dot) / row[i];
            }
            for (&g, &v) in f.own.iter().zip(&y) {
                x[g] = v;
            }
        }
    }

    /// Stored factor entries (dense front blocks).
    pub fn factor_entries(&self) -> usize {
        self.fronts
            .iter()
            .map(|f| f.upper.len() + f.lower.len())
            .sum()
    }

    /// Own points and boundary of every front, in elimination order.
    pub fn front_structure(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.fronts
            .iter()
            .map(|f| (f.own.as_slice(), f.boundary.as_slice()))
    }

    /// Largest front dimension.
    pub fn max_front(&self) -> usize {
        self.fronts.iter().map(|f| f.width()).max().unwrap_or(0)
    }
}
