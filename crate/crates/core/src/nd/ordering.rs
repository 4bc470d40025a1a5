//! Nested-dissection elimination tree over the periodic separator lattice.
//!
//! The torus is cut recursively along lattice hyperplanes. Cutting a periodic
//! dimension needs two hyperplanes (at the region start and its midpoint);
//! afterwards every region is a box bounded by hyperplanes owned by its
//! ancestors and is bisected at its midpoint. Leaves are the `(B-1)^d`
//! interiors of single lattice cells.
//!
//! Nodes are ordered by height: leaf boxes first, then separator pieces
//! level by level, ending with the periodic cut.

use crate::error::Result;
use crate::grid::{GridSpec, MAX_DIM};
use crate::nd::geometry::validate_spacing;

/// One node of the dissection tree: a leaf box interior or a separator piece.
#[derive(Debug, Clone)]
pub struct NdNode {
    /// Grid indices owned by this node, ascending.
    pub points: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Height above the leaves (leaves are 0).
    pub level: usize,
}

/// Elimination order together with its dissection tree.
#[derive(Debug, Clone)]
pub struct EliminationPlan {
    grid: GridSpec,
    spacing: usize,
    nodes: Vec<NdNode>,
    order: Vec<usize>,
    position: Vec<usize>,
    node_of: Vec<usize>,
    // Preorder entry/exit stamps for ancestor queries.
    enter: Vec<usize>,
    exit: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Span {
    lo: usize,
    len: usize,
    periodic: bool,
}

struct Builder {
    grid: GridSpec,
    spacing: usize,
    nodes: Vec<NdNode>,
}

impl Builder {
    fn coordinate_ranges(&self, spans: &[Span], split: Option<(usize, &[usize])>) -> Vec<Vec<usize>> {
        let n = self.grid.n();
        let b = self.spacing;
        (0..self.grid.dim())
            .map(|k| match split {
                Some((axis, cuts)) if axis == k => cuts.to_vec(),
                _ if spans[k].periodic => (0..n).collect(),
                _ => (spans[k].lo * b + 1..(spans[k].lo + spans[k].len) * b).collect(),
            })
            .collect()
    }

    fn product(&self, ranges: &[Vec<usize>]) -> Vec<usize> {
        let mut out = vec![0usize];
        for r in ranges {
            let mut next = Vec::with_capacity(out.len() * r.len());
            for &base in &out {
                for &c in r {
                    next.push(base * self.grid.n() + c);
                }
            }
            out = next;
        }
        out.sort_unstable();
        out
    }

    fn build(&mut self, spans: [Span; MAX_DIM], parent: Option<usize>) -> usize {
        let d = self.grid.dim();
        let id = self.nodes.len();
        self.nodes.push(NdNode {
            points: Vec::new(),
            parent,
            children: Vec::new(),
            level: 0,
        });

        let is_leaf = spans[..d].iter().all(|s| !s.periodic && s.len == 1);
        if is_leaf {
            let ranges = self.coordinate_ranges(&spans, None);
            self.nodes[id].points = self.product(&ranges);
            return id;
        }

        // Longest extent first; periodic beats bounded on ties, then lowest axis.
        let axis = (0..d)
            .max_by(|&a, &b| {
                (spans[a].len, spans[a].periodic, std::cmp::Reverse(a))
                    .cmp(&(spans[b].len, spans[b].periodic, std::cmp::Reverse(b)))
            })
            .unwrap();
        let s = spans[axis];
        let half = s.len / 2;
        let (cuts, halves): (Vec<usize>, Vec<Span>) = if s.periodic {
            let mut cuts = vec![s.lo * self.spacing];
            if s.len >= 2 {
                cuts.push((s.lo + half) * self.spacing);
                (
                    cuts,
                    vec![
                        Span { lo: s.lo, len: half, periodic: false },
                        Span { lo: s.lo + half, len: s.len - half, periodic: false },
                    ],
                )
            } else {
                (cuts, vec![Span { lo: s.lo, len: s.len, periodic: false }])
            }
        } else {
            (
                vec![(s.lo + half) * self.spacing],
                vec![
                    Span { lo: s.lo, len: half, periodic: false },
                    Span { lo: s.lo + half, len: s.len - half, periodic: false },
                ],
            )
        };
        let ranges = self.coordinate_ranges(&spans, Some((axis, &cuts)));
        self.nodes[id].points = self.product(&ranges);

        let mut level = 0;
        for h in halves {
            let mut child_spans = spans;
            child_spans[axis] = h;
            let child = self.build(child_spans, Some(id));
            self.nodes[id].children.push(child);
            level = level.max(self.nodes[child].level + 1);
        }
        self.nodes[id].level = level;
        id
    }
}

/// Build the nested-dissection plan for separator spacing `spacing`.
pub fn nd_ordering(grid: GridSpec, spacing: usize) -> Result<EliminationPlan> {
    validate_spacing(grid, spacing)?;
    let boxes = grid.n() / spacing;
    let mut builder = Builder {
        grid,
        spacing,
        nodes: Vec::new(),
    };
    let root = Span {
        lo: 0,
        len: boxes,
        periodic: true,
    };
    builder.build([root; MAX_DIM], None);
    let built = builder.nodes;

    // Stable sort by height keeps build order within a level.
    let mut rank: Vec<usize> = (0..built.len()).collect();
    rank.sort_by_key(|&i| built[i].level);
    let mut new_id = vec![0; built.len()];
    for (new, &old) in rank.iter().enumerate() {
        new_id[old] = new;
    }
    let nodes: Vec<NdNode> = rank
        .iter()
        .map(|&old| {
            let n = &built[old];
            NdNode {
                points: n.points.clone(),
                parent: n.parent.map(|p| new_id[p]),
                children: n.children.iter().map(|&c| new_id[c]).collect(),
                level: n.level,
            }
        })
        .collect();

    let total = grid.len();
    let mut order = Vec::with_capacity(total);
    let mut node_of = vec![usize::MAX; total];
    for (id, node) in nodes.iter().enumerate() {
        for &p in &node.points {
            node_of[p] = id;
            order.push(p);
        }
    }
    let mut position = vec![usize::MAX; total];
    for (pos, &p) in order.iter().enumerate() {
        position[p] = pos;
    }

    let mut enter = vec![0; nodes.len()];
    let mut exit = vec![0; nodes.len()];
    let root = nodes.iter().position(|n| n.parent.is_none()).unwrap();
    let mut clock = 0;
    let mut stack = vec![(root, false)];
    while let Some((id, done)) = stack.pop() {
        if done {
            exit[id] = clock;
            continue;
        }
        enter[id] = clock;
        clock += 1;
        stack.push((id, true));
        for &c in nodes[id].children.iter().rev() {
            stack.push((c, false));
        }
    }

    Ok(EliminationPlan {
        grid,
        spacing,
        nodes,
        order,
        position,
        node_of,
        enter,
        exit,
    })
}

impl EliminationPlan {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn spacing(&self) -> usize {
        self.spacing
    }

    /// Nodes in elimination order.
    pub fn nodes(&self) -> &[NdNode] {
        &self.nodes
    }

    /// Grid indices in elimination order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Elimination position of each grid index.
    pub fn position(&self) -> &[usize] {
        &self.position
    }

    /// Node owning each grid index.
    pub fn node_of(&self) -> &[usize] {
        &self.node_of
    }

    /// Number of separator levels above the leaves.
    pub fn levels(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// Whether node `a` is a proper ancestor of node `b`.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        a != b && self.enter[a] <= self.enter[b] && self.exit[b] <= self.exit[a]
    }

    /// Whether points `p` and `q` may share a factor entry: same node, or one
    /// node an ancestor of the other.
    pub fn may_couple(&self, p: usize, q: usize) -> bool {
        let (a, b) = (self.node_of[p], self.node_of[q]);
        a == b || self.is_ancestor(a, b) || self.is_ancestor(b, a)
    }
}
