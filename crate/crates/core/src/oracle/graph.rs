use crate::error::{MrfError, Result};

/// Simple undirected graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGraph {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl FiniteGraph {
    /// Rejects self-loops, repeated edges and out-of-range endpoints.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut kept = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(MrfError::Parse(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(MrfError::Parse(format!("self-loop at node {u}")));
            }
            if adj[u].contains(&v) {
                return Err(MrfError::Parse(format!("repeated edge ({u}, {v})")));
            }
            adj[u].push(v);
            adj[v].push(u);
            kept.push((u.min(v), u.max(v)));
        }
        Ok(Self { adj, edges: kept })
    }

    /// Parses the edge-list format: a header line `n m`, then `m` lines `u v`
    /// with 0-indexed endpoints. Blank lines and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| MrfError::Parse("empty edge list".into()))?;
        let (n, m) = parse_pair(header)?;
        let edges = lines.map(parse_pair).collect::<Result<Vec<_>>>()?;
        if edges.len() != m {
            return Err(MrfError::Parse(format!(
                "header announces {m} edges, found {}",
                edges.len()
            )));
        }
        Self::new(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.edges.len());
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// `counts[k]` = number of nodes of degree `k`.
    pub fn degree_profile(&self) -> Vec<usize> {
        let max = self.adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut counts = vec![0; max + 1];
        for a in &self.adj {
            counts[a.len()] += 1;
        }
        counts
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::new(n, &edges).expect("complete graph is simple")
    }

    /// Star `K_{1,k}` with centre 0.
    pub fn star(k: usize) -> Self {
        let edges: Vec<_> = (1..=k).map(|v| (0, v)).collect();
        Self::new(k + 1, &edges).expect("star is simple")
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Self::new(10, &edges).expect("Petersen graph is simple")
    }

    /// Triangular prism: two triangles joined by a perfect matching.
    pub fn prism() -> Self {
        let edges = [
            (0, 1),
            (1, 2),
            (0, 2),
            (3, 4),
            (4, 5),
            (3, 5),
            (0, 3),
            (1, 4),
            (2, 5),
        ];
        Self::new(6, &edges).expect("prism is simple")
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(|t| {
        t.parse::<usize>()
            .map_err(|e| MrfError::Parse(format!("`{t}` in line `{line}`: {e}")))
    });
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a?, b?)),
        _ => Err(MrfError::Parse(format!(
            "expected two integers, got `{line}`"
        ))),
    }
}

/// A rooted tree together with the depth of every node.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub graph: FiniteGraph,
    pub depth: Vec<usize>,
    pub height: usize,
}

impl RootedTree {
    /// The depth-`d` tree whose root has `Δ` children and every other
    /// internal node `Δ - 1` children, so internal nodes have degree `Δ`.
    pub fn regular(delta: usize, height: usize) -> Self {
        Self::build(delta, height, delta)
    }

    /// The depth-`d` tree whose root `v_0` has a single child `v_1`, below
    /// which every internal node has `Δ - 1` children.
    pub fn single_branch(delta: usize, height: usize) -> Self {
        Self::build(delta, height, 1)
    }

    fn build(delta: usize, height: usize, root_children: usize) -> Self {
        let mut edges = Vec::new();
        let mut depth = vec![0];
        let mut frontier = vec![0usize];
        for level in 1..=height {
            let mut next = Vec::new();
            for &parent in &frontier {
                let kids = if parent == 0 {
                    root_children
                } else {
                    delta - 1
                };
                for _ in 0..kids {
                    let id = depth.len();
                    depth.push(level);
                    edges.push((parent, id));
                    next.push(id);
                }
            }
            frontier = next;
        }
        let graph = FiniteGraph::new(depth.len(), &edges).expect("tree is simple");
        Self {
            graph,
            depth,
            height,
        }
    }

    pub fn nodes_at_depth(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        self.depth
            .iter()
            .enumerate()
            .filter(move |(_, &x)| x == d)
            .map(|(i, _)| i)
    }
}
