//! Exact maximum flow / minimum cut on real capacities.
//!
//! Augmentation always follows shortest residual paths: each phase builds a
//! BFS level graph and saturates it with a blocking flow (Dinic). Residual
//! capacities at or below [`EPS`] are treated as exhausted.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Residual capacities at or below this are considered zero.
pub const EPS: f64 = 1e-12;

/// Largest accepted gap between flow value and cut capacity.
pub const DUALITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub arcs: Vec<Arc>,
    pub source: usize,
    pub sink: usize,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub value: f64,
    /// Flow on each arc, in the order of `FlowNetwork::arcs`.
    pub flows: Vec<f64>,
    /// Source side of a minimum cut: nodes reachable in the final residual graph.
    pub min_cut: Vec<bool>,
    /// Capacity of `min_cut` minus `value`.
    pub duality_gap: f64,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            nodes,
            arcs: Vec::new(),
            source,
            sink,
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) -> usize {
        self.arcs.push(Arc { from, to, capacity });
        self.arcs.len() - 1
    }

    fn validate(&self) -> Result<()> {
        if self.source >= self.nodes || self.sink >= self.nodes {
            return Err(Error::BadNetwork("terminal out of range".into()));
        }
        if self.source == self.sink {
            return Err(Error::BadNetwork("source equals sink".into()));
        }
        for (k, a) in self.arcs.iter().enumerate() {
            if a.from >= self.nodes || a.to >= self.nodes {
                return Err(Error::BadNetwork(format!("arc {k} endpoint out of range")));
            }
            if a.capacity.is_nan() || a.capacity < 0.0 {
                return Err(Error::BadNetwork(format!(
                    "arc {k} has capacity {}",
                    a.capacity
                )));
            }
        }
        Ok(())
    }
}

struct Residual {
    to: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn build(net: &FlowNetwork) -> Self {
        let m = net.arcs.len();
        let mut to = Vec::with_capacity(2 * m);
        let mut cap = Vec::with_capacity(2 * m);
        let mut adj = vec![Vec::new(); net.nodes];
        for (k, a) in net.arcs.iter().enumerate() {
            to.push(a.to);
            cap.push(a.capacity);
            to.push(a.from);
            cap.push(0.0);
            adj[a.from].push(2 * k);
            adj[a.to].push(2 * k + 1);
        }
        Residual { to, cap, adj }
    }

    fn levels(&self, s: usize) -> Vec<u32> {
        let mut level = vec![u32::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > EPS && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// Saturates the level graph; returns the flow pushed in this phase.
    fn blocking_flow(&mut self, s: usize, t: usize, level: &mut [u32]) -> Result<f64> {
        let mut next = vec![0usize; self.adj.len()];
        let mut path: Vec<usize> = Vec::new();
        let mut pushed = 0.0;
        let mut u = s;
        loop {
            if u == t {
                let b = path
                    .iter()
                    .map(|&e| self.cap[e])
                    .fold(f64::INFINITY, f64::min);
                if b.is_infinite() {
                    return Err(Error::BadNetwork("unbounded source-sink path".into()));
                }
                for &e in &path {
                    self.cap[e] -= b;
                    self.cap[e ^ 1] += b;
                }
                pushed += b;
                // retreat to the tail of the first saturated arc
                let cut = path.iter().position(|&e| self.cap[e] <= EPS).unwrap_or(0);
                path.truncate(cut);
                u = path.last().map_or(s, |&e| self.to[e]);
                continue;
            }
            let mut advanced = false;
            while next[u] < self.adj[u].len() {
                let e = self.adj[u][next[u]];
                let v = self.to[e];
                if self.cap[e] > EPS && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if advanced {
                continue;
            }
            if u == s {
                return Ok(pushed);
            }
            level[u] = u32::MAX;
            let e = path.pop().expect("non-source node has an entering arc");
            u = self.to[e ^ 1];
            next[u] += 1;
        }
    }
}

/// Maximum flow with a certifying minimum cut.
pub fn max_flow(net: &FlowNetwork) -> Result<FlowResult> {
    net.validate()?;
    let (s, t) = (net.source, net.sink);
    let mut res = Residual::build(net);
    let mut value = 0.0;
    loop {
        let mut level = res.levels(s);
        if level[t] == u32::MAX {
            break;
        }
        let pushed = res.blocking_flow(s, t, &mut level)?;
        if pushed <= EPS {
            break;
        }
        value += pushed;
    }

    let level = res.levels(s);
    let min_cut: Vec<bool> = level.iter().map(|&l| l != u32::MAX).collect();
    let flows: Vec<f64> = (0..net.arcs.len()).map(|k| res.cap[2 * k + 1]).collect();
    let cut_capacity: f64 = net
        .arcs
        .iter()
        .filter(|a| min_cut[a.from] && !min_cut[a.to])
        .map(|a| a.capacity)
        .sum();
    let duality_gap = cut_capacity - value;
    if duality_gap.abs() > DUALITY_TOL {
        return Err(Error::BadNetwork(format!(
            "duality gap {duality_gap:e} exceeds tolerance"
        )));
    }
    Ok(FlowResult {
        value,
        flows,
        min_cut,
        duality_gap,
    })
}
