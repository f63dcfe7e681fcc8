//! Network-coding instances: an acyclic directed graph with exact rational
//! edge capacities, source roles, terminals, and eavesdrop sets.
//!
//! Instances are plain immutable data. [`NetworkInstance::validate`] reports
//! invariant violations as data rather than failing, so malformed files can
//! be inspected; the other operations assume a valid instance.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use num_rational::Rational64;
use num_traits::Zero;

use crate::{Error, Result};

pub type NodeId = String;
pub type EdgeId = String;

/// A directed edge with an exact positive rational capacity in bits per
/// channel use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: Rational64,
}

/// Which kinds of bits a source contributes. `Message`/`Both` place the
/// node in the message set, `Random`/`Both` in the masking set. Plain
/// key-dissemination instances use one role for every source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SourceRole {
    Message,
    Random,
    Both,
}

impl SourceRole {
    pub fn is_message(self) -> bool {
        matches!(self, SourceRole::Message | SourceRole::Both)
    }
    pub fn is_random(self) -> bool {
        matches!(self, SourceRole::Random | SourceRole::Both)
    }
    pub fn as_str(self) -> &'static str {
        match self {
            SourceRole::Message => "message",
            SourceRole::Random => "random",
            SourceRole::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDecl {
    pub node: NodeId,
    pub role: SourceRole,
}

/// One eavesdropper capability: a set of edges whose messages are seen,
/// plus source nodes whose entire generated bit vectors are seen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EavesdropSet {
    pub edges: BTreeSet<EdgeId>,
    pub observed_sources: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkInstance {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<Edge>,
    pub sources: Vec<SourceDecl>,
    pub terminals: Vec<NodeId>,
    pub eavesdrop_sets: Vec<EavesdropSet>,
}

/// Machine-readable validation violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    Acyclicity,
    DanglingRef,
    BadCapacity,
    DuplicateId,
    EmptyEavesdropSet,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::Acyclicity => "ACYCLICITY",
            ViolationCode::DanglingRef => "DANGLING_REF",
            ViolationCode::BadCapacity => "BAD_CAPACITY",
            ViolationCode::DuplicateId => "DUPLICATE_ID",
            ViolationCode::EmptyEavesdropSet => "EMPTY_EAVESDROP_SET",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub subject: String,
    pub message: String,
}

/// Violations are hard invariant breaks; notes surface allowed-but-unusual
/// structure (a terminal that is also a source, for example).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl NetworkInstance {
    pub fn node_exists(&self, id: &str) -> bool {
        self.nodes.iter().any(|n| n == id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn source_role(&self, node: &str) -> Option<SourceRole> {
        self.sources.iter().find(|s| s.node == node).map(|s| s.role)
    }

    pub fn is_terminal(&self, node: &str) -> bool {
        self.terminals.iter().any(|t| t == node)
    }

    /// Incoming edges of `node`, ascending by edge id. This order fixes the
    /// input layout of every encoder and decoder.
    pub fn in_edges(&self, node: &str) -> Vec<&Edge> {
        let mut v: Vec<&Edge> = self.edges.iter().filter(|e| e.head == node).collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    pub fn out_edges(&self, node: &str) -> Vec<&Edge> {
        let mut v: Vec<&Edge> = self.edges.iter().filter(|e| e.tail == node).collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    /// Source nodes in ascending id order; this is the global order in
    /// which source bit blocks are packed into an assignment.
    pub fn sorted_sources(&self) -> Vec<&SourceDecl> {
        let mut v: Vec<&SourceDecl> = self.sources.iter().collect();
        v.sort_by(|a, b| a.node.cmp(&b.node));
        v
    }

    /// Checks every structural invariant and returns the findings.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut push = |code, subject: &str, message: String| {
            report.violations.push(Violation {
                code,
                subject: subject.to_string(),
                message,
            });
        };

        let mut node_set: HashSet<&str> = HashSet::new();
        for n in &self.nodes {
            if !node_set.insert(n) {
                push(
                    ViolationCode::DuplicateId,
                    n,
                    format!("node id `{n}` declared twice"),
                );
            }
        }

        let mut edge_ids: HashSet<&str> = HashSet::new();
        for e in &self.edges {
            if !edge_ids.insert(&e.id) {
                push(
                    ViolationCode::DuplicateId,
                    &e.id,
                    format!("edge id `{}` declared twice", e.id),
                );
            }
            for endpoint in [&e.tail, &e.head] {
                if !node_set.contains(endpoint.as_str()) {
                    push(
                        ViolationCode::DanglingRef,
                        &e.id,
                        format!("edge `{}` references unknown node `{endpoint}`", e.id),
                    );
                }
            }
            if e.capacity <= Rational64::zero() {
                push(
                    ViolationCode::BadCapacity,
                    &e.id,
                    format!("edge `{}` capacity must be positive", e.id),
                );
            }
        }

        let mut seen_sources: HashSet<&str> = HashSet::new();
        for s in &self.sources {
            if !seen_sources.insert(&s.node) {
                push(
                    ViolationCode::DuplicateId,
                    &s.node,
                    format!("source `{}` declared twice", s.node),
                );
            }
            if !node_set.contains(s.node.as_str()) {
                push(
                    ViolationCode::DanglingRef,
                    &s.node,
                    format!("source `{}` is not a node", s.node),
                );
            }
        }
        let mut seen_terminals: HashSet<&str> = HashSet::new();
        for t in &self.terminals {
            if !seen_terminals.insert(t) {
                push(
                    ViolationCode::DuplicateId,
                    t,
                    format!("terminal `{t}` declared twice"),
                );
            }
            if !node_set.contains(t.as_str()) {
                push(
                    ViolationCode::DanglingRef,
                    t,
                    format!("terminal `{t}` is not a node"),
                );
            }
        }

        for (i, b) in self.eavesdrop_sets.iter().enumerate() {
            let subject = format!("eavesdrop_sets[{i}]");
            if b.edges.is_empty() && b.observed_sources.is_empty() {
                push(
                    ViolationCode::EmptyEavesdropSet,
                    &subject,
                    format!("{subject} observes nothing"),
                );
            }
            for e in &b.edges {
                if !edge_ids.contains(e.as_str()) {
                    push(
                        ViolationCode::DanglingRef,
                        &subject,
                        format!("{subject} references unknown edge `{e}`"),
                    );
                }
            }
            for s in &b.observed_sources {
                if !seen_sources.contains(s.as_str()) {
                    push(
                        ViolationCode::DanglingRef,
                        &subject,
                        format!("{subject} observes `{s}`, which is not a source"),
                    );
                }
            }
        }

        if self.topological_order().is_err() {
            push(
                ViolationCode::Acyclicity,
                "graph",
                "the directed graph has no topological order".to_string(),
            );
        }

        for t in &self.terminals {
            if seen_sources.contains(t.as_str()) {
                report
                    .notes
                    .push(format!("terminal `{t}` is also a source"));
            }
        }

        report
    }

    /// Deterministic topological order: Kahn's algorithm with ties broken
    /// by ascending node id.
    pub fn topological_order(&self) -> Result<Vec<NodeId>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in &self.edges {
            // Dangling endpoints are a validation matter, not a panic.
            if !indegree.contains_key(e.tail.as_str()) || !indegree.contains_key(e.head.as_str()) {
                continue;
            }
            *indegree.get_mut(e.head.as_str()).unwrap() += 1;
            succ.entry(e.tail.as_str()).or_default().push(e.head.as_str());
        }

        let mut ready: BTreeSet<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&next) = ready.iter().next() {
            ready.remove(next);
            order.push(next.to_string());
            if let Some(heads) = succ.get(next) {
                for h in heads {
                    let d = indegree.get_mut(h).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(h);
                    }
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(Error::Cyclic);
        }
        Ok(order)
    }

    /// Max-flow = min-cut value from a super-source attached to
    /// `source_set` to `sink`, in exact rational arithmetic.
    pub fn min_cut(&self, source_set: &BTreeSet<NodeId>, sink: &NodeId) -> Result<Rational64> {
        for s in source_set {
            if !self.node_exists(s) {
                return Err(Error::UnknownNode(s.clone()));
            }
        }
        if !self.node_exists(sink) {
            return Err(Error::UnknownNode(sink.clone()));
        }
        if source_set.contains(sink) {
            return Err(Error::SinkInSourceSet);
        }

        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let super_source = self.nodes.len();
        let mut flow = FlowNetwork::new(self.nodes.len() + 1);
        for e in &self.edges {
            flow.add_edge(index[e.tail.as_str()], index[e.head.as_str()], e.capacity);
        }
        // A capacity strictly above the total edge capacity acts as infinity.
        let inf = self
            .edges
            .iter()
            .map(|e| e.capacity)
            .fold(Rational64::zero(), |a, b| a + b)
            + Rational64::from_integer(1);
        for s in source_set {
            flow.add_edge(super_source, index[s.as_str()], inf);
        }
        Ok(flow.max_flow(super_source, index[sink.as_str()]))
    }
}

struct FlowEdge {
    to: usize,
    cap: Rational64,
    rev: usize,
}

/// Edmonds-Karp over exact rationals. BFS augmentation keeps the iteration
/// count polynomial independent of the capacity values.
struct FlowNetwork {
    adj: Vec<Vec<FlowEdge>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        FlowNetwork {
            adj: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: Rational64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(FlowEdge {
            to,
            cap,
            rev: rev_from,
        });
        self.adj[to].push(FlowEdge {
            to: from,
            cap: Rational64::zero(),
            rev: rev_to,
        });
    }

    fn max_flow(&mut self, source: usize, sink: usize) -> Rational64 {
        let mut total = Rational64::zero();
        loop {
            // parent[v] = (node, edge index) on a shortest augmenting path
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::new();
            queue.push_back(source);
            let mut seen = vec![false; self.adj.len()];
            seen[source] = true;
            while let Some(u) = queue.pop_front() {
                for (i, e) in self.adj[u].iter().enumerate() {
                    if e.cap > Rational64::zero() && !seen[e.to] {
                        seen[e.to] = true;
                        parent[e.to] = Some((u, i));
                        queue.push_back(e.to);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }
            let mut bottleneck: Option<Rational64> = None;
            let mut v = sink;
            while v != source {
                let (u, i) = parent[v].unwrap();
                let cap = self.adj[u][i].cap;
                bottleneck = Some(match bottleneck {
                    Some(b) if b < cap => b,
                    _ => cap,
                });
                v = u;
            }
            let push = bottleneck.unwrap();
            let mut v = sink;
            while v != source {
                let (u, i) = parent[v].unwrap();
                let rev = self.adj[u][i].rev;
                self.adj[u][i].cap -= push;
                self.adj[v][rev].cap += push;
                v = u;
            }
            total += push;
        }
    }
}
