//! Labeling search trees.
//!
//! Nodes are kept in an arena in depth-first order. A node stands for the
//! search step reached through one restriction edge followed by the
//! propagation that closes it; the single-son chain of local consistency steps
//! is folded into the node's removal log. Interior nodes carry the partition
//! that produced their children.
//!
//! The root keeps the whole global domain when a label variable is pending,
//! so the first partition splits `𝔻` itself; every other node is closed under
//! the local operators before it is labeled or classified as a leaf.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::csp::{Assignment, Csp, Environment, GlobalDomain, Value, VarId};
use crate::error::{Error, Result};
use crate::operators::{
    local_operators, make_restriction, restriction_label, LocalOperator, Operator, RestrictionOperator,
};
use crate::propagation::{as_operators, closure_bruteforce, closure_with, ClosureOptions, RemovalLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// One singleton cell per value.
    Enumerate,
    /// Lower and upper halves; the lower half takes the extra value.
    Split,
}

impl Strategy {
    pub fn keyword(self) -> &'static str {
        match self {
            Strategy::Enumerate => "enumerate",
            Strategy::Split => "split",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelDirective {
    pub var: VarId,
    pub strategy: Strategy,
}

impl LabelDirective {
    pub fn new(var: VarId, strategy: Strategy) -> Self {
        LabelDirective { var, strategy }
    }
}

/// Disjoint, non-empty cells exactly covering the variable's current values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub var: VarId,
    pub cells: Vec<BTreeSet<Value>>,
}

pub fn partition(d: &Environment, x: VarId, strategy: Strategy) -> Result<Partition> {
    d.universe().check_var(x)?;
    let values: Vec<Value> = d.values(x).collect();
    if values.is_empty() {
        return Err(Error::usage(format!(
            "cannot label `{}`: its environment is empty",
            d.universe().name(x)
        )));
    }
    let cells = match strategy {
        Strategy::Enumerate => values.iter().map(|&v| [v].into_iter().collect()).collect(),
        Strategy::Split if values.len() == 1 => vec![values.iter().copied().collect()],
        Strategy::Split => {
            let mid = values.len().div_ceil(2);
            vec![
                values[..mid].iter().copied().collect(),
                values[mid..].iter().copied().collect(),
            ]
        }
    };
    Ok(Partition { var: x, cells })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BranchStep {
    pub var: VarId,
    pub kept: BTreeSet<Value>,
}

/// The restriction choices from the root; denotes a restricted environment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BranchId(pub Vec<BranchStep>);

pub const ROOT_LABEL: &str = "root";

impl BranchId {
    pub fn root() -> Self {
        BranchId(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, step: BranchStep) -> BranchId {
        let mut steps = self.0.clone();
        steps.push(step);
        BranchId(steps)
    }

    pub fn parent(&self) -> Option<BranchId> {
        if self.0.is_empty() {
            None
        } else {
            Some(BranchId(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// `root`, or the steps joined by `/` (e.g. `PM=1/AM∈{1,2}`).
    pub fn label(&self, dom: &GlobalDomain) -> String {
        if self.0.is_empty() {
            return ROOT_LABEL.to_string();
        }
        self.0
            .iter()
            .map(|s| restriction_label(dom.name(s.var), &s.kept))
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Inverse of [`BranchId::label`]; also accepts `X in {1,2}`.
    pub fn parse(dom: &GlobalDomain, text: &str) -> Result<BranchId> {
        let text = text.trim();
        if text == ROOT_LABEL || text.is_empty() {
            return Ok(BranchId::root());
        }
        let mut steps = Vec::new();
        for part in text.split('/') {
            let bad = || Error::usage(format!("malformed branch step `{part}`"));
            let (name, kept) = if let Some((n, v)) = part.split_once('=') {
                let v: Value = v.trim().parse().map_err(|_| bad())?;
                (n.trim(), [v].into_iter().collect::<BTreeSet<_>>())
            } else {
                let (n, set) = part
                    .split_once('∈')
                    .or_else(|| part.split_once(" in "))
                    .ok_or_else(bad)?;
                let set = set.trim();
                let inner = set
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(bad)?;
                let vals = inner
                    .split(',')
                    .map(|v| v.trim().parse::<Value>().map_err(|_| bad()))
                    .collect::<Result<BTreeSet<_>>>()?;
                (n.trim(), vals)
            };
            let var = dom.lookup(name)?;
            steps.push(BranchStep { var, kept });
        }
        Ok(BranchId(steps))
    }

    pub fn restrictions(&self, universe: &Arc<GlobalDomain>) -> Result<Vec<RestrictionOperator>> {
        self.0
            .iter()
            .map(|s| make_restriction(universe, s.var, s.kept.clone()))
            .collect()
    }

    /// `𝔻` reduced by exactly this branch's restriction operators.
    pub fn restricted_env(&self, universe: &Arc<GlobalDomain>) -> Result<Environment> {
        let mut env = Environment::full(universe);
        for r in self.restrictions(universe)? {
            env = r.reduce(&env);
        }
        Ok(env)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arrival {
    Root,
    Restriction(RestrictionOperator),
}

impl Arrival {
    pub fn operator_id(&self) -> Option<&str> {
        match self {
            Arrival::Root => None,
            Arrival::Restriction(r) => Some(r.id()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeStatus {
    Interior(Partition),
    Solution(Assignment),
    /// Variables whose environment is empty.
    Failure(Vec<VarId>),
    /// Label variables fixed but the environment is not a single tuple.
    Exhausted,
}

impl NodeStatus {
    pub fn tag(&self) -> &'static str {
        match self {
            NodeStatus::Interior(_) => "INTERIOR",
            NodeStatus::Solution(_) => "SOLUTION",
            NodeStatus::Failure(_) => "FAILURE",
            NodeStatus::Exhausted => "EXHAUSTED",
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self, NodeStatus::Interior(_))
    }
}

/// The quadruple `(d, e, f, p)` plus its place in the arena.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub branch: BranchId,
    /// `d`
    pub env: Environment,
    /// `e`
    pub restricted: Environment,
    /// `f`
    pub arrival: Arrival,
    /// `p`
    pub depth: usize,
    /// Removals performed on the way into this node.
    pub log: RemovalLog,
    /// Last step index used by this node's log.
    pub last_step: usize,
    pub status: NodeStatus,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    csp: Csp,
    operators: Vec<LocalOperator>,
    labeling: Vec<LabelDirective>,
    nodes: Vec<SearchNode>,
}

/// Depth-first construction of the complete search tree.
pub fn solve(csp: &Csp, labeling: &[LabelDirective]) -> SearchTree {
    let operators = local_operators(csp);
    let full = csp.full_env();
    let mut tree = SearchTree {
        csp: csp.clone(),
        operators,
        labeling: labeling.to_vec(),
        nodes: Vec::new(),
    };
    let root = SearchNode {
        branch: BranchId::root(),
        env: full.clone(),
        restricted: full,
        arrival: Arrival::Root,
        depth: 0,
        log: RemovalLog::default(),
        last_step: 0,
        status: NodeStatus::Exhausted,
        parent: None,
        children: Vec::new(),
    };
    tree.nodes.push(root);
    if tree.pending_label(&tree.nodes[0].env).is_none() {
        let locals = as_operators(&tree.operators);
        let res = closure_with(&tree.nodes[0].env, &locals, ClosureOptions::default());
        let root = &mut tree.nodes[0];
        root.env = res.env;
        root.last_step = res.steps;
        root.log = res.log;
    }
    tree.expand(0);
    tree
}

impl SearchTree {
    fn pending_label(&self, env: &Environment) -> Option<LabelDirective> {
        self.labeling.iter().copied().find(|l| env.var_len(l.var) > 1)
    }

    fn expand(&mut self, idx: usize) {
        let env = self.nodes[idx].env.clone();
        if env.has_empty_var() {
            self.nodes[idx].status = NodeStatus::Failure(env.empty_vars());
            return;
        }
        let Some(label) = self.pending_label(&env) else {
            self.nodes[idx].status = match env.as_assignment() {
                Some(t) if self.csp.is_solution(&t).unwrap_or(false) => NodeStatus::Solution(t),
                _ => NodeStatus::Exhausted,
            };
            return;
        };
        let part = partition(&env, label.var, label.strategy).expect("non-empty environment");
        self.nodes[idx].status = NodeStatus::Interior(part.clone());
        for cell in part.cells {
            let r = make_restriction(self.csp.domain(), part.var, cell.clone())
                .expect("cells are non-empty subsets of the domain");
            let parent = &self.nodes[idx];
            let mut ops = vec![Operator::Restriction(r.clone())];
            ops.extend(as_operators(&self.operators));
            let res = closure_with(
                &parent.env,
                &ops,
                ClosureOptions {
                    first_step: parent.last_step,
                    ..Default::default()
                },
            );
            let child = SearchNode {
                branch: parent.branch.child(BranchStep {
                    var: part.var,
                    kept: cell,
                }),
                restricted: r.reduce(&parent.restricted),
                env: res.env,
                arrival: Arrival::Restriction(r),
                depth: parent.depth + 1,
                last_step: parent.last_step + res.steps,
                log: res.log,
                status: NodeStatus::Exhausted,
                parent: Some(idx),
                children: Vec::new(),
            };
            let cidx = self.nodes.len();
            self.nodes.push(child);
            self.nodes[idx].children.push(cidx);
            self.expand(cidx);
        }
    }

    pub fn csp(&self) -> &Csp {
        &self.csp
    }

    pub fn operators(&self) -> &[LocalOperator] {
        &self.operators
    }

    pub fn labeling(&self) -> &[LabelDirective] {
        &self.labeling
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &SearchNode {
        &self.nodes[idx]
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty())
    }

    pub fn find(&self, branch: &BranchId) -> Option<usize> {
        self.nodes.iter().position(|n| &n.branch == branch)
    }

    /// Node indices from the root down to `idx`.
    pub fn path(&self, idx: usize) -> Vec<usize> {
        let mut path = vec![idx];
        let mut cur = idx;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// All removals from the root down to `idx`, in order.
    pub fn branch_log(&self, idx: usize) -> RemovalLog {
        let mut log = RemovalLog::default();
        for i in self.path(idx) {
            log.extend(self.nodes[i].log.clone());
        }
        log
    }

    pub fn branch_label(&self, idx: usize) -> String {
        self.nodes[idx].branch.label(self.csp.domain())
    }

    pub fn failure_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.status, NodeStatus::Failure(_)))
            .count()
    }

    /// Tuples read off the solution leaves.
    pub fn solutions(&self) -> BTreeSet<Assignment> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.status {
                NodeStatus::Solution(t) => Some(t.clone()),
                _ => None,
            })
            .collect()
    }

    /// Every leaf satisfies `d = CL↓(e, L)`, checked with the sweep oracle.
    pub fn is_complete(&self) -> bool {
        let locals = as_operators(&self.operators);
        self.leaves().all(|i| {
            let n = &self.nodes[i];
            n.env == closure_bruteforce(&n.restricted, &locals)
        })
    }

    /// A copy cut below `depth`; cut interior nodes become leaves.
    pub fn truncated(&self, depth: usize) -> SearchTree {
        let mut out = self.clone();
        let keep: Vec<bool> = out.nodes.iter().map(|n| n.depth <= depth).collect();
        let mut remap = vec![usize::MAX; out.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in out.nodes.iter().enumerate() {
            if keep[i] {
                remap[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        for n in &mut nodes {
            n.parent = n.parent.map(|p| remap[p]);
            n.children = n.children.iter().filter(|&&c| keep[c]).map(|&c| remap[c]).collect();
            if n.children.is_empty() && !n.status.is_leaf() {
                n.status = NodeStatus::Exhausted;
            }
        }
        out.nodes = nodes;
        out
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{solutions_bruteforce, CmpOp, DEFAULT_ENUMERATION_CAP};
    use crate::instances::conference;

    fn set(v: &[Value]) -> BTreeSet<Value> {
        v.iter().copied().collect()
    }

    #[test]
    fn partitions() {
        let csp = conference();
        let pm = csp.var("PM").unwrap();
        let p = partition(&csp.full_env(), pm, Strategy::Enumerate).unwrap();
        assert_eq!(p.cells, vec![set(&[1]), set(&[2]), set(&[3])]);
        let p = partition(&csp.full_env(), pm, Strategy::Split).unwrap();
        assert_eq!(p.cells, vec![set(&[1, 2]), set(&[3])]);
        let mut d = csp.full_env();
        d.set_values(pm, [2]);
        assert_eq!(partition(&d, pm, Strategy::Enumerate).unwrap().cells, vec![set(&[2])]);
        assert_eq!(partition(&d, pm, Strategy::Split).unwrap().cells, vec![set(&[2])]);
        d.set_values(pm, []);
        assert!(matches!(partition(&d, pm, Strategy::Enumerate), Err(Error::Usage(_))));
    }

    #[test]
    fn conference_tree() {
        let csp = conference();
        let pm = csp.var("PM").unwrap();
        let tree = solve(&csp, &[LabelDirective::new(pm, Strategy::Enumerate)]);
        assert_eq!(tree.root().children.len(), 3);
        let statuses: Vec<&str> = tree
            .root()
            .children
            .iter()
            .map(|&c| tree.node(c).status.tag())
            .collect();
        assert_eq!(statuses, vec!["SOLUTION", "SOLUTION", "FAILURE"]);
        let labels: Vec<String> = tree.root().children.iter().map(|&c| tree.branch_label(c)).collect();
        assert_eq!(labels, vec!["PM=1", "PM=2", "PM=3"]);
        let ma = csp.var("MA").unwrap();
        let failed = tree.node(tree.root().children[2]);
        assert!(matches!(&failed.status, NodeStatus::Failure(v) if v.contains(&ma)));
        assert_eq!(
            tree.solutions(),
            solutions_bruteforce(&csp, DEFAULT_ENUMERATION_CAP).unwrap()
        );
        assert!(tree.is_complete());
        assert_eq!(tree.failure_count(), 1);
    }

    #[test]
    fn no_labeling_gives_reduced_domains() {
        let csp = conference();
        let tree = solve(&csp, &[]);
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.root().status, NodeStatus::Exhausted);
        assert_eq!(tree.root().env.len(), 8);
        assert!(tree.is_complete());
    }

    #[test]
    fn small_chain() {
        let csp = Csp::builder()
            .var("X", 1..=2)
            .var("Y", 1..=2)
            .compare("X", CmpOp::Lt, "Y", 0)
            .build()
            .unwrap();
        let x = csp.var("X").unwrap();
        let tree = solve(&csp, &[LabelDirective::new(x, Strategy::Enumerate)]);
        assert_eq!(tree.root().children.len(), 2);
        let sols = tree.solutions();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols.iter().next().unwrap().display(csp.domain()), "X=1 Y=2");
        assert!(matches!(
            tree.node(tree.root().children[1]).status,
            NodeStatus::Failure(_)
        ));
    }

    #[test]
    fn unsatisfiable_and_unconstrained() {
        let csp = Csp::builder()
            .var("X", [1])
            .var("Y", [1])
            .compare("X", CmpOp::Lt, "Y", 0)
            .build()
            .unwrap();
        let x = csp.var("X").unwrap();
        let tree = solve(&csp, &[LabelDirective::new(x, Strategy::Enumerate)]);
        assert!(tree.solutions().is_empty());

        let free = Csp::builder().var("X", 1..=2).build().unwrap();
        let x = free.var("X").unwrap();
        let tree = solve(&free, &[LabelDirective::new(x, Strategy::Enumerate)]);
        assert_eq!(tree.solutions().len(), 2);
    }

    #[test]
    fn split_labeling_recurses() {
        let csp = conference();
        let labels: Vec<LabelDirective> = csp
            .domain()
            .vars()
            .map(|v| LabelDirective::new(v, Strategy::Split))
            .collect();
        let tree = solve(&csp, &labels);
        assert!(tree.is_complete());
        assert_eq!(
            tree.solutions(),
            solutions_bruteforce(&csp, DEFAULT_ENUMERATION_CAP).unwrap()
        );
        for n in tree.nodes() {
            assert!(n.env.is_subset(&n.restricted));
            assert_eq!(n.restricted, n.branch.restricted_env(csp.domain()).unwrap());
            if let Some(p) = n.parent {
                assert!(n.env.is_subset(&tree.node(p).env));
                assert_eq!(n.depth, tree.node(p).depth + 1);
            }
            if let NodeStatus::Interior(part) = &n.status {
                assert_eq!(part.cells.len(), n.children.len());
            }
        }
    }

    #[test]
    fn truncation_breaks_completeness() {
        let csp = conference();
        let pm = csp.var("PM").unwrap();
        let tree = solve(&csp, &[LabelDirective::new(pm, Strategy::Enumerate)]);
        let cut = tree.truncated(0);
        assert_eq!(cut.nodes().len(), 1);
        assert!(!cut.is_complete());
        assert!(tree.truncated(1).is_complete());
    }

    #[test]
    fn branch_labels_round_trip() {
        let csp = conference();
        let dom = csp.domain();
        let pm = csp.var("PM").unwrap();
        let am = csp.var("AM").unwrap();
        let b = BranchId::root()
            .child(BranchStep {
                var: pm,
                kept: set(&[1, 2]),
            })
            .child(BranchStep {
                var: am,
                kept: set(&[3]),
            });
        let label = b.label(dom);
        assert_eq!(label, "PM∈{1,2}/AM=3");
        assert_eq!(BranchId::parse(dom, &label).unwrap(), b);
        assert_eq!(BranchId::parse(dom, "PM in {1,2}/AM=3").unwrap(), b);
        assert_eq!(BranchId::parse(dom, "root").unwrap(), BranchId::root());
        assert!(BranchId::parse(dom, "QQ=1").is_err());
        assert!(BranchId::parse(dom, "PM~1").is_err());
    }
}
