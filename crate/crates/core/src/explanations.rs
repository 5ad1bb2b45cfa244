//! Value-withdrawal proof trees.
//!
//! Trees are assembled from the removal logs of a complete search tree in two
//! passes. Walking down a branch, each logged removal becomes a node whose
//! children are the trees of its antecedents; restriction removals become
//! facts. All judgments of one branch are stated under that branch's context
//! `{e}`, where `e` is the restricted environment of the leaf the branch ends
//! in. This is sound for facts as well, since `e ⊆ r(𝔻)` for every restriction
//! `r` on the way down.
//!
//! Climbing back up, every partition node groups the trees rooted by the same
//! element under a labeling merge whose context is the union of the branch
//! contexts. Merges are flattened: their children are always branch trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::csp::{Csp, DomainElement, GlobalDomain, VarId};
use crate::error::{Error, Result};
use crate::operators::{LocalOperator, RuleOrigin};
use crate::search::{BranchId, NodeStatus, SearchTree};

/// A set of branches, each standing for its restricted environment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context(pub BTreeSet<BranchId>);

impl Context {
    pub fn single(branch: BranchId) -> Self {
        Context([branch].into_iter().collect())
    }

    pub fn branches(&self) -> impl Iterator<Item = &BranchId> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self, dom: &GlobalDomain) -> Vec<String> {
        self.0.iter().map(|b| b.label(dom)).collect()
    }

    pub fn display(&self, dom: &GlobalDomain) -> String {
        format!("{{{}}}", self.labels(dom).join(","))
    }
}

/// `Γ ⊢ h`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Judgment {
    pub context: Context,
    pub element: DomainElement,
}

impl Judgment {
    pub fn display(&self, dom: &GlobalDomain) -> String {
        format!("{} |- {}", self.context.display(dom), dom.display_element(self.element))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Local,
    Restriction,
    Labeling,
}

impl RuleKind {
    pub fn tag(self) -> &'static str {
        match self {
            RuleKind::Local => "LOCAL",
            RuleKind::Restriction => "RESTRICTION",
            RuleKind::Labeling => "LABELING",
        }
    }

    pub fn from_tag(s: &str) -> Option<RuleKind> {
        match s {
            "LOCAL" => Some(RuleKind::Local),
            "RESTRICTION" => Some(RuleKind::Restriction),
            "LABELING" => Some(RuleKind::Labeling),
            _ => None,
        }
    }
}

/// Marker used as the origin of labeling merges.
pub const MERGE: &str = "MERGE";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeOrigin {
    Rule(RuleOrigin),
    Merge,
}

impl TreeOrigin {
    pub fn id(&self) -> &str {
        match self {
            TreeOrigin::Rule(r) => r.operator_id(),
            TreeOrigin::Merge => MERGE,
        }
    }

    pub fn constraint_id(&self) -> Option<&str> {
        match self {
            TreeOrigin::Rule(r) => r.constraint_id(),
            TreeOrigin::Merge => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProofTree {
    pub judgment: Judgment,
    pub kind: RuleKind,
    pub origin: TreeOrigin,
    pub children: Vec<Arc<ProofTree>>,
}

impl ProofTree {
    pub fn element(&self) -> DomainElement {
        self.judgment.element
    }

    pub fn context(&self) -> &Context {
        &self.judgment.context
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    /// Nodes in pre-order.
    pub fn preorder(&self) -> Vec<&ProofTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            for c in t.children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// The leaves.
    pub fn facts(&self) -> Vec<&ProofTree> {
        self.preorder().into_iter().filter(|t| t.children.is_empty()).collect()
    }

    /// Does any node originate from an operator of `constraint`?
    pub fn mentions_constraint(&self, constraint: &str) -> bool {
        self.preorder()
            .iter()
            .any(|t| t.origin.constraint_id() == Some(constraint))
    }

    /// Structural shape with contexts and elements rendered, for comparisons.
    pub fn shape(&self, dom: &GlobalDomain) -> String {
        let mut s = format!(
            "{}[{}:{}]",
            self.judgment.display(dom),
            self.kind.tag(),
            self.origin.id()
        );
        if !self.children.is_empty() {
            let kids: Vec<String> = self.children.iter().map(|c| c.shape(dom)).collect();
            s.push('(');
            s.push_str(&kids.join(" ; "));
            s.push(')');
        }
        s
    }
}

/// Trees of one branch, keyed by the element they explain.
pub type BranchTrees = BTreeMap<DomainElement, Arc<ProofTree>>;

/// The descent pass for the path from the root to `node`, under `{node}`.
pub fn s_down(tree: &SearchTree, node: usize) -> Result<BranchTrees> {
    let n = tree.node(node);
    let context = Context::single(n.branch.clone());
    let dom = tree.csp().domain();
    let mut trees = BranchTrees::new();
    for entry in tree.branch_log(node).iter() {
        let mut children = Vec::new();
        for a in &entry.rule.antecedents {
            match trees.get(a) {
                Some(t) => children.push(Arc::clone(t)),
                None if n.restricted.contains(*a) => {
                    return Err(Error::LogCorruption(format!(
                        "antecedent {} of {} has no tree and lies in the restricted environment",
                        dom.display_element(*a),
                        dom.display_element(entry.element)
                    )))
                }
                None => {
                    return Err(Error::LogCorruption(format!(
                        "antecedent {} of {} was never removed on this branch",
                        dom.display_element(*a),
                        dom.display_element(entry.element)
                    )))
                }
            }
        }
        let kind = if entry.rule.origin.is_restriction() {
            RuleKind::Restriction
        } else {
            RuleKind::Local
        };
        let t = ProofTree {
            judgment: Judgment {
                context: context.clone(),
                element: entry.element,
            },
            kind,
            origin: TreeOrigin::Rule(entry.rule.origin.clone()),
            children,
        };
        if trees.insert(entry.element, Arc::new(t)).is_some() {
            return Err(Error::LogCorruption(format!(
                "{} removed twice on one branch",
                dom.display_element(entry.element)
            )));
        }
    }
    Ok(trees)
}

/// Ascent result for one search node.
struct Ascent {
    /// `S↑`, ordered by (element, context).
    set: BTreeMap<Judgment, Arc<ProofTree>>,
    /// Branch-level trees below this node, per element, in branch order.
    by_element: BTreeMap<DomainElement, Vec<Arc<ProofTree>>>,
}

/// Query store over a complete search tree.
#[derive(Debug, Clone)]
pub struct Explanations {
    down: BTreeMap<usize, BranchTrees>,
    up: Vec<Arc<ProofTree>>,
    maximal: BTreeMap<DomainElement, Arc<ProofTree>>,
}

impl Explanations {
    pub fn build(tree: &SearchTree) -> Result<Explanations> {
        let mut down = BTreeMap::new();
        for leaf in tree.leaves() {
            down.insert(leaf, s_down(tree, leaf)?);
        }
        let ascent = Self::ascend(tree, 0, &down);
        let mut maximal = BTreeMap::new();
        for (j, t) in &ascent.set {
            let entry = maximal.entry(j.element).or_insert_with(|| Arc::clone(t));
            if t.context().len() > entry.context().len() {
                *entry = Arc::clone(t);
            }
        }
        Ok(Explanations {
            down,
            up: ascent.set.into_values().collect(),
            maximal,
        })
    }

    fn ascend(tree: &SearchTree, idx: usize, down: &BTreeMap<usize, BranchTrees>) -> Ascent {
        let node = tree.node(idx);
        if node.children.is_empty() {
            let trees = &down[&idx];
            return Ascent {
                set: trees.values().map(|t| (t.judgment.clone(), Arc::clone(t))).collect(),
                by_element: trees.iter().map(|(&h, t)| (h, vec![Arc::clone(t)])).collect(),
            };
        }
        let mut set = BTreeMap::new();
        let mut by_element: BTreeMap<DomainElement, Vec<Arc<ProofTree>>> = BTreeMap::new();
        for &c in &node.children {
            let sub = Self::ascend(tree, c, down);
            set.extend(sub.set);
            for (h, ts) in sub.by_element {
                by_element.entry(h).or_default().extend(ts);
            }
        }
        for (&h, ts) in &by_element {
            if ts.len() < 2 {
                continue;
            }
            let context = Context(ts.iter().flat_map(|t| t.context().0.iter().cloned()).collect());
            let judgment = Judgment { context, element: h };
            set.entry(judgment.clone()).or_insert_with(|| {
                Arc::new(ProofTree {
                    judgment,
                    kind: RuleKind::Labeling,
                    origin: TreeOrigin::Merge,
                    children: ts.clone(),
                })
            });
        }
        Ascent { set, by_element }
    }

    /// `S↓` of a leaf.
    pub fn branch_trees(&self, leaf: usize) -> Option<&BranchTrees> {
        self.down.get(&leaf)
    }

    /// `S↑` at the root.
    pub fn s_up(&self) -> &[Arc<ProofTree>] {
        &self.up
    }

    /// The maximal-context tree for `h`, or `None` if no branch removed it.
    pub fn explain(&self, h: DomainElement) -> Option<&Arc<ProofTree>> {
        self.maximal.get(&h)
    }

    /// One maximal tree per explained element, in element order.
    pub fn maximal_trees(&self) -> impl Iterator<Item = &Arc<ProofTree>> {
        self.maximal.values()
    }

    /// One tree per value of the emptied variable `x` at a failure leaf.
    pub fn failure_explanation(&self, tree: &SearchTree, leaf: usize, x: VarId) -> Result<Vec<Arc<ProofTree>>> {
        let dom = tree.csp().domain();
        dom.check_var(x)?;
        let node = tree.node(leaf);
        if !matches!(node.status, NodeStatus::Failure(_)) {
            return Err(Error::usage(format!(
                "branch {} is not a failure leaf",
                node.branch.label(dom)
            )));
        }
        if node.env.var_len(x) != 0 {
            return Err(Error::usage(format!(
                "`{}` is not empty on branch {}",
                dom.name(x),
                node.branch.label(dom)
            )));
        }
        let trees = self.down.get(&leaf).ok_or_else(|| Error::usage("not a leaf"))?;
        dom.values(x)
            .iter()
            .map(|&v| {
                trees
                    .get(&DomainElement::new(x, v))
                    .cloned()
                    .ok_or_else(|| Error::LogCorruption(format!("({},{v}) has no tree", dom.name(x))))
            })
            .collect()
    }
}

/// Checks that every node of `pt` instantiates a rule.
///
/// Local nodes pass the brute-force soundness check of their operator, with
/// the children's elements as antecedents and the same context throughout.
/// Restriction nodes are leaves with `h ∉ r(𝔻)` and `e ⊆ r(𝔻)` for each
/// context branch. Labeling nodes have children on the same element whose
/// contexts union to the node's context.
pub fn verify_proof_tree(pt: &ProofTree, csp: &Csp, operators: &[LocalOperator]) -> bool {
    let dom = csp.domain();
    if !dom.contains(pt.element()) || pt.context().is_empty() {
        return false;
    }
    let node_ok = match (pt.kind, &pt.origin) {
        (RuleKind::Local, TreeOrigin::Rule(RuleOrigin::Local { operator, constraint })) => {
            let Some(op) = operators.iter().find(|o| o.id() == operator) else {
                return false;
            };
            if op.constraint_id() != constraint {
                return false;
            }
            let antecedents: BTreeSet<DomainElement> = pt.children.iter().map(|c| c.element()).collect();
            antecedents.len() == pt.children.len()
                && pt.children.iter().all(|c| c.context() == pt.context())
                && op.rule_is_sound(&antecedents, pt.element())
        }
        (RuleKind::Restriction, TreeOrigin::Rule(RuleOrigin::Restriction { var, kept, .. })) => {
            pt.children.is_empty()
                && pt.element().var == *var
                && !kept.contains(&pt.element().value)
                && pt.context().branches().all(|b| {
                    b.restricted_env(dom)
                        .is_ok_and(|e| e.values(*var).all(|v| kept.contains(&v)))
                })
        }
        (RuleKind::Labeling, TreeOrigin::Merge) => {
            let union: BTreeSet<BranchId> = pt.children.iter().flat_map(|c| c.context().0.iter().cloned()).collect();
            !pt.children.is_empty()
                && pt.children.iter().all(|c| c.element() == pt.element())
                && union == pt.context().0
        }
        _ => false,
    };
    node_ok && pt.children.iter().all(|c| verify_proof_tree(c, csp, operators))
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::conference;
    use crate::search::{solve, LabelDirective, Strategy};

    fn conference_tree() -> SearchTree {
        let csp = conference();
        let pm = csp.var("PM").unwrap();
        solve(&csp, &[LabelDirective::new(pm, Strategy::Enumerate)])
    }

    fn labels(t: &ProofTree, dom: &GlobalDomain) -> Vec<String> {
        t.context().labels(dom)
    }

    #[test]
    fn descent_on_first_branch() {
        let tree = conference_tree();
        let csp = tree.csp();
        let e1 = tree.root().children[0];
        let trees = s_down(&tree, e1).unwrap();
        let mp2 = &trees[&csp.element("MP", 2).unwrap()];
        assert_eq!(
            mp2.shape(csp.domain()),
            "{PM=1} |- (MP,2)[LOCAL:c3/MP]({PM=1} |- (AM,1)[LOCAL:c5/AM]\
             ({PM=1} |- (PM,2)[RESTRICTION:PM=1] ; {PM=1} |- (PM,3)[RESTRICTION:PM=1]))"
        );
        // every removed element of the branch has exactly one tree
        let removed = csp.full_env().difference(&tree.node(e1).env);
        assert_eq!(trees.len(), removed.len());
        for t in trees.values() {
            for f in t.facts() {
                assert!(f.kind == RuleKind::Restriction || f.children.is_empty());
            }
        }
    }

    #[test]
    fn descent_without_removals_is_empty() {
        let csp = Csp::builder().var("X", 1..=2).build().unwrap();
        let tree = solve(&csp, &[]);
        assert!(s_down(&tree, 0).unwrap().is_empty());
        let ex = Explanations::build(&tree).unwrap();
        assert!(ex.s_up().is_empty());
    }

    #[test]
    fn descent_on_failing_branch_covers_ma() {
        let tree = conference_tree();
        let csp = tree.csp();
        let e3 = tree.root().children[2];
        let trees = s_down(&tree, e3).unwrap();
        for v in 1..=3 {
            assert!(trees.contains_key(&csp.element("MA", v).unwrap()));
        }
    }

    #[test]
    fn explain_contexts() {
        let tree = conference_tree();
        let csp = tree.csp();
        let dom = csp.domain();
        let ex = Explanations::build(&tree).unwrap();
        let mp2 = ex.explain(csp.element("MP", 2).unwrap()).unwrap();
        assert_eq!(labels(mp2, dom), vec!["PM=1", "PM=2", "PM=3"]);
        assert_eq!(mp2.kind, RuleKind::Labeling);
        assert_eq!(mp2.children.len(), 3);

        let pm1 = ex.explain(csp.element("PM", 1).unwrap()).unwrap();
        assert_eq!(labels(pm1, dom), vec!["PM=2", "PM=3"]);

        let ma3 = ex.explain(csp.element("MA", 3).unwrap()).unwrap();
        assert_eq!(labels(ma3, dom), vec!["PM=3"]);
        assert_eq!(ma3.kind, RuleKind::Local);

        // the failing branch empties MP entirely
        let mp3 = ex.explain(csp.element("MP", 3).unwrap()).unwrap();
        assert_eq!(labels(mp3, dom), vec!["PM=3"]);

        let chain = crate::instances::chain_with_bound();
        let chain_tree = solve(&chain, &[]);
        let chain_ex = Explanations::build(&chain_tree).unwrap();
        assert!(chain_ex.explain(chain.element("X", 1).unwrap()).is_none());
    }

    #[test]
    fn single_branch_has_no_merges() {
        let csp = conference();
        let tree = solve(&csp, &[]);
        let ex = Explanations::build(&tree).unwrap();
        assert!(!ex.s_up().is_empty());
        assert!(ex.s_up().iter().all(|t| t.kind != RuleKind::Labeling));
        let down: Vec<_> = ex.branch_trees(0).unwrap().values().cloned().collect();
        assert_eq!(ex.s_up(), down.as_slice());
    }

    #[test]
    fn failure_explanations() {
        let tree = conference_tree();
        let csp = tree.csp();
        let ex = Explanations::build(&tree).unwrap();
        let ma = csp.var("MA").unwrap();
        let e3 = tree.root().children[2];
        let trees = ex.failure_explanation(&tree, e3, ma).unwrap();
        let elems: Vec<_> = trees.iter().map(|t| t.element().value).collect();
        assert_eq!(elems, vec![1, 2, 3]);
        assert!(trees.iter().all(|t| labels(t, csp.domain()) == vec!["PM=3"]));
        let e1 = tree.root().children[0];
        assert!(matches!(ex.failure_explanation(&tree, e1, ma), Err(Error::Usage(_))));
    }

    #[test]
    fn failure_without_labeling() {
        let csp = Csp::builder()
            .var("X", [1])
            .var("Y", [1])
            .compare("X", crate::csp::CmpOp::Lt, "Y", 0)
            .build()
            .unwrap();
        let tree = solve(&csp, &[]);
        let ex = Explanations::build(&tree).unwrap();
        let y = csp.var("Y").unwrap();
        assert_eq!(ex.failure_explanation(&tree, 0, y).unwrap().len(), 1);
    }

    #[test]
    fn verification() {
        let tree = conference_tree();
        let csp = tree.csp();
        let ops = tree.operators();
        let ex = Explanations::build(&tree).unwrap();
        for t in ex.s_up() {
            assert!(verify_proof_tree(t, csp, ops), "{}", t.shape(csp.domain()));
        }
        // drop (PM,3) under (AM,1) in the first branch
        let mp2 = ex.explain(csp.element("MP", 2).unwrap()).unwrap();
        let mut broken = (**mp2).clone();
        let mut b1 = (*broken.children[0]).clone();
        let mut am1 = (*b1.children[0]).clone();
        am1.children.retain(|c| c.element() != csp.element("PM", 3).unwrap());
        b1.children[0] = Arc::new(am1);
        broken.children[0] = Arc::new(b1);
        assert!(!verify_proof_tree(&broken, csp, ops));

        let fact = &mp2.children[0].children[0].children[0];
        assert_eq!(fact.kind, RuleKind::Restriction);
        assert!(verify_proof_tree(fact, csp, ops));

        // a merge whose context does not match its children
        let mut bad_merge = (**mp2).clone();
        bad_merge.children.pop();
        assert!(!verify_proof_tree(&bad_merge, csp, ops));
    }
}
