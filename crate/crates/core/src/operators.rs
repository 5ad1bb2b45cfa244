//! Local consistency and restriction operators, and the rules they justify.
//!
//! A local consistency operator is derived from a constraint and one variable
//! `y` of its scope. It has type `(var(c) ∖ {y}, {y})` and keeps exactly the
//! values of `y` that still have a supporting tuple of `T_c` in the input
//! environment (generalized arc consistency). Every other variable is mapped
//! to its full domain.
//!
//! A restriction operator is constant: it maps every environment to
//! `𝔻|_{V∖{x}} ∪ ({x} × kept)`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csp::{ConstraintSpec, Csp, DomainElement, Environment, GlobalDomain, Value, VarId};
use crate::error::{Error, Result};

/// Above this many elements, rule soundness is checked by sampling.
pub const SOUNDNESS_EXHAUSTIVE_LIMIT: usize = 12;
/// Number of sampled environments when the exhaustive check is too large.
pub const SOUNDNESS_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorType {
    pub w_in: BTreeSet<VarId>,
    pub w_out: BTreeSet<VarId>,
}

/// Where a rule instance comes from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleOrigin {
    Local {
        operator: String,
        constraint: String,
    },
    Restriction {
        operator: String,
        var: VarId,
        kept: BTreeSet<Value>,
    },
}

impl RuleOrigin {
    pub fn operator_id(&self) -> &str {
        match self {
            RuleOrigin::Local { operator, .. } | RuleOrigin::Restriction { operator, .. } => operator,
        }
    }

    pub fn constraint_id(&self) -> Option<&str> {
        match self {
            RuleOrigin::Local { constraint, .. } => Some(constraint),
            RuleOrigin::Restriction { .. } => None,
        }
    }

    pub fn is_restriction(&self) -> bool {
        matches!(self, RuleOrigin::Restriction { .. })
    }
}

/// One fired rule: `antecedents ∉ d ⇒ conclusion ∉ op(d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleInstance {
    pub conclusion: DomainElement,
    pub antecedents: BTreeSet<DomainElement>,
    pub origin: RuleOrigin,
}

#[derive(Debug, Clone)]
pub struct LocalOperator {
    id: String,
    constraint: String,
    scope: Vec<VarId>,
    target: usize,
    /// Allowed tuples as element indices, aligned with `scope`.
    tuples: Arc<Vec<Vec<usize>>>,
    universe: Arc<GlobalDomain>,
}

impl PartialEq for LocalOperator {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.scope == other.scope && self.tuples == other.tuples
    }
}

impl LocalOperator {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn constraint_id(&self) -> &str {
        &self.constraint
    }

    /// The single variable this operator reduces.
    pub fn target(&self) -> VarId {
        self.scope[self.target]
    }

    pub fn inputs(&self) -> impl Iterator<Item = VarId> + '_ {
        self.scope
            .iter()
            .enumerate()
            .filter(move |&(i, _)| i != self.target)
            .map(|(_, &v)| v)
    }

    pub fn reads(&self, var: VarId) -> bool {
        self.inputs().any(|v| v == var)
    }

    pub fn op_type(&self) -> OperatorType {
        OperatorType {
            w_in: self.inputs().collect(),
            w_out: [self.target()].into_iter().collect(),
        }
    }

    pub fn universe(&self) -> &Arc<GlobalDomain> {
        &self.universe
    }

    fn tuple_alive(&self, tuple: &[usize], d: &Environment) -> bool {
        tuple
            .iter()
            .enumerate()
            .all(|(i, &idx)| i == self.target || d.contains_index(idx))
    }

    pub fn supports(&self, d: &Environment, value: Value) -> bool {
        let Some(idx) = self.universe.index_of(DomainElement::new(self.target(), value)) else {
            return false;
        };
        self.tuples
            .iter()
            .any(|t| t[self.target] == idx && self.tuple_alive(t, d))
    }

    /// `f(d)`: full domain off the target, supported values on it.
    pub fn apply(&self, d: &Environment) -> Environment {
        let mut bits = FixedBitSet::with_capacity(self.universe.len());
        bits.insert_range(..);
        for i in self.universe.var_range(self.target()) {
            bits.set(i, false);
        }
        for t in self.tuples.iter() {
            if self.tuple_alive(t, d) {
                bits.insert(t[self.target]);
            }
        }
        Environment::from_mask(&self.universe, &bits)
    }

    /// `d ∩ f(d)`.
    pub fn reduce(&self, d: &Environment) -> Environment {
        d.intersection(&self.apply(d))
    }

    /// In-place reduction. Returns the removed elements in ascending order.
    pub fn revise(&self, d: &mut Environment) -> Vec<DomainElement> {
        let target = self.target();
        let mut supported = FixedBitSet::with_capacity(self.universe.len());
        for t in self.tuples.iter() {
            if d.contains_index(t[self.target]) && self.tuple_alive(t, d) {
                supported.insert(t[self.target]);
            }
        }
        let mut removed = Vec::new();
        for i in self.universe.var_range(target) {
            if d.contains_index(i) && !supported.contains(i) {
                removed.push(self.universe.element(i));
            }
        }
        for &e in &removed {
            d.remove(e);
        }
        removed
    }

    /// A sound rule for the removal of `h` from `f(d)`.
    ///
    /// For every tuple that would support `h`, the smallest member absent from
    /// `d` (variable order, then value order) is taken as an antecedent.
    pub fn explain_removal(&self, d: &Environment, h: DomainElement) -> Result<RuleInstance> {
        self.universe.check_element(h)?;
        if h.var != self.target() {
            return Err(Error::usage(format!(
                "operator {} does not reduce variable `{}`",
                self.id,
                self.universe.name(h.var)
            )));
        }
        if self.supports(d, h.value) {
            return Err(Error::usage(format!(
                "{} is still supported by {}",
                self.universe.display_element(h),
                self.id
            )));
        }
        let hidx = self.universe.index_of(h).expect("checked above");
        let mut antecedents = BTreeSet::new();
        for t in self.tuples.iter().filter(|t| t[self.target] == hidx) {
            let witness = t
                .iter()
                .enumerate()
                .filter(|&(i, &idx)| i != self.target && !d.contains_index(idx))
                .map(|(_, &idx)| self.universe.element(idx))
                .min()
                .expect("an unsupported tuple has an absent member");
            antecedents.insert(witness);
        }
        Ok(RuleInstance {
            conclusion: h,
            antecedents,
            origin: RuleOrigin::Local {
                operator: self.id.clone(),
                constraint: self.constraint.clone(),
            },
        })
    }

    /// Brute-force check of `∀d, antecedents ∩ d = ∅ ⇒ conclusion ∉ f(d)`.
    ///
    /// Exhaustive when `|𝔻| ≤ SOUNDNESS_EXHAUSTIVE_LIMIT`, otherwise over
    /// `SOUNDNESS_SAMPLES` seeded random environments.
    pub fn rule_is_sound(&self, antecedents: &BTreeSet<DomainElement>, conclusion: DomainElement) -> bool {
        if conclusion.var != self.target() || !self.universe.contains(conclusion) {
            return false;
        }
        let Some(forbidden) = antecedents
            .iter()
            .map(|&a| self.universe.index_of(a))
            .collect::<Option<Vec<usize>>>()
        else {
            return false;
        };
        let free: Vec<usize> = (0..self.universe.len()).filter(|i| !forbidden.contains(i)).collect();
        let fails = |mask: &FixedBitSet| {
            let d = Environment::from_mask(&self.universe, mask);
            self.supports(&d, conclusion.value)
        };
        let mut mask = FixedBitSet::with_capacity(self.universe.len());
        if self.universe.len() <= SOUNDNESS_EXHAUSTIVE_LIMIT {
            for bits in 0u64..(1u64 << free.len()) {
                mask.clear();
                for (k, &i) in free.iter().enumerate() {
                    if bits >> k & 1 == 1 {
                        mask.insert(i);
                    }
                }
                if fails(&mask) {
                    return false;
                }
            }
            true
        } else {
            // The maximal environment is always among the samples.
            mask.clear();
            free.iter().for_each(|&i| mask.insert(i));
            if fails(&mask) {
                return false;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(&self.id, conclusion, antecedents));
            for _ in 1..SOUNDNESS_SAMPLES {
                mask.clear();
                for &i in &free {
                    if rng.random_bool(0.5) {
                        mask.insert(i);
                    }
                }
                if fails(&mask) {
                    return false;
                }
            }
            true
        }
    }
}

fn seed_for(id: &str, h: DomainElement, ants: &BTreeSet<DomainElement>) -> u64 {
    // FNV-1a over a stable rendering; only needs to be deterministic.
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(id.as_bytes());
    feed(&(h.var.0 as u64).to_le_bytes());
    feed(&h.value.to_le_bytes());
    for a in ants {
        feed(&(a.var.0 as u64).to_le_bytes());
        feed(&a.value.to_le_bytes());
    }
    hash
}

/// One operator per scope variable, in scope order. Ids are `<constraint>/<var>`.
pub fn arc_operators_for(c: &ConstraintSpec, universe: &Arc<GlobalDomain>) -> Vec<LocalOperator> {
    let tuples: Vec<Vec<usize>> = c
        .allowed_tuples(universe)
        .into_iter()
        .map(|t| {
            c.scope
                .iter()
                .zip(&t)
                .map(|(&v, &x)| {
                    universe
                        .index_of(DomainElement::new(v, x))
                        .expect("validated constraint")
                })
                .collect()
        })
        .collect();
    let tuples = Arc::new(tuples);
    (0..c.scope.len())
        .map(|target| LocalOperator {
            id: format!("{}/{}", c.id, universe.name(c.scope[target])),
            constraint: c.id.clone(),
            scope: c.scope.clone(),
            target,
            tuples: Arc::clone(&tuples),
            universe: Arc::clone(universe),
        })
        .collect()
}

/// The operators `L` of a problem, constraint by constraint.
pub fn local_operators(csp: &Csp) -> Vec<LocalOperator> {
    csp.constraints()
        .iter()
        .flat_map(|c| arc_operators_for(c, csp.domain()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictionOperator {
    id: String,
    var: VarId,
    kept: BTreeSet<Value>,
    universe: Arc<GlobalDomain>,
}

/// Builds the constant operator keeping `kept` for `x`.
pub fn make_restriction(universe: &Arc<GlobalDomain>, x: VarId, kept: BTreeSet<Value>) -> Result<RestrictionOperator> {
    universe.check_var(x)?;
    if kept.is_empty() {
        return Err(Error::usage(format!(
            "restriction on `{}` must keep at least one value",
            universe.name(x)
        )));
    }
    for &v in &kept {
        universe.check_element(DomainElement::new(x, v))?;
    }
    Ok(RestrictionOperator {
        id: restriction_label(universe.name(x), &kept),
        var: x,
        kept,
        universe: Arc::clone(universe),
    })
}

/// `X=1` for singletons, `X∈{1,2}` otherwise.
pub fn restriction_label(name: &str, kept: &BTreeSet<Value>) -> String {
    if kept.len() == 1 {
        format!("{}={}", name, kept.iter().next().unwrap())
    } else {
        let vals: Vec<String> = kept.iter().map(|v| v.to_string()).collect();
        format!("{}∈{{{}}}", name, vals.join(","))
    }
}

impl RestrictionOperator {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn var(&self) -> VarId {
        self.var
    }

    pub fn kept(&self) -> &BTreeSet<Value> {
        &self.kept
    }

    pub fn op_type(&self) -> OperatorType {
        OperatorType {
            w_in: BTreeSet::new(),
            w_out: [self.var].into_iter().collect(),
        }
    }

    /// `r(d)`, independent of `d`.
    pub fn apply(&self, _d: &Environment) -> Environment {
        self.image()
    }

    /// `r(𝔻)`.
    pub fn image(&self) -> Environment {
        let mut env = Environment::full(&self.universe);
        env.set_values(self.var, self.kept.iter().copied());
        env
    }

    pub fn reduce(&self, d: &Environment) -> Environment {
        d.intersection(&self.image())
    }

    pub fn origin(&self) -> RuleOrigin {
        RuleOrigin::Restriction {
            operator: self.id.clone(),
            var: self.var,
            kept: self.kept.clone(),
        }
    }

    /// One fact per element of `𝔻 ∖ r(𝔻)`.
    pub fn rules(&self) -> Vec<RuleInstance> {
        self.universe
            .values(self.var)
            .iter()
            .filter(|v| !self.kept.contains(v))
            .map(|&v| RuleInstance {
                conclusion: DomainElement::new(self.var, v),
                antecedents: BTreeSet::new(),
                origin: self.origin(),
            })
            .collect()
    }
}

/// Either kind of operator of `F = L ∪ R`.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Local(LocalOperator),
    Restriction(RestrictionOperator),
}

impl Operator {
    pub fn id(&self) -> &str {
        match self {
            Operator::Local(op) => op.id(),
            Operator::Restriction(op) => op.id(),
        }
    }

    pub fn op_type(&self) -> OperatorType {
        match self {
            Operator::Local(op) => op.op_type(),
            Operator::Restriction(op) => op.op_type(),
        }
    }

    pub fn apply(&self, d: &Environment) -> Environment {
        match self {
            Operator::Local(op) => op.apply(d),
            Operator::Restriction(op) => op.apply(d),
        }
    }

    pub fn reduce(&self, d: &Environment) -> Environment {
        match self {
            Operator::Local(op) => op.reduce(d),
            Operator::Restriction(op) => op.reduce(d),
        }
    }
}

impl From<LocalOperator> for Operator {
    fn from(op: LocalOperator) -> Self {
        Operator::Local(op)
    }
}

impl From<RestrictionOperator> for Operator {
    fn from(op: RestrictionOperator) -> Self {
        Operator::Restriction(op)
    }
}

impl fmt::Display for OperatorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.w_in, self.w_out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::conference;

    fn op<'a>(ops: &'a [LocalOperator], id: &str) -> &'a LocalOperator {
        ops.iter().find(|o| o.id() == id).unwrap()
    }

    fn vars(csp: &Csp, names: &[&str]) -> BTreeSet<VarId> {
        names.iter().map(|n| csp.var(n).unwrap()).collect()
    }

    fn with(csp: &Csp, assigns: &[(&str, &[Value])]) -> Environment {
        let mut d = csp.full_env();
        for (name, vals) in assigns {
            d.set_values(csp.var(name).unwrap(), vals.iter().copied());
        }
        d
    }

    #[test]
    fn operator_types() {
        let csp = conference();
        let ops = local_operators(&csp);
        assert_eq!(ops.len(), 10);
        // c5: AM != PM
        let ne = arc_operators_for(csp.constraint("c5").unwrap(), csp.domain());
        assert_eq!(ne[0].op_type().w_in, vars(&csp, &["PM"]));
        assert_eq!(ne[0].op_type().w_out, vars(&csp, &["AM"]));
        assert_eq!(ne[1].op_type().w_in, vars(&csp, &["AM"]));
        assert_eq!(ne[1].op_type().w_out, vars(&csp, &["PM"]));
        // c2: MA > PM
        let gt = arc_operators_for(csp.constraint("c2").unwrap(), csp.domain());
        assert_eq!(gt[0].op_type().w_in, vars(&csp, &["PM"]));
        assert_eq!(gt[0].op_type().w_out, vars(&csp, &["MA"]));
        assert_eq!(gt[1].op_type().w_out, vars(&csp, &["PM"]));
    }

    #[test]
    fn table_operators() {
        let csp = Csp::builder()
            .var("X", 1..=2)
            .var("Y", 1..=2)
            .var("Z", 1..=2)
            .table(&["X", "Y", "Z"], vec![vec![1, 1, 2], vec![2, 1, 1]])
            .build()
            .unwrap();
        let ops = local_operators(&csp);
        assert_eq!(ops.len(), 3);
        assert_eq!(ops[2].op_type().w_in, vars(&csp, &["X", "Y"]));
        assert_eq!(ops[2].op_type().w_out, vars(&csp, &["Z"]));
    }

    #[test]
    fn apply_examples() {
        let csp = conference();
        let ops = local_operators(&csp);
        let am = csp.var("AM").unwrap();
        let ma = csp.var("MA").unwrap();
        let ne = op(&ops, "c5/AM");

        let d = with(&csp, &[("PM", &[1])]);
        let out = ne.apply(&d);
        assert_eq!(out.value_set(am), [2, 3].into_iter().collect());
        for v in csp.domain().vars().filter(|&v| v != am) {
            assert_eq!(out.var_len(v), 3);
        }
        assert_eq!(ne.apply(&csp.full_env()), csp.full_env());

        let gt = op(&ops, "c1/MA");
        let d = with(&csp, &[("AM", &[1, 2])]);
        assert_eq!(gt.apply(&d).value_set(ma), [2, 3].into_iter().collect());
    }

    #[test]
    fn reduce_examples() {
        let csp = conference();
        let ops = local_operators(&csp);
        let ne = op(&ops, "c5/AM");
        let full = csp.full_env();
        assert_eq!(ne.reduce(&full), full);
        let d = with(&csp, &[("PM", &[1])]);
        assert_eq!(ne.reduce(&d), with(&csp, &[("PM", &[1]), ("AM", &[2, 3])]));
        let empty = Environment::empty(csp.domain());
        assert!(ne.reduce(&empty).is_empty());
    }

    #[test]
    fn explain_removal_examples() {
        let csp = conference();
        let ops = local_operators(&csp);
        let e = |n: &str, v| csp.element(n, v).unwrap();

        let d = with(&csp, &[("PM", &[1])]);
        let r = op(&ops, "c5/AM").explain_removal(&d, e("AM", 1)).unwrap();
        assert_eq!(r.antecedents, [e("PM", 2), e("PM", 3)].into_iter().collect());
        assert_eq!(r.origin.constraint_id(), Some("c5"));

        let d = with(&csp, &[("AM", &[2, 3])]);
        let r = op(&ops, "c3/MP").explain_removal(&d, e("MP", 2)).unwrap();
        assert_eq!(r.antecedents, [e("AM", 1)].into_iter().collect());

        let d = with(&csp, &[("PM", &[2, 3])]);
        let r = op(&ops, "c4/MP").explain_removal(&d, e("MP", 2)).unwrap();
        assert_eq!(r.antecedents, [e("PM", 1)].into_iter().collect());

        let err = op(&ops, "c4/MP").explain_removal(&csp.full_env(), e("MP", 2));
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn emitted_rules_are_sound_and_mutilated_ones_are_not() {
        let csp = conference();
        let ops = local_operators(&csp);
        let e = |n: &str, v| csp.element(n, v).unwrap();
        let am = op(&ops, "c5/AM");
        let full: BTreeSet<_> = [e("PM", 2), e("PM", 3)].into_iter().collect();
        assert!(am.rule_is_sound(&full, e("AM", 1)));
        let cut: BTreeSet<_> = [e("PM", 2)].into_iter().collect();
        assert!(!am.rule_is_sound(&cut, e("AM", 1)));
        // wrong operator for the conclusion
        assert!(!am.rule_is_sound(&full, e("PM", 1)));
    }

    #[test]
    fn restrictions() {
        let csp = conference();
        let pm = csp.var("PM").unwrap();
        let r = make_restriction(csp.domain(), pm, [1].into_iter().collect()).unwrap();
        assert_eq!(r.id(), "PM=1");
        let expected = with(&csp, &[("PM", &[1])]);
        assert_eq!(r.apply(&csp.full_env()), expected);
        assert_eq!(r.apply(&Environment::empty(csp.domain())), expected);
        let facts: Vec<_> = r.rules().into_iter().map(|f| f.conclusion).collect();
        assert_eq!(
            facts,
            vec![csp.element("PM", 2).unwrap(), csp.element("PM", 3).unwrap()]
        );

        let all = make_restriction(csp.domain(), pm, [1, 2, 3].into_iter().collect()).unwrap();
        assert_eq!(all.apply(&csp.full_env()), csp.full_env());
        assert!(all.rules().is_empty());

        let two = make_restriction(csp.domain(), pm, [1, 2].into_iter().collect()).unwrap();
        assert_eq!(two.id(), "PM∈{1,2}");
        let facts: Vec<_> = two.rules().into_iter().map(|f| f.conclusion).collect();
        assert_eq!(facts, vec![csp.element("PM", 3).unwrap()]);

        assert!(matches!(
            make_restriction(csp.domain(), pm, BTreeSet::new()),
            Err(Error::Usage(_))
        ));
        assert!(make_restriction(csp.domain(), pm, [9].into_iter().collect()).is_err());
    }
}
