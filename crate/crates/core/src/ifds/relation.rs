use std::collections::BTreeSet;
use std::fmt;

/// A dataflow fact. `ZERO` is the tautological fact; real facts are `1..=n`.
pub type Fact = u32;
pub const ZERO: Fact = 0;

pub type FactSet = BTreeSet<Fact>;

/// Bipartite encoding of a distributive function over subsets of `1..=n`,
/// kept in canonical form: `⟨0,0⟩` is present, no `⟨d,0⟩` for `d ≠ 0`, and
/// no `⟨d,x⟩` for `d ≠ 0` when `⟨0,x⟩` is present.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepRelation {
    pairs: Vec<(Fact, Fact)>,
}

impl RepRelation {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Fact, Fact)>) -> RepRelation {
        let mut pairs: Vec<(Fact, Fact)> = pairs.into_iter().collect();
        pairs.push((ZERO, ZERO));
        pairs.sort_unstable();
        pairs.dedup();
        let gens: FactSet = pairs
            .iter()
            .filter(|&&(a, b)| a == ZERO && b != ZERO)
            .map(|&(_, b)| b)
            .collect();
        pairs.retain(|&(a, b)| a == ZERO || (b != ZERO && !gens.contains(&b)));
        RepRelation { pairs }
    }

    /// Identity over facts `1..=n`.
    pub fn identity(n: usize) -> RepRelation {
        RepRelation::from_pairs((1..=n as Fact).map(|d| (d, d)))
    }

    /// The function mapping every set to the empty set.
    pub fn kill_all() -> RepRelation {
        RepRelation::from_pairs([])
    }

    pub fn pairs(&self) -> &[(Fact, Fact)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: Fact, b: Fact) -> bool {
        self.pairs.binary_search(&(a, b)).is_ok()
    }

    /// Facts reached from `d` by one edge.
    pub fn targets(&self, d: Fact) -> impl Iterator<Item = Fact> + '_ {
        let lo = self.pairs.partition_point(|&(a, _)| a < d);
        self.pairs[lo..]
            .iter()
            .take_while(move |&&(a, _)| a == d)
            .map(|&(_, b)| b)
    }
}

impl fmt::Debug for RepRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "⟨{a},{b}⟩")?;
        }
        f.write_str("}")
    }
}

/// Builds the representation of `f` over facts `1..=n`. `f` must be
/// distributive; only `f(∅)` and the singletons are evaluated.
pub fn rep_relation(f: impl Fn(&FactSet) -> FactSet, n: usize) -> RepRelation {
    let at_empty = f(&FactSet::new());
    let mut pairs: Vec<(Fact, Fact)> = at_empty.iter().map(|&x| (ZERO, x)).collect();
    for d in 1..=n as Fact {
        for x in f(&FactSet::from([d])) {
            if !at_empty.contains(&x) {
                pairs.push((d, x));
            }
        }
    }
    RepRelation::from_pairs(pairs)
}

pub fn apply_rel(r: &RepRelation, s: &FactSet) -> FactSet {
    r.pairs
        .iter()
        .filter(|&&(a, b)| b != ZERO && (a == ZERO || s.contains(&a)))
        .map(|&(_, b)| b)
        .collect()
}

/// `first` followed by `then`.
pub fn compose_rel(first: &RepRelation, then: &RepRelation) -> RepRelation {
    let mut pairs = Vec::new();
    for &(x, y) in first.pairs() {
        pairs.extend(then.targets(y).map(|z| (x, z)));
    }
    RepRelation::from_pairs(pairs)
}

pub fn meet_rel(a: &RepRelation, b: &RepRelation) -> RepRelation {
    RepRelation::from_pairs(a.pairs().iter().chain(b.pairs()).copied())
}

#[cfg(test)]
mod tests {
    use super::*;

    // x=1, y=2, z=3; `x = y + z`
    fn assign_sum(s: &FactSet) -> FactSet {
        let mut out: FactSet = s.iter().copied().filter(|&d| d != 1).collect();
        if s.contains(&2) || s.contains(&3) {
            out.insert(1);
        }
        out
    }

    #[test]
    fn assignment_relation() {
        let r = rep_relation(assign_sum, 3);
        assert_eq!(r.pairs(), &[(0, 0), (2, 1), (2, 2), (3, 1), (3, 3)]);
        assert_eq!(apply_rel(&r, &FactSet::from([2])), FactSet::from([1, 2]));
        assert!(apply_rel(&r, &FactSet::new()).is_empty());
    }

    #[test]
    fn identity_and_kill() {
        assert_eq!(rep_relation(|s| s.clone(), 3), RepRelation::identity(3));
        assert_eq!(rep_relation(|_| FactSet::new(), 3).pairs(), &[(0, 0)]);
        assert_eq!(RepRelation::kill_all().pairs(), &[(0, 0)]);
    }

    #[test]
    fn canonical_form_drops_redundant_pairs() {
        let r = RepRelation::from_pairs([(0, 2), (1, 2), (1, 0), (1, 1)]);
        assert_eq!(r.pairs(), &[(0, 0), (0, 2), (1, 1)]);
    }

    #[test]
    fn compose_with_identity_and_self_meet() {
        let f = rep_relation(assign_sum, 3);
        assert_eq!(compose_rel(&RepRelation::identity(3), &f), f);
        assert_eq!(compose_rel(&f, &RepRelation::identity(3)), f);
        assert_eq!(meet_rel(&f, &f), f);
    }

    #[test]
    fn targets_of_fact() {
        let r = rep_relation(assign_sum, 3);
        assert_eq!(r.targets(2).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(r.targets(0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(r.targets(1).count(), 0);
    }
}
