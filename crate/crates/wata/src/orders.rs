//! Embedding orders on configurations and antichain-represented upward
//! closed sets.

use crate::compressed::Compressed;
use crate::region::{Config, Letter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    /// Letter-wise inclusion embedding plus inclusion of the unbounded part.
    Leq,
    /// `Leq` restricted to non-empty smaller words whose last letters are included.
    LeqR,
}

/// Greedy leftmost embedding of `small` into `big` with letter inclusion.
pub fn embeds(small: &[Letter], big: &[Letter]) -> bool {
    let mut i = 0;
    for &b in big {
        if i == small.len() {
            break;
        }
        if small[i].subset_of(b) {
            i += 1;
        }
    }
    i == small.len()
}

/// `c1 ⪯ c2`.
pub fn leq(c1: &Config, c2: &Config) -> bool {
    c1.inf & !c2.inf == 0 && c1.word.len() <= c2.word.len() && embeds(&c1.word, &c2.word)
}

/// `c1 ⪯_r c2`.
pub fn leq_r(c1: &Config, c2: &Config) -> bool {
    let (Some((&l1, r1)), Some((&l2, r2))) = (c1.word.split_last(), c2.word.split_last()) else {
        return false;
    };
    c1.inf & !c2.inf == 0 && l1.subset_of(l2) && embeds(r1, r2)
}

impl Order {
    pub fn holds(self, c1: &Config, c2: &Config) -> bool {
        match self {
            Order::Leq => leq(c1, c2),
            Order::LeqR => leq_r(c1, c2),
        }
    }
}

/// `ĉ1 ⊑ ĉ2`: equal expansion maps and `⪯_r` on the (head, inf) parts.
pub fn compressed_leq(c1: &Compressed, c2: &Compressed) -> bool {
    c1.f == c2.f && leq_r(&c1.head_config(), &c2.head_config())
}

/// An upward closed set given by its minimal generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpSet {
    pub order: Order,
    /// Kept sorted by size so membership can stop early.
    gens: Vec<Config>,
    /// Also contains every configuration with an empty word and a non-empty
    /// unbounded part. Such configurations have no delay successors, so
    /// delay-preimage sets contain them without any generator.
    pub bare_inf: bool,
}

impl UpSet {
    pub fn new(order: Order) -> UpSet {
        UpSet { order, gens: vec![], bare_inf: false }
    }

    pub fn with_bare_inf(order: Order) -> UpSet {
        UpSet { order, gens: vec![], bare_inf: true }
    }

    pub fn from_generators(order: Order, gens: impl IntoIterator<Item = Config>) -> UpSet {
        let mut s = UpSet::new(order);
        for g in gens {
            s.insert(g);
        }
        s
    }

    pub fn generators(&self) -> &[Config] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty() && !self.bare_inf
    }

    pub fn contains(&self, c: &Config) -> bool {
        if self.bare_inf && c.word.is_empty() && c.inf != 0 {
            return true;
        }
        let size = c.size();
        self.gens.iter().take_while(|g| g.size() <= size).any(|g| self.order.holds(g, c))
    }

    /// Adds `c` unless already covered; drops generators it dominates.
    /// Returns whether the set changed.
    pub fn insert(&mut self, c: Config) -> bool {
        if self.contains(&c) {
            return false;
        }
        let order = self.order;
        self.gens.retain(|g| !order.holds(&c, g));
        let pos = self.gens.partition_point(|g| g.size() <= c.size());
        self.gens.insert(pos, c);
        true
    }

    /// Every member of `other` is a member of `self`.
    pub fn includes(&self, other: &UpSet) -> bool {
        (!other.bare_inf || self.bare_inf) && other.gens.iter().all(|g| self.contains(g))
    }
}

/// Mutual inclusion of two upward closed sets over the same order.
pub fn upset_equal(s1: &UpSet, s2: &UpSet) -> bool {
    s1.order == s2.order && s1.includes(s2) && s2.includes(s1)
}

/// A downward closed set stored as the minimal elements of its complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DownSetByComplement {
    pub complement: UpSet,
}

impl DownSetByComplement {
    pub fn contains(&self, c: &Config) -> bool {
        !self.complement.contains(c)
    }
}
