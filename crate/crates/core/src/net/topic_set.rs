use std::fmt;

use crate::ids::TopicId;

/// Fixed-universe bitset of topics.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct TopicSet {
    words: Vec<u64>,
}

impl TopicSet {
    pub fn empty(universe: usize) -> Self {
        TopicSet { words: vec![0; universe.div_ceil(64)] }
    }

    pub fn from_topics(universe: usize, topics: impl IntoIterator<Item = TopicId>) -> Self {
        let mut set = Self::empty(universe);
        for t in topics {
            set.insert(t);
        }
        set
    }

    pub fn insert(&mut self, topic: TopicId) {
        let i = topic.index();
        if i / 64 >= self.words.len() {
            self.words.resize(i / 64 + 1, 0);
        }
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, topic: TopicId) {
        let i = topic.index();
        if let Some(w) = self.words.get_mut(i / 64) {
            *w &= !(1 << (i % 64));
        }
    }

    #[inline]
    pub fn contains(&self, topic: TopicId) -> bool {
        let i = topic.index();
        self.words.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `|self ∩ other|`
    pub fn intersection_len(&self, other: &TopicSet) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Topics in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = TopicId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w & (1u64 << b) != 0).map(move |b| TopicId((wi * 64 + b) as u32))
        })
    }
}

impl fmt::Debug for TopicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|t| t.0)).finish()
    }
}
