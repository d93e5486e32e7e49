use rand::Rng;

/// Set of indices in `0..capacity` with O(1) insert, remove and uniform draw.
///
/// Members live in a dense array; `pos` maps an index to its slot so that
/// removal is a swap with the last element.
#[derive(Debug, Clone)]
pub struct IndexPool {
    items: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IndexPool {
    pub fn new(capacity: usize) -> Self {
        IndexPool { items: Vec::new(), pos: vec![ABSENT; capacity] }
    }

    /// Pool holding every index of `0..capacity`.
    pub fn full(capacity: usize) -> Self {
        IndexPool { items: (0..capacity as u32).collect(), pos: (0..capacity as u32).collect() }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, i: u32) -> bool {
        self.pos[i as usize] != ABSENT
    }

    pub fn insert(&mut self, i: u32) {
        if !self.contains(i) {
            self.pos[i as usize] = self.items.len() as u32;
            self.items.push(i);
        }
    }

    pub fn remove(&mut self, i: u32) -> bool {
        let p = self.pos[i as usize];
        if p == ABSENT {
            return false;
        }
        let last = self.items.pop().expect("non-empty");
        if last != i {
            self.items[p as usize] = last;
            self.pos[last as usize] = p;
        }
        self.pos[i as usize] = ABSENT;
        true
    }

    /// Uniform member, left in the pool.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[rng.random_range(0..self.items.len())])
        }
    }

    /// Removes and returns a uniform member.
    pub fn take_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u32> {
        let i = self.sample(rng)?;
        self.remove(i);
        Some(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn insert_remove_roundtrip() {
        let mut p = IndexPool::new(10);
        for i in [3, 7, 1, 3] {
            p.insert(i);
        }
        assert_eq!(p.len(), 3);
        assert!(p.remove(7));
        assert!(!p.remove(7));
        assert!(p.contains(1) && p.contains(3) && !p.contains(7));
        let mut rng = rng_from_seed(1);
        let a = p.take_uniform(&mut rng).unwrap();
        let b = p.take_uniform(&mut rng).unwrap();
        assert_eq!({ let mut v = vec![a, b]; v.sort(); v }, vec![1, 3]);
        assert!(p.take_uniform(&mut rng).is_none());
    }
}
