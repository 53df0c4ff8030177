//! Binary sum tree for proportional sampling in O(log n).

#[derive(Clone, Debug)]
pub struct SumTree {
    capacity: usize,
    /// Leaves live at `[capacity, 2 * capacity)`.
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.next_power_of_two().max(1);
        Self {
            capacity,
            nodes: vec![0.0; 2 * capacity],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.nodes[self.capacity + idx]
    }

    pub fn update(&mut self, idx: usize, value: f64) {
        debug_assert!(idx < self.capacity);
        debug_assert!(value >= 0.0);
        let mut node = self.capacity + idx;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Index of the leaf whose cumulative span contains `target` in
    /// `[0, total())`.
    pub fn find(&self, mut target: f64) -> usize {
        let mut node = 1;
        while node < self.capacity {
            let left = 2 * node;
            if target < self.nodes[left] {
                node = left;
            } else {
                target -= self.nodes[left];
                node = left + 1;
            }
        }
        node - self.capacity
    }
}
