//! Static k-d tree over 4-dimensional Euclidean points.

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Exact nearest-neighbour index. Ties resolve to the lowest point index.
#[derive(Debug, Clone)]
pub struct KdTree4 {
    points: Vec<[f64; 4]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree4 {
    pub fn build(points: Vec<[f64; 4]>) -> Self {
        let mut tree = Self {
            order: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build_node(0, tree.points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.widest_dim(start, end);
        let mid = start + (end - start) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a][dim].total_cmp(&pts[b][dim]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][dim];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { dim, value, left, right };
        id
    }

    fn widest_dim(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 4];
        let mut hi = [f64::NEG_INFINITY; 4];
        for &i in &self.order[start..end] {
            for d in 0..4 {
                lo[d] = lo[d].min(self.points[i][d]);
                hi[d] = hi[d].max(self.points[i][d]);
            }
        }
        (0..4)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    /// Index and squared distance of the nearest point to `query`.
    pub fn nearest(&self, query: &[f64; 4]) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &[f64; 4], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = squared_distance(&self.points[i], q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // `<=` keeps equal-distance candidates reachable for the index tie-break
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

#[inline]
pub fn squared_distance(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    let d3 = a[3] - b[3];
    d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[[f64; 4]], q: &[f64; 4]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 13, 200, 1000] {
            let pts: Vec<[f64; 4]> = (0..n)
                .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
                .collect();
            let tree = KdTree4::build(pts.clone());
            for _ in 0..100 {
                let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
                assert_eq!(tree.nearest(&q).unwrap(), brute(&pts, &q));
            }
        }
    }

    #[test]
    fn ties_pick_lowest_index() {
        // many duplicates on a coarse lattice
        let pts: Vec<[f64; 4]> = (0..400).map(|i| [(i % 5) as f64, ((i / 5) % 4) as f64, 0.0, 0.0]).collect();
        let tree = KdTree4::build(pts.clone());
        for i in 0..20 {
            let q = [(i % 5) as f64, ((i / 5) % 4) as f64, 0.0, 0.0];
            assert_eq!(tree.nearest(&q).unwrap(), (i, 0.0));
        }
        // equidistant from two lattice points
        let (idx, d) = tree.nearest(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((idx, d), (0, 0.25));
    }

    #[test]
    fn empty_tree() {
        assert!(KdTree4::build(vec![]).nearest(&[0.0; 4]).is_none());
    }
}
