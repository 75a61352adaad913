//! Uniform-grid neighbor index over agent positions.
//!
//! Rebuilt once per step from the frozen previous-step positions; queries are
//! read-only and exact after distance filtering.

use crate::math::Vec2;
use crate::world::WorldSpec;

#[derive(Debug, Clone)]
pub struct NeighborGrid {
    cell_size: f64,
    nx: usize,
    ny: usize,
    /// CSR layout: `starts[c]..starts[c+1]` indexes into `ids` for cell c.
    starts: Vec<u32>,
    ids: Vec<u32>,
    counts: Vec<u32>,
}

impl NeighborGrid {
    pub fn new(world: &WorldSpec, cell_size: f64) -> Self {
        let nx = (world.length / cell_size).ceil().max(1.0) as usize;
        let ny = (world.width / cell_size).ceil().max(1.0) as usize;
        NeighborGrid {
            cell_size,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            ids: Vec::new(),
            counts: vec![0; nx * ny],
        }
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        // Positions slightly outside the corridor land in the edge cells.
        let cx = ((p.x / self.cell_size).floor() as i64).clamp(0, self.nx as i64 - 1) as usize;
        let cy = ((p.y / self.cell_size).floor() as i64).clamp(0, self.ny as i64 - 1) as usize;
        (cx, cy)
    }

    /// Rebuild the index from scratch; entity id is the slice index.
    pub fn rebuild(&mut self, positions: &[Vec2]) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for p in positions {
            let (cx, cy) = self.cell_of(*p);
            self.counts[cy * self.nx + cx] += 1;
        }
        let ncells = self.nx * self.ny;
        self.starts.resize(ncells + 1, 0);
        let mut acc = 0u32;
        for c in 0..ncells {
            self.starts[c] = acc;
            acc += self.counts[c];
        }
        self.starts[ncells] = acc;
        self.ids.resize(positions.len(), 0);
        let mut cursor: Vec<u32> = self.starts[..ncells].to_vec();
        for (i, p) in positions.iter().enumerate() {
            let (cx, cy) = self.cell_of(*p);
            let c = cy * self.nx + cx;
            self.ids[cursor[c] as usize] = i as u32;
            cursor[c] += 1;
        }
    }

    /// Collect ids of entities with center distance <= `range` from `center`
    /// (boundary inclusive), excluding `exclude`. Results are sorted by id so
    /// downstream float accumulation is order-stable.
    pub fn query_into(
        &self,
        positions: &[Vec2],
        center: Vec2,
        range: f64,
        exclude: Option<u32>,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        let r2 = range * range;
        let (cx0, cy0) = self.cell_of(Vec2::new(center.x - range, center.y - range));
        let (cx1, cy1) = self.cell_of(Vec2::new(center.x + range, center.y + range));
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                let c = cy * self.nx + cx;
                for &id in &self.ids[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    if Some(id) == exclude {
                        continue;
                    }
                    if (positions[id as usize] - center).length_squared() <= r2 {
                        out.push(id);
                    }
                }
            }
        }
        out.sort_unstable();
    }

    pub fn query(
        &self,
        positions: &[Vec2],
        center: Vec2,
        range: f64,
        exclude: Option<u32>,
    ) -> Vec<u32> {
        let mut out = Vec::new();
        self.query_into(positions, center, range, exclude, &mut out);
        out
    }
}

/// Reference scan used by tests and kept here so both sides of the
/// grid-vs-brute-force check live next to each other.
pub fn brute_force_within(
    positions: &[Vec2],
    center: Vec2,
    range: f64,
    exclude: Option<u32>,
) -> Vec<u32> {
    let r2 = range * range;
    let mut out: Vec<u32> = positions
        .iter()
        .enumerate()
        .filter(|(i, p)| Some(*i as u32) != exclude && (**p - center).length_squared() <= r2)
        .map(|(i, _)| i as u32)
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_agent_has_no_neighbors() {
        let world = WorldSpec::standard();
        let mut grid = NeighborGrid::new(&world, 2.5);
        let positions = vec![Vec2::new(10.0, 5.0)];
        grid.rebuild(&positions);
        assert!(grid.query(&positions, positions[0], 5.0, Some(0)).is_empty());
    }

    #[test]
    fn boundary_distance_is_inclusive() {
        let world = WorldSpec::standard();
        let mut grid = NeighborGrid::new(&world, 2.5);
        let positions = vec![Vec2::new(10.0, 5.0), Vec2::new(15.0, 5.0)];
        grid.rebuild(&positions);
        let hits = grid.query(&positions, positions[0], 5.0, Some(0));
        assert_eq!(hits, vec![1]);
    }

    #[test]
    fn matches_brute_force_on_random_layouts() {
        let world = WorldSpec::standard();
        let mut grid = NeighborGrid::new(&world, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let positions: Vec<Vec2> = (0..200)
                .map(|_| {
                    Vec2::new(
                        rng.random_range(0.0..50.0),
                        rng.random_range(0.0..10.0),
                    )
                })
                .collect();
            grid.rebuild(&positions);
            let center = Vec2::new(rng.random_range(0.0..50.0), rng.random_range(0.0..10.0));
            let got = grid.query(&positions, center, 5.0, Some(3));
            let want = brute_force_within(&positions, center, 5.0, Some(3));
            assert_eq!(got, want);
        }
    }
}
