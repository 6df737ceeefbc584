//! Node placement and nearest-neighbor queries.
//!
//! Each role is an independent homogeneous PPP over the square region,
//! sampled from its own seeded substream so that sweeping one density
//! leaves every other role's draw untouched. UAVs are lifted to the
//! configured altitude; everything else sits at z = 0.

use crate::config::{Scenario, SimConfig};
use crate::rng::{self, stream};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub type NodeId = u32;

/// Role bits occupy the top byte of a `NodeId`, so ids stay stable per role
/// when another role's density is swept.
const ROLE_SHIFT: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    BaseStation,
    Uav,
    GroundUe,
    Eavesdropper,
}

impl Role {
    fn tag(self) -> u32 {
        match self {
            Role::BaseStation => 0,
            Role::Uav => 1,
            Role::GroundUe => 2,
            Role::Eavesdropper => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::BaseStation => "base-station",
            Role::Uav => "uav",
            Role::GroundUe => "ground-ue",
            Role::Eavesdropper => "eavesdropper",
        }
    }
}

/// Composes a node id from role and per-role index.
pub fn node_id(role: Role, index: u32) -> NodeId {
    debug_assert!(index < (1 << ROLE_SHIFT));
    (role.tag() << ROLE_SHIFT) | index
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub role: Role,
    pub pos: [f64; 3],
}

impl Node {
    /// True when the node is above ground level.
    pub fn is_airborne(&self) -> bool {
        self.pos[2] > 0.0
    }
}

/// One sampled drop: all nodes with roles and 3D positions.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub scenario: Scenario,
    /// All nodes, ascending by id.
    pub nodes: Vec<Node>,
    pub n_bs: usize,
    pub n_uav: usize,
    pub n_ue: usize,
    pub n_eaves: usize,
    region_side_m: f64,
}

impl Deployment {
    /// Builds a deployment from explicit nodes, mainly for tests and
    /// micro-instances. Nodes are sorted by id.
    pub fn from_nodes(scenario: Scenario, mut nodes: Vec<Node>, region_side_m: f64) -> Self {
        nodes.sort_by_key(|n| n.id);
        let count = |r: Role| nodes.iter().filter(|n| n.role == r).count();
        Deployment {
            scenario,
            n_bs: count(Role::BaseStation),
            n_uav: count(Role::Uav),
            n_ue: count(Role::GroundUe),
            n_eaves: count(Role::Eavesdropper),
            nodes,
            region_side_m,
        }
    }

    pub fn region_side_m(&self) -> f64 {
        self.region_side_m
    }

    /// Region center at ground level.
    pub fn center(&self) -> [f64; 3] {
        [self.region_side_m / 2.0, self.region_side_m / 2.0, 0.0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        let i = self
            .nodes
            .binary_search_by_key(&id, |n| n.id)
            .expect("node id present in deployment");
        &self.nodes[i]
    }

    fn ids_with_role(&self, role: Role) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.role == role)
            .map(|n| n.id)
            .collect()
    }

    /// Nodes acting as serving base stations under this scenario.
    pub fn serving_bs_ids(&self) -> Vec<NodeId> {
        match self.scenario {
            Scenario::FlyingBs => self.ids_with_role(Role::Uav),
            Scenario::AerialUe => self.ids_with_role(Role::BaseStation),
        }
    }

    /// Nodes acting as transmitting UEs under this scenario.
    pub fn transmitting_ue_ids(&self) -> Vec<NodeId> {
        match self.scenario {
            Scenario::FlyingBs => self.ids_with_role(Role::GroundUe),
            Scenario::AerialUe => {
                let mut ids = self.ids_with_role(Role::Uav);
                ids.extend(self.ids_with_role(Role::GroundUe));
                ids.sort_unstable();
                ids
            }
        }
    }

    pub fn eavesdropper_ids(&self) -> Vec<NodeId> {
        self.ids_with_role(Role::Eavesdropper)
    }

    /// Transmit power of a node when it acts as a transmitter.
    pub fn tx_power_mw(&self, id: NodeId, cfg: &SimConfig) -> f64 {
        match self.node(id).role {
            Role::Uav => cfg.uav_tx_mw,
            Role::GroundUe => cfg.ue_tx_mw,
            Role::BaseStation | Role::Eavesdropper => 0.0,
        }
    }
}

/// 3D Euclidean distance.
pub fn distance3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Distance floored at the configured clamp, for propagation use.
pub fn prop_distance(a: [f64; 3], b: [f64; 3], cfg: &SimConfig) -> f64 {
    distance3(a, b).max(cfg.min_link_distance_m)
}

/// Samples a homogeneous PPP over the square of the given area: count is
/// Poisson(density * area), positions i.i.d. uniform.
pub fn sample_ppp(area_m2: f64, density_per_m2: f64, rng: &mut impl Rng) -> Vec<(f64, f64)> {
    assert!(area_m2 > 0.0, "area must be positive");
    assert!(density_per_m2 >= 0.0, "density must be non-negative");
    let mean = density_per_m2 * area_m2;
    if mean == 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let side = area_m2.sqrt();
    (0..count)
        .map(|_| (rng.gen::<f64>() * side, rng.gen::<f64>() * side))
        .collect()
}

/// Samples one drop. Each role draws from its own substream of `drop_seed`,
/// with the point count and the point positions on separate streams: when a
/// density is swept, only the count changes while position i stays the
/// same, so consecutive sweep cells share their common points.
pub fn place_nodes(cfg: &SimConfig, drop_seed: u64) -> Deployment {
    let side = cfg.region_side_m();
    let mut nodes = Vec::new();
    let mut sample_role = |role: Role, density: f64, z: f64, tag: u64| -> usize {
        let role_seed = rng::mix2(drop_seed, tag);
        let mean = density * cfg.area_m2;
        let n = if mean == 0.0 {
            0
        } else {
            let mut count_rng = ChaCha8Rng::seed_from_u64(rng::mix2(role_seed, stream::COUNT));
            Poisson::new(mean)
                .expect("positive mean")
                .sample(&mut count_rng) as usize
        };
        let mut pos_rng = ChaCha8Rng::seed_from_u64(rng::mix2(role_seed, stream::POSITIONS));
        nodes.extend((0..n).map(|i| Node {
            id: node_id(role, i as u32),
            role,
            pos: [pos_rng.gen::<f64>() * side, pos_rng.gen::<f64>() * side, z],
        }));
        n
    };

    let n_bs = sample_role(
        Role::BaseStation,
        cfg.bs_density_per_m2,
        0.0,
        stream::BS_PLACEMENT,
    );
    let n_uav = sample_role(
        Role::Uav,
        cfg.uav_density_per_m2,
        cfg.uav_altitude_m,
        stream::UAV_PLACEMENT,
    );
    let n_ue = sample_role(
        Role::GroundUe,
        cfg.ue_density_per_m2,
        0.0,
        stream::UE_PLACEMENT,
    );
    let n_eaves = sample_role(
        Role::Eavesdropper,
        cfg.eaves_density_per_m2,
        0.0,
        stream::EAVES_PLACEMENT,
    );

    Deployment {
        scenario: cfg.scenario,
        nodes,
        n_bs,
        n_uav,
        n_ue,
        n_eaves,
        region_side_m: cfg.region_side_m(),
    }
}

/// Below this many points an exhaustive scan beats the grid.
const GRID_THRESHOLD: usize = 64;

/// Nearest-neighbor index over a node subset. Uniform grid with cell side
/// near the mean nearest-neighbor spacing; exhaustive scan for small sets.
/// Answers are identical to brute force, including the lowest-id tie-break.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    ids: Vec<NodeId>,
    pts: Vec<[f64; 3]>,
    grid: Option<Grid>,
}

#[derive(Debug, Clone)]
struct Grid {
    cell: f64,
    nx: usize,
    ny: usize,
    min_x: f64,
    min_y: f64,
    buckets: Vec<Vec<u32>>,
}

impl Grid {
    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = (((x - self.min_x) / self.cell) as isize).clamp(0, self.nx as isize - 1) as usize;
        let cy = (((y - self.min_y) / self.cell) as isize).clamp(0, self.ny as isize - 1) as usize;
        (cx, cy)
    }
}

impl SpatialIndex {
    /// Builds an index over the given nodes.
    pub fn build(nodes: impl IntoIterator<Item = (NodeId, [f64; 3])>, area_m2: f64) -> Self {
        Self::build_with_threshold(nodes, area_m2, GRID_THRESHOLD)
    }

    /// Like [`SpatialIndex::build`] with an explicit exhaustive-scan cutoff.
    /// Threshold 0 forces the grid, which equivalence tests use to compare
    /// the accelerated path against brute force on small sets.
    pub fn build_with_threshold(
        nodes: impl IntoIterator<Item = (NodeId, [f64; 3])>,
        area_m2: f64,
        threshold: usize,
    ) -> Self {
        let mut ids = Vec::new();
        let mut pts = Vec::new();
        for (id, p) in nodes {
            ids.push(id);
            pts.push(p);
        }
        let n = ids.len();
        if n < threshold.max(1) {
            return SpatialIndex {
                ids,
                pts,
                grid: None,
            };
        }

        let (mut min_x, mut min_y, mut max_x, mut max_y) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &pts {
            min_x = min_x.min(p[0]);
            min_y = min_y.min(p[1]);
            max_x = max_x.max(p[0]);
            max_y = max_y.max(p[1]);
        }
        // Mean nearest-neighbor spacing of a planar PPP with n points.
        let cell = (0.5 * (area_m2 / n as f64).sqrt()).max(1e-9);
        let nx = (((max_x - min_x) / cell).ceil() as usize + 1).max(1);
        let ny = (((max_y - min_y) / cell).ceil() as usize + 1).max(1);
        let mut grid = Grid {
            cell,
            nx,
            ny,
            min_x,
            min_y,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (i, p) in pts.iter().enumerate() {
            let (cx, cy) = grid.cell_of(p[0], p[1]);
            grid.buckets[cy * nx + cx].push(i as u32);
        }
        SpatialIndex {
            ids,
            pts,
            grid: Some(grid),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Returns the indexed node nearest to `query` (3D distance), excluding
    /// at most one id. Ties break to the lowest node id. `None` when the
    /// candidate set is empty after exclusion.
    pub fn nearest(&self, query: [f64; 3], exclude: Option<NodeId>) -> Option<(NodeId, f64)> {
        match &self.grid {
            None => self.nearest_scan(query, exclude),
            Some(grid) => self.nearest_grid(grid, query, exclude),
        }
    }

    fn consider(
        &self,
        i: usize,
        query: [f64; 3],
        exclude: Option<NodeId>,
        best: &mut Option<(f64, NodeId)>,
    ) {
        let id = self.ids[i];
        if Some(id) == exclude {
            return;
        }
        let p = self.pts[i];
        let dx = p[0] - query[0];
        let dy = p[1] - query[1];
        let dz = p[2] - query[2];
        let d2 = dx * dx + dy * dy + dz * dz;
        match best {
            Some((bd2, bid)) if (d2, id) >= (*bd2, *bid) => {}
            _ => *best = Some((d2, id)),
        }
    }

    fn nearest_scan(&self, query: [f64; 3], exclude: Option<NodeId>) -> Option<(NodeId, f64)> {
        let mut best: Option<(f64, NodeId)> = None;
        for i in 0..self.ids.len() {
            self.consider(i, query, exclude, &mut best);
        }
        best.map(|(d2, id)| (id, d2.sqrt()))
    }

    fn nearest_grid(
        &self,
        grid: &Grid,
        query: [f64; 3],
        exclude: Option<NodeId>,
    ) -> Option<(NodeId, f64)> {
        let (qx, qy) = grid.cell_of(query[0], query[1]);
        let mut best: Option<(f64, NodeId)> = None;
        let max_ring = grid.nx.max(grid.ny);
        for ring in 0..=max_ring {
            // Points in ring k are at least (k-1) cells away in the plane,
            // which lower-bounds their 3D distance.
            if let Some((bd2, _)) = best {
                let lower = (ring as f64 - 1.0).max(0.0) * grid.cell;
                if lower * lower > bd2 {
                    break;
                }
            }
            let r = ring as isize;
            let (cx, cy) = (qx as isize, qy as isize);
            for dy in -r..=r {
                let y = cy + dy;
                if y < 0 || y >= grid.ny as isize {
                    continue;
                }
                let on_rim = dy.abs() == r;
                let xs: &[isize] = &if on_rim {
                    ((cx - r)..=(cx + r)).collect::<Vec<_>>()
                } else {
                    vec![cx - r, cx + r]
                };
                for &x in xs {
                    if x < 0 || x >= grid.nx as isize {
                        continue;
                    }
                    for &i in &grid.buckets[y as usize * grid.nx + x as usize] {
                        self.consider(i as usize, query, exclude, &mut best);
                    }
                }
            }
        }
        best.map(|(d2, id)| (id, d2.sqrt()))
    }
}
