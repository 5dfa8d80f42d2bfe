//! Physical layout of the package: the compute-chiplet grid, DRAM chiplets
//! attached on the perimeter, the wired NoP mesh between them, and one
//! wireless antenna at the center of every chiplet.
//!
//! Routing on the NoP is dimension-ordered (X first, then Y). DRAM chiplets
//! are leaves of the mesh: every route to or from a DRAM passes through the
//! compute chiplet it is attached to, adding one hop for the DRAM link.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Default: 3x3 compute chiplets.
pub const DEFAULT_GRID: usize = 3;
/// Default: four DRAM chiplets.
pub const DEFAULT_DRAM_COUNT: usize = 4;
/// Default: 16 GB/s per DRAM chiplet, in bytes per second.
pub const DEFAULT_DRAM_BANDWIDTH: f64 = 16e9;
/// Default: 32 Gb/s per NoP link, in bits per second.
pub const DEFAULT_NOP_BANDWIDTH: f64 = 32e9;
/// Default: 64 Gb/s per NoC port, in bits per second.
pub const DEFAULT_NOC_BANDWIDTH: f64 = 64e9;
/// 144 TOPS spread over nine chiplets, in MAC operations per second.
pub const DEFAULT_CHIPLET_THROUGHPUT: f64 = 16e12;
/// Side of the PE mesh inside each chiplet.
pub const DEFAULT_NOC_MESH_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("grid must have at least one row and one column (got {rows}x{cols})")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("{field} must be finite and strictly positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("noc_mesh_dim must be at least 1")]
    EmptyNocMesh,
    #[error("{got} DRAM attach points declared for {expected} DRAM chiplets")]
    AttachCountMismatch { expected: usize, got: usize },
    #[error("DRAM {dram} attach point {attach} lies outside the {rows}x{cols} grid perimeter")]
    AttachOutOfRange { dram: usize, attach: DramAttach, rows: usize, cols: usize },
    #[error("DRAM {second} overlaps DRAM {first} at {attach}")]
    OverlappingAttach { first: usize, second: usize, attach: DramAttach },
    #[error("no default attach points for {0} DRAM chiplets (at most 4); declare them explicitly")]
    TooManyDefaultDrams(usize),
    #[error("node {0} does not exist in this layout")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum NodeKind {
    Compute,
    Dram,
}

/// A chiplet in the package.
///
/// Compute chiplets are numbered row-major over the grid; DRAM chiplets in
/// declaration order of their attach points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: usize,
}

impl NodeId {
    pub const fn compute(index: usize) -> Self {
        Self { kind: NodeKind::Compute, index }
    }

    pub const fn dram(index: usize) -> Self {
        Self { kind: NodeKind::Dram, index }
    }

    pub const fn is_dram(&self) -> bool {
        matches!(self.kind, NodeKind::Dram)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Compute => write!(f, "c{}", self.index),
            NodeKind::Dram => write!(f, "d{}", self.index),
        }
    }
}

/// Grid edge a DRAM chiplet sits on. North is the side above the last row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Side {
    North,
    South,
    East,
    West,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::North, Side::South, Side::East, Side::West];

    pub const fn name(self) -> &'static str {
        match self {
            Side::North => "N",
            Side::South => "S",
            Side::East => "E",
            Side::West => "W",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "N" | "n" | "north" => Some(Side::North),
            "S" | "s" | "south" => Some(Side::South),
            "E" | "e" | "east" => Some(Side::East),
            "W" | "w" | "west" => Some(Side::West),
            _ => None,
        }
    }
}

/// Where a DRAM chiplet attaches: a grid side plus the position along it
/// (column for North/South, row for East/West).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DramAttach {
    pub side: Side,
    pub offset: usize,
}

impl DramAttach {
    pub const fn new(side: Side, offset: usize) -> Self {
        Self { side, offset }
    }
}

impl fmt::Display for DramAttach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.side.name(), self.offset)
    }
}

/// Midpoints of the N, S, E, W edges, in that order. On even-length edges
/// the lower of the two middle positions is used.
pub fn midpoint_attach_points(rows: usize, cols: usize, dram_count: usize) -> Result<Vec<DramAttach>, TopologyError> {
    if dram_count > 4 {
        return Err(TopologyError::TooManyDefaultDrams(dram_count));
    }
    let mid_col = cols.saturating_sub(1) / 2;
    let mid_row = rows.saturating_sub(1) / 2;
    Ok(Side::ALL
        .iter()
        .take(dram_count)
        .map(|&side| match side {
            Side::North | Side::South => DramAttach::new(side, mid_col),
            Side::East | Side::West => DramAttach::new(side, mid_row),
        })
        .collect())
}

/// Package parameters. Bandwidths of links are in bits per second, DRAM
/// bandwidth in bytes per second.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ArchitectureSpec {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub dram_bandwidth: f64,
    pub nop_link_bandwidth: f64,
    pub noc_link_bandwidth: f64,
    /// MAC operations per second per compute chiplet.
    pub chiplet_throughput: f64,
    pub noc_mesh_dim: usize,
    /// One entry per DRAM chiplet.
    pub dram_attach_points: Vec<DramAttach>,
}

impl Default for ArchitectureSpec {
    fn default() -> Self {
        Self {
            grid_rows: DEFAULT_GRID,
            grid_cols: DEFAULT_GRID,
            dram_bandwidth: DEFAULT_DRAM_BANDWIDTH,
            nop_link_bandwidth: DEFAULT_NOP_BANDWIDTH,
            noc_link_bandwidth: DEFAULT_NOC_BANDWIDTH,
            chiplet_throughput: DEFAULT_CHIPLET_THROUGHPUT,
            noc_mesh_dim: DEFAULT_NOC_MESH_DIM,
            dram_attach_points: midpoint_attach_points(DEFAULT_GRID, DEFAULT_GRID, DEFAULT_DRAM_COUNT)
                .expect("four midpoints always exist"),
        }
    }
}

impl ArchitectureSpec {
    pub fn chiplet_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    pub fn dram_count(&self) -> usize {
        self.dram_attach_points.len()
    }

    pub fn total_throughput(&self) -> f64 {
        self.chiplet_throughput * self.chiplet_count() as f64
    }

    /// Multiplies every bandwidth and the compute throughput by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dram_bandwidth: self.dram_bandwidth * factor,
            nop_link_bandwidth: self.nop_link_bandwidth * factor,
            noc_link_bandwidth: self.noc_link_bandwidth * factor,
            chiplet_throughput: self.chiplet_throughput * factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let (rows, cols) = (self.grid_rows, self.grid_cols);
        if rows == 0 || cols == 0 {
            return Err(TopologyError::EmptyGrid { rows, cols });
        }
        for (field, value) in [
            ("dram_bandwidth", self.dram_bandwidth),
            ("nop_link_bandwidth", self.nop_link_bandwidth),
            ("noc_link_bandwidth", self.noc_link_bandwidth),
            ("chiplet_throughput", self.chiplet_throughput),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(TopologyError::NonPositive { field, value });
            }
        }
        if self.noc_mesh_dim == 0 {
            return Err(TopologyError::EmptyNocMesh);
        }
        for (dram, attach) in self.dram_attach_points.iter().enumerate() {
            let limit = match attach.side {
                Side::North | Side::South => cols,
                Side::East | Side::West => rows,
            };
            if attach.offset >= limit {
                return Err(TopologyError::AttachOutOfRange { dram, attach: *attach, rows, cols });
            }
            if let Some(first) = self.dram_attach_points[..dram].iter().position(|a| a == attach) {
                return Err(TopologyError::OverlappingAttach { first, second: dram, attach: *attach });
            }
        }
        Ok(())
    }
}

/// Position in chiplet-pitch units. Compute chiplets occupy `0..cols` by
/// `0..rows`; DRAM chiplets sit one step outside that box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Coordinate {
    pub x: i32,
    pub y: i32,
}

impl Coordinate {
    pub const fn manhattan(self, other: Coordinate) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// A wireless transceiver. Positions are in chiplet-pitch units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Antenna {
    pub node: NodeId,
    pub x: f64,
    pub y: f64,
}

/// Index of a directed NoP link. Every mesh edge carries two of them, one
/// per direction.
pub type LinkId = u32;

const NO_LINK: LinkId = LinkId::MAX;

/// Immutable, fully routed view of an [`ArchitectureSpec`].
#[derive(Debug, Clone)]
pub struct Layout {
    rows: usize,
    cols: usize,
    dram_count: usize,
    coords: Vec<Coordinate>,
    attach_chiplet: Vec<usize>,
    edges: Vec<(NodeId, NodeId)>,
    link_ends: Vec<(usize, usize)>,
    link_index: Vec<LinkId>,
    paths: Vec<Vec<LinkId>>,
    antennas: Vec<Antenna>,
}

impl Layout {
    /// Places every chiplet, wires the NoP mesh and precomputes XY routes
    /// between all node pairs.
    pub fn build(spec: &ArchitectureSpec) -> Result<Self, TopologyError> {
        spec.validate()?;
        let (rows, cols) = (spec.grid_rows, spec.grid_cols);
        let chiplets = rows * cols;
        let dram_count = spec.dram_count();
        let n = chiplets + dram_count;

        let mut coords = Vec::with_capacity(n);
        for i in 0..chiplets {
            coords.push(Coordinate { x: (i % cols) as i32, y: (i / cols) as i32 });
        }
        let mut attach_chiplet = Vec::with_capacity(dram_count);
        for attach in &spec.dram_attach_points {
            let off = attach.offset;
            let (coord, chiplet) = match attach.side {
                Side::North => (Coordinate { x: off as i32, y: rows as i32 }, (rows - 1) * cols + off),
                Side::South => (Coordinate { x: off as i32, y: -1 }, off),
                Side::East => (Coordinate { x: cols as i32, y: off as i32 }, off * cols + cols - 1),
                Side::West => (Coordinate { x: -1, y: off as i32 }, off * cols),
            };
            coords.push(coord);
            attach_chiplet.push(chiplet);
        }

        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let here = r * cols + c;
                if c + 1 < cols {
                    edges.push((NodeId::compute(here), NodeId::compute(here + 1)));
                }
                if r + 1 < rows {
                    edges.push((NodeId::compute(here), NodeId::compute(here + cols)));
                }
            }
        }
        for (d, &chiplet) in attach_chiplet.iter().enumerate() {
            edges.push((NodeId::compute(chiplet), NodeId::dram(d)));
        }

        let mut link_index = vec![NO_LINK; n * n];
        let mut link_ends = Vec::with_capacity(edges.len() * 2);
        let dense = |id: NodeId| match id.kind {
            NodeKind::Compute => id.index,
            NodeKind::Dram => chiplets + id.index,
        };
        for &(a, b) in &edges {
            let (a, b) = (dense(a), dense(b));
            link_index[a * n + b] = link_ends.len() as LinkId;
            link_ends.push((a, b));
            link_index[b * n + a] = link_ends.len() as LinkId;
            link_ends.push((b, a));
        }

        let antennas = (0..n)
            .map(|i| {
                let node = if i < chiplets { NodeId::compute(i) } else { NodeId::dram(i - chiplets) };
                Antenna { node, x: coords[i].x as f64 + 0.5, y: coords[i].y as f64 + 0.5 }
            })
            .collect();

        let mut layout = Self {
            rows,
            cols,
            dram_count,
            coords,
            attach_chiplet,
            edges,
            link_ends,
            link_index,
            paths: Vec::new(),
            antennas,
        };
        let mut paths = Vec::with_capacity(n * n);
        for src in 0..n {
            for dst in 0..n {
                paths.push(layout.xy_route(src, dst));
            }
        }
        layout.paths = paths;
        Ok(layout)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn chiplet_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn dram_count(&self) -> usize {
        self.dram_count
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    /// Number of directed NoP links.
    pub fn link_count(&self) -> usize {
        self.link_ends.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(|i| self.node_at(i))
    }

    pub fn contains(&self, node: NodeId) -> bool {
        match node.kind {
            NodeKind::Compute => node.index < self.chiplet_count(),
            NodeKind::Dram => node.index < self.dram_count,
        }
    }

    /// Dense index of a node: compute chiplets first, then DRAMs.
    pub fn dense_index(&self, node: NodeId) -> usize {
        debug_assert!(self.contains(node), "{node} not in layout");
        match node.kind {
            NodeKind::Compute => node.index,
            NodeKind::Dram => self.chiplet_count() + node.index,
        }
    }

    pub fn node_at(&self, dense: usize) -> NodeId {
        let chiplets = self.chiplet_count();
        if dense < chiplets {
            NodeId::compute(dense)
        } else {
            NodeId::dram(dense - chiplets)
        }
    }

    pub fn coordinate(&self, node: NodeId) -> Coordinate {
        self.coords[self.dense_index(node)]
    }

    pub fn compute_at(&self, row: usize, col: usize) -> NodeId {
        assert!(row < self.rows && col < self.cols, "({row},{col}) outside grid");
        NodeId::compute(row * self.cols + col)
    }

    /// Compute chiplet a DRAM is wired to.
    pub fn dram_attach_chiplet(&self, dram: usize) -> NodeId {
        NodeId::compute(self.attach_chiplet[dram])
    }

    /// Undirected NoP edges: grid mesh edges first, then DRAM links.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn link_endpoints(&self, link: LinkId) -> (NodeId, NodeId) {
        let (a, b) = self.link_ends[link as usize];
        (self.node_at(a), self.node_at(b))
    }

    /// Neighbours of a node on the NoP.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let n = self.node_count();
        let i = self.dense_index(node);
        (0..n).filter(move |&j| self.link_index[i * n + j] != NO_LINK).map(|j| self.node_at(j))
    }

    pub fn antennas(&self) -> &[Antenna] {
        &self.antennas
    }

    pub fn antenna_count(&self) -> usize {
        self.antennas.len()
    }

    /// Directed links of the XY route from `src` to `dst`.
    pub fn route(&self, src: NodeId, dst: NodeId) -> &[LinkId] {
        let n = self.node_count();
        &self.paths[self.dense_index(src) * n + self.dense_index(dst)]
    }

    /// Length of the XY route between two nodes.
    pub fn nop_hops(&self, src: NodeId, dst: NodeId) -> u32 {
        self.route(src, dst).len() as u32
    }

    /// Distinct directed links in the union of XY routes from `src` to every
    /// destination, sorted by link id.
    pub fn multicast_tree<'a, I>(&self, src: NodeId, dsts: I) -> Vec<LinkId>
    where
        I: IntoIterator<Item = &'a NodeId>,
    {
        let mut links: Vec<LinkId> = dsts.into_iter().flat_map(|&d| self.route(src, d).iter().copied()).collect();
        links.sort_unstable();
        links.dedup();
        links
    }

    /// Number of links in the XY multicast tree.
    pub fn multicast_nop_hops<'a, I>(&self, src: NodeId, dsts: I) -> u32
    where
        I: IntoIterator<Item = &'a NodeId>,
    {
        self.multicast_tree(src, dsts).len() as u32
    }

    fn link(&self, a: usize, b: usize) -> LinkId {
        let id = self.link_index[a * self.node_count() + b];
        debug_assert_ne!(id, NO_LINK, "no link between {a} and {b}");
        id
    }

    fn xy_route(&self, src: usize, dst: usize) -> Vec<LinkId> {
        let mut links = Vec::new();
        if src == dst {
            return links;
        }
        let chiplets = self.chiplet_count();
        let mut from = src;
        if src >= chiplets {
            let attach = self.attach_chiplet[src - chiplets];
            links.push(self.link(src, attach));
            from = attach;
        }
        let to = if dst >= chiplets { self.attach_chiplet[dst - chiplets] } else { dst };

        let cols = self.cols;
        let (mut x, mut y) = (from % cols, from / cols);
        let (tx, ty) = (to % cols, to / cols);
        while x != tx {
            let nx = if tx > x { x + 1 } else { x - 1 };
            links.push(self.link(y * cols + x, y * cols + nx));
            x = nx;
        }
        while y != ty {
            let ny = if ty > y { y + 1 } else { y - 1 };
            links.push(self.link(y * cols + x, ny * cols + x));
            y = ny;
        }
        if dst >= chiplets {
            links.push(self.link(to, dst));
        }
        links
    }
}

/// An architecture together with its routed layout.
#[derive(Debug, Clone)]
pub struct Package {
    spec: ArchitectureSpec,
    layout: Layout,
}

impl Package {
    pub fn new(spec: ArchitectureSpec) -> Result<Self, TopologyError> {
        let layout = Layout::build(&spec)?;
        Ok(Self { spec, layout })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }
}

/// Average Manhattan distance from a PE-mesh router to the central router,
/// rounded up. On even meshes the center is the lower-left of the four
/// middle routers.
pub fn noc_hops_to_center(spec: &ArchitectureSpec) -> u32 {
    let dim = spec.noc_mesh_dim;
    if dim == 0 {
        return 0;
    }
    let center = (dim - 1) / 2;
    let axis: usize = (0..dim).map(|i| i.abs_diff(center)).sum();
    // every router contributes its x and y offsets; each axis value repeats dim times
    let total = 2 * axis * dim;
    let routers = dim * dim;
    total.div_ceil(routers) as u32
}
