//! Level-synchronous breadth-first search.
//!
//! Vertices are hashed onto processors together with their adjacency lists.
//! A vertex first notified in superstep `s` gets distance `s−1` and then
//! notifies all of its neighbours. A processor that sends nothing votes to
//! halt; the search stops once every processor does.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bsp::{BspProgram, Context, Envelope};
use crate::codec::{self, WordReader, WordWriter};
use crate::error::{Result, SimError};

use super::{BspInstance, CostDescriptor, Growth};

pub const DESCRIPTOR: CostDescriptor = CostDescriptor {
    w: Growth::poly(2.0, "|V|^2/p"),
    h: Growth::poly(2.0, "|V|^2/p"),
    s: Growth::poly(0.0, "d"),
    f: Growth::poly(2.0, "d*|V|^2/p"),
    h_n: Growth::poly(1.0, "|V|"),
};

/// Undirected graph on vertices `0..n` with sorted, duplicate-free
/// adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Self-loops and repeated edges are dropped.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(SimError::InvalidInput(format!(
                    "edge ({u}, {v}) outside a graph of {n} vertices"
                )));
            }
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adj
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn owner(v: u32, p: usize) -> usize {
    (splitmix64(u64::from(v)) % p as u64) as usize
}

/// The vertices one processor owns, with their adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BfsPart {
    pub vertices: Vec<u32>,
    pub adj: Vec<Vec<u32>>,
}

impl BfsPart {
    fn units(&self) -> u64 {
        (self.vertices.len() + self.adj.iter().map(Vec::len).sum::<usize>()) as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BfsState {
    part: BfsPart,
    /// `-1` until reached.
    dist: Vec<i64>,
    parent: Vec<i64>,
}

/// `(vertex, distance, parent)` for each owned vertex.
pub type BfsLocal = Vec<(u32, Option<u32>, Option<u32>)>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BfsOutput {
    pub dist: Vec<Option<u32>>,
    pub parent: Vec<Option<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BfsBsp {
    root: u32,
    p: usize,
    n: usize,
}

pub fn bfs_bsp(graph: &Graph, root: u32, p: usize) -> Result<BspInstance<BfsBsp>> {
    let n = graph.vertex_count();
    if root as usize >= n {
        return Err(SimError::InvalidInput(format!(
            "root {root} is not a vertex of a graph with {n} vertices"
        )));
    }
    if p == 0 {
        return Err(SimError::InvalidConfig("p must be at least 1".into()));
    }
    let mut inputs = vec![BfsPart::default(); p];
    for (v, nbrs) in graph.adj.iter().enumerate() {
        let part = &mut inputs[owner(v as u32, p)];
        part.vertices.push(v as u32);
        part.adj.push(nbrs.clone());
    }
    Ok(BspInstance {
        program: BfsBsp { root, p, n },
        inputs,
    })
}

fn pack(target: u32, parent: u32) -> i64 {
    ((u64::from(target) << 32) | u64::from(parent)) as i64
}

fn unpack(word: i64) -> (u32, u32) {
    let w = word as u64;
    ((w >> 32) as u32, w as u32)
}

impl BfsBsp {
    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn descriptor(&self) -> CostDescriptor {
        DESCRIPTOR
    }

    pub fn assemble(&self, locals: &[BfsLocal]) -> BfsOutput {
        let mut out = BfsOutput {
            dist: vec![None; self.n],
            parent: vec![None; self.n],
        };
        for &(v, d, par) in locals.iter().flatten() {
            out.dist[v as usize] = d;
            out.parent[v as usize] = par;
        }
        out
    }

    /// Settles `v` (local index `i`) and queues notifications for all of
    /// its neighbours, keeping the smallest parent per target.
    fn visit(
        &self,
        ctx: &mut Context,
        state: &mut BfsState,
        i: usize,
        dist: i64,
        parent: u32,
        outgoing: &mut BTreeMap<u32, u32>,
    ) {
        let v = state.part.vertices[i];
        state.dist[i] = dist;
        state.parent[i] = i64::from(parent);
        for &u in &state.part.adj[i] {
            ctx.count_op(1);
            outgoing
                .entry(u)
                .and_modify(|par| *par = (*par).min(v))
                .or_insert(v);
        }
    }
}

impl BspProgram for BfsBsp {
    type Input = BfsPart;
    type State = BfsState;
    type Output = BfsLocal;

    fn init(&self, _pid: usize, input: &BfsPart) -> BfsState {
        let k = input.vertices.len();
        BfsState {
            part: input.clone(),
            dist: vec![-1; k],
            parent: vec![-1; k],
        }
    }

    fn input_units(&self, input: &BfsPart) -> u64 {
        input.units()
    }

    fn superstep(&self, ctx: &mut Context, state: &mut BfsState, inbox: &[Envelope]) -> Result<()> {
        let mut outgoing = BTreeMap::new();
        if ctx.superstep() == 1 {
            if let Ok(i) = state.part.vertices.binary_search(&self.root) {
                self.visit(ctx, state, i, 0, self.root, &mut outgoing);
            }
        } else {
            let mut incoming: BTreeMap<u32, u32> = BTreeMap::new();
            for e in inbox {
                for word in codec::decode_words(e.payload())? {
                    let (target, parent) = unpack(word);
                    ctx.count_op(1);
                    incoming
                        .entry(target)
                        .and_modify(|p| *p = (*p).min(parent))
                        .or_insert(parent);
                }
            }
            let level = ctx.superstep() as i64 - 1;
            for (target, parent) in incoming {
                let i = state.part.vertices.binary_search(&target).map_err(|_| {
                    SimError::Invariant(format!("vertex {target} notified at the wrong owner"))
                })?;
                if state.dist[i] < 0 {
                    self.visit(ctx, state, i, level, parent, &mut outgoing);
                }
            }
        }

        let mut per_dest: Vec<Vec<i64>> = vec![Vec::new(); self.p];
        for (target, parent) in outgoing {
            per_dest[owner(target, self.p)].push(pack(target, parent));
        }
        let mut sent = false;
        for (dest, words) in per_dest.into_iter().enumerate() {
            if !words.is_empty() {
                ctx.send(dest, codec::encode_words(&words));
                sent = true;
            }
        }
        if !sent {
            ctx.vote_halt();
        }
        ctx.retain(state.part.units() + 2 * state.dist.len() as u64);
        Ok(())
    }

    fn output_units(&self, state: &BfsState) -> u64 {
        2 * state.dist.len() as u64
    }

    fn output(&self, _pid: usize, state: BfsState) -> BfsLocal {
        let opt = |x: i64| (x >= 0).then_some(x as u32);
        state
            .part
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, opt(state.dist[i]), opt(state.parent[i])))
            .collect()
    }

    fn encode_state(&self, state: &BfsState) -> Vec<u8> {
        let mut w = WordWriter::new();
        let verts: Vec<i64> = state.part.vertices.iter().map(|&v| i64::from(v)).collect();
        w.push_slice(&verts);
        for list in &state.part.adj {
            let l: Vec<i64> = list.iter().map(|&u| i64::from(u)).collect();
            w.push_slice(&l);
        }
        w.push_slice(&state.dist).push_slice(&state.parent);
        w.into_bytes()
    }

    fn decode_state(&self, bytes: &[u8]) -> Result<BfsState> {
        let words = codec::decode_words(bytes)?;
        let mut r = WordReader::new(&words);
        let to_u32 = |xs: &[i64]| -> Vec<u32> { xs.iter().map(|&x| x as u32).collect() };
        let vertices = to_u32(r.slice()?);
        let mut adj = Vec::with_capacity(vertices.len());
        for _ in 0..vertices.len() {
            adj.push(to_u32(r.slice()?));
        }
        let dist = r.slice()?.to_vec();
        let parent = r.slice()?.to_vec();
        if dist.len() != vertices.len() || parent.len() != vertices.len() {
            return Err(SimError::Decode("bfs state arrays disagree in length".into()));
        }
        Ok(BfsState {
            part: BfsPart { vertices, adj },
            dist,
            parent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::oracle::bfs_distances;
    use crate::bsp::run_bsp;
    use crate::config::MachineConfig;
    use crate::inputs::{erdos_renyi, path_graph, random_regular};

    fn run(graph: &Graph, root: u32, p: usize) -> (BfsOutput, crate::ledger::BspCostLedger) {
        let inst = bfs_bsp(graph, root, p).unwrap();
        let run = run_bsp(&inst.program, &inst.inputs, &MachineConfig::new(p)).unwrap();
        (inst.program.assemble(&run.outputs), run.ledger)
    }

    #[test]
    fn path_of_four() {
        let (out, ledger) = run(&path_graph(4), 0, 2);
        assert_eq!(out.dist, vec![Some(0), Some(1), Some(2), Some(3)]);
        assert_eq!(out.parent, vec![Some(0), Some(0), Some(1), Some(2)]);
        assert_eq!(ledger.s(), 5);
    }

    #[test]
    fn single_vertex() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let (out, ledger) = run(&g, 0, 3);
        assert_eq!(out.dist, vec![Some(0)]);
        assert_eq!(ledger.s(), 1);
    }

    #[test]
    fn random_graphs_match_oracle() {
        for seed in 0..5 {
            let g = erdos_renyi(512, 0.01, seed);
            let (out, _) = run(&g, 0, 4);
            assert_eq!(out.dist, bfs_distances(g.adjacency(), 0));
        }
        let g = random_regular(300, 4, 9);
        assert_eq!(run(&g, 7, 3).0.dist, bfs_distances(g.adjacency(), 7));
    }

    #[test]
    fn unreachable_vertices_stay_unset() {
        let g = Graph::from_edges(5, &[(0, 1), (3, 4)]).unwrap();
        let (out, _) = run(&g, 0, 2);
        assert_eq!(out.dist, vec![Some(0), Some(1), None, None, None]);
        assert_eq!(out.parent[3], None);
    }

    #[test]
    fn parents_are_one_level_up() {
        let g = erdos_renyi(200, 0.03, 5);
        let (out, _) = run(&g, 0, 4);
        for v in 1..200 {
            if let (Some(d), Some(par)) = (out.dist[v], out.parent[v]) {
                assert_eq!(out.dist[par as usize], Some(d - 1));
                assert!(g.adjacency()[v].contains(&par));
            }
        }
    }

    #[test]
    fn state_round_trips() {
        let inst = bfs_bsp(&path_graph(10), 0, 3).unwrap();
        let s = inst.program.init(1, &inst.inputs[1]);
        let bytes = inst.program.encode_state(&s);
        assert_eq!(inst.program.decode_state(&bytes).unwrap(), s);
    }

    #[test]
    fn bad_root_and_edges() {
        assert!(bfs_bsp(&path_graph(3), 3, 2).is_err());
        assert!(Graph::from_edges(2, &[(0, 2)]).is_err());
    }
}
