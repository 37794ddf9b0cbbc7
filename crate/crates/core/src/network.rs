//! End-to-end link derivation and image transfer times.
//!
//! Direct links describe the physical topology; what the solvers consume is
//! the table of end-to-end links between every ordered node pair, computed
//! by routing along latency-shortest paths. The bandwidth of an end-to-end
//! link is the bottleneck (minimum) bandwidth along the chosen path.
//!
//! Transfer times follow the fixed unit convention: sizes in MB, bandwidth
//! in Mbps, latency in ms, result in seconds, with the factor 8 converting
//! MB to Mb.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::model::{ContainerImage, Infrastructure, NodeId};

/// QoS of one (direct or derived end-to-end) link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkQos {
    pub latency_ms: f64,
    pub bandwidth_mbps: f64,
}

/// End-to-end QoS between every ordered pair of nodes with a directed path.
///
/// Node ids are stored sorted, so iteration over [`E2eTable::entries`] is
/// deterministic. Unreachable pairs simply have no entry; there is never a
/// self-entry (transfers to the hosting node take zero time by definition).
#[derive(Debug, Clone, PartialEq)]
pub struct E2eTable {
    ids: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    qos: Vec<Option<LinkQos>>,
}

impl E2eTable {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Node ids in table (ascending) order.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id_at(&self, idx: usize) -> &NodeId {
        &self.ids[idx]
    }

    /// QoS between two table indices; `None` when unreachable or `src == dst`.
    pub fn qos(&self, src: usize, dst: usize) -> Option<&LinkQos> {
        self.qos[src * self.ids.len() + dst].as_ref()
    }

    pub fn qos_between(&self, src: &NodeId, dst: &NodeId) -> Option<&LinkQos> {
        let s = self.index_of(src)?;
        let d = self.index_of(dst)?;
        self.qos(s, d)
    }

    /// All entries, sorted by `(src, dst)` id.
    pub fn entries(&self) -> impl Iterator<Item = (&NodeId, &NodeId, &LinkQos)> {
        let n = self.ids.len();
        (0..n).flat_map(move |s| {
            (0..n).filter_map(move |d| {
                self.qos[s * n + d]
                    .as_ref()
                    .map(|q| (&self.ids[s], &self.ids[d], q))
            })
        })
    }
}

/// Heap candidate: ordered by latency ascending, then bandwidth descending,
/// then node index ascending, so ties resolve deterministically and the
/// bottleneck bandwidth along the latency-shortest route is maximal.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    latency: f64,
    bandwidth: f64,
    node: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.latency
            .total_cmp(&other.latency)
            .then_with(|| other.bandwidth.total_cmp(&self.bandwidth))
            .then_with(|| self.node.cmp(&other.node))
    }
}

/// Derive the end-to-end link table from the direct links of `infra`.
///
/// For every ordered pair `(u, v)` with a directed path, the entry carries
/// the latency of the latency-shortest path (per-source Dijkstra) and the
/// bottleneck bandwidth along that path. When two paths tie on latency the
/// one with the larger bottleneck bandwidth wins.
pub fn derive_e2e(infra: &Infrastructure) -> E2eTable {
    let mut ids: Vec<NodeId> = infra.nodes().iter().map(|n| n.id.clone()).collect();
    ids.sort();
    let index: BTreeMap<NodeId, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    let n = ids.len();

    let mut adjacency: Vec<Vec<(usize, f64, f64)>> = alloc::vec![Vec::new(); n];
    for link in infra.links() {
        let s = index[&link.src];
        let d = index[&link.dst];
        adjacency[s].push((d, link.latency_ms, link.bandwidth_mbps));
    }
    for neighbors in &mut adjacency {
        neighbors.sort_by(|a, b| a.0.cmp(&b.0));
    }

    let mut qos: Vec<Option<LinkQos>> = alloc::vec![None; n * n];
    let mut best: Vec<Option<(f64, f64)>> = alloc::vec![None; n];

    for src in 0..n {
        best.iter_mut().for_each(|b| *b = None);
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Candidate {
            latency: 0.0,
            bandwidth: f64::INFINITY,
            node: src,
        }));
        while let Some(Reverse(cand)) = heap.pop() {
            if best[cand.node].is_some() {
                continue;
            }
            best[cand.node] = Some((cand.latency, cand.bandwidth));
            for &(next, lat, bw) in &adjacency[cand.node] {
                if best[next].is_none() {
                    heap.push(Reverse(Candidate {
                        latency: cand.latency + lat,
                        bandwidth: cand.bandwidth.min(bw),
                        node: next,
                    }));
                }
            }
        }
        for dst in 0..n {
            if dst == src {
                continue;
            }
            if let Some((latency_ms, bandwidth_mbps)) = best[dst] {
                qos[src * n + dst] = Some(LinkQos {
                    latency_ms,
                    bandwidth_mbps,
                });
            }
        }
    }

    E2eTable { ids, index, qos }
}

/// Transfer seconds over one link: `size·8/bandwidth + latency/1000`.
pub fn transfer_seconds(size_mb: f64, qos: &LinkQos) -> f64 {
    size_mb * 8.0 / qos.bandwidth_mbps + qos.latency_ms / 1000.0
}

/// Time in seconds to pull `image` from `src` to `dst`; zero when
/// `src == dst`, `None` when `dst` is unreachable from `src`.
pub fn transfer_time(
    image: &ContainerImage,
    src: &NodeId,
    dst: &NodeId,
    table: &E2eTable,
) -> Option<f64> {
    if src == dst {
        return Some(0.0);
    }
    table
        .qos_between(src, dst)
        .map(|qos| transfer_seconds(image.size_mb, qos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::six_node_instance;
    use crate::model::{DirectLink, RegistryNode};

    fn qos_of<'a>(table: &'a E2eTable, src: &str, dst: &str) -> &'a LinkQos {
        table
            .qos_between(&NodeId::from(src), &NodeId::from(dst))
            .unwrap()
    }

    #[test]
    fn six_node_table_matches_hand_computation() {
        let inst = six_node_instance();
        let table = derive_e2e(&inst.infrastructure);

        // Routed via the relay: min-latency path with bottleneck bandwidth.
        let q = qos_of(&table, "cloud", "edge5");
        assert_eq!(q.latency_ms, 55.0);
        assert_eq!(q.bandwidth_mbps, 5.0);

        // Two-hop path via edge1 beats anything else.
        let q = qos_of(&table, "edge2", "edge3");
        assert_eq!(q.latency_ms, 20.0);
        assert_eq!(q.bandwidth_mbps, 10.0);

        // Latency tie (direct 25 vs 20+5 via edge1): the direct link has the
        // larger bottleneck bandwidth and must win.
        let q = qos_of(&table, "cloud", "edge2");
        assert_eq!(q.latency_ms, 25.0);
        assert_eq!(q.bandwidth_mbps, 70.0);

        // Direct links survive unchanged when they are the shortest route.
        let q = qos_of(&table, "cloud", "edge1");
        assert_eq!(q.latency_ms, 20.0);
        assert_eq!(q.bandwidth_mbps, 50.0);

        // Complete table on a connected graph: every ordered pair present.
        assert_eq!(table.entries().count(), 6 * 5);
    }

    #[test]
    fn single_node_yields_empty_table() {
        let infra = Infrastructure::new(
            alloc::vec![RegistryNode::new("only", 10.0, 0.1).unwrap()],
            alloc::vec![],
        )
        .unwrap();
        let table = derive_e2e(&infra);
        assert_eq!(table.entries().count(), 0);
    }

    #[test]
    fn unreachable_pairs_have_no_entry() {
        let infra = Infrastructure::new(
            alloc::vec![
                RegistryNode::new("a", 10.0, 0.1).unwrap(),
                RegistryNode::new("b", 10.0, 0.1).unwrap(),
            ],
            alloc::vec![DirectLink::new("a", "b", 5.0, 10.0).unwrap()],
        )
        .unwrap();
        let table = derive_e2e(&infra);
        assert!(table
            .qos_between(&NodeId::from("a"), &NodeId::from("b"))
            .is_some());
        assert!(table
            .qos_between(&NodeId::from("b"), &NodeId::from("a"))
            .is_none());
    }

    #[test]
    fn complete_triangle_inequality_graph_reproduces_direct_links() {
        // Fully meshed with latencies satisfying the triangle inequality:
        // derivation must return exactly the direct links.
        let names = ["a", "b", "c", "d"];
        let lat = |i: usize, j: usize| 10.0 + (i + j) as f64; // 11..15, triangle holds
        let mut links = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    links.push(DirectLink::new(names[i], names[j], lat(i, j), 100.0).unwrap());
                }
            }
        }
        let nodes = names
            .iter()
            .map(|n| RegistryNode::new(*n, 10.0, 0.1).unwrap())
            .collect();
        let infra = Infrastructure::new(nodes, links.clone()).unwrap();
        let table = derive_e2e(&infra);
        for link in &links {
            let q = table.qos_between(&link.src, &link.dst).unwrap();
            assert_eq!(q.latency_ms, link.latency_ms);
            assert_eq!(q.bandwidth_mbps, link.bandwidth_mbps);
        }
    }

    #[test]
    fn node_removal_never_improves_latency() {
        let inst = six_node_instance();
        let full = derive_e2e(&inst.infrastructure);

        // Drop edge1 and recompute.
        let infra = &inst.infrastructure;
        let nodes: Vec<_> = infra
            .nodes()
            .iter()
            .filter(|n| n.id.as_str() != "edge1")
            .cloned()
            .collect();
        let links: Vec<_> = infra
            .links()
            .iter()
            .filter(|l| l.src.as_str() != "edge1" && l.dst.as_str() != "edge1")
            .cloned()
            .collect();
        let reduced = derive_e2e(&Infrastructure::new(nodes, links).unwrap());

        for (src, dst, q) in reduced.entries() {
            let before = full.qos_between(src, dst).expect("entry existed before");
            assert!(q.latency_ms >= before.latency_ms);
        }
    }

    #[test]
    fn transfer_time_golden_values() {
        use crate::model::ImageId;
        let inst = six_node_instance();
        let table = derive_e2e(&inst.infrastructure);
        let ubuntu = inst.image(&ImageId::from("ubuntu")).unwrap();
        let nginx = inst.image(&ImageId::from("nginx")).unwrap();

        let t = transfer_time(ubuntu, &NodeId::from("edge5"), &NodeId::from("cloud"), &table)
            .unwrap();
        assert!((t - 110.455).abs() < 1e-9, "got {t}");

        let t = transfer_time(nginx, &NodeId::from("cloud"), &NodeId::from("edge1"), &table)
            .unwrap();
        assert!((t - 30.74).abs() < 1e-9, "got {t}");

        let t = transfer_time(nginx, &NodeId::from("edge4"), &NodeId::from("edge4"), &table)
            .unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn transfer_time_is_monotone() {
        let qos = LinkQos {
            latency_ms: 20.0,
            bandwidth_mbps: 50.0,
        };
        let base = transfer_seconds(100.0, &qos);
        assert!(transfer_seconds(150.0, &qos) > base);
        assert!(
            transfer_seconds(
                100.0,
                &LinkQos {
                    latency_ms: 30.0,
                    ..qos
                }
            ) > base
        );
        assert!(
            transfer_seconds(
                100.0,
                &LinkQos {
                    bandwidth_mbps: 40.0,
                    ..qos
                }
            ) > base
        );
    }
}
