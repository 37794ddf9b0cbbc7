//! Placement eligibility: the replica cap, per-destination transfer-time
//! budgets, and per-node storage capacity, plus placement cost and storage
//! allocation.
//!
//! A placement is eligible over an image scope iff (1) no image in scope
//! exceeds the replica cap, (2) every infrastructure node either stores each
//! scoped image or can pull it from some replica within the image's
//! transfer-time budget, and (3) no node's storage capacity is exceeded by
//! the scoped images stored on it. Checks are exhaustive: the report lists
//! every violation, not just the first, so diagnostics and the continuous
//! adaptation loop can see the full picture.
//!
//! Transfer-time budgets are compared with `<=` throughout.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{Allocation, ContainerImage, ImageId, NodeId, Placement, ProblemInstance};
use crate::network::{transfer_seconds, E2eTable};

/// Absolute tolerance for cost comparisons.
pub const COST_TOLERANCE: f64 = 1e-6;

/// One violated eligibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ReplicaCapExceeded {
        image: ImageId,
        replicas: usize,
        cap: u32,
    },
    TransferUnsatisfied {
        image: ImageId,
        node: NodeId,
    },
    StorageExceeded {
        node: NodeId,
        used_mb: f64,
        capacity_mb: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ReplicaCapExceeded {
                image,
                replicas,
                cap,
            } => write!(f, "image '{image}' has {replicas} replicas, cap is {cap}"),
            Violation::TransferUnsatisfied { image, node } => write!(
                f,
                "node '{node}' cannot obtain image '{image}' within its transfer budget"
            ),
            Violation::StorageExceeded {
                node,
                used_mb,
                capacity_mb,
            } => write!(
                f,
                "node '{node}' stores {used_mb} MB, capacity is {capacity_mb} MB"
            ),
        }
    }
}

/// Outcome of a full eligibility check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EligibilityReport {
    pub violations: Vec<Violation>,
}

impl EligibilityReport {
    pub fn eligible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Condition (1): every image's replica set has at most `cap` members.
pub fn replica_cap_ok(placement: &Placement, cap: u32) -> bool {
    placement.iter().all(|(_, nodes)| nodes.len() <= cap as usize)
}

/// Per-destination transfer check for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCheck {
    /// `(destination, satisfied)` for every node of the instance, in node-id
    /// order.
    pub per_node: Vec<(NodeId, bool)>,
}

impl TransferCheck {
    pub fn all_ok(&self) -> bool {
        self.per_node.iter().all(|(_, ok)| *ok)
    }

    pub fn unsatisfied(&self) -> impl Iterator<Item = &NodeId> {
        self.per_node
            .iter()
            .filter_map(|(node, ok)| (!ok).then_some(node))
    }
}

/// Condition (2) for one image: each node either hosts `image` or can pull
/// it from some replica within `image.max_transfer_s`.
pub fn transfer_times_ok(
    image: &ContainerImage,
    placement: &Placement,
    instance: &ProblemInstance,
    e2e: &E2eTable,
) -> TransferCheck {
    let empty = BTreeSet::new();
    let replicas = placement.replicas(&image.id).unwrap_or(&empty);
    let mut per_node: Vec<(NodeId, bool)> = instance
        .infrastructure
        .nodes()
        .iter()
        .map(|dst| {
            let ok = replicas.contains(&dst.id)
                || replicas.iter().any(|src| {
                    e2e.qos_between(src, &dst.id)
                        .map(|qos| transfer_seconds(image.size_mb, qos) <= image.max_transfer_s)
                        .unwrap_or(false)
                });
            (dst.id.clone(), ok)
        })
        .collect();
    per_node.sort_by(|a, b| a.0.cmp(&b.0));
    TransferCheck { per_node }
}

/// Storage use of one node under a placement.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeUsage {
    pub node: NodeId,
    pub used_mb: f64,
    pub capacity_mb: f64,
}

impl NodeUsage {
    pub fn ok(&self) -> bool {
        self.used_mb <= self.capacity_mb
    }
}

/// Per-node storage check.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageCheck {
    pub per_node: Vec<NodeUsage>,
}

impl StorageCheck {
    pub fn all_ok(&self) -> bool {
        self.per_node.iter().all(NodeUsage::ok)
    }
}

/// Condition (3): per node, the sizes of the images placed there sum to at
/// most its capacity.
pub fn storage_ok(placement: &Placement, instance: &ProblemInstance) -> StorageCheck {
    storage_ok_scoped(placement, instance, None)
}

fn storage_ok_scoped(
    placement: &Placement,
    instance: &ProblemInstance,
    scope: Option<&BTreeSet<&ImageId>>,
) -> StorageCheck {
    let mut per_node: Vec<NodeUsage> = instance
        .infrastructure
        .nodes()
        .iter()
        .map(|n| NodeUsage {
            node: n.id.clone(),
            used_mb: 0.0,
            capacity_mb: n.storage_mb,
        })
        .collect();
    per_node.sort_by(|a, b| a.node.cmp(&b.node));

    for (image_id, nodes) in placement.iter() {
        if let Some(scope) = scope {
            if !scope.contains(image_id) {
                continue;
            }
        }
        let Some(image) = instance.image(image_id) else {
            continue;
        };
        for node in nodes {
            if let Ok(idx) = per_node.binary_search_by(|u| u.node.cmp(node)) {
                per_node[idx].used_mb += image.size_mb;
            }
        }
    }
    StorageCheck { per_node }
}

/// Check all three eligibility conditions for the images in `scope`,
/// collecting every violation.
///
/// Images in scope that the placement does not define (or defines with an
/// empty replica set) fail the transfer condition at every node.
pub fn check_eligible(
    placement: &Placement,
    instance: &ProblemInstance,
    e2e: &E2eTable,
    scope: &[ImageId],
) -> EligibilityReport {
    let mut violations = Vec::new();
    let cap = instance.max_replicas();

    for image_id in scope {
        if let Some(replicas) = placement.replicas(image_id) {
            if replicas.len() > cap as usize {
                violations.push(Violation::ReplicaCapExceeded {
                    image: image_id.clone(),
                    replicas: replicas.len(),
                    cap,
                });
            }
        }
        let Some(image) = instance.image(image_id) else {
            continue;
        };
        let check = transfer_times_ok(image, placement, instance, e2e);
        for node in check.unsatisfied() {
            violations.push(Violation::TransferUnsatisfied {
                image: image_id.clone(),
                node: node.clone(),
            });
        }
    }

    let scope_set: BTreeSet<&ImageId> = scope.iter().collect();
    let storage = storage_ok_scoped(placement, instance, Some(&scope_set));
    for usage in &storage.per_node {
        if !usage.ok() {
            violations.push(Violation::StorageExceeded {
                node: usage.node.clone(),
                used_mb: usage.used_mb,
                capacity_mb: usage.capacity_mb,
            });
        }
    }

    EligibilityReport { violations }
}

/// Monthly cost of a placement: the sum of `size × unit_cost` over all
/// placed `(image, node)` pairs, accumulated in canonical order so the
/// floating-point result is deterministic.
pub fn cost(placement: &Placement, instance: &ProblemInstance) -> f64 {
    let mut total = 0.0;
    for (image_id, node_id) in placement.canonical_pairs() {
        let image = instance
            .image(image_id)
            .expect("placement references an image missing from the instance");
        let node = instance
            .infrastructure
            .node(node_id)
            .expect("placement references a node missing from the instance");
        total += image.size_mb * node.unit_cost;
    }
    total
}

/// Per-node `(image, size)` lists and totals for a placement.
pub fn allocated_storage(placement: &Placement, instance: &ProblemInstance) -> Allocation {
    let mut allocation = Allocation::new();
    for (image_id, node_id) in placement.canonical_pairs() {
        let image = instance
            .image(image_id)
            .expect("placement references an image missing from the instance");
        allocation.add(node_id.clone(), image_id.clone(), image.size_mb);
    }
    allocation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Provenance;
    use crate::network::derive_e2e;
    use crate::testutil::six_node_instance;
    use alloc::vec;

    fn image_id(s: &str) -> ImageId {
        ImageId::from(s)
    }

    fn nodes(ids: &[&str]) -> BTreeSet<NodeId> {
        ids.iter().map(|s| NodeId::from(*s)).collect()
    }

    /// The cost-optimal total placement of the worked example.
    fn optimal_placement() -> Placement {
        let mut p = Placement::new();
        p.set_replicas(image_id("alpine"), nodes(&["edge2"]), Provenance::New);
        p.set_replicas(
            image_id("ubuntu"),
            nodes(&["edge2", "edge5"]),
            Provenance::New,
        );
        p.set_replicas(
            image_id("nginx"),
            nodes(&["edge2", "edge3", "edge5"]),
            Provenance::New,
        );
        p
    }

    /// The placement found by the plain depth-first search in list order.
    fn naive_placement() -> Placement {
        let mut p = Placement::new();
        p.set_replicas(image_id("alpine"), nodes(&["cloud"]), Provenance::New);
        p.set_replicas(
            image_id("ubuntu"),
            nodes(&["cloud", "edge1", "edge5"]),
            Provenance::New,
        );
        p.set_replicas(
            image_id("nginx"),
            nodes(&["cloud", "edge3", "edge5"]),
            Provenance::New,
        );
        p
    }

    #[test]
    fn replica_cap() {
        let p = optimal_placement();
        assert!(replica_cap_ok(&p, 3));
        assert!(replica_cap_ok(&Placement::new(), 1));

        let mut over = Placement::new();
        over.set_replicas(
            image_id("nginx"),
            nodes(&["cloud", "edge1", "edge2", "edge3"]),
            Provenance::New,
        );
        assert!(!replica_cap_ok(&over, 3));
    }

    #[test]
    fn transfer_check_golden() {
        let inst = six_node_instance();
        let e2e = derive_e2e(&inst.infrastructure);

        // ubuntu only at edge5: the cloud cannot pull it within 60 s.
        let mut p = Placement::new();
        p.set_replicas(image_id("ubuntu"), nodes(&["edge5"]), Provenance::New);
        let ubuntu = inst.image(&image_id("ubuntu")).unwrap();
        let check = transfer_times_ok(ubuntu, &p, &inst, &e2e);
        let unsat: Vec<&str> = check.unsatisfied().map(|n| n.as_str()).collect();
        assert!(unsat.contains(&"cloud"));

        // alpine at edge2 reaches all six nodes within 30 s.
        let mut p = Placement::new();
        p.set_replicas(image_id("alpine"), nodes(&["edge2"]), Provenance::New);
        let alpine = inst.image(&image_id("alpine")).unwrap();
        assert!(transfer_times_ok(alpine, &p, &inst, &e2e).all_ok());

        // placed everywhere: trivially fine.
        let all: BTreeSet<NodeId> = inst
            .infrastructure
            .nodes()
            .iter()
            .map(|n| n.id.clone())
            .collect();
        let mut p = Placement::new();
        p.set_replicas(image_id("nginx"), all, Provenance::New);
        let nginx = inst.image(&image_id("nginx")).unwrap();
        assert!(transfer_times_ok(nginx, &p, &inst, &e2e).all_ok());
    }

    #[test]
    fn storage_check() {
        let inst = six_node_instance();

        let usage = storage_ok(&optimal_placement(), &inst);
        assert!(usage.all_ok());
        let edge5 = usage
            .per_node
            .iter()
            .find(|u| u.node.as_str() == "edge5")
            .unwrap();
        assert_eq!(edge5.used_mb, 261.0); // ubuntu + nginx

        assert!(storage_ok(&Placement::new(), &inst).all_ok());
    }

    #[test]
    fn storage_violation_arithmetic() {
        let nodes_v = vec![crate::model::RegistryNode::new("n", 2000.0, 0.1).unwrap()];
        let infra = crate::model::Infrastructure::new(nodes_v, vec![]).unwrap();
        let images = vec![
            ContainerImage::new("a", 1000.0, 10.0).unwrap(),
            ContainerImage::new("b", 1000.0, 10.0).unwrap(),
            ContainerImage::new("c", 1000.0, 10.0).unwrap(),
        ];
        let inst = ProblemInstance::new(infra, images, 3).unwrap();
        let e2e = derive_e2e(&inst.infrastructure);

        let mut p = Placement::new();
        for id in ["a", "b", "c"] {
            p.set_replicas(image_id(id), nodes(&["n"]), Provenance::New);
        }
        let scope: Vec<ImageId> = ["a", "b", "c"].map(image_id).to_vec();
        let report = check_eligible(&p, &inst, &e2e, &scope);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::StorageExceeded { used_mb, capacity_mb, .. }
                if *used_mb == 3000.0 && *capacity_mb == 2000.0
        )));
    }

    #[test]
    fn check_eligible_golden() {
        let inst = six_node_instance();
        let e2e = derive_e2e(&inst.infrastructure);

        // The partial placement that leaves ubuntu stranded at edge5.
        let mut partial = Placement::new();
        partial.set_replicas(
            image_id("alpine"),
            nodes(&["cloud", "edge2"]),
            Provenance::New,
        );
        partial.set_replicas(image_id("ubuntu"), nodes(&["edge5"]), Provenance::New);
        let scope = vec![image_id("alpine"), image_id("ubuntu")];
        let report = check_eligible(&partial, &inst, &e2e, &scope);
        assert!(!report.eligible());
        assert!(report.violations.iter().any(|v| matches!(
            v,
            Violation::TransferUnsatisfied { image, node }
                if image.as_str() == "ubuntu" && node.as_str() == "cloud"
        )));

        // The total placement is eligible.
        let scope: Vec<ImageId> = inst.images().iter().map(|i| i.id.clone()).collect();
        assert!(check_eligible(&optimal_placement(), &inst, &e2e, &scope).eligible());

        // Empty scope: vacuously eligible.
        assert!(check_eligible(&partial, &inst, &e2e, &[]).eligible());
    }

    #[test]
    fn cost_golden() {
        let inst = six_node_instance();
        assert!((cost(&optimal_placement(), &inst) - 308.0).abs() < COST_TOLERANCE);
        assert!((cost(&naive_placement(), &inst) - 437.0).abs() < COST_TOLERANCE);
        assert_eq!(cost(&Placement::new(), &inst), 0.0);
    }

    #[test]
    fn cost_is_additive_over_disjoint_image_sets() {
        let inst = six_node_instance();
        let total = naive_placement();
        let mut left = Placement::new();
        let mut right = Placement::new();
        for (image, replicas) in total.iter() {
            let target = if image.as_str() < "nginx" { &mut left } else { &mut right };
            target.set_replicas(image.clone(), replicas.clone(), Provenance::New);
        }
        let sum = cost(&left, &inst) + cost(&right, &inst);
        assert!((sum - cost(&total, &inst)).abs() < COST_TOLERANCE);
    }

    #[test]
    fn allocation_golden() {
        let inst = six_node_instance();
        // Replica sets of the plain search result: the cloud stores all
        // three images.
        let alloc = allocated_storage(&naive_placement(), &inst);
        assert_eq!(alloc.total_mb(&NodeId::from("cloud")), 269.0);
        assert_eq!(alloc.entries(&NodeId::from("cloud")).len(), 3);
        assert_eq!(alloc.total_mb(&NodeId::from("edge2")), 0.0);

        assert!(allocated_storage(&Placement::new(), &inst).is_empty());
    }

    /// Independent naive re-check of all three conditions, O(|I|·|N|²).
    fn naive_eligible(p: &Placement, inst: &ProblemInstance, e2e: &E2eTable) -> bool {
        for img in inst.images() {
            let empty = BTreeSet::new();
            let replicas = p.replicas(&img.id).unwrap_or(&empty);
            if replicas.len() > inst.max_replicas() as usize {
                return false;
            }
            for dst in inst.infrastructure.nodes() {
                let mut ok = false;
                for src in replicas {
                    if *src == dst.id {
                        ok = true;
                        break;
                    }
                    if let Some(q) = e2e.qos_between(src, &dst.id) {
                        if img.size_mb * 8.0 / q.bandwidth_mbps + q.latency_ms / 1000.0
                            <= img.max_transfer_s
                        {
                            ok = true;
                            break;
                        }
                    }
                }
                if !ok {
                    return false;
                }
            }
        }
        for node in inst.infrastructure.nodes() {
            let mut used = 0.0;
            for img in inst.images() {
                if p.replicas(&img.id).is_some_and(|r| r.contains(&node.id)) {
                    used += img.size_mb;
                }
            }
            if used > node.storage_mb {
                return false;
            }
        }
        true
    }

    #[test]
    fn agrees_with_naive_oracle_on_total_placements() {
        let inst = six_node_instance();
        let e2e = derive_e2e(&inst.infrastructure);
        let scope: Vec<ImageId> = inst.images().iter().map(|i| i.id.clone()).collect();

        let candidates = [
            optimal_placement(),
            naive_placement(),
            {
                // Deliberately broken: nginx nowhere near edge5.
                let mut p = optimal_placement();
                p.set_replicas(image_id("nginx"), nodes(&["cloud"]), Provenance::New);
                p
            },
            {
                let mut p = optimal_placement();
                p.set_replicas(
                    image_id("alpine"),
                    nodes(&["cloud", "edge1", "edge2", "edge3"]),
                    Provenance::New,
                );
                p
            },
        ];
        for p in &candidates {
            assert_eq!(
                check_eligible(p, &inst, &e2e, &scope).eligible(),
                naive_eligible(p, &inst, &e2e),
            );
        }
    }
}
