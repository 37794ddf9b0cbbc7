//! Domain types: container images, registry nodes, links, problem instances,
//! placements and storage allocations.
//!
//! All types are immutable after construction (constructors validate the
//! documented invariants) and safe to share across threads. Collections are
//! `BTree`-based so iteration order is deterministic everywhere.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Unique identifier of a container image.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ImageId(String);

impl ImageId {
    pub fn new(id: impl Into<String>) -> Self {
        ImageId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ImageId {
    fn from(s: &str) -> Self {
        ImageId(s.to_owned())
    }
}

/// Unique identifier of a registry node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// A container image: identifier, size in MB, and the maximum time in
/// seconds tolerated to download it onto any target node.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerImage {
    pub id: ImageId,
    pub size_mb: f64,
    pub max_transfer_s: f64,
}

impl ContainerImage {
    pub fn new(
        id: impl Into<ImageId>,
        size_mb: f64,
        max_transfer_s: f64,
    ) -> Result<Self, ModelError> {
        let image = ContainerImage {
            id: id.into(),
            size_mb,
            max_transfer_s,
        };
        image.validate()?;
        Ok(image)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.as_str().is_empty() {
            return Err(ModelError::EmptyId);
        }
        if !(self.size_mb > 0.0) {
            return Err(ModelError::NonPositive {
                what: "image size",
                id: self.id.as_str().to_owned(),
            });
        }
        if !(self.max_transfer_s > 0.0) {
            return Err(ModelError::NonPositive {
                what: "max transfer time",
                id: self.id.as_str().to_owned(),
            });
        }
        Ok(())
    }
}

/// A registry node: identifier, available storage in MB, and monthly cost
/// per used MB of storage.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryNode {
    pub id: NodeId,
    pub storage_mb: f64,
    pub unit_cost: f64,
}

impl RegistryNode {
    pub fn new(
        id: impl Into<NodeId>,
        storage_mb: f64,
        unit_cost: f64,
    ) -> Result<Self, ModelError> {
        let node = RegistryNode {
            id: id.into(),
            storage_mb,
            unit_cost,
        };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.as_str().is_empty() {
            return Err(ModelError::EmptyId);
        }
        if !(self.storage_mb >= 0.0) {
            return Err(ModelError::Negative {
                what: "node storage",
                id: self.id.as_str().to_owned(),
            });
        }
        if !(self.unit_cost >= 0.0) {
            return Err(ModelError::Negative {
                what: "unit cost",
                id: self.id.as_str().to_owned(),
            });
        }
        Ok(())
    }
}

/// A directed link between two nodes with its QoS profile. `(src, dst)` and
/// `(dst, src)` are distinct records; asymmetric QoS is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectLink {
    pub src: NodeId,
    pub dst: NodeId,
    pub latency_ms: f64,
    pub bandwidth_mbps: f64,
}

impl DirectLink {
    pub fn new(
        src: impl Into<NodeId>,
        dst: impl Into<NodeId>,
        latency_ms: f64,
        bandwidth_mbps: f64,
    ) -> Result<Self, ModelError> {
        let link = DirectLink {
            src: src.into(),
            dst: dst.into(),
            latency_ms,
            bandwidth_mbps,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.src == self.dst {
            return Err(ModelError::SelfLink(self.src.as_str().to_owned()));
        }
        if !(self.latency_ms > 0.0) {
            return Err(ModelError::NonPositive {
                what: "link latency",
                id: link_label(&self.src, &self.dst),
            });
        }
        if !(self.bandwidth_mbps > 0.0) {
            return Err(ModelError::NonPositive {
                what: "link bandwidth",
                id: link_label(&self.src, &self.dst),
            });
        }
        Ok(())
    }
}

fn link_label(src: &NodeId, dst: &NodeId) -> String {
    let mut s = String::new();
    s.push_str(src.as_str());
    s.push_str("->");
    s.push_str(dst.as_str());
    s
}

/// Registry nodes plus the direct links between them.
///
/// End-to-end QoS is derived separately ([`crate::network::derive_e2e`]);
/// an `Infrastructure` stores direct links only. Equality is
/// order-insensitive over nodes and links.
#[derive(Debug, Clone)]
pub struct Infrastructure {
    nodes: Vec<RegistryNode>,
    links: Vec<DirectLink>,
    index: BTreeMap<NodeId, usize>,
}

impl PartialEq for Infrastructure {
    fn eq(&self, other: &Self) -> bool {
        let by_id = |a: &&RegistryNode, b: &&RegistryNode| a.id.cmp(&b.id);
        let mut ours: Vec<&RegistryNode> = self.nodes.iter().collect();
        let mut theirs: Vec<&RegistryNode> = other.nodes.iter().collect();
        ours.sort_by(by_id);
        theirs.sort_by(by_id);
        if ours != theirs {
            return false;
        }
        let by_ends = |a: &&DirectLink, b: &&DirectLink| (&a.src, &a.dst).cmp(&(&b.src, &b.dst));
        let mut ours: Vec<&DirectLink> = self.links.iter().collect();
        let mut theirs: Vec<&DirectLink> = other.links.iter().collect();
        ours.sort_by(by_ends);
        theirs.sort_by(by_ends);
        ours == theirs
    }
}

impl Infrastructure {
    pub fn new(nodes: Vec<RegistryNode>, links: Vec<DirectLink>) -> Result<Self, ModelError> {
        let mut index = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            node.validate()?;
            if index.insert(node.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateNode(node.id.as_str().to_owned()));
            }
        }
        let mut seen_links = BTreeSet::new();
        for link in &links {
            link.validate()?;
            for endpoint in [&link.src, &link.dst] {
                if !index.contains_key(endpoint) {
                    return Err(ModelError::UnknownNode(endpoint.as_str().to_owned()));
                }
            }
            if !seen_links.insert((link.src.clone(), link.dst.clone())) {
                return Err(ModelError::DuplicateLink(
                    link.src.as_str().to_owned(),
                    link.dst.as_str().to_owned(),
                ));
            }
        }
        Ok(Infrastructure {
            nodes,
            links,
            index,
        })
    }

    pub fn nodes(&self) -> &[RegistryNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[DirectLink] {
        &self.links
    }

    pub fn node(&self, id: &NodeId) -> Option<&RegistryNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// A full problem instance: infrastructure, the ordered image list, and the
/// maximum replica factor.
///
/// The image list order is significant (it drives heuristic search);
/// node and link order is not.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub infrastructure: Infrastructure,
    images: Vec<ContainerImage>,
    max_replicas: u32,
}

impl ProblemInstance {
    pub fn new(
        infrastructure: Infrastructure,
        images: Vec<ContainerImage>,
        max_replicas: u32,
    ) -> Result<Self, ModelError> {
        if max_replicas == 0 {
            return Err(ModelError::ZeroReplicaCap);
        }
        let mut seen = BTreeSet::new();
        for image in &images {
            image.validate()?;
            if !seen.insert(image.id.clone()) {
                return Err(ModelError::DuplicateImage(image.id.as_str().to_owned()));
            }
        }
        Ok(ProblemInstance {
            infrastructure,
            images,
            max_replicas,
        })
    }

    pub fn images(&self) -> &[ContainerImage] {
        &self.images
    }

    pub fn image(&self, id: &ImageId) -> Option<&ContainerImage> {
        self.images.iter().find(|img| &img.id == id)
    }

    pub fn max_replicas(&self) -> u32 {
        self.max_replicas
    }
}

/// How an image's replica set relates to the previous placement. Plumbing
/// for migration metrics; never affects solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Replica set carried over unchanged (modulo vanished nodes).
    Kept,
    /// Image was re-placed by the solver.
    Migrated,
    /// Image was not present in the previous placement.
    New,
}

/// A (partial or total) image placement: a mapping from image ids to replica
/// node sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Placement {
    assignments: BTreeMap<ImageId, BTreeSet<NodeId>>,
    provenance: BTreeMap<ImageId, Provenance>,
}

impl Placement {
    pub fn new() -> Self {
        Placement::default()
    }

    /// Assign `nodes` as the replica set of `image`, replacing any previous
    /// assignment.
    pub fn set_replicas(&mut self, image: ImageId, nodes: BTreeSet<NodeId>, prov: Provenance) {
        self.provenance.insert(image.clone(), prov);
        self.assignments.insert(image, nodes);
    }

    pub fn remove_image(&mut self, image: &ImageId) -> Option<BTreeSet<NodeId>> {
        self.provenance.remove(image);
        self.assignments.remove(image)
    }

    pub fn replicas(&self, image: &ImageId) -> Option<&BTreeSet<NodeId>> {
        self.assignments.get(image)
    }

    pub fn contains_image(&self, image: &ImageId) -> bool {
        self.assignments.contains_key(image)
    }

    pub fn provenance(&self, image: &ImageId) -> Option<Provenance> {
        self.provenance.get(image).copied()
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageId> {
        self.assignments.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ImageId, &BTreeSet<NodeId>)> {
        self.assignments.iter()
    }

    /// Number of images the placement is defined on.
    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Total number of replicas across all images.
    pub fn replica_count(&self) -> usize {
        self.assignments.values().map(|s| s.len()).sum()
    }

    /// A placement is total iff it is defined on every image of `instance`.
    pub fn is_total(&self, instance: &ProblemInstance) -> bool {
        instance
            .images()
            .iter()
            .all(|img| self.assignments.contains_key(&img.id))
    }

    /// Every image and node referenced must exist in `instance`.
    pub fn validate_against(&self, instance: &ProblemInstance) -> Result<(), ModelError> {
        for (image, nodes) in &self.assignments {
            if instance.image(image).is_none() {
                return Err(ModelError::UnknownImage(image.as_str().to_owned()));
            }
            for node in nodes {
                if !instance.infrastructure.contains_node(node) {
                    return Err(ModelError::UnknownNode(node.as_str().to_owned()));
                }
            }
        }
        Ok(())
    }

    /// The placement as a sorted `(image, node)` pair sequence. This is the
    /// order the canonical serialization emits, and the order used to break
    /// ties between equal-cost placements.
    pub fn canonical_pairs(&self) -> Vec<(&ImageId, &NodeId)> {
        let mut pairs = Vec::with_capacity(self.replica_count());
        for (image, nodes) in &self.assignments {
            for node in nodes {
                pairs.push((image, node));
            }
        }
        pairs
    }

    /// Lexicographic comparison of the canonical pair sequences.
    pub fn canonical_cmp(&self, other: &Placement) -> Ordering {
        self.canonical_pairs().cmp(&other.canonical_pairs())
    }
}

/// Per-node storage allocation derived from a placement: the `(image, size)`
/// pairs stored at each node plus the per-node totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    per_node: BTreeMap<NodeId, Vec<(ImageId, f64)>>,
    totals: BTreeMap<NodeId, f64>,
}

impl Allocation {
    pub fn new() -> Self {
        Allocation::default()
    }

    pub fn add(&mut self, node: NodeId, image: ImageId, size_mb: f64) {
        *self.totals.entry(node.clone()).or_insert(0.0) += size_mb;
        self.per_node.entry(node).or_default().push((image, size_mb));
    }

    /// Total MB used at `node` (0 when nothing is stored there).
    pub fn total_mb(&self, node: &NodeId) -> f64 {
        self.totals.get(node).copied().unwrap_or(0.0)
    }

    pub fn entries(&self, node: &NodeId) -> &[(ImageId, f64)] {
        self.per_node.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.per_node.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.per_node.is_empty()
    }
}

/// Validation errors raised by the model constructors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    EmptyId,
    NonPositive { what: &'static str, id: String },
    Negative { what: &'static str, id: String },
    DuplicateImage(String),
    DuplicateNode(String),
    DuplicateLink(String, String),
    SelfLink(String),
    UnknownNode(String),
    UnknownImage(String),
    ZeroReplicaCap,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::EmptyId => write!(f, "empty identifier"),
            ModelError::NonPositive { what, id } => {
                write!(f, "{what} of '{id}' must be positive")
            }
            ModelError::Negative { what, id } => {
                write!(f, "{what} of '{id}' must be non-negative")
            }
            ModelError::DuplicateImage(id) => write!(f, "duplicate image id '{id}'"),
            ModelError::DuplicateNode(id) => write!(f, "duplicate node id '{id}'"),
            ModelError::DuplicateLink(src, dst) => {
                write!(f, "duplicate link {src} -> {dst}")
            }
            ModelError::SelfLink(id) => write!(f, "link endpoints must differ ('{id}')"),
            ModelError::UnknownNode(id) => write!(f, "unknown node '{id}'"),
            ModelError::UnknownImage(id) => write!(f, "unknown image '{id}'"),
            ModelError::ZeroReplicaCap => write!(f, "max replica factor must be at least 1"),
        }
    }
}

impl core::error::Error for ModelError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_invariants() {
        assert!(ContainerImage::new("alpine", 8.0, 30.0).is_ok());
        assert!(matches!(
            ContainerImage::new("alpine", 0.0, 30.0),
            Err(ModelError::NonPositive { what: "image size", .. })
        ));
        assert!(matches!(
            ContainerImage::new("alpine", 8.0, -1.0),
            Err(ModelError::NonPositive { .. })
        ));
        assert!(ContainerImage::new("alpine", f64::NAN, 30.0).is_err());
    }

    #[test]
    fn infrastructure_rejects_duplicates_and_bad_links() {
        let nodes = alloc::vec![
            RegistryNode::new("a", 100.0, 0.5).unwrap(),
            RegistryNode::new("b", 100.0, 0.5).unwrap(),
        ];
        let dup = alloc::vec![
            RegistryNode::new("a", 100.0, 0.5).unwrap(),
            RegistryNode::new("a", 100.0, 0.5).unwrap(),
        ];
        assert!(matches!(
            Infrastructure::new(dup, alloc::vec![]),
            Err(ModelError::DuplicateNode(_))
        ));

        let bad_endpoint = alloc::vec![DirectLink::new("a", "c", 1.0, 10.0).unwrap()];
        assert!(matches!(
            Infrastructure::new(nodes.clone(), bad_endpoint),
            Err(ModelError::UnknownNode(_))
        ));

        assert!(matches!(
            DirectLink::new("a", "a", 1.0, 10.0),
            Err(ModelError::SelfLink(_))
        ));

        let twice = alloc::vec![
            DirectLink::new("a", "b", 1.0, 10.0).unwrap(),
            DirectLink::new("a", "b", 2.0, 20.0).unwrap(),
        ];
        assert!(matches!(
            Infrastructure::new(nodes.clone(), twice),
            Err(ModelError::DuplicateLink(..))
        ));

        // Opposite directions are distinct records.
        let both = alloc::vec![
            DirectLink::new("a", "b", 1.0, 10.0).unwrap(),
            DirectLink::new("b", "a", 2.0, 20.0).unwrap(),
        ];
        assert!(Infrastructure::new(nodes, both).is_ok());
    }

    #[test]
    fn placement_canonical_order() {
        let mut p = Placement::new();
        p.set_replicas(
            ImageId::from("ubuntu"),
            [NodeId::from("edge5"), NodeId::from("edge2")].into(),
            Provenance::New,
        );
        p.set_replicas(
            ImageId::from("alpine"),
            [NodeId::from("edge2")].into(),
            Provenance::New,
        );
        let pairs: Vec<(&str, &str)> = p
            .canonical_pairs()
            .into_iter()
            .map(|(i, n)| (i.as_str(), n.as_str()))
            .collect();
        assert_eq!(
            pairs,
            alloc::vec![
                ("alpine", "edge2"),
                ("ubuntu", "edge2"),
                ("ubuntu", "edge5")
            ]
        );
    }

    #[test]
    fn instance_requires_unique_images_and_positive_cap() {
        let infra = Infrastructure::new(
            alloc::vec![RegistryNode::new("a", 100.0, 0.5).unwrap()],
            alloc::vec![],
        )
        .unwrap();
        let images = alloc::vec![
            ContainerImage::new("x", 1.0, 1.0).unwrap(),
            ContainerImage::new("x", 2.0, 1.0).unwrap(),
        ];
        assert!(matches!(
            ProblemInstance::new(infra.clone(), images, 1),
            Err(ModelError::DuplicateImage(_))
        ));
        assert!(matches!(
            ProblemInstance::new(infra, alloc::vec![], 0),
            Err(ModelError::ZeroReplicaCap)
        ));
    }
}
