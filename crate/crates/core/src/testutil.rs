//! Shared fixtures for unit tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{
    ContainerImage, DirectLink, Infrastructure, ProblemInstance, RegistryNode,
};

/// The six-node worked example: one cloud node, five edge nodes, twelve
/// directed links, three images, replica cap 3.
pub fn six_node_instance() -> ProblemInstance {
    let nodes = vec![
        RegistryNode::new("cloud", 1_024_000.0, 0.7).unwrap(),
        RegistryNode::new("edge1", 64_000.0, 0.7).unwrap(),
        RegistryNode::new("edge2", 32_000.0, 0.4).unwrap(),
        RegistryNode::new("edge3", 8_000.0, 0.5).unwrap(),
        RegistryNode::new("edge4", 4_000.0, 0.7).unwrap(),
        RegistryNode::new("edge5", 2_000.0, 0.4).unwrap(),
    ];
    let mut links = Vec::new();
    for (a, b, lat, bw) in [
        ("cloud", "edge1", 20.0, 50.0),
        ("cloud", "edge2", 25.0, 70.0),
        ("edge1", "edge2", 5.0, 100.0),
        ("edge1", "edge3", 15.0, 10.0),
        ("edge1", "edge4", 10.0, 30.0),
        ("edge2", "edge5", 30.0, 5.0),
    ] {
        links.push(DirectLink::new(a, b, lat, bw).unwrap());
        links.push(DirectLink::new(b, a, lat, bw).unwrap());
    }
    let images = vec![
        ContainerImage::new("alpine", 8.0, 30.0).unwrap(),
        ContainerImage::new("ubuntu", 69.0, 60.0).unwrap(),
        ContainerImage::new("nginx", 192.0, 120.0).unwrap(),
    ];
    ProblemInstance::new(Infrastructure::new(nodes, links).unwrap(), images, 3).unwrap()
}
