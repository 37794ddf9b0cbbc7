//! Heuristic placement: depth-first backtracking over per-image replica
//! sets, wrapped in iterative deepening on the replica factor.
//!
//! The search walks the image order, extending a partial placement with
//! 1..r replicas per image. Replicas are added greedily in node order until
//! the image's transfer condition holds, backtracking chronologically on
//! failure — a later image failing re-opens the replica choices of earlier
//! images. [`solve_ipp`] retries the whole search with replica bound
//! r = 1, 2, ... up to the instance cap and returns the first total eligible
//! placement found.
//!
//! With [`SearchOrders::standard`] the exploration follows a fail-first /
//! fail-last regime: large images first, nodes ordered cheap-and-capable
//! first.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::cover::CoverMasks;
use crate::eligibility::{allocated_storage, check_eligible, cost};
use crate::model::{
    Allocation, ContainerImage, ImageId, NodeId, Placement, ProblemInstance, Provenance,
};
use crate::network::E2eTable;
use crate::time::Deadline;

/// Default heuristic search budget in milliseconds.
pub const DEFAULT_HEURISTIC_BUDGET_MS: u64 = 6_000;

/// Images sorted by size descending, ties by id ascending (fail-first:
/// larger images have fewer candidate nodes, place them first).
pub fn order_images(images: &[ContainerImage]) -> Vec<ImageId> {
    let mut order: Vec<&ContainerImage> = images.iter().collect();
    order.sort_by(|a, b| {
        b.size_mb
            .total_cmp(&a.size_mb)
            .then_with(|| a.id.cmp(&b.id))
    });
    order.into_iter().map(|img| img.id.clone()).collect()
}

/// Nodes sorted by unit cost ascending, then mean outgoing end-to-end
/// bandwidth descending, then storage descending, ties by id (fail-last:
/// cheap, well-connected, capable nodes are tried first).
pub fn order_nodes(instance: &ProblemInstance, e2e: &E2eTable) -> Vec<NodeId> {
    let mean_out_bw = |id: &NodeId| -> f64 {
        let Some(src) = e2e.index_of(id) else {
            return 0.0;
        };
        let mut sum = 0.0;
        let mut count = 0usize;
        for dst in 0..e2e.node_count() {
            if let Some(q) = e2e.qos(src, dst) {
                sum += q.bandwidth_mbps;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    };

    let mut order: Vec<(&NodeId, f64, f64, f64)> = instance
        .infrastructure
        .nodes()
        .iter()
        .map(|n| (&n.id, n.unit_cost, mean_out_bw(&n.id), n.storage_mb))
        .collect();
    order.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then_with(|| b.2.total_cmp(&a.2))
            .then_with(|| b.3.total_cmp(&a.3))
            .then_with(|| a.0.cmp(b.0))
    });
    order.into_iter().map(|(id, ..)| id.clone()).collect()
}

/// Exploration orders for the search: permutations of the instance's image
/// and node sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOrders {
    pub image_order: Vec<ImageId>,
    pub node_order: Vec<NodeId>,
}

impl SearchOrders {
    /// The fail-first / fail-last orders of [`order_images`] and
    /// [`order_nodes`].
    pub fn standard(instance: &ProblemInstance, e2e: &E2eTable) -> Self {
        SearchOrders {
            image_order: order_images(instance.images()),
            node_order: order_nodes(instance, e2e),
        }
    }

    /// Images and nodes exactly as listed in the instance.
    pub fn instance_order(instance: &ProblemInstance) -> Self {
        SearchOrders {
            image_order: instance.images().iter().map(|i| i.id.clone()).collect(),
            node_order: instance
                .infrastructure
                .nodes()
                .iter()
                .map(|n| n.id.clone())
                .collect(),
        }
    }
}

/// Wall-clock budget plus exploration orders for one solver call.
#[derive(Debug)]
pub struct SearchBudget<'a> {
    pub deadline: Deadline<'a>,
    pub orders: SearchOrders,
}

impl<'a> SearchBudget<'a> {
    pub fn new(deadline: Deadline<'a>, orders: SearchOrders) -> Self {
        SearchBudget { deadline, orders }
    }
}

/// Why a solve produced no placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// The search space is exhausted: no eligible placement exists under the
    /// given orders and replica bound.
    NoPlacement,
    /// The budget expired before the search finished.
    Timeout,
    /// Inputs violate the documented preconditions.
    InvalidInput(&'static str),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NoPlacement => write!(f, "no eligible placement found"),
            SolveError::Timeout => write!(f, "search budget exhausted"),
            SolveError::InvalidInput(what) => write!(f, "invalid input: {what}"),
        }
    }
}

impl core::error::Error for SolveError {}

/// A successful heuristic solve.
#[derive(Debug, Clone)]
pub struct IppSolution {
    pub placement: Placement,
    pub cost: f64,
    /// The iterative-deepening level at which the search succeeded (the
    /// per-image replica bound in effect).
    pub replicas_used: u32,
    pub allocation: Allocation,
}

struct Search<'a, 'b> {
    deadline: &'a Deadline<'b>,
    /// e2e indices in exploration order.
    node_order: Vec<usize>,
    caps: Vec<f64>,
    used: Vec<f64>,
    base_used: Vec<f64>,
    sizes: Vec<f64>,
    covers: CoverMasks,
    covered: Vec<Vec<u64>>,
    replicas: Vec<Vec<usize>>,
    bound: u32,
}

impl<'a, 'b> Search<'a, 'b> {
    fn new(
        instance: &ProblemInstance,
        e2e: &E2eTable,
        partial: &Placement,
        to_place: &[ImageId],
        node_order: &[NodeId],
        deadline: &'a Deadline<'b>,
    ) -> Result<Self, SolveError> {
        partial
            .validate_against(instance)
            .map_err(|_| SolveError::InvalidInput("partial placement references unknown ids"))?;

        let n = e2e.node_count();
        let mut caps = alloc::vec![0.0; n];
        for node in instance.infrastructure.nodes() {
            let idx = e2e
                .index_of(&node.id)
                .ok_or(SolveError::InvalidInput("e2e table does not match instance"))?;
            caps[idx] = node.storage_mb;
        }

        let mut base_used = alloc::vec![0.0; n];
        for (image_id, nodes) in partial.iter() {
            let image = instance.image(image_id).expect("validated above");
            for node in nodes {
                let idx = e2e
                    .index_of(node)
                    .ok_or(SolveError::InvalidInput("partial references node missing from e2e table"))?;
                base_used[idx] += image.size_mb;
            }
        }

        let mut order = Vec::with_capacity(node_order.len());
        let mut seen = BTreeSet::new();
        for id in node_order {
            let idx = e2e
                .index_of(id)
                .ok_or(SolveError::InvalidInput("node order references unknown node"))?;
            if !seen.insert(idx) {
                return Err(SolveError::InvalidInput("node order repeats a node"));
            }
            order.push(idx);
        }
        if order.len() != n {
            return Err(SolveError::InvalidInput(
                "node order is not a permutation of the instance nodes",
            ));
        }

        let mut sizes = Vec::with_capacity(to_place.len());
        let mut profiles = Vec::with_capacity(to_place.len());
        for id in to_place {
            let image = instance
                .image(id)
                .ok_or(SolveError::InvalidInput("image order references unknown image"))?;
            sizes.push(image.size_mb);
            profiles.push((image.size_mb, image.max_transfer_s));
        }
        let covers = CoverMasks::build(&profiles, e2e);
        let words = covers.words();

        Ok(Search {
            deadline,
            node_order: order,
            caps,
            used: base_used.clone(),
            base_used,
            sizes,
            covered: alloc::vec![alloc::vec![0u64; words]; to_place.len()],
            replicas: alloc::vec![Vec::new(); to_place.len()],
            covers,
            bound: 0,
        })
    }

    fn reset(&mut self, bound: u32) {
        self.bound = bound;
        self.used.copy_from_slice(&self.base_used);
        for mask in &mut self.covered {
            mask.iter_mut().for_each(|w| *w = 0);
        }
        for replicas in &mut self.replicas {
            replicas.clear();
        }
    }

    fn run(&mut self, bound: u32) -> Result<bool, SolveError> {
        self.reset(bound);
        self.place_images(0)
    }

    fn place_images(&mut self, k: usize) -> Result<bool, SolveError> {
        if self.deadline.expired() {
            return Err(SolveError::Timeout);
        }
        if k == self.sizes.len() {
            return Ok(true);
        }
        self.place_replicas(k, self.bound)
    }

    /// One image's replica choices, in SLD order: while the transfer
    /// condition fails and replicas remain, try each admissible node in
    /// order; once it holds, move on to the next image. Failure below
    /// backtracks into the most recent choice.
    fn place_replicas(&mut self, k: usize, r_left: u32) -> Result<bool, SolveError> {
        if self.deadline.expired() {
            return Err(SolveError::Timeout);
        }
        if self.covers.is_full(&self.covered[k]) {
            return self.place_images(k + 1);
        }
        if r_left == 0 {
            return Ok(false);
        }
        let size = self.sizes[k];
        for pos in 0..self.node_order.len() {
            let node = self.node_order[pos];
            if self.replicas[k].contains(&node) {
                continue;
            }
            if !(self.caps[node] - self.used[node] >= size) {
                continue;
            }
            let saved_used = self.used[node];
            let saved_mask = self.covered[k].clone();
            self.used[node] += size;
            self.replicas[k].push(node);
            self.covers.or_into(&mut self.covered[k], k, node);

            if self.place_replicas(k, r_left - 1)? {
                return Ok(true);
            }

            self.covered[k] = saved_mask;
            self.replicas[k].pop();
            self.used[node] = saved_used;
        }
        Ok(false)
    }
}

fn images_to_place(
    instance: &ProblemInstance,
    partial: &Placement,
    orders: &SearchOrders,
) -> Result<Vec<ImageId>, SolveError> {
    let mut seen = BTreeSet::new();
    for id in &orders.image_order {
        if instance.image(id).is_none() {
            return Err(SolveError::InvalidInput("image order references unknown image"));
        }
        if !seen.insert(id.clone()) {
            return Err(SolveError::InvalidInput("image order repeats an image"));
        }
    }
    if seen.len() != instance.images().len() {
        return Err(SolveError::InvalidInput(
            "image order is not a permutation of the instance images",
        ));
    }
    Ok(orders
        .image_order
        .iter()
        .filter(|id| !partial.contains_image(id))
        .cloned()
        .collect())
}

fn assemble(
    instance: &ProblemInstance,
    e2e: &E2eTable,
    partial: &Placement,
    to_place: &[ImageId],
    search: &Search<'_, '_>,
) -> Placement {
    let mut placement = partial.clone();
    for (k, image_id) in to_place.iter().enumerate() {
        let nodes: BTreeSet<NodeId> = search.replicas[k]
            .iter()
            .map(|&idx| e2e.id_at(idx).clone())
            .collect();
        placement.set_replicas(image_id.clone(), nodes, Provenance::New);
    }
    debug_assert!({
        let scope: Vec<ImageId> = placement.images().cloned().collect();
        check_eligible(&placement, instance, e2e, &scope).eligible()
    });
    placement
}

/// Extend `partial` with 1..=`replica_bound` replicas of `image` so that its
/// transfer condition holds without violating storage caps; first solution
/// in depth-first order.
pub fn replica_placement(
    image: &ImageId,
    instance: &ProblemInstance,
    e2e: &E2eTable,
    partial: &Placement,
    budget: &SearchBudget<'_>,
    replica_bound: u32,
) -> Result<Placement, SolveError> {
    if instance.image(image).is_none() {
        return Err(SolveError::InvalidInput("unknown image"));
    }
    if partial.contains_image(image) {
        return Err(SolveError::InvalidInput("image already placed in partial"));
    }
    let to_place = [image.clone()];
    let mut search = Search::new(
        instance,
        e2e,
        partial,
        &to_place,
        &budget.orders.node_order,
        &budget.deadline,
    )?;
    if search.run(replica_bound)? {
        Ok(assemble(instance, e2e, partial, &to_place, &search))
    } else {
        Err(SolveError::NoPlacement)
    }
}

/// Fold the replica search over every image missing from `partial` (in
/// image order) with chronological backtracking across images; all images
/// share the fixed per-image `replica_bound`.
pub fn image_placement(
    instance: &ProblemInstance,
    e2e: &E2eTable,
    partial: &Placement,
    budget: &SearchBudget<'_>,
    replica_bound: u32,
) -> Result<Placement, SolveError> {
    let to_place = images_to_place(instance, partial, &budget.orders)?;
    let mut search = Search::new(
        instance,
        e2e,
        partial,
        &to_place,
        &budget.orders.node_order,
        &budget.deadline,
    )?;
    if search.run(replica_bound)? {
        Ok(assemble(instance, e2e, partial, &to_place, &search))
    } else {
        Err(SolveError::NoPlacement)
    }
}

/// Solve the placement problem by iterative deepening: run the depth-first
/// search with per-image replica bound r = 1, 2, ... up to the instance
/// cap and return the first total eligible placement, its cost and storage
/// allocation.
pub fn solve_ipp(
    instance: &ProblemInstance,
    e2e: &E2eTable,
    partial: &Placement,
    budget: &SearchBudget<'_>,
) -> Result<IppSolution, SolveError> {
    let to_place = images_to_place(instance, partial, &budget.orders)?;
    let mut search = Search::new(
        instance,
        e2e,
        partial,
        &to_place,
        &budget.orders.node_order,
        &budget.deadline,
    )?;
    for bound in 1..=instance.max_replicas() {
        if search.run(bound)? {
            let placement = assemble(instance, e2e, partial, &to_place, &search);
            let cost = cost(&placement, instance);
            let allocation = allocated_storage(&placement, instance);
            return Ok(IppSolution {
                placement,
                cost,
                replicas_used: bound,
                allocation,
            });
        }
    }
    Err(SolveError::NoPlacement)
}
