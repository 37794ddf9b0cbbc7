//! Cost-optimal placement via branch-and-bound.
//!
//! The search assigns one replica set per image, images in descending-size
//! order. Per image, candidate sets are enumerated lazily in increasing
//! marginal-cost order over the nodes the image currently fits on, so the
//! first dive is greedy-cheap and enumeration can stop as soon as the
//! optimistic completion exceeds the incumbent. The bound charges every
//! unplaced image its size times the cheapest node it still fits on, which
//! never overestimates the cost of an eligible completion.
//!
//! Equal-cost optima (within [`COST_TOLERANCE`]) are resolved to the
//! lexicographically smallest serialized placement, so results are
//! deterministic.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::cover::CoverMasks;
use crate::eligibility::{check_eligible, cost, COST_TOLERANCE};
use crate::model::{ImageId, NodeId, Placement, ProblemInstance, Provenance};
use crate::network::E2eTable;
use crate::time::Deadline;

/// Default exact search budget in milliseconds.
pub const DEFAULT_EXACT_BUDGET_MS: u64 = 25_000;

/// How an exact solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    /// The returned placement is provably cost-minimal.
    Optimal,
    /// No eligible placement exists (proved).
    Infeasible,
    /// Budget expired; the best placement found so far is returned.
    TimeoutWithIncumbent,
    /// Budget expired before any placement was found.
    TimeoutNoIncumbent,
}

/// Result of a branch-and-bound run.
#[derive(Debug, Clone)]
pub struct ExactResult {
    pub status: ExactStatus,
    pub placement: Option<Placement>,
    pub cost: Option<f64>,
    /// Gap between the returned cost and the best known lower bound at exit;
    /// zero when the result is proven optimal or infeasible, infinite when
    /// the run timed out without an incumbent.
    pub proof_gap: f64,
}

/// Admissible completion bound: the cost of `partial` plus, for every
/// remaining image, its size times the minimum unit cost among nodes whose
/// remaining capacity (under `partial`) still fits the image. Infinite when
/// some remaining image fits nowhere.
pub fn lower_bound(
    partial: &Placement,
    remaining: &[ImageId],
    instance: &ProblemInstance,
) -> f64 {
    let mut used: alloc::collections::BTreeMap<&NodeId, f64> = Default::default();
    for (image_id, nodes) in partial.iter() {
        let Some(image) = instance.image(image_id) else {
            continue;
        };
        for node in nodes {
            *used.entry(node).or_insert(0.0) += image.size_mb;
        }
    }
    let mut bound = cost(partial, instance);
    for image_id in remaining {
        let Some(image) = instance.image(image_id) else {
            continue;
        };
        let mut cheapest = f64::INFINITY;
        for node in instance.infrastructure.nodes() {
            let remaining_mb = node.storage_mb - used.get(&node.id).copied().unwrap_or(0.0);
            if remaining_mb >= image.size_mb && node.unit_cost < cheapest {
                cheapest = node.unit_cost;
            }
        }
        if cheapest.is_infinite() {
            return f64::INFINITY;
        }
        bound += image.size_mb * cheapest;
    }
    bound
}

/// A candidate replica set in the lazy enumeration: positions into the
/// cost-sorted candidate node list, ordered by total unit cost then
/// lexicographically.
#[derive(Debug, Clone, PartialEq)]
struct SubsetEntry {
    cost_sum: f64,
    positions: Vec<usize>,
}

impl Eq for SubsetEntry {}

impl PartialOrd for SubsetEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SubsetEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost_sum
            .total_cmp(&other.cost_sum)
            .then_with(|| self.positions.cmp(&other.positions))
    }
}

/// Lazy enumeration of the nonempty subsets of a cost-sorted candidate list
/// in nondecreasing cost-sum order. Subsets larger than `max_size` are not
/// produced.
struct SubsetStream<'a> {
    costs: &'a [f64],
    max_size: usize,
    heap: BinaryHeap<Reverse<SubsetEntry>>,
}

impl<'a> SubsetStream<'a> {
    fn new(costs: &'a [f64], max_size: usize) -> Self {
        let mut heap = BinaryHeap::new();
        if !costs.is_empty() && max_size > 0 {
            heap.push(Reverse(SubsetEntry {
                cost_sum: costs[0],
                positions: alloc::vec![0],
            }));
        }
        SubsetStream {
            costs,
            max_size,
            heap,
        }
    }

    fn next(&mut self) -> Option<SubsetEntry> {
        let Reverse(entry) = self.heap.pop()?;
        let &last = entry.positions.last().expect("entries are nonempty");
        if last + 1 < self.costs.len() {
            // Append the next candidate (grows the subset).
            if entry.positions.len() < self.max_size {
                let mut grown = entry.positions.clone();
                grown.push(last + 1);
                self.heap.push(Reverse(SubsetEntry {
                    cost_sum: entry.cost_sum + self.costs[last + 1],
                    positions: grown,
                }));
            }
            // Shift the last candidate (same size).
            let mut shifted = entry.positions.clone();
            *shifted.last_mut().unwrap() = last + 1;
            self.heap.push(Reverse(SubsetEntry {
                cost_sum: entry.cost_sum - self.costs[last] + self.costs[last + 1],
                positions: shifted,
            }));
        }
        Some(entry)
    }
}

struct Bnb<'a, 'b> {
    instance: &'a ProblemInstance,
    e2e: &'a E2eTable,
    deadline: &'a Deadline<'b>,
    /// Images to place, descending size, as instance-image indices.
    image_order: Vec<usize>,
    sizes: Vec<f64>,
    /// Static candidate hosts per placed image: e2e indices sorted by
    /// (unit cost, id), restricted to nodes the image fits on when empty.
    candidates: Vec<Vec<usize>>,
    node_cost: Vec<f64>,
    node_cap: Vec<f64>,
    used: Vec<f64>,
    covers: CoverMasks,
    chosen: Vec<Vec<usize>>,
    incumbent: Option<(Placement, f64)>,
    timed_out: bool,
}

impl<'a, 'b> Bnb<'a, 'b> {
    fn new(instance: &'a ProblemInstance, e2e: &'a E2eTable, deadline: &'a Deadline<'b>) -> Self {
        let n = e2e.node_count();
        let mut node_cost = alloc::vec![0.0; n];
        let mut node_cap = alloc::vec![0.0; n];
        for node in instance.infrastructure.nodes() {
            let idx = e2e.index_of(&node.id).expect("table derived from instance");
            node_cost[idx] = node.unit_cost;
            node_cap[idx] = node.storage_mb;
        }

        let mut image_order: Vec<usize> = (0..instance.images().len()).collect();
        image_order.sort_by(|&a, &b| {
            let ia = &instance.images()[a];
            let ib = &instance.images()[b];
            ib.size_mb
                .total_cmp(&ia.size_mb)
                .then_with(|| ia.id.cmp(&ib.id))
        });

        let profiles: Vec<(f64, f64)> = image_order
            .iter()
            .map(|&i| {
                let img = &instance.images()[i];
                (img.size_mb, img.max_transfer_s)
            })
            .collect();
        let covers = CoverMasks::build(&profiles, e2e);
        let sizes: Vec<f64> = profiles.iter().map(|p| p.0).collect();

        // Nodes that cannot even store the image alone can never host it.
        let candidates: Vec<Vec<usize>> = sizes
            .iter()
            .map(|&size| {
                let mut hosts: Vec<usize> =
                    (0..n).filter(|&idx| node_cap[idx] >= size).collect();
                hosts.sort_by(|&a, &b| {
                    node_cost[a]
                        .total_cmp(&node_cost[b])
                        .then_with(|| e2e.id_at(a).cmp(e2e.id_at(b)))
                });
                hosts
            })
            .collect();

        let placed = image_order.len();
        Bnb {
            instance,
            e2e,
            deadline,
            image_order,
            sizes,
            candidates,
            node_cost,
            node_cap,
            used: alloc::vec![0.0; n],
            covers,
            chosen: alloc::vec![Vec::new(); placed],
            incumbent: None,
            timed_out: false,
        }
    }

    /// Some image cannot cover every node even with all its candidates:
    /// the instance is infeasible regardless of the other images.
    fn provably_infeasible(&self) -> bool {
        for (k, hosts) in self.candidates.iter().enumerate() {
            if !self.covers.set_covers(k, hosts) {
                return true;
            }
        }
        false
    }

    /// Cheapest completion of images `from..`, given current node usage.
    fn rest_bound(&self, from: usize) -> f64 {
        let mut bound = 0.0;
        for k in from..self.sizes.len() {
            let size = self.sizes[k];
            let mut cheapest = f64::INFINITY;
            for &host in &self.candidates[k] {
                if self.node_cap[host] - self.used[host] >= size
                    && self.node_cost[host] < cheapest
                {
                    cheapest = self.node_cost[host];
                }
            }
            if cheapest.is_infinite() {
                return f64::INFINITY;
            }
            bound += size * cheapest;
        }
        bound
    }

    fn assemble(&self) -> Placement {
        let mut placement = Placement::new();
        for (k, &image_idx) in self.image_order.iter().enumerate() {
            let image = &self.instance.images()[image_idx];
            let nodes: BTreeSet<NodeId> = self.chosen[k]
                .iter()
                .map(|&idx| self.e2e.id_at(idx).clone())
                .collect();
            placement.set_replicas(image.id.clone(), nodes, Provenance::New);
        }
        placement
    }

    fn offer_leaf(&mut self) {
        let placement = self.assemble();
        let leaf_cost = cost(&placement, self.instance);
        debug_assert!({
            let scope: Vec<ImageId> =
                self.instance.images().iter().map(|i| i.id.clone()).collect();
            check_eligible(&placement, self.instance, self.e2e, &scope).eligible()
        });
        match &self.incumbent {
            None => self.incumbent = Some((placement, leaf_cost)),
            Some((best, best_cost)) => {
                if leaf_cost < best_cost - COST_TOLERANCE {
                    self.incumbent = Some((placement, leaf_cost));
                } else if (leaf_cost - best_cost).abs() <= COST_TOLERANCE
                    && placement.canonical_cmp(best) == Ordering::Less
                {
                    self.incumbent = Some((placement, leaf_cost));
                }
            }
        }
    }

    fn search(&mut self, k: usize, cost_so_far: f64) {
        if self.deadline.expired() {
            self.timed_out = true;
            return;
        }
        if k == self.sizes.len() {
            self.offer_leaf();
            return;
        }

        // Bound on the images after this one, with the current allocation;
        // constant while this image's subsets are enumerated, so the stream
        // can stop as soon as the optimistic total exceeds the incumbent.
        let rest = self.rest_bound(k + 1);
        if rest.is_infinite() {
            return;
        }

        let size = self.sizes[k];
        let fitting: Vec<usize> = self.candidates[k]
            .iter()
            .copied()
            .filter(|&host| self.node_cap[host] - self.used[host] >= size)
            .collect();
        if fitting.is_empty() {
            return;
        }
        let costs: Vec<f64> = fitting.iter().map(|&h| self.node_cost[h]).collect();
        let max_size = (self.instance.max_replicas() as usize).min(fitting.len());
        let mut stream = SubsetStream::new(&costs, max_size);

        while let Some(entry) = stream.next() {
            if self.deadline.expired() {
                self.timed_out = true;
                return;
            }
            let marginal = size * entry.cost_sum;
            if let Some((_, best_cost)) = &self.incumbent {
                if cost_so_far + marginal + rest > best_cost + COST_TOLERANCE {
                    // Later subsets only cost more.
                    return;
                }
            }

            let hosts: Vec<usize> = entry.positions.iter().map(|&p| fitting[p]).collect();
            if !self.covers.set_covers(k, &hosts) {
                continue;
            }

            for &host in &hosts {
                self.used[host] += size;
            }
            self.chosen[k] = hosts.clone();
            self.search(k + 1, cost_so_far + marginal);
            self.chosen[k].clear();
            for &host in &hosts {
                self.used[host] -= size;
            }
            if self.timed_out {
                return;
            }
        }
    }
}

/// Solve the cost-optimal placement problem to proven optimality (or until
/// the deadline expires, returning the best incumbent).
pub fn solve_oipp(
    instance: &ProblemInstance,
    e2e: &E2eTable,
    deadline: &Deadline<'_>,
) -> ExactResult {
    let mut bnb = Bnb::new(instance, e2e, deadline);

    if bnb.provably_infeasible() {
        return ExactResult {
            status: ExactStatus::Infeasible,
            placement: None,
            cost: None,
            proof_gap: 0.0,
        };
    }

    bnb.search(0, 0.0);

    let timed_out = bnb.timed_out;
    match bnb.incumbent {
        Some((placement, best_cost)) => {
            let (status, proof_gap) = if timed_out {
                let remaining: Vec<ImageId> =
                    instance.images().iter().map(|i| i.id.clone()).collect();
                let root = lower_bound(&Placement::new(), &remaining, instance);
                (
                    ExactStatus::TimeoutWithIncumbent,
                    (best_cost - root).max(0.0),
                )
            } else {
                (ExactStatus::Optimal, 0.0)
            };
            ExactResult {
                status,
                placement: Some(placement),
                cost: Some(best_cost),
                proof_gap,
            }
        }
        None => {
            if timed_out {
                ExactResult {
                    status: ExactStatus::TimeoutNoIncumbent,
                    placement: None,
                    cost: None,
                    proof_gap: f64::INFINITY,
                }
            } else {
                ExactResult {
                    status: ExactStatus::Infeasible,
                    placement: None,
                    cost: None,
                    proof_gap: 0.0,
                }
            }
        }
    }
}
