//! Incremental placement adaptation.
//!
//! When the infrastructure or the image set changes, the previous placement
//! is partitioned into images whose replica sets still satisfy every
//! eligibility condition (OK) and images that need attention (KO) — new
//! images land in KO. Adaptation then re-places only the KO images, keeping
//! OK replica sets frozen. The workflow alternates this fast path with the
//! exact solver: exact for the initial placement, heuristic adaptation at
//! runtime, exact again from scratch when adaptation fails.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::eligibility::{check_eligible, cost, Violation};
use crate::exact::{solve_oipp, ExactStatus, DEFAULT_EXACT_BUDGET_MS};
use crate::heuristic::{
    order_images, solve_ipp, SearchBudget, SearchOrders, SolveError,
    DEFAULT_HEURISTIC_BUDGET_MS,
};
use crate::model::{ImageId, NodeId, Placement, ProblemInstance, Provenance};
use crate::network::{derive_e2e, transfer_seconds, E2eTable};
use crate::time::{Clock, Deadline};

/// Result of partitioning the current placement against a changed instance.
#[derive(Debug, Clone)]
pub struct CrOutcome {
    /// The still-valid part: a partial placement, eligible over its images
    /// against the new instance.
    pub ok_placement: Placement,
    /// Images that need (re-)placement, in scan order. Includes images that
    /// are new in this instance.
    pub ko_images: Vec<ImageId>,
    /// The violations recorded for each KO image at the moment of its scan.
    pub reasons: BTreeMap<ImageId, Vec<Violation>>,
    /// Replicas dropped because their node vanished from the instance.
    pub replicas_lost: u32,
}

/// Partition the images of `instance` into OK and KO under `current`.
///
/// Images are scanned in descending-size order. Each image keeps its
/// current replicas restricted to surviving nodes and joins the OK side iff
/// the surviving set respects the replica cap, satisfies every node's
/// transfer budget, and fits into the storage left by the OK images
/// accumulated so far (new sizes, new capacities). The scan is greedy: the
/// OK set is maximal under this order, not globally maximum.
pub fn partition_ok_ko(
    current: &Placement,
    instance: &ProblemInstance,
    e2e: &E2eTable,
) -> CrOutcome {
    let scan_order = order_images(instance.images());
    let cap = instance.max_replicas();

    let mut ok_placement = Placement::new();
    let mut ko_images = Vec::new();
    let mut reasons: BTreeMap<ImageId, Vec<Violation>> = BTreeMap::new();
    let mut replicas_lost = 0u32;
    let mut used: BTreeMap<NodeId, f64> = BTreeMap::new();

    for image_id in &scan_order {
        let image = instance.image(image_id).expect("scan order from instance");
        let mut survivors: BTreeSet<NodeId> = BTreeSet::new();
        if let Some(previous) = current.replicas(image_id) {
            for node in previous {
                if instance.infrastructure.contains_node(node) {
                    survivors.insert(node.clone());
                } else {
                    replicas_lost += 1;
                }
            }
        }

        let mut violations = Vec::new();
        if survivors.len() > cap as usize {
            violations.push(Violation::ReplicaCapExceeded {
                image: image_id.clone(),
                replicas: survivors.len(),
                cap,
            });
        }
        for dst in instance.infrastructure.nodes() {
            let reachable = survivors.contains(&dst.id)
                || survivors.iter().any(|src| {
                    e2e.qos_between(src, &dst.id)
                        .map(|q| transfer_seconds(image.size_mb, q) <= image.max_transfer_s)
                        .unwrap_or(false)
                });
            if !reachable {
                violations.push(Violation::TransferUnsatisfied {
                    image: image_id.clone(),
                    node: dst.id.clone(),
                });
            }
        }
        for node in &survivors {
            let capacity = instance
                .infrastructure
                .node(node)
                .expect("survivor nodes exist")
                .storage_mb;
            let would_use = used.get(node).copied().unwrap_or(0.0) + image.size_mb;
            if would_use > capacity {
                violations.push(Violation::StorageExceeded {
                    node: node.clone(),
                    used_mb: would_use,
                    capacity_mb: capacity,
                });
            }
        }

        if violations.is_empty() {
            for node in &survivors {
                *used.entry(node.clone()).or_insert(0.0) += image.size_mb;
            }
            ok_placement.set_replicas(image_id.clone(), survivors, Provenance::Kept);
        } else {
            reasons.insert(image_id.clone(), violations);
            ko_images.push(image_id.clone());
        }
    }

    debug_assert!({
        let scope: Vec<ImageId> = ok_placement.images().cloned().collect();
        check_eligible(&ok_placement, instance, e2e, &scope).eligible()
    });

    CrOutcome {
        ok_placement,
        ko_images,
        reasons,
        replicas_lost,
    }
}

/// A successful adaptation step.
#[derive(Debug, Clone)]
pub struct CrSolution {
    pub placement: Placement,
    pub cost: f64,
    /// KO images whose replica set differs from their previous one (new
    /// images always count).
    pub migrated: BTreeSet<ImageId>,
    pub ko_images: Vec<ImageId>,
    pub replicas_lost: u32,
}

/// Adapt `current` to `instance`: keep the OK partition frozen and extend it
/// over the KO images with the heuristic solver.
///
/// Fails (without solving) when the partition marks *every* image KO — the
/// caller is expected to fall back to a solve from scratch — and fails when
/// the heuristic cannot extend the OK placement within the budget.
pub fn cr_placement(
    current: &Placement,
    instance: &ProblemInstance,
    e2e: &E2eTable,
    budget: &SearchBudget<'_>,
) -> Result<CrSolution, SolveError> {
    let outcome = partition_ok_ko(current, instance, e2e);
    if outcome.ko_images.len() == instance.images().len() && !instance.images().is_empty() {
        return Err(SolveError::NoPlacement);
    }

    let solution = solve_ipp(instance, e2e, &outcome.ok_placement, budget)?;

    let mut placement = solution.placement;
    let mut migrated = BTreeSet::new();
    for image_id in &outcome.ko_images {
        let new_set = placement.replicas(image_id).cloned().unwrap_or_default();
        match current.replicas(image_id) {
            Some(old) if *old == new_set => {
                // Re-placed onto exactly the old nodes: not a migration.
                placement.set_replicas(image_id.clone(), new_set, Provenance::Kept);
            }
            Some(_) => {
                placement.set_replicas(image_id.clone(), new_set.clone(), Provenance::Migrated);
                migrated.insert(image_id.clone());
            }
            None => {
                placement.set_replicas(image_id.clone(), new_set.clone(), Provenance::New);
                migrated.insert(image_id.clone());
            }
        }
    }

    let cost = cost(&placement, instance);
    Ok(CrSolution {
        placement,
        cost,
        migrated,
        ko_images: outcome.ko_images,
        replicas_lost: outcome.replicas_lost,
    })
}

/// Workflow phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// No placement enacted yet; the exact solver runs each epoch.
    Initial,
    /// A total eligible placement is enacted; adaptation runs each epoch.
    Steady,
    /// Both adaptation and the exact fallback failed; the exact solver is
    /// retried each epoch.
    Recovery,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::Steady => "steady",
            Phase::Recovery => "recovery",
        }
    }
}

/// Which solver produced an epoch's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    Heuristic,
    Exact,
}

impl SolverPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverPath::Heuristic => "heuristic",
            SolverPath::Exact => "exact",
        }
    }
}

/// Per-epoch budgets for the two solver paths, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepBudgets {
    pub heuristic_ms: u64,
    pub exact_ms: u64,
}

impl Default for StepBudgets {
    fn default() -> Self {
        StepBudgets {
            heuristic_ms: DEFAULT_HEURISTIC_BUDGET_MS,
            exact_ms: DEFAULT_EXACT_BUDGET_MS,
        }
    }
}

/// Metrics of one workflow step.
#[derive(Debug, Clone)]
pub struct EpochMetrics {
    pub epoch: u64,
    /// Phase the workflow is in after this step.
    pub phase: Phase,
    pub solver: SolverPath,
    pub placed: bool,
    pub elapsed_ms: u64,
    pub cost: Option<f64>,
    pub ko_count: u32,
    pub migrations: u32,
    pub replicas_lost: u32,
}

/// State carried across workflow steps.
#[derive(Debug, Clone)]
pub struct WorkflowState {
    pub phase: Phase,
    pub current: Option<Placement>,
    pub epoch: u64,
    pub last: Option<EpochMetrics>,
}

impl WorkflowState {
    pub fn new() -> Self {
        WorkflowState {
            phase: Phase::Initial,
            current: None,
            epoch: 0,
            last: None,
        }
    }
}

impl Default for WorkflowState {
    fn default() -> Self {
        WorkflowState::new()
    }
}

/// Run one epoch of the adaptive workflow against (a possibly changed)
/// `instance`.
///
/// * initial/recovery — solve from scratch with the exact solver; success
///   moves to steady.
/// * steady — adapt the current placement; when adaptation fails or times
///   out, fall back to an exact solve from scratch (no warm start); if that
///   also fails, enter recovery.
///
/// The end-to-end table is re-derived from the instance every epoch.
pub fn workflow_step(
    state: &mut WorkflowState,
    instance: &ProblemInstance,
    budgets: &StepBudgets,
    clock: &dyn Clock,
) -> EpochMetrics {
    state.epoch += 1;
    let e2e = derive_e2e(&instance.infrastructure);
    let started = clock.now_millis();

    let metrics = match (state.phase, state.current.clone()) {
        (Phase::Steady, Some(current)) => {
            let budget = SearchBudget::new(
                Deadline::after(clock, budgets.heuristic_ms),
                SearchOrders::standard(instance, &e2e),
            );
            match cr_placement(&current, instance, &e2e, &budget) {
                Ok(solution) => {
                    state.current = Some(solution.placement.clone());
                    state.phase = Phase::Steady;
                    EpochMetrics {
                        epoch: state.epoch,
                        phase: Phase::Steady,
                        solver: SolverPath::Heuristic,
                        placed: true,
                        elapsed_ms: clock.now_millis().saturating_sub(started),
                        cost: Some(solution.cost),
                        ko_count: solution.ko_images.len() as u32,
                        migrations: solution.migrated.len() as u32,
                        replicas_lost: solution.replicas_lost,
                    }
                }
                Err(_) => {
                    // Keep the partition's accounting for the log, then
                    // re-solve from scratch.
                    let outcome = partition_ok_ko(&current, instance, &e2e);
                    exact_step(
                        state,
                        instance,
                        &e2e,
                        budgets,
                        clock,
                        started,
                        outcome.ko_images.len() as u32,
                        &outcome,
                        Some(&current),
                    )
                }
            }
        }
        _ => {
            let empty = CrOutcome {
                ok_placement: Placement::new(),
                ko_images: Vec::new(),
                reasons: BTreeMap::new(),
                replicas_lost: 0,
            };
            exact_step(
                state, instance, &e2e, budgets, clock, started, 0, &empty, None,
            )
        }
    };

    state.last = Some(metrics.clone());
    metrics
}

#[allow(clippy::too_many_arguments)]
fn exact_step(
    state: &mut WorkflowState,
    instance: &ProblemInstance,
    e2e: &E2eTable,
    budgets: &StepBudgets,
    clock: &dyn Clock,
    started: u64,
    ko_count: u32,
    outcome: &CrOutcome,
    previous: Option<&Placement>,
) -> EpochMetrics {
    let deadline = Deadline::after(clock, budgets.exact_ms);
    let result = solve_oipp(instance, e2e, &deadline);
    let placed = matches!(
        result.status,
        ExactStatus::Optimal | ExactStatus::TimeoutWithIncumbent
    );
    let (phase, cost, migrations) = if placed {
        let placement = result.placement.expect("placed implies placement");
        // Migrations keep the partition-based meaning: KO images whose
        // replica set changed. A from-scratch solve may move OK images too;
        // those are not counted here.
        let migrations = outcome
            .ko_images
            .iter()
            .filter(|id| {
                previous.and_then(|p| p.replicas(id)) != placement.replicas(id)
                    || previous.is_none_or(|p| !p.contains_image(id))
            })
            .count() as u32;
        state.current = Some(placement);
        state.phase = Phase::Steady;
        (Phase::Steady, result.cost, migrations)
    } else {
        state.current = None;
        state.phase = match state.phase {
            Phase::Initial => Phase::Initial,
            _ => Phase::Recovery,
        };
        (state.phase, None, 0)
    };
    EpochMetrics {
        epoch: state.epoch,
        phase,
        solver: SolverPath::Exact,
        placed,
        elapsed_ms: clock.now_millis().saturating_sub(started),
        cost,
        ko_count,
        migrations,
        replicas_lost: outcome.replicas_lost,
    }
}
