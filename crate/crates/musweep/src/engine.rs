//! The two sweep algorithms over a frequency grid: per-frequency branch and
//! bound that tightens `mu` at every grid point independently, and the
//! shared-incumbent sweep that advances all frequency groups in lockstep,
//! pruning any box whose upper bound cannot beat the relaxed incumbent
//! `mu_hat / (1 - eps)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundContext, BoundOptions, EvaluatedBox};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::plant::StateSpaceModel;
use crate::uncertainty::{UncertaintyBox, MIN_EDGE_WIDTH};

/// Uniform grid of `N * K` frequencies over `[a, b]`, with the relabeled
/// view `omega_{i,j} = points[K (i-1) + (j-1)]` that groups the sweep into
/// `N` interleaved branches advanced `K` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    a: f64,
    b: f64,
    n: usize,
    k: usize,
    points: Vec<f64>,
}

impl FrequencyGrid {
    /// `NK` uniformly spaced points inclusive of both endpoints.
    pub fn new(a: f64, b: f64, n: usize, k: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || b <= a {
            return Err(Error::InvalidInput(format!(
                "need finite b > a, got a = {a}, b = {b}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("N must be >= 2, got {n}")));
        }
        if k < 1 {
            return Err(Error::InvalidInput(format!("K must be >= 1, got {k}")));
        }
        let total = n * k;
        if total < 2 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 2 points, got N*K = {total}"
            )));
        }
        let span = b - a;
        let mut points: Vec<f64> = (0..total)
            .map(|idx| a + span * idx as f64 / (total - 1) as f64)
            .collect();
        // Pin the endpoints bit-exactly.
        points[0] = a;
        points[total - 1] = b;
        Ok(Self { a, b, n, k, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of interleaved branches `N`.
    pub fn group_count(&self) -> usize {
        self.n
    }

    /// Rounds per branch `K`.
    pub fn group_len(&self) -> usize {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Grid spacing between adjacent points.
    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.len() - 1) as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, flat: usize) -> f64 {
        self.points[flat]
    }

    /// Flat index of the relabeled frequency, `i` in `1..=N`, `j` in `1..=K`.
    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        assert!(i >= 1 && i <= self.n && j >= 1 && j <= self.k);
        self.k * (i - 1) + (j - 1)
    }

    /// The relabeled frequency `omega_{i,j}`.
    pub fn relabeled(&self, i: usize, j: usize) -> f64 {
        self.points[self.flat_index(i, j)]
    }
}

/// How the shared-incumbent sweep executes one round of bound evaluations.
///
/// Both modes produce bit-identical results: the concurrent mode evaluates
/// the per-branch child bounds of a round in parallel, but every evaluation
/// is a pure function of the box and the round-start incumbent snapshot,
/// and all incumbent updates and prune decisions are merged in branch order
/// at the round barrier, exactly as the sequential mode does them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionMode {
    #[default]
    Sequential,
    RoundConcurrent,
}

/// Counters accumulated over one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub boxes_created: u64,
    pub boxes_pruned: u64,
    pub partitions: u64,
    pub lb_evaluations: u64,
    pub ub_evaluations: u64,
    /// Upper-bound evaluations settled by the coarse bound alone because it
    /// already fell below the prune threshold.
    pub early_exits: u64,
    /// Lower-bound evaluations stopped early or run shallow because the box
    /// could not improve the incumbent.
    pub lb_short_circuits: u64,
    /// Boxes dropped at insertion because their upper bound was exactly
    /// zero: no positive real eigenvalue can hide in them, and with a zero
    /// incumbent the strict prune test would never fire.
    pub zero_ub_discards: u64,
    /// Boxes retired because every edge was already at the minimum width;
    /// partitioning them further cannot separate the bounds numerically.
    pub stalled_boxes: u64,
}

impl RunMetrics {
    fn absorb_eval(&mut self, eval: &EvaluatedBox) {
        self.ub_evaluations += 1;
        self.lb_evaluations += 1;
        if eval.ub_early_exit {
            self.early_exits += 1;
        }
        if eval.lb_short_circuit {
            self.lb_short_circuits += 1;
        }
    }

    pub fn bound_evaluations(&self) -> u64 {
        self.lb_evaluations + self.ub_evaluations
    }
}

/// Outcome of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Maximum record of all lower bounds: the `mu_max` estimate.
    pub mu_hat: f64,
    /// Grid frequency at which `mu_hat` was recorded.
    pub peak_omega: f64,
    /// Relabeled `(i, j)` index of the peak frequency, both 1-based.
    pub peak_index: (usize, usize),
    /// Rounds recorded per branch step `j` (shared-incumbent sweep only).
    pub r: Vec<usize>,
    pub converged: bool,
    pub metrics: RunMetrics,
}

/// One box in a working list, with its cached bounds.
#[derive(Debug, Clone)]
pub struct BoxRecord {
    pub region: UncertaintyBox,
    pub ub: f64,
    pub lb: f64,
    /// Relabeled frequency index this record belongs to.
    pub freq_index: (usize, usize),
    seq: u64,
}

/// Final per-frequency bracket from the conventional sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBounds {
    pub omega: f64,
    pub ub: f64,
    pub lb: f64,
    pub partitions: u64,
    pub converged: bool,
}

/// Conventional sweep outcome: the per-frequency brackets plus the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionalRun {
    pub per_frequency: Vec<FrequencyBounds>,
    pub result: SweepResult,
}

/// Root-box bounds per frequency, the data behind the bound-versus-
/// frequency tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootBounds {
    pub omega: f64,
    pub ub: f64,
    pub lb: f64,
}

/// Side-by-side run of both algorithms on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub parallel: SweepResult,
    pub conventional: ConventionalRun,
    /// Boxes created by the shared-incumbent sweep over boxes created by
    /// the conventional sweep.
    pub box_ratio: f64,
    /// Same ratio for total bound evaluations.
    pub bound_eval_ratio: f64,
}

fn prune_threshold(incumbent: f64, eps_rel: f64) -> f64 {
    incumbent / (1.0 - eps_rel)
}

/// Tracks the incumbent `mu_hat` and where it was last raised.
struct Incumbent {
    value: f64,
    peak_omega: f64,
    peak_index: (usize, usize),
}

impl Incumbent {
    /// Strict improvement keeps the earliest witness on ties and makes
    /// `mu_hat` nondecreasing by construction.
    fn offer(&mut self, lb: f64, omega: f64, index: (usize, usize)) {
        if lb > self.value {
            self.value = lb;
            self.peak_omega = omega;
            self.peak_index = index;
        }
    }
}

/// Shared-incumbent sweep: branch and bound for `N` frequencies in
/// lockstep, `K` times, against one global incumbent.
///
/// For each `j = 1..=K`, every branch `i` starts from the full uncertainty
/// box at its frequency `omega_{i,j}`. Each round, every branch with a
/// non-empty list bisects its highest-upper-bound box along the longest
/// edge, the incumbent absorbs the children's lower bounds, and every box
/// in that branch with `UB < mu_hat / (1 - eps_rel)` is removed. Rounds end
/// when the counter reaches `it + 1` or all lists are empty; the counter is
/// recorded as `r(j)`.
///
/// When the run converges (every `r(j) <= it`), the final `mu_hat`
/// satisfies `0 <= (mu_grid_max - mu_hat) / mu_grid_max < eps_rel` against
/// the exact grid maximum.
pub fn run_parallel(
    model: &StateSpaceModel,
    grid: &FrequencyGrid,
    eps_rel: f64,
    it: usize,
    mode: ExecutionMode,
    opts: &BoundOptions,
) -> Result<SweepResult> {
    if !(eps_rel > 0.0 && eps_rel < 1.0) {
        return Err(Error::InvalidInput(format!(
            "eps_rel must lie in (0, 1), got {eps_rel}"
        )));
    }
    if it < 1 {
        return Err(Error::InvalidInput("IT must be >= 1".into()));
    }

    let n_branches = grid.group_count();
    let mut metrics = RunMetrics::default();
    let mut incumbent = Incumbent {
        value: 0.0,
        peak_omega: grid.relabeled(1, 1),
        peak_index: (1, 1),
    };
    let mut r_counts = Vec::with_capacity(grid.group_len());
    let mut seq = 0u64;

    for j in 1..=grid.group_len() {
        let mats: Vec<ComplexMatrix> = (1..=n_branches)
            .map(|i| model.freq_response(grid.relabeled(i, j)))
            .collect::<Result<_>>()?;
        let contexts: Vec<BoundContext> = mats
            .iter()
            .map(|m| BoundContext::new(m, opts))
            .collect::<Result<_>>()?;

        // Initialize every branch with the full box, evaluated against the
        // incumbent as it stands before this group.
        let snapshot = prune_threshold(incumbent.value, eps_rel);
        let mu_snapshot = incumbent.value;
        let root = UncertaintyBox::unit(model.n())?;
        let root_work: Vec<(usize, UncertaintyBox)> =
            (0..n_branches).map(|b| (b, root.clone())).collect();
        let root_evals = evaluate_batch(mode, &contexts, root_work, snapshot, mu_snapshot)?;

        let mut lists: Vec<Vec<BoxRecord>> = vec![Vec::new(); n_branches];
        for (branch, eval) in root_evals {
            let i = branch + 1;
            metrics.absorb_eval(&eval);
            metrics.boxes_created += 1;
            incumbent.offer(eval.pair.lb, grid.relabeled(i, j), (i, j));
            if eval.pair.ub > 0.0 {
                seq += 1;
                lists[branch].push(BoxRecord {
                    region: root.clone(),
                    ub: eval.pair.ub,
                    lb: eval.pair.lb,
                    freq_index: (i, j),
                    seq,
                });
            } else {
                metrics.zero_ub_discards += 1;
            }
        }

        let mut round = 1usize;
        loop {
            if round == it + 1 || lists.iter().all(Vec::is_empty) {
                r_counts.push(round);
                break;
            }

            // Round-start snapshot: every bound evaluation this round sees
            // the same threshold, which is what makes the concurrent mode
            // bit-identical to the sequential one.
            let snapshot = prune_threshold(incumbent.value, eps_rel);
            let mu_snapshot = incumbent.value;

            let mut tasks: Vec<(usize, UncertaintyBox, UncertaintyBox)> = Vec::new();
            for (branch, list) in lists.iter_mut().enumerate() {
                if list.is_empty() {
                    continue;
                }
                let sel = select_max_ub(list);
                let record = list.swap_remove(sel);
                if record.region.max_edge_width() < MIN_EDGE_WIDTH {
                    metrics.stalled_boxes += 1;
                    continue;
                }
                let (qa, qb) = record.region.bisect_longest_edge()?;
                tasks.push((branch, qa, qb));
            }

            let mut flat: Vec<(usize, UncertaintyBox)> = Vec::with_capacity(tasks.len() * 2);
            for (branch, qa, qb) in &tasks {
                flat.push((*branch, qa.clone()));
                flat.push((*branch, qb.clone()));
            }
            let child_evals = evaluate_batch(mode, &contexts, flat, snapshot, mu_snapshot)?;

            // Merge in branch order: absorb the children's lower bounds into
            // the incumbent, insert the children, then prune that branch's
            // list against the incumbent as it stands right now.
            for (task_idx, (branch, qa, qb)) in tasks.into_iter().enumerate() {
                let omega = grid.relabeled(branch + 1, j);
                let index = (branch + 1, j);
                metrics.partitions += 1;
                for (child_slot, region) in [(2 * task_idx, qa), (2 * task_idx + 1, qb)] {
                    let (eval_branch, eval) = &child_evals[child_slot];
                    debug_assert_eq!(*eval_branch, branch);
                    metrics.absorb_eval(eval);
                    metrics.boxes_created += 1;
                    let before = incumbent.value;
                    incumbent.offer(eval.pair.lb, omega, index);
                    debug_assert!(incumbent.value >= before);
                    if eval.pair.ub > 0.0 {
                        seq += 1;
                        lists[branch].push(BoxRecord {
                            region,
                            ub: eval.pair.ub,
                            lb: eval.pair.lb,
                            freq_index: index,
                            seq,
                        });
                    } else {
                        metrics.zero_ub_discards += 1;
                    }
                }
                let threshold = prune_threshold(incumbent.value, eps_rel);
                let before = lists[branch].len();
                lists[branch].retain(|rec| rec.ub >= threshold);
                metrics.boxes_pruned += (before - lists[branch].len()) as u64;
            }
            round += 1;
        }
    }

    let converged = r_counts.iter().all(|&rj| rj <= it);
    Ok(SweepResult {
        mu_hat: incumbent.value,
        peak_omega: incumbent.peak_omega,
        peak_index: incumbent.peak_index,
        r: r_counts,
        converged,
        metrics,
    })
}

/// Evaluates `(branch, box)` pairs, sequentially or in parallel depending
/// on the mode; results come back in input order either way and every
/// evaluation sees the same threshold and incumbent snapshot.
fn evaluate_batch(
    mode: ExecutionMode,
    contexts: &[BoundContext],
    work: Vec<(usize, UncertaintyBox)>,
    threshold: f64,
    incumbent: f64,
) -> Result<Vec<(usize, EvaluatedBox)>> {
    let threshold_opt = (threshold > 0.0).then_some(threshold);
    let incumbent_opt = (incumbent > 0.0).then_some(incumbent);
    match mode {
        ExecutionMode::Sequential => work
            .into_iter()
            .map(|(branch, q)| {
                let eval = contexts[branch].evaluate(&q, threshold_opt, incumbent_opt)?;
                Ok((branch, eval))
            })
            .collect(),
        ExecutionMode::RoundConcurrent => work
            .into_par_iter()
            .map(|(branch, q)| {
                let eval = contexts[branch].evaluate(&q, threshold_opt, incumbent_opt)?;
                Ok((branch, eval))
            })
            .collect(),
    }
}

/// Highest upper bound first; earliest insertion wins ties.
fn select_max_ub(list: &[BoxRecord]) -> usize {
    let mut best = 0usize;
    for idx in 1..list.len() {
        let cand = &list[idx];
        let cur = &list[best];
        if cand.ub > cur.ub || (cand.ub == cur.ub && cand.seq < cur.seq) {
            best = idx;
        }
    }
    best
}

/// Heap entry for the conventional per-frequency search.
struct ConvEntry {
    record: BoxRecord,
}

impl PartialEq for ConvEntry {
    fn eq(&self, other: &Self) -> bool {
        self.record.ub == other.record.ub && self.record.seq == other.record.seq
    }
}

impl Eq for ConvEntry {}

impl PartialOrd for ConvEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ConvEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.record
            .ub
            .total_cmp(&other.record.ub)
            .then_with(|| other.record.seq.cmp(&self.record.seq))
    }
}

/// Conventional sweep: for every grid frequency independently, best-first
/// branch and bound from the full box until `UB - LB <= eps_abs` (or the
/// box budget runs out, which flags the run as non-converged).
///
/// Per frequency, the box with the highest upper bound is bisected along
/// its longest edge, the children's bounds are cached, the running lower
/// bound absorbs every lower bound seen, and boxes whose upper bound falls
/// below the running lower bound are discarded when they surface.
pub fn run_conventional(
    model: &StateSpaceModel,
    grid: &FrequencyGrid,
    eps_abs: f64,
    max_boxes: usize,
    opts: &BoundOptions,
) -> Result<ConventionalRun> {
    if eps_abs <= 0.0 || eps_abs.is_nan() {
        return Err(Error::InvalidInput(format!(
            "eps_abs must be positive, got {eps_abs}"
        )));
    }
    if max_boxes < 1 {
        return Err(Error::InvalidInput("max_boxes must be >= 1".into()));
    }

    let mut metrics = RunMetrics::default();
    let mut per_frequency = Vec::with_capacity(grid.len());
    let root = UncertaintyBox::unit(model.n())?;
    let mut seq = 0u64;

    for flat in 0..grid.len() {
        let omega = grid.point(flat);
        let m = model.freq_response(omega)?;
        let ctx = BoundContext::new(&m, opts)?;
        let index = (flat / grid.group_len() + 1, flat % grid.group_len() + 1);

        let root_eval = ctx.evaluate(&root, None, None)?;
        metrics.absorb_eval(&root_eval);
        metrics.boxes_created += 1;
        let mut lb_j = root_eval.pair.lb;
        let mut heap = BinaryHeap::new();
        seq += 1;
        heap.push(ConvEntry {
            record: BoxRecord {
                region: root.clone(),
                ub: root_eval.pair.ub,
                lb: root_eval.pair.lb,
                freq_index: index,
                seq,
            },
        });

        let mut boxes_here = 1usize;
        let mut partitions_here = 0u64;
        let (ub_j, converged_j) = loop {
            // Lazily apply the prune rule: anything surfacing below the
            // running lower bound is discarded unpartitioned.
            while let Some(top) = heap.peek() {
                if top.record.ub < lb_j {
                    heap.pop();
                    metrics.boxes_pruned += 1;
                } else {
                    break;
                }
            }
            let ub_j = heap.peek().map_or(lb_j, |top| top.record.ub);
            if ub_j - lb_j <= eps_abs {
                break (ub_j, true);
            }
            if boxes_here >= max_boxes {
                break (ub_j, false);
            }
            let top = heap.pop().expect("heap non-empty while gap above eps_abs");
            if top.record.region.max_edge_width() < MIN_EDGE_WIDTH {
                metrics.stalled_boxes += 1;
                continue;
            }
            let (qa, qb) = top.record.region.bisect_longest_edge()?;
            partitions_here += 1;
            for region in [qa, qb] {
                let eval = ctx.evaluate(&region, None, Some(lb_j))?;
                metrics.absorb_eval(&eval);
                metrics.boxes_created += 1;
                boxes_here += 1;
                lb_j = lb_j.max(eval.pair.lb);
                seq += 1;
                heap.push(ConvEntry {
                    record: BoxRecord {
                        region,
                        ub: eval.pair.ub,
                        lb: eval.pair.lb,
                        freq_index: index,
                        seq,
                    },
                });
            }
        };
        metrics.partitions += partitions_here;
        per_frequency.push(FrequencyBounds {
            omega,
            ub: ub_j,
            lb: lb_j,
            partitions: partitions_here,
            converged: converged_j,
        });
    }

    let mut peak_flat = 0usize;
    for (flat, fb) in per_frequency.iter().enumerate() {
        if fb.lb > per_frequency[peak_flat].lb {
            peak_flat = flat;
        }
    }
    let peak = &per_frequency[peak_flat];
    let converged = per_frequency.iter().all(|fb| fb.converged);
    let result = SweepResult {
        mu_hat: peak.lb,
        peak_omega: peak.omega,
        peak_index: (
            peak_flat / grid.group_len() + 1,
            peak_flat % grid.group_len() + 1,
        ),
        r: Vec::new(),
        converged,
        metrics,
    };
    Ok(ConventionalRun {
        per_frequency,
        result,
    })
}

/// Bounds of the full uncertainty box at every grid frequency, the data
/// behind the bound-versus-frequency plots.
pub fn root_bounds_sweep(
    model: &StateSpaceModel,
    grid: &FrequencyGrid,
    opts: &BoundOptions,
) -> Result<Vec<RootBounds>> {
    let root = UncertaintyBox::unit(model.n())?;
    let mut out = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let omega = grid.point(flat);
        let m = model.freq_response(omega)?;
        let ctx = BoundContext::new(&m, opts)?;
        let eval = ctx.evaluate(&root, None, None)?;
        out.push(RootBounds {
            omega,
            ub: eval.pair.ub,
            lb: eval.pair.lb,
        });
    }
    Ok(out)
}

/// Runs both algorithms on the same grid and reports the efficiency ratios.
#[allow(clippy::too_many_arguments)]
pub fn compare(
    model: &StateSpaceModel,
    grid: &FrequencyGrid,
    eps_rel: f64,
    eps_abs: f64,
    it: usize,
    max_boxes: usize,
    mode: ExecutionMode,
    opts: &BoundOptions,
) -> Result<ComparisonReport> {
    let parallel = run_parallel(model, grid, eps_rel, it, mode, opts)?;
    let conventional = run_conventional(model, grid, eps_abs, max_boxes, opts)?;
    let box_ratio = parallel.metrics.boxes_created as f64
        / conventional.result.metrics.boxes_created.max(1) as f64;
    let bound_eval_ratio = parallel.metrics.bound_evaluations() as f64
        / conventional.result.metrics.bound_evaluations().max(1) as f64;
    Ok(ComparisonReport {
        parallel,
        conventional,
        box_ratio,
        bound_eval_ratio,
    })
}
