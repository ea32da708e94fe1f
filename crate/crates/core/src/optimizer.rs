//! Per-transmitter steepest descent with a doubling/halving Armijo search.
//!
//! One sweep visits transmitters `0..K` in order. For transmitter `j` it
//! takes the Euclidean gradient at the current precoders (including updates
//! already made earlier in the same sweep), turns it into a descent
//! direction `Z` for the chosen geometry, and searches the step `β`:
//!
//! 1. double `β` while the step `2β` still decreases the cost by at least
//!    `β⟨Z, Z⟩`;
//! 2. halve `β` until the step `β` decreases the cost by at least
//!    `½β⟨Z, Z⟩`.
//!
//! Every trial point is retracted before it is evaluated. On acceptance
//! both `f(V) − f(V_β) ≥ ½β⟨Z,Z⟩` and `f(V) − f(V_{2β}) < β⟨Z,Z⟩` hold,
//! except when doubling hit [`BETA_MAX`].
//!
//! Step sizes persist from sweep to sweep unless [`StepPolicy::ResetEachSweep`]
//! is selected.

use thiserror::Error;

use crate::alignment::{analyze_receivers, gradient_from_analyses, leakage_cost, leakage_cost_with, PrecoderSet};
use crate::manifolds::{descent_direction, inner_product, retract, ManifoldKind, TangentDirection};
use crate::network::{ChannelSet, NetworkConfig};
use crate::numerics::{ComplexMatrix, LinalgError};

pub const INITIAL_BETA: f64 = 1.0;
/// Doubling stops here even if the cost keeps dropping.
pub const BETA_MAX: f64 = 1e6;
/// Halving below this means `Z` is not a descent direction in practice.
pub const BETA_MIN: f64 = 1e-20;
/// `⟨Z, Z⟩ ≤ ZERO_DIRECTION_TOL · max(1, f)` counts as a stationary point.
pub const ZERO_DIRECTION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("step size fell below {BETA_MIN:e} without sufficient decrease")]
    StepUnderflow,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// When to stop iterating. Any criterion that fires ends the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iterations: usize,
    /// Absolute cost threshold.
    pub cost_tolerance: f64,
    /// Threshold on `cost / initial cost`.
    pub relative_tolerance: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            cost_tolerance: 1e-10,
            relative_tolerance: 1e-6,
        }
    }
}

impl StopRule {
    pub fn iterations(max_iterations: usize) -> Self {
        Self {
            max_iterations,
            ..Self::default()
        }
    }

    fn check(&self, iteration: usize, cost: f64, initial: f64) -> Option<StopReason> {
        if cost <= self.cost_tolerance {
            Some(StopReason::CostTolerance)
        } else if initial > 0.0 && cost <= self.relative_tolerance * initial {
            Some(StopReason::RelativeTolerance)
        } else if iteration >= self.max_iterations {
            Some(StopReason::MaxIterations)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    MaxIterations,
    CostTolerance,
    RelativeTolerance,
    /// A full sweep changed nothing; further sweeps would repeat it exactly.
    Stalled,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MaxIterations => "max_iterations",
            StopReason::CostTolerance => "cost_tolerance",
            StopReason::RelativeTolerance => "relative_tolerance",
            StopReason::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepPolicy {
    /// Keep each transmitter's `β` across sweeps.
    #[default]
    WarmStart,
    /// Reset every `β` to 1 at the start of each sweep.
    ResetEachSweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub precoders: PrecoderSet,
    /// Per-transmitter step sizes.
    pub beta: Vec<f64>,
    pub iteration: usize,
    pub cost: f64,
    pub trace: Vec<TracePoint>,
}

impl OptimizerState {
    pub fn new(
        ch: &ChannelSet,
        cfg: &NetworkConfig,
        precoders: PrecoderSet,
    ) -> Result<Self, LinalgError> {
        let cost = leakage_cost(ch, &precoders, cfg)?;
        Ok(Self {
            beta: vec![INITIAL_BETA; precoders.len()],
            precoders,
            iteration: 0,
            cost,
            trace: vec![TracePoint { iteration: 0, cost }],
        })
    }

    pub fn costs(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.cost).collect()
    }
}

/// Result of one Armijo search.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmijoOutcome {
    Accepted {
        beta: f64,
        precoder: ComplexMatrix,
        cost: f64,
        doublings: u32,
        halvings: u32,
        /// Doubling stopped at [`BETA_MAX`] rather than on the cost test.
        capped: bool,
    },
    /// `Z` was numerically zero; nothing to do.
    ZeroDirection,
}

/// Step-size search for transmitter `j` along `z` from the current
/// precoders, whose cost is `cost`.
#[allow(clippy::too_many_arguments)]
pub fn armijo_adjust(
    kind: ManifoldKind,
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    j: usize,
    z: &TangentDirection,
    beta: f64,
    cost: f64,
) -> Result<ArmijoOutcome, OptimizerError> {
    let v = &pre[j];
    let zz = inner_product(kind, v, &z.z, &z.z);
    if !(zz > ZERO_DIRECTION_TOL * cost.max(1.0)) {
        return Ok(ArmijoOutcome::ZeroDirection);
    }

    // Retracted trial point and its cost; a rank-deficient trial counts as
    // no decrease at all.
    let trial = |step: f64| -> Result<(ComplexMatrix, f64), LinalgError> {
        let mut y = v.clone();
        y.axpy(step, &z.z);
        match retract(kind, &y) {
            Ok(candidate) => {
                let f = leakage_cost_with(ch, pre, cfg, j, &candidate)?;
                Ok((candidate, f))
            }
            Err(LinalgError::RankDeficient { .. }) => Ok((y, f64::INFINITY)),
            Err(e) => Err(e),
        }
    };

    let mut beta = beta;
    let mut doublings = 0;
    let mut halvings = 0;
    let mut capped = false;
    // Trial at the current β, if the doubling phase already computed it.
    let mut cached: Option<(ComplexMatrix, f64)> = None;
    loop {
        if beta >= BETA_MAX {
            capped = true;
            break;
        }
        let (candidate, f) = trial(2.0 * beta)?;
        if cost - f >= beta * zz {
            beta *= 2.0;
            doublings += 1;
            cached = Some((candidate, f));
        } else {
            break;
        }
    }

    loop {
        let (candidate, f) = match cached.take() {
            Some(hit) => hit,
            None => trial(beta)?,
        };
        if cost - f >= 0.5 * beta * zz {
            return Ok(ArmijoOutcome::Accepted {
                beta,
                precoder: candidate,
                cost: f,
                doublings,
                halvings,
                capped,
            });
        }
        beta *= 0.5;
        halvings += 1;
        if beta < BETA_MIN {
            return Err(OptimizerError::StepUnderflow);
        }
    }
}

/// What happened to one transmitter during a sweep.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub transmitter: usize,
    pub precoder_before: ComplexMatrix,
    pub direction: TangentDirection,
    pub cost_before: f64,
    pub degenerate_spectrum: bool,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted {
        beta: f64,
        cost_after: f64,
        capped: bool,
    },
    ZeroDirection,
    /// The search underflowed; the transmitter kept its precoder and step.
    Skipped,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub steps: Vec<StepRecord>,
}

impl SweepReport {
    /// True when no transmitter moved.
    pub fn is_stalled(&self) -> bool {
        self.steps
            .iter()
            .all(|s| !matches!(s.outcome, StepOutcome::Accepted { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub state: OptimizerState,
    pub stop_reason: StopReason,
}

/// Steepest descent on one of the three geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimizer {
    pub kind: ManifoldKind,
    pub stop: StopRule,
    pub step_policy: StepPolicy,
}

impl Optimizer {
    pub fn new(kind: ManifoldKind, stop: StopRule) -> Self {
        Self {
            kind,
            stop,
            step_policy: StepPolicy::WarmStart,
        }
    }

    pub fn with_step_policy(mut self, policy: StepPolicy) -> Self {
        self.step_policy = policy;
        self
    }

    /// One sweep over all transmitters.
    pub fn iterate_once(
        &self,
        ch: &ChannelSet,
        cfg: &NetworkConfig,
        state: &mut OptimizerState,
    ) -> Result<SweepReport, OptimizerError> {
        if self.step_policy == StepPolicy::ResetEachSweep {
            state.beta.fill(INITIAL_BETA);
        }
        let mut steps = Vec::with_capacity(cfg.users());
        for j in 0..cfg.users() {
            let analyses = analyze_receivers(ch, &state.precoders, cfg)?;
            let gradient = gradient_from_analyses(ch, &state.precoders, cfg, &analyses, j);
            let direction = descent_direction(self.kind, &state.precoders[j], &gradient.value);
            let cost_before = state.cost;
            let search = armijo_adjust(
                self.kind,
                ch,
                &state.precoders,
                cfg,
                j,
                &direction,
                state.beta[j],
                cost_before,
            );
            let precoder_before = state.precoders[j].clone();
            let outcome = match search {
                Ok(ArmijoOutcome::Accepted {
                    beta,
                    precoder,
                    cost,
                    capped,
                    ..
                }) => {
                    state.beta[j] = beta;
                    state.precoders.set(j, precoder);
                    state.cost = cost;
                    StepOutcome::Accepted {
                        beta,
                        cost_after: cost,
                        capped,
                    }
                }
                Ok(ArmijoOutcome::ZeroDirection) => StepOutcome::ZeroDirection,
                Err(OptimizerError::StepUnderflow) => StepOutcome::Skipped,
                Err(e) => return Err(e),
            };
            steps.push(StepRecord {
                transmitter: j,
                precoder_before,
                direction,
                cost_before,
                degenerate_spectrum: gradient.degenerate_spectrum,
                outcome,
            });
        }
        state.iteration += 1;
        state.trace.push(TracePoint {
            iteration: state.iteration,
            cost: state.cost,
        });
        Ok(SweepReport { steps })
    }

    /// Runs sweeps from `init` until the stop rule fires.
    pub fn optimize(
        &self,
        ch: &ChannelSet,
        cfg: &NetworkConfig,
        init: PrecoderSet,
    ) -> Result<OptimizationResult, OptimizerError> {
        self.optimize_with(ch, cfg, init, |_, _| {})
    }

    /// Like [`optimize`](Self::optimize), calling `observe` on the initial
    /// state and after every sweep.
    pub fn optimize_with(
        &self,
        ch: &ChannelSet,
        cfg: &NetworkConfig,
        init: PrecoderSet,
        mut observe: impl FnMut(&OptimizerState, Option<&SweepReport>),
    ) -> Result<OptimizationResult, OptimizerError> {
        let mut state = OptimizerState::new(ch, cfg, init)?;
        let initial = state.cost;
        observe(&state, None);
        let stop_reason = loop {
            if let Some(reason) = self.stop.check(state.iteration, state.cost, initial) {
                break reason;
            }
            let report = self.iterate_once(ch, cfg, &mut state)?;
            observe(&state, Some(&report));
            if report.is_stalled() {
                break self
                    .stop
                    .check(state.iteration, state.cost, initial)
                    .unwrap_or(StopReason::Stalled);
            }
        };
        Ok(OptimizationResult { state, stop_reason })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::euclidean_gradient;
    use crate::network::{sample_channels, sample_initial_precoders};

    fn instance(seed: u64) -> (NetworkConfig, ChannelSet, PrecoderSet) {
        let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 100.0).unwrap();
        let ch = sample_channels(&cfg, seed);
        let pre = sample_initial_precoders(&cfg, seed);
        (cfg, ch, pre)
    }

    #[test]
    fn tiny_direction_short_circuits() {
        let (cfg, ch, pre) = instance(1);
        let cost = leakage_cost(&ch, &pre, &cfg).unwrap();
        let z = TangentDirection {
            z: ComplexMatrix::zeros(2, 1),
            kind: ManifoldKind::Grassmann,
        };
        let out = armijo_adjust(ManifoldKind::Grassmann, &ch, &pre, &cfg, 0, &z, 1.0, cost).unwrap();
        assert_eq!(out, ArmijoOutcome::ZeroDirection);
    }

    #[test]
    fn first_step_decreases_cost_and_satisfies_both_inequalities() {
        for kind in ManifoldKind::ALL {
            let (cfg, ch, pre) = instance(4);
            let cost = leakage_cost(&ch, &pre, &cfg).unwrap();
            let g = euclidean_gradient(&ch, &pre, &cfg, 0).unwrap();
            let z = descent_direction(kind, &pre[0], &g.value);
            let out = armijo_adjust(kind, &ch, &pre, &cfg, 0, &z, 1.0, cost).unwrap();
            let ArmijoOutcome::Accepted { beta, cost: after, capped, .. } = out else {
                panic!("expected a step for {kind}");
            };
            assert!(after < cost);
            let zz = inner_product(kind, &pre[0], &z.z, &z.z);
            let eval = |step: f64| {
                let mut y = pre[0].clone();
                y.axpy(step, &z.z);
                leakage_cost_with(&ch, &pre, &cfg, 0, &retract(kind, &y).unwrap()).unwrap()
            };
            assert!(cost - eval(beta) >= 0.5 * beta * zz);
            if !capped {
                assert!(cost - eval(2.0 * beta) < beta * zz);
            }
        }
    }

    #[test]
    fn zero_cross_channels_leave_state_unchanged() {
        let (cfg, full, pre) = instance(2);
        let blocks = (0..9)
            .map(|i| {
                if i / 3 == i % 3 {
                    full.get(i / 3, i % 3).clone()
                } else {
                    ComplexMatrix::zeros(2, 2)
                }
            })
            .collect();
        let ch = ChannelSet::from_blocks(&cfg, blocks, 2).unwrap();
        let opt = Optimizer::new(ManifoldKind::Stiefel, StopRule::iterations(5));
        let mut state = OptimizerState::new(&ch, &cfg, pre.clone()).unwrap();
        let report = opt.iterate_once(&ch, &cfg, &mut state).unwrap();
        assert!(report.is_stalled());
        assert_eq!(state.precoders, pre);
        assert_eq!(state.iteration, 1);
        assert_eq!(state.beta, vec![1.0; 3]);
    }

    #[test]
    fn zero_iterations_returns_initial_state() {
        let (cfg, ch, pre) = instance(3);
        let opt = Optimizer::new(ManifoldKind::Grassmann, StopRule::iterations(0));
        let res = opt.optimize(&ch, &cfg, pre.clone()).unwrap();
        assert_eq!(res.state.trace.len(), 1);
        assert_eq!(res.state.precoders, pre);
        assert_eq!(res.stop_reason, StopReason::MaxIterations);
    }

    #[test]
    fn manifold_variants_converge_on_three_user_two_by_two() {
        let stop = StopRule {
            max_iterations: 100,
            cost_tolerance: 0.0,
            relative_tolerance: 1e-6,
        };
        for kind in [ManifoldKind::Stiefel, ManifoldKind::Grassmann] {
            let (cfg, ch, pre) = instance(11);
            let res = Optimizer::new(kind, stop).optimize(&ch, &cfg, pre).unwrap();
            let costs = res.state.costs();
            assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert!(
                *costs.last().unwrap() <= 1e-6 * costs[0],
                "{kind}: {:?} after {} sweeps",
                costs.last(),
                res.state.iteration
            );
            assert_eq!(res.state.trace.len(), res.state.iteration + 1);
            assert!(res.state.precoders.max_orthonormality_defect() <= 1e-10);
        }
    }

    #[test]
    fn converged_input_stops_immediately() {
        let (cfg, ch, pre) = instance(5);
        let tight = StopRule {
            max_iterations: 2000,
            cost_tolerance: 1e-10,
            relative_tolerance: 0.0,
        };
        let first = Optimizer::new(ManifoldKind::Grassmann, tight)
            .optimize(&ch, &cfg, pre)
            .unwrap();
        assert_eq!(first.stop_reason, StopReason::CostTolerance);
        let again = Optimizer::new(ManifoldKind::Grassmann, tight)
            .optimize(&ch, &cfg, first.state.precoders)
            .unwrap();
        assert!(again.state.iteration <= 1);
        assert_eq!(again.stop_reason, StopReason::CostTolerance);
    }

    #[test]
    fn reset_policy_restarts_steps() {
        let (cfg, ch, pre) = instance(6);
        let opt = Optimizer::new(ManifoldKind::Stiefel, StopRule::iterations(3))
            .with_step_policy(StepPolicy::ResetEachSweep);
        let mut state = OptimizerState::new(&ch, &cfg, pre).unwrap();
        let mut seen_non_unit = false;
        for _ in 0..3 {
            let report = opt.iterate_once(&ch, &cfg, &mut state).unwrap();
            // Each search starts from β = 1, so it ends on a power of two.
            for s in &report.steps {
                if let StepOutcome::Accepted { beta, .. } = s.outcome {
                    assert_eq!(beta.log2().fract(), 0.0);
                    seen_non_unit |= beta != 1.0;
                }
            }
        }
        assert!(seen_non_unit);
    }

    #[test]
    fn runs_are_deterministic() {
        let (cfg, ch, pre) = instance(7);
        let opt = Optimizer::new(ManifoldKind::Euclidean, StopRule::iterations(30));
        let a = opt.optimize(&ch, &cfg, pre.clone()).unwrap();
        let b = opt.optimize(&ch, &cfg, pre).unwrap();
        assert_eq!(a.state.costs(), b.state.costs());
        assert_eq!(a.state.precoders, b.state.precoders);
    }
}
