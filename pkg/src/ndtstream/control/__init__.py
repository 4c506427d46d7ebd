"""Bitrate decision making: reactive baselines, twin-driven MPC, annealing, Q-learning."""
from .annealing import AnnealingParams, sa_optimize
from .baselines import buffer_based_select, rate_based_select
from .mpc import (
    Annealing,
    Exhaustive,
    MpcDecision,
    PlanState,
    buffering_strategy,
    feasible_limits,
    mpc_plan,
    mpc_select,
    plan_objective,
    planning_weights,
)
from .policies import (
    BufferBased,
    Choice,
    ControllerKind,
    DecisionContext,
    Policy,
    PredictiveMpc,
    QLearning,
    RateBased,
    make_policy,
)
from .qlearning import QParams, q_select, q_update

__all__ = [
    "AnnealingParams", "sa_optimize", "buffer_based_select", "rate_based_select",
    "Annealing", "Exhaustive", "MpcDecision", "PlanState", "buffering_strategy",
    "feasible_limits", "mpc_plan", "mpc_select", "plan_objective", "planning_weights",
    "BufferBased", "Choice", "ControllerKind", "DecisionContext", "Policy", "PredictiveMpc",
    "QLearning", "RateBased", "make_policy", "QParams", "q_select", "q_update",
]
