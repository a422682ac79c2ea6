"""Generic recursive speaker/listener evaluator over finite scenarios.

This is the brute-force reference engine: scenarios are index-based tables
(worlds x messages x lifted contexts), and speakers/listeners are computed by
explicit enumeration.  All probability arithmetic runs in log space with
max-subtraction; ``-inf`` is the sentinel for "probability exactly zero" and
exponentiates to exactly 0, so rationality values in the hundreds do not
overflow.  The closed forms in :mod:`rsa_exh.models` are pinned against
constructions built from these primitives (see :mod:`rsa_exh.oracles`).

Lifted variables (interpretations, background assumptions, QUDs) are encoded
as a flat "context" axis.  Where a variant marginalizes the lifted variable is
variant-specific configuration: the plain recursion here integrates contexts
out at the first pragmatic listener, while the supervaluationist construction
(which carries the QUD through every level) lives in :mod:`rsa_exh.oracles`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

NEG_INF = float("-inf")
_SUM_TOL = 1e-12


class DegenerateMessage(ValueError):
    """A message is false in every world under the given context."""


class AllMessagesUnusable(ValueError):
    """Every candidate message has utility -inf for the target."""


class UnreachableMessage(ValueError):
    """No (world, context) pair gives the message positive speaker probability."""


@dataclass(frozen=True)
class Distribution:
    """A probability distribution over a finite, labelled support."""

    support: tuple
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.shape != (len(self.support),):
            raise ValueError("probs must be a vector matching the support")
        if np.any(probs < 0) or np.any(np.isnan(probs)):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")

    def prob(self, item) -> float:
        return float(self.probs[self.support.index(item)])

    def as_dict(self) -> dict:
        return {item: float(p) for item, p in zip(self.support, self.probs)}


def _normalized(support, weights: np.ndarray) -> Distribution:
    total = weights.sum()
    return Distribution(tuple(support), weights / total)


@dataclass(frozen=True)
class GenericScenario:
    """Tabular scenario: finite worlds/messages plus optional lifted contexts.

    ``truth`` has shape (contexts, messages, worlds); ``world_prior`` one row
    per context (rows may differ, as in the wonky-prior models), and
    ``context_prior`` weighs the lifted values.  A scenario without lifted
    variables uses a single context.
    """

    worlds: tuple
    messages: tuple
    costs: np.ndarray
    truth: np.ndarray
    world_prior: np.ndarray
    context_prior: np.ndarray = field(default=None)  # type: ignore[assignment]
    contexts: tuple = ((),)

    def __post_init__(self) -> None:
        costs = np.asarray(self.costs, dtype=float)
        truth = np.asarray(self.truth, dtype=bool)
        if truth.ndim == 2:  # (messages, worlds) -> single context
            truth = truth[None, :, :]
        n_ctx = truth.shape[0]
        world_prior = np.asarray(self.world_prior, dtype=float)
        if world_prior.ndim == 1:
            world_prior = np.broadcast_to(world_prior, (n_ctx, len(self.worlds))).copy()
        context_prior = self.context_prior
        if context_prior is None:
            context_prior = np.full(n_ctx, 1.0 / n_ctx)
        context_prior = np.asarray(context_prior, dtype=float)
        contexts = self.contexts if len(self.contexts) == n_ctx else tuple(range(n_ctx))
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "world_prior", world_prior)
        object.__setattr__(self, "context_prior", context_prior)
        object.__setattr__(self, "contexts", contexts)

        if truth.shape != (n_ctx, len(self.messages), len(self.worlds)):
            raise ValueError("truth table shape must be (contexts, messages, worlds)")
        if costs.shape != (len(self.messages),) or np.any(costs < 0):
            raise ValueError("costs must be one nonnegative value per message")
        if np.any(np.abs(world_prior.sum(axis=1) - 1.0) > _SUM_TOL):
            raise ValueError("each context's world prior must sum to 1")
        if abs(context_prior.sum() - 1.0) > _SUM_TOL or np.any(context_prior < 0):
            raise ValueError("context prior must be a probability vector")
        if np.any(~truth.any(axis=(0, 2))):
            raise ValueError("every message must be true in some (world, context) pair")

    @property
    def n_contexts(self) -> int:
        return self.truth.shape[0]

    def marginal_world_prior(self) -> np.ndarray:
        return self.context_prior @ self.world_prior

    def world_index(self, world) -> int:
        return self.worlds.index(world)

    def message_index(self, message) -> int:
        return self.messages.index(message)


# ---------------------------------------------------------------------------
# Batched log-space table primitives.  These accept arbitrary leading batch
# axes so sweeps over the prior can run in one shot; all-(-inf) rows are kept
# (probability-zero rows), and the scalar operations below add the error
# semantics of the public contracts.
# ---------------------------------------------------------------------------


def _safe_log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def log_literal_listener_table(truth: np.ndarray, world_prior: np.ndarray) -> np.ndarray:
    """log L0 over worlds, shape (..., contexts, messages, worlds).

    ``world_prior`` may carry leading batch axes: (..., contexts, worlds).
    Rows for (context, message) pairs whose message is false everywhere in
    that context come back as all ``-inf``.
    """
    masked = np.where(truth, world_prior[..., :, None, :], 0.0)
    totals = masked.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _safe_log(masked) - _safe_log(totals)
    return np.where(totals > 0, out, NEG_INF)


def log_softmax(weights: np.ndarray, axis: int = -1) -> np.ndarray:
    """Log-softmax with max-subtraction; all-(-inf) slices stay all ``-inf``."""
    shifted = weights - np.max(weights, axis=axis, keepdims=True)
    shifted = np.where(np.isnan(shifted), NEG_INF, shifted)  # (-inf) - (-inf)
    norm = _safe_log(np.exp(shifted).sum(axis=axis, keepdims=True))
    return np.where(np.isneginf(norm), NEG_INF, shifted - norm)


def log_speaker_table(log_listener: np.ndarray, costs: np.ndarray, lam: float) -> np.ndarray:
    """Softmax speaker from a listener table.

    ``log_listener`` is (..., messages, worlds); the result is
    (..., worlds, messages): for each world, probabilities proportional to
    exp(lam * (log listener posterior - cost)).
    """
    utilities = np.swapaxes(log_listener, -1, -2) - costs
    return log_softmax(lam * utilities, axis=-1)


def log_joint_listener_table(
    log_speaker: np.ndarray, joint_prior: np.ndarray
) -> np.ndarray:
    """Joint pragmatic-listener posterior over (context, world) per message.

    ``log_speaker`` is (..., contexts, worlds, messages) and ``joint_prior``
    (..., contexts, worlds); returns (..., messages, contexts, worlds).
    Unreachable messages come back as all-(-inf) rows.
    """
    log_weights = _safe_log(joint_prior)[..., None, :, :] + np.moveaxis(
        log_speaker, -1, -3
    )
    denom = logsumexp(log_weights, axis=(-2, -1), keepdims=True)
    out = log_weights - denom
    return np.where(np.isneginf(denom), NEG_INF, out)


# ---------------------------------------------------------------------------
# Scalar operations (the public per-call contracts).
# ---------------------------------------------------------------------------


def literal_listener(scenario: GenericScenario, message, context_index: int = 0) -> Distribution:
    """Posterior over worlds proportional to prior times truth indicator."""
    m = scenario.message_index(message)
    weights = np.where(
        scenario.truth[context_index, m], scenario.world_prior[context_index], 0.0
    )
    if weights.sum() <= 0:
        raise DegenerateMessage(
            f"message {message!r} is false in every world under context {context_index}"
        )
    return _normalized(scenario.worlds, weights)


def utility(listener_dist: Distribution, target_world, cost: float) -> float:
    """log posterior of the target world minus the message cost (-inf allowed)."""
    p = listener_dist.prob(target_world)
    return (np.log(p) if p > 0 else NEG_INF) - cost


def softmax_speaker(utilities: Sequence[float], lam: float, support=None) -> Distribution:
    """Choice probabilities proportional to exp(lam * utility).

    Entries with utility ``-inf`` get exactly zero probability; raises
    :class:`AllMessagesUnusable` when every utility is ``-inf``.
    """
    u = np.asarray(utilities, dtype=float)
    if np.all(np.isneginf(u)):
        raise AllMessagesUnusable("every candidate message has utility -inf")
    log_probs = log_softmax(lam * u)
    return _normalized(support if support is not None else tuple(range(len(u))), np.exp(log_probs))


def pragmatic_listener(
    scenario: GenericScenario,
    log_speaker: np.ndarray,
    message,
    listener_world_prior: np.ndarray | None = None,
) -> Distribution:
    """Joint posterior over (context, world) pairs after hearing ``message``.

    ``log_speaker`` is a (contexts, worlds, messages) log-probability table,
    typically from :func:`log_speaker_table`.  ``listener_world_prior``
    replaces the per-context world priors on the listener side (the listener
    keeps her own world prior while staying uncertain about the context), for
    the Bayesian wonky-prior variant.
    """
    if listener_world_prior is None:
        joint_prior = scenario.context_prior[:, None] * scenario.world_prior
    else:
        joint_prior = scenario.context_prior[:, None] * np.asarray(
            listener_world_prior, dtype=float
        )
    m = scenario.message_index(message)
    log_weights = _safe_log(joint_prior) + log_speaker[:, :, m]
    denom = logsumexp(log_weights)
    if np.isneginf(denom):
        raise UnreachableMessage(f"no (world, context) pair produces {message!r}")
    probs = np.exp(log_weights - denom)
    support = tuple((c, w) for c in scenario.contexts for w in scenario.worlds)
    return _normalized(support, probs.reshape(-1))


def marginal_world(joint: Distribution, worlds: tuple) -> Distribution:
    """Marginalize a (context, world) joint posterior onto worlds."""
    probs = np.zeros(len(worlds))
    for (_, w), p in zip(joint.support, joint.probs):
        probs[worlds.index(w)] += p
    return _normalized(worlds, probs)


@dataclass
class RecursionResult:
    """Speaker/listener tables from :func:`iterate` (probability scale)."""

    scenario: GenericScenario
    lam: float
    log_l0: np.ndarray  # (contexts, messages, worlds)
    log_s1: np.ndarray  # (contexts, worlds, messages)
    log_s1_marginal: np.ndarray | None  # (worlds, messages)
    log_l1_joint: np.ndarray  # (messages, contexts, worlds)
    log_listeners: list  # L1, L2, ... as (messages, worlds)
    log_speakers: list  # S2, S3, ... as (worlds, messages)

    def listener(self, n: int) -> np.ndarray:
        """L_n marginal world posteriors, shape (messages, worlds)."""
        return np.exp(self.log_listeners[n - 1])

    def speaker(self, n: int) -> np.ndarray:
        """S_n message choice probabilities, shape (worlds, messages)."""
        if n == 1:
            if self.log_s1_marginal is None:
                raise ValueError(
                    "the level-1 speaker is relativized to the lifted variable; "
                    "use .log_s1 for the contextual table"
                )
            return np.exp(self.log_s1_marginal)
        return np.exp(self.log_speakers[n - 2])


def iterate(
    scenario: GenericScenario,
    lam: float,
    depth: int,
    *,
    speaker_mode: str = "per_context",
    listener_world_prior: np.ndarray | None = None,
) -> RecursionResult:
    """Run the alternating utility/softmax/Bayes recursion to ``depth``.

    Lifted contexts are integrated out at the first pragmatic listener; from
    there the recursion alternates S_{n+1} (softmax of log L_n minus costs)
    and L_{n+1} (Bayes against the listener's marginal world prior).

    ``speaker_mode="joint"`` makes the level-1 speaker choose a
    (message, context) pair jointly (the lexical-intentions construction);
    the default relativizes her to each context separately.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    log_l0 = log_literal_listener_table(scenario.truth, scenario.world_prior)
    utilities = lam * (np.swapaxes(log_l0, -1, -2) - scenario.costs)
    if speaker_mode == "joint":
        # normalize over (context, message) pairs for each world
        moved = np.moveaxis(utilities, 0, 1)  # (worlds, contexts, messages)
        flat = log_softmax(moved.reshape(moved.shape[0], -1), axis=-1)
        log_s1 = np.moveaxis(flat.reshape(moved.shape), 1, 0)
        log_s1_marginal = logsumexp(log_s1, axis=0)
    elif speaker_mode == "per_context":
        log_s1 = log_softmax(utilities, axis=-1)
        log_s1_marginal = log_s1[0] if scenario.n_contexts == 1 else None
    else:
        raise ValueError(f"unknown speaker_mode {speaker_mode!r}")

    if listener_world_prior is None:
        joint_prior = scenario.context_prior[:, None] * scenario.world_prior
    else:
        joint_prior = scenario.context_prior[:, None] * np.asarray(
            listener_world_prior, dtype=float
        )
    log_l1_joint = log_joint_listener_table(log_s1, joint_prior)
    log_listeners = [logsumexp(log_l1_joint, axis=1)]

    prior_w = joint_prior.sum(axis=0)
    log_prior_w = _safe_log(prior_w)
    log_speakers = []
    for _ in range(2, depth + 1):
        log_s = log_speaker_table(log_listeners[-1], scenario.costs, lam)
        log_speakers.append(log_s)
        log_weights = log_prior_w[None, :] + log_s.T  # (messages, worlds)
        denom = logsumexp(log_weights, axis=1, keepdims=True)
        log_l = np.where(np.isneginf(denom), NEG_INF, log_weights - denom)
        log_listeners.append(log_l)
    return RecursionResult(
        scenario, lam, log_l0, log_s1, log_s1_marginal, log_l1_joint,
        log_listeners, log_speakers,
    )


def expected_utility_over_interpretations(
    scenario: GenericScenario,
    message,
    world,
    qud_cells: Sequence[Sequence],
    interp_prior: Sequence[float] | None = None,
) -> float:
    """Interpretation-averaged utility of a message for communicating a QUD cell.

    The scenario's contexts play the role of interpretations.  For each
    interpretation the term is the log of the literal listener's posterior on
    the cell containing ``world`` (conditional on the QUD, whose constant
    prior factor cancels in any downstream softmax); terms are weighted by
    ``interp_prior`` (default: the scenario's context prior) and the message
    cost is subtracted.  Returns ``-inf`` as soon as an interpretation with
    positive prior leaves the cell with zero posterior mass.
    """
    rho = (
        scenario.context_prior
        if interp_prior is None
        else np.asarray(interp_prior, dtype=float)
    )
    if abs(rho.sum() - 1.0) > 1e-9:
        raise ValueError("interpretation prior must sum to 1")
    m = scenario.message_index(message)
    cell = next(c for c in qud_cells if world in c)
    cell_idx = [scenario.world_index(w) for w in cell]
    total_utility = 0.0
    for c, weight in enumerate(rho):
        if weight <= 0:
            continue
        true_mass = np.where(scenario.truth[c, m], scenario.world_prior[c], 0.0)
        total = true_mass.sum()
        cell_mass = true_mass[cell_idx].sum()
        if cell_mass <= 0 or total <= 0:
            return NEG_INF
        total_utility += weight * (np.log(cell_mass) - np.log(total))
    return total_utility - float(scenario.costs[m])
