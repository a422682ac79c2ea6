"""Closed-form predictions for the nine model variants.

Every variant exposes the same surface: comprehension posteriors for the
bare message and the conjunction (probability of ``World.AB`` after hearing
``A`` resp. ``A_AND_B``), and production distributions over the three
messages for each world.  Comprehension is modelled by the first pragmatic
listener; production by the level-2 speaker, except the first
lexical-intentions variant which uses its marginal level-1 speaker.

The expressions here are direct transcriptions of each variant's algebra,
evaluated through logistic/log-sum-exp primitives so that rationality values
up to the fitting bound (1e3) neither overflow nor underflow destructively.
Each form is independently pinned against the brute-force recursion of
:mod:`rsa_exh.engine` (see :mod:`rsa_exh.oracles` and the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from .scenario import ModelParams, World

LOG2 = np.log(2.0)

#: Interior clamp applied to priors before taking logs; endpoint behaviour is
#: the documented continuity limit of each form.
P_EPS = 1e-12


class MissingParameter(ValueError):
    """A model requires a parameter that was not supplied."""


class ModelId(Enum):
    BASE_RSA = "base"
    WRSA = "wrsa"
    BWRSA = "bwrsa"
    SVRSA1 = "svrsa1"
    SVRSA2 = "svrsa2"
    FREE_LU = "free-lu"
    EXH_LU = "exh-lu"
    RSA_LI1 = "li1"
    RSA_LI2 = "li2"

    @classmethod
    def from_name(cls, name: str) -> "ModelId":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(
            f"unknown model {name!r}; choose from "
            f"{', '.join(m.value for m in cls)}"
        )


#: Models whose ModelParams must carry the extra prior ``xi``.
XI_MODELS = frozenset({ModelId.WRSA, ModelId.BWRSA, ModelId.SVRSA1, ModelId.SVRSA2})

#: Fixed interpretation priors (literal, exhaustive, anti-exhaustive).
FIXED_RHO = {
    ModelId.FREE_LU: (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
    ModelId.EXH_LU: (0.5, 0.5, 0.0),
}

#: Column order of the prediction row schema.
PREDICTION_COLUMNS = (
    "model", "p", "post_A", "post_AB",
    "prod_wa_A", "prod_wa_AB", "prod_wa_AnB",
    "prod_wab_A", "prod_wab_AB", "prod_wab_AnB",
)


@dataclass(frozen=True)
class Predictions:
    """Unified per-prior output of every model variant.

    ``prod_wa`` / ``prod_wab`` are length-3 vectors over
    ``(A, A_AND_B, A_AND_NOT_B)``.
    """

    post_a: float
    post_ab: float
    prod_wa: np.ndarray
    prod_wab: np.ndarray

    def as_row(self, model: ModelId, p: float) -> dict:
        """Flatten to the canonical CSV row schema."""
        return {
            "model": model.value,
            "p": p,
            "post_A": self.post_a,
            "post_AB": self.post_ab,
            "prod_wa_A": float(self.prod_wa[0]),
            "prod_wa_AB": float(self.prod_wa[1]),
            "prod_wa_AnB": float(self.prod_wa[2]),
            "prod_wab_A": float(self.prod_wab[0]),
            "prod_wab_AB": float(self.prod_wab[1]),
            "prod_wab_AnB": float(self.prod_wab[2]),
        }


@dataclass(frozen=True)
class PredictionTable:
    """Vectorized predictions over a grid of priors (arrays share length N)."""

    p: np.ndarray
    post_a: np.ndarray
    post_ab: np.ndarray
    prod_wa: np.ndarray  # (N, 3)
    prod_wab: np.ndarray  # (N, 3)

    def at(self, i: int) -> Predictions:
        return Predictions(
            float(self.post_a[i]),
            float(self.post_ab[i]),
            self.prod_wa[i].copy(),
            self.prod_wab[i].copy(),
        )


def _clip_prior(p) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=float), P_EPS, 1.0 - P_EPS)


def _logistic(lam: float, x):
    """The rate-``lam`` logistic 1 / (1 + exp(-lam * x))."""
    return expit(lam * np.asarray(x, dtype=float))


def _safe_log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def _log_softmax(log_weights: np.ndarray) -> np.ndarray:
    """Log-softmax over the last axis, tolerant of -inf entries and rows."""
    shifted = log_weights - np.max(log_weights, axis=-1, keepdims=True)
    shifted = np.where(np.isnan(shifted), -np.inf, shifted)
    norm = _safe_log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return np.where(np.isneginf(norm), -np.inf, shifted - norm)


# ---------------------------------------------------------------------------
# Baseline model
# ---------------------------------------------------------------------------


def _base_log_posteriors(params: ModelParams, p):
    """log L1(w_ab | A) and log L1(w_a | A) for the baseline model."""
    pc = _clip_prior(p)
    lam = params.lam
    # masses proportional to prior times the level-1 probability of "A"
    log_wab = _safe_log(pc) - np.logaddexp(0.0, -lam * (_safe_log(pc) + params.delta_ab))
    log_wa = _safe_log(1 - pc) - np.logaddexp(
        0.0, -lam * (_safe_log(1 - pc) + params.delta_anb)
    )
    denom = np.logaddexp(log_wab, log_wa)
    return log_wab - denom, log_wa - denom


def base_rsa_l1(params: ModelParams, p):
    """Baseline posterior of ``World.AB`` after the bare message.

    At the exact endpoints p in {0, 1} the prior is returned unchanged
    (continuity limit).
    """
    log_ab, _ = _base_log_posteriors(params, p)
    p_arr = np.asarray(p, dtype=float)
    out = np.where(p_arr <= 0.0, 0.0, np.where(p_arr >= 1.0, 1.0, np.exp(log_ab)))
    return out if out.ndim else float(out)


def _two_way_s2(params: ModelParams, log_l1_ab, log_l1_a):
    """Level-2 speaker rows from the level-1 posteriors after ``A``.

    In ``World.A`` the choice is between ``A`` (scored by the listener's
    residual w_a posterior) and the explicit ``A_AND_NOT_B``; in ``World.AB``
    between ``A`` and ``A_AND_B``.  Literally false messages get zero.
    """
    lam = params.lam
    x_wa = lam * (np.asarray(log_l1_a) + params.delta_anb)
    x_wab = lam * (np.asarray(log_l1_ab) + params.delta_ab)
    zeros = np.zeros_like(x_wa)
    prod_wa = np.stack([expit(x_wa), zeros, expit(-x_wa)], axis=-1)
    prod_wab = np.stack([expit(x_wab), expit(-x_wab), zeros], axis=-1)
    return prod_wa, prod_wab


def _base_table(params: ModelParams, p: np.ndarray) -> PredictionTable:
    log_ab, log_a = _base_log_posteriors(params, p)
    prod_wa, prod_wab = _two_way_s2(params, log_ab, log_a)
    post_a = np.where(p <= 0.0, 0.0, np.where(p >= 1.0, 1.0, np.exp(log_ab)))
    return PredictionTable(p, post_a, np.ones_like(post_a), prod_wa, prod_wab)


def base_rsa_s2(params: ModelParams, p, world: World) -> np.ndarray:
    """Baseline level-2 production distribution for one world."""
    table = _base_table(params, np.atleast_1d(np.asarray(p, dtype=float)))
    rows = table.prod_wa if world is World.A else table.prod_wab
    return rows[0] if np.ndim(p) == 0 else rows


# ---------------------------------------------------------------------------
# Wonky-prior models: the listener is uncertain whether the speaker assumed
# the measured prior or a backed-off uniform prior over the two worlds.
# ---------------------------------------------------------------------------


def _wonky_speaker_terms(params: ModelParams, p):
    """Level-1 probabilities of uttering ``A`` per world and background.

    Returns (usual w_ab, usual w_a, wonky w_ab, wonky w_a): the usual
    background conditions on the measured prior, the wonky one on the uniform
    prior over the two worlds (hence the log-2 terms).
    """
    pc = _clip_prior(p)
    lam = params.lam
    s_wab_usual = _logistic(lam, _safe_log(pc) + params.delta_ab)
    s_wa_usual = _logistic(lam, _safe_log(1 - pc) + params.delta_anb)
    s_wab_wonky = _logistic(lam, params.delta_ab - LOG2)
    s_wa_wonky = _logistic(lam, params.delta_anb - LOG2)
    return s_wab_usual, s_wa_usual, s_wab_wonky, s_wa_wonky


def wrsa_l1(params: ModelParams, p):
    """Wonky-prior posterior: joint inference over world and background.

    The prior over (world, background) couples them: under the wonky
    background both worlds weigh 1/2.  Not Bayesian with respect to the
    measured prior, so the posterior stays away from 0/1 at the endpoints.
    """
    omega = params.require_xi()
    pc = _clip_prior(p)
    s_wab_u, s_wa_u, s_wab_w, s_wa_w = _wonky_speaker_terms(params, p)
    wab_mass = pc * (1 - omega) * s_wab_u + 0.5 * omega * s_wab_w
    wa_mass = (1 - pc) * (1 - omega) * s_wa_u + 0.5 * omega * s_wa_w
    out = wab_mass / (wab_mass + wa_mass)
    return out if out.ndim else float(out)


def bwrsa_l1(params: ModelParams, p):
    """Bayesian wonky variant: own world prior, mixture over backgrounds.

    Respects prior zeros exactly: returns p unchanged at p in {0, 1}.
    """
    omega = params.require_xi()
    pc = _clip_prior(p)
    s_wab_u, s_wa_u, s_wab_w, s_wa_w = _wonky_speaker_terms(params, p)
    lik_wab = omega * s_wab_w + (1 - omega) * s_wab_u
    lik_wa = omega * s_wa_w + (1 - omega) * s_wa_u
    p_arr = np.asarray(p, dtype=float)
    interior = pc * lik_wab / (pc * lik_wab + (1 - pc) * lik_wa)
    out = np.where(p_arr <= 0.0, 0.0, np.where(p_arr >= 1.0, 1.0, interior))
    return out if out.ndim else float(out)


def _wonky_table(params: ModelParams, p: np.ndarray, bayesian: bool) -> PredictionTable:
    post_a = np.atleast_1d(bwrsa_l1(params, p) if bayesian else wrsa_l1(params, p))
    log_ab = _safe_log(post_a)
    with np.errstate(divide="ignore"):
        log_a = np.log1p(-post_a)
    prod_wa, prod_wab = _two_way_s2(params, log_ab, log_a)
    return PredictionTable(p, post_a, np.ones_like(post_a), prod_wa, prod_wab)


# ---------------------------------------------------------------------------
# Supervaluationist models: the speaker maximizes expected utility over
# interpretations and jointly communicates a QUD cell and the QUD itself.
# An ambiguous message is unusable for a total-QUD speaker unless true under
# every positive-prior interpretation.
# ---------------------------------------------------------------------------


def _svrsa_components(params: ModelParams, pc: np.ndarray, qc: float):
    """Level-1 speakers, joint level-1 listener, and level-2 speakers.

    The joint listener rows run over the four (world, QUD) cells
    ((w_a, partial), (w_ab, partial), (w_a, total), (w_ab, total)).
    """
    lam, dab, danb, chi = params.lam, params.delta_ab, params.delta_anb, params.chi
    n = pc.shape[0]
    costs = np.array([0.0, dab, danb])

    # Level-1 speaker under the partial QUD: world-independent, cost-driven.
    s1_part = np.exp(_log_softmax(-lam * costs))
    # Level-1 speaker under the total QUD in w_a: the bare message scores
    # only through the literal interpretation's share of the cell posterior.
    x = lam * ((1 - chi) * np.log1p(-pc) + danb)
    s1_tot_wa_a = expit(x)
    s1_tot_wa_anb = expit(-x)
    # In w_ab under the total QUD the bare message is false under the
    # exhaustive interpretation, hence unusable: the conjunction is certain.

    zeros = np.zeros(n)
    weights = {
        "A": np.stack(
            [(1 - pc) * (1 - qc) * s1_part[0], pc * (1 - qc) * s1_part[0],
             (1 - pc) * qc * s1_tot_wa_a, zeros], axis=-1),
        "AB": np.stack(
            [(1 - pc) * (1 - qc) * s1_part[1], pc * (1 - qc) * s1_part[1],
             zeros, pc * qc * np.ones(n)], axis=-1),
        "AnB": np.stack(
            [(1 - pc) * (1 - qc) * s1_part[2], pc * (1 - qc) * s1_part[2],
             (1 - pc) * qc * s1_tot_wa_anb, zeros], axis=-1),
    }
    # With the priors clamped away from the endpoints every message keeps a
    # positive total, so the joint posteriors are plain normalizations.
    joint = {key: w / w.sum(axis=-1, keepdims=True) for key, w in weights.items()}

    # Level-2 speaker addressing the partial QUD: scored by each message's
    # joint (cell, QUD) posterior; world-independent.
    log_m = np.stack(
        [_safe_log(joint[k][:, 0] + joint[k][:, 1]) for k in ("A", "AB", "AnB")],
        axis=-1,
    )
    s2_part = np.exp(_log_softmax(lam * (log_m - costs)))
    # Level-2 speaker for (w_a, total): the conjunction has zero posterior on
    # that cell, so the choice is two-way.
    y = lam * (_safe_log(joint["A"][:, 2]) - _safe_log(joint["AnB"][:, 2]) + danb)
    s2_tot_wa = np.stack([expit(y), zeros, expit(-y)], axis=-1)
    s2_tot_wab = np.stack([zeros, np.ones(n), zeros], axis=-1)
    return s1_part, s1_tot_wa_a, joint, s2_part, s2_tot_wa, s2_tot_wab


def _svrsa_table(params: ModelParams, p: np.ndarray, variant: int) -> PredictionTable:
    # The QUD prior gets the same interior clamp as the world prior; the
    # endpoint values q in {0, 1} are thereby the continuity limits.
    qc = float(np.clip(params.require_xi(), P_EPS, 1.0 - P_EPS))
    pc = _clip_prior(p)
    s1_part, s1_tot_wa_a, _, s2_part, s2_tot_wa, s2_tot_wab = _svrsa_components(
        params, pc, qc
    )

    # Comprehension marginals.  The multiplication order p * fraction keeps
    # post_a <= p exactly in floating point (the fraction never exceeds 1).
    denom_a = (1 - qc) * s1_part[0] + (1 - pc) * qc * s1_tot_wa_a
    post_a = pc * ((1 - qc) * s1_part[0] / denom_a)
    denom_ab = (1 - qc) * s1_part[1] + pc * qc
    post_ab = pc * (((1 - qc) * s1_part[1] + qc) / denom_ab)

    if variant == 1:
        prod_wa = (1 - qc) * s2_part + qc * s2_tot_wa
        prod_wab = (1 - qc) * s2_part + qc * s2_tot_wab
    else:
        prod_wa, prod_wab = s2_tot_wa, s2_tot_wab
    return PredictionTable(p, post_a, post_ab, prod_wa, prod_wab)


def svrsa_predict(params: ModelParams, p, variant: int) -> Predictions:
    """Supervaluationist predictions; ``variant`` selects the production mix.

    Variant 1 mixes the partial- and total-QUD level-2 speakers by the QUD
    prior; variant 2 models production with the total-QUD speaker alone.
    """
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    table = _svrsa_table(params, np.atleast_1d(np.asarray(p, dtype=float)), variant)
    return table.at(0)


# ---------------------------------------------------------------------------
# Lexical uncertainty: the level-1 speaker is relativized to one
# interpretation; the level-1 listener mixes interpretations by their prior.
# ---------------------------------------------------------------------------


def _lu_log_posteriors(params: ModelParams, pc: np.ndarray, rho):
    rho_lit, rho_exh, rho_anti = rho
    lam, dab, danb = params.lam, params.delta_ab, params.delta_anb
    s_wa_lit = _logistic(lam, _safe_log(1 - pc) + danb)
    s_wab_lit = _logistic(lam, _safe_log(pc) + dab)
    s_wa_exh = _logistic(lam, danb)
    s_wab_anti = _logistic(lam, dab)
    wab_mass = pc * (rho_lit * s_wab_lit + rho_anti * s_wab_anti)
    wa_mass = (1 - pc) * (rho_lit * s_wa_lit + rho_exh * s_wa_exh)
    log_wab, log_wa = _safe_log(wab_mass), _safe_log(wa_mass)
    denom = np.logaddexp(log_wab, log_wa)
    fallback = np.isneginf(denom)
    log_post_ab = np.where(fallback, _safe_log(pc), log_wab - denom)
    log_post_a = np.where(fallback, _safe_log(1 - pc), log_wa - denom)
    return log_post_ab, log_post_a


def _lu_table(params: ModelParams, p: np.ndarray, rho) -> PredictionTable:
    pc = _clip_prior(p)
    log_ab, log_a = _lu_log_posteriors(params, pc, rho)
    prod_wa, prod_wab = _two_way_s2(params, log_ab, log_a)
    post_a = np.exp(log_ab)
    return PredictionTable(p, post_a, np.ones_like(post_a), prod_wa, prod_wab)


def lu_predict(params: ModelParams, p, rho) -> Predictions:
    """Lexical-uncertainty predictions under interpretation priors ``rho``.

    ``rho`` weighs (literal, exhaustive, anti-exhaustive).  The named
    variants fix rho: the free variant uses the uniform simplex point, the
    grammatical one excludes anti-exhaustive strengthening.
    """
    if len(rho) != 3 or min(rho) < 0 or abs(sum(rho) - 1.0) > 1e-9:
        raise ValueError("rho must be three nonnegative weights summing to 1")
    table = _lu_table(params, np.atleast_1d(np.asarray(p, dtype=float)), tuple(rho))
    return table.at(0)


# ---------------------------------------------------------------------------
# Lexical intentions: the level-1 speaker picks a message-interpretation
# pair jointly; unambiguous messages pair with both interpretations, hence
# the factor-2 terms.
# ---------------------------------------------------------------------------


def _li_s1(params: ModelParams, pc: np.ndarray):
    """Marginal level-1 speaker rows (A, A_AND_B, A_AND_NOT_B) per world."""
    lam, dab, danb = params.lam, params.delta_ab, params.delta_anb
    e_wa = np.exp(lam * np.log1p(-pc))
    denom_wa = 1 + e_wa + 2 * np.exp(-lam * danb)
    s1_a_wa = (1 + e_wa) / denom_wa
    s1_anb_wa = 2 * np.exp(-lam * danb) / denom_wa
    s1_a_wab = expit(lam * (_safe_log(pc) + dab) - LOG2)
    s1_ab_wab = expit(LOG2 - lam * (_safe_log(pc) + dab))
    zeros = np.zeros_like(pc)
    prod_wa = np.stack([s1_a_wa, zeros, s1_anb_wa], axis=-1)
    prod_wab = np.stack([s1_a_wab, s1_ab_wab, zeros], axis=-1)
    return prod_wa, prod_wab


def _li_table(params: ModelParams, p: np.ndarray, variant: int) -> PredictionTable:
    pc = _clip_prior(p)
    s1_wa, s1_wab = _li_s1(params, pc)
    wab_mass = pc * s1_wab[:, 0]
    wa_mass = (1 - pc) * s1_wa[:, 0]
    denom = np.logaddexp(_safe_log(wab_mass), _safe_log(wa_mass))
    log_ab = _safe_log(wab_mass) - denom
    log_a = _safe_log(wa_mass) - denom
    post_a = np.exp(log_ab)
    if variant == 1:
        prod_wa, prod_wab = s1_wa, s1_wab
    else:
        prod_wa, prod_wab = _two_way_s2(params, log_ab, log_a)
    return PredictionTable(p, post_a, np.ones_like(post_a), prod_wa, prod_wab)


def li_predict(params: ModelParams, p, variant: int) -> Predictions:
    """Lexical-intentions predictions; variant 1 produces with the marginal
    level-1 speaker, variant 2 with the level-2 speaker built on its
    listener."""
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    table = _li_table(params, np.atleast_1d(np.asarray(p, dtype=float)), variant)
    return table.at(0)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def predict_table(model: ModelId, params: ModelParams, p) -> PredictionTable:
    """Vectorized predictions over an array of priors."""
    if model in XI_MODELS and params.xi is None:
        raise MissingParameter(f"{model.value} requires the extra prior xi")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if model is ModelId.BASE_RSA:
        return _base_table(params, p)
    if model is ModelId.WRSA:
        return _wonky_table(params, p, bayesian=False)
    if model is ModelId.BWRSA:
        return _wonky_table(params, p, bayesian=True)
    if model is ModelId.SVRSA1:
        return _svrsa_table(params, p, variant=1)
    if model is ModelId.SVRSA2:
        return _svrsa_table(params, p, variant=2)
    if model in (ModelId.FREE_LU, ModelId.EXH_LU):
        return _lu_table(params, p, FIXED_RHO[model])
    if model is ModelId.RSA_LI1:
        return _li_table(params, p, variant=1)
    if model is ModelId.RSA_LI2:
        return _li_table(params, p, variant=2)
    raise ValueError(f"unknown model {model!r}")


def predict(model: ModelId, params: ModelParams, p: float) -> Predictions:
    """Predictions of ``model`` at conditional prior ``p``."""
    return predict_table(model, params, float(p)).at(0)
