"""Discrete semantic universe for the two-world / three-message setting.

Worlds, messages, interpretation functions and questions under discussion
(QUDs) are closed enumerations: every model in this package is specialized
to the scenario where a bare message "A" competes with the two explicit
conjunctions "A and B" / "A and not B" over the worlds w_a ("A true, B
false") and w_ab ("A and B both true").  The generic recursion engine
(:mod:`rsa_exh.engine`) accepts arbitrary finite scenarios built from
index-based tables; this module pins down the canonical one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum


class World(Enum):
    """The two world states: A-only, or A-and-B."""

    A = "w_a"
    AB = "w_ab"


class Message(Enum):
    """The three candidate utterances."""

    A = "A"
    A_AND_B = "A_AND_B"
    A_AND_NOT_B = "A_AND_NOT_B"


class Interpretation(Enum):
    """Candidate meanings for the ambiguous message ``A``.

    LITERAL leaves ``A`` true in both worlds, EXHAUSTIVE strengthens it to
    "A and not B" (true only in ``World.A``), ANTI_EXHAUSTIVE strengthens it
    to "A and B" (true only in ``World.AB``).  The two conjunctive messages
    are unambiguous: their truth values do not depend on the interpretation.
    """

    LITERAL = "literal"
    EXHAUSTIVE = "exhaustive"
    ANTI_EXHAUSTIVE = "anti_exhaustive"


class Qud(Enum):
    """Questions under discussion, viewed as partitions of the world set."""

    PARTIAL = "partial"
    TOTAL = "total"

    @property
    def cells(self) -> tuple[frozenset[World], ...]:
        if self is Qud.PARTIAL:
            return (frozenset({World.A, World.AB}),)
        return (frozenset({World.A}), frozenset({World.AB}))

    def cell_of(self, world: World) -> frozenset[World]:
        for cell in self.cells:
            if world in cell:
                return cell
        raise ValueError(f"{world} not covered by {self}")


#: Canonical orderings used for probability vectors throughout the package.
WORLDS: tuple[World, ...] = (World.A, World.AB)
MESSAGES: tuple[Message, ...] = (Message.A, Message.A_AND_B, Message.A_AND_NOT_B)
INTERPRETATIONS: tuple[Interpretation, ...] = (
    Interpretation.LITERAL,
    Interpretation.EXHAUSTIVE,
    Interpretation.ANTI_EXHAUSTIVE,
)

_A_TRUE_IN = {
    Interpretation.LITERAL: {World.A, World.AB},
    Interpretation.EXHAUSTIVE: {World.A},
    Interpretation.ANTI_EXHAUSTIVE: {World.AB},
}


def truth_value(message: Message, world: World, interpretation: Interpretation) -> bool:
    """Truth table of the scenario.

    ``A_AND_B`` is true exactly in ``World.AB`` and ``A_AND_NOT_B`` exactly in
    ``World.A`` under every interpretation; only the bare ``A`` is
    interpretation-sensitive.
    """
    if message is Message.A_AND_B:
        return world is World.AB
    if message is Message.A_AND_NOT_B:
        return world is World.A
    return world in _A_TRUE_IN[interpretation]


def validate_prior(p: float) -> float:
    """Check that ``p`` (the conditional prior of ``World.AB``) lies in [0, 1]."""
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ValueError(f"prior must be in [0, 1], got {p!r}")
    return float(p)


@dataclass(frozen=True)
class ModelParams:
    """Fit-free knobs shared by every model variant.

    Attributes
    ----------
    lam : float
        Rationality (inverse softmax temperature); must be positive.
    delta_ab : float
        Cost of ``A_AND_B`` relative to the bare ``A`` (whose cost is 0).
    delta_anb : float
        Cost of ``A_AND_NOT_B`` relative to ``A``.
    xi : float or None
        Extra prior in [0, 1] used by some models: the wonkiness prior of the
        wonky-prior variants, or the total-QUD prior of the supervaluationist
        variants.  ``None`` for models without it.
    chi : float
        Prior on the exhaustive interpretation (supervaluationist variants
        only); fixed at 0.5.
    rho : tuple of three floats, optional
        Interpretation priors (literal, exhaustive, anti-exhaustive) for the
        unrestricted lexical-uncertainty construction.  The named LU variants
        fix their own values and ignore this field.
    """

    lam: float
    delta_ab: float = 0.0
    delta_anb: float = 0.0
    xi: float | None = None
    chi: float = 0.5
    rho: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.delta_ab < 0 or self.delta_anb < 0:
            raise ValueError("costs must be nonnegative")
        if self.xi is not None and not (0.0 <= self.xi <= 1.0):
            raise ValueError(f"xi must be in [0, 1], got {self.xi}")
        if not (0.0 <= self.chi <= 1.0):
            raise ValueError(f"chi must be in [0, 1], got {self.chi}")
        if self.rho is not None:
            if len(self.rho) != 3 or min(self.rho) < 0:
                raise ValueError("rho must be three nonnegative weights")
            if abs(sum(self.rho) - 1.0) > 1e-9:
                raise ValueError("rho must sum to 1")

    def require_xi(self) -> float:
        from .models import MissingParameter  # local import to avoid a cycle

        if self.xi is None:
            raise MissingParameter("this model requires the extra prior xi")
        return self.xi

    def to_json(self) -> str:
        """Serialize to the flat key-value text format (xi omitted when absent)."""
        payload: dict[str, float] = {
            "lambda": self.lam,
            "delta_ab": self.delta_ab,
            "delta_anb": self.delta_anb,
        }
        if self.xi is not None:
            payload["xi"] = self.xi
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        """Parse the flat key-value format; ``xi`` may be missing."""
        payload = json.loads(text)
        if not isinstance(payload, dict):
            raise ValueError("params file must hold a JSON object")
        known = {"lambda", "delta_ab", "delta_anb", "xi"}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        if "lambda" not in payload:
            raise ValueError("params file must define 'lambda'")
        return cls(
            lam=float(payload["lambda"]),
            delta_ab=float(payload.get("delta_ab", 0.0)),
            delta_anb=float(payload.get("delta_anb", 0.0)),
            xi=None if payload.get("xi") is None else float(payload["xi"]),
        )
