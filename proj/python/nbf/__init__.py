"""Neural vector barrier certificates for discrete-time closed-loop systems.

Thin dict-level wrappers over the compiled core: configs, summaries, and
certificates are plain dicts with the same schema the ``nbf`` command-line
tool reads and writes.
"""

from __future__ import annotations

import json as _json
from typing import Any

from nbf import _core

__version__ = _core.__version__

__all__ = [
    "__version__",
    "synthesize",
    "finetune",
    "verify",
    "simulate",
    "barrier_values",
    "load_certificate",
    "save_certificate",
]


def synthesize(config: dict[str, Any]) -> dict[str, Any]:
    """Run the full pipeline (sample, train, attack, verify, fine-tune).

    Returns a summary dict; on success ``result["certificate"]`` holds the
    complete certificate document.
    """
    return _json.loads(_core.synthesize_json(_json.dumps(config)))


def finetune(config: dict[str, Any]) -> dict[str, Any]:
    """Run only the cutting-plane fine-tuner from a fresh random barrier.

    ``result["status"]`` is ``"feasible"``, ``"empty"``, or ``"budget"``.
    """
    return _json.loads(_core.finetune_json(_json.dumps(config)))


def verify(certificate: dict[str, Any], seed: int = 1) -> dict[str, Any]:
    """Re-verify a certificate from scratch; ignores its stored report."""
    return _json.loads(_core.verify_json(_json.dumps(certificate), seed))


def simulate(
    certificate: dict[str, Any],
    rollouts: int = 1000,
    steps: int = 200,
    seed: int = 0,
) -> dict[str, Any]:
    """Monte-carlo rollouts of the certified closed loop."""
    return _json.loads(
        _core.simulate_json(_json.dumps(certificate), rollouts, steps, seed)
    )


def barrier_values(certificate: dict[str, Any], state: list[float]) -> list[float]:
    """Evaluate the certificate's barrier at one state (m component values)."""
    return list(_core.barrier_values(_json.dumps(certificate), list(state)))


def load_certificate(path: str) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return _json.load(f)


def save_certificate(certificate: dict[str, Any], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        _json.dump(certificate, f, indent=2)
        f.write("\n")
