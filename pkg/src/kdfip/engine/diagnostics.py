"""Numerical diagnostics for the linearized-output view of a network.

A network output under a small weight perturbation is approximately its
value plus the Jacobian applied to the perturbation; squared output
displacement defines a metric over weight space. Neither quantity
materializes the Jacobian: both are computed from directional central
differences, keeping memory at the size of the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import EngineError, ShapeError, Tape, Tensor

ParamDict = dict[str, np.ndarray]


@dataclass
class DiagnosticsReport:
    scales: list[float]
    residual_norms: list[float]
    metric_values: list[float]
    convergence_ratios: list[float]
    zero_direction: bool = False
    notes: list[str] = field(default_factory=list)


def _check_structure(w: ParamDict, dw: ParamDict) -> None:
    if set(w) != set(dw):
        raise ShapeError(
            f"perturbation keys {sorted(dw)} do not match parameters {sorted(w)}"
        )
    for k in w:
        if w[k].shape != dw[k].shape:
            raise ShapeError(
                f"perturbation {k!r} has shape {dw[k].shape}, parameter {w[k].shape}"
            )


def _shifted(w: ParamDict, dw: ParamDict, t: float) -> ParamDict:
    return {k: w[k] + t * dw[k] for k in w}


def finite_diff_gradcheck(closure, params: ParamDict, h: float) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``closure`` maps a dict of engine tensors to a scalar loss tensor and must
    be deterministic; it is evaluated twice at the base point to verify that.
    """
    if h <= 0:
        raise EngineError(f"gradcheck: step h must be positive, got {h}")

    def evaluate(arrays: ParamDict) -> float:
        out = closure({k: Tensor(v) for k, v in arrays.items()})
        if out.data.shape != ():
            raise ShapeError("gradcheck: closure must return a scalar")
        return float(out.data)

    base1 = evaluate(params)
    base2 = evaluate(params)
    if base1 != base2:
        raise EngineError("gradcheck: closure is not deterministic")

    tape = Tape()
    with tape:
        tracked = {k: tape.param(k, v) for k, v in params.items()}
        loss = closure(tracked)
    grads = tape.backward(loss)

    max_rel = 0.0
    for name, arr in params.items():
        g_auto = grads[name]
        work = arr.astype(np.float64).copy()
        flat = work.reshape(-1)
        ga_flat = g_auto.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = evaluate({**params, name: work})
            flat[i] = orig - h
            f_minus = evaluate({**params, name: work})
            flat[i] = orig
            g_fd = (f_plus - f_minus) / (2.0 * h)
            denom = max(1e-12, abs(ga_flat[i]) + abs(g_fd))
            max_rel = max(max_rel, abs(ga_flat[i] - g_fd) / denom)
    return max_rel


def _flat_output(model, w: ParamDict, x) -> np.ndarray:
    out = model(w, x)
    if isinstance(out, Tensor):
        out = out.data
    return np.asarray(out, dtype=np.float64).reshape(-1)


def _directional_derivative(model, w, dw, x, h: float) -> np.ndarray:
    f_plus = _flat_output(model, _shifted(w, dw, h), x)
    f_minus = _flat_output(model, _shifted(w, dw, -h), x)
    return (f_plus - f_minus) / (2.0 * h)


def output_perturbation_residual(
    model, w: ParamDict, dw: ParamDict, x, scales, h: float | None = None
) -> DiagnosticsReport:
    """Residual of the first-order output expansion at each perturbation scale.

    For each scale s the residual is |f(x; w + s*dw) - f(x; w) - s*Jdw| with
    Jdw taken from a central difference at step ``h`` (default: smallest
    scale / 1024, a power-of-two fraction so exactly representable steps stay
    exact). Successive-residual ratios near 4 confirm the quadratic remainder.
    """
    _check_structure(w, dw)
    scales = [float(s) for s in scales]
    if not scales or any(s <= 0 for s in scales):
        raise EngineError("scales must be positive")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise EngineError("scales must be strictly decreasing")

    if all(not np.any(d) for d in dw.values()):
        return DiagnosticsReport(
            scales=scales,
            residual_norms=[0.0] * len(scales),
            metric_values=[0.0] * len(scales),
            convergence_ratios=[],
            zero_direction=True,
            notes=["zero perturbation direction: ratios undefined"],
        )

    if h is None:
        h = min(scales) / 1024.0
    jdw = _directional_derivative(model, w, dw, x, h)
    f0 = _flat_output(model, w, x)
    metric_unit = float(jdw @ jdw)

    residuals = []
    metrics = []
    for s in scales:
        f_pert = _flat_output(model, _shifted(w, dw, s), x)
        residuals.append(float(np.linalg.norm(f_pert - f0 - s * jdw)))
        metrics.append(s * s * metric_unit)

    ratios = []
    for r_big, r_small in zip(residuals, residuals[1:]):
        ratios.append(r_big / r_small if r_small > 0.0 else float("nan"))
    return DiagnosticsReport(
        scales=scales,
        residual_norms=residuals,
        metric_values=metrics,
        convergence_ratios=ratios,
    )


def metric_inner_product(model, w: ParamDict, dw: ParamDict, x, h: float = 1e-3) -> float:
    """Squared norm of the Jacobian applied to ``dw``: the weight-space metric.

    Equals the squared output displacement in the small-perturbation limit;
    always non-negative.
    """
    _check_structure(w, dw)
    jdw = _directional_derivative(model, w, dw, x, h)
    return float(jdw @ jdw)
