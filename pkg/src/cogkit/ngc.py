"""Generative-coding circuit: predict, settle, and local Hebbian updates.

A circuit is a stack of layers 0..L.  Each layer ell >= 1 predicts the one
below it through a generative matrix W[ell]; the mismatch lives in error
units e[ell] = z[ell] - mu[ell].  Settling nudges unclamped states down the
error landscape using separate learned feedback matrices E[ell] (no reuse of
W transposed), and learning is a local outer product of the error below with
the activity above -- the negative gradient of the layer-local energy.

Gating masks multiply hidden activities: a unit behind a closed gate
contributes nothing to predictions, its error-driven state term is silenced,
and its synapses (both the columns it sends and the rows that predict it)
receive exactly zero change, which is what makes task-specific subnetworks
non-interfering.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

_Z_LIMIT = 1e6


class DivergenceError(RuntimeError):
    """Raised when settling produces non-finite or runaway state."""


@dataclass
class NgcCircuit:
    """Layer sizes plus generative (W) and error-feedback (E) matrices.

    W[ell] has shape (sizes[ell-1], sizes[ell]) and maps layer ell activity
    to a prediction of layer ell-1; E[ell] has the transposed shape and
    carries errors back up.  Index 0 of both lists is unused padding so the
    code reads like the math.
    """

    sizes: tuple
    W: list
    E: list
    phi: tuple
    beta: float = 0.05
    gamma: float = 0.001
    K: int = 50

    @property
    def L(self):
        return len(self.sizes) - 1


@dataclass
class CircuitState:
    """Activities, predictions, and errors, plus what was held fixed.

    ``z`` and ``e`` have one entry per layer 0..L (e[L] is always zero);
    ``mu`` has entries for layers 0..L-1.  ``energy`` is filled in by
    ``settle`` with the final free energy.
    """

    z: list
    mu: list
    e: list
    clamps: dict = field(default_factory=dict)
    mask: dict = field(default_factory=dict)
    pin0: dict = field(default_factory=dict)
    energy: float | None = None


def _apply_phi(name, v):
    if name == "tanh":
        return np.tanh(v)
    if name == "identity":
        return v
    raise ValueError(f"unknown activation {name!r}")


def init_circuit(sizes, seed, beta=0.05, gamma=0.001, K=50, sigma=0.05, phi=None):
    """Build a circuit with i.i.d. Normal(0, sigma^2) weights.

    ``phi`` is a per-layer activation name list; the default is identity at
    layer 0 and tanh everywhere above.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2:
        raise ValueError(f"need at least two layer sizes, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ValueError(f"all layer sizes must be >= 1, got {sizes}")
    if beta <= 0 and beta != 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    L = len(sizes) - 1
    if phi is None:
        phi = ("identity",) + ("tanh",) * L
    else:
        phi = tuple(phi)
        if len(phi) != L + 1:
            raise ValueError(f"phi needs {L + 1} entries, got {len(phi)}")
    for name in phi:
        _apply_phi(name, np.zeros(1))  # validate names early
    rng = np.random.default_rng(seed)
    W = [None]
    E = [None]
    for ell in range(1, L + 1):
        W.append(sigma * rng.standard_normal((sizes[ell - 1], sizes[ell])))
        E.append(sigma * rng.standard_normal((sizes[ell], sizes[ell - 1])))
    return NgcCircuit(sizes=sizes, W=W, E=E, phi=phi, beta=beta, gamma=gamma, K=K)


def _check_layer_vec(circuit, ell, v, what):
    v = np.asarray(v, dtype=float)
    if v.shape != (circuit.sizes[ell],):
        raise ValueError(
            f"{what} for layer {ell} has shape {v.shape}, expected ({circuit.sizes[ell]},)"
        )
    return v


def _validate_mask(circuit, mask):
    out = {}
    for ell, g in (mask or {}).items():
        if not 1 <= ell <= circuit.L:
            raise ValueError(f"gating mask on layer {ell}; only hidden layers 1..{circuit.L}")
        g = _check_layer_vec(circuit, ell, g, "gating mask")
        if (g < 0).any() or (g > 1).any():
            raise ValueError(f"gate values for layer {ell} outside [0, 1]")
        out[ell] = g
    return out


def _gated(state, ell):
    g = state.mask.get(ell)
    return state.z[ell] if g is None else state.z[ell] * g


def make_state(circuit, clamps=None, mask=None, init=None, pin0=None):
    """Assemble a fresh state: clamped layers fixed, the rest from ``init``
    (zeros by default), with predictions and errors refreshed once."""
    clamps = dict(clamps or {})
    init = dict(init or {})
    for name, d in (("clamp", clamps), ("init", init)):
        for ell in list(d):
            if not 0 <= ell <= circuit.L:
                raise ValueError(f"{name} on layer {ell}; circuit has layers 0..{circuit.L}")
            d[int(ell)] = _check_layer_vec(circuit, ell, d[ell], name)
    pin = {}
    for idx, val in (pin0 or {}).items():
        if 0 in clamps:
            raise ValueError("cannot pin layer-0 units when layer 0 is clamped")
        if not 0 <= idx < circuit.sizes[0]:
            raise ValueError(f"pinned unit {idx} out of range for layer 0")
        pin[int(idx)] = float(val)
    z = []
    for ell in range(circuit.L + 1):
        if ell in clamps:
            z.append(clamps[ell].copy())
        elif ell in init:
            z.append(init[ell].copy())
        else:
            z.append(np.zeros(circuit.sizes[ell]))
    state = CircuitState(
        z=z,
        mu=[np.zeros(s) for s in circuit.sizes[:-1]],
        e=[np.zeros(s) for s in circuit.sizes],
        clamps=clamps,
        mask=_validate_mask(circuit, mask),
        pin0=pin,
    )
    return predict(circuit, state)


def predict(circuit, state):
    """Refresh top-down predictions and error units from current activities."""
    L = circuit.L
    if len(state.z) != L + 1:
        raise ValueError(f"state has {len(state.z)} layers, circuit expects {L + 1}")
    mu = []
    for ell in range(1, L + 1):
        a = _apply_phi(circuit.phi[ell], _gated(state, ell))
        mu.append(circuit.W[ell] @ a)
    e = [state.z[ell] - mu[ell] for ell in range(L)]
    e.append(np.zeros(circuit.sizes[L]))
    return replace(state, mu=mu, e=e)


def energy(state):
    """Total free energy: half the squared norm of every error vector."""
    return float(sum(0.5 * np.dot(ev, ev) for ev in state.e))


def settle(circuit, clamps=None, mask=None, init=None, pin0=None):
    """Run K predict/correct iterations and return the final state.

    Clamped layers stay bit-identical.  An unclamped layer 0 tracks its own
    prediction each step (so its error is zero), except at pinned units,
    which are held to their target values and therefore carry exactly the
    error needed to pull the prediction toward the target.  Hidden states
    move by ``beta * (-gamma*z - e + (E @ e_below) * gate)``; with beta = 0
    no state changes at all.
    """
    state = make_state(circuit, clamps=clamps, mask=mask, init=init, pin0=pin0)

    def track_output(st):
        # An unclamped layer 0 follows its own prediction; pinned units stay
        # at their targets, so only they carry error.
        if 0 in st.clamps:
            return
        z0 = st.mu[0].copy()
        for idx, val in st.pin0.items():
            z0[idx] = val
        st.z[0] = z0
        st.e[0] = st.z[0] - st.mu[0]

    for _ in range(circuit.K):
        if circuit.beta != 0.0:
            track_output(state)
            for ell in range(1, circuit.L + 1):
                if ell in state.clamps:
                    continue
                step = -circuit.gamma * state.z[ell] - state.e[ell]
                feedback = circuit.E[ell] @ state.e[ell - 1]
                g = state.mask.get(ell)
                step = step + (feedback if g is None else feedback * g)
                state.z[ell] = state.z[ell] + circuit.beta * step
        for zv in state.z:
            if not np.isfinite(zv).all() or np.abs(zv).max() > _Z_LIMIT:
                raise DivergenceError(
                    f"state exceeded {_Z_LIMIT:g} during settling; "
                    f"beta={circuit.beta} is too large for this circuit"
                )
        state = predict(circuit, state)
    if circuit.beta != 0.0:
        track_output(state)  # leave z0 consistent with the final predictions
    state.energy = energy(state)
    return state


def update_weights(circuit, state, eta_W, eta_E, clip=False):
    """Apply local Hebbian updates and return a new circuit.

    For each layer the raw change is the outer product of the error below
    with the gated activity above; W gets eta_W times it and E gets eta_E
    times its transpose.  Errors at gated-off hidden units are zeroed on the
    postsynaptic side too, so a closed gate means zero change in both the
    unit's outgoing columns and the rows predicting it.  With ``clip``,
    columns of W and E are rescaled onto the unit ball when they exceed it.
    """
    W = [None]
    E = [None]
    for ell in range(1, circuit.L + 1):
        pre = _apply_phi(circuit.phi[ell], _gated(state, ell))
        post_err = state.e[ell - 1]
        g_below = state.mask.get(ell - 1)
        if g_below is not None:
            post_err = post_err * g_below
        grad = np.outer(post_err, pre)
        W.append(circuit.W[ell] + eta_W * grad)
        E.append(circuit.E[ell] + eta_E * grad.T)
        if clip:
            for M in (W[ell], E[ell]):
                norms = np.linalg.norm(M, axis=0)
                big = norms > 1.0
                if big.any():
                    M[:, big] /= norms[big]
    return replace(circuit, W=W, E=E)


def reconstruct(circuit, x, init=None):
    """Settle with layer 0 clamped to ``x``; return (x_hat, error_norm)."""
    x = _check_layer_vec(circuit, 0, x, "input")
    state = settle(circuit, clamps={0: x}, init=init)
    x_hat = state.mu[0]
    return x_hat, float(np.linalg.norm(x - x_hat))
