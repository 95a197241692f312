"""Relative pursuit-evasion games on decoupled subsystems.

Every game here is control- and disturbance-affine with box bounds, so the
instantaneous game ``H(x, q) = min_u max_{b,d} q . f(x, u, b, d)`` separates
into one term per state dimension of the form::

    h_i(x, q_i) = drift_i(x) * q_i + spread_i * |q_i|

``spread_i`` is ``+(b_max + d_max)`` on a position row (planner and wind both
push the error outward) and ``-authority`` on a row the tracker actuates. An
asymmetric input range ``[lo, hi]`` folds into the same shape because
``min(lo*q, hi*q) = (lo+hi)/2 * q - (hi-lo)/2 * |q|``; the vertical thrust row
uses that identity.
"""

from __future__ import annotations

import numpy as np

from .dynamics import ModelParams, SubsystemId


class Game:
    """Base class. ``labels`` names the grid dimensions; dimension 0 is position."""

    labels: tuple[str, ...] = ()
    spread: tuple[float, ...] = ()

    def drift(self, i: int, x):
        """Control-free part of the rate of dimension ``i``; ``x`` holds broadcastable coordinates."""
        raise NotImplementedError

    def term(self, i: int, x, q):
        return self.drift(i, x) * q + self.spread[i] * np.abs(q)

    def hamiltonian(self, x, q) -> float:
        return sum(self.term(i, x, q[i]) for i in range(len(self.labels)))

    def alphas(self, mesh) -> np.ndarray:
        """Per-dimension bound on ``|dH/dq_i|``: largest drift magnitude over the nodes plus the input spread.

        Every drift here is monotone in each coordinate, so its extreme sits on
        a grid corner and the node maximum equals the closed-form bound.
        """
        return np.array([
            float(np.max(np.abs(self.drift(i, mesh)))) + abs(self.spread[i])
            for i in range(len(self.labels))
        ])

    def cache_key(self) -> dict:
        return {"game": type(self).__name__}


class ScalarToyGame(Game):
    """``xr' = u - b + d`` with ``|u| <= u_max``: the tracker outruns the planner when u_max > b_max + d_max."""

    labels = ("xr",)

    def __init__(self, u_max=1.0, b_max=0.5, d_max=0.1):
        self.u_max, self.b_max, self.d_max = u_max, b_max, d_max
        # |u| enters both alpha and the Hamiltonian, so the single row carries
        # the opposing terms separately: adversary spread minus tracker authority.
        self.spread = (b_max + d_max - u_max,)

    def drift(self, i, x):
        return np.zeros_like(np.asarray(x[0], dtype=float))

    def alphas(self, mesh):
        return np.array([self.u_max + self.b_max + self.d_max])

    def cache_key(self):
        return {"game": "ScalarToyGame", "u_max": self.u_max, "b_max": self.b_max, "d_max": self.d_max}


class DoubleIntegratorGame(Game):
    """``xr' = v - b + d``, ``v' = u``."""

    labels = ("xr", "v")

    def __init__(self, u_max=1.0, b_max=0.5, d_max=0.1):
        self.u_max, self.b_max, self.d_max = u_max, b_max, d_max
        self.spread = (b_max + d_max, -u_max)

    def drift(self, i, x):
        if i == 0:
            return np.asarray(x[1], dtype=float)
        return np.zeros_like(np.asarray(x[1], dtype=float))

    def cache_key(self):
        return {"game": "DoubleIntegratorGame", "u_max": self.u_max, "b_max": self.b_max, "d_max": self.d_max}


class AxisGame(Game):
    """Horizontal X4/Y4 subsystem ``(xr, v, theta, omega)`` of the quadrotor-vs-point game."""

    labels = ("xr", "v", "theta", "omega")

    def __init__(self, params: ModelParams):
        self.params = params
        self.spread = (params.b_max + params.d_max, 0.0, 0.0, -params.n0 * params.a_max)

    def drift(self, i, x):
        p = self.params
        if i == 0:
            return np.asarray(x[1], dtype=float)
        if i == 1:
            return p.g * np.tan(x[2])
        if i == 2:
            return -p.d1 * x[2] + x[3]
        return -p.d0 * np.asarray(x[2], dtype=float)

    def cache_key(self):
        return {"game": "AxisGame", **self.params.to_dict()}


class VerticalGame(Game):
    """Vertical Z2 subsystem ``(zr, vz)``; thrust acceleration spans ``[-g, kT*az_max - g]``."""

    labels = ("zr", "vz")

    def __init__(self, params: ModelParams):
        self.params = params
        lo, hi = -params.g, params.kT * params.az_max - params.g
        self._thrust_mid = 0.5 * (lo + hi)
        self.spread = (params.b_max + params.d_max, -0.5 * (hi - lo))

    def drift(self, i, x):
        if i == 0:
            return np.asarray(x[1], dtype=float)
        return np.full(np.shape(x[1]), self._thrust_mid)

    def cache_key(self):
        return {"game": "VerticalGame", **self.params.to_dict()}


def game_for(sid: SubsystemId, params: ModelParams) -> Game:
    return VerticalGame(params) if sid is SubsystemId.Z2 else AxisGame(params)
