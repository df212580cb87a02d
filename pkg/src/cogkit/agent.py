"""The integrated agent: buffers, cycle protocol, and persistence.

One cognitive cycle runs perceive -> route -> act -> learn.  Perception
settles the sensory circuit on the observation under the gate winner's mask
and projects the gated top-layer activity into holographic space through a
fixed random bridge.  The winner's routing directive then decides which
buffer transfers happen: encoding the percept into working memory, storing a
task-transition fact into declarative memory, and/or retrieving an expected
next task into the retrieval buffer.  A second fixed bridge compresses
[perception || retrieval || wm] into the motor state, the motor head picks an
action, and the transition begun on the previous cycle is completed and
learned from.

``cycle(obs, r_env, done)`` therefore treats ``r_env``/``done`` as the
outcome of the PREVIOUS action.  A terminal observation still yields an
action (callers usually discard it and reset), but no new pending transition,
so episodes never bleed into each other.  Any exception inside a cycle rolls
the whole agent back to its pre-cycle state.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import hrr, memory, ngc, snapshot
from .gate import CompetitiveGate, ContextTracker, RoutingDirective
from .memory import DeclarativeMemory, WorkingMemoryBuffer
from .motor import MotorCircuit, Transition, epsilon_at, greedy_action

BUFFER_NAMES = ("perception", "retrieval", "goal")


@dataclass
class AgentConfig:
    """Everything needed to rebuild an agent's structure from scratch.

    All fields are plain scalars/sequences so the config embeds into the
    snapshot container as JSON.
    """

    obs_dim: int
    n_actions: int
    d: int = 512
    seed: int = 0
    # sensory cortex
    sensory_hidden: tuple = (128,)
    sensory_beta: float = 0.05
    sensory_gamma: float = 0.001
    sensory_K: int = 30
    sensory_sigma: float = 0.05
    sensory_eta_W: float = 0.01
    sensory_eta_E: float = 0.01
    sensory_clip: bool = True
    # motor cortex
    motor_hidden: tuple = ()
    motor_state_dim: int = 64
    motor_beta: float = 0.05
    motor_gamma: float = 0.001
    motor_K: int = 20
    motor_sigma: float = 0.05
    motor_eta_W: float = 0.02
    motor_eta_E: float = 0.02
    motor_clip: bool = False
    gamma_d: float = 0.95
    alpha_e: float = 0.0
    r_clip: float = 1.0
    replay_capacity: int = 0
    replay_samples: int = 0
    # task gate
    theta: float = 1.0
    eta_c: float = 0.05
    M_max: int = 8
    mask_p: float = 0.5
    mask_mode: str = "random"
    gate_metric: str = "euclid"
    context_window: int = 32
    route_wm_encode: bool = True
    route_dm_store: bool = True
    route_dm_retrieve: bool = True
    # memory
    wm_rho: float = 0.9
    dm_tau: float = 0.1
    dm_k: int = 3
    # exploration schedule
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_frac: float = 0.5
    horizon: int = 10_000

    def __post_init__(self):
        self.sensory_hidden = tuple(int(h) for h in self.sensory_hidden)
        self.motor_hidden = tuple(int(h) for h in self.motor_hidden)
        if not self.sensory_hidden:
            raise ValueError("sensory circuit needs at least one hidden layer")


@dataclass
class CognitiveState:
    """Named buffers, working memory, and the cycle counter."""

    buffers: dict
    wm: WorkingMemoryBuffer
    last_action: int | None = None
    step: int = 0


def _unit_name(k):
    return f"unit{k}"


class Agent:
    """Common-model agent wiring sensory, gate, memory, and motor modules."""

    def __init__(self, config: AgentConfig):
        self.config = config
        ss = np.random.SeedSequence(config.seed)
        s_sensory, s_motor, s_gate, s_b1, s_b2 = ss.spawn(5)
        self.sensory = ngc.init_circuit(
            (config.obs_dim, *config.sensory_hidden),
            seed=s_sensory,
            beta=config.sensory_beta,
            gamma=config.sensory_gamma,
            K=config.sensory_K,
            sigma=config.sensory_sigma,
        )
        self.motor = MotorCircuit(
            config.n_actions,
            config.motor_state_dim,
            hidden=config.motor_hidden,
            seed=s_motor,
            gamma_d=config.gamma_d,
            alpha_e=config.alpha_e,
            r_clip=config.r_clip,
            eta_W=config.motor_eta_W,
            eta_E=config.motor_eta_E,
            beta=config.motor_beta,
            gamma=config.motor_gamma,
            K=config.motor_K,
            sigma=config.motor_sigma,
            clip_weights=config.motor_clip,
            replay_capacity=config.replay_capacity,
            replay_samples=config.replay_samples,
        )
        widths = {i + 1: w for i, w in enumerate(config.sensory_hidden)}
        self.gate = CompetitiveGate(
            context_dim=config.obs_dim,
            layer_widths=widths,
            theta=config.theta,
            eta_c=config.eta_c,
            M_max=config.M_max,
            p=config.mask_p,
            mask_mode=config.mask_mode,
            metric=config.gate_metric,
            seed=s_gate,
            routing_default=RoutingDirective(
                wm_encode_on=config.route_wm_encode,
                dm_store_on=config.route_dm_store,
                dm_retrieve_on=config.route_dm_retrieve,
            ),
        )
        self.lexicon = hrr.SymbolLexicon(
            config.d, seed=config.seed, names=[_unit_name(k) for k in range(config.M_max)]
        )
        self.dm = DeclarativeMemory(lexicon=self.lexicon)
        self.tracker = ContextTracker(config.obs_dim, window=config.context_window)
        top = config.sensory_hidden[-1]
        rng1 = np.random.default_rng(s_b1)
        self.bridge1 = rng1.normal(scale=1.0 / np.sqrt(top), size=(config.d, top))
        rng2 = np.random.default_rng(s_b2)
        self.bridge2 = rng2.normal(
            scale=1.0 / np.sqrt(3 * config.d), size=(config.motor_state_dim, 3 * config.d)
        )
        self.state = CognitiveState(
            buffers={name: np.zeros(config.d) for name in BUFFER_NAMES},
            wm=WorkingMemoryBuffer.empty(config.d, rho=config.wm_rho),
        )
        self.pending = None  # (s, a) awaiting its outcome
        self.prev_winner = None
        self.last_winner = None
        self.last_energy = 0.0

    # ---------------------------------------------------------------- cycle

    def _latent(self, settled):
        """Gated top-layer activity through its activation function."""
        L = self.sensory.L
        z = settled.z[L]
        g = settled.mask.get(L)
        if g is not None:
            z = z * g
        return np.tanh(z) if self.sensory.phi[L] == "tanh" else z

    def _project_perception(self, latent):
        v = self.bridge1 @ latent
        n = np.linalg.norm(v)
        return v / n if n > 0 else v

    def _motor_state(self):
        b = self.state.buffers
        cat = np.concatenate([b["perception"], b["retrieval"], self.state.wm.m])
        s = self.bridge2 @ cat
        n = np.linalg.norm(s)
        return s / n if n > 0 else s

    def perceive(self, obs):
        """Gate, settle, learn the sensory circuit; fill the perception buffer.

        Returns the holographic latent.  Also records the settled free energy
        (the epistemic signal) and the winning gate unit.
        """
        obs = np.asarray(obs, dtype=float)
        if obs.shape != (self.config.obs_dim,):
            raise ValueError(f"observation shape {obs.shape} != ({self.config.obs_dim},)")
        context = self.tracker.update(obs)
        if self.gate.active_count and len(self.tracker) < self.config.context_window:
            # novelty is undefined while the running mean is still forming;
            # match against existing units but do not recruit on warm-up jitter
            winner, _ = self.gate.match(context)
            self.gate.usage[winner] += 1
        else:
            winner = self.gate.select_or_recruit(context)
        self.gate.update_winner(winner, context)
        mask = self.gate.mask_for(winner)
        settled = ngc.settle(self.sensory, clamps={0: obs}, mask=mask)
        self.sensory = ngc.update_weights(
            self.sensory,
            settled,
            self.config.sensory_eta_W,
            self.config.sensory_eta_E,
            clip=self.config.sensory_clip,
        )
        latent = self._latent(settled)
        self.state.buffers["perception"] = self._project_perception(latent)
        self.last_energy = settled.energy
        self.prev_winner = self.last_winner
        self.last_winner = winner
        return latent

    def _route(self, winner):
        directive = self.gate.routing_for(winner)
        if directive.wm_encode_on:
            self.state.wm = memory.wm_encode(self.state.wm, self.state.buffers["perception"])
        if directive.dm_store_on:
            context = [] if self.prev_winner is None else [_unit_name(self.prev_winner)]
            self.dm = memory.dm_store(self.dm, _unit_name(winner), context)
        if directive.dm_retrieve_on and self.dm.traces:
            cue = hrr.permute(self.lexicon[_unit_name(winner)], 1)
            result = memory.dm_retrieve(self.dm, cue, k=self.config.dm_k, tau=self.config.dm_tau)
            blend = sum(
                float(w) * self.lexicon[name]
                for (name, _), w in zip(result.ranked, result.strengths)
            )
            n = np.linalg.norm(blend)
            if n > 0:
                self.state.buffers["retrieval"] = blend / n

    def _capture(self):
        return {
            "sensory": self.sensory,
            "motor_circuit": self.motor.circuit,
            "motor_rng": self.motor.rng.bit_generator.state,
            "motor_replay": tuple(self.motor.replay) if self.motor.replay is not None else None,
            "gate_prototypes": list(self.gate.prototypes),
            "gate_masks": list(self.gate.masks),
            "gate_usage": list(self.gate.usage),
            "gate_routing": [
                RoutingDirective(r.wm_encode_on, r.dm_store_on, r.dm_retrieve_on)
                for r in self.gate.routing
            ],
            "gate_saturated": self.gate.saturated,
            "gate_rng": self.gate.rng.bit_generator.state,
            "dm": self.dm,
            "buffers": dict(self.state.buffers),
            "wm": self.state.wm,
            "last_action": self.state.last_action,
            "step": self.state.step,
            "tracker": tuple(self.tracker._buf),
            "pending": self.pending,
            "prev_winner": self.prev_winner,
            "last_winner": self.last_winner,
            "last_energy": self.last_energy,
        }

    def _rollback(self, cap):
        self.sensory = cap["sensory"]
        self.motor.circuit = cap["motor_circuit"]
        self.motor.rng.bit_generator.state = cap["motor_rng"]
        if cap["motor_replay"] is not None:
            self.motor.replay.clear()
            self.motor.replay.extend(cap["motor_replay"])
        self.gate.prototypes = cap["gate_prototypes"]
        self.gate.masks = cap["gate_masks"]
        self.gate.usage = cap["gate_usage"]
        self.gate.routing = cap["gate_routing"]
        self.gate.saturated = cap["gate_saturated"]
        self.gate.rng.bit_generator.state = cap["gate_rng"]
        self.dm = cap["dm"]
        self.state.buffers = cap["buffers"]
        self.state.wm = cap["wm"]
        self.state.last_action = cap["last_action"]
        self.state.step = cap["step"]
        self.tracker._buf.clear()
        self.tracker._buf.extend(cap["tracker"])
        self.pending = cap["pending"]
        self.prev_winner = cap["prev_winner"]
        self.last_winner = cap["last_winner"]
        self.last_energy = cap["last_energy"]

    def cycle(self, obs, r_env=0.0, done=False):
        """One full cognitive cycle; returns the chosen action.

        ``r_env`` and ``done`` describe the outcome of the previous cycle's
        action and complete its pending transition before a new action is
        chosen.  On any component failure the agent state is rolled back.
        """
        cap = self._capture()
        try:
            self.perceive(obs)
            self._route(self.last_winner)
            s = self._motor_state()
            q = self.motor.q_values(s)
            eps = epsilon_at(
                self.state.step,
                self.config.horizon,
                self.config.eps_start,
                self.config.eps_end,
                self.config.eps_decay_frac,
            )
            if eps > 0.0 and self.motor.rng.random() < eps:
                action = int(self.motor.rng.integers(self.config.n_actions))
            else:
                action = greedy_action(q)
            if self.pending is not None:
                s_prev, a_prev = self.pending
                self.motor.learn(
                    Transition(s=s_prev, a=a_prev, r_env=r_env, s_next=s, done=done),
                    sensory_energy=self.last_energy,
                    q_next=None if done else q,
                )
            self.pending = None if done else (s, action)
            self.state.last_action = action
            self.state.step += 1
            return action
        except Exception:
            self._rollback(cap)
            raise

    def supervised_step(self, obs, targets):
        """Cycle variant for a supervised readout: perceive and route as
        usual, then regress the motor head onto ``targets`` instead of
        running the reward loop.  Returns the greedy action for the
        freshly regressed head."""
        cap = self._capture()
        try:
            self.perceive(obs)
            self._route(self.last_winner)
            s = self._motor_state()
            self.motor.regress(s, targets)
            q = self.motor.q_values(s)
            action = greedy_action(q)
            self.state.last_action = action
            self.state.step += 1
            return action
        except Exception:
            self._rollback(cap)
            raise

    def finish(self, r_env, done=True):
        """Flush the pending transition when a stream ends without a
        successor observation."""
        if self.pending is None:
            return
        cap = self._capture()
        try:
            s_prev, a_prev = self.pending
            self.motor.learn(
                Transition(s=s_prev, a=a_prev, r_env=r_env, s_next=s_prev, done=done),
                sensory_energy=self.last_energy,
            )
            self.pending = None
        except Exception:
            self._rollback(cap)
            raise

    def probe(self, obs, context=None):
        """Evaluation-only readout: no learning, no recruitment, no buffer
        writes.  Returns (action, q_values, winner)."""
        obs = np.asarray(obs, dtype=float)
        if obs.shape != (self.config.obs_dim,):
            raise ValueError(f"observation shape {obs.shape} != ({self.config.obs_dim},)")
        ctx = np.asarray(context, dtype=float) if context is not None else self.tracker.context()
        winner, _ = self.gate.match(ctx)
        settled = ngc.settle(self.sensory, clamps={0: obs}, mask=self.gate.mask_for(winner))
        perception = self._project_perception(self._latent(settled))
        b = self.state.buffers
        cat = np.concatenate([perception, b["retrieval"], self.state.wm.m])
        s = self.bridge2 @ cat
        n = np.linalg.norm(s)
        if n > 0:
            s = s / n
        q = self.motor.q_values(s)
        return greedy_action(q), q, winner

    def set_goal(self, name):
        """Point the goal buffer at a named symbol (added to the lexicon on
        first use)."""
        self.lexicon.add(name)
        self.state.buffers["goal"] = self.lexicon[name].copy()

    # ------------------------------------------------------------ snapshot

    def snapshot(self):
        """Serialize every parameter, buffer, counter, and RNG state."""
        arrays = {
            "bridge1": self.bridge1,
            "bridge2": self.bridge2,
            "wm/m": self.state.wm.m,
        }
        for name in BUFFER_NAMES:
            arrays[f"buffer/{name}"] = self.state.buffers[name]
        for ell in range(1, self.sensory.L + 1):
            arrays[f"sensory/W{ell}"] = self.sensory.W[ell]
            arrays[f"sensory/E{ell}"] = self.sensory.E[ell]
        mc = self.motor.circuit
        for ell in range(1, mc.L + 1):
            arrays[f"motor/W{ell}"] = mc.W[ell]
            arrays[f"motor/E{ell}"] = mc.E[ell]
        for k, proto in enumerate(self.gate.prototypes):
            arrays[f"gate/prototype/{k}"] = proto
            for layer, g in self.gate.masks[k].items():
                arrays[f"gate/mask/{k}/{layer}"] = g
        for name, trace in self.dm.traces.items():
            arrays[f"dm/trace/{name}"] = trace
        if len(self.tracker):
            arrays["ctx/window"] = np.stack(list(self.tracker._buf))
        if self.pending is not None:
            arrays["pending/s"] = self.pending[0]
        if self.motor.replay:
            entries = list(self.motor.replay)
            arrays["replay/s"] = np.stack([e[0] for e in entries])
            arrays["replay/a"] = np.array([e[1] for e in entries], dtype=float)
            arrays["replay/r"] = np.array([e[2] for e in entries])
            arrays["replay/s_next"] = np.stack([e[3] for e in entries])
            arrays["replay/done"] = np.array([1.0 if e[4] else 0.0 for e in entries])
        meta = {
            "config": asdict(self.config),
            "step": int(self.state.step),
            "last_action": None
            if self.state.last_action is None
            else int(self.state.last_action),
            "wm/position": int(self.state.wm.position),
            "gate/usage": [int(u) for u in self.gate.usage],
            "gate/saturated": bool(self.gate.saturated),
            "gate/routing": [
                {
                    "wm_encode_on": r.wm_encode_on,
                    "dm_store_on": r.dm_store_on,
                    "dm_retrieve_on": r.dm_retrieve_on,
                }
                for r in self.gate.routing
            ],
            "gate/rng_state": self.gate.rng.bit_generator.state,
            "motor/rng_state": self.motor.rng.bit_generator.state,
            "dm/store_count": {k: int(v) for k, v in self.dm.store_count.items()},
            "dm/trace_names": list(self.dm.traces),
            "lexicon/names": self.lexicon.names(),
            "pending/a": None if self.pending is None else int(self.pending[1]),
            "prev_winner": self.prev_winner,
            "last_winner": self.last_winner,
            "last_energy": float(self.last_energy),
        }
        return snapshot.write_snapshot(arrays, meta, seed=self.config.seed)

    @classmethod
    def restore(cls, data):
        """Rebuild an agent that behaves identically to the snapshotted one."""
        arrays, meta, _seed = snapshot.read_snapshot(data)
        agent = cls(AgentConfig(**meta["config"]))
        for ell in range(1, agent.sensory.L + 1):
            agent.sensory.W[ell] = arrays[f"sensory/W{ell}"]
            agent.sensory.E[ell] = arrays[f"sensory/E{ell}"]
        mc = agent.motor.circuit
        for ell in range(1, mc.L + 1):
            mc.W[ell] = arrays[f"motor/W{ell}"]
            mc.E[ell] = arrays[f"motor/E{ell}"]
        agent.bridge1 = arrays["bridge1"]
        agent.bridge2 = arrays["bridge2"]
        n_units = len(meta["gate/usage"])
        agent.gate.prototypes = [arrays[f"gate/prototype/{k}"] for k in range(n_units)]
        agent.gate.masks = [
            {
                layer: arrays[f"gate/mask/{k}/{layer}"]
                for layer in sorted(agent.gate.layer_widths)
            }
            for k in range(n_units)
        ]
        agent.gate.usage = list(meta["gate/usage"])
        agent.gate.saturated = meta["gate/saturated"]
        agent.gate.routing = [RoutingDirective(**r) for r in meta["gate/routing"]]
        agent.gate.rng.bit_generator.state = meta["gate/rng_state"]
        agent.motor.rng.bit_generator.state = meta["motor/rng_state"]
        for name in meta["lexicon/names"]:
            agent.lexicon.add(name)
        agent.dm = DeclarativeMemory(
            lexicon=agent.lexicon,
            traces={n: arrays[f"dm/trace/{n}"] for n in meta["dm/trace_names"]},
            store_count=dict(meta["dm/store_count"]),
        )
        agent.state.buffers = {n: arrays[f"buffer/{n}"] for n in BUFFER_NAMES}
        agent.state.wm = WorkingMemoryBuffer(
            m=arrays["wm/m"],
            rho=agent.config.wm_rho,
            position=meta["wm/position"],
            d=agent.config.d,
        )
        agent.state.last_action = meta["last_action"]
        agent.state.step = meta["step"]
        agent.tracker._buf.clear()
        if "ctx/window" in arrays:
            agent.tracker._buf.extend(arrays["ctx/window"])
        if meta["pending/a"] is not None:
            agent.pending = (arrays["pending/s"], meta["pending/a"])
        if "replay/a" in arrays and agent.motor.replay is not None:
            agent.motor.replay.clear()
            for i in range(len(arrays["replay/a"])):
                agent.motor.replay.append(
                    (
                        arrays["replay/s"][i],
                        int(arrays["replay/a"][i]),
                        float(arrays["replay/r"][i]),
                        arrays["replay/s_next"][i],
                        bool(arrays["replay/done"][i]),
                    )
                )
        agent.prev_winner = meta["prev_winner"]
        agent.last_winner = meta["last_winner"]
        agent.last_energy = meta["last_energy"]
        return agent
