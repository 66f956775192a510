"""Computationally rational model of visual search in an 8-item menu.

The agent sees a menu of two semantic groups (slots 1-4 and 5-8). Fixating
an item reveals its relevance to the target; the agent chooses among
fixating any item, selecting the fixated item, or quitting (declaring the
target absent). Fixations cost time, correct end actions earn a large
reward and wrong ones a large penalty. A policy is learned with tabular
Q-learning on discretized observations and then rolled out greedily to
produce session logs.

Model variants stack on the baseline:

* ``v1`` adds a selection delay ``d_sel``, charged to the last fixation;
* ``v2`` adds menu recall: the first fixation reveals every item with
  probability ``p_rec``;
* ``v3`` adds peripheral vision: each neighbour of a fixated item is
  revealed independently with probability ``p_sem``.

Heavy loops live in :mod:`menuabc.kernel` (compiled, with a pure-Python
fallback).
"""
from dataclasses import dataclass, field, asdict
import csv
import json
import math

import numpy as np

from . import _pykernel
from . import kernel as _kernel_mod

VARIANTS = ("baseline", "v1", "v2", "v3")
CONDITIONS = ("all", "abs", "pre")
ACTION_NAMES = {_pykernel.EV_FIXATE: "fixate", _pykernel.EV_SELECT: "select",
                _pykernel.EV_QUIT: "quit"}

# fixation-duration histogram: 50 ms bins up to 1.5 s, last bin open-ended
DEFAULT_HIST_EDGES = tuple(float(x) for x in range(0, 1550, 50))


class SimulatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParameters:
    """Cognitive parameters; values above the variant's level are ignored."""

    f_dur: float = 400.0
    d_sel: float = 0.0
    p_rec: float = 0.0
    p_sem: float = 0.0
    variant: str = "baseline"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.f_dur > 0:
            raise ValueError("f_dur must be positive")
        if self.d_sel < 0:
            raise ValueError("d_sel must be non-negative")
        for name in ("p_rec", "p_sem"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def level(self):
        return VARIANTS.index(self.variant)

    def effective(self):
        """``(f_dur, d_sel, p_rec, p_sem)`` with inactive features zeroed."""
        lv = self.level
        return (self.f_dur,
                self.d_sel if lv >= 1 else 0.0,
                self.p_rec if lv >= 2 else 0.0,
                self.p_sem if lv >= 3 else 0.0)


@dataclass(frozen=True)
class MenuLayout:
    """Environment constants.

    The saccade model (``saccade_c0 + saccade_c1 * amplitude``), the item
    pitch in degrees, the relevance bands and the reward magnitude are
    modelling defaults, not measured values; all are configurable.
    The gaze starts one pitch above slot 1.
    """

    n_items: int = 8
    group_split: int = 4
    p_absent: float = 0.10
    high_band: tuple = (0.8, 1.0)
    medium_band: tuple = (0.3, 0.6)
    low_band: tuple = (0.0, 0.3)
    thresholds: tuple = (0.3, 0.7)
    saccade_c0: float = 37.0
    saccade_c1: float = 2.7
    item_pitch: float = 1.5
    r_big: float = 10000.0
    fully_observable: bool = False
    max_steps: int = 30

    def __post_init__(self):
        if not 1 <= self.n_items <= 12:
            raise ValueError("n_items must be in 1..12")
        if not 0 <= self.group_split <= self.n_items:
            raise ValueError("group_split must lie within the menu")
        if not 0.0 <= self.p_absent <= 1.0:
            raise ValueError("p_absent must lie in [0, 1]")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    @property
    def n_actions(self):
        return self.n_items + 2

    @property
    def n_states(self):
        return (self.n_items + 1) * 4 ** self.n_items

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("high_band", "medium_band", "low_band", "thresholds"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class QLearningConfig:
    """Tabular Q-learning hyperparameters.

    The step size for a state-action pair after ``n`` previous updates is
    ``alpha / (1 + n / alpha_decay_visits)``. Epsilon decays linearly from
    ``epsilon_start`` to ``epsilon_end`` over the first
    ``epsilon_decay_fraction`` of the episode budget.
    """

    alpha: float = 0.1
    alpha_decay_visits: float = 1000.0
    gamma: float = 1.0
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.5
    q_init: float = 0.0

    def to_dict(self):
        return asdict(self)


def pack_environment(params, layout):
    """Packed float vector consumed by the kernel backends."""
    f_dur, d_sel, p_rec, p_sem = params.effective()
    env = np.zeros(_pykernel.ENV_SIZE)
    env[_pykernel.F_DUR] = f_dur
    env[_pykernel.D_SEL] = d_sel
    env[_pykernel.P_REC] = p_rec
    env[_pykernel.P_SEM] = p_sem
    env[_pykernel.SACC_C0] = layout.saccade_c0
    env[_pykernel.SACC_C1] = layout.saccade_c1
    env[_pykernel.PITCH] = layout.item_pitch
    env[_pykernel.R_BIG] = layout.r_big
    env[_pykernel.P_ABSENT] = layout.p_absent
    env[_pykernel.HI_LO], env[_pykernel.HI_HI] = layout.high_band
    env[_pykernel.MED_LO], env[_pykernel.MED_HI] = layout.medium_band
    env[_pykernel.LOW_LO], env[_pykernel.LOW_HI] = layout.low_band
    env[_pykernel.T_LOW], env[_pykernel.T_HIGH] = layout.thresholds
    return env


def _kernel_seed(rng):
    return int(rng.integers(0, 2**63 - 1))


# -- menus and single-step environment ------------------------------------

@dataclass(frozen=True)
class MenuInstance:
    relevances: tuple
    target_slot: int | None  # 1-based, None when absent

    @property
    def target_present(self):
        return self.target_slot is not None


def build_menu(layout, rng):
    """Draw one menu using the same generator as the training kernel."""
    env = pack_environment(ModelParameters(), layout)
    xr = _pykernel.Xoshiro(_kernel_seed(rng))
    rel, target = _pykernel.draw_menu(xr, env, layout.n_items, layout.group_split)
    return MenuInstance(tuple(rel), None if target < 0 else target + 1)


@dataclass(frozen=True)
class AgentObservation:
    known_relevances: tuple  # per slot: "low" | "medium" | "high" | None
    fixation_slot: int | None


_LEVEL_NAMES = (None, "low", "medium", "high")


class MenuEnv:
    """Step-by-step access to the search environment.

    Mostly useful for inspection and tests; training and simulation run in
    the kernel. Actions are ``("fixate", slot)``, ``"select"`` or
    ``"quit"``, or the kernel's integer codes.
    """

    def __init__(self, params, layout=MenuLayout(), rng=None):
        self.params = params
        self.layout = layout
        self.env = pack_environment(params, layout)
        rng = np.random.default_rng() if rng is None else rng
        self._rng = _pykernel.Xoshiro(_kernel_seed(rng))
        self._ep = _pykernel.Episode(self.env, layout.n_items, layout.fully_observable)
        self._started = False

    def reset(self, menu=None):
        if menu is None:
            rel, target = _pykernel.draw_menu(self._rng, self.env, self.layout.n_items,
                                              self.layout.group_split)
        else:
            rel = list(menu.relevances)
            target = -1 if menu.target_slot is None else menu.target_slot - 1
        self._ep.reset(rel, target)
        self.menu = MenuInstance(tuple(rel), None if target < 0 else target + 1)
        self._started = True
        self.n_fixations = 0
        return self.observation()

    @property
    def state_index(self):
        return self._ep.state()

    @property
    def recalled(self):
        return self._ep.recalled

    def observation(self):
        ep = self._ep
        return AgentObservation(tuple(_LEVEL_NAMES[k] for k in ep.known),
                                ep.loc if ep.loc > 0 else None)

    def _encode(self, action):
        n = self.layout.n_items
        if isinstance(action, (int, np.integer)):
            a = int(action)
        elif action == "select":
            a = n
        elif action == "quit":
            a = n + 1
        else:
            kind, slot = action
            if kind != "fixate" or not 1 <= slot <= n:
                raise ValueError(f"invalid action {action!r}")
            a = slot - 1
        if not 0 <= a < n + 2:
            raise ValueError(f"invalid action {action!r}")
        return a

    def step(self, action):
        """Apply an action; returns ``(observation, reward, done)``."""
        if not self._started:
            raise SimulatorError("call reset() before step()")
        if self._ep.done:
            raise SimulatorError("episode already terminated")
        a = self._encode(action)
        reward = self._ep.act(a, self._rng)
        if a < self.layout.n_items:
            self.n_fixations += 1
        return self.observation(), reward, self._ep.done

    @property
    def correct(self):
        return self._ep.correct


# -- policy ---------------------------------------------------------------

@dataclass
class PolicyTable:
    """Dense Q-table indexed by encoded observation; read-only once trained."""

    q_values: np.ndarray
    layout: MenuLayout
    episodes: int = 0

    def __post_init__(self):
        self.q_values.setflags(write=False)

    @property
    def n_actions(self):
        return self.q_values.shape[1]

    def greedy_action(self, state):
        return int(np.argmax(self.q_values[state]))


def train_policy(params, budget, hyper=QLearningConfig(), rng=None,
                 layout=MenuLayout(), backend=None):
    """Learn a Q-table with ``budget`` episodes, a fresh menu each episode."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    impl = _kernel_mod.impl if backend is None else _kernel_mod.load_backend(backend)
    rng = np.random.default_rng() if rng is None else rng
    q = np.full((layout.n_states, layout.n_actions), float(hyper.q_init))
    seed = _kernel_seed(rng)
    if budget > 0:
        visits = np.zeros(q.shape, dtype=np.int32)
        eps_decay = int(round(hyper.epsilon_decay_fraction * budget))
        impl.train(q, visits, pack_environment(params, layout), layout.n_items,
                   layout.group_split, layout.fully_observable, layout.max_steps,
                   int(budget), seed, hyper.alpha, hyper.alpha_decay_visits,
                   hyper.gamma, hyper.epsilon_start, hyper.epsilon_end, eps_decay)
    return PolicyTable(q, layout, int(budget))


# -- sessions -------------------------------------------------------------

@dataclass(frozen=True)
class Event:
    action: str
    slot: int | None
    duration_ms: float


@dataclass
class SessionLog:
    events: list
    condition: str  # "absent" | "present"
    outcome: str  # "correct" | "incorrect"
    target_slot: int | None = None
    recalled: bool = False
    fixation_durations: list = field(default_factory=list)
    reward: float = 0.0

    @property
    def tct(self):
        return math.fsum(e.duration_ms for e in self.events)

    @property
    def n_fixations(self):
        return sum(1 for e in self.events if e.action == "fixate")

    @property
    def fixated_slots(self):
        return [e.slot for e in self.events if e.action == "fixate"]


def _rollout(policy, params, n, rng, policy_mode, backend=None):
    impl = _kernel_mod.impl if backend is None else _kernel_mod.load_backend(backend)
    layout = policy.layout
    width = layout.max_steps + 1
    out = dict(
        absent=np.zeros(n, np.uint8), target=np.zeros(n, np.int32),
        correct=np.zeros(n, np.uint8), recalled=np.zeros(n, np.uint8),
        n_events=np.zeros(n, np.int32), total_reward=np.zeros(n),
        ev_action=np.zeros((n, width), np.int32), ev_slot=np.zeros((n, width), np.int32),
        ev_duration=np.zeros((n, width)), ev_dwell=np.zeros((n, width)),
    )
    impl.simulate(np.ascontiguousarray(policy.q_values), pack_environment(params, layout), layout.n_items,
                  layout.group_split, layout.fully_observable, layout.max_steps,
                  _kernel_seed(rng), policy_mode, *out.values())
    return out


def simulate_sessions(policy, params, n, rng=None, backend=None, random_policy=False):
    """Roll out ``n`` sessions greedily (or uniformly at random)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return []
    rng = np.random.default_rng() if rng is None else rng
    out = _rollout(policy, params, n, rng, 1 if random_policy else 0, backend)
    sessions = []
    for i in range(n):
        m = int(out["n_events"][i])
        events = []
        dwell = []
        for j in range(m):
            code = int(out["ev_action"][i, j])
            slot = int(out["ev_slot"][i, j])
            events.append(Event(ACTION_NAMES[code], slot if slot > 0 else None,
                                float(out["ev_duration"][i, j])))
            if code == _pykernel.EV_FIXATE:
                dwell.append(float(out["ev_dwell"][i, j]))
        tgt = int(out["target"][i])
        sessions.append(SessionLog(
            events=events,
            condition="absent" if out["absent"][i] else "present",
            outcome="correct" if out["correct"][i] else "incorrect",
            target_slot=tgt if tgt > 0 else None,
            recalled=bool(out["recalled"][i]),
            fixation_durations=dwell,
            reward=float(out["total_reward"][i]),
        ))
    return sessions


def mean_episode_reward(policy, params, n, rng=None, random_policy=False, backend=None):
    """Average return over ``n`` evaluation episodes (no log objects built)."""
    rng = np.random.default_rng() if rng is None else rng
    out = _rollout(policy, params, n, rng, 1 if random_policy else 0, backend)
    return float(out["total_reward"].mean())


# -- summaries ------------------------------------------------------------

@dataclass
class ConditionStats:
    n_sessions: int
    tct_mean: float
    tct_std: float
    n_fixations_mean: float
    fixation_duration_histogram: dict | None
    gaze_to_target_proportion: list | None

    def to_dict(self):
        return asdict(self)


@dataclass
class BehaviorSummary:
    """Per-condition statistics; conditions without sessions are absent."""

    conditions: dict

    def __getitem__(self, condition):
        return self.conditions[condition]

    def __contains__(self, condition):
        return condition in self.conditions

    def to_dict(self):
        return {"conditions": {k: v.to_dict() for k, v in self.conditions.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls({k: ConditionStats(**v) for k, v in d["conditions"].items()})

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _histogram(durations, edges):
    if not durations:
        return None
    edges = np.asarray(edges, dtype=float)
    idx = np.clip(np.searchsorted(edges, durations, side="right") - 1, 0, len(edges) - 1)
    counts = np.bincount(idx, minlength=len(edges))
    return {"edges_ms": [float(e) for e in edges],
            "mass": [float(c) / len(durations) for c in counts]}


def _gaze_proportions(sessions, n_items):
    present = [s for s in sessions if s.target_slot is not None]
    if not present:
        return None
    per_slot = [[] for _ in range(n_items)]
    for s in present:
        slots = s.fixated_slots
        frac = slots.count(s.target_slot) / len(slots) if slots else 0.0
        per_slot[s.target_slot - 1].append(frac)
    return [float(np.mean(v)) if v else None for v in per_slot]


def _stats(sessions, edges, n_items):
    tct = np.array([s.tct for s in sessions])
    nfix = np.array([s.n_fixations for s in sessions], dtype=float)
    durations = [d for s in sessions for d in s.fixation_durations]
    return ConditionStats(
        n_sessions=len(sessions),
        tct_mean=float(tct.mean()),
        tct_std=float(tct.std()),  # population std (ddof=0)
        n_fixations_mean=float(nfix.mean()),
        fixation_duration_histogram=_histogram(durations, edges),
        gaze_to_target_proportion=_gaze_proportions(sessions, n_items),
    )


def summarize(sessions, subset=None, hist_edges=DEFAULT_HIST_EDGES, n_items=8):
    """Summarize the first ``subset`` sessions (all when ``None``)."""
    if subset is not None:
        if subset < 1:
            raise ValueError("subset must be positive")
        sessions = sessions[:subset]
    groups = {
        "all": list(sessions),
        "abs": [s for s in sessions if s.condition == "absent"],
        "pre": [s for s in sessions if s.condition == "present"],
    }
    return BehaviorSummary({k: _stats(v, hist_edges, n_items)
                            for k, v in groups.items() if v})


def write_sessions_csv(sessions, path):
    """One row per event: session_id, condition, event_index, action, slot, duration_ms."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["session_id", "condition", "event_index", "action", "slot", "duration_ms"])
        for sid, s in enumerate(sessions):
            for j, e in enumerate(s.events):
                w.writerow([sid, s.condition, j, e.action,
                            "" if e.slot is None else e.slot, repr(e.duration_ms)])


def read_sessions_csv(path):
    """Inverse of :func:`write_sessions_csv` (events, condition and slot only)."""
    by_id = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            sid = int(row["session_id"])
            s = by_id.setdefault(sid, SessionLog([], row["condition"], "unknown"))
            s.events.append(Event(row["action"], int(row["slot"]) if row["slot"] else None,
                                  float(row["duration_ms"])))
    return [by_id[k] for k in sorted(by_id)]


# -- simulator used by inference ----------------------------------------------

class MenuSimulator:
    """Maps a parameter vector to a :class:`BehaviorSummary`.

    Trains a fresh policy at ``theta`` and summarizes the first ``subset``
    of ``n_sessions`` greedy sessions. Deterministic given ``(theta, seed)``.
    """

    def __init__(self, names, variant="baseline", fixed=None, layout=MenuLayout(),
                 hyper=QLearningConfig(), train_episodes=100_000, n_sessions=2500,
                 subset=None, backend=None):
        self.names = list(names)
        self.variant = variant
        self.fixed = dict(fixed or {})
        overlap = set(self.names) & set(self.fixed)
        if overlap:
            raise ValueError(f"parameters both fixed and inferred: {sorted(overlap)}")
        self.layout = layout
        self.hyper = hyper
        self.train_episodes = int(train_episodes)
        self.n_sessions = int(n_sessions)
        self.subset = subset
        self.backend = backend

    def parameters(self, theta):
        values = dict(self.fixed)
        values.update({n: float(v) for n, v in zip(self.names, np.atleast_1d(theta))})
        return ModelParameters(variant=self.variant, **values)

    def sessions(self, theta, seed):
        rng = np.random.default_rng(seed)
        params = self.parameters(theta)
        policy = train_policy(params, self.train_episodes, self.hyper, rng,
                              self.layout, self.backend)
        return simulate_sessions(policy, params, self.n_sessions, rng, self.backend)

    def __call__(self, theta, seed):
        return summarize(self.sessions(theta, seed), self.subset,
                         n_items=self.layout.n_items)
