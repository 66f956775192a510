"""Pure-Python menu-search kernel.

Reference backend for :mod:`menuabc._kernel`. Both backends consume the
same packed environment vector, draw from the same xoshiro256** stream in
the same order and perform the same floating point operations, so a Q-table
trained by either one is bit-identical.

Action encoding for an ``n``-item menu: ``0..n-1`` fixate slot ``i+1``,
``n`` select the fixated item, ``n+1`` quit (declare the target absent).
Observation levels: 0 unknown, 1 low, 2 medium, 3 high relevance.
"""
import numpy as np

BACKEND = "python"

# packed environment vector layout (shared with _kernel.pyx)
F_DUR = 0
D_SEL = 1
P_REC = 2
P_SEM = 3
SACC_C0 = 4
SACC_C1 = 5
PITCH = 6
R_BIG = 7
P_ABSENT = 8
HI_LO = 9
HI_HI = 10
MED_LO = 11
MED_HI = 12
LOW_LO = 13
LOW_HI = 14
T_LOW = 15
T_HIGH = 16
ENV_SIZE = 17

# event codes in simulation output
EV_FIXATE = 0
EV_SELECT = 1
EV_QUIT = 2

_MASK = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro:
    """xoshiro256** seeded through splitmix64."""

    def __init__(self, seed):
        z = seed & _MASK
        s = []
        for _ in range(4):
            z = (z + 0x9E3779B97F4A7C15) & _MASK
            x = z
            x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
            x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
            s.append(x ^ (x >> 31))
        self.s = s

    def next(self):
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self):
        return (self.next() >> 11) * _INV53

    def randint(self, n):
        return int(self.uniform() * n)


def discretize(rel, env):
    if rel < env[T_LOW]:
        return 1
    if rel < env[T_HIGH]:
        return 2
    return 3


def draw_menu(rng, env, n_items, split):
    """Draw one menu. Returns ``(relevances, target)`` with target -1 if absent."""
    absent = rng.uniform() < env[P_ABSENT]
    if absent:
        target = -1
        related = rng.randint(2)
    else:
        target = rng.randint(n_items)
        related = 0 if target < split else 1
    rel = [0.0] * n_items
    for i in range(n_items):
        group = 0 if i < split else 1
        u = rng.uniform()
        if i == target:
            rel[i] = env[HI_LO] + (env[HI_HI] - env[HI_LO]) * u
        elif group == related:
            rel[i] = env[MED_LO] + (env[MED_HI] - env[MED_LO]) * u
        else:
            rel[i] = env[LOW_LO] + (env[LOW_HI] - env[LOW_LO]) * u
    return rel, target


class Episode:
    """Mutable state of one search episode."""

    def __init__(self, env, n_items, full_obs):
        self.env = env
        self.n = n_items
        self.full_obs = full_obs
        self.pow4 = [4 ** i for i in range(n_items)]
        self.n_obs = 4 ** n_items

    def reset(self, relevances, target):
        env = self.env
        self.relevances = list(relevances)
        self.levels = [discretize(r, env) for r in relevances]
        self.target = target
        self.known = list(self.levels) if self.full_obs else [0] * self.n
        self.loc = 0
        self.first = True
        self.recalled = False
        self.done = False
        self.correct = False

    def state(self):
        code = 0
        for i in range(self.n):
            code += self.known[i] * self.pow4[i]
        return self.loc * self.n_obs + code

    def fixate(self, k, rng):
        """Fixate slot ``k`` (0-based). Returns ``(reward, duration, dwell)``."""
        env = self.env
        n = self.n
        pos = k + 1
        sacc = env[SACC_C0] + env[SACC_C1] * (abs(pos - self.loc) * env[PITCH])
        duration = sacc + env[F_DUR]
        self.known[k] = self.levels[k]
        if self.first:
            self.first = False
            if rng.uniform() < env[P_REC]:
                self.recalled = True
                for i in range(n):
                    self.known[i] = self.levels[i]
        ua = rng.uniform()
        ub = rng.uniform()
        if k - 1 >= 0 and ua < env[P_SEM]:
            self.known[k - 1] = self.levels[k - 1]
        if k + 1 < n and ub < env[P_SEM]:
            self.known[k + 1] = self.levels[k + 1]
        self.loc = pos
        return -duration, duration, env[F_DUR]

    def select(self):
        env = self.env
        self.done = True
        self.correct = self.loc > 0 and self.loc - 1 == self.target
        if self.correct:
            return env[R_BIG] - env[D_SEL]
        return -env[R_BIG] - env[D_SEL]

    def quit(self):
        env = self.env
        self.done = True
        self.correct = self.target < 0
        return env[R_BIG] if self.correct else -env[R_BIG]

    def act(self, a, rng):
        """Apply action ``a``; returns the reward."""
        if a < self.n:
            return self.fixate(a, rng)[0]
        if a == self.n:
            return self.select()
        return self.quit()


def q_update(q, s, a, reward, s_next, alpha, gamma, terminal):
    """One-step Q-learning update of ``q[s, a]`` in place."""
    if terminal:
        target = reward
    else:
        target = reward + gamma * q[s_next].max()
    q[s, a] += alpha * (target - q[s, a])


def train(q, visits, env, n_items, split, full_obs, max_steps, episodes, seed,
          alpha0, alpha_h, gamma, eps_start, eps_end, eps_decay):
    rng = Xoshiro(seed)
    n_actions = n_items + 2
    ep = Episode(env, n_items, full_obs)
    for e in range(episodes):
        if eps_decay > 0 and e < eps_decay:
            eps = eps_start + (eps_end - eps_start) * (e / eps_decay)
        else:
            eps = eps_end
        rel, target = draw_menu(rng, env, n_items, split)
        ep.reset(rel, target)
        s = ep.state()
        for _ in range(max_steps):
            if rng.uniform() < eps:
                a = rng.randint(n_actions)
            else:
                a = int(q[s].argmax())
            r = ep.act(a, rng)
            s2 = ep.state()
            visits[s, a] += 1
            alpha = alpha0 / (1.0 + (visits[s, a] - 1) / alpha_h)
            q_update(q, s, a, r, s2, alpha, gamma, ep.done)
            if ep.done:
                break
            s = s2


def simulate(q, env, n_items, split, full_obs, max_steps, seed, policy_mode,
             absent, target, correct, recalled, n_events, total_reward,
             ev_action, ev_slot, ev_duration, ev_dwell):
    """Roll out ``len(absent)`` sessions, filling the output arrays in place.

    ``policy_mode`` 0 is greedy on ``q`` (lowest index wins ties), 1 is
    uniformly random. ``ev_slot`` is 1-based, 0 when no slot applies.
    """
    rng = Xoshiro(seed)
    n_actions = n_items + 2
    ep = Episode(env, n_items, full_obs)
    for i in range(absent.shape[0]):
        rel, tgt = draw_menu(rng, env, n_items, split)
        ep.reset(rel, tgt)
        absent[i] = tgt < 0
        target[i] = tgt + 1
        m = 0
        reward = 0.0
        last_fix = -1
        for _ in range(max_steps):
            if policy_mode == 0:
                a = int(q[ep.state()].argmax())
            else:
                a = rng.randint(n_actions)
            if a < n_items:
                r, dur, dwell = ep.fixate(a, rng)
                ev_action[i, m] = EV_FIXATE
                ev_slot[i, m] = a + 1
                ev_duration[i, m] = dur
                ev_dwell[i, m] = dwell
                last_fix = m
            elif a == n_items:
                r = ep.select()
                ev_action[i, m] = EV_SELECT
                ev_slot[i, m] = ep.loc
                if last_fix >= 0:
                    ev_duration[i, last_fix] += env[D_SEL]
                    ev_dwell[i, last_fix] += env[D_SEL]
                    ev_duration[i, m] = 0.0
                else:
                    ev_duration[i, m] = env[D_SEL]
                ev_dwell[i, m] = 0.0
            else:
                r = ep.quit()
                ev_action[i, m] = EV_QUIT
                ev_slot[i, m] = 0
                ev_duration[i, m] = 0.0
                ev_dwell[i, m] = 0.0
            reward += r
            m += 1
            if ep.done:
                break
        if not ep.done:
            # step cap reached: forced quit
            r = ep.quit()
            ev_action[i, m] = EV_QUIT
            ev_slot[i, m] = 0
            ev_duration[i, m] = 0.0
            ev_dwell[i, m] = 0.0
            reward += r
            m += 1
        correct[i] = ep.correct
        recalled[i] = ep.recalled
        n_events[i] = m
        total_reward[i] = reward
