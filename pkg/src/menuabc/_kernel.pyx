# cython: language_level=3
"""Compiled menu-search kernel.

Mirror of :mod:`menuabc._pykernel`; every random draw and floating point
operation happens in the same order so both backends agree bit for bit.
The loops run without the GIL, so independent simulator calls scale across
threads.
"""
from libc.stdint cimport uint64_t, int32_t, uint8_t

import numpy as np

BACKEND = "cython"

# packed environment vector layout (must match _pykernel)
cdef enum:
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
    MAX_ITEMS = 12

cdef enum:
    EV_FIXATE = 0
    EV_SELECT = 1
    EV_QUIT = 2


cdef struct Rng:
    uint64_t s[4]


cdef struct Ep:
    int n
    int split
    int full_obs
    int levels[MAX_ITEMS]
    int known[MAX_ITEMS]
    long pow4[MAX_ITEMS]
    long n_obs
    int target
    int loc
    int first
    int recalled
    int done
    int correct


cdef inline uint64_t rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef void rng_seed(Rng* r, uint64_t seed) nogil:
    cdef uint64_t z = seed
    cdef uint64_t x
    cdef int i
    for i in range(4):
        z = z + <uint64_t>0x9E3779B97F4A7C15ULL
        x = z
        x = (x ^ (x >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
        x = (x ^ (x >> 27)) * <uint64_t>0x94D049BB133111EBULL
        r.s[i] = x ^ (x >> 31)


cdef inline uint64_t rng_next(Rng* r) nogil:
    cdef uint64_t result = rotl(r.s[1] * 5, 7) * 9
    cdef uint64_t t = r.s[1] << 17
    r.s[2] ^= r.s[0]
    r.s[3] ^= r.s[1]
    r.s[1] ^= r.s[2]
    r.s[0] ^= r.s[3]
    r.s[2] ^= t
    r.s[3] = rotl(r.s[3], 45)
    return result


cdef inline double rng_uniform(Rng* r) nogil:
    return <double>(rng_next(r) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int rng_randint(Rng* r, int n) nogil:
    return <int>(rng_uniform(r) * n)


cdef inline int discretize(double rel, const double[::1] env) nogil:
    if rel < env[T_LOW]:
        return 1
    if rel < env[T_HIGH]:
        return 2
    return 3


cdef void ep_init(Ep* ep, int n, int split, int full_obs) nogil:
    cdef int i
    ep.n = n
    ep.split = split
    ep.full_obs = full_obs
    ep.n_obs = 1
    for i in range(n):
        ep.pow4[i] = ep.n_obs
        ep.n_obs *= 4


cdef void ep_new_menu(Ep* ep, Rng* rng, const double[::1] env) nogil:
    cdef int i, group, related
    cdef double u, rel
    cdef int absent = rng_uniform(rng) < env[P_ABSENT]
    if absent:
        ep.target = -1
        related = rng_randint(rng, 2)
    else:
        ep.target = rng_randint(rng, ep.n)
        related = 0 if ep.target < ep.split else 1
    for i in range(ep.n):
        group = 0 if i < ep.split else 1
        u = rng_uniform(rng)
        if i == ep.target:
            rel = env[HI_LO] + (env[HI_HI] - env[HI_LO]) * u
        elif group == related:
            rel = env[MED_LO] + (env[MED_HI] - env[MED_LO]) * u
        else:
            rel = env[LOW_LO] + (env[LOW_HI] - env[LOW_LO]) * u
        ep.levels[i] = discretize(rel, env)
        ep.known[i] = ep.levels[i] if ep.full_obs else 0
    ep.loc = 0
    ep.first = 1
    ep.recalled = 0
    ep.done = 0
    ep.correct = 0


cdef inline long ep_state(Ep* ep) nogil:
    cdef long code = 0
    cdef int i
    for i in range(ep.n):
        code += ep.known[i] * ep.pow4[i]
    return ep.loc * ep.n_obs + code


cdef double ep_fixate(Ep* ep, int k, Rng* rng, const double[::1] env) nogil:
    """Returns the fixation duration (saccade + dwell); reward is its negative."""
    cdef int i
    cdef int pos = k + 1
    cdef int amp = pos - ep.loc
    cdef double sacc, ua, ub
    if amp < 0:
        amp = -amp
    sacc = env[SACC_C0] + env[SACC_C1] * (<double>amp * env[PITCH])
    ep.known[k] = ep.levels[k]
    if ep.first:
        ep.first = 0
        if rng_uniform(rng) < env[P_REC]:
            ep.recalled = 1
            for i in range(ep.n):
                ep.known[i] = ep.levels[i]
    ua = rng_uniform(rng)
    ub = rng_uniform(rng)
    if k - 1 >= 0 and ua < env[P_SEM]:
        ep.known[k - 1] = ep.levels[k - 1]
    if k + 1 < ep.n and ub < env[P_SEM]:
        ep.known[k + 1] = ep.levels[k + 1]
    ep.loc = pos
    return sacc + env[F_DUR]


cdef inline double ep_select(Ep* ep, const double[::1] env) nogil:
    ep.done = 1
    ep.correct = ep.loc > 0 and ep.loc - 1 == ep.target
    if ep.correct:
        return env[R_BIG] - env[D_SEL]
    return -env[R_BIG] - env[D_SEL]


cdef inline double ep_quit(Ep* ep, const double[::1] env) nogil:
    ep.done = 1
    ep.correct = ep.target < 0
    if ep.correct:
        return env[R_BIG]
    return -env[R_BIG]


cdef inline int argmax_row(const double[:, ::1] q, long s, int n_actions) nogil:
    cdef int a, best = 0
    cdef double v = q[s, 0]
    for a in range(1, n_actions):
        if q[s, a] > v:
            v = q[s, a]
            best = a
    return best


cdef inline double max_row(const double[:, ::1] q, long s, int n_actions) nogil:
    cdef int a
    cdef double v = q[s, 0]
    for a in range(1, n_actions):
        if q[s, a] > v:
            v = q[s, a]
    return v


def q_update(double[:, ::1] q, long s, int a, double reward, long s_next,
             double alpha, double gamma, bint terminal):
    """One-step Q-learning update of ``q[s, a]`` in place."""
    cdef double target
    if terminal:
        target = reward
    else:
        target = reward + gamma * max_row(q, s_next, q.shape[1])
    q[s, a] += alpha * (target - q[s, a])


def train(double[:, ::1] q, int32_t[:, ::1] visits, const double[::1] env,
          int n_items, int split, bint full_obs, int max_steps, long episodes,
          uint64_t seed, double alpha0, double alpha_h, double gamma,
          double eps_start, double eps_end, long eps_decay):
    if n_items > MAX_ITEMS:
        raise ValueError("too many menu items for the compiled kernel")
    cdef Rng rng
    cdef Ep ep
    cdef long e, s, s2
    cdef int t, a
    cdef int n_actions = n_items + 2
    cdef double eps, r, alpha, target
    with nogil:
        rng_seed(&rng, seed)
        ep_init(&ep, n_items, split, full_obs)
        for e in range(episodes):
            if eps_decay > 0 and e < eps_decay:
                eps = eps_start + (eps_end - eps_start) * (<double>e / <double>eps_decay)
            else:
                eps = eps_end
            ep_new_menu(&ep, &rng, env)
            s = ep_state(&ep)
            for t in range(max_steps):
                if rng_uniform(&rng) < eps:
                    a = rng_randint(&rng, n_actions)
                else:
                    a = argmax_row(q, s, n_actions)
                if a < n_items:
                    r = -ep_fixate(&ep, a, &rng, env)
                elif a == n_items:
                    r = ep_select(&ep, env)
                else:
                    r = ep_quit(&ep, env)
                s2 = ep_state(&ep)
                visits[s, a] += 1
                alpha = alpha0 / (1.0 + <double>(visits[s, a] - 1) / alpha_h)
                if ep.done:
                    target = r
                else:
                    target = r + gamma * max_row(q, s2, n_actions)
                q[s, a] += alpha * (target - q[s, a])
                if ep.done:
                    break
                s = s2


def simulate(const double[:, ::1] q, const double[::1] env, int n_items, int split,
             bint full_obs, int max_steps, uint64_t seed, int policy_mode,
             uint8_t[::1] absent, int32_t[::1] target, uint8_t[::1] correct,
             uint8_t[::1] recalled, int32_t[::1] n_events,
             double[::1] total_reward, int32_t[:, ::1] ev_action,
             int32_t[:, ::1] ev_slot, double[:, ::1] ev_duration,
             double[:, ::1] ev_dwell):
    if n_items > MAX_ITEMS:
        raise ValueError("too many menu items for the compiled kernel")
    cdef Rng rng
    cdef Ep ep
    cdef long i
    cdef long n_sessions = absent.shape[0]
    cdef int t, a, m, last_fix
    cdef int n_actions = n_items + 2
    cdef double r, reward, dur
    with nogil:
        rng_seed(&rng, seed)
        ep_init(&ep, n_items, split, full_obs)
        for i in range(n_sessions):
            ep_new_menu(&ep, &rng, env)
            absent[i] = ep.target < 0
            target[i] = ep.target + 1
            m = 0
            reward = 0.0
            last_fix = -1
            for t in range(max_steps):
                if policy_mode == 0:
                    a = argmax_row(q, ep_state(&ep), n_actions)
                else:
                    a = rng_randint(&rng, n_actions)
                if a < n_items:
                    dur = ep_fixate(&ep, a, &rng, env)
                    r = -dur
                    ev_action[i, m] = EV_FIXATE
                    ev_slot[i, m] = a + 1
                    ev_duration[i, m] = dur
                    ev_dwell[i, m] = env[F_DUR]
                    last_fix = m
                elif a == n_items:
                    r = ep_select(&ep, env)
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
                    r = ep_quit(&ep, env)
                    ev_action[i, m] = EV_QUIT
                    ev_slot[i, m] = 0
                    ev_duration[i, m] = 0.0
                    ev_dwell[i, m] = 0.0
                reward += r
                m += 1
                if ep.done:
                    break
            if not ep.done:
                r = ep_quit(&ep, env)
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
