"""Independent reference implementations used as test oracles.

Written from first principles and kept deliberately naive: unit-step
schedulers, dense-grid integration, matrix-form Kalman recursion.
"""

import math

import numpy as np


def unit_step_schedule(tasks, horizon, policy="FP"):
    """Simulate synchronous periodic jobs one time unit at a time.

    ``tasks``: list of dicts with id, C, T, D, P. Returns (max response per
    task id, deadline misses per task id). Late jobs keep running; a job still
    unfinished past its deadline at the horizon counts as a miss.
    """
    jobs = []  # [release, abs deadline, remaining, task]
    worst = {t["id"]: 0 for t in tasks}
    misses = {t["id"]: 0 for t in tasks}
    for now in range(horizon):
        for t in tasks:
            if now % t["T"] == 0:
                jobs.append([now, now + t["D"], t["C"], t])
        if jobs:
            if policy == "FP":
                job = min(jobs, key=lambda j: (j[3]["P"], j[0]))
            else:
                job = min(jobs, key=lambda j: (j[1], j[3]["id"], j[0]))
            job[2] -= 1
            if job[2] == 0:
                jobs.remove(job)
                resp = now + 1 - job[0]
                worst[job[3]["id"]] = max(worst[job[3]["id"]], resp)
                if now + 1 > job[1]:
                    misses[job[3]["id"]] += 1
    for j in jobs:
        if j[1] < horizon:
            misses[j[3]["id"]] += 1
    return worst, misses


def trapezoid_mf(x, a, b, c, d):
    x = np.asarray(x, dtype=float)
    up = np.ones_like(x) if b == a else np.clip((x - a) / (b - a), 0, 1)
    down = np.ones_like(x) if d == c else np.clip((d - x) / (d - c), 0, 1)
    out = np.minimum(up, down)
    out[(x < a) | (x > d)] = 0.0
    return out


def brute_centroid(output_sets, strengths, n=10_000):
    """Midpoint-rule centroid of the max of clipped output sets on [0, 1]."""
    y = (np.arange(n) + 0.5) / n
    agg = np.zeros(n)
    for (a, b, c, d), s in zip(output_sets, strengths):
        agg = np.maximum(agg, np.minimum(s, trapezoid_mf(y, a, b, c, d)))
    if agg.sum() == 0:
        return 0.0
    return float((agg * y).sum() / agg.sum())


def textbook_kalman(series, q, r):
    """Local linear trend filter in matrix form; returns [(x, P)] after each step."""
    F = np.array([[1.0, 1.0], [0.0, 1.0]])
    H = np.array([[1.0, 0.0]])
    Q = q * np.eye(2)
    out = []
    x = P = None
    for k, y in enumerate(series):
        if k == 0:
            x, P = np.array([y, 0.0]), np.diag([r, r])
        elif k == 1:
            x = np.array([y, y - x[0]])
            P = np.array([[r, r], [r, 2 * r]])
        else:
            x = F @ x
            P = F @ P @ F.T + Q
            S = H @ P @ H.T + r
            K = P @ H.T / S
            x = x + (K * (y - H @ x)).ravel()
            P = (np.eye(2) - K @ H) @ P
        out.append((x.copy(), P.copy()))
    return out


def lcm_all(values):
    return math.lcm(*values)
