#!/usr/bin/env python3
"""Produce the bundled benchmark controllers in assets/controllers/.

Each controller is a small ReLU network that imitates a saturated LQR policy
for its plant, then gets validated in closed loop before being written out:
rollouts from the benchmark's initial set must never touch the unsafe set.

Deterministic (seed 7); numpy only. Run from the repository root:

    python3 tools/train_controller.py
"""
import json
import pathlib

import numpy as np

rng = np.random.default_rng(7)
OUT_DIR = pathlib.Path(__file__).resolve().parent.parent / "assets" / "controllers"


# ---------------------------------------------------------------- utilities

def dare_gain(A, B, Q, R):
    """Discrete-time LQR gain K (u = -K x) by fixed-point iteration."""
    P = Q.copy()
    for _ in range(100000):
        Pn = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        if np.max(np.abs(Pn - P)) < 1e-14:
            P = Pn
            break
        P = Pn
    return np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def init_layer(nin, nout):
    w = rng.uniform(-1, 1, (nout, nin)) * np.sqrt(6.0 / nin)
    b = rng.uniform(-1, 1, nout) / np.sqrt(nin)
    return w, b


def net_forward(params, x):
    h = x
    acts = [h]
    for i, (w, b) in enumerate(params):
        h = h @ w.T + b
        if i < len(params) - 1:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return h, acts


def net_loss_grads(params, x, y):
    yhat, acts = net_forward(params, x)
    n = x.shape[0]
    delta = 2.0 * (yhat - y) / n
    grads = []
    for i in reversed(range(len(params))):
        w, _ = params[i]
        grads.append((delta.T @ acts[i], delta.sum(axis=0)))
        if i > 0:
            delta = (delta @ w) * (acts[i] > 0)
    grads.reverse()
    return float(np.mean((yhat - y) ** 2)), grads


def train_net(sizes, x, y, epochs, batch=512, lr=1e-3):
    params = [init_layer(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]
    m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    t = 0
    for epoch in range(epochs):
        perm = rng.permutation(len(x))
        for s in range(0, len(x), batch):
            idx = perm[s:s + batch]
            _, grads = net_loss_grads(params, x[idx], y[idx])
            t += 1
            for i, ((w, b), (gw, gb)) in enumerate(zip(params, grads)):
                mw, mb = m[i]
                vw, vb = v[i]
                mw = b1 * mw + (1 - b1) * gw
                mb = b1 * mb + (1 - b1) * gb
                vw = b2 * vw + (1 - b2) * gw ** 2
                vb = b2 * vb + (1 - b2) * gb ** 2
                m[i] = (mw, mb)
                v[i] = (vw, vb)
                w = w - lr * (mw / (1 - b1 ** t)) / (np.sqrt(vw / (1 - b2 ** t)) + eps)
                b = b - lr * (mb / (1 - b1 ** t)) / (np.sqrt(vb / (1 - b2 ** t)) + eps)
                params[i] = (w, b)
    mse, _ = net_loss_grads(params, x, y)
    return params, mse


def in_box(x, box):
    return bool(np.all(x >= box[:, 0]) and np.all(x <= box[:, 1]))


def rollout_unsafe(step, x0, X, XU, k_max=200):
    """True if the trajectory from x0 enters XU while inside X."""
    x = x0.copy()
    for _ in range(k_max):
        if not in_box(x, X):
            return False
        if in_box(x, XU):
            return True
        x = step(x)
    return in_box(x, XU) and in_box(x, X)


def box_grid(box, per_dim):
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def check_closed_loop(name, step, X, X0, XU, per_dim, n_rand):
    starts = list(box_grid(X0, per_dim)) + [rng.uniform(X0[:, 0], X0[:, 1]) for _ in range(n_rand)]
    bad = sum(rollout_unsafe(step, x0, X, XU) for x0 in starts)
    print(f"{name}: {bad}/{len(starts)} unsafe rollouts")
    assert bad == 0, f"{name}: closed loop reaches the unsafe set"


def write_net(path, params):
    doc = {"layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in params]}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc) + "\n")
    print(f"wrote {path}")


# ------------------------------------------------------- double integrator

def build_double_integrator():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.array([[0.5], [1.0]])
    X = np.array([[-3.0, 3.0], [-3.0, 3.0]])
    X0 = np.array([[2.5, 2.8], [-0.5, 0.0]])
    XU = np.array([[1.5, 1.8], [-0.25, 0.0]])

    K = dare_gain(A, B, np.eye(2), np.array([[1.0]]))
    print("double integrator LQR gain:", K.ravel())

    # Imitation targets: saturated LQR over the workspace, denser along the
    # corridor the closed loop actually traverses.
    xs = np.vstack([
        rng.uniform(X[:, 0], X[:, 1], (20000, 2)),
        rng.uniform([0.0, -2.0], [3.0, 0.5], (20000, 2)),
    ])
    ys = np.clip(-(xs @ K.T), -1.0, 1.0)
    params, mse = train_net([2, 10, 5, 1], xs, ys, epochs=400)
    print(f"double integrator imitation mse: {mse:.3e}")

    def step(x):
        u = net_forward(params, x.reshape(1, -1))[0][0, 0]
        return A @ x + B.ravel() * u

    check_closed_loop("double integrator net", step, X, X0, XU, per_dim=41, n_rand=2000)
    write_net(OUT_DIR / "double_integrator_2_10_5_1.json", params)


# --------------------------------------------------------------- quadrotor

def build_quadrotor():
    dt, grav = 0.1, 9.81
    A = np.eye(6)
    A[0:3, 3:6] = dt * np.eye(3)
    B = np.zeros((6, 3))
    B[3, 0] = dt * grav
    B[4, 1] = -dt * grav
    B[5, 2] = dt
    c = np.zeros(6)
    c[5] = -dt * grav

    X = np.array([[4.0, 5.0], [4.0, 5.0], [2.5, 3.5], [-1, 1], [-1, 1], [-1, 1.0]])
    X0 = np.array([[4.69, 4.71], [4.65, 4.75], [2.975, 3.025],
                   [0.9499, 0.9501], [-0.0001, 0.0001], [-0.0001, 0.0001]])
    XU = np.array([[4.4, 4.45], [4.3, 4.35], [2.9, 3.0],
                   [0.95, 1.0], [-0.1, 0.1], [-0.1, 0.1]])

    K = dare_gain(A, B, np.eye(6), np.eye(3))
    u_hover = np.array([0.0, 0.0, grav])
    x_ref = np.array([4.5, 4.5, 3.0, 0.0, 0.0, 0.0])
    u_lo = np.array([-1.0, -1.0, 0.0])
    u_hi = np.array([1.0, 1.0, 2.0 * grav])

    def policy(x):
        return np.clip(u_hover - (x - x_ref) @ K.T, u_lo, u_hi)

    xs = rng.uniform(X[:, 0], X[:, 1], (60000, 6))
    ys = policy(xs)
    params, mse = train_net([6, 32, 32, 32, 3], xs, ys, epochs=250)
    print(f"quadrotor imitation mse: {mse:.3e}")

    def step(x):
        u = net_forward(params, x.reshape(1, -1))[0][0]
        return A @ x + B @ u + c

    check_closed_loop("quadrotor net", step, X, X0, XU, per_dim=2, n_rand=500)
    write_net(OUT_DIR / "quadrotor6d_6_32_32_32_3.json", params)


if __name__ == "__main__":
    build_double_integrator()
    build_quadrotor()
    print("all controllers written")
