"""Linear time-invariant systems: representation, simulation, and response metrics.

Everything here is plain numpy. Systems are immutable once built; all
operations return new objects, so values can be shared freely between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class IntegrationDiverged(RuntimeError):
    """Raised when the integrator produces a non-finite or runaway state."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"integration diverged at step {step}")


class AlgebraicLoop(ValueError):
    """Raised when block wiring closes a direct-feedthrough cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("algebraic loop through signals: " + " -> ".join(cycle))


class InterconnectError(ValueError):
    """Bad wiring: dangling names, duplicate signals, or an ill-posed loop."""


def _as_matrix(m, rows=None, cols=None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if rows is not None and cols is not None and a.size == 0:
        a = a.reshape(rows, cols)
    return a


@dataclass(frozen=True)
class StateSpace:
    """Continuous-time linear system dx/dt = a x + b u, y = c x + d u.

    Signal names are part of the type: interconnection is done by name,
    and simulation traces carry channels under these names.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    state_names: tuple[str, ...] = ()
    input_names: tuple[str, ...] = ()
    output_names: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        a = _as_matrix(self.a)
        n = a.shape[0] if a.size else 0
        if a.size and a.shape[0] != a.shape[1]:
            raise ValueError(f"a must be square, got {a.shape}")
        if a.size == 0:
            a = a.reshape(0, 0)
            n = 0
        b = _as_matrix(self.b)
        if b.size == 0:
            b = b.reshape(n, max(b.shape[1] if b.ndim == 2 else 0, 0))
        m = b.shape[1]
        if b.shape[0] != n:
            raise ValueError(f"b must have {n} rows, got {b.shape}")
        c = _as_matrix(self.c)
        if c.size == 0:
            c = c.reshape(max(c.shape[0] if c.ndim == 2 else 0, 0), n)
        p = c.shape[0]
        if c.shape[1] != n:
            raise ValueError(f"c must have {n} columns, got {c.shape}")
        d = _as_matrix(self.d)
        if d.size == 0:
            d = d.reshape(p, m)
        if d.shape != (p, m):
            raise ValueError(f"d must be {(p, m)}, got {d.shape}")
        for label, mat in (("a", a), ("b", b), ("c", c), ("d", d)):
            if mat.size and not np.all(np.isfinite(mat)):
                raise ValueError(f"matrix {label} contains non-finite entries")
        state_names = tuple(self.state_names) or tuple(f"x{i}" for i in range(n))
        input_names = tuple(self.input_names) or tuple(f"u{i}" for i in range(m))
        output_names = tuple(self.output_names) or tuple(f"y{i}" for i in range(p))
        if len(state_names) != n:
            raise ValueError(f"expected {n} state names, got {len(state_names)}")
        if len(input_names) != m:
            raise ValueError(f"expected {m} input names, got {len(input_names)}")
        if len(output_names) != p:
            raise ValueError(f"expected {p} output names, got {len(output_names)}")
        for attr, val in (("a", a), ("b", b), ("c", c), ("d", d)):
            object.__setattr__(self, attr, val)
            val.flags.writeable = False
        object.__setattr__(self, "state_names", state_names)
        object.__setattr__(self, "input_names", input_names)
        object.__setattr__(self, "output_names", output_names)

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class SimTrace:
    """Fixed-step simulation record: uniform time grid plus named channels."""

    dt: float
    t: np.ndarray
    signals: dict[str, np.ndarray]
    units: str = "pu"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        n = len(self.t)
        for name, sig in self.signals.items():
            if len(sig) != n:
                raise ValueError(f"channel {name!r} has length {len(sig)}, grid has {n}")

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.signals[name]
        except KeyError:
            raise KeyError(f"no channel {name!r}; have {sorted(self.signals)}") from None


@dataclass(frozen=True)
class ResponseMetrics:
    """Transient-response indices for one trace channel."""

    settling_time: float
    peak_overshoot: float
    peak_time: float
    itae_contribution: float
    overshoot_is_absolute: bool = False


def integrate(ss: StateSpace, x0, input_fn, t_sim: float, dt: float,
              abs_limit: float | None = None) -> SimTrace:
    """Simulate `ss` with classical 4th-order Runge-Kutta on a uniform grid.

    `input_fn` maps time to the input vector (None means zero input); it is
    evaluated at the RK4 stage times t, t+dt/2, t+dt. Outputs y = c x + d u
    are recorded at every grid point. Channels hold all outputs plus all
    states; when a state shares a name with an output, the output wins.

    Raises IntegrationDiverged if any state goes non-finite, or exceeds
    `abs_limit` when one is given.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_sim < dt:
        raise ValueError("t_sim must be at least one step")
    n, m = ss.n_states, ss.n_inputs
    x = np.asarray(x0, dtype=float).reshape(n)
    steps = int(round(t_sim / dt))
    t = np.arange(steps + 1) * dt

    if input_fn is None:
        def input_fn(_t):
            return np.zeros(m)

    a, b, c, d = ss.a, ss.b, ss.c, ss.d
    xs = np.empty((steps + 1, n))
    us = np.empty((steps + 1, m))
    xs[0] = x
    us[0] = np.asarray(input_fn(0.0), dtype=float).reshape(m)
    h = dt
    for k in range(steps):
        tk = t[k]
        u0 = us[k]
        um = np.asarray(input_fn(tk + 0.5 * h), dtype=float).reshape(m)
        u1 = np.asarray(input_fn(tk + h), dtype=float).reshape(m)
        k1 = a @ x + b @ u0
        k2 = a @ (x + 0.5 * h * k1) + b @ um
        k3 = a @ (x + 0.5 * h * k2) + b @ um
        k4 = a @ (x + h * k3) + b @ u1
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationDiverged(k + 1)
        if abs_limit is not None and np.max(np.abs(x)) > abs_limit:
            raise IntegrationDiverged(k + 1, f"state exceeded {abs_limit:g} at step {k + 1}")
        xs[k + 1] = x
        us[k + 1] = u1

    ys = xs @ c.T + us @ d.T
    signals: dict[str, np.ndarray] = {}
    for j, name in enumerate(ss.output_names):
        signals[name] = ys[:, j]
    for j, name in enumerate(ss.state_names):
        if name not in signals:
            signals[name] = xs[:, j]
    return SimTrace(dt=dt, t=t, signals=signals)


def rk4_transition(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """One-step transition matrices of classical RK4 on dx/dt = a x + b u.

    For u held constant across the step, the RK4 update regroups exactly to
    x+ = M x + N u with M the 4th-order Taylor polynomial of expm(a dt) and
    N = dt (I + (a dt)/2 + (a dt)^2/6 + (a dt)^3/24) b.
    """
    n = a.shape[0]
    p1 = dt * a
    p2 = p1 @ p1
    p3 = p2 @ p1
    eye = np.eye(n)
    m = eye + p1 + p2 / 2.0 + p3 / 6.0 + (p3 @ p1) / 24.0
    nmat = dt * (eye + p1 / 2.0 + p2 / 6.0 + p3 / 24.0) @ b
    return m, nmat


def _powers_outer(lam: np.ndarray, count: int) -> np.ndarray:
    """lam[:, None] ** arange(count), computed blockwise to avoid complex pow."""
    block = 64
    r = np.arange(min(block, count))
    base = lam[:, None] ** r[None, :]
    if count <= block:
        return base[:, :count]
    nq = -(-count // block)
    big = lam ** block
    quot = big[:, None] ** np.arange(nq)[None, :]
    full = (quot[:, :, None] * base[:, None, :]).reshape(lam.size, nq * block)
    return full[:, :count]


def piecewise_response(ss: StateSpace, x0, switches, t_sim: float, dt: float,
                       output_rows=None, cond_limit: float = 1e8,
                       abs_limit: float | None = None):
    """RK4-equivalent response of `ss` to a piecewise-constant input.

    `switches` is a list of (time, input_vector) pairs; the input is zero
    before the first switch, and entries at time <= 0 set the initial input.
    Inputs are right-continuous. Grid intervals whose interior or right
    endpoint contains a switch are stepped with the explicit four-stage
    formula, so the result matches `integrate` with the equivalent input
    function up to floating-point regrouping.

    The constant-input stretches are propagated in the eigenbasis of the
    one-step transition matrix (vectorized over time); a real-arithmetic
    stepping loop is used instead when the eigenvector basis is
    ill-conditioned beyond `cond_limit`.

    Returns (t, y) where y has one column per selected output row.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_sim < dt:
        raise ValueError("t_sim must be at least one step")
    a, b = ss.a, ss.b
    n, m = ss.n_states, ss.n_inputs
    rows = np.arange(ss.n_outputs) if output_rows is None else np.asarray(output_rows)
    c_sel = ss.c[rows]
    d_sel = ss.d[rows]
    steps = int(round(t_sim / dt))
    t = np.arange(steps + 1) * dt

    u_init = np.zeros(m)
    timeline = []
    for ts, uv in switches:
        uv = np.asarray(uv, dtype=float).reshape(m)
        if ts <= 0:
            u_init = uv
        else:
            timeline.append((float(ts), uv))
    timeline.sort(key=lambda p: p[0])

    def u_at(time_val):
        u = u_init
        for ts, uv in timeline:
            if time_val >= ts:
                u = uv
        return u

    use_eig = False
    if n > 0:
        lam, vec = np.linalg.eig(a)
        z = lam * dt
        lam_m = 1.0 + z + z ** 2 / 2.0 + z ** 3 / 6.0 + z ** 4 / 24.0
        # a near-unit transition eigenvalue (integrator mode) would make the
        # affine fixed point ill-conditioned, so step those systems instead
        cond_ok = np.linalg.cond(vec) <= cond_limit
        use_eig = bool(cond_ok and np.min(np.abs(1.0 - lam_m)) > 1e-9)
    if use_eig:
        q = dt * (1.0 + z / 2.0 + z ** 2 / 6.0 + z ** 3 / 24.0)
        vec_inv = np.linalg.inv(vec)
        cv = c_sel @ vec
    else:
        m_step, n_step = rk4_transition(a, b, dt)

    ys = np.empty((steps + 1, len(rows)))
    x = np.asarray(x0, dtype=float).reshape(n).copy()

    def fill_segment(k0, k1, x_start, u):
        """Record samples k0..k1 under constant input u; return state at k1."""
        count = k1 - k0 + 1
        bias = d_sel @ u
        if use_eig:
            xh = vec_inv @ x_start
            nh = q * (vec_inv @ (b @ u))
            x_star = nh / (1.0 - lam_m)
            dev = xh - x_star
            pows = _powers_outer(lam_m, count)
            ys[k0:k1 + 1] = ((cv * dev[None, :]) @ pows).real.T \
                + (cv @ x_star).real[None, :] + bias[None, :]
            x_end = (vec @ (lam_m ** (count - 1) * dev + x_star)).real
        else:
            bu = n_step @ u
            xk = x_start
            for k in range(k0, k1 + 1):
                ys[k] = c_sel @ xk + bias
                if k < k1:
                    xk = m_step @ xk + bu
            x_end = xk
        if not np.all(np.isfinite(x_end)):
            raise IntegrationDiverged(k1)
        if abs_limit is not None and np.max(np.abs(x_end)) > abs_limit:
            raise IntegrationDiverged(k1, f"state exceeded {abs_limit:g} by step {k1}")
        return x_end

    def stage_step(x_k, t_k):
        u0, um, u1 = u_at(t_k), u_at(t_k + 0.5 * dt), u_at(t_k + dt)
        k1 = a @ x_k + b @ u0
        k2 = a @ (x_k + 0.5 * dt * k1) + b @ um
        k3 = a @ (x_k + 0.5 * dt * k2) + b @ um
        k4 = a @ (x_k + dt * k3) + b @ u1
        return x_k + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), u1

    k = 0
    u_cur = u_init
    for ts, uv in timeline:
        k_aff = int(np.ceil(ts / dt)) - 1  # interval whose stages straddle ts
        if k_aff >= steps:
            u_cur = uv
            continue
        if k_aff >= k:
            x = fill_segment(k, k_aff, x, u_cur)
            x, u_end = stage_step(x, k_aff * dt)
            if not np.all(np.isfinite(x)):
                raise IntegrationDiverged(k_aff + 1)
            k = k_aff + 1
            ys[k] = c_sel @ x + d_sel @ u_end
        u_cur = uv
    if k <= steps:
        fill_segment(k, steps, x, u_cur)
    return t, ys


def eigenvalues(a) -> np.ndarray:
    """All eigenvalues of a square matrix (unordered, complex)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue iteration failed to converge for matrix:\n{a}") from exc


def series(g1: StateSpace, g2: StateSpace, name: str = "") -> StateSpace:
    """Cascade g1 -> g2: the outputs of g1 drive the inputs of g2."""
    if g1.n_outputs != g2.n_inputs:
        raise InterconnectError(
            f"series mismatch: {g1.n_outputs} outputs into {g2.n_inputs} inputs")
    n1, n2 = g1.n_states, g2.n_states
    a = np.zeros((n1 + n2, n1 + n2))
    a[:n1, :n1] = g1.a
    a[n1:, n1:] = g2.a
    a[n1:, :n1] = g2.b @ g1.c
    b = np.vstack([g1.b, g2.b @ g1.d])
    c = np.hstack([g2.d @ g1.c, g2.c])
    d = g2.d @ g1.d
    return StateSpace(a, b, c, d,
                      state_names=g1.state_names + g2.state_names,
                      input_names=g1.input_names,
                      output_names=g2.output_names,
                      name=name)


def _feedthrough_cycle(blocks, wiring):
    """Find one cycle alternating wires and nonzero feedthrough paths, if any."""
    # Graph over input channels: edge i -> i2 when input i reaches output o
    # through some block's d matrix and o is wired into i2.
    succ: dict[str, list[tuple[str, str]]] = {}
    for blk in blocks:
        dmat = blk.d
        for jo, oname in enumerate(blk.output_names):
            for ji, iname in enumerate(blk.input_names):
                if dmat[jo, ji] != 0.0:
                    for i2, o2 in wiring.items():
                        if o2 == oname:
                            succ.setdefault(iname, []).append((oname, i2))
    color: dict[str, int] = {}
    stack: list[str] = []

    def visit(node):
        color[node] = 1
        stack.append(node)
        for oname, nxt in succ.get(node, ()):  # (through-output, next-input)
            if color.get(nxt, 0) == 1:
                i = stack.index(nxt)
                return stack[i:] + [oname, nxt]
            if color.get(nxt, 0) == 0:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[node] = 2
        return None

    for start in list(succ):
        if color.get(start, 0) == 0:
            found = visit(start)
            if found:
                return found
    return None


def feedback_interconnect(blocks: list[StateSpace], wiring: dict[str, str],
                          outputs: list[str] | None = None,
                          solve_feedthrough: bool = False,
                          name: str = "") -> StateSpace:
    """Wire named blocks into one system.

    `wiring` maps an input-channel name to the output-channel name that
    drives it. Unconnected inputs become external inputs; external outputs
    default to the outputs not consumed by any wire, or to `outputs` when
    given. The aggregate state vector concatenates the block states under
    "<block>.<state>" names.

    Direct-feedthrough cycles are rejected with the offending signal cycle
    unless `solve_feedthrough` is set, in which case the static loop is
    eliminated exactly via the well-posedness reduction (and an error is
    raised when the loop matrix is singular).
    """
    if not blocks:
        raise InterconnectError("need at least one block")
    block_names = []
    for i, blk in enumerate(blocks):
        bname = blk.name or f"b{i}"
        if bname in block_names:
            raise InterconnectError(f"duplicate block name {bname!r}")
        block_names.append(bname)

    in_pos: dict[str, int] = {}
    out_pos: dict[str, int] = {}
    state_names: list[str] = []
    off_in = off_out = 0
    for bname, blk in zip(block_names, blocks):
        for j, iname in enumerate(blk.input_names):
            if iname in in_pos:
                raise InterconnectError(f"duplicate input name {iname!r}")
            in_pos[iname] = off_in + j
        for j, oname in enumerate(blk.output_names):
            if oname in out_pos:
                raise InterconnectError(f"duplicate output name {oname!r}")
            out_pos[oname] = off_out + j
        state_names.extend(f"{bname}.{s}" for s in blk.state_names)
        off_in += blk.n_inputs
        off_out += blk.n_outputs

    for iname, oname in wiring.items():
        if iname not in in_pos:
            raise InterconnectError(f"wire destination {iname!r} is not a block input")
        if oname not in out_pos:
            raise InterconnectError(f"wire source {oname!r} is not a block output")

    cycle = _feedthrough_cycle(blocks, wiring)
    if cycle is not None and not solve_feedthrough:
        raise AlgebraicLoop(cycle)

    n = sum(b.n_states for b in blocks)
    m_all = sum(b.n_inputs for b in blocks)
    p_all = sum(b.n_outputs for b in blocks)
    A = np.zeros((n, n))
    B = np.zeros((n, m_all))
    C = np.zeros((p_all, n))
    D = np.zeros((p_all, m_all))
    ox = oi = oo = 0
    for blk in blocks:
        ni, mi, pi = blk.n_states, blk.n_inputs, blk.n_outputs
        A[ox:ox + ni, ox:ox + ni] = blk.a
        B[ox:ox + ni, oi:oi + mi] = blk.b
        C[oo:oo + pi, ox:ox + ni] = blk.c
        D[oo:oo + pi, oi:oi + mi] = blk.d
        ox += ni
        oi += mi
        oo += pi

    ext_inputs = [nm for blk in blocks for nm in blk.input_names if nm not in wiring]
    if outputs is None:
        used = set(wiring.values())
        ext_outputs = [nm for blk in blocks for nm in blk.output_names if nm not in used]
    else:
        for nm in outputs:
            if nm not in out_pos:
                raise InterconnectError(f"requested output {nm!r} is not a block output")
        ext_outputs = list(outputs)

    F = np.zeros((m_all, p_all))
    for iname, oname in wiring.items():
        F[in_pos[iname], out_pos[oname]] = 1.0
    E = np.zeros((m_all, len(ext_inputs)))
    for j, iname in enumerate(ext_inputs):
        E[in_pos[iname], j] = 1.0
    S = np.zeros((len(ext_outputs), p_all))
    for j, oname in enumerate(ext_outputs):
        S[j, out_pos[oname]] = 1.0

    loop = np.eye(p_all) - D @ F
    try:
        Cy = np.linalg.solve(loop, C)
        Dy = np.linalg.solve(loop, D @ E)
    except np.linalg.LinAlgError:
        raise InterconnectError("feedthrough loop matrix is singular (ill-posed loop)")
    if cycle is not None:
        # Solvable loops must also be well-conditioned to be trusted.
        if 1.0 / np.linalg.cond(loop) < 1e-12:
            raise InterconnectError("feedthrough loop matrix is singular (ill-posed loop)")

    A_cl = A + B @ F @ Cy
    B_cl = B @ E + B @ F @ Dy
    C_cl = S @ Cy
    D_cl = S @ Dy
    return StateSpace(A_cl, B_cl, C_cl, D_cl,
                      state_names=tuple(state_names),
                      input_names=tuple(ext_inputs),
                      output_names=tuple(ext_outputs),
                      name=name)


def settling_time(t: np.ndarray, y: np.ndarray, final_value: float,
                  band: float = 0.02) -> float:
    """Earliest time after which the channel stays within the band forever.

    The band is `band` times max(|final_value|, peak deviation from it), so
    pure-deviation channels (final 0) settle relative to their own swing.
    Returns the horizon end as a sentinel when the channel never settles.
    """
    if band <= 0:
        raise ValueError("band must be positive")
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("channel is empty")
    dev = np.abs(y - final_value)
    scale = max(abs(final_value), float(np.max(dev)))
    tol = band * scale
    outside = np.flatnonzero(dev > tol)
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last == len(y) - 1:
        return float(t[-1])
    return float(t[last + 1])


def peak_overshoot(t: np.ndarray, y: np.ndarray,
                   reference: float) -> tuple[float, float, bool]:
    """Largest excursion past the reference, as a fraction of the step size.

    The step is reference minus the channel's initial value. Returns
    (overshoot, peak_time, is_absolute); when the step magnitude is zero the
    overshoot is reported in absolute units and the flag is set.
    """
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("channel is empty")
    step = reference - y[0]
    if step == 0.0:
        dev = np.abs(y - reference)
        k = int(np.argmax(dev))
        return float(dev[k]), float(t[k]), True
    direction = 1.0 if step > 0 else -1.0
    over = direction * (y - reference)
    k = int(np.argmax(over))
    return float(max(over[k], 0.0) / abs(step)), float(t[k]), False


def response_metrics(trace: SimTrace, channel: str, final_value: float = 0.0,
                     band: float = 0.02, reference: float | None = None) -> ResponseMetrics:
    """Settling time, overshoot, and time-weighted deviation for one channel."""
    y = trace.channel(channel)
    ref = final_value if reference is None else reference
    ts = settling_time(trace.t, y, final_value, band)
    os, tp, is_abs = peak_overshoot(trace.t, y, ref)
    itae = float(np.trapezoid(trace.t * np.abs(y - final_value), trace.t))
    return ResponseMetrics(settling_time=ts, peak_overshoot=os, peak_time=tp,
                           itae_contribution=itae, overshoot_is_absolute=is_abs)
